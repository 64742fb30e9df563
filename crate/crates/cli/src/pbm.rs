//! Plain PBM (`P1`) reading and writing.
//!
//! Pixels are `1` for foreground. Bits may be packed or separated by
//! whitespace; `#` starts a comment that runs to the end of the line. The
//! boundary policy is not part of the format and is supplied by the caller.

use std::fmt::Write as _;
use std::path::Path;

use latop::{BinaryImage, Boundary, Error};

use crate::error::{read_text, write_text, CliError, CliResult};

/// Lines of pixel data are wrapped below this many characters.
const LINE_LIMIT: usize = 70;

fn tokens(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().flat_map(|(i, line)| {
        let data = line.split('#').next().unwrap_or("");
        data.split_whitespace().map(move |t| (i + 1, t))
    })
}

fn dimension(tok: Option<(usize, &str)>, what: &str, last_line: usize) -> latop::Result<usize> {
    let (line, t) = tok.ok_or_else(|| Error::Parse {
        line: last_line,
        msg: format!("missing {what}"),
    })?;
    match t.parse::<usize>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(Error::Parse {
            line,
            msg: format!("bad {what} {t:?}"),
        }),
    }
}

pub fn parse(text: &str, boundary: Boundary) -> latop::Result<BinaryImage> {
    let last_line = text.lines().count().max(1);
    let mut toks = tokens(text);
    match toks.next() {
        Some((_, "P1")) => {}
        Some((line, "P4")) => {
            return Err(Error::Parse {
                line,
                msg: "raw PBM (P4) is not supported".into(),
            });
        }
        Some((line, t)) => {
            return Err(Error::Parse {
                line,
                msg: format!("bad magic {t:?}, expected P1"),
            })
        }
        None => {
            return Err(Error::Parse {
                line: 1,
                msg: "empty file".into(),
            })
        }
    }
    let width = dimension(toks.next(), "width", last_line)?;
    let height = dimension(toks.next(), "height", last_line)?;
    let total = width.checked_mul(height).ok_or_else(|| Error::Parse {
        line: 1,
        msg: "image too large".into(),
    })?;
    let mut pixels = Vec::with_capacity(total);
    for (line, t) in toks {
        for ch in t.chars() {
            let bit = match ch {
                '0' => false,
                '1' => true,
                _ => {
                    return Err(Error::Parse {
                        line,
                        msg: format!("bad pixel token {t:?}"),
                    })
                }
            };
            if pixels.len() == total {
                return Err(Error::Parse {
                    line,
                    msg: format!("more than {total} pixels"),
                });
            }
            pixels.push(bit);
        }
    }
    if pixels.len() < total {
        return Err(Error::Parse {
            line: last_line,
            msg: format!("expected {total} pixels, found {}", pixels.len()),
        });
    }
    BinaryImage::from_pixels(height, width, pixels, boundary)
}

pub fn to_text(x: &BinaryImage) -> String {
    let mut out = format!("P1\n{} {}\n", x.width(), x.height());
    for row in x.pixels().chunks(x.width()) {
        let mut len = 0;
        for (i, &p) in row.iter().enumerate() {
            if i > 0 {
                if len + 2 > LINE_LIMIT {
                    out.push('\n');
                    len = 0;
                } else {
                    out.push(' ');
                    len += 1;
                }
            }
            let _ = write!(out, "{}", u8::from(p));
            len += 1;
        }
        out.push('\n');
    }
    out
}

pub fn read_pbm(path: &Path, boundary: Boundary) -> CliResult<BinaryImage> {
    parse(&read_text(path)?, boundary).map_err(|e| CliError::in_file(path, e))
}

pub fn write_pbm(x: &BinaryImage, path: &Path) -> CliResult<()> {
    write_text(path, &to_text(x))
}
