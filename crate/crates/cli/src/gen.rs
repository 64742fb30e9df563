//! Synthetic pairs from a planted operator.

use std::fmt::Write as _;
use std::path::Path;

use latop::{realize, BinaryImage, Boundary, Caps, Error, ImageOperator, ParamPoint, SamplePair};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{read_text, write_text, CliError, CliResult};
use crate::manifest::Manifest;
use crate::pbm::write_pbm;

#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub count: usize,
    pub height: usize,
    pub width: usize,
    pub density: f64,
    pub noise_rate: f64,
    pub seed: u64,
}

impl GenSpec {
    pub fn validate(&self) -> latop::Result<()> {
        if self.count == 0 || self.height == 0 || self.width == 0 {
            return Err(Error::Input("count and dimensions must be positive".into()));
        }
        for (name, p) in [("density", self.density), ("noise_rate", self.noise_rate)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Input(format!("{name} {p} must be in [0,1]")));
            }
        }
        Ok(())
    }
}

/// Pairs with Bernoulli inputs on the torus and targets from `target`,
/// each target pixel flipped independently with probability `noise_rate`.
/// One generator drives every draw, pair by pair.
pub fn generate(target: &ParamPoint, spec: &GenSpec) -> latop::Result<Vec<SamplePair>> {
    spec.validate()?;
    let op = realize(target);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut pairs = Vec::with_capacity(spec.count);
    for _ in 0..spec.count {
        let x = BinaryImage::random(
            spec.height,
            spec.width,
            spec.density,
            Boundary::Toroidal,
            &mut rng,
        )?;
        let mut y = op.apply(&x);
        if spec.noise_rate > 0.0 {
            for r in 0..y.height() {
                for c in 0..y.width() {
                    if rng.random_bool(spec.noise_rate) {
                        y.set(r, c, !y.get(r, c));
                    }
                }
            }
        }
        pairs.push(SamplePair::new(x, y)?);
    }
    Ok(pairs)
}

/// A planted operator file: a parameter point, or a bare table
/// (`window: ...` then hex) taken as a one-layer sequence.
pub fn read_target(path: &Path, caps: Caps) -> CliResult<ParamPoint> {
    let text = read_text(path)?;
    let parsed = if text.trim_start().starts_with("class:") {
        ParamPoint::parse(&text, caps)
    } else {
        latop::BooleanFunctionTable::parse(&text, caps.table).and_then(|t| ParamPoint::seq_tables(vec![t]))
    };
    parsed.map_err(|e| CliError::in_file(path, e))
}

/// Writes `pairs/NNNN_in.pbm`, `pairs/NNNN_out.pbm`, `manifest.tsv` and
/// `provenance.txt` under `out`.
pub fn write_dataset(target: &ParamPoint, spec: &GenSpec, out: &Path) -> CliResult<()> {
    let pairs = generate(target, spec)?;
    let dir = out.join("pairs");
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let mut names = Vec::with_capacity(pairs.len());
    for (i, p) in pairs.iter().enumerate() {
        let (a, b) = (format!("pairs/{i:04}_in.pbm"), format!("pairs/{i:04}_out.pbm"));
        write_pbm(p.input(), &out.join(&a))?;
        write_pbm(p.target(), &out.join(&b))?;
        names.push((a, b));
    }
    write_text(&out.join("manifest.tsv"), &Manifest::to_text(&names))?;

    let mut prov = String::new();
    let _ = writeln!(prov, "command: gen");
    let _ = writeln!(prov, "tool: latop {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(prov, "seed: {}", spec.seed);
    let _ = writeln!(prov, "count: {}", spec.count);
    let _ = writeln!(prov, "height: {}", spec.height);
    let _ = writeln!(prov, "width: {}", spec.width);
    let _ = writeln!(prov, "density: {}", spec.density);
    let _ = writeln!(prov, "noise_rate: {}", spec.noise_rate);
    let _ = writeln!(prov, "boundary: toroidal");
    let _ = writeln!(prov, "target:");
    prov.push_str(&target.to_text());
    write_text(&out.join("provenance.txt"), &prov)
}
