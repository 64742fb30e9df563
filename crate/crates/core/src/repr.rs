//! Representations of W-operators: characteristic function, kernel, basis.
//!
//! The basis of a characteristic function `f` is the set of maximal intervals
//! `[A,B]` with `f ≡ 1` on every `X` between `A` and `B` (the prime implicants
//! of `f`, read as intervals). [`reconstruct`] inverts [`basis_of`] through the
//! sup-generating decomposition.

use std::fmt;

use crate::error::{Error, Result};
use crate::lattice::{max_antichain_masks, Interval, Subset, Window, ORIGIN};
use crate::morphology::{BinaryImage, Boundary, ImageOperator};
use crate::par;

/// A Boolean function on the subsets of a window, one entry per subset mask.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BooleanFunctionTable {
    window: Window,
    values: Vec<bool>,
}

impl BooleanFunctionTable {
    /// Tabulates `f` over every subset mask of `window`.
    pub fn from_fn(window: &Window, cap: usize, f: impl Fn(u32) -> bool) -> Result<Self> {
        window.check_cap(cap, "table window")?;
        let values = (0..1u64 << window.len()).map(|x| f(x as u32)).collect();
        Ok(BooleanFunctionTable {
            window: window.clone(),
            values,
        })
    }

    pub fn constant(window: &Window, cap: usize, value: bool) -> Result<Self> {
        Self::from_fn(window, cap, |_| value)
    }

    pub fn from_values(window: &Window, values: Vec<bool>) -> Result<Self> {
        let expected = 1usize.checked_shl(window.len() as u32).unwrap_or(0);
        if values.len() != expected {
            return Err(Error::input(format!(
                "table has {} entries, a {}-point window needs {expected}",
                values.len(),
                window.len()
            )));
        }
        Ok(BooleanFunctionTable {
            window: window.clone(),
            values,
        })
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn value(&self, mask: u32) -> bool {
        self.values[mask as usize]
    }

    pub fn eval(&self, x: &Subset) -> Result<bool> {
        if x.window() != &self.window {
            return Err(Error::input("subset and table windows differ"));
        }
        Ok(self.value(x.bits()))
    }

    pub fn with_flipped(&self, mask: usize) -> BooleanFunctionTable {
        let mut t = self.clone();
        t.values[mask] ^= true;
        t
    }

    /// Little-endian hex dump: entry `i` is bit `i % 8` of byte `i / 8`.
    pub fn hex(&self) -> String {
        let mut out = String::with_capacity(self.values.len() / 4 + 2);
        for chunk in self.values.chunks(8) {
            let byte = chunk
                .iter()
                .enumerate()
                .fold(0u8, |b, (i, &v)| b | (u8::from(v) << i));
            out.push_str(&format!("{byte:02x}"));
        }
        out
    }

    pub fn from_hex(window: &Window, cap: usize, hex: &str) -> Result<Self> {
        window.check_cap(cap, "table window")?;
        let n = 1usize << window.len();
        let hex = hex.trim();
        let bytes = n.div_ceil(8);
        if hex.len() != 2 * bytes {
            return Err(Error::parse(
                0,
                format!("expected {} hex digits, got {}", 2 * bytes, hex.len()),
            ));
        }
        let mut values = Vec::with_capacity(n);
        for k in 0..bytes {
            let byte = u8::from_str_radix(&hex[2 * k..2 * k + 2], 16)
                .map_err(|_| Error::parse(0, format!("bad hex byte {:?}", &hex[2 * k..2 * k + 2])))?;
            for i in 0..8 {
                if values.len() < n {
                    values.push(byte >> i & 1 == 1);
                } else if byte >> i & 1 == 1 {
                    return Err(Error::parse(0, "padding bits must be zero"));
                }
            }
        }
        Ok(BooleanFunctionTable {
            window: window.clone(),
            values,
        })
    }

    /// `window: <offsets>` header line, then the hex dump line.
    pub fn to_text(&self) -> String {
        format!("window: {}\n{}\n", self.window, self.hex())
    }

    pub fn parse(text: &str, cap: usize) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::parse(1, "empty table file"))?;
        let w = header
            .strip_prefix("window:")
            .ok_or_else(|| Error::parse(1, "expected 'window: {...}' header"))?;
        let window = Window::parse(w).map_err(|e| relabel(e, 1))?;
        let hex = lines.next().ok_or_else(|| Error::parse(2, "missing hex dump"))?;
        Self::from_hex(&window, cap, hex).map_err(|e| relabel(e, 2))
    }
}

impl fmt::Debug for BooleanFunctionTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BooleanFunctionTable({} {})", self.window, self.hex())
    }
}

pub(crate) fn relabel(e: Error, line: usize) -> Error {
    match e {
        Error::Parse { line: 0, msg } => Error::Parse { line, msg },
        Error::Input(msg) => Error::Parse { line, msg },
        other => other,
    }
}

/// Subsets of the window mapped to 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KernelSet {
    pub window: Window,
    pub members: Vec<Subset>,
}

/// Maximal intervals of a kernel, sorted by `(lower, upper)` mask.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Basis {
    window: Window,
    intervals: Vec<Interval>,
}

impl Basis {
    /// Builds a basis, rejecting interval lists that are not antichains.
    pub fn new(window: &Window, intervals: Vec<Interval>) -> Result<Self> {
        if intervals.iter().any(|i| i.window() != window) {
            return Err(Error::input("basis intervals must share the basis window"));
        }
        let masks: Vec<(u32, u32)> = intervals.iter().map(Interval::bits).collect();
        let canon = max_antichain_masks(masks.clone());
        let mut sorted = masks;
        sorted.sort_unstable();
        if canon != sorted {
            return Err(Error::input("basis intervals are not an antichain"));
        }
        Ok(Self::from_masks(window, canon))
    }

    fn from_masks(window: &Window, masks: Vec<(u32, u32)>) -> Self {
        let intervals = masks
            .into_iter()
            .map(|(a, b)| Interval::from_bits(window, a, b).expect("basis masks are valid intervals"))
            .collect();
        Basis {
            window: window.clone(),
            intervals,
        }
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// One interval per line.
    pub fn to_text(&self) -> String {
        self.intervals.iter().map(|i| format!("{i}\n")).collect()
    }

    pub fn parse(window: &Window, text: &str) -> Result<Self> {
        let mut intervals = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            intervals.push(Interval::parse(window, line).map_err(|e| relabel(e, n + 1))?);
        }
        Basis::new(window, intervals)
    }
}

impl fmt::Debug for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries(self.intervals.iter().map(|i| i.to_string()))
            .finish()
    }
}

/// Structural facts read off a basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PropertyReport {
    /// Every interval has upper endpoint `W`.
    pub is_increasing: bool,
    /// The interval `[{o}, W]` is present.
    pub contains_full_interval_from_origin: bool,
    /// `o` belongs to every lower endpoint.
    pub origin_in_all_lower_endpoints: bool,
}

impl fmt::Display for PropertyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "is_increasing: {}", self.is_increasing)?;
        writeln!(
            f,
            "contains_full_interval_from_origin: {}",
            self.contains_full_interval_from_origin
        )?;
        writeln!(
            f,
            "origin_in_all_lower_endpoints: {}",
            self.origin_in_all_lower_endpoints
        )
    }
}

/// Tabulates the W-operator `realizer` on `window` by probing each patch
/// configuration at the origin of a small toroidal image.
pub fn characteristic_of<O: ImageOperator + ?Sized>(
    realizer: &O,
    window: &Window,
    cap: usize,
) -> Result<BooleanFunctionTable> {
    window.check_cap(cap, "table window")?;
    let (rr, rc) = window.reach();
    // Period 2·reach+1 keeps every window offset on a distinct torus pixel.
    let (h, w) = (2 * rr + 1, 2 * rc + 1);
    let positions: Vec<(usize, usize)> = window
        .offsets()
        .iter()
        .map(|&(r, c)| {
            (
                i64::from(r).rem_euclid(h as i64) as usize,
                i64::from(c).rem_euclid(w as i64) as usize,
            )
        })
        .collect();
    let values = par::map_range(1usize << window.len(), |code| {
        let mut img = BinaryImage::new(h, w, Boundary::Toroidal).expect("positive dims");
        for (j, &(r, c)) in positions.iter().enumerate() {
            if code >> j & 1 == 1 {
                img.set(r, c, true);
            }
        }
        realizer.apply(&img).get(0, 0)
    });
    BooleanFunctionTable::from_values(window, values)
}

pub fn kernel_of(f: &BooleanFunctionTable) -> KernelSet {
    let members = f
        .values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v)
        .map(|(x, _)| Subset::new(&f.window, x as u32).expect("mask within window"))
        .collect();
    KernelSet {
        window: f.window.clone(),
        members,
    }
}

/// Maximal intervals inside the kernel of `f`.
///
/// Minterms are merged level by level, Quine–McCluskey style: two intervals
/// with the same free set whose lower ends differ in one bound bit merge into
/// an interval with that bit freed. Intervals that never merge are prime.
pub fn basis_of(f: &BooleanFunctionTable, cap: usize) -> Result<Basis> {
    f.window.check_cap(cap, "basis window")?;
    let n = f.window.len();
    // Entries are (free mask, lower mask); upper = lower | free.
    let mut level: Vec<(u32, u32)> = f
        .values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v)
        .map(|(x, _)| (0u32, x as u32))
        .collect();
    let mut primes = Vec::new();
    while !level.is_empty() {
        let merges = par::map(&level, |&(free, lower)| {
            let mut merged = false;
            let mut up = Vec::new();
            for j in 0..n {
                let bit = 1u32 << j;
                if free & bit != 0 {
                    continue;
                }
                if level.binary_search(&(free, lower ^ bit)).is_ok() {
                    merged = true;
                    if lower & bit == 0 {
                        up.push((free | bit, lower));
                    }
                }
            }
            (merged, up)
        });
        let mut next = Vec::new();
        for (&(free, lower), (merged, up)) in level.iter().zip(merges) {
            if !merged {
                primes.push((lower, lower | free));
            }
            next.extend(up);
        }
        next.sort_unstable();
        next.dedup();
        level = next;
    }
    Ok(Basis::from_masks(&f.window, max_antichain_masks(primes)))
}

/// Sup-generating reconstruction: `f(X) = 1` iff some basis interval holds `X`.
pub fn reconstruct(b: &Basis, cap: usize) -> Result<BooleanFunctionTable> {
    BooleanFunctionTable::from_fn(&b.window, cap, |x| b.intervals.iter().any(|i| i.contains_mask(x)))
}

pub fn property_report(b: &Basis) -> PropertyReport {
    let full = b.window.full_mask();
    let origin = b.window.index_of(ORIGIN).map(|j| 1u32 << j);
    let is_increasing = b.intervals.iter().all(|i| i.upper().bits() == full);
    let contains_full_interval_from_origin =
        origin.is_some_and(|o| b.intervals.iter().any(|i| i.bits() == (o, full)));
    let origin_in_all_lower_endpoints = b
        .intervals
        .iter()
        .all(|i| origin.is_some_and(|o| i.lower().bits() & o != 0));
    PropertyReport {
        is_increasing,
        contains_full_interval_from_origin,
        origin_in_all_lower_endpoints,
    }
}
