//! Lattice overparametrizations of constrained W-operator classes.
//!
//! Three families are supported:
//!
//! * `ErosionSup`: `k` structuring elements, realized as `⋃ erode(·, A_i)`;
//! * `IntervalSup`: `k` intervals, realized as `⋃ interval_operator(·, [A_i, B_i])`;
//! * `SeqTables`: `d` characteristic functions applied in sequence.
//!
//! The parameter space of each family is a product of Boolean lattices, and a
//! parameter's neighbors are the points one payload bit away. For
//! `IntervalSup`, flips that would break `A_i ⊆ B_i` are not neighbors.

use std::fmt;
use std::sync::Arc;

use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::lattice::{Caps, Interval, Subset, Window};
use crate::morphology::{patch_codes, BinaryImage, ImageOperator};
use crate::repr::{basis_of, characteristic_of, relabel, Basis, BooleanFunctionTable};

/// The operator family a parameter belongs to.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ClassSpec {
    ErosionSup { window: Window, k: usize },
    IntervalSup { window: Window, k: usize },
    SeqTables { windows: Vec<Window> },
}

impl ClassSpec {
    pub fn erosion_sup(window: Window, k: usize) -> Result<Self> {
        let s = ClassSpec::ErosionSup { window, k };
        s.validate(Caps::default())?;
        Ok(s)
    }

    pub fn interval_sup(window: Window, k: usize) -> Result<Self> {
        let s = ClassSpec::IntervalSup { window, k };
        s.validate(Caps::default())?;
        Ok(s)
    }

    pub fn seq_tables(windows: Vec<Window>) -> Result<Self> {
        let s = ClassSpec::SeqTables { windows };
        s.validate(Caps::default())?;
        Ok(s)
    }

    pub fn validate(&self, caps: Caps) -> Result<()> {
        match self {
            ClassSpec::ErosionSup { window, k } | ClassSpec::IntervalSup { window, k } => {
                if *k == 0 {
                    return Err(Error::input("class needs k >= 1"));
                }
                window.check_cap(caps.table, "class window")
            }
            ClassSpec::SeqTables { windows } => {
                if windows.is_empty() {
                    return Err(Error::input("seq-tables needs at least one layer"));
                }
                windows
                    .iter()
                    .try_for_each(|w| w.check_cap(caps.table, "layer window"))
            }
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ClassSpec::ErosionSup { .. } => "erosion-sup",
            ClassSpec::IntervalSup { .. } => "interval-sup",
            ClassSpec::SeqTables { .. } => "seq-tables",
        }
    }

    /// Window on which patch codes feed the first evaluation stage.
    pub(crate) fn input_window(&self) -> &Window {
        match self {
            ClassSpec::ErosionSup { window, .. } | ClassSpec::IntervalSup { window, .. } => window,
            ClassSpec::SeqTables { windows } => &windows[0],
        }
    }
}

/// The coordinates of a parameter point.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Payload {
    /// Structuring element masks.
    Erosions(Vec<u32>),
    /// `(lower, upper)` masks.
    Intervals(Vec<(u32, u32)>),
    Tables(Vec<BooleanFunctionTable>),
}

/// An element θ of a parameter lattice.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ParamPoint {
    spec: Arc<ClassSpec>,
    payload: Payload,
}

impl ParamPoint {
    pub fn new(spec: ClassSpec, payload: Payload) -> Result<Self> {
        Self::with_spec(Arc::new(spec), payload)
    }

    fn with_spec(spec: Arc<ClassSpec>, payload: Payload) -> Result<Self> {
        match (&*spec, &payload) {
            (ClassSpec::ErosionSup { window, k }, Payload::Erosions(es)) => {
                if es.len() != *k {
                    return Err(Error::input(format!(
                        "expected {k} structuring elements, got {}",
                        es.len()
                    )));
                }
                if es.iter().any(|e| e & !window.full_mask() != 0) {
                    return Err(Error::input("structuring element outside the class window"));
                }
            }
            (ClassSpec::IntervalSup { window, k }, Payload::Intervals(is)) => {
                if is.len() != *k {
                    return Err(Error::input(format!("expected {k} intervals, got {}", is.len())));
                }
                let full = window.full_mask();
                if is.iter().any(|&(a, b)| a & !b != 0 || b & !full != 0) {
                    return Err(Error::input("interval payload violates lower ⊆ upper ⊆ W"));
                }
            }
            (ClassSpec::SeqTables { windows }, Payload::Tables(ts)) => {
                if ts.len() != windows.len() || ts.iter().zip(windows).any(|(t, w)| t.window() != w) {
                    return Err(Error::input("tables do not match the layer windows"));
                }
            }
            _ => return Err(Error::input("payload kind does not match class")),
        }
        Ok(ParamPoint { spec, payload })
    }

    pub fn erosion_sup(window: &Window, elements: &[Subset]) -> Result<Self> {
        if elements.iter().any(|e| e.window() != window) {
            return Err(Error::input("structuring elements must live on the class window"));
        }
        Self::new(
            ClassSpec::ErosionSup {
                window: window.clone(),
                k: elements.len(),
            },
            Payload::Erosions(elements.iter().map(Subset::bits).collect()),
        )
    }

    pub fn interval_sup(window: &Window, intervals: &[Interval]) -> Result<Self> {
        if intervals.iter().any(|i| i.window() != window) {
            return Err(Error::input("intervals must live on the class window"));
        }
        Self::new(
            ClassSpec::IntervalSup {
                window: window.clone(),
                k: intervals.len(),
            },
            Payload::Intervals(intervals.iter().map(Interval::bits).collect()),
        )
    }

    pub fn seq_tables(tables: Vec<BooleanFunctionTable>) -> Result<Self> {
        let windows = tables.iter().map(|t| t.window().clone()).collect();
        Self::new(ClassSpec::SeqTables { windows }, Payload::Tables(tables))
    }

    pub fn spec(&self) -> &ClassSpec {
        &self.spec
    }

    pub fn payload(&self) -> &Payload {
        &self.payload
    }

    /// Structuring elements of an `ErosionSup` point.
    pub fn elements(&self) -> Option<Vec<Subset>> {
        match (&*self.spec, &self.payload) {
            (ClassSpec::ErosionSup { window, .. }, Payload::Erosions(es)) => Some(
                es.iter()
                    .map(|&e| Subset::new(window, e).expect("valid mask"))
                    .collect(),
            ),
            _ => None,
        }
    }

    pub fn intervals(&self) -> Option<Vec<Interval>> {
        match (&*self.spec, &self.payload) {
            (ClassSpec::IntervalSup { window, .. }, Payload::Intervals(is)) => Some(
                is.iter()
                    .map(|&(a, b)| Interval::from_bits(window, a, b).expect("valid interval"))
                    .collect(),
            ),
            _ => None,
        }
    }

    pub fn tables(&self) -> Option<&[BooleanFunctionTable]> {
        match &self.payload {
            Payload::Tables(ts) => Some(ts),
            _ => None,
        }
    }

    /// Total number of payload bits (valid or not as single flips).
    fn flip_positions(&self) -> usize {
        match (&*self.spec, &self.payload) {
            (ClassSpec::ErosionSup { window, k }, _) => k * window.len(),
            (ClassSpec::IntervalSup { window, k }, _) => 2 * k * window.len(),
            (_, Payload::Tables(ts)) => ts.iter().map(BooleanFunctionTable::len).sum(),
            _ => unreachable!("validated payload"),
        }
    }

    fn flip_is_valid(&self, pos: usize) -> bool {
        match (&*self.spec, &self.payload) {
            (ClassSpec::IntervalSup { window, .. }, Payload::Intervals(is)) => {
                let n = window.len();
                let (i, rest) = (pos / (2 * n), pos % (2 * n));
                let (a, b) = is[i];
                if rest < n {
                    // Adding j to the lower end needs j in the upper end.
                    let bit = 1 << rest;
                    a & bit != 0 || b & bit != 0
                } else {
                    let bit = 1 << (rest - n);
                    b & bit == 0 || a & bit == 0
                }
            }
            _ => true,
        }
    }

    fn flip(&self, pos: usize) -> ParamPoint {
        let payload = match (&*self.spec, &self.payload) {
            (ClassSpec::ErosionSup { window, .. }, Payload::Erosions(es)) => {
                let n = window.len();
                let mut es = es.clone();
                es[pos / n] ^= 1 << (pos % n);
                Payload::Erosions(es)
            }
            (ClassSpec::IntervalSup { window, .. }, Payload::Intervals(is)) => {
                let n = window.len();
                let (i, rest) = (pos / (2 * n), pos % (2 * n));
                let mut is = is.clone();
                if rest < n {
                    is[i].0 ^= 1 << rest;
                } else {
                    is[i].1 ^= 1 << (rest - n);
                }
                Payload::Intervals(is)
            }
            (_, Payload::Tables(ts)) => {
                let mut ts = ts.clone();
                let mut p = pos;
                for t in ts.iter_mut() {
                    if p < t.len() {
                        *t = t.with_flipped(p);
                        break;
                    }
                    p -= t.len();
                }
                Payload::Tables(ts)
            }
            _ => unreachable!("validated payload"),
        };
        ParamPoint {
            spec: Arc::clone(&self.spec),
            payload,
        }
    }

    /// Flip positions that are neighbors, in canonical order.
    fn valid_flips(&self) -> Vec<usize> {
        (0..self.flip_positions())
            .filter(|&p| self.flip_is_valid(p))
            .collect()
    }

    /// `|N(θ)|`, the number of unit-distance neighbors.
    pub fn neighborhood_size(&self) -> usize {
        match &*self.spec {
            ClassSpec::IntervalSup { .. } => self.valid_flips().len(),
            _ => self.flip_positions(),
        }
    }

    /// Every neighbor, ordered by flipped payload bit.
    pub fn neighbors(&self) -> Vec<ParamPoint> {
        self.valid_flips().into_iter().map(|p| self.flip(p)).collect()
    }

    /// `n` distinct neighbors drawn uniformly without replacement, returned in
    /// canonical order. Asking for at least `|N(θ)|` returns all of them.
    pub fn sample_neighbors<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<ParamPoint> {
        let flips: Option<Vec<usize>> = match &*self.spec {
            ClassSpec::IntervalSup { .. } => Some(self.valid_flips()),
            _ => None,
        };
        let size = flips.as_ref().map_or_else(|| self.flip_positions(), Vec::len);
        let mut picks: Vec<usize> = if n >= size {
            (0..size).collect()
        } else {
            index::sample(rng, size, n).into_vec()
        };
        picks.sort_unstable();
        picks
            .into_iter()
            .map(|i| self.flip(flips.as_ref().map_or(i, |f| f[i])))
            .collect()
    }

    /// Number of payload bits where `self` and `other` differ, or `None` when
    /// the points belong to different classes.
    pub fn payload_distance(&self, other: &ParamPoint) -> Option<usize> {
        if self.spec != other.spec {
            return None;
        }
        let d = match (&self.payload, &other.payload) {
            (Payload::Erosions(a), Payload::Erosions(b)) => {
                a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones() as usize).sum()
            }
            (Payload::Intervals(a), Payload::Intervals(b)) => a
                .iter()
                .zip(b)
                .map(|(x, y)| ((x.0 ^ y.0).count_ones() + (x.1 ^ y.1).count_ones()) as usize)
                .sum(),
            (Payload::Tables(a), Payload::Tables(b)) => a
                .iter()
                .zip(b)
                .map(|(x, y)| x.values().iter().zip(y.values()).filter(|(p, q)| p != q).count())
                .sum(),
            _ => return None,
        };
        Some(d)
    }

    /// Output pixels given the patch codes of `input` on the class input window.
    pub(crate) fn predict_from_codes(&self, input: &BinaryImage, codes: &[u32]) -> Vec<bool> {
        match &self.payload {
            Payload::Erosions(es) => codes.iter().map(|&c| es.iter().any(|&e| e & !c == 0)).collect(),
            Payload::Intervals(is) => codes
                .iter()
                .map(|&c| is.iter().any(|&(a, b)| c & a == a && c & !b == 0))
                .collect(),
            Payload::Tables(ts) => {
                let first: Vec<bool> = codes.iter().map(|&c| ts[0].value(c)).collect();
                if ts.len() == 1 {
                    return first;
                }
                let mut img =
                    BinaryImage::from_pixels(input.height(), input.width(), first, input.boundary())
                        .expect("same grid");
                for t in &ts[1..] {
                    img = crate::morphology::apply_table_unchecked(&img, t);
                }
                img.pixels().to_vec()
            }
        }
    }

    /// Canonical structured-text serialization.
    pub fn to_text(&self) -> String {
        let mut out = format!("class: {}\n", self.spec.kind());
        match (&*self.spec, &self.payload) {
            (ClassSpec::ErosionSup { window, k }, Payload::Erosions(es)) => {
                out += &format!("window: {window}\nk: {k}\n");
                for &e in es {
                    out += &format!("element: {}\n", Subset::new(window, e).expect("valid"));
                }
            }
            (ClassSpec::IntervalSup { window, k }, Payload::Intervals(is)) => {
                out += &format!("window: {window}\nk: {k}\n");
                for &(a, b) in is {
                    out += &format!(
                        "interval: {}\n",
                        Interval::from_bits(window, a, b).expect("valid")
                    );
                }
            }
            (ClassSpec::SeqTables { windows }, Payload::Tables(ts)) => {
                out += &format!("layers: {}\n", windows.len());
                for t in ts {
                    out += &t.to_text();
                }
            }
            _ => unreachable!("validated payload"),
        }
        out
    }

    /// Parses [`ParamPoint::to_text`] output.
    pub fn parse(text: &str, caps: Caps) -> Result<Self> {
        let lines: Vec<(usize, &str)> = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
            .collect();
        let mut it = lines.into_iter();
        let field = |it: &mut std::vec::IntoIter<(usize, &str)>, key: &str| -> Result<(usize, String)> {
            let (n, line) = it
                .next()
                .ok_or_else(|| Error::parse(0, format!("unexpected end of input, expected '{key}:'")))?;
            let value = line
                .strip_prefix(key)
                .and_then(|r| r.strip_prefix(':'))
                .ok_or_else(|| Error::parse(n, format!("expected '{key}:'")))?;
            Ok((n, value.trim().to_string()))
        };
        let (n, class) = field(&mut it, "class")?;
        let number = |n: usize, v: &str| -> Result<usize> {
            v.parse()
                .map_err(|_| Error::parse(n, format!("expected a count, got {v:?}")))
        };
        let point = match class.as_str() {
            "erosion-sup" | "interval-sup" => {
                let (wn, w) = field(&mut it, "window")?;
                let window = Window::parse(&w).map_err(|e| relabel(e, wn))?;
                let (kn, k) = field(&mut it, "k")?;
                let k = number(kn, &k)?;
                if class == "erosion-sup" {
                    let mut es = Vec::with_capacity(k);
                    for _ in 0..k {
                        let (en, e) = field(&mut it, "element")?;
                        es.push(Subset::parse(&window, &e).map_err(|e| relabel(e, en))?);
                    }
                    ParamPoint::erosion_sup(&window, &es)
                } else {
                    let mut is = Vec::with_capacity(k);
                    for _ in 0..k {
                        let (iln, i) = field(&mut it, "interval")?;
                        is.push(Interval::parse(&window, &i).map_err(|e| relabel(e, iln))?);
                    }
                    ParamPoint::interval_sup(&window, &is)
                }
            }
            "seq-tables" => {
                let (dn, d) = field(&mut it, "layers")?;
                let d = number(dn, &d)?;
                let mut tables = Vec::with_capacity(d);
                for _ in 0..d {
                    let (wn, w) = field(&mut it, "window")?;
                    let window = Window::parse(&w).map_err(|e| relabel(e, wn))?;
                    let (hn, hex) = it
                        .next()
                        .ok_or_else(|| Error::parse(wn + 1, "missing table hex dump"))?;
                    tables.push(
                        BooleanFunctionTable::from_hex(&window, caps.table, hex)
                            .map_err(|e| relabel(e, hn))?,
                    );
                }
                ParamPoint::seq_tables(tables)
            }
            other => return Err(Error::parse(n, format!("unknown class {other:?}"))),
        }
        .map_err(|e| relabel(e, n))?;
        if let Some((n, _)) = it.next() {
            return Err(Error::parse(n, "trailing content"));
        }
        point.spec.validate(caps)?;
        Ok(point)
    }
}

impl fmt::Debug for ParamPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// The operator a parameter point represents.
#[derive(Debug, Clone)]
pub struct Realized(ParamPoint);

impl ImageOperator for Realized {
    fn apply(&self, x: &BinaryImage) -> BinaryImage {
        let codes = patch_codes(x, self.0.spec.input_window());
        let pixels = self.0.predict_from_codes(x, &codes);
        BinaryImage::from_pixels(x.height(), x.width(), pixels, x.boundary()).expect("same grid")
    }
}

/// The operator `R̃(θ)`.
pub fn realize(theta: &ParamPoint) -> Realized {
    Realized(theta.clone())
}

/// Uniformly random payload for `spec`.
pub fn random_init<R: Rng + ?Sized>(spec: &ClassSpec, rng: &mut R) -> ParamPoint {
    let payload = match spec {
        ClassSpec::ErosionSup { window, k } => {
            let full = window.full_mask();
            Payload::Erosions((0..*k).map(|_| rng.random::<u32>() & full).collect())
        }
        ClassSpec::IntervalSup { window, k } => {
            let full = window.full_mask();
            Payload::Intervals(
                (0..*k)
                    .map(|_| {
                        let upper = rng.random::<u32>() & full;
                        (rng.random::<u32>() & upper, upper)
                    })
                    .collect(),
            )
        }
        ClassSpec::SeqTables { windows } => Payload::Tables(
            windows
                .iter()
                .map(|w| {
                    let values = (0..1usize << w.len()).map(|_| rng.random::<bool>()).collect();
                    BooleanFunctionTable::from_values(w, values).expect("sized to window")
                })
                .collect(),
        ),
    };
    ParamPoint::new(spec.clone(), payload).expect("random payload respects class invariants")
}

/// Window in which the realized operator is locally defined: the class
/// window, or the Minkowski sum of the layer windows.
pub fn effective_window(theta: &ParamPoint, cap: usize) -> Result<Window> {
    let w = match &*theta.spec {
        ClassSpec::ErosionSup { window, .. } | ClassSpec::IntervalSup { window, .. } => window.clone(),
        ClassSpec::SeqTables { windows } => {
            let mut acc = windows[0].clone();
            for w in &windows[1..] {
                acc = acc.minkowski_sum(w)?;
                acc.check_cap(cap, "effective window")?;
            }
            acc
        }
    };
    w.check_cap(cap, "effective window")?;
    Ok(w)
}

/// `R̃_B(θ)`: the basis of the operator θ represents.
pub fn basis_of_param(theta: &ParamPoint, caps: Caps) -> Result<Basis> {
    let w = effective_window(theta, caps.table)?;
    w.check_cap(caps.basis, "effective window")?;
    let f = characteristic_of(&realize(theta), &w, caps.table)?;
    basis_of(&f, caps.basis)
}
