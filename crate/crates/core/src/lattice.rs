//! Finite Boolean lattices over pixel windows.
//!
//! A [`Window`] is a canonical (row-major sorted) list of distinct pixel
//! offsets. Subsets of a window are bit masks where bit `j` marks membership of
//! `offsets[j]`; this encoding is also the index into every function table in
//! the crate.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A 2-D pixel offset `(row, col)`.
pub type Offset = (i32, i32);

/// The origin offset `o`.
pub const ORIGIN: Offset = (0, 0);

/// Largest window the bit-mask encoding can hold.
pub const MAX_WINDOW_BITS: usize = 31;

/// Size caps for exhaustive tabulation and basis extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Caps {
    /// Largest window that may be tabulated (`2^table` entries).
    pub table: usize,
    /// Largest window whose basis may be extracted.
    pub basis: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { table: 20, basis: 16 }
    }
}

/// A finite set of pixel offsets in canonical order.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Window(Arc<[Offset]>);

impl Window {
    /// Builds a window, sorting the offsets. Duplicates are rejected.
    pub fn new(offsets: impl IntoIterator<Item = Offset>) -> Result<Self> {
        let mut v: Vec<Offset> = offsets.into_iter().collect();
        v.sort_unstable();
        if let Some(w) = v.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::input(format!("duplicate offset {:?} in window", w[0])));
        }
        if v.len() > MAX_WINDOW_BITS {
            return Err(Error::Size {
                what: "window".into(),
                size: v.len(),
                cap: MAX_WINDOW_BITS,
            });
        }
        Ok(Window(v.into()))
    }

    /// The single-point window `{o}`.
    pub fn origin() -> Self {
        Window(Arc::from(vec![ORIGIN]))
    }

    /// A `rows × cols` rectangle centered on the origin (even sizes extend one
    /// more step in the positive direction).
    pub fn centered_rect(rows: usize, cols: usize) -> Result<Self> {
        let r0 = -((rows as i32 - 1) / 2);
        let c0 = -((cols as i32 - 1) / 2);
        let mut offs = Vec::with_capacity(rows * cols);
        for r in 0..rows as i32 {
            for c in 0..cols as i32 {
                offs.push((r0 + r, c0 + c));
            }
        }
        Window::new(offs)
    }

    pub fn offsets(&self) -> &[Offset] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn index_of(&self, offset: Offset) -> Option<usize> {
        self.0.binary_search(&offset).ok()
    }

    pub fn contains(&self, offset: Offset) -> bool {
        self.index_of(offset).is_some()
    }

    /// Mask with every bit of the window set.
    pub fn full_mask(&self) -> u32 {
        mask_of_len(self.len())
    }

    /// Fails with a size error when the window exceeds `cap`.
    pub fn check_cap(&self, cap: usize, what: &str) -> Result<()> {
        if self.len() > cap {
            Err(Error::Size {
                what: format!("{what} {self}"),
                size: self.len(),
                cap,
            })
        } else {
            Ok(())
        }
    }

    /// All pairwise sums `u + v`, `u ∈ self`, `v ∈ other`.
    pub fn minkowski_sum(&self, other: &Window) -> Result<Window> {
        let mut sums: Vec<Offset> = self
            .0
            .iter()
            .flat_map(|u| other.0.iter().map(move |v| (u.0 + v.0, u.1 + v.1)))
            .collect();
        sums.sort_unstable();
        sums.dedup();
        Window::new(sums)
    }

    /// Whether every offset of `self` lies in `other`.
    pub fn is_subwindow_of(&self, other: &Window) -> bool {
        self.0.iter().all(|o| other.contains(*o))
    }

    /// Largest absolute row and column offsets.
    pub fn reach(&self) -> (usize, usize) {
        self.0.iter().fold((0, 0), |(r, c), o| {
            (
                r.max(o.0.unsigned_abs() as usize),
                c.max(o.1.unsigned_abs() as usize),
            )
        })
    }

    /// Parses the `{(r,c),...}` rendering.
    pub fn parse(s: &str) -> Result<Window> {
        Window::new(parse_offset_list(s)?)
    }

    fn same(&self, other: &Window) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_offsets(f, self.0.iter().copied())
    }
}

impl fmt::Debug for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Window{self}")
    }
}

pub(crate) fn mask_of_len(len: usize) -> u32 {
    if len >= 32 {
        u32::MAX
    } else {
        (1u32 << len) - 1
    }
}

fn write_offsets(f: &mut fmt::Formatter<'_>, offs: impl Iterator<Item = Offset>) -> fmt::Result {
    f.write_str("{")?;
    for (i, (r, c)) in offs.enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "({r},{c})")?;
    }
    f.write_str("}")
}

/// Parses `{(r,c),(r,c),...}`; whitespace is ignored.
pub(crate) fn parse_offset_list(s: &str) -> Result<Vec<Offset>> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let inner = t
        .strip_prefix('{')
        .and_then(|t| t.strip_suffix('}'))
        .ok_or_else(|| Error::parse(0, format!("expected '{{...}}', got {s:?}")))?;
    let mut out = Vec::new();
    let mut rest = inner;
    while !rest.is_empty() {
        let body = rest
            .strip_prefix('(')
            .ok_or_else(|| Error::parse(0, format!("expected '(' in {s:?}")))?;
        let close = body
            .find(')')
            .ok_or_else(|| Error::parse(0, format!("unclosed '(' in {s:?}")))?;
        let (pair, tail) = body.split_at(close);
        let (r, c) = pair
            .split_once(',')
            .ok_or_else(|| Error::parse(0, format!("bad offset ({pair})")))?;
        let r: i32 = r.parse().map_err(|_| Error::parse(0, format!("bad row {r:?}")))?;
        let c: i32 = c.parse().map_err(|_| Error::parse(0, format!("bad col {c:?}")))?;
        out.push((r, c));
        rest = &tail[1..];
        if let Some(t) = rest.strip_prefix(',') {
            if t.is_empty() {
                return Err(Error::parse(0, format!("trailing ',' in {s:?}")));
            }
            rest = t;
        } else if !rest.is_empty() {
            return Err(Error::parse(0, format!("expected ',' in {s:?}")));
        }
    }
    Ok(out)
}

/// A subset of a window, stored as a bit mask over the window's offsets.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Subset {
    window: Window,
    bits: u32,
}

/// Structuring elements are subsets of a window read as probe offsets.
pub type StructuringElement = Subset;

impl Subset {
    pub fn new(window: &Window, bits: u32) -> Result<Self> {
        if bits & !window.full_mask() != 0 {
            return Err(Error::input(format!(
                "mask {bits:#x} has bits outside a {}-point window",
                window.len()
            )));
        }
        Ok(Subset {
            window: window.clone(),
            bits,
        })
    }

    pub(crate) fn from_bits_unchecked(window: &Window, bits: u32) -> Self {
        debug_assert_eq!(bits & !window.full_mask(), 0);
        Subset {
            window: window.clone(),
            bits,
        }
    }

    pub fn empty(window: &Window) -> Self {
        Subset {
            window: window.clone(),
            bits: 0,
        }
    }

    pub fn full(window: &Window) -> Self {
        Subset {
            window: window.clone(),
            bits: window.full_mask(),
        }
    }

    /// The subset holding exactly `offsets`; every offset must be in the window.
    pub fn from_offsets(window: &Window, offsets: &[Offset]) -> Result<Self> {
        let mut bits = 0u32;
        for o in offsets {
            let j = window
                .index_of(*o)
                .ok_or_else(|| Error::input(format!("offset {o:?} not in window {window}")))?;
            bits |= 1 << j;
        }
        Ok(Subset {
            window: window.clone(),
            bits,
        })
    }

    pub fn parse(window: &Window, s: &str) -> Result<Self> {
        Subset::from_offsets(window, &parse_offset_list(s)?)
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    pub fn contains(&self, offset: Offset) -> bool {
        self.window
            .index_of(offset)
            .is_some_and(|j| self.bits >> j & 1 == 1)
    }

    /// Member offsets in canonical order.
    pub fn offsets(&self) -> impl Iterator<Item = Offset> + '_ {
        self.window
            .offsets()
            .iter()
            .enumerate()
            .filter(|(j, _)| self.bits >> j & 1 == 1)
            .map(|(_, o)| *o)
    }

    pub fn with_flipped(&self, j: usize) -> Subset {
        Subset {
            window: self.window.clone(),
            bits: self.bits ^ (1 << j),
        }
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_offsets(f, self.offsets())
    }
}

impl fmt::Debug for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Subset{self}")
    }
}

/// A closed interval `[lower, upper]` of subsets, `lower ⊆ upper`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Interval {
    lower: Subset,
    upper: Subset,
}

impl Interval {
    pub fn new(lower: Subset, upper: Subset) -> Result<Self> {
        ensure_same(&lower.window, &upper.window)?;
        if lower.bits & !upper.bits != 0 {
            return Err(Error::input(format!(
                "interval lower {lower} is not inside upper {upper}"
            )));
        }
        Ok(Interval { lower, upper })
    }

    pub fn from_bits(window: &Window, lower: u32, upper: u32) -> Result<Self> {
        Interval::new(Subset::new(window, lower)?, Subset::new(window, upper)?)
    }

    pub fn lower(&self) -> &Subset {
        &self.lower
    }

    pub fn upper(&self) -> &Subset {
        &self.upper
    }

    pub fn window(&self) -> &Window {
        &self.lower.window
    }

    /// `(lower, upper)` masks.
    pub fn bits(&self) -> (u32, u32) {
        (self.lower.bits, self.upper.bits)
    }

    /// Whether `lower ⊆ x ⊆ upper`.
    pub fn contains_mask(&self, x: u32) -> bool {
        x & self.lower.bits == self.lower.bits && x & !self.upper.bits == 0
    }

    /// Parses `[{...},{...}]`.
    pub fn parse(window: &Window, s: &str) -> Result<Self> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let inner = t
            .strip_prefix('[')
            .and_then(|t| t.strip_suffix(']'))
            .ok_or_else(|| Error::parse(0, format!("expected '[...]', got {s:?}")))?;
        let split = inner
            .find("},{")
            .ok_or_else(|| Error::parse(0, format!("expected two subsets in {s:?}")))?;
        let lower = Subset::parse(window, &inner[..=split])?;
        let upper = Subset::parse(window, &inner[split + 2..])?;
        Interval::new(lower, upper)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.lower, self.upper)
    }
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Interval{self}")
    }
}

fn ensure_same(a: &Window, b: &Window) -> Result<()> {
    if a.same(b) {
        Ok(())
    } else {
        Err(Error::input(format!("window mismatch: {a} vs {b}")))
    }
}

/// The partial orders on subsets (inclusion) and intervals (widening).
pub trait PartialOrderLeq {
    /// `self ≤ other`. Incomparable pairs return `false` both ways.
    fn leq(&self, other: &Self) -> Result<bool>;
}

impl PartialOrderLeq for Subset {
    fn leq(&self, other: &Self) -> Result<bool> {
        ensure_same(&self.window, &other.window)?;
        Ok(self.bits & !other.bits == 0)
    }
}

impl PartialOrderLeq for Interval {
    fn leq(&self, other: &Self) -> Result<bool> {
        ensure_same(self.window(), other.window())?;
        Ok(interval_leq(self.bits(), other.bits()))
    }
}

/// `[a,b] ≤ [a',b']` iff `a' ⊆ a` and `b ⊆ b'`, on raw masks.
pub(crate) fn interval_leq((a, b): (u32, u32), (a2, b2): (u32, u32)) -> bool {
    a2 & !a == 0 && b & !b2 == 0
}

/// Keeps the intervals not strictly below any other, deduplicated and sorted
/// by `(lower, upper)` mask value.
pub fn max_antichain(items: &[Interval]) -> Result<Vec<Interval>> {
    let Some(first) = items.first() else {
        return Ok(Vec::new());
    };
    let window = first.window().clone();
    for it in items {
        ensure_same(&window, it.window())?;
    }
    let masks: Vec<(u32, u32)> = items.iter().map(Interval::bits).collect();
    Ok(max_antichain_masks(masks)
        .into_iter()
        .map(|(a, b)| Interval {
            lower: Subset::from_bits_unchecked(&window, a),
            upper: Subset::from_bits_unchecked(&window, b),
        })
        .collect())
}

pub(crate) fn max_antichain_masks(mut masks: Vec<(u32, u32)>) -> Vec<(u32, u32)> {
    masks.sort_unstable();
    masks.dedup();
    let keep: Vec<bool> = masks
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            !masks
                .iter()
                .enumerate()
                .any(|(j, &o)| i != j && interval_leq(m, o))
        })
        .collect();
    masks
        .into_iter()
        .zip(keep)
        .filter_map(|(m, k)| k.then_some(m))
        .collect()
}

/// All subsets at Hamming distance one from `s`, ordered by flipped bit.
pub fn hamming_neighbors(s: &Subset) -> Vec<Subset> {
    (0..s.window.len()).map(|j| s.with_flipped(j)).collect()
}

/// Every subset of `window` in increasing mask order.
pub fn enumerate_subsets(window: &Window, cap: usize) -> Result<impl Iterator<Item = Subset> + '_> {
    window.check_cap(cap, "window")?;
    let n = 1u64 << window.len();
    Ok((0..n).map(move |b| Subset::from_bits_unchecked(window, b as u32)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w3() -> Window {
        Window::new([(0, 0), (0, 1), (1, 0)]).unwrap()
    }

    #[test]
    fn window_is_canonical() {
        let w = Window::new([(1, 0), (0, 1), (0, 0), (-1, 2)]).unwrap();
        assert_eq!(w.offsets(), &[(-1, 2), (0, 0), (0, 1), (1, 0)]);
        let again = Window::new(w.offsets().iter().copied()).unwrap();
        assert_eq!(w, again);
        assert!(Window::new([(0, 0), (0, 0)]).is_err());
    }

    #[test]
    fn centered_rect_is_symmetric_for_odd_sizes() {
        let w = Window::centered_rect(3, 3).unwrap();
        assert_eq!(w.len(), 9);
        assert_eq!(w.offsets()[0], (-1, -1));
        assert_eq!(w.offsets()[8], (1, 1));
        assert!(w.contains(ORIGIN));
        assert_eq!(Window::centered_rect(1, 1).unwrap(), Window::origin());
        let w = Window::centered_rect(1, 2).unwrap();
        assert_eq!(w.offsets(), &[(0, 0), (0, 1)]);
    }

    #[test]
    fn render_and_parse() {
        let w = w3();
        assert_eq!(w.to_string(), "{(0,0),(0,1),(1,0)}");
        assert_eq!(Window::parse(" { (0,1), (0,0),(1,0) } ").unwrap(), w);
        let s = Subset::from_offsets(&w, &[(0, 0), (0, 1)]).unwrap();
        assert_eq!(s.to_string(), "{(0,0),(0,1)}");
        let i = Interval::new(s.clone(), Subset::full(&w)).unwrap();
        assert_eq!(i.to_string(), "[{(0,0),(0,1)},{(0,0),(0,1),(1,0)}]");
        assert_eq!(Interval::parse(&w, &i.to_string()).unwrap(), i);
        let e = Interval::new(Subset::empty(&w), Subset::empty(&w)).unwrap();
        assert_eq!(e.to_string(), "[{},{}]");
        assert_eq!(Interval::parse(&w, "[{},{}]").unwrap(), e);
        assert!(Window::parse("{(0,0),}").is_err());
        assert!(Subset::parse(&w, "{(5,5)}").is_err());
    }

    #[test]
    fn leq_examples() {
        let w = Window::new([(0, 0), (0, 1)]).unwrap();
        let o = Subset::from_offsets(&w, &[ORIGIN]).unwrap();
        assert!(Subset::empty(&w).leq(&o).unwrap());

        let narrow = Interval::new(o.clone(), Subset::full(&w)).unwrap();
        let small = Interval::new(o.clone(), Subset::full(&w)).unwrap();
        let wide = Interval::new(Subset::empty(&w), Subset::full(&w)).unwrap();
        assert!(small.leq(&wide).unwrap());
        assert!(!wide.leq(&small).unwrap());

        let p = Subset::from_offsets(&w, &[(0, 1)]).unwrap();
        let other = Interval::new(p, Subset::full(&w)).unwrap();
        assert!(!narrow.leq(&other).unwrap());
        assert!(!other.leq(&narrow).unwrap());
    }

    #[test]
    fn leq_rejects_window_mismatch() {
        let a = Subset::empty(&w3());
        let b = Subset::empty(&Window::origin());
        assert!(matches!(a.leq(&b), Err(Error::Input(_))));
    }

    #[test]
    fn max_antichain_examples() {
        let w = w3();
        let o = Subset::from_offsets(&w, &[ORIGIN]).unwrap();
        let full = Interval::new(Subset::empty(&w), Subset::full(&w)).unwrap();
        let from_o = Interval::new(o.clone(), Subset::full(&w)).unwrap();
        assert_eq!(max_antichain(&[full.clone(), from_o]).unwrap(), vec![full]);
        assert!(max_antichain(&[]).unwrap().is_empty());

        let p = Subset::from_offsets(&w, &[(0, 1)]).unwrap();
        let a = Interval::new(o.clone(), o).unwrap();
        let b = Interval::new(p.clone(), p).unwrap();
        assert_eq!(max_antichain(&[b.clone(), a.clone()]).unwrap(), vec![a, b]);
    }

    #[test]
    fn hamming_neighbors_examples() {
        let w = w3();
        let singles: Vec<u32> = hamming_neighbors(&Subset::empty(&w))
            .iter()
            .map(Subset::bits)
            .collect();
        assert_eq!(singles, vec![1, 2, 4]);
        let cos: Vec<u32> = hamming_neighbors(&Subset::full(&w))
            .iter()
            .map(Subset::bits)
            .collect();
        assert_eq!(cos, vec![6, 5, 3]);
    }

    #[test]
    fn enumerate_subsets_examples() {
        let empty = Window::new([]).unwrap();
        assert_eq!(enumerate_subsets(&empty, 20).unwrap().count(), 1);
        let w2 = Window::new([(0, 0), (0, 1)]).unwrap();
        let v: Vec<u32> = enumerate_subsets(&w2, 20).unwrap().map(|s| s.bits()).collect();
        assert_eq!(v, vec![0, 1, 2, 3]);
        let w5 = Window::centered_rect(1, 5).unwrap();
        let mut v: Vec<u32> = enumerate_subsets(&w5, 20).unwrap().map(|s| s.bits()).collect();
        assert_eq!(v.len(), 32);
        v.dedup();
        assert_eq!(v.len(), 32);
        assert!(matches!(enumerate_subsets(&w5, 4), Err(Error::Size { .. })));
    }

    #[test]
    fn minkowski_sum_examples() {
        let w = Window::new([(0, 0), (0, 1)]).unwrap();
        assert_eq!(
            w.minkowski_sum(&w).unwrap(),
            Window::new([(0, 0), (0, 1), (0, 2)]).unwrap()
        );
        let b = Window::centered_rect(3, 3).unwrap();
        assert_eq!(Window::origin().minkowski_sum(&b).unwrap(), b);
    }
}
