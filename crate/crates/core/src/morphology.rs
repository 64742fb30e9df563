//! Binary images and the elementary set operators on them.
//!
//! Conventions: both `erode` and `dilate` probe `p + v`, so `dilate(·, a)` is
//! the left adjoint of `erode(·, ǎ)` with `ǎ` the reflected element. Window
//! patches follow the same `p + v` reading.

use rand::Rng;

use crate::error::{Error, Result};
use crate::lattice::{Interval, Offset, Subset, Window};
use crate::repr::BooleanFunctionTable;

/// How reads outside the pixel grid are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Boundary {
    /// Out-of-range pixels read as 0.
    #[default]
    ZeroPad,
    /// Coordinates wrap around; translations are exact group actions.
    Toroidal,
}

impl Boundary {
    pub fn name(self) -> &'static str {
        match self {
            Boundary::ZeroPad => "zero-pad",
            Boundary::Toroidal => "toroidal",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "zero-pad" | "zeropad" | "zero" => Ok(Boundary::ZeroPad),
            "toroidal" | "torus" | "wrap" => Ok(Boundary::Toroidal),
            other => Err(Error::input(format!("unknown boundary policy {other:?}"))),
        }
    }
}

/// A binary image on a `height × width` grid.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryImage {
    height: usize,
    width: usize,
    pixels: Vec<bool>,
    boundary: Boundary,
}

impl BinaryImage {
    /// All-zero image.
    pub fn new(height: usize, width: usize, boundary: Boundary) -> Result<Self> {
        Self::filled(height, width, boundary, false)
    }

    pub fn filled(height: usize, width: usize, boundary: Boundary, value: bool) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::input(format!(
                "image dimensions must be positive, got {height}x{width}"
            )));
        }
        Ok(BinaryImage {
            height,
            width,
            pixels: vec![value; height * width],
            boundary,
        })
    }

    /// Builds an image from row-major pixels.
    pub fn from_pixels(height: usize, width: usize, pixels: Vec<bool>, boundary: Boundary) -> Result<Self> {
        if height == 0 || width == 0 || pixels.len() != height * width {
            return Err(Error::input(format!(
                "{} pixels do not fill a {height}x{width} grid",
                pixels.len()
            )));
        }
        Ok(BinaryImage {
            height,
            width,
            pixels,
            boundary,
        })
    }

    /// Builds an image from rows of `'1'`/`'0'` (or `'#'`/`'.'`) characters.
    pub fn from_rows(rows: &[&str], boundary: Boundary) -> Result<Self> {
        let width = rows.first().map_or(0, |r| r.len());
        let mut pixels = Vec::with_capacity(rows.len() * width);
        for row in rows {
            if row.len() != width {
                return Err(Error::input("ragged rows"));
            }
            for ch in row.chars() {
                pixels.push(match ch {
                    '1' | '#' => true,
                    '0' | '.' => false,
                    c => return Err(Error::input(format!("bad pixel character {c:?}"))),
                });
            }
        }
        Self::from_pixels(rows.len(), width, pixels, boundary)
    }

    /// Independent Bernoulli(`density`) pixels.
    pub fn random<R: Rng + ?Sized>(
        height: usize,
        width: usize,
        density: f64,
        boundary: Boundary,
        rng: &mut R,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&density) {
            return Err(Error::input(format!("density {density} outside [0,1]")));
        }
        let pixels = (0..height * width).map(|_| rng.random_bool(density)).collect();
        Self::from_pixels(height, width, pixels, boundary)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn pixels(&self) -> &[bool] {
        &self.pixels
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.pixels[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.pixels[row * self.width + col] = value;
    }

    /// Reads pixel `(row, col)` with signed coordinates, resolving out-of-range
    /// reads by the boundary policy.
    pub fn read(&self, row: i64, col: i64) -> bool {
        let (h, w) = (self.height as i64, self.width as i64);
        match self.boundary {
            Boundary::ZeroPad => {
                if row < 0 || col < 0 || row >= h || col >= w {
                    false
                } else {
                    self.pixels[(row * w + col) as usize]
                }
            }
            Boundary::Toroidal => self.pixels[(row.rem_euclid(h) * w + col.rem_euclid(w)) as usize],
        }
    }

    pub fn count_ones(&self) -> usize {
        self.pixels.iter().filter(|&&p| p).count()
    }

    /// Coordinates of all foreground pixels, row-major.
    pub fn ones(&self) -> Vec<(usize, usize)> {
        (0..self.pixels.len())
            .filter(|&i| self.pixels[i])
            .map(|i| (i / self.width, i % self.width))
            .collect()
    }

    /// Pixelwise inclusion. Images of different sizes are never included.
    pub fn is_subset_of(&self, other: &BinaryImage) -> bool {
        self.same_shape(other) && self.pixels.iter().zip(&other.pixels).all(|(a, b)| !a | b)
    }

    pub fn same_shape(&self, other: &BinaryImage) -> bool {
        self.height == other.height && self.width == other.width
    }

    fn map_pixels(&self, f: impl Fn(usize, usize) -> bool) -> BinaryImage {
        let mut pixels = Vec::with_capacity(self.pixels.len());
        for r in 0..self.height {
            for c in 0..self.width {
                pixels.push(f(r, c));
            }
        }
        BinaryImage { pixels, ..*self }
    }
}

impl std::fmt::Debug for BinaryImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "BinaryImage {}x{} {:?}",
            self.height, self.width, self.boundary
        )?;
        for r in 0..self.height {
            let row: String = (0..self.width)
                .map(|c| if self.get(r, c) { '#' } else { '.' })
                .collect();
            writeln!(f, "  {row}")?;
        }
        Ok(())
    }
}

/// Anything that maps a binary image to a binary image of the same grid.
pub trait ImageOperator: Sync {
    fn apply(&self, x: &BinaryImage) -> BinaryImage;
}

impl<F> ImageOperator for F
where
    F: Fn(&BinaryImage) -> BinaryImage + Sync,
{
    fn apply(&self, x: &BinaryImage) -> BinaryImage {
        self(x)
    }
}

/// Erosion: `p` is set iff `x(p + v)` for every `v ∈ a`.
pub fn erode(x: &BinaryImage, a: &Subset) -> BinaryImage {
    let offs: Vec<Offset> = a.offsets().collect();
    x.map_pixels(|r, c| {
        offs.iter()
            .all(|&(dr, dc)| x.read(r as i64 + i64::from(dr), c as i64 + i64::from(dc)))
    })
}

/// Dilation: `p` is set iff `x(p + v)` for some `v ∈ a`.
pub fn dilate(x: &BinaryImage, a: &Subset) -> BinaryImage {
    let offs: Vec<Offset> = a.offsets().collect();
    x.map_pixels(|r, c| {
        offs.iter()
            .any(|&(dr, dc)| x.read(r as i64 + i64::from(dr), c as i64 + i64::from(dc)))
    })
}

/// Pixelwise Boolean operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointwiseOp {
    Complement,
    Union,
    Intersection,
}

pub fn pointwise(op: PointwiseOp, x: &BinaryImage, y: Option<&BinaryImage>) -> Result<BinaryImage> {
    match (op, y) {
        (PointwiseOp::Complement, None) => Ok(complement(x)),
        (PointwiseOp::Complement, Some(_)) => Err(Error::input("complement takes one image")),
        (_, None) => Err(Error::input(format!("{op:?} needs two images"))),
        (PointwiseOp::Union, Some(y)) => union(x, y),
        (PointwiseOp::Intersection, Some(y)) => intersection(x, y),
    }
}

pub fn complement(x: &BinaryImage) -> BinaryImage {
    BinaryImage {
        pixels: x.pixels.iter().map(|p| !p).collect(),
        ..*x
    }
}

pub fn union(x: &BinaryImage, y: &BinaryImage) -> Result<BinaryImage> {
    zip_with(x, y, |a, b| a | b)
}

pub fn intersection(x: &BinaryImage, y: &BinaryImage) -> Result<BinaryImage> {
    zip_with(x, y, |a, b| a & b)
}

fn zip_with(x: &BinaryImage, y: &BinaryImage, f: impl Fn(bool, bool) -> bool) -> Result<BinaryImage> {
    if !x.same_shape(y) || x.boundary != y.boundary {
        return Err(Error::input(format!(
            "image mismatch: {}x{} {:?} vs {}x{} {:?}",
            x.height, x.width, x.boundary, y.height, y.width, y.boundary
        )));
    }
    Ok(BinaryImage {
        pixels: x.pixels.iter().zip(&y.pixels).map(|(&a, &b)| f(a, b)).collect(),
        ..*x
    })
}

/// The window patch code of every pixel, row-major: bit `j` of entry `p` is
/// `x(p + offsets[j])`.
pub fn patch_codes(x: &BinaryImage, window: &Window) -> Vec<u32> {
    let mut codes = vec![0u32; x.len()];
    for (j, &(dr, dc)) in window.offsets().iter().enumerate() {
        let bit = 1u32 << j;
        for r in 0..x.height {
            let rr = r as i64 + i64::from(dr);
            for c in 0..x.width {
                if x.read(rr, c as i64 + i64::from(dc)) {
                    codes[r * x.width + c] |= bit;
                }
            }
        }
    }
    codes
}

/// Sup-generating building block: `p` is set iff `lower ⊆ patch(p) ⊆ upper`.
pub fn interval_operator(x: &BinaryImage, i: &Interval) -> BinaryImage {
    let codes = patch_codes(x, i.window());
    BinaryImage {
        pixels: codes.into_iter().map(|code| i.contains_mask(code)).collect(),
        ..*x
    }
}

/// Applies the W-operator with characteristic function `f` on window `w`.
pub fn apply_table(x: &BinaryImage, w: &Window, f: &BooleanFunctionTable) -> Result<BinaryImage> {
    if f.window() != w {
        return Err(Error::input(format!(
            "table is tabulated on {} but applied with window {w}",
            f.window()
        )));
    }
    Ok(apply_table_unchecked(x, f))
}

pub(crate) fn apply_table_unchecked(x: &BinaryImage, f: &BooleanFunctionTable) -> BinaryImage {
    let codes = patch_codes(x, f.window());
    BinaryImage {
        pixels: codes.into_iter().map(|code| f.value(code)).collect(),
        ..*x
    }
}

/// Translation by `v` on a torus: output pixel `p` is input pixel `p - v`.
pub fn shift(x: &BinaryImage, v: Offset) -> Result<BinaryImage> {
    if x.boundary != Boundary::Toroidal {
        return Err(Error::UnsupportedPolicy(format!(
            "shift needs a toroidal image, got {}",
            x.boundary.name()
        )));
    }
    Ok(x.map_pixels(|r, c| x.read(r as i64 - i64::from(v.0), c as i64 - i64::from(v.1))))
}

/// Number of pixels where `a` and `b` differ. Shapes must match.
pub fn mismatch_count(a: &BinaryImage, b: &BinaryImage) -> u64 {
    debug_assert!(a.same_shape(b));
    a.pixels.iter().zip(&b.pixels).filter(|(x, y)| x != y).count() as u64
}

/// The structuring element with every offset negated, on the reflected window.
pub fn reflect(a: &Subset) -> Subset {
    let w = a.window();
    let refl =
        Window::new(w.offsets().iter().map(|&(r, c)| (-r, -c))).expect("reflection keeps offsets distinct");
    let members: Vec<Offset> = a.offsets().map(|(r, c)| (-r, -c)).collect();
    Subset::from_offsets(&refl, &members).expect("reflected members lie in reflected window")
}
