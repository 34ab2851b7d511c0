//! Conformal maps: complex affine maps, square-root inverse branches of
//! `z ↦ a z² + c`, and finite compositions of the two.
//!
//! Disk images of affine maps are exact. For expressions containing a branch
//! the image enclosure samples the boundary circle and adds the worst-case
//! drift between samples, bounded by a certified sup of `|m′|` over the disk.
//! The image of a closed disk under a map analytic on it is enclosed by the
//! image of the boundary circle (maximum principle), so the result is sound.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ClosedDisk, Point, RealInterval};
use crate::DEFAULT_SAMPLES;

const MIN_SAMPLES: usize = 16;

/// Relative padding on sampled radii to absorb floating-point rounding.
const SAMPLED_PAD: f64 = 1e-12;

/// `z ↦ a·z + b` with `a ≠ 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub a: Complex64,
    pub b: Complex64,
}

impl AffineMap {
    pub fn new(a: Complex64, b: Complex64) -> Result<Self> {
        if a == Complex64::new(0.0, 0.0) || !a.is_finite() || !b.is_finite() {
            return Err(Error::Parameter(format!("affine map needs finite a != 0, got a = {a}, b = {b}")));
        }
        Ok(Self { a, b })
    }

    pub fn real(a: f64, b: f64) -> Result<Self> {
        Self::new(Complex64::new(a, 0.0), Complex64::new(b, 0.0))
    }

    pub fn identity() -> Self {
        Self { a: Complex64::new(1.0, 0.0), b: Complex64::new(0.0, 0.0) }
    }

    pub fn apply(&self, z: Point) -> Point {
        self.a * z + self.b
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &AffineMap) -> AffineMap {
        AffineMap { a: self.a * inner.a, b: self.a * inner.b + self.b }
    }

    pub fn is_real(&self) -> bool {
        self.a.im == 0.0 && self.b.im == 0.0
    }

    /// Image disk, padded by a few ulps to absorb rounding in `apply`.
    pub fn image_disk(&self, d: &ClosedDisk) -> ClosedDisk {
        let radius = self.a.norm() * d.radius;
        let scale = self.a.norm() * (d.center.norm() + d.radius) + self.b.norm();
        ClosedDisk { center: self.apply(d.center), radius: radius + 4.0 * f64::EPSILON * scale }
    }

    pub fn image_interval(&self, i: &RealInterval) -> Result<RealInterval> {
        if !self.is_real() {
            return Err(Error::Mode(format!(
                "interval image needs real coefficients, got a = {}, b = {}",
                self.a, self.b
            )));
        }
        let (x, y) = (self.a.re * i.lo + self.b.re, self.a.re * i.hi + self.b.re);
        Ok(RealInterval { lo: x.min(y), hi: x.max(y) })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// One inverse branch of `z ↦ (quad_a·z² + quad_c)/prescale`:
/// `z ↦ sign·√((z·prescale − quad_c)/quad_a)`.
///
/// The square root has its cut on the ray `{−t·axis : t ≥ 0}`;
/// `axis = 1` is the principal branch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqrtBranch {
    pub quad_a: Complex64,
    pub quad_c: Complex64,
    pub prescale: Complex64,
    pub sign: Sign,
    pub axis: Complex64,
}

impl SqrtBranch {
    /// Branch with the cut opposite to the argument at `z = 0`, i.e. centered
    /// on `−quad_c/quad_a`. This is the natural choice for domains centered
    /// at the origin.
    pub fn new(quad_a: Complex64, quad_c: Complex64, prescale: Complex64, sign: Sign) -> Result<Self> {
        let w0 = -quad_c / quad_a;
        let axis = if w0.norm() > 0.0 { w0 / w0.norm() } else { Complex64::new(1.0, 0.0) };
        Self::with_axis(quad_a, quad_c, prescale, sign, axis)
    }

    pub fn principal(quad_a: Complex64, quad_c: Complex64, prescale: Complex64, sign: Sign) -> Result<Self> {
        Self::with_axis(quad_a, quad_c, prescale, sign, Complex64::new(1.0, 0.0))
    }

    pub fn with_axis(
        quad_a: Complex64,
        quad_c: Complex64,
        prescale: Complex64,
        sign: Sign,
        axis: Complex64,
    ) -> Result<Self> {
        let zero = Complex64::new(0.0, 0.0);
        if quad_a == zero || prescale == zero || !quad_a.is_finite() || !quad_c.is_finite() || !prescale.is_finite() {
            return Err(Error::Parameter("sqrt branch needs finite quad_a != 0 and prescale != 0".into()));
        }
        if !(axis.norm() > 0.0) || !axis.is_finite() {
            return Err(Error::Parameter("sqrt branch axis must be a nonzero direction".into()));
        }
        Ok(Self { quad_a, quad_c, prescale, sign, axis: axis / axis.norm() })
    }

    /// The affine part `z ↦ (z·prescale − quad_c)/quad_a`.
    pub fn argument_map(&self) -> AffineMap {
        AffineMap { a: self.prescale / self.quad_a, b: -self.quad_c / self.quad_a }
    }

    fn root(&self, w: Complex64) -> Complex64 {
        self.axis.sqrt() * (w / self.axis).sqrt() * self.sign.factor()
    }

    /// Distance from `w` to the cut ray (including the branch point 0).
    fn cut_distance(&self, w: Complex64) -> f64 {
        let v = w / self.axis;
        if v.re >= 0.0 {
            v.norm()
        } else {
            v.im.abs()
        }
    }

    fn apply(&self, z: Point, factor: usize) -> Result<Point> {
        let w = self.argument_map().apply(z);
        if self.cut_distance(w) <= 0.0 {
            return Err(Error::Branch { factor, detail: format!("argument {w} lies on the cut") });
        }
        Ok(self.root(w))
    }

    /// Argument disk for `d`, checked to stay off the cut.
    fn admissible_argument(&self, d: &ClosedDisk, factor: usize) -> Result<ClosedDisk> {
        let arg = self.argument_map().image_disk(d);
        if self.cut_distance(arg.center) <= arg.radius {
            return Err(Error::Branch {
                factor,
                detail: format!("argument disk (center {}, radius {:e}) meets the cut", arg.center, arg.radius),
            });
        }
        Ok(arg)
    }

    fn derivative_bound(&self, d: &ClosedDisk, factor: usize) -> Result<f64> {
        let arg = self.admissible_argument(d, factor)?;
        let min_arg = arg.center.norm() - arg.radius;
        Ok(self.prescale.norm() / (2.0 * self.quad_a.norm() * min_arg.sqrt()))
    }
}

/// One factor of a [`MapExpr`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Factor {
    Affine(AffineMap),
    Sqrt(SqrtBranch),
}

impl Factor {
    fn apply(&self, z: Point, index: usize) -> Result<Point> {
        match self {
            Factor::Affine(m) => Ok(m.apply(z)),
            Factor::Sqrt(s) => s.apply(z, index),
        }
    }

    fn derivative_bound(&self, d: &ClosedDisk, index: usize) -> Result<f64> {
        match self {
            Factor::Affine(m) => Ok(m.a.norm()),
            Factor::Sqrt(s) => s.derivative_bound(d, index),
        }
    }

    fn image_disk(&self, d: &ClosedDisk, index: usize, samples: usize) -> Result<ClosedDisk> {
        match self {
            Factor::Affine(m) => Ok(m.image_disk(d)),
            Factor::Sqrt(s) => {
                let lip = s.derivative_bound(d, index)?;
                sampled_image(|z| s.apply(z, index), d, samples, lip)
            }
        }
    }
}

/// A finite composition of factors. `factors[0]` is outermost; evaluation runs
/// right to left. Adjacent affine factors are always collapsed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapExpr {
    factors: Vec<Factor>,
}

impl From<AffineMap> for MapExpr {
    fn from(m: AffineMap) -> Self {
        Self { factors: vec![Factor::Affine(m)] }
    }
}

impl From<SqrtBranch> for MapExpr {
    fn from(s: SqrtBranch) -> Self {
        Self { factors: vec![Factor::Sqrt(s)] }
    }
}

impl MapExpr {
    pub fn identity() -> Self {
        AffineMap::identity().into()
    }

    /// Builds a composition from factors listed outermost first.
    pub fn from_factors(factors: impl IntoIterator<Item = Factor>) -> Result<Self> {
        let mut out = Self { factors: Vec::new() };
        for f in factors {
            out.push_inner(f);
        }
        if out.factors.is_empty() {
            return Err(Error::Parameter("a map expression needs at least one factor".into()));
        }
        Ok(out)
    }

    fn push_inner(&mut self, f: Factor) {
        match (self.factors.last_mut(), f) {
            (Some(Factor::Affine(outer)), Factor::Affine(inner)) => *outer = outer.compose(&inner),
            _ => self.factors.push(f),
        }
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    /// The collapsed affine map when the expression has no branch factor.
    pub fn as_affine(&self) -> Option<AffineMap> {
        match self.factors.as_slice() {
            [Factor::Affine(m)] => Some(*m),
            _ => None,
        }
    }

    pub fn apply(&self, z: Point) -> Result<Point> {
        self.factors.iter().enumerate().rev().try_fold(z, |acc, (i, f)| f.apply(acc, i))
    }

    /// Certified upper bound on `sup_D |m′|`, by the chain rule with each
    /// factor bounded on an enclosure of the inner image.
    pub fn derivative_sup_bound(&self, d: &ClosedDisk) -> Result<f64> {
        let mut disk = *d;
        let mut bound = 1.0;
        let last = self.factors.len() - 1;
        for (i, f) in self.factors.iter().enumerate().rev() {
            bound *= f.derivative_bound(&disk, i)?;
            if i > 0 || last == 0 {
                disk = f.image_disk(&disk, i, DEFAULT_SAMPLES)?;
            }
        }
        Ok(bound)
    }

    /// Closed disk containing `m(D)`.
    pub fn image_disk(&self, d: &ClosedDisk, samples: usize) -> Result<ClosedDisk> {
        if samples < MIN_SAMPLES {
            return Err(Error::Parameter(format!("need at least {MIN_SAMPLES} samples, got {samples}")));
        }
        if let Some(m) = self.as_affine() {
            return Ok(m.image_disk(d));
        }
        let lip = self.derivative_sup_bound(d)?;
        sampled_image(|z| self.apply(z), d, samples, lip)
    }

    pub fn image_interval(&self, i: &RealInterval) -> Result<RealInterval> {
        match self.as_affine() {
            Some(m) => m.image_interval(i),
            None => Err(Error::Mode("interval images need an affine map".into())),
        }
    }
}

impl fmt::Display for MapExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, factor) in self.factors.iter().enumerate() {
            if i > 0 {
                write!(f, " ∘ ")?;
            }
            match factor {
                Factor::Affine(m) => write!(f, "({}·z + {})", m.a, m.b)?,
                Factor::Sqrt(s) => write!(
                    f,
                    "{}√((z·{} − {})/{})",
                    if s.sign == Sign::Plus { "+" } else { "−" },
                    s.prescale,
                    s.quad_c,
                    s.quad_a
                )?,
            }
        }
        Ok(())
    }
}

/// `outer ∘ inner`, collapsing the affine factors that meet at the junction.
pub fn compose(outer: &MapExpr, inner: &MapExpr) -> MapExpr {
    let mut out = outer.clone();
    for f in &inner.factors {
        out.push_inner(*f);
    }
    out
}

fn sampled_image(
    map: impl Fn(Point) -> Result<Point>,
    d: &ClosedDisk,
    samples: usize,
    lipschitz: f64,
) -> Result<ClosedDisk> {
    let center = map(d.center)?;
    if d.radius == 0.0 {
        return Ok(ClosedDisk::singleton(center));
    }
    let mut dev: f64 = 0.0;
    for z in d.boundary_samples(samples) {
        dev = dev.max((map(z)? - center).norm());
    }
    // Every boundary point is within arc length π·r/n of a sample.
    let radius = (dev + lipschitz * PI * d.radius / samples as f64) * (1.0 + SAMPLED_PAD);
    ClosedDisk::new(center, radius)
}
