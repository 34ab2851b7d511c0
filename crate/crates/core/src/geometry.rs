//! Planar geometry on enclosures.
//!
//! Every predicate here works on *enclosures*: a [`ClosedDisk`] or a
//! [`RealInterval`] that is known to contain some exact set. Distances and
//! clearances are lower bounds and diameters are upper bounds. A positive
//! separation verdict therefore holds for the enclosed sets as well, while a
//! negative one may only reflect enclosure slack.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the plane.
pub type Point = Complex64;

fn check_finite(z: Point, what: &str) -> Result<()> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(Error::Geometry(format!("{what} must be finite, got {z}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedDisk {
    pub center: Point,
    pub radius: f64,
}

impl ClosedDisk {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        check_finite(center, "disk center")?;
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(Error::Geometry(format!("disk radius must be finite and non-negative, got {radius}")));
        }
        Ok(Self { center, radius })
    }

    pub fn singleton(center: Point) -> Self {
        Self { center, radius: 0.0 }
    }

    pub fn diameter(&self) -> f64 {
        2.0 * self.radius
    }

    pub fn contains_point(&self, z: Point) -> bool {
        (z - self.center).norm() <= self.radius
    }

    pub fn contains_disk(&self, other: &ClosedDisk) -> bool {
        (other.center - self.center).norm() + other.radius <= self.radius
    }

    /// Boundary points `center + radius·e^{2πik/n}` for `k = 0..n`.
    pub fn boundary_samples(&self, n: usize) -> impl Iterator<Item = Point> + '_ {
        let step = std::f64::consts::TAU / n as f64;
        (0..n).map(move |k| self.center + Complex64::from_polar(self.radius, step * k as f64))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealInterval {
    pub lo: f64,
    pub hi: f64,
}

impl RealInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::Geometry(format!("invalid interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains_interval(&self, other: &RealInterval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }
}

/// A set enclosure used by pieces and seeds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Enclosure {
    Disk(ClosedDisk),
    Interval(RealInterval),
}

impl Enclosure {
    pub fn center(&self) -> Point {
        match self {
            Enclosure::Disk(d) => d.center,
            Enclosure::Interval(i) => Complex64::new(i.midpoint(), 0.0),
        }
    }

    pub fn diameter_upper(&self) -> f64 {
        match self {
            Enclosure::Disk(d) => d.diameter(),
            Enclosure::Interval(i) => i.length(),
        }
    }

    /// Smallest disk containing the enclosure.
    pub fn bounding_disk(&self) -> ClosedDisk {
        match self {
            Enclosure::Disk(d) => *d,
            Enclosure::Interval(i) => {
                ClosedDisk { center: Complex64::new(i.midpoint(), 0.0), radius: 0.5 * i.length() }
            }
        }
    }

    pub fn contains(&self, inner: &Enclosure) -> bool {
        match (self, inner) {
            (Enclosure::Disk(d), _) => d.contains_disk(&inner.bounding_disk()),
            (Enclosure::Interval(outer), Enclosure::Interval(i)) => outer.contains_interval(i),
            (Enclosure::Interval(outer), Enclosure::Disk(d)) => {
                d.radius == 0.0 && d.center.im == 0.0 && outer.lo <= d.center.re && d.center.re <= outer.hi
            }
        }
    }

    /// Minimum and maximum Euclidean distance from `p` to points of the
    /// enclosure (the minimum is a lower bound, the maximum an upper bound).
    pub fn radial_extent(&self, p: Point) -> (f64, f64) {
        match self {
            Enclosure::Disk(d) => {
                let dist = (d.center - p).norm();
                ((dist - d.radius).max(0.0), dist + d.radius)
            }
            Enclosure::Interval(i) => {
                let dy = p.im.abs();
                let dx_min = if p.re < i.lo {
                    i.lo - p.re
                } else if p.re > i.hi {
                    p.re - i.hi
                } else {
                    0.0
                };
                let dx_max = (p.re - i.lo).abs().max((p.re - i.hi).abs());
                (dx_min.hypot(dy), dx_max.hypot(dy))
            }
        }
    }
}

impl From<ClosedDisk> for Enclosure {
    fn from(d: ClosedDisk) -> Self {
        Enclosure::Disk(d)
    }
}

impl From<RealInterval> for Enclosure {
    fn from(i: RealInterval) -> Self {
        Enclosure::Interval(i)
    }
}

/// The open round annulus `{z : inner < |z − center| < outer}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundAnnulus {
    pub center: Point,
    pub inner: f64,
    pub outer: f64,
}

impl RoundAnnulus {
    pub fn new(center: Point, inner: f64, outer: f64) -> Result<Self> {
        check_finite(center, "annulus center")?;
        if !(inner >= 0.0 && inner < outer && outer.is_finite()) {
            return Err(Error::Geometry(format!(
                "annulus radii must satisfy 0 <= r < R < inf, got r = {inner}, R = {outer}"
            )));
        }
        Ok(Self { center, inner, outer })
    }

    pub fn modulus(&self) -> Result<f64> {
        annulus_modulus(self)
    }

    /// The closed bounded complementary component.
    pub fn hole(&self) -> ClosedDisk {
        ClosedDisk { center: self.center, radius: self.inner }
    }

    pub fn outer_disk(&self) -> ClosedDisk {
        ClosedDisk { center: self.center, radius: self.outer }
    }

    /// Euclidean diameter of the annulus.
    pub fn diameter(&self) -> f64 {
        2.0 * self.outer
    }

    pub fn contains_point(&self, z: Point) -> bool {
        let d = (z - self.center).norm();
        self.inner < d && d < self.outer
    }
}

/// An open disk used as the domain `U` of a system.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiskDomain {
    disk: ClosedDisk,
}

impl DiskDomain {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        let disk = ClosedDisk::new(center, radius)?;
        if radius <= 0.0 {
            return Err(Error::Geometry("domain radius must be positive".into()));
        }
        Ok(Self { disk })
    }

    /// Closure of the domain.
    pub fn closure(&self) -> ClosedDisk {
        self.disk
    }

    pub fn contains(&self, z: Point) -> bool {
        (z - self.disk.center).norm() < self.disk.radius
    }

    /// True when the closed disk lies in the open domain.
    pub fn contains_disk(&self, d: &ClosedDisk) -> bool {
        (d.center - self.disk.center).norm() + d.radius < self.disk.radius
    }

    fn normalize(&self, z: Point) -> Result<Point> {
        let zeta = (z - self.disk.center) / self.disk.radius;
        if zeta.norm() >= 1.0 || !zeta.re.is_finite() || !zeta.im.is_finite() {
            return Err(Error::Domain { re: z.re, im: z.im });
        }
        Ok(zeta)
    }

    /// Hyperbolic distance, see [`hyperbolic_distance`].
    pub fn hyperbolic_distance(&self, z: Point, w: Point) -> Result<f64> {
        hyperbolic_distance(self, z, w)
    }
}

/// `mod A = log(R/r)`.
pub fn annulus_modulus(a: &RoundAnnulus) -> Result<f64> {
    if a.inner <= 0.0 {
        return Err(Error::DegenerateAnnulus(a.inner));
    }
    Ok((a.outer / a.inner).ln())
}

/// Lower bound on the Euclidean distance between the enclosed sets.
pub fn set_distance_lower(e1: &Enclosure, e2: &Enclosure) -> f64 {
    match (e1, e2) {
        (Enclosure::Disk(a), Enclosure::Disk(b)) => ((a.center - b.center).norm() - a.radius - b.radius).max(0.0),
        (Enclosure::Interval(a), Enclosure::Interval(b)) => {
            if a.hi < b.lo {
                b.lo - a.hi
            } else if b.hi < a.lo {
                a.lo - b.hi
            } else {
                0.0
            }
        }
        (Enclosure::Disk(d), i @ Enclosure::Interval(_)) | (i @ Enclosure::Interval(_), Enclosure::Disk(d)) => {
            (i.radial_extent(d.center).0 - d.radius).max(0.0)
        }
    }
}

/// Lower bound on `dist(E, ∂X)` for an enclosure inside the disk `X`.
pub fn boundary_distance_lower(e: &Enclosure, x: &ClosedDisk) -> Result<f64> {
    let (_, far) = e.radial_extent(x.center);
    let clearance = x.radius - far;
    if clearance < 0.0 {
        return Err(Error::Containment(clearance));
    }
    Ok(clearance)
}

/// Clearance of `e` from the boundary of a seed enclosure. For an interval
/// seed the boundary is its endpoint pair.
pub fn seed_clearance(e: &Enclosure, seed: &Enclosure) -> Result<f64> {
    match seed {
        Enclosure::Disk(x) => boundary_distance_lower(e, x),
        Enclosure::Interval(x) => {
            if !seed.contains(e) {
                return Err(Error::Containment(-1.0));
            }
            let inner = match e {
                Enclosure::Interval(i) => *i,
                Enclosure::Disk(d) => RealInterval { lo: d.center.re, hi: d.center.re },
            };
            Ok((inner.lo - x.lo).min(x.hi - inner.hi))
        }
    }
}

/// True when the annulus separates the union of the enclosed pieces: no piece
/// meets the open annulus, each piece lies in the closed hole or the closed
/// outside, and both sides are occupied.
pub fn annulus_separates(a: &RoundAnnulus, pieces: &[Enclosure]) -> bool {
    let mut inside = false;
    let mut outside = false;
    for p in pieces {
        match classify_piece(a, p) {
            Side::Hole => inside = true,
            Side::Outside => outside = true,
            Side::Straddles => return false,
        }
    }
    inside && outside
}

/// Where an enclosure sits relative to a round annulus.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Hole,
    Outside,
    Straddles,
}

pub fn classify_piece(a: &RoundAnnulus, piece: &Enclosure) -> Side {
    let (near, far) = piece.radial_extent(a.center);
    if far <= a.inner {
        Side::Hole
    } else if near >= a.outer {
        Side::Outside
    } else {
        Side::Straddles
    }
}

/// Hyperbolic distance on the disk domain, with curvature −1 (density
/// `2/(1−|ζ|²)` after mapping the domain affinely onto the unit disk).
pub fn hyperbolic_distance(u: &DiskDomain, z: Point, w: Point) -> Result<f64> {
    let a = u.normalize(z)?;
    let b = u.normalize(w)?;
    let t = (a - b).norm() / (Complex64::new(1.0, 0.0) - b.conj() * a).norm();
    Ok(2.0 * t.min(1.0).atanh())
}

/// Brute-force search for a round annulus of maximal modulus that separates
/// `points` with `hole_point` in the hole, over the given center and radius
/// grids. Radii are taken from `radius_grid` (non-positive entries ignored).
pub fn best_separating_annulus_search(
    points: &[Point],
    hole_point: Point,
    center_grid: &[Point],
    radius_grid: &[f64],
) -> Option<RoundAnnulus> {
    let mut radii: Vec<f64> = radius_grid.iter().copied().filter(|r| *r > 0.0 && r.is_finite()).collect();
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    if radii.len() < 2 || points.len() < 2 {
        return None;
    }

    let mut best: Option<(f64, RoundAnnulus)> = None;
    let mut dists = Vec::with_capacity(points.len());
    for &c in center_grid {
        dists.clear();
        dists.extend(points.iter().map(|p| (p - c).norm()));
        dists.sort_by(f64::total_cmp);
        let hole_dist = (hole_point - c).norm();
        // Candidate band between consecutive distances d[k] < d[k+1], with
        // the hole point inside: r >= d[k] >= |hole - c|, R <= d[k+1].
        for k in 0..dists.len() - 1 {
            let (lo, hi) = (dists[k], dists[k + 1]);
            if lo < hole_dist || !(lo < hi) {
                continue;
            }
            let i = radii.partition_point(|r| *r < lo);
            let j = radii.partition_point(|r| *r <= hi);
            if i >= radii.len() || j == 0 || j - 1 <= i {
                continue;
            }
            let (r, big_r) = (radii[i], radii[j - 1]);
            let m = (big_r / r).ln();
            if best.as_ref().is_none_or(|(bm, _)| m > *bm) {
                best = Some((m, RoundAnnulus { center: c, inner: r, outer: big_r }));
            }
        }
    }
    best.map(|(_, a)| a)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Point {
        Complex64::new(re, 0.0)
    }

    fn disk(re: f64, r: f64) -> Enclosure {
        Enclosure::Disk(ClosedDisk::new(c(re), r).unwrap())
    }

    fn iv(lo: f64, hi: f64) -> Enclosure {
        Enclosure::Interval(RealInterval::new(lo, hi).unwrap())
    }

    #[test]
    fn modulus_examples() {
        let a = RoundAnnulus::new(c(0.0), 1.0, std::f64::consts::E).unwrap();
        assert!((annulus_modulus(&a).unwrap() - 1.0).abs() < 1e-15);
        let w = Complex64::new(-3.5, 2.25);
        let a = RoundAnnulus::new(w, 1.0, 2.0).unwrap();
        assert_eq!(annulus_modulus(&a).unwrap(), 2f64.ln());
        let a = RoundAnnulus::new(c(1.0 / 6.0), 1.0 / 3.0, 0.5).unwrap();
        assert!((annulus_modulus(&a).unwrap() - 0.405_465_108_108_164_4).abs() < 1e-15);
    }

    #[test]
    fn degenerate_annulus_rejected() {
        let a = RoundAnnulus::new(c(0.0), 0.0, 1.0).unwrap();
        assert!(matches!(annulus_modulus(&a), Err(Error::DegenerateAnnulus(_))));
        assert!(RoundAnnulus::new(c(0.0), 2.0, 1.0).is_err());
    }

    #[test]
    fn set_distance_examples() {
        assert_eq!(set_distance_lower(&disk(0.0, 1.0), &disk(3.0, 1.0)), 1.0);
        let d = set_distance_lower(&iv(0.0, 1.0 / 3.0), &iv(2.0 / 3.0, 1.0));
        assert!((d - 1.0 / 3.0).abs() < 1e-15);
        let d = set_distance_lower(&disk(1.0 / 6.0, 0.2), &disk(5.0 / 6.0, 0.2));
        assert!((d - 4.0 / 15.0).abs() < 1e-15);
        assert_eq!(set_distance_lower(&disk(0.0, 1.0), &disk(1.0, 1.0)), 0.0);
        // Disk above a segment.
        let d = Enclosure::Disk(ClosedDisk::new(Complex64::new(0.5, 2.0), 0.5).unwrap());
        assert!((set_distance_lower(&d, &iv(0.0, 1.0)) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn boundary_distance_examples() {
        let x = ClosedDisk::new(c(0.5), 0.6).unwrap();
        assert!((boundary_distance_lower(&disk(0.5, 0.2), &x).unwrap() - 0.4).abs() < 1e-15);
        let b = boundary_distance_lower(&disk(1.0 / 6.0, 0.2), &x).unwrap();
        assert!((b - 1.0 / 15.0).abs() < 1e-15);
        assert_eq!(boundary_distance_lower(&disk(0.5, 0.6), &x).unwrap(), 0.0);
        assert!(matches!(boundary_distance_lower(&disk(1.0, 0.2), &x), Err(Error::Containment(_))));
    }

    #[test]
    fn separation_examples() {
        let pieces = [iv(0.0, 1.0 / 3.0), iv(2.0 / 3.0, 1.0)];
        let a = RoundAnnulus::new(c(1.0 / 6.0), 1.0 / 3.0, 0.5).unwrap();
        assert!(annulus_separates(&a, &pieces));
        let b = RoundAnnulus::new(c(0.5), 0.2, 0.25).unwrap();
        assert!(!annulus_separates(&b, &pieces));
        assert!(!annulus_separates(&a, &pieces[..1]));
    }

    #[test]
    fn interval_straddling_center_is_not_in_outside() {
        // The segment passes through the band on both sides of the center.
        let a = RoundAnnulus::new(c(0.0), 0.1, 0.2).unwrap();
        assert_eq!(classify_piece(&a, &iv(-1.0, 1.0)), Side::Straddles);
        assert_eq!(classify_piece(&a, &iv(0.3, 1.0)), Side::Outside);
        assert_eq!(classify_piece(&a, &iv(-0.05, 0.1)), Side::Hole);
    }

    #[test]
    fn hyperbolic_examples() {
        let u = DiskDomain::new(c(0.0), 1.0).unwrap();
        assert_eq!(u.hyperbolic_distance(c(0.0), c(0.0)).unwrap(), 0.0);
        let d = u.hyperbolic_distance(c(0.0), c(0.5)).unwrap();
        assert!((d - 3f64.ln()).abs() < 1e-15);
        assert!(matches!(u.hyperbolic_distance(c(1.0), c(0.0)), Err(Error::Domain { .. })));
        let z = Complex64::new(0.3, -0.4);
        let w = Complex64::new(-0.2, 0.7);
        assert_eq!(u.hyperbolic_distance(z, w).unwrap(), u.hyperbolic_distance(w, z).unwrap());
    }

    #[test]
    fn hyperbolic_scales_with_domain() {
        // Affine normalization: Δ(1/2, 0.7) behaves like the unit disk.
        let u = DiskDomain::new(c(0.5), 0.7).unwrap();
        let d = u.hyperbolic_distance(c(0.5), c(0.5 + 0.35)).unwrap();
        assert!((d - 3f64.ln()).abs() < 1e-14);
    }

    fn dyadic_points() -> Vec<Point> {
        std::iter::once(c(0.0)).chain((1..=20).map(|n| c(2f64.powi(-n)))).collect()
    }

    #[test]
    fn two_point_search_reaches_grid_extremes() {
        let radii: Vec<f64> = (0..=40).map(|k| 2f64.powi(-k)).collect();
        let best = best_separating_annulus_search(&[c(0.0), c(1.0)], c(0.0), &[c(0.0)], &radii).unwrap();
        assert_eq!(best.inner, 2f64.powi(-40));
        assert_eq!(best.outer, 1.0);
    }

    #[test]
    fn middle_hole_point_search() {
        let pts = [c(0.0), c(0.5), c(1.0)];
        let centers: Vec<Point> = (-5..=5).map(|k| c(0.5 + 0.01 * k as f64)).collect();
        let radii: Vec<f64> = (1..=200).map(|k| k as f64 * 0.005).collect();
        let a = best_separating_annulus_search(&pts, c(0.5), &centers, &radii).unwrap();
        assert!(a.hole().contains_point(c(0.5)));
        let encl: Vec<Enclosure> = pts.iter().map(|p| Enclosure::Disk(ClosedDisk::singleton(*p))).collect();
        assert!(annulus_separates(&a, &encl));
        // Exhaustive check of every grid candidate agrees with the optimum.
        let mut best = f64::NEG_INFINITY;
        for &ctr in &centers {
            for &r in &radii {
                for &big in &radii {
                    if big <= r {
                        continue;
                    }
                    let cand = RoundAnnulus::new(ctr, r, big).unwrap();
                    if cand.hole().contains_point(c(0.5)) && annulus_separates(&cand, &encl) {
                        best = best.max(cand.modulus().unwrap());
                    }
                }
            }
        }
        assert!((a.modulus().unwrap() - best).abs() < 1e-12);
    }

    #[test]
    fn dyadic_closure_centered_bound_is_log2() {
        // Radii no finer than the last point, so the truncated tail is not exploited.
        let radii: Vec<f64> = (0..=20).map(|k| 2f64.powi(-k)).collect();
        let best = best_separating_annulus_search(&dyadic_points(), c(0.0), &[c(0.0)], &radii).unwrap();
        assert!((best.modulus().unwrap() - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn dyadic_closure_off_center_exceeds_log2() {
        // Centered at 2^-(k+1) with r = 2^-(k+1), R = 3·2^-(k+1): modulus log 3.
        let center = c(2f64.powi(-4));
        let radii = [2f64.powi(-4), 3.0 * 2f64.powi(-4)];
        let best = best_separating_annulus_search(&dyadic_points(), c(0.0), &[center], &radii).unwrap();
        assert!((best.modulus().unwrap() - 3f64.ln()).abs() < 1e-15);
    }
}
