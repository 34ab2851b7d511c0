//! Non-autonomous Julia sets of `P_j = a_j·f` with `f(z) = a z² + c`.
//!
//! When `|c| > 1` and `|a| − |c| > 1` the filled set
//! `{z : P_j ∘ ⋯ ∘ P_1(z) ∈ 𝔻̄ for all j}` is the limit set of the system
//! whose stage `j` consists of the two inverse branches
//! `z ↦ ±√((z/a_j − c)/a)` on `Δ(0, 1+ε)` with seed `𝔻̄`.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::ops::RangeInclusive;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Pareto};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certify::{separation_report, SeparationReport};
use crate::error::{Error, Result};
use crate::geometry::{ClosedDisk, DiskDomain, Enclosure, Point};
use crate::maps::{MapExpr, Sign, SqrtBranch};
use crate::nifs::{Stage, SystemSpec};
use crate::seqlang::SeqRule;

/// Default radius excess of the domain `Δ(0, 1+ε)`.
pub const DEFAULT_EPS: f64 = 0.05;

/// Orbits beyond this modulus are abandoned (they have already escaped).
const OVERFLOW_GUARD: f64 = 1e10;

/// Ratio growth factor that marks a prefix as growing.
pub const GROWTH_FACTOR: f64 = 10.0;

#[derive(Clone, Debug, PartialEq)]
pub struct PolySeqSpec {
    pub quad_a: Complex64,
    pub quad_c: Complex64,
    coefficients: Vec<Complex64>,
}

impl PolySeqSpec {
    pub fn new(quad_a: Complex64, quad_c: Complex64, coefficients: Vec<Complex64>) -> Result<Self> {
        for (i, a) in coefficients.iter().enumerate() {
            if !(a.norm() > 1.0) || !a.is_finite() {
                return Err(Error::Hypothesis(format!("|a_{}| = {} must exceed 1", i + 1, a.norm())));
            }
        }
        Ok(Self { quad_a, quad_c, coefficients })
    }

    /// Real coefficients `a_j` from a rule.
    pub fn from_rule(quad_a: Complex64, quad_c: Complex64, rule: &SeqRule, horizon: usize) -> Result<Self> {
        let values = rule.materialize(horizon)?;
        Self::new(quad_a, quad_c, values.into_iter().map(|v| Complex64::new(v, 0.0)).collect())
    }

    pub fn horizon(&self) -> usize {
        self.coefficients.len()
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    /// `P_j(z)`.
    pub fn step(&self, j: usize, z: Complex64) -> Complex64 {
        self.coefficients[j - 1] * (self.quad_a * z * z + self.quad_c)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub mod_c: f64,
    pub mod_a_minus_mod_c: f64,
    pub crit_value_outside: bool,
    pub preimage_inside: bool,
    pub pass: bool,
}

pub fn check_hypotheses(quad_a: Complex64, quad_c: Complex64) -> HypothesisReport {
    let mod_c = quad_c.norm();
    let gap = quad_a.norm() - mod_c;
    let crit_value_outside = mod_c > 1.0;
    let preimage_inside = gap > 1.0;
    HypothesisReport {
        mod_c,
        mod_a_minus_mod_c: gap,
        crit_value_outside,
        preimage_inside,
        pass: crit_value_outside && preimage_inside,
    }
}

fn require_hypotheses(spec: &PolySeqSpec) -> Result<()> {
    let h = check_hypotheses(spec.quad_a, spec.quad_c);
    if h.pass {
        Ok(())
    } else {
        Err(Error::Hypothesis(format!(
            "need |c| > 1 and |a| - |c| > 1, got |c| = {}, |a| - |c| = {}",
            h.mod_c, h.mod_a_minus_mod_c
        )))
    }
}

/// Pixel grid over an axis-aligned window. Pixel centres are sampled; row 0
/// is the top edge (`y_max`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EscapeGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
    pub max_stages: usize,
    pub membership_radius: f64,
}

impl EscapeGrid {
    pub fn square(half_width: f64, n: usize, max_stages: usize) -> Self {
        Self {
            x_min: -half_width,
            x_max: half_width,
            y_min: -half_width,
            y_max: half_width,
            nx: n,
            ny: n,
            max_stages,
            membership_radius: 1.0,
        }
    }

    pub fn pixel_width(&self) -> f64 {
        (self.x_max - self.x_min) / self.nx as f64
    }

    pub fn pixel_height(&self) -> f64 {
        (self.y_max - self.y_min) / self.ny as f64
    }

    pub fn pixel_diagonal(&self) -> f64 {
        self.pixel_width().hypot(self.pixel_height())
    }

    pub fn pixel_center(&self, row: usize, col: usize) -> Point {
        Complex64::new(
            self.x_min + (col as f64 + 0.5) * self.pixel_width(),
            self.y_max - (row as f64 + 0.5) * self.pixel_height(),
        )
    }

    fn validate(&self, horizon: usize) -> Result<()> {
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::Parameter("grid resolution must be at least 1×1".into()));
        }
        if !(self.x_min < self.x_max && self.y_min < self.y_max) {
            return Err(Error::Parameter("grid window must have positive width and height".into()));
        }
        if !(self.membership_radius > 0.0) {
            return Err(Error::Parameter("membership radius must be positive".into()));
        }
        if self.max_stages > horizon {
            return Err(Error::Horizon { requested: self.max_stages, horizon });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Cell {
    In,
    /// First stage whose partial composition leaves the membership disk.
    Out(u32),
}

/// Row-major classification matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Classification {
    pub grid: EscapeGrid,
    pub cells: Vec<Cell>,
}

impl Classification {
    pub fn get(&self, row: usize, col: usize) -> Cell {
        self.cells[row * self.grid.nx + col]
    }

    pub fn in_count(&self) -> usize {
        self.cells.iter().filter(|c| **c == Cell::In).count()
    }

    /// Centres of IN pixels.
    pub fn in_points(&self) -> Vec<Point> {
        (0..self.grid.ny)
            .flat_map(|r| (0..self.grid.nx).map(move |c| (r, c)))
            .filter(|&(r, c)| self.get(r, c) == Cell::In)
            .map(|(r, c)| self.grid.pixel_center(r, c))
            .collect()
    }
}

/// Classifies one point with `k` stages.
pub fn classify_point(spec: &PolySeqSpec, z: Point, k: usize, radius: f64) -> Cell {
    if z.norm() > radius {
        return Cell::Out(1);
    }
    let mut w = z;
    for j in 1..=k {
        w = spec.step(j, w);
        let m = w.norm();
        if m > radius || m > OVERFLOW_GUARD || !m.is_finite() {
            return Cell::Out(j as u32);
        }
    }
    Cell::In
}

pub fn forward_classify(spec: &PolySeqSpec, grid: &EscapeGrid) -> Result<Classification> {
    require_hypotheses(spec)?;
    grid.validate(spec.horizon())?;
    let cells = (0..grid.nx * grid.ny)
        .into_par_iter()
        .map(|i| {
            let z = grid.pixel_center(i / grid.nx, i % grid.nx);
            classify_point(spec, z, grid.max_stages, grid.membership_radius)
        })
        .collect();
    Ok(Classification { grid: *grid, cells })
}

fn branch(spec: &PolySeqSpec, prescale: Complex64, sign: Sign) -> Result<SqrtBranch> {
    SqrtBranch::new(spec.quad_a, spec.quad_c, prescale, sign)
}

/// The inverse-branch system with seed `𝔻̄` on `Δ(0, 1+eps)`. Labels 1 and 2
/// are the `+` and `−` branches.
pub fn inverse_ifs(spec: &PolySeqSpec, eps: f64) -> Result<SystemSpec> {
    require_hypotheses(spec)?;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Parameter(format!("eps must be positive, got {eps}")));
    }
    let unit = ClosedDisk::new(Complex64::new(0.0, 0.0), 1.0)?;
    let domain = DiskDomain::new(Complex64::new(0.0, 0.0), 1.0 + eps)?;
    let descriptor = format!("julia(a={}, c={}, eps={eps})", spec.quad_a, spec.quad_c);
    SystemSpec::from_rule(domain, Enclosure::Disk(unit), None, spec.horizon(), descriptor, |j| {
        let prescale = spec.coefficients[j - 1].inv();
        Stage::new([
            (1, MapExpr::from(branch(spec, prescale, Sign::Plus)?)),
            (2, MapExpr::from(branch(spec, prescale, Sign::Minus)?)),
        ])
    })
    .map_err(|e| match e {
        Error::Assembly(msg) => Error::Assembly(format!("{msg}; try a smaller eps than {eps}")),
        other => other,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Trend {
    Growing,
    Bounded,
}

impl Trend {
    pub fn as_str(self) -> &'static str {
        match self {
            Trend::Growing => "GROWING",
            Trend::Bounded => "BOUNDED",
        }
    }
}

/// A prefix is growing when some stage's ratio is at least
/// [`GROWTH_FACTOR`] times the smallest ratio at an earlier stage.
pub fn trend_of(ratios: &[f64]) -> Trend {
    let mut min = f64::INFINITY;
    for &r in ratios {
        if r >= GROWTH_FACTOR * min {
            return Trend::Growing;
        }
        min = min.min(r);
    }
    Trend::Bounded
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DichotomyReport {
    pub a_moduli: Vec<f64>,
    pub reports: Vec<SeparationReport>,
    pub trend: Trend,
    pub delta0: f64,
    pub prefix_length: usize,
}

impl DichotomyReport {
    pub fn ratios(&self) -> Vec<f64> {
        self.reports.iter().map(|r| r.ratio).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("j,a_j_modulus,b_lower,delta_lower,eta_upper,ratio\n");
        for (r, m) in self.reports.iter().zip(&self.a_moduli) {
            let _ = writeln!(
                out,
                "{},{:e},{:e},{:e},{:e},{:e}",
                r.stage, m, r.b_lower, r.delta_lower, r.eta_upper, r.ratio
            );
        }
        out
    }
}

/// Estimate of `δ₀ = dist(f_+(𝔻̄), f_−(𝔻̄))` from dense boundary samples.
pub fn delta0_estimate(quad_a: Complex64, quad_c: Complex64, samples: usize) -> Result<f64> {
    let one = Complex64::new(1.0, 0.0);
    let plus: MapExpr = SqrtBranch::new(quad_a, quad_c, one, Sign::Plus)?.into();
    let pts: Vec<Point> = ClosedDisk::new(Complex64::new(0.0, 0.0), 1.0)?
        .boundary_samples(samples)
        .map(|z| plus.apply(z))
        .collect::<Result<_>>()?;
    // f_− = −f_+, so the distance is min |f_+(z) + f_+(w)|.
    Ok(pts
        .par_iter()
        .map(|p| pts.iter().map(|q| (p + q).norm()).fold(f64::INFINITY, f64::min))
        .reduce(|| f64::INFINITY, f64::min))
}

pub fn dichotomy_report(spec: &PolySeqSpec, stages: RangeInclusive<usize>) -> Result<DichotomyReport> {
    let sys = inverse_ifs(spec, DEFAULT_EPS)?;
    dichotomy_for_system(spec, &sys, stages)
}

fn dichotomy_for_system(
    spec: &PolySeqSpec,
    sys: &SystemSpec,
    stages: RangeInclusive<usize>,
) -> Result<DichotomyReport> {
    let js: Vec<usize> = stages.collect();
    let reports = js.par_iter().map(|&j| separation_report(sys, j)).collect::<Result<Vec<_>>>()?;
    let a_moduli = js.iter().map(|&j| spec.coefficients[j - 1].norm()).collect();
    let ratios: Vec<f64> = reports.iter().map(|r| r.ratio).collect();
    Ok(DichotomyReport {
        a_moduli,
        trend: trend_of(&ratios),
        prefix_length: reports.len(),
        reports,
        delta0: delta0_estimate(spec.quad_a, spec.quad_c, 2048)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModulusLaw {
    /// `|a|` distributed like the area measure on `{min < |z| < max}`.
    AnnularUniform { min_mod: f64, max_mod: f64 },
    /// `|a| = 1 + scale·L` with `L` Lomax(α), i.e. a Pareto(1, α) draw minus 1.
    OnePlusPareto { alpha: f64, scale: f64 },
}

impl ModulusLaw {
    fn validate(&self) -> Result<()> {
        match *self {
            ModulusLaw::AnnularUniform { min_mod, max_mod }
                if min_mod >= 1.0 && min_mod < max_mod && max_mod.is_finite() =>
            {
                Ok(())
            }
            ModulusLaw::OnePlusPareto { alpha, scale }
                if alpha > 0.0 && scale > 0.0 && alpha.is_finite() && scale.is_finite() =>
            {
                Ok(())
            }
            other => Err(Error::Parameter(format!("invalid distribution {other:?}"))),
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        loop {
            let m = match *self {
                ModulusLaw::AnnularUniform { min_mod, max_mod } => {
                    let (lo, hi) = (min_mod * min_mod, max_mod * max_mod);
                    (lo + (hi - lo) * rng.random::<f64>()).sqrt()
                }
                ModulusLaw::OnePlusPareto { alpha, scale } => {
                    let p: f64 = Pareto::new(1.0, alpha).expect("validated").sample(rng);
                    1.0 + scale * (p - 1.0)
                }
            };
            if m > 1.0 && m.is_finite() {
                return m;
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomSeqSpec {
    pub distribution: ModulusLaw,
    pub seed: u64,
    pub count: usize,
    pub horizon: usize,
}

/// SplitMix64 finalizer.
pub fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed of sequence `index` under a master seed.
pub fn sub_seed(master: u64, index: u64) -> u64 {
    mix64(master ^ mix64(index))
}

impl RandomSeqSpec {
    /// Coefficients of sequence `index`: modulus from the law, uniform angle.
    pub fn sequence(&self, index: u64) -> Result<Vec<Complex64>> {
        self.distribution.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(self.seed, index));
        Ok((0..self.horizon)
            .map(|_| {
                let m = self.distribution.draw(&mut rng);
                let theta = TAU * rng.random::<f64>();
                Complex64::from_polar(m, theta)
            })
            .collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SequenceSummary {
    pub index: usize,
    pub sub_seed: u64,
    pub max_a_modulus: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub trend: Trend,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SamplingSummary {
    pub count: usize,
    pub horizon: usize,
    pub growing_fraction: f64,
    pub sequences: Vec<SequenceSummary>,
}

impl SamplingSummary {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,sub_seed,max_a_modulus,min_ratio,max_ratio,trend\n");
        for s in &self.sequences {
            let _ = writeln!(
                out,
                "{},{},{:e},{:e},{:e},{}",
                s.index,
                s.sub_seed,
                s.max_a_modulus,
                s.min_ratio,
                s.max_ratio,
                s.trend.as_str()
            );
        }
        out
    }
}

/// Runs the dichotomy experiment on `count` random sequences with the given
/// quadratic `f`.
pub fn sample_sequences(rand: &RandomSeqSpec, quad_a: Complex64, quad_c: Complex64) -> Result<SamplingSummary> {
    rand.distribution.validate()?;
    if rand.horizon == 0 {
        return Err(Error::Parameter("horizon must be at least 1".into()));
    }
    let sequences = (0..rand.count)
        .into_par_iter()
        .map(|i| {
            let coeffs = rand.sequence(i as u64)?;
            let spec = PolySeqSpec::new(quad_a, quad_c, coeffs)?;
            let sys = inverse_ifs(&spec, DEFAULT_EPS)?;
            let reports = (1..=spec.horizon()).map(|j| separation_report(&sys, j)).collect::<Result<Vec<_>>>()?;
            let ratios: Vec<f64> = reports.iter().map(|r| r.ratio).collect();
            Ok(SequenceSummary {
                index: i,
                sub_seed: sub_seed(rand.seed, i as u64),
                max_a_modulus: spec.coefficients.iter().map(|a| a.norm()).fold(0.0, f64::max),
                min_ratio: ratios.iter().copied().fold(f64::INFINITY, f64::min),
                max_ratio: ratios.iter().copied().fold(0.0, f64::max),
                trend: trend_of(&ratios),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let growing = sequences.iter().filter(|s| s.trend == Trend::Growing).count();
    Ok(SamplingSummary {
        count: rand.count,
        horizon: rand.horizon,
        growing_fraction: if rand.count == 0 { 0.0 } else { growing as f64 / rand.count as f64 },
        sequences,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Palette {
    #[default]
    Grayscale,
    Fire,
}

fn out_color(palette: Palette, j: u32, k: u32) -> [u8; 3] {
    let t = if k <= 1 { 0.0 } else { f64::from(j.saturating_sub(1).min(k - 1)) / f64::from(k - 1) };
    match palette {
        Palette::Grayscale => {
            let v = (255.0 - t * 207.0).round() as u8;
            [v, v, v]
        }
        Palette::Fire => {
            let r = 255u8;
            let g = (230.0 * (1.0 - t)).round() as u8;
            let b = (120.0 * (1.0 - t) * (1.0 - t)).round() as u8;
            [r, g, b]
        }
    }
}

/// Binary PPM (P6): IN pixels black, OUT(j) shaded by escape stage.
pub fn render(cls: &Classification, palette: Palette) -> Result<Vec<u8>> {
    if cls.cells.is_empty() {
        return Err(Error::Parameter("nothing to render".into()));
    }
    let k = cls
        .cells
        .iter()
        .map(|c| match c {
            Cell::Out(j) => *j,
            Cell::In => 1,
        })
        .max()
        .unwrap_or(1)
        .max(1);
    let mut out = format!("P6\n{} {}\n255\n", cls.grid.nx, cls.grid.ny).into_bytes();
    out.reserve(cls.cells.len() * 3);
    for c in &cls.cells {
        match c {
            Cell::In => out.extend_from_slice(&[0, 0, 0]),
            Cell::Out(j) => out.extend_from_slice(&out_color(palette, *j, k)),
        }
    }
    Ok(out)
}
