//! Built-in system families.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ClosedDisk, DiskDomain, Enclosure, RealInterval};
use crate::maps::{compose, AffineMap, MapExpr};
use crate::nifs::{Stage, SystemSpec};
use crate::seqlang::SeqRule;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeedMode {
    /// Seed `[0, 1]`, exact interval arithmetic.
    Interval,
    /// Seed `Δ̄(1/2, 0.6)`.
    Disk,
}

/// Domain `Δ(1/2, 0.7)` shared by the real Cantor-type families.
pub fn cantor_domain() -> DiskDomain {
    DiskDomain::new(Complex64::new(0.5, 0.0), 0.7).expect("valid domain")
}

/// The disk `Δ̄(1/2, 0.6)`.
pub fn cantor_hull() -> ClosedDisk {
    ClosedDisk::new(Complex64::new(0.5, 0.0), 0.6).expect("valid disk")
}

fn cantor_seed(mode: SeedMode) -> Enclosure {
    match mode {
        SeedMode::Interval => Enclosure::Interval(RealInterval { lo: 0.0, hi: 1.0 }),
        SeedMode::Disk => Enclosure::Disk(cantor_hull()),
    }
}

/// The `m` maps `z ↦ a·z + (i−1)(1−a)/(m−1)`, sending `[0,1]` onto `m`
/// equally spaced subintervals of length `a`.
pub fn cantor_stage(m: u32, a: f64) -> Result<Stage> {
    if m < 2 {
        return Err(Error::Parameter(format!("need at least 2 maps, got m = {m}")));
    }
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::Parameter(format!("contraction ratio must lie in (0, 1), got {a}")));
    }
    let step = (1.0 - a) / f64::from(m - 1);
    Stage::from_maps(
        (0..m).map(|i| AffineMap::real(a, f64::from(i) * step).map(MapExpr::from)).collect::<Result<Vec<_>>>()?,
    )
}

/// Cantor-type system with `m` maps and ratio `a_j` at stage `j`.
pub fn cantor(m: u32, a_rule: &SeqRule, seed: SeedMode, horizon: usize) -> Result<SystemSpec> {
    SystemSpec::from_rule(
        cantor_domain(),
        cantor_seed(seed),
        Some(cantor_hull()),
        horizon,
        format!("cantor(m={m}, a_j={})", describe(a_rule)),
        |j| cantor_stage(m, a_rule.evaluate(j)?),
    )
}

/// The generators `f_1(z) = z/3`, `f_2(z) = (z+2)/3`, `f_3(z) = (z−1/2)/3 + 1/2`.
pub fn gapped_generators() -> [AffineMap; 3] {
    let third = 1.0 / 3.0;
    [
        AffineMap::real(third, 0.0).expect("valid"),
        AffineMap::real(third, 2.0 / 3.0).expect("valid"),
        AffineMap::real(third, 0.5 - 0.5 * third).expect("valid"),
    ]
}

/// Stage `{f_1 ∘ f_3^l, f_2 ∘ f_3^l}`.
pub fn gapped_stage(l: u32) -> Result<Stage> {
    let [f1, f2, f3] = gapped_generators().map(MapExpr::from);
    let mut inner = MapExpr::identity();
    for _ in 0..l {
        inner = compose(&f3, &inner);
    }
    Stage::from_maps([compose(&f1, &inner), compose(&f2, &inner)])
}

fn integral(v: f64, j: usize) -> Result<u32> {
    if v >= 1.0 && v.fract() == 0.0 && v <= f64::from(u32::MAX) {
        Ok(v as u32)
    } else {
        Err(Error::Parameter(format!("l_{j} must be a positive integer, got {v}")))
    }
}

/// Two-map system with stages `{f_1 ∘ f_3^{l_j}, f_2 ∘ f_3^{l_j}}`.
pub fn gapped(l_rule: &SeqRule, seed: SeedMode, horizon: usize) -> Result<SystemSpec> {
    SystemSpec::from_rule(
        cantor_domain(),
        cantor_seed(seed),
        Some(cantor_hull()),
        horizon,
        format!("gapped(l_j={})", describe(l_rule)),
        |j| gapped_stage(integral(l_rule.evaluate(j)?, j)?),
    )
}

/// System from explicit affine coefficient lists, one list of `(a, b)` pairs
/// per stage.
pub fn explicit(
    domain: DiskDomain,
    seed: Enclosure,
    hull: Option<ClosedDisk>,
    stages: &[Vec<(Complex64, Complex64)>],
) -> Result<SystemSpec> {
    let stages = stages
        .iter()
        .map(|maps| {
            Stage::from_maps(
                maps.iter().map(|(a, b)| AffineMap::new(*a, *b).map(MapExpr::from)).collect::<Result<Vec<_>>>()?,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    SystemSpec::new(domain, seed, hull, stages, "explicit")
}

fn describe(rule: &SeqRule) -> String {
    match rule {
        SeqRule::Expr(e) => e.to_string(),
        SeqRule::Constant(v) => v.to_string(),
        other => format!("{other:?}"),
    }
}
