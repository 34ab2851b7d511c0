//! Separation statistics and pointwise-thinness certificates.
//!
//! For a stage `j` with pieces `φ_i(X)` the statistics are
//! `b_j = min_i dist(φ_i(X), ∂X)`, `δ_j = min_{a≠b} dist(φ_a(X), φ_b(X))` and
//! `η_j = max_i diam φ_i(X)`. Given `c` with `δ_j ≤ c·b_j`, the round annulus
//! `Ann(z; η_j, δ_j/c)` around a piece centre `z` separates the stage, and
//! its image under the prefix map `φ_{ω_1⋯ω_{j−1}}` separates level `j` of
//! the system. A certificate records a run of such annuli with growing
//! moduli and shrinking diameters.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::geometry::{
    annulus_separates, classify_piece, seed_clearance, set_distance_lower, Enclosure, Point, RoundAnnulus, Side,
};
use crate::maps::{AffineMap, MapExpr};
use crate::nifs::{SeparationOutcome, Stage, SystemSpec, Word};
use crate::DEFAULT_SAMPLES;

/// Minimum `δ` counted as strong separation.
pub const SEPARATION_EPS: f64 = 1e-12;

/// Relative pad on push-forward radii against rounding.
const PUSH_PAD: f64 = 1e-12;

/// Above this many level pieces, verification descends the word tree
/// instead of enumerating.
const FLAT_VERIFY_LIMIT: u128 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeparationReport {
    pub stage: usize,
    pub b_lower: f64,
    pub delta_lower: f64,
    pub eta_upper: f64,
    pub ratio: f64,
    pub strong_separation: bool,
    /// Fewer than two maps, so `δ` is undefined (reported as 0).
    pub degenerate: bool,
}

pub fn separation_report(sys: &SystemSpec, j: usize) -> Result<SeparationReport> {
    let pieces: Vec<Enclosure> = sys.pieces(j, 1)?.into_iter().map(|p| p.enclosure).collect();
    report_from_enclosures(j, &pieces, sys.seed())
}

pub(crate) fn report_from_enclosures(j: usize, pieces: &[Enclosure], seed: &Enclosure) -> Result<SeparationReport> {
    let mut b = f64::INFINITY;
    let mut eta: f64 = 0.0;
    for p in pieces {
        b = b.min(seed_clearance(p, seed)?);
        eta = eta.max(p.diameter_upper());
    }
    let degenerate = pieces.len() < 2;
    let mut delta = if degenerate { 0.0 } else { f64::INFINITY };
    for (i, p) in pieces.iter().enumerate() {
        for q in &pieces[i + 1..] {
            delta = delta.min(set_distance_lower(p, q));
        }
    }
    let ratio = if eta > 0.0 { delta / eta } else { f64::INFINITY };
    Ok(SeparationReport {
        stage: j,
        b_lower: b,
        delta_lower: delta,
        eta_upper: eta,
        ratio,
        strong_separation: !degenerate && delta > SEPARATION_EPS,
        degenerate,
    })
}

/// `c = diam(X) / min_n b_n`.
pub fn default_c(reports: &[SeparationReport], seed_diameter: f64) -> Result<f64> {
    let min_b = reports.iter().map(|r| r.b_lower).fold(f64::INFINITY, f64::min);
    if reports.is_empty() {
        return Err(Error::NoValidC("no stage reports".into()));
    }
    if !(min_b > 0.0) {
        let j = reports.iter().find(|r| !(r.b_lower > 0.0)).map_or(0, |r| r.stage);
        return Err(Error::NoValidC(format!("stage {j} has a piece touching the seed boundary (b = {min_b:e})")));
    }
    Ok(seed_diameter / min_b)
}

/// How the certified word `ω` is chosen.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum WordRule {
    /// Smallest label at every stage.
    Smallest,
    /// Labels `ω_1, ω_2, …`; stages past the list use the smallest label.
    Explicit(Vec<u32>),
}

impl WordRule {
    fn label(&self, stage: &Stage, j: usize) -> Result<u32> {
        match self {
            WordRule::Smallest => Ok(stage.smallest_label()),
            WordRule::Explicit(labels) => match labels.get(j - 1) {
                Some(l) if stage.index_of(*l).is_some() => Ok(*l),
                Some(l) => Err(Error::Parameter(format!("word label {l} is not in stage {j}"))),
                None => Ok(stage.smallest_label()),
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Certified,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificateEntry {
    pub n: usize,
    pub stage: usize,
    pub label: u32,
    pub base: RoundAnnulus,
    pub pushed: RoundAnnulus,
    pub modulus_lower: f64,
    pub diameter: f64,
    pub separation_verified: bool,
}

/// A subsequence stage that produced no entry.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DroppedEntry {
    pub n: usize,
    pub stage: usize,
    pub reason: String,
    /// `log(δ/(c·η))`, which is not positive for a degenerate base annulus.
    pub candidate_modulus: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThinnessCertificate {
    pub system: String,
    pub c: f64,
    pub word_rule: WordRule,
    pub word: Vec<u32>,
    pub entries: Vec<CertificateEntry>,
    pub verdict: Verdict,
    pub prefix_length: usize,
    pub dropped: Vec<DroppedEntry>,
}

/// Length of the leading run of entries that are verified, with strictly
/// increasing moduli and strictly decreasing diameters.
fn valid_prefix(entries: &[CertificateEntry]) -> usize {
    let mut n = 0;
    for (i, e) in entries.iter().enumerate() {
        if !e.separation_verified {
            break;
        }
        if i > 0 {
            let p = &entries[i - 1];
            if !(e.modulus_lower > p.modulus_lower && e.diameter < p.diameter) {
                break;
            }
        }
        n += 1;
    }
    n
}

fn verdict_for(entries: &[CertificateEntry]) -> (Verdict, usize) {
    let prefix = valid_prefix(entries);
    if prefix >= 3 && prefix == entries.len() {
        (Verdict::Certified, prefix)
    } else {
        (Verdict::Inconclusive, prefix)
    }
}

/// Image of a round annulus: exact for affine maps, otherwise a round
/// annulus certified to lie inside the true image `m(A)`.
pub fn pushforward_annulus(m: &MapExpr, a: &RoundAnnulus, hole_witness: Point) -> Result<RoundAnnulus> {
    pushforward_with_samples(m, a, hole_witness, DEFAULT_SAMPLES)
}

pub fn pushforward_with_samples(
    m: &MapExpr,
    a: &RoundAnnulus,
    hole_witness: Point,
    samples: usize,
) -> Result<RoundAnnulus> {
    if !a.hole().contains_point(hole_witness) {
        return Err(Error::Parameter("hole witness is not in the hole of the annulus".into()));
    }
    if let Some(f) = m.as_affine() {
        let s = f.a.norm();
        return RoundAnnulus::new(f.apply(a.center), s * a.inner, s * a.outer);
    }
    let outer_disk = a.outer_disk();
    let lip = m.derivative_sup_bound(&outer_disk)?;
    let w0 = m.apply(hole_witness)?;
    let mut rho_in: f64 = 0.0;
    for z in a.hole().boundary_samples(samples) {
        rho_in = rho_in.max((m.apply(z)? - w0).norm());
    }
    let mut rho_out = f64::INFINITY;
    for z in outer_disk.boundary_samples(samples) {
        rho_out = rho_out.min((m.apply(z)? - w0).norm());
    }
    let rho_in = (rho_in + lip * PI * a.inner / samples as f64) * (1.0 + PUSH_PAD);
    let rho_out = (rho_out - lip * PI * a.outer / samples as f64) * (1.0 - PUSH_PAD);
    if !(rho_out > rho_in) || !(rho_in > 0.0) {
        return Err(Error::DegeneratePush { inner: rho_in, outer: rho_out });
    }
    RoundAnnulus::new(w0, rho_in, rho_out)
}

fn prefix_map(sys: &SystemSpec, word: &[u32], j: usize) -> Result<MapExpr> {
    sys.word_map(&Word { start: 1, labels: word[..j - 1].to_vec() })
}

/// Separation of `pushed = φ_{word[..j-1]}(base)` from the level-`j` pieces.
fn separation_at(
    sys: &SystemSpec,
    base: &RoundAnnulus,
    pushed: &RoundAnnulus,
    word: &[u32],
    j: usize,
) -> Result<SeparationOutcome> {
    match sys.focused_separation(base, &word[..j - 1], j)? {
        Some(out) => Ok(out),
        None => sys.separation_descent(pushed, j),
    }
}

/// Checks that `pushed` is the affine image of `base`, up to rounding.
fn consistent_push(m: &AffineMap, base: &RoundAnnulus, pushed: &RoundAnnulus) -> bool {
    let s = m.a.norm();
    let close = |x: f64, y: f64| (x - y).abs() <= 1e-9 * y.abs();
    let slack = 1e-9 * pushed.outer + 64.0 * f64::EPSILON * (s * base.center.norm() + m.b.norm());
    close(pushed.inner, s * base.inner)
        && close(pushed.outer, s * base.outer)
        && (pushed.center - m.apply(base.center)).norm() <= slack
}

/// Builds a certificate along `subsequence` (strictly increasing stage
/// indices) with separation constant `c`.
pub fn build_certificate(
    sys: &SystemSpec,
    subsequence: &[usize],
    c: f64,
    word_rule: &WordRule,
) -> Result<ThinnessCertificate> {
    if subsequence.is_empty() {
        return Err(Error::Precondition("empty subsequence".into()));
    }
    if subsequence.windows(2).any(|w| w[0] >= w[1]) || subsequence[0] == 0 {
        return Err(Error::Precondition("subsequence must be strictly increasing from 1".into()));
    }
    let last = *subsequence.last().expect("nonempty");
    if last > sys.horizon() {
        return Err(Error::Horizon { requested: last, horizon: sys.horizon() });
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Precondition(format!("c must be positive and finite, got {c}")));
    }
    let word = (1..=last).map(|j| word_rule.label(sys.stage(j)?, j)).collect::<Result<Vec<u32>>>()?;

    let reports = subsequence.par_iter().map(|&j| separation_report(sys, j)).collect::<Result<Vec<_>>>()?;
    for (idx, r) in reports.iter().enumerate() {
        let n = idx + 1;
        if r.degenerate {
            return Err(Error::Precondition(format!("n = {n}: stage {} has fewer than two maps", r.stage)));
        }
        if r.delta_lower > c * r.b_lower {
            return Err(Error::Precondition(format!(
                "n = {n}: δ = {:e} exceeds c·b = {:e} at stage {}",
                r.delta_lower,
                c * r.b_lower,
                r.stage
            )));
        }
    }

    let results = reports
        .par_iter()
        .enumerate()
        .map(|(idx, r)| build_entry(sys, &word, idx + 1, r, c))
        .collect::<Result<Vec<_>>>()?;
    let mut entries = Vec::new();
    let mut dropped = Vec::new();
    for res in results {
        match res {
            Ok(e) => entries.push(e),
            Err(d) => dropped.push(d),
        }
    }
    let (verdict, prefix_length) = verdict_for(&entries);
    Ok(ThinnessCertificate {
        system: sys.descriptor().to_string(),
        c,
        word_rule: word_rule.clone(),
        word,
        entries,
        verdict,
        prefix_length,
        dropped,
    })
}

/// Certificate with `c` from [`default_c`] over the subsequence's stages.
pub fn build_default_certificate(
    sys: &SystemSpec,
    subsequence: &[usize],
    word_rule: &WordRule,
) -> Result<ThinnessCertificate> {
    let reports = subsequence.iter().map(|&j| separation_report(sys, j)).collect::<Result<Vec<_>>>()?;
    let c = default_c(&reports, sys.seed().diameter_upper())?;
    build_certificate(sys, subsequence, c, word_rule)
}

fn build_entry(
    sys: &SystemSpec,
    word: &[u32],
    n: usize,
    r: &SeparationReport,
    c: f64,
) -> Result<std::result::Result<CertificateEntry, DroppedEntry>> {
    let j = r.stage;
    let label = word[j - 1];
    let drop = |reason: String, candidate: Option<f64>| {
        Ok(Err(DroppedEntry { n, stage: j, reason, candidate_modulus: candidate }))
    };
    let outer = r.delta_lower / c;
    let candidate = (outer / r.eta_upper).ln();
    if !(r.eta_upper < outer) {
        return drop(
            format!("degenerate base annulus: η = {:e} is not below δ/c = {:e}", r.eta_upper, outer),
            Some(candidate),
        );
    }
    let stage = sys.stage(j)?;
    let piece = crate::nifs::image_enclosure(stage.map(label).expect("label validated"), sys.seed(), sys.samples())?;
    let z = piece.center();
    let base = RoundAnnulus::new(z, r.eta_upper, outer)?;
    let m = prefix_map(sys, word, j)?;
    let pushed = match pushforward_with_samples(&m, &base, z, sys.samples()) {
        Ok(a) => a,
        Err(e @ (Error::DegeneratePush { .. } | Error::Branch { .. })) => {
            return drop(format!("push-forward failed: {e}"), Some(candidate))
        }
        Err(e) => return Err(e),
    };
    let base_modulus = base.modulus()?;
    let modulus_lower = pushed.modulus()?.min(base_modulus);
    let outcome = separation_at(sys, &base, &pushed, word, j)?;
    Ok(Ok(CertificateEntry {
        n,
        stage: j,
        label,
        base,
        pushed,
        modulus_lower,
        diameter: pushed.diameter(),
        separation_verified: outcome.separates(),
    }))
}

/// Pushes a certificate for `sys` forward through the map with `label` of a
/// stage prepended to it (`extended = sys.prepend_stage(..)`). Separation is
/// re-tested in the extended system.
pub fn pushforward_certificate(
    extended: &SystemSpec,
    cert: &ThinnessCertificate,
    label: u32,
) -> Result<ThinnessCertificate> {
    let stage = extended.stage(1)?;
    let g = stage.map(label).ok_or_else(|| Error::Parameter(format!("label {label} is not in the prepended stage")))?;
    let mut word = vec![label];
    word.extend_from_slice(&cert.word);
    let entries = cert
        .entries
        .par_iter()
        .map(|e| {
            let pushed = pushforward_with_samples(g, &e.pushed, e.pushed.center, extended.samples())?;
            let outcome = separation_at(extended, &e.base, &pushed, &word, e.stage + 1)?;
            Ok(CertificateEntry {
                n: e.n,
                stage: e.stage + 1,
                label: e.label,
                base: e.base,
                pushed,
                modulus_lower: pushed.modulus()?.min(e.modulus_lower),
                diameter: pushed.diameter(),
                separation_verified: e.separation_verified && outcome.separates(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (verdict, prefix_length) = verdict_for(&entries);
    Ok(ThinnessCertificate {
        system: extended.descriptor().to_string(),
        c: cert.c,
        word_rule: WordRule::Explicit(word.clone()),
        word,
        entries,
        verdict,
        prefix_length,
        dropped: cert.dropped.clone(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verification {
    pub valid: bool,
    pub diagnostics: Vec<String>,
}

impl Verification {
    pub fn first_failure(&self) -> Option<&str> {
        if self.valid {
            None
        } else {
            self.diagnostics.last().map(String::as_str)
        }
    }
}

/// Re-checks a certificate against freshly computed pieces of `sys`.
pub fn verify_certificate(sys: &SystemSpec, cert: &ThinnessCertificate) -> Verification {
    let mut diagnostics = Vec::new();
    let valid = match verify_inner(sys, cert, &mut diagnostics) {
        Ok(()) => true,
        Err(msg) => {
            diagnostics.push(msg);
            false
        }
    };
    Verification { valid, diagnostics }
}

fn verify_inner(
    sys: &SystemSpec,
    cert: &ThinnessCertificate,
    log: &mut Vec<String>,
) -> std::result::Result<(), String> {
    if cert.entries.len() < 3 {
        return Err(format!("insufficient entries: {} (need at least 3)", cert.entries.len()));
    }
    for (i, e) in cert.entries.iter().enumerate() {
        let tag = format!("entry n = {} (stage {})", e.n, e.stage);
        if e.stage == 0 || e.stage > sys.horizon() || e.stage > cert.word.len() {
            return Err(format!("{tag}: stage outside the system horizon or the word"));
        }
        if cert.word[e.stage - 1] != e.label {
            return Err(format!("{tag}: label {} does not match the word", e.label));
        }
        let base_mod = e.base.modulus().map_err(|err| format!("{tag}: base annulus: {err}"))?;
        let pushed_mod = e.pushed.modulus().map_err(|err| format!("{tag}: pushed annulus: {err}"))?;
        if !(e.base.inner < e.base.outer && e.pushed.inner < e.pushed.outer) {
            return Err(format!("{tag}: degenerate annulus"));
        }
        if e.modulus_lower > base_mod.min(pushed_mod) * (1.0 + 1e-12) {
            return Err(format!(
                "{tag}: claimed modulus {:e} exceeds the annulus modulus {:e}",
                e.modulus_lower,
                base_mod.min(pushed_mod)
            ));
        }
        if (e.diameter - e.pushed.diameter()).abs() > 1e-12 * e.diameter.abs().max(f64::MIN_POSITIVE) {
            return Err(format!("{tag}: diameter {:e} does not match the pushed annulus", e.diameter));
        }
        if !e.separation_verified {
            return Err(format!("{tag}: separation not verified"));
        }
        let prefix = prefix_map(sys, &cert.word, e.stage).map_err(|err| format!("{tag}: {err}"))?;
        let separates = match prefix.as_affine().filter(|_| sys.stages()[..e.stage].iter().all(|s| s.is_affine())) {
            Some(m) => {
                if !consistent_push(&m, &e.base, &e.pushed) {
                    return Err(format!("{tag}: pushed annulus is not the image of the base annulus"));
                }
                let own = sys
                    .word_enclosure(&Word { start: e.stage, labels: vec![e.label] })
                    .map_err(|err| format!("{tag}: {err}"))?;
                if classify_piece(&e.base, &own) != Side::Hole {
                    return Err(format!("{tag}: the designated piece is not in the hole"));
                }
                sys.focused_separation(&e.base, &cert.word[..e.stage - 1], e.stage)
                    .map_err(|err| format!("{tag}: {err}"))?
                    .is_some_and(|o| o.separates())
            }
            None => {
                let target = Word { start: 1, labels: cert.word[..e.stage].to_vec() };
                let own = sys.word_enclosure(&target).map_err(|err| format!("{tag}: {err}"))?;
                if classify_piece(&e.pushed, &own) != Side::Hole {
                    return Err(format!("{tag}: the designated piece is not in the hole"));
                }
                let count = sys.word_count(1, e.stage).map_err(|err| format!("{tag}: {err}"))?;
                let separates = if count <= FLAT_VERIFY_LIMIT {
                    let pieces = sys
                        .pieces(1, e.stage)
                        .map_err(|err| format!("{tag}: {err}"))?
                        .into_iter()
                        .map(|p| p.enclosure)
                        .collect::<Vec<_>>();
                    annulus_separates(&e.pushed, &pieces)
                } else {
                    sys.separation_descent(&e.pushed, e.stage).map_err(|err| format!("{tag}: {err}"))?.separates()
                };
                separates
            }
        };
        if !separates {
            return Err(format!("{tag}: pushed annulus does not separate the level-{} pieces", e.stage));
        }
        if i > 0 {
            let p = &cert.entries[i - 1];
            if !(e.stage > p.stage) {
                return Err(format!("{tag}: stages are not strictly increasing"));
            }
            if !(e.modulus_lower > p.modulus_lower) {
                return Err(format!(
                    "{tag}: modulus {:e} does not exceed the previous {:e}",
                    e.modulus_lower, p.modulus_lower
                ));
            }
            if !(e.diameter < p.diameter) {
                return Err(format!("{tag}: diameter {:e} is not below the previous {:e}", e.diameter, p.diameter));
            }
        }
        log.push(format!("{tag}: ok (modulus {:.6}, diameter {:.3e})", e.modulus_lower, e.diameter));
    }
    if cert.verdict != Verdict::Certified {
        return Err("verdict is not certified".into());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// JSON

fn num(out: &mut String, v: f64) {
    if v.is_finite() {
        let _ = write!(out, "{v:.16e}");
    } else {
        out.push_str("null");
    }
}

fn string(out: &mut String, s: &str) {
    out.push_str(&serde_json::to_string(s).expect("string serializes"));
}

fn point(out: &mut String, z: Point) {
    out.push_str("{\"re\": ");
    num(out, z.re);
    out.push_str(", \"im\": ");
    num(out, z.im);
    out.push('}');
}

fn annulus(out: &mut String, a: &RoundAnnulus) {
    out.push_str("{\"center\": ");
    point(out, a.center);
    out.push_str(", \"r\": ");
    num(out, a.inner);
    out.push_str(", \"R\": ");
    num(out, a.outer);
    out.push('}');
}

fn list<T>(out: &mut String, items: &[T], f: impl Fn(&mut String, &T)) {
    out.push('[');
    for (i, x) in items.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        f(out, x);
    }
    out.push(']');
}

impl ThinnessCertificate {
    /// Serializes with a fixed key order; numbers carry 17 significant digits.
    pub fn to_json(&self) -> String {
        let mut o = String::new();
        o.push_str("{\n  \"system\": ");
        string(&mut o, &self.system);
        o.push_str(",\n  \"c\": ");
        num(&mut o, self.c);
        o.push_str(",\n  \"word_rule\": ");
        match &self.word_rule {
            WordRule::Smallest => o.push_str("\"smallest\""),
            WordRule::Explicit(w) => {
                o.push_str("{\"explicit\": ");
                list(&mut o, w, |o, l| {
                    let _ = write!(o, "{l}");
                });
                o.push('}');
            }
        }
        o.push_str(",\n  \"word\": ");
        list(&mut o, &self.word, |o, l| {
            let _ = write!(o, "{l}");
        });
        o.push_str(",\n  \"entries\": [");
        for (i, e) in self.entries.iter().enumerate() {
            o.push_str(if i > 0 { ",\n    " } else { "\n    " });
            let _ = write!(o, "{{\"n\": {}, \"j_n\": {}, \"m_n\": {}, \"base\": ", e.n, e.stage, e.label);
            annulus(&mut o, &e.base);
            o.push_str(", \"pushed\": ");
            annulus(&mut o, &e.pushed);
            o.push_str(", \"modulusLower\": ");
            num(&mut o, e.modulus_lower);
            o.push_str(", \"diameter\": ");
            num(&mut o, e.diameter);
            let _ = write!(o, ", \"separationVerified\": {}}}", e.separation_verified);
        }
        o.push_str(if self.entries.is_empty() { "]" } else { "\n  ]" });
        o.push_str(",\n  \"verdict\": ");
        o.push_str(match self.verdict {
            Verdict::Certified => "\"certified\"",
            Verdict::Inconclusive => "\"inconclusive\"",
        });
        let _ = write!(o, ",\n  \"prefix_length\": {}", self.prefix_length);
        o.push_str(",\n  \"dropped\": [");
        for (i, d) in self.dropped.iter().enumerate() {
            o.push_str(if i > 0 { ",\n    " } else { "\n    " });
            let _ = write!(o, "{{\"n\": {}, \"j_n\": {}, \"reason\": ", d.n, d.stage);
            string(&mut o, &d.reason);
            o.push_str(", \"candidateModulus\": ");
            match d.candidate_modulus {
                Some(v) => num(&mut o, v),
                None => o.push_str("null"),
            }
            o.push('}');
        }
        o.push_str(if self.dropped.is_empty() { "]" } else { "\n  ]" });
        o.push_str("\n}\n");
        o
    }

    pub fn from_json(src: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(src).map_err(|e| Error::Format(e.to_string()))?;
        let fmt = |msg: &str| Error::Format(msg.to_string());
        let get = |v: &'_ Value, k: &str| -> Result<Value> {
            v.get(k).cloned().ok_or_else(|| fmt(&format!("missing `{k}`")))
        };
        let f = |v: &Value, k: &str| -> Result<f64> {
            match v.get(k) {
                Some(Value::Null) => Ok(f64::NAN),
                Some(x) => x.as_f64().ok_or_else(|| fmt(&format!("`{k}` is not a number"))),
                None => Err(fmt(&format!("missing `{k}`"))),
            }
        };
        let u = |v: &Value, k: &str| -> Result<u64> {
            v.get(k).and_then(Value::as_u64).ok_or_else(|| fmt(&format!("`{k}` is not an unsigned integer")))
        };
        let labels = |v: &Value| -> Result<Vec<u32>> {
            v.as_array()
                .ok_or_else(|| fmt("expected a label array"))?
                .iter()
                .map(|x| x.as_u64().and_then(|l| u32::try_from(l).ok()).ok_or_else(|| fmt("bad label")))
                .collect()
        };
        let ann = |v: &Value| -> Result<RoundAnnulus> {
            let c = get(v, "center")?;
            Ok(RoundAnnulus { center: Point::new(f(&c, "re")?, f(&c, "im")?), inner: f(v, "r")?, outer: f(v, "R")? })
        };
        let word_rule = match get(&v, "word_rule")? {
            Value::String(s) if s == "smallest" => WordRule::Smallest,
            obj @ Value::Object(_) => WordRule::Explicit(labels(&get(&obj, "explicit")?)?),
            _ => return Err(fmt("unknown word_rule")),
        };
        let entries = get(&v, "entries")?
            .as_array()
            .ok_or_else(|| fmt("`entries` is not an array"))?
            .iter()
            .map(|e| {
                Ok(CertificateEntry {
                    n: u(e, "n")? as usize,
                    stage: u(e, "j_n")? as usize,
                    label: u(e, "m_n")? as u32,
                    base: ann(&get(e, "base")?)?,
                    pushed: ann(&get(e, "pushed")?)?,
                    modulus_lower: f(e, "modulusLower")?,
                    diameter: f(e, "diameter")?,
                    separation_verified: e
                        .get("separationVerified")
                        .and_then(Value::as_bool)
                        .ok_or_else(|| fmt("`separationVerified` is not a boolean"))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let dropped = match v.get("dropped") {
            None => Vec::new(),
            Some(d) => d
                .as_array()
                .ok_or_else(|| fmt("`dropped` is not an array"))?
                .iter()
                .map(|d| {
                    Ok(DroppedEntry {
                        n: u(d, "n")? as usize,
                        stage: u(d, "j_n")? as usize,
                        reason: d.get("reason").and_then(Value::as_str).unwrap_or_default().to_string(),
                        candidate_modulus: d.get("candidateModulus").and_then(Value::as_f64),
                    })
                })
                .collect::<Result<Vec<_>>>()?,
        };
        Ok(ThinnessCertificate {
            system: get(&v, "system")?.as_str().ok_or_else(|| fmt("`system` is not a string"))?.to_string(),
            c: f(&v, "c")?,
            word_rule,
            word: labels(&get(&v, "word")?)?,
            entries,
            verdict: match get(&v, "verdict")?.as_str() {
                Some("certified") => Verdict::Certified,
                Some("inconclusive") => Verdict::Inconclusive,
                _ => return Err(fmt("unknown verdict")),
            },
            prefix_length: u(&v, "prefix_length")? as usize,
            dropped,
        })
    }
}
