//! Non-autonomous iterated function systems: stages, words, pieces.
//!
//! Stage `j` (1-based) is a finite labelled family of maps `φ_i^{(j)}`. For a
//! word `ω = (ω_j, …, ω_{j+k−1})` the piece `X_ω = φ_{ω_j} ∘ ⋯ ∘ φ_{ω_{j+k−1}}(X)`
//! is enclosed by a disk or, for real affine systems over an interval seed,
//! exactly by an interval.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{classify_piece, ClosedDisk, DiskDomain, Enclosure, Point, RealInterval, RoundAnnulus, Side};
use crate::maps::{compose, AffineMap, MapExpr};
use crate::{DEFAULT_PIECE_CAP, DEFAULT_SAMPLES};

/// Finite labelled family of maps. Labels are unique; order is ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct Stage {
    labels: Vec<u32>,
    maps: Vec<MapExpr>,
}

impl Stage {
    pub fn new(entries: impl IntoIterator<Item = (u32, MapExpr)>) -> Result<Self> {
        let mut entries: Vec<(u32, MapExpr)> = entries.into_iter().collect();
        if entries.is_empty() {
            return Err(Error::Assembly("a stage needs at least one map".into()));
        }
        entries.sort_by_key(|(l, _)| *l);
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Assembly("stage labels must be unique".into()));
        }
        let (labels, maps) = entries.into_iter().unzip();
        Ok(Self { labels, maps })
    }

    /// Labels `1..=n` in order.
    pub fn from_maps(maps: impl IntoIterator<Item = MapExpr>) -> Result<Self> {
        Self::new(maps.into_iter().enumerate().map(|(i, m)| (i as u32 + 1, m)))
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn maps(&self) -> &[MapExpr] {
        &self.maps
    }

    pub fn map(&self, label: u32) -> Option<&MapExpr> {
        self.index_of(label).map(|i| &self.maps[i])
    }

    pub fn index_of(&self, label: u32) -> Option<usize> {
        self.labels.binary_search(&label).ok()
    }

    pub fn smallest_label(&self) -> u32 {
        self.labels[0]
    }

    pub fn is_affine(&self) -> bool {
        self.maps.iter().all(|m| m.as_affine().is_some())
    }
}

/// A finite word starting at stage `start`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Word {
    pub start: usize,
    pub labels: Vec<u32>,
}

impl Word {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PieceEnclosure {
    pub word: Word,
    pub enclosure: Enclosure,
    pub diam_upper: f64,
}

/// Result of an invariance check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvarianceReport {
    pub holds: bool,
    pub max_discrepancy: f64,
    pub compared: usize,
    pub interval_mode: bool,
}

/// Counts from a hierarchical separation test.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SeparationOutcome {
    pub straddling: bool,
    pub hole_occupied: bool,
    pub outside_occupied: bool,
    pub nodes_visited: u64,
}

impl SeparationOutcome {
    pub fn separates(&self) -> bool {
        !self.straddling && self.hole_occupied && self.outside_occupied
    }
}

/// An assembled system: domain `U`, seed `X`, a compact hull receiving every
/// map's image of `U`, and the materialized stages `1..=horizon`.
#[derive(Clone, Debug)]
pub struct SystemSpec {
    domain: DiskDomain,
    seed: Enclosure,
    hull: ClosedDisk,
    stages: Vec<Stage>,
    descriptor: String,
    piece_cap: usize,
    samples: usize,
}

/// Image of an enclosure; intervals stay intervals under real affine maps.
pub fn image_enclosure(m: &MapExpr, e: &Enclosure, samples: usize) -> Result<Enclosure> {
    match e {
        Enclosure::Interval(i) => Ok(Enclosure::Interval(m.image_interval(i)?)),
        Enclosure::Disk(d) => Ok(Enclosure::Disk(m.image_disk(d, samples)?)),
    }
}

fn affine_image(m: &AffineMap, e: &Enclosure) -> Result<Enclosure> {
    match e {
        Enclosure::Interval(i) => Ok(Enclosure::Interval(m.image_interval(i)?)),
        Enclosure::Disk(d) => Ok(Enclosure::Disk(m.image_disk(d))),
    }
}

/// Rounding allowance for the forward-invariance check at assembly.
const ASSEMBLY_TOL: f64 = 1e-12;

fn inflate(e: &Enclosure, by: f64) -> Enclosure {
    match e {
        Enclosure::Interval(i) => Enclosure::Interval(RealInterval { lo: i.lo - by, hi: i.hi + by }),
        Enclosure::Disk(d) => Enclosure::Disk(ClosedDisk { center: d.center, radius: d.radius + by }),
    }
}

impl SystemSpec {
    /// Assembles and validates a system. `hull` defaults to the seed when the
    /// seed is a disk and is required for interval seeds.
    pub fn new(
        domain: DiskDomain,
        seed: Enclosure,
        hull: Option<ClosedDisk>,
        stages: Vec<Stage>,
        descriptor: impl Into<String>,
    ) -> Result<Self> {
        let hull = match (hull, &seed) {
            (Some(h), _) => h,
            (None, Enclosure::Disk(d)) => *d,
            (None, Enclosure::Interval(_)) => {
                return Err(Error::Assembly("interval seeds need an explicit hull disk".into()))
            }
        };
        let sys = Self {
            domain,
            seed,
            hull,
            stages,
            descriptor: descriptor.into(),
            piece_cap: DEFAULT_PIECE_CAP,
            samples: DEFAULT_SAMPLES,
        };
        sys.validate()?;
        Ok(sys)
    }

    /// Materializes stages `1..=horizon` from a rule.
    pub fn from_rule(
        domain: DiskDomain,
        seed: Enclosure,
        hull: Option<ClosedDisk>,
        horizon: usize,
        descriptor: impl Into<String>,
        rule: impl Fn(usize) -> Result<Stage>,
    ) -> Result<Self> {
        let stages = (1..=horizon).map(rule).collect::<Result<Vec<_>>>()?;
        Self::new(domain, seed, hull, stages, descriptor)
    }

    pub fn with_piece_cap(mut self, cap: usize) -> Self {
        self.piece_cap = cap;
        self
    }

    pub fn with_samples(mut self, samples: usize) -> Result<Self> {
        if samples < 16 {
            return Err(Error::Parameter(format!("need at least 16 samples, got {samples}")));
        }
        self.samples = samples;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Assembly(msg));
        if !self.domain.contains_disk(&self.hull) {
            return fail(format!("hull {:?} is not inside the domain", self.hull));
        }
        if !Enclosure::Disk(self.hull).contains(&self.seed) {
            return fail("seed is not inside the hull".into());
        }
        let domain_disk = self.domain.closure();
        for (idx, stage) in self.stages.iter().enumerate() {
            let j = idx + 1;
            for (label, m) in stage.labels.iter().zip(&stage.maps) {
                let img = m
                    .image_disk(&domain_disk, self.samples)
                    .map_err(|e| Error::Assembly(format!("stage {j}, map {label}: {e}")))?;
                if !self.hull.contains_disk(&img) {
                    return fail(format!(
                        "stage {j}, map {label} sends the domain to a disk (center {}, radius {:e}) outside the hull",
                        img.center, img.radius
                    ));
                }
                let seed_img = image_enclosure(m, &self.seed, self.samples)
                    .map_err(|e| Error::Assembly(format!("stage {j}, map {label}: {e}")))?;
                if !inflate(&self.seed, ASSEMBLY_TOL * self.seed.diameter_upper()).contains(&seed_img) {
                    return fail(format!("stage {j}, map {label} does not map the seed into itself"));
                }
            }
        }
        Ok(())
    }

    pub fn domain(&self) -> &DiskDomain {
        &self.domain
    }

    pub fn seed(&self) -> &Enclosure {
        &self.seed
    }

    pub fn hull(&self) -> &ClosedDisk {
        &self.hull
    }

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    pub fn horizon(&self) -> usize {
        self.stages.len()
    }

    pub fn piece_cap(&self) -> usize {
        self.piece_cap
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn is_interval_mode(&self) -> bool {
        matches!(self.seed, Enclosure::Interval(_))
    }

    pub fn stage(&self, j: usize) -> Result<&Stage> {
        if j == 0 {
            return Err(Error::Parameter("stage indices start at 1".into()));
        }
        self.stages.get(j - 1).ok_or(Error::Horizon { requested: j, horizon: self.horizon() })
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    fn check_range(&self, j: usize, k: usize) -> Result<()> {
        if j == 0 {
            return Err(Error::Parameter("stage indices start at 1".into()));
        }
        if k > 0 && j + k - 1 > self.horizon() {
            return Err(Error::Horizon { requested: j + k - 1, horizon: self.horizon() });
        }
        Ok(())
    }

    /// Number of words of length `k` starting at stage `j`.
    pub fn word_count(&self, j: usize, k: usize) -> Result<u128> {
        self.check_range(j, k)?;
        Ok((j..j + k).fold(1u128, |acc, s| acc.saturating_mul(self.stages[s - 1].len() as u128)))
    }

    fn check_cap(&self, count: u128) -> Result<()> {
        if count > self.piece_cap as u128 {
            return Err(Error::Size { count, cap: self.piece_cap });
        }
        Ok(())
    }

    fn stages_affine(&self, j: usize, k: usize) -> bool {
        (j..j + k).all(|s| self.stages[s - 1].is_affine())
    }

    /// `φ_{ω_j} ∘ ⋯ ∘ φ_{ω_{j+k−1}}`, composed from the innermost map outward.
    pub fn word_map(&self, word: &Word) -> Result<MapExpr> {
        self.check_range(word.start, word.len())?;
        let mut acc = MapExpr::identity();
        for (offset, label) in word.labels.iter().enumerate().rev() {
            let j = word.start + offset;
            let m = self.stages[j - 1]
                .map(*label)
                .ok_or_else(|| Error::Parameter(format!("label {label} is not in stage {j}")))?;
            acc = compose(m, &acc);
        }
        Ok(acc)
    }

    /// Enclosure of `X_ω`.
    pub fn word_enclosure(&self, word: &Word) -> Result<Enclosure> {
        self.check_range(word.start, word.len())?;
        if self.stages_affine(word.start, word.len()) {
            let mut e = self.seed;
            for (offset, label) in word.labels.iter().enumerate().rev() {
                let j = word.start + offset;
                let m = self.stages[j - 1]
                    .map(*label)
                    .ok_or_else(|| Error::Parameter(format!("label {label} is not in stage {j}")))?;
                e = affine_image(&m.as_affine().expect("affine stage"), &e)?;
            }
            Ok(e)
        } else {
            image_enclosure(&self.word_map(word)?, &self.seed, self.samples)
        }
    }

    /// All words of length `k` from stage `j`, in lexicographic order.
    pub fn words(&self, j: usize, k: usize) -> Result<Vec<Word>> {
        self.check_cap(self.word_count(j, k)?)?;
        let mut out = vec![Vec::with_capacity(k)];
        for s in j..j + k {
            let labels = &self.stages[s - 1].labels;
            out = out
                .into_iter()
                .flat_map(|prefix: Vec<u32>| {
                    labels.iter().map(move |l| {
                        let mut w = prefix.clone();
                        w.push(*l);
                        w
                    })
                })
                .collect();
        }
        Ok(out.into_iter().map(|labels| Word { start: j, labels }).collect())
    }

    /// Enclosures of all depth-`k` pieces of the system shifted to stage `j`,
    /// in lexicographic word order.
    pub fn pieces(&self, j: usize, k: usize) -> Result<Vec<PieceEnclosure>> {
        self.check_cap(self.word_count(j, k)?)?;
        if self.stages_affine(j, k) {
            // Apply stages from the innermost out, reusing the shifted pieces.
            let mut level: Vec<(Vec<u32>, Enclosure)> = vec![(Vec::new(), self.seed)];
            for s in (j..j + k).rev() {
                let stage = &self.stages[s - 1];
                let maps: Vec<(u32, AffineMap)> = stage
                    .labels
                    .iter()
                    .zip(&stage.maps)
                    .map(|(l, m)| (*l, m.as_affine().expect("affine stage")))
                    .collect();
                level = maps
                    .par_iter()
                    .flat_map_iter(|(label, m)| {
                        level.iter().map(move |(suffix, e)| {
                            let mut w = Vec::with_capacity(suffix.len() + 1);
                            w.push(*label);
                            w.extend_from_slice(suffix);
                            affine_image(m, e).map(|img| (w, img))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
            }
            Ok(level
                .into_iter()
                .map(|(labels, enclosure)| PieceEnclosure {
                    diam_upper: enclosure.diameter_upper(),
                    word: Word { start: j, labels },
                    enclosure,
                })
                .collect())
        } else {
            self.words(j, k)?
                .into_par_iter()
                .map(|word| {
                    let enclosure = self.word_enclosure(&word)?;
                    Ok(PieceEnclosure { diam_upper: enclosure.diameter_upper(), word, enclosure })
                })
                .collect()
        }
    }

    /// Enclosure of `φ_{ω_1⋯ω_n}(X)` for the first `n` labels of a stream.
    /// `diam_upper` is the smallest diameter seen along the nested prefixes.
    pub fn project(&self, labels: impl IntoIterator<Item = u32>, n: usize) -> Result<PieceEnclosure> {
        self.check_range(1, n)?;
        let labels: Vec<u32> = labels.into_iter().take(n).collect();
        if labels.len() < n {
            return Err(Error::Parameter(format!("label stream ended after {} labels", labels.len())));
        }
        let mut diam = self.seed.diameter_upper();
        let mut enclosure = self.seed;
        for i in 1..=n {
            let word = Word { start: 1, labels: labels[..i].to_vec() };
            enclosure = self.word_enclosure(&word)?;
            diam = diam.min(enclosure.diameter_upper());
        }
        Ok(PieceEnclosure { word: Word { start: 1, labels }, enclosure, diam_upper: diam })
    }

    /// Checks `⋃_i φ_i^{(j)}(X_k^{(j+1)}) = X_{k+1}^{(j)}`.
    ///
    /// Interval mode compares the canonical unions exactly. Disk mode compares
    /// word by word: collapsed affine coefficients for affine words, enclosures
    /// otherwise.
    pub fn invariance_check(&self, j: usize, k: usize) -> Result<InvarianceReport> {
        self.check_range(j, k + 1)?;
        let stage = self.stage(j)?;
        let shifted = self.pieces(j + 1, k)?;
        let direct = self.pieces(j, k + 1)?;
        let mut lhs: Vec<(Word, Enclosure)> = Vec::with_capacity(direct.len());
        for (label, m) in stage.labels.iter().zip(&stage.maps) {
            for p in &shifted {
                let mut labels = vec![*label];
                labels.extend_from_slice(&p.word.labels);
                let word = Word { start: j, labels };
                let e = match m.as_affine() {
                    Some(a) => affine_image(&a, &p.enclosure)?,
                    None => {
                        let tail = self.word_map(&p.word)?;
                        image_enclosure(&compose(m, &tail), &self.seed, self.samples)?
                    }
                };
                lhs.push((word, e));
            }
        }

        if self.is_interval_mode() {
            let union = |es: Vec<Enclosure>| -> Vec<(f64, f64)> {
                let mut iv: Vec<(f64, f64)> = es
                    .into_iter()
                    .map(|e| match e {
                        Enclosure::Interval(i) => (i.lo, i.hi),
                        Enclosure::Disk(d) => (d.center.re - d.radius, d.center.re + d.radius),
                    })
                    .collect();
                iv.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
                let mut merged: Vec<(f64, f64)> = Vec::new();
                for (lo, hi) in iv {
                    match merged.last_mut() {
                        Some(last) if lo <= last.1 + 1e-15 => last.1 = last.1.max(hi),
                        _ => merged.push((lo, hi)),
                    }
                }
                merged
            };
            let a = union(lhs.into_iter().map(|(_, e)| e).collect());
            let b = union(direct.into_iter().map(|p| p.enclosure).collect());
            let disc = if a.len() == b.len() {
                a.iter().zip(&b).map(|(x, y)| (x.0 - y.0).abs().max((x.1 - y.1).abs())).fold(0.0, f64::max)
            } else {
                f64::INFINITY
            };
            return Ok(InvarianceReport {
                holds: disc == 0.0,
                max_discrepancy: disc,
                compared: a.len(),
                interval_mode: true,
            });
        }

        let direct_words: HashSet<&Word> = direct.iter().map(|p| &p.word).collect();
        if lhs.len() != direct.len() || lhs.iter().any(|(w, _)| !direct_words.contains(w)) {
            return Ok(InvarianceReport {
                holds: false,
                max_discrepancy: f64::INFINITY,
                compared: 0,
                interval_mode: false,
            });
        }
        let mut disc: f64 = 0.0;
        let mut holds = true;
        for ((word, e), p) in lhs.iter().zip(&direct) {
            debug_assert_eq!(word, &p.word);
            let composed = compose(
                stage.map(word.labels[0]).expect("label"),
                &self.word_map(&Word { start: j + 1, labels: word.labels[1..].to_vec() })?,
            );
            let whole = self.word_map(word)?;
            match (composed.as_affine(), whole.as_affine()) {
                (Some(x), Some(y)) => {
                    let d = (x.a - y.a).norm().max((x.b - y.b).norm());
                    disc = disc.max(d);
                    holds &= d == 0.0;
                }
                _ => {
                    let (x, y) = (e.bounding_disk(), p.enclosure.bounding_disk());
                    let d = (x.center - y.center).norm() + (x.radius - y.radius).abs();
                    disc = disc.max(d);
                    // Containment both ways up to the enclosures' own slack.
                    let slack = 1e-9 * x.radius.max(y.radius).max(f64::MIN_POSITIVE);
                    holds &= d <= slack;
                }
            }
        }
        Ok(InvarianceReport { holds, max_discrepancy: disc, compared: direct.len(), interval_mode: false })
    }

    /// Combines consecutive stages: new stage `n` consists of all ordered
    /// compositions of stages `k_{n−1}+1 ..= k_n`, relabelled `1..` in
    /// lexicographic word order.
    pub fn combine_stages(&self, breakpoints: &[usize]) -> Result<SystemSpec> {
        let mut prev = 0;
        let mut stages = Vec::with_capacity(breakpoints.len());
        for &k in breakpoints {
            if k <= prev {
                return Err(Error::Parameter("breakpoints must be strictly increasing and positive".into()));
            }
            if k > self.horizon() {
                return Err(Error::Horizon { requested: k, horizon: self.horizon() });
            }
            let words = self.words(prev + 1, k - prev)?;
            let maps = words.iter().map(|w| self.word_map(w)).collect::<Result<Vec<_>>>()?;
            stages.push(Stage::from_maps(maps)?);
            prev = k;
        }
        let sys = SystemSpec {
            domain: self.domain,
            seed: self.seed,
            hull: self.hull,
            stages,
            descriptor: format!("{} combined at {:?}", self.descriptor, breakpoints),
            piece_cap: self.piece_cap,
            samples: self.samples,
        };
        sys.validate()?;
        Ok(sys)
    }

    /// The system with `stage` inserted in front of stage 1.
    pub fn prepend_stage(&self, stage: Stage) -> Result<SystemSpec> {
        let mut stages = Vec::with_capacity(self.stages.len() + 1);
        stages.push(stage);
        stages.extend(self.stages.iter().cloned());
        let sys = SystemSpec {
            domain: self.domain,
            seed: self.seed,
            hull: self.hull,
            stages,
            descriptor: format!("{} with a prepended stage", self.descriptor),
            piece_cap: self.piece_cap,
            samples: self.samples,
        };
        sys.validate()?;
        Ok(sys)
    }

    /// Representative points of the limit set: for each depth-`n` word, the
    /// centre of its piece (stream 0) and, for `s ≥ 1`, the centre of the
    /// horizon-depth piece extending it by the label at position
    /// `s mod |I^{(i)}|` of every later stage `i`.
    pub fn attractor_sample(&self, n: usize, streams_per_leaf: usize) -> Result<Vec<Point>> {
        let words = self.words(1, n)?;
        let streams = streams_per_leaf.max(1);
        self.check_cap((words.len() as u128).saturating_mul(streams as u128))?;
        let horizon = self.horizon();
        let per_word = words
            .par_iter()
            .map(|w| {
                let mut pts = Vec::with_capacity(streams);
                pts.push(self.word_enclosure(w)?.center());
                for s in 1..streams {
                    let mut labels = w.labels.clone();
                    for i in n + 1..=horizon {
                        let stage = &self.stages[i - 1];
                        labels.push(stage.labels[s % stage.len()]);
                    }
                    pts.push(self.word_enclosure(&Word { start: 1, labels })?.center());
                }
                Ok(pts)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(per_word.into_iter().flatten().collect())
    }

    /// Classifies every depth-`k` piece (from stage 1) against an annulus by
    /// descending the word tree. A node whose enclosure lies wholly in the
    /// hole or outside settles its whole subtree.
    pub fn separation_descent(&self, annulus: &RoundAnnulus, k: usize) -> Result<SeparationOutcome> {
        self.check_range(1, k)?;
        let mut out = SeparationOutcome::default();
        let mut stack: Vec<(Vec<u32>, Option<AffineMap>)> = vec![(Vec::new(), Some(AffineMap::identity()))];
        while let Some((labels, affine)) = stack.pop() {
            out.nodes_visited += 1;
            let depth = labels.len();
            let e = match affine {
                Some(a) => affine_image(&a, &self.seed)?,
                None => self.word_enclosure(&Word { start: 1, labels: labels.clone() })?,
            };
            match classify_piece(annulus, &e) {
                Side::Hole => out.hole_occupied = true,
                Side::Outside => out.outside_occupied = true,
                Side::Straddles if depth == k => {
                    out.straddling = true;
                    return Ok(out);
                }
                Side::Straddles => {
                    let stage = &self.stages[depth];
                    for (label, m) in stage.labels.iter().zip(&stage.maps).rev() {
                        let mut child = labels.clone();
                        child.push(*label);
                        let next = match (affine, m.as_affine()) {
                            (Some(p), Some(q)) => Some(p.compose(&q)),
                            _ => None,
                        };
                        stack.push((child, next));
                    }
                }
            }
        }
        Ok(out)
    }

    /// Separation test at level `k` for the annulus `φ_path(local)`, run in
    /// the local coordinates of each node along `path` so that deep annuli
    /// stay resolvable. Returns `None` unless stages `1..=k` are affine.
    ///
    /// A level-`k` piece either extends `path`, and is compared with `local`
    /// after pulling back by `φ_path`, or leaves `path` at some depth `d`, and
    /// is compared with the pull-back to that node.
    pub fn focused_separation(
        &self,
        local: &RoundAnnulus,
        path: &[u32],
        k: usize,
    ) -> Result<Option<SeparationOutcome>> {
        self.check_range(1, k)?;
        if path.len() >= k {
            return Err(Error::Parameter(format!("path of length {} does not end before level {k}", path.len())));
        }
        if !self.stages_affine(1, k) {
            return Ok(None);
        }
        let mut steps = Vec::with_capacity(path.len());
        for (d, label) in path.iter().enumerate() {
            let m = self.stages[d]
                .map(*label)
                .ok_or_else(|| Error::Parameter(format!("label {label} is not in stage {}", d + 1)))?;
            steps.push(m.as_affine().expect("affine stage"));
        }
        let mut pulled = vec![*local; path.len() + 1];
        for d in (0..path.len()).rev() {
            let (m, a) = (steps[d], pulled[d + 1]);
            let s = m.a.norm();
            pulled[d] = RoundAnnulus::new(m.apply(a.center), s * a.inner, s * a.outer)?;
        }
        let mut out = SeparationOutcome::default();
        for (d, on_path) in path.iter().enumerate() {
            let stage = &self.stages[d];
            for (label, m) in stage.labels.iter().zip(&stage.maps) {
                if label != on_path {
                    self.affine_descent(&pulled[d], d + 1, m.as_affine().expect("affine stage"), k, &mut out)?;
                    if out.straddling {
                        return Ok(Some(out));
                    }
                }
            }
        }
        self.affine_descent(local, path.len(), AffineMap::identity(), k, &mut out)?;
        Ok(Some(out))
    }

    /// Descends the subtree whose root node, at `depth`, is `root(X)`.
    fn affine_descent(
        &self,
        annulus: &RoundAnnulus,
        depth: usize,
        root: AffineMap,
        k: usize,
        out: &mut SeparationOutcome,
    ) -> Result<()> {
        let mut stack = vec![(depth, root)];
        while let Some((depth, map)) = stack.pop() {
            out.nodes_visited += 1;
            match classify_piece(annulus, &affine_image(&map, &self.seed)?) {
                Side::Hole => out.hole_occupied = true,
                Side::Outside => out.outside_occupied = true,
                Side::Straddles if depth == k => {
                    out.straddling = true;
                    return Ok(());
                }
                Side::Straddles => {
                    for m in self.stages[depth].maps.iter().rev() {
                        stack.push((depth + 1, map.compose(&m.as_affine().expect("affine stage"))));
                    }
                }
            }
        }
        Ok(())
    }
}
