//! One function per action. Each returns the artifact bytes and a summary.

use std::fmt::Write as _;

use nifs_atlas::certify::{build_certificate, build_default_certificate, verify_certificate, Verdict, WordRule};
use nifs_atlas::geometry::Enclosure;
use nifs_atlas::julia::{self, EscapeGrid, RandomSeqSpec};
use nifs_atlas::nifs::Word;

use crate::config::{Action, RunConfig, SystemConfig, WordConfig};
use crate::CliError;

pub struct Artifact {
    pub bytes: Vec<u8>,
    pub summary: String,
    /// Set when the artifact records a failed check (exit status 2).
    pub failed: bool,
}

impl Artifact {
    fn ok(bytes: impl Into<Vec<u8>>, summary: String) -> Self {
        Self { bytes: bytes.into(), summary, failed: false }
    }
}

pub fn run(action: Action, cfg: &RunConfig, seed: u64) -> Result<Artifact, CliError> {
    match action {
        Action::Pieces => pieces(cfg),
        Action::Certify => certify(cfg),
        Action::Dichotomy => dichotomy(cfg),
        Action::Render => render(cfg),
        Action::Sample => sample(cfg, seed),
        Action::Invariance => invariance(cfg),
    }
}

fn word_label(w: &Word) -> String {
    w.labels.iter().map(u32::to_string).collect::<Vec<_>>().join(".")
}

fn pieces(cfg: &RunConfig) -> Result<Artifact, CliError> {
    let sys = cfg.build_system()?;
    let h = cfg.horizon;
    let columns = cfg.pieces.columns.unwrap_or(h).min(h);
    let max_depth = cfg.pieces.max_depth.unwrap_or(h);
    let interval = sys.is_interval_mode();
    let mut out = String::from(if interval { "j,k,word,lo,hi\n" } else { "j,k,word,center_re,center_im,radius\n" });
    let mut rows = 0;
    for j in 1..=columns {
        for k in 0..=max_depth.min(h + 1 - j) {
            for p in sys.pieces(j, k)? {
                match p.enclosure {
                    Enclosure::Interval(i) => writeln!(out, "{j},{k},{},{},{}", word_label(&p.word), i.lo, i.hi),
                    Enclosure::Disk(d) => {
                        writeln!(out, "{j},{k},{},{},{},{}", word_label(&p.word), d.center.re, d.center.im, d.radius)
                    }
                }
                .expect("write to string");
                rows += 1;
            }
        }
    }
    Ok(Artifact::ok(out, format!("pieces: {rows} rows over columns 1..={columns} ({})", sys.descriptor())))
}

fn certify(cfg: &RunConfig) -> Result<Artifact, CliError> {
    let sys = cfg.build_system()?;
    let params = &cfg.certify;
    let subseq = params.subsequence.clone().unwrap_or_else(|| (1..=cfg.horizon).collect());
    let rule = match &params.word {
        WordConfig::Smallest => WordRule::Smallest,
        WordConfig::Name(n) if n == "smallest" => WordRule::Smallest,
        WordConfig::Name(n) => return Err(CliError::Config(format!("unknown word rule {n:?}"))),
        WordConfig::Labels(l) => WordRule::Explicit(l.clone()),
    };
    let cert = match params.c {
        Some(c) => build_certificate(&sys, &subseq, c, &rule)?,
        None => build_default_certificate(&sys, &subseq, &rule)?,
    };
    let mut summary = format!(
        "certify: verdict {}, {} entries, {} dropped, c = {}",
        match cert.verdict {
            Verdict::Certified => "certified",
            Verdict::Inconclusive => "inconclusive",
        },
        cert.entries.len(),
        cert.dropped.len(),
        cert.c
    );
    if cert.verdict == Verdict::Certified {
        let v = verify_certificate(&sys, &cert);
        if !v.valid {
            return Err(CliError::Internal(format!(
                "freshly built certificate failed verification: {}",
                v.first_failure().unwrap_or("unknown")
            )));
        }
        summary.push_str(", verified");
    }
    Ok(Artifact::ok(cert.to_json(), summary))
}

fn dichotomy(cfg: &RunConfig) -> Result<Artifact, CliError> {
    let spec = cfg.poly_spec()?;
    let from = cfg.dichotomy.from.unwrap_or(1);
    let to = cfg.dichotomy.to.unwrap_or(cfg.horizon);
    let rep = julia::dichotomy_report(&spec, from..=to)?;
    let summary =
        format!("dichotomy: trend {} over stages {from}..={to}, delta0 = {:.6}", rep.trend.as_str(), rep.delta0);
    Ok(Artifact::ok(rep.to_csv(), summary))
}

fn render(cfg: &RunConfig) -> Result<Artifact, CliError> {
    let spec = cfg.poly_spec()?;
    let p = &cfg.render;
    let stages = p.stages.unwrap_or(cfg.horizon);
    if stages > spec.horizon() {
        return Err(nifs_atlas::Error::Horizon { requested: stages, horizon: spec.horizon() }.into());
    }
    let grid = EscapeGrid::square(p.half_width, p.size, stages);
    let cls = julia::forward_classify(&spec, &grid)?;
    let bytes = julia::render(&cls, p.palette)?;
    let summary = format!("render: {0}x{0} image, {1} pixels IN after {stages} stages", p.size, cls.in_count());
    Ok(Artifact::ok(bytes, summary))
}

fn sample(cfg: &RunConfig, seed: u64) -> Result<Artifact, CliError> {
    if let SystemConfig::Julia { quad_a, quad_c, random: Some(r), .. } = &cfg.system {
        let spec = RandomSeqSpec { distribution: r.distribution, seed, count: r.count, horizon: cfg.horizon };
        let s = julia::sample_sequences(&spec, (*quad_a).into(), (*quad_c).into())?;
        let summary = format!(
            "sample: {} sequences of {} stages, GROWING fraction {:.2} (seed {seed})",
            s.count, s.horizon, s.growing_fraction
        );
        return Ok(Artifact::ok(s.to_csv(), summary));
    }
    let sys = cfg.build_system()?;
    let p = &cfg.sample;
    let pts = sys.attractor_sample(p.depth, p.streams)?;
    let mut out = String::from("re,im\n");
    for z in &pts {
        writeln!(out, "{},{}", z.re, z.im).expect("write to string");
    }
    Ok(Artifact::ok(out, format!("sample: {} limit-set points at depth {}", pts.len(), p.depth)))
}

fn invariance(cfg: &RunConfig) -> Result<Artifact, CliError> {
    let sys = cfg.build_system()?;
    let max_total = cfg.invariance.max_total.unwrap_or(cfg.horizon).min(cfg.horizon);
    let mut out = String::from("j,k,holds,max_discrepancy,compared,mode\n");
    let (mut checks, mut failures) = (0, 0);
    for j in 1..=max_total {
        for k in 0..=(max_total - j) {
            let r = sys.invariance_check(j, k)?;
            writeln!(
                out,
                "{j},{k},{},{},{},{}",
                r.holds,
                r.max_discrepancy,
                r.compared,
                if r.interval_mode { "interval" } else { "disk" }
            )
            .expect("write to string");
            checks += 1;
            failures += usize::from(!r.holds);
        }
    }
    Ok(Artifact {
        bytes: out.into_bytes(),
        summary: format!("invariance: {} of {checks} checks hold", checks - failures),
        failed: failures > 0,
    })
}
