//! Named example runs with pinned parameters.

use std::f64::consts::LN_2;
use std::fmt::Write as _;

use nifs_atlas::geometry::best_separating_annulus_search;
use nifs_atlas::Complex64;

use crate::actions::Artifact;
use crate::config::{Action, RunConfig};
use crate::CliError;

pub struct Preset {
    pub name: &'static str,
    pub about: &'static str,
    pub kind: PresetKind,
}

pub enum PresetKind {
    Run { action: Action, config: &'static str },
    ClosureSearch,
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "figure1",
        about: "piece table of the two-map Cantor system with a = 1/3, 1/4, 1/5 (interval mode)",
        kind: PresetKind::Run {
            action: Action::Pieces,
            config: r#"{"system": {"family": "cantor", "m": 2, "a_rule": "1/(j+2)", "seed_mode": "interval"},
                        "horizon": 3}"#,
        },
    },
    Preset {
        name: "example2-1",
        about: "thinness certificate for the Cantor system with a_j = 1/(j+2) over 30 stages",
        kind: PresetKind::Run {
            action: Action::Certify,
            config: r#"{"system": {"family": "cantor", "m": 2, "a_rule": "1/(j+2)", "seed_mode": "disk"},
                        "horizon": 30}"#,
        },
    },
    Preset {
        name: "example2-2-unbounded",
        about: "thinness certificate for the gapped system with l_j = j",
        kind: PresetKind::Run {
            action: Action::Certify,
            config: r#"{"system": {"family": "gapped", "l_rule": "j"}, "horizon": 10}"#,
        },
    },
    Preset {
        name: "example2-2-bounded",
        about: "control: the gapped system with l_j = 1 stays inconclusive",
        kind: PresetKind::Run {
            action: Action::Certify,
            config: r#"{"system": {"family": "gapped", "l_rule": 1}, "horizon": 10}"#,
        },
    },
    Preset {
        name: "remark3-1",
        about: "dichotomy report for a_j (4z^2 + 2) with a_j = 2^j (GROWING)",
        kind: PresetKind::Run {
            action: Action::Dichotomy,
            config: r#"{"system": {"family": "julia", "quad_a": 4, "quad_c": 2, "a_rule": "2^j"}, "horizon": 20}"#,
        },
    },
    Preset {
        name: "remark3-1-bounded",
        about: "dichotomy report for a_j (4z^2 + 2) with a_j = 2 (BOUNDED)",
        kind: PresetKind::Run {
            action: Action::Dichotomy,
            config: r#"{"system": {"family": "julia", "quad_a": 4, "quad_c": 2, "a_rule": 2}, "horizon": 30}"#,
        },
    },
    Preset {
        name: "heavy-tail-sampler",
        about: "100 random coefficient sequences with |a_j| = 1 + Pareto excess, seed 2024",
        kind: PresetKind::Run {
            action: Action::Sample,
            config: r#"{"system": {"family": "julia", "quad_a": 4, "quad_c": 2,
                                   "random": {"distribution": {"kind": "one-plus-pareto", "alpha": 1, "scale": 1},
                                              "count": 100}},
                        "horizon": 50, "seed": 2024}"#,
        },
    },
    Preset {
        name: "pointwise-thin-closure",
        about: "best round annulus separating {0} from {2^-n : n <= 20} with 0 in the hole",
        kind: PresetKind::ClosureSearch,
    },
];

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

pub fn listing() -> String {
    let width = PRESETS.iter().map(|p| p.name.len()).max().unwrap_or(0);
    PRESETS.iter().map(|p| format!("{:width$}  {}\n", p.name, p.about)).collect()
}

impl Preset {
    pub fn config(&self) -> Result<Option<(Action, RunConfig)>, CliError> {
        match self.kind {
            PresetKind::Run { action, config } => Ok(Some((action, RunConfig::from_json(config)?))),
            PresetKind::ClosureSearch => Ok(None),
        }
    }

    pub fn file_name(&self) -> String {
        match self.kind {
            PresetKind::Run { action, .. } => {
                let default = action.default_file();
                let ext = default.rsplit('.').next().unwrap_or("out");
                format!("{}.{ext}", self.name)
            }
            PresetKind::ClosureSearch => format!("{}.csv", self.name),
        }
    }
}

/// Grid search over 1000 centers in `[-1/4, 1/4]` and 1000 geometric radii.
pub fn closure_search() -> Artifact {
    let points: Vec<Complex64> =
        std::iter::once(0.0).chain((1..=20).map(|n| 2f64.powi(-n))).map(|x| Complex64::new(x, 0.0)).collect();
    let centers: Vec<Complex64> = (0..1000).map(|i| Complex64::new(-0.25 + 0.5 * i as f64 / 999.0, 0.0)).collect();
    let (lo, hi) = (2f64.powi(-24), 1.0f64);
    let radii: Vec<f64> = (0..1000).map(|i| lo * (hi / lo).powf(i as f64 / 999.0)).collect();
    let mut out = String::from("center_re,center_im,inner,outer,modulus\n");
    let summary = match best_separating_annulus_search(&points, Complex64::new(0.0, 0.0), &centers, &radii) {
        Some(a) => {
            let m = (a.outer / a.inner).ln();
            writeln!(out, "{},{},{},{},{}", a.center.re, a.center.im, a.inner, a.outer, m).expect("write to string");
            format!("closure search: best modulus {m:.4} (log 2 + 0.05 = {:.4})", LN_2 + 0.05)
        }
        None => "closure search: no separating annulus on the grid".to_string(),
    };
    Artifact { bytes: out.into_bytes(), summary, failed: false }
}
