//! Scenario files: a chart, a metric and unit field (or a twisted-product
//! recipe), optional grid and sub-box, and expected verdicts.
//!
//! ```text
//! name = "cylinder"
//! coords = ["rho", "phi", "z"]
//!
//! [domain]
//! lo = [1.0, 0.0, 0.0]
//! hi = [2.0, 1.0, 1.0]
//!
//! [metric]
//! g00 = "1"
//! g11 = "rho^2"
//! g22 = "1"
//!
//! [T]
//! phi = "1/rho"
//!
//! [expect]
//! el_gtop = "critical"
//! ```
//!
//! Missing off-diagonal metric entries and missing `T` components are zero.
//! A `[twisted]` section replaces `[metric]` and `[T]`; its coordinates are
//! `(x, y, s)` in that order, with either `u`/`v` profiles or `k0`/`h0` for
//! recovery.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use crate::chart::{ChartBox, Grid};
use crate::error::{Error, Result};
use crate::exprlang::{Expr, Jet2};
use crate::geometry::{ExprMetric, ExprVector, MetricJet, MetricSource, VectorJet, VectorSource};
use crate::problem::Problem;
use crate::twisted::{explicit_spec, recover_profiles, Origin, TwistedSpec};

pub const METRIC_KEYS: [&str; 6] = ["g00", "g01", "g02", "g11", "g12", "g22"];
pub const UNIT_TOL: f64 = 1e-8;
pub const DEFAULT_RECOVERY_STEP: f64 = 1e-3;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Raw {
    name: String,
    #[serde(default)]
    description: String,
    coords: [String; 3],
    #[serde(default = "one")]
    orientation: f64,
    #[serde(default)]
    normalize_t: bool,
    domain: RawBox,
    interior: Option<RawBox>,
    grid: Option<RawGrid>,
    metric: Option<BTreeMap<String, String>>,
    #[serde(rename = "T")]
    t: Option<BTreeMap<String, String>>,
    twisted: Option<RawTwisted>,
    #[serde(default)]
    expect: BTreeMap<String, String>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBox {
    lo: [f64; 3],
    hi: [f64; 3],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    n: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTwisted {
    base: Option<[String; 3]>,
    u: Option<String>,
    v: Option<String>,
    k0: Option<String>,
    h0: Option<f64>,
    step: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TwistedProfiles {
    Explicit { u: String, v: String },
    Recover { k0: String, h0: f64, step: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwistedDef {
    /// `g_B` as `(g_xx, g_xy, g_yy)`.
    pub base: [String; 3],
    pub profiles: TwistedProfiles,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioKind {
    Explicit { metric: [String; 6], field: [String; 3] },
    Twisted(TwistedDef),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub chart: ChartBox,
    /// Region for residual norms and integrals; the whole box if absent.
    pub interior: ChartBox,
    pub grid_n: Option<usize>,
    pub normalize_t: bool,
    pub kind: ScenarioKind,
    /// Expected verdicts keyed by check name.
    pub expect: BTreeMap<String, String>,
    /// The text the scenario was parsed from.
    pub source: String,
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of `key = ` inside `[section]` (or at top level for `""`), else 0.
fn line_of_key(text: &str, section: &str, key: &str) -> usize {
    let mut current = String::new();
    for (i, line) in text.lines().enumerate() {
        let l = line.trim();
        if let Some(rest) = l.strip_prefix('[') {
            current = rest.trim_end_matches(']').trim().to_string();
        } else if current == section && l.split('=').next().map(str::trim) == Some(key) {
            return i + 1;
        }
    }
    0
}

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Scenario {
        line,
        message: message.into(),
    }
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path).map_err(|e| err(0, format!("{}: {e}", path.display())))?;
        Scenario::parse(&text)
    }

    /// Parses and validates every expression; no geometry is evaluated.
    pub fn parse(text: &str) -> Result<Scenario> {
        let raw: Raw = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| line_of_offset(text, s.start)).unwrap_or(0);
            err(line, e.message().to_string())
        })?;
        let names: [&str; 3] = [&raw.coords[0], &raw.coords[1], &raw.coords[2]];
        let chart = ChartBox::new(names, raw.domain.lo, raw.domain.hi, raw.orientation)
            .map_err(|e| err(line_of_key(text, "domain", "lo"), e.to_string()))?;
        let interior = match &raw.interior {
            Some(b) => {
                let line = line_of_key(text, "interior", "lo");
                let sub = ChartBox::new(names, b.lo, b.hi, raw.orientation).map_err(|e| err(line, e.to_string()))?;
                if (0..3).any(|a| sub.lo[a] < chart.lo[a] || sub.hi[a] > chart.hi[a]) {
                    return Err(err(line, "interior box leaves the domain"));
                }
                sub
            }
            None => chart.clone(),
        };
        if let Some(g) = &raw.grid {
            if g.n < 8 || g.n % 2 != 0 {
                return Err(err(line_of_key(text, "grid", "n"), "grid n must be even and at least 8"));
            }
        }
        let check = |section: &str, key: &str, src: &str| -> Result<()> {
            Expr::parse(src, &names)
                .map(|_| ())
                .map_err(|e| err(line_of_key(text, section, key), format!("[{section}] {key}: {e}")))
        };
        let kind = match (&raw.metric, &raw.t, &raw.twisted) {
            (Some(m), Some(t), None) => {
                for key in m.keys() {
                    if !METRIC_KEYS.contains(&key.as_str()) {
                        return Err(err(line_of_key(text, "metric", key), format!("unknown metric entry `{key}`")));
                    }
                }
                for key in t.keys() {
                    if !names.contains(&key.as_str()) {
                        return Err(err(line_of_key(text, "T", key), format!("`{key}` is not a coordinate")));
                    }
                }
                let mut metric: [String; 6] = Default::default();
                for (slot, key) in metric.iter_mut().zip(METRIC_KEYS) {
                    *slot = match m.get(key) {
                        Some(s) => s.clone(),
                        None if matches!(key, "g00" | "g11" | "g22") => {
                            return Err(err(line_of_key(text, "metric", ""), format!("missing diagonal entry `{key}`")))
                        }
                        None => "0".into(),
                    };
                    check("metric", key, slot)?;
                }
                let field = names.map(|c| t.get(c).cloned().unwrap_or_else(|| "0".into()));
                for (c, s) in names.iter().zip(&field) {
                    check("T", c, s)?;
                }
                ScenarioKind::Explicit { metric, field }
            }
            (None, None, Some(tw)) => {
                let base = tw.base.clone().unwrap_or_else(|| ["1".into(), "0".into(), "1".into()]);
                for (key, s) in ["base", "base", "base"].iter().zip(&base) {
                    check("twisted", key, s)?;
                }
                let line = line_of_key(text, "twisted", "u").max(line_of_key(text, "twisted", "k0"));
                let profiles = match (&tw.u, &tw.v, &tw.k0) {
                    (Some(u), Some(v), None) if tw.h0.is_none() && tw.step.is_none() => {
                        check("twisted", "u", u)?;
                        check("twisted", "v", v)?;
                        TwistedProfiles::Explicit {
                            u: u.clone(),
                            v: v.clone(),
                        }
                    }
                    (None, None, Some(k0)) => {
                        check("twisted", "k0", k0)?;
                        let step = tw.step.unwrap_or(DEFAULT_RECOVERY_STEP);
                        if !(step > 0.0) {
                            return Err(err(line_of_key(text, "twisted", "step"), "step must be positive"));
                        }
                        TwistedProfiles::Recover {
                            k0: k0.clone(),
                            h0: tw.h0.unwrap_or(0.0),
                            step,
                        }
                    }
                    _ => return Err(err(line, "[twisted] needs either u and v, or k0 with optional h0 and step")),
                };
                ScenarioKind::Twisted(TwistedDef { base, profiles })
            }
            _ => return Err(err(0, "give either [metric] and [T], or [twisted]")),
        };
        Ok(Scenario {
            name: raw.name,
            description: raw.description,
            chart,
            interior,
            grid_n: raw.grid.map(|g| g.n),
            normalize_t: raw.normalize_t,
            kind,
            expect: raw.expect,
            source: text.to_string(),
        })
    }

    pub fn names(&self) -> [&str; 3] {
        self.chart.names()
    }

    /// Every expression in the file with a label.
    pub fn expressions(&self) -> Result<Vec<(String, Expr)>> {
        let names = self.names();
        let mut srcs: Vec<(String, &str)> = Vec::new();
        match &self.kind {
            ScenarioKind::Explicit { metric, field } => {
                for (k, s) in METRIC_KEYS.iter().zip(metric) {
                    srcs.push((format!("metric.{k}"), s));
                }
                for (c, s) in names.iter().zip(field) {
                    srcs.push((format!("T.{c}"), s));
                }
            }
            ScenarioKind::Twisted(def) => {
                for (k, s) in ["gxx", "gxy", "gyy"].iter().zip(&def.base) {
                    srcs.push((format!("twisted.base.{k}"), s));
                }
                match &def.profiles {
                    TwistedProfiles::Explicit { u, v } => {
                        srcs.push(("twisted.u".into(), u));
                        srcs.push(("twisted.v".into(), v));
                    }
                    TwistedProfiles::Recover { k0, .. } => srcs.push(("twisted.k0".into(), k0)),
                }
            }
        }
        srcs.into_iter()
            .map(|(l, s)| Ok((l, Expr::parse(s, &names)?)))
            .collect()
    }

    /// The twisted spec, recovering profiles if needed.
    pub fn twisted_spec(&self) -> Result<Option<TwistedSpec>> {
        let ScenarioKind::Twisted(def) = &self.kind else {
            return Ok(None);
        };
        let names = self.names();
        let base = [0, 1, 2].map(|i| Expr::parse(&def.base[i], &names));
        let base = [base[0].clone()?, base[1].clone()?, base[2].clone()?];
        let spec = match &def.profiles {
            TwistedProfiles::Explicit { u, v } => explicit_spec(&self.chart, base, u, v)?,
            TwistedProfiles::Recover { k0, h0, step } => recover_profiles(&self.chart, base, k0, *h0, *step)?,
        };
        Ok(Some(spec))
    }

    /// Metric and unit field; `T` is normalized if the file or `normalize`
    /// asks for it and is otherwise checked at 27 probe points.
    pub fn sources(&self, normalize: bool) -> Result<(Arc<dyn MetricSource>, Arc<dyn VectorSource>)> {
        let names = self.names();
        let (metric, field): (Arc<dyn MetricSource>, Arc<dyn VectorSource>) = match &self.kind {
            ScenarioKind::Explicit { metric, field } => {
                let m = ExprMetric {
                    comps: [0, 1, 2, 3, 4, 5].map(|i| Expr::parse(&metric[i], &names)).map(|e| e.unwrap()),
                };
                let t = ExprVector {
                    comps: [0, 1, 2].map(|i| Expr::parse(&field[i], &names)).map(|e| e.unwrap()),
                };
                if normalize || self.normalize_t {
                    let m = Arc::new(m);
                    (m.clone(), Arc::new(Normalized { metric: m, raw: t }))
                } else {
                    (Arc::new(m), Arc::new(t))
                }
            }
            ScenarioKind::Twisted(_) => {
                let spec = self.twisted_spec()?.expect("twisted scenario");
                (Arc::new(spec.metric()), Arc::new(spec.field()))
            }
        };
        check_unit(metric.as_ref(), field.as_ref(), &self.chart)?;
        Ok((metric, field))
    }

    /// Problem on an `n`-grid over the domain with the scenario's sub-box.
    pub fn problem(&self, n: usize, normalize: bool) -> Result<Problem> {
        let (metric, field) = self.sources(normalize)?;
        let grid = Grid::uniform(self.chart.clone(), n)?;
        Ok(Problem::new(metric, field, grid).with_interior(self.interior.clone()))
    }
}

/// `g(T,T) = 1` within [`UNIT_TOL`] at the 3×3×3 probe points at 1/6, 1/2
/// and 5/6 of each side.
pub fn check_unit(metric: &dyn MetricSource, field: &dyn VectorSource, chart: &ChartBox) -> Result<()> {
    let f = [1.0 / 6.0, 0.5, 5.0 / 6.0];
    for a in f {
        for b in f {
            for c in f {
                let p = [a, b, c]
                    .iter()
                    .enumerate()
                    .map(|(i, t)| chart.lo[i] + t * (chart.hi[i] - chart.lo[i]))
                    .collect::<Vec<_>>();
                let p = [p[0], p[1], p[2]];
                let g = metric.metric_jet(&p)?.values();
                let t = field.vector_jet(&p)?.values();
                let n2: f64 = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| g[i][j] * t[i] * t[j]).sum();
                if !((n2 - 1.0).abs() <= UNIT_TOL) {
                    return Err(Error::NonUnitField { point: p, norm2: n2 });
                }
            }
        }
    }
    Ok(())
}

/// `W / |W|_g` with exact jets.
pub struct Normalized {
    pub metric: Arc<ExprMetric>,
    pub raw: ExprVector,
}

impl VectorSource for Normalized {
    fn vector_jet(&self, p: &[f64; 3]) -> Result<VectorJet> {
        let g: MetricJet = self.metric.metric_jet(p)?;
        let w = self.raw.vector_jet(p)?.comps;
        let mut n2 = Jet2::constant(0.0);
        for i in 0..3 {
            for j in 0..3 {
                n2 = n2 + *g.component(i, j) * w[i] * w[j];
            }
        }
        if !(n2.value > 0.0) {
            return Err(Error::Invalid(format!("cannot normalize a null field at {p:?}")));
        }
        let inv = n2.sqrt().recip();
        Ok(VectorJet {
            comps: w.map(|c| c * inv),
        })
    }
}

/// Scenario text for a twisted spec, with `[expect]` entries.
pub fn twisted_scenario_text(
    name: &str,
    spec: &TwistedSpec,
    base: &[String; 3],
    interior: &ChartBox,
    expect: &BTreeMap<String, String>,
) -> String {
    use std::fmt::Write;
    let c = &spec.chart;
    let q = |s: &str| format!("{s:?}");
    let arr = |v: &[f64; 3]| format!("[{:?}, {:?}, {:?}]", v[0], v[1], v[2]);
    let mut out = String::new();
    let _ = writeln!(out, "name = {}", q(name));
    let names = c.names();
    let _ = writeln!(out, "coords = [{}, {}, {}]", q(names[0]), q(names[1]), q(names[2]));
    let _ = writeln!(out, "orientation = {:?}", c.orientation);
    let _ = writeln!(out, "\n[domain]\nlo = {}\nhi = {}", arr(&c.lo), arr(&c.hi));
    let _ = writeln!(out, "\n[interior]\nlo = {}\nhi = {}", arr(&interior.lo), arr(&interior.hi));
    let _ = writeln!(out, "\n[twisted]\nbase = [{}, {}, {}]", q(&base[0]), q(&base[1]), q(&base[2]));
    match &spec.origin {
        Origin::Explicit { u, v } => {
            let _ = writeln!(out, "u = {}\nv = {}", q(u), q(v));
        }
        Origin::Recovered(r) => {
            let _ = writeln!(out, "k0 = {}\nh0 = {:?}\nstep = {:?}", q(&r.k0), r.h0, r.step);
        }
    }
    if !expect.is_empty() {
        let _ = writeln!(out, "\n[expect]");
        for (k, v) in expect {
            let _ = writeln!(out, "{k} = {}", q(v));
        }
    }
    out
}

/// Bundled scenario files as `(name, text)`.
pub const BUNDLED: [(&str, &str); 10] = [
    ("euclidean-geodesic", include_str!("../scenarios/euclidean-geodesic.scn")),
    ("cylinder", include_str!("../scenarios/cylinder.scn")),
    ("sphere-foliation", include_str!("../scenarios/sphere-foliation.scn")),
    ("helix", include_str!("../scenarios/helix.scn")),
    ("helix-twisted", include_str!("../scenarios/helix-twisted.scn")),
    ("kenmotsu-warped", include_str!("../scenarios/kenmotsu-warped.scn")),
    ("flat-product", include_str!("../scenarios/flat-product.scn")),
    ("sasakian-r3", include_str!("../scenarios/sasakian-r3.scn")),
    ("twisted-critical", include_str!("../scenarios/twisted-critical.scn")),
    ("twisted-noncritical", include_str!("../scenarios/twisted-noncritical.scn")),
];

pub fn bundled(name: &str) -> Option<Scenario> {
    BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| Scenario::parse(t).expect("bundled scenarios parse"))
}
