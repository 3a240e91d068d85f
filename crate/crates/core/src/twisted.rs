//! Double-twisted products `g = u(s)² g_B ⊕ v(x)² ds²` on a box over
//! `(x, y, s)` with `T = (1/v) ∂_s`, profile recovery from the critical ODE
//! and criticality checks.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::acm::{build_acm, classify, ClassOptions, Verdict};
use crate::chart::{ChartBox, Grid};
use crate::error::{Error, Result};
use crate::exprlang::{sym_index, Expr, Jet2};
use crate::geometry::{frenet, FrenetOptions, MetricJet, MetricSource, VectorJet, VectorSource};
use crate::ode::{self, integrate_critical};
use crate::problem::Problem;
use crate::variation::{el_residuals, Derived, Suite};

/// `C²` piecewise quintic through knots carrying value, first and second
/// derivative.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Profile1d {
    pub knots: Vec<f64>,
    /// `(f, f', f'')` at each knot.
    pub data: Vec<[f64; 3]>,
}

impl Profile1d {
    pub fn new(knots: Vec<f64>, data: Vec<[f64; 3]>) -> Result<Self> {
        if knots.len() < 2 || knots.len() != data.len() || knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Invalid("profile knots must be increasing and match the data".into()));
        }
        Ok(Profile1d { knots, data })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.knots[0], *self.knots.last().unwrap())
    }

    /// `(f, f', f'')` at `x`.
    pub fn eval(&self, x: f64) -> Result<[f64; 3]> {
        let (lo, hi) = self.range();
        let slack = 1e-12 * (hi - lo);
        if !(x >= lo - slack && x <= hi + slack) {
            return Err(Error::Invalid(format!("profile evaluated at {x} outside [{lo}, {hi}]")));
        }
        let i = self.knots.partition_point(|&k| k <= x).clamp(1, self.knots.len() - 1) - 1;
        let (x0, x1) = (self.knots[i], self.knots[i + 1]);
        let h = x1 - x0;
        let (f0, f1) = (self.data[i], self.data[i + 1]);
        let c0 = f0[0];
        let c1 = h * f0[1];
        let c2 = 0.5 * h * h * f0[2];
        let a = f1[0] - c0 - c1 - c2;
        let b = h * f1[1] - c1 - 2.0 * c2;
        let c = h * h * f1[2] - 2.0 * c2;
        let c3 = 10.0 * a - 4.0 * b + 0.5 * c;
        let c4 = -15.0 * a + 7.0 * b - c;
        let c5 = 6.0 * a - 3.0 * b + 0.5 * c;
        let t = (x - x0) / h;
        let p = c0 + t * (c1 + t * (c2 + t * (c3 + t * (c4 + t * c5))));
        let dp = c1 + t * (2.0 * c2 + t * (3.0 * c3 + t * (4.0 * c4 + t * 5.0 * c5)));
        let ddp = 2.0 * c2 + t * (6.0 * c3 + t * (12.0 * c4 + t * 20.0 * c5));
        Ok([p, dp / h, ddp / (h * h)])
    }
}

/// A positive profile: an expression over the chart coordinates or samples
/// along one axis.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Expr(Expr),
    Sampled { axis: usize, profile: Profile1d },
}

impl Profile {
    pub fn jet(&self, p: &[f64; 3]) -> Result<Jet2> {
        match self {
            Profile::Expr(e) => e.eval_jet2(p),
            Profile::Sampled { axis, profile } => {
                let [f, df, ddf] = profile.eval(p[*axis])?;
                let mut j = Jet2::constant(f);
                j.grad[*axis] = df;
                j.hess[sym_index(*axis, *axis)] = ddf;
                Ok(j)
            }
        }
    }
}

/// How a spec came about; kept so it can be written back as a scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Origin {
    Explicit { u: String, v: String },
    Recovered(Recovery),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recovery {
    pub k0: String,
    pub h0: f64,
    pub step: f64,
    /// Base point of the reference `s`-line.
    pub x_ref: f64,
    pub y_ref: f64,
    pub k0_ref: f64,
    /// Fitted `c` in `H = -c·T(log u)`, measured with the geometry module.
    pub calibration: f64,
}

#[derive(Debug, Clone)]
pub struct TwistedSpec {
    pub chart: ChartBox,
    /// `g_B` as `(g_xx, g_xy, g_yy)`.
    pub base: [Expr; 3],
    pub u: Profile,
    pub v: Profile,
    pub origin: Origin,
}

/// The assembled metric `u² g_B ⊕ v² ds²`.
pub struct TwistedMetric {
    pub base: [Expr; 3],
    pub u: Profile,
    pub v: Profile,
}

impl MetricSource for TwistedMetric {
    fn metric_jet(&self, p: &[f64; 3]) -> Result<MetricJet> {
        let u = self.u.jet(p)?;
        let v = self.v.jet(p)?;
        if !(u.value > 0.0 && v.value > 0.0) {
            return Err(Error::Invalid(format!("non-positive twisting profile at {p:?}")));
        }
        let u2 = u * u;
        let zero = Jet2::constant(0.0);
        Ok(MetricJet {
            comps: [
                u2 * self.base[0].eval_jet2(p)?,
                u2 * self.base[1].eval_jet2(p)?,
                zero,
                u2 * self.base[2].eval_jet2(p)?,
                zero,
                v * v,
            ],
        })
    }
}

/// `T = (1/v) ∂_s`.
pub struct TwistedField {
    pub v: Profile,
}

impl VectorSource for TwistedField {
    fn vector_jet(&self, p: &[f64; 3]) -> Result<VectorJet> {
        let v = self.v.jet(p)?;
        if !(v.value > 0.0) {
            return Err(Error::Invalid(format!("non-positive twisting profile at {p:?}")));
        }
        let zero = Jet2::constant(0.0);
        Ok(VectorJet {
            comps: [zero, zero, v.recip()],
        })
    }
}

impl TwistedSpec {
    pub fn metric(&self) -> TwistedMetric {
        TwistedMetric {
            base: self.base.clone(),
            u: self.u.clone(),
            v: self.v.clone(),
        }
    }

    pub fn field(&self) -> TwistedField {
        TwistedField { v: self.v.clone() }
    }

    /// Metric, field and grid with `n` cells per axis.
    pub fn problem(&self, n: usize) -> Result<Problem> {
        let grid = Grid::uniform(self.chart.clone(), n)?;
        Ok(Problem::new(Arc::new(self.metric()), Arc::new(self.field()), grid))
    }
}

/// Flat `g_B = dx² + dy²`.
pub fn flat_base() -> [Expr; 3] {
    [Expr::constant(1.0), Expr::constant(0.0), Expr::constant(1.0)]
}

/// Spec from explicit profile expressions over the chart coordinates.
pub fn explicit_spec(chart: &ChartBox, base: [Expr; 3], u: &str, v: &str) -> Result<TwistedSpec> {
    let names = chart.names();
    Ok(TwistedSpec {
        chart: chart.clone(),
        base,
        u: Profile::Expr(Expr::parse(u, &names)?),
        v: Profile::Expr(Expr::parse(v, &names)?),
        origin: Origin::Explicit {
            u: u.to_string(),
            v: v.to_string(),
        },
    })
}

/// The metric and a.c.m. structure of a spec on an `n`-grid, checked for
/// positivity and unit `T` at every node.
pub fn build_twisted(spec: &TwistedSpec, n: usize) -> Result<(TwistedMetric, TwistedField, Grid)> {
    let grid = Grid::uniform(spec.chart.clone(), n)?;
    let metric = spec.metric();
    let field = spec.field();
    build_acm(&metric, &field, &grid, &ClassOptions::default())?;
    Ok((metric, field, grid))
}

const BASE_PROBES: usize = 33;
const V_KNOTS: usize = 2048;

/// Recovers `u(s)` and `v(x)` from the initial curvature field `k0(x, y)` on
/// the leaf `s = 0` and a constant initial mean curvature `h0`.
///
/// `v` integrates `(log v)' = -k0(x, y_ref)` from the box center with
/// `v(x_ref) = 1`. `u` solves `-(log u)' = H/c` along the reference line,
/// where `(k, H)` is the critical ODE solution from `(k0(x_ref, y_ref), h0)`
/// and `c` is calibrated against the `H` that the geometry module measures
/// on the assembled metric.
pub fn recover_profiles(
    chart: &ChartBox,
    base: [Expr; 3],
    k0_source: &str,
    h0: f64,
    step: f64,
) -> Result<TwistedSpec> {
    let names = chart.names();
    let k0 = Expr::parse(k0_source, &names)?;
    let [x_ref, y_ref, _] = chart.center();
    check_k0(&k0, chart)?;
    let k0_ref = k0.eval(&[x_ref, y_ref, 0.0])?;

    let v = recover_v(&k0, chart, y_ref)?;
    let s_max = chart.lo[2].abs().max(chart.hi[2].abs());
    let ode = integrate_critical(k0_ref, h0, s_max, step)?;
    if let Some(s) = ode.blowup_s.or(ode.blowup_s_backward) {
        return Err(Error::BlowUp { s });
    }
    let knots: Vec<f64> = ode.samples.iter().map(|q| q.s).collect();
    let build_u = |c: f64| -> Result<Profile> {
        let data = ode
            .samples
            .iter()
            .map(|q| {
                // ∫₀ˢ H = log(k/k0) along the reference line
                let u = ((k0_ref / q.k).ln() / c).exp();
                let hp = -q.h * q.h - 0.25 * q.k * q.k;
                [u, -u * q.h / c, u * (q.h * q.h / (c * c) - hp / c)]
            })
            .collect();
        Ok(Profile::Sampled {
            axis: 2,
            profile: Profile1d::new(knots.clone(), data)?,
        })
    };

    let mut spec = TwistedSpec {
        chart: chart.clone(),
        base,
        u: build_u(1.0)?,
        v,
        origin: Origin::Recovered(Recovery {
            k0: k0_source.to_string(),
            h0,
            step,
            x_ref,
            y_ref,
            k0_ref,
            calibration: 1.0,
        }),
    };
    let calibration = calibrate(&spec, &ode.samples, x_ref, y_ref)?;
    if (calibration - 1.0).abs() > 1e-9 {
        spec.u = build_u(calibration)?;
    }
    if let Origin::Recovered(r) = &mut spec.origin {
        r.calibration = calibration;
    }
    Ok(spec)
}

fn check_k0(k0: &Expr, chart: &ChartBox) -> Result<()> {
    let mut sign = 0.0;
    for i in 0..BASE_PROBES {
        for j in 0..BASE_PROBES {
            let t = |a: usize, m: usize| chart.lo[a] + (chart.hi[a] - chart.lo[a]) * m as f64 / (BASE_PROBES - 1) as f64;
            let val = k0.eval(&[t(0, i), t(1, j), 0.0])?;
            if !(val.abs() > 1e-12) || (sign != 0.0 && val.signum() != sign) {
                return Err(Error::Invalid("k0 must not vanish or change sign on the base".into()));
            }
            sign = val.signum();
        }
    }
    Ok(())
}

fn recover_v(k0: &Expr, chart: &ChartBox, y_ref: f64) -> Result<Profile> {
    let (lo, hi) = (chart.lo[0], chart.hi[0]);
    let x_ref = 0.5 * (lo + hi);
    let at = |x: f64| -> Result<Jet2> { k0.eval_jet2(&[x, y_ref, 0.0]) };
    let knots: Vec<f64> = (0..=V_KNOTS).map(|i| lo + (hi - lo) * i as f64 / V_KNOTS as f64).collect();
    let mid = V_KNOTS / 2;
    let mut log_v = vec![0.0; knots.len()];
    let seg = |a: f64, b: f64| ode::gauss(|x| k0.eval(&[x, y_ref, 0.0]).unwrap_or(f64::NAN), a, b);
    for i in mid + 1..knots.len() {
        log_v[i] = log_v[i - 1] - seg(knots[i - 1], knots[i]);
    }
    for i in (0..mid).rev() {
        log_v[i] = log_v[i + 1] + seg(knots[i], knots[i + 1]);
    }
    if log_v.iter().any(|l| !l.is_finite()) {
        return Err(Error::NonFinite("recovered v profile".into()));
    }
    debug_assert_eq!(knots[mid], x_ref);
    let data = knots
        .iter()
        .zip(&log_v)
        .map(|(&x, &l)| {
            let j = at(x)?;
            let (k, dk) = (j.value, j.grad[0]);
            let v = l.exp();
            Ok([v, -k * v, (k * k - dk) * v])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Profile::Sampled {
        axis: 0,
        profile: Profile1d::new(knots, data)?,
    })
}

/// Ratio of the measured `H` to `-T(log u)` at the point of the reference
/// line where the ODE `|H|` is largest.
fn calibrate(spec: &TwistedSpec, samples: &[ode::Sample], x_ref: f64, y_ref: f64) -> Result<f64> {
    let (lo, hi) = (spec.chart.lo[2], spec.chart.hi[2]);
    let probe = samples
        .iter()
        .filter(|q| q.s > lo && q.s < hi)
        .max_by(|a, b| a.h.abs().total_cmp(&b.h.abs()));
    let Some(q) = probe else { return Ok(1.0) };
    if q.h.abs() < 1e-8 {
        return Ok(1.0);
    }
    let p = [x_ref, y_ref, q.s];
    let f = frenet(
        &spec.metric(),
        &spec.field(),
        spec.chart.orientation,
        &p,
        &FrenetOptions::default(),
    )?;
    let u = spec.u.jet(&p)?;
    let v = spec.v.jet(&p)?;
    let model = -u.grad[2] / (u.value * v.value);
    Ok(f.mean_curvature / model)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwistedReport {
    pub n: usize,
    pub el_tol: f64,
    pub samples: usize,
    pub tau: f64,
    /// `sup |Sym h - H g^⊤|` over `(N, B)` pairs.
    pub umbilicity: f64,
    /// `T(k) - kH`
    pub u1: f64,
    /// `T(H) + H² + k²/4`
    pub u2: f64,
    /// `⟨[T,N],B⟩`
    pub bracket_tn_b: f64,
    /// `⟨[B,T],N⟩`
    pub bracket_bt_n: f64,
    pub class_verdict: Verdict,
    pub residual_c5plus12: f64,
    pub class_compatible: bool,
    pub critical: bool,
}

impl TwistedReport {
    /// Residual sups in report order.
    pub fn norms(&self) -> [(&'static str, f64); 7] {
        [
            ("tau", self.tau),
            ("umbilicity", self.umbilicity),
            ("u1", self.u1),
            ("u2", self.u2),
            ("bracket_tn_b", self.bracket_tn_b),
            ("bracket_bt_n", self.bracket_bt_n),
            ("c5plus12", self.residual_c5plus12),
        ]
    }
}

/// Criticality defects of a spec over `region` on an `n`-grid.
pub fn verify_critical(spec: &TwistedSpec, n: usize, region: &ChartBox, el_tol: f64) -> Result<TwistedReport> {
    let problem = spec.problem(n)?.with_interior(region.clone());
    let geom = problem.geometry()?;
    let derived = Derived::compute(&geom)?;
    let el = el_residuals(&geom, &derived, region, Suite::Umbilic, el_tol)?;
    let mask = problem.interior_mask();
    let per: Vec<[f64; 4]> = geom
        .nodes
        .par_iter()
        .zip(mask.par_iter())
        .filter(|(_, &m)| m)
        .map(|(f, _)| {
            let hm = f.mean_curvature;
            let umb = (f.h_nn() - hm)
                .abs()
                .max((f.h_bb() - hm).abs())
                .max((0.5 * (f.h_nb() + f.h_bn())).abs());
            if f.geodesic {
                [0.0, umb, 0.0, 0.0]
            } else {
                [f.tau.abs(), umb, f.bracket_tn_b.abs(), (f.tau - f.h_bn()).abs()]
            }
        })
        .collect();
    let sup = |c: usize| per.iter().map(|r| r[c]).fold(0.0, f64::max);

    let class_grid = Grid::uniform(region.clone(), 8)?;
    let metric = spec.metric();
    let field = spec.field();
    let acm = build_acm(&metric, &field, &class_grid, &ClassOptions::default())?;
    let class = classify(&acm)?;
    let class_compatible = matches!(
        class.verdict,
        Verdict::Cosymplectic | Verdict::C5 | Verdict::C12 | Verdict::C5PlusC12
    );

    let mut report = TwistedReport {
        n,
        el_tol,
        samples: per.len(),
        tau: sup(0),
        umbilicity: sup(1),
        u1: el.report.sup("u1").unwrap_or(0.0),
        u2: el.report.sup("u2").unwrap_or(0.0),
        bracket_tn_b: sup(2),
        bracket_bt_n: sup(3),
        class_verdict: class.verdict,
        residual_c5plus12: class.residual_c5plus12,
        class_compatible,
        critical: false,
    };
    report.critical = class_compatible && report.norms()[..6].iter().all(|(_, v)| *v <= el_tol);
    Ok(report)
}
