//! Pointwise Riemannian machinery on a chart: Christoffel symbols,
//! covariant derivatives and the Frenet apparatus of a unit vector field.
//!
//! Analytic inputs arrive as second-order jets, so everything up to one
//! derivative of the Frenet frame (curvature, torsion, the second
//! fundamental form of `ker ω`) is evaluated without truncation error.

mod jet1;
mod local;

pub use jet1::{values as jet1_values, Jet1, Vec1};
pub use local::Local;
#[allow(unused_imports)]
pub(crate) use local::levi_civita;

use rayon::prelude::*;
use serde::Serialize;

use crate::chart::{FieldSample, Grid, ScalarField};
use crate::error::{Error, Result};
use crate::exprlang::{sym_index, Expr, Jet2};

/// Default Frenet cut-off below which a point counts as geodesic.
pub const DEFAULT_K_CUT: f64 = 1e-8;

/// Second-order jets of the six metric components
/// `(g00, g01, g02, g11, g12, g22)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricJet {
    pub comps: [Jet2; 6],
}

impl MetricJet {
    pub fn component(&self, i: usize, j: usize) -> &Jet2 {
        &self.comps[sym_index(i, j)]
    }

    /// `self + t·other`, component-wise on values and derivatives.
    pub fn add_scaled(&self, other: &MetricJet, t: f64) -> MetricJet {
        let mut out = *self;
        for (o, d) in out.comps.iter_mut().zip(other.comps.iter()) {
            *o = *o + *d * t;
        }
        out
    }

    pub fn values(&self) -> [[f64; 3]; 3] {
        [0, 1, 2].map(|i| [0, 1, 2].map(|j| self.component(i, j).value))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VectorJet {
    pub comps: [Jet2; 3],
}

impl VectorJet {
    pub fn values(&self) -> [f64; 3] {
        self.comps.map(|c| c.value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PointJets {
    pub metric: MetricJet,
    pub field: VectorJet,
}

/// Anything that yields a metric with exact second-order jets.
pub trait MetricSource: Send + Sync {
    fn metric_jet(&self, p: &[f64; 3]) -> Result<MetricJet>;
}

/// Anything that yields a vector field with exact second-order jets.
pub trait VectorSource: Send + Sync {
    fn vector_jet(&self, p: &[f64; 3]) -> Result<VectorJet>;
}

/// Metric given by six expressions `g00, g01, g02, g11, g12, g22`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprMetric {
    pub comps: [Expr; 6],
}

impl MetricSource for ExprMetric {
    fn metric_jet(&self, p: &[f64; 3]) -> Result<MetricJet> {
        let mut comps = [Jet2::default(); 6];
        for (c, e) in comps.iter_mut().zip(self.comps.iter()) {
            *c = e.eval_jet2(p)?;
        }
        Ok(MetricJet { comps })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExprVector {
    pub comps: [Expr; 3],
}

impl VectorSource for ExprVector {
    fn vector_jet(&self, p: &[f64; 3]) -> Result<VectorJet> {
        Ok(VectorJet {
            comps: [
                self.comps[0].eval_jet2(p)?,
                self.comps[1].eval_jet2(p)?,
                self.comps[2].eval_jet2(p)?,
            ],
        })
    }
}

pub fn point_jets(metric: &dyn MetricSource, field: &dyn VectorSource, p: &[f64; 3]) -> Result<PointJets> {
    Ok(PointJets {
        metric: metric.metric_jet(p)?,
        field: field.vector_jet(p)?,
    })
}

/// Christoffel symbols `Γ^c_{ab}` as `out[c][a][b]`.
pub fn christoffel(metric: &dyn MetricSource, p: &[f64; 3]) -> Result<[[[f64; 3]; 3]; 3]> {
    let jets = PointJets {
        metric: metric.metric_jet(p)?,
        field: VectorJet::default(),
    };
    let local = Local::new(*p, &jets, 1.0)?;
    Ok(local.gamma.map(|m| m.map(|r| r.map(|j| j.v))))
}

/// `∇_V W` at `p` for a constant vector `v` and a vector field `w`.
pub fn covariant_derivative(
    v: &[f64; 3],
    w: &dyn VectorSource,
    metric: &dyn MetricSource,
    p: &[f64; 3],
) -> Result<[f64; 3]> {
    let jets = point_jets(metric, w, p)?;
    let local = Local::new(*p, &jets, 1.0)?;
    Ok(local.covariant(v, &local.t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrenetOptions {
    pub k_cut: f64,
    /// Allowed `|g(T,T) - 1|`.
    pub unit_tol: f64,
}

impl Default for FrenetOptions {
    fn default() -> Self {
        FrenetOptions {
            k_cut: DEFAULT_K_CUT,
            unit_tol: 1e-8,
        }
    }
}

/// Frenet apparatus and `ker ω` data at one point.
///
/// `h[a][b]` uses the frame order `(N, B)`: `h[0][1] = h_{N,B}` and so on.
/// Where `geodesic` is set, `n`/`b` hold an arbitrary positively oriented
/// completion of `T` and `tau` is zero.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct FrenetData {
    pub geodesic: bool,
    pub sqrt_det: f64,
    pub metric: [f64; 6],
    pub t: [f64; 3],
    pub omega: [f64; 3],
    pub k: f64,
    pub grad_k: [f64; 3],
    pub n: [f64; 3],
    pub b: [f64; 3],
    pub tau: f64,
    pub h: [[f64; 2]; 2],
    pub mean_curvature: f64,
    /// `⟨[N,B],T⟩`, computed from coordinate brackets.
    pub tcal: f64,
    pub div_t: f64,
    /// `⟨[T,N],B⟩`, computed from coordinate brackets.
    pub bracket_tn_b: f64,
    /// `|∇_T N + kT - τB|_g`.
    pub closure: f64,
}

impl FrenetData {
    #[inline]
    pub fn h_nn(&self) -> f64 {
        self.h[0][0]
    }
    #[inline]
    pub fn h_nb(&self) -> f64 {
        self.h[0][1]
    }
    #[inline]
    pub fn h_bn(&self) -> f64 {
        self.h[1][0]
    }
    #[inline]
    pub fn h_bb(&self) -> f64 {
        self.h[1][1]
    }

    pub fn metric_matrix(&self) -> [[f64; 3]; 3] {
        [0, 1, 2].map(|i| [0, 1, 2].map(|j| self.metric[sym_index(i, j)]))
    }

    pub fn flat(&self, x: &[f64; 3]) -> [f64; 3] {
        let g = self.metric_matrix();
        [0, 1, 2].map(|i| (0..3).map(|j| g[i][j] * x[j]).sum())
    }

    pub fn dot(&self, x: &[f64; 3], y: &[f64; 3]) -> f64 {
        let xf = self.flat(x);
        (0..3).map(|i| xf[i] * y[i]).sum()
    }
}

/// Orthonormal completion `(E1, E2)` of `T` with `(T, E1, E2)` positively
/// oriented, built from the coordinate axis least aligned with `T`.
pub fn completion(local: &Local) -> ([f64; 3], [f64; 3]) {
    let t = jet1::values(&local.t);
    let tf = local.flat(&t);
    let mut best = 0;
    let mut score = f64::INFINITY;
    for a in 0..3 {
        let s = tf[a].abs() / local.g[a][a].v.sqrt();
        if s < score {
            score = s;
            best = a;
        }
    }
    let mut e1 = [0.0; 3];
    e1[best] = 1.0;
    let w = local.dot(&e1, &t);
    for i in 0..3 {
        e1[i] -= w * t[i];
    }
    let n = local.norm(&e1);
    e1 = e1.map(|x| x / n);
    let e2 = local.cross_values(&t, &e1);
    (e1, e2)
}

/// Frenet data from local jets.
pub fn frenet_from_jets(p: [f64; 3], jets: &PointJets, orientation: f64, opts: &FrenetOptions) -> Result<FrenetData> {
    let local = Local::new(p, jets, orientation)?;
    frenet_local(&local, opts)
}

pub fn frenet_local(local: &Local, opts: &FrenetOptions) -> Result<FrenetData> {
    let tv = jet1::values(&local.t);
    let norm2 = local.dot(&tv, &tv);
    if (norm2 - 1.0).abs() > opts.unit_tol {
        return Err(Error::NonUnitField {
            point: local.point,
            norm2,
        });
    }
    let accel = local.nabla_t(&local.t);
    let k2 = local.inner(&accel, &accel);
    let mut out = FrenetData {
        sqrt_det: local.sqrt_det.v,
        t: tv,
        omega: local.flat(&tv),
        div_t: local.div_t(),
        ..Default::default()
    };
    let gv = local.metric_values();
    for i in 0..3 {
        for j in i..3 {
            out.metric[sym_index(i, j)] = gv[i][j];
        }
    }
    let k_val = k2.v.max(0.0).sqrt();
    let (n, b): (Vec1, Vec1) = if k_val > opts.k_cut {
        let k = k2.sqrt();
        out.k = k.v;
        out.grad_k = k.d;
        let kinv = k.recip();
        let n = accel.map(|a| a * kinv);
        let b = local.cross(&local.t, &n);
        (n, b)
    } else {
        out.geodesic = true;
        out.k = k_val;
        let (e1, e2) = completion(local);
        (e1.map(Jet1::constant), e2.map(Jet1::constant))
    };
    out.n = jet1::values(&n);
    out.b = jet1::values(&b);

    let frame = [out.n, out.b];
    for (a, x) in frame.iter().enumerate() {
        let nabla_x_t = local.covariant(x, &local.t);
        for (c, y) in frame.iter().enumerate() {
            out.h[a][c] = -local.dot(&nabla_x_t, y);
        }
    }
    out.mean_curvature = 0.5 * (out.h[0][0] + out.h[1][1]);

    if !out.geodesic {
        let nabla_t_n = local.covariant(&tv, &n);
        out.tau = local.dot(&nabla_t_n, &out.b);
        let mut resid = [0.0; 3];
        for i in 0..3 {
            resid[i] = nabla_t_n[i] + out.k * tv[i] - out.tau * out.b[i];
        }
        out.closure = local.norm(&resid);
        out.bracket_tn_b = local.dot(&Local::bracket(&local.t, &n), &out.b);
        out.tcal = local.dot(&Local::bracket(&n, &b), &tv);
    } else {
        out.tcal = out.h[0][1] - out.h[1][0];
    }
    let finite = out.k.is_finite()
        && out.tau.is_finite()
        && out.h.iter().flatten().all(|x| x.is_finite())
        && out.n.iter().chain(out.b.iter()).all(|x| x.is_finite());
    if !finite {
        return Err(Error::NonFinite(format!("Frenet data at {:?}", local.point)));
    }
    Ok(out)
}

/// Jets of `N` and `B` where `k > k_cut`.
pub fn frame_jets(local: &Local, k_cut: f64) -> Option<(Vec1, Vec1)> {
    let accel = local.nabla_t(&local.t);
    let k2 = local.inner(&accel, &accel);
    if k2.v.max(0.0).sqrt() <= k_cut {
        return None;
    }
    let kinv = k2.sqrt().recip();
    let n = accel.map(|a| a * kinv);
    let b = local.cross(&local.t, &n);
    Some((n, b))
}

/// Frenet data of `T` at a single point.
pub fn frenet(
    metric: &dyn MetricSource,
    field: &dyn VectorSource,
    orientation: f64,
    p: &[f64; 3],
    opts: &FrenetOptions,
) -> Result<FrenetData> {
    frenet_from_jets(*p, &point_jets(metric, field, p)?, orientation, opts)
}

/// Frenet data sampled over a grid.
#[derive(Debug, Clone)]
pub struct GeometryField {
    pub grid: Grid,
    pub options: FrenetOptions,
    pub nodes: Vec<FrenetData>,
}

impl GeometryField {
    pub fn compute(
        grid: &Grid,
        metric: &dyn MetricSource,
        field: &dyn VectorSource,
        opts: &FrenetOptions,
    ) -> Result<Self> {
        let o = grid.chart.orientation;
        let nodes = grid
            .sample(|p| frenet(metric, field, o, &p, opts))?
            .data;
        Ok(GeometryField {
            grid: grid.clone(),
            options: *opts,
            nodes,
        })
    }

    pub fn from_jets(grid: &Grid, jets: &[PointJets], opts: &FrenetOptions) -> Result<Self> {
        let o = grid.chart.orientation;
        let nodes = jets
            .par_iter()
            .enumerate()
            .map(|(idx, j)| frenet_from_jets(grid.point(idx), j, o, opts))
            .collect::<Result<Vec<_>>>()?;
        Ok(GeometryField {
            grid: grid.clone(),
            options: *opts,
            nodes,
        })
    }

    pub fn scalar<F: Fn(&FrenetData) -> f64 + Sync + Send>(&self, f: F) -> ScalarField {
        FieldSample {
            grid: self.grid.clone(),
            data: self.nodes.par_iter().map(f).collect(),
        }
    }

    pub fn volume(&self) -> ScalarField {
        self.scalar(|n| n.sqrt_det)
    }

    pub fn t_field(&self) -> Vec<[f64; 3]> {
        self.nodes.iter().map(|n| n.t).collect()
    }

    /// Fraction of nodes on the non-geodesic set.
    pub fn coverage(&self) -> f64 {
        let on = self.nodes.iter().filter(|n| !n.geodesic).count();
        on as f64 / self.nodes.len() as f64
    }

    /// `V(f)` for the field `V` given per node.
    pub fn derivative_along(&self, f: &ScalarField, v: &[[f64; 3]]) -> Result<ScalarField> {
        crate::chart::directional_derivative(f, v)
    }

    /// `T(f)` by stencils.
    pub fn t_derivative(&self, f: &ScalarField) -> Result<ScalarField> {
        crate::chart::directional_derivative(f, &self.t_field())
    }
}

pub fn sample_jets(grid: &Grid, metric: &dyn MetricSource, field: &dyn VectorSource) -> Result<Vec<PointJets>> {
    Ok(grid.sample(|p| point_jets(metric, field, &p))?.data)
}

#[cfg(test)]
mod tests;
