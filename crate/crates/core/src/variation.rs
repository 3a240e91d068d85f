//! Metric variations keeping `T` unit, first variation of `gv*` by finite
//! differences and by the analytic integrands, and Euler–Lagrange residuals.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::chart::{integrate, Bump, ChartBox, FieldSample, Grid, ScalarField};
use crate::error::{Error, Result};
use crate::exprlang::{sym_index, Jet2};
use crate::forms::rw_integrand;
use crate::geometry::{frame_jets, frenet, frenet_from_jets, jet1_values as values, point_jets, FrenetData, Jet1, Local, GeometryField, MetricJet, PointJets};
use crate::problem::Problem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VariationKind {
    Gtop,
    Gpitchfork,
}

impl VariationKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "gtop" => Some(VariationKind::Gtop),
            "gpitchfork" => Some(VariationKind::Gpitchfork),
            _ => None,
        }
    }
}

/// Bump-supported variation `ġ` with exact coordinate jets.
///
/// With `ω = T♭` and the 1-forms `α_a = dx^a - T^a ω` (which annihilate
/// `T`), a `g⊤` variation is `ġ = bump · Σ C_ab α_a ⊗ α_b` and a `g⊥`
/// variation is `ġ = bump · (ω ⊗ β + β ⊗ ω)` with `β = Σ b_a α_a`. Both
/// are fixed coordinate tensors built from the `t = 0` data, with
/// `ġ(T,T) = 0`; `g⊤` also has `ġ(T,·) = 0` and `g⊥` has `ġ` vanishing on
/// `ker ω × ker ω`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariationTensor {
    pub kind: VariationKind,
    pub bump: Bump,
    /// Frame components at the bump center: `(ġ_NN, ġ_NB, ġ_BB)` or
    /// `(ġ_TN, ġ_TB, 0)`.
    pub amplitudes: [f64; 3],
    /// `C_ab` for `g⊤`; row 0 holds `b_a` for `g⊥`.
    pub coeffs: [[f64; 3]; 3],
}

impl VariationTensor {
    /// `g⊤` variation whose frame components at the bump center are
    /// `(nn, nb, bb)`, using the frame `center` computed there.
    pub fn gtop(bump: Bump, center: &FrenetData, nn: f64, nb: f64, bb: f64) -> Self {
        let nf = center.flat(&center.n);
        let bf = center.flat(&center.b);
        let coeffs = [0, 1, 2].map(|a| {
            [0, 1, 2].map(|c| {
                nn * nf[a] * nf[c] + nb * (nf[a] * bf[c] + bf[a] * nf[c]) + bb * bf[a] * bf[c]
            })
        });
        VariationTensor {
            kind: VariationKind::Gtop,
            bump,
            amplitudes: [nn, nb, bb],
            coeffs,
        }
    }

    /// `g⊥` variation with `(ġ_TN, ġ_TB) = (tn, tb)` at the bump center.
    pub fn gpitchfork(bump: Bump, center: &FrenetData, tn: f64, tb: f64) -> Self {
        let nf = center.flat(&center.n);
        let bf = center.flat(&center.b);
        let mut coeffs = [[0.0; 3]; 3];
        coeffs[0] = [0, 1, 2].map(|a| tn * nf[a] + tb * bf[a]);
        VariationTensor {
            kind: VariationKind::Gpitchfork,
            bump,
            amplitudes: [tn, tb, 0.0],
            coeffs,
        }
    }

    pub fn zero(kind: VariationKind, bump: Bump) -> Self {
        VariationTensor {
            kind,
            bump,
            amplitudes: [0.0; 3],
            coeffs: [[0.0; 3]; 3],
        }
    }

    pub fn sup(&self) -> f64 {
        self.amplitudes.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    /// Coordinate jets of `ġ` at `p`, given the base jets there.
    pub fn coordinate_jet(&self, p: &[f64; 3], base: &PointJets) -> MetricJet {
        let s = self.bump.jet(p);
        let mut out = MetricJet::default();
        if s.value == 0.0 && s.grad.iter().chain(s.hess.iter()).all(|&x| x == 0.0) {
            return out;
        }
        let g = &base.metric;
        let t = &base.field.comps;
        let omega = [0, 1, 2].map(|i| {
            let mut acc = Jet2::constant(0.0);
            for (j, tj) in t.iter().enumerate() {
                acc = acc + *g.component(i, j) * *tj;
            }
            acc
        });
        // alpha[a][i] = δ_ai - T^a ω_i
        let alpha = [0, 1, 2].map(|a| {
            [0, 1, 2].map(|i| {
                let d = Jet2::constant(if a == i { 1.0 } else { 0.0 });
                d - t[a] * omega[i]
            })
        });
        match self.kind {
            VariationKind::Gtop => {
                // γ_b,j = Σ_a C_ab α_a,j, then ġ_ij = Σ_b α_b,i γ_b,j
                let gamma = [0, 1, 2].map(|b| {
                    [0, 1, 2].map(|j| {
                        let mut acc = Jet2::constant(0.0);
                        for a in 0..3 {
                            if self.coeffs[a][b] != 0.0 {
                                acc = acc + alpha[a][j] * self.coeffs[a][b];
                            }
                        }
                        acc
                    })
                });
                for i in 0..3 {
                    for j in i..3 {
                        let mut acc = Jet2::constant(0.0);
                        for b in 0..3 {
                            acc = acc + alpha[b][i] * gamma[b][j];
                        }
                        out.comps[sym_index(i, j)] = s * acc;
                    }
                }
            }
            VariationKind::Gpitchfork => {
                let beta = [0, 1, 2].map(|i| {
                    let mut acc = Jet2::constant(0.0);
                    for a in 0..3 {
                        acc = acc + alpha[a][i] * self.coeffs[0][a];
                    }
                    acc
                });
                for i in 0..3 {
                    for j in i..3 {
                        out.comps[sym_index(i, j)] = s * (omega[i] * beta[j] + beta[i] * omega[j]);
                    }
                }
            }
        }
        out
    }

    /// Frame components `ġ(X_a, X_b)` in the order `(T, N, B)` at a node.
    pub fn frame_components(&self, p: &[f64; 3], base: &PointJets, f: &FrenetData) -> [[f64; 3]; 3] {
        let m = self.coordinate_jet(p, base).values();
        let frame = [f.t, f.n, f.b];
        [0, 1, 2].map(|a| {
            [0, 1, 2].map(|b| {
                let mut acc = 0.0;
                for i in 0..3 {
                    for j in 0..3 {
                        acc += frame[a][i] * m[i][j] * frame[b][j];
                    }
                }
                acc
            })
        })
    }
}

/// Draws `count` variations with bumps inside `region` and center
/// amplitudes in `[-1, 1]`.
pub fn random_variations(
    problem: &Problem,
    kind: VariationKind,
    count: usize,
    seed: u64,
    region: &ChartBox,
) -> Result<Vec<VariationTensor>> {
    let grid = &problem.grid;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = grid.spacing();
    let chart = &grid.chart;
    let mut lo_c = [0.0; 3];
    let mut hi_c = [0.0; 3];
    let mut radius = [0.0; 3];
    for a in 0..3 {
        let lo = region.lo[a].max(chart.lo[a] + 2.5 * h[a]);
        let hi = region.hi[a].min(chart.hi[a] - 2.5 * h[a]);
        if !(hi > lo) {
            return Err(Error::Invalid(format!("region leaves no room for a bump on axis {a}")));
        }
        radius[a] = 0.3 * (hi - lo);
        lo_c[a] = lo + radius[a];
        hi_c[a] = hi - radius[a];
    }
    (0..count)
        .map(|_| {
            let center = [0, 1, 2].map(|a| rng.gen_range(lo_c[a]..=hi_c[a]));
            let bump = Bump::new(center, radius, grid)?;
            let mut amp = [0.0; 3];
            for x in amp.iter_mut() {
                *x = rng.gen_range(-1.0..1.0);
            }
            let f = frenet(
                problem.metric.as_ref(),
                problem.field.as_ref(),
                problem.orientation(),
                &center,
                &problem.frenet,
            )?;
            Ok(match kind {
                VariationKind::Gtop => VariationTensor::gtop(bump, &f, amp[0], amp[1], amp[2]),
                VariationKind::Gpitchfork => VariationTensor::gpitchfork(bump, &f, amp[0], amp[1]),
            })
        })
        .collect()
}

/// Stencil `T`-derivatives of the derived scalars entering the residuals.
#[derive(Debug, Clone)]
pub struct Derived {
    pub tk: ScalarField,
    pub ttk: ScalarField,
    /// `T(τ + h_{N,B})`
    pub t_r1: ScalarField,
    /// `T(k (h_{N,N} + h_{B,B}))`
    pub t_k_trh: ScalarField,
    /// `T(k (τ + h_{N,B}))`
    pub t_k_r1: ScalarField,
    pub t_hnn: ScalarField,
    pub t_mean: ScalarField,
    /// `T(T(k) - k h_{B,B})`
    pub t_r2: ScalarField,
}

impl Derived {
    pub fn compute(geom: &GeometryField) -> Result<Self> {
        let t = |f: ScalarField| geom.t_derivative(&f);
        let tk = t(geom.scalar(|f| f.k))?;
        Ok(Derived {
            ttk: t(tk.clone())?,
            t_r1: t(geom.scalar(|f| f.tau + f.h_nb()))?,
            t_k_trh: t(geom.scalar(|f| f.k * (f.h_nn() + f.h_bb())))?,
            t_k_r1: t(geom.scalar(|f| f.k * (f.tau + f.h_nb())))?,
            t_hnn: t(geom.scalar(|f| f.h_nn()))?,
            t_mean: t(geom.scalar(|f| f.mean_curvature))?,
            t_r2: t(FieldSample {
                grid: geom.grid.clone(),
                data: geom.nodes.iter().zip(&tk.data).map(|(f, tk)| tk - f.k * f.h_bb()).collect(),
            })?,
            tk,
        })
    }
}

/// Base geometry and jets for repeated perturbation.
pub struct Context {
    pub problem: Problem,
    pub jets: Vec<PointJets>,
    pub geom: GeometryField,
    pub derived: Derived,
    pub weights: Vec<f64>,
    /// `∫ k² dvol`
    pub scale: f64,
    /// Gauss–Legendre points per axis on the bump support for finite
    /// differences in `t`.
    pub fd_points: usize,
}

impl Context {
    pub fn new(problem: &Problem) -> Result<Self> {
        let jets = problem.jets()?;
        let geom = GeometryField::from_jets(&problem.grid, &jets, &problem.frenet)?;
        let derived = Derived::compute(&geom)?;
        let weights = problem.grid.simpson_weights()?;
        let scale = integrate(&geom.scalar(|f| f.k * f.k), &geom.volume())?;
        Ok(Context {
            problem: problem.clone(),
            jets,
            geom,
            derived,
            weights,
            scale,
            fd_points: 48,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.problem.grid
    }

    /// `1e-3 · ∫ k² dvol`
    pub fn stationarity_tol(&self) -> f64 {
        1e-3 * self.scale
    }
}

/// Coordinate jets of `ġ` on the nodes where they do not vanish.
#[derive(Debug, Clone)]
pub struct CoordVariation {
    pub support: Vec<usize>,
    pub jets: Vec<MetricJet>,
}

pub fn coordinate_variation(ctx: &Context, v: &VariationTensor) -> Result<CoordVariation> {
    let grid = ctx.grid();
    let support: Vec<usize> = (0..grid.len())
        .filter(|&i| v.bump.contains(&grid.point(i)))
        .collect();
    let jets: Vec<MetricJet> = support
        .par_iter()
        .map(|&i| v.coordinate_jet(&grid.point(i), &ctx.jets[i]))
        .collect();
    if jets.iter().any(|m| m.comps.iter().any(|c| !c.is_finite())) {
        return Err(Error::NonFinite("variation tensor".into()));
    }
    Ok(CoordVariation { support, jets })
}

/// Node jets of `g_t = g + t·ġ` over the whole grid.
pub fn perturb(ctx: &Context, v: &VariationTensor, t: f64) -> Result<Vec<PointJets>> {
    let cv = coordinate_variation(ctx, v)?;
    let mut out = ctx.jets.clone();
    for (i, m) in cv.support.iter().zip(&cv.jets) {
        out[*i].metric = ctx.jets[*i].metric.add_scaled(m, t);
    }
    // positive-definiteness is checked by the Frenet computation
    let o = ctx.problem.orientation();
    for i in &cv.support {
        crate::geometry::Local::new(ctx.grid().point(*i), &out[*i], o)?;
    }
    Ok(out)
}

fn frenet_at(ctx: &Context, cv: &CoordVariation, t: f64) -> Result<Vec<FrenetData>> {
    let o = ctx.problem.orientation();
    let opts = ctx.problem.frenet;
    cv.support
        .par_iter()
        .zip(cv.jets.par_iter())
        .map(|(&i, m)| {
            let base = &ctx.jets[i];
            let jets = PointJets {
                metric: base.metric.add_scaled(m, t),
                field: base.field,
            };
            frenet_from_jets(ctx.grid().point(i), &jets, o, &opts)
        })
        .collect()
}

/// Tensor Gauss–Legendre rule on the support box of a bump, with base and
/// variation jets at every point.
struct SupportRule {
    points: Vec<[f64; 3]>,
    weights: Vec<f64>,
    base: Vec<PointJets>,
    gdot: Vec<MetricJet>,
}

impl SupportRule {
    fn new(ctx: &Context, v: &VariationTensor) -> Result<Self> {
        let m = NonZeroUsize::new(ctx.fd_points.max(2)).unwrap();
        let rule = GaussLegendre::new(m);
        let axes = [0, 1, 2].map(|a| {
            let (c, r) = (v.bump.center[a], v.bump.radius[a]);
            rule.iter().map(|(x, w)| (c + r * x, r * w)).collect::<Vec<_>>()
        });
        let mut points = Vec::with_capacity(m.get().pow(3));
        let mut weights = Vec::with_capacity(points.capacity());
        for &(x, wx) in &axes[0] {
            for &(y, wy) in &axes[1] {
                for &(z, wz) in &axes[2] {
                    points.push([x, y, z]);
                    weights.push(wx * wy * wz);
                }
            }
        }
        let pb = &ctx.problem;
        let base: Vec<PointJets> = points
            .par_iter()
            .map(|p| point_jets(pb.metric.as_ref(), pb.field.as_ref(), p))
            .collect::<Result<_>>()?;
        let gdot: Vec<MetricJet> = points
            .par_iter()
            .zip(base.par_iter())
            .map(|(p, b)| v.coordinate_jet(p, b))
            .collect();
        Ok(SupportRule {
            points,
            weights,
            base,
            gdot,
        })
    }

    /// `∫_support -k²(τ + h_{N,B}) dvol_{g_t}`, i.e. `gv*(t)` up to a
    /// `t`-independent constant.
    fn gv(&self, ctx: &Context, t: f64) -> Result<f64> {
        let o = ctx.problem.orientation();
        let opts = ctx.problem.frenet;
        let parts: Vec<f64> = (0..self.points.len())
            .into_par_iter()
            .map(|i| {
                let jets = PointJets {
                    metric: self.base[i].metric.add_scaled(&self.gdot[i], t),
                    field: self.base[i].field,
                };
                let f = frenet_from_jets(self.points[i], &jets, o, &opts)?;
                Ok(self.weights[i] * rw_integrand(&f) * f.sqrt_det)
            })
            .collect::<Result<_>>()?;
        Ok(parts.iter().sum())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FdReport {
    pub value: f64,
    pub deltas: [f64; 3],
    pub sweep: [f64; 3],
    /// Richardson sweep agrees to 5%.
    pub consistent: bool,
}

fn fd4(f: impl Fn(f64) -> Result<f64>, d: f64) -> Result<f64> {
    Ok((-f(2.0 * d)? + 8.0 * f(d)? - 8.0 * f(-d)? + f(-2.0 * d)?) / (12.0 * d))
}

/// Fourth-order central difference of `gv*(g + tġ)` at `t = 0` with a
/// `δ, δ/2, δ/4` sweep. The integral is taken on a Gauss–Legendre rule
/// over the bump support, outside of which `g_t = g`.
pub fn first_variation_fd(ctx: &Context, v: &VariationTensor) -> Result<FdReport> {
    if v.sup() == 0.0 {
        return Ok(FdReport {
            value: 0.0,
            deltas: [0.0; 3],
            sweep: [0.0; 3],
            consistent: true,
        });
    }
    let rule = SupportRule::new(ctx, v)?;
    let d0 = 1e-3 / v.sup();
    let deltas = [d0, d0 / 2.0, d0 / 4.0];
    let mut sweep = [0.0; 3];
    for (s, d) in sweep.iter_mut().zip(&deltas) {
        *s = fd4(|t| rule.gv(ctx, t), *d)?;
    }
    if sweep.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("first variation".into()));
    }
    let floor = 1e-9 * ctx.scale.max(f64::MIN_POSITIVE) * v.sup();
    let consistent = sweep[1..]
        .iter()
        .all(|s| (s - sweep[0]).abs() <= 0.05 * sweep[0].abs() + floor);
    Ok(FdReport {
        value: sweep[0],
        deltas,
        sweep,
        consistent,
    })
}

/// Which analytic first-variation integrand to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Formula {
    /// Re-derived integrands (validated against finite differences).
    Corrected,
    /// Integrands without the correction terms, for comparison.
    Uncorrected,
}

/// Left-hand sides of the two `g⊥` Euler–Lagrange equations.
pub fn pitchfork_lhs(f: &FrenetData, d: &Derived, i: usize) -> (f64, f64) {
    let (k, tau) = (f.k, f.tau);
    let (hnn, hnb, hbn, hbb) = (f.h_nn(), f.h_nb(), f.h_bn(), f.h_bb());
    let trh = hnn + hbb;
    let r1 = tau + hnb;
    let tk = d.tk.data[i];
    let e1 = k * (2.0 * tau + hnb - hbn) * trh - k * r1 * hnn - tk * (2.0 * tau + hnb - hbn) - k * d.t_r1.data[i];
    let e2 = k * trh * trh - d.t_k_trh.data[i] - k * trh * hbb + d.ttk.data[i] - tk * hnn - k * r1 * r1
        - 0.25 * k * k * k;
    (e1, e2)
}

/// Coefficients of `ġ_TN`, `ġ_TB` in the `g⊥` first variation
/// `2∫(Y_N ġ_TN + Y_B ġ_TB) dvol`, with `r1 = τ + h_{N,B}` and
/// `r2 = T(k) - k h_{B,B}`.
pub fn pitchfork_coefficients(f: &FrenetData, d: &Derived, i: usize) -> (f64, f64) {
    let k = f.k;
    let r1 = f.tau + f.h_nb();
    let r2 = d.tk.data[i] - k * f.h_bb();
    let yn = d.t_k_r1.data[i] - k * r1 * f.h_bb() + r2 * (f.tau - f.h_bn());
    let yb = -d.t_r2.data[i] + r2 * f.h_nn() + k * r1 * r1;
    (yn, yb)
}

/// The `ġ_TN`, `ġ_TB` brackets of the final display in the `g⊥` proof.
fn pitchfork_uncorrected_brackets(f: &FrenetData, d: &Derived, i: usize) -> (f64, f64) {
    let (k, tau) = (f.k, f.tau);
    let (hnn, hnb, hbn, hbb) = (f.h_nn(), f.h_nb(), f.h_bn(), f.h_bb());
    let trh = hnn + hbb;
    let r1 = tau + hnb;
    let tk = d.tk.data[i];
    let b1 = k * (2.0 * tau + hnb - hbn) * trh - k * r1 * hnn - d.t_k_r1.data[i];
    let b2 = k * trh * trh - d.t_k_trh.data[i] - k * hbb * trh - tk * trh + d.ttk.data[i] - k * r1 * r1
        - 0.25 * k * k * k;
    (b1, b2)
}

/// Pointwise analytic first-variation integrand (before `dvol`).
pub fn analytic_integrand(ctx: &Context, v: &VariationTensor, formula: Formula, i: usize) -> f64 {
    let f = &ctx.geom.nodes[i];
    if f.geodesic {
        return 0.0;
    }
    let p = ctx.grid().point(i);
    if !v.bump.contains(&p) {
        return 0.0;
    }
    let c = v.frame_components(&p, &ctx.jets[i], f);
    let d = &ctx.derived;
    let k = f.k;
    match v.kind {
        VariationKind::Gtop => {
            let (gnn, gnb, gbb) = (c[1][1], c[1][2], c[2][2]);
            let r1 = f.tau + f.h_nb();
            let lead = match formula {
                Formula::Corrected => k * k * r1 * (gbb - gnn),
                Formula::Uncorrected => 0.5 * k * k * r1 * (gbb - gnn),
            };
            -(lead + 2.0 * (k * d.tk.data[i] - k * k * f.h_bb()) * gnb)
        }
        VariationKind::Gpitchfork => {
            let (gtn, gtb) = (c[0][1], c[0][2]);
            match formula {
                Formula::Corrected => {
                    let (yn, yb) = pitchfork_coefficients(f, d, i);
                    2.0 * (yn * gtn + yb * gtb)
                }
                Formula::Uncorrected => {
                    let (b1, b2) = pitchfork_uncorrected_brackets(f, d, i);
                    -4.0 * (b1 * gtn + b2 * gtb)
                }
            }
        }
    }
}

/// Quadrature of [`analytic_integrand`] with the `t = 0` geometry.
pub fn analytic_first_variation(ctx: &Context, v: &VariationTensor, formula: Formula) -> Result<f64> {
    let data: Vec<f64> = (0..ctx.grid().len())
        .into_par_iter()
        .map(|i| analytic_integrand(ctx, v, formula, i))
        .collect();
    let f = FieldSample {
        grid: ctx.grid().clone(),
        data,
    };
    integrate(&f, &ctx.geom.volume())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Full,
    Gtop,
    Gpitchfork,
    Umbilic,
}

impl Suite {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "full" => Some(Suite::Full),
            "gtop" => Some(Suite::Gtop),
            "gpitchfork" => Some(Suite::Gpitchfork),
            "umbilic" => Some(Suite::Umbilic),
            _ => None,
        }
    }

    pub fn names(&self) -> &'static [&'static str] {
        match self {
            Suite::Full => &["r1", "r2", "r3", "r4"],
            Suite::Gtop => &["r1", "r2"],
            Suite::Gpitchfork => &["e1", "e2"],
            Suite::Umbilic => &["u1", "u2"],
        }
    }
}

pub const RESIDUAL_NAMES: [&str; 8] = ["r1", "r2", "r3", "r4", "e1", "e2", "u1", "u2"];

/// All residuals at node `i`, in the order of [`RESIDUAL_NAMES`].
pub fn residuals_at(f: &FrenetData, d: &Derived, i: usize) -> [f64; 8] {
    let (k, tau) = (f.k, f.tau);
    let (hnn, hnb, hbn, hbb) = (f.h_nn(), f.h_nb(), f.h_bn(), f.h_bb());
    let tk = d.tk.data[i];
    let hm = f.mean_curvature;
    let (e1, e2) = pitchfork_lhs(f, d, i);
    [
        tau + hnb,
        tk - k * hbb,
        (hnb + hbn) * (hnn + hbb),
        hnn * hnn - hbb * hbb - hnn * hbb - d.t_hnn.data[i] - 0.25 * k * k,
        e1,
        e2,
        tk - k * hm,
        d.t_mean.data[i] + hm * hm + 0.25 * k * k,
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualNorm {
    pub name: String,
    pub sup: f64,
    pub l2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ElReport {
    pub suite: Suite,
    pub norms: Vec<ResidualNorm>,
    /// Fraction of region nodes on the Frenet set.
    pub coverage: f64,
    pub samples: usize,
    pub el_tol: f64,
    pub critical: bool,
    /// No region node has `k > k_cut`.
    pub vacuous: bool,
}

impl ElReport {
    pub fn sup(&self, name: &str) -> Option<f64> {
        self.norms.iter().find(|n| n.name == name).map(|n| n.sup)
    }

    pub fn verdict(&self) -> &'static str {
        match (self.critical, self.vacuous) {
            (true, true) => "critical (geodesic)",
            (true, false) => "critical",
            _ => "not critical",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ElResiduals {
    pub report: ElReport,
    /// All eight residual fields, zero off the Frenet set.
    pub fields: Vec<(String, ScalarField)>,
}

/// Residual fields and their norms over `region ∩ U`.
pub fn el_residuals(
    geom: &GeometryField,
    derived: &Derived,
    region: &ChartBox,
    suite: Suite,
    el_tol: f64,
) -> Result<ElResiduals> {
    let mask = geom.grid.mask_in(region);
    let vals: Vec<[f64; 8]> = geom
        .nodes
        .par_iter()
        .enumerate()
        .map(|(i, f)| if f.geodesic { [0.0; 8] } else { residuals_at(f, derived, i) })
        .collect();
    let selected: Vec<usize> = (0..vals.len()).filter(|&i| mask[i] && !geom.nodes[i].geodesic).collect();
    let in_region = mask.iter().filter(|&&m| m).count();
    let mut norms = Vec::new();
    for name in suite.names() {
        let c = RESIDUAL_NAMES.iter().position(|n| n == name).unwrap();
        let mut sup: f64 = 0.0;
        let mut num = 0.0;
        let mut den = 0.0;
        for &i in &selected {
            let r = vals[i][c];
            if !r.is_finite() {
                return Err(Error::NonFinite(format!("residual {name}")));
            }
            sup = sup.max(r.abs());
            let w = geom.nodes[i].sqrt_det;
            num += r * r * w;
            den += w;
        }
        let l2 = if den > 0.0 { (num / den).sqrt() } else { 0.0 };
        norms.push(ResidualNorm {
            name: name.to_string(),
            sup,
            l2,
        });
    }
    let critical = norms.iter().all(|n| n.sup <= el_tol);
    let fields = RESIDUAL_NAMES
        .iter()
        .enumerate()
        .map(|(c, n)| {
            (
                n.to_string(),
                FieldSample {
                    grid: geom.grid.clone(),
                    data: vals.iter().map(|v| v[c]).collect(),
                },
            )
        })
        .collect();
    Ok(ElResiduals {
        report: ElReport {
            suite,
            norms,
            coverage: if in_region > 0 {
                selected.len() as f64 / in_region as f64
            } else {
                0.0
            },
            samples: selected.len(),
            el_tol,
            critical,
            vacuous: selected.is_empty(),
        },
        fields,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KDotCheck {
    /// Largest `|k̇_fd - k̇_formula| / |k̇_formula|` over compared nodes.
    pub max_rel_err: f64,
    pub compared: usize,
}

/// Compares `k̇` recomputed from `g_{±δ}` with the closed forms:
/// `-(k/2)ġ_NN` for `g⊤`, `T(ġ_TN) - (τ + h_{N,B})ġ_TB - h_{N,N}ġ_TN` for
/// `g⊥`. Nodes where the predicted `|k̇|` is below 10% of its maximum are
/// skipped.
pub fn k_dot_check(ctx: &Context, v: &VariationTensor) -> Result<KDotCheck> {
    let cv = coordinate_variation(ctx, v)?;
    let d = 1e-4 / v.sup().max(f64::MIN_POSITIVE);
    let ks = [2.0 * d, d, -d, -2.0 * d].map(|t| frenet_at(ctx, &cv, t));
    let ks: Vec<Vec<FrenetData>> = ks.into_iter().collect::<Result<_>>()?;
    let o = ctx.problem.orientation();
    let mut pred = Vec::with_capacity(cv.support.len());
    let mut fd = Vec::with_capacity(cv.support.len());
    for (j, &i) in cv.support.iter().enumerate() {
        let f = &ctx.geom.nodes[i];
        if f.geodesic || ks.iter().any(|k| k[j].geodesic) {
            continue;
        }
        let p = ctx.grid().point(i);
        let c = v.frame_components(&p, &ctx.jets[i], f);
        let kdot = match v.kind {
            VariationKind::Gtop => -0.5 * f.k * c[1][1],
            VariationKind::Gpitchfork => {
                let local = Local::new(p, &ctx.jets[i], o)?;
                let Some(t_gtn) = t_of_g_tn(&local, &cv.jets[j], ctx.problem.frenet.k_cut) else {
                    continue;
                };
                t_gtn - (f.tau + f.h_nb()) * c[0][2] - f.h_nn() * c[0][1]
            }
        };
        let num = (-ks[0][j].k + 8.0 * ks[1][j].k - 8.0 * ks[2][j].k + ks[3][j].k) / (12.0 * d);
        pred.push(kdot);
        fd.push(num);
    }
    let max = pred.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let mut out = KDotCheck {
        max_rel_err: 0.0,
        compared: 0,
    };
    for (p, f) in pred.iter().zip(&fd) {
        if p.abs() >= 0.1 * max && max > 0.0 {
            out.compared += 1;
            out.max_rel_err = out.max_rel_err.max((f - p).abs() / p.abs());
        }
    }
    Ok(out)
}

/// `T(ġ(T, N))` from exact jets.
fn t_of_g_tn(local: &Local, gdot: &MetricJet, k_cut: f64) -> Option<f64> {
    let (n, _) = frame_jets(local, k_cut)?;
    let mut acc = Jet1::from_jet2(&Jet2::constant(0.0));
    for a in 0..3 {
        for b in 0..3 {
            acc += Jet1::from_jet2(gdot.component(a, b)) * local.t[a] * n[b];
        }
    }
    Some(acc.along(&values(&local.t)))
}

/// Largest relative defect of `d/dt √det g_t = ½ tr_g(ġ) √det g` over the
/// support. `det g_t` is cubic in `t`, so the five-point difference of the
/// determinant is exact up to rounding.
pub fn volume_variation_check(ctx: &Context, v: &VariationTensor) -> Result<f64> {
    let cv = coordinate_variation(ctx, v)?;
    let d = 1e-2;
    let mut worst: f64 = 0.0;
    for (&i, m) in cv.support.iter().zip(&cv.jets) {
        let g = ctx.jets[i].metric.values();
        let gd = m.values();
        let det_at = |t: f64| {
            let a = [0, 1, 2].map(|r| [0, 1, 2].map(|c| g[r][c] + t * gd[r][c]));
            det3(&a)
        };
        let ddet = (-det_at(2.0 * d) + 8.0 * det_at(d) - 8.0 * det_at(-d) + det_at(-2.0 * d)) / (12.0 * d);
        let det0 = det_at(0.0);
        let lhs = ddet / (2.0 * det0.sqrt());
        let ginv = inv3(&g, det0);
        let mut tr = 0.0;
        for r in 0..3 {
            for c in 0..3 {
                tr += ginv[r][c] * gd[c][r];
            }
        }
        let rhs = 0.5 * tr * det0.sqrt();
        let scale = gd.iter().flatten().fold(0.0_f64, |a, x| a.max(x.abs())) * det0.sqrt();
        if scale > 1e-8 {
            worst = worst.max((lhs - rhs).abs() / scale);
        }
    }
    Ok(worst)
}

fn det3(a: &[[f64; 3]; 3]) -> f64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

fn inv3(a: &[[f64; 3]; 3], det: f64) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
            let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
            *x = (a[r0][c0] * a[r1][c1] - a[r0][c1] * a[r1][c0]) / det;
        }
    }
    out
}

#[cfg(test)]
mod tests;
