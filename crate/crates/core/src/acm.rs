//! Almost contact metric structure `(φ, ω, T, g)` induced by a unit field,
//! covariant derivative of `φ` and Chinea–Gonzalez classification.

use rayon::prelude::*;
use serde::Serialize;

use crate::chart::Grid;
use crate::error::{Error, Result};
use crate::geometry::{completion, frenet_local, point_jets, FrenetOptions, Jet1, Local, MetricSource, VectorSource};

/// Pointwise values of the structure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcmPoint {
    pub point: [f64; 3],
    pub g: [[f64; 3]; 3],
    pub t: [f64; 3],
    pub omega: [f64; 3],
    /// `phi[i][k]`: `(φX)^i = phi[i][k] X^k`
    pub phi: [[f64; 3]; 3],
}

fn mat_vec(m: &[[f64; 3]; 3], x: &[f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|i| (0..3).map(|k| m[i][k] * x[k]).sum())
}

impl AcmPoint {
    pub fn from_local(local: &Local) -> Self {
        let t = crate::geometry::jet1_values(&local.t);
        AcmPoint {
            point: local.point,
            g: local.metric_values(),
            t,
            omega: local.flat(&t),
            phi: local.phi().map(|r| r.map(|j| j.v)),
        }
    }

    pub fn apply_phi(&self, x: &[f64; 3]) -> [f64; 3] {
        mat_vec(&self.phi, x)
    }

    pub fn omega_of(&self, x: &[f64; 3]) -> f64 {
        (0..3).map(|i| self.omega[i] * x[i]).sum()
    }

    pub fn dot(&self, x: &[f64; 3], y: &[f64; 3]) -> f64 {
        let gx = mat_vec(&self.g, x);
        (0..3).map(|i| gx[i] * y[i]).sum()
    }

    pub fn norm(&self, x: &[f64; 3]) -> f64 {
        self.dot(x, x).max(0.0).sqrt()
    }

    /// Residuals of the defining identities at this point.
    pub fn identities(&self) -> IdentityResiduals {
        let mut r = IdentityResiduals {
            omega_t: (self.omega_of(&self.t) - 1.0).abs(),
            phi_t: self.norm(&self.apply_phi(&self.t)),
            ..Default::default()
        };
        let basis = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        for x in &basis {
            let px = self.apply_phi(x);
            let ppx = self.apply_phi(&px);
            let w = self.omega_of(x);
            let d = [0, 1, 2].map(|i| ppx[i] + x[i] - w * self.t[i]);
            r.phi_squared = r.phi_squared.max(self.norm(&d));
            r.omega_phi = r.omega_phi.max(self.omega_of(&px).abs());
            for y in &basis {
                let py = self.apply_phi(y);
                let lhs = self.dot(&px, &py);
                let rhs = self.dot(x, y) - w * self.omega_of(y);
                r.compatibility = r.compatibility.max((lhs - rhs).abs());
            }
        }
        r
    }
}

/// Sup-norm defects of `φ² = -Id + ω⊗T`, `⟨φX,φY⟩ = ⟨X,Y⟩ - ω(X)ω(Y)`,
/// `ω(T) = 1`, `ω∘φ = 0`, `φT = 0`, and on the Frenet set `φN = B`,
/// `φB = -N`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct IdentityResiduals {
    pub phi_squared: f64,
    pub compatibility: f64,
    pub omega_t: f64,
    pub omega_phi: f64,
    pub phi_t: f64,
    pub frame: f64,
}

impl IdentityResiduals {
    pub fn max(&self) -> f64 {
        [
            self.phi_squared,
            self.compatibility,
            self.omega_t,
            self.omega_phi,
            self.phi_t,
            self.frame,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    fn merge(self, o: Self) -> Self {
        IdentityResiduals {
            phi_squared: self.phi_squared.max(o.phi_squared),
            compatibility: self.compatibility.max(o.compatibility),
            omega_t: self.omega_t.max(o.omega_t),
            omega_phi: self.omega_phi.max(o.omega_phi),
            phi_t: self.phi_t.max(o.phi_t),
            frame: self.frame.max(o.frame),
        }
    }
}

/// `φ` built from an explicit orthonormal completion `(E1, E2)` of `T`:
/// `φE1 = E2`, `φE2 = -E1`, `φT = 0`.
pub fn phi_from_basis(g: &[[f64; 3]; 3], e1: &[f64; 3], e2: &[f64; 3]) -> [[f64; 3]; 3] {
    // φ = E2 ⊗ E1♭ - E1 ⊗ E2♭
    let f1 = mat_vec(g, e1);
    let f2 = mat_vec(g, e2);
    [0, 1, 2].map(|i| [0, 1, 2].map(|k| e2[i] * f1[k] - e1[i] * f2[k]))
}

/// Full tensor `(∇_e φ)^i_k` as `out[e][i][k]`.
pub fn nabla_phi_tensor(local: &Local) -> [[[f64; 3]; 3]; 3] {
    let phi: [[Jet1; 3]; 3] = local.phi();
    let mut out = [[[0.0; 3]; 3]; 3];
    for (e, oe) in out.iter_mut().enumerate() {
        for i in 0..3 {
            for k in 0..3 {
                let mut acc = phi[i][k].d[e];
                for l in 0..3 {
                    acc += local.gamma[i][e][l].v * phi[l][k].v;
                    acc -= phi[i][l].v * local.gamma[l][e][k].v;
                }
                oe[i][k] = acc;
            }
        }
    }
    out
}

/// `(∇_X φ)Y` from the tensor returned by [`nabla_phi_tensor`].
pub fn apply_nabla_phi(nphi: &[[[f64; 3]; 3]; 3], x: &[f64; 3], y: &[f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|i| {
        let mut acc = 0.0;
        for e in 0..3 {
            for k in 0..3 {
                acc += x[e] * nphi[e][i][k] * y[k];
            }
        }
        acc
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassOptions {
    pub class_tol: f64,
    pub frenet: FrenetOptions,
}

impl Default for ClassOptions {
    fn default() -> Self {
        ClassOptions {
            class_tol: 1e-5,
            frenet: FrenetOptions::default(),
        }
    }
}

/// Almost contact metric structure of `(g, T)` on the sample grid.
pub struct AcmStructure<'a> {
    pub metric: &'a dyn MetricSource,
    pub field: &'a dyn VectorSource,
    pub orientation: f64,
    pub grid: Grid,
    pub identities: IdentityResiduals,
    pub options: ClassOptions,
}

impl std::fmt::Debug for AcmStructure<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AcmStructure")
            .field("orientation", &self.orientation)
            .field("grid", &self.grid)
            .field("identities", &self.identities)
            .finish()
    }
}

/// Builds the structure and checks its defining identities at every node.
pub fn build_acm<'a>(
    metric: &'a dyn MetricSource,
    field: &'a dyn VectorSource,
    grid: &Grid,
    options: &ClassOptions,
) -> Result<AcmStructure<'a>> {
    let o = grid.chart.orientation;
    let per = grid.sample(|p| {
        let local = Local::new(p, &point_jets(metric, field, &p)?, o)?;
        let fr = frenet_local(&local, &options.frenet)?;
        let a = AcmPoint::from_local(&local);
        let mut r = a.identities();
        if !fr.geodesic {
            let pn = a.apply_phi(&fr.n);
            let pb = a.apply_phi(&fr.b);
            let d1 = [0, 1, 2].map(|i| pn[i] - fr.b[i]);
            let d2 = [0, 1, 2].map(|i| pb[i] + fr.n[i]);
            r.frame = a.norm(&d1).max(a.norm(&d2));
        }
        Ok(r)
    })?;
    let identities = per
        .data
        .into_iter()
        .fold(IdentityResiduals::default(), IdentityResiduals::merge);
    Ok(AcmStructure {
        metric,
        field,
        orientation: o,
        grid: grid.clone(),
        identities,
        options: *options,
    })
}

impl AcmStructure<'_> {
    pub fn local(&self, p: &[f64; 3]) -> Result<Local> {
        Local::new(*p, &point_jets(self.metric, self.field, p)?, self.orientation)
    }

    pub fn at(&self, p: &[f64; 3]) -> Result<AcmPoint> {
        Ok(AcmPoint::from_local(&self.local(p)?))
    }

    /// `(∇_X φ)Y = ∇_X(φY) - φ(∇_X Y)` at `p` for constant coordinate vectors.
    pub fn nabla_phi(&self, x: &[f64; 3], y: &[f64; 3], p: &[f64; 3]) -> Result<[f64; 3]> {
        let local = self.local(p)?;
        Ok(apply_nabla_phi(&nabla_phi_tensor(&local), x, y))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "cosymplectic")]
    Cosymplectic,
    C5,
    C12,
    #[serde(rename = "C5+C12")]
    C5PlusC12,
    #[serde(rename = "contact-metric")]
    ContactMetric,
    #[serde(rename = "unclassified")]
    Unclassified,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Cosymplectic => "cosymplectic",
            Verdict::C5 => "C5",
            Verdict::C12 => "C12",
            Verdict::C5PlusC12 => "C5+C12",
            Verdict::ContactMetric => "contact-metric",
            Verdict::Unclassified => "unclassified",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            Verdict::Cosymplectic,
            Verdict::C5,
            Verdict::C12,
            Verdict::C5PlusC12,
            Verdict::ContactMetric,
            Verdict::Unclassified,
        ]
        .into_iter()
        .find(|v| v.label() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassReport {
    pub residual_c5plus12: f64,
    pub residual_c5: f64,
    pub residual_c12: f64,
    pub residual_cosymplectic: f64,
    pub residual_contact_metric: f64,
    pub beta_estimate: f64,
    pub beta_stddev: f64,
    pub max_k: f64,
    pub samples: usize,
    pub class_tol: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Copy, Default)]
struct PointClass {
    cosymplectic: f64,
    c5: f64,
    c12: f64,
    c5plus12: f64,
    contact: f64,
    beta: f64,
    k: f64,
}

fn least_squares(a: &[[f64; 3]], m: &[[f64; 3]], p: &AcmPoint) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (ai, mi) in a.iter().zip(m) {
        num += p.dot(ai, mi);
        den += p.dot(mi, mi);
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

fn classify_point(local: &Local, opts: &ClassOptions) -> Result<PointClass> {
    let fr = frenet_local(local, &opts.frenet)?;
    let a = AcmPoint::from_local(local);
    let nphi = nabla_phi_tensor(local);
    let frame = if fr.geodesic {
        let (e1, e2) = completion(local);
        [a.t, e1, e2]
    } else {
        [a.t, fr.n, fr.b]
    };
    // ∇_T T
    let acc = local.covariant(&a.t, &local.t);
    let phi_acc = a.apply_phi(&acc);

    let mut actual = Vec::with_capacity(9);
    let mut model5 = Vec::with_capacity(9);
    let mut model12 = Vec::with_capacity(9);
    let mut contact: f64 = 0.0;
    for x in &frame {
        let px = a.apply_phi(x);
        let wx = a.omega_of(x);
        let nxt = local.covariant(x, &local.t);
        for y in &frame {
            let py = a.apply_phi(y);
            let wy = a.omega_of(y);
            actual.push(apply_nabla_phi(&nphi, x, y));
            let s = a.dot(&px, y);
            model5.push([0, 1, 2].map(|i| s * a.t[i] - wy * px[i]));
            let nabla_t_omega = a.dot(&acc, &py);
            model12.push([0, 1, 2].map(|i| -wx * (nabla_t_omega * a.t[i] + wy * phi_acc[i])));
            let nyt = local.covariant(y, &local.t);
            let d_omega = a.dot(&nxt, y) - a.dot(&nyt, x);
            contact = contact.max((a.dot(x, &py) - d_omega).abs());
        }
    }
    let beta5 = least_squares(&actual, &model5, &a);
    let rest: Vec<[f64; 3]> = actual
        .iter()
        .zip(&model12)
        .map(|(x, m)| [0, 1, 2].map(|i| x[i] - m[i]))
        .collect();
    let beta512 = least_squares(&rest, &model5, &a);
    let mut out = PointClass {
        contact,
        beta: beta5,
        k: fr.k,
        ..Default::default()
    };
    for j in 0..actual.len() {
        let x = &actual[j];
        let m5 = &model5[j];
        let m12 = &model12[j];
        out.cosymplectic = out.cosymplectic.max(a.norm(x));
        out.c5 = out.c5.max(a.norm(&[0, 1, 2].map(|i| x[i] - beta5 * m5[i])));
        out.c12 = out.c12.max(a.norm(&[0, 1, 2].map(|i| x[i] - m12[i])));
        out.c5plus12 = out
            .c5plus12
            .max(a.norm(&[0, 1, 2].map(|i| x[i] - beta512 * m5[i] - m12[i])));
    }
    Ok(out)
}

/// Evaluates each class identity on frame pairs at every sample node.
pub fn classify(acm: &AcmStructure) -> Result<ClassReport> {
    let opts = acm.options;
    let grid = &acm.grid;
    let pts: Vec<PointClass> = (0..grid.len())
        .into_par_iter()
        .map(|idx| classify_point(&acm.local(&grid.point(idx))?, &opts))
        .collect::<Result<_>>()?;
    if pts.is_empty() {
        return Err(Error::Invalid("no sample points".into()));
    }
    let n = pts.len() as f64;
    let mean = pts.iter().map(|p| p.beta).sum::<f64>() / n;
    let var = pts.iter().map(|p| (p.beta - mean).powi(2)).sum::<f64>() / n;
    let sup = |f: fn(&PointClass) -> f64| pts.iter().map(f).fold(0.0, f64::max);
    let mut report = ClassReport {
        residual_c5plus12: sup(|p| p.c5plus12),
        residual_c5: sup(|p| p.c5),
        residual_c12: sup(|p| p.c12),
        residual_cosymplectic: sup(|p| p.cosymplectic),
        residual_contact_metric: sup(|p| p.contact),
        beta_estimate: mean,
        beta_stddev: var.sqrt(),
        max_k: sup(|p| p.k),
        samples: pts.len(),
        class_tol: opts.class_tol,
        verdict: Verdict::Unclassified,
    };
    report.verdict = verdict_for(&report);
    Ok(report)
}

pub fn verdict_for(r: &ClassReport) -> Verdict {
    let tol = r.class_tol;
    if r.residual_cosymplectic <= tol {
        Verdict::Cosymplectic
    } else if r.residual_c5 <= tol && r.beta_stddev <= tol && r.beta_estimate > 0.0 {
        Verdict::C5
    } else if r.residual_c12 <= tol {
        Verdict::C12
    } else if r.residual_c5plus12 <= tol {
        Verdict::C5PlusC12
    } else if r.residual_contact_metric <= tol {
        Verdict::ContactMetric
    } else {
        Verdict::Unclassified
    }
}
