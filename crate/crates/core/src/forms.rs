//! One-forms on the grid, exterior derivatives by stencils, and the two
//! evaluations of `gv*`.

use rayon::prelude::*;
use serde::Serialize;

use crate::chart::{gradient, integrate, ChartBox, FieldSample, Grid, ScalarField};
use crate::error::{Error, Result};
use crate::geometry::{FrenetData, GeometryField};

/// Coordinate components `α_i` at every node.
#[derive(Debug, Clone, PartialEq)]
pub struct OneForm {
    pub grid: Grid,
    pub comps: Vec<[f64; 3]>,
}

impl OneForm {
    pub fn from_fn<F: Fn(usize) -> [f64; 3] + Sync + Send>(grid: &Grid, f: F) -> Self {
        OneForm {
            grid: grid.clone(),
            comps: (0..grid.len()).into_par_iter().map(f).collect(),
        }
    }

    pub fn apply(&self, idx: usize, x: &[f64; 3]) -> f64 {
        let a = &self.comps[idx];
        a[0] * x[0] + a[1] * x[1] + a[2] * x[2]
    }

    /// `(α(T), α(N), α(B))` per node.
    pub fn frame_values(&self, geom: &GeometryField) -> Vec<[f64; 3]> {
        geom.nodes
            .iter()
            .enumerate()
            .map(|(i, f)| [self.apply(i, &f.t), self.apply(i, &f.n), self.apply(i, &f.b)])
            .collect()
    }

    fn component(&self, j: usize) -> ScalarField {
        FieldSample {
            grid: self.grid.clone(),
            data: self.comps.iter().map(|c| c[j]).collect(),
        }
    }
}

/// Coordinate components `(dα)_{ij} = ∂_i α_j - ∂_j α_i`.
pub fn exterior_d_coords(alpha: &OneForm) -> Result<Vec<[[f64; 3]; 3]>> {
    // grads[j][i] = ∂_i α_j
    let grads = [
        gradient(&alpha.component(0))?,
        gradient(&alpha.component(1))?,
        gradient(&alpha.component(2))?,
    ];
    Ok((0..alpha.grid.len())
        .map(|n| [0, 1, 2].map(|i| [0, 1, 2].map(|j| grads[j][i][n] - grads[i][j][n])))
        .collect())
}

pub fn eval_two_form(m: &[[f64; 3]; 3], x: &[f64; 3], y: &[f64; 3]) -> f64 {
    let mut acc = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            acc += m[i][j] * x[i] * y[j];
        }
    }
    acc
}

/// A 2-form evaluated on the Frenet frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct FrameTwoForm {
    pub tn: f64,
    pub tb: f64,
    pub nb: f64,
}

/// `dα(T,N)`, `dα(T,B)`, `dα(N,B)` per node.
pub fn exterior_d(alpha: &OneForm, geom: &GeometryField) -> Result<Vec<FrameTwoForm>> {
    let d = exterior_d_coords(alpha)?;
    Ok(geom
        .nodes
        .iter()
        .zip(&d)
        .map(|(f, m)| FrameTwoForm {
            tn: eval_two_form(m, &f.t, &f.n),
            tb: eval_two_form(m, &f.t, &f.b),
            nb: eval_two_form(m, &f.n, &f.b),
        })
        .collect())
}

/// `ω = T♭`.
pub fn omega_form(geom: &GeometryField) -> OneForm {
    OneForm::from_fn(&geom.grid, |i| geom.nodes[i].omega)
}

/// `η = k N♭` and `η* = η∘φ = -k B♭`, both zero off the Frenet set.
pub fn eta_pair(geom: &GeometryField) -> (OneForm, OneForm) {
    let scaled = |f: &FrenetData, v: &[f64; 3], s: f64| {
        if f.geodesic {
            [0.0; 3]
        } else {
            f.flat(v).map(|c| s * f.k * c)
        }
    };
    let eta = OneForm::from_fn(&geom.grid, |i| scaled(&geom.nodes[i], &geom.nodes[i].n, 1.0));
    let eta_star = OneForm::from_fn(&geom.grid, |i| scaled(&geom.nodes[i], &geom.nodes[i].b, -1.0));
    (eta, eta_star)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Forms,
    ReinhartWood,
    Both,
}

/// Pointwise Reinhart–Wood integrand `-k²(τ + h_{N,B})`.
pub fn rw_integrand(f: &FrenetData) -> f64 {
    if f.geodesic {
        0.0
    } else {
        -f.k * f.k * (f.tau + f.h_nb())
    }
}

/// Pointwise integrand of `gv = -∫ k²(τ - h_{B,N})`.
pub fn gv_integrand(f: &FrenetData) -> f64 {
    if f.geodesic {
        0.0
    } else {
        -f.k * f.k * (f.tau - f.h_bn())
    }
}

/// `(η*∧dη*)(T,N,B) = η*(B)·dη*(T,N)` per node.
pub fn forms_integrand(geom: &GeometryField) -> Result<ScalarField> {
    let (_, eta_star) = eta_pair(geom);
    let d = exterior_d(&eta_star, geom)?;
    let data = geom
        .nodes
        .iter()
        .enumerate()
        .zip(&d)
        .map(|((i, f), dv)| {
            if f.geodesic {
                0.0
            } else {
                eta_star.apply(i, &f.b) * dv.tn
            }
        })
        .collect();
    Ok(FieldSample {
        grid: geom.grid.clone(),
        data,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionalReport {
    pub method: Method,
    pub value_forms: Option<f64>,
    pub value_rw: Option<f64>,
    pub rel_gap: Option<f64>,
    pub gv: f64,
    pub coverage: f64,
    pub reliable: bool,
    pub n: [usize; 3],
    pub k_cut: f64,
    #[serde(skip)]
    pub integrand_field: ScalarField,
}

/// `|a - b| / max(|b|, 1e-12·vol)`.
pub fn rel_gap(forms: f64, rw: f64, box_volume: f64) -> f64 {
    (forms - rw).abs() / rw.abs().max(1e-12 * box_volume)
}

/// `gv*` by the requested method(s) over the whole grid.
pub fn gv_star(geom: &GeometryField, method: Method) -> Result<FunctionalReport> {
    let vol = geom.volume();
    let rw_field = geom.scalar(rw_integrand);
    let value_rw = match method {
        Method::Forms => None,
        _ => Some(integrate(&rw_field, &vol)?),
    };
    let (value_forms, forms_field) = match method {
        Method::ReinhartWood => (None, None),
        _ => {
            let f = forms_integrand(geom)?;
            (Some(integrate(&f, &vol)?), Some(f))
        }
    };
    for v in value_rw.iter().chain(value_forms.iter()) {
        if !v.is_finite() {
            return Err(Error::NonFinite("gv* integral".into()));
        }
    }
    let rel = match (value_forms, value_rw) {
        (Some(a), Some(b)) => Some(rel_gap(a, b, geom.grid.chart.volume())),
        _ => None,
    };
    let coverage = geom.coverage();
    Ok(FunctionalReport {
        method,
        value_forms,
        value_rw,
        rel_gap: rel,
        gv: gv_reference(geom)?,
        coverage,
        reliable: coverage >= 0.5,
        n: geom.grid.n,
        k_cut: geom.options.k_cut,
        integrand_field: forms_field.unwrap_or(rw_field),
    })
}

/// `gv = -∫ k²(τ - h_{B,N}) dvol`.
pub fn gv_reference(geom: &GeometryField) -> Result<f64> {
    integrate(&geom.scalar(gv_integrand), &geom.volume())
}

/// Sup-norm defects of the frame identities for `dη`, `dη*` and `η*`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct FormsIdentities {
    /// `dη(T,B) - k(τ - h_{B,N})`
    pub d_eta_tb: f64,
    /// `dη(T,N) - (T(k) - k h_{N,N})`
    pub d_eta_tn: f64,
    /// `dη*(T,B) + T(k) - k h_{B,B}`
    pub d_eta_star_tb: f64,
    /// `dη*(T,N) - k(τ + h_{N,B})`
    pub d_eta_star_tn: f64,
    /// `η*(X) - dω(T, φX)` over `X ∈ {T, N, B}`
    pub eta_star_vs_domega: f64,
    /// `|η*(T)| + |η*(N)| + |η*(B) + k|`
    pub eta_star_frame: f64,
}

/// Evaluates [`FormsIdentities`] over the nodes selected by `region`.
pub fn forms_identities(geom: &GeometryField, region: &ChartBox) -> Result<FormsIdentities> {
    let mask = geom.grid.mask_in(region);
    let (eta, eta_star) = eta_pair(geom);
    let d_eta = exterior_d(&eta, geom)?;
    let d_eta_star = exterior_d(&eta_star, geom)?;
    let d_omega = exterior_d_coords(&omega_form(geom))?;
    let tk = geom.t_derivative(&geom.scalar(|f| f.k))?;
    let mut out = FormsIdentities::default();
    for (i, f) in geom.nodes.iter().enumerate() {
        if !mask[i] || f.geodesic {
            continue;
        }
        let upd = |slot: &mut f64, v: f64| *slot = slot.max(v.abs());
        upd(&mut out.d_eta_tb, d_eta[i].tb - f.k * (f.tau - f.h_bn()));
        upd(&mut out.d_eta_tn, d_eta[i].tn - (tk.data[i] - f.k * f.h_nn()));
        upd(&mut out.d_eta_star_tb, d_eta_star[i].tb + tk.data[i] - f.k * f.h_bb());
        upd(&mut out.d_eta_star_tn, d_eta_star[i].tn - f.k * (f.tau + f.h_nb()));
        // φT = 0, φN = B, φB = -N
        let phi_frame = [[0.0; 3], f.b, f.n.map(|c| -c)];
        for (x, px) in [f.t, f.n, f.b].iter().zip(&phi_frame) {
            upd(
                &mut out.eta_star_vs_domega,
                eta_star.apply(i, x) - eval_two_form(&d_omega[i], &f.t, px),
            );
        }
        let ef = (eta_star.apply(i, &f.t)).abs() + eta_star.apply(i, &f.n).abs() + (eta_star.apply(i, &f.b) + f.k).abs();
        upd(&mut out.eta_star_frame, ef);
    }
    Ok(out)
}
