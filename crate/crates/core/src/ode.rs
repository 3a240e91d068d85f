//! The critical system `k' = kH`, `H' = -H² - k²/4` along `T`-curves:
//! RK4 profiles, the cubic Taylor reference, first integrals, the
//! quadrature form of the solution and blow-up detection.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use serde::Serialize;

use crate::error::{Error, Result};

/// `|k|` or `|H|` beyond this halts the integration.
pub const BLOWUP_THRESHOLD: f64 = 1e8;
/// Relative `C1` drift that rejects a step size.
pub const DRIFT_LIMIT: f64 = 1e-8;
/// Samples with `max(|k|, |H|)·step` above this are not trusted.
const RESOLVED: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub s: f64,
    pub k: f64,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalProfile {
    /// Ordered by increasing `s`; cut at the last resolved step before a
    /// blow-up.
    pub samples: Vec<Sample>,
    pub k0: f64,
    pub h0: f64,
    /// `(H')² - H⁴` at `s = 0`.
    pub c1: f64,
    /// `(k')² + k⁴/8` at `s = 0`.
    pub ck: f64,
    pub step: f64,
    /// Forward blow-up location, if reached before `s_max`.
    pub blowup_s: Option<f64>,
    /// Backward blow-up location (negative), if reached before `-s_max`.
    pub blowup_s_backward: Option<f64>,
    /// Largest relative `C1` defect over the samples.
    pub c1_drift: f64,
}

pub fn rhs(k: f64, h: f64) -> (f64, f64) {
    (k * h, -h * h - 0.25 * k * k)
}

/// `(H')² - H⁴` with `H'` from the right-hand side, expanded to
/// `k²H²/2 + k⁴/16` so that large `|H|` does not cancel.
pub fn first_integral_c1(k: f64, h: f64) -> f64 {
    let k2 = k * k;
    k2 * (0.5 * h * h + k2 / 16.0)
}

pub fn first_integral_ck(k: f64, h: f64) -> f64 {
    let (dk, _) = rhs(k, h);
    dk * dk + k.powi(4) / 8.0
}

fn rk4(k: f64, h: f64, dt: f64) -> (f64, f64) {
    let (a1, b1) = rhs(k, h);
    let (a2, b2) = rhs(k + 0.5 * dt * a1, h + 0.5 * dt * b1);
    let (a3, b3) = rhs(k + 0.5 * dt * a2, h + 0.5 * dt * b2);
    let (a4, b4) = rhs(k + dt * a3, h + dt * b3);
    (
        k + dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4),
        h + dt / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4),
    )
}

/// `∫_{|h|}^{∞} dx / √(x⁴ + c1)`, the time left before `|H|` reaches
/// infinity from `h`.
pub fn blowup_tail(h: f64, c1: f64) -> f64 {
    // x = 1/u turns the tail into ∫_0^{1/|h|} du / √(1 + c1 u⁴)
    let top = 1.0 / h.abs();
    gauss(|u| 1.0 / (1.0 + c1 * u.powi(4)).sqrt(), 0.0, top)
}

struct Branch {
    samples: Vec<Sample>,
    blowup: Option<f64>,
}

fn integrate_branch(k0: f64, h0: f64, s_max: f64, step: f64, dir: f64, c1: f64) -> Result<Branch> {
    let mut samples = vec![Sample { s: 0.0, k: k0, h: h0 }];
    let (mut k, mut h, mut s) = (k0, h0, 0.0_f64);
    let mut resolved = 0;
    let steps = (s_max / step * (1.0 - 1e-12)).ceil() as usize;
    for i in 1..=steps {
        let next = if i == steps { s_max } else { i as f64 * step };
        let (k1, h1) = rk4(k, h, dir * (next - s));
        s = next;
        if !k1.is_finite() || !h1.is_finite() || k1.abs() > BLOWUP_THRESHOLD || h1.abs() > BLOWUP_THRESHOLD {
            let last = samples[resolved];
            samples.truncate(resolved + 1);
            let at = last.s.abs() + blowup_tail(last.h, c1);
            return Ok(Branch {
                samples,
                blowup: Some(dir * at),
            });
        }
        k = k1;
        h = h1;
        samples.push(Sample { s: dir * s, k, h });
        if k.abs().max(h.abs()) * step <= RESOLVED {
            resolved = samples.len() - 1;
        }
    }
    Ok(Branch { samples, blowup: None })
}

/// Classical RK4 forward and backward from `s = 0`.
pub fn integrate_critical(k0: f64, h0: f64, s_max: f64, step: f64) -> Result<CriticalProfile> {
    if !(step > 0.0) || !(s_max > 0.0) || !k0.is_finite() || !h0.is_finite() {
        return Err(Error::Invalid("need step > 0, s_max > 0 and finite initials".into()));
    }
    let c1 = first_integral_c1(k0, h0);
    let ck = first_integral_ck(k0, h0);
    let fwd = integrate_branch(k0, h0, s_max, step, 1.0, c1)?;
    let bwd = integrate_branch(k0, h0, s_max, step, -1.0, c1)?;
    let mut samples: Vec<Sample> = bwd.samples.into_iter().skip(1).rev().collect();
    samples.extend(fwd.samples);
    let scale = if c1 != 0.0 {
        c1.abs()
    } else {
        (h0 * h0 + 0.25 * k0 * k0).powi(2).max(f64::MIN_POSITIVE)
    };
    let c1_drift = samples
        .iter()
        .map(|p| (first_integral_c1(p.k, p.h) - c1).abs() / scale)
        .fold(0.0, f64::max);
    if c1_drift > DRIFT_LIMIT {
        return Err(Error::Drift {
            drift: c1_drift,
            limit: DRIFT_LIMIT,
        });
    }
    Ok(CriticalProfile {
        samples,
        k0,
        h0,
        c1,
        ck,
        step,
        blowup_s: fwd.blowup,
        blowup_s_backward: bwd.blowup,
        c1_drift,
    })
}

impl CriticalProfile {
    /// Sample closest to `s`.
    pub fn nearest(&self, s: f64) -> Option<&Sample> {
        self.samples
            .iter()
            .min_by(|a, b| (a.s - s).abs().total_cmp(&(b.s - s).abs()))
    }

    /// Rows `s, k, H, C1, Ck`.
    pub fn rows(&self) -> Vec<[f64; 5]> {
        self.samples
            .iter()
            .map(|p| [p.s, p.k, p.h, first_integral_c1(p.k, p.h), first_integral_ck(p.k, p.h)])
            .collect()
    }
}

pub const CSV_HEADER: [&str; 5] = ["s", "k", "H", "C1", "Ck"];

/// The cubic Taylor polynomials of `(k, H)` about `s = 0`.
pub fn taylor_reference(k0: f64, h0: f64, x: f64) -> (f64, f64) {
    let q = h0 * h0 + 0.25 * k0 * k0;
    let k3 = k0.powi(3);
    let h = h0 - q * x + h0.powi(3) * x * x - h0 * h0 * q * x.powi(3);
    let k = k0 + k0 * h0 * x - k3 / 8.0 * x * x - k3 * h0 / 8.0 * x.powi(3);
    (k, h)
}

/// `((H')² - H⁴, (k')² + k⁴/8)` along the profile.
pub fn first_integrals(profile: &CriticalProfile) -> (Vec<f64>, Vec<f64>) {
    profile
        .samples
        .iter()
        .map(|p| (first_integral_c1(p.k, p.h), first_integral_ck(p.k, p.h)))
        .unzip()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadraturePoint {
    pub s: f64,
    pub k: f64,
}

/// `s(H_target) = ∫_{H_target}^{H0} dH / √(H⁴ + C1)` and
/// `k = sign(k0)·2√(√(H⁴ + C1) - H²)` there.
pub fn quadrature_solution(k0: f64, h0: f64, h_target: f64) -> Result<QuadraturePoint> {
    let c1 = first_integral_c1(k0, h0);
    let (lo, hi) = if h_target <= h0 { (h_target, h0) } else { (h0, h_target) };
    if c1 <= 0.0 && lo <= 0.0 && hi >= 0.0 && lo != hi {
        return Err(Error::Invalid("integrand is singular at H = 0 when C1 = 0".into()));
    }
    let f = |x: f64| 1.0 / (x.powi(4) + c1).sqrt();
    let s = if h_target == h0 { 0.0 } else { gauss(f, h_target, h0) };
    let root = (h_target.powi(4) + c1).sqrt();
    let gap = c1 / (root + h_target * h_target);
    let k = if k0 == 0.0 { 0.0 } else { k0.signum() * 2.0 * gap.max(0.0).sqrt() };
    Ok(QuadraturePoint { s, k })
}

/// Forward blow-up location `∫_{-∞}^{H0} dH / √(H⁴ + C1)` by quadrature,
/// `None` if `k0 = 0` and `H0 ≥ 0`.
pub fn blowup_oracle(k0: f64, h0: f64) -> Option<f64> {
    let c1 = first_integral_c1(k0, h0);
    if c1 <= 0.0 && h0 >= 0.0 {
        return None;
    }
    if h0 < 0.0 {
        return Some(blowup_tail(h0, c1));
    }
    // ∫_{-∞}^{0} + ∫_0^{H0}; x = t/(1 - t) maps [0, 1) onto [0, ∞)
    let head = gauss(|t| 1.0 / (t.powi(4) + c1 * (1.0 - t).powi(4)).sqrt(), 0.0, 1.0);
    let rest = if h0 > 0.0 { gauss(|x| 1.0 / (x.powi(4) + c1).sqrt(), 0.0, h0) } else { 0.0 };
    Some(head + rest)
}

/// Composite Gauss–Legendre, panels doubled until the sum settles.
pub(crate) fn gauss(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let rule = GaussLegendre::new(NonZeroUsize::new(32).unwrap());
    let composite = |panels: usize| {
        let w = (b - a) / panels as f64;
        (0..panels)
            .map(|i| {
                let lo = a + i as f64 * w;
                rule.integrate(lo, lo + w, &f)
            })
            .sum::<f64>()
    };
    let mut prev = composite(1);
    let mut panels = 2;
    while panels <= 4096 {
        let next = composite(panels);
        if (next - prev).abs() <= 1e-14 * next.abs().max(1e-300) {
            return next;
        }
        prev = next;
        panels *= 2;
    }
    prev
}

#[cfg(test)]
mod tests;
