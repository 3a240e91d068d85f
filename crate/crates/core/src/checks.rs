//! Scenario-level checks with pass/fail verdicts, shared by the command
//! line front end and the regression runner.

use serde::Serialize;

use crate::acm::{build_acm, classify, ClassOptions, ClassReport};
use crate::chart::Grid;
use crate::error::{Error, Result};
use crate::forms::{gv_star, FunctionalReport, Method};
use crate::scenario::Scenario;
use crate::twisted::{verify_critical, TwistedReport};
use crate::variation::{
    analytic_first_variation, el_residuals, first_variation_fd, random_variations, Context, Derived, ElResiduals,
    Formula, Suite, VariationKind,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Settings {
    pub n: usize,
    pub el_tol: f64,
    /// Allowed `rel_gap` between the two `gv*` evaluations.
    pub functional_tol: f64,
    /// Allowed `|FD - analytic| / |analytic|`.
    pub vary_tol: f64,
    pub twisted_tol: f64,
    pub class_tol: f64,
    pub seed: u64,
    pub count: usize,
    pub fd_points: usize,
    pub normalize_t: bool,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            n: 48,
            el_tol: 1e-4,
            functional_tol: 1e-2,
            vary_tol: 2e-2,
            twisted_tol: 1e-3,
            class_tol: 1e-5,
            seed: 0,
            count: 10,
            fd_points: 48,
            normalize_t: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionalCheck {
    #[serde(flatten)]
    pub report: FunctionalReport,
    pub tol: f64,
    pub pass: bool,
}

pub fn functional(sc: &Scenario, s: &Settings) -> Result<FunctionalCheck> {
    let geom = sc.problem(s.n, s.normalize_t)?.geometry()?;
    let report = gv_star(&geom, Method::Both)?;
    let pass = report.rel_gap.is_some_and(|g| g <= s.functional_tol);
    Ok(FunctionalCheck {
        report,
        tol: s.functional_tol,
        pass,
    })
}

/// Residual norms over the scenario sub-box, with the residual fields.
pub fn el_check(sc: &Scenario, suite: Suite, s: &Settings) -> Result<ElResiduals> {
    let geom = sc.problem(s.n, s.normalize_t)?.geometry()?;
    let derived = Derived::compute(&geom)?;
    el_residuals(&geom, &derived, &sc.interior, suite, s.el_tol)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VaryRow {
    pub center: [f64; 3],
    pub radius: [f64; 3],
    pub amplitudes: [f64; 3],
    pub fd: f64,
    pub fd_sweep: [f64; 3],
    pub sweep_consistent: bool,
    pub analytic: f64,
    pub analytic_uncorrected: f64,
    pub rel_err: f64,
    pub rel_err_uncorrected: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VaryReport {
    pub kind: VariationKind,
    pub seed: u64,
    /// `1e-3 · ∫ k² dvol`; both sides below it count as agreement.
    pub stationarity_tol: f64,
    pub rel_tol: f64,
    pub rows: Vec<VaryRow>,
    /// `stationary`, `agree` or `fail`.
    pub verdict: String,
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs()
    }
}

/// Random bump variations: finite differences against both analytic
/// integrands.
pub fn vary(sc: &Scenario, kind: VariationKind, s: &Settings) -> Result<VaryReport> {
    let problem = sc.problem(s.n, s.normalize_t)?;
    let mut ctx = Context::new(&problem)?;
    ctx.fd_points = s.fd_points;
    let tol = ctx.stationarity_tol();
    let vars = random_variations(&problem, kind, s.count, s.seed, &sc.interior)?;
    let mut rows = Vec::with_capacity(vars.len());
    for v in &vars {
        let fd = first_variation_fd(&ctx, v)?;
        let analytic = analytic_first_variation(&ctx, v, Formula::Corrected)?;
        let uncorrected = analytic_first_variation(&ctx, v, Formula::Uncorrected)?;
        let small = fd.value.abs() <= tol && analytic.abs() <= tol;
        let rel_err = rel(fd.value, analytic);
        rows.push(VaryRow {
            center: v.bump.center,
            radius: v.bump.radius,
            amplitudes: v.amplitudes,
            fd: fd.value,
            fd_sweep: fd.sweep,
            sweep_consistent: fd.consistent,
            analytic,
            analytic_uncorrected: uncorrected,
            rel_err,
            rel_err_uncorrected: rel(fd.value, uncorrected),
            pass: fd.consistent && (small || rel_err <= s.vary_tol),
        });
    }
    let verdict = if !rows.iter().all(|r| r.pass) {
        "fail"
    } else if rows.iter().all(|r| r.fd.abs() <= tol) {
        "stationary"
    } else {
        "agree"
    };
    Ok(VaryReport {
        kind,
        seed: s.seed,
        stationarity_tol: tol,
        rel_tol: s.vary_tol,
        rows,
        verdict: verdict.into(),
    })
}

/// Classification on a coarse grid over the scenario sub-box.
pub fn classify_scenario(sc: &Scenario, s: &Settings) -> Result<ClassReport> {
    let (metric, field) = sc.sources(s.normalize_t)?;
    let grid = Grid::uniform(sc.interior.clone(), 8)?;
    let opts = ClassOptions {
        class_tol: s.class_tol,
        ..ClassOptions::default()
    };
    let acm = build_acm(metric.as_ref(), field.as_ref(), &grid, &opts)?;
    classify(&acm)
}

pub fn twisted_check(sc: &Scenario, s: &Settings) -> Result<TwistedReport> {
    let spec = sc
        .twisted_spec()?
        .ok_or_else(|| Error::Invalid(format!("scenario `{}` has no [twisted] section", sc.name)))?;
    verify_critical(&spec, s.n, &sc.interior, s.twisted_tol)
}

/// The verdict string that an `[expect]` key is compared against.
pub fn verdict_for_key(sc: &Scenario, key: &str, s: &Settings) -> Result<String> {
    let pass = |b: bool| if b { "pass" } else { "fail" }.to_string();
    if let Some(suite) = key.strip_prefix("el_") {
        let suite = Suite::parse(suite).ok_or_else(|| Error::Invalid(format!("unknown suite in `{key}`")))?;
        return Ok(el_check(sc, suite, s)?.report.verdict().to_string());
    }
    if let Some(kind) = key.strip_prefix("vary_") {
        let kind = VariationKind::parse(kind).ok_or_else(|| Error::Invalid(format!("unknown kind in `{key}`")))?;
        return Ok(vary(sc, kind, s)?.verdict);
    }
    match key {
        "functional" => Ok(pass(functional(sc, s)?.pass)),
        "classify" => Ok(classify_scenario(sc, s)?.verdict.label().to_string()),
        "twisted" => Ok(if twisted_check(sc, s)?.critical {
            "critical"
        } else {
            "not critical"
        }
        .to_string()),
        _ => Err(Error::Invalid(format!("unknown expectation `{key}`"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Expectation {
    pub key: String,
    pub expected: String,
    pub actual: String,
    pub pass: bool,
}

/// Evaluates every `[expect]` entry.
pub fn check_expectations(sc: &Scenario, s: &Settings) -> Result<Vec<Expectation>> {
    sc.expect
        .iter()
        .map(|(key, expected)| {
            let actual = verdict_for_key(sc, key, s)?;
            Ok(Expectation {
                key: key.clone(),
                pass: &actual == expected,
                expected: expected.clone(),
                actual,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests;
