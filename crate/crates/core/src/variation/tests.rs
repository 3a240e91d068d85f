use super::*;
use crate::testing::{expr_metric, expr_vector, unit_field_exprs};
use std::sync::Arc;

const CYL: [&str; 3] = ["rho", "phi", "z"];
const SPH: [&str; 3] = ["rho", "theta", "phi"];
const FLAT_CYL: [&str; 6] = ["1", "0", "0", "rho^2", "0", "1"];

fn cyl_box() -> ChartBox {
    ChartBox::new(CYL, [1.0, 0.0, 0.0], [2.0, 1.0, 1.0], 1.0).unwrap()
}

fn cyl_problem(t: impl crate::geometry::VectorSource + 'static, n: usize) -> Problem {
    Problem::new(
        Arc::new(expr_metric(FLAT_CYL, CYL)),
        Arc::new(t),
        Grid::uniform(cyl_box(), n).unwrap(),
    )
}

fn twisted_helix(n: usize) -> Problem {
    cyl_problem(unit_field_exprs(FLAT_CYL, ["0", "1", "rho*z"], CYL), n)
}

fn cylinder(n: usize) -> Problem {
    cyl_problem(expr_vector(["0", "1/rho", "0"], CYL), n)
}

fn helix(n: usize) -> Problem {
    let c = "1/sqrt(rho^2 + 1)";
    cyl_problem(expr_vector(["0", c, c], CYL), n)
}

fn sphere_foliation(n: usize) -> Problem {
    let m = expr_metric(["1", "0", "0", "rho^2", "0", "rho^2*sin(theta)^2"], SPH);
    let t = expr_vector(["0", "0", "1/(rho*sin(theta))"], SPH);
    let chart = ChartBox::new(SPH, [1.0, 0.4, 0.0], [2.0, 1.2, 1.0], 1.0).unwrap();
    Problem::new(Arc::new(m), Arc::new(t), Grid::uniform(chart, n).unwrap())
}

fn center_bump(pb: &Problem) -> (Bump, FrenetData) {
    let c = pb.grid.chart.center();
    let r = [0, 1, 2].map(|a| 0.3 * (pb.grid.chart.hi[a] - pb.grid.chart.lo[a]));
    let bump = Bump::new(c, r, &pb.grid).unwrap();
    let f = frenet(pb.metric.as_ref(), pb.field.as_ref(), pb.orientation(), &c, &pb.frenet).unwrap();
    (bump, f)
}

fn single_modes(pb: &Problem) -> Vec<VariationTensor> {
    let (b, f) = center_bump(pb);
    vec![
        VariationTensor::gtop(b.clone(), &f, 1.0, 0.0, 0.0),
        VariationTensor::gtop(b.clone(), &f, 0.0, 1.0, 0.0),
        VariationTensor::gtop(b.clone(), &f, 0.0, 0.0, 1.0),
        VariationTensor::gpitchfork(b.clone(), &f, 1.0, 0.0),
        VariationTensor::gpitchfork(b, &f, 0.0, 1.0),
    ]
}

#[test]
fn zero_variation_has_zero_first_variation() {
    let pb = twisted_helix(12);
    let ctx = Context::new(&pb).unwrap();
    let (b, _) = center_bump(&pb);
    for kind in [VariationKind::Gtop, VariationKind::Gpitchfork] {
        let v = VariationTensor::zero(kind, b.clone());
        assert_eq!(first_variation_fd(&ctx, &v).unwrap().value, 0.0);
        for formula in [Formula::Corrected, Formula::Uncorrected] {
            assert_eq!(analytic_first_variation(&ctx, &v, formula).unwrap(), 0.0);
        }
    }
}

#[test]
fn perturb_at_zero_is_identity() {
    let pb = twisted_helix(12);
    let ctx = Context::new(&pb).unwrap();
    for v in single_modes(&pb) {
        assert_eq!(perturb(&ctx, &v, 0.0).unwrap(), ctx.jets);
        let moved = perturb(&ctx, &v, 0.1).unwrap();
        assert_ne!(moved, ctx.jets);
    }
}

#[test]
fn frame_components_at_center_match_amplitudes() {
    let pb = twisted_helix(12);
    let (b, f) = center_bump(&pb);
    let base = point_jets(pb.metric.as_ref(), pb.field.as_ref(), &b.center).unwrap();
    let top = VariationTensor::gtop(b.clone(), &f, 0.3, -0.7, 0.2);
    let c = top.frame_components(&b.center, &base, &f);
    let want = [[0.0, 0.0, 0.0], [0.0, 0.3, -0.7], [0.0, -0.7, 0.2]];
    let pf = VariationTensor::gpitchfork(b.clone(), &f, 0.4, -0.9);
    let d = pf.frame_components(&b.center, &base, &f);
    let want_pf = [[0.0, 0.4, -0.9], [0.4, 0.0, 0.0], [-0.9, 0.0, 0.0]];
    for i in 0..3 {
        for j in 0..3 {
            assert!((c[i][j] - want[i][j]).abs() < 1e-13, "{c:?}");
            assert!((d[i][j] - want_pf[i][j]).abs() < 1e-13, "{d:?}");
        }
    }
}

fn omega_jets(metric: &MetricJet, t: &[Jet2; 3]) -> [Jet2; 3] {
    [0, 1, 2].map(|i| {
        let mut acc = Jet2::constant(0.0);
        for (j, tj) in t.iter().enumerate() {
            acc = acc + *metric.component(i, j) * *tj;
        }
        acc
    })
}

fn jet_close(a: &Jet2, b: &Jet2, tol: f64) -> bool {
    (a.value - b.value).abs() < tol
        && a.grad.iter().zip(&b.grad).all(|(x, y)| (x - y).abs() < tol)
        && a.hess.iter().zip(&b.hess).all(|(x, y)| (x - y).abs() < tol)
}

#[test]
fn gtop_preserves_omega_and_gpitchfork_keeps_t_unit() {
    let pb = twisted_helix(12);
    let ctx = Context::new(&pb).unwrap();
    let modes = single_modes(&pb);
    let s = 0.05;
    for v in &modes {
        let moved = perturb(&ctx, v, s).unwrap();
        let mut changed = false;
        for (i, (a, b)) in ctx.jets.iter().zip(&moved).enumerate() {
            let t = &a.field.comps;
            let w0 = omega_jets(&a.metric, t);
            let w1 = omega_jets(&b.metric, t);
            let tt: f64 = (0..3).map(|k| w1[k].value * t[k].value).sum();
            assert!((tt - 1.0).abs() < 1e-12, "node {i}: {tt}");
            match v.kind {
                VariationKind::Gtop => {
                    for k in 0..3 {
                        assert!(jet_close(&w0[k], &w1[k], 1e-12));
                    }
                }
                VariationKind::Gpitchfork => {
                    changed |= (0..3).any(|k| (w0[k].value - w1[k].value).abs() > 1e-6);
                }
            }
        }
        assert_eq!(changed, v.kind == VariationKind::Gpitchfork);
    }
}

#[test]
fn variation_vanishes_outside_support() {
    let pb = twisted_helix(12);
    let ctx = Context::new(&pb).unwrap();
    let v = &single_modes(&pb)[4];
    let cv = coordinate_variation(&ctx, v).unwrap();
    assert!(!cv.support.is_empty() && cv.support.len() < pb.grid.len());
    let moved = perturb(&ctx, v, 0.1).unwrap();
    for i in 0..pb.grid.len() {
        if !cv.support.contains(&i) {
            assert_eq!(moved[i], ctx.jets[i]);
        }
    }
}

#[test]
fn k_dot_formulas_hold_for_both_kinds() {
    let pb = twisted_helix(12);
    let ctx = Context::new(&pb).unwrap();
    for v in single_modes(&pb) {
        let l = k_dot_check(&ctx, &v).unwrap();
        if v.amplitudes[0] == 0.0 && v.kind == VariationKind::Gtop {
            // k̇ predicted zero away from ġ_NN
            continue;
        }
        assert!(l.compared > 10, "{l:?}");
        assert!(l.max_rel_err < 0.02, "{:?} {l:?}", v.amplitudes);
    }
}

#[test]
fn volume_form_variation_is_half_trace() {
    let pb = twisted_helix(12);
    let ctx = Context::new(&pb).unwrap();
    for v in single_modes(&pb) {
        assert!(volume_variation_check(&ctx, &v).unwrap() < 1e-10);
    }
}

#[test]
fn fd_matches_corrected_integrands_on_twisted_helix() {
    let pb = twisted_helix(24);
    let mut ctx = Context::new(&pb).unwrap();
    ctx.fd_points = 32;
    for v in single_modes(&pb) {
        let fd = first_variation_fd(&ctx, &v).unwrap();
        assert!(fd.consistent, "{fd:?}");
        let an = analytic_first_variation(&ctx, &v, Formula::Corrected).unwrap();
        assert!((fd.value - an).abs() <= 0.02 * an.abs(), "{:?}: fd {} vs {an}", v.amplitudes, fd.value);
    }
}

#[test]
fn uncorrected_integrands_disagree_with_fd() {
    let pb = twisted_helix(12);
    let mut ctx = Context::new(&pb).unwrap();
    ctx.fd_points = 24;
    let modes = single_modes(&pb);
    for v in [&modes[0], &modes[2], &modes[3], &modes[4]] {
        let fd = first_variation_fd(&ctx, v).unwrap().value;
        let p = analytic_first_variation(&ctx, v, Formula::Uncorrected).unwrap();
        assert!((fd - p).abs() > 0.3 * fd.abs(), "{:?}: {fd} vs {p}", v.amplitudes);
    }
}

#[test]
fn cylinder_is_stationary_for_both_kinds() {
    let pb = cylinder(16);
    let mut ctx = Context::new(&pb).unwrap();
    ctx.fd_points = 32;
    let tol = ctx.stationarity_tol();
    for v in single_modes(&pb) {
        let fd = first_variation_fd(&ctx, &v).unwrap();
        assert!(fd.value.abs() <= tol, "{:?}: {fd:?}", v.amplitudes);
        let an = analytic_first_variation(&ctx, &v, Formula::Corrected).unwrap();
        assert!(an.abs() < 1e-12, "{an}");
    }
    // the uncorrected g⊥ integrand does not vanish here
    let v = &single_modes(&pb)[4];
    let p = analytic_first_variation(&ctx, v, Formula::Uncorrected).unwrap();
    assert!(p.abs() > 10.0 * tol, "{p}");
}

#[test]
fn helix_first_variation_vanishes() {
    let pb = helix(12);
    let ctx = Context::new(&pb).unwrap();
    for v in single_modes(&pb) {
        let fd = first_variation_fd(&ctx, &v).unwrap();
        assert!(fd.value.abs() <= ctx.stationarity_tol(), "{fd:?}");
    }
}

#[test]
fn random_variations_are_reproducible_and_inside_region() {
    let pb = twisted_helix(16);
    let region = ChartBox::new(CYL, [1.2, 0.1, 0.1], [1.8, 0.9, 0.9], 1.0).unwrap();
    let a = random_variations(&pb, VariationKind::Gpitchfork, 4, 11, &region).unwrap();
    let b = random_variations(&pb, VariationKind::Gpitchfork, 4, 11, &region).unwrap();
    let c = random_variations(&pb, VariationKind::Gpitchfork, 4, 12, &region).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    for v in &a {
        assert_eq!(v.amplitudes[2], 0.0);
        assert!(v.sup() <= 1.0);
        for ax in 0..3 {
            assert!(v.bump.center[ax] - v.bump.radius[ax] >= region.lo[ax] - 1e-12);
            assert!(v.bump.center[ax] + v.bump.radius[ax] <= region.hi[ax] + 1e-12);
        }
    }
    let tiny = ChartBox::new(CYL, [1.0, 0.0, 0.0], [1.05, 1.0, 1.0], 1.0).unwrap();
    assert!(random_variations(&pb, VariationKind::Gtop, 1, 0, &tiny).is_err());
}

#[test]
fn cylinder_gtop_suite_is_critical() {
    let ctx = Context::new(&cylinder(16)).unwrap();
    let inner = ChartBox::new(CYL, [1.2, 0.2, 0.2], [1.8, 0.8, 0.8], 1.0).unwrap();
    let r = el_residuals(&ctx.geom, &ctx.derived, &inner, Suite::Gtop, 1e-4).unwrap();
    assert!(r.report.critical, "{:?}", r.report);
    assert_eq!(r.report.verdict(), "critical");
    assert_eq!(r.report.coverage, 1.0);
    let full = el_residuals(&ctx.geom, &ctx.derived, &inner, Suite::Full, 1e-4).unwrap();
    // r4 = -k²/4 on the cylinder
    assert!(!full.report.critical);
    assert_eq!(full.fields.len(), RESIDUAL_NAMES.len());
}

#[test]
fn sphere_foliation_gtop_suite_is_critical() {
    let ctx = Context::new(&sphere_foliation(24)).unwrap();
    let inner = ChartBox::new(SPH, [1.1, 0.5, 0.1], [1.9, 1.1, 0.9], 1.0).unwrap();
    let r = el_residuals(&ctx.geom, &ctx.derived, &inner, Suite::Gtop, 1e-4).unwrap();
    assert!(r.report.critical, "{:?}", r.report);
}

#[test]
fn full_suite_reduction_of_raw_residuals() {
    // with r1 = r2 = 0: e1 = -k h_NN (h_NB + h_BN), e2 = k (r4 + h_BB²)
    let ctx = Context::new(&sphere_foliation(24)).unwrap();
    let inner = ChartBox::new(SPH, [1.1, 0.5, 0.1], [1.9, 1.1, 0.9], 1.0).unwrap();
    let mask = ctx.grid().mask_in(&inner);
    let mut worst: f64 = 0.0;
    for (i, f) in ctx.geom.nodes.iter().enumerate() {
        if !mask[i] || f.geodesic {
            continue;
        }
        let r = residuals_at(f, &ctx.derived, i);
        let e1 = -f.k * f.h_nn() * (f.h_nb() + f.h_bn());
        let e2 = f.k * (r[3] + f.h_bb() * f.h_bb());
        worst = worst.max((r[4] - e1).abs()).max((r[5] - e2).abs());
    }
    assert!(worst < 1e-4, "{worst}");
}

#[test]
fn kenmotsu_suite_is_vacuously_critical() {
    let names = ["x", "y", "s"];
    let m = expr_metric(["exp(2*s)", "0", "0", "exp(2*s)", "0", "1"], names);
    let t = expr_vector(["0", "0", "1"], names);
    let chart = ChartBox::new(names, [0.0; 3], [1.0; 3], 1.0).unwrap();
    let pb = Problem::new(Arc::new(m), Arc::new(t), Grid::uniform(chart.clone(), 8).unwrap());
    let ctx = Context::new(&pb).unwrap();
    for suite in [Suite::Full, Suite::Gtop, Suite::Gpitchfork, Suite::Umbilic] {
        let r = el_residuals(&ctx.geom, &ctx.derived, &chart, suite, 1e-4).unwrap();
        assert!(r.report.vacuous && r.report.critical);
        assert_eq!(r.report.verdict(), "critical (geodesic)");
        assert!(r.report.norms.iter().all(|n| n.sup == 0.0 && n.l2 == 0.0));
    }
}

#[test]
fn suite_names_parse() {
    for (s, n) in [("full", 4), ("gtop", 2), ("gpitchfork", 2), ("umbilic", 2)] {
        assert_eq!(Suite::parse(s).unwrap().names().len(), n);
    }
    assert!(Suite::parse("other").is_none());
    assert_eq!(VariationKind::parse("gtop"), Some(VariationKind::Gtop));
    assert!(VariationKind::parse("gperp").is_none());
}

#[test]
fn metric_jet_of_perturbation_is_linear_in_t() {
    let pb = twisted_helix(12);
    let ctx = Context::new(&pb).unwrap();
    let v = &single_modes(&pb)[1];
    let a = perturb(&ctx, v, 0.02).unwrap();
    let b = perturb(&ctx, v, 0.04).unwrap();
    for ((x, y), z) in a.iter().zip(&b).zip(&ctx.jets) {
        for c in 0..6 {
            let d1 = x.metric.comps[c] - z.metric.comps[c];
            let d2 = y.metric.comps[c] - z.metric.comps[c];
            assert!(jet_close(&(d1 * 2.0), &d2, 1e-12));
        }
    }
}
