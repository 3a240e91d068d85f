use super::*;
use proptest::prelude::*;

#[test]
fn geodesic_branch_matches_closed_form() {
    let h0 = 0.7;
    let p = integrate_critical(0.0, h0, 2.0, 1e-3).unwrap();
    for q in &p.samples {
        assert_eq!(q.k, 0.0);
        let want = h0 / (1.0 + h0 * q.s);
        assert!((q.h - want).abs() < 1e-8 * want.abs().max(1.0).powi(3), "{q:?}");
    }
    // backward, H0/(1 + H0 s) blows up at s = -1/H0
    let b = p.blowup_s_backward.unwrap();
    assert!((b + 1.0 / h0).abs() < 1e-6, "{b}");
    assert!(p.blowup_s.is_none());
}

#[test]
fn taylor_reference_at_unit_curvature() {
    let (k, h) = taylor_reference(1.0, 0.0, 0.1);
    assert!((k - 0.99875).abs() < 1e-15);
    assert!((h + 0.025).abs() < 1e-15);
    assert_eq!(taylor_reference(0.3, -0.2, 0.0), (0.3, -0.2));
}

#[test]
fn rk4_matches_series_at_unit_curvature() {
    let p = integrate_critical(1.0, 0.0, 0.1, 1e-4).unwrap();
    let end = p.nearest(0.1).unwrap();
    assert!((end.s - 0.1).abs() < 1e-12);
    assert!((end.k - 0.99875).abs() <= 5e-5, "{end:?}");
    assert!((end.h + 0.025).abs() <= 5e-5, "{end:?}");
}

fn series_defect(k0: f64, h0: f64, x: f64) -> f64 {
    let p = integrate_critical(k0, h0, x, x / 2000.0).unwrap();
    let end = p.nearest(x).unwrap();
    let (k, h) = taylor_reference(k0, h0, x);
    (end.k - k).abs().max((end.h - h).abs())
}

#[test]
fn series_remainder_is_fourth_order() {
    for (k0, h0, x) in [(1.0, 1.0, 0.02), (1.0, 0.0, 0.1)] {
        let a = series_defect(k0, h0, x);
        let b = series_defect(k0, h0, x / 2.0);
        let ratio = a / b;
        assert!((12.0..20.0).contains(&ratio), "({k0},{h0}) ratio {ratio}");
    }
    // (1, 1, 0.01): |Δ| ≤ 5·x⁴·max coefficient
    let d = series_defect(1.0, 1.0, 0.01);
    assert!(d <= 5.0 * 1e-8 * 1.25, "{d}");
}

#[test]
fn first_integrals_are_constant() {
    let p = integrate_critical(1.0, 0.0, 3.0, 1e-4).unwrap();
    assert!(p.c1_drift <= 1e-10, "{}", p.c1_drift);
    assert_eq!(p.c1, 1.0 / 16.0);
    assert_eq!(p.ck, 1.0 / 8.0);
    let (c1, ck) = first_integrals(&p);
    for (a, b) in c1.iter().zip(&ck) {
        assert!((a - 1.0 / 16.0).abs() < 1e-11);
        assert!((b - 1.0 / 8.0).abs() < 1e-10);
    }
    let q = integrate_critical(0.0, 1.0, 0.5, 1e-3).unwrap();
    assert!(first_integrals(&q).0.iter().all(|&c| c == 0.0));
}

#[test]
fn blowup_matches_quadrature_oracle() {
    let p = integrate_critical(1.0, 0.0, 5.0, 1e-4).unwrap();
    let oracle = blowup_oracle(1.0, 0.0).unwrap();
    assert!((oracle - 3.708).abs() < 1e-3, "{oracle}");
    let b = p.blowup_s.unwrap();
    assert!((b - oracle).abs() < 1e-3, "{b} vs {oracle}");
    assert!(b >= 3.4);
    assert!((p.blowup_s_backward.unwrap() + oracle).abs() < 1e-3);
    assert!(p.samples.iter().all(|q| q.s.abs() < b));
    let inside = integrate_critical(1.0, 0.0, 3.39, 1e-4).unwrap();
    assert!(inside.blowup_s.is_none() && inside.blowup_s_backward.is_none());
}

#[test]
fn quadrature_inverts_rk4() {
    let p = integrate_critical(1.0, 0.0, 2.5, 1e-4).unwrap();
    for s in [0.5, 1.0, 2.0] {
        let q = p.nearest(s).unwrap();
        let sol = quadrature_solution(1.0, 0.0, q.h).unwrap();
        assert!((sol.s - q.s).abs() < 1e-6, "{sol:?} vs {q:?}");
        assert!((sol.k - q.k).abs() < 1e-6, "{sol:?} vs {q:?}");
    }
    assert_eq!(quadrature_solution(1.0, 0.3, 0.3).unwrap().s, 0.0);
    let neg = quadrature_solution(-2.0, 0.1, -0.5).unwrap();
    assert!(neg.k < 0.0);
    assert!(quadrature_solution(0.0, 1.0, -1.0).is_err());
}

#[test]
fn rk4_is_fourth_order() {
    let end = |step: f64| {
        let p = integrate_critical(1.0, 0.3, 1.0, step).unwrap();
        *p.samples.last().unwrap()
    };
    let r = end(1e-3 / 8.0);
    let e1 = (end(1e-2).h - r.h).abs();
    let e2 = (end(5e-3).h - r.h).abs();
    let ratio = e1 / e2;
    assert!((13.0..19.0).contains(&ratio), "{ratio}");
}

#[test]
fn second_order_form_holds() {
    let p = integrate_critical(0.8, -0.3, 1.5, 1e-3).unwrap();
    for w in p.samples.windows(3) {
        let (a, b) = (w[1].s - w[0].s, w[2].s - w[1].s);
        let dd = |f0: f64, f1: f64, f2: f64| 2.0 * (b * f0 - (a + b) * f1 + a * f2) / (a * b * (a + b));
        let dd_h = dd(w[0].h, w[1].h, w[2].h);
        let dd_k = dd(w[0].k, w[1].k, w[2].k);
        assert!((dd_h - 2.0 * w[1].h.powi(3)).abs() < 1e-5, "{w:?} {dd_h}");
        assert!((dd_k + w[1].k.powi(3) / 4.0).abs() < 1e-5);
    }
}

#[test]
fn invalid_inputs_are_rejected() {
    assert!(integrate_critical(1.0, 0.0, 1.0, 0.0).is_err());
    assert!(integrate_critical(1.0, 0.0, -1.0, 0.1).is_err());
    assert!(matches!(integrate_critical(1.0, 0.0, 3.0, 0.7), Err(Error::Drift { .. })));
}

#[test]
fn rows_carry_first_integrals() {
    let p = integrate_critical(1.0, 0.0, 0.01, 1e-3).unwrap();
    let rows = p.rows();
    assert_eq!(rows.len(), p.samples.len());
    assert_eq!(rows.len(), 21);
    for r in rows {
        assert!((r[3] - 1.0 / 16.0).abs() < 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn k_keeps_sign_and_h_decreases(k0 in -2.0f64..2.0, h0 in -1.0f64..1.0) {
        prop_assume!(k0.abs() > 1e-3);
        let p = integrate_critical(k0, h0, 0.5, 1e-4).unwrap();
        for w in p.samples.windows(2) {
            prop_assert!(w[1].k * k0.signum() > 0.0);
            prop_assert!(w[1].h < w[0].h);
        }
    }

    #[test]
    fn time_reversal_symmetry(k0 in 0.1f64..2.0, h0 in -1.0f64..1.0) {
        let a = integrate_critical(k0, h0, 0.8, 1e-3).unwrap();
        let b = integrate_critical(k0, -h0, 0.8, 1e-3).unwrap();
        for q in &a.samples {
            if let Some(r) = b.samples.iter().find(|r| (r.s + q.s).abs() < 1e-9) {
                prop_assert!((r.k - q.k).abs() < 1e-12);
                prop_assert!((r.h + q.h).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn even_and_odd_when_h0_vanishes(k0 in 0.1f64..2.0) {
        let p = integrate_critical(k0, 0.0, 1.0, 1e-3).unwrap();
        let n = p.samples.len();
        for i in 0..n / 2 {
            let (a, b) = (p.samples[i], p.samples[n - 1 - i]);
            prop_assert!((a.s + b.s).abs() < 1e-12);
            prop_assert!((a.k - b.k).abs() < 1e-12);
            prop_assert!((a.h + b.h).abs() < 1e-12);
        }
    }
}
