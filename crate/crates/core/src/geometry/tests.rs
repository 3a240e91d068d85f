use super::*;
use crate::chart::{ChartBox, Grid};
use crate::testing::{expr_metric, expr_vector, generic_fixture, unit_field_exprs};

const CYL: [&str; 3] = ["rho", "phi", "z"];

fn cylinder() -> (ExprMetric, ExprVector) {
    (
        expr_metric(["1", "0", "0", "rho^2", "0", "1"], CYL),
        expr_vector(["0", "1/rho", "0"], CYL),
    )
}

/// Plain-value oracle: `2⟨∇_X Y, Z⟩ = X⟨Y,Z⟩ + Y⟨X,Z⟩ − Z⟨X,Y⟩` for
/// constant coordinate fields, with metric derivatives by central
/// differences.
fn koszul_oracle(m: &ExprMetric, p: [f64; 3], x: [f64; 3], y: [f64; 3], z: [f64; 3]) -> f64 {
    let gval = |q: [f64; 3]| -> [[f64; 3]; 3] {
        let mj = m.metric_jet(&q).unwrap();
        mj.values()
    };
    let dir = |v: [f64; 3], a: [f64; 3], b: [f64; 3]| -> f64 {
        let e = 1e-5;
        let qp = [p[0] + e * v[0], p[1] + e * v[1], p[2] + e * v[2]];
        let qm = [p[0] - e * v[0], p[1] - e * v[1], p[2] - e * v[2]];
        let ip = |g: [[f64; 3]; 3]| -> f64 {
            (0..3).map(|i| (0..3).map(|j| g[i][j] * a[i] * b[j]).sum::<f64>()).sum()
        };
        (ip(gval(qp)) - ip(gval(qm))) / (2.0 * e)
    };
    0.5 * (dir(x, y, z) + dir(y, x, z) - dir(z, x, y))
}

fn check_christoffel_against_oracle(m: &ExprMetric, p: [f64; 3]) {
    let gamma = christoffel(m, &p).unwrap();
    let g = m.metric_jet(&p).unwrap().values();
    let vecs = [[0.3, -1.2, 0.7], [1.1, 0.4, -0.5], [-0.2, 0.9, 1.3]];
    for x in vecs {
        for y in vecs {
            for z in vecs {
                let mut nab = [0.0; 3];
                for c in 0..3 {
                    for a in 0..3 {
                        for b in 0..3 {
                            nab[c] += gamma[c][a][b] * x[a] * y[b];
                        }
                    }
                }
                let lhs: f64 = (0..3).map(|i| (0..3).map(|j| g[i][j] * nab[i] * z[j]).sum::<f64>()).sum();
                let rhs = koszul_oracle(m, p, x, y, z);
                assert!((lhs - rhs).abs() < 1e-8, "{lhs} vs {rhs}");
            }
        }
    }
}

#[test]
fn euclidean_christoffel_vanishes() {
    let m = expr_metric(["1", "0", "0", "1", "0", "1"], ["x", "y", "z"]);
    let gamma = christoffel(&m, &[0.3, 0.2, 0.1]).unwrap();
    assert!(gamma.iter().flatten().flatten().all(|v| *v == 0.0));
}

#[test]
fn cylindrical_christoffel() {
    let (m, _) = cylinder();
    let p = [1.7, 0.4, 0.2];
    let gamma = christoffel(&m, &p).unwrap();
    assert!((gamma[0][1][1] + 1.7).abs() < 1e-14);
    assert!((gamma[1][0][1] - 1.0 / 1.7).abs() < 1e-14);
    assert!((gamma[1][1][0] - 1.0 / 1.7).abs() < 1e-14);
    let mut others = 0.0f64;
    for c in 0..3 {
        for a in 0..3 {
            for b in 0..3 {
                if !matches!((c, a, b), (0, 1, 1) | (1, 0, 1) | (1, 1, 0)) {
                    others = others.max(gamma[c][a][b].abs());
                }
            }
        }
    }
    assert_eq!(others, 0.0);
    check_christoffel_against_oracle(&m, p);
}

#[test]
fn warped_christoffel() {
    let m = expr_metric(["exp(2*s)", "0", "0", "exp(2*s)", "0", "1"], ["x", "y", "s"]);
    let p = [0.1, -0.3, 0.25];
    let gamma = christoffel(&m, &p).unwrap();
    assert!((gamma[0][0][2] - 1.0).abs() < 1e-14);
    assert!((gamma[2][0][0] + (0.5f64).exp()).abs() < 1e-14);
    check_christoffel_against_oracle(&m, p);
}

#[test]
fn generic_christoffel_matches_koszul() {
    let (m, _) = generic_fixture();
    check_christoffel_against_oracle(&m, [0.2, 0.5, -0.1]);
}

#[test]
fn covariant_derivative_cases() {
    let xyz = ["x", "y", "z"];
    let flat = expr_metric(["1", "0", "0", "1", "0", "1"], xyz);
    let w = expr_vector(["2", "-1", "0.5"], xyz);
    let d = covariant_derivative(&[0.3, 0.1, 0.2], &w, &flat, &[0.1, 0.2, 0.3]).unwrap();
    assert_eq!(d, [0.0; 3]);

    // unit circle field: acceleration points to the axis with norm 1/ρ
    let circ = expr_vector(["-y/sqrt(x^2+y^2)", "x/sqrt(x^2+y^2)", "0"], xyz);
    let p = [1.2, -0.5, 0.0];
    let v = circ.vector_jet(&p).unwrap().values();
    let a = covariant_derivative(&v, &circ, &flat, &p).unwrap();
    let rho2: f64 = 1.2 * 1.2 + 0.25;
    assert!((a[0] + 1.2 / rho2).abs() < 1e-14);
    assert!((a[1] - 0.5 / rho2).abs() < 1e-14);
    assert!(((a[0] * a[0] + a[1] * a[1]).sqrt() - 1.0 / rho2.sqrt()).abs() < 1e-14);
}

#[test]
fn torsion_free_on_random_fields() {
    use rand::{Rng, SeedableRng};
    let (m, _) = generic_fixture();
    let xyz = ["x", "y", "z"];
    let v = expr_vector(["sin(y) + 0.3", "x*z", "exp(0.2*x)"], xyz);
    let w = expr_vector(["cos(z)", "1 + y^2", "x - z"], xyz);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let p = [rng.gen_range(-0.5..0.5), rng.gen_range(0.0..1.0), rng.gen_range(-0.5..0.5)];
        let lv = Local::new(p, &point_jets(&m, &v, &p).unwrap(), 1.0).unwrap();
        let lw = Local::new(p, &point_jets(&m, &w, &p).unwrap(), 1.0).unwrap();
        let vv = jet1::values(&lv.t);
        let wv = jet1::values(&lw.t);
        let nvw = lw.covariant(&vv, &lw.t);
        let nwv = lv.covariant(&wv, &lv.t);
        let br = [0, 1, 2].map(|c| lw.t[c].along(&vv) - lv.t[c].along(&wv));
        for c in 0..3 {
            assert!((nvw[c] - nwv[c] - br[c]).abs() < 1e-9);
        }
    }
}

#[test]
fn euclidean_vertical_field_is_geodesic() {
    let xyz = ["x", "y", "z"];
    let m = expr_metric(["1", "0", "0", "1", "0", "1"], xyz);
    let t = expr_vector(["0", "0", "1"], xyz);
    let f = frenet(&m, &t, 1.0, &[0.1, 0.2, 0.3], &FrenetOptions::default()).unwrap();
    assert!(f.geodesic);
    assert_eq!(f.k, 0.0);
    assert_eq!(f.tau, 0.0);
}

#[test]
fn cylinder_frenet_frame() {
    let (m, t) = cylinder();
    for rho in [1.0, 1.3, 2.0] {
        let f = frenet(&m, &t, 1.0, &[rho, 0.5, 0.5], &FrenetOptions::default()).unwrap();
        assert!(!f.geodesic);
        assert!((f.k - 1.0 / rho).abs() < 1e-14);
        assert!((f.n[0] + 1.0).abs() < 1e-14 && f.n[1].abs() < 1e-14 && f.n[2].abs() < 1e-14);
        assert!(f.b[0].abs() < 1e-14 && f.b[1].abs() < 1e-14 && (f.b[2] - 1.0).abs() < 1e-14);
        assert!(f.tau.abs() < 1e-14);
        assert!(f.h.iter().flatten().all(|v| v.abs() < 1e-14));
    }
}

#[test]
fn warped_untilted_mean_curvature() {
    let xys = ["x", "y", "s"];
    let m = expr_metric(["exp(2*s)", "0", "0", "exp(2*s)", "0", "1"], xys);
    let t = expr_vector(["0", "0", "1"], xys);
    let f = frenet(&m, &t, 1.0, &[0.2, 0.1, 0.3], &FrenetOptions::default()).unwrap();
    assert!(f.geodesic);
    // oracle: h(X,Y) = −½ ∂_s g(X,Y) on unit X,Y ⟂ ∂_s
    assert!((f.h_nn() + 1.0).abs() < 1e-14);
    assert!((f.h_bb() + 1.0).abs() < 1e-14);
    assert!(f.h_nb().abs() < 1e-14);
    assert!((f.mean_curvature + 1.0).abs() < 1e-14);
}

#[test]
fn warped_tilted_field_is_not_geodesic() {
    let xys = ["x", "y", "s"];
    let srcs = ["exp(2*s)", "0", "0", "exp(2*s)", "0", "1"];
    let m = expr_metric(srcs, xys);
    let t = unit_field_exprs(srcs, ["0.4*sin(x)", "0", "1"], xys);
    let f = frenet(&m, &t, 1.0, &[0.3, 0.1, 0.2], &FrenetOptions::default()).unwrap();
    assert!(!f.geodesic);
    assert!(f.k > 0.0);
    assert!((f.mean_curvature - 0.5 * (f.h_nn() + f.h_bb())).abs() == 0.0);
}

#[test]
fn frenet_invariants_on_generic_field() {
    let (m, t) = generic_fixture();
    let opts = FrenetOptions::default();
    for p in [[0.1, 0.3, 0.2], [-0.3, 0.7, -0.4], [0.45, 0.1, 0.0]] {
        let f = frenet(&m, &t, 1.0, &p, &opts).unwrap();
        assert!(!f.geodesic);
        // orthonormality
        let fr = [f.t, f.n, f.b];
        for a in 0..3 {
            for b in 0..3 {
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((f.dot(&fr[a], &fr[b]) - want).abs() < 1e-10);
            }
        }
        // orientation: det[T N B] = o / √det g
        let det = f.t[0] * (f.n[1] * f.b[2] - f.n[2] * f.b[1]) - f.t[1] * (f.n[0] * f.b[2] - f.n[2] * f.b[0])
            + f.t[2] * (f.n[0] * f.b[1] - f.n[1] * f.b[0]);
        assert!((det - 1.0 / f.sqrt_det).abs() < 1e-10);
        assert!(f.closure < 1e-12);
        assert!((f.div_t + f.h_nn() + f.h_bb()).abs() < 1e-11);
        assert!((f.tau + f.h_nb() - f.bracket_tn_b).abs() < 1e-11);
        assert!((f.tcal - (f.h_nb() - f.h_bn())).abs() < 1e-11);
    }
    // reversed chart orientation flips B
    let p = [0.1, 0.3, 0.2];
    let f1 = frenet(&m, &t, 1.0, &p, &opts).unwrap();
    let f2 = frenet(&m, &t, -1.0, &p, &opts).unwrap();
    for i in 0..3 {
        assert!((f1.b[i] + f2.b[i]).abs() < 1e-14);
    }
}

#[test]
fn non_unit_field_rejected() {
    let (m, _) = cylinder();
    let t = expr_vector(["0", "1", "0"], CYL);
    assert!(matches!(
        frenet(&m, &t, 1.0, &[1.5, 0.0, 0.0], &FrenetOptions::default()),
        Err(Error::NonUnitField { .. })
    ));
}

#[test]
fn singular_metric_rejected() {
    let m = expr_metric(["1", "1", "0", "1", "0", "1"], ["x", "y", "z"]);
    assert!(matches!(
        christoffel(&m, &[0.0; 3]),
        Err(Error::NotPositiveDefinite { .. })
    ));
}

/// `|∇_T B + τN|` with `∂B` taken by grid stencils decays at fourth order.
#[test]
fn binormal_closure_converges_at_fourth_order() {
    let (m, t) = generic_fixture();
    let opts = FrenetOptions::default();
    let probe = [0.1, 0.5, 0.0];
    let mut errs = Vec::new();
    for n in [8usize, 16] {
        let half = 0.2;
        let b = ChartBox::new(
            ["x", "y", "z"],
            [probe[0] - half, probe[1] - half, probe[2] - half],
            [probe[0] + half, probe[1] + half, probe[2] + half],
            1.0,
        )
        .unwrap();
        let grid = Grid::uniform(b, n).unwrap();
        let field = GeometryField::compute(&grid, &m, &t, &opts).unwrap();
        let center = grid.index([n / 2; 3]);
        let f = &field.nodes[center];
        let mut nabla = [0.0; 3];
        for c in 0..3 {
            let comp = field.scalar(|d| d.b[c]);
            let g = crate::chart::gradient(&comp).unwrap();
            nabla[c] = (0..3).map(|e| f.t[e] * g[e][center]).sum();
        }
        let local = Local::new(grid.point(center), &point_jets(&m, &t, &grid.point(center)).unwrap(), 1.0).unwrap();
        let gamma_part = local.covariant(&f.t, &f.b.map(Jet1::constant));
        let resid = [0, 1, 2].map(|c| nabla[c] + gamma_part[c] + f.tau * f.n[c]);
        errs.push(local.norm(&resid));
    }
    let ratio = errs[0] / errs[1];
    assert!(ratio > 11.0, "errors {errs:?} ratio {ratio}");
}
