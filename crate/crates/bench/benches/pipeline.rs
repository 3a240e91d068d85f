use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use gvstar_bench::{geometry, problem, scenario};
use gvstar_core::exprlang::Expr;
use gvstar_core::forms::{gv_star, Method};
use gvstar_core::ode::integrate_critical;
use gvstar_core::twisted::{flat_base, recover_profiles, verify_critical};
use gvstar_core::variation::{el_residuals, Derived, Suite};

fn bench_exprlang(c: &mut Criterion) {
    let src = "rho^2*sin(theta)^2 + exp(-0.5*phi)*cos(rho*theta)/(2 + sin(phi))";
    let names = ["rho", "theta", "phi"];
    c.bench_function("exprlang/parse", |b| b.iter(|| Expr::parse(black_box(src), &names).unwrap()));
    let e = Expr::parse(src, &names).unwrap();
    let p = [1.3, 0.7, 0.2];
    c.bench_function("exprlang/eval", |b| b.iter(|| e.eval(black_box(&p)).unwrap()));
    c.bench_function("exprlang/jet2", |b| b.iter(|| e.eval_jet2(black_box(&p)).unwrap()));
}

fn bench_geometry(c: &mut Criterion) {
    let mut g = c.benchmark_group("geometry");
    g.sample_size(10);
    for n in [16, 32] {
        let pb = problem("helix-twisted", n);
        g.bench_with_input(BenchmarkId::new("field", n), &pb, |b, pb| b.iter(|| pb.geometry().unwrap()));
    }
    g.finish();
}

fn bench_functional(c: &mut Criterion) {
    let mut g = c.benchmark_group("functional");
    g.sample_size(10);
    for n in [16, 32] {
        let geom = geometry("helix-twisted", n);
        g.bench_with_input(BenchmarkId::new("gv_star", n), &geom, |b, geom| {
            b.iter(|| gv_star(geom, Method::Both).unwrap())
        });
    }
    g.finish();
}

fn bench_el(c: &mut Criterion) {
    let mut g = c.benchmark_group("euler_lagrange");
    g.sample_size(10);
    let sc = scenario("sphere-foliation");
    let geom = geometry("sphere-foliation", 24);
    g.bench_function("derived", |b| b.iter(|| Derived::compute(&geom).unwrap()));
    let derived = Derived::compute(&geom).unwrap();
    g.bench_function("residuals_full", |b| {
        b.iter(|| el_residuals(&geom, &derived, &sc.interior, Suite::Full, 1e-4).unwrap())
    });
    g.finish();
}

fn bench_ode(c: &mut Criterion) {
    c.bench_function("ode/critical_3.4", |b| {
        b.iter(|| integrate_critical(black_box(1.0), 0.0, 3.4, 1e-4).unwrap())
    });
}

fn bench_twisted(c: &mut Criterion) {
    let mut g = c.benchmark_group("twisted");
    g.sample_size(10);
    let sc = scenario("twisted-critical");
    g.bench_function("recover", |b| {
        b.iter(|| recover_profiles(&sc.chart, flat_base(), "1/(1 - x)", 0.0, 1e-3).unwrap())
    });
    let spec = sc.twisted_spec().unwrap().unwrap();
    g.bench_function("verify_24", |b| b.iter(|| verify_critical(&spec, 24, &sc.interior, 1e-3).unwrap()));
    g.finish();
}

criterion_group!(parse, bench_exprlang);
criterion_group!(fields, bench_geometry, bench_functional, bench_el);
criterion_group!(critical, bench_ode, bench_twisted);
criterion_main!(parse, fields, critical);
