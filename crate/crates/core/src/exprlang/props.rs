//! Property tests over randomly generated expressions.

use super::*;
use proptest::prelude::*;

const XYZ: [&str; 3] = ["x", "y", "z"];

/// Test-side tree, printed to source and evaluated independently of the
/// parser. Every generated expression is defined on all of R³.
#[derive(Debug, Clone)]
enum T {
    Num(f64),
    Var(usize),
    Neg(Box<T>),
    Add(Box<T>, Box<T>),
    Sub(Box<T>, Box<T>),
    Mul(Box<T>, Box<T>),
    /// `a / (2 + sin(b))`
    Div(Box<T>, Box<T>),
    Square(Box<T>),
    Sin(Box<T>),
    Cos(Box<T>),
    Tanh(Box<T>),
    /// `exp(tanh(a))`
    Exp(Box<T>),
    /// `sqrt(1 + a^2)`
    Hyp(Box<T>),
    /// `log(1 + a^2)`
    Log(Box<T>),
}

fn tree() -> impl Strategy<Value = T> {
    let leaf = prop_oneof![(-3.0f64..3.0).prop_map(|v| T::Num((v * 100.0).round() / 100.0)), (0usize..3).prop_map(T::Var)];
    leaf.prop_recursive(4, 24, 2, |inner| {
        let b = |f: fn(Box<T>, Box<T>) -> T| (inner.clone(), inner.clone()).prop_map(move |(a, c)| f(Box::new(a), Box::new(c)));
        let u = |f: fn(Box<T>) -> T| inner.clone().prop_map(move |a| f(Box::new(a)));
        prop_oneof![
            u(T::Neg),
            b(T::Add),
            b(T::Sub),
            b(T::Mul),
            b(T::Div),
            u(T::Square),
            u(T::Sin),
            u(T::Cos),
            u(T::Tanh),
            u(T::Exp),
            u(T::Hyp),
            u(T::Log),
        ]
    })
}

fn print(t: &T) -> String {
    match t {
        T::Num(v) if *v < 0.0 => format!("({v})"),
        T::Num(v) => format!("{v}"),
        T::Var(i) => XYZ[*i].to_string(),
        T::Neg(a) => format!("-({})", print(a)),
        T::Add(a, b) => format!("({} + {})", print(a), print(b)),
        T::Sub(a, b) => format!("({} - {})", print(a), print(b)),
        T::Mul(a, b) => format!("{} * {}", paren(a), paren(b)),
        T::Div(a, b) => format!("{} / (2 + sin({}))", paren(a), print(b)),
        T::Square(a) => format!("({})^2", print(a)),
        T::Sin(a) => format!("sin({})", print(a)),
        T::Cos(a) => format!("cos({})", print(a)),
        T::Tanh(a) => format!("tanh({})", print(a)),
        T::Exp(a) => format!("exp(tanh({}))", print(a)),
        T::Hyp(a) => format!("sqrt(1 + ({})^2)", print(a)),
        T::Log(a) => format!("log(1 + ({})^2)", print(a)),
    }
}

fn paren(t: &T) -> String {
    format!("({})", print(t))
}

fn oracle(t: &T, p: &[f64; 3]) -> f64 {
    let e = |a: &T| oracle(a, p);
    match t {
        T::Num(v) => *v,
        T::Var(i) => p[*i],
        T::Neg(a) => -e(a),
        T::Add(a, b) => e(a) + e(b),
        T::Sub(a, b) => e(a) - e(b),
        T::Mul(a, b) => e(a) * e(b),
        T::Div(a, b) => e(a) / (2.0 + e(b).sin()),
        T::Square(a) => e(a) * e(a),
        T::Sin(a) => e(a).sin(),
        T::Cos(a) => e(a).cos(),
        T::Tanh(a) => e(a).tanh(),
        T::Exp(a) => e(a).tanh().exp(),
        T::Hyp(a) => (1.0 + e(a) * e(a)).sqrt(),
        T::Log(a) => (1.0 + e(a) * e(a)).ln(),
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

fn point() -> impl Strategy<Value = [f64; 3]> {
    [-1.5f64..1.5, -1.5f64..1.5, -1.5f64..1.5]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn parser_agrees_with_independent_evaluator(t in tree(), p in point()) {
        let src = print(&t);
        let e = Expr::parse(&src, &XYZ).unwrap();
        let (got, want) = (e.eval(&p).unwrap(), oracle(&t, &p));
        prop_assert!(close(got, want), "{src}: {got} vs {want}");
        prop_assert!(close(e.eval_jet2(&p).unwrap().value, want));
    }

    #[test]
    fn printing_round_trips(t in tree(), pts in proptest::collection::vec(point(), 100)) {
        let e = Expr::parse(&print(&t), &XYZ).unwrap();
        let back = Expr::parse(&e.to_source(&XYZ), &XYZ).unwrap();
        for p in &pts {
            prop_assert_eq!(e.eval(p).unwrap(), back.eval(p).unwrap());
        }
    }

    #[test]
    fn jets_match_finite_differences(t in tree(), p in point()) {
        let e = Expr::parse(&print(&t), &XYZ).unwrap();
        let d = e.derivative_defect(&p, 1e-3).unwrap();
        prop_assert!(d <= 1e-6, "{}: {d}", print(&t));
    }

    #[test]
    fn quadratics_have_exact_jets(c in proptest::collection::vec(-2.0f64..2.0, 10), p in point()) {
        let src = format!(
            "{} + {}*x + {}*y + {}*z + {}*x^2 + {}*x*y + {}*x*z + {}*y^2 + {}*y*z + {}*z^2",
            c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7], c[8], c[9]
        );
        let j = Expr::parse(&src, &XYZ).unwrap().eval_jet2(&p).unwrap();
        let [x, y, z] = p;
        let gx = c[1] + 2.0 * c[4] * x + c[5] * y + c[6] * z;
        let gy = c[2] + c[5] * x + 2.0 * c[7] * y + c[8] * z;
        let gz = c[3] + c[6] * x + c[8] * y + 2.0 * c[9] * z;
        for (a, b) in j.grad.iter().zip([gx, gy, gz]) {
            prop_assert!((a - b).abs() < 1e-13);
        }
        let h = [2.0 * c[4], c[5], c[6], 2.0 * c[7], c[8], 2.0 * c[9]];
        for (a, b) in j.hess.iter().zip(h) {
            prop_assert!((a - b).abs() < 1e-13);
        }
    }
}

#[test]
fn negated_square_matches_oracle() {
    let t = T::Neg(Box::new(T::Square(Box::new(T::Var(0)))));
    let p = [2.0, 0.0, 0.0];
    assert_eq!(Expr::parse("-x^2", &XYZ).unwrap().eval(&p).unwrap(), oracle(&t, &p));
    assert_eq!(oracle(&t, &p), -4.0);
}

#[test]
fn exp_jet_matches_central_differences() {
    let e = Expr::parse("exp(2*s)", &["x", "y", "s"]).unwrap();
    assert!(e.derivative_defect(&[0.1, 0.2, 0.5], 1e-3).unwrap() < 1e-8);
}
