//! Fixtures shared by unit tests.

use crate::exprlang::Expr;
use crate::geometry::{ExprMetric, ExprVector};

pub fn expr_metric(srcs: [&str; 6], coords: [&str; 3]) -> ExprMetric {
    ExprMetric {
        comps: srcs.map(|s| Expr::parse(s, &coords).unwrap()),
    }
}

pub fn expr_vector(srcs: [&str; 3], coords: [&str; 3]) -> ExprVector {
    ExprVector {
        comps: srcs.map(|s| Expr::parse(s, &coords).unwrap()),
    }
}

/// Expressions for `W / |W|_g`.
pub fn unit_field_strings(metric: [&str; 6], w: [&str; 3]) -> [String; 3] {
    let idx = [(0, 0, 0), (1, 0, 1), (2, 0, 2), (3, 1, 1), (4, 1, 2), (5, 2, 2)];
    let mut terms = Vec::new();
    for (k, a, b) in idx {
        let f = if a == b { "1" } else { "2" };
        terms.push(format!("{f}*({})*({})*({})", metric[k], w[a], w[b]));
    }
    let norm = format!("sqrt({})", terms.join(" + "));
    w.map(|c| format!("({c})/{norm}"))
}

pub fn unit_field_exprs(metric: [&str; 6], w: [&str; 3], coords: [&str; 3]) -> ExprVector {
    let s = unit_field_strings(metric, w);
    expr_vector([s[0].as_str(), s[1].as_str(), s[2].as_str()], coords)
}

pub const GENERIC_METRIC: [&str; 6] = [
    "1 + 0.2*y^2",
    "0.1*sin(z)",
    "0",
    "exp(0.3*x)",
    "0.05*x*y",
    "1 + 0.1*cos(x + z)",
];

pub const GENERIC_W: [&str; 3] = ["1", "0.3*sin(x)", "0.5 + 0.2*z*y"];

/// A metric and unit field with no symmetry, for identity checks.
pub fn generic_fixture() -> (ExprMetric, ExprVector) {
    let xyz = ["x", "y", "z"];
    (
        expr_metric(GENERIC_METRIC, xyz),
        unit_field_exprs(GENERIC_METRIC, GENERIC_W, xyz),
    )
}
