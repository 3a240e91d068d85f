//! Fixtures shared by the benchmarks in `benches/`.

use gvstar_core::geometry::GeometryField;
use gvstar_core::problem::Problem;
use gvstar_core::scenario::{bundled, Scenario};

pub fn scenario(name: &str) -> Scenario {
    bundled(name).unwrap_or_else(|| panic!("no bundled scenario `{name}`"))
}

pub fn problem(name: &str, n: usize) -> Problem {
    scenario(name).problem(n, false).expect("bundled scenarios build")
}

pub fn geometry(name: &str, n: usize) -> GeometryField {
    problem(name, n).geometry().expect("bundled geometry")
}
