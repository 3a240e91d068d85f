use super::*;
use crate::scenario::bundled;

fn quick(n: usize) -> Settings {
    Settings {
        n,
        count: 2,
        fd_points: 24,
        ..Settings::default()
    }
}

#[test]
fn flat_product_passes_functional_and_is_cosymplectic() {
    let sc = bundled("flat-product").unwrap();
    let f = functional(&sc, &quick(12)).unwrap();
    assert!(f.pass, "{f:?}");
    assert_eq!(classify_scenario(&sc, &quick(12)).unwrap().verdict.label(), "cosymplectic");
}

#[test]
fn cylinder_variations_are_stationary() {
    let sc = bundled("cylinder").unwrap();
    let r = vary(&sc, VariationKind::Gtop, &quick(16)).unwrap();
    assert_eq!(r.rows.len(), 2);
    assert_eq!(r.verdict, "stationary", "{r:?}");
}

#[test]
fn expectation_rows_compare_verdicts() {
    let mut sc = bundled("kenmotsu-warped").unwrap();
    sc.expect.insert("classify".into(), "C12".into());
    let rows = check_expectations(&sc, &quick(12)).unwrap();
    let row = rows.iter().find(|r| r.key == "classify").unwrap();
    assert_eq!(row.actual, "C5");
    assert!(!row.pass);
    assert!(rows.iter().find(|r| r.key == "el_full").unwrap().pass);
}

#[test]
fn unknown_keys_are_errors() {
    let sc = bundled("flat-product").unwrap();
    for key in ["nope", "el_sideways", "vary_gup"] {
        assert!(verdict_for_key(&sc, key, &quick(12)).is_err(), "{key}");
    }
    assert!(twisted_check(&sc, &quick(12)).is_err());
}
