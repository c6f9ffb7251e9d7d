use slowdiff::analysis::{classify, SummabilityReport, Verdict, TOL_GAP};
use slowdiff::*;

fn library(p: f64, n: usize) -> Vec<FamilySpec> {
    let params = MediumParams::new(p, n).unwrap();
    let mut out = vec![
        FamilySpec::new("barenblatt", params),
        FamilySpec::new("barenblatt", params).arg("c", 0.5).arg("t_origin", 0.25),
        FamilySpec::new("dibenedetto", params),
        FamilySpec::new("wedge", params),
        FamilySpec::new("constant", params).arg("value", 2.0),
    ];
    if n <= 2 {
        let nodes = if n == 1 { 129 } else { 33 };
        out.extend([
            FamilySpec::new("separable", params).arg("nodes", nodes),
            FamilySpec::new("exp_blowup", params).arg("nodes", nodes),
            FamilySpec::new("superposition", params).arg("nodes", nodes).arg("times", vec![0.0, 0.5]),
            FamilySpec::new("glued_blowup", params).arg("nodes", nodes),
        ]);
    }
    if n >= 3 && p < n as f64 {
        out.push(FamilySpec::new("stationary_fundamental", params));
        out.push(FamilySpec::new("dense_poles", params));
    }
    out
}

fn assert_outside_gap(r: &SummabilityReport) {
    let lo = r.params.class_m_exponent() + TOL_GAP;
    let hi = r.params.class_b_exponent() - TOL_GAP;
    if r.verdict != Verdict::Inconclusive {
        assert!(!(r.s_star > lo && r.s_star < hi), "{} at p={} n={}: s* = {} inside the gap", r.field, r.params.p(), r.params.n(), r.s_star);
    }
    match r.verdict {
        Verdict::ClassB => assert!(r.s_star >= hi, "{r:?}"),
        Verdict::ClassM => assert!(r.s_star <= lo, "{r:?}"),
        _ => {}
    }
}

#[test]
fn no_library_field_lands_in_the_gap() {
    for (p, n) in [(3.0, 1), (3.0, 2), (4.0, 2), (2.5, 1), (3.0, 4)] {
        for spec in library(p, n) {
            let field = spec.build().unwrap_or_else(|e| panic!("{}: {e}", spec.family));
            let r = classify(&field).unwrap_or_else(|e| panic!("{}: {e}", spec.family));
            assert_ne!(r.verdict, Verdict::Inconclusive, "{} at ({p},{n}): {r:?}", spec.family);
            assert_outside_gap(&r);
        }
    }
}

#[test]
fn heat_kernel_control_is_flagged() {
    for (p, n) in [(3.0, 1), (3.0, 2)] {
        let params = MediumParams::new(p, n).unwrap();
        let r = classify(&FamilySpec::new("heat_kernel", params).build().unwrap()).unwrap();
        assert!((r.s_star - (1.0 + 2.0 / n as f64)).abs() < TOL_GAP, "{}", r.s_star);
        assert_eq!(r.verdict, Verdict::Inconclusive);
        assert!(r.flags.iter().any(|f| f == "gap_violation"));
    }
}
