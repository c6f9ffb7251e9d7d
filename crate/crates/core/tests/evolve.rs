use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slowdiff::evolve::*;
use slowdiff::field::sample_to_grid;
use slowdiff::giant::shoot_giant_1d;
use slowdiff::solutions::{BarenblattSpec, WedgeSpec, WedgeVariant};
use slowdiff::*;

fn p3(n: usize) -> MediumParams {
    MediumParams::new(3.0, n).unwrap()
}

fn barenblatt(n: usize) -> Arc<dyn Field> {
    Arc::new(AnalyticField::barenblatt(BarenblattSpec::new(p3(n))))
}

#[test]
fn zero_data_stays_zero() {
    let spec = GridSpec::uniform(2, -1.0, 1.0, 9, 0.0, 1.0, 5).unwrap();
    let sol = solve(&EvolutionProblem::new(spec, p3(2), vec![0.0; 81]).unwrap()).unwrap();
    assert!(sol.values().iter().all(|&v| v == 0.0));
}

#[test]
fn barenblatt_reproduction_1d() {
    let exact = barenblatt(1);
    let mut errs = vec![];
    for (nx, nt) in [(17, 9), (33, 17), (65, 33)] {
        let spec = GridSpec::uniform(1, -1.5, 1.5, nx, 0.5, 1.0, nt).unwrap();
        let prob = EvolutionProblem::from_field(spec, p3(1), exact.clone()).unwrap().with_delta(1e-8);
        errs.push(final_level_error(&solve(&prob).unwrap(), exact.as_ref()).unwrap());
    }
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    let order = (errs[0] / errs[2]).log2() / 2.0;
    assert!(order >= 1.0, "{errs:?} order {order}");
}

#[test]
fn separable_reproduction_1d() {
    let g = Arc::new(shoot_giant_1d(3.0, 1.0, 513, 1e-13).unwrap());
    let v: Arc<dyn Field> = Arc::new(AnalyticField::separable(g, 0.0).unwrap());
    let mut errs = vec![];
    for (nx, nt) in [(17, 5), (33, 17), (65, 65)] {
        let spec = GridSpec::uniform(1, -1.0, 1.0, nx, 0.5, 1.0, nt).unwrap();
        let prob = EvolutionProblem::from_field(spec, p3(1), v.clone()).unwrap();
        errs.push(final_level_error(&solve(&prob).unwrap(), v.as_ref()).unwrap());
    }
    let order = (errs[0] / errs[2]).log2() / 2.0;
    assert!(errs.windows(2).all(|w| w[1] < w[0]) && order >= 1.0, "{errs:?}");
}

#[test]
fn compare_examples() {
    let spec = GridSpec::uniform(1, -1.0, 1.0, 33, 0.0, 0.2, 11).unwrap();
    let b = Arc::new(AnalyticField::barenblatt(BarenblattSpec::new(p3(1)).with_origin(&[0.0], -0.1).unwrap()));
    let lower = solve(&EvolutionProblem::from_field(spec.clone(), p3(1), b.clone()).unwrap()).unwrap();
    assert!(compare(&GridField::zeros(spec.clone()), &lower, 0.0).unwrap().pass);

    let plus: Vec<f64> = lower.level(0).iter().map(|v| v + 1.0).collect();
    let bb = b.clone();
    let upper_prob = EvolutionProblem::new(spec.clone(), p3(1), plus)
        .unwrap()
        .with_boundary(BoundaryData::Field(Arc::new(AnalyticField::custom(p3(1), "b+1", None, move |pt| bb.eval(pt) + 1.0))));
    let upper = solve(&upper_prob).unwrap();
    let r = compare(&lower, &upper, 1e-9).unwrap();
    assert!(r.pass, "{r:?}");
    let back = compare(&upper, &lower, 1e-9).unwrap();
    assert!(!back.pass && back.worst_violation > 0.5);

    let other = GridSpec::uniform(1, -1.0, 1.0, 17, 0.0, 0.2, 11).unwrap();
    assert_eq!(compare(&lower, &GridField::zeros(other), 0.0), Err(Error::SpecMismatch));
}

#[test]
fn random_ordered_pairs_stay_ordered() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..10 {
        let spec = GridSpec::uniform(1, -1.0, 1.0, 25, 0.0, 0.1, 9).unwrap();
        let m = spec.spatial_count();
        let lo: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..1.0)).collect();
        let up: Vec<f64> = lo.iter().map(|v| v + rng.gen_range(0.0..0.3)).collect();
        let a = solve(&EvolutionProblem::new(spec.clone(), p3(1), lo).unwrap()).unwrap();
        let b = solve(&EvolutionProblem::new(spec, p3(1), up).unwrap()).unwrap();
        let r = compare(&a, &b, 1e-9).unwrap();
        assert!(r.pass, "{r:?}");
    }
}

#[test]
fn mass_decreases_and_solution_stays_nonnegative() {
    let spec = GridSpec::uniform(2, -1.0, 1.0, 21, 0.0, 0.5, 11).unwrap();
    let init: Vec<f64> = (0..spec.spatial_count())
        .map(|k| {
            let x = spec.node_x(k);
            (0.25 - x[0] * x[0] - x[1] * x[1]).max(0.0)
        })
        .collect();
    let sol = solve(&EvolutionProblem::new(spec.clone(), p3(2), init).unwrap()).unwrap();
    let masses: Vec<f64> = (0..spec.nt).map(|l| sol.level(l).iter().sum::<f64>()).collect();
    assert!(masses.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{masses:?}");
    assert!(sol.values().iter().all(|&v| v >= -1e-10));
}

#[test]
fn regularisation_consistency() {
    let diff = |a: &GridField, b: &GridField| a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let g = Arc::new(shoot_giant_1d(3.0, 1.0, 513, 1e-13).unwrap());
    let v: Arc<dyn Field> = Arc::new(AnalyticField::separable(g, 0.0).unwrap());
    let spec = GridSpec::uniform(1, -1.0, 1.0, 65, 0.5, 1.0, 33).unwrap();
    let smooth = |d: f64| solve(&EvolutionProblem::from_field(spec.clone(), p3(1), v.clone()).unwrap().with_delta(d)).unwrap();
    let runs: Vec<GridField> = [0.2, 0.1, 0.05, 0.025].iter().map(|&d| smooth(d)).collect();
    let diffs: Vec<f64> = runs.windows(2).map(|w| diff(&w[0], &w[1])).collect();
    assert!(diffs.windows(2).all(|w| w[0] / w[1] >= 1.8), "{diffs:?}");

    let exact = barenblatt(1);
    let spec = GridSpec::uniform(1, -1.5, 1.5, 65, 0.5, 1.0, 33).unwrap();
    let errs: Vec<f64> = [0.1, 0.05, 0.025, 0.0125]
        .iter()
        .map(|&d| {
            let sol = solve(&EvolutionProblem::from_field(spec.clone(), p3(1), exact.clone()).unwrap().with_delta(d)).unwrap();
            final_level_error(&sol, exact.as_ref()).unwrap()
        })
        .collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
}

#[test]
fn wedge_subsolution_is_dominated() {
    let params = p3(2);
    let wedge = Arc::new(AnalyticField::wedge(WedgeSpec {
        params,
        k: 1.5,
        x0: 0.0,
        t0: 0.0,
        sigma: 0.0,
        variant: WedgeVariant::Product,
    }));
    let w = wedge.clone();
    let data = Arc::new(AnalyticField::custom(params, "wedge+", None, move |pt| w.try_eval(pt).unwrap_or(0.0) + 0.01));
    let spec = GridSpec::uniform(2, 0.0, 1.0, 17, 0.5, 1.0, 17).unwrap();
    let sol = solve(&EvolutionProblem::from_field(spec.clone(), params, data.clone()).unwrap()).unwrap();
    let w = wedge.clone();
    let sampled = sample_to_grid(&AnalyticField::custom(params, "wedge", None, move |pt| w.try_eval(pt).unwrap_or(0.0)), &spec, 1e12).unwrap();
    let r = compare(&sampled, &sol, 1e-9).unwrap();
    assert!(r.pass, "{r:?}");
}

#[test]
fn minorant_examples() {
    let g = Arc::new(shoot_giant_1d(3.0, 1.0, 129, 1e-12).unwrap());
    let samples = MinorantSamples::geometric(1e-3, 1.0, 12);
    let v = AnalyticField::separable(g.clone(), 0.2).unwrap();
    let r = verify_minorant(&v, &g, 0.2, 1e-12, &samples).unwrap();
    assert!(r.pass && r.worst_margin.abs() < 1e-9, "{r:?}");

    let e = AnalyticField::exp_blowup(g.clone(), 0.2, 1).unwrap();
    assert!(verify_minorant(&e, &g, 0.2, 0.0, &samples).unwrap().pass);

    let two = AnalyticField::superpose_separable(g.clone(), &[0.0, 0.5]).unwrap();
    for tj in [0.0, 0.5] {
        assert!(verify_minorant(&two, &g, tj, 0.0, &MinorantSamples::geometric(1e-4, 0.4, 8)).unwrap().pass);
    }

    let half = AnalyticField::custom(p3(1), "half", None, {
        let v = v.clone();
        move |pt| 0.5 * v.eval(pt)
    });
    assert!(!verify_minorant(&half, &g, 0.2, 1e-6, &samples).unwrap().pass);
    assert!(verify_minorant(&v, &g, 0.2, 0.0, &MinorantSamples { offsets: vec![-1.0], stride: 1 }).is_err());
}

#[test]
fn hyperplane_demo_examples() {
    let ks = [1.0, 10.0, 100.0, 1000.0];
    let none = hyperplane_demo(&p3(1), &[0.0], &ks, 0.5, 10.0).unwrap();
    assert!(!none.applicable && none.conclusion.starts_with("no contradiction"));

    let one = hyperplane_demo(&p3(1), &[1.0], &ks, 0.5, 10.0).unwrap();
    assert!(one.applicable);
    for (k, w) in ks.iter().zip(&one.wedge_values) {
        assert!((w / k - one.wedge_values[0]).abs() < 1e-12 * w);
    }
    assert_eq!(one.exceeds_at, Some(100.0));

    let two = hyperplane_demo(&p3(2), &[1.0, 0.5], &ks, 0.5, 1.0).unwrap();
    assert!(two.applicable && two.exceeds_at.is_some());
    assert!(two.wedge_values.windows(2).all(|w| (w[1] / w[0] - 10.0).abs() < 1e-9));
    assert!(hyperplane_demo(&p3(1), &[1.0, 2.0], &ks, 0.5, 1.0).is_err());
}

#[test]
fn invalid_problems_are_rejected() {
    let spec = GridSpec::uniform(1, -1.0, 1.0, 9, 0.0, 1.0, 3).unwrap();
    assert!(EvolutionProblem::new(spec.clone(), p3(1), vec![0.0; 8]).is_err());
    let mut bad = vec![0.0; 9];
    bad[4] = f64::NAN;
    assert!(EvolutionProblem::new(spec.clone(), p3(1), bad).is_err());
    assert!(EvolutionProblem::new(spec.clone(), p3(2), vec![0.0; 9]).is_err());
    let three = GridSpec::uniform(3, -1.0, 1.0, 3, 0.0, 1.0, 3).unwrap();
    assert!(matches!(
        EvolutionProblem::new(three, MediumParams::new(3.0, 3).unwrap(), vec![0.0; 27]),
        Err(Error::UnsupportedDimension(3))
    ));
}
