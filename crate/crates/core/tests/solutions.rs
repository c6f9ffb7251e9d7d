use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slowdiff::giant::shoot_giant_1d;
use slowdiff::residual::pde_residual;
use slowdiff::solutions::*;
use slowdiff::*;

fn pt(x: &[f64], t: f64) -> SpaceTimePoint {
    SpaceTimePoint::new(x, t)
}

/// Closed form written out independently of the library.
fn barenblatt_oracle(p: f64, n: usize, c: f64, x: &[f64], t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let lam = n as f64 * (p - 2.0) + p;
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let bracket = c - (p - 2.0) / p * lam.powf(1.0 / (1.0 - p)) * (r / t.powf(1.0 / lam)).powf(p / (p - 1.0));
    t.powf(-(n as f64) / lam) * bracket.max(0.0).powf((p - 1.0) / (p - 2.0))
}

#[test]
fn barenblatt_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (p, n) in [(3.0, 1), (3.0, 2), (4.0, 2), (2.5, 3)] {
        let params = MediumParams::new(p, n).unwrap();
        let spec = BarenblattSpec::new(params);
        for _ in 0..200 {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let t = rng.gen_range(-0.5..2.0);
            let got = barenblatt_eval(&spec, &pt(&x, t));
            let want = barenblatt_oracle(p, n, spec.c, &x, t);
            assert!((got - want).abs() <= 1e-12 * want.max(1.0), "p={p} n={n} x={x:?} t={t}: {got} vs {want}");
        }
    }
}

#[test]
fn barenblatt_lower_semicontinuous_origin_and_past() {
    let params = MediumParams::new(3.0, 2).unwrap();
    let spec = BarenblattSpec::new(params);
    assert_eq!(barenblatt_eval(&spec, &pt(&[0.0, 0.0], 0.0)), 0.0);
    assert_eq!(barenblatt_eval(&spec, &pt(&[0.3, -0.1], -2.0)), 0.0);
    let near = barenblatt_eval(&spec, &pt(&[0.0, 0.0], 1e-20));
    assert!(near > 1e5);
}

#[test]
fn barenblatt_support_radius_formula() {
    for (p, n) in [(3.0, 1), (3.0, 2), (4.0, 2)] {
        let params = MediumParams::new(p, n).unwrap();
        let spec = BarenblattSpec::new(params).with_c(0.37).unwrap();
        let lam = params.lambda();
        for t in [0.1f64, 1.0, 3.0] {
            let r = t.powf(1.0 / lam) * (spec.c * p * lam.powf(1.0 / (p - 1.0)) / (p - 2.0)).powf((p - 1.0) / p);
            assert!((spec.support_radius(t) - r).abs() < 1e-12 * r);
            let mut x = vec![0.0; n];
            x[0] = r * (1.0 + 1e-9);
            assert_eq!(barenblatt_eval(&spec, &pt(&x, t)), 0.0);
            x[0] = r * (1.0 - 1e-3);
            assert!(barenblatt_eval(&spec, &pt(&x, t)) > 0.0);
        }
    }
    let unit = BarenblattSpec::new(MediumParams::new(3.0, 2).unwrap());
    assert!((unit.support_radius(1.0) - 1.0).abs() < 1e-12);
}

#[test]
fn barenblatt_self_similarity() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (p, n) in [(3.0, 1), (3.0, 2), (4.0, 2)] {
        let params = MediumParams::new(p, n).unwrap();
        let spec = BarenblattSpec::new(params);
        let lam = params.lambda();
        for kappa in [2.0f64, 0.5] {
            for _ in 0..50 {
                let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.8..0.8)).collect();
                let t = rng.gen_range(0.05..1.5);
                let kx: Vec<f64> = x.iter().map(|v| kappa * v).collect();
                let lhs = barenblatt_eval(&spec, &pt(&x, t));
                let rhs = kappa.powi(n as i32) * barenblatt_eval(&spec, &pt(&kx, kappa.powf(lam) * t));
                assert!((lhs - rhs).abs() <= 1e-12 * lhs.max(1e-300), "{lhs} vs {rhs}");
            }
        }
    }
}

#[test]
fn heat_kernel_examples() {
    assert_eq!(heat_kernel_eval(2, &pt(&[0.0, 0.0], 0.0)), 0.0);
    for n in 1..=3 {
        let t = 0.01;
        let want = (4.0 * std::f64::consts::PI * t).powf(-(n as f64) / 2.0);
        assert!((heat_kernel_eval(n, &pt(&vec![0.0; n], t)) - want).abs() < 1e-12 * want);
    }
    assert!(heat_kernel_eval(1, &pt(&[0.0], 1e-10)) > 1e4);
    // Mass over the ball of radius 10 sqrt(t) in 2D by polar midpoint rule.
    let t: f64 = 0.3;
    let rmax = 10.0 * t.sqrt();
    let m = 4000;
    let dr = rmax / m as f64;
    let mass: f64 = (0..m)
        .map(|i| {
            let r = (i as f64 + 0.5) * dr;
            2.0 * std::f64::consts::PI * r * heat_kernel_eval(2, &pt(&[r, 0.0], t)) * dr
        })
        .sum();
    assert!((mass - 1.0).abs() < 1e-6, "{mass}");
}

fn giant_1d(p: f64) -> Arc<GiantSolution> {
    Arc::new(shoot_giant_1d(p, 1.0, 257, 1e-12).unwrap())
}

#[test]
fn separable_examples() {
    let g = giant_1d(3.0);
    let t0 = 0.25;
    let v = AnalyticField::separable(g.clone(), t0).unwrap();
    for x in [-0.7, 0.0, 0.3] {
        assert_eq!(v.eval(&pt(&[x], t0)), 0.0);
        assert_eq!(v.eval(&pt(&[x], t0 - 1.0)), 0.0);
        assert!((v.eval(&pt(&[x], t0 + 1.0)) - g.eval(&[x]).unwrap()).abs() < 1e-14);
    }
    assert!(v.try_eval(&pt(&[1.5], 1.0)).is_err());
    // Stencils aligned with a fine giant grid so interpolation kinks do not pollute differences.
    let fine = Arc::new(shoot_giant_1d(3.0, 1.0, 2049, 1e-13).unwrap());
    let v = AnalyticField::separable(fine, t0).unwrap();
    let params = MediumParams::new(3.0, 1).unwrap();
    for x in [-0.5, 0.125, 0.375] {
        let mut prev = f64::INFINITY;
        for k in 0..3 {
            let h = 32.0 / 1024.0 / 2f64.powi(k);
            let r = pde_residual(&v, &params, &pt(&[x], t0 + 0.5), h, h * h).unwrap().abs();
            assert!(r < prev, "x={x}: {r} vs {prev}");
            prev = r;
        }
        assert!(prev < 5e-3, "{prev}");
    }
}

#[test]
fn exp_blowup_outgrows_separable() {
    let g = giant_1d(3.0);
    let e = AnalyticField::exp_blowup(g.clone(), 0.0, 1).unwrap();
    let v = AnalyticField::separable(g, 0.0).unwrap();
    assert_eq!(e.eval(&pt(&[0.2], 0.0)), 0.0);
    assert_eq!(e.eval(&pt(&[0.2], -0.3)), 0.0);
    let mut prev = 0.0;
    for m in 1..9 {
        let s = 0.5f64.powi(m);
        let ratio = e.eval(&pt(&[0.2], s)) / v.eval(&pt(&[0.2], s));
        assert!(ratio > prev, "m={m}: {ratio}");
        prev = ratio;
    }
    assert!(prev > 1e50);
    assert_eq!(e.infinity_slices, vec![0.0]);
    assert_eq!(e.eval(&pt(&[0.2], 1e-5)), f64::INFINITY);
}

#[test]
fn dibenedetto_examples() {
    for (p, n) in [(3.0, 1), (4.0, 2)] {
        let params = MediumParams::new(p, n).unwrap();
        let spec = DiBenedettoSpec::new(params, 0.8, 2.0).unwrap();
        let at0 = dibenedetto_eval(&spec, &pt(&vec![0.0; n], 0.0)).unwrap();
        assert!((at0 - 0.8f64.powf((p - 1.0) / (p - 2.0))).abs() < 1e-14);
        let mut x = vec![0.0; n];
        x[0] = 0.4;
        let mut prev = 0.0;
        for i in 0..40 {
            let t = 2.0 * i as f64 / 40.0;
            let v = dibenedetto_eval(&spec, &pt(&x, t)).unwrap();
            assert!(v > prev);
            prev = v;
        }
        assert!(dibenedetto_eval(&spec, &pt(&x, 2.0)).is_err());
        let f = AnalyticField::dibenedetto(spec);
        let mut prev = f64::INFINITY;
        for k in 0..3 {
            let h = 0.02 / 2f64.powi(k);
            let r = pde_residual(&f, &params, &pt(&x, 1.0), h, h * h).unwrap().abs();
            assert!(r < prev);
            prev = r;
        }
        assert!(prev < 1e-2, "{prev}");
    }
    assert!(DiBenedettoSpec::new(MediumParams::new(3.0, 1).unwrap(), 0.0, 1.0).is_err());
}

#[test]
fn glued_blowup_branches() {
    let g = giant_1d(3.0);
    let params = MediumParams::new(3.0, 1).unwrap();
    let d = DiBenedettoSpec::new(params, 1.0, 0.5).unwrap();
    let glued = AnalyticField::glue_blowup(d.clone(), g.clone()).unwrap();
    let x = [0.3];
    assert_eq!(glued.eval(&pt(&x, 0.2)), dibenedetto_eval(&d, &pt(&x, 0.2)).unwrap());
    assert!((glued.eval(&pt(&x, 1.5)) - g.eval(&x).unwrap()).abs() < 1e-14);
    assert_eq!(glued.eval(&pt(&[1.0], 0.5)), 0.0);
    assert_eq!(glued.eval(&pt(&x, 0.5)), f64::INFINITY);
    assert!(glued.eval(&pt(&x, 0.5 - 1e-9)) > 1e3);
    assert_eq!(glued.infinity_slices, vec![0.5]);
}

#[test]
fn superposition_examples() {
    let g = giant_1d(3.0);
    let one = AnalyticField::superpose_separable(g.clone(), &[0.1]).unwrap();
    let v = AnalyticField::separable(g.clone(), 0.1).unwrap();
    for (x, t) in [(0.0, 0.5), (0.4, 0.2), (-0.9, 3.0), (0.2, 0.05)] {
        assert_eq!(one.eval(&pt(&[x], t)), v.eval(&pt(&[x], t)));
    }
    let two = AnalyticField::superpose_separable(g.clone(), &[0.5, 0.2]).unwrap();
    assert_eq!(two.eval(&pt(&[0.3], 0.1)), 0.0);
    assert_eq!(two.infinity_slices, vec![0.2, 0.5]);
    let too_many: Vec<f64> = (0..20_000).map(|i| i as f64).collect();
    assert!(AnalyticField::superpose_separable(g, &too_many).is_err());
}

#[test]
fn stationary_and_dense_poles() {
    let params = MediumParams::new(3.0, 4).unwrap();
    let s = AnalyticField::stationary(StationarySpec::new(params, &[0.1, 0.0, 0.0, 0.0], 1.0).unwrap());
    assert_eq!(s.eval(&pt(&[0.1, 0.0, 0.0, 0.0], 0.0)), f64::INFINITY);
    let y = [0.4, 0.2, -0.1, 0.3];
    assert_eq!(s.eval(&pt(&y, 0.0)), s.eval(&pt(&y, 17.0)));
    let r = ((0.3f64).powi(2) + 0.04 + 0.01 + 0.09).sqrt();
    assert!((s.eval(&pt(&y, 0.0)) - r.powf((3.0 - 4.0) / 2.0)).abs() < 1e-12);
    assert!(StationarySpec::new(MediumParams::new(3.0, 2).unwrap(), &[0.0, 0.0], 1.0).is_err());

    let spec = DensePolesSpec::new(params, 64).unwrap();
    let q3 = spec.poles[2].clone();
    let d = AnalyticField::dense_poles(spec.clone());
    assert_eq!(d.eval(&pt(&q3, 0.0)), f64::INFINITY);
    assert_eq!(d.eval(&pt(&y, 0.0)), d.eval(&pt(&y, 5.0)));
    assert!(spec.tail_bound(0.1) > 0.0 && spec.tail_bound(0.1).is_finite());
    let pts = dyadic_points(4, 64);
    assert_eq!(pts.len(), 64);
    assert_eq!(pts, dyadic_points(4, 64));
}

#[test]
fn wedge_examples() {
    let p1 = MediumParams::new(3.0, 1).unwrap();
    let w = |k: f64| WedgeSpec {
        params: p1,
        k,
        x0: 0.5,
        t0: 0.0,
        sigma: 0.1,
        variant: WedgeVariant::OneD,
    };
    assert_eq!(wedge_eval(&w(3.0), &pt(&[0.5], 0.4)).unwrap(), 0.0);
    let a = wedge_eval(&w(1.0), &pt(&[0.8], 0.4)).unwrap();
    let b = wedge_eval(&w(2.0), &pt(&[0.8], 0.4)).unwrap();
    assert!((b - 2.0 * a).abs() < 1e-15);

    let p2 = MediumParams::new(3.0, 2).unwrap();
    let prod = WedgeSpec {
        params: p2,
        k: 2.0,
        x0: 0.0,
        t0: 0.0,
        sigma: 0.0,
        variant: WedgeVariant::Product,
    };
    assert!(wedge_eval(&prod, &pt(&[-0.1, 0.5], 1.0)).is_err());
    let f = AnalyticField::wedge(prod);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let x = [rng.gen_range(0.1..1.0), rng.gen_range(0.1..1.0)];
        let t = rng.gen_range(0.2..2.0);
        let r = pde_residual(&f, &p2, &pt(&x, t), 1e-3, 1e-4).unwrap();
        assert!(r <= 1e-6, "{r}");
    }
}

#[test]
fn past_extension_examples() {
    let params = MediumParams::new(3.0, 2).unwrap();
    let b = AnalyticField::barenblatt(BarenblattSpec::new(params));
    let eb = b.extend_to_past(0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..100 {
        let x = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let t = rng.gen_range(-1.0..1.0);
        assert_eq!(eb.eval(&pt(&x, t)), b.eval(&pt(&x, t)));
    }
    let one = AnalyticField::constant(params, 1.0).extend_to_past(0.0).unwrap();
    assert_eq!(one.eval(&pt(&[0.0, 0.0], -1.0)), 0.0);
    let neg = AnalyticField::custom(params, "neg", None, |q| q.x()[1] - 0.5);
    assert!(neg.extend_to_past(0.0).is_err());
}

#[test]
fn residual_signs_on_random_stencils() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let params = MediumParams::new(3.0, 2).unwrap();
    let b = AnalyticField::barenblatt(BarenblattSpec::new(params));
    for _ in 0..100 {
        let r0 = rng.gen_range(0.1..0.6);
        let th = rng.gen_range(0.0..std::f64::consts::TAU);
        let x = [r0 * th.cos(), r0 * th.sin()];
        let t = rng.gen_range(0.8..1.5);
        let coarse = pde_residual(&b, &params, &pt(&x, t), 0.01, 1e-4).unwrap().abs();
        let fine = pde_residual(&b, &params, &pt(&x, t), 0.005, 2.5e-5).unwrap().abs();
        assert!(fine < 0.01 && fine <= coarse * 1.01, "x={x:?} t={t}: {coarse} -> {fine}");
    }
}
