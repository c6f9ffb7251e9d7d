use proptest::prelude::*;
use slowdiff::field::sample_to_grid;
use slowdiff::quadrature::{diverges, integrate_power};
use slowdiff::residual::pde_residual;
use slowdiff::solutions::BarenblattSpec;
use slowdiff::*;

fn p31() -> MediumParams {
    MediumParams::new(3.0, 1).unwrap()
}

#[test]
fn params_examples() {
    assert_eq!(MediumParams::new(3.0, 2).unwrap().lambda(), 5.0);
    assert_eq!(MediumParams::new(4.0, 3).unwrap().lambda(), 10.0);
    assert!(matches!(MediumParams::new(2.0, 1), Err(Error::NotSlowDiffusion(_))));
    assert!(matches!(MediumParams::new(3.0, 0), Err(Error::UnsupportedDimension(0))));
    let q = MediumParams::new(3.0, 2).unwrap();
    assert_eq!(q.class_b_exponent(), 3.5);
    assert_eq!(q.class_m_exponent(), 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn lambda_is_exact(p in 2.0001f64..12.0, n in 1usize..=3) {
        let params = MediumParams::new(p, n).unwrap();
        prop_assert_eq!(params.lambda() - (n as f64 * (p - 2.0) + p), 0.0);
    }
}

proptest! {
    #[test]
    fn truncation_is_monotone(k in 0.1f64..50.0, dk in 0.0f64..50.0, x in -1.0f64..1.0, y in -1.0f64..1.0, t in -0.2f64..1.0) {
        let b = AnalyticField::barenblatt(BarenblattSpec::new(MediumParams::new(3.0, 2).unwrap()));
        let pt = SpaceTimePoint::new(&[x, y], t);
        prop_assert!(b.truncate(k).eval(&pt) <= b.truncate(k + dk).eval(&pt));
    }
}

#[test]
fn constant_field_integrates_to_volume() {
    let params = MediumParams::new(3.0, 3).unwrap();
    let one = AnalyticField::constant(params, 1.0);
    let cube = Cylinder::boxed(&[0.5; 3], &[0.5; 3], 0.0, 1.0).unwrap();
    for v in integrate_power(&one, &cube, 7.0, 3).unwrap() {
        assert!((v - 1.0).abs() < 1e-12, "{v}");
    }
}

#[test]
fn multilinear_fields_are_integrated_exactly() {
    let params = MediumParams::new(3.0, 2).unwrap();
    let f = AnalyticField::custom(params, "bilinear", None, |pt| (1.0 + pt.x()[0]) * (2.0 - 0.5 * pt.x()[1]) * (1.0 + 3.0 * pt.t));
    let region = Cylinder::boxed(&[0.25, -0.5], &[0.75, 0.5], 0.0, 2.0).unwrap();
    // int_{-0.5}^{1} (1+x) dx * int_{-1}^{0} (2 - y/2) dy * int_0^2 (1+3t) dt
    let exact = 1.875 * 2.25 * 8.0;
    for v in integrate_power(&f, &region, 1.0, 3).unwrap() {
        assert!((v - exact).abs() <= 1e-12 * exact, "{v} vs {exact}");
    }
}

fn inverse_sqrt_time() -> AnalyticField {
    AnalyticField::custom(p31(), "t^-1/2", Some(SingularLocus::Slice { t0: 0.0 }), |pt| {
        if pt.t > 0.0 {
            pt.t.powf(-0.5)
        } else {
            0.0
        }
    })
}

#[test]
fn integrable_time_singularity_converges() {
    let region = Cylinder::boxed(&[0.5], &[0.5], 0.0, 1.0).unwrap();
    let est = integrate_power(&inverse_sqrt_time(), &region, 1.0, 6).unwrap();
    let last = *est.last().unwrap();
    assert!((last - 2.0).abs() < 1e-2, "{est:?}");
    assert!(est.windows(2).all(|w| (w[1] - 2.0).abs() <= (w[0] - 2.0).abs() + 1e-12));
    assert!(!diverges(&est, 1.5));
}

#[test]
fn non_integrable_time_singularity_diverges() {
    let region = Cylinder::boxed(&[0.5], &[0.5], 0.0, 1.0).unwrap();
    let est = integrate_power(&inverse_sqrt_time(), &region, 3.0, 6).unwrap();
    assert!(est.windows(2).all(|w| w[1] > w[0]), "{est:?}");
    assert!(diverges(&est, 1.5));
}

#[test]
fn integrate_power_rejects_bad_input() {
    let region = Cylinder::boxed(&[0.5], &[0.5], 0.0, 1.0).unwrap();
    let one = AnalyticField::constant(p31(), 1.0);
    assert!(integrate_power(&one, &region, 0.0, 3).is_err());
    assert!(integrate_power(&one, &region, 1.0, 1).is_err());
    assert!(Cylinder::boxed(&[0.5], &[0.0], 0.0, 1.0).is_err());
}

#[test]
fn residual_examples() {
    let params = MediumParams::new(3.5, 2).unwrap();
    let affine = AnalyticField::custom(params, "affine", None, |pt| 2.0 * pt.x()[0] + 0.5 * pt.x()[1] - 1.0);
    let r = pde_residual(&affine, &params, &SpaceTimePoint::new(&[0.3, 0.1], 0.2), 0.05, 0.05).unwrap();
    assert!(r.abs() < 1e-12);

    for (p, n) in [(3.0, 1), (3.0, 2), (4.0, 2)] {
        let params = MediumParams::new(p, n).unwrap();
        let b = AnalyticField::barenblatt(BarenblattSpec::new(params));
        let mut x = vec![0.0; n];
        x[0] = -0.25;
        let pt = SpaceTimePoint::new(&x, 1.3);
        let (mut h, mut dt) = (0.05, 0.02);
        let r0 = pde_residual(&b, &params, &pt, h, dt).unwrap().abs();
        h /= 2.0;
        dt /= 4.0;
        let r1 = pde_residual(&b, &params, &pt, h, dt).unwrap().abs();
        h /= 2.0;
        dt /= 4.0;
        let r2 = pde_residual(&b, &params, &pt, h, dt).unwrap().abs();
        assert!(r0 / r1 >= 1.8 && r1 / r2 >= 1.8, "p={p} n={n}: {r0} {r1} {r2}");
    }

    let s = AnalyticField::stationary(
        slowdiff::solutions::StationarySpec::new(MediumParams::new(3.0, 4).unwrap(), &[0.0; 4], 1.0).unwrap(),
    );
    let err = pde_residual(&s, &MediumParams::new(3.0, 4).unwrap(), &SpaceTimePoint::new(&[0.01, 0.0, 0.0, 0.0], 1.0), 0.01, 0.1);
    assert_eq!(err, Err(Error::NonFiniteStencil));
}

#[test]
fn truncation_examples() {
    let params = MediumParams::new(3.0, 2).unwrap();
    let five = AnalyticField::constant(params, 5.0).truncate(3.0);
    assert_eq!(five.eval(&SpaceTimePoint::new(&[0.9, -0.4], 2.0)), 3.0);
    let b = AnalyticField::barenblatt(BarenblattSpec::new(params));
    for t in [-1.0, -1e-9, 0.0] {
        assert_eq!(b.truncate(1e9).eval(&SpaceTimePoint::new(&[0.0, 0.0], t)), 0.0);
    }
    let a = b.truncate(2.0).truncate(7.0);
    let c = b.truncate(2.0);
    for i in 0..50 {
        let pt = SpaceTimePoint::new(&[0.02 * i as f64 - 0.5, 0.01 * i as f64], 0.001 + 0.02 * i as f64);
        assert_eq!(a.eval(&pt), c.eval(&pt));
    }
}

#[test]
fn sampling_and_csv_round_trip() {
    let params = MediumParams::new(3.0, 2).unwrap();
    let b = AnalyticField::barenblatt(BarenblattSpec::new(params));
    let spec = GridSpec::uniform(2, -1.0, 1.0, 9, 0.0, 0.5, 3).unwrap();
    let g = sample_to_grid(&b, &spec, 0.01).unwrap().with_params(params);
    assert!(g.any_flagged());
    assert!(g.level(0).iter().all(|&v| v == 0.0));
    let text = g.to_csv();
    assert!(text.starts_with("# nx=9 ny=9 nt=3"));
    let back = GridField::from_csv(&text).unwrap();
    assert_eq!(back.spec(), g.spec());
    assert_eq!(back.flags(), g.flags());
    for (a, c) in back.values().iter().zip(g.values()) {
        assert!(a == c || (a.is_infinite() && c.is_infinite()), "{a} vs {c}");
    }
    assert_eq!(back.to_csv(), text);
    assert!(GridField::from_csv("# nx=3\n1,2").is_err());
}

#[test]
fn grid_spec_invariants() {
    assert!(GridSpec::uniform(1, 0.0, 1.0, 2, 0.0, 1.0, 3).is_err());
    assert!(GridSpec::uniform(1, 0.0, 1.0, 3, 0.0, 1.0, 1).is_err());
    let s = GridSpec::uniform(2, 0.0, 1.0, 5, 0.0, 1.0, 3).unwrap();
    assert_eq!(s.h(0), 0.25);
    assert_eq!(s.dt(), 0.5);
    assert_eq!(s.spatial_count(), 25);
    assert_eq!(s.len(), 75);
}
