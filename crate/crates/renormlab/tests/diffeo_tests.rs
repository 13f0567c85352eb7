//! Pure maps, grid diffeomorphisms, zooms, and the Koebe distortion check
//! against closed-form values and high-precision reference evaluations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use renormlab::diffeo::{
    koebe_check, zoom_grid, Diffeo, GridDiffeo, Identity, Interval, InverseDiffeo, PureMap,
};

fn close(got: f64, want: f64, tol: f64, what: &str) {
    assert!(
        (got - want).abs() <= tol,
        "{what}: got {got:.17}, want {want:.17}, diff {:.3e} > {tol:.1e}",
        (got - want).abs()
    );
}

/// Pure maps with rational parameters evaluate to exact closed forms.
#[test]
fn pure_map_reference_values() {
    // alpha = 2, s = ln 3 gives r = 2 and mu(x) = ((1 + 2x)^2 - 1) / 8.
    let m = PureMap::new(2.0, 3.0f64.ln()).unwrap();
    close(m.eval(0.5), 0.375, 1e-12, "mu_ln3(1/2)");
    close(m.eval(0.25), 0.15625, 1e-12, "mu_ln3(1/4)");
    close(m.nonlinearity(0.0), 2.0, 1e-12, "N mu_ln3(0)");
    let m = PureMap::new(1.5, -1.3).unwrap();
    close(m.eval(0.4), 0.5106351412775991477889, 1e-12, "mu_-1.3(0.4) a=1.5");
    let m = PureMap::new(3.0, 2.1).unwrap();
    close(m.eval(0.7), 0.5002066099662069839008, 1e-12, "mu_2.1(0.7) a=3");
}

#[test]
fn pure_map_fixes_endpoints_and_orders_by_sign() {
    for s in [-2.0, -0.5, 0.0, 0.5, 2.0] {
        let m = PureMap::new(2.0, s).unwrap();
        close(m.eval(0.0), 0.0, 0.0, "mu(0)");
        close(m.eval(1.0), 1.0, 0.0, "mu(1)");
        let y = m.eval(0.5);
        if s > 0.0 {
            assert!(y < 0.5, "s > 0 should bend below the diagonal, got {y}");
        }
        if s < 0.0 {
            assert!(y > 0.5, "s < 0 should bend above the diagonal, got {y}");
        }
    }
}

#[test]
fn pure_map_identity_and_small_s_branch() {
    let id = PureMap::<f64>::identity(2.0).unwrap();
    assert_eq!(id.s(), 0.0);
    for k in 0..=20 {
        let x = k as f64 / 20.0;
        assert_eq!(id.eval(x), x, "identity must be exact");
    }
    // Below the small-s threshold the map is the first-order expansion.
    let s = 1e-10;
    let m = PureMap::new(2.0, s).unwrap();
    for k in 1..20 {
        let x = k as f64 / 20.0;
        close(m.eval(x), x + s * x * (x - 1.0) / 2.0, 1e-18, "small-s eval");
    }
    // Crossing the threshold is continuous in s.
    let lo = PureMap::new(2.0, 0.999e-9).unwrap();
    let hi = PureMap::new(2.0, 1.001e-9).unwrap();
    for k in 0..=40 {
        let x = k as f64 / 40.0;
        close(lo.eval(x), hi.eval(x), 1e-11, "threshold continuity");
    }
}

#[test]
fn pure_map_rejects_bad_parameters_and_arguments() {
    assert!(PureMap::<f64>::new(1.0, 0.5).is_err(), "alpha must exceed 1");
    assert!(PureMap::<f64>::new(0.7, 0.5).is_err(), "alpha must exceed 1");
    let m = PureMap::new(2.0, 0.5).unwrap();
    assert!(m.eval_checked(-0.1).is_err());
    assert!(m.eval_checked(1.1).is_err());
    assert!(m.inverse_checked(1.0 + 1e-6).is_err());
    assert!(m.eval_checked(0.3).is_ok());
}

#[test]
fn pure_map_inverse_round_trip_seeded() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..200 {
        let alpha = rng.gen_range(1.1..4.0);
        let s = rng.gen_range(-3.0..3.0);
        let x = rng.gen_range(0.0..1.0);
        let m = PureMap::new(alpha, s).unwrap();
        let y = m.eval(x);
        close(m.inverse(y), x, 1e-12, &format!("inverse at alpha={alpha}, s={s}"));
    }
}

#[test]
fn pure_map_nonlinearity_sup_dominates_samples() {
    for (alpha, s) in [(2.0, 1.7), (1.5, -2.2), (3.2, 0.4)] {
        let m = PureMap::new(alpha, s).unwrap();
        let sup = m.nonlinearity_sup();
        for k in 0..=64 {
            let x = k as f64 / 64.0;
            assert!(
                m.nonlinearity(x).abs() <= sup + 1e-14,
                "|N mu({x})| exceeds its sup for alpha={alpha}, s={s}"
            );
        }
    }
}

/// Zooming a pure map is the affinely renormalized restriction, pointwise.
#[test]
fn pure_zoom_matches_pointwise_definition() {
    let d = PureMap::new(2.5, 0.7).unwrap();
    let i = Interval::new(0.2, 0.55).unwrap();
    let z = d.zoom(i);
    let lo = d.eval(i.lo());
    let len = d.eval(i.hi()) - lo;
    for k in 0..=64 {
        let t = k as f64 / 64.0;
        let direct = (d.eval(i.from_unit(t)) - lo) / len;
        close(z.eval(t), direct, 1e-13, "zoom pointwise");
    }
}

/// Zooming twice equals zooming once by the transported interval.
#[test]
fn pure_zoom_composes() {
    let d = PureMap::new(2.0, -1.3).unwrap();
    let i = Interval::new(0.1, 0.8).unwrap();
    let j = Interval::new(0.25, 0.6).unwrap();
    let k = Interval::new(i.from_unit(j.lo()), i.from_unit(j.hi())).unwrap();
    let twice = d.zoom(i).zoom(j);
    let once = d.zoom(k);
    close(twice.s(), once.s(), 1e-13, "zoom signature");
    for m in 0..=32 {
        let t = m as f64 / 32.0;
        close(twice.eval(t), once.eval(t), 1e-13, "zoom composition");
    }
}

#[test]
fn identity_diffeo_is_flat() {
    let id = Identity;
    for x in [0.0, 0.3, 1.0] {
        assert_eq!(Diffeo::<f64>::eval(&id, x), x);
        assert_eq!(Diffeo::<f64>::inverse(&id, x), x);
        assert_eq!(Diffeo::<f64>::nonlinearity(&id, x), 0.0);
        assert_eq!(Diffeo::<f64>::schwarzian(&id, x), 0.0);
    }
    assert_eq!(id.distortion_on(Interval::new(0.2f64, 0.9).unwrap()), 0.0);
}

#[test]
fn inverse_diffeo_inverts_and_flips_signs() {
    let m = PureMap::new(2.0, 1.4).unwrap();
    let inv = InverseDiffeo::new(m);
    for k in 1..16 {
        let x = k as f64 / 16.0;
        close(inv.eval(m.eval(x)), x, 1e-12, "inverse eval");
        close(inv.deriv(m.eval(x)) * m.deriv(x), 1.0, 1e-10, "derivative product");
        // s > 0 makes the map convex; inversion flips nonlinearity and
        // Schwarzian signs.
        assert!(m.nonlinearity(x) > 0.0 && inv.nonlinearity(x) < 0.0);
        assert!(m.schwarzian(x) < 0.0 && inv.schwarzian(x) > 0.0);
    }
}

/// The grid diffeomorphism with nonlinearity `sin(3x)` matches
/// high-precision reference evaluations of the same ODE solution.
#[test]
fn grid_from_nl_fn_reference_values() {
    let g: GridDiffeo<f64> = GridDiffeo::from_nl_fn_default(|x: f64| (3.0 * x).sin()).unwrap();
    close(g.eval(0.25), 0.1827714956087969802671, 1e-11, "g(0.25)");
    close(g.eval(0.6), 0.4997933906337020206217, 1e-11, "g(0.6)");
    close(g.eval(0.9), 0.8640026282865055648293, 1e-11, "g(0.9)");
    close(g.eval(0.0), 0.0, 0.0, "g(0)");
    close(g.eval(1.0), 1.0, 0.0, "g(1)");
}

/// Building a grid from a nonlinearity and reading it back is the identity
/// on the nonlinearity, uniformly.
#[test]
fn grid_nonlinearity_round_trip() {
    let g: GridDiffeo<f64> = GridDiffeo::from_nl_fn_default(|x: f64| (3.0 * x).sin()).unwrap();
    let mut sup = 0.0f64;
    for k in 0..=2000 {
        let x = k as f64 / 2000.0;
        sup = sup.max((g.nonlinearity(x) - (3.0 * x).sin()).abs());
    }
    assert!(sup <= 1e-8, "nonlinearity round trip sup {sup:.3e} > 1e-8");
}

#[test]
fn grid_inverse_round_trip_seeded() {
    let g: GridDiffeo<f64> = GridDiffeo::from_nl_fn_default(|x: f64| (3.0 * x).sin()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..300 {
        let x = rng.gen_range(0.0..1.0);
        close(g.inverse(g.eval(x)), x, 1e-11, "grid inverse round trip");
    }
    close(g.inverse(g.eval(0.0)), 0.0, 1e-12, "grid inverse at 0");
    close(g.inverse(g.eval(1.0)), 1.0, 1e-12, "grid inverse at 1");
}

#[test]
fn grid_resolution_must_be_dyadic() {
    assert!(GridDiffeo::<f64>::from_nl_fn(2, |_| 0.0).is_err());
    assert!(GridDiffeo::<f64>::from_nl_fn(100, |_| 0.0).is_err());
    assert!(GridDiffeo::<f64>::from_nl_fn(5, |_| 0.0).is_ok());
    let g = GridDiffeo::<f64>::from_nl_fn(129, |_| 0.1).unwrap();
    assert_eq!(g.resolution(), 129);
    assert_eq!(g.nl_samples().len(), 129);
}

/// Sampling a pure map onto a grid reproduces it pointwise.
#[test]
fn grid_from_diffeo_matches_source() {
    let m = PureMap::new(2.0, 1.1).unwrap();
    let g = GridDiffeo::from_diffeo(1025, &m).unwrap();
    for k in 0..=100 {
        let x = k as f64 / 100.0;
        close(g.eval(x), m.eval(x), 1e-11, "grid vs pure eval");
        close(g.deriv(x), m.deriv(x), 1e-9, "grid vs pure deriv");
    }
}

#[test]
fn zoom_grid_matches_pure_zoom() {
    let m = PureMap::new(2.0, -0.9).unwrap();
    let i = Interval::new(0.15, 0.7).unwrap();
    let zg = zoom_grid(&m, i, 1025).unwrap();
    let zp = m.zoom(i);
    for k in 0..=100 {
        let t = k as f64 / 100.0;
        close(zg.eval(t), zp.eval(t), 1e-10, "zoom_grid vs pure zoom");
    }
    assert!(zoom_grid(&m, Interval::new(-0.1, 0.5).unwrap(), 1025).is_err());
}

/// The Schwarzian accessor agrees with `S = N' - N^2 / 2` computed by
/// finite differences of the nonlinearity.
#[test]
fn schwarzian_matches_nonlinearity_derivative() {
    let m = PureMap::new(2.5, 1.3).unwrap();
    let g: GridDiffeo<f64> = GridDiffeo::from_nl_fn_default(|x: f64| (3.0 * x).sin()).unwrap();
    let h = 1e-5;
    for k in 2..=30 {
        let x = k as f64 / 32.0;
        let fd = |d: &dyn Fn(f64) -> f64| (d(x + h) - d(x - h)) / (2.0 * h);
        let sm = fd(&|t| m.nonlinearity(t)) - m.nonlinearity(x).powi(2) / 2.0;
        close(m.schwarzian(x), sm, 1e-5, "pure schwarzian");
        let sg = fd(&|t| g.nonlinearity(t)) - g.nonlinearity(x).powi(2) / 2.0;
        close(g.schwarzian(x), sg, 1e-4, "grid schwarzian");
    }
}

#[test]
fn distortion_on_matches_derivative_ratio() {
    let m: PureMap<f64> = PureMap::new(2.0, 1.6).unwrap();
    let i = Interval::new(0.2, 0.75).unwrap();
    // Pure maps have monotone derivative, so the ratio is extremal at the ends.
    let exact = (m.deriv(i.lo()) / m.deriv(i.hi())).ln().abs();
    close(m.distortion_on(i), exact, 1e-12, "pure distortion");
    let g = GridDiffeo::from_diffeo(1025, &m).unwrap();
    close(g.distortion_on(i), exact, 1e-6, "grid distortion");
}

/// Nonnegative Schwarzian yields the distortion bound; a pure map with
/// negative Schwarzian is flagged.
#[test]
fn koebe_check_separates_schwarzian_signs() {
    let inner = Interval::new(0.4, 0.6).unwrap();
    let outer = Interval::new(0.2, 0.8).unwrap();
    let m = PureMap::new(2.0, 1.5).unwrap();
    let inv = InverseDiffeo::new(m);
    let good = koebe_check(&inv, inner, outer).unwrap();
    assert!(good.schwarzian_nonneg, "inverse pure maps have S >= 0");
    assert!(good.min_schwarzian >= 0.0);
    assert!(good.bound_holds, "Koebe bound must hold when S >= 0");
    assert!(good.max_ratio > 0.0 && good.max_ratio <= 1.0 + 1e-9);
    let bad = koebe_check(&m, inner, outer).unwrap();
    assert!(!bad.schwarzian_nonneg, "pure maps have S < 0");
    assert!(bad.min_schwarzian < 0.0);
    assert!(koebe_check(&m, outer, inner).is_err(), "inner must sit inside outer");
}

#[test]
fn interval_basics() {
    assert!(Interval::new(0.5f64, 0.5).is_err());
    assert!(Interval::new(0.7f64, 0.2).is_err());
    let i = Interval::new(0.25f64, 0.75).unwrap();
    assert_eq!(i.len(), 0.5);
    assert_eq!(i.mid(), 0.5);
    assert!(i.contains(0.25) && i.contains(0.75) && !i.contains(0.76));
    let j = Interval::new(0.7f64, 0.9).unwrap();
    assert!(i.overlaps(&j) && !i.contains_interval(&j));
    assert!(Interval::unit().contains_interval(&i));
    close(i.from_unit(i.to_unit(0.4)), 0.4, 1e-15, "unit coordinates");
    let k = i.map_increasing(|x| x * x).unwrap();
    assert_eq!((k.lo(), k.hi()), (0.0625, 0.5625));
}

mod props {
    use proptest::prelude::*;
    use renormlab::diffeo::{Diffeo, Interval, PureMap};

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        /// Pure maps are increasing bijections of the unit interval.
        #[test]
        fn prop_pure_map_monotone_bijection(
            alpha in 1.05f64..4.0,
            s in -3.0f64..3.0,
            x in 0.001f64..0.999,
            y in 0.001f64..0.999,
        ) {
            let m = PureMap::new(alpha, s).unwrap();
            prop_assert!(m.deriv(x) > 0.0);
            let (a, b) = (x.min(y), x.max(y));
            if b - a > 1e-9 {
                prop_assert!(m.eval(a) < m.eval(b));
            }
            prop_assert!((m.inverse(m.eval(x)) - x).abs() < 1e-10);
        }

        /// Zoom signatures transform by the additive cocycle rule.
        #[test]
        fn prop_pure_zoom_cocycle(
            s in -2.0f64..2.0,
            lo in 0.05f64..0.4,
            hi in 0.6f64..0.95,
            t in 0.1f64..0.9,
        ) {
            let m = PureMap::new(2.0, s).unwrap();
            let i = Interval::new(lo, hi).unwrap();
            let j = Interval::new(0.2, 0.7).unwrap();
            let k = Interval::new(i.from_unit(j.lo()), i.from_unit(j.hi())).unwrap();
            let twice = m.zoom(i).zoom(j);
            let once = m.zoom(k);
            prop_assert!((twice.s() - once.s()).abs() < 1e-12);
            prop_assert!((twice.eval(t) - once.eval(t)).abs() < 1e-12);
        }
    }
}
