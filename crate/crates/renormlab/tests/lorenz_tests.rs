//! Lorenz maps: branch arithmetic, critical values, orbits, serialization,
//! and the generic-scalar interface.

use renormlab::decomp::Decomposition;
use renormlab::diffeo::Diffeo;
use renormlab::lorenz::{Branch, LorenzMap, MapSpec};
use renormlab::Error;

fn close(got: f64, want: f64, tol: f64, what: &str) {
    assert!(
        (got - want).abs() <= tol,
        "{what}: got {got:.17}, want {want:.17}, diff {:.3e} > {tol:.1e}",
        (got - want).abs()
    );
}

fn map_a() -> LorenzMap<f64> {
    LorenzMap::standard(2.0, 0.86, 0.955, 0.5).unwrap()
}

fn map_b() -> LorenzMap<f64> {
    LorenzMap::new(
        2.0,
        0.8936666666666666,
        0.935,
        0.55,
        Decomposition::from_signatures(2.0, &[0.3]).unwrap(),
        Decomposition::from_signatures(2.0, &[-0.2]).unwrap(),
    )
    .unwrap()
}

#[test]
fn constructor_validates_parameters() {
    assert!(LorenzMap::<f64>::standard(1.0, 0.8, 0.9, 0.5).is_err(), "alpha must exceed 1");
    assert!(LorenzMap::<f64>::standard(2.0, 0.0, 0.9, 0.5).is_err(), "u must be positive");
    assert!(LorenzMap::<f64>::standard(2.0, 1.1, 0.9, 0.5).is_err(), "u must not exceed 1");
    assert!(LorenzMap::<f64>::standard(2.0, 0.8, 0.9, 0.0).is_err(), "c must be interior");
    assert!(LorenzMap::<f64>::standard(2.0, 0.8, 0.9, 1.0).is_err(), "c must be interior");
    let mismatched = LorenzMap::new(
        2.0,
        0.8,
        0.9,
        0.5,
        Decomposition::from_signatures(3.0, &[0.1]).unwrap(),
        Decomposition::<f64>::identity(2.0).unwrap(),
    );
    assert!(mismatched.is_err(), "factor exponents must match the map");
}

#[test]
fn accessors_and_critical_values() {
    let f = map_a();
    assert_eq!((f.alpha(), f.u(), f.v(), f.c()), (2.0, 0.86, 0.955, 0.5));
    close(f.eps(), 0.5, 1e-15, "eps = 1 - c");
    close(f.lcv(), 0.86, 1e-15, "lcv = phi(u) with identity phi");
    close(f.rcv(), 1.0 - 0.955, 1e-15, "rcv = psi(1 - v) with identity psi");
    let g = map_b();
    close(g.lcv(), g.phi().compose().eval(g.u()), 1e-15, "lcv = phi(u)");
    close(g.rcv(), g.psi().compose().eval(1.0 - g.v()), 1e-15, "rcv = psi(1 - v)");
    assert!(f.nontrivial() && g.nontrivial());
    let flat = LorenzMap::<f64>::standard(2.0, 0.4, 0.955, 0.5).unwrap();
    assert!(!flat.nontrivial(), "lcv below c cannot be nontrivial");
}

/// The branch monomials match their closed forms for exponent 2.
#[test]
fn branch_monomials_closed_form() {
    let f = map_a();
    let (u, v, c) = (f.u(), f.v(), f.c());
    for k in 0..=20 {
        let x = 0.001 + 0.998 * k as f64 / 20.0;
        if x < c {
            let t = (c - x) / c;
            close(f.q0(x), u * (1.0 - t * t), 1e-15, "Q0 closed form");
            close(f.q0_deriv(x), 2.0 * u * t / c, 1e-12, "DQ0 closed form");
        } else if x > c {
            let t = (x - c) / (1.0 - c);
            close(f.q1(x), 1.0 + v * (t * t - 1.0), 1e-15, "Q1 closed form");
            close(f.q1_deriv(x), 2.0 * v * t / (1.0 - c), 1e-12, "DQ1 closed form");
        }
    }
    close(f.q0(0.0), 0.0, 0.0, "Q0(0)");
    close(f.q0_inv(f.q0(0.3)), 0.3, 1e-13, "Q0 inverse round trip");
    close(f.q1_inv(f.q1(0.8)), 0.8, 1e-13, "Q1 inverse round trip");
}

#[test]
fn branch_selection_and_continuity() {
    let f = map_b();
    let c = f.c();
    assert_eq!(f.branch_of(c - 0.1).unwrap(), Branch::Left);
    assert_eq!(f.branch_of(c + 0.1).unwrap(), Branch::Right);
    assert!(matches!(f.branch_of(c), Err(Error::CriticalPoint)));
    close(f.branch_eval(Branch::Left, c), f.lcv(), 1e-15, "left limit at c");
    close(f.branch_eval(Branch::Right, c), f.rcv(), 1e-15, "right limit at c");
    close(f.branch_eval(Branch::Left, 0.0), 0.0, 0.0, "f(0) = 0");
    close(f.branch_eval(Branch::Right, 1.0), 1.0, 1e-15, "f(1) = 1");
}

#[test]
fn eval_checks_domain() {
    let f = map_a();
    assert!(f.eval(-0.01).is_err());
    assert!(f.eval(1.01).is_err());
    assert!(f.eval(f.c()).is_err(), "the critical point has two values");
    close(f.eval(0.2).unwrap(), f.branch_eval(Branch::Left, 0.2), 0.0, "left eval");
    close(f.eval(0.8).unwrap(), f.branch_eval(Branch::Right, 0.8), 0.0, "right eval");
}

#[test]
fn derivative_matches_finite_differences() {
    let f = map_b();
    let h = 1e-7;
    for x in [0.1, 0.3, 0.45, 0.6, 0.8, 0.95] {
        let fd = (f.eval(x + h).unwrap() - f.eval(x - h).unwrap()) / (2.0 * h);
        close(f.deriv(x).unwrap(), fd, 1e-5, "deriv vs FD");
        let b = f.branch_of(x).unwrap();
        close(f.branch_deriv(b, x), f.deriv(x).unwrap(), 0.0, "branch deriv agreement");
    }
}

#[test]
fn inverse_branch_round_trips_and_rejects() {
    let f = map_b();
    for x in [0.05, 0.2, 0.4, 0.54] {
        let y = f.branch_eval(Branch::Left, x);
        close(f.inverse_branch(Branch::Left, y).unwrap(), x, 1e-12, "left inverse");
    }
    for x in [0.56, 0.7, 0.9, 0.99] {
        let y = f.branch_eval(Branch::Right, x);
        close(f.inverse_branch(Branch::Right, y).unwrap(), x, 1e-12, "right inverse");
    }
    // The left branch maps onto [0, lcv], the right onto [rcv, 1].
    assert!(f.inverse_branch(Branch::Left, f.lcv() + 1e-6).is_err());
    assert!(f.inverse_branch(Branch::Right, f.rcv() - 1e-6).is_err());
}

#[test]
fn orbits_record_words_and_detect_critical_hits() {
    let f = map_a();
    let orbit = f.orbit(0.2, 6).unwrap();
    assert_eq!(orbit.points.len(), 7);
    assert_eq!(orbit.word.len(), 6);
    for (k, &s) in orbit.word.iter().enumerate() {
        let b = f.branch_of(orbit.points[k]).unwrap();
        assert_eq!(s, b.symbol(), "word letter {k}");
        close(f.branch_eval(b, orbit.points[k]), orbit.points[k + 1], 0.0, "orbit point");
    }
    let symbols: String = orbit.word.iter().map(|&s| char::from(b'0' + s)).collect();
    assert_eq!(orbit.word_string(), symbols);

    // A preimage of the critical point stops the orbit with an error.
    let pre = f.inverse_branch(Branch::Left, f.c()).unwrap();
    assert!(matches!(f.orbit(pre, 3), Err(Error::HitCritical { .. })));
}

#[test]
fn with_parameter_builders_replace_fields() {
    let f = map_b();
    let g = f.with_u(0.7).unwrap();
    assert_eq!(g.u(), 0.7);
    assert_eq!(g.v(), f.v());
    let g = f.with_v(0.5).unwrap().with_c(0.4).unwrap();
    assert_eq!((g.v(), g.c()), (0.5, 0.4));
    assert!(f.with_u(0.0).is_err());
    let id = Decomposition::<f64>::identity(2.0).unwrap();
    let g = f.with_factors(id.clone(), id).unwrap();
    close(g.lcv(), g.u(), 1e-15, "identity factors after replacement");
}

/// Serialization round-trips bit for bit through JSON.
#[test]
fn map_spec_round_trip_is_bit_exact() {
    let f = map_b();
    let spec = MapSpec::from_map(&f);
    let json = serde_json::to_string(&spec).unwrap();
    let back: MapSpec = serde_json::from_str(&json).unwrap();
    let g = back.build().unwrap();
    for x in [0.1, 0.3, 0.55 - 1e-9, 0.6, 0.97] {
        assert_eq!(
            f.eval(x).unwrap().to_bits(),
            g.eval(x).unwrap().to_bits(),
            "round trip must be bit exact at {x}"
        );
    }
    assert_eq!(f.lcv().to_bits(), g.lcv().to_bits());
}

#[test]
fn map_spec_rejects_unknown_fields_and_defaults_factors() {
    let json = r#"{"alpha": 2.0, "u": 0.8, "v": 0.9, "c": 0.5}"#;
    let spec: MapSpec = serde_json::from_str(json).unwrap();
    assert!(spec.phi.is_empty() && spec.psi.is_empty());
    assert!(spec.build().is_ok());
    let bad = r#"{"alpha": 2.0, "u": 0.8, "v": 0.9, "c": 0.5, "w": 3}"#;
    assert!(serde_json::from_str::<MapSpec>(bad).is_err());
    let invalid = r#"{"alpha": 0.5, "u": 0.8, "v": 0.9, "c": 0.5}"#;
    let spec: MapSpec = serde_json::from_str(invalid).unwrap();
    assert!(spec.build().is_err(), "alpha <= 1 must fail at build time");
}

/// The whole interface is generic over the scalar; `f32` agrees with `f64`
/// to single precision.
#[test]
fn f32_scalar_smoke_test() {
    let f32_map = LorenzMap::<f32>::standard(2.0, 0.86, 0.955, 0.5).unwrap();
    let f64_map = map_a();
    for k in 0..=20 {
        let x = 0.02 + 0.96 * k as f64 / 20.0;
        if (x - 0.5).abs() < 1e-3 {
            continue;
        }
        let got = f32_map.eval(x as f32).unwrap() as f64;
        let want = f64_map.eval(x).unwrap();
        close(got, want, 1e-5, "f32 vs f64 eval");
    }
    assert!(f32_map.nontrivial());
    close(f32_map.lcv() as f64, 0.86, 1e-6, "f32 lcv");
}
