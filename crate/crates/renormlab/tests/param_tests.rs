//! Parameter-plane families: trivial-renormalization curves, islands,
//! cascades, fixed-point approximants, and derivative probes.

use renormlab::param::{
    cascade, cone_check, fixed_point_approx, island_solve, jacobian_fd, r_map, r_map_jacobian,
    s_position, sample_triv_left, sample_triv_right, triv_left_curve, triv_right_curve,
    ProbeDirection, Slice, SliceSpec, S_CENTER,
};
use renormlab::renorm::{detect, renormalize, renormalize_seq};
use renormlab::{Error, LorenzMap64};

fn close(got: f64, want: f64, tol: f64, what: &str) {
    assert!(
        (got - want).abs() <= tol,
        "{what}: got {got:.17}, want {want:.17}, diff {:.3e} > {tol:.1e}",
        (got - want).abs()
    );
}

fn id_slice() -> Slice<f64> {
    Slice::standard(2.0, 0.5).unwrap()
}

#[test]
fn slice_construction_and_spec_round_trip() {
    let s = id_slice();
    assert_eq!((s.alpha(), s.c()), (2.0, 0.5));
    let f = s.map_at(0.86, 0.955).unwrap();
    assert_eq!((f.u(), f.v(), f.c()), (0.86, 0.955, 0.5));
    assert!(s.map_at(0.0, 0.9).is_err());

    let json = r#"{"alpha": 2.0, "c": 0.55, "phi": [0.1], "psi": []}"#;
    let spec: SliceSpec = serde_json::from_str(json).unwrap();
    let t = spec.build().unwrap();
    assert_eq!(t.c(), 0.55);
    assert_eq!(t.phi().len(), 1);
    assert!(serde_json::from_str::<SliceSpec>(r#"{"alpha": 2.0, "c": 0.5, "x": 1}"#).is_err());
}

#[test]
fn s_position_matches_closed_form() {
    let f = id_slice().map_at(0.86, 0.955).unwrap();
    let (s1, s2) = s_position(&f);
    close(s1, 1.0 - (1.0 - 0.86) / (2.0 * 0.5), 1e-15, "first coordinate");
    close(s2, 1.0 - 0.045 / (2.0 * 0.5), 1e-15, "second coordinate");
    // Nontrivial maps land in the open upper-right quadrant of the square.
    assert!(s1 > 0.5 && s1 < 1.0 && s2 > 0.5 && s2 < 1.0);
}

/// The left trivial curve at full height has a closed form for exponent 2:
/// the `a = 1` pullback of the critical point is `(1 + sqrt(1/2)) / 2`.
#[test]
fn trivial_curve_reference_value() {
    let u = triv_left_curve(&id_slice(), 1, 1.0).unwrap();
    close(u, 0.85355339059327376220, 1e-12, "triv-left u at v = 1");
    // Deeper pullbacks retreat monotonically toward 1.
    let u2 = triv_left_curve(&id_slice(), 2, 1.0).unwrap();
    assert!(u2 > u && u2 < 1.0);
    // The symmetric slice swaps the two curves.
    let v = triv_right_curve(&id_slice(), 1, 1.0).unwrap();
    close(v, u, 1e-13, "triv-right v at u = 1 by symmetry");
}

/// Points on the sampled trivial curves satisfy their defining property:
/// the critical value returns exactly to the critical point.
#[test]
fn trivial_curves_have_tiny_residuals() {
    let s = id_slice();
    // The curve is only defined where the pullback exists, roughly v > 1 - c.
    let left = sample_triv_left(&s, 1, 60);
    assert!(left.len() >= 25, "curve should be defined on the upper half grid");
    for p in &left {
        assert!(p.residual <= 1e-10, "left residual {:.3e} at v = {}", p.residual, p.param);
        assert!(p.u > 0.5 && p.u <= 1.0 && (p.v - p.param).abs() == 0.0);
    }
    let right = sample_triv_right(&s, 2, 60);
    assert!(right.len() >= 25);
    for p in &right {
        assert!(p.residual <= 1e-10, "right residual {:.3e} at u = {}", p.residual, p.param);
    }
    // Outside its domain the curve reports an error rather than a value.
    assert!(matches!(triv_left_curve(&s, 1, 1e-12), Err(Error::Domain(_))));
}

/// `r_map` is literally the S-position of the renormalized map.
#[test]
fn r_map_agrees_with_direct_renormalization() {
    let s = id_slice();
    let lambda = (0.871843048103, 0.964557810757);
    let got = r_map(&s, lambda, (1, 2)).unwrap();
    let f = s.map_at(lambda.0, lambda.1).unwrap();
    let rs = detect(&f, 1, 2).unwrap();
    let want = s_position(&renormalize(&f, &rs).unwrap());
    close(got.0, want.0, 0.0, "first position");
    close(got.1, want.1, 0.0, "second position");
}

#[test]
fn r_map_jacobian_is_orientation_preserving_on_the_island() {
    let s = id_slice();
    let m = r_map_jacobian(&s, (0.859489407, 0.955952150), (1, 2), 1e-6).unwrap();
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    assert!(det > 0.0, "island Jacobian determinant must be positive, got {det:.3e}");
}

/// Solving for the island center lands inside the known coarse bounding box
/// of the `(1, 2)` island in the identity slice.
#[test]
fn island_solve_identity_slice() {
    let sol = island_solve(&id_slice(), (1, 2), (0.75, 0.75)).unwrap();
    assert!(sol.residual <= 1e-8, "residual {:.3e}", sol.residual);
    assert!(sol.evals > 0);
    let (u, v) = sol.lambda;
    assert!((0.8435..=0.881).contains(&u), "island u = {u:.9} outside the coarse box");
    assert!((0.944..=0.969).contains(&v), "island v = {v:.9} outside the coarse box");
    close(sol.position.0, 0.75, 1e-8, "position first coordinate");
    close(sol.position.1, 0.75, 1e-8, "position second coordinate");
    assert!(island_solve(&id_slice(), (1, 2), (0.3, 0.75)).is_err(), "targets live in [1/2, 1]");
}

#[test]
fn island_solve_shifted_slice() {
    let s = Slice::standard(2.0, 0.55).unwrap();
    let sol = island_solve(&s, (1, 2), (0.75, 0.75)).unwrap();
    assert!(sol.residual <= 1e-8);
    let (u, v) = sol.lambda;
    assert!((0.8797..=0.910).contains(&u), "island u = {u:.9} outside the coarse box");
    assert!((0.92..=0.95).contains(&v), "island v = {v:.9} outside the coarse box");
}

/// A depth-3 cascade produces strictly nested boxes around a parameter
/// whose map detects the whole type sequence.
#[test]
fn cascade_produces_nested_boxes() {
    let s = id_slice();
    let types = [(1, 2), (1, 2), (1, 2)];
    let res = cascade(&s, &types).unwrap();
    assert_eq!(res.boxes.len(), 3);
    for (k, b) in res.boxes.iter().enumerate() {
        assert_eq!(b.depth as usize, k);
        assert_eq!(b.omega, (1, 2));
        assert!(b.u_rect.contains(res.lambda.0) && b.v_rect.contains(res.lambda.1));
    }
    for w in res.boxes.windows(2) {
        assert!(
            w[0].u_rect.contains_interval(&w[1].u_rect)
                && w[0].v_rect.contains_interval(&w[1].v_rect),
            "boxes must nest"
        );
        assert!(w[1].diameter() < w[0].diameter(), "diameters must shrink");
    }
    let f = s.map_at(res.lambda.0, res.lambda.1).unwrap();
    assert!(renormalize_seq(&f, &types).is_ok(), "lambda must realize the full sequence");
    assert!(cascade(&s, &[]).is_err());
}

#[test]
fn cascade_handles_mixed_types() {
    let res = cascade(&id_slice(), &[(1, 2), (2, 1)]).unwrap();
    assert_eq!(res.boxes.len(), 2);
    assert_eq!(res.boxes[1].omega, (2, 1));
    assert!(res.boxes[0].u_rect.contains_interval(&res.boxes[1].u_rect));
    let f = id_slice().map_at(res.lambda.0, res.lambda.1).unwrap();
    assert!(renormalize_seq(&f, &[(1, 2), (2, 1)]).is_ok());
}

/// Deeper cascade parameters approximate the fixed point better.
#[test]
fn fixed_point_residual_decreases_with_depth() {
    let s = id_slice();
    let (f2, r2) = fixed_point_approx(&s, (1, 2), 2).unwrap();
    let (f4, r4) = fixed_point_approx(&s, (1, 2), 4).unwrap();
    assert_eq!((r2.m, r4.m), (1, 2));
    assert!(r2.residual.is_finite() && r4.residual.is_finite());
    assert!(
        r4.residual < r2.residual,
        "residual should improve: depth 2 gives {:.3e}, depth 4 gives {:.3e}",
        r2.residual,
        r4.residual
    );
    assert!(r4.sup_diff <= r4.residual + 1e-15);
    assert!(f2.nontrivial() && f4.nontrivial());
    assert!(fixed_point_approx(&s, (1, 2), 1).is_err());
}

/// The parameter-to-renormalization Jacobian block has positive determinant
/// and the critical-point column pushes `u'` and `v'` in opposite directions.
#[test]
fn jacobian_fd_signs() {
    let sol = island_solve(&id_slice(), (1, 2), (S_CENTER.0, S_CENTER.1)).unwrap();
    let f = id_slice().map_at(sol.lambda.0, sol.lambda.1).unwrap();
    let jac = jacobian_fd(
        &f,
        (1, 2),
        &[ProbeDirection::C, ProbeDirection::PhiPiece(0), ProbeDirection::PsiPiece(0)],
    )
    .unwrap();
    assert!(jac.det_m1 > 0.0, "det M1 = {:.3e}", jac.det_m1);
    let c = jac.c_column().expect("the c direction was probed");
    assert!(c.d_u < 0.0, "du'/dc = {:.3e} should be negative", c.d_u);
    assert!(c.d_v > 0.0, "dv'/dc = {:.3e} should be positive", c.d_v);
    assert_eq!(jac.columns.len(), 3);
    for col in &jac.columns {
        assert!(col.h > 0.0 && col.d_u.is_finite() && col.d_v.is_finite());
    }
}

/// The nonlinearity cone probe runs on maps with enough factors and rejects
/// maps with too few.
#[test]
fn cone_check_needs_factors_and_reports() {
    let f = id_slice().map_at(0.86, 0.955).unwrap();
    assert!(matches!(cone_check(&f, (1, 2), 1.0), Err(Error::Insufficient(_))));

    // Two renormalizations grow the factor lists to 3 + 4 slots.
    let deep = LorenzMap64::standard(2.0, 0.872961568964562, 0.965252091194344, 0.5).unwrap();
    let (g, _) = renormalize_seq(&deep, &[(1, 2), (1, 2)]).unwrap();
    assert!(g.phi().len() + g.psi().len() >= 4);
    let report = cone_check(&g, (1, 2), 1.0).unwrap();
    assert!(!report.samples.is_empty());
    assert!(report.max_ratio > 0.0 && report.max_ratio.is_finite());
    assert!(report.min_expansion > 0.0 && report.min_expansion.is_finite());
    assert_eq!(report.kappa, 1.0);
    assert!(cone_check(&g, (1, 2), -1.0).is_err());
}
