//! Renormalization detection and construction against high-precision
//! reference values and structural invariants.

use renormlab::decomp::Decomposition;
use renormlab::lorenz::{Branch, LorenzMap};
use renormlab::renorm::{
    detect, detect_search, first_return_oracle, renormalize, renormalize_seq, renormalize_type,
};
use renormlab::LorenzMap64;

fn close(got: f64, want: f64, tol: f64, what: &str) {
    assert!(
        (got - want).abs() <= tol,
        "{what}: got {got:.17}, want {want:.17}, diff {:.3e} > {tol:.1e}",
        (got - want).abs()
    );
}

/// Reference map A: identity factors.
fn map_a() -> LorenzMap64 {
    LorenzMap::standard(2.0, 0.86, 0.955, 0.5).unwrap()
}

/// Reference map B: one-signature factors on each side.
fn map_b() -> LorenzMap64 {
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
fn map_a_return_structure_matches_reference() {
    let f = map_a();
    let rs = detect(&f, 1, 2).unwrap();
    close(rs.p, 0.3499383379994638344979264, 1e-11, "p");
    close(rs.q, 0.5738726069010172712683558, 1e-11, "q");
    close(rs.dg_p, 2.22856795781475147, 1e-6, "Dg(p)");
    close(rs.dg_q, 3.34501142512591538, 1e-6, "Dg(q)");
    assert!(rs.dg_p > 1.0 && rs.dg_q > 1.0, "return fixed points must repel");
}

#[test]
fn map_a_renormalization_matches_reference() {
    let f = map_a();
    let rs = detect(&f, 1, 2).unwrap();
    let rf = renormalize(&f, &rs).unwrap();
    close(rf.c(), 0.6701147740210617874382035, 1e-11, "c'");
    close(rf.u(), 0.8650314137298989221108439, 1e-10, "u'");
    close(rf.v(), 0.6673675928697117347184046, 1e-10, "v'");
    close(rf.lcv(), 0.8490601413226450766698041, 1e-10, "lcv'");
    close(rf.rcv(), 0.3725637681858053983860084, 1e-10, "rcv'");
    close(rf.eval(0.2).unwrap(), 0.4055995095267725048159655, 1e-9, "Rf(0.2)");
    close(rf.eval(0.7).unwrap(), 0.378352997468477127119408, 1e-9, "Rf(0.7)");
}

#[test]
fn map_a_pullbacks_and_cycles_match_reference() {
    let f = map_a();
    let rs = detect(&f, 1, 2).unwrap();
    close(rs.pull_u.lo(), 0.7825363517358707303819232, 1e-10, "U lo");
    close(rs.pull_u.hi(), 0.872086450188499697837216, 1e-10, "U hi");
    close(rs.pull_v.lo(), 0.03460966241256331302716299, 1e-10, "V lo");
    close(rs.pull_v.hi(), 0.0658463590323454978613608, 1e-10, "V hi");
    // Cycles end at C and the map carries each interval onto the next.
    assert_eq!(rs.cycle_u.len(), 2);
    assert_eq!(rs.cycle_v.len(), 3);
    assert_eq!(rs.cycle_u[1], rs.central);
    assert_eq!(rs.cycle_v[2], rs.central);
    // phi is the identity here, so U_1 = phi(U) coincides with U.
    close(rs.cycle_u[0].lo(), rs.pull_u.lo(), 1e-13, "U_1 lo vs U lo");
    for (cycle, branch) in [(&rs.cycle_u, Branch::Right), (&rs.cycle_v, Branch::Left)] {
        for (w, next) in cycle.iter().zip(cycle.iter().skip(1)) {
            close(f.branch_eval(branch, w.lo()), next.lo(), 1e-9, "cycle image lo");
            close(f.branch_eval(branch, w.hi()), next.hi(), 1e-9, "cycle image hi");
        }
    }
    // Cycle intervals avoid the return interval and each other.
    assert!(rs.cycle_u[0].lo() > rs.q);
    assert!(rs.cycle_v[0].hi() < rs.p);
    assert!(rs.cycle_v[1].hi() < rs.p, "second V interval stays left of p");
}

#[test]
fn map_b_renormalization_matches_reference() {
    let f = map_b();
    close(f.lcv(), 0.8795186347476696098489788, 1e-12, "lcv");
    close(f.rcv(), 0.07105732237333168978536499, 1e-12, "rcv");
    let rs = detect(&f, 1, 2).unwrap();
    close(rs.p, 0.407087350172135885400153, 1e-11, "p");
    close(rs.q, 0.6290035672813500184898686, 1e-11, "q");
    let rf = renormalize(&f, &rs).unwrap();
    close(rf.c(), 0.6439937183929685451078885, 1e-11, "c'");
    close(rf.u(), 0.8435239062556837227992366, 1e-10, "u'");
    close(rf.v(), 0.725120475170089503632483, 1e-10, "v'");
    close(rf.lcv(), 0.8280024414523395440131249, 1e-10, "lcv'");
    close(rf.rcv(), 0.3072195066435477221069357, 1e-10, "rcv'");
    close(rf.eval(0.2).unwrap(), 0.413184450724504172027944, 1e-9, "Rf(0.2)");
    close(rf.eval(0.7).unwrap(), 0.3264428748586849269690466, 1e-9, "Rf(0.7)");
    close(rs.pull_u.lo(), 0.8333285814720847844682741, 1e-10, "U lo");
    close(rs.pull_u.hi(), 0.9048595537979509232662411, 1e-10, "U hi");
    close(rs.pull_v.lo(), 0.05407523233901760560973455, 1e-10, "V lo");
    close(rs.pull_v.hi(), 0.09381907163640581336659605, 1e-10, "V hi");
    // The factors are not the identity, so the pullbacks differ from the
    // cycle intervals U_1 = phi(U), V_1 = psi(V).
    assert!((rs.pull_u.lo() - rs.cycle_u[0].lo()).abs() > 1e-3);
    assert!((rs.pull_v.lo() - rs.cycle_v[0].lo()).abs() > 1e-4);
}

#[test]
fn renormalization_is_conjugate_to_the_first_return_map() {
    // R f evaluated anywhere must agree with the rescaled first return.
    for f in [map_a(), map_b()] {
        let rs = detect(&f, 1, 2).unwrap();
        let rf = renormalize(&f, &rs).unwrap();
        for k in 1..40 {
            let x = k as f64 / 40.0;
            if (x - rf.c()).abs() < 1e-3 {
                continue;
            }
            let (steps, _, ret) = first_return_oracle(&f, &rs, x).unwrap();
            assert!(steps >= 2, "returns take at least two steps");
            let direct = rf.eval(x).unwrap();
            assert!(
                (direct - ret).abs() < 1e-9,
                "x={x}: Rf={direct:.15} vs oracle={ret:.15}"
            );
        }
    }
}

#[test]
fn return_words_follow_the_type() {
    let f = map_a();
    let rs = detect(&f, 1, 2).unwrap();
    // Left of c': word L R^a; right: word R L^b.
    let rf = renormalize(&f, &rs).unwrap();
    let left = rf.c() / 2.0;
    let right = (rf.c() + 1.0) / 2.0;
    let (_, word_l, _) = first_return_oracle(&f, &rs, left).unwrap();
    let (_, word_r, _) = first_return_oracle(&f, &rs, right).unwrap();
    assert_eq!(word_l, vec![Branch::Left.symbol(), Branch::Right.symbol()]);
    assert_eq!(
        word_r,
        vec![Branch::Right.symbol(), Branch::Left.symbol(), Branch::Left.symbol()]
    );
}

#[test]
fn wrong_types_are_rejected() {
    let f = map_a();
    assert!(detect(&f, 2, 1).is_err(), "(2,1) must not detect on map A");
    assert!(detect(&f, 1, 1).is_err(), "(1,1) must not detect on map A");
    assert!(detect(&f, 3, 4).is_err());
    // Trivial maps are rejected outright.
    let g = LorenzMap::standard(2.0, 0.4, 0.95, 0.5).unwrap();
    assert!(!g.nontrivial() && detect(&g, 1, 2).is_err());
}

#[test]
fn detect_search_finds_exactly_the_right_type() {
    let f = map_a();
    let found = detect_search(&f, 4, 4);
    assert_eq!(found.len(), 1, "map A has a unique type in range: {found:?}");
    assert_eq!(found[0], (1, 2));
}

/// A standard-family parameter inside the (1,2)-cubed sub-island, found
/// by the cascade solver; three successive (1,2)-detections hold here.
fn map_c() -> LorenzMap64 {
    LorenzMap::standard(2.0, 0.872961568964562, 0.965252091194344, 0.5).unwrap()
}

#[test]
fn renormalize_seq_composes_two_levels() {
    let f = map_c();
    let (g2, structures) = renormalize_seq(&f, &[(1, 2), (1, 2)]).unwrap();
    assert_eq!(structures.len(), 2);
    // The twice-renormalized map is again a valid nontrivial Lorenz map.
    assert!(g2.nontrivial());
    let direct = renormalize_type(&renormalize_type(&f, 1, 2).unwrap(), 1, 2).unwrap();
    close(g2.c(), direct.c(), 0.0, "seq c matches manual chaining");
    close(g2.u(), direct.u(), 0.0, "seq u matches manual chaining");
}

#[test]
fn renormalized_factor_lengths_follow_the_growth_law() {
    let f = map_b();
    let rf = renormalize_type(&f, 1, 2).unwrap();
    // len phi' = len phi + a (1 + len psi); len psi' = len psi + b (1 + len phi).
    assert_eq!(rf.phi().len(), 1 + 1 * (1 + 1));
    assert_eq!(rf.psi().len(), 1 + 2 * (1 + 1));
}

#[test]
fn deeper_renormalizations_stay_inside_the_wedge() {
    // Follow the sub-island map three levels down; every level is a
    // nontrivial map whose critical values straddle the critical point.
    let mut f = map_c();
    for level in 0..3 {
        let rs = detect(&f, 1, 2).expect("map C is (1,2)-renormalizable to depth 3");
        assert!(rs.p < f.c() && rs.q > f.c(), "level {level}: C contains c");
        f = renormalize(&f, &rs).unwrap();
        assert!(f.lcv() > f.c() && f.rcv() < f.c(), "level {level}: wedge");
    }
}
