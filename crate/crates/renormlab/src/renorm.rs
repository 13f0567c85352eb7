//! Renormalization of Lorenz maps with monotone combinatorics.
//!
//! A Lorenz map `f` is renormalizable of monotone type `(a, b)` if there is
//! an interval `C = [p, q]` around the critical point, with `p` and `q`
//! periodic of periods `a + 1` and `b + 1`, on which the first-return map is
//! again a Lorenz map: points left of `c` return after the word `0 1^a`,
//! points right of `c` after `1 0^b`. The *renormalization* `R f` is the
//! first-return map rescaled by the affine chart of `C`.
//!
//! The central computational fact is that `R` acts on decomposed maps
//! without any function-space truncation. Writing `f0 = phi o Q0` and
//! `f1 = psi o Q1`,
//!
//! ```text
//! phi(Rf) = Z(f1^a o phi; U),   U = phi^-1(f1^-a(C)),
//! psi(Rf) = Z(f0^b o psi; V),   V = psi^-1(f0^-b(C)),
//! ```
//!
//! and zooming distributes over the factors: each zoomed `phi`/`psi` factor
//! is pure by induction, and the zoom of a power-law factor `Q0`/`Q1` on an
//! off-critical interval is pure with an explicit signature. So `R` maps
//! finite decompositions to finite decompositions, growing the factor count
//! by `a (1 + len psi)` on the left and `b (1 + len phi)` on the right
//! before pruning.
//!
//! [`detect`] locates the return structure and validates it (periodicity,
//! repelling return derivative, return conditions, itinerary words);
//! [`renormalize`] builds the new tuple; [`first_return_oracle`] provides an
//! independent brute-force check; [`verify_k_membership`] and
//! [`verify_lemma_bounds`] report the quantitative inequalities entering
//! the a-priori bounds.

use crate::decomp::{Decomposition, PieceOrigin, TimeLabel};
use crate::diffeo::{Diffeo, Interval};
use crate::lorenz::{Branch, LorenzMap};
use crate::{count, lit, tol, Error, Real, Result};
use rayon::prelude::*;
use serde::Serialize;

/// Number of probe points when scanning for periodic endpoints.
const SCAN: usize = 512;

/// Validated monotone return structure of type `(a, b)`.
#[derive(Clone, Debug, Serialize)]
pub struct ReturnStructure<T> {
    /// Return word on the left half is `0 1^a`.
    pub a: u32,
    /// Return word on the right half is `1 0^b`.
    pub b: u32,
    /// Left endpoint of `C`, periodic of period `a + 1`.
    pub p: T,
    /// Right endpoint of `C`, periodic of period `b + 1`.
    pub q: T,
    /// The return interval `C = [p, q]`.
    pub central: Interval<T>,
    /// Left half `[p, c]` of the return interval.
    pub left: Interval<T>,
    /// Right half `[c, q]` of the return interval.
    pub right: Interval<T>,
    /// Domain `[l, c]` of the left return branch `f1^a o f0`.
    pub branch_left: Interval<T>,
    /// Domain `[c, r]` of the right return branch `f0^b o f1`.
    pub branch_right: Interval<T>,
    /// Return-map derivative at `p` (must exceed 1).
    pub dg_p: T,
    /// Return-map derivative at `q` (must exceed 1).
    pub dg_q: T,
    /// Left critical return `f^{a+1}(c-) in (c, q]`.
    pub left_return: T,
    /// Right critical return `f^{b+1}(c+) in [p, c)`.
    pub right_return: T,
    /// Pullback `U = phi^-1(f1^-a(C))`; the left return factors through it
    /// as `f^{a+1}|_L = f1^a o phi o Q0` with `Q0(L)` inside `U`.
    pub pull_u: Interval<T>,
    /// Pullback `V = psi^-1(f0^-b(C))`; the right return factors through it
    /// as `f^{b+1}|_R = f0^b o psi o Q1` with `Q1(R)` inside `V`.
    pub pull_v: Interval<T>,
    /// Cycle `U_1..U_{a+1}`: `U_1 = phi(U)`, `f(U_i) = U_{i+1}`, and
    /// `U_{a+1} = C`. All but the last lie right of `c`.
    pub cycle_u: Vec<Interval<T>>,
    /// Cycle `V_1..V_{b+1}`: `V_1 = psi(V)`, `f(V_j) = V_{j+1}`, and
    /// `V_{b+1} = C`. All but the last lie left of `c`.
    pub cycle_v: Vec<Interval<T>>,
}

fn iterate_right<T: Real>(f: &LorenzMap<T>, mut y: T, n: u32) -> T {
    for _ in 0..n {
        y = f.branch_eval(Branch::Right, y);
    }
    y
}

fn iterate_left<T: Real>(f: &LorenzMap<T>, mut y: T, n: u32) -> T {
    for _ in 0..n {
        y = f.branch_eval(Branch::Left, y);
    }
    y
}

/// Locates and validates the type-`(a, b)` return structure of `f`.
///
/// Fails with [`Error::NotRenormalizable`] when the structure does not
/// exist (trivial map, empty branch domain, missing or misplaced periodic
/// points, violated return conditions) and with [`Error::WordViolation`]
/// when an orbit realizes the wrong itinerary.
pub fn detect<T: Real>(f: &LorenzMap<T>, a: u32, b: u32) -> Result<ReturnStructure<T>> {
    if a == 0 || b == 0 {
        return Err(Error::InvalidInput("return type (a, b) needs a >= 1 and b >= 1".into()));
    }
    if !f.nontrivial() {
        return Err(Error::NotRenormalizable(
            "trivial map: critical values do not straddle the critical point".into(),
        ));
    }
    let c = f.c();
    let lcv = f.lcv();
    let rcv = f.rcv();

    // Critical returns first: they bound the search and must straddle c.
    let left_return = iterate_right(f, lcv, a);
    if left_return <= c {
        return Err(Error::NotRenormalizable(format!(
            "left critical return f^{}(c-) = {left_return} does not pass the critical point",
            a + 1
        )));
    }
    let right_return = iterate_left(f, rcv, b);
    if right_return >= c {
        return Err(Error::NotRenormalizable(format!(
            "right critical return f^{}(c+) = {right_return} does not pass the critical point",
            b + 1
        )));
    }

    // Domain (l, c) of the left return branch g = f1^a o f0: pull c back
    // a - 1 times through f1, once through f0.
    let mut t = c;
    for _ in 0..(a - 1) {
        t = f.inverse_branch(Branch::Right, t).map_err(branch_domain_empty)?;
    }
    if t >= lcv {
        return Err(Error::NotRenormalizable(format!(
            "left branch domain empty: f1^-{}(c) = {t} is not below lcv = {lcv}",
            a - 1
        )));
    }
    let l = f.inverse_branch(Branch::Left, t).map_err(branch_domain_empty)?;

    // Domain (c, r) of the right return branch g = f0^b o f1.
    let mut z = c;
    for _ in 0..(b - 1) {
        z = f.inverse_branch(Branch::Left, z).map_err(branch_domain_empty)?;
    }
    if z <= rcv {
        return Err(Error::NotRenormalizable(format!(
            "right branch domain empty: f0^-{}(c) = {z} is not above rcv = {rcv}",
            b - 1
        )));
    }
    let r = f.inverse_branch(Branch::Right, z).map_err(branch_domain_empty)?;

    let g_left = |x: T| iterate_right(f, f.branch_eval(Branch::Left, x), a);
    let g_right = |x: T| iterate_left(f, f.branch_eval(Branch::Right, x), b);
    let dg_left = |x: T| {
        let mut d = f.branch_deriv(Branch::Left, x);
        let mut y = f.branch_eval(Branch::Left, x);
        for _ in 0..a {
            d = d * f.branch_deriv(Branch::Right, y);
            y = f.branch_eval(Branch::Right, y);
        }
        d
    };
    let dg_right = |x: T| {
        let mut d = f.branch_deriv(Branch::Right, x);
        let mut y = f.branch_eval(Branch::Right, x);
        for _ in 0..b {
            d = d * f.branch_deriv(Branch::Left, y);
            y = f.branch_eval(Branch::Left, y);
        }
        d
    };

    // p: the periodic point closest to c on the left, i.e. the largest
    // fixed point of g_left in (l, c). Scan from c towards l for the first
    // sign change of g(x) - x (positive near c because left_return > c).
    let p = {
        let h = |x: T| g_left(x) - x;
        let step = (c - l) / count::<T>(SCAN);
        let mut bracket = None;
        let mut x_hi = c - step * lit(1e-3);
        if h(x_hi) <= T::zero() {
            return Err(Error::NotRenormalizable(
                "left return map has no repelling fixed point near c".into(),
            ));
        }
        for k in 1..=SCAN {
            let x = if k == SCAN { l + step * lit(1e-6) } else { c - count::<T>(k) * step };
            if h(x) <= T::zero() {
                bracket = Some((x, x_hi));
                break;
            }
            x_hi = x;
        }
        let (lo, hi) = bracket.ok_or_else(|| {
            Error::NotRenormalizable("no periodic point of the left return word".into())
        })?;
        refine_fixed_point(h, dg_left, lo, hi)?
    };

    // q: the smallest fixed point of g_right in (c, r); g(x) - x is
    // negative near c because right_return < c.
    let q = {
        let h = |x: T| g_right(x) - x;
        let step = (r - c) / count::<T>(SCAN);
        let mut bracket = None;
        let mut x_lo = c + step * lit(1e-3);
        if h(x_lo) >= T::zero() {
            return Err(Error::NotRenormalizable(
                "right return map has no repelling fixed point near c".into(),
            ));
        }
        for k in 1..=SCAN {
            let x = if k == SCAN { r - step * lit(1e-6) } else { c + count::<T>(k) * step };
            if h(x) >= T::zero() {
                bracket = Some((x_lo, x));
                break;
            }
            x_lo = x;
        }
        let (lo, hi) = bracket.ok_or_else(|| {
            Error::NotRenormalizable("no periodic point of the right return word".into())
        })?;
        refine_fixed_point(h, dg_right, lo, hi)?
    };

    let tol_p = lit::<T>(tol::PERIODICITY);
    if (g_left(p) - p).abs() > tol_p {
        return Err(Error::SolverFailed(format!(
            "periodicity residual at p = {p} exceeds tolerance: {}",
            (g_left(p) - p).abs()
        )));
    }
    if (g_right(q) - q).abs() > tol_p {
        return Err(Error::SolverFailed(format!(
            "periodicity residual at q = {q} exceeds tolerance: {}",
            (g_right(q) - q).abs()
        )));
    }
    let dg_p = dg_left(p);
    let dg_q = dg_right(q);
    if !(dg_p > T::one()) {
        return Err(Error::NotRenormalizable(format!(
            "return derivative at p is not repelling: Dg(p) = {dg_p}"
        )));
    }
    if !(dg_q > T::one()) {
        return Err(Error::NotRenormalizable(format!(
            "return derivative at q is not repelling: Dg(q) = {dg_q}"
        )));
    }
    let margin = lit::<T>(1e-12);
    if !(p + margin < c && c + margin < q) {
        return Err(Error::NotRenormalizable(format!(
            "return interval [{p}, {q}] degenerates at the critical point"
        )));
    }

    // Return conditions: critical returns must land back inside C.
    if left_return > q + tol_p {
        return Err(Error::NotRenormalizable(format!(
            "left critical return {left_return} overshoots q = {q}"
        )));
    }
    if right_return < p - tol_p {
        return Err(Error::NotRenormalizable(format!(
            "right critical return {right_return} undershoots p = {p}"
        )));
    }
    // Cycle disjointness at the first step: f0(L) and f1(R) avoid C.
    if f.branch_eval(Branch::Left, p) < q - tol_p {
        return Err(Error::NotRenormalizable(
            "first left cycle interval f0(L) meets the return interval".into(),
        ));
    }
    if f.branch_eval(Branch::Right, q) > p + tol_p {
        return Err(Error::NotRenormalizable(
            "first right cycle interval f1(R) meets the return interval".into(),
        ));
    }

    // Itinerary words of the half midpoints.
    check_word(f, (p + c) / lit(2.0), a, Branch::Left)?;
    check_word(f, (c + q) / lit(2.0), b, Branch::Right)?;

    // Cycles: pull C back along the return words. A validated structure
    // guarantees every pullback exists, so an escape is a genuine bug.
    let central = Interval::new(p, q)?;
    let pull = |branch: Branch, lo: T, hi: T, label: &str| -> Result<(T, T)> {
        let escape = |e: Error| {
            Error::CoverBug(format!("cycle interval {label} escapes its branch range: {e}"))
        };
        Ok((
            f.inverse_branch(branch, lo).map_err(escape)?,
            f.inverse_branch(branch, hi).map_err(escape)?,
        ))
    };
    let mut cycle_u = Vec::with_capacity(a as usize + 1);
    let (mut ulo, mut uhi) = (p, q);
    for i in (1..=a).rev() {
        (ulo, uhi) = pull(Branch::Right, ulo, uhi, &format!("U_{i}"))?;
        cycle_u.push(Interval::new(ulo, uhi)?);
    }
    cycle_u.reverse();
    cycle_u.push(central);
    let mut cycle_v = Vec::with_capacity(b as usize + 1);
    let (mut vlo, mut vhi) = (p, q);
    for j in (1..=b).rev() {
        (vlo, vhi) = pull(Branch::Left, vlo, vhi, &format!("V_{j}"))?;
        cycle_v.push(Interval::new(vlo, vhi)?);
    }
    cycle_v.reverse();
    cycle_v.push(central);

    // The pullbacks undo the diffeomorphism factor as well: U = phi^-1(U_1)
    // and V = psi^-1(V_1).
    let phi_c = f.phi().compose();
    let pull_u = Interval::new(phi_c.inverse(ulo), phi_c.inverse(uhi))?;
    let psi_c = f.psi().compose();
    let pull_v = Interval::new(psi_c.inverse(vlo), psi_c.inverse(vhi))?;

    Ok(ReturnStructure {
        a,
        b,
        p,
        q,
        central,
        left: Interval::new(p, c)?,
        right: Interval::new(c, q)?,
        branch_left: Interval::new(l, c)?,
        branch_right: Interval::new(c, r)?,
        dg_p,
        dg_q,
        left_return,
        right_return,
        pull_u,
        pull_v,
        cycle_u,
        cycle_v,
    })
}

fn branch_domain_empty(e: Error) -> Error {
    match e {
        Error::NoPreimage(d) => {
            Error::NotRenormalizable(format!("branch domain empty: {d}"))
        }
        other => other,
    }
}

/// Bisection to [`tol::ROOT_BISECT`] followed by guarded Newton polish.
///
/// Expects `h(lo) <= 0 < h(hi)` where `h(x) = g(x) - x` and `dg` is the
/// derivative of `g`.
fn refine_fixed_point<T: Real>(
    h: impl Fn(T) -> T,
    dg: impl Fn(T) -> T,
    mut lo: T,
    mut hi: T,
) -> Result<T> {
    if !(h(lo) <= T::zero() && h(hi) > T::zero()) {
        return Err(Error::SolverFailed("fixed-point bracket lost its sign change".into()));
    }
    while hi - lo > lit(tol::ROOT_BISECT) {
        let mid = (lo + hi) / lit(2.0);
        if h(mid) <= T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = (lo + hi) / lit(2.0);
    for _ in 0..tol::NEWTON_MAX {
        let denom = dg(x) - T::one();
        if denom.abs() < lit(1e-9) {
            break;
        }
        let next = x - h(x) / denom;
        if !(next >= lo && next <= hi) {
            break;
        }
        let moved = (next - x).abs();
        x = next;
        if moved < lit(1e-16) {
            break;
        }
    }
    Ok(x)
}

fn check_word<T: Real>(f: &LorenzMap<T>, x0: T, tail: u32, first: Branch) -> Result<()> {
    let n = tail as usize + 1;
    let orbit = f.orbit(x0, n)?;
    let expected_first = first.symbol();
    let expected_tail = match first {
        Branch::Left => 1u8,
        Branch::Right => 0u8,
    };
    for (step, &sym) in orbit.word.iter().enumerate() {
        let want = if step == 0 { expected_first } else { expected_tail };
        if sym != want {
            return Err(Error::WordViolation {
                step,
                detail: format!(
                    "midpoint itinerary {} deviates from the monotone return word",
                    orbit.word_string()
                ),
            });
        }
    }
    Ok(())
}

/// Consistency tolerance for closed-form pullback cross-checks.
const PULLBACK_TOL: f64 = 1e-8;

/// Renormalizes `f` using a detected return structure.
///
/// Produces the rescaled first-return map as a Lorenz tuple. The
/// diffeomorphism factors are rebuilt exactly: each original factor zooms
/// to a pure factor on its transported interval, and every power-law
/// traversal contributes one pure factor with a closed-form signature.
/// Factors are labelled with their provenance and pruned below
/// [`tol::PRUNE_S`].
pub fn renormalize<T: Real>(f: &LorenzMap<T>, rs: &ReturnStructure<T>) -> Result<LorenzMap<T>> {
    let alpha = f.alpha();
    let c = f.c();
    let beta = alpha - T::one();
    let check = lit::<T>(PULLBACK_TOL);

    let c_new = (c - rs.p) / (rs.q - rs.p);

    // Left side: U = phi^-1(f1^-a(C)), phi(Rf) = Z(f1^a o phi; U).
    let u_dom = rs.pull_u;
    if (u_dom.lo() - f.q0(rs.p)).abs() > check {
        return Err(Error::SolverFailed(format!(
            "left pullback drifted from Q0(p) by {}",
            (u_dom.lo() - f.q0(rs.p)).abs()
        )));
    }
    let u_new = (f.u() - u_dom.lo()) / u_dom.len();

    let mut phi_new = f.phi().zoom(u_dom)?;
    relabel(&mut phi_new, PieceOrigin::Phi, 0);
    let mut cur = f.phi().image(u_dom)?;
    for i in 1..=rs.a {
        if cur.lo() <= c {
            return Err(Error::SolverFailed(format!(
                "transported interval crosses c at left return step {i}"
            )));
        }
        // Zoom of Q1 on an interval right of c is pure with this signature.
        let s = beta * ((cur.hi() - c) / (cur.lo() - c)).ln();
        phi_new.push(TimeLabel { origin: PieceOrigin::Q1, step: i }, s);
        cur = Interval::new(f.q1(cur.lo()), f.q1(cur.hi()))?;
        let mut psi_zoomed = f.psi().zoom(cur)?;
        relabel(&mut psi_zoomed, PieceOrigin::Psi, i);
        cur = f.psi().image(cur)?;
        phi_new = phi_new.disjoint_union(&psi_zoomed);
    }
    if (cur.lo() - rs.p).abs() > check || (cur.hi() - rs.q).abs() > check {
        return Err(Error::SolverFailed(
            "left factor walk did not land back on the return interval".into(),
        ));
    }

    // Right side: V = psi^-1(f0^-b(C)), psi(Rf) = Z(f0^b o psi; V).
    let v_dom = rs.pull_v;
    if (v_dom.hi() - f.q1(rs.q)).abs() > check {
        return Err(Error::SolverFailed(format!(
            "right pullback drifted from Q1(q) by {}",
            (v_dom.hi() - f.q1(rs.q)).abs()
        )));
    }
    let v_new = (v_dom.hi() - (T::one() - f.v())) / v_dom.len();

    let mut psi_new = f.psi().zoom(v_dom)?;
    relabel(&mut psi_new, PieceOrigin::Psi, 0);
    let mut cur = f.psi().image(v_dom)?;
    for j in 1..=rs.b {
        if cur.hi() >= c {
            return Err(Error::SolverFailed(format!(
                "transported interval crosses c at right return step {j}"
            )));
        }
        // Zoom of Q0 on an interval left of c is pure with this signature.
        let s = beta * ((c - cur.hi()) / (c - cur.lo())).ln();
        psi_new.push(TimeLabel { origin: PieceOrigin::Q0, step: j }, s);
        cur = Interval::new(f.q0(cur.lo()), f.q0(cur.hi()))?;
        let mut phi_zoomed = f.phi().zoom(cur)?;
        relabel(&mut phi_zoomed, PieceOrigin::Phi, j);
        cur = f.phi().image(cur)?;
        psi_new = psi_new.disjoint_union(&phi_zoomed);
    }
    if (cur.lo() - rs.p).abs() > check || (cur.hi() - rs.q).abs() > check {
        return Err(Error::SolverFailed(
            "right factor walk did not land back on the return interval".into(),
        ));
    }

    debug_assert_eq!(
        phi_new.len(),
        f.phi().len() + rs.a as usize * (1 + f.psi().len()),
        "left factor count must grow by a (1 + len psi)"
    );
    debug_assert_eq!(
        psi_new.len(),
        f.psi().len() + rs.b as usize * (1 + f.phi().len()),
        "right factor count must grow by b (1 + len phi)"
    );
    phi_new.prune_default();
    psi_new.prune_default();

    LorenzMap::new(alpha, u_new, v_new, c_new, phi_new, psi_new)
}

fn relabel<T: Real>(d: &mut Decomposition<T>, origin: PieceOrigin, step: u32) {
    let mut out = Decomposition::identity(d.alpha()).expect("alpha stays valid");
    for s in d.signatures() {
        out.push(TimeLabel { origin, step }, s);
    }
    *d = out;
}

/// Detects and renormalizes in one step.
pub fn renormalize_type<T: Real>(f: &LorenzMap<T>, a: u32, b: u32) -> Result<LorenzMap<T>> {
    let rs = detect(f, a, b)?;
    renormalize(f, &rs)
}

/// Applies `R` once per entry of `types`, collecting the structures.
pub fn renormalize_seq<T: Real>(
    f: &LorenzMap<T>,
    types: &[(u32, u32)],
) -> Result<(LorenzMap<T>, Vec<ReturnStructure<T>>)> {
    let mut cur = f.clone();
    let mut structures = Vec::with_capacity(types.len());
    for &(a, b) in types {
        let rs = detect(&cur, a, b)?;
        let next = renormalize(&cur, &rs)?;
        structures.push(rs);
        cur = next;
    }
    Ok((cur, structures))
}

/// Brute-force first return of a point of `C` in normalized coordinates.
///
/// `x_unit` is the position in the affine chart of `C = [p, q]`. Iterates
/// `f` directly until the orbit re-enters `C`, returning the hit step, the
/// branch word traversed, and the normalized landing position. Independent
/// of the tuple algebra, so it cross-checks [`renormalize`].
pub fn first_return_oracle<T: Real>(
    f: &LorenzMap<T>,
    rs: &ReturnStructure<T>,
    x_unit: T,
) -> Result<(usize, Vec<u8>, T)> {
    if !(T::zero()..=T::one()).contains(&x_unit) {
        return Err(Error::Domain(format!("{x_unit} outside [0, 1]")));
    }
    let cap = 10 * (rs.a + rs.b + 2) as usize;
    let mut x = rs.central.from_unit(x_unit);
    let mut word = Vec::new();
    for step in 0..cap {
        if (x - f.c()).abs() < lit(tol::CRIT_COLLISION) {
            return Err(Error::HitCritical { step });
        }
        let branch = if x < f.c() { Branch::Left } else { Branch::Right };
        word.push(branch.symbol());
        x = f.branch_eval(branch, x);
        if rs.central.contains(x) {
            return Ok((step + 1, word, rs.central.to_unit(x)));
        }
    }
    Err(Error::CapExceeded {
        steps: cap,
        detail: "orbit failed to return to the central interval".into(),
    })
}

/// All types `(a, b)` in a rectangle for which `f` is renormalizable.
///
/// Scans the grid in parallel; the result is sorted, so it is deterministic
/// regardless of thread count.
pub fn detect_search<T: Real + Send + Sync>(
    f: &LorenzMap<T>,
    a_max: u32,
    b_max: u32,
) -> Vec<(u32, u32)> {
    let pairs: Vec<(u32, u32)> =
        (1..=a_max).flat_map(|a| (1..=b_max).map(move |b| (a, b))).collect();
    let mut found: Vec<(u32, u32)> = pairs
        .into_par_iter()
        .filter(|&(a, b)| detect(f, a, b).is_ok())
        .collect();
    found.sort_unstable();
    found
}

/// Parameters of the invariant set `K(b_lower, sigma, beta, theta)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct KParams<T> {
    /// Lower bound on admissible right return words.
    pub b_lower: T,
    /// Window-shape exponent, `0 < sigma < min(1, alpha - 1)`.
    pub sigma: T,
    /// Slack in the upper bound on `b`.
    pub beta: T,
    /// Constant in the upper bound on `eps`.
    pub theta: T,
}

/// Outcome of the combinatorics window check inside [`verify_k_membership`].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct OmegaReport<T> {
    /// Checked left return word length.
    pub a: u32,
    /// Checked right return word length.
    pub b: u32,
    /// Lower admissible `a + 1`.
    pub a_lo: T,
    /// Upper admissible `a + 1`.
    pub a_hi: T,
    /// True if `alpha + sigma <= a + 1 <= 2 alpha - sigma`.
    pub a_ok: bool,
    /// Lower admissible `b`.
    pub b_lo: T,
    /// Upper admissible `b`.
    pub b_hi: T,
    /// True if `b_lower <= b <= (1 + (sigma/alpha)^2 - beta) b_lower`.
    pub b_ok: bool,
}

/// Numerical membership report for the invariant set `K`.
#[derive(Clone, Debug, Serialize)]
pub struct KReport<T> {
    /// Distance `eps = 1 - c` from the critical point to the right end.
    pub eps: T,
    /// Lower admissible `eps`: `alpha^(-b_lower / alpha)`.
    pub eps_lo: T,
    /// Upper admissible `eps`: `theta alpha^(-b_lower sigma / alpha^2)`.
    pub eps_hi: T,
    /// True if `eps` lies in the window.
    pub eps_ok: bool,
    /// Distortion budget `delta = (1 / b_lower)^2`.
    pub delta: T,
    /// Sampled distortion of the composed left factor.
    pub dist_phi: T,
    /// Sampled distortion of the composed right factor.
    pub dist_psi: T,
    /// Upper bound `sum |s|` over the left factors.
    pub dist_phi_bound: T,
    /// Upper bound `sum |s|` over the right factors.
    pub dist_psi_bound: T,
    /// True if both sampled distortions are at most `delta`.
    pub dist_ok: bool,
    /// Combinatorics window check, when a type was supplied.
    pub omega: Option<OmegaReport<T>>,
    /// Conjunction of all checks.
    pub pass: bool,
}

/// Checks the defining inequalities of the invariant set `K`.
///
/// The set demands `alpha^(-b_lower/alpha) <= eps <= theta
/// alpha^(-b_lower sigma/alpha^2)` and distortion of both diffeomorphism
/// factors at most `delta = (1/b_lower)^2`; when `type_ab` is supplied the
/// combinatorics window is checked as well: `alpha + sigma <= a + 1 <=
/// 2 alpha - sigma` and `b_lower <= b <= (1 + (sigma/alpha)^2 - beta)
/// b_lower`.
pub fn verify_k_membership<T: Real>(
    f: &LorenzMap<T>,
    params: &KParams<T>,
    type_ab: Option<(u32, u32)>,
) -> Result<KReport<T>> {
    let alpha = f.alpha();
    if !(params.b_lower > T::zero()) {
        return Err(Error::InvalidInput("b_lower must be positive".into()));
    }
    let eps = f.eps();
    let eps_lo = alpha.powf(-params.b_lower / alpha);
    let eps_hi = params.theta * alpha.powf(-params.b_lower * params.sigma / (alpha * alpha));
    let eps_ok = eps_lo <= eps && eps <= eps_hi;
    let delta = T::one() / (params.b_lower * params.b_lower);
    let unit = Interval::unit();
    let dist_phi = f.phi().compose().distortion_on(unit);
    let dist_psi = f.psi().compose().distortion_on(unit);
    let dist_ok = dist_phi <= delta && dist_psi <= delta;
    let omega = type_ab.map(|(a, b)| {
        let a_lo = alpha + params.sigma;
        let a_hi = lit::<T>(2.0) * alpha - params.sigma;
        let a_val = count::<T>(a as usize + 1);
        let ratio = params.sigma / alpha;
        let b_lo = params.b_lower;
        let b_hi = (T::one() + ratio * ratio - params.beta) * params.b_lower;
        let b_val = count::<T>(b as usize);
        OmegaReport {
            a,
            b,
            a_lo,
            a_hi,
            a_ok: a_lo <= a_val && a_val <= a_hi,
            b_lo,
            b_hi,
            b_ok: b_lo <= b_val && b_val <= b_hi,
        }
    });
    let pass = eps_ok && dist_ok && omega.as_ref().map_or(true, |o| o.a_ok && o.b_ok);
    Ok(KReport {
        eps,
        eps_lo,
        eps_hi,
        eps_ok,
        delta,
        dist_phi,
        dist_psi,
        dist_phi_bound: f.phi().distortion(),
        dist_psi_bound: f.psi().distortion(),
        dist_ok,
        omega,
        pass,
    })
}

/// Quantitative report on the inequalities behind the invariance lemmas.
#[derive(Clone, Debug, Serialize)]
pub struct LemmaReport<T> {
    /// Type used for the renormalization.
    pub a: u32,
    /// Type used for the renormalization.
    pub b: u32,
    /// `eps = 1 - c` of the input map.
    pub eps: T,
    /// Left critical value of the input map.
    pub lcv: T,
    /// Right critical value of the input map.
    pub rcv: T,
    /// `(1 - lcv) / eps^2`: bounded by a constant on the invariant set.
    pub crit_ratio: T,
    /// Proof step `lcv > f1^-1(c)` (monotone combinatorics).
    pub lcv_above_pullback: bool,
    /// Proof step `rcv < f0^-b(c)` (monotone combinatorics).
    pub rcv_below_pullback: bool,
    /// The pullback `f0^-b(c)` dominating `rcv`.
    pub f0_pullback: T,
    /// `eps` of the renormalized map.
    pub eps_r: T,
    /// Upper bound `theta alpha^(-b sigma / alpha^2)` on `eps(Rf)`.
    pub eps_r_upper: T,
    /// True if the upper bound holds.
    pub ub_ok: bool,
    /// Lower bound `alpha^(-b / alpha)` on `eps(Rf)`.
    pub eps_r_lower: T,
    /// True if the lower bound holds.
    pub lb_ok: bool,
    /// `rcv(Rf)`, whose distance from 1 gates the lower bound.
    pub rcv_r: T,
    /// Koebe-space exponent `t = -1 + a / (alpha - 1)`.
    pub t_exponent: T,
    /// `eps^t`, the distortion scale of the renormalized factors.
    pub eps_pow_t: T,
    /// Sampled distortion of `phi(Rf)`.
    pub dist_phi_r: T,
    /// Sampled distortion of `psi(Rf)`.
    pub dist_psi_r: T,
    /// Implied constant `dist phi(Rf) / eps^t`.
    pub implied_k_phi: T,
    /// Implied constant `dist psi(Rf) / eps^t`.
    pub implied_k_psi: T,
}

/// Evaluates the concrete inequalities from the invariance propositions.
///
/// Renormalizes `f` with type `(a, b)` and reports: the critical-value
/// bound `1 - lcv < K eps^2` as a ratio, the monotone-combinatorics
/// pullback comparisons, the window `alpha^(-b/alpha) <= eps(Rf) <= theta
/// alpha^(-b sigma/alpha^2)`, and the distortion bound `dist <= K eps^t`
/// with `t = -1 + a/(alpha - 1)` as implied constants.
pub fn verify_lemma_bounds<T: Real>(
    f: &LorenzMap<T>,
    a: u32,
    b: u32,
    sigma: T,
    theta: T,
) -> Result<LemmaReport<T>> {
    let rs = detect(f, a, b)?;
    let rf = renormalize(f, &rs)?;
    let alpha = f.alpha();
    let eps = f.eps();
    let lcv = f.lcv();
    let rcv = f.rcv();
    let c = f.c();
    let f1_pull = f.inverse_branch(Branch::Right, c)?;
    let mut f0_pull = c;
    for _ in 0..b {
        f0_pull = f.inverse_branch(Branch::Left, f0_pull)?;
    }
    let b_t = count::<T>(b as usize);
    let eps_r = rf.eps();
    let eps_r_upper = theta * alpha.powf(-b_t * sigma / (alpha * alpha));
    let eps_r_lower = alpha.powf(-b_t / alpha);
    let t_exponent = -T::one() + count::<T>(a as usize) / (alpha - T::one());
    let eps_pow_t = eps.powf(t_exponent);
    let unit = Interval::unit();
    let dist_phi_r = rf.phi().compose().distortion_on(unit);
    let dist_psi_r = rf.psi().compose().distortion_on(unit);
    Ok(LemmaReport {
        a,
        b,
        eps,
        lcv,
        rcv,
        crit_ratio: (T::one() - lcv) / (eps * eps),
        lcv_above_pullback: lcv > f1_pull,
        rcv_below_pullback: rcv < f0_pull,
        f0_pullback: f0_pull,
        eps_r,
        eps_r_upper,
        ub_ok: eps_r <= eps_r_upper,
        eps_r_lower,
        lb_ok: eps_r >= eps_r_lower,
        rcv_r: rf.rcv(),
        t_exponent,
        eps_pow_t,
        dist_phi_r,
        dist_psi_r,
        implied_k_phi: dist_phi_r / eps_pow_t,
        implied_k_psi: dist_psi_r / eps_pow_t,
    })
}
