//! Parameter-plane machinery for two-parameter Lorenz families.
//!
//! A *slice* freezes the critical point, the exponent and the two
//! diffeomorphism factors, leaving the family `lambda = (u, v) -> F_lambda`
//! over the parameter square `[0, 1]^2`. For a type `omega = (a, b)` the
//! set of `omega`-renormalizable parameters has connected components
//! (*islands*) mapped diffeomorphically onto the normalized square
//! `S = [1/2, 1]^2` by
//!
//! ```text
//! lambda -> pi_S(lcv(Rf), 1 - rcv(Rf), c(Rf)),
//! pi_S(x, y, c) = (1 - (1-x)/(2(1-c)), 1 - (1-y)/(2c)),
//! ```
//!
//! the normalized heights of the renormalized branches: `1/2` on a
//! coordinate means the branch is trivial, `1` that it is full. Island
//! boundaries are therefore trivial/full critical-orbit conditions; the
//! trivial ones are explicit curves computed by pulling the critical point
//! back through one inverse branch ([`triv_left_curve`],
//! [`triv_right_curve`]).
//!
//! [`island_solve`] inverts the island diffeomorphism by nested
//! one-dimensional root finding, exploiting the monotone family structure
//! (increasing `u` raises the left branch, increasing `v` raises the
//! inverted right branch). [`cascade`] chains solves through successive
//! renormalizations to approximate infinitely renormalizable parameters,
//! and [`fixed_point_approx`] extracts a near-fixed point of the operator
//! from a deep constant-type cascade. [`jacobian_fd`] and [`cone_check`]
//! probe the derivative of the operator by central finite differences.

use crate::decomp::Decomposition;
use crate::diffeo::{Diffeo, Interval};
use crate::lorenz::{Branch, LorenzMap};
use crate::renorm::{detect, renormalize, renormalize_seq};
use crate::{count, lit, tol, Error, Real, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Center of the normalized square, the default solve target.
pub const S_CENTER: (f64, f64) = (0.75, 0.75);

/// A two-parameter family: everything but `(u, v)` frozen.
#[derive(Clone, Debug)]
pub struct Slice<T> {
    alpha: T,
    c: T,
    phi: Decomposition<T>,
    psi: Decomposition<T>,
}

impl<T: Real> Slice<T> {
    /// Builds a slice, validating the frozen coordinates.
    pub fn new(alpha: T, c: T, phi: Decomposition<T>, psi: Decomposition<T>) -> Result<Self> {
        LorenzMap::new(alpha, T::one(), T::one(), c, phi.clone(), psi.clone())?;
        Ok(Slice { alpha, c, phi, psi })
    }

    /// Slice with identity diffeomorphism factors.
    pub fn standard(alpha: T, c: T) -> Result<Self> {
        let id = Decomposition::identity(alpha)?;
        Slice::new(alpha, c, id.clone(), id)
    }

    /// Critical exponent.
    pub fn alpha(&self) -> T {
        self.alpha
    }

    /// Frozen critical point.
    pub fn c(&self) -> T {
        self.c
    }

    /// Frozen left factor.
    pub fn phi(&self) -> &Decomposition<T> {
        &self.phi
    }

    /// Frozen right factor.
    pub fn psi(&self) -> &Decomposition<T> {
        &self.psi
    }

    /// The family member at `lambda = (u, v)`.
    pub fn map_at(&self, u: T, v: T) -> Result<LorenzMap<T>> {
        LorenzMap::new(self.alpha, u, v, self.c, self.phi.clone(), self.psi.clone())
    }
}

/// Plain-data JSON form of a double-precision slice.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SliceSpec {
    /// Critical exponent.
    pub alpha: f64,
    /// Frozen critical point.
    pub c: f64,
    /// Signatures of the frozen left factor.
    #[serde(default)]
    pub phi: Vec<f64>,
    /// Signatures of the frozen right factor.
    #[serde(default)]
    pub psi: Vec<f64>,
}

impl SliceSpec {
    /// Validates and builds the described slice.
    pub fn build(&self) -> Result<Slice<f64>> {
        Slice::new(
            self.alpha,
            self.c,
            Decomposition::from_signatures(self.alpha, &self.phi)?,
            Decomposition::from_signatures(self.alpha, &self.psi)?,
        )
    }
}

/// Normalized position `pi_S(lcv, 1 - rcv, c)` of a map in `S`.
///
/// Both coordinates are `1/2` exactly when the branch is trivial
/// (critical value at the critical point) and `1` when it is full.
pub fn s_position<T: Real>(f: &LorenzMap<T>) -> (T, T) {
    let two = lit::<T>(2.0);
    let first = T::one() - (T::one() - f.lcv()) / (two * (T::one() - f.c()));
    let second = T::one() - f.rcv() / (two * f.c());
    (first, second)
}

/// Renormalized position map: `pi_S o H o R` at `lambda`.
///
/// Fails with the detection error when `F_lambda` is not
/// `omega`-renormalizable (off the archipelago).
pub fn r_map<T: Real>(slice: &Slice<T>, lambda: (T, T), omega: (u32, u32)) -> Result<(T, T)> {
    let f = slice.map_at(lambda.0, lambda.1)?;
    let rs = detect(&f, omega.0, omega.1)?;
    Ok(s_position(&renormalize(&f, &rs)?))
}

/// 2x2 finite-difference Jacobian of [`r_map`] at an interior point.
pub fn r_map_jacobian<T: Real>(
    slice: &Slice<T>,
    lambda: (T, T),
    omega: (u32, u32),
    h: T,
) -> Result<[[T; 2]; 2]> {
    let up = r_map(slice, (lambda.0 + h, lambda.1), omega)?;
    let um = r_map(slice, (lambda.0 - h, lambda.1), omega)?;
    let vp = r_map(slice, (lambda.0, lambda.1 + h), omega)?;
    let vm = r_map(slice, (lambda.0, lambda.1 - h), omega)?;
    let two_h = h + h;
    Ok([
        [(up.0 - um.0) / two_h, (vp.0 - vm.0) / two_h],
        [(up.1 - um.1) / two_h, (vp.1 - vm.1) / two_h],
    ])
}

fn curve_undefined(e: Error) -> Error {
    match e {
        Error::NoPreimage(d) => Error::Domain(format!("curve undefined here: {d}")),
        other => other,
    }
}

/// Trivial-left boundary curve: the `u` with `F^(a+1)(c-) = c` at this `v`.
///
/// Closed form `u = phi^-1((psi o Q1)^-a (c))`; independent of `u` because
/// the left critical orbit only traverses the right branch. Fails where a
/// pullback leaves `(c, 1)`.
pub fn triv_left_curve<T: Real>(slice: &Slice<T>, a: u32, v: T) -> Result<T> {
    let f = slice.map_at(T::one(), v)?;
    let mut t = slice.c();
    for _ in 0..a {
        t = f.inverse_branch(Branch::Right, t).map_err(curve_undefined)?;
    }
    Ok(f.phi().compose().inverse(t))
}

/// Trivial-right boundary curve: the `v` with `F^(b+1)(c+) = c` at this `u`.
///
/// Closed form `v = 1 - psi^-1((phi o Q0)^-b (c))`. Fails where a pullback
/// leaves `(0, c)`.
pub fn triv_right_curve<T: Real>(slice: &Slice<T>, b: u32, u: T) -> Result<T> {
    let f = slice.map_at(u, T::one())?;
    let mut z = slice.c();
    for _ in 0..b {
        z = f.inverse_branch(Branch::Left, z).map_err(curve_undefined)?;
    }
    Ok(T::one() - f.psi().compose().inverse(z))
}

/// One sampled point of a trivial-boundary curve.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CurvePoint<T> {
    /// The free parameter (`v` for the left curve, `u` for the right).
    pub param: T,
    /// Solved `u`.
    pub u: T,
    /// Solved `v`.
    pub v: T,
    /// Defining-property residual `|F^(n+1)(c-+) - c|`.
    pub residual: T,
}

/// Samples the trivial-left curve on a uniform parameter grid.
///
/// Points where the curve is undefined are skipped.
pub fn sample_triv_left<T: Real>(slice: &Slice<T>, a: u32, n: usize) -> Vec<CurvePoint<T>> {
    let mut out = Vec::new();
    for k in 0..n {
        let v = lit::<T>(1e-3)
            + (T::one() - lit(1e-3)) * count::<T>(k) / count::<T>(n.max(2) - 1);
        if let Ok(u) = triv_left_curve(slice, a, v) {
            if let Ok(f) = slice.map_at(u, v) {
                let mut y = f.lcv();
                for _ in 0..a {
                    y = f.branch_eval(Branch::Right, y);
                }
                out.push(CurvePoint { param: v, u, v, residual: (y - slice.c()).abs() });
            }
        }
    }
    out
}

/// Samples the trivial-right curve on a uniform parameter grid.
pub fn sample_triv_right<T: Real>(slice: &Slice<T>, b: u32, n: usize) -> Vec<CurvePoint<T>> {
    let mut out = Vec::new();
    for k in 0..n {
        let u = lit::<T>(1e-3)
            + (T::one() - lit(1e-3)) * count::<T>(k) / count::<T>(n.max(2) - 1);
        if let Ok(v) = triv_right_curve(slice, b, u) {
            if v > T::zero() && v <= T::one() {
                if let Ok(f) = slice.map_at(u, v) {
                    let mut y = f.rcv();
                    for _ in 0..b {
                        y = f.branch_eval(Branch::Left, y);
                    }
                    out.push(CurvePoint { param: u, u, v, residual: (y - slice.c()).abs() });
                }
            }
        }
    }
    out
}

/// Result of an island (or cascade-stage) solve.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct IslandSolution<T> {
    /// Solved parameter `(u, v)`.
    pub lambda: (T, T),
    /// Position of the deepest renormalization at `lambda`.
    pub position: (T, T),
    /// Max-norm distance from the target.
    pub residual: T,
    /// Number of objective evaluations spent.
    pub evals: usize,
}

/// Bounding data for one island of a cascade.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct IslandBox<T> {
    /// Type solved at this depth.
    pub omega: (u32, u32),
    /// Cascade depth (0 for the base island).
    pub depth: u32,
    /// Measured feasible extent in `u` through the solved point.
    pub u_rect: Interval<T>,
    /// Measured feasible extent in `v` through the solved point.
    pub v_rect: Interval<T>,
    /// The deep cascade parameter; interior to every box of the cascade.
    pub lambda: (T, T),
}

impl<T: Real> IslandBox<T> {
    /// Largest side of the bounding rectangle.
    pub fn diameter(&self) -> T {
        self.u_rect.len().max(self.v_rect.len())
    }
}

/// Nested solver state for one position objective.
///
/// The objective is `lambda -> s_position(R^m F_lambda)` where `m` is the
/// length of `chain`; a probe is infeasible when any detection in the
/// chain fails. The outer loop roots the first coordinate in `u`, the
/// inner loop the second coordinate in `v`, both by bracket marching plus
/// Illinois iteration.
struct PositionSolver<'s, T: Real> {
    slice: &'s Slice<T>,
    chain: Vec<(u32, u32)>,
    target: (T, T),
    u_range: (T, T),
    v_range: (T, T),
    u_step: T,
    v_step: T,
    warm_v: Option<T>,
    evals: usize,
    /// Accepted final residual; deep cascade levels widen this to the
    /// parameter-quantization floor of the position objective.
    residual_cap: T,
}

/// Convergence tolerance of the inner (second-coordinate) solve.
const INNER_FTOL: f64 = 2e-9;
/// Convergence tolerance of the outer (first-coordinate) solve.
const OUTER_FTOL: f64 = 6e-9;
/// A coordinate solve that stalls at the feasibility boundary is accepted
/// if its residual is below this (boundary targets).
const BOUNDARY_FTOL: f64 = 1e-7;

impl<'s, T: Real> PositionSolver<'s, T> {
    fn eval(&mut self, u: T, v: T) -> Option<(T, T)> {
        self.evals += 1;
        let f = self.slice.map_at(u, v).ok()?;
        let (g, _) = renormalize_seq(&f, &self.chain).ok()?;
        Some(s_position(&g))
    }

    fn clamp_u(&self, u: T) -> T {
        u.max(self.u_range.0).min(self.u_range.1)
    }

    fn clamp_v(&self, v: T) -> T {
        v.max(self.v_range.0).min(self.v_range.1)
    }

    /// Finds a feasible `v` at this `u`, trying the seed, offsets, then a grid.
    fn feasible_v(&mut self, u: T, seed: T) -> Option<(T, (T, T))> {
        let seed = self.clamp_v(seed);
        if let Some(p) = self.eval(u, seed) {
            return Some((seed, p));
        }
        for k in 1..=6 {
            for sgn in [T::one(), -T::one()] {
                let v = self.clamp_v(seed + sgn * count::<T>(k) * self.v_step);
                if let Some(p) = self.eval(u, v) {
                    return Some((v, p));
                }
            }
        }
        let n = 33;
        for k in 0..n {
            let v = self.v_range.0
                + (self.v_range.1 - self.v_range.0) * count::<T>(k) / count::<T>(n - 1);
            if let Some(p) = self.eval(u, v) {
                return Some((v, p));
            }
        }
        None
    }

    /// Solves the second coordinate in `v` at fixed `u`.
    ///
    /// Returns the solved `v` and the full position there; `None` when no
    /// feasible bracket exists at this `u`.
    fn inner(&mut self, u: T, seed: T) -> Option<(T, (T, T))> {
        let ftol = lit::<T>(INNER_FTOL);
        let (mut v0, mut p0) = self.feasible_v(u, seed)?;
        let mut s0 = p0.1 - self.target.1;
        if s0.abs() < ftol {
            return Some((v0, p0));
        }
        // March towards a sign change; the second coordinate increases in v.
        let mut step = self.v_step;
        let dir = if s0 < T::zero() { T::one() } else { -T::one() };
        let mut bracket = None;
        for _ in 0..400 {
            let v1 = self.clamp_v(v0 + dir * step);
            if v1 == v0 {
                break;
            }
            match self.eval(u, v1) {
                None => {
                    step = step / lit(2.0);
                    if step < lit(1e-13) {
                        break;
                    }
                }
                Some(p1) => {
                    let s1 = p1.1 - self.target.1;
                    if s1.abs() < ftol {
                        return Some((v1, p1));
                    }
                    if (s1 > T::zero()) != (s0 > T::zero()) {
                        bracket = Some((v0, s0, v1, s1, p1));
                        break;
                    }
                    v0 = v1;
                    s0 = s1;
                    p0 = p1;
                    step = (step * lit(1.4)).min(self.v_step * lit(8.0));
                }
            }
        }
        let (mut lo, mut flo, mut hi, mut fhi, mut pbest) = match bracket {
            Some(t) => t,
            None => {
                // Stalled at the feasibility boundary: acceptable only for
                // boundary targets.
                return (s0.abs() < lit(BOUNDARY_FTOL)).then_some((v0, p0));
            }
        };
        if lo > hi {
            core::mem::swap(&mut lo, &mut hi);
            core::mem::swap(&mut flo, &mut fhi);
        }
        // Illinois iteration on [lo, hi].
        let mut side = 0i32;
        for _ in 0..80 {
            if (hi - lo).abs() < lit(1e-16) {
                break;
            }
            let mut vm = lo - flo * (hi - lo) / (fhi - flo);
            let w = hi - lo;
            vm = vm.max(lo + w * lit(0.01)).min(hi - w * lit(0.01));
            let pm = match self.eval(u, vm) {
                Some(p) => p,
                None => match self.eval(u, (lo + hi) / lit(2.0)) {
                    Some(p) => {
                        vm = (lo + hi) / lit(2.0);
                        p
                    }
                    None => return None,
                },
            };
            let fm = pm.1 - self.target.1;
            if fm.abs() < ftol {
                return Some((vm, pm));
            }
            pbest = pm;
            if (fm > T::zero()) == (fhi > T::zero()) {
                hi = vm;
                fhi = fm;
                if side == 1 {
                    flo = flo / lit(2.0);
                }
                side = 1;
            } else {
                lo = vm;
                flo = fm;
                if side == -1 {
                    fhi = fhi / lit(2.0);
                }
                side = -1;
            }
        }
        let vm = (lo + hi) / lit(2.0);
        let pm = self.eval(u, vm).unwrap_or(pbest);
        ((pm.1 - self.target.1).abs() < lit(BOUNDARY_FTOL)).then_some((vm, pm))
    }

    fn inner_warm(&mut self, u: T) -> Option<(T, (T, T))> {
        let seed = self.warm_v.unwrap_or((self.v_range.0 + self.v_range.1) / lit(2.0));
        let res = self.inner(u, seed);
        if let Some((v, _)) = res {
            self.warm_v = Some(v);
        }
        res
    }

    /// Full nested solve from a seed parameter.
    fn solve(&mut self, seed: (T, T)) -> Result<IslandSolution<T>> {
        let ftol = lit::<T>(OUTER_FTOL);
        self.warm_v = Some(self.clamp_v(seed.1));
        let mut u0 = self.clamp_u(seed.0);
        let (_, p0) = match self.inner_warm(u0) {
            Some(r) => r,
            None => {
                // Seed rescue: scan u columns outward from the seed until
                // one admits an inner solve (near the island tips the
                // second coordinate cannot reach every target).
                let n = 48;
                let span = self.u_range.1 - self.u_range.0;
                let mut found = None;
                'scan: for k in 1..=n {
                    for sgn in [T::one(), -T::one()] {
                        let u = self.clamp_u(u0 + sgn * span * count::<T>(k) / count::<T>(n));
                        self.warm_v = Some(self.clamp_v(seed.1));
                        if let Some(r) = self.inner_warm(u) {
                            found = Some((u, r));
                            break 'scan;
                        }
                    }
                }
                let (u, r) = found.ok_or_else(|| {
                    Error::SolverFailed("no island found within the search bounds".into())
                })?;
                u0 = u;
                r
            }
        };
        let mut t0 = p0.0 - self.target.0;
        let mut step = self.u_step;
        let mut dir = if t0 < T::zero() { T::one() } else { -T::one() };
        let mut bracket = None;
        let mut worse = 0;
        if t0.abs() >= ftol {
            for _ in 0..400 {
                let u1 = self.clamp_u(u0 + dir * step);
                if u1 == u0 {
                    break;
                }
                match self.inner_warm(u1) {
                    None => {
                        step = step / lit(2.0);
                        if step < lit(1e-13) {
                            break;
                        }
                    }
                    Some((_, p1)) => {
                        let t1 = p1.0 - self.target.0;
                        if t1.abs() < ftol {
                            u0 = u1;
                            t0 = t1;
                            break;
                        }
                        if (t1 > T::zero()) != (t0 > T::zero()) {
                            bracket = Some((u0, t0, u1, t1));
                            break;
                        }
                        // Reverse once if the march moves away from the target.
                        if t1.abs() > t0.abs() {
                            worse += 1;
                            if worse == 4 {
                                dir = -dir;
                            }
                        } else {
                            worse = 0;
                        }
                        u0 = u1;
                        t0 = t1;
                        step = (step * lit(1.4)).min(self.u_step * lit(8.0));
                    }
                }
            }
        }
        if t0.abs() >= ftol {
            if let Some((mut lo, mut flo, mut hi, mut fhi)) = bracket {
                if lo > hi {
                    core::mem::swap(&mut lo, &mut hi);
                    core::mem::swap(&mut flo, &mut fhi);
                }
                let mut side = 0i32;
                for _ in 0..80 {
                    if (hi - lo).abs() < lit(1e-15) {
                        break;
                    }
                    let mut um = lo - flo * (hi - lo) / (fhi - flo);
                    let w = hi - lo;
                    um = um.max(lo + w * lit(0.01)).min(hi - w * lit(0.01));
                    let (_, pm) = match self.inner_warm(um) {
                        Some(r) => r,
                        None => match self.inner_warm((lo + hi) / lit(2.0)) {
                            Some(r) => {
                                um = (lo + hi) / lit(2.0);
                                r
                            }
                            None => break,
                        },
                    };
                    let fm = pm.0 - self.target.0;
                    u0 = um;
                    if fm.abs() < ftol {
                        break;
                    }
                    if (fm > T::zero()) == (fhi > T::zero()) {
                        hi = um;
                        fhi = fm;
                        if side == 1 {
                            flo = flo / lit(2.0);
                        }
                        side = 1;
                    } else {
                        lo = um;
                        flo = fm;
                        if side == -1 {
                            fhi = fhi / lit(2.0);
                        }
                        side = -1;
                    }
                }
            }
        }
        // Re-solve the inner coordinate at the final u and report honestly.
        let (v_fin, p_fin) = self
            .inner_warm(u0)
            .ok_or_else(|| Error::SolverFailed("island solve lost feasibility at the end".into()))?;
        let residual =
            (p_fin.0 - self.target.0).abs().max((p_fin.1 - self.target.1).abs());
        let boundary = self.target.0 <= lit(0.5) || self.target.1 <= lit(0.5);
        let allowed =
            if boundary { lit::<T>(BOUNDARY_FTOL).max(self.residual_cap) } else { self.residual_cap };
        if residual > allowed {
            return Err(Error::SolverFailed(format!(
                "island solve stalled at residual {residual} (target {:?})",
                (self.target.0, self.target.1)
            )));
        }
        Ok(IslandSolution {
            lambda: (u0, v_fin),
            position: p_fin,
            residual,
            evals: self.evals,
        })
    }
}

/// Corner of the island: intersection of the two trivial curves.
fn corner_hunt<T: Real>(slice: &Slice<T>, a: u32, b: u32) -> Option<(T, T)> {
    'start: for start in [0.97, 0.9, 0.8, 0.65, 0.5, 0.99] {
        let mut u = lit::<T>(start);
        let mut v = T::zero();
        for _ in 0..500 {
            let vn = match triv_right_curve(slice, b, u) {
                Ok(vn) if vn > T::zero() && vn <= T::one() => vn,
                _ => continue 'start,
            };
            let un = match triv_left_curve(slice, a, vn) {
                Ok(un) if un > T::zero() && un <= T::one() => un,
                _ => continue 'start,
            };
            let moved = (un - u).abs() + (vn - v).abs();
            u = un;
            v = vn;
            if moved < lit(1e-12) {
                break;
            }
        }
        // Reject the degenerate wedge corner where lcv collapses onto c.
        if let Ok(f) = slice.map_at(u, v) {
            if f.lcv() - slice.c() > lit(1e-6) {
                return Some((u, v));
            }
        }
    }
    None
}

fn island_bounds<T: Real>(corner: (T, T)) -> ((T, T), (T, T)) {
    let lo = lit::<T>(1e-9);
    let hi = T::one();
    let u_range = ((corner.0 - lit(0.05)).max(lo), (corner.0 + lit(0.5)).min(hi));
    let v_range = ((corner.1 - lit(0.05)).max(lo), (corner.1 + lit(0.5)).min(hi));
    (u_range, v_range)
}

/// Solves `R_map(slice, lambda, omega) = target` for `lambda`.
///
/// The search is seeded at the intersection corner of the two trivial
/// curves and marches into the island; the returned parameter satisfies
/// `|R_map(lambda) - target| < 1e-8` in max norm (`1e-7` for targets on
/// the boundary of `S`, which are limits of the feasible region).
pub fn island_solve<T: Real>(
    slice: &Slice<T>,
    omega: (u32, u32),
    target: (T, T),
) -> Result<IslandSolution<T>> {
    let slack = lit::<T>(1e-9);
    for t in [target.0, target.1] {
        if !(t >= lit::<T>(0.5) - slack && t <= T::one() + slack) {
            return Err(Error::InvalidInput(format!(
                "target coordinate {t} outside the normalized square [1/2, 1]^2"
            )));
        }
    }
    let corner = corner_hunt(slice, omega.0, omega.1);
    let (u_range, v_range) = match corner {
        Some(c) => island_bounds(c),
        None => ((lit(0.02), T::one()), (lit(0.02), T::one())),
    };
    let mut solver = PositionSolver {
        slice,
        chain: vec![omega],
        target,
        u_range,
        v_range,
        u_step: lit(0.004),
        v_step: lit(0.004),
        warm_v: None,
        evals: 0,
        residual_cap: lit(tol::ISLAND_RESIDUAL),
    };
    let seed = match corner {
        Some((cu, cv)) => {
            // Probe diagonally inward from the corner for a feasible seed.
            let mut found = None;
            'hunt: for t in [0.002, 0.004, 0.008, 0.013, 0.02, 0.03, 0.045, 0.07, 0.1, 0.15] {
                for r in [1.0, 0.5, 2.0] {
                    let u = solver.clamp_u(cu + lit(t));
                    let v = solver.clamp_v(cv + lit::<T>(t) * lit(r));
                    if solver.eval(u, v).is_some() {
                        found = Some((u, v));
                        break 'hunt;
                    }
                }
            }
            found.unwrap_or((cu + lit(0.01), cv + lit(0.01)))
        }
        None => (lit(0.5), lit(0.5)),
    };
    solver.solve(seed)
}

/// Result of a cascade of island solves.
#[derive(Clone, Debug, Serialize)]
pub struct CascadeResult<T> {
    /// The deep parameter: all requested types detect in order here.
    pub lambda: (T, T),
    /// One nested box per depth.
    pub boxes: Vec<IslandBox<T>>,
    /// Total objective evaluations spent.
    pub evals: usize,
}

/// Measures the feasible axis extents through `lambda` for one chain.
///
/// `lambda` must be feasible and lie inside `outer`; the returned extents
/// are bisected between `lambda` and the `outer` bounds, so they always
/// contain `lambda` and stay inside `outer`.
fn axis_extents<T: Real>(
    slice: &Slice<T>,
    chain: &[(u32, u32)],
    lambda: (T, T),
    outer: ((T, T), (T, T)),
) -> Result<((T, T), (T, T))> {
    let feasible = |u: T, v: T| -> bool {
        slice
            .map_at(u, v)
            .ok()
            .and_then(|f| renormalize_seq(&f, chain).ok())
            .is_some()
    };
    if !feasible(lambda.0, lambda.1) {
        return Err(Error::SolverFailed("box probe: center is not feasible".into()));
    }
    let edge = |mut inside: T, mut outside: T, along_u: bool| -> T {
        let other = if along_u { lambda.1 } else { lambda.0 };
        let probe = |x: T| if along_u { feasible(x, other) } else { feasible(other, x) };
        if probe(outside) {
            return outside;
        }
        for _ in 0..60 {
            if (outside - inside).abs() < lit(1e-14) {
                break;
            }
            let mid = (inside + outside) / lit(2.0);
            if probe(mid) {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        inside
    };
    let u_lo = edge(lambda.0, outer.0 .0.min(lambda.0), true);
    let u_hi = edge(lambda.0, outer.0 .1.max(lambda.0), true);
    let v_lo = edge(lambda.1, outer.1 .0.min(lambda.1), false);
    let v_hi = edge(lambda.1, outer.1 .1.max(lambda.1), false);
    Ok(((u_lo, u_hi), (v_lo, v_hi)))
}

/// Quantization floor of the position objective over a search span.
///
/// Across an island of width `span` the position sweeps order one, so a
/// single ulp of the parameter moves the position by roughly `eps / span`;
/// residuals below a few of those steps are not resolvable.
fn position_quantization<T: Real>(span: T) -> T {
    lit::<T>(8.0) * lit::<T>(f64::EPSILON) / span.max(lit(1e-15))
}

/// Chases an infinitely renormalizable parameter through nested islands.
///
/// At depth `j` the solver roots `s_position(R^(j+1) F_lambda)`, seeded at
/// the previous depth's solution. Intermediate depths target the
/// S-footprint of the next type's island (the position a map must occupy
/// for the next detection to succeed); the final depth targets the center
/// of `S`. Accepted residuals widen at deep levels to the position
/// quantization floor of double precision. Once the deep parameter is
/// found, the feasibility box of every depth is measured through it; each
/// extent search is confined to its parent box, so the boxes nest by
/// construction and all contain the returned parameter.
pub fn cascade<T: Real>(slice: &Slice<T>, types: &[(u32, u32)]) -> Result<CascadeResult<T>> {
    if types.is_empty() {
        return Err(Error::InvalidInput("cascade needs at least one type".into()));
    }
    let center = (lit::<T>(S_CENTER.0), lit::<T>(S_CENTER.1));
    let mut footprints: BTreeMap<(u32, u32), (T, T)> = BTreeMap::new();
    let mut evals = 0usize;
    // S-footprint of a type: the raw position of island-center maps.
    let mut footprint = |omega: (u32, u32), evals: &mut usize| -> Result<(T, T)> {
        if let Some(&fp) = footprints.get(&omega) {
            return Ok(fp);
        }
        let sol = island_solve(slice, omega, center)?;
        *evals += sol.evals;
        let fp = s_position(&slice.map_at(sol.lambda.0, sol.lambda.1)?);
        footprints.insert(omega, fp);
        Ok(fp)
    };

    // Stage one: chase the parameter down the island tower. The search
    // range of each depth comes from the feasible extents of the previous
    // depth's solution, padded to absorb drift.
    let mut lambda;
    let mut u_range: (T, T) = (lit(1e-9), T::one());
    let mut v_range: (T, T) = (lit(1e-9), T::one());
    {
        let target0 =
            if types.len() > 1 { footprint(types[1], &mut evals)? } else { center };
        let sol0 = island_solve(slice, types[0], target0)?;
        evals += sol0.evals;
        lambda = sol0.lambda;
    }
    for j in 1..types.len() {
        let (u_ext, v_ext) =
            axis_extents(slice, &types[0..j], lambda, (u_range, v_range))?;
        let floor = lit::<T>(64.0) * lit::<T>(f64::EPSILON);
        let pad_u = ((u_ext.1 - u_ext.0) * lit(0.3)).max(floor);
        let pad_v = ((v_ext.1 - v_ext.0) * lit(0.3)).max(floor);
        u_range = ((u_ext.0 - pad_u).max(lit(1e-9)), (u_ext.1 + pad_u).min(T::one()));
        v_range = ((v_ext.0 - pad_v).max(lit(1e-9)), (v_ext.1 + pad_v).min(T::one()));
        let span = (u_range.1 - u_range.0).min(v_range.1 - v_range.0);
        let cap = lit::<T>(tol::ISLAND_RESIDUAL).max(position_quantization(span));
        let target = if j + 1 < types.len() {
            footprint(types[j + 1], &mut evals)?
        } else {
            center
        };
        let chain: Vec<(u32, u32)> = types[0..=j].to_vec();
        let mut solver = PositionSolver {
            slice,
            chain: chain.clone(),
            target,
            u_range,
            v_range,
            u_step: ((u_ext.1 - u_ext.0) * lit(0.04)).max(lit(1e-13)),
            v_step: ((v_ext.1 - v_ext.0) * lit(0.04)).max(lit(1e-13)),
            warm_v: None,
            evals: 0,
            residual_cap: cap,
        };
        let sol = match solver.solve(lambda) {
            Ok(s) => s,
            Err(_) => {
                // Footprint drift rescue: recompute the footprint on the
                // current renormalized slice and re-seed.
                let f = slice.map_at(lambda.0, lambda.1)?;
                let (g, _) = renormalize_seq(&f, &types[0..j])?;
                let drifted = Slice::new(g.alpha(), g.c(), g.phi().clone(), g.psi().clone())?;
                let dsol = island_solve(&drifted, types[j], center)?;
                let fp = s_position(&drifted.map_at(dsol.lambda.0, dsol.lambda.1)?);
                let mut reseed = PositionSolver {
                    slice,
                    chain: types[0..j].to_vec(),
                    target: fp,
                    u_range,
                    v_range,
                    u_step: solver.u_step,
                    v_step: solver.v_step,
                    warm_v: None,
                    evals: 0,
                    residual_cap: cap,
                };
                let rsol = reseed.solve(lambda)?;
                evals += reseed.evals + dsol.evals;
                solver.warm_v = None;
                solver.evals = 0;
                solver.solve(rsol.lambda)?
            }
        };
        evals += solver.evals;
        lambda = sol.lambda;
    }

    // Stage two: measure every depth's box through the deep parameter,
    // which is interior to the whole island tower.
    let mut boxes: Vec<IslandBox<T>> = Vec::with_capacity(types.len());
    let mut outer: ((T, T), (T, T)) = ((lit(1e-9), T::one()), (lit(1e-9), T::one()));
    for j in 0..types.len() {
        let (u_ext, v_ext) = axis_extents(slice, &types[0..=j], lambda, outer)?;
        let diameter = (u_ext.1 - u_ext.0).max(v_ext.1 - v_ext.0);
        if diameter < lit(tol::BOX_FLOOR) {
            return Err(Error::CapExceeded {
                steps: j,
                detail: format!(
                    "cascade box diameter {diameter} fell below the double-precision floor"
                ),
            });
        }
        boxes.push(IslandBox {
            omega: types[j],
            depth: j as u32,
            u_rect: Interval::new(u_ext.0, u_ext.1)?,
            v_rect: Interval::new(v_ext.0, v_ext.1)?,
            lambda,
        });
        outer = (u_ext, v_ext);
    }
    Ok(CascadeResult { lambda, boxes, evals })
}

/// Residual breakdown for a renormalization fixed-point approximation.
#[derive(Clone, Debug, Serialize)]
pub struct FixedPointReport<T> {
    /// Parameter of the underlying cascade.
    pub lambda: (T, T),
    /// Cascade depth used.
    pub depth: u32,
    /// Number of renormalizations applied to reach `f*`.
    pub m: u32,
    /// `|u(f*) - u(Rf*)|`.
    pub du: T,
    /// `|v(f*) - v(Rf*)|`.
    pub dv: T,
    /// `|c(f*) - c(Rf*)|`.
    pub dc: T,
    /// Sup of `|f*(x) - Rf*(x)|` on the sampling grid.
    pub sup_diff: T,
    /// Max of the four components.
    pub residual: T,
}

/// Approximates the fixed point of `R` with combinatorics `omega`.
///
/// Runs a constant-type cascade of the given depth, renormalizes the deep
/// parameter map `depth/2` times (the mid-cascade map is the most
/// converged), and measures the distance to its own renormalization: the
/// tuple deviations plus the sup difference on a 256-point grid. The grid
/// skips the convex hull of the two critical points padded by `1e-6`,
/// where branch disagreement would register the full jump; the critical
/// mismatch itself is already captured by the `dc` component.
pub fn fixed_point_approx<T: Real>(
    slice: &Slice<T>,
    omega: (u32, u32),
    depth: u32,
) -> Result<(LorenzMap<T>, FixedPointReport<T>)> {
    if depth < 2 {
        return Err(Error::InvalidInput("fixed-point approximation needs depth >= 2".into()));
    }
    let types = vec![omega; depth as usize];
    let casc = cascade(slice, &types)?;
    let f0 = slice.map_at(casc.lambda.0, casc.lambda.1)?;
    let m = depth / 2;
    let (f_star, _) = renormalize_seq(&f0, &types[0..m as usize])?;
    let rs = detect(&f_star, omega.0, omega.1)?;
    let rf = renormalize(&f_star, &rs)?;
    let du = (f_star.u() - rf.u()).abs();
    let dv = (f_star.v() - rf.v()).abs();
    let dc = (f_star.c() - rf.c()).abs();
    let mut sup = T::zero();
    let n = 256;
    let guard = lit::<T>(1e-6);
    let c_lo = f_star.c().min(rf.c()) - guard;
    let c_hi = f_star.c().max(rf.c()) + guard;
    for k in 0..n {
        let x = (count::<T>(k) + lit(0.5)) / count::<T>(n);
        if x > c_lo && x < c_hi {
            continue;
        }
        let d = (f_star.eval(x)? - rf.eval(x)?).abs();
        sup = sup.max(d);
    }
    let residual = du.max(dv).max(dc).max(sup);
    let report = FixedPointReport {
        lambda: casc.lambda,
        depth,
        m,
        du,
        dv,
        dc,
        sup_diff: sup,
        residual,
    };
    Ok((f_star, report))
}

/// A direction for finite-difference probing of the operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProbeDirection {
    /// Critical-point direction.
    C,
    /// Signature of the given left factor (inserted at the head if absent).
    PhiPiece(usize),
    /// Signature of the given right factor.
    PsiPiece(usize),
}

/// One extra finite-difference column of the operator derivative.
#[derive(Clone, Debug, Serialize)]
pub struct FdColumn<T> {
    /// Probed direction.
    pub direction: ProbeDirection,
    /// Step actually used after retries.
    pub h: T,
    /// Response of `u(Rf)`.
    pub d_u: T,
    /// Response of `v(Rf)`.
    pub d_v: T,
    /// Response of `c(Rf)`.
    pub d_c: T,
}

/// Central-difference derivative data of the renormalization operator.
#[derive(Clone, Debug, Serialize)]
pub struct FdJacobian<T> {
    /// Type used for every probe.
    pub omega: (u32, u32),
    /// Step used for the `u` column.
    pub h_u: T,
    /// Step used for the `v` column.
    pub h_v: T,
    /// Block `d(u', v') / d(u, v)`.
    pub m1: [[T; 2]; 2],
    /// Determinant of the block (positive on islands).
    pub det_m1: T,
    /// Extra sampled columns.
    pub columns: Vec<FdColumn<T>>,
}

impl<T: Real> FdJacobian<T> {
    /// The `c` column, if it was probed.
    pub fn c_column(&self) -> Option<&FdColumn<T>> {
        self.columns.iter().find(|c| c.direction == ProbeDirection::C)
    }
}

fn renorm_outputs<T: Real>(f: &LorenzMap<T>, omega: (u32, u32)) -> Result<(T, T, T)> {
    let rs = detect(f, omega.0, omega.1)?;
    let rf = renormalize(f, &rs)?;
    Ok((rf.u(), rf.v(), rf.c()))
}

/// Central difference with step shrinking when a probe changes type.
fn fd_column<T: Real>(
    f: &LorenzMap<T>,
    omega: (u32, u32),
    h0: T,
    modify: impl Fn(&LorenzMap<T>, T) -> Result<LorenzMap<T>>,
) -> Result<(T, (T, T, T))> {
    let mut h = h0;
    for _ in 0..=tol::FD_RETRIES {
        let probe = |d: T| modify(f, d).and_then(|g| renorm_outputs(&g, omega));
        match (probe(h), probe(-h)) {
            (Ok(p), Ok(m)) => {
                let two_h = h + h;
                return Ok((h, ((p.0 - m.0) / two_h, (p.1 - m.1) / two_h, (p.2 - m.2) / two_h)));
            }
            _ => h = h / lit(10.0),
        }
    }
    Err(Error::SolverFailed(
        "type change under probe: finite-difference step exhausted its retries".into(),
    ))
}

fn with_piece<T: Real>(d: &Decomposition<T>, idx: usize, delta: T) -> Result<Decomposition<T>> {
    let mut s = d.signatures();
    if s.is_empty() && idx == 0 {
        s.push(delta);
    } else if idx < s.len() {
        s[idx] += delta;
    } else {
        return Err(Error::InvalidInput(format!(
            "factor index {idx} out of range for {} pieces",
            s.len()
        )));
    }
    Decomposition::from_signatures(d.alpha(), &s)
}

/// Finite-difference Jacobian of `R`: the `(u, v)` block plus chosen columns.
///
/// Probes are central differences with relative step [`tol::FD_STEP`];
/// when a probe leaves the island (type change), the step shrinks tenfold,
/// up to [`tol::FD_RETRIES`] times.
pub fn jacobian_fd<T: Real>(
    f: &LorenzMap<T>,
    omega: (u32, u32),
    directions: &[ProbeDirection],
) -> Result<FdJacobian<T>> {
    detect(f, omega.0, omega.1)?;
    let rel = lit::<T>(tol::FD_STEP);
    let h_u0 = rel * f.u().abs().max(lit(0.1));
    let h_v0 = rel * f.v().abs().max(lit(0.1));
    let (h_u, col_u) = fd_column(f, omega, h_u0, |g, d| g.with_u(g.u() + d))?;
    let (h_v, col_v) = fd_column(f, omega, h_v0, |g, d| g.with_v(g.v() + d))?;
    let m1 = [[col_u.0, col_v.0], [col_u.1, col_v.1]];
    let det_m1 = m1[0][0] * m1[1][1] - m1[0][1] * m1[1][0];
    let mut columns = Vec::new();
    for &dir in directions {
        let (h, d) = match dir {
            ProbeDirection::C => {
                let h0 = rel * f.c().abs().max(lit(0.1));
                fd_column(f, omega, h0, |g, d| g.with_c(g.c() + d))?
            }
            ProbeDirection::PhiPiece(i) => {
                let base = f.phi().signatures().get(i).map_or(T::one(), |s| s.abs().max(T::one()));
                fd_column(f, omega, rel * base, |g, d| {
                    g.with_factors(with_piece(g.phi(), i, d)?, g.psi().clone())
                })?
            }
            ProbeDirection::PsiPiece(i) => {
                let base = f.psi().signatures().get(i).map_or(T::one(), |s| s.abs().max(T::one()));
                fd_column(f, omega, rel * base, |g, d| {
                    g.with_factors(g.phi().clone(), with_piece(g.psi(), i, d)?)
                })?
            }
        };
        columns.push(FdColumn { direction: dir, h, d_u: d.0, d_v: d.1, d_c: d.2 });
    }
    Ok(FdJacobian { omega, h_u, h_v, m1, det_m1, columns })
}

/// One sampled tangent vector pushed through the FD derivative.
#[derive(Clone, Debug, Serialize)]
pub struct ConeSample<T> {
    /// Parameter-block direction `(du, dv)`.
    pub x: (T, T),
    /// Signature pattern over the sampled factor slots.
    pub pattern: Vec<f64>,
    /// Input decomposition-block norm (scaled to `kappa * |x|`).
    pub y_norm_in: T,
    /// Output parameter-block norm `|du'| + |dv'|`.
    pub x_norm_out: T,
    /// Output decomposition-block norm (sup of nonlinearity differences).
    pub y_norm_out: T,
    /// `y_norm_out / x_norm_out`.
    pub ratio: T,
    /// `(x_norm_out + y_norm_out) / (x_norm_in + y_norm_in)`.
    pub expansion: T,
}

/// Cone-field diagnostic report.
#[derive(Clone, Debug, Serialize)]
pub struct ConeReport<T> {
    /// Cone opening `kappa` of the input vectors.
    pub kappa: T,
    /// Per-sample measurements.
    pub samples: Vec<ConeSample<T>>,
    /// Largest output ratio over the samples.
    pub max_ratio: T,
    /// Smallest expansion factor over the samples.
    pub min_expansion: T,
    /// True if every output ratio is below `kappa`.
    pub contracts: bool,
    /// True if every expansion factor exceeds 1.
    pub expands: bool,
}

fn nl_sup_diff<T: Real>(a: &Decomposition<T>, b: &Decomposition<T>) -> T {
    let ca = a.compose();
    let cb = b.compose();
    let n = tol::SUP_GRID_N;
    let mut sup = T::zero();
    for k in 0..n {
        let x = count::<T>(k) / count::<T>(n - 1);
        sup = sup.max((ca.nonlinearity(x) - cb.nonlinearity(x)).abs());
    }
    sup
}

/// Slots probed by [`cone_check`]: spread indices into both factor lists.
fn cone_slots<T: Real>(f: &LorenzMap<T>) -> Vec<(bool, usize)> {
    let mut slots = Vec::new();
    for (is_phi, len) in [(true, f.phi().len()), (false, f.psi().len())] {
        if len == 0 {
            continue;
        }
        let picks = [0, len / 2, len - 1];
        for p in picks {
            if !slots.contains(&(is_phi, p)) {
                slots.push((is_phi, p));
            }
        }
    }
    slots
}

/// Checks the invariant-cone behaviour of the FD derivative of `R`.
///
/// Vectors split into a parameter block `x = (du, dv)` (norm `|du| + |dv|`)
/// and a decomposition block `y` of signature perturbations (norm: sampled
/// sup of the induced nonlinearity change). Input vectors are scaled to
/// the cone boundary `|y| = kappa |x|`; for each sample the FD image is
/// measured and reported as the output ratio `|y'| / |x'|` and the overall
/// expansion `(|x'| + |y'|) / (|x| + |y|)`. On the renormalization cone
/// field the ratio drops below `kappa` and the expansion exceeds one.
pub fn cone_check<T: Real>(
    f: &LorenzMap<T>,
    omega: (u32, u32),
    kappa: T,
) -> Result<ConeReport<T>> {
    if !(kappa > T::zero()) {
        return Err(Error::InvalidInput("kappa must be positive".into()));
    }
    let slots = cone_slots(f);
    if slots.len() < 4 {
        return Err(Error::Insufficient(format!(
            "cone check needs at least 4 decomposition factors, found {}",
            slots.len()
        )));
    }
    detect(f, omega.0, omega.1)?;
    let x_dirs: [(f64, f64); 4] = [(1.0, 0.0), (0.0, 1.0), (0.5, 0.5), (0.5, -0.5)];
    let patterns: [&[f64]; 5] = [
        &[],
        &[1.0, 1.0, 1.0, 1.0, 1.0, 1.0],
        &[1.0, -1.0, 1.0, -1.0, 1.0, -1.0],
        &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        &[1.0, -1.0, -1.0, 1.0, 1.0, -1.0],
    ];
    let mut samples = Vec::new();
    for &(xu, xv) in &x_dirs {
        let x = (lit::<T>(xu), lit::<T>(xv));
        let x_norm = x.0.abs() + x.1.abs();
        for pat in patterns {
            let weights: Vec<T> = slots
                .iter()
                .enumerate()
                .map(|(k, _)| pat.get(k).copied().map_or(T::zero(), lit))
                .collect();
            let h = lit::<T>(tol::FD_STEP);
            // Scale the pattern so the input sits on the cone boundary.
            let perturb = |scale: T, d: T| -> Result<(Decomposition<T>, Decomposition<T>)> {
                let mut phi = f.phi().clone();
                let mut psi = f.psi().clone();
                for (k, &(is_phi, idx)) in slots.iter().enumerate() {
                    let delta = d * scale * weights[k];
                    if delta != T::zero() {
                        if is_phi {
                            phi = with_piece(&phi, idx, delta)?;
                        } else {
                            psi = with_piece(&psi, idx, delta)?;
                        }
                    }
                }
                Ok((phi, psi))
            };
            let unit_norm = {
                let (pp, sp) = perturb(T::one(), h)?;
                let (pm, sm) = perturb(T::one(), -h)?;
                (nl_sup_diff(&pp, &pm) + nl_sup_diff(&sp, &sm)) / (h + h)
            };
            let is_zero_pattern = weights.iter().all(|w| *w == T::zero());
            if is_zero_pattern != (unit_norm == T::zero()) {
                return Err(Error::SolverFailed("cone pattern norm degenerated".into()));
            }
            let scale = if is_zero_pattern { T::zero() } else { kappa * x_norm / unit_norm };
            let y_norm_in = if is_zero_pattern { T::zero() } else { kappa * x_norm };

            // FD image of the combined vector, shrinking on type change.
            let mut h_try = h;
            let mut image = None;
            for _ in 0..=tol::FD_RETRIES {
                let probe = |d: T| -> Result<LorenzMap<T>> {
                    let (phi, psi) = perturb(scale, d)?;
                    LorenzMap::new(
                        f.alpha(),
                        f.u() + d * x.0,
                        f.v() + d * x.1,
                        f.c(),
                        phi,
                        psi,
                    )
                };
                let run = |d: T| -> Result<LorenzMap<T>> {
                    let g = probe(d)?;
                    let rs = detect(&g, omega.0, omega.1)?;
                    renormalize(&g, &rs)
                };
                match (run(h_try), run(-h_try)) {
                    (Ok(gp), Ok(gm)) => {
                        let two_h = h_try + h_try;
                        let x_out = ((gp.u() - gm.u()).abs() + (gp.v() - gm.v()).abs()) / two_h;
                        let y_out = (nl_sup_diff(gp.phi(), gm.phi())
                            + nl_sup_diff(gp.psi(), gm.psi()))
                            / two_h;
                        image = Some((x_out, y_out));
                        break;
                    }
                    _ => h_try = h_try / lit(10.0),
                }
            }
            let (x_norm_out, y_norm_out) = image.ok_or_else(|| {
                Error::SolverFailed("type change under cone probe after all retries".into())
            })?;
            let ratio = y_norm_out / x_norm_out;
            let expansion = (x_norm_out + y_norm_out) / (x_norm + y_norm_in);
            samples.push(ConeSample {
                x,
                pattern: pat.to_vec(),
                y_norm_in,
                x_norm_out,
                y_norm_out,
                ratio,
                expansion,
            });
        }
    }
    let max_ratio = samples.iter().fold(T::zero(), |m, s| m.max(s.ratio));
    let min_expansion = samples.iter().fold(T::infinity(), |m, s| m.min(s.expansion));
    Ok(ConeReport {
        kappa,
        contracts: max_ratio < kappa,
        expands: min_expansion > T::one(),
        max_ratio,
        min_expansion,
        samples,
    })
}
