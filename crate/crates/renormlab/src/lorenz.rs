//! Lorenz maps of the unit interval in decomposed form.
//!
//! A Lorenz map with critical exponent `alpha > 1` is determined by a
//! five-tuple `f = (u, v, c, phi, psi)`:
//!
//! ```text
//! f(x) = phi(Q0(x))  on [0, c),      Q0(x) = u (1 - ((c - x)/c)^alpha),
//! f(x) = psi(Q1(x))  on (c, 1],      Q1(x) = 1 + v (-1 + ((x - c)/(1 - c))^alpha),
//! ```
//!
//! where `0 < u, v <= 1`, `0 < c < 1` and `phi, psi` are decomposed
//! diffeomorphisms of `[0, 1]` fixing the endpoints. Both branches are
//! increasing; the map is injective with a single discontinuity at the
//! critical point `c`, where it tends to the critical values
//! `lcv = phi(u)` from the left and `rcv = psi(1 - v)` from the right.
//!
//! The branch factors `Q0, Q1` absorb the entire criticality: they are the
//! unique degree-`alpha` power laws on the two sides normalized to fix the
//! endpoint behaviour, and they admit closed-form inverses and derivatives.
//! Everything smooth and invertible sits in `phi` and `psi`, which are kept
//! as decompositions into pure maps so renormalization can act on them
//! exactly (module [`crate::renorm`]).

use crate::decomp::Decomposition;
use crate::diffeo::{clamp01, Diffeo};
use crate::{lit, tol, Error, Real, Result};
use serde::{Deserialize, Serialize};

/// The two monotone branches of a Lorenz map.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// `[0, c)`, symbol `0`.
    Left,
    /// `(c, 1]`, symbol `1`.
    Right,
}

impl Branch {
    /// Symbol used in itinerary words.
    pub fn symbol(&self) -> u8 {
        match self {
            Branch::Left => 0,
            Branch::Right => 1,
        }
    }
}

/// A Lorenz map `(u, v, c, phi, psi)` with critical exponent `alpha`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LorenzMap<T> {
    alpha: T,
    u: T,
    v: T,
    c: T,
    phi: Decomposition<T>,
    psi: Decomposition<T>,
}

impl<T: Real> LorenzMap<T> {
    /// Builds a Lorenz map, validating all parameter ranges.
    pub fn new(
        alpha: T,
        u: T,
        v: T,
        c: T,
        phi: Decomposition<T>,
        psi: Decomposition<T>,
    ) -> Result<Self> {
        if !(alpha > T::one()) || !alpha.is_finite() {
            return Err(Error::InvalidInput(format!("alpha = {alpha} must be finite and > 1")));
        }
        for (name, val) in [("u", u), ("v", v)] {
            if !(val > T::zero() && val <= T::one()) {
                return Err(Error::InvalidInput(format!("{name} = {val} must lie in (0, 1]")));
            }
        }
        if !(c > T::zero() && c < T::one()) {
            return Err(Error::InvalidInput(format!("c = {c} must lie in (0, 1)")));
        }
        if phi.alpha() != alpha || psi.alpha() != alpha {
            return Err(Error::InvalidInput(
                "phi and psi must share the map exponent".into(),
            ));
        }
        Ok(LorenzMap { alpha, u, v, c, phi, psi })
    }

    /// Standard (undecomposed) map: `phi = psi = id`.
    pub fn standard(alpha: T, u: T, v: T, c: T) -> Result<Self> {
        let id = Decomposition::identity(alpha)?;
        LorenzMap::new(alpha, u, v, c, id.clone(), id)
    }

    /// Critical exponent.
    pub fn alpha(&self) -> T {
        self.alpha
    }

    /// Left branch height parameter.
    pub fn u(&self) -> T {
        self.u
    }

    /// Right branch depth parameter.
    pub fn v(&self) -> T {
        self.v
    }

    /// Critical point.
    pub fn c(&self) -> T {
        self.c
    }

    /// Distance from the critical point to the right endpoint, `1 - c`.
    pub fn eps(&self) -> T {
        T::one() - self.c
    }

    /// Left diffeomorphism factor.
    pub fn phi(&self) -> &Decomposition<T> {
        &self.phi
    }

    /// Right diffeomorphism factor.
    pub fn psi(&self) -> &Decomposition<T> {
        &self.psi
    }

    /// Copy with a different `u` (other data unchanged).
    pub fn with_u(&self, u: T) -> Result<Self> {
        LorenzMap::new(self.alpha, u, self.v, self.c, self.phi.clone(), self.psi.clone())
    }

    /// Copy with a different `v`.
    pub fn with_v(&self, v: T) -> Result<Self> {
        LorenzMap::new(self.alpha, self.u, v, self.c, self.phi.clone(), self.psi.clone())
    }

    /// Copy with a different critical point.
    pub fn with_c(&self, c: T) -> Result<Self> {
        LorenzMap::new(self.alpha, self.u, self.v, c, self.phi.clone(), self.psi.clone())
    }

    /// Copy with different diffeomorphism factors.
    pub fn with_factors(&self, phi: Decomposition<T>, psi: Decomposition<T>) -> Result<Self> {
        LorenzMap::new(self.alpha, self.u, self.v, self.c, phi, psi)
    }

    /// Left critical value `lcv = phi(u) = lim_{x -> c-} f(x)`.
    pub fn lcv(&self) -> T {
        self.phi.compose().eval(self.u)
    }

    /// Right critical value `rcv = psi(1 - v) = lim_{x -> c+} f(x)`.
    pub fn rcv(&self) -> T {
        self.psi.compose().eval(T::one() - self.v)
    }

    /// `t^alpha`, squaring instead of `powf` in the quadratic family.
    fn pow_alpha(&self, t: T) -> T {
        if self.alpha == lit(2.0) { t * t } else { t.powf(self.alpha) }
    }

    /// `t^(alpha - 1)`.
    fn pow_alpha_m1(&self, t: T) -> T {
        if self.alpha == lit(2.0) { t } else { t.powf(self.alpha - T::one()) }
    }

    /// `t^(1/alpha)`.
    fn pow_inv_alpha(&self, t: T) -> T {
        if self.alpha == lit(2.0) { t.sqrt() } else { t.powf(T::one() / self.alpha) }
    }

    /// Raw left power factor `Q0` on `[0, c]`.
    pub fn q0(&self, x: T) -> T {
        let t = ((self.c - x) / self.c).max(T::zero());
        self.u * (T::one() - self.pow_alpha(t))
    }

    /// Raw right power factor `Q1` on `[c, 1]`.
    pub fn q1(&self, x: T) -> T {
        let t = ((x - self.c) / (T::one() - self.c)).max(T::zero());
        T::one() + self.v * (self.pow_alpha(t) - T::one())
    }

    /// Derivative of `Q0`.
    pub fn q0_deriv(&self, x: T) -> T {
        let t = ((self.c - x) / self.c).max(T::zero());
        self.u * self.alpha * self.pow_alpha_m1(t) / self.c
    }

    /// Derivative of `Q1`.
    pub fn q1_deriv(&self, x: T) -> T {
        let e = T::one() - self.c;
        let t = ((x - self.c) / e).max(T::zero());
        self.v * self.alpha * self.pow_alpha_m1(t) / e
    }

    /// Closed-form inverse of `Q0` on `[0, u]`.
    pub fn q0_inv(&self, w: T) -> T {
        let w = w.max(T::zero()).min(self.u);
        self.c - self.c * self.pow_inv_alpha(T::one() - w / self.u)
    }

    /// Closed-form inverse of `Q1` on `[1 - v, 1]`.
    pub fn q1_inv(&self, w: T) -> T {
        let w = w.max(T::one() - self.v).min(T::one());
        let t = (w - (T::one() - self.v)) / self.v;
        self.c + (T::one() - self.c) * self.pow_inv_alpha(t)
    }

    /// Checked power-factor evaluation on the closed branch domain.
    pub fn q_eval(&self, branch: Branch, x: T) -> Result<T> {
        match branch {
            Branch::Left => {
                if !(T::zero()..=self.c).contains(&x) {
                    return Err(Error::Domain(format!("{x} outside left branch domain [0, c]")));
                }
                Ok(self.q0(x))
            }
            Branch::Right => {
                if !(self.c..=T::one()).contains(&x) {
                    return Err(Error::Domain(format!("{x} outside right branch domain [c, 1]")));
                }
                Ok(self.q1(x))
            }
        }
    }

    /// Which branch contains `x`; the critical point belongs to neither.
    pub fn branch_of(&self, x: T) -> Result<Branch> {
        if x == self.c {
            return Err(Error::CriticalPoint);
        }
        Ok(if x < self.c { Branch::Left } else { Branch::Right })
    }

    /// Branch evaluation with the critical point resolved by continuity.
    ///
    /// `branch_eval(Left, c) = lcv` and `branch_eval(Right, c) = rcv`, so
    /// callers can iterate critical-value orbits.
    pub fn branch_eval(&self, branch: Branch, x: T) -> T {
        match branch {
            Branch::Left => self.phi.compose().eval(self.q0(x)),
            Branch::Right => self.psi.compose().eval(self.q1(x)),
        }
    }

    /// Branch derivative (one-sided at the critical point, where it vanishes).
    pub fn branch_deriv(&self, branch: Branch, x: T) -> T {
        match branch {
            Branch::Left => self.phi.compose().deriv(self.q0(x)) * self.q0_deriv(x),
            Branch::Right => self.psi.compose().deriv(self.q1(x)) * self.q1_deriv(x),
        }
    }

    /// Full map evaluation; undefined exactly at the critical point.
    pub fn eval(&self, x: T) -> Result<T> {
        if !(T::zero()..=T::one()).contains(&x) {
            return Err(Error::Domain(format!("{x} outside [0, 1]")));
        }
        Ok(self.branch_eval(self.branch_of(x)?, x))
    }

    /// Derivative of the full map; undefined at the critical point.
    pub fn deriv(&self, x: T) -> Result<T> {
        if !(T::zero()..=T::one()).contains(&x) {
            return Err(Error::Domain(format!("{x} outside [0, 1]")));
        }
        Ok(self.branch_deriv(self.branch_of(x)?, x))
    }

    /// Inverse of the selected branch.
    ///
    /// The left branch maps onto `[0, lcv]`, the right onto `[rcv, 1]`;
    /// values outside (beyond a 1e-12 slack for float drift) have no
    /// preimage on that branch.
    pub fn inverse_branch(&self, branch: Branch, y: T) -> Result<T> {
        if !(T::zero()..=T::one()).contains(&y) {
            return Err(Error::Domain(format!("{y} outside [0, 1]")));
        }
        let slack = lit::<T>(1e-12);
        match branch {
            Branch::Left => {
                let lcv = self.lcv();
                if y > lcv + slack {
                    return Err(Error::NoPreimage(format!(
                        "{y} exceeds the left critical value {lcv}"
                    )));
                }
                Ok(self.q0_inv(self.phi.compose().inverse(y.min(lcv))))
            }
            Branch::Right => {
                let rcv = self.rcv();
                if y < rcv - slack {
                    return Err(Error::NoPreimage(format!(
                        "{y} undercuts the right critical value {rcv}"
                    )));
                }
                Ok(self.q1_inv(self.psi.compose().inverse(y.max(rcv))))
            }
        }
    }

    /// Forward orbit of length `n` with its itinerary word.
    ///
    /// Fails with [`Error::HitCritical`] if any iterate comes within
    /// [`tol::CRIT_COLLISION`] of the critical point before the last step.
    pub fn orbit(&self, x0: T, n: usize) -> Result<Orbit<T>> {
        if !(T::zero()..=T::one()).contains(&x0) {
            return Err(Error::Domain(format!("{x0} outside [0, 1]")));
        }
        let mut points = Vec::with_capacity(n + 1);
        let mut word = Vec::with_capacity(n);
        let mut x = x0;
        points.push(x);
        for step in 0..n {
            if (x - self.c).abs() < lit(tol::CRIT_COLLISION) {
                return Err(Error::HitCritical { step });
            }
            let branch = if x < self.c { Branch::Left } else { Branch::Right };
            word.push(branch.symbol());
            x = clamp01(self.branch_eval(branch, x));
            points.push(x);
        }
        Ok(Orbit { points, word })
    }

    /// Nontriviality: both critical values overshoot the critical point.
    ///
    /// Requires `rcv < c < lcv` with margin [`tol::NONTRIVIAL`]; trivial
    /// maps have an attracting neighbourhood of `c` and never renormalize.
    pub fn nontrivial(&self) -> bool {
        let margin = lit::<T>(tol::NONTRIVIAL);
        self.rcv() + margin < self.c && self.c + margin < self.lcv()
    }
}

/// A finite orbit and the branch word it realizes.
#[derive(Clone, Debug, PartialEq)]
pub struct Orbit<T> {
    /// Points `x_0, ..., x_n`.
    pub points: Vec<T>,
    /// Branch symbols of the first `n` steps (0 = left, 1 = right).
    pub word: Vec<u8>,
}

impl<T: Real> Orbit<T> {
    /// Itinerary as a string of `0`s and `1`s.
    pub fn word_string(&self) -> String {
        self.word.iter().map(|b| char::from(b'0' + b)).collect()
    }
}

/// Plain-data JSON form of a double-precision Lorenz map.
///
/// `phi` and `psi` list the signatures of the decomposition factors in
/// application order. Serialization round-trips bit-exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    /// Critical exponent.
    pub alpha: f64,
    /// Left branch height.
    pub u: f64,
    /// Right branch depth.
    pub v: f64,
    /// Critical point.
    pub c: f64,
    /// Signatures of the left diffeomorphism factors.
    #[serde(default)]
    pub phi: Vec<f64>,
    /// Signatures of the right diffeomorphism factors.
    #[serde(default)]
    pub psi: Vec<f64>,
}

impl MapSpec {
    /// Validates and builds the described map.
    pub fn build(&self) -> Result<LorenzMap<f64>> {
        let phi = Decomposition::from_signatures(self.alpha, &self.phi)?;
        let psi = Decomposition::from_signatures(self.alpha, &self.psi)?;
        LorenzMap::new(self.alpha, self.u, self.v, self.c, phi, psi)
    }

    /// Extracts the plain-data form of a map.
    pub fn from_map(m: &LorenzMap<f64>) -> MapSpec {
        MapSpec {
            alpha: m.alpha(),
            u: m.u(),
            v: m.v(),
            c: m.c(),
            phi: m.phi().signatures(),
            psi: m.psi().signatures(),
        }
    }
}
