//! Decompositions: time-ordered lists of pure maps and their algebra.
//!
//! A decomposition `d = (mu_{s_0}, mu_{s_1}, ..., mu_{s_{n-1}})` represents
//! the diffeomorphism `O(d) = mu_{s_{n-1}} o ... o mu_{s_0}` together with
//! the way it is cut into pure factors. Renormalization acts on
//! decompositions, not just on their compositions: zooming distributes over
//! the factors (each pure factor zooms to a pure factor on the transported
//! interval), and first-return maps concatenate factor lists. Keeping the
//! factored form avoids ever representing the badly distorted composed map
//! on a grid.
//!
//! Two size gauges appear throughout:
//!
//! - `norm`, the l1-of-sup norm `sum_k sup |N mu_{s_k}|`, which controls
//!   derivative bounds: `exp(-norm) <= D O(d) <= exp(norm)`;
//! - `distortion`, the sum `sum_k |s_k|`, an upper bound for the distortion
//!   of the composition.
//!
//! [`distance_to_pure`] measures how far a sampled nonlinearity is from the
//! Moebius family `{N mu_s}`, the quantity that must shrink for
//! renormalization to converge towards the pure (polynomial-like) model.

use crate::diffeo::{Diffeo, GridDiffeo, Interval, InverseDiffeo, PureMap};
use crate::{count, lit, tol, Error, Real, Result};
use serde::{Deserialize, Serialize};

/// Which factor of a Lorenz map a piece descends from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PieceOrigin {
    /// Supplied directly by the caller.
    Seed,
    /// Zoomed from the left diffeomorphism.
    Phi,
    /// Zoomed from the right diffeomorphism.
    Psi,
    /// Zoomed from the left power-law branch factor.
    Q0,
    /// Zoomed from the right power-law branch factor.
    Q1,
}

/// Provenance label: originating factor and return-time step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeLabel {
    /// Factor of the renormalized map this piece came from.
    pub origin: PieceOrigin,
    /// Return-time step at which the factor was traversed (0 for `Phi`/`Psi` heads).
    pub step: u32,
}

impl TimeLabel {
    /// Label for caller-supplied pieces.
    pub fn seed(step: u32) -> Self {
        TimeLabel { origin: PieceOrigin::Seed, step }
    }
}

/// One pure factor of a decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Piece<T> {
    /// Provenance of this factor.
    pub label: TimeLabel,
    /// Signature of the pure map.
    pub s: T,
}

/// Time-ordered list of pure maps, composed first-to-last.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomposition<T> {
    alpha: T,
    pieces: Vec<Piece<T>>,
}

impl<T: Real> Decomposition<T> {
    /// The empty decomposition (composing to the identity).
    pub fn identity(alpha: T) -> Result<Self> {
        PureMap::new(alpha, T::zero())?;
        Ok(Decomposition { alpha, pieces: Vec::new() })
    }

    /// Builds from raw signatures, labelling pieces as seeds.
    pub fn from_signatures(alpha: T, s: &[T]) -> Result<Self> {
        let mut d = Decomposition::identity(alpha)?;
        for (k, &s) in s.iter().enumerate() {
            PureMap::new(alpha, s)?;
            d.pieces.push(Piece { label: TimeLabel::seed(k as u32), s });
        }
        Ok(d)
    }

    /// Critical exponent shared by all factors.
    pub fn alpha(&self) -> T {
        self.alpha
    }

    /// Number of pure factors.
    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    /// True if there are no factors.
    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    /// The factors in application order.
    pub fn pieces(&self) -> &[Piece<T>] {
        &self.pieces
    }

    /// Raw signature list in application order.
    pub fn signatures(&self) -> Vec<T> {
        self.pieces.iter().map(|p| p.s).collect()
    }

    /// The `k`-th factor as a pure map.
    pub fn factor(&self, k: usize) -> PureMap<T> {
        PureMap::new(self.alpha, self.pieces[k].s).expect("stored signature is valid")
    }

    /// Appends a factor (used by the renormalization constructors).
    pub fn push(&mut self, label: TimeLabel, s: T) {
        self.pieces.push(Piece { label, s });
    }

    /// The l1-of-sup norm `sum_k sup |N mu_{s_k}|`.
    pub fn norm(&self) -> T {
        self.pieces
            .iter()
            .fold(T::zero(), |acc, p| acc + self.pure_of(p.s).nonlinearity_sup())
    }

    /// Distortion bound `sum_k |s_k|`.
    pub fn distortion(&self) -> T {
        self.pieces.iter().fold(T::zero(), |acc, p| acc + p.s.abs())
    }

    fn pure_of(&self, s: T) -> PureMap<T> {
        PureMap::new(self.alpha, s).expect("stored signature is valid")
    }

    /// Handle evaluating the full composition `mu_{n-1} o ... o mu_0`.
    pub fn compose(&self) -> Composed<'_, T> {
        Composed { alpha: self.alpha, pieces: &self.pieces }
    }

    /// Handle evaluating the partial composition of factors `j..k`.
    pub fn partial_compose(&self, j: usize, k: usize) -> Result<Composed<'_, T>> {
        if j > k || k > self.pieces.len() {
            return Err(Error::InvalidInput(format!(
                "partial composition range {j}..{k} out of bounds for {} pieces",
                self.pieces.len()
            )));
        }
        Ok(Composed { alpha: self.alpha, pieces: &self.pieces[j..k] })
    }

    /// Zooms every factor in on the transported interval.
    ///
    /// The factor at time `tau` is zoomed on `I_tau`, the image of `I` under
    /// the partial composition of the earlier factors; the result is the
    /// decomposition of `Z(O(d); I)` into pure factors, exactly (the zoom of
    /// a pure map is pure).
    pub fn zoom(&self, i: Interval<T>) -> Result<Decomposition<T>> {
        if !Interval::unit().contains_interval(&i) {
            return Err(Error::Domain(format!(
                "zoom interval [{}, {}] not inside [0, 1]",
                i.lo(),
                i.hi()
            )));
        }
        let mut out = Decomposition::identity(self.alpha)?;
        let mut cur = i;
        for p in &self.pieces {
            let mu = self.pure_of(p.s);
            out.pieces.push(Piece { label: p.label, s: mu.zoom(cur).s() });
            cur = Interval::new(mu.eval(cur.lo()), mu.eval(cur.hi()))?;
        }
        Ok(out)
    }

    /// Image of an interval under the composition (endpoint transport).
    pub fn image(&self, i: Interval<T>) -> Result<Interval<T>> {
        let c = self.compose();
        Interval::new(c.eval(i.lo()), c.eval(i.hi()))
    }

    /// Concatenates two factor lists: `O(d0 + d1) = O(d1) o O(d0)`.
    ///
    /// Both operands must share the same exponent.
    pub fn disjoint_union(&self, later: &Decomposition<T>) -> Decomposition<T> {
        assert!(
            self.alpha == later.alpha,
            "disjoint union needs matching exponents: {} vs {}",
            self.alpha,
            later.alpha
        );
        let mut pieces = self.pieces.clone();
        pieces.extend_from_slice(&later.pieces);
        Decomposition { alpha: self.alpha, pieces }
    }

    /// Drops factors with `|s|` below the pruning threshold.
    pub fn prune(&mut self, threshold: T) {
        self.pieces.retain(|p| p.s.abs() >= threshold);
    }

    /// Drops factors below the default threshold ([`tol::PRUNE_S`]).
    pub fn prune_default(&mut self) {
        self.prune(lit(tol::PRUNE_S));
    }
}

/// Borrowed view composing a slice of pure factors.
///
/// Evaluation walks the factor list, accumulating value, derivative,
/// nonlinearity and Schwarzian with the exact chain rules
///
/// ```text
/// N(psi o phi) = (N psi o phi) D phi + N phi,
/// S(psi o phi) = (S psi o phi) (D phi)^2 + S phi.
/// ```
#[derive(Clone, Copy, Debug)]
pub struct Composed<'a, T> {
    alpha: T,
    pieces: &'a [Piece<T>],
}

impl<'a, T: Real> Composed<'a, T> {
    fn factor(&self, k: usize) -> PureMap<T> {
        PureMap::new(self.alpha, self.pieces[k].s).expect("stored signature is valid")
    }

    /// Number of factors in this view.
    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    /// True if the view is empty (the identity map).
    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }
}

impl<'a, T: Real> Diffeo<T> for Composed<'a, T> {
    fn eval(&self, x: T) -> T {
        let mut y = x;
        for k in 0..self.pieces.len() {
            y = self.factor(k).eval(y);
        }
        y
    }

    fn deriv(&self, x: T) -> T {
        let mut y = x;
        let mut d = T::one();
        for k in 0..self.pieces.len() {
            let mu = self.factor(k);
            d = d * mu.deriv(y);
            y = mu.eval(y);
        }
        d
    }

    fn inverse(&self, y: T) -> T {
        let mut x = y;
        for k in (0..self.pieces.len()).rev() {
            x = self.factor(k).inverse(x);
        }
        x
    }

    fn nonlinearity(&self, x: T) -> T {
        let mut y = x;
        let mut d = T::one();
        let mut nl = T::zero();
        for k in 0..self.pieces.len() {
            let mu = self.factor(k);
            nl = nl + mu.nonlinearity(y) * d;
            d = d * mu.deriv(y);
            y = mu.eval(y);
        }
        nl
    }

    fn schwarzian(&self, x: T) -> T {
        let mut y = x;
        let mut d = T::one();
        let mut sw = T::zero();
        for k in 0..self.pieces.len() {
            let mu = self.factor(k);
            sw = sw + mu.schwarzian(y) * d * d;
            d = d * mu.deriv(y);
            y = mu.eval(y);
        }
        sw
    }
}

/// Nonlinearity of a chain of arbitrary diffeomorphisms at `x`.
fn chain_nonlinearity<T: Real>(items: &[&dyn Diffeo<T>], x: T) -> T {
    let mut y = x;
    let mut d = T::one();
    let mut nl = T::zero();
    for item in items {
        nl = nl + item.nonlinearity(y) * d;
        d = d * item.deriv(y);
        y = item.eval(y);
    }
    nl
}

/// Numerical groupoid defect of inserting `gamma o gamma^-1` at slot `i`.
///
/// As maps the insertion changes nothing; numerically the longer chain
/// accumulates error. Returns the sampled sup over `[0, 1]` of the
/// difference between the nonlinearities of the original and padded chains.
pub fn sandwich_error<T: Real, D: Diffeo<T>>(
    d: &Decomposition<T>,
    gamma: &D,
    i: usize,
) -> Result<T> {
    if i > d.len() {
        return Err(Error::InvalidInput(format!(
            "insertion slot {i} out of bounds for {} pieces",
            d.len()
        )));
    }
    let factors: Vec<PureMap<T>> = (0..d.len()).map(|k| d.factor(k)).collect();
    let inv = InverseDiffeo::new(gamma);
    let mut padded: Vec<&dyn Diffeo<T>> = Vec::with_capacity(d.len() + 2);
    for f in &factors[..i] {
        padded.push(f);
    }
    padded.push(gamma);
    padded.push(&inv);
    for f in &factors[i..] {
        padded.push(f);
    }
    let plain = d.compose();
    let n = tol::SUP_GRID_N;
    let mut sup = T::zero();
    for k in 0..n {
        let x = count::<T>(k) / count::<T>(n - 1);
        let diff = (chain_nonlinearity(&padded, x) - plain.nonlinearity(x)).abs();
        sup = sup.max(diff);
    }
    Ok(sup)
}

/// Best pure approximation to a sampled nonlinearity.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PureFit<T> {
    /// Signature of the closest pure map.
    pub s: T,
    /// Its Moebius parameter `r = exp(s / (alpha - 1)) - 1`.
    pub rho: T,
    /// Sampled sup distance `sup_x |N phi(x) - N mu_s(x)|`.
    pub distance: T,
}

/// Distance from a gridded diffeomorphism to the pure family.
///
/// Minimizes `sup_i |nl_i - N mu_s(x_i)|` over `s` by golden-section search.
/// The objective is quasiconvex in `s` because `N mu_s(x)` is pointwise
/// increasing in `s`, so the search bracket `|s| <= 2 sup |nl| + 1`
/// (distortion cannot beat the sampled sup by more than a factor two)
/// contains the minimizer.
pub fn distance_to_pure<T: Real>(g: &GridDiffeo<T>, alpha: T) -> Result<PureFit<T>> {
    PureMap::new(alpha, T::zero())?;
    let n = g.resolution();
    let sup_nl = g
        .nl_samples()
        .iter()
        .fold(T::zero(), |acc, v| acc.max(v.abs()));
    let objective = |s: T| -> T {
        let mu = PureMap::new(alpha, s).expect("bracket signatures are finite");
        let mut worst = T::zero();
        for (i, &nl) in g.nl_samples().iter().enumerate() {
            let x = count::<T>(i) / count::<T>(n - 1);
            worst = worst.max((nl - mu.nonlinearity(x)).abs());
        }
        worst
    };
    let (mut a, mut b) = (
        -(lit::<T>(2.0) * sup_nl + T::one()),
        lit::<T>(2.0) * sup_nl + T::one(),
    );
    let phi = (lit::<T>(5.0).sqrt() - T::one()) / lit(2.0);
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let mut f1 = objective(x1);
    let mut f2 = objective(x2);
    for _ in 0..200 {
        if b - a < lit(1e-13) {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = objective(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = objective(x2);
        }
    }
    let s = (a + b) / lit(2.0);
    let mu = PureMap::new(alpha, s)?;
    Ok(PureFit { s, rho: mu.r(), distance: objective(s) })
}
