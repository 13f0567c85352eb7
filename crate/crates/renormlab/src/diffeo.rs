//! Diffeomorphisms of the unit interval: pure maps, nonlinearity, zooms.
//!
//! The central gadget is the *nonlinearity* operator
//!
//! ```text
//! N phi = D log D phi = D2 phi / D phi,
//! ```
//!
//! which vanishes exactly on affine maps and turns post-composition into
//! addition: `N(psi o phi) = (N psi o phi) * D phi + N phi`. It has an
//! explicit inverse on diffeomorphisms fixing 0 and 1,
//!
//! ```text
//! (N^-1 f)(x) = int_0^x exp(int_0^s f) ds / int_0^1 exp(int_0^s f) ds.
//! ```
//!
//! A *pure map* is the normalized power law obtained by zooming
//! `x -> x^alpha` in on an off-critical interval:
//!
//! ```text
//! mu_s(x) = ((1 + r x)^alpha - 1) / ((1 + r)^alpha - 1),
//! r = exp(s / (alpha - 1)) - 1,
//! ```
//!
//! whose nonlinearity is the Moebius function `N mu_s(x) = r (alpha - 1) /
//! (1 + r x)`. The signed parameter `s` is additive along zooms of the power
//! law, `|s|` is exactly the distortion of `mu_s`, and `s = 0` gives the
//! identity. Zooming a pure map in on any interval yields another pure map,
//! so decompositions of pure maps (module [`crate::decomp`]) are closed
//! under renormalization.
//!
//! [`GridDiffeo`] realizes the inverse nonlinearity operator numerically:
//! it stores a sampled nonlinearity on a uniform grid and evaluates the map,
//! its derivative and its inverse by cumulative quadrature.

use crate::{count, lit, tol, Error, Real, Result};
use serde::{Deserialize, Serialize};

/// Closed nondegenerate interval `[lo, hi]`, `lo < hi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval<T> {
    lo: T,
    hi: T,
}

impl<T: Real> Interval<T> {
    /// Creates `[lo, hi]`; fails unless `lo < hi` and both are finite.
    pub fn new(lo: T, hi: T) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidInput("interval endpoint is not finite".into()));
        }
        if lo >= hi {
            return Err(Error::InvalidInput(format!(
                "degenerate interval: lo = {lo} must be < hi = {hi}"
            )));
        }
        Ok(Interval { lo, hi })
    }

    /// The unit interval `[0, 1]`.
    pub fn unit() -> Self {
        Interval { lo: T::zero(), hi: T::one() }
    }

    /// Left endpoint.
    pub fn lo(&self) -> T {
        self.lo
    }

    /// Right endpoint.
    pub fn hi(&self) -> T {
        self.hi
    }

    /// Length `hi - lo`.
    pub fn len(&self) -> T {
        self.hi - self.lo
    }

    /// Midpoint.
    pub fn mid(&self) -> T {
        (self.lo + self.hi) / lit(2.0)
    }

    /// True if `x` lies in the closed interval.
    pub fn contains(&self, x: T) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// True if `other` lies inside this closed interval.
    pub fn contains_interval(&self, other: &Interval<T>) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// True if the open interiors intersect.
    pub fn overlaps(&self, other: &Interval<T>) -> bool {
        self.lo < other.hi && other.lo < self.hi
    }

    /// Affine chart `[0,1] -> [lo,hi]`.
    pub fn from_unit(&self, t: T) -> T {
        self.lo + t * self.len()
    }

    /// Inverse chart `[lo,hi] -> [0,1]`.
    pub fn to_unit(&self, x: T) -> T {
        (x - self.lo) / self.len()
    }

    /// Image `[f(lo), f(hi)]` under an increasing map.
    pub fn map_increasing(&self, f: impl Fn(T) -> T) -> Result<Self> {
        Interval::new(f(self.lo), f(self.hi))
    }
}

/// Common interface of concrete diffeomorphism representations.
///
/// Implementors are increasing C^2 diffeomorphisms of `[0, 1]` fixing both
/// endpoints. Arguments are clamped to `[0, 1]`, so tiny floating-point
/// drift outside the domain is harmless; checked entry points that reject
/// out-of-range input live on the concrete types.
pub trait Diffeo<T: Real> {
    /// Value of the map at `x`.
    fn eval(&self, x: T) -> T;

    /// First derivative at `x`.
    fn deriv(&self, x: T) -> T;

    /// Preimage of `y in [0, 1]`.
    fn inverse(&self, y: T) -> T;

    /// Nonlinearity `N = D log D` at `x`.
    fn nonlinearity(&self, x: T) -> T;

    /// Schwarzian derivative at `x`.
    fn schwarzian(&self, x: T) -> T;

    /// Distortion on a subinterval: `sup log D - inf log D` over `I`.
    ///
    /// The default samples `log D` on a uniform grid; representations with
    /// one-signed nonlinearity override it with the exact endpoint ratio.
    fn distortion_on(&self, i: Interval<T>) -> T {
        let n = tol::SUP_GRID_N;
        let mut min = T::infinity();
        let mut max = T::neg_infinity();
        for k in 0..n {
            let x = i.from_unit(count::<T>(k) / count::<T>(n - 1));
            let ld = self.deriv(x).ln();
            min = min.min(ld);
            max = max.max(ld);
        }
        max - min
    }
}

impl<T: Real, D: Diffeo<T> + ?Sized> Diffeo<T> for &D {
    fn eval(&self, x: T) -> T {
        (**self).eval(x)
    }
    fn deriv(&self, x: T) -> T {
        (**self).deriv(x)
    }
    fn inverse(&self, y: T) -> T {
        (**self).inverse(y)
    }
    fn nonlinearity(&self, x: T) -> T {
        (**self).nonlinearity(x)
    }
    fn schwarzian(&self, x: T) -> T {
        (**self).schwarzian(x)
    }
    fn distortion_on(&self, i: Interval<T>) -> T {
        (**self).distortion_on(i)
    }
}

/// The identity map of `[0, 1]`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Identity;

impl<T: Real> Diffeo<T> for Identity {
    fn eval(&self, x: T) -> T {
        clamp01(x)
    }
    fn deriv(&self, _x: T) -> T {
        T::one()
    }
    fn inverse(&self, y: T) -> T {
        clamp01(y)
    }
    fn nonlinearity(&self, _x: T) -> T {
        T::zero()
    }
    fn schwarzian(&self, _x: T) -> T {
        T::zero()
    }
    fn distortion_on(&self, _i: Interval<T>) -> T {
        T::zero()
    }
}

/// The inverse of a diffeomorphism, presented as a diffeomorphism.
///
/// Uses `N(f^-1)(y) = -(Nf / Df)(f^-1 y)` and
/// `S(f^-1)(y) = -(Sf / Df^2)(f^-1 y)`.
#[derive(Clone, Copy, Debug)]
pub struct InverseDiffeo<D> {
    inner: D,
}

impl<D> InverseDiffeo<D> {
    /// Wraps `inner` so that `eval` computes its inverse.
    pub fn new(inner: D) -> Self {
        InverseDiffeo { inner }
    }
}

impl<T: Real, D: Diffeo<T>> Diffeo<T> for InverseDiffeo<D> {
    fn eval(&self, x: T) -> T {
        self.inner.inverse(x)
    }
    fn deriv(&self, x: T) -> T {
        T::one() / self.inner.deriv(self.inner.inverse(x))
    }
    fn inverse(&self, y: T) -> T {
        self.inner.eval(y)
    }
    fn nonlinearity(&self, x: T) -> T {
        let z = self.inner.inverse(x);
        -self.inner.nonlinearity(z) / self.inner.deriv(z)
    }
    fn schwarzian(&self, x: T) -> T {
        let z = self.inner.inverse(x);
        let d = self.inner.deriv(z);
        -self.inner.schwarzian(z) / (d * d)
    }
}

pub(crate) fn clamp01<T: Real>(x: T) -> T {
    debug_assert!(
        x > -lit::<T>(1e-6) && x < T::one() + lit(1e-6),
        "argument {x:?} far outside [0, 1]"
    );
    x.max(T::zero()).min(T::one())
}

/// Normalized power law `mu_s` with exponent `alpha` and signature `s`.
///
/// `s` ranges over all of `R`; `s = 0` is the identity, and `mu_s` converges
/// to a degenerate limit as `|s| -> inf`. Distortion is exactly `|s|` and
/// the Schwarzian is strictly negative for `s != 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PureMap<T> {
    alpha: T,
    s: T,
}

impl<T: Real> PureMap<T> {
    /// Creates `mu_s` with exponent `alpha > 1`.
    pub fn new(alpha: T, s: T) -> Result<Self> {
        if !(alpha > T::one()) || !alpha.is_finite() {
            return Err(Error::InvalidInput(format!("alpha = {alpha} must be finite and > 1")));
        }
        if !s.is_finite() {
            return Err(Error::InvalidInput("signature s must be finite".into()));
        }
        Ok(PureMap { alpha, s })
    }

    /// The identity as a pure map (`s = 0`).
    pub fn identity(alpha: T) -> Result<Self> {
        PureMap::new(alpha, T::zero())
    }

    /// Critical exponent.
    pub fn alpha(&self) -> T {
        self.alpha
    }

    /// Signature parameter.
    pub fn s(&self) -> T {
        self.s
    }

    /// Moebius parameter `r = exp(s / (alpha - 1)) - 1`.
    pub fn r(&self) -> T {
        (self.s / (self.alpha - T::one())).exp_m1()
    }

    fn small_s(&self) -> bool {
        self.s.abs() < lit(tol::SMALL_S)
    }

    /// Checked evaluation; rejects `x` outside `[0, 1]`.
    pub fn eval_checked(&self, x: T) -> Result<T> {
        check_unit_arg(x)?;
        Ok(self.eval(x))
    }

    /// Checked preimage; rejects `y` outside `[0, 1]`.
    pub fn inverse_checked(&self, y: T) -> Result<T> {
        check_unit_arg(y)?;
        Ok(self.inverse(y))
    }

    /// Zoom `Z(mu_s; I)`: the affine rescaling of `mu_s` restricted to `I`.
    ///
    /// The result is pure with signature
    /// `s' = (alpha - 1) log((1 + r hi) / (1 + r lo))`.
    pub fn zoom(&self, i: Interval<T>) -> PureMap<T> {
        let r = self.r();
        let beta = self.alpha - T::one();
        let s = beta * ((r * i.hi()).ln_1p() - (r * i.lo()).ln_1p());
        PureMap { alpha: self.alpha, s }
    }

    /// Supremum of `|N mu_s|` over `[0, 1]`.
    ///
    /// The Moebius nonlinearity is monotone in `x`, so the sup sits at the
    /// endpoint where `|1 + r x|` is smallest: `x = 0` for `s > 0`, `x = 1`
    /// for `s < 0`.
    pub fn nonlinearity_sup(&self) -> T {
        let beta = self.alpha - T::one();
        let r = self.r();
        if r >= T::zero() {
            r * beta
        } else {
            -r * beta / (T::one() + r)
        }
    }
}

fn check_unit_arg<T: Real>(x: T) -> Result<()> {
    if !(T::zero()..=T::one()).contains(&x) {
        return Err(Error::Domain(format!("argument {x} outside [0, 1]")));
    }
    Ok(())
}

impl<T: Real> Diffeo<T> for PureMap<T> {
    fn eval(&self, x: T) -> T {
        let x = clamp01(x);
        if self.small_s() {
            // First order in s: mu_s(x) = x + s x (x - 1) / 2 + O(s^2).
            return x + self.s * x * (x - T::one()) / lit(2.0);
        }
        let r = self.r();
        let num = (self.alpha * (r * x).ln_1p()).exp_m1();
        let den = (self.alpha * r.ln_1p()).exp_m1();
        clamp01(num / den)
    }

    fn deriv(&self, x: T) -> T {
        let x = clamp01(x);
        if self.small_s() {
            return T::one() + self.s * (x - lit(0.5));
        }
        let r = self.r();
        let den = (self.alpha * r.ln_1p()).exp_m1();
        let base = T::one() + r * x;
        let pow = if self.alpha == lit(2.0) { base } else { base.powf(self.alpha - T::one()) };
        self.alpha * r * pow / den
    }

    fn inverse(&self, y: T) -> T {
        let y = clamp01(y);
        if self.small_s() {
            return clamp01(y - self.s * y * (y - T::one()) / lit(2.0));
        }
        let r = self.r();
        let den = (self.alpha * r.ln_1p()).exp_m1();
        let x = ((y * den).ln_1p() / self.alpha).exp_m1() / r;
        clamp01(x)
    }

    fn nonlinearity(&self, x: T) -> T {
        let x = clamp01(x);
        let r = self.r();
        r * (self.alpha - T::one()) / (T::one() + r * x)
    }

    fn schwarzian(&self, x: T) -> T {
        let x = clamp01(x);
        let r = self.r();
        let beta = self.alpha - T::one();
        let w = T::one() + r * x;
        -r * r * beta * (self.alpha + T::one()) / (lit::<T>(2.0) * w * w)
    }

    fn distortion_on(&self, i: Interval<T>) -> T {
        // log D is monotone, so the endpoint ratio is exact; on the full
        // interval it equals |s|.
        let r = self.r();
        ((self.alpha - T::one()) * ((r * i.hi()).ln_1p() - (r * i.lo()).ln_1p())).abs()
    }
}

/// Diffeomorphism reconstructed from its nonlinearity sampled on a grid.
///
/// Stores `N phi` at `n = 2^k + 1` uniform nodes together with cumulative
/// integrals of `N phi` and of `exp(int N phi)`, so that
///
/// ```text
/// phi(x) = G(x) / G(1),   D phi(x) = exp(F(x)) / G(1),
/// F(x) = int_0^x N phi,   G(x) = int_0^x exp(F),
/// ```
///
/// are available in O(1) per query. Node integrals use cumulative composite
/// Simpson; off-node corrections integrate the local quadratic interpolant
/// of the samples (Gauss-Legendre for `G`), keeping the total quadrature
/// error near `h^4`.
#[derive(Clone, Debug)]
pub struct GridDiffeo<T> {
    nl: Vec<T>,
    f_cum: Vec<T>,
    g_cum: Vec<T>,
    total: T,
}

impl<T: Real> GridDiffeo<T> {
    /// Builds the diffeomorphism with nonlinearity `nl` sampled at `n` nodes.
    ///
    /// `n` must be `2^k + 1` for some `k >= 1`.
    pub fn from_nl_fn(n: usize, nl: impl Fn(T) -> T) -> Result<Self> {
        if n < 3 || !(n - 1).is_power_of_two() {
            return Err(Error::InvalidInput(format!(
                "grid resolution {n} must be 2^k + 1 with k >= 1"
            )));
        }
        let h = T::one() / count::<T>(n - 1);
        let samples: Vec<T> = (0..n).map(|i| nl(count::<T>(i) * h)).collect();
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("sampled nonlinearity is not finite".into()));
        }
        Ok(GridDiffeo::from_samples(samples, h))
    }

    /// Samples the nonlinearity of an existing diffeomorphism at `n` nodes.
    pub fn from_diffeo<D: Diffeo<T>>(n: usize, d: &D) -> Result<Self> {
        GridDiffeo::from_nl_fn(n, |x| d.nonlinearity(x))
    }

    /// Builds with the default resolution ([`tol::GRID_N`] nodes).
    pub fn from_nl_fn_default(nl: impl Fn(T) -> T) -> Result<Self> {
        GridDiffeo::from_nl_fn(tol::GRID_N, nl)
    }

    fn from_samples(nl: Vec<T>, h: T) -> Self {
        let n = nl.len();
        // Cumulative composite Simpson for F = int nl: exact on quadratics.
        let mut f_cum = vec![T::zero(); n];
        let c12 = h / lit(12.0);
        let mut i = 0;
        while i + 2 < n {
            f_cum[i + 1] = f_cum[i]
                + c12 * (lit::<T>(5.0) * nl[i] + lit::<T>(8.0) * nl[i + 1] - nl[i + 2]);
            f_cum[i + 2] = f_cum[i + 1]
                + c12 * (-nl[i] + lit::<T>(8.0) * nl[i + 1] + lit::<T>(5.0) * nl[i + 2]);
            i += 2;
        }
        let g: Vec<T> = f_cum.iter().map(|f| f.exp()).collect();
        let mut g_cum = vec![T::zero(); n];
        let mut i = 0;
        while i + 2 < n {
            g_cum[i + 1] =
                g_cum[i] + c12 * (lit::<T>(5.0) * g[i] + lit::<T>(8.0) * g[i + 1] - g[i + 2]);
            g_cum[i + 2] =
                g_cum[i + 1] + c12 * (-g[i] + lit::<T>(8.0) * g[i + 1] + lit::<T>(5.0) * g[i + 2]);
            i += 2;
        }
        let total = g_cum[n - 1];
        GridDiffeo { nl, f_cum, g_cum, total }
    }

    /// Number of grid nodes.
    pub fn resolution(&self) -> usize {
        self.nl.len()
    }

    /// Sampled nonlinearity values at the grid nodes.
    pub fn nl_samples(&self) -> &[T] {
        &self.nl
    }

    fn h(&self) -> T {
        T::one() / count::<T>(self.nl.len() - 1)
    }

    /// Index of the cell containing `x`, clamped to `[0, n-2]`.
    fn cell(&self, x: T) -> usize {
        let n = self.nl.len();
        let i = (x / self.h()).floor();
        let i = i.to_usize().unwrap_or(0);
        i.min(n - 2)
    }

    /// Quadratic Lagrange stencil starting at `j0 <= n - 3` covering cell `i`.
    fn stencil(&self, i: usize) -> usize {
        i.min(self.nl.len() - 3)
    }

    /// Interpolated nonlinearity at `x` (quadratic through three nodes).
    fn nl_at(&self, x: T) -> T {
        let i = self.cell(x);
        let j0 = self.stencil(i);
        let h = self.h();
        let t = x / h - count::<T>(j0);
        let (f0, f1, f2) = (self.nl[j0], self.nl[j0 + 1], self.nl[j0 + 2]);
        let l0 = (t - T::one()) * (t - lit(2.0)) / lit(2.0);
        let l1 = t * (lit::<T>(2.0) - t);
        let l2 = t * (t - T::one()) / lit(2.0);
        f0 * l0 + f1 * l1 + f2 * l2
    }

    /// Derivative of the interpolated nonlinearity at `x`.
    fn nl_deriv_at(&self, x: T) -> T {
        let i = self.cell(x);
        let j0 = self.stencil(i);
        let h = self.h();
        let t = x / h - count::<T>(j0);
        let (f0, f1, f2) = (self.nl[j0], self.nl[j0 + 1], self.nl[j0 + 2]);
        let d0 = t - lit(1.5);
        let d1 = lit::<T>(2.0) - t - t;
        let d2 = t - lit(0.5);
        (f0 * d0 + f1 * d1 + f2 * d2) / h
    }

    /// `F(x) = int_0^x N phi` via node table plus local quadratic integral.
    fn f_at(&self, x: T) -> T {
        let x = clamp01(x);
        let i = self.cell(x);
        let j0 = self.stencil(i);
        let h = self.h();
        let (f0, f1, f2) = (self.nl[j0], self.nl[j0 + 1], self.nl[j0 + 2]);
        // Antiderivatives of the Lagrange basis in t-units on [0, 2].
        let anti = |t: T| {
            let t2 = t * t;
            let t3 = t2 * t;
            let a0 = (t3 / lit(3.0) - lit::<T>(1.5) * t2 + lit::<T>(2.0) * t) / lit(2.0);
            let a1 = t2 - t3 / lit(3.0);
            let a2 = (t3 / lit(3.0) - t2 / lit(2.0)) / lit(2.0);
            f0 * a0 + f1 * a1 + f2 * a2
        };
        let t = x / h - count::<T>(j0);
        let ti = count::<T>(i - j0);
        self.f_cum[i] + h * (anti(t) - anti(ti))
    }

    /// `G(x) = int_0^x exp F` via node table plus 3-point Gauss-Legendre.
    fn g_at(&self, x: T) -> T {
        let x = clamp01(x);
        let i = self.cell(x);
        let xi = count::<T>(i) * self.h();
        let half = (x - xi) / lit(2.0);
        let mid = (x + xi) / lit(2.0);
        let root = lit::<T>(0.6).sqrt();
        let (w1, w2) = (lit::<T>(5.0) / lit(9.0), lit::<T>(8.0) / lit(9.0));
        let g = |p: T| self.f_at(p).exp();
        let quad = half
            * (w1 * g(mid - half * root) + w2 * g(mid) + w1 * g(mid + half * root));
        self.g_cum[i] + quad
    }
}

impl<T: Real> Diffeo<T> for GridDiffeo<T> {
    fn eval(&self, x: T) -> T {
        clamp01(self.g_at(x) / self.total)
    }

    fn deriv(&self, x: T) -> T {
        self.f_at(x).exp() / self.total
    }

    fn inverse(&self, y: T) -> T {
        let y = clamp01(y);
        let target = y * self.total;
        // Bracket by binary search over the monotone node table.
        let (mut lo, mut hi) = (0usize, self.g_cum.len() - 1);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.g_cum[mid] <= target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let h = self.h();
        let (mut a, mut b) = (count::<T>(lo) * h, count::<T>(hi) * h);
        let cell = self.g_cum[hi] - self.g_cum[lo];
        let mut x = if cell > T::zero() {
            a + (target - self.g_cum[lo]) / cell * h
        } else {
            (a + b) / lit(2.0)
        };
        // Safeguarded Newton on G(x) - target inside the bracket.
        for _ in 0..40 {
            let gx = self.g_at(x) - target;
            if gx > T::zero() {
                b = x;
            } else {
                a = x;
            }
            let step = gx / self.f_at(x).exp();
            if step.abs() < lit::<T>(1e-17).max(x.abs() * T::epsilon()) {
                break;
            }
            let next = x - step;
            x = if next > a && next < b { next } else { (a + b) / lit(2.0) };
            if (b - a) < lit(1e-16) {
                break;
            }
        }
        clamp01(x)
    }

    fn nonlinearity(&self, x: T) -> T {
        self.nl_at(clamp01(x))
    }

    fn schwarzian(&self, x: T) -> T {
        // S = DN - N^2 / 2 on the interpolated nonlinearity.
        let x = clamp01(x);
        let n = self.nl_at(x);
        self.nl_deriv_at(x) - n * n / lit(2.0)
    }
}

/// Zoom of an arbitrary diffeomorphism, represented on a grid.
///
/// `Z(phi; I) = zeta_{phi(I)}^-1 o phi o zeta_I` where `zeta_J` is the
/// affine chart onto `J`. The nonlinearity transforms as
/// `N Z(phi; I)(t) = |I| N phi(zeta_I(t))`, which is what gets sampled.
pub fn zoom_grid<T: Real, D: Diffeo<T>>(d: &D, i: Interval<T>, n: usize) -> Result<GridDiffeo<T>> {
    if !Interval::unit().contains_interval(&i) {
        return Err(Error::Domain(format!(
            "zoom interval [{}, {}] not inside [0, 1]",
            i.lo(),
            i.hi()
        )));
    }
    GridDiffeo::from_nl_fn(n, |t| d.nonlinearity(i.from_unit(t)) * i.len())
}

/// Report produced by [`koebe_check`].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct KoebeReport<T> {
    /// Minimum of the Schwarzian over the sample grid on `J`.
    pub min_schwarzian: T,
    /// True if the Schwarzian is nonnegative on `J` (up to a tiny slack).
    pub schwarzian_nonneg: bool,
    /// Largest sampled value of `|N f(x)| * min(x - a, b - x) / 2` on `I`.
    pub max_ratio: T,
    /// True if the Koebe bound `|N f| <= 2 / min(x - a, b - x)` held on `I`.
    pub bound_holds: bool,
}

/// Checks the Koebe nonlinearity bound for a map with nonnegative Schwarzian.
///
/// If `S f >= 0` on `J = [a, b]`, then for `x` in any compactly contained
/// `I` the nonlinearity obeys `|N f(x)| <= 2 / min(x - a, b - x)`. Both the
/// hypothesis and the conclusion are sampled on uniform grids; `max_ratio`
/// is the sampled sup of the left side divided by the right side.
pub fn koebe_check<T: Real, D: Diffeo<T>>(
    d: &D,
    inner: Interval<T>,
    outer: Interval<T>,
) -> Result<KoebeReport<T>> {
    if !outer.contains_interval(&inner) {
        return Err(Error::InvalidInput(
            "Koebe check needs the inner interval inside the outer one".into(),
        ));
    }
    let n = tol::SUP_GRID_N;
    let mut min_s = T::infinity();
    for k in 0..n {
        let x = outer.from_unit(count::<T>(k) / count::<T>(n - 1));
        min_s = min_s.min(d.schwarzian(x));
    }
    let slack = lit::<T>(1e-9);
    let schwarzian_nonneg = min_s >= -slack;
    let mut max_ratio = T::zero();
    for k in 0..n {
        let x = inner.from_unit(count::<T>(k) / count::<T>(n - 1));
        let gap = (x - outer.lo()).min(outer.hi() - x);
        if gap <= T::zero() {
            continue;
        }
        let ratio = d.nonlinearity(x).abs() * gap / lit(2.0);
        max_ratio = max_ratio.max(ratio);
    }
    Ok(KoebeReport {
        min_schwarzian: min_s,
        schwarzian_nonneg,
        max_ratio,
        bound_holds: max_ratio <= T::one() + slack,
    })
}
