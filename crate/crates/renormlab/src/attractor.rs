//! Cantor-attractor covers, transfer maps, loop graphs and invariant
//! measures.
//!
//! For an `n` times renormalizable map the closure of the critical orbits
//! is covered by generation-`n` intervals: the `n`-th return interval
//! `C_n = [p_n, q_n]` together with the pull-backs of `C_n` along the
//! orbits of the critical values,
//!
//! ```text
//! f^(i-1)(lcv) in U_n^i,  f^(a_n+1-i)(U_n^i) = C_n,  i = 1..a_n,
//! f^(j-1)(rcv) in V_n^j,  f^(b_n+1-j)(V_n^j) = C_n,  j = 1..b_n,
//! ```
//!
//! where `a_n = A_n - 1` and `b_n = B_n - 1` are the transfer times of the
//! critical values and `A_n, B_n` are the return times of the halves,
//!
//! ```text
//! A_n = A_(n-1) + a_n B_(n-1),   B_n = B_(n-1) + b_n A_(n-1),   A_0 = B_0 = 1.
//! ```
//!
//! This gives `A_n + B_n - 1` pairwise disjoint intervals nesting into the
//! previous generation, and `f` carries each onto its successor.
//! [`build_covers`] constructs them in original coordinates by pulling the
//! endpoints of `C_n` back along the branches of the critical orbits,
//! validating orbit membership, nesting and disjointness as it goes.
//!
//! The first-entry dynamics on a generation is a graph with two loops
//! through `C_n` ([`build_loop_graph`]). How the two generation-`(n+1)`
//! loops thread through the generation-`n` loops is recorded by the
//! winding matrix `W_n` ([`winding_matrix`]), equal to
//! `[[1, b_(n+1)], [a_(n+1), 1]]` for monotone types. Invariant measures
//! correspond to rays in the nested images `W_n ... W_(m-1) K` where `K`
//! is the positive quadrant; each matrix contracts the Hilbert metric by
//! `tanh(log(ab)/4) = (sqrt(ab) - 1)/(sqrt(ab) + 1)`, so bounded types
//! force a unique ray, i.e. a unique invariant measure on the attractor
//! ([`invariant_measure`], [`cone_propagate`], [`hilbert_distance`]).

use crate::diffeo::Interval;
use crate::lorenz::{Branch, LorenzMap};
use crate::renorm::{detect, renormalize};
use crate::{count, lit, tol, Error, Real, Result};
use serde::Serialize;

/// Origin tag of a cover interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CoverOrigin {
    /// The whole phase interval (generation 0).
    Root,
    /// The return interval `C_n` itself.
    Center,
    /// `U_n^i`, the pullback of `C_n` containing `f^(i-1)(lcv)`.
    U(u64),
    /// `V_n^j`, the pullback of `C_n` containing `f^(j-1)(rcv)`.
    V(u64),
}

/// One interval of a cover generation.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CoverInterval<T> {
    /// Location in original coordinates.
    pub interval: Interval<T>,
    /// Which critical-orbit image this is.
    pub origin: CoverOrigin,
    /// Index of the containing interval in the previous generation.
    pub parent: usize,
}

/// One generation of the attractor cover.
#[derive(Clone, Debug, Serialize)]
pub struct CoverLevel<T> {
    /// Generation number (0 is the root `[0, 1]`).
    pub n: u32,
    /// Renormalization type detected at this generation.
    pub type_ab: (u32, u32),
    /// Return times `(A_n, B_n)` of the two halves under the original map.
    pub return_times: (u64, u64),
    /// The intervals, pairwise disjoint and sorted left to right.
    pub intervals: Vec<CoverInterval<T>>,
    /// Complement components within parent intervals, as
    /// `(parent index in the previous generation, gap)`.
    pub gaps: Vec<(usize, Interval<T>)>,
}

impl<T: Real> CoverLevel<T> {
    /// Sum of the interval lengths.
    pub fn total_length(&self) -> T {
        self.intervals.iter().fold(T::zero(), |s, i| s + i.interval.len())
    }

    /// Number of intervals.
    pub fn count(&self) -> usize {
        self.intervals.len()
    }

    /// Mean interval length.
    pub fn mean_length(&self) -> T {
        self.total_length() / count(self.intervals.len())
    }
}

/// Relative slack for containment and overlap decisions between covers.
const COVER_SLACK: f64 = 1e-11;

/// Advances an interval not containing the critical point one step.
fn step_interval<T: Real>(f: &LorenzMap<T>, iv: (T, T), what: &str) -> Result<(T, T)> {
    let c = f.c();
    let slack = lit::<T>(COVER_SLACK);
    let branch = if iv.1 <= c + slack && iv.0 < c {
        Branch::Left
    } else if iv.0 >= c - slack && iv.1 > c {
        Branch::Right
    } else {
        return Err(Error::CoverBug(format!(
            "{what}: interval [{}, {}] straddles the critical point {c}",
            iv.0, iv.1
        )));
    };
    let lo = f.branch_eval(branch, iv.0);
    let hi = f.branch_eval(branch, iv.1);
    if !(hi > lo) {
        return Err(Error::CoverBug(format!(
            "{what}: image [{lo}, {hi}] is not increasing"
        )));
    }
    Ok((lo, hi))
}

/// Builds the cover generations 0..=depth for the given type sequence.
///
/// Generation `n >= 1` comes from detecting `types[n-1]` on the
/// `(n-1)`-fold renormalization; the return interval is pushed to original
/// coordinates through the chain of affine rescalings. The cover intervals
/// `U_n^i`, `V_n^j` are built by pulling the endpoints of `C_n` back along
/// the branches visited by the critical orbits. Landing of the transfer
/// orbits in `C_n`, orbit membership `f^(i-1)(lcv) in U_n^i`, nesting into
/// the previous generation and same-generation disjointness are all
/// verified.
pub fn build_covers<T: Real>(
    f: &LorenzMap<T>,
    types: &[(u32, u32)],
) -> Result<Vec<CoverLevel<T>>> {
    let root = CoverLevel {
        n: 0,
        type_ab: (0, 0),
        return_times: (1, 1),
        intervals: vec![CoverInterval {
            interval: Interval::unit(),
            origin: CoverOrigin::Root,
            parent: 0,
        }],
        gaps: Vec::new(),
    };
    let mut levels = vec![root];
    let mut g = f.clone();
    let (mut off, mut sc) = (T::zero(), T::one());
    let (mut a_time, mut b_time) = (1u64, 1u64);
    let c = f.c();
    for (k, &(a, b)) in types.iter().enumerate() {
        let n = (k + 1) as u32;
        let rs = detect(&g, a, b)?;
        let p = off + sc * rs.p;
        let q = off + sc * rs.q;
        let (a_new, b_new) = (
            a_time + a as u64 * b_time,
            b_time + b as u64 * a_time,
        );
        let pull_side = |value: T,
                         steps: u64,
                         side: &str,
                         origin: fn(u64) -> CoverOrigin|
         -> Result<Vec<(Interval<T>, CoverOrigin)>> {
            let what = format!("generation {n} {side} cycle");
            // The forward orbit of the critical value fixes the branch of
            // every pullback step.
            let mut orbit = Vec::with_capacity(steps as usize);
            let mut x = value;
            for _ in 0..steps {
                orbit.push(x);
                x = f.eval(x).map_err(|e| Error::CoverBug(format!("{what}: {e}")))?;
            }
            let slack = lit::<T>(COVER_SLACK).max((q - p) * lit(COVER_SLACK));
            if x < p - slack || x > q + slack {
                return Err(Error::CoverBug(format!(
                    "{what}: transfer image {x} of the critical value missed C_n = [{p}, {q}]"
                )));
            }
            let mut out = Vec::with_capacity(steps as usize);
            let (mut lo, mut hi) = (p, q);
            for i in (1..=steps).rev() {
                let xi = orbit[i as usize - 1];
                let branch = if xi < c { Branch::Left } else { Branch::Right };
                let escape = |e: Error| {
                    Error::CoverBug(format!("{what}: pullback {i} escapes its branch: {e}"))
                };
                lo = f.inverse_branch(branch, lo).map_err(escape)?;
                hi = f.inverse_branch(branch, hi).map_err(escape)?;
                let pad = lit::<T>(COVER_SLACK).max((hi - lo) * lit(COVER_SLACK));
                if xi < lo - pad || xi > hi + pad {
                    return Err(Error::CoverBug(format!(
                        "{what}: orbit point {xi} fell outside its pullback [{lo}, {hi}]"
                    )));
                }
                out.push((Interval::new(lo, hi)?, origin(i)));
            }
            out.reverse();
            Ok(out)
        };
        let mut intervals = vec![(Interval::new(p, q)?, CoverOrigin::Center)];
        intervals.extend(pull_side(f.lcv(), a_new - 1, "U", CoverOrigin::U)?);
        intervals.extend(pull_side(f.rcv(), b_new - 1, "V", CoverOrigin::V)?);
        // Same-generation disjointness; store left to right.
        let mut order: Vec<usize> = (0..intervals.len()).collect();
        order.sort_by(|&i, &j| {
            intervals[i].0.lo().partial_cmp(&intervals[j].0.lo()).unwrap()
        });
        for w in order.windows(2) {
            let (lhs, rhs) = (&intervals[w[0]].0, &intervals[w[1]].0);
            if rhs.lo() < lhs.hi() - lit(COVER_SLACK) {
                return Err(Error::CoverBug(format!(
                    "generation {n}: intervals {:?} and {:?} overlap",
                    intervals[w[0]].1, intervals[w[1]].1
                )));
            }
        }
        let intervals: Vec<(Interval<T>, CoverOrigin)> =
            order.iter().map(|&i| intervals[i]).collect();
        // Nesting: assign each interval to a parent of the previous level.
        let parents = &levels[k].intervals;
        let mut placed = Vec::with_capacity(intervals.len());
        for (iv, origin) in &intervals {
            let slack = lit::<T>(COVER_SLACK).max(iv.len() * lit(COVER_SLACK));
            let parent = parents
                .iter()
                .position(|p| {
                    iv.lo() >= p.interval.lo() - slack && iv.hi() <= p.interval.hi() + slack
                })
                .ok_or_else(|| {
                    Error::CoverBug(format!(
                        "generation {n}: interval {origin:?} [{}, {}] nests in no parent",
                        iv.lo(),
                        iv.hi()
                    ))
                })?;
            placed.push(CoverInterval { interval: *iv, origin: *origin, parent });
        }
        // Gaps: complement components inside each parent.
        let mut gaps = Vec::new();
        for (pi, parent) in parents.iter().enumerate() {
            let mut children: Vec<&CoverInterval<T>> =
                placed.iter().filter(|ci| ci.parent == pi).collect();
            if children.is_empty() {
                continue;
            }
            children.sort_by(|x, y| {
                x.interval.lo().partial_cmp(&y.interval.lo()).unwrap()
            });
            let min_gap = parent.interval.len() * lit(COVER_SLACK);
            let mut cursor = parent.interval.lo();
            for ch in &children {
                if ch.interval.lo() - cursor > min_gap {
                    gaps.push((pi, Interval::new(cursor, ch.interval.lo())?));
                }
                cursor = ch.interval.hi();
            }
            if parent.interval.hi() - cursor > min_gap {
                gaps.push((pi, Interval::new(cursor, parent.interval.hi())?));
            }
        }
        levels.push(CoverLevel {
            n,
            type_ab: (a, b),
            return_times: (a_new, b_new),
            intervals: placed,
            gaps,
        });
        let rg = renormalize(&g, &rs)?;
        off = off + sc * rs.p;
        sc = sc * (rs.q - rs.p);
        a_time = a_new;
        b_time = b_new;
        g = rg;
    }
    Ok(levels)
}

/// Summary statistics of one cover generation.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LevelStats<T> {
    /// Generation number.
    pub n: u32,
    /// Number of intervals.
    pub count: usize,
    /// Total length `|Lambda_n|`.
    pub total_length: T,
    /// Mean interval length.
    pub mean_length: T,
    /// Smallest child/parent length ratio.
    pub min_ratio: T,
    /// Largest child/parent length ratio.
    pub max_ratio: T,
    /// Smallest gap/parent length ratio (1 if no gaps).
    pub min_gap_ratio: T,
    /// Largest gap/parent length ratio (0 if no gaps).
    pub max_gap_ratio: T,
}

/// Per-generation statistics of a cover list.
pub fn cover_stats<T: Real>(levels: &[CoverLevel<T>]) -> Vec<LevelStats<T>> {
    let mut out = Vec::new();
    for (k, level) in levels.iter().enumerate() {
        let (mut min_r, mut max_r) = (T::one(), T::zero());
        let (mut min_g, mut max_g) = (T::one(), T::zero());
        if k > 0 {
            let parents = &levels[k - 1].intervals;
            for ci in &level.intervals {
                let r = ci.interval.len() / parents[ci.parent].interval.len();
                min_r = min_r.min(r);
                max_r = max_r.max(r);
            }
            for (pi, gap) in &level.gaps {
                let r = gap.len() / parents[*pi].interval.len();
                min_g = min_g.min(r);
                max_g = max_g.max(r);
            }
        }
        out.push(LevelStats {
            n: level.n,
            count: level.count(),
            total_length: level.total_length(),
            mean_length: level.mean_length(),
            min_ratio: min_r,
            max_ratio: max_r,
            min_gap_ratio: min_g,
            max_gap_ratio: max_g,
        });
    }
    out
}

/// Box-counting dimension estimate from cover data.
#[derive(Clone, Debug, Serialize)]
pub struct DimensionEstimate<T> {
    /// Least-squares slope of `log(count)` against `-log(mean length)`.
    pub slope: T,
    /// Standard error of the slope.
    pub stderr: T,
    /// Largest absolute fit residual.
    pub residual: T,
    /// Number of levels used.
    pub levels: usize,
    /// Whether the estimate lies strictly inside `(0, 1)`.
    pub in_unit: bool,
}

impl<T: Real> DimensionEstimate<T> {
    /// Two-sigma confidence interval for the slope.
    pub fn ci(&self) -> (T, T) {
        let w = self.stderr * lit(2.0);
        (self.slope - w, self.slope + w)
    }
}

/// Least-squares box-dimension estimate over `(count, mean length)` pairs.
///
/// Accepts raw pairs so synthetic covers with known dimension can be fed
/// directly; use [`dimension_pairs`] to extract them from built covers.
pub fn box_dimension_estimate<T: Real>(data: &[(usize, T)]) -> Result<DimensionEstimate<T>> {
    if data.len() < 3 {
        return Err(Error::Insufficient(format!(
            "box dimension needs at least 3 cover levels, got {}",
            data.len()
        )));
    }
    let n = count::<T>(data.len());
    let pts: Vec<(T, T)> = data
        .iter()
        .map(|&(cnt, len)| (-(len.ln()), count::<T>(cnt).ln()))
        .collect();
    let mx = pts.iter().fold(T::zero(), |s, p| s + p.0) / n;
    let my = pts.iter().fold(T::zero(), |s, p| s + p.1) / n;
    let sxx = pts.iter().fold(T::zero(), |s, p| s + (p.0 - mx) * (p.0 - mx));
    let sxy = pts.iter().fold(T::zero(), |s, p| s + (p.0 - mx) * (p.1 - my));
    if sxx <= T::zero() {
        return Err(Error::Insufficient("cover lengths do not decrease".into()));
    }
    let slope = sxy / sxx;
    let mut sse = T::zero();
    let mut residual = T::zero();
    for p in &pts {
        let e = p.1 - (my + slope * (p.0 - mx));
        sse = sse + e * e;
        residual = residual.max(e.abs());
    }
    let dof = (data.len() - 2).max(1);
    let stderr = (sse / count::<T>(dof) / sxx).sqrt();
    Ok(DimensionEstimate {
        slope,
        stderr,
        residual,
        levels: data.len(),
        in_unit: slope > T::zero() && slope < T::one(),
    })
}

/// Extracts `(count, mean length)` pairs from built covers.
pub fn dimension_pairs<T: Real>(levels: &[CoverLevel<T>]) -> Vec<(usize, T)> {
    levels.iter().map(|l| (l.count(), l.mean_length())).collect()
}

/// Niceness report for an interval: no boundary orbit re-enters.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Niceness {
    /// Whether both boundary orbits stay outside the interior.
    pub nice: bool,
    /// Detected period of each boundary point, if any before the cap.
    pub periods: [Option<usize>; 2],
}

/// Checks that no forward image of a boundary point enters `int C`.
///
/// Boundary points of return intervals are periodic, so the orbit is
/// followed until it closes up (within `1e-9`); an open orbit is followed
/// to the cap [`tol::NICE_CAP`] and accepted if it never entered.
pub fn nice_check<T: Real>(f: &LorenzMap<T>, c_iv: Interval<T>) -> Result<Niceness> {
    let mut periods = [None, None];
    for (k, e) in [c_iv.lo(), c_iv.hi()].into_iter().enumerate() {
        let mut x = e;
        for i in 1..=tol::NICE_CAP {
            x = f.eval(x)?;
            if x > c_iv.lo() + lit(1e-14) && x < c_iv.hi() - lit(1e-14) {
                return Ok(Niceness { nice: false, periods });
            }
            if (x - e).abs() < lit(1e-9) {
                periods[k] = Some(i);
                break;
            }
        }
    }
    Ok(Niceness { nice: true, periods })
}

/// Landing data of the transfer map to a nice interval.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Transfer<T> {
    /// First landing point `f^tau(x) in C`.
    pub landing: T,
    /// Transfer time `tau(x)`, smallest `n >= 0` entering `C`.
    pub time: usize,
}

/// Transfer map to a nice interval: first entry of the orbit of `x`.
///
/// Fails with [`Error::CapExceeded`] after [`tol::TRANSFER_CAP`] steps
/// (the orbit may lie in the measure-zero complement of the domain, e.g.
/// the boundary fixed points).
pub fn transfer<T: Real>(f: &LorenzMap<T>, c_iv: Interval<T>, x: T) -> Result<Transfer<T>> {
    if !(T::zero()..=T::one()).contains(&x) {
        return Err(Error::Domain(format!("transfer start {x} outside [0, 1]")));
    }
    let nice = nice_check(f, c_iv)?;
    if !nice.nice {
        return Err(Error::Domain(format!(
            "interval [{}, {}] is not nice: a boundary orbit re-enters",
            c_iv.lo(),
            c_iv.hi()
        )));
    }
    let mut y = x;
    for n in 0..tol::TRANSFER_CAP {
        if y >= c_iv.lo() && y <= c_iv.hi() {
            return Ok(Transfer { landing: y, time: n });
        }
        y = f.eval(y)?;
    }
    Err(Error::CapExceeded {
        steps: tol::TRANSFER_CAP,
        detail: format!("orbit of {x} never entered [{}, {}]", c_iv.lo(), c_iv.hi()),
    })
}

/// Weak-Markov diagnostic: how deep each return interval nests.
#[derive(Clone, Debug, Serialize)]
pub struct WeakMarkovReport<T> {
    /// Per consecutive pair `(C_n, C_(n+1))`: the two side-gap ratios
    /// `|component of C_n minus C_(n+1)| / |C_(n+1)|`.
    pub ratios: Vec<(T, T)>,
    /// Minimum ratio over all levels and sides.
    pub delta: T,
    /// Relative variation of the per-level minimum between the last two
    /// levels.
    pub last_variation: T,
    /// Whether the variation is below 50%.
    pub stable: bool,
}

/// Measures the delta-scaled nesting of consecutive return intervals.
pub fn weak_markov_check<T: Real>(
    f: &LorenzMap<T>,
    types: &[(u32, u32)],
) -> Result<WeakMarkovReport<T>> {
    if types.is_empty() {
        return Err(Error::InvalidInput("weak-Markov check needs depth >= 1".into()));
    }
    let mut g = f.clone();
    let (mut off, mut sc) = (T::zero(), T::one());
    let mut cs: Vec<(T, T)> = vec![(T::zero(), T::one())];
    for &(a, b) in types {
        let rs = detect(&g, a, b)?;
        cs.push((off + sc * rs.p, off + sc * rs.q));
        let rg = renormalize(&g, &rs)?;
        off = off + sc * rs.p;
        sc = sc * (rs.q - rs.p);
        g = rg;
    }
    let mut ratios = Vec::new();
    let mut mins = Vec::new();
    for w in cs.windows(2) {
        let (outer, inner) = (w[0], w[1]);
        if !(inner.0 > outer.0 && inner.1 < outer.1) {
            return Err(Error::CoverBug(format!(
                "return intervals do not nest strictly: [{}, {}] in [{}, {}]",
                inner.0, inner.1, outer.0, outer.1
            )));
        }
        let len = inner.1 - inner.0;
        let pair = ((inner.0 - outer.0) / len, (outer.1 - inner.1) / len);
        mins.push(pair.0.min(pair.1));
        ratios.push(pair);
    }
    let delta = mins.iter().fold(T::infinity(), |m, &r| m.min(r));
    let last_variation = if mins.len() >= 2 {
        let (x, y) = (mins[mins.len() - 2], mins[mins.len() - 1]);
        (x - y).abs() / x.max(y)
    } else {
        T::zero()
    };
    Ok(WeakMarkovReport { ratios, delta, last_variation, stable: last_variation < lit(0.5) })
}

/// First-entry graph on one cover generation.
#[derive(Clone, Debug, Serialize)]
pub struct LoopGraph<T> {
    /// Generation number.
    pub n: u32,
    /// Type of the generation (used for closed-form winding checks).
    pub type_ab: (u32, u32),
    /// The node intervals (a copy of the cover generation).
    pub nodes: Vec<CoverInterval<T>>,
    /// Out-edges per node.
    pub edges: Vec<Vec<usize>>,
    /// Index of `C_n` (out-degree 2).
    pub zero: usize,
    /// Index of `U_n^1`, the head of the left-half loop.
    pub one1: usize,
    /// Index of `V_n^1`, the head of the right-half loop.
    pub one2: usize,
    /// Nodes of the left loop, from `one1` around to `zero` inclusive.
    pub loop1: Vec<usize>,
    /// Nodes of the right loop.
    pub loop2: Vec<usize>,
}

fn overlaps_positively<T: Real>(a: (T, T), b: Interval<T>, slack: T) -> bool {
    a.0.max(b.lo()) < a.1.min(b.hi()) - slack
}

/// Builds the loop graph of one cover generation under the original map.
///
/// Edges are computed geometrically: `I -> J` iff `f(I)` overlaps `J` with
/// positive length. The structure theorem is then enforced: out-degree one
/// everywhere except the center (degree two), and exactly two loops from
/// `U_n^1` and `V_n^1` back to the center, disjoint away from it.
pub fn build_loop_graph<T: Real>(f: &LorenzMap<T>, level: &CoverLevel<T>) -> Result<LoopGraph<T>> {
    if level.n == 0 {
        return Err(Error::InvalidInput("loop graph needs a generation >= 1".into()));
    }
    let nodes = level.intervals.clone();
    let zero = 0usize;
    let find = |origin: CoverOrigin| -> Result<usize> {
        nodes.iter().position(|ci| ci.origin == origin).ok_or_else(|| {
            Error::CoverBug(format!("generation {} has no {origin:?} interval", level.n))
        })
    };
    let one1 = find(CoverOrigin::U(1))?;
    let one2 = find(CoverOrigin::V(1))?;
    let c = f.c();
    let mut edges: Vec<Vec<usize>> = Vec::with_capacity(nodes.len());
    for (i, ci) in nodes.iter().enumerate() {
        // The center contains c: its image is the union of two intervals.
        let mut images = Vec::new();
        if i == zero {
            images.push(step_interval(f, (ci.interval.lo(), c), "loop graph")?);
            images.push(step_interval(f, (c, ci.interval.hi()), "loop graph")?);
        } else {
            images.push(step_interval(
                f,
                (ci.interval.lo(), ci.interval.hi()),
                "loop graph",
            )?);
        }
        let mut out = Vec::new();
        for (j, cj) in nodes.iter().enumerate() {
            let slack = cj.interval.len() * lit(COVER_SLACK);
            if images.iter().any(|&im| overlaps_positively(im, cj.interval, slack))
                && !out.contains(&j)
            {
                out.push(j);
            }
        }
        let want = if i == zero { 2 } else { 1 };
        if out.len() != want {
            return Err(Error::CoverBug(format!(
                "generation {}: node {:?} has out-degree {}, expected {want}",
                level.n,
                ci.origin,
                out.len()
            )));
        }
        edges.push(out);
    }
    let walk = |start: usize| -> Result<Vec<usize>> {
        let mut path = vec![start];
        let mut cur = start;
        for _ in 0..nodes.len() {
            cur = edges[cur][0];
            path.push(cur);
            if cur == zero {
                return Ok(path);
            }
        }
        Err(Error::CoverBug(format!(
            "generation {}: walk from node {start} never returns to the center",
            level.n
        )))
    };
    let loop1 = walk(one1)?;
    let loop2 = walk(one2)?;
    // Monotone types: the loops share only the center and cover everything.
    for i in &loop1 {
        if *i != zero && loop2.contains(i) {
            return Err(Error::CoverBug(format!(
                "generation {}: loops overlap at node {i} away from the center",
                level.n
            )));
        }
    }
    if loop1.len() + loop2.len() - 1 != nodes.len() {
        return Err(Error::CoverBug(format!(
            "generation {}: loops visit {} nodes, cover has {}",
            level.n,
            loop1.len() + loop2.len() - 1,
            nodes.len()
        )));
    }
    if loop1.len() as u64 != level.return_times.0 || loop2.len() as u64 != level.return_times.1
    {
        return Err(Error::CoverBug(format!(
            "generation {}: loop lengths ({}, {}) disagree with return times {:?}",
            level.n,
            loop1.len(),
            loop2.len(),
            level.return_times
        )));
    }
    Ok(LoopGraph {
        n: level.n,
        type_ab: level.type_ab,
        nodes,
        edges,
        zero,
        one1,
        one2,
        loop1,
        loop2,
    })
}

/// Winding matrix between consecutive generations.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct WindingMatrix {
    /// `w[i][j]` = how often child loop `j+1` threads parent loop `i+1`.
    pub w: [[u64; 2]; 2],
}

impl WindingMatrix {
    /// The closed form `[[1, b], [a, 1]]` of a monotone type `(a, b)`.
    pub fn monotone(a: u32, b: u32) -> Self {
        WindingMatrix { w: [[1, b as u64], [a as u64, 1]] }
    }

    /// Applies the matrix to a positive pair.
    pub fn apply<T: Real>(&self, z: (T, T)) -> (T, T) {
        (
            count::<T>(self.w[0][0] as usize) * z.0 + count::<T>(self.w[0][1] as usize) * z.1,
            count::<T>(self.w[1][0] as usize) * z.0 + count::<T>(self.w[1][1] as usize) * z.1,
        )
    }

    /// Birkhoff contraction bound `(sqrt(det') - 1)/(sqrt(det') + 1)` with
    /// `det' = w01 w10 / (w00 w11)`, i.e. `tanh` of a quarter of the
    /// Hilbert diameter of the image cone.
    pub fn contraction<T: Real>(&self) -> T {
        let r = count::<T>((self.w[0][1] * self.w[1][0]) as usize)
            / count::<T>((self.w[0][0] * self.w[1][1]) as usize);
        let s = r.sqrt();
        (s - T::one()).abs() / (s + T::one())
    }
}

/// Counts how the child loops thread the parent loops.
///
/// `w[i][j]` counts child loop-`j` nodes contained in the parent interval
/// `one_(n)^(i+1)`: every pass of a child loop through parent loop `i`
/// enters through its first interval exactly once. Containment must be
/// unambiguous; a straddling node is a cover bug. For monotone types the
/// result must equal [`WindingMatrix::monotone`] of the child type.
pub fn winding_matrix<T: Real>(
    parent: &LoopGraph<T>,
    child: &LoopGraph<T>,
) -> Result<WindingMatrix> {
    if child.n != parent.n + 1 {
        return Err(Error::InvalidInput(format!(
            "winding matrix needs consecutive generations, got {} and {}",
            parent.n, child.n
        )));
    }
    let entry = [parent.nodes[parent.one1].interval, parent.nodes[parent.one2].interval];
    let mut w = [[0u64; 2]; 2];
    for (j, lp) in [&child.loop1, &child.loop2].into_iter().enumerate() {
        for &node in lp {
            let iv = child.nodes[node].interval;
            let slack = iv.len() * lit::<T>(COVER_SLACK) + lit(1e-14);
            for (i, e) in entry.iter().enumerate() {
                let inside = iv.lo() >= e.lo() - slack && iv.hi() <= e.hi() + slack;
                let outside = iv.hi() <= e.lo() + slack || iv.lo() >= e.hi() - slack;
                match (inside, outside) {
                    (true, false) => w[i][j] += 1,
                    (false, true) => {}
                    _ => {
                        return Err(Error::CoverBug(format!(
                            "child node [{}, {}] straddles parent entry [{}, {}]",
                            iv.lo(),
                            iv.hi(),
                            e.lo(),
                            e.hi()
                        )))
                    }
                }
            }
        }
    }
    let got = WindingMatrix { w };
    let expect = WindingMatrix::monotone(child.type_ab.0, child.type_ab.1);
    if got.w != expect.w {
        return Err(Error::CoverBug(format!(
            "winding matrix {:?} differs from the monotone closed form {:?}",
            got.w, expect.w
        )));
    }
    Ok(got)
}

/// Projective Hilbert distance between two rays of the open quadrant.
///
/// Inputs are scale-invariant: each ray is first normalized to the unit-sum
/// cross-section, where the line through the two representatives is
/// extended to the boundary of the quadrant on both sides and the distance
/// is the log of the cross-ratio of the four points. On the cross-section
/// this reduces to `|log((x1 y2) / (x2 y1))|`.
pub fn hilbert_distance<T: Real>(z: (T, T), zp: (T, T)) -> Result<T> {
    for &(x, y) in &[z, zp] {
        if !(x > T::zero() && y > T::zero()) || !x.is_finite() || !y.is_finite() {
            return Err(Error::Domain(format!(
                "Hilbert metric undefined outside the open quadrant: ({x}, {y})"
            )));
        }
    }
    let z = (z.0 / (z.0 + z.1), z.1 / (z.0 + z.1));
    let zp = (zp.0 / (zp.0 + zp.1), zp.1 / (zp.0 + zp.1));
    let d = (zp.0 - z.0, zp.1 - z.1);
    if d.0 == T::zero() && d.1 == T::zero() {
        return Ok(T::zero());
    }
    // Boundary hits of the line z + t d in the parameter t (z at 0, z' at 1).
    let mut behind: Option<T> = None; // t < 0 side (w)
    let mut beyond: Option<T> = None; // t > 1 side (w')
    for (num, den) in [(z.0, d.0), (z.1, d.1)] {
        if den == T::zero() {
            continue;
        }
        let t = -num / den;
        if t < T::zero() {
            behind = Some(behind.map_or(t, |b: T| b.max(t)));
        } else if t > T::one() {
            beyond = Some(beyond.map_or(t, |b: T| b.min(t)));
        } else {
            return Err(Error::Domain(
                "segment touches the quadrant boundary between the points".into(),
            ));
        }
    }
    // Cross-ratio factors in t-units; an unbounded side contributes 1.
    let f1 = match behind {
        Some(tw) => (T::one() - tw) / (-tw),
        None => T::one(),
    };
    let f2 = match beyond {
        Some(tw) => tw / (tw - T::one()),
        None => T::one(),
    };
    Ok((f1 * f2).ln())
}

/// History of propagating the positive quadrant through winding matrices.
#[derive(Clone, Debug, Serialize)]
pub struct ConeHistory<T> {
    /// Hilbert width after each application, deepest matrix first.
    pub widths: Vec<T>,
    /// Final extreme rays (images of the quadrant edges), sum-normalized.
    pub rays: ((T, T), (T, T)),
    /// Hilbert midpoint ray of the final cone, sum-normalized.
    pub mid: (T, T),
    /// Final width (0 when the cone collapses to a ray).
    pub width: T,
}

/// Propagates the quadrant through `W_1 (W_2 (... W_m K))`.
///
/// Matrices are given shallowest first and applied from the tail inward,
/// matching the nested intersection `I_1 = cap_m W_1 ... W_(m-1) K`. The
/// extreme rays are the images of the quadrant edges; widths are recorded
/// after every application and are non-increasing.
pub fn cone_propagate<T: Real>(mats: &[WindingMatrix]) -> Result<ConeHistory<T>> {
    if mats.is_empty() {
        return Err(Error::InvalidInput("cone propagation needs at least one matrix".into()));
    }
    let normalize = |z: (T, T)| -> (T, T) {
        let s = z.0 + z.1;
        (z.0 / s, z.1 / s)
    };
    let mut r1 = (T::one(), T::zero());
    let mut r2 = (T::zero(), T::one());
    let mut widths = Vec::with_capacity(mats.len());
    for w in mats.iter().rev() {
        r1 = normalize(w.apply(r1));
        r2 = normalize(w.apply(r2));
        let width = if r1.0.min(r1.1) <= T::zero() || r2.0.min(r2.1) <= T::zero() {
            return Err(Error::CoverBug(
                "cone propagation left the open quadrant".into(),
            ));
        } else if r1 == r2 {
            T::zero()
        } else {
            hilbert_distance(r1, r2)?
        };
        widths.push(width);
    }
    let mid = {
        // Hilbert midpoint: geometric mean of the boundary slopes.
        let s = ((r1.0 / r1.1) * (r2.0 / r2.1)).sqrt();
        normalize((s, T::one()))
    };
    let width = *widths.last().unwrap();
    Ok(ConeHistory { widths, rays: (r1, r2), mid, width })
}

/// Invariant-measure computation report.
#[derive(Clone, Debug, Serialize)]
pub struct MeasureReport<T> {
    /// Winding matrices measured from genuine covers (levels 1 on).
    pub genuine: Vec<WindingMatrix>,
    /// Number of closed-form tail matrices appended from the type data.
    pub tail: usize,
    /// Cone widths after each application (deepest matrix first).
    pub widths: Vec<T>,
    /// Final cone width at level 1.
    pub width: T,
    /// Numerical uniqueness: final width below `1e-10`.
    pub unique: bool,
    /// Measured per-step contraction ratio and its Birkhoff bound.
    pub contraction: Vec<(T, T)>,
    /// Loop coefficients `(x1, x2)` at level 1, mass-normalized.
    pub x: (T, T),
    /// The two extremal coefficient pairs (both mass-normalized).
    pub extremal: [(T, T); 2],
    /// Level-1 node weights, labelled by origin.
    pub node_weights: Vec<(String, T)>,
    /// Largest push-forward inconsistency `|z_n - W_n z_(n+1)|`.
    pub pushforward_residual: T,
    /// Largest invariance defect over level-1 nodes away from the loop
    /// heads: `|mu(f^-1 I) - mu(I)|`.
    pub invariance_residual: T,
    /// Node-weighted total mass (should be 1).
    pub mass: T,
}

/// Mass-normalizes a coefficient ray against the level-1 loop sizes.
fn mass_normalize<T: Real>(z: (T, T), n1: usize, n2: usize) -> (T, T) {
    let mass = z.0 * count::<T>(n1) + z.1 * count::<T>(n2);
    (z.0 / mass, z.1 / mass)
}

/// Computes the invariant measure(s) of the attractor from winding data.
///
/// Builds genuine covers and loop graphs to `types.len()` generations,
/// measures and verifies every winding matrix, then appends `tail`
/// closed-form matrices continuing the type pattern (the combinatorial
/// type of the underlying infinitely renormalizable map is input data;
/// finite covers only reach the first few generations). The quadrant cone
/// is propagated through the whole sequence: a final Hilbert width below
/// `1e-10` certifies a numerically unique measure, otherwise the two
/// extremal measures are reported. The coefficient pair is normalized so
/// the node-weighted mass over generation 1 is exactly 1, and invariance
/// is checked directly on the level-1 graph.
pub fn invariant_measure<T: Real>(
    f: &LorenzMap<T>,
    types: &[(u32, u32)],
    tail: usize,
) -> Result<MeasureReport<T>> {
    if types.len() < 2 {
        return Err(Error::InvalidInput(
            "invariant measure needs at least two cover generations".into(),
        ));
    }
    let covers = build_covers(f, types)?;
    let graphs: Vec<LoopGraph<T>> = covers[1..]
        .iter()
        .map(|lvl| build_loop_graph(f, lvl))
        .collect::<Result<_>>()?;
    let mut mats: Vec<WindingMatrix> = Vec::new();
    for pair in graphs.windows(2) {
        mats.push(winding_matrix(&pair[0], &pair[1])?);
    }
    let genuine = mats.clone();
    for k in 0..tail {
        let (a, b) = types[(genuine.len() + 1 + k) % types.len()];
        mats.push(WindingMatrix::monotone(a, b));
    }
    let cone = cone_propagate::<T>(&mats)?;
    // Per-step contraction: ratio of consecutive widths vs the bound of
    // the matrix applied (skip the first application, which starts from
    // the infinite-width quadrant).
    let mut contraction = Vec::new();
    for k in 1..cone.widths.len() {
        let m = &mats[mats.len() - 1 - k];
        let ratio = if cone.widths[k - 1] > T::zero() {
            cone.widths[k] / cone.widths[k - 1]
        } else {
            T::zero()
        };
        contraction.push((ratio, m.contraction::<T>()));
    }
    // Canonical coefficient chain: z_n = W_n z_(n+1), seeded at the
    // deepest level with the diagonal ray.
    let seed = (lit::<T>(0.5), lit::<T>(0.5));
    let mut z = seed;
    let mut chain = vec![seed];
    for w in mats.iter().rev() {
        let nz = w.apply(z);
        let s = nz.0 + nz.1;
        z = (nz.0 / s, nz.1 / s);
        chain.push(z);
    }
    let mut pushforward_residual = T::zero();
    for (k, w) in mats.iter().rev().enumerate() {
        let img = w.apply(chain[k]);
        let s = img.0 + img.1;
        let got = chain[k + 1];
        pushforward_residual = pushforward_residual
            .max((img.0 / s - got.0).abs())
            .max((img.1 / s - got.1).abs());
    }
    let g1 = &graphs[0];
    let (n1, n2) = (g1.loop1.len(), g1.loop2.len());
    let x = mass_normalize(z, n1, n2);
    let extremal = [
        mass_normalize(cone.rays.0, n1, n2),
        mass_normalize(cone.rays.1, n1, n2),
    ];
    // Node weights: indicator sums of the two loop measures.
    let weight_of = |node: usize| -> T {
        let mut w = T::zero();
        if g1.loop1.contains(&node) {
            w = w + x.0;
        }
        if g1.loop2.contains(&node) {
            w = w + x.1;
        }
        w
    };
    let node_weights: Vec<(String, T)> = g1
        .nodes
        .iter()
        .enumerate()
        .map(|(i, ci)| (format!("{:?}", ci.origin), weight_of(i)))
        .collect();
    let mass = node_weights.iter().fold(T::zero(), |s, nw| s + nw.1);
    // Invariance: mu(f^-1 I) = mu(I) away from the loop heads, whose
    // predecessor (the center) splits.
    let mut invariance_residual = T::zero();
    for i in 0..g1.nodes.len() {
        if i == g1.one1 || i == g1.one2 {
            continue;
        }
        let pre: T = (0..g1.nodes.len())
            .filter(|&j| g1.edges[j].contains(&i))
            .map(weight_of)
            .fold(T::zero(), |s, w| s + w);
        invariance_residual = invariance_residual.max((pre - weight_of(i)).abs());
    }
    Ok(MeasureReport {
        genuine,
        tail,
        width: cone.width,
        unique: cone.width < lit(1e-10),
        widths: cone.widths,
        contraction,
        x,
        extremal,
        node_weights,
        pushforward_residual,
        invariance_residual,
        mass,
    })
}
