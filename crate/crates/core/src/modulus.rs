//! Modulus of convexity of l^p.
//!
//! Three engines compute `δ(ε) = inf { 1 - ½‖x+y‖ : ‖x‖ = ‖y‖ = 1, ‖x-y‖ ≥ ε }`:
//!
//! * [`clarkson_delta`]: the closed form `1 - (1 - (ε/2)^p)^{1/p}` for `p ≥ 2`;
//! * [`hanner_delta`]: the root of `|1-δ+ε/2|^p + |1-δ-ε/2|^p = 2` for
//!   `1 < p ≤ 2`, located by bisection;
//! * [`empirical_delta`]: a direct search over feasible pairs in a concrete
//!   [`LpSpace`], which yields an upper bound together with a witness pair.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaces::{LpSpace, Vector};

/// Absolute bisection tolerance for the implicit equation.
pub const HANNER_TOL: f64 = 1e-12;

/// Bisection tolerance for [`delta_from_constraint`].
pub const CONSTRAINT_TOL: f64 = 1e-10;

/// Monotonicity slack allowed between empirical curve points.
pub const EMPIRICAL_MONOTONE_SLACK: f64 = 2e-3;

/// Slack allowed on witness feasibility and on `δ ≤ ε/2` for empirical points.
pub const WITNESS_TOL: f64 = 1e-9;

const REFINE_LEVELS: usize = 30;
const REFINE_START_STEP: f64 = 0.125;
const REFINE_MAX_SWEEPS: usize = 40;
const TIGHTEN_STEPS: usize = 48;
const REJECTION_ATTEMPTS: usize = 100;
const MAX_CHUNKS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Clarkson,
    Hanner,
    Empirical,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Clarkson => "clarkson",
            Method::Hanner => "hanner",
            Method::Empirical => "empirical",
        }
    }

    pub fn is_closed_form(&self) -> bool {
        !matches!(self, Method::Empirical)
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "clarkson" => Ok(Method::Clarkson),
            "hanner" => Ok(Method::Hanner),
            "empirical" => Ok(Method::Empirical),
            other => Err(Error::Config(format!("unknown method `{other}`"))),
        }
    }
}

/// A single sample `(ε, δ(ε))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusPoint {
    pub eps: f64,
    pub delta: f64,
    pub method: Method,
    /// Feasible pair attaining `delta`; only empirical points carry one.
    pub witness: Option<(Vector, Vector)>,
}

impl ModulusPoint {
    /// Re-evaluates the witness pair from scratch.
    pub fn check_witness(&self, space: &LpSpace) -> Result<()> {
        let Some((x, y)) = &self.witness else {
            return Ok(());
        };
        let nx = space.norm(x)?;
        let ny = space.norm(y)?;
        if (nx - 1.0).abs() > WITNESS_TOL || (ny - 1.0).abs() > WITNESS_TOL {
            return Err(Error::Certificate(format!("witness norms {nx}, {ny} are not 1")));
        }
        let dist = space.dist(x, y)?;
        if dist < self.eps - WITNESS_TOL {
            return Err(Error::Certificate(format!(
                "witness distance {dist} is below eps = {}",
                self.eps
            )));
        }
        let value = 1.0 - 0.5 * space.sum_norm_unchecked(x, y);
        if (value - self.delta).abs() > WITNESS_TOL {
            return Err(Error::Certificate(format!(
                "witness value {value} differs from delta {}",
                self.delta
            )));
        }
        Ok(())
    }
}

/// Which space a curve was computed for. Closed-form curves describe the
/// sequence space itself and carry no dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveSpace {
    pub p: f64,
    pub dim: Option<usize>,
}

/// Samples of `ε ↦ δ(ε)` with strictly increasing `ε`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusCurve {
    pub space: CurveSpace,
    points: Vec<ModulusPoint>,
}

impl ModulusCurve {
    pub fn new(space: CurveSpace, points: Vec<ModulusPoint>) -> Result<Self> {
        if points.windows(2).any(|w| w[1].eps <= w[0].eps) {
            return Err(Error::Precondition("curve eps values must be strictly increasing".into()));
        }
        Ok(ModulusCurve { space, points })
    }

    pub fn points(&self) -> &[ModulusPoint] {
        &self.points
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 2.0) {
        return Err(Error::Domain(format!("eps = {eps} is outside (0, 2]")));
    }
    Ok(())
}

pub fn clarkson_delta(p: f64, eps: f64) -> Result<f64> {
    if !(p.is_finite() && p >= 2.0) {
        return Err(Error::Domain(format!("closed form needs p >= 2, got {p}")));
    }
    check_eps(eps)?;
    // 1 - (1 - t)^{1/p} without cancellation when t = (ε/2)^p is tiny
    let t = (0.5 * eps).powf(p);
    Ok(-((-t).ln_1p() / p).exp_m1())
}

/// Left-hand side of the implicit equation minus 2. Decreasing in `delta`
/// on `[0, 1]` because `s ↦ |s+a|^p + |s-a|^p` is even and convex.
fn hanner_residual(p: f64, eps: f64, delta: f64) -> f64 {
    let s = 1.0 - delta;
    let a = 0.5 * eps;
    (s + a).abs().powf(p) + (s - a).abs().powf(p) - 2.0
}

pub fn hanner_delta(p: f64, eps: f64) -> Result<f64> {
    if !(p > 1.0 && p <= 2.0) {
        return Err(Error::Domain(format!("implicit equation needs 1 < p <= 2, got {p}")));
    }
    check_eps(eps)?;
    let g0 = hanner_residual(p, eps, 0.0);
    let g1 = hanner_residual(p, eps, 1.0);
    if g1 >= 0.0 {
        // eps = 2: δ = 1 is an exact root
        return Ok(1.0);
    }
    if g0 < 0.0 {
        if g0 > -1e-14 {
            return Ok(0.0);
        }
        return Err(Error::Numerical(format!(
            "no sign change for p = {p}, eps = {eps}: g(0) = {g0}, g(1) = {g1}"
        )));
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while hi - lo > HANNER_TOL {
        let mid = 0.5 * (lo + hi);
        if hanner_residual(p, eps, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `δ_{l^p}(ε)`, dispatching on the exponent.
pub fn lp_delta(p: f64, eps: f64) -> Result<f64> {
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::InvalidExponent(p));
    }
    if p >= 2.0 {
        clarkson_delta(p, eps)
    } else {
        hanner_delta(p, eps)
    }
}

/// Closed-form curve on the given `ε` grid.
pub fn closed_form_curve(p: f64, method: Method, grid: &[f64]) -> Result<ModulusCurve> {
    let f: fn(f64, f64) -> Result<f64> = match method {
        Method::Clarkson => clarkson_delta,
        Method::Hanner => hanner_delta,
        Method::Empirical => {
            return Err(Error::Config("empirical curves need a concrete space".into()));
        }
    };
    let points = grid
        .iter()
        .map(|&eps| {
            Ok(ModulusPoint { eps, delta: f(p, eps)?, method, witness: None })
        })
        .collect::<Result<Vec<_>>>()?;
    ModulusCurve::new(CurveSpace { p, dim: None }, points)
}

pub fn empirical_curve(
    space: &LpSpace,
    grid: &[f64],
    budget: usize,
    seed: u64,
) -> Result<ModulusCurve> {
    let points = grid
        .iter()
        .enumerate()
        .map(|(i, &eps)| empirical_delta(space, eps, budget, seed.wrapping_add(i as u64)))
        .collect::<Result<Vec<_>>>()?;
    ModulusCurve::new(CurveSpace { p: space.p(), dim: Some(space.dim()) }, points)
}

#[derive(Debug, Clone)]
struct Pair {
    x: Vec<f64>,
    y: Vec<f64>,
    value: f64,
}

struct Search<'a> {
    space: &'a LpSpace,
    eps: f64,
}

impl Search<'_> {
    fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        1.0 - 0.5 * self.space.sum_norm_unchecked(x, y)
    }

    fn feasible(&self, x: &[f64], y: &[f64]) -> bool {
        self.space.dist_unchecked(x, y) >= self.eps
    }

    fn unit(&self, v: Vec<f64>) -> Option<Vec<f64>> {
        let n = self.space.norm_unchecked(&v);
        (n > 0.0 && n.is_finite()).then(|| v.into_iter().map(|c| c / n).collect())
    }

    fn pair(&self, x: Vec<f64>, y: Vec<f64>) -> Pair {
        let value = self.value(&x, &y);
        Pair { x, y, value }
    }

    /// Point on the normalized segment from `from` towards `to`.
    fn blend(&self, from: &[f64], to: &[f64], t: f64) -> Option<Vec<f64>> {
        self.unit(from.iter().zip(to).map(|(a, b)| (1.0 - t) * a + t * b).collect())
    }

    /// Slides a feasible `y` towards `x` until the distance constraint is
    /// (nearly) active. The result is always feasible.
    fn tighten(&self, x: &[f64], y: Vec<f64>) -> Vec<f64> {
        let mut best = y;
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        let start = best.clone();
        for _ in 0..TIGHTEN_STEPS {
            let mid = 0.5 * (lo + hi);
            match self.blend(&start, x, mid) {
                Some(c) if self.feasible(x, &c) => {
                    lo = mid;
                    best = c;
                }
                _ => hi = mid,
            }
        }
        best
    }

    fn sample_pair<R: Rng>(&self, rng: &mut R) -> Pair {
        let x = self.space.random_unit_with(rng).into_inner();
        for _ in 0..REJECTION_ATTEMPTS {
            let y = self.space.random_unit_with(rng).into_inner();
            if self.feasible(&x, &y) {
                let y = self.tighten(&x, y);
                return self.pair(x, y);
            }
        }
        // Rejection rate too high: interpolate from the antipode, which is
        // feasible for every eps ≤ 2.
        let anti: Vec<f64> = x.iter().map(|c| -c).collect();
        let u = self.space.random_unit_with(rng).into_inner();
        let mut t: f64 = rng.gen();
        for _ in 0..64 {
            if let Some(y) = self.blend(&anti, &u, t) {
                if self.feasible(&x, &y) {
                    let y = self.tighten(&x, y);
                    return self.pair(x, y);
                }
            }
            t *= 0.5;
        }
        self.pair(x, anti)
    }

    fn try_move(&self, best: &mut Pair, cand_x: Vec<f64>, cand_y: Vec<f64>) -> bool {
        let (Some(x), Some(y)) = (self.unit(cand_x), self.unit(cand_y)) else {
            return false;
        };
        if !self.feasible(&x, &y) {
            return false;
        }
        let y = self.tighten(&x, y);
        let value = self.value(&x, &y);
        if value < best.value {
            *best = Pair { x, y, value };
            true
        } else {
            false
        }
    }

    /// Pattern search over single-coordinate and paired-coordinate moves with
    /// a halving step; infeasible moves are discarded.
    fn refine(&self, mut best: Pair) -> Pair {
        let d = self.space.dim();
        let mut step = REFINE_START_STEP;
        for _ in 0..REFINE_LEVELS {
            for _ in 0..REFINE_MAX_SWEEPS {
                let mut improved = false;
                for i in 0..d {
                    for s in [1.0, -1.0] {
                        let mut x = best.x.clone();
                        x[i] += s * step;
                        let y = best.y.clone();
                        improved |= self.try_move(&mut best, x, y);
                        let mut y = best.y.clone();
                        y[i] += s * step;
                        let x = best.x.clone();
                        improved |= self.try_move(&mut best, x, y);
                    }
                    for j in 0..d {
                        for (sx, sy) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                            let mut x = best.x.clone();
                            let mut y = best.y.clone();
                            x[i] += sx * step;
                            y[j] += sy * step;
                            improved |= self.try_move(&mut best, x, y);
                        }
                    }
                }
                if !improved {
                    break;
                }
            }
            step *= 0.5;
        }
        best
    }
}

/// Upper bound on the modulus of `space` at `eps` by direct search.
///
/// Always examines the antipodal pair and, for `p ≥ 2`, the pair
/// `(a, ±ε/2, 0, ...)` with `a^p + (ε/2)^p = 1` that attains the closed form.
/// `budget` random feasible pairs are drawn in up to 32 independent streams;
/// the best pair of each stream is refined and the overall minimum is kept
/// (ties go to the lower stream index), so the result depends only on the
/// inputs and the seed.
pub fn empirical_delta(space: &LpSpace, eps: f64, budget: usize, seed: u64) -> Result<ModulusPoint> {
    check_eps(eps)?;
    if budget == 0 {
        return Err(Error::Precondition("budget must be at least 1".into()));
    }
    let search = Search { space, eps };
    let d = space.dim();

    let e0 = Vector::basis(d, 0).into_inner();
    let anti: Vec<f64> = e0.iter().map(|c| -c).collect();
    let mut best = search.pair(e0, anti);
    if eps == 2.0 {
        // Strict convexity leaves only antipodal pairs. A search would accept
        // near-antipodal pairs whose distance rounds to 2 while their value
        // is off by the square root of the rounding error.
        return Ok(ModulusPoint {
            eps,
            delta: best.value,
            method: Method::Empirical,
            witness: Some((Vector::new(best.x), Vector::new(best.y))),
        });
    }

    if space.p() >= 2.0 && d >= 2 {
        let half = 0.5 * eps;
        let a = (1.0 - half.powf(space.p())).powf(1.0 / space.p());
        let mut x = vec![0.0; d];
        let mut y = vec![0.0; d];
        x[0] = a;
        y[0] = a;
        x[1] = half;
        y[1] = -half;
        if let (Some(x), Some(y)) = (search.unit(x), search.unit(y)) {
            if search.feasible(&x, &y) {
                let cand = search.pair(x, y);
                if cand.value < best.value {
                    best = cand;
                }
            }
        }
    }

    let chunks = budget.min(MAX_CHUNKS);
    let per_chunk = budget / chunks;
    let extra = budget % chunks;
    let results: Vec<Pair> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let n = per_chunk + usize::from(c < extra);
            let mut local: Option<Pair> = None;
            for _ in 0..n {
                let cand = search.sample_pair(&mut rng);
                if local.as_ref().is_none_or(|b| cand.value < b.value) {
                    local = Some(cand);
                }
            }
            search.refine(local.expect("every chunk draws at least one pair"))
        })
        .collect();
    for cand in results {
        if cand.value < best.value {
            best = cand;
        }
    }

    Ok(ModulusPoint {
        eps,
        delta: best.value,
        method: Method::Empirical,
        witness: Some((Vector::new(best.x), Vector::new(best.y))),
    })
}

/// Largest `δ ∈ (0, eps)` with `δ ≤ factor · modulus(eps - δ)`.
///
/// `g(δ) = factor · modulus(eps - δ) - δ` is strictly decreasing when the
/// modulus is nondecreasing, so the crossing is unique; bisection returns the
/// feasible end of the final bracket. `modulus(0)` is taken as 0.
pub fn delta_from_constraint<F>(modulus: F, eps: f64, factor: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    check_eps(eps)?;
    if !(factor > 0.0 && factor <= 1.0) {
        return Err(Error::Domain(format!("factor {factor} is outside (0, 1]")));
    }
    const PROBES: usize = 256;
    let mut prev = 0.0_f64;
    for k in 1..=PROBES {
        let t = eps * k as f64 / PROBES as f64;
        let v = modulus(t);
        if !v.is_finite() || v < prev - 1e-12 {
            return Err(Error::Precondition(format!(
                "modulus is not nondecreasing near eps = {t} ({v} after {prev})"
            )));
        }
        prev = v;
    }
    let g = |delta: f64| {
        let arg = eps - delta;
        let m = if arg > 0.0 { modulus(arg) } else { 0.0 };
        factor * m - delta
    };
    // relative below 1 so that tiny roots (large p, small eps) stay positive
    let (mut lo, mut hi) = (0.0_f64, eps);
    let mut iters = 0;
    while hi - lo > CONSTRAINT_TOL * hi.min(1.0) && iters < 4096 {
        let mid = 0.5 * (lo + hi);
        if g(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iters += 1;
    }
    if lo <= 0.0 {
        return Err(Error::Numerical(format!(
            "constraint has no positive solution in floating point at eps = {eps}"
        )));
    }
    Ok(lo)
}

/// The three quantitative constants attached to a given `(p, ε)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoremBounds {
    /// `1 + δ(2ε/3)`: lower bound on `‖x - (x_i - x_j)‖` over an extracted cluster.
    pub pair_bound: f64,
    /// `1 + δ(2/3)/2`: separation reachable on the unit sphere.
    pub sphere_separation: f64,
    /// `δ(4ε/5)/2`: admissible δ for contractions into arbitrary codomains.
    pub contraction_delta: f64,
}

pub fn theorem_bounds(p: f64, eps: f64) -> Result<TheoremBounds> {
    check_eps(eps)?;
    Ok(TheoremBounds {
        pair_bound: 1.0 + lp_delta(p, 2.0 * eps / 3.0)?,
        sphere_separation: 1.0 + 0.5 * lp_delta(p, 2.0 / 3.0)?,
        contraction_delta: 0.5 * lp_delta(p, 0.8 * eps)?,
    })
}
