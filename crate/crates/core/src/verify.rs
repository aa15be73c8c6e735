//! Randomized adversarial checks of the ε-δ statements.
//!
//! Each check fixes a cell `(space, ε)`, takes δ from the modulus module, and
//! draws trials `(x, x', T)` aimed at the boundary of the hypotheses. Trials
//! whose hypotheses hold are "kept"; a kept trial whose conclusion
//! `‖x - x'‖ < ε` fails is a violation and is stored with every input needed
//! to re-evaluate it.
//!
//! Trial `i` draws from its own ChaCha stream, and kept trials are counted in
//! index order, so a report depends only on its inputs and seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modulus::{
    delta_from_constraint, lp_delta, Method, ModulusCurve, EMPIRICAL_MONOTONE_SLACK, WITNESS_TOL,
};
use crate::spaces::{sup_norm, Functional, LpSpace, Vector};

/// Attempts allowed per requested kept trial before a cell gives up.
pub const MAX_ATTEMPTS_PER_TRIAL: usize = 64;

const CHUNK: usize = 8192;
const PILOT_TRIALS: u64 = 256;
const PILOT_STREAM_BASE: u64 = 1 << 48;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statement {
    /// Near-unit `x'`, `T = x*` with `‖Tx‖ = 1`, `δ = δ(2ε/3)`.
    UnitFunctional,
    /// Uniform Kadec-Klee: unit `x, x'`, unit functional, δ from `δ ≤ ½δ(ε-δ)`.
    KadecKlee,
    /// Contractions into `l^∞_k`, `δ = ½δ(4ε/5)`.
    Contraction,
    /// `δ(ε) ≤ ε/2` and monotonicity of a computed curve.
    ModulusProperties,
}

impl Statement {
    pub fn id(&self) -> &'static str {
        match self {
            Statement::UnitFunctional => "unit_functional",
            Statement::KadecKlee => "kadec_klee",
            Statement::Contraction => "contraction",
            Statement::ModulusProperties => "modulus_properties",
        }
    }
}

/// Everything needed to re-evaluate one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub statement: Statement,
    pub p: f64,
    pub eps: f64,
    pub delta: f64,
    pub x: Vector,
    pub x_prime: Vector,
    /// The functional `x*` (one row) or the rows of `T`.
    pub rows: Vec<Functional>,
    pub norm_x_prime: f64,
    /// `‖Tx‖`, i.e. `|<x, x*>|` for a single row.
    pub tx: f64,
    /// `‖Tx - Tx'‖`.
    pub t_diff: f64,
    pub dist: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub hypotheses: bool,
    pub conclusion: bool,
}

impl Evaluation {
    pub fn is_violation(&self) -> bool {
        self.hypotheses && !self.conclusion
    }
}

impl TrialRecord {
    pub fn new(
        statement: Statement,
        space: &LpSpace,
        eps: f64,
        delta: f64,
        x: Vector,
        x_prime: Vector,
        rows: Vec<Functional>,
    ) -> Self {
        let diff = x.sub(&x_prime);
        let tx = sup_norm(&rows.iter().map(|f| f.pair(&x)).collect::<Vec<_>>());
        let t_diff = sup_norm(&rows.iter().map(|f| f.pair(&diff)).collect::<Vec<_>>());
        TrialRecord {
            statement,
            p: space.p(),
            eps,
            delta,
            norm_x_prime: space.norm_unchecked(&x_prime),
            dist: space.norm_unchecked(&diff),
            x,
            x_prime,
            rows,
            tx,
            t_diff,
        }
    }

    /// Hypotheses and conclusion from the stored quantities.
    pub fn evaluate(&self) -> Evaluation {
        let d = self.delta;
        let hypotheses = match self.statement {
            Statement::UnitFunctional => {
                (1.0 - self.norm_x_prime).abs() < d && self.t_diff < d
            }
            Statement::KadecKlee => self.tx > 1.0 - d && self.t_diff < d,
            Statement::Contraction => {
                (1.0 - self.norm_x_prime).abs() < d && self.tx > 1.0 - d && self.t_diff < d
            }
            Statement::ModulusProperties => false,
        };
        Evaluation { hypotheses, conclusion: self.dist < self.eps }
    }

    /// Rebuilds the record from its vectors alone and re-evaluates it.
    pub fn recheck(&self) -> Result<Evaluation> {
        let space = LpSpace::new(self.p, self.x.len())?;
        let fresh = TrialRecord::new(
            self.statement,
            &space,
            self.eps,
            self.delta,
            self.x.clone(),
            self.x_prime.clone(),
            self.rows.clone(),
        );
        Ok(fresh.evaluate())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub rule: String,
    pub eps: f64,
    pub delta: f64,
    pub method: Method,
    pub previous: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Trial(TrialRecord),
    Point(PointRecord),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub statement: Statement,
    pub p: f64,
    pub dim: Option<usize>,
    pub eps: Option<f64>,
    pub delta_used: Option<f64>,
    pub rank: Option<usize>,
    pub attempted: usize,
    pub kept: usize,
    /// Largest `‖x - x'‖` among kept trials; how close the sampler came to ε.
    pub max_kept_dist: Option<f64>,
    pub violations: Vec<Violation>,
    pub rng_seed: Option<u64>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    /// `statement,p,d,eps,delta,trials,kept,violations`; contraction ids
    /// carry the rank as `contraction_k4`.
    pub fn summary_line(&self) -> String {
        let opt = |v: Option<f64>| v.map(crate::io::fmt_f64).unwrap_or_default();
        let id = match self.rank {
            Some(k) => format!("{}_k{k}", self.statement.id()),
            None => self.statement.id().to_string(),
        };
        format!(
            "{},{},{},{},{},{},{},{}",
            id,
            crate::io::fmt_f64(self.p),
            self.dim.map(|d| d.to_string()).unwrap_or_default(),
            opt(self.eps),
            opt(self.delta_used),
            self.attempted,
            self.kept,
            self.violations.len()
        )
    }
}

pub const SUMMARY_HEADER: &str = "statement,p,d,eps,delta,trials,kept,violations";

/// Per-cell sampler settings.
#[derive(Debug, Clone, Copy)]
struct Sampler {
    statement: Statement,
    eps: f64,
    delta: f64,
    rank: usize,
    /// Typical size of the perturbation `t` in `x' ∝ x + t u`.
    scale: f64,
}

fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

impl Sampler {
    /// Size multiplier `1 + s` with `|s| < δ`, Beta(3,1)-weighted towards `|s| = δ`.
    fn radial(&self, rng: &mut ChaCha8Rng) -> f64 {
        let b: f64 = rng.gen::<f64>().cbrt();
        let s = self.delta * b * (1.0 - f64::EPSILON);
        if rng.gen::<bool>() {
            1.0 + s
        } else {
            1.0 - s
        }
    }

    /// A direction, half the time with its `x*` component removed so that
    /// `x'` moves along the kernel of the functional.
    fn direction(&self, space: &LpSpace, x: &Vector, xstar: &Functional, rng: &mut ChaCha8Rng) -> Vector {
        let u = space.random_unit_with(rng);
        if rng.gen::<bool>() {
            u.axpy(-xstar.pair(&u), x)
        } else {
            u
        }
    }

    fn step(&self, rng: &mut ChaCha8Rng) -> f64 {
        // log-uniform in [scale/4, 4 scale]
        self.scale * 4f64.powf(rng.gen_range(-1.0..1.0))
    }

    fn draw(&self, space: &LpSpace, rng: &mut ChaCha8Rng) -> TrialRecord {
        let x = space.random_unit_with(rng);
        let xstar = space.norming_functional(&x).expect("unit vectors are nonzero");
        let u = self.direction(space, &x, &xstar, rng);
        let t = self.step(rng);
        let moved = space.normalize(&x.axpy(t, &u)).unwrap_or_else(|_| x.clone());
        match self.statement {
            Statement::UnitFunctional => {
                let xp = moved.scale(self.radial(rng));
                TrialRecord::new(self.statement, space, self.eps, self.delta, x, xp, vec![xstar])
            }
            Statement::KadecKlee => {
                let f = match rng.gen_range(0..3) {
                    0 => xstar,
                    1 => {
                        let w = space.random_unit_with(rng);
                        let r = self.step(rng);
                        space.norming_functional(&x.axpy(r, &w)).unwrap_or(xstar)
                    }
                    _ => space.random_unit_functional(rng),
                };
                TrialRecord::new(self.statement, space, self.eps, self.delta, x, moved, vec![f])
            }
            Statement::Contraction => {
                let xp = moved.scale(self.radial(rng));
                let mut rows = vec![xstar];
                rows.extend((1..self.rank).map(|_| space.random_unit_functional(rng)));
                TrialRecord::new(self.statement, space, self.eps, self.delta, x, xp, rows)
            }
            Statement::ModulusProperties => unreachable!("curve checks do not sample"),
        }
    }

    /// Fraction of pilot draws passing the functional-difference hypothesis.
    fn pilot_rate(&self, space: &LpSpace, seed: u64) -> f64 {
        let hits = (0..PILOT_TRIALS)
            .filter(|&i| {
                let mut rng = trial_rng(seed, PILOT_STREAM_BASE + i);
                self.draw(space, &mut rng).t_diff < self.delta
            })
            .count();
        hits as f64 / PILOT_TRIALS as f64
    }

    /// Picks the perturbation scale whose pilot pass rate is closest to ½.
    fn calibrate(mut self, space: &LpSpace, seed: u64) -> Self {
        let mut best = (f64::INFINITY, self.eps);
        for k in -1..=16 {
            let scale = self.eps * 2f64.powi(-k);
            let trial = Sampler { scale, ..self };
            let gap = (trial.pilot_rate(space, seed) - 0.5).abs();
            if gap < best.0 {
                best = (gap, scale);
            }
        }
        self.scale = best.1;
        self
    }
}

fn run_cell(
    statement: Statement,
    space: &LpSpace,
    eps: f64,
    delta: f64,
    rank: usize,
    trials: usize,
    seed: u64,
) -> Result<VerificationReport> {
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    if !(eps > 0.0 && eps <= 2.0) {
        return Err(Error::Domain(format!("eps = {eps} is outside (0, 2]")));
    }
    let sampler = Sampler { statement, eps, delta, rank, scale: eps }.calibrate(space, seed);
    let max_attempts = trials.saturating_mul(MAX_ATTEMPTS_PER_TRIAL);
    let mut attempted = 0usize;
    let mut kept = 0usize;
    let mut max_kept_dist: Option<f64> = None;
    let mut violations = Vec::new();
    while kept < trials && attempted < max_attempts {
        let start = attempted;
        let end = (start + CHUNK).min(max_attempts);
        let outcomes: Vec<(Option<f64>, Option<TrialRecord>)> = (start..end)
            .into_par_iter()
            .map(|i| {
                let mut rng = trial_rng(seed, i as u64);
                let rec = sampler.draw(space, &mut rng);
                let ev = rec.evaluate();
                (ev.hypotheses.then_some(rec.dist), ev.is_violation().then_some(rec))
            })
            .collect();
        for (hyp, bad) in outcomes {
            attempted += 1;
            if let Some(d) = hyp {
                kept += 1;
                max_kept_dist = Some(max_kept_dist.map_or(d, |m| m.max(d)));
            }
            if let Some(rec) = bad {
                violations.push(Violation::Trial(rec));
            }
            if kept == trials {
                break;
            }
        }
    }
    Ok(VerificationReport {
        statement,
        p: space.p(),
        dim: Some(space.dim()),
        eps: Some(eps),
        delta_used: Some(delta),
        rank: (statement == Statement::Contraction).then_some(rank),
        attempted,
        kept,
        max_kept_dist,
        violations,
        rng_seed: Some(seed),
    })
}

/// `(i)`, `‖Tx‖ = 1` with `T = x*`, `(iii)` ⇒ `‖x - x'‖ < ε` for
/// `δ = δ(2ε/3)`. `trials` counts kept trials.
pub fn check_lemma23(space: &LpSpace, eps: f64, trials: usize, seed: u64) -> Result<VerificationReport> {
    let delta = lp_delta(space.p(), 2.0 * eps / 3.0)?;
    run_cell(Statement::UnitFunctional, space, eps, delta, 1, trials, seed)
}

/// Unit `x, x'`, unit `x*` with `|<x, x*>| > 1 - δ` and `|<x - x', x*>| < δ`
/// ⇒ `‖x - x'‖ < ε`, for the largest δ with `δ ≤ ½δ(ε - δ)`.
pub fn check_thm2_condition3(space: &LpSpace, eps: f64, trials: usize, seed: u64) -> Result<VerificationReport> {
    let p = space.p();
    let delta = delta_from_constraint(|t| lp_delta(p, t).unwrap_or(f64::NAN), eps, 0.5)?;
    run_cell(Statement::KadecKlee, space, eps, delta, 1, trials, seed)
}

/// Rank-`k` contractions into `l^∞_k` with `δ = ½δ(4ε/5)`.
pub fn check_remark45(
    space: &LpSpace,
    eps: f64,
    trials: usize,
    rank: usize,
    seed: u64,
) -> Result<VerificationReport> {
    if rank == 0 {
        return Err(Error::Config("contraction rank must be at least 1".into()));
    }
    let delta = 0.5 * lp_delta(space.p(), 0.8 * eps)?;
    run_cell(Statement::Contraction, space, eps, delta, rank, trials, seed)
}

/// Runs a check with an explicit δ instead of the one the modulus module
/// supplies. Used to confirm that the sampler reaches the failure region when
/// δ is too generous.
pub fn check_with_delta(
    statement: Statement,
    space: &LpSpace,
    eps: f64,
    delta: f64,
    rank: usize,
    trials: usize,
    seed: u64,
) -> Result<VerificationReport> {
    if statement == Statement::ModulusProperties {
        return Err(Error::Config("curve checks take a curve, not a delta".into()));
    }
    run_cell(statement, space, eps, delta, rank.max(1), trials, seed)
}

/// `δ(ε) ≤ ε/2` at every point and `δ` nondecreasing along the curve.
/// Closed-form points are held to exact inequalities; empirical points get
/// `1e-9` on the bound and `2e-3` on monotonicity.
pub fn check_modulus_properties(curve: &ModulusCurve) -> Result<VerificationReport> {
    if curve.is_empty() {
        return Err(Error::Precondition("curve has no points".into()));
    }
    let mut violations = Vec::new();
    let pts = curve.points();
    for (i, pt) in pts.iter().enumerate() {
        let bound_slack = if pt.method.is_closed_form() { 0.0 } else { WITNESS_TOL };
        if pt.delta > 0.5 * pt.eps + bound_slack || pt.delta < 0.0 {
            violations.push(Violation::Point(PointRecord {
                rule: "delta_at_most_half_eps".into(),
                eps: pt.eps,
                delta: pt.delta,
                method: pt.method,
                previous: None,
            }));
        }
        if i > 0 {
            let prev = &pts[i - 1];
            let slack = if pt.method.is_closed_form() && prev.method.is_closed_form() {
                0.0
            } else {
                EMPIRICAL_MONOTONE_SLACK
            };
            if pt.delta < prev.delta - slack {
                violations.push(Violation::Point(PointRecord {
                    rule: "nondecreasing".into(),
                    eps: pt.eps,
                    delta: pt.delta,
                    method: pt.method,
                    previous: Some((prev.eps, prev.delta)),
                }));
            }
        }
    }
    Ok(VerificationReport {
        statement: Statement::ModulusProperties,
        p: curve.space.p,
        dim: curve.space.dim,
        eps: None,
        delta_used: None,
        rank: None,
        attempted: pts.len(),
        kept: pts.len(),
        max_kept_dist: None,
        violations,
        rng_seed: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modulus::{closed_form_curve, CurveSpace, ModulusPoint};

    fn space(p: f64, d: usize) -> LpSpace {
        LpSpace::new(p, d).unwrap()
    }

    #[test]
    fn identical_points_satisfy_everything() {
        let s = space(3.0, 4);
        let x = s.random_unit(1);
        let f = s.norming_functional(&x).unwrap();
        for st in [Statement::UnitFunctional, Statement::KadecKlee, Statement::Contraction] {
            let r = TrialRecord::new(st, &s, 1.0, 0.05, x.clone(), x.clone(), vec![f.clone()]);
            let ev = r.evaluate();
            assert!(ev.hypotheses && ev.conclusion, "{st:?}");
        }
    }

    #[test]
    fn radial_scaling_inside_delta() {
        for p in [1.5, 2.0, 3.0] {
            let s = space(p, 5);
            let eps = 1.0;
            let delta = lp_delta(p, 2.0 / 3.0).unwrap();
            assert!(delta <= eps / 3.0);
            let x = s.random_unit(4);
            let f = s.norming_functional(&x).unwrap();
            let xp = x.scale(1.0 + 0.99 * delta);
            let r = TrialRecord::new(Statement::UnitFunctional, &s, eps, delta, x, xp, vec![f]);
            let ev = r.evaluate();
            assert!(ev.hypotheses && ev.conclusion);
            assert!((r.dist - 0.99 * delta).abs() < 1e-12);
        }
    }

    #[test]
    fn antipode_is_filtered_out() {
        let s = space(2.0, 3);
        let eps = 1.0;
        let delta = delta_from_constraint(|t| lp_delta(2.0, t).unwrap(), eps, 0.5).unwrap();
        let x = s.random_unit(8);
        let f = s.norming_functional(&x).unwrap();
        let r = TrialRecord::new(Statement::KadecKlee, &s, eps, delta, x.clone(), x.scale(-1.0), vec![f]);
        assert!(r.tx > 1.0 - delta);
        assert!(!r.evaluate().hypotheses);
    }

    #[test]
    fn small_cells_have_no_violations() {
        for p in [1.5, 2.0, 3.0] {
            let s = space(p, 3);
            for eps in [0.5, 1.9] {
                for rep in [
                    check_lemma23(&s, eps, 2_000, 1).unwrap(),
                    check_thm2_condition3(&s, eps, 2_000, 2).unwrap(),
                    check_remark45(&s, eps, 2_000, 3, 3).unwrap(),
                ] {
                    assert!(rep.passed(), "{}", rep.summary_line());
                    assert_eq!(rep.kept, 2_000, "{}", rep.summary_line());
                }
            }
        }
    }

    #[test]
    fn generous_delta_finds_counterexamples() {
        // δ = 0.5 is far above anything the statements allow at ε = 0.5
        let s = space(2.0, 3);
        let rep = check_with_delta(Statement::UnitFunctional, &s, 0.5, 0.5, 1, 5_000, 7).unwrap();
        assert!(!rep.violations.is_empty());
        for v in &rep.violations {
            let Violation::Trial(t) = v else { panic!() };
            assert!(t.recheck().unwrap().is_violation());
            let json = serde_json::to_string(t).unwrap();
            let back: TrialRecord = serde_json::from_str(&json).unwrap();
            assert!(back.recheck().unwrap().is_violation());
        }
    }

    #[test]
    fn reports_are_reproducible() {
        let s = space(1.5, 8);
        let a = check_remark45(&s, 1.0, 3_000, 4, 11).unwrap();
        let b = check_remark45(&s, 1.0, 3_000, 4, 11).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let c = pool.install(|| check_remark45(&s, 1.0, 3_000, 4, 11).unwrap());
        assert_eq!(a, c);
    }

    #[test]
    fn zero_trials_rejected() {
        let s = space(2.0, 2);
        assert!(matches!(check_lemma23(&s, 1.0, 0, 0), Err(Error::Config(_))));
        assert!(check_remark45(&s, 1.0, 10, 0, 0).is_err());
    }

    #[test]
    fn modulus_properties_closed_form() {
        let grid: Vec<f64> = (1..=100).map(|k| 2.0 * k as f64 / 100.0).collect();
        let c = closed_form_curve(2.0, Method::Clarkson, &grid).unwrap();
        assert!(check_modulus_properties(&c).unwrap().passed());
        let c = closed_form_curve(1.5, Method::Hanner, &grid).unwrap();
        assert!(check_modulus_properties(&c).unwrap().passed());
        let c = closed_form_curve(2.0, Method::Clarkson, &[2.0]).unwrap();
        assert!(check_modulus_properties(&c).unwrap().passed());
    }

    #[test]
    fn modulus_properties_flags_corruption() {
        let pt = |eps: f64, delta: f64| ModulusPoint { eps, delta, method: Method::Clarkson, witness: None };
        let c = ModulusCurve::new(
            CurveSpace { p: 2.0, dim: None },
            vec![pt(0.25, 0.01), pt(0.5, 0.4), pt(1.0, 0.13)],
        )
        .unwrap();
        let rep = check_modulus_properties(&c).unwrap();
        assert_eq!(rep.violations.len(), 2);
        let Violation::Point(first) = &rep.violations[0] else { panic!() };
        assert_eq!(first.rule, "delta_at_most_half_eps");
        assert_eq!(first.eps, 0.5);
    }
}
