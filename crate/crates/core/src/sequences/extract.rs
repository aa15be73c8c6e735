use serde::{Deserialize, Serialize};

use super::separation;
use crate::error::{ClusterDiagnostics, Error, Result};
use crate::modulus::lp_delta;
use crate::spaces::{Functional, LpSpace, Vector};

/// Window width as a fraction of `δ(2ε/3)`.
pub const DEFAULT_KAPPA: f64 = 0.5;

const ARITH_SLACK: f64 = 1e-9;
const UNIT_TOL: f64 = 1e-9;

/// Baseline extraction: a tight cluster of functional values forces every
/// pair value `‖x - (v_i - v_j)‖` to be at least `1 - tau`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineResult {
    pub functional: Functional,
    pub window: (f64, f64),
    pub selected: Vec<usize>,
    pub pair_min: f64,
    pub certified: f64,
}

/// A cluster on which every pair value meets `1 + δ(2ε/3)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionResult {
    pub functional: Functional,
    pub window: (f64, f64),
    pub selected: Vec<usize>,
    /// `min ‖x - (v_i - v_j)‖` over ordered pairs `i ≠ j` of `selected`.
    pub pair_min: f64,
    /// `1 + δ(2ε/3)`.
    pub guaranteed: f64,
    pub eps: f64,
    pub delta_eps: f64,
    pub width: f64,
    /// `min <x - (v_i - v_j), x*>`; at least `1 - width`.
    pub pairing_min: f64,
}

struct Window {
    lo: f64,
    hi: f64,
    members: Vec<usize>,
}

/// Largest set of values inside a closed window of the given width. Ties go
/// to the leftmost window; members are returned in index order.
fn best_window(values: &[f64], width: f64) -> Window {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut best = (0usize, 0usize);
    let mut j = 0;
    for i in 0..order.len() {
        if j < i {
            j = i;
        }
        while j + 1 < order.len() && values[order[j + 1]] - values[order[i]] <= width {
            j += 1;
        }
        if j + 1 - i > best.1 + 1 - best.0 {
            best = (i, j);
        }
    }
    let mut members: Vec<usize> = order[best.0..=best.1].to_vec();
    members.sort_unstable();
    Window { lo: values[order[best.0]], hi: values[order[best.1]], members }
}

fn check_inputs(space: &LpSpace, seq: &[Vector], x: &Vector) -> Result<()> {
    for v in seq.iter().chain(std::iter::once(x)) {
        if v.len() != space.dim() {
            return Err(Error::Dimension { expected: space.dim(), got: v.len() });
        }
    }
    let nx = space.norm(x)?;
    if (nx - 1.0).abs() > UNIT_TOL {
        return Err(Error::Precondition(format!("x must be a unit vector, has norm {nx}")));
    }
    Ok(())
}

fn cluster(
    space: &LpSpace,
    seq: &[Vector],
    x: &Vector,
    width: f64,
) -> Result<(Functional, Window)> {
    let xstar = space.norming_functional(x)?;
    let values: Vec<f64> = seq.iter().map(|v| xstar.pair(v)).collect();
    if values.is_empty() {
        return Err(Error::InsufficientCluster(Box::new(ClusterDiagnostics::new(
            width, 0.0, 0.0, 0, 0, 0.0,
        ))));
    }
    let w = best_window(&values, width);
    if w.members.len() < 2 {
        let range = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        return Err(Error::InsufficientCluster(Box::new(ClusterDiagnostics::new(
            width,
            w.lo,
            w.hi,
            w.members.len(),
            seq.len(),
            range,
        ))));
    }
    Ok((xstar, w))
}

/// `(min ‖ξ‖, min <ξ, x*>)` over `ξ = x - (v_i - v_j)`, ordered pairs `i ≠ j`.
fn pair_stats(space: &LpSpace, seq: &[Vector], x: &Vector, xstar: &Functional, sel: &[usize]) -> (f64, f64) {
    let mut norm_min = f64::INFINITY;
    let mut pair_min = f64::INFINITY;
    let mut xi = vec![0.0; space.dim()];
    for &i in sel {
        for &j in sel {
            if i == j {
                continue;
            }
            for (k, c) in xi.iter_mut().enumerate() {
                *c = x[k] - (seq[i][k] - seq[j][k]);
            }
            norm_min = norm_min.min(space.norm_unchecked(&xi));
            pair_min = pair_min.min(xstar.pair(&xi));
        }
    }
    (norm_min, pair_min)
}

pub fn baseline_extract(space: &LpSpace, seq: &[Vector], x: &Vector, tau: f64) -> Result<BaselineResult> {
    if tau.is_nan() || tau <= 0.0 {
        return Err(Error::Domain(format!("window width tau = {tau} must be positive")));
    }
    check_inputs(space, seq, x)?;
    let (xstar, w) = cluster(space, seq, x, tau)?;
    let (pair_min, _) = pair_stats(space, seq, x, &xstar, &w.members);
    let certified = 1.0 - tau;
    if pair_min < certified - ARITH_SLACK {
        return Err(Error::Certificate(format!(
            "baseline pair value {pair_min} fell below {certified}"
        )));
    }
    Ok(BaselineResult { functional: xstar, window: (w.lo, w.hi), selected: w.members, pair_min, certified })
}

/// Finite-sample form of the subsequence theorem.
///
/// With `x*` the norming functional of `x` and `δ = δ(2ε/3)`, any two
/// members of a window of width `κδ < δ` give `ξ = x - (v_i - v_j)` with
/// `<ξ, x*> ≥ 1 - κδ`. If also `‖ξ‖ < 1 + δ` then `|1 - ‖ξ‖| < δ` and the
/// two-thirds lemma with `T = x*` would force `‖v_i - v_j‖ < ε`, which the
/// separation rules out. So every pair value is at least `1 + δ`; the
/// function checks that and fails loudly if arithmetic ever disagrees.
pub fn theorem1_extract(
    space: &LpSpace,
    seq: &[Vector],
    x: &Vector,
    eps: f64,
    kappa: f64,
) -> Result<ExtractionResult> {
    if !(eps > 0.0 && eps <= 2.0) {
        return Err(Error::Domain(format!("eps = {eps} is outside (0, 2]")));
    }
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::Domain(format!("window fraction kappa = {kappa} is outside (0, 1)")));
    }
    check_inputs(space, seq, x)?;
    let sep = separation(space, seq)?;
    if sep < eps - 1e-12 {
        return Err(Error::Precondition(format!(
            "sequence is only {sep}-separated, below eps = {eps}"
        )));
    }
    let delta_eps = lp_delta(space.p(), 2.0 * eps / 3.0)?;
    let width = kappa * delta_eps;
    let (xstar, w) = cluster(space, seq, x, width)?;
    let (pair_min, pairing_min) = pair_stats(space, seq, x, &xstar, &w.members);
    if pairing_min < 1.0 - width - ARITH_SLACK {
        return Err(Error::Certificate(format!(
            "pairing {pairing_min} below 1 - w = {}",
            1.0 - width
        )));
    }
    let guaranteed = 1.0 + delta_eps;
    if pair_min < guaranteed - ARITH_SLACK {
        return Err(Error::Certificate(format!(
            "pair value {pair_min} below guaranteed {guaranteed}"
        )));
    }
    Ok(ExtractionResult {
        functional: xstar,
        window: (w.lo, w.hi),
        selected: w.members,
        pair_min,
        guaranteed,
        eps,
        delta_eps,
        width,
        pairing_min,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequences::unit_basis_seed;

    #[test]
    fn window_tie_goes_left() {
        let w = best_window(&[0.0, 0.1, 1.0, 1.1, 5.0], 0.2);
        assert_eq!(w.members, vec![0, 1]);
        let w = best_window(&[3.0, 0.0, 3.05, 3.1, 0.01], 0.11);
        assert_eq!(w.members, vec![0, 2, 3]);
        assert_eq!((w.lo, w.hi), (3.0, 3.1));
    }

    #[test]
    fn baseline_on_basis() {
        let s = LpSpace::new(2.0, 50).unwrap();
        let seq = unit_basis_seed(&s, 50).unwrap();
        let r = baseline_extract(&s, &seq, &Vector::basis(50, 0), 0.01).unwrap();
        assert_eq!(r.selected, (1..50).collect::<Vec<_>>());
        assert!((r.pair_min - 3f64.sqrt()).abs() < 1e-12);
        assert!(r.pair_min >= r.certified);
    }

    #[test]
    fn baseline_constant_sequence() {
        let s = LpSpace::new(3.0, 3).unwrap();
        let v = Vector::new(vec![0.3, -0.2, 0.9]);
        let seq = vec![v.clone(); 5];
        let x = s.random_unit(2);
        let r = baseline_extract(&s, &seq, &x, 0.1).unwrap();
        assert_eq!(r.selected.len(), 5);
        assert!((r.pair_min - 1.0).abs() < 1e-12);
    }

    #[test]
    fn baseline_spread_values_fail() {
        let s = LpSpace::new(2.0, 2).unwrap();
        let seq: Vec<Vector> = (0..6).map(|n| Vector::new(vec![n as f64, 0.0])).collect();
        let err = baseline_extract(&s, &seq, &Vector::basis(2, 0), 0.5).unwrap_err();
        let Error::InsufficientCluster(diag) = err else { panic!("wrong error") };
        assert_eq!(diag.best_count, 1);
        assert_eq!(diag.value_range, 5.0);
        assert_eq!(diag.window_count, 20);
        assert_eq!(diag.points_for_guarantee, 21);
    }

    #[test]
    fn theorem1_on_hilbert_basis() {
        let s = LpSpace::new(2.0, 200).unwrap();
        let seq = unit_basis_seed(&s, 200).unwrap();
        let r = theorem1_extract(&s, &seq, &Vector::basis(200, 0), 2f64.sqrt(), DEFAULT_KAPPA).unwrap();
        assert_eq!(r.selected, (1..200).collect::<Vec<_>>());
        assert!((r.pair_min - 3f64.sqrt()).abs() < 1e-9);
        assert!((r.guaranteed - 1.118_082_896_311_803).abs() < 1e-12);
    }

    #[test]
    fn theorem1_two_antipodal_vectors() {
        // u = e_0, seq = {u, -u}, x = e_1 orthogonal: both values 0, the only
        // pair values are ‖x ∓ 2u‖ = √5, against 1 + δ(4/3) = 2 - √5/3.
        let s = LpSpace::new(2.0, 2).unwrap();
        let u = Vector::basis(2, 0);
        let seq = vec![u.clone(), u.scale(-1.0)];
        let r = theorem1_extract(&s, &seq, &Vector::basis(2, 1), 2.0, 0.5).unwrap();
        assert_eq!(r.selected, vec![0, 1]);
        assert!((r.pair_min - 5f64.sqrt()).abs() < 1e-12);
        assert!((r.guaranteed - (2.0 - 5f64.sqrt() / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn theorem1_rejects_bad_separation() {
        let s = LpSpace::new(2.0, 3).unwrap();
        let seq = unit_basis_seed(&s, 3).unwrap();
        let x = Vector::basis(3, 0);
        assert!(matches!(
            theorem1_extract(&s, &seq, &x, 1.5, 0.5),
            Err(Error::Precondition(_))
        ));
        assert!(theorem1_extract(&s, &seq, &x.scale(2.0), 1.0, 0.5).is_err());
        assert!(theorem1_extract(&s, &seq, &x, 1.0, 1.0).is_err());
    }

    #[test]
    fn theorem1_insufficient_cluster() {
        let s = LpSpace::new(2.0, 3).unwrap();
        let seq = unit_basis_seed(&s, 3).unwrap();
        // values (1, 0.5, 0) after a tilt: no window of width κδ holds two
        let x = s.normalize(&Vector::new(vec![1.0, 0.5, 0.0])).unwrap();
        let err = theorem1_extract(&s, &seq, &x, 1.0, 0.5).unwrap_err();
        assert!(matches!(err, Error::InsufficientCluster(_)));
        assert_eq!(err.exit_code(), 3);
    }
}
