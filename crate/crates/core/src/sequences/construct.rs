use serde::{Deserialize, Serialize};

use super::{ramsey_extract, separation, SeparationCertificate};
use crate::error::{Error, Result};
use crate::modulus::lp_delta;
use crate::spaces::{LpSpace, Vector};

const ARITH_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Low,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstructionStatus {
    Completed,
    Exhausted,
}

/// Off-diagonal pairs of ℕ×ℕ in diagonal-sweep order:
/// `(0,1), (1,0), (0,2), (2,0), (1,2), (2,1), (0,3), ...`
///
/// The first `n(n-1)` items are exactly the off-diagonal pairs below `n`.
#[derive(Debug, Clone)]
pub struct PairEnumeration {
    hi: usize,
    lo: usize,
    flipped: bool,
}

impl PairEnumeration {
    pub fn new() -> Self {
        PairEnumeration { hi: 1, lo: 0, flipped: false }
    }
}

impl Default for PairEnumeration {
    fn default() -> Self {
        Self::new()
    }
}

impl Iterator for PairEnumeration {
    type Item = (usize, usize);

    fn next(&mut self) -> Option<(usize, usize)> {
        let out = if self.flipped { (self.hi, self.lo) } else { (self.lo, self.hi) };
        if self.flipped {
            self.flipped = false;
            self.lo += 1;
            if self.lo == self.hi {
                self.hi += 1;
                self.lo = 0;
            }
        } else {
            self.flipped = true;
        }
        Some(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructionStep {
    /// Position of the pair in the enumeration.
    pub candidate_index: usize,
    /// Seed indices `(a, b)` with `y = ξ_a - ξ_b`.
    pub pair: (usize, usize),
    pub y_norm: f64,
    /// `min_j ‖x_j - y‖` over accepted vectors; absent for the first step.
    pub min_dist_to_prior: Option<f64>,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructionTrace {
    pub seed: String,
    pub seed_len: usize,
    pub p: f64,
    pub dim: usize,
    /// `δ(2/3)`.
    pub delta1: f64,
    /// `1 + δ(2/3)/2`, the Ramsey split and the target separation.
    pub target: f64,
    pub branch: Branch,
    /// Seed indices kept by the Ramsey step.
    pub ramsey_indices: Vec<usize>,
    pub steps: Vec<ConstructionStep>,
    pub output: Vec<Vector>,
    pub final_certificate: SeparationCertificate,
    pub status: ConstructionStatus,
}

/// Unit vectors that are `(1 + δ(2/3)/2)`-separated, built from a
/// 1-separated seed.
///
/// The seed is first split by the Ramsey step at `1 + δ₁/2`. A high
/// subsequence is already separated enough and is returned as is. Otherwise
/// the low subsequence has all distances in `[1, 1 + δ₁/2]` and the greedy
/// loop walks the pair enumeration: `y = ξ_a - ξ_b` is accepted when it lies
/// at distance `≥ 1 + δ₁` from every accepted vector, and `y/‖y‖` is kept.
/// Since `|‖y‖ - 1| ≤ δ₁/2`, normalizing costs at most `δ₁/2` of separation.
/// Each seed index is used by at most one accepted pair.
pub fn theorem3_construct(
    space: &LpSpace,
    seed: &[Vector],
    seed_label: &str,
    max_len: usize,
) -> Result<ConstructionTrace> {
    if max_len == 0 {
        return Err(Error::Precondition("max_len must be at least 1".into()));
    }
    let sep = separation(space, seed)?;
    if sep < 1.0 - ARITH_SLACK {
        return Err(Error::Precondition(format!("seed is only {sep}-separated, need 1")));
    }
    for (i, v) in seed.iter().enumerate() {
        let n = space.norm(v)?;
        if (n - 1.0).abs() > ARITH_SLACK {
            return Err(Error::Precondition(format!("seed vector {i} has norm {n}")));
        }
    }

    let delta1 = lp_delta(space.p(), 2.0 / 3.0)?;
    let target = 1.0 + 0.5 * delta1;
    let accept_at = 1.0 + delta1;

    let n = seed.len();
    let dist: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 0.0 } else { space.dist_unchecked(&seed[i], &seed[j]) }).collect())
        .collect();
    let ramsey = ramsey_extract(&dist, target)?;

    let mut steps = Vec::new();
    let (output, status) = match ramsey.branch {
        Branch::High => {
            let out: Vec<Vector> = ramsey.indices.iter().take(max_len).map(|&i| seed[i].clone()).collect();
            (out, ConstructionStatus::Completed)
        }
        Branch::Low => {
            let xi: Vec<&Vector> = ramsey.indices.iter().map(|&i| &seed[i]).collect();
            let m = xi.len();
            let mut consumed = vec![false; m];
            let mut out: Vec<Vector> = Vec::new();
            let mut status = ConstructionStatus::Exhausted;
            for (pos, (a, b)) in PairEnumeration::new().take(m * (m - 1)).enumerate() {
                if consumed[a] || consumed[b] {
                    continue;
                }
                let y = xi[a].sub(xi[b]);
                let y_norm = space.norm_unchecked(&y);
                let min_dist = out
                    .iter()
                    .map(|x| space.dist_unchecked(x, &y))
                    .reduce(f64::min);
                let accepted = min_dist.is_none_or(|d| d >= accept_at);
                steps.push(ConstructionStep {
                    candidate_index: pos,
                    pair: (ramsey.indices[a], ramsey.indices[b]),
                    y_norm,
                    min_dist_to_prior: min_dist,
                    accepted,
                });
                if !accepted {
                    continue;
                }
                if y_norm < 1.0 - ARITH_SLACK || y_norm > target + ARITH_SLACK {
                    return Err(Error::Certificate(format!(
                        "accepted difference has norm {y_norm} outside [1, {target}]"
                    )));
                }
                let x_new = y.scale(1.0 / y_norm);
                if let Some(d) = out.iter().map(|x| space.dist_unchecked(x, &x_new)).reduce(f64::min) {
                    if d < target - ARITH_SLACK {
                        return Err(Error::Certificate(format!(
                            "normalized vector at distance {d} < {target}"
                        )));
                    }
                }
                out.push(x_new);
                consumed[a] = true;
                consumed[b] = true;
                if out.len() == max_len {
                    status = ConstructionStatus::Completed;
                    break;
                }
            }
            (out, status)
        }
    };

    let final_certificate = SeparationCertificate::certify_all(space, &output, target, ARITH_SLACK)?;
    if !final_certificate.pass {
        return Err(Error::Certificate(format!(
            "output separation {:?} below {target}",
            final_certificate.min_pairwise
        )));
    }
    Ok(ConstructionTrace {
        seed: seed_label.to_string(),
        seed_len: n,
        p: space.p(),
        dim: space.dim(),
        delta1,
        target,
        branch: ramsey.branch,
        ramsey_indices: ramsey.indices,
        steps,
        output,
        final_certificate,
        status,
    })
}
