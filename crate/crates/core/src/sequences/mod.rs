//! Separated sequences: seeds, certification, and the extraction and
//! construction procedures built on the modulus of convexity.

mod construct;
mod extract;
mod ramsey;
mod seeds;

pub use construct::{
    theorem3_construct, Branch, ConstructionStatus, ConstructionStep, ConstructionTrace,
    PairEnumeration,
};
pub use extract::{baseline_extract, theorem1_extract, BaselineResult, ExtractionResult, DEFAULT_KAPPA};
pub use ramsey::{ramsey_extract, size_floor, RamseyResult};
pub use seeds::{riesz_seed, shifted_basis_seed, unit_basis_seed};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaces::{LpSpace, Vector};

/// Minimum pairwise distance of `seq` by full scan.
pub fn separation(space: &LpSpace, seq: &[Vector]) -> Result<f64> {
    if seq.len() < 2 {
        return Err(Error::Precondition("separation needs at least two vectors".into()));
    }
    for v in seq {
        if v.len() != space.dim() {
            return Err(Error::Dimension { expected: space.dim(), got: v.len() });
        }
    }
    Ok(min_pairwise(space, seq.iter().map(|v| v.coords()).collect::<Vec<_>>().as_slice())
        .expect("two or more vectors"))
}

fn min_pairwise(space: &LpSpace, seq: &[&[f64]]) -> Option<f64> {
    let mut best: Option<f64> = None;
    for i in 0..seq.len() {
        for j in (i + 1)..seq.len() {
            let d = space.dist_unchecked(seq[i], seq[j]);
            best = Some(best.map_or(d, |b| b.min(d)));
        }
    }
    best
}

/// Records that a subsequence is `threshold`-separated, recomputed from the
/// vectors at certification time. Fewer than two vectors certify vacuously.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationCertificate {
    pub indices: Vec<usize>,
    pub min_pairwise: Option<f64>,
    pub threshold: f64,
    /// Rounding slack: `pass ⇔ min_pairwise ≥ threshold - tolerance`.
    pub tolerance: f64,
    pub pass: bool,
}

impl SeparationCertificate {
    pub fn certify(
        space: &LpSpace,
        seq: &[Vector],
        indices: Vec<usize>,
        threshold: f64,
        tolerance: f64,
    ) -> Result<Self> {
        let mut picked = Vec::with_capacity(indices.len());
        for &i in &indices {
            let v = seq.get(i).ok_or_else(|| {
                Error::Precondition(format!("index {i} out of range for {} vectors", seq.len()))
            })?;
            if v.len() != space.dim() {
                return Err(Error::Dimension { expected: space.dim(), got: v.len() });
            }
            picked.push(v.coords());
        }
        let min_pairwise = min_pairwise(space, &picked);
        let pass = min_pairwise.is_none_or(|m| m >= threshold - tolerance);
        Ok(SeparationCertificate { indices, min_pairwise, threshold, tolerance, pass })
    }

    /// Certificate over every vector of `seq`.
    pub fn certify_all(space: &LpSpace, seq: &[Vector], threshold: f64, tolerance: f64) -> Result<Self> {
        Self::certify(space, seq, (0..seq.len()).collect(), threshold, tolerance)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separation_examples() {
        let s = LpSpace::new(2.0, 2).unwrap();
        let e = Vector::basis(2, 0);
        assert_eq!(separation(&s, &[e.clone(), e.scale(-1.0)]).unwrap(), 2.0);
        let dup = vec![e.clone(), Vector::basis(2, 1), e.clone()];
        assert_eq!(separation(&s, &dup).unwrap(), 0.0);
        assert!(separation(&s, &[e]).is_err());
    }

    #[test]
    fn certificate_vacuous_and_threshold() {
        let s = LpSpace::new(2.0, 3).unwrap();
        let seq = unit_basis_seed(&s, 3).unwrap();
        let c = SeparationCertificate::certify(&s, &seq, vec![1], 5.0, 0.0).unwrap();
        assert!(c.pass && c.min_pairwise.is_none());
        let c = SeparationCertificate::certify_all(&s, &seq, 1.5, 0.0).unwrap();
        assert!(!c.pass);
        let c = SeparationCertificate::certify_all(&s, &seq, 1.4, 0.0).unwrap();
        assert!(c.pass);
        assert!(SeparationCertificate::certify(&s, &seq, vec![0, 7], 1.0, 0.0).is_err());
    }
}
