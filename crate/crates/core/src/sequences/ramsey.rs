use serde::{Deserialize, Serialize};

use super::construct::Branch;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RamseyResult {
    /// Ascending indices whose pairwise entries all fall on one side of the split.
    pub indices: Vec<usize>,
    pub branch: Branch,
}

fn colour(v: f64, split: f64) -> Branch {
    if v <= split {
        Branch::Low
    } else {
        Branch::High
    }
}

/// Two-colour Ramsey extraction by greedy pivoting.
///
/// Entries `≤ split` are low, the rest high. Each round takes the first
/// remaining index as a pivot and keeps the larger colour class of the rest
/// (ties keep low). Pivot `i` then sees every later pivot in its own colour,
/// so the pivots of the more frequent colour form a monochromatic set of size
/// at least `⌊⌈log₂ n⌉ / 2⌋`. The final pivot has no successors and joins
/// whichever colour wins.
pub fn ramsey_extract(values: &[Vec<f64>], split: f64) -> Result<RamseyResult> {
    let n = values.len();
    if n < 2 {
        return Err(Error::Precondition("ramsey extraction needs n >= 2".into()));
    }
    for (i, row) in values.iter().enumerate() {
        if row.len() != n {
            return Err(Error::Precondition(format!("row {i} has length {}, expected {n}", row.len())));
        }
        if row[i] != 0.0 {
            return Err(Error::Precondition(format!("diagonal entry {i} is {}", row[i])));
        }
        for j in 0..i {
            if row[j] != values[j][i] {
                return Err(Error::Precondition(format!("matrix is not symmetric at ({i}, {j})")));
            }
        }
    }

    let mut remaining: Vec<usize> = (0..n).collect();
    let mut chain: Vec<(usize, Option<Branch>)> = Vec::new();
    while let Some((&pivot, rest)) = remaining.split_first() {
        if rest.is_empty() {
            chain.push((pivot, None));
            break;
        }
        let (low, high): (Vec<usize>, Vec<usize>) =
            rest.iter().partition(|&&j| colour(values[pivot][j], split) == Branch::Low);
        if low.len() >= high.len() {
            chain.push((pivot, Some(Branch::Low)));
            remaining = low;
        } else {
            chain.push((pivot, Some(Branch::High)));
            remaining = high;
        }
    }

    let lows = chain.iter().filter(|c| c.1 == Some(Branch::Low)).count();
    let highs = chain.iter().filter(|c| c.1 == Some(Branch::High)).count();
    let branch = if lows >= highs { Branch::Low } else { Branch::High };
    let mut indices: Vec<usize> = chain
        .iter()
        .filter(|c| c.1.is_none_or(|b| b == branch))
        .map(|c| c.0)
        .collect();
    indices.sort_unstable();
    Ok(RamseyResult { indices, branch })
}

/// Size guaranteed by the pivot argument.
pub fn size_floor(n: usize) -> usize {
    let log = usize::BITS - (n.max(1) - 1).leading_zeros();
    log as usize / 2
}
