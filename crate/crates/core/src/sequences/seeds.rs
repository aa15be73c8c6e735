use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::SeparationCertificate;
use crate::error::{Error, Result};
use crate::spaces::{LpSpace, Vector};

const REFINE_LEVELS: usize = 30;
const REFINE_START_STEP: f64 = 0.25;
const REFINE_MAX_SWEEPS: usize = 20;

/// The first `n` standard basis vectors; `2^{1/p}`-separated.
pub fn unit_basis_seed(space: &LpSpace, n: usize) -> Result<Vec<Vector>> {
    if n > space.dim() {
        return Err(Error::Capacity { requested: n, available: space.dim() });
    }
    Ok((0..n).map(|i| Vector::basis(space.dim(), i)).collect())
}

/// `(e_0 + e_k) / 2^{1/p}` for `k = 1..=n`: unit vectors at mutual distance
/// exactly 1 in every l^p.
pub fn shifted_basis_seed(space: &LpSpace, n: usize) -> Result<Vec<Vector>> {
    let d = space.dim();
    if n + 1 > d {
        return Err(Error::Capacity { requested: n, available: d.saturating_sub(1) });
    }
    let c = 2f64.powf(-1.0 / space.p());
    Ok((1..=n)
        .map(|k| {
            let mut v = vec![0.0; d];
            v[0] = c;
            v[k] = c;
            Vector::new(v)
        })
        .collect())
}

fn min_dist_to(space: &LpSpace, prior: &[Vector], v: &[f64]) -> f64 {
    prior
        .iter()
        .map(|w| space.dist_unchecked(w, v))
        .fold(f64::INFINITY, f64::min)
}

fn normalized(space: &LpSpace, v: Vec<f64>) -> Option<Vec<f64>> {
    let n = space.norm_unchecked(&v);
    (n > 0.0 && n.is_finite()).then(|| v.into_iter().map(|c| c / n).collect())
}

/// Greedy unit vectors, each at distance at least `1 - eta` from all earlier
/// ones.
///
/// Every new vector maximizes the minimum distance to its predecessors over
/// `budget` random unit vectors followed by a halving-step coordinate search.
/// Construction stops early once the best candidate falls short; the
/// certificate then covers whatever was built.
pub fn riesz_seed(
    space: &LpSpace,
    n: usize,
    eta: f64,
    budget: usize,
    seed: u64,
) -> Result<(Vec<Vector>, SeparationCertificate)> {
    if n == 0 {
        return Err(Error::Precondition("riesz seed needs n >= 1".into()));
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::Domain(format!("slack eta = {eta} is outside (0, 1)")));
    }
    let budget = budget.max(1);
    let threshold = 1.0 - eta;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![space.random_unit_with(&mut rng)];

    while out.len() < n {
        let mut best = space.random_unit_with(&mut rng).into_inner();
        let mut best_val = min_dist_to(space, &out, &best);
        for _ in 1..budget {
            let c = space.random_unit_with(&mut rng).into_inner();
            let v = min_dist_to(space, &out, &c);
            if v > best_val {
                best = c;
                best_val = v;
            }
        }
        let mut step = REFINE_START_STEP;
        for _ in 0..REFINE_LEVELS {
            for _ in 0..REFINE_MAX_SWEEPS {
                let mut improved = false;
                for i in 0..space.dim() {
                    for s in [1.0, -1.0] {
                        let mut c = best.clone();
                        c[i] += s * step;
                        if let Some(c) = normalized(space, c) {
                            let v = min_dist_to(space, &out, &c);
                            if v > best_val {
                                best = c;
                                best_val = v;
                                improved = true;
                            }
                        }
                    }
                }
                if !improved {
                    break;
                }
            }
            step *= 0.5;
        }
        if best_val < threshold {
            break;
        }
        out.push(Vector::new(best));
    }

    let cert = SeparationCertificate::certify_all(space, &out, threshold, 0.0)?;
    Ok((out, cert))
}
