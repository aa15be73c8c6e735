//! Finite-dimensional l^p spaces.
//!
//! A [`LpSpace`] fixes the exponent `p ∈ (1, ∞)` and the dimension `d`.
//! Vectors and dual functionals are plain coordinate lists; the space
//! supplies the norms, the duality map and sphere sampling.

use std::ops::Deref;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance for algebraic identities (norms, pairings).
pub const IDENTITY_TOL: f64 = 1e-12;

/// The space l^p_d.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LpSpace {
    p: f64,
    dim: usize,
}

/// A point of l^p_d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector(Vec<f64>);

/// A linear functional acting by `<v, f> = Σ f_i v_i`, measured in the dual
/// exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Functional(Vec<f64>);

impl Vector {
    pub fn new(coords: Vec<f64>) -> Self {
        Vector(coords)
    }

    pub fn zeros(dim: usize) -> Self {
        Vector(vec![0.0; dim])
    }

    /// The standard basis vector `e_index`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[index] = 1.0;
        Vector(v)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn add(&self, other: &Vector) -> Vector {
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn scale(&self, factor: f64) -> Vector {
        Vector(self.0.iter().map(|a| a * factor).collect())
    }

    /// `self + factor * other`
    pub fn axpy(&self, factor: f64, other: &Vector) -> Vector {
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a + factor * b).collect())
    }
}

impl Deref for Vector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Vector {
    fn from(v: Vec<f64>) -> Self {
        Vector(v)
    }
}

impl Functional {
    pub fn new(coords: Vec<f64>) -> Self {
        Functional(coords)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    /// The pairing `<v, f>`. Lengths are assumed to match.
    pub fn pair(&self, v: &[f64]) -> f64 {
        self.0.iter().zip(v).map(|(f, x)| f * x).sum()
    }
}

impl Deref for Functional {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// `(Σ |v_i|^r)^{1/r}`, scaled by the largest entry to stay clear of
/// overflow and underflow.
fn r_norm(r: f64, v: &[f64]) -> f64 {
    let m = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if m == 0.0 {
        return 0.0;
    }
    if r == 2.0 {
        let s: f64 = v.iter().map(|x| (x / m) * (x / m)).sum();
        return m * s.sqrt();
    }
    let s: f64 = v.iter().map(|x| (x.abs() / m).powf(r)).sum();
    m * s.powf(1.0 / r)
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl LpSpace {
    pub fn new(p: f64, dim: usize) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::InvalidExponent(p));
        }
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        Ok(LpSpace { p, dim })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Conjugate exponent `q` with `1/p + 1/q = 1`.
    pub fn dual_exponent(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim {
            return Err(Error::Dimension { expected: self.dim, got: len });
        }
        Ok(())
    }

    pub fn norm(&self, v: &[f64]) -> Result<f64> {
        self.check_len(v.len())?;
        Ok(r_norm(self.p, v))
    }

    /// Norm without the length check, for inner loops over vectors that
    /// were validated on entry.
    pub(crate) fn norm_unchecked(&self, v: &[f64]) -> f64 {
        r_norm(self.p, v)
    }

    pub fn dist(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        self.check_len(a.len())?;
        self.check_len(b.len())?;
        Ok(self.dist_unchecked(a, b))
    }

    pub(crate) fn dist_unchecked(&self, a: &[f64], b: &[f64]) -> f64 {
        let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        r_norm(self.p, &diff)
    }

    pub(crate) fn sum_norm_unchecked(&self, a: &[f64], b: &[f64]) -> f64 {
        let s: Vec<f64> = a.iter().zip(b).map(|(x, y)| x + y).collect();
        r_norm(self.p, &s)
    }

    pub fn dual_norm(&self, f: &Functional) -> Result<f64> {
        self.check_len(f.len())?;
        Ok(r_norm(self.dual_exponent(), f))
    }

    pub fn normalize(&self, v: &Vector) -> Result<Vector> {
        let n = self.norm(v)?;
        if n == 0.0 {
            return Err(Error::Degenerate("cannot normalize the zero vector"));
        }
        Ok(v.scale(1.0 / n))
    }

    /// The duality map: the unique unit functional `f` with `<x, f> = ‖x‖`,
    /// `f_i = sign(x_i) (|x_i| / ‖x‖)^{p-1}`.
    pub fn norming_functional(&self, x: &Vector) -> Result<Functional> {
        let n = self.norm(x)?;
        if n == 0.0 {
            return Err(Error::Degenerate("the zero vector has no norming functional"));
        }
        let e = self.p - 1.0;
        Ok(Functional(
            x.iter().map(|&xi| sign(xi) * (xi.abs() / n).powf(e)).collect(),
        ))
    }

    /// A unit vector drawn from Gaussian coordinates normalized in the
    /// p-norm. Deterministic in `seed`.
    pub fn random_unit(&self, seed: u64) -> Vector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.random_unit_with(&mut rng)
    }

    pub fn random_unit_with<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Vector {
        loop {
            let v: Vec<f64> = (0..self.dim).map(|_| StandardNormal.sample(rng)).collect();
            let n = r_norm(self.p, &v);
            if n > 0.0 && n.is_finite() {
                return Vector(v.into_iter().map(|x| x / n).collect());
            }
        }
    }

    /// A functional of dual norm exactly one (up to rounding), drawn the
    /// same way as [`LpSpace::random_unit_with`] but normalized in `q`.
    pub fn random_unit_functional<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Functional {
        let q = self.dual_exponent();
        loop {
            let v: Vec<f64> = (0..self.dim).map(|_| StandardNormal.sample(rng)).collect();
            let n = r_norm(q, &v);
            if n > 0.0 && n.is_finite() {
                return Functional(v.into_iter().map(|x| x / n).collect());
            }
        }
    }
}

/// A linear map into `l^∞_k` whose rows are functionals of dual norm at most
/// one. Hölder's inequality makes every such map a contraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionMap {
    rows: Vec<Functional>,
}

impl ContractionMap {
    pub fn new(space: &LpSpace, rows: Vec<Functional>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Precondition("contraction needs at least one row".into()));
        }
        for row in &rows {
            let n = space.dual_norm(row)?;
            if n > 1.0 + IDENTITY_TOL {
                return Err(Error::Precondition(format!("row has dual norm {n} > 1")));
            }
        }
        Ok(ContractionMap { rows })
    }

    pub fn rows(&self) -> &[Functional] {
        &self.rows
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let d = self.rows[0].len();
        if v.len() != d {
            return Err(Error::Dimension { expected: d, got: v.len() });
        }
        Ok(self.rows.iter().map(|r| r.pair(v)).collect())
    }

    /// `‖T v‖_∞`.
    pub fn apply_sup(&self, v: &[f64]) -> Result<f64> {
        Ok(sup_norm(&self.apply(v)?))
    }
}

pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(p: f64, d: usize) -> LpSpace {
        LpSpace::new(p, d).unwrap()
    }

    #[test]
    fn rejects_bad_exponents() {
        for p in [1.0, 0.5, -2.0, f64::INFINITY, f64::NAN] {
            assert!(matches!(LpSpace::new(p, 3), Err(Error::InvalidExponent(_))));
        }
        assert!(matches!(LpSpace::new(2.0, 0), Err(Error::ZeroDimension)));
    }

    #[test]
    fn norm_examples() {
        assert_eq!(space(2.0, 2).norm(&[3.0, 4.0]).unwrap(), 5.0);
        assert_eq!(space(3.7, 4).norm(&[0.0; 4]).unwrap(), 0.0);
        let n = space(1.5, 2).norm(&[1.0, 1.0]).unwrap();
        assert!((n - 1.587_401_051_968_199_4).abs() < 1e-12);
        assert!(matches!(
            space(2.0, 3).norm(&[1.0, 2.0]),
            Err(Error::Dimension { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn normalize_examples() {
        let s = space(2.0, 2);
        let u = s.normalize(&Vector::new(vec![3.0, 4.0])).unwrap();
        assert!((u[0] - 0.6).abs() < 1e-15 && (u[1] - 0.8).abs() < 1e-15);
        let e = Vector::basis(2, 1);
        assert_eq!(s.normalize(&e).unwrap(), e);
        let w = s.normalize(&Vector::new(vec![1.0, -1.0])).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((w[0] - h).abs() < 1e-15 && (w[1] + h).abs() < 1e-15);
        assert!(matches!(s.normalize(&Vector::zeros(2)), Err(Error::Degenerate(_))));
    }

    #[test]
    fn norming_functional_hilbert_is_identity() {
        let s = space(2.0, 3);
        let e = Vector::basis(3, 0);
        let f = s.norming_functional(&e).unwrap();
        assert_eq!(f.coords(), e.coords());
        let x = s.random_unit(11);
        let f = s.norming_functional(&x).unwrap();
        for (a, b) in f.iter().zip(x.iter()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn norming_functional_p3() {
        let s = space(3.0, 2);
        let c = 2f64.powf(-1.0 / 3.0);
        let x = Vector::new(vec![c, c]);
        let f = s.norming_functional(&x).unwrap();
        assert!((f.pair(&x) - 1.0).abs() < 1e-12);
        let q_sum: f64 = f.iter().map(|v| v.abs().powf(1.5)).sum();
        assert!((q_sum - 1.0).abs() < 1e-12);
        // each entry is c^2 since ‖x‖ = 1
        assert!((f[0] - c * c).abs() < 1e-15);
    }

    #[test]
    fn norming_functional_sign_zero() {
        let s = space(3.0, 3);
        let f = s.norming_functional(&Vector::new(vec![0.0, -2.0, 0.0])).unwrap();
        assert_eq!(f.coords(), &[0.0, -1.0, 0.0]);
        assert!(s.norming_functional(&Vector::zeros(3)).is_err());
    }

    #[test]
    fn random_unit_one_dimensional() {
        let s = space(2.5, 1);
        for seed in 0..20 {
            let v = s.random_unit(seed);
            assert!(v[0] == 1.0 || v[0] == -1.0);
        }
    }

    #[test]
    fn random_unit_deterministic() {
        let s = space(1.7, 5);
        assert_eq!(s.random_unit(42), s.random_unit(42));
        assert_ne!(s.random_unit(42), s.random_unit(43));
    }

    #[test]
    fn random_unit_mean_near_origin() {
        let s = space(2.0, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut mean = [0.0; 3];
        let n = 10_000;
        for _ in 0..n {
            let v = s.random_unit_with(&mut rng);
            assert!((s.norm(&v).unwrap() - 1.0).abs() < 1e-12);
            for i in 0..3 {
                mean[i] += v[i] / n as f64;
            }
        }
        assert!(mean.iter().all(|m| m.abs() < 0.05), "{mean:?}");
    }

    #[test]
    fn contraction_examples() {
        let s = space(3.0, 4);
        let x = Vector::new(vec![0.5, -1.0, 2.0, 0.0]);
        let t = ContractionMap::new(&s, vec![s.norming_functional(&x).unwrap()]).unwrap();
        let n = s.norm(&x).unwrap();
        assert!((t.apply_sup(&x).unwrap() - n).abs() < 1e-12);
        assert_eq!(t.apply_sup(&[0.0; 4]).unwrap(), 0.0);
        assert!(t.apply(&[1.0]).is_err());
        let too_big = Functional::new(vec![2.0, 0.0, 0.0, 0.0]);
        assert!(ContractionMap::new(&s, vec![too_big]).is_err());
    }

    #[test]
    fn contraction_never_expands() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for p in [1.3, 2.0, 4.5] {
            let s = space(p, 6);
            for _ in 0..10_000 {
                let rows = (0..3).map(|_| s.random_unit_functional(&mut rng)).collect();
                let t = ContractionMap::new(&s, rows).unwrap();
                let v = s.random_unit_with(&mut rng).scale(3.0);
                assert!(t.apply_sup(&v).unwrap() <= s.norm(&v).unwrap() * (1.0 + 1e-12));
            }
        }
    }
}
