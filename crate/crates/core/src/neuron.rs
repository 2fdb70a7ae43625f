//! Weight vectors with an explicit bias slot, the hypothesis set and the
//! ReLU activation.
//!
//! The constant input coordinate is never materialized: a sample is stored as
//! `x_tilde` and the bias enters through [`WeightVector::affine_eval`].

use std::fmt;

use crate::error::{Error, Result};

/// `max(z, 0)`.
#[inline]
pub fn relu(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        0.0
    }
}

/// Subgradient of [`relu`] with the convention `relu_prime(0) = 1`.
#[inline]
pub fn relu_prime(z: f64) -> f64 {
    if z >= 0.0 {
        1.0
    } else {
        0.0
    }
}

/// A hypothesis `w = (w_tilde, bias)` in `R^{d+1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector {
    w_tilde: Vec<f64>,
    bias: f64,
}

impl WeightVector {
    pub fn new(w_tilde: Vec<f64>, bias: f64) -> Result<Self> {
        if w_tilde.is_empty() {
            return Err(Error::InvalidParameter("weight vector needs d >= 1".into()));
        }
        if !bias.is_finite() || w_tilde.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("weight vector"));
        }
        Ok(Self { w_tilde, bias })
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "weight vector needs d >= 1");
        Self {
            w_tilde: vec![0.0; dim],
            bias: 0.0,
        }
    }

    /// `(scale * e_axis, bias)`.
    pub fn axis(dim: usize, axis: usize, scale: f64, bias: f64) -> Self {
        let mut w = Self::zeros(dim);
        w.w_tilde[axis] = scale;
        w.bias = bias;
        w
    }

    /// Builds from a flat `(w_1..w_d, bias)` slice.
    pub fn from_flat(flat: &[f64]) -> Result<Self> {
        match flat.split_last() {
            Some((bias, w)) if !w.is_empty() => Self::new(w.to_vec(), *bias),
            _ => Err(Error::InvalidParameter("flat weight vector needs d + 1 >= 2 entries".into())),
        }
    }

    pub fn dim(&self) -> usize {
        self.w_tilde.len()
    }

    pub fn w_tilde(&self) -> &[f64] {
        &self.w_tilde
    }

    pub fn w_tilde_mut(&mut self) -> &mut [f64] {
        &mut self.w_tilde
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn set_bias(&mut self, bias: f64) {
        self.bias = bias;
    }

    /// `(w_1..w_d, bias)`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = self.w_tilde.clone();
        v.push(self.bias);
        v
    }

    pub fn is_finite(&self) -> bool {
        self.bias.is_finite() && self.w_tilde.iter().all(|x| x.is_finite())
    }

    pub fn w_tilde_norm_sq(&self) -> f64 {
        dot(&self.w_tilde, &self.w_tilde)
    }

    pub fn w_tilde_norm(&self) -> f64 {
        self.w_tilde_norm_sq().sqrt()
    }

    /// Squared norm in `R^{d+1}`, bias included.
    pub fn norm_sq(&self) -> f64 {
        self.w_tilde_norm_sq() + self.bias * self.bias
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Inner product in `R^{d+1}`.
    pub fn dot(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        dot(&self.w_tilde, &other.w_tilde) + self.bias * other.bias
    }

    /// `w_tilde . x_tilde + bias`.
    pub fn affine_eval(&self, x_tilde: &[f64]) -> Result<f64> {
        self.check_dim(x_tilde.len())?;
        Ok(self.affine_eval_unchecked(x_tilde))
    }

    #[inline]
    pub(crate) fn affine_eval_unchecked(&self, x_tilde: &[f64]) -> f64 {
        dot(&self.w_tilde, x_tilde) + self.bias
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        if dim != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: dim,
            });
        }
        Ok(())
    }

    /// `self - other`.
    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim(), other.dim());
        Self {
            w_tilde: self
                .w_tilde
                .iter()
                .zip(&other.w_tilde)
                .map(|(a, b)| a - b)
                .collect(),
            bias: self.bias - other.bias,
        }
    }

    /// `self += alpha * other`.
    pub fn add_scaled(&mut self, alpha: f64, other: &Self) {
        debug_assert_eq!(self.dim(), other.dim());
        for (a, b) in self.w_tilde.iter_mut().zip(&other.w_tilde) {
            *a += alpha * b;
        }
        self.bias += alpha * other.bias;
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            w_tilde: self.w_tilde.iter().map(|x| alpha * x).collect(),
            bias: alpha * self.bias,
        }
    }
}

impl fmt::Display for WeightVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.w_tilde.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, "; b={})", self.bias)
    }
}

/// Euclidean distance in `R^{d+1}`, bias coordinate included.
pub fn wv_distance(a: &WeightVector, b: &WeightVector) -> Result<f64> {
    a.check_dim(b.dim())?;
    let s: f64 = a
        .w_tilde
        .iter()
        .zip(&b.w_tilde)
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    let db = a.bias - b.bias;
    Ok((s + db * db).sqrt())
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `H = { w : 1/c1 <= |w_tilde| <= c1, |b_w| <= c2 }`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HypothesisSet {
    pub c1: f64,
    pub c2: f64,
}

impl HypothesisSet {
    pub fn new(c1: f64, c2: f64) -> Result<Self> {
        if !(c1 >= 1.0) || !(c2 > 0.0) || !c1.is_finite() || !c2.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "hypothesis set needs c1 >= 1 and c2 > 0 (got c1 = {c1}, c2 = {c2})"
            )));
        }
        Ok(Self { c1, c2 })
    }

    pub fn contains(&self, w: &WeightVector) -> bool {
        let n = w.w_tilde_norm();
        n >= 1.0 / self.c1 && n <= self.c1 && w.bias().abs() <= self.c2
    }

    /// Norm bound `B = sqrt(c1^2 + c2^2)` for every member of the set.
    pub fn norm_bound(&self) -> f64 {
        self.c1.hypot(self.c2)
    }
}

impl Default for HypothesisSet {
    fn default() -> Self {
        Self { c1: 2.0, c2: 2.0 }
    }
}

/// One labelled sample; the constant coordinate is implicit.
#[derive(Clone, Debug, PartialEq)]
pub struct AugmentedSample {
    pub x_tilde: Vec<f64>,
    pub y: f64,
}
