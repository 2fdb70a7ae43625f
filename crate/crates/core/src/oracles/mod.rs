//! Loss and gradient evaluation.
//!
//! Gaussian marginals get exact population values (see [`gauss`]); every
//! other quantity is a seeded Monte Carlo estimate or an exact average over a
//! fixed dataset.

pub mod gauss;
mod mc;

pub use gauss::{GaussianPairGeometry, PairValues, DEFAULT_NODES};
pub use mc::{
    empirical_grad, empirical_loss, empirical_loss_and_grad, mc_f, mc_grad_f, mc_grad_loss, mc_loss,
    mc_orthant_prob,
};

use crate::error::{Error, Result};
use crate::labels::{is_v_optimal_for, Dataset, Instance};
use crate::neuron::{wv_distance, WeightVector};

/// How a gradient was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GradientMode {
    /// Exact population value (Gaussian marginal).
    Analytic,
    MonteCarlo(usize),
    /// Full-batch average over a fixed dataset of this size.
    Empirical(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradientEstimate {
    /// `(d` input components, bias`)`.
    pub vector: WeightVector,
    /// Norm of the per-coordinate standard errors (Monte Carlo only).
    pub std_err: Option<f64>,
    /// Per-coordinate standard errors, bias last (Monte Carlo only).
    pub coord_std_err: Option<Vec<f64>>,
    pub mode: GradientMode,
}

impl GradientEstimate {
    pub(crate) fn exact(vector: WeightVector, mode: GradientMode) -> Self {
        Self {
            vector,
            std_err: None,
            coord_std_err: None,
            mode,
        }
    }
}

/// Which algorithm evaluates Gaussian population quantities.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GaussMethod {
    /// Stein-identity closed form with a bivariate normal orthant probability.
    ClosedForm,
    /// Composite Gauss–Legendre over the `w_hat` coordinate with this many
    /// nodes per segment; the orthogonal coordinate is integrated exactly.
    Quadrature { nodes: usize },
}

/// Population oracle for a standard Gaussian marginal and teacher `v`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GaussOracle {
    pub method: GaussMethod,
}

impl Default for GaussOracle {
    fn default() -> Self {
        Self {
            method: GaussMethod::ClosedForm,
        }
    }
}

impl GaussOracle {
    pub fn quadrature(nodes: usize) -> Self {
        Self {
            method: GaussMethod::Quadrature { nodes },
        }
    }

    /// `F`, `grad F` coefficients and the joint orthant probability at `(w, v)`.
    pub fn eval(&self, w: &WeightVector, v: &WeightVector) -> Result<PairValues> {
        w.check_dim(v.dim())?;
        let g = GaussianPairGeometry::new(w, v);
        Ok(match self.method {
            GaussMethod::ClosedForm => gauss::closed_form(&g),
            GaussMethod::Quadrature { nodes } => gauss::quadrature(&g, nodes),
        })
    }

    pub fn f(&self, w: &WeightVector, v: &WeightVector) -> Result<f64> {
        Ok(self.eval(w, v)?.f)
    }

    pub fn grad_f(&self, w: &WeightVector, v: &WeightVector) -> Result<WeightVector> {
        Ok(self.eval(w, v)?.gradient(w, v))
    }

    /// `(F(w), grad F(w))` from a single evaluation.
    pub fn f_and_grad(&self, w: &WeightVector, v: &WeightVector) -> Result<(f64, WeightVector)> {
        let p = self.eval(w, v)?;
        Ok((p.f, p.gradient(w, v)))
    }

    pub fn orthant_prob(&self, w: &WeightVector, v: &WeightVector) -> Result<f64> {
        Ok(self.eval(w, v)?.orthant)
    }
}

/// `F(w) = E[(relu(w . x) - relu(v . x))^2] / 2` under a standard Gaussian.
#[allow(non_snake_case)]
pub fn population_F_gauss(w: &WeightVector, v: &WeightVector) -> Result<f64> {
    GaussOracle::default().f(w, v)
}

/// Exact `grad F(w)` under a standard Gaussian.
#[allow(non_snake_case)]
pub fn population_gradF_gauss(w: &WeightVector, v: &WeightVector) -> Result<GradientEstimate> {
    Ok(GradientEstimate::exact(
        GaussOracle::default().grad_f(w, v)?,
        GradientMode::Analytic,
    ))
}

/// `P(w . x >= 0, v . x >= 0)` under a standard Gaussian.
pub fn joint_orthant_prob_gauss(w: &WeightVector, v: &WeightVector) -> Result<f64> {
    GaussOracle::default().orthant_prob(w, v)
}

/// `F(0) = E[relu(v . x)^2] / 2` under a standard Gaussian.
#[allow(non_snake_case)]
pub fn population_F0_gauss(v: &WeightVector) -> f64 {
    gauss::f_at_zero(v)
}

/// Smallest `n_pop` accepted for Monte Carlo population gradients in
/// [`zeta_deviation`].
pub const ZETA_MIN_POPULATION_SAMPLES: usize = 1_000_000;

/// Whether the population gradient of `L` has an exact evaluation for `instance`.
pub fn has_exact_population_gradient(instance: &Instance) -> bool {
    instance.marginal.family.is_gaussian() && is_v_optimal_for(instance)
}

/// Population `grad L(w)`: exact when available, otherwise Monte Carlo with `n_pop` samples.
pub fn population_grad_loss(w: &WeightVector, instance: &Instance, n_pop: usize, seed: u64) -> Result<GradientEstimate> {
    if has_exact_population_gradient(instance) {
        population_gradF_gauss(w, &instance.teacher)
    } else {
        mc_grad_loss(w, instance, n_pop, seed)
    }
}

/// `|grad L(w) - grad L_hat(w)|`.
pub fn zeta_deviation(w: &WeightVector, instance: &Instance, dataset: &Dataset, n_pop: usize, seed: u64) -> Result<f64> {
    if !has_exact_population_gradient(instance) && n_pop < ZETA_MIN_POPULATION_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "Monte Carlo population gradient needs n_pop >= {ZETA_MIN_POPULATION_SAMPLES}, got {n_pop}"
        )));
    }
    let pop = population_grad_loss(w, instance, n_pop, seed)?;
    let emp = empirical_grad(w, dataset)?;
    wv_distance(&pop.vector, &emp.vector)
}
