//! Monte Carlo estimators and exact averages over a fixed dataset.
//!
//! Standard errors are the i.i.d. sample standard deviation over `sqrt(n)`.

use crate::error::{Error, Result};
use crate::labels::{Dataset, Instance, PairSampler};
use crate::marginals::{for_each_sample, MarginalSpec};
use crate::neuron::{relu, relu_prime, WeightVector};
use crate::stats::{Estimate, Running};

use super::{GradientEstimate, GradientMode};

/// `L(w) = E[(relu(w . x) - y)^2] / 2` from `n` fresh pairs.
pub fn mc_loss(w: &WeightVector, instance: &Instance, n: usize, seed: u64) -> Estimate {
    let mut sampler = PairSampler::new(instance, seed);
    let mut x = vec![0.0; instance.dim()];
    let mut acc = Running::default();
    for _ in 0..n {
        let y = sampler.next_into(&mut x);
        let r = relu(w.affine_eval_unchecked(&x)) - y;
        acc.push(0.5 * r * r);
    }
    acc.estimate()
}

/// `F(w)` from `n` draws of the marginal.
pub fn mc_f(w: &WeightVector, v: &WeightVector, marginal: &MarginalSpec, n: usize, seed: u64) -> Estimate {
    let mut acc = Running::default();
    for_each_sample(marginal, n, seed, |x| {
        let r = relu(w.affine_eval_unchecked(x)) - relu(v.affine_eval_unchecked(x));
        acc.push(0.5 * r * r);
    });
    acc.estimate()
}

/// `P(w . x >= 0, v . x >= 0)` from `n` draws of the marginal.
pub fn mc_orthant_prob(w: &WeightVector, v: &WeightVector, marginal: &MarginalSpec, n: usize, seed: u64) -> Estimate {
    let mut acc = Running::default();
    for_each_sample(marginal, n, seed, |x| {
        let both = w.affine_eval_unchecked(x) >= 0.0 && v.affine_eval_unchecked(x) >= 0.0;
        acc.push(if both { 1.0 } else { 0.0 });
    });
    acc.estimate()
}

/// Accumulates `r * (x_tilde, 1)` per coordinate.
struct GradAccumulator {
    coords: Vec<Running>,
}

impl GradAccumulator {
    fn new(dim: usize) -> Self {
        Self {
            coords: vec![Running::default(); dim + 1],
        }
    }

    fn push(&mut self, x: &[f64], r: f64) {
        let (bias, rest) = self.coords.split_last_mut().expect("dim + 1 >= 2");
        for (c, xi) in rest.iter_mut().zip(x) {
            c.push(r * xi);
        }
        bias.push(r);
    }

    fn finish(self, n: usize) -> GradientEstimate {
        let means: Vec<f64> = self.coords.iter().map(|c| c.mean()).collect();
        let ses: Vec<f64> = self.coords.iter().map(|c| c.estimate().std_err).collect();
        GradientEstimate {
            vector: WeightVector::from_flat(&means).expect("finite gradient"),
            std_err: Some(ses.iter().map(|s| s * s).sum::<f64>().sqrt()),
            coord_std_err: Some(ses),
            mode: GradientMode::MonteCarlo(n),
        }
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("Monte Carlo needs n >= 2, got {n}")));
    }
    Ok(())
}

/// `grad L(w) = E[(relu(w . x) - y) relu'(w . x) x]` from `n` fresh pairs.
pub fn mc_grad_loss(w: &WeightVector, instance: &Instance, n: usize, seed: u64) -> Result<GradientEstimate> {
    check_n(n)?;
    w.check_dim(instance.dim())?;
    let mut sampler = PairSampler::new(instance, seed);
    let mut x = vec![0.0; instance.dim()];
    let mut acc = GradAccumulator::new(instance.dim());
    for _ in 0..n {
        let y = sampler.next_into(&mut x);
        let z = w.affine_eval_unchecked(&x);
        acc.push(&x, (relu(z) - y) * relu_prime(z));
    }
    Ok(acc.finish(n))
}

/// `grad F(w)` from `n` draws of the marginal.
pub fn mc_grad_f(
    w: &WeightVector,
    v: &WeightVector,
    marginal: &MarginalSpec,
    n: usize,
    seed: u64,
) -> Result<GradientEstimate> {
    check_n(n)?;
    w.check_dim(marginal.dim)?;
    v.check_dim(marginal.dim)?;
    let mut acc = GradAccumulator::new(marginal.dim);
    for_each_sample(marginal, n, seed, |x| {
        let z = w.affine_eval_unchecked(x);
        acc.push(x, (relu(z) - relu(v.affine_eval_unchecked(x))) * relu_prime(z));
    });
    Ok(acc.finish(n))
}

/// `(L_hat(w), grad L_hat(w))` over the whole dataset.
pub fn empirical_loss_and_grad(w: &WeightVector, dataset: &Dataset) -> Result<(f64, WeightVector)> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    w.check_dim(dataset.dim)?;
    let mut grad = vec![0.0; dataset.dim + 1];
    let mut loss = 0.0;
    let (wt, b) = (w.w_tilde(), w.bias());
    for (x, y) in dataset.iter() {
        let z = b + x.iter().zip(wt).map(|(a, c)| a * c).sum::<f64>();
        let r = relu(z) - y;
        loss += r * r;
        // branch-free: the active indicator is data-dependent and unpredictable
        let m = if z >= 0.0 { r } else { 0.0 };
        for (g, xi) in grad.iter_mut().zip(x) {
            *g += m * xi;
        }
        grad[dataset.dim] += m;
    }
    let n = dataset.len() as f64;
    grad.iter_mut().for_each(|g| *g /= n);
    let grad = WeightVector::from_flat(&grad).map_err(|_| Error::NonFinite("empirical gradient"))?;
    Ok((0.5 * loss / n, grad))
}

/// `L_hat(w) = sum_i (relu(w . x_i) - y_i)^2 / (2n)`.
pub fn empirical_loss(w: &WeightVector, dataset: &Dataset) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    w.check_dim(dataset.dim)?;
    let s: f64 = dataset
        .iter()
        .map(|(x, y)| {
            let r = relu(w.affine_eval_unchecked(x)) - y;
            r * r
        })
        .sum();
    Ok(0.5 * s / dataset.len() as f64)
}

/// Full-batch `grad L_hat(w)`.
pub fn empirical_grad(w: &WeightVector, dataset: &Dataset) -> Result<GradientEstimate> {
    let (_, g) = empirical_loss_and_grad(w, dataset)?;
    Ok(GradientEstimate::exact(g, GradientMode::Empirical(dataset.len())))
}
