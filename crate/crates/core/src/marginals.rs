//! Samplers for the input marginal over `x_tilde` and empirical estimators
//! of its regularity constants (isotropy and fourth moments,
//! anti-concentration, spread of the ReLU mass and the 2-D conditional
//! condition).
//!
//! Every non-Gaussian family is a product distribution scaled to unit
//! per-coordinate variance. All estimators are deterministic given their
//! seed and report batch-means standard errors.

use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal, Uniform};

use crate::error::{Error, Result};
use crate::neuron::{dot, relu};
use crate::seed::{self, LabRng};
use crate::stats::{BatchMeans, Estimate, Running};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Family {
    StandardGaussian,
    /// Product of `U[-half_width, half_width]`.
    UniformCube { half_width: f64 },
    /// Product of Laplace(0, scale).
    LaplaceProduct { scale: f64 },
}

impl Family {
    /// Unit-variance uniform cube, half-width `sqrt(3)`.
    pub fn uniform() -> Self {
        Family::UniformCube {
            half_width: 3f64.sqrt(),
        }
    }

    /// Unit-variance Laplace product, scale `1/sqrt(2)`.
    pub fn laplace() -> Self {
        Family::LaplaceProduct {
            scale: std::f64::consts::FRAC_1_SQRT_2,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::StandardGaussian => "gaussian",
            Family::UniformCube { .. } => "uniform",
            Family::LaplaceProduct { .. } => "laplace",
        }
    }

    /// Parses `gaussian`, `uniform` or `laplace` (unit-variance parameters).
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "gaussian" => Some(Family::StandardGaussian),
            "uniform" => Some(Family::uniform()),
            "laplace" => Some(Family::laplace()),
            _ => None,
        }
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, Family::StandardGaussian)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::StandardGaussian => write!(f, "gaussian"),
            Family::UniformCube { half_width } => write!(f, "uniform(half_width={half_width})"),
            Family::LaplaceProduct { scale } => write!(f, "laplace(scale={scale})"),
        }
    }
}

/// Distribution of `x_tilde` in `R^dim`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MarginalSpec {
    pub family: Family,
    pub dim: usize,
}

impl MarginalSpec {
    pub fn new(family: Family, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("marginal dimension must be >= 1".into()));
        }
        let ok = match family {
            Family::StandardGaussian => true,
            Family::UniformCube { half_width } => half_width > 0.0 && half_width.is_finite(),
            Family::LaplaceProduct { scale } => scale > 0.0 && scale.is_finite(),
        };
        if !ok {
            return Err(Error::InvalidParameter(format!("bad family parameters: {family}")));
        }
        Ok(Self { family, dim })
    }

    pub fn gaussian(dim: usize) -> Self {
        Self::new(Family::StandardGaussian, dim).expect("dim >= 1")
    }
}

/// Row generator over a deterministic stream.
pub struct MarginalSampler {
    family: Family,
    dim: usize,
    rng: LabRng,
}

impl MarginalSampler {
    pub fn new(spec: &MarginalSpec, seed: u64) -> Self {
        Self {
            family: spec.family,
            dim: spec.dim,
            rng: seed::rng(seed),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Overwrites `row` (length `dim`) with the next draw.
    pub fn fill(&mut self, row: &mut [f64]) {
        debug_assert_eq!(row.len(), self.dim);
        match self.family {
            Family::StandardGaussian => {
                for x in row.iter_mut() {
                    *x = StandardNormal.sample(&mut self.rng);
                }
            }
            Family::UniformCube { half_width } => {
                let u = Uniform::new(-half_width, half_width).expect("positive half width");
                for x in row.iter_mut() {
                    *x = u.sample(&mut self.rng);
                }
            }
            Family::LaplaceProduct { scale } => {
                for x in row.iter_mut() {
                    let e: f64 = Exp1.sample(&mut self.rng);
                    *x = if self.rng.random::<bool>() { scale * e } else { -scale * e };
                }
            }
        }
    }

    /// The underlying stream, for callers that draw labels interleaved with rows.
    pub fn rng_mut(&mut self) -> &mut LabRng {
        &mut self.rng
    }
}

/// Row-major `n x dim` matrix of draws.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleMatrix {
    pub n: usize,
    pub dim: usize,
    pub data: Vec<f64>,
}

impl SampleMatrix {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }
}

/// `n` i.i.d. draws from `spec`; deterministic in `(spec, n, seed)`.
pub fn sample_marginal(spec: &MarginalSpec, n: usize, seed: u64) -> SampleMatrix {
    let mut s = MarginalSampler::new(spec, seed);
    let mut data = vec![0.0; n * spec.dim];
    for row in data.chunks_exact_mut(spec.dim) {
        s.fill(row);
    }
    SampleMatrix {
        n,
        dim: spec.dim,
        data,
    }
}

/// Streams the same rows as [`sample_marginal`] without materializing them.
pub fn for_each_sample<F: FnMut(&[f64])>(spec: &MarginalSpec, n: usize, seed: u64, mut f: F) {
    let mut s = MarginalSampler::new(spec, seed);
    let mut row = vec![0.0; spec.dim];
    for _ in 0..n {
        s.fill(&mut row);
        f(&row);
    }
}

fn check_unit(u: &[f64], dim: usize) -> Result<()> {
    if u.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: u.len(),
        });
    }
    let norm = dot(u, u).sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::NonUnitDirection { norm });
    }
    Ok(())
}

fn projections(spec: &MarginalSpec, u: &[f64], n: usize, seed: u64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    for_each_sample(spec, n, seed, |x| out.push(dot(u, x)));
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DirectionalMoments {
    pub m2: Estimate,
    pub m4: Estimate,
}

/// Empirical `E[<u, x>^2]` and `E[<u, x>^4]`.
pub fn estimate_directional_moments(
    spec: &MarginalSpec,
    u: &[f64],
    n: usize,
    seed: u64,
) -> Result<DirectionalMoments> {
    check_unit(u, spec.dim)?;
    let mut m2 = BatchMeans::new(n);
    let mut m4 = BatchMeans::new(n);
    for_each_sample(spec, n, seed, |x| {
        let p = dot(u, x);
        let p2 = p * p;
        m2.push(p2);
        m4.push(p2 * p2);
    });
    Ok(DirectionalMoments {
        m2: m2.estimate(),
        m4: m4.estimate(),
    })
}

/// Evenly spaced grid on `[lo, hi]` with the given spacing (endpoints included).
pub fn uniform_grid(lo: f64, hi: f64, spacing: f64) -> Vec<f64> {
    let steps = ((hi - lo) / spacing).round() as usize;
    (0..=steps).map(|i| lo + i as f64 * spacing).collect()
}

/// `max_t P(<u, x> in (t - delta, t + delta)) / delta` over `t_grid`.
pub fn estimate_anticoncentration(
    spec: &MarginalSpec,
    u: &[f64],
    delta: f64,
    t_grid: &[f64],
    n: usize,
    seed: u64,
) -> Result<Estimate> {
    check_unit(u, spec.dim)?;
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    if t_grid.is_empty() {
        return Err(Error::InvalidParameter("empty t grid".into()));
    }
    let proj = projections(spec, u, n, seed);
    let mut sorted = proj.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let count_open = |t: f64| {
        let lo = sorted.partition_point(|&p| p <= t - delta);
        let hi = sorted.partition_point(|&p| p < t + delta);
        hi - lo
    };
    let (best_t, _) = t_grid
        .iter()
        .map(|&t| (t, count_open(t)))
        .fold((t_grid[0], 0usize), |acc, (t, c)| if c > acc.1 { (t, c) } else { acc });
    let mut bm = BatchMeans::new(n);
    for p in &proj {
        let inside = *p > best_t - delta && *p < best_t + delta;
        bm.push(if inside { 1.0 / delta } else { 0.0 });
    }
    Ok(bm.estimate())
}

/// Empirical `E[relu(<v_hat, x> + b)]`.
pub fn estimate_beta0(spec: &MarginalSpec, v_hat: &[f64], b: f64, n: usize, seed: u64) -> Result<Estimate> {
    check_unit(v_hat, spec.dim)?;
    let mut bm = BatchMeans::new(n);
    for_each_sample(spec, n, seed, |x| bm.push(relu(dot(v_hat, x) + b)));
    Ok(bm.estimate())
}

/// Minimum over equal-mass bins of `<u2, x>` (central 99% of its mass) of
/// the binned conditional mean of `relu(<u1, x>)` divided by its
/// unconditional mean.
pub fn estimate_beta5(
    spec: &MarginalSpec,
    u1: &[f64],
    u2: &[f64],
    n_bins: usize,
    n: usize,
    seed: u64,
) -> Result<Estimate> {
    const MIN_PER_BIN: usize = 100;
    check_unit(u1, spec.dim)?;
    check_unit(u2, spec.dim)?;
    let d12 = dot(u1, u2);
    if d12.abs() > 1e-10 {
        return Err(Error::NotOrthogonal { dot: d12 });
    }
    if n_bins == 0 {
        return Err(Error::InvalidParameter("n_bins must be positive".into()));
    }
    let mut pairs = Vec::with_capacity(n);
    for_each_sample(spec, n, seed, |x| pairs.push((dot(u2, x), relu(dot(u1, x)))));
    let overall = pairs.iter().map(|p| p.1).sum::<f64>() / n as f64;
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let lo = (0.005 * n as f64).floor() as usize;
    let hi = (0.995 * n as f64).ceil() as usize;
    let central = &pairs[lo..hi.min(n)];
    let mut worst: Option<Estimate> = None;
    for b in 0..n_bins {
        let start = b * central.len() / n_bins;
        let end = (b + 1) * central.len() / n_bins;
        let count = end - start;
        if count < MIN_PER_BIN {
            return Err(Error::InsufficientBinSamples {
                bin: b,
                count,
                min: MIN_PER_BIN,
            });
        }
        let mut r = Running::default();
        central[start..end].iter().for_each(|p| r.push(p.1));
        let e = r.estimate();
        let ratio = Estimate {
            value: e.value / overall,
            std_err: e.std_err / overall,
        };
        if worst.is_none_or(|w| ratio.value < w.value) {
            worst = Some(ratio);
        }
    }
    Ok(worst.expect("n_bins >= 1"))
}

/// Worst-case regularity constants observed for one marginal.
#[derive(Clone, Debug, PartialEq)]
pub struct RegularityReport {
    pub family: Family,
    pub dim: usize,
    pub n: usize,
    pub seed: u64,
    /// `min_u E[<u, x>^2]`, i.e. `1 / beta2'`.
    pub beta2_lo: Estimate,
    /// `max_u E[<u, x>^2]`.
    pub beta2_hi: Estimate,
    pub beta4: Estimate,
    pub beta3: Estimate,
    /// Interval half-width used for `beta3`.
    pub beta3_delta: f64,
    /// `(b, min_u E[relu(<u, x> + b)])`.
    pub beta0_curve: Vec<(f64, Estimate)>,
    /// `None` when `dim < 2` (no orthogonal pair exists).
    pub beta5: Option<Estimate>,
}

impl RegularityReport {
    /// `(constant_name, estimate)` rows, in a fixed order.
    pub fn entries(&self) -> Vec<(String, Estimate)> {
        let mut rows = vec![
            ("beta2_lo".to_string(), self.beta2_lo),
            ("beta2_hi".to_string(), self.beta2_hi),
            ("beta4".to_string(), self.beta4),
            (format!("beta3@delta={}", self.beta3_delta), self.beta3),
        ];
        for (b, e) in &self.beta0_curve {
            rows.push((format!("beta0@b={b}"), *e));
        }
        if let Some(b5) = self.beta5 {
            rows.push(("beta5".to_string(), b5));
        }
        rows
    }
}

/// Bias values at which `beta0` is reported.
pub const BETA0_BIASES: [f64; 4] = [0.0, 0.5, 1.0, 2.0];
/// Interval half-width for the `beta3` estimate.
pub const BETA3_DELTA: f64 = 0.05;
const BETA5_BINS: usize = 20;

fn random_unit(rng: &mut LabRng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut *rng)).collect();
        let n = dot(&v, &v).sqrt();
        if n > 1e-8 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn orthonormal_pair(rng: &mut LabRng, dim: usize) -> (Vec<f64>, Vec<f64>) {
    let u1 = random_unit(rng, dim);
    loop {
        let mut u2 = random_unit(rng, dim);
        let p = dot(&u1, &u2);
        for (a, b) in u2.iter_mut().zip(&u1) {
            *a -= p * b;
        }
        let n = dot(&u2, &u2).sqrt();
        if n > 1e-6 {
            u2.iter_mut().for_each(|x| *x /= n);
            // one more pass to push the residual inner product below 1e-15
            let p = dot(&u1, &u2);
            for (a, b) in u2.iter_mut().zip(&u1) {
                *a -= p * b;
            }
            let n = dot(&u2, &u2).sqrt();
            u2.iter_mut().for_each(|x| *x /= n);
            return (u1, u2);
        }
    }
}

fn axis(dim: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; dim];
    e[i] = 1.0;
    e
}

/// Runs every estimator over the coordinate axes plus `trials` random
/// directions (and, for `dim >= 2`, the first axis pair plus `trials` random
/// orthonormal pairs) and keeps the worst case of each constant.
pub fn regularity_report(spec: &MarginalSpec, trials: usize, n: usize, seed: u64) -> Result<RegularityReport> {
    let dim = spec.dim;
    let mut dir_rng = seed::rng(seed::derive_named(seed, "directions", &[]));
    let mut dirs: Vec<Vec<f64>> = (0..dim).map(|i| axis(dim, i)).collect();
    dirs.extend((0..trials).map(|_| random_unit(&mut dir_rng, dim)));

    let grid = uniform_grid(-3.0, 3.0, BETA3_DELTA / 2.0);
    let mut b2_lo: Option<Estimate> = None;
    let mut b2_hi: Option<Estimate> = None;
    let mut b4: Option<Estimate> = None;
    let mut b3: Option<Estimate> = None;
    let mut b0: Vec<Option<Estimate>> = vec![None; BETA0_BIASES.len()];
    let pick_min = |cur: Option<Estimate>, e: Estimate| match cur {
        Some(c) if c.value <= e.value => Some(c),
        _ => Some(e),
    };
    let pick_max = |cur: Option<Estimate>, e: Estimate| match cur {
        Some(c) if c.value >= e.value => Some(c),
        _ => Some(e),
    };

    for (i, u) in dirs.iter().enumerate() {
        let s = |what: &str, j: u64| seed::derive_named(seed, what, &[i as u64, j]);
        let m = estimate_directional_moments(spec, u, n, s("moments", 0))?;
        b2_lo = pick_min(b2_lo, m.m2);
        b2_hi = pick_max(b2_hi, m.m2);
        b4 = pick_max(b4, m.m4);
        let a = estimate_anticoncentration(spec, u, BETA3_DELTA, &grid, n, s("anticoncentration", 0))?;
        b3 = pick_max(b3, a);
        for (j, &b) in BETA0_BIASES.iter().enumerate() {
            let e = estimate_beta0(spec, u, b, n, s("beta0", j as u64))?;
            b0[j] = pick_min(b0[j], e);
        }
    }

    let beta5 = if dim >= 2 {
        let mut pairs = vec![(axis(dim, 0), axis(dim, 1))];
        pairs.extend((0..trials).map(|_| orthonormal_pair(&mut dir_rng, dim)));
        let mut worst: Option<Estimate> = None;
        for (i, (u1, u2)) in pairs.iter().enumerate() {
            let e = estimate_beta5(spec, u1, u2, BETA5_BINS, n, seed::derive_named(seed, "beta5", &[i as u64]))?;
            worst = pick_min(worst, e);
        }
        worst
    } else {
        None
    };

    Ok(RegularityReport {
        family: spec.family,
        dim,
        n,
        seed,
        beta2_lo: b2_lo.expect("at least one direction"),
        beta2_hi: b2_hi.expect("at least one direction"),
        beta4: b4.expect("at least one direction"),
        beta3: b3.expect("at least one direction"),
        beta3_delta: BETA3_DELTA,
        beta0_curve: BETA0_BIASES.iter().copied().zip(b0.into_iter().flatten()).collect(),
        beta5,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian;

    #[test]
    fn sampling_is_deterministic() {
        for fam in [Family::StandardGaussian, Family::uniform(), Family::laplace()] {
            let spec = MarginalSpec::new(fam, 3).unwrap();
            let a = sample_marginal(&spec, 50, 9);
            let b = sample_marginal(&spec, 50, 9);
            assert_eq!(a, b);
            assert_ne!(a, sample_marginal(&spec, 50, 10));
            let mut streamed = Vec::new();
            for_each_sample(&spec, 50, 9, |x| streamed.extend_from_slice(x));
            assert_eq!(streamed, a.data);
        }
    }

    #[test]
    fn gaussian_coordinate_means_near_zero() {
        let spec = MarginalSpec::gaussian(2);
        let s = sample_marginal(&spec, 1_000_000, 1);
        for j in 0..2 {
            let m = s.rows().map(|r| r[j]).sum::<f64>() / s.n as f64;
            assert!(m.abs() < 0.005, "coordinate {j} mean {m}");
        }
    }

    #[test]
    fn uniform_variance_is_one() {
        let spec = MarginalSpec::new(Family::uniform(), 1).unwrap();
        let s = sample_marginal(&spec, 1_000_000, 2);
        let mut r = Running::default();
        s.rows().for_each(|x| r.push(x[0]));
        assert!((0.99..=1.01).contains(&r.variance()), "{}", r.variance());
    }

    #[test]
    fn directional_moments_match_analytic_values() {
        let n = 1_000_000;
        let g = MarginalSpec::gaussian(3);
        let u = [0.6, 0.0, 0.8];
        let m = estimate_directional_moments(&g, &u, n, 3).unwrap();
        assert!((m.m2.value - 1.0).abs() < 0.01);
        assert!((m.m4.value - 3.0).abs() < 0.1);

        let l = MarginalSpec::new(Family::laplace(), 2).unwrap();
        let m = estimate_directional_moments(&l, &[1.0, 0.0], n, 4).unwrap();
        assert!((m.m2.value - 1.0).abs() < 0.01);
        assert!((m.m4.value - 6.0).abs() < 0.25, "{:?}", m.m4);

        let c = MarginalSpec::new(Family::uniform(), 2).unwrap();
        let m = estimate_directional_moments(&c, &[0.0, 1.0], n, 5).unwrap();
        assert!((m.m4.value - 1.8).abs() < 0.02);
    }

    #[test]
    fn non_unit_direction_rejected() {
        let g = MarginalSpec::gaussian(2);
        assert!(matches!(
            estimate_directional_moments(&g, &[1.0, 1.0], 10, 0),
            Err(Error::NonUnitDirection { .. })
        ));
    }

    #[test]
    fn anticoncentration_peaks() {
        let grid = uniform_grid(-3.0, 3.0, 0.025);
        let g = MarginalSpec::gaussian(2);
        let u = [std::f64::consts::FRAC_1_SQRT_2; 2];
        let a = estimate_anticoncentration(&g, &u, 0.05, &grid, 1_000_000, 6).unwrap();
        assert!((a.value - 2.0 * gaussian::pdf(0.0)).abs() < 0.03, "{a:?}");
        assert!(a.value <= 1.0 / 0.05);

        let c = MarginalSpec::new(Family::uniform(), 1).unwrap();
        let a = estimate_anticoncentration(&c, &[1.0], 0.05, &grid, 1_000_000, 7).unwrap();
        assert!((a.value - 1.0 / 3f64.sqrt()).abs() < 0.03, "{a:?}");
    }

    #[test]
    fn anticoncentration_nonincreasing_in_delta() {
        let g = MarginalSpec::gaussian(1);
        let vals: Vec<f64> = [0.01, 0.05, 0.2]
            .iter()
            .map(|&d| {
                let grid = uniform_grid(-3.0, 3.0, d / 2.0);
                estimate_anticoncentration(&g, &[1.0], d, &grid, 1_000_000, 8).unwrap().value
            })
            .collect();
        assert!(vals[0] >= vals[1] && vals[1] >= vals[2], "{vals:?}");
    }

    #[test]
    fn beta0_values() {
        let g = MarginalSpec::gaussian(2);
        let u = [0.0, 1.0];
        let e0 = estimate_beta0(&g, &u, 0.0, 1_000_000, 9).unwrap();
        assert!((e0.value - gaussian::INV_SQRT_2PI).abs() < 5.0 * e0.std_err.max(1e-3));
        let e1 = estimate_beta0(&g, &u, 1.0, 1_000_000, 10).unwrap();
        let exact = gaussian::cdf(1.0) + gaussian::pdf(1.0);
        assert!((exact - 1.0833).abs() < 1e-4);
        assert!((e1.value - exact).abs() < 0.005);
        let e20 = estimate_beta0(&g, &u, 20.0, 100_000, 11).unwrap();
        assert!((e20.value - 20.0).abs() < 0.02);
    }

    #[test]
    fn beta5_near_one_for_independent_pairs() {
        let g = MarginalSpec::gaussian(3);
        let e = estimate_beta5(&g, &[1.0, 0.0, 0.0], &[0.0, 0.6, 0.8], 20, 1_000_000, 12).unwrap();
        assert!((0.9..=1.1).contains(&e.value), "{e:?}");
        let c = MarginalSpec::new(Family::uniform(), 2).unwrap();
        let e = estimate_beta5(&c, &[1.0, 0.0], &[0.0, 1.0], 20, 1_000_000, 13).unwrap();
        assert!((0.9..=1.1).contains(&e.value), "{e:?}");
        let l = MarginalSpec::new(Family::laplace(), 2).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let e = estimate_beta5(&l, &[s, s], &[s, -s], 20, 200_000, 14).unwrap();
        assert!(e.value > 0.0);
    }

    #[test]
    fn beta5_errors() {
        let g = MarginalSpec::gaussian(2);
        assert!(matches!(
            estimate_beta5(&g, &[1.0, 0.0], &[0.6, 0.8], 20, 10_000, 0),
            Err(Error::NotOrthogonal { .. })
        ));
        assert!(matches!(
            estimate_beta5(&g, &[1.0, 0.0], &[0.0, 1.0], 20, 1_000, 0),
            Err(Error::InsufficientBinSamples { .. })
        ));
    }

    #[test]
    fn moment_estimates_rotation_invariant_for_gaussian() {
        let g = MarginalSpec::gaussian(4);
        let mut rng = seed::rng(77);
        let u1 = random_unit(&mut rng, 4);
        let u2 = random_unit(&mut rng, 4);
        let a = estimate_directional_moments(&g, &u1, 400_000, 1).unwrap();
        let b = estimate_directional_moments(&g, &u2, 400_000, 2).unwrap();
        let se = a.m4.std_err.hypot(b.m4.std_err);
        assert!((a.m4.value - b.m4.value).abs() < 6.0 * se);
        let se = a.m2.std_err.hypot(b.m2.std_err);
        assert!((a.m2.value - b.m2.value).abs() < 6.0 * se);
    }

    #[test]
    fn second_moment_within_five_se_of_one_for_every_family() {
        let mut rng = seed::rng(5);
        for fam in [Family::StandardGaussian, Family::uniform(), Family::laplace()] {
            let spec = MarginalSpec::new(fam, 3).unwrap();
            for k in 0..3 {
                let u = random_unit(&mut rng, 3);
                let m = estimate_directional_moments(&spec, &u, 200_000, 100 + k).unwrap();
                assert!((m.m2.value - 1.0).abs() < 5.0 * m.m2.std_err, "{fam}: {:?}", m.m2);
            }
        }
    }

    #[test]
    fn report_is_deterministic() {
        let spec = MarginalSpec::new(Family::laplace(), 2).unwrap();
        let a = regularity_report(&spec, 1, 20_000, 3).unwrap();
        let b = regularity_report(&spec, 1, 20_000, 3).unwrap();
        assert_eq!(a, b);
        assert!(a.beta2_lo.value <= a.beta2_hi.value);
        assert_eq!(a.beta0_curve.len(), 4);
        assert!(a.beta5.is_some());
        let one = regularity_report(&MarginalSpec::new(Family::uniform(), 1).unwrap(), 1, 20_000, 3).unwrap();
        assert!(one.beta5.is_none());
    }
}
