//! Random initialization: zero bias, uniformly random direction, half-normal
//! radius, optionally multiplied by a random power of two when the scale of
//! the teacher is unknown.

use std::fmt;
use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::csv_out::{fmt_f64, write_meta, write_row};
use crate::error::{Error, Result};
use crate::neuron::{dot, wv_distance, WeightVector};
use crate::oracles::{population_F0_gauss, population_F_gauss};
use crate::seed;
use crate::stats::wilson_interval;

/// Default success threshold: `F(w0) <= F(0) - delta |v_tilde|^2`.
pub const DEFAULT_DELTA: f64 = 0.01;
/// Default distance factor: `|w0 - v| <= c3 |v_tilde|`.
pub const DEFAULT_C3: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitSpec {
    /// Radius `|g| * scale` with `g ~ N(0, beta^2)`.
    KnownScale { scale: f64, beta: f64 },
    /// Radius `2^j |g|`, `j` uniform on `{-ceil(log2 m), ..., ceil(log2 m)}`.
    UnknownScale { m: f64, beta: f64 },
}

impl InitSpec {
    pub fn validate(&self) -> Result<()> {
        let (beta, ok) = match *self {
            InitSpec::KnownScale { scale, beta } => (beta, scale > 0.0 && scale.is_finite()),
            InitSpec::UnknownScale { m, beta } => (beta, m >= 1.0 && m.is_finite()),
        };
        if !ok || !(1.0..=2.0).contains(&beta) {
            return Err(Error::InvalidParameter(format!("invalid init spec {self}")));
        }
        Ok(())
    }

    /// `ceil(log2 m)` for the unknown-scale ladder, 0 otherwise.
    pub fn ladder_half_width(&self) -> i32 {
        match *self {
            InitSpec::KnownScale { .. } => 0,
            InitSpec::UnknownScale { m, .. } => m.log2().ceil() as i32,
        }
    }

    pub fn mode_name(&self) -> &'static str {
        match self {
            InitSpec::KnownScale { .. } => "known_scale",
            InitSpec::UnknownScale { .. } => "unknown_scale",
        }
    }
}

impl fmt::Display for InitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitSpec::KnownScale { scale, beta } => write!(f, "known_scale(scale={scale}; beta={beta})"),
            InitSpec::UnknownScale { m, beta } => write!(f, "unknown_scale(m={m}; beta={beta})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InitOutcome {
    pub w0: WeightVector,
    /// Radius factor; includes `2^j` in unknown-scale mode.
    pub rho: f64,
    pub j: Option<i32>,
}

/// One initializer draw; deterministic in `seed`.
pub fn draw_init(spec: &InitSpec, dim: usize, seed: u64) -> Result<InitOutcome> {
    spec.validate()?;
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be >= 1".into()));
    }
    let mut rng = seed::rng(seed);
    let dir = loop {
        let u: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let n = dot(&u, &u).sqrt();
        if n > 0.0 {
            break u.into_iter().map(|x| x / n).collect::<Vec<f64>>();
        }
    };
    let (beta, length_scale) = match *spec {
        InitSpec::KnownScale { scale, beta } => (beta, scale),
        InitSpec::UnknownScale { beta, .. } => (beta, 1.0),
    };
    let g: f64 = Normal::new(0.0, beta).expect("beta > 0").sample(&mut rng);
    let (rho, j) = match spec {
        InitSpec::KnownScale { .. } => (g.abs(), None),
        InitSpec::UnknownScale { .. } => {
            let half = spec.ladder_half_width();
            let j = rng.random_range(-half..=half);
            (2f64.powi(j) * g.abs(), Some(j))
        }
    };
    let w0 = WeightVector::new(dir.iter().map(|u| rho * length_scale * u).collect(), 0.0)?;
    Ok(InitOutcome { w0, rho, j })
}

/// Whether `w0` starts in the basin used by the convergence analysis
/// (standard Gaussian marginal).
pub fn init_success_check(w0: &WeightVector, v: &WeightVector, delta: f64, c3: f64) -> Result<bool> {
    let nv2 = v.w_tilde_norm_sq();
    let f = population_F_gauss(w0, v)?;
    let f0 = population_F0_gauss(v);
    Ok(f <= f0 - delta * nv2 && wv_distance(w0, v)? <= c3 * nv2.sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitRate {
    pub successes: u64,
    pub trials: u64,
    pub rate: f64,
    /// Wilson 95% interval.
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// Fraction of `trials` independent draws passing [`init_success_check`].
pub fn estimate_init_success_rate(
    spec: &InitSpec,
    v: &WeightVector,
    delta: f64,
    c3: f64,
    trials: usize,
    seed: u64,
) -> Result<InitRate> {
    if trials < 100 {
        return Err(Error::InvalidParameter(format!("need at least 100 trials, got {trials}")));
    }
    let mut successes = 0u64;
    for i in 0..trials {
        let o = draw_init(spec, v.dim(), seed::derive(seed, &[i as u64]))?;
        if init_success_check(&o.w0, v, delta, c3)? {
            successes += 1;
        }
    }
    let (ci_lo, ci_hi) = wilson_interval(successes, trials as u64);
    Ok(InitRate {
        successes,
        trials: trials as u64,
        rate: successes as f64 / trials as f64,
        ci_lo,
        ci_hi,
    })
}

/// One row of an initialization study.
#[derive(Clone, Debug, PartialEq)]
pub struct InitStudyRow {
    pub spec: InitSpec,
    pub dim: usize,
    pub b_v: f64,
    pub delta: f64,
    pub c3: f64,
    pub rate: InitRate,
    pub seed: u64,
    /// Unknown-scale rate divided by the matching known-scale rate.
    pub ratio_to_known: Option<f64>,
}

pub const INIT_CSV_COLUMNS: [&str; 12] = [
    "mode", "d", "b_v", "m", "delta", "c3", "trials", "rate", "ci_lo", "ci_hi", "seed", "ratio_to_known",
];

pub fn write_init_csv<W: Write>(out: &mut W, meta: &[(&str, String)], rows: &[InitStudyRow]) -> std::io::Result<()> {
    write_meta(out, meta)?;
    write_row(out, &INIT_CSV_COLUMNS)?;
    for r in rows {
        let m = match r.spec {
            InitSpec::UnknownScale { m, .. } => fmt_f64(m),
            InitSpec::KnownScale { .. } => String::new(),
        };
        write_row(
            out,
            &[
                r.spec.mode_name().to_string(),
                r.dim.to_string(),
                fmt_f64(r.b_v),
                m,
                fmt_f64(r.delta),
                fmt_f64(r.c3),
                r.rate.trials.to_string(),
                fmt_f64(r.rate.rate),
                fmt_f64(r.rate.ci_lo),
                fmt_f64(r.rate.ci_hi),
                r.seed.to_string(),
                r.ratio_to_known.map(fmt_f64).unwrap_or_default(),
            ],
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian;
    use crate::stats::{ks_distance, Running};

    const KNOWN: InitSpec = InitSpec::KnownScale { scale: 1.0, beta: 1.0 };

    #[test]
    fn bias_is_zero_and_radius_matches() {
        for i in 0..200 {
            let o = draw_init(&KNOWN, 4, i).unwrap();
            assert_eq!(o.w0.bias(), 0.0);
            assert!((o.w0.w_tilde_norm() - o.rho).abs() < 1e-12);
            let u = InitSpec::UnknownScale { m: 8.0, beta: 1.5 };
            let o = draw_init(&u, 4, i).unwrap();
            assert_eq!(o.w0.bias(), 0.0);
            assert!((o.w0.w_tilde_norm() - o.rho).abs() < 1e-12 * o.rho.max(1.0));
            assert!(o.j.unwrap().abs() <= 3);
        }
        assert_eq!(draw_init(&KNOWN, 3, 5).unwrap(), draw_init(&KNOWN, 3, 5).unwrap());
    }

    #[test]
    fn mean_radius_is_half_normal_mean() {
        let n = 100_000;
        let mut r = Running::default();
        for i in 0..n {
            r.push(draw_init(&KNOWN, 3, seed::derive(1, &[i])).unwrap().w0.w_tilde_norm());
        }
        let e = r.estimate();
        let expect = (2.0 / std::f64::consts::PI).sqrt();
        assert!((e.value - expect).abs() < 4.0 * e.std_err, "{e:?}");
    }

    #[test]
    fn radius_law_ks() {
        let beta = 1.7;
        let spec = InitSpec::KnownScale { scale: 1.0, beta };
        let mut rhos: Vec<f64> = (0..100_000u64)
            .map(|i| draw_init(&spec, 2, seed::derive(2, &[i])).unwrap().rho)
            .collect();
        let ks = ks_distance(&mut rhos, |x| 2.0 * gaussian::cdf(x / beta) - 1.0);
        assert!(ks <= 0.01, "{ks}");
    }

    #[test]
    fn directions_are_spherically_symmetric() {
        let n = 100_000;
        let mut mean = [0.0; 3];
        for i in 0..n {
            let w = draw_init(&KNOWN, 3, seed::derive(3, &[i])).unwrap().w0;
            let norm = w.w_tilde_norm();
            for (m, x) in mean.iter_mut().zip(w.w_tilde()) {
                *m += x / norm / n as f64;
            }
        }
        assert!(dot(&mean, &mean).sqrt() <= 0.02);
    }

    #[test]
    fn ladder_index_is_uniform() {
        let spec = InitSpec::UnknownScale { m: 1024.0, beta: 1.0 };
        assert_eq!(spec.ladder_half_width(), 10);
        let n = 42_000;
        let mut counts = [0usize; 21];
        for i in 0..n {
            let j = draw_init(&spec, 2, seed::derive(4, &[i])).unwrap().j.unwrap();
            counts[(j + 10) as usize] += 1;
        }
        let expected = n as f64 / 21.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // 99th percentile of chi-square with 20 degrees of freedom
        assert!(chi2 < 37.566, "{chi2}");
    }

    #[test]
    fn success_check_examples() {
        let v = WeightVector::axis(2, 0, 1.0, 0.0);
        assert!(init_success_check(&v, &v, 0.01, 0.0).unwrap());
        assert!(!init_success_check(&v.scaled(-1.0), &v, 0.01, 5.0).unwrap());
        let tiny = WeightVector::axis(2, 0, 1e-6, 0.0);
        assert!(!init_success_check(&tiny, &v, 0.01, 5.0).unwrap());
    }

    #[test]
    fn success_rate_examples() {
        let v = WeightVector::axis(3, 0, 1.0, 0.0);
        let r = estimate_init_success_rate(&KNOWN, &v, 0.01, 5.0, 2000, 7).unwrap();
        assert!(r.rate >= 0.02 && r.ci_lo <= r.rate && r.rate <= r.ci_hi);
        let tighter = estimate_init_success_rate(&KNOWN, &v, 0.05, 5.0, 2000, 7).unwrap();
        assert!(tighter.rate <= r.rate);
        let impossible = estimate_init_success_rate(&KNOWN, &v, 0.3, 5.0, 200, 7).unwrap();
        assert_eq!(impossible.rate, 0.0);
        assert!(estimate_init_success_rate(&KNOWN, &v, 0.01, 5.0, 99, 7).is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(InitSpec::KnownScale { scale: 1.0, beta: 2.5 }.validate().is_err());
        assert!(InitSpec::UnknownScale { m: 0.5, beta: 1.0 }.validate().is_err());
        assert!(draw_init(&KNOWN, 0, 1).is_err());
    }
}
