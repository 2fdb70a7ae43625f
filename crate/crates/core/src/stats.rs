//! Small statistics helpers shared by the estimators.

/// A Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_err: f64,
}

impl Estimate {
    /// 95% half-width for a batch-means estimate over [`BATCHES`] batches.
    pub fn ci_halfwidth(&self) -> f64 {
        T975_9DOF * self.std_err
    }
}

/// Number of batches used by [`BatchMeans`].
pub const BATCHES: usize = 10;

/// Student-t 0.975 quantile with 9 degrees of freedom.
pub const T975_9DOF: f64 = 2.262_157_162_740_991;

/// Streaming mean and variance (Welford).
#[derive(Clone, Copy, Debug, Default)]
pub struct Running {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Running {
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    /// Mean with the i.i.d. standard error `sd / sqrt(n)`.
    pub fn estimate(&self) -> Estimate {
        Estimate {
            value: self.mean,
            std_err: (self.variance() / self.n.max(1) as f64).sqrt(),
        }
    }
}

/// Batch-means accumulator: `n` values split into [`BATCHES`] contiguous
/// batches of (nearly) equal size.
#[derive(Clone, Debug)]
pub struct BatchMeans {
    total: usize,
    seen: usize,
    sums: [f64; BATCHES],
    counts: [usize; BATCHES],
}

impl BatchMeans {
    pub fn new(total: usize) -> Self {
        Self {
            total: total.max(1),
            seen: 0,
            sums: [0.0; BATCHES],
            counts: [0; BATCHES],
        }
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        let b = (self.seen * BATCHES / self.total).min(BATCHES - 1);
        self.sums[b] += x;
        self.counts[b] += 1;
        self.seen += 1;
    }

    pub fn estimate(&self) -> Estimate {
        let means: Vec<f64> = self
            .sums
            .iter()
            .zip(&self.counts)
            .filter(|(_, &c)| c > 0)
            .map(|(s, &c)| s / c as f64)
            .collect();
        let n: usize = self.counts.iter().sum();
        let value = self.sums.iter().sum::<f64>() / n.max(1) as f64;
        let k = means.len();
        let std_err = if k < 2 {
            f64::NAN
        } else {
            let m = means.iter().sum::<f64>() / k as f64;
            let var = means.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (k - 1) as f64;
            (var / k as f64).sqrt()
        };
        Estimate { value, std_err }
    }
}

/// Wilson score interval at 95% for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    if successes == 0 {
        return (0.0, 1.0 - (1.0 / (1.0 + 1.959_963_984_540_054f64.powi(2) / trials as f64)));
    }
    let z = 1.959_963_984_540_054;
    let n = trials as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Ordinary least squares `y = a + b x`; returns `(slope, slope_std_err)`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let se = if xs.len() > 2 {
        let rss: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| {
                let r = y - intercept - slope * x;
                r * r
            })
            .sum();
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    (slope, se)
}

pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty slice");
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Kolmogorov–Smirnov distance between the empirical CDF of `samples` and `cdf`.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &mut [f64], cdf: F) -> f64 {
    samples.sort_by(|a, b| a.total_cmp(b));
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn running_matches_two_pass() {
        let xs = [1.0, 4.0, -2.0, 7.5, 3.25];
        let mut r = Running::default();
        xs.iter().for_each(|&x| r.push(x));
        let m = xs.iter().sum::<f64>() / 5.0;
        let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / 4.0;
        assert!((r.mean() - m).abs() < 1e-15);
        assert!((r.variance() - v).abs() < 1e-13);
    }

    #[test]
    fn batch_means_on_constant_batches() {
        let mut b = BatchMeans::new(100);
        for i in 0..100 {
            b.push((i / 10) as f64);
        }
        let e = b.estimate();
        assert!((e.value - 4.5).abs() < 1e-15);
        // batch means 0..9: sd = sqrt(55/6)
        assert!((e.std_err - (55.0f64 / 6.0 / 10.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn wilson_brackets_proportion() {
        let (lo, hi) = wilson_interval(30, 100);
        assert!(lo < 0.3 && hi > 0.3);
        assert!((lo - 0.2189).abs() < 1e-3 && (hi - 0.3958).abs() < 1e-3);
        assert_eq!(wilson_interval(0, 100).0, 0.0);
    }

    #[test]
    fn ols_recovers_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 0.5 * x).collect();
        let (s, se) = ols_slope(&xs, &ys);
        assert!((s + 0.5).abs() < 1e-14);
        assert!(se < 1e-12);
    }

    #[test]
    fn median_even_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
