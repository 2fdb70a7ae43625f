//! Univariate and bivariate normal primitives.
//!
//! The bivariate upper-orthant routine follows Genz's BVND (a refinement of
//! the Drezner–Wesolowsky method): Gauss–Legendre quadrature of the
//! Plackett identity for `|r| < 0.925` and an asymptotic expansion plus
//! quadrature of the remainder otherwise. Absolute accuracy is about 1e-15.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// `1 / sqrt(2 pi)`.
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const TWO_PI: f64 = 2.0 * PI;

/// Standard normal density.
#[inline]
pub fn pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal CDF, accurate in both tails.
#[inline]
pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// `E[relu(m + s Z)]` for `Z ~ N(0, 1)`, `s >= 0`.
#[inline]
pub fn relu_mean(m: f64, s: f64) -> f64 {
    if s > 0.0 {
        let t = m / s;
        m * cdf(t) + s * pdf(t)
    } else {
        m.max(0.0)
    }
}

/// `E[relu(m + s Z)^2]` for `Z ~ N(0, 1)`, `s >= 0`.
#[inline]
pub fn relu_second_moment(m: f64, s: f64) -> f64 {
    if s > 0.0 {
        let t = m / s;
        (m * m + s * s) * cdf(t) + m * s * pdf(t)
    } else {
        let r = m.max(0.0);
        r * r
    }
}

/// Gauss–Legendre half-rules on [-1, 1] as `(weight, negative node)` pairs.
const GL6: [(f64, f64); 3] = [
    (0.171_324_492_379_170_5, -0.932_469_514_203_152_2),
    (0.360_761_573_048_138_4, -0.661_209_386_466_264_7),
    (0.467_913_934_572_690_4, -0.238_619_186_083_197_0),
];

const GL12: [(f64, f64); 6] = [
    (0.047_175_336_386_511_77, -0.981_560_634_246_719_1),
    (0.106_939_325_995_318_3, -0.904_117_256_370_475_0),
    (0.160_078_328_543_346_4, -0.769_902_674_194_305_0),
    (0.203_167_426_723_065_9, -0.587_317_954_286_617_1),
    (0.233_492_536_538_354_7, -0.367_831_498_998_180_2),
    (0.249_147_045_813_402_9, -0.125_233_408_511_469_2),
];

const GL20: [(f64, f64); 10] = [
    (0.017_614_007_139_152_12, -0.993_128_599_185_094_9),
    (0.040_601_429_800_386_94, -0.963_971_927_277_913_8),
    (0.062_672_048_334_109_06, -0.912_234_428_251_325_9),
    (0.083_276_741_576_704_75, -0.839_116_971_822_218_8),
    (0.101_930_119_817_240_4, -0.746_331_906_460_150_8),
    (0.118_194_531_961_518_4, -0.636_053_680_726_515_0),
    (0.131_688_638_449_176_6, -0.510_867_001_950_827_1),
    (0.142_096_109_318_382_1, -0.373_706_088_715_419_6),
    (0.149_172_986_472_603_7, -0.227_785_851_141_645_1),
    (0.152_753_387_130_725_9, -0.076_526_521_133_497_33),
];

/// `P(X > h, Y > k)` for a standard bivariate normal with correlation `r`.
pub fn bvn_upper(h: f64, k: f64, r: f64) -> f64 {
    if h == f64::INFINITY || k == f64::INFINITY {
        return 0.0;
    }
    if h == f64::NEG_INFINITY {
        return cdf(-k);
    }
    if k == f64::NEG_INFINITY {
        return cdf(-h);
    }
    let r = r.clamp(-1.0, 1.0);
    let rule: &[(f64, f64)] = if r.abs() < 0.3 {
        &GL6
    } else if r.abs() < 0.75 {
        &GL12
    } else {
        &GL20
    };

    if r.abs() < 0.925 {
        let mut bvn = 0.0;
        if r != 0.0 {
            let hk = h * k;
            let hs = 0.5 * (h * h + k * k);
            let asr = r.asin();
            for &(w, x) in rule {
                for sign in [-1.0, 1.0] {
                    let sn = (0.5 * asr * (sign * x + 1.0)).sin();
                    bvn += w * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
                }
            }
            bvn *= asr / (2.0 * TWO_PI);
        }
        return bvn + cdf(-h) * cdf(-k);
    }

    // |r| >= 0.925: reflect k for negative r, P(X > h, Y > k; r) =
    // P(X > h) - P(X > h, -Y > -k; -r).
    let k = if r < 0.0 { -k } else { k };
    let hk = h * k;
    let mut bvn = 0.0;
    if r.abs() < 1.0 {
        let a_s = (1.0 - r) * (1.0 + r);
        let mut a = a_s.sqrt();
        let b_s = (h - k) * (h - k);
        let c = (4.0 - hk) / 8.0;
        let d = (12.0 - hk) / 16.0;
        let asr = -0.5 * (b_s / a_s + hk);
        if asr > -100.0 {
            bvn = a
                * asr.exp()
                * (1.0 - c * (b_s - a_s) * (1.0 - d * b_s / 5.0) / 3.0 + c * d * a_s * a_s / 5.0);
        }
        if -hk < 100.0 {
            let b = b_s.sqrt();
            bvn -= (-0.5 * hk).exp()
                * TWO_PI.sqrt()
                * cdf(-b / a)
                * b
                * (1.0 - c * b_s * (1.0 - d * b_s / 5.0) / 3.0);
        }
        a *= 0.5;
        for &(w, x) in rule {
            for sign in [-1.0, 1.0] {
                let xn = a * (sign * x + 1.0);
                let xs = xn * xn;
                let rs = (1.0 - xs).sqrt();
                let asr = -0.5 * (b_s / xs + hk);
                if asr > -100.0 {
                    bvn += a
                        * w
                        * asr.exp()
                        * ((-hk * (1.0 - rs) / (2.0 * (1.0 + rs))).exp() / rs
                            - (1.0 + c * xs * (1.0 + d * xs)));
                }
            }
        }
        bvn = -bvn / TWO_PI;
    }
    if r > 0.0 {
        bvn += cdf(-h.max(k));
    } else {
        bvn = -bvn;
        if k > h {
            if h < 0.0 {
                bvn += cdf(k) - cdf(h);
            } else {
                bvn += cdf(-h) - cdf(-k);
            }
        }
    }
    bvn.clamp(0.0, 1.0)
}

/// `P(X <= h, Y <= k)` for a standard bivariate normal with correlation `r`.
pub fn bvn_cdf(h: f64, k: f64, r: f64) -> f64 {
    bvn_upper(-h, -k, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate_segments, GaussLegendre};

    /// `P(X > h, Y > k) = int_h^inf pdf(x) P(Y > k | X = x) dx`, by
    /// composite Gauss–Legendre on a truncated range.
    fn bvn_upper_by_quadrature(h: f64, k: f64, r: f64) -> f64 {
        let rule = GaussLegendre::new(40);
        let s = (1.0 - r * r).sqrt();
        let lo = h.max(-40.0);
        if lo >= 40.0 {
            return 0.0;
        }
        // Uniform grid plus points graded towards the conditional kink at k / r.
        let mut breaks = vec![lo];
        let mut x = lo;
        while x < 40.0 {
            x = (x + 0.5).min(40.0);
            breaks.push(x);
        }
        let kink = k / r;
        let mut w = s;
        while w < 1.0 {
            breaks.extend([kink - w, kink + w]);
            w *= 2.0;
        }
        breaks.push(kink);
        breaks.retain(|b| *b >= lo && *b <= 40.0);
        breaks.sort_by(|a, b| a.total_cmp(b));
        integrate_segments(&rule, &breaks, |x| pdf(x) * cdf((r * x - k) / s))
    }

    #[test]
    fn cdf_reference_values() {
        assert!((cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-15);
        assert!((cdf(-5.0) - 2.866_515_718_791_939e-7).abs() < 1e-20);
        assert!((pdf(0.0) - INV_SQRT_2PI).abs() < 1e-17);
    }

    #[test]
    fn relu_moments_standard() {
        assert!((relu_mean(0.0, 1.0) - INV_SQRT_2PI).abs() < 1e-15);
        assert!((relu_second_moment(0.0, 1.0) - 0.5).abs() < 1e-15);
        assert!((relu_mean(1.0, 1.0) - (cdf(1.0) + pdf(1.0))).abs() < 1e-15);
        assert_eq!(relu_mean(-2.0, 0.0), 0.0);
        assert_eq!(relu_second_moment(3.0, 0.0), 9.0);
    }

    #[test]
    fn independent_case_factorizes() {
        for (h, k) in [(0.0, 0.0), (1.0, -0.5), (-2.0, 3.0)] {
            assert!((bvn_upper(h, k, 0.0) - cdf(-h) * cdf(-k)).abs() < 1e-16);
        }
    }

    #[test]
    fn zero_threshold_orthant_formula() {
        for r in [-0.999f64, -0.95, -0.9, -0.5, -0.1, 0.2, 0.5, 0.8, 0.93, 0.99, 0.999_999] {
            let expected = 0.25 + r.asin() / TWO_PI;
            let got = bvn_upper(0.0, 0.0, r);
            assert!((got - expected).abs() < 1e-14, "r = {r}: {got} vs {expected}");
        }
        assert!((bvn_upper(0.0, 0.0, 0.5) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_correlations() {
        assert!((bvn_upper(0.3, -0.2, 1.0) - cdf(-0.3)).abs() < 1e-16);
        assert!((bvn_upper(-1.0, -0.5, -1.0) - (cdf(0.5) - cdf(-1.0))).abs() < 1e-15);
        assert_eq!(bvn_upper(1.0, 0.5, -1.0), 0.0);
    }

    #[test]
    fn agrees_with_conditional_quadrature() {
        let hs = [-3.0, -1.3, -0.2, 0.0, 0.7, 1.9, 3.5];
        let rs = [
            -0.9999, -0.99, -0.93, -0.92, -0.7, -0.4, -0.05, 0.05, 0.3, 0.6, 0.8, 0.926, 0.97,
            0.999,
        ];
        for &h in &hs {
            for &k in &hs {
                for &r in &rs {
                    let a = bvn_upper(h, k, r);
                    let b = bvn_upper_by_quadrature(h, k, r);
                    assert!((a - b).abs() < 1e-13, "h={h} k={k} r={r}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn reflection_identity() {
        for &(h, k, r) in &[(0.4, -1.1, 0.95), (-0.7, 0.2, -0.97), (1.5, 1.0, 0.3)] {
            let lhs = bvn_upper(h, k, r) + bvn_upper(h, -k, -r);
            assert!((lhs - cdf(-h)).abs() < 1e-14);
        }
    }
}
