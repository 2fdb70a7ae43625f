//! Exact population quantities for a standard Gaussian marginal.
//!
//! Everything depends on `x_tilde` only through `Z1 = w_hat . x_tilde` and
//! `Z2 = e2 . x_tilde`, where `e2` completes `w_hat` to an orthonormal basis
//! of `span(w_tilde, v_tilde)`. Writing `A = s_w Z1 + b_w` and
//! `B = beta1 Z1 + beta2 Z2 + b_v`, Stein's identity turns every expectation
//! into normal CDF/PDF values and one bivariate orthant probability.
//!
//! A second, independent route integrates over `Z1` numerically with the
//! inner `Z2` expectation in closed form. It shares no formulas with the
//! first and serves as its cross-check.

use crate::gaussian::{bvn_upper, cdf, pdf, relu_mean, relu_second_moment};
use crate::neuron::{dot, relu, WeightVector};
use crate::quadrature::{integrate_segments, GaussLegendre};

/// Below this `beta2 / |v_tilde|` the pair is treated as collinear.
const COLLINEAR_TOL: f64 = 1e-7;
/// Truncation of the `Z1` range in the quadrature route.
const Z_RANGE: f64 = 12.0;
/// Longest segment used by the quadrature route.
const MAX_SEGMENT: f64 = 2.0;

/// Default Gauss–Legendre order per segment of the quadrature route.
pub const DEFAULT_NODES: usize = 80;

/// Second-order geometry of `(w, v)` that determines every Gaussian
/// expectation of `relu(w . x)` and `relu(v . x)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianPairGeometry {
    /// `|w_tilde|^2`.
    pub nw2: f64,
    /// `|v_tilde|^2`.
    pub nv2: f64,
    /// `<w_tilde, v_tilde>`.
    pub wv: f64,
    pub bw: f64,
    pub bv: f64,
    /// `|v_tilde - proj_{w_tilde} v_tilde|^2`, computed directly from the
    /// vectors to avoid cancellation when they are nearly parallel.
    pub perp2: f64,
}

impl GaussianPairGeometry {
    pub fn new(w: &WeightVector, v: &WeightVector) -> Self {
        let (a, b) = (w.w_tilde(), v.w_tilde());
        let nw2 = dot(a, a);
        let nv2 = dot(b, b);
        let wv = dot(a, b);
        let perp2 = if nw2 > 0.0 {
            let c = wv / nw2;
            a.iter().zip(b).map(|(x, y)| (y - c * x) * (y - c * x)).sum()
        } else {
            nv2
        };
        Self {
            nw2,
            nv2,
            wv,
            bw: w.bias(),
            bv: v.bias(),
            perp2,
        }
    }

    /// Geometry from the Gram entries alone.
    pub fn from_gram(nw2: f64, nv2: f64, wv: f64, bw: f64, bv: f64) -> Self {
        let perp2 = if nw2 > 0.0 { (nv2 - wv * wv / nw2).max(0.0) } else { nv2 };
        Self {
            nw2,
            nv2,
            wv,
            bw,
            bv,
            perp2,
        }
    }

    /// `|wv| <= sqrt(nw2 nv2) + 1e-12`.
    pub fn is_psd(&self) -> bool {
        self.nw2 >= 0.0 && self.nv2 >= 0.0 && self.wv.abs() <= (self.nw2 * self.nv2).sqrt() + 1e-12
    }

    /// Correlation of `w_tilde . x_tilde` and `v_tilde . x_tilde` (0 if either vanishes).
    pub fn correlation(&self) -> f64 {
        let d = (self.nw2 * self.nv2).sqrt();
        if d > 0.0 {
            (self.wv / d).clamp(-1.0, 1.0)
        } else {
            0.0
        }
    }
}

/// `F`, its gradient and the joint orthant probability at one pair. The
/// `x_tilde` part of the gradient is `c_w w_tilde + c_v v_tilde`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairValues {
    pub f: f64,
    pub c_w: f64,
    pub c_v: f64,
    pub grad_bias: f64,
    pub orthant: f64,
}

impl PairValues {
    /// Assembles the full `(d + 1)`-dimensional gradient.
    pub fn gradient(&self, w: &WeightVector, v: &WeightVector) -> WeightVector {
        let mut g = w.scaled(self.c_w);
        g.add_scaled(self.c_v, v);
        g.set_bias(self.grad_bias);
        g
    }
}

/// `P(Z >= t)` for a point mass at `m` (`s = 0`) or `N(m, s^2)`.
fn prob_nonneg(m: f64, s: f64) -> f64 {
    if s > 0.0 {
        cdf(m / s)
    } else if m >= 0.0 {
        1.0
    } else {
        0.0
    }
}

/// `x * pdf(x)`, zero at infinity.
fn xpdf(x: f64) -> f64 {
    if x.is_finite() {
        x * pdf(x)
    } else {
        0.0
    }
}

fn pdf_inf(x: f64) -> f64 {
    if x.is_finite() {
        pdf(x)
    } else {
        0.0
    }
}

fn cdf_inf(x: f64) -> f64 {
    if x == f64::INFINITY {
        1.0
    } else if x == f64::NEG_INFINITY {
        0.0
    } else {
        cdf(x)
    }
}

/// Closed-form evaluation.
pub fn closed_form(g: &GaussianPairGeometry) -> PairValues {
    let s_v = g.nv2.sqrt();
    let (bw, bv) = (g.bw, g.bv);
    let e_b = relu_mean(bv, s_v);
    let e_b2 = relu_second_moment(bv, s_v);
    let s_w = g.nw2.sqrt();
    let k = if s_w > 0.0 { bw / s_w } else { f64::NAN };

    if !k.is_finite() {
        // w_tilde = 0 (or numerically so): the neuron is the constant relu(b_w).
        let a = relu(bw);
        let f = 0.5 * a * a + 0.5 * e_b2 - a * e_b;
        return if bw >= 0.0 {
            PairValues {
                f,
                c_w: 0.0,
                c_v: -prob_nonneg(bv, s_v),
                grad_bias: bw - e_b,
                orthant: prob_nonneg(bv, s_v),
            }
        } else {
            PairValues {
                f,
                c_w: 0.0,
                c_v: 0.0,
                grad_bias: 0.0,
                orthant: 0.0,
            }
        };
    }

    let (phi_k, cdf_k) = (pdf(k), cdf(k));
    let e_a = relu_mean(bw, s_w);
    let e_a2 = relu_second_moment(bw, s_w);
    let beta1 = g.wv / s_w;
    let beta2 = g.perp2.sqrt();
    // m: mean of B given Z1 = -k; cond: E[relu(B) | Z1 = -k].
    let m = bv - beta1 * k;
    let cond = relu_mean(m, beta2);

    // p: P(A >= 0, B >= 0); g0: E[relu(B) 1{A >= 0}]; ez1: E[Z1 relu(B) 1{A >= 0}].
    let (p, g0, ez1) = if s_v == 0.0 {
        let rb = relu(bv);
        (if bv >= 0.0 { cdf_k } else { 0.0 }, rb * cdf_k, rb * phi_k)
    } else if beta2 <= COLLINEAR_TOL * s_v {
        // B = beta1 Z1 + b_v; both events are half-lines in Z1.
        let cut = -bv / beta1;
        let (lo, hi) = if beta1 > 0.0 {
            ((-k).max(cut), f64::INFINITY)
        } else {
            (-k, cut)
        };
        if hi <= lo {
            (0.0, 0.0, 0.0)
        } else {
            let p = cdf_inf(-lo) - cdf_inf(-hi);
            let e1 = pdf_inf(lo) - pdf_inf(hi);
            let e2 = p + xpdf(lo) - xpdf(hi);
            (p, bv * p + beta1 * e1, beta1 * e2 + bv * e1)
        }
    } else {
        let rho = (beta1 / s_v).clamp(-1.0, 1.0);
        let p = bvn_upper(-k, -bv / s_v, rho);
        // Density of B at 0 times P(A >= 0 | B = 0).
        let mu = -beta1 * bv / g.nv2;
        let sd = beta2 / s_v;
        let at_kink = pdf(bv / s_v) / s_v * cdf((k + mu) / sd);
        let g0 = bv * p + beta1 * phi_k * cdf(m / beta2) + g.nv2 * at_kink;
        (p, g0, beta1 * p + phi_k * cond)
    };

    let cross = s_w * ez1 + bw * g0;
    PairValues {
        f: (0.5 * e_a2 + 0.5 * e_b2 - cross).max(0.0),
        c_w: cdf_k - phi_k * cond / s_w,
        c_v: -p,
        grad_bias: e_a - g0,
        orthant: p,
    }
}

fn push_graded(breaks: &mut Vec<f64>, centre: f64, width: f64) {
    breaks.push(centre);
    if width > 0.0 {
        let mut h = width;
        while h < 2.0 * Z_RANGE {
            breaks.push(centre - h);
            breaks.push(centre + h);
            h *= 2.0;
        }
    }
}

/// Sorted breakpoints on `[-Z_RANGE, Z_RANGE]`, with segments no longer
/// than `MAX_SEGMENT`.
fn breakpoints(extra: &[f64], graded: Option<(f64, f64)>) -> Vec<f64> {
    let mut raw = vec![-Z_RANGE, Z_RANGE];
    raw.extend_from_slice(extra);
    if let Some((c, w)) = graded {
        push_graded(&mut raw, c, w);
    }
    let mut raw: Vec<f64> = raw
        .into_iter()
        .filter(|x| x.is_finite())
        .map(|x| x.clamp(-Z_RANGE, Z_RANGE))
        .collect();
    raw.sort_by(|a, b| a.total_cmp(b));
    raw.dedup();
    let mut out = vec![raw[0]];
    for pair in raw.windows(2) {
        let len = pair[1] - pair[0];
        let pieces = (len / MAX_SEGMENT).ceil().max(1.0) as usize;
        for i in 1..=pieces {
            out.push(pair[0] + len * i as f64 / pieces as f64);
        }
    }
    out
}

/// Quadrature evaluation with `nodes` Gauss–Legendre points per segment.
pub fn quadrature(g: &GaussianPairGeometry, nodes: usize) -> PairValues {
    let rule = GaussLegendre::cached(nodes);
    let s_v = g.nv2.sqrt();
    let (bw, bv) = (g.bw, g.bv);
    // Basis: w_hat when w_tilde != 0, else v_hat.
    let (s_w, beta1, beta2) = if g.nw2 > 0.0 {
        let s_w = g.nw2.sqrt();
        (s_w, g.wv / s_w, g.perp2.sqrt())
    } else {
        (0.0, s_v, 0.0)
    };
    let active = |z: f64| s_w * z + bw >= 0.0;
    let a_of = |z: f64| relu(s_w * z + bw);
    let m_of = |z: f64| bv + beta1 * z;

    let mut extra = Vec::new();
    if s_w > 0.0 {
        extra.push(-bw / s_w);
    }
    let graded = (beta1 != 0.0).then(|| (-bv / beta1, beta2 / beta1.abs()));
    let breaks = breakpoints(&extra, graded);
    let integrate = |f: &dyn Fn(f64) -> f64| integrate_segments(&rule, &breaks, |z| f(z) * pdf(z));

    let f = integrate(&|z| {
        let a = a_of(z);
        let m = m_of(z);
        0.5 * a * a - a * relu_mean(m, beta2) + 0.5 * relu_second_moment(m, beta2)
    });
    let h = |z: f64| {
        if active(z) {
            a_of(z) - relu_mean(m_of(z), beta2)
        } else {
            0.0
        }
    };
    let grad_bias = integrate(&h);
    let h_z1 = integrate(&|z| z * h(z));
    let orthant = integrate(&|z| if active(z) { prob_nonneg(m_of(z), beta2) } else { 0.0 });

    // x_tilde gradient = h_z1 w_hat + E[h Z2] e2, and E[h Z2] = -beta2 * orthant.
    let (c_w, c_v) = if s_w > 0.0 {
        ((h_z1 + beta1 * orthant) / s_w, -orthant)
    } else if s_v > 0.0 {
        (0.0, h_z1 / s_v)
    } else {
        (0.0, 0.0)
    };
    PairValues {
        f,
        c_w,
        c_v,
        grad_bias,
        orthant,
    }
}

/// `F(0) = E[relu(v . x)^2] / 2`.
pub fn f_at_zero(v: &WeightVector) -> f64 {
    0.5 * relu_second_moment(v.bias(), v.w_tilde_norm())
}
