//! Problem instances: a marginal, a teacher `v`, a label model whose OPT is
//! either exactly known or upper-bounded by `L(v)`, and dataset generation.

use std::fmt;
use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::csv_out::{fmt_f64, write_meta, write_row};
use crate::error::{Error, Result};
use crate::marginals::{MarginalSampler, MarginalSpec};
use crate::neuron::{dot, relu, AugmentedSample, HypothesisSet, WeightVector};
use crate::oracles::mc_loss;
use crate::seed::{self, LabRng};

/// Sample size used for Monte Carlo upper bounds on OPT.
pub const OPT_UPPER_BOUND_SAMPLES: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseKind {
    Gaussian { std: f64 },
    UniformBounded { half_width: f64 },
}

impl NoiseKind {
    pub fn variance(&self) -> f64 {
        match *self {
            NoiseKind::Gaussian { std } => std * std,
            NoiseKind::UniformBounded { half_width } => half_width * half_width / 3.0,
        }
    }

    fn sample(&self, rng: &mut LabRng) -> f64 {
        match *self {
            NoiseKind::Gaussian { std } => {
                let z: f64 = StandardNormal.sample(rng);
                std * z
            }
            NoiseKind::UniformBounded { half_width } => {
                if half_width == 0.0 {
                    0.0
                } else {
                    Uniform::new(-half_width, half_width)
                        .expect("positive half width")
                        .sample(rng)
                }
            }
        }
    }

    fn scaled(&self, alpha: f64) -> Self {
        match *self {
            NoiseKind::Gaussian { std } => NoiseKind::Gaussian { std: alpha * std },
            NoiseKind::UniformBounded { half_width } => NoiseKind::UniformBounded {
                half_width: alpha * half_width,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LabelVariant {
    /// `y = relu(v . x)`.
    Realizable,
    /// `y = relu(v . x) + xi` with `xi` independent of `x` and zero-mean.
    AdditiveNoise(NoiseKind),
    /// With probability `mix_prob` the label comes from `v_alt` instead of `v`.
    MisspecifiedTeacher { v_alt: WeightVector, mix_prob: f64 },
    /// `y = relu(v . x) * (1 - flip_magnitude * 1[|x_tilde| <= flip_radius])`.
    RegionFlip { flip_radius: f64, flip_magnitude: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabelModel {
    pub variant: LabelVariant,
    /// When set, every label is clipped to `[-B_Y, B_Y]`.
    pub clip_bound: Option<f64>,
}

impl LabelModel {
    pub fn realizable() -> Self {
        Self {
            variant: LabelVariant::Realizable,
            clip_bound: None,
        }
    }

    pub fn gaussian_noise(std: f64) -> Self {
        Self {
            variant: LabelVariant::AdditiveNoise(NoiseKind::Gaussian { std }),
            clip_bound: None,
        }
    }

    /// Gaussian noise whose exact OPT equals `opt` (`std = sqrt(2 opt)`).
    pub fn with_opt(opt: f64) -> Self {
        if opt == 0.0 {
            Self::realizable()
        } else {
            Self::gaussian_noise((2.0 * opt).sqrt())
        }
    }

    pub fn with_clip(mut self, bound: f64) -> Self {
        self.clip_bound = Some(bound);
        self
    }

    /// Whether labels are a deterministic-plus-independent-noise function of
    /// `relu(v . x)`, so that `grad L = grad F` everywhere.
    pub fn is_teacher_plus_noise(&self) -> bool {
        self.clip_bound.is_none()
            && matches!(self.variant, LabelVariant::Realizable | LabelVariant::AdditiveNoise(_))
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if let Some(b) = self.clip_bound {
            if !(b > 0.0) || !b.is_finite() {
                return Err(Error::InvalidParameter(format!("clip bound must be positive, got {b}")));
            }
        }
        match &self.variant {
            LabelVariant::Realizable => Ok(()),
            LabelVariant::AdditiveNoise(NoiseKind::Gaussian { std }) if *std >= 0.0 && std.is_finite() => Ok(()),
            LabelVariant::AdditiveNoise(NoiseKind::UniformBounded { half_width })
                if *half_width >= 0.0 && half_width.is_finite() =>
            {
                Ok(())
            }
            LabelVariant::AdditiveNoise(k) => Err(Error::InvalidParameter(format!("bad noise {k:?}"))),
            LabelVariant::MisspecifiedTeacher { v_alt, mix_prob } => {
                v_alt.check_dim(dim)?;
                if !(0.0..=1.0).contains(mix_prob) {
                    return Err(Error::InvalidParameter(format!("mix_prob {mix_prob} not in [0, 1]")));
                }
                Ok(())
            }
            LabelVariant::RegionFlip {
                flip_radius,
                flip_magnitude,
            } => {
                if !(*flip_radius >= 0.0) || !flip_magnitude.is_finite() {
                    return Err(Error::InvalidParameter("bad region flip parameters".into()));
                }
                Ok(())
            }
        }
    }

    fn scaled(&self, alpha: f64) -> Self {
        let variant = match &self.variant {
            LabelVariant::Realizable => LabelVariant::Realizable,
            LabelVariant::AdditiveNoise(k) => LabelVariant::AdditiveNoise(k.scaled(alpha)),
            LabelVariant::MisspecifiedTeacher { v_alt, mix_prob } => LabelVariant::MisspecifiedTeacher {
                v_alt: v_alt.scaled(alpha),
                mix_prob: *mix_prob,
            },
            v @ LabelVariant::RegionFlip { .. } => v.clone(),
        };
        Self {
            variant,
            clip_bound: self.clip_bound.map(|b| alpha * b),
        }
    }
}

impl fmt::Display for LabelModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.variant {
            LabelVariant::Realizable => write!(f, "realizable")?,
            LabelVariant::AdditiveNoise(NoiseKind::Gaussian { std }) => write!(f, "gaussian_noise(std={std})")?,
            LabelVariant::AdditiveNoise(NoiseKind::UniformBounded { half_width }) => {
                write!(f, "uniform_noise(half_width={half_width})")?
            }
            LabelVariant::MisspecifiedTeacher { v_alt, mix_prob } => {
                write!(f, "misspecified(v_alt={v_alt}; mix_prob={mix_prob})")?
            }
            LabelVariant::RegionFlip {
                flip_radius,
                flip_magnitude,
            } => write!(f, "region_flip(radius={flip_radius}; magnitude={flip_magnitude})")?,
        }
        if let Some(b) = self.clip_bound {
            write!(f, " clip={b}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub marginal: MarginalSpec,
    pub teacher: WeightVector,
    pub label_model: LabelModel,
    pub hypothesis_set: HypothesisSet,
}

impl Instance {
    pub fn new(
        marginal: MarginalSpec,
        teacher: WeightVector,
        label_model: LabelModel,
        hypothesis_set: HypothesisSet,
    ) -> Result<Self> {
        teacher.check_dim(marginal.dim)?;
        if !hypothesis_set.contains(&teacher) {
            return Err(Error::InvalidParameter(format!(
                "teacher {teacher} lies outside the hypothesis set {hypothesis_set:?}"
            )));
        }
        label_model.validate(marginal.dim)?;
        Ok(Self {
            marginal,
            teacher,
            label_model,
            hypothesis_set,
        })
    }

    /// Gaussian marginal with Gaussian label noise of exact OPT `opt`.
    pub fn gaussian_with_opt(teacher: WeightVector, opt: f64) -> Result<Self> {
        let dim = teacher.dim();
        let h = HypothesisSet::new(
            teacher.w_tilde_norm().max(1.0 / teacher.w_tilde_norm()).max(2.0),
            teacher.bias().abs().max(2.0),
        )?;
        Self::new(MarginalSpec::gaussian(dim), teacher, LabelModel::with_opt(opt), h)
    }

    pub fn dim(&self) -> usize {
        self.marginal.dim
    }

    /// Instance whose labels are `alpha` times the labels of `self`
    /// (inputs unchanged). Realized as teacher `alpha v` with scaled noise,
    /// which generates the same labels since `relu(alpha z) = alpha relu(z)`.
    pub fn scale_labels(&self, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("scale must be positive, got {alpha}")));
        }
        let h = HypothesisSet::new(
            self.hypothesis_set.c1 * alpha.max(1.0 / alpha),
            self.hypothesis_set.c2 * alpha.max(1.0),
        )?;
        Self::new(self.marginal, self.teacher.scaled(alpha), self.label_model.scaled(alpha), h)
    }

    /// Label for input `x` using randomness from `rng`.
    pub fn label(&self, x: &[f64], rng: &mut LabRng) -> f64 {
        let clean = relu(self.teacher.affine_eval_unchecked(x));
        let y = match &self.label_model.variant {
            LabelVariant::Realizable => clean,
            LabelVariant::AdditiveNoise(k) => clean + k.sample(rng),
            LabelVariant::MisspecifiedTeacher { v_alt, mix_prob } => {
                let u: f64 = rng.random();
                if u < *mix_prob {
                    relu(v_alt.affine_eval_unchecked(x))
                } else {
                    clean
                }
            }
            LabelVariant::RegionFlip {
                flip_radius,
                flip_magnitude,
            } => {
                if dot(x, x).sqrt() <= *flip_radius {
                    clean * (1.0 - flip_magnitude)
                } else {
                    clean
                }
            }
        };
        match self.label_model.clip_bound {
            Some(b) => y.clamp(-b, b),
            None => y,
        }
    }

    /// Descriptor used in CSV metadata.
    pub fn descriptor(&self) -> String {
        format!(
            "marginal={} d={} teacher={} labels={} H=(c1={}, c2={})",
            self.marginal.family,
            self.marginal.dim,
            self.teacher,
            self.label_model,
            self.hypothesis_set.c1,
            self.hypothesis_set.c2
        )
    }
}

/// Joint stream of `(x, y)` pairs: rows from the marginal stream, label
/// randomness from an independent stream, both derived from one seed.
pub struct PairSampler<'a> {
    instance: &'a Instance,
    rows: MarginalSampler,
    labels: LabRng,
}

impl<'a> PairSampler<'a> {
    pub fn new(instance: &'a Instance, seed: u64) -> Self {
        Self {
            instance,
            rows: MarginalSampler::new(&instance.marginal, seed::derive_named(seed, "x", &[])),
            labels: seed::rng(seed::derive_named(seed, "y", &[])),
        }
    }

    /// Fills `x` and returns the label.
    pub fn next_into(&mut self, x: &mut [f64]) -> f64 {
        self.rows.fill(x);
        self.instance.label(x, &mut self.labels)
    }
}

/// A fixed finite sample, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub dim: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Dataset {
    pub fn from_samples(samples: &[AugmentedSample]) -> Result<Self> {
        let dim = samples.first().ok_or(Error::EmptyDataset)?.x_tilde.len();
        let mut x = Vec::with_capacity(dim * samples.len());
        let mut y = Vec::with_capacity(samples.len());
        for s in samples {
            if s.x_tilde.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: s.x_tilde.len(),
                });
            }
            x.extend_from_slice(&s.x_tilde);
            y.push(s.y);
        }
        Ok(Self { dim, x, y })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }

    pub fn sample(&self, i: usize) -> AugmentedSample {
        AugmentedSample {
            x_tilde: self.row(i).to_vec(),
            y: self.y[i],
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.x.chunks_exact(self.dim).zip(self.y.iter().copied())
    }

    /// Copy with every label multiplied by `alpha`.
    pub fn scale_labels(&self, alpha: f64) -> Self {
        Self {
            dim: self.dim,
            x: self.x.clone(),
            y: self.y.iter().map(|y| alpha * y).collect(),
        }
    }

    /// Columns `x_1..x_d, y`, preceded by `#` metadata lines.
    pub fn write_csv<W: Write>(&self, out: &mut W, seed: u64, descriptor: &str) -> std::io::Result<()> {
        write_meta(
            out,
            &[
                ("d", self.dim.to_string()),
                ("seed", seed.to_string()),
                ("label_model", descriptor.to_string()),
            ],
        )?;
        let mut header: Vec<String> = (1..=self.dim).map(|j| format!("x_{j}")).collect();
        header.push("y".into());
        write_row(out, &header)?;
        for (x, y) in self.iter() {
            let mut row: Vec<String> = x.iter().map(|v| fmt_f64(*v)).collect();
            row.push(fmt_f64(y));
            write_row(out, &row)?;
        }
        Ok(())
    }
}

/// `n` i.i.d. pairs from `instance`; deterministic in `seed`.
pub fn generate_dataset(instance: &Instance, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let dim = instance.dim();
    let mut sampler = PairSampler::new(instance, seed);
    let mut x = vec![0.0; n * dim];
    let mut y = Vec::with_capacity(n);
    for row in x.chunks_exact_mut(dim) {
        y.push(sampler.next_into(row));
    }
    Ok(Dataset { dim, x, y })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OptMode {
    Exact,
    UpperBound,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptReference {
    pub mode: OptMode,
    pub value: f64,
    /// Monte Carlo standard error (upper-bound mode only).
    pub std_err: Option<f64>,
}

/// Exact OPT for teacher-plus-independent-noise labels, otherwise a Monte
/// Carlo estimate of `L(v) >= OPT`.
pub fn opt_reference(instance: &Instance) -> OptReference {
    if instance.label_model.clip_bound.is_none() {
        match &instance.label_model.variant {
            LabelVariant::Realizable => {
                return OptReference {
                    mode: OptMode::Exact,
                    value: 0.0,
                    std_err: None,
                }
            }
            LabelVariant::AdditiveNoise(k) => {
                return OptReference {
                    mode: OptMode::Exact,
                    value: 0.5 * k.variance(),
                    std_err: None,
                }
            }
            _ => {}
        }
    }
    let e = mc_loss(
        &instance.teacher,
        instance,
        OPT_UPPER_BOUND_SAMPLES,
        seed::derive_named(0, "opt-upper-bound", &[]),
    );
    OptReference {
        mode: OptMode::UpperBound,
        value: e.value,
        std_err: Some(e.std_err),
    }
}

/// True iff `v` is the exact minimizer of `L` (independent zero-mean noise,
/// no clipping), so that `L(w) = F(w) + OPT`.
pub fn is_v_optimal_for(instance: &Instance) -> bool {
    instance.label_model.is_teacher_plus_noise()
}
