//! TOML experiment configuration.
//!
//! Every block is optional and every key has a default, so an empty file is
//! a valid config. Unknown keys and malformed values are errors that point at
//! the offending line.

use std::path::Path;

use serde::{Deserialize, Deserializer};

use crate::error::{Error, Result};
use crate::gd::GDConfig;
use crate::init::{InitSpec, DEFAULT_C3, DEFAULT_DELTA};
use crate::labels::{opt_reference, Instance, LabelModel, LabelVariant, NoiseKind};
use crate::lemma_lab::{Region, SweepDomain};
use crate::marginals::{Family, MarginalSpec};
use crate::neuron::{dot, HypothesisSet, WeightVector};
use crate::seed;

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub instance: InstanceBlock,
    #[serde(default)]
    pub gd: GdBlock,
    #[serde(default)]
    pub init: InitBlock,
    #[serde(default)]
    pub sweep: SweepBlock,
    #[serde(default)]
    pub output: OutputBlock,
    #[serde(default)]
    pub lemmas: LemmaBlock,
    #[serde(default)]
    pub regularity: RegularityBlock,
    #[serde(default)]
    pub init_study: InitStudyBlock,
    /// Source text, kept to locate keys in validation errors.
    #[serde(skip)]
    source: String,
}

/// A marginal family name: `gaussian`, `uniform` or `laplace`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FamilyName(pub Family);

impl<'de> Deserialize<'de> for FamilyName {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Family::parse(&s).map(FamilyName).ok_or_else(|| {
            serde::de::Error::custom(format!("unknown family `{s}`, expected one of `gaussian`, `uniform`, `laplace`"))
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelKind {
    Realizable,
    GaussianNoise,
    UniformNoise,
    Misspecified,
    RegionFlip,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceBlock {
    #[serde(default = "gaussian_family")]
    pub family: FamilyName,
    /// Uniform half-width (default gives unit variance).
    pub half_width: Option<f64>,
    /// Laplace scale (default gives unit variance).
    pub scale: Option<f64>,
    #[serde(default = "two")]
    pub d: usize,
    /// Teacher input weights; overrides `teacher_norm` and `teacher_seed`.
    pub teacher: Option<Vec<f64>>,
    #[serde(default = "one")]
    pub teacher_norm: f64,
    #[serde(default)]
    pub b_v: f64,
    /// Draw the teacher direction uniformly from this seed instead of using `e_1`.
    pub teacher_seed: Option<u64>,
    /// Defaults to `gaussian_noise` when `opt` or `noise_std` is set, `realizable` otherwise.
    pub label_model: Option<LabelKind>,
    /// Target OPT for Gaussian noise (`noise_std = sqrt(2 opt)`).
    pub opt: Option<f64>,
    pub noise_std: Option<f64>,
    pub noise_half_width: Option<f64>,
    /// Alternative teacher as `[w_1, ..., w_d, bias]`.
    pub v_alt: Option<Vec<f64>>,
    pub mix_prob: Option<f64>,
    pub flip_radius: Option<f64>,
    pub flip_magnitude: Option<f64>,
    pub clip: Option<f64>,
    #[serde(default = "two_f")]
    pub c1: f64,
    #[serde(default = "two_f")]
    pub c2: f64,
}

impl Default for InstanceBlock {
    fn default() -> Self {
        toml::from_str("").expect("defaults parse")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradSourceKind {
    PopulationExact,
    PopulationMc,
    Empirical,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GdBlock {
    #[serde(default = "c_eta")]
    pub c_eta: f64,
    /// Defaults to `min(200000, ceil(50 d / (OPT + eps)))`.
    pub t_max: Option<usize>,
    #[serde(default = "population_exact")]
    pub grad_source: GradSourceKind,
    /// Fresh pairs per step for `population_mc`.
    #[serde(default = "thousand")]
    pub mc_samples: usize,
    /// Training set size for `empirical`.
    #[serde(default = "ten_thousand")]
    pub n_train: usize,
    #[serde(default = "two_thousand")]
    pub holdout_n: usize,
    #[serde(default = "eps")]
    pub eps: f64,
    /// Approximate number of recorded iterates; ignored when `record_every` is set.
    #[serde(default = "two_hundred")]
    pub records: usize,
    pub record_every: Option<usize>,
    #[serde(default = "twenty_thousand")]
    pub telemetry_n: usize,
    pub stop_radius2: Option<f64>,
}

impl Default for GdBlock {
    fn default() -> Self {
        toml::from_str("").expect("defaults parse")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    Known,
    Unknown,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitBlock {
    #[serde(default = "known")]
    pub mode: InitMode,
    #[serde(default = "one")]
    pub beta: f64,
    /// Known-scale length; defaults to the teacher norm.
    pub scale: Option<f64>,
    #[serde(default = "m_default")]
    pub m: f64,
    #[serde(default = "twenty")]
    pub restarts: usize,
}

impl Default for InitBlock {
    fn default() -> Self {
        toml::from_str("").expect("defaults parse")
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    #[serde(default = "sweep_d")]
    pub d: Vec<usize>,
    /// Target OPT values (Gaussian label noise); empty keeps the instance labels.
    #[serde(default = "sweep_opt")]
    pub opt: Vec<f64>,
    #[serde(default = "sweep_b_v")]
    pub b_v: Vec<f64>,
    #[serde(default = "sweep_families")]
    pub families: Vec<FamilyName>,
    #[serde(default = "one_usize")]
    pub replicates: usize,
}

impl Default for SweepBlock {
    fn default() -> Self {
        toml::from_str("").expect("defaults parse")
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default = "out_dir")]
    pub dir: String,
    #[serde(default = "yes")]
    pub trajectories: bool,
    #[serde(default = "yes")]
    pub summary: bool,
    /// Write the training set of empirical runs.
    #[serde(default)]
    pub datasets: bool,
}

impl Default for OutputBlock {
    fn default() -> Self {
        toml::from_str("").expect("defaults parse")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LemmaName {
    Jointprob,
    InnerProductLb,
    GradOpt,
    FLipschitz,
    LossDecomposition,
    Smoothness,
    DescentExpansion,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    Hypothesis,
    Ball,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaBlock {
    #[serde(default = "all_lemmas")]
    pub lemmas: Vec<LemmaName>,
    #[serde(default = "ten_thousand")]
    pub points: usize,
    #[serde(default = "hypothesis")]
    pub region: RegionKind,
    /// `H` of the `hypothesis` region.
    #[serde(default = "two_f")]
    pub c1: f64,
    #[serde(default = "two_f")]
    pub c2: f64,
    /// Bounds of the `ball` region.
    #[serde(default = "three")]
    pub norm_bound: f64,
    #[serde(default = "two_f")]
    pub bias_bound: f64,
    #[serde(default = "sweep_dims")]
    pub dims: Vec<usize>,
    /// Loss decomposition: label noise and Monte Carlo size per point.
    #[serde(default = "noise_default")]
    pub noise_std: f64,
    #[serde(default = "ten_thousand")]
    pub mc_samples: usize,
    /// Also require `|L - F - OPT| <= identity_se * SE`.
    pub identity_se: Option<f64>,
    /// Grad-opt parameters; points are drawn within `near_radius` of `v`.
    #[serde(default = "lemma_opt")]
    pub opt: f64,
    #[serde(default = "one")]
    pub c_g: f64,
    #[serde(default = "lemma_delta")]
    pub delta: f64,
    #[serde(default = "near_radius")]
    pub near_radius: f64,
    /// Smoothness parameters.
    #[serde(default = "half")]
    pub c_lower: f64,
    #[serde(default = "three")]
    pub c_upper: f64,
    #[serde(default = "one")]
    pub c_prime: f64,
}

impl Default for LemmaBlock {
    fn default() -> Self {
        toml::from_str("").expect("defaults parse")
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularityBlock {
    #[serde(default = "all_families")]
    pub families: Vec<FamilyName>,
    #[serde(default = "regularity_dims")]
    pub d: Vec<usize>,
    /// Random directions on top of the coordinate axes.
    #[serde(default = "twenty")]
    pub trials: usize,
    /// Samples per direction.
    #[serde(default = "hundred_thousand")]
    pub n: usize,
}

impl Default for RegularityBlock {
    fn default() -> Self {
        toml::from_str("").expect("defaults parse")
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitStudyBlock {
    #[serde(default = "sweep_d")]
    pub d: Vec<usize>,
    #[serde(default = "sweep_b_v")]
    pub b_v: Vec<f64>,
    #[serde(default = "study_m")]
    pub m: Vec<f64>,
    #[serde(default = "one")]
    pub beta: f64,
    #[serde(default = "init_delta")]
    pub delta: f64,
    #[serde(default = "init_c3")]
    pub c3: f64,
    #[serde(default = "ten_thousand")]
    pub trials: usize,
    #[serde(default = "hundred_thousand")]
    pub unknown_trials: usize,
}

impl Default for InitStudyBlock {
    fn default() -> Self {
        toml::from_str("").expect("defaults parse")
    }
}

fn gaussian_family() -> FamilyName {
    FamilyName(Family::StandardGaussian)
}
fn two() -> usize {
    2
}
fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn two_f() -> f64 {
    2.0
}
fn three() -> f64 {
    3.0
}
fn half() -> f64 {
    0.5
}
fn c_eta() -> f64 {
    0.1
}
fn eps() -> f64 {
    1e-4
}
fn population_exact() -> GradSourceKind {
    GradSourceKind::PopulationExact
}
fn thousand() -> usize {
    1000
}
fn two_hundred() -> usize {
    200
}
fn two_thousand() -> usize {
    2000
}
fn ten_thousand() -> usize {
    10_000
}
fn twenty_thousand() -> usize {
    20_000
}
fn hundred_thousand() -> usize {
    100_000
}
fn twenty() -> usize {
    20
}
fn known() -> InitMode {
    InitMode::Known
}
fn m_default() -> f64 {
    1024.0
}
fn sweep_d() -> Vec<usize> {
    vec![2, 10, 50]
}
fn sweep_opt() -> Vec<f64> {
    vec![1e-4, 1e-3, 1e-2]
}
fn sweep_b_v() -> Vec<f64> {
    vec![0.0, 1.0]
}
fn sweep_families() -> Vec<FamilyName> {
    vec![gaussian_family()]
}
fn all_families() -> Vec<FamilyName> {
    ["gaussian", "uniform", "laplace"]
        .iter()
        .map(|n| FamilyName(Family::parse(n).expect("known family")))
        .collect()
}
fn regularity_dims() -> Vec<usize> {
    vec![1, 10]
}
fn out_dir() -> String {
    "out".into()
}
fn yes() -> bool {
    true
}
fn all_lemmas() -> Vec<LemmaName> {
    use LemmaName::*;
    vec![Jointprob, InnerProductLb, GradOpt, FLipschitz, LossDecomposition, Smoothness, DescentExpansion]
}
fn hypothesis() -> RegionKind {
    RegionKind::Hypothesis
}
fn sweep_dims() -> Vec<usize> {
    crate::lemma_lab::SWEEP_DIMS.to_vec()
}
fn noise_default() -> f64 {
    0.1
}
fn lemma_opt() -> f64 {
    1e-2
}
fn lemma_delta() -> f64 {
    crate::lemma_lab::GAMMA_REGION_DELTA
}
fn near_radius() -> f64 {
    0.3
}
fn study_m() -> Vec<f64> {
    vec![1024.0]
}
fn init_delta() -> f64 {
    DEFAULT_DELTA
}
fn init_c3() -> f64 {
    DEFAULT_C3
}

/// Line (1-based) of `key` inside `[section]` (`""` for top-level keys).
fn key_line(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if let Some(rest) = t.strip_prefix('[') {
            current = rest.trim_end_matches(']').trim().to_string();
            continue;
        }
        if current == section {
            if let Some(rest) = t.strip_prefix(key) {
                if rest.trim_start().starts_with('=') {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.source = text.to_string();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// A config error for `[section] key`, with its line when the key is present.
    fn err_at(&self, section: &str, key: &str, msg: &str) -> Error {
        let name = if section.is_empty() { key.to_string() } else { format!("{section}.{key}") };
        match key_line(&self.source, section, key) {
            Some(line) => Error::Config(format!("line {line}: {name}: {msg}")),
            None => Error::Config(format!("{name}: {msg}")),
        }
    }

    fn validate(&self) -> Result<()> {
        let i = &self.instance;
        let pos = |x: f64| x > 0.0 && x.is_finite();
        if i.d < 1 {
            return Err(self.err_at("instance", "d", "must be >= 1"));
        }
        if let Some(t) = &i.teacher {
            if t.len() != i.d {
                return Err(self.err_at("instance", "teacher", &format!("needs {} entries", i.d)));
            }
        }
        if !pos(i.teacher_norm) {
            return Err(self.err_at("instance", "teacher_norm", "must be positive"));
        }
        if let Some(o) = i.opt {
            if !(o >= 0.0 && o.is_finite()) {
                return Err(self.err_at("instance", "opt", "must be >= 0"));
            }
            if i.noise_std.is_some() {
                return Err(self.err_at("instance", "opt", "set either opt or noise_std"));
            }
        }
        let g = &self.gd;
        if !pos(g.c_eta) {
            return Err(self.err_at("gd", "c_eta", "must be positive"));
        }
        if !pos(g.eps) {
            return Err(self.err_at("gd", "eps", "must be positive"));
        }
        if g.t_max == Some(0) {
            return Err(self.err_at("gd", "t_max", "must be >= 1"));
        }
        if g.record_every == Some(0) {
            return Err(self.err_at("gd", "record_every", "must be >= 1"));
        }
        if g.holdout_n < 1 {
            return Err(self.err_at("gd", "holdout_n", "must be >= 1"));
        }
        if g.mc_samples < 2 {
            return Err(self.err_at("gd", "mc_samples", "must be >= 2"));
        }
        if g.n_train < 1 {
            return Err(self.err_at("gd", "n_train", "must be >= 1"));
        }
        let n = &self.init;
        if !(1.0..=2.0).contains(&n.beta) {
            return Err(self.err_at("init", "beta", "must be in [1, 2]"));
        }
        if !(n.m >= 1.0 && n.m.is_finite()) {
            return Err(self.err_at("init", "m", "must be >= 1"));
        }
        if n.restarts < 1 {
            return Err(self.err_at("init", "restarts", "must be >= 1"));
        }
        let s = &self.sweep;
        if s.d.is_empty() || s.d.contains(&0) {
            return Err(self.err_at("sweep", "d", "needs at least one dimension, all >= 1"));
        }
        if s.b_v.is_empty() {
            return Err(self.err_at("sweep", "b_v", "must be nonempty"));
        }
        if s.families.is_empty() {
            return Err(self.err_at("sweep", "families", "must be nonempty"));
        }
        if s.opt.iter().any(|o| !(*o >= 0.0 && o.is_finite())) {
            return Err(self.err_at("sweep", "opt", "entries must be >= 0"));
        }
        if s.replicates < 1 {
            return Err(self.err_at("sweep", "replicates", "must be >= 1"));
        }
        let l = &self.lemmas;
        if l.points < 1 {
            return Err(self.err_at("lemmas", "points", "must be >= 1"));
        }
        if l.dims.is_empty() || l.dims.contains(&0) {
            return Err(self.err_at("lemmas", "dims", "needs at least one dimension, all >= 1"));
        }
        if l.c1 < 1.0 || !pos(l.c2) {
            return Err(self.err_at("lemmas", "c1", "needs c1 >= 1 and c2 > 0"));
        }
        if !(pos(l.c_lower) && l.c_upper >= l.c_lower && pos(l.c_prime)) {
            return Err(self.err_at("lemmas", "c_lower", "needs 0 < c_lower <= c_upper and c_prime > 0"));
        }
        if l.mc_samples < 2 {
            return Err(self.err_at("lemmas", "mc_samples", "must be >= 2"));
        }
        let r = &self.regularity;
        if r.families.is_empty() {
            return Err(self.err_at("regularity", "families", "must be nonempty"));
        }
        if r.d.is_empty() || r.d.contains(&0) {
            return Err(self.err_at("regularity", "d", "needs at least one dimension, all >= 1"));
        }
        if r.n < crate::stats::BATCHES {
            return Err(self.err_at("regularity", "n", "too few samples"));
        }
        let st = &self.init_study;
        if st.d.is_empty() || st.d.contains(&0) || st.b_v.is_empty() {
            return Err(self.err_at("init_study", "d", "d and b_v must be nonempty, d >= 1"));
        }
        if st.trials < 100 || st.unknown_trials < 100 {
            return Err(self.err_at("init_study", "trials", "need at least 100 trials"));
        }
        if !(1.0..=2.0).contains(&st.beta) {
            return Err(self.err_at("init_study", "beta", "must be in [1, 2]"));
        }
        if st.m.iter().any(|m| !(*m >= 1.0)) {
            return Err(self.err_at("init_study", "m", "entries must be >= 1"));
        }
        Ok(())
    }

    fn family(&self, name: FamilyName) -> Family {
        match name.0 {
            Family::UniformCube { .. } => self.instance.half_width.map_or(name.0, |h| Family::UniformCube { half_width: h }),
            Family::LaplaceProduct { .. } => self.instance.scale.map_or(name.0, |s| Family::LaplaceProduct { scale: s }),
            f => f,
        }
    }

    /// Teacher for dimension `d` and bias `b_v`.
    pub fn teacher(&self, d: usize, b_v: f64) -> Result<WeightVector> {
        let i = &self.instance;
        if let Some(t) = &i.teacher {
            if t.len() == d {
                return WeightVector::new(t.clone(), b_v);
            }
        }
        match i.teacher_seed {
            Some(s) => {
                let mut rng = seed::rng(seed::derive_named(s, "teacher", &[d as u64]));
                let u: Vec<f64> = loop {
                    let u: Vec<f64> = (0..d).map(|_| rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng)).collect();
                    if dot(&u, &u) > 1e-24 {
                        break u;
                    }
                };
                let n = dot(&u, &u).sqrt();
                WeightVector::new(u.into_iter().map(|x| i.teacher_norm * x / n).collect(), b_v)
            }
            None => Ok(WeightVector::axis(d, 0, i.teacher_norm, b_v)),
        }
    }

    fn label_model(&self, opt: Option<f64>, d: usize) -> Result<LabelModel> {
        let i = &self.instance;
        let opt = opt.or(i.opt);
        let kind = i.label_model.unwrap_or(if opt.is_some() || i.noise_std.is_some() {
            LabelKind::GaussianNoise
        } else {
            LabelKind::Realizable
        });
        let need = |v: Option<f64>, key: &str| v.ok_or_else(|| self.err_at("instance", key, "required by this label_model"));
        let variant = match kind {
            LabelKind::Realizable => LabelVariant::Realizable,
            LabelKind::GaussianNoise => {
                let std = match (opt, i.noise_std) {
                    (Some(o), _) => (2.0 * o).sqrt(),
                    (None, Some(s)) => s,
                    (None, None) => return Err(self.err_at("instance", "label_model", "gaussian_noise needs opt or noise_std")),
                };
                LabelVariant::AdditiveNoise(NoiseKind::Gaussian { std })
            }
            LabelKind::UniformNoise => LabelVariant::AdditiveNoise(NoiseKind::UniformBounded {
                half_width: need(i.noise_half_width, "noise_half_width")?,
            }),
            LabelKind::Misspecified => {
                let flat = i.v_alt.as_ref().ok_or_else(|| self.err_at("instance", "label_model", "misspecified needs v_alt"))?;
                if flat.len() != d + 1 {
                    return Err(self.err_at("instance", "v_alt", &format!("needs {} entries (weights then bias)", d + 1)));
                }
                LabelVariant::MisspecifiedTeacher {
                    v_alt: WeightVector::from_flat(flat)?,
                    mix_prob: need(i.mix_prob, "mix_prob")?,
                }
            }
            LabelKind::RegionFlip => LabelVariant::RegionFlip {
                flip_radius: need(i.flip_radius, "flip_radius")?,
                flip_magnitude: need(i.flip_magnitude, "flip_magnitude")?,
            },
        };
        Ok(LabelModel {
            variant,
            clip_bound: i.clip,
        })
    }

    /// The instance of one cell; `opt` overrides the label noise with a
    /// Gaussian of that OPT.
    pub fn cell_instance(&self, family: FamilyName, d: usize, b_v: f64, opt: Option<f64>) -> Result<Instance> {
        let teacher = self.teacher(d, b_v)?;
        let i = &self.instance;
        let h = HypothesisSet::new(i.c1, i.c2).map_err(|e| self.err_at("instance", "c1", &e.to_string()))?;
        let marginal = MarginalSpec::new(self.family(family), d)?;
        let model = self.label_model(opt, d)?;
        Instance::new(marginal, teacher, model, h).map_err(|e| match e {
            Error::InvalidParameter(m) => self.err_at("instance", "teacher_norm", &m),
            other => other,
        })
    }

    /// The single instance described by `[instance]`.
    pub fn instance(&self) -> Result<Instance> {
        let i = &self.instance;
        self.cell_instance(i.family, i.d, i.b_v, None)
    }

    /// `min(200000, ceil(50 d / (OPT + eps)))` unless `t_max` is set.
    pub fn t_max(&self, instance: &Instance) -> usize {
        self.gd.t_max.unwrap_or_else(|| {
            let opt = opt_reference(instance).value;
            let t = (50.0 * instance.dim() as f64 / (opt + self.gd.eps)).ceil();
            t.min(200_000.0) as usize
        })
    }

    /// GD settings for `instance`; `empirical` runs draw their training set from `seed`.
    pub fn gd_config(&self, instance: &Instance, seed: u64) -> Result<GDConfig> {
        let g = &self.gd;
        let source = match g.grad_source {
            GradSourceKind::PopulationExact => crate::gd::GradSource::PopulationExact,
            GradSourceKind::PopulationMc => crate::gd::GradSource::PopulationMC(g.mc_samples),
            GradSourceKind::Empirical => {
                let ds = crate::labels::generate_dataset(instance, g.n_train, seed::derive_named(seed, "train", &[]))?;
                crate::gd::GradSource::Empirical(std::sync::Arc::new(ds))
            }
        };
        let mut cfg = GDConfig {
            c_eta: g.c_eta,
            t_max: self.t_max(instance),
            holdout_n: g.holdout_n,
            eps: g.eps,
            stop_radius2: g.stop_radius2,
            telemetry_n: g.telemetry_n,
            ..GDConfig::new(source)
        };
        cfg = match g.record_every {
            Some(r) => GDConfig { record_every: r, ..cfg },
            None => cfg.with_record_budget(g.records),
        };
        Ok(cfg)
    }

    pub fn init_spec(&self, instance: &Instance) -> InitSpec {
        let n = &self.init;
        match n.mode {
            InitMode::Known => InitSpec::KnownScale {
                scale: n.scale.unwrap_or_else(|| instance.teacher.w_tilde_norm().max(f64::MIN_POSITIVE)),
                beta: n.beta,
            },
            InitMode::Unknown => InitSpec::UnknownScale { m: n.m, beta: n.beta },
        }
    }

    pub fn sweep_domain(&self) -> Result<SweepDomain> {
        let l = &self.lemmas;
        let region = match l.region {
            RegionKind::Hypothesis => Region::Hypothesis(HypothesisSet::new(l.c1, l.c2)?),
            RegionKind::Ball => Region::Ball {
                norm_bound: l.norm_bound,
                bias_bound: l.bias_bound,
            },
        };
        Ok(SweepDomain {
            dims: l.dims.clone(),
            region,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_uses_defaults() {
        let c = ExperimentConfig::parse("").unwrap();
        assert_eq!(c.instance.d, 2);
        assert_eq!(c.sweep.d, vec![2, 10, 50]);
        assert_eq!(c.lemmas.points, 10_000);
        let inst = c.instance().unwrap();
        assert_eq!(inst.label_model, LabelModel::realizable());
        assert_eq!(c.t_max(&inst), 200_000.min((50.0 * 2.0 / 1e-4f64).ceil() as usize));
    }

    #[test]
    fn bad_family_reports_line() {
        let e = ExperimentConfig::parse("master_seed = 3\n\n[instance]\nfamily = \"cauchy\"\n").unwrap_err();
        let m = e.to_string();
        assert!(matches!(e, Error::Config(_)));
        assert!(m.contains("line 4") && m.contains("cauchy"), "{m}");
    }

    #[test]
    fn unknown_key_is_an_error() {
        let e = ExperimentConfig::parse("[gd]\nc_eta = 0.1\nstep = 3\n").unwrap_err();
        let m = e.to_string();
        assert!(m.contains("line 3") && m.contains("step"), "{m}");
    }

    #[test]
    fn validation_errors_point_at_key() {
        let e = ExperimentConfig::parse("[init]\nrestarts = 4\nbeta = 3.0\n").unwrap_err();
        assert!(e.to_string().contains("line 3"), "{e}");
    }

    #[test]
    fn opt_sets_noise() {
        let c = ExperimentConfig::parse("[instance]\nd = 3\nopt = 0.02\nb_v = 0.5\n").unwrap();
        let inst = c.instance().unwrap();
        assert_eq!(inst.teacher, WeightVector::axis(3, 0, 1.0, 0.5));
        assert!((opt_reference(&inst).value - 0.02).abs() < 1e-15);
        assert_eq!(c.t_max(&inst), 7463);
    }

    #[test]
    fn teacher_seed_gives_norm() {
        let c = ExperimentConfig::parse("[instance]\nd = 5\nteacher_seed = 9\nteacher_norm = 1.5\n").unwrap();
        let v = c.instance().unwrap().teacher;
        assert!((v.w_tilde_norm() - 1.5).abs() < 1e-12);
        assert_ne!(v, WeightVector::axis(5, 0, 1.5, 0.0));
    }
}
