//! Fixed-step gradient descent `w <- w - (c_eta / d) g` with telemetry
//! against the known teacher, an invariant monitor for exact population
//! runs, best-iterate selection on a holdout sample and random restarts.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;

use crate::csv_out::{fmt_f64, fmt_opt, write_meta, write_row};
use crate::error::{Error, Result};
use crate::init::{draw_init, init_success_check, InitOutcome, InitSpec, DEFAULT_C3, DEFAULT_DELTA};
use crate::labels::{generate_dataset, is_v_optimal_for, Dataset, Instance, LabelVariant};
use crate::neuron::{relu, relu_prime, wv_distance, WeightVector};
use crate::oracles::{empirical_loss, empirical_loss_and_grad, has_exact_population_gradient, mc_grad_loss, GaussOracle};
use crate::seed;

/// Where the step direction comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum GradSource {
    /// Exact population gradient (Gaussian marginal, teacher plus independent noise).
    PopulationExact,
    /// Population gradient estimated from `n` fresh pairs per step.
    PopulationMC(usize),
    /// Full-batch gradient of the empirical loss on a fixed dataset.
    Empirical(Arc<Dataset>),
}

impl fmt::Display for GradSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GradSource::PopulationExact => write!(f, "population_exact"),
            GradSource::PopulationMC(n) => write!(f, "population_mc(n={n})"),
            GradSource::Empirical(ds) => write!(f, "empirical(n={})", ds.len()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GDConfig {
    /// Step size is `c_eta / d`.
    pub c_eta: f64,
    pub t_max: usize,
    pub grad_source: GradSource,
    /// Holdout size for best-iterate selection.
    pub holdout_n: usize,
    /// Accuracy target.
    pub eps: f64,
    /// Stop once `|w_t - v|^2` falls below this (diagnostics only).
    pub stop_radius2: Option<f64>,
    /// Record every this many iterates (the final iterate is always recorded).
    pub record_every: usize,
    /// Sample size for telemetry that has no exact evaluation.
    pub telemetry_n: usize,
}

impl GDConfig {
    pub fn new(grad_source: GradSource) -> Self {
        Self {
            c_eta: 0.1,
            t_max: 1000,
            grad_source,
            holdout_n: 2000,
            eps: 1e-4,
            stop_radius2: None,
            record_every: 1,
            telemetry_n: 20_000,
        }
    }

    pub fn eta(&self, dim: usize) -> f64 {
        self.c_eta / dim as f64
    }

    /// Sets `record_every` so that about `records` iterates are kept.
    pub fn with_record_budget(mut self, records: usize) -> Self {
        self.record_every = (self.t_max / records.max(1)).max(1);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if !(self.c_eta > 0.0) || !self.c_eta.is_finite() {
            return bad("c_eta must be positive");
        }
        if self.t_max < 1 {
            return bad("t_max must be >= 1");
        }
        if !(self.eps > 0.0) {
            return bad("eps must be positive");
        }
        if self.record_every < 1 {
            return bad("record_every must be >= 1");
        }
        if self.holdout_n < 1 {
            return bad("holdout_n must be >= 1");
        }
        if let GradSource::PopulationMC(n) = self.grad_source {
            if n < 2 {
                return bad("Monte Carlo gradients need n >= 2");
            }
        }
        Ok(())
    }
}

impl fmt::Display for GDConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "c_eta={} t_max={} grad_source={} holdout_n={} eps={} stop_radius2={} record_every={} telemetry_n={}",
            self.c_eta,
            self.t_max,
            self.grad_source,
            self.holdout_n,
            self.eps,
            self.stop_radius2.map(|r| r.to_string()).unwrap_or_else(|| "none".into()),
            self.record_every,
            self.telemetry_n
        )
    }
}

/// Telemetry at one recorded iterate; every field is evaluated against the
/// known teacher `v`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub t: usize,
    pub w: WeightVector,
    /// Population loss `L(w_t)`.
    pub loss: f64,
    pub f: f64,
    pub dist_to_v: f64,
    pub grad_f_norm: f64,
    /// `<grad F(w_t), w_t - v>`.
    pub inner_grad_f_wv: f64,
    /// `F(0) - F(w_t)`.
    pub f0_minus_f: f64,
    /// `|grad L(w_t) - grad L_hat(w_t)|` for empirical runs with an exact population gradient.
    pub zeta_norm: Option<f64>,
    /// Gradient used for the step out of `w_t` (absent for the final iterate).
    pub step_grad: Option<WeightVector>,
}

/// Outcome of the per-step invariant monitor: while `|w_t - v|^2 > radius2`,
/// `F` and `|w - v|` must not increase by more than `1e-9` in one step.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MonitorReport {
    pub radius2: f64,
    pub steps_checked: u64,
    pub f_violations: u64,
    pub dist_violations: u64,
    pub first_violation: Option<usize>,
    pub max_f_increase: f64,
    pub max_dist_increase: f64,
}

impl MonitorReport {
    pub const TOLERANCE: f64 = 1e-9;

    pub fn violations(&self) -> u64 {
        self.f_violations + self.dist_violations
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub records: Vec<TrajectoryRecord>,
    pub config: GDConfig,
    pub descriptor: String,
    pub teacher: WeightVector,
    pub w0: WeightVector,
    pub eta: f64,
    pub seed: u64,
    /// Exact OPT when known; used by the monitor and the descent report.
    pub opt: Option<f64>,
    pub selected_t: Option<usize>,
    pub selected_holdout_loss: Option<f64>,
    /// Present for exact population runs.
    pub monitor: Option<MonitorReport>,
    /// The iteration produced a non-finite iterate and was cut short.
    pub diverged: bool,
}

impl Trajectory {
    pub fn last(&self) -> &TrajectoryRecord {
        self.records.last().expect("trajectories are nonempty")
    }

    pub fn apply_selection(&mut self, s: &Selection) {
        self.selected_t = Some(s.t);
        self.selected_holdout_loss = Some(s.holdout_loss);
    }
}

/// Exact OPT for teacher-plus-noise instances.
pub fn exact_opt(instance: &Instance) -> Option<f64> {
    if !is_v_optimal_for(instance) {
        return None;
    }
    Some(match &instance.label_model.variant {
        LabelVariant::AdditiveNoise(k) => 0.5 * k.variance(),
        _ => 0.0,
    })
}

/// Population telemetry: exact for Gaussian marginals, otherwise averages
/// over one fixed sample shared by every record.
enum Telemetry {
    Gaussian {
        oracle: GaussOracle,
        opt: Option<f64>,
        loss_sample: Option<Dataset>,
    },
    Sampled {
        sample: Dataset,
        teacher_out: Vec<f64>,
        f0: f64,
    },
}

struct Snapshot {
    loss: f64,
    f: f64,
    grad_f: WeightVector,
    f0: f64,
}

impl Telemetry {
    fn new(instance: &Instance, n: usize, seed: u64) -> Result<Self> {
        let tseed = seed::derive_named(seed, "telemetry", &[]);
        if instance.marginal.family.is_gaussian() {
            let opt = exact_opt(instance);
            let loss_sample = match opt {
                Some(_) => None,
                None => Some(generate_dataset(instance, n, tseed)?),
            };
            return Ok(Telemetry::Gaussian {
                oracle: GaussOracle::default(),
                opt,
                loss_sample,
            });
        }
        let sample = generate_dataset(instance, n, tseed)?;
        let teacher_out: Vec<f64> = sample
            .iter()
            .map(|(x, _)| relu(instance.teacher.affine_eval_unchecked(x)))
            .collect();
        let f0 = 0.5 * teacher_out.iter().map(|s| s * s).sum::<f64>() / n as f64;
        Ok(Telemetry::Sampled {
            sample,
            teacher_out,
            f0,
        })
    }

    fn snapshot(&self, w: &WeightVector, v: &WeightVector) -> Result<Snapshot> {
        match self {
            Telemetry::Gaussian {
                oracle,
                opt,
                loss_sample,
            } => {
                let (f, grad_f) = oracle.f_and_grad(w, v)?;
                let loss = match (opt, loss_sample) {
                    (Some(o), _) => f + o,
                    (None, Some(s)) => empirical_loss(w, s)?,
                    (None, None) => unreachable!("telemetry sample exists when OPT is not exact"),
                };
                Ok(Snapshot {
                    loss,
                    f,
                    grad_f,
                    f0: crate::oracles::population_F0_gauss(v),
                })
            }
            Telemetry::Sampled {
                sample,
                teacher_out,
                f0,
            } => {
                let dim = sample.dim;
                let mut g = vec![0.0; dim + 1];
                let (mut f, mut loss) = (0.0, 0.0);
                for ((x, y), s) in sample.iter().zip(teacher_out) {
                    let z = w.affine_eval_unchecked(x);
                    let a = relu(z);
                    let r = a - s;
                    f += r * r;
                    loss += (a - y) * (a - y);
                    if relu_prime(z) > 0.0 {
                        for (gi, xi) in g.iter_mut().zip(x) {
                            *gi += r * xi;
                        }
                        g[dim] += r;
                    }
                }
                let n = sample.len() as f64;
                g.iter_mut().for_each(|x| *x /= n);
                Ok(Snapshot {
                    loss: 0.5 * loss / n,
                    f: 0.5 * f / n,
                    grad_f: WeightVector::from_flat(&g)?,
                    f0: *f0,
                })
            }
        }
    }
}

fn check_compatible(config: &GDConfig, instance: &Instance) -> Result<()> {
    match &config.grad_source {
        GradSource::PopulationExact if !has_exact_population_gradient(instance) => Err(Error::OracleIncompatible(
            "exact population gradients need a Gaussian marginal and teacher-plus-independent-noise labels".into(),
        )),
        GradSource::Empirical(ds) if ds.dim != instance.dim() => Err(Error::DimensionMismatch {
            expected: instance.dim(),
            actual: ds.dim,
        }),
        GradSource::Empirical(ds) if ds.is_empty() => Err(Error::EmptyDataset),
        _ => Ok(()),
    }
}

/// Runs `t_max` steps from `w0`; deterministic in `seed`.
pub fn run_gd(w0: &WeightVector, config: &GDConfig, instance: &Instance, seed: u64) -> Result<Trajectory> {
    config.validate()?;
    check_compatible(config, instance)?;
    w0.check_dim(instance.dim())?;
    if !w0.is_finite() {
        return Err(Error::NonFinite("initial iterate"));
    }
    let v = &instance.teacher;
    let eta = config.eta(instance.dim());
    let opt = exact_opt(instance);
    let telemetry = Telemetry::new(instance, config.telemetry_n, seed)?;
    let exact = GaussOracle::default();
    let zeta_exact = matches!(config.grad_source, GradSource::Empirical(_)) && has_exact_population_gradient(instance);

    let mut monitor = match (&config.grad_source, opt) {
        (GradSource::PopulationExact, Some(o)) => Some(MonitorReport {
            radius2: 25.0 * (o + config.eps),
            ..Default::default()
        }),
        _ => None,
    };
    let mut prev: Option<(f64, f64)> = None;

    let mut w = w0.clone();
    let mut records = Vec::with_capacity(config.t_max / config.record_every + 2);
    let mut diverged = false;
    for t in 0..=config.t_max {
        let last = t == config.t_max;
        let dist = wv_distance(&w, v)?;
        let (grad, f_now) = match &config.grad_source {
            GradSource::PopulationExact => {
                let p = exact.eval(&w, v)?;
                (Some(p.gradient(&w, v)), Some(p.f))
            }
            _ if last => (None, None),
            GradSource::PopulationMC(n) => {
                let s = seed::derive_named(seed, "gradient", &[t as u64]);
                (Some(mc_grad_loss(&w, instance, *n, s)?.vector), None)
            }
            GradSource::Empirical(ds) => (Some(empirical_loss_and_grad(&w, ds)?.1), None),
        };

        if let (Some(m), Some(f)) = (monitor.as_mut(), f_now) {
            if let Some((pf, pd)) = prev {
                m.steps_checked += 1;
                let (df, dd) = (f - pf, dist - pd);
                m.max_f_increase = m.max_f_increase.max(df);
                m.max_dist_increase = m.max_dist_increase.max(dd);
                if df > MonitorReport::TOLERANCE {
                    m.f_violations += 1;
                }
                if dd > MonitorReport::TOLERANCE {
                    m.dist_violations += 1;
                }
                if (df > MonitorReport::TOLERANCE || dd > MonitorReport::TOLERANCE) && m.first_violation.is_none() {
                    m.first_violation = Some(t - 1);
                }
            }
            prev = (dist * dist > m.radius2).then_some((f, dist));
        }

        let stop = config.stop_radius2.is_some_and(|r| dist * dist < r);
        if t % config.record_every == 0 || last || stop {
            let snap = telemetry.snapshot(&w, v)?;
            let diff = w.sub(v);
            let zeta_norm = match &config.grad_source {
                GradSource::Empirical(ds) if zeta_exact => {
                    let emp = match &grad {
                        Some(g) => g.clone(),
                        None => empirical_loss_and_grad(&w, ds)?.1,
                    };
                    Some(wv_distance(&emp, &snap.grad_f)?)
                }
                _ => None,
            };
            records.push(TrajectoryRecord {
                t,
                w: w.clone(),
                loss: snap.loss,
                f: snap.f,
                dist_to_v: dist,
                grad_f_norm: snap.grad_f.norm(),
                inner_grad_f_wv: snap.grad_f.dot(&diff),
                f0_minus_f: snap.f0 - snap.f,
                zeta_norm,
                step_grad: if last || stop { None } else { grad.clone() },
            });
        }
        if last || stop {
            break;
        }
        let g = grad.expect("gradient computed before the final iterate");
        w.add_scaled(-eta, &g);
        if !w.is_finite() {
            diverged = true;
            break;
        }
    }

    Ok(Trajectory {
        records,
        config: config.clone(),
        descriptor: instance.descriptor(),
        teacher: v.clone(),
        w0: w0.clone(),
        eta,
        seed,
        opt,
        selected_t: None,
        selected_holdout_loss: None,
        monitor,
        diverged,
    })
}

/// The iterate chosen by holdout loss.
#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub t: usize,
    /// Index into `Trajectory::records`.
    pub index: usize,
    pub w: WeightVector,
    pub holdout_loss: f64,
}

/// Argmin of the holdout loss over recorded iterates (ties go to the earliest).
pub fn select_with_holdout(traj: &Trajectory, holdout: &Dataset) -> Result<Selection> {
    let mut best: Option<Selection> = None;
    for (i, r) in traj.records.iter().enumerate() {
        let l = empirical_loss(&r.w, holdout)?;
        if l.is_finite() && best.as_ref().is_none_or(|b| l < b.holdout_loss) {
            best = Some(Selection {
                t: r.t,
                index: i,
                w: r.w.clone(),
                holdout_loss: l,
            });
        }
    }
    best.ok_or(Error::NonFinite("holdout losses"))
}

/// Draws a fresh holdout of `holdout_n` pairs from `seed` and selects on it.
pub fn select_best_iterate(traj: &Trajectory, instance: &Instance, holdout_n: usize, seed: u64) -> Result<Selection> {
    if traj.records.is_empty() {
        return Err(Error::InvalidParameter("empty trajectory".into()));
    }
    let holdout = generate_dataset(instance, holdout_n, seed)?;
    select_with_holdout(traj, &holdout)
}

/// Summary of one restart in [`multi_restart`].
#[derive(Clone, Debug, PartialEq)]
pub struct RestartSummary {
    pub restart: usize,
    pub init: InitOutcome,
    /// Whether `w0` passes the default initialization check (Gaussian only).
    pub init_success: Option<bool>,
    pub selection: Selection,
    pub monitor: Option<MonitorReport>,
    pub diverged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultiRestart {
    /// Trajectory of the restart with the smallest holdout loss, selection applied.
    pub best: Trajectory,
    pub best_restart: usize,
    pub restarts: Vec<RestartSummary>,
}

impl MultiRestart {
    pub fn best_selection(&self) -> &Selection {
        &self.restarts[self.best_restart].selection
    }
}

/// `k` independent init + GD + selection pipelines sharing one holdout
/// sample; returns the restart with the smallest holdout loss.
pub fn multi_restart(
    config: &GDConfig,
    init_spec: &InitSpec,
    instance: &Instance,
    k: usize,
    seed: u64,
) -> Result<MultiRestart> {
    if k < 1 {
        return Err(Error::InvalidParameter("need at least one restart".into()));
    }
    config.validate()?;
    check_compatible(config, instance)?;
    let holdout = generate_dataset(instance, config.holdout_n, seed::derive_named(seed, "holdout", &[]))?;
    let gaussian = instance.marginal.family.is_gaussian();
    let runs: Vec<(Trajectory, RestartSummary)> = (0..k)
        .into_par_iter()
        .map(|r| {
            let init = draw_init(init_spec, instance.dim(), seed::derive_named(seed, "init", &[r as u64]))?;
            let mut traj = run_gd(&init.w0, config, instance, seed::derive_named(seed, "run", &[r as u64]))?;
            let selection = select_with_holdout(&traj, &holdout)?;
            traj.apply_selection(&selection);
            let init_success = if gaussian {
                Some(init_success_check(&init.w0, &instance.teacher, DEFAULT_DELTA, DEFAULT_C3)?)
            } else {
                None
            };
            let summary = RestartSummary {
                restart: r,
                init,
                init_success,
                selection,
                monitor: traj.monitor,
                diverged: traj.diverged,
            };
            Ok((traj, summary))
        })
        .collect::<Result<_>>()?;

    let best_restart = runs
        .iter()
        .enumerate()
        .fold(0, |b, (i, (_, s))| {
            if s.selection.holdout_loss < runs[b].1.selection.holdout_loss {
                i
            } else {
                b
            }
        });
    let mut best = None;
    let mut restarts = Vec::with_capacity(k);
    for (i, (traj, s)) in runs.into_iter().enumerate() {
        if i == best_restart {
            best = Some(traj);
        }
        restarts.push(s);
    }
    Ok(MultiRestart {
        best: best.expect("best restart exists"),
        best_restart,
        restarts,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DescentParams {
    pub delta: f64,
    pub c_p: f64,
    pub gamma: f64,
}

/// Accounting for one step `t -> t + 1` of a recorded trajectory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepReport {
    pub t: usize,
    /// `F(w_t) <= F(0) - delta`.
    pub f_hypothesis: bool,
    /// `|w_t - v|^2 > c_p^2 (OPT + eps) / gamma`.
    pub dist_hypothesis: bool,
    /// `|w_t - v|^2 - |w_{t+1} - v|^2`.
    pub decrease: f64,
    /// `2 eta <g_t, w_t - v> - eta^2 |g_t|^2`.
    pub predicted_decrease: f64,
}

impl StepReport {
    pub fn in_regime(&self) -> bool {
        self.f_hypothesis && self.dist_hypothesis
    }

    pub fn decreased(&self) -> bool {
        self.decrease > 0.0
    }
}

/// Checks one step; `index` addresses `traj.records` and the next record
/// must be the immediately following iterate.
pub fn check_descent_step(traj: &Trajectory, index: usize, opt_value: f64, params: &DescentParams) -> Result<StepReport> {
    let (a, b) = match (traj.records.get(index), traj.records.get(index + 1)) {
        (Some(a), Some(b)) if b.t == a.t + 1 => (a, b),
        _ => {
            return Err(Error::InvalidParameter(format!(
                "record {index} has no consecutive successor (record_every must be 1)"
            )))
        }
    };
    let g = a
        .step_grad
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("record lacks its step gradient".into()))?;
    let eta = traj.eta;
    let d2 = a.dist_to_v * a.dist_to_v;
    let threshold = params.c_p * params.c_p * (opt_value + traj.config.eps) / params.gamma;
    Ok(StepReport {
        t: a.t,
        f_hypothesis: a.f0_minus_f >= params.delta,
        dist_hypothesis: d2 > threshold,
        decrease: d2 - b.dist_to_v * b.dist_to_v,
        predicted_decrease: 2.0 * eta * g.dot(&a.w.sub(&traj.teacher)) - eta * eta * g.norm_sq(),
    })
}

pub const TRAJECTORY_TELEMETRY_COLUMNS: [&str; 7] =
    ["L", "F", "dist_to_v", "grad_F_norm", "inner_gradF_wv", "F0_minus_F", "zeta_norm"];

/// Trajectory CSV: `#` metadata, then `t, w_1..w_d, bias` and telemetry columns.
pub fn write_trajectory_csv<W: Write>(out: &mut W, traj: &Trajectory, extra_meta: &[(&str, String)]) -> std::io::Result<()> {
    let mut meta = vec![
        ("config", traj.config.to_string()),
        ("instance", traj.descriptor.clone()),
        ("seed", traj.seed.to_string()),
        ("w0", traj.w0.to_string()),
        ("eta", fmt_f64(traj.eta)),
        ("oracle", "gaussian_closed_form".to_string()),
    ];
    if let Some(t) = traj.selected_t {
        meta.push(("selected_T", t.to_string()));
    }
    if let Some(l) = traj.selected_holdout_loss {
        meta.push(("selected_holdout_loss", fmt_f64(l)));
    }
    meta.extend(extra_meta.iter().cloned());
    write_meta(out, &meta)?;
    let dim = traj.w0.dim();
    let mut header = vec!["t".to_string()];
    header.extend((1..=dim).map(|j| format!("w_{j}")));
    header.push("bias".into());
    header.extend(TRAJECTORY_TELEMETRY_COLUMNS.iter().map(|c| c.to_string()));
    write_row(out, &header)?;
    for r in &traj.records {
        let mut row = vec![r.t.to_string()];
        row.extend(r.w.to_flat().into_iter().map(fmt_f64));
        row.extend([
            fmt_f64(r.loss),
            fmt_f64(r.f),
            fmt_f64(r.dist_to_v),
            fmt_f64(r.grad_f_norm),
            fmt_f64(r.inner_grad_f_wv),
            fmt_f64(r.f0_minus_f),
            fmt_opt(r.zeta_norm),
        ]);
        write_row(out, &row)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::LabelModel;
    use crate::marginals::{Family, MarginalSpec};
    use crate::neuron::HypothesisSet;
    use crate::oracles::{population_F0_gauss, population_F_gauss};

    fn gaussian_instance(dim: usize, noise: f64) -> Instance {
        let model = if noise == 0.0 {
            LabelModel::realizable()
        } else {
            LabelModel::gaussian_noise(noise)
        };
        Instance::new(
            MarginalSpec::gaussian(dim),
            WeightVector::axis(dim, 0, 1.0, 0.0),
            model,
            HypothesisSet::default(),
        )
        .unwrap()
    }

    fn exact_config(t_max: usize) -> GDConfig {
        GDConfig {
            t_max,
            ..GDConfig::new(GradSource::PopulationExact)
        }
    }

    #[test]
    fn teacher_is_a_fixed_point() {
        let inst = gaussian_instance(3, 0.0);
        let traj = run_gd(&inst.teacher, &exact_config(50), &inst, 1).unwrap();
        assert_eq!(traj.records.len(), 51);
        assert!(traj.records.iter().all(|r| r.w == inst.teacher && r.f == 0.0));
    }

    #[test]
    fn converges_from_good_init_in_two_dimensions() {
        let inst = gaussian_instance(2, 0.1);
        let opt = 0.005;
        let w0 = WeightVector::new(vec![0.5, 0.5], 0.0).unwrap();
        let f0 = population_F0_gauss(&inst.teacher);
        assert!(population_F_gauss(&w0, &inst.teacher).unwrap() <= f0 - 0.05);
        let traj = run_gd(&w0, &exact_config(2000), &inst, 2).unwrap();
        let last = traj.last();
        assert!(last.dist_to_v * last.dist_to_v <= 10.0 * opt, "{}", last.dist_to_v);
        assert!((last.loss - last.f - opt).abs() < 1e-15);
        let m = traj.monitor.unwrap();
        assert_eq!(m.violations(), 0, "{m:?}");
        assert!(m.steps_checked > 0);
    }

    #[test]
    fn runs_are_deterministic() {
        let inst = gaussian_instance(3, 0.2);
        let ds = Arc::new(generate_dataset(&inst, 500, 3).unwrap());
        let w0 = WeightVector::new(vec![0.1, -0.3, 0.2], 0.0).unwrap();
        for source in [GradSource::PopulationExact, GradSource::PopulationMC(200), GradSource::Empirical(ds)] {
            let cfg = GDConfig {
                t_max: 30,
                ..GDConfig::new(source)
            };
            assert_eq!(run_gd(&w0, &cfg, &inst, 4).unwrap(), run_gd(&w0, &cfg, &inst, 4).unwrap());
        }
    }

    #[test]
    fn update_identity_holds_for_every_source() {
        let inst = gaussian_instance(3, 0.2);
        let ds = Arc::new(generate_dataset(&inst, 500, 5).unwrap());
        let w0 = WeightVector::new(vec![0.4, -0.3, 0.2], 0.1).unwrap();
        let params = DescentParams {
            delta: 0.01,
            c_p: 1.0,
            gamma: 1.0,
        };
        for source in [GradSource::PopulationExact, GradSource::PopulationMC(100), GradSource::Empirical(ds)] {
            let cfg = GDConfig {
                t_max: 40,
                ..GDConfig::new(source)
            };
            let traj = run_gd(&w0, &cfg, &inst, 6).unwrap();
            for i in 0..40 {
                let r = check_descent_step(&traj, i, 0.02, &params).unwrap();
                let scale = r.decrease.abs().max(traj.records[i].dist_to_v.powi(2) * 1e-6);
                assert!((r.decrease - r.predicted_decrease).abs() <= 1e-10 * scale.max(1e-12) + 1e-15);
                let a = &traj.records[i];
                let mut next = a.w.clone();
                next.add_scaled(-traj.eta, a.step_grad.as_ref().unwrap());
                assert_eq!(next, traj.records[i + 1].w);
            }
        }
    }

    #[test]
    fn descent_report_at_teacher_is_out_of_regime() {
        let inst = gaussian_instance(2, 0.0);
        let traj = run_gd(&inst.teacher, &exact_config(3), &inst, 1).unwrap();
        let r = check_descent_step(
            &traj,
            0,
            0.0,
            &DescentParams {
                delta: 0.01,
                c_p: 1.0,
                gamma: 0.1,
            },
        )
        .unwrap();
        assert!(!r.dist_hypothesis && !r.in_regime());
        let strided = run_gd(
            &inst.teacher,
            &GDConfig {
                record_every: 2,
                ..exact_config(4)
            },
            &inst,
            1,
        )
        .unwrap();
        assert!(check_descent_step(&strided, 0, 0.0, &DescentParams { delta: 0.0, c_p: 1.0, gamma: 1.0 }).is_err());
    }

    #[test]
    fn realizable_descent_steps_decrease_distance() {
        let inst = gaussian_instance(2, 0.0);
        let w0 = WeightVector::new(vec![0.6, 0.3], 0.0).unwrap();
        let traj = run_gd(&w0, &exact_config(300), &inst, 1).unwrap();
        let params = DescentParams {
            delta: 0.01,
            c_p: 1.0,
            gamma: 1.0,
        };
        let mut in_regime = 0;
        for i in 0..300 {
            let r = check_descent_step(&traj, i, 0.0, &params).unwrap();
            if r.in_regime() {
                in_regime += 1;
                assert!(r.decreased(), "step {i}");
            }
        }
        assert!(in_regime > 0);
    }

    #[test]
    fn selection_rules() {
        let inst = gaussian_instance(2, 0.0);
        let traj = run_gd(&inst.teacher, &exact_config(5), &inst, 1).unwrap();
        let s = select_best_iterate(&traj, &inst, 100, 9).unwrap();
        assert_eq!((s.t, s.holdout_loss), (0, 0.0));
        assert_eq!(s, select_best_iterate(&traj, &inst, 100, 9).unwrap());

        let w0 = WeightVector::new(vec![0.6, 0.3], 0.0).unwrap();
        let traj = run_gd(&w0, &exact_config(200), &inst, 1).unwrap();
        let s = select_best_iterate(&traj, &inst, 2000, 10).unwrap();
        assert_eq!(s.t, 200);
    }

    #[test]
    fn incompatible_source_is_rejected_before_iterating() {
        let inst = Instance::new(
            MarginalSpec::new(Family::uniform(), 2).unwrap(),
            WeightVector::axis(2, 0, 1.0, 0.0),
            LabelModel::realizable(),
            HypothesisSet::default(),
        )
        .unwrap();
        let r = run_gd(&WeightVector::zeros(2), &exact_config(5), &inst, 1);
        assert!(matches!(r, Err(Error::OracleIncompatible(_))));
        let clipped = Instance::new(
            MarginalSpec::gaussian(2),
            WeightVector::axis(2, 0, 1.0, 0.0),
            LabelModel::gaussian_noise(0.1).with_clip(3.0),
            HypothesisSet::default(),
        )
        .unwrap();
        assert!(matches!(
            run_gd(&WeightVector::zeros(2), &exact_config(5), &clipped, 1),
            Err(Error::OracleIncompatible(_))
        ));
    }

    #[test]
    fn sampled_telemetry_for_non_gaussian_marginals() {
        let inst = Instance::new(
            MarginalSpec::new(Family::uniform(), 3).unwrap(),
            WeightVector::axis(3, 0, 1.0, 0.5),
            LabelModel::gaussian_noise(0.1),
            HypothesisSet::default(),
        )
        .unwrap();
        let cfg = GDConfig {
            t_max: 200,
            telemetry_n: 5000,
            record_every: 50,
            ..GDConfig::new(GradSource::PopulationMC(500))
        };
        let traj = run_gd(&WeightVector::new(vec![0.3, 0.1, 0.0], 0.0).unwrap(), &cfg, &inst, 3).unwrap();
        assert_eq!(traj.records.iter().map(|r| r.t).collect::<Vec<_>>(), vec![0, 50, 100, 150, 200]);
        assert!(traj.monitor.is_none());
        assert!(traj.last().f < traj.records[0].f);
    }

    #[test]
    fn restarts() {
        let inst = gaussian_instance(3, 0.1);
        let cfg = GDConfig {
            holdout_n: 500,
            ..exact_config(100)
        };
        let spec = InitSpec::KnownScale { scale: 1.0, beta: 1.0 };
        let one = multi_restart(&cfg, &spec, &inst, 1, 7).unwrap();
        let init = draw_init(&spec, 3, seed::derive_named(7, "init", &[0])).unwrap();
        let mut single = run_gd(&init.w0, &cfg, &inst, seed::derive_named(7, "run", &[0])).unwrap();
        let holdout = generate_dataset(&inst, 500, seed::derive_named(7, "holdout", &[])).unwrap();
        let s = select_with_holdout(&single, &holdout).unwrap();
        single.apply_selection(&s);
        assert_eq!(one.best, single);

        let mut prev = f64::INFINITY;
        for k in 1..=4 {
            let m = multi_restart(&cfg, &spec, &inst, k, 7).unwrap();
            let l = m.best_selection().holdout_loss;
            assert!(l <= prev);
            prev = l;
            assert_eq!(m.restarts.len(), k);
        }
    }

    #[test]
    fn empirical_runs_report_zeta() {
        let inst = gaussian_instance(2, 0.1);
        let ds = Arc::new(generate_dataset(&inst, 1000, 1).unwrap());
        let cfg = GDConfig {
            t_max: 10,
            ..GDConfig::new(GradSource::Empirical(ds))
        };
        let traj = run_gd(&WeightVector::new(vec![0.5, 0.1], 0.0).unwrap(), &cfg, &inst, 2).unwrap();
        assert!(traj.records.iter().all(|r| r.zeta_norm.is_some_and(|z| z > 0.0)));
    }

    #[test]
    fn trajectory_csv_layout() {
        let inst = gaussian_instance(2, 0.0);
        let traj = run_gd(&inst.teacher, &exact_config(2), &inst, 1).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &traj, &[]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
        assert_eq!(
            header,
            "t,w_1,w_2,bias,L,F,dist_to_v,grad_F_norm,inner_gradF_wv,F0_minus_F,zeta_norm"
        );
        assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 4);
    }
}
