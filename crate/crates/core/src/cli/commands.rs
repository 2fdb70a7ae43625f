//! Subcommand implementations. Each returns a [`Status`] or an error; the
//! caller maps both to an exit code.

use std::io::Write;

use rayon::prelude::*;

use super::config::{ExperimentConfig, FamilyName, LemmaName};
use super::output::Outputs;
use crate::csv_out::{fmt_f64, fmt_opt, write_meta, write_row};
use crate::error::{Error, Result};
use crate::gd::{multi_restart, write_trajectory_csv, MultiRestart};
use crate::init::{estimate_init_success_rate, write_init_csv, InitSpec, InitStudyRow};
use crate::labels::{opt_reference, Instance, OptMode};
use crate::lemma_lab::{self as lab, LemmaSweep};
use crate::marginals::{regularity_report, MarginalSpec, RegularityReport};
use crate::oracles::GaussOracle;
use crate::seed;
use crate::stats::median;

/// Outcome of a command that ran to completion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Success,
    /// A non-vacuous check failed.
    Violation,
}

/// One point of the sweep grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub family: FamilyName,
    pub d: usize,
    pub b_v: f64,
    /// Target OPT; `None` keeps the label model of `[instance]`.
    pub opt: Option<f64>,
}

impl Cell {
    pub fn name(&self) -> String {
        let mut s = format!("{}_d{}_bv{}", self.family.0.name(), self.d, self.b_v);
        if let Some(o) = self.opt {
            s.push_str(&format!("_opt{o:e}"));
        }
        s
    }

    /// Cross product of the `[sweep]` lists.
    pub fn grid(cfg: &ExperimentConfig) -> Vec<Cell> {
        let s = &cfg.sweep;
        let opts: Vec<Option<f64>> = if s.opt.is_empty() { vec![None] } else { s.opt.iter().map(|o| Some(*o)).collect() };
        let mut cells = Vec::new();
        for &family in &s.families {
            for &d in &s.d {
                for &b_v in &s.b_v {
                    for &opt in &opts {
                        cells.push(Cell { family, d, b_v, opt });
                    }
                }
            }
        }
        cells
    }
}

/// Seed of one (cell, replicate): a function of the master seed, the full
/// instance description and the replicate index only.
pub fn cell_seed(master: u64, instance: &Instance, replicate: usize) -> u64 {
    seed::derive_named(master, &instance.descriptor(), &[replicate as u64])
}

/// One summary line per (cell, replicate).
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub d: usize,
    pub family: &'static str,
    pub b_v: f64,
    pub opt: f64,
    pub opt_mode: OptMode,
    pub c_eta: f64,
    pub restarts: usize,
    pub t_max: usize,
    pub grad_source: String,
    pub best_holdout_loss: f64,
    /// `(best_holdout_loss - eps) / opt`; NaN when `opt = 0`.
    pub ratio: f64,
    pub selected_t: usize,
    /// Fraction of restarts whose draw passes the initialization check (Gaussian only).
    pub init_success_rate: Option<f64>,
    /// Descent-monitor violations summed over restarts with a successful init.
    pub monitor_violations: Option<u64>,
    pub diverged: usize,
    pub replicate: usize,
    pub seed: u64,
}

pub const SUMMARY_COLUMNS: [&str; 17] = [
    "d",
    "family",
    "b_v",
    "opt",
    "opt_mode",
    "c_eta",
    "restarts",
    "t_max",
    "grad_source",
    "best_holdout_loss",
    "ratio",
    "selected_T",
    "init_success_rate",
    "monitor_violations",
    "diverged",
    "replicate",
    "seed",
];

impl SummaryRow {
    fn fields(&self) -> Vec<String> {
        vec![
            self.d.to_string(),
            self.family.to_string(),
            fmt_f64(self.b_v),
            fmt_f64(self.opt),
            format!("{:?}", self.opt_mode).to_lowercase(),
            fmt_f64(self.c_eta),
            self.restarts.to_string(),
            self.t_max.to_string(),
            self.grad_source.clone(),
            fmt_f64(self.best_holdout_loss),
            fmt_f64(self.ratio),
            self.selected_t.to_string(),
            fmt_opt(self.init_success_rate),
            self.monitor_violations.map(|v| v.to_string()).unwrap_or_default(),
            self.diverged.to_string(),
            self.replicate.to_string(),
            self.seed.to_string(),
        ]
    }
}

pub fn write_summary_csv<W: Write>(out: &mut W, meta: &[(&str, String)], rows: &[SummaryRow]) -> std::io::Result<()> {
    write_meta(out, meta)?;
    write_row(out, &SUMMARY_COLUMNS)?;
    for r in rows {
        write_row(out, &r.fields())?;
    }
    Ok(())
}

/// `(d, rows, median ratio, max ratio)` over rows with a finite ratio.
pub fn aggregate_by_dim(rows: &[SummaryRow]) -> Vec<(usize, usize, f64, f64)> {
    let mut dims: Vec<usize> = rows.iter().map(|r| r.d).collect();
    dims.sort_unstable();
    dims.dedup();
    dims.into_iter()
        .map(|d| {
            let mut ratios: Vec<f64> = rows.iter().filter(|r| r.d == d && r.ratio.is_finite()).map(|r| r.ratio).collect();
            let n = ratios.len();
            if n == 0 {
                return (d, 0, f64::NAN, f64::NAN);
            }
            let max = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            (d, n, median(&mut ratios), max)
        })
        .collect()
}

pub fn write_aggregate_csv<W: Write>(out: &mut W, meta: &[(&str, String)], rows: &[SummaryRow]) -> std::io::Result<()> {
    write_meta(out, meta)?;
    write_row(out, &["d", "rows", "median_ratio", "max_ratio"])?;
    for (d, n, med, max) in aggregate_by_dim(rows) {
        write_row(out, &[d.to_string(), n.to_string(), fmt_f64(med), fmt_f64(max)])?;
    }
    Ok(())
}

/// Result of [`run_cell`].
#[derive(Debug)]
pub struct CellOutcome {
    pub instance: Instance,
    pub row: SummaryRow,
    pub result: MultiRestart,
}

/// Multi-restart GD on one (cell, replicate).
pub fn run_cell(cfg: &ExperimentConfig, cell: &Cell, replicate: usize) -> Result<CellOutcome> {
    let instance = cfg.cell_instance(cell.family, cell.d, cell.b_v, cell.opt)?;
    let seed = cell_seed(cfg.master_seed, &instance, replicate);
    let gd = cfg.gd_config(&instance, seed)?;
    let init = cfg.init_spec(&instance);
    init.validate()?;
    let k = cfg.init.restarts;
    let result = multi_restart(&gd, &init, &instance, k, seed)?;
    let opt = opt_reference(&instance);
    let best = result.best_selection();
    let gaussian = instance.marginal.family.is_gaussian();
    let init_success_rate =
        gaussian.then(|| result.restarts.iter().filter(|r| r.init_success == Some(true)).count() as f64 / k as f64);
    let monitor_violations = result.restarts.iter().any(|r| r.monitor.is_some()).then(|| {
        result
            .restarts
            .iter()
            .filter(|r| r.init_success == Some(true))
            .filter_map(|r| r.monitor.as_ref().map(|m| m.violations()))
            .sum()
    });
    let row = SummaryRow {
        d: cell.d,
        family: cell.family.0.name(),
        b_v: cell.b_v,
        opt: opt.value,
        opt_mode: opt.mode,
        c_eta: gd.c_eta,
        restarts: k,
        t_max: gd.t_max,
        grad_source: gd.grad_source.to_string(),
        best_holdout_loss: best.holdout_loss,
        ratio: if opt.value > 0.0 { (best.holdout_loss - gd.eps) / opt.value } else { f64::NAN },
        selected_t: best.t,
        init_success_rate,
        monitor_violations,
        diverged: result.restarts.iter().filter(|r| r.diverged).count(),
        replicate,
        seed,
    };
    Ok(CellOutcome { instance, row, result })
}

fn restart_table<W: Write>(out: &mut W, outcome: &CellOutcome) -> std::io::Result<()> {
    write_meta(
        out,
        &[
            ("instance", outcome.instance.descriptor()),
            ("seed", outcome.row.seed.to_string()),
            ("best_restart", outcome.result.best_restart.to_string()),
        ],
    )?;
    write_row(
        out,
        &["restart", "rho", "j", "init_success", "selected_T", "holdout_loss", "monitor_violations", "diverged"],
    )?;
    for r in &outcome.result.restarts {
        write_row(
            out,
            &[
                r.restart.to_string(),
                fmt_f64(r.init.rho),
                r.init.j.map(|j| j.to_string()).unwrap_or_default(),
                r.init_success.map(|b| b.to_string()).unwrap_or_default(),
                r.selection.t.to_string(),
                fmt_f64(r.selection.holdout_loss),
                r.monitor.as_ref().map(|m| m.violations().to_string()).unwrap_or_default(),
                r.diverged.to_string(),
            ],
        )?;
    }
    Ok(())
}

fn write_cell_files(cfg: &ExperimentConfig, out: &Outputs, prefix: &str, outcome: &CellOutcome) -> Result<()> {
    let meta = [("master_seed", cfg.master_seed.to_string()), ("instance", outcome.instance.descriptor())];
    if cfg.output.trajectories {
        out.write(&format!("{prefix}trajectory.csv"), |w| write_trajectory_csv(w, &outcome.result.best, &[]))?;
    }
    out.write(&format!("{prefix}restarts.csv"), |w| restart_table(w, outcome))?;
    if cfg.output.datasets {
        if let crate::gd::GradSource::Empirical(ds) = &outcome.result.best.config.grad_source {
            out.write(&format!("{prefix}train.csv"), |w| ds.write_csv(w, outcome.row.seed, &outcome.instance.descriptor()))?;
        }
    }
    out.write(&format!("{prefix}summary.csv"), |w| {
        write_summary_csv(w, &meta, std::slice::from_ref(&outcome.row))
    })?;
    Ok(())
}

/// GD with restarts on the `[instance]` problem.
pub fn cmd_run(cfg: &ExperimentConfig, out: &Outputs) -> Result<Status> {
    let i = &cfg.instance;
    let cell = Cell {
        family: i.family,
        d: i.d,
        b_v: i.b_v,
        opt: None,
    };
    let outcome = run_cell(cfg, &cell, 0)?;
    write_cell_files(cfg, out, "", &outcome)?;
    let r = &outcome.row;
    println!(
        "run {}: best_holdout_loss={:.6e} opt={:.6e} ratio={:.4} selected_T={} restarts={}",
        outcome.instance.descriptor(),
        r.best_holdout_loss,
        r.opt,
        r.ratio,
        r.selected_t,
        r.restarts
    );
    Ok(Status::Success)
}

/// One summary row per (cell, replicate) plus an aggregate by dimension.
pub fn cmd_sweep(cfg: &ExperimentConfig, out: &Outputs) -> Result<Status> {
    let cells = Cell::grid(cfg);
    let jobs: Vec<(Cell, usize)> = cells
        .iter()
        .flat_map(|c| (0..cfg.sweep.replicates).map(move |r| (*c, r)))
        .collect();
    let rows: Vec<SummaryRow> = jobs
        .par_iter()
        .map(|(cell, rep)| {
            let outcome = run_cell(cfg, cell, *rep)?;
            let prefix = format!("cells/{}_r{rep}/", cell.name());
            write_cell_files(cfg, out, &prefix, &outcome)?;
            println!("cell {} r{rep}: ratio={:.4}", cell.name(), outcome.row.ratio);
            Ok(outcome.row)
        })
        .collect::<Result<_>>()?;
    let meta = [
        ("master_seed", cfg.master_seed.to_string()),
        ("cells", cells.len().to_string()),
        ("replicates", cfg.sweep.replicates.to_string()),
    ];
    if cfg.output.summary {
        out.write("summary.csv", |w| write_summary_csv(w, &meta, &rows))?;
        out.write("aggregate.csv", |w| write_aggregate_csv(w, &meta, &rows))?;
    }
    for (d, n, med, max) in aggregate_by_dim(&rows) {
        println!("d={d}: rows={n} median_ratio={med:.4} max_ratio={max:.4}");
    }
    Ok(Status::Success)
}

/// Runs the configured lemma sweeps.
pub fn lemma_sweeps(cfg: &ExperimentConfig) -> Result<Vec<LemmaSweep>> {
    let l = &cfg.lemmas;
    let oracle = GaussOracle::default();
    let domain = cfg.sweep_domain()?;
    let s = |name: &str| seed::derive_named(cfg.master_seed, name, &[]);
    let pairs = lab::sweep_pairs(l.points, &domain, s("lemma-pairs"));
    let mut out = Vec::new();
    let mut gamma_sweep: Option<LemmaSweep> = None;
    let inner = |gamma_sweep: &mut Option<LemmaSweep>| -> Result<LemmaSweep> {
        if gamma_sweep.is_none() {
            *gamma_sweep = Some(lab::sweep_inner_product(&pairs, &oracle, s("lemma-pairs"))?);
        }
        Ok(gamma_sweep.clone().expect("set above"))
    };
    for name in &l.lemmas {
        let sweep = match name {
            LemmaName::Jointprob => lab::sweep_jointprob(&pairs, &oracle, s("lemma-pairs"))?,
            LemmaName::InnerProductLb => inner(&mut gamma_sweep)?,
            LemmaName::FLipschitz => lab::sweep_f_lipschitz(&pairs, &oracle, s("lemma-pairs"))?,
            LemmaName::LossDecomposition => {
                lab::sweep_loss_decomposition(&pairs, l.noise_std, l.mc_samples, l.identity_se, s("loss-decomposition"))?
            }
            LemmaName::GradOpt => {
                let near = lab::near_teacher_pairs(l.points, &domain, l.near_radius, s("near-teacher"));
                let g_main = inner(&mut gamma_sweep)?.fitted_constant;
                let g_near = lab::sweep_inner_product(&near, &oracle, s("near-teacher"))?.fitted_constant;
                let gamma = match (g_main, g_near) {
                    (Some(a), Some(b)) => a.min(b),
                    (a, b) => a.or(b).unwrap_or(f64::NAN),
                };
                if !(gamma > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "grad_opt needs a positive inner-product constant, got {gamma}"
                    )));
                }
                lab::sweep_grad_opt(&near, l.opt, l.c_g, gamma, l.delta, &oracle, s("near-teacher"))?
            }
            LemmaName::Smoothness => {
                let t = lab::smoothness_triples(l.points, &domain, s("smoothness"));
                lab::sweep_smoothness(&t, l.c_lower, l.c_upper, l.c_prime, &oracle, s("smoothness"))?
            }
            LemmaName::DescentExpansion => {
                let t = lab::smoothness_triples(l.points, &domain, s("smoothness"));
                lab::sweep_descent_expansion(&t, l.c_lower, l.c_upper, l.c_prime, &oracle, s("smoothness"))?
            }
        };
        out.push(sweep);
    }
    Ok(out)
}

/// Per-lemma CSVs and a pass/fail banner; `Violation` if any non-vacuous check fails.
pub fn cmd_verify_lemmas(cfg: &ExperimentConfig, out: &Outputs) -> Result<Status> {
    if !cfg.instance.family.0.is_gaussian() {
        return Err(Error::OracleIncompatible(
            "lemma checks use the exact Gaussian oracle; set [instance] family = \"gaussian\"".into(),
        ));
    }
    let sweeps = lemma_sweeps(cfg)?;
    let meta = [("master_seed", cfg.master_seed.to_string())];
    let mut failed = 0;
    for s in &sweeps {
        out.write(&format!("lemmas/{}.csv", s.lemma_id), |w| lab::write_lemma_csv(w, s, &meta))?;
        println!(
            "{}: points={} violations={} vacuous={} constant={}",
            s.lemma_id,
            s.results.len(),
            s.violations(),
            s.vacuous(),
            fmt_opt(s.fitted_constant)
        );
        if let Some((i, r)) = s.first_violation() {
            failed += 1;
            eprintln!(
                "violation in {} at point {i}: lhs={} rhs={} {}",
                s.lemma_id, r.lhs, r.rhs, r.digest
            );
        }
    }
    out.write("lemmas/summary.csv", |w| {
        write_meta(w, &meta)?;
        write_row(w, &["lemma_id", "points", "violations", "vacuous", "sweep_constant"])?;
        for s in &sweeps {
            write_row(
                w,
                &[
                    s.lemma_id.to_string(),
                    s.results.len().to_string(),
                    s.violations().to_string(),
                    s.vacuous().to_string(),
                    fmt_opt(s.fitted_constant),
                ],
            )?;
        }
        Ok(())
    })?;
    if failed == 0 {
        println!("PASS: {} lemma sweeps, no violations", sweeps.len());
        Ok(Status::Success)
    } else {
        println!("FAIL: {failed} of {} lemma sweeps have violations", sweeps.len());
        Ok(Status::Violation)
    }
}

pub const REGULARITY_COLUMNS: [&str; 8] = ["family", "d", "quantity", "value", "std_err", "ci_halfwidth", "n", "seed"];

pub fn write_regularity_csv<W: Write>(out: &mut W, report: &RegularityReport, meta: &[(&str, String)]) -> std::io::Result<()> {
    let mut m = vec![("family", report.family.to_string())];
    m.extend(meta.iter().cloned());
    write_meta(out, &m)?;
    write_row(out, &REGULARITY_COLUMNS)?;
    for (name, e) in report.entries() {
        write_row(
            out,
            &[
                report.family.name().to_string(),
                report.dim.to_string(),
                name,
                fmt_f64(e.value),
                fmt_f64(e.std_err),
                fmt_f64(e.ci_halfwidth()),
                report.n.to_string(),
                report.seed.to_string(),
            ],
        )?;
    }
    Ok(())
}

/// Regularity constants per (family, d).
pub fn cmd_estimate_regularity(cfg: &ExperimentConfig, out: &Outputs) -> Result<Status> {
    let r = &cfg.regularity;
    let jobs: Vec<(FamilyName, usize)> = r.families.iter().flat_map(|f| r.d.iter().map(move |d| (*f, *d))).collect();
    let reports: Vec<RegularityReport> = jobs
        .par_iter()
        .map(|(f, d)| {
            let spec = MarginalSpec::new(f.0, *d)?;
            let s = seed::derive_named(cfg.master_seed, &format!("regularity:{}", f.0), &[*d as u64]);
            regularity_report(&spec, r.trials, r.n, s)
        })
        .collect::<Result<_>>()?;
    let meta = [("master_seed", cfg.master_seed.to_string()), ("trials", r.trials.to_string())];
    for rep in &reports {
        out.write(&format!("regularity/{}_d{}.csv", rep.family.name(), rep.dim), |w| {
            write_regularity_csv(w, rep, &meta)
        })?;
        println!(
            "{} d={}: beta2=[{:.4}, {:.4}] beta4={:.4} beta3={:.4} beta5={}",
            rep.family,
            rep.dim,
            rep.beta2_lo.value,
            rep.beta2_hi.value,
            rep.beta4.value,
            rep.beta3.value,
            rep.beta5.map_or("n/a".to_string(), |e| format!("{:.4}", e.value))
        );
    }
    Ok(Status::Success)
}

/// Initialization success rates over (mode, b_v, d, M).
pub fn cmd_init_study(cfg: &ExperimentConfig, out: &Outputs) -> Result<Status> {
    let st = &cfg.init_study;
    let mut jobs = Vec::new();
    for &d in &st.d {
        for &b_v in &st.b_v {
            jobs.push((d, b_v));
        }
    }
    let groups: Vec<Vec<InitStudyRow>> = jobs
        .par_iter()
        .map(|&(d, b_v)| {
            let v = cfg.teacher(d, b_v)?;
            let s = seed::derive_named(cfg.master_seed, "init-study", &[d as u64, b_v.to_bits()]);
            let known = InitSpec::KnownScale {
                scale: v.w_tilde_norm(),
                beta: st.beta,
            };
            let ks = seed::derive_named(s, "known", &[]);
            let kr = estimate_init_success_rate(&known, &v, st.delta, st.c3, st.trials, ks)?;
            let mut rows = vec![InitStudyRow {
                spec: known,
                dim: d,
                b_v,
                delta: st.delta,
                c3: st.c3,
                rate: kr,
                seed: ks,
                ratio_to_known: None,
            }];
            for &m in &st.m {
                let spec = InitSpec::UnknownScale { m, beta: st.beta };
                let us = seed::derive_named(s, "unknown", &[m.to_bits()]);
                let ur = estimate_init_success_rate(&spec, &v, st.delta, st.c3, st.unknown_trials, us)?;
                let ratio = (kr.rate > 0.0).then(|| ur.rate / kr.rate);
                rows.push(InitStudyRow {
                    spec,
                    dim: d,
                    b_v,
                    delta: st.delta,
                    c3: st.c3,
                    rate: ur,
                    seed: us,
                    ratio_to_known: ratio,
                });
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    let rows: Vec<InitStudyRow> = groups.into_iter().flatten().collect();
    let meta = [("master_seed", cfg.master_seed.to_string())];
    out.write("init_study.csv", |w| write_init_csv(w, &meta, &rows))?;
    for r in &rows {
        println!(
            "{} d={} b_v={}: rate={:.4} [{:.4}, {:.4}]{}",
            r.spec.mode_name(),
            r.dim,
            r.b_v,
            r.rate.rate,
            r.rate.ci_lo,
            r.rate.ci_hi,
            r.ratio_to_known.map_or(String::new(), |x| format!(" ratio_to_known={x:.4}"))
        );
    }
    Ok(Status::Success)
}
