//! One GD run on exact population gradients, best-iterate selection on a
//! holdout sample, and the trajectory CSV written to stdout.
//!
//! ```bash
//! cargo run --release --example gd_trajectory > trajectory.csv
//! ```

use relu_gd_lab::gd::{select_best_iterate, write_trajectory_csv};
use relu_gd_lab::{draw_init, run_gd, GDConfig, GradSource, InitSpec, Instance, WeightVector};

fn main() -> relu_gd_lab::Result<()> {
    let inst = Instance::gaussian_with_opt(WeightVector::new(vec![1.0, 0.0, 0.0, 0.0], 0.5)?, 1e-3)?;
    let init = draw_init(&InitSpec::KnownScale { scale: 1.0, beta: 1.0 }, inst.dim(), 3)?;
    let config = GDConfig {
        t_max: 20_000,
        ..GDConfig::new(GradSource::PopulationExact)
    }
    .with_record_budget(100);

    let mut traj = run_gd(&init.w0, &config, &inst, 11)?;
    let sel = select_best_iterate(&traj, &inst, config.holdout_n, 12)?;
    traj.apply_selection(&sel);
    eprintln!("selected t = {}, holdout loss = {:.6e}, final F = {:.3e}", sel.t, sel.holdout_loss, traj.last().f);

    write_trajectory_csv(&mut std::io::stdout().lock(), &traj, &[])?;
    Ok(())
}
