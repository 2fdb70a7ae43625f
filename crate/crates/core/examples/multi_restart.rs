//! Random restarts with the known-scale and unknown-scale initializers;
//! reports the selected iterate and how many draws started in the descent region.
//!
//! ```bash
//! cargo run --release --example multi_restart
//! ```

use relu_gd_lab::gd::multi_restart;
use relu_gd_lab::{GDConfig, GradSource, InitSpec, Instance, WeightVector};

fn main() -> relu_gd_lab::Result<()> {
    let d = 10;
    let opt = 1e-2;
    let inst = Instance::gaussian_with_opt(WeightVector::axis(d, 0, 1.0, 1.0), opt)?;
    let t_max = ((50.0 * d as f64 / (opt + 1e-4)).ceil() as usize).min(200_000);
    let config = GDConfig {
        t_max,
        ..GDConfig::new(GradSource::PopulationExact)
    }
    .with_record_budget(200);

    for spec in [InitSpec::KnownScale { scale: 1.0, beta: 1.0 }, InitSpec::UnknownScale { m: 1024.0, beta: 1.0 }] {
        let res = multi_restart(&config, &spec, &inst, 20, 5)?;
        let good = res.restarts.iter().filter(|r| r.init_success == Some(true)).count();
        let sel = res.best_selection();
        println!(
            "{:<14} successful inits {good:>2}/20, best restart {:>2}, holdout loss {:.5e} (OPT {opt:.0e})",
            spec.mode_name(),
            res.best_restart,
            sel.holdout_loss
        );
    }
    Ok(())
}
