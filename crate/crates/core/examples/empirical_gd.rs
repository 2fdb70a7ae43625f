//! Finite-sample GD: full-batch gradients on a fixed training set, then the
//! selected iterate's population excess loss.
//!
//! ```bash
//! cargo run --release --example empirical_gd
//! ```

use std::sync::Arc;

use relu_gd_lab::gd::multi_restart;
use relu_gd_lab::oracles::population_F_gauss;
use relu_gd_lab::{generate_dataset, GDConfig, GradSource, InitSpec, Instance, WeightVector};

fn main() -> relu_gd_lab::Result<()> {
    let inst = Instance::gaussian_with_opt(WeightVector::axis(10, 0, 1.0, 0.0), 1e-2)?;
    for n in [1_000, 10_000, 100_000] {
        let ds = Arc::new(generate_dataset(&inst, n, n as u64)?);
        let config = GDConfig {
            t_max: 5_000,
            ..GDConfig::new(GradSource::Empirical(ds))
        }
        .with_record_budget(100);
        let res = multi_restart(&config, &InitSpec::KnownScale { scale: 1.0, beta: 1.0 }, &inst, 2, 1)?;
        let sel = res.best_selection();
        println!(
            "n = {n:>6}: holdout loss {:.5}, population F {:.3e}",
            sel.holdout_loss,
            population_F_gauss(&sel.w, &inst.teacher)?
        );
    }
    Ok(())
}
