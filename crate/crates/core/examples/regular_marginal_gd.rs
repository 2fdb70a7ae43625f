//! GD on a uniform-cube marginal, where no exact population oracle exists:
//! Monte Carlo population gradients and sampled telemetry.
//!
//! ```bash
//! cargo run --release --example regular_marginal_gd
//! ```

use relu_gd_lab::gd::multi_restart;
use relu_gd_lab::{opt_reference, Family, GDConfig, GradSource, HypothesisSet, InitSpec, Instance, LabelModel, MarginalSpec, WeightVector};

fn main() -> relu_gd_lab::Result<()> {
    let d = 5;
    let inst = Instance::new(
        MarginalSpec::new(Family::uniform(), d)?,
        WeightVector::axis(d, 0, 1.0, 0.5),
        LabelModel::with_opt(1e-2),
        HypothesisSet::default(),
    )?;
    let config = GDConfig {
        t_max: 2_000,
        telemetry_n: 5_000,
        ..GDConfig::new(GradSource::PopulationMC(500))
    }
    .with_record_budget(50);
    let res = multi_restart(&config, &InitSpec::KnownScale { scale: 1.0, beta: 1.0 }, &inst, 5, 4)?;
    let opt = opt_reference(&inst).value;
    let sel = res.best_selection();
    println!(
        "holdout loss {:.5}, OPT {opt:.0e}, ratio {:.3}",
        sel.holdout_loss,
        (sel.holdout_loss - config.eps) / opt
    );
    Ok(())
}
