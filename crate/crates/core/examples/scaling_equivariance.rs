//! Scaling the labels by alpha scales the GD iterates by alpha and the loss
//! by alpha squared.
//!
//! ```bash
//! cargo run --release --example scaling_equivariance
//! ```

use std::sync::Arc;

use relu_gd_lab::lemma_lab::check_scaling_equivariance;
use relu_gd_lab::{generate_dataset, GDConfig, GradSource, Instance, WeightVector};

fn main() -> relu_gd_lab::Result<()> {
    let inst = Instance::gaussian_with_opt(WeightVector::axis(5, 0, 1.0, 0.3), 1e-2)?;
    let ds = Arc::new(generate_dataset(&inst, 2_000, 1)?);
    let config = GDConfig {
        t_max: 500,
        ..GDConfig::new(GradSource::Empirical(ds))
    };
    let w0 = WeightVector::new(vec![0.3, -0.2, 0.1, 0.0, 0.4], 0.0)?;
    for alpha in [0.5, 2.0, 10.0] {
        let r = check_scaling_equivariance(&inst, alpha, &w0, &config, 9)?;
        println!("alpha = {alpha:>4}: max relative iterate deviation {:.2e}, loss deviation {:.2e}", r.max_rel_dev, r.loss_ratio_dev);
    }
    Ok(())
}
