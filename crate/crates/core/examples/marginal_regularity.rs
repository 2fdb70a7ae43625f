//! Regularity constants (directional moments, anti-concentration, bias
//! lower bounds) for the Gaussian, uniform and Laplace product marginals.
//!
//! ```bash
//! cargo run --release --example marginal_regularity
//! ```

use relu_gd_lab::marginals::regularity_report;
use relu_gd_lab::{Family, MarginalSpec};

fn main() -> relu_gd_lab::Result<()> {
    for family in [Family::StandardGaussian, Family::uniform(), Family::laplace()] {
        let report = regularity_report(&MarginalSpec::new(family, 3)?, 10, 100_000, 7)?;
        println!("{family}");
        for (name, e) in report.entries() {
            println!("  {name:<16} {:>9.5} +- {:.5}", e.value, e.ci_halfwidth());
        }
    }
    Ok(())
}
