//! Deviation of the empirical gradient from the population gradient as the
//! sample grows; the log-log slope should be close to -1/2.
//!
//! ```bash
//! cargo run --release --example zeta_concentration
//! ```

use relu_gd_lab::lemma_lab::check_zeta_slope;
use relu_gd_lab::{Instance, WeightVector};

fn main() -> relu_gd_lab::Result<()> {
    let inst = Instance::gaussian_with_opt(WeightVector::axis(10, 0, 1.0, 0.5), 1e-2)?;
    let probes = vec![
        WeightVector::axis(10, 1, 0.8, 0.0),
        WeightVector::axis(10, 0, 0.6, -0.2),
        inst.teacher.clone(),
    ];
    let s = check_zeta_slope(&inst, &probes, &[1_000, 10_000, 100_000], 10, 3)?;
    for (p, row) in s.medians.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|(n, m)| format!("n={n}: {m:.3e}")).collect();
        println!("probe {p}: {}", cells.join("  "));
    }
    println!("slope {:.3} +- {:.3}", s.slope, s.ci);
    Ok(())
}
