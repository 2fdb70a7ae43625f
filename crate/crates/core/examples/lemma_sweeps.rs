//! Seeded sweeps of the structural inequalities with fitted constants.
//!
//! ```bash
//! cargo run --release --example lemma_sweeps
//! ```

use relu_gd_lab::lemma_lab::{
    smoothness_triples, sweep_f_lipschitz, sweep_inner_product, sweep_jointprob, sweep_pairs, sweep_smoothness,
    SweepDomain,
};
use relu_gd_lab::GaussOracle;

fn main() -> relu_gd_lab::Result<()> {
    let oracle = GaussOracle::default();
    let domain = SweepDomain::default();
    let pairs = sweep_pairs(5_000, &domain, 1);
    let triples = smoothness_triples(5_000, &domain, 2);
    let sweeps = [
        sweep_jointprob(&pairs, &oracle, 1)?,
        sweep_inner_product(&pairs, &oracle, 1)?,
        sweep_f_lipschitz(&pairs, &oracle, 1)?,
        sweep_smoothness(&triples, 0.5, 3.0, 1.0, &oracle, 2)?,
    ];
    for s in &sweeps {
        println!(
            "{:<18} violations {:>4}  vacuous {:>5}  constant {:?}",
            s.lemma_id,
            s.violations(),
            s.vacuous(),
            s.fitted_constant
        );
    }
    Ok(())
}
