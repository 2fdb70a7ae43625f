//! Success rates of the random initializer, known scale versus the
//! geometric unknown-scale ladder.
//!
//! ```bash
//! cargo run --release --example init_success
//! ```

use relu_gd_lab::init::{estimate_init_success_rate, DEFAULT_C3, DEFAULT_DELTA};
use relu_gd_lab::{InitSpec, WeightVector};

fn main() -> relu_gd_lab::Result<()> {
    for b_v in [0.0, 1.0] {
        let v = WeightVector::axis(10, 0, 1.0, b_v);
        let known = estimate_init_success_rate(
            &InitSpec::KnownScale { scale: 1.0, beta: 1.0 },
            &v,
            DEFAULT_DELTA,
            DEFAULT_C3,
            10_000,
            1,
        )?;
        let unknown = estimate_init_success_rate(
            &InitSpec::UnknownScale { m: 1024.0, beta: 1.0 },
            &v,
            DEFAULT_DELTA,
            DEFAULT_C3,
            100_000,
            2,
        )?;
        println!(
            "b_v = {b_v}: known {:.4} [{:.4}, {:.4}]  unknown {:.4} [{:.4}, {:.4}]  ratio {:.3}",
            known.rate,
            known.ci_lo,
            known.ci_hi,
            unknown.rate,
            unknown.ci_lo,
            unknown.ci_hi,
            unknown.rate / known.rate
        );
    }
    Ok(())
}
