//! Exact Gaussian population loss, gradient and joint orthant probability,
//! checked against the quadrature route and a Monte Carlo estimate.
//!
//! ```bash
//! cargo run --release --example population_oracle
//! ```

use relu_gd_lab::oracles::{mc_f, population_F0_gauss, GaussOracle};
use relu_gd_lab::{MarginalSpec, WeightVector};

fn main() -> relu_gd_lab::Result<()> {
    let v = WeightVector::new(vec![1.0, 0.0, 0.0], 0.5)?;
    let w = WeightVector::new(vec![0.4, 0.7, -0.2], -0.3)?;

    let closed = GaussOracle::default();
    let quad = GaussOracle::quadrature(80);
    let (f, grad) = closed.f_and_grad(&w, &v)?;
    println!("F(w)            = {f:.12}");
    println!("F(w) quadrature = {:.12}", quad.f(&w, &v)?);
    println!("F(0)            = {:.12}", population_F0_gauss(&v));
    println!("grad F(w)       = {grad}");
    println!("P(both active)  = {:.12}", closed.orthant_prob(&w, &v)?);

    let mc = mc_f(&w, &v, &MarginalSpec::gaussian(3), 1_000_000, 42);
    println!("F(w) Monte Carlo = {:.6} +- {:.6}", mc.value, mc.std_err);
    Ok(())
}
