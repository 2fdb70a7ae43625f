//! Drives the experiment harness from an in-memory TOML config, the same
//! path the `relu-gd-lab` binary takes.
//!
//! ```bash
//! cargo run --release --example cli_config
//! ```

use relu_gd_lab::cli::output::Outputs;
use relu_gd_lab::cli::{cmd_sweep, ExperimentConfig};

const CONFIG: &str = r#"
master_seed = 17

[sweep]
d = [2, 10]
opt = [1e-2]
b_v = [0.0, 1.0]
replicates = 2

[init]
restarts = 5

[output]
trajectories = false
"#;

fn main() -> relu_gd_lab::Result<()> {
    let cfg = ExperimentConfig::parse(CONFIG)?;
    let dir = std::env::temp_dir().join("relu-gd-lab-cli-example");
    let out = Outputs::new(&dir)?;
    cmd_sweep(&cfg, &out)?;
    println!("wrote {} files under {}", out.written().len(), dir.display());
    Ok(())
}
