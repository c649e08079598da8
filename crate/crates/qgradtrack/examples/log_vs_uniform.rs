//! Log-scale versus uniform quantization at the same level: the
//! uniform dead band leaves a persistent optimality gap, while the
//! log-scale residual keeps decaying to numerical zero.
//!
//! ```bash
//! cargo run --example log_vs_uniform
//! ```

use qgradtrack::experiments::{run_quantizer_compare, ExperimentConfig, ExperimentKind};

fn main() -> qgradtrack::Result<()> {
    let out_dir = std::env::temp_dir().join("qgradtrack_log_vs_uniform");
    let cfg = ExperimentConfig::preset(ExperimentKind::QuantizerCompare, 7, out_dir.clone());
    println!(
        "quadratic ensemble, n = {}, shared level rho = {}, duration {} s",
        cfg.network.n, cfg.sim.quantizer.rho, cfg.sim.duration
    );

    let runs = run_quantizer_compare(&cfg)?;
    println!("\n{:>10} {:>16} {:>16}", "kind", "steady residual", "final consensus");
    for (kind, out) in &runs {
        println!(
            "{:>10} {:>16.4e} {:>16.4e}",
            format!("{kind:?}"),
            out.steady_state_residual(),
            out.final_record().consensus_error
        );
    }
    let gap = runs[1].1.steady_state_residual() / runs[0].1.steady_state_residual();
    println!("\nuniform / log-scale steady-state residual ratio: {gap:.2e}");
    println!("traces in {}", out_dir.display());
    Ok(())
}
