//! Convergence speed versus quantization level: finer log quantization
//! (smaller rho) reaches lower residuals sooner on the SVM problem.
//!
//! ```bash
//! cargo run --example rho_sweep
//! ```

use qgradtrack::experiments::{run_rho_sweep, ExperimentConfig, ExperimentKind};

fn main() -> qgradtrack::Result<()> {
    let out_dir = std::env::temp_dir().join("qgradtrack_rho_sweep");
    let cfg = ExperimentConfig::preset(ExperimentKind::RhoSweep, 1, out_dir.clone());
    println!(
        "sweeping rho over {:?} on the SVM problem, duration {} s",
        cfg.rho_list, cfg.sim.duration
    );

    let runs = run_rho_sweep(&cfg)?;
    println!(
        "\n{:>8} {:>14} {:>14} {:>14}",
        "rho", "25% residual", "50% residual", "final residual"
    );
    for (rho, out) in &runs {
        println!(
            "{rho:>8} {:>14.4e} {:>14.4e} {:>14.4e}",
            out.record_at_fraction(0.25).residual,
            out.record_at_fraction(0.5).residual,
            out.final_record().residual
        );
    }
    println!("\nper-level traces and summary.json in {}", out_dir.display());
    Ok(())
}
