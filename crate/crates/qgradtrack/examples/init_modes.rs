//! Tracking-variable initialization probe. With `y(0) = grad f(x(0))`
//! the conservation law ties the reachable equilibrium to the true
//! optimality condition; with `y(0) = 0` the conserved offset shifts
//! the stationary point, which this run makes measurable.
//!
//! ```bash
//! cargo run --example init_modes
//! ```

use qgradtrack::experiments::{run_init_compare, ExperimentConfig, ExperimentKind};

fn main() -> qgradtrack::Result<()> {
    let out_dir = std::env::temp_dir().join("qgradtrack_init_modes");
    let cfg = ExperimentConfig::preset(ExperimentKind::InitCompare, 7, out_dir.clone());
    println!(
        "quadratic ensemble, n = {}, duration {} s, identical x(0) draws",
        cfg.network.n, cfg.sim.duration
    );

    let runs = run_init_compare(&cfg)?;
    println!(
        "\n{:>12} {:>14} {:>16} {:>22}",
        "init", "final residual", "final consensus", "aggregate grad norm"
    );
    for (mode, out) in &runs {
        let last = out.final_record();
        let summary: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(out.dir.parent().unwrap().join("summary.json"))
                .unwrap_or_else(|_| "{}".into()),
        )
        .unwrap_or_default();
        let key = match mode {
            qgradtrack::InitMode::ZeroY => "zero_y",
            qgradtrack::InitMode::GradientY => "gradient_y",
        };
        println!(
            "{:>12} {:>14.4e} {:>16.4e} {:>22.4e}",
            key,
            last.residual,
            last.consensus_error,
            summary["final_aggregate_grad_norm"][key].as_f64().unwrap_or(f64::NAN)
        );
    }
    println!(
        "\nconservation holds in both runs; only the conserved offset differs.\nartifacts in {}",
        out_dir.display()
    );
    Ok(())
}
