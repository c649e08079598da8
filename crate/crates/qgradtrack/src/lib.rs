//! Quantized gradient-tracking distributed optimization over switching
//! weight-balanced digraphs.
//!
//! A network of agents minimizes `F(x) = sum_i f_i(x_i)` subject to
//! consensus, exchanging *logarithmically quantized* states. Each
//! agent runs a pair of coupled dynamics: the decision state follows a
//! quantized consensus term plus a gradient-tracking drive `-alpha y`,
//! while the auxiliary `y` tracks the drift of the local gradient so
//! that the network-wide sum `sum y_i - sum grad f_i` is conserved.
//! Log-scale quantization has relative precision, so the consensus
//! force retains resolution near the optimum and the scheme converges
//! without the steady-state gap that uniform quantization leaves.
//!
//! The crate is organized by concern:
//!
//! * [`quantizer`] — log-scale / uniform / identity quantization with
//!   tight sector bounds;
//! * [`topology`] — weight-balanced digraphs, Laplacian spectra,
//!   Erdős–Rényi generation, switching schedules;
//! * [`objectives`] — quadratic and smooth-hinge SVM objectives with
//!   curvature bounds, plus dataset generation;
//! * [`dynamics`] — the Euler discretization of the coupled dynamics
//!   with metric traces;
//! * [`analysis`] — the sufficient step-size bound and spectral
//!   diagnostics of the linearized loop;
//! * [`oracle`] — the centralized reference solver;
//! * [`experiments`] — reproducible experiment presets and artifact
//!   emission.
//!
//! Start from the `examples/` directory: each example exercises one
//! capability end to end (`cargo run --example svm_paper`, etc.). The
//! `qgradtrack` binary drives the same presets from the command line.

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod objectives;
pub mod oracle;
pub mod quantizer;
pub mod topology;

pub use analysis::{alpha_bar, build_mq, sector_matrix_q, spectrum_check, SpectrumReport};
pub use dynamics::{
    conservation_defect, consensus_error, initialize, simulate, step, AgentState, InitMode,
    SimConfig, TraceRecord,
};
pub use error::{Error, Result};
pub use experiments::{ExperimentConfig, ExperimentKind};
pub use objectives::{
    finite_difference_check, generate_dataset, ObjectiveModel, QuadraticObjective,
    SvmLocalObjective,
};
pub use oracle::{centralized_optimize, OracleResult};
pub use quantizer::{QuantizerKind, QuantizerSpec};
pub use topology::{
    generate_erdos_renyi_wb, SwitchingRule, SwitchingSchedule, WeightedDigraph,
};

/// Render a float with 17 significant digits so CSV round-trips are
/// bit-faithful.
pub(crate) fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    #[test]
    fn float_format_round_trips() {
        for &x in &[
            0.1,
            -2.5e-7,
            1.0 / 3.0,
            f64::MIN_POSITIVE,
            1.234_567_890_123_456_7e5,
        ] {
            let s = super::fmt_float(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
    }
}
