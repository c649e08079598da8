//! Discrete-time simulation of the coupled quantized dynamics.
//!
//! Per agent `i`, an explicit Euler step with exact gradient-difference
//! tracking:
//!
//! ```text
//! x_i+ = x_i + h * ( sum_j w_ij (q(x_j) - q(x_i)) - alpha * y_i )
//! y_i+ = y_i + h *   sum_j w_ij (q(y_j) - q(y_i))
//!             + ( grad f_i(x_i+) - grad f_i(x_i) )
//! ```
//!
//! The gradient-difference term is the discrete realization of the
//! time derivative of the local gradient; on weight-balanced graphs it
//! makes the conservation law `sum_i y_i - sum_i grad f_i(x_i) = const`
//! hold exactly per step, up to float rounding.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis;
use crate::error::{Error, Result};
use crate::objectives::ObjectiveModel;
use crate::quantizer::QuantizerSpec;
use crate::topology::{SwitchingSchedule, WeightedDigraph};

/// Residual growth factor (relative to the initial residual) treated as
/// divergence.
const RESIDUAL_BLOWUP: f64 = 1e6;

/// How the gradient-tracking auxiliary is initialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// `y_i(0) = 0`.
    ZeroY,
    /// `y_i(0) = grad f_i(x_i(0))`, which zeroes the conservation
    /// offset so the reachable equilibrium satisfies the aggregate
    /// optimality condition.
    GradientY,
}

/// One agent's decision state and gradient-tracking auxiliary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "AgentStateJson", into = "AgentStateJson")]
pub struct AgentState {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
}

#[derive(Serialize, Deserialize)]
struct AgentStateJson {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl From<AgentStateJson> for AgentState {
    fn from(s: AgentStateJson) -> Self {
        AgentState {
            x: DVector::from_vec(s.x),
            y: DVector::from_vec(s.y),
        }
    }
}

impl From<AgentState> for AgentStateJson {
    fn from(s: AgentState) -> Self {
        AgentStateJson {
            x: s.x.iter().copied().collect(),
            y: s.y.iter().copied().collect(),
        }
    }
}

/// Simulation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Gradient step-size `alpha`.
    pub alpha: f64,
    /// Integration step in seconds.
    pub h: f64,
    /// Simulated duration in seconds.
    pub duration: f64,
    pub quantizer: QuantizerSpec,
    pub init_mode: InitMode,
    /// Seed for the initial decision states.
    pub seed: u64,
    /// Record every this many steps (>= 1).
    pub record_stride: usize,
}

/// Time-stamped metrics, with a snapshot of all agent states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: f64,
    /// Optimality gap `F(mean state) - F(x*)`.
    pub residual: f64,
    /// `max_i | x_i - mean |`.
    pub consensus_error: f64,
    /// Drift of the tracking sum away from its initial offset.
    pub conservation_defect: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub states: Option<Vec<AgentState>>,
}

/// Draw initial states: `x_i(0)` componentwise uniform in `[-1, 1]`
/// from the seed, `y_i(0)` per the init mode.
pub fn initialize<O: ObjectiveModel>(
    objectives: &[O],
    mode: InitMode,
    seed: u64,
) -> Result<Vec<AgentState>> {
    let m = check_dims(objectives)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(objectives
        .iter()
        .map(|obj| {
            let x = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
            let y = match mode {
                InitMode::ZeroY => DVector::zeros(m),
                InitMode::GradientY => obj.gradient(&x),
            };
            AgentState { x, y }
        })
        .collect())
}

fn check_dims<O: ObjectiveModel>(objectives: &[O]) -> Result<usize> {
    let m = objectives
        .first()
        .ok_or_else(|| Error::InvalidConfig("need at least one objective".to_string()))?
        .dim();
    for obj in objectives {
        if obj.dim() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: obj.dim(),
            });
        }
    }
    Ok(m)
}

/// One synchronous update of all agents over `graph`.
///
/// A non-finite updated component yields a divergence error naming the
/// agent; the simulation loop fills in the time and partial trace.
pub fn step<O: ObjectiveModel>(
    states: &[AgentState],
    graph: &WeightedDigraph,
    objectives: &[O],
    cfg: &SimConfig,
) -> Result<Vec<AgentState>> {
    let n = states.len();
    if graph.node_count() != n || objectives.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: graph.node_count().min(objectives.len()),
        });
    }
    let q = &cfg.quantizer;
    let qx: Vec<DVector<f64>> = states
        .iter()
        .map(|s| q.quantize_vector(&s.x))
        .collect::<Result<_>>()?;
    let qy: Vec<DVector<f64>> = states
        .iter()
        .map(|s| q.quantize_vector(&s.y))
        .collect::<Result<_>>()?;

    let w = graph.weights();
    let mut next = Vec::with_capacity(n);
    for i in 0..n {
        let mut net_x = DVector::zeros(states[i].x.len());
        let mut net_y = DVector::zeros(states[i].x.len());
        for j in 0..n {
            let wij = w[(i, j)];
            if wij > 0.0 {
                net_x.axpy(wij, &(&qx[j] - &qx[i]), 1.0);
                net_y.axpy(wij, &(&qy[j] - &qy[i]), 1.0);
            }
        }
        let g_old = objectives[i].gradient(&states[i].x);
        let x_new = &states[i].x + (net_x - &states[i].y * cfg.alpha) * cfg.h;
        let g_new = objectives[i].gradient(&x_new);
        let y_new = &states[i].y + net_y * cfg.h + (g_new - g_old);
        if let Some(agent) = [&x_new, &y_new]
            .iter()
            .position(|v| v.iter().any(|c| !c.is_finite()))
            .map(|_| i)
        {
            return Err(Error::Divergence {
                t: f64::NAN,
                agent,
                trace: Vec::new(),
            });
        }
        next.push(AgentState { x: x_new, y: y_new });
    }
    Ok(next)
}

/// Deviation of the tracking sum from its initial offset:
/// `| (sum_i y_i - sum_i grad f_i(x_i)) - offset0 |_inf`.
pub fn conservation_defect<O: ObjectiveModel>(
    states: &[AgentState],
    objectives: &[O],
    offset0: &DVector<f64>,
) -> f64 {
    let mut sum = -offset0.clone();
    for (s, obj) in states.iter().zip(objectives) {
        sum += &s.y - obj.gradient(&s.x);
    }
    sum.amax()
}

/// `max_i | x_i - mean |_2`.
pub fn consensus_error(states: &[AgentState]) -> f64 {
    assert!(!states.is_empty(), "consensus error of an empty state set");
    let mut mean = states[0].x.clone();
    for s in &states[1..] {
        mean += &s.x;
    }
    mean /= states.len() as f64;
    states
        .iter()
        .map(|s| (&s.x - &mean).norm())
        .fold(0.0, f64::max)
}

/// The conservation offset fixed at initialization:
/// `sum_i y_i(0) - sum_i grad f_i(x_i(0))`.
pub fn conservation_offset<O: ObjectiveModel>(
    states: &[AgentState],
    objectives: &[O],
) -> DVector<f64> {
    let m = states[0].x.len();
    let mut offset = DVector::zeros(m);
    for (s, obj) in states.iter().zip(objectives) {
        offset += &s.y - obj.gradient(&s.x);
    }
    offset
}

/// Run the dynamics over a switching schedule, recording metrics every
/// `record_stride` steps (plus the initial and final instants).
///
/// `xstar` is the centralized optimum used for the residual curve. A
/// step-size above the sufficient bound is allowed but logged as a
/// warning. Divergence (non-finite state, or residual growth by a
/// factor of 1e6) aborts with the partial trace attached.
pub fn simulate<O: ObjectiveModel>(
    schedule: &SwitchingSchedule,
    objectives: &[O],
    cfg: &SimConfig,
    xstar: &DVector<f64>,
) -> Result<Vec<TraceRecord>> {
    let m = check_dims(objectives)?;
    if objectives.len() != schedule.node_count() {
        return Err(Error::DimensionMismatch {
            expected: schedule.node_count(),
            found: objectives.len(),
        });
    }
    if xstar.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: xstar.len(),
        });
    }
    if !cfg.h.is_finite() || cfg.h <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "integration step must be positive, got {}",
            cfg.h
        )));
    }
    if cfg.h > schedule.dwell() {
        return Err(Error::InvalidConfig(format!(
            "integration step {} exceeds the dwell time {}",
            cfg.h,
            schedule.dwell()
        )));
    }
    if cfg.record_stride == 0 {
        return Err(Error::InvalidConfig(
            "record stride must be at least 1".to_string(),
        ));
    }
    if cfg.duration < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "duration must be nonnegative, got {}",
            cfg.duration
        )));
    }

    let gamma = objectives
        .iter()
        .map(|o| o.curvature_upper_bound())
        .fold(0.0f64, f64::max);
    if let Ok(alpha_bar) = analysis::alpha_bar(schedule, gamma) {
        if cfg.alpha >= alpha_bar {
            log::warn!(
                "step-size alpha = {} is at or above the sufficient bound {alpha_bar:.6e}; \
                 the bound is sufficient, not necessary, so continuing",
                cfg.alpha
            );
        }
    }

    let fstar: f64 = objectives.iter().map(|o| o.value(xstar)).sum();
    let mut states = initialize(objectives, cfg.init_mode, cfg.seed)?;
    let offset0 = conservation_offset(&states, objectives);

    let steps = (cfg.duration / cfg.h).round() as usize;
    let mut trace = Vec::with_capacity(steps / cfg.record_stride + 2);
    let record =
        |t: f64, states: &[AgentState], trace: &mut Vec<TraceRecord>| -> f64 {
            let mean = mean_state(states);
            let residual = objectives.iter().map(|o| o.value(&mean)).sum::<f64>() - fstar;
            trace.push(TraceRecord {
                t,
                residual,
                consensus_error: consensus_error(states),
                conservation_defect: conservation_defect(states, objectives, &offset0),
                states: Some(states.to_vec()),
            });
            residual
        };

    let residual0 = record(0.0, &states, &mut trace);
    let blowup = RESIDUAL_BLOWUP * residual0.abs().max(1.0);
    for k in 0..steps {
        let t = k as f64 * cfg.h;
        let graph = schedule.topology_at(t);
        states = match step(&states, graph, objectives, cfg) {
            Ok(next) => next,
            Err(Error::Divergence { agent, .. }) => {
                return Err(Error::Divergence {
                    t,
                    agent,
                    trace,
                });
            }
            Err(e) => return Err(e),
        };
        let k1 = k + 1;
        if k1 % cfg.record_stride == 0 || k1 == steps {
            let t1 = k1 as f64 * cfg.h;
            let residual = record(t1, &states, &mut trace);
            if residual > blowup {
                let agent = 0;
                return Err(Error::Divergence {
                    t: t1,
                    agent,
                    trace,
                });
            }
        }
    }
    Ok(trace)
}

fn mean_state(states: &[AgentState]) -> DVector<f64> {
    let mut mean = states[0].x.clone();
    for s in &states[1..] {
        mean += &s.x;
    }
    mean / states.len() as f64
}

/// Write a trace as CSV with header
/// `t,residual,consensus_error,conservation_defect`, floats rendered
/// with 17 significant digits.
pub fn write_trace_csv(path: &std::path::Path, trace: &[TraceRecord]) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "t,residual,consensus_error,conservation_defect")?;
    for r in trace {
        writeln!(
            out,
            "{},{},{},{}",
            crate::fmt_float(r.t),
            crate::fmt_float(r.residual),
            crate::fmt_float(r.consensus_error),
            crate::fmt_float(r.conservation_defect)
        )?;
    }
    Ok(())
}

/// Write a trace as JSON, with full state snapshots only when
/// requested.
pub fn write_trace_json(
    path: &std::path::Path,
    trace: &[TraceRecord],
    include_states: bool,
) -> Result<()> {
    let out = std::io::BufWriter::new(std::fs::File::create(path)?);
    if include_states {
        serde_json::to_writer(out, trace)?;
    } else {
        let stripped: Vec<TraceRecord> = trace
            .iter()
            .map(|r| TraceRecord {
                states: None,
                ..r.clone()
            })
            .collect();
        serde_json::to_writer(out, &stripped)?;
    }
    Ok(())
}
