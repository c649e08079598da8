//! Centralized reference solver for the aggregate problem.
//!
//! Gradient descent with Armijo backtracking on
//! `F(z) = sum_i f_i(z)`, started from the origin. The first trial
//! step is `1 / gamma_total`; later iterations open the line search at
//! the Barzilai-Borwein spectral step with a nonmonotone (windowed)
//! Armijo acceptance, which keeps a conservative curvature bound from
//! pinning the whole descent to a tiny step while never rising above
//! the starting value. Used to produce `x*` and `F(x*)` for residual
//! curves and acceptance checks.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::ObjectiveModel;

/// Default gradient-norm tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Default iteration budget.
pub const DEFAULT_MAX_ITER: usize = 1_000_000;

const ARMIJO_C1: f64 = 1e-4;
const MAX_HALVINGS: usize = 200;
const NONMONOTONE_WINDOW: usize = 10;

/// Solution of the aggregate problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "OracleResultJson", into = "OracleResultJson")]
pub struct OracleResult {
    pub xstar: DVector<f64>,
    pub fstar: f64,
    pub iterations: usize,
    /// Aggregate gradient norm at termination.
    pub grad_norm: f64,
}

#[derive(Serialize, Deserialize)]
struct OracleResultJson {
    xstar: Vec<f64>,
    fstar: f64,
    iterations: usize,
    grad_norm: f64,
}

impl From<OracleResultJson> for OracleResult {
    fn from(r: OracleResultJson) -> Self {
        OracleResult {
            xstar: DVector::from_vec(r.xstar),
            fstar: r.fstar,
            iterations: r.iterations,
            grad_norm: r.grad_norm,
        }
    }
}

impl From<OracleResult> for OracleResultJson {
    fn from(r: OracleResult) -> Self {
        OracleResultJson {
            xstar: r.xstar.iter().copied().collect(),
            fstar: r.fstar,
            iterations: r.iterations,
            grad_norm: r.grad_norm,
        }
    }
}

/// Minimize `sum_i f_i(z)` over a single `z`.
///
/// Terminates when the aggregate gradient norm drops to `tol`;
/// exhausting `max_iter` (or stalling in the line search) is a
/// non-convergence error carrying the final gradient norm.
pub fn centralized_optimize<O: ObjectiveModel>(
    objectives: &[O],
    tol: f64,
    max_iter: usize,
) -> Result<OracleResult> {
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
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let gamma_total: f64 = objectives.iter().map(|o| o.curvature_upper_bound()).sum();
    let step0 = if gamma_total > 0.0 { 1.0 / gamma_total } else { 1.0 };

    let value = |z: &DVector<f64>| -> f64 { objectives.iter().map(|o| o.value(z)).sum() };
    let gradient = |z: &DVector<f64>| -> DVector<f64> {
        let mut g = DVector::zeros(m);
        for o in objectives {
            g += o.gradient(z);
        }
        g
    };

    let mut z = DVector::zeros(m);
    let mut fz = value(&z);
    let mut prev: Option<(DVector<f64>, DVector<f64>)> = None; // (z, g)
    let mut recent = std::collections::VecDeque::from([fz]);
    for iteration in 0..max_iter {
        let g = gradient(&z);
        let grad_norm = g.norm();
        if grad_norm <= tol {
            return Ok(OracleResult {
                xstar: z,
                fstar: fz,
                iterations: iteration,
                grad_norm,
            });
        }
        // Barzilai-Borwein trial step from the last displacement;
        // 1/gamma_total on the first iteration or when the curvature
        // estimate degenerates.
        let trial = prev
            .as_ref()
            .and_then(|(z_prev, g_prev)| {
                let s = &z - z_prev;
                let y = &g - g_prev;
                let sy = s.dot(&y);
                (sy > 0.0).then(|| s.norm_squared() / sy)
            })
            .filter(|t| t.is_finite() && *t > 0.0)
            .unwrap_or(step0);
        let f_ref = recent.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let descent = -grad_norm * grad_norm;
        let mut t = trial;
        let mut halvings = 0;
        loop {
            let candidate = &z - &g * t;
            let fc = value(&candidate);
            if fc.is_finite() && fc <= f_ref + ARMIJO_C1 * t * descent {
                prev = Some((std::mem::replace(&mut z, candidate), g));
                fz = fc;
                break;
            }
            halvings += 1;
            if halvings > MAX_HALVINGS {
                return Err(Error::NonConvergence {
                    iterations: iteration,
                    grad_norm,
                });
            }
            t *= 0.5;
        }
        recent.push_back(fz);
        if recent.len() > NONMONOTONE_WINDOW {
            recent.pop_front();
        }
    }
    let grad_norm = gradient(&z).norm();
    if grad_norm <= tol {
        return Ok(OracleResult {
            xstar: z,
            fstar: fz,
            iterations: max_iter,
            grad_norm,
        });
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        grad_norm,
    })
}
