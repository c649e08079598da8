//! Weight-balanced digraphs, their Laplacian spectra, and switching
//! schedules.
//!
//! The Laplacian convention follows consensus dynamics: off-diagonal
//! entries are the weights themselves and each diagonal entry is the
//! negated row sum, so `L * 1 = 0` exactly and, on weight-balanced
//! graphs, `1^T L = 0` as well. Connected weight-balanced graphs have a
//! single zero eigenvalue with every other eigenvalue in the open left
//! half-plane.

use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute radius of the ball around zero used to classify Laplacian
/// eigenvalues as "the" zero eigenvalue.
pub const ZERO_EIG_TOL: f64 = 1e-9;

/// Retry budget for rejection sampling in [`generate_erdos_renyi_wb`].
pub const GENERATION_RETRY_CAP: usize = 1000;

/// One network configuration: nonnegative edge weights with zero
/// diagonal. `weights[(i, j)]` is the influence of node `j` on node
/// `i`'s update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphJson", into = "GraphJson")]
pub struct WeightedDigraph {
    weights: DMatrix<f64>,
}

impl WeightedDigraph {
    /// Build a graph from a square weight matrix with finite
    /// nonnegative entries and a zero diagonal.
    pub fn new(weights: DMatrix<f64>) -> Result<Self> {
        if weights.nrows() != weights.ncols() {
            return Err(Error::DimensionMismatch {
                expected: weights.nrows(),
                found: weights.ncols(),
            });
        }
        for i in 0..weights.nrows() {
            if weights[(i, i)] != 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "nonzero diagonal weight at node {i}"
                )));
            }
            for j in 0..weights.ncols() {
                let w = weights[(i, j)];
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::InvalidConfig(format!(
                        "weight ({i}, {j}) = {w} is not finite and nonnegative"
                    )));
                }
            }
        }
        Ok(Self { weights })
    }

    pub fn node_count(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    /// Consensus Laplacian: `L[(i, j)] = w_ij` for `i != j`,
    /// `L[(i, i)] = -sum_j w_ij`. Row sums are exactly zero.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let n = self.node_count();
        let mut l = self.weights.clone();
        for i in 0..n {
            l[(i, i)] = -self.weights.row(i).sum();
        }
        l
    }

    /// True iff every node's in-strength matches its out-strength
    /// within `tol`.
    pub fn is_weight_balanced(&self, tol: f64) -> bool {
        let n = self.node_count();
        (0..n).all(|k| (self.weights.row(k).sum() - self.weights.column(k).sum()).abs() <= tol)
    }

    /// True iff every node reaches every other along positive-weight
    /// edges (forward and backward reachability from node 0).
    pub fn is_strongly_connected(&self) -> bool {
        let n = self.node_count();
        if n == 0 {
            return false;
        }
        self.reaches_all(false) && self.reaches_all(true)
    }

    fn reaches_all(&self, transpose: bool) -> bool {
        let n = self.node_count();
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for (v, visited) in seen.iter_mut().enumerate() {
                let w = if transpose {
                    self.weights[(v, u)]
                } else {
                    self.weights[(u, v)]
                };
                if w > 0.0 && !*visited {
                    *visited = true;
                    stack.push(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Complex eigenvalues of the Laplacian.
    pub fn laplacian_spectrum(&self) -> Result<Vec<Complex<f64>>> {
        let eigs = self.laplacian().complex_eigenvalues();
        if eigs.iter().any(|e| !e.re.is_finite() || !e.im.is_finite()) {
            return Err(Error::Eigensolver(
                "non-finite Laplacian eigenvalue".to_string(),
            ));
        }
        Ok(eigs.iter().copied().collect())
    }

    /// Magnitude of the real part of the slowest nonzero Laplacian
    /// mode: `min |Re lambda|` over eigenvalues outside the
    /// [`ZERO_EIG_TOL`] ball. Exactly one eigenvalue must fall inside
    /// the ball, otherwise the graph violates the connectivity
    /// assumption.
    pub fn lambda2_magnitude(&self) -> Result<f64> {
        let eigs = self.laplacian_spectrum()?;
        let near_zero = eigs.iter().filter(|e| e.norm() <= ZERO_EIG_TOL).count();
        if near_zero != 1 {
            return Err(Error::ConnectivityViolation { near_zero });
        }
        Ok(eigs
            .iter()
            .filter(|e| e.norm() > ZERO_EIG_TOL)
            .map(|e| e.re.abs())
            .fold(f64::INFINITY, f64::min))
    }
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    n: usize,
    weights: Vec<Vec<f64>>,
}

impl TryFrom<GraphJson> for WeightedDigraph {
    type Error = Error;

    fn try_from(g: GraphJson) -> Result<Self> {
        if g.weights.len() != g.n || g.weights.iter().any(|row| row.len() != g.n) {
            return Err(Error::InvalidConfig(format!(
                "weight matrix does not match declared n={}",
                g.n
            )));
        }
        let weights = DMatrix::from_fn(g.n, g.n, |i, j| g.weights[i][j]);
        WeightedDigraph::new(weights)
    }
}

impl From<WeightedDigraph> for GraphJson {
    fn from(g: WeightedDigraph) -> Self {
        let n = g.node_count();
        GraphJson {
            n,
            weights: (0..n)
                .map(|i| g.weights.row(i).iter().copied().collect())
                .collect(),
        }
    }
}

/// Generate a weight-balanced, strongly connected Erdős–Rényi digraph.
///
/// Each unordered pair `{i, j}` is linked with probability `p`; a
/// linked pair contributes both directed edges with equal weight, which
/// guarantees weight balance. Rejection-samples (with a derived seed
/// per attempt) until the draw is strongly connected, up to
/// [`GENERATION_RETRY_CAP`] attempts.
pub fn generate_erdos_renyi_wb(
    n: usize,
    p: f64,
    weight: f64,
    seed: u64,
) -> Result<WeightedDigraph> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!("need n >= 2 nodes, got {n}")));
    }
    if !p.is_finite() || p <= 0.0 || p > 1.0 {
        return Err(Error::InvalidConfig(format!(
            "linking probability must be in (0, 1], got {p}"
        )));
    }
    if !weight.is_finite() || weight <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "edge weight must be positive, got {weight}"
        )));
    }
    for attempt in 0..GENERATION_RETRY_CAP {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt as u64));
        let mut weights = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random::<f64>() < p {
                    weights[(i, j)] = weight;
                    weights[(j, i)] = weight;
                }
            }
        }
        let graph = WeightedDigraph::new(weights)?;
        if graph.is_strongly_connected() {
            return Ok(graph);
        }
    }
    Err(Error::GenerationFailure {
        n,
        p,
        seed,
        attempts: GENERATION_RETRY_CAP,
    })
}

/// How the active configuration index is derived from time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwitchingRule {
    /// Cycle through the pool in order.
    RoundRobin,
    /// Draw a pool index per dwell interval from a counter-based
    /// generator keyed on (seed, interval).
    RandomSeeded(u64),
}

/// A finite pool of configurations plus the dwell-time rule that
/// produces the switching signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchingSchedule {
    configs: Vec<WeightedDigraph>,
    dwell: f64,
    rule: SwitchingRule,
}

impl SwitchingSchedule {
    pub fn new(configs: Vec<WeightedDigraph>, dwell: f64, rule: SwitchingRule) -> Result<Self> {
        if configs.is_empty() {
            return Err(Error::InvalidConfig(
                "switching schedule needs at least one configuration".to_string(),
            ));
        }
        if !dwell.is_finite() || dwell <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "dwell time must be positive, got {dwell}"
            )));
        }
        let n = configs[0].node_count();
        if let Some(bad) = configs.iter().find(|g| g.node_count() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: bad.node_count(),
            });
        }
        Ok(Self {
            configs,
            dwell,
            rule,
        })
    }

    pub fn configs(&self) -> &[WeightedDigraph] {
        &self.configs
    }

    pub fn dwell(&self) -> f64 {
        self.dwell
    }

    pub fn rule(&self) -> SwitchingRule {
        self.rule
    }

    pub fn node_count(&self) -> usize {
        self.configs[0].node_count()
    }

    /// The configuration active at time `t >= 0`.
    pub fn topology_at(&self, t: f64) -> &WeightedDigraph {
        let interval = (t / self.dwell).floor().max(0.0) as u64;
        let m = self.configs.len() as u64;
        let idx = match self.rule {
            SwitchingRule::RoundRobin => interval % m,
            SwitchingRule::RandomSeeded(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(interval);
                rng.random_range(0..m)
            }
        };
        &self.configs[idx as usize]
    }
}
