//! Local objective models: value, gradient, Hessian, and the curvature
//! bound `gamma` that feeds the step-size rule.
//!
//! Evaluation methods panic on dimension mismatch (a programming error,
//! consistent with `nalgebra`); construction and data-driven operations
//! return [`Result`].

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A twice-differentiable local objective with a global curvature bound
/// `hessian(x) <= gamma * I`.
pub trait ObjectiveModel {
    fn dim(&self) -> usize;
    fn value(&self, x: &DVector<f64>) -> f64;
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64>;
    fn curvature_upper_bound(&self) -> f64;
}

/// `f(x) = 0.5 x^T A x + b^T x + c` with symmetric positive
/// semidefinite `A`.
#[derive(Debug, Clone)]
pub struct QuadraticObjective {
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: f64,
    gamma: f64,
}

impl QuadraticObjective {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, c: f64) -> Result<Self> {
        let m = a.nrows();
        if a.ncols() != m || b.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: a.ncols().max(b.len()),
            });
        }
        let scale = a.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0);
        if (&a - a.transpose()).iter().any(|d| d.abs() > 1e-12 * scale) {
            return Err(Error::InvalidConfig(
                "quadratic matrix must be symmetric".to_string(),
            ));
        }
        let eigs = a.symmetric_eigenvalues();
        let min = eigs.min();
        if min < -1e-10 * scale {
            return Err(Error::InvalidConfig(format!(
                "quadratic matrix must be positive semidefinite (min eigenvalue {min})"
            )));
        }
        let gamma = eigs.max();
        Ok(Self { a, b, c, gamma })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn linear(&self) -> &DVector<f64> {
        &self.b
    }
}

impl ObjectiveModel for QuadraticObjective {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        assert_eq!(x.len(), self.dim(), "state dimension mismatch");
        0.5 * (x.transpose() * &self.a * x)[(0, 0)] + self.b.dot(x) + self.c
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.dim(), "state dimension mismatch");
        &self.a * x + &self.b
    }

    fn hessian(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        self.a.clone()
    }

    fn curvature_upper_bound(&self) -> f64 {
        self.gamma
    }
}

/// One agent's share of the distributed soft-margin SVM.
///
/// Decision variable `x = [omega; nu]` with `omega` of the feature
/// dimension. The hinge is smoothed by
/// `L(z, mu) = softplus(mu z) / mu` applied to
/// `z_j = 1 - l_j (omega . chi_j - nu)`:
///
/// `f(omega, nu) = omega . omega + C * sum_j L(z_j, mu)`
#[derive(Debug, Clone)]
pub struct SvmLocalObjective {
    feature_dim: usize,
    points: Vec<(DVector<f64>, f64)>,
    c: f64,
    mu: f64,
    gamma: f64,
}

impl SvmLocalObjective {
    pub fn new(feature_dim: usize, points: Vec<(DVector<f64>, f64)>, c: f64, mu: f64) -> Result<Self> {
        if !c.is_finite() || c <= 0.0 {
            return Err(Error::InvalidConfig(format!("C must be positive, got {c}")));
        }
        if !mu.is_finite() || mu <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "smoothing mu must be positive, got {mu}"
            )));
        }
        for (chi, label) in &points {
            if chi.len() != feature_dim {
                return Err(Error::DimensionMismatch {
                    expected: feature_dim,
                    found: chi.len(),
                });
            }
            if *label != 1.0 && *label != -1.0 {
                return Err(Error::InvalidConfig(format!(
                    "labels must be +1 or -1, got {label}"
                )));
            }
        }
        // Hessian of the loss along datum j is mu * sigma' * a_j a_j^T
        // with a_j = [-l_j chi_j; l_j] and sigma' <= 1/4, so a global
        // curvature bound is 2 + C * (mu / 4) * sum_j (|chi_j|^2 + 1).
        let loss_curv: f64 = points.iter().map(|(chi, _)| chi.norm_squared() + 1.0).sum();
        let gamma = 2.0 + c * (mu / 4.0) * loss_curv;
        Ok(Self {
            feature_dim,
            points,
            c,
            mu,
            gamma,
        })
    }

    pub fn points(&self) -> &[(DVector<f64>, f64)] {
        &self.points
    }

    fn margins(&self, x: &DVector<f64>) -> impl Iterator<Item = (usize, f64)> + '_ {
        let omega = x.rows(0, self.feature_dim).clone_owned();
        let nu = x[self.feature_dim];
        self.points
            .iter()
            .enumerate()
            .map(move |(j, (chi, label))| (j, 1.0 - label * (omega.dot(chi) - nu)))
    }
}

impl ObjectiveModel for SvmLocalObjective {
    fn dim(&self) -> usize {
        self.feature_dim + 1
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        assert_eq!(x.len(), self.dim(), "state dimension mismatch");
        let omega = x.rows(0, self.feature_dim);
        let reg = omega.dot(&omega);
        let loss: f64 = self
            .margins(x)
            .map(|(_, z)| softplus(self.mu * z) / self.mu)
            .sum();
        reg + self.c * loss
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.dim(), "state dimension mismatch");
        let mut grad = DVector::zeros(self.dim());
        for k in 0..self.feature_dim {
            grad[k] = 2.0 * x[k];
        }
        for (j, z) in self.margins(x) {
            let s = logistic(self.mu * z);
            let (chi, label) = &self.points[j];
            for k in 0..self.feature_dim {
                grad[k] -= self.c * s * label * chi[k];
            }
            grad[self.feature_dim] += self.c * s * label;
        }
        grad
    }

    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        assert_eq!(x.len(), self.dim(), "state dimension mismatch");
        let m = self.dim();
        let mut h = DMatrix::zeros(m, m);
        for k in 0..self.feature_dim {
            h[(k, k)] = 2.0;
        }
        for (j, z) in self.margins(x) {
            let s = logistic(self.mu * z);
            let weight = self.c * self.mu * s * (1.0 - s);
            let (chi, label) = &self.points[j];
            let mut a = DVector::zeros(m);
            for k in 0..self.feature_dim {
                a[k] = -label * chi[k];
            }
            a[self.feature_dim] = *label;
            h.syger(weight, &a, &a, 1.0);
        }
        // syger fills the lower triangle; mirror it.
        for i in 0..m {
            for j in (i + 1)..m {
                h[(i, j)] = h[(j, i)];
            }
        }
        h
    }

    fn curvature_upper_bound(&self) -> f64 {
        self.gamma
    }
}

/// Numerically stable `log(1 + exp(t))`.
pub fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

/// Numerically stable logistic function.
pub fn logistic(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Max componentwise gap between the analytic gradient and a central
/// finite difference with step `h`.
pub fn finite_difference_check<O: ObjectiveModel>(obj: &O, x: &DVector<f64>, h: f64) -> Result<f64> {
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "finite-difference step must be positive, got {h}"
        )));
    }
    let grad = obj.gradient(x);
    let mut worst = 0.0f64;
    for k in 0..x.len() {
        let mut plus = x.clone();
        plus[k] += h;
        let mut minus = x.clone();
        minus[k] -= h;
        let fd = (obj.value(&plus) - obj.value(&minus)) / (2.0 * h);
        worst = worst.max((grad[k] - fd).abs());
    }
    Ok(worst)
}

/// Deterministic synthetic 2-D dataset for the SVM experiment.
///
/// Points come in mirrored pairs across the line `x1 = x2` with flipped
/// labels, every point at least `margin / sqrt(2)` away from the line,
/// so the max-margin direction is proportional to `[1, -1]` with zero
/// offset. Labels are `sign(x1 - x2)`. For odd `n_points` the final
/// mirror partner is dropped, which breaks exact symmetry.
pub fn generate_dataset(
    n_points: usize,
    dim: usize,
    margin: f64,
    seed: u64,
) -> Result<Vec<(DVector<f64>, f64)>> {
    if dim != 2 {
        return Err(Error::InvalidConfig(format!(
            "dataset generation supports dim = 2 only, got {dim}"
        )));
    }
    if !margin.is_finite() || margin <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "margin must be positive, got {margin}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n_points);
    while points.len() < n_points {
        let along: f64 = rng.random_range(-1.0..1.0);
        let gap: f64 = rng.random_range(margin..margin + 1.0);
        points.push((
            DVector::from_vec(vec![along + gap / 2.0, along - gap / 2.0]),
            1.0,
        ));
        if points.len() < n_points {
            points.push((
                DVector::from_vec(vec![along - gap / 2.0, along + gap / 2.0]),
                -1.0,
            ));
        }
    }
    Ok(points)
}

/// Assign `ceil(fraction * n_points)` point indices to each of
/// `n_agents` agents, sampled uniformly without replacement per agent
/// and independently across agents.
pub fn assign_points(
    n_agents: usize,
    n_points: usize,
    fraction: f64,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    if !fraction.is_finite() || fraction <= 0.0 || fraction > 1.0 {
        return Err(Error::InvalidConfig(format!(
            "assignment fraction must be in (0, 1], got {fraction}"
        )));
    }
    let k = (fraction * n_points as f64).ceil() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n_agents)
        .map(|_| {
            let mut idx = rand::seq::index::sample(&mut rng, n_points, k).into_vec();
            idx.sort_unstable();
            idx
        })
        .collect())
}

/// Write a dataset as CSV with header `x1,x2,label`.
pub fn write_dataset_csv(path: &std::path::Path, data: &[(DVector<f64>, f64)]) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "x1,x2,label")?;
    for (chi, label) in data {
        writeln!(
            out,
            "{},{},{}",
            crate::fmt_float(chi[0]),
            crate::fmt_float(chi[1]),
            *label as i64
        )?;
    }
    Ok(())
}

/// Read a dataset written by [`write_dataset_csv`].
pub fn read_dataset_csv(path: &std::path::Path) -> Result<Vec<(DVector<f64>, f64)>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some("x1,x2,label") => {}
        other => {
            return Err(Error::InvalidConfig(format!(
                "unexpected dataset header: {other:?}"
            )))
        }
    }
    let mut data = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let mut next = || -> Result<f64> {
            fields
                .next()
                .and_then(|f| f.parse::<f64>().ok())
                .ok_or_else(|| {
                    Error::InvalidConfig(format!("malformed dataset row {}", lineno + 2))
                })
        };
        let x1 = next()?;
        let x2 = next()?;
        let label = next()?;
        data.push((DVector::from_vec(vec![x1, x2]), label));
    }
    Ok(data)
}
