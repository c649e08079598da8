//! Step-size bound and spectral diagnostics of the linearized closed
//! loop.
//!
//! The coupled dynamics linearize, at each instant, to
//! `d/dt [x; y] = M_q [x; y]` with
//!
//! ```text
//! M_q = | Wq            -alpha I   |        Wq = (L (x) I_m) Q
//!       | H Wq          Wq - alpha H |
//! ```
//!
//! where `Q` is the diagonal of quantization ratios, `H` the block
//! diagonal of local Hessians, and `L` the graph Laplacian. `M_q`
//! splits as `M_q0 + alpha M1` with `M_q0` block lower triangular; the
//! stable step-size range is governed by the slowest nonzero Laplacian
//! mode divided by the curvature bound.

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantizer::{QuantizerKind, QuantizerSpec, UNDERFLOW_GUARD};
use crate::topology::{SwitchingSchedule, WeightedDigraph};

/// Modulus below which an eigenvalue of the closed-loop matrix is
/// classified as zero.
pub const SPECTRUM_ZERO_TOL: f64 = 1e-8;

/// An eigenvalue of the closed-loop matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

/// Classification of a closed-loop spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// State dimension `m`; a nominal report has exactly `m` zero
    /// eigenvalues.
    pub state_dim: usize,
    /// Eigenvalues within [`SPECTRUM_ZERO_TOL`] of zero.
    pub zero_count: usize,
    /// Largest real part among the non-zero-classified eigenvalues
    /// (`-inf` when every eigenvalue is classified zero).
    pub max_re_nonzero: f64,
    pub eigenvalues: Vec<Eigenvalue>,
}

impl SpectrumReport {
    /// True when the spectrum matches the stable pattern: one set of
    /// `m` zero eigenvalues, everything else in the open left
    /// half-plane.
    pub fn is_nominal(&self) -> bool {
        self.zero_count == self.state_dim && self.max_re_nonzero < 0.0
    }
}

/// Sufficient step-size bound: the minimum over configurations of the
/// slowest nonzero Laplacian mode, divided by the curvature bound.
pub fn alpha_bar(schedule: &SwitchingSchedule, gamma: f64) -> Result<f64> {
    if !gamma.is_finite() || gamma <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "curvature bound must be positive, got {gamma}"
        )));
    }
    let mut min_lambda2 = f64::INFINITY;
    for config in schedule.configs() {
        min_lambda2 = min_lambda2.min(config.lambda2_magnitude()?);
    }
    Ok(min_lambda2 / gamma)
}

/// Diagonal of the sector matrix `Q`: entries `q(x_k) / x_k`, with the
/// limit convention of `1` at `x_k = 0`. Log-scale entries always lie
/// in the tight sector `[exp(-rho/2), exp(rho/2)]`.
pub fn sector_matrix_q(x: &DVector<f64>, spec: &QuantizerSpec) -> Result<DVector<f64>> {
    match spec.kind {
        QuantizerKind::LogScale | QuantizerKind::Uniform => {}
        QuantizerKind::Identity => {
            return Err(Error::UnsupportedQuantizer {
                kind: "identity",
                operation: "sector_matrix_q",
            })
        }
    }
    let mut diag = DVector::zeros(x.len());
    for (k, &xk) in x.iter().enumerate() {
        diag[k] = if xk == 0.0 || (spec.kind == QuantizerKind::LogScale && xk.abs() < UNDERFLOW_GUARD)
        {
            1.0
        } else {
            spec.quantize(xk)? / xk
        };
    }
    Ok(diag)
}

/// Assemble the `2nm x 2nm` closed-loop matrix from a graph, the
/// sector diagonal `q_diag` (length `nm`), the per-agent Hessian
/// blocks, and the step-size.
pub fn build_mq(
    graph: &WeightedDigraph,
    q_diag: &DVector<f64>,
    hessians: &[DMatrix<f64>],
    alpha: f64,
) -> Result<DMatrix<f64>> {
    let n = graph.node_count();
    if hessians.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: hessians.len(),
        });
    }
    let m = if n == 0 { 0 } else { hessians[0].nrows() };
    for h in hessians {
        if h.nrows() != m || h.ncols() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: h.nrows().max(h.ncols()),
            });
        }
    }
    let nm = n * m;
    if q_diag.len() != nm {
        return Err(Error::DimensionMismatch {
            expected: nm,
            found: q_diag.len(),
        });
    }

    // Wq = (L (x) I_m) diag(q): scale column k of the Kronecker product.
    let mut wq = graph.laplacian().kronecker(&DMatrix::identity(m, m));
    for k in 0..nm {
        let scale = q_diag[k];
        wq.column_mut(k).scale_mut(scale);
    }
    let mut h_block = DMatrix::zeros(nm, nm);
    for (i, h) in hessians.iter().enumerate() {
        h_block.view_mut((i * m, i * m), (m, m)).copy_from(h);
    }
    let h_wq = &h_block * &wq;

    let mut mq = DMatrix::zeros(2 * nm, 2 * nm);
    mq.view_mut((0, 0), (nm, nm)).copy_from(&wq);
    mq.view_mut((0, nm), (nm, nm))
        .copy_from(&(DMatrix::identity(nm, nm) * -alpha));
    mq.view_mut((nm, 0), (nm, nm)).copy_from(&h_wq);
    mq.view_mut((nm, nm), (nm, nm))
        .copy_from(&(wq - h_block * alpha));
    Ok(mq)
}

/// Classify the eigenvalues of a closed-loop matrix against
/// [`SPECTRUM_ZERO_TOL`].
pub fn spectrum_check(matrix: &DMatrix<f64>, state_dim: usize) -> Result<SpectrumReport> {
    if matrix.nrows() != matrix.ncols() {
        return Err(Error::DimensionMismatch {
            expected: matrix.nrows(),
            found: matrix.ncols(),
        });
    }
    let eigs = matrix.complex_eigenvalues();
    if eigs.iter().any(|e| !e.re.is_finite() || !e.im.is_finite()) {
        return Err(Error::Eigensolver(
            "non-finite eigenvalue in closed-loop spectrum".to_string(),
        ));
    }
    let zero_count = eigs
        .iter()
        .filter(|e| complex_norm(e) <= SPECTRUM_ZERO_TOL)
        .count();
    let max_re_nonzero = eigs
        .iter()
        .filter(|e| complex_norm(e) > SPECTRUM_ZERO_TOL)
        .map(|e| e.re)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(SpectrumReport {
        state_dim,
        zero_count,
        max_re_nonzero,
        eigenvalues: eigs.iter().map(|e| Eigenvalue { re: e.re, im: e.im }).collect(),
    })
}

fn complex_norm(e: &Complex<f64>) -> f64 {
    (e.re * e.re + e.im * e.im).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{generate_erdos_renyi_wb, SwitchingRule};
    use approx::assert_relative_eq;
    use nalgebra::dmatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn undirected_cycle(n: usize) -> WeightedDigraph {
        let mut w = DMatrix::zeros(n, n);
        for i in 0..n {
            let j = (i + 1) % n;
            w[(i, j)] = 1.0;
            w[(j, i)] = 1.0;
        }
        WeightedDigraph::new(w).unwrap()
    }

    fn complete(n: usize) -> WeightedDigraph {
        WeightedDigraph::new(DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { 1.0 }))
            .unwrap()
    }

    fn schedule_of(configs: Vec<WeightedDigraph>) -> SwitchingSchedule {
        SwitchingSchedule::new(configs, 0.1, SwitchingRule::RoundRobin).unwrap()
    }

    #[test]
    fn alpha_bar_examples() {
        let s = schedule_of(vec![undirected_cycle(4)]);
        assert_relative_eq!(alpha_bar(&s, 2.0).unwrap(), 1.0, epsilon = 1e-9);

        let s = schedule_of(vec![undirected_cycle(4), complete(4)]);
        assert_relative_eq!(alpha_bar(&s, 2.0).unwrap(), 1.0, epsilon = 1e-9);

        assert!(alpha_bar(&s, 2e12).unwrap() < 1e-11);
        assert!(alpha_bar(&s, 0.0).is_err());
    }

    #[test]
    fn alpha_bar_propagates_connectivity_violation() {
        let mut w = DMatrix::zeros(4, 4);
        w[(0, 1)] = 1.0;
        w[(1, 0)] = 1.0;
        w[(2, 3)] = 1.0;
        w[(3, 2)] = 1.0;
        let s = schedule_of(vec![WeightedDigraph::new(w).unwrap()]);
        assert!(matches!(
            alpha_bar(&s, 1.0),
            Err(Error::ConnectivityViolation { .. })
        ));
    }

    #[test]
    fn sector_matrix_examples() {
        let spec = QuantizerSpec::log_scale(0.25).unwrap();
        let ones = DVector::from_element(4, 1.0);
        assert_eq!(sector_matrix_q(&ones, &spec).unwrap(), ones);

        let x = DVector::from_vec(vec![0.3f64.exp()]);
        let q = sector_matrix_q(&x, &spec).unwrap();
        assert_relative_eq!(q[0], (-0.05f64).exp(), max_relative = 1e-13);

        let x = DVector::from_vec(vec![2.0, 0.0]);
        let q = sector_matrix_q(&x, &spec).unwrap();
        assert_eq!(q[1], 1.0);

        let (lo, hi) = spec.sector_ratio_bounds().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = DVector::from_fn(50, |_, _| rng.random_range(-1e3..1e3));
        for v in sector_matrix_q(&x, &spec).unwrap().iter() {
            assert!(*v >= lo - 1e-12 && *v <= hi + 1e-12);
        }

        assert!(sector_matrix_q(&ones, &QuantizerSpec::identity()).is_err());
    }

    #[test]
    fn build_mq_scalar_no_edges() {
        let graph = WeightedDigraph::new(DMatrix::zeros(1, 1)).unwrap();
        let gamma = 3.0;
        let mq = build_mq(
            &graph,
            &DVector::from_element(1, 1.0),
            &[DMatrix::from_element(1, 1, gamma)],
            0.7,
        )
        .unwrap();
        assert_eq!(mq, dmatrix![0.0, -0.7; 0.0, -0.7 * gamma]);
    }

    #[test]
    fn build_mq_alpha_zero_is_block_triangular() {
        let graph = undirected_cycle(4);
        let m = 2;
        let hessians: Vec<_> = (0..4)
            .map(|i| DMatrix::identity(m, m) * (1.0 + i as f64 * 0.3))
            .collect();
        let q = DVector::from_element(4 * m, 1.0);
        let m0 = build_mq(&graph, &q, &hessians, 0.0).unwrap();
        let nm = 4 * m;
        let l_kron = graph.laplacian().kronecker(&DMatrix::identity(m, m));
        assert_eq!(m0.view((0, 0), (nm, nm)).clone_owned(), l_kron);
        assert_eq!(m0.view((0, nm), (nm, nm)).clone_owned(), DMatrix::zeros(nm, nm));
        assert_eq!(m0.view((nm, nm), (nm, nm)).clone_owned(), l_kron);
    }

    #[test]
    fn perturbation_decomposition() {
        // M_q(alpha) - M_q(0) = alpha * M1 with M1 = [0, -I; 0, -H].
        let graph = undirected_cycle(5);
        let m = 2;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let hessians: Vec<_> = (0..5)
            .map(|_| {
                let d = DVector::from_fn(m, |_, _| rng.random_range(0.2..2.0));
                DMatrix::from_diagonal(&d)
            })
            .collect();
        let x = DVector::from_fn(5 * m, |_, _| rng.random_range(-2.0..2.0));
        let q = sector_matrix_q(&x, &QuantizerSpec::log_scale(0.25).unwrap()).unwrap();
        let alpha = 0.37;
        let diff = build_mq(&graph, &q, &hessians, alpha).unwrap()
            - build_mq(&graph, &q, &hessians, 0.0).unwrap();

        let nm = 5 * m;
        let mut m1 = DMatrix::zeros(2 * nm, 2 * nm);
        m1.view_mut((0, nm), (nm, nm))
            .copy_from(&(-DMatrix::identity(nm, nm)));
        for (i, h) in hessians.iter().enumerate() {
            m1.view_mut((nm + i * m, nm + i * m), (m, m)).copy_from(&(-h));
        }
        assert_relative_eq!((diff - m1 * alpha).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn spectrum_of_m0_has_doubled_zero() {
        let graph = undirected_cycle(4);
        let q = DVector::from_element(4, 1.0);
        let hessians: Vec<_> = (0..4).map(|_| DMatrix::identity(1, 1)).collect();
        let m0 = build_mq(&graph, &q, &hessians, 0.0).unwrap();
        let report = spectrum_check(&m0, 1).unwrap();
        assert_eq!(report.zero_count, 2);
        assert!(report.max_re_nonzero < 0.0);
        assert!(!report.is_nominal());
    }

    #[test]
    fn spectrum_of_mq_in_bound_is_nominal() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for trial in 0..5 {
            let n = 4 + trial;
            let m = 1 + trial % 3;
            let graph = generate_erdos_renyi_wb(n, 0.6, 1.0, 40 + trial as u64).unwrap();
            let hessians: Vec<_> = (0..n)
                .map(|_| {
                    let d = DVector::from_fn(m, |_, _| rng.random_range(0.2..2.0));
                    DMatrix::from_diagonal(&d)
                })
                .collect();
            let gamma = hessians
                .iter()
                .map(|h| h.diagonal().max())
                .fold(0.0f64, f64::max);
            let sched = schedule_of(vec![graph.clone()]);
            let alpha = 0.5 * alpha_bar(&sched, gamma).unwrap();
            let x = DVector::from_fn(n * m, |_, _| rng.random_range(-3.0..3.0));
            let q = sector_matrix_q(&x, &QuantizerSpec::log_scale(0.25).unwrap()).unwrap();
            let mq = build_mq(&graph, &q, &hessians, alpha).unwrap();
            let report = spectrum_check(&mq, m).unwrap();
            assert!(
                report.is_nominal(),
                "trial {trial}: zero_count={} max_re={}",
                report.zero_count,
                report.max_re_nonzero
            );
        }
    }

    #[test]
    fn sweep_locates_instability_beyond_the_sufficient_bound() {
        // A directed cycle of length six has Laplacian modes with
        // |Im| > |Re|, which the step-size perturbation rotates into
        // the right half-plane once alpha is large enough. The
        // analytic bound must sit below that numeric threshold.
        let n = 6;
        let mut w = DMatrix::zeros(n, n);
        for i in 0..n {
            w[(i, (i + 1) % n)] = 1.0;
        }
        let graph = WeightedDigraph::new(w).unwrap();
        let hessians: Vec<_> = (0..n)
            .map(|i| DMatrix::from_element(1, 1, 0.4 + 1.6 * i as f64 / (n - 1) as f64))
            .collect();
        let gamma = 2.0;
        let sched = schedule_of(vec![graph.clone()]);
        let abar = alpha_bar(&sched, gamma).unwrap();
        let q = DVector::from_element(n, 1.0);

        let mut threshold = None;
        for k in 1..=4000 {
            let alpha = abar * k as f64 * 0.05;
            let mq = build_mq(&graph, &q, &hessians, alpha).unwrap();
            let report = spectrum_check(&mq, 1).unwrap();
            if !report.is_nominal() {
                threshold = Some(alpha);
                break;
            }
        }
        let threshold = threshold.expect("no instability found in sweep");
        // Sufficiency: the analytic bound is below the numeric threshold.
        assert!(threshold >= abar);
        let mq = build_mq(&graph, &q, &hessians, threshold * 1.5).unwrap();
        let report = spectrum_check(&mq, 1).unwrap();
        assert!(report.max_re_nonzero > 0.0 || report.zero_count != 1);
    }

    #[test]
    fn eigenvalue_annulus_on_normal_fixtures() {
        // Sorted by real part, each eigenvalue of M_q0 stays within the
        // sector annulus of its M0 partner on undirected graphs.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for trial in 0..5u64 {
            let n = 4 + trial as usize % 3;
            let m = 1 + trial as usize % 2;
            let mut w = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in (i + 1)..n {
                    if rng.random::<f64>() < 0.7 {
                        let v = rng.random_range(0.3..1.5);
                        w[(i, j)] = v;
                        w[(j, i)] = v;
                    }
                }
            }
            let graph = match WeightedDigraph::new(w) {
                Ok(g) if g.is_strongly_connected() => g,
                _ => continue,
            };
            let hessians: Vec<_> = (0..n)
                .map(|_| {
                    let d = DVector::from_fn(m, |_, _| rng.random_range(0.2..2.0));
                    DMatrix::from_diagonal(&d)
                })
                .collect();
            let rho = 0.25;
            let spec = QuantizerSpec::log_scale(rho).unwrap();
            let x = DVector::from_fn(n * m, |_, _| rng.random_range(-5.0..5.0));
            let q = sector_matrix_q(&x, &spec).unwrap();
            let ones = DVector::from_element(n * m, 1.0);

            let m0 = build_mq(&graph, &ones, &hessians, 0.0).unwrap();
            let mq0 = build_mq(&graph, &q, &hessians, 0.0).unwrap();
            let mut e0: Vec<f64> = m0.complex_eigenvalues().iter().map(|e| e.re).collect();
            let mut eq: Vec<f64> = mq0.complex_eigenvalues().iter().map(|e| e.re).collect();
            e0.sort_by(|a, b| a.partial_cmp(b).unwrap());
            eq.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let (lo, hi) = spec.sector_ratio_bounds().unwrap();
            for (a, b) in e0.iter().zip(&eq) {
                if a.abs() <= 1e-8 {
                    assert!(b.abs() <= 1e-6, "zero mode not matched: {b}");
                } else {
                    let ratio = b / a;
                    assert!(
                        ratio >= lo - 1e-7 && ratio <= hi + 1e-7,
                        "ratio {ratio} outside [{lo}, {hi}]"
                    );
                }
            }
        }
    }

    #[test]
    fn averaged_perturbation_block_is_negative_definite() {
        // V^T M1 V has lower-right block -sum_i H_i, negative definite
        // when the aggregate satisfies the curvature assumption, even
        // with an indefinite member.
        let n = 4;
        let m = 2;
        let hessians = vec![
            DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.5])),
            DMatrix::from_diagonal(&DVector::from_vec(vec![-0.2, 1.0])),
            DMatrix::from_diagonal(&DVector::from_vec(vec![1.5, 0.8])),
            DMatrix::from_diagonal(&DVector::from_vec(vec![0.4, 0.3])),
        ];
        let graph = undirected_cycle(n);
        let q = DVector::from_element(n * m, 1.0);
        let m1 = (build_mq(&graph, &q, &hessians, 1.0).unwrap()
            - build_mq(&graph, &q, &hessians, 0.0).unwrap())
            / 1.0;

        let nm = n * m;
        let mut v = DMatrix::zeros(2 * nm, 2 * m);
        for i in 0..n {
            for k in 0..m {
                v[(i * m + k, k)] = 1.0;
                v[(nm + i * m + k, m + k)] = 1.0;
            }
        }
        let projected = v.transpose() * m1 * &v;
        let lower_right = projected.view((m, m), (m, m)).clone_owned();
        let mut h_sum = DMatrix::zeros(m, m);
        for h in &hessians {
            h_sum += h;
        }
        assert_relative_eq!((&lower_right + &h_sum).norm(), 0.0, epsilon = 1e-12);
        assert!(lower_right.symmetric_eigenvalues().max() < 0.0);
        // Upper-left block vanishes.
        assert_relative_eq!(
            projected.view((0, 0), (m, m)).norm(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn spectrum_report_serializes() {
        let report = SpectrumReport {
            state_dim: 1,
            zero_count: 1,
            max_re_nonzero: -0.5,
            eigenvalues: vec![Eigenvalue { re: 0.0, im: 0.0 }, Eigenvalue { re: -0.5, im: 0.1 }],
        };
        let json = serde_json::to_string(&report).unwrap();
        assert!(json.contains("\"zero_count\":1"));
        let back: SpectrumReport = serde_json::from_str(&json).unwrap();
        assert_eq!(report, back);
    }
}
