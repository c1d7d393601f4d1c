//! Exact t-SNE projection to 2D.

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::math::sq_dist;
use crate::{par, seeded_rng, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub early_exaggeration: f64,
    pub exaggeration_iters: usize,
    pub momentum: f64,
    pub final_momentum: f64,
    pub momentum_switch: usize,
    /// Standard deviation of the Gaussian initial layout.
    pub init_std: f64,
    /// After early exaggeration, reject any step that raises KL: momentum and
    /// gains are reset and a backtracking gradient step is taken instead.
    pub monotone: bool,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        TsneConfig {
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: 200.0,
            early_exaggeration: 12.0,
            exaggeration_iters: 250,
            momentum: 0.5,
            final_momentum: 0.8,
            momentum_switch: 250,
            init_std: 1e-4,
            monotone: true,
            seed: 1,
        }
    }
}

/// Conditional probabilities for one point plus the calibration outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct Calibrated {
    pub probs: Vec<f64>,
    /// Gaussian precision `1 / (2σ²)`.
    pub beta: f64,
    pub perplexity: f64,
    pub converged: bool,
}

const CALIBRATION_ITERS: usize = 50;

/// Row probabilities and their entropy (nats) for precision `beta`.
fn row_at(sq_dists: &[f64], beta: f64, dmin: f64) -> (Vec<f64>, f64) {
    let mut p: Vec<f64> = sq_dists.iter().map(|d| (-beta * (d - dmin)).exp()).collect();
    let sum: f64 = p.iter().sum();
    let weighted: f64 = p.iter().zip(sq_dists).map(|(pj, d)| pj * (d - dmin)).sum();
    let entropy = sum.ln() + beta * weighted / sum;
    p.iter_mut().for_each(|x| *x /= sum);
    (p, entropy)
}

/// Binary search on the Gaussian precision so the row's perplexity `2^H`
/// matches `perplexity`. `sq_dists` excludes the point itself.
pub fn perplexity_calibration(sq_dists: &[f64], perplexity: f64) -> Calibrated {
    let target = perplexity.ln();
    let dmin = sq_dists.iter().copied().fold(f64::INFINITY, f64::min);
    let (mut lo, mut hi) = (0.0_f64, f64::INFINITY);
    let mut beta = 1.0;
    let mut best: Option<(f64, Vec<f64>, f64)> = None;
    for _ in 0..CALIBRATION_ITERS {
        let (p, h) = row_at(sq_dists, beta, dmin);
        let err = (h.exp() - perplexity).abs();
        if best.as_ref().is_none_or(|b| err < (b.2.exp() - perplexity).abs()) {
            best = Some((beta, p, h));
        }
        if err < 1e-5 {
            break;
        }
        if h > target {
            lo = beta;
            beta = if hi.is_finite() { (beta + hi) / 2.0 } else { beta * 2.0 };
        } else {
            hi = beta;
            beta = (beta + lo) / 2.0;
        }
    }
    let (beta, probs, h) = best.expect("at least one iteration");
    let achieved = h.exp();
    let converged = (achieved - perplexity).abs() < 1e-5;
    if !converged {
        log::warn!("perplexity calibration stopped at {achieved:.6} (target {perplexity})");
    }
    Calibrated {
        probs,
        beta,
        perplexity: achieved,
        converged,
    }
}

/// Symmetrized joint probabilities `P = (P_{j|i} + P_{i|j}) / 2n`, row-major n×n.
pub fn joint_probabilities(points: &[Vec<f64>], perplexity: f64) -> Vec<f64> {
    let n = points.len();
    let rows = par::map_range(n, |i| {
        let d: Vec<f64> = (0..n)
            .filter(|&j| j != i)
            .map(|j| sq_dist(&points[i], &points[j]))
            .collect();
        let c = perplexity_calibration(&d, perplexity);
        let mut full = Vec::with_capacity(n);
        full.extend_from_slice(&c.probs[..i]);
        full.push(0.0);
        full.extend_from_slice(&c.probs[i..]);
        full
    });
    let mut p = vec![0.0; n * n];
    let denom = 2.0 * n as f64;
    for i in 0..n {
        for j in 0..n {
            p[i * n + j] = (rows[i][j] + rows[j][i]) / denom;
        }
    }
    p
}

/// Student-t kernel values `1 / (1 + ‖y_i − y_j‖²)` (zero diagonal) and their sum.
fn student_t(y: &[[f64; 2]]) -> (Vec<f64>, f64) {
    let n = y.len();
    let rows = par::map_range(n, |i| {
        let row: Vec<f64> = (0..n)
            .map(|j| {
                if i == j {
                    0.0
                } else {
                    let dx = y[i][0] - y[j][0];
                    let dy = y[i][1] - y[j][1];
                    1.0 / (1.0 + dx * dx + dy * dy)
                }
            })
            .collect();
        let s: f64 = row.iter().sum();
        (row, s)
    });
    let z = rows.iter().map(|r| r.1).sum();
    (rows.into_iter().flat_map(|r| r.0).collect(), z)
}

/// `KL(P‖Q)` for layout `y`.
pub fn kl_divergence(p: &[f64], y: &[[f64; 2]]) -> f64 {
    let (num, z) = student_t(y);
    p.iter()
        .zip(&num)
        .filter(|(&pij, _)| pij > 0.0)
        .map(|(&pij, &nij)| pij * (pij / (nij / z).max(1e-300)).ln())
        .sum()
}

/// `∂KL/∂y_i = 4 Σ_j (p_ij − q_ij)(1 + ‖y_i − y_j‖²)⁻¹ (y_i − y_j)`.
pub fn kl_gradient(p: &[f64], y: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let n = y.len();
    let (num, z) = student_t(y);
    par::map_range(n, |i| {
        let mut g = [0.0; 2];
        for j in 0..n {
            if i == j {
                continue;
            }
            let nij = num[i * n + j];
            let m = 4.0 * (p[i * n + j] - nij / z) * nij;
            g[0] += m * (y[i][0] - y[j][0]);
            g[1] += m * (y[i][1] - y[j][1]);
        }
        g
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Projection2D {
    pub codes: Vec<String>,
    pub coords: Vec<[f64; 2]>,
    pub kl: f64,
    /// KL (against the unexaggerated P) after every iteration.
    pub kl_trace: Vec<f64>,
    pub config: TsneConfig,
}

/// Projects `points` to 2D.
pub fn tsne(codes: &[String], points: &[Vec<f64>], config: &TsneConfig) -> Result<Projection2D> {
    let n = points.len();
    if n < 3 {
        return Err(Error::Invalid(format!("t-SNE needs at least 3 points, got {n}")));
    }
    if codes.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: codes.len(),
        });
    }
    if !(config.perplexity > 0.0 && config.perplexity < (n - 1) as f64) {
        return Err(Error::Config(format!(
            "perplexity {} must lie in (0, {})",
            config.perplexity,
            n - 1
        )));
    }
    if points.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Invalid("non-finite input coordinates".into()));
    }
    let mut rng = seeded_rng(config.seed);

    let has_duplicates = (0..n).any(|i| (i + 1..n).any(|j| points[i] == points[j]));
    let jittered;
    let points = if has_duplicates {
        log::warn!("identical input points; adding 1e-8 jitter");
        jittered = points
            .iter()
            .map(|p| p.iter().map(|x| x + 1e-8 * rng.random_range(-1.0..1.0)).collect())
            .collect::<Vec<Vec<f64>>>();
        &jittered
    } else {
        points
    };

    let p = joint_probabilities(points, config.perplexity);
    let normal = Normal::new(0.0, config.init_std).map_err(|e| Error::Config(e.to_string()))?;
    let mut y: Vec<[f64; 2]> = (0..n)
        .map(|_| [normal.sample(&mut rng), normal.sample(&mut rng)])
        .collect();
    let mut update = vec![[0.0f64; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];
    let exaggerated: Vec<f64> = p.iter().map(|x| x * config.early_exaggeration).collect();
    let mut kl_trace = Vec::with_capacity(config.iterations);

    for it in 0..config.iterations {
        let exaggerating = it < config.exaggeration_iters;
        let pk = if exaggerating { &exaggerated } else { &p };
        let momentum = if it < config.momentum_switch {
            config.momentum
        } else {
            config.final_momentum
        };
        let grad = kl_gradient(pk, &y);
        let mut trial_update = update.clone();
        let mut trial_gains = gains.clone();
        let mut trial = y.clone();
        for i in 0..n {
            for d in 0..2 {
                let g = &mut trial_gains[i][d];
                *g = if (grad[i][d] > 0.0) != (trial_update[i][d] > 0.0) {
                    *g + 0.2
                } else {
                    (*g * 0.8).max(0.01)
                };
                trial_update[i][d] = momentum * trial_update[i][d] - config.learning_rate * *g * grad[i][d];
                trial[i][d] += trial_update[i][d];
            }
        }
        let mut kl = kl_divergence(&p, &trial);
        let previous = kl_trace.last().copied();
        match previous {
            Some(prev) if config.monotone && !exaggerating && !(kl <= prev) => {
                // restart: drop momentum and gains, backtrack on the plain gradient
                update = vec![[0.0; 2]; n];
                gains = vec![[1.0; 2]; n];
                let mut step = config.learning_rate;
                kl = prev;
                for _ in 0..40 {
                    let cand: Vec<[f64; 2]> = y
                        .iter()
                        .zip(&grad)
                        .map(|(v, g)| [v[0] - step * g[0], v[1] - step * g[1]])
                        .collect();
                    let k = kl_divergence(&p, &cand);
                    if k <= prev {
                        y = cand;
                        kl = k;
                        break;
                    }
                    step *= 0.5;
                }
            }
            _ => {
                y = trial;
                update = trial_update;
                gains = trial_gains;
            }
        }
        let mean = [
            y.iter().map(|v| v[0]).sum::<f64>() / n as f64,
            y.iter().map(|v| v[1]).sum::<f64>() / n as f64,
        ];
        y.iter_mut().for_each(|v| {
            v[0] -= mean[0];
            v[1] -= mean[1];
        });
        kl_trace.push(kl);
    }
    if y.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Invalid("t-SNE diverged; lower the learning rate".into()));
    }
    Ok(Projection2D {
        codes: codes.to_vec(),
        kl: kl_trace.last().copied().unwrap_or_else(|| kl_divergence(&p, &y)),
        coords: y,
        kl_trace,
        config: config.clone(),
    })
}

/// Neighbor order of every point by distance, ties broken by index.
fn neighbor_order<F: Fn(usize, usize) -> f64 + Sync>(n: usize, dist: F) -> Vec<Vec<usize>> {
    par::map_range(n, |i| {
        let mut idx: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        idx.sort_by(|&a, &b| dist(i, a).total_cmp(&dist(i, b)).then(a.cmp(&b)));
        idx
    })
}

/// Trustworthiness of a low-dimensional embedding at neighborhood size `k`:
/// penalizes low-dim neighbors by how far outside the high-dim k-NN they rank.
pub fn trustworthiness(high: &[Vec<f64>], low: &[Vec<f64>], k: usize) -> f64 {
    let n = high.len();
    assert!(k < n / 2, "k must be below n/2");
    let high_order = neighbor_order(n, |i, j| sq_dist(&high[i], &high[j]));
    let low_order = neighbor_order(n, |i, j| sq_dist(&low[i], &low[j]));
    let mut penalty = 0.0;
    for i in 0..n {
        let mut rank = vec![0usize; n];
        for (r, &j) in high_order[i].iter().enumerate() {
            rank[j] = r + 1;
        }
        for &j in &low_order[i][..k] {
            if rank[j] > k {
                penalty += (rank[j] - k) as f64;
            }
        }
    }
    let (n, k) = (n as f64, k as f64);
    1.0 - 2.0 / (n * k * (2.0 * n - 3.0 * k - 1.0)) * penalty
}
