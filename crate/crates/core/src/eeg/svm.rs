//! RBF-kernel C-SVM trained by sequential minimal optimization, and sigmoid
//! (Platt) calibration of its decision values.
//!
//! The solver works on a precomputed Gram matrix and an index subset so that
//! the cross-validation folds used for calibration share one kernel
//! evaluation pass.

use serde::{Deserialize, Serialize};

const TAU: f64 = 1e-12;

/// Dense symmetric kernel matrix over a training set.
pub(crate) struct Gram {
    n: usize,
    data: Vec<f64>,
}

impl Gram {
    pub(crate) fn rbf(rows: &[Vec<f64>], gamma: f64) -> Self {
        let n = rows.len();
        let norms: Vec<f64> = rows.iter().map(|r| dot(r, r)).collect();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
            for j in 0..i {
                let d2 = (norms[i] + norms[j] - 2.0 * dot(&rows[i], &rows[j])).max(0.0);
                let k = (-gamma * d2).exp();
                data[i * n + j] = k;
                data[j * n + i] = k;
            }
        }
        Self { n, data }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct SmoParams {
    pub c: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

/// Dual solution over a subset: `coef[t] = alpha[t] * y[t]` for subset position `t`.
pub(crate) struct SmoSolution {
    pub coef: Vec<f64>,
    pub rho: f64,
    pub iterations: usize,
}

/// Solves the C-SVM dual over the training points `idx` of `gram` with
/// labels `y` in {-1, +1}.
pub(crate) fn solve(gram: &Gram, idx: &[usize], y: &[f64], params: SmoParams) -> SmoSolution {
    let l = idx.len();
    let c = params.c;
    let mut alpha = vec![0.0; l];
    let mut grad = vec![-1.0; l];
    let k = |a: usize, b: usize| gram.at(idx[a], idx[b]);
    let upper = |a: f64| a >= c;
    let lower = |a: f64| a <= 0.0;

    let mut iterations = 0;
    while iterations < params.max_iterations {
        // First index: maximal violation among the "up" set.
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..l {
            let v = if y[t] > 0.0 {
                if upper(alpha[t]) {
                    continue;
                }
                -grad[t]
            } else {
                if lower(alpha[t]) {
                    continue;
                }
                grad[t]
            };
            if v >= gmax {
                gmax = v;
                i = t;
            }
        }
        if i == usize::MAX {
            break;
        }

        // Second index: largest guaranteed objective decrease (second-order rule).
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..l {
            let q_it = y[i] * y[t] * k(i, t);
            if y[t] > 0.0 {
                if lower(alpha[t]) {
                    continue;
                }
                let diff = gmax + grad[t];
                if grad[t] >= gmax2 {
                    gmax2 = grad[t];
                }
                if diff > 0.0 {
                    let quad = 2.0 - 2.0 * y[i] * q_it;
                    let obj = -(diff * diff) / if quad > 0.0 { quad } else { TAU };
                    if obj <= best {
                        best = obj;
                        j = t;
                    }
                }
            } else {
                if upper(alpha[t]) {
                    continue;
                }
                let diff = gmax - grad[t];
                if -grad[t] >= gmax2 {
                    gmax2 = -grad[t];
                }
                if diff > 0.0 {
                    let quad = 2.0 + 2.0 * y[i] * q_it;
                    let obj = -(diff * diff) / if quad > 0.0 { quad } else { TAU };
                    if obj <= best {
                        best = obj;
                        j = t;
                    }
                }
            }
        }
        if gmax + gmax2 < params.tolerance || j == usize::MAX {
            break;
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let q_ij = y[i] * y[j] * k(i, j);
        if y[i] != y[j] {
            let quad = (2.0 + 2.0 * q_ij).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (2.0 - 2.0 * q_ij).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..l {
            grad[t] += y[t] * (y[i] * k(i, t) * di + y[j] * k(j, t) * dj);
        }
    }

    // Bias from free support vectors, else the midpoint of the feasible interval.
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum_free) = (0usize, 0.0);
    for t in 0..l {
        let yg = y[t] * grad[t];
        if upper(alpha[t]) {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if lower(alpha[t]) {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    let rho = if free > 0 {
        sum_free / free as f64
    } else {
        (ub + lb) / 2.0
    };

    SmoSolution {
        coef: alpha.iter().zip(y).map(|(a, yy)| a * yy).collect(),
        rho,
        iterations,
    }
}

/// Decision values of a subset solution for the Gram rows `eval`.
pub(crate) fn subset_decisions(gram: &Gram, train_idx: &[usize], sol: &SmoSolution, eval: &[usize]) -> Vec<f64> {
    eval.iter()
        .map(|&e| {
            train_idx
                .iter()
                .zip(&sol.coef)
                .filter(|(_, c)| **c != 0.0)
                .map(|(&t, c)| c * gram.at(t, e))
                .sum::<f64>()
                - sol.rho
        })
        .collect()
}

/// Trained RBF machine keeping only its support vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbfSvm {
    pub gamma: f64,
    pub rho: f64,
    support: Vec<Vec<f64>>,
    coef: Vec<f64>,
}

impl RbfSvm {
    pub(crate) fn from_solution(rows: &[Vec<f64>], sol: &SmoSolution, gamma: f64) -> Self {
        let (support, coef): (Vec<Vec<f64>>, Vec<f64>) = rows
            .iter()
            .zip(&sol.coef)
            .filter(|(_, c)| **c != 0.0)
            .map(|(r, c)| (r.clone(), *c))
            .unzip();
        Self {
            gamma,
            rho: sol.rho,
            support,
            coef,
        }
    }

    pub fn support_vector_count(&self) -> usize {
        self.support.len()
    }

    pub fn decision_value(&self, x: &[f64]) -> f64 {
        let xx = dot(x, x);
        self.support
            .iter()
            .zip(&self.coef)
            .map(|(s, c)| {
                let d2 = (dot(s, s) + xx - 2.0 * dot(s, x)).max(0.0);
                c * (-self.gamma * d2).exp()
            })
            .sum::<f64>()
            - self.rho
    }
}

/// `P(relevant | f) = 1 / (1 + exp(a * f + b))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlattScaling {
    pub a: f64,
    pub b: f64,
}

impl PlattScaling {
    pub fn probability(&self, decision: f64) -> f64 {
        let z = decision * self.a + self.b;
        let p = if z >= 0.0 {
            (-z).exp() / (1.0 + (-z).exp())
        } else {
            1.0 / (1.0 + z.exp())
        };
        p.clamp(0.0, 1.0)
    }

    /// Fits the sigmoid by Newton's method with backtracking on the
    /// regularized cross-entropy (targets shrunk toward the class priors).
    pub fn fit(decisions: &[f64], labels: &[bool]) -> Self {
        const MAX_ITER: usize = 100;
        const MIN_STEP: f64 = 1e-10;
        const SIGMA: f64 = 1e-12;
        const EPS: f64 = 1e-5;

        let prior1 = labels.iter().filter(|&&l| l).count() as f64;
        let prior0 = labels.len() as f64 - prior1;
        let hi = (prior1 + 1.0) / (prior1 + 2.0);
        let lo = 1.0 / (prior0 + 2.0);
        let targets: Vec<f64> = labels.iter().map(|&l| if l { hi } else { lo }).collect();

        let objective = |a: f64, b: f64| -> f64 {
            decisions
                .iter()
                .zip(&targets)
                .map(|(&f, &t)| {
                    let z = f * a + b;
                    if z >= 0.0 {
                        t * z + (1.0 + (-z).exp()).ln()
                    } else {
                        (t - 1.0) * z + (1.0 + z.exp()).ln()
                    }
                })
                .sum()
        };

        let mut a = 0.0;
        let mut b = ((prior0 + 1.0) / (prior1 + 1.0)).ln();
        let mut fval = objective(a, b);
        for _ in 0..MAX_ITER {
            let (mut h11, mut h22, mut h21, mut g1, mut g2) = (SIGMA, SIGMA, 0.0, 0.0, 0.0);
            for (&f, &t) in decisions.iter().zip(&targets) {
                let z = f * a + b;
                let (p, q) = if z >= 0.0 {
                    let e = (-z).exp();
                    (e / (1.0 + e), 1.0 / (1.0 + e))
                } else {
                    let e = z.exp();
                    (1.0 / (1.0 + e), e / (1.0 + e))
                };
                let d2 = p * q;
                h11 += f * f * d2;
                h22 += d2;
                h21 += f * d2;
                let d1 = t - p;
                g1 += f * d1;
                g2 += d1;
            }
            if g1.abs() < EPS && g2.abs() < EPS {
                break;
            }
            let det = h11 * h22 - h21 * h21;
            let da = -(h22 * g1 - h21 * g2) / det;
            let db = -(-h21 * g1 + h11 * g2) / det;
            let gd = g1 * da + g2 * db;
            let mut step = 1.0;
            while step >= MIN_STEP {
                let (na, nb) = (a + step * da, b + step * db);
                let nf = objective(na, nb);
                if nf < fval + 1e-4 * step * gd {
                    a = na;
                    b = nb;
                    fval = nf;
                    break;
                }
                step /= 2.0;
            }
            if step < MIN_STEP {
                break;
            }
        }
        Self { a, b }
    }
}
