//! Brute-force projected-gradient oracle for the SVM dual
//!
//!     minimize  D(α) = ½ αᵀQα - Σ α
//!     subject to 0 ≤ α_i ≤ C,  yᵀα = 0
//!
//! with `Q_ij = y_i y_j K(x_i, x_j)`. Accelerated projected gradient
//! with an exact projection onto the box-hyperplane intersection
//! (bisection over the hyperplane multiplier). Test oracle only; it
//! shares no code with the SMO solver it checks.

pub struct QpSolution {
    pub alpha: Vec<f64>,
    pub objective: f64,
}

pub fn solve_svm_dual(q: &[Vec<f64>], y: &[f64], c: f64) -> QpSolution {
    let n = y.len();
    let objective = |alpha: &[f64]| -> f64 {
        let mut quad = 0.0;
        for i in 0..n {
            let mut qa = 0.0;
            for j in 0..n {
                qa += q[i][j] * alpha[j];
            }
            quad += alpha[i] * qa;
        }
        0.5 * quad - alpha.iter().sum::<f64>()
    };

    // Lipschitz bound on the gradient: infinity norm of Q
    let lipschitz = q
        .iter()
        .map(|row| row.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0f64, f64::max)
        .max(1e-9);
    let step = 1.0 / lipschitz;

    let project = |v: &[f64]| -> Vec<f64> {
        // find λ with yᵀ clip(v - λy) = 0; the map is non-increasing
        let bound = v.iter().map(|x| x.abs()).fold(0.0f64, f64::max) + c + 1.0;
        let shifted = |lambda: f64| -> f64 {
            let mut sum = 0.0;
            for i in 0..n {
                sum += y[i] * (v[i] - lambda * y[i]).clamp(0.0, c);
            }
            sum
        };
        let mut lo = -bound;
        let mut hi = bound;
        for _ in 0..90 {
            let mid = 0.5 * (lo + hi);
            if shifted(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let lambda = 0.5 * (lo + hi);
        (0..n).map(|i| (v[i] - lambda * y[i]).clamp(0.0, c)).collect()
    };

    let gradient = |alpha: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let mut g = -1.0;
                for j in 0..n {
                    g += q[i][j] * alpha[j];
                }
                g
            })
            .collect()
    };

    let mut x = vec![0.0f64; n];
    let mut z = x.clone();
    let mut t = 1.0f64;
    let mut best = objective(&x);
    let mut best_alpha = x.clone();
    let mut stall = 0usize;
    let max_iterations = 400_000usize;
    for iter in 0..max_iterations {
        let g = gradient(&z);
        let candidate: Vec<f64> = (0..n).map(|i| z[i] - step * g[i]).collect();
        let x_new = project(&candidate);
        let f_new = objective(&x_new);
        let f_old = objective(&x);
        if f_new > f_old {
            // adaptive restart keeps the accelerated sequence monotone
            t = 1.0;
            z = x.clone();
        } else {
            let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let momentum = (t - 1.0) / t_new;
            z = (0..n)
                .map(|i| x_new[i] + momentum * (x_new[i] - x[i]))
                .collect();
            t = t_new;
            x = x_new;
        }
        if iter % 16 == 0 {
            let f = objective(&x);
            if f < best - 1e-13 * (1.0 + best.abs()) {
                best = f;
                best_alpha = x.clone();
                stall = 0;
            } else {
                stall += 1;
            }
            // fixed-point residual of the projected-gradient map
            let g = gradient(&x);
            let moved: Vec<f64> = (0..n).map(|i| x[i] - step * g[i]).collect();
            let projected = project(&moved);
            let residual = projected
                .iter()
                .zip(&x)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            if residual <= 1e-10 * (1.0 + c) || stall > 60 {
                break;
            }
        }
    }
    let final_obj = objective(&x);
    if final_obj < best {
        best = final_obj;
        best_alpha = x;
    }
    QpSolution {
        alpha: best_alpha,
        objective: best,
    }
}
