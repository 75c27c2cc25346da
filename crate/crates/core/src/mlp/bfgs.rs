//! Full-batch BFGS minimizer with Armijo backtracking.
//!
//! Dense inverse-Hessian variant: fine at perceptron scale (~10² free
//! parameters), not meant for large models.

/// Knobs for [`minimize`].
#[derive(Debug, Clone)]
pub struct BfgsOptions {
    pub max_iters: usize,
    /// Armijo sufficient-decrease constant, in (0,1).
    pub armijo_c: f64,
    /// Step shrink factor per backtrack, in (0,1).
    pub armijo_shrink: f64,
    /// Stop when the gradient's Euclidean norm falls at or below this.
    pub grad_tol: f64,
    /// Line-search attempts before giving up on an iteration.
    pub max_backtracks: usize,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        BfgsOptions {
            max_iters: 100,
            armijo_c: 1e-4,
            armijo_shrink: 0.5,
            grad_tol: 1e-12,
            max_backtracks: 60,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxIterations,
    /// Gradient norm fell at or below `grad_tol`.
    StationaryPoint,
    /// Armijo backtracking exhausted `max_backtracks` shrinks; the best
    /// point found so far is returned.
    LineSearchExhausted,
}

#[derive(Debug, Clone)]
pub struct BfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    /// Completed iterations (accepted steps).
    pub iterations: usize,
    pub stop: StopReason,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `f` starting from `x0`, maintaining a dense inverse-Hessian
/// approximation `H` (identity at the start). Each iteration steps along
/// `−H·∇f` with backtracking until the Armijo condition holds, then applies
/// the rank-two BFGS update to `H`, skipped whenever the curvature `sᵀy`
/// is at or below 1e−12. `on_iterate` fires after each accepted step with
/// (1-based iteration, current point, current value).
pub fn minimize(
    x0: &[f64],
    mut f: impl FnMut(&[f64]) -> f64,
    mut grad: impl FnMut(&[f64]) -> Vec<f64>,
    options: &BfgsOptions,
    mut on_iterate: impl FnMut(usize, &[f64], f64),
) -> BfgsOutcome {
    assert!(
        options.armijo_c > 0.0 && options.armijo_c < 1.0,
        "armijo_c must lie in (0,1)"
    );
    assert!(
        options.armijo_shrink > 0.0 && options.armijo_shrink < 1.0,
        "armijo_shrink must lie in (0,1)"
    );

    let n = x0.len();
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    let mut g = grad(&x);

    // row-major n×n inverse-Hessian approximation
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        h[i * n + i] = 1.0;
    }

    let mut stop = StopReason::MaxIterations;
    let mut iterations = 0;

    for iter in 1..=options.max_iters {
        if dot(&g, &g).sqrt() <= options.grad_tol {
            stop = StopReason::StationaryPoint;
            break;
        }

        let mut direction: Vec<f64> = (0..n)
            .map(|i| -dot(&h[i * n..(i + 1) * n], &g))
            .collect();
        let mut slope = dot(&g, &direction);
        if slope >= 0.0 {
            // numerical loss of positive definiteness: restart from steepest
            // descent with a fresh identity H
            for i in 0..n {
                for j in 0..n {
                    h[i * n + j] = if i == j { 1.0 } else { 0.0 };
                }
            }
            direction = g.iter().map(|gi| -gi).collect();
            slope = -dot(&g, &g);
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..options.max_backtracks {
            let candidate: Vec<f64> = x
                .iter()
                .zip(&direction)
                .map(|(xi, di)| xi + step * di)
                .collect();
            let f_candidate = f(&candidate);
            if f_candidate <= fx + options.armijo_c * step * slope {
                accepted = Some((candidate, f_candidate));
                break;
            }
            step *= options.armijo_shrink;
        }
        let Some((x_new, fx_new)) = accepted else {
            stop = StopReason::LineSearchExhausted;
            break;
        };

        let g_new = grad(&x_new);
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 {
            // H ← (I − ρsyᵀ)H(I − ρysᵀ) + ρssᵀ, expanded via hy = H·y
            // (H stays symmetric, so yᵀH = hyᵀ)
            let rho = 1.0 / sy;
            let hy: Vec<f64> = (0..n).map(|i| dot(&h[i * n..(i + 1) * n], &y)).collect();
            let yhy = dot(&y, &hy);
            let ss_coeff = rho * rho * yhy + rho;
            for i in 0..n {
                for j in 0..n {
                    h[i * n + j] +=
                        ss_coeff * s[i] * s[j] - rho * (s[i] * hy[j] + hy[i] * s[j]);
                }
            }
        }

        x = x_new;
        fx = fx_new;
        g = g_new;
        iterations = iter;
        on_iterate(iter, &x, fx);
    }

    BfgsOutcome {
        x,
        value: fx,
        iterations,
        stop,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stationary_start_terminates_immediately() {
        let outcome = minimize(
            &[3.0, -1.0],
            |x| (x[0] - 3.0).powi(2) + 10.0 * (x[1] + 1.0).powi(2),
            |x| vec![2.0 * (x[0] - 3.0), 20.0 * (x[1] + 1.0)],
            &BfgsOptions::default(),
            |_, _, _| {},
        );
        assert_eq!(outcome.stop, StopReason::StationaryPoint);
        assert_eq!(outcome.iterations, 0);
        assert_eq!(outcome.x, vec![3.0, -1.0]);
    }

    #[test]
    fn quadratic_converges_to_closed_form_minimizer() {
        // f(x,y) = (x−3)² + 10(y+1)², minimizer (3,−1), minimum 0
        let outcome = minimize(
            &[0.0, 0.0],
            |x| (x[0] - 3.0).powi(2) + 10.0 * (x[1] + 1.0).powi(2),
            |x| vec![2.0 * (x[0] - 3.0), 20.0 * (x[1] + 1.0)],
            &BfgsOptions {
                max_iters: 10,
                grad_tol: 1e-10,
                ..BfgsOptions::default()
            },
            |_, _, _| {},
        );
        assert!((outcome.x[0] - 3.0).abs() < 1e-8, "x = {:?}", outcome.x);
        assert!((outcome.x[1] + 1.0).abs() < 1e-8, "x = {:?}", outcome.x);
        assert!(outcome.iterations <= 10);
    }

    #[test]
    fn value_sequence_is_non_increasing() {
        let mut values = Vec::new();
        // Rosenbrock: curved valley, exercises backtracking
        minimize(
            &[-1.2, 1.0],
            |x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2),
            |x| {
                vec![
                    -2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] * x[0]),
                    200.0 * (x[1] - x[0] * x[0]),
                ]
            },
            &BfgsOptions {
                max_iters: 200,
                grad_tol: 1e-10,
                ..BfgsOptions::default()
            },
            |_, _, value| values.push(value),
        );
        assert!(values.len() >= 10);
        for pair in values.windows(2) {
            assert!(pair[1] <= pair[0], "ascent step: {pair:?}");
        }
        assert!(values.last().unwrap() < &1e-8);
    }

    #[test]
    fn curvature_skip_keeps_running() {
        // |x| has no curvature at the kink; the 1e−12 guard must keep H sane
        let outcome = minimize(
            &[1.0],
            |x| x[0].abs(),
            |x| vec![x[0].signum()],
            &BfgsOptions {
                max_iters: 50,
                ..BfgsOptions::default()
            },
            |_, _, _| {},
        );
        assert!(outcome.value <= 1.0);
    }

    #[test]
    fn line_search_exhaustion_stops_cleanly() {
        // start at the kink minimum (f = 0) with a gradient that lies about
        // descent: the Armijo right-hand side is strictly negative while
        // f stays >= 0, so all 60 backtracks fail — even the tiny trailing
        // steps that round the candidate back onto x0 bitwise
        let outcome = minimize(
            &[1.0],
            |x| (x[0] - 1.0).abs().sqrt(),
            |_| vec![1.0],
            &BfgsOptions::default(),
            |_, _, _| {},
        );
        assert_eq!(outcome.stop, StopReason::LineSearchExhausted);
        assert_eq!(outcome.x, vec![1.0]);
        assert_eq!(outcome.iterations, 0);
    }
}
