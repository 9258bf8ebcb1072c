//! Gradient-based local minimizers used to polish metaheuristic results and
//! inside the Holevo solvers.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LocalOptions {
    pub max_iters: usize,
    /// Stop once the largest gradient component falls below this.
    pub grad_tol: f64,
    /// Stop once a step improves the objective by less than this, relative.
    pub f_tol: f64,
}

impl Default for LocalOptions {
    fn default() -> Self {
        Self { max_iters: 2000, grad_tol: 1e-10, f_tol: 1e-15 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// BFGS with an Armijo backtracking line search. `f` writes the gradient
/// into its second argument and returns the objective.
pub fn bfgs<F>(mut f: F, x0: &[f64], opts: &LocalOptions) -> LocalResult
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = DVector::from_column_slice(x0);
    let mut g = DVector::zeros(n);
    let mut fx = f(x.as_slice(), g.as_mut_slice());
    if n == 0 {
        return LocalResult { x: vec![], value: fx, iterations: 0, converged: true };
    }
    let mut h = DMatrix::<f64>::identity(n, n);
    let mut small_steps = 0;
    let mut g_new = DVector::zeros(n);
    for it in 0..opts.max_iters {
        if !fx.is_finite() {
            return LocalResult { x: x.as_slice().to_vec(), value: fx, iterations: it, converged: false };
        }
        if g.amax() < opts.grad_tol {
            return LocalResult { x: x.as_slice().to_vec(), value: fx, iterations: it, converged: true };
        }
        let mut d = -(&h * &g);
        let mut slope = g.dot(&d);
        if slope >= 0.0 {
            h = DMatrix::identity(n, n);
            d = -g.clone();
            slope = g.dot(&d);
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xt = &x + &d * t;
            let ft = f(xt.as_slice(), g_new.as_mut_slice());
            if ft.is_finite() && ft <= fx + 1e-4 * t * slope {
                accepted = Some((xt, ft));
                break;
            }
            t *= 0.5;
        }
        let Some((x_new, f_new)) = accepted else {
            // No descent possible at machine precision.
            return LocalResult { x: x.as_slice().to_vec(), value: fx, iterations: it, converged: true };
        };
        let s = &x_new - &x;
        let y = &g_new - &g;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() && sy > 0.0 {
            if it == 0 {
                // Scale the initial inverse Hessian to the observed curvature.
                h *= sy / y.dot(&y);
            }
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            h += (&s * s.transpose()) * (rho * rho * yhy + rho)
                - (&hy * s.transpose() + &s * hy.transpose()) * rho;
        }
        let improvement = fx - f_new;
        x = x_new;
        g.copy_from(&g_new);
        fx = f_new;
        if improvement <= opts.f_tol * fx.abs().max(1e-300) {
            small_steps += 1;
            if small_steps >= 5 {
                return LocalResult { x: x.as_slice().to_vec(), value: fx, iterations: it + 1, converged: true };
            }
        } else {
            small_steps = 0;
        }
    }
    LocalResult { x: x.as_slice().to_vec(), value: fx, iterations: opts.max_iters, converged: false }
}

/// Central finite-difference gradient.
pub fn fd_gradient<F: FnMut(&[f64]) -> f64>(f: &mut F, x: &[f64], h: f64) -> Vec<f64> {
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = xp[i];
            xp[i] = orig + h;
            let fp = f(&xp);
            xp[i] = orig - h;
            let fm = f(&xp);
            xp[i] = orig;
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

/// Settings for [`gradient_descent`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GradientDescentOptions {
    /// Initial trial step length.
    pub step: f64,
    pub max_steps: usize,
    /// Finite-difference step for the gradient.
    pub fd_step: f64,
    pub grad_tol: f64,
}

impl Default for GradientDescentOptions {
    fn default() -> Self {
        Self { step: 1.0, max_steps: 50, fd_step: 1e-6, grad_tol: 1e-8 }
    }
}

/// Steepest descent on finite-difference gradients with a backtracking
/// line search. Returns the final point, its value and the number of steps.
pub fn gradient_descent<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    opts: &GradientDescentOptions,
) -> (Vec<f64>, f64, usize) {
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    let mut step = opts.step;
    for it in 0..opts.max_steps {
        let g = fd_gradient(&mut f, &x, opts.fd_step);
        let gn2: f64 = g.iter().map(|v| v * v).sum();
        if gn2.sqrt() < opts.grad_tol || !fx.is_finite() {
            return (x, fx, it);
        }
        let mut t = step;
        let mut moved = false;
        for _ in 0..50 {
            let xt: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - t * gi).collect();
            let ft = f(&xt);
            if ft <= fx - 1e-4 * t * gn2 {
                x = xt;
                fx = ft;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            return (x, fx, it);
        }
        // Let the step grow again after a successful move.
        step = t * 2.0;
    }
    (x, fx, opts.max_steps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bfgs_solves_rosenbrock() {
        let f = |x: &[f64], g: &mut [f64]| {
            let (a, b) = (x[0], x[1]);
            g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
            g[1] = 200.0 * (b - a * a);
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
        };
        let r = bfgs(f, &[-1.2, 1.0], &LocalOptions::default());
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6, "{:?}", r.x);
    }

    #[test]
    fn gradient_descent_reaches_small_gradient_on_convex_quadratic() {
        let w = [1.0, 2.0, 3.0, 0.5, 1.5, 2.5];
        let f = |x: &[f64]| x.iter().zip(&w).map(|(v, c)| c * (v - 1.0).powi(2)).sum::<f64>();
        let opts = GradientDescentOptions { step: 0.2, max_steps: 2000, fd_step: 1e-5, grad_tol: 1e-6 };
        let (x, _, _) = gradient_descent(f, &[0.0; 6], &opts);
        let mut ff = f;
        let g = fd_gradient(&mut ff, &x, 1e-5);
        let gn: f64 = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(gn < 1e-6, "gradient norm {gn:e}");
    }

    #[test]
    fn fd_gradient_is_exact_for_quadratics() {
        let mut f = |x: &[f64]| 3.0 * x[0] * x[0] + x[0] * x[1];
        let g = fd_gradient(&mut f, &[1.0, 2.0], 1e-4);
        assert!((g[0] - 8.0).abs() < 1e-8 && (g[1] - 1.0).abs() < 1e-8);
    }
}
