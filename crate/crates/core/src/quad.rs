//! Panel-adaptive Gauss-Legendre quadrature.

use crate::Scalar;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`,
/// computed by Newton iteration on the Legendre recurrence.
pub fn gauss_legendre<T: Scalar>(n: usize) -> (Vec<T>, Vec<T>) {
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    for i in 0..n {
        // Chebyshev-based initial guess.
        let mut x = T::c((std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos());
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < T::c(1e-16) {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = T::c(2.0) / ((T::one() - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Legendre polynomial `P_n` and derivative at `x`.
fn legendre<T: Scalar>(n: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    if n == 0 {
        return (p0, T::zero());
    }
    for k in 1..n {
        let kf = T::c(k as f64);
        let p2 = ((T::c(2.0) * kf + T::one()) * x * p1 - kf * p0) / (kf + T::one());
        p0 = p1;
        p1 = p2;
    }
    let dp = T::c(n as f64) * (x * p1 - p0) / (x * x - T::one());
    (p1, dp)
}

/// Integrate `f` over `[a, b]` with `points`-node panels, bisecting panels
/// until the two-half refinement agrees with the single panel to `tol`.
pub fn adaptive<T: Scalar, F: Fn(T) -> T>(f: &F, a: T, b: T, points: usize, tol: T) -> T {
    let (nodes, weights) = gauss_legendre::<T>(points.max(4));
    adaptive_panel(f, a, b, &nodes, &weights, tol, 0)
}

fn adaptive_panel<T: Scalar, F: Fn(T) -> T>(
    f: &F,
    a: T,
    b: T,
    nodes: &[T],
    weights: &[T],
    tol: T,
    depth: usize,
) -> T {
    let whole = panel(f, a, b, nodes, weights);
    let mid = (a + b) * T::c(0.5);
    let left = panel(f, a, mid, nodes, weights);
    let right = panel(f, mid, b, nodes, weights);
    let refined = left + right;
    if (refined - whole).abs() <= tol * (T::one() + refined.abs()) || depth >= 40 {
        refined
    } else {
        let half_tol = tol * T::c(0.5);
        adaptive_panel(f, a, mid, nodes, weights, half_tol, depth + 1)
            + adaptive_panel(f, mid, b, nodes, weights, half_tol, depth + 1)
    }
}

fn panel<T: Scalar, F: Fn(T) -> T>(f: &F, a: T, b: T, nodes: &[T], weights: &[T]) -> T {
    let half = (b - a) * T::c(0.5);
    let midpt = (a + b) * T::c(0.5);
    let mut acc = T::zero();
    for (x, w) in nodes.iter().zip(weights) {
        acc += *w * f(midpt + half * *x);
    }
    acc * half
}
