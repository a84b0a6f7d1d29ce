//! Reference computations for tests. Nothing here shares code with the
//! library paths it is used to check.

use ndarray::{Array1, Array2};

/// `0.5 * ||y - X theta||^2 + lambda * ||theta||_1`.
pub fn lasso_objective(x: &Array2<f64>, y: &Array1<f64>, theta: &Array1<f64>, lambda: f64) -> f64 {
    let r = y - &x.dot(theta);
    0.5 * r.dot(&r) + lambda * theta.iter().map(|t| t.abs()).sum::<f64>()
}

fn shrink(z: f64, t: f64) -> f64 {
    z.signum() * (z.abs() - t).max(0.0)
}

/// Largest eigenvalue of `X'X` by power iteration.
fn lipschitz(x: &Array2<f64>) -> f64 {
    let gram = x.t().dot(x);
    let mut v = Array1::from_elem(gram.ncols(), 1.0);
    let mut value = 0.0;
    for _ in 0..10_000 {
        let w = gram.dot(&v);
        let norm = w.dot(&w).sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let next = w / norm;
        let diff = (&next - &v).mapv(f64::abs).sum();
        v = next;
        value = norm;
        if diff < 1e-15 {
            break;
        }
    }
    value
}

/// Accelerated proximal gradient (FISTA with adaptive restart) for the Lasso
/// on a fixed matrix. Stops when the proximal-gradient fixed-point residual
/// falls below `tol` in max-norm.
pub fn lasso_proximal_gradient(x: &Array2<f64>, y: &Array1<f64>, lambda: f64, tol: f64) -> Array1<f64> {
    let p = x.ncols();
    let l = lipschitz(x) * (1.0 + 1e-9);
    if l == 0.0 {
        return Array1::zeros(p);
    }
    let step = 1.0 / l;
    let xty = x.t().dot(y);
    let gram = x.t().dot(x);
    let prox_step = |z: &Array1<f64>| -> Array1<f64> {
        let grad = gram.dot(z) - &xty;
        (z - &(grad * step)).mapv(|v| shrink(v, lambda * step))
    };

    let mut theta = Array1::<f64>::zeros(p);
    let mut z = theta.clone();
    let mut t = 1.0_f64;
    for _ in 0..5_000_000 {
        let next = prox_step(&z);
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let momentum = (t - 1.0) / t_next;
        // restart when the step opposes the momentum direction
        if (&z - &next).dot(&(&next - &theta)) > 0.0 {
            t = 1.0;
            z = theta.clone();
            continue;
        }
        z = &next + &((&next - &theta) * momentum);
        theta = next;
        t = t_next;

        let fixed = prox_step(&theta);
        let gap = (&fixed - &theta).mapv(f64::abs).fold(0.0, |a: f64, &b| a.max(b));
        if gap < tol {
            return fixed;
        }
    }
    theta
}

/// Minimizes a scalar function on `[lo, hi]` by dense grid search followed by
/// golden-section refinement around the best grid point.
pub fn scalar_minimize(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let n = 2000;
    let h = (hi - lo) / n as f64;
    let best = (0..=n)
        .map(|i| lo + h * i as f64)
        .min_by(|a, b| f(*a).partial_cmp(&f(*b)).unwrap())
        .unwrap();
    let (mut a, mut b) = ((best - h).max(lo), (best + h).min(hi));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let mid = (a + b) / 2.0;
    // a kink at zero is a common minimizer for L1 problems
    if f(0.0) <= f(mid) && lo <= 0.0 && hi >= 0.0 {
        0.0
    } else {
        mid
    }
}

/// Counts monomials of total degree `1..=degree` in `vars` variables by
/// walking every exponent vector. Returns `(total, containing_any_of_last)`
/// where `last` is the number of trailing variables that count as "marked".
pub fn enumerate_monomials(vars: usize, degree: u32, last: usize) -> (usize, usize) {
    let mut exps = vec![0u32; vars];
    let mut total = 0;
    let mut marked = 0;
    loop {
        // odometer increment with digits 0..=degree
        let mut i = 0;
        loop {
            if i == vars {
                return (total, marked);
            }
            exps[i] += 1;
            if exps[i] <= degree {
                break;
            }
            exps[i] = 0;
            i += 1;
        }
        let d: u32 = exps.iter().sum();
        if d >= 1 && d <= degree {
            total += 1;
            if exps[vars - last..].iter().any(|&e| e > 0) {
                marked += 1;
            }
        }
    }
}

/// Direct evaluation of a monomial at sample `k`. Each factor is
/// `(signal, lag, exponent)` where `signal` selects a slice from `signals`.
pub fn naive_monomial(signals: &[&[f64]], factors: &[(usize, usize, u32)], k: usize) -> f64 {
    let mut value = 1.0;
    for &(s, lag, exp) in factors {
        for _ in 0..exp {
            value *= signals[s][k - lag];
        }
    }
    value
}

/// Binomial coefficient.
pub fn choose(n: u64, k: u64) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn enumeration_matches_binomial() {
        for vars in 1..6 {
            for deg in 1..4 {
                assert_eq!(enumerate_monomials(vars, deg, 0).0 as u64, choose((vars as u64) + deg as u64, deg as u64) - 1);
            }
        }
    }

    #[test]
    fn proximal_gradient_solves_orthogonal_case() {
        let x = array![[1.0, 0.0], [0.0, 2.0], [0.0, 0.0]];
        let y = array![3.0, 1.0, 5.0];
        let theta = lasso_proximal_gradient(&x, &y, 1.0, 1e-14);
        assert!((theta[0] - 2.0).abs() < 1e-10);
        assert!((theta[1] - 0.25).abs() < 1e-10);
    }
}
