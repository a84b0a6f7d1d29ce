//! Extended least squares: alternate ordinary least-squares fits with
//! re-estimation of the residual that feeds the error regressors.

use nalgebra::{DMatrix, DVector};
use ndarray::{s, Array1, ArrayView1, ArrayView2};

use crate::dictionary::{build_matrix, Dictionary, TimeSeriesData};
use crate::error::{NarmaxError, Result};

/// Least-squares solution of `min ||y - X theta||^2`.
///
/// Uses an SVD, so rank-deficient problems get the minimum-norm minimizer.
/// Singular values below `max(rows, cols) * eps * sigma_max` count as zero.
pub fn ols_solve(x: ArrayView2<'_, f64>, y: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
    let (rows, cols) = x.dim();
    if rows == 0 || cols == 0 {
        return Err(NarmaxError::EmptyMatrix);
    }
    if y.len() != rows {
        return Err(NarmaxError::LengthMismatch {
            what: "ols target",
            expected: rows,
            found: y.len(),
        });
    }
    let a = DMatrix::from_fn(rows, cols, |i, j| x[[i, j]]);
    let b = DVector::from_iterator(rows, y.iter().copied());
    let svd = a.svd(true, true);
    let sigma_max = svd.singular_values.max();
    if sigma_max == 0.0 {
        return Ok(Array1::zeros(cols));
    }
    let cutoff = rows.max(cols) as f64 * f64::EPSILON * sigma_max;
    let theta = svd
        .solve(&b, cutoff)
        .map_err(|e| NarmaxError::InvalidConfig(format!("svd solve failed: {e}")))?;
    Ok(theta.iter().copied().collect())
}

/// Starting guess for the residual that feeds error regressors.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum InitialResidual {
    Zero,
    /// `r = y`, matching the coordinate-descent initialization.
    #[default]
    Output,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ElsConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub initial_residual: InitialResidual,
}

impl Default for ElsConfig {
    fn default() -> Self {
        ElsConfig {
            tolerance: 1e-7,
            max_iterations: 500,
            initial_residual: InitialResidual::Output,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ElsFit {
    pub theta: Array1<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Full-length residual after the last iteration.
    pub residual: Array1<f64>,
}

/// Runs extended least squares until successive parameter vectors, and
/// successive residuals, differ by less than `tolerance` in max-norm.
/// Without error terms the matrix never changes, so the first OLS solution
/// is returned after one iteration.
pub fn extended_least_squares(data: &TimeSeriesData, dictionary: &Dictionary, config: &ElsConfig) -> Result<ElsFit> {
    if !(config.tolerance > 0.0) || config.max_iterations < 1 {
        return Err(NarmaxError::InvalidConfig(
            "ELS needs a positive tolerance and at least one iteration".into(),
        ));
    }
    dictionary.check_data(data)?;
    let start = dictionary.max_lag();
    let y = data.output();
    let target = y.slice(s![start..]);
    let mut residual = match config.initial_residual {
        InitialResidual::Output => y.to_owned(),
        InitialResidual::Zero => Array1::zeros(data.len()),
    };

    let mut previous: Option<Array1<f64>> = None;
    for iteration in 1..=config.max_iterations {
        let matrix = build_matrix(dictionary, data, residual.view())?;
        let theta = ols_solve(matrix.values(), target)?;
        let fresh = &target - &matrix.values().dot(&theta);
        let moved = max_abs_diff(&residual.slice(s![start..]).to_owned(), &fresh);
        residual.slice_mut(s![start..]).assign(&fresh);

        let settled = match &previous {
            None => !dictionary.has_error_terms(),
            Some(prev) => max_abs_diff(prev, &theta) < config.tolerance && moved < config.tolerance,
        };
        if settled {
            return Ok(ElsFit {
                theta,
                iterations: iteration,
                converged: true,
                residual,
            });
        }
        previous = Some(theta);
    }
    Ok(ElsFit {
        theta: previous.expect("at least one iteration ran"),
        iterations: config.max_iterations,
        converged: false,
        residual,
    })
}

fn max_abs_diff(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dictionary::generate_polynomial_dictionary;
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Array2};

    #[test]
    fn column_equal_to_target() {
        let y = array![1.0, -2.0, 3.0];
        let x = y.clone().into_shape_with_order((3, 1)).unwrap();
        let theta = ols_solve(x.view(), y.view()).unwrap();
        assert_abs_diff_eq!(theta[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn orthogonal_columns_decouple() {
        let x = array![[1.0, 1.0], [1.0, -1.0], [1.0, 1.0], [1.0, -1.0]];
        let y = array![3.0, 1.0, 2.0, 0.5];
        let theta = ols_solve(x.view(), y.view()).unwrap();
        for j in 0..2 {
            let c = x.column(j);
            assert_abs_diff_eq!(theta[j], y.dot(&c) / c.dot(&c), epsilon = 1e-12);
        }
    }

    #[test]
    fn rank_deficient_gives_minimum_norm() {
        // duplicate column: minimum norm splits the weight evenly
        let x = array![[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]];
        let y = array![2.0, 4.0, 6.0];
        let theta = ols_solve(x.view(), y.view()).unwrap();
        assert_abs_diff_eq!(theta[0], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(theta[1], 1.0, epsilon = 1e-10);
    }

    #[test]
    fn empty_matrix_rejected() {
        let x = Array2::<f64>::zeros((0, 2));
        assert!(matches!(
            ols_solve(x.view(), Array1::zeros(0).view()),
            Err(NarmaxError::EmptyMatrix)
        ));
    }

    #[test]
    fn narx_dictionary_is_one_shot() {
        let n = 80;
        let u = Array1::from_iter((0..n).map(|k| ((k * 5 % 7) as f64) - 3.0));
        let mut y = Array1::zeros(n);
        for k in 1..n {
            y[k] = 0.4 * y[k - 1] + 0.7 * u[k - 1] + 0.01 * (k as f64).cos();
        }
        let data = TimeSeriesData::single_input(u, y).unwrap();
        let d = generate_polynomial_dictionary(2, &[2], 0, 1).unwrap();
        let fit = extended_least_squares(&data, &d, &ElsConfig::default()).unwrap();
        assert_eq!(fit.iterations, 1);
        assert!(fit.converged);
        let m = build_matrix(&d, &data, data.output()).unwrap();
        let ols = ols_solve(m.values(), data.output().slice(s![2..])).unwrap();
        assert_eq!(fit.theta, ols);
    }
}
