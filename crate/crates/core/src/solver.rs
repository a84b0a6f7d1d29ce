//! Pathwise cyclical coordinate descent for L1-penalized NARMAX estimation.
//!
//! Minimizes `0.5 * ||y - X(r) theta||^2 + lambda * ||theta||_1` where the
//! columns of `X` that contain error factors are evaluated on the current
//! residual `r`. Each coordinate visit rebuilds its column (when it depends on
//! `r`), applies the soft-thresholded update, and patches the stored residual
//! in place (the naive update; the covariance form is unusable here because
//! the Gram matrix changes with `r`).

use ndarray::{s, Array1, ArrayView1};

use crate::dictionary::{build_matrix, Dictionary, RegressorMatrix, TimeSeriesData};
use crate::error::{NarmaxError, Result};

/// `S(z; lambda)`: shrinks `z` towards zero by `lambda`.
#[inline]
pub fn soft_threshold(z: f64, lambda: f64) -> f64 {
    if z > lambda {
        z - lambda
    } else if z < -lambda {
        z + lambda
    } else {
        0.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathConfig {
    /// Number of grid points `K`.
    pub k_points: usize,
    /// `lambda_min / lambda_max`.
    pub lambda_min_ratio: f64,
    /// Stop once a full sweep moves no coefficient by this much or more.
    pub tolerance: f64,
    /// Cap on sweeps per grid point.
    pub max_cycles: usize,
    pub use_active_set: bool,
}

impl Default for PathConfig {
    fn default() -> Self {
        PathConfig {
            k_points: 100,
            lambda_min_ratio: 1e-3,
            tolerance: 1e-7,
            max_cycles: 10_000,
            use_active_set: true,
        }
    }
}

impl PathConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_points < 1 {
            return Err(NarmaxError::InvalidConfig("K must be at least 1".into()));
        }
        if !(self.lambda_min_ratio > 0.0 && self.lambda_min_ratio < 1.0) {
            return Err(NarmaxError::InvalidConfig(format!(
                "lambda_min_ratio must lie in (0, 1), got {}",
                self.lambda_min_ratio
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(NarmaxError::InvalidConfig("tolerance must be positive".into()));
        }
        if self.max_cycles < 1 {
            return Err(NarmaxError::InvalidConfig("max_cycles must be at least 1".into()));
        }
        Ok(())
    }
}

/// `K` log-spaced values from `lambda_max` down to `lambda_min_ratio * lambda_max`.
pub fn lambda_grid(lambda_max: f64, config: &PathConfig) -> Result<Vec<f64>> {
    config.validate()?;
    if !(lambda_max > 0.0 && lambda_max.is_finite()) {
        return Err(NarmaxError::InvalidConfig(format!(
            "lambda_max must be positive and finite, got {lambda_max}"
        )));
    }
    let k = config.k_points;
    if k == 1 {
        return Ok(vec![lambda_max]);
    }
    let log_ratio = config.lambda_min_ratio.ln();
    let mut grid: Vec<f64> = (0..k)
        .map(|i| lambda_max * (log_ratio * i as f64 / (k - 1) as f64).exp())
        .collect();
    grid[0] = lambda_max;
    grid[k - 1] = lambda_max * config.lambda_min_ratio;
    Ok(grid)
}

/// Result of solving one grid point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FitOutcome {
    pub cycles: usize,
    pub converged: bool,
}

/// Mutable state carried along the path: parameters, residual and matrix.
#[derive(Clone, Debug)]
pub struct SolverState<'a> {
    data: &'a TimeSeriesData,
    dictionary: &'a Dictionary,
    theta: Array1<f64>,
    /// One entry per sample; the first `start` entries stay at their initial
    /// values and only feed lagged error factors.
    residual: Array1<f64>,
    matrix: RegressorMatrix,
    column_norms_sq: Array1<f64>,
    active: Vec<bool>,
    active_count: usize,
}

impl<'a> SolverState<'a> {
    /// The initialization point: `r = y`, `theta = 0`, `X` built from `r`.
    pub fn new(data: &'a TimeSeriesData, dictionary: &'a Dictionary) -> Result<Self> {
        let residual = data.output().to_owned();
        let matrix = build_matrix(dictionary, data, residual.view())?;
        let column_norms_sq = matrix.values().columns().into_iter().map(|c| c.dot(&c)).collect();
        let p = dictionary.len();
        Ok(SolverState {
            data,
            dictionary,
            theta: Array1::zeros(p),
            residual,
            matrix,
            column_norms_sq,
            active: vec![false; p],
            active_count: 0,
        })
    }

    pub fn theta(&self) -> ArrayView1<'_, f64> {
        self.theta.view()
    }

    /// Full-length residual (prefix included).
    pub fn residual(&self) -> ArrayView1<'_, f64> {
        self.residual.view()
    }

    /// Residual over the regression range `start..N`.
    pub fn residual_in_range(&self) -> ArrayView1<'_, f64> {
        self.residual.slice(s![self.matrix.start()..])
    }

    /// Regression target `y[start..N]`.
    pub fn target(&self) -> ArrayView1<'_, f64> {
        self.data.output().slice_move(s![self.matrix.start()..])
    }

    pub fn matrix(&self) -> &RegressorMatrix {
        &self.matrix
    }

    pub fn column_norms_sq(&self) -> ArrayView1<'_, f64> {
        self.column_norms_sq.view()
    }

    pub fn active_set(&self) -> Vec<usize> {
        self.active
            .iter()
            .enumerate()
            .filter_map(|(j, &a)| a.then_some(j))
            .collect()
    }

    pub fn active_count(&self) -> usize {
        self.active_count
    }

    pub fn dictionary(&self) -> &Dictionary {
        self.dictionary
    }

    /// `max_j |y^T x_j|` on the current matrix. At the initialization point
    /// this is the smallest penalty with an all-zero solution.
    pub fn lambda_max(&self) -> Result<f64> {
        if self.column_norms_sq.iter().all(|&n| n == 0.0) {
            return Err(NarmaxError::DegenerateRegressors);
        }
        let y = self.target();
        Ok(self
            .matrix
            .values()
            .columns()
            .into_iter()
            .map(|c| c.dot(&y).abs())
            .fold(0.0, f64::max))
    }

    /// One coordinate update for `theta[j]`; returns `|theta_j+ - theta_j|`.
    pub fn coordinate_step(&mut self, j: usize, lambda: f64) -> f64 {
        if self.matrix.is_error_column(j) {
            let term = &self.dictionary.terms()[j];
            let theta_j = self.theta[j];
            let stale = (theta_j != 0.0).then(|| self.matrix.column(j).to_owned());
            self.matrix.refresh_column(j, term, self.data, self.residual.view());
            let col = self.matrix.column(j);
            self.column_norms_sq[j] = col.dot(&col);
            if let Some(stale) = stale {
                // keep r = y - X theta with respect to the rebuilt column
                let start = self.matrix.start();
                let shift = &col - &stale;
                self.residual.slice_mut(s![start..]).scaled_add(-theta_j, &shift);
            }
        }

        let old = self.theta[j];
        let norm_sq = self.column_norms_sq[j];
        let new = if norm_sq > 0.0 {
            let x = self.matrix.column(j);
            let r = self.residual.slice(s![self.matrix.start()..]);
            let rho = x.dot(&r) + old * norm_sq;
            soft_threshold(rho, lambda) / norm_sq
        } else {
            0.0
        };

        let delta = new - old;
        if delta != 0.0 && norm_sq > 0.0 {
            let start = self.matrix.start();
            let x = self.matrix.column(j);
            self.residual.slice_mut(s![start..]).scaled_add(-delta, &x);
        }
        self.theta[j] = new;
        self.set_active(j, new != 0.0);
        delta.abs()
    }

    fn set_active(&mut self, j: usize, on: bool) {
        if self.active[j] != on {
            self.active[j] = on;
            if on {
                self.active_count += 1;
            } else {
                self.active_count -= 1;
            }
        }
    }

    fn sweep(&mut self, coords: impl Iterator<Item = usize>, lambda: f64) -> f64 {
        coords.fold(0.0, |acc, j| acc.max(self.coordinate_step(j, lambda)))
    }

    /// Solves one grid point from the current (warm) state.
    ///
    /// With the active-set strategy: a full sweep, then sweeps over the
    /// nonzero coordinates until they settle, then another full sweep; stops
    /// once a full sweep meets the tolerance without changing membership.
    pub fn fit(&mut self, lambda: f64, config: &PathConfig) -> FitOutcome {
        let p = self.theta.len();
        let tol = config.tolerance;
        let mut cycles = 0;

        if !config.use_active_set {
            while cycles < config.max_cycles {
                let change = self.sweep(0..p, lambda);
                cycles += 1;
                if change < tol {
                    return self.finish(cycles, tol);
                }
            }
            return FitOutcome { cycles, converged: false };
        }

        while cycles < config.max_cycles {
            let before = self.active.clone();
            let change = self.sweep(0..p, lambda);
            cycles += 1;
            if change < tol && before == self.active {
                return self.finish(cycles, tol);
            }
            let active = self.active_set();
            if active.is_empty() {
                continue;
            }
            while cycles < config.max_cycles {
                let change = self.sweep(active.iter().copied(), lambda);
                cycles += 1;
                if change < tol {
                    break;
                }
            }
        }
        FitOutcome { cycles, converged: false }
    }

    fn finish(&mut self, cycles: usize, tol: f64) -> FitOutcome {
        let converged = self.resync_residual(tol);
        FitOutcome { cycles, converged }
    }

    /// Full recomputation `r = y - X(r) theta` over the regression range,
    /// repeated until the residual moves by less than `tol`. Returns whether
    /// it settled.
    fn resync_residual(&mut self, tol: f64) -> bool {
        const MAX_PASSES: usize = 100;
        let start = self.matrix.start();
        for _ in 0..MAX_PASSES {
            for (j, term) in self.dictionary.terms().iter().enumerate() {
                if self.matrix.is_error_column(j) {
                    self.matrix.refresh_column(j, term, self.data, self.residual.view());
                    let col = self.matrix.column(j);
                    self.column_norms_sq[j] = col.dot(&col);
                }
            }
            let fresh = &self.target() - &self.matrix.values().dot(&self.theta);
            let mut current = self.residual.slice_mut(s![start..]);
            let moved = fresh
                .iter()
                .zip(current.iter())
                .fold(0.0, |m: f64, (a, b)| m.max((a - b).abs()));
            current.assign(&fresh);
            if moved < tol {
                return true;
            }
        }
        false
    }

    /// Stationarity residuals of the penalized objective on the matrix
    /// rebuilt from the current residual.
    ///
    /// `max(|x_j' r| - lambda, 0)` for zero coefficients and
    /// `|x_j' r - lambda * sign(theta_j)|` otherwise.
    pub fn kkt_violations(&self, lambda: f64) -> Result<Vec<f64>> {
        let frozen = build_matrix(self.dictionary, self.data, self.residual.view())?;
        let r = self.residual_in_range();
        Ok(frozen
            .values()
            .columns()
            .into_iter()
            .zip(self.theta.iter())
            .map(|(x, &t)| {
                let g = x.dot(&r);
                if t == 0.0 {
                    (g.abs() - lambda).max(0.0)
                } else {
                    (g - lambda * t.signum()).abs()
                }
            })
            .collect())
    }

    /// `y - X(r) theta` over the regression range with `X` rebuilt from the
    /// stored residual; equals the stored residual at a fixed point.
    pub fn recomputed_residual(&self) -> Result<Array1<f64>> {
        let frozen = build_matrix(self.dictionary, self.data, self.residual.view())?;
        Ok(&self.target() - &frozen.values().dot(&self.theta))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathEntry {
    pub lambda: f64,
    pub theta: Array1<f64>,
    pub cycles: usize,
    pub active_count: usize,
    pub converged: bool,
}

/// Solutions along a decreasing penalty grid.
#[derive(Clone, Debug)]
pub struct LassoPath {
    pub dictionary: Dictionary,
    pub config: PathConfig,
    pub lambda_max: f64,
    pub entries: Vec<PathEntry>,
    /// Full-length residual at each entry; empty for paths loaded from disk.
    pub residuals: Vec<Array1<f64>>,
}

impl LassoPath {
    pub fn lambdas(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.lambda).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// `lambda_max` at the initialization point `r = y`, `theta = 0`.
pub fn lambda_max(data: &TimeSeriesData, dictionary: &Dictionary) -> Result<f64> {
    SolverState::new(data, dictionary)?.lambda_max()
}

/// Runs the full regularization path with warm starts.
///
/// When `y` is orthogonal to every initial column (`lambda_max == 0`) the path
/// collapses to a single all-zero entry at `lambda = 0`.
pub fn fit_path(data: &TimeSeriesData, dictionary: &Dictionary, config: &PathConfig) -> Result<LassoPath> {
    config.validate()?;
    let mut state = SolverState::new(data, dictionary)?;
    let lambda_max = state.lambda_max()?;
    let grid = if lambda_max > 0.0 {
        lambda_grid(lambda_max, config)?
    } else {
        vec![0.0]
    };

    let mut entries = Vec::with_capacity(grid.len());
    let mut residuals = Vec::with_capacity(grid.len());
    for lambda in grid {
        let outcome = state.fit(lambda, config);
        entries.push(PathEntry {
            lambda,
            theta: state.theta.clone(),
            cycles: outcome.cycles,
            active_count: state.active_count,
            converged: outcome.converged,
        });
        residuals.push(state.residual.clone());
    }
    Ok(LassoPath {
        dictionary: dictionary.clone(),
        config: config.clone(),
        lambda_max,
        entries,
        residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dictionary::{generate_polynomial_dictionary, RegressorTerm};
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn soft_threshold_branches() {
        assert_eq!(soft_threshold(5.0, 2.0), 3.0);
        assert_eq!(soft_threshold(1.0, 2.0), 0.0);
        assert_eq!(soft_threshold(-5.0, 2.0), -3.0);
        assert_eq!(soft_threshold(-0.7, 0.0), -0.7);
    }

    #[test]
    fn grid_is_geometric() {
        let cfg = PathConfig {
            k_points: 3,
            lambda_min_ratio: 0.01,
            ..PathConfig::default()
        };
        let g = lambda_grid(100.0, &cfg).unwrap();
        assert_abs_diff_eq!(g[0], 100.0);
        assert_abs_diff_eq!(g[1], 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g[2], 1.0, epsilon = 1e-12);

        let single = PathConfig {
            k_points: 1,
            ..PathConfig::default()
        };
        assert_eq!(lambda_grid(7.0, &single).unwrap(), vec![7.0]);
        assert!(lambda_grid(0.0, &cfg).is_err());
    }

    #[test]
    fn default_config() {
        let cfg = PathConfig::default();
        assert_eq!(cfg.k_points, 100);
        assert_eq!(cfg.lambda_min_ratio, 1e-3);
        assert_eq!(cfg.tolerance, 1e-7);
        assert_eq!(cfg.max_cycles, 10_000);
    }

    #[test]
    fn config_validation() {
        let bad = [
            PathConfig { k_points: 0, ..PathConfig::default() },
            PathConfig { lambda_min_ratio: 1.0, ..PathConfig::default() },
            PathConfig { lambda_min_ratio: 0.0, ..PathConfig::default() },
            PathConfig { tolerance: 0.0, ..PathConfig::default() },
            PathConfig { max_cycles: 0, ..PathConfig::default() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    fn ar_data() -> TimeSeriesData {
        // y[k] = 0.6 y[k-1] + u[k-1] + small deterministic disturbance
        let n = 60;
        let u = Array1::from_iter((0..n).map(|k| ((k * 7 % 11) as f64 - 5.0) / 5.0));
        let mut y = Array1::zeros(n);
        for k in 1..n {
            y[k] = 0.6 * y[k - 1] + u[k - 1] + 0.05 * ((k as f64) * 1.3).sin();
        }
        TimeSeriesData::single_input(u, y).unwrap()
    }

    #[test]
    fn single_column_lambda_max_is_norm_squared() {
        // x_1 = y[k-1] over the range; make y[k] = y[k-1] so the column equals the target.
        let y = array![2.0, 2.0, 2.0, 2.0];
        let data = TimeSeriesData::single_input(Array1::zeros(4), y).unwrap();
        let d = Dictionary::from_terms(vec!["y[k-1]".parse().unwrap()]).unwrap();
        assert_abs_diff_eq!(lambda_max(&data, &d).unwrap(), 12.0);
    }

    #[test]
    fn zero_columns_are_degenerate() {
        let data = TimeSeriesData::single_input(Array1::zeros(5), array![1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let d = Dictionary::from_terms(vec!["u[k-1]".parse().unwrap()]).unwrap();
        assert!(matches!(lambda_max(&data, &d), Err(NarmaxError::DegenerateRegressors)));
    }

    #[test]
    fn dead_zone_keeps_zero() {
        let data = ar_data();
        let d = generate_polynomial_dictionary(2, &[2], 0, 1).unwrap();
        let mut state = SolverState::new(&data, &d).unwrap();
        let lmax = state.lambda_max().unwrap();
        for j in 0..d.len() {
            assert_eq!(state.coordinate_step(j, lmax), 0.0);
        }
        assert_eq!(state.residual(), data.output());
        assert!(state.theta().iter().all(|&t| t == 0.0));
    }

    #[test]
    fn unpenalized_single_column_is_least_squares() {
        let data = ar_data();
        let d = Dictionary::from_terms(vec!["u[k-1]".parse().unwrap()]).unwrap();
        let mut state = SolverState::new(&data, &d).unwrap();
        state.coordinate_step(0, 0.0);
        let x = state.matrix().column(0).to_owned();
        let y = state.target().to_owned();
        assert_abs_diff_eq!(state.theta()[0], y.dot(&x) / x.dot(&x), epsilon = 1e-12);
    }

    #[test]
    fn zero_norm_column_is_skipped() {
        let data = TimeSeriesData::new(
            ndarray::Array2::from_shape_vec((5, 2), vec![0.0, 1.0, 0.0, -1.0, 0.0, 2.0, 0.0, 0.5, 0.0, 1.0]).unwrap(),
            array![0.0, 1.0, -1.0, 2.0, 0.5],
        )
        .unwrap();
        let d = Dictionary::from_terms(vec!["u[k-1]".parse().unwrap(), "u2[k-1]".parse().unwrap()]).unwrap();
        let mut state = SolverState::new(&data, &d).unwrap();
        state.fit(0.0, &PathConfig::default());
        assert_eq!(state.theta()[0], 0.0);
        assert!(state.theta()[1] != 0.0);
    }

    #[test]
    fn fit_at_lambda_max_takes_one_cycle() {
        let data = ar_data();
        let d = generate_polynomial_dictionary(2, &[2], 2, 2).unwrap();
        let mut state = SolverState::new(&data, &d).unwrap();
        let lmax = state.lambda_max().unwrap();
        let out = state.fit(lmax, &PathConfig::default());
        assert_eq!(out, FitOutcome { cycles: 1, converged: true });
        assert!(state.theta().iter().all(|&t| t == 0.0));
    }

    #[test]
    fn path_head_is_zero_and_grid_decreases() {
        let data = ar_data();
        let d = generate_polynomial_dictionary(2, &[2], 1, 2).unwrap();
        let cfg = PathConfig {
            k_points: 20,
            lambda_min_ratio: 1e-2,
            ..PathConfig::default()
        };
        let path = fit_path(&data, &d, &cfg).unwrap();
        assert_eq!(path.len(), 20);
        assert!(path.entries[0].theta.iter().all(|&t| t == 0.0));
        assert_eq!(path.entries[0].active_count, 0);
        assert!(path.lambdas().windows(2).all(|w| w[1] < w[0]));
        for e in &path.entries {
            assert_eq!(e.active_count, e.theta.iter().filter(|&&t| t != 0.0).count());
        }
        assert!(path.entries.last().unwrap().active_count > 0);
    }

    #[test]
    fn orthogonal_target_gives_zero_path() {
        // y is nonzero only at the first sample, which never appears in the regression range.
        let data = TimeSeriesData::single_input(array![1.0, 2.0, -1.0, 0.5], array![3.0, 0.0, 0.0, 0.0]).unwrap();
        let d = Dictionary::from_terms(vec!["u[k-1]".parse().unwrap()]).unwrap();
        assert_eq!(lambda_max(&data, &d).unwrap(), 0.0);
        let path = fit_path(&data, &d, &PathConfig::default()).unwrap();
        assert_eq!(path.len(), 1);
        assert!(path.entries[0].theta.iter().all(|&t| t == 0.0));
    }

    #[test]
    fn max_cycles_flags_non_convergence() {
        let data = ar_data();
        let d = generate_polynomial_dictionary(3, &[3], 0, 2).unwrap();
        let mut state = SolverState::new(&data, &d).unwrap();
        let lmax = state.lambda_max().unwrap();
        let cfg = PathConfig {
            max_cycles: 2,
            tolerance: 1e-15,
            ..PathConfig::default()
        };
        let out = state.fit(lmax * 1e-4, &cfg);
        assert!(!out.converged);
        assert_eq!(out.cycles, 2);
    }

    #[test]
    fn without_active_set_reaches_same_solution() {
        let data = ar_data();
        let d = generate_polynomial_dictionary(2, &[2], 0, 2).unwrap();
        let lmax = lambda_max(&data, &d).unwrap();
        let tight = PathConfig {
            tolerance: 1e-12,
            ..PathConfig::default()
        };
        let mut a = SolverState::new(&data, &d).unwrap();
        a.fit(0.05 * lmax, &tight);
        let mut b = SolverState::new(&data, &d).unwrap();
        b.fit(
            0.05 * lmax,
            &PathConfig {
                use_active_set: false,
                ..tight
            },
        );
        for (x, y) in a.theta().iter().zip(b.theta().iter()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-8);
        }
    }

    #[test]
    fn error_column_rebuilt_on_visit() {
        let data = ar_data();
        let e1: RegressorTerm = "e[k-1]".parse().unwrap();
        let d = Dictionary::from_terms(vec!["y[k-1]".parse().unwrap(), "u[k-1]".parse().unwrap(), e1]).unwrap();
        let mut state = SolverState::new(&data, &d).unwrap();
        state.coordinate_step(0, 0.0);
        let before = state.residual().to_owned();
        assert_ne!(before, data.output().to_owned());
        state.coordinate_step(2, 0.0);
        let expected: Array1<f64> = (1..data.len()).map(|k| before[k - 1]).collect();
        assert_eq!(state.matrix().column(2), expected);
        assert_abs_diff_eq!(state.column_norms_sq()[2], expected.dot(&expected), epsilon = 1e-12);
    }
}
