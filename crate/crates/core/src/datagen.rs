//! Reproducible excitation, noise and benchmark systems.
//!
//! Random draws come from ChaCha8 (`rand_chacha`) seeded with
//! `seed_from_u64(seed)` on stream `stream`, with normals from
//! `rand_distr::StandardNormal`. Both crates are pinned so sequences stay
//! stable across releases.

use ndarray::Array1;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dictionary::TimeSeriesData;
use crate::error::{NarmaxError, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignalSpec {
    pub len: usize,
    /// Samples each drawn value is held for.
    pub hold: usize,
    pub sigma: f64,
    pub seed: u64,
    /// Independent ChaCha stream; lets one seed drive several signals.
    pub stream: u64,
}

impl SignalSpec {
    pub fn new(len: usize, hold: usize, sigma: f64, seed: u64) -> Self {
        SignalSpec {
            len,
            hold,
            sigma,
            seed,
            stream: 0,
        }
    }

    pub fn with_stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.len < 1 || self.hold < 1 || !(self.sigma >= 0.0) {
            return Err(NarmaxError::InvalidConfig(format!(
                "signal needs len >= 1, hold >= 1, sigma >= 0 (got {self:?})"
            )));
        }
        Ok(())
    }

    fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Gaussian draws with standard deviation `sigma`, each repeated `hold` times.
pub fn held_gaussian_input(spec: &SignalSpec) -> Result<Array1<f64>> {
    spec.validate()?;
    let mut rng = spec.rng();
    let draws = spec.len.div_ceil(spec.hold);
    let mut out = Vec::with_capacity(draws * spec.hold);
    for _ in 0..draws {
        let z: f64 = StandardNormal.sample(&mut rng);
        out.extend(std::iter::repeat_n(spec.sigma * z, spec.hold));
    }
    out.truncate(spec.len);
    Ok(Array1::from(out))
}

/// I.i.d. `N(0, sigma^2)` samples; `hold` is ignored.
pub fn white_gaussian(spec: &SignalSpec) -> Result<Array1<f64>> {
    held_gaussian_input(&SignalSpec { hold: 1, ..*spec })
}

/// A simulated record together with the noise that drove it.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkData {
    pub data: TimeSeriesData,
    pub noise: Array1<f64>,
}

fn check_lengths(u: &Array1<f64>, v: &Array1<f64>) -> Result<()> {
    if u.len() != v.len() {
        return Err(NarmaxError::LengthMismatch {
            what: "noise",
            expected: u.len(),
            found: v.len(),
        });
    }
    Ok(())
}

/// `y[k] = 0.5 y[k-1] - 0.5 u[k-1] + 0.5 v[k-1] + v[k]` from rest.
pub fn simulate_example1(u: &Array1<f64>, v: &Array1<f64>) -> Result<BenchmarkData> {
    check_lengths(u, v)?;
    let n = u.len();
    let mut y = Array1::zeros(n);
    for k in 0..n {
        let past = if k >= 1 {
            0.5 * y[k - 1] - 0.5 * u[k - 1] + 0.5 * v[k - 1]
        } else {
            0.0
        };
        y[k] = past + v[k];
    }
    Ok(BenchmarkData {
        data: TimeSeriesData::single_input(u.clone(), y)?,
        noise: v.clone(),
    })
}

/// Polynomial-exponential benchmark system, from rest:
///
/// ```text
/// y[k] = (0.8 - 0.5 exp(-y[k-1]^2)) y[k-1] - (0.3 + 0.9 exp(-y[k-1]^2)) y[k-2]
///        + u[k-1] + 0.2 u[k-2] + 0.1 u[k-1] u[k-2]
///        + 0.1 v[k-1] + 0.3 v[k-2] + v[k]
/// ```
pub fn simulate_example2(u: &Array1<f64>, v: &Array1<f64>) -> Result<BenchmarkData> {
    check_lengths(u, v)?;
    let n = u.len();
    let mut y = Array1::<f64>::zeros(n);
    let at = |s: &Array1<f64>, k: usize, lag: usize| if k >= lag { s[k - lag] } else { 0.0 };
    for k in 0..n {
        let y1 = at(&y, k, 1);
        let y2 = at(&y, k, 2);
        let u1 = at(u, k, 1);
        let u2 = at(u, k, 2);
        let gain = (-y1 * y1).exp();
        y[k] = (0.8 - 0.5 * gain) * y1 - (0.3 + 0.9 * gain) * y2
            + u1
            + 0.2 * u2
            + 0.1 * u1 * u2
            + 0.1 * at(v, k, 1)
            + 0.3 * at(v, k, 2)
            + v[k];
    }
    Ok(BenchmarkData {
        data: TimeSeriesData::single_input(u.clone(), y)?,
        noise: v.clone(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Benchmark {
    Example1,
    Example2,
}

impl Benchmark {
    pub fn name(self) -> &'static str {
        match self {
            Benchmark::Example1 => "example1",
            Benchmark::Example2 => "example2",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "example1" => Some(Benchmark::Example1),
            "example2" => Some(Benchmark::Example2),
            _ => None,
        }
    }

    /// Default (training, validation) window lengths.
    pub fn default_lengths(self) -> (usize, usize) {
        match self {
            Benchmark::Example1 => (2000, 1000),
            Benchmark::Example2 => (1000, 500),
        }
    }

    pub fn default_noise_sigma(self) -> f64 {
        match self {
            Benchmark::Example1 => 0.3,
            Benchmark::Example2 => 0.5,
        }
    }

    pub const DEFAULT_HOLD: usize = 5;

    /// One realization: a held unit-variance Gaussian input on stream
    /// `2 * realization` and white noise on stream `2 * realization + 1`.
    pub fn realization(self, len: usize, sigma: f64, hold: usize, seed: u64, realization: u64) -> Result<BenchmarkData> {
        let u = held_gaussian_input(&SignalSpec::new(len, hold, 1.0, seed).with_stream(2 * realization))?;
        let v = white_gaussian(&SignalSpec::new(len, 1, sigma, seed).with_stream(2 * realization + 1))?;
        match self {
            Benchmark::Example1 => simulate_example1(&u, &v),
            Benchmark::Example2 => simulate_example2(&u, &v),
        }
    }

    /// Training (realization 0) and validation (realization 1) records with
    /// default lengths, noise level and hold.
    pub fn train_validation(self, seed: u64) -> Result<(BenchmarkData, BenchmarkData)> {
        let (n_train, n_val) = self.default_lengths();
        let sigma = self.default_noise_sigma();
        Ok((
            self.realization(n_train, sigma, Self::DEFAULT_HOLD, seed, 0)?,
            self.realization(n_val, sigma, Self::DEFAULT_HOLD, seed, 1)?,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn hold_equal_to_len_is_constant() {
        let u = held_gaussian_input(&SignalSpec::new(17, 17, 1.0, 3)).unwrap();
        assert!(u.iter().all(|&x| x == u[0]));
    }

    #[test]
    fn blocks_are_constant() {
        let u = held_gaussian_input(&SignalSpec::new(103, 5, 1.0, 9)).unwrap();
        assert_eq!(u.len(), 103);
        for block in u.as_slice().unwrap().chunks(5) {
            assert!(block.iter().all(|&x| x == block[0]));
        }
        assert_ne!(u[0], u[5]);
    }

    #[test]
    fn zero_sigma_noise() {
        let v = white_gaussian(&SignalSpec::new(50, 1, 0.0, 1)).unwrap();
        assert!(v.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn seed_determinism_and_streams() {
        let spec = SignalSpec::new(64, 1, 1.0, 42);
        assert_eq!(white_gaussian(&spec).unwrap(), white_gaussian(&spec).unwrap());
        assert_ne!(white_gaussian(&spec).unwrap(), white_gaussian(&spec.with_stream(1)).unwrap());
        assert_ne!(
            white_gaussian(&spec).unwrap(),
            white_gaussian(&SignalSpec { seed: 43, ..spec }).unwrap()
        );
    }

    #[test]
    fn rejects_bad_spec() {
        assert!(white_gaussian(&SignalSpec::new(0, 1, 1.0, 0)).is_err());
        assert!(held_gaussian_input(&SignalSpec::new(10, 0, 1.0, 0)).is_err());
        assert!(white_gaussian(&SignalSpec::new(10, 1, -1.0, 0)).is_err());
    }

    #[test]
    fn example1_rest_and_impulse() {
        let zeros = Array1::zeros(20);
        let rest = simulate_example1(&zeros, &zeros).unwrap();
        assert!(rest.data.output().iter().all(|&y| y == 0.0));

        let mut u = Array1::zeros(6);
        u[0] = 1.0;
        let imp = simulate_example1(&u, &Array1::zeros(6)).unwrap();
        assert_eq!(imp.data.output(), array![0.0, -0.5, -0.25, -0.125, -0.0625, -0.03125]);
    }

    #[test]
    fn example1_step_settles_at_dc_gain() {
        let n = 200;
        let step = simulate_example1(&Array1::ones(n), &Array1::zeros(n)).unwrap();
        assert_abs_diff_eq!(step.data.output()[n - 1], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn example2_rest_and_impulse() {
        let zeros = Array1::zeros(20);
        let rest = simulate_example2(&zeros, &zeros).unwrap();
        assert!(rest.data.output().iter().all(|&y| y == 0.0));

        let mut u = Array1::zeros(5);
        u[0] = 1.0;
        let out = simulate_example2(&u, &Array1::zeros(5)).unwrap();
        let y = out.data.output();
        assert_eq!(y[0], 0.0);
        assert_eq!(y[1], 1.0);
        assert_abs_diff_eq!(y[2], 0.8 - 0.5 * (-1.0f64).exp() + 0.2, epsilon = 1e-15);
    }

    #[test]
    fn default_windows() {
        let (train, val) = Benchmark::Example1.train_validation(5).unwrap();
        assert_eq!((train.data.len(), val.data.len()), (2000, 1000));
        let (train, val) = Benchmark::Example2.train_validation(5).unwrap();
        assert_eq!((train.data.len(), val.data.len()), (1000, 500));
        assert_ne!(train.noise.slice(ndarray::s![..500]), val.noise);
    }
}
