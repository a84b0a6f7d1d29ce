//! Fits both benchmark systems over a range of seeds and prints the
//! validation-selected models.
//!
//! ```text
//! cargo run --release -p narmax-lasso --example reproduce -- 10
//! ```

use std::time::Instant;

use narmax_lasso::datagen::Benchmark;
use narmax_lasso::{fit_path, generate_polynomial_dictionary, select_lambda, PathConfig};

fn main() -> narmax_lasso::Result<()> {
    let seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let config = PathConfig::default();

    for (bench, dictionary) in [
        (Benchmark::Example1, generate_polynomial_dictionary(10, &[10], 10, 1)?),
        (Benchmark::Example2, generate_polynomial_dictionary(3, &[3], 2, 2)?),
    ] {
        println!("== {} (p = {})", bench.name(), dictionary.len());
        for seed in 0..seeds {
            let (train, val) = bench.train_validation(seed)?;
            let t0 = Instant::now();
            let path = fit_path(&train.data, &dictionary, &config)?;
            let elapsed = t0.elapsed();
            let sel = select_lambda(&path, &val.data)?;
            let model = path.model(sel.best_index)?;
            let terms: Vec<String> = model
                .nonzero_terms()
                .iter()
                .map(|(t, c)| format!("{c:+.3} {t}"))
                .collect();
            let unconverged = path.entries.iter().filter(|e| !e.converged).count();
            println!(
                "seed {seed:>3}  {:>6.1?}  idx {:>3}  mae {:.3}  unconverged {unconverged}  {}",
                elapsed,
                sel.best_index,
                sel.best_mae(),
                terms.join(" ")
            );
        }
    }
    Ok(())
}
