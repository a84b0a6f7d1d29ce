//! Wall-clock timing of full path fits on Example-2 data, laid out like the
//! timing table: one row per dictionary, one column per
//! (lambda_min ratio, K, N) cell.

use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use clap::Args;

use narmax_lasso::datagen::Benchmark;
use narmax_lasso::{error_term_fraction, fit_path, generate_polynomial_dictionary, PathConfig, TimeSeriesData};

use crate::{write_file, CliResult};

/// `n_y:n_u:n_e` lag bounds for one table block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LagTriple {
    pub ny: usize,
    pub nu: usize,
    pub ne: usize,
}

impl FromStr for LagTriple {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [ny, nu, ne] = parts.as_slice() else {
            return Err(format!("expected ny:nu:ne, got {s:?}"));
        };
        let num = |v: &str| v.trim().parse::<usize>().map_err(|_| format!("not a lag: {v:?}"));
        Ok(LagTriple {
            ny: num(ny)?,
            nu: num(nu)?,
            ne: num(ne)?,
        })
    }
}

/// `ratio:K` penalty-grid setting.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSetting {
    pub ratio: f64,
    pub k_points: usize,
}

impl FromStr for GridSetting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (ratio, k) = s.split_once(':').ok_or_else(|| format!("expected ratio:K, got {s:?}"))?;
        Ok(GridSetting {
            ratio: ratio.trim().parse().map_err(|_| format!("not a ratio: {ratio:?}"))?,
            k_points: k.trim().parse().map_err(|_| format!("not a K: {k:?}"))?,
        })
    }
}

#[derive(Args, Debug, Clone)]
pub struct BenchArgs {
    /// Lag bounds per block as ny:nu:ne.
    #[arg(long, value_delimiter = ',', default_value = "3:3:0,3:2:1,2:2:2,1:1:4")]
    pub configs: Vec<LagTriple>,
    #[arg(long, value_delimiter = ',', default_value = "2,3")]
    pub degrees: Vec<u32>,
    /// Penalty grids as ratio:K.
    #[arg(long, value_delimiter = ',', default_value = "1e-2:100,1e-4:200,1e-6:300")]
    pub settings: Vec<GridSetting>,
    /// Training lengths.
    #[arg(long = "n", value_delimiter = ',', default_value = "100,1000,10000")]
    pub lengths: Vec<usize>,
    /// Timed fits per cell; the median is reported.
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    #[arg(long, default_value_t = 0.5)]
    pub sigma: f64,
    #[arg(long, default_value_t = Benchmark::DEFAULT_HOLD)]
    pub hold: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Clone, Debug)]
pub struct Cell {
    pub setting: GridSetting,
    pub len: usize,
    /// Median seconds, or the failure message.
    pub seconds: Result<f64, String>,
}

#[derive(Clone, Debug)]
pub struct Row {
    pub lags: LagTriple,
    pub degree: u32,
    pub p: usize,
    pub error_fraction: f64,
    pub cells: Vec<Cell>,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        0.5 * (xs[m - 1] + xs[m])
    }
}

fn time_cell(data: &TimeSeriesData, lags: LagTriple, degree: u32, config: &PathConfig, repeats: usize) -> Result<f64, String> {
    let dictionary = generate_polynomial_dictionary(lags.ny, &[lags.nu], lags.ne, degree).map_err(|e| e.to_string())?;
    let mut times = Vec::with_capacity(repeats);
    for _ in 0..repeats.max(1) {
        let started = Instant::now();
        fit_path(data, &dictionary, config).map_err(|e| e.to_string())?;
        times.push(started.elapsed().as_secs_f64());
    }
    Ok(median(times))
}

/// Runs every cell of the grid. Cell failures are kept in the result rather
/// than aborting the run.
pub fn run_grid(args: &BenchArgs) -> CliResult<Vec<Row>> {
    let mut datasets = Vec::with_capacity(args.lengths.len());
    for &len in &args.lengths {
        let record = Benchmark::Example2.realization(len, args.sigma, args.hold, args.seed, 0)?;
        datasets.push(record.data);
    }

    let mut rows = Vec::new();
    for &lags in &args.configs {
        for &degree in &args.degrees {
            let dictionary = generate_polynomial_dictionary(lags.ny, &[lags.nu], lags.ne, degree)?;
            let mut cells = Vec::new();
            for &setting in &args.settings {
                let config = PathConfig {
                    k_points: setting.k_points,
                    lambda_min_ratio: setting.ratio,
                    tolerance: args.tol,
                    ..PathConfig::default()
                };
                for (&len, data) in args.lengths.iter().zip(&datasets) {
                    cells.push(Cell {
                        setting,
                        len,
                        seconds: time_cell(data, lags, degree, &config, args.repeats),
                    });
                }
            }
            rows.push(Row {
                lags,
                degree,
                p: dictionary.len(),
                error_fraction: error_term_fraction(&dictionary),
                cells,
            });
        }
    }
    Ok(rows)
}

fn column_name(cell: &Cell) -> String {
    format!("ratio{:e}_K{}_N{}", cell.setting.ratio, cell.setting.k_points, cell.len)
}

pub fn write_table<W: Write>(mut w: W, rows: &[Row]) -> std::io::Result<()> {
    let mut header = vec!["n_y", "n_u", "n_e", "degree", "p", "pe_over_p"]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>();
    if let Some(first) = rows.first() {
        header.extend(first.cells.iter().map(column_name));
    }
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let mut fields = vec![
            row.lags.ny.to_string(),
            row.lags.nu.to_string(),
            row.lags.ne.to_string(),
            row.degree.to_string(),
            row.p.to_string(),
            format!("{:.4}", row.error_fraction),
        ];
        fields.extend(row.cells.iter().map(|c| match &c.seconds {
            Ok(t) => format!("{t:.6}"),
            Err(_) => "failed".to_string(),
        }));
        writeln!(w, "{}", fields.join(","))?;
    }
    Ok(())
}

pub fn run(args: &BenchArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let rows = run_grid(args)?;
    for row in &rows {
        for cell in &row.cells {
            let status = match &cell.seconds {
                Ok(t) => format!("{t:.4} s"),
                Err(msg) => format!("failed: {msg}"),
            };
            crate::report(
                stdout,
                format_args!(
                    "n_y={} n_u={} n_e={} degree={} (p={}) {} -> {status}",
                    row.lags.ny,
                    row.lags.nu,
                    row.lags.ne,
                    row.degree,
                    row.p,
                    column_name(cell)
                ),
            )?;
        }
    }
    let path = write_file(&args.out, "bench.csv", |w| Ok(write_table(w, &rows)?))?;
    crate::report(stdout, format_args!("wrote {}", path.display()))
}
