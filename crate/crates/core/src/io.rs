//! CSV interchange: data records, regularization paths, diagnostics,
//! selection reports and model files.
//!
//! All files are headered, comma separated, with `.` decimals. Floats are
//! written with Rust's shortest round-trip formatting.

use std::io::{Read, Write};

use ndarray::{Array1, Array2};

use crate::dictionary::{Dictionary, RegressorTerm, TimeSeriesData};
use crate::error::{NarmaxError, Result};
use crate::models::{EstimatedModel, Selection};
use crate::solver::{LassoPath, PathConfig, PathEntry};

fn parse_f64(field: &str, line: usize) -> Result<f64> {
    field.trim().parse().map_err(|_| NarmaxError::Parse {
        line,
        message: format!("not a number: {field:?}"),
    })
}

fn input_names(n_inputs: usize) -> Vec<String> {
    if n_inputs == 1 {
        vec!["u".to_string()]
    } else {
        (1..=n_inputs).map(|c| format!("u{c}")).collect()
    }
}

/// Writes `k,u,y[,v]` (inputs become `u1,u2,...` when there are several).
/// `k` counts samples from 1.
pub fn write_data<W: Write>(writer: W, data: &TimeSeriesData, noise: Option<&Array1<f64>>) -> Result<()> {
    if let Some(v) = noise {
        if v.len() != data.len() {
            return Err(NarmaxError::LengthMismatch {
                what: "noise",
                expected: data.len(),
                found: v.len(),
            });
        }
    }
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["k".to_string()];
    header.extend(input_names(data.n_inputs()));
    header.push("y".into());
    if noise.is_some() {
        header.push("v".into());
    }
    w.write_record(&header)?;
    for k in 0..data.len() {
        let mut row = vec![(k + 1).to_string()];
        row.extend(data.inputs().row(k).iter().map(f64::to_string));
        row.push(data.output()[k].to_string());
        if let Some(v) = noise {
            row.push(v[k].to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a data file written by [`write_data`]. Returns the noise column
/// when present.
pub fn read_data<R: Read>(reader: R) -> Result<(TimeSeriesData, Option<Array1<f64>>)> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h.trim() == name);
    let y_col = find("y").ok_or_else(|| NarmaxError::Parse {
        line: 1,
        message: "missing y column".into(),
    })?;
    let v_col = find("v");
    let mut u_cols: Vec<(usize, usize)> = headers
        .iter()
        .enumerate()
        .filter_map(|(i, h)| {
            let h = h.trim();
            match h.strip_prefix('u')? {
                "" => Some((1, i)),
                n => n.parse::<usize>().ok().filter(|&c| c >= 1).map(|c| (c, i)),
            }
        })
        .collect();
    u_cols.sort();
    if u_cols.iter().enumerate().any(|(i, &(c, _))| c != i + 1) {
        return Err(NarmaxError::Parse {
            line: 1,
            message: "input columns must be u or u1..uN without gaps".into(),
        });
    }

    let mut y = Vec::new();
    let mut v = Vec::new();
    let mut u = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record?;
        let line = i + 2;
        let field = |col: usize| {
            record.get(col).ok_or_else(|| NarmaxError::Parse {
                line,
                message: "short row".into(),
            })
        };
        y.push(parse_f64(field(y_col)?, line)?);
        if let Some(c) = v_col {
            v.push(parse_f64(field(c)?, line)?);
        }
        for &(_, c) in &u_cols {
            u.push(parse_f64(field(c)?, line)?);
        }
    }
    let n = y.len();
    let inputs = Array2::from_shape_vec((n, u_cols.len()), u).expect("row-major input block");
    let data = TimeSeriesData::new(inputs, Array1::from(y))?;
    Ok((data, v_col.map(|_| Array1::from(v))))
}

/// `lambda,<term names>` with one row per grid point.
pub fn write_path<W: Write>(writer: W, path: &LassoPath) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["lambda".to_string()];
    header.extend(path.dictionary.term_names());
    w.write_record(&header)?;
    for entry in &path.entries {
        let mut row = vec![entry.lambda.to_string()];
        row.extend(entry.theta.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a path CSV. The dictionary is rebuilt from the header's term names;
/// per-entry solver diagnostics are not stored in this file and come back as
/// `cycles = 0`, `converged = true`.
pub fn read_path<R: Read>(reader: R) -> Result<LassoPath> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers()?.clone();
    if headers.get(0).map(str::trim) != Some("lambda") {
        return Err(NarmaxError::Parse {
            line: 1,
            message: "path header must start with lambda".into(),
        });
    }
    let terms = headers
        .iter()
        .skip(1)
        .map(str::parse::<RegressorTerm>)
        .collect::<Result<Vec<_>>>()?;
    let dictionary = Dictionary::from_terms(terms)?;
    let p = dictionary.len();

    let mut entries = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record?;
        let line = i + 2;
        if record.len() != p + 1 {
            return Err(NarmaxError::Parse {
                line,
                message: format!("expected {} fields, found {}", p + 1, record.len()),
            });
        }
        let lambda = parse_f64(&record[0], line)?;
        let theta = record
            .iter()
            .skip(1)
            .map(|f| parse_f64(f, line))
            .collect::<Result<Array1<f64>>>()?;
        entries.push(PathEntry {
            lambda,
            active_count: theta.iter().filter(|&&t| t != 0.0).count(),
            theta,
            cycles: 0,
            converged: true,
        });
    }
    if entries.is_empty() {
        return Err(NarmaxError::Parse {
            line: 2,
            message: "path file has no entries".into(),
        });
    }
    Ok(LassoPath {
        lambda_max: entries[0].lambda,
        dictionary,
        config: PathConfig::default(),
        entries,
        residuals: Vec::new(),
    })
}

/// `lambda,cycles,active_count,converged`.
pub fn write_diagnostics<W: Write>(writer: W, path: &LassoPath) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["lambda", "cycles", "active_count", "converged"])?;
    for e in &path.entries {
        w.write_record([
            e.lambda.to_string(),
            e.cycles.to_string(),
            e.active_count.to_string(),
            e.converged.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `lambda,sum_abs_error,active_count`; divergent entries show `inf`.
pub fn write_selection<W: Write>(writer: W, path: &LassoPath, selection: &Selection) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["lambda", "sum_abs_error", "active_count"])?;
    for (e, err) in path.entries.iter().zip(&selection.errors) {
        w.write_record([e.lambda.to_string(), err.to_string(), e.active_count.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `k,y_sim,y` with `k` counting from 1.
pub fn write_simulation<W: Write>(writer: W, simulated: &Array1<f64>, observed: &Array1<f64>) -> Result<()> {
    if simulated.len() != observed.len() {
        return Err(NarmaxError::LengthMismatch {
            what: "simulation",
            expected: observed.len(),
            found: simulated.len(),
        });
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["k", "y_sim", "y"])?;
    for (k, (s, o)) in simulated.iter().zip(observed).enumerate() {
        w.write_record([(k + 1).to_string(), s.to_string(), o.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `term,coefficient` for every dictionary term, zeros included, so the
/// model's lag structure survives a round trip.
pub fn write_model<W: Write>(writer: W, model: &EstimatedModel) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["term", "coefficient"])?;
    for (term, coef) in model.dictionary().terms().iter().zip(model.theta().iter()) {
        w.write_record([term.to_string(), coef.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_model<R: Read>(reader: R) -> Result<EstimatedModel> {
    let mut r = csv::Reader::from_reader(reader);
    let mut terms = Vec::new();
    let mut theta = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record?;
        let line = i + 2;
        if record.len() != 2 {
            return Err(NarmaxError::Parse {
                line,
                message: "expected term,coefficient".into(),
            });
        }
        terms.push(record[0].parse::<RegressorTerm>()?);
        theta.push(parse_f64(&record[1], line)?);
    }
    EstimatedModel::new(Dictionary::from_terms(terms)?, Array1::from(theta), None)
}
