//! Monomial regressors over lagged outputs, inputs and residuals.
//!
//! A [`RegressorTerm`] is a product of powers of lagged signals, e.g.
//! `y[k-1]^2 u[k-2] e[k-1]`. A [`Dictionary`] is an ordered, duplicate-free
//! list of such terms; column `j` of the regressor matrix is term `j`
//! evaluated over the effective sample range `max_lag..N`.

use std::collections::HashSet;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, ArrayViewMut1, ShapeBuilder};

use crate::error::{NarmaxError, Result};

/// The signal a factor reads from.
///
/// The derived ordering (outputs, then inputs by channel, then errors) is the
/// canonical factor order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Signal {
    Output,
    Input(usize),
    Error,
}

impl Signal {
    fn name(self) -> String {
        match self {
            Signal::Output => "y".to_string(),
            Signal::Input(0) => "u".to_string(),
            Signal::Input(c) => format!("u{}", c + 1),
            Signal::Error => "e".to_string(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Factor {
    pub signal: Signal,
    pub lag: usize,
    pub exponent: u32,
}

impl Factor {
    pub fn new(signal: Signal, lag: usize, exponent: u32) -> Self {
        Factor {
            signal,
            lag,
            exponent,
        }
    }

    fn key(&self) -> (Signal, usize) {
        (self.signal, self.lag)
    }
}

/// One monomial basis function. Always non-empty and in canonical form.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RegressorTerm {
    factors: Vec<Factor>,
}

impl RegressorTerm {
    /// Builds a term from arbitrary factors, sorting them and merging
    /// repeated `(signal, lag)` pairs into a single exponent.
    pub fn new(factors: impl IntoIterator<Item = Factor>) -> Result<Self> {
        let mut factors: Vec<Factor> = factors.into_iter().collect();
        if factors.is_empty() {
            return Err(NarmaxError::InvalidTerm("a term needs at least one factor".into()));
        }
        for f in &factors {
            if f.lag == 0 {
                return Err(NarmaxError::InvalidTerm("lags start at 1".into()));
            }
            if f.exponent == 0 {
                return Err(NarmaxError::InvalidTerm("exponents must be positive".into()));
            }
        }
        factors.sort_by_key(Factor::key);
        let mut merged: Vec<Factor> = Vec::with_capacity(factors.len());
        for f in factors {
            match merged.last_mut() {
                Some(last) if last.key() == f.key() => last.exponent += f.exponent,
                _ => merged.push(f),
            }
        }
        Ok(RegressorTerm { factors: merged })
    }

    /// A single first-degree factor such as `y[k-1]`.
    pub fn linear(signal: Signal, lag: usize) -> Result<Self> {
        Self::new([Factor::new(signal, lag, 1)])
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn degree(&self) -> u32 {
        self.factors.iter().map(|f| f.exponent).sum()
    }

    pub fn max_lag(&self) -> usize {
        self.factors.iter().map(|f| f.lag).max().unwrap_or(0)
    }

    pub fn has_error(&self) -> bool {
        self.factors.iter().any(|f| f.signal == Signal::Error)
    }

    /// True when every factor reads the residual signal.
    pub fn is_pure_error(&self) -> bool {
        self.factors.iter().all(|f| f.signal == Signal::Error)
    }

    /// Evaluates the term at sample `k`, reading lagged signal values through
    /// `lookup(signal, index)`. The caller guarantees `k >= max_lag()`.
    pub fn value_at(&self, k: usize, mut lookup: impl FnMut(Signal, usize) -> f64) -> f64 {
        self.factors
            .iter()
            .map(|f| lookup(f.signal, k - f.lag).powi(f.exponent as i32))
            .product()
    }
}

impl fmt::Display for RegressorTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for factor in &self.factors {
            write!(f, "{}[k-{}]", factor.signal.name(), factor.lag)?;
            if factor.exponent > 1 {
                write!(f, "^{}", factor.exponent)?;
            }
        }
        Ok(())
    }
}

impl FromStr for RegressorTerm {
    type Err = NarmaxError;

    /// Parses the notation produced by `Display`, e.g. `y[k-1]^2u2[k-3]e[k-1]`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: &str| NarmaxError::InvalidTerm(format!("{s:?}: {msg}"));
        let bytes = s.trim().as_bytes();
        let mut pos = 0;
        let mut factors = Vec::new();

        let read_number = |pos: &mut usize| -> Option<usize> {
            let begin = *pos;
            while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
                *pos += 1;
            }
            std::str::from_utf8(&bytes[begin..*pos]).ok()?.parse().ok()
        };

        while pos < bytes.len() {
            let signal = match bytes[pos] {
                b'y' => {
                    pos += 1;
                    Signal::Output
                }
                b'e' => {
                    pos += 1;
                    Signal::Error
                }
                b'u' => {
                    pos += 1;
                    match read_number(&mut pos) {
                        None => Signal::Input(0),
                        Some(0) => return Err(bad("input channels are numbered from 1")),
                        Some(c) => Signal::Input(c - 1),
                    }
                }
                _ => return Err(bad("expected y, u or e")),
            };
            if !bytes[pos..].starts_with(b"[k-") {
                return Err(bad("expected [k-"));
            }
            pos += 3;
            let lag = read_number(&mut pos).ok_or_else(|| bad("missing lag"))?;
            if pos >= bytes.len() || bytes[pos] != b']' {
                return Err(bad("expected ]"));
            }
            pos += 1;
            let mut exponent = 1;
            if pos < bytes.len() && bytes[pos] == b'^' {
                pos += 1;
                exponent = read_number(&mut pos).ok_or_else(|| bad("missing exponent"))? as u32;
            }
            factors.push(Factor::new(signal, lag, exponent));
        }
        RegressorTerm::new(factors)
    }
}

/// Upper lag bounds used to generate (or describe) a dictionary.
///
/// Input channel `c` uses lags `input_delays[c]..=inputs[c]`; the delay
/// defaults to 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LagBounds {
    pub output: usize,
    pub inputs: Vec<usize>,
    pub input_delays: Vec<usize>,
    pub error: usize,
}

impl LagBounds {
    pub fn new(output: usize, inputs: Vec<usize>, error: usize) -> Self {
        let input_delays = vec![1; inputs.len()];
        LagBounds {
            output,
            inputs,
            input_delays,
            error,
        }
    }

    pub fn with_input_delays(mut self, delays: Vec<usize>) -> Result<Self> {
        if delays.len() != self.inputs.len() {
            return Err(NarmaxError::InvalidBounds(format!(
                "{} input delays given for {} input channels",
                delays.len(),
                self.inputs.len()
            )));
        }
        if delays.iter().any(|&d| d == 0) {
            return Err(NarmaxError::InvalidBounds("input delays must be at least 1".into()));
        }
        self.input_delays = delays;
        Ok(self)
    }

    /// Lagged variables in canonical order.
    fn variables(&self) -> Vec<(Signal, usize)> {
        let mut vars: Vec<(Signal, usize)> = (1..=self.output).map(|l| (Signal::Output, l)).collect();
        for (c, (&bound, &delay)) in self.inputs.iter().zip(&self.input_delays).enumerate() {
            vars.extend((delay..=bound).map(|l| (Signal::Input(c), l)));
        }
        vars.extend((1..=self.error).map(|l| (Signal::Error, l)));
        vars
    }

    pub fn variable_count(&self) -> usize {
        self.variables().len()
    }

    fn admits(&self, factor: &Factor) -> bool {
        match factor.signal {
            Signal::Output => factor.lag <= self.output,
            Signal::Error => factor.lag <= self.error,
            Signal::Input(c) => c < self.inputs.len() && factor.lag >= self.input_delays[c] && factor.lag <= self.inputs[c],
        }
    }
}

impl fmt::Display for LagBounds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let inputs: Vec<String> = self.inputs.iter().map(usize::to_string).collect();
        write!(f, "n_y={} n_u={} n_e={}", self.output, inputs.join(","), self.error)
    }
}

/// Ordered set of regressor terms defining a model structure.
#[derive(Clone, Debug, PartialEq)]
pub struct Dictionary {
    terms: Vec<RegressorTerm>,
    bounds: LagBounds,
    max_degree: u32,
}

/// Every monomial of total degree `1..=n_degree` over `y[k-1..n_y]`,
/// `u_c[k-1..n_u[c]]` and `e[k-1..n_e]`, in canonical order.
pub fn generate_polynomial_dictionary(n_y: usize, n_u: &[usize], n_e: usize, n_degree: u32) -> Result<Dictionary> {
    Dictionary::polynomial(LagBounds::new(n_y, n_u.to_vec(), n_e), n_degree)
}

impl Dictionary {
    pub fn polynomial(bounds: LagBounds, max_degree: u32) -> Result<Self> {
        if max_degree < 1 {
            return Err(NarmaxError::InvalidBounds("n_degree must be at least 1".into()));
        }
        let vars = bounds.variables();
        if vars.is_empty() {
            return Err(NarmaxError::InvalidBounds("at least one lag bound must be positive".into()));
        }

        let mut terms = Vec::new();
        let mut combo = Vec::with_capacity(max_degree as usize);
        for degree in 1..=max_degree as usize {
            push_combinations(&vars, degree, 0, &mut combo, &mut terms);
        }
        Ok(Dictionary {
            terms,
            bounds,
            max_degree,
        })
    }

    /// Builds a dictionary from explicit terms, inferring the tightest bounds.
    pub fn from_terms(terms: Vec<RegressorTerm>) -> Result<Self> {
        let mut bounds = LagBounds::new(0, Vec::new(), 0);
        for term in &terms {
            for f in term.factors() {
                match f.signal {
                    Signal::Output => bounds.output = bounds.output.max(f.lag),
                    Signal::Error => bounds.error = bounds.error.max(f.lag),
                    Signal::Input(c) => {
                        if bounds.inputs.len() <= c {
                            bounds.inputs.resize(c + 1, 0);
                            bounds.input_delays.resize(c + 1, 1);
                        }
                        bounds.inputs[c] = bounds.inputs[c].max(f.lag);
                    }
                }
            }
        }
        let max_degree = terms.iter().map(RegressorTerm::degree).max().unwrap_or(1);
        Self::with_bounds(terms, bounds, max_degree)
    }

    pub fn with_bounds(terms: Vec<RegressorTerm>, bounds: LagBounds, max_degree: u32) -> Result<Self> {
        if terms.is_empty() {
            return Err(NarmaxError::InvalidBounds("dictionary has no terms".into()));
        }
        let mut seen = HashSet::with_capacity(terms.len());
        for term in &terms {
            if !seen.insert(term) {
                return Err(NarmaxError::DuplicateTerm(term.to_string()));
            }
            if term.degree() > max_degree || !term.factors().iter().all(|f| bounds.admits(f)) {
                return Err(NarmaxError::InvalidBounds(format!("term {term} lies outside {bounds} n_degree={max_degree}")));
            }
        }
        Ok(Dictionary {
            terms,
            bounds,
            max_degree,
        })
    }

    pub fn terms(&self) -> &[RegressorTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn bounds(&self) -> &LagBounds {
        &self.bounds
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    /// Largest lag of any factor; also the first regression sample index.
    pub fn max_lag(&self) -> usize {
        self.terms.iter().map(RegressorTerm::max_lag).max().unwrap_or(0)
    }

    /// Number of input channels the terms actually reference.
    pub fn required_inputs(&self) -> usize {
        self.terms
            .iter()
            .flat_map(|t| t.factors())
            .filter_map(|f| match f.signal {
                Signal::Input(c) => Some(c + 1),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    pub fn error_term_count(&self) -> usize {
        self.terms.iter().filter(|t| t.has_error()).count()
    }

    pub fn has_error_terms(&self) -> bool {
        self.terms.iter().any(RegressorTerm::has_error)
    }

    pub fn term_names(&self) -> Vec<String> {
        self.terms.iter().map(ToString::to_string).collect()
    }

    pub fn position(&self, term: &RegressorTerm) -> Option<usize> {
        self.terms.iter().position(|t| t == term)
    }

    /// Text form: a `#` header with the bounds, then one term per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("# {} n_degree={}\n", self.bounds, self.max_degree);
        for term in &self.terms {
            out.push_str(&term.to_string());
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(NarmaxError::Parse {
            line: 1,
            message: "empty dictionary file".into(),
        })?;
        let (bounds, max_degree) = parse_header(header)?;
        let terms = lines
            .map(|(i, l)| {
                l.parse::<RegressorTerm>().map_err(|e| NarmaxError::Parse {
                    line: i + 1,
                    message: e.to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::with_bounds(terms, bounds, max_degree)
    }

    /// Checks that `data` is long enough and has every referenced input.
    pub fn check_data(&self, data: &TimeSeriesData) -> Result<()> {
        let max_lag = self.max_lag();
        if data.len() <= max_lag {
            return Err(NarmaxError::InsufficientData {
                samples: data.len(),
                max_lag,
            });
        }
        let needed = self.required_inputs();
        if needed > data.n_inputs() {
            return Err(NarmaxError::MissingInput {
                channel: needed - 1,
                available: data.n_inputs(),
            });
        }
        Ok(())
    }
}

/// Fraction of terms containing at least one error factor.
pub fn error_term_fraction(dictionary: &Dictionary) -> f64 {
    if dictionary.is_empty() {
        return 0.0;
    }
    dictionary.error_term_count() as f64 / dictionary.len() as f64
}

fn push_combinations(
    vars: &[(Signal, usize)],
    remaining: usize,
    from: usize,
    combo: &mut Vec<usize>,
    out: &mut Vec<RegressorTerm>,
) {
    if remaining == 0 {
        let factors = combo.iter().map(|&i| Factor::new(vars[i].0, vars[i].1, 1));
        out.push(RegressorTerm::new(factors).expect("generated factors are valid"));
        return;
    }
    for i in from..vars.len() {
        combo.push(i);
        push_combinations(vars, remaining - 1, i, combo, out);
        combo.pop();
    }
}

fn parse_header(line: &str) -> Result<(LagBounds, u32)> {
    let err = |message: String| NarmaxError::Parse { line: 1, message };
    let body = line
        .trim()
        .strip_prefix('#')
        .ok_or_else(|| err("missing '#' header".into()))?;
    let (mut n_y, mut n_u, mut n_e, mut degree) = (None, None, None, None);
    for field in body.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| err(format!("malformed header field {field:?}")))?;
        let num = |v: &str| v.parse::<usize>().map_err(|_| err(format!("bad value in {field:?}")));
        match key {
            "n_y" => n_y = Some(num(value)?),
            "n_e" => n_e = Some(num(value)?),
            "n_degree" => degree = Some(num(value)? as u32),
            "n_u" => {
                n_u = Some(if value.is_empty() {
                    Vec::new()
                } else {
                    value.split(',').map(num).collect::<Result<Vec<_>>>()?
                })
            }
            _ => return Err(err(format!("unknown header field {key:?}"))),
        }
    }
    match (n_y, n_u, n_e, degree) {
        (Some(y), Some(u), Some(e), Some(d)) => Ok((LagBounds::new(y, u, e), d)),
        _ => Err(err("header needs n_y, n_u, n_e and n_degree".into())),
    }
}

/// Sampled multi-input single-output record.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeriesData {
    inputs: Array2<f64>,
    output: Array1<f64>,
}

impl TimeSeriesData {
    /// `inputs` is `N x N_u` (N_u may be zero), `output` has length `N`.
    pub fn new(inputs: Array2<f64>, output: Array1<f64>) -> Result<Self> {
        if inputs.nrows() != output.len() {
            return Err(NarmaxError::LengthMismatch {
                what: "input rows",
                expected: output.len(),
                found: inputs.nrows(),
            });
        }
        if output.is_empty() {
            return Err(NarmaxError::InsufficientData { samples: 0, max_lag: 0 });
        }
        if let Some(i) = output.iter().position(|v| !v.is_finite()) {
            return Err(NarmaxError::NonFinite { what: "output", index: i });
        }
        for (i, row) in inputs.outer_iter().enumerate() {
            if row.iter().any(|v| !v.is_finite()) {
                return Err(NarmaxError::NonFinite { what: "inputs", index: i });
            }
        }
        Ok(TimeSeriesData { inputs, output })
    }

    pub fn single_input(input: Array1<f64>, output: Array1<f64>) -> Result<Self> {
        let n = input.len();
        let inputs = input.into_shape_with_order((n, 1)).expect("column vector reshape");
        Self::new(inputs, output)
    }

    pub fn len(&self) -> usize {
        self.output.len()
    }

    pub fn is_empty(&self) -> bool {
        self.output.is_empty()
    }

    pub fn n_inputs(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn output(&self) -> ArrayView1<'_, f64> {
        self.output.view()
    }

    pub fn inputs(&self) -> ArrayView2<'_, f64> {
        self.inputs.view()
    }

    pub fn input(&self, channel: usize) -> ArrayView1<'_, f64> {
        self.inputs.column(channel)
    }

    /// Copy with the mean removed from the output and every input channel.
    pub fn centered(&self) -> Self {
        let mut out = self.clone();
        let mean = out.output.mean().unwrap_or(0.0);
        out.output -= mean;
        for mut col in out.inputs.columns_mut() {
            let m = col.mean().unwrap_or(0.0);
            col -= m;
        }
        out
    }

    /// Samples `range` of the record.
    pub fn window(&self, range: Range<usize>) -> Result<Self> {
        if range.end > self.len() || range.is_empty() {
            return Err(NarmaxError::InvalidConfig(format!("window {range:?} outside 0..{}", self.len())));
        }
        Self::new(
            self.inputs.slice(ndarray::s![range.clone(), ..]).to_owned(),
            self.output.slice(ndarray::s![range]).to_owned(),
        )
    }
}

/// Evaluates `term` at every sample of `range`, reading error factors from
/// `residual` (one entry per sample of `data`).
pub fn evaluate_column(
    term: &RegressorTerm,
    data: &TimeSeriesData,
    residual: ArrayView1<'_, f64>,
    range: Range<usize>,
) -> Result<Array1<f64>> {
    if residual.len() != data.len() {
        return Err(NarmaxError::LengthMismatch {
            what: "residual",
            expected: data.len(),
            found: residual.len(),
        });
    }
    if range.end > data.len() {
        return Err(NarmaxError::InsufficientData {
            samples: data.len(),
            max_lag: range.end - 1,
        });
    }
    if range.start < term.max_lag() {
        return Err(NarmaxError::LagOutOfRange {
            lag: term.max_lag(),
            index: range.start,
        });
    }
    for f in term.factors() {
        if let Signal::Input(c) = f.signal {
            if c >= data.n_inputs() {
                return Err(NarmaxError::MissingInput {
                    channel: c,
                    available: data.n_inputs(),
                });
            }
        }
    }
    let mut column = Array1::zeros(range.len());
    fill_column(term, data, residual, range.start, column.view_mut());
    Ok(column)
}

/// Unchecked column evaluation into `out`, covering samples
/// `start..start + out.len()`.
pub(crate) fn fill_column(
    term: &RegressorTerm,
    data: &TimeSeriesData,
    residual: ArrayView1<'_, f64>,
    start: usize,
    mut out: ArrayViewMut1<'_, f64>,
) {
    out.fill(1.0);
    let rows = out.len();
    for f in term.factors() {
        let signal = match f.signal {
            Signal::Output => data.output(),
            Signal::Input(c) => data.input(c),
            Signal::Error => residual,
        };
        let lagged = signal.slice(ndarray::s![start - f.lag..start - f.lag + rows]);
        match f.exponent {
            1 => out.zip_mut_with(&lagged, |o, &s| *o *= s),
            2 => out.zip_mut_with(&lagged, |o, &s| *o *= s * s),
            e => out.zip_mut_with(&lagged, |o, &s| *o *= s.powi(e as i32)),
        }
    }
}

/// Regressor matrix over the effective range `start..N`.
#[derive(Clone, Debug)]
pub struct RegressorMatrix {
    values: Array2<f64>,
    error_columns: Vec<bool>,
    start: usize,
}

impl RegressorMatrix {
    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn column(&self, j: usize) -> ArrayView1<'_, f64> {
        self.values.column(j)
    }

    /// Columns that depend on the residual and must be rebuilt when it changes.
    pub fn is_error_column(&self, j: usize) -> bool {
        self.error_columns[j]
    }

    /// First sample index covered by row 0.
    pub fn start(&self) -> usize {
        self.start
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    pub(crate) fn refresh_column(
        &mut self,
        j: usize,
        term: &RegressorTerm,
        data: &TimeSeriesData,
        residual: ArrayView1<'_, f64>,
    ) {
        fill_column(term, data, residual, self.start, self.values.column_mut(j));
    }
}

/// Evaluates every term of `dictionary` over `max_lag..N`.
pub fn build_matrix(
    dictionary: &Dictionary,
    data: &TimeSeriesData,
    residual: ArrayView1<'_, f64>,
) -> Result<RegressorMatrix> {
    dictionary.check_data(data)?;
    if residual.len() != data.len() {
        return Err(NarmaxError::LengthMismatch {
            what: "residual",
            expected: data.len(),
            found: residual.len(),
        });
    }
    let start = dictionary.max_lag();
    let rows = data.len() - start;
    // Column-major so each column is contiguous for the coordinate updates.
    let mut values = Array2::zeros((rows, dictionary.len()).f());
    for (term, column) in dictionary.terms().iter().zip(values.columns_mut()) {
        fill_column(term, data, residual, start, column);
    }
    Ok(RegressorMatrix {
        values,
        error_columns: dictionary.terms().iter().map(RegressorTerm::has_error).collect(),
        start,
    })
}
