//! Uniformly sampled state time series and its CSV form.

use crate::error::{HsrError, Result};
use crate::scalar::{lit, to_f64, Scalar};
use nalgebra::DVector;
use std::fmt::Write as _;
use std::ops::Range;

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T: Scalar> {
    t0: T,
    dt: T,
    samples: Vec<DVector<T>>,
    input_log: Option<Vec<DVector<T>>>,
}

impl<T: Scalar> Trajectory<T> {
    pub fn new(t0: T, dt: T, samples: Vec<DVector<T>>) -> Self {
        Self { t0, dt, samples, input_log: None }
    }

    pub fn with_inputs(mut self, inputs: Vec<DVector<T>>) -> Self {
        debug_assert_eq!(inputs.len(), self.samples.len());
        self.input_log = Some(inputs);
        self
    }

    pub fn t0(&self) -> T {
        self.t0
    }
    pub fn dt(&self) -> T {
        self.dt
    }
    pub fn len(&self) -> usize {
        self.samples.len()
    }
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
    /// State dimension.
    pub fn dim(&self) -> usize {
        self.samples.first().map_or(0, |x| x.len())
    }
    pub fn samples(&self) -> &[DVector<T>] {
        &self.samples
    }
    pub fn inputs(&self) -> Option<&[DVector<T>]> {
        self.input_log.as_deref()
    }
    pub fn last(&self) -> &DVector<T> {
        self.samples.last().expect("empty trajectory")
    }

    pub fn time(&self, k: usize) -> T {
        self.t0 + self.dt * lit::<T>(k as f64)
    }

    pub fn t_end(&self) -> T {
        self.time(self.len().saturating_sub(1))
    }

    pub fn iter(&self) -> impl Iterator<Item = (T, &DVector<T>)> + '_ {
        self.samples.iter().enumerate().map(move |(k, x)| (self.time(k), x))
    }

    /// Restriction to a contiguous range of state coordinates.
    pub fn select(&self, coords: Range<usize>) -> Self {
        let len = coords.end - coords.start;
        Self {
            t0: self.t0,
            dt: self.dt,
            samples: self.samples.iter().map(|x| x.rows(coords.start, len).into_owned()).collect(),
            input_log: None,
        }
    }

    /// Sample indices whose time lies in `[a, b]` (with a half-step tolerance).
    pub fn window_indices(&self, window: (T, T)) -> Range<usize> {
        let tol = self.dt * lit(1e-6);
        let lo = (0..self.len()).find(|&k| self.time(k) >= window.0 - tol).unwrap_or(self.len());
        let hi = (lo..self.len()).take_while(|&k| self.time(k) <= window.1 + tol).last();
        match hi {
            Some(h) => lo..h + 1,
            None => lo..lo,
        }
    }

    /// Linear interpolation at time `t`, clamped to the sampled span.
    pub fn interpolate(&self, t: T) -> DVector<T> {
        let n = self.len();
        if n == 1 || t <= self.t0 {
            return self.samples[0].clone();
        }
        let s = (t - self.t0) / self.dt;
        let k = s.floor().to_f64().unwrap_or(0.0) as usize;
        if k + 1 >= n {
            return self.samples[n - 1].clone();
        }
        let frac = s - lit::<T>(k as f64);
        &self.samples[k] * (T::one() - frac) + &self.samples[k + 1] * frac
    }

    /// Writes `t,x1,...,xn` rows with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for i in 1..=self.dim() {
            let _ = write!(out, ",x{i}");
        }
        out.push('\n');
        for (t, x) in self.iter() {
            let _ = write!(out, "{:.16e}", to_f64(t));
            for v in x.iter() {
                let _ = write!(out, ",{:.16e}", to_f64(*v));
            }
            out.push('\n');
        }
        out
    }

    /// Parses the format written by [`Trajectory::to_csv`]. Rows must be
    /// uniformly spaced in `t`.
    pub fn from_csv(text: &str) -> Result<Self> {
        let table = parse_numeric_csv(text)?;
        if table.header.first().map(String::as_str) != Some("t") {
            return Err(HsrError::InvalidInput("line 1: first column must be `t`".into()));
        }
        if table.rows.is_empty() {
            return Err(HsrError::InvalidInput("trajectory CSV has no rows".into()));
        }
        let times: Vec<f64> = table.rows.iter().map(|r| r[0]).collect();
        let dt = if times.len() > 1 { times[1] - times[0] } else { 1.0 };
        for (k, w) in times.windows(2).enumerate() {
            if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.abs().max(1.0) {
                return Err(HsrError::InvalidInput(format!(
                    "line {}: non-uniform time step",
                    k + 3
                )));
            }
        }
        let samples = table
            .rows
            .iter()
            .map(|r| DVector::from_iterator(r.len() - 1, r[1..].iter().map(|&v| lit::<T>(v))))
            .collect();
        Ok(Self::new(lit(times[0]), lit(dt), samples))
    }
}

/// A header row plus numeric rows.
#[derive(Debug, Clone)]
pub struct NumericTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Minimal numeric CSV reader with line-numbered diagnostics.
pub fn parse_numeric_csv(text: &str) -> Result<NumericTable> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, head) = lines
        .next()
        .ok_or_else(|| HsrError::InvalidInput("empty CSV".into()))?;
    let header: Vec<String> = head.split(',').map(|s| s.trim().to_string()).collect();
    let mut rows = Vec::new();
    for (ln, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != header.len() {
            return Err(HsrError::InvalidInput(format!(
                "line {}: expected {} fields, found {}",
                ln + 1,
                header.len(),
                fields.len()
            )));
        }
        let row = fields
            .iter()
            .enumerate()
            .map(|(col, f)| {
                f.trim().parse::<f64>().map_err(|_| {
                    HsrError::InvalidInput(format!(
                        "line {}, column {}: cannot parse `{}` as a number",
                        ln + 1,
                        col + 1,
                        f.trim()
                    ))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(NumericTable { header, rows })
}
