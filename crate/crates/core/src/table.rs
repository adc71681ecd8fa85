//! Plain-text phase-space tables shared by the MLE, FBP and analytic
//! outputs:
//!
//! ```text
//! # key=value
//! q<TAB>p<TAB>W<TAB>iterations<TAB>final_loglik
//! ```
//!
//! Floats carry 17 significant digits; rows without a likelihood (FBP,
//! analytic curves, failed points) hold `NaN` in the last column.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::mle::GridResult;
use crate::simulator::Histogram;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableRow {
    pub q: f64,
    pub p: f64,
    pub w: f64,
    pub iterations: usize,
    pub final_loglik: f64,
}

impl TableRow {
    pub fn value(q: f64, p: f64, w: f64) -> Self {
        TableRow { q, p, w, iterations: 0, final_loglik: f64::NAN }
    }

    fn same_bits(&self, other: &TableRow) -> bool {
        self.q.to_bits() == other.q.to_bits()
            && self.p.to_bits() == other.p.to_bits()
            && self.w.to_bits() == other.w.to_bits()
            && self.iterations == other.iterations
            && self.final_loglik.to_bits() == other.final_loglik.to_bits()
    }
}

#[derive(Debug, Clone, Default)]
pub struct PhaseSpaceTable {
    /// Header entries in output order; keys may repeat.
    pub meta: Vec<(String, String)>,
    pub rows: Vec<TableRow>,
}

impl PartialEq for PhaseSpaceTable {
    fn eq(&self, other: &Self) -> bool {
        self.meta == other.meta
            && self.rows.len() == other.rows.len()
            && self.rows.iter().zip(&other.rows).all(|(a, b)| a.same_bits(b))
    }
}

impl PhaseSpaceTable {
    pub fn push_meta(&mut self, key: &str, value: impl ToString) {
        self.meta.push((key.to_string(), value.to_string()));
    }

    pub fn meta_value(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Rows from a grid reconstruction; failed points get `W = NaN` and a
    /// `point_error` header entry.
    pub fn from_grid_results(results: &[GridResult]) -> Self {
        let mut table = PhaseSpaceTable::default();
        for r in results {
            match &r.outcome {
                Ok(est) => table.rows.push(TableRow {
                    q: r.q,
                    p: r.p,
                    w: est.wigner,
                    iterations: est.diagnostics.iterations_run,
                    final_loglik: est.diagnostics.final_loglik,
                }),
                Err(e) => {
                    table.push_meta("point_error", format!("q={},p={}: {e}", r.q, r.p));
                    table.rows.push(TableRow::value(r.q, r.p, f64::NAN));
                }
            }
        }
        table
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        for (k, v) in &self.meta {
            writeln!(out, "# {k}={v}")?;
        }
        for r in &self.rows {
            writeln!(
                out,
                "{:.16e}\t{:.16e}\t{:.16e}\t{}\t{:.16e}",
                r.q, r.p, r.w, r.iterations, r.final_loglik
            )?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("table text is ASCII")
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self> {
        let mut table = PhaseSpaceTable::default();
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let at = |msg: &str| Error::Parse(format!("line {}: {msg}", lineno + 1));
            if let Some(rest) = line.strip_prefix('#') {
                let (k, v) = rest.trim().split_once('=').ok_or_else(|| at("expected '# key=value'"))?;
                table.meta.push((k.trim().to_string(), v.trim().to_string()));
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let [q, p, w, it, ll] = cols[..] else {
                return Err(at("expected 5 tab-separated columns"));
            };
            let float = |s: &str| s.parse::<f64>().map_err(|_| at("bad number"));
            table.rows.push(TableRow {
                q: float(q)?,
                p: float(p)?,
                w: float(w)?,
                iterations: it.parse().map_err(|_| at("bad iteration count"))?,
                final_loglik: float(ll)?,
            });
        }
        Ok(table)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::read_from(text.as_bytes())
    }
}

/// Estimated populations per grid point, one `q<TAB>p<TAB>rho_0<TAB>...`
/// line each. Failed points are left out.
pub fn write_weights<W: Write>(results: &[GridResult], meta: &[(String, String)], mut out: W) -> Result<()> {
    for (k, v) in meta {
        writeln!(out, "# {k}={v}")?;
    }
    for r in results {
        let Ok(est) = &r.outcome else { continue };
        write!(out, "{:.16e}\t{:.16e}", r.q, r.p)?;
        for w in est.weights.as_slice() {
            write!(out, "\t{w:.16e}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

/// Parses the output of [`write_weights`] into `(q, p, weights)` rows.
/// The weights are returned as read, without simplex validation.
pub fn read_weights<R: BufRead>(input: R) -> Result<Vec<(f64, f64, Vec<f64>)>> {
    let mut rows = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        let at = |msg: &str| Error::Parse(format!("line {}: {msg}", lineno + 1));
        let values = line
            .split('\t')
            .map(|c| c.parse::<f64>().map_err(|_| at("bad number")))
            .collect::<Result<Vec<f64>>>()?;
        if values.len() < 3 {
            return Err(at("expected q, p and at least one weight"));
        }
        rows.push((values[0], values[1], values[2..].to_vec()));
    }
    Ok(rows)
}

/// Row-by-row comparison of two tables over the same points.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    /// `(q, p, W_a, W_b, W_a - W_b)`.
    pub rows: Vec<(f64, f64, f64, f64, f64)>,
    pub max_abs_diff: f64,
}

pub fn compare_tables(a: &PhaseSpaceTable, b: &PhaseSpaceTable) -> Result<Comparison> {
    if a.rows.len() != b.rows.len() {
        return Err(Error::Parse(format!(
            "tables have {} and {} rows",
            a.rows.len(),
            b.rows.len()
        )));
    }
    let mut rows = Vec::with_capacity(a.rows.len());
    let mut max_abs_diff: f64 = 0.0;
    for (ra, rb) in a.rows.iter().zip(&b.rows) {
        let scale = 1.0 + ra.q.abs().max(ra.p.abs());
        if (ra.q - rb.q).abs() > 1e-12 * scale || (ra.p - rb.p).abs() > 1e-12 * scale {
            return Err(Error::Parse(format!(
                "point ({}, {}) does not match ({}, {})",
                ra.q, ra.p, rb.q, rb.p
            )));
        }
        let d = ra.w - rb.w;
        // NaN rows propagate into the summary
        max_abs_diff = if d.is_nan() || max_abs_diff.is_nan() { f64::NAN } else { max_abs_diff.max(d.abs()) };
        rows.push((ra.q, ra.p, ra.w, rb.w, d));
    }
    Ok(Comparison { rows, max_abs_diff })
}

impl Comparison {
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# columns=q,p,W_a,W_b,W_a-W_b")?;
        for (q, p, wa, wb, d) in &self.rows {
            writeln!(out, "{q:.16e}\t{p:.16e}\t{wa:.16e}\t{wb:.16e}\t{d:.16e}")?;
        }
        writeln!(out, "# max_abs_diff={:.16e}", self.max_abs_diff)?;
        out.flush()?;
        Ok(())
    }
}

impl Histogram {
    /// `lo<TAB>hi<TAB>count` per bin after a `# key=value` header.
    pub fn write_to<W: Write>(&self, mut out: W, meta: &[(String, String)]) -> Result<()> {
        for (k, v) in meta {
            writeln!(out, "# {k}={v}")?;
        }
        writeln!(out, "# selected={}", self.selected)?;
        writeln!(out, "# underflow={}", self.underflow)?;
        writeln!(out, "# overflow={}", self.overflow)?;
        if self.empty_selection {
            writeln!(out, "# warning=empty selection")?;
        }
        for (i, c) in self.counts.iter().enumerate() {
            let (lo, hi) = self.bin_edges(i);
            writeln!(out, "{lo:.16e}\t{hi:.16e}\t{c}")?;
        }
        out.flush()?;
        Ok(())
    }
}
