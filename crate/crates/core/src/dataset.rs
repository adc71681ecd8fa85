//! Homodyne event records and their text file format.
//!
//! ```text
//! # format_version=1
//! # state=cat:0,2,odd
//! # eta=0.9
//! # seed=42
//! # phases=64
//! # per_phase=100000
//! 0.0000000000000000e0<TAB>-1.2071066011985440e0
//! ```
//!
//! Floats are written with 17 significant digits so a file parses back to
//! the identical in-memory dataset.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

/// One measurement event: local-oscillator phase and quadrature outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomodyneRecord {
    pub theta: f64,
    pub x: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub records: Vec<HomodyneRecord>,
    pub eta: f64,
    pub state_desc: String,
    pub seed: u64,
    pub phases: usize,
    pub per_phase: usize,
}

impl Dataset {
    pub fn new(
        records: Vec<HomodyneRecord>,
        eta: f64,
        state_desc: impl Into<String>,
        seed: u64,
        phases: usize,
        per_phase: usize,
    ) -> Result<Self> {
        let ds = Dataset { records, eta, state_desc: state_desc.into(), seed, phases, per_phase };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.records.is_empty() {
            return Err(Error::Config("dataset has no records".into()));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::Domain(format!(
                "detector efficiency must lie in (0, 1], got {}",
                self.eta
            )));
        }
        if let Some(r) = self.records.iter().find(|r| !r.theta.is_finite() || !r.x.is_finite()) {
            return Err(Error::Domain(format!("non-finite record ({}, {})", r.theta, r.x)));
        }
        if self.state_desc.contains(['\n', '\r']) {
            return Err(Error::Config("state description must be a single line".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# format_version={FORMAT_VERSION}")?;
        writeln!(out, "# state={}", self.state_desc)?;
        writeln!(out, "# eta={}", self.eta)?;
        writeln!(out, "# seed={}", self.seed)?;
        writeln!(out, "# phases={}", self.phases)?;
        writeln!(out, "# per_phase={}", self.per_phase)?;
        for r in &self.records {
            writeln!(out, "{:.16e}\t{:.16e}", r.theta, r.x)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("dataset text is ASCII")
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self> {
        let mut header = BTreeMap::new();
        let mut records = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let at = |msg: &str| Error::Parse(format!("line {}: {msg}", lineno + 1));
            if let Some(rest) = line.strip_prefix('#') {
                if !records.is_empty() {
                    return Err(at("header line after records"));
                }
                let (k, v) = rest.trim().split_once('=').ok_or_else(|| at("expected '# key=value'"))?;
                header.insert(k.trim().to_string(), v.trim().to_string());
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let (t, x) = line.split_once('\t').ok_or_else(|| at("expected 'theta<TAB>x'"))?;
            let theta = t.parse::<f64>().map_err(|_| at("bad theta"))?;
            let x = x.parse::<f64>().map_err(|_| at("bad x"))?;
            records.push(HomodyneRecord { theta, x });
        }
        let get = |key: &str| {
            header
                .get(key)
                .ok_or_else(|| Error::Parse(format!("missing header field '{key}'")))
        };
        let version: u32 = get("format_version")?
            .parse()
            .map_err(|_| Error::Parse("bad format_version".into()))?;
        if version != FORMAT_VERSION {
            return Err(Error::Parse(format!("unsupported format_version {version}")));
        }
        let field = |key: &str| -> Result<String> { get(key).cloned() };
        let parse_err = |key: &str| Error::Parse(format!("bad header field '{key}'"));
        let eta = field("eta")?.parse().map_err(|_| parse_err("eta"))?;
        let seed = field("seed")?.parse().map_err(|_| parse_err("seed"))?;
        let phases = field("phases")?.parse().map_err(|_| parse_err("phases"))?;
        let per_phase = field("per_phase")?.parse().map_err(|_| parse_err("per_phase"))?;
        Dataset::new(records, eta, field("state")?, seed, phases, per_phase)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::read_from(text.as_bytes())
    }
}
