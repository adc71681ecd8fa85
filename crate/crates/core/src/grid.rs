//! Phase-space evaluation points.
//!
//! Text forms: a line slice `q:A:B:STEPS@p=C` (or `p:A:B:STEPS@q=C`) and a
//! rectangular lattice `qA:qB:qN,pA:pB:pN`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Q,
    P,
}

/// `steps` equally spaced values from `from` to `to` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Span {
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

impl Span {
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.from];
        }
        let (width, last) = (self.to - self.from, (self.steps - 1) as f64);
        (0..self.steps).map(|i| self.from + width * i as f64 / last).collect()
    }

    fn parse(a: &str, b: &str, n: &str) -> Result<Span> {
        let bad = || Error::Parse(format!("bad span '{a}:{b}:{n}'"));
        let from: f64 = a.trim().parse().map_err(|_| bad())?;
        let to: f64 = b.trim().parse().map_err(|_| bad())?;
        let steps: usize = n.trim().parse().map_err(|_| bad())?;
        if steps == 0 || !from.is_finite() || !to.is_finite() {
            return Err(bad());
        }
        Ok(Span { from, to, steps })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GridSpec {
    Slice { axis: Axis, span: Span, fixed: f64 },
    /// q-major lattice.
    Lattice { q: Span, p: Span },
    Points(Vec<(f64, f64)>),
}

impl GridSpec {
    pub fn q_slice(from: f64, to: f64, steps: usize, p: f64) -> Self {
        GridSpec::Slice { axis: Axis::Q, span: Span { from, to, steps }, fixed: p }
    }

    pub fn point(q: f64, p: f64) -> Self {
        GridSpec::Points(vec![(q, p)])
    }

    pub fn points(&self) -> Vec<(f64, f64)> {
        match self {
            GridSpec::Slice { axis: Axis::Q, span, fixed } => {
                span.values().into_iter().map(|q| (q, *fixed)).collect()
            }
            GridSpec::Slice { axis: Axis::P, span, fixed } => {
                span.values().into_iter().map(|p| (*fixed, p)).collect()
            }
            GridSpec::Lattice { q, p } => {
                let ps = p.values();
                q.values()
                    .into_iter()
                    .flat_map(|qv| ps.iter().map(move |&pv| (qv, pv)))
                    .collect()
            }
            GridSpec::Points(pts) => pts.clone(),
        }
    }

    /// Parses the slice grammar.
    pub fn parse_slice(text: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("bad slice '{text}', expected q:A:B:STEPS@p=C"));
        let (range, fixed) = text.split_once('@').ok_or_else(bad)?;
        let parts: Vec<&str> = range.split(':').collect();
        let [axis, a, b, n] = parts[..] else { return Err(bad()) };
        let (axis, other) = match axis.trim() {
            "q" => (Axis::Q, "p"),
            "p" => (Axis::P, "q"),
            _ => return Err(bad()),
        };
        let (name, value) = fixed.split_once('=').ok_or_else(bad)?;
        if name.trim() != other {
            return Err(bad());
        }
        let fixed: f64 = value.trim().parse().map_err(|_| bad())?;
        if !fixed.is_finite() {
            return Err(bad());
        }
        Ok(GridSpec::Slice { axis, span: Span::parse(a, b, n)?, fixed })
    }

    /// Parses the lattice grammar.
    pub fn parse_lattice(text: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("bad grid '{text}', expected qA:qB:qN,pA:pB:pN"));
        let (qs, ps) = text.split_once(',').ok_or_else(bad)?;
        let span = |s: &str, prefix: char| -> Result<Span> {
            let s = s.trim().strip_prefix(prefix).ok_or_else(bad)?;
            let parts: Vec<&str> = s.split(':').collect();
            let [a, b, n] = parts[..] else { return Err(bad()) };
            Span::parse(a, b, n)
        };
        Ok(GridSpec::Lattice { q: span(qs, 'q')?, p: span(ps, 'p')? })
    }
}

impl FromStr for GridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.contains('@') {
            GridSpec::parse_slice(s)
        } else {
            GridSpec::parse_lattice(s)
        }
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridSpec::Slice { axis, span, fixed } => {
                let (a, o) = match axis {
                    Axis::Q => ("q", "p"),
                    Axis::P => ("p", "q"),
                };
                write!(f, "{a}:{}:{}:{}@{o}={fixed}", span.from, span.to, span.steps)
            }
            GridSpec::Lattice { q, p } => write!(
                f,
                "q{}:{}:{},p{}:{}:{}",
                q.from, q.to, q.steps, p.from, p.to, p.steps
            ),
            GridSpec::Points(pts) => {
                let items: Vec<String> = pts.iter().map(|(q, p)| format!("({q},{p})")).collect();
                write!(f, "{}", items.join(";"))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slice_grammar() {
        let g: GridSpec = "q:-1.5:1.5:21@p=0".parse().unwrap();
        let pts = g.points();
        assert_eq!(pts.len(), 21);
        assert_eq!(pts[0], (-1.5, 0.0));
        assert_eq!(pts[20], (1.5, 0.0));
        assert_eq!(pts[10], (0.0, 0.0));
        assert!((pts[10].0).abs() < 1e-15);
        assert_eq!(g.to_string(), "q:-1.5:1.5:21@p=0");
        let g: GridSpec = "q:0:0:1@p=0".parse().unwrap();
        assert_eq!(g.points(), vec![(0.0, 0.0)]);
        let g: GridSpec = "p:0:1:3@q=2".parse().unwrap();
        assert_eq!(g.points(), vec![(2.0, 0.0), (2.0, 0.5), (2.0, 1.0)]);
    }

    #[test]
    fn lattice_grammar() {
        let g: GridSpec = "q-1:1:3,p0:1:2".parse().unwrap();
        assert_eq!(
            g.points(),
            vec![(-1.0, 0.0), (-1.0, 1.0), (0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)]
        );
        assert_eq!(g.to_string(), "q-1:1:3,p0:1:2");
    }

    #[test]
    fn rejects_malformed() {
        for bad in ["q:0:1@p=0", "q:0:1:0@p=0", "x:0:1:3@p=0", "q:0:1:3@q=0", "q:0:1:3", "q0:1:3", "q0:1:3,x0:1:2", "q:a:1:3@p=0"] {
            assert!(bad.parse::<GridSpec>().is_err(), "{bad}");
        }
    }
}
