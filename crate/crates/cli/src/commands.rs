use std::fmt;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use homodyne::fbp::FbpConfig;
use homodyne::grid::GridSpec;
use homodyne::table::{compare_tables, write_weights, PhaseSpaceTable, TableRow};
use homodyne::{
    fbp_expected_limit, fbp_point, reconstruct_grid, squasi_true, wigner_true, Dataset,
    ReconstructionConfig, StateSpec,
};

#[derive(Debug)]
pub enum Failure {
    /// Flags that are well-formed but unusable; exit status 1.
    Usage(String),
    /// Input that cannot be read or processed; exit status 2.
    Data(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
        }
    }

    pub fn message(&self) -> String {
        // keep the diagnostic on one line
        match self {
            Failure::Usage(m) | Failure::Data(m) => m.replace('\n', " "),
        }
    }
}

fn data_err(context: &str) -> impl Fn(homodyne::Error) -> Failure + '_ {
    move |e| Failure::Data(format!("{context}: {e}"))
}

#[derive(Debug, Clone, PartialEq)]
pub enum TruthKind {
    Wigner,
    Squasi(f64),
    FbpLimit(f64),
}

impl FromStr for TruthKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let number = |v: &str| v.parse::<f64>().map_err(|_| format!("bad number '{v}' in kind '{s}'"));
        match s.split_once(':') {
            None if s == "wigner" => Ok(TruthKind::Wigner),
            Some(("squasi", v)) => Ok(TruthKind::Squasi(number(v)?)),
            Some(("fbp-limit", v)) => Ok(TruthKind::FbpLimit(number(v)?)),
            _ => Err(format!("unknown kind '{s}', expected wigner, squasi:S or fbp-limit:ETA")),
        }
    }
}

impl fmt::Display for TruthKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TruthKind::Wigner => write!(f, "wigner"),
            TruthKind::Squasi(s) => write!(f, "squasi:{s}"),
            TruthKind::FbpLimit(eta) => write!(f, "fbp-limit:{eta}"),
        }
    }
}

pub fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let bad = || format!("bad range '{s}', expected LO:HI");
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn usage_check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), Failure> {
    if ok {
        Ok(())
    } else {
        Err(Failure::Usage(msg()))
    }
}

fn read_dataset(path: &Path) -> Result<Dataset, Failure> {
    let file = File::open(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    Dataset::read_from(BufReader::new(file)).map_err(data_err(&path.display().to_string()))
}

fn read_table(path: &Path) -> Result<PhaseSpaceTable, Failure> {
    let file = File::open(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    PhaseSpaceTable::read_from(BufReader::new(file)).map_err(data_err(&path.display().to_string()))
}

/// Writes `path` through `fill`; a failed write leaves no file behind.
fn write_output<F>(path: &Path, fill: F) -> Result<(), Failure>
where
    F: FnOnce(&mut BufWriter<File>) -> homodyne::Result<()>,
{
    let file = File::create(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    let mut out = BufWriter::new(file);
    let result = fill(&mut out).and_then(|()| out.flush().map_err(homodyne::Error::from));
    drop(out);
    if let Err(e) = result {
        let _ = fs::remove_file(path);
        return Err(Failure::Data(format!("{}: {e}", path.display())));
    }
    Ok(())
}

fn dataset_meta(table: &mut PhaseSpaceTable, ds: &Dataset) {
    table.push_meta("state", &ds.state_desc);
    table.push_meta("eta", ds.eta);
    table.push_meta("seed", ds.seed);
    table.push_meta("phases", ds.phases);
    table.push_meta("per_phase", ds.per_phase);
    table.push_meta("events", ds.len());
}

pub fn simulate(
    state: &StateSpec,
    eta: f64,
    phases: usize,
    per_phase: usize,
    seed: u64,
    out: &Path,
) -> Result<(), Failure> {
    state.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    usage_check(eta > 0.0 && eta <= 1.0, || format!("--eta must lie in (0, 1], got {eta}"))?;
    usage_check(phases >= 1 && per_phase >= 1, || "--phases and --per-phase must be at least 1".into())?;
    let ds = homodyne::simulate(state, eta, phases, per_phase, seed).map_err(data_err("simulation failed"))?;
    log::info!("simulated {} events", ds.len());
    write_output(out, |w| ds.write_to(w))
}

pub struct MleOptions {
    pub n_max: usize,
    pub iters: usize,
    pub tol: f64,
}

pub fn reconstruct_mle(
    data: &Path,
    opts: &MleOptions,
    grid: &GridSpec,
    out: &Path,
    weights_out: Option<&Path>,
) -> Result<(), Failure> {
    let &MleOptions { n_max, iters, tol } = opts;
    let cfg = ReconstructionConfig {
        n_max,
        max_iters: iters,
        loglik_tol: tol,
        // only the final likelihood is reported
        trace_stride: iters,
        ..Default::default()
    };
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let ds = read_dataset(data)?;
    let results = reconstruct_grid(&ds, grid, &cfg).map_err(data_err("reconstruction failed"))?;
    let mut table = PhaseSpaceTable::default();
    table.push_meta("kind", "mle");
    dataset_meta(&mut table, &ds);
    table.push_meta("n_max", n_max);
    table.push_meta("iters", iters);
    table.push_meta("tol", tol);
    table.push_meta("grid", grid);
    let body = PhaseSpaceTable::from_grid_results(&results);
    for (k, v) in &body.meta {
        log::warn!("{k}: {v}");
    }
    table.meta.extend(body.meta);
    table.rows = body.rows;
    write_output(out, |w| table.write_to(w))?;
    if let Some(path) = weights_out {
        let mut meta = table.meta.clone();
        meta[0].1 = "mle-weights".into();
        if let Err(e) = write_output(path, |w| write_weights(&results, &meta, w)) {
            let _ = fs::remove_file(out);
            return Err(e);
        }
    }
    Ok(())
}

pub fn reconstruct_fbp(data: &Path, cutoff: f64, grid: &GridSpec, out: &Path) -> Result<(), Failure> {
    let cfg = FbpConfig::new(cutoff).map_err(|e| Failure::Usage(e.to_string()))?;
    let ds = read_dataset(data)?;
    let mut table = PhaseSpaceTable::default();
    table.push_meta("kind", "fbp");
    dataset_meta(&mut table, &ds);
    table.push_meta("cutoff", cutoff);
    table.push_meta("grid", grid);
    for (q, p) in grid.points() {
        let w = fbp_point(&ds, q, p, &cfg).map_err(data_err("back-projection failed"))?;
        table.rows.push(TableRow::value(q, p, w));
    }
    write_output(out, |w| table.write_to(w))
}

pub fn truth(state: &StateSpec, kind: &TruthKind, grid: &GridSpec, out: &Path) -> Result<(), Failure> {
    state.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    match *kind {
        TruthKind::Squasi(s) => usage_check(s <= 0.0, || format!("squasi needs s <= 0, got {s}"))?,
        TruthKind::FbpLimit(eta) => {
            usage_check(eta > 0.0 && eta <= 1.0, || format!("fbp-limit needs eta in (0, 1], got {eta}"))?
        }
        TruthKind::Wigner => {}
    }
    let mut table = PhaseSpaceTable::default();
    table.push_meta("kind", kind);
    table.push_meta("state", state);
    table.push_meta("grid", grid);
    for (q, p) in grid.points() {
        let w = match *kind {
            TruthKind::Wigner => wigner_true(state, q, p),
            TruthKind::Squasi(s) => squasi_true(state, q, p, s).map_err(data_err("evaluation failed"))?,
            TruthKind::FbpLimit(eta) => {
                fbp_expected_limit(state, q, p, eta).map_err(data_err("evaluation failed"))?
            }
        };
        table.rows.push(TableRow::value(q, p, w));
    }
    write_output(out, |w| table.write_to(w))
}

pub fn histogram(
    data: &Path,
    phase: f64,
    tol: f64,
    bins: usize,
    range: (f64, f64),
    out: &Path,
) -> Result<(), Failure> {
    usage_check(bins >= 1, || "--bins must be at least 1".into())?;
    usage_check(tol >= 0.0 && phase.is_finite(), || "--phase must be finite and --tol nonnegative".into())?;
    let ds = read_dataset(data)?;
    let h = homodyne::histogram(&ds, phase, tol, bins, range).map_err(data_err("histogram failed"))?;
    let meta: Vec<(String, String)> = [
        ("kind", "histogram".to_string()),
        ("state", ds.state_desc.clone()),
        ("eta", ds.eta.to_string()),
        ("seed", ds.seed.to_string()),
        ("phase", phase.to_string()),
        ("tol", tol.to_string()),
        ("bins", bins.to_string()),
        ("range", format!("{}:{}", range.0, range.1)),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    write_output(out, |w| h.write_to(w, &meta))
}

pub fn compare(a: &Path, b: &Path, out: &Path) -> Result<(), Failure> {
    let ta = read_table(a)?;
    let tb = read_table(b)?;
    let cmp = compare_tables(&ta, &tb).map_err(data_err("tables do not line up"))?;
    write_output(out, |w| cmp.write_to(w))
}
