use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use fdspatial::asymptotics::{self, StudyOptions};
use fdspatial::depth::{self, Source};
use fdspatial::efficiency::{self, CellProcess, TableCell};
use fdspatial::funcspace::io;
use fdspatial::quantile::{self, DirectionU, QuantileSolution, SolveOptions};
use fdspatial::simulate::{self, ProcessSpec};
use fdspatial::funcspace::pca;
use fdspatial::{rng, Basis, FunctionalSample, Grid, VERSION};
use serde::Serialize;
use serde_json::json;

use crate::args::*;
use crate::svg;

/// Failure after a successful parse; reported as JSON on stderr with exit code 1.
#[derive(Debug)]
pub struct CliError {
    kind: String,
    message: String,
}

impl CliError {
    fn io(path: &Path, e: std::io::Error) -> CliError {
        CliError { kind: "Io".into(), message: format!("{}: {e}", path.display()) }
    }

    fn input(path: &Path, e: fdspatial::Error) -> CliError {
        let mut err = CliError::from(e);
        if err.kind != "Io" {
            err.message = format!("{}: {}", path.display(), err.message);
        }
        err
    }

    pub fn to_json(&self) -> String {
        json!({ "error": { "kind": self.kind, "message": self.message }, "version": VERSION }).to_string()
    }
}

impl From<fdspatial::Error> for CliError {
    fn from(e: fdspatial::Error) -> CliError {
        let debug = format!("{e:?}");
        let kind = debug.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("Error").to_string();
        CliError { kind, message: e.to_string() }
    }
}

type Result<T> = std::result::Result<T, CliError>;

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Simulate(a) => simulate_cmd(a),
        Command::Quantile(a) => quantile_cmd(a),
        Command::Depth(a) => depth_cmd(a),
        Command::Ddplot(a) => ddplot_cmd(a),
        Command::Efficiency(a) => efficiency_cmd(a),
        Command::Converge(a) => converge_cmd(a),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

/// Writes to `path`, or to stdout when there is none.
fn emit(path: Option<&PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = create(p)?;
            w.write_all(text.as_bytes()).and_then(|_| w.flush()).map_err(|e| CliError::io(p, e))
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn read_sample(path: &Path) -> Result<FunctionalSample> {
    io::read_sample_file(path).map_err(|e| CliError::input(path, e))
}

fn cell(p: &ProcessArgs) -> Result<CellProcess> {
    let bad = |m: &str| CliError { kind: "InvalidArgument".into(), message: m.into() };
    Ok(match p.process {
        Process::Bm => CellProcess::FractionalBrownian(0.5),
        Process::Fbm => {
            if !(p.hurst > 0.0 && p.hurst < 1.0) {
                return Err(bad("--hurst must lie in (0, 1)"));
            }
            CellProcess::FractionalBrownian(p.hurst)
        }
        Process::T => CellProcess::TProcess(p.df.ok_or_else(|| bad("--process t needs --df"))?),
        Process::GaussKernel => match p.df {
            Some(df) => CellProcess::GaussianKernelT(df),
            None => CellProcess::GaussianKernel,
        },
    })
}

fn setup(p: &ProcessArgs, grid_size: usize, seed: u64) -> Result<(ProcessSpec, Arc<Grid>)> {
    Ok(efficiency::cell_setup(cell(p)?, grid_size, seed)?)
}

fn simulate_cmd(a: SimulateArgs) -> Result<()> {
    let (spec, grid) = setup(&a.process, a.grid_size, a.seed)?;
    let sample = simulate::sample_process(&spec, &grid, a.n, a.seed)?;
    io::write_sample_file(&a.out, &sample)?;
    let summary = json!({
        "command": "simulate",
        "process": spec.label(),
        "n": a.n,
        "grid_size": grid.len(),
        "grid_kind": format!("{:?}", grid.kind()),
        "quadrature": grid.quadrature_label(),
        "seed": a.seed,
        "generator": rng::GENERATOR,
        "version": VERSION,
    });
    emit(None, &to_json(&summary))
}

#[derive(Serialize)]
struct QuantileEntry {
    k: Option<usize>,
    c: Option<f64>,
    u: Vec<f64>,
    coefficients: Vec<f64>,
    iterations: usize,
    grad_norm: f64,
    objective: f64,
    converged: bool,
    anchored_at_datum: Option<usize>,
    degenerate: bool,
}

impl QuantileEntry {
    fn new(k: Option<usize>, c: Option<f64>, u: Vec<f64>, s: &QuantileSolution) -> QuantileEntry {
        QuantileEntry {
            k,
            c,
            u,
            coefficients: s.coefficients.values().to_vec(),
            iterations: s.iterations,
            grad_norm: s.grad_norm,
            objective: s.objective,
            converged: s.converged,
            anchored_at_datum: s.anchored_at_datum,
            degenerate: s.degenerate,
        }
    }
}

/// `(k, c, u)` of a requested direction; `k` and `c` are set for `k:c` requests.
type Direction = (Option<usize>, Option<f64>, Vec<f64>);

fn quantile_cmd(a: QuantileArgs) -> Result<()> {
    let sample = read_sample(&a.input)?;
    let n = sample.n();
    let d = a.d.unwrap_or_else(|| fdspatial::funcspace::default_dimension(n).min(n.saturating_sub(1)).max(1));
    let basis: Arc<Basis> = Arc::new(match a.basis {
        BasisChoice::Pca => pca(&sample, d)?,
        BasisChoice::Bm => simulate::bm_basis(sample.grid(), d)?,
        BasisChoice::File => read_basis(a.basis_file.as_deref().expect("clap requires --basis-file"), sample.grid())?,
    });
    let opts = SolveOptions { tol: a.tol, max_iter: a.max_iter, center: !a.no_center, ..Default::default() };

    let mut entries = Vec::new();
    let mut curves = Vec::new();
    let explicit: Option<Vec<Direction>> = if let Some(u) = &a.u {
        Some(vec![(None, None, u.clone())])
    } else if let Some(pairs) = &a.u_spec {
        Some(
            pairs
                .iter()
                .map(|p| Ok((Some(p.k), Some(p.c), DirectionU::along(p.k, p.c, d)?.coefficients().to_vec())))
                .collect::<Result<_>>()?,
        )
    } else if let Some(path) = &a.u_file {
        Some(read_directions(path)?.into_iter().map(|u| (None, None, u)).collect())
    } else {
        None
    };
    match explicit {
        Some(list) => {
            for (k, c, u) in list {
                if u.len() > d {
                    return Err(fdspatial::Error::DimensionOutOfRange { d: u.len(), max: d }.into());
                }
                let dir = DirectionU::new(u)?;
                let s = quantile::solve_quantile(&sample, &dir, &basis, Some(d), &opts)?;
                entries.push(QuantileEntry::new(k, c, dir.truncated(d), &s));
                curves.push(s.curve);
            }
        }
        None => {
            let fan = quantile::quantile_fan(&sample, Some(basis.clone()), Some(d), &a.k, &a.c, &opts)?;
            for m in fan {
                let u = if m.k == 0 { vec![0.0; d] } else { DirectionU::along(m.k, m.c, d)?.truncated(d) };
                entries.push(QuantileEntry::new(Some(m.k), Some(m.c), u, &m.solution));
                curves.push(m.solution.curve);
            }
        }
    }

    let out = FunctionalSample::from_curves(&curves)?;
    io::write_sample_file(&a.out, &out)?;
    if let Some(path) = &a.svg {
        let labels: Vec<String> = entries
            .iter()
            .map(|e| match (e.k, e.c) {
                (Some(0), _) => "median".to_string(),
                (Some(k), Some(c)) => format!("k={k} c={c}"),
                _ => "quantile".to_string(),
            })
            .collect();
        emit(Some(path), &svg::fan(&out, &labels))?;
    }
    let report = json!({
        "command": "quantile",
        "input": a.input.display().to_string(),
        "n": n,
        "grid_size": sample.dim(),
        "basis": match a.basis {
            BasisChoice::Pca => "pca",
            BasisChoice::Bm => "bm",
            BasisChoice::File => "file",
        },
        "d": d,
        "centered": opts.center,
        "quantiles": entries,
        "version": VERSION,
    });
    emit(a.report.as_ref(), &to_json(&report))
}

/// Basis functions stored as curves; they must share the sample's grid points.
fn read_basis(path: &Path, grid: &Arc<Grid>) -> Result<Basis> {
    let file = read_sample(path)?;
    if file.grid().points() != grid.points() {
        return Err(CliError::input(path, fdspatial::Error::GridMismatch));
    }
    let functions = file.rows().map(<[f64]>::to_vec).collect();
    Basis::new(grid.clone(), functions, None).map_err(|e| CliError::input(path, e))
}

fn read_directions(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> = line.split(',').map(|v| v.trim().parse::<f64>()).collect();
        let row = row.map_err(|e| {
            CliError::input(path, fdspatial::Error::Parse { line: i + 1, message: e.to_string() })
        })?;
        out.push(row);
    }
    if out.is_empty() {
        return Err(CliError::input(path, fdspatial::Error::InvalidArgument("no directions".into())));
    }
    Ok(out)
}

fn depth_cmd(a: DepthArgs) -> Result<()> {
    let sample = read_sample(&a.input)?;
    let queries = match &a.query {
        Some(q) => read_sample(q)?,
        None => sample.clone(),
    };
    let depths = depth::depth_profile(&sample, &queries)?;
    let mut s = String::from("index,depth\n");
    for (i, d) in depths.iter().enumerate() {
        s.push_str(&format!("{i},{d}\n"));
    }
    emit(a.out.as_ref(), &s)
}

fn ddplot_cmd(a: DdplotArgs) -> Result<()> {
    let s1 = read_sample(&a.a)?;
    let s2 = read_sample(&a.b)?;
    let data = depth::dd_plot(&s1, &s2)?;
    let mut s = String::from("depth_a,depth_b,source\n");
    for p in &data.points {
        let src = match p.source {
            Source::Sample1 => "a",
            Source::Sample2 => "b",
        };
        s.push_str(&format!("{},{},{src}\n", p.depth_in_sample1, p.depth_in_sample2));
    }
    if let Some(path) = &a.svg {
        emit(Some(path), &svg::ddplot(&data))?;
    }
    emit(a.out.as_ref(), &s)
}

#[derive(Serialize)]
struct TableRow<'a> {
    label: &'a str,
    reference: Option<f64>,
    tolerance: f64,
    within_tolerance: Option<bool>,
    are: f64,
    report: &'a efficiency::EfficiencyReport,
}

fn table_rows(cells: &[TableCell]) -> Vec<TableRow<'_>> {
    cells
        .iter()
        .map(|c| {
            let reference = (!c.reference.is_nan()).then_some(c.reference);
            TableRow {
                label: &c.label,
                reference,
                tolerance: c.tolerance,
                within_tolerance: reference.map(|_| c.within_tolerance()),
                are: c.report.are,
                report: &c.report,
            }
        })
        .collect()
}

fn table_text(rows: &[TableRow], grid_size: usize, mc: usize, seed: u64) -> String {
    let mut s = format!("# D={grid_size} mc={mc} seed={seed} version={VERSION}\n");
    s.push_str(&format!("{:<22} {:>8} {:>10} {:>6}  {}\n", "cell", "ARE", "reference", "tol", "status"));
    for r in rows {
        let (reference, status) = match (r.reference, r.within_tolerance) {
            (Some(v), Some(ok)) => (format!("{v:.3}"), if ok { "ok" } else { "OUTSIDE" }),
            _ => ("-".to_string(), "-"),
        };
        s.push_str(&format!("{:<22} {:>8.4} {:>10} {:>6.3}  {}\n", r.label, r.are, reference, r.tolerance, status));
    }
    s
}

fn efficiency_cmd(a: EfficiencyArgs) -> Result<()> {
    if a.table {
        let cells = efficiency::standard_table(a.grid_size, a.mc, a.seed)?;
        let rows = table_rows(&cells);
        let text = match a.format {
            TableFormat::Text => table_text(&rows, a.grid_size, a.mc, a.seed),
            TableFormat::Json => to_json(&json!({
                "command": "efficiency-table",
                "D": a.grid_size,
                "mc_size": a.mc,
                "seed": a.seed,
                "cells": rows,
                "generator": rng::GENERATOR,
                "version": VERSION,
            })),
        };
        return emit(a.out.as_ref(), &text);
    }
    let (spec, grid) = setup(&a.process, a.grid_size, a.seed)?;
    let report = efficiency::are(&spec, &grid, a.mc, a.seed)?;
    let text = match a.format {
        TableFormat::Json => to_json(&report),
        TableFormat::Text => format!(
            "{}: ARE = {:.4} (trace Sigma {:.6}, trace V0 {:.6}; D={} mc={} seed={} version={})\n",
            report.process, report.are, report.trace_sigma, report.trace_v0, report.grid_size, report.mc_size,
            report.seed, report.version
        ),
    };
    emit(a.out.as_ref(), &text)
}

fn converge_cmd(a: ConvergeArgs) -> Result<()> {
    let (spec, grid) = setup(&a.process, a.grid_size, a.seed)?;
    let mut opts = StudyOptions::new(a.n_list.clone(), a.reps, a.seed);
    opts.reference_size = a.reference_size;
    let (json, csv) = match a.study {
        Study::Gc => {
            let probes = asymptotics::probe_set(&spec, &grid, a.probes, a.seed)?;
            let r = asymptotics::gc_rate_study(&spec, &probes, &opts)?;
            (to_json(&r), r.medians_csv())
        }
        Study::Integrated => {
            let r = asymptotics::integrated_error_study(&spec, &grid, a.draws, &opts)?;
            (to_json(&r), r.medians_csv())
        }
        Study::Bahadur => {
            let u = match &a.u {
                Some(u) => DirectionU::new(u.clone())?,
                None => DirectionU::zero(a.d),
            };
            let r = asymptotics::bahadur_study(&spec, &grid, a.d, &u, &opts)?;
            (to_json(&r), r.medians_csv())
        }
    };
    if let Some(path) = &a.csv {
        emit(Some(path), &csv)?;
    }
    emit(a.out.as_ref(), &json)
}
