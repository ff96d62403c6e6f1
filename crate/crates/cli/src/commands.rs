use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde_json::json;

use g2nilflow::curvature::{nilsoliton_solve, ricci as ricci_of};
use g2nilflow::flow::{
    check_initial_form, integrate_with, t_min_quadrature, write_csv, write_events_json, write_json,
    CsvColumns, FlowOptions, DEFAULT_TOL,
};
use g2nilflow::g2::metric_from_g2;
use g2nilflow::liealg::catalog::{catalog, lookup, primary_entries, CatalogEntry, Presentation};
use g2nilflow::liealg::LieAlgebra;
use g2nilflow::obstruction::infeasibility_search;
use g2nilflow::verify::{is_known_filter, Suite};
use g2nilflow::{Error, KForm, Metric};

use crate::{Failure, Format, Source, EXIT_BLOWUP, EXIT_VERIFY};

type CmdResult = Result<(), Failure>;

/// Tolerance for `d² = 0` when reading an algebra from JSON.
const JSON_JACOBI_TOL: f64 = 1e-9;

/// The flow tolerance: `--tol`, else `G2NILFLOW_TOL`, else the default.
fn flow_tolerance(flag: Option<f64>) -> Result<f64, Failure> {
    let tol = match flag {
        Some(t) => t,
        None => match std::env::var("G2NILFLOW_TOL") {
            Ok(s) => s
                .trim()
                .parse()
                .map_err(|_| Failure::invalid(format!("G2NILFLOW_TOL is not a number: {s:?}")))?,
            Err(_) => DEFAULT_TOL,
        },
    };
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Failure::invalid(format!("tolerance must be positive and finite, got {tol}")));
    }
    Ok(tol)
}

fn output(out: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn read_json(path: &Path) -> Result<serde_json::Value, Failure> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(serde_json::from_str(&text).with_context(|| format!("{} is not valid JSON", path.display()))?)
}

fn read_form(path: &Path) -> Result<KForm, Failure> {
    KForm::from_json_value(&read_json(path)?, Some(3))
        .map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))
}

struct Resolved {
    alg: LieAlgebra,
    form: Option<KForm>,
}

/// Another presentation of the same algebra that stores a G2 form.
fn presentation_with_form(entry: &CatalogEntry) -> Option<&'static CatalogEntry> {
    catalog().iter().find(|e| e.family == entry.family && e.has_g2form())
}

/// Resolves `--algebra` (catalog key or JSON file) and `--form`. When
/// `need_form` is set and the named entry stores no form, another
/// presentation of the same algebra that does is used instead.
fn resolve(src: &Source, need_form: bool) -> Result<Resolved, Failure> {
    let user_form = src.form.as_deref().map(read_form).transpose()?;
    if let Ok(entry) = lookup(&src.algebra) {
        if user_form.is_some() || entry.has_g2form() || !need_form {
            return Ok(Resolved {
                alg: entry.algebra.clone(),
                form: user_form.or_else(|| entry.g2form.clone()),
            });
        }
        return match presentation_with_form(entry) {
            Some(alt) => {
                eprintln!(
                    "note: {} stores no G2 form; using the {} presentation ({})",
                    entry.key, alt.key, alt.presentation_note
                );
                Ok(Resolved { alg: alt.algebra.clone(), form: alt.g2form.clone() })
            }
            None => Err(Failure::invalid(format!(
                "{} has no stored closed G2 form; pass one with --form",
                entry.key
            ))),
        };
    }
    let path = PathBuf::from(&src.algebra);
    if !path.exists() {
        return Err(Failure::invalid(format!(
            "`{}` is neither a catalog key (see `list --all`) nor an existing file",
            src.algebra
        )));
    }
    let alg = LieAlgebra::from_json_value(&read_json(&path)?, JSON_JACOBI_TOL)
        .map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))?;
    if need_form && user_form.is_none() {
        return Err(Failure::invalid("an algebra read from a file needs --form"));
    }
    Ok(Resolved { alg, form: user_form })
}

fn require_form(r: &Resolved) -> Result<&KForm, Failure> {
    r.form.as_ref().ok_or_else(|| Failure::invalid("no G2 form available; pass one with --form"))
}

pub fn list(as_json: bool, all: bool) -> CmdResult {
    let entries: Vec<&CatalogEntry> = if all {
        catalog().iter().collect()
    } else {
        primary_entries().collect()
    };
    let rows: Vec<serde_json::Value> = entries
        .iter()
        .map(|e| {
            let stored = presentation_with_form(e);
            json!({
                "key": e.key,
                "family": e.family,
                "presentation": match e.presentation {
                    Presentation::Primary => "primary",
                    Presentation::Alternate => "alternate",
                },
                "step": e.algebra.nilpotency_step(),
                "closed_g2_form": stored.is_some(),
                "form_key": stored.map(|s| s.key),
                "soliton": e.soliton_status.label(),
                "note": e.presentation_note,
            })
        })
        .collect();
    let mut w = output(None)?;
    if as_json {
        serde_json::to_writer_pretty(&mut w, &rows).context("writing JSON")?;
        writeln!(w)?;
    } else {
        writeln!(w, "{:<17} {:>4}  {:<24} {:<18} note", "key", "step", "closed-G2 (stored form)", "soliton")?;
        for (e, row) in entries.iter().zip(&rows) {
            let g2 = match row["form_key"].as_str() {
                Some(k) if k == e.key => "yes".to_string(),
                Some(k) => format!("yes (in {k})"),
                None => "no".to_string(),
            };
            let step = e.algebra.nilpotency_step().map_or("-".to_string(), |s| s.to_string());
            writeln!(
                w,
                "{:<17} {:>4}  {:<24} {:<18} {}",
                e.key,
                step,
                g2,
                e.soliton_status.label(),
                e.presentation_note
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn verify_paper(
    only: Option<&str>,
    key: Option<&str>,
    form: Option<&Path>,
    format: Format,
    out: Option<&Path>,
) -> CmdResult {
    if let Some(f) = only {
        if !is_known_filter(f) {
            return Err(Failure::invalid(format!(
                "--only {f}: expected a section (catalog, metric, ricci, soliton, flow, obstruction, search), a criterion name, or 1..12"
            )));
        }
    }
    let mut suite = Suite::new();
    if let (Some(key), Some(path)) = (key, form) {
        suite = suite.with_form(key, read_form(path)?)?;
    }
    let mut w = output(out)?;
    let report = match format {
        Format::Json => {
            let report = suite.run(only);
            serde_json::to_writer_pretty(&mut w, &report).context("writing JSON")?;
            writeln!(w)?;
            report
        }
        Format::Text | Format::Csv => {
            let mut io_err = None;
            let report = suite.run_with(only, |c| {
                let mut lines = vec![c.summary()];
                lines.extend(c.measurements.iter().map(|m| format!("       {m}")));
                if let Err(e) = writeln!(w, "{}", lines.join("\n")).and_then(|_| w.flush()) {
                    io_err.get_or_insert(e);
                }
            });
            if let Some(e) = io_err {
                return Err(e.into());
            }
            report
        }
    };
    w.flush()?;
    if report.passed() {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_VERIFY,
            message: format!("failed checks: {}", report.failed_names().join(", ")),
        })
    }
}

fn precondition_failure(e: Error) -> Failure {
    match e {
        Error::NotClosed(d) => Failure::invalid(format!(
            "initial form fails the closedness precondition: |d phi| = {d:e}"
        )),
        Error::NonPositive | Error::DegenerateForm | Error::NotPositiveDefinite => Failure::invalid(format!(
            "initial form fails the positivity precondition: {e}"
        )),
        other => other.into(),
    }
}

fn columns(emit: &[String]) -> Result<CsvColumns, Failure> {
    let mut cols = CsvColumns::NONE;
    for name in emit {
        match name.as_str() {
            "riem_sup" => cols.riem_sup = true,
            "lambda" => cols.lambda = true,
            other => {
                return Err(Failure::invalid(format!(
                    "--emit {other}: expected riem_sup or lambda"
                )))
            }
        }
    }
    Ok(cols)
}

pub fn flow(
    src: &Source,
    t_end: f64,
    tol: Option<f64>,
    emit: &[String],
    format: Format,
    out: Option<&Path>,
) -> CmdResult {
    if !t_end.is_finite() {
        return Err(Failure::invalid(format!("--t-end must be finite, got {t_end}")));
    }
    let tol = flow_tolerance(tol)?;
    let cols = columns(emit)?;
    let r = resolve(src, true)?;
    let phi0 = require_form(&r)?;
    check_initial_form(&r.alg, phi0).map_err(precondition_failure)?;
    let traj = integrate_with(&r.alg, phi0, &FlowOptions::new(t_end).with_tol(tol))?;
    let mut w = output(out)?;
    match format {
        Format::Json => write_json(&mut w, &traj, &r.alg, cols)?,
        Format::Csv | Format::Text => {
            write_csv(&mut w, &traj, &r.alg, cols)?;
            if let Some(p) = out {
                let mut name = p.as_os_str().to_owned();
                name.push(".events.json");
                let f = File::create(PathBuf::from(name)).context("cannot create the events file")?;
                write_events_json(BufWriter::new(f), &traj)?;
            }
        }
    }
    w.flush()?;
    match traj.blowup() {
        Some(ev) => Err(Failure {
            code: EXIT_BLOWUP,
            message: format!(
                "blow-up at t = {:.12} before t_end = {t_end}: {}; the partial trajectory was written",
                ev.t, ev.reason
            ),
        }),
        None => Ok(()),
    }
}

pub fn search(key: &str, restarts: usize, seed: u64, format: Format, out: Option<&Path>) -> CmdResult {
    if restarts == 0 {
        return Err(Failure::invalid("--restarts must be at least 1"));
    }
    let r = resolve(&Source { algebra: key.to_string(), form: None }, false)?;
    let rep = infeasibility_search(&r.alg, &Metric::identity(), restarts, seed);
    let mut w = output(out)?;
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, &rep).context("writing JSON")?;
            writeln!(w)?;
        }
        Format::Text | Format::Csv => {
            writeln!(w, "{:<17} {:>6} {:>9} {:>24}  verdict", "algebra", "dim Z3", "restarts", "best residual")?;
            writeln!(
                w,
                "{:<17} {:>6} {:>9} {:>24.16e}  {}",
                rep.algebra,
                rep.dim_z3,
                rep.restarts,
                rep.best_residual,
                rep.verdict()
            )?;
            writeln!(w, "{}", rep.note)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn print_json(v: &serde_json::Value) -> CmdResult {
    let mut w = output(None)?;
    serde_json::to_writer_pretty(&mut w, v).context("writing JSON")?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn metric(src: &Source) -> CmdResult {
    let r = resolve(src, true)?;
    let g = metric_from_g2(require_form(&r)?).map_err(precondition_failure)?;
    print_json(&g.to_json_value())
}

/// The form's metric when there is a form, the orthonormal one otherwise.
fn working_metric(r: &Resolved) -> Result<(Metric, &'static str), Failure> {
    match &r.form {
        Some(phi) => Ok((metric_from_g2(phi).map_err(precondition_failure)?, "induced by the G2 form")),
        None => Ok((Metric::identity(), "orthonormal basis")),
    }
}

pub fn ricci(src: &Source) -> CmdResult {
    let r = resolve(src, false)?;
    let (g, which) = working_metric(&r)?;
    let ric = ricci_of(&r.alg, &g)?;
    let m = ric.matrix();
    let rows: Vec<Vec<f64>> = (0..7).map(|i| (0..7).map(|j| m[(i, j)]).collect()).collect();
    print_json(&json!({
        "algebra": r.alg.name(),
        "metric": which,
        "ricci": rows,
        "diagonal": ric.diagonal(),
        "scalar": ric.scalar(),
    }))
}

pub fn soliton(src: &Source) -> CmdResult {
    let r = resolve(src, false)?;
    let (g, which) = working_metric(&r)?;
    let cert = nilsoliton_solve(&r.alg, &g)?;
    let mut v = cert.to_json_value();
    v["algebra"] = json!(r.alg.name());
    v["metric"] = json!(which);
    print_json(&v)
}

pub fn tmin() -> CmdResult {
    let mut w = output(None)?;
    writeln!(w, "{:.12}", t_min_quadrature())?;
    w.flush()?;
    Ok(())
}
