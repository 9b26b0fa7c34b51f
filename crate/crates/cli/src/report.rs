//! CSV and plot-data emission. Every float goes through the same
//! formatter so reruns of the same config are byte-identical.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use crate::runner::{ReportRow, ScenarioOutcome};

pub const CSV_HEADER: &str =
    "scenario,theorem,t,F,dF_analytic,dF_fd,d2F_fd,lhs,rhs,margin,status";

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn status(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn row_line(r: &ReportRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        r.scenario,
        r.theorem,
        num(r.t),
        num(r.f),
        num(r.df_analytic),
        num(r.df_fd),
        num(r.d2f_fd),
        num(r.lhs),
        num(r.rhs),
        num(r.margin),
        status(r.pass),
    )
}

pub fn write_scenario_csv(dir: &Path, outcome: &ScenarioOutcome) -> io::Result<PathBuf> {
    let path = dir.join(format!("{}.csv", outcome.name));
    let mut out = String::with_capacity(128 * (outcome.rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &outcome.rows {
        out.push_str(&row_line(r));
        out.push('\n');
    }
    fs::write(&path, out)?;
    Ok(path)
}

pub fn write_summary(dir: &Path, outcomes: &[ScenarioOutcome]) -> io::Result<PathBuf> {
    let path = dir.join("summary.csv");
    let mut out = String::from("scenario,worst_margin,status\n");
    for o in outcomes {
        let worst = if o.rows.is_empty() { 0.0 } else { o.worst_margin };
        out.push_str(&format!("{},{},{}\n", o.name, num(worst), status(o.pass)));
    }
    fs::write(&path, out)?;
    Ok(path)
}

/// One gnuplot-ready file per inequality track: whitespace-separated
/// columns t, F, dF_analytic, dF_fd, d2F_fd, margin.
pub fn write_plot_data(dir: &Path, outcome: &ScenarioOutcome) -> io::Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for track in &outcome.plots {
        let path = dir.join(format!("{}-{}.dat", outcome.name, track.theorem));
        let mut out = String::from("# t F dF_analytic dF_fd d2F_fd margin\n");
        for k in 0..track.t.len() {
            out.push_str(&format!(
                "{} {} {} {} {} {}\n",
                num(track.t[k]),
                num(track.f[k]),
                num(track.df_analytic[k]),
                num(track.df_fd[k]),
                num(track.d2f_fd[k]),
                num(track.margin[k]),
            ));
        }
        fs::write(&path, out)?;
        paths.push(path);
    }
    Ok(paths)
}

pub fn print_outcome(mut w: impl Write, o: &ScenarioOutcome) -> io::Result<()> {
    let worst = if o.rows.is_empty() { 0.0 } else { o.worst_margin };
    writeln!(
        w,
        "{:<28} rows {:>4}  worst margin {:>+.3e}  {}",
        o.name,
        o.rows.len(),
        worst,
        status(o.pass),
    )
}
