//! Executes scenarios and flattens every kind of result into report rows.

use hamot_core::curvature::{curvature_scaling_check, curvature_trace_analytic};
use hamot_core::flow::homogeneity_flow_check;
use hamot_core::hamiltonian::PhasePoint;
use hamot_core::sweep::curvature_trace_sweep;
use hamot_core::transport::{
    bochner_check, hj_solve, inequality_check, particle_cloud, InequalityReport,
};
use hamot_core::CoreError;

use crate::scenario::{
    BochnerScenario, OracleSweepScenario, ScalingScenario, Scenario, ScenarioKind,
    TransportScenario,
};

/// One CSV line. The numeric columns carry whatever the scenario kind
/// measures; unused columns are zero so the schema never changes shape.
#[derive(Debug, Clone)]
pub struct ReportRow {
    pub scenario: String,
    pub theorem: String,
    pub t: f64,
    pub f: f64,
    pub df_analytic: f64,
    pub df_fd: f64,
    pub d2f_fd: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub pass: bool,
}

pub struct ScenarioOutcome {
    pub name: String,
    pub rows: Vec<ReportRow>,
    pub worst_margin: f64,
    pub pass: bool,
    /// Full-resolution functional tracks for plot emission, one per check.
    pub plots: Vec<PlotTrack>,
}

pub struct PlotTrack {
    pub theorem: String,
    pub t: Vec<f64>,
    pub f: Vec<f64>,
    pub df_analytic: Vec<f64>,
    pub df_fd: Vec<f64>,
    pub d2f_fd: Vec<f64>,
    pub margin: Vec<f64>,
}

pub fn run_scenario(s: &Scenario) -> Result<ScenarioOutcome, CoreError> {
    let mut rows = Vec::new();
    let mut plots = Vec::new();
    match &s.kind {
        ScenarioKind::Transport(t) => run_transport(&s.name, t, &mut rows, &mut plots)?,
        ScenarioKind::OracleSweep(o) => run_sweep(&s.name, o, &mut rows)?,
        ScenarioKind::Bochner(b) => run_bochner(&s.name, b, &mut rows)?,
        ScenarioKind::Scaling(c) => run_scaling(&s.name, c, &mut rows)?,
    }
    let worst_margin = rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    let pass = rows.iter().all(|r| r.pass);
    Ok(ScenarioOutcome {
        name: s.name.clone(),
        rows,
        worst_margin,
        pass,
        plots,
    })
}

fn run_transport(
    name: &str,
    sc: &TransportScenario,
    rows: &mut Vec<ReportRow>,
    plots: &mut Vec<PlotTrack>,
) -> Result<(), CoreError> {
    let cloud = particle_cloud(
        &sc.model,
        &sc.measure,
        &sc.f,
        &sc.rho0,
        sc.t0,
        &sc.bounds,
        sc.per_axis,
    )?;
    let state = hj_solve(&sc.model, &sc.measure, &sc.f, &cloud, sc.t0, sc.t1, sc.steps)?;
    for check in &sc.checks {
        let report: InequalityReport =
            inequality_check(&sc.model, &sc.measure, &state, check, sc.tol)?;
        let label = report.theorem.label().to_string();
        for r in &report.rows {
            rows.push(ReportRow {
                scenario: name.to_string(),
                theorem: label.clone(),
                t: r.t,
                f: r.f,
                df_analytic: r.df_analytic,
                df_fd: r.df_fd,
                d2f_fd: r.d2f_fd,
                lhs: r.lhs,
                rhs: r.rhs,
                margin: r.margin,
                pass: r.pass,
            });
        }
        plots.push(PlotTrack {
            theorem: label,
            t: report.rows.iter().map(|r| r.t).collect(),
            f: report.rows.iter().map(|r| r.f).collect(),
            df_analytic: report.rows.iter().map(|r| r.df_analytic).collect(),
            df_fd: report.rows.iter().map(|r| r.df_fd).collect(),
            d2f_fd: report.rows.iter().map(|r| r.d2f_fd).collect(),
            margin: report.rows.iter().map(|r| r.margin).collect(),
        });
    }
    Ok(())
}

fn run_sweep(
    name: &str,
    sc: &OracleSweepScenario,
    rows: &mut Vec<ReportRow>,
) -> Result<(), CoreError> {
    let samples = curvature_trace_sweep(sc.seed, sc.samples)?;
    for row in samples {
        let margin = sc.tol - row.rel_err;
        rows.push(ReportRow {
            scenario: name.to_string(),
            theorem: format!("oracle-{}", row.family),
            t: row.t,
            f: row.rel_err,
            df_analytic: 0.0,
            df_fd: 0.0,
            d2f_fd: 0.0,
            lhs: row.frame_trace,
            rhs: row.analytic_trace,
            margin,
            pass: margin >= 0.0,
        });
    }
    Ok(())
}

fn run_bochner(
    name: &str,
    sc: &BochnerScenario,
    rows: &mut Vec<ReportRow>,
) -> Result<(), CoreError> {
    for x in &sc.points {
        let (lhs, rhs) = bochner_check(&sc.model, &sc.f, x)?;
        let margin = sc.tol - (lhs - rhs).abs();
        rows.push(ReportRow {
            scenario: name.to_string(),
            theorem: "bochner".to_string(),
            t: 0.0,
            f: (lhs - rhs).abs(),
            df_analytic: 0.0,
            df_fd: 0.0,
            d2f_fd: 0.0,
            lhs,
            rhs,
            margin,
            pass: margin >= 0.0,
        });
    }
    Ok(())
}

fn run_scaling(
    name: &str,
    sc: &ScalingScenario,
    rows: &mut Vec<ReportRow>,
) -> Result<(), CoreError> {
    let z0 = PhasePoint::new(sc.x.clone(), sc.p.clone());
    let drift = homogeneity_flow_check(&sc.model, &z0, sc.t_span, sc.lambda, sc.steps)?;
    let margin = sc.tol_flow - drift;
    rows.push(ReportRow {
        scenario: name.to_string(),
        theorem: "lemma7.2-flow".to_string(),
        t: sc.t_span,
        f: drift,
        df_analytic: 0.0,
        df_fd: 0.0,
        d2f_fd: 0.0,
        lhs: drift,
        rhs: 0.0,
        margin,
        pass: margin >= 0.0,
    });

    // Trace scaling at the start point and at a few nodes along the orbit.
    let traj = hamot_core::flow::integrate_flow(&sc.model, 0.0, &z0, sc.t_span, sc.steps)?;
    for frac in [0.0, 0.5, 1.0] {
        let k = ((sc.steps as f64) * frac) as usize;
        let pt = &traj.points[k];
        let (scaled, expected) = curvature_scaling_check(&sc.model, traj.t_grid[k], pt, sc.lambda)?;
        let rel = (scaled - expected).abs() / expected.abs().max(1.0);
        let margin = sc.tol_trace - rel;
        let base = curvature_trace_analytic(&sc.model, traj.t_grid[k], pt)?;
        rows.push(ReportRow {
            scenario: name.to_string(),
            theorem: "lemma7.2-scaling".to_string(),
            t: traj.t_grid[k],
            f: base,
            df_analytic: 0.0,
            df_fd: 0.0,
            d2f_fd: 0.0,
            lhs: scaled,
            rhs: expected,
            margin,
            pass: margin >= 0.0,
        });
    }
    Ok(())
}
