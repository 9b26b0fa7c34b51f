//! Scenario assembly: configs in, ready-to-run models out, plus the
//! built-in preset catalog.

use nalgebra::DVector;

use hamot_core::chart::Axis;
use hamot_core::field::ScalarField;
use hamot_core::flow;
use hamot_core::geometry::{MeasureModel, MetricModel, ScaleSolution};
use hamot_core::hamiltonian::{HamiltonianModel, PotentialSpec};
use hamot_core::transport::TheoremCheck;

use crate::config::{Config, ConfigError};

fn err(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        key: key.to_string(),
        message: message.into(),
    }
}

/// Command-line overrides applied on top of any config or preset.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub steps: Option<usize>,
    pub particles: Option<usize>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
}

pub struct Scenario {
    pub name: String,
    pub kind: ScenarioKind,
}

pub enum ScenarioKind {
    Transport(TransportScenario),
    OracleSweep(OracleSweepScenario),
    Bochner(BochnerScenario),
    Scaling(ScalingScenario),
}

pub struct TransportScenario {
    pub model: HamiltonianModel,
    pub measure: MeasureModel,
    pub f: ScalarField,
    pub rho0: ScalarField,
    pub t0: f64,
    pub t1: f64,
    pub steps: usize,
    pub per_axis: usize,
    pub bounds: Vec<(f64, f64)>,
    pub checks: Vec<TheoremCheck>,
    pub tol: f64,
}

pub struct OracleSweepScenario {
    pub seed: u64,
    pub samples: usize,
    pub tol: f64,
}

pub struct BochnerScenario {
    pub model: HamiltonianModel,
    pub f: ScalarField,
    pub points: Vec<DVector<f64>>,
    pub tol: f64,
}

pub struct ScalingScenario {
    pub model: HamiltonianModel,
    pub x: DVector<f64>,
    pub p: DVector<f64>,
    pub lambda: f64,
    pub t_span: f64,
    pub steps: usize,
    pub tol_flow: f64,
    pub tol_trace: f64,
}

pub fn from_config(name: &str, cfg: &Config, over: &Overrides) -> Result<Scenario, ConfigError> {
    let kind = cfg.get("scenario.kind").unwrap_or("transport").to_string();
    let scenario = match kind.as_str() {
        "transport" => build_transport(cfg, over)?,
        "oracle_sweep" => build_sweep(cfg, over)?,
        "bochner" => build_bochner(cfg, over)?,
        "scaling" => build_scaling(cfg, over)?,
        other => {
            return Err(err(
                "scenario.kind",
                format!("unknown scenario kind '{other}' (transport, oracle_sweep, bochner, scaling)"),
            ))
        }
    };
    cfg.finish()?;
    Ok(Scenario {
        name: name.to_string(),
        kind: scenario,
    })
}

/// Base metric, optionally wrapped into a scaled family. The scale window
/// defaults to the scenario time window padded on both sides so finite
/// differencing near the endpoints never leaves the solved range.
fn build_metric(cfg: &Config, t0: f64, t1: f64) -> Result<MetricModel, ConfigError> {
    let kind = cfg.require("metric.kind")?.to_string();
    let base = match kind.as_str() {
        "flat_torus" => {
            let dim = cfg.count("metric.dim")?.unwrap_or(2);
            MetricModel::flat_torus(dim)
        }
        "flat_box" => {
            let ranges = cfg
                .ranges("metric.box")?
                .ok_or_else(|| err("metric.box", "flat_box needs axis ranges"))?;
            MetricModel::flat_box(&ranges)
        }
        "sphere" => {
            let radius = cfg.number_or("metric.radius", 1.0)?;
            MetricModel::round_sphere(radius).map_err(|e| err("metric.radius", e.to_string()))?
        }
        "conformal_torus" => {
            let phi = cfg
                .field("metric.phi.expr", 2)?
                .ok_or_else(|| err("metric.phi.expr", "conformal_torus needs a conformal factor"))?;
            MetricModel::conformal_torus(phi).map_err(|e| err("metric.phi.expr", e.to_string()))?
        }
        other => {
            return Err(err(
                "metric.kind",
                format!("unknown metric kind '{other}' (flat_torus, flat_box, sphere, conformal_torus)"),
            ))
        }
    };

    let Some(c1) = cfg.timefn("metric.scale.c1.expr")? else {
        return Ok(base);
    };
    let c2 = cfg
        .timefn("metric.scale.c2.expr")?
        .unwrap_or_else(|| hamot_core::field::TimeFn::constant(0.0));
    let s0 = cfg.number_or("metric.scale.s0", 1.0)?;
    let anchor = cfg.number_or("metric.scale.anchor", t0)?;
    let (lo, hi) = match cfg.ranges("metric.scale.window")? {
        Some(r) if r.len() == 1 => r[0],
        Some(_) => return Err(err("metric.scale.window", "expected a single lo:hi range")),
        None => {
            let pad = 0.05 * (t1 - t0) + 0.02;
            (t0 - pad, t1 + pad)
        }
    };
    let kappa0 = base
        .sectional_curvature(anchor)
        .ok_or_else(|| err("metric.scale.c1.expr", "scaled families need an Einstein base (sphere or flat)"))?;
    let dim = base.dim();
    let scale = ScaleSolution::solve(c1, c2, kappa0, dim, anchor, s0, lo, hi, 4096)
        .map_err(|e| err("metric.scale.c1.expr", e.to_string()))?;
    MetricModel::scaled_family(base, scale).map_err(|e| err("metric.kind", e.to_string()))
}

fn build_hamiltonian(cfg: &Config, metric: MetricModel) -> Result<HamiltonianModel, ConfigError> {
    let dim = metric.dim();
    let kind = cfg.get("hamiltonian.kind").unwrap_or("kinetic").to_string();
    let model = match kind.as_str() {
        "kinetic" => HamiltonianModel::kinetic(metric),
        "mechanical" => {
            let u = cfg
                .field("hamiltonian.U.expr", dim)?
                .ok_or_else(|| err("hamiltonian.U.expr", "mechanical kind needs a potential"))?;
            HamiltonianModel::mechanical(metric, u)
        }
        "time_dependent" => {
            let spec = match cfg.get("hamiltonian.U") {
                Some("ricci_scaled") => Some(PotentialSpec::RicciScaled),
                Some(other) => {
                    return Err(err(
                        "hamiltonian.U",
                        format!("unknown potential spec '{other}' (use ricci_scaled or hamiltonian.U.expr)"),
                    ))
                }
                None => cfg.field("hamiltonian.U.expr", dim)?.map(PotentialSpec::Field),
            };
            HamiltonianModel::time_dependent(metric, spec)
        }
        "drift" => {
            let w = cfg
                .field("hamiltonian.W.expr", dim)?
                .ok_or_else(|| err("hamiltonian.W.expr", "drift kind needs a drift potential"))?;
            let u = cfg.field("hamiltonian.U.expr", dim)?;
            HamiltonianModel::drift(metric, w, u)
        }
        other => {
            return Err(err(
                "hamiltonian.kind",
                format!("unknown hamiltonian kind '{other}' (kinetic, mechanical, time_dependent, drift)"),
            ))
        }
    };
    model.map_err(|e| err("hamiltonian.kind", e.to_string()))
}

fn build_measure(cfg: &Config, dim: usize) -> Result<MeasureModel, ConfigError> {
    let kind = cfg.get("measure.kind").unwrap_or("volume").to_string();
    match kind.as_str() {
        "volume" => Ok(MeasureModel::RiemannianVolume),
        "weighted" => {
            let u = cfg
                .field("measure.U.expr", dim)?
                .ok_or_else(|| err("measure.U.expr", "weighted measure needs a weight"))?;
            MeasureModel::weighted(u).map_err(|e| err("measure.U.expr", e.to_string()))
        }
        "hj_weighted" => {
            let k = cfg
                .timefn("measure.k.expr")?
                .ok_or_else(|| err("measure.k.expr", "hj_weighted measure needs k(t)"))?;
            let log_sigma = cfg
                .timefn("measure.logsigma.expr")?
                .unwrap_or_else(|| hamot_core::field::TimeFn::constant(0.0));
            Ok(MeasureModel::hj_weighted(k, log_sigma))
        }
        other => Err(err(
            "measure.kind",
            format!("unknown measure kind '{other}' (volume, weighted, hj_weighted)"),
        )),
    }
}

fn build_checks(cfg: &Config, dim: usize) -> Result<Vec<TheoremCheck>, ConfigError> {
    let names = cfg.list("check.theorem")?;
    if names.is_empty() {
        return Err(err("check.theorem", "transport scenarios need at least one theorem id"));
    }
    let mut checks = Vec::new();
    for name in names {
        let check = match name.as_str() {
            "thm2.2" => TheoremCheck::Thm2_2 {
                b: cfg
                    .timefn("check.b.expr")?
                    .unwrap_or_else(|| hamot_core::field::TimeFn::constant(0.0)),
            },
            "cor2.3" => TheoremCheck::Cor2_3 {
                k_lower: cfg.number_or("check.K", 1.0)?,
            },
            "cor2.4" => TheoremCheck::Cor2_4 {
                b: cfg
                    .timefn("check.b.expr")?
                    .unwrap_or_else(|| hamot_core::field::TimeFn::constant(0.0)),
            },
            "cor2.7" => TheoremCheck::Cor2_7,
            "cor2.8" => TheoremCheck::Cor2_8,
            "cor2.9" => TheoremCheck::Cor2_9,
            "thm2.10" => TheoremCheck::Thm2_10 {
                q: cfg
                    .number("check.q")?
                    .ok_or_else(|| err("check.q", "thm2.10 needs the exponent q"))?,
                b1: cfg
                    .timefn("check.b1.expr")?
                    .unwrap_or_else(|| hamot_core::field::TimeFn::constant(0.0)),
                b2: cfg
                    .timefn("check.b2.expr")?
                    .unwrap_or_else(|| hamot_core::field::TimeFn::constant(0.0)),
            },
            "cor2.11" => TheoremCheck::Cor2_11 {
                n_cap: cfg
                    .number("check.N")?
                    .ok_or_else(|| err("check.N", "cor2.11 needs the dimension bound N"))?,
            },
            "cor2.13" => TheoremCheck::Cor2_13 {
                q: cfg.number_or("check.q", 0.5)?,
                m: cfg.number_or("check.m", 1.0)?,
                k_coeff: cfg.number_or("check.C1", -2.0)?,
                b1_coeff: cfg.number_or("check.C2", 1.0)?,
            },
            "thm2.15" => TheoremCheck::Thm2_15,
            other => {
                return Err(err("check.theorem", format!("unknown theorem id '{other}'")))
            }
        };
        checks.push(check);
    }
    let _ = dim;
    Ok(checks)
}

/// Default quadrature box: full torus cells, the sphere away from both
/// poles; bounded charts have no safe default and must say where the mass
/// sits.
fn default_bounds(metric: &MetricModel) -> Option<Vec<(f64, f64)>> {
    let sphere_like = metric.chart.name.contains("sphere");
    metric
        .chart
        .axes
        .iter()
        .map(|axis| match axis {
            Axis::Periodic { period } => Some((-period / 2.0, period / 2.0)),
            Axis::Bounded { lo, hi } if sphere_like => {
                let pad = 0.25 * (hi - lo);
                Some((lo + pad, hi - pad))
            }
            Axis::Bounded { .. } => None,
        })
        .collect()
}

fn build_transport(cfg: &Config, over: &Overrides) -> Result<ScenarioKind, ConfigError> {
    let t0 = cfg.number_or("time.t0", 0.0)?;
    let t1 = cfg
        .number("time.t1")?
        .ok_or_else(|| err("time.t1", "transport scenarios need an end time"))?;
    if !(t1 > t0) {
        return Err(err("time.t1", format!("window [{t0}, {t1}] is not increasing")));
    }
    let metric = build_metric(cfg, t0, t1)?;
    let dim = metric.dim();
    let model = build_hamiltonian(cfg, metric)?;
    let measure = build_measure(cfg, dim)?;
    let f = cfg
        .field("potential.f.expr", dim)?
        .ok_or_else(|| err("potential.f.expr", "transport scenarios need a transport potential"))?;
    let rho0 = cfg
        .field("density.rho0.expr", dim)?
        .unwrap_or_else(|| ScalarField::constant(1.0, dim));
    let steps = match over.steps.or(cfg.count("time.steps")?) {
        Some(s) => s,
        None => flow::default_steps(t0, t1),
    };
    let per_axis = over
        .particles
        .or(cfg.count("grid.particles")?)
        .unwrap_or(32);
    let bounds = match cfg.ranges("grid.box")? {
        Some(b) => b,
        None => default_bounds(&model.metric)
            .ok_or_else(|| err("grid.box", "bounded charts need an explicit quadrature box"))?,
    };
    if bounds.len() != dim {
        return Err(err("grid.box", format!("{} ranges for a dimension-{dim} chart", bounds.len())));
    }
    let checks = build_checks(cfg, dim)?;
    let tol = over.tol.unwrap_or(cfg.number_or("tol.ineq", 1e-4)?);
    Ok(ScenarioKind::Transport(TransportScenario {
        model,
        measure,
        f,
        rho0,
        t0,
        t1,
        steps,
        per_axis,
        bounds,
        checks,
        tol,
    }))
}

fn build_sweep(cfg: &Config, over: &Overrides) -> Result<ScenarioKind, ConfigError> {
    let seed = over.seed.unwrap_or(cfg.seed("sweep.seed")?.unwrap_or(42));
    let samples = cfg.count("sweep.samples")?.unwrap_or(50);
    let tol = over.tol.unwrap_or(cfg.number_or("tol.oracle", 1e-3)?);
    Ok(ScenarioKind::OracleSweep(OracleSweepScenario { seed, samples, tol }))
}

fn build_bochner(cfg: &Config, over: &Overrides) -> Result<ScenarioKind, ConfigError> {
    let metric = build_metric(cfg, 0.0, 1.0)?;
    let dim = metric.dim();
    let model = HamiltonianModel::kinetic(metric).map_err(|e| err("metric.kind", e.to_string()))?;
    let f = cfg
        .field("potential.f.expr", dim)?
        .ok_or_else(|| err("potential.f.expr", "bochner scenarios need a function to test"))?;
    let points = cfg
        .points("bochner.points", dim)?
        .ok_or_else(|| err("bochner.points", "bochner scenarios need sample points"))?
        .into_iter()
        .map(DVector::from_vec)
        .collect();
    let tol = over.tol.unwrap_or(cfg.number_or("tol.bochner", 1e-4)?);
    Ok(ScenarioKind::Bochner(BochnerScenario { model, f, points, tol }))
}

fn build_scaling(cfg: &Config, over: &Overrides) -> Result<ScenarioKind, ConfigError> {
    let metric = build_metric(cfg, 0.0, 1.0)?;
    let dim = metric.dim();
    let model = HamiltonianModel::kinetic(metric).map_err(|e| err("metric.kind", e.to_string()))?;
    let x = cfg
        .points("scaling.x", dim)?
        .and_then(|p| p.into_iter().next())
        .ok_or_else(|| err("scaling.x", "scaling scenarios need a base point"))?;
    let p = cfg
        .points("scaling.p", dim)?
        .and_then(|p| p.into_iter().next())
        .ok_or_else(|| err("scaling.p", "scaling scenarios need a momentum"))?;
    let lambda = cfg.number_or("scaling.lambda", 2.0)?;
    let t_span = cfg.number_or("scaling.tspan", 0.4)?;
    let steps = match over.steps.or(cfg.count("time.steps")?) {
        Some(s) => s,
        None => flow::default_steps(0.0, lambda.max(1.0) * t_span),
    };
    let tol_flow = cfg.number_or("tol.flow", 1e-6)?;
    let tol_trace = over.tol.unwrap_or(cfg.number_or("tol.trace", 1e-7)?);
    Ok(ScenarioKind::Scaling(ScalingScenario {
        model,
        x: DVector::from_vec(x),
        p: DVector::from_vec(p),
        lambda,
        t_span,
        steps,
        tol_flow,
        tol_trace,
    }))
}

/// A named preset: one or more scenario configs run as a unit.
pub struct Preset {
    pub name: &'static str,
    pub summary: &'static str,
    /// (scenario name, config text) pairs.
    pub members: Vec<(String, &'static str)>,
}

pub fn presets() -> Vec<Preset> {
    let single = |name: &'static str, summary: &'static str, text: &'static str| Preset {
        name,
        summary,
        members: vec![(name.to_string(), text)],
    };

    let mut out = vec![
        single(
            "flat-e1-quadratic",
            "entropy convexity for a quadratic potential on a flat box",
            "scenario.kind = transport\n\
             metric.kind = flat_box\n\
             metric.box = -2.5:2.5, -2.5:2.5\n\
             hamiltonian.kind = kinetic\n\
             measure.kind = volume\n\
             potential.f.expr = 0.25*(x1^2 + x2^2)\n\
             density.rho0.expr = 1 + 0.1*sin(x1)\n\
             time.t0 = 0\n\
             time.t1 = 1\n\
             time.steps = 192\n\
             grid.particles = 12\n\
             grid.box = -1:1, -1:1\n\
             check.theorem = thm2.2\n\
             check.b.expr = 0\n",
        ),
        single(
            "flat-e1-trig",
            "entropy convexity for a trigonometric potential on the flat torus",
            "scenario.kind = transport\n\
             metric.kind = flat_torus\n\
             metric.dim = 2\n\
             hamiltonian.kind = kinetic\n\
             measure.kind = volume\n\
             potential.f.expr = 0.3*cos(x1) + 0.2*sin(x2)\n\
             density.rho0.expr = 1 + 0.15*cos(x2)\n\
             time.t1 = 0.8\n\
             time.steps = 160\n\
             grid.particles = 12\n\
             check.theorem = thm2.2\n",
        ),
        single(
            "thm2.2-weighted-bconst",
            "weighted-measure entropy inequality with a constant damping b",
            "scenario.kind = transport\n\
             metric.kind = flat_torus\n\
             metric.dim = 2\n\
             hamiltonian.kind = kinetic\n\
             measure.kind = weighted\n\
             measure.U.expr = 0.4*cos(x1)\n\
             potential.f.expr = 0.3*cos(x1) + 0.2*sin(2*x2)\n\
             time.t1 = 0.5\n\
             time.steps = 128\n\
             grid.particles = 12\n\
             check.theorem = thm2.2\n\
             check.b.expr = 0.25\n",
        ),
        single(
            "cor2.6-ricciflow-sphere",
            "scaled-measure convexity on the shrinking round sphere",
            "scenario.kind = transport\n\
             metric.kind = sphere\n\
             metric.radius = 1\n\
             metric.scale.c1.expr = -2\n\
             metric.scale.c2.expr = 0\n\
             metric.scale.s0 = 1\n\
             metric.scale.anchor = 0\n\
             hamiltonian.kind = time_dependent\n\
             hamiltonian.U = ricci_scaled\n\
             measure.kind = hj_weighted\n\
             measure.k.expr = 1\n\
             measure.logsigma.expr = 0\n\
             potential.f.expr = 0.2*sin(x1)*cos(x2)\n\
             time.t1 = 0.2\n\
             time.steps = 96\n\
             grid.particles = 10\n\
             grid.box = 0.6:pi-0.6, -pi:pi\n\
             check.theorem = cor2.4, cor2.9\n\
             check.b.expr = 0\n",
        ),
        single(
            "cor2.7-perelman",
            "backward scaled-entropy monotonicity on the expanding sphere family",
            "scenario.kind = transport\n\
             metric.kind = sphere\n\
             metric.radius = 1\n\
             metric.scale.c1.expr = 2*sqrt(t)\n\
             metric.scale.c2.expr = 1/(2*t)\n\
             metric.scale.s0 = sqrt(2)\n\
             metric.scale.anchor = 0.5\n\
             hamiltonian.kind = time_dependent\n\
             hamiltonian.U = ricci_scaled\n\
             measure.kind = hj_weighted\n\
             measure.k.expr = -t^-0.5\n\
             measure.logsigma.expr = -0.5*ln(t)\n\
             potential.f.expr = 0.2*sin(x1)*cos(x2)\n\
             time.t0 = 0.5\n\
             time.t1 = 1\n\
             time.steps = 128\n\
             grid.particles = 10\n\
             grid.box = 0.6:pi-0.6, -pi:pi\n\
             check.theorem = cor2.7\n",
        ),
        single(
            "cor2.8-forward",
            "forward scaled-entropy monotonicity on the contracting sphere family",
            "scenario.kind = transport\n\
             metric.kind = sphere\n\
             metric.radius = 1\n\
             metric.scale.c1.expr = -2*sqrt(t)\n\
             metric.scale.c2.expr = 1/(2*t)\n\
             metric.scale.s0 = sqrt(2)\n\
             metric.scale.anchor = 0.5\n\
             hamiltonian.kind = time_dependent\n\
             hamiltonian.U = ricci_scaled\n\
             measure.kind = hj_weighted\n\
             measure.k.expr = t^-0.5\n\
             measure.logsigma.expr = -0.5*ln(t)\n\
             potential.f.expr = 0.2*sin(x1)*cos(x2)\n\
             time.t0 = 0.5\n\
             time.t1 = 1\n\
             time.steps = 128\n\
             grid.particles = 10\n\
             grid.box = 0.6:pi-0.6, -pi:pi\n\
             check.theorem = cor2.8\n",
        ),
        single(
            "cor2.11-e7-sphere",
            "Renyi-type functional convexity under the dimension bound on the sphere",
            "scenario.kind = transport\n\
             metric.kind = sphere\n\
             metric.radius = 1\n\
             hamiltonian.kind = kinetic\n\
             measure.kind = volume\n\
             potential.f.expr = 0.2*sin(x1)*cos(x2)\n\
             time.t1 = 0.4\n\
             time.steps = 128\n\
             grid.particles = 12\n\
             grid.box = 0.6:pi-0.6, -pi:pi\n\
             check.theorem = cor2.11\n\
             check.N = 3\n",
        ),
        single(
            "thm2.10-sphere",
            "power-functional inequality on the round sphere",
            "scenario.kind = transport\n\
             metric.kind = sphere\n\
             metric.radius = 1\n\
             hamiltonian.kind = kinetic\n\
             measure.kind = volume\n\
             potential.f.expr = 0.15*cos(x1)\n\
             time.t1 = 0.3\n\
             time.steps = 128\n\
             grid.particles = 12\n\
             grid.box = 0.6:pi-0.6, -pi:pi\n\
             check.theorem = thm2.10\n\
             check.q = 0.5\n",
        ),
        single(
            "cor2.13-e8",
            "power functional with a power-law weight on a scaled sphere family",
            "scenario.kind = transport\n\
             metric.kind = sphere\n\
             metric.radius = 1\n\
             metric.scale.c1.expr = 1/t\n\
             metric.scale.c2.expr = 2/t\n\
             metric.scale.s0 = 0.25\n\
             metric.scale.anchor = 0.5\n\
             hamiltonian.kind = time_dependent\n\
             hamiltonian.U = ricci_scaled\n\
             measure.kind = hj_weighted\n\
             measure.k.expr = -2*t\n\
             measure.logsigma.expr = 0\n\
             potential.f.expr = 0.2*sin(x1)*cos(x2)\n\
             time.t0 = 0.5\n\
             time.t1 = 1\n\
             time.steps = 128\n\
             grid.particles = 10\n\
             grid.box = 0.6:pi-0.6, -pi:pi\n\
             check.theorem = cor2.13\n\
             check.q = 0.5\n\
             check.m = 1\n\
             check.C1 = -2\n\
             check.C2 = 1\n",
        ),
        single(
            "thm2.15-drift-flat",
            "entropy convexity for a drift system on the flat torus",
            "scenario.kind = transport\n\
             metric.kind = flat_torus\n\
             metric.dim = 2\n\
             hamiltonian.kind = drift\n\
             hamiltonian.W.expr = 0.1*sin(x1)\n\
             hamiltonian.U.expr = 0.0025*cos(2*x1)\n\
             measure.kind = volume\n\
             potential.f.expr = 0.2*sin(x2) + 0.1*cos(x1)\n\
             time.t1 = 0.5\n\
             time.steps = 128\n\
             grid.particles = 10\n\
             check.theorem = thm2.15\n",
        ),
        single(
            "bochner-sphere",
            "Bochner-type identity check for the kinetic energy on the sphere",
            "scenario.kind = bochner\n\
             metric.kind = sphere\n\
             metric.radius = 1\n\
             potential.f.expr = 0.3*sin(x1)*cos(x2)\n\
             bochner.points = 0.9:0.7; 1.3:-0.4; 1.9:1.9\n",
        ),
        single(
            "oracle-curvature-sweep",
            "frame-built curvature traces against analytic formulas at random phase points",
            "scenario.kind = oracle_sweep\n\
             sweep.seed = 42\n\
             sweep.samples = 50\n\
             tol.oracle = 1e-3\n",
        ),
    ];

    out.push(Preset {
        name: "cor2.3-sphere",
        summary: "Ricci-lower-bound entropy inequality on the unit sphere, five potentials",
        members: vec![
            (
                "cor2.3-sphere-f1".to_string(),
                "scenario.kind = transport\n\
                 metric.kind = sphere\n\
                 metric.radius = 1\n\
                 hamiltonian.kind = kinetic\n\
                 measure.kind = volume\n\
                 potential.f.expr = 0.15*cos(x1)\n\
                 time.t1 = 0.3\n\
                 time.steps = 128\n\
                 grid.particles = 12\n\
                 grid.box = 0.6:pi-0.6, -pi:pi\n\
                 check.theorem = cor2.3\n\
                 check.K = 1\n",
            ),
            (
                "cor2.3-sphere-f2".to_string(),
                "scenario.kind = transport\n\
                 metric.kind = sphere\n\
                 metric.radius = 1\n\
                 hamiltonian.kind = kinetic\n\
                 measure.kind = volume\n\
                 potential.f.expr = 0.2*sin(x1)*cos(x2)\n\
                 time.t1 = 0.3\n\
                 time.steps = 128\n\
                 grid.particles = 12\n\
                 grid.box = 0.6:pi-0.6, -pi:pi\n\
                 check.theorem = cor2.3\n\
                 check.K = 1\n",
            ),
            (
                "cor2.3-sphere-f3".to_string(),
                "scenario.kind = transport\n\
                 metric.kind = sphere\n\
                 metric.radius = 1\n\
                 hamiltonian.kind = kinetic\n\
                 measure.kind = volume\n\
                 potential.f.expr = 0.18*sin(x1)*sin(x2)\n\
                 time.t1 = 0.3\n\
                 time.steps = 128\n\
                 grid.particles = 12\n\
                 grid.box = 0.6:pi-0.6, -pi:pi\n\
                 check.theorem = cor2.3\n\
                 check.K = 1\n",
            ),
            (
                "cor2.3-sphere-f4".to_string(),
                "scenario.kind = transport\n\
                 metric.kind = sphere\n\
                 metric.radius = 1\n\
                 hamiltonian.kind = kinetic\n\
                 measure.kind = volume\n\
                 potential.f.expr = 0.1*cos(x1) + 0.1*sin(x1)*cos(x2)\n\
                 time.t1 = 0.3\n\
                 time.steps = 128\n\
                 grid.particles = 12\n\
                 grid.box = 0.6:pi-0.6, -pi:pi\n\
                 check.theorem = cor2.3\n\
                 check.K = 1\n",
            ),
            (
                "cor2.3-sphere-f5".to_string(),
                "scenario.kind = transport\n\
                 metric.kind = sphere\n\
                 metric.radius = 1\n\
                 hamiltonian.kind = kinetic\n\
                 measure.kind = volume\n\
                 potential.f.expr = 0.12*cos(x1)^2 + 0.05*sin(x1)*sin(x2)\n\
                 time.t1 = 0.3\n\
                 time.steps = 128\n\
                 grid.particles = 12\n\
                 grid.box = 0.6:pi-0.6, -pi:pi\n\
                 check.theorem = cor2.3\n\
                 check.K = 1\n",
            ),
        ],
    });

    out.push(Preset {
        name: "scaling-lemma7.2",
        summary: "flow reparametrization and fiberwise scaling of the curvature trace",
        members: vec![
            (
                "scaling-lemma7.2-sphere".to_string(),
                "scenario.kind = scaling\n\
                 metric.kind = sphere\n\
                 metric.radius = 1\n\
                 scaling.x = 1.1:0.4\n\
                 scaling.p = 0.3:-0.2\n\
                 scaling.lambda = 2\n\
                 scaling.tspan = 0.4\n",
            ),
            (
                "scaling-lemma7.2-conformal".to_string(),
                "scenario.kind = scaling\n\
                 metric.kind = conformal_torus\n\
                 metric.phi.expr = 0.15*sin(x1) + 0.1*cos(x2)\n\
                 scaling.x = 0.5:0.25\n\
                 scaling.p = 0.4:0.1\n\
                 scaling.lambda = 2\n\
                 scaling.tspan = 0.4\n",
            ),
        ],
    });

    out.push(Preset {
        name: "thm2.10-flat-weighted",
        summary: "power-functional inequality with constant damping profiles on the flat torus",
        members: vec![(
            "thm2.10-flat-weighted".to_string(),
            "scenario.kind = transport\n\
             metric.kind = flat_torus\n\
             metric.dim = 2\n\
             hamiltonian.kind = kinetic\n\
             measure.kind = volume\n\
             potential.f.expr = 0.25*cos(x1) + 0.15*sin(x2)\n\
             time.t1 = 0.5\n\
             time.steps = 128\n\
             grid.particles = 12\n\
             check.theorem = thm2.10\n\
             check.q = 0.5\n\
             check.b1.expr = 0.3\n\
             check.b2.expr = 0.2\n",
        )],
    });

    out.sort_by(|a, b| a.name.cmp(b.name));
    out
}

pub fn find_preset(name: &str) -> Option<Preset> {
    presets().into_iter().find(|p| p.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_is_complete_and_named() {
        let all = presets();
        assert!(all.len() >= 12);
        let required = [
            "flat-e1-quadratic",
            "flat-e1-trig",
            "cor2.3-sphere",
            "cor2.6-ricciflow-sphere",
            "cor2.7-perelman",
            "cor2.8-forward",
            "cor2.11-e7-sphere",
            "cor2.13-e8",
            "thm2.15-drift-flat",
            "bochner-sphere",
            "scaling-lemma7.2",
            "oracle-curvature-sweep",
        ];
        for name in required {
            assert!(all.iter().any(|p| p.name == name), "missing preset {name}");
        }
    }

    #[test]
    fn every_preset_member_builds() {
        for preset in presets() {
            for (name, text) in &preset.members {
                let cfg = Config::parse(text).unwrap();
                from_config(name, &cfg, &Overrides::default())
                    .unwrap_or_else(|e| panic!("{name}: {e}"));
            }
        }
    }

    #[test]
    fn overrides_replace_config_values() {
        let text = find_preset("flat-e1-quadratic").unwrap().members[0].1;
        let cfg = Config::parse(text).unwrap();
        let over = Overrides {
            steps: Some(64),
            particles: Some(6),
            tol: Some(1e-3),
            seed: None,
        };
        let s = from_config("x", &cfg, &over).unwrap();
        match s.kind {
            ScenarioKind::Transport(t) => {
                assert_eq!(t.steps, 64);
                assert_eq!(t.per_axis, 6);
                assert_eq!(t.tol, 1e-3);
            }
            _ => panic!("expected a transport scenario"),
        }
    }

    #[test]
    fn unknown_keys_are_named() {
        let cfg = Config::parse("scenario.kind = oracle_sweep\nsweeep.samples = 3\n").unwrap();
        let e = match from_config("x", &cfg, &Overrides::default()) {
            Err(e) => e,
            Ok(_) => panic!("expected the misspelled key to be rejected"),
        };
        assert_eq!(e.key, "sweeep.samples");
    }
}
