//! Pipeline stages. Each stage reads the configuration and the files written
//! by earlier stages, and writes its own outputs.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use hydrofluct::analysis::{self, FdtResidualMap, LongRangeConditions};
use hydrofluct::discretization::{dissipativity_check, DissipativityReport};
use hydrofluct::grid::Grid;
use hydrofluct::matrix_io;
use hydrofluct::noise::noise_matrix;
use hydrofluct::process::{
    self, markov_gaussian_checks, relative_frobenius, simulate, MarkovCheckSpec, MarkovReport, OuSystem, Route,
    SimulationSpec,
};
use hydrofluct::{Error, Result};

use crate::artifacts::{component_names, num, Gate, OutDir, StageRecord, Table};
use crate::config::{Config, Model};

pub const STEADY_STATE: &str = "steady_state";
pub const GENERATOR: &str = "generator";
pub const NOISE: &str = "noise";
pub const LOCAL_COVARIANCE: &str = "local_covariance";
pub const COVARIANCE: &str = "covariance";
pub const COVARIANCE_INTEGRAL: &str = "covariance_integral";
pub const ENSEMBLE_COVARIANCE: &str = "ensemble_covariance";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SteadySummary {
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub u_max: f64,
    pub dissipativity: DissipativityReport,
    pub conditions: LongRangeConditions,
}

fn write_vector(out: &mut OutDir, name: &str, grid: &Grid, v: &[f64]) -> Result<()> {
    let m = DMatrix::from_column_slice(v.len(), 1, v);
    out.write(name, &matrix_io::encode_binary(&m, matrix_io::node_major_tag(grid)))
}

fn read_vector(out: &OutDir, name: &str, grid: &Grid) -> Result<Vec<f64>> {
    let path = out.path(name);
    let bytes = std::fs::read(&path)
        .map_err(|_| Error::Invalid(format!("{} not found; run the steady stage first", path.display())))?;
    let (m, tag) = matrix_io::decode_binary(&bytes)?;
    if tag != matrix_io::node_major_tag(grid) || m.shape() != (grid.num_unknowns(), 1) {
        return Err(Error::Invalid(format!("{} does not match the configured grid", path.display())));
    }
    Ok(m.iter().copied().collect())
}

fn steady_table(model: &Model, phi: &[f64]) -> Result<Table> {
    let grid = model.grid;
    let d = grid.dim;
    let vol = if d == 1 { "L" } else { "L^2" };
    let mut spec: Vec<(String, String)> = vec![("node".into(), "-".into()), ("x".into(), "L".into())];
    if d == 2 {
        spec.push(("y".into(), "L".into()));
    }
    spec.push(("boundary".into(), "-".into()));
    spec.push(("beta".into(), "1/E".into()));
    spec.push(("mu".into(), "E/M".into()));
    for a in ["u_x", "u_y"].iter().take(d) {
        spec.push((a.to_string(), "L/T".into()));
    }
    spec.push(("rho".into(), format!("M/{vol}")));
    spec.push(("p".into(), format!("E/{vol}")));
    let mut t = Table {
        columns: spec.iter().map(|s| s.0.clone()).collect(),
        units: spec.iter().map(|s| s.1.clone()).collect(),
        rows: Vec::new(),
    };
    for (node, v) in model.node_table(phi)?.iter().enumerate() {
        let x = grid.position(node);
        let mut row = vec![node.to_string(), num(x[0])];
        if d == 2 {
            row.push(num(x[1]));
        }
        row.push(u8::from(grid.is_boundary(node)).to_string());
        row.push(num(v.beta));
        row.push(num(v.mu));
        for k in 0..d {
            row.push(num(v.u[k]));
        }
        row.push(num(v.rho));
        row.push(num(v.p));
        t.push(row);
    }
    Ok(t)
}

pub fn steady(cfg: &Config, out: &mut OutDir) -> Result<StageRecord> {
    let model = cfg.model()?;
    let grid = model.grid;
    let st = model.steady_state(cfg.solver.steady_tol, cfg.solver.steady_max_iter)?;
    let l = model.linearize(&st.phi)?;
    let sigma = noise_matrix(&model, &st.phi)?.sigma;
    let local = model.local_covariance_matrix(&st.phi)?;
    let diss = dissipativity_check(&l);
    let conditions = analysis::long_range_conditions(&model, &st)?;

    out.write_table("steady_state.csv", &steady_table(&model, &st.phi)?)?;
    write_vector(out, &format!("{STEADY_STATE}.bin"), &grid, &st.phi)?;
    out.write_matrix(GENERATOR, &grid, &l)?;
    out.write_matrix(NOISE, &grid, &sigma)?;
    out.write_matrix(LOCAL_COVARIANCE, &grid, &local)?;
    let summary = SteadySummary {
        iterations: st.residual_history.len() - 1,
        residual_history: st.residual_history.clone(),
        u_max: st.max_speed(),
        dissipativity: diss,
        conditions,
    };
    out.write_json("steady.json", &summary)?;
    let mut p = Table::new(&[("quantity", "-"), ("value", "-"), ("flag", "-")]);
    p.push(vec!["u_max".into(), num(conditions.u_max), "".into()]);
    p.push(vec!["condition_residual".into(), num(conditions.condition_residual), "".into()]);
    p.push(vec!["predicted_long_range".into(), "".into(), conditions.predicted_long_range.to_string()]);
    out.write_table("long_range_conditions.csv", &p)?;
    out.gate(Gate::at_most("steady_residual", st.residual(), cfg.solver.steady_tol));
    out.gate(Gate {
        name: "dissipativity".into(),
        value: diss.spectral_abscissa,
        threshold: -1e-10 * diss.spectral_radius.max(1.0),
        passed: diss.passed,
    });
    Ok(out.finish_stage(Vec::new()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CovarianceSummary {
    pub route: Route,
    pub lyapunov_relative_residual: Option<f64>,
    pub integral_quadrature_error: Option<f64>,
    pub integral_truncation_error: Option<f64>,
    pub integral_horizon: Option<f64>,
    pub route_difference: Option<f64>,
    pub min_eigenvalue_relative: f64,
}

fn load_system(cfg: &Config, out: &OutDir) -> Result<OuSystem> {
    let grid = cfg.grid()?;
    let l = out.read_matrix(GENERATOR, &grid)?;
    let sigma = out.read_matrix(NOISE, &grid)?;
    OuSystem::new(grid, l, sigma)
}

pub fn covariance(cfg: &Config, out: &mut OutDir, route: Route) -> Result<StageRecord> {
    let sys = load_system(cfg, out)?;
    let grid = sys.grid;
    let lyap = match route {
        Route::Lyapunov | Route::Both => Some(process::stationary_covariance_lyapunov(&sys)?),
        Route::Integral => None,
    };
    let integral = match route {
        Route::Integral | Route::Both => Some(process::stationary_covariance_integral(&sys, cfg.solver.integral_tol)?),
        Route::Lyapunov => None,
    };
    let w = match (&lyap, &integral) {
        (Some(l), _) => l.w.clone(),
        (None, Some(i)) => i.x.clone(),
        (None, None) => unreachable!("at least one route runs"),
    };
    let diff = match (&lyap, &integral) {
        (Some(l), Some(i)) => Some(relative_frobenius(&i.x, &l.w)),
        _ => None,
    };
    let min_eig = w.clone().symmetric_eigen().eigenvalues.min() / w.norm();
    out.write_matrix(COVARIANCE, &grid, &w)?;
    if let (Some(_), Some(i)) = (&lyap, &integral) {
        out.write_matrix(COVARIANCE_INTEGRAL, &grid, &i.x)?;
    }
    let summary = CovarianceSummary {
        route,
        lyapunov_relative_residual: lyap.as_ref().map(|l| l.relative_residual),
        integral_quadrature_error: integral.as_ref().map(|i| i.quadrature_error),
        integral_truncation_error: integral.as_ref().map(|i| i.truncation_error),
        integral_horizon: integral.as_ref().map(|i| i.horizon),
        route_difference: diff,
        min_eigenvalue_relative: min_eig,
    };
    out.write_json("covariance.json", &summary)?;
    if let Some(l) = &lyap {
        out.gate(Gate::at_most("lyapunov_residual", l.relative_residual, cfg.solver.lyapunov_tol));
    }
    if let Some(d) = diff {
        out.gate(Gate::at_most("route_agreement", d, cfg.solver.route_tol));
    }
    out.gate(Gate { name: "covariance_psd".into(), value: min_eig, threshold: -1e-10, passed: min_eig >= -1e-10 });
    Ok(out.finish_stage(Vec::new()))
}

/// Bump probes on the energy component at evenly spaced centres.
fn probes(cfg: &Config, grid: &Grid) -> Vec<DVector<f64>> {
    let width = cfg.analysis.bump_width * grid.h();
    let centers = analysis::bump_centers(grid, width, cfg.analysis.probes.max(1));
    centers
        .iter()
        .take(cfg.analysis.probes)
        .map(|&c| {
            let b = analysis::bump(grid, c, width, 0);
            let mut v = DVector::zeros(grid.num_unknowns());
            for (i, x) in b.entries {
                v[i] = x;
            }
            v
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub dt: f64,
    pub steps: usize,
    pub record_every: usize,
    pub trajectories: usize,
    pub seed: u64,
    pub covariance_relative_error: f64,
    pub markov: MarkovReport,
}

pub fn simulate_stage(cfg: &Config, out: &mut OutDir, seed: u64) -> Result<StageRecord> {
    let sys = load_system(cfg, out)?;
    let grid = sys.grid;
    let w = out.read_matrix(COVARIANCE, &grid)?;
    let diss = dissipativity_check(&sys.generator);
    if !diss.passed {
        return Err(Error::NotDissipative { abscissa: diss.spectral_abscissa });
    }
    let p = &cfg.process;
    let dt = p.dt_factor / diss.spectral_radius;
    let spec = SimulationSpec {
        dt,
        steps: p.steps,
        record_every: p.record_every,
        trajectories: p.trajectories,
        seed,
        initial: cfg.initial_condition(diss.spectral_abscissa, dt)?,
    };
    let ens = simulate(&sys, &spec, Some(&w))?;
    let c = ens.second_moment(0);
    let err = relative_frobenius(&c, &w);
    let check = MarkovCheckSpec {
        probes: probes(cfg, &grid),
        lag_records: p.markov_lag,
        sample_stride: p.markov_stride,
        sigmas: 3.0,
    };
    let markov = markov_gaussian_checks(&ens, Some((&sys, &w)), &check)?;
    out.write_matrix(ENSEMBLE_COVARIANCE, &grid, &c)?;

    let mut t = Table::new(&[
        ("probe", "-"),
        ("skewness", "1"),
        ("excess_kurtosis", "1"),
        ("lag", "T"),
        ("autocorrelation", "(E L)^2"),
        ("autocorrelation_model", "(E L)^2"),
        ("autocorrelation_se", "(E L)^2"),
        ("partial_correlation", "1"),
        ("partial_correlation_se", "1"),
        ("passed", "-"),
    ]);
    for (k, g) in markov.gaussian.iter().enumerate() {
        let a = markov.autocorrelation[k];
        let pc = markov.partial_correlation[k];
        t.push(vec![
            k.to_string(),
            num(g.skewness),
            num(g.excess_kurtosis),
            num(a.lag),
            num(a.empirical),
            num(a.model),
            num(a.standard_error),
            num(pc.correlation),
            num(pc.standard_error),
            (g.passed && a.passed && pc.passed).to_string(),
        ]);
    }
    out.write_table("markov_checks.csv", &t)?;
    let mut s = Table::new(&[("quantity", "-"), ("value", "-")]);
    s.push(vec!["dt".into(), num(dt)]);
    s.push(vec!["steps".into(), p.steps.to_string()]);
    s.push(vec!["trajectories".into(), p.trajectories.to_string()]);
    s.push(vec!["seed".into(), seed.to_string()]);
    s.push(vec!["covariance_relative_error".into(), num(err)]);
    out.write_table("simulation.csv", &s)?;
    out.write_json(
        "simulation.json",
        &SimulationSummary {
            dt,
            steps: p.steps,
            record_every: p.record_every,
            trajectories: p.trajectories,
            seed,
            covariance_relative_error: err,
            markov,
        },
    )?;
    Ok(out.finish_stage(vec![seed]))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisSummary {
    pub bump_width: f64,
    pub max_separated_residual: f64,
    pub max_coincident_residual: f64,
    pub long_range_score: f64,
    pub conditions: LongRangeConditions,
}

fn fdt_table(grid: &Grid, map: &FdtResidualMap) -> Table {
    let names = component_names(grid.dim);
    let mut t = Table::new(&[
        ("center_a", "-"),
        ("center_b", "-"),
        ("component_a", "-"),
        ("component_b", "-"),
        ("separation", "L"),
        ("covariance", "mixed"),
        ("local_prediction", "mixed"),
        ("normalized_residual", "1"),
    ]);
    for e in &map.entries {
        t.push(vec![
            e.center_a.to_string(),
            e.center_b.to_string(),
            names[e.component_a].into(),
            names[e.component_b].into(),
            num(e.separation),
            num(e.covariance),
            num(e.local),
            num(e.residual),
        ]);
    }
    t
}

pub fn analyze(cfg: &Config, out: &mut OutDir) -> Result<StageRecord> {
    let model = cfg.model()?;
    let grid = model.grid;
    let phi = read_vector(out, &format!("{STEADY_STATE}.bin"), &grid)?;
    let summary: SteadySummary = out.read_json("steady.json")?;
    let st = model.state_from_phi(phi, summary.residual_history)?;
    let w = out.read_matrix(COVARIANCE, &grid)?;
    let local = model.local_covariances(&st.phi)?;
    let width = cfg.analysis.bump_width * grid.h();
    let map = analysis::fdt_residual(&grid, &w, &local, width, cfg.analysis.max_centers_per_axis)?;
    let score = analysis::score_from_map(&map);
    let mut conditions = analysis::long_range_conditions(&model, &st)?;
    conditions.long_range_score = Some(score);

    out.write_table("fdt_residual.csv", &fdt_table(&grid, &map))?;
    let names = component_names(grid.dim);
    let mut t = Table::new(&[
        ("component_a", "-"),
        ("component_b", "-"),
        ("separation", "L"),
        ("correlation", "1"),
        ("max_abs", "1"),
        ("local_prediction", "1"),
        ("pairs", "-"),
    ]);
    for c in 0..grid.ncomp() {
        let profile =
            analysis::long_range_profile(&grid, &w, &local, width, (c, c), cfg.analysis.max_centers_per_axis)?;
        for pt in profile {
            t.push(vec![
                names[c].into(),
                names[c].into(),
                num(pt.separation),
                num(pt.correlation),
                num(pt.max_abs),
                num(pt.local_prediction),
                pt.pairs.to_string(),
            ]);
        }
    }
    out.write_table("long_range_profile.csv", &t)?;
    out.write_json(
        "analysis.json",
        &AnalysisSummary {
            bump_width: width,
            max_separated_residual: map.max_separated,
            max_coincident_residual: map.max_coincident,
            long_range_score: score,
            conditions,
        },
    )?;
    if model.boundary.is_equilibrium() {
        out.gate(Gate::below("equilibrium_fdt_residual", map.max_separated, 1e-6));
    }
    Ok(out.finish_stage(Vec::new()))
}
