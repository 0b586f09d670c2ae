//! Versioned run configuration.

use serde::{Deserialize, Serialize};

use hydrofluct::discretization::{BoundarySpec, Discretization, Wall};
use hydrofluct::eos::IdealGas;
use hydrofluct::grid::Grid;
use hydrofluct::ns_model::PowerLaw;
use hydrofluct::process::{InitialCondition, Route};
use hydrofluct::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub schema_version: u32,
    pub grid: GridConfig,
    #[serde(default)]
    pub eos: EosConfig,
    pub transport: PowerLaw,
    #[serde(default)]
    pub discretization: DiscretizationConfig,
    pub walls: Vec<WallConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub process: ProcessConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EosConfig {
    pub cv: f64,
    pub s_ref: f64,
}

impl Default for EosConfig {
    fn default() -> Self {
        let g = IdealGas::default();
        EosConfig { cv: g.cv, s_ref: g.s_ref }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscretizationConfig {
    /// Strength `λ` of the grid-scale pressure-driven fluxes; zero gives the bare scheme.
    #[serde(default)]
    pub pressure_regularization: f64,
}

/// A wall: a reservoir given by `(β, μ)` or `(β, p)`, or an insulated wall.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WallConfig {
    Reservoir {
        beta: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mu: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pressure: Option<f64>,
    },
    Insulated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub steady_tol: f64,
    pub steady_max_iter: usize,
    pub integral_tol: f64,
    pub route: Route,
    pub route_tol: f64,
    pub lyapunov_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            steady_tol: 1e-10,
            steady_max_iter: 50,
            integral_tol: 1e-10,
            route: Route::Lyapunov,
            route_tol: 1e-6,
            lyapunov_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartConfig {
    Stationary,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProcessConfig {
    /// Time step as a fraction of the inverse spectral radius.
    pub dt_factor: f64,
    pub steps: usize,
    pub record_every: usize,
    pub trajectories: usize,
    pub seed: u64,
    pub start: StartConfig,
    /// Burn-in for a zero start, in units of the slowest relaxation time.
    pub burn_in_relaxations: f64,
    pub markov_lag: usize,
    pub markov_stride: usize,
}

impl Default for ProcessConfig {
    fn default() -> Self {
        ProcessConfig {
            dt_factor: 0.1,
            steps: 20000,
            record_every: 100,
            trajectories: 200,
            seed: 1,
            start: StartConfig::Stationary,
            burn_in_relaxations: 5.0,
            markov_lag: 10,
            markov_stride: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Bump support radius in grid spacings.
    pub bump_width: f64,
    pub max_centers_per_axis: usize,
    /// Probes used in the Gaussian and Markov checks.
    pub probes: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig { bump_width: hydrofluct::analysis::DEFAULT_WIDTH_NODES, max_centers_per_axis: 64, probes: 4 }
    }
}

pub type Model = Discretization<IdealGas, PowerLaw>;

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Invalid(format!("config: {}", e.message())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Invalid(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        Grid::new(self.grid.dim, self.grid.n)?;
        IdealGas::new(self.eos.cv, self.eos.s_ref)?;
        self.transport.validate(self.grid.dim)?;
        for w in &self.walls {
            if let WallConfig::Reservoir { mu, pressure, .. } = w {
                if mu.is_some() == pressure.is_some() {
                    return Err(Error::Invalid("a reservoir needs exactly one of mu and pressure".into()));
                }
                if let Some(p) = pressure {
                    if !(*p > 0.0) {
                        return Err(Error::Invalid(format!("reservoir pressure must be positive, got {p}")));
                    }
                }
            }
        }
        let d = &self.discretization;
        if !(d.pressure_regularization >= 0.0 && d.pressure_regularization.is_finite()) {
            return Err(Error::Invalid("pressure_regularization must be non-negative".into()));
        }
        let s = &self.solver;
        if !(s.steady_tol > 0.0 && s.integral_tol > 0.0 && s.route_tol > 0.0 && s.lyapunov_tol > 0.0) {
            return Err(Error::Invalid("solver tolerances must be positive".into()));
        }
        let p = &self.process;
        if !(p.dt_factor > 0.0 && p.dt_factor < 1.0) {
            return Err(Error::Invalid(format!("dt_factor must lie in (0, 1), got {}", p.dt_factor)));
        }
        if p.record_every == 0 || p.trajectories == 0 || p.markov_lag == 0 || p.markov_stride == 0 {
            return Err(Error::Invalid(
                "record_every, trajectories, markov_lag and markov_stride must be positive".into(),
            ));
        }
        if !(self.analysis.bump_width > 0.0) {
            return Err(Error::Invalid("bump_width must be positive".into()));
        }
        self.boundary()?.validate(self.grid.dim)
    }

    pub fn eos(&self) -> IdealGas {
        IdealGas { cv: self.eos.cv, s_ref: self.eos.s_ref }
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid.dim, self.grid.n)
    }

    pub fn boundary(&self) -> Result<BoundarySpec> {
        let eos = self.eos();
        let walls = self
            .walls
            .iter()
            .map(|w| match *w {
                WallConfig::Reservoir { beta, mu: Some(mu), .. } => Wall::Reservoir { beta, mu },
                WallConfig::Reservoir { beta, pressure: Some(p), .. } => {
                    Wall::Reservoir { beta, mu: eos.mu_for_pressure(beta, p) }
                }
                WallConfig::Reservoir { .. } => Wall::Insulated,
                WallConfig::Insulated => Wall::Insulated,
            })
            .collect();
        Ok(BoundarySpec { walls })
    }

    pub fn model(&self) -> Result<Model> {
        Discretization::new(self.eos(), self.transport, self.grid()?, self.boundary()?)?
            .with_pressure_regularization(self.discretization.pressure_regularization)
    }

    pub fn initial_condition(&self, abscissa: f64, dt: f64) -> Result<InitialCondition> {
        match self.process.start {
            StartConfig::Stationary => Ok(InitialCondition::Stationary),
            StartConfig::Zero => {
                let steps = self.process.burn_in_relaxations / abscissa.abs() / dt;
                if !(steps.is_finite() && steps < 1e9) {
                    return Err(Error::Invalid(format!(
                        "burn-in of {steps:e} steps is impractical; use a stationary start"
                    )));
                }
                Ok(InitialCondition::Zero { burn_in_steps: steps.ceil() as usize })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
schema_version = 1
[grid]
dim = 1
n = 8
[transport]
kappa0 = 1.0
kappa_exponent = 0.0
gamma1 = 0.0
gamma2 = 1.0
[[walls]]
kind = "reservoir"
beta = 1.0
pressure = 1.0
[[walls]]
kind = "reservoir"
beta = 1.1
mu = -0.5
"#;

    #[test]
    fn parses_minimal_config() {
        let c = Config::parse(BASE).unwrap();
        assert_eq!(c.grid.n, 8);
        assert_eq!(c.solver, SolverConfig::default());
        let b = c.boundary().unwrap();
        assert_eq!(b.walls[1], Wall::Reservoir { beta: 1.1, mu: -0.5 });
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = BASE.replace("n = 8", "n = 8\nsize = 3");
        assert!(Config::parse(&text).is_err());
    }

    #[test]
    fn wrong_schema_is_rejected() {
        let text = BASE.replace("schema_version = 1", "schema_version = 2");
        assert!(Config::parse(&text).is_err());
    }

    #[test]
    fn reservoir_needs_one_of_mu_and_pressure() {
        let text = BASE.replace("mu = -0.5", "mu = -0.5\npressure = 2.0");
        assert!(Config::parse(&text).is_err());
    }
}
