//! The linear Ornstein-Uhlenbeck process `dξ = L ξ dt + dw` with
//! `E[dw dwᵀ] = Σ dt`, its stationary covariance and sample paths.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::{self, IntegralSolution};

#[derive(Debug, Clone)]
pub struct OuSystem {
    pub grid: Grid,
    pub generator: DMatrix<f64>,
    pub noise: DMatrix<f64>,
}

impl OuSystem {
    pub fn new(grid: Grid, generator: DMatrix<f64>, noise: DMatrix<f64>) -> Result<Self> {
        let m = grid.num_unknowns();
        if generator.shape() != (m, m) || noise.shape() != (m, m) {
            return Err(Error::Invalid(format!(
                "generator {:?} and noise {:?} must both be {m}x{m}",
                generator.shape(),
                noise.shape()
            )));
        }
        Ok(OuSystem { grid, generator, noise })
    }

    pub fn dim(&self) -> usize {
        self.generator.nrows()
    }

    /// Pairing `ξ(F) = h^d Fᵀ ξ` of a test vector with a state.
    pub fn pairing(&self, f: &DVector<f64>, xi: &DVector<f64>) -> f64 {
        self.grid.cell_volume() * f.dot(xi)
    }
}

/// Which routes to the stationary covariance to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Lyapunov,
    Integral,
    Both,
}

#[derive(Debug, Clone)]
pub struct LyapunovSolution {
    pub w: DMatrix<f64>,
    /// `‖L W + W Lᵀ + Σ‖_F / ‖Σ‖_F`.
    pub relative_residual: f64,
}

/// `L W + W Lᵀ + Σ = 0` by complex Schur decomposition.
pub fn stationary_covariance_lyapunov(sys: &OuSystem) -> Result<LyapunovSolution> {
    let w = linalg::solve_lyapunov(&sys.generator, &sys.noise)?;
    let res = linalg::lyapunov_residual(&sys.generator, &w, &sys.noise) / sys.noise.norm().max(f64::MIN_POSITIVE);
    if !res.is_finite() {
        return Err(Error::Unstable("Lyapunov solution is not finite".into()));
    }
    Ok(LyapunovSolution { w, relative_residual: res })
}

/// `W = ∫₀^∞ e^{sL} Σ e^{sLᵀ} ds` by panel quadrature.
pub fn stationary_covariance_integral(sys: &OuSystem, rel_tol: f64) -> Result<IntegralSolution> {
    linalg::stationary_integral(&sys.generator, &sys.noise, rel_tol)
}

/// `e^{tL} v`.
pub fn semigroup_apply(l: &DMatrix<f64>, t: f64, v: &DVector<f64>) -> DVector<f64> {
    linalg::expm(l, t) * v
}

/// Largest real part of the spectrum of `L`.
pub fn spectral_abscissa(l: &DMatrix<f64>) -> f64 {
    l.complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

/// Stationary `E[ξ_t(F) ξ_0(F')] = h^{2d} Fᵀ e^{tL} W F'`.
pub fn time_correlation(sys: &OuSystem, w: &DMatrix<f64>, f: &DVector<f64>, f2: &DVector<f64>, t: f64) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::Invalid(format!("lag must be non-negative, got {t}")));
    }
    let vol = sys.grid.cell_volume();
    let wf = w * f2;
    let g = if t == 0.0 { wf } else { semigroup_apply(&sys.generator, t, &wf) };
    Ok(vol * vol * f.dot(&g))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialCondition {
    /// Start at rest and discard `burn_in_steps` steps.
    Zero { burn_in_steps: usize },
    /// Draw the initial state from `N(0, W)`.
    Stationary,
    /// Start every trajectory at the given state.
    Fixed { state: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub dt: f64,
    pub steps: usize,
    pub record_every: usize,
    pub trajectories: usize,
    pub seed: u64,
    pub initial: InitialCondition,
}

impl SimulationSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if self.record_every == 0 || self.trajectories == 0 {
            return Err(Error::Invalid("record_every and trajectories must be positive".into()));
        }
        Ok(())
    }
}

/// Recorded states: `records[r]` holds one column per trajectory.
#[derive(Debug, Clone)]
pub struct PathEnsemble {
    pub dt: f64,
    pub times: Vec<f64>,
    pub records: Vec<DMatrix<f64>>,
    pub seed: u64,
}

impl PathEnsemble {
    pub fn trajectories(&self) -> usize {
        self.records.first().map_or(0, |r| r.ncols())
    }

    /// `E[ξ ξᵀ]` pooled over trajectories and records from `first` on.
    pub fn second_moment(&self, first: usize) -> DMatrix<f64> {
        let n = self.records[0].nrows();
        let mut c = DMatrix::zeros(n, n);
        let mut count = 0usize;
        for r in &self.records[first..] {
            c.gemm(1.0, r, &r.transpose(), 1.0);
            count += r.ncols();
        }
        c / count.max(1) as f64
    }

    pub fn mean(&self, record: usize) -> DVector<f64> {
        self.records[record].column_mean()
    }
}

const CHUNK: usize = 25;

fn trajectory_rng(seed: u64, trajectory: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trajectory as u64);
    rng
}

/// Semi-implicit Euler-Maruyama `ξ ← (I - dt L)⁻¹ (ξ + √dt B z)` with one
/// random stream per trajectory.
pub fn simulate(sys: &OuSystem, spec: &SimulationSpec, w: Option<&DMatrix<f64>>) -> Result<PathEnsemble> {
    spec.validate()?;
    let n = sys.dim();
    let b = linalg::psd_factor(&sys.noise, 1e-12)?;
    let mut implicit = DMatrix::identity(n, n) - &sys.generator * spec.dt;
    if !implicit.try_inverse_mut() {
        return Err(Error::Singular("implicit Euler step"));
    }
    let a = implicit;
    let g = &a * &b * spec.dt.sqrt();
    let init_factor = match &spec.initial {
        InitialCondition::Stationary => {
            let w = w.ok_or_else(|| Error::Invalid("stationary start needs the stationary covariance".into()))?;
            Some(linalg::psd_factor(w, 1e-10)?)
        }
        InitialCondition::Fixed { state } if state.len() != n => {
            return Err(Error::Invalid(format!("initial state has {} entries, expected {n}", state.len())));
        }
        _ => None,
    };
    let burn = match spec.initial {
        InitialCondition::Zero { burn_in_steps } => burn_in_steps,
        _ => 0,
    };
    let nrec = spec.steps / spec.record_every + 1;
    let chunks: Vec<(usize, usize)> =
        (0..spec.trajectories).step_by(CHUNK).map(|s| (s, (s + CHUNK).min(spec.trajectories))).collect();
    let results: Vec<Result<Vec<DMatrix<f64>>>> = chunks
        .par_iter()
        .map(|&(start, end)| {
            let c = end - start;
            let mut rngs: Vec<ChaCha8Rng> = (start..end).map(|t| trajectory_rng(spec.seed, t)).collect();
            let mut x = DMatrix::zeros(n, c);
            match (&spec.initial, &init_factor) {
                (InitialCondition::Stationary, Some(f)) => {
                    for (col, rng) in rngs.iter_mut().enumerate() {
                        let z = DVector::from_fn(f.ncols(), |_, _| StandardNormal.sample(rng));
                        x.set_column(col, &(f * z));
                    }
                }
                (InitialCondition::Fixed { state }, _) => {
                    let v = DVector::from_column_slice(state);
                    for col in 0..c {
                        x.set_column(col, &v);
                    }
                }
                _ => {}
            }
            let reference =
                x.amax().max(g.amax()).max(f64::MIN_POSITIVE) * ((spec.steps + burn) as f64).sqrt().max(1.0);
            let mut z = DMatrix::zeros(g.ncols(), c);
            let mut next = DMatrix::zeros(n, c);
            let mut recs = Vec::with_capacity(nrec);
            for step in 0..burn + spec.steps + 1 {
                if step >= burn && (step - burn) % spec.record_every == 0 {
                    recs.push(x.clone());
                }
                if step == burn + spec.steps {
                    break;
                }
                for (col, rng) in rngs.iter_mut().enumerate() {
                    for r in 0..g.ncols() {
                        z[(r, col)] = StandardNormal.sample(rng);
                    }
                }
                next.gemm(1.0, &a, &x, 0.0);
                next.gemm(1.0, &g, &z, 1.0);
                std::mem::swap(&mut x, &mut next);
                let m = x.amax();
                if !m.is_finite() || m > 1e6 * reference {
                    return Err(Error::Unstable(format!("state norm grew to {m:e} at step {step}")));
                }
            }
            Ok(recs)
        })
        .collect();
    let mut records: Vec<DMatrix<f64>> = (0..nrec).map(|_| DMatrix::zeros(n, spec.trajectories)).collect();
    for (&(start, end), res) in chunks.iter().zip(results) {
        let recs = res?;
        for (r, m) in recs.into_iter().enumerate() {
            records[r].view_mut((0, start), (n, end - start)).copy_from(&m);
        }
    }
    let times = (0..nrec).map(|r| (r * spec.record_every) as f64 * spec.dt).collect();
    Ok(PathEnsemble { dt: spec.dt, times, records, seed: spec.seed })
}

/// Relative Frobenius distance `‖A - B‖ / ‖B‖`.
pub fn relative_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianCheck {
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub skewness_se: f64,
    pub kurtosis_se: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AutocorrelationCheck {
    pub lag: f64,
    pub empirical: f64,
    pub model: f64,
    pub standard_error: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartialCorrelationCheck {
    pub correlation: f64,
    pub standard_error: f64,
    pub samples: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovReport {
    pub gaussian: Vec<GaussianCheck>,
    pub autocorrelation: Vec<AutocorrelationCheck>,
    pub partial_correlation: Vec<PartialCorrelationCheck>,
    pub passed: bool,
}

/// Settings for `markov_gaussian_checks`.
#[derive(Debug, Clone)]
pub struct MarkovCheckSpec {
    pub probes: Vec<DVector<f64>>,
    /// Lag, in records, for the autocorrelation and partial correlation.
    pub lag_records: usize,
    /// Spacing, in records, between samples.
    pub sample_stride: usize,
    /// Acceptance band in standard errors.
    pub sigmas: f64,
}

/// Mean of `v` and its standard error from the spread of per-trajectory
/// means. Sample `i` belongs to trajectory `i % ntraj`; samples along one
/// trajectory may be correlated, trajectories are independent.
fn trajectory_mean(v: &[f64], ntraj: usize) -> (f64, f64) {
    let mut sums = vec![0.0; ntraj];
    let mut counts = vec![0usize; ntraj];
    for (i, x) in v.iter().enumerate() {
        sums[i % ntraj] += x;
        counts[i % ntraj] += 1;
    }
    let means: Vec<f64> = sums.iter().zip(&counts).map(|(s, &c)| s / c as f64).collect();
    let k = ntraj as f64;
    let mean = means.iter().sum::<f64>() / k;
    let var = means.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

fn standardized(x: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let sd = (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
    x.iter().map(|v| (v - mean) / sd).collect()
}

/// Gaussianity of linear functionals, stationary autocorrelation against
/// `Fᵀ e^{tL} W F`, and a Markov test: the innovation of `ξ_{t+2Δ}(F)` after
/// regression on the full state `ξ_{t+Δ}` must be uncorrelated with `ξ_t(F)`.
/// Standard errors come from the spread across trajectories.
pub fn markov_gaussian_checks(
    ens: &PathEnsemble,
    sys: Option<(&OuSystem, &DMatrix<f64>)>,
    spec: &MarkovCheckSpec,
) -> Result<MarkovReport> {
    let nrec = ens.records.len();
    let stride = spec.sample_stride.max(1);
    let lag = spec.lag_records;
    if lag == 0 || 2 * lag >= nrec {
        return Err(Error::Invalid(format!("lag of {lag} records needs more than {nrec} records")));
    }
    let vol = sys.map_or(1.0, |(s, _)| s.grid.cell_volume());
    let proj = |f: &DVector<f64>, r: usize, col: usize| vol * f.dot(&ens.records[r].column(col));
    let starts: Vec<usize> = (0..nrec - 2 * lag).step_by(stride).collect();
    let ntraj = ens.trajectories();
    if ntraj < 2 {
        return Err(Error::Invalid("the checks need at least two trajectories".into()));
    }
    let mut gaussian = Vec::new();
    let mut autocorrelation = Vec::new();
    let mut partial_correlation = Vec::new();
    for f in &spec.probes {
        let xs: Vec<f64> =
            starts.iter().flat_map(|&r| (0..ntraj).map(move |c| (r, c))).map(|(r, c)| proj(f, r, c)).collect();
        let z = standardized(&xs);
        let (skew, sse) = trajectory_mean(&z.iter().map(|v| v * v * v).collect::<Vec<_>>(), ntraj);
        let (kurt, kse) = trajectory_mean(&z.iter().map(|v| v.powi(4) - 3.0).collect::<Vec<_>>(), ntraj);
        gaussian.push(GaussianCheck {
            skewness: skew,
            excess_kurtosis: kurt,
            skewness_se: sse,
            kurtosis_se: kse,
            passed: skew.abs() <= spec.sigmas * sse && kurt.abs() <= spec.sigmas * kse,
        });

        if let Some((s, w)) = sys {
            let tau = ens.times[lag] - ens.times[0];
            let model = time_correlation(s, w, f, f, tau)?;
            let prods: Vec<f64> = starts
                .iter()
                .flat_map(|&r| (0..ntraj).map(move |c| (r, c)))
                .map(|(r, c)| proj(f, r, c) * proj(f, r + lag, c))
                .collect();
            let (emp, se) = trajectory_mean(&prods, ntraj);
            autocorrelation.push(AutocorrelationCheck {
                lag: tau,
                empirical: emp,
                model,
                standard_error: se,
                passed: (emp - model).abs() <= spec.sigmas * se,
            });
        }

        // Innovation after regressing on the full intermediate state.
        let dim = ens.records[0].nrows();
        let samples: Vec<(usize, usize)> = starts.iter().flat_map(|&r| (0..ntraj).map(move |c| (r, c))).collect();
        let m = samples.len();
        if m <= dim + 10 {
            return Err(Error::Invalid(format!("{m} samples are too few to regress on {dim} variables")));
        }
        let mut x = DMatrix::zeros(m, dim);
        let mut y = DVector::zeros(m);
        let mut past = DVector::zeros(m);
        for (i, &(r, c)) in samples.iter().enumerate() {
            x.set_row(i, &ens.records[r + lag].column(c).transpose());
            y[i] = proj(f, r + 2 * lag, c);
            past[i] = proj(f, r, c);
        }
        let coef = x.clone().svd(true, true).solve(&y, 1e-12).map_err(|e| Error::Invalid(e.to_string()))?;
        let resid = &y - &x * coef;
        let corr = correlation(resid.as_slice(), past.as_slice());
        let prods: Vec<f64> =
            standardized(resid.as_slice()).iter().zip(standardized(past.as_slice())).map(|(a, b)| a * b).collect();
        let se = trajectory_mean(&prods, ntraj).1.max(1.0 / ((m - dim) as f64).sqrt());
        partial_correlation.push(PartialCorrelationCheck {
            correlation: corr,
            standard_error: se,
            samples: m,
            passed: corr.abs() <= spec.sigmas * se,
        });
    }
    let passed = gaussian.iter().all(|g| g.passed)
        && autocorrelation.iter().all(|a| a.passed)
        && partial_correlation.iter().all(|p| p.passed);
    Ok(MarkovReport { gaussian, autocorrelation, partial_correlation, passed })
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// Ensemble mean of `ξ_t(F)` from a fixed start against `F·e^{tL}v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionCheck {
    pub time: f64,
    pub empirical: f64,
    pub model: f64,
    pub standard_error: f64,
    pub passed: bool,
}

pub fn regression_check(
    ens: &PathEnsemble,
    sys: &OuSystem,
    start: &DVector<f64>,
    probe: &DVector<f64>,
    record: usize,
    sigmas: f64,
) -> Result<RegressionCheck> {
    if record >= ens.records.len() {
        return Err(Error::Invalid(format!("record {record} out of range")));
    }
    let t = ens.times[record];
    let model = sys.pairing(probe, &semigroup_apply(&sys.generator, t, start));
    let vals: Vec<f64> =
        (0..ens.trajectories()).map(|c| sys.pairing(probe, &ens.records[record].column(c).into_owned())).collect();
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    Ok(RegressionCheck {
        time: t,
        empirical: mean,
        model,
        standard_error: se,
        passed: (mean - model).abs() <= sigmas * se,
    })
}
