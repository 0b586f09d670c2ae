//! Equations of state and the thermodynamics of a single fluid element.
//!
//! A local state is `φ = (e, ρ, j)`: total energy density, mass density and
//! momentum density. Everything here derives from the rest-frame entropy
//! density `s0(e0, ρ0)` of a concave equation of state. The lab-frame entropy
//! is `s(e, ρ, j) = s0(e - |j|²/2ρ, ρ)` and its gradient is the conjugate point
//! `θ = β (1, -μ + |u|²/2, -u)`.

use nalgebra::{DMatrix, Matrix2, Vector2};
use num_dual::{Dual, Dual64, DualNum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scalar type accepted by generic thermodynamic and flux code.
///
/// `f64` evaluates values; the dual types of `num_dual` propagate derivatives.
pub trait Real: DualNum<Primitive = f64> + Copy {}
impl<T: DualNum<Primitive = f64> + Copy> Real for T {}

/// A concave rest-frame entropy density.
///
/// Implementors supply `entropy_rest` generically so that derivatives of any
/// order can be taken by automatic differentiation.
pub trait EquationOfState: Sync {
    fn entropy_rest<D: Real>(&self, e0: D, rho0: D) -> D;

    /// Inverse temperature and chemical potential at a rest state.
    fn beta_mu<D: Real>(&self, e0: D, rho0: D) -> (D, D) {
        let se = self.entropy_rest(Dual::new(e0, D::one()), Dual::from_re(rho0)).eps;
        let sr = self.entropy_rest(Dual::from_re(e0), Dual::new(rho0, D::one())).eps;
        (se, -sr / se)
    }

    /// Whether `(e0, ρ0)` lies in the domain of `s0`.
    fn in_domain(&self, e0: f64, rho0: f64) -> bool {
        e0 > 0.0 && rho0 > 0.0 && e0.is_finite() && rho0.is_finite()
    }

    /// Starting point for the inversion `(β, μ) -> (e0, ρ0)`.
    fn rest_guess(&self, _beta: f64, _mu: f64) -> (f64, f64) {
        (1.0, 1.0)
    }
}

/// Hessian of `s0` with respect to `(e0, ρ0)`.
pub fn rest_hessian<E: EquationOfState>(eos: &E, e0: f64, rho0: f64) -> Matrix2<f64> {
    let x = [e0, rho0];
    let mut h = Matrix2::zeros();
    for i in 0..2 {
        for j in i..2 {
            let arg = |k: usize| {
                Dual::new(
                    Dual64::new(x[k], if k == j { 1.0 } else { 0.0 }),
                    Dual64::new(if k == i { 1.0 } else { 0.0 }, 0.0),
                )
            };
            let v = eos.entropy_rest(arg(0), arg(1)).eps.eps;
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    h
}

/// Ideal-gas-like entropy `s0 = ρ0 (cv ln(e0/ρ0) - ln ρ0) + s_ref ρ0`.
///
/// Gives `β = cv ρ0 / e0`, `p = e0 / cv` and `ε = e0 (1 + 1/cv)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdealGas {
    pub cv: f64,
    pub s_ref: f64,
}

impl Default for IdealGas {
    fn default() -> Self {
        IdealGas { cv: 1.5, s_ref: 0.0 }
    }
}

impl IdealGas {
    pub fn new(cv: f64, s_ref: f64) -> Result<Self> {
        if !(cv > 0.0 && cv.is_finite() && s_ref.is_finite()) {
            return Err(Error::Invalid(format!("cv must be positive and finite, got {cv}")));
        }
        Ok(IdealGas { cv, s_ref })
    }

    /// Closed-form rest state at given `(β, μ)`.
    pub fn rest_state(&self, beta: f64, mu: f64) -> (f64, f64) {
        let ratio = self.cv / beta;
        let ln_rho = self.cv * ratio.ln() - self.cv - 1.0 + self.s_ref + beta * mu;
        let rho0 = ln_rho.exp();
        (ratio * rho0, rho0)
    }

    /// Chemical potential giving pressure `p` at inverse temperature `β`.
    pub fn mu_for_pressure(&self, beta: f64, p: f64) -> f64 {
        let rho0 = beta * p;
        let e0 = self.cv * p;
        let ds = self.cv * (e0 / rho0).ln() - self.cv - rho0.ln() - 1.0 + self.s_ref;
        -ds / beta
    }
}

impl EquationOfState for IdealGas {
    fn entropy_rest<D: Real>(&self, e0: D, rho0: D) -> D {
        let ln_rho = rho0.ln();
        rho0 * ((e0.ln() - ln_rho) * self.cv - ln_rho + self.s_ref)
    }

    fn beta_mu<D: Real>(&self, e0: D, rho0: D) -> (D, D) {
        let beta = rho0 / e0 * self.cv;
        let ds = (e0 / rho0).ln() * self.cv - rho0.ln() + (self.s_ref - self.cv - 1.0);
        (beta, -ds / beta)
    }

    fn rest_guess(&self, beta: f64, mu: f64) -> (f64, f64) {
        self.rest_state(beta, mu)
    }
}

/// Lab-frame conserved densities at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalState {
    pub e: f64,
    pub rho: f64,
    pub j: Vec<f64>,
}

impl LocalState {
    pub fn new(e: f64, rho: f64, j: &[f64]) -> Self {
        LocalState { e, rho, j: j.to_vec() }
    }

    pub fn dim(&self) -> usize {
        self.j.len()
    }

    /// Packed as `(e, ρ, j_1, .., j_d)`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = vec![self.e, self.rho];
        v.extend_from_slice(&self.j);
        v
    }

    pub fn from_slice(v: &[f64]) -> Self {
        LocalState { e: v[0], rho: v[1], j: v[2..].to_vec() }
    }

    pub fn velocity(&self) -> Vec<f64> {
        self.j.iter().map(|j| j / self.rho).collect()
    }

    /// Internal energy density `e - |j|²/2ρ`.
    pub fn rest_energy(&self) -> f64 {
        self.e - self.j.iter().map(|j| j * j).sum::<f64>() / (2.0 * self.rho)
    }
}

/// A point `θ = (θ1, θ2, θ3)` in conjugate variables, packed like `LocalState`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjugatePoint {
    pub theta: Vec<f64>,
}

impl ConjugatePoint {
    pub fn from_beta_mu_u(beta: f64, mu: f64, u: &[f64]) -> Self {
        let u2: f64 = u.iter().map(|x| x * x).sum();
        let mut theta = vec![beta, beta * (-mu + 0.5 * u2)];
        theta.extend(u.iter().map(|x| -beta * x));
        ConjugatePoint { theta }
    }

    pub fn dim(&self) -> usize {
        self.theta.len() - 2
    }

    /// Recovers `(β, μ, u)`.
    pub fn beta_mu_u(&self) -> (f64, f64, Vec<f64>) {
        let beta = self.theta[0];
        let u: Vec<f64> = self.theta[2..].iter().map(|t| -t / beta).collect();
        let u2: f64 = u.iter().map(|x| x * x).sum();
        let mu = -self.theta[1] / beta + 0.5 * u2;
        (beta, mu, u)
    }
}

fn check_rest<E: EquationOfState>(eos: &E, e0: f64, rho0: f64) -> Result<()> {
    if eos.in_domain(e0, rho0) {
        Ok(())
    } else {
        Err(Error::Domain(format!("e0 = {e0}, rho0 = {rho0}")))
    }
}

/// `s0(e0, ρ0)` with a domain check.
pub fn entropy_rest<E: EquationOfState>(eos: &E, e0: f64, rho0: f64) -> Result<f64> {
    check_rest(eos, e0, rho0)?;
    Ok(eos.entropy_rest(e0, rho0))
}

/// Lab-frame entropy `s(e, ρ, j)` for generic scalars.
pub fn entropy_lab_generic<E: EquationOfState, D: Real>(eos: &E, phi: &[D]) -> D {
    let rho = phi[1];
    let j2 = phi[2..].iter().fold(D::zero(), |acc, &j| acc + j * j);
    eos.entropy_rest(phi[0] - j2 / (rho * 2.0), rho)
}

pub fn entropy_lab<E: EquationOfState>(eos: &E, state: &LocalState) -> Result<f64> {
    check_rest(eos, state.rest_energy(), state.rho)?;
    Ok(entropy_lab_generic(eos, &state.to_vec()))
}

/// `θ = ∂s/∂φ` at a lab-frame state.
pub fn conjugate<E: EquationOfState>(eos: &E, state: &LocalState) -> Result<ConjugatePoint> {
    let e0 = state.rest_energy();
    check_rest(eos, e0, state.rho)?;
    let (beta, mu) = eos.beta_mu(e0, state.rho);
    if !(beta > 0.0) {
        return Err(Error::Domain(format!("non-positive beta {beta}")));
    }
    Ok(ConjugatePoint::from_beta_mu_u(beta, mu, &state.velocity()))
}

/// Thermodynamic record of a rest state, for generic scalars.
#[derive(Debug, Clone, Copy)]
pub struct RestThermo<D> {
    pub e0: D,
    pub rho0: D,
    pub beta: D,
    pub mu: D,
    /// Pressure from the Euler relation `s0 = β (e0 + p - μ ρ0)`.
    pub p: D,
    /// Enthalpy density `e0 + p`.
    pub enthalpy: D,
}

pub fn rest_thermo<E: EquationOfState, D: Real>(eos: &E, e0: D, rho0: D) -> RestThermo<D> {
    let s0 = eos.entropy_rest(e0, rho0);
    let (beta, mu) = eos.beta_mu(e0, rho0);
    let p = s0 / beta - e0 + mu * rho0;
    RestThermo { e0, rho0, beta, mu, p, enthalpy: e0 + p }
}

/// Solves `∂s0/∂e0 = β`, `∂s0/∂ρ0 = -β μ` by damped Newton ascent on the
/// concave function `s0 - β e0 + β μ ρ0`.
pub fn rest_state_from_beta_mu<E: EquationOfState>(eos: &E, beta: f64, mu: f64) -> Result<(f64, f64)> {
    if !(beta > 0.0 && beta.is_finite() && mu.is_finite()) {
        return Err(Error::Domain(format!("beta = {beta}, mu = {mu}")));
    }
    const MAX_ITER: usize = 50;
    const TOL: f64 = 1e-12;
    let target = Vector2::new(beta, -beta * mu);
    let scale = beta.abs() + (beta * mu).abs();
    let objective = |x: &Vector2<f64>| eos.entropy_rest(x[0], x[1]) - target.dot(x);
    let gradient = |x: &Vector2<f64>| {
        let (b, m) = eos.beta_mu(x[0], x[1]);
        Vector2::new(b, -b * m) - target
    };
    let (g0, r0) = eos.rest_guess(beta, mu);
    let mut x = Vector2::new(g0, r0);
    check_rest(eos, x[0], x[1])?;
    let mut residual = f64::INFINITY;
    for _ in 0..MAX_ITER {
        let g = gradient(&x);
        residual = g.norm() / scale;
        if residual <= TOL {
            return Ok((x[0], x[1]));
        }
        let h = rest_hessian(eos, x[0], x[1]);
        let step = match h.try_inverse() {
            Some(hi) => -(hi * g),
            None => return Err(Error::Singular("rest-state inversion")),
        };
        // Fall back to gradient ascent if the Hessian has lost concavity.
        let step = if step.dot(&g) > 0.0 { step } else { g * (1.0 / h.norm().max(1.0)) };
        let mut alpha = 1.0_f64;
        for k in 0..2 {
            let lim = if step[k] < 0.0 { -0.9 * x[k] / step[k] } else { f64::INFINITY };
            alpha = alpha.min(lim);
        }
        let f0 = objective(&x);
        let mut accepted = false;
        for _ in 0..60 {
            let trial = x + step * alpha;
            if eos.in_domain(trial[0], trial[1]) {
                let f1 = objective(&trial);
                // Near the optimum the objective change is below rounding.
                if f1 >= f0 - 1e-14 * f0.abs().max(1.0) {
                    x = trial;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let g = gradient(&x);
    residual = residual.min(g.norm() / scale);
    if residual <= TOL {
        return Ok((x[0], x[1]));
    }
    Err(Error::NonConvergence { what: "conjugate inversion", iterations: MAX_ITER, residual })
}

/// Rest state at generic `(β, μ)`.
///
/// The root is found in `f64`; derivatives are then carried by one linear
/// correction through the implicit function theorem, exact to first order.
pub fn rest_state_generic<E: EquationOfState, D: Real>(eos: &E, beta: D, mu: D) -> Result<(D, D)> {
    let (e0, rho0) = rest_state_from_beta_mu(eos, beta.re(), mu.re())?;
    let h = rest_hessian(eos, e0, rho0);
    let hi = h.try_inverse().ok_or(Error::Singular("rest-state inversion"))?;
    let dg0 = beta - beta.re();
    let dg1 = -(beta * mu) + beta.re() * mu.re();
    let de = dg0 * hi[(0, 0)] + dg1 * hi[(0, 1)];
    let dr = dg0 * hi[(1, 0)] + dg1 * hi[(1, 1)];
    Ok((de + e0, dr + rho0))
}

/// Inverse of `conjugate`.
pub fn invert_conjugate<E: EquationOfState>(eos: &E, theta: &ConjugatePoint) -> Result<LocalState> {
    if theta.theta.len() < 3 {
        return Err(Error::Invalid("conjugate point needs at least 3 entries".into()));
    }
    let (beta, mu, u) = theta.beta_mu_u();
    let (e0, rho0) = rest_state_from_beta_mu(eos, beta, mu)?;
    let u2: f64 = u.iter().map(|x| x * x).sum();
    Ok(LocalState { e: e0 + 0.5 * rho0 * u2, rho: rho0, j: u.iter().map(|x| rho0 * x).collect() })
}

/// Pressure at a conjugate point.
pub fn pressure<E: EquationOfState>(eos: &E, theta: &ConjugatePoint) -> Result<f64> {
    let (beta, mu, _) = theta.beta_mu_u();
    let (e0, rho0) = rest_state_from_beta_mu(eos, beta, mu)?;
    Ok(rest_thermo(eos, e0, rho0).p)
}

/// Legendre transform `π(θ) = sup_φ (s(φ) - θ·φ) = β p`.
pub fn legendre_pi<E: EquationOfState>(eos: &E, theta: &ConjugatePoint) -> Result<f64> {
    let (beta, _, _) = theta.beta_mu_u();
    Ok(beta * pressure(eos, theta)?)
}

/// Hessian `s''(φ)` of the lab-frame entropy.
pub fn hessian_s<E: EquationOfState>(eos: &E, state: &LocalState) -> Result<DMatrix<f64>> {
    check_rest(eos, state.rest_energy(), state.rho)?;
    let x = state.to_vec();
    let n = x.len();
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let arg: Vec<Dual<Dual64>> = (0..n)
                .map(|k| {
                    Dual::new(
                        Dual64::new(x[k], if k == j { 1.0 } else { 0.0 }),
                        Dual64::new(if k == i { 1.0 } else { 0.0 }, 0.0),
                    )
                })
                .collect();
            let v = entropy_lab_generic(eos, &arg).eps.eps;
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    Ok(h)
}

/// `π''(θ) = -s''(φ(θ))⁻¹`, the local equilibrium covariance.
pub fn hessian_pi<E: EquationOfState>(eos: &E, theta: &ConjugatePoint) -> Result<DMatrix<f64>> {
    let state = invert_conjugate(eos, theta)?;
    hessian_pi_at_state(eos, &state)
}

pub fn hessian_pi_at_state<E: EquationOfState>(eos: &E, state: &LocalState) -> Result<DMatrix<f64>> {
    let h = hessian_s(eos, state)?;
    let mut p = h.try_inverse().ok_or(Error::Singular("entropy Hessian"))?;
    p.neg_mut();
    let pt = p.transpose();
    Ok((p + pt) * 0.5)
}
