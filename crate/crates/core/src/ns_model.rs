//! Transport coefficients and the constitutive fluxes of the compressible
//! Navier-Stokes-Fourier system written in conjugate variables.
//!
//! Balance laws read `∂t φ = -∇·χ` with `χ = (q, j, τ)`:
//!
//! * `q = (ε + ½ρ|u|²) u - σ·u + κ ∇β`
//! * `τ = p I + ρ u⊗u - σ`
//! * `σ = γ1 (∇u + ∇uᵀ - (2/d) ∇·u I) + γ2 ∇·u I`
//!
//! where `ε = e0 + p` is the enthalpy density.

use serde::{Deserialize, Serialize};

use crate::eos::{rest_state_generic, rest_thermo, EquationOfState, Real};
use crate::error::{Error, Result};

/// Transport coefficients as functions of `(β, μ)`.
pub trait Transport: Sync {
    fn kappa<D: Real>(&self, beta: D, mu: D) -> D;
    fn gamma1<D: Real>(&self, beta: D, mu: D) -> D;
    fn gamma2<D: Real>(&self, beta: D, mu: D) -> D;

    /// `(∂κ/∂β, ∂κ/∂μ)`, by central differences unless overridden.
    fn kappa_partials(&self, beta: f64, mu: f64) -> (f64, f64) {
        let h = 1e-6;
        let kb = (self.kappa(beta + h, mu) - self.kappa(beta - h, mu)) / (2.0 * h);
        let km = (self.kappa(beta, mu + h) - self.kappa(beta, mu - h)) / (2.0 * h);
        (kb, km)
    }
}

/// `κ = κ0 β^a`, constant viscosities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLaw {
    pub kappa0: f64,
    pub kappa_exponent: f64,
    pub gamma1: f64,
    pub gamma2: f64,
}

impl PowerLaw {
    pub fn constant(kappa: f64, gamma1: f64, gamma2: f64) -> Self {
        PowerLaw { kappa0: kappa, kappa_exponent: 0.0, gamma1, gamma2 }
    }

    /// Checks positivity of the coefficients; `γ1` may vanish in one dimension
    /// where it does not enter the stress.
    pub fn validate(&self, dim: usize) -> Result<()> {
        let ok = self.kappa0 > 0.0
            && self.gamma2 > 0.0
            && (self.gamma1 > 0.0 || (dim == 1 && self.gamma1 == 0.0))
            && self.kappa_exponent.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::Invalid(format!("transport coefficients must be positive: {self:?}")))
        }
    }
}

impl Transport for PowerLaw {
    fn kappa<D: Real>(&self, beta: D, _mu: D) -> D {
        if self.kappa_exponent == 0.0 {
            D::from(self.kappa0)
        } else {
            beta.powf(self.kappa_exponent) * self.kappa0
        }
    }
    fn gamma1<D: Real>(&self, _beta: D, _mu: D) -> D {
        D::from(self.gamma1)
    }
    fn gamma2<D: Real>(&self, _beta: D, _mu: D) -> D {
        D::from(self.gamma2)
    }
    fn kappa_partials(&self, beta: f64, _mu: f64) -> (f64, f64) {
        let a = self.kappa_exponent;
        let kb = if a == 0.0 { 0.0 } else { a * self.kappa0 * beta.powf(a - 1.0) };
        (kb, 0.0)
    }
}

/// Transport coefficients evaluated at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransportCoeffs {
    pub kappa: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub kappa_beta: f64,
    pub kappa_mu: f64,
}

pub fn transport_at<T: Transport>(t: &T, beta: f64, mu: f64) -> TransportCoeffs {
    let (kappa_beta, kappa_mu) = t.kappa_partials(beta, mu);
    TransportCoeffs {
        kappa: t.kappa(beta, mu),
        gamma1: t.gamma1(beta, mu),
        gamma2: t.gamma2(beta, mu),
        kappa_beta,
        kappa_mu,
    }
}

/// Coefficients entering the flux at one evaluation point.
#[derive(Debug, Clone, Copy)]
pub struct FlowCoeffs<D> {
    pub enthalpy: D,
    pub rho: D,
    pub p: D,
    pub kappa: D,
    pub gamma1: D,
    pub gamma2: D,
}

/// Flux triple `(q, j, τ)`; `stress[k*d + l] = τ_kl`.
#[derive(Debug, Clone, PartialEq)]
pub struct Flux<D> {
    pub energy: Vec<D>,
    pub mass: Vec<D>,
    pub stress: Vec<D>,
}

pub type FluxTriple = Flux<f64>;

/// Viscous stress from the velocity gradient `grad_u[k*d + l] = ∂_l u_k`.
pub fn viscous_stress<D: Real>(gamma1: D, gamma2: D, grad_u: &[D], d: usize) -> Vec<D> {
    let div = (0..d).fold(D::zero(), |acc, k| acc + grad_u[k * d + k]);
    let mut s = vec![D::zero(); d * d];
    for k in 0..d {
        for l in 0..d {
            let mut v = (grad_u[k * d + l] + grad_u[l * d + k]) * gamma1;
            if k == l {
                v += div * (gamma2 - gamma1 * (2.0 / d as f64));
            }
            s[k * d + l] = v;
        }
    }
    s
}

/// Assembles `(q, j, τ)` from coefficients, velocity, mass flux and gradients.
pub fn flux_from_coeffs<D: Real>(c: &FlowCoeffs<D>, u: &[D], mass: &[D], grad_beta: &[D], grad_u: &[D]) -> Flux<D> {
    let d = u.len();
    let sigma = viscous_stress(c.gamma1, c.gamma2, grad_u, d);
    let u2 = u.iter().fold(D::zero(), |acc, &x| acc + x * x);
    let conv = c.enthalpy + c.rho * u2 * 0.5;
    let mut energy = Vec::with_capacity(d);
    for k in 0..d {
        let su = (0..d).fold(D::zero(), |acc, l| acc + sigma[k * d + l] * u[l]);
        energy.push(conv * u[k] - su + c.kappa * grad_beta[k]);
    }
    let mut stress = vec![D::zero(); d * d];
    for k in 0..d {
        for l in 0..d {
            let mut v = c.rho * u[k] * u[l] - sigma[k * d + l];
            if k == l {
                v += c.p;
            }
            stress[k * d + l] = v;
        }
    }
    Flux { energy, mass: mass.to_vec(), stress }
}

/// Local fields needed to evaluate the flux at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointFields {
    pub beta: f64,
    pub mu: f64,
    pub u: Vec<f64>,
    pub grad_beta: Vec<f64>,
    /// `grad_u[k*d + l] = ∂_l u_k`.
    pub grad_u: Vec<f64>,
}

/// Constitutive flux at a point described in conjugate variables.
pub fn constitutive_flux<E: EquationOfState, T: Transport>(
    eos: &E,
    transport: &T,
    f: &PointFields,
) -> Result<FluxTriple> {
    let d = f.u.len();
    if d == 0 || f.grad_beta.len() != d || f.grad_u.len() != d * d {
        return Err(Error::Invalid("inconsistent field dimensions".into()));
    }
    if !(f.beta > 0.0) {
        return Err(Error::Domain(format!("beta = {}", f.beta)));
    }
    let (e0, rho0) = rest_state_generic(eos, f.beta, f.mu)?;
    let th = rest_thermo(eos, e0, rho0);
    let c = FlowCoeffs {
        enthalpy: th.enthalpy,
        rho: rho0,
        p: th.p,
        kappa: transport.kappa(f.beta, f.mu),
        gamma1: transport.gamma1(f.beta, f.mu),
        gamma2: transport.gamma2(f.beta, f.mu),
    };
    let mass: Vec<f64> = f.u.iter().map(|u| rho0 * u).collect();
    Ok(flux_from_coeffs(&c, &f.u, &mass, &f.grad_beta, &f.grad_u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eos::IdealGas;

    #[test]
    fn rest_fluid_carries_only_pressure() {
        let eos = IdealGas::default();
        let t = PowerLaw::constant(1.0, 0.5, 0.7);
        let f = PointFields {
            beta: 1.5,
            mu: eos.mu_for_pressure(1.5, 0.8),
            u: vec![0.0, 0.0],
            grad_beta: vec![0.0, 0.0],
            grad_u: vec![0.0; 4],
        };
        let flux = constitutive_flux(&eos, &t, &f).unwrap();
        assert!(flux.energy.iter().all(|&q| q == 0.0));
        assert!(flux.mass.iter().all(|&m| m == 0.0));
        assert!((flux.stress[0] - 0.8).abs() < 1e-12);
        assert!((flux.stress[3] - 0.8).abs() < 1e-12);
        assert_eq!(flux.stress[1], 0.0);
    }

    #[test]
    fn heat_flux_follows_beta_gradient() {
        let eos = IdealGas::default();
        let t = PowerLaw::constant(2.0, 0.0, 1.0);
        let f = PointFields { beta: 1.0, mu: 0.0, u: vec![0.0], grad_beta: vec![0.3], grad_u: vec![0.0] };
        let flux = constitutive_flux(&eos, &t, &f).unwrap();
        assert!((flux.energy[0] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn power_law_partials_match_differences() {
        let t = PowerLaw { kappa0: 1.3, kappa_exponent: 1.0, gamma1: 0.1, gamma2: 0.2 };
        let (kb, km) = t.kappa_partials(1.1, 0.2);
        assert!((kb - 1.3).abs() < 1e-15);
        assert_eq!(km, 0.0);
        struct Fd(PowerLaw);
        impl Transport for Fd {
            fn kappa<D: Real>(&self, b: D, m: D) -> D {
                self.0.kappa(b, m)
            }
            fn gamma1<D: Real>(&self, b: D, m: D) -> D {
                self.0.gamma1(b, m)
            }
            fn gamma2<D: Real>(&self, b: D, m: D) -> D {
                self.0.gamma2(b, m)
            }
        }
        let t2 = PowerLaw { kappa_exponent: 2.5, ..t };
        let (a, _) = t2.kappa_partials(1.1, 0.2);
        let (b, _) = Fd(t2).kappa_partials(1.1, 0.2);
        assert!((a - b).abs() < 1e-8);
    }

    #[test]
    fn traceless_shear_in_two_dimensions() {
        let gu = [0.0, 1.0, 0.0, 0.0];
        let s = viscous_stress(2.0, 5.0, &gu, 2);
        assert_eq!(s, vec![0.0, 2.0, 2.0, 0.0]);
        let s = viscous_stress(2.0, 5.0, &[1.0, 0.0, 0.0, 1.0], 2);
        assert_eq!(s, vec![10.0, 0.0, 0.0, 10.0]);
    }
}
