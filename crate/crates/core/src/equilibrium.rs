//! Closed-form linear operators at a uniform equilibrium state.
//!
//! `Λ_eq` maps perturbations `δθ` of the conjugate variables to `∂t δφ`;
//! `Λ*_eq` is its adjoint for the grid inner product. Both use the same face
//! stencils as the nonlinear residual, with homogeneous boundary values.
//! Vectors are node-major with `2 + d` components per interior node.

use crate::eos::{rest_state_from_beta_mu, rest_thermo, EquationOfState};
use crate::error::Result;
use crate::grid::GridOps;
use crate::ns_model::{viscous_stress, Transport};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumParams {
    pub beta: f64,
    pub mu: f64,
    pub rho: f64,
    pub enthalpy: f64,
    pub p: f64,
    pub kappa: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    /// Strength `D` of the grid-scale pressure-driven fluxes, zero for the bare model.
    pub pressure_diffusion: f64,
}

impl EquilibriumParams {
    pub fn new<E: EquationOfState, T: Transport>(eos: &E, transport: &T, beta: f64, mu: f64) -> Result<Self> {
        let (e0, rho0) = rest_state_from_beta_mu(eos, beta, mu)?;
        let th = rest_thermo(eos, e0, rho0);
        Ok(EquilibriumParams {
            beta,
            mu,
            rho: rho0,
            enthalpy: th.enthalpy,
            p: th.p,
            kappa: transport.kappa(beta, mu),
            gamma1: transport.gamma1(beta, mu),
            gamma2: transport.gamma2(beta, mu),
            pressure_diffusion: 0.0,
        })
    }
}

fn component(v: &[f64], nc: usize, c: usize) -> Vec<f64> {
    v.iter().skip(c).step_by(nc).copied().collect()
}

fn scatter(out: &mut [f64], nc: usize, c: usize, vals: &[f64], scale: f64) {
    for (k, x) in vals.iter().enumerate() {
        out[k * nc + c] += scale * x;
    }
}

/// `Div(κ G f)`.
fn diffusion(ops: &GridOps, kappa: f64, f: &[f64]) -> Vec<f64> {
    let g: Vec<f64> = ops.face_gradient(f).iter().map(|x| kappa * x).collect();
    ops.divergence(&g)
}

/// `-Div(M ∇(a, b))` on the energy and mass rows, `M = (D/ρ²) v vᵀ`, `v = (ε + p, ρ)`.
fn pressure_block(ops: &GridOps, p: &EquilibriumParams, a: &[f64], b: &[f64], out: &mut [f64]) {
    let nc = ops.grid.dim + 2;
    let w = p.enthalpy / p.rho;
    let combined: Vec<f64> = a.iter().zip(b).map(|(x, y)| w * x + y).collect();
    let div = diffusion(ops, p.pressure_diffusion, &combined);
    scatter(out, nc, 0, &div, -w);
    scatter(out, nc, 1, &div, -1.0);
}

/// `Div σ(h)` component by component, `σ` from face gradients of `h`.
fn viscous_divergence(ops: &GridOps, p: &EquilibriumParams, h: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = ops.grid.dim;
    let nf = ops.faces().len();
    let grads: Vec<Vec<f64>> = h.iter().map(|hk| ops.face_gradient(hk)).collect();
    let mut chi = vec![vec![0.0; nf * d]; d];
    let mut gu = vec![0.0; d * d];
    for q in 0..nf {
        for k in 0..d {
            for l in 0..d {
                gu[k * d + l] = grads[k][q * d + l];
            }
        }
        let s = viscous_stress(p.gamma1, p.gamma2, &gu, d);
        for k in 0..d {
            for l in 0..d {
                chi[k][q * d + l] = s[k * d + l];
            }
        }
    }
    chi.iter().map(|c| ops.divergence(c)).collect()
}

/// `Λ_eq δθ`.
pub fn lambda_eq_apply(ops: &GridOps, p: &EquilibriumParams, dtheta: &[f64]) -> Vec<f64> {
    let d = ops.grid.dim;
    let nc = d + 2;
    let t1 = component(dtheta, nc, 0);
    let t2 = component(dtheta, nc, 1);
    let t3: Vec<Vec<f64>> = (0..d).map(|k| component(dtheta, nc, 2 + k)).collect();
    let mut out = vec![0.0; dtheta.len()];
    let div_t3 = ops.nodal_divergence(&t3);
    scatter(&mut out, nc, 0, &diffusion(ops, p.kappa, &t1), -1.0);
    scatter(&mut out, nc, 0, &div_t3, p.enthalpy / p.beta);
    scatter(&mut out, nc, 1, &div_t3, p.rho / p.beta);
    if p.pressure_diffusion > 0.0 {
        pressure_block(ops, p, &t1, &t2, &mut out);
    }
    let pressure: Vec<f64> = t1.iter().zip(&t2).map(|(a, b)| p.enthalpy * a + p.rho * b).collect();
    let visc = viscous_divergence(ops, p, &t3);
    for k in 0..d {
        scatter(&mut out, nc, 2 + k, &ops.gradient(&pressure, k), 1.0 / p.beta);
        scatter(&mut out, nc, 2 + k, &visc[k], -1.0 / p.beta);
    }
    out
}

/// `Λ*_eq F` for `F = (f, g, h)`:
///
/// * `-κ Δf - β⁻¹ ε ∇·h`
/// * `-β⁻¹ ρ ∇·h`
/// * `-β⁻¹ ε ∇f - β⁻¹ ρ ∇g - β⁻¹ ∇·σ(h)`
///
/// with `ε` the enthalpy density, plus the pressure-driven block when `D > 0`.
pub fn lambda_star_eq_analytic(ops: &GridOps, p: &EquilibriumParams, test: &[f64]) -> Vec<f64> {
    let d = ops.grid.dim;
    let nc = d + 2;
    let f = component(test, nc, 0);
    let g = component(test, nc, 1);
    let h: Vec<Vec<f64>> = (0..d).map(|k| component(test, nc, 2 + k)).collect();
    let mut out = vec![0.0; test.len()];
    let div_h = ops.nodal_divergence(&h);
    scatter(&mut out, nc, 0, &diffusion(ops, p.kappa, &f), -1.0);
    scatter(&mut out, nc, 0, &div_h, -p.enthalpy / p.beta);
    scatter(&mut out, nc, 1, &div_h, -p.rho / p.beta);
    if p.pressure_diffusion > 0.0 {
        pressure_block(ops, p, &f, &g, &mut out);
    }
    let visc = viscous_divergence(ops, p, &h);
    for k in 0..d {
        scatter(&mut out, nc, 2 + k, &ops.gradient(&f, k), -p.enthalpy / p.beta);
        scatter(&mut out, nc, 2 + k, &ops.gradient(&g, k), -p.rho / p.beta);
        scatter(&mut out, nc, 2 + k, &visc[k], -1.0 / p.beta);
    }
    out
}

/// Grid inner product of packed vectors.
pub fn packed_inner(ops: &GridOps, a: &[f64], b: &[f64]) -> f64 {
    ops.grid.cell_volume() * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
}
