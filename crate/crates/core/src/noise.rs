//! Covariance of the stochastic fluxes and of the resulting nodal noise.
//!
//! Noise enters the energy flux and the stress; the mass flux is noiseless.
//! At a point the covariance kernel, tested on flux-space triples
//! `(a, b, c)` (vector, vector, matrix), is
//!
//! `Γ = 2κ a·a' + 2β⁻¹γ1 (c:c' + c:c'ᵀ) + 2β⁻¹(γ2 - (2/d)γ1) tr c tr c'`.
//!
//! On the grid, `a`, `b`, `c` are face gradients of a test vector and the
//! form is summed with face weights. The nodal covariance `Σ` is defined by
//! `h^{2d} Fᵀ Σ F' = Γ(∇F, ∇F')`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::discretization::Discretization;
use crate::eos::EquationOfState;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::psd_factor;
use crate::ns_model::Transport;

/// Noise strengths at one evaluation point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalNoise {
    pub kappa: f64,
    /// `γ1/β`.
    pub binv_gamma1: f64,
    /// `γ2/β`.
    pub binv_gamma2: f64,
}

/// A flux-space test triple at one point: `c[i*d + l]` pairs with `ζ_il`.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxTest {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

/// The covariance form at one point, written with the symmetrized gradient
/// `c1 = c + cᵀ` and trace `c2 = tr c`.
pub fn gamma_form_local(n: &LocalNoise, x: &FluxTest, y: &FluxTest) -> f64 {
    let d = x.a.len();
    let aa: f64 = x.a.iter().zip(&y.a).map(|(p, q)| p * q).sum();
    let mut c1c1 = 0.0;
    let (mut tx, mut ty) = (0.0, 0.0);
    for i in 0..d {
        tx += x.c[i * d + i];
        ty += y.c[i * d + i];
        for l in 0..d {
            let s1 = x.c[i * d + l] + x.c[l * d + i];
            let s2 = y.c[i * d + l] + y.c[l * d + i];
            c1c1 += s1 * s2;
        }
    }
    2.0 * n.kappa * aa + n.binv_gamma1 * c1c1 + 2.0 * (n.binv_gamma2 - 2.0 / d as f64 * n.binv_gamma1) * tx * ty
}

/// Pointwise kernels: `K1[i][j]` for the energy flux and `K3[(i,l)][(j,m)]`
/// for the stress, as dense matrices.
pub fn pointwise_kernels(n: &LocalNoise, d: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let k1 = DMatrix::identity(d, d) * (2.0 * n.kappa);
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let mut k3 = DMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for l in 0..d {
            for j in 0..d {
                for m in 0..d {
                    let shear = delta(i, j) * delta(l, m) + delta(i, m) * delta(j, l)
                        - 2.0 / d as f64 * delta(i, l) * delta(j, m);
                    let bulk = delta(i, l) * delta(j, m);
                    k3[(i * d + l, j * d + m)] = 2.0 * (n.binv_gamma1 * shear + n.binv_gamma2 * bulk);
                }
            }
        }
    }
    (k1, k3)
}

/// The same form evaluated by contracting the pointwise kernels.
pub fn gamma_from_pointwise(n: &LocalNoise, x: &FluxTest, y: &FluxTest) -> f64 {
    let d = x.a.len();
    let (k1, k3) = pointwise_kernels(n, d);
    let a = DVector::from_column_slice(&x.a);
    let a2 = DVector::from_column_slice(&y.a);
    let c = DVector::from_column_slice(&x.c);
    let c2 = DVector::from_column_slice(&y.c);
    a.dot(&(k1 * a2)) + c.dot(&(k3 * c2))
}

/// Sum of local forms with quadrature weights.
pub fn gamma_form(noise: &[LocalNoise], weights: &[f64], x: &[FluxTest], y: &[FluxTest]) -> f64 {
    noise.iter().zip(weights).zip(x.iter().zip(y)).map(|((n, w), (p, q))| w * gamma_form_local(n, p, q)).sum()
}

/// Nodal noise covariance and a factor of it.
#[derive(Debug, Clone)]
pub struct NoiseCovariance {
    pub grid: Grid,
    pub sigma: DMatrix<f64>,
}

impl NoiseCovariance {
    /// `B` with `B Bᵀ = Σ`; negative eigenvalues above `-1e-12` relative are
    /// clipped.
    pub fn factor(&self) -> Result<DMatrix<f64>> {
        psd_factor(&self.sigma, 1e-12)
    }
}

/// Noise strengths on each face of a discretization at state `phi`.
pub fn face_noise<E: EquationOfState, T: Transport>(
    disc: &Discretization<E, T>,
    phi: &[f64],
) -> Result<Vec<LocalNoise>> {
    let vals = disc.node_table(phi)?;
    Ok(disc
        .faces()
        .iter()
        .map(|f| {
            let a = &vals[f.ends[0]];
            let b = &vals[f.ends[1]];
            LocalNoise {
                kappa: 0.5 * (a.kappa + b.kappa),
                binv_gamma1: 0.5 * (a.gamma1 / a.beta + b.gamma1 / b.beta),
                binv_gamma2: 0.5 * (a.gamma2 / a.beta + b.gamma2 / b.beta),
            }
        })
        .collect())
}

/// Flux-space test triples `∇F` on every face, for interior test vectors
/// with zero boundary values.
pub fn face_gradients<E: EquationOfState, T: Transport>(disc: &Discretization<E, T>, test: &[f64]) -> Vec<FluxTest> {
    let grid = disc.grid;
    let d = grid.dim;
    let nc = grid.ncomp();
    let index = grid.interior_index();
    disc.faces()
        .iter()
        .map(|f| {
            let mut t = FluxTest { a: vec![0.0; d], b: vec![0.0; d], c: vec![0.0; d * d] };
            for &(node, cf) in &f.grad {
                if let Some(k) = index[node] {
                    let v = &test[k * nc..(k + 1) * nc];
                    for l in 0..d {
                        t.a[l] += cf[l] * v[0];
                        t.b[l] += cf[l] * v[1];
                        for i in 0..d {
                            t.c[i * d + l] += cf[l] * v[2 + i];
                        }
                    }
                }
            }
            t
        })
        .collect()
}

/// Assembles `Σ` from face noise strengths, including the noise of the
/// grid-scale pressure-driven fluxes when the discretization has them.
pub fn noise_matrix<E: EquationOfState, T: Transport>(
    disc: &Discretization<E, T>,
    phi: &[f64],
) -> Result<NoiseCovariance> {
    let grid = disc.grid;
    let d = grid.dim;
    let nc = grid.ncomp();
    let index = grid.interior_index();
    let noise = face_noise(disc, phi)?;
    let dp = disc.pressure_diffusion();
    let vals = disc.node_table(phi)?;
    let m = grid.num_unknowns();
    let mut sigma = DMatrix::zeros(m, m);
    for (face, n) in disc.faces().iter().zip(&noise) {
        let (_, k3) = pointwise_kernels(n, d);
        let (a, b) = (&vals[face.ends[0]], &vals[face.ends[1]]);
        let rho = 0.5 * (a.rho + b.rho);
        let v = [0.5 * (a.enthalpy + b.enthalpy) / rho, 1.0];
        let st: Vec<(usize, [f64; 2])> =
            face.grad.iter().filter_map(|&(node, c)| index[node].map(|k| (k, c))).collect();
        for &(p, cp) in &st {
            for &(q, cq) in &st {
                let mut e = 0.0;
                for l in 0..d {
                    e += cp[l] * cq[l];
                }
                sigma[(p * nc, q * nc)] += face.weight * 2.0 * n.kappa * e;
                if dp > 0.0 {
                    for r in 0..2 {
                        for c in 0..2 {
                            sigma[(p * nc + r, q * nc + c)] += face.weight * 2.0 * dp * v[r] * v[c] * e;
                        }
                    }
                }
                for i in 0..d {
                    for j in 0..d {
                        let mut s = 0.0;
                        for l in 0..d {
                            for mm in 0..d {
                                s += k3[(i * d + l, j * d + mm)] * cp[l] * cq[mm];
                            }
                        }
                        sigma[(p * nc + 2 + i, q * nc + 2 + j)] += face.weight * s;
                    }
                }
            }
        }
    }
    let scale = grid.cell_volume().powi(-2);
    sigma *= scale;
    let st = sigma.transpose();
    Ok(NoiseCovariance { grid, sigma: (sigma + st) * 0.5 })
}

/// One Brownian increment `√dt B z`.
pub fn sample_increment<R: Rng + ?Sized>(b: &DMatrix<f64>, dt: f64, rng: &mut R) -> Result<DVector<f64>> {
    if !(dt > 0.0) {
        return Err(Error::Invalid(format!("time step must be positive, got {dt}")));
    }
    let z = DVector::from_fn(b.ncols(), |_, _| StandardNormal.sample(rng));
    Ok(b * z * dt.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triple(d: usize, seed: u64) -> FluxTest {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        FluxTest {
            a: (0..d).map(|_| next()).collect(),
            b: (0..d).map(|_| next()).collect(),
            c: (0..d * d).map(|_| next()).collect(),
        }
    }

    #[test]
    fn two_routes_agree() {
        let n = LocalNoise { kappa: 0.7, binv_gamma1: 0.3, binv_gamma2: 0.9 };
        for d in [1, 2, 3] {
            let x = triple(d, 1);
            let y = triple(d, 2);
            let a = gamma_form_local(&n, &x, &y);
            let b = gamma_from_pointwise(&n, &x, &y);
            assert!((a - b).abs() < 1e-14, "d = {d}: {a} vs {b}");
        }
    }

    #[test]
    fn antisymmetric_gradient_is_noiseless() {
        let n = LocalNoise { kappa: 0.0, binv_gamma1: 1.0, binv_gamma2: 1.0 };
        let x = FluxTest { a: vec![0.0; 2], b: vec![1.0; 2], c: vec![0.0, 1.0, -1.0, 0.0] };
        assert_eq!(gamma_form_local(&n, &x, &x), 0.0);
    }
}
