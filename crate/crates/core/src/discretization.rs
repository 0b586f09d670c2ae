//! Finite-difference discretization of the deterministic dynamics, its steady
//! states and its linearization.
//!
//! Unknowns are the conserved densities `φ = (e, ρ, j)` at interior nodes,
//! node-major: `phi[k * ncomp + c]`. Boundary nodes are not unknowns; their
//! values follow from the wall conditions. The residual `∂t φ = -Div χ` is
//! written once for a generic scalar and differentiated with dual numbers.

use nalgebra::{DMatrix, DVector};
use num_dual::Dual64;
use serde::{Deserialize, Serialize};

use crate::eos::{self, rest_state_generic, rest_thermo, ConjugatePoint, EquationOfState, LocalState, Real};
use crate::error::{Error, Result};
use crate::grid::{Face, Grid};
use crate::ns_model::{flux_from_coeffs, FlowCoeffs, Transport};

/// Condition imposed on one wall of the box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Wall {
    /// Thermal and particle reservoir at rest.
    Reservoir { beta: f64, mu: f64 },
    /// No-slip wall with zero normal gradient of `θ`.
    Insulated,
}

/// Walls ordered `x-low, x-high[, y-low, y-high]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundarySpec {
    pub walls: Vec<Wall>,
}

impl BoundarySpec {
    pub fn reservoirs_1d(left: (f64, f64), right: (f64, f64)) -> Self {
        BoundarySpec {
            walls: vec![Wall::Reservoir { beta: left.0, mu: left.1 }, Wall::Reservoir { beta: right.0, mu: right.1 }],
        }
    }

    pub fn uniform(dim: usize, beta: f64, mu: f64) -> Self {
        BoundarySpec { walls: vec![Wall::Reservoir { beta, mu }; 2 * dim] }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.walls.len() != 2 * dim {
            return Err(Error::Invalid(format!("expected {} walls, got {}", 2 * dim, self.walls.len())));
        }
        let mut any_reservoir = false;
        for w in &self.walls {
            if let Wall::Reservoir { beta, mu } = *w {
                any_reservoir = true;
                if !(beta > 0.0 && beta.is_finite() && mu.is_finite()) {
                    return Err(Error::Invalid(format!("reservoir needs beta > 0 and finite mu, got ({beta}, {mu})")));
                }
            }
        }
        if !any_reservoir {
            return Err(Error::Invalid("at least one wall must be a reservoir".into()));
        }
        Ok(())
    }

    pub fn has_insulated(&self) -> bool {
        self.walls.iter().any(|w| matches!(w, Wall::Insulated))
    }

    /// Whether every wall is a reservoir with the same `(β, μ)`.
    pub fn is_equilibrium(&self) -> bool {
        let first = self.walls[0];
        self.walls.iter().all(|w| *w == first && matches!(w, Wall::Reservoir { .. }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum NodeKind {
    Interior(usize),
    Reservoir(usize),
    Insulated { near: usize, far: usize },
}

/// Nodal quantities entering the fluxes.
#[derive(Debug, Clone, Copy)]
pub struct NodeValues<D> {
    pub beta: D,
    pub mu: D,
    pub rho: D,
    pub p: D,
    pub enthalpy: D,
    pub kappa: D,
    pub gamma1: D,
    pub gamma2: D,
    pub u: [D; 2],
    pub j: [D; 2],
}

impl NodeValues<f64> {
    fn lift<D: Real>(&self) -> NodeValues<D> {
        NodeValues {
            beta: D::from(self.beta),
            mu: D::from(self.mu),
            rho: D::from(self.rho),
            p: D::from(self.p),
            enthalpy: D::from(self.enthalpy),
            kappa: D::from(self.kappa),
            gamma1: D::from(self.gamma1),
            gamma2: D::from(self.gamma2),
            u: [D::from(self.u[0]), D::from(self.u[1])],
            j: [D::from(self.j[0]), D::from(self.j[1])],
        }
    }
}

/// The discretized deterministic model.
#[derive(Debug, Clone)]
pub struct Discretization<E, T> {
    pub eos: E,
    pub transport: T,
    pub grid: Grid,
    pub boundary: BoundarySpec,
    faces: Vec<Face>,
    kinds: Vec<NodeKind>,
    interior: Vec<usize>,
    reservoirs: Vec<Option<NodeValues<f64>>>,
    pressure_regularization: f64,
}

/// Steady solution together with boundary values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SteadyState {
    pub grid: Grid,
    /// Interior unknowns, node-major.
    pub phi: Vec<f64>,
    /// `(β, μ, u_1, .., u_d)` at every node, boundary included.
    pub fields: Vec<Vec<f64>>,
    pub residual_history: Vec<f64>,
}

impl SteadyState {
    pub fn residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(f64::INFINITY)
    }
    pub fn beta(&self) -> Vec<f64> {
        self.fields.iter().map(|f| f[0]).collect()
    }
    pub fn mu(&self) -> Vec<f64> {
        self.fields.iter().map(|f| f[1]).collect()
    }
    pub fn max_speed(&self) -> f64 {
        self.fields.iter().map(|f| f[2..].iter().map(|u| u * u).sum::<f64>().sqrt()).fold(0.0, f64::max)
    }
}

/// Spectral stability of a linear generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DissipativityReport {
    pub spectral_abscissa: f64,
    pub spectral_radius: f64,
    pub passed: bool,
}

impl<E: EquationOfState, T: Transport> Discretization<E, T> {
    pub fn new(eos: E, transport: T, grid: Grid, boundary: BoundarySpec) -> Result<Self> {
        boundary.validate(grid.dim)?;
        let n = grid.n;
        let index = grid.interior_index();
        let mut kinds = Vec::with_capacity(grid.num_nodes());
        for node in 0..grid.num_nodes() {
            if let Some(k) = index[node] {
                kinds.push(NodeKind::Interior(k));
                continue;
            }
            let c = grid.coords(node);
            let mut touching = Vec::new();
            for axis in 0..grid.dim {
                if c[axis] == 0 {
                    touching.push(2 * axis);
                } else if c[axis] == n - 1 {
                    touching.push(2 * axis + 1);
                }
            }
            if let Some(&w) = touching.iter().find(|&&w| matches!(boundary.walls[w], Wall::Reservoir { .. })) {
                kinds.push(NodeKind::Reservoir(w));
                continue;
            }
            let step = |c: [usize; 2], by: usize| {
                let mut out = c;
                for &w in &touching {
                    let axis = w / 2;
                    out[axis] = if w % 2 == 0 { c[axis] + by } else { c[axis] - by };
                }
                grid.node(out[0], out[1])
            };
            kinds.push(NodeKind::Insulated { near: step(c, 1), far: step(c, 2) });
        }
        let mut reservoirs = vec![None; boundary.walls.len()];
        for (w, wall) in boundary.walls.iter().enumerate() {
            if let Wall::Reservoir { beta, mu } = *wall {
                let (e0, rho0) = eos::rest_state_from_beta_mu(&eos, beta, mu)?;
                reservoirs[w] = Some(node_from_rest(&eos, &transport, e0, rho0, beta, mu));
            }
        }
        Ok(Discretization {
            faces: grid.faces(),
            interior: grid.interior_nodes(),
            eos,
            transport,
            grid,
            boundary,
            kinds,
            reservoirs,
            pressure_regularization: 0.0,
        })
    }

    /// Adds grid-scale fluxes driven by the pressure gradient, with strength
    /// `D = λ h²`: mass flux `-D β ∇p / ρ` and energy flux `ε/ρ` times that,
    /// with `ε` the enthalpy density. Linearized at rest these are `M ∇θ` with
    /// `M = (D/ρ²) (ε, ρ)(ε, ρ)ᵀ`, and `noise_matrix` adds the matching noise.
    ///
    /// Collocated central differences leave odd-even pressure modes almost
    /// undamped. These fluxes damp them and vanish exactly when the nodal
    /// pressure is uniform.
    pub fn with_pressure_regularization(mut self, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::Invalid(format!("pressure regularization must be non-negative, got {lambda}")));
        }
        self.pressure_regularization = lambda;
        Ok(self)
    }

    /// Strength `D = λ h²` of the pressure-driven fluxes.
    pub fn pressure_diffusion(&self) -> f64 {
        self.pressure_regularization * self.grid.h() * self.grid.h()
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.grid.num_unknowns() {
            return Err(Error::Invalid(format!("expected {} unknowns, got {len}", self.grid.num_unknowns())));
        }
        Ok(())
    }

    fn interior_values<D: Real>(&self, phi: &[D]) -> Result<NodeValues<D>> {
        let d = self.grid.dim;
        let rho = phi[1];
        let mut j = [D::zero(); 2];
        let mut u = [D::zero(); 2];
        let mut j2 = D::zero();
        for a in 0..d {
            j[a] = phi[2 + a];
            u[a] = j[a] / rho;
            j2 += j[a] * j[a];
        }
        let e0 = phi[0] - j2 / (rho * 2.0);
        if !self.eos.in_domain(e0.re(), rho.re()) {
            return Err(Error::Domain(format!("e0 = {}, rho = {}", e0.re(), rho.re())));
        }
        let th = rest_thermo(&self.eos, e0, rho);
        if !(th.beta.re() > 0.0) {
            return Err(Error::Domain(format!("beta = {}", th.beta.re())));
        }
        Ok(NodeValues {
            beta: th.beta,
            mu: th.mu,
            rho,
            p: th.p,
            enthalpy: th.enthalpy,
            kappa: self.transport.kappa(th.beta, th.mu),
            gamma1: self.transport.gamma1(th.beta, th.mu),
            gamma2: self.transport.gamma2(th.beta, th.mu),
            u,
            j,
        })
    }

    /// Nodal values on the whole grid for given interior unknowns.
    pub fn node_values<D: Real>(&self, phi: &[D]) -> Result<Vec<NodeValues<D>>> {
        self.check_len(phi.len())?;
        let nc = self.grid.ncomp();
        let mut vals: Vec<Option<NodeValues<D>>> = vec![None; self.grid.num_nodes()];
        for (node, kind) in self.kinds.iter().enumerate() {
            vals[node] = match *kind {
                NodeKind::Interior(k) => Some(self.interior_values(&phi[k * nc..(k + 1) * nc])?),
                NodeKind::Reservoir(w) => Some(self.reservoirs[w].expect("reservoir wall").lift()),
                NodeKind::Insulated { .. } => None,
            };
        }
        for (node, kind) in self.kinds.iter().enumerate() {
            if let NodeKind::Insulated { near, far } = *kind {
                let a = vals[near].expect("interior neighbour");
                let b = vals[far].expect("interior neighbour");
                let x = |v: &NodeValues<D>| {
                    let u2 = v.u[0] * v.u[0] + v.u[1] * v.u[1];
                    v.beta * v.mu - v.beta * u2 * 0.5
                };
                let beta = (a.beta * 4.0 - b.beta) / 3.0;
                let bmu = (x(&a) * 4.0 - x(&b)) / 3.0;
                if !(beta.re() > 0.0) {
                    return Err(Error::Domain(format!("extrapolated beta = {}", beta.re())));
                }
                let mu = bmu / beta;
                let (e0, rho0) = rest_state_generic(&self.eos, beta, mu)?;
                vals[node] = Some(node_from_rest(&self.eos, &self.transport, e0, rho0, beta, mu));
            }
        }
        Ok(vals.into_iter().map(|v| v.expect("all nodes assigned")).collect())
    }

    /// `∂t φ` at interior nodes, for generic scalars.
    pub fn rhs_generic<D: Real>(&self, phi: &[D]) -> Result<Vec<D>> {
        let vals = self.node_values(phi)?;
        let d = self.grid.dim;
        let nc = self.grid.ncomp();
        let inv_vol = 1.0 / self.grid.cell_volume();
        let mut rhs = vec![D::zero(); phi.len()];
        let mut grad_beta = [D::zero(); 2];
        let mut grad_u = [D::zero(); 4];
        let mut grad_p = [D::zero(); 2];
        let dp = self.pressure_diffusion();
        for face in &self.faces {
            let a = &vals[face.ends[0]];
            let b = &vals[face.ends[1]];
            let avg = |x: D, y: D| (x + y) * 0.5;
            let c = FlowCoeffs {
                enthalpy: avg(a.enthalpy, b.enthalpy),
                rho: avg(a.rho, b.rho),
                p: avg(a.p, b.p),
                kappa: avg(a.kappa, b.kappa),
                gamma1: avg(a.gamma1, b.gamma1),
                gamma2: avg(a.gamma2, b.gamma2),
            };
            let mut u = [D::zero(); 2];
            let mut m = [D::zero(); 2];
            for k in 0..d {
                u[k] = avg(a.u[k], b.u[k]);
                m[k] = avg(a.j[k], b.j[k]);
            }
            grad_beta.iter_mut().for_each(|g| *g = D::zero());
            grad_u.iter_mut().for_each(|g| *g = D::zero());
            grad_p.iter_mut().for_each(|g| *g = D::zero());
            for &(node, cf) in &face.grad {
                let v = &vals[node];
                for l in 0..d {
                    grad_p[l] += v.p * cf[l];
                    grad_beta[l] += v.beta * cf[l];
                    for k in 0..d {
                        grad_u[k * d + l] += v.u[k] * cf[l];
                    }
                }
            }
            let mut extra = [D::zero(); 2];
            if dp > 0.0 {
                for k in 0..d {
                    extra[k] = -avg(a.beta, b.beta) * grad_p[k] * dp / c.rho;
                    m[k] += extra[k];
                }
            }
            let mut flux = flux_from_coeffs(&c, &u[..d], &m[..d], &grad_beta[..d], &grad_u[..d * d]);
            if dp > 0.0 {
                for k in 0..d {
                    flux.energy[k] += extra[k] * c.enthalpy / c.rho;
                }
            }
            for &(node, cf) in &face.grad {
                if let NodeKind::Interior(k) = self.kinds[node] {
                    let s = face.weight * inv_vol;
                    let row = &mut rhs[k * nc..(k + 1) * nc];
                    for l in 0..d {
                        let w = cf[l] * s;
                        if w == 0.0 {
                            continue;
                        }
                        row[0] += flux.energy[l] * w;
                        row[1] += flux.mass[l] * w;
                        for kk in 0..d {
                            row[2 + kk] += flux.stress[kk * d + l] * w;
                        }
                    }
                }
            }
        }
        Ok(rhs)
    }

    pub fn rhs(&self, phi: &[f64]) -> Result<Vec<f64>> {
        self.rhs_generic(phi)
    }

    /// Largest Chebyshev distance between an unknown and a residual entry it
    /// influences.
    fn influence_radius(&self) -> usize {
        let direct = if self.grid.dim == 1 { 1 } else { 2 };
        if self.boundary.has_insulated() {
            direct + 2
        } else {
            direct
        }
    }

    /// Jacobian `L = ∂rhs/∂φ` by forward-mode differentiation with column
    /// colouring.
    pub fn linearize(&self, phi: &[f64]) -> Result<DMatrix<f64>> {
        self.check_len(phi.len())?;
        let r = self.influence_radius();
        let stride = 2 * r + 1;
        let nc = self.grid.ncomp();
        let m = phi.len();
        let coords: Vec<[usize; 2]> = self.interior.iter().map(|&n| self.grid.coords(n)).collect();
        let colors = if self.grid.dim == 1 { stride } else { stride * stride };
        let color_of = |c: [usize; 2]| (c[0] % stride) + stride * (c[1] % stride);
        let mut l = DMatrix::zeros(m, m);
        let mut seeded: Vec<Dual64> = phi.iter().map(|&x| Dual64::from_re(x)).collect();
        for color in 0..colors {
            let members: Vec<usize> = (0..coords.len()).filter(|&k| color_of(coords[k]) == color).collect();
            if members.is_empty() {
                continue;
            }
            for comp in 0..nc {
                for &k in &members {
                    seeded[k * nc + comp].eps = 1.0;
                }
                let out = self.rhs_generic(&seeded)?;
                for &k in &members {
                    seeded[k * nc + comp].eps = 0.0;
                    for (p, cp) in coords.iter().enumerate() {
                        let dist = (0..self.grid.dim).map(|a| cp[a].abs_diff(coords[k][a])).max().unwrap_or(0);
                        if dist <= r {
                            for rc in 0..nc {
                                l[(p * nc + rc, k * nc + comp)] = out[p * nc + rc].eps;
                            }
                        }
                    }
                }
            }
        }
        Ok(l)
    }

    /// Jacobian one column at a time, without colouring.
    pub fn linearize_dense(&self, phi: &[f64]) -> Result<DMatrix<f64>> {
        self.check_len(phi.len())?;
        let m = phi.len();
        let mut l = DMatrix::zeros(m, m);
        let mut seeded: Vec<Dual64> = phi.iter().map(|&x| Dual64::from_re(x)).collect();
        for col in 0..m {
            seeded[col].eps = 1.0;
            let out = self.rhs_generic(&seeded)?;
            seeded[col].eps = 0.0;
            for row in 0..m {
                l[(row, col)] = out[row].eps;
            }
        }
        Ok(l)
    }

    /// Interior unknowns for a field of conjugate points.
    pub fn phi_from_theta(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let nc = self.grid.ncomp();
        let mut phi = Vec::with_capacity(theta.len());
        for chunk in theta.chunks(nc) {
            let s = eos::invert_conjugate(&self.eos, &ConjugatePoint { theta: chunk.to_vec() })?;
            phi.extend(s.to_vec());
        }
        Ok(phi)
    }

    pub fn theta_from_phi(&self, phi: &[f64]) -> Result<Vec<f64>> {
        let nc = self.grid.ncomp();
        let mut theta = Vec::with_capacity(phi.len());
        for chunk in phi.chunks(nc) {
            theta.extend(eos::conjugate(&self.eos, &LocalState::from_slice(chunk))?.theta);
        }
        Ok(theta)
    }

    /// `π''` at each interior node.
    pub fn local_covariances(&self, phi: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        self.check_len(phi.len())?;
        let nc = self.grid.ncomp();
        phi.chunks(nc).map(|c| eos::hessian_pi_at_state(&self.eos, &LocalState::from_slice(c))).collect()
    }

    /// Block-diagonal `π''` on the unknowns.
    pub fn local_covariance_matrix(&self, phi: &[f64]) -> Result<DMatrix<f64>> {
        let blocks = self.local_covariances(phi)?;
        Ok(block_diagonal(&blocks))
    }

    /// Conduction-like initial guess in conjugate variables at rest: a
    /// distance-weighted blend of the reservoir values.
    pub fn initial_theta(&self) -> Vec<f64> {
        let d = self.grid.dim;
        let mut theta = Vec::with_capacity(self.grid.num_unknowns());
        for &node in &self.interior {
            let x = self.grid.position(node);
            let (mut wsum, mut b, mut bm) = (0.0, 0.0, 0.0);
            for (w, wall) in self.boundary.walls.iter().enumerate() {
                if let Wall::Reservoir { beta, mu } = *wall {
                    let axis = w / 2;
                    let dist = if w % 2 == 0 { x[axis] } else { 1.0 - x[axis] };
                    let weight = 1.0 / dist;
                    wsum += weight;
                    b += weight * beta;
                    bm += weight * beta * mu;
                }
            }
            let (beta, mu) = (b / wsum, bm / b);
            theta.extend(ConjugatePoint::from_beta_mu_u(beta, mu, &vec![0.0; d]).theta);
        }
        theta
    }

    /// Damped Newton iteration on the stationary residual in conjugate
    /// variables, with Jacobian `-L π''`.
    pub fn steady_state(&self, tol: f64, max_iter: usize) -> Result<SteadyState> {
        let mut theta = self.initial_theta();
        let mut phi = self.phi_from_theta(&theta)?;
        let mut res = self.rhs(&phi)?;
        let norm = |v: &[f64]| v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let mut history = vec![norm(&res)];
        let mut iter = 0;
        while history[history.len() - 1] > tol {
            if iter == max_iter {
                return Err(Error::NonConvergence {
                    what: "steady-state Newton",
                    iterations: iter,
                    residual: history[history.len() - 1],
                });
            }
            iter += 1;
            let l = self.linearize(&phi)?;
            let p = self.local_covariance_matrix(&phi)?;
            let jac = -(l * p);
            let rhs = DVector::from_vec(res.iter().map(|x| -x).collect());
            let step = jac.lu().solve(&rhs).ok_or(Error::Singular("steady-state Jacobian"))?;
            let current = history[history.len() - 1];
            let mut alpha = 1.0;
            let mut accepted = None;
            for _ in 0..40 {
                let trial: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, s)| t + alpha * s).collect();
                if let Ok(tphi) = self.phi_from_theta(&trial) {
                    if let Ok(tres) = self.rhs(&tphi) {
                        let n = norm(&tres);
                        if n < current || (alpha == 1.0 && n <= tol) {
                            accepted = Some((trial, tphi, tres, n));
                            break;
                        }
                    }
                }
                alpha *= 0.5;
            }
            match accepted {
                Some((t, p, r, n)) => {
                    theta = t;
                    phi = p;
                    res = r;
                    history.push(n);
                }
                None => {
                    return Err(Error::NonConvergence {
                        what: "steady-state Newton line search",
                        iterations: iter,
                        residual: current,
                    })
                }
            }
        }
        self.state_from_phi(phi, history)
    }

    /// Wraps interior unknowns, for instance read back from disk, with their
    /// nodal fields.
    pub fn state_from_phi(&self, phi: Vec<f64>, residual_history: Vec<f64>) -> Result<SteadyState> {
        let vals = self.node_values(&phi)?;
        let d = self.grid.dim;
        let fields = vals
            .iter()
            .map(|v| {
                let mut f = vec![v.beta, v.mu];
                f.extend_from_slice(&v.u[..d]);
                f
            })
            .collect();
        Ok(SteadyState { grid: self.grid, phi, fields, residual_history })
    }

    /// Nodal values at every node as plain numbers.
    pub fn node_table(&self, phi: &[f64]) -> Result<Vec<NodeValues<f64>>> {
        self.node_values(phi)
    }
}

fn node_from_rest<E: EquationOfState, T: Transport, D: Real>(
    eos: &E,
    transport: &T,
    e0: D,
    rho0: D,
    beta: D,
    mu: D,
) -> NodeValues<D> {
    let th = rest_thermo(eos, e0, rho0);
    NodeValues {
        beta,
        mu,
        rho: rho0,
        p: th.p,
        enthalpy: th.enthalpy,
        kappa: transport.kappa(beta, mu),
        gamma1: transport.gamma1(beta, mu),
        gamma2: transport.gamma2(beta, mu),
        u: [D::zero(); 2],
        j: [D::zero(); 2],
    }
}

pub fn block_diagonal(blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(n, n);
    let mut off = 0;
    for b in blocks {
        let k = b.nrows();
        out.view_mut((off, off), (k, k)).copy_from(b);
        off += k;
    }
    out
}

/// `Λ = -L π''`, the generator acting on conjugate-variable perturbations.
pub fn lambda_matrix(l: &DMatrix<f64>, pi2: &DMatrix<f64>) -> DMatrix<f64> {
    -(l * pi2)
}

/// `Λ* = -π'' Lᵀ`, the adjoint for the grid inner product.
pub fn lambda_star_matrix(l: &DMatrix<f64>, pi2: &DMatrix<f64>) -> DMatrix<f64> {
    -(pi2 * l.transpose())
}

/// Eigenvalue test for strict dissipativity.
pub fn dissipativity_check(l: &DMatrix<f64>) -> DissipativityReport {
    let eig = l.complex_eigenvalues();
    let abscissa = eig.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let radius = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
    DissipativityReport {
        spectral_abscissa: abscissa,
        spectral_radius: radius,
        passed: abscissa < -1e-10 * radius.max(1.0),
    }
}
