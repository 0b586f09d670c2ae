//! Dense linear algebra used by the process layer.

use nalgebra::{Complex, DMatrix, Schur};

use crate::error::{Error, Result};

type C64 = Complex<f64>;

/// Solver for `A X + X Aᵀ + Q = 0` reusing one complex Schur form of `A`.
pub struct LyapunovSolver {
    u: DMatrix<C64>,
    t: DMatrix<C64>,
}

impl LyapunovSolver {
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Invalid("Lyapunov operator must be square".into()));
        }
        let ac = a.map(|x| C64::new(x, 0.0));
        let schur = Schur::try_new(ac, f64::EPSILON, 0).ok_or(Error::NonConvergence {
            what: "complex Schur decomposition",
            iterations: 0,
            residual: f64::NAN,
        })?;
        let (u, t) = schur.unpack();
        Ok(LyapunovSolver { u, t })
    }

    /// Eigenvalues of `A`, the diagonal of the Schur form.
    pub fn eigenvalues(&self) -> Vec<C64> {
        self.t.diagonal().iter().copied().collect()
    }

    /// Solves `A X + X Aᵀ = -Q`.
    pub fn solve(&self, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let n = self.t.nrows();
        if q.nrows() != n || q.ncols() != n {
            return Err(Error::Invalid("right-hand side has the wrong shape".into()));
        }
        let qc = q.map(|x| C64::new(-x, 0.0));
        let c = self.u.adjoint() * qc * &self.u;
        let t = &self.t;
        let mut y = DMatrix::<C64>::zeros(n, n);
        let mut rhs = vec![C64::new(0.0, 0.0); n];
        for j in (0..n).rev() {
            for i in 0..n {
                rhs[i] = c[(i, j)];
            }
            for k in j + 1..n {
                let tjk = t[(j, k)].conj();
                if tjk == C64::new(0.0, 0.0) {
                    continue;
                }
                for i in 0..n {
                    rhs[i] -= tjk * y[(i, k)];
                }
            }
            let shift = t[(j, j)].conj();
            for i in (0..n).rev() {
                let mut s = rhs[i];
                for k in i + 1..n {
                    s -= t[(i, k)] * y[(k, j)];
                }
                let diag = t[(i, i)] + shift;
                if diag.norm() == 0.0 {
                    return Err(Error::Singular("Lyapunov equation"));
                }
                y[(i, j)] = s / diag;
            }
        }
        let x = &self.u * y * self.u.adjoint();
        let xr = x.map(|z| z.re);
        Ok(symmetrize(&xr))
    }
}

/// `‖A X + X Aᵀ + Q‖_F`.
pub fn lyapunov_residual(a: &DMatrix<f64>, x: &DMatrix<f64>, q: &DMatrix<f64>) -> f64 {
    let ax = a * x;
    (&ax + ax.transpose() + q).norm()
}

/// Solves `A X + X Aᵀ + Q = 0`, refining until the residual stops improving.
pub fn solve_lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let solver = LyapunovSolver::new(a)?;
    let mut x = solver.solve(q)?;
    let mut res = lyapunov_residual(a, &x, q);
    for _ in 0..3 {
        let ax = a * &x;
        let r = &ax + ax.transpose() + q;
        let dx = solver.solve(&r)?;
        let trial = &x + dx;
        let tres = lyapunov_residual(a, &trial, q);
        if tres >= res {
            break;
        }
        x = trial;
        res = tres;
    }
    Ok(x)
}

pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// A factor `B` with `B Bᵀ = S` for symmetric positive semidefinite `S`.
///
/// Eigenvalues below `-tol·max|λ|` are rejected; the rest are clipped at zero
/// and their directions dropped, so `B` has `rank(S)` columns.
pub fn psd_factor(s: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    let eig = symmetrize(s).symmetric_eigen();
    let scale = eig.eigenvalues.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let keep: Vec<usize> = (0..eig.eigenvalues.len()).filter(|&i| eig.eigenvalues[i] > tol * scale).collect();
    if let Some(min) = eig.eigenvalues.iter().copied().reduce(f64::min) {
        if min < -tol * scale {
            return Err(Error::Invalid(format!("matrix is not positive semidefinite (eigenvalue {min:e})")));
        }
    }
    let mut b = DMatrix::zeros(s.nrows(), keep.len());
    for (c, &i) in keep.iter().enumerate() {
        let f = eig.eigenvalues[i].sqrt();
        b.set_column(c, &(eig.eigenvectors.column(i) * f));
    }
    Ok(b)
}

/// `e^{tA}` by scaling and squaring.
pub fn expm(a: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    (a * t).exp()
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre_unit(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (1.0 - x), 0.5 * w));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Result of integrating `∫₀^∞ e^{sA} Q e^{sAᵀ} ds`.
#[derive(Debug, Clone)]
pub struct IntegralSolution {
    pub x: DMatrix<f64>,
    /// Width of one quadrature panel.
    pub panel_width: f64,
    /// Relative change between the last two panel widths.
    pub quadrature_error: f64,
    /// Bound on the neglected tail, relative to `‖X‖_F`.
    pub truncation_error: f64,
    /// Horizon covered by the panels.
    pub horizon: f64,
}

/// Integral over `[0, ∞)` with panels of width `dt`: a Gauss-Legendre rule on
/// the first panel, then repeated doubling `S ← S + P S Pᵀ`, `P ← P²` with
/// `P = e^{dt A}`.
fn panel_integral(a: &DMatrix<f64>, q: &DMatrix<f64>, dt: f64, order: usize) -> Result<(DMatrix<f64>, f64, f64)> {
    let mut s = DMatrix::zeros(a.nrows(), a.ncols());
    for (x, w) in gauss_legendre_unit(order) {
        let e = expm(a, x * dt);
        s += (&e * q * e.transpose()) * (w * dt);
    }
    let mut p = expm(a, dt);
    let mut horizon = dt;
    for _ in 0..64 {
        let pn = p.norm();
        let tail = pn * pn;
        let ps = &p * &s;
        s += &ps * p.transpose();
        p = &p * &p;
        horizon *= 2.0;
        let pn2 = p.norm();
        if pn2 * pn2 < 1e-17 {
            let trunc = if pn2 < 1.0 { pn2 * pn2 / (1.0 - pn2 * pn2) } else { f64::INFINITY };
            return Ok((symmetrize(&s), trunc, horizon));
        }
        if !tail.is_finite() {
            break;
        }
    }
    Err(Error::Unstable("semigroup does not decay; integral diverges".into()))
}

/// Adaptive evaluation of `∫₀^∞ e^{sA} Q e^{sAᵀ} ds`, halving the panel width
/// until successive results agree to `rel_tol`.
pub fn stationary_integral(a: &DMatrix<f64>, q: &DMatrix<f64>, rel_tol: f64) -> Result<IntegralSolution> {
    const ORDER: usize = 8;
    let scale = a.iter().fold(0.0_f64, |m, x| m.max(x.abs())) * a.nrows() as f64;
    let mut dt = 1.0 / scale.max(1e-300);
    let (mut prev, _, _) = panel_integral(a, q, dt, ORDER)?;
    for _ in 0..12 {
        dt *= 0.5;
        let (s, trunc, horizon) = panel_integral(a, q, dt, ORDER)?;
        let err = (&s - &prev).norm() / s.norm().max(1e-300);
        if err <= rel_tol {
            return Ok(IntegralSolution {
                x: s,
                panel_width: dt,
                quadrature_error: err,
                truncation_error: trunc,
                horizon,
            });
        }
        prev = s;
    }
    Err(Error::NonConvergence { what: "stationary covariance quadrature", iterations: 12, residual: f64::NAN })
}
