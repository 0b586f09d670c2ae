//! Diagnostics of stationary covariances: local-equilibrium residuals, long-
//! range correlation profiles and the sufficient condition for long-range
//! order.
//!
//! Test vectors are polynomial bumps `(1 - (r/w)²)³` of support radius `w`
//! placed on one component. Covariance pairings use the grid inner product,
//! `W(F, F') = h^{2d} Fᵀ W F'`; the local-equilibrium prediction is
//! `⟨F, π'' F'⟩ = h^d Σ F·π''F'`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretization::{Discretization, SteadyState};
use crate::eos::EquationOfState;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::ns_model::Transport;

/// Pairs further apart than this many grid spacings count as separated.
pub const SEPARATED_NODES: f64 = 4.0;
/// Pairs further apart than this many bump widths enter the long-range score.
pub const LONG_RANGE_WIDTHS: f64 = 4.0;
/// Default bump width in grid spacings.
pub const DEFAULT_WIDTH_NODES: f64 = 3.0;

/// A sparse bump test vector on the interior unknowns.
#[derive(Debug, Clone, PartialEq)]
pub struct Bump {
    pub center: usize,
    pub component: usize,
    pub entries: Vec<(usize, f64)>,
}

/// Bump of support radius `width` centred on an interior node.
pub fn bump(grid: &Grid, center: usize, width: f64, component: usize) -> Bump {
    let nc = grid.ncomp();
    let x0 = grid.position(center);
    let entries = grid
        .interior_nodes()
        .iter()
        .enumerate()
        .filter_map(|(k, &node)| {
            let x = grid.position(node);
            let r2 = ((x[0] - x0[0]).powi(2) + (x[1] - x0[1]).powi(2)) / (width * width);
            (r2 < 1.0).then(|| (k * nc + component, (1.0 - r2).powi(3)))
        })
        .collect();
    Bump { center, component, entries }
}

/// `h^{2d} Fᵀ W F'`.
pub fn covariance_pairing(grid: &Grid, w: &DMatrix<f64>, a: &Bump, b: &Bump) -> f64 {
    let vol = grid.cell_volume();
    let mut s = 0.0;
    for &(i, x) in &a.entries {
        for &(j, y) in &b.entries {
            s += x * w[(i, j)] * y;
        }
    }
    s * vol * vol
}

/// Centres for bumps of radius `width`: interior nodes at least `width` from
/// the boundary, thinned to at most `max_per_axis` per axis.
pub fn bump_centers(grid: &Grid, width: f64, max_per_axis: usize) -> Vec<usize> {
    let h = grid.h();
    let lo = (width / h).ceil() as usize;
    let hi = grid.n - 1 - lo;
    if hi < lo {
        return Vec::new();
    }
    let count = hi - lo + 1;
    let stride = count.div_ceil(max_per_axis.max(1)).max(1);
    let axis: Vec<usize> = (lo..=hi).step_by(stride).collect();
    if grid.dim == 1 {
        axis
    } else {
        axis.iter().flat_map(|&j| axis.iter().map(move |&i| grid.node(i, j))).collect()
    }
}

fn distance(grid: &Grid, a: usize, b: usize) -> f64 {
    let x = grid.position(a);
    let y = grid.position(b);
    ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt()
}

/// One entry of the local-equilibrium residual map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdtEntry {
    pub center_a: usize,
    pub center_b: usize,
    pub component_a: usize,
    pub component_b: usize,
    pub separation: f64,
    pub covariance: f64,
    pub local: f64,
    /// `|W(F,F') - ⟨F,π''F'⟩| / √(W(F,F) W(F',F'))`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdtResidualMap {
    pub width: f64,
    pub entries: Vec<FdtEntry>,
    /// Largest residual over pairs more than four grid spacings apart.
    pub max_separated: f64,
    /// Largest residual over coincident pairs.
    pub max_coincident: f64,
}

/// Local prediction `h^d Σ F·π''F'` from nodal blocks.
pub fn local_pairing(grid: &Grid, local: &[DMatrix<f64>], a: &Bump, b: &Bump) -> f64 {
    let nc = grid.ncomp();
    let mut s = 0.0;
    for &(i, x) in &a.entries {
        for &(j, y) in &b.entries {
            if i / nc == j / nc {
                s += x * local[i / nc][(i % nc, j % nc)] * y;
            }
        }
    }
    s * grid.cell_volume()
}

struct Dictionary {
    bumps: Vec<Bump>,
    variance: Vec<f64>,
}

fn dictionary(grid: &Grid, w: &DMatrix<f64>, centers: &[usize], width: f64) -> Dictionary {
    let nc = grid.ncomp();
    let bumps: Vec<Bump> = centers
        .iter()
        .flat_map(|&c| (0..nc).map(move |comp| (c, comp)))
        .map(|(c, comp)| bump(grid, c, width, comp))
        .collect();
    let variance = bumps.iter().map(|b| covariance_pairing(grid, w, b, b)).collect();
    Dictionary { bumps, variance }
}

/// Residual of the local-equilibrium prediction over all bump pairs.
pub fn fdt_residual(
    grid: &Grid,
    w: &DMatrix<f64>,
    local: &[DMatrix<f64>],
    width: f64,
    max_per_axis: usize,
) -> Result<FdtResidualMap> {
    check_shapes(grid, w, local)?;
    let centers = bump_centers(grid, width, max_per_axis);
    let dict = dictionary(grid, w, &centers, width);
    let n = dict.bumps.len();
    let entries: Vec<FdtEntry> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let dict = &dict;
            (i..n).map(move |j| {
                let (a, b) = (&dict.bumps[i], &dict.bumps[j]);
                let cov = covariance_pairing(grid, w, a, b);
                let loc = local_pairing(grid, local, a, b);
                let norm = (dict.variance[i] * dict.variance[j]).sqrt();
                FdtEntry {
                    center_a: a.center,
                    center_b: b.center,
                    component_a: a.component,
                    component_b: b.component,
                    separation: distance(grid, a.center, b.center),
                    covariance: cov,
                    local: loc,
                    residual: (cov - loc).abs() / norm,
                }
            })
        })
        .collect();
    let max_separated = entries
        .iter()
        .filter(|e| e.separation > SEPARATED_NODES * grid.h() * (1.0 + 1e-9))
        .map(|e| e.residual)
        .fold(0.0, f64::max);
    let max_coincident = entries.iter().filter(|e| e.center_a == e.center_b).map(|e| e.residual).fold(0.0, f64::max);
    Ok(FdtResidualMap { width, entries, max_separated, max_coincident })
}

fn check_shapes(grid: &Grid, w: &DMatrix<f64>, local: &[DMatrix<f64>]) -> Result<()> {
    if w.nrows() != grid.num_unknowns() || w.ncols() != grid.num_unknowns() || local.len() != grid.num_interior() {
        return Err(Error::Invalid("covariance does not match the grid".into()));
    }
    Ok(())
}

/// Correlation at one separation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub separation: f64,
    /// Mean normalized covariance over pairs at this separation.
    pub correlation: f64,
    /// Largest magnitude over pairs at this separation.
    pub max_abs: f64,
    /// Local-equilibrium prediction, normalized the same way.
    pub local_prediction: f64,
    pub pairs: usize,
}

/// Normalized correlation between components `(ca, cb)` as a function of
/// bump separation, binned in units of the grid spacing.
pub fn long_range_profile(
    grid: &Grid,
    w: &DMatrix<f64>,
    local: &[DMatrix<f64>],
    width: f64,
    components: (usize, usize),
    max_per_axis: usize,
) -> Result<Vec<ProfilePoint>> {
    check_shapes(grid, w, local)?;
    let centers = bump_centers(grid, width, max_per_axis);
    let a: Vec<Bump> = centers.iter().map(|&c| bump(grid, c, width, components.0)).collect();
    let b: Vec<Bump> = centers.iter().map(|&c| bump(grid, c, width, components.1)).collect();
    let va: Vec<f64> = a.iter().map(|x| covariance_pairing(grid, w, x, x)).collect();
    let vb: Vec<f64> = b.iter().map(|x| covariance_pairing(grid, w, x, x)).collect();
    let h = grid.h();
    let mut bins: std::collections::BTreeMap<usize, (f64, f64, f64, usize)> = Default::default();
    for i in 0..centers.len() {
        for j in 0..centers.len() {
            let sep = distance(grid, centers[i], centers[j]);
            let key = (sep / h).round() as usize;
            let norm = (va[i] * vb[j]).sqrt();
            let c = covariance_pairing(grid, w, &a[i], &b[j]) / norm;
            let l = local_pairing(grid, local, &a[i], &b[j]) / norm;
            let e = bins.entry(key).or_insert((0.0, 0.0, 0.0, 0));
            e.0 += c;
            e.1 = e.1.max(c.abs());
            e.2 += l;
            e.3 += 1;
        }
    }
    Ok(bins
        .into_iter()
        .map(|(k, (c, m, l, n))| ProfilePoint {
            separation: k as f64 * h,
            correlation: c / n as f64,
            max_abs: m,
            local_prediction: l / n as f64,
            pairs: n,
        })
        .collect())
}

/// Largest normalized excess correlation over bump pairs more than four
/// bump widths apart, over all component pairs.
pub fn long_range_score(
    grid: &Grid,
    w: &DMatrix<f64>,
    local: &[DMatrix<f64>],
    width: f64,
    max_per_axis: usize,
) -> Result<f64> {
    let map = fdt_residual(grid, w, local, width, max_per_axis)?;
    Ok(score_from_map(&map))
}

/// The long-range score from an already computed residual map.
pub fn score_from_map(map: &FdtResidualMap) -> f64 {
    map.entries
        .iter()
        .filter(|e| e.separation > LONG_RANGE_WIDTHS * map.width * (1.0 + 1e-9))
        .map(|e| e.residual)
        .fold(0.0, f64::max)
}

/// Whether the sufficient condition for long-range correlations holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LongRangeConditions {
    /// Largest fluid speed in the steady state.
    pub u_max: f64,
    /// Max-norm of `∇·((β⁻¹ μ κ_μ - κ_β) ∇β)` at interior nodes.
    pub condition_residual: f64,
    /// True if either quantity exceeds the flag tolerance.
    pub predicted_long_range: bool,
    pub long_range_score: Option<f64>,
}

pub const LONG_RANGE_FLAG_TOLERANCE: f64 = 1e-8;

/// Evaluates the sufficient condition on a steady state.
pub fn long_range_conditions<E: EquationOfState, T: Transport>(
    disc: &Discretization<E, T>,
    steady: &SteadyState,
) -> Result<LongRangeConditions> {
    let grid = disc.grid;
    let d = grid.dim;
    let vals = disc.node_table(&steady.phi)?;
    let coeff: Vec<f64> = vals
        .iter()
        .map(|v| {
            let (kb, km) = disc.transport.kappa_partials(v.beta, v.mu);
            v.mu * km / v.beta - kb
        })
        .collect();
    let index = grid.interior_index();
    let mut div = vec![0.0; grid.num_interior()];
    let inv_vol = 1.0 / grid.cell_volume();
    for face in disc.faces() {
        let c = 0.5 * (coeff[face.ends[0]] + coeff[face.ends[1]]);
        let mut g = [0.0; 2];
        for &(node, cf) in &face.grad {
            for l in 0..d {
                g[l] += cf[l] * vals[node].beta;
            }
        }
        for &(node, cf) in &face.grad {
            if let Some(k) = index[node] {
                let s: f64 = (0..d).map(|l| cf[l] * c * g[l]).sum();
                div[k] -= face.weight * inv_vol * s;
            }
        }
    }
    let condition_residual = div.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let u_max = steady.max_speed();
    Ok(LongRangeConditions {
        u_max,
        condition_residual,
        predicted_long_range: u_max > LONG_RANGE_FLAG_TOLERANCE || condition_residual > LONG_RANGE_FLAG_TOLERANCE,
        long_range_score: None,
    })
}
