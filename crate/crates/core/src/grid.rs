//! Uniform node grids on `[0, 1]^d` and the face-centred evaluation points
//! used to assemble fluxes.
//!
//! Fluxes live on faces between neighbouring nodes. Each face carries a
//! quadrature weight, a two-point average and a gradient stencil. Nodal
//! divergence is defined as the negative adjoint of the face gradient,
//! `Div = -M⁻¹ Gᵀ W`, so discrete integration by parts holds exactly for
//! grid functions vanishing on the boundary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    /// Nodes per axis, boundary nodes included.
    pub n: usize,
}

/// One face of the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    pub weight: f64,
    /// The two nodes averaged onto the face.
    pub ends: [usize; 2],
    /// Gradient stencil: `(node, [∂_x coefficient, ∂_y coefficient])`.
    pub grad: Vec<(usize, [f64; 2])>,
}

impl Grid {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::Invalid(format!("dimension must be 1 or 2, got {dim}")));
        }
        if n < 5 {
            return Err(Error::Invalid(format!("need at least 5 nodes per axis, got {n}")));
        }
        Ok(Grid { dim, n })
    }

    pub fn h(&self) -> f64 {
        1.0 / (self.n - 1) as f64
    }

    /// Volume weight of one interior node.
    pub fn cell_volume(&self) -> f64 {
        self.h().powi(self.dim as i32)
    }

    /// Unknowns per node: energy, mass, momentum.
    pub fn ncomp(&self) -> usize {
        2 + self.dim
    }

    pub fn num_nodes(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn num_interior(&self) -> usize {
        (self.n - 2).pow(self.dim as u32)
    }

    pub fn num_unknowns(&self) -> usize {
        self.num_interior() * self.ncomp()
    }

    /// Axis indices of a flat node id; x varies fastest.
    pub fn coords(&self, node: usize) -> [usize; 2] {
        if self.dim == 1 {
            [node, 0]
        } else {
            [node % self.n, node / self.n]
        }
    }

    pub fn node(&self, i: usize, j: usize) -> usize {
        if self.dim == 1 {
            i
        } else {
            i + self.n * j
        }
    }

    pub fn position(&self, node: usize) -> [f64; 2] {
        let c = self.coords(node);
        let h = self.h();
        [c[0] as f64 * h, if self.dim == 2 { c[1] as f64 * h } else { 0.0 }]
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        let c = self.coords(node);
        (0..self.dim).any(|a| c[a] == 0 || c[a] == self.n - 1)
    }

    /// Flat ids of interior nodes in unknown order.
    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.num_nodes()).filter(|&k| !self.is_boundary(k)).collect()
    }

    /// Map from flat node id to interior index.
    pub fn interior_index(&self) -> Vec<Option<usize>> {
        let mut idx = vec![None; self.num_nodes()];
        for (k, node) in self.interior_nodes().into_iter().enumerate() {
            idx[node] = Some(k);
        }
        idx
    }

    /// Face set with weights summing to one.
    pub fn faces(&self) -> Vec<Face> {
        let n = self.n;
        let h = self.h();
        if self.dim == 1 {
            return (0..n - 1)
                .map(|i| Face {
                    weight: h,
                    ends: [i, i + 1],
                    grad: vec![(i, [-1.0 / h, 0.0]), (i + 1, [1.0 / h, 0.0])],
                })
                .collect();
        }
        // Tangential derivative: summation-by-parts first derivative.
        let tangential = |t: usize| -> Vec<(usize, f64)> {
            if t == 0 {
                vec![(0, -1.0 / h), (1, 1.0 / h)]
            } else if t == n - 1 {
                vec![(n - 2, -1.0 / h), (n - 1, 1.0 / h)]
            } else {
                vec![(t - 1, -0.5 / h), (t + 1, 0.5 / h)]
            }
        };
        let row_width = |t: usize| if t == 0 || t == n - 1 { 0.5 * h } else { h };
        let mut faces = Vec::with_capacity(2 * (n - 1) * n);
        for axis in 0..2 {
            for t in 0..n {
                for s in 0..n - 1 {
                    let at = |s: usize, t: usize| if axis == 0 { self.node(s, t) } else { self.node(t, s) };
                    let a = at(s, t);
                    let b = at(s + 1, t);
                    let mut grad: Vec<(usize, [f64; 2])> = Vec::new();
                    let mut push = |node: usize, ax: usize, c: f64| {
                        if let Some(e) = grad.iter_mut().find(|e| e.0 == node) {
                            e.1[ax] += c;
                        } else {
                            let mut v = [0.0; 2];
                            v[ax] = c;
                            grad.push((node, v));
                        }
                    };
                    push(a, axis, -1.0 / h);
                    push(b, axis, 1.0 / h);
                    for side in [s, s + 1] {
                        for (tt, c) in tangential(t) {
                            push(at(side, tt), 1 - axis, 0.5 * c);
                        }
                    }
                    faces.push(Face { weight: 0.5 * h * row_width(t), ends: [a, b], grad });
                }
            }
        }
        faces
    }
}

/// Linear grid operators on interior-node scalar functions with zero
/// boundary values.
#[derive(Debug, Clone)]
pub struct GridOps {
    pub grid: Grid,
    faces: Vec<Face>,
    index: Vec<Option<usize>>,
}

impl GridOps {
    pub fn new(grid: Grid) -> Self {
        GridOps { grid, faces: grid.faces(), index: grid.interior_index() }
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    fn value(&self, f: &[f64], node: usize) -> f64 {
        self.index[node].map_or(0.0, |k| f[k])
    }

    /// Face average of `f`.
    pub fn average(&self, f: &[f64]) -> Vec<f64> {
        self.faces.iter().map(|q| 0.5 * (self.value(f, q.ends[0]) + self.value(f, q.ends[1]))).collect()
    }

    /// Face gradient of `f`, `dim` entries per face.
    pub fn face_gradient(&self, f: &[f64]) -> Vec<f64> {
        let d = self.grid.dim;
        let mut out = vec![0.0; self.faces.len() * d];
        for (qi, q) in self.faces.iter().enumerate() {
            for &(node, c) in &q.grad {
                let v = self.value(f, node);
                for a in 0..d {
                    out[qi * d + a] += c[a] * v;
                }
            }
        }
        out
    }

    /// Nodal divergence of a face vector field (`dim` entries per face).
    pub fn divergence(&self, chi: &[f64]) -> Vec<f64> {
        let d = self.grid.dim;
        let scale = -1.0 / self.grid.cell_volume();
        let mut out = vec![0.0; self.grid.num_interior()];
        for (qi, q) in self.faces.iter().enumerate() {
            for &(node, c) in &q.grad {
                if let Some(k) = self.index[node] {
                    let mut s = 0.0;
                    for a in 0..d {
                        s += c[a] * chi[qi * d + a];
                    }
                    out[k] += scale * q.weight * s;
                }
            }
        }
        out
    }

    /// Central nodal gradient, component `axis`.
    pub fn gradient(&self, f: &[f64], axis: usize) -> Vec<f64> {
        let d = self.grid.dim;
        let avg = self.average(f);
        let mut chi = vec![0.0; self.faces.len() * d];
        for (qi, v) in avg.iter().enumerate() {
            chi[qi * d + axis] = *v;
        }
        self.divergence(&chi)
    }

    /// Central nodal divergence of a nodal vector field `h[axis][node]`.
    pub fn nodal_divergence(&self, h: &[Vec<f64>]) -> Vec<f64> {
        let d = self.grid.dim;
        let mut chi = vec![0.0; self.faces.len() * d];
        for (a, comp) in h.iter().enumerate().take(d) {
            for (qi, v) in self.average(comp).iter().enumerate() {
                chi[qi * d + a] = *v;
            }
        }
        self.divergence(&chi)
    }

    /// Compact Laplacian `Div(G f)`.
    pub fn laplacian(&self, f: &[f64]) -> Vec<f64> {
        self.divergence(&self.face_gradient(f))
    }

    /// Grid inner product.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.grid.cell_volume() * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
    }
}

/// Discrete operators: face gradient, average, divergence and Laplacian.
pub fn build_ops(grid: Grid) -> GridOps {
    GridOps::new(grid)
}
