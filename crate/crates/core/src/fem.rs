//! Uniform piecewise-linear finite elements on `(0, 1)` with homogeneous
//! Dirichlet conditions.
//!
//! Boundary nodes are eliminated, so every vector and matrix here is indexed by
//! interior nodes only: index `i` belongs to the hat function centred at
//! `x = (i + 1) h`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

/// Default Gauss–Legendre order per element for load vectors.
pub const DEFAULT_SPACE_QUAD_ORDER: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    n_elements: usize,
    h: f64,
    nodes: Vec<f64>,
}

impl Mesh1D {
    pub fn uniform(n_elements: usize) -> Result<Self> {
        if n_elements < 2 {
            return Err(Error::invalid(format!(
                "mesh needs at least 2 elements for an interior node, got {n_elements}"
            )));
        }
        let h = 1.0 / n_elements as f64;
        let nodes = (1..n_elements).map(|i| i as f64 * h).collect();
        Ok(Self { n_elements, h, nodes })
    }

    /// Builds a mesh from interior node coordinates, which must be the
    /// uniform grid `h, 2h, ..., 1 - h`.
    pub fn from_interior_nodes(nodes: &[f64]) -> Result<Self> {
        let mesh = Self::uniform(nodes.len() + 1)?;
        let tol = 1e-12 * mesh.h;
        if nodes.iter().zip(&mesh.nodes).any(|(a, b)| (a - b).abs() > tol) {
            return Err(Error::invalid("only uniform meshes on (0, 1) are supported"));
        }
        Ok(mesh)
    }

    pub fn n_elements(&self) -> usize {
        self.n_elements
    }

    /// Number of interior nodes, i.e. the dimension of the discrete space.
    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
}

/// Assembled mass matrix `L_phi` and stiffness matrix `D_phi`.
#[derive(Debug, Clone, PartialEq)]
pub struct FemPair {
    pub mass: DMatrix<f64>,
    pub stiffness: DMatrix<f64>,
    pub mesh: Mesh1D,
}

impl FemPair {
    pub fn dim(&self) -> usize {
        self.mesh.dim()
    }
}

/// Mass and stiffness matrices of the uniform P1 space with `n_elements`
/// elements.
pub fn assemble(n_elements: usize) -> Result<FemPair> {
    let mesh = Mesh1D::uniform(n_elements)?;
    let n = mesh.dim();
    let h = mesh.h();
    let mut mass = DMatrix::zeros(n, n);
    let mut stiffness = DMatrix::zeros(n, n);
    for i in 0..n {
        mass[(i, i)] = 4.0 * h / 6.0;
        stiffness[(i, i)] = 2.0 / h;
        if i + 1 < n {
            mass[(i, i + 1)] = h / 6.0;
            mass[(i + 1, i)] = h / 6.0;
            stiffness[(i, i + 1)] = -1.0 / h;
            stiffness[(i + 1, i)] = -1.0 / h;
        }
    }
    Ok(FemPair { mass, stiffness, mesh })
}

/// Reusable load-vector assembler: caches the per-element quadrature
/// points and hat-function values.
#[derive(Debug, Clone)]
pub struct LoadAssembler {
    mesh: Mesh1D,
    // (reference coordinate in [0, 1], weight scaled by h)
    points: Vec<(f64, f64)>,
}

impl LoadAssembler {
    pub fn new(mesh: &Mesh1D, quad_order: usize) -> Result<Self> {
        if quad_order < 2 {
            return Err(Error::invalid(format!(
                "load vector quadrature order must be at least 2, got {quad_order}"
            )));
        }
        let rule = GaussLegendre::new(quad_order)?;
        let points = rule.mapped(0.0, 1.0).map(|(s, w)| (s, w * mesh.h())).collect();
        Ok(Self { mesh: mesh.clone(), points })
    }

    pub fn mesh(&self) -> &Mesh1D {
        &self.mesh
    }

    /// Writes `f~_i(t) = (f(., t), phi_i)` into `out`.
    pub fn assemble_into(&self, f: impl Fn(f64, f64) -> f64, t: f64, out: &mut [f64]) -> Result<()> {
        let n = self.mesh.dim();
        if out.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: out.len() });
        }
        out.fill(0.0);
        let h = self.mesh.h();
        for e in 0..self.mesh.n_elements() {
            let x0 = e as f64 * h;
            let (mut left, mut right) = (0.0, 0.0);
            for &(s, w) in &self.points {
                let x = x0 + s * h;
                let v = f(x, t);
                if !v.is_finite() {
                    return Err(Error::ForcingEvaluation { x, t });
                }
                left += w * v * (1.0 - s);
                right += w * v * s;
            }
            // Element e spans global nodes e and e + 1; interior index = global - 1.
            if e >= 1 {
                out[e - 1] += left;
            }
            if e < n {
                out[e] += right;
            }
        }
        Ok(())
    }

    pub fn assemble(&self, f: impl Fn(f64, f64) -> f64, t: f64) -> Result<DVector<f64>> {
        let mut out = DVector::zeros(self.mesh.dim());
        self.assemble_into(f, t, out.as_mut_slice())?;
        Ok(out)
    }
}

/// Load vector `f~(t)` by composite Gauss–Legendre of order `quad_order` per
/// element.
pub fn load_vector(
    f: impl Fn(f64, f64) -> f64,
    t: f64,
    mesh: &Mesh1D,
    quad_order: usize,
) -> Result<DVector<f64>> {
    LoadAssembler::new(mesh, quad_order)?.assemble(f, t)
}

/// Space-direction constants of the uniform P1 space on `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceConstants {
    /// `C_Omega(h)`, the projection-error constant.
    pub c_omega: f64,
    /// `C_inv(h)`, the inverse-inequality constant.
    pub c_inv: f64,
    /// Poincaré constant.
    pub c_p: f64,
    /// Lower bound of the smallest eigenvalue of `-d²/dx²`.
    pub lambda1: f64,
}

pub fn space_constants(mesh: &Mesh1D) -> SpaceConstants {
    let h = mesh.h();
    SpaceConstants {
        c_omega: h / PI,
        c_inv: 12f64.sqrt() / h,
        c_p: 1.0 / PI,
        lambda1: PI * PI,
    }
}
