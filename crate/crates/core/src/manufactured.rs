//! Manufactured periodic solution `u(x, t) = sin(2 pi x) sin(2 pi t + beta)` on
//! `(0, 1) x (0, 1)` and exact-error measurement of full-discrete solutions.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::periodic::FullDiscreteSolution;
use crate::quadrature::{pairwise_sum, GaussLegendre};

/// Default tensor Gauss–Legendre order per space-time cell for error norms.
pub const DEFAULT_ERROR_QUAD_ORDER: usize = 5;

const TWO_PI: f64 = 2.0 * PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ManufacturedProblem {
    pub nu: f64,
    pub beta: f64,
}

/// Exact solution, its x-derivative and the forcing at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactValues {
    pub u: f64,
    pub du_dx: f64,
    pub f: f64,
}

impl ManufacturedProblem {
    pub fn new(nu: f64, beta: f64) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::invalid(format!("nu must be positive, got {nu}")));
        }
        if !beta.is_finite() {
            return Err(Error::invalid("beta must be finite"));
        }
        Ok(Self { nu, beta })
    }

    /// The period is fixed to 1.
    pub fn period(&self) -> f64 {
        1.0
    }

    pub fn eval_exact(&self, x: f64, t: f64) -> ExactValues {
        let (sx, cx) = (TWO_PI * x).sin_cos();
        let (st, ct) = (TWO_PI * t + self.beta).sin_cos();
        ExactValues {
            u: sx * st,
            du_dx: TWO_PI * cx * st,
            f: sx * (TWO_PI * ct + TWO_PI * TWO_PI * self.nu * st),
        }
    }

    pub fn u(&self, x: f64, t: f64) -> f64 {
        self.eval_exact(x, t).u
    }

    /// `f = u_t - nu u_xx`.
    pub fn forcing(&self, x: f64, t: f64) -> f64 {
        self.eval_exact(x, t).f
    }

    /// A `Fn(x, t)` closure for the forcing, suitable for a
    /// [`SemidiscreteSystem`](crate::periodic::SemidiscreteSystem).
    pub fn forcing_fn(&self) -> impl Fn(f64, f64) -> f64 + Send + Sync + Copy {
        let p = *self;
        move |x, t| p.forcing(x, t)
    }

    /// `||f||_{L^2 L^2} = sqrt(pi^2 + 4 pi^4 nu^2)`; the cross term integrates
    /// to zero over a full period, so beta drops out.
    pub fn f_norm_analytic(&self) -> f64 {
        (PI * PI + 4.0 * PI.powi(4) * self.nu * self.nu).sqrt()
    }

    /// `||u||_{L^2 L^2} = 1/2`.
    pub fn u_norm_l2(&self) -> f64 {
        0.5
    }

    /// `||u||_{L^2 H^1_0} = pi`.
    pub fn u_norm_h1(&self) -> f64 {
        PI
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorReport {
    /// `||u - P_h^k u||_{L^2 H^1_0}` (spatial gradient only).
    pub err_h1: f64,
    /// `||u - P_h^k u||_{L^2 L^2}`.
    pub err_l2: f64,
    /// Gauss–Legendre points per direction in each space-time cell.
    pub quad_order: usize,
    pub cells: usize,
}

/// Exact errors of the bilinear interpolant of `sol` against the
/// manufactured solution by tensor Gauss–Legendre quadrature on every
/// space-time cell.
///
/// Cell contributions are summed pairwise in a fixed (time-major) order, so
/// the result does not depend on the thread count.
pub fn aposteriori_errors(
    sol: &FullDiscreteSolution,
    problem: &ManufacturedProblem,
    quad_order: usize,
) -> Result<ErrorReport> {
    if quad_order < 4 {
        return Err(Error::invalid(format!("error quadrature order must be at least 4, got {quad_order}")));
    }
    let mesh = sol
        .mesh
        .as_ref()
        .ok_or_else(|| Error::invalid("error measurement needs a 1D mesh"))?;
    if sol.coeffs.nrows() != mesh.dim() {
        return Err(Error::DimensionMismatch { expected: mesh.dim(), found: sol.coeffs.nrows() });
    }
    let grid = sol.grid;
    if sol.coeffs.ncols() != grid.m() + 1 {
        return Err(Error::DimensionMismatch { expected: grid.m() + 1, found: sol.coeffs.ncols() });
    }
    if (grid.period() - problem.period()).abs() > 1e-12 {
        return Err(Error::invalid("solution period must be 1 for the manufactured problem"));
    }

    let rule = GaussLegendre::new(quad_order)?;
    let unit: Vec<(f64, f64)> = rule.mapped(0.0, 1.0).collect();
    let h = mesh.h();
    let k = grid.k();
    let ne = mesh.n_elements();
    let m = grid.m();

    // The exact solution separates: precompute the space and time factors.
    let space: Vec<(f64, f64)> = (0..ne)
        .flat_map(|e| {
            unit.iter().map(move |&(s, _)| {
                let (sx, cx) = (TWO_PI * (e as f64 + s) * h).sin_cos();
                (sx, TWO_PI * cx)
            })
        })
        .collect();
    let q = unit.len();

    let per_step: Vec<(f64, f64)> = (0..m)
        .into_par_iter()
        .map(|j| {
            let t0 = grid.t(j);
            let time: Vec<f64> = unit
                .iter()
                .map(|&(s, _)| (TWO_PI * (t0 + s * k) + problem.beta).sin())
                .collect();
            let mut l2_cells = Vec::with_capacity(ne);
            let mut h1_cells = Vec::with_capacity(ne);
            for e in 0..ne {
                let (a0, b0) = sol.element_values(e, j);
                let (a1, b1) = sol.element_values(e, j + 1);
                let (mut l2, mut h1) = (0.0, 0.0);
                for (qt, &(st, wt)) in unit.iter().enumerate() {
                    let left = a0 + (a1 - a0) * st;
                    let right = b0 + (b1 - b0) * st;
                    let slope = (right - left) / h;
                    let tf = time[qt];
                    for (qx, &(sx, wx)) in unit.iter().enumerate() {
                        let (sin_x, dcos_x) = space[e * q + qx];
                        let approx = left + (right - left) * sx;
                        let du = sin_x * tf - approx;
                        let dg = dcos_x * tf - slope;
                        let w = wt * wx;
                        l2 += w * du * du;
                        h1 += w * dg * dg;
                    }
                }
                l2_cells.push(l2 * h * k);
                h1_cells.push(h1 * h * k);
            }
            (pairwise_sum(&l2_cells), pairwise_sum(&h1_cells))
        })
        .collect();

    let (l2_steps, h1_steps): (Vec<f64>, Vec<f64>) = per_step.into_iter().unzip();
    Ok(ErrorReport {
        err_h1: pairwise_sum(&h1_steps).sqrt(),
        err_l2: pairwise_sum(&l2_steps).sqrt(),
        quad_order,
        cells: ne * m,
    })
}

/// Least-squares slope of `log(err)` against `log(h)`.
pub fn slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::invalid("slope needs at least two points"));
    }
    if points.iter().any(|&(h, e)| !(h > 0.0 && e > 0.0) || !h.is_finite() || !e.is_finite()) {
        return Err(Error::invalid("slope needs positive mesh sizes and errors"));
    }
    if points.windows(2).any(|w| w[1].0 >= w[0].0) {
        return Err(Error::invalid("mesh sizes must be strictly decreasing"));
    }
    let n = points.len() as f64;
    let logs: Vec<(f64, f64)> = points.iter().map(|&(h, e)| (h.ln(), e.ln())).collect();
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|&(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = logs.iter().map(|&(x, _)| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}
