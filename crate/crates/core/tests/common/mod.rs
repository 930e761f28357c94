//! Reference integrator shared by the integration tests: Crank–Nicolson in
//! time on the assembled P1 system, made periodic by fixed-point shooting.
//! It shares nothing with the eigenbasis solver except the matrices and the
//! load vectors.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use periodic_heat::{load_vector, FemPair};

pub struct CnOracle {
    /// Nodal coefficients at `t = i * T / steps`, `i = 0..=steps`.
    pub states: Vec<DVector<f64>>,
    pub steps: usize,
    pub shooting_iterations: usize,
}

/// Periodic Crank–Nicolson trajectory with `steps` uniform steps over `(0, T)`.
pub fn cn_periodic(
    fem: &FemPair,
    nu: f64,
    period: f64,
    f: impl Fn(f64, f64) -> f64,
    steps: usize,
) -> CnOracle {
    let dt = period / steps as f64;
    let lhs = &fem.mass + &fem.stiffness * (0.5 * nu * dt);
    let rhs = &fem.mass - &fem.stiffness * (0.5 * nu * dt);
    let lhs_inv = lhs.lu().try_inverse().expect("CN matrix is nonsingular");
    let step_matrix: DMatrix<f64> = &lhs_inv * rhs;
    let loads: Vec<DVector<f64>> = (0..=steps)
        .map(|i| load_vector(&f, i as f64 * dt, &fem.mesh, 5).unwrap())
        .collect();
    let forcing: Vec<DVector<f64>> = (0..steps)
        .map(|i| &lhs_inv * ((&loads[i] + &loads[i + 1]) * (0.5 * dt)))
        .collect();

    let mut u0 = DVector::zeros(fem.dim());
    let mut states = Vec::new();
    // The period map is affine with contraction factor about exp(-nu pi^2 T),
    // so plain fixed-point iteration converges quickly.
    for iteration in 1..=200 {
        states.clear();
        states.push(u0.clone());
        let mut u = u0.clone();
        for g in &forcing {
            u = &step_matrix * u + g;
            states.push(u.clone());
        }
        let change = (&u - &u0).amax();
        let scale = u.amax().max(1e-300);
        u0 = u;
        if change <= 1e-15 * scale {
            return CnOracle { states, steps, shooting_iterations: iteration };
        }
    }
    panic!("shooting iteration did not converge");
}

impl CnOracle {
    /// States at the `m + 1` points of a coarser uniform grid.
    pub fn sample(&self, m: usize) -> Vec<DVector<f64>> {
        assert_eq!(self.steps % m, 0);
        let stride = self.steps / m;
        (0..=m).map(|j| self.states[j * stride].clone()).collect()
    }
}
