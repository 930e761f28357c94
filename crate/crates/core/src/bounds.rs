//! Constructive constants and a priori error bounds for the full-discrete
//! periodic approximation.
//!
//! All quantities are evaluated in ordinary floating point. They are not
//! rigorous enclosures: rounding is not controlled, and every
//! [`BoundReport`] says so through `rigorous_rounding = false`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{cholesky, matexp, two_norm, GenEigDecomp, SpdMatrix};

/// Exponentials below this are replaced by zero.
pub const UNDERFLOW_CLAMP: f64 = 1e-300;

/// Relative tolerance of the spectral vs literal kappa1 cross-check.
pub const KAPPA_CHECK_TOL: f64 = 1e-10;

/// Largest dimension for which [`kappa1_checked`] runs the literal
/// matrix-exponential route.
pub const KAPPA_CHECK_MAX_DIM: usize = 64;

fn clamped_exp(x: f64) -> (f64, bool) {
    let v = x.exp();
    if v < UNDERFLOW_CLAMP {
        (0.0, true)
    } else {
        (v, false)
    }
}

/// Inputs shared by the continuous and full-discrete bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundInputs {
    pub nu: f64,
    pub period: f64,
    pub lambda1: f64,
    pub c_p: f64,
    pub c_omega: f64,
    pub c_inv: f64,
    pub c_j: f64,
    /// `||f||_{L^2 L^2}`.
    pub f_norm: f64,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("nu", self.nu),
            ("T", self.period),
            ("lambda1", self.lambda1),
            ("c_p", self.c_p),
            ("c_omega", self.c_omega),
            ("c_inv", self.c_inv),
            ("c_j", self.c_j),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.f_norm >= 0.0 && self.f_norm.is_finite()) {
            return Err(Error::invalid(format!("f_norm must be nonnegative, got {}", self.f_norm)));
        }
        Ok(())
    }

    /// `(1 - e^{-nu lambda1 T})^{-1}` and whether the exponential was clamped.
    fn inverse_gap(&self) -> (f64, bool) {
        let (e, clamped) = clamped_exp(-self.nu * self.lambda1 * self.period);
        (1.0 / (1.0 - e), clamped)
    }
}

/// `kappa1 = ||E_h(T)||_{L(H^1_0)} = exp(-nu T mu_min)`, clamped to zero below
/// [`UNDERFLOW_CLAMP`].
pub fn kappa1(decomp: &GenEigDecomp, nu: f64, period: f64) -> Result<f64> {
    if !(nu > 0.0 && period > 0.0) {
        return Err(Error::invalid("kappa1 needs nu > 0 and T > 0"));
    }
    let (k, _) = clamped_exp(-nu * period * decomp.mu_min());
    if !(k < 1.0) {
        return Err(Error::KappaNotContractive(k));
    }
    Ok(k)
}

/// The matrix norm `||D^{T/2} exp(-nu T L^{-1} D) D^{-T/2}||_2` with
/// `D = D^{1/2} D^{T/2}` the Cholesky factorization, computed literally
/// through the matrix exponential.
pub fn kappa1_literal(mass: &SpdMatrix, stiffness: &SpdMatrix, nu: f64, period: f64) -> Result<f64> {
    let n = mass.dim();
    if stiffness.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: stiffness.dim() });
    }
    let l_inv_d = mass
        .as_matrix()
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite { index: 0, value: f64::NAN })?
        .solve(stiffness.as_matrix());
    let propagator = matexp(&(l_inv_d * (-nu * period)))?;
    let g = cholesky(stiffness)?;
    // G^T E G^{-T}: right-multiplying by G^{-T} solves X G^T = G^T E.
    let left = g.transpose() * propagator;
    let conj = g
        .solve_lower_triangular(&left.transpose())
        .ok_or_else(|| Error::invalid("singular Cholesky factor"))?
        .transpose();
    Ok(two_norm(&conj))
}

/// Spectral kappa1, cross-validated against [`kappa1_literal`] when the
/// dimension is at most [`KAPPA_CHECK_MAX_DIM`].
pub fn kappa1_checked(
    mass: &DMatrix<f64>,
    stiffness: &DMatrix<f64>,
    decomp: &GenEigDecomp,
    nu: f64,
    period: f64,
) -> Result<f64> {
    let spectral = kappa1(decomp, nu, period)?;
    if decomp.dim() <= KAPPA_CHECK_MAX_DIM {
        let literal = kappa1_literal(
            &SpdMatrix::new(mass.clone())?,
            &SpdMatrix::new(stiffness.clone())?,
            nu,
            period,
        )?;
        let agree = if spectral == 0.0 {
            literal < UNDERFLOW_CLAMP
        } else {
            (spectral - literal).abs() <= KAPPA_CHECK_TOL * spectral
        };
        if !agree {
            return Err(Error::KappaMismatch { spectral, literal });
        }
    }
    Ok(spectral)
}

/// Bounds on the exact periodic solution in terms of `||f||`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContinuousBounds {
    /// `||u(0)||_{L^2}` via the Poincaré constant.
    pub u0_l2_a: f64,
    /// `||u(0)||_{L^2}` via `sqrt(T)`.
    pub u0_l2_b: f64,
    /// `||grad u(0)||_{L^2}`.
    pub u0_grad: f64,
    /// `||u_t||_{L^2 L^2}`.
    pub ut_norm: f64,
    /// Bound on `||u(T)||^2 + nu ||grad u||^2_{L^2 L^2}`.
    pub energy: f64,
}

pub fn continuous_bounds(input: &BoundInputs) -> Result<ContinuousBounds> {
    input.validate()?;
    let (a, _) = input.inverse_gap();
    let f = input.f_norm;
    let sqrt_nu = input.nu.sqrt();
    Ok(ContinuousBounds {
        u0_l2_a: a * (input.c_p / sqrt_nu) * f,
        u0_l2_b: a * input.period.sqrt() * f,
        u0_grad: a * f / sqrt_nu,
        ut_norm: f,
        energy: (input.c_p * input.c_p / input.nu + input.period * a * a) * f * f,
    })
}

/// Norms entering the semidiscrete error bounds of the nonhomogeneous
/// initial value problem with initial value `xi0` and discrete initial value
/// `zeta_h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NonhomInputs {
    pub f_norm: f64,
    /// `||grad xi0||_{L^2}`.
    pub grad_xi0: f64,
    /// `||grad zeta_h||_{L^2}`.
    pub grad_zeta_h: f64,
    /// `||xi0||_{L^2}`.
    pub xi0_l2: f64,
    /// `||zeta_h||_{L^2}`.
    pub zeta_h_l2: f64,
    /// `||xi0 - zeta_h||_{L^2}`.
    pub xi0_minus_zeta_h_l2: f64,
    pub nu: f64,
    pub c_p: f64,
    pub c_omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NonhomBounds {
    /// `||xi_t||_{L^2 L^2}`.
    pub xi_t: f64,
    /// `||xi||_{L^2 H^1_0}`.
    pub xi_h1: f64,
    /// `||(xi_h)_t||_{L^2 L^2}`.
    pub xi_h_t: f64,
    /// `||xi_h||_{L^2 H^1_0}`.
    pub xi_h_h1: f64,
    /// `||xi - xi_h||_{L^2 H^1_0}`.
    pub error_h1: f64,
    /// `||(xi - xi_h)(T)||_{L^2}`.
    pub error_l2_at_t: f64,
}

pub fn nonhom_bounds(input: &NonhomInputs) -> Result<NonhomBounds> {
    let all = [
        input.f_norm,
        input.grad_xi0,
        input.grad_zeta_h,
        input.xi0_l2,
        input.zeta_h_l2,
        input.xi0_minus_zeta_h_l2,
        input.c_p,
        input.c_omega,
    ];
    if all.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err(Error::invalid("nonhomogeneous bound inputs must be nonnegative"));
    }
    if !(input.nu > 0.0 && input.nu.is_finite()) {
        return Err(Error::invalid("nu must be positive"));
    }
    let nu = input.nu;
    let sqrt_nu = nu.sqrt();
    let f = input.f_norm;
    let c2 = input.c_omega * input.c_omega;
    let brace = 4.0 * f * f + nu * (input.grad_xi0.powi(2) + input.grad_zeta_h.powi(2));
    let gap2 = input.xi0_minus_zeta_h_l2.powi(2);
    Ok(NonhomBounds {
        xi_t: f + sqrt_nu * input.grad_xi0,
        xi_h1: input.c_p / nu * f + input.xi0_l2 / sqrt_nu,
        xi_h_t: f + sqrt_nu * input.grad_zeta_h,
        xi_h_h1: input.c_p / nu * f + input.zeta_h_l2 / sqrt_nu,
        error_h1: (c2 / (nu * nu) * brace + gap2 / (2.0 * nu)).sqrt(),
        error_l2_at_t: (2.0 / nu * c2 * brace + gap2).sqrt(),
    })
}

/// `(K1, K2)` for the given parameters.
pub fn k_constants(nu: f64, period: f64, lambda1: f64, kappa1: f64) -> Result<(f64, f64)> {
    if !(nu > 0.0 && period > 0.0 && lambda1 > 0.0) {
        return Err(Error::invalid("k_constants needs nu, T, lambda1 > 0"));
    }
    if !(0.0..1.0).contains(&kappa1) {
        return Err(Error::KappaNotContractive(kappa1));
    }
    let (e, _) = clamped_exp(-nu * lambda1 * period);
    let a = 1.0 / (1.0 - e);
    let contraction = (1.0 - kappa1).powi(-2);
    let k1 = 2.0 / nu.sqrt() * a * (2.0 + contraction).sqrt();
    let k2 = (4.0 + 5.0 * a * a + (1.0 + a * a) * contraction).sqrt() / nu;
    Ok((k1, k2))
}

/// Right-hand sides of the `L^2 H^1_0` and `L^2 L^2` full-discrete error
/// bounds.
pub fn full_discrete_bounds(input: &BoundInputs, k2: f64, kappa1: f64) -> Result<(f64, f64)> {
    input.validate()?;
    if !(0.0..1.0).contains(&kappa1) {
        return Err(Error::KappaNotContractive(kappa1));
    }
    let time_factor = (2.0 - kappa1) / (1.0 - kappa1);
    let h1 = k2 * input.c_omega + input.c_inv * input.c_j * time_factor;
    let l2 = ((3.0 - 2.0 * kappa1) / (1.0 - kappa1) * (2.0 / input.nu) + 2.0 * k2)
        * input.c_omega.powi(2)
        + time_factor * input.c_j;
    Ok((h1 * input.f_norm, l2 * input.f_norm))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundReport {
    pub kappa1: f64,
    pub k1: f64,
    pub k2: f64,
    pub h1_bound: f64,
    pub l2_bound: f64,
    pub continuous: ContinuousBounds,
    /// Always false: the values carry uncontrolled floating-point rounding.
    pub rigorous_rounding: bool,
    /// True when `exp(-nu lambda1 T)` fell below [`UNDERFLOW_CLAMP`] and was
    /// replaced by zero.
    pub underflow_clamped: bool,
}

pub fn bound_report(input: &BoundInputs, kappa1: f64) -> Result<BoundReport> {
    input.validate()?;
    let (k1, k2) = k_constants(input.nu, input.period, input.lambda1, kappa1)?;
    let (h1_bound, l2_bound) = full_discrete_bounds(input, k2, kappa1)?;
    let continuous = continuous_bounds(input)?;
    let (_, underflow_clamped) = input.inverse_gap();
    Ok(BoundReport {
        kappa1,
        k1,
        k2,
        h1_bound,
        l2_bound,
        continuous,
        rigorous_rounding: false,
        underflow_clamped,
    })
}

impl BoundReport {
    /// `key=value` lines.
    pub fn to_key_values(&self) -> String {
        let c = &self.continuous;
        let rows: [(&str, String); 13] = [
            ("kappa1", format!("{:.17e}", self.kappa1)),
            ("K1", format!("{:.17e}", self.k1)),
            ("K2", format!("{:.17e}", self.k2)),
            ("h1_bound", format!("{:.17e}", self.h1_bound)),
            ("l2_bound", format!("{:.17e}", self.l2_bound)),
            ("u0_l2_a", format!("{:.17e}", c.u0_l2_a)),
            ("u0_l2_b", format!("{:.17e}", c.u0_l2_b)),
            ("u0_grad", format!("{:.17e}", c.u0_grad)),
            ("ut_norm", format!("{:.17e}", c.ut_norm)),
            ("energy", format!("{:.17e}", c.energy)),
            ("rigorous_rounding", self.rigorous_rounding.to_string()),
            ("underflow_clamped", self.underflow_clamped.to_string()),
            ("rounding", "non-rigorous floating point".to_string()),
        ];
        rows.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }
}
