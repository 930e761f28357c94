//! Time-periodic solution of the semidiscrete system
//! `L u' + nu D u = f~(t)`, `u(0) = u(T)`, through the fundamental matrix
//! `Theta(t) = exp(-nu L^{-1} D t)`.
//!
//! Everything is evaluated in the eigenbasis of the pencil `(D, L)`: with
//! `D V = L V diag(mu)` and `V^T L V = I`, the modal coordinates
//! `w = V^T L u` decouple into scalar equations `w_i' = -nu mu_i w_i + g_i(t)`
//! where `g = V^T f~`. The periodic initial value is then
//! `w_i(0) = (1 - e^{-nu mu_i T})^{-1} int_0^T e^{-nu mu_i (T - s)} g_i(s) ds`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fem::{FemPair, LoadAssembler, Mesh1D, DEFAULT_SPACE_QUAD_ORDER};
use crate::linalg::{generalized_eig, GenEigDecomp, SpdMatrix};
use crate::quadrature::GaussLegendre;

/// Default Gauss–Legendre order for time integrals.
pub const DEFAULT_TIME_QUAD_ORDER: usize = 5;

/// Smallest admissible `1 - e^{-nu mu_i T}`.
const CONTRACTION_GAP_MIN: f64 = 1e-14;

/// Source of the load vector `f~(t)` for a semidiscrete system.
pub trait Forcing {
    /// Writes `f~(t)` into `out`, whose length is the system dimension.
    fn load(&self, t: f64, out: &mut [f64]) -> Result<()>;
}

/// A space-time field `f(x, t)` on `(0, 1)` projected onto the hat basis.
#[derive(Debug, Clone)]
pub struct FieldForcing<F> {
    f: F,
    assembler: LoadAssembler,
}

impl<F: Fn(f64, f64) -> f64> FieldForcing<F> {
    pub fn new(f: F, mesh: &Mesh1D, quad_order: usize) -> Result<Self> {
        Ok(Self { f, assembler: LoadAssembler::new(mesh, quad_order)? })
    }

    pub fn field(&self) -> &F {
        &self.f
    }
}

impl<F: Fn(f64, f64) -> f64> Forcing for FieldForcing<F> {
    fn load(&self, t: f64, out: &mut [f64]) -> Result<()> {
        self.assembler.assemble_into(&self.f, t, out)
    }
}

/// Uniform time grid `t_j = j T / m`, `j = 0..=m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    m: usize,
    period: f64,
}

impl TimeGrid {
    pub fn new(m: usize, period: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("time grid needs at least one interval"));
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::invalid(format!("period must be positive, got {period}")));
        }
        Ok(Self { m, period })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Step size `k = T / m`.
    pub fn k(&self) -> f64 {
        self.period / self.m as f64
    }

    /// Interpolation constant `C_J(k) = k / pi`.
    pub fn c_j(&self) -> f64 {
        self.k() / PI
    }

    pub fn t(&self, j: usize) -> f64 {
        if j == self.m {
            self.period
        } else {
            j as f64 * self.k()
        }
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.m).map(|j| self.t(j))
    }
}

/// Composite Gauss–Legendre rule for time integrals: `panels` equal panels of
/// `order` points each over the integration interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeQuadrature {
    pub order: usize,
    pub panels: usize,
}

impl TimeQuadrature {
    pub fn new(order: usize, panels: usize) -> Result<Self> {
        if order == 0 || panels == 0 {
            return Err(Error::invalid("time quadrature needs positive order and panel count"));
        }
        Ok(Self { order, panels })
    }

    /// Default rule for a grid: one order-5 panel per time step.
    pub fn for_grid(grid: &TimeGrid) -> Self {
        Self { order: DEFAULT_TIME_QUAD_ORDER, panels: grid.m() }
    }
}

/// The semidiscrete periodic problem: matrices, their pencil decomposition,
/// diffusion coefficient, period and forcing.
#[derive(Debug, Clone)]
pub struct SemidiscreteSystem<S> {
    mass: DMatrix<f64>,
    stiffness: DMatrix<f64>,
    decomp: GenEigDecomp,
    nu: f64,
    period: f64,
    forcing: S,
    mesh: Option<Mesh1D>,
}

impl<F: Fn(f64, f64) -> f64> SemidiscreteSystem<FieldForcing<F>> {
    /// System for the assembled 1D pair with forcing `f(x, t)`.
    pub fn new(fem: &FemPair, nu: f64, period: f64, f: F) -> Result<Self> {
        Self::with_space_quad_order(fem, nu, period, f, DEFAULT_SPACE_QUAD_ORDER)
    }

    pub fn with_space_quad_order(
        fem: &FemPair,
        nu: f64,
        period: f64,
        f: F,
        quad_order: usize,
    ) -> Result<Self> {
        let forcing = FieldForcing::new(f, &fem.mesh, quad_order)?;
        let mut sys = Self::from_matrices(
            SpdMatrix::new(fem.mass.clone())?,
            SpdMatrix::new(fem.stiffness.clone())?,
            nu,
            period,
            forcing,
        )?;
        sys.mesh = Some(fem.mesh.clone());
        Ok(sys)
    }
}

impl<S: Forcing> SemidiscreteSystem<S> {
    /// System for an externally assembled pair; `forcing` supplies `f~(t)`
    /// directly in the matrices' basis.
    pub fn from_matrices(
        mass: SpdMatrix,
        stiffness: SpdMatrix,
        nu: f64,
        period: f64,
        forcing: S,
    ) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::invalid(format!("nu must be positive, got {nu}")));
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::invalid(format!("period must be positive, got {period}")));
        }
        let decomp = generalized_eig(&stiffness, &mass)?;
        Ok(Self {
            mass: mass.into_inner(),
            stiffness: stiffness.into_inner(),
            decomp,
            nu,
            period,
            forcing,
            mesh: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.decomp.dim()
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn mass(&self) -> &DMatrix<f64> {
        &self.mass
    }

    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.stiffness
    }

    pub fn decomp(&self) -> &GenEigDecomp {
        &self.decomp
    }

    pub fn forcing(&self) -> &S {
        &self.forcing
    }

    pub fn mesh(&self) -> Option<&Mesh1D> {
        self.mesh.as_ref()
    }

    /// `nu * mu_i`, the modal decay rates.
    fn rates(&self) -> impl Iterator<Item = f64> + '_ {
        self.decomp.eigenvalues.iter().map(move |&mu| self.nu * mu)
    }

    pub fn load(&self, t: f64) -> Result<DVector<f64>> {
        let mut out = DVector::zeros(self.dim());
        self.forcing.load(t, out.as_mut_slice())?;
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::LoadEvaluation { t });
        }
        Ok(out)
    }

    fn check_len(&self, v: &DVector<f64>) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: v.len() });
        }
        Ok(())
    }

    /// Modal coordinates `V^T L v`.
    pub fn to_modal(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(v)?;
        Ok(self.decomp.eigenvectors.tr_mul(&(&self.mass * v)))
    }

    pub fn from_modal(&self, w: &DVector<f64>) -> DVector<f64> {
        &self.decomp.eigenvectors * w
    }

    /// `Theta(t) v = V exp(-nu t diag(mu)) V^T L v`.
    pub fn theta_apply(&self, t: f64, v: &DVector<f64>) -> Result<DVector<f64>> {
        if !(t >= 0.0) {
            return Err(Error::invalid(format!("theta_apply needs t >= 0, got {t}")));
        }
        let mut w = self.to_modal(v)?;
        for (wi, rate) in w.iter_mut().zip(self.rates()) {
            *wi *= (-rate * t).exp();
        }
        Ok(self.from_modal(&w))
    }

    /// Modal integral `int_0^upper e^{-nu mu_i (upper - s)} (V^T f~(s))_i ds`
    /// with `panels` composite Gauss–Legendre panels of the given order.
    fn modal_load_integral(&self, upper: f64, order: usize, panels: usize) -> Result<DVector<f64>> {
        let n = self.dim();
        let rule = GaussLegendre::new(order)?;
        let width = upper / panels as f64;
        let rates: Vec<f64> = self.rates().collect();
        let mut total = DVector::zeros(n);
        let mut load = DVector::zeros(n);
        for p in 0..panels {
            let a = p as f64 * width;
            for (s, w) in rule.mapped(a, a + width) {
                self.forcing.load(s, load.as_mut_slice())?;
                if load.iter().any(|v| !v.is_finite()) {
                    return Err(Error::LoadEvaluation { t: s });
                }
                let g = self.decomp.eigenvectors.tr_mul(&load);
                for i in 0..n {
                    total[i] += w * (-rates[i] * (upper - s)).exp() * g[i];
                }
            }
        }
        Ok(total)
    }

    /// `int_0^upper Theta(upper - s) b(s) ds` with `b = L^{-1} f~`, using
    /// `quad.panels` panels over `(0, upper)`.
    pub fn load_integral(&self, upper: f64, quad: &TimeQuadrature) -> Result<DVector<f64>> {
        if !(upper > 0.0 && upper <= self.period * (1.0 + 1e-14)) {
            return Err(Error::invalid(format!(
                "load integral upper limit must lie in (0, T], got {upper}"
            )));
        }
        let w = self.modal_load_integral(upper, quad.order, quad.panels)?;
        Ok(self.from_modal(&w))
    }

    /// `(1 - e^{-nu mu_i T})` per mode, rejecting modes with no contraction.
    fn contraction_gaps(&self) -> Result<Vec<f64>> {
        self.rates()
            .enumerate()
            .map(|(mode, rate)| {
                let gap = -(-rate * self.period).exp_m1();
                if gap > CONTRACTION_GAP_MIN {
                    Ok(gap)
                } else {
                    Err(Error::NonContraction { mode, gap })
                }
            })
            .collect()
    }

    /// Modal periodic initial value `(I - Theta(T))^{-1} int_0^T ...`.
    fn periodic_initial_modal(&self, quad: &TimeQuadrature) -> Result<DVector<f64>> {
        let gaps = self.contraction_gaps()?;
        let mut w = self.modal_load_integral(self.period, quad.order, quad.panels)?;
        for (wi, gap) in w.iter_mut().zip(gaps) {
            *wi /= gap;
        }
        Ok(w)
    }

    /// Periodic coefficient trajectory sampled at every grid point.
    ///
    /// `quad.panels` must be a multiple of `grid.m()`; the panels of each time
    /// step are shared by every column, so column `j` is the periodic
    /// representation evaluated at `t_j` with `j * quad.panels / m` panels.
    pub fn solve_periodic(&self, grid: &TimeGrid, quad: &TimeQuadrature) -> Result<FullDiscreteSolution> {
        if (grid.period() - self.period).abs() > 1e-12 * self.period {
            return Err(Error::invalid(format!(
                "grid period {} differs from system period {}",
                grid.period(),
                self.period
            )));
        }
        let m = grid.m();
        if !quad.panels.is_multiple_of(m) {
            return Err(Error::invalid(format!(
                "time quadrature panels ({}) must be a multiple of m ({m})",
                quad.panels
            )));
        }
        let gaps = self.contraction_gaps()?;
        let n = self.dim();
        let k = grid.k();
        let sub = quad.panels / m;
        let width = k / sub as f64;
        let rule = GaussLegendre::new(quad.order)?;
        // Offsets of the quadrature nodes inside one step and their weights.
        let nodes: Vec<(f64, f64)> = (0..sub)
            .flat_map(|r| {
                let a = r as f64 * width;
                rule.mapped(a, a + width).collect::<Vec<_>>()
            })
            .collect();
        let per_step = nodes.len();
        let rates: Vec<f64> = self.rates().collect();
        // kernel[(i, c)] = w_c exp(-rate_i (k - offset_c))
        let kernel = DMatrix::from_fn(n, per_step, |i, c| {
            let (offset, w) = nodes[c];
            w * (-rates[i] * (k - offset)).exp()
        });
        let decay: Vec<f64> = rates.iter().map(|r| (-r * k).exp()).collect();

        // partial[:, j] = int_0^{t_j} e^{-rate (t_j - s)} g(s) ds
        let mut partial = DMatrix::<f64>::zeros(n, m + 1);
        const CHUNK: usize = 64;
        let mut loads = DMatrix::zeros(n, CHUNK * per_step);
        let mut buf = vec![0.0; n];
        let mut j0 = 0;
        while j0 < m {
            let steps = CHUNK.min(m - j0);
            for dj in 0..steps {
                let tj = grid.t(j0 + dj);
                for (c, &(offset, _)) in nodes.iter().enumerate() {
                    let s = tj + offset;
                    self.forcing.load(s, &mut buf)?;
                    if buf.iter().any(|v| !v.is_finite()) {
                        return Err(Error::LoadEvaluation { t: s });
                    }
                    loads.column_mut(dj * per_step + c).copy_from_slice(&buf);
                }
            }
            let block = loads.columns(0, steps * per_step);
            let modal = self.decomp.eigenvectors.tr_mul(&block);
            for dj in 0..steps {
                let j = j0 + dj;
                for i in 0..n {
                    let mut inc = 0.0;
                    for c in 0..per_step {
                        inc += kernel[(i, c)] * modal[(i, dj * per_step + c)];
                    }
                    partial[(i, j + 1)] = decay[i] * partial[(i, j)] + inc;
                }
            }
            j0 += steps;
        }

        let initial: Vec<f64> = (0..n).map(|i| partial[(i, m)] / gaps[i]).collect();
        let modal = DMatrix::from_fn(n, m + 1, |i, j| {
            (-rates[i] * grid.t(j)).exp() * initial[i] + partial[(i, j)]
        });
        let coeffs = &self.decomp.eigenvectors * modal;
        Ok(FullDiscreteSolution { coeffs, grid: *grid, mesh: self.mesh.clone(), quad: *quad })
    }

    /// Residual `max |L du/dt + nu D u - f~(t)|` of the exact semidiscrete
    /// trajectory at `sample_times`, the trajectory being re-evaluated from
    /// the periodic representation (not read off the interpolant). The time
    /// derivative is a fourth-order central difference of that representation.
    pub fn ode_residual(&self, sol: &FullDiscreteSolution, sample_times: &[f64]) -> Result<f64> {
        self.check_solution(sol)?;
        let quad = sol.quad;
        let initial = self.periodic_initial_modal(&quad)?;
        let rates: Vec<f64> = self.rates().collect();
        let delta = 1e-3 * self.period;
        let mut worst = 0.0f64;
        for &t in sample_times {
            if !(t > 0.0 && t < self.period) {
                return Err(Error::invalid(format!("sample time {t} must lie inside (0, T)")));
            }
            // One panel count for the whole stencil keeps the quadrature
            // error smooth across it.
            let panels = ((quad.panels as f64) * (t + 2.0 * delta) / self.period).ceil().max(1.0) as usize;
            let at = |tau: f64| -> Result<DVector<f64>> {
                let mut w = self.modal_load_integral(tau, quad.order, panels)?;
                for i in 0..w.len() {
                    w[i] += (-rates[i] * tau).exp() * initial[i];
                }
                Ok(w)
            };
            let wm2 = at(t - 2.0 * delta)?;
            let wm1 = at(t - delta)?;
            let w0 = at(t)?;
            let wp1 = at(t + delta)?;
            let wp2 = at(t + 2.0 * delta)?;
            let dw = (&wm2 - &wp2 + (&wp1 - &wm1) * 8.0) / (12.0 * delta);
            let u = self.from_modal(&w0);
            let du = self.from_modal(&dw);
            let r = &self.mass * du + &self.stiffness * u * self.nu - self.load(t)?;
            worst = worst.max(r.amax());
        }
        Ok(worst)
    }

    /// The same residual evaluated on the piecewise-linear interpolant, whose
    /// time derivative is the constant slope on each step. It is only `O(k)`
    /// accurate.
    pub fn interpolant_residual(&self, sol: &FullDiscreteSolution, sample_times: &[f64]) -> Result<f64> {
        self.check_solution(sol)?;
        let grid = sol.grid;
        let mut worst = 0.0f64;
        for &t in sample_times {
            if !(t > 0.0 && t < self.period) {
                return Err(Error::invalid(format!("sample time {t} must lie inside (0, T)")));
            }
            let j = ((t / grid.k()).floor() as usize).min(grid.m() - 1);
            let theta = (t - grid.t(j)) / grid.k();
            let left = sol.coeffs.column(j);
            let right = sol.coeffs.column(j + 1);
            let u = left * (1.0 - theta) + right * theta;
            let du = (right - left) / grid.k();
            let r = &self.mass * du + &self.stiffness * u * self.nu - self.load(t)?;
            worst = worst.max(r.amax());
        }
        Ok(worst)
    }

    fn check_solution(&self, sol: &FullDiscreteSolution) -> Result<()> {
        if sol.coeffs.nrows() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: sol.coeffs.nrows() });
        }
        if (sol.grid.period() - self.period).abs() > 1e-12 * self.period {
            return Err(Error::invalid("solution period differs from system period"));
        }
        Ok(())
    }
}

/// Nodal coefficients of the full-discrete approximation on the space-time
/// grid: column `j` is the semidiscrete coefficient vector at `t_j`. The
/// approximation itself is the bilinear interpolant of these columns.
#[derive(Debug, Clone, PartialEq)]
pub struct FullDiscreteSolution {
    pub coeffs: DMatrix<f64>,
    pub grid: TimeGrid,
    pub mesh: Option<Mesh1D>,
    pub quad: TimeQuadrature,
}

impl FullDiscreteSolution {
    pub fn dim(&self) -> usize {
        self.coeffs.nrows()
    }

    /// `|col_0 - col_m|_max` relative to the largest column max-norm.
    pub fn periodicity_gap(&self) -> f64 {
        let m = self.grid.m();
        let diff = (self.coeffs.column(0) - self.coeffs.column(m)).amax();
        let scale = self.coeffs.amax();
        if scale == 0.0 {
            diff
        } else {
            diff / scale
        }
    }

    fn mesh(&self) -> Result<&Mesh1D> {
        self.mesh
            .as_ref()
            .ok_or_else(|| Error::invalid("solution has no 1D mesh attached"))
    }

    /// Interior-node coefficient with the homogeneous boundary values
    /// appended: global node `g` in `0..=n_elements`.
    fn nodal(&self, g: usize, j: usize) -> f64 {
        if g == 0 || g > self.dim() {
            0.0
        } else {
            self.coeffs[(g - 1, j)]
        }
    }

    /// Locates `(element, local x in [0,1], step, local t in [0,1])`.
    fn locate(&self, x: f64, t: f64) -> Result<(usize, f64, usize, f64)> {
        let mesh = self.mesh()?;
        if !(0.0..=1.0).contains(&x) || !(0.0..=self.grid.period()).contains(&t) {
            return Err(Error::invalid(format!("point ({x}, {t}) outside the space-time domain")));
        }
        let ne = mesh.n_elements();
        let e = ((x / mesh.h()).floor() as usize).min(ne - 1);
        let sx = x / mesh.h() - e as f64;
        let m = self.grid.m();
        let j = ((t / self.grid.k()).floor() as usize).min(m - 1);
        let st = t / self.grid.k() - j as f64;
        Ok((e, sx, j, st))
    }

    /// Value of the bilinear interpolant at `(x, t)`.
    pub fn value(&self, x: f64, t: f64) -> Result<f64> {
        let (e, sx, j, st) = self.locate(x, t)?;
        let at = |jj| self.nodal(e, jj) * (1.0 - sx) + self.nodal(e + 1, jj) * sx;
        Ok(at(j) * (1.0 - st) + at(j + 1) * st)
    }

    /// `d/dx` of the bilinear interpolant at `(x, t)` (one-sided on nodes).
    pub fn dx(&self, x: f64, t: f64) -> Result<f64> {
        let (e, _, j, st) = self.locate(x, t)?;
        let h = self.mesh()?.h();
        let at = |jj| (self.nodal(e + 1, jj) - self.nodal(e, jj)) / h;
        Ok(at(j) * (1.0 - st) + at(j + 1) * st)
    }

    /// Element endpoint values `(left, right)` of element `e` at step `j`.
    pub(crate) fn element_values(&self, e: usize, j: usize) -> (f64, f64) {
        (self.nodal(e, j), self.nodal(e + 1, j))
    }
}
