//! Time-periodic solutions of the 1D heat equation `u_t - nu u_xx = f` on
//! `(0, 1)` with homogeneous Dirichlet data and `u(0) = u(T)`.
//!
//! The discretization is conforming P1 finite elements in space; in time the
//! semidiscrete periodic solution is represented exactly through its
//! fundamental matrix and sampled on a uniform grid, with the forcing
//! integrals evaluated by Gauss–Legendre quadrature. Alongside the solver the
//! crate evaluates a priori error bounds for the fully discrete scheme and
//! measures actual errors against a manufactured solution.
//!
//! ```
//! use periodic_heat::{assemble, ManufacturedProblem, SemidiscreteSystem, TimeGrid, TimeQuadrature};
//!
//! let problem = ManufacturedProblem::new(1.0, 0.0)?;
//! let fem = assemble(8)?;
//! let sys = SemidiscreteSystem::new(&fem, 1.0, 1.0, problem.forcing_fn())?;
//! let grid = TimeGrid::new(64, 1.0)?;
//! let sol = sys.solve_periodic(&grid, &TimeQuadrature::for_grid(&grid))?;
//! assert!(sol.periodicity_gap() < 1e-12);
//! # Ok::<(), periodic_heat::Error>(())
//! ```

pub mod bounds;
pub mod error;
pub mod fem;
pub mod linalg;
pub mod manufactured;
pub mod periodic;
pub mod quadrature;
pub mod study;

pub use bounds::{
    bound_report, continuous_bounds, full_discrete_bounds, k_constants, kappa1, kappa1_checked, kappa1_literal,
    nonhom_bounds, BoundInputs, BoundReport, ContinuousBounds, NonhomBounds, NonhomInputs,
};
pub use error::{Error, Result};
pub use fem::{assemble, load_vector, space_constants, FemPair, LoadAssembler, Mesh1D, SpaceConstants};
pub use linalg::{cholesky, generalized_eig, matexp, two_norm, GenEigDecomp, SpdMatrix};
pub use manufactured::{aposteriori_errors, slope, ErrorReport, ManufacturedProblem};
pub use periodic::{FieldForcing, Forcing, FullDiscreteSolution, SemidiscreteSystem, TimeGrid, TimeQuadrature};
pub use quadrature::{pairwise_sum, GaussLegendre};
pub use study::{run_study, StudyConfig, StudyOutcome, StudyRow};
