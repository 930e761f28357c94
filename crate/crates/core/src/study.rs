//! Convergence study over `(nu, beta, n)` against the manufactured solution,
//! joined with the a priori bounds and written as CSV.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{bound_report, kappa1_checked, BoundInputs, BoundReport};
use crate::error::{Error, Result};
use crate::fem::{assemble, space_constants};
use crate::manufactured::{aposteriori_errors, ErrorReport, ManufacturedProblem};
use crate::periodic::{FullDiscreteSolution, SemidiscreteSystem, TimeGrid, TimeQuadrature};

pub const CSV_HEADER: &str =
    "nu,beta,n,m,h,k,kappa1,K1,K2,err_h1,err_l2,bound_h1,bound_l2,ratio_h1,ratio_l2,runtime_ms";

/// How the number of time intervals follows from `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MRule {
    /// `m = n^2`, i.e. `k = h^2`.
    #[default]
    NSquared,
    /// `m_list[i]` pairs with `n_list[i]`.
    Explicit,
}

/// Study configuration; also the flat JSON config-file schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub nu_list: Vec<f64>,
    pub beta_list: Vec<f64>,
    /// Numbers of elements; `h = 1/n`.
    pub n_list: Vec<usize>,
    pub m_rule: MRule,
    pub m_list: Vec<usize>,
    #[serde(rename = "T")]
    pub period: f64,
    /// Gauss–Legendre order for load vectors, time integrals and error norms.
    pub quad_order: usize,
    pub output: Option<PathBuf>,
    /// When false, `runtime_ms` is written as 0 so the CSV is reproducible
    /// byte for byte.
    pub record_runtime: bool,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            nu_list: vec![0.1, 1.0, 10.0],
            beta_list: vec![0.0, 0.5 * PI],
            n_list: vec![8, 16, 32, 64, 128],
            m_rule: MRule::NSquared,
            m_list: Vec::new(),
            period: 1.0,
            quad_order: 5,
            output: None,
            record_runtime: true,
        }
    }
}

/// One `(nu, beta, n, m)` case of the study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyCase {
    pub nu: f64,
    pub beta: f64,
    pub n: usize,
    pub m: usize,
}

impl StudyConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        if self.nu_list.is_empty() || self.beta_list.is_empty() || self.n_list.is_empty() {
            return Err(Error::Config("nu_list, beta_list and n_list must be nonempty".into()));
        }
        if let Some(nu) = self.nu_list.iter().find(|nu| !(**nu > 0.0 && nu.is_finite())) {
            return Err(Error::Config(format!("nu must be positive, got {nu}")));
        }
        if self.beta_list.iter().any(|b| !b.is_finite()) {
            return Err(Error::Config("beta values must be finite".into()));
        }
        if let Some(n) = self.n_list.iter().find(|&&n| n < 2) {
            return Err(Error::Config(format!("n must be at least 2, got {n}")));
        }
        if self.period != 1.0 {
            return Err(Error::Config(format!(
                "the manufactured problem has period 1, got T = {}",
                self.period
            )));
        }
        if self.quad_order < 4 {
            return Err(Error::Config(format!("quad_order must be at least 4, got {}", self.quad_order)));
        }
        match self.m_rule {
            MRule::NSquared => {
                if !self.m_list.is_empty() {
                    return Err(Error::Config("m_list is only used with m_rule = \"explicit\"".into()));
                }
            }
            MRule::Explicit => {
                if self.m_list.len() != self.n_list.len() {
                    return Err(Error::Config(format!(
                        "m_list has {} entries but n_list has {}",
                        self.m_list.len(),
                        self.n_list.len()
                    )));
                }
                if self.m_list.contains(&0) {
                    return Err(Error::Config("m must be positive".into()));
                }
            }
        }
        Ok(())
    }

    /// All cases in lexicographic `(nu, beta, n)` order.
    pub fn cases(&self) -> Result<Vec<StudyCase>> {
        self.validate()?;
        let pairs: Vec<(usize, usize)> = match self.m_rule {
            MRule::NSquared => self.n_list.iter().map(|&n| (n, n * n)).collect(),
            MRule::Explicit => self.n_list.iter().copied().zip(self.m_list.iter().copied()).collect(),
        };
        let mut cases = Vec::with_capacity(self.nu_list.len() * self.beta_list.len() * pairs.len());
        for &nu in &self.nu_list {
            for &beta in &self.beta_list {
                cases.extend(pairs.iter().map(|&(n, m)| StudyCase { nu, beta, n, m }));
            }
        }
        cases.sort_by(|a, b| {
            a.nu.total_cmp(&b.nu)
                .then(a.beta.total_cmp(&b.beta))
                .then(a.n.cmp(&b.n))
                .then(a.m.cmp(&b.m))
        });
        Ok(cases)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StudyRow {
    pub nu: f64,
    pub beta: f64,
    pub n: usize,
    pub m: usize,
    pub h: f64,
    pub k: f64,
    pub kappa1: f64,
    #[serde(rename = "K1")]
    pub k1: f64,
    #[serde(rename = "K2")]
    pub k2: f64,
    pub err_h1: f64,
    pub err_l2: f64,
    pub bound_h1: f64,
    pub bound_l2: f64,
    pub ratio_h1: f64,
    pub ratio_l2: f64,
    pub runtime_ms: f64,
}

/// Solves the manufactured problem for one case.
pub fn solve_manufactured(
    problem: &ManufacturedProblem,
    n: usize,
    m: usize,
    quad_order: usize,
) -> Result<(FullDiscreteSolution, f64)> {
    let fem = assemble(n)?;
    let sys = SemidiscreteSystem::with_space_quad_order(&fem, problem.nu, problem.period(), problem.forcing_fn(), quad_order)?;
    let grid = TimeGrid::new(m, problem.period())?;
    let quad = TimeQuadrature::new(quad_order, m)?;
    let sol = sys.solve_periodic(&grid, &quad)?;
    let kappa = kappa1_checked(sys.mass(), sys.stiffness(), sys.decomp(), sys.nu(), sys.period())?;
    Ok((sol, kappa))
}

/// A priori bound report for `n` elements and `m` time intervals.
pub fn bounds_for(nu: f64, period: f64, n: usize, m: usize, f_norm: f64) -> Result<BoundReport> {
    let fem = assemble(n)?;
    let decomp = crate::linalg::generalized_eig(
        &crate::linalg::SpdMatrix::new(fem.stiffness.clone())?,
        &crate::linalg::SpdMatrix::new(fem.mass.clone())?,
    )?;
    let kappa = kappa1_checked(&fem.mass, &fem.stiffness, &decomp, nu, period)?;
    let grid = TimeGrid::new(m, period)?;
    bound_report(&bound_inputs(&fem.mesh, &grid, nu, f_norm), kappa)
}

fn bound_inputs(mesh: &crate::fem::Mesh1D, grid: &TimeGrid, nu: f64, f_norm: f64) -> BoundInputs {
    let c = space_constants(mesh);
    BoundInputs {
        nu,
        period: grid.period(),
        lambda1: c.lambda1,
        c_p: c.c_p,
        c_omega: c.c_omega,
        c_inv: c.c_inv,
        c_j: grid.c_j(),
        f_norm,
    }
}

/// Computes one row: assemble, decompose, solve, measure, bound.
pub fn run_case(case: &StudyCase, quad_order: usize, record_runtime: bool) -> Result<StudyRow> {
    let start = Instant::now();
    let wrap = |source: Error| Error::Study {
        nu: case.nu,
        beta: case.beta,
        n: case.n,
        m: case.m,
        source: Box::new(source),
    };
    let problem = ManufacturedProblem::new(case.nu, case.beta).map_err(wrap)?;
    let (sol, kappa) = solve_manufactured(&problem, case.n, case.m, quad_order).map_err(wrap)?;
    let ErrorReport { err_h1, err_l2, .. } = aposteriori_errors(&sol, &problem, quad_order).map_err(wrap)?;
    let mesh = sol.mesh.as_ref().expect("1D solve carries its mesh");
    let inputs = bound_inputs(mesh, &sol.grid, case.nu, problem.f_norm_analytic());
    let report = bound_report(&inputs, kappa).map_err(wrap)?;
    let runtime_ms = if record_runtime { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
    Ok(StudyRow {
        nu: case.nu,
        beta: case.beta,
        n: case.n,
        m: case.m,
        h: mesh.h(),
        k: sol.grid.k(),
        kappa1: kappa,
        k1: report.k1,
        k2: report.k2,
        err_h1,
        err_l2,
        bound_h1: report.h1_bound,
        bound_l2: report.l2_bound,
        ratio_h1: report.h1_bound / err_h1,
        ratio_l2: report.l2_bound / err_l2,
        runtime_ms,
    })
}

/// Rows of a study run. `error` is set when a case failed; `rows` then holds
/// the cases preceding it in the study order.
#[derive(Debug)]
pub struct StudyOutcome {
    pub rows: Vec<StudyRow>,
    pub error: Option<Error>,
}

impl StudyOutcome {
    pub fn into_result(self) -> Result<Vec<StudyRow>> {
        match self.error {
            Some(e) => Err(e),
            None => Ok(self.rows),
        }
    }
}

/// Runs every case. Cases are independent and computed in parallel; the
/// output order is the lexicographic case order regardless.
pub fn run_study(cfg: &StudyConfig) -> StudyOutcome {
    let cases = match cfg.cases() {
        Ok(c) => c,
        Err(e) => return StudyOutcome { rows: Vec::new(), error: Some(e) },
    };
    let results: Vec<Result<StudyRow>> = cases
        .par_iter()
        .map(|case| run_case(case, cfg.quad_order, cfg.record_runtime))
        .collect();
    let mut rows = Vec::with_capacity(results.len());
    for r in results {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => return StudyOutcome { rows, error: Some(e) },
        }
    }
    StudyOutcome { rows, error: None }
}

fn fmt_float(v: f64) -> String {
    // 17 significant digits round-trip every f64.
    format!("{v:.16e}")
}

/// CSV text: header plus one LF-terminated line per row.
pub fn csv_string(rows: &[StudyRow]) -> String {
    let mut out = String::with_capacity(256 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let floats = [
            r.h, r.k, r.kappa1, r.k1, r.k2, r.err_h1, r.err_l2, r.bound_h1, r.bound_l2, r.ratio_h1,
            r.ratio_l2, r.runtime_ms,
        ];
        let _ = write!(out, "{},{},{},{}", fmt_float(r.nu), fmt_float(r.beta), r.n, r.m);
        for v in floats {
            out.push(',');
            out.push_str(&fmt_float(v));
        }
        out.push('\n');
    }
    out
}

pub fn emit_csv(rows: &[StudyRow], path: &Path) -> Result<()> {
    fs::write(path, csv_string(rows)).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

/// Parses text produced by [`csv_string`].
pub fn parse_csv(text: &str) -> Result<Vec<StudyRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::Config("missing or unexpected CSV header".into()));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 16 {
                return Err(Error::Config(format!("line {}: expected 16 fields, got {}", i + 2, fields.len())));
            }
            let f = |j: usize| -> Result<f64> {
                fields[j]
                    .parse()
                    .map_err(|e| Error::Config(format!("line {}, column {}: {e}", i + 2, j + 1)))
            };
            let u = |j: usize| -> Result<usize> {
                fields[j]
                    .parse()
                    .map_err(|e| Error::Config(format!("line {}, column {}: {e}", i + 2, j + 1)))
            };
            Ok(StudyRow {
                nu: f(0)?,
                beta: f(1)?,
                n: u(2)?,
                m: u(3)?,
                h: f(4)?,
                k: f(5)?,
                kappa1: f(6)?,
                k1: f(7)?,
                k2: f(8)?,
                err_h1: f(9)?,
                err_l2: f(10)?,
                bound_h1: f(11)?,
                bound_l2: f(12)?,
                ratio_h1: f(13)?,
                ratio_l2: f(14)?,
                runtime_ms: f(15)?,
            })
        })
        .collect()
}

/// Solution coefficients as CSV: `j,t,c_1,...,c_n`, one line per time sample.
pub fn solution_csv(sol: &FullDiscreteSolution) -> String {
    let n = sol.dim();
    let mut out = String::from("j,t");
    for i in 1..=n {
        let _ = write!(out, ",c_{i}");
    }
    out.push('\n');
    for (j, t) in sol.grid.times().enumerate() {
        let _ = write!(out, "{j},{}", fmt_float(t));
        for i in 0..n {
            out.push(',');
            out.push_str(&fmt_float(sol.coeffs[(i, j)]));
        }
        out.push('\n');
    }
    out
}
