//! Dense kernels: Cholesky, the symmetric-definite generalized eigenproblem,
//! the spectral norm and the matrix exponential.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative symmetry tolerance accepted by [`SpdMatrix::new`].
pub const SYMMETRY_TOL: f64 = 1e-13;
/// A Cholesky pivot at or below this fraction of the largest diagonal entry
/// is a failure.
pub const PIVOT_TOL: f64 = 1e-14;
/// Convergence tolerance of the symmetric eigensolver.
pub const EIGEN_TOL: f64 = 1e-12;

/// A dense symmetric matrix meant to be positive definite. Symmetry is checked
/// on construction; definiteness is checked by [`cholesky`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix(DMatrix<f64>);

impl SpdMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::invalid(format!(
                "expected a square matrix, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("matrix has non-finite entries"));
        }
        let scale = entries.amax();
        let asym = (&entries - entries.transpose()).amax();
        if asym > SYMMETRY_TOL * scale {
            return Err(Error::invalid(format!("matrix is not symmetric (|A - A^T|_max = {asym:e})")));
        }
        Ok(Self(entries))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

impl AsRef<DMatrix<f64>> for SpdMatrix {
    fn as_ref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// Lower-triangular `G` with `G G^T = A`.
pub fn cholesky(a: &SpdMatrix) -> Result<DMatrix<f64>> {
    let a = a.as_matrix();
    let n = a.nrows();
    let max_diag = a.diagonal().iter().fold(0.0f64, |m, &d| m.max(d));
    let mut g = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut pivot = a[(j, j)];
        for k in 0..j {
            pivot -= g[(j, k)] * g[(j, k)];
        }
        if !(pivot > PIVOT_TOL * max_diag) {
            return Err(Error::NotPositiveDefinite { index: j, value: pivot });
        }
        let d = pivot.sqrt();
        g[(j, j)] = d;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= g[(i, k)] * g[(j, k)];
            }
            g[(i, j)] = s / d;
        }
    }
    Ok(g)
}

/// Eigenpairs of the pencil `D v = mu L v`, ascending, with `V^T L V = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct GenEigDecomp {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl GenEigDecomp {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn mu_min(&self) -> f64 {
        self.eigenvalues[0]
    }
}

/// Generalized eigendecomposition by Cholesky reduction: `L = G G^T`,
/// symmetric eigensolve of `G^{-1} D G^{-T} = Q diag(mu) Q^T`, `V = G^{-T} Q`.
pub fn generalized_eig(d: &SpdMatrix, l: &SpdMatrix) -> Result<GenEigDecomp> {
    let n = d.dim();
    if l.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: l.dim() });
    }
    let g = cholesky(l)?;
    let x = g
        .solve_lower_triangular(d.as_matrix())
        .ok_or_else(|| Error::invalid("singular Cholesky factor"))?;
    let c = g
        .solve_lower_triangular(&x.transpose())
        .ok_or_else(|| Error::invalid("singular Cholesky factor"))?;
    let c = (&c + c.transpose()) * 0.5;

    let max_iterations = 100 * n.max(1);
    let eig = SymmetricEigen::try_new(c, EIGEN_TOL, max_iterations)
        .ok_or(Error::EigenNoConvergence { max_iterations })?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut q = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(i).clone_owned();
        // Fix the sign so the decomposition is reproducible.
        let pivot = v.iamax();
        if v[pivot] < 0.0 {
            v.neg_mut();
        }
        q.set_column(col, &v);
    }
    let eigenvectors = g
        .transpose()
        .solve_upper_triangular(&q)
        .ok_or_else(|| Error::invalid("singular Cholesky factor"))?;
    Ok(GenEigDecomp { eigenvalues, eigenvectors })
}

/// Largest singular value.
pub fn two_norm(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.singular_values().max()
}

fn one_norm(a: &DMatrix<f64>) -> f64 {
    a.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

const PADE_3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE_5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE_7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const PADE_9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE_13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

// Largest 1-norms for which the degree-m diagonal Padé approximant meets
// double-precision backward error (Higham 2005, Table 2.3).
const THETA_3: f64 = 1.495585217958292e-2;
const THETA_5: f64 = 2.53939833006323e-1;
const THETA_7: f64 = 9.504178996162932e-1;
const THETA_9: f64 = 2.097847961257068e0;
const THETA_13: f64 = 5.371920351148152e0;

/// Matrix exponential by scaling and squaring with diagonal Padé
/// approximants.
pub fn matexp(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !a.is_square() {
        return Err(Error::invalid("matexp needs a square matrix"));
    }
    let n = a.nrows();
    let norm = one_norm(a);
    if !norm.is_finite() {
        return Err(Error::ExpOverflow { norm });
    }
    let id = DMatrix::<f64>::identity(n, n);
    if n == 0 {
        return Ok(id);
    }

    let (u, v, squarings) = if norm <= THETA_9 {
        let coeffs: &[f64] = if norm <= THETA_3 {
            &PADE_3
        } else if norm <= THETA_5 {
            &PADE_5
        } else if norm <= THETA_7 {
            &PADE_7
        } else {
            &PADE_9
        };
        let (u, v) = pade_low(a, coeffs, &id);
        (u, v, 0)
    } else {
        let s = (norm / THETA_13).log2().ceil().max(0.0);
        if s > 1000.0 {
            return Err(Error::ExpOverflow { norm });
        }
        let s = s as i32;
        let scaled = a * 2f64.powi(-s);
        let (u, v) = pade_13(&scaled, &id);
        (u, v, s)
    };

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .ok_or_else(|| Error::invalid("singular Padé denominator"))?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::ExpOverflow { norm });
    }
    Ok(r)
}

fn pade_low(a: &DMatrix<f64>, b: &[f64], id: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let a2 = a * a;
    let m = b.len() - 1;
    let mut odd = id * b[1];
    let mut even = id * b[0];
    let mut power = id.clone();
    for k in 1..=m / 2 {
        power = &power * &a2;
        if 2 * k < m {
            odd += &power * b[2 * k + 1];
        }
        even += &power * b[2 * k];
    }
    (a * odd, even)
}

fn pade_13(a: &DMatrix<f64>, id: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let b = &PADE_13;
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = &a6 * b[13] + &a4 * b[11] + &a2 * b[9];
    let u = a * (&a6 * inner_u + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + id * b[1]);
    let inner_v = &a6 * b[12] + &a4 * b[10] + &a2 * b[8];
    let v = &a6 * inner_v + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + id * b[0];
    (u, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::assemble;
    use proptest::prelude::*;
    use std::f64::consts::{E, PI};

    fn spd(rows: usize, data: &[f64]) -> SpdMatrix {
        SpdMatrix::new(DMatrix::from_row_slice(rows, rows, data)).unwrap()
    }

    #[test]
    fn cholesky_small() {
        let g = cholesky(&spd(2, &[4.0, 2.0, 2.0, 5.0])).unwrap();
        assert_eq!(g, DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 1.0, 2.0]));
        let id = cholesky(&SpdMatrix::new(DMatrix::identity(4, 4)).unwrap()).unwrap();
        assert_eq!(id, DMatrix::identity(4, 4));
    }

    #[test]
    fn cholesky_indefinite_reports_pivot() {
        let err = cholesky(&spd(2, &[1.0, 2.0, 2.0, 1.0])).unwrap_err();
        match err {
            Error::NotPositiveDefinite { index, value } => {
                assert_eq!(index, 1);
                assert_eq!(value, -3.0);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(err_string(&spd(2, &[1.0, 2.0, 2.0, 1.0])).contains("pivot 2"));
    }

    fn err_string(a: &SpdMatrix) -> String {
        cholesky(a).unwrap_err().to_string()
    }

    #[test]
    fn spd_rejects_asymmetric_and_rectangular() {
        assert!(SpdMatrix::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0])).is_err());
        assert!(SpdMatrix::new(DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn scalar_pencil() {
        let dec = generalized_eig(&spd(1, &[2.0]), &spd(1, &[1.0])).unwrap();
        assert!((dec.eigenvalues[0] - 2.0).abs() < 1e-15);
        assert!((dec.eigenvectors[(0, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn identical_pencil_has_unit_eigenvalues() {
        let a = spd(3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let dec = generalized_eig(&a, &a).unwrap();
        for mu in dec.eigenvalues.iter() {
            assert!((mu - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn fem_pencil_matches_closed_form() {
        for ne in [4usize, 9, 32] {
            let pair = assemble(ne).unwrap();
            let h = pair.mesh.h();
            let dec = generalized_eig(
                &SpdMatrix::new(pair.stiffness.clone()).unwrap(),
                &SpdMatrix::new(pair.mass.clone()).unwrap(),
            )
            .unwrap();
            for i in 0..pair.dim() {
                let c = ((i + 1) as f64 * PI * h).cos();
                let exact = 6.0 / (h * h) * (1.0 - c) / (2.0 + c);
                assert!((dec.eigenvalues[i] - exact).abs() < 1e-10 * exact);
            }
            assert!(dec.mu_min() >= PI * PI);
        }
        let pair = assemble(4).unwrap();
        let dec = generalized_eig(
            &SpdMatrix::new(pair.stiffness).unwrap(),
            &SpdMatrix::new(pair.mass).unwrap(),
        )
        .unwrap();
        assert!((dec.mu_min() - 10.386642005221232).abs() < 1e-12);
    }

    #[test]
    fn generalized_eig_dimension_mismatch() {
        let err = generalized_eig(&spd(1, &[1.0]), &spd(2, &[1.0, 0.0, 0.0, 1.0])).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn two_norm_examples() {
        assert!((two_norm(&DMatrix::identity(3, 3)) - 1.0).abs() < 1e-15);
        let d = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, -4.0]);
        assert!((two_norm(&d) - 4.0).abs() < 1e-14);
        let n = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!((two_norm(&n) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn matexp_examples() {
        let z = matexp(&DMatrix::zeros(3, 3)).unwrap();
        assert_eq!(z, DMatrix::identity(3, 3));
        let d = matexp(&DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0])).unwrap();
        assert!((d[(0, 0)] - E).abs() < 1e-14);
        assert!((d[(1, 1)] - 1.0 / E).abs() < 1e-15);
        assert_eq!(d[(0, 1)], 0.0);
        let n = matexp(&DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0])).unwrap();
        assert!((n - DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0])).amax() < 1e-15);
    }

    #[test]
    fn matexp_large_norm_uses_squaring() {
        // rotation generator: exp(theta J) is a rotation by theta
        let theta = 40.0;
        let j = DMatrix::from_row_slice(2, 2, &[0.0, -theta, theta, 0.0]);
        let r = matexp(&j).unwrap();
        assert!((r[(0, 0)] - theta.cos()).abs() < 1e-12);
        assert!((r[(1, 0)] - theta.sin()).abs() < 1e-12);
    }

    #[test]
    fn matexp_overflow() {
        let big = DMatrix::from_element(2, 2, f64::INFINITY);
        assert!(matches!(matexp(&big), Err(Error::ExpOverflow { .. })));
        let huge = DMatrix::from_row_slice(1, 1, &[1000.0]);
        assert!(matches!(matexp(&huge), Err(Error::ExpOverflow { .. })));
    }

    fn random_spd(n: usize, seed: &[f64]) -> DMatrix<f64> {
        let b = DMatrix::from_iterator(n, n, seed.iter().cycle().copied().take(n * n));
        &b * b.transpose() + DMatrix::identity(n, n) * (n as f64 * 0.1 + 0.5)
    }

    fn random_orthogonal(n: usize, seed: &[f64]) -> DMatrix<f64> {
        let b = DMatrix::from_iterator(n, n, seed.iter().cycle().copied().take(n * n))
            + DMatrix::identity(n, n) * 3.0;
        b.qr().q()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn decomposition_invariants(n in 1usize..20, s1 in proptest::collection::vec(-1.0f64..1.0, 400), s2 in proptest::collection::vec(-1.0f64..1.0, 400)) {
            let d = random_spd(n, &s1);
            let l = random_spd(n, &s2);
            let dec = generalized_eig(&SpdMatrix::new(d.clone()).unwrap(), &SpdMatrix::new(l.clone()).unwrap()).unwrap();
            let v = &dec.eigenvectors;
            let gram = v.transpose() * &l * v;
            prop_assert!((gram - DMatrix::identity(n, n)).amax() < 1e-10);
            let resid = &d * v - &l * v * DMatrix::from_diagonal(&dec.eigenvalues);
            prop_assert!(two_norm(&resid) <= 1e-10 * two_norm(&d));
            for w in dec.eigenvalues.as_slice().windows(2) {
                prop_assert!(w[0] <= w[1]);
            }
        }

        #[test]
        fn eigen_propagator_matches_matexp(n in 1usize..20, s1 in proptest::collection::vec(-1.0f64..1.0, 400), s2 in proptest::collection::vec(-1.0f64..1.0, 400)) {
            let d = random_spd(n, &s1);
            let l = random_spd(n, &s2);
            let dec = generalized_eig(&SpdMatrix::new(d.clone()).unwrap(), &SpdMatrix::new(l.clone()).unwrap()).unwrap();
            let l_inv_d = l.clone().lu().solve(&d).unwrap();
            for nu in [0.1, 1.0, 10.0] {
                for t in [0.25, 1.0] {
                    let decay = dec.eigenvalues.map(|mu| (-nu * t * mu).exp());
                    let eig_path = &dec.eigenvectors * DMatrix::from_diagonal(&decay) * dec.eigenvectors.transpose() * &l;
                    let exp_path = matexp(&(&l_inv_d * (-nu * t))).unwrap();
                    prop_assert!((eig_path - exp_path).amax() < 1e-8);
                }
            }
        }

        #[test]
        fn two_norm_orthogonally_invariant(n in 1usize..12, s1 in proptest::collection::vec(-1.0f64..1.0, 144), s2 in proptest::collection::vec(-1.0f64..1.0, 144)) {
            let a = DMatrix::from_iterator(n, n, s1.iter().copied().take(n * n));
            let q = random_orthogonal(n, &s2);
            let lhs = two_norm(&(&q * &a * q.transpose()));
            let rhs = two_norm(&a);
            prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.max(1e-300));
        }
    }
}
