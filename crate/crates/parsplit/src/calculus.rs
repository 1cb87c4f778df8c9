//! Dense-matrix oracle for the parallel-sum / parallel-composition calculus.
//!
//! Restricting to symmetric positive-definite operators makes every inverse
//! single-valued, so the operator identities become machine-checkable matrix
//! identities.  Set-valued generality is exercised only through the solvers.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A symmetric positive-definite operator given by its dense matrix.
#[derive(Debug, Clone)]
pub struct SpdOperator {
    matrix: DMatrix<f64>,
}

impl SpdOperator {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n {
            return Err(Error::InvalidArgument(
                "SpdOperator: matrix not square".into(),
            ));
        }
        let asym = (&matrix - matrix.transpose()).abs().max();
        if asym > 1e-12 * matrix.abs().max().max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "SpdOperator: asymmetry {asym}"
            )));
        }
        let eigs = matrix.clone().symmetric_eigenvalues();
        let min_eig = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_eig <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "SpdOperator: smallest eigenvalue {min_eig} not positive"
            )));
        }
        Ok(Self { matrix })
    }

    pub fn scaled_identity(dim: usize, a: f64) -> Result<Self> {
        Self::new(DMatrix::identity(dim, dim) * a)
    }

    /// Seeded random well-conditioned SPD matrix `R^T R + I`.
    pub fn random(dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let r = DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-1.0..1.0));
        let m = r.transpose() * &r + DMatrix::identity(dim, dim);
        Self::new(m).expect("R^T R + I is SPD")
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        self.matrix
            .clone()
            .cholesky()
            .expect("SPD by construction")
            .inverse()
    }
}

/// A dense linear map `m x n`, the `L` of the parallel composition.
#[derive(Debug, Clone)]
pub struct DenseMap {
    matrix: DMatrix<f64>,
}

impl DenseMap {
    pub fn new(matrix: DMatrix<f64>) -> Self {
        Self { matrix }
    }

    /// Seeded random full-row-rank map (`rows <= cols`).
    pub fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Self {
        loop {
            let m = DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0));
            if m.clone().svd(false, false).rank(1e-8) == rows {
                return Self::new(m);
            }
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn compose(&self, inner: &DenseMap) -> DenseMap {
        DenseMap::new(&self.matrix * &inner.matrix)
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    let t = m.transpose();
    (m + t) * 0.5
}

/// Parallel sum `(A^{-1} + B^{-1})^{-1}`, computed as `A (A+B)^{-1} B`
/// and symmetrized.
pub fn parallel_sum(a: &SpdOperator, b: &SpdOperator) -> Result<SpdOperator> {
    if a.dim() != b.dim() {
        return Err(Error::InvalidArgument(
            "parallel_sum: dimension mismatch".into(),
        ));
    }
    let sum = a.matrix() + b.matrix();
    let inv = sum
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::InvalidArgument("parallel_sum: A + B singular".into()))?;
    let prod = symmetrize(a.matrix() * inv * b.matrix());
    SpdOperator::new(prod)
}

/// Parallel composition `L |> A = (L A^{-1} L*)^{-1}`; requires `L` of full
/// row rank so the middle matrix is SPD.
pub fn parallel_composition(l: &DenseMap, a: &SpdOperator) -> Result<SpdOperator> {
    let (rows, cols) = l.matrix().shape();
    if cols != a.dim() {
        return Err(Error::InvalidArgument(
            "parallel_composition: dimension mismatch".into(),
        ));
    }
    if l.matrix().clone().svd(false, false).rank(1e-10) < rows {
        return Err(Error::RankDeficient(format!(
            "L is {rows}x{cols} rank-deficient"
        )));
    }
    let mid = symmetrize(l.matrix() * a.inverse() * l.matrix().transpose());
    let inv = mid
        .cholesky()
        .ok_or_else(|| Error::RankDeficient("L A^{-1} L* not positive definite".into()))?
        .inverse();
    SpdOperator::new(symmetrize(inv))
}

/// Max elementwise discrepancy of one operator identity.
#[derive(Debug, Clone)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub discrepancy: f64,
}

/// Discrepancy report for the calculus identities on seeded random
/// SPD instances.
#[derive(Debug, Clone)]
pub struct IdentityReport {
    pub dim: usize,
    pub seed: u64,
    pub checks: Vec<IdentityCheck>,
}

impl IdentityReport {
    pub fn max_discrepancy(&self) -> f64 {
        self.checks
            .iter()
            .map(|c| c.discrepancy)
            .fold(0.0, f64::max)
    }

    pub fn all_within(&self, tol: f64) -> bool {
        self.max_discrepancy() <= tol
    }
}

fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).abs().max()
}

/// Evaluates both sides of the four calculus identities on seeded random
/// SPD operators and full-row-rank maps:
///
/// * sum-map composition: `L |> (A x B) = A [] B` for `L: (x,y) -> x+y`
/// * inverse formula: `((L |> A) [] B)^{-1} = L A^{-1} L* + B^{-1}`
/// * distributivity: `L |> (A [] B) = (L |> A) [] (L |> B)`
/// * chain rule: `M |> (L |> A) = (M L) |> A`
pub fn check_identity_suite(seed: u64, dim: usize) -> Result<IdentityReport> {
    if dim < 2 {
        return Err(Error::InvalidArgument(
            "check_identity_suite: dim >= 2".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = SpdOperator::random(dim, &mut rng);
    let b = SpdOperator::random(dim, &mut rng);
    let mut checks = Vec::new();

    // L |> (A x B) = A [] B with L the row-sum map on H (+) H
    {
        let mut sum_map = DMatrix::zeros(dim, 2 * dim);
        for i in 0..dim {
            sum_map[(i, i)] = 1.0;
            sum_map[(i, dim + i)] = 1.0;
        }
        let mut block = DMatrix::zeros(2 * dim, 2 * dim);
        block.view_mut((0, 0), (dim, dim)).copy_from(a.matrix());
        block.view_mut((dim, dim), (dim, dim)).copy_from(b.matrix());
        let lhs = parallel_composition(&DenseMap::new(sum_map), &SpdOperator::new(block)?)?;
        let rhs = parallel_sum(&a, &b)?;
        checks.push(IdentityCheck {
            name: "sum-map composition",
            discrepancy: max_abs_diff(lhs.matrix(), rhs.matrix()),
        });
    }

    // ((L |> A) [] B') ^{-1} = L A^{-1} L* + B'^{-1} with L: dim -> dim-1
    {
        let rows = dim - 1;
        let l = DenseMap::random(rows, dim, &mut rng);
        let b_small = SpdOperator::random(rows, &mut rng);
        let la = parallel_composition(&l, &a)?;
        let lhs = parallel_sum(&la, &b_small)?
            .matrix()
            .clone()
            .cholesky()
            .expect("SPD")
            .inverse();
        let rhs = l.matrix() * a.inverse() * l.matrix().transpose() + b_small.inverse();
        checks.push(IdentityCheck {
            name: "parallel-sum inverse formula",
            discrepancy: max_abs_diff(&symmetrize(lhs), &symmetrize(rhs)),
        });
    }

    // L |> (A [] B) = (L |> A) [] (L |> B)
    {
        let rows = dim - 1;
        let l = DenseMap::random(rows, dim, &mut rng);
        let lhs = parallel_composition(&l, &parallel_sum(&a, &b)?)?;
        let rhs = parallel_sum(
            &parallel_composition(&l, &a)?,
            &parallel_composition(&l, &b)?,
        )?;
        checks.push(IdentityCheck {
            name: "distributivity over parallel sum",
            discrepancy: max_abs_diff(lhs.matrix(), rhs.matrix()),
        });
    }

    // M |> (L |> A) = (M L) |> A
    {
        let l = DenseMap::random(dim, dim, &mut rng);
        let m = DenseMap::random(dim - 1, dim, &mut rng);
        let lhs = parallel_composition(&m, &parallel_composition(&l, &a)?)?;
        let rhs = parallel_composition(&m.compose(&l), &a)?;
        checks.push(IdentityCheck {
            name: "composition chain rule",
            discrepancy: max_abs_diff(lhs.matrix(), rhs.matrix()),
        });
    }

    Ok(IdentityReport { dim, seed, checks })
}
