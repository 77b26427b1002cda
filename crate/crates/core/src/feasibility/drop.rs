use crate::error::{check_len, Error, Result};
use crate::numerics::SparseMatrix;

/// Maximum deviation of a row norm from 1 accepted by [`DropOperator`].
pub const ROW_NORM_TOLERANCE: f64 = 1e-8;

/// Diagonally relaxed orthogonal projections for a row-normalized system.
///
/// One step is `u ↦ u + λ·U⁻¹·Aᵀ(d − Au)` with `U = diag(s_j)`, where `s_j`
/// is the number of rows touching column `j` (1 for untouched columns). The
/// map is affine in `u`; its linear part is `L = I − λU⁻¹AᵀA`, which is
/// nonexpansive in the norm weighted by `U`.
#[derive(Debug, Clone)]
pub struct DropOperator {
    matrix: SparseMatrix,
    inv_counts: Vec<f64>,
    relaxation: f64,
}

impl DropOperator {
    pub fn new(matrix: SparseMatrix, relaxation: f64) -> Result<Self> {
        if !(relaxation > 0.0 && relaxation <= 1.0) {
            return Err(Error::invalid(format!(
                "DROP relaxation {relaxation} outside (0, 1]"
            )));
        }
        for r in 0..matrix.rows() {
            let n = matrix.row_norm(r);
            if (n - 1.0).abs() > ROW_NORM_TOLERANCE {
                return Err(Error::invalid(format!(
                    "row {r} has norm {n}; DROP requires unit-norm rows"
                )));
            }
        }
        let inv_counts = matrix
            .column_counts()
            .into_iter()
            .map(|s| 1.0 / s.max(1) as f64)
            .collect();
        Ok(DropOperator {
            matrix,
            inv_counts,
            relaxation,
        })
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn relaxation(&self) -> f64 {
        self.relaxation
    }

    /// `1/s_j` for every column.
    pub fn inverse_column_counts(&self) -> &[f64] {
        &self.inv_counts
    }

    pub fn n_unknowns(&self) -> usize {
        self.matrix.cols()
    }

    pub fn n_equations(&self) -> usize {
        self.matrix.rows()
    }

    pub fn apply(&self, d: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        check_len("DROP data", self.matrix.rows(), d.len())?;
        check_len("DROP iterate", self.matrix.cols(), u.len())?;
        let mut out = vec![0.0; u.len()];
        let mut ws = DropWorkspace::new(self);
        self.apply_into(d, u, &mut out, &mut ws);
        Ok(out)
    }

    /// Unchecked step writing into `out`.
    pub(crate) fn apply_into(&self, d: &[f64], u: &[f64], out: &mut [f64], ws: &mut DropWorkspace) {
        self.matrix.spmv_into(u, &mut ws.residual);
        for (r, di) in ws.residual.iter_mut().zip(d) {
            *r = di - *r;
        }
        self.matrix.spmv_transpose_into(&ws.residual, &mut ws.back);
        for (((o, &x), &b), &w) in out.iter_mut().zip(u).zip(&ws.back).zip(&self.inv_counts) {
            *o = x + self.relaxation * w * b;
        }
    }

    /// Linear part `Lg = g − λU⁻¹AᵀAg`.
    pub fn linear_apply(&self, g: &[f64]) -> Result<Vec<f64>> {
        check_len("DROP linear part", self.matrix.cols(), g.len())?;
        let ag = self.matrix.spmv(g)?;
        let back = self.matrix.spmv_transpose(&ag)?;
        Ok(g.iter()
            .zip(&back)
            .zip(&self.inv_counts)
            .map(|((x, b), w)| x - self.relaxation * w * b)
            .collect())
    }

    /// Transposed linear part `Lᵀg = g − λAᵀA(U⁻¹g)`: the exact input
    /// vector-Jacobian product of one step.
    pub fn linear_transpose(&self, g: &[f64]) -> Result<Vec<f64>> {
        check_len("DROP transpose", self.matrix.cols(), g.len())?;
        let scaled: Vec<f64> = g.iter().zip(&self.inv_counts).map(|(x, w)| x * w).collect();
        let a_scaled = self.matrix.spmv(&scaled)?;
        let back = self.matrix.spmv_transpose(&a_scaled)?;
        Ok(g.iter()
            .zip(&back)
            .map(|(x, b)| x - self.relaxation * b)
            .collect())
    }
}

/// Reusable buffers for [`DropOperator`] steps.
#[derive(Debug, Clone)]
pub(crate) struct DropWorkspace {
    residual: Vec<f64>,
    back: Vec<f64>,
}

impl DropWorkspace {
    pub(crate) fn new(op: &DropOperator) -> Self {
        DropWorkspace {
            residual: vec![0.0; op.matrix.rows()],
            back: vec![0.0; op.matrix.cols()],
        }
    }
}

/// One DROP step; validates the system on every call. Build a
/// [`DropOperator`] once when iterating.
pub fn drop_step(a: &SparseMatrix, d: &[f64], relaxation: f64, u: &[f64]) -> Result<Vec<f64>> {
    DropOperator::new(a.clone(), relaxation)?.apply(d, u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{dot, Prng};

    #[test]
    fn identity_step() {
        let a = SparseMatrix::identity(2);
        assert_eq!(drop_step(&a, &[1.0, 1.0], 1.0, &[0.0, 0.0]).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn solution_is_fixed() {
        let a = SparseMatrix::from_dense(2, 3, &[0.6, 0.8, 0.0, 0.0, 0.6, 0.8]).unwrap();
        let u = vec![0.3, -1.0, 2.0];
        let d = a.spmv(&u).unwrap();
        let next = drop_step(&a, &d, 1.0, &u).unwrap();
        for (x, y) in next.iter().zip(&u) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_unnormalized_rows_and_bad_relaxation() {
        let a = SparseMatrix::from_dense(1, 2, &[1.0, 1.0]).unwrap();
        assert!(DropOperator::new(a, 1.0).is_err());
        assert!(DropOperator::new(SparseMatrix::identity(2), 0.0).is_err());
        assert!(DropOperator::new(SparseMatrix::identity(2), 1.5).is_err());
    }

    #[test]
    fn empty_columns_use_unit_count() {
        let a = SparseMatrix::from_dense(1, 2, &[1.0, 0.0]).unwrap();
        let op = DropOperator::new(a, 1.0).unwrap();
        assert_eq!(op.inverse_column_counts(), &[1.0, 1.0]);
        assert_eq!(op.apply(&[2.0], &[0.0, 5.0]).unwrap(), vec![2.0, 5.0]);
    }

    #[test]
    fn linear_transpose_is_adjoint_of_linear_apply() {
        let mut rng = Prng::new(21);
        let dense: Vec<f64> = (0..6 * 9)
            .map(|_| if rng.uniform() < 0.5 { rng.gaussian() } else { 0.0 })
            .collect();
        let raw = SparseMatrix::from_dense(6, 9, &dense).unwrap();
        let (a, _) = crate::geometry::normalize_rows(&raw, &[0.0; 6]).unwrap();
        let op = DropOperator::new(a, 0.7).unwrap();
        for _ in 0..20 {
            let x: Vec<f64> = (0..9).map(|_| rng.gaussian()).collect();
            let y: Vec<f64> = (0..9).map(|_| rng.gaussian()).collect();
            let lhs = dot(&op.linear_apply(&x).unwrap(), &y);
            let rhs = dot(&x, &op.linear_transpose(&y).unwrap());
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }
}
