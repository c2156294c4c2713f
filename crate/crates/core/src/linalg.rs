//! Dense LU factorization with partial pivoting, backed by nalgebra.
//!
//! Policy evaluation needs both `A x = b` (state values) and `Aᵀ y = c`
//! (discounted occupancy) for the same `A = I - γ P_π`, so one factorization
//! serves both solves.

use nalgebra::{DMatrix, DVector, Dyn, PermutationSequence};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Lu {
    l: DMatrix<f64>,
    u: DMatrix<f64>,
    /// `P A = L U`.
    p: PermutationSequence<Dyn>,
}

impl Lu {
    /// `a` is row-major `n × n`.
    pub fn factor(a: Vec<f64>, n: usize) -> Result<Self> {
        assert_eq!(a.len(), n * n, "matrix storage does not match dimension");
        let lu = DMatrix::from_row_slice(n, n, &a).lu();
        let u = lu.u();
        if u.diagonal().iter().any(|d| *d == 0.0 || !d.is_finite()) {
            return Err(Error::Singular);
        }
        Ok(Lu {
            l: lu.l(),
            u,
            p: lu.p().clone(),
        })
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = DVector::from_column_slice(b);
        self.p.permute_rows(&mut x);
        self.l.solve_lower_triangular_with_diag_mut(&mut x, 1.0);
        self.u.solve_upper_triangular_mut(&mut x);
        x.data.into()
    }

    /// Solves `Aᵀ y = c`.
    pub fn solve_transpose(&self, c: &[f64]) -> Vec<f64> {
        // Aᵀ = Uᵀ Lᵀ P, so solve Uᵀ w = c, then Lᵀ z = w, then y = Pᵀ z.
        let mut y = DVector::from_column_slice(c);
        self.u.tr_solve_upper_triangular_mut(&mut y);
        self.l.tr_solve_lower_triangular_mut(&mut y);
        self.p.inv_permute_rows(&mut y);
        y.data.into()
    }
}
