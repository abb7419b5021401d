use super::{ComplexMatrix, C64};
use crate::{Error, Result};

/// Orthonormal basis of a subspace, stored as the columns of an
/// `ambient x dim` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SubspaceBasis {
    vectors: ComplexMatrix,
}

impl SubspaceBasis {
    pub fn new(vectors: ComplexMatrix) -> Result<Self> {
        if vectors.cols() == 0 {
            return Err(Error::EmptySubspace);
        }
        let gram = vectors.adjoint().matmul(&vectors)?;
        let defect = gram.max_abs_diff(&ComplexMatrix::identity(vectors.cols()));
        if defect > 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "subspace basis is not orthonormal (Gram defect {defect:e})"
            )));
        }
        Ok(SubspaceBasis { vectors })
    }

    pub fn full(d: usize) -> Self {
        SubspaceBasis {
            vectors: ComplexMatrix::identity(d),
        }
    }

    /// Span of the given computational basis states.
    pub fn computational(d: usize, indices: &[usize]) -> Result<Self> {
        let m = ComplexMatrix::from_fn(d, indices.len(), |i, j| {
            if indices[j] == i {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.vectors.cols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.vectors.rows()
    }

    pub fn vectors(&self) -> &ComplexMatrix {
        &self.vectors
    }

    pub fn projector(&self) -> ComplexMatrix {
        self.vectors.matmul(&self.vectors.adjoint()).expect("shapes agree")
    }

    /// Ambient vector for subspace coordinates `c`.
    pub fn embed(&self, c: &[C64]) -> Vec<C64> {
        (0..self.ambient_dim())
            .map(|i| (0..self.dim()).map(|j| self.vectors[(i, j)] * c[j]).sum())
            .collect()
    }

    /// `tr(P_self P_other) / dim(other)`: 1 when `other` lies inside `self`.
    pub fn overlap(&self, other: &SubspaceBasis) -> f64 {
        let m = self
            .vectors
            .adjoint()
            .matmul(&other.vectors)
            .expect("same ambient space");
        m.frobenius_norm().powi(2) / other.dim() as f64
    }
}
