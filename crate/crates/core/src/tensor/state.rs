use super::{eigh, partial_trace, ComplexMatrix, SystemLayout, C64, STATE_TOL};
use crate::{Error, Result};

/// Unit-trace positive semidefinite operator on a tensor-product layout.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    matrix: ComplexMatrix,
    layout: SystemLayout,
}

impl DensityOperator {
    /// Validates Hermiticity, positivity and trace to `1e-10`. Small
    /// Hermiticity defects are symmetrised away.
    pub fn new(matrix: ComplexMatrix, layout: SystemLayout) -> Result<Self> {
        if matrix.rows() != layout.total_dim() || !matrix.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix on a layout of dimension {}",
                matrix.rows(),
                matrix.cols(),
                layout.total_dim()
            )));
        }
        if !matrix.is_finite() {
            return Err(Error::InvalidParameter("non-finite matrix entry".into()));
        }
        let defect = matrix.hermitian_defect();
        if defect > STATE_TOL {
            return Err(Error::NotHermitian(defect));
        }
        let matrix = matrix.hermitize();
        let tr = matrix.trace().re;
        if (tr - 1.0).abs() > STATE_TOL {
            return Err(Error::Trace(tr));
        }
        let min = eigh(&matrix)?.values.first().copied().unwrap_or(0.0);
        if min < -STATE_TOL {
            return Err(Error::NotPositive(min));
        }
        Ok(DensityOperator { matrix, layout })
    }

    /// Single-leg state.
    pub fn from_matrix(matrix: ComplexMatrix) -> Result<Self> {
        let layout = SystemLayout::single(matrix.rows())?;
        Self::new(matrix, layout)
    }

    /// `|v><v|` after normalising `v`.
    pub fn pure(v: &[C64], layout: SystemLayout) -> Result<Self> {
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidParameter("zero state vector".into()));
        }
        let u: Vec<C64> = v.iter().map(|z| z / norm).collect();
        Self::new(ComplexMatrix::projector(&u), layout)
    }

    pub fn maximally_mixed(layout: SystemLayout) -> Self {
        let d = layout.total_dim();
        DensityOperator {
            matrix: ComplexMatrix::identity(d).scale(1.0 / d as f64),
            layout,
        }
    }

    /// `|Phi+><Phi+|` on `d (x) d` with `|Phi+> = d^{-1/2} sum_g |g>|g>`.
    pub fn max_entangled(d: usize) -> Result<Self> {
        let layout = SystemLayout::new(vec![d, d])?;
        Self::pure(&max_entangled_ket(d), layout)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.layout.total_dim()
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityOperator> {
        let m = partial_trace(&self.matrix, &self.layout, keep)?;
        let mut legs = keep.to_vec();
        legs.sort_unstable();
        let layout = SystemLayout::new(legs.iter().map(|&l| self.layout.leg_dims()[l]).collect())?;
        Ok(DensityOperator { matrix: m, layout })
    }

    pub fn tensor(&self, other: &DensityOperator) -> Result<DensityOperator> {
        Ok(DensityOperator {
            matrix: super::kron(&self.matrix, &other.matrix)?,
            layout: self.layout.concat(&other.layout)?,
        })
    }

    /// Convex combination `sum p_k rho_k`; weights must be a distribution.
    pub fn mixture(parts: &[(f64, &DensityOperator)]) -> Result<DensityOperator> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty mixture".into()))?;
        let mut m = ComplexMatrix::zeros(first.1.dim(), first.1.dim());
        for (p, rho) in parts {
            if rho.layout != first.1.layout {
                return Err(Error::DimensionMismatch("mixture of different layouts".into()));
            }
            m.add_assign_scaled(&rho.matrix, C64::new(*p, 0.0));
        }
        DensityOperator::new(m, first.1.layout.clone())
    }

    pub fn relabel(&self, layout: SystemLayout) -> Result<DensityOperator> {
        if layout.total_dim() != self.dim() {
            return Err(Error::DimensionMismatch("relabel to a different dimension".into()));
        }
        Ok(DensityOperator {
            matrix: self.matrix.clone(),
            layout,
        })
    }
}

/// `|Phi+>` on `d (x) d` as a vector.
pub fn max_entangled_ket(d: usize) -> Vec<C64> {
    let a = 1.0 / (d as f64).sqrt();
    let mut v = vec![C64::new(0.0, 0.0); d * d];
    for g in 0..d {
        v[g * d + g] = C64::new(a, 0.0);
    }
    v
}

/// Spectrum of a (near-)density matrix with the `[-1e-10, 0)` band clipped
/// to zero. More negative eigenvalues are an error.
fn clipped_spectrum(m: &ComplexMatrix) -> Result<Vec<f64>> {
    let e = eigh(m)?;
    e.values
        .into_iter()
        .map(|x| {
            if x < -STATE_TOL {
                Err(Error::NotPositive(x))
            } else {
                Ok(x.max(0.0))
            }
        })
        .collect()
}

/// `-sum p log2 p` with `0 log 0 = 0`.
pub fn shannon_entropy(probs: &[f64]) -> f64 {
    -probs.iter().filter(|&&p| p > 0.0).map(|&p| p * p.log2()).sum::<f64>()
}

/// Von Neumann entropy in bits.
pub fn entropy(rho: &DensityOperator) -> f64 {
    entropy_of_matrix(&rho.matrix).expect("density operator invariants hold")
}

/// Von Neumann entropy of a PSD matrix that is not wrapped as a
/// [`DensityOperator`]; the trace is not renormalised.
pub fn entropy_of_matrix(m: &ComplexMatrix) -> Result<f64> {
    Ok(shannon_entropy(&clipped_spectrum(m)?))
}

/// Eigenvalues below this fraction of the largest are treated as outside the
/// support when forming square roots for the fidelity.
const SUPPORT_CUTOFF: f64 = 1e-13;

/// `(V_k diag(sqrt(lambda_k)))` restricted to the numerical support.
fn root_factor(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let e = eigh(m)?;
    if let Some(&min) = e.values.first() {
        if min < -STATE_TOL {
            return Err(Error::NotPositive(min));
        }
    }
    let top = e.values.last().copied().unwrap_or(0.0).max(0.0);
    let keep: Vec<usize> = (0..e.values.len())
        .filter(|&k| e.values[k] > SUPPORT_CUTOFF * top)
        .collect();
    let n = m.rows();
    Ok(ComplexMatrix::from_fn(n, keep.len(), |i, j| {
        e.vectors[(i, keep[j])] * e.values[keep[j]].sqrt()
    }))
}

/// Uhlmann fidelity `(tr |sqrt(rho) sqrt(sigma)|)^2`, clamped to `[0, 1]`.
///
/// With `rho = P P^dagger` and `sigma = Q Q^dagger` on their supports the
/// trace norm equals that of `P^dagger Q`, whose singular values come from
/// the smaller of the two Gram products. Working on the supports keeps
/// rank-deficient (e.g. pure) inputs free of square-root noise.
pub fn uhlmann_fidelity(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!(
            "fidelity between dimensions {} and {}",
            rho.dim(),
            sigma.dim()
        )));
    }
    let p = root_factor(&rho.matrix)?;
    let q = root_factor(&sigma.matrix)?;
    let m = p.adjoint().matmul(&q)?;
    let gram = if m.rows() <= m.cols() {
        m.matmul(&m.adjoint())?
    } else {
        m.adjoint().matmul(&m)?
    };
    let root_trace: f64 = eigh(&gram.hermitize())?.values.iter().map(|&x| x.max(0.0).sqrt()).sum();
    Ok((root_trace * root_trace).clamp(0.0, 1.0))
}
