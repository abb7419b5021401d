use crate::channels::{ConnectionGraph, KrausChannel};
use crate::fidelities::{entanglement_fidelity_kraus, min_subspace_fidelity, ConnectionView};
use crate::optim::{minimize, SearchBudget};
use crate::tensor::{eigh, kron, ComplexMatrix, DensityOperator, SubspaceBasis, SystemLayout, C64};
use crate::{Error, Result};

/// Eigenvalues at or below this count as outside the support.
pub const SUPPORT_TOL: f64 = 1e-9;

const PSD_SLACK: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct Extraction {
    /// Remaining support of each connection's input after peeling.
    pub subspaces: Vec<SubspaceBasis>,
    /// Total weight removed from each input.
    pub alphas: Vec<f64>,
    /// Removed pure components `(q_m, phi_m)` per connection, in order.
    pub removed: Vec<Vec<(f64, Vec<C64>)>>,
    /// What is left of each input, renormalised.
    pub remainders: Vec<DensityOperator>,
    /// Support dimension before every step, ending with the final one.
    pub support_dims: Vec<Vec<usize>>,
    /// `1 - F_e` at the original inputs.
    pub eta: f64,
    /// `eta / prod(alpha_i)`, or `None` when nothing was removed somewhere.
    pub gamma_bound: Option<f64>,
    /// Heuristic minimum of the pure-state fidelity over the subspaces.
    pub min_fidelity: f64,
}

impl Extraction {
    /// True when `1 - min_fidelity` respects the gamma bound up to `slack`.
    pub fn bound_holds(&self, slack: f64) -> bool {
        match self.gamma_bound {
            Some(g) => 1.0 - self.min_fidelity <= g + slack,
            None => true,
        }
    }
}

/// Operators `M_K` with `tr[(|phi><phi| (x) sigma) A_K] = <phi| M_K |phi>`,
/// where `phi` sits on connection `i` and `sigma` on all the others.
fn reduced_kraus(view: &ConnectionView, i: usize, sigma: &ComplexMatrix) -> Vec<ComplexMatrix> {
    let d = view.dims[i];
    let total = view.total_dim();
    let mut pos = Vec::with_capacity(total);
    let mut rest = Vec::with_capacity(total);
    for flat in 0..total {
        let digits = view.layout.digits(flat);
        pos.push(digits[i]);
        let mut r = 0;
        for (j, &x) in digits.iter().enumerate() {
            if j != i {
                r = r * view.dims[j] + x;
            }
        }
        rest.push(r);
    }
    view.kraus
        .iter()
        .map(|a| {
            let mut m = ComplexMatrix::zeros(d, d);
            for row in 0..total {
                for col in 0..total {
                    let s = sigma[(rest[col], rest[row])];
                    if s != C64::new(0.0, 0.0) {
                        m[(pos[row], pos[col])] += s * a[(row, col)];
                    }
                }
            }
            m
        })
        .collect()
}

fn support(rho: &ComplexMatrix) -> Result<Option<SubspaceBasis>> {
    let e = eigh(rho)?;
    let keep: Vec<usize> = (0..e.values.len()).filter(|&k| e.values[k] > SUPPORT_TOL).collect();
    if keep.is_empty() {
        return Ok(None);
    }
    let v = ComplexMatrix::from_fn(rho.rows(), keep.len(), |r, c| e.vectors[(r, keep[c])]);
    Ok(Some(SubspaceBasis::new(v)?))
}

fn min_eigenvalue(m: &ComplexMatrix) -> Result<f64> {
    Ok(eigh(&m.hermitize())?.values[0])
}

/// Largest `q` with `rho - q |phi><phi|` positive semidefinite up to
/// `PSD_SLACK`, by bisection on `[0, <phi|rho|phi>]`.
fn largest_weight(rho: &ComplexMatrix, phi: &[C64]) -> Result<f64> {
    let p = ComplexMatrix::projector(phi);
    let ok = |q: f64| -> Result<bool> {
        let mut m = rho.clone();
        m.add_assign_scaled(&p, C64::new(-q, 0.0));
        Ok(min_eigenvalue(&m)? >= -PSD_SLACK)
    };
    let mut hi = (0..phi.len())
        .map(|i| {
            (0..phi.len())
                .map(|j| phi[i].conj() * rho[(i, j)] * phi[j])
                .sum::<C64>()
        })
        .sum::<C64>()
        .re;
    if ok(hi)? {
        return Ok(hi);
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if ok(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 {
            break;
        }
    }
    Ok(lo)
}

/// Greedy peeling of low-fidelity directions from each connection's input.
///
/// For connection `i` the vector `phi` of the current support minimising the
/// fidelity of `|phi><phi| (x) others` is removed with the largest weight
/// that keeps the operator positive; connections already processed enter
/// through their renormalised remainders, later ones through their original
/// inputs. Peeling stops once the minimum on the remaining support reaches
/// `1 - target_eta`, and fails if more than half the weight is gone.
pub fn extract_subspace(
    ch: &KrausChannel,
    graph: &ConnectionGraph,
    inputs: &[DensityOperator],
    target_eta: f64,
    budget: &SearchBudget,
) -> Result<Extraction> {
    let view = ConnectionView::new(ch, graph)?;
    let g = view.len();
    if inputs.len() != g {
        return Err(Error::DimensionMismatch(format!(
            "{} inputs for {g} connections",
            inputs.len()
        )));
    }
    for (i, (r, &d)) in inputs.iter().zip(&view.dims).enumerate() {
        if r.dim() != d {
            return Err(Error::DimensionMismatch(format!(
                "input {i} has dimension {} but connection ref_dim is {d}",
                r.dim()
            )));
        }
    }
    if !(0.0..1.0).contains(&target_eta) {
        return Err(Error::InvalidParameter(format!(
            "target eta {target_eta} outside [0, 1)"
        )));
    }
    let mut current: Vec<ComplexMatrix> = inputs.iter().map(|r| r.matrix().clone()).collect();
    let mut subspaces = Vec::with_capacity(g);
    let mut alphas = Vec::with_capacity(g);
    let mut removed = Vec::with_capacity(g);
    let mut support_dims = Vec::with_capacity(g);
    for i in 0..g {
        let mut sigma = ComplexMatrix::identity(1);
        for (j, m) in current.iter().enumerate() {
            if j != i {
                sigma = kron(&sigma, m)?;
            }
        }
        let m_k = reduced_kraus(&view, i, &sigma);
        let mut rho = inputs[i].matrix().clone();
        let mut alpha = 0.0;
        let mut peeled = Vec::new();
        let mut dims = Vec::new();
        let basis = loop {
            let Some(s) = support(&rho)? else {
                return Err(Error::ExtractionFailed(format!("support of input {i} exhausted")));
            };
            dims.push(s.dim());
            let v = s.vectors();
            let local: Vec<ComplexMatrix> = m_k.iter().map(|m| &(&v.adjoint() * m) * v).collect();
            let f = |x: &[Vec<C64>]| {
                let c = &x[0];
                local
                    .iter()
                    .map(|m| {
                        let mut amp = C64::new(0.0, 0.0);
                        for (a, ca) in c.iter().enumerate() {
                            for (b, cb) in c.iter().enumerate() {
                                amp += ca.conj() * m[(a, b)] * cb;
                            }
                        }
                        amp.norm_sqr()
                    })
                    .sum::<f64>()
            };
            let best = minimize(&f, &[s.dim()], &[], budget);
            if best.value >= 1.0 - target_eta {
                break s;
            }
            let phi = s.embed(&best.point[0]);
            let q = largest_weight(&rho, &phi)?;
            rho.add_assign_scaled(&ComplexMatrix::projector(&phi), C64::new(-q, 0.0));
            alpha += q;
            peeled.push((q, phi));
            if alpha > 0.5 {
                return Err(Error::ExtractionFailed(format!(
                    "removed weight {alpha:.6} from input {i} exceeds 1/2"
                )));
            }
        };
        current[i] = rho.scale(1.0 / (1.0 - alpha)).hermitize();
        subspaces.push(basis);
        alphas.push(alpha);
        removed.push(peeled);
        support_dims.push(dims);
    }
    let remainders = current
        .into_iter()
        .zip(&view.dims)
        .map(|(m, &d)| DensityOperator::new(m, SystemLayout::single(d)?))
        .collect::<Result<Vec<_>>>()?;
    let eta = (1.0 - entanglement_fidelity_kraus(ch, inputs, graph)?).max(0.0);
    let prod: f64 = alphas.iter().product();
    let gamma_bound = (prod > 0.0).then(|| eta / prod);
    let min_fidelity = min_subspace_fidelity(ch, graph, &subspaces, budget)?.value;
    Ok(Extraction {
        subspaces,
        alphas,
        removed,
        remainders,
        support_dims,
        eta,
        gamma_bound,
        min_fidelity,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseBound {
    /// `1 -` heuristic minimum pure-state fidelity over the subspaces.
    pub eta: f64,
    /// Entanglement fidelity at the maximally mixed states of the subspaces.
    pub fe: f64,
    /// `1 - (3/2)^|G| eta`.
    pub rhs: f64,
}

impl PhaseBound {
    pub fn holds(&self, tol: f64) -> bool {
        self.fe >= self.rhs - tol
    }
}

/// Both sides of `F_e((x) P_i / dim_i) >= 1 - (3/2)^|G| eta`.
pub fn phase_average_bound(
    ch: &KrausChannel,
    graph: &ConnectionGraph,
    subspaces: &[SubspaceBasis],
    budget: &SearchBudget,
) -> Result<PhaseBound> {
    let eta = (1.0 - min_subspace_fidelity(ch, graph, subspaces, budget)?.value).max(0.0);
    let uniform = subspaces
        .iter()
        .map(|s| {
            DensityOperator::new(
                s.projector().scale(1.0 / s.dim() as f64),
                SystemLayout::single(s.ambient_dim())?,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let fe = entanglement_fidelity_kraus(ch, &uniform, graph)?;
    let rhs = 1.0 - 1.5f64.powi(subspaces.len() as i32) * eta;
    Ok(PhaseBound { eta, fe, rhs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{dephasing, identity, qutrit_leaky};

    fn budget() -> SearchBudget {
        SearchBudget::new(16, 3)
    }

    #[test]
    fn identity_keeps_everything() {
        let l = SystemLayout::single(3).unwrap();
        let mm = DensityOperator::maximally_mixed(l.clone());
        let ex = extract_subspace(&identity(&l), &ConnectionGraph::single(3), &[mm], 1e-6, &budget()).unwrap();
        assert_eq!(ex.alphas, vec![0.0]);
        assert_eq!(ex.subspaces[0].dim(), 3);
        assert!(ex.gamma_bound.is_none());
        assert!((ex.min_fidelity - 1.0).abs() < 1e-9);
    }

    #[test]
    fn leaky_qutrit_loses_its_third_level() {
        let mm = DensityOperator::maximally_mixed(SystemLayout::single(3).unwrap());
        let ex = extract_subspace(
            &qutrit_leaky().unwrap(),
            &ConnectionGraph::single(3),
            &[mm],
            1e-6,
            &budget(),
        )
        .unwrap();
        assert_eq!(ex.support_dims, vec![vec![3, 2]]);
        assert!((ex.alphas[0] - 1.0 / 3.0).abs() < 1e-9);
        let good = SubspaceBasis::computational(3, &[0, 1]).unwrap();
        assert!(good.overlap(&ex.subspaces[0]) >= 1.0 - 1e-6);
        assert!((ex.eta - 5.0 / 9.0).abs() < 1e-12);
        assert!(ex.bound_holds(1e-9));
    }

    #[test]
    fn too_noisy_channel_fails() {
        let mm = DensityOperator::maximally_mixed(SystemLayout::single(2).unwrap());
        let err = extract_subspace(
            &dephasing(0.3).unwrap(),
            &ConnectionGraph::single(2),
            &[mm],
            1e-3,
            &budget(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::ExtractionFailed(_)));
    }

    #[test]
    fn dephasing_phase_bound() {
        let b = phase_average_bound(
            &dephasing(0.01).unwrap(),
            &ConnectionGraph::single(2),
            &[SubspaceBasis::full(2)],
            &budget(),
        )
        .unwrap();
        assert!((b.eta - 0.01).abs() < 1e-8);
        assert!((b.fe - 0.99).abs() < 1e-12);
        assert!((b.rhs - 0.985).abs() < 1e-8);
        assert!(b.holds(1e-9));
    }
}
