//! Fidelity functionals of a km-user channel.
//!
//! Every functional works in connection order: the Kraus operators are
//! rewritten so that input and output factor as `A_0 (x) A_1 (x) ..` and
//! `B_0 (x) B_1 (x) ..`, with `A_i` and `B_i` identified through the
//! computational basis. Channel and group fidelities are available through a
//! purification route (apply `I (x) Lambda` to a purification and measure the
//! overlap of the kept marginal) and a Kraus-trace route (partial traces of
//! the Kraus operators).

mod entanglement;
mod pure;

pub use entanglement::{
    channel_fidelity, entanglement_fidelity, entanglement_fidelity_kraus, fidelity_report, group_channel_fidelity,
    group_channel_fidelity_kraus, group_fidelity, local_entanglement_fidelity, purify, FidelityMode, FidelityReport,
};
pub use pure::{
    average_fidelity_exact, average_fidelity_mc, min_subspace_fidelity, pure_state_fidelity, McEstimate, MinFidelity,
    DEFAULT_MIN_RESTARTS,
};

use crate::channels::{ConnectionGraph, KrausChannel};
use crate::tensor::{ComplexMatrix, SystemLayout, C64};
use crate::{Error, Result};

/// A channel's Kraus operators in connection order.
#[derive(Clone, Debug)]
pub(crate) struct ConnectionView {
    pub dims: Vec<usize>,
    pub layout: SystemLayout,
    pub kraus: Vec<ComplexMatrix>,
}

impl ConnectionView {
    pub fn new(ch: &KrausChannel, graph: &ConnectionGraph) -> Result<Self> {
        let map = graph.identify(ch).map_err(|e| {
            if ch.in_dim() != ch.out_dim() {
                Error::Rectangular {
                    rows: ch.out_dim(),
                    cols: ch.in_dim(),
                }
            } else {
                e
            }
        })?;
        Ok(ConnectionView {
            dims: graph.ref_dims(),
            layout: map.layout().clone(),
            kraus: map.connection_kraus(ch),
        })
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.layout.total_dim()
    }

    /// `sum_K |<psi| A_K |psi>|^2` for a normalised joint vector.
    pub fn pure_fidelity(&self, psi: &[C64]) -> f64 {
        let d = psi.len();
        let mut total = 0.0;
        for a in &self.kraus {
            let data = a.as_slice();
            let mut amp = C64::new(0.0, 0.0);
            for i in 0..d {
                let row = &data[i * d..(i + 1) * d];
                let ai: C64 = row.iter().zip(psi).map(|(x, y)| x * y).sum();
                amp += psi[i].conj() * ai;
            }
            total += amp.norm_sqr();
        }
        total
    }
}

/// Sorted, duplicate-free connection subset within range.
pub(crate) fn check_subset(subset: &[usize], n: usize) -> Result<Vec<usize>> {
    let mut s = subset.to_vec();
    s.sort_unstable();
    s.dedup();
    if s.len() != subset.len() || s.iter().any(|&i| i >= n) {
        return Err(Error::InvalidParameter(format!(
            "invalid connection subset {subset:?} for {n} connections"
        )));
    }
    Ok(s)
}

/// Kronecker product of state vectors.
pub(crate) fn kron_vectors(parts: &[Vec<C64>]) -> Vec<C64> {
    let mut out = vec![C64::new(1.0, 0.0)];
    for p in parts {
        let mut next = Vec::with_capacity(out.len() * p.len());
        for x in &out {
            next.extend(p.iter().map(|y| x * y));
        }
        out = next;
    }
    out
}

pub(crate) fn normalised(v: &[C64]) -> Result<Vec<C64>> {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if n == 0.0 || !n.is_finite() {
        return Err(Error::InvalidParameter("zero or non-finite state vector".into()));
    }
    Ok(v.iter().map(|z| z / n).collect())
}
