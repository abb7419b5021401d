use crate::channels::{weyl, KrausChannel};
use crate::tensor::{eigh, ComplexMatrix, DensityOperator, SystemLayout};
use crate::{Error, Result};

/// Effective channel of teleportation over `resource`, a state on
/// `A' (x) B` with `A'` on the sender's side.
///
/// The sender measures input and `A'` in the Bell basis
/// `(I (x) W_ab)|Phi+>`, the receiver applies `W_ab^T`. Writing the resource
/// as `sum_m |r_m><r_m|` with `|r_m> = sum_ij R_m[i,j] |i>|j>`, the branch
/// `(m, a, b)` has Kraus operator `W_ab^T R_m^T conj(W_ab) / sqrt(d)`.
pub fn teleport_channel(resource: &DensityOperator) -> Result<KrausChannel> {
    let legs = resource.layout().leg_dims();
    if legs.len() != 2 || legs[0] != legs[1] {
        return Err(Error::DimensionMismatch(format!(
            "teleportation resource must live on d (x) d, got legs {legs:?}"
        )));
    }
    let d = legs[0];
    let e = eigh(resource.matrix())?;
    let scale = 1.0 / (d as f64).sqrt();
    let mut ops = Vec::new();
    for (k, &lambda) in e.values.iter().enumerate() {
        if lambda <= 1e-14 {
            continue;
        }
        let s = lambda.sqrt();
        // R_m^T[j, i] = sqrt(lambda) v[i d + j]
        let rt = ComplexMatrix::from_fn(d, d, |j, i| e.vectors[(i * d + j, k)] * s);
        for a in 0..d {
            for b in 0..d {
                let w = weyl(d, a, b);
                ops.push((&(&w.transpose() * &rt) * &w.conj()).scale(scale));
            }
        }
    }
    let q = SystemLayout::single(d)?;
    KrausChannel::new(ops, q.clone(), q)
}
