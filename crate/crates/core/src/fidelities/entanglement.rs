use std::collections::BTreeMap;

use super::{check_subset, kron_vectors, ConnectionView};
use crate::channels::{ConnectionGraph, KrausChannel};
use crate::tensor::{
    eigh, kron, max_entangled_ket, partial_trace, reduce_kets, ComplexMatrix, DensityOperator, SystemLayout, C64,
};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FidelityMode {
    /// Maximally entangled inputs pushed through `I (x) Lambda`.
    Definition,
    /// Closed form from partial traces of the Kraus operators.
    KrausTrace,
}

/// Global, per-connection and per-subset entanglement fidelities for one
/// set of inputs. `group_values` holds every nonempty subset.
#[derive(Clone, Debug, PartialEq)]
pub struct FidelityReport {
    pub global_value: f64,
    pub local_values: Vec<f64>,
    pub group_values: BTreeMap<Vec<usize>, f64>,
}

/// Canonical purification `sum_k sqrt(lambda_k) |k>_R |e_k>_A` of a
/// single-leg state, as a vector on `R (x) A` with the reference first.
pub fn purify(rho: &DensityOperator) -> Result<Vec<C64>> {
    let d = rho.dim();
    let e = eigh(rho.matrix())?;
    let mut v = vec![C64::new(0.0, 0.0); d * d];
    for k in 0..d {
        let w = e.values[k].max(0.0).sqrt();
        for a in 0..d {
            v[k * d + a] = e.vectors[(a, k)] * w;
        }
    }
    Ok(v)
}

/// Product of per-connection purifications on `(R_i, A_i)` pairs,
/// regrouped as `(R_0, R_1, .., A_0, A_1, ..)`.
fn joint_purification(purifications: &[&Vec<C64>], dims: &[usize]) -> Result<Vec<C64>> {
    let parts: Vec<Vec<C64>> = purifications.iter().map(|p| p.to_vec()).collect();
    let joint = kron_vectors(&parts);
    let g = dims.len();
    let paired = SystemLayout::new(dims.iter().flat_map(|&d| [d, d]).collect())?;
    let order: Vec<usize> = (0..g).map(|i| 2 * i).chain((0..g).map(|i| 2 * i + 1)).collect();
    Ok(ComplexMatrix::permute_ket_legs(&joint, &paired, &order)?.0)
}

/// Overlap of the `(R B)_subset` marginal of `(I (x) Lambda)(|Psi><Psi|)`
/// with the kept purifications.
fn group_overlap(view: &ConnectionView, purifications: &[Vec<C64>], subset: &[usize]) -> Result<f64> {
    let g = view.len();
    let all: Vec<&Vec<C64>> = purifications.iter().collect();
    let psi = joint_purification(&all, &view.dims)?;
    let d = view.total_dim();
    let out_kets: Vec<Vec<C64>> = view
        .kraus
        .iter()
        .map(|a| {
            let mut w = vec![C64::new(0.0, 0.0); d * d];
            for r in 0..d {
                let row = &psi[r * d..(r + 1) * d];
                for b in 0..d {
                    w[r * d + b] = (0..d).map(|x| a[(b, x)] * row[x]).sum();
                }
            }
            w
        })
        .collect();
    let out_layout = view.layout.concat(&view.layout)?;
    let keep: Vec<usize> = subset.iter().copied().chain(subset.iter().map(|&i| g + i)).collect();
    let marginal = reduce_kets(&out_kets, &out_layout, &keep)?;
    let kept: Vec<&Vec<C64>> = subset.iter().map(|&i| &purifications[i]).collect();
    let kept_dims: Vec<usize> = subset.iter().map(|&i| view.dims[i]).collect();
    let target = joint_purification(&kept, &kept_dims)?;
    let n = target.len();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        let row: C64 = (0..n).map(|j| marginal[(i, j)] * target[j]).sum();
        acc += target[i].conj() * row;
    }
    Ok(acc.re)
}

fn check_inputs(view: &ConnectionView, inputs: &[DensityOperator]) -> Result<()> {
    if inputs.len() != view.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} inputs for {} connections",
            inputs.len(),
            view.len()
        )));
    }
    for (i, (rho, &d)) in inputs.iter().zip(&view.dims).enumerate() {
        if rho.dim() != d {
            return Err(Error::DimensionMismatch(format!(
                "input {i} has dimension {} but connection ref_dim is {d}",
                rho.dim()
            )));
        }
    }
    Ok(())
}

fn purifications(inputs: &[DensityOperator]) -> Result<Vec<Vec<C64>>> {
    inputs.iter().map(purify).collect()
}

/// Entanglement fidelity of `ch` at the product input `(x)_i inputs[i]`.
pub fn entanglement_fidelity(ch: &KrausChannel, inputs: &[DensityOperator], graph: &ConnectionGraph) -> Result<f64> {
    let view = ConnectionView::new(ch, graph)?;
    check_inputs(&view, inputs)?;
    let all: Vec<usize> = (0..view.len()).collect();
    group_overlap(&view, &purifications(inputs)?, &all)
}

/// Group fidelity: only the connections in `subset` are compared with the
/// reference, everything else is traced out.
pub fn group_fidelity(
    ch: &KrausChannel,
    inputs: &[DensityOperator],
    graph: &ConnectionGraph,
    subset: &[usize],
) -> Result<f64> {
    let view = ConnectionView::new(ch, graph)?;
    check_inputs(&view, inputs)?;
    let subset = check_subset(subset, view.len())?;
    group_overlap(&view, &purifications(inputs)?, &subset)
}

pub fn local_entanglement_fidelity(
    ch: &KrausChannel,
    inputs: &[DensityOperator],
    graph: &ConnectionGraph,
    connection: usize,
) -> Result<f64> {
    group_fidelity(ch, inputs, graph, &[connection])
}

/// Every group fidelity for one input, from a single set of purifications.
pub fn fidelity_report(
    ch: &KrausChannel,
    inputs: &[DensityOperator],
    graph: &ConnectionGraph,
) -> Result<FidelityReport> {
    let view = ConnectionView::new(ch, graph)?;
    check_inputs(&view, inputs)?;
    let purifs = purifications(inputs)?;
    let g = view.len();
    let mut group_values = BTreeMap::new();
    for mask in 1u32..(1 << g) {
        let subset: Vec<usize> = (0..g).filter(|&i| mask & (1 << i) != 0).collect();
        let v = group_overlap(&view, &purifs, &subset)?;
        group_values.insert(subset, v);
    }
    let all: Vec<usize> = (0..g).collect();
    Ok(FidelityReport {
        global_value: group_values[&all],
        local_values: (0..g).map(|i| group_values[&vec![i]]).collect(),
        group_values,
    })
}

/// `sum_K |tr(rho A_K)|^2` with `rho` the product input in connection order.
pub fn entanglement_fidelity_kraus(
    ch: &KrausChannel,
    inputs: &[DensityOperator],
    graph: &ConnectionGraph,
) -> Result<f64> {
    let view = ConnectionView::new(ch, graph)?;
    check_inputs(&view, inputs)?;
    let mut rho = inputs[0].matrix().clone();
    for r in &inputs[1..] {
        rho = kron(&rho, r.matrix())?;
    }
    let d = view.total_dim();
    Ok(view
        .kraus
        .iter()
        .map(|a| {
            let t: C64 = (0..d)
                .flat_map(|i| (0..d).map(move |j| (i, j)))
                .map(|(i, j)| rho[(i, j)] * a[(j, i)])
                .sum();
            t.norm_sqr()
        })
        .sum())
}

/// Channel fidelity: entanglement fidelity at maximally entangled inputs.
pub fn channel_fidelity(ch: &KrausChannel, graph: &ConnectionGraph, mode: FidelityMode) -> Result<f64> {
    let all: Vec<usize> = (0..graph.len()).collect();
    group_channel_fidelity(ch, graph, &all, mode)
}

/// Group fidelity at maximally entangled inputs, by either route.
pub fn group_channel_fidelity(
    ch: &KrausChannel,
    graph: &ConnectionGraph,
    subset: &[usize],
    mode: FidelityMode,
) -> Result<f64> {
    match mode {
        FidelityMode::KrausTrace => group_channel_fidelity_kraus(ch, graph, subset),
        FidelityMode::Definition => {
            let view = ConnectionView::new(ch, graph)?;
            let subset = check_subset(subset, view.len())?;
            let purifs: Vec<Vec<C64>> = view.dims.iter().map(|&d| max_entangled_ket(d)).collect();
            group_overlap(&view, &purifs, &subset)
        }
    }
}

/// `sum_K ||tr_S A_K||_F^2 / (d_rest d_S^2)`: the traced-out connections see
/// a maximally mixed input, the kept ones a maximally entangled pair.
pub fn group_channel_fidelity_kraus(ch: &KrausChannel, graph: &ConnectionGraph, subset: &[usize]) -> Result<f64> {
    let view = ConnectionView::new(ch, graph)?;
    let subset = check_subset(subset, view.len())?;
    group_channel_fidelity_view(&view, &subset)
}

pub(crate) fn group_channel_fidelity_view(view: &ConnectionView, subset: &[usize]) -> Result<f64> {
    let rest: Vec<usize> = (0..view.len()).filter(|i| !subset.contains(i)).collect();
    let d_kept: usize = subset.iter().map(|&i| view.dims[i]).product();
    let d_rest: usize = rest.iter().map(|&i| view.dims[i]).product();
    let mut total = 0.0;
    for a in &view.kraus {
        let t = partial_trace(a, &view.layout, &rest)?;
        total += t.frobenius_norm().powi(2);
    }
    Ok(total / (d_rest as f64 * (d_kept * d_kept) as f64))
}
