use rayon::prelude::*;

use super::entanglement::group_channel_fidelity_view;
use super::{kron_vectors, normalised, ConnectionView};
use crate::channels::{ConnectionGraph, KrausChannel};
use crate::optim::{minimize, SearchBudget};
use crate::rng::Stream;
use crate::tensor::{haar_state, SubspaceBasis, C64};
use crate::{Error, Result};

pub const DEFAULT_MIN_RESTARTS: usize = 32;

const MC_CHUNK: usize = 1024;

/// `tr[Lambda(psi) psi]` at the product input `(x)_i states[i]`.
pub fn pure_state_fidelity(ch: &KrausChannel, graph: &ConnectionGraph, states: &[Vec<C64>]) -> Result<f64> {
    let view = ConnectionView::new(ch, graph)?;
    if states.len() != view.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} states for {} connections",
            states.len(),
            view.len()
        )));
    }
    let mut parts = Vec::with_capacity(states.len());
    for (i, (s, &d)) in states.iter().zip(&view.dims).enumerate() {
        if s.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "state {i} has length {} but connection ref_dim is {d}",
                s.len()
            )));
        }
        parts.push(normalised(s)?);
    }
    Ok(view.pure_fidelity(&kron_vectors(&parts)))
}

#[derive(Clone, Debug)]
pub struct MinFidelity {
    /// Lowest value found; an upper bound on the true minimum.
    pub value: f64,
    /// Minimising per-connection states in the ambient spaces.
    pub states: Vec<Vec<C64>>,
    pub restart: usize,
}

/// Heuristic minimum of the pure-state fidelity over product states drawn
/// from the given per-connection subspaces.
pub fn min_subspace_fidelity(
    ch: &KrausChannel,
    graph: &ConnectionGraph,
    subspaces: &[SubspaceBasis],
    budget: &SearchBudget,
) -> Result<MinFidelity> {
    let view = ConnectionView::new(ch, graph)?;
    if subspaces.len() != view.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} subspaces for {} connections",
            subspaces.len(),
            view.len()
        )));
    }
    for (i, (s, &d)) in subspaces.iter().zip(&view.dims).enumerate() {
        if s.ambient_dim() != d {
            return Err(Error::DimensionMismatch(format!(
                "subspace {i} lives in dimension {} but connection ref_dim is {d}",
                s.ambient_dim()
            )));
        }
    }
    let embed = |x: &[Vec<C64>]| -> Vec<Vec<C64>> { subspaces.iter().zip(x).map(|(s, c)| s.embed(c)).collect() };
    let f = |x: &[Vec<C64>]| view.pure_fidelity(&kron_vectors(&embed(x)));
    let blocks: Vec<usize> = subspaces.iter().map(|s| s.dim()).collect();
    let r = minimize(&f, &blocks, &[], budget);
    Ok(MinFidelity {
        value: r.value,
        states: embed(&r.point),
        restart: r.restart,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// Monte Carlo average of the pure-state fidelity over independent Haar
/// product states. Samples are drawn in fixed chunks, each on its own
/// substream of `rng`, so the estimate does not depend on thread count.
pub fn average_fidelity_mc(
    ch: &KrausChannel,
    graph: &ConnectionGraph,
    samples: usize,
    rng: &Stream,
) -> Result<McEstimate> {
    if samples < 2 {
        return Err(Error::InvalidParameter("Monte Carlo needs at least 2 samples".into()));
    }
    let view = ConnectionView::new(ch, graph)?;
    let chunks = samples.div_ceil(MC_CHUNK);
    let sums: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut s = rng.substream(c as u64);
            let n = MC_CHUNK.min(samples - c * MC_CHUNK);
            let (mut sum, mut sq) = (0.0, 0.0);
            for _ in 0..n {
                let parts: Vec<Vec<C64>> = view.dims.iter().map(|&d| haar_state(d, &mut s)).collect();
                let f = view.pure_fidelity(&kron_vectors(&parts));
                sum += f;
                sq += f * f;
            }
            (sum, sq)
        })
        .collect();
    let (sum, sq) = sums.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let n = samples as f64;
    let mean = sum / n;
    let var = ((sq - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(McEstimate {
        mean,
        stderr: (var / n).sqrt(),
        samples,
    })
}

/// Exact average fidelity from group channel fidelities:
/// `(1 / prod(d_i + 1)) sum_S (D / prod_{j in S} d_j) F_c^[G \ S]`, summed
/// over every removed set `S`; the `S = G` term is 1.
pub fn average_fidelity_exact(ch: &KrausChannel, graph: &ConnectionGraph) -> Result<f64> {
    let view = ConnectionView::new(ch, graph)?;
    let g = view.len();
    let d_total: f64 = view.dims.iter().map(|&d| d as f64).product();
    let d_plus: f64 = view.dims.iter().map(|&d| d as f64 + 1.0).product();
    let mut total = 0.0;
    for removed in 0u32..(1 << g) {
        let kept: Vec<usize> = (0..g).filter(|&i| removed & (1 << i) == 0).collect();
        let weight: f64 = (0..g)
            .filter(|&i| removed & (1 << i) != 0)
            .map(|i| view.dims[i] as f64)
            .product();
        total += d_total / weight * group_channel_fidelity_view(&view, &kept)?;
    }
    Ok(total / d_plus)
}
