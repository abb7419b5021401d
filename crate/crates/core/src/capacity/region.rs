use rayon::prelude::*;

use crate::channels::{tensor_power_with_graph, ConnectionGraph, KrausChannel};
use crate::fidelities::kron_vectors;
use crate::optim::{maximize, SearchBudget};
use crate::tensor::{entropy_of_matrix, partial_trace, reduce_kets, ComplexMatrix, SystemLayout, C64};
use crate::{Error, Result, MAX_BLOCKLENGTH, MAX_DIM};

#[derive(Clone, Debug)]
pub struct RegionOptions {
    pub restarts: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for RegionOptions {
    fn default() -> Self {
        RegionOptions {
            restarts: 16,
            iterations: 300,
            seed: 0,
        }
    }
}

/// One sender's pure input: amplitudes on its reference legs (one per
/// connection it feeds, in connection order) followed by its input leg.
#[derive(Clone, Debug, PartialEq)]
pub struct SenderState {
    pub sender: usize,
    pub leg_dims: Vec<usize>,
    pub amplitudes: Vec<C64>,
}

/// Raw rates at or below this are reported as exactly zero; it absorbs
/// rounding in entropies of states whose true rate is zero.
pub const RATE_FLOOR: f64 = 1e-12;

/// An achievable rate point. `raw` holds the coherent informations per
/// channel use at the returned inputs; `rates` clamps them at zero.
#[derive(Clone, Debug, PartialEq)]
pub struct RateTuple {
    pub weights: Vec<f64>,
    pub rates: Vec<f64>,
    pub raw: Vec<f64>,
    /// `sum_i weights[i] * rates[i]`.
    pub objective: f64,
    pub blocklength: usize,
    pub restart: usize,
    pub states: Vec<SenderState>,
}

/// Evaluation context for one channel at one blocklength.
struct RegionProblem {
    n: usize,
    channel: KrausChannel,
    /// Per-sender block layouts `(R_i for i in group) + input leg`.
    blocks: Vec<SystemLayout>,
    /// New flat index on `(R_0, .., R_{g-1}, inputs..)` -> flat index of the
    /// product of sender blocks.
    assemble: Vec<usize>,
    ref_dim: usize,
    out_layout: SystemLayout,
    /// For each connection, `(R_i, B_i)` leg indices in `out_layout`.
    pairs: Vec<(usize, usize)>,
}

impl RegionProblem {
    fn new(ch: &KrausChannel, graph: &ConnectionGraph, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("blocklength must be at least 1".into()));
        }
        if n > MAX_BLOCKLENGTH {
            return Err(Error::BlocklengthCap {
                n,
                max: MAX_BLOCKLENGTH,
            });
        }
        graph.identify(ch)?;
        let powered = graph.power(n)?;
        let refs = powered.ref_dims();
        let ref_dim = refs.iter().try_fold(1usize, |acc, &d| {
            acc.checked_mul(d).filter(|&t| t <= MAX_DIM).ok_or(Error::DimensionCap {
                dim: refs.iter().fold(1usize, |a, &b| a.saturating_mul(b)),
                max: MAX_DIM,
            })
        })?;
        for side in [ch.in_dim(), ch.out_dim()] {
            let leg = side.checked_pow(n as u32).unwrap_or(usize::MAX);
            let total = leg.saturating_mul(ref_dim);
            if total > MAX_DIM {
                return Err(Error::DimensionCap {
                    dim: total,
                    max: MAX_DIM,
                });
            }
        }
        let (channel, _) = tensor_power_with_graph(ch, graph, n)?;

        let groups = powered.sender_groups();
        let in_legs = channel.in_layout().leg_dims();
        let mut blocks = Vec::with_capacity(groups.len());
        let mut product_legs = Vec::new();
        let mut ref_pos = vec![0usize; refs.len()];
        let mut input_pos = Vec::with_capacity(groups.len());
        for (w, group) in groups.iter().enumerate() {
            let mut legs: Vec<usize> = group.iter().map(|&i| refs[i]).collect();
            legs.push(in_legs[w]);
            for &i in group {
                ref_pos[i] = product_legs.len();
                product_legs.push(refs[i]);
            }
            input_pos.push(product_legs.len());
            product_legs.push(in_legs[w]);
            blocks.push(SystemLayout::new(legs)?);
        }
        let product_layout = SystemLayout::new(product_legs)?;
        let order: Vec<usize> = ref_pos.iter().chain(&input_pos).copied().collect();
        let (_, assemble) = product_layout.permuted(&order)?;

        let mut fine = refs.clone();
        let mut b_pos = vec![0usize; refs.len()];
        for group in powered.receiver_groups() {
            for i in group {
                b_pos[i] = fine.len();
                fine.push(refs[i]);
            }
        }
        let out_layout = SystemLayout::new(fine)?;
        let pairs = (0..refs.len()).map(|i| (i, b_pos[i])).collect();
        Ok(RegionProblem {
            n,
            channel,
            blocks,
            assemble,
            ref_dim,
            out_layout,
            pairs,
        })
    }

    fn block_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.total_dim()).collect()
    }

    /// Coherent information per channel use for every connection.
    fn raw_rates(&self, x: &[Vec<C64>]) -> Result<Vec<f64>> {
        let product = kron_vectors(x);
        let psi: Vec<C64> = self.assemble.iter().map(|&k| product[k]).collect();
        let (din, dout) = (self.channel.in_dim(), self.channel.out_dim());
        let kets: Vec<Vec<C64>> = self
            .channel
            .kraus()
            .iter()
            .map(|a| {
                let mut w = vec![C64::new(0.0, 0.0); self.ref_dim * dout];
                for r in 0..self.ref_dim {
                    let row = &psi[r * din..(r + 1) * din];
                    for b in 0..dout {
                        let arow = &a.as_slice()[b * din..(b + 1) * din];
                        w[r * dout + b] = arow.iter().zip(row).map(|(p, q)| p * q).sum();
                    }
                }
                w
            })
            .collect();
        let mut rates = Vec::with_capacity(self.pairs.len());
        for &(r, b) in &self.pairs {
            let rb = reduce_kets(&kets, &self.out_layout, &[r, b])?;
            let pair_layout = SystemLayout::new(vec![self.out_layout.leg_dims()[r], self.out_layout.leg_dims()[b]])?;
            let b_only = partial_trace(&rb, &pair_layout, &[1])?;
            let ic = entropy_of_matrix(&b_only)? - entropy_of_matrix(&rb)?;
            rates.push(ic / self.n as f64);
        }
        Ok(rates)
    }

    fn objective(&self, weights: &[f64], x: &[Vec<C64>]) -> f64 {
        match self.raw_rates(x) {
            Ok(r) => r.iter().zip(weights).map(|(r, w)| r * w).sum(),
            Err(_) => f64::NEG_INFINITY,
        }
    }

    fn tuple(&self, weights: &[f64], x: Vec<Vec<C64>>, restart: usize) -> Result<RateTuple> {
        let raw = self.raw_rates(&x)?;
        let rates: Vec<f64> = raw.iter().map(|&r| if r > RATE_FLOOR { r } else { 0.0 }).collect();
        let objective = rates.iter().zip(weights).map(|(r, w)| r * w).sum();
        let states = x
            .into_iter()
            .zip(&self.blocks)
            .enumerate()
            .map(|(sender, (amplitudes, layout))| SenderState {
                sender,
                leg_dims: layout.leg_dims().to_vec(),
                amplitudes,
            })
            .collect();
        Ok(RateTuple {
            weights: weights.to_vec(),
            rates,
            raw,
            objective,
            blocklength: self.n,
            restart,
            states,
        })
    }

    /// `n`-fold copy of a blocklength-1 sender state, regrouped onto this
    /// problem's block layout (reference copies and input sub-leg copies
    /// made contiguous per connection).
    fn replicate(&self, single: &SenderState, sublegs: &[usize]) -> Result<Vec<C64>> {
        let m = sublegs.len();
        let copies: Vec<Vec<C64>> = vec![single.amplitudes.clone(); self.n];
        let product = kron_vectors(&copies);
        let mut legs = Vec::with_capacity(2 * m * self.n);
        for _ in 0..self.n {
            legs.extend_from_slice(sublegs);
            legs.extend_from_slice(sublegs);
        }
        let layout = SystemLayout::new(legs)?;
        let mut order = Vec::with_capacity(2 * m * self.n);
        for part in 0..2 {
            for j in 0..m {
                for c in 0..self.n {
                    order.push(c * 2 * m + part * m + j);
                }
            }
        }
        if m == 0 {
            return Ok(product);
        }
        Ok(ComplexMatrix::permute_ket_legs(&product, &layout, &order)?.0)
    }
}

fn check_weights(weights: &[f64], g: usize) -> Result<()> {
    if weights.len() != g {
        return Err(Error::InvalidParameter(format!(
            "{} weights for {g} connections",
            weights.len()
        )));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidParameter("weights must be finite and nonnegative".into()));
    }
    if weights.iter().all(|&w| w == 0.0) {
        return Err(Error::InvalidParameter("weights are all zero".into()));
    }
    Ok(())
}

/// Maximises `sum_i w_i I_c(A_i > B_i) / n` over one pure input per
/// sender at blocklength `n`. For `n > 1` the search is seeded with the
/// `n`-fold copy of the blocklength-1 optimum, so the result never falls
/// below it.
pub fn region_sample(
    ch: &KrausChannel,
    graph: &ConnectionGraph,
    n: usize,
    weights: &[f64],
    opts: &RegionOptions,
) -> Result<RateTuple> {
    check_weights(weights, graph.len())?;
    let problem = RegionProblem::new(ch, graph, n)?;
    let mut seeds = Vec::new();
    if n > 1 {
        let base = region_sample(ch, graph, 1, weights, opts)?;
        let subs = graph.sender_sublegs();
        let seed: Result<Vec<Vec<C64>>> = base
            .states
            .iter()
            .zip(&subs)
            .map(|(s, sub)| problem.replicate(s, sub))
            .collect();
        seeds.push(seed?);
    }
    let budget = SearchBudget {
        restarts: opts.restarts,
        iterations: opts.iterations,
        seed: opts.seed,
    };
    let f = |x: &[Vec<C64>]| problem.objective(weights, x);
    let best = maximize(&f, &problem.block_dims(), &seeds, &budget);
    problem.tuple(weights, best.point, best.restart)
}

/// Rates per channel use at explicit sender states, for recomputation.
pub fn evaluate_rates(
    ch: &KrausChannel,
    graph: &ConnectionGraph,
    n: usize,
    states: &[SenderState],
) -> Result<Vec<f64>> {
    let problem = RegionProblem::new(ch, graph, n)?;
    if states.len() != problem.blocks.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} sender states for {} senders",
            states.len(),
            problem.blocks.len()
        )));
    }
    for (s, b) in states.iter().zip(&problem.blocks) {
        if s.amplitudes.len() != b.total_dim() {
            return Err(Error::DimensionMismatch(format!(
                "sender {} state has length {} but its block has dimension {}",
                s.sender,
                s.amplitudes.len(),
                b.total_dim()
            )));
        }
    }
    let x: Vec<Vec<C64>> = states.iter().map(|s| s.amplitudes.clone()).collect();
    problem.raw_rates(&x)
}

/// All weight vectors `k / steps` with nonnegative integer `k` summing to
/// `steps`, in lexicographic order.
pub fn simplex_grid(g: usize, steps: usize) -> Vec<Vec<f64>> {
    fn rec(g: usize, left: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() + 1 == g {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in (0..=left).rev() {
            prefix.push(k);
            rec(g, left - k, prefix, out);
            prefix.pop();
        }
    }
    if g == 0 || steps == 0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    rec(g, steps, &mut Vec::new(), &mut out);
    out.into_iter()
        .map(|k| k.into_iter().map(|x| x as f64 / steps as f64).collect())
        .collect()
}

const PARETO_TOL: f64 = 1e-9;

fn dominates(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| *x >= y - PARETO_TOL) && a.iter().zip(b).any(|(x, y)| *x > y + PARETO_TOL)
}

/// Weighted-sum scan over `simplex_grid(|G|, steps)`, reduced to distinct
/// Pareto-optimal rate tuples in grid order.
pub fn region_pareto(
    ch: &KrausChannel,
    graph: &ConnectionGraph,
    n: usize,
    steps: usize,
    opts: &RegionOptions,
) -> Result<Vec<RateTuple>> {
    let grid = simplex_grid(graph.len(), steps);
    if grid.is_empty() {
        return Err(Error::InvalidParameter("weight grid needs at least one step".into()));
    }
    let points: Result<Vec<RateTuple>> = grid.par_iter().map(|w| region_sample(ch, graph, n, w, opts)).collect();
    let points = points?;
    let mut kept: Vec<RateTuple> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        if points.iter().any(|q| dominates(&q.rates, &p.rates)) {
            continue;
        }
        let duplicate = points[..i]
            .iter()
            .any(|q| q.rates.iter().zip(&p.rates).all(|(a, b)| (a - b).abs() <= PARETO_TOL));
        if duplicate {
            continue;
        }
        kept.push(p.clone());
    }
    Ok(kept)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_covers_simplex() {
        let g = simplex_grid(2, 4);
        assert_eq!(g.len(), 5);
        assert_eq!(g[0], vec![1.0, 0.0]);
        assert_eq!(simplex_grid(3, 2).len(), 6);
        assert!(simplex_grid(3, 3)
            .iter()
            .all(|w| (w.iter().sum::<f64>() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn domination_is_strict() {
        assert!(dominates(&[1.0, 1.0], &[1.0, 0.5]));
        assert!(!dominates(&[1.0, 1.0], &[1.0, 1.0]));
        assert!(!dominates(&[1.0, 0.0], &[0.0, 1.0]));
    }
}
