//! Coherent information, its data-processing and continuity checks, and a
//! sampler for achievable rate tuples of multiletter regions.

mod region;

pub use region::{
    evaluate_rates, region_pareto, region_sample, simplex_grid, RateTuple, RegionOptions, SenderState, RATE_FLOOR,
};

use crate::channels::KrausChannel;
use crate::tensor::{entropy, uhlmann_fidelity, DensityOperator, SystemLayout};
use crate::{Error, Result};

/// Partition of a layout's legs into an `A` part and a `B` part.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BipartiteSplit {
    layout: SystemLayout,
    a_legs: Vec<usize>,
    b_legs: Vec<usize>,
}

impl BipartiteSplit {
    pub fn new(layout: SystemLayout, a_legs: Vec<usize>, b_legs: Vec<usize>) -> Result<Self> {
        let n = layout.num_legs();
        let mut seen = vec![false; n];
        for &l in a_legs.iter().chain(&b_legs) {
            if l >= n || seen[l] {
                return Err(Error::Layout(format!(
                    "split {a_legs:?} | {b_legs:?} is not a partition of {n} legs"
                )));
            }
            seen[l] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Layout(format!(
                "split {a_legs:?} | {b_legs:?} does not cover all {n} legs"
            )));
        }
        Ok(BipartiteSplit { layout, a_legs, b_legs })
    }

    /// Two-leg layout `A (x) B`.
    pub fn pair(d_a: usize, d_b: usize) -> Result<Self> {
        Self::new(SystemLayout::new(vec![d_a, d_b])?, vec![0], vec![1])
    }

    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    pub fn a_legs(&self) -> &[usize] {
        &self.a_legs
    }

    pub fn b_legs(&self) -> &[usize] {
        &self.b_legs
    }

    pub fn a_dim(&self) -> usize {
        self.layout.dim_of(&self.a_legs)
    }

    fn check(&self, rho: &DensityOperator) -> Result<()> {
        if rho.layout() != &self.layout {
            return Err(Error::DimensionMismatch(format!(
                "state legs {:?} differ from split legs {:?}",
                rho.layout().leg_dims(),
                self.layout.leg_dims()
            )));
        }
        Ok(())
    }
}

/// `I_c(A > B) = S(B) - S(AB)` in bits.
pub fn coherent_information(rho: &DensityOperator, split: &BipartiteSplit) -> Result<f64> {
    split.check(rho)?;
    let b = rho.partial_trace(&split.b_legs)?;
    Ok(entropy(&b) - entropy(rho))
}

/// `I_c(before) - I_c(after)` where `after` applies `post` to the `B` legs.
pub fn check_dpi(rho: &DensityOperator, split: &BipartiteSplit, post: &KrausChannel) -> Result<f64> {
    split.check(rho)?;
    let b_dims: Vec<usize> = split.b_legs.iter().map(|&l| split.layout.leg_dims()[l]).collect();
    if b_dims != post.in_layout().leg_dims() {
        return Err(Error::DimensionMismatch(format!(
            "post-processing expects legs {:?} but B holds {:?}",
            post.in_layout().leg_dims(),
            b_dims
        )));
    }
    let order: Vec<usize> = split.a_legs.iter().chain(&split.b_legs).copied().collect();
    let (m, _) = rho.matrix().permute_legs(&split.layout, &order)?;
    let d_a = split.a_dim();
    let out = post.apply_with_reference_matrix(&m, d_a)?;
    let a_layout = SystemLayout::new(split.a_legs.iter().map(|&l| split.layout.leg_dims()[l]).collect())?;
    let layout = a_layout.concat(post.out_layout())?;
    let na = split.a_legs.len();
    let after_split = BipartiteSplit::new(layout.clone(), (0..na).collect(), (na..layout.num_legs()).collect())?;
    let after = DensityOperator::new(out, layout)?;
    Ok(coherent_information(rho, split)? - coherent_information(&after, &after_split)?)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContinuityGap {
    /// `|I_c(rho) - I_c(sigma)|`.
    pub lhs: f64,
    /// `4 sqrt(f) log2(d_A) + 2` with `f = 1 - F(rho, sigma)`.
    pub rhs: f64,
    pub fidelity: f64,
}

impl ContinuityGap {
    pub fn holds(&self, tol: f64) -> bool {
        self.lhs <= self.rhs + tol
    }
}

/// Both sides of the continuity bound on coherent information.
pub fn continuity_gap(rho: &DensityOperator, sigma: &DensityOperator, split: &BipartiteSplit) -> Result<ContinuityGap> {
    let lhs = (coherent_information(rho, split)? - coherent_information(sigma, split)?).abs();
    let fidelity = uhlmann_fidelity(rho, sigma)?;
    let f = (1.0 - fidelity).max(0.0);
    let rhs = 4.0 * f.sqrt() * (split.a_dim() as f64).log2() + 2.0;
    Ok(ContinuityGap { lhs, rhs, fidelity })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{completely_depolarizing, depolarizing, identity};
    use crate::tensor::{shannon_entropy, ComplexMatrix};

    #[test]
    fn maximally_entangled_gives_log_d() {
        for d in [2usize, 3, 4] {
            let phi = DensityOperator::max_entangled(d).unwrap();
            let ic = coherent_information(&phi, &BipartiteSplit::pair(d, d).unwrap()).unwrap();
            assert!((ic - (d as f64).log2()).abs() < 1e-9);
        }
    }

    #[test]
    fn maximally_mixed_gives_minus_one() {
        let mm = DensityOperator::maximally_mixed(SystemLayout::new(vec![2, 2]).unwrap());
        let ic = coherent_information(&mm, &BipartiteSplit::pair(2, 2).unwrap()).unwrap();
        assert!((ic + 1.0).abs() < 1e-12);
    }

    #[test]
    fn depolarized_bell_state_matches_scalar_entropy() {
        let split = BipartiteSplit::pair(2, 2).unwrap();
        for p in [0.0, 0.05, 0.3, 1.0] {
            let out = depolarizing(2, p)
                .unwrap()
                .apply_with_reference(&DensityOperator::max_entangled(2).unwrap(), 1)
                .unwrap();
            let q = p / 4.0;
            let oracle = 1.0 - shannon_entropy(&[1.0 - 3.0 * q, q, q, q]);
            assert!((coherent_information(&out, &split).unwrap() - oracle).abs() < 1e-9);
        }
    }

    #[test]
    fn dpi_margins() {
        let split = BipartiteSplit::pair(2, 2).unwrap();
        let phi = DensityOperator::max_entangled(2).unwrap();
        let q = SystemLayout::single(2).unwrap();
        assert!(check_dpi(&phi, &split, &identity(&q)).unwrap().abs() < 1e-12);
        let m = check_dpi(&phi, &split, &completely_depolarizing(&q, &q).unwrap()).unwrap();
        assert!((m - 2.0).abs() < 1e-9);
    }

    #[test]
    fn dpi_acts_on_the_b_legs_whatever_their_position() {
        // B first, A second: post-processing must still hit leg 0
        let layout = SystemLayout::new(vec![3, 2]).unwrap();
        let split = BipartiteSplit::new(layout.clone(), vec![1], vec![0]).unwrap();
        let rho = DensityOperator::new(ComplexMatrix::diag(&[0.5, 0.0, 0.0, 0.0, 0.0, 0.5]), layout).unwrap();
        let post =
            completely_depolarizing(&SystemLayout::single(3).unwrap(), &SystemLayout::single(3).unwrap()).unwrap();
        // before: I_c = S(B) - S(AB) = 1 - 1 = 0; after: log2 3 - (1 + log2 3) = -1
        let m = check_dpi(&rho, &split, &post).unwrap();
        assert!((m - 1.0).abs() < 1e-9);
    }

    #[test]
    fn continuity_known_point() {
        let split = BipartiteSplit::pair(2, 2).unwrap();
        let phi = DensityOperator::max_entangled(2).unwrap();
        let mm = DensityOperator::maximally_mixed(SystemLayout::new(vec![2, 2]).unwrap());
        let gap = continuity_gap(&phi, &mm, &split).unwrap();
        assert!((gap.lhs - 2.0).abs() < 1e-9);
        assert!((gap.rhs - (2.0 * 3f64.sqrt() + 2.0)).abs() < 1e-9);
        assert!((gap.rhs - 5.464).abs() < 1e-3);
        let same = continuity_gap(&phi, &phi, &split).unwrap();
        assert!(same.lhs < 1e-12 && (same.rhs - 2.0).abs() < 1e-6);
    }

    #[test]
    fn split_must_partition() {
        let l = SystemLayout::new(vec![2, 2, 2]).unwrap();
        assert!(BipartiteSplit::new(l.clone(), vec![0], vec![1]).is_err());
        assert!(BipartiteSplit::new(l.clone(), vec![0, 1], vec![1, 2]).is_err());
        assert!(BipartiteSplit::new(l, vec![2], vec![0, 1]).is_ok());
    }
}
