use crate::{Error, Result, MAX_DIM};

/// Ordered leg dimensions of a tensor-product Hilbert space. Leg 0 is the
/// most significant digit of the flat (row-major) index.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SystemLayout {
    leg_dims: Vec<usize>,
    total: usize,
}

impl SystemLayout {
    pub fn new(leg_dims: Vec<usize>) -> Result<Self> {
        let mut total = 1usize;
        for (i, &d) in leg_dims.iter().enumerate() {
            if d == 0 {
                return Err(Error::Layout(format!("leg {i} has dimension 0")));
            }
            total = total
                .checked_mul(d)
                .filter(|&t| t <= MAX_DIM)
                .ok_or(Error::DimensionCap {
                    dim: leg_dims.iter().fold(1usize, |a, &b| a.saturating_mul(b)),
                    max: MAX_DIM,
                })?;
        }
        Ok(SystemLayout { leg_dims, total })
    }

    pub fn single(d: usize) -> Result<Self> {
        Self::new(vec![d])
    }

    pub fn empty() -> Self {
        SystemLayout {
            leg_dims: Vec::new(),
            total: 1,
        }
    }

    pub fn leg_dims(&self) -> &[usize] {
        &self.leg_dims
    }

    pub fn num_legs(&self) -> usize {
        self.leg_dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.total
    }

    pub fn concat(&self, other: &SystemLayout) -> Result<SystemLayout> {
        let mut dims = self.leg_dims.clone();
        dims.extend_from_slice(&other.leg_dims);
        SystemLayout::new(dims)
    }

    /// Product dimension of a subset of legs.
    pub fn dim_of(&self, legs: &[usize]) -> usize {
        legs.iter().map(|&l| self.leg_dims[l]).product()
    }

    pub fn digits(&self, mut flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.leg_dims.len()];
        for (slot, &d) in out.iter_mut().zip(&self.leg_dims).rev() {
            *slot = flat % d;
            flat /= d;
        }
        out
    }

    pub fn flat(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.leg_dims).fold(0, |acc, (&x, &d)| acc * d + x)
    }

    pub(crate) fn check_legs(&self, legs: &[usize]) -> Result<()> {
        let mut seen = vec![false; self.num_legs()];
        for &l in legs {
            if l >= self.num_legs() {
                return Err(Error::Layout(format!(
                    "leg index {l} out of range for {} legs",
                    self.num_legs()
                )));
            }
            if seen[l] {
                return Err(Error::Layout(format!("leg index {l} repeated")));
            }
            seen[l] = true;
        }
        Ok(())
    }

    /// Reorders legs so that new leg `q` is old leg `order[q]`. Returns the
    /// permuted layout and the map from new flat index to old flat index.
    pub fn permuted(&self, order: &[usize]) -> Result<(SystemLayout, Vec<usize>)> {
        if order.len() != self.num_legs() {
            return Err(Error::Layout(format!(
                "permutation of length {} for {} legs",
                order.len(),
                self.num_legs()
            )));
        }
        self.check_legs(order)?;
        let new = SystemLayout::new(order.iter().map(|&l| self.leg_dims[l]).collect())?;
        let old_strides = self.strides();
        let strides: Vec<usize> = order.iter().map(|&l| old_strides[l]).collect();
        let map = (0..self.total)
            .map(|flat| new.digits(flat).iter().zip(&strides).map(|(x, s)| x * s).sum())
            .collect();
        Ok((new, map))
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.num_legs()];
        for i in (0..self.num_legs().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.leg_dims[i + 1];
        }
        strides
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digits_round_trip() {
        let l = SystemLayout::new(vec![2, 3, 4]).unwrap();
        assert_eq!(l.total_dim(), 24);
        for f in 0..24 {
            assert_eq!(l.flat(&l.digits(f)), f);
        }
        assert_eq!(l.digits(23), vec![1, 2, 3]);
    }

    #[test]
    fn rejects_zero_and_cap() {
        assert!(SystemLayout::new(vec![2, 0]).is_err());
        assert!(matches!(
            SystemLayout::new(vec![64, 65]),
            Err(Error::DimensionCap { .. })
        ));
    }

    #[test]
    fn permutation_map_swaps_legs() {
        let l = SystemLayout::new(vec![2, 3]).unwrap();
        let (p, map) = l.permuted(&[1, 0]).unwrap();
        assert_eq!(p.leg_dims(), &[3, 2]);
        // new digits (b, a) -> old flat a*3 + b
        assert_eq!(map[p.flat(&[2, 1])], l.flat(&[1, 2]));
    }
}
