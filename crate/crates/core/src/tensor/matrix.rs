use std::ops::{Add, Index, IndexMut, Mul, Sub};

pub use num_complex::Complex64 as C64;

use super::SystemLayout;
use crate::{Error, Result, MAX_DIM};

/// Dense complex matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(d: usize) -> Self {
        let mut m = Self::zeros(d, d);
        for i in 0..d {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        ComplexMatrix { rows, cols, data }
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        Self::from_fn(r, c, |i, j| C64::new(rows[i][j], 0.0))
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = C64::new(v, 0.0);
        }
        m
    }

    /// Column vector.
    pub fn ket(entries: &[C64]) -> Self {
        ComplexMatrix {
            rows: entries.len(),
            cols: 1,
            data: entries.to_vec(),
        }
    }

    pub fn basis_ket(d: usize, k: usize) -> Self {
        let mut m = Self::zeros(d, 1);
        m[(k, 0)] = C64::new(1.0, 0.0);
        m
    }

    /// `|v><v|` for a column vector (or the first column of `v`).
    pub fn projector(v: &[C64]) -> Self {
        Self::from_fn(v.len(), v.len(), |i, j| v[i] * v[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_c(&self, s: C64) -> Self {
        self.map(|z| z * s)
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = ComplexMatrix::zeros(self.rows, other.cols);
        let n = other.cols;
        for i in 0..self.rows {
            let row_out = &mut out.data[i * n..(i + 1) * n];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let row_b = &other.data[k * n..(k + 1) * n];
                for (o, &b) in row_out.iter_mut().zip(row_b) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self * x * self^dagger`.
    pub fn sandwich(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.matmul(x)?.matmul(&self.adjoint())
    }

    pub fn add_assign_scaled(&mut self, other: &ComplexMatrix, s: C64) {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    /// Largest entry magnitude; NaN if any entry is NaN.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, nan_max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Max-abs distance to another matrix of the same shape; NaN entries
    /// make the distance NaN.
    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, nan_max)
    }

    pub fn hermitian_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// `(H + H^dagger) / 2`.
    pub fn hermitize(&self) -> ComplexMatrix {
        Self::from_fn(self.rows, self.cols, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5)
    }

    /// Unitarity defect `max |U^dagger U - I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let g = self.adjoint().matmul(self).expect("square by construction");
        g.max_abs_diff(&ComplexMatrix::identity(self.cols))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Inner product `<a|b>` of two column vectors given as slices.
    pub fn inner(a: &[C64], b: &[C64]) -> C64 {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
    }

    /// Relabels a square operator's basis: `out[a, b] = self[map[a], map[b]]`.
    pub fn reindexed(&self, row_map: &[usize], col_map: &[usize]) -> ComplexMatrix {
        ComplexMatrix::from_fn(row_map.len(), col_map.len(), |i, j| self[(row_map[i], col_map[j])])
    }

    /// Permutes the legs of a square operator living on `layout`.
    pub fn permute_legs(&self, layout: &SystemLayout, order: &[usize]) -> Result<(ComplexMatrix, SystemLayout)> {
        if self.rows != layout.total_dim() || self.cols != layout.total_dim() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} operator on a layout of dimension {}",
                self.rows,
                self.cols,
                layout.total_dim()
            )));
        }
        let (new, map) = layout.permuted(order)?;
        Ok((self.reindexed(&map, &map), new))
    }

    /// Permutes the legs of a column vector living on `layout`.
    pub fn permute_ket_legs(v: &[C64], layout: &SystemLayout, order: &[usize]) -> Result<(Vec<C64>, SystemLayout)> {
        if v.len() != layout.total_dim() {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} on a layout of dimension {}",
                v.len(),
                layout.total_dim()
            )));
        }
        let (new, map) = layout.permuted(order)?;
        Ok((map.iter().map(|&k| v[k]).collect(), new))
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl<'a> Mul<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("matrix shapes must agree")
    }
}

impl<'a> Add<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<'a> Sub<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

/// Kronecker product. Fails when either resulting dimension exceeds [`MAX_DIM`].
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    for dim in [rows, cols] {
        if dim > MAX_DIM {
            return Err(Error::DimensionCap { dim, max: MAX_DIM });
        }
    }
    let mut out = ComplexMatrix::zeros(rows, cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let x = a[(i, j)];
            if x.re == 0.0 && x.im == 0.0 {
                continue;
            }
            for k in 0..b.rows {
                let base = (i * b.rows + k) * cols + j * b.cols;
                for l in 0..b.cols {
                    out.data[base + l] = x * b[(k, l)];
                }
            }
        }
    }
    Ok(out)
}

fn keep_structure(layout: &SystemLayout, keep: &[usize]) -> Result<(Vec<usize>, Vec<usize>, usize)> {
    layout.check_legs(keep)?;
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    let traced: Vec<usize> = (0..layout.num_legs()).filter(|l| !kept.contains(l)).collect();
    let kept_layout = SystemLayout::new(kept.iter().map(|&l| layout.leg_dims()[l]).collect())?;
    let traced_layout = SystemLayout::new(traced.iter().map(|&l| layout.leg_dims()[l]).collect())?;
    let mut kept_idx = Vec::with_capacity(layout.total_dim());
    let mut traced_idx = Vec::with_capacity(layout.total_dim());
    for flat in 0..layout.total_dim() {
        let digits = layout.digits(flat);
        let kd: Vec<usize> = kept.iter().map(|&l| digits[l]).collect();
        let td: Vec<usize> = traced.iter().map(|&l| digits[l]).collect();
        kept_idx.push(kept_layout.flat(&kd));
        traced_idx.push(traced_layout.flat(&td));
    }
    Ok((kept_idx, traced_idx, kept_layout.total_dim()))
}

/// Traces out every leg not listed in `keep`. Kept legs stay in their
/// original relative order regardless of the order of `keep`.
pub fn partial_trace(m: &ComplexMatrix, layout: &SystemLayout, keep: &[usize]) -> Result<ComplexMatrix> {
    if m.rows != layout.total_dim() || m.cols != layout.total_dim() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} matrix on a layout of dimension {}",
            m.rows,
            m.cols,
            layout.total_dim()
        )));
    }
    let (kept_idx, traced_idx, dk) = keep_structure(layout, keep)?;
    let dt = layout.total_dim() / dk;
    let mut groups: Vec<Vec<(usize, usize)>> = vec![Vec::with_capacity(dk); dt];
    for flat in 0..layout.total_dim() {
        groups[traced_idx[flat]].push((flat, kept_idx[flat]));
    }
    let mut out = ComplexMatrix::zeros(dk, dk);
    for group in &groups {
        for &(i, ki) in group {
            for &(j, kj) in group {
                out[(ki, kj)] += m[(i, j)];
            }
        }
    }
    Ok(out)
}

/// Reduced operator `tr_rest sum_k |v_k><v_k|` of a set of (unnormalised) kets.
pub fn reduce_kets(kets: &[Vec<C64>], layout: &SystemLayout, keep: &[usize]) -> Result<ComplexMatrix> {
    let (kept_idx, traced_idx, dk) = keep_structure(layout, keep)?;
    let dt = layout.total_dim() / dk;
    let mut out = ComplexMatrix::zeros(dk, dk);
    let mut block = vec![C64::new(0.0, 0.0); dk * dt];
    for v in kets {
        if v.len() != layout.total_dim() {
            return Err(Error::DimensionMismatch(format!(
                "ket of length {} on a layout of dimension {}",
                v.len(),
                layout.total_dim()
            )));
        }
        for (flat, &x) in v.iter().enumerate() {
            block[kept_idx[flat] * dt + traced_idx[flat]] = x;
        }
        for a in 0..dk {
            let ra = &block[a * dt..(a + 1) * dt];
            for b in a..dk {
                let rb = &block[b * dt..(b + 1) * dt];
                let s: C64 = ra.iter().zip(rb).map(|(x, y)| x * y.conj()).sum();
                out[(a, b)] += s;
                if a != b {
                    out[(b, a)] += s.conj();
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    fn random_psd(d: usize, s: &mut Stream) -> ComplexMatrix {
        let g = ComplexMatrix::from_fn(d, d, |_, _| s.complex_normal());
        g.matmul(&g.adjoint()).unwrap()
    }

    #[test]
    fn kron_identities_and_diagonals() {
        let i4 = kron(&ComplexMatrix::identity(2), &ComplexMatrix::identity(2)).unwrap();
        assert_eq!(i4, ComplexMatrix::identity(4));
        let d = kron(&ComplexMatrix::diag(&[1.0, 2.0]), &ComplexMatrix::diag(&[3.0, 4.0])).unwrap();
        assert_eq!(d, ComplexMatrix::diag(&[3.0, 4.0, 6.0, 8.0]));
    }

    #[test]
    fn kron_xx_flips_both_bits() {
        let xx = kron(&pauli_x(), &pauli_x()).unwrap();
        let out = xx.matmul(&ComplexMatrix::basis_ket(4, 0)).unwrap();
        assert_eq!(out, ComplexMatrix::basis_ket(4, 3));
    }

    #[test]
    fn kron_refuses_over_cap() {
        let a = ComplexMatrix::zeros(65, 1);
        let b = ComplexMatrix::zeros(64, 1);
        assert!(matches!(kron(&a, &b), Err(Error::DimensionCap { .. })));
    }

    #[test]
    fn partial_trace_of_bell_state_is_maximally_mixed() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let phi = ComplexMatrix::projector(&[c(s), c(0.0), c(0.0), c(s)]);
        let layout = SystemLayout::new(vec![2, 2]).unwrap();
        let r = partial_trace(&phi, &layout, &[0]).unwrap();
        assert!(r.max_abs_diff(&ComplexMatrix::identity(2).scale(0.5)) < 1e-15);
    }

    #[test]
    fn partial_trace_of_product_recovers_factor() {
        let mut s = Stream::new(1);
        let rho = random_psd(2, &mut s);
        let rho = rho.scale(1.0 / rho.trace().re);
        let sigma = random_psd(3, &mut s);
        let sigma = sigma.scale(1.0 / sigma.trace().re);
        let layout = SystemLayout::new(vec![2, 3]).unwrap();
        let joint = kron(&rho, &sigma).unwrap();
        assert!(partial_trace(&joint, &layout, &[0]).unwrap().max_abs_diff(&rho) < 1e-14);
        assert!(partial_trace(&joint, &layout, &[1]).unwrap().max_abs_diff(&sigma) < 1e-14);
    }

    /// Index-summation oracle written with explicit nested loops for a (2,4) layout.
    fn naive_trace_out_second(m: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(2, 2);
        for a in 0..2 {
            for b in 0..2 {
                for k in 0..4 {
                    out[(a, b)] += m[(a * 4 + k, b * 4 + k)];
                }
            }
        }
        out
    }

    fn naive_trace_out_first(m: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(4, 4);
        for a in 0..4 {
            for b in 0..4 {
                for k in 0..2 {
                    out[(a, b)] += m[(k * 4 + a, k * 4 + b)];
                }
            }
        }
        out
    }

    #[test]
    fn partial_trace_matches_naive_oracle() {
        let mut s = Stream::new(2);
        let layout = SystemLayout::new(vec![2, 4]).unwrap();
        for _ in 0..5 {
            let m = random_psd(8, &mut s);
            let t = m.trace();
            let keep0 = partial_trace(&m, &layout, &[0]).unwrap();
            let keep1 = partial_trace(&m, &layout, &[1]).unwrap();
            let none = partial_trace(&m, &layout, &[]).unwrap();
            let all = partial_trace(&m, &layout, &[1, 0]).unwrap();
            assert!(keep0.max_abs_diff(&naive_trace_out_second(&m)) < 1e-12);
            assert!(keep1.max_abs_diff(&naive_trace_out_first(&m)) < 1e-12);
            for r in [&keep0, &keep1, &none, &all] {
                assert!((r.trace() - t).norm() < 1e-12);
            }
            assert!(all.max_abs_diff(&m) < 1e-15);
        }
    }

    #[test]
    fn partial_trace_rejects_bad_leg() {
        let layout = SystemLayout::new(vec![2, 2]).unwrap();
        assert!(partial_trace(&ComplexMatrix::identity(4), &layout, &[2]).is_err());
    }

    #[test]
    fn reduce_kets_matches_partial_trace() {
        let mut s = Stream::new(3);
        let layout = SystemLayout::new(vec![2, 3, 2]).unwrap();
        let kets: Vec<Vec<C64>> = (0..3).map(|_| (0..12).map(|_| s.complex_normal()).collect()).collect();
        let mut full = ComplexMatrix::zeros(12, 12);
        for v in &kets {
            full = &full + &ComplexMatrix::projector(v);
        }
        for keep in [vec![0], vec![1], vec![0, 2], vec![2, 1], vec![]] {
            let a = reduce_kets(&kets, &layout, &keep).unwrap();
            let b = partial_trace(&full, &layout, &keep).unwrap();
            assert!(a.max_abs_diff(&b) < 1e-12);
        }
    }

    #[test]
    fn permute_legs_then_back_is_identity() {
        let mut s = Stream::new(4);
        let layout = SystemLayout::new(vec![2, 3, 2]).unwrap();
        let m = ComplexMatrix::from_fn(12, 12, |_, _| s.complex_normal());
        let (p, pl) = m.permute_legs(&layout, &[2, 0, 1]).unwrap();
        assert_eq!(pl.leg_dims(), &[2, 2, 3]);
        let (back, bl) = p.permute_legs(&pl, &[1, 2, 0]).unwrap();
        assert_eq!(bl, layout);
        assert_eq!(back, m);
    }
}
