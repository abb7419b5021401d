use crate::tensor::{eigh, kron, ComplexMatrix, DensityOperator, SystemLayout, C64};
use crate::{Error, Result, MAX_DIM, MAX_KRAUS};

/// Completeness tolerance `max |sum A^dagger A - I|`.
pub const COMPLETENESS_TOL: f64 = 1e-9;

/// A CPTP map given by Kraus operators, each `out_dim x in_dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausChannel {
    kraus: Vec<ComplexMatrix>,
    in_layout: SystemLayout,
    out_layout: SystemLayout,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub completeness_defect: f64,
    pub kraus_count: usize,
    pub passed: bool,
}

impl KrausChannel {
    /// Builds a channel, rejecting shape errors and completeness defects
    /// above [`COMPLETENESS_TOL`].
    pub fn new(kraus: Vec<ComplexMatrix>, in_layout: SystemLayout, out_layout: SystemLayout) -> Result<Self> {
        let ch = Self::unchecked(kraus, in_layout, out_layout)?;
        let report = ch.validate();
        if !report.passed {
            return Err(Error::NotTracePreserving(report.completeness_defect));
        }
        Ok(ch)
    }

    /// Shape-checked only; completeness is left to [`KrausChannel::validate`].
    pub fn unchecked(kraus: Vec<ComplexMatrix>, in_layout: SystemLayout, out_layout: SystemLayout) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::InvalidParameter(
                "channel needs at least one Kraus operator".into(),
            ));
        }
        if kraus.len() > MAX_KRAUS {
            return Err(Error::KrausCap {
                count: kraus.len(),
                max: MAX_KRAUS,
            });
        }
        let (rows, cols) = (out_layout.total_dim(), in_layout.total_dim());
        for (k, a) in kraus.iter().enumerate() {
            if a.rows() != rows || a.cols() != cols {
                return Err(Error::DimensionMismatch(format!(
                    "Kraus operator {k} is {}x{}, expected {rows}x{cols}",
                    a.rows(),
                    a.cols()
                )));
            }
            if !a.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "Kraus operator {k} has a non-finite entry"
                )));
            }
        }
        Ok(KrausChannel {
            kraus,
            in_layout,
            out_layout,
        })
    }

    /// Single-leg channel.
    pub fn from_kraus(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty Kraus set".into()))?;
        let (i, o) = (SystemLayout::single(first.cols())?, SystemLayout::single(first.rows())?);
        Self::new(kraus, i, o)
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn in_layout(&self) -> &SystemLayout {
        &self.in_layout
    }

    pub fn out_layout(&self) -> &SystemLayout {
        &self.out_layout
    }

    pub fn in_dim(&self) -> usize {
        self.in_layout.total_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.out_layout.total_dim()
    }

    pub fn completeness_defect(&self) -> f64 {
        let d = self.in_dim();
        let mut sum = ComplexMatrix::zeros(d, d);
        for a in &self.kraus {
            sum = &sum + &a.adjoint().matmul(a).expect("shape checked");
        }
        sum.max_abs_diff(&ComplexMatrix::identity(d))
    }

    pub fn validate(&self) -> ValidationReport {
        let defect = self.completeness_defect();
        ValidationReport {
            completeness_defect: defect,
            kraus_count: self.kraus.len(),
            passed: defect <= COMPLETENESS_TOL,
        }
    }

    /// `sum_K A_K m A_K^dagger` on a bare matrix.
    pub fn apply_matrix(&self, m: &ComplexMatrix) -> Result<ComplexMatrix> {
        if m.rows() != self.in_dim() || m.cols() != self.in_dim() {
            return Err(Error::DimensionMismatch(format!(
                "channel input dimension {} but operator is {}x{}",
                self.in_dim(),
                m.rows(),
                m.cols()
            )));
        }
        let mut out = ComplexMatrix::zeros(self.out_dim(), self.out_dim());
        for a in &self.kraus {
            out = &out + &a.sandwich(m)?;
        }
        Ok(out)
    }

    pub fn apply(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        let out = self.apply_matrix(rho.matrix())?;
        DensityOperator::new(out, self.out_layout.clone())
    }

    /// `(I_ref (x) channel)(rho)` where the first `ref_legs` legs of `rho`
    /// are an untouched reference and the rest must equal the input layout.
    pub fn apply_with_reference(&self, rho: &DensityOperator, ref_legs: usize) -> Result<DensityOperator> {
        let legs = rho.layout().leg_dims();
        if ref_legs > legs.len() || legs[ref_legs..] != *self.in_layout.leg_dims() {
            return Err(Error::DimensionMismatch(format!(
                "state legs {:?} do not end with the channel input legs {:?} after {ref_legs} reference legs",
                legs,
                self.in_layout.leg_dims()
            )));
        }
        let ref_layout = SystemLayout::new(legs[..ref_legs].to_vec())?;
        let out = self.apply_with_reference_matrix(rho.matrix(), ref_layout.total_dim())?;
        DensityOperator::new(out, ref_layout.concat(&self.out_layout)?)
    }

    /// Blockwise `(I_r (x) Lambda)(m)` for a reference of dimension `r`.
    pub(crate) fn apply_with_reference_matrix(&self, m: &ComplexMatrix, r: usize) -> Result<ComplexMatrix> {
        let (din, dout) = (self.in_dim(), self.out_dim());
        if m.rows() != r * din || !m.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "operator of size {} for reference {r} and input {din}",
                m.rows()
            )));
        }
        let mut out = ComplexMatrix::zeros(r * dout, r * dout);
        let adj: Vec<ComplexMatrix> = self.kraus.iter().map(|a| a.adjoint()).collect();
        for x in 0..r {
            for y in 0..r {
                let block = ComplexMatrix::from_fn(din, din, |i, j| m[(x * din + i, y * din + j)]);
                let mut acc = ComplexMatrix::zeros(dout, dout);
                for (a, ad) in self.kraus.iter().zip(&adj) {
                    acc = &acc + &a.matmul(&block)?.matmul(ad)?;
                }
                for i in 0..dout {
                    for j in 0..dout {
                        out[(x * dout + i, y * dout + j)] = acc[(i, j)];
                    }
                }
            }
        }
        Ok(out)
    }

    /// `{A_i (x) B_j}` with concatenated layouts.
    pub fn tensor(&self, other: &KrausChannel) -> Result<KrausChannel> {
        let count = self.kraus.len() * other.kraus.len();
        if count > MAX_KRAUS {
            return Err(Error::KrausCap { count, max: MAX_KRAUS });
        }
        let mut ops = Vec::with_capacity(count);
        for a in &self.kraus {
            for b in &other.kraus {
                ops.push(kron(a, b)?);
            }
        }
        KrausChannel::unchecked(
            ops,
            self.in_layout.concat(&other.in_layout)?,
            self.out_layout.concat(&other.out_layout)?,
        )
    }

    /// `n` parallel uses with the copies of each leg made adjacent: the
    /// result has one leg of dimension `d^n` per original leg, holding the
    /// copies in order.
    pub fn tensor_power(&self, n: usize) -> Result<KrausChannel> {
        let ins = self.in_layout.leg_dims().iter().map(|&d| vec![d]).collect::<Vec<_>>();
        let outs = self.out_layout.leg_dims().iter().map(|&d| vec![d]).collect::<Vec<_>>();
        self.tensor_power_grouped(n, &ins, &outs)
    }

    /// Tensor power where each leg is further split into sub-legs
    /// (`in_sublegs[l]` multiplies to leg `l`'s dimension). The result keeps
    /// one leg per original leg, internally ordered `(sub-leg, copy)`.
    pub fn tensor_power_grouped(
        &self,
        n: usize,
        in_sublegs: &[Vec<usize>],
        out_sublegs: &[Vec<usize>],
    ) -> Result<KrausChannel> {
        if n == 0 {
            return Err(Error::InvalidParameter("tensor power needs n >= 1".into()));
        }
        if n == 1 {
            return Ok(self.clone());
        }
        let count = self
            .kraus
            .len()
            .checked_pow(n as u32)
            .filter(|&c| c <= MAX_KRAUS)
            .ok_or(Error::KrausCap {
                count: self.kraus.len().saturating_pow(n as u32),
                max: MAX_KRAUS,
            })?;
        let (in_layout, in_map) = power_regrouping(&self.in_layout, in_sublegs, n)?;
        let (out_layout, out_map) = power_regrouping(&self.out_layout, out_sublegs, n)?;

        let mut ops = Vec::with_capacity(count);
        let mut idx = vec![0usize; n];
        loop {
            let mut prod = self.kraus[idx[0]].clone();
            for &k in &idx[1..] {
                prod = kron(&prod, &self.kraus[k])?;
            }
            ops.push(prod.reindexed(&out_map, &in_map));
            let mut pos = n;
            loop {
                if pos == 0 {
                    return KrausChannel::unchecked(ops, in_layout, out_layout);
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < self.kraus.len() {
                    break;
                }
                idx[pos] = 0;
            }
        }
    }

    /// `after o before`: Kraus set `{B_j A_i}`.
    pub fn compose(after: &KrausChannel, before: &KrausChannel) -> Result<KrausChannel> {
        if after.in_dim() != before.out_dim() {
            return Err(Error::DimensionMismatch(format!(
                "cannot feed output dimension {} into input dimension {}",
                before.out_dim(),
                after.in_dim()
            )));
        }
        let count = after.kraus.len() * before.kraus.len();
        if count > MAX_KRAUS {
            return Err(Error::KrausCap { count, max: MAX_KRAUS });
        }
        let mut ops = Vec::with_capacity(count);
        for b in &after.kraus {
            for a in &before.kraus {
                ops.push(b.matmul(a)?);
            }
        }
        KrausChannel::unchecked(ops, before.in_layout.clone(), after.out_layout.clone())
    }

    /// Same Kraus operators relabelled onto new layouts of equal total size.
    pub fn with_layouts(&self, in_layout: SystemLayout, out_layout: SystemLayout) -> Result<KrausChannel> {
        if in_layout.total_dim() != self.in_dim() || out_layout.total_dim() != self.out_dim() {
            return Err(Error::DimensionMismatch("relayout to different dimensions".into()));
        }
        KrausChannel::unchecked(self.kraus.clone(), in_layout, out_layout)
    }

    /// Max-abs distance between the actions of two channels on the matrix
    /// units `|i><j|`, which span all inputs.
    /// Minimal Kraus set of the same map, read off the eigendecomposition of
    /// the Choi matrix. Eigenvalues below `1e-14` of the largest are dropped.
    pub fn compressed(&self) -> Result<KrausChannel> {
        let (din, dout) = (self.in_dim(), self.out_dim());
        let n = din * dout;
        if n > MAX_DIM {
            return Err(Error::DimensionCap { dim: n, max: MAX_DIM });
        }
        let mut choi = ComplexMatrix::zeros(n, n);
        for a in &self.kraus {
            let v = a.as_slice();
            for i in 0..n {
                if v[i] == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    choi[(i, j)] += v[i] * v[j].conj();
                }
            }
        }
        let e = eigh(&choi)?;
        let top = e.values.iter().cloned().fold(0.0, f64::max);
        let ops: Vec<ComplexMatrix> = (0..n)
            .rev()
            .filter(|&k| e.values[k] > 1e-14 * top)
            .map(|k| {
                let s = e.values[k].sqrt();
                ComplexMatrix::from_fn(dout, din, |b, a| e.vectors[(b * din + a, k)] * s)
            })
            .collect();
        KrausChannel::new(ops, self.in_layout.clone(), self.out_layout.clone())
    }

    pub fn action_distance(&self, other: &KrausChannel) -> Result<f64> {
        if self.in_dim() != other.in_dim() || self.out_dim() != other.out_dim() {
            return Err(Error::DimensionMismatch("channels of different shape".into()));
        }
        let d = self.in_dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let mut e = ComplexMatrix::zeros(d, d);
                e[(i, j)] = C64::new(1.0, 0.0);
                let a = self.apply_matrix(&e)?;
                let b = other.apply_matrix(&e)?;
                worst = worst.max(a.max_abs_diff(&b));
            }
        }
        Ok(worst)
    }
}

/// Layout and basis map for regrouping `n` copies of a layout: the source
/// order is `(copy, leg, sub-leg)`; the target is one leg per original leg
/// with internal order `(sub-leg, copy)`. The map sends target flat index to
/// source flat index.
fn power_regrouping(layout: &SystemLayout, sublegs: &[Vec<usize>], n: usize) -> Result<(SystemLayout, Vec<usize>)> {
    if sublegs.len() != layout.num_legs() {
        return Err(Error::Layout(format!(
            "{} sub-leg groups for {} legs",
            sublegs.len(),
            layout.num_legs()
        )));
    }
    for (l, subs) in sublegs.iter().enumerate() {
        if subs.iter().product::<usize>() != layout.leg_dims()[l] {
            return Err(Error::Layout(format!(
                "sub-legs {subs:?} do not multiply to leg {l} of dimension {}",
                layout.leg_dims()[l]
            )));
        }
    }
    // fine-grained source layout: copy-major, then leg, then sub-leg
    let mut fine = Vec::new();
    let mut fine_pos: Vec<Vec<Vec<usize>>> = vec![Vec::new(); n];
    for slot in fine_pos.iter_mut() {
        for subs in sublegs {
            let mut leg_pos = Vec::new();
            for &d in subs {
                leg_pos.push(fine.len());
                fine.push(d);
            }
            slot.push(leg_pos);
        }
    }
    let mut order = Vec::new();
    for (l, subs) in sublegs.iter().enumerate() {
        for s in 0..subs.len() {
            for copy in &fine_pos {
                order.push(copy[l][s]);
            }
        }
    }
    let fine_layout = SystemLayout::new(fine)?;
    let (_, map) = fine_layout.permuted(&order)?;
    let coarse = SystemLayout::new(
        layout
            .leg_dims()
            .iter()
            .map(|d| d.checked_pow(n as u32).unwrap_or(usize::MAX))
            .collect(),
    )?;
    Ok((coarse, map))
}
