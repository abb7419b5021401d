//! Twirling over unitary ensembles, teleportation over a noisy resource,
//! greedy subspace extraction and the phase-averaging bound.

mod extraction;
mod teleport;

pub use extraction::{extract_subspace, phase_average_bound, Extraction, PhaseBound, SUPPORT_TOL};
pub use teleport::teleport_channel;

use crate::channels::{ConnectionGraph, KrausChannel};
use crate::rng::Stream;
use crate::tensor::{haar_unitary, kron, ComplexMatrix, C64};
use crate::{Error, Result, MAX_KRAUS};

/// How well an ensemble reproduces Haar second moments.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DesignKind {
    /// An exact unitary 2-design.
    Exact,
    /// Haar samples; moment identities hold only statistically.
    Sampled,
}

/// Uniformly weighted set of unitaries of one dimension.
#[derive(Clone, Debug)]
pub struct UnitaryEnsemble {
    elements: Vec<ComplexMatrix>,
    kind: DesignKind,
}

impl UnitaryEnsemble {
    pub fn new(elements: Vec<ComplexMatrix>, kind: DesignKind) -> Result<Self> {
        let first = elements
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty unitary ensemble".into()))?;
        let d = first.rows();
        for (k, u) in elements.iter().enumerate() {
            if u.rows() != d || u.cols() != d {
                return Err(Error::DimensionMismatch(format!(
                    "ensemble element {k} is {}x{}, expected {d}x{d}",
                    u.rows(),
                    u.cols()
                )));
            }
            let defect = u.unitarity_defect();
            if defect > 1e-10 {
                return Err(Error::InvalidParameter(format!(
                    "ensemble element {k} is not unitary (defect {defect:e})"
                )));
            }
        }
        Ok(UnitaryEnsemble { elements, kind })
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    pub fn dim(&self) -> usize {
        self.elements[0].rows()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn kind(&self) -> DesignKind {
        self.kind
    }
}

/// Global phase fixed so the first entry of magnitude above `1e-9` (row
/// major) is real and positive.
fn canonical_phase(u: &ComplexMatrix) -> ComplexMatrix {
    let z = u
        .as_slice()
        .iter()
        .find(|z| z.norm() > 1e-9)
        .copied()
        .unwrap_or(C64::new(1.0, 0.0));
    u.scale_c(z.conj() / z.norm())
}

/// The single-qubit Clifford group modulo phase, generated from `H` and `S`.
pub fn clifford_1q() -> UnitaryEnsemble {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let h = ComplexMatrix::from_real_rows(&[&[s, s], &[s, -s]]);
    let mut p = ComplexMatrix::identity(2);
    p[(1, 1)] = C64::new(0.0, 1.0);
    let gens = [h, p];
    let mut group = vec![ComplexMatrix::identity(2)];
    let mut frontier = 0;
    while frontier < group.len() {
        let u = group[frontier].clone();
        frontier += 1;
        for g in &gens {
            let v = canonical_phase(&(g * &u));
            if !group.iter().any(|w| w.max_abs_diff(&v) < 1e-9) {
                group.push(v);
            }
        }
    }
    UnitaryEnsemble::new(group, DesignKind::Exact).expect("Clifford elements are unitary")
}

/// `size` independent Haar unitaries on `C^d`.
pub fn haar_ensemble(d: usize, size: usize, rng: &mut Stream) -> Result<UnitaryEnsemble> {
    if size == 0 {
        return Err(Error::InvalidParameter(
            "Haar ensemble needs at least one element".into(),
        ));
    }
    UnitaryEnsemble::new((0..size).map(|_| haar_unitary(d, rng)).collect(), DesignKind::Sampled)
}

/// Clifford group on qubit connections, `size` Haar samples elsewhere; each
/// sampled connection draws from its own substream of `rng`.
pub fn default_ensembles(graph: &ConnectionGraph, size: usize, rng: &Stream) -> Result<Vec<UnitaryEnsemble>> {
    graph
        .ref_dims()
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            if d == 2 {
                Ok(clifford_1q())
            } else {
                haar_ensemble(d, size, &mut rng.substream(i as u64))
            }
        })
        .collect()
}

/// Averages `ch` over conjugation by independent elements of each
/// connection's ensemble: `(1/N) sum_n (x)U_n^dagger ch((x)U_n . (x)U_n^dagger) (x)U_n`.
/// Connections are twirled one at a time and the Kraus set is compressed
/// whenever it outgrows the Choi rank bound.
pub fn twirl_channel(
    ch: &KrausChannel,
    graph: &ConnectionGraph,
    ensembles: &[UnitaryEnsemble],
) -> Result<KrausChannel> {
    let map = graph.identify(ch)?;
    let dims = graph.ref_dims();
    if ensembles.len() != dims.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} ensembles for {} connections",
            ensembles.len(),
            dims.len()
        )));
    }
    for (i, (e, &d)) in ensembles.iter().zip(&dims).enumerate() {
        if e.dim() != d {
            return Err(Error::DimensionMismatch(format!(
                "ensemble {i} has dimension {} but connection ref_dim is {d}",
                e.dim()
            )));
        }
    }
    let total = map.layout().total_dim();
    let rank_bound = (total * total).min(MAX_KRAUS);
    let mut ops = map.connection_kraus(ch);
    for (i, e) in ensembles.iter().enumerate() {
        let before: usize = dims[..i].iter().product();
        let after: usize = dims[i + 1..].iter().product();
        let weight = 1.0 / (e.len() as f64).sqrt();
        let mut next = Vec::with_capacity(ops.len() * e.len());
        for u in e.elements() {
            let full = kron(
                &kron(&ComplexMatrix::identity(before), u)?,
                &ComplexMatrix::identity(after),
            )?;
            let adj = full.adjoint();
            for a in &ops {
                next.push((&(&adj * a) * &full).scale(weight));
            }
        }
        if next.len() > MAX_KRAUS * 4 {
            return Err(Error::KrausCap {
                count: next.len(),
                max: MAX_KRAUS,
            });
        }
        ops = next;
        if ops.len() > rank_bound {
            let layout = map.layout().clone();
            ops = KrausChannel::unchecked(ops, layout.clone(), layout)?
                .compressed()?
                .kraus()
                .to_vec();
        }
    }
    let native: Vec<ComplexMatrix> = ops.iter().map(|a| map.to_native_order(a)).collect();
    KrausChannel::new(native, ch.in_layout().clone(), ch.out_layout().clone())
}
