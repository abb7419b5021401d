use std::f64::consts::PI;

use super::graph::{connection_to_native, invert};
use super::{ConnectionGraph, KrausChannel};
use crate::rng::Stream;
use crate::tensor::{ComplexMatrix, SystemLayout, C64};
use crate::{Error, Result};

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("probability {p} outside [0, 1]")));
    }
    Ok(())
}

pub fn identity(layout: &SystemLayout) -> KrausChannel {
    KrausChannel::unchecked(
        vec![ComplexMatrix::identity(layout.total_dim())],
        layout.clone(),
        layout.clone(),
    )
    .expect("identity is well formed")
}

/// Heisenberg-Weyl operator `X^a Z^b` on `C^d`, with
/// `X|j> = |j+1>` and `Z|j> = w^j |j>`, `w = e^{2 pi i / d}`.
pub fn weyl(d: usize, a: usize, b: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(d, d);
    for j in 0..d {
        let phase = 2.0 * PI * ((b * j) % d) as f64 / d as f64;
        m[((j + a) % d, j)] = C64::from_polar(1.0, phase);
    }
    m
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
}

pub fn pauli_y() -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(2, 2);
    m[(0, 1)] = C64::new(0.0, -1.0);
    m[(1, 0)] = C64::new(0.0, 1.0);
    m
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::diag(&[1.0, -1.0])
}

/// `rho -> (1 - p) rho + p I/d`.
///
/// Qubits use `{sqrt(1-3p/4) I, sqrt(p/4) X, sqrt(p/4) Y, sqrt(p/4) Z}`; other
/// dimensions use the `d^2` Heisenberg-Weyl operators.
pub fn depolarizing(d: usize, p: f64) -> Result<KrausChannel> {
    check_probability(p)?;
    if d == 0 {
        return Err(Error::InvalidParameter("dimension 0".into()));
    }
    let ops = if d == 2 {
        vec![
            ComplexMatrix::identity(2).scale((1.0 - 0.75 * p).sqrt()),
            pauli_x().scale((p / 4.0).sqrt()),
            pauli_y().scale((p / 4.0).sqrt()),
            pauli_z().scale((p / 4.0).sqrt()),
        ]
    } else {
        let d2 = (d * d) as f64;
        let mut ops = Vec::with_capacity(d * d);
        for a in 0..d {
            for b in 0..d {
                let w = if a == 0 && b == 0 { 1.0 - p + p / d2 } else { p / d2 };
                ops.push(weyl(d, a, b).scale(w.sqrt()));
            }
        }
        ops
    };
    KrausChannel::from_kraus(ops)
}

/// Qubit dephasing `rho -> (1 - p) rho + p Z rho Z`.
pub fn dephasing(p: f64) -> Result<KrausChannel> {
    check_probability(p)?;
    KrausChannel::from_kraus(vec![
        ComplexMatrix::identity(2).scale((1.0 - p).sqrt()),
        pauli_z().scale(p.sqrt()),
    ])
}

/// Qubit amplitude damping with decay probability `gamma`.
pub fn amplitude_damping(gamma: f64) -> Result<KrausChannel> {
    check_probability(gamma)?;
    let k0 = ComplexMatrix::diag(&[1.0, (1.0 - gamma).sqrt()]);
    let mut k1 = ComplexMatrix::zeros(2, 2);
    k1[(0, 1)] = C64::new(gamma.sqrt(), 0.0);
    KrausChannel::from_kraus(vec![k0, k1])
}

/// Channel that replaces every input by the fixed state `I/d_out`.
pub fn completely_depolarizing(in_layout: &SystemLayout, out_layout: &SystemLayout) -> Result<KrausChannel> {
    let (din, dout) = (in_layout.total_dim(), out_layout.total_dim());
    let s = 1.0 / (dout as f64).sqrt();
    let mut ops = Vec::with_capacity(din * dout);
    for i in 0..dout {
        for j in 0..din {
            let mut m = ComplexMatrix::zeros(dout, din);
            m[(i, j)] = C64::new(s, 0.0);
            ops.push(m);
        }
    }
    KrausChannel::new(ops, in_layout.clone(), out_layout.clone())
}

/// km-user channel acting as `(x)_i channels[i]` on the connections of
/// `graph`. Each `channels[i]` is a single-leg map from `C^{ref_dim_i}`;
/// sender legs are products of their connections' input dimensions and
/// receiver legs products of the output dimensions, in connection order.
pub fn product(channels: &[KrausChannel], graph: &ConnectionGraph) -> Result<KrausChannel> {
    if channels.len() != graph.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} channels for {} connections",
            channels.len(),
            graph.len()
        )));
    }
    for (i, (ch, c)) in channels.iter().zip(graph.connections()).enumerate() {
        if ch.in_dim() != c.ref_dim {
            return Err(Error::DimensionMismatch(format!(
                "channel {i} has input dimension {} but connection ref_dim {}",
                ch.in_dim(),
                c.ref_dim
            )));
        }
    }
    let mut joint = channels[0].with_layouts(
        SystemLayout::single(channels[0].in_dim())?,
        SystemLayout::single(channels[0].out_dim())?,
    )?;
    for ch in &channels[1..] {
        let ch = ch.with_layouts(SystemLayout::single(ch.in_dim())?, SystemLayout::single(ch.out_dim())?)?;
        joint = joint.tensor(&ch)?;
    }
    // joint acts in connection order; regroup into sender and receiver legs
    let in_dims: Vec<usize> = channels.iter().map(|c| c.in_dim()).collect();
    let out_dims: Vec<usize> = channels.iter().map(|c| c.out_dim()).collect();
    let senders = graph.sender_groups();
    let receivers = graph.receiver_groups();
    let leg = |groups: &[Vec<usize>], dims: &[usize]| -> Vec<usize> {
        groups.iter().map(|g| g.iter().map(|&i| dims[i]).product()).collect()
    };
    let in_layout = SystemLayout::new(leg(&senders, &in_dims))?;
    let out_layout = SystemLayout::new(leg(&receivers, &out_dims))?;
    let inv_in = invert(&connection_to_native(&senders, &in_dims)?);
    let inv_out = invert(&connection_to_native(&receivers, &out_dims)?);
    let ops = joint.kraus().iter().map(|a| a.reindexed(&inv_out, &inv_in)).collect();
    KrausChannel::new(ops, in_layout, out_layout)
}

/// Random CPTP map via a Haar-like isometry: orthonormalise the columns of a
/// complex Gaussian `(d_out * env) x d_in` matrix and slice it into `env`
/// Kraus blocks.
pub fn random_channel(
    in_layout: &SystemLayout,
    out_layout: &SystemLayout,
    env: usize,
    rng: &mut Stream,
) -> Result<KrausChannel> {
    let (din, dout) = (in_layout.total_dim(), out_layout.total_dim());
    if env == 0 || dout * env < din {
        return Err(Error::InvalidParameter(format!(
            "environment {env} too small for an isometry {din} -> {dout} x env"
        )));
    }
    let rows = dout * env;
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(din);
    for _ in 0..din {
        let mut v: Vec<C64> = (0..rows).map(|_| rng.complex_normal()).collect();
        for _ in 0..2 {
            for q in &cols {
                let proj = ComplexMatrix::inner(q, &v);
                for (x, &y) in v.iter_mut().zip(q) {
                    *x -= proj * y;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        cols.push(v);
    }
    let ops = (0..env)
        .map(|e| ComplexMatrix::from_fn(dout, din, |b, a| cols[a][b * env + e]))
        .collect();
    KrausChannel::new(ops, in_layout.clone(), out_layout.clone())
}

/// `(1 - w) * identity + w * other` as a Kraus union.
pub fn mix_with_identity(other: &KrausChannel, w: f64) -> Result<KrausChannel> {
    check_probability(w)?;
    if other.in_layout() != other.out_layout() {
        return Err(Error::DimensionMismatch(
            "mixing with identity needs equal layouts".into(),
        ));
    }
    let mut ops = vec![ComplexMatrix::identity(other.in_dim()).scale((1.0 - w).sqrt())];
    ops.extend(other.kraus().iter().map(|a| a.scale(w.sqrt())));
    KrausChannel::new(ops, other.in_layout().clone(), other.out_layout().clone())
}

/// Qutrit map that is the identity on `span{|0>, |1>}` and sends `|2>` to `|0>`.
pub fn qutrit_leaky() -> Result<KrausChannel> {
    let k0 = ComplexMatrix::diag(&[1.0, 1.0, 0.0]);
    let mut k1 = ComplexMatrix::zeros(3, 3);
    k1[(0, 2)] = C64::new(1.0, 0.0);
    KrausChannel::from_kraus(vec![k0, k1])
}

/// `U (.) U^dagger`.
pub fn unitary(u: &ComplexMatrix) -> Result<KrausChannel> {
    KrausChannel::from_kraus(vec![u.clone()])
}
