//! Named channels with known behaviour, used by the verification suite.

use crate::channels::{
    amplitude_damping, dephasing, depolarizing, identity, mix_with_identity, product, qutrit_leaky, random_channel,
    Connection, ConnectionGraph, KrausChannel,
};
use crate::rng::Stream;
use crate::tensor::{ComplexMatrix, DensityOperator, SystemLayout};
use crate::Result;

#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: &'static str,
    pub channel: KrausChannel,
    pub graph: ConnectionGraph,
}

fn single(name: &'static str, channel: KrausChannel) -> Fixture {
    let d = channel.in_dim();
    Fixture {
        name,
        channel,
        graph: ConnectionGraph::single(d),
    }
}

/// Random mixed state `G G^dagger / tr(G G^dagger)` with a complex Gaussian
/// `G` (the Hilbert-Schmidt ensemble) on `layout`.
pub fn random_density(layout: &SystemLayout, rng: &mut Stream) -> Result<DensityOperator> {
    let d = layout.total_dim();
    let g = ComplexMatrix::from_fn(d, d, |_, _| rng.complex_normal());
    let m = &g * &g.adjoint();
    let t = m.trace().re;
    DensityOperator::new(m.scale(1.0 / t).hermitize(), layout.clone())
}

/// `(1 - w) identity + w random` on `graph`, with a random map of the
/// connection-ordered system whose environment is 2.
pub fn near_identity(graph: &ConnectionGraph, w: f64, rng: &mut Stream) -> Result<KrausChannel> {
    let singles: Vec<KrausChannel> = graph
        .ref_dims()
        .iter()
        .map(|&d| SystemLayout::single(d).map(|l| identity(&l)))
        .collect::<Result<_>>()?;
    let id = product(&singles, graph)?;
    let noise = random_channel(id.in_layout(), id.out_layout(), 2, rng)?;
    mix_with_identity(&noise, w)
}

/// The built-in fixture list, in a fixed order.
pub fn builtin() -> Result<Vec<Fixture>> {
    let q = SystemLayout::single(2)?;
    let pair = ConnectionGraph::diagonal(&[2, 2])?;
    let broadcast = ConnectionGraph::new(
        1,
        2,
        vec![
            Connection {
                sender: 0,
                receiver: 0,
                ref_dim: 2,
            },
            Connection {
                sender: 0,
                receiver: 1,
                ref_dim: 2,
            },
        ],
    )?;
    Ok(vec![
        single("identity_qubit", identity(&q)),
        single("depolarizing_qubit_p0.1", depolarizing(2, 0.1)?),
        single("amplitude_damping_g0.2", amplitude_damping(0.2)?),
        Fixture {
            name: "dephasing_pair_p0.05_p0.1",
            channel: product(&[dephasing(0.05)?, dephasing(0.1)?], &pair)?,
            graph: pair.clone(),
        },
        Fixture {
            name: "broadcast_depolarizing_p0.05",
            channel: product(&[depolarizing(2, 0.05)?, depolarizing(2, 0.05)?], &broadcast)?,
            graph: broadcast,
        },
        Fixture {
            name: "near_identity_pair_w0.05",
            channel: near_identity(&pair, 0.05, &mut Stream::new(2024))?,
            graph: pair,
        },
        single("leaky_qutrit", qutrit_leaky()?),
        single("depolarizing_qutrit_p0.2", depolarizing(3, 0.2)?),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_valid_and_uniquely_named() {
        let f = builtin().unwrap();
        let mut names: Vec<_> = f.iter().map(|x| x.name).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), f.len());
        for x in &f {
            assert!(x.channel.validate().passed, "{}", x.name);
            x.graph.identify(&x.channel).unwrap();
        }
    }
}
