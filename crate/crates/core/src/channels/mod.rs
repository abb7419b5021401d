//! Kraus-operator channels with k sender legs, m receiver legs and a
//! connection graph linking them.

mod builders;
mod graph;
mod io;
mod kraus;

pub use builders::{
    amplitude_damping, completely_depolarizing, dephasing, depolarizing, identity, mix_with_identity, pauli_x, pauli_y,
    pauli_z, product, qutrit_leaky, random_channel, unitary, weyl,
};
pub use graph::{Connection, ConnectionGraph, ConnectionMap};
pub use io::{read_channel, write_channel, ChannelDocument};
pub use kraus::{KrausChannel, ValidationReport, COMPLETENESS_TOL};

use crate::Result;

/// `n`-fold tensor power together with the matching graph. Sender and
/// receiver legs are regrouped so that each connection's `n` copies form one
/// contiguous sub-leg of dimension `ref_dim^n`.
pub fn tensor_power_with_graph(
    ch: &KrausChannel,
    graph: &ConnectionGraph,
    n: usize,
) -> Result<(KrausChannel, ConnectionGraph)> {
    graph.check_channel(ch)?;
    let powered = match graph.identify(ch) {
        Ok(_) => ch.tensor_power_grouped(n, &graph.sender_sublegs(), &graph.receiver_sublegs())?,
        Err(_) => ch.tensor_power(n)?,
    };
    Ok((powered, graph.power(n)?))
}
