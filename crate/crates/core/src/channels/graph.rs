use serde::{Deserialize, Serialize};

use super::KrausChannel;
use crate::tensor::{ComplexMatrix, SystemLayout};
use crate::{Error, Result, MAX_CONNECTIONS};

/// One sender-to-receiver link carrying a quantum message of dimension `ref_dim`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Connection {
    pub sender: usize,
    pub receiver: usize,
    pub ref_dim: usize,
}

/// The connection set of a k-sender, m-receiver channel.
///
/// When a sender's input leg has dimension equal to the product of the
/// `ref_dim`s of its connections (in connection order), the leg is read as a
/// tensor product of per-connection sub-legs, and likewise on the receiver
/// side. That is the identification used by all fidelity functionals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConnectionGraph {
    senders: usize,
    receivers: usize,
    connections: Vec<Connection>,
}

impl ConnectionGraph {
    pub fn new(senders: usize, receivers: usize, connections: Vec<Connection>) -> Result<Self> {
        if connections.is_empty() {
            return Err(Error::Graph("no connections".into()));
        }
        if connections.len() > MAX_CONNECTIONS {
            return Err(Error::Graph(format!(
                "{} connections exceed the maximum {MAX_CONNECTIONS}",
                connections.len()
            )));
        }
        for (i, c) in connections.iter().enumerate() {
            if c.sender >= senders || c.receiver >= receivers {
                return Err(Error::Graph(format!(
                    "connection {i} ({} -> {}) outside {senders} senders / {receivers} receivers",
                    c.sender, c.receiver
                )));
            }
            if c.ref_dim == 0 {
                return Err(Error::Graph(format!("connection {i} has ref_dim 0")));
            }
            if connections[..i]
                .iter()
                .any(|o| o.sender == c.sender && o.receiver == c.receiver)
            {
                return Err(Error::Graph(format!(
                    "duplicate connection {} -> {}",
                    c.sender, c.receiver
                )));
            }
        }
        Ok(ConnectionGraph {
            senders,
            receivers,
            connections,
        })
    }

    /// Single sender, single receiver, one connection of dimension `d`.
    pub fn single(d: usize) -> Self {
        ConnectionGraph {
            senders: 1,
            receivers: 1,
            connections: vec![Connection {
                sender: 0,
                receiver: 0,
                ref_dim: d,
            }],
        }
    }

    /// Connection `i` runs from sender `i` to receiver `i` with dimension `dims[i]`.
    pub fn diagonal(dims: &[usize]) -> Result<Self> {
        let n = dims.len();
        Self::new(
            n,
            n,
            dims.iter()
                .enumerate()
                .map(|(i, &d)| Connection {
                    sender: i,
                    receiver: i,
                    ref_dim: d,
                })
                .collect(),
        )
    }

    pub fn senders(&self) -> usize {
        self.senders
    }

    pub fn receivers(&self) -> usize {
        self.receivers
    }

    pub fn connections(&self) -> &[Connection] {
        &self.connections
    }

    pub fn len(&self) -> usize {
        self.connections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.connections.is_empty()
    }

    pub fn ref_dims(&self) -> Vec<usize> {
        self.connections.iter().map(|c| c.ref_dim).collect()
    }

    /// Connection indices per sender, ascending.
    pub fn sender_groups(&self) -> Vec<Vec<usize>> {
        let mut g = vec![Vec::new(); self.senders];
        for (i, c) in self.connections.iter().enumerate() {
            g[c.sender].push(i);
        }
        g
    }

    /// Connection indices per receiver, ascending.
    pub fn receiver_groups(&self) -> Vec<Vec<usize>> {
        let mut g = vec![Vec::new(); self.receivers];
        for (i, c) in self.connections.iter().enumerate() {
            g[c.receiver].push(i);
        }
        g
    }

    /// Graph of the `n`-fold channel: same links, `ref_dim^n`.
    pub fn power(&self, n: usize) -> Result<Self> {
        let mut connections = self.connections.clone();
        for c in &mut connections {
            c.ref_dim = c.ref_dim.checked_pow(n as u32).ok_or(Error::DimensionCap {
                dim: usize::MAX,
                max: crate::MAX_DIM,
            })?;
        }
        Self::new(self.senders, self.receivers, connections)
    }

    /// Checks that sender and receiver counts match the channel's legs.
    pub fn check_channel(&self, ch: &KrausChannel) -> Result<()> {
        if ch.in_layout().num_legs() != self.senders || ch.out_layout().num_legs() != self.receivers {
            return Err(Error::Graph(format!(
                "graph has {} senders / {} receivers but channel has {} input / {} output legs",
                self.senders,
                self.receivers,
                ch.in_layout().num_legs(),
                ch.out_layout().num_legs()
            )));
        }
        Ok(())
    }

    /// Per-connection identification of input and output legs.
    pub fn identify(&self, ch: &KrausChannel) -> Result<ConnectionMap> {
        self.check_channel(ch)?;
        let dims = self.ref_dims();
        let in_map = self.side_map(ch.in_layout(), &self.sender_groups(), "sender")?;
        let out_map = self.side_map(ch.out_layout(), &self.receiver_groups(), "receiver")?;
        Ok(ConnectionMap {
            layout: SystemLayout::new(dims)?,
            in_map,
            out_map,
        })
    }

    /// Sub-leg dimensions of each sender leg (for grouped tensor powers).
    pub fn sender_sublegs(&self) -> Vec<Vec<usize>> {
        self.sender_groups()
            .iter()
            .map(|g| g.iter().map(|&i| self.connections[i].ref_dim).collect())
            .collect()
    }

    pub fn receiver_sublegs(&self) -> Vec<Vec<usize>> {
        self.receiver_groups()
            .iter()
            .map(|g| g.iter().map(|&i| self.connections[i].ref_dim).collect())
            .collect()
    }

    fn side_map(&self, native: &SystemLayout, groups: &[Vec<usize>], side: &str) -> Result<Vec<usize>> {
        let dims = self.ref_dims();
        for (leg, group) in groups.iter().enumerate() {
            let expect: usize = group.iter().map(|&i| dims[i]).product();
            if expect != native.leg_dims()[leg] {
                return Err(Error::Identification(format!(
                    "{side} leg {leg} has dimension {} but its connections {:?} multiply to {expect}",
                    native.leg_dims()[leg],
                    group
                )));
            }
        }
        connection_to_native(groups, &dims)
    }
}

/// Map from connection-ordered flat index to native flat index, where native
/// leg `l` is the product of the sub-legs `groups[l]` (connection indices,
/// ascending) with per-connection dimensions `dims`.
pub(crate) fn connection_to_native(groups: &[Vec<usize>], dims: &[usize]) -> Result<Vec<usize>> {
    let mut fine = Vec::new();
    let mut conn_of_fine = Vec::new();
    for group in groups {
        for &i in group {
            fine.push(dims[i]);
            conn_of_fine.push(i);
        }
    }
    let fine_layout = SystemLayout::new(fine)?;
    let mut order: Vec<usize> = (0..conn_of_fine.len()).collect();
    order.sort_by_key(|&f| conn_of_fine[f]);
    let (_, map) = fine_layout.permuted(&order)?;
    Ok(map)
}

/// Basis maps between a channel's native leg order and connection order
/// `(A_0, A_1, ..)` / `(B_0, B_1, ..)`.
#[derive(Clone, Debug)]
pub struct ConnectionMap {
    layout: SystemLayout,
    in_map: Vec<usize>,
    out_map: Vec<usize>,
}

impl ConnectionMap {
    /// Connection-ordered layout, one leg per connection.
    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    pub fn in_map(&self) -> &[usize] {
        &self.in_map
    }

    pub fn out_map(&self) -> &[usize] {
        &self.out_map
    }

    /// Kraus operator rewritten in connection order on both sides.
    pub fn to_connection_order(&self, a: &ComplexMatrix) -> ComplexMatrix {
        a.reindexed(&self.out_map, &self.in_map)
    }

    /// Kraus operator rewritten from connection order back to native order.
    pub fn to_native_order(&self, a: &ComplexMatrix) -> ComplexMatrix {
        let inv_out = invert(&self.out_map);
        let inv_in = invert(&self.in_map);
        a.reindexed(&inv_out, &inv_in)
    }

    /// All Kraus operators of `ch` in connection order.
    pub fn connection_kraus(&self, ch: &KrausChannel) -> Vec<ComplexMatrix> {
        ch.kraus().iter().map(|a| self.to_connection_order(a)).collect()
    }

    /// Native input index of a connection-ordered input index.
    pub fn native_input(&self, conn_index: usize) -> usize {
        self.in_map[conn_index]
    }

    pub fn native_output(&self, conn_index: usize) -> usize {
        self.out_map[conn_index]
    }
}

pub(crate) fn invert(map: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; map.len()];
    for (i, &j) in map.iter().enumerate() {
        inv[j] = i;
    }
    inv
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_and_duplicates() {
        let c = |s, r| Connection {
            sender: s,
            receiver: r,
            ref_dim: 2,
        };
        assert!(ConnectionGraph::new(1, 1, vec![c(1, 0)]).is_err());
        assert!(ConnectionGraph::new(2, 2, vec![c(0, 0), c(0, 0)]).is_err());
        assert!(ConnectionGraph::new(2, 2, vec![c(0, 0), c(0, 1), c(1, 0), c(1, 1)]).is_ok());
    }

    #[test]
    fn broadcast_identification_maps_sublegs() {
        // one sender leg (A0 A1), receivers B0 and B1
        let g = ConnectionGraph::new(
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
                    ref_dim: 3,
                },
            ],
        )
        .unwrap();
        let ch = crate::channels::identity(&SystemLayout::new(vec![6]).unwrap())
            .with_layouts(
                SystemLayout::new(vec![6]).unwrap(),
                SystemLayout::new(vec![2, 3]).unwrap(),
            )
            .unwrap();
        let map = g.identify(&ch).unwrap();
        assert_eq!(map.in_map(), &(0..6).collect::<Vec<_>>()[..]);
        assert_eq!(map.out_map(), &(0..6).collect::<Vec<_>>()[..]);
    }

    #[test]
    fn multiple_access_reorders_connections() {
        // senders 0,1 -> single receiver; connection 0 from sender 1, connection 1 from sender 0
        let g = ConnectionGraph::new(
            2,
            1,
            vec![
                Connection {
                    sender: 1,
                    receiver: 0,
                    ref_dim: 2,
                },
                Connection {
                    sender: 0,
                    receiver: 0,
                    ref_dim: 3,
                },
            ],
        )
        .unwrap();
        let in_layout = SystemLayout::new(vec![3, 2]).unwrap();
        let out_layout = SystemLayout::new(vec![6]).unwrap();
        let ch = crate::channels::identity(&SystemLayout::new(vec![6]).unwrap())
            .with_layouts(in_layout.clone(), out_layout)
            .unwrap();
        let map = g.identify(&ch).unwrap();
        // connection order (A0: dim 2, A1: dim 3); index a0*3 + a1 is native a1*2 + a0
        for a0 in 0..2 {
            for a1 in 0..3 {
                assert_eq!(map.native_input(a0 * 3 + a1), a1 * 2 + a0);
            }
        }
    }

    #[test]
    fn identification_fails_on_dimension_mismatch() {
        let g = ConnectionGraph::single(2);
        let ch = crate::channels::identity(&SystemLayout::single(3).unwrap());
        assert!(matches!(g.identify(&ch), Err(Error::Identification(_))));
    }
}
