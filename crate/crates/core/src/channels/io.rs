//! Channel file format: a JSON document with `in_dims`, `out_dims`,
//! `connections` and `kraus`. Each Kraus matrix is a list of rows and each
//! entry a `[re, im]` pair written in shortest round-trip decimal form.

use std::fmt::Write as _;

use serde::Deserialize;

use super::{Connection, ConnectionGraph, KrausChannel};
use crate::tensor::{ComplexMatrix, SystemLayout, C64};
use crate::{Error, Result};

/// A channel together with its connection graph, as stored on disk.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelDocument {
    pub channel: KrausChannel,
    pub graph: ConnectionGraph,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    in_dims: Vec<usize>,
    out_dims: Vec<usize>,
    connections: Vec<Connection>,
    kraus: Vec<Vec<Vec<[f64; 2]>>>,
}

fn field(field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Field {
        field: field.into(),
        message: message.into(),
    }
}

pub fn read_channel(text: &str) -> Result<ChannelDocument> {
    let raw: RawDocument = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let in_layout = SystemLayout::new(raw.in_dims.clone()).map_err(|e| field("in_dims", e.to_string()))?;
    let out_layout = SystemLayout::new(raw.out_dims.clone()).map_err(|e| field("out_dims", e.to_string()))?;
    let (rows, cols) = (out_layout.total_dim(), in_layout.total_dim());
    if raw.kraus.is_empty() {
        return Err(field("kraus", "no Kraus operators"));
    }
    let mut ops = Vec::with_capacity(raw.kraus.len());
    for (k, m) in raw.kraus.iter().enumerate() {
        if m.len() != rows {
            return Err(field(
                format!("kraus[{k}]"),
                format!(
                    "{} rows but the product of out_dims {:?} is {rows}",
                    m.len(),
                    raw.out_dims
                ),
            ));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for (r, row) in m.iter().enumerate() {
            if row.len() != cols {
                return Err(field(
                    format!("kraus[{k}][{r}]"),
                    format!(
                        "{} columns but the product of in_dims {:?} is {cols}",
                        row.len(),
                        raw.in_dims
                    ),
                ));
            }
            data.extend(row.iter().map(|&[re, im]| C64::new(re, im)));
        }
        ops.push(ComplexMatrix::from_vec(rows, cols, data)?);
    }
    let graph = ConnectionGraph::new(raw.in_dims.len(), raw.out_dims.len(), raw.connections)
        .map_err(|e| field("connections", e.to_string()))?;
    let channel = KrausChannel::new(ops, in_layout, out_layout)?;
    Ok(ChannelDocument { channel, graph })
}

fn dims(out: &mut String, key: &str, v: &[usize]) {
    let list: Vec<String> = v.iter().map(|d| d.to_string()).collect();
    let _ = writeln!(out, "  \"{key}\": [{}],", list.join(", "));
}

/// Serialises a channel; `read_channel(write_channel(..))` reproduces every
/// Kraus entry bit for bit.
pub fn write_channel(channel: &KrausChannel, graph: &ConnectionGraph) -> String {
    let mut out = String::from("{\n");
    dims(&mut out, "in_dims", channel.in_layout().leg_dims());
    dims(&mut out, "out_dims", channel.out_layout().leg_dims());
    out.push_str("  \"connections\": [\n");
    let conns: Vec<String> = graph
        .connections()
        .iter()
        .map(|c| {
            format!(
                "    {{\"sender\": {}, \"receiver\": {}, \"ref_dim\": {}}}",
                c.sender, c.receiver, c.ref_dim
            )
        })
        .collect();
    out.push_str(&conns.join(",\n"));
    out.push_str("\n  ],\n  \"kraus\": [\n");
    let mats: Vec<String> = channel
        .kraus()
        .iter()
        .map(|a| {
            let rows: Vec<String> = (0..a.rows())
                .map(|i| {
                    let entries: Vec<String> = (0..a.cols())
                        .map(|j| format!("[{:?}, {:?}]", a[(i, j)].re, a[(i, j)].im))
                        .collect();
                    format!("      [{}]", entries.join(", "))
                })
                .collect();
            format!("    [\n{}\n    ]", rows.join(",\n"))
        })
        .collect();
    out.push_str(&mats.join(",\n"));
    out.push_str("\n  ]\n}\n");
    out
}
