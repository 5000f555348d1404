//! hMETIS text format (`fmt = 11`: weighted hyperedges and vertices, 1-based pins)
//! and the matching one-part-per-line partition file.

use super::hypergraph::Hypergraph;
use crate::error::{Error, Result};

pub fn write_hmetis(h: &Hypergraph) -> String {
    let mut out = format!("{} {} 11\n", h.n_nets(), h.n_vertices());
    for j in 0..h.n_nets() {
        out.push_str(&h.cost(j).to_string());
        for &v in h.pins(j) {
            out.push(' ');
            out.push_str(&(v + 1).to_string());
        }
        out.push('\n');
    }
    for &w in h.weights() {
        out.push_str(&w.to_string());
        out.push('\n');
    }
    out
}

fn malformed(message: impl Into<String>) -> Error {
    Error::Malformed {
        what: "hMETIS hypergraph",
        message: message.into(),
    }
}

fn parse_u64(tok: &str, line: usize) -> Result<u64> {
    tok.parse()
        .map_err(|_| malformed(format!("line {line}: expected an unsigned integer, got {tok:?}")))
}

/// Reads formats 0, 1, 10 and 11. Comment lines start with `%`.
pub fn parse_hmetis(text: &str) -> Result<Hypergraph> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('%'));
    let (no, header) = lines.next().ok_or_else(|| malformed("empty input"))?;
    let head: Vec<u64> = header.split_whitespace().map(|t| parse_u64(t, no)).collect::<Result<_>>()?;
    let (n_nets, n_vertices, fmt) = match head[..] {
        [e, v] => (e as usize, v as usize, 0),
        [e, v, f] => (e as usize, v as usize, f),
        _ => return Err(malformed(format!("line {no}: header needs 2 or 3 fields"))),
    };
    let net_weights = fmt % 10 == 1;
    let vertex_weights = fmt / 10 == 1;
    if !matches!(fmt, 0 | 1 | 10 | 11) {
        return Err(malformed(format!("unsupported format code {fmt}")));
    }
    let mut nets = Vec::with_capacity(n_nets);
    let mut costs = Vec::with_capacity(n_nets);
    for j in 0..n_nets {
        let (no, line) = lines
            .next()
            .ok_or_else(|| malformed(format!("expected {n_nets} hyperedges, found {j}")))?;
        let mut toks = line.split_whitespace();
        let cost = if net_weights {
            parse_u64(toks.next().expect("non-empty line"), no)?
        } else {
            1
        };
        let pins = toks
            .map(|t| match parse_u64(t, no)? {
                0 => Err(malformed(format!("line {no}: pins are 1-based"))),
                p => Ok(p as usize - 1),
            })
            .collect::<Result<Vec<_>>>()?;
        nets.push(pins);
        costs.push(cost);
    }
    let mut weights = vec![1u64; n_vertices];
    if vertex_weights {
        for (v, w) in weights.iter_mut().enumerate() {
            let (no, line) = lines
                .next()
                .ok_or_else(|| malformed(format!("expected {n_vertices} vertex weights, found {v}")))?;
            *w = parse_u64(line, no)?;
        }
    }
    if let Some((no, _)) = lines.next() {
        return Err(malformed(format!("line {no}: trailing content")));
    }
    Hypergraph::new(weights, nets, costs).map_err(|e| malformed(e.to_string()))
}

pub fn write_partition(assignment: &[usize]) -> String {
    assignment.iter().map(|p| format!("{p}\n")).collect()
}

pub fn parse_partition(text: &str) -> Result<Vec<usize>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim().parse().map_err(|_| Error::Malformed {
                what: "partition file",
                message: format!("line {}: expected a part index, got {:?}", i + 1, l.trim()),
            })
        })
        .collect()
}
