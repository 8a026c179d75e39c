use std::io::{BufRead, BufReader, Read, Write};

use super::{DegreeMatrix, Edge, Layer, LayerKind, MultilayerGraph};
use crate::error::{MirgError, Result};

fn write_err(e: std::io::Error) -> MirgError {
    MirgError::io("<edge list>", e)
}

/// TSV lines `layer<TAB>i<TAB>j<TAB>multiplicity` with 1-based layer and
/// node ids, `i <= j`, sorted by `(layer, i, j)`.
pub fn write_edge_list<W: Write>(g: &MultilayerGraph, out: W) -> Result<()> {
    let mut out = std::io::BufWriter::new(out);
    for (l, layer) in g.layers().iter().enumerate() {
        for e in &layer.edges {
            writeln!(out, "{}\t{}\t{}\t{}", l + 1, e.i + 1, e.j + 1, e.multiplicity)
                .map_err(write_err)?;
        }
    }
    out.flush().map_err(write_err)
}

/// Parses the TSV edge list. Without `n` the node count is the largest id
/// seen; without `kinds` every layer is read as multi-edge and the layer
/// count is the largest layer id seen.
pub fn read_edge_list<R: Read>(
    input: R,
    n: Option<usize>,
    kinds: Option<&[LayerKind]>,
) -> Result<MultilayerGraph> {
    let mut per_layer: Vec<Vec<Edge>> = Vec::new();
    let mut max_node = 0usize;
    for (lineno, line) in BufReader::new(input).lines().enumerate() {
        let line = line.map_err(|e| MirgError::io("<edge list>", e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let parse = |s: &str| -> Result<u64> {
            s.trim().parse().map_err(|_| {
                MirgError::Format(format!("line {}: bad integer {s:?}", lineno + 1))
            })
        };
        if fields.len() != 4 {
            return Err(MirgError::Format(format!(
                "line {}: expected 4 tab-separated fields",
                lineno + 1
            )));
        }
        let (l, i, j, m) = (
            parse(fields[0])?,
            parse(fields[1])?,
            parse(fields[2])?,
            parse(fields[3])?,
        );
        if l == 0 || i == 0 || j == 0 || i > u32::MAX as u64 || j > u32::MAX as u64 {
            return Err(MirgError::Format(format!(
                "line {}: ids are 1-based",
                lineno + 1
            )));
        }
        let m = u32::try_from(m)
            .map_err(|_| MirgError::Format(format!("line {}: multiplicity too large", lineno + 1)))?;
        let l = l as usize;
        if per_layer.len() < l {
            per_layer.resize_with(l, Vec::new);
        }
        max_node = max_node.max(j as usize).max(i as usize);
        per_layer[l - 1].push(Edge {
            i: i as u32 - 1,
            j: j as u32 - 1,
            multiplicity: m,
        });
    }
    let n = n.unwrap_or(max_node);
    if let Some(kinds) = kinds {
        if kinds.len() < per_layer.len() {
            return Err(MirgError::Shape(format!(
                "edge list has {} layers but {} kinds were given",
                per_layer.len(),
                kinds.len()
            )));
        }
        per_layer.resize_with(kinds.len(), Vec::new);
    }
    let layers = per_layer
        .into_iter()
        .enumerate()
        .map(|(l, edges)| Layer {
            kind: kinds.map_or(LayerKind::MultiEdge, |k| k[l]),
            edges,
        })
        .collect();
    MultilayerGraph::new(n, layers)
}

/// Headered CSV `node,d1,...,dL`.
pub fn write_degree_csv<W: Write>(d: &DegreeMatrix, out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    let mut header = vec!["node".to_string()];
    header.extend((1..=d.layers()).map(|l| format!("d{l}")));
    wtr.write_record(&header)?;
    for (i, row) in d.rows().enumerate() {
        let mut rec = vec![(i + 1).to_string()];
        rec.extend(row.iter().map(u64::to_string));
        wtr.write_record(&rec)?;
    }
    wtr.flush().map_err(|e| MirgError::io("<degree csv>", e))?;
    Ok(())
}

pub fn read_degree_csv<R: Read>(input: R) -> Result<DegreeMatrix> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers()?.clone();
    if headers.get(0) != Some("node") || headers.len() < 2 {
        return Err(MirgError::Format("expected header node,d1,...,dL".into()));
    }
    let layers = headers.len() - 1;
    let mut data = Vec::new();
    let mut n = 0;
    for rec in rdr.records() {
        let rec = rec?;
        n += 1;
        for field in rec.iter().skip(1) {
            data.push(
                field
                    .trim()
                    .parse::<u64>()
                    .map_err(|_| MirgError::Format(format!("bad degree {field:?}")))?,
            );
        }
    }
    DegreeMatrix::new(n, layers, data)
}
