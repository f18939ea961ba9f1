//! Plain-text edge lists.
//!
//! ```text
//! D=4
//! 1 2
//! 3 4
//! l = 0.5 1.25 2 2
//! ```
//!
//! The header comes first. Each edge is a 1-indexed pair `i j`. Blank lines
//! and `#` comments are ignored. The trailing `l = ...` line is only written
//! for learned structures and carries one lengthscale per variable.

use std::fmt::Write as _;

use super::DependencyGraph;
use crate::error::{Error, Result};

/// Largest `D` accepted from a file.
pub const MAX_FILE_DIM: usize = 4096;

pub fn format_edge_list(graph: &DependencyGraph) -> String {
    let mut out = format!("D={}\n", graph.dim());
    for (i, j) in graph.edges() {
        let _ = writeln!(out, "{} {}", i + 1, j + 1);
    }
    out
}

pub fn format_structure(graph: &DependencyGraph, lengthscales: &[f64]) -> String {
    let mut out = format_edge_list(graph);
    let values: Vec<String> = lengthscales.iter().map(|v| format!("{v}")).collect();
    let _ = writeln!(out, "l = {}", values.join(" "));
    out
}

pub fn parse_edge_list(text: &str) -> Result<DependencyGraph> {
    let (graph, lengthscales) = parse_structure(text)?;
    if lengthscales.is_some() {
        return Err(Error::parse(0, "unexpected lengthscale line in a plain edge list"));
    }
    Ok(graph)
}

/// Parses an edge list with an optional trailing lengthscale line.
pub fn parse_structure(text: &str) -> Result<(DependencyGraph, Option<Vec<f64>>)> {
    let mut graph: Option<DependencyGraph> = None;
    let mut lengthscales: Option<Vec<f64>> = None;

    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some(g) = graph.as_mut() else {
            graph = Some(parse_header(line, line_no)?);
            continue;
        };
        if lengthscales.is_some() {
            return Err(Error::parse(line_no, "content after the lengthscale line"));
        }
        if let Some(rest) = line.strip_prefix('l') {
            let rest = rest.trim_start();
            let Some(values) = rest.strip_prefix('=') else {
                return Err(Error::parse(line_no, "expected 'l = v1 ... vD'"));
            };
            let parsed = values
                .split_whitespace()
                .map(|tok| match tok.parse::<f64>() {
                    Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
                    _ => Err(Error::parse(line_no, format!("invalid lengthscale '{tok}'"))),
                })
                .collect::<Result<Vec<f64>>>()?;
            if parsed.len() != g.dim() {
                return Err(Error::parse(
                    line_no,
                    format!("expected {} lengthscales, found {}", g.dim(), parsed.len()),
                ));
            }
            lengthscales = Some(parsed);
            continue;
        }
        let mut tokens = line.split_whitespace();
        let (Some(a), Some(b), None) = (tokens.next(), tokens.next(), tokens.next()) else {
            return Err(Error::parse(line_no, "expected an edge 'i j'"));
        };
        let i = parse_vertex(a, g.dim(), line_no)?;
        let j = parse_vertex(b, g.dim(), line_no)?;
        if i == j {
            return Err(Error::parse(line_no, format!("self-loop on vertex {}", i + 1)));
        }
        g.set_edge(i, j, true);
    }

    let graph = graph.ok_or_else(|| Error::parse(0, "missing 'D=<int>' header"))?;
    Ok((graph, lengthscales))
}

fn parse_header(line: &str, line_no: usize) -> Result<DependencyGraph> {
    let Some(rest) = line.strip_prefix("D") else {
        return Err(Error::parse(line_no, "expected header 'D=<int>'"));
    };
    let Some(value) = rest.trim_start().strip_prefix('=') else {
        return Err(Error::parse(line_no, "expected header 'D=<int>'"));
    };
    let dim: usize = value
        .trim()
        .parse()
        .map_err(|_| Error::parse(line_no, format!("invalid dimension '{}'", value.trim())))?;
    if dim == 0 || dim > MAX_FILE_DIM {
        return Err(Error::parse(
            line_no,
            format!("dimension must be in 1..={MAX_FILE_DIM}"),
        ));
    }
    Ok(DependencyGraph::empty(dim))
}

fn parse_vertex(tok: &str, dim: usize, line_no: usize) -> Result<usize> {
    match tok.parse::<usize>() {
        Ok(v) if (1..=dim).contains(&v) => Ok(v - 1),
        _ => Err(Error::parse(line_no, format!("vertex '{tok}' is not in 1..={dim}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_example() {
        let g = parse_edge_list("D=4\n1 2\n\n# comment\n3 4 # trailing\n").unwrap();
        assert_eq!(g.edges(), vec![(0, 1), (2, 3)]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_edge_list("D=3\n1 2\n1 5\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        assert!(parse_edge_list("").is_err());
        assert!(parse_edge_list("1 2\n").is_err());
        assert!(parse_edge_list("D=3\n2 2\n").is_err());
        assert!(parse_edge_list("D=3\n1 2 3\n").is_err());
        assert!(parse_edge_list("D=0\n").is_err());
        assert!(parse_edge_list("D=99999999999\n").is_err());
    }

    #[test]
    fn structure_with_lengthscales() {
        let g = DependencyGraph::star(3);
        let text = format_structure(&g, &[0.5, 1.0, 2.25]);
        let (back, l) = parse_structure(&text).unwrap();
        assert_eq!(back, g);
        assert_eq!(l.unwrap(), vec![0.5, 1.0, 2.25]);
        assert!(parse_structure("D=2\nl = 1\n").is_err());
        assert!(parse_structure("D=2\nl = 1 -1\n").is_err());
        assert!(parse_structure("D=2\nl = 1 1\n1 2\n").is_err());
        assert!(parse_edge_list(&text).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(d in 1usize..12, bits in proptest::collection::vec(any::<bool>(), 66)) {
            let mut g = DependencyGraph::empty(d);
            let mut k = 0;
            for i in 0..d {
                for j in i + 1..d {
                    g.set_edge(i, j, bits[k]);
                    k += 1;
                }
            }
            prop_assert_eq!(parse_edge_list(&format_edge_list(&g)).unwrap(), g);
        }

        #[test]
        fn never_panics(text in "\\PC{0,200}") {
            let _ = parse_structure(&text);
        }
    }
}
