//! Text formats. Vertex ids are 1-based in files and 0-based in memory.

use std::fmt::Write as _;

use crate::coloring::{Color, Coloring, ListAssignment, SetColoring};
use crate::error::{Error, Result};
use crate::graph::{Graph, Hypergraph};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

/// Non-blank, non-comment lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('c') && !l.starts_with('#'))
}

fn num<T: std::str::FromStr>(tok: &str, line: usize) -> Result<T> {
    tok.parse()
        .map_err(|_| parse_err(line, format!("expected a non-negative integer, got {tok:?}")))
}

fn vertex(tok: &str, n: usize, line: usize) -> Result<usize> {
    let v: usize = num(tok, line)?;
    if v == 0 || v > n {
        return Err(parse_err(line, format!("vertex {v} outside 1..={n}")));
    }
    Ok(v - 1)
}

pub fn parse_graph(text: &str) -> Result<Graph> {
    let mut n = None;
    let mut edges = Vec::new();
    for (ln, line) in content_lines(text) {
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks[0] {
            "p" => {
                if n.is_some() {
                    return Err(parse_err(ln, "duplicate problem line"));
                }
                if toks.len() != 4 || (toks[1] != "edge" && toks[1] != "col") {
                    return Err(parse_err(ln, "expected `p edge <n> <m>`"));
                }
                n = Some(num::<usize>(toks[2], ln)?);
            }
            "e" => {
                let n = n.ok_or_else(|| parse_err(ln, "edge before problem line"))?;
                if toks.len() != 3 {
                    return Err(parse_err(ln, "expected `e <u> <v>`"));
                }
                let (u, v) = (vertex(toks[1], n, ln)?, vertex(toks[2], n, ln)?);
                if u == v {
                    return Err(parse_err(ln, format!("self-loop at vertex {}", u + 1)));
                }
                edges.push((u, v));
            }
            other => return Err(parse_err(ln, format!("unknown line type {other:?}"))),
        }
    }
    let n = n.ok_or_else(|| parse_err(0, "missing `p edge` line"))?;
    Graph::from_edges(n, &edges)
}

pub fn write_graph(g: &Graph) -> String {
    let mut s = format!("p edge {} {}\n", g.n(), g.edge_count());
    for (u, v) in g.edges() {
        writeln!(s, "e {} {}", u + 1, v + 1).unwrap();
    }
    s
}

/// One hyperedge per line; `n` comes from the graph it accompanies.
pub fn parse_hypergraph(text: &str, n: usize) -> Result<Hypergraph> {
    let mut edges = Vec::new();
    for (ln, line) in content_lines(text) {
        let e = line
            .split_whitespace()
            .map(|t| vertex(t, n, ln))
            .collect::<Result<Vec<_>>>()?;
        edges.push(e);
    }
    Hypergraph::new(n, edges)
}

pub fn write_hypergraph(h: &Hypergraph) -> String {
    let mut s = String::new();
    for e in h.edges() {
        let parts: Vec<String> = e.iter().map(|v| (v + 1).to_string()).collect();
        writeln!(s, "{}", parts.join(" ")).unwrap();
    }
    s
}

/// `vertex color` pairs; every vertex must appear exactly once.
pub fn parse_coloring(text: &str, n: usize) -> Result<Coloring> {
    let mut colors: Vec<Option<Color>> = vec![None; n];
    for (ln, line) in content_lines(text) {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(parse_err(ln, "expected `<vertex> <color>`"));
        }
        let v = vertex(toks[0], n, ln)?;
        let c: Color = num(toks[1], ln)?;
        if c == 0 {
            return Err(parse_err(ln, "colors are positive"));
        }
        if colors[v].replace(c).is_some() {
            return Err(parse_err(ln, format!("vertex {} colored twice", v + 1)));
        }
    }
    let colors = collect_all(colors)?;
    Coloring::new(colors)
}

fn collect_all<T>(items: Vec<Option<T>>) -> Result<Vec<T>> {
    let got = items.iter().filter(|x| x.is_some()).count();
    if got != items.len() {
        return Err(Error::LengthMismatch {
            expected: items.len(),
            got,
        });
    }
    Ok(items.into_iter().map(Option::unwrap).collect())
}

pub fn write_coloring(phi: &Coloring) -> String {
    let mut s = String::new();
    for (v, c) in phi.colors.iter().enumerate() {
        writeln!(s, "{} {}", v + 1, c).unwrap();
    }
    s
}

/// Header `p set <a> <b>`, then `vertex c1,...,cb` lines.
pub fn parse_set_coloring(text: &str, n: usize) -> Result<SetColoring> {
    let mut header = None;
    let mut sets: Vec<Option<Vec<Color>>> = vec![None; n];
    for (ln, line) in content_lines(text) {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks[0] == "p" {
            if toks.len() != 4 || toks[1] != "set" {
                return Err(parse_err(ln, "expected `p set <a> <b>`"));
            }
            header = Some((num::<u32>(toks[2], ln)?, num::<u32>(toks[3], ln)?));
            continue;
        }
        if toks.len() != 2 {
            return Err(parse_err(ln, "expected `<vertex> <c1,...,cb>`"));
        }
        let v = vertex(toks[0], n, ln)?;
        let cs = toks[1]
            .split(',')
            .map(|t| num::<Color>(t, ln))
            .collect::<Result<Vec<_>>>()?;
        if sets[v].replace(cs).is_some() {
            return Err(parse_err(ln, format!("vertex {} listed twice", v + 1)));
        }
    }
    let (a, b) = header.ok_or_else(|| parse_err(0, "missing `p set` line"))?;
    SetColoring::new(a, b, collect_all(sets)?)
}

pub fn write_set_coloring(psi: &SetColoring) -> String {
    let mut s = format!("p set {} {}\n", psi.a, psi.b);
    for (v, set) in psi.sets().iter().enumerate() {
        let parts: Vec<String> = set.iter().map(Color::to_string).collect();
        writeln!(s, "{} {}", v + 1, parts.join(",")).unwrap();
    }
    s
}

/// `vertex c1 c2 ...` lines; every vertex must appear exactly once.
pub fn parse_lists(text: &str, n: usize) -> Result<ListAssignment> {
    let mut lists: Vec<Option<Vec<Color>>> = vec![None; n];
    for (ln, line) in content_lines(text) {
        let mut toks = line.split_whitespace();
        let v = vertex(toks.next().unwrap(), n, ln)?;
        let l = toks.map(|t| num::<Color>(t, ln)).collect::<Result<Vec<_>>>()?;
        if lists[v].replace(l).is_some() {
            return Err(parse_err(ln, format!("vertex {} listed twice", v + 1)));
        }
    }
    ListAssignment::new(collect_all(lists)?)
}

pub fn write_lists(l: &ListAssignment) -> String {
    let mut s = String::new();
    for (v, list) in l.lists().iter().enumerate() {
        let parts: Vec<String> = list.iter().map(Color::to_string).collect();
        writeln!(s, "{} {}", v + 1, parts.join(" ")).unwrap();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, star_linear_hypergraph, GraphKind};
    use proptest::prelude::*;

    #[test]
    fn dimacs_with_comments() {
        let g = parse_graph("c pentagon\np edge 5 5\ne 1 2\ne 2 3\ne 3 4\ne 4 5\ne 5 1\n").unwrap();
        assert_eq!(g.n(), 5);
        assert_eq!(g.edge_count(), 5);
        assert!(g.has_edge(0, 4));
    }

    #[test]
    fn malformed_inputs_name_the_line() {
        let err = parse_graph("p edge 3 1\ne 1 4\n").unwrap_err();
        assert_eq!(err, Error::Parse { line: 2, msg: "vertex 4 outside 1..=3".into() });
        assert!(parse_graph("e 1 2\n").is_err());
        assert!(parse_graph("p edge 2 1\ne 1 1\n").is_err());
        assert!(parse_coloring("1 1\n", 2).is_err());
        assert!(parse_coloring("1 0\n", 1).is_err());
        assert!(parse_hypergraph("1 9\n", 3).is_err());
    }

    #[test]
    fn set_coloring_and_lists_round_trip() {
        let psi = SetColoring::new(5, 2, vec![vec![1, 2], vec![3, 4], vec![1, 5]]).unwrap();
        assert_eq!(parse_set_coloring(&write_set_coloring(&psi), 3).unwrap(), psi);
        let l = ListAssignment::new(vec![vec![1, 2], vec![7], vec![3, 9, 4]]).unwrap();
        assert_eq!(parse_lists(&write_lists(&l), 3).unwrap(), l);
    }

    proptest! {
        #[test]
        fn graph_and_hypergraph_round_trip(n in 1usize..30, p in 0.0f64..0.5, seed: u64) {
            let g = generate(GraphKind::Gnp { n, p }, seed).unwrap();
            prop_assert_eq!(&parse_graph(&write_graph(&g)).unwrap(), &g);
            let h = star_linear_hypergraph(&g);
            prop_assert_eq!(parse_hypergraph(&write_hypergraph(&h), n).unwrap(), h);
        }

        #[test]
        fn coloring_round_trip(cs in proptest::collection::vec(1u32..100, 1..40)) {
            let phi = Coloring::new(cs).unwrap();
            prop_assert_eq!(parse_coloring(&write_coloring(&phi), phi.len()).unwrap(), phi);
        }
    }
}
