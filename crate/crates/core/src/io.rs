//! Edge-list text format.
//!
//! One edge per line: `u v` for plain graphs, `u v c` for coloured ones.
//! `#` starts a comment, an optional header line `n <count>` fixes the vertex
//! count (otherwise the maximum label plus one is used).

use crate::graph::{ColouredGraph, Graph, GraphError};
use std::io::Write;
use std::path::Path;

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

struct RawEdges {
    n: usize,
    rows: Vec<(usize, usize, Option<usize>)>,
}

fn parse_raw(text: &str) -> Result<RawEdges, GraphError> {
    let mut rows = Vec::new();
    let mut header_n: Option<usize> = None;
    let mut max_label = 0usize;
    for (idx, raw) in text.lines().enumerate() {
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields[0] == "n" {
            if fields.len() != 2 {
                return Err(GraphError::Parse {
                    line: idx + 1,
                    msg: "header must be 'n <count>'".into(),
                });
            }
            header_n = Some(fields[1].parse().map_err(|_| GraphError::Parse {
                line: idx + 1,
                msg: format!("bad vertex count '{}'", fields[1]),
            })?);
            continue;
        }
        if fields.len() != 2 && fields.len() != 3 {
            return Err(GraphError::Parse {
                line: idx + 1,
                msg: format!("expected 'u v' or 'u v c', got '{line}'"),
            });
        }
        let mut nums = [0usize; 3];
        for (i, f) in fields.iter().enumerate() {
            nums[i] = f.parse().map_err(|_| GraphError::Parse {
                line: idx + 1,
                msg: format!("bad number '{f}'"),
            })?;
        }
        let colour = if fields.len() == 3 {
            Some(nums[2])
        } else {
            None
        };
        max_label = max_label.max(nums[0]).max(nums[1]);
        rows.push((nums[0], nums[1], colour));
    }
    let n = header_n.unwrap_or(if rows.is_empty() { 0 } else { max_label + 1 });
    Ok(RawEdges { n, rows })
}

pub fn parse_graph(text: &str) -> Result<Graph, GraphError> {
    let raw = parse_raw(text)?;
    let edges: Vec<(usize, usize)> = raw.rows.iter().map(|&(u, v, _)| (u, v)).collect();
    Graph::from_edges(raw.n, &edges)
}

/// Parses a coloured edge list and canonicalizes the palette to `0..C`.
pub fn parse_coloured_graph(text: &str) -> Result<ColouredGraph, GraphError> {
    let raw = parse_raw(text)?;
    let mut edges = Vec::with_capacity(raw.rows.len());
    for (i, &(u, v, c)) in raw.rows.iter().enumerate() {
        match c {
            Some(c) => edges.push((u, v, c)),
            None => {
                return Err(GraphError::Parse {
                    line: i + 1,
                    msg: format!("edge {u}-{v} is missing a colour"),
                })
            }
        }
    }
    Ok(ColouredGraph::from_coloured_edges(raw.n, &edges)?.canonical())
}

/// A parsed edge list, coloured when the file carries a colour column.
pub enum LoadedGraph {
    Plain(Graph),
    Coloured(ColouredGraph),
}

impl LoadedGraph {
    pub fn graph(&self) -> &Graph {
        match self {
            LoadedGraph::Plain(g) => g,
            LoadedGraph::Coloured(cg) => cg.graph(),
        }
    }
}

/// Parses either format: rows of `u v c` give a coloured graph, rows of
/// `u v` a plain one. Mixing the two is an error.
pub fn parse_any(text: &str) -> Result<LoadedGraph, GraphError> {
    let raw = parse_raw(text)?;
    let coloured = raw.rows.iter().filter(|r| r.2.is_some()).count();
    if coloured == 0 {
        let edges: Vec<(usize, usize)> = raw.rows.iter().map(|&(u, v, _)| (u, v)).collect();
        return Ok(LoadedGraph::Plain(Graph::from_edges(raw.n, &edges)?));
    }
    if coloured != raw.rows.len() {
        return Err(GraphError::Parse {
            line: 0,
            msg: "mixed coloured and uncoloured rows".into(),
        });
    }
    let edges: Vec<(usize, usize, usize)> = raw
        .rows
        .iter()
        .map(|&(u, v, c)| (u, v, c.unwrap()))
        .collect();
    Ok(LoadedGraph::Coloured(
        ColouredGraph::from_coloured_edges(raw.n, &edges)?.canonical(),
    ))
}

pub fn load_any(path: &Path) -> Result<LoadedGraph, GraphError> {
    let text = std::fs::read_to_string(path).map_err(|e| GraphError::Parse {
        line: 0,
        msg: format!("{}: {e}", path.display()),
    })?;
    parse_any(&text)
}

pub fn load_graph(path: &Path) -> Result<Graph, GraphError> {
    let text = std::fs::read_to_string(path).map_err(|e| GraphError::Parse {
        line: 0,
        msg: format!("{}: {e}", path.display()),
    })?;
    parse_graph(&text)
}

pub fn load_coloured_graph(path: &Path) -> Result<ColouredGraph, GraphError> {
    let text = std::fs::read_to_string(path).map_err(|e| GraphError::Parse {
        line: 0,
        msg: format!("{}: {e}", path.display()),
    })?;
    parse_coloured_graph(&text)
}

pub fn format_graph(g: &Graph) -> String {
    let mut out = format!("n {}\n", g.n());
    for (u, v) in g.edges() {
        out.push_str(&format!("{u} {v}\n"));
    }
    out
}

pub fn format_coloured_graph(g: &ColouredGraph) -> String {
    let mut out = format!("n {}\n", g.n());
    for (u, v, c) in g.coloured_edges() {
        out.push_str(&format!("{u} {v} {c}\n"));
    }
    out
}

pub fn write_graph(g: &Graph, path: &Path) -> std::io::Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(format_graph(g).as_bytes())
}

pub fn write_coloured_graph(g: &ColouredGraph, path: &Path) -> std::io::Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(format_coloured_graph(g).as_bytes())
}
