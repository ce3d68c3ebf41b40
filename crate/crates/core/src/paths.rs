//! Walks, rainbow paths, concatenated closed walks and an exhaustive rainbow
//! cycle search used by verifiers and hard-instance tests.

use crate::graph::ColouredGraph;
use std::collections::HashMap;

/// A walk is a vertex sequence; step `i` uses edge `(w[i], w[i+1])`.
pub type Walk = Vec<usize>;

pub fn is_walk(g: &crate::graph::Graph, w: &[usize]) -> bool {
    w.len() >= 2 && w.windows(2).all(|e| g.has_edge(e[0], e[1]))
}

/// Edge colours along a walk, or `None` if some step is not an edge.
pub fn walk_colours(cg: &ColouredGraph, w: &[usize]) -> Option<Vec<usize>> {
    w.windows(2).map(|e| cg.colour(e[0], e[1])).collect()
}

/// A rainbow path: pairwise distinct vertices and pairwise distinct colours.
pub fn is_rainbow_path(cg: &ColouredGraph, w: &[usize]) -> bool {
    if w.is_empty() {
        return false;
    }
    if w.len() == 1 {
        return true;
    }
    let mut verts = w.to_vec();
    verts.sort_unstable();
    verts.dedup();
    if verts.len() != w.len() {
        return false;
    }
    match walk_colours(cg, w) {
        None => false,
        Some(mut cs) => {
            let len = cs.len();
            cs.sort_unstable();
            cs.dedup();
            cs.len() == len
        }
    }
}

/// Whether concatenating `p` with the reverse of `q` (both walks from `x` to
/// `y` of equal length) forms a rainbow cycle of length `2k`: all `2k`
/// vertices distinct and all `2k` edge colours distinct.
pub fn concatenation_is_rainbow_cycle(cg: &ColouredGraph, p: &[usize], q: &[usize]) -> bool {
    debug_assert_eq!(p.len(), q.len());
    debug_assert_eq!(p.first(), q.first());
    debug_assert_eq!(p.last(), q.last());
    let k = p.len() - 1;
    if k == 0 {
        return false;
    }
    let mut verts: Vec<usize> = p[..k].to_vec();
    verts.extend(q[1..].iter().rev());
    let total = verts.len();
    verts.sort_unstable();
    verts.dedup();
    if verts.len() != total {
        return false;
    }
    let mut colours = match (walk_colours(cg, p), walk_colours(cg, q)) {
        (Some(a), Some(b)) => {
            let mut a = a;
            a.extend(b);
            a
        }
        _ => return false,
    };
    let total = colours.len();
    colours.sort_unstable();
    colours.dedup();
    colours.len() == total
}

/// Extracts a path from a walk by repeatedly deleting the segment between two
/// occurrences of the same vertex. Only deletes edges, so a rainbow walk
/// yields a rainbow path with the same endpoints.
pub fn shortcut_to_path(w: &[usize]) -> Walk {
    let mut out: Vec<usize> = Vec::with_capacity(w.len());
    let mut pos: HashMap<usize, usize> = HashMap::new();
    for &v in w {
        if let Some(&i) = pos.get(&v) {
            for &gone in &out[i + 1..] {
                pos.remove(&gone);
            }
            out.truncate(i + 1);
        } else {
            pos.insert(v, out.len());
            out.push(v);
        }
    }
    out
}

/// Exhaustive search for a rainbow cycle (length at least 3). Returns the
/// cycle's vertex sequence if one exists. Canonical form: the cycle starts at
/// its minimum vertex and all other vertices exceed it.
pub fn find_rainbow_cycle(cg: &ColouredGraph) -> Option<Vec<usize>> {
    let g = cg.graph();
    let mut on_path = vec![false; g.n()];
    let mut colour_used = vec![false; cg.n_colours().max(1)];
    for start in 0..g.n() {
        let mut path = vec![start];
        on_path[start] = true;
        if dfs_rainbow_cycle(cg, start, &mut path, &mut on_path, &mut colour_used) {
            return Some(path);
        }
        on_path[start] = false;
    }
    None
}

fn dfs_rainbow_cycle(
    cg: &ColouredGraph,
    start: usize,
    path: &mut Vec<usize>,
    on_path: &mut [bool],
    colour_used: &mut [bool],
) -> bool {
    let v = *path.last().unwrap();
    for (w, c) in cg.coloured_neighbours(v) {
        if colour_used[c] {
            continue;
        }
        if w == start && path.len() >= 3 {
            return true;
        }
        if w <= start || on_path[w] {
            continue;
        }
        on_path[w] = true;
        colour_used[c] = true;
        path.push(w);
        if dfs_rainbow_cycle(cg, start, path, on_path, colour_used) {
            return true;
        }
        path.pop();
        colour_used[c] = false;
        on_path[w] = false;
    }
    false
}
