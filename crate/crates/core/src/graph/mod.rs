//! Spanning trees over tasks and their rooted orientation.

mod prufer;

use std::collections::VecDeque;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::distances::DistanceMatrix;
use crate::error::{Error, Result};

pub use prufer::{prufer_decode, prufer_encode, random_spanning_tree};

/// Undirected edge stored as `(min, max)`.
pub type Edge = (usize, usize);

pub(crate) fn normalized(a: usize, b: usize) -> Edge {
    (a.min(b), a.max(b))
}

/// Tree oriented away from `root`; `parent[root]` is `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootedTree {
    pub root: usize,
    pub parent: Vec<Option<usize>>,
    /// Distance to the parent; 0 at the root.
    pub edge_length: Vec<f64>,
}

impl RootedTree {
    /// Validates that parent links form a single tree reaching `root`.
    pub fn from_parents(
        root: usize,
        parent: Vec<Option<usize>>,
        edge_length: Vec<f64>,
    ) -> Result<Self> {
        let t = parent.len();
        if root >= t || edge_length.len() != t {
            return Err(Error::NotSpanningTree(format!(
                "root {root} or edge lengths do not fit {t} nodes"
            )));
        }
        for (v, p) in parent.iter().enumerate() {
            match (v == root, p) {
                (true, Some(_)) => return Err(Error::NotSpanningTree("root has a parent".into())),
                (false, None) => {
                    return Err(Error::NotSpanningTree(format!("node {v} has no parent")))
                }
                (false, Some(p)) if *p >= t => {
                    return Err(Error::NotSpanningTree(format!("parent {p} out of range")))
                }
                _ => {}
            }
        }
        let tree = RootedTree {
            root,
            parent,
            edge_length,
        };
        for v in 0..t {
            let mut cur = v;
            let mut steps = 0;
            while let Some(p) = tree.parent[cur] {
                cur = p;
                steps += 1;
                if steps >= t {
                    return Err(Error::NotSpanningTree(format!("cycle through node {v}")));
                }
            }
        }
        Ok(tree)
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    /// Children of every node in ascending index order.
    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.len()];
        for (v, p) in self.parent.iter().enumerate() {
            if let Some(p) = p {
                out[*p].push(v);
            }
        }
        out
    }

    pub fn edges(&self) -> Vec<Edge> {
        let mut e: Vec<Edge> = self
            .parent
            .iter()
            .enumerate()
            .filter_map(|(v, p)| p.map(|p| normalized(p, v)))
            .collect();
        e.sort_unstable();
        e
    }

    pub fn max_depth(&self) -> usize {
        depths(self).into_iter().max().unwrap_or(0)
    }

    /// Node sequence from the root down to `v`.
    pub fn path_to(&self, v: usize) -> Vec<usize> {
        let mut path = vec![v];
        let mut cur = v;
        while let Some(p) = self.parent[cur] {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }
}

/// Dense Prim; among equal keys the lexicographically smaller edge wins.
pub fn mst(dist: &DistanceMatrix) -> Result<Vec<Edge>> {
    let t = dist.len();
    for u in 0..t {
        for v in 0..t {
            if !dist.get(u, v).is_finite() {
                return Err(Error::NonFiniteWeight(u, v));
            }
        }
    }
    if t <= 1 {
        return Ok(Vec::new());
    }
    let mut in_tree = vec![false; t];
    let mut key = vec![f64::INFINITY; t];
    let mut link: Vec<Edge> = vec![(usize::MAX, usize::MAX); t];
    in_tree[0] = true;
    for v in 1..t {
        key[v] = dist.get(0, v);
        link[v] = normalized(0, v);
    }
    let mut edges = Vec::with_capacity(t - 1);
    for _ in 1..t {
        let next = (0..t)
            .filter(|&v| !in_tree[v])
            .min_by(|&a, &b| key[a].total_cmp(&key[b]).then(link[a].cmp(&link[b])))
            .expect("a vertex remains outside the tree");
        in_tree[next] = true;
        edges.push(link[next]);
        for v in 0..t {
            if in_tree[v] {
                continue;
            }
            let w = dist.get(next, v);
            let cand = normalized(next, v);
            if w < key[v] || (w == key[v] && cand < link[v]) {
                key[v] = w;
                link[v] = cand;
            }
        }
    }
    edges.sort_unstable();
    Ok(edges)
}

pub fn total_weight(edges: &[Edge], dist: &DistanceMatrix) -> f64 {
    edges.iter().map(|&(u, v)| dist.get(u, v)).sum()
}

/// Row-sum argmin; ties go to the lowest index.
pub fn medoid(dist: &DistanceMatrix) -> usize {
    let mut best = 0;
    let mut best_sum = f64::INFINITY;
    for v in 0..dist.len() {
        let s = dist.row_sum(v);
        if s < best_sum {
            best = v;
            best_sum = s;
        }
    }
    best
}

/// BFS orientation of an undirected spanning tree away from `root`.
pub fn root_tree(edges: &[Edge], root: usize, dist: &DistanceMatrix) -> Result<RootedTree> {
    let t = dist.len();
    if root >= t {
        return Err(Error::NotSpanningTree(format!(
            "root {root} out of range for {t} tasks"
        )));
    }
    if edges.len() + 1 != t {
        return Err(Error::NotSpanningTree(format!(
            "{} edges cannot span {t} nodes",
            edges.len()
        )));
    }
    let mut adj = vec![Vec::new(); t];
    for &(u, v) in edges {
        if u >= t || v >= t || u == v {
            return Err(Error::NotSpanningTree(format!("invalid edge ({u}, {v})")));
        }
        adj[u].push(v);
        adj[v].push(u);
    }
    for a in &mut adj {
        a.sort_unstable();
    }
    let mut parent = vec![None; t];
    let mut seen = vec![false; t];
    let mut edge_length = vec![0.0; t];
    let mut queue = VecDeque::from([root]);
    seen[root] = true;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if seen[v] {
                if parent[u] != Some(v) {
                    return Err(Error::NotSpanningTree(format!(
                        "cycle through edge ({u}, {v})"
                    )));
                }
                continue;
            }
            seen[v] = true;
            parent[v] = Some(u);
            edge_length[v] = dist.get(u, v);
            queue.push_back(v);
        }
    }
    if let Some(v) = seen.iter().position(|s| !s) {
        return Err(Error::NotSpanningTree(format!(
            "node {v} is disconnected from the root"
        )));
    }
    Ok(RootedTree {
        root,
        parent,
        edge_length,
    })
}

/// Every non-root hangs directly off `root`.
pub fn star_tree(t: usize, root: usize, dist: Option<&DistanceMatrix>) -> Result<RootedTree> {
    if root >= t {
        return Err(Error::NotSpanningTree(format!(
            "root {root} out of range for {t} tasks"
        )));
    }
    let parent = (0..t).map(|v| (v != root).then_some(root)).collect();
    let edge_length = (0..t)
        .map(|v| {
            if v == root {
                0.0
            } else {
                dist.map_or(0.0, |d| d.get(root, v))
            }
        })
        .collect();
    Ok(RootedTree {
        root,
        parent,
        edge_length,
    })
}

/// BFS order from the root with children in ascending index.
pub fn topological_order(tree: &RootedTree) -> Vec<usize> {
    let children = tree.children();
    let mut order = Vec::with_capacity(tree.len());
    let mut queue = VecDeque::from([tree.root]);
    while let Some(u) = queue.pop_front() {
        order.push(u);
        queue.extend(children[u].iter().copied());
    }
    order
}

pub fn depths(tree: &RootedTree) -> Vec<usize> {
    let mut depth = vec![0; tree.len()];
    for v in topological_order(tree) {
        if let Some(p) = tree.parent[v] {
            depth[v] = depth[p] + 1;
        }
    }
    depth
}

/// Groups nodes by depth; every node's parent lies in the previous level.
pub fn levels(tree: &RootedTree) -> Vec<Vec<usize>> {
    let depth = depths(tree);
    let mut out = vec![Vec::new(); depth.iter().max().map_or(0, |m| m + 1)];
    for v in topological_order(tree) {
        out[depth[v]].push(v);
    }
    out
}

/// `# root=<id>` line, then a `parent,child,edge_length` edge list in
/// topological order.
pub fn write_tree_csv<W: Write>(
    tree: &RootedTree,
    ids: &[String],
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "# root={}", ids[tree.root])?;
    writeln!(out, "parent,child,edge_length")?;
    for v in topological_order(tree) {
        if let Some(p) = tree.parent[v] {
            writeln!(
                out,
                "{},{},{}",
                ids[p],
                ids[v],
                crate::tasks::fmt_f64(tree.edge_length[v])
            )?;
        }
    }
    Ok(())
}

pub fn save_tree_csv(tree: &RootedTree, ids: &[String], path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_tree_csv(tree, ids, &mut buf).map_err(|e| Error::io(path, e))?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}
