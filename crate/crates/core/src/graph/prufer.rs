use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::Rng;

use super::{normalized, Edge};
use crate::rng::rng_for;

/// Decodes a sequence of length `t - 2` over `0..t` into `t - 1` sorted edges.
pub fn prufer_decode(seq: &[usize], t: usize) -> Vec<Edge> {
    if t <= 1 {
        return Vec::new();
    }
    assert_eq!(seq.len(), t - 2, "sequence length must be t - 2");
    let mut degree = vec![1usize; t];
    for &s in seq {
        degree[s] += 1;
    }
    let mut leaves: BinaryHeap<Reverse<usize>> =
        (0..t).filter(|&v| degree[v] == 1).map(Reverse).collect();
    let mut edges = Vec::with_capacity(t - 1);
    for &s in seq {
        let Reverse(leaf) = leaves.pop().expect("a leaf always exists");
        edges.push(normalized(leaf, s));
        degree[s] -= 1;
        if degree[s] == 1 {
            leaves.push(Reverse(s));
        }
    }
    let Reverse(a) = leaves.pop().expect("two leaves remain");
    let Reverse(b) = leaves.pop().expect("two leaves remain");
    edges.push(normalized(a, b));
    edges.sort_unstable();
    edges
}

/// Inverse of [`prufer_decode`] for a spanning tree on `t` labels.
pub fn prufer_encode(edges: &[Edge], t: usize) -> Vec<usize> {
    if t <= 2 {
        return Vec::new();
    }
    let mut adj = vec![Vec::new(); t];
    for &(u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    let mut degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut removed = vec![false; t];
    let mut leaves: BinaryHeap<Reverse<usize>> =
        (0..t).filter(|&v| degree[v] == 1).map(Reverse).collect();
    let mut seq = Vec::with_capacity(t - 2);
    while seq.len() < t - 2 {
        let Reverse(leaf) = leaves.pop().expect("a leaf always exists");
        removed[leaf] = true;
        let nb = *adj[leaf]
            .iter()
            .find(|&&n| !removed[n])
            .expect("leaf has a neighbour");
        seq.push(nb);
        degree[nb] -= 1;
        if degree[nb] == 1 {
            leaves.push(Reverse(nb));
        }
    }
    seq
}

/// Uniform labelled spanning tree on `t` nodes.
pub fn random_spanning_tree(t: usize, seed: u64) -> Vec<Edge> {
    if t <= 1 {
        return Vec::new();
    }
    let mut rng = rng_for(seed, "graph/prufer");
    let seq: Vec<usize> = (0..t - 2).map(|_| rng.random_range(0..t)).collect();
    prufer_decode(&seq, t)
}
