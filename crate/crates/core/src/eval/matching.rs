//! One-to-one boundary pixel correspondence within a distance tolerance.
//!
//! Candidate pairs are taken greedily in ascending distance order (ties by
//! predicted then ground-truth raster index); the greedy matching is then
//! grown by augmenting paths until no further pair can be added, so the
//! matched count is always the maximum possible under the tolerance.

use crate::edgemap::BinaryMap;
use crate::error::{Error, Result};

/// Default tolerance as a fraction of the image diagonal.
pub const DEFAULT_MAX_DIST: f64 = 0.0075;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MatchCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

/// Matching radius in pixels for a map of the given size.
pub fn match_radius(height: usize, width: usize, max_dist: f64) -> f64 {
    max_dist * ((height * height + width * width) as f64).sqrt()
}

/// Integer offsets within `radius`, nearest first.
fn offsets(radius: f64) -> Vec<(i64, isize, isize)> {
    let r = radius.floor() as isize;
    let mut out = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            let d2 = (dy * dy + dx * dx) as i64;
            if (d2 as f64) <= radius * radius + 1e-9 {
                out.push((d2, dy, dx));
            }
        }
    }
    out.sort();
    out
}

/// Candidate pairs `(squared distance, pred index, gt index)` in greedy order.
fn candidates(pred: &BinaryMap, gt: &BinaryMap, radius: f64) -> Vec<(i64, usize, usize)> {
    let (h, w) = (pred.height as isize, pred.width as isize);
    let offs = offsets(radius);
    let mut edges = Vec::new();
    for (p, _) in pred.bits.iter().enumerate().filter(|(_, &b)| b) {
        let (y, x) = ((p / pred.width) as isize, (p % pred.width) as isize);
        for &(d2, dy, dx) in &offs {
            let (yy, xx) = (y + dy, x + dx);
            if yy >= 0 && xx >= 0 && yy < h && xx < w {
                let g = (yy * w + xx) as usize;
                if gt.bits[g] {
                    edges.push((d2, p, g));
                }
            }
        }
    }
    edges.sort_unstable();
    edges
}

fn check(pred: &BinaryMap, gt: &BinaryMap, max_dist: f64) -> Result<()> {
    if (pred.height, pred.width) != (gt.height, gt.width) {
        return Err(Error::shape(format!(
            "prediction is {}x{} but ground truth is {}x{}",
            pred.height, pred.width, gt.height, gt.width
        )));
    }
    if !(max_dist >= 0.0) {
        return Err(Error::arg(format!("max_dist must be non-negative, got {max_dist}")));
    }
    Ok(())
}

/// Pure distance-ordered greedy pairs `(pred index, gt index)`.
pub fn greedy_pairs(pred: &BinaryMap, gt: &BinaryMap, max_dist: f64) -> Result<Vec<(usize, usize)>> {
    check(pred, gt, max_dist)?;
    let radius = match_radius(pred.height, pred.width, max_dist);
    let mut used_p = vec![false; pred.bits.len()];
    let mut used_g = vec![false; gt.bits.len()];
    let mut pairs = Vec::new();
    for (_, p, g) in candidates(pred, gt, radius) {
        if !used_p[p] && !used_g[g] {
            used_p[p] = true;
            used_g[g] = true;
            pairs.push((p, g));
        }
    }
    Ok(pairs)
}

/// Matched pairs `(pred index, gt index)` of maximum cardinality.
pub fn match_pairs(pred: &BinaryMap, gt: &BinaryMap, max_dist: f64) -> Result<Vec<(usize, usize)>> {
    check(pred, gt, max_dist)?;
    let radius = match_radius(pred.height, pred.width, max_dist);
    let edges = candidates(pred, gt, radius);

    // Compact vertex ids.
    let mut left_id = vec![usize::MAX; pred.bits.len()];
    let mut right_id = vec![usize::MAX; gt.bits.len()];
    let mut left = Vec::new();
    let mut right = Vec::new();
    for &(_, p, g) in &edges {
        if left_id[p] == usize::MAX {
            left_id[p] = left.len();
            left.push(p);
        }
        if right_id[g] == usize::MAX {
            right_id[g] = right.len();
            right.push(g);
        }
    }
    let mut adj = vec![Vec::new(); left.len()];
    for &(_, p, g) in &edges {
        adj[left_id[p]].push(right_id[g]);
    }

    const NIL: usize = usize::MAX;
    let mut match_l = vec![NIL; left.len()];
    let mut match_r = vec![NIL; right.len()];
    for &(_, p, g) in &edges {
        let (u, v) = (left_id[p], right_id[g]);
        if match_l[u] == NIL && match_r[v] == NIL {
            match_l[u] = v;
            match_r[v] = u;
        }
    }
    hopcroft_karp(&adj, &mut match_l, &mut match_r);

    let mut pairs: Vec<(usize, usize)> = match_l
        .iter()
        .enumerate()
        .filter(|(_, &v)| v != NIL)
        .map(|(u, &v)| (left[u], right[v]))
        .collect();
    pairs.sort_unstable();
    Ok(pairs)
}

/// Grow `match_l`/`match_r` to a maximum matching by shortest augmenting paths.
fn hopcroft_karp(adj: &[Vec<usize>], match_l: &mut [usize], match_r: &mut [usize]) {
    const NIL: usize = usize::MAX;
    const INF: u32 = u32::MAX;
    let n = adj.len();
    let mut dist = vec![INF; n];
    let mut queue = Vec::with_capacity(n);
    let mut it = vec![0usize; n];
    let mut stack = Vec::new();
    loop {
        queue.clear();
        for u in 0..n {
            if match_l[u] == NIL {
                dist[u] = 0;
                queue.push(u);
            } else {
                dist[u] = INF;
            }
        }
        let mut found = false;
        let mut head = 0;
        while head < queue.len() {
            let u = queue[head];
            head += 1;
            for &v in &adj[u] {
                let w = match_r[v];
                if w == NIL {
                    found = true;
                } else if dist[w] == INF {
                    dist[w] = dist[u] + 1;
                    queue.push(w);
                }
            }
        }
        if !found {
            return;
        }
        it.iter_mut().for_each(|i| *i = 0);
        for root in 0..n {
            if match_l[root] != NIL {
                continue;
            }
            stack.clear();
            stack.push(root);
            while let Some(&x) = stack.last() {
                if it[x] == adj[x].len() {
                    dist[x] = INF;
                    stack.pop();
                    continue;
                }
                let v = adj[x][it[x]];
                it[x] += 1;
                let w = match_r[v];
                if w == NIL {
                    for &s in &stack {
                        let vs = adj[s][it[s] - 1];
                        match_l[s] = vs;
                        match_r[vs] = s;
                    }
                    break;
                } else if dist[w] != INF && dist[w] == dist[x] + 1 {
                    stack.push(w);
                }
            }
        }
    }
}

/// Counts of matched pairs, unmatched predictions and unmatched ground truth.
pub fn match_boundaries(pred: &BinaryMap, gt: &BinaryMap, max_dist: f64) -> Result<MatchCounts> {
    let tp = match_pairs(pred, gt, max_dist)?.len();
    Ok(MatchCounts {
        tp,
        fp: pred.count() - tp,
        fn_: gt.count() - tp,
    })
}
