//! Markov partitions of piecewise-affine interval maps.
//!
//! When every piece of a map is sent onto a union of consecutive pieces,
//! the transitions of piece `i` form an index range `lo_i..=hi_i`. Path
//! counts in this graph measure how many distinct itineraries the map
//! realises, which is what separated-set counting sees at fine scales.

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use crate::error::{Error, Result};

use super::pam::PiecewiseAffineMap;

#[derive(Debug, Clone)]
pub struct MarkovPartition {
    breakpoints: Vec<f64>,
    /// Inclusive target range per piece; `None` for constant pieces.
    ranges: Vec<Option<(usize, usize)>>,
}

impl MarkovPartition {
    /// Fails with [`Error::NotMarkov`] when a piece's image has an endpoint
    /// farther than `tol` from every breakpoint.
    pub fn new(map: &PiecewiseAffineMap, tol: f64) -> Result<Self> {
        let bps = map.breakpoints();
        let vals = map.values();
        let snap = |v: f64| -> Result<usize> {
            let i = bps.partition_point(|&b| b < v);
            let candidates = [i.saturating_sub(1), i.min(bps.len() - 1)];
            candidates
                .into_iter()
                .min_by(|&a, &b| (bps[a] - v).abs().total_cmp(&(bps[b] - v).abs()))
                .filter(|&k| (bps[k] - v).abs() <= tol)
                .ok_or(Error::NotMarkov(v))
        };
        let mut ranges = Vec::with_capacity(bps.len() - 1);
        for i in 0..bps.len() - 1 {
            let (v0, v1) = (vals[i], vals[i + 1]);
            if v0 == v1 {
                ranges.push(None);
                continue;
            }
            let lo = snap(v0.min(v1))?;
            let hi = snap(v0.max(v1))?;
            if hi <= lo {
                ranges.push(None);
            } else {
                ranges.push(Some((lo, hi - 1)));
            }
        }
        Ok(Self {
            breakpoints: bps.to_vec(),
            ranges,
        })
    }

    pub fn pieces(&self) -> usize {
        self.ranges.len()
    }

    pub fn ranges(&self) -> &[Option<(usize, usize)>] {
        &self.ranges
    }

    /// Strongly connected components of the transition graph.
    ///
    /// Range edges are routed through a segment tree so the auxiliary graph
    /// has `O(N log N)` edges instead of up to `N²`.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.pieces();
        let mut size = 1;
        while size < n {
            size *= 2;
        }
        // nodes 0..n are pieces; n + t is segment-tree node t (1-based heap)
        let mut graph: DiGraph<(), ()> = DiGraph::with_capacity(n + 2 * size, 0);
        for _ in 0..n + 2 * size {
            graph.add_node(());
        }
        let tree = |t: usize| NodeIndex::new(n + t);
        let piece = NodeIndex::new;
        for t in 1..size {
            graph.add_edge(tree(t), tree(2 * t), ());
            graph.add_edge(tree(t), tree(2 * t + 1), ());
        }
        for leaf in 0..n {
            graph.add_edge(tree(size + leaf), piece(leaf), ());
        }
        for (i, range) in self.ranges.iter().enumerate() {
            if let Some((lo, hi)) = *range {
                let (mut l, mut r) = (lo + size, hi + size + 1);
                while l < r {
                    if l & 1 == 1 {
                        graph.add_edge(piece(i), tree(l), ());
                        l += 1;
                    }
                    if r & 1 == 1 {
                        r -= 1;
                        graph.add_edge(piece(i), tree(r), ());
                    }
                    l >>= 1;
                    r >>= 1;
                }
            }
        }
        tarjan_scc(&graph)
            .into_iter()
            .map(|scc| {
                let mut members: Vec<usize> = scc
                    .into_iter()
                    .map(|v| v.index())
                    .filter(|&v| v < n)
                    .collect();
                members.sort_unstable();
                members
            })
            .filter(|m| !m.is_empty())
            .collect()
    }

    /// Pieces lying in a recurrent component whose extent exceeds `epsilon`.
    pub fn visible(&self, epsilon: f64) -> Vec<bool> {
        let mut mask = vec![false; self.pieces()];
        for component in self.components() {
            let recurrent = component.len() > 1
                || self.ranges[component[0]]
                    .is_some_and(|(lo, hi)| lo <= component[0] && component[0] <= hi);
            if !recurrent {
                continue;
            }
            let left = self.breakpoints[component[0]];
            let right = self.breakpoints[*component.last().unwrap() + 1];
            if right - left > epsilon {
                for &i in &component {
                    mask[i] = true;
                }
            }
        }
        mask
    }

    /// `log` of the number of admissible itineraries of length `1..=n_max`
    /// through the pieces selected by `mask`.
    pub fn log_path_counts(&self, mask: &[bool], n_max: usize) -> Vec<f64> {
        let n = self.pieces();
        let mut v: Vec<f64> = mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect();
        let mut log_scale = 0.0f64;
        let mut out = Vec::with_capacity(n_max);
        for step in 0..n_max {
            if step > 0 {
                let mut prefix = vec![0.0f64; n + 1];
                for j in 0..n {
                    prefix[j + 1] = prefix[j] + v[j];
                }
                let mut next = vec![0.0f64; n];
                for i in 0..n {
                    if let (true, Some((lo, hi))) = (mask[i], self.ranges[i]) {
                        next[i] = prefix[hi + 1] - prefix[lo];
                    }
                }
                let peak = next.iter().copied().fold(0.0, f64::max);
                if peak > 0.0 {
                    for x in &mut next {
                        *x /= peak;
                    }
                    log_scale += peak.ln();
                }
                v = next;
            }
            let total: f64 = v.iter().sum();
            out.push(if total > 0.0 {
                total.ln() + log_scale
            } else {
                f64::NEG_INFINITY
            });
        }
        out
    }
}
