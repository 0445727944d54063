//! Branch-and-bound solvers on small graphs given as bitset adjacency rows.

use crate::error::{Error, Result};

use super::bits::Bits;

/// Most maximal cliques enumerated for one cover instance.
const CLIQUE_LIMIT: usize = 500_000;

pub(crate) struct Search {
    pub nodes: u64,
    pub limit: u64,
}

impl Search {
    pub fn new(limit: u64) -> Self {
        Self { nodes: 0, limit }
    }

    fn tick(&mut self) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.limit {
            return Err(Error::SearchLimit(self.limit));
        }
        Ok(())
    }
}

/// Maximum clique, using greedy colouring as the upper bound.
pub(crate) fn max_clique(adj: &[Bits], search: &mut Search) -> Result<Vec<usize>> {
    let n = adj.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut best = greedy_clique(adj);
    let mut current = Vec::new();
    expand(adj, &mut current, Bits::full(n), &mut best, search)?;
    best.sort_unstable();
    Ok(best)
}

fn greedy_clique(adj: &[Bits]) -> Vec<usize> {
    let start = (0..adj.len()).max_by_key(|&v| adj[v].count()).unwrap_or(0);
    let mut clique = vec![start];
    let mut candidates = adj[start].clone();
    while let Some(v) = candidates
        .iter()
        .max_by_key(|&v| adj[v].and_count(&candidates))
    {
        clique.push(v);
        candidates = candidates.and(&adj[v]);
    }
    clique
}

fn expand(
    adj: &[Bits],
    current: &mut Vec<usize>,
    mut candidates: Bits,
    best: &mut Vec<usize>,
    search: &mut Search,
) -> Result<()> {
    search.tick()?;
    let (order, colors) = colour_sort(adj, &candidates);
    for idx in (0..order.len()).rev() {
        if current.len() + colors[idx] <= best.len() {
            return Ok(());
        }
        let v = order[idx];
        current.push(v);
        let next = candidates.and(&adj[v]);
        if next.is_empty() {
            if current.len() > best.len() {
                *best = current.clone();
            }
        } else {
            expand(adj, current, next, best, search)?;
        }
        current.pop();
        candidates.remove(v);
    }
    Ok(())
}

/// Vertices of `candidates` ordered by greedy colour class, with the
/// running colour count (an upper bound on any clique among the prefix).
fn colour_sort(adj: &[Bits], candidates: &Bits) -> (Vec<usize>, Vec<usize>) {
    let mut uncoloured = candidates.clone();
    let mut order = Vec::with_capacity(candidates.count());
    let mut colours = Vec::with_capacity(order.capacity());
    let mut colour = 0;
    while !uncoloured.is_empty() {
        colour += 1;
        let mut class = uncoloured.clone();
        while let Some(v) = class.first() {
            class.remove(v);
            class = class.and_not(&adj[v]);
            uncoloured.remove(v);
            order.push(v);
            colours.push(colour);
        }
    }
    (order, colours)
}

/// Minimum number of `sets` whose union is `0..universe`; returns the
/// chosen set indices. Every element must lie in some set.
pub(crate) fn min_set_cover(
    sets: &[Bits],
    universe: usize,
    search: &mut Search,
) -> Result<Vec<usize>> {
    if universe == 0 {
        return Ok(Vec::new());
    }
    // drop sets contained in another set
    let mut keep: Vec<usize> = Vec::new();
    let mut order: Vec<usize> = (0..sets.len()).collect();
    order.sort_by_key(|&s| std::cmp::Reverse(sets[s].count()));
    for s in order {
        if !keep.iter().any(|&k| sets[s].is_subset(&sets[k])) {
            keep.push(s);
        }
    }
    let reduced: Vec<Bits> = keep.iter().map(|&s| sets[s].clone()).collect();
    let mut holders = vec![Bits::new(reduced.len()); universe];
    for (s, set) in reduced.iter().enumerate() {
        for e in set.iter() {
            holders[e].insert(s);
        }
    }
    if let Some(e) = holders.iter().position(Bits::is_empty) {
        return Err(Error::InvalidParameter(format!("element {e} lies in no set")));
    }
    let mut cover = Cover {
        sets: &reduced,
        holders: &holders,
        best: greedy_cover(&reduced, universe),
        search,
    };
    let mut chosen = Vec::new();
    cover.branch(Bits::full(universe), &mut chosen)?;
    let mut best: Vec<usize> = cover.best.iter().map(|&s| keep[s]).collect();
    best.sort_unstable();
    Ok(best)
}

pub(crate) fn greedy_cover(sets: &[Bits], universe: usize) -> Vec<usize> {
    let mut uncovered = Bits::full(universe);
    let mut chosen = Vec::new();
    while !uncovered.is_empty() {
        let s = (0..sets.len())
            .max_by_key(|&s| (sets[s].and_count(&uncovered), std::cmp::Reverse(s)))
            .unwrap();
        chosen.push(s);
        uncovered = uncovered.and_not(&sets[s]);
    }
    chosen
}

struct Cover<'a> {
    sets: &'a [Bits],
    holders: &'a [Bits],
    best: Vec<usize>,
    search: &'a mut Search,
}

impl Cover<'_> {
    fn branch(&mut self, uncovered: Bits, chosen: &mut Vec<usize>) -> Result<()> {
        self.search.tick()?;
        if uncovered.is_empty() {
            if chosen.len() < self.best.len() {
                self.best = chosen.clone();
            }
            return Ok(());
        }
        if chosen.len() + self.packing_bound(&uncovered) >= self.best.len() {
            return Ok(());
        }
        let pivot = uncovered
            .iter()
            .min_by_key(|&e| self.holders[e].count())
            .unwrap();
        let mut options: Vec<usize> = self.holders[pivot].iter().collect();
        options.sort_by_key(|&s| std::cmp::Reverse(self.sets[s].and_count(&uncovered)));
        for s in options {
            chosen.push(s);
            self.branch(uncovered.and_not(&self.sets[s]), chosen)?;
            chosen.pop();
        }
        Ok(())
    }

    /// Elements no two of which share a set each need their own set.
    fn packing_bound(&self, uncovered: &Bits) -> usize {
        let mut elements: Vec<usize> = uncovered.iter().collect();
        elements.sort_by_key(|&e| self.holders[e].count());
        let mut used = Bits::new(self.sets.len());
        let mut bound = 0;
        for e in elements {
            if !self.holders[e].intersects(&used) {
                bound += 1;
                used.union_with(&self.holders[e]);
            }
        }
        bound
    }
}

/// All maximal cliques (Bron–Kerbosch with pivoting).
pub(crate) fn maximal_cliques(adj: &[Bits]) -> Result<Vec<Bits>> {
    let n = adj.len();
    let mut out = Vec::new();
    let mut current = Vec::new();
    bron_kerbosch(adj, &mut current, Bits::full(n), Bits::new(n), &mut out)?;
    Ok(out)
}

fn bron_kerbosch(
    adj: &[Bits],
    current: &mut Vec<usize>,
    mut p: Bits,
    mut x: Bits,
    out: &mut Vec<Bits>,
) -> Result<()> {
    if p.is_empty() {
        if x.is_empty() {
            if out.len() >= CLIQUE_LIMIT {
                return Err(Error::SearchLimit(CLIQUE_LIMIT as u64));
            }
            let mut clique = Bits::new(adj.len());
            for &v in current.iter() {
                clique.insert(v);
            }
            out.push(clique);
        }
        return Ok(());
    }
    let pivot = p
        .iter()
        .chain(x.iter())
        .max_by_key(|&u| adj[u].and_count(&p))
        .unwrap();
    let branch: Vec<usize> = p.and_not(&adj[pivot]).iter().collect();
    for v in branch {
        current.push(v);
        bron_kerbosch(adj, current, p.and(&adj[v]), x.and(&adj[v]), out)?;
        current.pop();
        p.remove(v);
        x.insert(v);
    }
    Ok(())
}
