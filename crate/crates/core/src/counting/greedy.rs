//! One-sided greedy counts and the exact sweep for covers of a line.

use std::collections::{HashMap, VecDeque};

use rayon::prelude::*;

use super::OrbitContext;

/// Nets at least this large use grid hashing instead of all-pairs scans.
const GRID_THRESHOLD: usize = 20_000;
/// Cells examined by first-fit cover before opening a new one.
const RECENT_CELLS: usize = 256;

/// Optimal cover of points on a line by sets of diameter `< ε`: sweep from
/// the left, opening a cell at the first uncovered point.
pub(super) fn line_cover(values: &[f64], epsilon: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut starts = Vec::new();
    let mut open: Option<f64> = None;
    for i in order {
        match open {
            Some(left) if values[i] - left < epsilon => {}
            _ => {
                open = Some(values[i]);
                starts.push(i);
            }
        }
    }
    starts
}

/// Maximal separated set: farthest-point-first on small nets, in-order
/// acceptance with grid hashing on large scalar nets.
pub(super) fn separated(ctx: &OrbitContext, epsilon: f64) -> Vec<usize> {
    if ctx.len() >= GRID_THRESHOLD && ctx.scalar_values().is_some() {
        return grid_pass(ctx, epsilon, |d| d <= epsilon);
    }
    let n = ctx.len();
    let mut chosen = vec![0usize];
    let mut nearest: Vec<f64> = (0..n).into_par_iter().map(|j| ctx.distance(0, j)).collect();
    loop {
        let (far, gap) = nearest
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (j, &d)| if d > best.1 { (j, d) } else { best });
        if gap <= epsilon {
            break;
        }
        chosen.push(far);
        nearest.par_iter_mut().enumerate().for_each(|(j, d)| {
            *d = d.min(ctx.distance(far, j));
        });
    }
    chosen.sort_unstable();
    chosen
}

/// Spanning set: every point not yet within `< ε` of a centre becomes one.
pub(super) fn spanning(ctx: &OrbitContext, epsilon: f64) -> Vec<usize> {
    if ctx.len() >= GRID_THRESHOLD && ctx.scalar_values().is_some() {
        return grid_pass(ctx, epsilon, |d| d < epsilon);
    }
    let mut centres: Vec<usize> = Vec::new();
    for i in 0..ctx.len() {
        if !centres.iter().any(|&c| ctx.distance(i, c) < epsilon) {
            centres.push(i);
        }
    }
    centres
}

/// First-fit cover: a point joins the most recent compatible cell among
/// the last few opened, otherwise it opens a new cell.
pub(super) fn cover(ctx: &OrbitContext, epsilon: f64) -> Vec<usize> {
    let mut cells: Vec<Vec<usize>> = Vec::new();
    let mut recent: VecDeque<usize> = VecDeque::new();
    for i in 0..ctx.len() {
        let home = recent
            .iter()
            .rev()
            .copied()
            .find(|&c| cells[c].iter().all(|&j| ctx.distance(i, j) < epsilon));
        match home {
            Some(c) => cells[c].push(i),
            None => {
                cells.push(vec![i]);
                recent.push_back(cells.len() - 1);
                if recent.len() > RECENT_CELLS {
                    recent.pop_front();
                }
            }
        }
    }
    cells.iter().map(|c| c[0]).collect()
}

/// In-order pass keeping each point that has no `blocked` relation to a
/// kept point. Candidates are found through a grid of side `≥ ε` on the
/// last (at most two) orbit coordinates, so points in non-adjacent cells
/// are more than `ε` apart.
fn grid_pass(ctx: &OrbitContext, epsilon: f64, blocked: impl Fn(f64) -> bool) -> Vec<usize> {
    let (values, circle) = ctx.scalar_values().expect("scalar orbits");
    let h = ctx.horizon();
    let slots: Vec<usize> = (h.saturating_sub(2)..h).collect();
    let cells_per_unit = if circle {
        (1.0 / epsilon).floor().max(1.0)
    } else {
        1.0 / epsilon
    };
    let wrap = circle.then_some(cells_per_unit as i64);
    let key = |i: usize| -> [i64; 2] {
        let mut k = [0i64; 2];
        for (slot, &s) in k.iter_mut().zip(&slots) {
            let cell = (values[i * h + s] * cells_per_unit).floor() as i64;
            *slot = match wrap {
                Some(m) => cell.rem_euclid(m),
                None => cell,
            };
        }
        k
    };
    let mut grid: HashMap<[i64; 2], Vec<u32>> = HashMap::new();
    let mut kept = Vec::new();
    let mut around = Vec::with_capacity(9);
    for i in 0..ctx.len() {
        let k = key(i);
        around.clear();
        for dx in -1..=1 {
            for dy in -1..=1 {
                let mut c = [k[0] + dx, k[1] + dy];
                if slots.len() < 2 {
                    c[1] = 0;
                }
                if let Some(m) = wrap {
                    c = [c[0].rem_euclid(m), c[1].rem_euclid(m)];
                }
                if !around.contains(&c) {
                    around.push(c);
                }
            }
        }
        let clash = around.iter().any(|c| {
            grid.get(c)
                .is_some_and(|members| members.iter().any(|&j| blocked(ctx.distance(i, j as usize))))
        });
        if !clash {
            grid.entry(k).or_default().push(i as u32);
            kept.push(i);
        }
    }
    kept
}
