//! Worst-box search for inequality checks: every grid-aligned box, then a
//! local endpoint ascent started from the worst few.

use crate::grid::Rect;
use crate::measure::{CumTable, GridMeasure};

/// Largest ratio found and where.
#[derive(Debug, Clone, PartialEq)]
pub struct WorstRatio {
    pub ratio: f64,
    pub witness: Option<Rect>,
    /// Boxes evaluated, refinement steps included.
    pub checked: usize,
}

/// Smallest relative step of the endpoint ascent.
const MIN_STEP: f64 = 1.0 / (1u64 << 24) as f64;
/// Evaluation budget of one ascent.
const ASCENT_BUDGET: usize = 4000;

/// Maximizes `ratio(μ(R), [∫_R t dμ for t in tables])` over boxes `R` of
/// positive mass. The grid-aligned boxes are all visited; the `refine` best
/// of them are then improved by moving one endpoint at a time.
///
/// A box found this way only bounds the true supremum from below, which is
/// the sound direction for detecting violations.
pub fn worst_ratio(
    mu: &GridMeasure,
    tables: &[CumTable],
    refine: usize,
    ratio: impl Fn(f64, &[f64]) -> f64,
) -> WorstRatio {
    let grid = mu.grid();
    let mut vals = vec![0.0; tables.len()];
    let mut checked = 0usize;
    // (ratio, rect) of the best `refine.max(1)` grid boxes, worst first.
    let keep = refine.max(1);
    let mut top: Vec<(f64, Rect)> = Vec::with_capacity(keep + 1);
    for gr in grid.grid_rects() {
        let m = mu.table().query_grid(&gr);
        if !(m > 0.0) {
            continue;
        }
        for (v, t) in vals.iter_mut().zip(tables) {
            *v = t.query_grid(&gr);
        }
        checked += 1;
        let r = ratio(m, &vals);
        if r.is_nan() {
            continue;
        }
        if top.len() < keep || r > top[0].0 {
            let pos = top.partition_point(|(x, _)| *x < r);
            top.insert(pos, (r, gr.to_rect(grid)));
            if top.len() > keep {
                top.remove(0);
            }
        }
    }

    let eval = |r: &Rect, vals: &mut Vec<f64>| -> Option<f64> {
        let m = mu.table().query(r);
        if !(m > 0.0) {
            return None;
        }
        for (v, t) in vals.iter_mut().zip(tables) {
            *v = t.query(r);
        }
        let x = ratio(m, vals);
        (!x.is_nan()).then_some(x)
    };

    let mut best: Option<(f64, Rect)> = top.last().cloned();
    let domain = grid.domain();
    for (start_ratio, start) in top.iter().rev().take(refine) {
        let (mut cur, mut rect) = (*start_ratio, start.clone());
        let mut used = 0usize;
        let mut step = 0.5;
        while step >= MIN_STEP && used < ASCENT_BUDGET {
            let mut improved = false;
            for axis in 0..rect.dim() {
                let width = domain.hi[axis] - domain.lo[axis];
                let h = step * width;
                for (end, dir) in [(0usize, -1.0), (0, 1.0), (1, -1.0), (1, 1.0)] {
                    let mut cand = rect.clone();
                    let slot = if end == 0 { &mut cand.lo[axis] } else { &mut cand.hi[axis] };
                    *slot = (*slot + dir * h).clamp(domain.lo[axis], domain.hi[axis]);
                    if !(cand.lo[axis] < cand.hi[axis]) || cand == rect {
                        continue;
                    }
                    used += 1;
                    if let Some(x) = eval(&cand, &mut vals) {
                        if x > cur {
                            cur = x;
                            rect = cand;
                            improved = true;
                        }
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        checked += used;
        if best.as_ref().map_or(true, |(b, _)| cur > *b) {
            best = Some((cur, rect));
        }
    }

    match best {
        Some((ratio, rect)) => WorstRatio { ratio, witness: Some(rect), checked },
        None => WorstRatio { ratio: f64::NEG_INFINITY, witness: None, checked },
    }
}
