//! Best-first branch and bound over face-to-cell assignments.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::grid::{AxisGrid, Rect};

use super::span::SpanData;
use super::SearchOptions;

/// Objective evaluated on parameter points and bounded on parameter boxes.
pub(crate) trait BoxObjective {
    /// A value attained (or approached, for limit points) by a box in the
    /// family; `None` for degenerate points.
    fn value(&self, span: &SpanData, x: &[f64]) -> Option<f64>;
    /// An upper bound of the objective over every point of the box.
    fn bound(&self, span: &SpanData, b: &[(f64, f64)]) -> f64;
}

/// Relative tolerance under which two objective values count as tied.
const TIE: f64 = 1e-13;

#[derive(Debug, Clone)]
pub(crate) struct Best {
    pub value: f64,
    pub rect: Option<Rect>,
    pub limit: bool,
}

impl Best {
    pub fn new() -> Self {
        Self { value: f64::NEG_INFINITY, rect: None, limit: false }
    }

    /// Keeps the larger value; ties prefer attained boxes, then the
    /// lexicographically smallest endpoint vector.
    pub fn consider(&mut self, value: f64, rect: Rect, limit: bool) {
        let tie = (value - self.value).abs() <= TIE * self.value.abs().max(1e-300);
        let better = if tie {
            match (&self.rect, limit, self.limit) {
                (None, _, _) => true,
                (Some(_), false, true) => true,
                (Some(_), true, false) => false,
                (Some(r), _, _) => rect.lex_less(r),
            }
        } else {
            value > self.value
        };
        if better {
            self.value = if tie { self.value.max(value) } else { value };
            self.rect = Some(rect);
            self.limit = limit;
        }
    }
}

struct Node {
    bound: f64,
    span: usize,
    cube: Vec<(f64, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.bound.total_cmp(&other.bound) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then_with(|| other.span.cmp(&self.span))
    }
}

#[derive(Debug, Clone)]
pub(crate) struct BnbOutcome {
    pub best: Best,
    pub upper: f64,
    pub converged: bool,
    pub boxes: usize,
    pub iterations: usize,
}

fn corners_and_center(cube: &[(f64, f64)]) -> Vec<Vec<f64>> {
    let d = cube.len();
    let mut pts = Vec::with_capacity((1 << d) + 1);
    pts.push(cube.iter().map(|(l, h)| 0.5 * (l + h)).collect());
    for bits in 0..(1usize << d) {
        pts.push(
            cube.iter()
                .enumerate()
                .map(|(i, (l, h))| if bits >> i & 1 == 1 { *h } else { *l })
                .collect(),
        );
    }
    pts
}

/// The full unit parameter cube of every span.
pub(crate) fn full_roots(spans: &[SpanData]) -> Vec<(usize, Vec<(f64, f64)>)> {
    spans.iter().enumerate().map(|(i, s)| (i, vec![(0.0, 1.0); s.dim])).collect()
}

/// Maximizes `obj` over the union of the root parameter boxes.
pub(crate) fn maximize<O: BoxObjective>(
    grid: &AxisGrid,
    spans: &[SpanData],
    roots: Vec<(usize, Vec<(f64, f64)>)>,
    obj: &O,
    opts: &SearchOptions,
) -> BnbOutcome {
    let mut best = Best::new();
    let mut heap = BinaryHeap::new();
    let mut boxes = 0usize;

    let visit = |span_idx: usize, cube: Vec<(f64, f64)>, best: &mut Best, heap: &mut BinaryHeap<Node>| {
        let span = &spans[span_idx];
        let mut local = f64::NEG_INFINITY;
        for x in corners_and_center(&cube) {
            if let Some(v) = obj.value(span, &x) {
                local = local.max(v);
                best.consider(v, span.realize(grid, &x), span.is_limit(&x));
            }
        }
        if span.dim == 0 {
            return;
        }
        let bound = obj.bound(span, &cube).max(local);
        if bound.is_nan() || bound > best.value {
            heap.push(Node { bound, span: span_idx, cube });
        }
    };

    for (i, cube) in roots {
        visit(i, cube, &mut best, &mut heap);
        boxes += 1;
    }

    let mut iterations = 0usize;
    let converged = loop {
        let Some(top) = heap.peek() else { break true };
        let upper = top.bound.max(best.value);
        if upper - best.value <= opts.tol * upper.abs() {
            break true;
        }
        if boxes >= opts.max_boxes {
            break false;
        }
        let node = heap.pop().expect("peeked");
        if node.bound <= best.value {
            continue;
        }
        iterations += 1;
        let (axis, _) = node
            .cube
            .iter()
            .enumerate()
            .map(|(i, (l, h))| (i, h - l))
            .fold((0, -1.0), |acc, it| if it.1 > acc.1 { it } else { acc });
        let (l, h) = node.cube[axis];
        let mid = 0.5 * (l + h);
        for half in [(l, mid), (mid, h)] {
            let mut cube = node.cube.clone();
            cube[axis] = half;
            visit(node.span, cube, &mut best, &mut heap);
            boxes += 1;
        }
    };
    let remaining = heap.iter().map(|n| n.bound).fold(f64::NEG_INFINITY, f64::max);
    let upper = if converged && heap.is_empty() {
        best.value
    } else {
        remaining.max(best.value)
    };
    BnbOutcome { best, upper, converged, boxes, iterations }
}
