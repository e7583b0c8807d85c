//! Rectangles grouped by which cell each face lies in.
//!
//! For a fixed assignment of faces to cells, every box integral is
//! multilinear in per-axis coverage factors, and each factor is monotone in
//! the face coordinates. Per axis the assignment is one of:
//!
//! * `Single`: both faces in one cell. Averages do not depend on the
//!   position inside the cell, so the axis is collapsed to that cell.
//! * `Pair`: faces in adjacent cells, no interior. Averages are invariant
//!   under scaling about the shared breakpoint, so a single parameter
//!   `θ ∈ [0, 1]` (coverage `θ` of the left cell, `1 - θ` of the right)
//!   reaches every configuration without passing through zero-width boxes.
//! * `Wide`: at least one full interior cell; parameters `u, v ∈ [0, 1]`
//!   are the covered fractions of the first and last cell.

use crate::grid::{AxisGrid, GridRect, Rect, MAX_DIM};
use crate::measure::CumTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum AxisSpan {
    Single { cell: usize },
    Pair { s: usize },
    Wide { s: usize, t: usize },
}

impl AxisSpan {
    pub fn from_range(s: usize, t: usize) -> Self {
        match t - s {
            0 => AxisSpan::Single { cell: s },
            1 => AxisSpan::Pair { s },
            _ => AxisSpan::Wide { s, t },
        }
    }

    pub fn params(&self) -> usize {
        match self {
            AxisSpan::Single { .. } => 0,
            AxisSpan::Pair { .. } => 1,
            AxisSpan::Wide { .. } => 2,
        }
    }

    /// Categories used on this axis: 0 = first cell, 1 = interior (or the
    /// single cell), 2 = last cell; with their cell index ranges.
    fn categories(&self) -> Vec<(u8, usize, usize)> {
        match *self {
            AxisSpan::Single { cell } => vec![(1, cell, cell)],
            AxisSpan::Pair { s } => vec![(0, s, s), (2, s + 1, s + 1)],
            AxisSpan::Wide { s, t } => vec![(0, s, s), (1, s + 1, t - 1), (2, t, t)],
        }
    }

}

/// One block of cells sharing a coverage factor.
#[derive(Debug, Clone)]
pub(crate) struct Block {
    cats: [u8; MAX_DIM],
    pub mass: f64,
    /// Block integrals of each tracked quantity.
    pub sums: Vec<f64>,
    /// Flat indices of the cells in the block.
    pub cells: Vec<usize>,
}

/// Precomputed block data for one face-to-cell assignment.
#[derive(Debug, Clone)]
pub(crate) struct SpanData {
    pub axes: Vec<AxisSpan>,
    pub offsets: Vec<usize>,
    pub dim: usize,
    pub blocks: Vec<Block>,
}

impl SpanData {
    pub fn new(grid: &AxisGrid, axes: Vec<AxisSpan>, mass: &CumTable, quantities: &[&CumTable]) -> Self {
        let mut offsets = Vec::with_capacity(axes.len());
        let mut dim = 0;
        for a in &axes {
            offsets.push(dim);
            dim += a.params();
        }
        let cats: Vec<Vec<(u8, usize, usize)>> = axes.iter().map(AxisSpan::categories).collect();
        let mut blocks = Vec::new();
        let mut pick = vec![0usize; axes.len()];
        loop {
            let mut c = [0u8; MAX_DIM];
            let mut ranges = Vec::with_capacity(axes.len());
            for (a, &i) in pick.iter().enumerate() {
                let (cat, lo, hi) = cats[a][i];
                c[a] = cat;
                ranges.push((lo, hi));
            }
            let gr = GridRect { ranges };
            blocks.push(Block {
                cats: c,
                mass: mass.query_grid(&gr),
                sums: quantities.iter().map(|q| q.query_grid(&gr)).collect(),
                cells: gr.cells(grid),
            });
            let mut a = axes.len();
            loop {
                if a == 0 {
                    return Self { axes, offsets, dim, blocks };
                }
                a -= 1;
                pick[a] += 1;
                if pick[a] < cats[a].len() {
                    break;
                }
                pick[a] = 0;
            }
        }
    }

    fn factor(&self, axis: usize, cat: u8, x: &[f64]) -> f64 {
        let o = self.offsets[axis];
        match (self.axes[axis], cat) {
            (_, 1) => 1.0,
            (AxisSpan::Pair { .. }, 0) => x[o],
            (AxisSpan::Pair { .. }, _) => 1.0 - x[o],
            (AxisSpan::Wide { .. }, 0) => x[o],
            (AxisSpan::Wide { .. }, _) => x[o + 1],
            (AxisSpan::Single { .. }, _) => 1.0,
        }
    }

    fn factor_range(&self, axis: usize, cat: u8, b: &[(f64, f64)]) -> (f64, f64) {
        let o = self.offsets[axis];
        match (self.axes[axis], cat) {
            (_, 1) => (1.0, 1.0),
            (AxisSpan::Pair { .. }, 0) => b[o],
            (AxisSpan::Pair { .. }, _) => (1.0 - b[o].1, 1.0 - b[o].0),
            (AxisSpan::Wide { .. }, 0) => b[o],
            (AxisSpan::Wide { .. }, _) => b[o + 1],
            (AxisSpan::Single { .. }, _) => (1.0, 1.0),
        }
    }

    pub fn coefficient(&self, block: &Block, x: &[f64]) -> f64 {
        (0..self.axes.len()).map(|a| self.factor(a, block.cats[a], x)).product()
    }

    pub fn coefficient_range(&self, block: &Block, b: &[(f64, f64)]) -> (f64, f64) {
        let mut lo = 1.0;
        let mut hi = 1.0;
        for a in 0..self.axes.len() {
            let (l, h) = self.factor_range(a, block.cats[a], b);
            lo *= l;
            hi *= h;
        }
        (lo, hi)
    }

    /// Mass and quantity integrals at a parameter point.
    pub fn evaluate(&self, x: &[f64], out: &mut [f64]) -> f64 {
        out.iter_mut().for_each(|v| *v = 0.0);
        let mut m = 0.0;
        for b in &self.blocks {
            let c = self.coefficient(b, x);
            if c == 0.0 {
                continue;
            }
            m += c * b.mass;
            for (o, s) in out.iter_mut().zip(&b.sums) {
                *o += c * s;
            }
        }
        m
    }

    /// Mass and quantity integrals (slot 0 is the mass) with their partial
    /// derivatives in the parameters; `grads[q * dim + i]` is `∂_i` of slot `q`.
    pub fn evaluate_with_grad(&self, x: &[f64], vals: &mut [f64], grads: &mut [f64]) {
        vals.iter_mut().for_each(|v| *v = 0.0);
        grads.iter_mut().for_each(|v| *v = 0.0);
        let n = self.axes.len();
        let mut factors = [1.0; MAX_DIM];
        // Per axis: (coordinate, sign) of the parameter the factor depends on.
        let mut dep: [Option<(usize, f64)>; MAX_DIM] = [None; MAX_DIM];
        for b in &self.blocks {
            for a in 0..n {
                factors[a] = self.factor(a, b.cats[a], x);
                let o = self.offsets[a];
                dep[a] = match (self.axes[a], b.cats[a]) {
                    (_, 1) | (AxisSpan::Single { .. }, _) => None,
                    (AxisSpan::Pair { .. }, 0) => Some((o, 1.0)),
                    (AxisSpan::Pair { .. }, _) => Some((o, -1.0)),
                    (AxisSpan::Wide { .. }, 0) => Some((o, 1.0)),
                    (AxisSpan::Wide { .. }, _) => Some((o + 1, 1.0)),
                };
            }
            let c: f64 = factors[..n].iter().product();
            vals[0] += c * b.mass;
            for (q, s) in b.sums.iter().enumerate() {
                vals[q + 1] += c * s;
            }
            for a in 0..n {
                let Some((i, sign)) = dep[a] else { continue };
                let rest: f64 = (0..n).filter(|&k| k != a).map(|k| factors[k]).product();
                let d = sign * rest;
                grads[i] += d * b.mass;
                for (q, s) in b.sums.iter().enumerate() {
                    grads[(q + 1) * self.dim + i] += d * s;
                }
            }
        }
    }

    /// Exact ranges over the box `b` of every slot of
    /// [`SpanData::evaluate_with_grad`]: all of them are multilinear in the
    /// parameters, so their extremes sit at the corners.
    pub fn corner_ranges(&self, b: &[(f64, f64)]) -> (Vec<(f64, f64)>, Vec<(f64, f64)>) {
        let nq = self.blocks.first().map_or(0, |bl| bl.sums.len()) + 1;
        let d = self.dim;
        let mut vr = vec![(f64::INFINITY, f64::NEG_INFINITY); nq];
        let mut gr = vec![(f64::INFINITY, f64::NEG_INFINITY); nq * d];
        let mut vals = vec![0.0; nq];
        let mut grads = vec![0.0; nq * d];
        let mut x = vec![0.0; d];
        for bits in 0..(1usize << d) {
            for (i, xi) in x.iter_mut().enumerate() {
                *xi = if bits >> i & 1 == 1 { b[i].1 } else { b[i].0 };
            }
            self.evaluate_with_grad(&x, &mut vals, &mut grads);
            for (r, v) in vr.iter_mut().zip(&vals) {
                *r = (r.0.min(*v), r.1.max(*v));
            }
            for (r, v) in gr.iter_mut().zip(&grads) {
                *r = (r.0.min(*v), r.1.max(*v));
            }
        }
        (vr, gr)
    }

    /// Whether the configuration at `x` is a limit of boxes: some face cell
    /// that the assignment declares met has zero coverage.
    pub fn is_limit(&self, x: &[f64]) -> bool {
        self.axes.iter().enumerate().any(|(a, span)| {
            let o = self.offsets[a];
            match span {
                AxisSpan::Single { .. } => false,
                AxisSpan::Pair { .. } => x[o] <= 0.0 || x[o] >= 1.0,
                AxisSpan::Wide { .. } => x[o] <= 0.0 || x[o + 1] <= 0.0,
            }
        })
    }

    /// A box realizing the parameter point. For `Pair` axes the largest box
    /// of the scaling family is returned.
    pub fn realize(&self, grid: &AxisGrid, x: &[f64]) -> Rect {
        let n = self.axes.len();
        let mut lo = vec![0.0; n];
        let mut hi = vec![0.0; n];
        for (a, span) in self.axes.iter().enumerate() {
            let bps = grid.axis(a);
            let o = self.offsets[a];
            let (l, h) = match *span {
                AxisSpan::Single { cell } => (bps[cell], bps[cell + 1]),
                AxisSpan::Pair { s } => {
                    let th = x[o];
                    let scale = th.max(1.0 - th);
                    let (u, v) = (th / scale, (1.0 - th) / scale);
                    (bps[s + 1] - u * (bps[s + 1] - bps[s]), bps[s + 1] + v * (bps[s + 2] - bps[s + 1]))
                }
                AxisSpan::Wide { s, t } => (
                    bps[s + 1] - x[o] * (bps[s + 1] - bps[s]),
                    bps[t] + x[o + 1] * (bps[t + 1] - bps[t]),
                ),
            };
            lo[a] = l;
            hi[a] = h;
        }
        Rect { lo, hi }
    }
}

/// Every face-to-cell assignment of the grid.
pub(crate) fn all_assignments(grid: &AxisGrid) -> Vec<Vec<AxisSpan>> {
    let mut out: Vec<Vec<AxisSpan>> = vec![Vec::new()];
    for a in 0..grid.dim() {
        let n = grid.cells_on_axis(a);
        let spans: Vec<AxisSpan> = (0..n)
            .flat_map(|s| (s..n).map(move |t| AxisSpan::from_range(s, t)))
            .collect();
        out = out
            .into_iter()
            .flat_map(|prefix| {
                spans.iter().map(move |sp| {
                    let mut v = prefix.clone();
                    v.push(*sp);
                    v
                })
            })
            .collect();
    }
    out
}

/// Upper bound of a weighted average `Σ v_i ω_i / Σ ω_i` when each weight
/// ranges independently over `[lo_i, hi_i]`. Items are `(v, lo, hi)`;
/// returns `-inf` when no weight can be positive.
pub(crate) fn max_weighted_average(items: &mut [(f64, f64, f64)]) -> f64 {
    items.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut num_lo: f64 = items.iter().map(|i| i.0 * i.1).sum();
    let mut den_lo: f64 = items.iter().map(|i| i.1).sum();
    let mut best = if den_lo > 0.0 { num_lo / den_lo } else { f64::NEG_INFINITY };
    for it in items.iter() {
        num_lo += it.0 * (it.2 - it.1);
        den_lo += it.2 - it.1;
        if den_lo > 0.0 {
            best = best.max(num_lo / den_lo);
        }
    }
    best
}
