//! Tensor grids, real-coordinate boxes and grid-aligned boxes.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Default bound on the total number of cells of a grid.
pub const DEFAULT_MAX_CELLS: usize = 1 << 16;

/// Largest supported dimension.
pub const MAX_DIM: usize = 3;

/// Per-axis strictly increasing breakpoints; cells are tensor products of
/// consecutive breakpoint intervals. Cells are stored in row-major order
/// (the last axis varies fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisGrid {
    axes: Vec<Vec<f64>>,
    #[serde(skip)]
    strides: Vec<usize>,
}

impl AxisGrid {
    pub fn new(axes: Vec<Vec<f64>>) -> Result<Self> {
        Self::with_limit(axes, DEFAULT_MAX_CELLS)
    }

    pub fn with_limit(axes: Vec<Vec<f64>>, max_cells: usize) -> Result<Self> {
        if axes.is_empty() || axes.len() > MAX_DIM {
            return Err(invalid(format!(
                "dimension must be between 1 and {MAX_DIM}, got {}",
                axes.len()
            )));
        }
        let mut total: usize = 1;
        for (axis, bps) in axes.iter().enumerate() {
            if bps.len() < 2 {
                return Err(invalid(format!("axis {axis} needs at least one cell")));
            }
            if let Some(i) = bps.iter().position(|x| !x.is_finite()) {
                return Err(invalid(format!("axis {axis}: breakpoint {i} is not finite")));
            }
            if let Some(i) = (1..bps.len()).find(|&i| bps[i] <= bps[i - 1]) {
                return Err(invalid(format!(
                    "breakpoints not strictly increasing on axis {axis} at index {i}"
                )));
            }
            total = total.saturating_mul(bps.len() - 1);
        }
        if total > max_cells {
            return Err(invalid(format!(
                "grid has {total} cells, exceeding the limit of {max_cells}"
            )));
        }
        let strides = strides_for(&axes.iter().map(|a| a.len() - 1).collect::<Vec<_>>());
        Ok(Self { axes, strides })
    }

    /// Uniform grid with `cells[i]` equal cells on `[lo[i], hi[i]]`.
    pub fn uniform(lo: &[f64], hi: &[f64], cells: &[usize]) -> Result<Self> {
        if lo.len() != hi.len() || lo.len() != cells.len() {
            return Err(invalid("domain and cell counts disagree in dimension"));
        }
        let axes = (0..lo.len())
            .map(|i| {
                let k = cells[i];
                (0..=k)
                    .map(|j| {
                        if j == k {
                            hi[i]
                        } else {
                            lo[i] + (hi[i] - lo[i]) * j as f64 / k as f64
                        }
                    })
                    .collect()
            })
            .collect();
        Self::new(axes)
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axis(&self, i: usize) -> &[f64] {
        &self.axes[i]
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn cells_on_axis(&self, i: usize) -> usize {
        self.axes[i].len() - 1
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.len() - 1).collect()
    }

    pub fn cell_count(&self) -> usize {
        self.axes.iter().map(|a| a.len() - 1).product()
    }

    pub fn domain(&self) -> Rect {
        Rect {
            lo: self.axes.iter().map(|a| a[0]).collect(),
            hi: self.axes.iter().map(|a| a[a.len() - 1]).collect(),
        }
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        for (axis, s) in self.strides.iter().enumerate() {
            out[axis] = flat / s;
            flat %= s;
        }
        out
    }

    pub fn cell_width(&self, axis: usize, k: usize) -> f64 {
        self.axes[axis][k + 1] - self.axes[axis][k]
    }

    pub fn cell_volume(&self, flat: usize) -> f64 {
        let idx = self.multi_index(flat);
        idx.iter().enumerate().map(|(a, &k)| self.cell_width(a, k)).product()
    }

    pub fn cell_rect(&self, flat: usize) -> Rect {
        let idx = self.multi_index(flat);
        Rect {
            lo: idx.iter().enumerate().map(|(a, &k)| self.axes[a][k]).collect(),
            hi: idx.iter().enumerate().map(|(a, &k)| self.axes[a][k + 1]).collect(),
        }
    }

    pub fn cell_midpoint(&self, flat: usize) -> Vec<f64> {
        let idx = self.multi_index(flat);
        idx.iter()
            .enumerate()
            .map(|(a, &k)| 0.5 * (self.axes[a][k] + self.axes[a][k + 1]))
            .collect()
    }

    /// Index of the cell on `axis` containing `x`; points on an interior
    /// breakpoint belong to the cell on their right, the domain's right end to
    /// the last cell.
    pub fn locate(&self, axis: usize, x: f64) -> usize {
        let bps = &self.axes[axis];
        let n = bps.len() - 1;
        let k = bps.partition_point(|&b| b <= x);
        k.saturating_sub(1).min(n - 1)
    }

    pub fn contains(&self, r: &Rect) -> bool {
        r.dim() == self.dim()
            && (0..self.dim()).all(|i| {
                let a = &self.axes[i];
                r.lo[i] >= a[0] && r.hi[i] <= a[a.len() - 1] && r.lo[i] <= r.hi[i]
            })
    }

    pub fn check_rect(&self, r: &Rect) -> Result<()> {
        if self.contains(r) {
            Ok(())
        } else {
            Err(invalid(format!("rectangle {r} is not inside the domain")))
        }
    }

    /// Grid refined by splitting every cell into `factor` equal parts per axis.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        let axes = self
            .axes
            .iter()
            .map(|bps| {
                let mut out = Vec::with_capacity((bps.len() - 1) * factor + 1);
                for w in bps.windows(2) {
                    for j in 0..factor {
                        out.push(w[0] + (w[1] - w[0]) * j as f64 / factor as f64);
                    }
                }
                out.push(bps[bps.len() - 1]);
                out
            })
            .collect();
        Self::with_limit(axes, usize::MAX)
    }

    /// Iterates over all grid-aligned boxes.
    pub fn grid_rects(&self) -> impl Iterator<Item = GridRect> + '_ {
        let spans: Vec<Vec<(usize, usize)>> = (0..self.dim())
            .map(|a| {
                let n = self.cells_on_axis(a);
                (0..n).flat_map(move |s| (s..n).map(move |t| (s, t))).collect()
            })
            .collect();
        let counts: Vec<usize> = spans.iter().map(Vec::len).collect();
        let total: usize = counts.iter().product();
        let strides = strides_for(&counts);
        (0..total).map(move |mut flat| {
            let mut ranges = Vec::with_capacity(spans.len());
            for (a, s) in strides.iter().enumerate() {
                ranges.push(spans[a][flat / s]);
                flat %= s;
            }
            GridRect { ranges }
        })
    }

    pub(crate) fn same_as(&self, other: &AxisGrid) -> bool {
        std::ptr::eq(self, other) || self.axes == other.axes
    }
}

pub(crate) fn strides_for(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * shape[i + 1];
    }
    strides
}

/// Axis-aligned closed box `∏ [lo_i, hi_i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Rect {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(invalid("rectangle corners disagree in dimension"));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a <= b) || !a.is_finite() || !b.is_finite()) {
            return Err(invalid("rectangle needs finite lo <= hi on every axis"));
        }
        Ok(Self { lo, hi })
    }

    pub fn interval(a: f64, b: f64) -> Self {
        Self { lo: vec![a], hi: vec![b] }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        x.iter().enumerate().all(|(i, &v)| self.lo[i] <= v && v <= self.hi[i])
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        (0..self.dim()).all(|i| self.lo[i] <= other.lo[i] && other.hi[i] <= self.hi[i])
    }

    pub fn intersection(&self, other: &Rect) -> Option<Rect> {
        let lo: Vec<f64> = self.lo.iter().zip(&other.lo).map(|(a, b)| a.max(*b)).collect();
        let hi: Vec<f64> = self.hi.iter().zip(&other.hi).map(|(a, b)| a.min(*b)).collect();
        lo.iter().zip(&hi).all(|(a, b)| a <= b).then_some(Rect { lo, hi })
    }

    /// Concentric dilation by `factor`.
    pub fn dilate(&self, factor: f64) -> Rect {
        let (lo, hi) = (0..self.dim())
            .map(|i| {
                let c = 0.5 * (self.lo[i] + self.hi[i]);
                let h = 0.5 * factor * (self.hi[i] - self.lo[i]);
                (c - h, c + h)
            })
            .unzip();
        Rect { lo, hi }
    }

    /// Endpoint vector `(lo_1, hi_1, lo_2, hi_2, ...)` used for tie-breaking.
    pub fn endpoint_key(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).flat_map(|(a, b)| [*a, *b]).collect()
    }

    pub(crate) fn lex_less(&self, other: &Rect) -> bool {
        let (a, b) = (self.endpoint_key(), other.endpoint_key());
        for (x, y) in a.iter().zip(&b) {
            if x < y {
                return true;
            }
            if x > y {
                return false;
            }
        }
        false
    }
}

impl std::fmt::Display for Rect {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for i in 0..self.dim() {
            if i > 0 {
                write!(f, "x")?;
            }
            write!(f, "[{}, {}]", self.lo[i], self.hi[i])?;
        }
        Ok(())
    }
}

/// Grid-aligned box: inclusive cell index ranges per axis.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GridRect {
    pub ranges: Vec<(usize, usize)>,
}

impl GridRect {
    pub fn new(grid: &AxisGrid, ranges: Vec<(usize, usize)>) -> Result<Self> {
        if ranges.len() != grid.dim() {
            return Err(Error::GridMismatch);
        }
        for (a, &(s, t)) in ranges.iter().enumerate() {
            if s > t || t >= grid.cells_on_axis(a) {
                return Err(invalid(format!("invalid cell range {s}..={t} on axis {a}")));
            }
        }
        Ok(Self { ranges })
    }

    pub fn to_rect(&self, grid: &AxisGrid) -> Rect {
        Rect {
            lo: self.ranges.iter().enumerate().map(|(a, r)| grid.axis(a)[r.0]).collect(),
            hi: self.ranges.iter().enumerate().map(|(a, r)| grid.axis(a)[r.1 + 1]).collect(),
        }
    }

    /// Flat indices of the cells covered.
    pub fn cells(&self, grid: &AxisGrid) -> Vec<usize> {
        let mut out = vec![0usize];
        for (a, &(s, t)) in self.ranges.iter().enumerate() {
            let stride = grid.stride(a);
            out = out
                .into_iter()
                .flat_map(|base| (s..=t).map(move |k| base + k * stride))
                .collect();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_increasing_breakpoints() {
        let err = AxisGrid::new(vec![vec![0.0, 0.5, 0.5, 1.0]]).unwrap_err();
        assert!(err.to_string().contains("not strictly increasing"));
        assert!(err.to_string().contains("index 2"));
    }

    #[test]
    fn cell_limit_is_enforced() {
        assert!(AxisGrid::uniform(&[0.0, 0.0], &[1.0, 1.0], &[300, 300]).is_err());
    }

    #[test]
    fn index_round_trip_and_locate() {
        let g = AxisGrid::uniform(&[0.0, 0.0], &[1.0, 2.0], &[4, 3]).unwrap();
        for flat in 0..g.cell_count() {
            assert_eq!(g.flat_index(&g.multi_index(flat)), flat);
        }
        assert_eq!(g.locate(0, 0.25), 1);
        assert_eq!(g.locate(0, 1.0), 3);
        assert_eq!(g.locate(1, 0.1), 0);
    }

    #[test]
    fn grid_rect_enumeration_count() {
        let g = AxisGrid::uniform(&[0.0], &[1.0], &[4]).unwrap();
        assert_eq!(g.grid_rects().count(), 10);
        let g2 = AxisGrid::uniform(&[0.0, 0.0], &[1.0, 1.0], &[3, 2]).unwrap();
        assert_eq!(g2.grid_rects().count(), 6 * 3);
    }
}
