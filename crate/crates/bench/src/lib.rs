//! Fixtures shared by the benchmarks.

use std::sync::Arc;

use strongweights_core::{AxisGrid, GridMeasure, Weight};

/// Lebesgue measure and a sawtooth weight on `cells` uniform cells of `[0, 1]^dim`.
pub fn sawtooth(dim: usize, cells: usize) -> (GridMeasure, Weight) {
    let grid = Arc::new(AxisGrid::uniform(&vec![0.0; dim], &vec![1.0; dim], &vec![cells; dim]).unwrap());
    let values = (0..grid.cell_count()).map(|c| 1.0 + (c % 5) as f64).collect();
    (GridMeasure::lebesgue(grid.clone()), Weight::new(grid, values).unwrap())
}
