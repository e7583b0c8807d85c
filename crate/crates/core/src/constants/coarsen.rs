//! Removal of breakpoints that separate identical data.
//!
//! When two adjacent slabs carry the same density and the same tracked
//! values in every cell, the breakpoint between them is invisible to every
//! box functional. Keeping it creates flat ridges in the parameter space
//! (scaling families that straddle the invisible breakpoint) which the
//! branch and bound can only resolve box by box; removing it is exact.

use std::sync::Arc;

use crate::grid::AxisGrid;
use crate::measure::GridMeasure;

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

/// Coarsened measure and per-cell values (one vector per tracked quantity).
pub(crate) fn coarsen(mu: &GridMeasure, values: &[&[f64]]) -> (GridMeasure, Vec<Vec<f64>>) {
    let grid = mu.grid();
    let shape = grid.shape();
    let mut keep: Vec<Vec<bool>> = shape.iter().map(|&n| vec![true; n + 1]).collect();
    let density: Vec<f64> = (0..grid.cell_count()).map(|c| mu.density(c)).collect();
    for a in 0..grid.dim() {
        for k in 1..shape[a] {
            let same = (0..grid.cell_count()).all(|c| {
                let idx = grid.multi_index(c);
                if idx[a] != k {
                    return true;
                }
                let mut left = idx.clone();
                left[a] = k - 1;
                let l = grid.flat_index(&left);
                close(density[c], density[l])
                    && (density[c] == 0.0 || values.iter().all(|v| close(v[c], v[l])))
            });
            keep[a][k] = !same;
        }
    }
    if keep.iter().all(|k| k.iter().all(|&b| b)) {
        return (mu.clone(), values.iter().map(|v| v.to_vec()).collect());
    }
    let axes: Vec<Vec<f64>> = (0..grid.dim())
        .map(|a| grid.axis(a).iter().zip(&keep[a]).filter(|(_, &k)| k).map(|(x, _)| *x).collect())
        .collect();
    // Coarse index of every fine cell along each axis.
    let maps: Vec<Vec<usize>> = keep
        .iter()
        .map(|k| {
            let mut out = Vec::with_capacity(k.len() - 1);
            let mut j = 0usize;
            for i in 0..k.len() - 1 {
                if i > 0 && k[i] {
                    j += 1;
                }
                out.push(j);
            }
            out
        })
        .collect();
    let coarse = Arc::new(
        AxisGrid::with_limit(axes, usize::MAX).expect("subset of valid breakpoints is valid"),
    );
    let n = coarse.cell_count();
    let mut masses = vec![0.0; n];
    let mut sums = vec![vec![0.0; n]; values.len()];
    let mut firsts = vec![vec![f64::NAN; n]; values.len()];
    for c in 0..grid.cell_count() {
        let idx = grid.multi_index(c);
        let cidx: Vec<usize> = idx.iter().enumerate().map(|(a, &i)| maps[a][i]).collect();
        let t = coarse.flat_index(&cidx);
        let m = mu.masses()[c];
        masses[t] += m;
        for (q, v) in values.iter().enumerate() {
            sums[q][t] += m * v[c];
            if firsts[q][t].is_nan() {
                firsts[q][t] = v[c];
            }
        }
    }
    let out_values = sums
        .into_iter()
        .zip(firsts)
        .map(|(s, f)| {
            s.iter()
                .zip(&f)
                .zip(&masses)
                .map(|((s, f), m)| if *m > 0.0 { s / m } else { *f })
                .collect()
        })
        .collect();
    let measure = GridMeasure::new(coarse, masses).expect("summed masses stay valid");
    (measure, out_values)
}
