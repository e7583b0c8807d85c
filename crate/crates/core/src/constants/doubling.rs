//! Doubling constant `sup μ(2R) / μ(R)` over boxes whose concentric double
//! stays in the domain.
//!
//! Per axis, the coverages of `R = [a, b]` and `2R = [(3a-b)/2, (3b-a)/2]`
//! are affine in `(a, b)` on every cell of the arrangement of the lines
//! `a = x_k`, `b = x_k`, `3a - b = 2x_k`, `3b - a = 2x_k`. With the other
//! axes fixed the ratio is linear-fractional in `(a, b)`, so the supremum is
//! attained at a product of per-axis arrangement vertices. Vertices with
//! `a = b` can be dropped: every line through such a vertex passes through
//! it, the ratio is constant along rays from it, and those rays end at
//! non-degenerate vertices.

use crate::error::{Error, Result};
use crate::grid::Rect;
use crate::measure::GridMeasure;

use super::bnb::Best;
use super::ConstantInterval;

const EPS: f64 = 1e-12;

fn axis_vertices(bps: &[f64]) -> Vec<(f64, f64)> {
    let (x0, xn) = (bps[0], bps[bps.len() - 1]);
    let scale = (xn - x0).abs().max(1.0);
    // Lines `alpha a + beta b = gamma`.
    let mut lines: Vec<(f64, f64, f64)> = Vec::with_capacity(4 * bps.len());
    for &x in bps {
        lines.push((1.0, 0.0, x));
        lines.push((0.0, 1.0, x));
        lines.push((3.0, -1.0, 2.0 * x));
        lines.push((-1.0, 3.0, 2.0 * x));
    }
    let mut out: Vec<(f64, f64)> = Vec::new();
    for i in 0..lines.len() {
        for j in i + 1..lines.len() {
            let (a1, b1, c1) = lines[i];
            let (a2, b2, c2) = lines[j];
            let det = a1 * b2 - a2 * b1;
            if det.abs() < 1e-12 {
                continue;
            }
            let a = (c1 * b2 - c2 * b1) / det;
            let b = (a1 * c2 - a2 * c1) / det;
            let admissible = b - a > EPS * scale
                && (3.0 * a - b) / 2.0 >= x0 - EPS * scale
                && (3.0 * b - a) / 2.0 <= xn + EPS * scale;
            if admissible && !out.iter().any(|&(p, q)| (p - a).abs() <= EPS * scale && (q - b).abs() <= EPS * scale) {
                out.push((a, b));
            }
        }
    }
    out.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
    out
}

/// Exact doubling constant of `mu`; the interval is degenerate (`L = U`)
/// unless some admissible box has zero mass with a charged double, in which
/// case `U = ∞` and the result is flagged not converged.
pub fn doubling_constant(mu: &GridMeasure) -> Result<ConstantInterval> {
    let grid = mu.grid();
    let domain = grid.domain();
    let per_axis: Vec<Vec<(f64, f64)>> = (0..grid.dim()).map(|a| axis_vertices(grid.axis(a))).collect();
    if per_axis.iter().any(Vec::is_empty) {
        return Err(Error::Undefined("no box has its concentric double inside the domain".into()));
    }
    let mut best = Best::new();
    let mut unbounded = false;
    let mut count = 0usize;
    let mut pick = vec![0usize; grid.dim()];
    loop {
        count += 1;
        let (lo, hi): (Vec<f64>, Vec<f64>) = pick.iter().enumerate().map(|(a, &i)| per_axis[a][i]).unzip();
        let r = Rect { lo, hi };
        let mut big = r.dilate(2.0);
        for a in 0..big.dim() {
            big.lo[a] = big.lo[a].max(domain.lo[a]);
            big.hi[a] = big.hi[a].min(domain.hi[a]);
        }
        let m = mu.table().query(&r);
        let m2 = mu.table().query(&big);
        if m > 0.0 {
            best.consider(m2 / m, r, false);
        } else if m2 > 0.0 {
            unbounded = true;
        }
        let mut a = pick.len();
        loop {
            if a == 0 {
                let witness = best.rect.clone();
                if witness.is_none() && !unbounded {
                    return Err(Error::Undefined("every admissible box has zero mass".into()));
                }
                let lower = if witness.is_some() { best.value } else { f64::INFINITY };
                return Ok(ConstantInterval {
                    lower,
                    upper: if unbounded { f64::INFINITY } else { lower },
                    witness,
                    attained: true,
                    converged: !unbounded,
                    boxes_explored: count,
                    iterations: 0,
                });
            }
            a -= 1;
            pick[a] += 1;
            if pick[a] < per_axis[a].len() {
                break;
            }
            pick[a] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::AxisGrid;
    use std::sync::Arc;

    #[test]
    fn lebesgue_is_two_to_the_n() {
        for (n, cells) in [(1, vec![3]), (2, vec![2, 3])] {
            let g = Arc::new(AxisGrid::uniform(&vec![0.0; n], &vec![1.0; n], &cells).unwrap());
            let c = doubling_constant(&GridMeasure::lebesgue(g)).unwrap();
            assert!((c.lower - 2f64.powi(n as i32)).abs() < 1e-12, "{c:?}");
            assert_eq!(c.lower, c.upper);
        }
    }

    #[test]
    fn step_measure_is_three() {
        // Masses 1 and 3 on the halves: R = [0.5 - h, 0.5] doubles to
        // [0.5 - 1.5h, 0.5 + 0.5h], ratio (1.5h + 1.5h) / h = 3.
        let g = Arc::new(AxisGrid::uniform(&[0.0], &[1.0], &[2]).unwrap());
        let mu = GridMeasure::new(g, vec![1.0, 3.0]).unwrap();
        let c = doubling_constant(&mu).unwrap();
        assert!((c.lower - 3.0).abs() < 1e-12, "{c:?}");
    }

    #[test]
    fn zero_mass_box_is_unbounded() {
        let g = Arc::new(AxisGrid::uniform(&[0.0], &[1.0], &[3]).unwrap());
        let mu = GridMeasure::new(g, vec![1.0, 0.0, 1.0]).unwrap();
        let c = doubling_constant(&mu).unwrap();
        assert!(c.upper.is_infinite() && !c.converged);
    }
}
