//! Pointwise evaluation and per-cell certified upper bounds.

use crate::constants::bnb::{maximize, Best};
use crate::constants::coarsen::coarsen;
use crate::constants::objective::RatioObjective;
use crate::constants::span::{AxisSpan, SpanData};
use crate::constants::{finish, spans_for, ConstantInterval, SearchOptions};
use crate::error::{invalid, Result};
use crate::grid::Rect;
use crate::measure::GridMeasure;

use super::{check_function, MaximalFamily};

/// Parameter box of `span` restricted to boxes that meet the box
/// `[lo, hi]` (a point when `lo == hi`), which must lie in one grid cell;
/// `None` when no box of the span does.
fn root_meeting(span: &SpanData, mu: &GridMeasure, lo: &[f64], hi: &[f64]) -> Option<Vec<(f64, f64)>> {
    let grid = mu.grid();
    let mut cube = vec![(0.0, 1.0); span.dim];
    for (a, axis) in span.axes.iter().enumerate() {
        let bps = grid.axis(a);
        let c = grid.locate(a, 0.5 * (lo[a] + hi[a]));
        let width = bps[c + 1] - bps[c];
        // How far the target stays from the right and left end of its
        // cell, relative to the cell width.
        let right = ((bps[c + 1] - hi[a]) / width).clamp(0.0, 1.0);
        let left = ((lo[a] - bps[c]) / width).clamp(0.0, 1.0);
        let o = span.offsets[a];
        match *axis {
            AxisSpan::Single { cell } if cell != c => return None,
            AxisSpan::Single { .. } => {}
            AxisSpan::Pair { s } if s == c => cube[o].0 = right / (1.0 + right),
            AxisSpan::Pair { s } if s + 1 == c => cube[o].1 = 1.0 / (1.0 + left),
            AxisSpan::Pair { .. } => return None,
            AxisSpan::Wide { s, t } if s <= c && c <= t => {
                if s == c {
                    cube[o].0 = right;
                }
                if t == c {
                    cube[o + 1].0 = left;
                }
            }
            AxisSpan::Wide { .. } => return None,
        }
    }
    Some(cube)
}

fn strong_at(f: &[f64], mu: &GridMeasure, x: &[f64], opts: &SearchOptions) -> Result<ConstantInterval> {
    let (cmu, vals) = coarsen(mu, &[f]);
    let table = cmu.weighted_table(&vals[0]);
    let spans = spans_for(&cmu, &[&table]);
    let roots = spans
        .iter()
        .enumerate()
        .filter_map(|(i, s)| root_meeting(s, &cmu, x, x).map(|c| (i, c)))
        .collect();
    finish(maximize(cmu.grid(), &spans, roots, &RatioObjective::Average, opts))
}

/// Exact centered maximal function of a 1D piecewise-constant function.
///
/// Between consecutive radii at which an end of `[x-h, x+h]` crosses a
/// breakpoint, both integrals are affine in `h`, so the average is monotone
/// and its supremum sits at those radii or at the `h -> 0` limit.
pub(crate) fn centered_exact(f: &[f64], mu: &GridMeasure, x: f64) -> Result<f64> {
    let grid = mu.grid();
    let bps = grid.axis(0);
    let (d0, d1) = (bps[0], bps[bps.len() - 1]);
    if !(d0..=d1).contains(&x) {
        return Err(invalid(format!("point {x} lies outside the domain")));
    }
    let ft = mu.weighted_table(f);
    let mut best = f64::NEG_INFINITY;
    // Limit h -> 0: density-weighted mean of the cells touching x.
    let c = grid.locate(0, x);
    let mut touching = vec![c];
    if x == bps[c] && c > 0 {
        touching.push(c - 1);
    }
    let (num, den) = touching
        .iter()
        .fold((0.0, 0.0), |(n, d), &k| (n + mu.density(k) * f[k], d + mu.density(k)));
    if den > 0.0 {
        best = num / den;
    }
    let mut radii: Vec<f64> = bps.iter().map(|b| (b - x).abs()).filter(|h| *h > 0.0).collect();
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    for h in radii {
        let r = Rect { lo: vec![(x - h).max(d0)], hi: vec![(x + h).min(d1)] };
        let m = mu.table().query(&r);
        if m > 0.0 {
            best = best.max(ft.query(&r) / m);
        }
    }
    Ok(best.max(0.0))
}

/// Lower bound of the cubic maximal function at `x` from cubes whose faces
/// sit on breakpoints or are centered at `x`.
fn cubic_candidates(f: &[f64], mu: &GridMeasure, x: &[f64]) -> (f64, Option<Rect>) {
    let grid = mu.grid();
    let n = grid.dim();
    let domain = grid.domain();
    let ft = mu.weighted_table(f);
    let mut sides: Vec<f64> = Vec::new();
    for a in 0..n {
        for b in grid.axis(a) {
            sides.push((b - x[a]).abs());
            sides.push(2.0 * (b - x[a]).abs());
            for b2 in grid.axis(a) {
                sides.push((b - b2).abs());
            }
        }
    }
    sides.retain(|s| *s > 0.0);
    sides.sort_by(f64::total_cmp);
    sides.dedup_by(|p, q| (*p - *q).abs() <= 1e-14 * q.abs());
    let mut best = Best::new();
    'sides: for side in sides {
        let starts: Vec<Vec<f64>> = (0..n)
            .map(|a| {
                let mut v = vec![x[a] - 0.5 * side];
                for &b in grid.axis(a) {
                    if b <= x[a] && b >= x[a] - side {
                        v.push(b);
                    }
                    if b >= x[a] && b <= x[a] + side {
                        v.push(b - side);
                    }
                }
                v
            })
            .collect();
        let mut pick = vec![0usize; n];
        loop {
            let lo: Vec<f64> = (0..n).map(|a| starts[a][pick[a]].max(domain.lo[a])).collect();
            let hi: Vec<f64> = (0..n).map(|a| (starts[a][pick[a]] + side).min(domain.hi[a])).collect();
            if lo.iter().zip(&hi).all(|(l, h)| l < h) {
                let r = Rect { lo, hi };
                let m = mu.table().query(&r);
                if m > 0.0 {
                    best.consider(ft.query(&r) / m, r, false);
                }
            }
            let mut a = n;
            loop {
                if a == 0 {
                    continue 'sides;
                }
                a -= 1;
                pick[a] += 1;
                if pick[a] < starts[a].len() {
                    break;
                }
                pick[a] = 0;
            }
        }
    }
    (best.value, best.rect)
}

/// Maximal function of `f >= 0` at the point `x`, as a certified interval.
///
/// Strong (and cubic in one dimension, where cubes are intervals) use the
/// branch and bound restricted to boxes containing `x`; centered is exact;
/// cubic in higher dimension pairs a candidate-cube lower bound with the
/// strong upper bound.
pub fn maximal_at(
    f: &[f64],
    mu: &GridMeasure,
    x: &[f64],
    family: MaximalFamily,
    opts: &SearchOptions,
) -> Result<ConstantInterval> {
    check_function(mu, f)?;
    let grid = mu.grid();
    if x.len() != grid.dim() || !grid.domain().contains_point(x) {
        return Err(invalid(format!("point {x:?} lies outside the domain")));
    }
    match family {
        MaximalFamily::Strong => strong_at(f, mu, x, opts),
        MaximalFamily::Cubic if grid.dim() == 1 => strong_at(f, mu, x, opts),
        MaximalFamily::Cubic => {
            let upper = strong_at(f, mu, x, opts)?;
            let (lower, witness) = cubic_candidates(f, mu, x);
            Ok(ConstantInterval {
                lower,
                upper: upper.upper.max(lower),
                witness,
                attained: true,
                converged: upper.upper - lower <= opts.tol * upper.upper,
                boxes_explored: upper.boxes_explored,
                iterations: upper.iterations,
            })
        }
        MaximalFamily::Centered => {
            if grid.dim() != 1 {
                return Err(invalid("the centered maximal function is only available in one dimension"));
            }
            let v = centered_exact(f, mu, x[0])?;
            Ok(ConstantInterval {
                lower: v,
                upper: v,
                witness: None,
                attained: true,
                converged: true,
                boxes_explored: 0,
                iterations: 0,
            })
        }
    }
}

/// Certified upper bound of `M_s f` over each (closed) grid cell: the
/// largest average over boxes meeting the cell.
pub fn cell_upper_bounds(f: &[f64], mu: &GridMeasure, opts: &SearchOptions) -> Result<Vec<f64>> {
    check_function(mu, f)?;
    let grid = mu.grid();
    let (cmu, vals) = coarsen(mu, &[f]);
    let table = cmu.weighted_table(&vals[0]);
    let spans = spans_for(&cmu, &[&table]);
    (0..grid.cell_count())
        .map(|c| {
            let cell = grid.cell_rect(c);
            let roots = spans
                .iter()
                .enumerate()
                .filter_map(|(i, s)| root_meeting(s, &cmu, &cell.lo, &cell.hi).map(|r| (i, r)))
                .collect();
            let out = maximize(cmu.grid(), &spans, roots, &RatioObjective::Average, opts);
            // A zero-mass neighbourhood leaves nothing to average; the
            // function value is then the only meaningful bound.
            Ok(if out.best.rect.is_some() { out.upper.max(out.best.value) } else { f[c] })
        })
        .collect()
}
