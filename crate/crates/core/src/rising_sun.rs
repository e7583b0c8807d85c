//! Rising-sun decompositions: disjoint boxes on which a function averages
//! exactly `λ`, with the function at most `λ` elsewhere.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::Rect;
use crate::maximal::{check_function, DyadicGrid};
use crate::measure::{for_each_fragment, GridMeasure};

/// Relative tolerance for comparisons against `λ`.
const TOL: f64 = 1e-10;
/// Recursion budget of the multidimensional construction.
const MAX_DEPTH: usize = 400;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RisingSunDecomposition {
    pub level: f64,
    pub rects: Vec<Rect>,
    /// Average of the function over each selected box.
    pub averages: Vec<f64>,
    /// Largest function value over cells that keep uncovered positive mass
    /// inside the root box (0 when everything is covered).
    pub residual_max: f64,
}

impl RisingSunDecomposition {
    pub fn selected_mass(&self, mu: &GridMeasure) -> f64 {
        self.rects.iter().map(|r| mu.table().query(r)).sum()
    }
}

fn precheck(f: &[f64], mu: &GridMeasure, root: &Rect, lambda: f64) -> Result<f64> {
    check_function(mu, f)?;
    mu.grid().check_rect(root)?;
    let m = mu.table().query(root);
    if m <= 0.0 {
        return Err(Error::Degenerate("root box has zero mass".into()));
    }
    let avg = mu.weighted_table(f).query(root) / m;
    if !(lambda > 0.0) && f.iter().any(|v| *v > 0.0) {
        return Err(Error::Precondition(format!("level must be positive, got {lambda}")));
    }
    if avg > lambda * (1.0 + TOL) {
        return Err(Error::Precondition(format!("average {avg} over the root exceeds the level {lambda}")));
    }
    Ok(avg)
}

/// Largest value over cells whose part inside `root` keeps positive mass
/// outside every selected box.
fn residual(f: &[f64], mu: &GridMeasure, root: &Rect, rects: &[Rect]) -> f64 {
    let grid = mu.grid();
    let mut out = 0.0f64;
    for_each_fragment(grid, root, |cell, frac| {
        let inside = mu.masses()[cell] * frac;
        if inside <= 0.0 {
            return;
        }
        let cell_rect = grid.cell_rect(cell);
        let covered: f64 = rects
            .iter()
            .filter_map(|r| r.intersection(&cell_rect))
            .map(|q| mu.table().query(&q))
            .sum();
        if inside - covered > 1e-12 * mu.masses()[cell] {
            out = out.max(f[cell]);
        }
    });
    out
}

fn finish(f: &[f64], mu: &GridMeasure, root: &Rect, lambda: f64, rects: Vec<Rect>) -> RisingSunDecomposition {
    let ft = mu.weighted_table(f);
    let averages = rects.iter().map(|r| ft.query(r) / mu.table().query(r)).collect();
    let residual_max = residual(f, mu, root, &rects);
    RisingSunDecomposition { level: lambda, rects, averages, residual_max }
}

/// Nodes `(t, F(t))` of `F(x) = ∫_a^x (f - λ) dμ` over `[a, b]`.
fn primitive(f: &[f64], mu: &GridMeasure, a: f64, b: f64, lambda: f64) -> Vec<(f64, f64)> {
    let grid = mu.grid();
    let mut ts = vec![a];
    ts.extend(grid.axis(0).iter().copied().filter(|t| *t > a && *t < b));
    ts.push(b);
    let mut out = Vec::with_capacity(ts.len());
    let mut acc = 0.0;
    out.push((a, 0.0));
    for w in ts.windows(2) {
        let c = grid.locate(0, 0.5 * (w[0] + w[1]));
        acc += mu.density(c) * (w[1] - w[0]) * (f[c] - lambda);
        out.push((w[1], acc));
    }
    out
}

/// Exact one-dimensional decomposition of `[a, b]`.
///
/// The selected intervals are the components of the shadow set
/// `{x : F(y) > F(x) for some y > x}`; on an interior component both ends
/// have the same `F`, so the average is `λ`. A component starting at `a`
/// may end higher than `F(a)`; it is then extended to the first point `e`
/// where `F` returns to `F(a)` (which exists because `F(b) <= F(a)`), and
/// `[e, b]`, again averaging at most `λ`, is decomposed afresh.
pub fn rising_sun_1d(f: &[f64], mu: &GridMeasure, interval: &Rect, lambda: f64) -> Result<RisingSunDecomposition> {
    if mu.grid().dim() != 1 {
        return Err(invalid("rising_sun_1d needs a one-dimensional grid"));
    }
    precheck(f, mu, interval, lambda)?;
    let (a, b) = (interval.lo[0], interval.hi[0]);
    let mut comps = Vec::new();
    let mut start = a;
    while start < b {
        match components(f, mu, start, b, lambda, &mut comps) {
            Some(next) => start = next,
            None => break,
        }
    }
    let rects: Vec<Rect> = comps.into_iter().map(|(l, r)| Rect::interval(l.max(a), r.min(b))).collect();
    Ok(finish(f, mu, interval, lambda, rects))
}

/// Appends the shadow components of `[a, b]`. When the first one needs the
/// left-end extension, appends the extended interval `[a, e]` only and
/// returns `Some(e)` so the caller continues on `[e, b]`.
fn components(f: &[f64], mu: &GridMeasure, a: f64, b: f64, lambda: f64, out: &mut Vec<(f64, f64)>) -> Option<f64> {
    let nodes = primitive(f, mu, a, b, lambda);
    let scale = nodes.iter().map(|n| n.1.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let eps = 1e-13 * scale;

    // Right to left with the running maximum `g` of F over [t1, b]. On a
    // segment where F rises, every point sees a higher value to its right;
    // where F does not rise, exactly the points with F below `g` do, and
    // they form a final piece of the segment. Either way the shadow part of
    // a segment ends at its right end.
    let mut pieces: Vec<(f64, f64)> = Vec::new();
    let mut g = nodes[nodes.len() - 1].1;
    for k in (0..nodes.len() - 1).rev() {
        let (t0, f0) = nodes[k];
        let (t1, f1) = nodes[k + 1];
        let start = if f1 > f0 + eps || f0 < g - eps {
            Some(t0)
        } else if f1 < g - eps {
            Some((t0 + (f0 - g) / (f0 - f1) * (t1 - t0)).clamp(t0, t1))
        } else {
            None
        };
        if let Some(x) = start {
            match pieces.last_mut() {
                Some(last) if last.0 <= t1 => last.0 = x,
                _ => pieces.push((x, t1)),
            }
        }
        g = g.max(f0);
    }
    pieces.reverse();
    pieces.retain(|(l, r)| r > l);

    let Some(&(l, r)) = pieces.first() else { return None };
    let fr = eval(&nodes, r);
    if l > a || fr <= eps {
        out.extend(pieces);
        return None;
    }
    // F(a) = 0 < F(r): walk right from r to the first return to 0.
    let mut end = b;
    for w in nodes.windows(2) {
        let ((t0, f0), (t1, f1)) = (w[0], w[1]);
        if t1 <= r {
            continue;
        }
        let (s0, v0) = if t0 < r { (r, fr) } else { (t0, f0) };
        if f1 <= eps {
            end = if (v0 - f1).abs() <= eps { s0 } else { (s0 + v0 / (v0 - f1) * (t1 - s0)).clamp(s0, t1) };
            break;
        }
    }
    out.push((a, end));
    (end < b).then_some(end)
}

fn eval(nodes: &[(f64, f64)], x: f64) -> f64 {
    for w in nodes.windows(2) {
        let ((t0, f0), (t1, f1)) = (w[0], w[1]);
        if x <= t1 {
            return if t1 > t0 { f0 + (f1 - f0) * (x - t0) / (t1 - t0) } else { f1 };
        }
    }
    nodes[nodes.len() - 1].1
}

struct Nd<'a> {
    f: &'a [f64],
    mu: &'a GridMeasure,
    lambda: f64,
    ft: crate::measure::CumTable,
    out: Vec<Rect>,
}

impl Nd<'_> {
    fn mass(&self, r: &Rect) -> f64 {
        self.mu.table().query(r)
    }

    /// `∫_r (f - λ) dμ`.
    fn excess(&self, r: &Rect) -> f64 {
        self.ft.query(r) - self.lambda * self.mass(r)
    }

    fn max_on(&self, r: &Rect) -> f64 {
        let mut top = f64::NEG_INFINITY;
        for_each_fragment(self.mu.grid(), r, |cell, frac| {
            if frac > 0.0 && self.mu.masses()[cell] > 0.0 {
                top = top.max(self.f[cell]);
            }
        });
        top
    }

    /// Leftmost `t` in `[from, to]` with `∫_{s with axis-coordinate in
    /// [lo, t]} (f - λ) = 0`, where the excess is positive at `from` and not
    /// positive at `to`. `upward` grows the upper face; otherwise the lower
    /// face moves down from `from` toward `to`.
    fn cut(&self, s: &Rect, axis: usize, from: f64, to: f64, upward: bool) -> f64 {
        let piece = |t: f64| {
            let mut q = s.clone();
            if upward {
                q.hi[axis] = t;
            } else {
                q.lo[axis] = t;
            }
            self.excess(&q)
        };
        let (lo, hi) = if upward { (from, to) } else { (to, from) };
        let mut ts: Vec<f64> = self.mu.grid().axis(axis).iter().copied().filter(|t| *t > lo && *t < hi).collect();
        if !upward {
            ts.reverse();
        }
        ts.push(to);
        let mut prev = (from, piece(from));
        for t in ts {
            let v = piece(t);
            if v <= 0.0 {
                // Excess is affine in t between breakpoints.
                return prev.0 + prev.1 / (prev.1 - v) * (t - prev.0);
            }
            prev = (t, v);
        }
        to
    }

    fn run(&mut self, s: Rect, axis: usize, depth: usize) -> Result<()> {
        if self.mass(&s) <= 0.0 || self.max_on(&s) <= self.lambda * (1.0 + TOL) {
            return Ok(());
        }
        if depth >= MAX_DEPTH {
            return Err(Error::Convergence(format!(
                "rising-sun recursion exceeded {MAX_DEPTH} levels at box {s}"
            )));
        }
        let n = s.dim();
        let total = self.mass(&s);
        // First axis from `axis` on that has a breakpoint strictly inside
        // the box; cut at the breakpoint nearest the mass median.
        let Some((axis, t)) = (0..n).map(|k| (axis + k) % n).find_map(|a| {
            let inner: Vec<f64> = self.mu.grid().axis(a).iter().copied().filter(|b| *b > s.lo[a] && *b < s.hi[a]).collect();
            if inner.is_empty() {
                return None;
            }
            let median = crate::maximal::mass_cut(self.mu, &s, a, 0.5 * total);
            let t = inner.into_iter().min_by(|x, y| (x - median).abs().total_cmp(&(y - median).abs()))?;
            Some((a, t))
        }) else {
            // Inside a single cell the function is constant and the
            // average is at most λ, so nothing exceeds the level.
            return Ok(());
        };
        let (mut lower, mut upper) = (s.clone(), s.clone());
        lower.hi[axis] = t;
        upper.lo[axis] = t;
        let next = (axis + 1) % n;
        let tol = TOL * self.lambda * total;
        // A remainder this light is rounding residue of the cut; it goes
        // into the emitted box, moving its average by a negligible amount.
        let sliver = 1e-12 * total;
        if self.excess(&lower) > tol {
            let mut e = self.cut(&s, axis, t, s.hi[axis], true);
            let mut probe = s.clone();
            probe.lo[axis] = e;
            if self.mass(&probe) <= sliver {
                e = s.hi[axis];
            }
            let mut emit = s.clone();
            emit.hi[axis] = e;
            let mut rest = s;
            rest.lo[axis] = e;
            self.out.push(emit);
            self.run(rest, next, depth + 1)
        } else if self.excess(&upper) > tol {
            let mut e = self.cut(&s, axis, t, s.lo[axis], false);
            let mut probe = s.clone();
            probe.hi[axis] = e;
            if self.mass(&probe) <= sliver {
                e = s.lo[axis];
            }
            let mut emit = s.clone();
            emit.lo[axis] = e;
            let mut rest = s;
            rest.hi[axis] = e;
            self.out.push(emit);
            self.run(rest, next, depth + 1)
        } else {
            self.run(lower, next, depth + 1)?;
            self.run(upper, next, depth + 1)
        }
    }
}

/// Halving-and-adjust decomposition in any dimension.
///
/// A box whose cells all sit at or below `λ` is left alone. Otherwise it is
/// cut along the cycling axis at the interior grid breakpoint nearest its
/// mass median; a half with average above `λ` is grown back across the cut
/// until its average is exactly `λ`, which happens before it reaches the
/// whole box because the box averages at most `λ`, and the rest (average at
/// most `λ`) is processed recursively.
///
/// Cutting at breakpoints rather than at the median itself guarantees
/// termination: every recursive box has fewer interior breakpoints than its
/// parent, and a box without any lies in one cell. Pure median cuts can
/// recurse forever toward a grid corner, where the configuration is
/// self-similar under median cuts.
pub fn rising_sun_nd(f: &[f64], mu: &GridMeasure, root: &Rect, lambda: f64) -> Result<RisingSunDecomposition> {
    precheck(f, mu, root, lambda)?;
    let mut nd = Nd { f, mu, lambda, ft: mu.weighted_table(f), out: Vec::new() };
    let avg = mu.weighted_table(f).query(root) / mu.table().query(root);
    if (avg - lambda).abs() <= TOL * lambda && nd.max_on(root) > lambda * (1.0 + TOL) {
        // The root itself averages λ: it is the selection.
        return Ok(finish(f, mu, root, lambda, vec![root.clone()]));
    }
    nd.run(root.clone(), 0, 0)?;
    let rects = std::mem::take(&mut nd.out);
    Ok(finish(f, mu, root, lambda, rects))
}

/// A node of a dyadic grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadicNode {
    pub level: usize,
    pub index: usize,
    pub rect: Rect,
    pub average: f64,
}

/// Maximal dyadic nodes with average above `λ`, top down.
pub fn dyadic_level_selection(f: &[f64], mu: &GridMeasure, grid: &DyadicGrid, lambda: f64) -> Result<Vec<DyadicNode>> {
    check_function(mu, f)?;
    if !(lambda > 0.0) {
        return Err(Error::Precondition(format!("level must be positive, got {lambda}")));
    }
    let ft = mu.weighted_table(f);
    let kids = 1usize << grid.dim();
    let mut out = Vec::new();
    let mut stack = vec![(0usize, 0usize)];
    while let Some((level, index)) = stack.pop() {
        let rect = &grid.levels[level][index];
        let m = mu.table().query(rect);
        if m > 0.0 {
            let average = ft.query(rect) / m;
            if average > lambda {
                out.push(DyadicNode { level, index, rect: rect.clone(), average });
                continue;
            }
        }
        if level < grid.depth {
            for c in (0..kids).rev() {
                stack.push((level + 1, index * kids + c));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::AxisGrid;
    use crate::maximal::build_dyadic;
    use std::sync::Arc;

    fn w0() -> (GridMeasure, Vec<f64>) {
        let g = Arc::new(AxisGrid::uniform(&[0.0], &[1.0], &[4]).unwrap());
        (GridMeasure::lebesgue(g), vec![1.0, 1.0, 1.0, 2.0])
    }

    #[test]
    fn w0_level_one_and_a_half() {
        let (mu, f) = w0();
        for d in [
            rising_sun_1d(&f, &mu, &Rect::interval(0.0, 1.0), 1.5).unwrap(),
            rising_sun_nd(&f, &mu, &Rect::interval(0.0, 1.0), 1.5).unwrap(),
        ] {
            assert_eq!(d.rects.len(), 1, "{d:?}");
            assert!((d.rects[0].lo[0] - 0.5).abs() < 1e-9 && (d.rects[0].hi[0] - 1.0).abs() < 1e-9);
            assert!((d.averages[0] - 1.5).abs() < 1e-10);
            assert_eq!(d.residual_max, 1.0);
            assert!((d.selected_mass(&mu) - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn w0_level_equal_to_average_selects_everything() {
        let (mu, f) = w0();
        let d = rising_sun_1d(&f, &mu, &Rect::interval(0.0, 1.0), 1.25).unwrap();
        assert_eq!(d.rects, vec![Rect::interval(0.0, 1.0)]);
        assert_eq!(d.residual_max, 0.0);
    }

    #[test]
    fn left_end_component_is_extended() {
        let g = Arc::new(AxisGrid::uniform(&[0.0], &[1.0], &[2]).unwrap());
        let mu = GridMeasure::lebesgue(g);
        let d = rising_sun_1d(&[2.0, 0.0], &mu, &Rect::interval(0.0, 1.0), 1.5).unwrap();
        assert_eq!(d.rects.len(), 1);
        assert!((d.rects[0].hi[0] - 2.0 / 3.0).abs() < 1e-12, "{d:?}");
        assert!((d.averages[0] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn below_level_selects_nothing() {
        let (mu, _) = w0();
        let d = rising_sun_nd(&[0.7; 4], &mu, &Rect::interval(0.0, 1.0), 1.0).unwrap();
        assert!(d.rects.is_empty());
        assert_eq!(d.residual_max, 0.7);
        assert!(rising_sun_1d(&[3.0; 4], &mu, &Rect::interval(0.0, 1.0), 1.0).is_err());
    }

    #[test]
    fn square_with_hot_corner() {
        let g = Arc::new(AxisGrid::uniform(&[0.0, 0.0], &[1.0, 1.0], &[2, 2]).unwrap());
        let mu = GridMeasure::lebesgue(g);
        let f = [1.0, 1.0, 1.0, 3.0];
        let root = Rect::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let d = rising_sun_nd(&f, &mu, &root, 2.0).unwrap();
        for a in &d.averages {
            assert!((a - 2.0).abs() <= 1e-10 * 2.0);
        }
        assert!(d.residual_max <= 2.0);
        for (i, r) in d.rects.iter().enumerate() {
            for q in &d.rects[i + 1..] {
                assert!(r.intersection(q).map_or(0.0, |x| mu.table().query(&x)) == 0.0);
            }
        }
    }

    #[test]
    fn dyadic_selections() {
        let (mu, f) = w0();
        let dg = build_dyadic(&mu, &Rect::interval(0.0, 1.0), 2).unwrap();
        let s = dyadic_level_selection(&f, &mu, &dg, 1.4).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].rect, Rect::interval(0.5, 1.0));
        let s = dyadic_level_selection(&f, &mu, &dg, 1.9).unwrap();
        assert_eq!(s[0].rect, Rect::interval(0.75, 1.0));
        assert!(dyadic_level_selection(&f, &mu, &dg, 2.0).unwrap().is_empty());
    }
}
