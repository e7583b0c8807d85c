//! Dyadic grids of a box and the dyadic maximal function.
//!
//! The μ-dyadic rule splits a box into `2^n` children of equal mass by
//! sequential conditional medians: the box is halved in mass along axis 0,
//! each half along axis 1, and so on. The geometric rule halves every side.

use crate::error::{invalid, Error, Result};
use crate::grid::Rect;
use crate::measure::{for_each_fragment, GridMeasure, Weight};

use super::check_function;

/// Nodes of a dyadic tree stored level by level. The children of node `i`
/// at level `k` are nodes `i * 2^n .. (i + 1) * 2^n` at level `k + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadicGrid {
    pub depth: usize,
    pub levels: Vec<Vec<Rect>>,
}

impl DyadicGrid {
    pub fn root(&self) -> &Rect {
        &self.levels[0][0]
    }

    pub fn dim(&self) -> usize {
        self.root().dim()
    }

    pub fn leaves(&self) -> &[Rect] {
        &self.levels[self.depth]
    }

    /// Index at `level` of the ancestor of leaf `leaf`.
    pub fn ancestor(&self, leaf: usize, level: usize) -> usize {
        leaf >> (self.dim() * (self.depth - level))
    }
}

/// Leftmost `t` with `mu(r ∩ {x_axis <= t}) = target`; the mass is piecewise
/// linear in `t` with kinks at the breakpoints.
pub(crate) fn mass_cut(mu: &GridMeasure, r: &Rect, axis: usize, target: f64) -> f64 {
    let mut ts = vec![r.lo[axis]];
    ts.extend(mu.grid().axis(axis).iter().copied().filter(|b| *b > r.lo[axis] && *b < r.hi[axis]));
    ts.push(r.hi[axis]);
    let below = |t: f64| {
        let mut q = r.clone();
        q.hi[axis] = t;
        mu.table().query(&q)
    };
    let mut prev = (ts[0], 0.0);
    for &t in &ts[1..] {
        let m = below(t);
        if m >= target {
            return prev.0 + (target - prev.1) / (m - prev.1) * (t - prev.0);
        }
        prev = (t, m);
    }
    r.hi[axis]
}

fn split_in_mass(mu: &GridMeasure, r: &Rect, axis: usize, out: &mut Vec<Rect>) {
    if axis == r.dim() {
        out.push(r.clone());
        return;
    }
    let total = mu.table().query(r);
    let t = mass_cut(mu, r, axis, 0.5 * total);
    let (mut left, mut right) = (r.clone(), r.clone());
    left.hi[axis] = t;
    right.lo[axis] = t;
    split_in_mass(mu, &left, axis + 1, out);
    split_in_mass(mu, &right, axis + 1, out);
}

fn split_in_half(r: &Rect, axis: usize, out: &mut Vec<Rect>) {
    if axis == r.dim() {
        out.push(r.clone());
        return;
    }
    let t = 0.5 * (r.lo[axis] + r.hi[axis]);
    let (mut left, mut right) = (r.clone(), r.clone());
    left.hi[axis] = t;
    right.lo[axis] = t;
    split_in_half(&left, axis + 1, out);
    split_in_half(&right, axis + 1, out);
}

fn build(root: &Rect, depth: usize, mut split: impl FnMut(&Rect, &mut Vec<Rect>)) -> DyadicGrid {
    let mut levels = vec![vec![root.clone()]];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(levels.last().map_or(0, Vec::len) << root.dim());
        for r in levels.last().expect("root level") {
            split(r, &mut next);
        }
        levels.push(next);
    }
    DyadicGrid { depth, levels }
}

fn check_depth(root: &Rect, depth: usize) -> Result<()> {
    if root.dim() * depth > 24 {
        return Err(invalid(format!("dyadic depth {depth} gives too many leaves")));
    }
    Ok(())
}

/// μ-dyadic grid of `root` to the given depth.
pub fn build_dyadic(mu: &GridMeasure, root: &Rect, depth: usize) -> Result<DyadicGrid> {
    check_depth(root, depth)?;
    if mu.mass(root)? <= 0.0 {
        return Err(Error::Degenerate("dyadic root has zero mass".into()));
    }
    Ok(build(root, depth, |r, out| split_in_mass(mu, r, 0, out)))
}

/// Geometric dyadic grid of `root` (successive halving of every side).
pub fn build_geometric_dyadic(root: &Rect, depth: usize) -> Result<DyadicGrid> {
    check_depth(root, depth)?;
    Ok(build(root, depth, |r, out| split_in_half(r, 0, out)))
}

/// Dyadic maximal function, exact at leaf resolution.
#[derive(Debug, Clone)]
pub struct DyadicField {
    /// Average of `f` over every node, level by level (`None` for
    /// zero-mass nodes).
    pub averages: Vec<Vec<Option<f64>>>,
    /// Per leaf, the largest average along its ancestor chain.
    pub values: Vec<f64>,
}

/// Largest average of `f` over the dyadic ancestors of each leaf.
pub fn dyadic_maximal(f: &[f64], mu: &GridMeasure, grid: &DyadicGrid) -> Result<DyadicField> {
    check_function(mu, f)?;
    let ft = mu.weighted_table(f);
    let averages: Vec<Vec<Option<f64>>> = grid
        .levels
        .iter()
        .map(|lvl| {
            lvl.iter()
                .map(|r| {
                    let m = mu.table().query(r);
                    (m > 0.0).then(|| ft.query(r) / m)
                })
                .collect()
        })
        .collect();
    let values = (0..grid.leaves().len())
        .map(|leaf| {
            (0..=grid.depth)
                .filter_map(|k| averages[k][grid.ancestor(leaf, k)])
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(DyadicField { averages, values })
}

/// Outcome of the majorization check `w <= C M^D w`.
#[derive(Debug, Clone, PartialEq)]
pub struct Majorization {
    /// Largest ratio of `w` to its dyadic maximal function over the leaves.
    pub constant: f64,
    pub worst_leaf: Rect,
    pub per_leaf: Vec<f64>,
}

/// `max over leaves of (max of w on the leaf) / M^D w(leaf)` on the
/// μ-dyadic grid of `root`.
pub fn majorization_check(w: &Weight, mu: &GridMeasure, root: &Rect, depth: usize) -> Result<Majorization> {
    if depth == 0 {
        return Err(invalid("majorization check needs depth >= 1"));
    }
    if !mu.grid().same_as(w.grid()) {
        return Err(Error::GridMismatch);
    }
    let dg = build_dyadic(mu, root, depth)?;
    let field = dyadic_maximal(w.values(), mu, &dg)?;
    let per_leaf: Vec<f64> = dg
        .leaves()
        .iter()
        .zip(&field.values)
        .map(|(leaf, m)| {
            let mut top = 0.0f64;
            for_each_fragment(mu.grid(), leaf, |cell, frac| {
                if frac > 0.0 {
                    top = top.max(w.value(cell));
                }
            });
            top / m
        })
        .collect();
    let (i, c) = per_leaf
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if *v > acc.1 { (i, *v) } else { acc });
    Ok(Majorization { constant: c, worst_leaf: dg.leaves()[i].clone(), per_leaf })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::AxisGrid;
    use std::sync::Arc;

    fn unit(masses: Vec<f64>) -> GridMeasure {
        let n = masses.len();
        GridMeasure::new(Arc::new(AxisGrid::uniform(&[0.0], &[1.0], &[n]).unwrap()), masses).unwrap()
    }

    #[test]
    fn lebesgue_halves() {
        let mu = GridMeasure::lebesgue(Arc::new(AxisGrid::uniform(&[0.0], &[1.0], &[3]).unwrap()));
        let g = build_dyadic(&mu, &Rect::interval(0.0, 1.0), 1).unwrap();
        assert_eq!(g.leaves(), &[Rect::interval(0.0, 0.5), Rect::interval(0.5, 1.0)]);
    }

    #[test]
    fn step_density_cut() {
        let mu = unit(vec![0.5, 1.5]);
        let g = build_dyadic(&mu, &Rect::interval(0.0, 1.0), 1).unwrap();
        assert!((g.leaves()[0].hi[0] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn product_step_density_corner() {
        let g = Arc::new(AxisGrid::uniform(&[0.0, 0.0], &[1.0, 1.0], &[2, 2]).unwrap());
        let mu = GridMeasure::from_densities(g, &[1.0, 3.0, 3.0, 9.0]).unwrap();
        let dg = build_dyadic(&mu, &Rect::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap(), 1).unwrap();
        let total = mu.total();
        for leaf in dg.leaves() {
            assert!((mu.mass(leaf).unwrap() - total / 4.0).abs() < 1e-12 * total);
            for a in 0..2 {
                assert!(
                    (leaf.lo[a] - 2.0 / 3.0).abs() < 1e-12 || (leaf.hi[a] - 2.0 / 3.0).abs() < 1e-12
                );
            }
        }
    }

    #[test]
    fn w0_dyadic_maximal_and_majorization() {
        let mu = unit(vec![0.25; 4]);
        let w = Weight::new(mu.grid().clone(), vec![1.0, 1.0, 1.0, 2.0]).unwrap();
        let root = Rect::interval(0.0, 1.0);
        let dg = build_dyadic(&mu, &root, 2).unwrap();
        let fld = dyadic_maximal(w.values(), &mu, &dg).unwrap();
        assert!((fld.values[3] - 2.0).abs() < 1e-15);
        assert!((fld.values[0] - 1.25).abs() < 1e-15);
        assert_eq!(majorization_check(&w, &mu, &root, 2).unwrap().constant, 1.0);
        let m1 = majorization_check(&w, &mu, &root, 1).unwrap();
        assert!((m1.constant - 4.0 / 3.0).abs() < 1e-12);
        assert_eq!(m1.worst_leaf, Rect::interval(0.5, 1.0));
    }

    #[test]
    fn zero_mass_root_rejected() {
        let mu = unit(vec![0.0, 1.0]);
        assert!(build_dyadic(&mu, &Rect::interval(0.0, 0.5), 1).is_err());
    }
}
