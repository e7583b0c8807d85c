//! Piecewise-uniform measures, piecewise-constant weights and exact box
//! queries.

use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::grid::{AxisGrid, GridRect, Rect};

/// Cumulative table of a per-cell total (e.g. cell mass, or weight times
/// cell mass) spread uniformly over each cell. The cumulative function is
/// multilinear inside every cell, so box totals are exact.
#[derive(Debug, Clone)]
pub struct CumTable {
    grid: Arc<AxisGrid>,
    /// Cumulative totals on the breakpoint lattice, row-major.
    cum: Vec<f64>,
    strides: Vec<usize>,
}

impl CumTable {
    pub fn new(grid: Arc<AxisGrid>, totals: &[f64]) -> Self {
        assert_eq!(totals.len(), grid.cell_count());
        let n = grid.dim();
        let shape: Vec<usize> = (0..n).map(|a| grid.cells_on_axis(a) + 1).collect();
        let strides = crate::grid::strides_for(&shape);
        let size: usize = shape.iter().product();
        let mut cum = vec![0.0; size];
        // Scatter cell totals to the lattice at (idx + 1), then prefix-sum per axis.
        for (flat, &v) in totals.iter().enumerate() {
            let idx = grid.multi_index(flat);
            let pos: usize = idx.iter().zip(&strides).map(|(i, s)| (i + 1) * s).sum();
            cum[pos] = v;
        }
        for axis in 0..n {
            let s = strides[axis];
            for pos in 0..size {
                let coord = (pos / s) % shape[axis];
                if coord > 0 {
                    cum[pos] += cum[pos - s];
                }
            }
        }
        Self { grid, cum, strides }
    }

    pub fn grid(&self) -> &Arc<AxisGrid> {
        &self.grid
    }

    pub fn total(&self) -> f64 {
        self.cum[self.cum.len() - 1]
    }

    fn locate(&self, axis: usize, x: f64) -> (usize, f64) {
        let k = self.grid.locate(axis, x);
        let bps = self.grid.axis(axis);
        let t = ((x - bps[k]) / (bps[k + 1] - bps[k])).clamp(0.0, 1.0);
        (k, t)
    }

    /// Cumulative total of `(-inf, x_1] x ... x (-inf, x_n]`.
    fn cumulative(&self, loc: &[(usize, f64)]) -> f64 {
        let n = loc.len();
        let mut acc = 0.0;
        for bits in 0..(1usize << n) {
            let mut weight = 1.0;
            let mut pos = 0;
            for (a, &(k, t)) in loc.iter().enumerate() {
                if bits >> a & 1 == 1 {
                    weight *= t;
                    pos += (k + 1) * self.strides[a];
                } else {
                    weight *= 1.0 - t;
                    pos += k * self.strides[a];
                }
            }
            if weight != 0.0 {
                acc += weight * self.cum[pos];
            }
        }
        acc
    }

    /// Exact total over a box inside the domain.
    pub fn query(&self, r: &Rect) -> f64 {
        let n = r.dim();
        let lo: Vec<(usize, f64)> = (0..n).map(|a| self.locate(a, r.lo[a])).collect();
        let hi: Vec<(usize, f64)> = (0..n).map(|a| self.locate(a, r.hi[a])).collect();
        let mut corner = lo.clone();
        let mut acc = 0.0;
        for bits in 0..(1usize << n) {
            let mut sign = 1.0;
            for a in 0..n {
                if bits >> a & 1 == 1 {
                    corner[a] = hi[a];
                } else {
                    corner[a] = lo[a];
                    sign = -sign;
                }
            }
            acc += sign * self.cumulative(&corner);
        }
        acc
    }

    /// Total over a grid-aligned box, from 2^n table lookups.
    pub fn query_grid(&self, g: &GridRect) -> f64 {
        let n = g.ranges.len();
        let mut acc = 0.0;
        for bits in 0..(1usize << n) {
            let mut sign = 1.0;
            let mut pos = 0;
            for (a, &(s, t)) in g.ranges.iter().enumerate() {
                if bits >> a & 1 == 1 {
                    pos += (t + 1) * self.strides[a];
                } else {
                    pos += s * self.strides[a];
                    sign = -sign;
                }
            }
            acc += sign * self.cum[pos];
        }
        acc
    }
}

/// Covered fraction of each cell met by `r`, per axis: `(cell, fraction)`.
pub fn coverage(grid: &AxisGrid, r: &Rect) -> Vec<Vec<(usize, f64)>> {
    (0..grid.dim())
        .map(|a| {
            let bps = grid.axis(a);
            let (s, t) = (grid.locate(a, r.lo[a]), grid.locate(a, r.hi[a]));
            (s..=t)
                .filter_map(|k| {
                    let lo = r.lo[a].max(bps[k]);
                    let hi = r.hi[a].min(bps[k + 1]);
                    (hi > lo).then(|| (k, (hi - lo) / (bps[k + 1] - bps[k])))
                })
                .collect()
        })
        .collect()
}

/// Calls `visit(flat_cell, covered_fraction)` for every cell met by `r` with
/// positive volume.
pub fn for_each_fragment(grid: &AxisGrid, r: &Rect, mut visit: impl FnMut(usize, f64)) {
    let cov = coverage(grid, r);
    if cov.iter().any(Vec::is_empty) {
        return;
    }
    let n = cov.len();
    let mut pick = vec![0usize; n];
    loop {
        let mut flat = 0;
        let mut frac = 1.0;
        for a in 0..n {
            let (k, f) = cov[a][pick[a]];
            flat += k * grid.stride(a);
            frac *= f;
        }
        visit(flat, frac);
        let mut a = n;
        loop {
            if a == 0 {
                return;
            }
            a -= 1;
            pick[a] += 1;
            if pick[a] < cov[a].len() {
                break;
            }
            pick[a] = 0;
        }
    }
}

/// Non-atomic measure: nonnegative mass per cell, uniform density within
/// each cell.
#[derive(Debug, Clone)]
pub struct GridMeasure {
    masses: Vec<f64>,
    table: CumTable,
}

impl GridMeasure {
    pub fn new(grid: Arc<AxisGrid>, masses: Vec<f64>) -> Result<Self> {
        if masses.len() != grid.cell_count() {
            return Err(invalid(format!(
                "expected {} cell masses, got {}",
                grid.cell_count(),
                masses.len()
            )));
        }
        if let Some(i) = masses.iter().position(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(invalid(format!("mass of cell {i} must be finite and >= 0")));
        }
        if masses.iter().sum::<f64>() <= 0.0 {
            return Err(invalid("total mass must be positive"));
        }
        let table = CumTable::new(grid, &masses);
        Ok(Self { masses, table })
    }

    /// Lebesgue measure restricted to the grid's domain.
    pub fn lebesgue(grid: Arc<AxisGrid>) -> Self {
        let masses = (0..grid.cell_count()).map(|c| grid.cell_volume(c)).collect();
        Self::new(grid, masses).expect("cell volumes are positive")
    }

    /// Measure with the given per-cell densities.
    pub fn from_densities(grid: Arc<AxisGrid>, densities: &[f64]) -> Result<Self> {
        if densities.len() != grid.cell_count() {
            return Err(invalid("density count does not match the grid"));
        }
        let masses = densities
            .iter()
            .enumerate()
            .map(|(c, d)| d * grid.cell_volume(c))
            .collect();
        Self::new(grid, masses)
    }

    pub fn grid(&self) -> &Arc<AxisGrid> {
        self.table.grid()
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn table(&self) -> &CumTable {
        &self.table
    }

    pub fn total(&self) -> f64 {
        self.table.total()
    }

    pub fn density(&self, cell: usize) -> f64 {
        self.masses[cell] / self.grid().cell_volume(cell)
    }

    /// Table of `f * mu` per cell for a piecewise-constant `f` on this grid.
    pub fn weighted_table(&self, values: &[f64]) -> CumTable {
        let totals: Vec<f64> = self.masses.iter().zip(values).map(|(m, v)| m * v).collect();
        CumTable::new(self.grid().clone(), &totals)
    }

    /// `mu(R)`.
    pub fn mass(&self, r: &Rect) -> Result<f64> {
        self.grid().check_rect(r)?;
        Ok(self.table.query(r).max(0.0))
    }

    pub(crate) fn check_same_grid(&self, w: &Weight) -> Result<()> {
        if self.grid().same_as(w.grid()) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// Strictly positive piecewise-constant function on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Weight {
    grid: Arc<AxisGrid>,
    values: Vec<f64>,
}

impl Weight {
    pub fn new(grid: Arc<AxisGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cell_count() {
            return Err(invalid(format!(
                "expected {} weight values, got {}",
                grid.cell_count(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(invalid(format!("weight value of cell {i} must be finite and > 0")));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Arc<AxisGrid>, c: f64) -> Result<Self> {
        let n = grid.cell_count();
        Self::new(grid, vec![c; n])
    }

    pub fn grid(&self) -> &Arc<AxisGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, cell: usize) -> f64 {
        self.values[cell]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::MIN, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::MAX, f64::min)
    }

    /// Cellwise power `w^e`.
    pub fn powf(&self, e: f64) -> Result<Weight> {
        Weight::new(self.grid.clone(), self.values.iter().map(|v| v.powf(e)).collect())
    }

    /// Dual weight `w^(1-p')`, `p' = p/(p-1)`.
    pub fn dual(&self, p: f64) -> Result<Weight> {
        dual_weight(self, p)
    }
}

pub fn conjugate_exponent(p: f64) -> f64 {
    p / (p - 1.0)
}

/// `∫_R w dμ`.
pub fn integral(w: &Weight, mu: &GridMeasure, r: &Rect) -> Result<f64> {
    mu.check_same_grid(w)?;
    mu.grid().check_rect(r)?;
    Ok(mu.weighted_table(w.values()).query(r))
}

/// `⨍_R w dμ`.
pub fn average(w: &Weight, mu: &GridMeasure, r: &Rect) -> Result<f64> {
    let m = mu.mass(r)?;
    if m <= 0.0 {
        return Err(Error::Degenerate(format!("rectangle {r} has zero mass")));
    }
    Ok(integral(w, mu, r)? / m)
}

/// Which measure a level-set query reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevelMeasure {
    /// `μ({x ∈ R : w(x) > λ})`
    Mu,
    /// `w({x ∈ R : w(x) > λ}) = ∫_{...} w dμ`
    Weighted,
}

/// Mass of the level set `{x ∈ R : w(x) > λ}` (or `>=` when `strict` is
/// false).
pub fn level_mass(
    w: &Weight,
    mu: &GridMeasure,
    r: &Rect,
    lambda: f64,
    strict: bool,
    kind: LevelMeasure,
) -> Result<f64> {
    mu.check_same_grid(w)?;
    mu.grid().check_rect(r)?;
    let mut acc = 0.0;
    for_each_fragment(mu.grid(), r, |cell, frac| {
        let v = w.value(cell);
        let inside = if strict { v > lambda } else { v >= lambda };
        if inside {
            let m = mu.masses()[cell] * frac;
            acc += match kind {
                LevelMeasure::Mu => m,
                LevelMeasure::Weighted => m * v,
            };
        }
    });
    Ok(acc)
}

/// `σ = w^(1-p')`.
pub fn dual_weight(w: &Weight, p: f64) -> Result<Weight> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(invalid(format!("dual weight needs p > 1, got {p}")));
    }
    w.powf(1.0 - conjugate_exponent(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit(cells: usize) -> Arc<AxisGrid> {
        Arc::new(AxisGrid::uniform(&[0.0], &[1.0], &[cells]).unwrap())
    }

    fn w0() -> (GridMeasure, Weight) {
        let g = unit(4);
        (GridMeasure::lebesgue(g.clone()), Weight::new(g, vec![1.0, 1.0, 1.0, 2.0]).unwrap())
    }

    #[test]
    fn mass_examples() {
        let mu = GridMeasure::lebesgue(unit(4));
        assert_relative_eq!(mu.mass(&Rect::interval(0.0, 1.0)).unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(mu.mass(&Rect::interval(0.0, 0.125)).unwrap(), 0.125, epsilon = 1e-15);
        let mu2 = GridMeasure::new(unit(2), vec![0.5 * 0.5, 1.5 * 0.5]).unwrap();
        // densities 0.5 and 1.5 on the two halves
        let m = mu2.mass(&Rect::interval(0.25, 0.75)).unwrap();
        assert_relative_eq!(m, 0.5 * 0.25 + 1.5 * 0.25, epsilon = 1e-15);
        let mu3 = GridMeasure::from_densities(unit(2), &[0.5, 1.5]).unwrap();
        assert_relative_eq!(mu3.mass(&Rect::interval(0.25, 0.75)).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn cell_masses_of_one_point_five() {
        // Cell masses (0.5, 1.5): R = [0.25, 0.75] takes half of each.
        let mu = GridMeasure::new(unit(2), vec![0.5, 1.5]).unwrap();
        assert_relative_eq!(mu.mass(&Rect::interval(0.25, 0.75)).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn outside_domain_is_rejected() {
        let mu = GridMeasure::lebesgue(unit(4));
        assert!(matches!(mu.mass(&Rect::interval(-0.1, 0.5)), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn zero_width_has_zero_mass() {
        let g = Arc::new(AxisGrid::uniform(&[0.0, 0.0], &[1.0, 1.0], &[3, 3]).unwrap());
        let mu = GridMeasure::from_densities(g, &[1., 2., 3., 4., 5., 6., 7., 8., 9.]).unwrap();
        let r = Rect::new(vec![0.4, 0.1], vec![0.4, 0.9]).unwrap();
        assert_eq!(mu.mass(&r).unwrap(), 0.0);
    }

    #[test]
    fn integral_and_average_examples() {
        let (mu, w) = w0();
        let all = Rect::interval(0.0, 1.0);
        assert_relative_eq!(integral(&w, &mu, &all).unwrap(), 1.25, epsilon = 1e-15);
        assert_relative_eq!(
            integral(&w, &mu, &Rect::interval(0.5, 1.0)).unwrap(),
            0.75,
            epsilon = 1e-15
        );
        assert_relative_eq!(average(&w, &mu, &all).unwrap(), 1.25, epsilon = 1e-15);
        let lm = level_mass(&w, &mu, &all, 1.5, true, LevelMeasure::Mu).unwrap();
        assert_relative_eq!(lm, 0.25, epsilon = 1e-15);
        let lw = level_mass(&w, &mu, &all, 1.5, true, LevelMeasure::Weighted).unwrap();
        assert_relative_eq!(lw, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn constant_weight_average() {
        let g = unit(5);
        let mu = GridMeasure::from_densities(g.clone(), &[1., 3., 0.2, 5., 2.]).unwrap();
        let w = Weight::constant(g, 3.5).unwrap();
        let a = average(&w, &mu, &Rect::interval(0.13, 0.77)).unwrap();
        assert_relative_eq!(a, 3.5, max_relative = 1e-14);
        let one = Weight::constant(mu.grid().clone(), 1.0).unwrap();
        let r = Rect::interval(0.31, 0.9);
        assert_relative_eq!(
            integral(&one, &mu, &r).unwrap(),
            mu.mass(&r).unwrap(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn zero_mass_average_is_degenerate() {
        let (mu, w) = w0();
        assert!(matches!(
            average(&w, &mu, &Rect::interval(0.3, 0.3)),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let (mu, _) = w0();
        let w = Weight::constant(unit(3), 1.0).unwrap();
        assert_eq!(integral(&w, &mu, &Rect::interval(0.0, 1.0)), Err(Error::GridMismatch));
    }

    #[test]
    fn dual_weight_examples() {
        let (_, w) = w0();
        let s = dual_weight(&w, 2.0).unwrap();
        assert_eq!(s.values(), &[1.0, 1.0, 1.0, 0.5]);
        let w4 = Weight::constant(unit(1), 4.0).unwrap();
        assert_relative_eq!(dual_weight(&w4, 3.0).unwrap().value(0), 0.5, epsilon = 1e-15);
        assert!(dual_weight(&w4, 1.0).is_err());
        let one = Weight::constant(unit(2), 1.0).unwrap();
        assert_eq!(dual_weight(&one, 1.7).unwrap().values(), &[1.0, 1.0]);
    }

    #[test]
    fn grid_query_matches_real_query() {
        let g = Arc::new(AxisGrid::uniform(&[0.0, 0.0], &[1.0, 1.0], &[3, 2]).unwrap());
        let mu = GridMeasure::from_densities(g.clone(), &[1., 2., 3., 4., 5., 6.]).unwrap();
        for gr in g.grid_rects() {
            let r = gr.to_rect(&g);
            assert_relative_eq!(
                mu.table().query_grid(&gr),
                mu.table().query(&r),
                max_relative = 1e-13
            );
        }
    }
}
