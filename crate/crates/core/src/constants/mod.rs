//! Certified weight constants: suprema over all axis-parallel boxes,
//! returned as intervals `[lower, upper]` with a witness box.

pub(crate) mod bnb;
pub(crate) mod coarsen;
pub(crate) mod objective;
mod doubling;
mod fw;
pub(crate) mod span;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::Rect;
use crate::measure::{dual_weight, GridMeasure, Weight};

use bnb::{full_roots, maximize, Best};
use objective::RatioObjective;
use span::{all_assignments, SpanData};

pub use doubling::doubling_constant;
pub use fw::{ainf_fw_constant, fw_inner_lower, FwOptions};

/// Certified enclosure of a supremum-type constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantInterval {
    pub lower: f64,
    pub upper: f64,
    /// Box achieving `lower`, or the limit configuration approaching it.
    pub witness: Option<Rect>,
    /// False when the supremum is only approached (see `witness`).
    pub attained: bool,
    /// Whether `upper - lower <= tol * upper` was reached within budget.
    pub converged: bool,
    pub boxes_explored: usize,
    pub iterations: usize,
}

impl ConstantInterval {
    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Termination controls for the branch and bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    /// Relative gap at which the search stops.
    pub tol: f64,
    /// Budget of parameter boxes to evaluate.
    pub max_boxes: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { tol: 1e-6, max_boxes: 200_000 }
    }
}

impl SearchOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(invalid(format!("tolerance must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(invalid(format!(
            "p must exceed 1 for A_p*, got {p}; use the a1 task for A_1*"
        )));
    }
    Ok(())
}

pub(crate) fn spans_for(mu: &GridMeasure, tables: &[&crate::measure::CumTable]) -> Vec<SpanData> {
    let grid = mu.grid();
    all_assignments(grid)
        .into_iter()
        .map(|axes| SpanData::new(grid, axes, mu.table(), tables))
        .collect()
}

pub(crate) fn finish(out: bnb::BnbOutcome) -> Result<ConstantInterval> {
    if out.best.rect.is_none() {
        return Err(Error::Undefined("no box with positive mass".into()));
    }
    Ok(ConstantInterval {
        lower: out.best.value,
        upper: out.upper.max(out.best.value),
        witness: out.best.rect,
        attained: !out.best.limit,
        converged: out.converged,
        boxes_explored: out.boxes,
        iterations: out.iterations,
    })
}

/// `[w]_{A_p*} = sup_R (⨍_R w)(⨍_R w^(1-p'))^(p-1)`.
pub fn ap_star_constant(w: &Weight, mu: &GridMeasure, p: f64, opts: &SearchOptions) -> Result<ConstantInterval> {
    check_p(p)?;
    opts.validate()?;
    mu.check_same_grid(w)?;
    let sigma = dual_weight(w, p)?;
    let (mu, vals) = coarsen::coarsen(mu, &[w.values(), sigma.values()]);
    let wt = mu.weighted_table(&vals[0]);
    let st = mu.weighted_table(&vals[1]);
    let spans = spans_for(&mu, &[&wt, &st]);
    finish(maximize(mu.grid(), &spans, full_roots(&spans), &RatioObjective::Ap { p }, opts))
}

/// `[w]^exp_{A_∞*} = sup_R (⨍_R w) exp(⨍_R log w^(-1))`.
pub fn ainf_exp_constant(w: &Weight, mu: &GridMeasure, opts: &SearchOptions) -> Result<ConstantInterval> {
    opts.validate()?;
    mu.check_same_grid(w)?;
    let logs: Vec<f64> = w.values().iter().map(|v| -v.ln()).collect();
    let (mu, vals) = coarsen::coarsen(mu, &[w.values(), &logs]);
    let wt = mu.weighted_table(&vals[0]);
    let lt = mu.weighted_table(&vals[1]);
    let spans = spans_for(&mu, &[&wt, &lt]);
    finish(maximize(mu.grid(), &spans, full_roots(&spans), &RatioObjective::Exp, opts))
}

/// `[w]_{A_1*} = sup_R (⨍_R w) ess sup_R w^(-1)`.
///
/// Within one face-to-cell assignment the essential infimum of `w` is fixed
/// and the average is linear-fractional in each axis' face coordinates, so
/// the supremum is reached at the corners of the parameter box. Corners
/// where a declared face cell has zero coverage are limits (the essential
/// infimum jumps there while the average does not); they are reported with
/// `attained = false`.
pub fn a1_star_constant(w: &Weight, mu: &GridMeasure, opts: &SearchOptions) -> Result<ConstantInterval> {
    opts.validate()?;
    mu.check_same_grid(w)?;
    let wt = mu.weighted_table(w.values());
    let grid = mu.grid();
    let mut best = Best::new();
    let mut boxes = 0;
    for axes in all_assignments(grid) {
        let span = SpanData::new(grid, axes, mu.table(), &[&wt]);
        let inf = span
            .blocks
            .iter()
            .flat_map(|b| b.cells.iter())
            .filter(|&&c| mu.masses()[c] > 0.0)
            .map(|&c| w.value(c))
            .fold(f64::INFINITY, f64::min);
        if !inf.is_finite() {
            continue;
        }
        let d = span.dim;
        for bits in 0..(1usize << d) {
            boxes += 1;
            let x: Vec<f64> = (0..d).map(|i| (bits >> i & 1) as f64).collect();
            let mut sums = [0.0];
            let m = span.evaluate(&x, &mut sums);
            if m > 0.0 {
                best.consider(sums[0] / m / inf, span.realize(grid, &x), span.is_limit(&x));
            }
        }
    }
    let value = best.value;
    let attained = !best.limit;
    let witness = best.rect.ok_or_else(|| Error::Undefined("no box with positive mass".into()))?;
    Ok(ConstantInterval {
        lower: value,
        upper: value,
        witness: Some(witness),
        attained,
        converged: true,
        boxes_explored: boxes,
        iterations: 0,
    })
}

/// Which constant a grid-aligned enumeration evaluates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridAlignedKind {
    Ap(f64),
    A1,
    Exp,
}

/// Supremum over grid-aligned boxes only; a lower bound for the constant
/// (and, for `A1`, the diagnostic value over the restricted family).
pub fn grid_aligned_constant(w: &Weight, mu: &GridMeasure, kind: GridAlignedKind) -> Result<(f64, Rect)> {
    mu.check_same_grid(w)?;
    let grid = mu.grid();
    let wt = mu.weighted_table(w.values());
    let other = match kind {
        GridAlignedKind::Ap(p) => {
            check_p(p)?;
            Some(mu.weighted_table(dual_weight(w, p)?.values()))
        }
        GridAlignedKind::Exp => {
            let logs: Vec<f64> = w.values().iter().map(|v| -v.ln()).collect();
            Some(mu.weighted_table(&logs))
        }
        GridAlignedKind::A1 => None,
    };
    let mut best = Best::new();
    for gr in grid.grid_rects() {
        let m = mu.table().query_grid(&gr);
        if m <= 0.0 {
            continue;
        }
        let a = wt.query_grid(&gr) / m;
        let v = match kind {
            GridAlignedKind::Ap(p) => a * (other.as_ref().unwrap().query_grid(&gr) / m).powf(p - 1.0),
            GridAlignedKind::Exp => a * (other.as_ref().unwrap().query_grid(&gr) / m).exp(),
            GridAlignedKind::A1 => {
                let inf = gr
                    .cells(grid)
                    .into_iter()
                    .filter(|&c| mu.masses()[c] > 0.0)
                    .map(|c| w.value(c))
                    .fold(f64::INFINITY, f64::min);
                a / inf
            }
        };
        best.consider(v, gr.to_rect(grid), false);
    }
    let rect = best.rect.ok_or_else(|| Error::Undefined("no box with positive mass".into()))?;
    Ok((best.value, rect))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::AxisGrid;
    use std::sync::Arc;

    fn w0() -> (GridMeasure, Weight) {
        let g = Arc::new(AxisGrid::uniform(&[0.0], &[1.0], &[4]).unwrap());
        (GridMeasure::lebesgue(g.clone()), Weight::new(g, vec![1.0, 1.0, 1.0, 2.0]).unwrap())
    }

    #[test]
    fn constant_weight_gives_one() {
        let g = Arc::new(AxisGrid::uniform(&[0.0, 0.0], &[1.0, 1.0], &[3, 2]).unwrap());
        let mu = GridMeasure::from_densities(g.clone(), &[1., 2., 3., 1., 5., 1.]).unwrap();
        let w = Weight::constant(g, 2.5).unwrap();
        let opts = SearchOptions::default();
        for c in [
            ap_star_constant(&w, &mu, 2.0, &opts).unwrap(),
            ainf_exp_constant(&w, &mu, &opts).unwrap(),
            a1_star_constant(&w, &mu, &opts).unwrap(),
        ] {
            assert!((c.lower - 1.0).abs() < 1e-12, "{c:?}");
            assert!((c.upper - 1.0).abs() < 1e-9, "{c:?}");
        }
    }

    #[test]
    fn w0_a2_closed_form() {
        let (mu, w) = w0();
        let c = ap_star_constant(&w, &mu, 2.0, &SearchOptions::default()).unwrap();
        assert!((c.lower - 1.125).abs() <= 1e-6, "{c:?}");
        assert!(c.upper - c.lower <= 1e-6 * c.upper, "{c:?}");
        assert!(c.converged);
        assert_eq!(c.witness.unwrap(), Rect::interval(0.5, 1.0));
    }

    #[test]
    fn w0_a1_is_a_limit() {
        let (mu, w) = w0();
        let c = a1_star_constant(&w, &mu, &SearchOptions::default()).unwrap();
        assert!((c.lower - 2.0).abs() < 1e-12);
        assert!(!c.attained);
        assert_eq!(c.witness.unwrap(), Rect::interval(0.75, 1.0));
        let (v, r) = grid_aligned_constant(&w, &mu, GridAlignedKind::A1).unwrap();
        assert!((v - 1.5).abs() < 1e-15);
        assert_eq!(r, Rect::interval(0.5, 1.0));
    }

    #[test]
    fn invalid_parameters() {
        let (mu, w) = w0();
        assert!(ap_star_constant(&w, &mu, 1.0, &SearchOptions::default()).is_err());
        assert!(ap_star_constant(&w, &mu, 2.0, &SearchOptions::with_tol(0.0)).is_err());
    }

    #[test]
    fn single_cell_exp_is_one() {
        let g = Arc::new(AxisGrid::uniform(&[0.0], &[1.0], &[1]).unwrap());
        let mu = GridMeasure::lebesgue(g.clone());
        let w = Weight::new(g, vec![7.0]).unwrap();
        let c = ainf_exp_constant(&w, &mu, &SearchOptions::default()).unwrap();
        assert!((c.lower - 1.0).abs() < 1e-12 && (c.upper - 1.0).abs() < 1e-12);
    }
}
