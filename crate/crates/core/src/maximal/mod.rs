//! Maximal operators on piecewise-constant functions.
//!
//! Fields live on a lattice obtained by splitting every grid cell into
//! `2^depth` equal parts per axis. The lower value at a lattice cell is the
//! largest average over lattice-aligned boxes of the family that contain the
//! whole lattice cell, so it bounds the maximal function from below at every
//! point of that cell (and lattice sums bound its integral from below).

mod dyadic;
mod norm;
mod pointwise;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::constants::SearchOptions;
use crate::error::{invalid, Error, Result};
use crate::grid::{AxisGrid, GridRect};
use crate::measure::GridMeasure;

pub(crate) use dyadic::mass_cut;
pub use dyadic::{build_dyadic, build_geometric_dyadic, dyadic_maximal, majorization_check, DyadicField, DyadicGrid, Majorization};
pub use norm::{op_norm_estimate, weak_norm_estimate, NormEstimate, NormOptions};
pub use pointwise::{cell_upper_bounds, maximal_at};

/// Largest number of `(start, end)` index combinations the lattice
/// evaluator will tabulate.
const MAX_TABLE: usize = 1 << 24;

/// Which boxes the supremum runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaximalFamily {
    /// All axis-parallel boxes (`M_s`).
    Strong,
    /// Geometric cubes (`M`); cubes sticking out of the domain count with
    /// their trace on it, since the measure lives on the domain.
    Cubic,
    /// Intervals centered at the point (`M^c`, one dimension only).
    Centered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldMode {
    Lower,
    /// Adds a certified upper bound over each grid cell.
    Certified,
}

/// Values of a maximal function on a lattice.
#[derive(Debug, Clone)]
pub struct MaximalField {
    pub family: MaximalFamily,
    pub depth: u32,
    /// Lattice cells; the field is indexed by their flat index.
    pub lattice: Arc<AxisGrid>,
    /// Grid cell containing each lattice cell.
    pub parent: Vec<usize>,
    pub lower: Vec<f64>,
    /// Certified upper bound of the maximal function over the parent cell.
    pub upper: Option<Vec<f64>>,
    /// Lattice cell masses.
    pub masses: Vec<f64>,
}

impl MaximalField {
    /// `Σ mass · lower^q · weight`, a lower bound of `∫ (Mf)^q weight dμ`
    /// for the strong and cubic families.
    pub fn lower_integral(&self, q: f64, weight: Option<&[f64]>) -> f64 {
        self.integral(&self.lower, q, weight)
    }

    pub fn upper_integral(&self, q: f64, weight: Option<&[f64]>) -> Option<f64> {
        self.upper.as_ref().map(|u| self.integral(u, q, weight))
    }

    fn integral(&self, values: &[f64], q: f64, weight: Option<&[f64]>) -> f64 {
        values
            .iter()
            .zip(&self.masses)
            .zip(&self.parent)
            .map(|((v, m), &p)| {
                if *m == 0.0 {
                    0.0
                } else {
                    m * v.powf(q) * weight.map_or(1.0, |w| w[p])
                }
            })
            .sum()
    }
}

pub(crate) fn check_function(mu: &GridMeasure, f: &[f64]) -> Result<()> {
    if f.len() != mu.grid().cell_count() {
        return Err(Error::GridMismatch);
    }
    if let Some(i) = f.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(invalid(format!("function value of cell {i} must be finite and >= 0")));
    }
    Ok(())
}

/// Lattice of `2^depth` parts per cell and axis, with the lattice masses
/// and the grid cell of every lattice cell.
pub(crate) fn lattice(mu: &GridMeasure, depth: u32) -> Result<(Arc<AxisGrid>, Vec<f64>, Vec<usize>)> {
    if depth > 20 {
        return Err(invalid(format!("lattice depth {depth} is too large")));
    }
    let grid = mu.grid();
    let factor = 1usize << depth;
    let cells = grid.cell_count().checked_mul(factor.pow(grid.dim() as u32));
    if cells.map_or(true, |c| c > MAX_TABLE) {
        return Err(invalid(format!("lattice at depth {depth} exceeds {MAX_TABLE} cells")));
    }
    let lat = Arc::new(grid.refine(factor)?);
    let share = 1.0 / factor.pow(grid.dim() as u32) as f64;
    let parent: Vec<usize> = (0..lat.cell_count())
        .map(|c| {
            let idx: Vec<usize> = lat.multi_index(c).iter().map(|i| i / factor).collect();
            grid.flat_index(&idx)
        })
        .collect();
    let masses = parent.iter().map(|&p| mu.masses()[p] * share).collect();
    Ok((lat, masses, parent))
}

/// Whether a box with the given side lengths is the trace on the domain of
/// a cube: every side shorter than the longest one must touch the domain
/// boundary.
fn is_clipped_cube(lo: &[f64], hi: &[f64], domain_lo: &[f64], domain_hi: &[f64]) -> bool {
    let side = lo.iter().zip(hi).map(|(l, h)| h - l).fold(0.0, f64::max);
    let tol = 1e-12 * side.max(1e-300);
    lo.iter().zip(hi).enumerate().all(|(a, (l, h))| {
        h - l >= side - tol || *l <= domain_lo[a] + tol || *h >= domain_hi[a] - tol
    })
}

/// For every lattice cell, the largest family average over lattice-aligned
/// boxes containing it.
///
/// Averages of all boxes `(s, t)` are tabulated; then a suffix maximum over
/// each `t_a` followed by a prefix maximum over each `s_a` leaves at
/// `(k, k)` the maximum over `s <= k <= t`.
fn lattice_lower(
    lat: &AxisGrid,
    masses: &[f64],
    parent: &[usize],
    f: &[f64],
    cubic: bool,
) -> Result<Vec<f64>> {
    let shape = lat.shape();
    let n = shape.len();
    let total = shape.iter().try_fold(1usize, |acc, &k| acc.checked_mul(k * k));
    let total = match total {
        Some(t) if t <= MAX_TABLE => t,
        _ => return Err(invalid("lattice too fine for tabulating all boxes; lower the depth")),
    };
    let mass_table = crate::measure::CumTable::new(Arc::new(lat.clone()), masses);
    let fm: Vec<f64> = masses.iter().zip(parent).map(|(m, &p)| m * f[p]).collect();
    let f_table = crate::measure::CumTable::new(Arc::new(lat.clone()), &fm);
    let domain = lat.domain();
    // Axis `a` of the table has extent `shape[a]^2`, index `s * N + t`.
    let mut strides = vec![1usize; n];
    for a in (0..n.saturating_sub(1)).rev() {
        strides[a] = strides[a + 1] * shape[a + 1] * shape[a + 1];
    }
    let mut table = vec![f64::NEG_INFINITY; total];
    let mut ranges = vec![(0usize, 0usize); n];
    let mut lo = vec![0.0; n];
    let mut hi = vec![0.0; n];
    for (flat, slot) in table.iter_mut().enumerate() {
        let mut rest = flat;
        let mut valid = true;
        for a in 0..n {
            let pair = rest / strides[a];
            rest %= strides[a];
            let (s, t) = (pair / shape[a], pair % shape[a]);
            if t < s {
                valid = false;
                break;
            }
            ranges[a] = (s, t);
            lo[a] = lat.axis(a)[s];
            hi[a] = lat.axis(a)[t + 1];
        }
        if !valid || (cubic && !is_clipped_cube(&lo, &hi, &domain.lo, &domain.hi)) {
            continue;
        }
        let g = GridRect { ranges: ranges.clone() };
        let m = mass_table.query_grid(&g);
        if m > 0.0 {
            *slot = f_table.query_grid(&g) / m;
        }
    }
    for a in 0..n {
        let na = shape[a];
        let stride = strides[a];
        let block = stride * na * na;
        for outer in (0..total).step_by(block) {
            for inner in 0..stride {
                let at = |s: usize, t: usize| outer + inner + (s * na + t) * stride;
                for s in 0..na {
                    for t in (0..na - 1).rev() {
                        let v = table[at(s, t + 1)];
                        let c = &mut table[at(s, t)];
                        if v > *c {
                            *c = v;
                        }
                    }
                }
                for t in 0..na {
                    for s in 1..na {
                        let v = table[at(s - 1, t)];
                        let c = &mut table[at(s, t)];
                        if v > *c {
                            *c = v;
                        }
                    }
                }
            }
        }
    }
    Ok((0..lat.cell_count())
        .map(|c| {
            let idx = lat.multi_index(c);
            let flat: usize = idx.iter().enumerate().map(|(a, &k)| (k * shape[a] + k) * strides[a]).sum();
            let v = table[flat];
            if v.is_finite() {
                v
            } else {
                f[parent[c]]
            }
        })
        .collect())
}

/// Maximal function field of `f >= 0` at the given lattice depth.
pub fn strong_maximal(
    f: &[f64],
    mu: &GridMeasure,
    depth: u32,
    mode: FieldMode,
    family: MaximalFamily,
    opts: &SearchOptions,
) -> Result<MaximalField> {
    check_function(mu, f)?;
    if family == MaximalFamily::Centered && mu.grid().dim() != 1 {
        return Err(invalid("the centered maximal function is only available in one dimension"));
    }
    let (lat, masses, parent) = lattice(mu, depth)?;
    let lower = match family {
        MaximalFamily::Strong => lattice_lower(&lat, &masses, &parent, f, false)?,
        MaximalFamily::Cubic => lattice_lower(&lat, &masses, &parent, f, true)?,
        MaximalFamily::Centered => (0..lat.cell_count())
            .map(|c| pointwise::centered_exact(f, mu, lat.cell_midpoint(c)[0]))
            .collect::<Result<_>>()?,
    };
    let upper = match mode {
        FieldMode::Lower => None,
        FieldMode::Certified => {
            let cells = cell_upper_bounds(f, mu, opts)?;
            Some(parent.iter().map(|&p| cells[p]).collect())
        }
    };
    Ok(MaximalField { family, depth, lattice: lat, parent, lower, upper, masses })
}
