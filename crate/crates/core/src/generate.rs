//! Instance families: measures and weights built on a grid from a named
//! generator, deterministic for a fixed seed.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::AxisGrid;
use crate::measure::{GridMeasure, Weight};

/// How a measure is produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MeasureSource {
    Lebesgue,
    /// Explicit per-cell masses, row-major.
    Explicit { masses: Vec<f64> },
    /// Tensor product of one-dimensional cell masses, one list per axis.
    Product { factors: Vec<Vec<f64>> },
    /// Tensor product of random one-dimensional densities in `[1/bound, bound]`.
    RandomProduct { bound: f64 },
    /// Density `exp(-|x|^delta)` sampled at cell midpoints.
    Gaussian { delta: f64 },
    /// Independent random cell densities, log-uniform in `[1/bound, bound]`.
    RandomDensity { bound: f64 },
}

/// How a weight is produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WeightSource {
    Explicit { values: Vec<f64> },
    Constant { value: f64 },
    /// `|x - center|^(-alpha)` sampled at cell midpoints.
    Power { alpha: f64, center: Vec<f64> },
    /// Independent random cell values, log-uniform in `[1/bound, bound]`.
    RandomLogBounded { bound: f64 },
    /// `w(x) = ∏ w_i(x_i)` with random log-uniform factors in `[1/bound, bound]`.
    Product { bound: f64 },
}

impl MeasureSource {
    /// Whether the measure is a tensor product of one-dimensional measures.
    pub fn is_product(&self, dim: usize) -> bool {
        match self {
            MeasureSource::Lebesgue
            | MeasureSource::Product { .. }
            | MeasureSource::RandomProduct { .. } => true,
            MeasureSource::Gaussian { delta } => dim == 1 || *delta == 2.0,
            MeasureSource::Explicit { .. } | MeasureSource::RandomDensity { .. } => dim == 1,
        }
    }

    pub fn label(&self) -> String {
        match self {
            MeasureSource::Lebesgue => "lebesgue".into(),
            MeasureSource::Explicit { .. } => "explicit".into(),
            MeasureSource::Product { .. } => "product".into(),
            MeasureSource::RandomProduct { bound } => format!("random-product({bound})"),
            MeasureSource::Gaussian { delta } => format!("gaussian({delta})"),
            MeasureSource::RandomDensity { bound } => format!("random-density({bound})"),
        }
    }

    pub fn build(&self, grid: &Arc<AxisGrid>, seed: u64) -> Result<GridMeasure> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match self {
            MeasureSource::Lebesgue => Ok(GridMeasure::lebesgue(grid.clone())),
            MeasureSource::Explicit { masses } => GridMeasure::new(grid.clone(), masses.clone()),
            MeasureSource::Product { factors } => {
                if factors.len() != grid.dim() {
                    return Err(invalid("product measure needs one factor per axis"));
                }
                for (a, f) in factors.iter().enumerate() {
                    if f.len() != grid.cells_on_axis(a) {
                        return Err(invalid(format!(
                            "product factor {a} has {} masses, axis has {} cells",
                            f.len(),
                            grid.cells_on_axis(a)
                        )));
                    }
                }
                GridMeasure::new(grid.clone(), tensorize(grid, factors))
            }
            MeasureSource::RandomProduct { bound } => {
                check_bound(*bound)?;
                let factors: Vec<Vec<f64>> = (0..grid.dim())
                    .map(|a| {
                        (0..grid.cells_on_axis(a))
                            .map(|k| log_uniform(&mut rng, *bound) * grid.cell_width(a, k))
                            .collect()
                    })
                    .collect();
                GridMeasure::new(grid.clone(), tensorize(grid, &factors))
            }
            MeasureSource::Gaussian { delta } => {
                if !(*delta > 0.0) {
                    return Err(invalid("gaussian measure needs delta > 0"));
                }
                let masses = (0..grid.cell_count())
                    .map(|c| {
                        let r2: f64 = grid.cell_midpoint(c).iter().map(|x| x * x).sum();
                        (-r2.sqrt().powf(*delta)).exp() * grid.cell_volume(c)
                    })
                    .collect();
                GridMeasure::new(grid.clone(), masses)
            }
            MeasureSource::RandomDensity { bound } => {
                check_bound(*bound)?;
                let d: Vec<f64> = (0..grid.cell_count()).map(|_| log_uniform(&mut rng, *bound)).collect();
                GridMeasure::from_densities(grid.clone(), &d)
            }
        }
    }
}

impl WeightSource {
    pub fn label(&self) -> String {
        match self {
            WeightSource::Explicit { .. } => "explicit".into(),
            WeightSource::Constant { value } => format!("constant({value})"),
            WeightSource::Power { alpha, .. } => format!("power({alpha})"),
            WeightSource::RandomLogBounded { bound } => format!("random-log-bounded({bound})"),
            WeightSource::Product { bound } => format!("product({bound})"),
        }
    }

    /// Whether the weight factors as a product of one-dimensional weights.
    pub fn is_product(&self, dim: usize) -> bool {
        dim == 1 || matches!(self, WeightSource::Product { .. } | WeightSource::Constant { .. })
    }

    pub fn build(&self, grid: &Arc<AxisGrid>, seed: u64) -> Result<Weight> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match self {
            WeightSource::Explicit { values } => Weight::new(grid.clone(), values.clone()),
            WeightSource::Constant { value } => Weight::constant(grid.clone(), *value),
            WeightSource::Power { alpha, center } => {
                if center.len() != grid.dim() {
                    return Err(invalid("power weight center has the wrong dimension"));
                }
                if !alpha.is_finite() {
                    return Err(invalid("power weight exponent must be finite"));
                }
                let dom = grid.domain();
                let scale: f64 = (0..grid.dim()).map(|a| dom.width(a).powi(2)).sum::<f64>().sqrt();
                let values = (0..grid.cell_count())
                    .map(|c| {
                        let mid = grid.cell_midpoint(c);
                        let r: f64 = mid.iter().zip(center).map(|(x, c)| (x - c).powi(2)).sum::<f64>().sqrt();
                        if r <= 1e-12 * scale {
                            f64::INFINITY
                        } else {
                            r.powf(-alpha)
                        }
                    })
                    .collect::<Vec<f64>>();
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(invalid("power weight is singular at a cell midpoint"));
                }
                Weight::new(grid.clone(), values)
            }
            WeightSource::RandomLogBounded { bound } => {
                check_bound(*bound)?;
                let v = (0..grid.cell_count()).map(|_| log_uniform(&mut rng, *bound)).collect();
                Weight::new(grid.clone(), v)
            }
            WeightSource::Product { bound } => {
                check_bound(*bound)?;
                let factors: Vec<Vec<f64>> = (0..grid.dim())
                    .map(|a| (0..grid.cells_on_axis(a)).map(|_| log_uniform(&mut rng, *bound)).collect())
                    .collect();
                Weight::new(grid.clone(), tensorize(grid, &factors))
            }
        }
    }
}

fn check_bound(b: f64) -> Result<()> {
    if b > 1.0 && b.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("bound must exceed 1, got {b}")))
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, bound: f64) -> f64 {
    let l = bound.ln();
    rng.gen_range(-l..=l).exp()
}

fn tensorize(grid: &AxisGrid, factors: &[Vec<f64>]) -> Vec<f64> {
    (0..grid.cell_count())
        .map(|c| {
            grid.multi_index(c)
                .iter()
                .enumerate()
                .map(|(a, &k)| factors[a][k])
                .product()
        })
        .collect()
}

/// Builds a measure and a weight from their sources. The weight uses a seed
/// stream independent of the measure's.
pub fn generate(
    grid: &Arc<AxisGrid>,
    measure: &MeasureSource,
    weight: &WeightSource,
    seed: u64,
) -> Result<(GridMeasure, Weight)> {
    let mu = measure.build(grid, seed)?;
    let w = weight.build(grid, seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(1))?;
    Ok((mu, w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gaussian_is_symmetric() {
        let g = Arc::new(AxisGrid::uniform(&[-1.0], &[1.0], &[8]).unwrap());
        let mu = MeasureSource::Gaussian { delta: 2.0 }.build(&g, 0).unwrap();
        let m = mu.masses();
        for k in 0..8 {
            assert_relative_eq!(m[k], m[7 - k], max_relative = 1e-14);
        }
    }

    #[test]
    fn product_of_lebesgue_is_lebesgue() {
        let g = Arc::new(AxisGrid::uniform(&[0.0, 0.0], &[1.0, 2.0], &[3, 2]).unwrap());
        let f = vec![vec![1.0 / 3.0; 3], vec![1.0; 2]];
        let mu = MeasureSource::Product { factors: f }.build(&g, 0).unwrap();
        let leb = GridMeasure::lebesgue(g.clone());
        for (a, b) in mu.masses().iter().zip(leb.masses()) {
            assert_relative_eq!(a, b, max_relative = 1e-14);
        }
    }

    #[test]
    fn power_weight_midpoint_rule() {
        let g = Arc::new(AxisGrid::uniform(&[-1.0], &[1.0], &[8]).unwrap());
        let w = WeightSource::Power { alpha: 0.5, center: vec![0.0] }.build(&g, 0).unwrap();
        assert_relative_eq!(w.value(4), 2.828427124746190, max_relative = 1e-12);
        assert_relative_eq!(w.value(3), w.value(4), max_relative = 1e-14);
    }

    #[test]
    fn power_weight_singular_midpoint_is_rejected() {
        let g = Arc::new(AxisGrid::uniform(&[-1.0], &[1.0], &[3]).unwrap());
        assert!(WeightSource::Power { alpha: 0.5, center: vec![0.0] }.build(&g, 0).is_err());
    }

    #[test]
    fn random_sources_are_deterministic_and_bounded() {
        let g = Arc::new(AxisGrid::uniform(&[0.0, 0.0], &[1.0, 1.0], &[4, 4]).unwrap());
        let src = WeightSource::RandomLogBounded { bound: 3.0 };
        let a = src.build(&g, 11).unwrap();
        let b = src.build(&g, 11).unwrap();
        assert_eq!(a, b);
        assert!(a.values().iter().all(|v| (1.0 / 3.0..=3.0).contains(v)));
        let mu = MeasureSource::RandomDensity { bound: 2.0 }.build(&g, 5).unwrap();
        for c in 0..g.cell_count() {
            let d = mu.density(c);
            assert!(d >= 0.5 - 1e-12 && d <= 2.0 + 1e-12);
        }
        assert!(WeightSource::RandomLogBounded { bound: 1.0 }.build(&g, 0).is_err());
    }

    #[test]
    fn product_weight_factors() {
        let g = Arc::new(AxisGrid::uniform(&[0.0, 0.0], &[1.0, 1.0], &[3, 2]).unwrap());
        let w = WeightSource::Product { bound: 4.0 }.build(&g, 3).unwrap();
        // rank one: w(i,j) w(k,l) = w(i,l) w(k,j)
        let v = |i: usize, j: usize| w.value(g.flat_index(&[i, j]));
        assert_relative_eq!(v(0, 0) * v(2, 1), v(0, 1) * v(2, 0), max_relative = 1e-14);
    }
}
