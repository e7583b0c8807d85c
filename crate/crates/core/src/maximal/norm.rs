//! Lower estimates of maximal operator norms on weighted `L^q`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::constants::SearchOptions;
use crate::error::{invalid, Result};
use crate::measure::{conjugate_exponent, GridMeasure, Weight};

use super::{strong_maximal, FieldMode, MaximalFamily};

/// Controls for the test-function search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormOptions {
    /// Lattice depth of the maximal fields.
    pub depth: u32,
    /// Number of random test functions.
    pub random: usize,
    /// Coordinate-ascent sweeps over the cells of the best function.
    pub polish_rounds: usize,
    pub seed: u64,
}

impl Default for NormOptions {
    fn default() -> Self {
        Self { depth: 2, random: 16, polish_rounds: 2, seed: 0 }
    }
}

/// Best ratio found and the test function achieving it.
#[derive(Debug, Clone, PartialEq)]
pub struct NormEstimate {
    pub ratio: f64,
    pub witness: Vec<f64>,
    pub evaluations: usize,
}

struct Scorer<'a> {
    mu: &'a GridMeasure,
    w: &'a Weight,
    q: f64,
    family: MaximalFamily,
    depth: u32,
    weak: bool,
}

impl Scorer<'_> {
    fn norm(&self, f: &[f64]) -> f64 {
        f.iter()
            .zip(self.mu.masses())
            .zip(self.w.values())
            .map(|((f, m), w)| m * f.powf(self.q) * w)
            .sum::<f64>()
            .powf(1.0 / self.q)
    }

    fn score(&self, f: &[f64]) -> Result<f64> {
        let nf = self.norm(f);
        if !(nf > 0.0) {
            return Ok(f64::NEG_INFINITY);
        }
        let fld = strong_maximal(f, self.mu, self.depth, FieldMode::Lower, self.family, &SearchOptions::default())?;
        let w = self.w.values();
        if !self.weak {
            return Ok(fld.lower_integral(self.q, Some(w)).powf(1.0 / self.q) / nf);
        }
        // sup over λ of λ ν({Mf > λ})^(1/q); letting λ rise to each field
        // value v gives v ν({lower >= v})^(1/q).
        let mut cells: Vec<(f64, f64)> = fld
            .lower
            .iter()
            .zip(&fld.masses)
            .zip(&fld.parent)
            .map(|((v, m), &p)| (*v, m * w[p]))
            .collect();
        cells.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut acc = 0.0;
        let mut best = 0.0f64;
        for (v, nu) in cells {
            acc += nu;
            best = best.max(v * acc.powf(1.0 / self.q));
        }
        Ok(best / nf)
    }
}

fn estimate(scorer: &Scorer, opts: &NormOptions) -> Result<NormEstimate> {
    if !(scorer.q > 1.0) || !scorer.q.is_finite() {
        return Err(invalid(format!("norm exponent must exceed 1, got {}", scorer.q)));
    }
    if scorer.family == MaximalFamily::Centered {
        return Err(invalid("norm estimates use the strong or cubic maximal function"));
    }
    let mu = scorer.mu;
    if !mu.grid().same_as(scorer.w.grid()) {
        return Err(crate::error::Error::GridMismatch);
    }
    let grid = mu.grid();
    let n = grid.cell_count();
    let mut family: Vec<Vec<f64>> = Vec::new();
    for gr in grid.grid_rects() {
        let mut f = vec![0.0; n];
        for c in gr.cells(grid) {
            f[c] = 1.0;
        }
        family.push(f);
    }
    family.push(scorer.w.values().to_vec());
    let dual = 1.0 - conjugate_exponent(scorer.q);
    family.push(scorer.w.values().iter().map(|v| v.powf(dual)).collect());
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.random {
        family.push((0..n).map(|_| rng.gen::<f64>()).collect());
    }
    let mut best = NormEstimate { ratio: f64::NEG_INFINITY, witness: Vec::new(), evaluations: 0 };
    for f in family {
        let s = scorer.score(&f)?;
        best.evaluations += 1;
        if s > best.ratio {
            best.ratio = s;
            best.witness = f;
        }
    }
    for _ in 0..opts.polish_rounds {
        let mut improved = false;
        for c in 0..n {
            for factor in [0.0, 0.5, 2.0] {
                let mut f = best.witness.clone();
                f[c] = if factor == 0.0 { 0.0 } else { (f[c] * factor).max(if f[c] == 0.0 { 1.0 } else { 0.0 }) };
                let s = scorer.score(&f)?;
                best.evaluations += 1;
                if s > best.ratio * (1.0 + 1e-12) {
                    best.ratio = s;
                    best.witness = f;
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
    Ok(best)
}

/// Lower estimate of the norm of the maximal operator on `L^q(w dμ)`.
pub fn op_norm_estimate(
    family: MaximalFamily,
    q: f64,
    w: &Weight,
    mu: &GridMeasure,
    opts: &NormOptions,
) -> Result<NormEstimate> {
    estimate(&Scorer { mu, w, q, family, depth: opts.depth, weak: false }, opts)
}

/// Lower estimate of the weak-type norm `sup λ ν({Mf > λ})^(1/q) / ‖f‖`.
pub fn weak_norm_estimate(
    family: MaximalFamily,
    q: f64,
    w: &Weight,
    mu: &GridMeasure,
    opts: &NormOptions,
) -> Result<NormEstimate> {
    estimate(&Scorer { mu, w, q, family, depth: opts.depth, weak: true }, opts)
}
