//! Weak-type statements: the level-set estimate, the measure exchange
//! inequality and the weak-type norm bound of the maximal operator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::Rect;
use crate::measure::for_each_fragment;

use super::{named_variants, timed, Instance, VerdictReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeakVariant {
    /// `w({x ∈ R : w > λ}) <= 2λ μ({x ∈ R : w > w_R / (2^{p-1} [w]_{A_p*})})`
    /// for `λ > w_R`.
    Level,
    /// `(μ(E)/μ(R))^p <= [w]_{A_p*} w(E)/w(R)` for `E ⊂ R`.
    Exchange,
    /// Weak-type norm of `M` on `L^p(w)` at most `5 [w]_{A_p}^{1/p}`, on the
    /// line.
    Weak5,
}

named_variants!(WeakVariant {
    Level => "level",
    Exchange => "exchange",
    Weak5 => "weak-5",
});

/// Per-cell `(cell, μ-mass inside R)` of a box.
fn pieces(inst: &Instance, r: &Rect) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    for_each_fragment(inst.mu.grid(), r, |cell, frac| {
        let m = inst.mu.masses()[cell] * frac;
        if m > 0.0 {
            out.push((cell, m));
        }
    });
    out
}

fn level(inst: &Instance, v: &mut VerdictReport) -> Result<()> {
    let u = inst.ap()?.upper;
    let p = inst.p;
    v.provenance = format!("U = {u} certified upper of A_p*");
    let grid = inst.mu.grid();
    let samples = inst.options.level_samples.max(1);
    let mut worst: Option<(f64, f64, Rect)> = None;
    for gr in grid.grid_rects() {
        let cells: Vec<(usize, f64)> =
            gr.cells(grid).into_iter().map(|c| (c, inst.mu.masses()[c])).filter(|(_, m)| *m > 0.0).collect();
        let mass: f64 = cells.iter().map(|(_, m)| m).sum();
        if mass <= 0.0 {
            continue;
        }
        let wr = cells.iter().map(|&(c, m)| m * inst.w.value(c)).sum::<f64>() / mass;
        let top = cells.iter().map(|&(c, _)| inst.w.value(c)).fold(f64::NEG_INFINITY, f64::max);
        if !(top > wr) {
            continue;
        }
        let cut = wr / (2f64.powf(p - 1.0) * u);
        let low_mass: f64 = cells.iter().filter(|&&(c, _)| inst.w.value(c) > cut).map(|(_, m)| m).sum();
        for j in 1..=samples {
            let lambda = wr * (top / wr).powf(j as f64 / samples as f64);
            let lhs: f64 = cells
                .iter()
                .filter(|&&(c, _)| inst.w.value(c) > lambda)
                .map(|&(c, m)| m * inst.w.value(c))
                .sum();
            let rhs = 2.0 * lambda * low_mass;
            v.rects_checked += 1;
            let ratio = lhs / rhs;
            if worst.as_ref().map_or(true, |(r, _, _)| ratio > *r) {
                worst = Some((ratio, lambda, gr.to_rect(grid)));
            }
        }
    }
    v.parameter_name = "lambda".into();
    if let Some((r, lambda, rect)) = worst {
        v.worst_ratio = Some(r);
        v.parameter = Some(lambda);
        v.witness = Some(rect);
    }
    Ok(())
}

/// A random box of positive mass: per axis two uniform points.
fn random_box(inst: &Instance, rng: &mut ChaCha8Rng) -> Option<Rect> {
    let d = inst.mu.grid().domain();
    for _ in 0..64 {
        let mut lo = Vec::with_capacity(d.dim());
        let mut hi = Vec::with_capacity(d.dim());
        for a in 0..d.dim() {
            let x = rng.gen_range(d.lo[a]..=d.hi[a]);
            let y = rng.gen_range(d.lo[a]..=d.hi[a]);
            lo.push(x.min(y));
            hi.push(x.max(y));
        }
        if let Ok(r) = Rect::new(lo, hi) {
            if inst.mu.mass(&r).map_or(false, |m| m > 0.0) {
                return Some(r);
            }
        }
    }
    None
}

fn exchange(inst: &Instance, v: &mut VerdictReport) -> Result<()> {
    let u = inst.ap()?.upper;
    v.provenance = format!("U = {u} certified upper of A_p*");
    v.parameter_name = "pairs".into();
    v.parameter = Some(inst.options.exchange_pairs as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(inst.fingerprint.seed ^ 0x6578_6368_616e_6765);
    let mut worst: Option<(f64, Rect)> = None;
    for _ in 0..inst.options.exchange_pairs {
        let Some(r) = random_box(inst, &mut rng) else { break };
        let parts = pieces(inst, &r);
        let (mu_r, w_r) = parts.iter().fold((0.0, 0.0), |(a, b), &(c, m)| (a + m, b + m * inst.w.value(c)));
        // E: a random sub-fragment of each cell piece, kept with
        // probability one half.
        let (mut mu_e, mut w_e) = (0.0, 0.0);
        for &(c, m) in &parts {
            if rng.gen_bool(0.5) {
                let t: f64 = 1.0 - rng.gen::<f64>();
                mu_e += t * m;
                w_e += t * m * inst.w.value(c);
            }
        }
        v.rects_checked += 1;
        if mu_e <= 0.0 {
            continue;
        }
        let ratio = (mu_e / mu_r).powf(inst.p) / (u * w_e / w_r);
        if worst.as_ref().map_or(true, |(x, _)| ratio > *x) {
            worst = Some((ratio, r));
        }
    }
    if let Some((x, r)) = worst {
        v.worst_ratio = Some(x);
        v.witness = Some(r);
    }
    Ok(())
}

fn weak5(inst: &Instance, v: &mut VerdictReport) -> Result<()> {
    if inst.dim() != 1 {
        return Err(invalid("weak-5 applies to one-dimensional instances only"));
    }
    let u = inst.ap()?.upper;
    let est = inst.weak_norm()?;
    let bound = 5.0 * u.powf(1.0 / inst.p);
    v.parameter_name = "q".into();
    v.parameter = Some(inst.p);
    v.provenance = format!("bound 5 U^(1/q), U = {u} certified upper of A_q");
    v.rects_checked = est.evaluations;
    v.worst_ratio = Some(est.ratio / bound);
    v.diagnostics.insert("weak_norm_estimate".into(), est.ratio);
    v.diagnostics.insert("bound".into(), bound);
    Ok(())
}

pub fn verify_weak_family(inst: &Instance, variant: WeakVariant) -> Result<VerdictReport> {
    timed(|| {
        let mut v = VerdictReport::new(format!("weak/{variant}"), inst, "lambda");
        match variant {
            WeakVariant::Level => level(inst, &mut v)?,
            WeakVariant::Exchange => exchange(inst, &mut v)?,
            WeakVariant::Weak5 => weak5(inst, &mut v)?,
        }
        v.judge(true, inst.options.slack);
        Ok(v)
    })
}
