//! Higher integrability `⨍_R w^s dμ <= s / (1 - (s-1)(K-1)) (⨍_R w dμ)^s`
//! for `1 < s < K / (K - 1)`.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::measure::CumTable;

use super::search::worst_ratio;
use super::{named_variants, timed, Instance, VerdictReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntegrabilityVariant {
    /// `K = [w]_{A_1*}`.
    A1Full,
    /// `K = ‖M_s‖_{L^{p'}(σ)}`.
    MaximalNorm,
}

named_variants!(IntegrabilityVariant {
    A1Full => "a1-full",
    MaximalNorm => "maximal-norm",
});

/// Fraction of the admissible range of `s` that is sampled, keeping clear
/// of the pole of the constant.
const POLE_MARGIN: f64 = 1e-3;
/// Largest `s` sampled when every `s > 1` is admissible.
const S_CAP: f64 = 8.0;

/// The sampled exponents: a geometric grid on `(1, s_top]`.
pub(crate) fn s_grid(k: f64, samples: usize) -> Vec<f64> {
    let s_top = if k - 1.0 <= 1e-12 {
        S_CAP
    } else {
        let s_max = k / (k - 1.0);
        1.0 + (s_max - 1.0) * (1.0 - POLE_MARGIN)
    };
    let samples = samples.max(1);
    (1..=samples).map(|j| s_top.powf(j as f64 / samples as f64)).collect()
}

/// Constant `s / (1 - (s-1)(K-1))` of the inequality.
pub fn integrability_constant(s: f64, k: f64) -> f64 {
    s / (1.0 - (s - 1.0) * (k - 1.0).max(0.0))
}

pub fn verify_integrability_family(inst: &Instance, variant: IntegrabilityVariant) -> Result<VerdictReport> {
    timed(|| {
        let mut v = VerdictReport::new(format!("integrability/{variant}"), inst, "s");
        let (k, gating) = match variant {
            IntegrabilityVariant::A1Full => {
                let u = inst.a1()?.upper;
                v.provenance = format!("K = U = {u} certified upper of A_1*");
                (u, true)
            }
            IntegrabilityVariant::MaximalNorm => {
                let (norm, proven, prov) = inst.dual_norm_bound()?;
                v.provenance = format!("K = {prov}");
                if !proven {
                    v.notes.push("no proven norm bound for this instance".into());
                }
                (norm, proven)
            }
        };
        v.diagnostics.insert("k".into(), k);

        let top = inst.w.max();
        let scaled: Vec<f64> = inst.w.values().iter().map(|x| x / top).collect();
        let base = inst.mu.weighted_table(&scaled);
        let mut worst: Option<(f64, f64)> = None;
        for s in s_grid(k, inst.options.s_samples) {
            let c = integrability_constant(s, k);
            let ps: Vec<f64> = scaled.iter().map(|x| x.powf(s)).collect();
            let tables: Vec<CumTable> = vec![base.clone(), inst.mu.weighted_table(&ps)];
            let w = worst_ratio(&inst.mu, &tables, inst.options.refine_top, |m, t| {
                (t[1] / m) / (c * (t[0] / m).powf(s))
            });
            v.rects_checked += w.checked;
            if worst.map_or(true, |(r, _)| w.ratio > r) {
                worst = Some((w.ratio, s));
                v.witness = w.witness;
            }
        }
        if let Some((r, s)) = worst {
            v.worst_ratio = Some(r);
            v.parameter = Some(s);
            v.diagnostics.insert("constant".into(), integrability_constant(s, k));
        }
        v.judge(gating, inst.options.slack);
        Ok(v)
    })
}
