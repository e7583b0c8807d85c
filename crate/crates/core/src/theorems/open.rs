//! Open property: `w ∈ A_p` implies `w ∈ A_{p-ε}` with
//! `[w]_{A_{p-ε}} <= 2^{p-1} [w]_{A_p}`.

use serde::{Deserialize, Serialize};

use crate::constants::ap_star_constant;
use crate::error::{invalid, Result};

use super::{named_variants, timed, Instance, VerdictReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OpenVariant {
    /// `ε = (p-1) / (1 + 4[σ]_{A_∞})`, on the line.
    Ainfty,
    /// `ε = (p-1) / (1 + 2‖M_s‖_{L^{p'}(σ)})`.
    MaximalNorm,
}

named_variants!(OpenVariant {
    Ainfty => "ainfty",
    MaximalNorm => "maximal-norm",
});

/// `ε` must leave `p - ε > 1`; larger values are pulled back and flagged.
pub(crate) fn guard_epsilon(eps: f64, p: f64) -> (f64, bool) {
    if eps >= p - 1.0 {
        ((p - 1.0) * (1.0 - 1e-6), true)
    } else {
        (eps, false)
    }
}

pub fn verify_open_property(inst: &Instance, variant: OpenVariant) -> Result<VerdictReport> {
    timed(|| {
        let p = inst.p;
        let mut v = VerdictReport::new(format!("open/{variant}"), inst, "epsilon");
        let (raw, gating) = match variant {
            OpenVariant::Ainfty => {
                if inst.dim() != 1 {
                    return Err(invalid("the A_infinity open property applies to one-dimensional instances only"));
                }
                let us = inst.fw_sigma()?.upper;
                v.provenance = format!("(p-1)/(1 + 4U), U = {us} certified Fujii-Wilson upper of sigma");
                ((p - 1.0) / (1.0 + 4.0 * us), true)
            }
            OpenVariant::MaximalNorm => {
                let (norm, proven, prov) = inst.dual_norm_bound()?;
                v.provenance = format!("(p-1)/(1 + 2N), N = {prov}");
                if !proven {
                    v.notes.push("no proven norm bound for this instance".into());
                }
                ((p - 1.0) / (1.0 + 2.0 * norm), proven)
            }
        };
        let (eps, clamped) = guard_epsilon(raw, p);
        if clamped {
            v.notes.push(format!("epsilon {raw} clamped below p - 1"));
            v.flagged = true;
        }
        let u = inst.ap()?.upper;
        let lower = ap_star_constant(&inst.w, &inst.mu, p - eps, &inst.options.search)?;
        let bound = 2f64.powf(p - 1.0) * u;
        v.parameter = Some(eps);
        v.rects_checked = lower.boxes_explored;
        v.witness = lower.witness.clone();
        v.worst_ratio = Some(lower.lower / bound);
        v.diagnostics.insert("lower_a_p_minus_eps".into(), lower.lower);
        v.diagnostics.insert("bound".into(), bound);
        let flagged = v.flagged;
        v.judge(gating, inst.options.slack);
        v.flagged |= flagged;
        Ok(v)
    })
}
