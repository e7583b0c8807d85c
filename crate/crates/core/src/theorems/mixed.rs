//! Report-only ratios of maximal-operator norm estimates to bounds whose
//! absolute constants are unknown (taken as 1).

use crate::error::Result;
use crate::measure::conjugate_exponent;

use super::{timed, Instance, VerdictReport};

/// Ratios reported:
///
/// - `mixed`: `‖M‖ / (p' [w]_{A_p} [σ]_{A_∞})^{1/p}` on the line;
/// - `buckley`: `‖M‖ / [w]_{A_p}^{1/(p-1)}` (cubic operator);
/// - `product-weak`: weak norm over `[w]^{(1 - 1/(np))/(p-1)}` for product
///   weights on product measures;
/// - `strong-mixed`: `‖M_s‖ / ((p')^n [w]^{1/p + 2(n-1)/(p-1)} [σ]_{A_∞*}^{1/p})`
///   on product measures;
/// - `weak-strong`: `‖M‖ / (p' ‖M‖_weak ‖M‖^{1/p})`.
///
/// Norms are lower estimates and constants certified uppers, so the ratios
/// are diagnostics only.
pub fn verify_mixed_norms(inst: &Instance) -> Result<VerdictReport> {
    timed(|| {
        let mut v = VerdictReport::new("mixed/norms", inst, "p");
        let p = inst.p;
        let pc = conjugate_exponent(p);
        let n = inst.dim() as f64;
        v.parameter = Some(p);
        v.provenance = "norm lower estimates over certified constant uppers, unit constants".into();

        let u = inst.ap()?.upper;
        let strong = inst.strong_norm()?;
        let weak = inst.weak_norm()?;
        v.rects_checked = strong.evaluations + weak.evaluations;
        let mut put = |name: &str, x: f64| {
            if x.is_finite() && x > 0.0 {
                v.diagnostics.insert(name.into(), x);
            }
        };
        put("strong_norm_estimate", strong.ratio);
        put("weak_norm_estimate", weak.ratio);

        let mut ratios = Vec::new();
        if inst.dim() == 1 {
            let us = inst.fw_sigma()?.upper;
            ratios.push(("mixed", strong.ratio / (pc * u * us).powf(1.0 / p)));
        }
        let cubic = inst.cubic_norm()?;
        ratios.push(("buckley", cubic.ratio / u.powf(1.0 / (p - 1.0))));
        if inst.is_product_measure() {
            if inst.is_product_weight() {
                let e = (1.0 - 1.0 / (n * p)) / (p - 1.0);
                ratios.push(("product-weak", weak.ratio / u.powf(e)));
            }
            let us = inst.fw_sigma()?.upper;
            let e = 1.0 / p + 2.0 * (n - 1.0) / (p - 1.0);
            ratios.push(("strong-mixed", strong.ratio / (pc.powf(n) * u.powf(e) * us.powf(1.0 / p))));
        }
        if weak.ratio > 0.0 {
            ratios.push(("weak-strong", strong.ratio / (pc * weak.ratio * strong.ratio.powf(1.0 / p))));
        }

        let mut worst: Option<f64> = None;
        for (name, r) in ratios {
            v.diagnostics.insert(format!("ratio/{name}"), r);
            worst = Some(worst.map_or(r, |w| w.max(r)));
        }
        if worst.is_none() {
            v.notes.push("no estimate".into());
        }
        v.worst_ratio = worst;
        v.judge(false, inst.options.slack);
        Ok(v)
    })
}
