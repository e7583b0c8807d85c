//! Verifiers that instantiate the quantitative inequalities on a concrete
//! `(μ, w, p)` instance and return structured verdicts, plus a seeded
//! campaign driver.
//!
//! Every pass/fail verdict derives its exponent from a certified upper end of
//! a constant (or from a proven bound on a maximal norm); anything computed
//! from lower estimates is reported but never fails.

mod campaign;
mod integrability;
mod mixed;
mod open;
mod rhi;
mod search;
mod weak;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::constants::{
    a1_star_constant, ainf_exp_constant, ainf_fw_constant, ap_star_constant, doubling_constant, ConstantInterval,
    FwOptions, SearchOptions,
};
use crate::error::{invalid, Result};
use crate::grid::Rect;
use crate::maximal::{op_norm_estimate, weak_norm_estimate, MaximalFamily, NormEstimate, NormOptions};
use crate::measure::{conjugate_exponent, dual_weight, GridMeasure, Weight};

pub use campaign::{
    all_theorems, campaign_instance, resolve_theorems, run_campaign, verify_instance, CampaignConfig, CampaignOutcome, CampaignSummary,
};
pub use integrability::{integrability_constant, verify_integrability_family, IntegrabilityVariant};
pub use mixed::verify_mixed_norms;
pub use open::{verify_open_property, OpenVariant};
pub use rhi::{empirical_rhi_range, rhi_worst, verify_rhi_family, Candidate, EmpiricalRange, RhiVariant};
pub use search::{worst_ratio, WorstRatio};
pub use weak::{verify_weak_family, WeakVariant};

/// Outcome class of a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    ReportOnly,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::ReportOnly => "report-only",
        })
    }
}

/// Identifies the instance a verdict was computed on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub id: usize,
    pub seed: u64,
    pub shape: Vec<usize>,
    pub generator: String,
}

/// Result of one verifier on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictReport {
    /// `family/variant`, e.g. `rhi/dim-free`.
    pub theorem: String,
    pub instance: Fingerprint,
    /// Name of the exponent parameter (`epsilon`, `s`, ...).
    pub parameter_name: String,
    /// Value of the parameter; for sampled parameters, the one attaining the
    /// worst ratio.
    pub parameter: Option<f64>,
    /// Where the parameter came from.
    pub provenance: String,
    pub rects_checked: usize,
    /// Largest observed LHS / RHS; `None` when nothing could be evaluated.
    pub worst_ratio: Option<f64>,
    pub witness: Option<Rect>,
    pub status: Status,
    /// Passed with a margin below ten times the slack.
    pub flagged: bool,
    /// Named side quantities (report-only ratios, constants used).
    pub diagnostics: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    /// Milliseconds; omitted in deterministic mode.
    pub wall_time_ms: Option<f64>,
}

impl VerdictReport {
    pub(crate) fn new(theorem: impl Into<String>, instance: &Instance, parameter_name: &str) -> Self {
        Self {
            theorem: theorem.into(),
            instance: instance.fingerprint.clone(),
            parameter_name: parameter_name.into(),
            parameter: None,
            provenance: String::new(),
            rects_checked: 0,
            worst_ratio: None,
            witness: None,
            status: Status::ReportOnly,
            flagged: false,
            diagnostics: BTreeMap::new(),
            notes: Vec::new(),
            wall_time_ms: None,
        }
    }

    /// Sets the status from the worst ratio: fail iff it exceeds `1 + slack`.
    /// Non-gating verdicts become report-only.
    pub(crate) fn judge(&mut self, gating: bool, slack: f64) {
        if !gating {
            self.status = Status::ReportOnly;
            return;
        }
        match self.worst_ratio {
            Some(r) if r.is_finite() || r == f64::NEG_INFINITY => {
                if r > 1.0 + slack {
                    self.status = Status::Fail;
                } else {
                    self.status = Status::Pass;
                    self.flagged = r > 1.0 - 10.0 * slack;
                }
            }
            Some(_) => {
                self.status = Status::Fail;
                self.notes.push("ratio is not finite".into());
            }
            None => {
                self.status = Status::Pass;
                self.notes.push("nothing to check".into());
            }
        }
    }

    pub fn is_failure(&self) -> bool {
        self.status == Status::Fail
    }
}

/// Numerical controls shared by all verifiers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub search: SearchOptions,
    pub fw: FwOptions,
    pub norm: NormOptions,
    /// Relative slack of every inequality check.
    pub slack: f64,
    /// How many of the worst grid-aligned boxes seed the endpoint ascent.
    pub refine_top: usize,
    /// Depth of the μ-dyadic grid used for the majorization constant.
    pub majorization_depth: usize,
    /// Number of exponents sampled by the integrability verifier.
    pub s_samples: usize,
    /// Levels sampled per box by the level-set verifier.
    pub level_samples: usize,
    /// Random `(R, E)` pairs for the exchange inequality.
    pub exchange_pairs: usize,
    /// Cap of the empirical exponent search.
    pub epsilon_max: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            search: SearchOptions::default(),
            fw: FwOptions::default(),
            norm: NormOptions::default(),
            slack: 1e-12,
            refine_top: 4,
            majorization_depth: 3,
            s_samples: 5,
            level_samples: 4,
            exchange_pairs: 1000,
            epsilon_max: 64.0,
        }
    }
}

#[derive(Default)]
struct Cache {
    ap: OnceLock<Result<ConstantInterval>>,
    a1: OnceLock<Result<ConstantInterval>>,
    exp: OnceLock<Result<ConstantInterval>>,
    fw: OnceLock<Result<ConstantInterval>>,
    fw_sigma: OnceLock<Result<ConstantInterval>>,
    doubling: OnceLock<Result<ConstantInterval>>,
    strong_norm: OnceLock<Result<NormEstimate>>,
    cubic_norm: OnceLock<Result<NormEstimate>>,
    weak_norm: OnceLock<Result<NormEstimate>>,
    dual_norm: OnceLock<Result<NormEstimate>>,
}

/// A measure, a weight and an exponent, with lazily computed constants.
pub struct Instance {
    pub fingerprint: Fingerprint,
    pub mu: GridMeasure,
    pub w: Weight,
    pub p: f64,
    pub options: VerifyOptions,
    cache: Cache,
}

impl fmt::Debug for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Instance")
            .field("fingerprint", &self.fingerprint)
            .field("p", &self.p)
            .finish_non_exhaustive()
    }
}

fn cached<T: Clone>(cell: &OnceLock<Result<T>>, make: impl FnOnce() -> Result<T>) -> Result<T> {
    cell.get_or_init(make).clone()
}

impl Instance {
    pub fn new(fingerprint: Fingerprint, mu: GridMeasure, w: Weight, p: f64, options: VerifyOptions) -> Result<Self> {
        mu.check_same_grid(&w)?;
        if !(p > 1.0) || !p.is_finite() {
            return Err(invalid(format!("instance exponent must exceed 1, got {p}")));
        }
        Ok(Self { fingerprint, mu, w, p, options, cache: Cache::default() })
    }

    pub fn dim(&self) -> usize {
        self.mu.grid().dim()
    }

    /// Whether the density is constant, i.e. the measure is a multiple of
    /// Lebesgue measure.
    pub fn is_lebesgue(&self) -> bool {
        let n = self.mu.grid().cell_count();
        let d0 = self.mu.density(0);
        (0..n).all(|c| (self.mu.density(c) - d0).abs() <= 1e-12 * d0.abs().max(f64::MIN_POSITIVE))
    }

    /// Whether the density factors as a product of one-variable functions.
    pub fn is_product_measure(&self) -> bool {
        let dens: Vec<f64> = (0..self.mu.grid().cell_count()).map(|c| self.mu.density(c)).collect();
        is_rank_one(self.mu.grid(), &dens)
    }

    /// Whether the weight factors as a product of one-variable functions.
    pub fn is_product_weight(&self) -> bool {
        is_rank_one(self.w.grid(), self.w.values())
    }

    /// Instances on which the proven bound `2‖M_s‖_{L^{p'}(σ)} <= 2^{p+2}[w]`
    /// applies: Lebesgue measure and a product weight.
    pub fn has_norm_bound(&self) -> bool {
        self.is_lebesgue() && self.is_product_weight()
    }

    pub fn sigma(&self) -> Result<Weight> {
        dual_weight(&self.w, self.p)
    }

    pub fn ap(&self) -> Result<ConstantInterval> {
        cached(&self.cache.ap, || ap_star_constant(&self.w, &self.mu, self.p, &self.options.search))
    }

    pub fn a1(&self) -> Result<ConstantInterval> {
        cached(&self.cache.a1, || a1_star_constant(&self.w, &self.mu, &self.options.search))
    }

    pub fn exp(&self) -> Result<ConstantInterval> {
        cached(&self.cache.exp, || ainf_exp_constant(&self.w, &self.mu, &self.options.search))
    }

    pub fn fw(&self) -> Result<ConstantInterval> {
        cached(&self.cache.fw, || ainf_fw_constant(&self.w, &self.mu, &self.options.fw))
    }

    /// Fujii–Wilson constant of the dual weight `σ = w^{1-p'}`.
    pub fn fw_sigma(&self) -> Result<ConstantInterval> {
        cached(&self.cache.fw_sigma, || ainf_fw_constant(&self.sigma()?, &self.mu, &self.options.fw))
    }

    pub fn doubling(&self) -> Result<ConstantInterval> {
        cached(&self.cache.doubling, || doubling_constant(&self.mu))
    }

    /// Lower estimate of `‖M_s‖` on `L^p(w)`.
    pub fn strong_norm(&self) -> Result<NormEstimate> {
        cached(&self.cache.strong_norm, || {
            op_norm_estimate(MaximalFamily::Strong, self.p, &self.w, &self.mu, &self.options.norm)
        })
    }

    /// Lower estimate of the cubic maximal operator norm on `L^p(w)`.
    pub fn cubic_norm(&self) -> Result<NormEstimate> {
        if self.dim() == 1 {
            return self.strong_norm();
        }
        cached(&self.cache.cubic_norm, || {
            op_norm_estimate(MaximalFamily::Cubic, self.p, &self.w, &self.mu, &self.options.norm)
        })
    }

    /// Lower estimate of the weak-type norm of `M_s` on `L^p(w)`.
    pub fn weak_norm(&self) -> Result<NormEstimate> {
        cached(&self.cache.weak_norm, || {
            weak_norm_estimate(MaximalFamily::Strong, self.p, &self.w, &self.mu, &self.options.norm)
        })
    }

    /// Lower estimate of `‖M_s‖` on `L^{p'}(σ)`.
    pub fn dual_norm(&self) -> Result<NormEstimate> {
        cached(&self.cache.dual_norm, || {
            let sigma = self.sigma()?;
            op_norm_estimate(MaximalFamily::Strong, conjugate_exponent(self.p), &sigma, &self.mu, &self.options.norm)
        })
    }

    /// Bound on `‖M_s‖_{L^{p'}(σ)}` and whether it is proven: on Lebesgue
    /// product-weight instances `2^{p+1} U_{A_p*}`; elsewhere the lower
    /// estimate, which is only indicative.
    pub fn dual_norm_bound(&self) -> Result<(f64, bool, String)> {
        if self.has_norm_bound() {
            let u = self.ap()?.upper;
            Ok((2f64.powf(self.p + 1.0) * u, true, format!("2^(p+1) U[A_p*], U = {u}")))
        } else {
            let est = self.dual_norm()?.ratio;
            Ok((est, false, format!("lower estimate of the dual norm {est} (not a bound)")))
        }
    }
}

fn is_rank_one(grid: &crate::grid::AxisGrid, v: &[f64]) -> bool {
    let n = grid.dim();
    if n == 1 {
        return true;
    }
    let base = v[0];
    if base <= 0.0 {
        return v.iter().all(|x| *x == 0.0);
    }
    (0..grid.cell_count()).all(|c| {
        let idx = grid.multi_index(c);
        let mut prod = 1.0;
        for a in 0..n {
            let mut e = vec![0; n];
            e[a] = idx[a];
            prod *= v[grid.flat_index(&e)] / base;
        }
        let expect = prod * base;
        (v[c] - expect).abs() <= 1e-10 * expect.abs().max(v[c].abs())
    })
}

macro_rules! named_variants {
    ($ty:ident { $($var:ident => $name:literal),+ $(,)? }) => {
        impl $ty {
            pub const ALL: &'static [$ty] = &[$($ty::$var),+];

            pub fn name(&self) -> &'static str {
                match self {
                    $($ty::$var => $name),+
                }
            }
        }

        impl ::std::fmt::Display for $ty {
            fn fmt(&self, f: &mut ::std::fmt::Formatter<'_>) -> ::std::fmt::Result {
                f.write_str(self.name())
            }
        }

        impl ::std::str::FromStr for $ty {
            type Err = $crate::error::Error;

            fn from_str(s: &str) -> $crate::error::Result<Self> {
                match s {
                    $($name => Ok($ty::$var),)+
                    _ => Err($crate::error::Error::InvalidInput(format!(
                        "unknown variant '{s}' (expected one of: {})",
                        [$($name),+].join(", ")
                    ))),
                }
            }
        }
    };
}
pub(crate) use named_variants;

/// Runs a verifier body and records its wall time.
pub(crate) fn timed(mut f: impl FnMut() -> Result<VerdictReport>) -> Result<VerdictReport> {
    let start = std::time::Instant::now();
    let mut v = f()?;
    v.wall_time_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    Ok(v)
}
