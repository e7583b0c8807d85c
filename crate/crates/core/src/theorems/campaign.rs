//! Seeded random campaigns over generated instances.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::generate::{generate, MeasureSource, WeightSource};
use crate::grid::AxisGrid;

use super::{
    empirical_rhi_range, verify_integrability_family, verify_mixed_norms, verify_open_property, verify_rhi_family,
    verify_weak_family, Fingerprint, Instance, IntegrabilityVariant, OpenVariant, RhiVariant, Status, VerdictReport,
    VerifyOptions, WeakVariant,
};

/// What a campaign generates and checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    pub count: usize,
    /// Dimensions drawn uniformly.
    pub dims: Vec<usize>,
    /// Largest number of cells per axis on the line.
    pub max_cells_1d: usize,
    /// Largest number of cells per axis in higher dimensions.
    pub max_cells_nd: usize,
    pub p_values: Vec<f64>,
    /// Random densities lie in `[1/b, b]`.
    pub density_bound: f64,
    /// Largest `ln(max w / min w)` of random weights.
    pub weight_log_ratio: f64,
    /// Theorem ids to run (`family/variant`); empty means all.
    pub theorems: Vec<String>,
    /// Worker threads; 0 picks the available parallelism.
    pub threads: usize,
    /// Drop wall times so reports are byte-identical across runs.
    pub deterministic: bool,
    #[serde(skip)]
    pub options: VerifyOptions,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            count: 200,
            dims: vec![1, 2],
            max_cells_1d: 16,
            max_cells_nd: 4,
            p_values: vec![1.5, 2.0, 3.0],
            density_bound: 8.0,
            weight_log_ratio: 8.0,
            theorems: Vec::new(),
            threads: 0,
            deterministic: false,
            options: VerifyOptions::default(),
        }
    }
}

/// Every theorem id a campaign knows.
pub fn all_theorems() -> Vec<String> {
    let mut out: Vec<String> = RhiVariant::ALL.iter().map(|v| format!("rhi/{v}")).collect();
    out.extend(IntegrabilityVariant::ALL.iter().map(|v| format!("integrability/{v}")));
    out.extend(WeakVariant::ALL.iter().map(|v| format!("weak/{v}")));
    out.extend(OpenVariant::ALL.iter().map(|v| format!("open/{v}")));
    out.push("mixed/norms".into());
    out.push("rhi/empirical-range".into());
    out
}

/// Expands names to theorem ids. A full id (`family/variant`) selects
/// itself; a bare variant name selects every family that has it, so
/// `maximal-norm` picks three theorems and `dim-free` one.
pub fn resolve_theorems(names: &[String]) -> Result<Vec<String>> {
    let known = all_theorems();
    let mut out: Vec<String> = Vec::new();
    for name in names {
        let hits: Vec<&String> = known
            .iter()
            .filter(|id| *id == name || id.split_once('/').is_some_and(|(_, v)| v == name))
            .collect();
        if hits.is_empty() {
            return Err(invalid(format!("unknown theorem or variant '{name}'")));
        }
        for id in hits {
            if !out.contains(id) {
                out.push(id.clone());
            }
        }
    }
    Ok(out)
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() || self.dims.iter().any(|d| !(1..=3).contains(d)) {
            return Err(invalid("campaign dims must be a nonempty list of values in 1..=3"));
        }
        if self.max_cells_1d < 1 || self.max_cells_nd < 1 || self.max_cells_1d > 16 || self.max_cells_nd > 16 {
            return Err(invalid("cells per axis must be between 1 and 16"));
        }
        if self.p_values.is_empty() || self.p_values.iter().any(|p| !(*p > 1.0) || !p.is_finite()) {
            return Err(invalid("campaign p values must be finite and exceed 1"));
        }
        if !(self.density_bound >= 1.0) || !(self.weight_log_ratio > 0.0) {
            return Err(invalid("density bound must be >= 1 and weight log-ratio positive"));
        }
        let known = all_theorems();
        if let Some(t) = self.theorems.iter().find(|t| !known.contains(t)) {
            return Err(invalid(format!("unknown theorem '{t}'")));
        }
        Ok(())
    }

    fn selected(&self, id: &str) -> bool {
        self.theorems.is_empty() || self.theorems.iter().any(|t| t == id)
    }
}

/// Totals over a campaign.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub instances: usize,
    pub verdicts: usize,
    pub passed: usize,
    pub failed: usize,
    pub report_only: usize,
    pub flagged: usize,
    /// Largest worst ratio per theorem id.
    pub worst: BTreeMap<String, f64>,
}

impl CampaignSummary {
    fn add(&mut self, v: &VerdictReport) {
        self.verdicts += 1;
        match v.status {
            Status::Pass => self.passed += 1,
            Status::Fail => self.failed += 1,
            Status::ReportOnly => self.report_only += 1,
        }
        if v.flagged {
            self.flagged += 1;
        }
        if let Some(r) = v.worst_ratio.filter(|r| !r.is_nan()) {
            let e = self.worst.entry(v.theorem.clone()).or_insert(r);
            *e = e.max(r);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignOutcome {
    pub seed: u64,
    pub config: CampaignConfig,
    /// Ordered by instance id, then by theorem id.
    pub verdicts: Vec<VerdictReport>,
    pub summary: CampaignSummary,
}

impl CampaignOutcome {
    pub fn passed(&self) -> bool {
        self.summary.failed == 0
    }
}

fn instance_seed(seed: u64, id: usize) -> u64 {
    // SplitMix64 finalizer over the pair.
    let mut z = seed ^ (id as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draws the instance with the given id. Depends only on `(seed, id)`.
pub fn campaign_instance(config: &CampaignConfig, seed: u64, id: usize) -> Result<Instance> {
    let s = instance_seed(seed, id);
    let mut rng = ChaCha8Rng::seed_from_u64(s);
    let dim = config.dims[rng.gen_range(0..config.dims.len())];
    let max_cells = if dim == 1 { config.max_cells_1d } else { config.max_cells_nd };
    let p = config.p_values[rng.gen_range(0..config.p_values.len())];

    let measure = match rng.gen_range(0..4) {
        0 => MeasureSource::Lebesgue,
        1 => MeasureSource::RandomDensity { bound: config.density_bound },
        2 => MeasureSource::RandomProduct { bound: config.density_bound },
        _ => MeasureSource::Gaussian { delta: if rng.gen_bool(0.5) { 1.0 } else { 2.0 } },
    };
    let (lo, hi) = match measure {
        MeasureSource::Gaussian { .. } => (-1.0, 1.0),
        _ => (0.0, 1.0),
    };
    let axes: Vec<Vec<f64>> = (0..dim)
        .map(|_| {
            let cells = rng.gen_range(1..=max_cells);
            if rng.gen_bool(0.5) {
                (0..=cells).map(|k| lo + (hi - lo) * k as f64 / cells as f64).collect()
            } else {
                // Jittered breakpoints: widths drawn in [1, 4] and normalized.
                let widths: Vec<f64> = (0..cells).map(|_| rng.gen_range(1.0..4.0)).collect();
                let total: f64 = widths.iter().sum();
                let mut acc = 0.0;
                let mut out = vec![lo];
                for w in &widths[..cells - 1] {
                    acc += w / total;
                    out.push(lo + (hi - lo) * acc);
                }
                out.push(hi);
                out
            }
        })
        .collect();
    let grid = Arc::new(AxisGrid::new(axes)?);

    let half_log = 0.5 * config.weight_log_ratio;
    let bound = rng.gen_range(0.2f64.min(half_log)..=half_log).exp().max(1.0 + 1e-9);
    let weight = match rng.gen_range(0..8) {
        0 => WeightSource::Constant { value: 1.0 },
        1 | 2 => WeightSource::Product { bound },
        3 => {
            // With at most 16 cells per axis the midpoint distances to the
            // corner vary by a factor below 400, so alpha <= 0.6 keeps the
            // log-ratio under 4.
            let alpha = rng.gen_range(0.05..0.6);
            WeightSource::Power { alpha, center: vec![lo; dim] }
        }
        _ => WeightSource::RandomLogBounded { bound },
    };
    let (mu, w) = generate(&grid, &measure, &weight, s)?;
    let fingerprint = Fingerprint {
        id,
        seed: s,
        shape: grid.shape(),
        generator: format!("{}+{}", measure.label(), weight.label()),
    };
    Instance::new(fingerprint, mu, w, p, config.options)
}

fn failed_verdict(theorem: &str, inst: &Instance, err: &crate::error::Error) -> VerdictReport {
    let mut v = VerdictReport::new(theorem, inst, "epsilon");
    v.status = Status::Fail;
    v.notes.push(format!("verifier error: {err}"));
    v
}

/// Runs every applicable selected verifier on one instance.
pub fn verify_instance(config: &CampaignConfig, inst: &Instance) -> Vec<VerdictReport> {
    let one_d = inst.dim() == 1;
    let mut jobs: Vec<(String, Box<dyn Fn() -> Result<VerdictReport> + '_>)> = Vec::new();
    for &v in RhiVariant::ALL {
        if v == RhiVariant::LineAinfty && !one_d {
            continue;
        }
        jobs.push((format!("rhi/{v}"), Box::new(move || verify_rhi_family(inst, v))));
    }
    for &v in IntegrabilityVariant::ALL {
        jobs.push((format!("integrability/{v}"), Box::new(move || verify_integrability_family(inst, v))));
    }
    for &v in WeakVariant::ALL {
        if v == WeakVariant::Weak5 && !one_d {
            continue;
        }
        jobs.push((format!("weak/{v}"), Box::new(move || verify_weak_family(inst, v))));
    }
    for &v in OpenVariant::ALL {
        if v == OpenVariant::Ainfty && !one_d {
            continue;
        }
        jobs.push((format!("open/{v}"), Box::new(move || verify_open_property(inst, v))));
    }
    jobs.push(("mixed/norms".into(), Box::new(|| verify_mixed_norms(inst))));
    jobs.push(("rhi/empirical-range".into(), Box::new(|| empirical_rhi_range(inst).map(|r| r.verdict))));

    let mut out: Vec<VerdictReport> = jobs
        .into_iter()
        .filter(|(id, _)| config.selected(id))
        .map(|(id, job)| job().unwrap_or_else(|e| failed_verdict(&id, inst, &e)))
        .collect();
    out.sort_by(|a, b| a.theorem.cmp(&b.theorem));
    if config.deterministic {
        out.iter_mut().for_each(|v| v.wall_time_ms = None);
    }
    out
}

/// Generates `config.count` instances from `seed` and verifies them.
/// Instances run concurrently; results are merged in instance order, so the
/// outcome does not depend on scheduling.
pub fn run_campaign(config: &CampaignConfig, seed: u64) -> Result<CampaignOutcome> {
    config.validate()?;
    let count = config.count;
    let threads = match config.threads {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        t => t,
    }
    .clamp(1, count.max(1));

    let slots: Mutex<Vec<Option<Result<Vec<VerdictReport>>>>> = Mutex::new(vec![None; count]);
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let id = next.fetch_add(1, Ordering::Relaxed);
                if id >= count {
                    break;
                }
                let res = campaign_instance(config, seed, id).map(|inst| verify_instance(config, &inst));
                slots.lock().expect("campaign worker panicked")[id] = Some(res);
            });
        }
    });

    let mut verdicts = Vec::new();
    let mut summary = CampaignSummary { instances: count, ..Default::default() };
    for slot in slots.into_inner().expect("campaign worker panicked") {
        for v in slot.expect("every instance is processed")? {
            summary.add(&v);
            verdicts.push(v);
        }
    }
    Ok(CampaignOutcome { seed, config: config.clone(), verdicts, summary })
}
