//! Execution of spec tasks. Each task yields JSON results for the report,
//! plus the verdicts it produced (for the CSV table and the exit code).

use serde_json::{json, Value};
use strongweights_core::constants::{
    a1_star_constant, ainf_exp_constant, ainf_fw_constant, ap_star_constant, doubling_constant, FwOptions,
    SearchOptions,
};
use strongweights_core::maximal::{strong_maximal, FieldMode, MaximalFamily};
use strongweights_core::rising_sun::{rising_sun_1d, rising_sun_nd};
use strongweights_core::theorems::{
    resolve_theorems, rhi_worst, verify_instance, CampaignConfig, Fingerprint, Instance, VerdictReport, VerifyOptions,
};
use strongweights_core::{Error, Result};

use crate::spec::{BuiltInstance, TaskKind, TaskSpec};

/// Constants computed when a task lists none.
pub const DEFAULT_CONSTANTS: [&str; 5] = ["ap", "a1", "exp", "fw", "doubling"];

pub const DEFAULT_MAXIMAL_DEPTH: u32 = 3;

/// Settings shared by every task of one command.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub seed: u64,
    pub slack: f64,
    pub deterministic: bool,
}

#[derive(Debug, Default)]
pub struct TaskOutput {
    pub results: Vec<Value>,
    pub verdicts: Vec<VerdictReport>,
}

fn to_value<T: serde::Serialize + ?Sized>(x: &T) -> Value {
    serde_json::to_value(x).expect("report values serialize")
}

fn search_options(task: &TaskSpec) -> SearchOptions {
    task.tol.map_or_else(SearchOptions::default, SearchOptions::with_tol)
}

pub fn run_task(inst: &BuiltInstance, task: &TaskSpec, index: usize, opts: &RunOptions) -> Result<TaskOutput> {
    match task.kind {
        TaskKind::Constants => constants(inst, task),
        TaskKind::Maximal => maximal(inst, task),
        TaskKind::RisingSun => rising_sun(inst, task),
        TaskKind::Verify => verify(inst, task, index, opts),
    }
}

fn constants(inst: &BuiltInstance, task: &TaskSpec) -> Result<TaskOutput> {
    let search = search_options(task);
    let fw = FwOptions { search, ms_depth: task.depth.unwrap_or(FwOptions::default().ms_depth) };
    let names: Vec<String> = if task.variants.is_empty() {
        DEFAULT_CONSTANTS.iter().filter(|n| **n != "ap" || task.p.is_some()).map(|n| n.to_string()).collect()
    } else {
        task.variants.clone()
    };
    let mut out = TaskOutput::default();
    for name in names {
        let interval = match name.as_str() {
            "ap" => {
                let p = task.p.ok_or_else(|| Error::InvalidInput("the ap constant needs p".into()))?;
                ap_star_constant(&inst.w, &inst.mu, p, &search)?
            }
            "a1" => a1_star_constant(&inst.w, &inst.mu, &search)?,
            "exp" => ainf_exp_constant(&inst.w, &inst.mu, &search)?,
            "fw" => ainf_fw_constant(&inst.w, &inst.mu, &fw)?,
            "doubling" => doubling_constant(&inst.mu)?,
            other => {
                return Err(Error::InvalidInput(format!(
                    "unknown constant '{other}' (expected one of {})",
                    DEFAULT_CONSTANTS.join(", ")
                )))
            }
        };
        let mut v = json!({ "task": "constants", "constant": name, "interval": to_value(&interval) });
        if name == "ap" {
            v["p"] = json!(task.p);
        }
        out.results.push(v);
    }
    Ok(out)
}

fn family(name: &str) -> Result<MaximalFamily> {
    match name {
        "strong" => Ok(MaximalFamily::Strong),
        "cubic" => Ok(MaximalFamily::Cubic),
        "centered" => Ok(MaximalFamily::Centered),
        other => Err(Error::InvalidInput(format!("unknown maximal family '{other}' (strong, cubic, centered)"))),
    }
}

/// Maximal function of the weight itself on the refined lattice.
fn maximal(inst: &BuiltInstance, task: &TaskSpec) -> Result<TaskOutput> {
    let depth = task.depth.unwrap_or(DEFAULT_MAXIMAL_DEPTH);
    let names = if task.variants.is_empty() { vec!["strong".to_string()] } else { task.variants.clone() };
    let mut out = TaskOutput::default();
    for name in names {
        let fam = family(&name)?;
        let field =
            strong_maximal(inst.w.values(), &inst.mu, depth, FieldMode::Certified, fam, &search_options(task))?;
        out.results.push(json!({
            "task": "maximal",
            "family": name,
            "depth": depth,
            "function": "weight",
            "lattice": to_value(field.lattice.axes()),
            "lower": to_value(&field.lower),
            "upper": to_value(&field.upper),
        }));
    }
    Ok(out)
}

/// Rising-sun decomposition of the weight over the whole domain.
fn rising_sun(inst: &BuiltInstance, task: &TaskSpec) -> Result<TaskOutput> {
    let lambda = task.lambda.ok_or_else(|| Error::InvalidInput("rising-sun needs lambda".into()))?;
    let root = inst.grid.domain();
    let d = if inst.grid.dim() == 1 {
        rising_sun_1d(inst.w.values(), &inst.mu, &root, lambda)?
    } else {
        rising_sun_nd(inst.w.values(), &inst.mu, &root, lambda)?
    };
    let selected = d.selected_mass(&inst.mu);
    Ok(TaskOutput {
        results: vec![json!({
            "task": "rising-sun",
            "lambda": lambda,
            "decomposition": to_value(&d),
            "selected_mass": selected,
        })],
        verdicts: Vec::new(),
    })
}

pub fn instance(inst: &BuiltInstance, p: f64, id: usize, seed: u64, options: VerifyOptions) -> Result<Instance> {
    let fingerprint = Fingerprint { id, seed, shape: inst.grid.shape(), generator: "spec".into() };
    Instance::new(fingerprint, inst.mu.clone(), inst.w.clone(), p, options)
}

pub fn verify_options(tol: Option<f64>, slack: f64) -> VerifyOptions {
    let mut o = VerifyOptions { slack, ..VerifyOptions::default() };
    if let Some(t) = tol {
        o.search.tol = t;
        o.fw.search.tol = t;
    }
    o
}

fn verify(inst: &BuiltInstance, task: &TaskSpec, index: usize, opts: &RunOptions) -> Result<TaskOutput> {
    let p = task.p.ok_or_else(|| Error::InvalidInput("verify needs p".into()))?;
    let options = verify_options(task.tol, opts.slack);
    let config = CampaignConfig {
        theorems: resolve_theorems(&task.variants)?,
        deterministic: opts.deterministic,
        options,
        ..CampaignConfig::default()
    };
    let instance = instance(inst, p, index, opts.seed, options)?;
    let verdicts = verify_instance(&config, &instance);
    Ok(TaskOutput {
        results: vec![json!({ "task": "verify", "p": p, "verdicts": to_value(&verdicts) })],
        verdicts,
    })
}

/// `(x, y)` series for plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

/// Worst reverse Hölder ratio `sup ⨍w^{1+ε}/(⨍w)^{1+ε}` against `ε` on a
/// geometric grid, and the certified `A_p*` interval against the search
/// tolerance.
pub fn plot_series(inst: &BuiltInstance, p: f64, tol: Option<f64>) -> Result<Vec<Series>> {
    let instance = instance(inst, p, 0, 0, verify_options(tol, 0.0))?;
    let mut rhi = Series { name: "rhi-ratio-vs-epsilon".into(), points: Vec::new() };
    for k in 0..=24 {
        let eps = 1e-3 * 10f64.powf(k as f64 / 6.0);
        rhi.points.push((eps, rhi_worst(&instance, eps, 1.0).ratio));
    }
    let mut lower = Series { name: "ap-lower-vs-tol".into(), points: Vec::new() };
    let mut upper = Series { name: "ap-upper-vs-tol".into(), points: Vec::new() };
    for k in 1..=8 {
        let t = 10f64.powi(-k);
        let c = ap_star_constant(&inst.w, &inst.mu, p, &SearchOptions::with_tol(t))?;
        lower.points.push((t, c.lower));
        upper.points.push((t, c.upper));
    }
    Ok(vec![rhi, lower, upper])
}

pub fn series_to_csv(series: &[Series]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::InvalidInput(format!("cannot write csv: {e}"));
    w.write_record(["series", "x", "y"]).map_err(err)?;
    for s in series {
        for (x, y) in &s.points {
            w.write_record([s.name.clone(), crate::report::format_f64(*x), crate::report::format_f64(*y)])
                .map_err(err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidInput(format!("cannot write csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidInput(format!("csv is not UTF-8: {e}")))
}
