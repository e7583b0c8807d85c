//! Instance spec files (TOML). The format is documented in `docs/FORMAT.md`.

use std::ops::Range;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use strongweights_core::generate::{MeasureSource, WeightSource};
use strongweights_core::{AxisGrid, Error, GridMeasure, Result, Weight};
use toml::Spanned;

/// The only schema version understood.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub schema: Spanned<u32>,
    pub domain: Spanned<DomainSpec>,
    pub grid: Spanned<GridSpec>,
    #[serde(default = "lebesgue")]
    pub measure: Spanned<MeasureSpec>,
    pub weight: Spanned<WeightSpec>,
    #[serde(default)]
    pub tasks: Vec<Spanned<TaskSpec>>,
}

fn lebesgue() -> Spanned<MeasureSpec> {
    Spanned::new(0..0, MeasureSpec::Lebesgue)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

/// Exactly one of `cells` and `breakpoints`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub breakpoints: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MeasureSpec {
    Lebesgue,
    Explicit { masses: Vec<f64> },
    Product { factors: Vec<Vec<f64>> },
    RandomProduct { bound: f64, seed: u64 },
    Gaussian { delta: f64 },
    RandomDensity { bound: f64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WeightSpec {
    Explicit { values: Vec<f64> },
    Constant { value: f64 },
    Power { alpha: f64, center: Vec<f64> },
    RandomLogBounded { bound: f64, seed: u64 },
    Product { bound: f64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    Constants,
    Maximal,
    RisingSun,
    Verify,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub kind: TaskKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub variants: Vec<String>,
}

impl TaskSpec {
    pub fn new(kind: TaskKind) -> Self {
        Self { kind, p: None, depth: None, tol: None, lambda: None, variants: Vec::new() }
    }
}

/// Core objects built from a spec.
#[derive(Debug, Clone)]
pub struct BuiltInstance {
    pub grid: Arc<AxisGrid>,
    pub mu: GridMeasure,
    pub w: Weight,
    /// True when the measure is a tensor product by construction.
    pub product_measure: bool,
}

/// `(line, column)`, both 1-based, of a byte offset.
fn position(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(offset, |nl| offset - nl - 1) + 1;
    (line, column)
}

fn parse_error(text: &str, span: Option<Range<usize>>, message: impl Into<String>) -> Error {
    let (line, column) = span.map_or((1, 1), |s| position(text, s.start));
    Error::Parse { line, column, message: message.into() }
}

/// Strips the library's error-kind prefix so positioned messages read
/// naturally.
fn reason(err: &Error) -> String {
    match err {
        Error::InvalidInput(m) | Error::Degenerate(m) | Error::Precondition(m) => m.clone(),
        other => other.to_string(),
    }
}

/// Parses and validates a spec.
pub fn parse_spec(text: &str) -> Result<InstanceSpec> {
    let spec: InstanceSpec = toml::from_str(text).map_err(|e| parse_error(text, e.span(), e.message().trim()))?;
    spec.validate_in(text)?;
    Ok(spec)
}

impl InstanceSpec {
    /// A spec with explicit breakpoints, masses and weight values.
    pub fn explicit(mu: &GridMeasure, w: &Weight, tasks: Vec<TaskSpec>) -> Self {
        let grid = mu.grid();
        let d = grid.domain();
        Self {
            schema: Spanned::new(0..0, SCHEMA_VERSION),
            domain: Spanned::new(0..0, DomainSpec { lo: d.lo.clone(), hi: d.hi.clone() }),
            grid: Spanned::new(0..0, GridSpec { cells: None, breakpoints: Some(grid.axes().to_vec()) }),
            measure: Spanned::new(0..0, MeasureSpec::Explicit { masses: mu.masses().to_vec() }),
            weight: Spanned::new(0..0, WeightSpec::Explicit { values: w.values().to_vec() }),
            tasks: tasks.into_iter().map(|t| Spanned::new(0..0, t)).collect(),
        }
    }

    pub fn tasks(&self) -> impl Iterator<Item = &TaskSpec> {
        self.tasks.iter().map(|t| t.get_ref())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidInput(format!("cannot serialize spec: {e}")))
    }

    /// Builds the grid, measure and weight.
    pub fn build(&self) -> Result<BuiltInstance> {
        self.build_in("")
    }

    fn validate_in(&self, text: &str) -> Result<()> {
        if *self.schema.get_ref() != SCHEMA_VERSION {
            return Err(parse_error(
                text,
                Some(self.schema.span()),
                format!("unsupported schema version {} (expected {SCHEMA_VERSION})", self.schema.get_ref()),
            ));
        }
        for t in &self.tasks {
            let task = t.get_ref();
            let bad = |m: String| parse_error(text, Some(t.span()), m);
            if let Some(p) = task.p {
                if !(p > 1.0) || !p.is_finite() {
                    return Err(bad(format!("p must exceed 1 for A_p*; use a1 task for A_1* (got {p})")));
                }
            }
            if let Some(tol) = task.tol {
                if !(tol > 0.0) {
                    return Err(bad(format!("tol must be positive, got {tol}")));
                }
            }
            match task.kind {
                TaskKind::RisingSun if task.lambda.map_or(true, |l| !(l > 0.0) || !l.is_finite()) => {
                    return Err(bad("rising-sun task needs a positive finite lambda".into()));
                }
                TaskKind::Verify if task.p.is_none() => return Err(bad("verify task needs p".into())),
                _ => {}
            }
        }
        self.build_in(text).map(|_| ())
    }

    fn build_in(&self, text: &str) -> Result<BuiltInstance> {
        let at = |span: Range<usize>, e: Error| {
            if text.is_empty() {
                e
            } else {
                parse_error(text, Some(span), reason(&e))
            }
        };
        let dom = self.domain.get_ref();
        let dom_err = |m: String| at(self.domain.span(), Error::InvalidInput(m));
        if dom.lo.is_empty() || dom.lo.len() != dom.hi.len() {
            return Err(dom_err("domain lo and hi must be nonempty and of equal length".into()));
        }
        if let Some(a) = (0..dom.lo.len()).find(|&a| !(dom.lo[a] < dom.hi[a]) || !dom.hi[a].is_finite()) {
            return Err(dom_err(format!("domain is empty or unbounded on axis {a}")));
        }

        let g = self.grid.get_ref();
        let grid_err = |e: Error| at(self.grid.span(), e);
        let grid = match (&g.cells, &g.breakpoints) {
            (Some(cells), None) => {
                if cells.iter().any(|&c| c == 0) {
                    return Err(grid_err(Error::InvalidInput("cell counts must be positive".into())));
                }
                AxisGrid::uniform(&dom.lo, &dom.hi, cells).map_err(grid_err)?
            }
            (None, Some(axes)) => {
                let grid = AxisGrid::new(axes.clone()).map_err(grid_err)?;
                if grid.dim() != dom.lo.len() {
                    return Err(grid_err(Error::InvalidInput("breakpoints and domain disagree in dimension".into())));
                }
                if let Some(a) = (0..grid.dim())
                    .find(|&a| grid.axis(a)[0] != dom.lo[a] || *grid.axis(a).last().unwrap() != dom.hi[a])
                {
                    return Err(grid_err(Error::InvalidInput(format!(
                        "breakpoints on axis {a} must start at domain lo and end at domain hi"
                    ))));
                }
                grid
            }
            _ => {
                return Err(grid_err(Error::InvalidInput("grid needs exactly one of cells and breakpoints".into())));
            }
        };
        let grid = Arc::new(grid);

        let (measure, mseed) = self.measure.get_ref().source();
        let (weight, wseed) = self.weight.get_ref().source();
        if let MeasureSource::Explicit { masses } = &measure {
            if let Some(i) = masses.iter().position(|m| !(*m >= 0.0) || !m.is_finite()) {
                return Err(at(
                    self.measure.span(),
                    Error::InvalidInput(format!("mass at index {i} is negative or not finite")),
                ));
            }
        }
        if let WeightSource::Explicit { values } = &weight {
            if let Some(i) = values.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
                return Err(at(
                    self.weight.span(),
                    Error::InvalidInput(format!("weight value at index {i} is not positive and finite")),
                ));
            }
        }
        let mu = measure.build(&grid, mseed).map_err(|e| at(self.measure.span(), e))?;
        let w = weight.build(&grid, wseed).map_err(|e| at(self.weight.span(), e))?;
        let product_measure = measure.is_product(grid.dim());
        Ok(BuiltInstance { grid, mu, w, product_measure })
    }
}

impl MeasureSpec {
    pub fn source(&self) -> (MeasureSource, u64) {
        match self.clone() {
            MeasureSpec::Lebesgue => (MeasureSource::Lebesgue, 0),
            MeasureSpec::Explicit { masses } => (MeasureSource::Explicit { masses }, 0),
            MeasureSpec::Product { factors } => (MeasureSource::Product { factors }, 0),
            MeasureSpec::RandomProduct { bound, seed } => (MeasureSource::RandomProduct { bound }, seed),
            MeasureSpec::Gaussian { delta } => (MeasureSource::Gaussian { delta }, 0),
            MeasureSpec::RandomDensity { bound, seed } => (MeasureSource::RandomDensity { bound }, seed),
        }
    }
}

impl WeightSpec {
    pub fn source(&self) -> (WeightSource, u64) {
        match self.clone() {
            WeightSpec::Explicit { values } => (WeightSource::Explicit { values }, 0),
            WeightSpec::Constant { value } => (WeightSource::Constant { value }, 0),
            WeightSpec::Power { alpha, center } => (WeightSource::Power { alpha, center }, 0),
            WeightSpec::RandomLogBounded { bound, seed } => (WeightSource::RandomLogBounded { bound }, seed),
            WeightSpec::Product { bound, seed } => (WeightSource::Product { bound }, seed),
        }
    }
}
