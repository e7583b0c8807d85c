//! Acceptance criteria AC1 to AC14. Prints one line per criterion and
//! exits nonzero if a gating criterion fails; report-only lines never gate.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use strongweights_core::constants::{a1_star_constant, ainf_exp_constant, ap_star_constant, SearchOptions};
use strongweights_core::maximal::{
    build_dyadic, majorization_check, maximal_at, strong_maximal, FieldMode, MaximalFamily,
};
use strongweights_core::rising_sun::{rising_sun_1d, rising_sun_nd};
use strongweights_core::theorems::{
    empirical_rhi_range, integrability_constant, run_campaign, verify_open_property, verify_weak_family,
    CampaignConfig, CampaignOutcome, Fingerprint, Instance, OpenVariant, Status, VerifyOptions, WeakVariant,
};
use strongweights_core::{average, level_mass, AxisGrid, GridMeasure, LevelMeasure, Rect, Weight};

type Check = std::result::Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

const BIN: &str = env!("CARGO_BIN_EXE_strongweights");
const CAMPAIGN_SEED: u64 = 20_240_601;

fn unit_grid(n: usize) -> Arc<AxisGrid> {
    Arc::new(AxisGrid::uniform(&[0.0], &[1.0], &[n]).unwrap())
}

fn w0() -> (GridMeasure, Weight) {
    let g = unit_grid(4);
    (GridMeasure::lebesgue(g.clone()), Weight::new(g, vec![1.0, 1.0, 1.0, 2.0]).unwrap())
}

fn w0_instance(p: f64) -> Instance {
    let (mu, w) = w0();
    let fp = Fingerprint { id: 0, seed: 0, shape: vec![4], generator: "w0".into() };
    let options = VerifyOptions { search: SearchOptions::with_tol(1e-11), ..VerifyOptions::default() };
    Instance::new(fp, mu, w, p, options).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

// ---------------------------------------------------------------- AC1-3

fn ac1() -> Check {
    let (mu, w) = w0();
    let t = Instant::now();
    let c = ap_star_constant(&w, &mu, 2.0, &SearchOptions::with_tol(1e-9)).map_err(|e| e.to_string())?;
    let secs = t.elapsed().as_secs_f64();
    ensure!(close(c.lower, 1.125, 1e-6), "L = {}", c.lower);
    ensure!(c.upper - c.lower <= 1e-6, "gap {}", c.upper - c.lower);
    ensure!(c.witness == Some(Rect::interval(0.5, 1.0)), "witness {:?}", c.witness);
    ensure!(secs < 1.0, "took {secs:.3} s");
    Ok(format!("L = {:.9}, U = {:.9}, witness [0.5, 1], {:.0} ms", c.lower, c.upper, secs * 1e3))
}

fn ac2() -> Check {
    let (mu, w) = w0();
    let c = a1_star_constant(&w, &mu, &SearchOptions::with_tol(1e-9)).map_err(|e| e.to_string())?;
    ensure!(close(c.lower, 2.0, 1e-6) && close(c.upper, 2.0, 1e-6), "[{}, {}]", c.lower, c.upper);
    ensure!(!c.attained, "reported attained");
    let r = c.witness.ok_or("no witness")?;
    ensure!(close(r.lo[0], 0.75, 1e-9) || close(r.hi[0], 0.75, 1e-9), "witness {r:?}");
    Ok(format!("[{:.9}, {:.9}], not attained, limit witness {r}", c.lower, c.upper))
}

fn ac3() -> Check {
    let (mu, w) = w0();
    let d = rising_sun_1d(w.values(), &mu, &Rect::interval(0.0, 1.0), 1.5).map_err(|e| e.to_string())?;
    ensure!(d.rects.len() == 1, "{} intervals", d.rects.len());
    let r = &d.rects[0];
    ensure!(close(r.lo[0], 0.5, 1e-9) && close(r.hi[0], 1.0, 1e-9), "interval {r}");
    ensure!(close(d.averages[0], 1.5, 1e-10), "average {}", d.averages[0]);
    ensure!(d.residual_max == 1.0, "residual {}", d.residual_max);
    Ok(format!("one interval {r}, average {}, residual max 1", d.averages[0]))
}

// ---------------------------------------------------------------- AC4

/// `∫_R g dμ` from cell overlaps, computed here from the grid geometry.
fn rect_integral(grid: &AxisGrid, masses: &[f64], g: &[f64], r: &Rect) -> f64 {
    (0..grid.cell_count())
        .map(|c| {
            let cell = grid.cell_rect(c);
            let frac: f64 = (0..grid.dim())
                .map(|a| ((cell.hi[a].min(r.hi[a]) - cell.lo[a].max(r.lo[a])).max(0.0)) / cell.width(a))
                .product();
            masses[c] * g[c] * frac
        })
        .sum()
}

fn ac4() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let t = Instant::now();
    let mut rects = 0;
    for k in 0..100 {
        let shape = [rng.gen_range(1..=8), rng.gen_range(1..=8)];
        let g = Arc::new(AxisGrid::uniform(&[0.0, 0.0], &[1.0, 1.0], &shape).unwrap());
        let n = g.cell_count();
        let dens: Vec<f64> = (0..n).map(|_| 8f64.powf(rng.gen_range(-0.5..0.5))).collect();
        let f: Vec<f64> = (0..n).map(|_| 8f64.powf(rng.gen_range(0.0..1.0))).collect();
        let mu = GridMeasure::from_densities(g.clone(), &dens).unwrap();
        let root = g.domain();
        let ones = vec![1.0; n];
        let total = rect_integral(&g, mu.masses(), &ones, &root);
        let avg = rect_integral(&g, mu.masses(), &f, &root) / total;
        let top = f.iter().cloned().fold(0.0, f64::max);
        if top <= avg * (1.0 + 1e-9) {
            continue;
        }
        let lambda = avg + rng.gen_range(0.05..0.95) * (top - avg);
        let d = rising_sun_nd(&f, &mu, &root, lambda).map_err(|e| format!("instance {k}: {e}"))?;
        rects += d.rects.len();
        for (i, a) in d.rects.iter().enumerate() {
            for b in &d.rects[i + 1..] {
                let disjoint = (0..2).any(|ax| a.hi[ax] <= b.lo[ax] || b.hi[ax] <= a.lo[ax]);
                ensure!(disjoint, "instance {k}: {a} and {b} overlap");
            }
        }
        let mut selected_mass = 0.0;
        let mut selected_integral = 0.0;
        for r in &d.rects {
            let m = rect_integral(&g, mu.masses(), &ones, r);
            let i = rect_integral(&g, mu.masses(), &f, r);
            ensure!((i / m - lambda).abs() <= 1e-10 * lambda, "instance {k}: average {} vs {lambda}", i / m);
            selected_mass += m;
            selected_integral += i;
        }
        ensure!(
            (lambda * selected_mass - selected_integral).abs() <= 1e-10 * selected_integral.max(1e-300),
            "instance {k}: mass identity"
        );
        // Residual: every cell not fully covered has f <= λ.
        for c in 0..n {
            let cell = g.cell_rect(c);
            let covered: f64 = d
                .rects
                .iter()
                .map(|r| (0..2).map(|a| (cell.hi[a].min(r.hi[a]) - cell.lo[a].max(r.lo[a])).max(0.0) / cell.width(a)).product::<f64>())
                .sum();
            if covered < 1.0 - 1e-9 {
                ensure!(f[c] <= lambda, "instance {k}: uncovered cell {c} has {} > {lambda}", f[c]);
            }
        }
        ensure!(d.residual_max <= lambda, "instance {k}: residual {}", d.residual_max);
    }
    let secs = t.elapsed().as_secs_f64();
    ensure!(secs < 60.0, "took {secs:.1} s");
    Ok(format!("100 instances, {rects} boxes, {secs:.2} s"))
}

// ---------------------------------------------------------------- campaigns

struct Campaigns {
    full: CampaignOutcome,
    line: CampaignOutcome,
}

fn failures(out: &CampaignOutcome, theorem: &str) -> (usize, usize) {
    let vs: Vec<_> = out.verdicts.iter().filter(|v| v.theorem == theorem).collect();
    (vs.iter().filter(|v| v.status == Status::Fail).count(), vs.len())
}

fn dims_seen(out: &CampaignOutcome, theorem: &str) -> Vec<usize> {
    let mut d: Vec<usize> =
        out.verdicts.iter().filter(|v| v.theorem == theorem).map(|v| v.instance.shape.len()).collect();
    d.sort();
    d.dedup();
    d
}

fn zero_failures(out: &CampaignOutcome, theorem: &str, expect: usize) -> Check {
    let (failed, total) = failures(out, theorem);
    ensure!(total == expect, "{theorem}: {total} verdicts, expected {expect}");
    ensure!(failed == 0, "{theorem}: {failed} of {total} failed");
    let worst = out.summary.worst.get(theorem).copied().unwrap_or(f64::NAN);
    Ok(format!("{theorem} {total}/{total} pass, worst ratio {worst:.6}"))
}

fn one_d_count(out: &CampaignOutcome) -> usize {
    (0..out.config.count)
        .filter(|id| out.verdicts.iter().any(|v| v.instance.id == *id && v.instance.shape.len() == 1))
        .count()
}

fn ac5(c: &Campaigns) -> Check {
    let line = zero_failures(&c.full, "rhi/dim-free", 200)?;
    ensure!(dims_seen(&c.full, "rhi/dim-free") == vec![1, 2], "dimensions {:?}", dims_seen(&c.full, "rhi/dim-free"));
    // W0 at p = 2, R = [0, 1], ε = 1/18.
    let (mu, w) = w0();
    let e = 1.0 / 18.0;
    let powered = Weight::new(w.grid().clone(), w.values().iter().map(|x| x.powf(1.0 + e)).collect()).unwrap();
    let r = Rect::interval(0.0, 1.0);
    let lhs = average(&powered, &mu, &r).unwrap();
    let rhs = 2.0 * average(&w, &mu, &r).unwrap().powf(1.0 + e);
    let oracle = (0.75 + 0.25 * 2f64.powf(1.0 + e)) / (2.0 * 1.25f64.powf(1.0 + e));
    ensure!(close(lhs / rhs, oracle, 1e-12), "ratio {} vs closed form {oracle}", lhs / rhs);
    ensure!(close(lhs / rhs, 0.5016, 1e-4), "ratio {}", lhs / rhs);
    Ok(format!("{line}; W0 [0,1]: {lhs:.6}/{rhs:.6} = {:.6}", lhs / rhs))
}

fn ac6(c: &Campaigns) -> Check {
    let line = zero_failures(&c.full, "integrability/a1-full", 200)?;
    let (mu, w) = w0();
    let k = a1_star_constant(&w, &mu, &SearchOptions::with_tol(1e-10)).unwrap().upper;
    let s = 1.5;
    let powered = Weight::new(w.grid().clone(), w.values().iter().map(|x| x.powf(s)).collect()).unwrap();
    let r = Rect::interval(0.0, 1.0);
    let lhs = average(&powered, &mu, &r).unwrap();
    let rhs = integrability_constant(s, k) * average(&w, &mu, &r).unwrap().powf(s);
    let (lhs_cf, rhs_cf) = (0.75 + 0.25 * 2f64.powf(1.5), 3.0 * 1.25f64.powf(1.5));
    ensure!(close(lhs, lhs_cf, 1e-9) && close(lhs, 1.457107, 1e-5), "LHS {lhs}");
    ensure!(close(rhs, rhs_cf, 1e-5) && close(rhs, 4.192627, 1e-5), "RHS {rhs}");
    ensure!(lhs <= rhs, "LHS > RHS");
    Ok(format!("{line}; W0 s = 1.5: {lhs:.6} <= {rhs:.6}"))
}

fn ac7(c: &Campaigns) -> Check {
    let n = one_d_count(&c.line);
    ensure!(n == 200, "{n} one-dimensional instances");
    let line = zero_failures(&c.line, "rhi/line-ainfty", 200)?;
    let generators: Vec<&str> =
        c.line.verdicts.iter().filter(|v| v.theorem == "rhi/line-ainfty").map(|v| v.instance.generator.as_str()).collect();
    let dense = generators.iter().filter(|g| g.starts_with("random-density")).count();
    ensure!(dense > 0, "no random-density instances");
    Ok(format!("{line}; {dense} random-density instances (density ratio up to 64)"))
}

fn ac8(c: &Campaigns) -> Check {
    let level = zero_failures(&c.full, "weak/level", 200)?;
    zero_failures(&c.full, "weak/exchange", 200)?;
    let weak5 = zero_failures(&c.line, "weak/weak-5", 200)?;
    let full_1d = one_d_count(&c.full);
    zero_failures(&c.full, "weak/weak-5", full_1d)?;

    let inst = w0_instance(2.0);
    let (mu, w) = w0();
    let r = Rect::interval(0.0, 1.0);
    let u = inst.ap().unwrap().upper;
    let lhs = level_mass(&w, &mu, &r, 1.5, true, LevelMeasure::Weighted).unwrap();
    let cut = average(&w, &mu, &r).unwrap() / (2.0 * u);
    let rhs = 2.0 * 1.5 * level_mass(&w, &mu, &r, cut, true, LevelMeasure::Mu).unwrap();
    ensure!(close(lhs, 0.5, 1e-12) && close(rhs, 3.0, 1e-12), "LHS {lhs}, RHS {rhs}");
    let ex = verify_weak_family(&inst, WeakVariant::Exchange).unwrap();
    ensure!(ex.rects_checked == 1000 && ex.status == Status::Pass, "exchange on W0: {ex:?}");
    Ok(format!("{level}; {weak5}; W0 λ = 1.5: {lhs} <= {rhs}; 1000 exchange pairs pass"))
}

fn ac11(c: &Campaigns) -> Check {
    let full_1d = one_d_count(&c.full);
    zero_failures(&c.full, "open/ainfty", full_1d)?;
    let line = zero_failures(&c.line, "open/ainfty", 200)?;
    let g = unit_grid(3);
    let fp = Fingerprint { id: 0, seed: 0, shape: vec![3], generator: "flat".into() };
    let inst =
        Instance::new(fp, GridMeasure::lebesgue(g.clone()), Weight::constant(g, 1.0).unwrap(), 2.0, VerifyOptions::default())
            .unwrap();
    let v = verify_open_property(&inst, OpenVariant::Ainfty).unwrap();
    let eps = v.parameter.unwrap();
    let lower = v.diagnostics["lower_a_p_minus_eps"];
    let bound = v.diagnostics["bound"];
    ensure!(close(eps, 0.2, 1e-6), "ε = {eps}");
    ensure!(close(lower, 1.0, 1e-9) && close(bound, 2.0, 1e-6), "{lower} <= {bound}");
    Ok(format!("{line} (+{full_1d} from the mixed campaign); w = 1: ε = {eps:.6}, {lower:.6} <= {bound:.6}"))
}

fn ac12(c: &Campaigns) -> Check {
    let line = zero_failures(&c.full, "rhi/empirical-range", 200)?;
    let r = empirical_rhi_range(&w0_instance(2.0)).unwrap();
    let d = r.candidates.iter().find(|c| c.name == "dim-free").ok_or("no dim-free candidate")?;
    ensure!(close(d.value, 1.0 / 18.0, 1e-9), "dim-free candidate {}", d.value);
    ensure!(r.candidates.iter().filter(|c| c.sound).all(|c| c.value <= r.bracket.1), "candidate above range");
    Ok(format!("{line}; W0 dim-free candidate {:.12}, empirical ε in [{:.4}, {:.4}]", d.value, r.bracket.0, r.bracket.1))
}

// ---------------------------------------------------------------- AC9-10

fn ac9() -> Check {
    let (mu, w) = w0();
    let m = maximal_at(w.values(), &mu, &[0.5], MaximalFamily::Strong, &SearchOptions::with_tol(1e-12)).unwrap();
    ensure!(close(m.lower, 1.5, 1e-9) && close(m.upper, 1.5, 1e-9), "M_s W0(0.5) in [{}, {}]", m.lower, m.upper);
    let field =
        strong_maximal(w.values(), &mu, 8, FieldMode::Lower, MaximalFamily::Strong, &SearchOptions::default()).unwrap();
    let nodes = field.lattice.cell_count();
    ensure!(nodes >= 1024, "{nodes} nodes");
    let integral = field.lower_integral(1.0, None);
    let exact = 0.75 + 0.25 * 4f64.ln() + 0.5;
    ensure!(close(exact, 1.596574, 1e-6), "closed form {exact}");
    ensure!(close(integral, exact, 1e-3), "integral {integral} vs {exact}");
    Ok(format!("M_s W0(0.5) = {:.12}; integral {integral:.6} vs {exact:.6} at {nodes} nodes", m.lower))
}

fn ac10() -> Check {
    let mu = GridMeasure::new(unit_grid(2), vec![0.5, 1.5]).unwrap();
    let root = Rect::interval(0.0, 1.0);
    let cut = build_dyadic(&mu, &root, 1).unwrap().leaves()[0].hi[0];
    ensure!(close(cut, 2.0 / 3.0, 1e-12), "cut {cut}");

    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let g = Arc::new(AxisGrid::uniform(&[0.0, 0.0], &[1.0, 1.0], &[5, 4]).unwrap());
    let dens: Vec<f64> = (0..20).map(|_| rng.gen_range(0.2..3.0)).collect();
    let mu2 = GridMeasure::from_densities(g.clone(), &dens).unwrap();
    let root2 = g.domain();
    let dg = build_dyadic(&mu2, &root2, 3).unwrap();
    let total = rect_integral(&g, mu2.masses(), &[1.0; 20], &root2);
    for (level, rects) in dg.levels.iter().enumerate() {
        let want = total / rects.len() as f64;
        for r in rects {
            let m = rect_integral(&g, mu2.masses(), &[1.0; 20], r);
            ensure!((m - want).abs() <= 1e-12 * total, "level {level}: mass {m} vs {want}");
        }
    }

    let (mu0, w) = w0();
    let m2 = majorization_check(&w, &mu0, &root, 2).unwrap().constant;
    let m1 = majorization_check(&w, &mu0, &root, 1).unwrap().constant;
    ensure!(m2 == 1.0, "depth 2: {m2}");
    ensure!(close(m1, 4.0 / 3.0, 1e-12), "depth 1: {m1}");
    Ok(format!("cut {cut:.15}; equal masses on 3 levels in 2D; majorization 1 and {m1:.15}"))
}

// ---------------------------------------------------------------- AC13

fn ac13() -> Check {
    let dir = std::env::temp_dir().join(format!("strongweights-ac13-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let run = |args: &[&str]| Command::new(BIN).args(args).env_remove("STRONGWEIGHTS_THREADS").output().unwrap();
    let mut bytes = Vec::new();
    for name in ["a.json", "b.json"] {
        let path = dir.join(name);
        let out = run(&["suite", "--seed", "7", "--deterministic", "--count", "40", "--out", path.to_str().unwrap()]);
        ensure!(out.status.code() == Some(0), "suite exit {:?}", out.status.code());
        bytes.push(std::fs::read(&path).unwrap());
    }
    ensure!(bytes[0] == bytes[1], "reports differ");
    let w0 = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../specs/w0.toml");
    let w0 = w0.to_str().unwrap();
    let ok = run(&["verify", "--variant", "dim-free", "--p", "2", "--spec", w0]);
    let fail = run(&["verify", "--variant", "dim-free", "--p", "2", "--spec", w0, "--slack=-0.6"]);
    let bad = run(&["constants", "--p", "1", "--spec", w0]);
    let codes = (ok.status.code(), fail.status.code(), bad.status.code());
    ensure!(codes == (Some(0), Some(1), Some(2)), "exit codes {codes:?}");
    ensure!(
        String::from_utf8_lossy(&bad.stderr).contains("p must exceed 1 for A_p*; use a1 task for A_1*"),
        "p = 1 message"
    );
    let _ = std::fs::remove_dir_all(&dir);
    Ok(format!("two 40-instance suites byte-identical ({} bytes); exit codes 0/1/2", bytes[0].len()))
}

// ---------------------------------------------------------------- AC14

/// Random one-dimensional instance with breakpoints on multiples of 0.01.
struct Line {
    bps: Vec<f64>,
    dens: Vec<f64>,
    w: Vec<f64>,
}

impl Line {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        let n = rng.gen_range(1..=5);
        let mut cuts: Vec<u32> = Vec::new();
        while cuts.len() < n - 1 {
            let c = rng.gen_range(1..100);
            if !cuts.contains(&c) {
                cuts.push(c);
            }
        }
        cuts.sort();
        let mut bps = vec![0.0];
        bps.extend(cuts.iter().map(|&c| c as f64 / 100.0));
        bps.push(1.0);
        let dens = (0..n).map(|_| 8f64.powf(rng.gen_range(-0.5..0.5))).collect();
        let w = (0..n).map(|_| rng.gen_range(-2.0f64..2.0).exp()).collect();
        Self { bps, dens, w }
    }

    fn cell_of(&self, x: f64) -> usize {
        (0..self.w.len()).rev().find(|&c| self.bps[c] <= x).unwrap_or(0)
    }

    /// `∫_0^x g dμ` for a per-cell function `g`.
    fn cumulative(&self, g: &[f64], x: f64) -> f64 {
        let mut acc = 0.0;
        for c in 0..self.w.len() {
            let (a, b) = (self.bps[c], self.bps[c + 1]);
            if x <= a {
                break;
            }
            acc += self.dens[c] * g[c] * (x.min(b) - a);
        }
        acc
    }
}

/// Brute force over all endpoint pairs on the 1e-4 lattice. A_1* also takes
/// the one-sided limits at breakpoints, where its supremum lives.
fn brute_force(line: &Line, p: f64) -> (f64, f64, f64) {
    let steps = 10_000usize;
    let xs: Vec<f64> = (0..=steps).map(|k| k as f64 / steps as f64).collect();
    let ones = vec![1.0; line.w.len()];
    let dual: Vec<f64> = line.w.iter().map(|w| w.powf(-1.0 / (p - 1.0))).collect();
    let logs: Vec<f64> = line.w.iter().map(|w| w.ln()).collect();
    let cum = |g: &[f64]| -> Vec<f64> { xs.iter().map(|&x| line.cumulative(g, x)).collect() };
    let (m, wi, si, li) = (cum(&ones), cum(&line.w), cum(&dual), cum(&logs));
    let at_bp: Vec<Option<usize>> = xs
        .iter()
        .map(|&x| line.bps.iter().position(|&b| (b - x).abs() < 1e-12))
        .collect();
    let right_cell: Vec<usize> = xs.iter().map(|&x| line.cell_of(x)).collect();
    let left_cell: Vec<usize> = xs.iter().map(|&x| line.cell_of(x - 1e-9).min(line.w.len() - 1)).collect();
    let pow = |x: f64| -> f64 {
        if p == 2.0 {
            x
        } else if p == 3.0 {
            x * x
        } else {
            x.powf(p - 1.0)
        }
    };
    let (mut ap, mut exp, mut a1) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..steps {
        for j in i + 1..=steps {
            let mass = m[j] - m[i];
            let avg = (wi[j] - wi[i]) / mass;
            ap = ap.max(avg * pow((si[j] - si[i]) / mass));
            exp = exp.max(avg * (-(li[j] - li[i]) / mass).exp());
            let (ca, cb) = (right_cell[i], left_cell[j]);
            let mut low = f64::INFINITY;
            for c in ca..=cb {
                low = low.min(line.w[c]);
            }
            let mut best = low;
            if let Some(b) = at_bp[j] {
                if b < line.w.len() {
                    best = best.min(line.w[b]);
                }
            }
            if let Some(b) = at_bp[i] {
                if b > 0 {
                    best = best.min(line.w[b - 1]);
                }
            }
            a1 = a1.max(avg / best);
        }
    }
    (ap, exp, a1)
}

fn ac14() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let opts = SearchOptions::with_tol(1e-9);
    let mut worst_rel: f64 = 0.0;
    for k in 0..50 {
        let line = Line::random(&mut rng);
        let p = [1.5, 2.0, 3.0][rng.gen_range(0..3)];
        let g = Arc::new(AxisGrid::new(vec![line.bps.clone()]).unwrap());
        let mu = GridMeasure::from_densities(g.clone(), &line.dens).unwrap();
        let w = Weight::new(g, line.w.clone()).unwrap();
        let (b_ap, b_exp, b_a1) = brute_force(&line, p);
        let certified = [
            ("ap", ap_star_constant(&w, &mu, p, &opts).unwrap(), b_ap),
            ("exp", ainf_exp_constant(&w, &mu, &opts).unwrap(), b_exp),
            ("a1", a1_star_constant(&w, &mu, &opts).unwrap(), b_a1),
        ];
        for (name, c, b) in certified {
            ensure!(b <= c.upper * (1.0 + 1e-9), "instance {k} {name}: brute force {b} above U = {}", c.upper);
            let rel = (c.lower - b).abs() / b;
            ensure!(rel <= 1e-3, "instance {k} {name}: L = {} vs brute force {b}", c.lower);
            worst_rel = worst_rel.max(rel);
        }
    }
    Ok(format!("50 instances x 3 constants; brute force below U, max |L - B|/B = {worst_rel:.2e}"))
}

// ---------------------------------------------------------------- report-only

fn mixed_stability(c: &Campaigns) -> Check {
    let other = run_campaign(
        &CampaignConfig { count: 60, deterministic: true, theorems: vec!["mixed/norms".into()], ..CampaignConfig::default() },
        CAMPAIGN_SEED + 1,
    )
    .map_err(|e| e.to_string())?;
    let medians = |out: &CampaignOutcome| {
        let mut by: std::collections::BTreeMap<String, Vec<f64>> = Default::default();
        for v in out.verdicts.iter().filter(|v| v.theorem == "mixed/norms") {
            for (k, x) in v.diagnostics.iter().filter(|(k, _)| k.starts_with("ratio/")) {
                by.entry(k.clone()).or_default().push(*x);
            }
        }
        by.into_iter()
            .map(|(k, mut xs)| {
                xs.sort_by(f64::total_cmp);
                let finite = xs.iter().all(|x| x.is_finite() && *x > 1e-6);
                (k, xs[xs.len() / 2], finite)
            })
            .collect::<Vec<_>>()
    };
    let (a, b) = (medians(&c.full), medians(&other));
    let mut parts = Vec::new();
    let mut ok = true;
    for (k, ma, fa) in &a {
        if let Some((_, mb, fb)) = b.iter().find(|(kb, _, _)| kb == k) {
            let drift = (ma - mb).abs() / ma.max(*mb);
            ok &= *fa && *fb && drift <= 0.1;
            parts.push(format!("{k} median {ma:.3}/{mb:.3}"));
        }
    }
    let text = parts.join(", ");
    if ok {
        Ok(text)
    } else {
        Err(text)
    }
}

// ---------------------------------------------------------------- driver

fn record(lines: &mut Vec<(String, bool, Check)>, id: &str, gating: bool, f: impl FnOnce() -> Check) {
    let t = Instant::now();
    let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into());
        Err(format!("panicked: {msg}"))
    });
    let res = res.map(|s| format!("{s} [{:.1} s]", t.elapsed().as_secs_f64()));
    let (tag, text) = match &res {
        Ok(s) => (if gating { "PASS" } else { "REPORT ok" }, s.clone()),
        Err(s) => (if gating { "FAIL" } else { "REPORT unstable" }, s.clone()),
    };
    println!("{id:<5} {tag:<16} {text}");
    lines.push((id.into(), gating, res));
}

fn main() {
    // `cargo test -- --list` and filters: this target has a single check.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let mut lines = Vec::new();
    record(&mut lines, "AC1", true, ac1);
    record(&mut lines, "AC2", true, ac2);
    record(&mut lines, "AC3", true, ac3);
    record(&mut lines, "AC4", true, ac4);

    let t = Instant::now();
    let campaigns = catch_unwind(|| {
        let full = run_campaign(
            &CampaignConfig { count: 200, deterministic: true, ..CampaignConfig::default() },
            CAMPAIGN_SEED,
        )
        .expect("mixed campaign runs");
        let line = run_campaign(
            &CampaignConfig {
                count: 200,
                dims: vec![1],
                deterministic: true,
                theorems: vec!["rhi/line-ainfty".into(), "weak/weak-5".into(), "open/ainfty".into()],
                ..CampaignConfig::default()
            },
            CAMPAIGN_SEED,
        )
        .expect("line campaign runs");
        Campaigns { full, line }
    });
    println!(
        "      campaigns: 200 mixed-dimension instances (all theorems) and 200 one-dimensional, {:.1} s",
        t.elapsed().as_secs_f64()
    );
    match &campaigns {
        Ok(c) => {
            record(&mut lines, "AC5", true, || ac5(c));
            record(&mut lines, "AC6", true, || ac6(c));
            record(&mut lines, "AC7", true, || ac7(c));
            record(&mut lines, "AC8", true, || ac8(c));
        }
        Err(_) => {
            for id in ["AC5", "AC6", "AC7", "AC8"] {
                record(&mut lines, id, true, || Err("campaign panicked".into()));
            }
        }
    }
    record(&mut lines, "AC9", true, ac9);
    record(&mut lines, "AC10", true, ac10);
    match &campaigns {
        Ok(c) => {
            record(&mut lines, "AC11", true, || ac11(c));
            record(&mut lines, "AC12", true, || ac12(c));
        }
        Err(_) => {
            for id in ["AC11", "AC12"] {
                record(&mut lines, id, true, || Err("campaign panicked".into()));
            }
        }
    }
    record(&mut lines, "AC13", true, ac13);
    record(&mut lines, "AC14", true, ac14);
    if let Ok(c) = &campaigns {
        record(&mut lines, "MIXED", false, || mixed_stability(c));
    }

    let failed: Vec<&str> = lines.iter().filter(|(_, g, r)| *g && r.is_err()).map(|(id, _, _)| id.as_str()).collect();
    if failed.is_empty() {
        println!("acceptance: all 14 criteria pass");
    } else {
        println!("acceptance: failing {}", failed.join(", "));
        std::process::exit(1);
    }
}
