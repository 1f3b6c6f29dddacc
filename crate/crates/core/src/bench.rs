// SPDX-License-Identifier: Apache-2.0

//! Synthetic designs and the comparison and ablation experiments.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::model::{BasePpa, Block, Design, Die, HardIp, Net, Technology};
use crate::orchestrator::{run, LogEntry, Method, MmfpSolution, RunConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TechSpec {
    pub id: String,
    pub scale_to_oldest: f64,
    pub defect_density: f64,
    pub alpha: f64,
    pub cost_per_area: f64,
    /// Multiplier range applied to the oldest-technology power.
    pub power_factor: (f64, f64),
    /// Multiplier range applied to the oldest-technology TNS magnitude.
    pub tns_factor: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub n_blocks: usize,
    /// Defaults to `round(1.5 · n_blocks)`.
    pub n_nets: Option<usize>,
    /// Probability of adding another pin past the first two.
    pub degree_tail: f64,
    pub max_degree: usize,
    /// Extra pins are drawn within this index distance of the first pin.
    pub locality: Option<usize>,
    /// First entry is the oldest technology.
    pub technologies: Vec<TechSpec>,
    /// Technology index of each die.
    pub dies: Vec<usize>,
    pub area_range: (f64, f64),
    /// Relative noise on the scaled area of newer technologies.
    pub area_noise: f64,
    pub power_range: (f64, f64),
    pub tns_range: (f64, f64),
    pub kappa_range: (f64, f64),
    pub ratio_options: Vec<f64>,
    pub hard_ips: usize,
    pub seed: u64,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        Self {
            n_blocks: 25,
            n_nets: None,
            degree_tail: 0.35,
            max_degree: 8,
            locality: None,
            technologies: vec![
                TechSpec {
                    id: "45nm".into(),
                    scale_to_oldest: 1.0,
                    defect_density: 0.09,
                    alpha: 10.0,
                    cost_per_area: 1.0,
                    power_factor: (1.0, 1.0),
                    tns_factor: (1.0, 1.0),
                },
                TechSpec {
                    id: "7nm".into(),
                    scale_to_oldest: 9.0,
                    defect_density: 0.09,
                    alpha: 10.0,
                    cost_per_area: 2.5,
                    power_factor: (0.4, 0.6),
                    tns_factor: (0.3, 0.6),
                },
            ],
            dies: vec![0, 1],
            area_range: (2000.0, 12000.0),
            area_noise: 0.1,
            power_range: (20.0, 80.0),
            tns_range: (10.0, 60.0),
            kappa_range: (0.0, 0.3),
            ratio_options: vec![0.5, 0.75, 1.0, 4.0 / 3.0, 2.0],
            hard_ips: 0,
            seed: 0,
        }
    }
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::Config(m.into()));
        if self.n_blocks == 0 || self.dies.is_empty() || self.technologies.is_empty() {
            return bad("need at least one block, die and technology");
        }
        if self.dies.iter().any(|&t| t >= self.technologies.len()) {
            return bad("die technology index out of range");
        }
        if !(self.area_range.0 > 0.0 && self.area_range.0 <= self.area_range.1) {
            return bad("area range must be positive and ordered");
        }
        if !(self.power_range.0 >= 0.0 && self.power_range.0 <= self.power_range.1)
            || !(self.tns_range.0 >= 0.0 && self.tns_range.0 <= self.tns_range.1)
            || !(self.kappa_range.0 >= 0.0 && self.kappa_range.0 <= self.kappa_range.1)
        {
            return bad("power, tns and kappa ranges must be non-negative and ordered");
        }
        if !(0.0..1.0).contains(&self.degree_tail) || self.max_degree < 2 {
            return bad("degree tail must lie in [0, 1) and max degree be >= 2");
        }
        if !(0.0..1.0).contains(&self.area_noise) {
            return bad("area noise must lie in [0, 1)");
        }
        if self.ratio_options.is_empty() || self.ratio_options.iter().any(|r| !(*r > 0.0)) {
            return bad("ratio options must be positive");
        }
        if self.hard_ips > self.n_blocks {
            return bad("more hard IPs than blocks");
        }
        Ok(())
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.gen_range(lo..hi)
    } else {
        lo
    }
}

/// Generates a design; identical specs give identical designs.
pub fn generate(spec: &GeneratorSpec) -> Result<Design, ModelError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let technologies: Vec<Technology> = spec
        .technologies
        .iter()
        .map(|t| Technology {
            id: t.id.clone(),
            scale_to_oldest: t.scale_to_oldest,
            defect_density: t.defect_density,
            alpha: t.alpha,
            cost_per_area: t.cost_per_area,
        })
        .collect();
    let n = spec.n_blocks;
    let mut blocks: Vec<Block> = (0..n)
        .map(|i| {
            let area = uniform(&mut rng, spec.area_range);
            let power = uniform(&mut rng, spec.power_range);
            let tns = uniform(&mut rng, spec.tns_range);
            let kappa = uniform(&mut rng, spec.kappa_range);
            let ppa = spec
                .technologies
                .iter()
                .map(|t| {
                    let noise = 1.0 + uniform(&mut rng, (-spec.area_noise, spec.area_noise));
                    let noise = if t.scale_to_oldest == 1.0 { 1.0 } else { noise };
                    Some(BasePpa {
                        area: area / t.scale_to_oldest * noise,
                        power: power * uniform(&mut rng, t.power_factor),
                        tns_magnitude: tns * uniform(&mut rng, t.tns_factor),
                        ratio_penalty: kappa,
                    })
                })
                .collect();
            Block {
                id: format!("b{i}"),
                ppa,
                ratio_options: spec.ratio_options.clone(),
                hard_ip: None,
            }
        })
        .collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    for &b in order.iter().take(spec.hard_ips) {
        lock_block(&mut blocks[b], 0, &mut rng);
    }

    let n_nets = if n < 2 {
        0
    } else {
        spec.n_nets.unwrap_or(((1.5 * n as f64).round()) as usize)
    };
    let locality = spec.locality.unwrap_or((n / 4).max(2)).min(n);
    let mut nets = Vec::with_capacity(n_nets);
    for e in 0..n_nets {
        let mut deg = 2;
        while deg < spec.max_degree.min(n) && rng.gen::<f64>() < spec.degree_tail {
            deg += 1;
        }
        let first = rng.gen_range(0..n);
        let mut pins = vec![first];
        let span = locality.max(deg);
        let mut pool: Vec<usize> = (1..=span).map(|k| (first + k) % n).filter(|&b| b != first).collect();
        pool.dedup();
        pool.shuffle(&mut rng);
        for b in pool {
            if pins.len() == deg {
                break;
            }
            if !pins.contains(&b) {
                pins.push(b);
            }
        }
        if pins.len() < 2 {
            continue;
        }
        nets.push(Net {
            id: format!("n{e}"),
            pins,
            weight: 1.0,
        });
    }
    let dies = spec
        .dies
        .iter()
        .enumerate()
        .map(|(i, &t)| Die {
            id: format!("die{i}"),
            tech: t,
        })
        .collect();
    Design::new(technologies, blocks, nets, dies)
}

fn lock_block<R: Rng + ?Sized>(block: &mut Block, tech: usize, rng: &mut R) {
    let ratio = *block.ratio_options.choose(rng).expect("nonempty options");
    for (t, p) in block.ppa.iter_mut().enumerate() {
        if t != tech {
            *p = None;
        }
    }
    block.hard_ip = Some(HardIp { tech, ratio });
}

/// Copy of `design` with `k` randomly chosen blocks locked to the oldest technology.
pub fn with_hard_ips(design: &Design, k: usize, seed: u64) -> Result<Design, ModelError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut blocks = design.blocks.clone();
    let free: Vec<usize> = (0..blocks.len()).filter(|&b| !blocks[b].is_locked()).collect();
    if k > free.len() {
        return Err(ModelError::Parameter(format!("cannot lock {k} of {} free blocks", free.len())));
    }
    let oldest = design.oldest_tech();
    for &b in free.choose_multiple(&mut rng, k) {
        lock_block(&mut blocks[b], oldest, &mut rng);
    }
    Design::new(design.technologies.clone(), blocks, design.nets.clone(), design.dies.clone())
}

/// True if, for every technology, the locked hard-IP area fits within one die's
/// maximum area times the number of dies of that technology.
pub fn hard_ips_fit(design: &Design, z: f64, a_max_factor: f64) -> bool {
    let mut locked = vec![0.0; design.technologies.len()];
    for b in &design.blocks {
        if let Some(lock) = b.hard_ip {
            locked[lock.tech] += b.ppa[lock.tech].map_or(0.0, |p| p.area);
        }
    }
    locked.iter().enumerate().all(|(t, &a)| {
        let n = design.dies.iter().filter(|d| d.tech == t).count();
        a <= a_max_factor * z * n as f64
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub f: f64,
    pub hpwl: f64,
    pub power: f64,
    pub cost: f64,
    pub tns: f64,
    pub area: f64,
}

impl Metrics {
    const NAMES: [&'static str; 6] = ["f", "hpwl", "power", "cost", "tns", "area"];

    fn values(&self) -> [f64; 6] {
        [self.f, self.hpwl, self.power, self.cost, self.tns, self.area]
    }

    fn from_values(v: [f64; 6]) -> Self {
        Self {
            f: v[0],
            hpwl: v[1],
            power: v[2],
            cost: v[3],
            tns: v[4],
            area: v[5],
        }
    }

    pub fn of(sol: &MmfpSolution) -> Self {
        let b = &sol.breakdown;
        Self {
            f: b.f,
            hpwl: b.total_hpwl,
            power: b.total_power,
            cost: b.total_cost,
            tns: b.total_tns_magnitude,
            area: b.total_area(),
        }
    }

    fn median_of(all: &[Metrics]) -> Self {
        let mut out = [0.0; 6];
        for (k, o) in out.iter_mut().enumerate() {
            *o = median(&all.iter().map(|m| m.values()[k]).collect::<Vec<_>>());
        }
        Self::from_values(out)
    }

    fn ratio(&self, base: &Metrics) -> Self {
        let (a, b) = (self.values(), base.values());
        let mut out = [0.0; 6];
        for k in 0..6 {
            out[k] = if b[k] == 0.0 { 1.0 } else { a[k] / b[k] };
        }
        Self::from_values(out)
    }
}

/// Median; the mean of the two middle values for even lengths, NaN when empty.
pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Column-wise mean of `rows[i][k] / base[i][k]`.
pub fn normalized_average(rows: &[Vec<f64>], base: &[Vec<f64>]) -> Vec<f64> {
    if rows.is_empty() {
        return Vec::new();
    }
    let cols = rows[0].len();
    (0..cols)
        .map(|k| rows.iter().zip(base).map(|(r, b)| r[k] / b[k]).sum::<f64>() / rows.len() as f64)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: Method,
    pub seed: u64,
    pub metrics: Metrics,
    pub feasible: bool,
    pub steps: usize,
    pub refinements_applied: usize,
    pub curve: Vec<(usize, f64)>,
}

impl RunRecord {
    fn of(sol: &MmfpSolution) -> Self {
        Self {
            method: sol.method,
            seed: sol.seed,
            metrics: Metrics::of(sol),
            feasible: sol.breakdown.feasible,
            steps: sol.steps,
            refinements_applied: sol.refinements_applied,
            curve: sol.log.iter().map(|e: &LogEntry| (e.step, e.f)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub runs: usize,
    pub infeasible: usize,
    /// Medians over all runs.
    pub median: Metrics,
    /// Medians over feasible runs (all runs for the baseline) divided by the baseline medians.
    pub normalized: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub design: String,
    pub runs: Vec<RunRecord>,
    pub summary: Vec<MethodSummary>,
}

/// Worker pool honoring `HFP_THREADS`.
pub fn pool() -> rayon::ThreadPool {
    let n = std::env::var("HFP_THREADS").ok().and_then(|v| v.parse::<usize>().ok()).filter(|&n| n > 0);
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = n {
        b = b.num_threads(n);
    }
    b.build().expect("thread pool")
}

/// Runs every `(method, seed)` cell; results are in `methods × seeds` order.
pub fn run_cells(design: &Design, methods: &[Method], seeds: &[u64], cfg: &RunConfig) -> Result<Vec<MmfpSolution>, ModelError> {
    let cells: Vec<(Method, u64)> = methods.iter().flat_map(|&m| seeds.iter().map(move |&s| (m, s))).collect();
    pool().install(|| cells.par_iter().map(|&(m, s)| run(design, m, cfg, s)).collect())
}

fn summarize(runs: &[RunRecord], methods: &[Method]) -> Vec<MethodSummary> {
    let base: Vec<Metrics> = runs.iter().filter(|r| r.method == Method::Baseline).map(|r| r.metrics).collect();
    let base_median = (!base.is_empty()).then(|| Metrics::median_of(&base));
    methods
        .iter()
        .map(|&m| {
            let mine: Vec<&RunRecord> = runs.iter().filter(|r| r.method == m).collect();
            let all: Vec<Metrics> = mine.iter().map(|r| r.metrics).collect();
            let kept: Vec<Metrics> = mine
                .iter()
                .filter(|r| r.feasible || m == Method::Baseline)
                .map(|r| r.metrics)
                .collect();
            let median = Metrics::median_of(&all);
            let normalized = match (&base_median, kept.is_empty()) {
                (Some(b), false) => Metrics::median_of(&kept).ratio(b),
                _ => Metrics::from_values([f64::NAN; 6]),
            };
            MethodSummary {
                method: m,
                runs: mine.len(),
                infeasible: mine.iter().filter(|r| !r.feasible).count(),
                median,
                normalized,
            }
        })
        .collect()
}

pub fn compare_methods(design: &Design, name: &str, seeds: &[u64], cfg: &RunConfig, methods: &[Method]) -> Result<ExperimentReport, ModelError> {
    if seeds.is_empty() {
        return Err(ModelError::Parameter("need at least one seed".into()));
    }
    let sols = run_cells(design, methods, seeds, cfg)?;
    let runs: Vec<RunRecord> = sols.iter().map(RunRecord::of).collect();
    Ok(ExperimentReport {
        design: name.to_string(),
        summary: summarize(&runs, methods),
        runs,
    })
}

/// Results over several designs with the per-method mean of normalized medians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub designs: Vec<ExperimentReport>,
    pub normalized_average: Vec<(Method, Metrics)>,
}

impl BenchReport {
    pub fn new(designs: Vec<ExperimentReport>) -> Self {
        let methods: Vec<Method> = designs.first().map(|r| r.summary.iter().map(|m| m.method).collect()).unwrap_or_default();
        let normalized_average = methods
            .iter()
            .map(|&m| {
                let rows: Vec<Vec<f64>> = designs
                    .iter()
                    .filter_map(|r| r.summary.iter().find(|x| x.method == m))
                    .map(|x| x.normalized.values().to_vec())
                    .filter(|v| v.iter().all(|x| x.is_finite()))
                    .collect();
                let ones = vec![vec![1.0; 6]; rows.len()];
                let avg = normalized_average(&rows, &ones);
                let avg = if avg.len() == 6 { [avg[0], avg[1], avg[2], avg[3], avg[4], avg[5]] } else { [f64::NAN; 6] };
                (m, Metrics::from_values(avg))
            })
            .collect();
        Self {
            designs,
            normalized_average,
        }
    }

    pub fn summary_csv(&self) -> String {
        let mut s = String::new();
        for (i, r) in self.designs.iter().enumerate() {
            let t = r.summary_csv();
            s.push_str(if i == 0 { &t } else { t.split_once('\n').map_or("", |x| x.1) });
        }
        s
    }

    pub fn runs_csv(&self) -> String {
        let mut s = String::new();
        for (i, r) in self.designs.iter().enumerate() {
            let t = r.runs_csv();
            s.push_str(if i == 0 { &t } else { t.split_once('\n').map_or("", |x| x.1) });
        }
        s
    }

    pub fn normalized_csv(&self) -> String {
        let mut s = String::from("method");
        for n in Metrics::NAMES {
            let _ = write!(s, ",{n}");
        }
        s.push('\n');
        for (m, v) in &self.normalized_average {
            s.push_str(m.as_str());
            for x in v.values() {
                let _ = write!(s, ",{}", num(x));
            }
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    KInterval,
    NMax,
    Beta,
    Tau,
    /// `β = value · τ`.
    BetaTau,
    /// `γ = value · β`.
    GammaBeta,
    HardIpCount,
}

impl std::str::FromStr for Axis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "k_interval" => Axis::KInterval,
            "n_max" => Axis::NMax,
            "beta" => Axis::Beta,
            "tau" => Axis::Tau,
            "beta_tau" => Axis::BetaTau,
            "gamma_beta" => Axis::GammaBeta,
            "hard_ip_count" => Axis::HardIpCount,
            _ => return Err(format!("unknown axis `{s}`")),
        })
    }
}

fn as_count(v: f64, what: &str) -> Result<usize, ModelError> {
    if v >= 0.0 && v.fract() == 0.0 && v.is_finite() {
        Ok(v as usize)
    } else {
        Err(ModelError::Parameter(format!("{what} grid values must be non-negative integers")))
    }
}

/// Configuration and design for one grid point.
pub fn apply_axis(design: &Design, cfg: &RunConfig, axis: Axis, value: f64, lock_seed: u64) -> Result<(Design, RunConfig), ModelError> {
    let mut c = cfg.clone();
    let w = &mut c.objective.weights;
    let mut d = design.clone();
    match axis {
        Axis::KInterval => c.refine.k_interval = as_count(value, "k_interval")?.max(1),
        Axis::NMax => w.n_max = as_count(value, "n_max")?,
        Axis::Beta => w.beta = value,
        Axis::Tau => w.tau = value,
        Axis::BetaTau => w.beta = value * w.tau,
        Axis::GammaBeta => w.gamma = value * w.beta,
        Axis::HardIpCount => d = with_hard_ips(design, as_count(value, "hard_ip_count")?, lock_seed)?,
    }
    c.validate()?;
    Ok((d, c))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationPoint {
    pub value: f64,
    pub method: Method,
    pub runs: usize,
    pub infeasible: usize,
    pub median: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub design: String,
    pub axis: Axis,
    pub points: Vec<AblationPoint>,
    pub runs: Vec<(f64, RunRecord)>,
}

pub fn ablate(
    design: &Design,
    name: &str,
    axis: Axis,
    grid: &[f64],
    seeds: &[u64],
    cfg: &RunConfig,
    methods: &[Method],
) -> Result<AblationReport, ModelError> {
    if grid.is_empty() || seeds.is_empty() {
        return Err(ModelError::Parameter("grid and seeds must be nonempty".into()));
    }
    let mut points = Vec::new();
    let mut runs = Vec::new();
    for &v in grid {
        let (d, c) = apply_axis(design, cfg, axis, v, 0)?;
        let sols = run_cells(&d, methods, seeds, &c)?;
        for &m in methods {
            let recs: Vec<RunRecord> = sols.iter().filter(|s| s.method == m).map(RunRecord::of).collect();
            points.push(AblationPoint {
                value: v,
                method: m,
                runs: recs.len(),
                infeasible: recs.iter().filter(|r| !r.feasible).count(),
                median: Metrics::median_of(&recs.iter().map(|r| r.metrics).collect::<Vec<_>>()),
            });
            runs.extend(recs.into_iter().map(|r| (v, r)));
        }
    }
    Ok(AblationReport {
        design: name.to_string(),
        axis,
        points,
        runs,
    })
}

fn num(v: f64) -> String {
    format!("{v}")
}

impl ExperimentReport {
    /// One row per method: medians, then normalized values.
    pub fn summary_csv(&self) -> String {
        let mut s = String::from("design,method,runs,infeasible");
        for n in Metrics::NAMES {
            let _ = write!(s, ",median_{n}");
        }
        for n in Metrics::NAMES {
            let _ = write!(s, ",norm_{n}");
        }
        s.push('\n');
        for m in &self.summary {
            let _ = write!(s, "{},{},{},{}", self.design, m.method.as_str(), m.runs, m.infeasible);
            for v in m.median.values().iter().chain(m.normalized.values().iter()) {
                let _ = write!(s, ",{}", num(*v));
            }
            s.push('\n');
        }
        s
    }

    pub fn runs_csv(&self) -> String {
        let mut s = String::from("design,method,seed,feasible,steps,refinements");
        for n in Metrics::NAMES {
            let _ = write!(s, ",{n}");
        }
        s.push('\n');
        for r in &self.runs {
            let _ = write!(
                s,
                "{},{},{},{},{},{}",
                self.design,
                r.method.as_str(),
                r.seed,
                r.feasible,
                r.steps,
                r.refinements_applied
            );
            for v in r.metrics.values() {
                let _ = write!(s, ",{}", num(v));
            }
            s.push('\n');
        }
        s
    }

    /// Convergence curves as `method,seed,step,f`.
    pub fn curves_csv(&self) -> String {
        let mut s = String::from("method,seed,step,f\n");
        for r in &self.runs {
            for &(step, f) in &r.curve {
                let _ = writeln!(s, "{},{},{},{}", r.method.as_str(), r.seed, step, num(f));
            }
        }
        s
    }
}

impl AblationReport {
    pub fn csv(&self) -> String {
        let mut s = String::from("design,axis,value,method,runs,infeasible");
        for n in Metrics::NAMES {
            let _ = write!(s, ",median_{n}");
        }
        s.push('\n');
        let axis = serde_json::to_value(self.axis).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        for p in &self.points {
            let _ = write!(
                s,
                "{},{},{},{},{},{}",
                self.design,
                axis,
                num(p.value),
                p.method.as_str(),
                p.runs,
                p.infeasible
            );
            for v in p.median.values() {
                let _ = write!(s, ",{}", num(v));
            }
            s.push('\n');
        }
        s
    }

    pub fn median_f(&self, value: f64, method: Method) -> Option<f64> {
        self.points.iter().find(|p| p.value == value && p.method == method).map(|p| p.median.f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_is_deterministic_and_valid() {
        let spec = GeneratorSpec {
            seed: 42,
            ..GeneratorSpec::default()
        };
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.blocks.len(), 25);
        assert!(a.nets.iter().all(|n| (2..=8).contains(&n.pins.len())));
        let c = generate(&GeneratorSpec { seed: 43, ..spec }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn single_block_has_no_nets() {
        let d = generate(&GeneratorSpec {
            n_blocks: 1,
            n_nets: Some(5),
            ..GeneratorSpec::default()
        })
        .unwrap();
        assert!(d.nets.is_empty());
    }

    #[test]
    fn newer_technology_is_smaller_faster_cooler() {
        let d = generate(&GeneratorSpec {
            n_blocks: 200,
            ..GeneratorSpec::default()
        })
        .unwrap();
        for b in &d.blocks {
            let (o, n) = (b.ppa[0].unwrap(), b.ppa[1].unwrap());
            assert!(n.area < o.area && n.power < o.power && n.tns_magnitude < o.tns_magnitude);
            assert_eq!(o.ratio_penalty, n.ratio_penalty);
        }
        assert!(d.technologies[1].cost_per_area > d.technologies[0].cost_per_area);
    }

    #[test]
    fn hard_ip_generation_and_locking() {
        let d = generate(&GeneratorSpec {
            n_blocks: 30,
            hard_ips: 5,
            ..GeneratorSpec::default()
        })
        .unwrap();
        assert_eq!(d.blocks.iter().filter(|b| b.is_locked()).count(), 5);
        let e = with_hard_ips(&d, 10, 1).unwrap();
        assert_eq!(e.blocks.iter().filter(|b| b.is_locked()).count(), 15);
        assert!(with_hard_ips(&d, 26, 1).is_err());
    }

    #[test]
    fn medians_and_normalization() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
        // 2 designs × 3 metrics
        let base = vec![vec![10.0, 4.0, 2.0], vec![20.0, 8.0, 5.0]];
        let rows = vec![vec![9.0, 4.0, 1.0], vec![10.0, 6.0, 5.0]];
        assert_eq!(normalized_average(&rows, &base), vec![0.7, 0.875, 0.75]);
        assert_eq!(normalized_average(&base, &base), vec![1.0; 3]);
    }
}
