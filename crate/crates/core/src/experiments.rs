//! Seeded experiment harness: error tables, stability distributions and
//! point-location studies, with CSV/JSON/text reports.
//!
//! Every random stream is derived from the root seed and a textual key
//! (policy, method, degree, replicate), so cells can run in any order and
//! in parallel and still reproduce bit for bit.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{gauss_points, DEFAULT_GRID_SIZE};
use crate::basis::{BasisDescriptor, BasisSpec, IndexRule, Measure};
use crate::design::{build_design, DesignParams, MethodSpec, NPolicy};
use crate::error::{invalid, Error, Result};
use crate::projection::{test_error, NoiseModel};
use crate::sampling::{draw_product_sample, sample_measure, OptimalDensity, SampleSet, SamplerBackend};
use crate::seed::{derive_seed, key_hash, rng_for_key};
use crate::stability::{boost_condition, BoostConfig};
use crate::stats::{median, quantile};
use crate::subsampling::{greedy_subsample, GreedyConfig, GreedyVariant};

/// Degree of the Hermite space that u3 lives in.
pub const U3_DEGREE: usize = 40;

pub type TestFunction = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id")]
pub enum Example {
    /// exp(-(x-1)^2/4) on R with the Gaussian measure.
    #[serde(rename = "u1")]
    U1,
    /// 1/(1+5x^2) on [-1,1] with the uniform measure.
    #[serde(rename = "u2")]
    U2,
    /// sum_i exp(-i/2) psi_i with psi a random rotation of Hermite P_40.
    #[serde(rename = "u3")]
    U3,
    /// 1/(1 - (0.5/(2d)) sum x_i) on [-1,1]^d, hyperbolic cross spaces.
    #[serde(rename = "u4")]
    U4 { d: usize },
    #[serde(rename = "u4-noisy")]
    U4Noisy { d: usize, sigma: f64 },
}

impl Example {
    pub fn name(&self) -> String {
        match self {
            Example::U1 => "u1".into(),
            Example::U2 => "u2".into(),
            Example::U3 => "u3".into(),
            Example::U4 { d } => format!("u4 (d={d})"),
            Example::U4Noisy { d, sigma } => format!("u4 (d={d}, sigma={sigma})"),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Example::U4 { d } | Example::U4Noisy { d, .. } => *d,
            _ => 1,
        }
    }

    pub fn measure(&self) -> Measure {
        match self {
            Example::U1 | Example::U3 => Measure::Gaussian,
            _ => Measure::Uniform,
        }
    }

    pub fn is_rotated(&self) -> bool {
        matches!(self, Example::U3)
    }

    pub fn noise(&self) -> NoiseModel {
        match self {
            Example::U4Noisy { sigma, .. } => NoiseModel::Gaussian { sigma: *sigma },
            _ => NoiseModel::None,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Example::U4 { d } | Example::U4Noisy { d, .. } if *d == 0 => invalid("d must be at least 1"),
            Example::U4Noisy { sigma, .. } if !(*sigma >= 0.0 && sigma.is_finite()) => {
                invalid("sigma must be finite and non-negative")
            }
            _ => Ok(()),
        }
    }

    fn descriptor(&self, p: usize, rotation_seed: u64) -> Result<BasisDescriptor> {
        let mut desc = match self {
            Example::U1 | Example::U3 => BasisDescriptor::new(Measure::Gaussian, 1, IndexRule::TotalDegree(p)),
            Example::U2 => BasisDescriptor::new(Measure::Uniform, 1, IndexRule::TotalDegree(p)),
            Example::U4 { d } | Example::U4Noisy { d, .. } => {
                BasisDescriptor::new(Measure::Uniform, *d, IndexRule::HyperbolicCross(p))
            }
        };
        if self.is_rotated() {
            if p > U3_DEGREE {
                return invalid(format!("u3 supports p <= {U3_DEGREE}, got {p}"));
            }
            desc.rule = IndexRule::TotalDegree(U3_DEGREE);
            desc.seed_for_rotation = Some(rotation_seed);
            desc.rotated_dim = Some(p + 1);
        }
        Ok(desc)
    }

    /// Approximation space for degree parameter p. `rotation_seed` only
    /// matters for u3.
    pub fn spec(&self, p: usize, rotation_seed: u64) -> Result<BasisSpec> {
        self.descriptor(p, rotation_seed)?.build()
    }

    /// The target function (noiseless).
    pub fn function(&self, rotation_seed: u64) -> Result<TestFunction> {
        Ok(match self {
            Example::U1 => Arc::new(|x: &[f64]| (-(x[0] - 1.0).powi(2) / 4.0).exp()),
            Example::U2 => Arc::new(|x: &[f64]| 1.0 / (1.0 + 5.0 * x[0] * x[0])),
            Example::U3 => {
                let full = self.spec(U3_DEGREE, rotation_seed)?;
                let coef: Vec<f64> = (0..=U3_DEGREE).map(|i| (-(i as f64) / 2.0).exp()).collect();
                Arc::new(move |x: &[f64]| full.eval_expansion(&coef, x).unwrap_or(f64::NAN))
            }
            Example::U4 { d } | Example::U4Noisy { d, .. } => {
                let c = 0.5 / (2.0 * *d as f64);
                Arc::new(move |x: &[f64]| 1.0 / (1.0 - c * x.iter().sum::<f64>()))
            }
        })
    }
}

fn default_methods() -> Vec<String> {
    ["owls", "cbls:1", "cbls:100", "sbls:100"].map(String::from).to_vec()
}
fn default_delta() -> f64 {
    0.9
}
fn default_eta() -> f64 {
    0.01
}
fn default_boost() -> usize {
    100
}
fn default_policies() -> Vec<NPolicy> {
    vec![NPolicy::GuaranteedStability]
}
fn default_replicates() -> usize {
    10
}
fn default_n_test() -> usize {
    1000
}
fn default_grid() -> usize {
    DEFAULT_GRID_SIZE
}
fn default_rejections() -> usize {
    1000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub example: Example,
    #[serde(default = "default_methods")]
    pub methods: Vec<String>,
    pub degrees: Vec<usize>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_eta")]
    pub eta: f64,
    /// M used by boosted methods named without an explicit `:M`.
    #[serde(rename = "M", default = "default_boost")]
    pub boost: usize,
    #[serde(default = "default_policies")]
    pub policies: Vec<NPolicy>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_n_test")]
    pub n_test: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub variant: GreedyVariant,
    #[serde(default = "default_grid")]
    pub grid_size: usize,
    #[serde(default = "default_rejections")]
    pub max_rejections: usize,
    #[serde(default)]
    pub backend: SamplerBackend,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(example: Example, methods: &[&str], degrees: Vec<usize>) -> Self {
        Self {
            example,
            methods: methods.iter().map(|s| s.to_string()).collect(),
            degrees,
            delta: default_delta(),
            eta: default_eta(),
            boost: default_boost(),
            policies: default_policies(),
            replicates: default_replicates(),
            n_test: default_n_test(),
            seed: 0,
            variant: GreedyVariant::default(),
            grid_size: default_grid(),
            max_rejections: default_rejections(),
            backend: SamplerBackend::default(),
            output: None,
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    pub fn parsed_methods(&self) -> Result<Vec<MethodSpec>> {
        self.methods
            .iter()
            .map(|s| MethodSpec::parse_with_default(s, self.boost))
            .collect()
    }

    pub fn design_params(&self) -> DesignParams {
        DesignParams {
            delta: self.delta,
            eta: self.eta,
            variant: self.variant,
            grid_size: self.grid_size,
            max_rejections: self.max_rejections,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.example.validate()?;
        self.parsed_methods()?;
        if self.replicates == 0 {
            return invalid("replicates must be at least 1");
        }
        if self.n_test == 0 {
            return invalid("n_test must be at least 1");
        }
        if self.policies.is_empty() {
            return invalid("at least one n policy is required");
        }
        if !(0.0..1.0).contains(&self.delta) || !(self.eta > 0.0 && self.eta < 1.0) {
            return invalid("delta must lie in [0, 1) and eta in (0, 1)");
        }
        if self.boost == 0 || self.max_rejections == 0 {
            return invalid("M and max_rejections must be positive");
        }
        if self.example.is_rotated() && self.degrees.iter().any(|&p| p > U3_DEGREE) {
            return invalid(format!("u3 degrees must not exceed {U3_DEGREE}"));
        }
        Ok(())
    }

    fn rotation_seed(&self, replicate: usize) -> u64 {
        derive_seed(self.seed, key_hash(&format!("rotation/{replicate}")))
    }
}

fn policy_key(p: NPolicy) -> String {
    match p {
        NPolicy::GuaranteedStability => "guaranteed-stability".into(),
        NPolicy::GivenCost => "given-cost".into(),
        NPolicy::Fixed(n) => format!("fixed-{n}"),
    }
}

fn short_error(e: &Error) -> String {
    let s = match e {
        Error::RejectionCapExceeded { cap, delta, .. } => format!("no stable sample after {cap} trials (delta = {delta})"),
        other => other.to_string(),
    };
    s.chars().take(160).collect()
}

/// One replicate of one cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub policy: String,
    pub method: String,
    pub p: usize,
    pub m: usize,
    pub replicate: usize,
    pub initial_n: usize,
    pub n: usize,
    pub z: Option<f64>,
    pub rejections: Option<usize>,
    pub log10_error: Option<f64>,
    pub status: String,
}

/// Aggregate over the replicates of one (policy, method, degree) cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub policy: String,
    pub method: String,
    pub p: usize,
    pub m: usize,
    pub initial_n: usize,
    pub ok: usize,
    pub failed: usize,
    /// Successful replicates whose design had Z > delta.
    pub unstable: usize,
    pub err_q10: Option<f64>,
    pub err_median: Option<f64>,
    pub err_q90: Option<f64>,
    pub n_min: Option<usize>,
    pub n_max: Option<usize>,
    pub z_max: Option<f64>,
}

const CELL_COLUMNS: [&str; 14] = [
    "policy",
    "method",
    "p",
    "m",
    "initial_n",
    "ok",
    "failed",
    "unstable",
    "err_q10",
    "err_median",
    "err_q90",
    "n_min",
    "n_max",
    "z_max",
];

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub cells: Vec<CellSummary>,
    /// Wall time per cell in seconds, parallel to `cells`; kept out of CSV.
    pub wall_times: Vec<f64>,
    pub records: Vec<ReplicateRecord>,
}

impl ExperimentResult {
    pub fn cell(&self, policy: NPolicy, method: &str, p: usize) -> Option<&CellSummary> {
        let key = policy_key(policy);
        self.cells.iter().find(|c| c.policy == key && c.method == method && c.p == p)
    }
}

fn summarize(records: &[ReplicateRecord], delta: f64) -> CellSummary {
    let first = &records[0];
    let ok: Vec<&ReplicateRecord> = records.iter().filter(|r| r.log10_error.is_some()).collect();
    let errs: Vec<f64> = ok.iter().filter_map(|r| r.log10_error).collect();
    let ns: Vec<usize> = ok.iter().map(|r| r.n).collect();
    let q = |level: f64| (!errs.is_empty()).then(|| quantile(&errs, level));
    CellSummary {
        policy: first.policy.clone(),
        method: first.method.clone(),
        p: first.p,
        m: first.m,
        initial_n: first.initial_n,
        ok: ok.len(),
        failed: records.len() - ok.len(),
        unstable: ok.iter().filter(|r| r.z.is_some_and(|z| z > delta)).count(),
        err_q10: q(0.1),
        err_median: (!errs.is_empty()).then(|| median(&errs)),
        err_q90: q(0.9),
        n_min: ns.iter().copied().min(),
        n_max: ns.iter().copied().max(),
        z_max: ok.iter().filter_map(|r| r.z).reduce(f64::max),
    }
}

struct DegreeContext {
    spec: BasisSpec,
    density: Arc<OptimalDensity>,
}

fn degree_context(config: &ExperimentConfig, p: usize, replicate: usize) -> Result<DegreeContext> {
    let spec = config.example.spec(p, config.rotation_seed(replicate))?;
    let density = Arc::new(OptimalDensity::with_backend(spec.clone(), config.backend.clone())?);
    Ok(DegreeContext { spec, density })
}

fn run_replicate(
    config: &ExperimentConfig,
    ctx: &DegreeContext,
    policy: NPolicy,
    method: &MethodSpec,
    p: usize,
    replicate: usize,
) -> ReplicateRecord {
    let spec = &ctx.spec;
    let m = spec.size();
    let params = config.design_params();
    let mut rec = ReplicateRecord {
        policy: policy_key(policy),
        method: method.to_string(),
        p,
        m,
        replicate,
        initial_n: crate::design::initial_size(method, policy, &params, m).unwrap_or(0),
        n: 0,
        z: None,
        rejections: None,
        log10_error: None,
        status: "ok".into(),
    };
    let outcome = (|| -> Result<()> {
        let u = config.example.function(config.rotation_seed(replicate))?;
        let key = format!("{}/{}/{p}/{replicate}", policy_key(policy), method);
        let mut rng = rng_for_key(config.seed, &format!("design/{key}"));
        let design = build_design(method, &ctx.density, policy, &params, &mut rng)?;
        rec.n = design.n();
        rec.initial_n = design.initial_n;
        rec.z = Some(design.z);
        rec.rejections = design.sample.meta.rejection_count;
        let mut y: Vec<f64> = design.sample.points.iter().map(|x| u(x)).collect();
        config.example.noise().perturb(&mut y, &mut rng)?;
        let model = design.fit(spec, &y)?;
        // test points are shared by all methods of a (degree, replicate)
        let mut trng = rng_for_key(config.seed, &format!("test/{p}/{replicate}"));
        let test = sample_measure(spec.measures(), &mut trng, config.n_test);
        let err = test_error(&model, |x| u(x), &test)?;
        rec.log10_error = Some(err.log10());
        Ok(())
    })();
    if let Err(e) = outcome {
        rec.status = short_error(&e);
        rec.log10_error = None;
    }
    rec
}

/// Runs every (policy, method, degree) cell. Replicate failures are
/// recorded in their cell and do not abort the run.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let methods = config.parsed_methods()?;
    let mut cells = Vec::new();
    let mut wall_times = Vec::new();
    let mut records = Vec::new();
    for &p in &config.degrees {
        // densities do not depend on the replicate unless the basis is rotated
        let shared = if config.example.is_rotated() {
            None
        } else {
            Some(degree_context(config, p, 0)?)
        };
        let per_rep: Vec<DegreeContext> = if shared.is_none() {
            (0..config.replicates)
                .into_par_iter()
                .map(|r| degree_context(config, p, r))
                .collect::<Result<_>>()?
        } else {
            Vec::new()
        };
        let ctx_for = |r: usize| shared.as_ref().unwrap_or_else(|| &per_rep[r]);
        for &policy in &config.policies {
            for method in &methods {
                let started = Instant::now();
                let recs: Vec<ReplicateRecord> = (0..config.replicates)
                    .into_par_iter()
                    .map(|r| run_replicate(config, ctx_for(r), policy, method, p, r))
                    .collect();
                wall_times.push(started.elapsed().as_secs_f64());
                cells.push(summarize(&recs, config.delta));
                records.extend(recs);
            }
        }
    }
    // table order: policy, then method, then degree
    let mut order: Vec<usize> = (0..cells.len()).collect();
    let policy_rank = |s: &str| config.policies.iter().position(|p| policy_key(*p) == s).unwrap_or(usize::MAX);
    let method_rank = |s: &str| methods.iter().position(|m| m.to_string() == s).unwrap_or(usize::MAX);
    let degree_rank = |p: usize| config.degrees.iter().position(|&q| q == p).unwrap_or(usize::MAX);
    order.sort_by_key(|&i| {
        let c = &cells[i];
        (policy_rank(&c.policy), method_rank(&c.method), degree_rank(c.p))
    });
    let cells_sorted = order.iter().map(|&i| cells[i].clone()).collect();
    let times_sorted = order.iter().map(|&i| wall_times[i]).collect();
    records.sort_by(|a, b| {
        (policy_rank(&a.policy), method_rank(&a.method), degree_rank(a.p), a.replicate).cmp(&(
            policy_rank(&b.policy),
            method_rank(&b.method),
            degree_rank(b.p),
            b.replicate,
        ))
    });
    Ok(ExperimentResult {
        config: config.clone(),
        cells: cells_sorted,
        wall_times: times_sorted,
        records,
    })
}

pub fn write_cells_csv<W: Write>(cells: &[CellSummary], writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record(CELL_COLUMNS)?;
    for c in cells {
        w.serialize(c)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_cells_csv<R: Read>(reader: R) -> Result<Vec<CellSummary>> {
    let mut r = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

pub fn write_records_csv<W: Write>(records: &[ReplicateRecord], writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record([
        "policy",
        "method",
        "p",
        "m",
        "replicate",
        "initial_n",
        "n",
        "z",
        "rejections",
        "log10_error",
        "status",
    ])?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn interval(lo: Option<f64>, hi: Option<f64>) -> String {
    match (lo, hi) {
        (Some(a), Some(b)) => format!("[{a:.1}; {b:.1}]"),
        _ => "failed".into(),
    }
}

fn size_column(c: &CellSummary, method: &MethodSpec) -> String {
    match (c.n_min, c.n_max) {
        (Some(a), Some(b)) if matches!(method, MethodSpec::SBls(_)) || a != b => format!("[{a}; {b}]"),
        (Some(a), _) => a.to_string(),
        _ => "-".into(),
    }
}

/// Human-readable tables, one block per n policy, one row per degree.
pub fn render_table(result: &ExperimentResult) -> String {
    let cfg = &result.config;
    let methods = cfg.parsed_methods().unwrap_or_default();
    let mut out = format!(
        "Approximation error (log10 RMS) for {}; {} replicates, N_test = {}, seed = {}\n",
        cfg.example.name(),
        cfg.replicates,
        cfg.n_test,
        cfg.seed
    );
    for &policy in &cfg.policies {
        out.push_str(&format!("\n{}\n", policy.block_title()));
        let mut header = vec!["p".to_string(), "m".to_string()];
        for m in &methods {
            header.push(format!("{} eps", m.label()));
            header.push("n".into());
        }
        let mut rows = vec![header];
        for &p in &cfg.degrees {
            let mut row = vec![p.to_string()];
            let mut m_col = String::from("-");
            for method in &methods {
                match result.cell(policy, &method.to_string(), p) {
                    Some(c) => {
                        m_col = c.m.to_string();
                        let mut e = interval(c.err_q10, c.err_q90);
                        if c.failed > 0 && c.ok > 0 {
                            e.push_str(&format!(" ({} failed)", c.failed));
                        }
                        row.push(e);
                        row.push(size_column(c, method));
                    }
                    None => {
                        row.push("-".into());
                        row.push("-".into());
                    }
                }
            }
            row.insert(1, m_col);
            rows.push(row);
        }
        let widths: Vec<usize> = (0..rows[0].len())
            .map(|j| rows.iter().map(|r| r[j].len()).max().unwrap_or(0))
            .collect();
        for r in &rows {
            let line: Vec<String> = r.iter().zip(&widths).map(|(s, w)| format!("{s:>w$}")).collect();
            out.push_str(line.join(" | ").trim_end());
            out.push('\n');
        }
        let total: f64 = result
            .cells
            .iter()
            .zip(&result.wall_times)
            .filter(|(c, _)| c.policy == policy_key(policy))
            .map(|(_, t)| t)
            .sum();
        out.push_str(&format!("wall time {total:.2} s\n"));
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Csv,
    Json,
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

/// Writes the report and returns the paths written. CSV output puts the
/// cell summaries at `path` plus `<stem>.records.csv` and `<stem>.txt`.
pub fn emit_report(result: &ExperimentResult, path: &Path, format: ReportFormat) -> Result<Vec<PathBuf>> {
    match format {
        ReportFormat::Csv => {
            write_cells_csv(&result.cells, std::fs::File::create(path)?)?;
            let rec = sibling(path, ".records.csv");
            write_records_csv(&result.records, std::fs::File::create(&rec)?)?;
            let txt = sibling(path, ".txt");
            std::fs::write(&txt, render_table(result))?;
            Ok(vec![path.to_path_buf(), rec, txt])
        }
        ReportFormat::Json => {
            std::fs::write(path, serde_json::to_string_pretty(result)?)?;
            Ok(vec![path.to_path_buf()])
        }
    }
}

// ---------------------------------------------------------------------------
// Stability distributions

fn default_stability_methods() -> Vec<String> {
    ["sls", "owls", "cbls:1", "cbls:100", "sbls:1", "sbls:100"]
        .map(String::from)
        .to_vec()
}
fn default_p() -> usize {
    5
}
fn default_stability_n() -> usize {
    100
}
fn default_stability_reps() -> usize {
    1000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityConfig {
    pub measure: Measure,
    #[serde(default = "default_p")]
    pub p: usize,
    #[serde(default = "default_stability_n")]
    pub n: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_stability_methods")]
    pub methods: Vec<String>,
    #[serde(rename = "M", default = "default_boost")]
    pub boost: usize,
    #[serde(default = "default_stability_reps")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub variant: GreedyVariant,
    #[serde(default)]
    pub backend: SamplerBackend,
    #[serde(default = "default_rejections")]
    pub max_rejections: usize,
}

impl StabilityConfig {
    pub fn new(measure: Measure) -> Self {
        Self {
            measure,
            p: default_p(),
            n: default_stability_n(),
            delta: default_delta(),
            eta: default_eta(),
            methods: default_stability_methods(),
            boost: default_boost(),
            replicates: default_stability_reps(),
            seed: 0,
            variant: GreedyVariant::default(),
            backend: SamplerBackend::default(),
            max_rejections: default_rejections(),
        }
    }

    pub fn validate(&self) -> Result<Vec<MethodSpec>> {
        if self.replicates == 0 || self.n == 0 {
            return invalid("replicates and n must be positive");
        }
        if self.n < self.p + 1 {
            return invalid("n must be at least m");
        }
        let methods = self
            .methods
            .iter()
            .map(|s| MethodSpec::parse_with_default(s, self.boost))
            .collect::<Result<Vec<_>>>()?;
        if methods.iter().any(MethodSpec::is_interpolation) {
            return invalid("stability study takes random methods only");
        }
        Ok(methods)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub method: String,
    pub replicate: usize,
    pub n: usize,
    pub z: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StabilityResult {
    pub config: StabilityConfig,
    pub rows: Vec<StabilityRow>,
}

impl StabilityResult {
    pub fn z_values(&self, method: &str) -> Vec<f64> {
        self.rows.iter().filter(|r| r.method == method).map(|r| r.z).collect()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
        w.write_record(["method", "replicate", "n", "z"])?;
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Z samples per method, all methods starting from `n` points.
pub fn run_stability_study(config: &StabilityConfig) -> Result<StabilityResult> {
    let methods = config.validate()?;
    let spec = BasisSpec::univariate(config.measure, config.p);
    let density = OptimalDensity::with_backend(spec, config.backend.clone())?;
    let params = DesignParams {
        delta: config.delta,
        eta: config.eta,
        variant: config.variant,
        grid_size: DEFAULT_GRID_SIZE,
        max_rejections: config.max_rejections,
    };
    let mut rows = Vec::new();
    for method in &methods {
        let part: Vec<StabilityRow> = (0..config.replicates)
            .into_par_iter()
            .map(|r| {
                let mut rng = rng_for_key(config.seed, &format!("stability/{method}/{r}"));
                let d = build_design(method, &density, NPolicy::Fixed(config.n), &params, &mut rng)?;
                Ok(StabilityRow {
                    method: method.to_string(),
                    replicate: r,
                    n: d.n(),
                    z: d.z,
                })
            })
            .collect::<Result<_>>()?;
        rows.extend(part);
    }
    Ok(StabilityResult {
        config: config.clone(),
        rows,
    })
}

// ---------------------------------------------------------------------------
// Point locations

fn default_points_n() -> usize {
    10
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointsConfig {
    pub measure: Measure,
    #[serde(default = "default_p")]
    pub p: usize,
    /// `cbls:M`, `sbls:M` or `owls`.
    pub method: String,
    /// Size of the (c-BLS) sample drawn first.
    #[serde(default = "default_points_n")]
    pub n: usize,
    /// Size after greedy removal for `sbls`; defaults to m.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<usize>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_stability_reps")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub variant: GreedyVariant,
    #[serde(default)]
    pub backend: SamplerBackend,
    #[serde(default = "default_rejections")]
    pub max_rejections: usize,
}

impl PointsConfig {
    pub fn new(measure: Measure, method: &str) -> Self {
        Self {
            measure,
            p: default_p(),
            method: method.into(),
            n: default_points_n(),
            target: None,
            delta: default_delta(),
            replicates: default_stability_reps(),
            seed: 0,
            variant: GreedyVariant::default(),
            backend: SamplerBackend::default(),
            max_rejections: default_rejections(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PointsResult {
    pub config: PointsConfig,
    /// One ascending row per replicate.
    pub sorted: Vec<Vec<f64>>,
    /// Gauss nodes with as many points as a row, for reference.
    pub gauss: Vec<f64>,
}

impl PointsResult {
    pub fn rank_values(&self, rank: usize) -> Vec<f64> {
        self.sorted.iter().map(|row| row[rank]).collect()
    }

    /// Mean over adjacent ranks j of P(X_(j+1) < X'_(j)), with X and X'
    /// from independent replicates.
    pub fn adjacent_overlap(&self) -> f64 {
        let k = self.gauss.len();
        if k < 2 {
            return 0.0;
        }
        let mut total = 0.0;
        for j in 0..k - 1 {
            let mut lo = self.rank_values(j);
            let mut hi = self.rank_values(j + 1);
            lo.sort_by(f64::total_cmp);
            hi.sort_by(f64::total_cmp);
            // count pairs hi[b] < lo[a] by merging
            let mut count = 0usize;
            let mut b = 0;
            for &a in &lo {
                while b < hi.len() && hi[b] < a {
                    b += 1;
                }
                count += b;
            }
            total += count as f64 / (lo.len() * hi.len()) as f64;
        }
        total / (k - 1) as f64
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["replicate", "rank", "x", "gauss"])?;
        for (r, row) in self.sorted.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                w.write_record(&[r.to_string(), (j + 1).to_string(), x.to_string(), self.gauss[j].to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Sorted c-BLS (or s-BLS) designs over many replicates.
pub fn run_point_location_study(config: &PointsConfig) -> Result<PointsResult> {
    let spec = BasisSpec::univariate(config.measure, config.p);
    let m = spec.size();
    let method = MethodSpec::parse_with_default(&config.method, 1)?;
    if config.replicates == 0 || config.n < m {
        return invalid("replicates must be positive and n >= m");
    }
    let density = OptimalDensity::with_backend(spec.clone(), config.backend.clone())?;
    let size = match method {
        MethodSpec::SBls(_) => config.target.unwrap_or(m),
        MethodSpec::CBls(_) | MethodSpec::Owls => config.target.unwrap_or(config.n),
        _ => return invalid("point study takes owls, cbls:M or sbls:M"),
    };
    if size < m || size > config.n {
        return invalid("target must lie in m..=n");
    }
    let sorted: Vec<Vec<f64>> = (0..config.replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_for_key(config.seed, &format!("points/{method}/{r}"));
            let sample: SampleSet = match method {
                MethodSpec::Owls => draw_product_sample(&density, &mut rng, size)?,
                MethodSpec::CBls(b) | MethodSpec::SBls(b) => {
                    let mut bc = BoostConfig::new(config.delta, 0.5, b).with_n(config.n);
                    bc.max_rejections = config.max_rejections;
                    let s = boost_condition(&density, &bc, &mut rng)?;
                    if let MethodSpec::SBls(_) = method {
                        let g = GreedyConfig::reach_count(config.delta, size, config.variant);
                        greedy_subsample(&s, &spec, &g)?.sample
                    } else {
                        s
                    }
                }
                _ => unreachable!(),
            };
            let mut xs: Vec<f64> = sample.points.iter().map(|x| x[0]).collect();
            xs.sort_by(f64::total_cmp);
            Ok(xs)
        })
        .collect::<Result<_>>()?;
    Ok(PointsResult {
        config: config.clone(),
        sorted,
        gauss: gauss_points(config.measure, size)?,
    })
}

// ---------------------------------------------------------------------------
// Single designs

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignJob {
    pub basis: BasisDescriptor,
    pub method: String,
    #[serde(default = "default_policy")]
    pub policy: NPolicy,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(rename = "M", default = "default_boost")]
    pub boost: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub variant: GreedyVariant,
    #[serde(default = "default_grid")]
    pub grid_size: usize,
    #[serde(default)]
    pub backend: SamplerBackend,
}

fn default_policy() -> NPolicy {
    NPolicy::GuaranteedStability
}

/// Builds one design and tags it with the seed it came from.
pub fn run_design_job(job: &DesignJob) -> Result<SampleSet> {
    let spec = job.basis.build()?;
    let method = MethodSpec::parse_with_default(&job.method, job.boost)?;
    let density = OptimalDensity::with_backend(spec, job.backend.clone())?;
    let params = DesignParams {
        delta: job.delta,
        eta: job.eta,
        variant: job.variant,
        grid_size: job.grid_size,
        max_rejections: default_rejections(),
    };
    let mut rng = rng_for_key(job.seed, &format!("design/{method}"));
    let mut sample = build_design(&method, &density, job.policy, &params, &mut rng)?.sample;
    sample.meta.seed = Some(job.seed);
    Ok(sample)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(example: Example, methods: &[&str], degrees: Vec<usize>) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(example, methods, degrees);
        c.replicates = 3;
        c.n_test = 200;
        c.seed = 5;
        c
    }

    #[test]
    fn config_defaults_and_errors() {
        let c = ExperimentConfig::from_json(r#"{"example": {"id": "u1"}, "degrees": [5]}"#).unwrap();
        assert_eq!((c.replicates, c.n_test, c.boost), (10, 1000, 100));
        assert_eq!(c.policies, vec![NPolicy::GuaranteedStability]);
        let c = ExperimentConfig::from_json(
            r#"{"example": {"id": "u4-noisy", "d": 2, "sigma": 0.1}, "degrees": [9], "policies": ["given-cost", "guaranteed-stability"]}"#,
        )
        .unwrap();
        assert_eq!(c.example.noise(), NoiseModel::Gaussian { sigma: 0.1 });
        for bad in [
            r#"{"example": {"id": "u1"}, "degrees": [5], "replicates": 0}"#,
            r#"{"example": {"id": "u1"}, "degrees": [5], "methods": ["nope"]}"#,
            r#"{"example": {"id": "u3"}, "degrees": [41]}"#,
            r#"{"example": {"id": "u9"}, "degrees": [5]}"#,
        ] {
            assert!(ExperimentConfig::from_json(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn test_functions() {
        let u1 = Example::U1.function(0).unwrap();
        assert!((u1(&[1.0]) - 1.0).abs() < 1e-15);
        let u2 = Example::U2.function(0).unwrap();
        assert!((u2(&[1.0]) - 1.0 / 6.0).abs() < 1e-15);
        let u4 = Example::U4 { d: 2 }.function(0).unwrap();
        assert!((u4(&[1.0, 1.0]) - 1.0 / 0.75).abs() < 1e-15);
        // u3 lies in the rotated P_40 space with coefficients exp(-i/2)
        let u3 = Example::U3.function(9).unwrap();
        let spec = Example::U3.spec(U3_DEGREE, 9).unwrap();
        let x = [0.4];
        let phi = spec.eval(&x).unwrap();
        let direct: f64 = phi.iter().enumerate().map(|(i, v)| (-(i as f64) / 2.0).exp() * v).sum();
        assert!((u3(&x) - direct).abs() < 1e-12);
        assert_eq!(Example::U3.spec(5, 9).unwrap().size(), 6);
    }

    #[test]
    fn experiment_is_reproducible_and_round_trips() {
        let mut c = small(Example::U2, &["owls", "cbls:100", "sbls:100", "gauss"], vec![5]);
        c.policies = vec![NPolicy::GuaranteedStability, NPolicy::GivenCost];
        let a = run_experiment(&c).unwrap();
        let b = run_experiment(&c).unwrap();
        let (mut ca, mut cb) = (Vec::new(), Vec::new());
        write_cells_csv(&a.cells, &mut ca).unwrap();
        write_cells_csv(&b.cells, &mut cb).unwrap();
        assert_eq!(ca, cb);
        assert_eq!(read_cells_csv(&ca[..]).unwrap(), a.cells);
        for cell in &a.cells {
            assert_eq!(cell.failed, 0, "{cell:?}");
            assert!(cell.err_q10 <= cell.err_median && cell.err_median <= cell.err_q90);
            if cell.policy == "given-cost" {
                assert_eq!((cell.n_min, cell.n_max), (Some(6), Some(6)));
            } else if !["owls", "gauss"].contains(&cell.method.as_str()) {
                assert_eq!(cell.unstable, 0);
            }
        }
        let table = render_table(&a);
        assert!(table.contains("(a) guaranteed stability") && table.contains("(b) given cost n = m"));
        assert!(table.contains("s-BLS (M=100) eps"));
    }

    #[test]
    fn empty_method_list_gives_header_only() {
        let c = small(Example::U1, &[], vec![5]);
        let r = run_experiment(&c).unwrap();
        let mut buf = Vec::new();
        write_cells_csv(&r.cells, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("policy,method,p,m"));
    }

    #[test]
    fn failures_are_recorded_per_cell() {
        // c-BLS with n = m essentially never reaches Z <= 0.1
        let mut c = small(Example::U1, &["cbls:1", "owls"], vec![5]);
        c.policies = vec![NPolicy::GivenCost];
        c.delta = 0.1;
        c.max_rejections = 3;
        let r = run_experiment(&c).unwrap();
        let cb = r.cell(NPolicy::GivenCost, "cbls:1", 5).unwrap();
        assert_eq!((cb.ok, cb.failed), (0, 3));
        assert!(r.records.iter().any(|x| x.status.starts_with("no stable sample")));
        assert_eq!(r.cell(NPolicy::GivenCost, "owls", 5).unwrap().ok, 3, "{:?}", r.records);
    }

    #[test]
    fn emit_report_writes_files() {
        let c = small(Example::U1, &["owls"], vec![3]);
        let r = run_experiment(&c).unwrap();
        let dir = std::env::temp_dir().join(format!("bwls-report-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let paths = emit_report(&r, &dir.join("t.csv"), ReportFormat::Csv).unwrap();
        assert_eq!(paths.len(), 3);
        assert!(std::fs::read_to_string(&paths[2]).unwrap().contains("OWLS eps"));
        let paths = emit_report(&r, &dir.join("t.json"), ReportFormat::Json).unwrap();
        let back: ExperimentResult = serde_json::from_str(&std::fs::read_to_string(&paths[0]).unwrap()).unwrap();
        assert_eq!(back.cells, r.cells);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn point_study_rows_are_sorted() {
        let mut c = PointsConfig::new(Measure::Gaussian, "sbls:10");
        c.replicates = 20;
        let r = run_point_location_study(&c).unwrap();
        assert_eq!(r.gauss.len(), 6);
        for row in &r.sorted {
            assert_eq!(row.len(), 6);
            assert!(row.windows(2).all(|w| w[0] <= w[1]));
        }
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + 20 * 6);
    }

    #[test]
    fn design_job_from_json() {
        let job: DesignJob = serde_json::from_str(
            r#"{"basis": {"measure": "uniform", "d": 1, "rule": "total_degree", "p": 5}, "method": "sbls:100", "seed": 3}"#,
        )
        .unwrap();
        let s = run_design_job(&job).unwrap();
        assert_eq!(s.meta.seed, Some(3));
        assert!(s.len() >= 6 && s.meta.z.unwrap() <= 0.9);
    }
}
