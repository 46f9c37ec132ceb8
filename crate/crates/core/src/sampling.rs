//! Sampling from the optimal measure d rho = w^{-1} d mu, with
//! w(x)^{-1} = (1/m) sum_j phi_j(x)^2.
//!
//! The default backend exploits the mixture structure of w^{-1} d mu: pick a
//! basis index j uniformly, then draw every coordinate from the univariate law
//! p_{j_k}(x)^2 d mu_k by inverse transform on a cell table. `Grid` inverts the
//! full one-dimensional density directly and `Slice` runs a slice sampler on
//! it; both are d = 1 only.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::basis::{weight_from_features, BasisSpec, GaussRule, Measure};
use crate::error::{invalid, Error, Result};

/// Gaussian tables grow their box until the top-degree density drops below this.
pub const TAIL_DENSITY: f64 = 1e-30;
const GAUSSIAN_START_BOX: f64 = 12.0;
/// Admissible |1 - table mass| and CDF-inversion residual.
pub const CDF_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceConfig {
    pub width: f64,
    pub burn_in: usize,
    pub thin: usize,
    /// Cap on stepping-out expansions per side.
    pub max_steps: usize,
}

impl Default for SliceConfig {
    fn default() -> Self {
        Self {
            width: 1.0,
            burn_in: 100,
            thin: 1,
            max_steps: 64,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SamplerBackend {
    #[default]
    Mixture,
    Grid,
    Slice(SliceConfig),
}

#[derive(Clone, Debug)]
enum Target {
    Degree { measure: Measure, k: usize },
    Full(BasisSpec),
}

impl Target {
    fn pdf(&self, x: f64) -> f64 {
        match self {
            Target::Degree { measure, k } => {
                let p = measure.orthonormal_value(x, *k);
                p * p * measure.density(x)
            }
            Target::Full(spec) => match spec.eval(&[x]) {
                Ok(phi) => {
                    let s: f64 = phi.iter().map(|v| v * v).sum();
                    s / phi.len() as f64 * spec.measures()[0].density(x)
                }
                Err(_) => f64::NAN,
            },
        }
    }
}

/// Piecewise inverse CDF of a univariate Lebesgue density on a box.
///
/// Cell masses come from an 8-point Gauss-Legendre rule per uniform cell.
/// Inversion locates the cell by binary search on the cumulative masses and
/// then solves the local equation with safeguarded Newton iterations.
#[derive(Clone, Debug)]
pub struct InverseCdf {
    target: Target,
    edges: Vec<f64>,
    cum: Vec<f64>,
    rule: GaussRule,
}

impl InverseCdf {
    fn build(target: Target, lo: f64, hi: f64, cells: usize) -> Result<Self> {
        let rule = Measure::Uniform.gauss_rule(8);
        let h = (hi - lo) / cells as f64;
        let edges: Vec<f64> = (0..=cells).map(|i| lo + h * i as f64).collect();
        let mut cum = Vec::with_capacity(cells + 1);
        cum.push(0.0);
        let mut acc = 0.0;
        for w in edges.windows(2) {
            let mass = integrate(&rule, &target, w[0], w[1]);
            if !mass.is_finite() {
                return Err(Error::NonFinite(vec![w[0]]));
            }
            acc += mass;
            cum.push(acc);
        }
        let defect = (acc - 1.0).abs();
        if defect > CDF_TOLERANCE {
            return Err(Error::GridResolution {
                residual: defect,
                tolerance: CDF_TOLERANCE,
            });
        }
        Ok(Self {
            target,
            edges,
            cum,
            rule,
        })
    }

    pub fn support(&self) -> (f64, f64) {
        (self.edges[0], *self.edges.last().unwrap())
    }

    pub fn cells(&self) -> usize {
        self.edges.len() - 1
    }

    /// Total mass captured by the table (1 up to quadrature and truncation).
    pub fn mass(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.target.pdf(x)
    }

    /// x with F(x) = u, for u in [0, 1).
    pub fn invert(&self, u: f64) -> Result<f64> {
        let goal = u.clamp(0.0, 1.0) * self.mass();
        let cells = self.cells();
        let i = (self.cum.partition_point(|&c| c <= goal).max(1) - 1).min(cells - 1);
        let (a, b) = (self.edges[i], self.edges[i + 1]);
        let r = goal - self.cum[i];
        let cell_mass = self.cum[i + 1] - self.cum[i];
        if cell_mass <= 0.0 {
            return Ok(a);
        }
        let mut x = a + (b - a) * (r / cell_mass).clamp(0.0, 1.0);
        let (mut lo, mut hi) = (a, b);
        for _ in 0..60 {
            let g = integrate(&self.rule, &self.target, a, x) - r;
            if g.abs() <= 1e-15 {
                break;
            }
            if g > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            if hi - lo <= 1e-15 * (1.0 + x.abs()) {
                break;
            }
            let f = self.target.pdf(x);
            let newton = x - g / f;
            x = if f > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        let residual = (integrate(&self.rule, &self.target, a, x) - r).abs();
        if residual > CDF_TOLERANCE {
            return Err(Error::GridResolution {
                residual,
                tolerance: CDF_TOLERANCE,
            });
        }
        Ok(x)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        self.invert(rng.random::<f64>())
    }
}

fn integrate(rule: &GaussRule, target: &Target, a: f64, b: f64) -> f64 {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    // weights sum to 1 on [-1, 1], so the interval length is 2 * half
    2.0 * half * rule.integrate(|t| target.pdf(mid + half * t))
}

/// Box carrying all but a negligible tail of p_k^2 d mu for k <= max_degree.
pub fn sampling_box(measure: Measure, max_degree: usize) -> (f64, f64) {
    match measure {
        Measure::Uniform => (-1.0, 1.0),
        Measure::Gaussian => {
            let mut l = GAUSSIAN_START_BOX;
            loop {
                let p = measure.orthonormal_value(l, max_degree);
                if p * p * measure.density(l) < TAIL_DENSITY {
                    return (-l, l);
                }
                l += 1.0;
            }
        }
    }
}

fn cell_count(max_degree: usize) -> usize {
    512 + 64 * max_degree
}

/// The optimal sampling density attached to a basis, with cached tables.
#[derive(Clone, Debug)]
pub struct OptimalDensity {
    spec: BasisSpec,
    backend: SamplerBackend,
    components: Vec<Arc<Vec<InverseCdf>>>,
    full: Option<Arc<InverseCdf>>,
}

impl OptimalDensity {
    pub fn new(spec: BasisSpec) -> Result<Self> {
        Self::with_backend(spec, SamplerBackend::Mixture)
    }

    pub fn with_backend(spec: BasisSpec, backend: SamplerBackend) -> Result<Self> {
        let d = spec.dim();
        if spec.is_rotated() && d > 1 {
            return Err(Error::Unsupported(
                "sampling a rotated multivariate basis".into(),
            ));
        }
        let needs_full = !matches!(backend, SamplerBackend::Mixture) || spec.is_rotated();
        if needs_full && d > 1 {
            return Err(Error::Unsupported(format!(
                "{backend:?} backend in dimension {d}"
            )));
        }
        if let SamplerBackend::Slice(cfg) = &backend {
            if !(cfg.width > 0.0) || cfg.thin == 0 || cfg.max_steps == 0 {
                return invalid("slice width must be positive, thin and max_steps nonzero");
            }
        }
        let mut components = Vec::new();
        let mut full = None;
        if needs_full {
            if !matches!(backend, SamplerBackend::Slice(_)) {
                let measure = spec.measures()[0];
                let k = spec.max_degrees()[0];
                let (lo, hi) = sampling_box(measure, k);
                let table = InverseCdf::build(Target::Full(spec.clone()), lo, hi, cell_count(k))?;
                full = Some(Arc::new(table));
            }
        } else {
            let mut cache: HashMap<Measure, Arc<Vec<InverseCdf>>> = HashMap::new();
            for (&measure, _) in spec.measures().iter().zip(spec.max_degrees()) {
                if cache.contains_key(&measure) {
                    continue;
                }
                let k = spec
                    .measures()
                    .iter()
                    .zip(spec.max_degrees())
                    .filter(|(m, _)| **m == measure)
                    .map(|(_, &k)| k)
                    .max()
                    .unwrap_or(0);
                let (lo, hi) = sampling_box(measure, k);
                let tables = (0..=k)
                    .map(|j| {
                        InverseCdf::build(Target::Degree { measure, k: j }, lo, hi, cell_count(k))
                    })
                    .collect::<Result<Vec<_>>>()?;
                cache.insert(measure, Arc::new(tables));
            }
            components = spec.measures().iter().map(|m| cache[m].clone()).collect();
        }
        Ok(Self {
            spec,
            backend,
            components,
            full,
        })
    }

    pub fn spec(&self) -> &BasisSpec {
        &self.spec
    }

    pub fn backend(&self) -> &SamplerBackend {
        &self.backend
    }

    /// Inverse-CDF table of p_k^2 d mu in coordinate `coord`, if built.
    pub fn component_table(&self, coord: usize, k: usize) -> Option<&InverseCdf> {
        self.components.get(coord).and_then(|t| t.get(k))
    }

    /// Optimal weight w(x) = m / |phi(x)|^2.
    pub fn weight(&self, x: &[f64]) -> Result<f64> {
        self.spec.optimal_weight(x)
    }

    /// w(x)^{-1}, the density of rho with respect to mu.
    pub fn inverse_weight(&self, x: &[f64]) -> Result<f64> {
        let phi = self.spec.eval(x)?;
        Ok(phi.iter().map(|v| v * v).sum::<f64>() / phi.len() as f64)
    }

    /// Lebesgue density of rho for d = 1.
    pub fn pdf_1d(&self, x: f64) -> Result<f64> {
        Ok(self.inverse_weight(&[x])? * self.spec.measures()[0].density(x))
    }

    pub fn sample_univariate<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Result<Vec<f64>> {
        if self.spec.dim() != 1 {
            return invalid(format!("univariate sampler on a {}-d basis", self.spec.dim()));
        }
        if let SamplerBackend::Slice(cfg) = &self.backend {
            return self.slice_chain(cfg, rng, count);
        }
        if let Some(full) = &self.full {
            return (0..count).map(|_| full.sample(rng)).collect();
        }
        let m = self.spec.size();
        let set = self.spec.index_set();
        (0..count)
            .map(|_| {
                let j = rng.random_range(0..m);
                self.components[0][set.get(j)[0]].sample(rng)
            })
            .collect()
    }

    pub fn sample_multivariate<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        count: usize,
    ) -> Result<Vec<Vec<f64>>> {
        if self.spec.dim() == 1 {
            return Ok(self
                .sample_univariate(rng, count)?
                .into_iter()
                .map(|x| vec![x])
                .collect());
        }
        let m = self.spec.size();
        let set = self.spec.index_set();
        (0..count)
            .map(|_| {
                let j = rng.random_range(0..m);
                set.get(j)
                    .iter()
                    .zip(&self.components)
                    .map(|(&k, tables)| tables[k].sample(rng))
                    .collect()
            })
            .collect()
    }

    fn slice_chain<R: Rng + ?Sized>(
        &self,
        cfg: &SliceConfig,
        rng: &mut R,
        count: usize,
    ) -> Result<Vec<f64>> {
        let logf = |x: f64| -> f64 {
            match self.pdf_1d(x) {
                Ok(v) if v > 0.0 => v.ln(),
                _ => f64::NEG_INFINITY,
            }
        };
        let mut x = 0.0;
        if !logf(x).is_finite() {
            return Err(Error::Unsupported("slice sampler start point has zero density".into()));
        }
        for _ in 0..cfg.burn_in {
            x = slice_step(x, &logf, cfg, rng);
        }
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            for _ in 0..cfg.thin {
                x = slice_step(x, &logf, cfg, rng);
            }
            out.push(x);
        }
        Ok(out)
    }
}

/// One stepping-out and shrinkage update.
fn slice_step<R: Rng + ?Sized>(
    x: f64,
    logf: &impl Fn(f64) -> f64,
    cfg: &SliceConfig,
    rng: &mut R,
) -> f64 {
    let level = logf(x) + (1.0 - rng.random::<f64>()).ln();
    let mut left = x - cfg.width * rng.random::<f64>();
    let mut right = left + cfg.width;
    let mut j = (cfg.max_steps as f64 * rng.random::<f64>()) as usize;
    let mut k = cfg.max_steps - 1 - j.min(cfg.max_steps - 1);
    while j > 0 && logf(left) > level {
        left -= cfg.width;
        j -= 1;
    }
    while k > 0 && logf(right) > level {
        right += cfg.width;
        k -= 1;
    }
    for _ in 0..1000 {
        let cand = left + rng.random::<f64>() * (right - left);
        if logf(cand) >= level {
            return cand;
        }
        if cand < x {
            left = cand;
        } else {
            right = cand;
        }
    }
    x
}

/// i.i.d. draws from the reference measure mu (one row per point).
pub fn sample_measure<R: Rng + ?Sized>(measures: &[Measure], rng: &mut R, n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            measures
                .iter()
                .map(|m| match m {
                    Measure::Gaussian => StandardNormal.sample(rng),
                    Measure::Uniform => rng.random_range(-1.0..=1.0),
                })
                .collect()
        })
        .collect()
}

/// How a design was produced.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Method {
    Mu,
    Rho,
    Bls,
    CBls,
    SBls,
    Baseline(String),
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Mu => f.write_str("MU"),
            Method::Rho => f.write_str("RHO"),
            Method::Bls => f.write_str("BLS"),
            Method::CBls => f.write_str("cBLS"),
            Method::SBls => f.write_str("sBLS"),
            Method::Baseline(name) => write!(f, "baseline-{name}"),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "MU" => Method::Mu,
            "RHO" => Method::Rho,
            "BLS" => Method::Bls,
            "cBLS" => Method::CBls,
            "sBLS" => Method::SBls,
            other => match other.strip_prefix("baseline-") {
                Some(name) if !name.is_empty() => Method::Baseline(name.to_string()),
                _ => return invalid(format!("unknown method tag {other:?}")),
            },
        })
    }
}

impl From<Method> for String {
    fn from(m: Method) -> String {
        m.to_string()
    }
}

impl TryFrom<String> for Method {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Whether stored weights are the optimal weights or identically one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    Optimal,
    Unit,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub boost: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Number of BLS draws a conditioned sample needed (J).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rejection_count: Option<usize>,
    /// Indices into the parent sample, in removal order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub removed_indices: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
}

/// Ordered design points with their weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub method: Method,
    pub weighting: Weighting,
    #[serde(rename = "metadata")]
    pub meta: SampleMeta,
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl SampleSet {
    /// Attaches optimal weights to `points`.
    pub fn with_optimal_weights(spec: &BasisSpec, points: Vec<Vec<f64>>, method: Method) -> Result<Self> {
        let weights = points
            .iter()
            .map(|x| spec.optimal_weight(x))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            method,
            weighting: Weighting::Optimal,
            meta: SampleMeta::default(),
            points,
            weights,
        })
    }

    pub fn with_unit_weights(points: Vec<Vec<f64>>, method: Method) -> Self {
        let weights = vec![1.0; points.len()];
        Self {
            method,
            weighting: Weighting::Unit,
            meta: SampleMeta::default(),
            points,
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    /// Largest relative gap between stored and recomputed optimal weights.
    pub fn weight_defect(&self, spec: &BasisSpec) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for (x, &w) in self.points.iter().zip(&self.weights) {
            let phi = spec.eval(x)?;
            let fresh = weight_from_features(&phi).ok_or_else(|| Error::ZeroBasisNorm(x.clone()))?;
            worst = worst.max(((w - fresh) / fresh).abs());
        }
        Ok(worst)
    }

    /// Sub-sample keeping `keep` (indices into self) in the given order.
    pub fn subset(&self, keep: &[usize]) -> Self {
        Self {
            method: self.method.clone(),
            weighting: self.weighting,
            meta: self.meta.clone(),
            points: keep.iter().map(|&i| self.points[i].clone()).collect(),
            weights: keep.iter().map(|&i| self.weights[i]).collect(),
        }
    }

    /// One row per point: x1..xd, weight.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let d = self.dim();
        let mut header: Vec<String> = (1..=d).map(|k| format!("x{k}")).collect();
        header.push("weight".into());
        w.write_record(&header)?;
        for (x, wt) in self.points.iter().zip(&self.weights) {
            let mut row: Vec<String> = x.iter().map(|v| format!("{v:e}")).collect();
            row.push(format!("{wt:e}"));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the CSV layout of [`SampleSet::write_csv`]; metadata is not stored there.
    pub fn read_csv<R: Read>(reader: R, method: Method, weighting: Weighting) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        if headers.iter().next_back() != Some("weight") {
            return invalid("sample CSV must end with a weight column");
        }
        let d = headers.len() - 1;
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let vals = rec
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::InvalidArgument(format!("bad number in sample CSV: {e}")))?;
            points.push(vals[..d].to_vec());
            weights.push(vals[d]);
        }
        Ok(Self {
            method,
            weighting,
            meta: SampleMeta::default(),
            points,
            weights,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let set: Self = serde_json::from_str(s)?;
        if set.points.len() != set.weights.len() {
            return invalid("points and weights differ in length");
        }
        Ok(set)
    }
}

/// n i.i.d. draws from rho with optimal weights attached.
pub fn draw_product_sample<R: Rng + ?Sized>(
    density: &OptimalDensity,
    rng: &mut R,
    n: usize,
) -> Result<SampleSet> {
    if n == 0 {
        return invalid("sample size must be at least 1");
    }
    let points = density.sample_multivariate(rng, n)?;
    SampleSet::with_optimal_weights(density.spec(), points, Method::Rho)
}

/// n i.i.d. draws from mu with unit weights.
pub fn draw_mu_sample<R: Rng + ?Sized>(spec: &BasisSpec, rng: &mut R, n: usize) -> Result<SampleSet> {
    if n == 0 {
        return invalid("sample size must be at least 1");
    }
    Ok(SampleSet::with_unit_weights(
        sample_measure(spec.measures(), rng, n),
        Method::Mu,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::IndexRule;
    use crate::seed::rng_for;
    use crate::stats::{ks_critical, ks_statistic, mean, std_err};

    #[test]
    fn weight_examples() {
        let d = OptimalDensity::new(BasisSpec::univariate(Measure::Uniform, 0)).unwrap();
        assert_eq!(d.weight(&[0.37]).unwrap(), 1.0);
        let d = OptimalDensity::new(BasisSpec::univariate(Measure::Gaussian, 1)).unwrap();
        assert_eq!(d.weight(&[0.0]).unwrap(), 2.0);
        let d = OptimalDensity::new(BasisSpec::univariate(Measure::Uniform, 5)).unwrap();
        // endpoint values sqrt(2k+1), squared sum 1+3+...+11 = 36
        assert!((d.weight(&[1.0]).unwrap() - 6.0 / 36.0).abs() < 1e-13);
    }

    #[test]
    fn tables_carry_unit_mass() {
        for measure in [Measure::Gaussian, Measure::Uniform] {
            let d = OptimalDensity::new(BasisSpec::univariate(measure, 40)).unwrap();
            for k in [0, 7, 40] {
                let t = d.component_table(0, k).unwrap();
                assert!((t.mass() - 1.0).abs() < 1e-11, "{measure:?} {k}: {}", t.mass());
            }
        }
    }

    #[test]
    fn gaussian_box_widens_with_degree() {
        assert_eq!(sampling_box(Measure::Gaussian, 0), (-12.0, 12.0));
        let (_, l) = sampling_box(Measure::Gaussian, 40);
        assert!(l > 12.0);
        let p = Measure::Gaussian.orthonormal_value(l, 40);
        assert!(p * p * Measure::Gaussian.density(l) < TAIL_DENSITY);
    }

    #[test]
    fn inversion_is_consistent_with_cdf() {
        let d = OptimalDensity::new(BasisSpec::univariate(Measure::Gaussian, 5)).unwrap();
        let t = d.component_table(0, 3).unwrap();
        // F(0) = 1/2 by symmetry
        assert!(t.invert(0.5).unwrap().abs() < 1e-9);
        let (lo, hi) = t.support();
        assert!(t.invert(0.0).unwrap() >= lo);
        assert!(t.invert(1.0 - 1e-16).unwrap() <= hi);
    }

    #[test]
    fn constant_space_draws_from_mu() {
        let d = OptimalDensity::new(BasisSpec::univariate(Measure::Uniform, 0)).unwrap();
        let mut rng = rng_for(1, 0);
        let x = d.sample_univariate(&mut rng, 100_000).unwrap();
        assert!(mean(&x).abs() < 0.01);
        assert!(x.iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn legendre_weighted_moment_matches_quadrature() {
        // E_rho[w^{-1}(x) x^2] = int x^2 w^{-2} d mu
        let spec = BasisSpec::univariate(Measure::Uniform, 5);
        let d = OptimalDensity::new(spec.clone()).unwrap();
        let iw = |x: f64| d.inverse_weight(&[x]).unwrap();
        let exact = Measure::Uniform.gauss_rule(20).integrate(|x| x * x * iw(x) * iw(x));
        let mut rng = rng_for(2, 0);
        let vals: Vec<f64> = d
            .sample_univariate(&mut rng, 100_000)
            .unwrap()
            .into_iter()
            .map(|x| iw(x) * x * x)
            .collect();
        assert!((mean(&vals) - exact).abs() < 3.0 * std_err(&vals));
    }

    #[test]
    fn hermite_draws_are_symmetric() {
        let d = OptimalDensity::new(BasisSpec::univariate(Measure::Gaussian, 5)).unwrap();
        let mut rng = rng_for(3, 0);
        let x = d.sample_univariate(&mut rng, 100_000).unwrap();
        assert!(mean(&x).abs() < 3.0 * std_err(&x));
    }

    #[test]
    fn backends_agree_in_law() {
        let spec = BasisSpec::univariate(Measure::Gaussian, 5);
        let n = 10_000;
        let mix = OptimalDensity::new(spec.clone()).unwrap();
        let grid = OptimalDensity::with_backend(spec.clone(), SamplerBackend::Grid).unwrap();
        let slice = OptimalDensity::with_backend(
            spec,
            SamplerBackend::Slice(SliceConfig {
                thin: 5,
                ..SliceConfig::default()
            }),
        )
        .unwrap();
        let a = mix.sample_univariate(&mut rng_for(4, 0), n).unwrap();
        let b = grid.sample_univariate(&mut rng_for(4, 1), n).unwrap();
        let c = slice.sample_univariate(&mut rng_for(4, 2), n).unwrap();
        let crit = ks_critical(n, n, 0.01);
        assert!(ks_statistic(&a, &b) < crit);
        assert!(ks_statistic(&a, &c) < crit);
    }

    #[test]
    fn multivariate_gram_expectation_is_identity() {
        let spec = BasisSpec::tensor(Measure::Uniform, 2, IndexRule::HyperbolicCross(4)).unwrap();
        let m = spec.size();
        let d = OptimalDensity::new(spec.clone()).unwrap();
        let n = 100_000;
        let s = draw_product_sample(&d, &mut rng_for(5, 0), n).unwrap();
        let feats: Vec<Vec<f64>> = s.points.iter().map(|x| spec.eval(x).unwrap()).collect();
        for i in 0..m {
            for j in 0..=i {
                let v: Vec<f64> = feats
                    .iter()
                    .zip(&s.weights)
                    .map(|(f, w)| w * f[i] * f[j])
                    .collect();
                let target = if i == j { 1.0 } else { 0.0 };
                let tol = 3.0 * std_err(&v) + 1e-12;
                // a handful of 3-sigma exceedances is expected among 55 entries
                assert!((mean(&v) - target).abs() < 1.5 * tol, "entry ({i},{j})");
            }
        }
    }

    #[test]
    fn constant_multivariate_space() {
        let spec = BasisSpec::tensor(Measure::Gaussian, 2, IndexRule::TotalDegree(0)).unwrap();
        let d = OptimalDensity::new(spec).unwrap();
        let s = draw_product_sample(&d, &mut rng_for(6, 0), 1).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.weights, vec![1.0]);
    }

    #[test]
    fn seeded_draws_repeat_exactly() {
        let d = OptimalDensity::new(BasisSpec::univariate(Measure::Uniform, 5)).unwrap();
        let a = draw_product_sample(&d, &mut rng_for(7, 0), 134).unwrap();
        let b = draw_product_sample(&d, &mut rng_for(7, 0), 134).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.method, Method::Rho);
        assert!(a.weight_defect(d.spec()).unwrap() < 1e-10);
    }

    #[test]
    fn rotated_multivariate_rejected() {
        let desc = crate::basis::BasisDescriptor {
            seed_for_rotation: Some(1),
            ..crate::basis::BasisDescriptor::new(Measure::Gaussian, 2, IndexRule::TotalDegree(2))
        };
        let err = OptimalDensity::new(desc.build().unwrap()).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
    }

    #[test]
    fn rotated_univariate_uses_full_table() {
        let desc = crate::basis::BasisDescriptor {
            seed_for_rotation: Some(9),
            rotated_dim: Some(6),
            ..crate::basis::BasisDescriptor::new(Measure::Gaussian, 1, IndexRule::TotalDegree(12))
        };
        let d = OptimalDensity::new(desc.build().unwrap()).unwrap();
        let s = draw_product_sample(&d, &mut rng_for(8, 0), 500).unwrap();
        assert!(s.weight_defect(d.spec()).unwrap() < 1e-10);
    }

    #[test]
    fn method_tags_round_trip() {
        for tag in ["MU", "RHO", "BLS", "cBLS", "sBLS", "baseline-leja"] {
            let m: Method = tag.parse().unwrap();
            assert_eq!(m.to_string(), tag);
        }
        assert!("baseline-".parse::<Method>().is_err());
        assert!("xyz".parse::<Method>().is_err());
    }

    #[test]
    fn csv_and_json_round_trip() {
        let spec = BasisSpec::tensor(Measure::Gaussian, 2, IndexRule::TotalDegree(2)).unwrap();
        let d = OptimalDensity::new(spec).unwrap();
        let mut s = draw_product_sample(&d, &mut rng_for(9, 0), 7).unwrap();
        s.meta.boost = Some(3);
        s.meta.rejection_count = Some(2);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let back = SampleSet::read_csv(buf.as_slice(), Method::Rho, Weighting::Optimal).unwrap();
        assert_eq!(back.points, s.points);
        assert_eq!(back.weights, s.weights);
        let json = s.to_json().unwrap();
        assert!(json.contains("\"M\": 3"));
        assert_eq!(SampleSet::from_json(&json).unwrap(), s);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(32))]
        #[test]
        fn drawn_points_satisfy_weight_identity(seed in 0u64..1000, p in 0usize..12) {
            let spec = BasisSpec::univariate(Measure::Gaussian, p);
            let d = OptimalDensity::new(spec.clone()).unwrap();
            let s = draw_product_sample(&d, &mut rng_for(seed, 0), 20).unwrap();
            for (x, w) in s.points.iter().zip(&s.weights) {
                let n2: f64 = spec.eval(x).unwrap().iter().map(|v| v * v).sum();
                proptest::prop_assert!((w * n2 - spec.size() as f64).abs() <= 1e-10 * spec.size() as f64);
            }
        }
    }
}
