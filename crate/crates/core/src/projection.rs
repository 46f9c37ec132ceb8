//! Weighted least-squares projection onto V_m, with optional additive noise,
//! the conditional estimator (projection if Z <= delta, zero otherwise), and
//! quadrature-based error functionals.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::basis::{BasisDescriptor, BasisSpec};
use crate::error::{invalid, Error, Result};
use crate::sampling::{draw_product_sample, Method, OptimalDensity, SampleMeta, SampleSet, Weighting};
use crate::stability::BoostConfig;

/// Relative singular-value floor of the weighted design below which the
/// least-squares system is treated as singular.
pub const SINGULAR_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    #[default]
    None,
    Gaussian { sigma: f64 },
}

impl NoiseModel {
    pub fn sigma(&self) -> f64 {
        match self {
            NoiseModel::None => 0.0,
            NoiseModel::Gaussian { sigma } => *sigma,
        }
    }

    /// Adds i.i.d. centered noise to `values` in place.
    pub fn perturb<R: Rng + ?Sized>(&self, values: &mut [f64], rng: &mut R) -> Result<()> {
        if let NoiseModel::Gaussian { sigma } = *self {
            let normal = Normal::new(0.0, sigma)
                .map_err(|e| Error::InvalidArgument(format!("noise sigma {sigma}: {e}")))?;
            values.iter_mut().for_each(|v| *v += normal.sample(rng));
        }
        Ok(())
    }
}

/// A fitted element of V_m together with the design that produced it.
#[derive(Clone, Debug)]
pub struct ApproxModel {
    pub coefficients: Vec<f64>,
    pub spec: BasisSpec,
    pub sample: SampleSet,
    /// Minimized objective (1/n) sum_i w_i (y_i - v(x_i))^2.
    pub residual_discrete: f64,
}

#[derive(Serialize, Deserialize)]
struct SampleRecord {
    method: Method,
    weighting: Weighting,
    n: usize,
    metadata: SampleMeta,
}

#[derive(Serialize, Deserialize)]
struct ModelRecord {
    basis: Option<BasisDescriptor>,
    m: usize,
    coefficients: Vec<f64>,
    sample: SampleRecord,
    residual: f64,
}

impl ApproxModel {
    pub fn zero(spec: &BasisSpec, sample: SampleSet) -> Self {
        Self {
            coefficients: vec![0.0; spec.size()],
            spec: spec.clone(),
            sample,
            residual_discrete: 0.0,
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.spec.eval_expansion(&self.coefficients, x)
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.iter().all(|&c| c == 0.0)
    }

    /// JSON document with the basis descriptor, coefficients, sample metadata
    /// and residual. Points are not included.
    pub fn to_json(&self) -> Result<String> {
        let rec = ModelRecord {
            basis: self.spec.descriptor().cloned(),
            m: self.spec.size(),
            coefficients: self.coefficients.clone(),
            sample: SampleRecord {
                method: self.sample.method.clone(),
                weighting: self.sample.weighting,
                n: self.sample.len(),
                metadata: self.sample.meta.clone(),
            },
            residual: self.residual_discrete,
        };
        Ok(serde_json::to_string_pretty(&rec)?)
    }

    /// Rebuilds the coefficient vector and basis from [`ApproxModel::to_json`].
    /// The design points are not stored, so the returned sample is empty.
    pub fn from_json(s: &str) -> Result<Self> {
        let rec: ModelRecord = serde_json::from_str(s)?;
        let Some(desc) = rec.basis else {
            return invalid("model JSON lacks a basis descriptor");
        };
        let spec = desc.build()?;
        if spec.size() != rec.coefficients.len() {
            return invalid("coefficient count does not match basis size");
        }
        let mut sample = SampleSet::with_unit_weights(Vec::new(), rec.sample.method);
        sample.weighting = rec.sample.weighting;
        sample.meta = rec.sample.metadata;
        Ok(Self {
            coefficients: rec.coefficients,
            spec,
            sample,
            residual_discrete: rec.residual,
        })
    }
}

/// Weighted least squares from already computed observations `y`.
pub fn fit_values(sample: &SampleSet, spec: &BasisSpec, y: &[f64]) -> Result<ApproxModel> {
    let n = sample.len();
    let m = spec.size();
    if y.len() != n {
        return invalid(format!("{} observations for {n} points", y.len()));
    }
    if n < m {
        return Err(Error::Singular(format!("{n} points cannot determine {m} coefficients")));
    }
    let feats = spec.feature_matrix(&sample.points)?;
    let scale: Vec<f64> = sample.weights.iter().map(|w| (w / n as f64).sqrt()).collect();
    let a = DMatrix::from_fn(n, m, |i, j| scale[i] * feats[(i, j)]);
    let b = DVector::from_iterator(n, y.iter().zip(&scale).map(|(v, s)| v * s));
    // sigma(A)^2 are the eigenvalues of G; judging on sigma keeps square,
    // badly conditioned but solvable systems in play
    let sv = a.clone().singular_values();
    let (lo, hi) = (sv.min(), sv.max());
    if !(lo > SINGULAR_TOL * hi) {
        return Err(Error::Singular(format!(
            "weighted design singular values in [{lo:e}, {hi:e}]"
        )));
    }
    let qr = a.clone().qr();
    let qtb = qr.q().tr_mul(&b);
    let coef = qr
        .r()
        .solve_upper_triangular(&qtb)
        .ok_or_else(|| Error::Singular("triangular factor is singular".into()))?;
    let residual = (&a * &coef - &b).norm_squared();
    Ok(ApproxModel {
        coefficients: coef.iter().copied().collect(),
        spec: spec.clone(),
        sample: sample.clone(),
        residual_discrete: residual,
    })
}

/// Evaluates `u` on the design, adds noise, and fits.
pub fn fit<F, R>(
    sample: &SampleSet,
    spec: &BasisSpec,
    u: F,
    noise: NoiseModel,
    rng: &mut R,
) -> Result<ApproxModel>
where
    F: Fn(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    let mut y: Vec<f64> = sample.points.iter().map(|x| u(x)).collect();
    noise.perturb(&mut y, rng)?;
    fit_values(sample, spec, &y)
}

/// One n-point draw from rho; the projection if Z <= delta, else zero.
pub fn fit_conditional<F, R>(
    density: &OptimalDensity,
    config: &BoostConfig,
    u: F,
    rng: &mut R,
) -> Result<(ApproxModel, bool)>
where
    F: Fn(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    config.validate()?;
    let spec = density.spec();
    let n = config.sample_size(spec.size())?;
    let sample = draw_product_sample(density, rng, n)?;
    let z = crate::stability::gram(&sample, spec)?.z;
    if z > config.delta {
        return Ok((ApproxModel::zero(spec, sample), false));
    }
    let y: Vec<f64> = sample.points.iter().map(|x| u(x)).collect();
    Ok((fit_values(&sample, spec, &y)?, true))
}

/// Root-mean-square error of `model` against `u` over `test_points`.
pub fn test_error<F>(model: &ApproxModel, u: F, test_points: &[Vec<f64>]) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    if test_points.is_empty() {
        return invalid("test error needs at least one point");
    }
    let mut acc = 0.0;
    for x in test_points {
        let e = u(x) - model.eval(x)?;
        acc += e * e;
    }
    Ok((acc / test_points.len() as f64).sqrt())
}

/// Squared L2(mu) norms computed by a converged tensor Gauss rule.
#[derive(Clone, Copy, Debug)]
pub struct BestApproximation {
    /// |u - P u|^2
    pub alpha: f64,
    /// |u|^2
    pub u_norm2: f64,
    /// Gauss nodes per coordinate at convergence.
    pub order: usize,
}

/// |u - P_{V_m} u|^2 by tensor Gauss quadrature, doubling the order until the
/// value moves by less than 1e-10 relative (or the node budget is spent).
/// Every coordinate gets the same order.
pub fn best_approximation_error<F>(spec: &BasisSpec, u: F) -> Result<BestApproximation>
where
    F: Fn(&[f64]) -> f64,
{
    const MAX_NODES: usize = 4_000_000;
    const MAX_ORDER: usize = 1024;
    let d = spec.dim() as u32;
    let mut order = spec.max_degrees().iter().copied().max().unwrap_or(0) + 2;
    let mut prev: Option<BestApproximation> = None;
    loop {
        let (points, weights) = spec.tensor_quadrature(order);
        let m = spec.size();
        let mut coef = vec![0.0; m];
        let mut buf = vec![0.0; m];
        let mut uvals = Vec::with_capacity(points.len());
        let mut u_norm2 = 0.0;
        for (x, &w) in points.iter().zip(&weights) {
            let v = u(x);
            spec.eval_into(x, &mut buf)?;
            for (c, p) in coef.iter_mut().zip(&buf) {
                *c += w * v * p;
            }
            u_norm2 += w * v * v;
            uvals.push(v);
        }
        let mut alpha = 0.0;
        for ((x, &w), v) in points.iter().zip(&weights).zip(&uvals) {
            spec.eval_into(x, &mut buf)?;
            let pu: f64 = coef.iter().zip(&buf).map(|(c, p)| c * p).sum();
            alpha += w * (v - pu).powi(2);
        }
        let cur = BestApproximation {
            alpha,
            u_norm2,
            order,
        };
        if let Some(p) = prev {
            // the floor sits at the rounding level of the pointwise residuals
            let tol = 1e-10 * cur.alpha + 1e-28 * cur.u_norm2;
            if (p.alpha - cur.alpha).abs() <= tol {
                return Ok(cur);
            }
        }
        if 2 * order > MAX_ORDER || (2 * order).pow(d) > MAX_NODES {
            return Ok(cur);
        }
        prev = Some(cur);
        order *= 2;
    }
}
