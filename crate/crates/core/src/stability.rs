//! Empirical Gram matrix, the stability statistic Z = |G - I|_2, the
//! sample-size rule, and the boosted samplers BLS (best of M draws) and
//! c-BLS (BLS repeated until Z <= delta).

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::BasisSpec;
use crate::error::{invalid, Error, Result};
use crate::sampling::{draw_product_sample, Method, OptimalDensity, SampleSet};
use crate::seed::rng_for;

#[derive(Clone, Debug)]
pub struct GramReport {
    pub g: DMatrix<f64>,
    pub z: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub n_points: usize,
}

impl GramReport {
    pub fn from_matrix(g: DMatrix<f64>, n_points: usize) -> Self {
        let (lambda_min, lambda_max) = extreme_eigenvalues(&g);
        Self {
            z: (lambda_max - 1.0).max(1.0 - lambda_min).max(0.0),
            g,
            lambda_min,
            lambda_max,
            n_points,
        }
    }

    pub fn stable_at(&self, delta: f64) -> bool {
        self.z <= delta
    }

    pub fn trace(&self) -> f64 {
        self.g.trace()
    }
}

pub fn extreme_eigenvalues(g: &DMatrix<f64>) -> (f64, f64) {
    let ev = g.clone().symmetric_eigenvalues();
    let lo = ev.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Spectral norm of G - I.
pub fn z_of(g: &DMatrix<f64>) -> f64 {
    let (lo, hi) = extreme_eigenvalues(g);
    (hi - 1.0).max(1.0 - lo).max(0.0)
}

/// (1/n) sum_i w_i phi_i phi_i^T from a row-stacked feature matrix.
pub fn gram_matrix(features: &DMatrix<f64>, weights: &[f64]) -> DMatrix<f64> {
    let n = features.nrows();
    let scale = DVector::from_iterator(n, weights.iter().map(|w| (w / n as f64).sqrt()));
    let a = DMatrix::from_fn(n, features.ncols(), |i, j| scale[i] * features[(i, j)]);
    let mut g = a.tr_mul(&a);
    // symmetrize against rounding in the product
    let gt = g.transpose();
    g += gt;
    g *= 0.5;
    g
}

pub fn gram(sample: &SampleSet, spec: &BasisSpec) -> Result<GramReport> {
    if sample.is_empty() {
        return invalid("Gram matrix of an empty sample");
    }
    let feats = spec.feature_matrix(&sample.points)?;
    Ok(GramReport::from_matrix(
        gram_matrix(&feats, &sample.weights),
        sample.len(),
    ))
}

/// d_delta = -delta + (1 + delta) ln(1 + delta).
pub fn d_delta(delta: f64) -> f64 {
    -delta + (1.0 + delta) * delta.ln_1p()
}

/// Smallest n with n >= m ln(2m / eta) / d_delta.
pub fn required_sample_size(delta: f64, eta: f64, m: usize) -> Result<usize> {
    if !(delta > 0.0 && delta < 1.0) {
        return invalid(format!("delta must lie in (0, 1), got {delta}"));
    }
    if !(eta > 0.0 && eta < 1.0) {
        return invalid(format!("eta must lie in (0, 1), got {eta}"));
    }
    if m == 0 {
        return invalid("m must be at least 1");
    }
    let m_f = m as f64;
    Ok((m_f * (2.0 * m_f / eta).ln() / d_delta(delta)).ceil() as usize)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoostConfig {
    pub delta: f64,
    pub eta: f64,
    /// Number M of independent candidate samples.
    #[serde(rename = "M")]
    pub boost: usize,
    #[serde(default)]
    pub n_override: Option<usize>,
    #[serde(default = "default_max_rejections")]
    pub max_rejections: usize,
}

fn default_max_rejections() -> usize {
    1000
}

impl BoostConfig {
    pub fn new(delta: f64, eta: f64, boost: usize) -> Self {
        Self {
            delta,
            eta,
            boost,
            n_override: None,
            max_rejections: default_max_rejections(),
        }
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n_override = Some(n);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.delta) {
            return invalid(format!("delta must lie in [0, 1), got {}", self.delta));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return invalid(format!("eta must lie in (0, 1), got {}", self.eta));
        }
        if self.boost == 0 {
            return invalid("M must be at least 1");
        }
        if self.max_rejections == 0 {
            return invalid("max_rejections must be at least 1");
        }
        if self.n_override == Some(0) {
            return invalid("sample size must be at least 1");
        }
        Ok(())
    }

    pub fn sample_size(&self, m: usize) -> Result<usize> {
        match self.n_override {
            Some(n) => Ok(n),
            None => required_sample_size(self.delta, self.eta, m),
        }
    }
}

/// Best of M independent product samples. Candidate i uses a generator
/// derived from one draw of `rng` and i, so the result does not depend on
/// how candidates are scheduled.
pub fn boost_resample<R: Rng + ?Sized>(
    density: &OptimalDensity,
    config: &BoostConfig,
    rng: &mut R,
) -> Result<SampleSet> {
    config.validate()?;
    let spec = density.spec();
    let n = config.sample_size(spec.size())?;
    let root: u64 = rng.random();
    let candidates: Vec<(f64, SampleSet)> = (0..config.boost as u64)
        .into_par_iter()
        .map(|i| {
            let s = draw_product_sample(density, &mut rng_for(root, i), n)?;
            let z = gram(&s, spec)?.z;
            Ok((z, s))
        })
        .collect::<Result<_>>()?;
    let best = candidates.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
    // uniform choice among exact minimizers
    let mut pick = 0;
    let mut ties = 0usize;
    for (i, c) in candidates.iter().enumerate() {
        if c.0 == best {
            ties += 1;
            if rng.random_range(0..ties) == 0 {
                pick = i;
            }
        }
    }
    let (z, mut sample) = candidates.into_iter().nth(pick).expect("M >= 1");
    sample.method = Method::Bls;
    sample.meta.boost = Some(config.boost);
    sample.meta.delta = Some(config.delta);
    sample.meta.eta = Some(config.eta);
    sample.meta.z = Some(z);
    Ok(sample)
}

/// BLS repeated until Z <= delta; the number of BLS calls is recorded as J.
pub fn boost_condition<R: Rng + ?Sized>(
    density: &OptimalDensity,
    config: &BoostConfig,
    rng: &mut R,
) -> Result<SampleSet> {
    config.validate()?;
    let mut observed = Vec::new();
    for j in 1..=config.max_rejections {
        let mut s = boost_resample(density, config, rng)?;
        let z = s.meta.z.expect("BLS records Z");
        if z <= config.delta {
            s.method = Method::CBls;
            s.meta.rejection_count = Some(j);
            return Ok(s);
        }
        observed.push(z);
    }
    Err(Error::RejectionCapExceeded {
        cap: config.max_rejections,
        delta: config.delta,
        observed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::Measure;
    use crate::sampling::SampleSet;
    use crate::seed::rng_for;
    use crate::stats::median;
    use proptest::prelude::*;

    fn legendre(p: usize) -> OptimalDensity {
        OptimalDensity::new(BasisSpec::univariate(Measure::Uniform, p)).unwrap()
    }

    #[test]
    fn sample_size_rule() {
        assert!((d_delta(0.9) - 0.319_522).abs() < 1e-6);
        assert_eq!(required_sample_size(0.9, 0.01, 6).unwrap(), 134);
        assert_eq!(required_sample_size(0.9, 0.01f64.powf(0.01), 6).unwrap(), 48);
        assert_eq!(required_sample_size(0.9, 0.01, 11).unwrap(), 265);
        assert!(required_sample_size(0.0, 0.01, 6).is_err());
        assert!(required_sample_size(0.9, 1.0, 6).is_err());
    }

    #[test]
    fn single_point_gram_is_rank_one() {
        let d = legendre(5);
        let s = draw_product_sample(&d, &mut rng_for(1, 0), 1).unwrap();
        let r = gram(&s, d.spec()).unwrap();
        assert!((r.trace() - 6.0).abs() < 1e-12);
        assert!((r.z - 5.0).abs() < 1e-10);
    }

    #[test]
    fn constant_space_gram_is_one() {
        let d = legendre(0);
        let s = draw_product_sample(&d, &mut rng_for(2, 0), 17).unwrap();
        let r = gram(&s, d.spec()).unwrap();
        assert!((r.g[(0, 0)] - 1.0).abs() < 1e-15);
        assert!(r.z < 1e-15);
    }

    #[test]
    fn large_samples_concentrate() {
        let d = legendre(5);
        let stable = (0..50u64)
            .filter(|&r| {
                let s = draw_product_sample(&d, &mut rng_for(3, r), 100_000).unwrap();
                gram(&s, d.spec()).unwrap().z < 0.1
            })
            .count();
        assert!(stable as f64 >= 0.95 * 50.0);
    }

    #[test]
    fn boosting_lowers_the_median() {
        let d = legendre(5);
        let reps = 200u64;
        let zs = |m: usize| -> Vec<f64> {
            let cfg = BoostConfig::new(0.9, 0.5, m).with_n(48);
            (0..reps)
                .map(|r| boost_resample(&d, &cfg, &mut rng_for(4, r)).unwrap().meta.z.unwrap())
                .collect()
        };
        assert!(median(&zs(10)) < median(&zs(1)));
    }

    #[test]
    fn conditioned_samples_are_stable() {
        let d = legendre(5);
        let cfg = BoostConfig::new(0.9, 0.5, 1);
        for r in 0..50u64 {
            let s = boost_condition(&d, &cfg, &mut rng_for(5, r)).unwrap();
            assert_eq!(s.method, Method::CBls);
            assert!(gram(&s, d.spec()).unwrap().z <= 0.9);
            assert!(s.meta.rejection_count.unwrap() >= 1);
        }
    }

    #[test]
    fn rejection_cap_reports_observations() {
        let d = legendre(5);
        let mut cfg = BoostConfig::new(0.1, 0.5, 1).with_n(6);
        cfg.max_rejections = 3;
        match boost_condition(&d, &cfg, &mut rng_for(6, 0)) {
            Err(Error::RejectionCapExceeded { cap, observed, .. }) => {
                assert_eq!(cap, 3);
                assert_eq!(observed.len(), 3);
                assert!(observed.iter().all(|&z| z > 0.1));
            }
            other => panic!("expected cap error, got {other:?}"),
        }
    }

    #[test]
    fn ties_are_resolved_among_minimizers() {
        // m = 1 makes every candidate exactly stable, so all M tie at Z = 0
        let d = legendre(0);
        let cfg = BoostConfig::new(0.5, 0.5, 8).with_n(3);
        let firsts: std::collections::HashSet<u64> = (0..40u64)
            .map(|r| {
                boost_resample(&d, &cfg, &mut rng_for(7, r)).unwrap().points[0][0].to_bits()
            })
            .collect();
        assert!(firsts.len() > 1);
    }

    #[test]
    fn boosting_is_reproducible() {
        let d = legendre(5);
        let cfg = BoostConfig::new(0.9, 0.01f64.powf(0.1), 10);
        let a = boost_condition(&d, &cfg, &mut rng_for(8, 0)).unwrap();
        let b = boost_condition(&d, &cfg, &mut rng_for(8, 0)).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn z_is_permutation_invariant(seed in 0u64..10_000, shift in 1usize..20) {
            let d = legendre(4);
            let s = draw_product_sample(&d, &mut rng_for(seed, 0), 20).unwrap();
            let mut order: Vec<usize> = (0..20).collect();
            order.rotate_left(shift % 20);
            order.swap(0, 7);
            let t: SampleSet = s.subset(&order);
            let a = gram(&s, d.spec()).unwrap();
            let b = gram(&t, d.spec()).unwrap();
            prop_assert!((a.z - b.z).abs() < 1e-12);
            prop_assert!((a.trace() - 5.0).abs() < 1e-8);
            prop_assert!((&a.g - a.g.transpose()).amax() < 1e-12);
        }

        #[test]
        fn sample_size_monotone(delta in 0.05f64..0.95, eta in 0.001f64..0.9, m in 1usize..200) {
            let n = required_sample_size(delta, eta, m).unwrap();
            prop_assert!(required_sample_size(delta, eta, m + 1).unwrap() >= n);
            prop_assert!(required_sample_size(delta, eta * 0.9, m).unwrap() >= n);
            prop_assert!(required_sample_size((delta + 0.04).min(0.99), eta, m).unwrap() <= n);
        }
    }
}
