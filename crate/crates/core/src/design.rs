//! Method catalogue and design construction under the experiment n policies.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::{build_point_system, interpolate, PointKind, DEFAULT_GRID_SIZE};
use crate::basis::BasisSpec;
use crate::error::{invalid, Error, Result};
use crate::projection::{fit_values, ApproxModel};
use crate::sampling::{draw_mu_sample, draw_product_sample, OptimalDensity, SampleSet};
use crate::stability::{boost_condition, boost_resample, gram, required_sample_size, BoostConfig};
use crate::subsampling::{greedy_subsample, GreedyConfig, GreedyVariant, OpCounters};

/// A sampling or interpolation method as named on the command line:
/// `sls`, `owls`, `bls:M`, `cbls:M`, `sbls:M`, `gauss`, `leja`, `fekete`, `magic`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum MethodSpec {
    Sls,
    Owls,
    Bls(usize),
    CBls(usize),
    SBls(usize),
    Interp(PointKind),
}

impl MethodSpec {
    /// Parses `s`, filling a missing `:M` with `default_boost`.
    pub fn parse_with_default(s: &str, default_boost: usize) -> Result<Self> {
        let (name, boost) = match s.split_once(':') {
            Some((name, m)) => {
                let m: usize = m
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("bad M in method {s:?}")))?;
                (name, Some(m))
            }
            None => (s, None),
        };
        let name = name.trim().to_ascii_lowercase();
        let boosted = |ctor: fn(usize) -> MethodSpec| -> Result<MethodSpec> {
            let m = boost.unwrap_or(default_boost);
            if m == 0 {
                return invalid(format!("M must be at least 1 in {s:?}"));
            }
            Ok(ctor(m))
        };
        let plain = |spec: MethodSpec| -> Result<MethodSpec> {
            if boost.is_some() {
                return invalid(format!("method {name} takes no M"));
            }
            Ok(spec)
        };
        match name.as_str() {
            "sls" => plain(MethodSpec::Sls),
            "owls" => plain(MethodSpec::Owls),
            "bls" => boosted(MethodSpec::Bls),
            "cbls" | "c-bls" => boosted(MethodSpec::CBls),
            "sbls" | "s-bls" => boosted(MethodSpec::SBls),
            "gauss" => plain(MethodSpec::Interp(PointKind::Gauss)),
            "leja" => plain(MethodSpec::Interp(PointKind::Leja)),
            "fekete" => plain(MethodSpec::Interp(PointKind::Fekete)),
            "magic" => plain(MethodSpec::Interp(PointKind::Magic)),
            _ => invalid(format!("unknown method {s:?}")),
        }
    }

    pub fn is_interpolation(&self) -> bool {
        matches!(self, MethodSpec::Interp(_))
    }

    /// Column heading used in text tables.
    pub fn label(&self) -> String {
        match self {
            MethodSpec::Sls => "SLS".into(),
            MethodSpec::Owls => "OWLS".into(),
            MethodSpec::Bls(m) => format!("BLS (M={m})"),
            MethodSpec::CBls(m) => format!("c-BLS (M={m})"),
            MethodSpec::SBls(m) => format!("s-BLS (M={m})"),
            MethodSpec::Interp(k) => {
                let name = k.name();
                format!("I-{}{}", name[..1].to_ascii_uppercase(), &name[1..])
            }
        }
    }
}

impl FromStr for MethodSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        MethodSpec::parse_with_default(s, 1)
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MethodSpec::Sls => f.write_str("sls"),
            MethodSpec::Owls => f.write_str("owls"),
            MethodSpec::Bls(m) => write!(f, "bls:{m}"),
            MethodSpec::CBls(m) => write!(f, "cbls:{m}"),
            MethodSpec::SBls(m) => write!(f, "sbls:{m}"),
            MethodSpec::Interp(k) => f.write_str(k.name()),
        }
    }
}

impl From<MethodSpec> for String {
    fn from(m: MethodSpec) -> String {
        m.to_string()
    }
}

impl TryFrom<String> for MethodSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// How many points each method may use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NPolicy {
    /// n from the Chernoff rule; boosted methods use eta^(1/M); s-BLS stops
    /// at the first removal that would break Z <= delta.
    GuaranteedStability,
    /// n = m for every method; s-BLS subsamples down to exactly m.
    GivenCost,
    /// Start every method from n points; s-BLS stops on stability.
    Fixed(usize),
}

impl NPolicy {
    pub fn block_title(&self) -> String {
        match self {
            NPolicy::GuaranteedStability => "(a) guaranteed stability".into(),
            NPolicy::GivenCost => "(b) given cost n = m".into(),
            NPolicy::Fixed(n) => format!("fixed initial n = {n}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignParams {
    pub delta: f64,
    pub eta: f64,
    pub variant: GreedyVariant,
    pub grid_size: usize,
    pub max_rejections: usize,
}

impl Default for DesignParams {
    fn default() -> Self {
        Self {
            delta: 0.9,
            eta: 0.01,
            variant: GreedyVariant::Fast,
            grid_size: DEFAULT_GRID_SIZE,
            max_rejections: 1000,
        }
    }
}

/// A design together with how it came about.
#[derive(Clone, Debug)]
pub struct Design {
    pub method: MethodSpec,
    pub sample: SampleSet,
    /// Size before any subsampling.
    pub initial_n: usize,
    /// Z of the final design under its own weights.
    pub z: f64,
    pub counters: Option<OpCounters>,
}

impl Design {
    pub fn n(&self) -> usize {
        self.sample.len()
    }

    /// Least squares on the design, or interpolation for point systems.
    pub fn fit(&self, spec: &BasisSpec, y: &[f64]) -> Result<ApproxModel> {
        if self.method.is_interpolation() {
            interpolate(&self.sample.points, spec, y)
        } else {
            fit_values(&self.sample, spec, y)
        }
    }
}

fn boost_config(params: &DesignParams, boost: usize, n: usize) -> BoostConfig {
    let mut c = BoostConfig::new(params.delta, boosted_eta(params.eta, boost), boost).with_n(n);
    c.max_rejections = params.max_rejections;
    c
}

/// eta^(1/M): keeps 1 - eta^M fixed while M grows.
pub fn boosted_eta(eta: f64, boost: usize) -> f64 {
    eta.powf(1.0 / boost as f64)
}

/// Initial sample size a method uses under `policy` for an m-dimensional space.
pub fn initial_size(method: &MethodSpec, policy: NPolicy, params: &DesignParams, m: usize) -> Result<usize> {
    Ok(match (policy, method) {
        (_, MethodSpec::Interp(_)) => m,
        (NPolicy::Fixed(n), _) => n,
        (NPolicy::GivenCost, MethodSpec::SBls(b)) | (NPolicy::GuaranteedStability, MethodSpec::SBls(b)) => {
            required_sample_size(params.delta, boosted_eta(params.eta, *b), m)?
        }
        (NPolicy::GivenCost, _) => m,
        (NPolicy::GuaranteedStability, MethodSpec::Sls | MethodSpec::Owls) => {
            required_sample_size(params.delta, params.eta, m)?
        }
        (NPolicy::GuaranteedStability, MethodSpec::Bls(b) | MethodSpec::CBls(b)) => {
            required_sample_size(params.delta, boosted_eta(params.eta, *b), m)?
        }
    })
}

/// Builds one design. Random methods draw from `rng`; point systems are
/// deterministic in (spec, grid).
pub fn build_design<R: Rng + ?Sized>(
    method: &MethodSpec,
    density: &OptimalDensity,
    policy: NPolicy,
    params: &DesignParams,
    rng: &mut R,
) -> Result<Design> {
    let spec = density.spec();
    let m = spec.size();
    let n = initial_size(method, policy, params, m)?;
    if n == 0 {
        return invalid("sample size must be at least 1");
    }
    let mut counters = None;
    let sample = match method {
        MethodSpec::Sls => draw_mu_sample(spec, rng, n)?,
        MethodSpec::Owls => draw_product_sample(density, rng, n)?,
        MethodSpec::Bls(b) => boost_resample(density, &boost_config(params, *b, n), rng)?,
        MethodSpec::CBls(b) => boost_condition(density, &boost_config(params, *b, n), rng)?,
        MethodSpec::SBls(b) => {
            let start = boost_condition(density, &boost_config(params, *b, n), rng)?;
            let greedy = match policy {
                NPolicy::GivenCost => GreedyConfig::reach_count(params.delta, m, params.variant),
                _ => GreedyConfig::stability_break(params.delta, m, params.variant),
            };
            let out = greedy_subsample(&start, spec, &greedy)?;
            counters = Some(out.counters);
            out.sample
        }
        MethodSpec::Interp(kind) => build_point_system(*kind, spec, params.grid_size)?.to_sample(),
    };
    let z = gram(&sample, spec)?.z;
    Ok(Design {
        method: method.clone(),
        sample,
        initial_n: n,
        z,
        counters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::Measure;
    use crate::seed::rng_for;
    use crate::stats::median;

    #[test]
    fn method_names_round_trip() {
        for s in ["sls", "owls", "bls:100", "cbls:1", "sbls:100", "gauss", "leja", "fekete", "magic"] {
            let m: MethodSpec = s.parse().unwrap();
            assert_eq!(m.to_string(), s);
        }
        assert_eq!(MethodSpec::parse_with_default("cbls", 100).unwrap(), MethodSpec::CBls(100));
        assert_eq!("s-BLS:7".parse::<MethodSpec>().unwrap(), MethodSpec::SBls(7));
        for bad in ["foo", "owls:3", "cbls:0", "bls:x"] {
            assert!(bad.parse::<MethodSpec>().is_err(), "{bad}");
        }
        assert_eq!(MethodSpec::Interp(PointKind::Gauss).label(), "I-Gauss");
    }

    #[test]
    fn sizes_follow_policy() {
        let p = DesignParams::default();
        let g = NPolicy::GuaranteedStability;
        assert_eq!(initial_size(&MethodSpec::Owls, g, &p, 6).unwrap(), 134);
        assert_eq!(initial_size(&MethodSpec::CBls(1), g, &p, 6).unwrap(), 134);
        assert_eq!(initial_size(&MethodSpec::CBls(100), g, &p, 6).unwrap(), 48);
        assert_eq!(initial_size(&MethodSpec::SBls(100), g, &p, 6).unwrap(), 48);
        assert_eq!(initial_size(&MethodSpec::Owls, NPolicy::GivenCost, &p, 6).unwrap(), 6);
        assert_eq!(initial_size(&MethodSpec::SBls(100), NPolicy::GivenCost, &p, 6).unwrap(), 48);
        assert_eq!(initial_size(&MethodSpec::Owls, NPolicy::Fixed(100), &p, 6).unwrap(), 100);
    }

    #[test]
    fn designs_respect_policy_contracts() {
        let density = OptimalDensity::new(BasisSpec::univariate(Measure::Gaussian, 5)).unwrap();
        let p = DesignParams::default();
        let mut rng = rng_for(11, 0);
        for method in ["owls", "cbls:1", "cbls:100", "sbls:100"] {
            let method: MethodSpec = method.parse().unwrap();
            let d = build_design(&method, &density, NPolicy::GuaranteedStability, &p, &mut rng).unwrap();
            if method != MethodSpec::Owls {
                assert!(d.z <= 0.9);
            }
            if let MethodSpec::SBls(_) = method {
                assert!(d.n() >= 6 && d.n() <= d.initial_n);
            }
        }
        for method in ["owls", "bls:100", "sbls:100", "gauss", "leja", "fekete", "magic"] {
            let method: MethodSpec = method.parse().unwrap();
            let d = build_design(&method, &density, NPolicy::GivenCost, &p, &mut rng).unwrap();
            assert_eq!(d.n(), 6, "{method}");
        }
    }

    #[test]
    fn fixed_n_orders_stability() {
        let density = OptimalDensity::new(BasisSpec::univariate(Measure::Uniform, 5)).unwrap();
        let p = DesignParams::default();
        let zs = |method: &str| -> Vec<f64> {
            let method: MethodSpec = method.parse().unwrap();
            let mut rng = rng_for(12, 0);
            (0..200)
                .map(|_| build_design(&method, &density, NPolicy::Fixed(100), &p, &mut rng).unwrap().z)
                .collect()
        };
        let (sls, owls, c100) = (zs("sls"), zs("owls"), zs("cbls:100"));
        assert!(median(&c100) < median(&owls));
        assert!(median(&owls) < median(&sls));
    }
}
