//! Right-hand sides of the expected-error bounds for the boosted estimators.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub delta: f64,
    pub eta: f64,
    #[serde(rename = "M")]
    pub boost: usize,
    pub m: usize,
    pub n: usize,
    pub n_min: usize,
    /// Bound on the weighted sup-norm of u.
    #[serde(rename = "L")]
    pub l: f64,
    /// sup of |P v|_{inf,w} over |v|_{inf,w} <= 1; defaults to m.
    #[serde(default)]
    pub c_m: Option<f64>,
    /// Best-approximation error |u - P u|^2.
    pub alpha: f64,
    #[serde(default)]
    pub sigma: f64,
}

impl BoundInputs {
    pub fn new(delta: f64, eta: f64, boost: usize, m: usize) -> Self {
        Self {
            delta,
            eta,
            boost,
            m,
            n: m,
            n_min: m,
            l: 1.0,
            c_m: None,
            alpha: 0.0,
            sigma: 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.delta) || !(0.0..1.0).contains(&self.eta) {
            return invalid("delta and eta must lie in [0, 1)");
        }
        if self.boost == 0 || self.m == 0 || self.n_min == 0 {
            return invalid("M, m and n_min must be positive");
        }
        if self.l < 0.0 || self.alpha < 0.0 || self.sigma < 0.0 || self.c_m.is_some_and(|c| c < 0.0) {
            return invalid("L, alpha, sigma and c_m must be nonnegative");
        }
        Ok(())
    }

    /// M / ((1 - delta)(1 - eta^M)), the factor shared by all bounds.
    pub fn boost_factor(&self) -> f64 {
        let m = self.boost as f64;
        m / ((1.0 - self.delta) * (1.0 - self.eta.powf(m)))
    }

    pub fn lc(&self) -> f64 {
        self.l * (1.0 + self.c_m.unwrap_or(self.m as f64))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundMode {
    /// Conditioned resampling, no subsampling.
    #[serde(rename = "cbls")]
    CBls,
    /// Greedy subsampling down to n_min.
    #[serde(rename = "sbls")]
    SBls,
    /// Greedy subsampling with noisy observations.
    Noisy,
}

/// E|u - u*|^2 <= factor * alpha + additive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    pub factor: f64,
    pub additive: f64,
    pub value: f64,
}

pub fn quasi_optimality_constant(inputs: &BoundInputs, mode: BoundMode) -> Result<BoundValue> {
    inputs.validate()?;
    let b = inputs.boost_factor();
    let ratio = inputs.n as f64 / inputs.n_min as f64;
    let (factor, additive) = match mode {
        BoundMode::CBls => (1.0 + b, 0.0),
        BoundMode::SBls => (1.0 + ratio * b, 0.0),
        BoundMode::Noisy => {
            let nm = inputs.n_min as f64;
            let noise = 2.0 * inputs.sigma.powi(2) * inputs.m as f64 * inputs.n as f64 / (nm * nm) * b;
            (1.0 + 2.0 * ratio * b, noise)
        }
    };
    Ok(BoundValue {
        factor,
        additive,
        value: factor * inputs.alpha + additive,
    })
}

/// C(eps, M) = M (1 - eps)^{1 - eps} / (M - eps)^{1 - eps}.
pub fn resampling_constant(eps: f64, boost: usize) -> f64 {
    let m = boost as f64;
    let t = 1.0 - eps;
    m * t.powf(t) / (m - eps).powf(t)
}

/// D~(M, L, m, alpha, eps) = C(eps, M) (L (1 + c_m))^{2 - 2 eps} alpha^eps.
pub fn d_tilde(eps: f64, boost: usize, lc: f64, alpha: f64) -> f64 {
    resampling_constant(eps, boost) * lc.powf(2.0 - 2.0 * eps) * alpha.powf(eps)
}

fn xlogx(t: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t * t.ln()
    }
}

/// ln D~, finite at both ends of [0, 1].
fn log_d_tilde(eps: f64, boost: usize, lc: f64, alpha: f64) -> f64 {
    let m = boost as f64;
    let t = 1.0 - eps;
    let tail = if t == 0.0 { 0.0 } else { t * (m - eps).ln() };
    m.ln() + xlogx(t) - tail + 2.0 * t * lc.ln() + eps * alpha.ln()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImprovedBound {
    /// inf over eps in (0, 1] of D~.
    pub d: f64,
    pub eps_star: f64,
}

/// Numeric infimum of D~ over eps: a uniform scan brackets the minimum of
/// ln D~, then golden-section search refines it. If the infimum sits at the
/// open end eps -> 0 the limit value (L (1 + c_m))^2 is returned with eps* = 0.
pub fn improved_bound_d(inputs: &BoundInputs) -> Result<ImprovedBound> {
    inputs.validate()?;
    let lc = inputs.lc();
    let alpha = inputs.alpha;
    if !(lc > 0.0 && alpha > 0.0) {
        return invalid("improved bound needs L (1 + c_m) > 0 and alpha > 0");
    }
    let f = |e: f64| log_d_tilde(e, inputs.boost, lc, alpha);
    const SCAN: usize = 2000;
    let grid = |i: usize| i as f64 / SCAN as f64;
    let mut best = SCAN;
    for i in 0..SCAN {
        if f(grid(i)) < f(grid(best)) {
            best = i;
        }
    }
    let (mut a, mut b) = (grid(best.saturating_sub(1)), grid((best + 1).min(SCAN)));
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-13 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    let mut eps = 0.5 * (a + b);
    for cand in [grid(best), 1.0] {
        if f(cand) < f(eps) {
            eps = cand;
        }
    }
    let d = if eps == 0.0 {
        lc * lc
    } else {
        d_tilde(eps, inputs.boost, lc, alpha)
    };
    Ok(ImprovedBound { d, eps_star: eps })
}

/// alpha + (1 - delta)^{-1} (1 - eta^M)^{-1} D(M, L, m, alpha).
pub fn improved_bound_total(inputs: &BoundInputs) -> Result<f64> {
    let ib = improved_bound_d(inputs)?;
    Ok(inputs.alpha + inputs.boost_factor() / inputs.boost as f64 * ib.d)
}

/// Bound for the estimator that returns the projection when Z <= delta and
/// zero otherwise: (1 + (1 - delta)^{-1}) alpha + eta |u|^2.
pub fn conditional_projection_bound(delta: f64, eta: f64, alpha: f64, u_norm2: f64) -> f64 {
    (1.0 + 1.0 / (1.0 - delta)) * alpha + eta * u_norm2
}

/// Bound conditional on the stability event:
/// (1 + (1 - delta)^{-1} (1 - eta)^{-1}) alpha.
pub fn conditional_expectation_bound(delta: f64, eta: f64, alpha: f64) -> f64 {
    (1.0 + 1.0 / ((1.0 - delta) * (1.0 - eta))) * alpha
}
