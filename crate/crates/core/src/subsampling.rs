//! Greedy removal of points from a stable sample (s-BLS).
//!
//! Both variants maintain G_K by rank-one downdates. The exact variant scores
//! every candidate removal with an eigendecomposition; the fast variant does
//! one eigendecomposition of G_K - I per step, screens candidates with the
//! projections of w(x^k)^{1/2} phi(x^k) on the extreme eigenvectors, and only
//! scores the two screened candidates exactly.

use std::io::Write;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::BasisSpec;
use crate::error::{invalid, Error, Result};
use crate::sampling::{Method, SampleSet};
use crate::stability::{gram_matrix, z_of};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GreedyVariant {
    Exact,
    #[default]
    Fast,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "target", rename_all = "snake_case")]
pub enum StopRule {
    /// Stop before the first removal that would give Z > delta or #K < n_min.
    StabilityBreak,
    /// Remove until exactly `target` points remain, whatever happens to Z.
    ReachCount(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreedyConfig {
    pub delta: f64,
    pub n_min: usize,
    pub variant: GreedyVariant,
    pub stop: StopRule,
}

impl GreedyConfig {
    pub fn stability_break(delta: f64, n_min: usize, variant: GreedyVariant) -> Self {
        Self {
            delta,
            n_min,
            variant,
            stop: StopRule::StabilityBreak,
        }
    }

    pub fn reach_count(delta: f64, target: usize, variant: GreedyVariant) -> Self {
        Self {
            delta,
            n_min: target,
            variant,
            stop: StopRule::ReachCount(target),
        }
    }

    /// n_min = max(m, ceil(n / beta)).
    pub fn n_min_from_beta(n: usize, m: usize, beta: f64) -> Result<usize> {
        if !(beta >= 1.0) {
            return invalid(format!("beta must be at least 1, got {beta}"));
        }
        Ok(((n as f64 / beta).ceil() as usize).max(m))
    }
}

/// Work counters used to compare the variants independently of wall time.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounters {
    pub steps: usize,
    pub eigendecompositions: usize,
    pub dot_products: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub step: usize,
    pub removed_index: usize,
    pub z_after: f64,
}

#[derive(Clone, Debug)]
pub struct GreedyOutcome {
    pub sample: SampleSet,
    pub final_z: f64,
    pub trace: Vec<TraceStep>,
    pub counters: OpCounters,
}

impl GreedyOutcome {
    pub fn write_trace_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for t in &self.trace {
            w.serialize(t)?;
        }
        if self.trace.is_empty() {
            w.write_record(["step", "removed_index", "z_after"])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// G_{K \ {k}} = (c/(c-1)) G_K - (1/(c-1)) w phi phi^T with c = #K.
pub fn downdate_gram(g: &DMatrix<f64>, phi: &[f64], weight: f64, old_count: usize) -> Result<DMatrix<f64>> {
    if old_count < 2 {
        return invalid(format!("downdate needs at least 2 points, got {old_count}"));
    }
    if phi.len() != g.nrows() {
        return invalid("feature length does not match Gram size");
    }
    let c = old_count as f64;
    let v = DVector::from_column_slice(phi);
    let mut out = g * (c / (c - 1.0));
    out.ger(-weight / (c - 1.0), &v, &v, 1.0);
    Ok(out)
}

struct State {
    feats: Vec<Vec<f64>>,
    weights: Vec<f64>,
    active: Vec<usize>,
    g: DMatrix<f64>,
}

impl State {
    fn new(sample: &SampleSet, spec: &BasisSpec) -> Result<Self> {
        let fm = spec.feature_matrix(&sample.points)?;
        let feats = (0..fm.nrows())
            .map(|i| fm.row(i).iter().copied().collect())
            .collect();
        Ok(Self {
            feats,
            weights: sample.weights.clone(),
            active: (0..sample.len()).collect(),
            g: gram_matrix(&fm, &sample.weights),
        })
    }

    fn removed(&self, pos: usize) -> DMatrix<f64> {
        let k = self.active[pos];
        downdate_gram(&self.g, &self.feats[k], self.weights[k], self.active.len())
            .expect("at least two active points")
    }

    /// (position in `active`, Z after removal), lowest original index on ties.
    fn exact_choice(&self, ops: &mut OpCounters) -> (usize, f64, DMatrix<f64>) {
        let zs: Vec<f64> = (0..self.active.len())
            .into_par_iter()
            .map(|pos| z_of(&self.removed(pos)))
            .collect();
        ops.eigendecompositions += zs.len();
        let mut best = 0;
        for (pos, &z) in zs.iter().enumerate() {
            if z < zs[best] {
                best = pos;
            }
        }
        (best, zs[best], self.removed(best))
    }

    fn fast_choice(&self, ops: &mut OpCounters) -> (usize, f64, DMatrix<f64>) {
        let m = self.g.nrows();
        let shifted = &self.g - DMatrix::identity(m, m);
        let eig = SymmetricEigen::new(shifted);
        ops.eigendecompositions += 1;
        let (mut top, mut bottom) = (0, 0);
        for i in 1..m {
            if eig.eigenvalues[i] > eig.eigenvalues[top] {
                top = i;
            }
            if eig.eigenvalues[i] < eig.eigenvalues[bottom] {
                bottom = i;
            }
        }
        let q1 = eig.eigenvectors.column(top);
        let qm = eig.eigenvectors.column(bottom);
        // Rayleigh quotients of G_{K\{k}} - I on q1 and qm are
        // (c lambda + 1 - w (q^T phi_k)^2) / (c - 1): removing the largest
        // q1-projection lowers the top bound most, removing the smallest
        // qm-projection keeps the bottom bound highest.
        let (mut k1, mut k2) = (0, 0);
        let (mut s1_best, mut s2_best) = (f64::NEG_INFINITY, f64::INFINITY);
        for (pos, &k) in self.active.iter().enumerate() {
            let phi = &self.feats[k];
            let w = self.weights[k];
            let a: f64 = q1.iter().zip(phi).map(|(q, p)| q * p).sum();
            let b: f64 = qm.iter().zip(phi).map(|(q, p)| q * p).sum();
            let (s1, s2) = (w * a * a, w * b * b);
            if s1 > s1_best {
                s1_best = s1;
                k1 = pos;
            }
            if s2 < s2_best {
                s2_best = s2;
                k2 = pos;
            }
        }
        ops.dot_products += 2 * self.active.len();
        let g1 = self.removed(k1);
        let z1 = z_of(&g1);
        ops.eigendecompositions += 1;
        if k2 == k1 {
            return (k1, z1, g1);
        }
        let g2 = self.removed(k2);
        let z2 = z_of(&g2);
        ops.eigendecompositions += 1;
        if z2 < z1 || (z2 == z1 && self.active[k2] < self.active[k1]) {
            (k2, z2, g2)
        } else {
            (k1, z1, g1)
        }
    }
}

/// One greedy decision on `sample`: (index removed, Z after removal).
pub fn greedy_step(sample: &SampleSet, spec: &BasisSpec, variant: GreedyVariant) -> Result<(usize, f64)> {
    if sample.len() < 2 {
        return invalid("a greedy step needs at least two points");
    }
    let st = State::new(sample, spec)?;
    let mut ops = OpCounters::default();
    let (pos, z, _) = match variant {
        GreedyVariant::Exact => st.exact_choice(&mut ops),
        GreedyVariant::Fast => st.fast_choice(&mut ops),
    };
    Ok((st.active[pos], z))
}

pub fn greedy_subsample(sample: &SampleSet, spec: &BasisSpec, config: &GreedyConfig) -> Result<GreedyOutcome> {
    let m = spec.size();
    if !(0.0..1.0).contains(&config.delta) {
        return invalid(format!("delta must lie in [0, 1), got {}", config.delta));
    }
    if config.n_min < m {
        return invalid(format!("n_min = {} is below m = {m}", config.n_min));
    }
    if let StopRule::ReachCount(t) = config.stop {
        if t > sample.len() {
            return invalid(format!("target {t} exceeds sample size {}", sample.len()));
        }
    }
    let mut st = State::new(sample, spec)?;
    let mut ops = OpCounters::default();
    let mut z = z_of(&st.g);
    if config.stop == StopRule::StabilityBreak && z > config.delta {
        return Err(Error::UnstableInput {
            z,
            delta: config.delta,
        });
    }
    let floor = match config.stop {
        StopRule::StabilityBreak => config.n_min,
        StopRule::ReachCount(t) => t,
    };
    let mut removed = Vec::new();
    let mut trace = Vec::new();
    while st.active.len() > floor && st.active.len() >= 2 {
        let (pos, z_new, g_new) = match config.variant {
            GreedyVariant::Exact => st.exact_choice(&mut ops),
            GreedyVariant::Fast => st.fast_choice(&mut ops),
        };
        ops.steps += 1;
        if config.stop == StopRule::StabilityBreak && z_new > config.delta {
            break;
        }
        let k = st.active.remove(pos);
        st.g = g_new;
        z = z_new;
        removed.push(k);
        trace.push(TraceStep {
            step: trace.len() + 1,
            removed_index: k,
            z_after: z,
        });
        debug_assert!(config.stop != StopRule::StabilityBreak || (z <= config.delta && st.active.len() >= config.n_min));
    }
    let mut out = sample.subset(&st.active);
    out.method = Method::SBls;
    out.meta.removed_indices = removed;
    out.meta.z = Some(z);
    if out.meta.delta.is_none() {
        out.meta.delta = Some(config.delta);
    }
    Ok(GreedyOutcome {
        sample: out,
        final_z: z,
        trace,
        counters: ops,
    })
}

pub fn greedy_subsample_exact(sample: &SampleSet, spec: &BasisSpec, config: &GreedyConfig) -> Result<GreedyOutcome> {
    greedy_subsample(
        sample,
        spec,
        &GreedyConfig {
            variant: GreedyVariant::Exact,
            ..config.clone()
        },
    )
}

pub fn greedy_subsample_fast(sample: &SampleSet, spec: &BasisSpec, config: &GreedyConfig) -> Result<GreedyOutcome> {
    greedy_subsample(
        sample,
        spec,
        &GreedyConfig {
            variant: GreedyVariant::Fast,
            ..config.clone()
        },
    )
}
