//! Orthonormal polynomial bases on product measures.
//!
//! A [`BasisSpec`] tensorizes univariate Hermite or Legendre families over a
//! [`MultiIndexSet`] and may apply an orthogonal rotation afterwards. All
//! evaluation goes through normalized three-term recurrences.

mod index_set;
mod measure;

pub use index_set::{IndexRule, MultiIndexSet};
pub use measure::{GaussRule, Measure};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Serializable description of a basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisDescriptor {
    pub measure: Measure,
    pub d: usize,
    #[serde(flatten)]
    pub rule: IndexRule,
    /// When present, the basis is rotated by the left singular vectors of a
    /// seeded standard-Gaussian matrix.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed_for_rotation: Option<u64>,
    /// Keep only the first `rotated_dim` rotated functions (defaults to all).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotated_dim: Option<usize>,
}

impl BasisDescriptor {
    pub fn new(measure: Measure, d: usize, rule: IndexRule) -> Self {
        Self {
            measure,
            d,
            rule,
            seed_for_rotation: None,
            rotated_dim: None,
        }
    }

    pub fn build(&self) -> Result<BasisSpec> {
        let set = MultiIndexSet::build(self.d, self.rule)?;
        let mut spec = BasisSpec::new(vec![self.measure; self.d], set)?;
        if let Some(seed) = self.seed_for_rotation {
            let full = spec.index_set.len();
            let rows = self.rotated_dim.unwrap_or(full);
            if rows == 0 || rows > full {
                return invalid(format!("rotated_dim must lie in 1..={full}, got {rows}"));
            }
            let u = random_rotation(full, seed);
            spec = spec.with_rotation(u.rows(0, rows).into_owned())?;
        } else if self.rotated_dim.is_some() {
            return invalid("rotated_dim requires seed_for_rotation");
        }
        spec.descriptor = Some(self.clone());
        Ok(spec)
    }
}

/// Orthonormal basis phi = (phi_1, ..., phi_m) of a polynomial space.
#[derive(Clone, Debug)]
pub struct BasisSpec {
    measures: Vec<Measure>,
    index_set: MultiIndexSet,
    max_degrees: Vec<usize>,
    /// m x |index_set| matrix with orthonormal rows, applied after tensorization.
    rotation: Option<DMatrix<f64>>,
    descriptor: Option<BasisDescriptor>,
}

impl BasisSpec {
    pub fn new(measures: Vec<Measure>, index_set: MultiIndexSet) -> Result<Self> {
        if measures.len() != index_set.dim() {
            return invalid(format!(
                "{} measures given for a {}-dimensional index set",
                measures.len(),
                index_set.dim()
            ));
        }
        let max_degrees = index_set.max_degrees();
        Ok(Self {
            measures,
            index_set,
            max_degrees,
            rotation: None,
            descriptor: None,
        })
    }

    /// Same measure in every coordinate.
    pub fn tensor(measure: Measure, d: usize, rule: IndexRule) -> Result<Self> {
        BasisDescriptor::new(measure, d, rule).build()
    }

    /// Univariate polynomial space of degree `p`.
    pub fn univariate(measure: Measure, p: usize) -> Self {
        Self::tensor(measure, 1, IndexRule::TotalDegree(p)).expect("valid univariate basis")
    }

    pub fn with_rotation(mut self, rotation: DMatrix<f64>) -> Result<Self> {
        let n = self.index_set.len();
        if rotation.ncols() != n || rotation.nrows() == 0 || rotation.nrows() > n {
            return invalid(format!(
                "rotation must be r x {n} with 1 <= r <= {n}, got {} x {}",
                rotation.nrows(),
                rotation.ncols()
            ));
        }
        let gram = &rotation * rotation.transpose();
        let defect = (gram - DMatrix::identity(rotation.nrows(), rotation.nrows())).amax();
        if defect > 1e-12 {
            return invalid(format!("rotation rows are not orthonormal (defect {defect:e})"));
        }
        self.rotation = Some(rotation);
        self.descriptor = None;
        Ok(self)
    }

    /// Dimension m of the approximation space.
    pub fn size(&self) -> usize {
        self.rotation
            .as_ref()
            .map_or(self.index_set.len(), |r| r.nrows())
    }

    pub fn dim(&self) -> usize {
        self.measures.len()
    }

    pub fn measures(&self) -> &[Measure] {
        &self.measures
    }

    pub fn index_set(&self) -> &MultiIndexSet {
        &self.index_set
    }

    pub fn max_degrees(&self) -> &[usize] {
        &self.max_degrees
    }

    pub fn rotation(&self) -> Option<&DMatrix<f64>> {
        self.rotation.as_ref()
    }

    pub fn is_rotated(&self) -> bool {
        self.rotation.is_some()
    }

    pub fn descriptor(&self) -> Option<&BasisDescriptor> {
        self.descriptor.as_ref()
    }

    pub fn in_support(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && self.measures.iter().zip(x).all(|(m, &xi)| m.in_support(xi))
    }

    /// Evaluates phi(x) into `out` (length m).
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        if x.len() != self.dim() {
            return invalid(format!("point has {} coordinates, expected {}", x.len(), self.dim()));
        }
        if out.len() != self.size() {
            return invalid(format!("output has length {}, expected {}", out.len(), self.size()));
        }
        let mut univariate: Vec<Vec<f64>> = self
            .max_degrees
            .iter()
            .map(|&p| vec![0.0; p + 1])
            .collect();
        for ((vals, m), &xk) in univariate.iter_mut().zip(&self.measures).zip(x) {
            m.orthonormal_values(xk, vals);
        }
        let tensor = |idx: &[usize]| -> f64 {
            idx.iter()
                .zip(&univariate)
                .map(|(&i, vals)| vals[i])
                .product()
        };
        match &self.rotation {
            None => {
                for (o, idx) in out.iter_mut().zip(self.index_set.indices()) {
                    *o = tensor(idx);
                }
            }
            Some(r) => {
                let raw: Vec<f64> = self.index_set.indices().iter().map(|i| tensor(i)).collect();
                for (i, o) in out.iter_mut().enumerate() {
                    *o = r.row(i).iter().zip(&raw).map(|(a, b)| a * b).sum();
                }
            }
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(x.to_vec()));
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.size()];
        self.eval_into(x, &mut out)?;
        Ok(out)
    }

    /// Row-stacked feature matrix, one row phi(x_i)^T per point.
    pub fn feature_matrix(&self, points: &[Vec<f64>]) -> Result<DMatrix<f64>> {
        let m = self.size();
        let mut mat = DMatrix::zeros(points.len(), m);
        let mut buf = vec![0.0; m];
        for (i, x) in points.iter().enumerate() {
            self.eval_into(x, &mut buf)?;
            for (j, &v) in buf.iter().enumerate() {
                mat[(i, j)] = v;
            }
        }
        Ok(mat)
    }

    /// Optimal weight w(x) = m / |phi(x)|^2.
    pub fn optimal_weight(&self, x: &[f64]) -> Result<f64> {
        let phi = self.eval(x)?;
        weight_from_features(&phi).ok_or_else(|| Error::ZeroBasisNorm(x.to_vec()))
    }

    /// Evaluates the expansion sum_j c_j phi_j(x).
    pub fn eval_expansion(&self, coefficients: &[f64], x: &[f64]) -> Result<f64> {
        let phi = self.eval(x)?;
        Ok(phi.iter().zip(coefficients).map(|(a, b)| a * b).sum())
    }

    /// Tensor Gauss rule with `order` nodes per coordinate.
    pub fn tensor_quadrature(&self, order: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        let rules: Vec<GaussRule> = self.measures.iter().map(|m| m.gauss_rule(order)).collect();
        let mut points = vec![Vec::with_capacity(self.dim())];
        let mut weights = vec![1.0];
        for rule in &rules {
            let mut next_p = Vec::with_capacity(points.len() * order);
            let mut next_w = Vec::with_capacity(points.len() * order);
            for (p, w) in points.iter().zip(&weights) {
                for (&x, &wx) in rule.nodes.iter().zip(&rule.weights) {
                    let mut q = p.clone();
                    q.push(x);
                    next_p.push(q);
                    next_w.push(w * wx);
                }
            }
            points = next_p;
            weights = next_w;
        }
        (points, weights)
    }

    /// Worst entry of |<phi_i, phi_j> - delta_ij| under tensor Gauss quadrature.
    pub fn orthonormality_check(&self, order: usize) -> Result<f64> {
        let need = self.max_degrees.iter().copied().max().unwrap_or(0) + 1;
        if order < need {
            return invalid(format!("quadrature order {order} below required {need}"));
        }
        let (points, weights) = self.tensor_quadrature(order);
        let m = self.size();
        let mut gram = DMatrix::<f64>::zeros(m, m);
        let mut buf = vec![0.0; m];
        for (x, &w) in points.iter().zip(&weights) {
            self.eval_into(x, &mut buf)?;
            let v = DVector::from_column_slice(&buf);
            gram.ger(w, &v, &v, 1.0);
        }
        Ok((gram - DMatrix::identity(m, m)).amax())
    }
}

/// m / |phi|^2, or None if phi vanishes.
pub fn weight_from_features(phi: &[f64]) -> Option<f64> {
    let norm2: f64 = phi.iter().map(|v| v * v).sum();
    if norm2 > 0.0 && norm2.is_finite() {
        Some(phi.len() as f64 / norm2)
    } else {
        None
    }
}

/// Left singular vectors of an n x n standard-Gaussian matrix drawn from `seed`.
pub fn random_rotation(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
    let svd = a.svd(true, false);
    svd.u.expect("left singular vectors requested")
}
