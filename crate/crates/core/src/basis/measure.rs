use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

/// Univariate reference probability measure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    /// Standard normal on the real line; orthonormal family: probabilists' Hermite.
    #[serde(alias = "hermite")]
    Gaussian,
    /// Uniform on [-1, 1] with density 1/2; orthonormal family: Legendre.
    #[serde(alias = "legendre")]
    Uniform,
}

impl Measure {
    /// Lebesgue density of the measure.
    pub fn density(self, x: f64) -> f64 {
        match self {
            Measure::Gaussian => (-0.5 * x * x).exp() / (2.0 * PI).sqrt(),
            Measure::Uniform => {
                if (-1.0..=1.0).contains(&x) {
                    0.5
                } else {
                    0.0
                }
            }
        }
    }

    pub fn log_density(self, x: f64) -> f64 {
        match self {
            Measure::Gaussian => -0.5 * x * x - 0.5 * (2.0 * PI).ln(),
            Measure::Uniform => {
                if (-1.0..=1.0).contains(&x) {
                    -std::f64::consts::LN_2
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    pub fn in_support(self, x: f64) -> bool {
        match self {
            Measure::Gaussian => x.is_finite(),
            Measure::Uniform => (-1.0..=1.0).contains(&x),
        }
    }

    /// Off-diagonal Jacobi coefficient b_k of the orthonormal recurrence
    /// x p_k = b_{k+1} p_{k+1} + b_k p_{k-1}, for k >= 1. Both families have
    /// zero diagonal.
    pub fn recurrence_coefficient(self, k: usize) -> f64 {
        debug_assert!(k >= 1);
        let k = k as f64;
        match self {
            Measure::Gaussian => k.sqrt(),
            Measure::Uniform => k / (4.0 * k * k - 1.0).sqrt(),
        }
    }

    /// Writes p_0(x), ..., p_{out.len()-1}(x) into `out`. The recurrence is
    /// run directly on the normalized polynomials, so no factorials appear.
    pub fn orthonormal_values(self, x: f64, out: &mut [f64]) {
        if out.is_empty() {
            return;
        }
        out[0] = 1.0;
        if out.len() == 1 {
            return;
        }
        out[1] = x / self.recurrence_coefficient(1);
        for k in 1..out.len() - 1 {
            let bk = self.recurrence_coefficient(k);
            let bk1 = self.recurrence_coefficient(k + 1);
            out[k + 1] = (x * out[k] - bk * out[k - 1]) / bk1;
        }
    }

    /// p_k(x) alone.
    pub fn orthonormal_value(self, x: f64, k: usize) -> f64 {
        if k == 0 {
            return 1.0;
        }
        let mut prev = 1.0;
        let mut cur = x / self.recurrence_coefficient(1);
        for j in 1..k {
            let next = (x * cur - self.recurrence_coefficient(j) * prev)
                / self.recurrence_coefficient(j + 1);
            prev = cur;
            cur = next;
        }
        cur
    }

    /// Symmetric tridiagonal Jacobi matrix of order n.
    pub fn jacobi_matrix(self, n: usize) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(n, n);
        for k in 1..n {
            let b = self.recurrence_coefficient(k);
            j[(k - 1, k)] = b;
            j[(k, k - 1)] = b;
        }
        j
    }

    /// n-point Gauss rule of the probability measure (weights sum to 1),
    /// by the Golub-Welsch eigenvalue method. Nodes are sorted ascending and
    /// symmetrized about zero.
    pub fn gauss_rule(self, n: usize) -> GaussRule {
        assert!(n >= 1, "Gauss rule needs at least one node");
        let eig = SymmetricEigen::new(self.jacobi_matrix(n));
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let v0 = eig.eigenvectors[(0, i)];
                (eig.eigenvalues[i], v0 * v0)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut nodes: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let mut weights: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        // Both measures are even.
        for i in 0..n / 2 {
            let j = n - 1 - i;
            let x = 0.5 * (nodes[j] - nodes[i]);
            nodes[i] = -x;
            nodes[j] = x;
            let w = 0.5 * (weights[i] + weights[j]);
            weights[i] = w;
            weights[j] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        GaussRule { nodes, weights }
    }
}

#[derive(Clone, Debug)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn low_degree_values() {
        let mut v = [0.0; 3];
        Measure::Uniform.orthonormal_values(0.5, &mut v);
        assert_abs_diff_eq!(v[1], 3f64.sqrt() * 0.5, epsilon = 1e-15);
        // sqrt(5) * (3x^2 - 1) / 2
        assert_abs_diff_eq!(v[2], 5f64.sqrt() * (0.75 - 1.0) / 2.0, epsilon = 1e-14);

        Measure::Gaussian.orthonormal_values(1.0, &mut v);
        assert_eq!(v[0], 1.0);
        assert_abs_diff_eq!(v[1], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v[2], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn single_value_matches_table() {
        let mut v = [0.0; 12];
        for m in [Measure::Gaussian, Measure::Uniform] {
            m.orthonormal_values(0.37, &mut v);
            for (k, &vk) in v.iter().enumerate() {
                assert_abs_diff_eq!(m.orthonormal_value(0.37, k), vk, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn legendre_endpoint_is_sqrt_2k_plus_1() {
        let mut v = [0.0; 20];
        Measure::Uniform.orthonormal_values(1.0, &mut v);
        for (k, &vk) in v.iter().enumerate() {
            assert_abs_diff_eq!(vk, ((2 * k + 1) as f64).sqrt(), epsilon = 1e-12);
        }
    }

    #[test]
    fn small_gauss_rules() {
        let r = Measure::Uniform.gauss_rule(1);
        assert_eq!(r.nodes, vec![0.0]);
        let r = Measure::Uniform.gauss_rule(2);
        assert_abs_diff_eq!(r.nodes[1], 1.0 / 3f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(r.nodes[0], -1.0 / 3f64.sqrt(), epsilon = 1e-15);
        let r = Measure::Gaussian.gauss_rule(2);
        assert_abs_diff_eq!(r.nodes[0], -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.nodes[1], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.weights[0], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn gauss_rule_moments() {
        // Gaussian moments E x^4 = 3, E x^6 = 15; uniform E x^4 = 1/5.
        let g = Measure::Gaussian.gauss_rule(6);
        assert_abs_diff_eq!(g.integrate(|x| x.powi(4)), 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.integrate(|x| x.powi(6)), 15.0, epsilon = 1e-11);
        let u = Measure::Uniform.gauss_rule(6);
        assert_abs_diff_eq!(u.integrate(|x| x.powi(4)), 0.2, epsilon = 1e-14);
    }
}
