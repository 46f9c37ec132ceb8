use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Construction rule of a multi-index set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "p", rename_all = "snake_case")]
pub enum IndexRule {
    /// |i|_1 <= p.
    TotalDegree(usize),
    /// prod_k (i_k + 1) <= p + 1.
    HyperbolicCross(usize),
}

impl IndexRule {
    pub fn degree(self) -> usize {
        match self {
            IndexRule::TotalDegree(p) | IndexRule::HyperbolicCross(p) => p,
        }
    }
}

/// Downward-closed set of multi-indices, stored in lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiIndexSet {
    dim: usize,
    rule: IndexRule,
    indices: Vec<Vec<usize>>,
}

impl MultiIndexSet {
    pub fn build(dim: usize, rule: IndexRule) -> Result<Self> {
        if dim == 0 {
            return invalid("index set dimension must be at least 1");
        }
        let mut indices = Vec::new();
        let mut current = Vec::with_capacity(dim);
        match rule {
            IndexRule::TotalDegree(p) => total_degree(dim, p, &mut current, &mut indices),
            IndexRule::HyperbolicCross(p) => {
                hyperbolic_cross(dim, p + 1, &mut current, &mut indices)
            }
        }
        Ok(Self { dim, rule, indices })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rule(&self) -> IndexRule {
        self.rule
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[Vec<usize>] {
        &self.indices
    }

    pub fn get(&self, j: usize) -> &[usize] {
        &self.indices[j]
    }

    pub fn contains(&self, index: &[usize]) -> bool {
        self.indices
            .binary_search_by(|probe| probe.as_slice().cmp(index))
            .is_ok()
    }

    /// Largest univariate degree appearing in each coordinate.
    pub fn max_degrees(&self) -> Vec<usize> {
        let mut out = vec![0; self.dim];
        for idx in &self.indices {
            for (o, &i) in out.iter_mut().zip(idx) {
                *o = (*o).max(i);
            }
        }
        out
    }

    pub fn is_downward_closed(&self) -> bool {
        self.indices.iter().all(|idx| {
            (0..self.dim).all(|k| {
                if idx[k] == 0 {
                    return true;
                }
                let mut lower = idx.clone();
                lower[k] -= 1;
                self.contains(&lower)
            })
        })
    }
}

fn total_degree(dim: usize, budget: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if current.len() == dim {
        out.push(current.clone());
        return;
    }
    for i in 0..=budget {
        current.push(i);
        total_degree(dim, budget - i, current, out);
        current.pop();
    }
}

// `budget` bounds the remaining product of (i_k + 1).
fn hyperbolic_cross(
    dim: usize,
    budget: usize,
    current: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if current.len() == dim {
        out.push(current.clone());
        return;
    }
    for i in 0..budget {
        current.push(i);
        hyperbolic_cross(dim, budget / (i + 1), current, out);
        current.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn card(d: usize, rule: IndexRule) -> usize {
        MultiIndexSet::build(d, rule).unwrap().len()
    }

    #[test]
    fn cardinalities() {
        assert_eq!(card(2, IndexRule::HyperbolicCross(4)), 10);
        assert_eq!(card(4, IndexRule::HyperbolicCross(4)), 23);
        assert_eq!(card(1, IndexRule::TotalDegree(0)), 1);
        assert_eq!(card(1, IndexRule::TotalDegree(5)), 6);
        assert_eq!(card(1, IndexRule::HyperbolicCross(5)), 6);
        // binomial(p + d, d)
        assert_eq!(card(3, IndexRule::TotalDegree(4)), 35);
    }

    #[test]
    fn constant_space() {
        let s = MultiIndexSet::build(1, IndexRule::TotalDegree(0)).unwrap();
        assert_eq!(s.indices(), &[vec![0]]);
    }

    #[test]
    fn lexicographic_and_membership() {
        let s = MultiIndexSet::build(2, IndexRule::HyperbolicCross(4)).unwrap();
        assert!(s.indices().windows(2).all(|w| w[0] < w[1]));
        for idx in s.indices() {
            assert!((idx[0] + 1) * (idx[1] + 1) <= 5);
        }
        assert!(s.contains(&[4, 0]));
        assert!(s.contains(&[1, 1]));
        assert!(!s.contains(&[1, 2]));
        assert_eq!(s.max_degrees(), vec![4, 4]);
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(MultiIndexSet::build(0, IndexRule::TotalDegree(1)).is_err());
    }

    proptest::proptest! {
        #[test]
        fn always_downward_closed(d in 1usize..5, p in 0usize..12, hc in proptest::bool::ANY) {
            let rule = if hc { IndexRule::HyperbolicCross(p) } else { IndexRule::TotalDegree(p.min(6)) };
            let s = MultiIndexSet::build(d, rule).unwrap();
            proptest::prop_assert!(!s.is_empty());
            proptest::prop_assert!(s.is_downward_closed());
        }
    }
}
