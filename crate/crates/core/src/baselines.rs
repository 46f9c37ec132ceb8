//! Interpolation point systems (Gauss, weighted Leja, approximate Fekete,
//! magic points) and standard unweighted least squares.
//!
//! Selections run on a uniform candidate grid. In d > 1 every construction
//! builds one univariate sequence per coordinate and forms the sparse tensor
//! grid indexed by the multi-index set.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::basis::{BasisSpec, Measure, MultiIndexSet};
use crate::error::{invalid, Error, Result};
use crate::projection::{fit, ApproxModel, NoiseModel};
use crate::sampling::{draw_mu_sample, Method, SampleSet};

pub const DEFAULT_GRID_SIZE: usize = 10_000;

/// Uniform candidate points, ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateGrid {
    pub points: Vec<f64>,
}

impl CandidateGrid {
    pub fn uniform(lo: f64, hi: f64, size: usize) -> Result<Self> {
        if size < 2 || !(hi > lo) {
            return invalid("candidate grid needs at least two points on a proper interval");
        }
        let h = (hi - lo) / (size - 1) as f64;
        Ok(Self {
            points: (0..size).map(|i| lo + h * i as f64).collect(),
        })
    }

    /// [-10, 10] for the Gaussian measure, [-1, 1] for the uniform one.
    pub fn for_measure(measure: Measure, size: usize) -> Result<Self> {
        match measure {
            Measure::Gaussian => Self::uniform(-10.0, 10.0, size),
            Measure::Uniform => Self::uniform(-1.0, 1.0, size),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn check_size(&self, m: usize) -> Result<()> {
        if self.len() < 10 * m {
            return invalid(format!("grid of {} points is too coarse for m = {m}", self.len()));
        }
        Ok(())
    }
}

/// Multiplier applied to Vandermonde rows in Leja and Fekete selections.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointWeighting {
    /// sqrt(w(x)) with w the optimal weight of the space.
    Optimal,
    Unit,
}

impl PointWeighting {
    /// Weighted for the unbounded Gaussian case, plain on [-1, 1].
    pub fn default_for(measure: Measure) -> Self {
        match measure {
            Measure::Gaussian => PointWeighting::Optimal,
            Measure::Uniform => PointWeighting::Unit,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointKind {
    Gauss,
    Leja,
    Fekete,
    Magic,
    #[serde(rename = "sls")]
    SlsRandom,
}

impl PointKind {
    pub fn name(self) -> &'static str {
        match self {
            PointKind::Gauss => "gauss",
            PointKind::Leja => "leja",
            PointKind::Fekete => "fekete",
            PointKind::Magic => "magic",
            PointKind::SlsRandom => "sls",
        }
    }
}

/// Unisolvency evidence for a square system.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Unisolvency {
    pub log_abs_det: f64,
    pub condition: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointSystem {
    pub kind: PointKind,
    pub points: Vec<Vec<f64>>,
    pub certificate: Option<Unisolvency>,
}

impl PointSystem {
    pub fn to_sample(&self) -> SampleSet {
        SampleSet::with_unit_weights(self.points.clone(), Method::Baseline(self.kind.name().into()))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let d = self.points.first().map_or(0, Vec::len);
        let mut header = vec!["kind".to_string()];
        header.extend((1..=d).map(|k| format!("x{k}")));
        w.write_record(&header)?;
        for x in &self.points {
            let mut row = vec![self.kind.name().to_string()];
            row.extend(x.iter().map(|v| format!("{v:e}")));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Nodes of the count-point Gauss rule of `measure`, ascending.
pub fn gauss_points(measure: Measure, count: usize) -> Result<Vec<f64>> {
    if count == 0 {
        return invalid("Gauss rule needs at least one node");
    }
    Ok(measure.gauss_rule(count).nodes)
}

fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Greedy Leja sequence maximizing weight(x) prod_{j<k} |x - x_j| over the grid,
/// with the product kept in log form. Ties go to the lowest grid index.
pub fn weighted_leja(grid: &CandidateGrid, weight: impl Fn(f64) -> f64, count: usize) -> Result<Vec<f64>> {
    if count == 0 || count > grid.len() {
        return invalid(format!("cannot pick {count} Leja points from {} candidates", grid.len()));
    }
    let mut score: Vec<f64> = grid
        .points
        .iter()
        .map(|&x| {
            let w = weight(x);
            if w > 0.0 {
                w.ln()
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let k = argmax_first(&score);
        if !score[k].is_finite() {
            return Err(Error::RankDeficient {
                rank: out.len(),
                required: count,
            });
        }
        let xk = grid.points[k];
        out.push(xk);
        for (s, &x) in score.iter_mut().zip(&grid.points) {
            *s += (x - xk).abs().ln();
        }
    }
    Ok(out)
}

fn row_weight(spec: &BasisSpec, weighting: PointWeighting, x: f64) -> Result<f64> {
    Ok(match weighting {
        PointWeighting::Optimal => spec.optimal_weight(&[x])?.sqrt(),
        PointWeighting::Unit => 1.0,
    })
}

/// Approximate Fekete points: Businger-Golub column-pivoted QR of the
/// transposed (weighted) Vandermonde matrix; the first m pivots are returned
/// in pivot order.
pub fn fekete_points(grid: &CandidateGrid, spec: &BasisSpec, weighting: PointWeighting) -> Result<Vec<f64>> {
    if spec.dim() != 1 {
        return invalid("Fekete selection on a grid is univariate");
    }
    let m = spec.size();
    grid.check_size(m)?;
    let n = grid.len();
    // a is m x n: column j is the weighted feature vector of grid point j
    let mut a = DMatrix::<f64>::zeros(m, n);
    for (j, &x) in grid.points.iter().enumerate() {
        let s = row_weight(spec, weighting, x)?;
        let phi = spec.eval(&[x])?;
        for i in 0..m {
            a[(i, j)] = s * phi[i];
        }
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut first_norm = 0.0;
    for k in 0..m {
        let norms: Vec<f64> = (k..n).map(|j| a.view((k, j), (m - k, 1)).norm_squared()).collect();
        let p = k + argmax_first(&norms);
        let top = norms[p - k].sqrt();
        if k == 0 {
            first_norm = top;
        }
        if !(top > 1e-13 * first_norm) {
            return Err(Error::RankDeficient { rank: k, required: m });
        }
        a.swap_columns(k, p);
        perm.swap(k, p);
        // Householder reflector zeroing a[k+1.., k]
        let mut v: DVector<f64> = a.column(k).rows(k, m - k).into_owned();
        let alpha = -v[0].signum() * top;
        let alpha = if alpha == 0.0 { -top } else { alpha };
        v[0] -= alpha;
        let vn = v.norm_squared();
        if vn > 0.0 {
            for j in k..n {
                let mut col = a.column_mut(j);
                let dot: f64 = (0..m - k).map(|i| v[i] * col[k + i]).sum();
                let f = 2.0 * dot / vn;
                for i in 0..m - k {
                    col[k + i] -= f * v[i];
                }
            }
        }
    }
    Ok(perm[..m].iter().map(|&j| grid.points[j]).collect())
}

/// Greedy magic points (empirical interpolation) on the plain basis.
pub fn magic_points(grid: &CandidateGrid, spec: &BasisSpec) -> Result<Vec<f64>> {
    if spec.dim() != 1 {
        return invalid("magic point selection on a grid is univariate");
    }
    let m = spec.size();
    grid.check_size(m)?;
    let vals = spec.feature_matrix(&grid.points.iter().map(|&x| vec![x]).collect::<Vec<_>>())?;
    let mut chosen: Vec<usize> = Vec::with_capacity(m);
    let mut first_peak = 0.0;
    for k in 0..m {
        let residual: Vec<f64> = if k == 0 {
            vals.column(0).iter().copied().collect()
        } else {
            let b = DMatrix::from_fn(k, k, |i, j| vals[(chosen[i], j)]);
            let rhs = DVector::from_fn(k, |i, _| vals[(chosen[i], k)]);
            let c = b
                .lu()
                .solve(&rhs)
                .ok_or(Error::RankDeficient { rank: k, required: m })?;
            (0..grid.len())
                .map(|g| vals[(g, k)] - (0..k).map(|j| c[j] * vals[(g, j)]).sum::<f64>())
                .collect()
        };
        let abs: Vec<f64> = residual.iter().map(|r| r.abs()).collect();
        let g = argmax_first(&abs);
        if k == 0 {
            first_peak = abs[g];
        }
        if !(abs[g] > 1e-13 * first_peak) {
            return Err(Error::RankDeficient { rank: k, required: m });
        }
        chosen.push(g);
    }
    Ok(chosen.into_iter().map(|g| grid.points[g]).collect())
}

/// Gamma_Lambda = {(z^1_{i_1}, ..., z^d_{i_d}) : i in Lambda}.
pub fn tensor_interpolation_points(per_dim: &[Vec<f64>], index_set: &MultiIndexSet) -> Result<Vec<Vec<f64>>> {
    if per_dim.len() != index_set.dim() {
        return invalid("one sequence per dimension required");
    }
    for (k, (seq, &deg)) in per_dim.iter().zip(&index_set.max_degrees()).enumerate() {
        if seq.len() < deg + 1 {
            return invalid(format!(
                "sequence for dimension {} has {} points, needs {}",
                k + 1,
                seq.len(),
                deg + 1
            ));
        }
    }
    Ok(index_set
        .indices()
        .iter()
        .map(|idx| idx.iter().zip(per_dim).map(|(&i, seq)| seq[i]).collect())
        .collect())
}

/// log|det V| and the 2-norm condition number of the square Vandermonde.
pub fn unisolvency(points: &[Vec<f64>], spec: &BasisSpec) -> Result<Unisolvency> {
    let v = spec.feature_matrix(points)?;
    if v.nrows() != v.ncols() {
        return invalid("unisolvency needs a square system");
    }
    let sv = v.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    Ok(Unisolvency {
        log_abs_det: sv.iter().map(|s| s.ln()).sum(),
        condition: if smin > 0.0 { smax / smin } else { f64::INFINITY },
    })
}

/// Solves the m x m interpolation system.
pub fn interpolate(points: &[Vec<f64>], spec: &BasisSpec, values: &[f64]) -> Result<ApproxModel> {
    let m = spec.size();
    if points.len() != m || values.len() != m {
        return invalid(format!(
            "interpolation needs exactly m = {m} points and values, got {} and {}",
            points.len(),
            values.len()
        ));
    }
    let v = spec.feature_matrix(points)?;
    let cert = unisolvency(points, spec)?;
    if !(cert.condition < 1e14) {
        return Err(Error::Singular(format!(
            "interpolation matrix condition {:e}",
            cert.condition
        )));
    }
    // rows at far-out nodes dominate otherwise (Hermite at |x| ~ 10)
    let mut v = v;
    let mut rhs = DVector::from_column_slice(values);
    for i in 0..m {
        let s = v.row(i).norm();
        if s > 0.0 {
            v.row_mut(i).scale_mut(1.0 / s);
            rhs[i] /= s;
        }
    }
    let lu = v.clone().lu();
    let singular = || Error::Singular("interpolation matrix is singular".into());
    let mut c = lu.solve(&rhs).ok_or_else(singular)?;
    let r = &rhs - &v * &c;
    c += lu.solve(&r).ok_or_else(singular)?;
    Ok(ApproxModel {
        coefficients: c.iter().copied().collect(),
        spec: spec.clone(),
        sample: SampleSet::with_unit_weights(points.to_vec(), Method::Baseline("interpolation".into())),
        residual_discrete: 0.0,
    })
}

/// Unweighted least squares on n i.i.d. mu-points.
pub fn standard_ls<F, R>(spec: &BasisSpec, n: usize, u: F, noise: NoiseModel, rng: &mut R) -> Result<ApproxModel>
where
    F: Fn(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    if n < spec.size() {
        return invalid(format!("standard least squares needs n >= m = {}", spec.size()));
    }
    let sample = draw_mu_sample(spec, rng, n)?;
    fit(&sample, spec, u, noise, rng)
}

fn univariate_sequence(kind: PointKind, measure: Measure, degree: usize, grid_size: usize) -> Result<Vec<f64>> {
    let spec = BasisSpec::univariate(measure, degree);
    univariate_system(kind, &spec, grid_size)
}

fn univariate_system(kind: PointKind, spec: &BasisSpec, grid_size: usize) -> Result<Vec<f64>> {
    let measure = spec.measures()[0];
    let m = spec.size();
    let grid = || CandidateGrid::for_measure(measure, grid_size);
    match kind {
        PointKind::Gauss => gauss_points(measure, m),
        PointKind::Leja => {
            let g = grid()?;
            g.check_size(m)?;
            match PointWeighting::default_for(measure) {
                PointWeighting::Optimal => weighted_leja(&g, |x| spec.optimal_weight(&[x]).map_or(0.0, f64::sqrt), m),
                PointWeighting::Unit => weighted_leja(&g, |_| 1.0, m),
            }
        }
        PointKind::Fekete => fekete_points(&grid()?, spec, PointWeighting::default_for(measure)),
        PointKind::Magic => magic_points(&grid()?, spec),
        PointKind::SlsRandom => invalid("random designs are not deterministic point systems"),
    }
}

/// Interpolation system of size m for `spec` (tensorized over Lambda in d > 1).
pub fn build_point_system(kind: PointKind, spec: &BasisSpec, grid_size: usize) -> Result<PointSystem> {
    let points = if spec.dim() == 1 {
        univariate_system(kind, spec, grid_size)?
            .into_iter()
            .map(|x| vec![x])
            .collect()
    } else {
        if spec.is_rotated() {
            return Err(Error::Unsupported("interpolation points for rotated multivariate bases".into()));
        }
        let per_dim = spec
            .measures()
            .iter()
            .zip(spec.max_degrees())
            .map(|(&measure, &p)| univariate_sequence(kind, measure, p, grid_size))
            .collect::<Result<Vec<_>>>()?;
        tensor_interpolation_points(&per_dim, spec.index_set())?
    };
    let certificate = Some(unisolvency(&points, spec)?);
    Ok(PointSystem {
        kind,
        points,
        certificate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::IndexRule;
    use crate::sampling::sample_measure;
    use crate::seed::rng_for;
    use proptest::prelude::*;
    use rand::seq::index::sample as choose;

    fn det(points: &[f64], spec: &BasisSpec, weighting: PointWeighting) -> f64 {
        let m = spec.size();
        DMatrix::from_fn(m, m, |i, j| {
            let x = points[i];
            row_weight(spec, weighting, x).unwrap() * spec.eval(&[x]).unwrap()[j]
        })
        .determinant()
        .abs()
    }

    #[test]
    fn gauss_nodes() {
        assert_eq!(gauss_points(Measure::Uniform, 1).unwrap(), vec![0.0]);
        let g = gauss_points(Measure::Uniform, 2).unwrap();
        assert!((g[1] - 1.0 / 3f64.sqrt()).abs() < 1e-15 && g[0] == -g[1]);
        let h = gauss_points(Measure::Gaussian, 2).unwrap();
        assert!((h[1] - 1.0).abs() < 1e-14 && h[0] == -h[1]);
        for measure in [Measure::Uniform, Measure::Gaussian] {
            for n in [5, 8, 41] {
                let x = gauss_points(measure, n).unwrap();
                for i in 0..n {
                    assert!((x[i] + x[n - 1 - i]).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn leja_ties_prefix_and_unisolvency() {
        let grid = CandidateGrid::uniform(-1.0, 1.0, 1001).unwrap();
        assert_eq!(weighted_leja(&grid, |_| 1.0, 1).unwrap(), vec![-1.0]);
        let long = weighted_leja(&grid, |_| 1.0, 12).unwrap();
        let short = weighted_leja(&grid, |_| 1.0, 5).unwrap();
        assert_eq!(&long[..5], &short[..]);
        let spec = BasisSpec::univariate(Measure::Uniform, 11);
        assert!(det(&long, &spec, PointWeighting::Unit) > 0.0);
    }

    #[test]
    fn fekete_small_cases() {
        let grid = CandidateGrid::for_measure(Measure::Uniform, 2001).unwrap();
        let one = fekete_points(&grid, &BasisSpec::univariate(Measure::Uniform, 0), PointWeighting::Unit).unwrap();
        assert_eq!(one, vec![-1.0]);
        let spec = BasisSpec::univariate(Measure::Uniform, 1);
        let mut two = fekete_points(&grid, &spec, PointWeighting::Unit).unwrap();
        two.sort_by(f64::total_cmp);
        // brute-force oracle over all grid pairs
        let coarse = CandidateGrid::for_measure(Measure::Uniform, 201).unwrap();
        let mut best = (0.0, 0.0, 0.0);
        for (i, &a) in coarse.points.iter().enumerate() {
            for &b in &coarse.points[i + 1..] {
                let v = det(&[a, b], &spec, PointWeighting::Unit);
                if v > best.0 {
                    best = (v, a, b);
                }
            }
        }
        assert_eq!((best.1, best.2), (-1.0, 1.0));
        assert_eq!(two, vec![-1.0, 1.0]);
    }

    #[test]
    fn fekete_beats_random_subsets() {
        for measure in [Measure::Uniform, Measure::Gaussian] {
            let spec = BasisSpec::univariate(measure, 7);
            let w = PointWeighting::default_for(measure);
            let grid = CandidateGrid::for_measure(measure, 2000).unwrap();
            let fk = fekete_points(&grid, &spec, w).unwrap();
            let d_fk = det(&fk, &spec, w);
            let mut rng = rng_for(1, 0);
            for _ in 0..1000 {
                let idx = choose(&mut rng, grid.len(), 8);
                let pts: Vec<f64> = idx.iter().map(|i| grid.points[i]).collect();
                assert!(det(&pts, &spec, w) <= d_fk);
            }
        }
    }

    #[test]
    fn magic_first_point_and_reproduction() {
        let grid = CandidateGrid::for_measure(Measure::Gaussian, 10_000).unwrap();
        let spec = BasisSpec::univariate(Measure::Gaussian, 0);
        assert_eq!(magic_points(&grid, &spec).unwrap(), vec![-10.0]);
        let spec = BasisSpec::univariate(Measure::Gaussian, 5);
        let pts: Vec<Vec<f64>> = magic_points(&grid, &spec).unwrap().into_iter().map(|x| vec![x]).collect();
        assert!(unisolvency(&pts, &spec).unwrap().condition.is_finite());
        let u = |x: &[f64]| spec.eval_expansion(&[0.3, -1.0, 0.0, 2.0, 0.5, -0.25], x).unwrap();
        let vals: Vec<f64> = pts.iter().map(|x| u(x)).collect();
        let model = interpolate(&pts, &spec, &vals).unwrap();
        for x in sample_measure(spec.measures(), &mut rng_for(2, 0), 100) {
            assert!((model.eval(&x).unwrap() - u(&x)).abs() < 1e-10);
        }
    }

    #[test]
    fn every_system_reproduces_the_space() {
        let specs = [
            BasisSpec::univariate(Measure::Uniform, 10),
            BasisSpec::univariate(Measure::Gaussian, 8),
            BasisSpec::tensor(Measure::Uniform, 2, IndexRule::HyperbolicCross(4)).unwrap(),
            BasisSpec::tensor(Measure::Gaussian, 2, IndexRule::HyperbolicCross(4)).unwrap(),
        ];
        for spec in &specs {
            let m = spec.size();
            let coef: Vec<f64> = (0..m).map(|j| 1.0 / (1.0 + j as f64)).collect();
            let u = |x: &[f64]| spec.eval_expansion(&coef, x).unwrap();
            let tests = sample_measure(spec.measures(), &mut rng_for(3, 0), 100);
            for kind in [PointKind::Gauss, PointKind::Leja, PointKind::Fekete, PointKind::Magic] {
                let sys = build_point_system(kind, spec, DEFAULT_GRID_SIZE).unwrap();
                assert_eq!(sys.points.len(), m);
                let vals: Vec<f64> = sys.points.iter().map(|x| u(x)).collect();
                let model = interpolate(&sys.points, spec, &vals).unwrap();
                for x in &tests {
                    let err = (model.eval(x).unwrap() - u(x)).abs();
                    assert!(err <= 1e-10, "{kind:?} m = {m}: {err:e}");
                }
            }
        }
    }

    #[test]
    fn tensor_grid_shapes() {
        let set = MultiIndexSet::build(2, IndexRule::TotalDegree(0)).unwrap();
        let pts = tensor_interpolation_points(&[vec![0.5], vec![-0.5]], &set).unwrap();
        assert_eq!(pts, vec![vec![0.5, -0.5]]);
        let set = MultiIndexSet::build(2, IndexRule::HyperbolicCross(4)).unwrap();
        let seq = vec![0.0, 1.0, -1.0, 0.5, -0.5];
        assert_eq!(tensor_interpolation_points(&[seq.clone(), seq.clone()], &set).unwrap().len(), 10);
        assert!(tensor_interpolation_points(&[seq.clone(), seq[..3].to_vec()], &set).is_err());
    }

    #[test]
    fn interpolation_errors_and_sls() {
        let spec = BasisSpec::univariate(Measure::Uniform, 1);
        assert!(interpolate(&[vec![0.2], vec![0.2]], &spec, &[1.0, 2.0]).is_err());
        // u = phi_2 exactly
        let model = interpolate(&[vec![-0.5], vec![0.7]], &spec, &[-0.5 * 3f64.sqrt(), 0.7 * 3f64.sqrt()]).unwrap();
        assert!((model.coefficients[0]).abs() < 1e-12 && (model.coefficients[1] - 1.0).abs() < 1e-12);
        // constant regression returns the sample mean
        let spec0 = BasisSpec::univariate(Measure::Gaussian, 0);
        let mut rng = rng_for(4, 0);
        let model = standard_ls(&spec0, 50, |x| x[0], NoiseModel::None, &mut rng).unwrap();
        let pts = draw_mu_sample(&spec0, &mut rng_for(4, 0), 50).unwrap();
        let mean = pts.points.iter().map(|x| x[0]).sum::<f64>() / 50.0;
        assert!((model.coefficients[0] - mean).abs() < 1e-12);
        let spec = BasisSpec::univariate(Measure::Uniform, 4);
        let model = standard_ls(&spec, 2000, |x| x[0].powi(3), NoiseModel::None, &mut rng).unwrap();
        let x = [0.3];
        assert!((model.eval(&x).unwrap() - 0.027).abs() < 1e-8);
    }

    #[test]
    fn selections_are_deterministic_and_exportable() {
        let spec = BasisSpec::univariate(Measure::Gaussian, 6);
        for kind in [PointKind::Leja, PointKind::Fekete, PointKind::Magic] {
            let a = build_point_system(kind, &spec, 5000).unwrap();
            let b = build_point_system(kind, &spec, 5000).unwrap();
            let (mut ca, mut cb) = (Vec::new(), Vec::new());
            a.write_csv(&mut ca).unwrap();
            b.write_csv(&mut cb).unwrap();
            assert_eq!(ca, cb);
            assert!(String::from_utf8(ca).unwrap().starts_with("kind,x1\n"));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn leja_tensor_grids_are_unisolvent(p in 1usize..12, d in 2usize..4) {
            let spec = BasisSpec::tensor(Measure::Uniform, d, IndexRule::HyperbolicCross(p)).unwrap();
            let sys = build_point_system(PointKind::Leja, &spec, 2000).unwrap();
            prop_assert!(sys.certificate.unwrap().condition < 1e12);
        }
    }
}
