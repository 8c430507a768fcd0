//! Discretized Hilbert-space primitives.
//!
//! Functions on [0,1] are represented by their values on a shared [`Grid`]
//! carrying trapezoid quadrature weights normalized to sum one, so that
//! [`inner_product`] discretizes the L2 inner product. Covariance operators
//! are eigendecomposed in weighted coordinates, which makes the discrete
//! problem symmetric and the eigenfunctions orthonormal under the grid
//! inner product.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Relative residual below which Gram-Schmidt inputs are declared dependent.
/// The monomial systems used for simulation are extremely ill-conditioned
/// (the 20th monomial keeps a residual of only ~9e-13 against the span of
/// the first 19 on the 50-point grid), so the cutoff sits just above the
/// f64 noise floor.
const GS_RANK_TOL: f64 = 1e-13;

/// Eigenvalues of an empirical covariance below this are clamped to zero;
/// anything more negative is reported as an error.
const EIG_NEG_TOL: f64 = -1e-10;

#[derive(Debug)]
struct GridData {
    points: Vec<f64>,
    weights: Vec<f64>,
}

/// Shared evaluation grid on [0,1] with quadrature weights.
///
/// Cheap to clone; curves hold a handle to their grid and compatibility
/// checks use pointer identity with a structural fallback.
#[derive(Debug, Clone)]
pub struct Grid {
    inner: Arc<GridData>,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.points() == other.points() && self.weights() == other.weights())
    }
}

impl Grid {
    /// Equispaced inclusive grid of `p` points with trapezoid weights.
    pub fn equispaced(p: usize) -> Result<Grid> {
        if p < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 points, got {p}")));
        }
        let points: Vec<f64> = (0..p).map(|k| k as f64 / (p - 1) as f64).collect();
        Grid::from_points(points)
    }

    /// Grid over arbitrary strictly increasing points spanning [0,1].
    /// Weights follow the composite trapezoid rule and are normalized to
    /// sum one.
    pub fn from_points(points: Vec<f64>) -> Result<Grid> {
        let p = points.len();
        if p < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 points, got {p}")));
        }
        if points.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidGrid("non-finite grid point".into()));
        }
        if points[0] != 0.0 || points[p - 1] != 1.0 {
            return Err(Error::InvalidGrid(format!(
                "grid must span [0,1], got [{}, {}]",
                points[0],
                points[p - 1]
            )));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidGrid("points must be strictly increasing".into()));
        }
        let mut weights = vec![0.0; p];
        weights[0] = (points[1] - points[0]) / 2.0;
        weights[p - 1] = (points[p - 1] - points[p - 2]) / 2.0;
        for k in 1..p - 1 {
            weights[k] = (points[k + 1] - points[k - 1]) / 2.0;
        }
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        Ok(Grid { inner: Arc::new(GridData { points, weights }) })
    }

    pub fn len(&self) -> usize {
        self.inner.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> &[f64] {
        &self.inner.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.inner.weights
    }
}

pub(crate) fn check_same_grid(a: &Grid, b: &Grid) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::IncompatibleGrids(format!(
            "{} points vs {} points",
            a.len(),
            b.len()
        )))
    }
}

/// One function as a vector of values on a grid.
#[derive(Debug, Clone)]
pub struct Curve {
    grid: Grid,
    values: Vec<f64>,
}

impl Curve {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Curve> {
        if values.len() != grid.len() {
            return Err(Error::InvalidCurve(format!(
                "{} values on a {}-point grid",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidCurve("non-finite value".into()));
        }
        Ok(Curve { grid, values })
    }

    pub fn zeros(grid: Grid) -> Curve {
        let p = grid.len();
        Curve { grid, values: vec![0.0; p] }
    }

    pub fn constant(grid: Grid, value: f64) -> Result<Curve> {
        let p = grid.len();
        Curve::new(grid, vec![value; p])
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Curve> {
        let values: Vec<f64> = grid.points().iter().map(|&t| f(t)).collect();
        Curve::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn add(&self, other: &Curve) -> Result<Curve> {
        check_same_grid(&self.grid, &other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(Curve { grid: self.grid.clone(), values })
    }

    pub fn sub(&self, other: &Curve) -> Result<Curve> {
        check_same_grid(&self.grid, &other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(Curve { grid: self.grid.clone(), values })
    }

    pub fn scale(&self, c: f64) -> Curve {
        let values = self.values.iter().map(|v| c * v).collect();
        Curve { grid: self.grid.clone(), values }
    }

    /// In-place `self += c * other`, grids assumed already checked.
    pub(crate) fn axpy_unchecked(&mut self, c: f64, other: &Curve) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
    }
}

/// Ordered collection of curves on a common grid, optionally labeled.
#[derive(Debug, Clone)]
pub struct FunctionalSample {
    grid: Grid,
    curves: Vec<Curve>,
    labels: Option<Vec<String>>,
}

impl FunctionalSample {
    pub fn new(curves: Vec<Curve>) -> Result<FunctionalSample> {
        let first = curves.first().ok_or(Error::EmptySample)?;
        let grid = first.grid().clone();
        for c in &curves[1..] {
            check_same_grid(&grid, c.grid())?;
        }
        Ok(FunctionalSample { grid, curves, labels: None })
    }

    pub fn with_labels(curves: Vec<Curve>, labels: Vec<String>) -> Result<FunctionalSample> {
        if curves.len() != labels.len() {
            return Err(Error::InvalidCurve(format!(
                "{} labels for {} curves",
                labels.len(),
                curves.len()
            )));
        }
        let mut s = FunctionalSample::new(curves)?;
        s.labels = Some(labels);
        Ok(s)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn curves(&self) -> &[Curve] {
        &self.curves
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }
}

/// Weighted inner product `sum_k w_k f(t_k) g(t_k)`.
pub fn inner_product(f: &Curve, g: &Curve) -> Result<f64> {
    check_same_grid(f.grid(), g.grid())?;
    let w = f.grid().weights();
    let mut acc = 0.0;
    for k in 0..w.len() {
        acc += w[k] * f.values[k] * g.values[k];
    }
    Ok(acc)
}

/// Norm induced by [`inner_product`].
pub fn norm(f: &Curve) -> f64 {
    let w = f.grid().weights();
    let mut acc = 0.0;
    for k in 0..w.len() {
        acc += w[k] * f.values[k] * f.values[k];
    }
    acc.sqrt()
}

/// Weighted L2 distance between two curves on a common grid.
pub fn distance(f: &Curve, g: &Curve) -> Result<f64> {
    check_same_grid(f.grid(), g.grid())?;
    let w = f.grid().weights();
    let mut acc = 0.0;
    for k in 0..w.len() {
        let d = f.values[k] - g.values[k];
        acc += w[k] * d * d;
    }
    Ok(acc.sqrt())
}

/// Pointwise arithmetic mean of the sample's curves.
pub fn sample_mean(s: &FunctionalSample) -> Curve {
    mean_of(s.curves()).expect("sample is nonempty by construction")
}

/// Pointwise mean of a slice of curves on a common grid.
pub fn mean_of(curves: &[Curve]) -> Result<Curve> {
    let first = curves.first().ok_or(Error::EmptySample)?;
    let mut acc = Curve::zeros(first.grid().clone());
    for c in curves {
        check_same_grid(acc.grid(), c.grid())?;
        acc.axpy_unchecked(1.0, c);
    }
    Ok(acc.scale(1.0 / curves.len() as f64))
}

/// Empirical covariance operator with its eigendecomposition.
///
/// Eigenvalues are sorted descending and clamped at zero; eigenfunctions are
/// orthonormal under the grid inner product. Sign convention: the
/// largest-magnitude component of each eigenfunction is positive, ties
/// resolved by the earliest grid index.
#[derive(Debug, Clone)]
pub struct CovOp {
    grid: Grid,
    eigenvalues: Vec<f64>,
    eigenfunctions: Vec<Curve>,
}

impl CovOp {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenfunctions(&self) -> &[Curve] {
        &self.eigenfunctions
    }

    /// `||Gamma^{1/2} v|| = sqrt(sum_j lambda_j <phi_j, v>^2)`.
    pub fn dispersion(&self, v: &Curve) -> Result<f64> {
        check_same_grid(&self.grid, v.grid())?;
        let mut acc = 0.0;
        for (lambda, phi) in self.eigenvalues.iter().zip(&self.eigenfunctions) {
            if *lambda == 0.0 {
                continue;
            }
            let c = inner_product(phi, v)?;
            acc += lambda * c * c;
        }
        Ok(acc.sqrt())
    }
}

/// Eigendecomposition of `n^{-1} sum_i (X_i - center) (x) (X_i - center)`
/// under the weighted inner product.
///
/// The solve runs in weighted coordinates: scaling values by sqrt(w) turns
/// the weighted operator into an ordinary symmetric matrix whose orthonormal
/// eigenvectors map back to grid-orthonormal eigenfunctions.
pub fn covariance_eig(s: &FunctionalSample, center: &Curve) -> Result<CovOp> {
    check_same_grid(s.grid(), center.grid())?;
    let p = s.grid().len();
    let n = s.len() as f64;
    let w = s.grid().weights();

    let mut cov = vec![0.0; p * p];
    let mut dev = vec![0.0; p];
    for c in s.curves() {
        for k in 0..p {
            dev[k] = c.values()[k] - center.values()[k];
        }
        for i in 0..p {
            let di = dev[i];
            let row = &mut cov[i * p..(i + 1) * p];
            for j in 0..p {
                row[j] += di * dev[j];
            }
        }
    }

    let sqrt_w: Vec<f64> = w.iter().map(|x| x.sqrt()).collect();
    let m = DMatrix::from_fn(p, p, |i, j| cov[i * p + j] / n * sqrt_w[i] * sqrt_w[j]);
    let eig = m.symmetric_eigen();

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("eigenvalues are finite")
    });

    let mut eigenvalues = Vec::with_capacity(p);
    let mut eigenfunctions = Vec::with_capacity(p);
    for &idx in &order {
        let lambda = eig.eigenvalues[idx];
        if lambda < EIG_NEG_TOL {
            return Err(Error::NegativeEigenvalue(lambda));
        }
        eigenvalues.push(lambda.max(0.0));

        let col = eig.eigenvectors.column(idx);
        let mut values: Vec<f64> = (0..p).map(|k| col[k] / sqrt_w[k]).collect();
        let mut k_max = 0;
        for k in 1..p {
            if values[k].abs() > values[k_max].abs() {
                k_max = k;
            }
        }
        if values[k_max] < 0.0 {
            for v in &mut values {
                *v = -*v;
            }
        }
        eigenfunctions.push(Curve::new(s.grid().clone(), values)?);
    }

    Ok(CovOp { grid: s.grid().clone(), eigenvalues, eigenfunctions })
}

/// Gram-Schmidt orthonormalization under the grid inner product.
///
/// Classical projection with reorthogonalization passes, so the output is
/// orthonormal to near machine precision even for badly conditioned inputs.
/// The j-th output depends only on the first j inputs. Inputs whose residual
/// collapses below [`GS_RANK_TOL`] relative to their norm are reported as
/// rank deficient.
pub fn gram_schmidt(fs: &[Curve]) -> Result<Vec<Curve>> {
    let first = fs.first().ok_or(Error::EmptySample)?;
    let grid = first.grid().clone();
    let mut ortho: Vec<Curve> = Vec::with_capacity(fs.len());

    for (j, f) in fs.iter().enumerate() {
        check_same_grid(&grid, f.grid())?;
        let scale = norm(f).max(1.0);
        let mut r = f.clone();
        for q in &ortho {
            let c = inner_product(&r, q)?;
            r.axpy_unchecked(-c, q);
        }
        let residual = norm(&r);
        if residual <= GS_RANK_TOL * scale {
            return Err(Error::RankDeficient { index: j, residual });
        }
        // Reorthogonalize until the components along the existing basis are
        // at rounding level relative to the residual.
        for _ in 0..4 {
            let mut worst: f64 = 0.0;
            let coefs: Vec<f64> = ortho
                .iter()
                .map(|q| inner_product(&r, q))
                .collect::<Result<_>>()?;
            for (c, q) in coefs.iter().zip(&ortho) {
                worst = worst.max(c.abs());
                r.axpy_unchecked(-c, q);
            }
            if worst <= 1e-14 * norm(&r).max(f64::MIN_POSITIVE) {
                break;
            }
        }
        let nr = norm(&r);
        ortho.push(r.scale(1.0 / nr));
    }
    Ok(ortho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn grid50() -> Grid {
        Grid::equispaced(50).unwrap()
    }

    #[test]
    fn make_grid_two_points() {
        let g = Grid::equispaced(2).unwrap();
        assert_eq!(g.points(), &[0.0, 1.0]);
        assert_eq!(g.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn make_grid_three_points() {
        let g = Grid::equispaced(3).unwrap();
        assert_eq!(g.points(), &[0.0, 0.5, 1.0]);
        assert_eq!(g.weights(), &[0.25, 0.5, 0.25]);
    }

    #[test]
    fn make_grid_fifty_points_weights_sum_to_one() {
        let g = grid50();
        assert_eq!(g.len(), 50);
        let total: f64 = g.weights().iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        assert!(g.weights().iter().all(|&w| w > 0.0));
    }

    #[test]
    fn make_grid_rejects_single_point() {
        assert!(matches!(Grid::equispaced(1), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn grid_must_span_unit_interval() {
        assert!(Grid::from_points(vec![0.0, 0.5, 0.9]).is_err());
        assert!(Grid::from_points(vec![0.1, 0.5, 1.0]).is_err());
        assert!(Grid::from_points(vec![0.0, 0.5, 0.5, 1.0]).is_err());
    }

    #[test]
    fn inner_product_unit_constant() {
        let g = grid50();
        let one = Curve::constant(g, 1.0).unwrap();
        assert_abs_diff_eq!(inner_product(&one, &one).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn inner_product_sin_cos_orthogonal() {
        let g = grid50();
        let f = Curve::from_fn(g.clone(), |t| (2.0 * PI * t).sin() * 2f64.sqrt()).unwrap();
        let h = Curve::from_fn(g, |t| (2.0 * PI * t).cos() * 2f64.sqrt()).unwrap();
        assert_abs_diff_eq!(inner_product(&f, &h).unwrap(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn inner_product_constants() {
        let g = grid50();
        let f = Curve::constant(g.clone(), 2.0).unwrap();
        let h = Curve::constant(g, 3.0).unwrap();
        assert_abs_diff_eq!(inner_product(&f, &h).unwrap(), 6.0, epsilon = 1e-12);
    }

    #[test]
    fn inner_product_rejects_grid_mismatch() {
        let f = Curve::constant(Grid::equispaced(50).unwrap(), 1.0).unwrap();
        let h = Curve::constant(Grid::equispaced(49).unwrap(), 1.0).unwrap();
        assert!(matches!(inner_product(&f, &h), Err(Error::IncompatibleGrids(_))));
    }

    #[test]
    fn structurally_equal_grids_are_compatible() {
        let f = Curve::constant(Grid::equispaced(50).unwrap(), 1.0).unwrap();
        let h = Curve::constant(Grid::equispaced(50).unwrap(), 2.0).unwrap();
        assert_abs_diff_eq!(inner_product(&f, &h).unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn norm_examples() {
        let g = grid50();
        assert_abs_diff_eq!(norm(&Curve::constant(g.clone(), 1.0).unwrap()), 1.0, epsilon = 1e-14);
        assert_eq!(norm(&Curve::zeros(g.clone())), 0.0);
        // integral of (2t-1)^2 over [0,1] is 1/3 by hand integration
        let f = Curve::from_fn(g, |t| 2.0 * t - 1.0).unwrap();
        assert_abs_diff_eq!(norm(&f), (1f64 / 3.0).sqrt(), epsilon = 2e-3);
    }

    #[test]
    fn quadrature_exact_for_linear_integrands() {
        let g = grid50();
        let one = Curve::constant(g.clone(), 1.0).unwrap();
        let lin = Curve::from_fn(g, |t| 2.0 * t - 1.0).unwrap();
        // f*g linear when one factor is constant: trapezoid is exact
        assert_abs_diff_eq!(inner_product(&lin, &one).unwrap(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn sample_mean_examples() {
        let g = grid50();
        let s = FunctionalSample::new(vec![
            Curve::constant(g.clone(), 0.0).unwrap(),
            Curve::constant(g.clone(), 2.0).unwrap(),
        ])
        .unwrap();
        for &v in sample_mean(&s).values() {
            assert_abs_diff_eq!(v, 1.0, epsilon = 1e-15);
        }

        let c = Curve::from_fn(g.clone(), |t| t * t).unwrap();
        let single = FunctionalSample::new(vec![c.clone()]).unwrap();
        assert_eq!(sample_mean(&single).values(), c.values());

        let s = FunctionalSample::new(vec![
            Curve::from_fn(g.clone(), |t| 2.0 * t - 1.0).unwrap(),
            Curve::from_fn(g, |t| 1.0 - 2.0 * t).unwrap(),
        ])
        .unwrap();
        for &v in sample_mean(&s).values() {
            assert_abs_diff_eq!(v, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn empty_sample_is_rejected() {
        assert!(matches!(FunctionalSample::new(vec![]), Err(Error::EmptySample)));
        assert!(matches!(mean_of(&[]), Err(Error::EmptySample)));
    }

    #[test]
    fn covariance_of_constant_sample_is_zero() {
        let g = grid50();
        let c = Curve::from_fn(g.clone(), |t| t).unwrap();
        let s = FunctionalSample::new(vec![c.clone(), c.clone(), c.clone()]).unwrap();
        let op = covariance_eig(&s, &c).unwrap();
        for &lambda in op.eigenvalues() {
            assert!(lambda.abs() <= 1e-12, "expected zero operator, got {lambda}");
        }
    }

    #[test]
    fn covariance_rank_one_pair() {
        let g = grid50();
        let phi = Curve::from_fn(g.clone(), |t| (2.0 * PI * t).sin() * 2f64.sqrt()).unwrap();
        let s = FunctionalSample::new(vec![phi.clone(), phi.scale(-1.0)]).unwrap();
        let center = Curve::zeros(g);
        let op = covariance_eig(&s, &center).unwrap();
        assert_abs_diff_eq!(op.eigenvalues()[0], 1.0, epsilon = 1e-8);
        assert!(op.eigenvalues()[1].abs() < 1e-10);
        // sign convention resolves the eigenfunction deterministically
        let lead = &op.eigenfunctions()[0];
        let agreement = inner_product(lead, &phi).unwrap();
        assert_abs_diff_eq!(agreement.abs(), 1.0, epsilon = 1e-8);
        let mut k_max = 0;
        for k in 1..lead.values().len() {
            if lead.values()[k].abs() > lead.values()[k_max].abs() {
                k_max = k;
            }
        }
        assert!(lead.values()[k_max] > 0.0);
    }

    #[test]
    fn covariance_of_four_constants() {
        let g = grid50();
        let s = FunctionalSample::new(
            [-2.0, -1.0, 1.0, 2.0]
                .iter()
                .map(|&v| Curve::constant(g.clone(), v).unwrap())
                .collect(),
        )
        .unwrap();
        let op = covariance_eig(&s, &Curve::zeros(g.clone())).unwrap();
        // variance (4+1+1+4)/4 = 2.5, eigenfunction the unit constant
        assert_abs_diff_eq!(op.eigenvalues()[0], 2.5, epsilon = 1e-10);
        assert!(op.eigenvalues()[1].abs() < 1e-10);
        let one = Curve::constant(g, 1.0).unwrap();
        assert_abs_diff_eq!(
            inner_product(&op.eigenfunctions()[0], &one).unwrap(),
            1.0,
            epsilon = 1e-8
        );
    }

    #[test]
    fn covariance_reconstructs_raw_matrix() {
        let g = Grid::equispaced(12).unwrap();
        let mut curves = Vec::new();
        for i in 0..15u32 {
            let a = (i as f64 * 0.37).sin();
            let b = (i as f64 * 0.73).cos();
            curves.push(
                Curve::from_fn(g.clone(), |t| a * t + b * (3.0 * t).cos() + 0.1 * (i as f64))
                    .unwrap(),
            );
        }
        let s = FunctionalSample::new(curves).unwrap();
        let center = sample_mean(&s);
        let op = covariance_eig(&s, &center).unwrap();

        let p = g.len();
        let n = s.len() as f64;
        let mut raw = vec![0.0; p * p];
        for c in s.curves() {
            for i in 0..p {
                for j in 0..p {
                    raw[i * p + j] += (c.values()[i] - center.values()[i])
                        * (c.values()[j] - center.values()[j])
                        / n;
                }
            }
        }
        for i in 0..p {
            for j in 0..p {
                let mut rec = 0.0;
                for (lambda, phi) in op.eigenvalues().iter().zip(op.eigenfunctions()) {
                    rec += lambda * phi.values()[i] * phi.values()[j];
                }
                assert_abs_diff_eq!(rec, raw[i * p + j], epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn gram_schmidt_constant_and_linear() {
        let g = Grid::equispaced(401).unwrap();
        let fs = vec![
            Curve::constant(g.clone(), 1.0).unwrap(),
            Curve::from_fn(g.clone(), |t| t).unwrap(),
        ];
        let ortho = gram_schmidt(&fs).unwrap();
        // ||t - 1/2|| = 1/sqrt(12) by hand integration
        let expect = Curve::from_fn(g, |t| 12f64.sqrt() * (t - 0.5)).unwrap();
        for (a, b) in ortho[1].values().iter().zip(expect.values()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-3);
        }
    }

    #[test]
    fn gram_schmidt_idempotent_on_orthonormal_input() {
        let g = grid50();
        let fs = vec![
            Curve::constant(g.clone(), 1.0).unwrap(),
            Curve::from_fn(g, |t| (2.0 * PI * t).sin() * 2f64.sqrt()).unwrap(),
        ];
        let ortho = gram_schmidt(&fs).unwrap();
        for (f, q) in fs.iter().zip(&ortho) {
            for (a, b) in f.values().iter().zip(q.values()) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn gram_schmidt_rejects_dependent_constants() {
        let g = grid50();
        let fs = vec![
            Curve::constant(g.clone(), 1.0).unwrap(),
            Curve::constant(g, 2.0).unwrap(),
        ];
        match gram_schmidt(&fs) {
            Err(Error::RankDeficient { index, .. }) => assert_eq!(index, 1),
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn gram_schmidt_handles_twenty_monomials() {
        let g = grid50();
        let fs: Vec<Curve> = (1..=20)
            .map(|j| Curve::from_fn(g.clone(), |t| t.powi(j)).unwrap())
            .collect();
        let ortho = gram_schmidt(&fs).unwrap();
        for i in 0..20 {
            for j in 0..20 {
                let ip = inner_product(&ortho[i], &ortho[j]).unwrap();
                let target = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(ip, target, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn cauchy_schwarz_holds() {
        let g = grid50();
        for i in 0..20u32 {
            let a = (i as f64 * 0.61).sin();
            let f = Curve::from_fn(g.clone(), |t| a + (5.0 * t + i as f64).sin()).unwrap();
            let h = Curve::from_fn(g.clone(), |t| (3.0 * t - i as f64).cos() - a).unwrap();
            let ip = inner_product(&f, &h).unwrap();
            assert!(ip.abs() <= norm(&f) * norm(&h) + 1e-12);
        }
    }
}
