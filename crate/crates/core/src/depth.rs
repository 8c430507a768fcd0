//! Functional depth evaluators.
//!
//! Four depths are provided: kernel depth (KD), a modified regularized
//! halfspace depth approximated by random projections (RHD), and the
//! classical integrated (ITD) and infimal (IFD) depths built from pointwise
//! univariate halfspace depth. KD and RHD carry a quantile tuning level `u`:
//! the KD bandwidth is the u-quantile of pairwise distances in the reference
//! ensemble, and the RHD regularization keeps only directions whose
//! dispersion reaches the u-quantile of the sampled dispersions.
//!
//! All evaluators are pure given an explicit RNG stream (RHD only); the
//! batch entry point evaluates many queries against one immutable ensemble
//! in parallel.

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcspace::{
    check_same_grid, covariance_eig, distance, inner_product, norm, sample_mean, Curve,
    FunctionalSample,
};

/// Which functional depth to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DepthKind {
    Kd,
    Rhd,
    Itd,
    Ifd,
}

impl DepthKind {
    pub fn name(&self) -> &'static str {
        match self {
            DepthKind::Kd => "KD",
            DepthKind::Rhd => "RHD",
            DepthKind::Itd => "ITD",
            DepthKind::Ifd => "IFD",
        }
    }
}

/// Kernel for the kernel depth. Both choices are continuous, non-increasing,
/// positive at zero and vanishing at infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Kernel {
    /// `K(t) = exp(-t^2/2)`, the default.
    Gaussian,
    /// `K(t) = max(0, 1 - t^2)`.
    Epanechnikov,
}

impl Kernel {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Kernel::Gaussian => (-0.5 * t * t).exp(),
            Kernel::Epanechnikov => (1.0 - t * t).max(0.0),
        }
    }
}

/// Univariate depth used pointwise by ITD and IFD.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum UnivariateDepth {
    #[default]
    Halfspace,
}

/// Depth choice plus tuning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthSpec {
    pub kind: DepthKind,
    /// Quantile level for the KD bandwidth or the RHD regularization.
    pub quantile_u: f64,
    pub kernel: Kernel,
    /// Number of random projection directions for RHD.
    pub projections: usize,
    pub univariate: UnivariateDepth,
}

impl DepthSpec {
    pub fn kd(quantile_u: f64) -> DepthSpec {
        DepthSpec {
            kind: DepthKind::Kd,
            quantile_u,
            kernel: Kernel::Gaussian,
            projections: 500,
            univariate: UnivariateDepth::Halfspace,
        }
    }

    pub fn rhd(quantile_u: f64, projections: usize) -> DepthSpec {
        DepthSpec { kind: DepthKind::Rhd, projections, ..DepthSpec::kd(quantile_u) }
    }

    pub fn itd() -> DepthSpec {
        DepthSpec { kind: DepthKind::Itd, ..DepthSpec::kd(0.5) }
    }

    pub fn ifd() -> DepthSpec {
        DepthSpec { kind: DepthKind::Ifd, ..DepthSpec::kd(0.5) }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.quantile_u > 0.0 && self.quantile_u < 1.0) {
            return Err(Error::InvalidSpec(format!(
                "quantile level must lie in (0,1), got {}",
                self.quantile_u
            )));
        }
        if self.projections == 0 {
            return Err(Error::InvalidSpec("need at least one projection direction".into()));
        }
        Ok(())
    }
}

/// A depth value, with the RHD outlyingness tie-break key when available
/// (larger key means more outlying).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthValue {
    pub value: f64,
    pub tiebreak_key: Option<f64>,
}

impl DepthValue {
    fn plain(value: f64) -> DepthValue {
        DepthValue { value, tiebreak_key: None }
    }
}

/// Order statistic at 1-based index `ceil(u * m)` of an ascending list.
/// The single quantile convention used everywhere a u-quantile appears.
pub(crate) fn quantile_ceil(sorted: &[f64], u: f64) -> f64 {
    let m = sorted.len();
    debug_assert!(m > 0);
    let k = ((u * m as f64).ceil() as usize).clamp(1, m);
    sorted[k - 1]
}

/// KD bandwidth: the u-quantile of the pairwise distance multiset
/// `{||X_i - X_i'||: i != i'}` over ordered pairs. A zero quantile falls
/// back to the smallest positive distance, and one if every distance is
/// zero.
pub fn kd_bandwidth(ensemble: &FunctionalSample, u: f64) -> Result<f64> {
    let n = ensemble.len();
    if n < 2 {
        return Err(Error::InsufficientSample(format!(
            "KD bandwidth needs at least 2 curves, got {n}"
        )));
    }
    let curves = ensemble.curves();
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            dists.push(distance(&curves[i], &curves[j])?);
        }
    }
    dists.sort_unstable_by(|a, b| a.partial_cmp(b).expect("distances are finite"));
    // Each unordered distance appears twice among ordered pairs; index into
    // the duplicated multiset without materializing it.
    let m = n * (n - 1);
    let k = ((u * m as f64).ceil() as usize).clamp(1, m);
    let h = dists[(k + 1) / 2 - 1];
    if h > 0.0 {
        return Ok(h);
    }
    match dists.iter().find(|&&d| d > 0.0) {
        Some(&d) => Ok(d),
        None => Ok(1.0),
    }
}

/// Sample kernel depth `(n h)^{-1} sum_i K(||x - X_i|| / h)` with the
/// bandwidth taken from [`kd_bandwidth`].
pub fn kd_depth(x: &Curve, ensemble: &FunctionalSample, spec: &DepthSpec) -> Result<DepthValue> {
    spec.validate()?;
    let h = kd_bandwidth(ensemble, spec.quantile_u)?;
    kd_depth_with_bandwidth(x, ensemble, h, spec.kernel)
}

/// Kernel depth at a fixed bandwidth.
pub fn kd_depth_with_bandwidth(
    x: &Curve,
    ensemble: &FunctionalSample,
    h: f64,
    kernel: Kernel,
) -> Result<DepthValue> {
    check_same_grid(x.grid(), ensemble.grid())?;
    let n = ensemble.len() as f64;
    let mut acc = 0.0;
    for c in ensemble.curves() {
        acc += kernel.eval(distance(x, c)? / h);
    }
    Ok(DepthValue::plain(acc / (n * h)))
}

/// Closed-form kernel depth of `x` under a centered Gaussian law with the
/// given eigenpairs and the Gaussian kernel. Coordinates of `x` outside the
/// span of the eigenfunctions contribute their residual norm squared with
/// unit denominator. Used as a test oracle for the sample KD.
pub fn kd_gaussian_oracle(
    x: &Curve,
    eigenvalues: &[f64],
    eigenfunctions: &[Curve],
) -> Result<f64> {
    if eigenvalues.len() != eigenfunctions.len() {
        return Err(Error::InvalidBasis(format!(
            "{} eigenvalues for {} eigenfunctions",
            eigenvalues.len(),
            eigenfunctions.len()
        )));
    }
    if eigenvalues.iter().any(|&s| s < 0.0) {
        return Err(Error::InvalidBasis("negative eigenvalue".into()));
    }
    for (i, f) in eigenfunctions.iter().enumerate() {
        for (j, g) in eigenfunctions.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            if (inner_product(f, g)? - target).abs() > 1e-8 {
                return Err(Error::InvalidBasis(format!(
                    "eigenfunctions not orthonormal at pair ({i}, {j})"
                )));
            }
        }
    }

    let mut log_det = 0.0;
    let mut quad = 0.0;
    let mut coord_sq_sum = 0.0;
    for (sigma, psi) in eigenvalues.iter().zip(eigenfunctions) {
        let c = inner_product(x, psi)?;
        log_det += (1.0 + sigma).ln();
        quad += c * c / (1.0 + sigma);
        coord_sq_sum += c * c;
    }
    let residual_sq = (norm(x).powi(2) - coord_sq_sum).max(0.0);
    Ok((-0.5 * log_det).exp() * (-0.5 * (quad + residual_sq)).exp())
}

/// Unit-norm random directions for the RHD, each paired with its dispersion
/// `||Gamma_hat^{1/2} v||` under the ensemble's covariance. Only directions
/// whose dispersion reaches the u-quantile of all sampled dispersions are
/// retained; the retained set always contains the max-dispersion direction.
pub fn rhd_directions(
    ensemble: &FunctionalSample,
    m: usize,
    u: f64,
    rng: &mut ChaCha12Rng,
) -> Result<Vec<(Curve, f64)>> {
    if m == 0 {
        return Err(Error::InvalidSpec("need at least one projection direction".into()));
    }
    let grid = ensemble.grid().clone();
    let p = grid.len();
    let center = sample_mean(ensemble);
    let cov = covariance_eig(ensemble, &center)?;

    let mut candidates = Vec::with_capacity(m);
    for _ in 0..m {
        let v = loop {
            let values: Vec<f64> = (0..p).map(|_| rng.sample(StandardNormal)).collect();
            let c = Curve::new(grid.clone(), values)?;
            let nv = norm(&c);
            if nv > 0.0 {
                break c.scale(1.0 / nv);
            }
        };
        let disp = cov.dispersion(&v)?;
        candidates.push((v, disp));
    }

    let mut disps: Vec<f64> = candidates.iter().map(|(_, d)| *d).collect();
    disps.sort_unstable_by(|a, b| a.partial_cmp(b).expect("dispersions are finite"));
    let lambda = quantile_ceil(&disps, u);

    let retained: Vec<(Curve, f64)> = candidates
        .iter()
        .filter(|(_, d)| *d >= lambda)
        .cloned()
        .collect();
    if retained.is_empty() {
        // Unreachable for a quantile taken from the same list, but the
        // contract guarantees a nonempty feasible set.
        let best = candidates
            .into_iter()
            .max_by(|a, b| a.1.partial_cmp(&b.1).expect("dispersions are finite"))
            .expect("at least one direction");
        return Ok(vec![best]);
    }
    Ok(retained)
}

/// Random-projection approximation of the modified regularized halfspace
/// depth, with the outlyingness tie-break key from the averaged minimizing
/// direction.
pub fn rhd_depth(
    x: &Curve,
    ensemble: &FunctionalSample,
    spec: &DepthSpec,
    rng: &mut ChaCha12Rng,
) -> Result<DepthValue> {
    spec.validate()?;
    if ensemble.len() < 2 {
        return Err(Error::InsufficientSample(format!(
            "RHD needs at least 2 curves, got {}",
            ensemble.len()
        )));
    }
    let dirs = rhd_directions(ensemble, spec.projections, spec.quantile_u, rng)?;
    let pool: Vec<Curve> = dirs.into_iter().map(|(v, _)| v).collect();
    let eval = RhdEvaluator::new(ensemble, pool)?;
    eval.depth(x)
}

/// Precomputed projections for evaluating many RHD queries against one
/// ensemble with a shared direction pool.
pub struct RhdEvaluator {
    n: usize,
    pool: Vec<Curve>,
    /// `<X_i, v_m>` in ensemble order, one row per direction.
    raw: Vec<Vec<f64>>,
    /// Ascending copies of `raw` for rank lookups.
    sorted: Vec<Vec<f64>>,
}

impl RhdEvaluator {
    pub fn new(ensemble: &FunctionalSample, pool: Vec<Curve>) -> Result<RhdEvaluator> {
        let n = ensemble.len();
        let mut raw = Vec::with_capacity(pool.len());
        for v in &pool {
            let projs: Vec<f64> = ensemble
                .curves()
                .iter()
                .map(|c| inner_product(c, v))
                .collect::<Result<_>>()?;
            raw.push(projs);
        }
        let sorted: Vec<Vec<f64>> = raw
            .iter()
            .map(|projs| {
                let mut s = projs.clone();
                s.sort_unstable_by(|a, b| a.partial_cmp(b).expect("projections are finite"));
                s
            })
            .collect();
        Ok(RhdEvaluator { n, pool, raw, sorted })
    }

    pub fn depth(&self, x: &Curve) -> Result<DepthValue> {
        let x_projs: Vec<f64> = self
            .pool
            .iter()
            .map(|v| inner_product(x, v))
            .collect::<Result<_>>()?;

        // count of <X_i - x, v> >= 0 per direction; ties at zero count
        let counts: Vec<usize> = self
            .sorted
            .iter()
            .zip(&x_projs)
            .map(|(s, &xp)| self.n - s.partition_point(|&p| p < xp))
            .collect();
        let min_count = *counts.iter().min().expect("pool is nonempty");
        let minimizers: Vec<usize> =
            (0..counts.len()).filter(|&m| counts[m] == min_count).collect();

        // Outlyingness along the average of all minimizing directions.
        let l = minimizers.len() as f64;
        let xw = minimizers.iter().map(|&m| x_projs[m]).sum::<f64>() / l;
        let proj_w: Vec<f64> = (0..self.n)
            .map(|i| minimizers.iter().map(|&m| self.raw[m][i]).sum::<f64>() / l)
            .collect();
        let med = median(&proj_w);
        let abs_dev: Vec<f64> = proj_w.iter().map(|p| (p - med).abs()).collect();
        let mad = median(&abs_dev);
        let centered = (xw - med).abs();
        let key = if mad > 0.0 {
            centered / mad
        } else {
            let mean_abs_dev = abs_dev.iter().sum::<f64>() / abs_dev.len() as f64;
            if mean_abs_dev > 0.0 {
                centered / mean_abs_dev
            } else {
                centered
            }
        };

        Ok(DepthValue {
            value: min_count as f64 / self.n as f64,
            tiebreak_key: Some(key),
        })
    }
}

fn median(values: &[f64]) -> f64 {
    let mut s = values.to_vec();
    s.sort_unstable_by(|a, b| a.partial_cmp(b).expect("values are finite"));
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Tukey halfspace depth of a scalar: `min(#{s <= x}, #{s >= x}) / n`.
pub fn univariate_halfspace(x: f64, sample: &[f64]) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::InsufficientSample("empty univariate sample".into()));
    }
    let le = sample.iter().filter(|&&s| s <= x).count();
    let ge = sample.iter().filter(|&&s| s >= x).count();
    Ok(le.min(ge) as f64 / sample.len() as f64)
}

/// Integrated depth: quadrature-weighted average over grid points of the
/// pointwise univariate halfspace depth.
pub fn itd_depth(x: &Curve, ensemble: &FunctionalSample) -> Result<DepthValue> {
    let eval = PointwiseEvaluator::new(ensemble);
    eval.depth(x, false)
}

/// Infimal depth: minimum over grid points of the pointwise univariate
/// halfspace depth.
pub fn ifd_depth(x: &Curve, ensemble: &FunctionalSample) -> Result<DepthValue> {
    let eval = PointwiseEvaluator::new(ensemble);
    eval.depth(x, true)
}

/// Sorted per-gridpoint columns of an ensemble, for ITD/IFD rank lookups.
pub struct PointwiseEvaluator {
    grid_weights: Vec<f64>,
    columns: Vec<Vec<f64>>,
}

impl PointwiseEvaluator {
    pub fn new(ensemble: &FunctionalSample) -> PointwiseEvaluator {
        let p = ensemble.grid().len();
        let columns: Vec<Vec<f64>> = (0..p)
            .map(|k| {
                let mut col: Vec<f64> =
                    ensemble.curves().iter().map(|c| c.values()[k]).collect();
                col.sort_unstable_by(|a, b| a.partial_cmp(b).expect("values are finite"));
                col
            })
            .collect();
        PointwiseEvaluator {
            grid_weights: ensemble.grid().weights().to_vec(),
            columns,
        }
    }

    pub fn depth(&self, x: &Curve, infimal: bool) -> Result<DepthValue> {
        if x.values().len() != self.columns.len() {
            return Err(Error::IncompatibleGrids(format!(
                "query has {} points, ensemble has {}",
                x.values().len(),
                self.columns.len()
            )));
        }
        let mut acc = 0.0;
        let mut min_depth = f64::INFINITY;
        for (k, col) in self.columns.iter().enumerate() {
            let xv = x.values()[k];
            let n = col.len();
            let le = col.partition_point(|&v| v <= xv);
            let ge = n - col.partition_point(|&v| v < xv);
            let d = le.min(ge) as f64 / n as f64;
            acc += self.grid_weights[k] * d;
            min_depth = min_depth.min(d);
        }
        Ok(DepthValue::plain(if infimal { min_depth } else { acc }))
    }
}

/// A depth evaluator with its reference-distribution precomputation done
/// once: KD bandwidth, RHD direction pool and projections, or sorted
/// pointwise columns.
pub enum DepthEvaluator<'a> {
    Kd { ensemble: &'a FunctionalSample, h: f64, kernel: Kernel },
    Rhd(RhdEvaluator),
    Pointwise { eval: PointwiseEvaluator, infimal: bool },
}

impl<'a> DepthEvaluator<'a> {
    /// Build the evaluator for `spec` against `ensemble`. The RNG is
    /// consumed only for the RHD direction pool.
    pub fn build(
        ensemble: &'a FunctionalSample,
        spec: &DepthSpec,
        rng: &mut ChaCha12Rng,
    ) -> Result<DepthEvaluator<'a>> {
        spec.validate()?;
        match spec.kind {
            DepthKind::Kd => {
                let h = kd_bandwidth(ensemble, spec.quantile_u)?;
                Ok(DepthEvaluator::Kd { ensemble, h, kernel: spec.kernel })
            }
            DepthKind::Rhd => {
                if ensemble.len() < 2 {
                    return Err(Error::InsufficientSample(format!(
                        "RHD needs at least 2 curves, got {}",
                        ensemble.len()
                    )));
                }
                let dirs = rhd_directions(ensemble, spec.projections, spec.quantile_u, rng)?;
                let pool = dirs.into_iter().map(|(v, _)| v).collect();
                Ok(DepthEvaluator::Rhd(RhdEvaluator::new(ensemble, pool)?))
            }
            DepthKind::Itd => Ok(DepthEvaluator::Pointwise {
                eval: PointwiseEvaluator::new(ensemble),
                infimal: false,
            }),
            DepthKind::Ifd => Ok(DepthEvaluator::Pointwise {
                eval: PointwiseEvaluator::new(ensemble),
                infimal: true,
            }),
        }
    }

    pub fn depth(&self, x: &Curve) -> Result<DepthValue> {
        match self {
            DepthEvaluator::Kd { ensemble, h, kernel } => {
                kd_depth_with_bandwidth(x, ensemble, *h, *kernel)
            }
            DepthEvaluator::Rhd(eval) => eval.depth(x),
            DepthEvaluator::Pointwise { eval, infimal } => eval.depth(x, *infimal),
        }
    }
}

/// Depth of every query against one immutable ensemble, sharing the
/// reference precomputation (and for RHD the direction pool) across queries.
/// Queries are evaluated in parallel; results keep query order.
pub fn depth_batch(
    queries: &[Curve],
    ensemble: &FunctionalSample,
    spec: &DepthSpec,
    rng: &mut ChaCha12Rng,
) -> Result<Vec<DepthValue>> {
    let eval = DepthEvaluator::build(ensemble, spec, rng)?;
    queries.par_iter().map(|x| eval.depth(x)).collect()
}
