//! Mean-response inference for function-on-function regression.
//!
//! The slope is estimated by functional principal component regression:
//! the cross-covariance composed with the spectrally truncated inverse of
//! the regressor covariance. The statistic at a new regressor `x0` is the
//! predicted centered response scaled by `sqrt(n / tau)`, where `tau` is
//! the truncated quadratic form of `x0`'s centered FPC coordinates. A
//! residual bootstrap with three truncation levels calibrates it: `J_res`
//! for the residuals (chosen by cross-validation), `J_cen` for the
//! recentering slope that plays the role of the truth in the bootstrap
//! world, and `J >= J_cen` for the estimator (chosen by fraction of
//! variance explained). Regressors stay fixed; only responses are rebuilt.

use rand::Rng;
use rayon::prelude::*;

use crate::depth::DepthSpec;
use crate::error::{Error, Result};
use crate::funcspace::{
    check_same_grid, covariance_eig, inner_product, sample_mean, Curve, FunctionalSample,
};
use crate::inference::{
    depth_pvalue, scalar_pvalue, scalar_stat, BootstrapEnsemble, ScalarKind, TestReport,
    Truncation,
};
use crate::rng::{StreamDomain, Streams};

/// Eigenvalues at or below this threshold do not count toward the numerical
/// rank available for truncation.
const RANK_EPS: f64 = 1e-12;

/// Scaling terms below this are degenerate: the statistic is undefined at
/// regressors indistinguishable from the regressor mean.
const TAU_EPS: f64 = 1e-12;

/// Functional response-regressor pairs plus the new regressor under test.
#[derive(Debug, Clone)]
pub struct FoFRData {
    x: FunctionalSample,
    y: FunctionalSample,
    x0: Curve,
}

impl FoFRData {
    pub fn new(x: FunctionalSample, y: FunctionalSample, x0: Curve) -> Result<FoFRData> {
        check_same_grid(x.grid(), y.grid())?;
        check_same_grid(x.grid(), x0.grid())?;
        if x.len() != y.len() {
            return Err(Error::InsufficientSample(format!(
                "{} regressors for {} responses",
                x.len(),
                y.len()
            )));
        }
        if x.len() < 10 {
            return Err(Error::InsufficientSample(format!(
                "FoFR inference needs at least 10 pairs, got {}",
                x.len()
            )));
        }
        Ok(FoFRData { x, y, x0 })
    }

    pub fn regressors(&self) -> &FunctionalSample {
        &self.x
    }

    pub fn responses(&self) -> &FunctionalSample {
        &self.y
    }

    pub fn new_regressor(&self) -> &Curve {
        &self.x0
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// FPCR fit: eigenpairs of the regressor covariance, cross-covariance
/// coordinate curves, and the three truncation levels.
#[derive(Debug, Clone)]
pub struct FpcrFit {
    j: usize,
    j_res: usize,
    j_cen: usize,
    gamma: Vec<f64>,
    phi: Vec<Curve>,
    /// `Delta_hat phi_j = n^{-1} sum_i <X_i - Xbar, phi_j> (Y_i - Ybar)`.
    delta_phi: Vec<Curve>,
    xbar: Curve,
    ybar: Curve,
    /// Centered regressor scores `<X_i - Xbar, phi_j>`, j < J.
    x_scores: Vec<Vec<f64>>,
}

impl FpcrFit {
    pub fn j(&self) -> usize {
        self.j
    }

    pub fn j_res(&self) -> usize {
        self.j_res
    }

    pub fn j_cen(&self) -> usize {
        self.j_cen
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn xbar(&self) -> &Curve {
        &self.xbar
    }

    pub fn ybar(&self) -> &Curve {
        &self.ybar
    }

    /// Bootstrap truncations; both must stay within the estimator level J.
    pub fn with_truncations(mut self, j_res: usize, j_cen: usize) -> Result<FpcrFit> {
        if j_res == 0 || j_cen == 0 || j_res > self.j || j_cen > self.j {
            return Err(Error::Rank(format!(
                "bootstrap truncations ({j_res}, {j_cen}) must lie in 1..={}",
                self.j
            )));
        }
        self.j_res = j_res;
        self.j_cen = j_cen;
        Ok(self)
    }

    fn centered_scores(&self, x: &Curve) -> Result<Vec<f64>> {
        let centered = x.sub(&self.xbar)?;
        (0..self.j).map(|j| inner_product(&centered, &self.phi[j])).collect()
    }

    /// `B_hat_{j_t} (x - Xbar)` for a truncation `j_t <= J`.
    pub fn predict_truncated(&self, x: &Curve, j_t: usize) -> Result<Curve> {
        debug_assert!(j_t <= self.j);
        let scores = self.centered_scores(x)?;
        Ok(self.predict_from_scores(&scores, j_t))
    }

    fn predict_from_scores(&self, scores: &[f64], j_t: usize) -> Curve {
        let mut out = Curve::zeros(self.ybar.grid().clone());
        for j in 0..j_t {
            out.axpy_unchecked(scores[j] / self.gamma[j], &self.delta_phi[j]);
        }
        out
    }

    /// FPCR prediction of the centered response at `x`.
    pub fn predict(&self, x: &Curve) -> Result<Curve> {
        self.predict_truncated(x, self.j)
    }
}

/// Fit FPCR at truncation level `J`; the bootstrap truncations default to
/// the same level.
pub fn fpcr_fit(x: &FunctionalSample, y: &FunctionalSample, j: usize) -> Result<FpcrFit> {
    check_same_grid(x.grid(), y.grid())?;
    if x.len() != y.len() {
        return Err(Error::InsufficientSample(format!(
            "{} regressors for {} responses",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    let xbar = sample_mean(x);
    let ybar = sample_mean(y);
    let cov = covariance_eig(x, &xbar)?;
    let rank = cov.eigenvalues().iter().filter(|&&g| g > RANK_EPS).count();
    if j == 0 || j > rank {
        return Err(Error::Rank(format!(
            "truncation {j} exceeds the numerical rank {rank}"
        )));
    }

    let mut x_scores = vec![vec![0.0; j]; n];
    for (i, xi) in x.curves().iter().enumerate() {
        let centered = xi.sub(&xbar)?;
        for (jj, phi) in cov.eigenfunctions()[..j].iter().enumerate() {
            x_scores[i][jj] = inner_product(&centered, phi)?;
        }
    }

    let mut delta_phi = Vec::with_capacity(j);
    for jj in 0..j {
        let mut acc = Curve::zeros(y.grid().clone());
        for (i, yi) in y.curves().iter().enumerate() {
            let centered = yi.sub(&ybar)?;
            acc.axpy_unchecked(x_scores[i][jj], &centered);
        }
        delta_phi.push(acc.scale(1.0 / n as f64));
    }

    Ok(FpcrFit {
        j,
        j_res: j,
        j_cen: j,
        gamma: cov.eigenvalues().to_vec(),
        phi: cov.eigenfunctions().to_vec(),
        delta_phi,
        xbar,
        ybar,
        x_scores,
    })
}

/// Scaling term `tau_J(x) = sum_{j<=J} gamma_j^{-1} <x - Xbar, phi_j>^2`.
pub fn tau_scale(fit: &FpcrFit, x: &Curve) -> Result<f64> {
    let scores = fit.centered_scores(x)?;
    let tau: f64 = scores
        .iter()
        .zip(&fit.gamma)
        .take(fit.j)
        .map(|(s, g)| s * s / g)
        .sum();
    if tau < TAU_EPS {
        return Err(Error::DegenerateScaling(format!(
            "tau = {tau:.3e}: statistic undefined at regressors near the mean"
        )));
    }
    Ok(tau)
}

/// Observed statistic `sqrt(n / tau_J(x0)) * B_hat_J (x0 - Xbar)`.
pub fn fofr_statistic(d: &FoFRData, fit: &FpcrFit) -> Result<Curve> {
    let tau = tau_scale(fit, &d.x0)?;
    let pred = fit.predict(&d.x0)?;
    Ok(pred.scale((d.len() as f64 / tau).sqrt()))
}

/// Residuals at truncation `J_res`: `Y_i - Ybar - B_hat_Jres (X_i - Xbar)`.
pub fn fofr_residuals(d: &FoFRData, fit: &FpcrFit) -> Result<Vec<Curve>> {
    d.y
        .curves()
        .iter()
        .enumerate()
        .map(|(i, yi)| {
            let fitted = fit.predict_from_scores(&fit.x_scores[i], fit.j_res);
            yi.sub(&fit.ybar)?.sub(&fitted)
        })
        .collect()
}

/// Residual bootstrap of the FoFR statistic. Per replicate, residuals are
/// redrawn with replacement, responses are rebuilt around the `J_cen`
/// recentering slope, the cross-covariance is refit against the original
/// regressors, and the recentered statistic is emitted.
pub fn fofr_bootstrap(
    d: &FoFRData,
    fit: &FpcrFit,
    b: usize,
    streams: &Streams,
) -> Result<BootstrapEnsemble> {
    let residuals = fofr_residuals(d, fit)?;
    fofr_bootstrap_with_residuals(d, fit, &residuals, b, streams)
}

/// Bootstrap with explicitly supplied residual curves (test hook for the
/// zero-residual identity).
pub fn fofr_bootstrap_with_residuals(
    d: &FoFRData,
    fit: &FpcrFit,
    residuals: &[Curve],
    b: usize,
    streams: &Streams,
) -> Result<BootstrapEnsemble> {
    let n = d.len();
    if residuals.len() != n {
        return Err(Error::InsufficientSample(format!(
            "{} residuals for {} pairs",
            residuals.len(),
            n
        )));
    }
    let grid = d.y.grid().clone();
    let p = grid.len();
    let tau = tau_scale(fit, &d.x0)?;
    let scale = (n as f64 / tau).sqrt();
    let x0_scores = fit.centered_scores(&d.x0)?;
    let base_x0 = fit.predict_from_scores(&x0_scores, fit.j_cen);

    // recentered fitted responses, fixed across replicates
    let base: Vec<Curve> = (0..n)
        .map(|i| fit.predict_from_scores(&fit.x_scores[i], fit.j_cen))
        .collect();

    let stats: Vec<Curve> = (0..b)
        .into_par_iter()
        .map(|rep| {
            let mut rng = streams.stream(StreamDomain::FofrBootstrap, rep as u64);
            let picks: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();

            // centered bootstrap responses Y*_i - Ybar* (the shared Ybar
            // cancels; the mean of fitted-plus-drawn-residual does not)
            let mut mean = vec![0.0; p];
            let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
            for (i, &pick) in picks.iter().enumerate() {
                let row: Vec<f64> = base[i]
                    .values()
                    .iter()
                    .zip(residuals[pick].values())
                    .map(|(bv, rv)| bv + rv)
                    .collect();
                for (m, v) in mean.iter_mut().zip(&row) {
                    *m += v;
                }
                rows.push(row);
            }
            for m in &mut mean {
                *m /= n as f64;
            }

            // Delta*_phi_j = n^{-1} sum_i s_ij (Y*_i - Ybar*)
            let mut out = vec![0.0; p];
            for j in 0..fit.j {
                let mut dj = vec![0.0; p];
                for (i, row) in rows.iter().enumerate() {
                    let s = fit.x_scores[i][j];
                    for (acc, (rv, mv)) in dj.iter_mut().zip(row.iter().zip(&mean)) {
                        *acc += s * (rv - mv);
                    }
                }
                let coef = x0_scores[j] / (fit.gamma[j] * n as f64);
                for (o, v) in out.iter_mut().zip(&dj) {
                    *o += coef * v;
                }
            }
            for (o, bv) in out.iter_mut().zip(base_x0.values()) {
                *o = scale * (*o - bv);
            }
            Curve::new(grid.clone(), out)
        })
        .collect::<Result<_>>()?;

    Ok(BootstrapEnsemble::new(
        FunctionalSample::new(stats)?,
        format!("seed {} / fofr bootstrap streams 0..{}", streams.seed(), b),
    ))
}

/// Cross-validation folds: a seeded shuffle split into contiguous
/// near-equal blocks (the first `n mod g` folds take the extra index).
pub fn cv_folds(n: usize, g: usize, streams: &Streams) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = streams.stream(StreamDomain::CvShuffle, 0);
    // Fisher-Yates
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let batch = n / g;
    let extra = n % g;
    let mut folds = Vec::with_capacity(g);
    let mut start = 0;
    for f in 0..g {
        let size = batch + usize::from(f < extra);
        folds.push(order[start..start + size].to_vec());
        start += size;
    }
    folds
}

/// Select the residual truncation by `g`-fold cross-validated prediction
/// error. Candidates exceeding the training rank in any fold are skipped;
/// ties resolve to the smallest candidate.
pub fn select_j_res_cv(
    x: &FunctionalSample,
    y: &FunctionalSample,
    candidates: &[usize],
    g: usize,
    streams: &Streams,
) -> Result<usize> {
    let n = x.len();
    if g < 2 || g > n {
        return Err(Error::Selection(format!(
            "need 2 <= folds <= n, got {g} folds for n = {n}"
        )));
    }
    let mut cands: Vec<usize> = candidates.iter().copied().filter(|&c| c > 0).collect();
    cands.sort_unstable();
    cands.dedup();
    if cands.is_empty() {
        return Err(Error::Selection("no candidate truncation levels".into()));
    }
    let max_cand = *cands.last().expect("nonempty");

    let folds = cv_folds(n, g, streams);
    let mut totals = vec![0.0f64; cands.len()];
    let mut valid = vec![true; cands.len()];

    for fold in &folds {
        let in_fold = {
            let mut mask = vec![false; n];
            for &i in fold {
                mask[i] = true;
            }
            mask
        };
        let train_idx: Vec<usize> = (0..n).filter(|i| !in_fold[*i]).collect();
        let x_tr = FunctionalSample::new(
            train_idx.iter().map(|&i| x.curves()[i].clone()).collect(),
        )?;
        let y_tr = FunctionalSample::new(
            train_idx.iter().map(|&i| y.curves()[i].clone()).collect(),
        )?;
        let xbar_tr = sample_mean(&x_tr);
        let ybar_tr = sample_mean(&y_tr);
        let cov = covariance_eig(&x_tr, &xbar_tr)?;
        let rank = cov.eigenvalues().iter().filter(|&&gm| gm > RANK_EPS).count();
        let j_max = max_cand.min(rank);
        for (ci, &c) in cands.iter().enumerate() {
            if c > rank {
                valid[ci] = false;
            }
        }

        // training cross-covariance coordinates up to j_max
        let n_tr = train_idx.len() as f64;
        let mut delta_tr: Vec<Vec<f64>> = vec![vec![0.0; x.grid().len()]; j_max];
        for &i in &train_idx {
            let xc = x.curves()[i].sub(&xbar_tr)?;
            let yc = y.curves()[i].sub(&ybar_tr)?;
            for (jj, phi) in cov.eigenfunctions()[..j_max].iter().enumerate() {
                let s = inner_product(&xc, phi)?;
                for (acc, yv) in delta_tr[jj].iter_mut().zip(yc.values()) {
                    *acc += s * yv;
                }
            }
        }
        for dj in &mut delta_tr {
            for v in dj.iter_mut() {
                *v /= n_tr;
            }
        }

        // incremental prediction error over truncation levels
        let m = fold.len() as f64;
        let w = x.grid().weights();
        for &i in fold {
            let xc = x.curves()[i].sub(&xbar_tr)?;
            let mut resid: Vec<f64> = y.curves()[i]
                .values()
                .iter()
                .zip(ybar_tr.values())
                .map(|(a, b)| a - b)
                .collect();
            let mut next = 0usize;
            while next < cands.len() && cands[next] == 0 {
                next += 1;
            }
            for jj in 0..j_max {
                let coef =
                    inner_product(&xc, &cov.eigenfunctions()[jj])? / cov.eigenvalues()[jj];
                for (r, dv) in resid.iter_mut().zip(&delta_tr[jj]) {
                    *r -= coef * dv;
                }
                while next < cands.len() && cands[next] == jj + 1 {
                    if valid[next] {
                        let sq: f64 = resid.iter().zip(w).map(|(r, wk)| wk * r * r).sum();
                        totals[next] += sq / m;
                    }
                    next += 1;
                }
            }
        }
    }

    let g_f = folds.len() as f64;
    let mut best: Option<(usize, f64)> = None;
    for (ci, &c) in cands.iter().enumerate() {
        if !valid[ci] {
            continue;
        }
        let avg = totals[ci] / g_f;
        match best {
            None => best = Some((c, avg)),
            Some((_, b_avg)) if avg < b_avg => best = Some((c, avg)),
            _ => {}
        }
    }
    best.map(|(c, _)| c)
        .ok_or_else(|| Error::Selection("every candidate exceeds the training rank".into()))
}

/// FVE selection outcome; `saturated` flags that no truncation reached the
/// threshold and the full positive rank was returned instead.
#[derive(Debug, Clone, Copy)]
pub struct FveSelection {
    pub j: usize,
    pub saturated: bool,
}

/// Smallest `J >= j_cen` whose cumulative fraction of variance explained
/// reaches `rho`.
pub fn select_j_fve(gamma: &[f64], j_cen: usize, rho: f64) -> Result<FveSelection> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Selection(format!(
            "FVE threshold must lie in (0,1), got {rho}"
        )));
    }
    let positive_rank = gamma.iter().filter(|&&g| g > 0.0).count();
    if positive_rank == 0 {
        return Err(Error::Selection("no positive eigenvalues".into()));
    }
    let total: f64 = gamma.iter().filter(|&&g| g > 0.0).sum();
    let mut cum = 0.0;
    for (idx, &g) in gamma.iter().enumerate() {
        cum += g.max(0.0);
        let j = idx + 1;
        if j >= j_cen.max(1) && cum / total >= rho {
            return Ok(FveSelection { j, saturated: false });
        }
    }
    Ok(FveSelection { j: positive_rank.max(j_cen), saturated: true })
}

/// Test statistic choices for FoFR mean-response inference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FofrMethod {
    Rhd,
    Kd,
    L2,
    Sup,
}

impl FofrMethod {
    pub fn name(&self) -> &'static str {
        match self {
            FofrMethod::Rhd => "RHD",
            FofrMethod::Kd => "KD",
            FofrMethod::L2 => "L2",
            FofrMethod::Sup => "SUP",
        }
    }

    pub fn parse(s: &str) -> Result<FofrMethod> {
        match s.to_ascii_uppercase().as_str() {
            "RHD" => Ok(FofrMethod::Rhd),
            "KD" => Ok(FofrMethod::Kd),
            "L2" => Ok(FofrMethod::L2),
            "SUP" => Ok(FofrMethod::Sup),
            other => Err(Error::InvalidSpec(format!("unknown FoFR method {other:?}"))),
        }
    }
}

/// Tuning defaults per method: KD with u=0.01, RHD with u=0.001 and 500
/// directions.
pub fn fofr_default_spec(method: FofrMethod) -> DepthSpec {
    match method {
        FofrMethod::Kd => DepthSpec::kd(0.01),
        FofrMethod::Rhd => DepthSpec::rhd(0.001, 500),
        _ => DepthSpec::kd(0.01),
    }
}

/// Truncation pipeline shared by all methods: `J_res` by 5-fold CV over
/// 1..=20, `J_cen = J_res`, `J` by FVE at threshold 0.85 floored at `J_cen`
/// and capped at the numerical rank.
pub fn select_truncations(d: &FoFRData, streams: &Streams) -> Result<Truncation> {
    let candidates: Vec<usize> = (1..=20).collect();
    let j_res = select_j_res_cv(&d.x, &d.y, &candidates, 5, streams)?;
    let j_cen = j_res;
    let xbar = sample_mean(&d.x);
    let cov = covariance_eig(&d.x, &xbar)?;
    let fve = select_j_fve(cov.eigenvalues(), j_cen, 0.85)?;
    let rank = cov.eigenvalues().iter().filter(|&&g| g > RANK_EPS).count();
    let j = fve.j.min(rank).max(j_cen);
    Ok(Truncation { j, j_res, j_cen })
}

/// Run one FoFR mean-response test with the data-driven truncation
/// pipeline. `spec` is the depth tuning and is ignored by L2/SUP.
pub fn fofr_test(
    d: &FoFRData,
    method: FofrMethod,
    b: usize,
    spec: &DepthSpec,
    seed: u64,
) -> Result<TestReport> {
    let mut reports = fofr_tests(d, &[(method, *spec)], b, seed)?;
    Ok(reports.remove(0))
}

/// Run several FoFR tests on one shared truncation selection and bootstrap
/// ensemble. Results are identical to running each method alone with the
/// same seed.
pub fn fofr_tests(
    d: &FoFRData,
    methods: &[(FofrMethod, DepthSpec)],
    b: usize,
    seed: u64,
) -> Result<Vec<TestReport>> {
    let streams = Streams::new(seed);
    let trunc = select_truncations(d, &streams)?;
    let fit = fpcr_fit(&d.x, &d.y, trunc.j)?.with_truncations(trunc.j_res, trunc.j_cen)?;
    let observed = fofr_statistic(d, &fit)?;
    let ens = fofr_bootstrap(d, &fit, b, &streams)?;

    let mut reports = Vec::with_capacity(methods.len());
    for (method, spec) in methods {
        let mut report = match method {
            FofrMethod::Rhd | FofrMethod::Kd => {
                let mut rng = streams.stream(StreamDomain::DirectionPool, 0);
                let mut r = depth_pvalue(&observed, &ens, spec, &mut rng, seed)?;
                r.method = method.name().to_string();
                r
            }
            FofrMethod::L2 | FofrMethod::Sup => {
                let kind =
                    if *method == FofrMethod::L2 { ScalarKind::L2 } else { ScalarKind::Sup };
                let values: Vec<f64> = ens
                    .statistics
                    .curves()
                    .iter()
                    .map(|c| scalar_stat(c, kind))
                    .collect();
                scalar_pvalue(scalar_stat(&observed, kind), &values, method.name(), seed)?
            }
        };
        report.truncation = Some(trunc);
        reports.push(report);
    }
    Ok(reports)
}
