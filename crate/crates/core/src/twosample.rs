//! Two-sample functional mean testing.
//!
//! The scaled mean difference `sqrt(n1 n2 / (n1+n2)) (Xbar_1 - Xbar_2)` is
//! calibrated by a residual-type bootstrap: within each group, residuals
//! around the group mean are resampled with replacement and recentered at
//! the pooled mean. The pooled mean cancels in the bootstrap mean
//! difference, so the emitted statistic is computed directly from group
//! residual means. Depth methods rank the observed statistic curve inside
//! the bootstrap ensemble; the classical competitors (L2, sup, integrated
//! and supremum pointwise F) are calibrated by the same resamples.

use rand::Rng;
use rayon::prelude::*;

use crate::depth::DepthSpec;
use crate::error::{Error, Result};
use crate::funcspace::{check_same_grid, mean_of, sample_mean, Curve, FunctionalSample};
use crate::inference::{
    depth_pvalue, scalar_pvalue, scalar_stat, BootstrapEnsemble, ScalarKind, TestReport,
};
use crate::rng::{StreamDomain, Streams};

/// Two groups of functional observations on a common grid.
#[derive(Debug, Clone)]
pub struct TwoSampleData {
    group1: FunctionalSample,
    group2: FunctionalSample,
}

impl TwoSampleData {
    pub fn new(group1: FunctionalSample, group2: FunctionalSample) -> Result<TwoSampleData> {
        check_same_grid(group1.grid(), group2.grid())?;
        if group1.len() < 2 || group2.len() < 2 {
            return Err(Error::InsufficientSample(format!(
                "residual centering needs at least 2 curves per group, got {} and {}",
                group1.len(),
                group2.len()
            )));
        }
        Ok(TwoSampleData { group1, group2 })
    }

    pub fn group1(&self) -> &FunctionalSample {
        &self.group1
    }

    pub fn group2(&self) -> &FunctionalSample {
        &self.group2
    }

    pub fn n1(&self) -> usize {
        self.group1.len()
    }

    pub fn n2(&self) -> usize {
        self.group2.len()
    }

    fn factor(&self) -> f64 {
        let n1 = self.n1() as f64;
        let n2 = self.n2() as f64;
        (n1 * n2 / (n1 + n2)).sqrt()
    }
}

/// Test statistic choices for the two-sample problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TwoSampleMethod {
    Itd,
    Ifd,
    Rhd,
    Kd,
    L2,
    Sup,
    Fint,
    Fmax,
}

impl TwoSampleMethod {
    pub fn name(&self) -> &'static str {
        match self {
            TwoSampleMethod::Itd => "ITD",
            TwoSampleMethod::Ifd => "IFD",
            TwoSampleMethod::Rhd => "RHD",
            TwoSampleMethod::Kd => "KD",
            TwoSampleMethod::L2 => "L2",
            TwoSampleMethod::Sup => "SUP",
            TwoSampleMethod::Fint => "FINT",
            TwoSampleMethod::Fmax => "FMAX",
        }
    }

    pub fn parse(s: &str) -> Result<TwoSampleMethod> {
        match s.to_ascii_uppercase().as_str() {
            "ITD" => Ok(TwoSampleMethod::Itd),
            "IFD" => Ok(TwoSampleMethod::Ifd),
            "RHD" => Ok(TwoSampleMethod::Rhd),
            "KD" => Ok(TwoSampleMethod::Kd),
            "L2" => Ok(TwoSampleMethod::L2),
            "SUP" => Ok(TwoSampleMethod::Sup),
            "FINT" => Ok(TwoSampleMethod::Fint),
            "FMAX" => Ok(TwoSampleMethod::Fmax),
            other => Err(Error::InvalidSpec(format!("unknown two-sample method {other:?}"))),
        }
    }
}

/// Tuning defaults per method: KD with u=0.01, RHD with u=0.1 and 500
/// directions; ITD/IFD need no tuning.
pub fn two_sample_default_spec(method: TwoSampleMethod) -> DepthSpec {
    match method {
        TwoSampleMethod::Kd => DepthSpec::kd(0.01),
        TwoSampleMethod::Rhd => DepthSpec::rhd(0.1, 500),
        TwoSampleMethod::Itd => DepthSpec::itd(),
        TwoSampleMethod::Ifd => DepthSpec::ifd(),
        // scalar methods carry no depth tuning; any valid spec is ignored
        _ => DepthSpec::kd(0.01),
    }
}

/// `sqrt(n1 n2 / (n1+n2)) * (Xbar_1 - Xbar_2)` pointwise.
pub fn two_sample_statistic(d: &TwoSampleData) -> Curve {
    let m1 = sample_mean(&d.group1);
    let m2 = sample_mean(&d.group2);
    m1.sub(&m2).expect("groups share a grid").scale(d.factor())
}

struct TwoSampleBootstrap {
    ensemble: BootstrapEnsemble,
    fint: Option<Vec<f64>>,
    fmax: Option<Vec<f64>>,
}

fn residual_bootstrap_full(
    d: &TwoSampleData,
    b: usize,
    streams: &Streams,
    with_f: bool,
) -> Result<TwoSampleBootstrap> {
    let grid = d.group1.grid().clone();
    let m1 = sample_mean(&d.group1);
    let m2 = sample_mean(&d.group2);
    let res1: Vec<Curve> =
        d.group1.curves().iter().map(|c| c.sub(&m1)).collect::<Result<_>>()?;
    let res2: Vec<Curve> =
        d.group2.curves().iter().map(|c| c.sub(&m2)).collect::<Result<_>>()?;
    let n1 = res1.len();
    let n2 = res2.len();
    let factor = d.factor();
    // pooled mean, used only to assemble bootstrap groups for F statistics
    let pooled = {
        let mut acc = m1.scale(n1 as f64);
        acc.axpy_unchecked(n2 as f64, &m2);
        acc.scale(1.0 / (n1 + n2) as f64)
    };

    let rows: Vec<(Curve, Option<(f64, f64)>)> = (0..b)
        .into_par_iter()
        .map(|rep| {
            let mut rng = streams.stream(StreamDomain::TwoSampleBootstrap, rep as u64);
            let pick1: Vec<usize> = (0..n1).map(|_| rng.gen_range(0..n1)).collect();
            let pick2: Vec<usize> = (0..n2).map(|_| rng.gen_range(0..n2)).collect();

            let eps1: Vec<Curve> = pick1.iter().map(|&i| res1[i].clone()).collect();
            let eps2: Vec<Curve> = pick2.iter().map(|&i| res2[i].clone()).collect();
            let mean1 = mean_of(&eps1)?;
            let mean2 = mean_of(&eps2)?;
            let stat = mean1.sub(&mean2)?.scale(factor);

            let f_summary = if with_f {
                let g1: Vec<Curve> =
                    eps1.iter().map(|e| pooled.add(e)).collect::<Result<_>>()?;
                let g2: Vec<Curve> =
                    eps2.iter().map(|e| pooled.add(e)).collect::<Result<_>>()?;
                let f = pointwise_f_rows(&g1, &g2, &grid)?;
                Some(f_summaries(&f, grid.weights()))
            } else {
                None
            };
            Ok((stat, f_summary))
        })
        .collect::<Result<_>>()?;

    let mut stats = Vec::with_capacity(b);
    let mut fint = with_f.then(|| Vec::with_capacity(b));
    let mut fmax = with_f.then(|| Vec::with_capacity(b));
    for (stat, f) in rows {
        stats.push(stat);
        if let Some((fi, fm)) = f {
            fint.as_mut().expect("with_f").push(fi);
            fmax.as_mut().expect("with_f").push(fm);
        }
    }
    Ok(TwoSampleBootstrap {
        ensemble: BootstrapEnsemble::new(
            FunctionalSample::new(stats)?,
            format!("seed {} / two-sample bootstrap streams 0..{}", streams.seed(), b),
        ),
        fint,
        fmax,
    })
}

/// Residual-type bootstrap ensemble of two-sample statistics. Replicate
/// `rep` draws from its own counter-derived stream, so the ensemble does
/// not depend on scheduling.
pub fn residual_bootstrap_two(
    d: &TwoSampleData,
    b: usize,
    streams: &Streams,
) -> Result<BootstrapEnsemble> {
    Ok(residual_bootstrap_full(d, b, streams, false)?.ensemble)
}

fn f_summaries(f: &[f64], weights: &[f64]) -> (f64, f64) {
    let fint = f.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>();
    let fmax = f.iter().fold(0.0f64, |m, &v| m.max(v));
    (fint, fmax)
}

fn pointwise_f_rows(g1: &[Curve], g2: &[Curve], grid: &crate::funcspace::Grid) -> Result<Vec<f64>> {
    let p = grid.len();
    let n1 = g1.len() as f64;
    let n2 = g2.len() as f64;
    let n = n1 + n2;
    let mut f = Vec::with_capacity(p);
    let mut degenerate = 0usize;
    for k in 0..p {
        let s1: f64 = g1.iter().map(|c| c.values()[k]).sum();
        let s2: f64 = g2.iter().map(|c| c.values()[k]).sum();
        let b1 = s1 / n1;
        let b2 = s2 / n2;
        let pooled = (s1 + s2) / n;
        let between = (n1 * (b1 - pooled).powi(2) + n2 * (b2 - pooled).powi(2)) / 1.0;
        let within: f64 = g1.iter().map(|c| (c.values()[k] - b1).powi(2)).sum::<f64>()
            + g2.iter().map(|c| (c.values()[k] - b2).powi(2)).sum::<f64>();
        let denom = within / (n - 2.0);
        if denom == 0.0 {
            degenerate += 1;
            if between == 0.0 {
                f.push(0.0);
            } else {
                return Err(Error::DegenerateData(format!(
                    "pointwise F infinite at grid index {k}"
                )));
            }
        } else {
            f.push(between / denom);
        }
    }
    if degenerate == p {
        return Err(Error::DegenerateData("all grid points degenerate".into()));
    }
    Ok(f)
}

/// Pointwise one-way ANOVA F curve for the two groups (K = 2).
pub fn pointwise_f(d: &TwoSampleData) -> Result<Curve> {
    let grid = d.group1.grid().clone();
    let f = pointwise_f_rows(d.group1.curves(), d.group2.curves(), &grid)?;
    Curve::new(grid, f)
}

/// Run one two-sample test. Depth methods rank the observed statistic in
/// the bootstrap ensemble; L2/SUP/FINT/FMAX calibrate scalar summaries on
/// the same resamples. `spec` is the depth tuning and is ignored by the
/// scalar methods.
pub fn two_sample_test(
    d: &TwoSampleData,
    method: TwoSampleMethod,
    b: usize,
    spec: &DepthSpec,
    seed: u64,
) -> Result<TestReport> {
    let mut reports = two_sample_tests(d, &[(method, *spec)], b, seed)?;
    Ok(reports.remove(0))
}

/// Run several two-sample tests on one shared bootstrap ensemble. Results
/// are identical to running each method alone with the same seed.
pub fn two_sample_tests(
    d: &TwoSampleData,
    methods: &[(TwoSampleMethod, DepthSpec)],
    b: usize,
    seed: u64,
) -> Result<Vec<TestReport>> {
    let streams = Streams::new(seed);
    let with_f = methods
        .iter()
        .any(|(m, _)| matches!(m, TwoSampleMethod::Fint | TwoSampleMethod::Fmax));
    let boot = residual_bootstrap_full(d, b, &streams, with_f)?;
    let observed = two_sample_statistic(d);

    let mut reports = Vec::with_capacity(methods.len());
    for (method, spec) in methods {
        let report = match method {
            TwoSampleMethod::Itd
            | TwoSampleMethod::Ifd
            | TwoSampleMethod::Rhd
            | TwoSampleMethod::Kd => {
                let mut rng = streams.stream(StreamDomain::DirectionPool, 0);
                let mut r = depth_pvalue(&observed, &boot.ensemble, spec, &mut rng, seed)?;
                r.method = method.name().to_string();
                r
            }
            TwoSampleMethod::L2 | TwoSampleMethod::Sup => {
                let kind = if *method == TwoSampleMethod::L2 {
                    ScalarKind::L2
                } else {
                    ScalarKind::Sup
                };
                let values: Vec<f64> = boot
                    .ensemble
                    .statistics
                    .curves()
                    .iter()
                    .map(|c| scalar_stat(c, kind))
                    .collect();
                scalar_pvalue(scalar_stat(&observed, kind), &values, method.name(), seed)?
            }
            TwoSampleMethod::Fint | TwoSampleMethod::Fmax => {
                let f_obs = pointwise_f(d)?;
                let (fint_obs, fmax_obs) = f_summaries(f_obs.values(), d.group1.grid().weights());
                let (obs, values) = if *method == TwoSampleMethod::Fint {
                    (fint_obs, boot.fint.as_ref().expect("F summaries computed"))
                } else {
                    (fmax_obs, boot.fmax.as_ref().expect("F summaries computed"))
                };
                scalar_pvalue(obs, values, method.name(), seed)?
            }
        };
        reports.push(report);
    }
    Ok(reports)
}
