//! Bootstrap depth distributions and p-values.
//!
//! Given an observed statistic curve and an ensemble of bootstrap statistic
//! curves, each bootstrap statistic is ranked by its depth with respect to
//! the whole ensemble (leave-in), while the observed statistic is ranked
//! against the ensemble without being part of it. The depth p-value is the
//! fraction of bootstrap depths at or below the observed depth; small depth
//! means an outlying statistic and hence evidence against the null.
//!
//! Scalar summary statistics (L2 and sup norms, F summaries) are calibrated
//! against the same bootstrap ensembles with the opposite tail: large
//! observed values count as evidence against the null.

use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::depth::{DepthEvaluator, DepthSpec};
use crate::error::{Error, Result};
use crate::funcspace::{norm, Curve, FunctionalSample};

/// An ensemble of bootstrap statistic curves together with a description of
/// the RNG streams that produced it.
#[derive(Debug, Clone)]
pub struct BootstrapEnsemble {
    pub statistics: FunctionalSample,
    pub seed_lineage: String,
}

impl BootstrapEnsemble {
    pub fn new(statistics: FunctionalSample, seed_lineage: impl Into<String>) -> Self {
        BootstrapEnsemble { statistics, seed_lineage: seed_lineage.into() }
    }

    pub fn len(&self) -> usize {
        self.statistics.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Truncation levels selected by the FoFR pipeline, echoed in reports.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Truncation {
    pub j: usize,
    pub j_res: usize,
    pub j_cen: usize,
}

/// Outcome of one calibrated test, carrying everything needed to reproduce
/// it together with the data.
#[derive(Debug, Clone, Serialize)]
pub struct TestReport {
    pub method: String,
    pub observed_depth: Option<f64>,
    pub observed_tiebreak: Option<f64>,
    pub observed_scalar: Option<f64>,
    pub pvalue: f64,
    pub b: usize,
    pub depth_spec: Option<DepthSpec>,
    pub scalar_kind: Option<String>,
    /// Whether the (count+1)/(B+1) smoothing was applied.
    pub smoothed: bool,
    pub seed: u64,
    pub truncation: Option<Truncation>,
}

/// P-value counting policy. The plain Monte Carlo fraction is the default;
/// the add-one variant smooths away exact zeros.
#[derive(Debug, Clone, Copy, Default)]
pub struct PvaluePolicy {
    pub add_one: bool,
}

impl PvaluePolicy {
    fn depth_pvalue(&self, count: usize, b: usize) -> f64 {
        if self.add_one {
            (count + 1) as f64 / (b + 1) as f64
        } else {
            count as f64 / b as f64
        }
    }
}

/// Depth of every bootstrap statistic with respect to the ensemble of all
/// bootstrap statistics (leave-in).
pub fn depth_distribution(
    ens: &BootstrapEnsemble,
    spec: &DepthSpec,
    rng: &mut ChaCha12Rng,
) -> Result<Vec<f64>> {
    let eval = DepthEvaluator::build(&ens.statistics, spec, rng)?;
    ens.statistics
        .curves()
        .par_iter()
        .map(|c| eval.depth(c).map(|d| d.value))
        .collect()
}

/// Fraction of bootstrap depths at or below the observed depth, with ties
/// counted by `<=` exactly as the indicator in the Monte Carlo CDF.
pub fn pvalue_from_depths(observed: f64, depths: &[f64]) -> f64 {
    let count = depths.iter().filter(|&&d| d <= observed).count();
    count as f64 / depths.len() as f64
}

/// Depth p-value of an observed statistic against a bootstrap ensemble.
///
/// The observed statistic is not appended to the reference ensemble: the
/// reference law is the empirical distribution of the resampled statistics
/// alone. One RHD direction pool is drawn here and shared across the
/// observed and all bootstrap evaluations so ranks are comparable.
pub fn depth_pvalue(
    observed: &Curve,
    ens: &BootstrapEnsemble,
    spec: &DepthSpec,
    rng: &mut ChaCha12Rng,
    seed: u64,
) -> Result<TestReport> {
    depth_pvalue_with_policy(observed, ens, spec, rng, seed, PvaluePolicy::default())
}

pub fn depth_pvalue_with_policy(
    observed: &Curve,
    ens: &BootstrapEnsemble,
    spec: &DepthSpec,
    rng: &mut ChaCha12Rng,
    seed: u64,
    policy: PvaluePolicy,
) -> Result<TestReport> {
    let eval = DepthEvaluator::build(&ens.statistics, spec, rng)?;
    let obs = eval.depth(observed)?;
    let depths: Vec<f64> = ens
        .statistics
        .curves()
        .par_iter()
        .map(|c| eval.depth(c).map(|d| d.value))
        .collect::<Result<_>>()?;
    let count = depths.iter().filter(|&&d| d <= obs.value).count();
    let b = depths.len();
    Ok(TestReport {
        method: spec.kind.name().to_string(),
        observed_depth: Some(obs.value),
        observed_tiebreak: obs.tiebreak_key,
        observed_scalar: None,
        pvalue: policy.depth_pvalue(count, b),
        b,
        depth_spec: Some(*spec),
        scalar_kind: None,
        smoothed: policy.add_one,
        seed,
        truncation: None,
    })
}

/// Scalar summary of a statistic curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ScalarKind {
    /// Weighted L2 norm of the curve.
    L2,
    /// Supremum of absolute values over grid points.
    Sup,
}

impl ScalarKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScalarKind::L2 => "L2",
            ScalarKind::Sup => "SUP",
        }
    }
}

pub fn scalar_stat(x: &Curve, kind: ScalarKind) -> f64 {
    match kind {
        ScalarKind::L2 => norm(x),
        ScalarKind::Sup => x.values().iter().fold(0.0f64, |m, v| m.max(v.abs())),
    }
}

/// Bootstrap p-value for a scalar statistic where larger observed values
/// count against the null: the fraction of bootstrap values at or above the
/// observed one.
pub fn scalar_pvalue(
    observed: f64,
    bootstrap_values: &[f64],
    label: &str,
    seed: u64,
) -> Result<TestReport> {
    if bootstrap_values.is_empty() {
        return Err(Error::InsufficientSample("no bootstrap values".into()));
    }
    let b = bootstrap_values.len();
    let count = bootstrap_values.iter().filter(|&&s| s >= observed).count();
    Ok(TestReport {
        method: label.to_string(),
        observed_depth: None,
        observed_tiebreak: None,
        observed_scalar: Some(observed),
        pvalue: count as f64 / b as f64,
        b,
        depth_spec: None,
        scalar_kind: Some(label.to_string()),
        smoothed: false,
        seed,
        truncation: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::depth::DepthKind;
    use crate::funcspace::Grid;
    use crate::rng::{StreamDomain, Streams};
    use approx::assert_abs_diff_eq;

    fn rng() -> ChaCha12Rng {
        Streams::new(7).stream(StreamDomain::Generic, 0)
    }

    fn constants(vals: &[f64]) -> BootstrapEnsemble {
        let g = Grid::equispaced(10).unwrap();
        BootstrapEnsemble::new(
            FunctionalSample::new(
                vals.iter().map(|&v| Curve::constant(g.clone(), v).unwrap()).collect(),
            )
            .unwrap(),
            "test",
        )
    }

    #[test]
    fn identical_curves_share_kd_depth() {
        let ens = constants(&[0.4, 0.4, 0.4]);
        let depths = depth_distribution(&ens, &DepthSpec::kd(0.5), &mut rng()).unwrap();
        assert_eq!(depths.len(), 3);
        assert!(depths.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn two_constants_have_half_itd_depth() {
        let ens = constants(&[0.0, 1.0]);
        let depths = depth_distribution(&ens, &DepthSpec::itd(), &mut rng()).unwrap();
        assert_abs_diff_eq!(depths[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(depths[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn distribution_has_ensemble_cardinality() {
        let ens = constants(&[0.0, 0.3, 0.9, 1.4, 2.0]);
        for spec in [DepthSpec::kd(0.5), DepthSpec::itd(), DepthSpec::ifd()] {
            let depths = depth_distribution(&ens, &spec, &mut rng()).unwrap();
            assert_eq!(depths.len(), 5);
        }
    }

    #[test]
    fn counting_rule_examples() {
        assert_eq!(pvalue_from_depths(0.01, &[0.05, 0.15, 0.25, 0.35]), 0.0);
        assert_eq!(pvalue_from_depths(0.10, &[0.05, 0.15, 0.25, 0.35]), 0.25);
        assert_eq!(pvalue_from_depths(0.1, &[0.1, 0.1, 0.2, 0.3]), 0.5);
    }

    #[test]
    fn pvalue_is_rank_statistic() {
        let depths = [0.11, 0.52, 0.03, 0.74, 0.40];
        let observed = 0.40;
        let base = pvalue_from_depths(observed, &depths);
        let mono = |d: f64| d.powi(3) + 2.0 * d;
        let mapped: Vec<f64> = depths.iter().map(|&d| mono(d)).collect();
        assert_eq!(base, pvalue_from_depths(mono(observed), &mapped));
    }

    #[test]
    fn pvalue_lies_on_the_b_grid() {
        let ens = constants(&[0.0, 0.2, 0.5, 0.9, 1.5, 2.2]);
        let g = Grid::equispaced(10).unwrap();
        let observed = Curve::constant(g, 0.6).unwrap();
        let report =
            depth_pvalue(&observed, &ens, &DepthSpec::kd(0.5), &mut rng(), 7).unwrap();
        let scaled = report.pvalue * ens.len() as f64;
        assert_abs_diff_eq!(scaled, scaled.round(), epsilon = 1e-12);
    }

    #[test]
    fn outlying_observed_statistic_gets_zero_pvalue() {
        let ens = constants(&[0.0, 0.1, 0.2, 0.3]);
        let g = Grid::equispaced(10).unwrap();
        let observed = Curve::constant(g, 50.0).unwrap();
        let report =
            depth_pvalue(&observed, &ens, &DepthSpec::kd(0.5), &mut rng(), 7).unwrap();
        assert_eq!(report.pvalue, 0.0);
        assert_eq!(report.b, 4);
        assert_eq!(report.method, "KD");
    }

    #[test]
    fn add_one_smoothing_shifts_the_grid() {
        let ens = constants(&[0.0, 0.1, 0.2, 0.3]);
        let g = Grid::equispaced(10).unwrap();
        let observed = Curve::constant(g, 50.0).unwrap();
        let report = depth_pvalue_with_policy(
            &observed,
            &ens,
            &DepthSpec::kd(0.5),
            &mut rng(),
            7,
            PvaluePolicy { add_one: true },
        )
        .unwrap();
        assert_abs_diff_eq!(report.pvalue, 0.2, epsilon = 1e-15);
        assert!(report.smoothed);
    }

    #[test]
    fn ensemble_order_does_not_change_pvalue() {
        let g = Grid::equispaced(12).unwrap();
        let vals = [0.0, 0.3, -0.2, 0.8, 1.1, -0.6, 0.5];
        let observed = Curve::constant(g.clone(), 0.45).unwrap();
        let make = |order: &[usize]| {
            BootstrapEnsemble::new(
                FunctionalSample::new(
                    order.iter().map(|&i| Curve::constant(g.clone(), vals[i]).unwrap()).collect(),
                )
                .unwrap(),
                "test",
            )
        };
        let forward = make(&[0, 1, 2, 3, 4, 5, 6]);
        let shuffled = make(&[4, 2, 6, 0, 5, 1, 3]);
        for spec in [DepthSpec::kd(0.4), DepthSpec::itd(), DepthSpec::ifd()] {
            let a = depth_pvalue(&observed, &forward, &spec, &mut rng(), 1).unwrap();
            let b = depth_pvalue(&observed, &shuffled, &spec, &mut rng(), 1).unwrap();
            assert_eq!(a.pvalue, b.pvalue, "{:?}", spec.kind);
        }
        // RHD with the same seed reuses the same direction pool
        let spec = DepthSpec::rhd(0.3, 100);
        let a = depth_pvalue(&observed, &forward, &spec, &mut rng(), 1).unwrap();
        let b = depth_pvalue(&observed, &shuffled, &spec, &mut rng(), 1).unwrap();
        assert_eq!(a.pvalue, b.pvalue);
        assert_eq!(a.method, "RHD");
        assert!(matches!(a.depth_spec, Some(DepthSpec { kind: DepthKind::Rhd, .. })));
    }

    #[test]
    fn scalar_stat_examples() {
        let g = Grid::equispaced(50).unwrap();
        assert_abs_diff_eq!(
            scalar_stat(&Curve::constant(g.clone(), 1.0).unwrap(), ScalarKind::L2),
            1.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            scalar_stat(&Curve::constant(g.clone(), -3.0).unwrap(), ScalarKind::Sup),
            3.0,
            epsilon = 1e-15
        );
        let lin = Curve::from_fn(g, |t| 2.0 * t - 1.0).unwrap();
        assert_abs_diff_eq!(
            scalar_stat(&lin, ScalarKind::L2),
            (1f64 / 3.0).sqrt(),
            epsilon = 2e-3
        );
    }

    #[test]
    fn scalar_pvalue_examples() {
        let report = scalar_pvalue(2.0, &[1.0, 2.0, 3.0, 4.0], "L2", 0).unwrap();
        assert_eq!(report.pvalue, 0.75);
        assert_eq!(scalar_pvalue(9.0, &[1.0, 2.0, 3.0], "L2", 0).unwrap().pvalue, 0.0);
        assert_eq!(scalar_pvalue(0.5, &[1.0, 2.0, 3.0], "SUP", 0).unwrap().pvalue, 1.0);
        assert!(scalar_pvalue(1.0, &[], "L2", 0).is_err());
    }
}
