//! Monte-Carlo power estimation.
//!
//! A power point is the rejection frequency of one (scenario, method, test)
//! combination at level alpha over a number of generate-and-test trials.
//! Trial t of a point with sweep value v draws its sample from the seed
//! `derive_seed([study_seed, v, t])`, so every point is reproducible and
//! recomputable in isolation, and all methods and tests within a trial see
//! the same sample. Trials run in parallel; only rejection counts are
//! aggregated, so the result does not depend on scheduling.

use rayon::prelude::*;

use crate::dcor::MergeScratch;
use crate::error::{Error, Result};
use crate::inference::{
    chisq_avg_pvalue, chisq_max_pvalue, permutation_test_with, Method, PermutationConfig, TestKind,
};
use crate::marginal::{ColumnPolicy, PreparedGrid};
use crate::rng::derive_seed;
use crate::simgen::{Relationship, Scenario, ScenarioFamily};

/// One estimated rejection rate.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerPoint {
    pub scenario: Scenario,
    pub method: Method,
    pub test_kind: TestKind,
    /// p for the fixed family, d for the increasing family.
    pub sweep_value: usize,
    pub alpha: f64,
    pub replicates: usize,
    pub rejections: usize,
    /// rejections / replicates.
    pub power_hat: f64,
    /// Binomial standard error `sqrt(power_hat (1 - power_hat) / replicates)`.
    pub std_err: f64,
}

/// An ordered sweep of power points sharing everything but the sweep value.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerCurve {
    pub family: ScenarioFamily,
    pub relationship: Relationship,
    pub method: Method,
    pub test_kind: TestKind,
    pub points: Vec<PowerPoint>,
}

/// Sweep axis of one curve group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sweep {
    /// Fixed family: sweep the X dimension count (q stays 1).
    OverP(Vec<usize>),
    /// Increasing family: sweep d at fixed p and q.
    OverD {
        p: usize,
        q: usize,
        values: Vec<usize>,
    },
}

/// One relationship's sweep within a study.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurveSpec {
    pub family: ScenarioFamily,
    pub relationship: Relationship,
    pub n: usize,
    pub sweep: Sweep,
}

impl CurveSpec {
    /// Expand the sweep into concrete scenarios, validating each value.
    /// Sweep values must be strictly increasing.
    pub fn scenarios(&self) -> Result<Vec<Scenario>> {
        let values = match &self.sweep {
            Sweep::OverP(values) | Sweep::OverD { values, .. } => values,
        };
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "sweep values must be strictly increasing".to_string(),
            ));
        }
        match (&self.family, &self.sweep) {
            (ScenarioFamily::FixedDep, Sweep::OverP(values)) => values
                .iter()
                .map(|&p| Scenario::fixed_dep(self.relationship, self.n, p))
                .collect(),
            (ScenarioFamily::Vanishing, Sweep::OverP(values)) => values
                .iter()
                .map(|&p| Scenario::vanishing(self.n, p))
                .collect(),
            (ScenarioFamily::IncreasingDep, Sweep::OverD { p, q, values }) => values
                .iter()
                .map(|&d| Scenario::increasing_dep(self.relationship, self.n, *p, *q, d))
                .collect(),
            _ => Err(Error::InvalidParameter(format!(
                "sweep axis does not match family {}",
                self.family
            ))),
        }
    }
}

/// A full study: curves x methods x test kinds.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub name: String,
    pub curves: Vec<CurveSpec>,
    pub methods: Vec<Method>,
    pub test_kinds: Vec<TestKind>,
    pub alpha: f64,
    /// Monte-Carlo trials per point.
    pub replicates: usize,
    /// Permutation replicates r, used when a permutation test is requested.
    pub permutations: usize,
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.curves.is_empty() {
            return Err(Error::InvalidParameter("empty sweep".to_string()));
        }
        if self.methods.is_empty() || self.test_kinds.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one method and one test kind required".to_string(),
            ));
        }
        check_alpha_replicates(self.alpha, self.replicates)?;
        for curve in &self.curves {
            let scenarios = curve.scenarios()?;
            if scenarios.is_empty() {
                return Err(Error::InvalidParameter("empty sweep".to_string()));
            }
        }
        if self.test_kinds.contains(&TestKind::Permutation) && self.permutations < 1 {
            return Err(Error::InvalidParameter(
                "permutation replicates must be >= 1".to_string(),
            ));
        }
        Ok(())
    }
}

fn check_alpha_replicates(alpha: f64, replicates: usize) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    if replicates < 1 {
        return Err(Error::InvalidParameter(
            "replicates must be >= 1".to_string(),
        ));
    }
    Ok(())
}

/// Estimate the power of one (scenario, method, test) point.
pub fn estimate_power(
    scenario: Scenario,
    method: Method,
    test_kind: TestKind,
    alpha: f64,
    replicates: usize,
    permutations: usize,
    seed: u64,
) -> Result<PowerPoint> {
    let points = study_point(
        scenario,
        &[method],
        &[test_kind],
        alpha,
        replicates,
        permutations,
        seed,
    )?;
    Ok(points.into_iter().next().expect("one combination"))
}

/// Evaluate every (method, test kind) combination on shared trial samples.
///
/// Per trial the sample is generated once; the marginal grid and the full
/// statistic are computed at most once and reused across the combinations.
/// The returned points are ordered methods-major, test-kinds-minor.
pub fn study_point(
    scenario: Scenario,
    methods: &[Method],
    test_kinds: &[TestKind],
    alpha: f64,
    replicates: usize,
    permutations: usize,
    seed: u64,
) -> Result<Vec<PowerPoint>> {
    check_alpha_replicates(alpha, replicates)?;
    let combos: Vec<(Method, TestKind)> = methods
        .iter()
        .flat_map(|&m| test_kinds.iter().map(move |&t| (m, t)))
        .collect();
    if combos.is_empty() {
        return Err(Error::InvalidParameter(
            "at least one method and one test kind required".to_string(),
        ));
    }
    if test_kinds.contains(&TestKind::Permutation) && permutations < 1 {
        return Err(Error::InvalidParameter(
            "permutation replicates must be >= 1".to_string(),
        ));
    }

    let sweep = scenario.sweep_value() as u64;
    let rejection_counts = (0..replicates)
        .into_par_iter()
        .map(|trial| -> Result<Vec<usize>> {
            let trial_seed = derive_seed(&[seed, sweep, trial as u64]);
            let pvalues = trial_pvalues(scenario, &combos, permutations, trial_seed)?;
            Ok(pvalues
                .into_iter()
                .map(|p| usize::from(p < alpha))
                .collect())
        })
        .try_reduce(
            || vec![0usize; combos.len()],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                Ok(a)
            },
        )?;

    Ok(combos
        .iter()
        .zip(rejection_counts)
        .map(|(&(method, test_kind), rejections)| {
            let power_hat = rejections as f64 / replicates as f64;
            PowerPoint {
                scenario,
                method,
                test_kind,
                sweep_value: scenario.sweep_value(),
                alpha,
                replicates,
                rejections,
                power_hat,
                std_err: (power_hat * (1.0 - power_hat) / replicates as f64).sqrt(),
            }
        })
        .collect())
}

/// P-values for all requested combinations on one generated trial.
fn trial_pvalues(
    scenario: Scenario,
    combos: &[(Method, TestKind)],
    permutations: usize,
    trial_seed: u64,
) -> Result<Vec<f64>> {
    let sample = scenario.generate(trial_seed);
    let (n, p, q) = (sample.x.n(), sample.x.d(), sample.y.d());

    let needs_grid = combos
        .iter()
        .any(|&(m, t)| t == TestKind::ChiSquare && matches!(m, Method::Max | Method::Avg));
    let grid_stats = if needs_grid {
        let prepared = PreparedGrid::new(&sample.x, &sample.y, ColumnPolicy::Strict)?;
        let mut scratch = MergeScratch::new(n);
        Some(prepared.stats(None, &mut scratch))
    } else {
        None
    };

    let mut full_chisq: Option<f64> = None;
    let mut perm_cache: Vec<(Method, f64)> = Vec::new();

    let mut out = Vec::with_capacity(combos.len());
    for &(method, test_kind) in combos {
        let p_value = match test_kind {
            TestKind::ChiSquare => match method {
                Method::Max => {
                    let stats = grid_stats.as_ref().expect("grid prepared");
                    chisq_max_pvalue(stats.max, n, p, q)?
                }
                Method::Avg => {
                    let stats = grid_stats.as_ref().expect("grid prepared");
                    chisq_avg_pvalue(stats.avg, n, p, q)?
                }
                Method::Full => match full_chisq {
                    Some(v) => v,
                    None => {
                        let outcome = crate::inference::chisquare_test(
                            &sample.x,
                            &sample.y,
                            Method::Full,
                            ColumnPolicy::Strict,
                        )?;
                        full_chisq = Some(outcome.p_value);
                        outcome.p_value
                    }
                },
            },
            TestKind::Permutation => {
                if let Some(&(_, v)) = perm_cache.iter().find(|(m, _)| *m == method) {
                    v
                } else {
                    let outcome = permutation_test_with(
                        &sample.x,
                        &sample.y,
                        method,
                        &PermutationConfig {
                            replicates: permutations,
                            seed: trial_seed,
                            ..PermutationConfig::default()
                        },
                    )?;
                    perm_cache.push((method, outcome.p_value));
                    outcome.p_value
                }
            }
        };
        out.push(p_value);
    }
    Ok(out)
}

/// Run the whole study. Curve order is curves-major, then methods, then
/// test kinds; points follow each curve's sweep order.
pub fn power_study(config: &StudyConfig, seed: u64) -> Result<Vec<PowerCurve>> {
    config.validate()?;
    let mut curves = Vec::new();
    for curve in &config.curves {
        let scenarios = curve.scenarios()?;
        // Evaluate each sweep point once for all combinations, then
        // redistribute into per-combination curves.
        let mut per_point: Vec<Vec<PowerPoint>> = Vec::with_capacity(scenarios.len());
        for &scenario in &scenarios {
            per_point.push(study_point(
                scenario,
                &config.methods,
                &config.test_kinds,
                config.alpha,
                config.replicates,
                config.permutations,
                seed,
            )?);
        }
        for (idx, &method) in config.methods.iter().enumerate() {
            for (jdx, &test_kind) in config.test_kinds.iter().enumerate() {
                let slot = idx * config.test_kinds.len() + jdx;
                curves.push(PowerCurve {
                    family: curve.family,
                    relationship: curve.relationship,
                    method,
                    test_kind,
                    points: per_point.iter().map(|pts| pts[slot].clone()).collect(),
                });
            }
        }
    }
    Ok(curves)
}

/// Named study presets.
pub mod presets {
    use super::*;

    pub const NAMES: [&str; 8] = [
        "figure1",
        "figure1-paper-scale",
        "figure1-independent",
        "figure1-permutation",
        "figure2",
        "figure2-paper-scale",
        "figure2-permutation",
        "example3-diagnostic",
    ];

    pub fn by_name(name: &str) -> Option<StudyConfig> {
        match name {
            "figure1" => Some(figure1(200)),
            "figure1-paper-scale" => Some(figure1(1000)),
            "figure1-independent" => Some(figure1_independent(200)),
            "figure1-permutation" => Some(figure1_permutation(200)),
            "figure2" => Some(figure2(200)),
            "figure2-paper-scale" => Some(figure2(1000)),
            "figure2-permutation" => Some(figure2_permutation(200)),
            "example3-diagnostic" => Some(example3_diagnostic(200)),
            _ => None,
        }
    }

    const BASE_P_GRID: [usize; 5] = [5, 10, 20, 50, 100];
    const LINEAR_P_GRID: [usize; 8] = [5, 10, 20, 50, 100, 200, 500, 1000];

    fn fixed_curve(relationship: Relationship, grid: &[usize]) -> CurveSpec {
        CurveSpec {
            family: ScenarioFamily::FixedDep,
            relationship,
            n: 100,
            sweep: Sweep::OverP(grid.to_vec()),
        }
    }

    /// Fixed-dependence sweep: all four relationships, n = 100, chi-square
    /// tests, the linear panel extended to p = 1000.
    pub fn figure1(replicates: usize) -> StudyConfig {
        StudyConfig {
            name: "figure1".to_string(),
            curves: vec![
                fixed_curve(Relationship::Linear, &LINEAR_P_GRID),
                fixed_curve(Relationship::Quadratic, &BASE_P_GRID),
                fixed_curve(Relationship::FourthRoot, &BASE_P_GRID),
                fixed_curve(Relationship::Independent, &BASE_P_GRID),
            ],
            methods: vec![Method::Max, Method::Avg, Method::Full],
            test_kinds: vec![TestKind::ChiSquare],
            alpha: 0.05,
            replicates,
            permutations: 1000,
        }
    }

    /// The independence panel of figure1 alone (type 1 error check).
    pub fn figure1_independent(replicates: usize) -> StudyConfig {
        StudyConfig {
            name: "figure1-independent".to_string(),
            curves: vec![fixed_curve(Relationship::Independent, &BASE_P_GRID)],
            ..figure1(replicates)
        }
    }

    /// Fixed-dependence sweep with permutation tests on the base grid.
    pub fn figure1_permutation(replicates: usize) -> StudyConfig {
        StudyConfig {
            name: "figure1-permutation".to_string(),
            curves: vec![
                fixed_curve(Relationship::Linear, &BASE_P_GRID),
                fixed_curve(Relationship::Quadratic, &BASE_P_GRID),
                fixed_curve(Relationship::FourthRoot, &BASE_P_GRID),
                fixed_curve(Relationship::Independent, &BASE_P_GRID),
            ],
            methods: vec![Method::Max, Method::Avg, Method::Full],
            test_kinds: vec![TestKind::Permutation],
            alpha: 0.05,
            replicates,
            permutations: 1000,
        }
    }

    /// Increasing-dependence sweep: p = q = 50, d = 1..10, n = 20 for the
    /// linear panel and n = 50 for the quadratic one.
    pub fn figure2(replicates: usize) -> StudyConfig {
        let d_grid: Vec<usize> = (1..=10).collect();
        StudyConfig {
            name: "figure2".to_string(),
            curves: vec![
                CurveSpec {
                    family: ScenarioFamily::IncreasingDep,
                    relationship: Relationship::Linear,
                    n: 20,
                    sweep: Sweep::OverD {
                        p: 50,
                        q: 50,
                        values: d_grid.clone(),
                    },
                },
                CurveSpec {
                    family: ScenarioFamily::IncreasingDep,
                    relationship: Relationship::Quadratic,
                    n: 50,
                    sweep: Sweep::OverD {
                        p: 50,
                        q: 50,
                        values: d_grid,
                    },
                },
            ],
            methods: vec![Method::Max, Method::Avg, Method::Full],
            test_kinds: vec![TestKind::ChiSquare],
            alpha: 0.05,
            replicates,
            permutations: 1000,
        }
    }

    /// Increasing-dependence sweep with permutation tests.
    pub fn figure2_permutation(replicates: usize) -> StudyConfig {
        StudyConfig {
            name: "figure2-permutation".to_string(),
            test_kinds: vec![TestKind::Permutation],
            permutations: 100,
            ..figure2(replicates)
        }
    }

    /// Diagnostic: dependence that vanishes as p grows. Not a power target.
    pub fn example3_diagnostic(replicates: usize) -> StudyConfig {
        StudyConfig {
            name: "example3-diagnostic".to_string(),
            curves: vec![CurveSpec {
                family: ScenarioFamily::Vanishing,
                relationship: Relationship::Linear,
                n: 100,
                sweep: Sweep::OverP(vec![5, 10, 20, 50, 100]),
            }],
            methods: vec![Method::Max, Method::Avg, Method::Full],
            test_kinds: vec![TestKind::ChiSquare],
            alpha: 0.05,
            replicates,
            permutations: 1000,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_trial_power_is_zero_or_one() {
        let scenario = Scenario::fixed_dep(Relationship::Linear, 30, 5).unwrap();
        let point = estimate_power(
            scenario,
            Method::Max,
            TestKind::ChiSquare,
            0.05,
            1,
            100,
            7,
        )
        .unwrap();
        assert!(point.power_hat == 0.0 || point.power_hat == 1.0);
        assert_eq!(point.std_err, 0.0);
    }

    #[test]
    fn estimate_power_matches_study_point() {
        let scenario = Scenario::fixed_dep(Relationship::Quadratic, 40, 6).unwrap();
        let single = estimate_power(
            scenario,
            Method::Avg,
            TestKind::ChiSquare,
            0.05,
            25,
            100,
            3,
        )
        .unwrap();
        let multi = study_point(
            scenario,
            &[Method::Max, Method::Avg, Method::Full],
            &[TestKind::ChiSquare],
            0.05,
            25,
            100,
            3,
        )
        .unwrap();
        let avg_point = multi
            .iter()
            .find(|pt| pt.method == Method::Avg)
            .unwrap();
        assert_eq!(single.rejections, avg_point.rejections);
        assert_eq!(single.power_hat, avg_point.power_hat);
    }

    #[test]
    fn study_is_deterministic() {
        let scenario = Scenario::increasing_dep(Relationship::Linear, 20, 4, 4, 2).unwrap();
        let a = estimate_power(scenario, Method::Max, TestKind::Permutation, 0.05, 10, 50, 5)
            .unwrap();
        let b = estimate_power(scenario, Method::Max, TestKind::Permutation, 0.05, 10, 50, 5)
            .unwrap();
        assert_eq!(a.rejections, b.rejections);
    }

    #[test]
    fn invalid_parameters_rejected() {
        let scenario = Scenario::fixed_dep(Relationship::Linear, 30, 5).unwrap();
        assert!(estimate_power(scenario, Method::Max, TestKind::ChiSquare, 0.0, 10, 10, 1).is_err());
        assert!(estimate_power(scenario, Method::Max, TestKind::ChiSquare, 1.0, 10, 10, 1).is_err());
        assert!(estimate_power(scenario, Method::Max, TestKind::ChiSquare, 0.05, 0, 10, 1).is_err());
        assert!(
            estimate_power(scenario, Method::Max, TestKind::Permutation, 0.05, 10, 0, 1).is_err()
        );
    }

    #[test]
    fn empty_study_rejected() {
        let config = StudyConfig {
            name: "empty".to_string(),
            curves: vec![],
            methods: vec![Method::Max],
            test_kinds: vec![TestKind::ChiSquare],
            alpha: 0.05,
            replicates: 10,
            permutations: 10,
        };
        assert!(matches!(
            power_study(&config, 1),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn sweep_values_must_increase() {
        let curve = CurveSpec {
            family: ScenarioFamily::FixedDep,
            relationship: Relationship::Linear,
            n: 30,
            sweep: Sweep::OverP(vec![10, 5]),
        };
        assert!(matches!(
            curve.scenarios(),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn presets_resolve() {
        for name in presets::NAMES {
            let config = presets::by_name(name).unwrap();
            config.validate().unwrap();
        }
        assert!(presets::by_name("nope").is_none());
    }

    #[test]
    fn single_point_study_composes() {
        let config = StudyConfig {
            name: "one".to_string(),
            curves: vec![CurveSpec {
                family: ScenarioFamily::FixedDep,
                relationship: Relationship::Linear,
                n: 30,
                sweep: Sweep::OverP(vec![5]),
            }],
            methods: vec![Method::Max],
            test_kinds: vec![TestKind::ChiSquare],
            alpha: 0.05,
            replicates: 20,
            permutations: 10,
        };
        let curves = power_study(&config, 11).unwrap();
        assert_eq!(curves.len(), 1);
        assert_eq!(curves[0].points.len(), 1);
        let scenario = Scenario::fixed_dep(Relationship::Linear, 30, 5).unwrap();
        let direct =
            estimate_power(scenario, Method::Max, TestKind::ChiSquare, 0.05, 20, 10, 11).unwrap();
        assert_eq!(curves[0].points[0], direct);
    }
}
