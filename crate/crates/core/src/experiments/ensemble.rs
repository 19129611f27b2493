//! Matched ensembles of one chemistry and their cross-run statistics.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::observables::trapped_catalyst_pool;
use super::stats::{coefficient_of_variation, mean, median, paired_t_test, variance, TestResult};
use crate::chemistry::{Chemistry, Species};
use crate::engine::{
    run_simulation, Entity, KineticParams, ReactorConfig, RunOptions, Trajectory, Transition,
};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

/// Everything two arms of a comparison share.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub chemistry: Chemistry,
    pub kinetics: KineticParams,
    pub initial_counts: BTreeMap<Species, u64>,
    pub t_end: f64,
    pub dt_obs: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleOptions {
    pub burn_in_fraction: f64,
    pub stationarity_tol: f64,
    pub record_events: bool,
    pub record_counts: bool,
    /// Worker cap; falls back to `CRS_SIM_THREADS`, then to rayon's default.
    pub threads: Option<usize>,
    /// Return the trajectories alongside the report.
    pub keep_trajectories: bool,
}

impl Default for EnsembleOptions {
    fn default() -> Self {
        EnsembleOptions {
            burn_in_fraction: 0.25,
            stationarity_tol: 0.05,
            record_events: false,
            record_counts: false,
            threads: None,
            keep_trajectories: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stationarity {
    Stationary,
    NonStationary,
}

/// Split-halves drift test: drop the first `burn_in_fraction` of samples,
/// then compare the means of the two halves of the rest (the second half
/// takes the odd sample). Stationary iff the means differ by at most
/// `tol * max(first mean, 1)`.
pub fn stationarity_check(series: &[f64], burn_in_fraction: f64, tol: f64) -> Result<Stationarity> {
    if !(0.0..1.0).contains(&burn_in_fraction) {
        return Err(Error::Input(format!(
            "burn-in fraction {burn_in_fraction} must lie in [0, 1)"
        )));
    }
    let skip = (series.len() as f64 * burn_in_fraction).floor() as usize;
    let rest = &series[skip..];
    if rest.len() < 4 {
        return Err(Error::Input(format!(
            "stationarity check needs at least 4 samples after burn-in, got {}",
            rest.len()
        )));
    }
    let (first, second) = rest.split_at(rest.len() / 2);
    let (m1, m2) = (mean(first), mean(second));
    Ok(if (m2 - m1).abs() <= tol * m1.max(1.0) {
        Stationarity::Stationary
    } else {
        Stationarity::NonStationary
    })
}

/// L1 distance between two count vectors after normalizing each to unit
/// sum. An empty vector normalizes to all zeros.
pub fn composition_l1(a: &BTreeMap<Entity, u64>, b: &BTreeMap<Entity, u64>) -> f64 {
    let ta = a.values().sum::<u64>() as f64;
    let tb = b.values().sum::<u64>() as f64;
    let frac = |n: u64, t: f64| if t > 0.0 { n as f64 / t } else { 0.0 };
    // Sum over the sorted key union so the result is exactly symmetric.
    let keys: BTreeSet<&Entity> = a.keys().chain(b.keys()).collect();
    keys.into_iter()
        .map(|e| {
            let n = |m: &BTreeMap<Entity, u64>| m.get(e).copied().unwrap_or(0);
            (frac(n(a), ta) - frac(n(b), tb)).abs()
        })
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    /// Mean total mass over all observation points.
    pub time_avg_mass: f64,
    pub final_mass: u64,
    pub final_richness: usize,
    pub final_max_len: usize,
    pub stationarity: Stationarity,
    /// Empty outside protocell mode.
    pub trapped_pool: Vec<Species>,
    pub events: u64,
    pub max_efflux_len: usize,
    /// No entity longer than the membrane threshold ever left.
    pub trapping_ok: bool,
    pub final_counts: BTreeMap<Entity, u64>,
}

impl RunSummary {
    pub fn from_trajectory(
        tr: &Trajectory,
        reactor: &ReactorConfig,
        opts: &EnsembleOptions,
    ) -> Result<Self> {
        let masses: Vec<f64> = tr
            .observations
            .iter()
            .map(|o| o.total_mass as f64)
            .collect();
        let last = tr
            .observations
            .last()
            .ok_or_else(|| Error::Input("trajectory has no observations".into()))?;
        let l_perm = reactor.l_perm();
        let trapping_ok = match (l_perm, &tr.events) {
            (None, _) => true,
            (Some(l), Some(events)) => events.iter().all(|ev| match &ev.transition {
                Transition::Efflux { entity } => entity.len() <= l,
                _ => true,
            }),
            (Some(l), None) => tr.stats.max_efflux_len <= l,
        };
        let trapped_pool = match l_perm {
            Some(l) => trapped_catalyst_pool(&tr.final_state, &tr.chemistry, &tr.kinetics, l),
            None => Vec::new(),
        };
        Ok(RunSummary {
            seed: tr.sim_seed,
            time_avg_mass: mean(&masses),
            final_mass: last.total_mass,
            final_richness: last.richness,
            final_max_len: last.max_len,
            stationarity: stationarity_check(
                &masses,
                opts.burn_in_fraction,
                opts.stationarity_tol,
            )?,
            trapped_pool,
            events: tr.stats.total,
            max_efflux_len: tr.stats.max_efflux_len,
            trapping_ok,
            final_counts: tr.final_state.counts.clone(),
        })
    }
}

/// Cross-run statistics; a pure function of the per-run summaries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub runs: usize,
    pub mass_mean: f64,
    pub mass_variance: f64,
    pub mass_cv: f64,
    /// final max_len -> number of runs
    pub final_max_len_distribution: BTreeMap<usize, usize>,
    pub median_final_max_len: f64,
    pub stationary_runs: usize,
    pub runs_with_trapped_pool: usize,
    pub trapping_violations: usize,
    /// Mean L1 distance between final compositions over all run pairs.
    pub mean_pairwise_l1: f64,
}

impl EnsembleStats {
    pub fn from_summaries(runs: &[RunSummary]) -> Self {
        let masses: Vec<f64> = runs.iter().map(|r| r.time_avg_mass).collect();
        let max_lens: Vec<f64> = runs.iter().map(|r| r.final_max_len as f64).collect();
        let mut distribution = BTreeMap::new();
        for r in runs {
            *distribution.entry(r.final_max_len).or_default() += 1;
        }
        let mut l1 = 0.0;
        let mut pairs = 0usize;
        for (i, a) in runs.iter().enumerate() {
            for b in &runs[i + 1..] {
                l1 += composition_l1(&a.final_counts, &b.final_counts);
                pairs += 1;
            }
        }
        EnsembleStats {
            runs: runs.len(),
            mass_mean: mean(&masses),
            mass_variance: variance(&masses),
            mass_cv: coefficient_of_variation(&masses),
            final_max_len_distribution: distribution,
            median_final_max_len: median(&max_lens),
            stationary_runs: runs
                .iter()
                .filter(|r| r.stationarity == Stationarity::Stationary)
                .count(),
            runs_with_trapped_pool: runs.iter().filter(|r| !r.trapped_pool.is_empty()).count(),
            trapping_violations: runs.iter().filter(|r| !r.trapping_ok).count(),
            mean_pairwise_l1: if pairs == 0 { 0.0 } else { l1 / pairs as f64 },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub format_version: u32,
    pub reactor: ReactorConfig,
    pub seeds: Vec<u64>,
    pub runs: Vec<RunSummary>,
    pub stats: EnsembleStats,
}

impl EnsembleReport {
    pub fn from_runs(reactor: ReactorConfig, runs: Vec<RunSummary>) -> Self {
        EnsembleReport {
            format_version: FORMAT_VERSION,
            reactor,
            seeds: runs.iter().map(|r| r.seed).collect(),
            stats: EnsembleStats::from_summaries(&runs),
            runs,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Ensemble {
    pub report: EnsembleReport,
    /// Seed-ordered; empty unless `keep_trajectories` was set.
    pub trajectories: Vec<Trajectory>,
}

fn validate(
    scenario: &Scenario,
    reactor: &ReactorConfig,
    seeds: &[u64],
    opts: &EnsembleOptions,
) -> Result<()> {
    if seeds.len() < 2 {
        return Err(Error::Input(format!(
            "an ensemble needs at least 2 seeds, got {}",
            seeds.len()
        )));
    }
    if !(0.0..1.0).contains(&opts.burn_in_fraction) {
        return Err(Error::config("burn_in_fraction", "must lie in [0, 1)"));
    }
    if !(opts.stationarity_tol.is_finite() && opts.stationarity_tol >= 0.0) {
        return Err(Error::config(
            "stationarity_tol",
            "must be finite and non-negative",
        ));
    }
    scenario.kinetics.validate()?;
    let alphabet = &scenario.chemistry.params().alphabet;
    reactor.validate(alphabet, "reactor")?;
    for s in scenario.initial_counts.keys() {
        alphabet
            .parse(s.as_str())
            .map_err(|e| Error::config("initial_counts", e.to_string()))?;
    }
    RunOptions::new(scenario.t_end, scenario.dt_obs, 0).validate()
}

fn thread_cap(opts: &EnsembleOptions) -> Result<Option<usize>> {
    if let Some(n) = opts.threads {
        return Ok(Some(n.max(1)));
    }
    match std::env::var("CRS_SIM_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::config(
                "CRS_SIM_THREADS",
                format!("{v:?} is not a positive integer"),
            )),
        },
        Err(_) => Ok(None),
    }
}

/// Runs one simulation per seed, in parallel, and aggregates in seed order.
pub fn ensemble_run(
    scenario: &Scenario,
    reactor: &ReactorConfig,
    seeds: &[u64],
    opts: &EnsembleOptions,
) -> Result<Ensemble> {
    validate(scenario, reactor, seeds, opts)?;
    let one = |&seed: &u64| -> Result<(RunSummary, Option<Trajectory>)> {
        let mut run_opts = RunOptions::new(scenario.t_end, scenario.dt_obs, seed);
        run_opts.record_events = opts.record_events;
        run_opts.record_counts = opts.record_counts;
        let tr = run_simulation(
            &scenario.chemistry,
            reactor,
            &scenario.kinetics,
            &scenario.initial_counts,
            &run_opts,
        )?;
        let summary = RunSummary::from_trajectory(&tr, reactor, opts)?;
        Ok((summary, opts.keep_trajectories.then_some(tr)))
    };
    let results: Vec<_> = match thread_cap(opts)? {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Input(format!("cannot start worker pool: {e}")))?
            .install(|| seeds.par_iter().map(one).collect::<Result<_>>())?,
        None => seeds.par_iter().map(one).collect::<Result<_>>()?,
    };
    let mut runs = Vec::with_capacity(results.len());
    let mut trajectories = Vec::new();
    for (summary, tr) in results {
        runs.push(summary);
        trajectories.extend(tr);
    }
    Ok(Ensemble {
        report: EnsembleReport::from_runs(reactor.clone(), runs),
        trajectories,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedDistance {
    pub seed: u64,
    pub l1: f64,
}

/// Two ensembles over the same seeds, plus paired statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub format_version: u32,
    pub arm_a: EnsembleReport,
    pub arm_b: EnsembleReport,
    /// Mass CV of arm b over arm a; absent when arm a does not vary.
    pub cv_ratio: Option<f64>,
    /// Median final max_len, arm a then arm b.
    pub median_final_max_len: [f64; 2],
    /// Runs with a non-empty trapped pool, arm a then arm b.
    pub trapped_pool_runs: [usize; 2],
    /// Final-state compositional distance between the arms, per seed.
    pub per_seed_l1: Vec<SeedDistance>,
    /// Paired t-test on time-averaged mass, a minus b.
    pub paired_mass_test: TestResult,
}

impl ComparisonReport {
    pub fn from_reports(arm_a: EnsembleReport, arm_b: EnsembleReport) -> Result<Self> {
        if arm_a.seeds != arm_b.seeds {
            return Err(Error::Input(format!(
                "arms ran different seeds: {:?} vs {:?}",
                arm_a.seeds, arm_b.seeds
            )));
        }
        let mass =
            |r: &EnsembleReport| -> Vec<f64> { r.runs.iter().map(|s| s.time_avg_mass).collect() };
        let paired_mass_test = paired_t_test(&mass(&arm_a), &mass(&arm_b))?;
        let per_seed_l1 = arm_a
            .runs
            .iter()
            .zip(&arm_b.runs)
            .map(|(a, b)| SeedDistance {
                seed: a.seed,
                l1: composition_l1(&a.final_counts, &b.final_counts),
            })
            .collect();
        let cv_ratio =
            (arm_a.stats.mass_cv > 0.0).then(|| arm_b.stats.mass_cv / arm_a.stats.mass_cv);
        Ok(ComparisonReport {
            format_version: FORMAT_VERSION,
            cv_ratio,
            median_final_max_len: [
                arm_a.stats.median_final_max_len,
                arm_b.stats.median_final_max_len,
            ],
            trapped_pool_runs: [
                arm_a.stats.runs_with_trapped_pool,
                arm_b.stats.runs_with_trapped_pool,
            ],
            per_seed_l1,
            paired_mass_test,
            arm_a,
            arm_b,
        })
    }
}

#[derive(Clone, Debug)]
pub struct Comparison {
    pub report: ComparisonReport,
    pub trajectories: [Vec<Trajectory>; 2],
}

/// Runs the same scenario and seeds in two reactors.
pub fn compare_environments(
    scenario: &Scenario,
    arm_a: &ReactorConfig,
    arm_b: &ReactorConfig,
    seeds: &[u64],
    opts: &EnsembleOptions,
) -> Result<Comparison> {
    validate(scenario, arm_a, seeds, opts)?;
    validate(scenario, arm_b, seeds, opts)?;
    let a = ensemble_run(scenario, arm_a, seeds, opts)?;
    let b = ensemble_run(scenario, arm_b, seeds, opts)?;
    Ok(Comparison {
        report: ComparisonReport::from_reports(a.report, b.report)?,
        trajectories: [a.trajectories, b.trajectories],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stationarity_examples() {
        let flat = vec![50.0; 40];
        assert_eq!(
            stationarity_check(&flat, 0.25, 0.05).unwrap(),
            Stationarity::Stationary
        );
        let doubling: Vec<f64> = (0..40).map(|i| 100.0 + 100.0 * i as f64 / 39.0).collect();
        assert_eq!(
            stationarity_check(&doubling, 0.25, 0.05).unwrap(),
            Stationarity::NonStationary
        );
        assert!(stationarity_check(&[1.0, 2.0, 3.0, 4.0], 0.25, 0.05).is_err());
        assert!(stationarity_check(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.25, 0.05).is_ok());
    }

    #[test]
    fn l1_distance() {
        let m = |pairs: &[(&str, u64)]| -> BTreeMap<Entity, u64> {
            pairs
                .iter()
                .map(|(s, n)| (s.parse().unwrap(), *n))
                .collect()
        };
        assert_eq!(composition_l1(&m(&[("A", 2)]), &m(&[("A", 7)])), 0.0);
        assert_eq!(composition_l1(&m(&[("A", 1)]), &m(&[("B", 3)])), 2.0);
        assert_eq!(
            composition_l1(&m(&[("A", 1), ("B", 1)]), &m(&[("A", 1)])),
            1.0
        );
        assert_eq!(composition_l1(&m(&[]), &m(&[("A", 1)])), 1.0);
    }
}
