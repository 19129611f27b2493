//! One PASS/FAIL line per acceptance criterion. Oracles are computed here,
//! independently of the library code under test.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use crs_core::chemistry::{Chemistry, ChemistryParams, ReactionTemplate, Species};
use crs_core::cli_io::{load_config, RunConfig};
use crs_core::engine::{
    run_simulation, Entity, EventKind, KineticParams, ReactorConfig, ReactorMode, RunOptions,
    Simulator,
};
use crs_core::experiments::{
    compare_environments, ks_exponential, paired_t_test, Comparison, Stationarity,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn sp(s: &str) -> Species {
    Species::new(s)
}

fn reference_config() -> RunConfig {
    load_config(&Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/reference.json"))
        .expect("reference scenario loads")
}

// --- test-side oracles -------------------------------------------------------

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn oracle_draw(seed: u64, encoded: &str, p: f64) -> bool {
    let mut bytes = seed.to_le_bytes().to_vec();
    bytes.extend_from_slice(encoded.as_bytes());
    let u = (fnv1a64(&bytes) >> 11) as f64 / (1u64 << 53) as f64;
    u < p
}

fn all_strings(max_len: usize) -> Vec<String> {
    let mut out = Vec::new();
    let mut layer = vec![String::new()];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|s| ["A", "B"].map(|c| format!("{s}{c}")))
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

/// Encodings of every conceivable reaction over `registry`.
fn conceivable_reactions(registry: &[String], l_max: usize) -> Vec<String> {
    let mut out = Vec::new();
    for s in registry {
        for cut in 1..s.len() {
            out.push(format!("X|{s}|{}|{}|", &s[..cut], &s[cut..]));
        }
        for t in registry {
            if s.len() + t.len() <= l_max {
                out.push(format!("C|{s}|{t}|{s}{t}|"));
            }
        }
    }
    out
}

fn encode(template: &ReactionTemplate, cat: &Species) -> String {
    match template {
        ReactionTemplate::Cleavage {
            substrate,
            left,
            right,
            ..
        } => format!("X|{substrate}|{left}|{right}|{cat}"),
        ReactionTemplate::Condensation {
            first,
            second,
            product,
        } => format!("C|{first}|{second}|{product}|{cat}"),
    }
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}

fn cv(xs: &[f64]) -> f64 {
    let (m, sd) = mean_sd(xs);
    sd / m
}

fn l1(a: &BTreeMap<Entity, u64>, b: &BTreeMap<Entity, u64>) -> f64 {
    let ta: u64 = a.values().sum();
    let tb: u64 = b.values().sum();
    let frac = |m: &BTreeMap<Entity, u64>, t: u64, k: &Entity| {
        if t == 0 {
            0.0
        } else {
            *m.get(k).unwrap_or(&0) as f64 / t as f64
        }
    };
    let keys: BTreeSet<&Entity> = a.keys().chain(b.keys()).collect();
    keys.into_iter()
        .map(|k| (frac(a, ta, k) - frac(b, tb, k)).abs())
        .sum()
}

fn mean_pairwise_l1(finals: &[&BTreeMap<Entity, u64>]) -> f64 {
    let mut sum = 0.0;
    let mut n = 0;
    for i in 0..finals.len() {
        for j in i + 1..finals.len() {
            sum += l1(finals[i], finals[j]);
            n += 1;
        }
    }
    sum / n as f64
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

fn time_avg_mass(c: &Comparison, arm: usize) -> Vec<f64> {
    c.trajectories[arm]
        .iter()
        .map(|tr| {
            let m: Vec<f64> = tr
                .observations
                .iter()
                .map(|o| o.total_mass as f64)
                .collect();
            m.iter().sum::<f64>() / m.len() as f64
        })
        .collect()
}

// --- criteria ----------------------------------------------------------------

fn c1_brick_conservation() -> Outcome {
    const RUNS: u64 = 100;
    const EVENTS: u64 = 100_000;
    let kinetics = KineticParams {
        k_diss: 0.1,
        ..KineticParams::default()
    };
    let init: BTreeMap<Species, u64> = all_strings(3).iter().map(|s| (sp(s), 20)).collect();
    let expected: u64 = init.iter().map(|(s, n)| s.len() as u64 * n).sum();
    let mut violations = 0;
    let mut total_events = 0;
    for run in 0..RUNS {
        // Chemistries grow with every new product; capping the product length
        // keeps 10^7 events within the time budget.
        let (p, l_max) = [(0.02, 6), (0.05, 6), (0.1, 5)][run as usize % 3];
        let mut params = ChemistryParams::new(p, run + 1);
        params.initial_max_len = 3;
        params.l_max_product = l_max;
        let chem = Chemistry::generate(params).unwrap();
        let mut sim =
            Simulator::new(chem, ReactorConfig::closed(), kinetics.clone(), &init, run).unwrap();
        for _ in 0..EVENTS {
            if sim.step().unwrap().is_none() {
                break;
            }
            total_events += 1;
        }
        let snap = sim.snapshot();
        let recount: u64 = snap.counts.iter().map(|(e, n)| e.len() as u64 * n).sum();
        if recount != expected || sim.total_mass() != expected {
            violations += 1;
        }
    }
    outcome(
        violations == 0,
        format!(
            "{RUNS} closed runs, {total_events} events, mass {expected}, {violations} violations"
        ),
    )
}

fn pure_death_reactor() -> (Chemistry, ReactorConfig, BTreeMap<Species, u64>) {
    let chem = Chemistry::generate(ChemistryParams::new(0.0, 1)).unwrap();
    let reactor = ReactorConfig::cstr(1.0, BTreeMap::new());
    (chem, reactor, BTreeMap::from([(sp("A"), 1000)]))
}

fn c2_ssa_validity() -> Outcome {
    let (chem, reactor, init) = pure_death_reactor();
    let mut at_one = Vec::new();
    for seed in 0..1000 {
        let mut opts = RunOptions::new(1.0, 1.0, seed);
        opts.record_counts = true;
        let tr = run_simulation(&chem, &reactor, &KineticParams::default(), &init, &opts).unwrap();
        let last = tr.observations.last().unwrap();
        assert_eq!(last.t, 1.0);
        let n = last
            .counts
            .as_ref()
            .unwrap()
            .get(&Entity::species("A"))
            .copied();
        at_one.push(n.unwrap_or(0) as f64);
    }
    let q = (-1f64).exp();
    let expect = 1000.0 * q;
    let sigma_mean = (1000.0 * q * (1.0 - q) / 1000.0).sqrt();
    let (m, _) = mean_sd(&at_one);
    let mean_ok = (m - expect).abs() <= 3.0 * sigma_mean;

    // tau scaled by the pre-event total propensity is Exponential(1).
    let mut scaled = Vec::with_capacity(10_000);
    for seed in 0..10 {
        let mut sim = Simulator::new(
            chem.clone(),
            reactor.clone(),
            KineticParams::default(),
            &init,
            10_000 + seed,
        )
        .unwrap();
        loop {
            let (t0, a0) = (sim.time(), sim.total_propensity());
            if sim.step().unwrap().is_none() {
                break;
            }
            scaled.push((sim.time() - t0) * a0);
        }
    }
    let ks = ks_exponential(&scaled, 1.0).unwrap();
    // Asymptotic two-sided critical value at 0.01.
    let critical = 1.6276 / (scaled.len() as f64).sqrt();
    let ks_ok = ks.p_value > 0.01 && ks.statistic < critical;
    outcome(
        mean_ok && ks_ok,
        format!(
            "mean n(1) = {m:.3} vs {expect:.3} ± {:.3} (3σ); KS N={} D={:.5} (crit {critical:.5}) p={:.3}",
            3.0 * sigma_mean,
            scaled.len(),
            ks.statistic,
            ks.p_value
        ),
    )
}

fn c3_chemistry() -> Outcome {
    let mut params = ChemistryParams::new(0.3, 42);
    params.initial_max_len = 2;
    params.l_max_product = 8;
    let newcomers = ["AAA", "ABB", "BABA", "BBBAB"];
    let base = Chemistry::generate(params.clone()).unwrap();
    let mut reference = None;
    let mut identical = true;
    let mut orders = 0;
    for perm in permutations(&[0, 1, 2, 3]) {
        let mut chem = base.clone();
        for &i in &perm {
            chem.expand(&sp(newcomers[i])).unwrap();
        }
        let keys = chem.catalysis_keys();
        orders += 1;
        match &reference {
            None => reference = Some(keys),
            Some(r) => identical &= *r == keys,
        }
    }
    // Oracle: the full set over the final registry, drawn test-side.
    let mut registry = all_strings(2);
    registry.extend(newcomers.iter().map(|s| s.to_string()));
    let mut oracle = BTreeSet::new();
    for r in conceivable_reactions(&registry, 8) {
        for cat in &registry {
            let e = format!("{r}{cat}");
            if oracle_draw(42, &e, 0.3) {
                oracle.insert(e.into_bytes());
            }
        }
    }
    let matches_oracle = reference.as_ref() == Some(&oracle);

    let mut freq_ok = true;
    let mut freq_detail = Vec::new();
    for p in [0.1, 0.5] {
        let mut params = ChemistryParams::new(p, 7);
        params.initial_max_len = 4;
        let chem = Chemistry::generate(params).unwrap();
        let registry = all_strings(4);
        let pairs = conceivable_reactions(&registry, 16).len() * registry.len();
        let hits = chem.catalyses().len();
        let stored: BTreeSet<String> = chem
            .sorted_catalyses()
            .iter()
            .map(|(t, c)| encode(t, c))
            .collect();
        let agree = stored.iter().all(|e| oracle_draw(7, e, p));
        let sigma = (pairs as f64 * p * (1.0 - p)).sqrt();
        let ok = pairs >= 10_000 && agree && (hits as f64 - pairs as f64 * p).abs() <= 3.0 * sigma;
        freq_ok &= ok;
        freq_detail.push(format!(
            "p={p}: {hits}/{pairs} = {:.4} (3σ {:.4})",
            hits as f64 / pairs as f64,
            3.0 * sigma / pairs as f64
        ));
    }
    // Diagnostic only: spread of the frequency across seeds versus the
    // binomial spread the criterion assumes.
    let registry = all_strings(4);
    let items: Vec<String> = conceivable_reactions(&registry, 16)
        .iter()
        .flat_map(|r| registry.iter().map(move |c| format!("{r}{c}")))
        .collect();
    let freqs: Vec<f64> = (1..=20)
        .map(|seed| {
            items.iter().filter(|e| oracle_draw(seed, e, 0.5)).count() as f64 / items.len() as f64
        })
        .collect();
    let (_, spread) = mean_sd(&freqs);
    let binomial = (0.25 / items.len() as f64).sqrt();
    outcome(
        identical && matches_oracle && freq_ok,
        format!(
            "{orders} discovery orders identical={identical}, equals oracle={matches_oracle}; {}; \
             p=0.5 frequency sd over seeds 1..=20 is {spread:.4} vs binomial {binomial:.4}",
            freq_detail.join("; ")
        ),
    )
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

fn c4_cstr_equilibrium(c: &Comparison) -> Outcome {
    let stationary = c
        .report
        .arm_a
        .runs
        .iter()
        .filter(|r| r.stationarity == Stationarity::Stationary)
        .count();
    let runs = c.report.arm_a.runs.len();
    let cv_a = cv(&time_avg_mass(c, 0));
    outcome(
        runs == 20 && stationary == runs && cv_a < 0.10,
        format!("{stationary}/{runs} stationary (tol 0.05), CV {cv_a:.4} < 0.10"),
    )
}

fn c5_divergence(c: &Comparison) -> Outcome {
    let cv_a = cv(&time_avg_mass(c, 0));
    let cv_b = cv(&time_avg_mass(c, 1));
    let finals = |arm: usize| -> Vec<&BTreeMap<Entity, u64>> {
        c.trajectories[arm]
            .iter()
            .map(|t| &t.final_state.counts)
            .collect()
    };
    let l1_a = mean_pairwise_l1(&finals(0));
    let l1_b = mean_pairwise_l1(&finals(1));
    outcome(
        cv_b > cv_a && l1_b > l1_a,
        format!("CV protocell {cv_b:.4} > CSTR {cv_a:.4}; mean pairwise L1 protocell {l1_b:.4} > CSTR {l1_a:.4}"),
    )
}

fn c6_max_length(c: &Comparison) -> Outcome {
    let max_lens = |arm: usize| -> Vec<f64> {
        c.trajectories[arm]
            .iter()
            .map(|t| {
                t.final_state
                    .counts
                    .iter()
                    .filter(|(e, n)| **n > 0 && matches!(e, Entity::Species(_)))
                    .map(|(e, _)| e.len())
                    .max()
                    .unwrap_or(0) as f64
            })
            .collect()
    };
    let same_seeds = c.report.arm_a.seeds == c.report.arm_b.seeds;
    let ma = median(&mut max_lens(0));
    let mb = median(&mut max_lens(1));
    outcome(
        same_seeds && mb > ma,
        format!("median final max length protocell {mb} > CSTR {ma} over matched seeds"),
    )
}

fn c7_trapped_pool(c: &Comparison, l_perm: usize) -> Outcome {
    let with_pool = c
        .report
        .arm_b
        .runs
        .iter()
        .filter(|r| !r.trapped_pool.is_empty())
        .count();
    let violations = c.trajectories[1]
        .iter()
        .filter(|t| t.stats.max_efflux_len > l_perm)
        .count();
    let effluxed = c.trajectories[1].iter().all(|t| {
        t.stats
            .by_kind
            .get(&EventKind::Efflux)
            .is_some_and(|n| *n > 0)
    });
    outcome(
        with_pool >= 1 && violations == 0 && c.report.arm_b.stats.trapping_violations == 0,
        format!(
            "{with_pool}/20 runs with a trapped catalyst pool; {violations} runs with efflux longer than {l_perm} (efflux observed in every run: {effluxed})"
        ),
    )
}

fn c8_degeneracy(cfg: &RunConfig) -> Outcome {
    let (k_out, feed) = match &cfg.reactor.mode {
        ReactorMode::Cstr { k_out, feed, .. } => (*k_out, feed.clone()),
        _ => unreachable!("reference arm A is a CSTR"),
    };
    let l_max = cfg.l_max_product.unwrap();
    // Complexes are at most two maximal species long.
    let membrane = ReactorConfig {
        mode: ReactorMode::Protocell {
            l_perm: 2 * l_max + 1,
            k_mem: k_out,
            external: feed,
        },
        hybrid_buffered: cfg.reactor.hybrid_buffered,
    };
    let scenario = cfg.scenario().unwrap();
    let mut opts = cfg.ensemble_options();
    opts.keep_trajectories = false;
    let c = compare_environments(&scenario, &cfg.reactor, &membrane, &cfg.seeds, &opts).unwrap();
    let a: Vec<f64> = c
        .report
        .arm_a
        .runs
        .iter()
        .map(|r| r.time_avg_mass)
        .collect();
    let b: Vec<f64> = c
        .report
        .arm_b
        .runs
        .iter()
        .map(|r| r.time_avg_mass)
        .collect();
    let test = paired_t_test(&a, &b).unwrap();
    let (ma, _) = mean_sd(&a);
    let (mb, _) = mean_sd(&b);
    outcome(
        test.p_value > 0.01,
        format!(
            "paired time-averaged mass CSTR {ma:.1} vs open protocell {mb:.1}: t={:.3}, p={:.3} > 0.01",
            test.statistic, test.p_value
        ),
    )
}

fn c9_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("cfg.json");
    std::fs::write(
        &config,
        r#"{"format_version": 1, "t_end": 500.0, "dt_obs": 5.0, "event_ledger": true}"#,
    )
    .unwrap();
    let run = |out: &PathBuf| {
        let status = Command::new(env!("CARGO_BIN_EXE_crs-sim"))
            .args(["run", "--seed", "11", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run(&a);
    run(&b);
    let mut same = true;
    let mut files = Vec::new();
    for name in ["trajectory.csv", "summary.json"] {
        let x = std::fs::read(a.join(name)).unwrap();
        let y = std::fs::read(b.join(name)).unwrap();
        same &= !x.is_empty() && x == y;
        files.push(format!("{name} {} bytes", x.len()));
    }
    outcome(
        same,
        format!(
            "two runs, seed 11: {} byte-identical={same}",
            files.join(", ")
        ),
    )
}

fn main() {
    let mut results: Vec<(u32, &str, Outcome, f64)> = Vec::new();
    let mut timed = |id, name, f: &mut dyn FnMut() -> Outcome| {
        let t0 = Instant::now();
        let o = f();
        let secs = t0.elapsed().as_secs_f64();
        println!(
            "criterion {id} [{}] {name}: {} ({secs:.1}s)",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        results.push((id, name, o, secs));
    };
    timed(1, "brick conservation", &mut c1_brick_conservation);
    timed(2, "SSA statistical validity", &mut c2_ssa_validity);
    timed(3, "chemistry reproducibility", &mut c3_chemistry);

    let cfg = reference_config();
    let l_perm = cfg.compare_reactor.l_perm().expect("arm B is a protocell");
    let t0 = Instant::now();
    let comparison = compare_environments(
        &cfg.scenario().unwrap(),
        &cfg.reactor,
        &cfg.compare_reactor,
        &cfg.seeds,
        &cfg.ensemble_options(),
    )
    .unwrap();
    println!(
        "reference comparison: 20 seeds x 2 arms in {:.1}s",
        t0.elapsed().as_secs_f64()
    );
    timed(4, "CSTR equilibrium", &mut || {
        c4_cstr_equilibrium(&comparison)
    });
    timed(5, "protocell divergence", &mut || {
        c5_divergence(&comparison)
    });
    timed(6, "max-length shift", &mut || c6_max_length(&comparison));
    timed(7, "trapped catalyst pool", &mut || {
        c7_trapped_pool(&comparison, l_perm)
    });
    timed(8, "membrane degeneracy", &mut || c8_degeneracy(&cfg));
    timed(9, "end-to-end determinism", &mut c9_determinism);

    let failed: Vec<u32> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {}/{} criteria passed",
        results.len() - failed.len(),
        results.len()
    );
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
