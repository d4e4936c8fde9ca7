//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::f64::consts::SQRT_2;
use std::time::{Duration, Instant};

use etbell::cli::simulate_report;
use etbell::config::parse_config;
use etbell::config_validator::{validate, Status};
use etbell::lhv::{model_beta_franson, paper_model, paper_tables, recompute_table_contributions, TABLE_I, TABLE_II};
use etbell::montecarlo::{estimate_chsh, run, RunConfig, Source, TallySet};
use etbell::phys_model::{qm_joint_probability, OutcomePair, PhaseConfig, SettingPair};
use etbell::postselect::{keep_pattern, KeepWitness, Scheme};
use etbell::strategy_search::{enumerate_strategies, extremal_beta, ConstraintClass};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, ok: String, fail: String) -> Outcome {
    if cond {
        Ok(ok)
    } else {
        Err(fail)
    }
}

fn quantum(n: u64, seed: u64, scheme: Scheme) -> RunConfig {
    RunConfig::new(n, seed, Source::Quantum { phases: PhaseConfig::optimal() }, scheme)
}

fn forged(p: f64, n: u64, seed: u64, scheme: Scheme) -> RunConfig {
    RunConfig::new(n, seed, Source::Lhv { model: paper_model(p).unwrap() }, scheme)
}

fn ac1_quantum_maximal_violation() -> Outcome {
    let started = Instant::now();
    let tallies = run(&quantum(1_000_000, 20_240_601, Scheme::Genuine)).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    let est = estimate_chsh(&tallies).map_err(|e| e.to_string())?;
    let tol = (4.0 * est.stderr).max(0.01);
    let dev = (est.beta_hat - 2.0 * SQRT_2).abs();
    let msg = format!(
        "beta_hat = {:.5} ± {:.5}, |dev| = {dev:.5} <= {tol:.5}, {:.2?}",
        est.beta_hat, est.stderr, elapsed
    );
    check(dev <= tol && elapsed < Duration::from_secs(10), msg.clone(), msg)
}

fn ac2_forgery_endpoints() -> Outcome {
    let mut betas = Vec::new();
    for p in [1.0, 0.0] {
        let est = estimate_chsh(&run(&forged(p, 100_000, 1, Scheme::Franson)).unwrap()).map_err(|e| e.to_string())?;
        betas.push(est.beta_hat);
    }
    let msg = format!("p=1 -> {:.3}, p=0 -> {:.3}", betas[0], betas[1]);
    check(betas == [4.0, -4.0], msg.clone(), msg)
}

fn ac3_quantum_mimicking_forgery() -> Outcome {
    let p = (2.0 + SQRT_2) / 4.0;
    let exact = model_beta_franson(&paper_model(p).unwrap()).map_err(|e| e.to_string())?;
    let exact_ok = (exact.chsh.beta - 2.0 * SQRT_2).abs() <= 1e-12;
    let tallies = run(&forged(p, 1_000_000, 3, Scheme::Franson)).unwrap();
    let phases = PhaseConfig::optimal();
    let mut worst: f64 = 0.0;
    for pair in SettingPair::ALL {
        let n = tallies.kept_on(pair) as f64;
        for o in OutcomePair::ALL {
            let expected = qm_joint_probability(&phases, pair, o);
            let freq = tallies.kept[pair.index()][o.index()] as f64 / n;
            let sigma = (expected * (1.0 - expected) / n).sqrt();
            worst = worst.max((freq - expected).abs() / sigma);
        }
    }
    let msg = format!(
        "exact beta - 2√2 = {:.1e}, worst kept-cell deviation {worst:.2} sigma",
        exact.chsh.beta - 2.0 * SQRT_2
    );
    check(exact_ok && worst <= 5.0, msg.clone(), msg)
}

fn z_score(count: u64, total: u64, p: f64) -> f64 {
    let n = total as f64;
    (count as f64 / n - p).abs() / (p * (1.0 - p) / n).sqrt()
}

fn worst_split_and_marginal(t: &TallySet) -> f64 {
    let total = t.total_trials();
    let mut worst: f64 = 0.0;
    for f in 0..4 {
        let n: u64 = t.slot_patterns.iter().map(|row| row[f]).sum();
        worst = worst.max(z_score(n, total, 0.25));
    }
    for s in 0..2 {
        for counts in [t.alice_signs[s], t.bob_signs[s]] {
            worst = worst.max(z_score(counts[0], counts[0] + counts[1], 0.5));
        }
    }
    // kept-only marginals per setting pair
    for k in 0..4 {
        let c = t.kept[k];
        let n = c.iter().sum();
        worst = worst.max(z_score(c[0] + c[1], n, 0.5));
        worst = worst.max(z_score(c[0] + c[2], n, 0.5));
    }
    worst
}

fn ac4_splits_and_marginals() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for scheme in [Scheme::Franson, Scheme::Genuine] {
        for (name, cfg) in [
            ("qm", quantum(400_000, 41, scheme)),
            ("lhv", forged((2.0 + SQRT_2) / 4.0, 400_000, 42, scheme)),
        ] {
            let w = worst_split_and_marginal(&run(&cfg).unwrap());
            ok &= w <= 5.0;
            lines.push(format!("{name}/{scheme} {w:.2}σ"));
        }
    }
    let msg = format!("worst deviation: {}", lines.join(", "));
    check(ok, msg.clone(), msg)
}

fn ac5_table_fidelity() -> Outcome {
    let mut cells = 0;
    let mut matched = 0;
    let mut sets_ok = true;
    for row in TABLE_I.iter().chain(&TABLE_II) {
        let expanded = row.expand();
        let got = recompute_table_contributions(&expanded[0]);
        for (g, w) in got.iter().zip(row.contributions) {
            cells += 1;
            matched += usize::from(*g == w);
        }
        sets_ok &= expanded.iter().all(|s| recompute_table_contributions(s) == row.contributions);
    }
    let (a, b) = paper_tables();
    let msg = format!("{matched}/{cells} cells, {} expanded sets consistent: {sets_ok}", a.len() + b.len());
    check(matched == 64 && cells == 64 && sets_ok, msg.clone(), msg)
}

fn ac6_enumeration_bounds() -> Outcome {
    let started = Instant::now();
    let franson = extremal_beta(ConstraintClass::PathSettingDependent, Scheme::Franson);
    let genuine = extremal_beta(ConstraintClass::PathFixed, Scheme::Genuine);
    let elapsed = started.elapsed();
    let msg = format!(
        "path-dependent/franson ({}, {}), path-fixed/genuine ({}, {}), {elapsed:.2?}",
        franson.max_beta, franson.min_beta, genuine.max_beta, genuine.min_beta
    );
    check(
        (franson.max_beta, franson.min_beta) == (4.0, -4.0)
            && (genuine.max_beta, genuine.min_beta) == (2.0, -2.0)
            && elapsed < Duration::from_secs(1),
        msg.clone(),
        msg,
    )
}

fn ac7_setting_independence() -> Outcome {
    let mut assertions = 0;
    let mut held = 0;
    for s in enumerate_strategies(ConstraintClass::PathFixed) {
        let k = keep_pattern(&s, Scheme::Genuine);
        for pair in SettingPair::ALL {
            assertions += 1;
            held += usize::from(k[pair.index()] == k[0]);
        }
    }
    let (table_i, _) = paper_tables();
    let witnesses = table_i[..8]
        .iter()
        .filter(|s| KeepWitness { set: **s, kept: keep_pattern(s, Scheme::Franson) }.rejected_only_at_bob_setting_1())
        .count();
    let msg = format!("{held}/{assertions} path-fixed keep assertions, {witnesses}/8 franson witnesses");
    check(assertions == 256 && held == 256 && witnesses == 8, msg.clone(), msg)
}

fn ac8_affinity() -> Outcome {
    let mut worst: f64 = 0.0;
    for p in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let b = model_beta_franson(&paper_model(p).unwrap()).unwrap().chsh.beta;
        worst = worst.max((b - (8.0 * p - 4.0)).abs());
    }
    let msg = format!("max |beta(p) - (8p - 4)| = {worst:.1e}");
    check(worst <= 1e-12, msg.clone(), msg)
}

fn ac9_config_points() -> Outcome {
    let text = include_str!("data/genuine_1km.toml");
    let geometry = parse_config(text).map_err(|e| e.to_string())?.geometry.ok_or("no geometry")?;
    let checks = validate(&geometry).map_err(|e| e.to_string())?;
    let status = |id: &str| checks.iter().find(|c| c.id == id).map(|c| c.status);
    let dead = status("III'") == Some(Status::Pass);
    let switching = status("V'-switching") == Some(Status::Pass);
    let separation = status("V'-separation") == Some(Status::Pass);
    let msg = format!("1 ns / 30 cm: {dead}, 300 kHz / 1 km: switching {switching} separation {separation}");
    check(dead && switching && separation, msg.clone(), msg)
}

fn ac10_determinism() -> Outcome {
    let a = simulate_report(quantum(200_000, 99, Scheme::Genuine), Some(1), false).map_err(|e| e.to_string())?;
    let b = simulate_report(quantum(200_000, 99, Scheme::Genuine), Some(6), false).map_err(|e| e.to_string())?;
    let (ja, jb) = (a.to_json(), b.to_json());
    let msg = format!("1 vs 6 threads: {} bytes, identical = {}", ja.len(), ja == jb);
    check(ja == jb && a.to_csv() == b.to_csv(), msg.clone(), msg)
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("AC1 quantum maximal violation", ac1_quantum_maximal_violation),
        ("AC2 LHV forgery endpoints", ac2_forgery_endpoints),
        ("AC3 quantum-mimicking forgery", ac3_quantum_mimicking_forgery),
        ("AC4 event splits and marginals", ac4_splits_and_marginals),
        ("AC5 table fidelity", ac5_table_fidelity),
        ("AC6 enumeration bounds", ac6_enumeration_bounds),
        ("AC7 setting independence", ac7_setting_independence),
        ("AC8 affinity of beta(p)", ac8_affinity),
        ("AC9 config validation", ac9_config_points),
        ("AC10 determinism", ac10_determinism),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        match f() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
