//! Brute-force search over deterministic local strategies.
//!
//! Two locality classes are modelled. With [`ConstraintClass::PathSettingDependent`]
//! the S/L decision of each photon may follow its local setting, which is
//! what a Franson layout allows. With [`ConstraintClass::PathFixed`] only the
//! ±1 decision may depend on the setting; this is the modelling translation
//! of the light-cone argument for the genuine layout, not a derivation from
//! spacetime geometry.
//!
//! Under `PathFixed` the kept sub-ensemble is the same for every setting
//! pair, so postselected correlators are linear in the mixture weights of the
//! kept strategies and the extremes sit on pure strategies. Under
//! `PathSettingDependent` every pure strategy that survives on all four
//! pairs has equal paths everywhere (β = ±2), and the forging family is
//! checked as a mixture; its ±4 meets the algebraic bound |β| ≤ 4.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lhv::{evaluate_model, paper_model, solve_p_for_beta, ExactEvaluation, InstructionSet, LhvModel};
use crate::montecarlo::{estimate_chsh, run, ChshEstimate, RunConfig, Source};
use crate::phys_model::{qm_joint_probability, OutcomePair, PhaseConfig, SettingPair};
use crate::postselect::{keep_pattern, Scheme};

/// Largest |β| any assignment of ±1 correlators can reach.
pub const ALGEBRAIC_BOUND: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintClass {
    /// Path and sign may both depend on the local setting (all 256 sets).
    #[serde(rename = "path-dependent")]
    PathSettingDependent,
    /// Path fixed per photon, sign may depend on the setting (64 sets).
    PathFixed,
}

impl ConstraintClass {
    pub fn contains(&self, set: &InstructionSet) -> bool {
        match self {
            ConstraintClass::PathSettingDependent => true,
            ConstraintClass::PathFixed => set.is_path_fixed(),
        }
    }
}

impl fmt::Display for ConstraintClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConstraintClass::PathSettingDependent => "path-dependent",
            ConstraintClass::PathFixed => "path-fixed",
        })
    }
}

pub fn enumerate_strategies(class: ConstraintClass) -> Vec<InstructionSet> {
    InstructionSet::all().filter(|s| class.contains(s)).collect()
}

/// Strategy (or mixture) attaining an extreme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Witness {
    Pure { set: InstructionSet },
    /// The two-table forging family at mixture parameter `p`.
    ForgingFamily { p: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extreme {
    pub beta: f64,
    pub witness: Witness,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub class: ConstraintClass,
    pub scheme: Scheme,
    pub max_beta: f64,
    pub min_beta: f64,
    pub argmax: Witness,
    pub argmin: Witness,
    /// Strategies in the class.
    pub strategies: usize,
    /// Pure strategies with at least one kept event on every pair.
    pub feasible: usize,
    /// Pure strategies with an empty kept ensemble on some pair.
    pub excluded: usize,
    /// Extremes over pure strategies alone.
    pub vertex_max: f64,
    pub vertex_min: f64,
    /// True when every strategy in the class has the same keep status on
    /// all four setting pairs.
    pub selection_setting_independent: bool,
}

fn pure_beta(set: &InstructionSet, scheme: Scheme) -> Result<f64> {
    Ok(evaluate_model(&LhvModel::deterministic(*set), scheme)?.chsh.beta)
}

/// Extreme β over mixtures of the class under the scheme's postselection.
pub fn extremal_beta(class: ConstraintClass, scheme: Scheme) -> SearchResult {
    let strategies = enumerate_strategies(class);
    let evaluated: Vec<(InstructionSet, Option<f64>, bool)> = strategies
        .par_iter()
        .map(|s| {
            let beta = match pure_beta(s, scheme) {
                Ok(b) => Some(b),
                Err(Error::NoKeptEvents(_)) => None,
                Err(e) => panic!("unexpected evaluation failure for {s}: {e}"),
            };
            let kept = keep_pattern(s, scheme);
            (*s, beta, kept.iter().all(|&k| k == kept[0]))
        })
        .collect();

    let selection_setting_independent = evaluated.iter().all(|(_, _, ind)| *ind);
    let feasible: Vec<(InstructionSet, f64)> =
        evaluated.iter().filter_map(|(s, b, _)| b.map(|b| (*s, b))).collect();

    // strict comparisons keep the lowest-index strategy on ties
    let mut best_max: Option<Extreme> = None;
    let mut best_min: Option<Extreme> = None;
    for (set, beta) in &feasible {
        if best_max.as_ref().is_none_or(|e| *beta > e.beta) {
            best_max = Some(Extreme { beta: *beta, witness: Witness::Pure { set: *set } });
        }
        if best_min.as_ref().is_none_or(|e| *beta < e.beta) {
            best_min = Some(Extreme { beta: *beta, witness: Witness::Pure { set: *set } });
        }
    }
    let vertex_max = best_max.as_ref().map_or(f64::NAN, |e| e.beta);
    let vertex_min = best_min.as_ref().map_or(f64::NAN, |e| e.beta);

    if !selection_setting_independent {
        for p in [1.0, 0.0] {
            let model = paper_model(p).expect("p in range");
            if !model.support().all(|s| class.contains(s)) {
                continue;
            }
            let Ok(eval) = evaluate_model(&model, scheme) else { continue };
            let beta = eval.chsh.beta;
            if best_max.as_ref().is_none_or(|e| beta > e.beta) {
                best_max = Some(Extreme { beta, witness: Witness::ForgingFamily { p } });
            }
            if best_min.as_ref().is_none_or(|e| beta < e.beta) {
                best_min = Some(Extreme { beta, witness: Witness::ForgingFamily { p } });
            }
        }
    }

    let max = best_max.expect("every class contains a feasible strategy");
    let min = best_min.expect("every class contains a feasible strategy");
    SearchResult {
        class,
        scheme,
        max_beta: max.beta,
        min_beta: min.beta,
        argmax: max.witness,
        argmin: min.witness,
        strategies: strategies.len(),
        feasible: feasible.len(),
        excluded: strategies.len() - feasible.len(),
        vertex_max,
        vertex_min,
        selection_setting_independent,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FakeViolationReport {
    pub target: f64,
    pub p: f64,
    pub exact: ExactEvaluation,
    pub estimate: ChshEstimate,
    pub sampled_keep_fraction: [f64; 4],
    /// Largest gap between the exact kept joint distribution and the
    /// quantum prediction at the optimal phases.
    pub max_deviation_from_optimal_quantum: f64,
}

/// Builds the forging model for `target`, evaluates it exactly and by a
/// Franson-scheme Monte Carlo run.
pub fn verify_fake_violation(target: f64, trials: u64, seed: u64) -> Result<FakeViolationReport> {
    let p = solve_p_for_beta(target)?;
    let model = paper_model(p)?;
    let exact = evaluate_model(&model, Scheme::Franson)?;
    let config = RunConfig::new(trials, seed, Source::Lhv { model }, Scheme::Franson);
    let tallies = run(&config)?;
    let estimate = estimate_chsh(&tallies)?;
    let phases = PhaseConfig::optimal();
    let max_deviation_from_optimal_quantum = SettingPair::ALL
        .iter()
        .flat_map(|&pair| {
            let exact = &exact;
            OutcomePair::ALL.iter().map(move |&o| {
                (exact.kept_joint[pair.index()][o.index()] - qm_joint_probability(&phases, pair, o)).abs()
            })
        })
        .fold(0.0, f64::max);
    Ok(FakeViolationReport {
        target,
        p,
        exact,
        estimate,
        sampled_keep_fraction: tallies.keep_fractions(),
        max_deviation_from_optimal_quantum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lhv::paper_tables;
    use std::f64::consts::SQRT_2;

    #[test]
    fn class_sizes() {
        assert_eq!(enumerate_strategies(ConstraintClass::PathSettingDependent).len(), 256);
        let fixed = enumerate_strategies(ConstraintClass::PathFixed);
        assert_eq!(fixed.len(), 64);
        assert!(fixed.iter().all(|s| s.alice[0].path == s.alice[1].path && s.bob[0].path == s.bob[1].path));
        let all = enumerate_strategies(ConstraintClass::PathSettingDependent);
        let (a, b) = paper_tables();
        assert!(a.iter().chain(&b).all(|s| all.contains(s)));
    }

    #[test]
    fn franson_path_dependent_reaches_four() {
        let r = extremal_beta(ConstraintClass::PathSettingDependent, Scheme::Franson);
        assert_eq!((r.max_beta, r.min_beta), (4.0, -4.0));
        assert_eq!(r.argmax, Witness::ForgingFamily { p: 1.0 });
        assert_eq!(r.argmin, Witness::ForgingFamily { p: 0.0 });
        assert_eq!((r.vertex_max, r.vertex_min), (2.0, -2.0));
        assert!(!r.selection_setting_independent);
        // only sets with all four paths equal survive every pair: 2 path choices x 16 signs
        assert_eq!(r.feasible, 32);
        assert_eq!(r.excluded, 224);
    }

    #[test]
    fn path_fixed_restores_bound() {
        for scheme in [Scheme::Genuine, Scheme::Franson] {
            let r = extremal_beta(ConstraintClass::PathFixed, scheme);
            assert_eq!((r.max_beta, r.min_beta), (2.0, -2.0), "{scheme}");
            assert!(r.selection_setting_independent);
            assert!(matches!(r.argmax, Witness::Pure { .. }));
            assert_eq!(r.feasible, 32);
            assert_eq!(r.excluded, 32);
        }
    }

    #[test]
    fn path_fixed_keep_status_is_setting_independent() {
        for s in enumerate_strategies(ConstraintClass::PathFixed) {
            for scheme in [Scheme::Genuine, Scheme::Franson] {
                let k = keep_pattern(&s, scheme);
                assert!(k.iter().all(|&x| x == k[0]), "{s}");
            }
        }
    }

    #[test]
    fn order_independent() {
        let a = extremal_beta(ConstraintClass::PathFixed, Scheme::Genuine);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| extremal_beta(ConstraintClass::PathFixed, Scheme::Genuine));
        assert_eq!(a, b);
        // reverse scan gives the same extreme values
        let mut rev = enumerate_strategies(ConstraintClass::PathFixed);
        rev.reverse();
        let betas: Vec<f64> = rev.iter().filter_map(|s| pure_beta(s, Scheme::Genuine).ok()).collect();
        assert_eq!(betas.iter().cloned().fold(f64::MIN, f64::max), a.max_beta);
        assert_eq!(betas.iter().cloned().fold(f64::MAX, f64::min), a.min_beta);
    }

    #[test]
    fn fake_violation_targets() {
        let r = verify_fake_violation(3.0, 20_000, 5).unwrap();
        assert!((r.p - 0.875).abs() < 1e-15);
        assert!((r.exact.chsh.beta - 3.0).abs() < 1e-12);

        let r = verify_fake_violation(2.0 * SQRT_2, 20_000, 5).unwrap();
        assert!((r.p - (2.0 + SQRT_2) / 4.0).abs() < 1e-15);
        assert!(r.max_deviation_from_optimal_quantum < 1e-12);

        let r = verify_fake_violation(0.0, 20_000, 5).unwrap();
        assert_eq!(r.p, 0.5);
        assert!(r.exact.chsh.beta.abs() < 1e-12);
        assert!((r.estimate.beta_hat - r.exact.chsh.beta).abs() <= 4.0 * r.estimate.stderr);

        assert!(verify_fake_violation(5.0, 10, 0).is_err());
    }
}
