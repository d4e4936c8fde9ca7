//! Routing of photons to detectors and the two postselection rules.
//!
//! In the Franson layout photon 1 always lands on Alice's detectors (left)
//! and photon 2 on Bob's (right); events are kept when both detections fall
//! in the same time slot. In the genuine layout the long arm of each photon
//! ends on the *other* side, so an S/L mismatch puts both detections on one
//! side and is rejected locally.
//!
//! When a photon crosses to the other side, its instruction sign is applied
//! at whichever detector pair it reaches. Such events are always rejected,
//! so this convention never reaches a correlator.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lhv::{evaluate_set, InstructionSet, LhvModel, Path};
use crate::phys_model::{SettingPair, Sign};
use crate::strategy_search::ConstraintClass;

/// Postselection layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Franson,
    Genuine,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Franson => "franson",
            Scheme::Genuine => "genuine",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// A single click.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DetectionEvent {
    pub side: Side,
    pub detector_sign: Sign,
    /// 0 for `t`, 1 for `t + ΔL/c`.
    pub time_slot: u8,
}

pub fn route_franson(path1: Path, path2: Path, signs: (Sign, Sign)) -> (DetectionEvent, DetectionEvent) {
    (
        DetectionEvent { side: Side::Left, detector_sign: signs.0, time_slot: path1.slot() },
        DetectionEvent { side: Side::Right, detector_sign: signs.1, time_slot: path2.slot() },
    )
}

fn genuine_side(photon: usize, path: Path) -> Side {
    match (photon, path) {
        (1, Path::S) | (2, Path::L) => Side::Left,
        _ => Side::Right,
    }
}

pub fn route_genuine(path1: Path, path2: Path, signs: (Sign, Sign)) -> (DetectionEvent, DetectionEvent) {
    (
        DetectionEvent { side: genuine_side(1, path1), detector_sign: signs.0, time_slot: path1.slot() },
        DetectionEvent { side: genuine_side(2, path2), detector_sign: signs.1, time_slot: path2.slot() },
    )
}

pub fn route(scheme: Scheme, path1: Path, path2: Path, signs: (Sign, Sign)) -> (DetectionEvent, DetectionEvent) {
    match scheme {
        Scheme::Franson => route_franson(path1, path2, signs),
        Scheme::Genuine => route_genuine(path1, path2, signs),
    }
}

fn slot_path(slot: u8) -> Option<Path> {
    match slot {
        0 => Some(Path::S),
        1 => Some(Path::L),
        _ => None,
    }
}

/// Keep predicate. Fails when the events could not have come from the
/// router of `scheme`.
pub fn keep(e1: &DetectionEvent, e2: &DetectionEvent, scheme: Scheme) -> Result<bool> {
    let mismatch = || Error::SchemeMismatch(scheme);
    let p1 = slot_path(e1.time_slot).ok_or_else(mismatch)?;
    let p2 = slot_path(e2.time_slot).ok_or_else(mismatch)?;
    match scheme {
        Scheme::Franson => {
            if e1.side != Side::Left || e2.side != Side::Right {
                return Err(mismatch());
            }
            Ok(e1.time_slot == e2.time_slot)
        }
        Scheme::Genuine => {
            if e1.side != genuine_side(1, p1) || e2.side != genuine_side(2, p2) {
                return Err(mismatch());
            }
            let by_side = e1.side != e2.side;
            let by_slot = e1.time_slot == e2.time_slot;
            assert_eq!(by_side, by_slot, "genuine routing: side and slot rules disagree");
            Ok(by_side)
        }
    }
}

/// One simulated trial after routing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub pair: SettingPair,
    pub event1: DetectionEvent,
    pub event2: DetectionEvent,
    pub kept: bool,
    pub scheme: Scheme,
}

impl TrialOutcome {
    pub fn new(pair: SettingPair, event1: DetectionEvent, event2: DetectionEvent, scheme: Scheme) -> Result<Self> {
        let kept = keep(&event1, &event2, scheme)?;
        Ok(TrialOutcome { pair, event1, event2, kept, scheme })
    }

    /// Route photons by path and sign and apply the scheme's keep rule.
    pub fn from_paths(pair: SettingPair, paths: (Path, Path), signs: (Sign, Sign), scheme: Scheme) -> Self {
        let (e1, e2) = route(scheme, paths.0, paths.1, signs);
        TrialOutcome::new(pair, e1, e2, scheme).expect("router output satisfies its own scheme")
    }
}

/// Keep pattern of a single set across the four setting pairs.
pub fn keep_pattern(set: &InstructionSet, scheme: Scheme) -> [bool; 4] {
    SettingPair::ALL.map(|pair| {
        let (c1, c2) = evaluate_set(set, pair);
        TrialOutcome::from_paths(pair, (c1.path, c2.path), (c1.sign, c2.sign), scheme).kept
    })
}

/// A set whose keep status changes with the settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeepWitness {
    pub set: InstructionSet,
    pub kept: [bool; 4],
}

impl KeepWitness {
    /// True when the set is rejected exactly when Bob uses setting 1.
    pub fn rejected_only_at_bob_setting_1(&self) -> bool {
        SettingPair::ALL.iter().all(|p| self.kept[p.index()] == (p.bob() == 0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndependenceReport {
    pub scheme: Scheme,
    pub class: ConstraintClass,
    pub keep_probability: [f64; 4],
    pub max_pairwise_difference: f64,
    /// Supported sets whose keep status depends on the setting pair.
    pub witnesses: Vec<KeepWitness>,
    /// Supported sets that fall outside `class`.
    pub outside_class: usize,
}

impl IndependenceReport {
    pub fn setting_independent(&self) -> bool {
        self.witnesses.is_empty()
    }
}

/// Keep probability per setting pair together with the per-set witnesses
/// of setting-dependent selection.
pub fn setting_independence_check(model: &LhvModel, scheme: Scheme, class: ConstraintClass) -> IndependenceReport {
    let mut keep_probability = [0.0; 4];
    let mut witnesses = Vec::new();
    let mut outside_class = 0;
    for (set, w) in model.iter() {
        if w <= 0.0 {
            continue;
        }
        if !class.contains(set) {
            outside_class += 1;
        }
        let kept = keep_pattern(set, scheme);
        for (acc, k) in keep_probability.iter_mut().zip(kept) {
            if k {
                *acc += w;
            }
        }
        if kept.iter().any(|&k| k != kept[0]) {
            witnesses.push(KeepWitness { set: *set, kept });
        }
    }
    let mut max_pairwise_difference: f64 = 0.0;
    for a in keep_probability {
        for b in keep_probability {
            max_pairwise_difference = max_pairwise_difference.max((a - b).abs());
        }
    }
    IndependenceReport { scheme, class, keep_probability, max_pairwise_difference, witnesses, outside_class }
}
