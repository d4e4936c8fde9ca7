//! Quantum-mechanical predictions for the two-photon interferometer.
//!
//! For coincident (kept) events the joint distribution is
//! `P(A_i = a, B_j = b) = ¼ [1 + a·b·cos(φ_Ai + φ_Bj)]`, the single-detector
//! marginals are flat, and the CHSH combination is
//! `β = ⟨A0B0⟩ + ⟨A0B1⟩ + ⟨A1B0⟩ − ⟨A1B1⟩`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Detector sign, `+1` or `−1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Plus, Sign::Minus];

    pub fn value(self) -> i32 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn from_value(v: i32) -> Result<Self> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            _ => Err(invalid(format!("sign must be +1 or -1, got {v}"))),
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    /// 0 for `+`, 1 for `−`.
    pub fn index(self) -> usize {
        match self {
            Sign::Plus => 0,
            Sign::Minus => 1,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

/// Which observer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Party {
    Alice,
    Bob,
}

/// Local setting indices `(i, j)` for Alice and Bob.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "(u8, u8)", into = "(u8, u8)")]
pub struct SettingPair {
    alice: u8,
    bob: u8,
}

impl SettingPair {
    /// The four pairs in CHSH order: (0,0), (0,1), (1,0), (1,1).
    pub const ALL: [SettingPair; 4] = [
        SettingPair { alice: 0, bob: 0 },
        SettingPair { alice: 0, bob: 1 },
        SettingPair { alice: 1, bob: 0 },
        SettingPair { alice: 1, bob: 1 },
    ];

    pub fn new(alice: u8, bob: u8) -> Result<Self> {
        if alice > 1 || bob > 1 {
            return Err(invalid(format!(
                "setting indices must be 0 or 1, got ({alice}, {bob})"
            )));
        }
        Ok(SettingPair { alice, bob })
    }

    pub fn alice(self) -> usize {
        self.alice as usize
    }

    pub fn bob(self) -> usize {
        self.bob as usize
    }

    pub fn setting(self, party: Party) -> usize {
        match party {
            Party::Alice => self.alice(),
            Party::Bob => self.bob(),
        }
    }

    /// Position in [`SettingPair::ALL`].
    pub fn index(self) -> usize {
        2 * self.alice() + self.bob()
    }

    pub fn from_index(index: usize) -> Result<Self> {
        SettingPair::ALL
            .get(index)
            .copied()
            .ok_or_else(|| invalid(format!("setting pair index {index} out of range")))
    }
}

impl TryFrom<(u8, u8)> for SettingPair {
    type Error = crate::error::Error;

    fn try_from((a, b): (u8, u8)) -> Result<Self> {
        SettingPair::new(a, b)
    }
}

impl From<SettingPair> for (u8, u8) {
    fn from(p: SettingPair) -> Self {
        (p.alice, p.bob)
    }
}

impl fmt::Display for SettingPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(A{}, B{})", self.alice, self.bob)
    }
}

/// Outcome signs `(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OutcomePair {
    pub a: Sign,
    pub b: Sign,
}

impl OutcomePair {
    /// Order used for tallies: (+,+), (+,−), (−,+), (−,−).
    pub const ALL: [OutcomePair; 4] = [
        OutcomePair { a: Sign::Plus, b: Sign::Plus },
        OutcomePair { a: Sign::Plus, b: Sign::Minus },
        OutcomePair { a: Sign::Minus, b: Sign::Plus },
        OutcomePair { a: Sign::Minus, b: Sign::Minus },
    ];

    pub fn new(a: Sign, b: Sign) -> Self {
        OutcomePair { a, b }
    }

    pub fn index(self) -> usize {
        2 * self.a.index() + self.b.index()
    }

    pub fn product(self) -> i32 {
        self.a.value() * self.b.value()
    }
}

/// Reduce an angle to `(−π, π]`.
pub fn reduce_angle(x: f64) -> f64 {
    let mut r = x.rem_euclid(TAU);
    if r > PI {
        r -= TAU;
    }
    r
}

/// Analyzer phases `φ_A0, φ_A1, φ_B0, φ_B1`, stored in `(−π, π]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct PhaseConfig {
    alice: [f64; 2],
    bob: [f64; 2],
}

impl PhaseConfig {
    pub fn new(phi_a0: f64, phi_a1: f64, phi_b0: f64, phi_b1: f64) -> Result<Self> {
        let all = [phi_a0, phi_a1, phi_b0, phi_b1];
        if let Some(bad) = all.iter().find(|x| !x.is_finite()) {
            return Err(invalid(format!("phase must be finite, got {bad}")));
        }
        Ok(PhaseConfig {
            alice: [reduce_angle(phi_a0), reduce_angle(phi_a1)],
            bob: [reduce_angle(phi_b0), reduce_angle(phi_b1)],
        })
    }

    /// `(0, π/2, −π/4, π/4)`, which attains `β = 2√2`.
    pub fn optimal() -> Self {
        PhaseConfig {
            alice: [0.0, FRAC_PI_2],
            bob: [-FRAC_PI_4, FRAC_PI_4],
        }
    }

    pub fn alice(&self, setting: usize) -> f64 {
        self.alice[setting]
    }

    pub fn bob(&self, setting: usize) -> f64 {
        self.bob[setting]
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.alice[0], self.alice[1], self.bob[0], self.bob[1]]
    }

    /// Parse `a0,a1,b0,b1` (radians).
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 4 {
            return Err(invalid(format!(
                "expected 4 comma-separated phases, got {}",
                parts.len()
            )));
        }
        let mut v = [0.0; 4];
        for (slot, part) in v.iter_mut().zip(&parts) {
            *slot = part
                .parse::<f64>()
                .map_err(|e| invalid(format!("bad phase {part:?}: {e}")))?;
        }
        PhaseConfig::new(v[0], v[1], v[2], v[3])
    }
}

impl TryFrom<[f64; 4]> for PhaseConfig {
    type Error = crate::error::Error;

    fn try_from(v: [f64; 4]) -> Result<Self> {
        PhaseConfig::new(v[0], v[1], v[2], v[3])
    }
}

impl From<PhaseConfig> for [f64; 4] {
    fn from(p: PhaseConfig) -> Self {
        p.as_array()
    }
}

/// The four correlators and their CHSH combination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshValue {
    /// `⟨A_iB_j⟩` in [`SettingPair::ALL`] order.
    pub components: [f64; 4],
    pub beta: f64,
}

impl ChshValue {
    pub fn from_components(components: [f64; 4]) -> Self {
        let [c00, c01, c10, c11] = components;
        ChshValue {
            components,
            beta: c00 + c01 + c10 - c11,
        }
    }

    pub fn correlator(&self, pair: SettingPair) -> f64 {
        self.components[pair.index()]
    }
}

pub fn qm_joint_probability(phases: &PhaseConfig, pair: SettingPair, outcome: OutcomePair) -> f64 {
    let phase = phases.alice(pair.alice()) + phases.bob(pair.bob());
    0.25 * (1.0 + f64::from(outcome.product()) * phase.cos())
}

/// Single-detector marginal, summed from the joint distribution with the
/// other party held at setting 0.
pub fn qm_marginal(phases: &PhaseConfig, party: Party, setting: usize, sign: Sign) -> f64 {
    qm_marginal_given(phases, party, setting, 0, sign)
}

/// Marginal with an explicit setting for the other party.
pub fn qm_marginal_given(
    phases: &PhaseConfig,
    party: Party,
    setting: usize,
    other_setting: usize,
    sign: Sign,
) -> f64 {
    let (pair, outcomes): (SettingPair, Vec<OutcomePair>) = match party {
        Party::Alice => (
            SettingPair::new(setting as u8, other_setting as u8).expect("setting index"),
            Sign::BOTH.iter().map(|&b| OutcomePair::new(sign, b)).collect(),
        ),
        Party::Bob => (
            SettingPair::new(other_setting as u8, setting as u8).expect("setting index"),
            Sign::BOTH.iter().map(|&a| OutcomePair::new(a, sign)).collect(),
        ),
    };
    outcomes
        .into_iter()
        .map(|o| qm_joint_probability(phases, pair, o))
        .sum()
}

pub fn qm_correlator(phases: &PhaseConfig, pair: SettingPair) -> f64 {
    (phases.alice(pair.alice()) + phases.bob(pair.bob())).cos()
}

pub fn qm_chsh(phases: &PhaseConfig) -> ChshValue {
    ChshValue::from_components(SettingPair::ALL.map(|p| qm_correlator(phases, p)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::SQRT_2;

    const TOL: f64 = 1e-12;

    fn pair(i: u8, j: u8) -> SettingPair {
        SettingPair::new(i, j).unwrap()
    }

    #[test]
    fn joint_probability_examples() {
        let ph = PhaseConfig::optimal();
        let pp = OutcomePair::new(Sign::Plus, Sign::Plus);
        assert!((qm_joint_probability(&ph, pair(0, 0), pp) - (2.0 + SQRT_2) / 8.0).abs() < TOL);
        assert!((qm_joint_probability(&ph, pair(1, 1), pp) - (2.0 - SQRT_2) / 8.0).abs() < TOL);

        let ortho = PhaseConfig::new(FRAC_PI_2, 0.0, 0.0, 0.0).unwrap();
        let pm = OutcomePair::new(Sign::Plus, Sign::Minus);
        assert!((qm_joint_probability(&ortho, pair(0, 0), pm) - 0.25).abs() < TOL);
    }

    #[test]
    fn marginal_examples() {
        let ph = PhaseConfig::optimal();
        assert!((qm_marginal(&ph, Party::Alice, 0, Sign::Plus) - 0.5).abs() < TOL);
        assert!((qm_marginal(&ph, Party::Bob, 1, Sign::Minus) - 0.5).abs() < TOL);
        for j in 0..2 {
            assert!((qm_marginal_given(&ph, Party::Alice, 1, j, Sign::Plus) - 0.5).abs() < TOL);
        }
    }

    #[test]
    fn correlator_examples() {
        let ph = PhaseConfig::optimal();
        assert!((qm_correlator(&ph, pair(0, 0)) - SQRT_2 / 2.0).abs() < TOL);
        assert!((qm_correlator(&ph, pair(1, 1)) + SQRT_2 / 2.0).abs() < TOL);
        let zero = PhaseConfig::new(0.3, 0.0, -0.3, 0.0).unwrap();
        assert!((qm_correlator(&zero, pair(0, 0)) - 1.0).abs() < TOL);
    }

    #[test]
    fn chsh_examples() {
        assert!((qm_chsh(&PhaseConfig::optimal()).beta - 2.0 * SQRT_2).abs() < TOL);
        assert!((qm_chsh(&PhaseConfig::new(0.0, 0.0, 0.0, 0.0).unwrap()).beta - 2.0).abs() < TOL);
        // Swapping Bob's phases: c00 = cos(π/4), c01 = cos(−π/4), c10 = cos(3π/4),
        // c11 = cos(π/4), so β = √2/2 + √2/2 − √2/2 − √2/2 = 0.
        let swapped = PhaseConfig::new(0.0, FRAC_PI_2, FRAC_PI_4, -FRAC_PI_4).unwrap();
        assert!(qm_chsh(&swapped).beta.abs() < TOL);
    }

    #[test]
    fn phases_are_reduced() {
        let p = PhaseConfig::new(3.0 * PI, -PI, TAU, 0.5).unwrap();
        let [a0, a1, b0, b1] = p.as_array();
        assert!((a0 - PI).abs() < 1e-12);
        assert!((a1 - PI).abs() < 1e-12);
        assert!(b0.abs() < 1e-12);
        assert_eq!(b1, 0.5);
        assert!(PhaseConfig::new(f64::NAN, 0.0, 0.0, 0.0).is_err());
        assert!(PhaseConfig::new(0.0, f64::INFINITY, 0.0, 0.0).is_err());
    }

    #[test]
    fn phase_parsing() {
        let p = PhaseConfig::parse("0, 1.25,-0.7854,0.7854").unwrap();
        assert_eq!(p.as_array()[1], 1.25);
        assert!(PhaseConfig::parse("0,1,2").is_err());
        assert!(PhaseConfig::parse("0,1,2,x").is_err());
        assert!(PhaseConfig::parse("0,1,2,inf").is_err());
    }

    #[test]
    fn setting_pair_rejects_bad_indices() {
        assert!(SettingPair::new(2, 0).is_err());
        assert!(SettingPair::new(0, 7).is_err());
        for (k, p) in SettingPair::ALL.iter().enumerate() {
            assert_eq!(p.index(), k);
            assert_eq!(SettingPair::from_index(k).unwrap(), *p);
        }
    }

    #[test]
    fn tsirelson_on_grid() {
        let n = 24;
        let step = TAU / n as f64;
        let mut sup: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let ph = PhaseConfig::new(
                            a as f64 * step,
                            b as f64 * step,
                            c as f64 * step - PI / 8.0,
                            d as f64 * step + PI / 8.0,
                        )
                        .unwrap();
                        sup = sup.max(qm_chsh(&ph).beta.abs());
                    }
                }
            }
        }
        assert!(sup <= 2.0 * SQRT_2 + 1e-9, "sup = {sup}");
        assert!(sup > 2.8, "grid should come close to the bound, sup = {sup}");
    }

    proptest! {
        #[test]
        fn normalization_and_no_signaling(
            a0 in -10.0f64..10.0, a1 in -10.0f64..10.0,
            b0 in -10.0f64..10.0, b1 in -10.0f64..10.0,
        ) {
            let ph = PhaseConfig::new(a0, a1, b0, b1).unwrap();
            for p in SettingPair::ALL {
                let probs = OutcomePair::ALL.map(|o| qm_joint_probability(&ph, p, o));
                prop_assert!(probs.iter().all(|&x| x >= 0.0));
                prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() < TOL);
                let c: f64 = OutcomePair::ALL
                    .iter()
                    .zip(probs)
                    .map(|(o, pr)| f64::from(o.product()) * pr)
                    .sum();
                prop_assert!((c - qm_correlator(&ph, p)).abs() < TOL);
            }
            for s in 0..2 {
                for sign in Sign::BOTH {
                    let a_0 = qm_marginal_given(&ph, Party::Alice, s, 0, sign);
                    let a_1 = qm_marginal_given(&ph, Party::Alice, s, 1, sign);
                    let b_0 = qm_marginal_given(&ph, Party::Bob, s, 0, sign);
                    let b_1 = qm_marginal_given(&ph, Party::Bob, s, 1, sign);
                    prop_assert!((a_0 - a_1).abs() < TOL && (a_0 - 0.5).abs() < TOL);
                    prop_assert!((b_0 - b_1).abs() < TOL && (b_0 - 0.5).abs() < TOL);
                }
            }
            prop_assert!(qm_chsh(&ph).beta.abs() <= 2.0 * SQRT_2 + 1e-9);
        }
    }
}
