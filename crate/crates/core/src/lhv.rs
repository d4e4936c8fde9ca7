//! Deterministic local instruction sets and the 64-set hidden-variable model
//! that forges any CHSH value under coincidence postselection.
//!
//! An instruction set fixes, for each photon and each local setting, the
//! path it takes (short or long, i.e. the detection time slot) and the
//! detector sign it hits. The forging family mixes the 32 sets of the first
//! table with weight `p/32` and the 32 sets of the second with `(1−p)/32`.
//!
//! The set `S+ S+ S− L+` is sometimes cited as the first set of the first
//! table, but it is row 1 of the second table. The tables below are used as
//! written.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::phys_model::{ChshValue, OutcomePair, SettingPair, Sign};
use crate::postselect::{self, Scheme};

/// Which arm of the unbalanced interferometer a photon takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Path {
    /// Short arm, detected in the early slot `t`.
    S,
    /// Long arm, detected in the late slot `t + ΔL/c`.
    L,
}

impl Path {
    pub const BOTH: [Path; 2] = [Path::S, Path::L];

    /// 0 for `S`, 1 for `L`.
    pub fn slot(self) -> u8 {
        match self {
            Path::S => 0,
            Path::L => 1,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Path::S => 'S',
            Path::L => 'L',
        }
    }
}

/// Path and detector sign for one photon under one local setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LocalInstruction {
    pub path: Path,
    pub sign: Sign,
}

impl LocalInstruction {
    pub const ALL: [LocalInstruction; 4] = [
        LocalInstruction { path: Path::S, sign: Sign::Plus },
        LocalInstruction { path: Path::S, sign: Sign::Minus },
        LocalInstruction { path: Path::L, sign: Sign::Plus },
        LocalInstruction { path: Path::L, sign: Sign::Minus },
    ];

    pub fn new(path: Path, sign: Sign) -> Self {
        LocalInstruction { path, sign }
    }

    pub fn flip_sign(self) -> Self {
        LocalInstruction { path: self.path, sign: self.sign.flip() }
    }

    fn code(self) -> usize {
        2 * self.path.slot() as usize + self.sign.index()
    }
}

impl fmt::Display for LocalInstruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.path.symbol(), self.sign.symbol())
    }
}

impl FromStr for LocalInstruction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let path = match s.as_bytes().first() {
            Some(b'S') => Path::S,
            Some(b'L') => Path::L,
            _ => return Err(invalid(format!("bad instruction cell {s:?}"))),
        };
        let sign = match &s[1..] {
            "+" => Sign::Plus,
            "-" => Sign::Minus,
            _ => return Err(invalid(format!("bad instruction cell {s:?}"))),
        };
        Ok(LocalInstruction { path, sign })
    }
}

/// One deterministic local strategy: cells for photon 1 under `A0`, `A1`
/// and photon 2 under `B0`, `B1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct InstructionSet {
    pub alice: [LocalInstruction; 2],
    pub bob: [LocalInstruction; 2],
}

impl InstructionSet {
    pub fn new(
        a0: LocalInstruction,
        a1: LocalInstruction,
        b0: LocalInstruction,
        b1: LocalInstruction,
    ) -> Self {
        InstructionSet { alice: [a0, a1], bob: [b0, b1] }
    }

    /// Every one of the 4⁴ sets, in index order.
    pub fn all() -> impl Iterator<Item = InstructionSet> {
        (0..256).map(InstructionSet::from_index)
    }

    /// Inverse of [`InstructionSet::index`]; `index` is taken modulo 256.
    pub fn from_index(index: usize) -> Self {
        let cell = |k: usize| LocalInstruction::ALL[(index >> (2 * (3 - k))) & 3];
        InstructionSet::new(cell(0), cell(1), cell(2), cell(3))
    }

    pub fn index(&self) -> usize {
        self.cells().iter().fold(0, |acc, c| (acc << 2) | c.code())
    }

    pub fn cells(&self) -> [LocalInstruction; 4] {
        [self.alice[0], self.alice[1], self.bob[0], self.bob[1]]
    }

    pub fn flip_all_signs(&self) -> Self {
        let [a0, a1, b0, b1] = self.cells().map(LocalInstruction::flip_sign);
        InstructionSet::new(a0, a1, b0, b1)
    }

    /// True when neither photon's path depends on its local setting.
    pub fn is_path_fixed(&self) -> bool {
        self.alice[0].path == self.alice[1].path && self.bob[0].path == self.bob[1].path
    }
}

impl fmt::Display for InstructionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a0, a1, b0, b1] = self.cells();
        write!(f, "{a0} {a1} {b0} {b1}")
    }
}

/// Cells selected by the setting pair: `(photon 1, photon 2)`.
pub fn evaluate_set(set: &InstructionSet, pair: SettingPair) -> (LocalInstruction, LocalInstruction) {
    (set.alice[pair.alice()], set.bob[pair.bob()])
}

/// One column entry of the tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Contribution {
    Plus,
    Minus,
    Rejected,
}

/// Per-pair contribution of a set under coincidence postselection.
pub fn recompute_table_contributions(set: &InstructionSet) -> [Contribution; 4] {
    SettingPair::ALL.map(|pair| {
        let (p1, p2) = evaluate_set(set, pair);
        if p1.path != p2.path {
            Contribution::Rejected
        } else if p1.sign == p2.sign {
            Contribution::Plus
        } else {
            Contribution::Minus
        }
    })
}

/// A row as printed: four cells, one of which may carry `±`.
#[derive(Debug, Clone, Copy)]
pub struct TableRow {
    pub cells: &'static str,
    pub contributions: [Contribution; 4],
}

use Contribution::{Minus as M, Plus as P, Rejected as R};

pub const TABLE_I: [TableRow; 8] = [
    TableRow { cells: "S+ S+ S+ L±", contributions: [P, R, P, R] },
    TableRow { cells: "L+ L+ L+ S±", contributions: [P, R, P, R] },
    TableRow { cells: "S+ S- L± S+", contributions: [R, P, R, M] },
    TableRow { cells: "L+ L- S± L+", contributions: [R, P, R, M] },
    TableRow { cells: "S+ L± S+ S+", contributions: [P, P, R, R] },
    TableRow { cells: "L+ S± L+ L+", contributions: [P, P, R, R] },
    TableRow { cells: "L± S+ S+ S-", contributions: [R, R, P, M] },
    TableRow { cells: "S± L+ L+ L-", contributions: [R, R, P, M] },
];

pub const TABLE_II: [TableRow; 8] = [
    TableRow { cells: "S+ S+ S- L±", contributions: [M, R, M, R] },
    TableRow { cells: "L+ L+ L- S±", contributions: [M, R, M, R] },
    TableRow { cells: "S+ S- L± S-", contributions: [R, M, R, P] },
    TableRow { cells: "L+ L- S± L-", contributions: [R, M, R, P] },
    TableRow { cells: "S- L± S+ S+", contributions: [M, M, R, R] },
    TableRow { cells: "L- S± L+ L+", contributions: [M, M, R, R] },
    TableRow { cells: "L± S- S+ S-", contributions: [R, R, M, P] },
    TableRow { cells: "S± L- L+ L-", contributions: [R, R, M, P] },
];

impl TableRow {
    /// The four sets a row stands for: the `+` and `−` readings of the `±`
    /// cell, followed by each of those with every sign flipped.
    pub fn expand(&self) -> [InstructionSet; 4] {
        let cells: Vec<&str> = self.cells.split_whitespace().collect();
        assert_eq!(cells.len(), 4, "table row must have four cells");
        let variant = |choice: char| {
            let parsed: Vec<LocalInstruction> = cells
                .iter()
                .map(|c| c.replace('±', &choice.to_string()).parse().expect("table cell"))
                .collect();
            InstructionSet::new(parsed[0], parsed[1], parsed[2], parsed[3])
        };
        let plus = variant('+');
        let minus = variant('-');
        [plus, minus, plus.flip_all_signs(), minus.flip_all_signs()]
    }
}

fn expand_table(rows: &[TableRow; 8]) -> Vec<InstructionSet> {
    rows.iter().flat_map(TableRow::expand).collect()
}

/// The 32 + 32 sets of the two tables, row by row.
pub fn paper_tables() -> (Vec<InstructionSet>, Vec<InstructionSet>) {
    (expand_table(&TABLE_I), expand_table(&TABLE_II))
}

/// A probability distribution over instruction sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(InstructionSet, f64)>", into = "Vec<(InstructionSet, f64)>")]
pub struct LhvModel {
    weights: BTreeMap<InstructionSet, f64>,
}

pub const WEIGHT_TOLERANCE: f64 = 1e-12;

impl LhvModel {
    /// Builds a model; duplicate sets, negative or non-finite weights, and
    /// totals away from 1 are rejected.
    pub fn new(entries: impl IntoIterator<Item = (InstructionSet, f64)>) -> Result<Self> {
        let mut weights = BTreeMap::new();
        for (set, w) in entries {
            if !w.is_finite() || w < 0.0 {
                return Err(invalid(format!("weight for {set} must be finite and >= 0, got {w}")));
            }
            if weights.insert(set, w).is_some() {
                return Err(invalid(format!("duplicate instruction set {set}")));
            }
        }
        let total: f64 = weights.values().sum();
        if (total - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(invalid(format!("weights sum to {total}, expected 1")));
        }
        Ok(LhvModel { weights })
    }

    pub fn deterministic(set: InstructionSet) -> Self {
        LhvModel { weights: BTreeMap::from([(set, 1.0)]) }
    }

    /// Sets in index order with their weights.
    pub fn iter(&self) -> impl Iterator<Item = (&InstructionSet, f64)> {
        self.weights.iter().map(|(s, &w)| (s, w))
    }

    pub fn weight(&self, set: &InstructionSet) -> f64 {
        self.weights.get(set).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Sets carrying positive weight.
    pub fn support(&self) -> impl Iterator<Item = &InstructionSet> {
        self.weights.iter().filter(|(_, &w)| w > 0.0).map(|(s, _)| s)
    }

    /// Parses the line format `<a0> <a1> <b0> <b1> <weight>`.
    ///
    /// Cells are `S+`, `S-`, `L+` or `L-`. The weight is a decimal number or
    /// a ratio `n/d`. Blank lines and text after `#` are ignored.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |msg: String| Error::Parse { line: n + 1, msg };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 5 {
                return Err(parse_err(format!("expected 5 fields, got {}", fields.len())));
            }
            let mut cells = [LocalInstruction::ALL[0]; 4];
            for (cell, field) in cells.iter_mut().zip(&fields[..4]) {
                *cell = field.parse().map_err(|e: Error| parse_err(e.to_string()))?;
            }
            let weight = parse_weight(fields[4]).map_err(parse_err)?;
            entries.push((InstructionSet::new(cells[0], cells[1], cells[2], cells[3]), weight));
        }
        if entries.is_empty() {
            return Err(Error::Parse { line: 0, msg: "model has no entries".into() });
        }
        LhvModel::new(entries)
    }

    /// Inverse of [`LhvModel::from_text`]; weights use the shortest
    /// representation that round-trips.
    pub fn to_text(&self) -> String {
        self.weights
            .iter()
            .map(|(s, w)| format!("{s} {w:?}\n"))
            .collect()
    }
}

fn parse_weight(s: &str) -> std::result::Result<f64, String> {
    let value = match s.split_once('/') {
        Some((n, d)) => {
            let n: f64 = n.parse().map_err(|e| format!("bad weight numerator {n:?}: {e}"))?;
            let d: f64 = d.parse().map_err(|e| format!("bad weight denominator {d:?}: {e}"))?;
            if d == 0.0 {
                return Err("zero weight denominator".into());
            }
            n / d
        }
        None => s.parse().map_err(|e| format!("bad weight {s:?}: {e}"))?,
    };
    Ok(value)
}

impl TryFrom<Vec<(InstructionSet, f64)>> for LhvModel {
    type Error = Error;

    fn try_from(v: Vec<(InstructionSet, f64)>) -> Result<Self> {
        LhvModel::new(v)
    }
}

impl From<LhvModel> for Vec<(InstructionSet, f64)> {
    fn from(m: LhvModel) -> Self {
        m.weights.into_iter().collect()
    }
}

/// The forging family: `p/32` on each first-table set, `(1−p)/32` on each
/// second-table set.
pub fn paper_model(p: f64) -> Result<LhvModel> {
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid(format!("p must lie in [0, 1], got {p}")));
    }
    let (table_i, table_ii) = paper_tables();
    let entries = table_i
        .into_iter()
        .map(|s| (s, p / 32.0))
        .chain(table_ii.into_iter().map(|s| (s, (1.0 - p) / 32.0)));
    LhvModel::new(entries)
}

/// Exact (non-sampled) statistics of a model under a postselection scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactEvaluation {
    pub chsh: ChshValue,
    /// Keep probability per setting pair.
    pub keep_fraction: [f64; 4],
    /// Joint outcome distribution conditioned on keeping, per pair, in
    /// [`OutcomePair::ALL`] order.
    pub kept_joint: [[f64; 4]; 4],
    /// Probability of the SS, SL, LS, LL path patterns per pair.
    pub path_split: [[f64; 4]; 4],
}

/// Index of `(path1, path2)` in the SS, SL, LS, LL ordering.
pub fn path_pattern_index(p1: Path, p2: Path) -> usize {
    2 * p1.slot() as usize + p2.slot() as usize
}

pub fn evaluate_model(model: &LhvModel, scheme: Scheme) -> Result<ExactEvaluation> {
    let mut keep_fraction = [0.0; 4];
    let mut kept_joint = [[0.0; 4]; 4];
    let mut path_split = [[0.0; 4]; 4];
    for pair in SettingPair::ALL {
        let k = pair.index();
        for (set, w) in model.iter() {
            let (c1, c2) = evaluate_set(set, pair);
            path_split[k][path_pattern_index(c1.path, c2.path)] += w;
            let (e1, e2) = postselect::route(scheme, c1.path, c2.path, (c1.sign, c2.sign));
            if postselect::keep(&e1, &e2, scheme)? {
                keep_fraction[k] += w;
                kept_joint[k][OutcomePair::new(c1.sign, c2.sign).index()] += w;
            }
        }
        if keep_fraction[k] <= 0.0 {
            return Err(Error::NoKeptEvents(pair));
        }
        for x in kept_joint[k].iter_mut() {
            *x /= keep_fraction[k];
        }
    }
    let components = kept_joint.map(|joint| {
        OutcomePair::ALL
            .iter()
            .map(|o| f64::from(o.product()) * joint[o.index()])
            .sum()
    });
    Ok(ExactEvaluation {
        chsh: ChshValue::from_components(components),
        keep_fraction,
        kept_joint,
        path_split,
    })
}

/// Exact evaluation under Franson coincidence selection.
pub fn model_beta_franson(model: &LhvModel) -> Result<ExactEvaluation> {
    evaluate_model(model, Scheme::Franson)
}

/// The `p` for which the forging family yields `target`.
///
/// β(p) is checked to be affine on five sample points before it is inverted.
pub fn solve_p_for_beta(target: f64) -> Result<f64> {
    if !(-4.0..=4.0).contains(&target) {
        return Err(invalid(format!("target beta must lie in [-4, 4], got {target}")));
    }
    let beta_at = |p: f64| -> Result<f64> { Ok(model_beta_franson(&paper_model(p)?)?.chsh.beta) };
    let lo = beta_at(0.0)?;
    let hi = beta_at(1.0)?;
    for p in [0.25, 0.5, 0.75] {
        let expected = lo + (hi - lo) * p;
        let got = beta_at(p)?;
        if (got - expected).abs() > 1e-12 {
            return Err(Error::Numerical(format!(
                "beta(p) is not affine: beta({p}) = {got}, interpolation gives {expected}"
            )));
        }
    }
    if (lo + 4.0).abs() > 1e-12 || (hi - 4.0).abs() > 1e-12 {
        return Err(Error::Numerical(format!("unexpected endpoints beta(0) = {lo}, beta(1) = {hi}")));
    }
    Ok(((target - lo) / (hi - lo)).clamp(0.0, 1.0))
}
