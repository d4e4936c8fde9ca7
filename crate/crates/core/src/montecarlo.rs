//! Seeded trial engine.
//!
//! Every trial draws from its own ChaCha8 stream: the generator is seeded
//! from the run seed and the stream number is the trial index. A trial's
//! outcome therefore depends only on `(seed, index)`, and tallies (integer
//! counts merged by addition) are identical for any partitioning of the
//! trial range across threads.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lhv::{evaluate_set, path_pattern_index, InstructionSet, LhvModel, Path};
use crate::phys_model::{qm_joint_probability, ChshValue, OutcomePair, PhaseConfig, SettingPair, Sign};
use crate::postselect::{Scheme, TrialOutcome};

/// Trials handled by one work item.
const CHUNK: u64 = 8192;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Source {
    Quantum { phases: PhaseConfig },
    Lhv { model: LhvModel },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n_trials: u64,
    pub seed: u64,
    pub source: Source,
    pub scheme: Scheme,
    /// Probabilities of the setting pairs in [`SettingPair::ALL`] order.
    pub setting_probs: [f64; 4],
}

impl RunConfig {
    pub fn new(n_trials: u64, seed: u64, source: Source, scheme: Scheme) -> Self {
        RunConfig { n_trials, seed, source, scheme, setting_probs: [0.25; 4] }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trials == 0 {
            return Err(invalid("n_trials must be at least 1"));
        }
        if self.setting_probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(invalid("setting probabilities must be finite and non-negative"));
        }
        let total: f64 = self.setting_probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("setting probabilities sum to {total}, expected 1")));
        }
        Ok(())
    }
}

/// Raw counts from a run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TallySet {
    /// `n(i, j, a, b)` over kept trials: `[pair][outcome]`.
    pub kept: [[u64; 4]; 4],
    pub rejected: [u64; 4],
    /// SS, SL, LS, LL path patterns per pair, all trials.
    pub slot_patterns: [[u64; 4]; 4],
    /// Photon 1 sign counts `[setting][sign]`, all trials.
    pub alice_signs: [[u64; 2]; 2],
    /// Photon 2 sign counts `[setting][sign]`, all trials.
    pub bob_signs: [[u64; 2]; 2],
}

impl TallySet {
    pub fn record(&mut self, trial: &TrialOutcome) {
        let k = trial.pair.index();
        let p1 = slot_to_path(trial.event1.time_slot);
        let p2 = slot_to_path(trial.event2.time_slot);
        self.slot_patterns[k][path_pattern_index(p1, p2)] += 1;
        let (a, b) = (trial.event1.detector_sign, trial.event2.detector_sign);
        self.alice_signs[trial.pair.alice()][a.index()] += 1;
        self.bob_signs[trial.pair.bob()][b.index()] += 1;
        if trial.kept {
            self.kept[k][OutcomePair::new(a, b).index()] += 1;
        } else {
            self.rejected[k] += 1;
        }
    }

    /// Componentwise sum.
    pub fn merge(mut self, other: &TallySet) -> TallySet {
        for k in 0..4 {
            for o in 0..4 {
                self.kept[k][o] += other.kept[k][o];
                self.slot_patterns[k][o] += other.slot_patterns[k][o];
            }
            self.rejected[k] += other.rejected[k];
        }
        for s in 0..2 {
            for g in 0..2 {
                self.alice_signs[s][g] += other.alice_signs[s][g];
                self.bob_signs[s][g] += other.bob_signs[s][g];
            }
        }
        self
    }

    pub fn kept_on(&self, pair: SettingPair) -> u64 {
        self.kept[pair.index()].iter().sum()
    }

    pub fn trials_on(&self, pair: SettingPair) -> u64 {
        self.kept_on(pair) + self.rejected[pair.index()]
    }

    pub fn total_trials(&self) -> u64 {
        SettingPair::ALL.iter().map(|&p| self.trials_on(p)).sum()
    }

    /// Kept fraction per setting pair (0 for pairs never drawn).
    pub fn keep_fractions(&self) -> [f64; 4] {
        SettingPair::ALL.map(|p| {
            let n = self.trials_on(p);
            if n == 0 {
                0.0
            } else {
                self.kept_on(p) as f64 / n as f64
            }
        })
    }
}

fn slot_to_path(slot: u8) -> Path {
    if slot == 0 {
        Path::S
    } else {
        Path::L
    }
}

/// Prepared sampler for one run.
enum Sampler<'a> {
    Quantum { joint: [[f64; 4]; 4] },
    Lhv { sets: Vec<&'a InstructionSet>, index: WeightedIndex<f64> },
}

impl<'a> Sampler<'a> {
    fn new(source: &'a Source) -> Result<Self> {
        match source {
            Source::Quantum { phases } => Ok(Sampler::Quantum {
                joint: SettingPair::ALL.map(|p| OutcomePair::ALL.map(|o| qm_joint_probability(phases, p, o))),
            }),
            Source::Lhv { model } => {
                let (sets, weights): (Vec<_>, Vec<_>) = model.iter().unzip();
                let index = WeightedIndex::new(weights).map_err(|e| invalid(format!("model weights: {e}")))?;
                Ok(Sampler::Lhv { sets, index })
            }
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng, pair: SettingPair) -> ((Path, Path), (Sign, Sign)) {
        match self {
            Sampler::Quantum { joint } => {
                let pattern: usize = rng.random_range(0..4);
                let paths = (Path::BOTH[pattern >> 1], Path::BOTH[pattern & 1]);
                let signs = if paths.0 == paths.1 {
                    let o = OutcomePair::ALL[categorical(rng.random(), &joint[pair.index()])];
                    (o.a, o.b)
                } else {
                    (fair_sign(rng), fair_sign(rng))
                };
                (paths, signs)
            }
            Sampler::Lhv { sets, index } => {
                let set = sets[index.sample(rng)];
                let (c1, c2) = evaluate_set(set, pair);
                ((c1.path, c2.path), (c1.sign, c2.sign))
            }
        }
    }
}

fn fair_sign(rng: &mut ChaCha8Rng) -> Sign {
    if rng.random::<bool>() {
        Sign::Plus
    } else {
        Sign::Minus
    }
}

/// Index drawn from `probs` by inverting the cumulative sum at `u ∈ [0, 1)`.
fn categorical(u: f64, probs: &[f64; 4]) -> usize {
    let mut acc = 0.0;
    for (k, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    // rounding left u above the final partial sum; take the last nonzero cell
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(3)
}

/// Generator for trial `index`: the run's base generator (seeded, stream 0,
/// position 0) moved to stream `index`.
fn trial_rng(base: &ChaCha8Rng, index: u64) -> ChaCha8Rng {
    let mut rng = base.clone();
    rng.set_stream(index);
    rng
}

fn simulate_trial(config: &RunConfig, sampler: &Sampler<'_>, base: &ChaCha8Rng, index: u64) -> TrialOutcome {
    let mut rng = trial_rng(base, index);
    let pair = SettingPair::ALL[categorical(rng.random(), &config.setting_probs)];
    let (paths, signs) = sampler.sample(&mut rng, pair);
    TrialOutcome::from_paths(pair, paths, signs, config.scheme)
}

fn tally_range(config: &RunConfig, sampler: &Sampler<'_>, start: u64, end: u64) -> TallySet {
    let base = ChaCha8Rng::seed_from_u64(config.seed);
    let mut t = TallySet::default();
    for i in start..end {
        t.record(&simulate_trial(config, sampler, &base, i));
    }
    t
}

/// Runs every trial on the current rayon pool.
pub fn run(config: &RunConfig) -> Result<TallySet> {
    config.validate()?;
    let sampler = Sampler::new(&config.source)?;
    let n = config.n_trials;
    let chunks = n.div_ceil(CHUNK);
    let tallies = (0..chunks)
        .into_par_iter()
        .map(|c| tally_range(config, &sampler, c * CHUNK, ((c + 1) * CHUNK).min(n)))
        .reduce(TallySet::default, |a, b| a.merge(&b));
    Ok(tallies)
}

/// Runs on a dedicated pool of `threads` workers.
pub fn run_with_threads(config: &RunConfig, threads: usize) -> Result<TallySet> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Numerical(format!("thread pool: {e}")))?;
    pool.install(|| run(config))
}

/// Single-threaded reference path; also used to check partition independence.
pub fn run_serial(config: &RunConfig) -> Result<TallySet> {
    config.validate()?;
    let sampler = Sampler::new(&config.source)?;
    Ok(tally_range(config, &sampler, 0, config.n_trials))
}

/// Individual trial records for `range`, in index order.
pub fn trials(config: &RunConfig, range: std::ops::Range<u64>) -> Result<Vec<TrialOutcome>> {
    config.validate()?;
    let sampler = Sampler::new(&config.source)?;
    let base = ChaCha8Rng::seed_from_u64(config.seed);
    Ok(range.map(|i| simulate_trial(config, &sampler, &base, i)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChshEstimate {
    pub beta_hat: f64,
    pub stderr: f64,
    pub correlators: [f64; 4],
    pub correlator_stderr: [f64; 4],
    pub kept: [u64; 4],
}

impl ChshEstimate {
    pub fn as_chsh_value(&self) -> ChshValue {
        ChshValue::from_components(self.correlators)
    }
}

/// Plug-in CHSH estimate with binomial standard errors.
pub fn estimate_chsh(tallies: &TallySet) -> Result<ChshEstimate> {
    let mut correlators = [0.0; 4];
    let mut correlator_stderr = [0.0; 4];
    let mut kept = [0u64; 4];
    for pair in SettingPair::ALL {
        let k = pair.index();
        let n = tallies.kept_on(pair);
        if n == 0 {
            return Err(Error::NoKeptEvents(pair));
        }
        let counts = &tallies.kept[k];
        let agree = counts[0] + counts[3];
        let disagree = counts[1] + counts[2];
        let c = (agree as f64 - disagree as f64) / n as f64;
        correlators[k] = c;
        correlator_stderr[k] = ((1.0 - c * c).max(0.0) / n as f64).sqrt();
        kept[k] = n;
    }
    let chsh = ChshValue::from_components(correlators);
    let stderr = correlator_stderr.iter().map(|s| s * s).sum::<f64>().sqrt();
    Ok(ChshEstimate { beta_hat: chsh.beta, stderr, correlators, correlator_stderr, kept })
}

/// Empirical SS, SL, LS, LL fractions over all trials.
pub fn split_fractions(tallies: &TallySet) -> Result<[f64; 4]> {
    let total = tallies.total_trials();
    if total == 0 {
        return Err(invalid("no trials recorded"));
    }
    let mut out = [0.0; 4];
    for (f, slot) in out.iter_mut().enumerate() {
        let n: u64 = tallies.slot_patterns.iter().map(|row| row[f]).sum();
        *slot = n as f64 / total as f64;
    }
    Ok(out)
}
