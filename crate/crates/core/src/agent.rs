//! Tabular Q-learning over piecewise DD sequences.
//!
//! An episode builds a complete sequence segment by segment; the scalar
//! episode reward is the final coherence W(T). States aggregate the m most
//! recent actions (padded with −1), actions are the four segment kinds, and
//! values update by the Monte Carlo rule Q ← Q + α(r − Q) for every
//! state-action pair visited in the episode. Training anneals ε
//! multiplicatively per episode down to a floor. Longer targets warm-start
//! from the best sequence found for the previous target time.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::coherence::SpectrumTable;
use crate::error::Error;
use crate::rng::{self, ChaCha8Rng};
use crate::sequence::{DdSequence, SegmentKind};
use crate::spectral::{GridTransforms, TransformAccumulator};

/// Padding code for history slots before the first action.
pub const PAD: i8 = -1;

/// Truncated action history: exactly m slots, padding only as a prefix.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AggregatedState(Vec<i8>);

impl AggregatedState {
    pub fn slots(&self) -> &[i8] {
        &self.0
    }
}

/// Last m action codes, left-padded with −1 when fewer exist.
pub fn aggregate_state(partial_actions: &[SegmentKind], m: usize) -> AggregatedState {
    debug_assert!(m >= 1);
    let mut slots = Vec::with_capacity(m);
    let n = partial_actions.len();
    for i in 0..m {
        if n + i < m {
            slots.push(PAD);
        } else {
            slots.push(partial_actions[n + i - m].code() as i8);
        }
    }
    AggregatedState(slots)
}

/// Action-value store; unseen pairs default to 0.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QTable {
    values: BTreeMap<(AggregatedState, u8), f64>,
}

impl QTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, state: &AggregatedState, action: u8) -> f64 {
        *self.values.get(&(state.clone(), action)).unwrap_or(&0.0)
    }

    pub fn set(&mut self, state: AggregatedState, action: u8, value: f64) {
        self.values.insert((state, action), value);
    }

    /// Number of (state, action) pairs with stored values.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Distinct states seen.
    pub fn n_states(&self) -> usize {
        let mut count = 0;
        let mut last: Option<&AggregatedState> = None;
        for (state, _) in self.values.keys() {
            if last != Some(state) {
                count += 1;
                last = Some(state);
            }
        }
        count
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(AggregatedState, u8), &f64)> {
        self.values.iter()
    }

    /// Greedy action: argmax over the four codes, ties broken by lowest code.
    pub fn greedy_action(&self, state: &AggregatedState) -> u8 {
        let mut best = 0u8;
        let mut best_v = self.get(state, 0);
        for a in 1..4u8 {
            let v = self.get(state, a);
            if v > best_v {
                best_v = v;
                best = a;
            }
        }
        best
    }
}

/// Epsilon-greedy action choice.
///
/// Draw order is fixed: one uniform for the explore/exploit coin, then (only
/// when exploring) one uniform action draw.
pub fn select_action(
    q: &QTable,
    state: &AggregatedState,
    epsilon: f64,
    rng: &mut ChaCha8Rng,
) -> u8 {
    debug_assert!((0.0..=1.0).contains(&epsilon));
    if rng::uniform01(rng) < epsilon {
        rng::uniform_action(rng)
    } else {
        q.greedy_action(state)
    }
}

/// Monte Carlo update: every visited pair moves toward the episode reward,
/// once, in visit order.
pub fn monte_carlo_update(
    q: &mut QTable,
    visited: &[(AggregatedState, u8)],
    reward: f64,
    alpha: f64,
) {
    for (state, action) in visited {
        let old = q.get(state, *action);
        q.set(state.clone(), *action, old + alpha * (reward - old));
    }
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Segment duration Δt, µs.
    pub delta_t: f64,
    /// Pulses per CPMG/UDD segment.
    pub pulses_per_segment: u32,
    /// History length m for state aggregation.
    pub m: usize,
    /// Learning rate α ∈ (0, 1].
    pub alpha: f64,
    pub eps_start: f64,
    /// Multiplicative decay applied after each episode.
    pub eps_decay: f64,
    /// Exploration floor.
    pub eps_end: f64,
    /// Episodes per target time.
    pub n_episodes: usize,
    pub seed: u64,
    /// Fixed prefix the agent extends (empty for cold start).
    pub base_sequence: Vec<SegmentKind>,
    /// Return the greedy rollout even when a visited episode scored higher.
    pub greedy_only: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            delta_t: crate::DEFAULT_DELTA_T,
            pulses_per_segment: crate::DEFAULT_PULSES_PER_SEGMENT,
            m: 3,
            alpha: 0.1,
            eps_start: 1.0,
            eps_decay: 0.99,
            eps_end: 0.05,
            n_episodes: 300,
            seed: 0,
            base_sequence: Vec::new(),
            greedy_only: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::invalid("alpha", "must be in (0, 1]"));
        }
        if !(0.0 <= self.eps_end && self.eps_end <= self.eps_start && self.eps_start <= 1.0) {
            return Err(Error::invalid("eps", "need 0 <= eps_end <= eps_start <= 1"));
        }
        if !(self.eps_decay > 0.0 && self.eps_decay <= 1.0) {
            return Err(Error::invalid("eps_decay", "must be in (0, 1]"));
        }
        if self.m == 0 {
            return Err(Error::invalid("m", "history length must be >= 1"));
        }
        if !(self.delta_t > 0.0) {
            return Err(Error::invalid("delta_t", "must be > 0"));
        }
        Ok(())
    }
}

/// One episode log line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub epsilon: f64,
    pub reward: f64,
}

/// Outcome of training for one target time.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainResult {
    pub best_sequence: DdSequence,
    /// Coherence of `best_sequence`, re-evaluated from scratch.
    pub best_reward: f64,
    pub q_table: QTable,
    pub episodes: Vec<EpisodeRecord>,
    pub final_epsilon: f64,
    /// True when the returned sequence came from the greedy rollout rather
    /// than the best visited episode.
    pub from_greedy_rollout: bool,
}

fn evaluate(
    spectrum: &SpectrumTable,
    transforms: &GridTransforms,
    base: &TransformAccumulator<'_>,
    suffix: &[SegmentKind],
) -> f64 {
    let mut acc = TransformAccumulator::new(transforms);
    acc.restore_state(base.clone_state());
    for &kind in suffix {
        acc.push(kind);
    }
    libm::exp(-spectrum.chi_from_accumulator(&acc))
}

/// One episode: extend the base sequence to `target_n` segments with
/// epsilon-greedy choices, rewarding the final coherence.
///
/// Returns the complete action list, the reward, and the visited
/// (state, action) pairs in visit order.
pub fn run_episode(
    config: &TrainConfig,
    q: &QTable,
    spectrum: &SpectrumTable,
    transforms: &GridTransforms,
    target_n: usize,
    epsilon: f64,
    rng: &mut ChaCha8Rng,
) -> (Vec<SegmentKind>, f64, Vec<(AggregatedState, u8)>) {
    let mut actions = config.base_sequence.clone();
    let mut visited = Vec::with_capacity(target_n - actions.len());
    while actions.len() < target_n {
        let state = aggregate_state(&actions, config.m);
        let code = select_action(q, &state, epsilon, rng);
        visited.push((state, code));
        actions.push(SegmentKind::from_code(code).expect("codes 0..4"));
    }
    let mut acc = TransformAccumulator::new(transforms);
    for &kind in &actions {
        acc.push(kind);
    }
    let reward = libm::exp(-spectrum.chi_from_accumulator(&acc));
    (actions, reward, visited)
}

/// Train for one target time T = target_n · Δt.
///
/// Runs `n_episodes` episodes with ε annealed per episode, then a greedy
/// (ε = 0) rollout from the learned table. Returns whichever of the rollout
/// and the best visited episode re-evaluates higher, unless `greedy_only`.
/// Deterministic given (seed, config, spectrum).
pub fn train(
    config: &TrainConfig,
    spectrum: &SpectrumTable,
    transforms: &GridTransforms,
    target_n: usize,
    q: Option<QTable>,
) -> Result<TrainResult, Error> {
    config.validate()?;
    if target_n <= config.base_sequence.len() {
        return Err(Error::invalid(
            "target_n",
            "target length must exceed the base sequence length",
        ));
    }
    if target_n > transforms.n_positions() {
        return Err(Error::invalid(
            "target_n",
            "grid transforms were materialized for fewer positions",
        ));
    }

    let mut q = q.unwrap_or_default();
    let mut rng = rng::seeded(config.seed);
    let mut epsilon = config.eps_start;
    let mut episodes = Vec::with_capacity(config.n_episodes);
    let mut best_visited: Option<(f64, Vec<SegmentKind>)> = None;

    // Base prefix accumulated once; episodes only replay the suffix.
    let mut base_acc = TransformAccumulator::new(transforms);
    for &kind in &config.base_sequence {
        base_acc.push(kind);
    }

    for episode in 0..config.n_episodes {
        let mut actions = config.base_sequence.clone();
        let mut visited = Vec::with_capacity(target_n - actions.len());
        let mut acc = TransformAccumulator::new(transforms);
        acc.restore_state(base_acc.clone_state());
        while actions.len() < target_n {
            let state = aggregate_state(&actions, config.m);
            let code = select_action(&q, &state, epsilon, &mut rng);
            visited.push((state, code));
            let kind = SegmentKind::from_code(code).expect("codes 0..4");
            actions.push(kind);
            acc.push(kind);
        }
        let reward = libm::exp(-spectrum.chi_from_accumulator(&acc));
        monte_carlo_update(&mut q, &visited, reward, config.alpha);
        episodes.push(EpisodeRecord { episode, epsilon, reward });
        if best_visited.as_ref().map_or(true, |(r, _)| reward > *r) {
            best_visited = Some((reward, actions));
        }
        epsilon = libm::fmax(config.eps_end, epsilon * config.eps_decay);
    }

    // Greedy rollout from the learned table.
    let mut greedy_actions = config.base_sequence.clone();
    while greedy_actions.len() < target_n {
        let state = aggregate_state(&greedy_actions, config.m);
        let code = q.greedy_action(&state);
        greedy_actions.push(SegmentKind::from_code(code).expect("codes 0..4"));
    }
    let greedy_reward = evaluate(spectrum, transforms, &base_acc, &greedy_actions[config.base_sequence.len()..]);

    let (actions, reward, from_greedy) = match (&best_visited, config.greedy_only) {
        (Some((r, a)), false) if *r > greedy_reward => (a.clone(), *r, false),
        _ => (greedy_actions, greedy_reward, true),
    };

    Ok(TrainResult {
        best_sequence: DdSequence::new(actions, config.delta_t, config.pulses_per_segment)?,
        best_reward: reward,
        q_table: q,
        episodes,
        final_epsilon: epsilon,
        from_greedy_rollout: from_greedy,
    })
}

/// Warm-started ladder: train for N = base+1, base+2, …, n_max segments,
/// each rung using the previous rung's best sequence as its fixed prefix.
///
/// Rung i (0-based) draws from seed `config.seed + i` so individual rungs
/// reproduce independently.
pub fn train_ladder(
    config: &TrainConfig,
    spectrum: &SpectrumTable,
    transforms: &GridTransforms,
    n_max: usize,
) -> Result<Vec<TrainResult>, Error> {
    config.validate()?;
    if n_max <= config.base_sequence.len() {
        return Err(Error::invalid("n_max", "ladder must extend past the base sequence"));
    }
    let mut results = Vec::with_capacity(n_max - config.base_sequence.len());
    let mut base = config.base_sequence.clone();
    for (rung, target_n) in (config.base_sequence.len() + 1..=n_max).enumerate() {
        let rung_config = TrainConfig {
            base_sequence: base.clone(),
            seed: config.seed.wrapping_add(rung as u64),
            ..config.clone()
        };
        let result = train(&rung_config, spectrum, transforms, target_n, None)?;
        base = result.best_sequence.actions().to_vec();
        results.push(result);
    }
    Ok(results)
}
