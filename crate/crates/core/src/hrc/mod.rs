//! Hierarchical feature crossing.
//!
//! Each step the meta controller picks a feature, the controller picks a
//! partner for it, and their Cartesian cross joins the set. Both agents are
//! rewarded with the change in downstream accuracy plus relevance minus
//! redundancy of the grown set. Every episode restarts from the original
//! features while the agents keep learning, and the best set ever evaluated
//! is remembered together with a recipe that rebuilds it.

mod features;
mod recipe;

pub use features::{cartesian_cross, Feature, FeatureSet, Lineage, NAME_JOIN, TOKEN_JOIN};
pub use recipe::{apply_recipe, prepare_originals, BinningEntry, CrossOp, CrossRecipe, OriginalColumn, RECIPE_VERSION};

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::binning::ChiMergeConfig;
use crate::dataset::Dataset;
use crate::downstream::{train_eval, LrConfig};
use crate::error::{Error, Result};
use crate::hashing::{HashConfig, HashedTable};
use crate::metrics::{entropy, mutual_information, ClassificationMetrics};
use crate::rl::{Agent, AgentConfig, Transition};
use crate::scalar::Scalar;
use crate::state::{feature_rep, state_vector, FeatureRep, N_STATS, STATE_DIM};

/// Meta controller input: state plus one candidate feature.
pub const META_INPUT: usize = STATE_DIM + N_STATS;
/// Controller input: state, candidate partner, then the chosen meta feature.
pub const CONTROLLER_INPUT: usize = STATE_DIM + 2 * N_STATS;

/// `w1..w3` weight the meta controller's reward, `w4..w6` the controller's.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardWeights {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub w4: f64,
    pub w5: f64,
    pub w6: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self::both(1.0, 1.0, 1.0)
    }
}

impl RewardWeights {
    /// The same (accuracy, relevance, redundancy) weights for both agents.
    pub fn both(acc: f64, rv: f64, rd: f64) -> Self {
        Self { w1: acc, w2: rv, w3: rd, w4: acc, w5: rv, w6: rd }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.w1, self.w2, self.w3, self.w4, self.w5, self.w6];
        if all.iter().all(|w| w.is_finite() && *w >= 0.0) {
            Ok(())
        } else {
            Err(Error::arg(format!("reward weights must be finite and non-negative: {all:?}")))
        }
    }
}

/// Which reward terms are switched on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardVariant {
    Acc,
    Rv,
    Rd,
    RvRd,
    AccRvRd,
}

impl RewardVariant {
    pub const ALL: [RewardVariant; 5] = [Self::Acc, Self::Rv, Self::Rd, Self::RvRd, Self::AccRvRd];

    pub fn weights(self) -> RewardWeights {
        match self {
            Self::Acc => RewardWeights::both(1.0, 0.0, 0.0),
            Self::Rv => RewardWeights::both(0.0, 1.0, 0.0),
            Self::Rd => RewardWeights::both(0.0, 0.0, 1.0),
            Self::RvRd => RewardWeights::both(0.0, 1.0, 1.0),
            Self::AccRvRd => RewardWeights::both(1.0, 1.0, 1.0),
        }
    }
}

/// `(r1, r2)`: accuracy gain over the window best plus relevance minus
/// redundancy, weighted per agent.
pub fn compute_rewards(acc: f64, acc_best: f64, rv: f64, rd: f64, w: &RewardWeights) -> (f64, f64) {
    let gain = acc - acc_best;
    (w.w1 * gain + w.w2 * rv - w.w3 * rd, w.w4 * gain + w.w5 * rv - w.w6 * rd)
}

/// `sum_t gamma^t r_t`.
pub fn discounted_return(rewards: &[f64], gamma: f64) -> f64 {
    rewards.iter().rev().fold(0.0, |acc, r| r + gamma * acc)
}

/// Search policy. The starred variants swap one or both agents for a greedy
/// choice that evaluates every legal cross with the downstream model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    /// Both agents learn.
    #[default]
    Hrc,
    /// Greedy controller.
    HrcStar,
    /// Greedy meta controller, scoring each feature by its best partner.
    HrcHash,
    /// Both greedy.
    HrcBang,
}

impl SearchMode {
    pub fn greedy_meta(self) -> bool {
        matches!(self, Self::HrcHash | Self::HrcBang)
    }

    pub fn greedy_controller(self) -> bool {
        matches!(self, Self::HrcStar | Self::HrcBang)
    }
}

/// Columns the reward's mutual information is computed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MiSource {
    #[default]
    Hashed,
    RawCategories,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub episodes: usize,
    pub steps_per_episode: usize,
    pub weights: RewardWeights,
    pub meta_agent: AgentConfig,
    pub controller_agent: AgentConfig,
    pub hash: HashConfig,
    pub binning: ChiMergeConfig,
    pub downstream: LrConfig,
    pub train_fraction: f64,
    pub seed: u64,
    /// Steps are skipped once the set holds this many features.
    pub max_feature_set_size: Option<usize>,
    pub mi_on: MiSource,
    pub mode: SearchMode,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            episodes: 15,
            steps_per_episode: 70,
            weights: RewardWeights::default(),
            meta_agent: AgentConfig::default(),
            controller_agent: AgentConfig::default(),
            hash: HashConfig::default(),
            binning: ChiMergeConfig::default(),
            downstream: LrConfig::default(),
            train_fraction: 0.8,
            seed: 0,
            max_feature_set_size: None,
            mi_on: MiSource::default(),
            mode: SearchMode::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 || self.steps_per_episode == 0 {
            return Err(Error::arg("episodes and steps_per_episode must be positive"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::arg(format!("train_fraction {} outside (0, 1)", self.train_fraction)));
        }
        self.weights.validate()?;
        self.meta_agent.validate()?;
        self.controller_agent.validate()?;
        self.hash.validate()
    }
}

/// One line of the step log. Each episode opens with a step-0 record that
/// evaluates the freshly reset original set; steps `1..` act. Action and
/// reward fields are `None` on step 0 and on skipped steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub episode: usize,
    pub step: usize,
    pub action_meta: Option<String>,
    pub action_partner: Option<String>,
    pub acc: Option<f64>,
    pub rv: Option<f64>,
    pub rd: Option<f64>,
    pub r1: Option<f64>,
    pub r2: Option<f64>,
    pub n_features: usize,
    pub best_acc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub episode: usize,
    /// Discounted meta controller return over the acting steps.
    pub return_meta: f64,
    /// Discounted controller return.
    pub return_controller: f64,
    /// Best accuracy reached within this episode.
    pub episode_best: f64,
    /// Best accuracy of the run so far.
    pub best_acc: f64,
}

/// The historically best feature set and the recipe that rebuilds it.
#[derive(Debug, Clone, PartialEq)]
pub struct BestSetMemory<T> {
    pub best_accuracy: f64,
    pub metrics: ClassificationMetrics<T>,
    pub feature_set: FeatureSet,
    pub recipe: CrossRecipe,
    /// `(episode, step)` of the last improvement; `None` while the original
    /// set is still the best.
    pub changed_at: Option<(usize, usize)>,
}

impl<T: Scalar> BestSetMemory<T> {
    /// Records `set` when `acc` strictly beats the best so far.
    pub fn offer(&mut self, acc: f64, metrics: &ClassificationMetrics<T>, set: &FeatureSet, at: (usize, usize)) -> bool {
        if acc > self.best_accuracy {
            self.best_accuracy = acc;
            self.metrics = *metrics;
            self.recipe = self.recipe.with_crosses(set);
            self.feature_set = set.clone();
            self.changed_at = Some(at);
            true
        } else {
            false
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome<T> {
    /// Downstream metrics of the original features.
    pub raw: ClassificationMetrics<T>,
    pub best: BestSetMemory<T>,
    pub steps: Vec<StepLog>,
    pub episodes: Vec<EpisodeSummary>,
    /// Distinct feature sets trained and scored.
    pub evaluations: usize,
}

/// Per-feature quantities that never change once the feature exists.
#[derive(Debug, Clone)]
struct Cached<T> {
    hashed: Vec<u32>,
    hashed_train: Vec<u32>,
    mi_codes: Vec<u32>,
    rep: FeatureRep<T>,
    relevance: T,
}

/// A feature set with its caches and the running sum of its MI matrix.
#[derive(Debug, Clone)]
struct Working<T> {
    set: FeatureSet,
    cache: Vec<Cached<T>>,
    redundancy_sum: T,
    key: Vec<(usize, usize)>,
}

impl<T: Scalar> Working<T> {
    fn relevance(&self) -> T {
        self.cache.iter().map(|c| c.relevance).sum::<T>() / T::from_count(self.cache.len())
    }

    fn redundancy(&self) -> T {
        let k = T::from_count(self.cache.len());
        self.redundancy_sum / (k * k)
    }

    fn state(&self, modulus: u64) -> Result<Vec<T>> {
        let table = HashedTable::from_columns(self.cache.iter().map(|c| c.hashed_train.clone()).collect(), modulus)?;
        Ok(state_vector::<T>(&table)?.as_slice().to_vec())
    }

    fn hashed_columns(&self) -> Vec<&[u32]> {
        self.cache.iter().map(|c| c.hashed.as_slice()).collect()
    }

    fn rep(&self, id: usize) -> &[T] {
        self.cache[id].rep.as_slice()
    }
}

/// Data, split and downstream settings shared by every evaluation of a run,
/// with accuracy memoised per sequence of crosses.
struct Evaluator<T> {
    labels: Vec<usize>,
    train_labels: Vec<usize>,
    n_classes: usize,
    split: crate::dataset::Split,
    hash: HashConfig,
    lr: LrConfig,
    mi_on: MiSource,
    memo: HashMap<Vec<(usize, usize)>, ClassificationMetrics<T>>,
}

impl<T: Scalar> Evaluator<T> {
    fn evaluate(&mut self, key: &[(usize, usize)], columns: &[&[u32]]) -> Result<ClassificationMetrics<T>> {
        if let Some(m) = self.memo.get(key) {
            return Ok(*m);
        }
        let m = train_eval::<T>(columns, self.hash, &self.labels, self.n_classes, &self.split, &self.lr)?;
        self.memo.insert(key.to_vec(), m);
        Ok(m)
    }

    fn cache(&self, f: &Feature) -> Result<Cached<T>> {
        let hashed = f.hashed(self.hash);
        let hashed_train: Vec<u32> = self.split.train.iter().map(|&i| hashed[i]).collect();
        let mi_codes = match self.mi_on {
            MiSource::Hashed => hashed_train.clone(),
            MiSource::RawCategories => self.split.train.iter().map(|&i| f.codes()[i]).collect(),
        };
        let rep = feature_rep::<T>(&hashed_train)?;
        let relevance = mutual_information::<T, _, _>(&mi_codes, &self.train_labels)?;
        Ok(Cached { hashed, hashed_train, mi_codes, rep, relevance })
    }

    /// Set with every feature cached and its MI matrix summed.
    fn working(&self, set: FeatureSet) -> Result<Working<T>> {
        let mut w = Working { set: set.clone(), cache: Vec::new(), redundancy_sum: T::zero(), key: Vec::new() };
        for f in set.features() {
            let c = self.cache(f)?;
            w.redundancy_sum += self.redundancy_increment(&w, &c)?;
            w.cache.push(c);
        }
        Ok(w)
    }

    /// Growth of the MI matrix sum when `new` joins `w`: its own entropy on
    /// the diagonal plus both mirrored off-diagonal entries.
    fn redundancy_increment(&self, w: &Working<T>, new: &Cached<T>) -> Result<T> {
        let mut off = T::zero();
        for c in &w.cache {
            off += mutual_information::<T, _, _>(&new.mi_codes, &c.mi_codes)?;
        }
        Ok(entropy::<T, _>(&new.mi_codes)? + T::lit(2.0) * off)
    }

    /// Accuracy of `w` with `meta x partner` appended.
    fn score_cross(&mut self, w: &Working<T>, meta: usize, partner: usize) -> Result<f64> {
        let f = w.set.preview_cross(meta, partner)?;
        let hashed = f.hashed(self.hash);
        let mut key = w.key.clone();
        key.push((meta, partner));
        let mut cols = w.hashed_columns();
        cols.push(&hashed);
        Ok(self.evaluate(&key, &cols)?.accuracy.as_f64())
    }
}

fn argmax_f64(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn concat<T: Copy>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().chain(b).copied().collect()
}

struct Search<T> {
    cfg: RunConfig,
    eval: Evaluator<T>,
    base: Working<T>,
    meta: Agent<T>,
    controller: Agent<T>,
    raw_acc: f64,
    best: BestSetMemory<T>,
    steps: Vec<StepLog>,
}

/// Outcome of one non-skipped step, before logging.
struct Taken {
    meta: usize,
    partner: usize,
    acc: f64,
    rv: f64,
    rd: f64,
    r1: f64,
    r2: f64,
}

impl<T: Scalar> Search<T> {
    fn size_capped(&self, w: &Working<T>) -> bool {
        self.cfg.max_feature_set_size.is_some_and(|cap| w.set.len() >= cap)
    }

    fn meta_candidates(&self, w: &Working<T>) -> Vec<usize> {
        if self.size_capped(w) {
            Vec::new()
        } else {
            w.set.legal_metas()
        }
    }

    /// Greedy scores of every legal partner of each candidate meta feature.
    fn score_all(&mut self, w: &Working<T>, metas: &[usize]) -> Result<Vec<Vec<(usize, f64)>>> {
        metas
            .iter()
            .map(|&m| {
                w.set
                    .legal_partners(m)
                    .into_iter()
                    .map(|p| Ok((p, self.eval.score_cross(w, m, p)?)))
                    .collect()
            })
            .collect()
    }

    fn step(&mut self, w: &mut Working<T>, episode: usize, step: usize, window_best: f64) -> Result<Option<Taken>> {
        let metas = self.meta_candidates(w);
        if metas.is_empty() {
            return Ok(None);
        }
        let state = w.state(self.cfg.hash.modulus)?;
        let mode = self.cfg.mode;

        let greedy_scores = if mode.greedy_meta() { Some(self.score_all(w, &metas)?) } else { None };
        let meta = match &greedy_scores {
            Some(scores) => {
                let best: Vec<f64> =
                    scores.iter().map(|s| s.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max)).collect();
                metas[argmax_f64(&best)]
            }
            None => {
                let cands: Vec<Vec<T>> = metas.iter().map(|&m| w.rep(m).to_vec()).collect();
                metas[self.meta.act(&state, &cands)?]
            }
        };

        let partners = w.set.legal_partners(meta);
        let partner = if mode.greedy_controller() {
            let scores: Vec<f64> = match &greedy_scores {
                Some(all) => all[metas.iter().position(|&m| m == meta).expect("meta among candidates")]
                    .iter()
                    .map(|x| x.1)
                    .collect(),
                None => partners.iter().map(|&p| self.eval.score_cross(w, meta, p)).collect::<Result<_>>()?,
            };
            partners[argmax_f64(&scores)]
        } else {
            let cands: Vec<Vec<T>> = partners.iter().map(|&p| concat(w.rep(p), w.rep(meta))).collect();
            partners[self.controller.act(&state, &cands)?]
        };

        let feature = w.set.preview_cross(meta, partner)?;
        let cached = self.eval.cache(&feature)?;
        w.redundancy_sum += self.eval.redundancy_increment(w, &cached)?;
        w.cache.push(cached);
        w.set.push(feature)?;
        w.key.push((meta, partner));
        let metrics = self.eval.evaluate(&w.key, &w.hashed_columns())?;
        let acc = metrics.accuracy.as_f64();
        let (rv, rd) = (w.relevance().as_f64(), w.redundancy().as_f64());
        let (r1, r2) = compute_rewards(acc, window_best, rv, rd, &self.cfg.weights);

        let next_state = w.state(self.cfg.hash.modulus)?;
        let terminal = step == self.cfg.steps_per_episode;
        let next_metas = if terminal { Vec::new() } else { self.meta_candidates(w) };
        if !mode.greedy_meta() {
            let next_actions = next_metas.iter().map(|&m| w.rep(m).to_vec()).collect();
            self.meta.remember(Transition {
                state: state.clone(),
                action: w.rep(meta).to_vec(),
                reward: T::lit(r1),
                next_state: next_state.clone(),
                next_actions,
            });
            self.meta.train_step()?;
        }
        if !mode.greedy_controller() {
            let next_actions = if next_metas.is_empty() {
                Vec::new()
            } else {
                w.set.legal_partners(meta).into_iter().map(|p| concat(w.rep(p), w.rep(meta))).collect()
            };
            self.controller.remember(Transition {
                state,
                action: concat(w.rep(partner), w.rep(meta)),
                reward: T::lit(r2),
                next_state,
                next_actions,
            });
            self.controller.train_step()?;
        }
        self.best.offer(acc, &metrics, &w.set, (episode, step));
        Ok(Some(Taken { meta, partner, acc, rv, rd, r1, r2 }))
    }

    fn episode(&mut self, episode: usize) -> Result<EpisodeSummary> {
        let mut w = self.base.clone();
        let mut window_best = self.raw_acc;
        self.steps.push(StepLog {
            episode,
            step: 0,
            action_meta: None,
            action_partner: None,
            acc: Some(self.raw_acc),
            rv: Some(w.relevance().as_f64()),
            rd: Some(w.redundancy().as_f64()),
            r1: None,
            r2: None,
            n_features: w.set.len(),
            best_acc: self.best.best_accuracy,
        });
        let (mut r1s, mut r2s) = (Vec::new(), Vec::new());
        for step in 1..=self.cfg.steps_per_episode {
            let taken = self.step(&mut w, episode, step, window_best)?;
            let mut log = StepLog {
                episode,
                step,
                action_meta: None,
                action_partner: None,
                acc: None,
                rv: None,
                rd: None,
                r1: None,
                r2: None,
                n_features: w.set.len(),
                best_acc: self.best.best_accuracy,
            };
            match taken {
                Some(t) => {
                    window_best = window_best.max(t.acc);
                    log.action_meta = Some(w.set.features()[t.meta].name.clone());
                    log.action_partner = Some(w.set.features()[t.partner].name.clone());
                    (log.acc, log.rv, log.rd) = (Some(t.acc), Some(t.rv), Some(t.rd));
                    (log.r1, log.r2) = (Some(t.r1), Some(t.r2));
                    r1s.push(t.r1);
                    r2s.push(t.r2);
                }
                None => {
                    r1s.push(0.0);
                    r2s.push(0.0);
                }
            }
            self.steps.push(log);
        }
        Ok(EpisodeSummary {
            episode,
            return_meta: discounted_return(&r1s, self.cfg.meta_agent.gamma),
            return_controller: discounted_return(&r2s, self.cfg.controller_agent.gamma),
            episode_best: window_best,
            best_acc: self.best.best_accuracy,
        })
    }
}

fn agent_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Downstream metrics of the original (binned, hashed) features.
pub fn raw_baseline<T: Scalar>(cfg: &RunConfig, data: &Dataset) -> Result<(ClassificationMetrics<T>, FeatureSet, CrossRecipe)> {
    cfg.validate()?;
    let split = data.split(cfg.train_fraction, cfg.seed)?;
    let classes = data.class_index(&split);
    let (set, recipe) = prepare_originals(data, &classes.ids, classes.n_classes(), &split.train, &cfg.binning, cfg.hash)?;
    let cols: Vec<Vec<u32>> = set.features().iter().map(|f| f.hashed(cfg.hash)).collect();
    let refs: Vec<&[u32]> = cols.iter().map(Vec::as_slice).collect();
    let m = train_eval::<T>(&refs, cfg.hash, &classes.ids, classes.n_classes(), &split, &cfg.downstream)?;
    Ok((m, set, recipe))
}

/// Runs the full search: `episodes x steps_per_episode` steps, each episode
/// starting from the original features.
pub fn run<T: Scalar>(cfg: &RunConfig, data: &Dataset) -> Result<RunOutcome<T>> {
    cfg.validate()?;
    let split = data.split(cfg.train_fraction, cfg.seed)?;
    let classes = data.class_index(&split);
    let (set, recipe) = prepare_originals(data, &classes.ids, classes.n_classes(), &split.train, &cfg.binning, cfg.hash)?;
    if set.len() < 2 {
        return Err(Error::arg("crossing needs at least two features"));
    }
    let train_labels = split.train.iter().map(|&i| classes.ids[i]).collect();
    let mut eval = Evaluator::<T> {
        labels: classes.ids.clone(),
        train_labels,
        n_classes: classes.n_classes(),
        split,
        hash: cfg.hash,
        lr: cfg.downstream,
        mi_on: cfg.mi_on,
        memo: HashMap::new(),
    };
    let base = eval.working(set.clone())?;
    let raw = eval.evaluate(&[], &base.hashed_columns())?;
    let raw_acc = raw.accuracy.as_f64();
    let best = BestSetMemory { best_accuracy: raw_acc, metrics: raw, feature_set: set, recipe, changed_at: None };
    let mut search = Search {
        meta: Agent::with_rng(META_INPUT, cfg.meta_agent, agent_rng(cfg.seed, 1))?,
        controller: Agent::with_rng(CONTROLLER_INPUT, cfg.controller_agent, agent_rng(cfg.seed, 2))?,
        cfg: cfg.clone(),
        eval,
        base,
        raw_acc,
        best,
        steps: Vec::new(),
    };
    let mut episodes = Vec::with_capacity(cfg.episodes);
    for e in 0..cfg.episodes {
        episodes.push(search.episode(e)?);
    }
    Ok(RunOutcome {
        raw,
        best: search.best,
        steps: search.steps,
        episodes,
        evaluations: search.eval.memo.len(),
    })
}

/// Per-episode view of when the remembered best set last changed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub episode: usize,
    /// Best accuracy at the end of the episode.
    pub best_acc: f64,
    /// Position in the step log of the last improvement up to the end of
    /// the episode, or -1 while the original set is still the best.
    pub last_change_step: i64,
}

/// Summarises a step log. An improvement is a record whose `best_acc`
/// exceeds the previous record's.
pub fn convergence(steps: &[StepLog]) -> Vec<ConvergenceRow> {
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    let mut last_change = -1i64;
    for (i, s) in steps.iter().enumerate() {
        if i > 0 && s.best_acc > steps[i - 1].best_acc {
            last_change = i as i64;
        }
        match rows.last_mut() {
            Some(row) if row.episode == s.episode => {
                row.best_acc = s.best_acc;
                row.last_change_step = last_change;
            }
            _ => rows.push(ConvergenceRow { episode: s.episode, best_acc: s.best_acc, last_change_step: last_change }),
        }
    }
    rows
}
