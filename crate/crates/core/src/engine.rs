//! The MOEA/D generation loop for GP classifiers.
//!
//! Each of the N sub-problems owns one weight vector and one population
//! slot. Per generation, every sub-problem breeds one offspring from two
//! parents drawn from its neighborhood, updates the ideal point and then
//! offers the offspring to the neighborhood:
//!
//! - canonical update: every neighbor the offspring scores at least as well
//!   as is replaced, so one offspring can occupy several slots;
//! - semantic update: neighbors are visited from the most to the least
//!   semantically dissimilar relative to a pivot taken from the sparsest part
//!   of the archive, and only the first strictly worse neighbor is replaced.
//!
//! After each generation the external archive absorbs the population and
//! drops dominated members.

use std::collections::HashMap;
use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dataset::{Dataset, SplitDataset};
use crate::decomp::{
    build_neighborhoods, is_better, is_better_or_equal, uniform_weights, update_ideal, DecompError, IdealPoint,
    NeighborhoodTable, ScalarValue, Scalarizer, WeightVector,
};
use crate::gp::{ramped_half_and_half, subtree_crossover, subtree_mutation, GpParams, ParamsError, ProgramTree};
use crate::metrics::{crowding_distance, duplication_histogram, hypervolume_2d, nondominated_indices, FrontPoint};
use crate::objectives::{evaluate_objectives, ObjectiveError, ObjectiveVector};

#[derive(Debug, Error, PartialEq)]
pub enum EngineError {
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(transparent)]
    Decomp(#[from] DecompError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error("invalid engine configuration: {0}")]
    Config(String),
    #[error("semantics lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("cannot pick a pivot from an empty archive")]
    EmptyArchive,
}

/// A program with its cached training semantics and objectives.
#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    /// Birth number within a run. Copies of one offspring placed in several
    /// population slots share the id.
    pub id: u64,
    pub tree: ProgramTree,
    pub semantics: Vec<f64>,
    pub objectives: ObjectiveVector,
}

impl Individual {
    pub fn evaluate(id: u64, tree: ProgramTree, data: &Dataset) -> Result<Self, EngineError> {
        let semantics = tree.evaluate(data.columns());
        let objectives = evaluate_objectives(&semantics, data.labels())?;
        Ok(Individual {
            id,
            tree,
            semantics,
            objectives,
        })
    }
}

/// Number of fitness cases on which two outputs differ by less than `ubss`.
/// Larger means more similar.
pub fn semantic_distance(pivot: &[f64], other: &[f64], ubss: f64) -> Result<usize, EngineError> {
    if pivot.len() != other.len() {
        return Err(EngineError::LengthMismatch(pivot.len(), other.len()));
    }
    Ok(pivot.iter().zip(other).filter(|(p, v)| (*p - *v).abs() < ubss).count())
}

/// Comparison used when offering an offspring to a neighbor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReplacementRule {
    /// Replace when the offspring is at least as good.
    AtLeastAsGood,
    /// Replace only when the offspring is strictly better.
    StrictlyBetter,
}

impl ReplacementRule {
    fn accepts(self, offspring: ScalarValue, incumbent: ScalarValue) -> Result<bool, EngineError> {
        Ok(match self {
            ReplacementRule::AtLeastAsGood => is_better_or_equal(offspring, incumbent)?,
            ReplacementRule::StrictlyBetter => is_better(offspring, incumbent)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParentSelection {
    /// Two distinct neighbors drawn uniformly.
    Random,
    /// Best of `size` uniform draws from the neighborhood, judged by the
    /// sub-problem's own scalar value.
    Tournament(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub gp: GpParams,
    pub scalarizer: Scalarizer,
    pub neighborhood_size: usize,
    pub semantic_ordering: bool,
    /// Upper bound for semantic similarity.
    pub ubss: f64,
    pub seed: u64,
    /// Overrides the default comparison (at-least-as-good for the canonical
    /// update, strictly-better for the semantic update).
    pub replacement: Option<ReplacementRule>,
    pub parent_selection: ParentSelection,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            gp: GpParams::default(),
            scalarizer: Scalarizer::Tchebycheff,
            neighborhood_size: 20,
            semantic_ordering: false,
            ubss: 0.5,
            seed: 0,
            replacement: None,
            parent_selection: ParentSelection::Random,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        self.gp.validate()?;
        self.scalarizer.validate()?;
        if self.neighborhood_size == 0 || self.neighborhood_size > self.gp.population_size {
            return Err(EngineError::Config(format!(
                "neighborhood size {} must be in 1..={}",
                self.neighborhood_size, self.gp.population_size
            )));
        }
        if self.ubss.is_nan() || self.ubss <= 0.0 {
            return Err(EngineError::Config(format!("ubss must be positive, got {}", self.ubss)));
        }
        if let ParentSelection::Tournament(0) = self.parent_selection {
            return Err(EngineError::Config("tournament size must be positive".into()));
        }
        Ok(())
    }

    fn rule(&self) -> ReplacementRule {
        self.replacement.unwrap_or(if self.semantic_ordering {
            ReplacementRule::StrictlyBetter
        } else {
            ReplacementRule::AtLeastAsGood
        })
    }
}

/// Unbounded external population of mutually non-dominated individuals.
/// Members may share objective vectors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Archive {
    members: Vec<Arc<Individual>>,
}

impl Archive {
    pub fn members(&self) -> &[Arc<Individual>] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn objectives(&self) -> Vec<ObjectiveVector> {
        self.members.iter().map(|m| m.objectives).collect()
    }
}

/// Merges the population into the archive and keeps the non-dominated
/// members.
///
/// The merge is a multiset union keyed by individual id: an individual held
/// in `k` population slots ends up with `max(k, copies already archived)`
/// archive entries. Survivors carried over from earlier generations are
/// therefore not counted again, while an offspring copied into several slots
/// shows up with its full multiplicity.
pub fn update_archive(ep: &Archive, population: &[Arc<Individual>]) -> Archive {
    let mut archived: HashMap<u64, usize> = HashMap::new();
    for m in &ep.members {
        *archived.entry(m.id).or_default() += 1;
    }
    let mut candidates = ep.members.clone();
    let mut seen: HashMap<u64, usize> = HashMap::new();
    for ind in population {
        let count = seen.entry(ind.id).or_default();
        *count += 1;
        if *count > archived.get(&ind.id).copied().unwrap_or(0) {
            candidates.push(Arc::clone(ind));
        }
    }
    let points: Vec<ObjectiveVector> = candidates.iter().map(|m| m.objectives).collect();
    Archive {
        members: nondominated_indices(&points)
            .into_iter()
            .map(|i| Arc::clone(&candidates[i]))
            .collect(),
    }
}

/// Member with the largest crowding distance. Extreme members are all
/// infinitely crowded; among them the one farthest from its nearest archive
/// neighbor wins, then the lowest index. Archives of one or two members give
/// a uniformly random member.
pub fn select_pivot<'a, R: Rng + ?Sized>(ep: &'a Archive, rng: &mut R) -> Result<&'a Arc<Individual>, EngineError> {
    let members = ep.members();
    match members.len() {
        0 => return Err(EngineError::EmptyArchive),
        1 | 2 => return Ok(members.choose(rng).expect("non-empty")),
        _ => {}
    }
    let points = ep.objectives();
    let cd = crowding_distance(&points);
    let best_cd = cd.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let candidates: Vec<usize> = (0..cd.len()).filter(|&i| cd[i] == best_cd).collect();
    if candidates.len() == 1 {
        return Ok(&members[candidates[0]]);
    }
    let gap = |i: usize| {
        (0..points.len())
            .filter(|&j| j != i)
            .map(|j| (points[i].tpr - points[j].tpr).hypot(points[i].tnr - points[j].tnr))
            .fold(f64::INFINITY, f64::min)
    };
    let mut best = candidates[0];
    let mut best_gap = gap(best);
    for &i in &candidates[1..] {
        let g = gap(i);
        if g > best_gap {
            best = i;
            best_gap = g;
        }
    }
    Ok(&members[best])
}

/// Outcome of offering one offspring to a neighborhood.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct UpdateOutcome {
    /// Slots now holding the offspring, in replacement order.
    pub replaced: Vec<usize>,
    /// Similarity counts of the neighbors in the order they were tested
    /// (semantic update only).
    pub visited_similarity: Vec<usize>,
}

impl UpdateOutcome {
    pub fn replacements(&self) -> usize {
        self.replaced.len()
    }
}

/// Population together with its sub-problem structure and ideal point.
#[derive(Debug, Clone)]
pub struct Population {
    pub members: Vec<Arc<Individual>>,
    pub weights: Vec<WeightVector>,
    pub neighborhoods: NeighborhoodTable,
    pub ideal: IdealPoint,
    pub scalarizer: Scalarizer,
}

impl Population {
    /// Sets up uniform weights and neighborhoods for `members` and takes the
    /// ideal point from their objectives.
    pub fn new(members: Vec<Arc<Individual>>, neighborhood_size: usize, scalarizer: Scalarizer) -> Result<Self, EngineError> {
        let weights = uniform_weights(members.len(), 2)?;
        let neighborhoods = build_neighborhoods(&weights, neighborhood_size)?;
        let ideal = IdealPoint::from_points(members.iter().map(|m| &m.objectives));
        Ok(Population {
            members,
            weights,
            neighborhoods,
            ideal,
            scalarizer,
        })
    }

    pub fn score(&self, ind: &Individual, subproblem: usize) -> Result<ScalarValue, EngineError> {
        Ok(self
            .scalarizer
            .evaluate(&ind.objectives, &self.weights[subproblem], &self.ideal)?)
    }

    pub fn update_ideal(&mut self, f: &ObjectiveVector) {
        self.ideal = update_ideal(self.ideal, f);
    }

    /// Replaces every neighbor of sub-problem `i` that `y` matches under
    /// `rule`, visiting `B(i)` in table order.
    pub fn canonical_update(&mut self, y: &Arc<Individual>, i: usize, rule: ReplacementRule) -> Result<UpdateOutcome, EngineError> {
        let mut outcome = UpdateOutcome::default();
        for k in 0..self.neighborhoods.row(i).len() {
            let j = self.neighborhoods.row(i)[k];
            if rule.accepts(self.score(y, j)?, self.score(&self.members[j], j)?)? {
                self.members[j] = Arc::clone(y);
                outcome.replaced.push(j);
            }
        }
        Ok(outcome)
    }

    /// Visits `B(i)` in ascending order of similarity to `pivot` (stable, so
    /// ties keep table order) and replaces only the first neighbor that `y`
    /// beats under `rule`.
    pub fn semantic_update(
        &mut self,
        y: &Arc<Individual>,
        i: usize,
        pivot: &Individual,
        ubss: f64,
        rule: ReplacementRule,
    ) -> Result<UpdateOutcome, EngineError> {
        let mut order = Vec::with_capacity(self.neighborhoods.row(i).len());
        for &j in self.neighborhoods.row(i) {
            order.push((semantic_distance(&pivot.semantics, &self.members[j].semantics, ubss)?, j));
        }
        order.sort_by_key(|&(similarity, _)| similarity);

        let mut outcome = UpdateOutcome::default();
        for (similarity, j) in order {
            outcome.visited_similarity.push(similarity);
            if rule.accepts(self.score(y, j)?, self.score(&self.members[j], j)?)? {
                self.members[j] = Arc::clone(y);
                outcome.replaced.push(j);
                break;
            }
        }
        Ok(outcome)
    }
}

/// Hooks for inspecting a run while it executes.
pub trait RunObserver {
    fn on_update(&mut self, _generation: usize, _subproblem: usize, _outcome: &UpdateOutcome) {}
    fn on_generation(&mut self, _generation: usize, _population: &Population, _archive: &Archive) {}
}

/// Observer that ignores everything.
pub struct NoObserver;

impl RunObserver for NoObserver {}

/// Archive state at the end of one generation.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRecord {
    /// 1-based generation number.
    pub generation: usize,
    pub archive: Vec<ObjectiveVector>,
    /// Pivot used during this generation (semantic ordering only).
    pub pivot: Option<ObjectiveVector>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub seed: u64,
    /// Archive in training objective space.
    pub final_archive: Archive,
    /// Archive members re-scored on the test half, non-dominated in test
    /// space.
    pub test_front: Vec<ObjectiveVector>,
    pub per_generation: Vec<GenerationRecord>,
    pub hypervolume_train: f64,
    pub hypervolume_test: f64,
    /// Multiplicity of each distinct training-space archive point.
    pub duplication: Vec<FrontPoint>,
}

pub fn run(config: &EngineConfig, data: &SplitDataset) -> Result<RunResult, EngineError> {
    run_with_observer(config, data, &mut NoObserver)
}

pub fn run_with_observer(
    config: &EngineConfig,
    data: &SplitDataset,
    observer: &mut dyn RunObserver,
) -> Result<RunResult, EngineError> {
    config.validate()?;
    let train = &data.train;
    let n_features = train.feature_count();
    let params = &config.gp;
    let rule = config.rule();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let trees = ramped_half_and_half(params.population_size, params, n_features, &mut rng);
    let mut next_id = 0u64;
    let mut members = Vec::with_capacity(trees.len());
    for tree in trees {
        members.push(Arc::new(Individual::evaluate(next_id, tree, train)?));
        next_id += 1;
    }
    let mut pop = Population::new(members, config.neighborhood_size, config.scalarizer)?;
    let mut archive = update_archive(&Archive::default(), &pop.members);
    let mut per_generation = Vec::with_capacity(params.generations);

    for generation in 1..=params.generations {
        let pivot = if config.semantic_ordering {
            Some(Arc::clone(select_pivot(&archive, &mut rng)?))
        } else {
            None
        };
        for i in 0..pop.members.len() {
            let (k, l) = select_parents(&pop, i, config.parent_selection, &mut rng)?;
            let tree = if rng.random_bool(params.crossover_rate) {
                subtree_crossover(&pop.members[k].tree, &pop.members[l].tree, params, &mut rng)
            } else {
                subtree_mutation(&pop.members[k].tree, params, n_features, &mut rng)
            };
            let y = Arc::new(Individual::evaluate(next_id, tree, train)?);
            next_id += 1;
            pop.update_ideal(&y.objectives);
            let outcome = match &pivot {
                Some(p) => pop.semantic_update(&y, i, p, config.ubss, rule)?,
                None => pop.canonical_update(&y, i, rule)?,
            };
            observer.on_update(generation, i, &outcome);
        }
        archive = update_archive(&archive, &pop.members);
        observer.on_generation(generation, &pop, &archive);
        per_generation.push(GenerationRecord {
            generation,
            archive: archive.objectives(),
            pivot: pivot.map(|p| p.objectives),
        });
    }

    let train_points = archive.objectives();
    let mut test_points = Vec::with_capacity(archive.len());
    for m in archive.members() {
        let semantics = m.tree.evaluate(data.test.columns());
        test_points.push(evaluate_objectives(&semantics, data.test.labels())?);
    }
    let test_front: Vec<ObjectiveVector> = nondominated_indices(&test_points)
        .into_iter()
        .map(|i| test_points[i])
        .collect();
    let out_of_range = |e| EngineError::Config(format!("objective outside unit square: {e}"));

    Ok(RunResult {
        seed: config.seed,
        hypervolume_train: hypervolume_2d(&train_points).map_err(out_of_range)?,
        hypervolume_test: hypervolume_2d(&test_front).map_err(out_of_range)?,
        duplication: duplication_histogram(&train_points),
        test_front,
        per_generation,
        final_archive: archive,
    })
}

fn select_parents<R: Rng + ?Sized>(
    pop: &Population,
    i: usize,
    selection: ParentSelection,
    rng: &mut R,
) -> Result<(usize, usize), EngineError> {
    let hood = pop.neighborhoods.row(i);
    match selection {
        ParentSelection::Random => {
            if hood.len() < 2 {
                return Ok((hood[0], hood[0]));
            }
            let a = rng.random_range(0..hood.len());
            let mut b = rng.random_range(0..hood.len() - 1);
            if b >= a {
                b += 1;
            }
            Ok((hood[a], hood[b]))
        }
        ParentSelection::Tournament(size) => {
            let pick = |rng: &mut R| -> Result<usize, EngineError> {
                let mut best = hood[rng.random_range(0..hood.len())];
                let mut best_score = pop.score(&pop.members[best], i)?;
                for _ in 1..size {
                    let c = hood[rng.random_range(0..hood.len())];
                    let s = pop.score(&pop.members[c], i)?;
                    if is_better(s, best_score)? {
                        best = c;
                        best_score = s;
                    }
                }
                Ok(best)
            };
            let k = pick(rng)?;
            let l = pick(rng)?;
            Ok((k, l))
        }
    }
}
