//! Genetic search for synthetic minority samples.
//!
//! A candidate `x_a` evolved from a query `x_q` scores
//! `V · (w1·A + w2·D + w3·(1 − S))` where
//!
//! * `V` is 1 when the surrogate assigns `x_a` to the target class,
//! * `A` is the fraction of finite bound sides of the class box that `x_a`
//!   satisfies,
//! * `D` is the range-scaled Euclidean distance to `x_q` divided by `√d`
//!   (each scaled coordinate capped at 1),
//! * `S` is the fraction of features that moved by more than their sparsity
//!   tolerance.
//!
//! Gene values live on a per-feature dyadic grid (a power of two about 2⁻³²
//! of the feature's magnitude), which makes every generation-to-generation
//! delta exact: a trace's deltas always sum bit-for-bit to the total change.

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dpg::{check_bounds, ClassBounds, Interval, Side};
use crate::error::{Error, Result};
use crate::forest::Forest;
use crate::seed;
use crate::tabular::{ClassId, FeatureStats};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessWeights {
    /// Weight of constraint adherence (`w1`).
    pub adherence: f64,
    /// Weight of distance from the query (`w2`).
    pub distance: f64,
    /// Weight of the sparsity complement (`w3`).
    pub sparsity: f64,
}

impl Default for FitnessWeights {
    fn default() -> Self {
        FitnessWeights { adherence: 2.0, distance: 1.0, sparsity: 3.0 }
    }
}

impl FitnessWeights {
    pub fn new(adherence: f64, distance: f64, sparsity: f64) -> Result<Self> {
        let w = FitnessWeights { adherence, distance, sparsity };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.adherence, self.distance, self.sparsity];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) || all.iter().all(|w| *w == 0.0) {
            return Err(Error::InvalidConfig(format!("weights must be non-negative and not all zero, got {all:?}")));
        }
        Ok(())
    }

    pub fn max_fitness(&self) -> f64 {
        self.adherence + self.distance + self.sparsity
    }

    pub fn as_triple(&self) -> (f64, f64, f64) {
        (self.adherence, self.distance, self.sparsity)
    }
}

impl std::str::FromStr for FitnessWeights {
    type Err = Error;

    /// Parses `"w1,w2,w3"`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::InvalidConfig(format!("weights `{s}` are not three numbers")))?;
        match parts[..] {
            [a, d, sp] => FitnessWeights::new(a, d, sp),
            _ => Err(Error::InvalidConfig(format!("weights `{s}` must have three entries"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population_size: usize,
    pub max_generations: usize,
    pub plateau_patience: usize,
    pub plateau_epsilon: f64,
    pub tournament_size: usize,
    pub crossover_rate: f64,
    /// Mutation σ as a fraction of each feature's box width.
    pub mutation_sigma_fraction: f64,
    /// Per-gene mutation probability; `None` means `1/d`.
    pub mutation_probability: Option<f64>,
    pub elitism_count: usize,
    /// Sparsity tolerance as a fraction of each feature's range.
    pub sparsity_epsilon_fraction: f64,
    pub retries_on_infeasible: usize,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population_size: 50,
            max_generations: 100,
            plateau_patience: 10,
            plateau_epsilon: 1e-9,
            tournament_size: 3,
            crossover_rate: 0.9,
            mutation_sigma_fraction: 0.1,
            mutation_probability: None,
            elitism_count: 1,
            sparsity_epsilon_fraction: 1e-6,
            retries_on_infeasible: 3,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.population_size < 2 {
            return bad(format!("population_size must be >= 2, got {}", self.population_size));
        }
        if self.max_generations == 0 || self.plateau_patience == 0 || self.tournament_size == 0 {
            return bad("max_generations, plateau_patience and tournament_size must be >= 1".into());
        }
        if self.elitism_count >= self.population_size {
            return bad("elitism_count must be smaller than population_size".into());
        }
        for (name, r) in
            [("crossover_rate", Some(self.crossover_rate)), ("mutation_probability", self.mutation_probability)]
        {
            if let Some(r) = r {
                if !(0.0..=1.0).contains(&r) {
                    return bad(format!("{name} must lie in [0,1], got {r}"));
                }
            }
        }
        if [self.mutation_sigma_fraction, self.sparsity_epsilon_fraction].iter().any(|f| f.is_nan() || *f < 0.0) {
            return bad("fractions must be non-negative".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Components {
    /// Validity gate, 0 or 1.
    pub v: u8,
    pub a: f64,
    pub d: f64,
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub x: Vec<f64>,
    pub fitness: f64,
    pub components: Components,
}

impl Candidate {
    pub fn is_feasible(&self) -> bool {
        self.components.v == 1 && self.components.a == 1.0
    }
}

/// Combines stored components into a fitness value.
pub fn combine(c: &Components, w: &FitnessWeights) -> f64 {
    f64::from(c.v) * (w.adherence * c.a + w.distance * c.d + w.sparsity * (1.0 - c.s))
}

/// Per-feature change tolerance for the sparsity count: `fraction · range`,
/// or `1e-12` for constant features.
pub fn sparsity_thresholds(stats: &FeatureStats, fraction: f64) -> Vec<f64> {
    stats.ranges().into_iter().map(|r| if r > 0.0 { fraction * r } else { 1e-12 }).collect()
}

/// Scores one candidate. See the module docs for each component.
#[allow(clippy::too_many_arguments)]
pub fn fitness(
    x_a: &[f64],
    x_q: &[f64],
    bounds: &ClassBounds,
    cls: ClassId,
    forest: &Forest,
    w: &FitnessWeights,
    stats: &FeatureStats,
    eps: &[f64],
) -> Result<Candidate> {
    let d = forest.n_features;
    for len in [x_a.len(), x_q.len(), stats.n_features(), eps.len(), bounds.n_features] {
        if len != d {
            return Err(Error::DimensionMismatch { expected: d, got: len });
        }
    }
    let class_box = bounds.box_for(cls)?;
    let scorer = Scorer { forest, class: cls, class_box: &class_box, ranges: &stats.ranges(), eps, weights: w };
    Ok(scorer.score(x_a.to_vec(), x_q))
}

struct Scorer<'a> {
    forest: &'a Forest,
    class: ClassId,
    class_box: &'a [Interval],
    ranges: &'a [f64],
    eps: &'a [f64],
    weights: &'a FitnessWeights,
}

impl Scorer<'_> {
    fn score(&self, x: Vec<f64>, query: &[f64]) -> Candidate {
        let d = x.len();
        let v = u8::from(self.forest.predict_unchecked(&x) == self.class);

        let (mut sides, mut held) = (0usize, 0usize);
        for (iv, &xi) in self.class_box.iter().zip(&x) {
            if iv.lower.is_finite() {
                sides += 1;
                held += usize::from(xi >= iv.lower);
            }
            if iv.upper.is_finite() {
                sides += 1;
                held += usize::from(xi <= iv.upper);
            }
        }
        let a = if sides == 0 { 1.0 } else { held as f64 / sides as f64 };

        let mut sq = 0.0;
        let mut changed = 0usize;
        for f in 0..d {
            let delta = (x[f] - query[f]).abs();
            if self.ranges[f] > 0.0 {
                sq += (delta / self.ranges[f]).min(1.0).powi(2);
            }
            changed += usize::from(delta > self.eps[f]);
        }
        let dist = if d == 0 { 0.0 } else { (sq / d as f64).sqrt() };
        let s = if d == 0 { 0.0 } else { changed as f64 / d as f64 };

        let components = Components { v, a, d: dist, s };
        Candidate { fitness: combine(&components, self.weights), x, components }
    }
}

/// Best individual of one generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub generation: usize,
    pub best: Candidate,
    /// `best − previous best`; at generation 0, `best − query`.
    pub delta: Vec<f64>,
    /// Class-box sides the best individual breaks.
    pub violations: Vec<(usize, Side)>,
    /// The query the run started from; present on generation 0 only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query: Option<Vec<f64>>,
}

/// Inputs of one evolution.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub query: &'a [f64],
    pub class: ClassId,
    pub bounds: &'a ClassBounds,
    pub forest: &'a Forest,
    pub weights: &'a FitnessWeights,
    /// Extrema of the surrogate's training data: scales `D`, `S` and the
    /// sampling box on unbounded sides.
    pub stats: &'a FeatureStats,
    /// Reported in `InfeasibleAugmentation` errors.
    pub query_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evolution {
    /// Query as placed on the gene grid.
    pub query: Vec<f64>,
    pub accepted: Candidate,
    pub trace: Vec<TraceRecord>,
    /// Attempts used, 1 when the first run succeeded.
    pub attempts: usize,
}

/// Per-feature search geometry.
struct Gene {
    lo: f64,
    hi: f64,
    /// Clamp applied after mutation on sides the class box leaves open.
    floor: f64,
    ceil: f64,
    sigma: f64,
    quantum: f64,
    fixed: bool,
}

impl Gene {
    fn snap(&self, v: f64) -> f64 {
        if self.fixed {
            return self.lo;
        }
        let s = (v / self.quantum).round() * self.quantum;
        if s == 0.0 {
            0.0
        } else {
            s
        }
    }

    fn draw(&self, rng: &mut seed::Rng) -> f64 {
        if self.fixed || self.hi <= self.lo {
            return self.snap(self.lo);
        }
        self.snap(rng.random_range(self.lo..=self.hi))
    }
}

fn genes(class_box: &[Interval], stats: &FeatureStats, query: &[f64], sigma_fraction: f64) -> Vec<Gene> {
    class_box
        .iter()
        .enumerate()
        .map(|(f, iv)| {
            let lo = if iv.lower.is_finite() { iv.lower } else { stats.min[f] };
            let mut hi = if iv.upper.is_finite() { iv.upper } else { stats.max[f] };
            if hi < lo {
                hi = lo;
            }
            let floor = if iv.lower.is_finite() { f64::NEG_INFINITY } else { stats.min[f] };
            let ceil = if iv.upper.is_finite() { f64::INFINITY } else { stats.max[f] };
            let magnitude = lo.abs().max(hi.abs()).max(query[f].abs()).max(f64::MIN_POSITIVE);
            let quantum = 2f64.powi(magnitude.log2().ceil() as i32 - 32);
            Gene { lo, hi, floor, ceil, sigma: sigma_fraction * (hi - lo), quantum, fixed: lo == hi }
        })
        .collect()
}

fn differs(x: &[f64], query: &[f64], eps: &[f64]) -> bool {
    x.iter().zip(query).zip(eps).any(|((a, b), e)| (a - b).abs() > *e)
}

/// Evolves one synthetic sample from `problem.query`.
///
/// Each individual starts as a uniform draw inside the class box (open sides
/// fall back to the training extrema) whose genes each revert to the query
/// value with probability 1/2. Generations apply elitism, tournament
/// selection, uniform crossover and per-gene Gaussian mutation. Mutation is
/// not clipped to the class box, so infeasible candidates can survive and
/// are penalised through `A`; on open sides values are clamped to the
/// training extrema. Any individual that ends up identical to the query gets
/// one gene redrawn, so every candidate is a genuinely new point.
///
/// The run stops once the best fitness has improved by at most
/// `plateau_epsilon` for `plateau_patience` consecutive generations, or
/// after `max_generations`. The accepted sample is the fittest individual
/// seen with `V = 1` and `A = 1`. Without one, the search restarts from a
/// fresh seed up to `retries_on_infeasible` times before failing.
pub fn evolve(problem: &Problem<'_>, cfg: &GaConfig) -> Result<Evolution> {
    cfg.validate()?;
    problem.weights.validate()?;
    let forest = problem.forest;
    let d = forest.n_features;
    if problem.query.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: problem.query.len() });
    }
    if problem.stats.n_features() != d || problem.bounds.n_features != d {
        return Err(Error::DimensionMismatch { expected: d, got: problem.stats.n_features() });
    }
    let class_box = problem.bounds.box_for(problem.class)?;
    let genes = genes(&class_box, problem.stats, problem.query, cfg.mutation_sigma_fraction);
    let query: Vec<f64> = genes.iter().zip(problem.query).map(|(g, &q)| if g.fixed { q } else { g.snap(q) }).collect();
    let ranges = problem.stats.ranges();
    let eps = sparsity_thresholds(problem.stats, cfg.sparsity_epsilon_fraction);
    let scorer = Scorer {
        forest,
        class: problem.class,
        class_box: &class_box,
        ranges: &ranges,
        eps: &eps,
        weights: problem.weights,
    };
    let run = Run {
        cfg,
        genes: &genes,
        query: &query,
        eps: &eps,
        scorer: &scorer,
        bounds: problem.bounds,
        class: problem.class,
        mutation_probability: cfg.mutation_probability.unwrap_or(1.0 / d.max(1) as f64),
    };
    for attempt in 0..=cfg.retries_on_infeasible {
        let mut rng = seed::child_rng(cfg.seed, &[attempt as u64]);
        let (trace, accepted) = run.execute(&mut rng);
        if let Some(accepted) = accepted {
            return Ok(Evolution { query, accepted, trace, attempts: attempt + 1 });
        }
    }
    Err(Error::InfeasibleAugmentation { query_index: problem.query_index, attempts: cfg.retries_on_infeasible + 1 })
}

struct Run<'a> {
    cfg: &'a GaConfig,
    genes: &'a [Gene],
    query: &'a [f64],
    eps: &'a [f64],
    scorer: &'a Scorer<'a>,
    bounds: &'a ClassBounds,
    class: ClassId,
    mutation_probability: f64,
}

impl Run<'_> {
    fn repair(&self, x: &mut [f64], rng: &mut seed::Rng) {
        let movable: Vec<usize> = (0..x.len()).filter(|&f| !self.genes[f].fixed).collect();
        // a point box leaves nothing to move; such candidates can only be
        // the point itself
        for _ in 0..64 {
            if differs(x, self.query, self.eps) || movable.is_empty() {
                return;
            }
            let f = movable[rng.random_range(0..movable.len())];
            x[f] = self.genes[f].draw(rng);
        }
    }

    fn initial(&self, rng: &mut seed::Rng) -> Vec<f64> {
        let mut x: Vec<f64> = self
            .genes
            .iter()
            .zip(self.query)
            .map(|(g, &q)| {
                let drawn = g.draw(rng);
                if rng.random_bool(0.5) {
                    drawn
                } else {
                    q
                }
            })
            .collect();
        if self.genes.iter().any(|g| g.fixed) {
            for (f, g) in self.genes.iter().enumerate() {
                if g.fixed && rng.random_bool(0.5) {
                    x[f] = g.lo;
                }
            }
        }
        self.repair(&mut x, rng);
        x
    }

    fn tournament<'p>(&self, pop: &'p [Candidate], rng: &mut seed::Rng) -> &'p Candidate {
        let mut best = rng.random_range(0..pop.len());
        for _ in 1..self.cfg.tournament_size {
            let i = rng.random_range(0..pop.len());
            if pop[i].fitness > pop[best].fitness || (pop[i].fitness == pop[best].fitness && i < best) {
                best = i;
            }
        }
        &pop[best]
    }

    fn offspring(&self, pop: &[Candidate], rng: &mut seed::Rng) -> Vec<f64> {
        let p1 = self.tournament(pop, rng);
        let p2 = self.tournament(pop, rng);
        let mut child: Vec<f64> = if rng.random_bool(self.cfg.crossover_rate) {
            p1.x.iter().zip(&p2.x).map(|(&a, &b)| if rng.random_bool(0.5) { a } else { b }).collect()
        } else {
            p1.x.clone()
        };
        for (f, g) in self.genes.iter().enumerate() {
            if g.fixed || g.sigma <= 0.0 || !rng.random_bool(self.mutation_probability) {
                continue;
            }
            let noise = Normal::new(0.0, g.sigma).expect("sigma is positive").sample(rng);
            child[f] = g.snap((child[f] + noise).clamp(g.floor, g.ceil));
        }
        self.repair(&mut child, rng);
        child
    }

    fn record(&self, generation: usize, best: &Candidate, previous: &[f64]) -> TraceRecord {
        // the class box is known to exist by now
        let violations = check_bounds(self.bounds, self.class, &best.x).map(|c| c.violations).unwrap_or_default();
        TraceRecord {
            generation,
            delta: best.x.iter().zip(previous).map(|(a, b)| a - b).collect(),
            best: best.clone(),
            violations,
            query: (generation == 0).then(|| self.query.to_vec()),
        }
    }

    fn execute(&self, rng: &mut seed::Rng) -> (Vec<TraceRecord>, Option<Candidate>) {
        let cfg = self.cfg;
        let mut pop: Vec<Candidate> = (0..cfg.population_size)
            .map(|_| {
                let x = self.initial(rng);
                self.scorer.score(x, self.query)
            })
            .collect();
        let mut trace: Vec<TraceRecord> = Vec::new();
        let mut accepted: Option<Candidate> = None;
        let mut stall = 0;
        for generation in 0..cfg.max_generations {
            if generation > 0 {
                let mut order: Vec<usize> = (0..pop.len()).collect();
                order.sort_by(|&a, &b| pop[b].fitness.total_cmp(&pop[a].fitness).then(a.cmp(&b)));
                let mut next: Vec<Candidate> = order[..cfg.elitism_count].iter().map(|&i| pop[i].clone()).collect();
                while next.len() < cfg.population_size {
                    let x = self.offspring(&pop, rng);
                    next.push(self.scorer.score(x, self.query));
                }
                pop = next;
            }
            let best =
                pop.iter().reduce(|a, b| if b.fitness > a.fitness { b } else { a }).expect("population is non-empty");
            for c in pop.iter().filter(|c| c.is_feasible()) {
                if accepted.as_ref().is_none_or(|a| c.fitness > a.fitness) {
                    accepted = Some(c.clone());
                }
            }
            let previous = trace.last().map_or(self.query, |r: &TraceRecord| r.best.x.as_slice());
            let improvement = trace.last().map(|r| best.fitness - r.best.fitness);
            let rec = self.record(generation, best, previous);
            trace.push(rec);
            if let Some(imp) = improvement {
                stall = if imp <= cfg.plateau_epsilon { stall + 1 } else { 0 };
                if stall >= cfg.plateau_patience {
                    break;
                }
            }
        }
        (trace, accepted)
    }
}
