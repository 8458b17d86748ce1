use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::metrics::classify;
use super::{EvomlError, Node, Tree};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    /// Labels in {-1, +1}; fitness is the misclassification count.
    Classify,
    /// Fitness is the mean absolute error.
    Regress,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpConfig {
    pub population_size: usize,
    pub generations: usize,
    pub p_reproduction: f64,
    pub p_crossover: f64,
    pub p_mutation: f64,
    pub max_depth: usize,
    pub init_depth: usize,
    pub tournament_size: usize,
    /// Maximum depth of subtrees grown by mutation.
    pub mutation_depth: usize,
    /// Probability that a terminal is a feature rather than a constant.
    pub p_feature: f64,
    /// Ephemeral constants are drawn uniformly from [-c, c].
    pub constant_range: f64,
    pub seed: u64,
}

impl Default for GpConfig {
    fn default() -> Self {
        GpConfig {
            population_size: 100,
            generations: 10,
            p_reproduction: 0.1,
            p_crossover: 0.5,
            p_mutation: 0.5,
            max_depth: 17,
            init_depth: 6,
            tournament_size: 4,
            mutation_depth: 4,
            p_feature: 0.7,
            constant_range: 1.0,
            seed: 0,
        }
    }
}

impl GpConfig {
    pub fn validate(&self) -> Result<(), EvomlError> {
        let bad = |m: &str| Err(EvomlError::InvalidConfig(m.into()));
        for (name, p) in [
            ("p_reproduction", self.p_reproduction),
            ("p_crossover", self.p_crossover),
            ("p_mutation", self.p_mutation),
            ("p_feature", self.p_feature),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(&format!("{name} = {p} outside [0, 1]"));
            }
        }
        if self.p_crossover + self.p_mutation <= 0.0 && self.p_reproduction < 1.0 {
            return bad("p_crossover and p_mutation are both zero");
        }
        if self.max_depth < 1 || self.init_depth < 1 || self.mutation_depth < 1 {
            return bad("depths must be at least 1");
        }
        if self.population_size < 2 {
            return bad("population_size must be at least 2");
        }
        if self.tournament_size < 1 {
            return bad("tournament_size must be at least 1");
        }
        if !(self.constant_range >= 0.0 && self.constant_range.is_finite()) {
            return bad("constant_range must be finite and non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpIndividual {
    pub tree: Tree,
    pub fitness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpRun {
    pub best: GpIndividual,
    /// Best-so-far fitness after initialization and after each generation.
    pub trace: Vec<f64>,
    /// Largest tree depth seen in any population.
    pub max_depth_seen: usize,
}

struct Builder<'a> {
    config: &'a GpConfig,
    n_features: usize,
}

impl Builder<'_> {
    fn terminal(&self, rng: &mut ChaCha8Rng) -> Node {
        if self.n_features > 0 && rng.random::<f64>() < self.config.p_feature {
            Node::Var(rng.random_range(0..self.n_features))
        } else {
            let c = self.config.constant_range;
            Node::Const(if c > 0.0 { rng.random_range(-c..=c) } else { 0.0 })
        }
    }

    fn function(&self, rng: &mut ChaCha8Rng) -> Node {
        Node::FUNCTIONS[rng.random_range(0..Node::FUNCTIONS.len())]
    }

    /// Full trees reach `depth` on every branch; grow trees stop early at
    /// random.
    fn build(&self, rng: &mut ChaCha8Rng, depth: usize, full: bool, out: &mut Vec<Node>) {
        let node = if depth <= 1 || (!full && rng.random::<f64>() < 0.5) {
            self.terminal(rng)
        } else {
            self.function(rng)
        };
        out.push(node);
        for _ in 0..node.arity() {
            self.build(rng, depth - 1, full, out);
        }
    }

    fn tree(&self, rng: &mut ChaCha8Rng, depth: usize, full: bool) -> Tree {
        let mut nodes = Vec::new();
        self.build(rng, depth, full, &mut nodes);
        Tree::new(nodes).expect("builder emits arity-correct trees")
    }
}

fn init(config: &GpConfig, n_features: usize, rng: &mut ChaCha8Rng) -> Vec<Tree> {
    let b = Builder { config, n_features };
    let top = config.init_depth.min(config.max_depth);
    (0..config.population_size)
        .map(|i| {
            // equal-size bins over depths 1..=top, alternating full and grow
            let depth = 1 + i * top / config.population_size;
            b.tree(rng, depth, i % 2 == 0)
        })
        .collect()
}

/// Ramped half-and-half initial population.
pub fn gp_init_population(config: &GpConfig, n_features: usize) -> Result<Vec<Tree>, EvomlError> {
    config.validate()?;
    Ok(init(config, n_features, &mut ChaCha8Rng::seed_from_u64(config.seed)))
}

fn fitness(tree: &Tree, rows: &[Vec<f64>], targets: &[f64], task: Task) -> f64 {
    match task {
        Task::Classify => rows.iter().zip(targets).filter(|(r, &y)| classify(tree, r) != y).count() as f64,
        Task::Regress => {
            rows.iter().zip(targets).map(|(r, y)| (tree.eval(r) - y).abs()).sum::<f64>() / rows.len() as f64
        }
    }
}

fn evaluate_all(pop: &[Tree], rows: &[Vec<f64>], targets: &[f64], task: Task) -> Vec<f64> {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(pop.len()).max(1);
    let chunk = pop.len().div_ceil(threads);
    let mut out = vec![0.0; pop.len()];
    std::thread::scope(|s| {
        for (trees, slot) in pop.chunks(chunk).zip(out.chunks_mut(chunk)) {
            s.spawn(move || {
                for (t, f) in trees.iter().zip(slot) {
                    *f = fitness(t, rows, targets, task);
                }
            });
        }
    });
    out
}

fn tournament(fit: &[f64], size: usize, rng: &mut ChaCha8Rng) -> usize {
    let mut best = rng.random_range(0..fit.len());
    for _ in 1..size {
        let c = rng.random_range(0..fit.len());
        if fit[c] < fit[best] || (fit[c] == fit[best] && c < best) {
            best = c;
        }
    }
    best
}

fn crossover(a: &Tree, b: &Tree, rng: &mut ChaCha8Rng) -> (Tree, Tree) {
    let i = rng.random_range(0..a.len());
    let j = rng.random_range(0..b.len());
    let sub_a = &a.nodes()[i..a.subtree_end(i)];
    let sub_b = &b.nodes()[j..b.subtree_end(j)];
    (a.replace(i, sub_b), b.replace(j, sub_a))
}

fn best_index(fit: &[f64]) -> usize {
    let mut best = 0;
    for (i, &f) in fit.iter().enumerate() {
        if f < fit[best] {
            best = i;
        }
    }
    best
}

/// Generational GP with tournament selection and elitism of one.
pub fn gp_evolve(config: &GpConfig, rows: &[Vec<f64>], targets: &[f64], task: Task) -> Result<GpRun, EvomlError> {
    config.validate()?;
    if rows.is_empty() || targets.len() != rows.len() {
        return Err(EvomlError::EmptyTrainingSet);
    }
    let n_features = rows[0].len();
    if let Some((row, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n_features) {
        return Err(EvomlError::RaggedRows { row, expected: n_features, got: r.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let builder = Builder { config, n_features };
    let mut pop = init(config, n_features, &mut rng);
    let mut fit = evaluate_all(&pop, rows, targets, task);
    let mut max_depth_seen = pop.iter().map(Tree::depth).max().unwrap_or(0);
    let b = best_index(&fit);
    let mut best = GpIndividual { tree: pop[b].clone(), fitness: fit[b] };
    let mut trace = vec![best.fitness];
    let p_cross = config.p_crossover / (config.p_crossover + config.p_mutation).max(f64::MIN_POSITIVE);
    for _ in 0..config.generations {
        let mut next = Vec::with_capacity(config.population_size);
        next.push(best.tree.clone());
        while next.len() < config.population_size {
            let pa = tournament(&fit, config.tournament_size, &mut rng);
            if rng.random::<f64>() < config.p_reproduction {
                next.push(pop[pa].clone());
            } else if rng.random::<f64>() < p_cross {
                let pb = tournament(&fit, config.tournament_size, &mut rng);
                let (c1, c2) = crossover(&pop[pa], &pop[pb], &mut rng);
                next.push(if c1.depth() <= config.max_depth { c1 } else { pop[pa].clone() });
                if next.len() < config.population_size {
                    next.push(if c2.depth() <= config.max_depth { c2 } else { pop[pb].clone() });
                }
            } else {
                let parent = &pop[pa];
                let at = rng.random_range(0..parent.len());
                let depth = rng.random_range(1..=config.mutation_depth);
                let sub = builder.tree(&mut rng, depth, false);
                let child = parent.replace(at, sub.nodes());
                next.push(if child.depth() <= config.max_depth { child } else { parent.clone() });
            }
        }
        pop = next;
        fit = evaluate_all(&pop, rows, targets, task);
        max_depth_seen = max_depth_seen.max(pop.iter().map(Tree::depth).max().unwrap_or(0));
        let b = best_index(&fit);
        if fit[b] < best.fitness {
            best = GpIndividual { tree: pop[b].clone(), fitness: fit[b] };
        }
        trace.push(best.fitness);
    }
    Ok(GpRun { best, trace, max_depth_seen })
}
