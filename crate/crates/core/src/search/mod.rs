//! Genetic search for tests that satisfy or violate contracts.
//!
//! The engine ([`run_ga`]) is generic over a set of objectives; contract
//! objectives live here and coverage objectives in [`crate::baseline`].

pub mod generate;
pub mod operators;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::contract::{Contract, ContractKind, Extraction};
use crate::fitness::{Evaluator, Mode};
use crate::lang::{execute_test, ExecOptions, ExecutionTrace, MethodRef, SubjectProgram, Watch};
use crate::testcase::TestCase;

use generate::Generator;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("nothing to plan: the objective list is empty")]
    NoObjectives,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unknown contract '{0}'")]
    UnknownContract(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BudgetMode {
    Generations,
    Seconds,
}

/// Budget of one batch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Budget {
    Generations(u64),
    Seconds(u64),
}

impl Budget {
    pub fn amount(self) -> u64 {
        match self {
            Budget::Generations(n) | Budget::Seconds(n) => n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchConfig {
    pub population: usize,
    /// Contracts per batch.
    pub batch_size: usize,
    pub budget_mode: BudgetMode,
    /// Minimum budget of a batch.
    pub floor_budget: u64,
    /// Budget per contract in a batch.
    pub unit_budget: u64,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    /// Share of each offspring generation drawn fresh at random.
    pub immigrant_rate: f64,
    pub tournament_size: usize,
    pub max_test_length: usize,
    pub seed: u64,
    /// Evaluation threads; results do not depend on it.
    pub workers: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            population: 50,
            batch_size: 10,
            budget_mode: BudgetMode::Generations,
            floor_budget: 200,
            unit_budget: 35,
            crossover_rate: 0.75,
            mutation_rate: 0.8,
            immigrant_rate: 0.1,
            tournament_size: 3,
            max_test_length: 8,
            seed: 0,
            workers: 1,
        }
    }
}

impl SearchConfig {
    /// Defaults with the wall-clock budget: at least 60 s per batch, 35 s per contract.
    pub fn seconds() -> Self {
        SearchConfig {
            budget_mode: BudgetMode::Seconds,
            floor_budget: 60,
            unit_budget: 35,
            ..SearchConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        if self.population < 2 {
            return Err(SearchError::Config("population must be at least 2".into()));
        }
        if self.batch_size < 1 {
            return Err(SearchError::Config("batch size must be at least 1".into()));
        }
        if self.max_test_length < 1 {
            return Err(SearchError::Config("maximum test length must be at least 1".into()));
        }
        if self.tournament_size < 1 {
            return Err(SearchError::Config("tournament size must be at least 1".into()));
        }
        for (name, p) in [
            ("crossover rate", self.crossover_rate),
            ("mutation rate", self.mutation_rate),
            ("immigrant rate", self.immigrant_rate),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(SearchError::Config(format!("{name} must lie in [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn budget_for(&self, items: usize) -> Budget {
        let n = self.floor_budget.max(self.unit_budget * items as u64);
        match self.budget_mode {
            BudgetMode::Generations => Budget::Generations(n),
            BudgetMode::Seconds => Budget::Seconds(n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Batch<T> {
    pub items: Vec<T>,
    pub budget: Budget,
}

/// Splits `items` into consecutive batches of at most `batch_size`, each with
/// budget `max(floor, unit × len)`.
pub fn plan_batches<T: Clone>(items: &[T], config: &SearchConfig) -> Result<Vec<Batch<T>>, SearchError> {
    if items.is_empty() {
        return Err(SearchError::NoObjectives);
    }
    config.validate()?;
    Ok(items
        .chunks(config.batch_size)
        .map(|c| Batch {
            items: c.to_vec(),
            budget: config.budget_for(c.len()),
        })
        .collect())
}

/// A vector of objectives to minimize, each valued in [0, 1].
pub trait Objectives: Sync {
    fn count(&self) -> usize;
    fn names(&self) -> Vec<String>;
    /// Methods the generator should favour.
    fn targets(&self) -> Vec<MethodRef>;
    fn exec_options(&self) -> ExecOptions;
    /// Writes one value per objective into `out`.
    fn evaluate(&self, trace: &ExecutionTrace, out: &mut [f64]);
    fn finished(&self, solved: &[bool]) -> bool {
        solved.iter().all(|&s| s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArchiveEntry {
    pub test: TestCase,
    pub value: f64,
}

impl ArchiveEntry {
    pub fn solved(&self) -> bool {
        self.value == 0.0
    }
}

/// Best value per objective after each generation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationLog {
    pub generation: u64,
    pub best: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaResult {
    pub names: Vec<String>,
    /// Best-known test per objective; `None` if no test was ever evaluated.
    pub entries: Vec<Option<ArchiveEntry>>,
    pub generations: u64,
    pub evaluations: u64,
    pub log: Vec<GenerationLog>,
}

impl GaResult {
    pub fn solved(&self) -> Vec<bool> {
        self.entries
            .iter()
            .map(|e| e.as_ref().is_some_and(ArchiveEntry::solved))
            .collect()
    }
}

fn better(value: f64, len: usize, than: &ArchiveEntry) -> bool {
    value < than.value || (value == than.value && len < than.test.len())
}

struct Engine<'a, O: Objectives> {
    program: &'a SubjectProgram,
    objectives: &'a O,
    opts: ExecOptions,
    pool: Option<rayon::ThreadPool>,
}

impl<O: Objectives> Engine<'_, O> {
    fn eval_one(&self, t: &TestCase) -> Vec<f64> {
        let trace = execute_test(self.program, t, &self.opts);
        let mut out = vec![1.0; self.objectives.count()];
        self.objectives.evaluate(&trace, &mut out);
        out
    }

    /// Order of results follows `tests`, whatever the thread count.
    fn eval_all(&self, tests: &[TestCase]) -> Vec<Vec<f64>> {
        match &self.pool {
            Some(pool) => pool.install(|| tests.par_iter().map(|t| self.eval_one(t)).collect()),
            None => tests.iter().map(|t| self.eval_one(t)).collect(),
        }
    }
}

/// Many-objective genetic search: per-objective tournaments rotating over
/// unsolved objectives, one archive entry per objective, early stop once
/// `objectives.finished` holds.
pub fn run_ga<O: Objectives>(
    program: &SubjectProgram,
    objectives: &O,
    config: &SearchConfig,
    budget: Budget,
    seed: u64,
) -> Result<GaResult, SearchError> {
    config.validate()?;
    let n_obj = objectives.count();
    let pool = if config.workers > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(config.workers)
                .build()
                .map_err(|e| SearchError::Config(format!("cannot start workers: {e}")))?,
        )
    } else {
        None
    };
    let engine = Engine {
        program,
        objectives,
        opts: objectives.exec_options(),
        pool,
    };
    let gen = Generator::new(program, objectives.targets(), config.max_test_length);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let started = Instant::now();
    let n = config.population;

    let mut result = GaResult {
        names: objectives.names(),
        entries: vec![None; n_obj],
        generations: 0,
        evaluations: 0,
        log: Vec::new(),
    };
    let update = |result: &mut GaResult, tests: &[TestCase], fit: &[Vec<f64>]| {
        for (t, f) in tests.iter().zip(fit) {
            for (o, &v) in f.iter().enumerate() {
                let replace = match &result.entries[o] {
                    None => true,
                    Some(e) => better(v, t.len(), e),
                };
                if replace {
                    result.entries[o] = Some(ArchiveEntry {
                        test: t.clone(),
                        value: v,
                    });
                }
            }
        }
        result.evaluations += tests.len() as u64;
    };

    let mut pop: Vec<TestCase> = (0..n).map(|_| gen.random_test(&mut rng)).collect();
    let mut fit = engine.eval_all(&pop);
    update(&mut result, &pop, &fit);
    let mut rotation = 0usize;

    loop {
        result.log.push(GenerationLog {
            generation: result.generations,
            best: result
                .entries
                .iter()
                .map(|e| e.as_ref().map_or(1.0, |e| e.value))
                .collect(),
        });
        let solved = result.solved();
        if n_obj == 0 || objectives.finished(&solved) {
            break;
        }
        let exhausted = match budget {
            Budget::Generations(g) => result.generations >= g,
            Budget::Seconds(s) => started.elapsed().as_secs_f64() >= s as f64,
        };
        if exhausted {
            break;
        }
        let unsolved: Vec<usize> = (0..n_obj).filter(|&o| !solved[o]).collect();

        let tournament = |o: usize, rng: &mut ChaCha8Rng| -> usize {
            let mut best = rng.gen_range(0..pop.len());
            for _ in 1..config.tournament_size {
                let c = rng.gen_range(0..pop.len());
                if (fit[c][o], pop[c].len(), c) < (fit[best][o], pop[best].len(), best) {
                    best = c;
                }
            }
            best
        };

        let mut offspring: Vec<TestCase> = Vec::with_capacity(n + 1);
        while offspring.len() < n {
            if rng.gen_bool(config.immigrant_rate) {
                offspring.push(gen.random_test(&mut rng));
                continue;
            }
            let o1 = unsolved[rotation % unsolved.len()];
            let o2 = unsolved[(rotation + 1) % unsolved.len()];
            rotation += 1;
            let p1 = tournament(o1, &mut rng);
            let p2 = tournament(o2, &mut rng);
            let (c1, c2) = if rng.gen_bool(config.crossover_rate) {
                operators::crossover(program, &pop[p1], &pop[p2], &mut rng)
            } else {
                (pop[p1].clone(), pop[p2].clone())
            };
            for (c, parent) in [(c1, p1), (c2, p2)] {
                let mut c = c;
                if c.is_empty() || c == pop[parent] || rng.gen_bool(config.mutation_rate) {
                    c = operators::mutate(&gen, &c, &mut rng);
                }
                if c.is_empty() {
                    c = gen.random_test(&mut rng);
                }
                offspring.push(c.truncated(gen.max_statements));
            }
        }
        offspring.truncate(n);
        let off_fit = engine.eval_all(&offspring);
        update(&mut result, &offspring, &off_fit);

        pop.extend(offspring);
        fit.extend(off_fit);
        let keep = survivors(&pop, &fit, &unsolved, n);
        pop = keep.iter().map(|&i| pop[i].clone()).collect();
        fit = keep.iter().map(|&i| fit[i].clone()).collect();
        result.generations += 1;
    }
    Ok(result)
}

/// The best test per unsolved objective, then the rest by
/// (best value over unsolved objectives, length, position).
fn survivors(pop: &[TestCase], fit: &[Vec<f64>], unsolved: &[usize], n: usize) -> Vec<usize> {
    let mut taken = vec![false; pop.len()];
    let mut out = Vec::with_capacity(n);
    let key = |i: usize, o: usize| (fit[i][o], pop[i].len(), i);
    for &o in unsolved {
        if out.len() >= n {
            break;
        }
        let best = (0..pop.len())
            .filter(|&i| !taken[i])
            .min_by(|&a, &b| key(a, o).partial_cmp(&key(b, o)).expect("finite fitness"));
        if let Some(b) = best {
            taken[b] = true;
            out.push(b);
        }
    }
    let score = |i: usize| -> f64 {
        if unsolved.is_empty() {
            fit[i].iter().copied().fold(1.0, f64::min)
        } else {
            unsolved.iter().map(|&o| fit[i][o]).fold(1.0, f64::min)
        }
    };
    let mut rest: Vec<(f64, usize, usize)> = (0..pop.len())
        .filter(|&i| !taken[i])
        .map(|i| (score(i), pop[i].len(), i))
        .collect();
    rest.sort_by(|a, b| a.partial_cmp(b).expect("finite fitness"));
    out.extend(rest.into_iter().take(n - out.len()).map(|(_, _, i)| i));
    out
}

/// Objectives `2i` (satisfy) and `2i + 1` (violate) for each contract.
pub struct ContractObjectives<'a> {
    pub program: &'a SubjectProgram,
    pub evaluator: Evaluator<'a>,
    pub contracts: Vec<&'a Contract>,
    pub pre: Vec<Vec<&'a Contract>>,
}

impl<'a> ContractObjectives<'a> {
    pub fn new(
        program: &'a SubjectProgram,
        extraction: &'a Extraction,
        contracts: Vec<&'a Contract>,
    ) -> Result<Self, SearchError> {
        for c in &contracts {
            if c.kind != ContractKind::Postcondition || extraction.find(&c.id).is_none() {
                return Err(SearchError::UnknownContract(c.id.clone()));
            }
        }
        let pre = contracts
            .iter()
            .map(|c| extraction.preconditions_of(c.method).collect())
            .collect();
        Ok(ContractObjectives {
            program,
            evaluator: Evaluator::new(program),
            contracts,
            pre,
        })
    }

    pub fn index(i: usize, mode: Mode) -> usize {
        2 * i + usize::from(mode == Mode::Violate)
    }
}

impl Objectives for ContractObjectives<'_> {
    fn count(&self) -> usize {
        2 * self.contracts.len()
    }

    fn names(&self) -> Vec<String> {
        self.contracts
            .iter()
            .flat_map(|c| [format!("{}:satisfy", c.id), format!("{}:violate", c.id)])
            .collect()
    }

    fn targets(&self) -> Vec<MethodRef> {
        let mut ms: Vec<MethodRef> = self.contracts.iter().map(|c| c.method).collect();
        ms.sort();
        ms.dedup();
        ms
    }

    fn exec_options(&self) -> ExecOptions {
        ExecOptions {
            watch: Watch::Methods(self.targets()),
            ..ExecOptions::default()
        }
    }

    fn evaluate(&self, trace: &ExecutionTrace, out: &mut [f64]) {
        for (i, c) in self.contracts.iter().enumerate() {
            let f = self.evaluator.evaluate(c, &self.pre[i], trace);
            out[2 * i] = f.satisfy.value;
            out[2 * i + 1] = f.violate.value;
        }
    }
}

/// Per-contract view of a contract-mode search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractEntry {
    pub contract: String,
    pub satisfy: Option<ArchiveEntry>,
    pub violate: Option<ArchiveEntry>,
}

impl ContractEntry {
    pub fn get(&self, mode: Mode) -> Option<&ArchiveEntry> {
        match mode {
            Mode::Satisfy => self.satisfy.as_ref(),
            Mode::Violate => self.violate.as_ref(),
        }
    }

    pub fn solved(&self, mode: Mode) -> bool {
        self.get(mode).is_some_and(ArchiveEntry::solved)
    }
}

/// One progress line: generation index and best value per objective.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProgressLine {
    pub batch: usize,
    pub generation: u64,
    pub best: serde_json::Map<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Archive {
    pub entries: Vec<ContractEntry>,
    pub batches: Vec<Batch<String>>,
    pub generations: Vec<u64>,
    pub progress: Vec<ProgressLine>,
}

impl Archive {
    pub fn entry(&self, id: &str) -> Option<&ContractEntry> {
        self.entries.iter().find(|e| e.contract == id)
    }

    pub fn progress_jsonl(&self) -> String {
        let mut s = String::new();
        for line in &self.progress {
            s.push_str(&serde_json::to_string(line).expect("serializable"));
            s.push('\n');
        }
        s
    }
}

/// Seed of batch `k` of a run seeded with `seed`.
pub fn batch_seed(seed: u64, k: usize) -> u64 {
    seed.wrapping_add((k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Runs the search for one batch of postconditions.
pub fn evolve(
    program: &SubjectProgram,
    extraction: &Extraction,
    batch: &[&Contract],
    budget: Budget,
    config: &SearchConfig,
    seed: u64,
) -> Result<(Vec<ContractEntry>, GaResult), SearchError> {
    let objectives = ContractObjectives::new(program, extraction, batch.to_vec())?;
    let mut ga = run_ga(program, &objectives, config, budget, seed)?;
    let mut entries = Vec::with_capacity(batch.len());
    let mut taken = std::mem::take(&mut ga.entries);
    for (i, c) in batch.iter().enumerate() {
        entries.push(ContractEntry {
            contract: c.id.clone(),
            satisfy: taken[ContractObjectives::index(i, Mode::Satisfy)].take(),
            violate: taken[ContractObjectives::index(i, Mode::Violate)].take(),
        });
    }
    ga.entries = taken;
    Ok((entries, ga))
}

/// Plans batches over every postcondition and searches each one.
pub fn evolve_all(program: &SubjectProgram, extraction: &Extraction, config: &SearchConfig) -> Result<Archive, SearchError> {
    let posts: Vec<&Contract> = extraction.postconditions().collect();
    let plan = plan_batches(&posts, config)?;
    let mut archive = Archive {
        entries: Vec::new(),
        batches: Vec::new(),
        generations: Vec::new(),
        progress: Vec::new(),
    };
    for (k, batch) in plan.iter().enumerate() {
        let (entries, ga) = evolve(program, extraction, &batch.items, batch.budget, config, batch_seed(config.seed, k))?;
        archive.entries.extend(entries);
        archive.batches.push(Batch {
            items: batch.items.iter().map(|c| c.id.clone()).collect(),
            budget: batch.budget,
        });
        archive.generations.push(ga.generations);
        for g in &ga.log {
            let best = ga
                .names
                .iter()
                .zip(&g.best)
                .map(|(name, v)| (name.clone(), serde_json::json!(v)))
                .collect();
            archive.progress.push(ProgressLine {
                batch: k,
                generation: g.generation,
                best,
            });
        }
    }
    Ok(archive)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolutionKind {
    Violating,
    Satisfying,
}

impl SolutionKind {
    pub fn mode(self) -> Mode {
        match self {
            SolutionKind::Violating => Mode::Violate,
            SolutionKind::Satisfying => Mode::Satisfy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Selection {
    pub contract: String,
    pub test: TestCase,
    pub outcome: SolutionKind,
}

/// Whether `test` reaches fitness 0 for `contract` in `mode`.
pub fn solves(program: &SubjectProgram, extraction: &Extraction, contract: &Contract, mode: Mode, test: &TestCase) -> bool {
    let pre: Vec<&Contract> = extraction.preconditions_of(contract.method).collect();
    let opts = ExecOptions {
        watch: Watch::Methods(vec![contract.method]),
        ..ExecOptions::default()
    };
    let trace = execute_test(program, test, &opts);
    Evaluator::new(program).evaluate(contract, &pre, &trace).get(mode).solved()
}

/// Greedy statement removal (with dependents) from the end while `keep`
/// still holds.
pub fn minimize(test: &TestCase, keep: impl Fn(&TestCase) -> bool) -> TestCase {
    let mut cur = test.clone();
    let mut i = cur.len();
    while i > 0 {
        i -= 1;
        if i >= cur.len() {
            continue;
        }
        let cand = cur.without(i);
        if !cand.is_empty() && keep(&cand) {
            cur = cand;
        }
    }
    cur
}

/// Cuts `test` right after the first top-level call of the contract's
/// method that reaches fitness 0, then minimizes.
pub fn shrink_solution(
    program: &SubjectProgram,
    extraction: &Extraction,
    contract: &Contract,
    mode: Mode,
    test: &TestCase,
) -> TestCase {
    let pre: Vec<&Contract> = extraction.preconditions_of(contract.method).collect();
    let opts = ExecOptions {
        watch: Watch::Methods(vec![contract.method]),
        ..ExecOptions::default()
    };
    let trace = execute_test(program, test, &opts);
    let ev = Evaluator::new(program);
    let first = trace.top_level_calls(contract.method).find(|c| {
        Evaluator::view(c).is_some_and(|v| ev.call_fitness(contract, &pre, &v).get(mode).solved())
    });
    let cut = match first {
        Some(c) => test.truncated(c.statement + 1),
        None => test.clone(),
    };
    minimize(&cut, |t| solves(program, extraction, contract, mode, t))
}

/// Per contract, the violating solution if any, else the satisfying one,
/// minimized and with the focal contract set.
pub fn select_solutions(program: &SubjectProgram, extraction: &Extraction, archive: &Archive) -> Vec<Selection> {
    let mut out = Vec::new();
    for entry in &archive.entries {
        let Some(contract) = extraction.find(&entry.contract) else {
            continue;
        };
        let kind = if entry.solved(Mode::Violate) {
            SolutionKind::Violating
        } else if entry.solved(Mode::Satisfy) {
            SolutionKind::Satisfying
        } else {
            continue;
        };
        let found = entry.get(kind.mode()).expect("solved entry");
        let mut test = shrink_solution(program, extraction, contract, kind.mode(), &found.test);
        test.focal = Some(contract.id.clone());
        out.push(Selection {
            contract: contract.id.clone(),
            test,
            outcome: kind,
        });
    }
    out
}
