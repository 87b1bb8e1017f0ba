//! Coverage-driven generation with contract oracles attached afterwards.

use serde::Serialize;

use crate::contract::{Contract, Extraction};
use crate::fitness::{normalize, oracle_verdict, Evaluator, OracleVerdict};
use crate::lang::{execute_test, BranchId, ExecOptions, ExecutionTrace, MethodRef, SubjectProgram, Watch};
use crate::search::{minimize, run_ga, Budget, GaResult, Objectives, SearchConfig, SearchError};
use crate::testcase::TestCase;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CoverageObjective {
    BranchDirection { branch: BranchId, outcome: bool },
    MethodCalled { method: MethodRef },
}

/// Both directions of every branch, and every method, of the units under test.
pub fn coverage_objectives(program: &SubjectProgram) -> Vec<CoverageObjective> {
    let mut out = Vec::new();
    for u in program.target_units() {
        for b in program.branches_of_unit(u) {
            for outcome in [true, false] {
                out.push(CoverageObjective::BranchDirection { branch: b, outcome });
            }
        }
        for m in 0..program.units[u].methods.len() {
            out.push(CoverageObjective::MethodCalled {
                method: MethodRef::Method(u, m),
            });
        }
    }
    out
}

/// Value of one coverage objective on a trace.
pub fn coverage_fitness(objective: &CoverageObjective, trace: &ExecutionTrace) -> f64 {
    match *objective {
        CoverageObjective::BranchDirection { branch, outcome } => trace
            .branches
            .iter()
            .filter(|b| b.id == branch)
            .map(|b| normalize(if outcome { b.dist_true } else { b.dist_false }))
            .fold(1.0, f64::min),
        CoverageObjective::MethodCalled { method } => {
            if trace.top_level_calls(method).next().is_some() {
                0.0
            } else {
                1.0
            }
        }
    }
}

pub struct CoverageObjectives<'a> {
    pub program: &'a SubjectProgram,
    pub objectives: Vec<CoverageObjective>,
}

impl Objectives for CoverageObjectives<'_> {
    fn count(&self) -> usize {
        self.objectives.len()
    }

    fn names(&self) -> Vec<String> {
        self.objectives
            .iter()
            .map(|o| match o {
                CoverageObjective::BranchDirection { branch, outcome } => format!("branch{branch}:{outcome}"),
                CoverageObjective::MethodCalled { method } => format!("call:{}", self.program.method_name(*method)),
            })
            .collect()
    }

    fn targets(&self) -> Vec<MethodRef> {
        self.program
            .target_units()
            .into_iter()
            .flat_map(|u| (0..self.program.units[u].methods.len()).map(move |m| MethodRef::Method(u, m)))
            .collect()
    }

    fn exec_options(&self) -> ExecOptions {
        ExecOptions::default()
    }

    fn evaluate(&self, trace: &ExecutionTrace, out: &mut [f64]) {
        for (o, slot) in self.objectives.iter().zip(out.iter_mut()) {
            *slot = coverage_fitness(o, trace);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageRun {
    pub objectives: Vec<CoverageObjective>,
    pub covered: Vec<bool>,
    pub generations: u64,
    /// Minimized, deduplicated tests, one or more objectives each.
    pub suite: Vec<TestCase>,
}

/// Runs the coverage search and returns the union of archived solutions,
/// each minimized against the objective it was archived for.
pub fn evolve_coverage(
    program: &SubjectProgram,
    config: &SearchConfig,
    budget: Budget,
    seed: u64,
) -> Result<CoverageRun, SearchError> {
    let objectives = CoverageObjectives {
        program,
        objectives: coverage_objectives(program),
    };
    let ga: GaResult = run_ga(program, &objectives, config, budget, seed)?;
    let covered = ga.solved();
    let mut suite: Vec<TestCase> = Vec::new();
    for (o, entry) in objectives.objectives.iter().zip(&ga.entries) {
        let Some(entry) = entry.as_ref().filter(|e| e.solved()) else {
            continue;
        };
        let keep = |t: &TestCase| coverage_fitness(o, &execute_test(program, t, &ExecOptions::default())) == 0.0;
        let t = minimize(&entry.test, keep);
        if !suite.contains(&t) {
            suite.push(t);
        }
    }
    Ok(CoverageRun {
        objectives: objectives.objectives,
        covered,
        generations: ga.generations,
        suite,
    })
}

/// Oracle result of one contract on one test.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OracleRecord {
    pub contract: String,
    pub hit: bool,
    pub alarm: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InstrumentedTest {
    pub test: TestCase,
    /// One record per postcondition, in extraction order.
    pub oracles: Vec<OracleRecord>,
}

impl InstrumentedTest {
    pub fn hits(&self) -> usize {
        self.oracles.iter().filter(|o| o.hit).count()
    }
}

/// Checks every postcondition at every top-level call of its method: a flag
/// from preconditions and guard on the pre-call state, then the assertion
/// when the flag is set. A call that throws where a value is asserted counts
/// as a hit without alarm.
pub fn instrument_oracles(program: &SubjectProgram, extraction: &Extraction, suite: &[TestCase]) -> Vec<InstrumentedTest> {
    let posts: Vec<&Contract> = extraction.postconditions().collect();
    let mut methods: Vec<MethodRef> = posts.iter().map(|c| c.method).collect();
    methods.sort();
    methods.dedup();
    let opts = ExecOptions {
        watch: Watch::Methods(methods),
        ..ExecOptions::default()
    };
    suite
        .iter()
        .map(|t| {
            let trace = execute_test(program, t, &opts);
            let oracles = posts
                .iter()
                .map(|c| {
                    let pre: Vec<&Contract> = extraction.preconditions_of(c.method).collect();
                    let mut hit = false;
                    let mut alarm = false;
                    for call in trace.top_level_calls(c.method) {
                        let Some(view) = Evaluator::view(call) else {
                            continue;
                        };
                        match oracle_verdict(program, c, &pre, &view) {
                            OracleVerdict::Miss => {}
                            OracleVerdict::Pass | OracleVerdict::Inconclusive => hit = true,
                            OracleVerdict::Alarm => {
                                hit = true;
                                alarm = true;
                            }
                        }
                    }
                    OracleRecord {
                        contract: c.id.clone(),
                        hit,
                        alarm,
                    }
                })
                .collect();
            InstrumentedTest { test: t.clone(), oracles }
        })
        .collect()
}

/// Per-contract hit/alarm over a whole suite.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SuiteVerdict {
    pub contract: String,
    pub hit: bool,
    pub alarm: bool,
}

pub fn suite_verdicts(extraction: &Extraction, tests: &[InstrumentedTest]) -> Vec<SuiteVerdict> {
    extraction
        .postconditions()
        .map(|c| {
            let recs = tests.iter().flat_map(|t| t.oracles.iter()).filter(|o| o.contract == c.id);
            let (mut hit, mut alarm) = (false, false);
            for r in recs {
                hit |= r.hit;
                alarm |= r.alarm;
            }
            SuiteVerdict {
                contract: c.id.clone(),
                hit,
                alarm,
            }
        })
        .collect()
}
