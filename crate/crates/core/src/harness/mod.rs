//! Repeated runs of both generators over a corpus, classified per contract
//! into tested/untested and pass/alarm, and rendered as a comparison table.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::baseline::{evolve_coverage, instrument_oracles, suite_verdicts, InstrumentedTest, SuiteVerdict};
use crate::contract::{extract_program, Extraction, PatternTable};
use crate::lang::{parse_program, SubjectProgram};
use crate::search::{evolve_all, plan_batches, select_solutions, Budget, SearchConfig};
use crate::testcase::TestCase;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("cannot read corpus {path}: {source}")]
    Corpus { path: PathBuf, source: io::Error },
    #[error("corpus {0} holds no .sub files")]
    EmptyCorpus(PathBuf),
    #[error("repetitions must be at least 1")]
    NoRepetitions,
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusEntry {
    pub name: String,
    pub source: String,
}

/// `.sub` files of a directory, sorted by name.
pub fn load_corpus(dir: &Path) -> Result<Vec<CorpusEntry>, HarnessError> {
    let err = |source| HarnessError::Corpus {
        path: dir.to_path_buf(),
        source,
    };
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(err)?
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "sub"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(HarnessError::EmptyCorpus(dir.to_path_buf()));
    }
    paths
        .into_iter()
        .map(|p| {
            let source = fs::read_to_string(&p).map_err(|source| HarnessError::Corpus {
                path: p.clone(),
                source,
            })?;
            let name = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            Ok(CorpusEntry { name, source })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    ContractMode,
    Baseline,
}

/// Hits and alarms of one generator on one contract over all repetitions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct GenStat {
    pub hits: usize,
    pub alarm_runs: usize,
    pub tested: bool,
    pub alarm: bool,
}

impl GenStat {
    /// Tested when hit in at least half of the runs; alarm when the
    /// assertion failed in most of the hitting runs.
    pub fn classify(hits: usize, alarm_runs: usize, reps: usize) -> GenStat {
        let tested = hits >= reps.div_ceil(2);
        GenStat {
            hits,
            alarm_runs,
            tested,
            alarm: tested && 2 * alarm_runs > hits,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Category {
    ContractOnlyPass,
    ContractOnlyAlarm,
    BothPass,
    BothAlarm,
    BothAlarmContractMode,
    BothAlarmBaseline,
    BaselineOnlyPass,
    BaselineOnlyAlarm,
    Untested,
}

impl Category {
    pub const ALL: [Category; 9] = [
        Category::ContractOnlyPass,
        Category::ContractOnlyAlarm,
        Category::BothPass,
        Category::BothAlarm,
        Category::BothAlarmContractMode,
        Category::BothAlarmBaseline,
        Category::BaselineOnlyPass,
        Category::BaselineOnlyAlarm,
        Category::Untested,
    ];

    pub fn of(cm: &GenStat, bl: &GenStat) -> Category {
        match (cm.tested, bl.tested) {
            (true, false) if cm.alarm => Category::ContractOnlyAlarm,
            (true, false) => Category::ContractOnlyPass,
            (false, true) if bl.alarm => Category::BaselineOnlyAlarm,
            (false, true) => Category::BaselineOnlyPass,
            (true, true) => match (cm.alarm, bl.alarm) {
                (false, false) => Category::BothPass,
                (true, true) => Category::BothAlarm,
                (true, false) => Category::BothAlarmContractMode,
                (false, true) => Category::BothAlarmBaseline,
            },
            (false, false) => Category::Untested,
        }
    }

    pub fn labels(self) -> (&'static str, &'static str) {
        match self {
            Category::ContractOnlyPass => ("contract-mode only", "pass"),
            Category::ContractOnlyAlarm => ("contract-mode only", "alarm"),
            Category::BothPass => ("both", "pass both"),
            Category::BothAlarm => ("both", "alarm both"),
            Category::BothAlarmContractMode => ("both", "alarm contract-mode"),
            Category::BothAlarmBaseline => ("both", "alarm baseline"),
            Category::BaselineOnlyPass => ("baseline only", "pass"),
            Category::BaselineOnlyAlarm => ("baseline only", "alarm"),
            Category::Untested => ("neither", "-"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractRow {
    pub contract: String,
    pub text: String,
    pub low_confidence: bool,
    pub contract_mode: GenStat,
    pub baseline: GenStat,
    pub category: Category,
    /// An alarm on a contract translated by a low-confidence rule.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkipRow {
    pub method: String,
    pub tag: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProgramReport {
    pub program: String,
    pub contracts: Vec<ContractRow>,
    pub skipped: Vec<SkipRow>,
    /// Generations granted to the baseline in each run (sum of batch budgets).
    pub baseline_budget: u64,
}

/// Contracts hit per test.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SuiteStats {
    pub tests: usize,
    pub zero_contract_tests: usize,
    pub multi_contract_tests: usize,
    pub max_contracts_per_test: usize,
    /// contracts hit → number of tests.
    pub distribution: BTreeMap<usize, usize>,
}

impl SuiteStats {
    fn add(&mut self, tests: &[InstrumentedTest]) {
        for t in tests {
            let h = t.hits();
            self.tests += 1;
            if h == 0 {
                self.zero_contract_tests += 1;
            }
            if h >= 2 {
                self.multi_contract_tests += 1;
            }
            self.max_contracts_per_test = self.max_contracts_per_test.max(h);
            *self.distribution.entry(h).or_insert(0) += 1;
        }
    }

    pub fn zero_fraction(&self) -> f64 {
        if self.tests == 0 {
            0.0
        } else {
            self.zero_contract_tests as f64 / self.tests as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub program: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub reps: usize,
    pub base_seed: u64,
    pub programs: Vec<ProgramReport>,
    pub failures: Vec<Failure>,
    pub contract_mode_suites: SuiteStats,
    pub baseline_suites: SuiteStats,
}

impl RunReport {
    pub fn rows(&self) -> impl Iterator<Item = (&str, &ContractRow)> {
        self.programs
            .iter()
            .flat_map(|p| p.contracts.iter().map(move |c| (p.program.as_str(), c)))
    }

    pub fn count(&self, cat: Category) -> usize {
        self.rows().filter(|(_, c)| c.category == cat).count()
    }

    pub fn tested_by(&self, g: Generator) -> usize {
        self.rows()
            .filter(|(_, c)| match g {
                Generator::ContractMode => c.contract_mode.tested,
                Generator::Baseline => c.baseline.tested,
            })
            .count()
    }

    pub fn find(&self, contract: &str) -> Option<&ContractRow> {
        self.rows().map(|(_, c)| c).find(|c| c.contract == contract)
    }
}

/// Outcome of one repetition of both generators on one program.
struct RepResult {
    contract_mode: Vec<SuiteVerdict>,
    baseline: Vec<SuiteVerdict>,
    cm_tests: Vec<InstrumentedTest>,
    bl_tests: Vec<InstrumentedTest>,
}

/// Sum of the contract-mode batch budgets, handed to the baseline.
pub fn baseline_budget(extraction: &Extraction, config: &SearchConfig) -> Option<Budget> {
    let posts: Vec<_> = extraction.postconditions().collect();
    let plan = plan_batches(&posts, config).ok()?;
    let total: u64 = plan.iter().map(|b| b.budget.amount()).sum();
    Some(match plan[0].budget {
        Budget::Generations(_) => Budget::Generations(total),
        Budget::Seconds(_) => Budget::Seconds(total),
    })
}

fn run_rep(
    program: &SubjectProgram,
    extraction: &Extraction,
    config: &SearchConfig,
    budget: Budget,
    seed: u64,
) -> Result<RepResult, String> {
    let cfg = SearchConfig {
        seed,
        ..config.clone()
    };
    let archive = evolve_all(program, extraction, &cfg).map_err(|e| e.to_string())?;
    let selected: Vec<TestCase> = select_solutions(program, extraction, &archive)
        .into_iter()
        .map(|s| s.test)
        .collect();
    let cm_tests = instrument_oracles(program, extraction, &selected);
    let cov = evolve_coverage(program, &cfg, budget, seed).map_err(|e| e.to_string())?;
    let bl_tests = instrument_oracles(program, extraction, &cov.suite);
    Ok(RepResult {
        contract_mode: suite_verdicts(extraction, &cm_tests),
        baseline: suite_verdicts(extraction, &bl_tests),
        cm_tests,
        bl_tests,
    })
}

/// Runs both generators `reps` times on every corpus program (seeds
/// `base..base+reps`) and classifies each postcondition.
pub fn run_experiment(corpus: &[CorpusEntry], config: &SearchConfig, reps: usize) -> Result<RunReport, HarnessError> {
    if reps == 0 {
        return Err(HarnessError::NoRepetitions);
    }
    let table = PatternTable::builtin();
    let mut report = RunReport {
        reps,
        base_seed: config.seed,
        programs: Vec::new(),
        failures: Vec::new(),
        contract_mode_suites: SuiteStats::default(),
        baseline_suites: SuiteStats::default(),
    };

    let mut prepared = Vec::new();
    for entry in corpus {
        match parse_program(&entry.source) {
            Ok(p) => {
                let ex = extract_program(&p, table);
                prepared.push((entry.name.clone(), p, ex));
            }
            Err(e) => report.failures.push(Failure {
                program: entry.name.clone(),
                error: e.to_string(),
            }),
        }
    }

    let jobs: Vec<(usize, usize)> = (0..prepared.len())
        .flat_map(|p| (0..reps).map(move |r| (p, r)))
        .collect();
    let results: Vec<Result<RepResult, String>> = jobs
        .par_iter()
        .map(|&(p, r)| {
            let (_, program, ex) = &prepared[p];
            if ex.postconditions().next().is_none() {
                return Ok(RepResult {
                    contract_mode: Vec::new(),
                    baseline: Vec::new(),
                    cm_tests: Vec::new(),
                    bl_tests: Vec::new(),
                });
            }
            let budget = baseline_budget(ex, config).ok_or("cannot plan batches")?;
            run_rep(program, ex, config, budget, config.seed.wrapping_add(r as u64))
        })
        .collect();

    for (p, (name, _program, ex)) in prepared.iter().enumerate() {
        let reps_of = &results[p * reps..(p + 1) * reps];
        if let Some(Err(e)) = reps_of.iter().find(|r| r.is_err()) {
            report.failures.push(Failure {
                program: name.clone(),
                error: e.clone(),
            });
            continue;
        }
        let runs: Vec<&RepResult> = reps_of.iter().map(|r| r.as_ref().expect("checked")).collect();
        for run in &runs {
            report.contract_mode_suites.add(&run.cm_tests);
            report.baseline_suites.add(&run.bl_tests);
        }
        let contracts = ex
            .postconditions()
            .enumerate()
            .map(|(i, c)| {
                let count = |f: &dyn Fn(&RepResult) -> &SuiteVerdict| {
                    let hits = runs.iter().filter(|r| f(r).hit).count();
                    let alarms = runs.iter().filter(|r| f(r).alarm).count();
                    GenStat::classify(hits, alarms, reps)
                };
                let cm = count(&|r| &r.contract_mode[i]);
                let bl = count(&|r| &r.baseline[i]);
                ContractRow {
                    contract: c.id.clone(),
                    text: c.source.raw(),
                    low_confidence: c.low_confidence,
                    contract_mode: cm,
                    baseline: bl,
                    category: Category::of(&cm, &bl),
                    flagged: c.low_confidence && (cm.alarm || bl.alarm),
                }
            })
            .collect();
        let skipped = ex
            .skipped
            .iter()
            .map(|s| SkipRow {
                method: s.method_name.clone(),
                tag: s.source.raw(),
                reason: s.reason.clone(),
            })
            .collect();
        report.programs.push(ProgramReport {
            program: name.clone(),
            contracts,
            skipped,
            baseline_budget: baseline_budget(ex, config).map_or(0, Budget::amount),
        });
    }
    report.failures.sort_by(|a, b| a.program.cmp(&b.program));
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedReport {
    pub text: String,
    pub json: String,
    pub csv: String,
}

/// Human table (categories × programs, with totals), JSON and per-contract CSV.
pub fn render_report(report: &RunReport) -> RenderedReport {
    let mut json = serde_json::to_string_pretty(report).expect("serializable");
    json.push('\n');
    RenderedReport {
        text: render_text(report),
        json,
        csv: render_csv(report),
    }
}

fn render_text(report: &RunReport) -> String {
    let mut s = String::new();
    let names: Vec<&str> = report.programs.iter().map(|p| p.program.as_str()).collect();
    let w = names.iter().map(|n| n.len()).max().unwrap_or(0).max(5);
    let _ = writeln!(s, "Contracts tested over {} runs per generator (base seed {})", report.reps, report.base_seed);
    let _ = writeln!(s);
    let _ = write!(s, "{:<20} {:<20}", "Hit by", "Outcome");
    for n in &names {
        let _ = write!(s, " {n:>w$}");
    }
    let _ = writeln!(s, " {:>w$}", "Total");
    let mut column_totals = vec![0usize; names.len()];
    for cat in Category::ALL {
        let (by, outcome) = cat.labels();
        let _ = write!(s, "{by:<20} {outcome:<20}");
        let mut total = 0;
        for (i, p) in report.programs.iter().enumerate() {
            let n = p.contracts.iter().filter(|c| c.category == cat).count();
            column_totals[i] += n;
            total += n;
            let _ = write!(s, " {n:>w$}");
        }
        let _ = writeln!(s, " {total:>w$}");
    }
    let _ = write!(s, "{:<20} {:<20}", "Total", "");
    for n in &column_totals {
        let _ = write!(s, " {n:>w$}");
    }
    let _ = writeln!(s, " {:>w$}", column_totals.iter().sum::<usize>());
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "Tested by contract-mode: {}   tested by baseline: {}",
        report.tested_by(Generator::ContractMode),
        report.tested_by(Generator::Baseline)
    );
    for (label, st) in [
        ("contract-mode", &report.contract_mode_suites),
        ("baseline", &report.baseline_suites),
    ] {
        let dist: Vec<String> = st.distribution.iter().map(|(k, v)| format!("{k}:{v}")).collect();
        let _ = writeln!(
            s,
            "{label} tests: {}  hitting no contract: {} ({:.1}%)  hitting 2 or more: {}  max per test: {}  distribution [{}]",
            st.tests,
            st.zero_contract_tests,
            100.0 * st.zero_fraction(),
            st.multi_contract_tests,
            st.max_contracts_per_test,
            dist.join(" ")
        );
    }
    let flagged: Vec<&str> = report
        .rows()
        .filter(|(_, c)| c.flagged)
        .map(|(_, c)| c.contract.as_str())
        .collect();
    if !flagged.is_empty() {
        let _ = writeln!(s, "Low-confidence alarms: {}", flagged.join(", "));
    }
    let baseline_only_alarms = report.count(Category::BaselineOnlyAlarm);
    if baseline_only_alarms > 0 {
        let _ = writeln!(s, "Corpus defect: {baseline_only_alarms} alarm(s) raised only by the baseline");
    }
    for f in &report.failures {
        let _ = writeln!(s, "FAILED {}: {}", f.program, f.error);
    }
    s
}

fn render_csv(report: &RunReport) -> String {
    let mut s = String::from(
        "program,contract,category,low_confidence,cm_hits,cm_alarm_runs,cm_tested,cm_alarm,bl_hits,bl_alarm_runs,bl_tested,bl_alarm\n",
    );
    for (program, c) in report.rows() {
        let cat = serde_json::to_value(c.category).expect("serializable");
        let _ = writeln!(
            s,
            "{program},{},{},{},{},{},{},{},{},{},{},{}",
            c.contract,
            cat.as_str().unwrap_or(""),
            c.low_confidence,
            c.contract_mode.hits,
            c.contract_mode.alarm_runs,
            c.contract_mode.tested,
            c.contract_mode.alarm,
            c.baseline.hits,
            c.baseline.alarm_runs,
            c.baseline.tested,
            c.baseline.alarm
        );
    }
    s
}

/// Writes `report.txt`, `report.json` and `report.csv` into `dir`.
pub fn write_report(dir: &Path, rendered: &RenderedReport) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.txt"), &rendered.text)?;
    fs::write(dir.join("report.json"), &rendered.json)?;
    fs::write(dir.join("report.csv"), &rendered.csv)?;
    Ok(())
}
