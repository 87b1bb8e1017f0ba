use contragen::contract::*;
use contragen::fitness::Mode;
use contragen::lang::*;
use contragen::search::*;
use contragen::testcase::Statement;

const GIFTPACK: &str = include_str!("../corpus/giftpack.sub");
const RANGE: &str = include_str!("../corpus/range.sub");

fn load(src: &str) -> (SubjectProgram, Extraction) {
    let p = parse_program(src).unwrap();
    let e = extract_program(&p, PatternTable::builtin());
    (p, e)
}

fn small(seed: u64) -> SearchConfig {
    SearchConfig {
        seed,
        floor_budget: 60,
        unit_budget: 10,
        ..SearchConfig::default()
    }
}

#[test]
fn batches_in_seconds_mode() {
    let cfg = SearchConfig::seconds();
    let items: Vec<usize> = (0..22).collect();
    let plan = plan_batches(&items, &cfg).unwrap();
    let sizes: Vec<usize> = plan.iter().map(|b| b.items.len()).collect();
    let budgets: Vec<Budget> = plan.iter().map(|b| b.budget).collect();
    assert_eq!(sizes, vec![10, 10, 2]);
    assert_eq!(budgets, vec![Budget::Seconds(350), Budget::Seconds(350), Budget::Seconds(70)]);

    let one = plan_batches(&[0], &cfg).unwrap();
    assert_eq!(one.len(), 1);
    assert_eq!(one[0].budget, Budget::Seconds(60));

    let none: [usize; 0] = [];
    assert!(matches!(plan_batches(&none, &cfg), Err(SearchError::NoObjectives)));
}

#[test]
fn batches_in_generations_mode() {
    let cfg = SearchConfig::default();
    let plan = plan_batches(&(0..12).collect::<Vec<_>>(), &cfg).unwrap();
    assert_eq!(plan[0].budget, Budget::Generations(350));
    assert_eq!(plan[1].budget, Budget::Generations(200));
    let items: Vec<usize> = plan.iter().flat_map(|b| b.items.iter().copied()).collect();
    assert_eq!(items, (0..12).collect::<Vec<_>>());
}

#[test]
fn invalid_config_is_rejected() {
    let cfg = SearchConfig {
        population: 1,
        ..SearchConfig::default()
    };
    assert!(matches!(plan_batches(&[1], &cfg), Err(SearchError::Config(_))));
    let cfg = SearchConfig {
        batch_size: 0,
        ..SearchConfig::default()
    };
    assert!(cfg.validate().is_err());
}

#[test]
fn finds_the_empty_exception_violation() {
    let (p, e) = load(GIFTPACK);
    let post0 = e.find("GiftPack.unwrapAndSave/post0").unwrap();
    let (entries, _) = evolve(&p, &e, &[post0], Budget::Generations(200), &small(1), 1).unwrap();
    let v = entries[0].violate.as_ref().expect("violation found");
    assert!(v.solved());
    assert!(solves(&p, &e, post0, Mode::Violate, &v.test));

    let t = shrink_solution(&p, &e, post0, Mode::Violate, &v.test);
    let gp = p.unit_id("GiftPack").unwrap();
    let rendered = t.render(&p).join("\n");
    assert!(
        t.statements
            .iter()
            .any(|s| matches!(s, Statement::Construct { unit, args } if *unit == gp && args == &[contragen::testcase::Arg::Null])),
        "{rendered}"
    );
    assert!(rendered.contains("unwrapAndSave("), "{rendered}");
}

const INFEASIBLE: &str = "
exception Bad;
class Box {
    int size;
    /**
     * @throws Bad if x is greater than 0 and x is less than 0
     */
    void put(int x) { size = x; }
}
";

#[test]
fn infeasible_guard_is_never_solved() {
    let (p, e) = load(INFEASIBLE);
    let c: Vec<&Contract> = e.postconditions().collect();
    assert_eq!(c.len(), 1, "{:?}", e.skipped);
    let (entries, ga) = evolve(&p, &e, &c, Budget::Generations(80), &small(3), 3).unwrap();
    assert!(!entries[0].solved(Mode::Satisfy));
    assert!(!entries[0].solved(Mode::Violate));
    assert_eq!(ga.generations, 80);
}

#[test]
fn same_seed_same_archive() {
    let (p, e) = load(GIFTPACK);
    let a = evolve_all(&p, &e, &small(11)).unwrap();
    let b = evolve_all(&p, &e, &small(11)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.progress_jsonl(), b.progress_jsonl());
}

#[test]
fn worker_count_does_not_change_results() {
    let (p, e) = load(RANGE);
    let one = evolve_all(&p, &e, &small(5)).unwrap();
    let four = evolve_all(&p, &e, &SearchConfig { workers: 4, ..small(5) }).unwrap();
    assert_eq!(one, four);
}

#[test]
fn archive_entries_are_sound() {
    for (src, seed) in [(GIFTPACK, 2), (RANGE, 4)] {
        let (p, e) = load(src);
        let archive = evolve_all(&p, &e, &small(seed)).unwrap();
        for entry in &archive.entries {
            let c = e.find(&entry.contract).unwrap();
            for mode in [Mode::Satisfy, Mode::Violate] {
                if let Some(a) = entry.get(mode).filter(|a| a.solved()) {
                    assert!(solves(&p, &e, c, mode, &a.test), "{} {mode:?}", c.id);
                    assert!(a.test.validate(&p).is_ok());
                }
            }
        }
    }
}

#[test]
fn selection_prefers_violations_and_stays_solved() {
    let (p, e) = load(GIFTPACK);
    let archive = evolve_all(&p, &e, &small(7)).unwrap();
    let sel = select_solutions(&p, &e, &archive);
    let mut seen = std::collections::HashSet::new();
    for s in &sel {
        let entry = archive.entry(&s.contract).unwrap();
        let expected = if entry.solved(Mode::Violate) {
            SolutionKind::Violating
        } else {
            SolutionKind::Satisfying
        };
        assert_eq!(s.outcome, expected);
        assert_eq!(s.test.focal.as_deref(), Some(s.contract.as_str()));
        assert!(seen.insert((s.contract.clone(), s.outcome)));
        let c = e.find(&s.contract).unwrap();
        assert!(solves(&p, &e, c, s.outcome.mode(), &s.test));
        assert!(s.test.len() <= entry.get(s.outcome.mode()).unwrap().test.len());
    }
    // The "true otherwise" pair yields one test per contract.
    let ids: Vec<&str> = sel.iter().map(|s| s.contract.as_str()).collect();
    assert!(ids.contains(&"GiftPack.unwrapAndSave/post3"));
    assert!(ids.contains(&"GiftPack.unwrapAndSave/post4"));
}

#[test]
fn minimize_keeps_the_predicate() {
    let (p, e) = load(GIFTPACK);
    let post0 = e.find("GiftPack.unwrapAndSave/post0").unwrap();
    let archive = evolve_all(&p, &e, &small(9)).unwrap();
    let t = &archive.entry(&post0.id).unwrap().violate.as_ref().unwrap().test;
    let m = minimize(t, |c| solves(&p, &e, post0, Mode::Violate, c));
    assert!(solves(&p, &e, post0, Mode::Violate, &m));
    assert!(m.len() <= t.len());
    // Nothing left to remove: every single deletion breaks it.
    for i in 0..m.len() {
        let c = m.without(i);
        assert!(c.is_empty() || !solves(&p, &e, post0, Mode::Violate, &c));
    }
}

#[test]
fn more_budget_never_loses_a_solution() {
    let (p, e) = load(RANGE);
    let posts: Vec<&Contract> = e.postconditions().collect();
    for seed in [1, 2] {
        let cfg = small(seed);
        let (short, _) = evolve(&p, &e, &posts, Budget::Generations(20), &cfg, seed).unwrap();
        let (long, _) = evolve(&p, &e, &posts, Budget::Generations(40), &cfg, seed).unwrap();
        for (s, l) in short.iter().zip(&long) {
            for mode in [Mode::Satisfy, Mode::Violate] {
                if s.solved(mode) {
                    assert!(l.solved(mode), "{} {mode:?} seed {seed}", s.contract);
                }
            }
        }
    }
}

#[test]
fn progress_lines_are_json() {
    let (p, e) = load(GIFTPACK);
    let archive = evolve_all(&p, &e, &small(1)).unwrap();
    let text = archive.progress_jsonl();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), archive.progress.len());
    for l in lines {
        let v: serde_json::Value = serde_json::from_str(l).unwrap();
        assert!(v["generation"].is_u64());
        assert!(v["best"].is_object());
    }
}
