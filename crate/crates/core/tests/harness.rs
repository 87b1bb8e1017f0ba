use contragen::harness::*;
use contragen::search::SearchConfig;
use proptest::prelude::*;

const GIFTPACK: &str = include_str!("../corpus/giftpack.sub");
const RANGE: &str = include_str!("../corpus/range.sub");

fn corpus(extra: &[(&str, &str)]) -> Vec<CorpusEntry> {
    let mut c = vec![
        CorpusEntry {
            name: "giftpack".into(),
            source: GIFTPACK.into(),
        },
        CorpusEntry {
            name: "range".into(),
            source: RANGE.into(),
        },
    ];
    for (n, s) in extra {
        c.push(CorpusEntry {
            name: n.to_string(),
            source: s.to_string(),
        });
    }
    c
}

fn quick(seed: u64) -> SearchConfig {
    SearchConfig {
        seed,
        floor_budget: 80,
        unit_budget: 20,
        ..SearchConfig::default()
    }
}

#[test]
fn majority_rule() {
    assert!(GenStat::classify(1, 0, 1).tested);
    assert!(!GenStat::classify(0, 0, 1).tested);
    assert!(GenStat::classify(5, 0, 10).tested);
    assert!(!GenStat::classify(4, 4, 10).tested);
    assert!(!GenStat::classify(4, 4, 10).alarm, "no alarm without testing");
    assert!(GenStat::classify(5, 3, 10).alarm);
    assert!(!GenStat::classify(6, 3, 10).alarm, "a tie is not a majority");
    assert!(GenStat::classify(2, 2, 3).tested);
}

#[test]
fn single_run_means_hit_once() {
    let r = run_experiment(&corpus(&[]), &quick(3), 1).unwrap();
    for (_, row) in r.rows() {
        for g in [row.contract_mode, row.baseline] {
            assert_eq!(g.tested, g.hits == 1);
            assert!(g.hits <= 1);
        }
    }
}

#[test]
fn every_contract_in_one_row_and_totals_add_up() {
    let r = run_experiment(&corpus(&[]), &quick(1), 3).unwrap();
    let rows: Vec<_> = r.rows().collect();
    let per_cat: usize = Category::ALL.iter().map(|&c| r.count(c)).sum();
    assert_eq!(per_cat, rows.len());
    for (_, row) in &rows {
        assert_eq!(row.category, Category::of(&row.contract_mode, &row.baseline));
        assert_eq!(Category::ALL.iter().filter(|&&c| c == row.category).count(), 1);
    }
    // GiftPack has 5 postconditions, Range 4.
    assert_eq!(rows.len(), 9);

    let text = render_report(&r).text;
    let total_line = text.lines().find(|l| l.starts_with("Total")).unwrap();
    let last: usize = total_line.split_whitespace().last().unwrap().parse().unwrap();
    assert_eq!(last, rows.len());
    let csv = render_report(&r).csv;
    assert_eq!(csv.lines().count(), rows.len() + 1);
}

#[test]
fn same_seed_same_report() {
    let a = render_report(&run_experiment(&corpus(&[]), &quick(8), 2).unwrap());
    let b = render_report(&run_experiment(&corpus(&[]), &quick(8), 2).unwrap());
    let c = render_report(&run_experiment(&corpus(&[]), &SearchConfig { workers: 3, ..quick(8) }, 2).unwrap());
    assert_eq!(a, b);
    assert_eq!(a, c);
    let dir = tempfile::tempdir().unwrap();
    write_report(dir.path(), &a).unwrap();
    for f in ["report.txt", "report.json", "report.csv"] {
        assert!(dir.path().join(f).is_file());
    }
    let json: serde_json::Value = serde_json::from_str(&a.json).unwrap();
    assert_eq!(json["reps"], 2);
}

#[test]
fn broken_program_does_not_stop_the_others() {
    let r = run_experiment(&corpus(&[("broken", "class {")]), &quick(2), 1).unwrap();
    assert_eq!(r.failures.len(), 1);
    assert_eq!(r.failures[0].program, "broken");
    assert_eq!(r.programs.len(), 2);
    assert!(render_report(&r).text.contains("FAILED broken"));
}

#[test]
fn suite_stats_are_consistent() {
    let r = run_experiment(&corpus(&[]), &quick(4), 2).unwrap();
    for st in [&r.contract_mode_suites, &r.baseline_suites] {
        let total: usize = st.distribution.values().sum();
        assert_eq!(total, st.tests);
        assert_eq!(st.zero_contract_tests, st.distribution.get(&0).copied().unwrap_or(0));
        let multi: usize = st.distribution.iter().filter(|(k, _)| **k >= 2).map(|(_, v)| v).sum();
        assert_eq!(st.multi_contract_tests, multi);
        assert_eq!(st.max_contracts_per_test, st.distribution.keys().copied().max().unwrap_or(0));
    }
}

#[test]
fn corpus_loading() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(load_corpus(dir.path()), Err(HarnessError::EmptyCorpus(_))));
    std::fs::write(dir.path().join("b.sub"), RANGE).unwrap();
    std::fs::write(dir.path().join("a.sub"), GIFTPACK).unwrap();
    std::fs::write(dir.path().join("notes.txt"), "x").unwrap();
    let c = load_corpus(dir.path()).unwrap();
    let names: Vec<&str> = c.iter().map(|e| e.name.as_str()).collect();
    assert_eq!(names, vec!["a", "b"]);
    assert!(load_corpus(&dir.path().join("missing")).is_err());
}

#[test]
fn rejects_zero_reps() {
    assert!(matches!(run_experiment(&corpus(&[]), &quick(0), 0), Err(HarnessError::NoRepetitions)));
}

fn stat() -> impl Strategy<Value = GenStat> {
    (0usize..=10, 0usize..=10).prop_map(|(h, a)| GenStat::classify(h, a.min(h), 10))
}

proptest! {
    #[test]
    fn category_matches_the_table(cm in stat(), bl in stat()) {
        let cat = Category::of(&cm, &bl);
        let (by, _) = cat.labels();
        let expected_by = match (cm.tested, bl.tested) {
            (true, true) => "both",
            (true, false) => "contract-mode only",
            (false, true) => "baseline only",
            (false, false) => "neither",
        };
        prop_assert_eq!(by, expected_by);
        prop_assert!(cm.tested || !cm.alarm);
        prop_assert!(bl.tested || !bl.alarm);
    }
}
