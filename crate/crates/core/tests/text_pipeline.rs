use std::collections::BTreeSet;

use dsinfer::textscreen::*;
use dsinfer::*;

fn doc(id: usize, cause: &str, text: &str) -> Document {
    Document {
        id: id.to_string(),
        cause: cause.into(),
        text: text.into(),
    }
}

fn table_with(counts: Vec<Vec<u64>>, deaths: Vec<u64>) -> WordCauseTable {
    let total: u64 = deaths.iter().sum();
    let words = (0..counts.len()).map(|j| format!("w{j}")).collect();
    WordCauseTable {
        words,
        counts,
        causes: (0..deaths.len()).map(|i| format!("c{i}")).collect(),
        prevalence: NullModel::new(deaths.iter().map(|&d| d as f64 / total as f64).collect())
            .unwrap(),
        deaths_per_cause: deaths,
    }
}

fn config(seed: u64) -> ScreenConfig {
    ScreenConfig {
        test: TestConfig {
            replicates: 1000,
            seed,
            ..TestConfig::default()
        },
        freq_resamples: 1000,
    }
}

#[test]
fn recount_matches_token_presence() {
    let syn = synthetic_corpus(&SyntheticSpec::default()).unwrap();
    let rules = TokenRules::new();
    let table = build_table(&syn.documents, &rules).unwrap();
    let presence: usize = syn
        .documents
        .iter()
        .map(|d| tokenize(&d.text, &rules).len())
        .sum();
    let usage: u64 = (0..table.words.len()).map(|j| table.usage(j)).sum();
    assert_eq!(usage as usize, presence);
    assert_eq!(
        table.deaths_per_cause.iter().sum::<u64>() as usize,
        syn.documents.len()
    );
    assert!((table.prevalence.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    for j in 0..table.words.len() {
        assert!(table.usage(j) >= 1 && table.usage(j) as usize <= syn.documents.len());
    }
}

#[test]
fn screening_examples() {
    let deaths = vec![200, 200, 200, 200];
    let table = table_with(
        vec![
            vec![40, 0, 0, 0],        // planted, single cause
            vec![100, 100, 100, 100], // conforming, common
            vec![2, 1, 0, 0],         // rare, weakly skewed
        ],
        deaths,
    );
    let res = screen_corpus(&table, &config(4)).unwrap();
    assert_eq!(res[0].ds.decision, Decision::Reject);
    assert!(res[0].freq.p_value <= 0.05);
    assert_eq!(res[1].ds.decision, Decision::Accept);
    assert!(matches!(
        res[2].ds.decision,
        Decision::Accept | Decision::Unknown
    ));
}

#[test]
fn selection_policies() {
    let syn = synthetic_corpus(&SyntheticSpec {
        seed: 3,
        ..SyntheticSpec::default()
    })
    .unwrap();
    let table = build_table(&syn.documents, &TokenRules::new()).unwrap();
    let res = screen_corpus(&table, &config(9)).unwrap();

    let all = select_words(&res, SelectionPolicy::All);
    assert_eq!(all, table.words);
    assert_eq!(select_words(&res, SelectionPolicy::MinCount(1)), all);
    let frequent = select_words(&res, SelectionPolicy::MinCount(50));
    assert!(frequent
        .iter()
        .all(|w| res.iter().find(|r| &r.word == w).unwrap().usage >= 50));

    let rej: BTreeSet<_> = select_words(&res, SelectionPolicy::DsReject(0.05))
        .into_iter()
        .collect();
    let union: BTreeSet<_> = select_words(&res, SelectionPolicy::DsRejectOrUnknown(0.05))
        .into_iter()
        .collect();
    let unknown: BTreeSet<_> = res
        .iter()
        .filter(|r| r.ds.decision == Decision::Unknown)
        .map(|r| r.word.clone())
        .collect();
    let accept = res
        .iter()
        .filter(|r| r.ds.decision == Decision::Accept)
        .count();
    assert_eq!(union, rej.union(&unknown).cloned().collect());
    assert_eq!(rej.len() + unknown.len() + accept, res.len());
    assert!(!unknown.is_empty());

    for r in &res {
        if r.freq.p_value <= 0.05 && r.ds.tails.q_upper_env <= 0.05 {
            assert_eq!(r.ds.decision, Decision::Reject);
        }
    }
}

#[test]
fn planted_signal_beats_chance() {
    let syn = synthetic_corpus(&SyntheticSpec {
        seed: 5,
        ..SyntheticSpec::default()
    })
    .unwrap();
    let rules = TokenRules::new();
    let table = build_table(&syn.documents, &rules).unwrap();
    let acc = accuracy_on(&table, &syn.planted, &syn.documents, &rules).unwrap();
    assert!(acc >= 1.0 / 8.0 + 0.2, "accuracy {acc}");
}

#[test]
fn perfect_single_word_corpus() {
    let mut docs = Vec::new();
    for i in 0..30 {
        let (cause, word) = [("a", "alpha"), ("b", "beta"), ("c", "gamma")][i % 3];
        docs.push(doc(i, cause, &format!("{word} common")));
    }
    let rules = TokenRules::new();
    let table = build_table(&docs, &rules).unwrap();
    let res = screen_corpus(&table, &config(2)).unwrap();
    let rows = evaluate_accuracy(
        &docs,
        &res,
        &[SelectionPolicy::All, SelectionPolicy::DsReject(0.05)],
        &EvalOptions {
            rules,
            screen: config(2),
            folds: None,
        },
    )
    .unwrap();
    for r in &rows {
        assert_eq!(r.accuracy, 1.0, "{r:?}");
    }
    assert_eq!(rows[1].words, 3);
}

#[test]
fn empty_selection_predicts_most_common_cause() {
    let docs: Vec<Document> = (0..10)
        .map(|i| doc(i, if i < 7 { "major" } else { "minor" }, "word"))
        .collect();
    let rules = TokenRules::new();
    let table = build_table(&docs, &rules).unwrap();
    assert_eq!(accuracy_on(&table, &[], &docs, &rules).unwrap(), 0.7);
    assert!(matches!(
        tariff_fit(&table, &[]),
        Err(Error::EmptySelection)
    ));
}

#[test]
fn unknown_cause_at_evaluation_is_an_error() {
    let docs = vec![doc(0, "a", "xx"), doc(1, "b", "yy")];
    let rules = TokenRules::new();
    let table = build_table(&docs, &rules).unwrap();
    let other = vec![doc(2, "z", "xx")];
    assert!(matches!(
        accuracy_on(&table, &table.words, &other, &rules),
        Err(Error::Corpus(_))
    ));
}

#[test]
fn cross_validation_runs() {
    let syn = synthetic_corpus(&SyntheticSpec {
        documents: 200,
        noise_words: 30,
        seed: 8,
        ..SyntheticSpec::default()
    })
    .unwrap();
    let rules = TokenRules::new();
    let small = ScreenConfig {
        test: TestConfig {
            replicates: 200,
            seed: 1,
            ..TestConfig::default()
        },
        freq_resamples: 200,
    };
    let rows = evaluate_accuracy(
        &syn.documents,
        &[],
        &[SelectionPolicy::All, SelectionPolicy::DsReject(0.05)],
        &EvalOptions {
            rules,
            screen: small,
            folds: Some(4),
        },
    )
    .unwrap();
    assert!(rows.iter().all(|r| (0.0..=1.0).contains(&r.accuracy)));
}
