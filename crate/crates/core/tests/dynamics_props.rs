use cartograf::dynamics::{
    label_regions, parse_summaries_csv, select_subset, summaries_to_csv, summarize, DynamicsLog,
    DynamicsSummary, EpochLogitRecord, Region, SelectionSpec,
};
use proptest::prelude::*;

/// (gold, per-epoch logits) for each example; all examples share E epochs.
fn log_table() -> impl Strategy<Value = Vec<(usize, Vec<[f64; 2]>)>> {
    (1usize..6).prop_flat_map(|epochs| {
        prop::collection::vec(
            (
                0usize..2,
                prop::collection::vec(prop::array::uniform2(-20.0f64..20.0), epochs),
            ),
            1..30,
        )
    })
}

fn records(table: &[(usize, Vec<[f64; 2]>)]) -> Vec<EpochLogitRecord> {
    table
        .iter()
        .enumerate()
        .flat_map(|(i, (gold, logits))| {
            logits
                .iter()
                .enumerate()
                .map(move |(e, l)| EpochLogitRecord {
                    id: format!("r{i:03}"),
                    epoch: e,
                    logits: *l,
                    gold: *gold,
                })
        })
        .collect()
}

fn log_of(records: impl IntoIterator<Item = EpochLogitRecord>) -> DynamicsLog {
    let mut log = DynamicsLog::new();
    for r in records {
        log.append(r).unwrap();
    }
    log
}

fn summary_strategy() -> impl Strategy<Value = Vec<DynamicsSummary>> {
    prop::collection::vec((0.0f64..1.0, 0.0f64..0.5, 0usize..6), 3..80).prop_map(|rows| {
        rows.into_iter()
            .enumerate()
            .map(|(i, (c, v, k))| DynamicsSummary {
                id: format!("s{i:03}"),
                confidence: c,
                variability: v,
                correctness: k as f64 / 5.0,
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn summaries_ignore_record_order(table in log_table(), seed in any::<u64>()) {
        let recs = records(&table);
        let mut shuffled = recs.clone();
        cartograf::rng::SplitMix64::new(seed).shuffle(&mut shuffled);
        prop_assert_eq!(summarize(&log_of(recs)).unwrap(), summarize(&log_of(shuffled)).unwrap());
    }

    #[test]
    fn statistics_stay_in_range(table in log_table()) {
        let epochs = table[0].1.len() as f64;
        for s in summarize(&log_of(records(&table))).unwrap() {
            prop_assert!((0.0..=1.0).contains(&s.confidence));
            prop_assert!((0.0..=0.5).contains(&s.variability));
            let k = s.correctness * epochs;
            prop_assert!((k - k.round()).abs() < 1e-9);
        }
    }

    #[test]
    fn jsonl_round_trips(table in log_table()) {
        let log = log_of(records(&table));
        let back = DynamicsLog::parse_jsonl(&log.to_jsonl()).unwrap();
        prop_assert_eq!(back.records(), log.records());
    }

    #[test]
    fn csv_round_trips_to_six_decimals(summaries in summary_strategy()) {
        let back = parse_summaries_csv(&summaries_to_csv(&summaries)).unwrap();
        prop_assert_eq!(back.len(), summaries.len());
        for (a, b) in summaries.iter().zip(&back) {
            prop_assert_eq!(&a.id, &b.id);
            prop_assert!((a.confidence - b.confidence).abs() <= 5e-7);
            prop_assert!((a.variability - b.variability).abs() <= 5e-7);
            prop_assert!((a.correctness - b.correctness).abs() <= 5e-7);
        }
    }

    #[test]
    fn selections_are_distinct_known_ids(summaries in summary_strategy(), f in 0.0f64..=1.0) {
        for region in Region::ALL {
            let ids = select_subset(&summaries, SelectionSpec { region, fraction: f }).unwrap();
            let set: std::collections::BTreeSet<&String> = ids.iter().collect();
            prop_assert_eq!(set.len(), ids.len());
            prop_assert!(ids.iter().all(|id| summaries.iter().any(|s| &s.id == id)));
        }
    }

    #[test]
    fn regions_follow_their_ranking(summaries in summary_strategy()) {
        let labeling = label_regions(&summaries).unwrap();
        let labeling = &labeling;
        let of = |r: Region| summaries.iter().filter(move |s| labeling.get(&s.id) == Some(r));
        let min_amb_var = of(Region::Ambiguous).map(|s| s.variability).fold(f64::INFINITY, f64::min);
        let max_other_var = summaries
            .iter()
            .filter(|s| labeling.get(&s.id) != Some(Region::Ambiguous))
            .map(|s| s.variability)
            .fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(min_amb_var >= max_other_var);
        let min_easy = of(Region::Easy).map(|s| s.confidence).fold(f64::INFINITY, f64::min);
        let max_hard = of(Region::Hard).map(|s| s.confidence).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(min_easy >= max_hard);
    }
}

#[test]
fn missing_epoch_is_reported() {
    let mut recs = records(&[
        (0, vec![[0.0, 1.0], [1.0, 0.0]]),
        (1, vec![[0.0, 1.0], [1.0, 0.0]]),
    ]);
    recs.remove(1);
    let err = summarize(&log_of(recs)).unwrap_err().to_string();
    assert!(err.contains("(r000, 1)"), "{err}");
}

#[test]
fn duplicate_record_is_rejected() {
    let rec = records(&[(0, vec![[0.0, 1.0]])]).remove(0);
    let mut log = DynamicsLog::new();
    log.append(rec.clone()).unwrap();
    assert!(log.append(rec).is_err());
}
