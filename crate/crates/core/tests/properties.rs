use std::collections::BTreeMap;

use moodloom::affect::song_affect;
use moodloom::dataset::partition_indices;
use moodloom::features::FeatureVector;
use moodloom::knn::{assign_with_threshold, count_classes, weighted_distance, FeatureWeights, TrainedModel, TrainingRow};
use moodloom::lexicon::AffectScore;
use moodloom::{ClassSet, MoodClass, ScalingParams};
use proptest::prelude::*;

fn unit_vec() -> impl Strategy<Value = FeatureVector<f64>> {
    // coarse grid so that exact distance ties occur
    prop::array::uniform7(0u8..=4).prop_map(|a| FeatureVector(a.map(|x| f64::from(x) / 4.0)))
}

fn class_set() -> impl Strategy<Value = ClassSet> {
    prop::collection::btree_set(prop::sample::select(MoodClass::ALL.to_vec()), 1..=3)
}

fn rows(max: usize) -> impl Strategy<Value = Vec<TrainingRow<f64>>> {
    prop::collection::vec((unit_vec(), class_set()), 1..=max).prop_map(|v| {
        v.into_iter()
            .enumerate()
            // ids deliberately out of insertion order
            .map(|(i, (vector, classes))| TrainingRow {
                id: format!("song-{:03}", (i * 37) % 101),
                vector,
                classes,
            })
            .collect()
    })
}

fn unit_scaling() -> ScalingParams {
    ScalingParams {
        min: FeatureVector([0.0; 7]),
        max: FeatureVector([1.0; 7]),
    }
}

/// Threshold pass, then lower by one until some class qualifies.
fn stepwise_oracle(counts: &BTreeMap<MoodClass, usize>, threshold: usize) -> (ClassSet, usize) {
    let mut t = threshold;
    loop {
        let hit: ClassSet = counts.iter().filter(|(_, &n)| n >= t).map(|(&c, _)| c).collect();
        if !hit.is_empty() || t == 1 {
            return (hit, t);
        }
        t -= 1;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn neighbours_match_full_sort(rows in rows(50), q in unit_vec(), k in 1usize..=10) {
        let k = k.min(rows.len());
        let w = FeatureWeights::default();
        let mut oracle: Vec<(f64, String)> = rows.iter().map(|r| (weighted_distance(&q, &r.vector, &w), r.id.clone())).collect();
        oracle.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let model = TrainedModel::new(rows, unit_scaling(), w, k, 1).unwrap();
        let got: Vec<(f64, String)> = model.nearest_neighbors(&q).into_iter().map(|n| (n.distance, n.row.id.clone())).collect();
        prop_assert_eq!(got, oracle[..k].to_vec());
    }

    #[test]
    fn classify_matches_stepwise_counting(rows in rows(40), q in unit_vec(), k in 1usize..=10, t in 1usize..=10) {
        let k = k.min(rows.len());
        let t = t.min(k);
        let model = TrainedModel::new(rows, unit_scaling(), FeatureWeights::default(), k, t).unwrap();
        let result = model.classify(&q);
        let counts = count_classes(model.nearest_neighbors(&q).iter().map(|n| &n.row.classes));
        prop_assert_eq!(&result.neighbor_counts, &counts);
        let (want, eff) = stepwise_oracle(&counts, t);
        prop_assert!(!result.classes.is_empty());
        prop_assert_eq!(result.classes, want);
        prop_assert_eq!(result.effective_threshold, eff);
    }

    #[test]
    fn threshold_assignment_matches_oracle(
        counts in prop::collection::btree_map(prop::sample::select(MoodClass::ALL.to_vec()), 1usize..=30, 1..=9),
        t in 1usize..=30,
    ) {
        prop_assert_eq!(assign_with_threshold(&counts, t), stepwise_oracle(&counts, t));
    }

    #[test]
    fn song_affect_is_the_weighted_mean(
        sentences in prop::collection::vec((prop::option::weighted(0.8, (0.0f64..=10.0, 0.0f64..=10.0)), 0.1f64..5.0), 1..40),
        scale_exp in -3i32..=3,
    ) {
        let input: Vec<(Option<AffectScore<f64>>, f64)> = sentences
            .iter()
            .map(|&(s, w)| (s.map(|(valence, arousal)| AffectScore { valence, arousal }), w))
            .collect();
        let (mut v, mut a, mut total) = (0.0, 0.0, 0.0);
        for (s, w) in &input {
            if let Some(s) = s {
                v += s.valence * w;
                a += s.arousal * w;
                total += w;
            }
        }
        match song_affect(input.clone()) {
            Ok(song) => {
                prop_assert!((song.valence - v / total).abs() < 1e-9);
                prop_assert!((song.arousal - a / total).abs() < 1e-9);
                let c = 2f64.powi(scale_exp);
                let scaled = song_affect(input.iter().map(|&(s, w)| (s, w * c))).unwrap();
                prop_assert_eq!(scaled, song);
            }
            Err(_) => prop_assert_eq!(total, 0.0),
        }
    }

    #[test]
    fn scaling_contract(
        train in prop::collection::vec(prop::array::uniform7(-50.0f64..200.0), 1..30),
        query in prop::array::uniform7(-500.0f64..500.0),
    ) {
        let vectors: Vec<FeatureVector<f64>> = train.iter().map(|&a| FeatureVector(a)).collect();
        let p = ScalingParams::fit(&vectors).unwrap();
        for v in vectors.iter().chain(std::iter::once(&FeatureVector(query))) {
            for (j, x) in p.scale(v).0.iter().enumerate() {
                if j == moodloom::Feature::Mode.index() {
                    continue;
                }
                prop_assert!((0.0..=1.0).contains(x));
                let (lo, hi) = (p.min.0[j], p.max.0[j]);
                if lo == hi {
                    prop_assert_eq!(*x, 0.5);
                } else if v.0[j] == lo {
                    prop_assert_eq!(*x, 0.0);
                } else if v.0[j] == hi {
                    prop_assert_eq!(*x, 1.0);
                }
            }
        }
    }

    #[test]
    fn partition_covers_every_song_once(classes in prop::collection::vec(class_set(), 4..120), seed in any::<u64>()) {
        let folds = partition_indices(&classes, 4, seed).unwrap();
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..classes.len()).collect::<Vec<_>>());
        prop_assert_eq!(partition_indices(&classes, 4, seed).unwrap(), folds);
    }
}

#[test]
fn partition_balances_large_classes() {
    // 60 songs per class, some two-class songs
    let classes: Vec<ClassSet> = (0..540)
        .map(|i| {
            let mut s = ClassSet::new();
            s.insert(MoodClass::ALL[i % 9]);
            if i % 7 == 0 {
                s.insert(MoodClass::ALL[(i / 9) % 9]);
            }
            s
        })
        .collect();
    let folds = partition_indices(&classes, 4, 11).unwrap();
    for c in MoodClass::ALL {
        let size = classes.iter().filter(|s| s.contains(&c)).count() as f64;
        for f in &folds {
            let n = f.iter().filter(|&&i| classes[i].contains(&c)).count() as f64;
            assert!((n - size / 4.0).abs() <= 0.2 * size / 4.0, "{c}: {n} of {size}");
        }
    }
}
