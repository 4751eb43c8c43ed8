mod common;

use std::collections::BTreeSet;

use common::*;
use lfrerank::beam::BeamCandidate;
use lfrerank::dataset::{Beams, DatasetExample};
use lfrerank::lf::{parse, Formalism, LfTree, Utterance};
use lfrerank::pairgen::{
    generate_dataset, generate_pairs, read_pairs, shuffle_pairs, write_pairs, PairExample, PairGenConfig, PairSource,
};
use lfrerank::preprocess::{Method, Resources};
use proptest::prelude::*;

fn lf(i: usize) -> LfTree {
    parse(&format!("answer(city(c{i}))"), Formalism::Funql).unwrap()
}

fn beam(n: usize) -> Vec<BeamCandidate> {
    (1..=n).map(|r| BeamCandidate::new(lf(r), r)).collect()
}

fn utt(id: &str) -> Utterance {
    Utterance::new(id, "which city is it", "geo").unwrap()
}

type Key = (String, String, u8);

fn keys(pairs: &[PairExample]) -> BTreeSet<Key> {
    pairs.iter().map(|p| (p.text_a.clone(), p.text_b.clone(), p.label)).collect()
}

/// Independent enumeration: gold positive, one negative per non-gold
/// candidate, one negative per unordered candidate pair.
fn enumerate(n: usize, gold: usize) -> BTreeSet<Key> {
    let text = |i: usize| lf(i).serialize();
    let u = "which city is it".to_string();
    let mut out = BTreeSet::new();
    out.insert((u.clone(), text(gold), 1));
    for r in (1..=n).filter(|&r| r != gold) {
        out.insert((u.clone(), text(r), 0));
    }
    for (i, j) in unordered_index_pairs(n) {
        out.insert((text(i + 1), text(j + 1), 0));
    }
    out
}

#[test]
fn pair_count_law_matches_enumeration() {
    for n in 1..=10 {
        for gold in 1..=n {
            let pairs = generate_pairs(
                &utt("q"),
                &lf(gold),
                &beam(n),
                Method::Raw,
                &Resources::default(),
                PairGenConfig::default(),
            )
            .unwrap();
            let expected = enumerate(n, gold);
            assert_eq!(pairs.len(), expected.len(), "n={n} gold={gold}");
            assert_eq!(pairs.len(), 1 + (n - 1) + n * (n - 1) / 2);
            assert_eq!(keys(&pairs), expected, "n={n} gold={gold}");
        }
    }
    let ten =
        generate_pairs(&utt("q"), &lf(1), &beam(10), Method::Raw, &Resources::default(), PairGenConfig::default())
            .unwrap();
    assert_eq!(ten.len(), 55);
    let count = |s| ten.iter().filter(|p| p.source == s).count();
    assert_eq!(
        (count(PairSource::GoldPositive), count(PairSource::BeamNegative), count(PairSource::BeamBeamNegative)),
        (1, 9, 45)
    );
}

#[test]
fn two_examples_give_110_pairs() {
    let mut dataset = Vec::new();
    let mut beams = Beams::new();
    for (id, gold) in [("a", 3), ("b", 10)] {
        dataset.push(DatasetExample { utterance: utt(id), gold_lf: lf(gold) });
        beams.insert(id.to_string(), beam(10));
    }
    for jobs in [1, 4] {
        let pairs =
            generate_dataset(&dataset, &beams, Method::Raw, &Resources::default(), PairGenConfig::default(), jobs)
                .unwrap();
        assert_eq!(pairs.len(), 110);
    }
}

#[test]
fn gold_outside_beam() {
    // Gold absent: 1 positive, n negatives, C(n, 2) beam/beam pairs.
    let pairs =
        generate_pairs(&utt("q"), &lf(99), &beam(4), Method::Raw, &Resources::default(), PairGenConfig::default())
            .unwrap();
    assert_eq!(pairs.len(), 1 + 4 + 6);
}

#[test]
fn equivalent_candidates_are_deduplicated() {
    let a = parse("(_lambda $0 e (_and (_flight $0) (_from $0 x)))", Formalism::Lambda).unwrap();
    let b = parse("(_lambda $3 e (_and (_from $3 x) (_flight $3)))", Formalism::Lambda).unwrap();
    let c = parse("(_lambda $0 e (_flight $0))", Formalism::Lambda).unwrap();
    let beam = vec![BeamCandidate::new(a.clone(), 1), BeamCandidate::new(b, 2), BeamCandidate::new(c, 3)];
    let pairs =
        generate_pairs(&utt("q"), &a, &beam, Method::Raw, &Resources::default(), PairGenConfig::default()).unwrap();
    // Two distinct forms: positive, one negative, one beam/beam pair.
    assert_eq!(pairs.len(), 3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn labels_follow_sources(n in 1usize..12, gold in 1usize..14, include in any::<bool>(), bb in any::<bool>()) {
        let config = PairGenConfig { include_gold_in_beam_pairs: include, beam_beam_negatives: bb };
        let pairs = generate_pairs(&utt("q"), &lf(gold), &beam(n), Method::Raw, &Resources::default(), config).unwrap();
        let gold_text = lf(gold).serialize();
        for p in &pairs {
            prop_assert_ne!(&p.text_a, &p.text_b);
            prop_assert_eq!(p.label == 1, p.source == PairSource::GoldPositive);
            if p.source == PairSource::BeamNegative {
                prop_assert_ne!(&p.text_b, &gold_text);
            }
            if p.source == PairSource::BeamBeamNegative && !include {
                prop_assert!(p.text_a != gold_text && p.text_b != gold_text);
            }
        }
        prop_assert_eq!(keys(&pairs).len(), pairs.len());
        let bb_count = pairs.iter().filter(|p| p.source == PairSource::BeamBeamNegative).count();
        let m = if include || gold > n { n } else { n - 1 };
        prop_assert_eq!(bb_count, if bb { m * m.saturating_sub(1) / 2 } else { 0 });
    }

    #[test]
    fn shuffle_is_a_permutation(n in 1usize..11, seed in any::<u64>()) {
        let pairs = generate_pairs(&utt("q"), &lf(1), &beam(n), Method::Raw, &Resources::default(), PairGenConfig::default()).unwrap();
        let mut shuffled = pairs.clone();
        shuffle_pairs(&mut shuffled, seed);
        let mut again = pairs.clone();
        shuffle_pairs(&mut again, seed);
        prop_assert_eq!(&shuffled, &again);
        let mut a = pairs.clone();
        let mut b = shuffled;
        a.sort_by(|x, y| (&x.text_a, &x.text_b).cmp(&(&y.text_a, &y.text_b)));
        b.sort_by(|x, y| (&x.text_a, &x.text_b).cmp(&(&y.text_a, &y.text_b)));
        prop_assert_eq!(a, b);
    }
}

#[test]
fn pairs_round_trip_through_jsonl() {
    let pairs =
        generate_pairs(&utt("q"), &lf(2), &beam(5), Method::Raw, &Resources::default(), PairGenConfig::default())
            .unwrap();
    let mut buf = Vec::new();
    write_pairs(&mut buf, &pairs).unwrap();
    assert_eq!(read_pairs(buf.as_slice()).unwrap(), pairs);
}
