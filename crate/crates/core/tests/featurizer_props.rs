mod common;

use std::collections::BTreeMap;

use common::*;
use founderlens::featurizer::{
    bigram_feature_name, bigram_features, build_bigram_vocabulary, category_feature_name, category_percentages, tokenize, user_top_bigrams, ExclusionReason,
    Featurizer, TokenizedText,
};
use proptest::prelude::*;
use rand::Rng;

fn tokens(docs: &[Vec<String>]) -> Vec<TokenizedText> {
    docs.iter().map(|d| TokenizedText { tokens: d.clone() }).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn categories_match_brute_force(seed in any::<u64>()) {
        let c = random_corpus(seed, 300);
        let all = TokenizedText { tokens: c.docs.concat() };
        let got = category_percentages(&all, &c.lexicons).unwrap();
        for (name, entries) in &c.lexicon_entries {
            let want = oracle_category_percent(&all.tokens, entries);
            let v = got[&category_feature_name(name)];
            prop_assert!((v - want).abs() <= 1e-12, "{name}: {v} vs {want}");
            prop_assert!((0.0..=100.0).contains(&v));
        }
    }

    #[test]
    fn rendered_text_tokenizes_back(seed in any::<u64>()) {
        let c = random_corpus(seed, 200);
        for (doc, toks) in c.documents.iter().zip(&c.docs) {
            prop_assert_eq!(&tokenize(&doc.text).tokens, toks);
        }
    }

    #[test]
    fn tokenization_ignores_case(text in "[a-zA-Z' ,.!?]{0,80}") {
        prop_assert_eq!(tokenize(&text), tokenize(&text.to_uppercase()));
        for t in tokenize(&text).tokens {
            prop_assert!(!t.is_empty() && !t.starts_with('\'') && !t.ends_with('\''));
        }
    }

    #[test]
    fn bigram_shares_are_bounded(seed in any::<u64>()) {
        let c = random_corpus(seed, 300);
        let vocab = vocabulary(&c.vocab_bigrams);
        let values = bigram_features(&tokens(&c.docs), &vocab).unwrap();
        let total: f64 = values.values().sum();
        prop_assert!(total <= 100.0 + 1e-9);
        for b in &c.vocab_bigrams {
            let got = values[&bigram_feature_name(b)];
            prop_assert!((got - oracle_bigram_percent(&c.docs, b)).abs() <= 1e-12);
        }
    }

    #[test]
    fn raising_the_user_threshold_shrinks_the_vocabulary(seed in any::<u64>(), lo in 0usize..5, extra in 0usize..5) {
        let mut r = rng(seed);
        let tops: BTreeMap<String, Vec<String>> = (0..12)
            .map(|u| {
                let docs: Vec<TokenizedText> = (0..3)
                    .map(|_| TokenizedText {
                        tokens: (0..8).map(|_| WORDS[r.random_range(0..6)].to_string()).collect(),
                    })
                    .collect();
                (format!("u{u}"), user_top_bigrams(&docs, 5))
            })
            .collect();
        let small = build_bigram_vocabulary(&tops, lo);
        let big = build_bigram_vocabulary(&tops, lo + extra);
        prop_assert!(big.bigrams.iter().all(|b| small.bigrams.contains(b)));
        prop_assert_eq!(small.candidates, big.candidates);
        for b in &small.bigrams {
            prop_assert!(small.user_support[b] > lo);
        }
    }
}

#[test]
fn users_below_the_word_threshold_are_excluded() {
    let c = random_corpus(5, 100);
    let words: usize = c.docs.iter().map(Vec::len).sum();
    let fz = Featurizer {
        lexicons: c.lexicons.clone(),
        norms: c.norms.clone(),
        vocab: vocabulary(&c.vocab_bigrams),
        min_words: words + 1,
    };
    let ex = fz.featurize_user("u", &c.documents).unwrap_err();
    assert_eq!(
        ex.reason,
        ExclusionReason::BelowMinWords {
            words,
            min_words: words + 1
        }
    );
}

#[test]
fn top_bigrams_break_ties_alphabetically() {
    let docs = [tokenize("b c a b c a b")];
    // "a b" x2, "b c" x2, "c a" x2
    assert_eq!(user_top_bigrams(&docs, 2), ["a b", "b c"]);
    // bigrams never span documents
    let split = [tokenize("x y"), tokenize("z w")];
    assert_eq!(user_top_bigrams(&split, 10), ["x y", "z w"]);
}
