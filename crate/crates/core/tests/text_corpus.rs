use std::collections::BTreeMap;

use proptest::prelude::*;
use sit_core::rng::SeededRng;
use sit_core::survey::pool::ImageCard;
use sit_core::text::metrics::*;
use sit_core::text::stance::*;
use sit_core::text::tags::*;

#[test]
fn stance_groups_order_with_a_monotone_oracle() {
    let mut rng = SeededRng::new(31);
    // Each respondent leans one way; ratings follow stance with noise.
    let mut obs = Vec::new();
    for r in 0..60 {
        let lean = rng.below(3) as usize;
        for _ in 0..10 {
            let k = if rng.unit() < 0.7 { lean } else { rng.below(3) as usize };
            let stance = Stance::ALL[k];
            let rating = (stance.value() + rng.below(3) as f64 - 1.0).clamp(1.0, 5.0);
            obs.push(StanceObservation {
                respondent_id: format!("r{r}"),
                stance,
                rating,
            });
        }
    }
    let s = stance_aggregate(&obs).unwrap();
    assert!(s.correlation > 0.9, "{}", s.correlation);
    let means: Vec<f64> = s.group_rating_means.iter().map(|g| g.1).collect();
    assert!(means.windows(2).all(|w| w[0] < w[1]));
    assert!(stance_aggregate(&[]).is_err());
}

#[test]
fn perfect_annotators_agree() {
    let ann = |who: &str| -> Vec<StanceAnnotation> {
        (0..30)
            .map(|i| StanceAnnotation {
                comment_id: comment_id("s", &format!("i{i}")),
                subjective: i % 2 == 0,
                stance: Stance::ALL[i % 3],
                annotator_id: who.into(),
            })
            .collect()
    };
    let mut all = ann("A1");
    all.extend(ann("A2"));
    let k = annotator_agreement(&all, "A1", "A2").unwrap();
    assert_eq!(k.stance_kappa, 1.0);
    assert_eq!(k.subjectivity_kappa, 1.0);
}

fn probs(tag: &str, c: Characteristic, p: f64) -> TagCategoryProbs {
    TagCategoryProbs {
        tag: tag.into(),
        probs: BTreeMap::from([(c, p)]),
    }
}

#[test]
fn tag_threshold_and_coverage() {
    let mut input: Vec<TagCategoryProbs> = (0..10)
        .map(|i| probs(&format!("p{i}"), Characteristic::Race, 0.51))
        .collect();
    input.extend((0..39).map(|i| probs(&format!("o{i}"), Characteristic::Race, if i == 0 { 0.5 } else { 0.1 })));
    let classes = classify_tags(&input, DEFAULT_THRESHOLD).unwrap();
    assert_eq!(classes["o0"], None);
    assert_eq!(classes["p0"], Some(Characteristic::Race));
    let card = ImageCard {
        image_id: "img".into(),
        is_gender_stem: false,
        tags: input
            .iter()
            .map(|p| p.tag.clone())
            .chain(["unseen".to_string()])
            .collect(),
        path: None,
    };
    let stats = image_tag_stats(std::slice::from_ref(&card), &classes);
    assert_eq!(stats.images[0].n_tags, 50);
    assert_eq!(stats.images[0].n_protected, 10);
    assert_eq!(stats.pool.images_per_characteristic[&Characteristic::Race], 1);
    assert_eq!(
        unclassified_tags(&[card], &classes).into_iter().collect::<Vec<_>>(),
        vec!["unseen"]
    );
    let mut overridden = classes.clone();
    apply_overrides(&mut overridden, &[("o0".into(), Some(Characteristic::Age))]);
    assert_eq!(overridden["o0"], Some(Characteristic::Age));
}

#[test]
fn scorable_comment_rule() {
    assert!(!is_scorable(""));
    assert!(!is_scorable(" . "));
    assert!(is_scorable("ok"));
}

fn word() -> impl Strategy<Value = String> {
    "[a-zA-Z]{1,6}[.,!]?"
}

proptest! {
    #[test]
    fn frequencies_sum_to_token_count(texts in proptest::collection::vec(proptest::collection::vec(word(), 0..12), 0..10)) {
        let joined: Vec<String> = texts.iter().map(|w| w.join(" ")).collect();
        let total: usize = joined.iter().map(|t| tokenize(t).len()).sum();
        let freq = word_frequencies(&joined, None);
        prop_assert_eq!(freq.iter().map(|f| f.1).sum::<usize>(), total);
        prop_assert!(freq.windows(2).all(|w| w[0].1 >= w[1].1));
    }

    #[test]
    fn ratios_lie_in_unit_interval(words in proptest::collection::vec(word(), 1..40), content in proptest::collection::vec(any::<bool>(), 40)) {
        let tokens: Vec<AnnotatedToken> = words
            .iter()
            .zip(&content)
            .map(|(w, c)| AnnotatedToken {
                surface: w.clone(),
                lemma: None,
                pos: if *c { Upos::Noun } else { Upos::Det },
            })
            .collect();
        let t = token_ttr(&tokens).unwrap();
        let d = lexical_density(&tokens).unwrap();
        prop_assert!(t > 0.0 && t <= 1.0);
        prop_assert!((0.0..=1.0).contains(&d));
    }
}

#[test]
fn empty_texts_have_no_ratios() {
    assert!(type_token_ratio::<&str>(&[]).is_err());
    assert!(lexical_density(&[]).is_err());
    assert_eq!(type_token_ratio(&["a", "A", "b", "c"]).unwrap(), 0.75);
}
