mod common;

use common::cohort;
use proptest::prelude::*;
use sit_core::scores::{score_sessions, ScoreOptions};
use sit_core::survey::flow::CommentEvent;
use sit_platform::dataset::images_of;
use sit_platform::files::*;

fn strings(h: &[&str]) -> Vec<String> {
    h.iter().map(|s| s.to_string()).collect()
}

#[test]
fn exports_reimport_byte_identically() {
    let c = cohort(200, 1);
    let s = &c.sessions;
    let mut a = Vec::new();
    write_ratings(&mut a, s).unwrap();
    let mut b = Vec::new();
    write_rating_rows(&mut b, &read_ratings(&a[..], "r").unwrap()).unwrap();
    assert_eq!(a, b);

    let mut a = Vec::new();
    write_comments(&mut a, s).unwrap();
    let mut b = Vec::new();
    write_comment_rows(&mut b, &read_comments(&a[..], "c").unwrap()).unwrap();
    assert_eq!(a, b);

    let mut a = Vec::new();
    write_iat_trials(&mut a, s).unwrap();
    let mut b = Vec::new();
    write_iat_rows(&mut b, &read_iat_trials(&a[..], "t").unwrap()).unwrap();
    assert_eq!(a, b);

    let mut a = Vec::new();
    write_questionnaire(&mut a, &questionnaire_rows(s)).unwrap();
    let mut b = Vec::new();
    write_questionnaire(&mut b, &read_questionnaire(&a[..], "q").unwrap()).unwrap();
    assert_eq!(a, b);

    let scores = score_sessions(s, &images_of(&c.pool), None, ScoreOptions::default()).unwrap();
    let mut a = Vec::new();
    write_scores(&mut a, &scores).unwrap();
    let mut b = Vec::new();
    read_scores(&a[..], "s").unwrap().write(&mut b).unwrap();
    assert_eq!(a, b);

    for (write, read) in [
        (
            Box::new(|w: &mut Vec<u8>| write_manifest(w, c.pool.cards())) as Box<dyn Fn(&mut Vec<u8>) -> _>,
            Box::new(|r: &[u8], w: &mut Vec<u8>| write_manifest(w, &read_manifest(r, "m")?))
                as Box<dyn Fn(&[u8], &mut Vec<u8>) -> _>,
        ),
        (
            Box::new(|w: &mut Vec<u8>| write_pos(w, &c.pos)),
            Box::new(|r: &[u8], w: &mut Vec<u8>| write_pos(w, &read_pos(r, "p")?)),
        ),
        (
            Box::new(|w: &mut Vec<u8>| write_stance(w, &c.stance)),
            Box::new(|r: &[u8], w: &mut Vec<u8>| write_stance(w, &read_stance(r, "st")?)),
        ),
        (
            Box::new(|w: &mut Vec<u8>| write_tag_probs(w, &c.tag_probs)),
            Box::new(|r: &[u8], w: &mut Vec<u8>| write_tag_probs(w, &read_tag_probs(r, "tp")?)),
        ),
    ] {
        let mut a = Vec::new();
        write(&mut a).unwrap();
        let mut b = Vec::new();
        read(&a, &mut b).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn headers_are_exact() {
    let c = cohort(30, 2);
    let mut a = Vec::new();
    write_ratings(&mut a, &c.sessions).unwrap();
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("session_id,image_id,rating,rating_time_ms\n"));
    // A renamed or reordered column is refused.
    let swapped =
        text.replacen("image_id,session_id", "x", 1)
            .replacen("session_id,image_id", "image_id,session_id", 1);
    assert!(read_ratings(swapped.as_bytes(), "r").is_err());
    assert!(read_ratings("session_id,image_id,rating\n".as_bytes(), "r").is_err());
    assert!(read_ratings(
        "session_id,image_id,rating,rating_time_ms\nS1,img1,x,5\n".as_bytes(),
        "r"
    )
    .is_err());
    assert_eq!(
        scores_header()[..12],
        strings(&[
            "session_id",
            "sit",
            "gender_sit",
            "iat_d",
            "iat_rev",
            "growth_mindset",
            "implicit_bias_awareness",
            "gender_stem_stereotypes",
            "locus_of_control",
            "social_values",
            "inclusive_teaching",
            "lexical_density",
        ])[..]
    );
    assert_eq!(scores_header()[12], "ttr");
}

proptest! {
    // Comment text survives quoting whatever it contains.
    #[test]
    fn comment_text_round_trips(texts in proptest::collection::vec("[ -~\n\r\"',àèé]{0,40}", 1..20)) {
        let rows: Vec<CommentEvent> = texts
            .iter()
            .enumerate()
            .map(|(i, t)| CommentEvent {
                session_id: format!("S{i}"),
                image_id: format!("img{i:03}"),
                text: t.clone(),
                comment_time_ms: i as u64,
            })
            .collect();
        let mut a = Vec::new();
        write_comment_rows(&mut a, &rows).unwrap();
        prop_assert!(std::str::from_utf8(&a).is_ok());
        let back = read_comments(&a[..], "c").unwrap();
        prop_assert_eq!(&back, &rows);
        let mut b = Vec::new();
        write_comment_rows(&mut b, &back).unwrap();
        prop_assert_eq!(a, b);
    }
}
