use std::sync::Arc;

use proptest::prelude::*;
use sit_core::survey::assignment::create_session;
use sit_core::survey::flow::*;
use sit_core::survey::pool::ImagePool;
use sit_core::survey::questionnaire::AnswerValue;
use sit_core::synth::synthetic_pool;
use sit_core::Error;

fn pool() -> ImagePool {
    synthetic_pool(5).0
}

#[test]
fn every_seed_gets_all_gender_images_and_fourteen_others() {
    let pool = pool();
    let gender: Vec<&str> = pool.gender_stem_ids().collect();
    for seed in 0..1000u64 {
        let a = create_session(&pool, seed);
        assert_eq!(a.image_sequence.len(), 20);
        let mut uniq = a.image_sequence.clone();
        uniq.sort();
        uniq.dedup();
        assert_eq!(uniq.len(), 20);
        assert!(gender.iter().all(|g| a.image_sequence.iter().any(|x| x == g)));
        assert_eq!(a, create_session(&pool, seed));
    }
}

#[test]
fn arms_and_order_are_balanced() {
    let pool = pool();
    let n = 30_000u64;
    let mut arms = [0usize; 3];
    let mut iat_first = 0;
    for seed in 0..n {
        let a = create_session(&pool, seed.wrapping_mul(0x9e37_79b9_7f4a_7c15));
        arms[sit_core::survey::FramingArm::ALL
            .iter()
            .position(|x| *x == a.framing)
            .unwrap()] += 1;
        iat_first += usize::from(a.iat_first);
    }
    for c in arms {
        assert!((c as f64 / n as f64 - 1.0 / 3.0).abs() < 0.02);
    }
    assert!((iat_first as f64 / n as f64 - 0.5).abs() < 0.02);
}

#[derive(Debug, Clone)]
enum Action {
    Rate { pick: usize, rating: u8 },
    Comment { pick: usize },
    Iat { valid: bool },
    Feedback,
    Answers { page: usize, complete: bool },
}

fn action() -> impl Strategy<Value = Action> {
    prop_oneof![
        4 => (0usize..25, 0u8..7).prop_map(|(pick, rating)| Action::Rate { pick, rating }),
        4 => (0usize..25).prop_map(|pick| Action::Comment { pick }),
        1 => any::<bool>().prop_map(|valid| Action::Iat { valid }),
        1 => Just(Action::Feedback),
        2 => (0usize..8, any::<bool>()).prop_map(|(page, complete)| Action::Answers { page, complete }),
    ]
}

fn phase_rank(p: Phase) -> usize {
    [
        Phase::Framing,
        Phase::TaskA,
        Phase::Checkpoint,
        Phase::TaskB,
        Phase::Questionnaire,
        Phase::Done,
    ]
    .iter()
    .position(|x| *x == p)
    .unwrap()
}

fn apply(s: &mut Session, a: &Action) -> Result<(), Error> {
    let seq = s.assignment().image_sequence.clone();
    let image = |pick: usize| seq.get(pick).cloned().unwrap_or_else(|| "ghost".into());
    match a {
        Action::Rate { pick, rating } => s
            .record_rating(RatingEvent {
                session_id: s.id().to_string(),
                image_id: image(*pick),
                rating: *rating,
                rating_time_ms: 1000,
            })
            .map(|_| ()),
        Action::Comment { pick } => s
            .record_comment(CommentEvent {
                session_id: s.id().to_string(),
                image_id: image(*pick),
                text: "because".into(),
                comment_time_ms: 500,
            })
            .map(|_| ()),
        Action::Iat { valid } => {
            let mut trials = Vec::new();
            for b in s.schedule() {
                for (k, i) in b.trial_indices().enumerate() {
                    trials.push(sit_core::iat::IatTrial {
                        session_id: s.id().to_string(),
                        block: b.block,
                        trial_index: i,
                        stimulus_id: b.stimuli[k].clone(),
                        reaction_time_ms: if *valid { 500 + 13 * i + k as u32 } else { 0 },
                        correct: true,
                    });
                }
            }
            s.record_iat_trials(trials).map(|_| ())
        }
        Action::Feedback => s.show_feedback().map(|_| ()),
        Action::Answers { page, complete } => {
            let Some(p) = s.pages().get(*page).cloned() else {
                return s.record_answers(*page, Default::default()).map(|_| ());
            };
            let answers = p
                .items
                .iter()
                .filter(|_| *complete)
                .map(|it| {
                    let v = match it.key.as_str() {
                        "age" => AnswerValue::Number(40.0),
                        "birth_area" => AnswerValue::Text("South".into()),
                        "like_teaching" => AnswerValue::Number(6.0),
                        k if k.parse::<usize>().is_ok() => AnswerValue::Number(3.0),
                        _ => AnswerValue::Number(1.0),
                    };
                    (it.key.clone(), Some(v))
                })
                .collect();
            s.record_answers(*page, answers).map(|_| ())
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn random_drivers_keep_the_flow_sound(seed in any::<u64>(), actions in proptest::collection::vec(action(), 1..200)) {
        let protocol = Arc::new(Protocol::default());
        let mut s = Session::start(create_session(&pool(), seed), protocol.clone()).unwrap();
        let mut rank = phase_rank(s.state().phase);
        let mut seen: Vec<RatingEvent> = Vec::new();
        for a in &actions {
            let before = s.events().len();
            let r = apply(&mut s, a);
            if r.is_err() {
                prop_assert_eq!(s.events().len(), before);
            }
            let now = phase_rank(s.state().phase);
            prop_assert!(now >= rank);
            rank = now;
            // Recorded ratings are never altered.
            prop_assert_eq!(&s.ratings()[..seen.len()], &seen[..]);
            seen = s.ratings().to_vec();
            // A comment always follows the rating of the same image.
            for c in s.comments() {
                prop_assert!(s.ratings().iter().any(|r| r.image_id == c.image_id));
            }
        }
        let phases = s.phases().to_vec();
        let ranks: Vec<usize> = phases.iter().map(|p| phase_rank(*p)).collect();
        prop_assert!(ranks.windows(2).all(|w| w[0] < w[1]));
        let replayed = Session::replay(s.events(), protocol).unwrap();
        prop_assert_eq!(replayed.state(), s.state());
        prop_assert_eq!(replayed.events(), s.events());
        prop_assert_eq!(replayed.iat_revealed(), s.iat_revealed());
    }
}

#[test]
fn rating_out_of_order_is_a_sequencing_error() {
    let protocol = Arc::new(Protocol::default());
    let a = create_session(&pool(), 42);
    let mut s = Session::start(a.clone(), protocol).unwrap();
    // The second image cannot be rated before the first.
    let r = s.record_rating(RatingEvent {
        session_id: a.session_id.clone(),
        image_id: a.image_sequence[1].clone(),
        rating: 3,
        rating_time_ms: 10,
    });
    assert!(matches!(r, Err(Error::Sequencing(_))), "{r:?}");
}
