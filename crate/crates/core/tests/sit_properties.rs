use proptest::prelude::*;
use sit_core::sit::*;
use sit_core::Error;

/// A random sparse matrix where every image has at least two raters.
fn matrix_strategy(scale_max: u8) -> impl Strategy<Value = (Vec<(String, bool)>, Vec<RespondentRatings>)> {
    (3usize..9, 3usize..12).prop_flat_map(move |(n_img, n_resp)| {
        let cells = proptest::collection::vec(
            proptest::collection::vec(proptest::option::weighted(0.7, 1..=scale_max), n_img),
            n_resp,
        );
        let flags = proptest::collection::vec(any::<bool>(), n_img);
        (cells, flags).prop_map(move |(mut cells, flags)| {
            // Two raters per image, one rating per respondent.
            for r in cells.iter_mut() {
                if r.iter().all(Option::is_none) {
                    r[0] = Some(2);
                }
            }
            for (j, _) in flags.iter().enumerate() {
                for r in cells.iter_mut().take(2) {
                    if r[j].is_none() {
                        r[j] = Some(1);
                    }
                }
            }
            let images: Vec<(String, bool)> = flags.iter().enumerate().map(|(j, g)| (format!("i{j}"), *g)).collect();
            let resp = cells
                .iter()
                .enumerate()
                .map(|(i, row)| RespondentRatings {
                    respondent_id: format!("r{i}"),
                    ratings: row
                        .iter()
                        .enumerate()
                        .filter_map(|(j, x)| x.map(|x| (format!("i{j}"), x as f64)))
                        .collect(),
                })
                .collect();
            (images, resp)
        })
    })
}

fn image_sums(m: &RatingMatrix, d: &[Vec<f64>]) -> Vec<f64> {
    let mut sums = vec![0.0; m.images().len()];
    for (row, dv) in m.rows().iter().zip(d) {
        for ((j, _), v) in row.iter().zip(dv) {
            sums[*j] += v;
        }
    }
    sums
}

proptest! {
    #[test]
    fn demeaned_cells_sum_to_zero_per_image((images, resp) in matrix_strategy(5)) {
        let m = RatingMatrix::new(images, resp).unwrap();
        let d = loo_demean(&m).unwrap();
        for s in image_sums(&m, &d) {
            prop_assert!(s.abs() < 1e-9, "sum {s}");
        }
    }

    #[test]
    fn constant_shift_leaves_tilde_unchanged((images, resp) in matrix_strategy(7), up in any::<bool>()) {
        let scale = RatingScale { min: 1.0, max: 9.0 };
        let c = if up { 1.0 } else { -1.0 };
        let shifted: Vec<RespondentRatings> = resp
            .iter()
            .map(|r| RespondentRatings {
                respondent_id: r.respondent_id.clone(),
                ratings: r.ratings.iter().map(|(i, x)| (i.clone(), x + c + 1.0)).collect(),
            })
            .collect();
        let base: Vec<RespondentRatings> = resp
            .iter()
            .map(|r| RespondentRatings {
                respondent_id: r.respondent_id.clone(),
                ratings: r.ratings.iter().map(|(i, x)| (i.clone(), x + 1.0)).collect(),
            })
            .collect();
        let a = RatingMatrix::with_scale(scale, images.clone(), base).unwrap();
        let b = RatingMatrix::with_scale(scale, images, shifted).unwrap();
        let ta = tilde_scores(&a, &loo_demean(&a).unwrap(), Subset::All).unwrap();
        let tb = tilde_scores(&b, &loo_demean(&b).unwrap(), Subset::All).unwrap();
        for (x, y) in ta.iter().zip(&tb) {
            prop_assert!((x.0 - y.0).abs() < 1e-12);
        }
    }

    #[test]
    fn standardized_scores_have_unit_moments((images, resp) in matrix_strategy(5)) {
        let m = RatingMatrix::new(images, resp).unwrap();
        match sit_scores(&m, Subset::All) {
            Ok(s) => {
                let v: Vec<f64> = s.iter().map(|x| x.standardized).collect();
                let n = v.len() as f64;
                let mu = v.iter().sum::<f64>() / n;
                let sd = (v.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
                prop_assert!(mu.abs() < 1e-9);
                prop_assert!((sd - 1.0).abs() < 1e-9);
            }
            Err(e) => prop_assert!(matches!(e, Error::Degenerate(_))),
        }
    }

    #[test]
    fn respondent_order_does_not_matter((images, resp) in matrix_strategy(5), seed in any::<u64>()) {
        let m = RatingMatrix::new(images.clone(), resp.clone()).unwrap();
        let mut shuffled = resp;
        sit_core::rng::SeededRng::new(seed).shuffle(&mut shuffled);
        for r in &mut shuffled {
            r.ratings.reverse();
        }
        let mut imgs = images;
        imgs.reverse();
        let p = RatingMatrix::new(imgs, shuffled).unwrap();
        let (Ok(a), Ok(b)) = (sit_scores(&m, Subset::All), sit_scores(&p, Subset::All)) else {
            return Ok(());
        };
        for s in &a {
            let t = b.iter().find(|x| x.respondent_id == s.respondent_id).unwrap();
            prop_assert!((s.standardized - t.standardized).abs() < 1e-9);
        }
    }
}

#[test]
fn gender_subset_matches_restricted_matrix() {
    let images: Vec<(String, bool)> = (0..8).map(|j| (format!("i{j}"), j < 3)).collect();
    let mut rng = sit_core::rng::SeededRng::new(3);
    let resp: Vec<RespondentRatings> = (0..15)
        .map(|i| {
            let kept: Vec<usize> = (0..8).filter(|j| *j < 3 || rng.coin()).collect();
            RespondentRatings {
                respondent_id: format!("r{i}"),
                ratings: kept
                    .into_iter()
                    .map(|j| (format!("i{j}"), 1.0 + rng.below(5) as f64))
                    .collect(),
            }
        })
        .collect();
    let m = RatingMatrix::new(images, resp).unwrap();
    let sub = sit_scores(&m, Subset::GenderStemOnly).unwrap();
    let restricted = m.restrict(|_, g| g);
    let full = sit_scores(&restricted, Subset::All).unwrap();
    for (a, b) in sub.iter().zip(&full) {
        assert_eq!(a.respondent_id, b.respondent_id);
        assert!((a.standardized - b.standardized).abs() < 1e-12);
    }
}

#[test]
fn hand_enumerated_image() {
    let images = vec![("A".to_string(), false)];
    let resp = [5.0, 3.0, 1.0]
        .iter()
        .enumerate()
        .map(|(i, x)| RespondentRatings {
            respondent_id: format!("r{}", i + 1),
            ratings: vec![("A".into(), *x)],
        })
        .collect();
    let m = RatingMatrix::new(images, resp).unwrap();
    let d = loo_demean(&m).unwrap();
    assert_eq!(d, vec![vec![3.0], vec![0.0], vec![-3.0]]);
}

#[test]
fn single_rater_image_is_named() {
    let images = vec![("A".to_string(), false), ("lonely".to_string(), false)];
    let resp = vec![
        RespondentRatings {
            respondent_id: "r1".into(),
            ratings: vec![("A".into(), 1.0), ("lonely".into(), 2.0)],
        },
        RespondentRatings {
            respondent_id: "r2".into(),
            ratings: vec![("A".into(), 2.0)],
        },
    ];
    let m = RatingMatrix::new(images, resp).unwrap();
    match loo_demean(&m) {
        Err(Error::Degenerate(msg)) => assert!(msg.contains("lonely")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn pilot_rescale_grid() {
    for (x, y) in [(0.0, 1.0), (2.5, 3.0), (5.0, 5.0)] {
        assert!((rescale_pilot(x).unwrap() - y).abs() < 1e-12);
    }
    assert!(rescale_pilot(5.5).is_err());
}
