use cleanroute_core::benefit::{
    builtin_risk_models, cohort_stats, compare, relative_risk, round1, shift_matrix, RiskModel,
};
use cleanroute_core::exposure::ExposureCategory;
use cleanroute_testkit::{random_cohort, summary};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn model(id: &str) -> RiskModel {
    builtin_risk_models()
        .into_iter()
        .find(|m| m.id == id)
        .unwrap()
}

#[test]
fn quoted_anchors() {
    assert_eq!(
        relative_risk(10.0, &model("hrapie-all-cause-mortality")),
        1.055
    );
    assert_eq!(
        relative_risk(1.0, &model("hrapie-bronchitis-children")),
        1.021
    );
    assert_eq!(
        relative_risk(10.0, &model("atkinson-all-cause-mortality")),
        1.02
    );
    for m in builtin_risk_models() {
        assert_eq!(relative_risk(0.0, &m), 1.0);
    }
    let twenty = relative_risk(20.0, &model("atkinson-all-cause-mortality"));
    assert!((twenty - 1.0404).abs() < 1e-12);
}

#[test]
fn compare_high_to_moderate() {
    let r = compare(&summary(52.0), &[summary(41.0)], &builtin_risk_models());
    assert_eq!(r.delta_ugm3, Some(11.0));
    let shift = r.category_shift.unwrap();
    assert_eq!(
        (shift.from, shift.to),
        (ExposureCategory::High, ExposureCategory::Moderate)
    );
    let rr = r
        .risk_ratios
        .iter()
        .find(|x| x.model_id == "hrapie-all-cause-mortality")
        .unwrap();
    assert_eq!(rr.factor, 1.055f64.powf(1.1));
}

proptest! {
    #[test]
    fn rr_is_multiplicative(a in -30.0..30.0f64, b in -30.0..30.0f64) {
        for m in builtin_risk_models() {
            let lhs = relative_risk(a + b, &m);
            let rhs = relative_risk(a, &m) * relative_risk(b, &m);
            prop_assert!((lhs - rhs).abs() <= 1e-12, "{} {a} {b}", m.id);
        }
    }

    #[test]
    fn rr_strictly_increasing(a in -30.0..30.0f64, step in 0.01..10.0f64) {
        for m in builtin_risk_models() {
            prop_assert!(relative_risk(a + step, &m) > relative_risk(a, &m));
        }
    }

    #[test]
    fn shift_matrix_ignores_order(seed in any::<u64>(), n in 1usize..60) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let reports = random_cohort(&mut rng, n);
        let mut shuffled = reports.clone();
        shuffled.shuffle(&mut rng);
        prop_assert_eq!(shift_matrix(&reports).unwrap(), shift_matrix(&shuffled).unwrap());
        prop_assert_eq!(cohort_stats(&reports).unwrap(), cohort_stats(&shuffled).unwrap());
    }

    #[test]
    fn compare_picks_rank_one(cur in 0.0..80.0f64, mut alts in prop::collection::vec(0.0..80.0f64, 0..5)) {
        alts.sort_by(f64::total_cmp);
        let sums: Vec<_> = alts.iter().map(|&m| summary(m)).collect();
        let r = compare(&summary(cur), &sums, &[]);
        prop_assert_eq!(r.best_alternative, sums.first().copied());
        prop_assert_eq!(r.delta_ugm3, sums.first().map(|b| cur - b.mean_no2_ugm3));
    }
}

#[test]
fn cohort_matrix_against_recount() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..200 {
        let n = rng.gen_range(1..120);
        let reports = random_cohort(&mut rng, n);
        let m = shift_matrix(&reports).unwrap();
        let s = cohort_stats(&reports).unwrap();
        assert!((m.grand_total - 100.0).abs() <= 0.5);
        for cur in ExposureCategory::ALL {
            let hist = reports.iter().filter(|r| r.current.category == cur).count();
            let pct = round1(100.0 * hist as f64 / n as f64);
            assert_eq!(m.column_totals[cur], pct);
            assert_eq!(s.distribution[cur], pct);
            for alt in ExposureCategory::ALL {
                let c = reports
                    .iter()
                    .filter(|r| {
                        r.current.category == cur
                            && r.best_alternative.map_or(cur, |b| b.category) == alt
                    })
                    .count();
                assert_eq!(m.counts[alt][cur], c);
                assert!(m.cells[alt][cur] >= 0.0);
            }
            let deltas: Vec<f64> = reports
                .iter()
                .filter(|r| r.current.category == cur)
                .filter_map(|r| {
                    r.best_alternative
                        .filter(|b| b.category == cur)
                        .map(|b| r.current.mean_no2_ugm3 - b.mean_no2_ugm3)
                })
                .collect();
            match s.within_category[cur] {
                None => assert!(deltas.is_empty()),
                Some(st) => {
                    assert_eq!(st.count, deltas.len());
                    let mean = deltas.iter().sum::<f64>() / deltas.len() as f64;
                    assert!((st.mean - mean).abs() < 1e-12);
                    assert!(st.min <= st.mean + 1e-12 && st.mean <= st.max + 1e-12);
                }
            }
        }
    }
}

#[test]
fn low_deltas_minus_one_and_five() {
    let reports = vec![
        compare(&summary(30.0), &[summary(31.0)], &[]),
        compare(&summary(36.0), &[summary(31.0)], &[]),
    ];
    let s = cohort_stats(&reports).unwrap();
    let low = s.within_category[ExposureCategory::Low].unwrap();
    assert_eq!((low.mean, low.min, low.max), (2.0, -1.0, 5.0));
}

#[test]
fn empty_inputs_are_errors() {
    assert!(shift_matrix(&[]).is_err());
    assert!(cohort_stats(&[]).is_err());
}
