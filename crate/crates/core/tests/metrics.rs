use mpdoa::metrics::{aggregate, match_and_mse, ExperimentRecord};
use proptest::prelude::*;

fn angles(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-90.0..90.0f64, k)
}

fn pairs() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..=4).prop_flat_map(|k| (angles(k), angles(k)))
}

proptest! {
    #[test]
    fn optimal_assignment_beats_sorted_order((est, truth) in pairs()) {
        let (mse, _) = match_and_mse(&est, &truth).unwrap();
        let (mut a, mut b) = (est.clone(), truth.clone());
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        let sorted = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64;
        prop_assert!(mse <= sorted + 1e-9);
    }

    #[test]
    fn common_permutation_leaves_mse_unchanged((est, truth) in pairs(), shift in 0usize..4) {
        let k = est.len();
        let rot = |v: &[f64]| (0..k).map(|i| v[(i + shift) % k]).collect::<Vec<_>>();
        let (a, _) = match_and_mse(&est, &truth).unwrap();
        let (b, _) = match_and_mse(&rot(&est), &rot(&truth)).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
    }

    #[test]
    fn assignment_realizes_reported_mse((est, truth) in pairs()) {
        let (mse, assign) = match_and_mse(&est, &truth).unwrap();
        let direct = truth.iter().zip(&assign).map(|(t, &e)| (est[e] - t).powi(2)).sum::<f64>() / truth.len() as f64;
        prop_assert!((mse - direct).abs() <= 1e-12 * mse.max(1.0));
    }
}

#[test]
fn summary_counts_every_trial() {
    let rec = |snr: f64, mse: f64, success: bool| ExperimentRecord {
        method: "dft".into(),
        m: 64,
        l: 5,
        k: 2,
        t: 3,
        snr_db: snr,
        seed: 0,
        mse_deg2: mse,
        rmse_deg: mse.sqrt(),
        success,
        iterations: 1,
        runtime_ms: 0.1,
    };
    let rows = aggregate(&[rec(0.0, 4.0, true), rec(5.0, 1.0, false), rec(0.0, 2.0, true), rec(5.0, 9.0, true)]);
    assert_eq!(rows.len(), 2);
    assert_eq!((rows[0].trials, rows[0].mean_mse_deg2, rows[0].success_rate), (2, 3.0, 1.0));
    assert_eq!((rows[1].trials, rows[1].mean_mse_deg2, rows[1].success_rate), (2, 9.0, 0.5));
}
