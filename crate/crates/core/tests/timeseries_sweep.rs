use nalgebra::DMatrix;
use proptest::prelude::*;

use signet::embedding::Method;
use signet::sweep::{mean_and_stderr, run_sweep, write_aggregates_csv, write_trials_csv, Axis, ExperimentGrid};
use signet::timeseries::{correlation_matrix, correlation_network, excess_returns, log_returns, PricePanel, SeriesPanel};

fn series() -> impl Strategy<Value = SeriesPanel> {
    (2usize..8, 4usize..40).prop_flat_map(|(m, t)| {
        prop::collection::vec(-1.0f64..1.0, m * t).prop_map(move |v| SeriesPanel {
            ids: (0..m).map(|i| format!("S{i}")).collect(),
            values: DMatrix::from_row_slice(m, t, &v),
        })
    })
}

proptest! {
    #[test]
    fn correlations_are_symmetric_and_bounded(s in series()) {
        let Ok(c) = correlation_matrix(&s) else { return Ok(()); };
        prop_assert_eq!(&c, &c.transpose());
        prop_assert!(c.iter().all(|v| (-1.0..=1.0).contains(v)));
        prop_assert!((0..c.nrows()).all(|i| c[(i, i)] == 1.0));
    }

    #[test]
    fn affine_rescaling_keeps_correlations(s in series(), row in 0usize..8, a in 0.01f64..100.0, b in -50.0f64..50.0) {
        let row = row % s.ids.len();
        let Ok(c) = correlation_matrix(&s) else { return Ok(()); };
        let mut t = s.clone();
        for v in t.values.row_mut(row).iter_mut() {
            *v = a * *v + b;
        }
        let ct = correlation_matrix(&t).unwrap();
        prop_assert!((c - ct).abs().max() <= 1e-12);
    }

    #[test]
    fn network_threshold_drops_weak_edges(s in series(), cut in 0.0f64..1.0) {
        let Ok(g) = correlation_network(&s, Some(cut)) else { return Ok(()); };
        prop_assert!(g.edges().iter().all(|&(_, _, w)| w.abs() >= cut));
    }
}

#[test]
fn price_csv_to_excess_returns() {
    let csv = "date,SPY,A,B\n2024-01-01,100,10,20\n2024-01-02,110,11,19\n2024-01-03,99,12.1,19.5\n";
    let panel = PricePanel::from_csv(csv.as_bytes()).unwrap();
    assert_eq!(panel.ids, ["SPY", "A", "B"]);
    let r = log_returns(&panel).unwrap();
    assert!((r.values[(1, 0)] - (1.1f64).ln()).abs() < 1e-12);
    let x = excess_returns(&r, "SPY").unwrap();
    assert_eq!(x.ids, ["A", "B"]);
    assert!((x.values[(0, 0)] - ((1.1f64).ln() - (1.1f64).ln())).abs() < 1e-12);
    assert!((x.values[(0, 1)] - ((1.1f64).ln() - (99.0f64 / 110.0).ln())).abs() < 1e-12);
}

#[test]
fn rows_with_missing_prices_are_rejected() {
    let csv = "A,B\n1,2\n,3\n2,4\n";
    assert!(PricePanel::from_csv(csv.as_bytes()).is_err());
}

fn small_grid() -> ExperimentGrid {
    let mut g = ExperimentGrid::new(Axis::Eta, 90, 3, vec![Method::SpongeSym, Method::SignedLbarSym, Method::Bnc]);
    g.p = 0.2;
    g.values = vec![0.0, 0.15, 0.3];
    g.trials = 4;
    g.base_seed = 21;
    g
}

#[test]
fn aggregates_are_trial_means() {
    let grid = small_grid();
    let out = run_sweep(&grid).unwrap();
    assert_eq!(out.trials.len(), 3 * 3 * 4);
    for a in &out.aggregates {
        let aris: Vec<f64> = out
            .trials
            .iter()
            .filter(|t| t.cell == a.cell && t.method == a.method)
            .filter_map(|t| t.ari)
            .collect();
        assert_eq!(aris.len() + a.failures, a.trials);
        let mean = aris.iter().sum::<f64>() / aris.len() as f64;
        assert!((a.mean_ari - mean).abs() <= 1e-12);
        assert!((-1.0..=1.0).contains(&a.mean_ari));
    }
}

#[test]
fn rerun_produces_identical_csv() {
    let grid = small_grid();
    let render = || {
        let out = run_sweep(&grid).unwrap();
        let (mut t, mut a) = (Vec::new(), Vec::new());
        write_trials_csv(&mut t, &out.trials, false).unwrap();
        write_aggregates_csv(&mut a, &out.aggregates).unwrap();
        (t, a)
    };
    assert_eq!(render(), render());
}

#[test]
fn empty_grid_is_rejected() {
    let mut grid = small_grid();
    grid.values.clear();
    assert!(run_sweep(&grid).is_err());
    let mut grid = small_grid();
    grid.trials = 0;
    assert!(run_sweep(&grid).is_err());
}

#[test]
fn stderr_of_constant_sample_is_zero() {
    assert_eq!(mean_and_stderr(&[0.5, 0.5, 0.5]), (0.5, 0.0));
}
