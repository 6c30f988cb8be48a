use opendyn::sweep::{format_csv, format_number, parse_csv, run_sweep, SweepConfig, SweepRow};
use proptest::prelude::*;

fn value() -> impl Strategy<Value = Option<f64>> {
    prop_oneof![
        Just(None),
        (-1e8f64..1e8).prop_map(Some),
        (-1e-3f64..1e-3).prop_map(Some),
        Just(Some(0.0)),
    ]
}

fn row() -> impl Strategy<Value = SweepRow> {
    (0.0f64..=1.0, prop::collection::vec(value(), 15)).prop_map(|(p, v)| SweepRow {
        p,
        concurrence: v[0],
        lambda: v[1],
        gamma_witness: v[2],
        purity: v[3],
        purity_monitored: v[4],
        pred_sq: v[5],
        vis_sq: v[6],
        cse_sq: v[7],
        complementarity_sum: v[8],
        pop_v_traced: v[9],
        pop_v_monitored: v[10],
        concurrence_mle: v[11],
        concurrence_std: v[12],
        purity_mle: v[13],
        purity_std: v[14],
    })
}

fn through_text(x: Option<f64>) -> Option<f64> {
    x.map(|v| format_number(v).parse().unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn number_text_is_stable(x in prop::num::f64::NORMAL) {
        let text = format_number(x);
        let back: f64 = text.parse().unwrap();
        prop_assert_eq!(format_number(back), text.clone());
        prop_assert!(((back - x) / x).abs() < 1e-11, "{} -> {}", x, text);
        let digits = text.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
        prop_assert!(digits.trim_start_matches('0').len() <= 12);
    }

    #[test]
    fn csv_round_trips(rows in prop::collection::vec(row(), 1..8)) {
        let text = format_csv(&rows).unwrap();
        let parsed = parse_csv(&text).unwrap();
        prop_assert_eq!(format_csv(&parsed).unwrap(), text);
        for (a, b) in rows.iter().zip(&parsed) {
            prop_assert_eq!(through_text(Some(a.p)), Some(b.p));
            prop_assert_eq!(through_text(a.concurrence), b.concurrence);
            prop_assert_eq!(through_text(a.purity_std), b.purity_std);
            prop_assert_eq!(through_text(a.pop_v_monitored), b.pop_v_monitored);
        }
    }
}

#[test]
fn noisy_concurrence_tracks_exact_values() {
    let config = SweepConfig::from_toml(
        "scenario = \"tomo_demo\"\nstate = \"theta1\"\np_points = 11\nexposure = 1e4\nn_resamples = 20\nseed = 17\n",
    )
    .unwrap();
    let rows = run_sweep(&config).unwrap();
    let agree = rows
        .iter()
        .filter(|r| {
            let (exact, noisy, std) = (r.concurrence.unwrap(), r.concurrence_mle.unwrap(), r.concurrence_std.unwrap());
            (noisy - exact).abs() <= 3.0 * std + 1e-12
        })
        .count();
    assert!(agree * 10 >= rows.len() * 9, "{agree}/{} rows within 3 sigma", rows.len());
}

#[test]
fn every_scenario_runs() {
    for scenario in [
        "complementarity_single",
        "monitor_single",
        "esd_two_qubit",
        "witness_two_qubit",
        "dephasing_two_qubit",
        "purity_two_qubit",
        "distillation",
    ] {
        let config = SweepConfig::from_toml(&format!("scenario = \"{scenario}\"\nstate = \"theta1\"\np_points = 5\n")).unwrap();
        let rows = run_sweep(&config).unwrap();
        assert_eq!(rows.len(), 5, "{scenario}");
        let text = format_csv(&rows).unwrap();
        assert_eq!(text.lines().count(), 6);
    }
}
