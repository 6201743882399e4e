use std::collections::BTreeMap;

use ctf_core::consistency::{
    check_ctf_consistency, default_delta, default_epsilon, empirical_distribution, empirical_from_csv, fit_markovian,
    proxy_conditional, proxy_markovian, proxy_preserve, ConsistencyError, ProxyLog, SampleRecord, Verdict,
};
use ctf_core::datasets::{builtin, sample_labels, write_labels_csv};
use ctf_core::dsl::parse_model;
use ctf_core::engine::{observational, Distribution};
use ctf_core::model::{CausalDiagram, Intervention};
use ctf_core::scalar::{ratio, rint};
use ctf_core::Rational;

fn obs_of(name: &str) -> (Distribution<Rational>, CausalDiagram) {
    let m = builtin(name).unwrap();
    (observational(&m.scm, &m.scm.variable_names()).unwrap(), m.diagram)
}

fn w(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn assignment(pairs: &[(&str, i64)]) -> BTreeMap<String, i64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

#[test]
fn identical_records_give_point_mass() {
    let row = assignment(&[("A", 1), ("B", 0)]);
    let rows = vec![&row; 4];
    let d = empirical_distribution(&rows).unwrap();
    assert_eq!(d.prob(&[1, 0]), rint(1));
    assert_eq!(d.support_len(), 1);
}

#[test]
fn empty_and_ragged_inputs_are_rejected() {
    assert!(matches!(empirical_distribution(&[]), Err(ConsistencyError::Empty)));
    let a = assignment(&[("A", 1), ("B", 0)]);
    let b = assignment(&[("A", 1)]);
    assert!(matches!(empirical_distribution(&[&a, &b]), Err(ConsistencyError::Ragged { record: 1 })));
}

#[test]
fn label_csv_round_trips_through_the_empirical_table() {
    let m = builtin("face_mstar").unwrap();
    let rows = sample_labels(&m.scm, 200, 5);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("labels.csv");
    write_labels_csv(&m.scm, &rows, &path).unwrap();
    let d = empirical_from_csv(&path).unwrap();
    assert_eq!(d.variables(), &w(&["F", "Y", "H"])[..]);
    assert_eq!(d.total(), rint(1));
    let count = rows.iter().filter(|r| r.values == vec![0, 1, 0]).count();
    assert_eq!(d.prob(&[0, 1, 0]), ratio(count as i64, 200));
}

#[test]
fn jsonl_round_trip_and_mixed_interventions() {
    let (obs, _) = obs_of("face_mstar");
    let log = proxy_preserve(&obs, &Intervention::single("Y", 0), 25, 3).unwrap();
    let text = log.to_jsonl();
    assert!(text.lines().next().unwrap().contains("\"do\":{\"Y\":0}"));
    assert_eq!(ProxyLog::parse_jsonl(&text).unwrap(), log);
    let mut mixed = log.clone();
    mixed.records[4].intervention = assignment(&[("Y", 1)]);
    assert!(matches!(mixed.intervention(), Err(ConsistencyError::MixedInterventions { record: 4 })));
    assert!(matches!(ProxyLog::parse_jsonl("{not json"), Err(ConsistencyError::Json { line: 1, .. })));
}

#[test]
fn conditional_proxy_changes_gender_and_fails() {
    let (obs, g) = obs_of("face_mstar");
    let log = proxy_conditional(&obs, &Intervention::single("Y", 0), 20_000, 1).unwrap();
    let from: Vec<&SampleRecord> = log.records.iter().filter(|r| r.factual["F"] == 0 && r.factual["Y"] == 1).collect();
    let kept = from.iter().filter(|r| r.counterfactual["F"] == 0).count() as f64 / from.len() as f64;
    assert!((kept - 0.6).abs() < 0.03, "{kept}");

    let report = check_ctf_consistency(&obs, &log, &g, &w(&["F", "Y"]), &default_epsilon(), &default_delta()).unwrap();
    assert!(report.obs_fit);
    assert_eq!(report.verdict, Verdict::Fail);
    let bad = report
        .violations()
        .find(|c| {
            c.factual == assignment(&[("F", 0), ("Y", 1)]) && c.counterfactual == assignment(&[("F", 0), ("Y", 0)])
        })
        .expect("gender-keeping cell violates its [1, 1] bound");
    assert!(
        matches!(&bad.bound, ctf_core::consistency::CellBound::Computed { lower, upper, .. } if *lower == rint(1) && *upper == rint(1))
    );
}

#[test]
fn preserve_proxy_passes_the_age_edit() {
    let (obs, g) = obs_of("face_mstar");
    let log = proxy_preserve(&obs, &Intervention::single("Y", 0), 20_000, 2).unwrap();
    let report = check_ctf_consistency(&obs, &log, &g, &w(&["F", "Y"]), &default_epsilon(), &default_delta()).unwrap();
    assert_eq!(report.verdict, Verdict::Pass, "{}", report.to_json());
    assert!(report.tv >= rint(0) && report.tv <= rint(1));
}

#[test]
fn care_set_equal_to_intervened_set_passes() {
    for (name, x, care) in [("face_mstar", ("Y", 0), vec!["Y"]), ("backdoor", ("D", 6), vec!["D"])] {
        let (obs, g) = obs_of(name);
        let x = Intervention::single(x.0, x.1);
        for log in [proxy_preserve(&obs, &x, 50_000, 9).unwrap(), proxy_conditional(&obs, &x, 50_000, 9).unwrap()] {
            let r = check_ctf_consistency(&obs, &log, &g, &w(&care), &default_epsilon(), &default_delta()).unwrap();
            assert_eq!(r.verdict, Verdict::Pass, "{name}: {}", r.to_json());
        }
    }
}

#[test]
fn preserve_proxy_fails_digit_edit_and_passes_bar_edit() {
    let (obs, g) = obs_of("backdoor");
    let care = w(&["D", "C", "B"]);
    let log = proxy_preserve(&obs, &Intervention::single("D", 6), 20_000, 4).unwrap();
    let r = check_ctf_consistency(&obs, &log, &g, &care, &default_epsilon(), &default_delta()).unwrap();
    assert_eq!(r.verdict, Verdict::Fail);
    let cell =
        r.cells.iter().find(|c| c.factual == assignment(&[("D", 3), ("C", 1), ("B", 1)])).expect("cell observed");
    assert_eq!(cell.empirical, rint(1));
    assert_eq!(cell.in_bound, Some(false));

    let log = proxy_preserve(&obs, &Intervention::single("B", 0), 20_000, 4).unwrap();
    let r = check_ctf_consistency(&obs, &log, &g, &care, &default_epsilon(), &default_delta()).unwrap();
    assert_eq!(r.verdict, Verdict::Pass, "{}", r.to_json());
}

#[test]
fn markovian_fit_misses_confounding() {
    let (obs, g) = obs_of("face_mstar");
    let fit = fit_markovian(&obs, &g).unwrap();
    assert_eq!(fit.tv, ratio(12, 125));
    assert!(fit.filled.is_empty());

    let (log, fit) = proxy_markovian(&obs, &g, &Intervention::single("Y", 0), 5000, 8).unwrap();
    assert_eq!(fit.tv, ratio(12, 125));
    assert!(log.records.iter().all(|r| r.counterfactual["F"] == r.factual["F"] && r.counterfactual["Y"] == 0));
    let r = check_ctf_consistency(&obs, &log, &g, &w(&["F", "Y"]), &default_epsilon(), &default_delta()).unwrap();
    assert!(!r.obs_fit);
    assert_eq!(r.verdict, Verdict::Fail);
    assert!(r.violations().next().is_none());
}

#[test]
fn markovian_truth_is_fitted_exactly() {
    let scm = parse_model(
        "model chain {
           exo U_X ~ bernoulli(1/3)
           exo U_Y ~ bernoulli(1/4)
           var X : {0,1} = U_X
           var Y : {0,1} = xor(X, U_Y)
         }",
    )
    .unwrap();
    let obs = observational(&scm, &scm.variable_names()).unwrap();
    let g = scm.induce_diagram();
    let (log, fit) = proxy_markovian(&obs, &g, &Intervention::single("X", 1), 20_000, 6).unwrap();
    assert_eq!(fit.tv, rint(0));
    let r = check_ctf_consistency(&obs, &log, &g, &w(&["X", "Y"]), &default_epsilon(), &default_delta()).unwrap();
    assert_eq!(r.verdict, Verdict::Pass, "{}", r.to_json());
}

#[test]
fn zero_mass_parent_contexts_are_filled_uniformly() {
    let scm = parse_model(
        "model gap {
           exo U ~ bernoulli(1/2)
           var X : {0,1,2} = U
           var Y : {0,1} = eq(X, 1)
         }",
    )
    .unwrap();
    let obs = observational(&scm, &scm.variable_names()).unwrap();
    let fit = fit_markovian(&obs, &scm.induce_diagram()).unwrap();
    assert_eq!(fit.tv, rint(0));
    assert_eq!(fit.filled, vec![("Y".to_string(), assignment(&[("X", 2)]))]);
}

#[test]
fn conditional_proxy_rejects_empty_context() {
    let scm = parse_model("model k { exo U ~ bernoulli(1/2)\n var X : {0,1} = 0\n var Y : {0,1} = U }").unwrap();
    let obs = observational(&scm, &scm.variable_names()).unwrap();
    assert!(matches!(
        proxy_conditional(&obs, &Intervention::single("X", 1), 10, 0),
        Err(ConsistencyError::ZeroContext(_))
    ));
}

#[test]
fn same_seed_same_log_and_report() {
    let (obs, g) = obs_of("face_mstar");
    let x = Intervention::single("Y", 0);
    let a = proxy_conditional(&obs, &x, 3000, 42).unwrap();
    let b = proxy_conditional(&obs, &x, 3000, 42).unwrap();
    assert_eq!(a.to_jsonl(), b.to_jsonl());
    let care = w(&["F", "Y"]);
    let ra = check_ctf_consistency(&obs, &a, &g, &care, &default_epsilon(), &default_delta()).unwrap();
    let rb = check_ctf_consistency(&obs, &b, &g, &care, &default_epsilon(), &default_delta()).unwrap();
    assert_eq!(ra.to_json().to_string(), rb.to_json().to_string());
    let c = proxy_conditional(&obs, &x, 3000, 43).unwrap();
    assert_ne!(a.to_jsonl(), c.to_jsonl());
}

#[test]
fn enlarging_tolerances_never_turns_pass_into_fail() {
    let (obs, g) = obs_of("face_mstar");
    let care = w(&["F", "Y", "H"]);
    let x = Intervention::single("Y", 0);
    let logs = [
        proxy_preserve(&obs, &x, 2000, 1).unwrap(),
        proxy_conditional(&obs, &x, 2000, 1).unwrap(),
        proxy_markovian(&obs, &g, &x, 2000, 1).unwrap().0,
    ];
    let grid = [ratio(0, 1), ratio(1, 100), ratio(1, 20), ratio(1, 4), rint(1)];
    for log in &logs {
        for (i, e) in grid.iter().enumerate() {
            for (j, d) in grid.iter().enumerate() {
                let base = check_ctf_consistency(&obs, log, &g, &care, e, d).unwrap().verdict;
                if base != Verdict::Pass {
                    continue;
                }
                for e2 in &grid[i..] {
                    for d2 in &grid[j..] {
                        assert_eq!(check_ctf_consistency(&obs, log, &g, &care, e2, d2).unwrap().verdict, Verdict::Pass);
                    }
                }
            }
        }
    }
}

#[test]
fn unknown_care_variable_is_an_error() {
    let (obs, g) = obs_of("face_mstar");
    let log = proxy_preserve(&obs, &Intervention::single("Y", 0), 10, 0).unwrap();
    assert!(matches!(
        check_ctf_consistency(&obs, &log, &g, &w(&["Z"]), &default_epsilon(), &default_delta()),
        Err(ConsistencyError::UnknownVariable(_))
    ));
}
