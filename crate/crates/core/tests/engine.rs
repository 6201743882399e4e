mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ctf_core::datasets::builtin;
use ctf_core::dsl::{parse_model, parse_query};
use ctf_core::engine::{
    abduction, compare_models, conditional_ctf, counterfactual_joint, feature_ctf, feature_ctf_joint, interventional,
    observational, CtfEvent, CtfQuery, EngineError, FeatureQuery,
};
use ctf_core::model::Intervention;
use ctf_core::scalar::{ratio, rint};
use ctf_core::ExactScm;

fn model(name: &str) -> ExactScm {
    builtin(name).unwrap().scm
}

fn vars(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

const HAIR: &str = "P(F[Y=0]=0, H[Y=0]=1 | F=0, Y=1, H=0)";

#[test]
fn face_observational_table() {
    let p = observational(&model("face_mstar"), &vars(&["F", "Y", "H"])).unwrap();
    let expected = [
        ([0, 0, 0], 27),
        ([0, 0, 1], 18),
        ([0, 1, 0], 16),
        ([0, 1, 1], 4),
        ([1, 0, 0], 18),
        ([1, 0, 1], 12),
        ([1, 1, 0], 24),
        ([1, 1, 1], 6),
    ];
    for (row, k) in expected {
        assert_eq!(p.prob(&row), ratio(k, 125), "{row:?}");
    }
    assert_eq!(p.total(), rint(1));
    assert_eq!(p.support_len(), 8);
}

#[test]
fn constant_model_is_a_point_mass() {
    let m = parse_model("model c { exo U ~ bernoulli(1/3)\n var A : {0,1,2} = 2 }").unwrap();
    let p = observational(&m, &vars(&["A"])).unwrap();
    assert_eq!(p.prob(&[2]), rint(1));
    assert_eq!(p.support_len(), 1);
}

#[test]
fn interventions_on_age() {
    let m = model("face_mstar");
    let x = Intervention::single("Y", 0);
    assert_eq!(interventional(&m, &x, &vars(&["Y"])).unwrap().prob(&[0]), rint(1));
    assert_eq!(interventional(&m, &x, &vars(&["H"])).unwrap().prob(&[1]), ratio(2, 5));
}

#[test]
fn hair_counterfactual_triple() {
    let q = parse_query(HAIR).unwrap();
    let values: Vec<_> =
        ["face_mstar", "face_mprime", "face_m3"].iter().map(|n| conditional_ctf(&model(n), &q).unwrap()).collect();
    assert_eq!(values, vec![ratio(2, 5), rint(0), ratio(1, 4)]);
    let v = vars(&["F", "Y", "H"]);
    let p0 = observational(&model("face_mstar"), &v).unwrap();
    for n in ["face_mprime", "face_m3"] {
        assert_eq!(observational(&model(n), &v).unwrap(), p0, "{n}");
    }
}

#[test]
fn joint_is_conditional_times_evidence() {
    let m = model("face_mstar");
    let q = parse_query("P(F[Y=0]=0, H[Y=0]=1, F=0, Y=1, H=0)").unwrap();
    assert_eq!(counterfactual_joint(&m, &q).unwrap(), ratio(2, 5) * ratio(16, 125));
    assert_eq!(counterfactual_joint(&m, &parse_query("P(Y[Y=0]=1)").unwrap()).unwrap(), rint(0));
}

#[test]
fn zero_conditioning_is_reported() {
    let m = parse_model("model copy { exo U ~ bernoulli(1/2)\n var X : {0,1} = U\n var Y : {0,1} = X }").unwrap();
    let q = CtfQuery::new(
        vec![CtfEvent::new("Y", 1, Intervention::single("X", 1))],
        vec![("X".into(), 0), ("Y".into(), 1)],
    );
    assert_eq!(conditional_ctf(&m, &q), Err(EngineError::ZeroConditioning));
    assert_eq!(counterfactual_joint(&m, &q).unwrap(), rint(0));
    let dup = CtfQuery::new(vec![], vec![("X".into(), 1), ("X".into(), 0)]);
    assert!(matches!(conditional_ctf(&m, &dup), Err(EngineError::DuplicateEvent { .. })));
}

#[test]
fn feature_queries() {
    let m = model("face_mstar");
    let y0 = Intervention::single("Y", 0);
    let q = FeatureQuery::new(vars(&["F", "Y"]), y0.clone(), vec![0, 1], vec![0, 0]);
    // F does not listen to Y, so the joint is P(F=0, Y=1)
    assert_eq!(feature_ctf_joint(&m, &q).unwrap(), ratio(4, 25));
    assert_eq!(feature_ctf(&m, &q).unwrap(), rint(1));
    let q = FeatureQuery::new(vars(&["F", "Y", "H"]), y0.clone(), vec![0, 1, 0], vec![0, 0, 1]);
    assert_eq!(feature_ctf(&m, &q).unwrap(), ratio(2, 5));
    for (x, x2) in [(0, 0), (1, 0), (1, 1)] {
        let ctx = Intervention::single("Y", x2);
        let hit = FeatureQuery::new(vars(&["Y"]), ctx.clone(), vec![x], vec![x2]);
        let miss = FeatureQuery::new(vars(&["Y"]), ctx, vec![x], vec![1 - x2]);
        assert_eq!(feature_ctf(&m, &hit).unwrap(), rint(1));
        assert_eq!(feature_ctf(&m, &miss).unwrap(), rint(0));
    }
}

#[test]
fn abduction_posterior_sums_to_one() {
    let m = model("face_mstar");
    let post = abduction(&m, &[("F".into(), 0), ("Y".into(), 1), ("H".into(), 0)]).unwrap();
    let total = post.iter().fold(rint(0), |a, (_, p)| a + p);
    assert_eq!(total, rint(1));
    assert!(abduction(&m, &[("Y".into(), 5)]).is_err());
}

#[test]
fn non_identifiability_witnesses() {
    let q = parse_query(HAIR).unwrap();
    let r = compare_models(&model("face_mstar"), &model("face_mprime"), &[q]).unwrap();
    assert!(r.observational_equal);
    // hair reads the age latent in face_mprime, which the induced diagram shows
    assert!(!r.diagrams_equal);
    assert_eq!((r.queries[0].1.clone(), r.queries[0].2.clone()), (ratio(2, 5), rint(0)));
    assert!(r.witnesses_non_identifiability());

    let q = parse_query("P(S[Y=0]=1 | Y=1, S=0)").unwrap();
    let r = compare_models(&model("face_m1_smile"), &model("face_m2_smile"), std::slice::from_ref(&q)).unwrap();
    assert!(r.observational_equal);
    assert_eq!((r.queries[0].1.clone(), r.queries[0].2.clone()), (rint(0), rint(1)));
    assert!(r.witnesses_non_identifiability());

    let same = compare_models(&model("face_mstar"), &model("face_mstar"), &[parse_query(HAIR).unwrap()]).unwrap();
    assert!(same.observational_equal && same.diagrams_equal && same.queries[0].1 == same.queries[0].2);
    assert!(!same.witnesses_non_identifiability());

    assert!(matches!(
        compare_models(&model("face_mstar"), &model("backdoor"), &[]),
        Err(EngineError::SignatureMismatch(_))
    ));
}

#[test]
fn float_and_exact_agree() {
    let m = model("backdoor");
    let f = m.map_scalar(ctf_core::Scalar::to_f64_lossy);
    let q = parse_query("P(C[D=6]=1, B[D=6]=1 | D=3, C=1, B=1)").unwrap();
    let exact = conditional_ctf(&m, &q).unwrap();
    let approx = conditional_ctf(&f, &q).unwrap();
    assert!((ctf_core::Scalar::to_f64_lossy(&exact) - approx).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn factual_queries_match_observational(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = common::random_scm(&mut rng, "r", 4, 3);
        let names = m.variable_names();
        let p = observational(&m, &names).unwrap();
        prop_assert_eq!(p.total(), rint(1));
        for (row, mass) in p.iter() {
            let events = names.iter().zip(row).map(|(v, x)| CtfEvent::factual(v.clone(), *x)).collect();
            prop_assert_eq!(&counterfactual_joint(&m, &CtfQuery::new(events, vec![])).unwrap(), mass);
        }
    }

    #[test]
    fn adding_events_never_increases_the_joint(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = common::random_scm(&mut rng, "r", 4, 3);
        let q = common::random_query(&mut rng, &m);
        let full = counterfactual_joint(&m, &q).unwrap();
        for k in 0..q.events.len() {
            let mut fewer = q.clone();
            fewer.events.remove(k);
            prop_assert!(counterfactual_joint(&m, &fewer).unwrap() >= full);
        }
        let v = conditional_ctf(&m, &q).unwrap();
        prop_assert!(v >= rint(0) && v <= rint(1));
    }
}
