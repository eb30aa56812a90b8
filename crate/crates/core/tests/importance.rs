mod common;

use common::*;
use dedact::importance::{
    ai_via, associative_importance, conditional_fi, di_from, direct_importance, pfi, sage_attribution,
    sage_attributions, sage_value, draw_orders, within_se,
};
use dedact::scm::{biomarker_scm, census_scm, sample_scm, LinearScm};
use dedact::{
    fit_ols, marginalize, empirical_risk, EvalOptions, Evaluator, FeatureIndexSet, GaussianModel, ImportanceEstimate,
    Integration, LinearPredictor, LossFunction, MeasureSpec, Mode, SageVariant,
};
use proptest::prelude::*;
use rand::Rng;

fn opts(seed: u64) -> EvalOptions {
    EvalOptions::default().with_seed(seed)
}

fn independent(n: usize, d: usize, seed: u64) -> dedact::DataMatrix<f64> {
    let mut r = rng(seed);
    let cols: Vec<Vec<f64>> = (0..d).map(|_| normals(&mut r, n)).collect();
    data_from_columns(&cols)
}

fn assert_zero(e: &ImportanceEstimate<f64>, k: f64) {
    assert!(within_se(e.value, e.std_error, k), "value {} se {}", e.value, e.std_error);
}

#[test]
fn direct_importance_of_ignored_features_is_zero() {
    let data = independent(2000, 3, 1);
    let y = target((0..2000).map(|i| data.row(i)[0]).collect());
    let f = linear(&[1.0, 0.0, 0.0], 0.0);
    let g = identity_gaussian(3);
    for b in [set(&[]), set(&[0]), set(&[2])] {
        let e = direct_importance(&MeasureSpec::di(set(&[1]), b).with_options(opts(3)), &data, &y, &f, &g).unwrap();
        assert_zero(&e, 3.0);
    }
}

#[test]
fn direct_importance_of_additive_model_is_twice_the_variance() {
    let n = 20_000;
    let data = independent(n, 2, 2);
    let y = target((0..n).map(|i| data.row(i)[0] + data.row(i)[1]).collect());
    let f = linear(&[1.0, 1.0], 0.0);
    let g = identity_gaussian(2);
    let e = direct_importance(&MeasureSpec::di(set(&[0]), set(&[1])).with_options(opts(4)), &data, &y, &f, &g).unwrap();
    // Independent oracle: E[(x~ - x)^2] for independent standard normals.
    let mut r = rng(99);
    let oracle = mean(
        &normals(&mut r, 100_000).iter().zip(normals(&mut r, 100_000)).map(|(a, b)| (a - b) * (a - b)).collect::<Vec<_>>(),
    );
    assert!((oracle - 2.0).abs() < 0.03);
    assert!((e.value - 2.0).abs() <= 3.0 * e.std_error, "{} ± {}", e.value, e.std_error);
    assert!((e.value - oracle).abs() <= 3.0 * e.std_error + 0.03);
    assert!(e.std_error > 0.0 && e.mc_std_error > 0.0);
}

#[test]
fn empty_interest_sets_give_exact_zero() {
    let data = independent(500, 3, 5);
    let y = target((0..500).map(|i| data.row(i)[0] - data.row(i)[2]).collect());
    let f = linear(&[1.0, 0.5, -1.0], 0.1);
    let g = identity_gaussian(3);
    for mode in [Mode::OriginalF, Mode::Marginalized] {
        let specs = [
            MeasureSpec::di(set(&[]), set(&[1])),
            MeasureSpec::ai(set(&[]), set(&[0])),
            MeasureSpec::di_from(set(&[0]), set(&[1]), set(&[])),
            MeasureSpec::ai_via(set(&[]), set(&[2]), set(&[0, 1])),
        ];
        let e = Evaluator::new(&data, &y, &f, &g).unwrap();
        for spec in specs {
            let r = e.evaluate(&spec.with_mode(mode).with_options(opts(6))).unwrap();
            assert_eq!(r.value, 0.0);
            assert_eq!(r.std_error, 0.0);
        }
    }
}

#[test]
fn associative_importance_of_a_copy() {
    // X2 = X1, f = x2, Y = X1: unrestored risk 2, restored risk 0.
    let n = 20_000;
    let mut r = rng(7);
    let x = normals(&mut r, n);
    let data = data_from_columns(&[x.clone(), x.clone()]);
    let y = target(x);
    let f = linear(&[0.0, 1.0], 0.0);
    let g = gaussian(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
    let e = associative_importance(&MeasureSpec::ai(set(&[0]), set(&[])).with_options(opts(8)), &data, &y, &f, &g)
        .unwrap();
    assert!((e.value - 2.0).abs() <= 3.0 * e.std_error, "{} ± {}", e.value, e.std_error);
}

#[test]
fn associative_importance_of_a_noise_variable_is_zero() {
    let n = 20_000;
    let mut r = rng(9);
    let x0 = normals(&mut r, n);
    let noise = normals(&mut r, n);
    let e = normals(&mut r, n);
    let y: Vec<f64> = x0.iter().zip(&e).map(|(a, b)| 2.0 * a + b).collect();
    let data = data_from_columns(&[x0, noise]);
    let t = target(y);
    let f = fit_ols(&data, &t, &FeatureIndexSet::full(2)).unwrap();
    let g = identity_gaussian(2);
    for c in [set(&[]), set(&[0])] {
        let est = associative_importance(&MeasureSpec::ai(set(&[1]), c).with_options(opts(10)), &data, &t, &f, &g)
            .unwrap();
        assert_zero(&est, 3.0);
    }
}

fn copy_and_independent(n: usize, seed: u64) -> (dedact::DataMatrix<f64>, dedact::TargetVector<f64>) {
    let mut r = rng(seed);
    let x0 = normals(&mut r, n);
    let x2 = normals(&mut r, n);
    let y = (0..n).map(|i| x0[i] + x2[i]).collect();
    (data_from_columns(&[x0.clone(), x0, x2]), target(y))
}

fn copy_gaussian() -> GaussianModel<f64> {
    gaussian(&[vec![1.0, 1.0, 0.0], vec![1.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]])
}

#[test]
fn di_from_examples() {
    let (data, y) = copy_and_independent(20_000, 11);
    let f = linear(&[1.0, 0.0, 1.0], 0.0);
    let g = copy_gaussian();
    let k = set(&[0]);
    let b = set(&[2]);
    let di = direct_importance(&MeasureSpec::di(k.clone(), b.clone()).with_options(opts(12)), &data, &y, &f, &g)
        .unwrap();
    // Perfect reconstruction from the copy.
    let from_copy =
        di_from(&MeasureSpec::di_from(k.clone(), b.clone(), set(&[1])).with_options(opts(12)), &data, &y, &f, &g)
            .unwrap();
    assert!((from_copy.value - di.value).abs() <= 3.0 * di.std_error);
    // Reconstruction from an independent variable carries nothing.
    let from_indep =
        di_from(&MeasureSpec::di_from(k.clone(), set(&[1]), set(&[2])).with_options(opts(12)), &data, &y, &f, &g)
            .unwrap();
    assert_zero(&from_indep, 3.0);
    assert!(di.value > 1.5);
}

#[test]
fn ai_via_examples() {
    let (data, y) = copy_and_independent(20_000, 13);
    let g = copy_gaussian();
    let f = linear(&[1.0, 0.0, 1.0], 0.0);
    let j = set(&[1]);
    let ai = associative_importance(&MeasureSpec::ai(j.clone(), set(&[])).with_options(opts(14)), &data, &y, &f, &g)
        .unwrap();
    let all = ai_via(&MeasureSpec::ai_via(j.clone(), set(&[]), FeatureIndexSet::full(3)).with_options(opts(14)), &data, &y, &f, &g)
        .unwrap();
    assert!((all.value - ai.value).abs() <= 3.0 * ai.std_error);
    assert!(ai.value > 1.5);
    // X1 reaches the model only through column 0; the pathway through the
    // (ignored) copy itself carries nothing.
    let via_copy = ai_via(&MeasureSpec::ai_via(j.clone(), set(&[]), set(&[1])).with_options(opts(14)), &data, &y, &f, &g)
        .unwrap();
    assert_zero(&via_copy, 3.0);
    let via_x0 = ai_via(&MeasureSpec::ai_via(j, set(&[]), set(&[0])).with_options(opts(14)), &data, &y, &f, &g)
        .unwrap();
    assert!((via_x0.value - ai.value).abs() <= 4.0 * ai.std_error);
}

#[test]
fn named_special_cases_delegate() {
    let data = independent(3000, 3, 15);
    let y = target((0..3000).map(|i| data.row(i)[0] + 0.5 * data.row(i)[1]).collect());
    let f = linear(&[1.0, 0.5, 0.0], 0.0);
    let g = identity_gaussian(3);
    let o = opts(16);
    let p = pfi(1, o, &data, &y, &f, &g).unwrap();
    let d = direct_importance(&MeasureSpec::di(set(&[1]), set(&[0, 2])).with_options(o), &data, &y, &f, &g).unwrap();
    assert_eq!(p.value, d.value);
    let c = conditional_fi(1, o, &data, &y, &f, &g).unwrap();
    let a = associative_importance(&MeasureSpec::ai(set(&[1]), set(&[0, 2])).with_options(o), &data, &y, &f, &g)
        .unwrap();
    assert_eq!(c.value, a.value);
    assert!(pfi(3, o, &data, &y, &f, &g).is_err());
}

#[test]
fn invalid_specs_are_rejected() {
    let data = independent(100, 2, 17);
    let y = target(vec![0.0; 100]);
    let f = linear(&[1.0, 0.0], 0.0);
    let g = identity_gaussian(2);
    let overlap = MeasureSpec::di(set(&[0]), set(&[0, 1]));
    assert!(matches!(
        direct_importance(&overlap, &data, &y, &f, &g),
        Err(dedact::Error::DisjointnessViolation(_))
    ));
    let wrong_kind = MeasureSpec::ai(set(&[0]), set(&[]));
    assert!(direct_importance(&wrong_kind, &data, &y, &f, &g).is_err());
    let out_of_range = MeasureSpec::di(set(&[5]), set(&[]));
    assert!(direct_importance(&out_of_range, &data, &y, &f, &g).is_err());
}

#[test]
fn marginalized_direct_importance_matches_marginalized_predictors() {
    let n = 4000;
    let mut r = rng(18);
    let x0 = normals(&mut r, n);
    let x1: Vec<f64> = normals(&mut r, n).iter().zip(&x0).map(|(e, a)| 0.6 * a + e).collect();
    let x2 = normals(&mut r, n);
    let y: Vec<f64> = (0..n).map(|i| x0[i] - x1[i] + 0.5 * x2[i]).collect();
    let data = data_from_columns(&[x0, x1, x2]);
    let t = target(y);
    let f = linear(&[1.0, -1.0, 0.5], 0.2);
    let g = dedact::fit_gaussian(&data).unwrap();
    let (k, b) = (set(&[1]), set(&[0]));
    let spec = MeasureSpec::di(k.clone(), b.clone()).with_mode(Mode::Marginalized).with_options(opts(19));
    let e = direct_importance(&spec, &data, &t, &f, &g).unwrap();
    let risk = |kept: &FeatureIndexSet, integration| {
        let m = marginalize(&f, kept, &g, integration, 8, 0).unwrap();
        let preds: Vec<f64> = (0..n).map(|i| m.closed_form(data.row(i)).unwrap()).collect();
        mean(&preds.iter().zip(t.values()).map(|(p, y)| (y - p) * (y - p)).collect::<Vec<_>>())
    };
    let expected = risk(&b, Integration::Independent) - risk(&b.union(&k), Integration::Independent);
    assert!((e.value - expected).abs() < 1e-9, "{} vs {expected}", e.value);
    let spec = MeasureSpec::ai(k.clone(), b.clone()).with_mode(Mode::Marginalized).with_options(opts(19));
    let a = associative_importance(&spec, &data, &t, &f, &g).unwrap();
    let expected = risk(&b, Integration::Conditional) - risk(&b.union(&k), Integration::Conditional);
    assert!((a.value - expected).abs() < 1e-9, "{} vs {expected}", a.value);
}

#[test]
fn marginalized_mode_with_nonlinear_model_uses_integration() {
    let n = 3000;
    let mut r = rng(20);
    let x0 = normals(&mut r, n);
    let x1 = normals(&mut r, n);
    let y: Vec<f64> = (0..n).map(|i| x0[i] * x1[i] + x0[i]).collect();
    let data = data_from_columns(&[x0, x1]);
    let t = target(y);
    let f = dedact::FnPredictor::new(2, FeatureIndexSet::full(2), |x: &[f64]| x[0] * x[1] + x[0]);
    let g = identity_gaussian(2);
    // f_{0} = x0 under independence; f_{} = 0.
    let spec = MeasureSpec::di(set(&[0]), set(&[])).with_mode(Mode::Marginalized).with_options(opts(21));
    let e = direct_importance(&spec, &data, &t, &f, &g).unwrap();
    let lin = linear(&[1.0, 0.0], 0.0);
    let r0 = empirical_risk(&linear(&[0.0, 0.0], 0.0), &data, &t, LossFunction::SquaredError).unwrap();
    let r1 = empirical_risk(&lin, &data, &t, LossFunction::SquaredError).unwrap();
    // Finite integration adds Var(f | kept)/n_integration to each risk.
    assert!((e.value - (r0 - r1)).abs() < 0.15, "{} vs {}", e.value, r0 - r1);
}

#[test]
fn float32_engine_agrees_with_float64() {
    let n = 2000;
    let data = independent(n, 2, 22);
    let y: Vec<f64> = (0..n).map(|i| data.row(i)[0] + data.row(i)[1]).collect();
    let data32 = dedact::DataMatrix::new(
        dedact::Matrix::from_vec(n, 2, data.values().as_slice().iter().map(|&v| v as f32).collect()).unwrap(),
        data.column_names().to_vec(),
    )
    .unwrap();
    let y32 = dedact::TargetVector::new(y.iter().map(|&v| v as f32).collect()).unwrap();
    let f32m = LinearPredictor::new(vec![1.0f32, 1.0], 0.0);
    let g32 = GaussianModel::new(vec![0.0f32; 2], dedact::Matrix::identity(2)).unwrap();
    let spec = MeasureSpec::di(set(&[0]), set(&[1])).with_options(opts(23));
    let e32 = direct_importance(&spec, &data32, &y32, &f32m, &g32).unwrap();
    let e64 = direct_importance(&spec, &data, &target(y), &linear(&[1.0, 1.0], 0.0), &identity_gaussian(2)).unwrap();
    assert!((e32.value as f64 - e64.value).abs() < 1e-3);
}

#[test]
fn estimates_are_seed_deterministic() {
    let data = independent(1000, 3, 24);
    let y = target((0..1000).map(|i| data.row(i)[0] + data.row(i)[1]).collect());
    let f = linear(&[1.0, 1.0, 0.0], 0.0);
    let g = identity_gaussian(3);
    let spec = MeasureSpec::di(set(&[0]), set(&[2]));
    let a = direct_importance(&spec.clone().with_seed(1), &data, &y, &f, &g).unwrap();
    let b = direct_importance(&spec.clone().with_seed(1), &data, &y, &f, &g).unwrap();
    let c = direct_importance(&spec.with_seed(2), &data, &y, &f, &g).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.value, c.value);
}

#[test]
fn sage_single_feature_attribution_is_its_value() {
    let n = 2000;
    let data = independent(n, 1, 25);
    let y = target((0..n).map(|i| 2.0 * data.row(i)[0]).collect());
    let f = linear(&[2.0], 0.0);
    let g = identity_gaussian(1);
    let e = Evaluator::new(&data, &y, &f, &g).unwrap();
    let players = FeatureIndexSet::full(1);
    for variant in [SageVariant::Marginal, SageVariant::Conditional] {
        let v1 = sage_value(&e, &players, variant, opts(26)).unwrap().estimate.value;
        let v0 = sage_value(&e, &set(&[]), variant, opts(26)).unwrap().estimate.value;
        assert_eq!(v0, 0.0);
        let a = sage_attribution(&e, 0, &players, variant, 5, opts(26)).unwrap();
        assert!((a.estimate.value - (v1 - v0)).abs() < 1e-12);
    }
}

#[test]
fn sage_of_additive_independent_features_is_order_free() {
    let n = 5000;
    let data = independent(n, 3, 27);
    let y = target((0..n).map(|i| data.row(i)[0] + 2.0 * data.row(i)[1]).collect());
    let f = linear(&[1.0, 2.0, 0.0], 0.0);
    let g = identity_gaussian(3);
    let e = Evaluator::new(&data, &y, &f, &g).unwrap();
    let players = FeatureIndexSet::full(3);
    for variant in [SageVariant::Marginal, SageVariant::Conditional] {
        let orders = draw_orders(&players, 6, 28);
        let attrs = sage_attributions(&e, &players, variant, &orders, opts(28)).unwrap();
        for j in 0..2 {
            let solo = sage_value(&e, &set(&[j]), variant, opts(28)).unwrap().estimate;
            // Brute force over every order: all surpluses agree with the solo value.
            for perm in [[0, 1, 2], [1, 0, 2], [2, 1, 0], [0, 2, 1], [1, 2, 0], [2, 0, 1]] {
                let pos = perm.iter().position(|&p| p == j).unwrap();
                let ctx: FeatureIndexSet = perm[..pos].iter().copied().collect();
                let s = dedact::importance::sage_surplus(&e, &set(&[j]), &ctx, variant, opts(28)).unwrap();
                assert!((s.estimate.value - solo.value).abs() <= 4.0 * solo.std_error.max(1e-9));
            }
            assert!((attrs[j].estimate.value - solo.value).abs() <= 4.0 * solo.std_error.max(1e-9));
        }
        // The dummy feature gets nothing.
        assert_eq!(attrs[2].estimate.value, 0.0);
    }
}

// Relabeling invariance: permute columns, Gaussian, predictor and sets together.
#[test]
fn measures_are_invariant_to_column_relabeling() {
    let n = 1500;
    let mut r = rng(29);
    let x0 = normals(&mut r, n);
    let x1: Vec<f64> = normals(&mut r, n).iter().zip(&x0).map(|(e, a)| 0.7 * a + e).collect();
    let x2: Vec<f64> = normals(&mut r, n).iter().zip(&x1).map(|(e, a)| 0.5 * a + e).collect();
    let x3 = normals(&mut r, n);
    let y: Vec<f64> = (0..n).map(|i| x0[i] + x1[i] - x2[i] + 0.3 * x3[i] + 0.1 * r.random::<f64>()).collect();
    let data = data_from_columns(&[x0, x1, x2, x3]);
    let t = target(y);
    let f = fit_ols(&data, &t, &FeatureIndexSet::full(4)).unwrap();
    let g = dedact::fit_gaussian(&data).unwrap();
    let perm = [2, 0, 3, 1];
    let mut inv = [0; 4];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    let pdata = data.permute_columns(&perm).unwrap();
    let pg = g.permute(&perm).unwrap();
    let pf = LinearPredictor::new(perm.iter().map(|&j| f.weights[j]).collect(), f.intercept);
    let map = |s: &FeatureIndexSet| -> FeatureIndexSet { s.iter().map(|j| inv[j]).collect() };
    let specs = [
        MeasureSpec::di(set(&[1]), set(&[0, 3])),
        MeasureSpec::ai(set(&[0]), set(&[2])),
        MeasureSpec::di_from(set(&[1]), set(&[2]), set(&[0])),
        MeasureSpec::ai_via(set(&[0]), set(&[3]), set(&[1, 2])),
    ];
    for mode in [Mode::OriginalF, Mode::Marginalized] {
        let e = Evaluator::new(&data, &t, &f, &g).unwrap();
        let pe = Evaluator::new(&pdata, &t, &pf, &pg).unwrap();
        for spec in &specs {
            let mut mapped = spec.clone();
            mapped.interest = map(&spec.interest);
            mapped.baseline = map(&spec.baseline);
            mapped.aux = map(&spec.aux);
            let a = e.evaluate(&spec.clone().with_mode(mode).with_options(opts(30))).unwrap();
            let b = pe.evaluate(&mapped.with_mode(mode).with_options(opts(30))).unwrap();
            assert!((a.value - b.value).abs() < 1e-12, "{:?} {mode:?}: {} vs {}", spec.measure, a.value, b.value);
        }
    }
}

fn scm_fixture(scm: &LinearScm, n: usize, seed: u64) -> (dedact::scm::ScmSample<f64>, GaussianModel<f64>) {
    (sample_scm(scm, n, seed).unwrap(), scm.observed_gaussian().unwrap())
}

#[test]
fn associative_importance_vanishes_on_d_separated_pairs() {
    for scm in [biomarker_scm(), census_scm()] {
        let (fit, g) = scm_fixture(&scm, 5000, 31);
        let (ev, _) = scm_fixture(&scm, 5000, 32);
        let f = fit_ols(&fit.data, &fit.target, &fit.feature_columns).unwrap();
        let e = Evaluator::new(&ev.data, &ev.target, &f, &g).unwrap();
        let mut checked = 0;
        for st in scm.independence_statements().unwrap().into_iter().filter(|s| s.holds) {
            let j = ev.data.index_set(&st.j).unwrap();
            let c = ev.data.index_set(&st.c).unwrap();
            let est = e.evaluate(&MeasureSpec::ai(j, c).with_options(opts(33).with_n_mc(5))).unwrap();
            assert!(within_se(est.value, est.std_error, 4.0), "{st:?}: {} ± {}", est.value, est.std_error);
            checked += 1;
        }
        assert!(checked > 0);
    }
}

#[test]
fn biomarker_leakage_flows_through_the_cycling_feature() {
    let scm = biomarker_scm();
    let (fit, g) = scm_fixture(&scm, 20_000, 34);
    let (ev, _) = scm_fixture(&scm, 20_000, 35);
    let f = fit_ols(&fit.data, &fit.target, &fit.feature_columns).unwrap();
    let e = Evaluator::new(&ev.data, &ev.target, &f, &g).unwrap();
    let (b, c, p) = (0, 1, 2);
    let o = opts(36);
    let ai = e.evaluate(&MeasureSpec::ai(set(&[p]), set(&[])).with_options(o)).unwrap();
    let via_c = e.evaluate(&MeasureSpec::ai_via(set(&[p]), set(&[]), set(&[c])).with_options(o)).unwrap();
    let via_b = e.evaluate(&MeasureSpec::ai_via(set(&[p]), set(&[]), set(&[b])).with_options(o)).unwrap();
    // Closed form with f = B + C: AI(P) = 6 - 4 = 2.
    assert!((ai.value - 2.0).abs() <= 4.0 * ai.std_error);
    assert!((via_c.value / ai.value - 1.0).abs() < 0.1);
    assert_zero(&via_b, 4.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    // Features outside the predictor's support have no direct importance.
    #[test]
    fn direct_importance_respects_support(seed in 0u64..1000, support_mask in 1u8..31, k_pick in 0usize..5, b_mask in 0u8..32) {
        let d = 5;
        let support: FeatureIndexSet = (0..d).filter(|j| support_mask & (1 << j) != 0).collect();
        let outside: Vec<usize> = (0..d).filter(|j| !support.contains(*j)).collect();
        prop_assume!(!outside.is_empty());
        let k = set(&[outside[k_pick % outside.len()]]);
        let b: FeatureIndexSet = (0..d).filter(|j| b_mask & (1 << j) != 0 && !k.contains(*j)).collect();
        let mut r = rng(seed);
        let weights: Vec<f64> = (0..d).map(|j| if support.contains(j) { r.random_range(0.5..2.0) } else { 0.0 }).collect();
        let data = independent(500, d, seed);
        let y = target((0..500).map(|i| data.row(i).iter().sum::<f64>()).collect());
        let f = LinearPredictor::new(weights, 0.0);
        let g = dedact::fit_gaussian(&data).unwrap();
        let e = direct_importance(&MeasureSpec::di(k, b).with_options(opts(seed)), &data, &y, &f, &g).unwrap();
        prop_assert!(within_se(e.value, e.std_error, 4.0));
    }

    // More reconstruction sources never lose direct importance (linear-Gaussian).
    #[test]
    fn di_from_is_monotone_in_sources(j_mask in 0u8..16, extra in 0usize..4, seed in 0u64..50) {
        let n = 3000;
        let mut r = rng(seed);
        let x0 = normals(&mut r, n);
        let cols: Vec<Vec<f64>> = std::iter::once(x0.clone())
            .chain((1..4).map(|m| normals(&mut r, n).iter().zip(&x0).map(|(e, a)| a * (m as f64) * 0.4 + e).collect()))
            .collect();
        let data = data_from_columns(&cols);
        let y = target((0..n).map(|i| cols[0][i] + 0.5 * cols[2][i]).collect());
        let f = linear(&[1.0, 0.0, 0.5, 0.0], 0.0);
        let g = dedact::fit_gaussian(&data).unwrap();
        let k = set(&[0]);
        let b = k.complement(4);
        let jset: FeatureIndexSet = (0..4).filter(|j| j_mask & (1 << j) != 0).collect();
        let jbig = jset.with(extra);
        let e = Evaluator::new(&data, &y, &f, &g).unwrap();
        let small = e.evaluate_rows(&MeasureSpec::di_from(k.clone(), b.clone(), jset).with_options(opts(seed))).unwrap();
        let big = e.evaluate_rows(&MeasureSpec::di_from(k, b, jbig).with_options(opts(seed))).unwrap();
        let diff: Vec<f64> = big.per_row.iter().zip(&small.per_row).map(|(a, b)| a - b).collect();
        let se = (diff.iter().map(|v| (v - mean(&diff)).powi(2)).sum::<f64>() / ((n - 1) * n) as f64).sqrt();
        prop_assert!(big.estimate.value >= small.estimate.value - 4.0 * se.max(1e-12));
    }
}

#[test]
fn sage_orders_are_seeded_permutations() {
    let players = FeatureIndexSet::full(4);
    let orders = draw_orders(&players, 10, 3);
    assert_eq!(orders, draw_orders(&players, 10, 3));
    assert_ne!(orders, draw_orders(&players, 10, 4));
    for o in &orders {
        let mut s = o.clone();
        s.sort();
        assert_eq!(s, vec![0, 1, 2, 3]);
    }
}
