use meanscope::operator_means::{decompose_psd, rel_frobenius, DEFAULT_CLAMP_REL};
use meanscope::posdef_lab::{gram_matrix, CatalogFunction};
use meanscope::verifier::{builtin_chain, sample_instance, ChainParams, EnsembleKind, SampleEnsemble, SamplingConfig};
use meanscope::{
    eval_mean, eval_mean_ext, eval_ratio, log_mean_integral, mean_transform, singular_values, uinorm, EvalPolicy, Family, MeanKind,
    MeanTransformInput, NormKind, RatioScale,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn pol() -> EvalPolicy {
    EvalPolicy::default()
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn positive() -> impl Strategy<Value = f64> {
    (-3.0f64..3.0).prop_map(|e| 10f64.powf(e))
}

fn symmetric_kind() -> impl Strategy<Value = MeanKind> {
    prop_oneof![
        (-1.0f64..=1.0).prop_map(|a| MeanKind::a(a).unwrap()),
        (-2.0f64..=2.0).prop_map(|a| MeanKind::g(a).unwrap()),
        (-1.0f64..=1.0).prop_map(|a| MeanKind::h(a).unwrap()),
        (-4.0f64..4.0).prop_map(|a| MeanKind::m(a).unwrap()),
        Just(MeanKind::L),
        Just(MeanKind::AM),
        Just(MeanKind::GM),
        Just(MeanKind::HM),
        Just(MeanKind::LM),
    ]
}

fn orthogonal(n: usize, seed: u64) -> DMatrix<f64> {
    let e = SampleEnsemble { kind: EnsembleKind::GaussianPsd, condition_target: 1.0, seed };
    let w = sample_instance(&e, (n, n)).x;
    w.qr().q()
}

fn instance(seed: u64, n: usize, m: usize, kind: EnsembleKind) -> MeanTransformInput {
    sample_instance(&SampleEnsemble { kind, condition_target: 1e6, seed }, (n, m))
}

fn ensemble() -> impl Strategy<Value = EnsembleKind> {
    prop::sample::select(EnsembleKind::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn means_are_symmetric_and_homogeneous(k in symmetric_kind(), x in positive(), y in positive(), c in (-2.0f64..2.0).prop_map(|e| 10f64.powf(e))) {
        let p = pol();
        let v = eval_mean(k, x, y, &p).unwrap();
        prop_assert!(v.is_finite() && v > 0.0);
        prop_assert!(rel(v, eval_mean(k, y, x, &p).unwrap()) <= 1e-12);
        prop_assert!(rel(c * v, eval_mean(k, c * x, c * y, &p).unwrap()) <= 1e-12);
        prop_assert!(v >= x.min(y) * (1.0 - 1e-12) && v <= x.max(y) * (1.0 + 1e-12));
    }

    #[test]
    fn means_are_monotone(k in symmetric_kind(), y in positive(), x in positive(), step in 1.0f64..3.0) {
        let p = pol();
        prop_assert!(eval_mean(k, x * step, y, &p).unwrap() >= eval_mean(k, x, y, &p).unwrap() * (1.0 - 1e-12));
    }

    #[test]
    fn logarithmic_mean_sandwich(m in 1u32..8, x in positive(), y in positive()) {
        prop_assume!(rel(x, y) > 1e-6);
        let p = pol();
        let a = 1.0 / m as f64;
        let lm = eval_mean(MeanKind::LM, x, y, &p).unwrap();
        let pv = eval_mean(MeanKind::p(a).unwrap(), x, y, &p).unwrap();
        let qv = eval_mean(MeanKind::q(a).unwrap(), x, y, &p).unwrap();
        if x > y {
            prop_assert!(qv < lm && lm < pv);
        } else {
            prop_assert!(pv < lm && lm < qv);
        }
    }

    #[test]
    fn ratios_are_even_and_normalized(a in 0.0f64..1.0, t in -30.0f64..30.0) {
        let p = pol();
        let pairs = [
            (MeanKind::h(a).unwrap(), MeanKind::g(a).unwrap()),
            (MeanKind::L, MeanKind::a(a).unwrap()),
            (MeanKind::new(Family::M, 0.3).unwrap(), MeanKind::AM),
        ];
        for (n, d) in pairs {
            for scale in [RatioScale::Exp, RatioScale::Exp2] {
                let r = eval_ratio(n, d, t, scale, &p).unwrap();
                prop_assert!(rel(r, eval_ratio(n, d, -t, scale, &p).unwrap()) <= 1e-12);
                prop_assert_eq!(eval_ratio(n, d, 0.0, scale, &p).unwrap(), 1.0);
            }
        }
    }

    #[test]
    fn norm_orderings(seed in any::<u64>(), n in 1usize..7, m in 1usize..7, p in 1.0f64..6.0) {
        let x = instance(seed, n, m, EnsembleKind::GaussianPsd).x;
        let sv = singular_values(&x).unwrap();
        let op = uinorm(NormKind::Operator, &x).unwrap();
        let tr = uinorm(NormKind::Trace, &x).unwrap();
        let sp = uinorm(NormKind::Schatten(p), &x).unwrap();
        let sq = uinorm(NormKind::Schatten(p + 1.0), &x).unwrap();
        prop_assert!(op <= sq * (1.0 + 1e-12) && sq <= sp * (1.0 + 1e-12) && sp <= tr * (1.0 + 1e-12));
        let mut prev = 0.0;
        for k in 1..=sv.len() {
            let kf = NormKind::KyFan(k).eval_singular_values(&sv).unwrap();
            prop_assert!(kf >= prev);
            prev = kf;
        }
        prop_assert!(rel(prev, tr) <= 1e-12);
        prop_assert!(rel(uinorm(NormKind::Frobenius, &x).unwrap(), x.norm()) <= 1e-12);
    }

    #[test]
    fn norms_are_unitarily_invariant(seed in any::<u64>(), n in 1usize..6, m in 1usize..6) {
        let x = instance(seed, n, m, EnsembleKind::GaussianPsd).x;
        let (u, v) = (orthogonal(n, seed ^ 1), orthogonal(m, seed ^ 2));
        let y = &u * &x * v.transpose();
        for k in NormKind::battery(n.min(m)) {
            prop_assert!(rel(uinorm(k, &x).unwrap(), uinorm(k, &y).unwrap()) <= 1e-12);
        }
    }

    #[test]
    fn decomposition_invariants(seed in any::<u64>(), n in 1usize..9, kind in ensemble()) {
        let s = instance(seed, n, 1, kind).s;
        let d = decompose_psd(&s, DEFAULT_CLAMP_REL).unwrap();
        let u = d.eigenvectors();
        prop_assert!((d.reconstruct() - &s).norm() <= 1e-10 * (1.0 + s.norm()));
        prop_assert!((u.transpose() * u - DMatrix::identity(n, n)).norm() <= 1e-10 * n as f64);
        prop_assert!(d.eigenvalues().iter().all(|&v| v >= 0.0));
        prop_assert!(d.eigenvalues().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn transform_is_unitarily_covariant(seed in any::<u64>(), n in 1usize..6, m in 1usize..6, k in symmetric_kind(), kind in ensemble()) {
        let input = instance(seed, n, m, kind);
        let (q, r) = (orthogonal(n, seed ^ 3), orthogonal(m, seed ^ 4));
        let rotated = MeanTransformInput::new(
            &q * &input.s * q.transpose(),
            &r * &input.t * r.transpose(),
            &q * &input.x * r.transpose(),
        ).unwrap();
        let y = mean_transform(k, &input).unwrap();
        let yr = mean_transform(k, &rotated).unwrap();
        prop_assert!(rel_frobenius(&yr, &(&q * y * r.transpose())) <= 1e-10);
    }

    #[test]
    fn transform_fixed_point(seed in any::<u64>(), n in 1usize..7, k in symmetric_kind()) {
        let s = instance(seed, n, n, EnsembleKind::GaussianPsd).s;
        let input = MeanTransformInput::new(s.clone(), s.clone(), DMatrix::identity(n, n)).unwrap();
        prop_assert!(rel_frobenius(&mean_transform(k, &input).unwrap(), &s) <= 1e-10);
    }

    #[test]
    fn diagonal_reduction(d1 in prop::collection::vec(positive(), 1..5), d2 in prop::collection::vec(positive(), 1..5), k in symmetric_kind()) {
        let (n, m) = (d1.len(), d2.len());
        let x = DMatrix::from_fn(n, m, |i, j| 1.0 + i as f64 - 0.5 * j as f64);
        let input = MeanTransformInput::new(
            DMatrix::from_diagonal(&d1.clone().into()),
            DMatrix::from_diagonal(&d2.clone().into()),
            x.clone(),
        ).unwrap();
        let y = mean_transform(k, &input).unwrap();
        for i in 0..n {
            for j in 0..m {
                let e = eval_mean(k, d1[i], d2[j], &pol()).unwrap() * x[(i, j)];
                prop_assert!((y[(i, j)] - e).abs() <= 1e-12 * e.abs().max(1e-300));
            }
        }
    }

    #[test]
    fn zero_eigenvalue_matches_support_restriction(seed in any::<u64>(), n in 2usize..7, m in 1usize..6) {
        let input = instance(seed, n, m, EnsembleKind::RankDeficientPsd);
        let d = decompose_psd(&input.s, DEFAULT_CLAMP_REL).unwrap();
        let support = d.support();
        let p = support.eigenvectors().clone();
        let restricted = MeanTransformInput::new(
            DMatrix::from_diagonal(&support.eigenvalues().to_vec().into()),
            input.t.clone(),
            p.transpose() * &input.x,
        ).unwrap();
        let full = mean_transform(MeanKind::LM, &input).unwrap();
        let lifted = &p * mean_transform(MeanKind::LM, &restricted).unwrap();
        prop_assert!(rel_frobenius(&full, &lifted) <= 1e-10);
    }

    #[test]
    fn quadrature_converges(seed in any::<u64>(), n in 1usize..6, m in 1usize..6) {
        // Spectra inside [1e-2, 1e2].
        let raw = instance(seed, n, m, EnsembleKind::IllConditionedPsd);
        let squash = |a: &DMatrix<f64>| {
            let d = decompose_psd(a, DEFAULT_CLAMP_REL).unwrap();
            let top = d.eigenvalues()[0];
            d.map_spectrum(|v| 1e2 * (v / top).powf(4.0 / 6.0).max(1e-4))
        };
        let input = MeanTransformInput::new(squash(&raw.s), squash(&raw.t), raw.x).unwrap();
        let a = log_mean_integral(&input, 32).unwrap();
        let b = log_mean_integral(&input, 64).unwrap();
        prop_assert!(rel_frobenius(&a, &b) <= 1e-9);
    }

    #[test]
    fn gram_matrices_are_symmetric(pts in prop::collection::vec(-50.0f64..50.0, 1..20), a in 0.1f64..1.0) {
        let f = CatalogFunction::LaRatio { alpha: a };
        let g = gram_matrix(|t| f.eval(t), &pts).unwrap();
        prop_assert_eq!(g.transpose(), g);
    }

    #[test]
    fn sampling_is_deterministic(seed in any::<u64>(), n in 1usize..6, m in 1usize..6, kind in ensemble()) {
        let a = instance(seed, n, m, kind);
        prop_assert_eq!(&a, &instance(seed, n, m, kind));
        prop_assert!(decompose_psd(&a.s, DEFAULT_CLAMP_REL).is_ok());
        prop_assert!(decompose_psd(&a.t, DEFAULT_CLAMP_REL).is_ok());
    }
}

fn term_norms(id: &str, params: ChainParams, input: &MeanTransformInput, norm: NormKind) -> Vec<f64> {
    let spec = builtin_chain(id, &params, SamplingConfig::default()).unwrap();
    let d = input.decompose().unwrap();
    spec.terms.iter().map(|t| uinorm(norm, &t.eval(&d, &pol()).unwrap()).unwrap()).collect()
}

#[test]
fn outer_terms_agree_across_representations() {
    let cfg = SamplingConfig::default();
    for i in 0..30 {
        let input = cfg.plan(i).instance();
        for (m1, m2) in [(1, 2), (2, 3), (3, 4)] {
            let params = ChainParams { m1: Some(m1), m2: Some(m2), ..Default::default() };
            for norm in [NormKind::Trace, NormKind::Operator, NormKind::Schatten(3.0)] {
                let sums = term_norms("eq-3-final", params, &input, norm);
                // M_{m/(m−1)} at m₂ is M_{(m+1)/m} at m = m₂ − 1.
                let shifted = ChainParams { m1: Some(m1), m2: Some(m2 - 1), ..Default::default() };
                let spectral = term_norms("thm-2.5", shifted, &input, norm);
                assert!(rel(sums[0], spectral[0]) <= 1e-10, "sample {i} lower");
                assert!(rel(sums[4], spectral[4]) <= 1e-10, "sample {i} upper");
            }
        }
    }
}

#[test]
fn chain_spread_shrinks_with_m() {
    let cfg = SamplingConfig::default();
    for i in 0..30 {
        let input = cfg.plan(i).instance();
        let mut prev = f64::INFINITY;
        for m in 1..=5 {
            let v = term_norms("thm-2.5", ChainParams { m: Some(m), ..Default::default() }, &input, NormKind::Trace);
            let spread = v[4] - v[0];
            assert!(spread <= prev * (1.0 + 1e-9), "sample {i}, m = {m}: {spread} > {prev}");
            prev = spread;
        }
    }
}

#[test]
fn scalar_chain_margins_are_mean_differences() {
    let p = pol();
    let cfg = SamplingConfig { dims: vec![(1, 1)], ..Default::default() };
    for i in 0..50 {
        let input = cfg.plan(i).instance();
        let (s, t, x) = (input.s[(0, 0)], input.t[(0, 0)], input.x[(0, 0)].abs());
        let params = ChainParams { m1: Some(2), m2: Some(3), ..Default::default() };
        let spec = builtin_chain("thm-2.5", &params, cfg.clone()).unwrap();
        let v = term_norms("thm-2.5", params, &input, NormKind::Operator);
        for k in 0..4 {
            let ml = eval_mean_ext(spec.terms[k].mean_kind().unwrap(), s, t, &p).unwrap() * x;
            let mr = eval_mean_ext(spec.terms[k + 1].mean_kind().unwrap(), s, t, &p).unwrap() * x;
            assert!(((v[k + 1] - v[k]) - (mr - ml)).abs() <= 1e-12 * mr.max(ml), "sample {i}, pair {k}");
        }
    }
}
