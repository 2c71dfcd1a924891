use std::sync::OnceLock;

use proptest::prelude::*;

use needd_core::estimators::{
    make_blocks, make_threshold_plan, need_d, svd_adaptive, AdaptiveSvdConfig, LogBase,
    DEFAULT_KAPPA,
};
use needd_core::filter::{make_profile, partition_sum, Filter, ProfileKind};
use needd_core::frame::{build_frame, BasisFamily, NeedletFrame};
use needd_core::jacobi::{gauss_jacobi_rule, JacobiParams};
use needd_core::models::{wicksell_model, SequenceObservation, SvdModel};
use needd_core::simlab::{weighted_loss, LossKind};

fn frame() -> &'static NeedletFrame {
    static FRAME: OnceLock<NeedletFrame> = OnceLock::new();
    FRAME.get_or_init(|| {
        build_frame(
            BasisFamily::jacobi(0.0, 1.0).unwrap(),
            Filter::default_polynomial(),
            5,
        )
        .unwrap()
    })
}

fn fourier_frame() -> &'static NeedletFrame {
    static FRAME: OnceLock<NeedletFrame> = OnceLock::new();
    FRAME.get_or_init(|| {
        build_frame(
            BasisFamily::FourierPeriodic,
            Filter::default_polynomial(),
            5,
        )
        .unwrap()
    })
}

fn model() -> &'static SvdModel {
    static MODEL: OnceLock<SvdModel> = OnceLock::new();
    MODEL.get_or_init(|| wicksell_model(64).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gauss_weights_are_a_probability(alpha in 0.0f64..3.0, beta in 0.0f64..3.0, n in 1usize..48) {
        let r = gauss_jacobi_rule(&JacobiParams::new(alpha, beta).unwrap(), n).unwrap();
        prop_assert_eq!(r.order(), n);
        prop_assert!(r.weights.iter().all(|w| *w > 0.0));
        prop_assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-13);
        let mut x = r.nodes.clone();
        x.sort_by(f64::total_cmp);
        prop_assert!(x.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(x[0] > -1.0 && x[n - 1] < 1.0);
    }

    #[test]
    fn dyadic_partition_of_unity(xi in 1.0f64..1.0e4, m in 1u32..6) {
        for kind in [ProfileKind::PolynomialShape, ProfileKind::SmoothExponential] {
            let f = Filter::new(make_profile(kind, m).unwrap());
            prop_assert!((partition_sum(&f, xi).unwrap() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn filter_support_and_range(xi in 0.0f64..3.0) {
        let a = Filter::default_polynomial().a(xi).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
        if !(0.5..2.0).contains(&xi) {
            prop_assert_eq!(a, 0.0);
        }
    }

    #[test]
    fn parseval_and_reconstruction(v in prop::collection::vec(-1.0f64..1.0, 33)) {
        for fr in [frame(), fourier_frame()] {
            let mut f = vec![0.0; fr.coeff_len()];
            let k = fr.budget().min(v.len());
            f[..k].copy_from_slice(&v[..k]);
            let norm2: f64 = f.iter().map(|x| x * x).sum();
            let beta = fr.analyze(&f).unwrap();
            prop_assert!((beta.sum_squares() - norm2).abs() <= 1e-10 * norm2.max(1.0));
            let back = fr.synthesize(&beta).unwrap();
            for (a, b) in back.iter().zip(&f) {
                prop_assert!((a - b).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn noise_free_needd_is_exact(v in prop::collection::vec(-1.0f64..1.0, 33)) {
        let m = model();
        let fr = frame();
        let mut f = vec![0.0; m.len()];
        f[..fr.budget()].copy_from_slice(&v[..fr.budget()]);
        let y: Vec<f64> = f.iter().zip(&m.singular_values).map(|(a, b)| a * b).collect();
        let obs = SequenceObservation::new(y, 0.0).unwrap();
        let plan = make_threshold_plan(fr, m, 0.0, DEFAULT_KAPPA).unwrap();
        let est = need_d(fr, m, &obs, &plan).unwrap();
        for (a, b) in est.coeffs.iter().zip(&f) {
            prop_assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn adaptive_weights_stay_in_unit_interval(
        y in prop::collection::vec(-1.0f64..1.0, 65),
        log_eps in -6.0f64..-1.0,
    ) {
        let m = model();
        let eps = 10f64.powf(log_eps);
        let obs = SequenceObservation::new(y, eps).unwrap();
        let blocks = make_blocks(eps, m, 1024, LogBase::Natural).unwrap();
        let est = svd_adaptive(m, &obs, eps, &blocks, &AdaptiveSvdConfig::default()).unwrap();
        prop_assert!(est.weights.iter().all(|w| (0.0..=1.0).contains(w)));
        for (i, w) in est.weights.iter().enumerate() {
            if i >= blocks.n0 {
                prop_assert_eq!(*w, 0.0);
            }
        }
    }

    #[test]
    fn losses_are_nonnegative_and_homogeneous(
        d in prop::collection::vec(-5.0f64..5.0, 64),
        c in 0.1f64..10.0,
    ) {
        let zero = vec![0.0; d.len()];
        let scaled: Vec<f64> = d.iter().map(|x| c * x).collect();
        for kind in [LossKind::L1, LossKind::Rmse] {
            let a = weighted_loss(&zero, &d, kind).unwrap();
            let b = weighted_loss(&zero, &scaled, kind).unwrap();
            prop_assert!(a >= 0.0);
            prop_assert!((b - c * a).abs() <= 1e-12 * b.max(1.0));
        }
    }
}
