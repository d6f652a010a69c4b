use proptest::prelude::*;
use tacgrasp::experiments::{spearman, split_grasps, GraspId};
use tacgrasp::hand_sim::quantized_mode;
use tacgrasp::pose_estimation::{
    camera_to_robot, robot_to_camera, select_grasp_rotation, Affine2, CameraCalibration, ObjectPose,
};
use tacgrasp::seed::derive_seed;
use tacgrasp::tactile_image::{preprocess_step, ssim, GrayFrame, SsimParams};

fn frame(w: usize, h: usize) -> impl Strategy<Value = GrayFrame> {
    prop::collection::vec(any::<u8>(), w * h).prop_map(move |d| GrayFrame::new(w, h, d).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ssim_identity_symmetry_range(a in frame(24, 18), b in frame(24, 18)) {
        let p = SsimParams::default();
        prop_assert_eq!(ssim(&a, &a, &p).unwrap(), 1.0);
        let (ab, ba) = (ssim(&a, &b, &p).unwrap(), ssim(&b, &a, &p).unwrap());
        prop_assert_eq!(ab, ba);
        prop_assert!((-1.0..=1.0).contains(&ab));
    }

    #[test]
    fn preprocess_shape_is_fixed(w in 160usize..400, h in 220usize..300, n in 1usize..4, fill in any::<u8>()) {
        let frames: Vec<GrayFrame> = (0..n).map(|k| GrayFrame::filled(w, h, fill.wrapping_add(k as u8))).collect();
        let out = preprocess_step(&frames.iter().collect::<Vec<_>>()).unwrap();
        prop_assert_eq!(out.dims(), (40 * n, 60));
    }

    #[test]
    fn mode_is_a_quantised_member(v in prop::collection::vec(0.0f64..1.0, 1..40)) {
        let m = quantized_mode(&v).unwrap();
        prop_assert!(v.iter().any(|x| ((x * 100.0).round() / 100.0 - m).abs() < 1e-12));
    }

    #[test]
    fn grasp_rotation_is_monotone_and_bounded(a in 1.0f64..10.0, b in 1.0f64..10.0) {
        let (ra, rb) = (select_grasp_rotation(a).unwrap(), select_grasp_rotation(b).unwrap());
        prop_assert!((0.0..=45.0).contains(&ra));
        if a <= b {
            prop_assert!(ra >= rb);
        }
    }

    #[test]
    fn split_is_a_disjoint_cover(sizes in prop::collection::vec(2usize..30, 1..6), seed in any::<u64>()) {
        let items: Vec<(GraspId, usize)> = sizes
            .iter()
            .enumerate()
            .flat_map(|(s, &n)| (0..n).map(move |g| (GraspId { object_label: s, grasp_idx: g }, s)))
            .collect();
        let split = split_grasps(&items, seed).unwrap();
        prop_assert!(split.is_disjoint());
        prop_assert_eq!(split.train.len() + split.val.len(), items.len());
        for s in 0..sizes.len() {
            prop_assert!(split.val.iter().any(|g| g.object_label == s));
            prop_assert!(split.train.iter().any(|g| g.object_label == s));
        }
        prop_assert_eq!(split_grasps(&items, seed).unwrap(), split);
    }

    #[test]
    fn spearman_is_bounded_and_rank_invariant(v in prop::collection::vec(-100.0f64..100.0, 3..20)) {
        let x: Vec<f64> = (0..v.len()).map(|i| i as f64).collect();
        if let Some(r) = spearman(&x, &v) {
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&r));
            let cubed: Vec<f64> = v.iter().map(|y| y.powi(3) + 5.0).collect();
            prop_assert!((spearman(&x, &cubed).unwrap() - r).abs() < 1e-12);
        }
        let sorted = { let mut s = v.clone(); s.sort_by(f64::total_cmp); s };
        if sorted.windows(2).all(|w| w[0] < w[1]) {
            prop_assert!((spearman(&x, &sorted).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn calibration_round_trips(
        p in prop::array::uniform6(-2.0f64..2.0),
        cx in 0.0f64..640.0, cy in 0.0f64..480.0, z in 300.0f64..900.0,
        theta in -1.5f64..1.5, scale in 0.5f64..2.0,
    ) {
        let planar = Affine2::from_params([1.0 + p[0].abs(), p[1] * 0.2, p[2] * 50.0, p[3] * 0.2, 1.0 + p[4].abs(), p[5] * 50.0]);
        let calib = CameraCalibration { planar, depth_scale: scale, depth_offset: 10.0 };
        let pose = ObjectPose {
            centroid: (cx, cy), z, theta, major_axis: 40.0, minor_axis: 20.0, aspect_ratio: 2.0, degenerate: false,
        };
        let target = camera_to_robot(&pose, &calib).unwrap();
        let ((bx, by), bz, bt) = robot_to_camera(&target, &calib).unwrap();
        prop_assert!((bx - cx).abs() < 1e-6 && (by - cy).abs() < 1e-6 && (bz - z).abs() < 1e-6);
        let d = (bt - theta).rem_euclid(std::f64::consts::PI);
        prop_assert!(d.min(std::f64::consts::PI - d) < 1e-6);
    }

    #[test]
    fn derived_seeds_depend_on_every_tag(base in any::<u64>(), a in any::<u64>(), b in any::<u64>()) {
        prop_assert_eq!(derive_seed(base, &[a, b]), derive_seed(base, &[a, b]));
        prop_assume!(a != b);
        prop_assert_ne!(derive_seed(base, &[a, b]), derive_seed(base, &[b, a]));
    }
}
