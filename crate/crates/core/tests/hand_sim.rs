use tacgrasp::hand_sim::{
    collect_grasp_data, grasp_success_detector, GraspConfig, DETECTOR_FRAMES, DETECTOR_THRESHOLD,
};
use tacgrasp::seed::derive_seed;
use tacgrasp::sensor_sim::{
    render_depth_sequence, ContactPrimitive, ContactShape, DeformationModel, PinLayout, RenderParams, Renderer,
};
use tacgrasp::tactile_image::GrayFrame;

#[test]
fn detector_truth_table() {
    let renderer = Renderer::new(&PinLayout::default(), &RenderParams::default()).unwrap();
    let model = DeformationModel::default();
    let contact = ContactPrimitive::new(ContactShape::Sphere { radius: 20.0 }, 0.0);
    for case in 0..8u64 {
        let mut refs = Vec::new();
        let mut held = Vec::new();
        for k in 0..3u64 {
            let depth = if case >> k & 1 == 1 { 3.0 } else { 0.0 };
            let rest = render_depth_sequence(&renderer, &model, &contact, &[0.0], false, derive_seed(case, &[k, 0]));
            refs.push(rest.unwrap().remove(0));
            let frames =
                render_depth_sequence(&renderer, &model, &contact, &[depth; DETECTOR_FRAMES], false, derive_seed(case, &[k, 1]));
            held.push(frames.unwrap());
        }
        let refs: [GrayFrame; 3] = refs.try_into().unwrap();
        let held: [Vec<GrayFrame>; 3] = held.try_into().unwrap();
        let r = grasp_success_detector(&refs, &held, DETECTOR_THRESHOLD).unwrap();
        assert_eq!(r.success, case.count_ones() >= 2, "case {case:03b}: {:?}", r.scores);
        for k in 0..3 {
            assert_eq!(r.scores[k] < DETECTOR_THRESHOLD, case >> k & 1 == 1, "case {case:03b} sensor {k}");
        }
    }
}

#[test]
fn collected_labels_come_from_the_detector() {
    let cfg = GraspConfig::perturbed();
    let mut captures = Vec::new();
    let records = collect_grasp_data("Orange", 6, &cfg, 3, &mut |rec, cap| {
        captures.push((rec.clone(), cap.held.clone(), cap.refs.clone()));
        Ok(())
    })
    .unwrap();
    assert_eq!(records.len(), 6);
    for (rec, held, refs) in &captures {
        let r = grasp_success_detector(refs, held, cfg.detector_threshold).unwrap();
        assert_eq!(r.success, rec.success);
        assert_eq!(r.scores, rec.detector_ssim);
        assert_eq!(rec.videos.len(), 3);
        assert!(rec.perturbation.is_some());
    }
    let again = collect_grasp_data("Orange", 6, &cfg, 3, &mut |_, _| Ok(())).unwrap();
    assert_eq!(again, records);
}

#[test]
fn unknown_object_is_rejected() {
    assert!(collect_grasp_data("Teapot", 1, &GraspConfig::default(), 0, &mut |_, _| Ok(())).is_err());
}
