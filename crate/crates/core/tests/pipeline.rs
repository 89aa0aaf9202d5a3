//! End-to-end checks: rendered scenes flow through segmentation, tracking,
//! photometry and ingest, and the results line up with the scene's ground
//! truth.

use dropscope_core::*;

fn model() -> SedimentationModel {
    SedimentationModel::default()
}

/// Seven blobs at known sub-pixel positions come back from thresholding
/// and segmentation with centroids on top of the truth.
#[test]
fn segmentation_recovers_known_centroids() {
    let y0s = [10.3, 20.7, 30.1, 40.5, 50.9, 60.2, 70.6];
    let droplets: Vec<DropletSpec> = y0s
        .iter()
        .enumerate()
        .map(|(i, &y0)| DropletSpec {
            radius_um: 60.0,
            x0_px: (i + 1) as f64 * 200.0 / 8.0,
            y0_px: y0,
            spawn_frame: 0,
            vx_px_per_frame: 0.0,
            transmission: 1.0,
        })
        .collect();
    let spec = SceneSpec {
        trial_id: "centroids".into(),
        width_px: 200,
        height_px: 100,
        frame_count: 1,
        fps: 240.0,
        frame_height_um: 10_000.0,
        background_level: 0,
        noise_amplitude: 0,
        illumination: None,
        mask_label: None,
        loudness_db: None,
        seed: 5,
        droplets,
    };
    let (stack, truth) = render_scene(&spec, &model()).unwrap();
    let frame = &stack.frames[0];

    let thresholded = otsu_threshold(frame);
    assert!(!thresholded.degenerate);
    let dets = segment(frame, &thresholded.mask, 0, &SegmentConfig::default()).unwrap();
    assert_eq!(dets.len(), 7);

    // Detections are sorted by row, same as the ascending spawn rows.
    for (det, rec) in dets.iter().zip(&truth.droplets) {
        let c = rec.centroids[0];
        assert!(
            (det.x_px - c.x_px).abs() < 0.5,
            "x {} vs {}",
            det.x_px,
            c.x_px
        );
        assert!(
            (det.y_px - c.y_px).abs() < 0.5,
            "y {} vs {}",
            det.y_px,
            c.y_px
        );
        assert!(det.area_px >= 3);
    }
}

/// Full closed loop on a clean scene: every droplet is tracked to the
/// bottom and its radius recovered from the fall alone.
#[test]
fn tracked_falls_recover_radii() {
    let params = FallingSceneParams {
        trial_id: "loop".into(),
        width_px: 160,
        height_px: 120,
        frame_count: 100,
        droplet_count: 5,
        radius_range_um: (40.0, 90.0),
        noise_amplitude: 0,
        spawn_frame: 3,
        seed: 11,
        ..FallingSceneParams::default()
    };
    let spec = falling_scene(&params, &model()).unwrap();
    let (stack, truth) = render_scene(&spec, &model()).unwrap();
    let geometry = stack.geometry();

    let mut detections = Vec::new();
    for (i, frame) in stack.frames.iter().enumerate() {
        let mask = fixed_threshold(frame, 5);
        detections.extend(segment(frame, &mask, i, &SegmentConfig::default()).unwrap());
    }
    let tracks = link_detections(&detections, &LinkConfig::default());
    assert_eq!(tracks.len(), 5);

    let measure_config = MeasureConfig {
        bottom_margin_px: 8.0,
        side_margin_px: 3.0,
    };
    for track in &tracks {
        let m = measure_track(track, &geometry, &model(), &measure_config).unwrap();
        assert_eq!(m.status, TrackStatus::Complete);
        // Match the track to its droplet by lane.
        let lane_x = track.first().x_px;
        let rec = truth
            .droplets
            .iter()
            .min_by(|a, b| {
                let da = (spec.droplets[a.droplet_index].x0_px - lane_x).abs();
                let db = (spec.droplets[b.droplet_index].x0_px - lane_x).abs();
                da.partial_cmp(&db).unwrap()
            })
            .unwrap();
        let estimated = m.radius_um_est.expect("complete falls carry an estimate");
        let relative = (estimated - rec.radius_um).abs() / rec.radius_um;
        assert!(
            relative < 0.02,
            "droplet {}: estimated {estimated}, true {}",
            rec.droplet_index,
            rec.radius_um
        );
    }
}

/// Flat-field correction learned from the scene's own background frames
/// removes a vertical illumination gradient exactly, and evens out blob
/// brightness across the field.
#[test]
fn flat_field_evens_out_gradient() {
    let h = 40u32;
    let gains: Vec<f64> = (0..h).map(|y| 0.6 + 0.4 * y as f64 / (h - 1) as f64).collect();
    let spec = SceneSpec {
        trial_id: "gradient".into(),
        width_px: 60,
        height_px: h,
        frame_count: 12,
        fps: 240.0,
        frame_height_um: 4000.0,
        background_level: 100,
        noise_amplitude: 0,
        illumination: Some(gains),
        mask_label: None,
        loudness_db: None,
        seed: 3,
        droplets: vec![
            DropletSpec {
                radius_um: 60.0,
                x0_px: 15.0,
                y0_px: 5.0,
                spawn_frame: 10,
                vx_px_per_frame: 0.0,
                transmission: 1.0,
            },
            DropletSpec {
                radius_um: 60.0,
                x0_px: 45.0,
                y0_px: 30.0,
                spawn_frame: 10,
                vx_px_per_frame: 0.0,
                transmission: 1.0,
            },
        ],
    };
    let (stack, _) = render_scene(&spec, &model()).unwrap();

    let profile = estimate_illumination(&stack.frames, 5).unwrap();
    // Correcting a pure background frame homogenizes it exactly.
    let corrected_bg = flat_field(&stack.frames[0], &profile).unwrap();
    assert!(corrected_bg.data().iter().all(|&v| v == 100));

    // Frame 10 holds one blob in the dim top and one in the bright
    // bottom. Before correction their excess over the local background
    // differs widely; after correction they nearly agree.
    let raw = &stack.frames[10];
    let corrected = flat_field(raw, &profile).unwrap();
    let peak_excess = |f: &Frame, y_range: std::ops::Range<u32>, bg: &Frame| {
        let mut best = 0i32;
        for y in y_range {
            for x in 0..f.width() {
                best = best.max(f.get(x, y) as i32 - bg.get(x, y) as i32);
            }
        }
        best as f64
    };
    let raw_top = peak_excess(raw, 0..20, &stack.frames[0]);
    let raw_bottom = peak_excess(raw, 20..40, &stack.frames[0]);
    let cor_top = peak_excess(&corrected, 0..20, &corrected_bg);
    let cor_bottom = peak_excess(&corrected, 20..40, &corrected_bg);
    assert!(
        (raw_top - raw_bottom).abs() / raw_bottom > 0.2,
        "gradient should skew raw peaks: top {raw_top}, bottom {raw_bottom}"
    );
    assert!(
        (cor_top - cor_bottom).abs() / cor_bottom < 0.05,
        "correction should even peaks out: top {cor_top}, bottom {cor_bottom}"
    );
}

/// A burst of droplets makes a brightness pulse whose peak frame and
/// dissipation time follow the droplets' settling times.
#[test]
fn brightness_pulse_follows_droplet_lifetimes() {
    let droplets: Vec<DropletSpec> = (0..5)
        .map(|i| DropletSpec {
            radius_um: 50.0,
            x0_px: 10.0 + 15.0 * i as f64,
            y0_px: 2.0,
            spawn_frame: 10,
            vx_px_per_frame: 0.0,
            transmission: 1.0,
        })
        .collect();
    let spec = SceneSpec {
        trial_id: "pulse".into(),
        width_px: 80,
        height_px: 60,
        frame_count: 30,
        fps: 240.0,
        frame_height_um: 6000.0,
        background_level: 0,
        noise_amplitude: 0,
        illumination: None,
        mask_label: None,
        loudness_db: None,
        seed: 8,
        droplets,
    };
    let (stack, truth) = render_scene(&spec, &model()).unwrap();
    let exit = truth.droplets[0].exit_frame;
    assert!(truth.droplets.iter().all(|d| d.exit_frame == exit));
    assert_eq!(truth.droplets[0].exit, ExitKind::Bottom);

    let series = brightness_series(&stack, Region::Full);
    assert_eq!(series.values[9], 0.0);
    assert!(series.values[10] > 0.0);
    assert_eq!(series.values[exit], 0.0);

    let metrics = series_metrics(&series, photometry::DEFAULT_DECAY_FRACTION);
    assert_eq!(metrics.baseline, 0.0);
    assert_eq!(metrics.peak_frame, 10);
    let expected = (exit - 10) as f64 / 240.0;
    assert!((metrics.dissipation_s.unwrap() - expected).abs() < 1e-12);
    assert!(metrics.flags.is_empty());
}

/// A rendered stack survives the disk round trip byte for byte.
#[test]
fn synthetic_stack_round_trips_through_disk() {
    let params = FallingSceneParams {
        trial_id: "disk-rt".into(),
        width_px: 64,
        height_px: 48,
        frame_count: 20,
        droplet_count: 3,
        radius_range_um: (30.0, 60.0),
        noise_amplitude: 5,
        spawn_frame: 2,
        mask_label: Some("cotton-2ply".into()),
        loudness_db: Some(72.0),
        seed: 21,
        ..FallingSceneParams::default()
    };
    let spec = falling_scene(&params, &model()).unwrap();
    let (stack, _) = render_scene(&spec, &model()).unwrap();

    let dir = tempfile::tempdir().unwrap();
    save_stack(dir.path(), &stack).unwrap();
    let loaded = load_stack(dir.path()).unwrap();

    assert_eq!(loaded.manifest.trial_id, "disk-rt");
    assert_eq!(loaded.manifest.mask_label.as_deref(), Some("cotton-2ply"));
    assert_eq!(loaded.manifest.loudness_db, Some(72.0));
    assert_eq!(loaded.len(), stack.len());
    for (a, b) in loaded.frames.iter().zip(&stack.frames) {
        assert_eq!(a, b);
    }

    let before = brightness_series(&stack, Region::Full);
    let after = brightness_series(&loaded, Region::Full);
    assert_eq!(before.values, after.values);
}
