use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use dropscope_core::{
    brightness_series, falling_scene, fixed_threshold, link_detections, otsu_threshold,
    render_scene, segment, Connectivity, Detection, FallingSceneParams, LinkConfig, Region,
    SceneSpec, SedimentationModel, SegmentConfig,
};

fn bench_scene(model: &SedimentationModel) -> SceneSpec {
    let params = FallingSceneParams {
        trial_id: "bench".into(),
        width_px: 320,
        height_px: 240,
        frame_count: 60,
        droplet_count: 6,
        ..FallingSceneParams::default()
    };
    falling_scene(&params, model).unwrap()
}

fn pipeline(c: &mut Criterion) {
    let model = SedimentationModel::default();
    let spec = bench_scene(&model);
    let (stack, _) = render_scene(&spec, &model).unwrap();
    let frame = &stack.frames[30];
    let mask = fixed_threshold(frame, 10);
    let segment_config = SegmentConfig {
        connectivity: Connectivity::Eight,
        min_area: 1,
    };
    let detections: Vec<Detection> = stack
        .frames
        .iter()
        .enumerate()
        .flat_map(|(i, f)| {
            let mask = fixed_threshold(f, 10);
            segment(f, &mask, i, &segment_config).unwrap()
        })
        .collect();

    c.bench_function("render_scene_320x240x60", |b| {
        b.iter(|| render_scene(black_box(&spec), &model).unwrap())
    });
    c.bench_function("otsu_threshold_320x240", |b| {
        b.iter(|| otsu_threshold(black_box(frame)))
    });
    c.bench_function("segment_320x240", |b| {
        b.iter(|| segment(black_box(frame), &mask, 30, &segment_config).unwrap())
    });
    c.bench_function("brightness_series_60_frames", |b| {
        b.iter(|| brightness_series(black_box(&stack), Region::Full))
    });
    c.bench_function("link_detections_60_frames", |b| {
        b.iter(|| link_detections(black_box(&detections), &LinkConfig::default()))
    });
}

criterion_group!(benches, pipeline);
criterion_main!(benches);
