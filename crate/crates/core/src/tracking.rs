//! Linking per-frame detections into droplet trajectories and measuring
//! their fall.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::imageproc::Detection;
use crate::ingest::Geometry;
use crate::physics::SedimentationModel;

#[derive(Debug, Error, PartialEq)]
pub enum TrackingError {
    #[error("track has {0} detections, need at least 2 to measure")]
    TooShort(usize),
}

/// Linking parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkConfig {
    /// Maximum centroid distance in pixels for a frame-to-frame link.
    pub gate_px: f64,
    /// How many consecutive frames a droplet may go undetected before its
    /// track is closed.
    pub max_gap_frames: usize,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            gate_px: 25.0,
            max_gap_frames: 2,
        }
    }
}

/// One droplet trajectory: its detections in frame order.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub track_id: u32,
    pub detections: Vec<Detection>,
}

impl Track {
    pub fn first(&self) -> &Detection {
        &self.detections[0]
    }

    pub fn last(&self) -> &Detection {
        self.detections.last().expect("tracks are never empty")
    }
}

struct TrackState {
    track: Track,
    open: bool,
}

/// Link detections into tracks by greedy globally-nearest-neighbor
/// matching, frame by frame.
///
/// Candidate links within the gate are taken shortest-distance first, with
/// ties broken by track id and then by detection position; each track and
/// each detection is used at most once per frame. Unmatched detections
/// start new tracks. A track that misses more than `max_gap_frames`
/// consecutive frames is closed. Detections are canonicalized by (y, x)
/// within each frame, so the outcome does not depend on input order.
pub fn link_detections(detections: &[Detection], config: &LinkConfig) -> Vec<Track> {
    let mut by_frame: BTreeMap<usize, Vec<&Detection>> = BTreeMap::new();
    for d in detections {
        by_frame.entry(d.frame_index).or_default().push(d);
    }
    let mut states: Vec<TrackState> = Vec::new();

    for (&frame, dets) in &by_frame {
        let mut dets = dets.clone();
        dets.sort_by(|a, b| {
            (a.y_px, a.x_px)
                .partial_cmp(&(b.y_px, b.x_px))
                .expect("finite centroids")
        });
        for s in states.iter_mut().filter(|s| s.open) {
            if frame > s.track.last().frame_index + 1 + config.max_gap_frames {
                s.open = false;
            }
        }

        let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
        for (ti, s) in states.iter().enumerate() {
            if !s.open {
                continue;
            }
            let last = s.track.last();
            for (di, d) in dets.iter().enumerate() {
                let dx = d.x_px - last.x_px;
                let dy = d.y_px - last.y_px;
                let dist = (dx * dx + dy * dy).sqrt();
                if dist <= config.gate_px {
                    candidates.push((dist, ti, di));
                }
            }
        }
        candidates.sort_by(|a, b| {
            (a.0, states[a.1].track.track_id, a.2)
                .partial_cmp(&(b.0, states[b.1].track.track_id, b.2))
                .expect("finite distances")
        });

        let mut track_taken = vec![false; states.len()];
        let mut det_taken = vec![false; dets.len()];
        for (_, ti, di) in candidates {
            if track_taken[ti] || det_taken[di] {
                continue;
            }
            track_taken[ti] = true;
            det_taken[di] = true;
            states[ti].track.detections.push(dets[di].clone());
        }
        for (di, d) in dets.iter().enumerate() {
            if det_taken[di] {
                continue;
            }
            states.push(TrackState {
                track: Track {
                    track_id: states.len() as u32,
                    detections: vec![(*d).clone()],
                },
                open: true,
            });
        }
    }

    states.into_iter().map(|s| s.track).collect()
}

/// How a track ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackStatus {
    /// Reached the bottom margin of the field of view.
    Complete,
    /// Left through a side margin before reaching the bottom.
    ExitedSide,
    /// Ended mid-field, or never fell.
    Stalled,
}

impl TrackStatus {
    pub fn flag(&self) -> &'static str {
        match self {
            TrackStatus::Complete => "complete",
            TrackStatus::ExitedSide => "exited_side",
            TrackStatus::Stalled => "stalled",
        }
    }
}

/// Margins deciding where a track is considered to have left the frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasureConfig {
    pub bottom_margin_px: f64,
    pub side_margin_px: f64,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        Self {
            bottom_margin_px: 3.0,
            side_margin_px: 3.0,
        }
    }
}

/// Fall metrics for one track.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackMeasurement {
    pub track_id: u32,
    pub start_frame: usize,
    pub end_frame: usize,
    /// Vertical drop between first and last detection; negative if the
    /// blob drifted upward.
    pub fall_px: f64,
    pub fall_um: f64,
    pub duration_s: f64,
    /// Sedimentation-model radius, only for complete falls with positive
    /// drop and duration.
    pub radius_um_est: Option<f64>,
    pub status: TrackStatus,
}

/// Measure a track's fall and, when it completed, estimate the droplet
/// radius from the settling model.
pub fn measure_track(
    track: &Track,
    geometry: &Geometry,
    model: &SedimentationModel,
    config: &MeasureConfig,
) -> Result<TrackMeasurement, TrackingError> {
    if track.detections.len() < 2 {
        return Err(TrackingError::TooShort(track.detections.len()));
    }
    let first = track.first();
    let last = track.last();
    let fall_px = last.y_px - first.y_px;
    let fall_um = fall_px * geometry.um_per_pixel;
    let duration_s = (last.frame_index - first.frame_index) as f64 / geometry.fps;

    let bottom_edge = geometry.height_px as f64 - 1.0 - config.bottom_margin_px;
    let right_edge = geometry.width_px as f64 - 1.0 - config.side_margin_px;
    let status = if last.y_px >= bottom_edge {
        TrackStatus::Complete
    } else if last.x_px <= config.side_margin_px || last.x_px >= right_edge {
        TrackStatus::ExitedSide
    } else {
        TrackStatus::Stalled
    };

    let radius_um_est = if status == TrackStatus::Complete && fall_um > 0.0 && duration_s > 0.0 {
        Some(
            model
                .estimate_radius(fall_um, duration_s)
                .expect("positive fall and duration"),
        )
    } else {
        None
    };

    Ok(TrackMeasurement {
        track_id: track.track_id,
        start_frame: first.frame_index,
        end_frame: last.frame_index,
        fall_px,
        fall_um,
        duration_s,
        radius_um_est,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn det(frame_index: usize, x: f64, y: f64) -> Detection {
        Detection {
            frame_index,
            x_px: x,
            y_px: y,
            area_px: 5,
            mean_intensity: 40.0,
            peak_intensity: 80,
        }
    }

    fn geom() -> Geometry {
        Geometry {
            width_px: 64,
            height_px: 100,
            um_per_pixel: 1000.0,
            fps: 240.0,
        }
    }

    #[test]
    fn single_fall_links_into_one_track() {
        let dets: Vec<Detection> = (0..6).map(|i| det(i, 10.0, 5.0 + 3.0 * i as f64)).collect();
        let tracks = link_detections(&dets, &LinkConfig::default());
        assert_eq!(tracks.len(), 1);
        assert_eq!(tracks[0].detections.len(), 6);
        assert_eq!(tracks[0].track_id, 0);
    }

    #[test]
    fn parallel_droplets_stay_separate() {
        let mut dets = Vec::new();
        for i in 0..5 {
            dets.push(det(i, 10.0, 5.0 + 3.0 * i as f64));
            dets.push(det(i, 40.0, 5.0 + 3.0 * i as f64));
        }
        let tracks = link_detections(&dets, &LinkConfig::default());
        assert_eq!(tracks.len(), 2);
        for t in &tracks {
            assert_eq!(t.detections.len(), 5);
            let x0 = t.detections[0].x_px;
            assert!(t.detections.iter().all(|d| d.x_px == x0));
        }
    }

    #[test]
    fn gap_within_limit_is_bridged() {
        let dets = vec![
            det(0, 10.0, 5.0),
            det(1, 10.0, 8.0),
            det(3, 10.0, 14.0),
        ];
        let bridged = link_detections(&dets, &LinkConfig::default());
        assert_eq!(bridged.len(), 1);
        assert_eq!(bridged[0].detections.len(), 3);

        let strict = LinkConfig {
            max_gap_frames: 0,
            ..LinkConfig::default()
        };
        let split = link_detections(&dets, &strict);
        assert_eq!(split.len(), 2);
    }

    #[test]
    fn jump_beyond_gate_starts_new_track() {
        let dets = vec![det(0, 10.0, 10.0), det(1, 10.0, 40.0)];
        let tracks = link_detections(&dets, &LinkConfig::default());
        assert_eq!(tracks.len(), 2);
    }

    #[test]
    fn nearest_pair_wins_globally() {
        let dets = vec![
            det(0, 10.0, 10.0),
            det(0, 20.0, 10.0),
            det(1, 12.0, 10.0),
            det(1, 19.0, 10.0),
        ];
        let tracks = link_detections(&dets, &LinkConfig::default());
        assert_eq!(tracks.len(), 2);
        let a = tracks.iter().find(|t| t.first().x_px == 10.0).unwrap();
        let b = tracks.iter().find(|t| t.first().x_px == 20.0).unwrap();
        assert_eq!(a.last().x_px, 12.0);
        assert_eq!(b.last().x_px, 19.0);
    }

    #[test]
    fn equidistant_contention_goes_to_lower_track_id() {
        let dets = vec![
            det(0, 10.0, 10.0),
            det(0, 14.0, 10.0),
            det(1, 12.0, 10.0),
        ];
        let tracks = link_detections(&dets, &LinkConfig::default());
        assert_eq!(tracks.len(), 2);
        assert_eq!(tracks[0].track_id, 0);
        assert_eq!(tracks[0].detections.len(), 2);
        assert_eq!(tracks[0].last().x_px, 12.0);
        assert_eq!(tracks[1].detections.len(), 1);
    }

    #[test]
    fn measure_complete_fall_estimates_radius() {
        let model = SedimentationModel::default();
        let track = Track {
            track_id: 3,
            detections: vec![det(0, 30.0, 2.0), det(24, 30.0, 98.0)],
        };
        let m = measure_track(&track, &geom(), &model, &MeasureConfig::default()).unwrap();
        assert_eq!(m.status, TrackStatus::Complete);
        assert_eq!(m.fall_px, 96.0);
        assert_eq!(m.fall_um, 96_000.0);
        assert_eq!(m.duration_s, 0.1);
        let expected = model.estimate_radius(96_000.0, 0.1).unwrap();
        assert!((m.radius_um_est.unwrap() - expected).abs() < 1e-12);
        assert_eq!(m.track_id, 3);
        assert_eq!(m.end_frame, 24);
    }

    #[test]
    fn measure_side_exit_and_stall() {
        let model = SedimentationModel::default();
        let side = Track {
            track_id: 0,
            detections: vec![det(0, 30.0, 2.0), det(5, 1.0, 40.0)],
        };
        let m = measure_track(&side, &geom(), &model, &MeasureConfig::default()).unwrap();
        assert_eq!(m.status, TrackStatus::ExitedSide);
        assert_eq!(m.radius_um_est, None);

        let stalled = Track {
            track_id: 1,
            detections: vec![det(0, 30.0, 2.0), det(5, 30.0, 40.0)],
        };
        let m = measure_track(&stalled, &geom(), &model, &MeasureConfig::default()).unwrap();
        assert_eq!(m.status, TrackStatus::Stalled);
        assert_eq!(m.radius_um_est, None);
        assert_eq!(m.status.flag(), "stalled");
    }

    #[test]
    fn measure_bottom_dweller_with_upward_drift() {
        let model = SedimentationModel::default();
        let track = Track {
            track_id: 0,
            detections: vec![det(0, 30.0, 98.0), det(4, 30.0, 97.5)],
        };
        let m = measure_track(&track, &geom(), &model, &MeasureConfig::default()).unwrap();
        assert_eq!(m.status, TrackStatus::Complete);
        assert!(m.fall_px < 0.0);
        assert_eq!(m.radius_um_est, None);
    }

    #[test]
    fn measure_rejects_short_tracks() {
        let model = SedimentationModel::default();
        let track = Track {
            track_id: 0,
            detections: vec![det(0, 30.0, 2.0)],
        };
        assert_eq!(
            measure_track(&track, &geom(), &model, &MeasureConfig::default()).unwrap_err(),
            TrackingError::TooShort(1)
        );
    }

    proptest! {
        #[test]
        fn linking_ignores_input_order(
            raw in proptest::collection::vec(
                (0usize..6, 0u32..60, 0u32..60),
                1..30,
            ),
            seed in 0u64..1000,
        ) {
            // Deduplicate positions within a frame so canonical order is
            // unambiguous.
            let mut seen = std::collections::BTreeSet::new();
            let mut dets = Vec::new();
            for (f, x, y) in raw {
                if seen.insert((f, x, y)) {
                    dets.push(det(f, x as f64, y as f64));
                }
            }
            let config = LinkConfig::default();
            let baseline = link_detections(&dets, &config);

            // Deterministic shuffle.
            let mut shuffled = dets.clone();
            let mut state = seed.wrapping_mul(2862933555777941757).wrapping_add(3037000493);
            for i in (1..shuffled.len()).rev() {
                state = state.wrapping_mul(2862933555777941757).wrapping_add(3037000493);
                let j = (state >> 33) as usize % (i + 1);
                shuffled.swap(i, j);
            }
            let again = link_detections(&shuffled, &config);

            prop_assert_eq!(baseline.len(), again.len());
            for (a, b) in baseline.iter().zip(&again) {
                prop_assert_eq!(a, b);
            }
        }

        #[test]
        fn every_detection_lands_in_exactly_one_track(
            raw in proptest::collection::vec(
                (0usize..5, 0u32..50, 0u32..50),
                1..25,
            ),
        ) {
            let mut seen = std::collections::BTreeSet::new();
            let mut dets = Vec::new();
            for (f, x, y) in raw {
                if seen.insert((f, x, y)) {
                    dets.push(det(f, x as f64, y as f64));
                }
            }
            let tracks = link_detections(&dets, &LinkConfig::default());
            let total: usize = tracks.iter().map(|t| t.detections.len()).sum();
            prop_assert_eq!(total, dets.len());
            for t in &tracks {
                // Frames strictly increase and no link exceeds the gate.
                for w in t.detections.windows(2) {
                    prop_assert!(w[1].frame_index > w[0].frame_index);
                    prop_assert!(
                        w[1].frame_index - w[0].frame_index
                            <= 1 + LinkConfig::default().max_gap_frames
                    );
                    let dx = w[1].x_px - w[0].x_px;
                    let dy = w[1].y_px - w[0].y_px;
                    prop_assert!((dx * dx + dy * dy).sqrt() <= LinkConfig::default().gate_px);
                }
            }
        }
    }
}
