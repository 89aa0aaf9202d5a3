//! Mask efficacy: how much each face covering cuts peak emission relative
//! to an uncovered control.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EfficacyError {
    #[error("no trials supplied")]
    EmptyInput,
    #[error("no control group: no trial is labeled {0:?}")]
    MissingControl(String),
    #[error("control label {0:?} does not match any trial")]
    UnknownLabel(String),
}

/// Default label for the uncovered reference group.
pub const CONTROL_LABEL: &str = "control";

/// One trial's contribution to the efficacy comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct EfficacyTrial {
    pub label: String,
    pub peak_value: f64,
    pub baseline: f64,
}

/// Aggregated statistics for one mask condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EfficacyRow {
    pub label: String,
    pub trial_count: usize,
    pub mean_peak: f64,
    /// Population standard deviation of peaks.
    pub std_peak: f64,
    /// Coefficient of variation; 0 when the mean peak is
    /// indistinguishable from zero.
    pub cv: f64,
    /// Mean peak minus mean baseline: the brightness the event added.
    pub excess: f64,
    /// `1 - excess / control_excess`, clamped to [0, 1]. The control group
    /// is 0 by definition; `None` when the control excess is too small to
    /// divide by.
    pub blocking_efficiency: Option<f64>,
    /// 1-based position when groups are ordered by ascending mean peak
    /// (label breaks ties), so the strongest blocker ranks first.
    pub rank: usize,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EfficacyReport {
    pub control_label: String,
    /// Ordered by rank.
    pub rows: Vec<EfficacyRow>,
}

/// Build the efficacy report. `control` names the reference group;
/// `None` means the conventional label [`CONTROL_LABEL`].
pub fn build_report(
    trials: &[EfficacyTrial],
    control: Option<&str>,
) -> Result<EfficacyReport, EfficacyError> {
    if trials.is_empty() {
        return Err(EfficacyError::EmptyInput);
    }
    let mut groups: BTreeMap<&str, Vec<&EfficacyTrial>> = BTreeMap::new();
    for t in trials {
        groups.entry(&t.label).or_default().push(t);
    }
    let control_label = control.unwrap_or(CONTROL_LABEL);
    if !groups.contains_key(control_label) {
        return Err(match control {
            Some(label) => EfficacyError::UnknownLabel(label.to_string()),
            None => EfficacyError::MissingControl(control_label.to_string()),
        });
    }

    struct GroupAgg {
        label: String,
        count: usize,
        mean_peak: f64,
        std_peak: f64,
        cv: f64,
        excess: f64,
    }
    let aggs: Vec<GroupAgg> = groups
        .iter()
        .map(|(label, members)| {
            let n = members.len() as f64;
            let mean_peak = members.iter().map(|t| t.peak_value).sum::<f64>() / n;
            let var = members
                .iter()
                .map(|t| (t.peak_value - mean_peak) * (t.peak_value - mean_peak))
                .sum::<f64>()
                / n;
            let std_peak = var.sqrt();
            let cv = if mean_peak.abs() < 1e-12 {
                0.0
            } else {
                std_peak / mean_peak
            };
            let mean_baseline = members.iter().map(|t| t.baseline).sum::<f64>() / n;
            GroupAgg {
                label: label.to_string(),
                count: members.len(),
                mean_peak,
                std_peak,
                cv,
                excess: mean_peak - mean_baseline,
            }
        })
        .collect();

    let control_excess = aggs
        .iter()
        .find(|g| g.label == control_label)
        .expect("control group checked above")
        .excess;
    let control_usable = control_excess > 1e-9;

    let mut order: Vec<usize> = (0..aggs.len()).collect();
    order.sort_by(|&a, &b| {
        (aggs[a].mean_peak, aggs[a].label.as_str())
            .partial_cmp(&(aggs[b].mean_peak, aggs[b].label.as_str()))
            .expect("finite peaks")
    });

    let mut rows: Vec<EfficacyRow> = Vec::with_capacity(aggs.len());
    for (rank0, &i) in order.iter().enumerate() {
        let g = &aggs[i];
        let mut flags = Vec::new();
        let blocking_efficiency = if g.label == control_label {
            Some(0.0)
        } else if !control_usable {
            flags.push("control_excess_zero".to_string());
            None
        } else {
            let raw = 1.0 - g.excess / control_excess;
            if !(0.0..=1.0).contains(&raw) {
                flags.push("clamped".to_string());
            }
            Some(raw.clamp(0.0, 1.0))
        };
        rows.push(EfficacyRow {
            label: g.label.clone(),
            trial_count: g.count,
            mean_peak: g.mean_peak,
            std_peak: g.std_peak,
            cv: g.cv,
            excess: g.excess,
            blocking_efficiency,
            rank: rank0 + 1,
            flags,
        });
    }

    Ok(EfficacyReport {
        control_label: control_label.to_string(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn trial(label: &str, peak: f64, baseline: f64) -> EfficacyTrial {
        EfficacyTrial {
            label: label.to_string(),
            peak_value: peak,
            baseline,
        }
    }

    #[test]
    fn ninety_percent_blocking() {
        let trials = vec![
            trial("control", 200.0, 10.0),
            trial("control", 200.0, 10.0),
            trial("cotton-2ply", 29.0, 10.0),
            trial("cotton-2ply", 29.0, 10.0),
        ];
        let report = build_report(&trials, None).unwrap();
        assert_eq!(report.control_label, "control");
        assert_eq!(report.rows.len(), 2);
        // Mask peak is lower, so it ranks first.
        assert_eq!(report.rows[0].label, "cotton-2ply");
        assert_eq!(report.rows[0].rank, 1);
        assert!((report.rows[0].blocking_efficiency.unwrap() - 0.90).abs() < 1e-12);
        assert_eq!(report.rows[1].label, "control");
        assert_eq!(report.rows[1].blocking_efficiency, Some(0.0));
        assert_eq!(report.rows[1].rank, 2);
        assert!(report.rows[0].flags.is_empty());
    }

    #[test]
    fn group_statistics() {
        let trials = vec![
            trial("control", 100.0, 0.0),
            trial("gaiter", 40.0, 0.0),
            trial("gaiter", 60.0, 0.0),
        ];
        let report = build_report(&trials, None).unwrap();
        let gaiter = report.rows.iter().find(|r| r.label == "gaiter").unwrap();
        assert_eq!(gaiter.trial_count, 2);
        assert_eq!(gaiter.mean_peak, 50.0);
        assert_eq!(gaiter.std_peak, 10.0);
        assert!((gaiter.cv - 0.2).abs() < 1e-12);
        assert!((gaiter.blocking_efficiency.unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn clamping_flags_out_of_range() {
        let trials = vec![
            trial("control", 100.0, 10.0),
            trial("sealed", 5.0, 10.0),
            trial("leaky", 300.0, 10.0),
        ];
        let report = build_report(&trials, None).unwrap();
        let sealed = report.rows.iter().find(|r| r.label == "sealed").unwrap();
        assert_eq!(sealed.blocking_efficiency, Some(1.0));
        assert_eq!(sealed.flags, vec!["clamped".to_string()]);
        let leaky = report.rows.iter().find(|r| r.label == "leaky").unwrap();
        assert_eq!(leaky.blocking_efficiency, Some(0.0));
        assert_eq!(leaky.flags, vec!["clamped".to_string()]);
    }

    #[test]
    fn flat_control_yields_no_efficiency() {
        let trials = vec![
            trial("control", 10.0, 10.0),
            trial("cotton", 8.0, 10.0),
        ];
        let report = build_report(&trials, None).unwrap();
        let cotton = report.rows.iter().find(|r| r.label == "cotton").unwrap();
        assert_eq!(cotton.blocking_efficiency, None);
        assert_eq!(cotton.flags, vec!["control_excess_zero".to_string()]);
        let control = report.rows.iter().find(|r| r.label == "control").unwrap();
        assert_eq!(control.blocking_efficiency, Some(0.0));
    }

    #[test]
    fn explicit_control_label() {
        let trials = vec![trial("bare", 100.0, 0.0), trial("n95", 1.0, 0.0)];
        let report = build_report(&trials, Some("bare")).unwrap();
        assert_eq!(report.control_label, "bare");
        let n95 = report.rows.iter().find(|r| r.label == "n95").unwrap();
        assert!((n95.blocking_efficiency.unwrap() - 0.99).abs() < 1e-12);
    }

    #[test]
    fn input_errors() {
        assert_eq!(build_report(&[], None).unwrap_err(), EfficacyError::EmptyInput);
        let trials = vec![trial("cotton", 10.0, 0.0)];
        assert_eq!(
            build_report(&trials, None).unwrap_err(),
            EfficacyError::MissingControl("control".to_string())
        );
        assert_eq!(
            build_report(&trials, Some("bare")).unwrap_err(),
            EfficacyError::UnknownLabel("bare".to_string())
        );
    }

    proptest! {
        #[test]
        fn report_invariants(
            peaks in proptest::collection::vec((0usize..4, 0.0f64..300.0, 0.0f64..20.0), 1..20),
            control_peak in 50.0f64..300.0,
        ) {
            let labels = ["control", "cotton", "gaiter", "n95"];
            let mut trials = vec![trial("control", control_peak, 0.0)];
            for (li, peak, base) in peaks {
                trials.push(trial(labels[li], peak, base));
            }
            let report = build_report(&trials, None).unwrap();
            let n = report.rows.len();
            let mut ranks: Vec<usize> = report.rows.iter().map(|r| r.rank).collect();
            ranks.sort_unstable();
            prop_assert_eq!(ranks, (1..=n).collect::<Vec<_>>());
            for row in &report.rows {
                if let Some(eff) = row.blocking_efficiency {
                    prop_assert!((0.0..=1.0).contains(&eff));
                }
                if row.label == "control" {
                    prop_assert_eq!(row.blocking_efficiency, Some(0.0));
                }
                prop_assert!(row.std_peak >= 0.0);
            }
            // Rows come back ordered by rank, and mean peaks follow it.
            for w in report.rows.windows(2) {
                prop_assert!(w[0].rank < w[1].rank);
                prop_assert!(w[0].mean_peak <= w[1].mean_peak);
            }
        }
    }
}
