//! Trigger rules for entering the Ask phase, and participant classification.
//!
//! Only non-host members are ever compared; the host and the co-host are
//! excluded from every average.

use serde::{Deserialize, Serialize};

use crate::meeting::{MeetingConfig, ParticipantId, SpeakingLedger};

/// Multiple of the member average above which a non-top speaker also counts
/// as an over-participator.
pub const OVER_PARTICIPATION_FACTOR: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TriggerReason {
    RatioImbalance {
        participant: ParticipantId,
        ratio: f64,
    },
    HalfTime,
}

impl TriggerReason {
    pub fn label(&self) -> &'static str {
        match self {
            TriggerReason::RatioImbalance { .. } => "ratio_imbalance",
            TriggerReason::HalfTime => "half_time",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TriggerDecision {
    NoTrigger,
    EnterAsk(TriggerReason),
}

/// Applies the Observe rules at elapsed second `t`.
///
/// The ratio rule reports the first offending member in id order.
pub fn evaluate_trigger(
    ledger: &SpeakingLedger,
    t: u64,
    config: &MeetingConfig,
    already_asked: bool,
) -> TriggerDecision {
    if already_asked {
        return TriggerDecision::NoTrigger;
    }
    if t >= config.ratio_min_elapsed {
        if let Ok(avg) = ledger.average_nonhost() {
            let offender = ledger.members().find(|(_, s)| {
                avg.exceeded_by(*s, config.ratio_high) || avg.undercut_by(*s, config.ratio_low)
            });
            if let Some((p, s)) = offender {
                return TriggerDecision::EnterAsk(TriggerReason::RatioImbalance {
                    participant: p.clone(),
                    ratio: s as f64 / avg.as_f64(),
                });
            }
        }
    }
    if t as f64 >= config.half_time_fraction * config.scheduled_duration as f64 {
        return TriggerDecision::EnterAsk(TriggerReason::HalfTime);
    }
    TriggerDecision::NoTrigger
}

/// Members strictly below the member average, quietest first.
///
/// When nobody is below average (all equal), every minimum speaker is
/// returned so the Ask phase always has a target.
pub fn under_participators(ledger: &SpeakingLedger) -> Vec<ParticipantId> {
    let Ok(avg) = ledger.average_nonhost() else {
        return Vec::new();
    };
    let mut below: Vec<(u64, &ParticipantId)> = ledger
        .members()
        .filter(|(_, s)| avg.is_above(*s))
        .map(|(p, s)| (s, p))
        .collect();
    if below.is_empty() {
        let min = ledger.members().map(|(_, s)| s).min().unwrap_or(0);
        below = ledger
            .members()
            .filter(|(_, s)| *s == min)
            .map(|(p, s)| (s, p))
            .collect();
    }
    below.sort();
    below.into_iter().map(|(_, p)| p.clone()).collect()
}

/// The top member speaker, then any other member above twice the average.
pub fn over_participators(ledger: &SpeakingLedger) -> Vec<ParticipantId> {
    let Ok(avg) = ledger.average_nonhost() else {
        return Vec::new();
    };
    // members() is id-ordered, so the first maximum wins ties.
    let Some((top, top_s)) = ledger
        .members()
        .fold(None::<(&ParticipantId, u64)>, |best, (p, s)| match best {
            Some((_, bs)) if bs >= s => best,
            _ => Some((p, s)),
        })
    else {
        return Vec::new();
    };
    let mut extra: Vec<(std::cmp::Reverse<u64>, &ParticipantId)> = ledger
        .members()
        .filter(|(p, s)| *p != top && avg.exceeded_by(*s, OVER_PARTICIPATION_FACTOR))
        .map(|(p, s)| (std::cmp::Reverse(s), p))
        .collect();
    extra.sort();
    debug_assert!(extra.iter().all(|(s, _)| s.0 <= top_s));
    std::iter::once(top.clone())
        .chain(extra.into_iter().map(|(_, p)| p.clone()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meeting::test_support::{ledger_with, pid};

    fn ids(list: &[&str]) -> Vec<ParticipantId> {
        list.iter().map(|s| pid(s)).collect()
    }

    #[test]
    fn half_time_fires_for_equal_speakers() {
        let config = MeetingConfig::with_duration(1800);
        let l = ledger_with(0, &[("A", 100), ("B", 100), ("C", 100)]);
        assert_eq!(
            evaluate_trigger(&l, 899, &config, false),
            TriggerDecision::NoTrigger
        );
        assert_eq!(
            evaluate_trigger(&l, 900, &config, false),
            TriggerDecision::EnterAsk(TriggerReason::HalfTime)
        );
        assert_eq!(
            evaluate_trigger(&l, 900, &config, true),
            TriggerDecision::NoTrigger
        );
    }

    #[test]
    fn ratio_rule_needs_elapsed_gate() {
        let config = MeetingConfig::with_duration(1800);
        let l = ledger_with(0, &[("A", 301), ("B", 100), ("C", 50)]);
        // avg = 451/3 = 150.33..; 2 * avg = 300.67 < 301.
        let expected_ratio = 301.0 / (451.0 / 3.0);
        match evaluate_trigger(&l, 480, &config, false) {
            TriggerDecision::EnterAsk(TriggerReason::RatioImbalance { participant, ratio }) => {
                assert_eq!(participant, pid("A"));
                assert!((ratio - expected_ratio).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(
            evaluate_trigger(&l, 479, &config, false),
            TriggerDecision::NoTrigger
        );
    }

    #[test]
    fn ratio_thresholds_are_strict() {
        let config = MeetingConfig::with_duration(3600);
        // avg = 150, A = 300 = 2 * avg exactly, C = 75 = avg / 2 exactly.
        let l = ledger_with(0, &[("A", 300), ("B", 75), ("C", 75)]);
        assert_eq!(l.average_nonhost().unwrap().as_f64(), 150.0);
        assert_eq!(
            evaluate_trigger(&l, 600, &config, false),
            TriggerDecision::NoTrigger
        );
    }

    #[test]
    fn host_dominance_alone_never_fires_ratio() {
        let config = MeetingConfig::with_duration(3600);
        let l = ledger_with(500, &[("A", 10), ("B", 10)]);
        assert_eq!(
            evaluate_trigger(&l, 600, &config, false),
            TriggerDecision::NoTrigger
        );
    }

    #[test]
    fn under_participator_classification() {
        let l = ledger_with(0, &[("A", 300), ("B", 100), ("C", 50)]);
        assert_eq!(under_participators(&l), ids(&["C", "B"]));
        let eq = ledger_with(0, &[("A", 100), ("B", 100)]);
        assert_eq!(under_participators(&eq), ids(&["A", "B"]));
        let l = ledger_with(0, &[("A", 0), ("B", 600)]);
        assert_eq!(under_participators(&l), ids(&["A"]));
    }

    #[test]
    fn over_participator_classification() {
        let l = ledger_with(0, &[("A", 400), ("B", 100), ("C", 100)]);
        assert_eq!(over_participators(&l), ids(&["A"]));
        let tie = ledger_with(0, &[("A", 100), ("B", 100)]);
        assert_eq!(over_participators(&tie), ids(&["A"]));
        let l = ledger_with(0, &[("A", 500), ("B", 450), ("C", 10)]);
        assert_eq!(over_participators(&l), ids(&["A"]));
    }

    #[test]
    fn over_participators_include_second_heavy_speaker() {
        // avg = 1010 / 6 = 168.3; 2 * avg = 336.7 < 400 < 500.
        let l = ledger_with(
            0,
            &[("A", 500), ("B", 400), ("C", 50), ("D", 50), ("E", 5), ("F", 5)],
        );
        assert_eq!(over_participators(&l), ids(&["A", "B"]));
    }

    #[test]
    fn host_only_meeting_has_no_classes() {
        let l = ledger_with(10, &[]);
        assert!(under_participators(&l).is_empty());
        assert!(over_participators(&l).is_empty());
    }
}
