use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::meeting::ParticipantId;
use crate::observe::TriggerReason;
use crate::simulator::oracle::OracleReport;
use crate::simulator::run::SimSummary;

/// Ratios are recomputed by the oracle with a different formula.
pub const RATIO_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Divergence {
    TableShape {
        detail: String,
    },
    Cumulative {
        t: u64,
        participant: ParticipantId,
        engine: u64,
        oracle: u64,
    },
    TriggerTime {
        engine: Option<u64>,
        oracle: Option<u64>,
    },
    TriggerReason {
        engine: TriggerReason,
        oracle: TriggerReason,
    },
    Classification {
        set: String,
        engine: Vec<ParticipantId>,
        oracle: Vec<ParticipantId>,
        missing: Vec<ParticipantId>,
        extra: Vec<ParticipantId>,
    },
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Divergence::TableShape { detail } => write!(f, "table shape: {detail}"),
            Divergence::Cumulative { t, participant, engine, oracle } => write!(
                f,
                "cumulative({participant}, t={t}): engine {engine}, oracle {oracle}"
            ),
            Divergence::TriggerTime { engine, oracle } => {
                write!(f, "trigger time: engine {engine:?}, oracle {oracle:?}")
            }
            Divergence::TriggerReason { engine, oracle } => {
                write!(f, "trigger reason: engine {engine:?}, oracle {oracle:?}")
            }
            Divergence::Classification { set, missing, extra, .. } => write!(
                f,
                "{set}-participators: missing {missing:?}, extra {extra:?}"
            ),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub divergences: Vec<Divergence>,
}

impl DivergenceReport {
    pub fn is_empty(&self) -> bool {
        self.divergences.is_empty()
    }
}

fn reasons_match(a: &TriggerReason, b: &TriggerReason) -> bool {
    match (a, b) {
        (TriggerReason::HalfTime, TriggerReason::HalfTime) => true,
        (
            TriggerReason::RatioImbalance { participant: p, ratio: r },
            TriggerReason::RatioImbalance { participant: q, ratio: s },
        ) => p == q && (r - s).abs() <= RATIO_TOLERANCE,
        _ => false,
    }
}

fn classification(set: &str, engine: &[ParticipantId], oracle: &[ParticipantId]) -> Option<Divergence> {
    if engine == oracle {
        return None;
    }
    let e: BTreeSet<_> = engine.iter().collect();
    let o: BTreeSet<_> = oracle.iter().collect();
    Some(Divergence::Classification {
        set: set.to_string(),
        engine: engine.to_vec(),
        oracle: oracle.to_vec(),
        missing: o.difference(&e).map(|p| (*p).clone()).collect(),
        extra: e.difference(&o).map(|p| (*p).clone()).collect(),
    })
}

fn first_table_divergence(sim: &SimSummary, oracle: &OracleReport) -> Option<Divergence> {
    let (a, b) = (&sim.table, &oracle.table);
    if a.participants != b.participants {
        return Some(Divergence::TableShape {
            detail: format!("participants {:?} vs {:?}", a.participants, b.participants),
        });
    }
    if a.rows.len() != b.rows.len() {
        return Some(Divergence::TableShape {
            detail: format!("{} ticks vs {} ticks", a.rows.len(), b.rows.len()),
        });
    }
    for (i, (ra, rb)) in a.rows.iter().zip(&b.rows).enumerate() {
        for (j, (va, vb)) in ra.iter().zip(rb).enumerate() {
            if va != vb {
                return Some(Divergence::Cumulative {
                    t: i as u64 + 1,
                    participant: a.participants[j].clone(),
                    engine: *va,
                    oracle: *vb,
                });
            }
        }
    }
    None
}

/// Lists the first table divergence and any trigger or classification
/// mismatch. An empty report means the run agrees with the oracle.
pub fn compare(sim: &SimSummary, oracle: &OracleReport) -> DivergenceReport {
    let mut divergences = Vec::new();
    divergences.extend(first_table_divergence(sim, oracle));

    let engine_t = sim.trigger.as_ref().map(|r| r.t);
    let oracle_t = oracle.first_trigger.as_ref().map(|r| r.t);
    if engine_t != oracle_t {
        divergences.push(Divergence::TriggerTime {
            engine: engine_t,
            oracle: oracle_t,
        });
    }
    if let (Some(e), Some(o)) = (&sim.trigger, &oracle.first_trigger) {
        if !reasons_match(&e.reason, &o.reason) {
            divergences.push(Divergence::TriggerReason {
                engine: e.reason.clone(),
                oracle: o.reason.clone(),
            });
        }
        divergences.extend(classification("under", &e.under, &oracle.under));
        divergences.extend(classification("over", &e.over, &oracle.over));
    }
    DivergenceReport { divergences }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::oracle::oracle_report;
    use crate::simulator::run::run;
    use crate::simulator::scenario::Scenario;

    fn scenario() -> Scenario {
        Scenario::from_json(
            r#"{ "version": 1, "config": { "scheduled_duration": 900 },
                 "participants": [
                   { "id": "H", "role": "host", "speak": { "intervals": [[0, 30000]] } },
                   { "id": "A", "role": "member", "speak": { "intervals": [[30000, 400000]] } },
                   { "id": "B", "role": "member", "speak": { "intervals": [[400000, 460000]] } },
                   { "id": "C", "role": "member", "speak": { "intervals": [[460000, 470000]] } }
                 ] }"#,
        )
        .unwrap()
    }

    #[test]
    fn correct_engine_matches_oracle() {
        let s = scenario();
        let report = compare(&run(&s).unwrap().summary(), &oracle_report(&s));
        assert!(report.is_empty(), "{:?}", report);
    }

    #[test]
    fn off_by_one_trigger_is_reported() {
        let s = scenario();
        let mut sim = run(&s).unwrap().summary();
        let trigger = sim.trigger.as_mut().unwrap();
        trigger.t += 1;
        let report = compare(&sim, &oracle_report(&s));
        assert_eq!(report.divergences.len(), 1);
        assert!(matches!(report.divergences[0], Divergence::TriggerTime { .. }));
    }

    #[test]
    fn shifted_tick_table_is_reported_at_first_difference() {
        let s = scenario();
        let mut sim = run(&s).unwrap().summary();
        // Fault injection: drop the first tick so every row is one tick late.
        sim.table.rows.remove(0);
        sim.table.rows.push(sim.table.rows.last().unwrap().clone());
        let report = compare(&sim, &oracle_report(&s));
        match &report.divergences[0] {
            Divergence::Cumulative { t, participant, .. } => {
                assert_eq!(*t, 1);
                assert_eq!(participant.as_str(), "H");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn classification_mismatch_names_set_difference() {
        let s = scenario();
        let mut sim = run(&s).unwrap().summary();
        let trigger = sim.trigger.as_mut().unwrap();
        trigger.under.retain(|p| p.as_str() != "C");
        let report = compare(&sim, &oracle_report(&s));
        match &report.divergences[..] {
            [Divergence::Classification { set, missing, extra, .. }] => {
                assert_eq!(set, "under");
                assert_eq!(missing, &vec![ParticipantId::new("C").unwrap()]);
                assert!(extra.is_empty());
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
