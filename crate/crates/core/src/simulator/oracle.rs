//! Brute-force recomputation of what the engine should observe.
//!
//! Nothing here calls into the ledger, the observe rules, or the engine:
//! totals come from counting tick instants inside speaking intervals, and
//! the trigger rules are re-applied with plain floating-point averages.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::meeting::{ParticipantId, Role};
use crate::observe::TriggerReason;
use crate::simulator::run::CumulativeTable;
use crate::simulator::scenario::Scenario;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleTrigger {
    pub t: u64,
    pub reason: TriggerReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub table: CumulativeTable,
    pub first_trigger: Option<OracleTrigger>,
    pub under: Vec<ParticipantId>,
    pub over: Vec<ParticipantId>,
}

/// `cumulative(p, t)` = number of tick instants `s <= t` with
/// `start < s * 1000 <= end` for some interval of `p`.
pub fn oracle_cumulative(scenario: &Scenario) -> CumulativeTable {
    let intervals = scenario.expand_intervals();
    let participants: Vec<ParticipantId> = intervals.keys().cloned().collect();
    let duration = scenario.config.scheduled_duration;
    let mut rows = Vec::with_capacity(duration as usize);
    let mut running = vec![0u64; participants.len()];
    for s in 1..=duration {
        let instant = s * 1000;
        for (i, p) in participants.iter().enumerate() {
            let speaking = intervals[p]
                .iter()
                .any(|&(start, end)| start < instant && instant <= end);
            if speaking {
                running[i] += 1;
            }
        }
        rows.push(running.clone());
    }
    CumulativeTable { participants, rows }
}

fn members(scenario: &Scenario) -> Vec<ParticipantId> {
    let mut ids: Vec<ParticipantId> = scenario
        .participants
        .iter()
        .filter(|p| p.role == Role::Member)
        .map(|p| p.id.clone())
        .collect();
    ids.sort();
    ids
}

/// Linear scan over ticks applying the trigger rules.
pub fn oracle_first_trigger(scenario: &Scenario, table: &CumulativeTable) -> Option<OracleTrigger> {
    let config = &scenario.config;
    let members = members(scenario);
    let columns: Vec<usize> = members
        .iter()
        .map(|m| table.participants.iter().position(|p| p == m).expect("member column"))
        .collect();
    for (row_index, row) in table.rows.iter().enumerate() {
        let t = row_index as u64 + 1;
        if t >= config.ratio_min_elapsed && !members.is_empty() {
            let values: Vec<f64> = columns.iter().map(|&c| row[c] as f64).collect();
            let avg = values.iter().sum::<f64>() / values.len() as f64;
            for (m, v) in members.iter().zip(&values) {
                if *v > config.ratio_high * avg || *v < config.ratio_low * avg {
                    return Some(OracleTrigger {
                        t,
                        reason: TriggerReason::RatioImbalance {
                            participant: m.clone(),
                            ratio: v / avg,
                        },
                    });
                }
            }
        }
        if t as f64 >= config.half_time_fraction * config.scheduled_duration as f64 {
            return Some(OracleTrigger {
                t,
                reason: TriggerReason::HalfTime,
            });
        }
    }
    None
}

/// Under- and over-participators given member totals.
pub fn oracle_classify(totals: &BTreeMap<ParticipantId, u64>) -> (Vec<ParticipantId>, Vec<ParticipantId>) {
    if totals.is_empty() {
        return (Vec::new(), Vec::new());
    }
    let avg = totals.values().sum::<u64>() as f64 / totals.len() as f64;

    let mut under: Vec<(u64, ParticipantId)> = totals
        .iter()
        .filter(|(_, v)| (**v as f64) < avg)
        .map(|(p, v)| (*v, p.clone()))
        .collect();
    if under.is_empty() {
        let min = *totals.values().min().expect("non-empty");
        under = totals
            .iter()
            .filter(|(_, v)| **v == min)
            .map(|(p, v)| (*v, p.clone()))
            .collect();
    }
    under.sort();

    let max = *totals.values().max().expect("non-empty");
    let top = totals
        .iter()
        .find(|(_, v)| **v == max)
        .map(|(p, _)| p.clone())
        .expect("non-empty");
    let mut extra: Vec<(std::cmp::Reverse<u64>, ParticipantId)> = totals
        .iter()
        .filter(|(p, v)| **p != top && (**v as f64) > 2.0 * avg)
        .map(|(p, v)| (std::cmp::Reverse(*v), p.clone()))
        .collect();
    extra.sort();

    let mut over = vec![top];
    over.extend(extra.into_iter().map(|(_, p)| p));
    (under.into_iter().map(|(_, p)| p).collect(), over)
}

pub fn oracle_report(scenario: &Scenario) -> OracleReport {
    let table = oracle_cumulative(scenario);
    let first_trigger = oracle_first_trigger(scenario, &table);
    let (under, over) = match &first_trigger {
        Some(trigger) => {
            let row = &table.rows[trigger.t as usize - 1];
            let totals = members(scenario)
                .into_iter()
                .map(|m| {
                    let c = table.participants.iter().position(|p| *p == m).expect("column");
                    (m, row[c])
                })
                .collect();
            oracle_classify(&totals)
        }
        None => (Vec::new(), Vec::new()),
    };
    OracleReport {
        table,
        first_trigger,
        under,
        over,
    }
}
