//! Closed-loop simulation: scripted voice activity and ticks drive the
//! engine, and each participant's reply policy answers co-host messages.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::engine::{Driver, InputEvent, MeetingReport, OutputAction, TriggerRecord};
use crate::error::{Error, Result};
use crate::meeting::{ChatEvent, ParticipantId, VoiceEvent};
use crate::simulator::scenario::{ReplyState, Scenario};

/// Cumulative speaking seconds per participant after each tick.
/// `rows[t - 1][i]` belongs to `participants[i]` at tick `t`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CumulativeTable {
    pub participants: Vec<ParticipantId>,
    pub rows: Vec<Vec<u64>>,
}

impl CumulativeTable {
    pub fn at(&self, t: u64, p: &ParticipantId) -> Option<u64> {
        let i = self.participants.iter().position(|x| x == p)?;
        self.rows.get(usize::try_from(t).ok()?.checked_sub(1)?)?.get(i).copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub events: Vec<InputEvent>,
    pub actions: Vec<OutputAction>,
    pub report: MeetingReport,
    pub table: CumulativeTable,
}

/// The parts of a run the oracle can check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub table: CumulativeTable,
    pub trigger: Option<TriggerRecord>,
}

impl SimResult {
    pub fn summary(&self) -> SimSummary {
        SimSummary {
            table: self.table.clone(),
            trigger: self.report.trigger.clone(),
        }
    }
}

// Ordering of simultaneous events: ticks sample the state held before any
// voice change at the same instant, and chats see the updated state.
const CLASS_START: u8 = 0;
const CLASS_TICK: u8 = 1;
const CLASS_VOICE_OFF: u8 = 2;
const CLASS_VOICE_ON: u8 = 3;
const CLASS_CHAT: u8 = 4;
const CLASS_END: u8 = 5;

type Key = (u64, u8, u64);

/// The scripted part of the timeline: start, ticks, voice changes, end.
pub fn scripted_timeline(scenario: &Scenario) -> BTreeMap<Key, InputEvent> {
    let mut timeline = BTreeMap::new();
    let mut seq = 0u64;
    let mut push = |timeline: &mut BTreeMap<Key, InputEvent>, t_ms, class, ev| {
        timeline.insert((t_ms, class, seq), ev);
        seq += 1;
    };
    push(
        &mut timeline,
        0,
        CLASS_START,
        InputEvent::MeetingStart {
            t_ms: 0,
            config: scenario.config.clone(),
            roster: scenario.roster(),
        },
    );
    for t in 1..=scenario.config.scheduled_duration {
        push(&mut timeline, t * 1000, CLASS_TICK, InputEvent::Tick { t });
    }
    for (id, intervals) in scenario.expand_intervals() {
        for (start, end) in intervals {
            let voice = |active, t_ms| {
                InputEvent::Voice(VoiceEvent {
                    participant: id.clone(),
                    active,
                    t_ms,
                })
            };
            push(&mut timeline, start, CLASS_VOICE_ON, voice(true, start));
            push(&mut timeline, end, CLASS_VOICE_OFF, voice(false, end));
        }
    }
    let end = scenario.duration_ms();
    push(&mut timeline, end, CLASS_END, InputEvent::MeetingEnd { t_ms: end });
    timeline
}

pub fn run(scenario: &Scenario) -> Result<SimResult> {
    scenario.validate()?;
    let mut timeline = scripted_timeline(scenario);
    let mut seq = timeline.len() as u64;
    let mut replies = ReplyState::default();
    let mut driver = Driver::new();
    let mut events = Vec::new();
    let mut actions = Vec::new();
    let mut table = CumulativeTable::default();

    while let Some((_, event)) = timeline.pop_first() {
        let out = driver
            .feed(&event)
            .map_err(|e| Error::Scenario(format!("engine rejected {}: {e}", event.name())))?;
        let engine = driver.engine().expect("started by the first event");
        match &event {
            InputEvent::MeetingStart { .. } => {
                table.participants = engine.ledger().totals().map(|(p, _)| p.clone()).collect();
            }
            InputEvent::Tick { .. } => {
                table.rows.push(engine.ledger().totals().map(|(_, s)| s).collect());
            }
            _ => {}
        }
        for action in &out {
            let OutputAction::DirectMessage { t_ms, to, text, .. } = action else {
                continue;
            };
            let Some(participant) = scenario.participant(to) else {
                continue;
            };
            if let Some((reply, delay)) = replies.respond(participant, text) {
                let at = t_ms + delay;
                let chat = InputEvent::Chat(ChatEvent {
                    from: to.clone(),
                    text: reply,
                    t_ms: at,
                });
                timeline.insert((at, CLASS_CHAT, seq), chat);
                seq += 1;
            }
        }
        let ended = matches!(event, InputEvent::MeetingEnd { .. });
        events.push(event);
        actions.extend(out);
        if ended {
            break;
        }
    }

    let report = driver
        .engine()
        .ok_or(Error::NotStarted)?
        .finalize()?;
    Ok(SimResult {
        events,
        actions,
        report,
        table,
    })
}
