#![allow(dead_code)]

use std::collections::BTreeMap;

use cohost::engine::{Engine, InputEvent, OutputAction};
use cohost::meeting::{ChatEvent, MeetingConfig, ParticipantId, Role, RosterEntry, VoiceEvent};
use cohost::simulator::Scenario;

pub fn pid(s: &str) -> ParticipantId {
    ParticipantId::new(s).unwrap()
}

pub fn roster(host: &str, members: &[&str]) -> Vec<RosterEntry> {
    let mut r = vec![RosterEntry::new(host, Role::Host).unwrap()];
    r.extend(members.iter().map(|m| RosterEntry::new(m, Role::Member).unwrap()));
    r
}

pub fn scenario_file(name: &str) -> Scenario {
    let path = format!("{}/../../scenarios/{name}", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
    Scenario::from_json(&text).unwrap()
}

/// Speaking intervals `(on, off]` per participant, rebuilt from an event
/// stream. A voice still on at the end runs to `u64::MAX`.
pub fn voice_intervals(events: &[InputEvent]) -> BTreeMap<ParticipantId, Vec<(u64, u64)>> {
    let mut open: BTreeMap<ParticipantId, u64> = BTreeMap::new();
    let mut out: BTreeMap<ParticipantId, Vec<(u64, u64)>> = BTreeMap::new();
    for ev in events {
        if let InputEvent::Voice(v) = ev {
            if v.active {
                open.entry(v.participant.clone()).or_insert(v.t_ms);
            } else if let Some(start) = open.remove(&v.participant) {
                out.entry(v.participant.clone()).or_default().push((start, v.t_ms));
            }
        }
    }
    for (p, start) in open {
        out.entry(p).or_default().push((start, u64::MAX));
    }
    out
}

pub fn messages_to<'a>(actions: &'a [OutputAction], to: &str) -> Vec<(u64, &'a str)> {
    actions
        .iter()
        .filter_map(|a| match a {
            OutputAction::DirectMessage { t_ms, to: p, text, .. } if p.as_str() == to => {
                Some((*t_ms, text.as_str()))
            }
            _ => None,
        })
        .collect()
}

/// Drives an engine by hand, collecting everything it emits.
pub struct Harness {
    pub engine: Engine,
    pub actions: Vec<OutputAction>,
    pub next_tick: u64,
}

impl Harness {
    pub fn new(duration: u64, host: &str, members: &[&str]) -> Self {
        let (engine, actions) =
            Engine::init(MeetingConfig::with_duration(duration), roster(host, members), 0).unwrap();
        Self {
            engine,
            actions,
            next_tick: 1,
        }
    }

    pub fn step(&mut self, ev: InputEvent) -> Vec<OutputAction> {
        let out = self.engine.step(&ev).unwrap();
        self.actions.extend(out.iter().cloned());
        out
    }

    /// Ticks up to and including `t`.
    pub fn tick_to(&mut self, t: u64) {
        while self.next_tick <= t {
            let t = self.next_tick;
            self.step(InputEvent::Tick { t });
            self.next_tick += 1;
        }
    }

    pub fn voice(&mut self, p: &str, active: bool, t_ms: u64) {
        self.tick_to(t_ms / 1000);
        self.step(InputEvent::Voice(VoiceEvent {
            participant: pid(p),
            active,
            t_ms,
        }));
    }

    /// Ticks up to `t_ms` first, then chats.
    pub fn chat(&mut self, from: &str, text: &str, t_ms: u64) -> Vec<OutputAction> {
        self.tick_to(t_ms / 1000);
        self.step(InputEvent::Chat(ChatEvent {
            from: pid(from),
            text: text.to_string(),
            t_ms,
        }))
    }

    pub fn end(&mut self) {
        let duration = self.engine.config().scheduled_duration;
        self.tick_to(duration);
        self.step(InputEvent::MeetingEnd {
            t_ms: duration * 1000,
        });
    }
}
