//! Scenario files: scripted or seeded meetings.
//!
//! A scenario is a JSON document:
//!
//! ```json
//! {
//!   "version": 1,
//!   "seed": 7,
//!   "config": { "scheduled_duration": 1800 },
//!   "participants": [
//!     { "id": "H", "role": "host", "speak": { "intervals": [[0, 60000]] } },
//!     { "id": "A", "role": "member",
//!       "speak": { "stochastic": { "turn_rate": 2.0, "turn_length_mean": 12.0,
//!                                  "talkativeness_weight": 1.0 } },
//!       "reply": { "rules": [ { "match": { "question": 1 }, "reply": "no", "delay_ms": 4000 } ],
//!                  "default": "ignore" } }
//!   ]
//! }
//! ```
//!
//! Interval bounds are milliseconds; a speaker in `[start, end]` is voice
//! active on the half-open span `(start, end]`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ask::QUESTIONS;
use crate::error::{Error, Result};
use crate::meeting::{validate_roster, MeetingConfig, ParticipantId, Role, RosterEntry};
use crate::simulator::speech;

pub const SCENARIO_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub version: u32,
    #[serde(default)]
    pub seed: u64,
    pub config: MeetingConfig,
    pub participants: Vec<ScenarioParticipant>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioParticipant {
    pub id: ParticipantId,
    pub role: Role,
    #[serde(default)]
    pub speak: SpeakScript,
    #[serde(default)]
    pub reply: ReplyPolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SpeakScript {
    Intervals(Vec<(u64, u64)>),
    Stochastic(StochasticSpeech),
}

impl Default for SpeakScript {
    fn default() -> Self {
        SpeakScript::Intervals(Vec::new())
    }
}

/// Parameters of the seeded turn-taking model (see [`speech`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StochasticSpeech {
    /// Turns per minute this speaker contributes to the shared turn rate.
    pub turn_rate: f64,
    /// Mean turn length, seconds.
    pub turn_length_mean: f64,
    pub talkativeness_weight: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplyPolicy {
    #[serde(default)]
    pub rules: Vec<ReplyRule>,
    #[serde(default)]
    pub default: DefaultReply,
}

/// Fires at most once, on the first co-host message it matches.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplyRule {
    #[serde(rename = "match")]
    pub matcher: ReplyMatch,
    pub reply: String,
    #[serde(default)]
    pub delay_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplyMatch {
    /// The message contains question 1, 2 or 3.
    Question(u8),
    /// The message contains this text.
    Pattern(String),
}

impl ReplyMatch {
    pub fn matches(&self, text: &str) -> bool {
        match self {
            ReplyMatch::Question(i) => crate::ask::question_text(*i).is_some_and(|q| text.contains(q)),
            ReplyMatch::Pattern(p) => text.contains(p.as_str()),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefaultReply {
    #[default]
    Ignore,
    /// Answer "no" to any question no rule handled.
    EchoNo,
}

/// Tracks which one-shot rules have fired for each participant.
#[derive(Debug, Clone, Default)]
pub struct ReplyState {
    used: BTreeMap<ParticipantId, Vec<bool>>,
}

impl ReplyState {
    /// The reply (text, delay) to a co-host message, if any.
    pub fn respond(&mut self, p: &ScenarioParticipant, text: &str) -> Option<(String, u64)> {
        let used = self
            .used
            .entry(p.id.clone())
            .or_insert_with(|| vec![false; p.reply.rules.len()]);
        for (rule, fired) in p.reply.rules.iter().zip(used.iter_mut()) {
            if !*fired && rule.matcher.matches(text) {
                *fired = true;
                return Some((rule.reply.clone(), rule.delay_ms));
            }
        }
        match p.reply.default {
            DefaultReply::EchoNo if QUESTIONS.iter().any(|q| text.contains(q)) => {
                Some(("no".to_string(), 0))
            }
            _ => None,
        }
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let scenario: Scenario =
            serde_json::from_str(text).map_err(|e| Error::Scenario(e.to_string()))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn duration_ms(&self) -> u64 {
        self.config.scheduled_duration * 1000
    }

    pub fn roster(&self) -> Vec<RosterEntry> {
        self.participants
            .iter()
            .map(|p| RosterEntry {
                id: p.id.clone(),
                role: p.role,
            })
            .collect()
    }

    pub fn participant(&self, id: &ParticipantId) -> Option<&ScenarioParticipant> {
        self.participants.iter().find(|p| &p.id == id)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != SCENARIO_VERSION {
            return Err(Error::Scenario(format!(
                "unsupported scenario version {} (expected {SCENARIO_VERSION})",
                self.version
            )));
        }
        self.config
            .validate()
            .map_err(|e| Error::Scenario(e.to_string()))?;
        validate_roster(&self.roster()).map_err(|e| Error::Scenario(e.to_string()))?;
        let end = self.duration_ms();
        for p in &self.participants {
            let bad = |why: String| Error::Scenario(format!("participant `{}`: {why}", p.id));
            match &p.speak {
                SpeakScript::Intervals(list) => {
                    if p.role == Role::CoHost && !list.is_empty() {
                        return Err(bad("the co-host cannot speak".into()));
                    }
                    let mut prev_end = None;
                    for &(start, stop) in list {
                        if start >= stop {
                            return Err(bad(format!("interval [{start}, {stop}] is empty")));
                        }
                        if stop > end {
                            return Err(bad(format!("interval ends after the meeting ({stop} > {end})")));
                        }
                        if prev_end.is_some_and(|e| start < e) {
                            return Err(bad("intervals overlap or are unsorted".into()));
                        }
                        prev_end = Some(stop);
                    }
                }
                SpeakScript::Stochastic(s) => {
                    if p.role == Role::CoHost {
                        return Err(bad("the co-host cannot speak".into()));
                    }
                    let ok = s.turn_rate.is_finite()
                        && s.turn_rate > 0.0
                        && s.turn_length_mean.is_finite()
                        && s.turn_length_mean > 0.0
                        && s.talkativeness_weight.is_finite()
                        && s.talkativeness_weight >= 0.0;
                    if !ok {
                        return Err(bad("stochastic parameters must be positive and finite".into()));
                    }
                }
            }
            for rule in &p.reply.rules {
                if let ReplyMatch::Question(i) = rule.matcher {
                    if !(1..=3).contains(&i) {
                        return Err(bad(format!("no question {i}")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Every participant's speaking intervals, explicit and seed-generated,
    /// with touching intervals merged.
    pub fn expand_intervals(&self) -> BTreeMap<ParticipantId, Vec<(u64, u64)>> {
        let mut out: BTreeMap<ParticipantId, Vec<(u64, u64)>> = BTreeMap::new();
        let mut stochastic = Vec::new();
        for p in &self.participants {
            match &p.speak {
                SpeakScript::Intervals(list) => {
                    out.insert(p.id.clone(), list.clone());
                }
                SpeakScript::Stochastic(model) => {
                    out.insert(p.id.clone(), Vec::new());
                    stochastic.push((p.id.clone(), model.clone()));
                }
            }
        }
        for (id, list) in speech::turn_taking(&stochastic, self.duration_ms(), self.seed) {
            out.insert(id, list);
        }
        for list in out.values_mut() {
            *list = merge_touching(std::mem::take(list));
        }
        out
    }
}

fn merge_touching(list: Vec<(u64, u64)>) -> Vec<(u64, u64)> {
    let mut merged: Vec<(u64, u64)> = Vec::with_capacity(list.len());
    for (start, end) in list {
        match merged.last_mut() {
            Some(last) if last.1 == start => last.1 = end,
            _ => merged.push((start, end)),
        }
    }
    merged
}
