//! The co-host as a pure fold: `(state, event) -> (state', actions)`.
//!
//! Wall-clock time is never read; every timestamp comes from the input
//! stream. A failed step leaves the state untouched.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ask::{self, DialogueSession, InterventionActivation, Stage};
use crate::error::{Error, Result};
use crate::intervene::{self, InterventionState, QueuedMessage, VisualizationSpec};
use crate::meeting::{
    validate_roster, ChatEvent, MeetingConfig, ParticipantId, RosterEntry, SpeakingLedger,
    VoiceEvent,
};
use crate::observe::{self, TriggerDecision, TriggerReason};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InputEvent {
    MeetingStart {
        t_ms: u64,
        config: MeetingConfig,
        roster: Vec<RosterEntry>,
    },
    Voice(VoiceEvent),
    Chat(ChatEvent),
    Tick {
        t: u64,
    },
    MeetingEnd {
        t_ms: u64,
    },
}

impl InputEvent {
    pub fn t_ms(&self) -> u64 {
        match self {
            InputEvent::MeetingStart { t_ms, .. } | InputEvent::MeetingEnd { t_ms } => *t_ms,
            InputEvent::Voice(v) => v.t_ms,
            InputEvent::Chat(c) => c.t_ms,
            InputEvent::Tick { t } => t * 1000,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            InputEvent::MeetingStart { .. } => "meeting_start",
            InputEvent::Voice(_) => "voice",
            InputEvent::Chat(_) => "chat",
            InputEvent::Tick { .. } => "tick",
            InputEvent::MeetingEnd { .. } => "meeting_end",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum OutputAction {
    DirectMessage {
        t_ms: u64,
        to: ParticipantId,
        text: String,
        chart: Option<VisualizationSpec>,
    },
    LogEntry {
        t_ms: u64,
        text: String,
    },
}

impl OutputAction {
    pub fn t_ms(&self) -> u64 {
        match self {
            OutputAction::DirectMessage { t_ms, .. } | OutputAction::LogEntry { t_ms, .. } => *t_ms,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnginePhase {
    Observing,
    Asking,
    Intervening,
    Ended,
}

/// Snapshot of the Ask-phase trigger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriggerRecord {
    pub t: u64,
    pub reason: TriggerReason,
    pub under: Vec<ParticipantId>,
    pub over: Vec<ParticipantId>,
    pub cumulative: BTreeMap<ParticipantId, u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeetingReport {
    pub ended_t_ms: u64,
    pub cumulative: BTreeMap<ParticipantId, u64>,
    pub trigger: Option<TriggerRecord>,
    pub sessions: Vec<DialogueSession>,
    pub activation: InterventionActivation,
    pub interventions: Vec<InterventionState>,
    pub delivered: Vec<QueuedMessage>,
    pub dropped: Vec<QueuedMessage>,
}

pub fn intro_text(host: &ParticipantId) -> String {
    format!(
        "Hi everyone! I'm the virtual co-host for this meeting. {host} is the host. \
         I'll be observing conversational dynamics and may reach out to some of you \
         privately later in the meeting."
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct Engine {
    config: MeetingConfig,
    roster: Vec<RosterEntry>,
    host: ParticipantId,
    ledger: SpeakingLedger,
    phase: EnginePhase,
    trigger: Option<TriggerRecord>,
    sessions: Vec<DialogueSession>,
    activation: InterventionActivation,
    over_activated: bool,
    interventions: Vec<InterventionState>,
    queue: Vec<QueuedMessage>,
    delivered: Vec<QueuedMessage>,
    dropped: Vec<QueuedMessage>,
    log: Vec<OutputAction>,
    last_t_ms: u64,
    ended_t_ms: Option<u64>,
}

impl Engine {
    /// Starts a meeting and greets every human participant.
    pub fn init(
        config: MeetingConfig,
        roster: Vec<RosterEntry>,
        t_ms: u64,
    ) -> Result<(Self, Vec<OutputAction>)> {
        config.validate()?;
        let host = validate_roster(&roster)?;
        let ledger = SpeakingLedger::new(&roster);
        let mut engine = Self {
            config,
            host,
            ledger,
            phase: EnginePhase::Observing,
            trigger: None,
            sessions: Vec::new(),
            activation: InterventionActivation::default(),
            over_activated: false,
            interventions: Vec::new(),
            queue: Vec::new(),
            delivered: Vec::new(),
            dropped: Vec::new(),
            log: Vec::new(),
            last_t_ms: t_ms,
            ended_t_ms: None,
            roster,
        };
        let intro = intro_text(&engine.host);
        let actions = engine
            .roster
            .iter()
            .filter(|e| e.role.is_human())
            .map(|e| OutputAction::DirectMessage {
                t_ms,
                to: e.id.clone(),
                text: intro.clone(),
                chart: None,
            })
            .collect::<Vec<_>>();
        engine.log.extend(actions.iter().cloned());
        Ok((engine, actions))
    }

    pub fn config(&self) -> &MeetingConfig {
        &self.config
    }
    pub fn roster(&self) -> &[RosterEntry] {
        &self.roster
    }
    pub fn host(&self) -> &ParticipantId {
        &self.host
    }
    pub fn ledger(&self) -> &SpeakingLedger {
        &self.ledger
    }
    pub fn phase(&self) -> EnginePhase {
        self.phase
    }
    pub fn trigger(&self) -> Option<&TriggerRecord> {
        self.trigger.as_ref()
    }
    pub fn sessions(&self) -> &[DialogueSession] {
        &self.sessions
    }
    pub fn interventions(&self) -> &[InterventionState] {
        &self.interventions
    }
    pub fn queue(&self) -> &[QueuedMessage] {
        &self.queue
    }
    pub fn delivered(&self) -> &[QueuedMessage] {
        &self.delivered
    }
    /// Every action emitted so far, in emission order.
    pub fn log(&self) -> &[OutputAction] {
        &self.log
    }

    pub fn step(&mut self, event: &InputEvent) -> Result<Vec<OutputAction>> {
        let t_ms = event.t_ms();
        if self.phase == EnginePhase::Ended {
            let text = format!("ignored {} event after meeting end", event.name());
            return Ok(self.emit(vec![OutputAction::LogEntry { t_ms: self.last_t_ms, text }]));
        }
        if t_ms < self.last_t_ms {
            return Err(Error::Clock(format!(
                "{} event at {t_ms} ms precedes {} ms",
                event.name(),
                self.last_t_ms
            )));
        }
        let actions = match event {
            InputEvent::MeetingStart { .. } => {
                return Err(Error::Clock("meeting already started".into()));
            }
            InputEvent::Voice(ev) => {
                self.ledger.ingest_voice(ev)?;
                Vec::new()
            }
            InputEvent::Tick { t } => {
                self.ledger.sample_tick(*t)?;
                self.on_tick(*t)
            }
            InputEvent::Chat(ev) => {
                if ev.text.trim().is_empty() {
                    return Err(Error::Config("chat text must not be empty".into()));
                }
                if !self.ledger.role(&ev.from)?.is_human() {
                    return Err(Error::Roster("chat from the co-host".into()));
                }
                self.on_chat(ev)
            }
            InputEvent::MeetingEnd { t_ms } => self.on_end(*t_ms),
        };
        self.last_t_ms = t_ms;
        Ok(self.emit(actions))
    }

    pub fn finalize(&self) -> Result<MeetingReport> {
        let ended_t_ms = self.ended_t_ms.ok_or(Error::NotEnded)?;
        Ok(MeetingReport {
            ended_t_ms,
            cumulative: self.ledger.totals().map(|(p, s)| (p.clone(), s)).collect(),
            trigger: self.trigger.clone(),
            sessions: self.sessions.clone(),
            activation: self.activation.clone(),
            interventions: self.interventions.clone(),
            delivered: self.delivered.clone(),
            dropped: self.dropped.clone(),
        })
    }

    fn emit(&mut self, actions: Vec<OutputAction>) -> Vec<OutputAction> {
        self.log.extend(actions.iter().cloned());
        actions
    }

    fn on_tick(&mut self, t: u64) -> Vec<OutputAction> {
        let t_ms = t * 1000;
        let mut actions = Vec::new();

        let decision = observe::evaluate_trigger(&self.ledger, t, &self.config, self.trigger.is_some());
        if let TriggerDecision::EnterAsk(reason) = decision {
            let under = observe::under_participators(&self.ledger);
            let over = observe::over_participators(&self.ledger);
            let names: Vec<&str> = under.iter().map(ParticipantId::as_str).collect();
            actions.push(OutputAction::LogEntry {
                t_ms,
                text: format!(
                    "ask phase entered at t={t}s ({}); asking [{}]",
                    reason.label(),
                    names.join(", ")
                ),
            });
            let (sessions, messages) = ask::open_sessions(&under);
            actions.extend(messages.into_iter().map(|(to, text)| OutputAction::DirectMessage {
                t_ms,
                to,
                text,
                chart: None,
            }));
            self.trigger = Some(TriggerRecord {
                t,
                reason,
                under,
                over,
                cumulative: self.ledger.totals().map(|(p, s)| (p.clone(), s)).collect(),
            });
            self.sessions = sessions;
            self.phase = EnginePhase::Asking;
        }

        for msg in intervene::refresh_due(&mut self.interventions, &self.ledger, t, &self.config) {
            self.enqueue(msg);
        }

        let gate_ms = self.config.mic_quiet_gate_ms();
        for msg in intervene::gate_and_deliver(&mut self.queue, &self.ledger, t_ms, gate_ms) {
            actions.push(OutputAction::DirectMessage {
                t_ms,
                to: msg.to.clone(),
                text: msg.text.clone(),
                chart: msg.chart.clone(),
            });
            self.delivered.push(msg);
        }
        actions
    }

    fn on_chat(&mut self, ev: &ChatEvent) -> Vec<OutputAction> {
        let t_ms = ev.t_ms;
        if let Some(dropped) =
            intervene::handle_stop(&mut self.interventions, &mut self.queue, &ev.from, &ev.text)
        {
            let n = dropped.len();
            self.dropped.extend(dropped);
            // A stopped receiver hears nothing more, including questions.
            for s in self.sessions.iter_mut().filter(|s| s.participant == ev.from && s.stage.is_open()) {
                s.stage = Stage::Silent;
            }
            return vec![OutputAction::LogEntry {
                t_ms,
                text: format!("{} asked to stop; dropped {n} queued message(s)", ev.from),
            }];
        }

        let Some(session) = self
            .sessions
            .iter_mut()
            .find(|s| s.participant == ev.from && s.stage.is_open())
        else {
            return vec![OutputAction::LogEntry {
                t_ms,
                text: format!("ignored chat from {} (no open dialogue)", ev.from),
            }];
        };
        let reply = ask::parse_reply(session.stage, &ev.text);
        let advance = ask::advance(session, reply);
        let mut actions: Vec<OutputAction> = advance
            .messages
            .into_iter()
            .map(|text| OutputAction::DirectMessage {
                t_ms,
                to: ev.from.clone(),
                text,
                chart: None,
            })
            .collect();
        actions.extend(self.apply_activation(&advance.activation, t_ms));
        actions
    }

    fn apply_activation(&mut self, partial: &InterventionActivation, t_ms: u64) -> Vec<OutputAction> {
        if partial.is_empty() {
            return Vec::new();
        }
        let mut logs = Vec::new();
        self.activation = std::mem::take(&mut self.activation).merge(partial);
        self.phase = EnginePhase::Intervening;

        let mut delta = InterventionActivation::default();
        if partial.host_intervention {
            let host = self.host.clone();
            match self.interventions.iter_mut().find(|s| s.receiver == host && s.kind != intervene::InterventionKind::OverParticipator) {
                Some(state) => {
                    if let Some(msg) = intervene::upgrade_host(state, partial.host_reason, &self.ledger, t_ms) {
                        logs.push(format!("host intervention widened to {:?}", state.reason));
                        self.enqueue(msg);
                    }
                }
                None => {
                    delta.host_intervention = true;
                    delta.host_reason = partial.host_reason;
                }
            }
        }
        if partial.over_participator_intervention && !self.over_activated {
            self.over_activated = true;
            delta.over_participator_intervention = true;
        }
        let over = self
            .trigger
            .as_ref()
            .map(|r| r.over.clone())
            .unwrap_or_default();
        let activated = intervene::activate(&delta, &self.ledger, &over, &self.host, t_ms, &self.config);
        for state in &activated.states {
            logs.push(format!("activated {:?} intervention for {}", state.kind, state.receiver));
        }
        for (p, why) in activated.skipped {
            logs.push(format!("skipped over-participator intervention for {p}: {why}"));
        }
        self.interventions.extend(activated.states);
        for msg in activated.messages {
            self.enqueue(msg);
        }
        for msg in intervene::forward_feedback(&self.host, &partial.feedback_notes, t_ms) {
            logs.push("queued anonymous feedback for the host".to_string());
            self.enqueue(msg);
        }
        logs.into_iter()
            .map(|text| OutputAction::LogEntry { t_ms, text })
            .collect()
    }

    /// Queues `msg` unless its receiver has stopped the co-host.
    fn enqueue(&mut self, msg: QueuedMessage) {
        let stopped = self
            .interventions
            .iter()
            .any(|s| s.receiver == msg.to && s.stopped);
        if stopped {
            self.dropped.push(msg);
        } else {
            self.queue.push(msg);
        }
    }

    fn on_end(&mut self, t_ms: u64) -> Vec<OutputAction> {
        let pending = self.queue.len();
        self.dropped.append(&mut self.queue);
        for s in self.sessions.iter_mut().filter(|s| s.stage.is_open()) {
            s.stage = Stage::Silent;
        }
        self.phase = EnginePhase::Ended;
        self.ended_t_ms = Some(t_ms);
        vec![OutputAction::LogEntry {
            t_ms,
            text: format!(
                "meeting ended at t={t_ms}ms; delivered {} message(s), dropped {pending} pending",
                self.delivered.len()
            ),
        }]
    }
}

/// Feeds a raw event stream, starting the engine on `MeetingStart`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Driver {
    engine: Option<Engine>,
}

impl Driver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn engine(&self) -> Option<&Engine> {
        self.engine.as_ref()
    }

    pub fn feed(&mut self, event: &InputEvent) -> Result<Vec<OutputAction>> {
        match (&mut self.engine, event) {
            (None, InputEvent::MeetingStart { t_ms, config, roster }) => {
                let (engine, actions) = Engine::init(config.clone(), roster.clone(), *t_ms)?;
                self.engine = Some(engine);
                Ok(actions)
            }
            (None, _) => Err(Error::NotStarted),
            (Some(engine), ev) => engine.step(ev),
        }
    }
}
