//! Host and over-participator interventions: activation, periodic chart
//! refreshes, mic-quiet delivery gating, and the "stop" command.

use serde::{Deserialize, Serialize};

use crate::ask::{HostReason, InterventionActivation};
use crate::meeting::{MeetingConfig, Mean, ParticipantId, SpeakingLedger};

pub const HOST_EXPRESSION_TEXT: &str = "A participant has told me they have not felt able to express themselves, put forward their ideas, or disagree with others when necessary.";
pub const HOST_INHIBITION_TEXT: &str = "A participant has told me they have felt inhibited from participating because of the behavior of other members.";
pub const HOST_STRATEGIES_TEXT: &str = "Some strategies for facilitating more inclusively:\n- Invite quieter members to share their views by name.\n- Leave a pause after questions so everyone has room to answer.\n- Ask explicitly for different or opposing opinions.\nThe chart shows how long each member has spoken so far. Reply \"stop\" to stop these messages.";
pub const HOST_REFRESH_TEXT: &str =
    "Updated speaking times for the members of your meeting.";
pub const OVER_PARTICIPATOR_TEXT: &str = "You have spoken more than others in this meeting. Please let others contribute more:\n- Ask others what they think before sharing your own view.\n- Keep your turns short.\n- Leave pauses so others can join in.\nThe chart compares your speaking time with the average of the other members. Reply \"stop\" to stop these messages.";
pub const OVER_PARTICIPATOR_REFRESH_TEXT: &str =
    "Updated: your speaking time compared with the average of the other members.";
pub const FEEDBACK_PREFIX: &str = "Anonymous feedback from a meeting participant: ";
pub const AVERAGE_LABEL: &str = "Average of others";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterventionKind {
    HostExpression,
    HostInhibition,
    OverParticipator,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterventionState {
    pub kind: InterventionKind,
    pub receiver: ParticipantId,
    pub active: bool,
    pub stopped: bool,
    /// Elapsed second the intervention was activated at.
    pub activated_t: u64,
    pub next_refresh_t: u64,
    /// Reasons covered so far; `None` for over-participator interventions.
    pub reason: HostReason,
}

impl InterventionState {
    pub fn is_live(&self) -> bool {
        self.active && !self.stopped
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChartKind {
    PerMember,
    SelfVsAverage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bar {
    pub label: String,
    pub seconds: f64,
    pub highlight: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VisualizationSpec {
    pub kind: ChartKind,
    pub bars: Vec<Bar>,
    pub as_of_t: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueuedMessage {
    pub to: ParticipantId,
    pub text: String,
    pub chart: Option<VisualizationSpec>,
    pub enqueued_t: u64,
    pub delivered_t: Option<u64>,
}

impl QueuedMessage {
    fn new(to: &ParticipantId, text: String, chart: Option<VisualizationSpec>, t_ms: u64) -> Self {
        Self {
            to: to.clone(),
            text,
            chart,
            enqueued_t: t_ms,
            delivered_t: None,
        }
    }
}

/// Per-member chart for the host: quietest first, below-average highlighted.
pub fn build_host_chart(ledger: &SpeakingLedger) -> VisualizationSpec {
    let avg = ledger.average_nonhost().ok();
    let mut members: Vec<(u64, &ParticipantId)> =
        ledger.members().map(|(p, s)| (s, p)).collect();
    members.sort();
    let bars = members
        .into_iter()
        .map(|(s, p)| Bar {
            label: p.to_string(),
            seconds: s as f64,
            highlight: avg.is_some_and(|a| a.is_above(s)),
        })
        .collect();
    VisualizationSpec {
        kind: ChartKind::PerMember,
        bars,
        as_of_t: ledger.elapsed(),
    }
}

/// `p` against the mean of every other member. `None` with fewer than two
/// members.
pub fn build_self_vs_avg_chart(ledger: &SpeakingLedger, p: &ParticipantId) -> Option<VisualizationSpec> {
    let own = ledger.members().find(|(id, _)| *id == p)?.1;
    let others = Mean::of(ledger.members().filter(|(id, _)| *id != p).map(|(_, s)| s))?;
    Some(VisualizationSpec {
        kind: ChartKind::SelfVsAverage,
        bars: vec![
            Bar {
                label: p.to_string(),
                seconds: own as f64,
                highlight: true,
            },
            Bar {
                label: AVERAGE_LABEL.to_string(),
                seconds: others.as_f64(),
                highlight: false,
            },
        ],
        as_of_t: ledger.elapsed(),
    })
}

fn host_text(reason: HostReason) -> String {
    let problem = match reason {
        HostReason::Expression | HostReason::None => HOST_EXPRESSION_TEXT.to_string(),
        HostReason::Inhibition => HOST_INHIBITION_TEXT.to_string(),
        HostReason::Both => format!("{HOST_EXPRESSION_TEXT}\n{HOST_INHIBITION_TEXT}"),
    };
    format!("{problem}\n\n{HOST_STRATEGIES_TEXT}")
}

/// First tick at or after `t_ms`.
fn tick_at_or_after(t_ms: u64) -> u64 {
    t_ms.div_ceil(1000)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Activated {
    pub states: Vec<InterventionState>,
    pub messages: Vec<QueuedMessage>,
    /// Receivers that could not be given a chart, with the reason.
    pub skipped: Vec<(ParticipantId, String)>,
}

/// Starts the interventions requested by `activation`.
///
/// Feedback notes are not handled here; see [`forward_feedback`].
pub fn activate(
    activation: &InterventionActivation,
    ledger: &SpeakingLedger,
    over_list: &[ParticipantId],
    host: &ParticipantId,
    t_ms: u64,
    config: &MeetingConfig,
) -> Activated {
    let mut out = Activated::default();
    let t0 = tick_at_or_after(t_ms);
    if activation.host_intervention {
        let kind = match activation.host_reason {
            HostReason::Inhibition => InterventionKind::HostInhibition,
            _ => InterventionKind::HostExpression,
        };
        let reason = match activation.host_reason {
            HostReason::None => HostReason::Expression,
            r => r,
        };
        out.states.push(InterventionState {
            kind,
            receiver: host.clone(),
            active: true,
            stopped: false,
            activated_t: t0,
            next_refresh_t: t0 + config.refresh_interval,
            reason,
        });
        out.messages.push(QueuedMessage::new(
            host,
            host_text(reason),
            Some(build_host_chart(ledger)),
            t_ms,
        ));
    }
    if activation.over_participator_intervention {
        for p in over_list {
            let Some(chart) = build_self_vs_avg_chart(ledger, p) else {
                out.skipped
                    .push((p.clone(), "fewer than two non-host members".to_string()));
                continue;
            };
            out.states.push(InterventionState {
                kind: InterventionKind::OverParticipator,
                receiver: p.clone(),
                active: true,
                stopped: false,
                activated_t: t0,
                next_refresh_t: t0 + config.refresh_interval,
                reason: HostReason::None,
            });
            out.messages.push(QueuedMessage::new(
                p,
                OVER_PARTICIPATOR_TEXT.to_string(),
                Some(chart),
                t_ms,
            ));
        }
    }
    out
}

/// Widens an active host intervention to cover `reason`, returning the
/// message announcing the new concern. Refresh timing is unchanged.
pub fn upgrade_host(
    state: &mut InterventionState,
    reason: HostReason,
    ledger: &SpeakingLedger,
    t_ms: u64,
) -> Option<QueuedMessage> {
    if state.reason.covers(reason) {
        return None;
    }
    let added = match (state.reason, reason) {
        (HostReason::Expression, _) => HostReason::Inhibition,
        (HostReason::Inhibition, _) => HostReason::Expression,
        (_, r) => r,
    };
    state.reason = state.reason.merge(reason);
    if !state.is_live() {
        return None;
    }
    Some(QueuedMessage::new(
        &state.receiver,
        host_text(added),
        Some(build_host_chart(ledger)),
        t_ms,
    ))
}

/// Enqueues a refreshed chart for every live state whose refresh is due at
/// tick `t`.
pub fn refresh_due(
    states: &mut [InterventionState],
    ledger: &SpeakingLedger,
    t: u64,
    config: &MeetingConfig,
) -> Vec<QueuedMessage> {
    let mut out = Vec::new();
    for state in states.iter_mut().filter(|s| s.is_live()) {
        if t < state.next_refresh_t {
            continue;
        }
        let (text, chart) = match state.kind {
            InterventionKind::OverParticipator => (
                OVER_PARTICIPATOR_REFRESH_TEXT,
                build_self_vs_avg_chart(ledger, &state.receiver),
            ),
            _ => (HOST_REFRESH_TEXT, Some(build_host_chart(ledger))),
        };
        out.push(QueuedMessage::new(&state.receiver, text.to_string(), chart, t * 1000));
        state.next_refresh_t += config.refresh_interval;
    }
    out
}

/// Removes and returns every queued message whose receiver has been quiet
/// for at least `gate_ms`, in enqueue order.
pub fn gate_and_deliver(
    queue: &mut Vec<QueuedMessage>,
    ledger: &SpeakingLedger,
    t_ms: u64,
    gate_ms: u64,
) -> Vec<QueuedMessage> {
    let (mut ready, waiting): (Vec<_>, Vec<_>) = queue.drain(..).partition(|m| {
        ledger
            .quiet_duration(&m.to, t_ms)
            .is_ok_and(|quiet| quiet >= gate_ms)
    });
    *queue = waiting;
    for m in &mut ready {
        m.delivered_t = Some(t_ms);
    }
    ready
}

/// Applies a "stop" command. Returns the undelivered messages dropped, or
/// `None` when `text` is not a stop or `from` has no live intervention.
pub fn handle_stop(
    states: &mut [InterventionState],
    queue: &mut Vec<QueuedMessage>,
    from: &ParticipantId,
    text: &str,
) -> Option<Vec<QueuedMessage>> {
    if !text.trim().eq_ignore_ascii_case("stop") {
        return None;
    }
    let mut hit = false;
    for state in states.iter_mut().filter(|s| &s.receiver == from && s.is_live()) {
        state.stopped = true;
        hit = true;
    }
    if !hit {
        return None;
    }
    let (dropped, kept): (Vec<_>, Vec<_>) = queue.drain(..).partition(|m| &m.to == from);
    *queue = kept;
    Some(dropped)
}

/// One anonymous message to the host per note.
pub fn forward_feedback(host: &ParticipantId, notes: &[String], t_ms: u64) -> Vec<QueuedMessage> {
    notes
        .iter()
        .map(|note| QueuedMessage::new(host, format!("{FEEDBACK_PREFIX}{note}"), None, t_ms))
        .collect()
}
