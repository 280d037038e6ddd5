//! Three-question private dialogue with under-participators.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::meeting::ParticipantId;

pub const QUESTION_1: &str = "Have you felt able to express yourself, put forward your own ideas, and contradict others when necessary?";
pub const QUESTION_2: &str = "Have you felt inhibited from participating in the discussion because of the behavior of other meeting members (other than the host)?";
pub const QUESTION_3: &str =
    "Is there any feedback or advice you'd like me to anonymously pass on to the host?";

pub const QUESTIONS: [&str; 3] = [QUESTION_1, QUESTION_2, QUESTION_3];

pub const ACK_NEGATIVE: &str =
    "Thank you for letting me know. I will intervene to help improve the meeting.";
pub const CLOSE_WILL_INTERVENE: &str =
    "Thank you for your answers. I will intervene to help improve the meeting.";
pub const CLOSE_ALL_CLEAR: &str =
    "Thank you for your answers. I won't message you about this again.";
pub const CLOSE_FEEDBACK_NOTE: &str =
    "Your feedback will be passed on to the host anonymously.";
pub const NOT_UNDERSTOOD_YES_NO: &str =
    "Sorry, I didn't understand that. Please reply \"yes\" or \"no\".";
pub const NOT_UNDERSTOOD_FEEDBACK: &str =
    "Sorry, I didn't understand that. Please type your feedback, or reply \"no\".";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    AwaitingQ1,
    AwaitingQ2,
    AwaitingQ3,
    Done,
    Silent,
}

impl Stage {
    pub fn question(self) -> Option<u8> {
        match self {
            Stage::AwaitingQ1 => Some(1),
            Stage::AwaitingQ2 => Some(2),
            Stage::AwaitingQ3 => Some(3),
            Stage::Done | Stage::Silent => None,
        }
    }

    pub fn is_open(self) -> bool {
        self.question().is_some()
    }
}

pub fn question_text(index: u8) -> Option<&'static str> {
    QUESTIONS.get(usize::from(index).checked_sub(1)?).copied()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "text", rename_all = "snake_case")]
pub enum Answer {
    Yes,
    No,
    FreeText(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reply {
    Valid(Answer),
    Unsupported,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HostReason {
    #[default]
    None,
    Expression,
    Inhibition,
    Both,
}

impl HostReason {
    pub fn merge(self, other: HostReason) -> HostReason {
        use HostReason::*;
        match (self, other) {
            (None, x) | (x, None) => x,
            (Expression, Expression) => Expression,
            (Inhibition, Inhibition) => Inhibition,
            _ => Both,
        }
    }

    /// True when `self` already covers every reason in `other`.
    pub fn covers(self, other: HostReason) -> bool {
        self.merge(other) == self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterventionActivation {
    pub host_intervention: bool,
    pub host_reason: HostReason,
    pub over_participator_intervention: bool,
    pub feedback_notes: Vec<String>,
}

impl InterventionActivation {
    pub fn is_empty(&self) -> bool {
        !self.host_intervention && !self.over_participator_intervention && self.feedback_notes.is_empty()
    }

    pub fn merge(mut self, other: &InterventionActivation) -> Self {
        self.host_intervention |= other.host_intervention;
        self.host_reason = self.host_reason.merge(other.host_reason);
        self.over_participator_intervention |= other.over_participator_intervention;
        self.feedback_notes.extend(other.feedback_notes.iter().cloned());
        self
    }
}

/// OR of all activations, with feedback notes in session order.
pub fn aggregate<'a>(
    activations: impl IntoIterator<Item = &'a InterventionActivation>,
) -> InterventionActivation {
    activations
        .into_iter()
        .fold(InterventionActivation::default(), |acc, a| acc.merge(a))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueSession {
    pub participant: ParticipantId,
    pub stage: Stage,
    pub answers: BTreeMap<u8, Answer>,
}

impl DialogueSession {
    pub fn new(participant: ParticipantId) -> Self {
        Self {
            participant,
            stage: Stage::AwaitingQ1,
            answers: BTreeMap::new(),
        }
    }

    fn had_negative(&self) -> bool {
        self.answers.get(&1) == Some(&Answer::No) || self.answers.get(&2) == Some(&Answer::Yes)
    }
}

/// One session per target, each with the first question.
pub fn open_sessions(targets: &[ParticipantId]) -> (Vec<DialogueSession>, Vec<(ParticipantId, String)>) {
    let sessions = targets.iter().cloned().map(DialogueSession::new).collect();
    let messages = targets
        .iter()
        .map(|p| (p.clone(), QUESTION_1.to_string()))
        .collect();
    (sessions, messages)
}

pub fn parse_reply(stage: Stage, text: &str) -> Reply {
    let normalized = text.trim().to_lowercase();
    if normalized.is_empty() {
        return Reply::Unsupported;
    }
    match (stage, normalized.as_str()) {
        (Stage::AwaitingQ1 | Stage::AwaitingQ2, "yes" | "y") => Reply::Valid(Answer::Yes),
        (Stage::AwaitingQ1 | Stage::AwaitingQ2 | Stage::AwaitingQ3, "no" | "n") => {
            Reply::Valid(Answer::No)
        }
        (Stage::AwaitingQ3, _) => Reply::Valid(Answer::FreeText(text.to_string())),
        _ => Reply::Unsupported,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Advance {
    /// Messages to the session's participant, in order.
    pub messages: Vec<String>,
    pub activation: InterventionActivation,
}

/// Feeds one reply into a session.
///
/// Closed sessions ignore input and produce nothing.
pub fn advance(session: &mut DialogueSession, reply: Reply) -> Advance {
    let Some(index) = session.stage.question() else {
        return Advance::default();
    };
    let answer = match reply {
        Reply::Unsupported => {
            let prompt = if index == 3 {
                NOT_UNDERSTOOD_FEEDBACK
            } else {
                NOT_UNDERSTOOD_YES_NO
            };
            let current = question_text(index).unwrap_or_default();
            return Advance {
                messages: vec![format!("{prompt}\n\n{current}")],
                activation: InterventionActivation::default(),
            };
        }
        Reply::Valid(answer) => answer,
    };

    let mut out = Advance::default();
    let negative = match (index, &answer) {
        (1, Answer::No) => {
            out.activation.host_intervention = true;
            out.activation.host_reason = HostReason::Expression;
            true
        }
        (2, Answer::Yes) => {
            out.activation.host_intervention = true;
            out.activation.host_reason = HostReason::Inhibition;
            out.activation.over_participator_intervention = true;
            true
        }
        (3, Answer::FreeText(note)) => {
            out.activation.feedback_notes.push(note.clone());
            false
        }
        _ => false,
    };
    let forwarded = matches!(answer, Answer::FreeText(_));
    session.answers.insert(index, answer);

    match index {
        1 => {
            session.stage = Stage::AwaitingQ2;
            if negative {
                out.messages.push(ACK_NEGATIVE.to_string());
            }
            out.messages.push(QUESTION_2.to_string());
        }
        2 => {
            session.stage = Stage::AwaitingQ3;
            if negative {
                out.messages.push(ACK_NEGATIVE.to_string());
            }
            out.messages.push(QUESTION_3.to_string());
        }
        _ => {
            session.stage = Stage::Done;
            let mut close = if session.had_negative() {
                CLOSE_WILL_INTERVENE.to_string()
            } else {
                CLOSE_ALL_CLEAR.to_string()
            };
            if forwarded {
                close.push(' ');
                close.push_str(CLOSE_FEEDBACK_NOTE);
            }
            out.messages.push(close);
        }
    }
    out
}
