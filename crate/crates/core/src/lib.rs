//! A deterministic virtual co-host for meetings.
//!
//! The co-host runs an observe / ask / intervene loop over an ordered stream
//! of voice-activity, chat, and clock events:
//!
//! * [`meeting`] accrues per-participant speaking time at one-second ticks.
//! * [`observe`] decides when to start asking and who is under- or
//!   over-participating.
//! * [`ask`] runs a three-question private dialogue with under-participators.
//! * [`intervene`] turns negative answers into gated private messages (with
//!   speaking-time charts) for the host and over-participators.
//! * [`engine`] folds input events into output actions.
//! * [`simulator`] generates scripted or seeded meetings and recomputes the
//!   expected behavior with an independent brute-force oracle.
//! * [`gateway`] holds the newline-delimited wire protocol, chart rendering,
//!   and the command-line surface.

pub mod ask;
pub mod engine;
pub mod error;
pub mod gateway;
pub mod intervene;
pub mod meeting;
pub mod observe;
pub mod simulator;

pub use crate::engine::{Driver, Engine, EnginePhase, InputEvent, MeetingReport, OutputAction};
pub use crate::error::{Error, Result};
pub use crate::meeting::{MeetingConfig, ParticipantId, Role, RosterEntry, SpeakingLedger};
