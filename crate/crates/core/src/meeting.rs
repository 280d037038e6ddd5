//! Meeting vocabulary and the speaking-time ledger.
//!
//! Timestamps are milliseconds since meeting start. Speaking totals are whole
//! seconds: at every tick instant `t * 1000` each participant whose voice is
//! active (latest voice event, sample-and-hold) gains one second.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Opaque participant token. Ordered lexicographically for tie-breaking.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ParticipantId(String);

impl ParticipantId {
    pub fn new(id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        if id.is_empty() {
            return Err(Error::Roster("participant id must not be empty".into()));
        }
        Ok(Self(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for ParticipantId {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        Self::new(value)
    }
}

impl From<ParticipantId> for String {
    fn from(value: ParticipantId) -> Self {
        value.0
    }
}

impl fmt::Display for ParticipantId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Host,
    Member,
    CoHost,
}

impl Role {
    /// Humans are everyone except the co-host.
    pub fn is_human(self) -> bool {
        !matches!(self, Role::CoHost)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RosterEntry {
    pub id: ParticipantId,
    pub role: Role,
}

impl RosterEntry {
    pub fn new(id: &str, role: Role) -> Result<Self> {
        Ok(Self {
            id: ParticipantId::new(id)?,
            role,
        })
    }
}

/// Checks the roster and returns the host id.
///
/// Ids must be unique, there must be exactly one host, and at most one
/// co-host entry (the co-host is implicit when absent).
pub fn validate_roster(roster: &[RosterEntry]) -> Result<ParticipantId> {
    let mut seen = std::collections::BTreeSet::new();
    for entry in roster {
        if !seen.insert(&entry.id) {
            return Err(Error::Roster(format!("duplicate participant `{}`", entry.id)));
        }
    }
    let hosts: Vec<_> = roster.iter().filter(|e| e.role == Role::Host).collect();
    if hosts.len() != 1 {
        return Err(Error::Roster(format!(
            "expected exactly one host, found {}",
            hosts.len()
        )));
    }
    let cohosts = roster.iter().filter(|e| e.role == Role::CoHost).count();
    if cohosts > 1 {
        return Err(Error::Roster(format!(
            "expected at most one co-host, found {cohosts}"
        )));
    }
    Ok(hosts[0].id.clone())
}

fn default_ratio_min_elapsed() -> u64 {
    480
}
fn default_ratio_high() -> f64 {
    2.0
}
fn default_ratio_low() -> f64 {
    0.5
}
fn default_half_time_fraction() -> f64 {
    0.5
}
fn default_refresh_interval() -> u64 {
    240
}
fn default_mic_quiet_gate() -> u64 {
    5
}
fn default_tick() -> u64 {
    1
}

/// Timing and threshold parameters. All durations are in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeetingConfig {
    pub scheduled_duration: u64,
    #[serde(default = "default_ratio_min_elapsed")]
    pub ratio_min_elapsed: u64,
    #[serde(default = "default_ratio_high")]
    pub ratio_high: f64,
    #[serde(default = "default_ratio_low")]
    pub ratio_low: f64,
    #[serde(default = "default_half_time_fraction")]
    pub half_time_fraction: f64,
    #[serde(default = "default_refresh_interval")]
    pub refresh_interval: u64,
    #[serde(default = "default_mic_quiet_gate")]
    pub mic_quiet_gate: u64,
    #[serde(default = "default_tick")]
    pub tick: u64,
}

impl MeetingConfig {
    /// Default thresholds for a meeting of the given length.
    pub fn with_duration(scheduled_duration: u64) -> Self {
        Self {
            scheduled_duration,
            ratio_min_elapsed: default_ratio_min_elapsed(),
            ratio_high: default_ratio_high(),
            ratio_low: default_ratio_low(),
            half_time_fraction: default_half_time_fraction(),
            refresh_interval: default_refresh_interval(),
            mic_quiet_gate: default_mic_quiet_gate(),
            tick: default_tick(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let durations = [
            ("scheduled_duration", self.scheduled_duration),
            ("ratio_min_elapsed", self.ratio_min_elapsed),
            ("refresh_interval", self.refresh_interval),
            ("mic_quiet_gate", self.mic_quiet_gate),
        ];
        for (name, value) in durations {
            if value == 0 {
                return Err(Error::Config(format!("{name} must be > 0")));
            }
        }
        if self.tick != 1 {
            return Err(Error::Config("tick must be 1 second".into()));
        }
        let ratios_ok = self.ratio_high.is_finite()
            && self.ratio_low.is_finite()
            && self.ratio_high > 1.0
            && self.ratio_low < 1.0
            && self.ratio_low > 0.0;
        if !ratios_ok {
            return Err(Error::Config(
                "ratios must satisfy ratio_high > 1 > ratio_low > 0".into(),
            ));
        }
        if !(self.half_time_fraction > 0.0 && self.half_time_fraction < 1.0) {
            return Err(Error::Config(
                "half_time_fraction must be in (0, 1)".into(),
            ));
        }
        Ok(())
    }

    pub fn mic_quiet_gate_ms(&self) -> u64 {
        self.mic_quiet_gate * 1000
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoiceEvent {
    pub participant: ParticipantId,
    pub active: bool,
    pub t_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatEvent {
    pub from: ParticipantId,
    pub text: String,
    pub t_ms: u64,
}

impl ChatEvent {
    pub fn validate(&self) -> Result<()> {
        if self.text.trim().is_empty() {
            return Err(Error::Config("chat text must not be empty".into()));
        }
        Ok(())
    }
}

/// Arithmetic mean of whole-second totals, kept as an exact fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mean {
    pub total: u64,
    pub count: u64,
}

impl Mean {
    pub fn of(values: impl IntoIterator<Item = u64>) -> Option<Self> {
        let (total, count) = values
            .into_iter()
            .fold((0u64, 0u64), |(s, n), v| (s + v, n + 1));
        (count > 0).then_some(Self { total, count })
    }

    pub fn as_f64(&self) -> f64 {
        self.total as f64 / self.count as f64
    }

    /// `value < mean`, exactly.
    pub fn is_above(&self, value: u64) -> bool {
        (value as u128) * (self.count as u128) < self.total as u128
    }

    /// `value > factor * mean`.
    pub fn exceeded_by(&self, value: u64, factor: f64) -> bool {
        (value as f64) * (self.count as f64) > factor * self.total as f64
    }

    /// `value < factor * mean`.
    pub fn undercut_by(&self, value: u64, factor: f64) -> bool {
        (value as f64) * (self.count as f64) < factor * self.total as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParticipantRecord {
    pub role: Role,
    pub cumulative_speaking: u64,
    pub currently_active: bool,
    pub last_active_end: Option<u64>,
}

/// Per-participant speaking totals and voice state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpeakingLedger {
    participants: BTreeMap<ParticipantId, ParticipantRecord>,
    elapsed: u64,
    last_t_ms: u64,
}

impl SpeakingLedger {
    pub fn new(roster: &[RosterEntry]) -> Self {
        let participants = roster
            .iter()
            .map(|e| {
                let record = ParticipantRecord {
                    role: e.role,
                    cumulative_speaking: 0,
                    currently_active: false,
                    last_active_end: None,
                };
                (e.id.clone(), record)
            })
            .collect();
        Self {
            participants,
            elapsed: 0,
            last_t_ms: 0,
        }
    }

    pub fn elapsed(&self) -> u64 {
        self.elapsed
    }

    pub fn record(&self, p: &ParticipantId) -> Result<&ParticipantRecord> {
        self.participants
            .get(p)
            .ok_or_else(|| Error::UnknownParticipant(p.clone()))
    }

    pub fn role(&self, p: &ParticipantId) -> Result<Role> {
        self.record(p).map(|r| r.role)
    }

    pub fn ingest_voice(&mut self, ev: &VoiceEvent) -> Result<()> {
        if ev.t_ms < self.last_t_ms {
            return Err(Error::Clock(format!(
                "voice event at {} ms precedes {} ms",
                ev.t_ms, self.last_t_ms
            )));
        }
        let record = self
            .participants
            .get_mut(&ev.participant)
            .ok_or_else(|| Error::UnknownParticipant(ev.participant.clone()))?;
        if record.role == Role::CoHost {
            return Err(Error::Roster("the co-host has no voice".into()));
        }
        if record.currently_active && !ev.active {
            record.last_active_end = Some(ev.t_ms);
        }
        record.currently_active = ev.active;
        self.last_t_ms = ev.t_ms;
        Ok(())
    }

    pub fn sample_tick(&mut self, t: u64) -> Result<()> {
        if t != self.elapsed + 1 {
            return Err(Error::Clock(format!(
                "tick {t} does not follow tick {}",
                self.elapsed
            )));
        }
        if t * 1000 < self.last_t_ms {
            return Err(Error::Clock(format!(
                "tick {t} precedes event at {} ms",
                self.last_t_ms
            )));
        }
        for record in self.participants.values_mut() {
            if record.currently_active {
                record.cumulative_speaking += 1;
            }
        }
        self.elapsed = t;
        self.last_t_ms = t * 1000;
        Ok(())
    }

    pub fn cumulative(&self, p: &ParticipantId) -> Result<u64> {
        self.record(p).map(|r| r.cumulative_speaking)
    }

    /// Non-host humans (members) with their totals, in id order.
    pub fn members(&self) -> impl Iterator<Item = (&ParticipantId, u64)> {
        self.participants
            .iter()
            .filter(|(_, r)| r.role == Role::Member)
            .map(|(id, r)| (id, r.cumulative_speaking))
    }

    /// All participants with their totals, in id order.
    pub fn totals(&self) -> impl Iterator<Item = (&ParticipantId, u64)> {
        self.participants
            .iter()
            .map(|(id, r)| (id, r.cumulative_speaking))
    }

    pub fn average_nonhost(&self) -> Result<Mean> {
        Mean::of(self.members().map(|(_, s)| s))
            .ok_or_else(|| Error::Config("meeting has no non-host participants".into()))
    }

    /// Milliseconds since `p` last stopped speaking; 0 while speaking.
    pub fn quiet_duration(&self, p: &ParticipantId, t_ms: u64) -> Result<u64> {
        let record = self.record(p)?;
        if record.currently_active {
            return Ok(0);
        }
        Ok(t_ms.saturating_sub(record.last_active_end.unwrap_or(0)))
    }
}


#[cfg(test)]
mod tests {
    use super::test_support::*;
    use super::*;

    fn voice(p: &str, active: bool, t_ms: u64) -> VoiceEvent {
        VoiceEvent {
            participant: pid(p),
            active,
            t_ms,
        }
    }

    #[test]
    fn voice_state_transitions() {
        let mut l = SpeakingLedger::new(&roster("H", &["A"]));
        l.ingest_voice(&voice("A", true, 0)).unwrap();
        assert!(l.record(&pid("A")).unwrap().currently_active);

        let before = l.clone();
        l.ingest_voice(&voice("A", true, 0)).unwrap();
        assert_eq!(l.record(&pid("A")), before.record(&pid("A")));

        l.ingest_voice(&voice("A", false, 3200)).unwrap();
        let rec = l.record(&pid("A")).unwrap();
        assert!(!rec.currently_active);
        assert_eq!(rec.last_active_end, Some(3200));
    }

    #[test]
    fn duplicate_active_event_is_idempotent() {
        let mut l = SpeakingLedger::new(&roster("H", &["A"]));
        l.ingest_voice(&voice("A", true, 0)).unwrap();
        let snapshot = l.clone();
        let mut again = snapshot.clone();
        again.ingest_voice(&voice("A", true, 0)).unwrap();
        assert_eq!(again, snapshot);
    }

    #[test]
    fn unknown_participant_is_rejected() {
        let mut l = SpeakingLedger::new(&roster("H", &["A"]));
        let err = l.ingest_voice(&voice("Z", true, 0)).unwrap_err();
        assert_eq!(err, Error::UnknownParticipant(pid("Z")));
        assert!(l.cumulative(&pid("Z")).is_err());
        assert!(l.quiet_duration(&pid("Z"), 0).is_err());
    }

    #[test]
    fn cohost_never_speaks() {
        let mut r = roster("H", &["A"]);
        r.push(RosterEntry::new("bot", Role::CoHost).unwrap());
        let mut l = SpeakingLedger::new(&r);
        assert!(matches!(
            l.ingest_voice(&voice("bot", true, 0)),
            Err(Error::Roster(_))
        ));
        l.sample_tick(1).unwrap();
        assert_eq!(l.cumulative(&pid("bot")).unwrap(), 0);
    }

    #[test]
    fn tick_accrues_only_active_speakers() {
        let mut l = SpeakingLedger::new(&roster("H", &["A", "B"]));
        l.ingest_voice(&voice("A", true, 0)).unwrap();
        l.sample_tick(1).unwrap();
        assert_eq!(l.cumulative(&pid("A")).unwrap(), 1);
        assert_eq!(l.cumulative(&pid("B")).unwrap(), 0);

        l.ingest_voice(&voice("A", false, 1500)).unwrap();
        l.sample_tick(2).unwrap();
        assert_eq!(l.cumulative(&pid("A")).unwrap(), 1);
        assert_eq!(l.elapsed(), 2);
    }

    #[test]
    fn long_interval_sums_to_tick_count() {
        let mut l = SpeakingLedger::new(&roster("H", &["A"]));
        l.ingest_voice(&voice("A", true, 0)).unwrap();
        for t in 1..=300 {
            l.sample_tick(t).unwrap();
        }
        // Oracle: tick instants 1000..=300_000 all fall inside (0, inf).
        let expected = (1..=300u64).filter(|s| s * 1000 > 0).count() as u64;
        assert_eq!(l.cumulative(&pid("A")).unwrap(), expected);
        assert_eq!(l.elapsed(), 300);
    }

    #[test]
    fn non_consecutive_tick_is_a_clock_error() {
        let mut l = SpeakingLedger::new(&roster("H", &["A"]));
        l.sample_tick(1).unwrap();
        assert!(matches!(l.sample_tick(3), Err(Error::Clock(_))));
        assert!(matches!(l.sample_tick(1), Err(Error::Clock(_))));
        l.ingest_voice(&voice("A", true, 1800)).unwrap();
        assert!(matches!(
            l.ingest_voice(&voice("A", false, 1700)),
            Err(Error::Clock(_))
        ));
    }

    #[test]
    fn average_excludes_host() {
        let l = ledger_with(900, &[("A", 300), ("B", 100), ("C", 50)]);
        let avg = l.average_nonhost().unwrap();
        assert_eq!(avg.as_f64(), 150.0);

        let zeros = ledger_with(0, &[("A", 0), ("B", 0)]);
        assert_eq!(zeros.average_nonhost().unwrap().as_f64(), 0.0);

        let single = ledger_with(0, &[("A", 42)]);
        assert_eq!(single.average_nonhost().unwrap().as_f64(), 42.0);

        let host_only = SpeakingLedger::new(&roster("H", &[]));
        assert!(matches!(host_only.average_nonhost(), Err(Error::Config(_))));
    }

    #[test]
    fn quiet_duration_cases() {
        let mut l = SpeakingLedger::new(&roster("H", &["A", "B"]));
        l.ingest_voice(&voice("A", true, 0)).unwrap();
        assert_eq!(l.quiet_duration(&pid("A"), 4000).unwrap(), 0);
        l.ingest_voice(&voice("A", false, 10_000)).unwrap();
        assert_eq!(l.quiet_duration(&pid("A"), 16_000).unwrap(), 16_000 - 10_000);
        assert_eq!(l.quiet_duration(&pid("B"), 9000).unwrap(), 9000);
    }

    #[test]
    fn roster_validation() {
        assert_eq!(validate_roster(&roster("H", &["A"])).unwrap(), pid("H"));
        let no_host = vec![RosterEntry::new("A", Role::Member).unwrap()];
        assert!(validate_roster(&no_host).is_err());
        let mut two_hosts = roster("H", &["A"]);
        two_hosts.push(RosterEntry::new("H2", Role::Host).unwrap());
        assert!(validate_roster(&two_hosts).is_err());
        let dup = roster("H", &["A", "A"]);
        assert!(validate_roster(&dup).is_err());
        assert!(ParticipantId::new("").is_err());
    }

    #[test]
    fn config_validation() {
        let ok = MeetingConfig::with_duration(1800);
        ok.validate().unwrap();
        let mut bad = ok.clone();
        bad.ratio_high = 0.9;
        assert!(bad.validate().is_err());
        let mut bad = ok.clone();
        bad.half_time_fraction = 1.0;
        assert!(bad.validate().is_err());
        let mut bad = ok.clone();
        bad.tick = 2;
        assert!(bad.validate().is_err());
        let mut bad = ok;
        bad.refresh_interval = 0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn mean_comparisons_are_exact() {
        let m = Mean::of([301, 100, 50]).unwrap();
        assert!(m.exceeded_by(301, 2.0));
        assert!(!m.exceeded_by(300, 2.0));
        assert!(m.is_above(100));
        assert!(!m.is_above(151));
        let eq = Mean::of([100, 100]).unwrap();
        assert!(!eq.is_above(100));
        assert!(!eq.undercut_by(50, 0.5));
        assert!(Mean::of(std::iter::empty()).is_none());
    }
}
