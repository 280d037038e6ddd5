//! Seeded random scenarios for property checks.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::intervene::{HOST_STRATEGIES_TEXT, OVER_PARTICIPATOR_TEXT};
use crate::meeting::{MeetingConfig, ParticipantId, Role};
use crate::simulator::scenario::{
    DefaultReply, ReplyMatch, ReplyPolicy, ReplyRule, Scenario, ScenarioParticipant, SpeakScript,
    StochasticSpeech, SCENARIO_VERSION,
};
use crate::simulator::speech::unit;

fn range(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * unit(rng)
}

fn below(rng: &mut ChaCha8Rng, n: u64) -> u64 {
    ((unit(rng) * n as f64) as u64).min(n - 1)
}

fn chance(rng: &mut ChaCha8Rng, p: f64) -> bool {
    unit(rng) < p
}

fn rule(matcher: ReplyMatch, reply: &str, delay_ms: u64) -> ReplyRule {
    ReplyRule {
        matcher,
        reply: reply.to_string(),
        delay_ms,
    }
}

fn question_rules(rng: &mut ChaCha8Rng) -> ReplyPolicy {
    let variant = below(rng, 6);
    let mut delay = || below(rng, 20_000);
    let q = ReplyMatch::Question;
    let (rules, default) = match variant {
        0 => (vec![], DefaultReply::Ignore),
        1 => (
            vec![rule(q(1), "no", delay()), rule(q(2), "no", delay()), rule(q(3), "no", delay())],
            DefaultReply::Ignore,
        ),
        2 => (
            vec![
                rule(q(1), "yes", delay()),
                rule(q(2), "Yes", delay()),
                rule(q(3), "please let others finish their sentences", delay()),
            ],
            DefaultReply::Ignore,
        ),
        3 => (
            vec![rule(q(1), "maybe", delay()), rule(q(1), "n", delay()), rule(q(2), "y", delay())],
            DefaultReply::Ignore,
        ),
        4 => (vec![rule(q(1), "no", delay())], DefaultReply::Ignore),
        _ => (vec![], DefaultReply::EchoNo),
    };
    ReplyPolicy { rules, default }
}

fn speech(rng: &mut ChaCha8Rng, duration_ms: u64) -> SpeakScript {
    if chance(rng, 0.8) {
        let weight = if chance(rng, 0.15) { 0.0 } else { range(rng, 0.1, 4.0) };
        return SpeakScript::Stochastic(StochasticSpeech {
            turn_rate: range(rng, 0.5, 4.0),
            turn_length_mean: range(rng, 2.0, 25.0),
            talkativeness_weight: weight,
        });
    }
    // Explicit turns ignore everyone else and may overlap them.
    let mut intervals = Vec::new();
    let mut cursor = 0;
    for _ in 0..below(rng, 16) {
        let start = cursor + below(rng, 120_000);
        let end = start + 1 + below(rng, 60_000);
        if end > duration_ms {
            break;
        }
        intervals.push((start, end));
        cursor = end + 1;
    }
    SpeakScript::Intervals(intervals)
}

/// A meeting with 2-5 members, a host, and varied speech and reply habits.
pub fn random_scenario(seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0a1c_0405_7e11);
    let duration = 600 + 60 * below(&mut rng, 31);
    let duration_ms = duration * 1000;
    let members = 2 + below(&mut rng, 4);

    let mut participants = Vec::new();
    let host_stops = chance(&mut rng, 0.3);
    let host_delay = below(&mut rng, 60_000);
    participants.push(ScenarioParticipant {
        id: ParticipantId::new("host").expect("non-empty"),
        role: Role::Host,
        speak: speech(&mut rng, duration_ms),
        reply: ReplyPolicy {
            rules: if host_stops {
                vec![rule(ReplyMatch::Pattern(HOST_STRATEGIES_TEXT[..40].to_string()), "stop", host_delay)]
            } else {
                vec![]
            },
            default: DefaultReply::Ignore,
        },
    });
    for i in 0..members {
        let speak = speech(&mut rng, duration_ms);
        let mut reply = question_rules(&mut rng);
        if chance(&mut rng, 0.3) {
            let delay = below(&mut rng, 30_000);
            reply.rules.push(rule(
                ReplyMatch::Pattern(OVER_PARTICIPATOR_TEXT[..40].to_string()),
                "stop",
                delay,
            ));
        }
        participants.push(ScenarioParticipant {
            id: ParticipantId::new(format!("p{}", i + 1)).expect("non-empty"),
            role: Role::Member,
            speak,
            reply,
        });
    }

    Scenario {
        version: SCENARIO_VERSION,
        seed,
        config: MeetingConfig::with_duration(duration),
        participants,
    }
}
