//! Seeded turn-taking model.
//!
//! The generator is a ChaCha8 stream (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64(seed)`. Draws are taken in this fixed order:
//!
//! 1. `u = (next_u64() >> 11) * 2^-53`, a uniform in `[0, 1)`.
//! 2. Gap before the next turn: exponential with mean `60000 / R` ms, where
//!    `R` is the sum of all speakers' `turn_rate`, as `-mean * ln(1 - u)`.
//! 3. Speaker: one uniform scaled by the sum of `turn_rate * weight`,
//!    walked over the speakers in scenario order.
//! 4. Turn length: exponential with the speaker's mean, at least 1 ms.
//!
//! Gaps and lengths are rounded to whole milliseconds. Turns never overlap;
//! generation stops once a turn would start at or after the meeting end,
//! and the last turn is clipped to it.

use std::collections::BTreeMap;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::meeting::ParticipantId;
use crate::simulator::scenario::StochasticSpeech;

pub(crate) fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn exponential(rng: &mut ChaCha8Rng, mean: f64) -> f64 {
    -mean * (1.0 - unit(rng)).ln()
}

/// Picks an index with probability proportional to `weights`.
pub(crate) fn pick(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut x = unit(rng) * total;
    for (i, w) in weights.iter().enumerate() {
        if x < *w {
            return i;
        }
        x -= w;
    }
    // Rounding can leave x just past the last bucket.
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

pub fn turn_taking(
    speakers: &[(ParticipantId, StochasticSpeech)],
    duration_ms: u64,
    seed: u64,
) -> BTreeMap<ParticipantId, Vec<(u64, u64)>> {
    let mut out: BTreeMap<ParticipantId, Vec<(u64, u64)>> = speakers
        .iter()
        .map(|(id, _)| (id.clone(), Vec::new()))
        .collect();
    let total_rate: f64 = speakers.iter().map(|(_, s)| s.turn_rate).sum();
    let weights: Vec<f64> = speakers
        .iter()
        .map(|(_, s)| s.turn_rate * s.talkativeness_weight)
        .collect();
    if total_rate <= 0.0 || weights.iter().sum::<f64>() <= 0.0 {
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mean_gap_ms = 60_000.0 / total_rate;
    let mut cursor = 0u64;
    loop {
        let start = cursor + exponential(&mut rng, mean_gap_ms).round() as u64;
        if start >= duration_ms {
            break;
        }
        let (id, model) = &speakers[pick(&mut rng, &weights)];
        let len = (exponential(&mut rng, model.turn_length_mean * 1000.0).round() as u64).max(1);
        let end = (start + len).min(duration_ms);
        out.get_mut(id).expect("speaker listed").push((start, end));
        cursor = end;
    }
    out
}
