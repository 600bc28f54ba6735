//! Exact optimum of the fixed schedule by dynamic programming, with the
//! dynamics written out independently of the environment code.

use frost_core::env::{Action, Env, EnvConfig};
use frost_core::rng::{substream, Stream};

const LOCATIONS: usize = 7;
const HEAT_AT: usize = 3;
const CAPACITY_UNITS: usize = 12;
const ISI: usize = 10;
const ACTIVE: usize = 2;
const EPISODE: usize = 1000;

/// Phase of the hazard on episode step `k`: episodes open on the step after
/// a hazard ends.
fn phase(k: usize) -> usize {
    (k + ACTIVE + 1) % ISI
}

fn transition(pos: usize, units: usize, a: i64, k: usize) -> (usize, usize, u32) {
    let pos = (pos as i64 + a).clamp(0, LOCATIONS as i64 - 1) as usize;
    let exposed = phase(k) < ACTIVE && (1..=5).contains(&pos);
    let mut units = if exposed {
        0
    } else if pos == HEAT_AT {
        units + 1
    } else {
        units
    };
    let reward = if units >= CAPACITY_UNITS {
        units = 0;
        1
    } else {
        0
    };
    (pos, units, reward)
}

/// Returns the optimal total reward and one optimal action sequence.
fn solve(steps: usize) -> (u32, Vec<i64>) {
    let idx = |p: usize, u: usize| p * CAPACITY_UNITS + u;
    let n = LOCATIONS * CAPACITY_UNITS;
    let mut value = vec![vec![0u32; n]; steps + 1];
    let mut best = vec![vec![0i64; n]; steps];
    for k in (0..steps).rev() {
        for p in 0..LOCATIONS {
            for u in 0..CAPACITY_UNITS {
                let (a, v) = [-1i64, 0, 1]
                    .iter()
                    .map(|&a| {
                        let (p2, u2, r) = transition(p, u, a, k);
                        (a, r + value[k + 1][idx(p2, u2)])
                    })
                    .max_by_key(|&(_, v)| v)
                    .unwrap();
                value[k][idx(p, u)] = v;
                best[k][idx(p, u)] = a;
            }
        }
    }
    let (mut p, mut u) = (HEAT_AT, 0);
    let mut plan = Vec::with_capacity(steps);
    for (k, row) in best.iter().enumerate() {
        let a = row[idx(p, u)];
        plan.push(a);
        (p, u, _) = transition(p, u, a, k);
    }
    (value[0][idx(HEAT_AT, 0)], plan)
}

#[test]
fn optimal_rate_is_one_reward_per_two_cycles() {
    // One reward per 20 steps once running; the first needs a longer ramp.
    let (one, _) = solve(EPISODE);
    let (two, _) = solve(2 * EPISODE);
    assert_eq!(two - one, 50);
    assert_eq!(one, 49);
}

#[test]
fn optimal_plan_replays_through_env() {
    let (optimum, plan) = solve(EPISODE);

    let mut env = Env::new(EnvConfig::default(), substream(0, Stream::Env)).unwrap();
    env.reset_episode();
    let replayed: u32 = plan
        .iter()
        .map(|&a| env.step(Action::try_from(a).unwrap()).reward)
        .sum();
    assert_eq!(replayed, optimum);
    assert!(optimum as f64 <= EnvConfig::default().max_reward_per_episode());
}

#[test]
fn staying_put_never_converts_at_capacity_six() {
    let mut env = Env::new(EnvConfig::default(), substream(0, Stream::Env)).unwrap();
    env.reset_episode();
    let total: u32 = (0..EPISODE).map(|_| env.step(Action::Stay).reward).sum();
    assert_eq!(total, 0);
}
