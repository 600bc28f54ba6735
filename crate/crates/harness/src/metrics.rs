//! Summary statistics over episode summaries and step traces.

use std::collections::BTreeMap;

use frost_core::env::EnvConfig;
use serde::{Deserialize, Serialize};

use crate::run::{EpisodeSummary, StepTrace};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub mean: f64,
    pub q3: f64,
    pub max: f64,
}

/// Quantile `p` of sorted data, interpolating linearly between the order
/// statistics at positions `floor(h)` and `ceil(h)` with `h = (n - 1) p`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Five-number summary plus mean. Returns `None` for empty input.
pub fn boxstats(values: &[f64]) -> Option<BoxStats> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(BoxStats {
        min: v[0],
        q1: quantile_sorted(&v, 0.25),
        median: quantile_sorted(&v, 0.5),
        mean: v.iter().sum::<f64>() / v.len() as f64,
        q3: quantile_sorted(&v, 0.75),
        max: v[v.len() - 1],
    })
}

/// For each hazard onset, the number of steps since the latest token rising
/// edge that followed the previous onset. `None` when there was no such edge.
///
/// Onsets and edges are tracked within each `(seed, episode)`; a token or
/// hazard active on an episode's first row counts as rising there.
pub fn token_lead_times(trace: &[StepTrace]) -> Vec<Option<u32>> {
    let mut leads = Vec::new();
    let mut key = None;
    let mut prev_presence = false;
    let mut prev_token = false;
    let mut last_edge: Option<u32> = None;
    for r in trace {
        if key != Some((r.seed, r.episode)) {
            key = Some((r.seed, r.episode));
            prev_presence = false;
            prev_token = false;
            last_edge = None;
        }
        if r.token && !prev_token {
            last_edge = Some(r.step);
        }
        if r.presence && !prev_presence {
            leads.push(last_edge.map(|e| r.step - e));
            last_edge = None;
        }
        prev_presence = r.presence;
        prev_token = r.token;
    }
    leads
}

/// Mean reward per episode over the final `last` episodes of every seed.
pub fn asymptote(summaries: &[EpisodeSummary], last: u32) -> f64 {
    let per_seed = per_seed_asymptotes(summaries, last);
    per_seed.iter().sum::<f64>() / per_seed.len().max(1) as f64
}

/// Mean reward per episode over each seed's final `last` episodes.
pub fn per_seed_asymptotes(summaries: &[EpisodeSummary], last: u32) -> Vec<f64> {
    let mut by_seed: BTreeMap<u32, Vec<&EpisodeSummary>> = BTreeMap::new();
    for s in summaries {
        by_seed.entry(s.seed).or_default().push(s);
    }
    by_seed
        .into_values()
        .map(|mut eps| {
            eps.sort_by_key(|s| s.episode);
            let tail = &eps[eps.len().saturating_sub(last as usize)..];
            tail.iter().map(|s| s.total_reward as f64).sum::<f64>() / tail.len() as f64
        })
        .collect()
}

/// Mean reward for each episode index, averaged over seeds.
pub fn learning_curve(summaries: &[EpisodeSummary]) -> Vec<f64> {
    let mut sums: BTreeMap<u32, (f64, u32)> = BTreeMap::new();
    for s in summaries {
        let e = sums.entry(s.episode).or_default();
        e.0 += s.total_reward as f64;
        e.1 += 1;
    }
    sums.into_values().map(|(sum, n)| sum / n as f64).collect()
}

/// A failed conservation check.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditFailure {
    pub seed: u32,
    pub episode: u32,
    pub step: Option<u32>,
    pub reason: String,
}

/// Replays heat bookkeeping from the rows of one episode and checks it
/// against both the rows and the episode summary:
///
/// * heat is stripped exactly when the hazard is active in the hazard region,
///   and grows by one rate unit on every other step at the heat location;
/// * reward is paid exactly when heat reaches capacity, which empties it;
/// * `heat_gained` equals the rate times the gaining steps, and
///   `total_reward * capacity <= heat_gained`.
pub fn audit_episode(
    env: &EnvConfig,
    summary: &EpisodeSummary,
    rows: &[StepTrace],
) -> Result<(), AuditFailure> {
    let fail = |step: Option<u32>, reason: String| AuditFailure {
        seed: summary.seed,
        episode: summary.episode,
        step,
        reason,
    };
    let capacity = (env.heat_capacity / env.heat_rate).round() as u64;
    let mut units: u64 = 0;
    let mut gains: u64 = 0;
    let mut rewards: u64 = 0;
    let mut hits: u64 = 0;
    for r in rows {
        let exposed = r.presence && env.in_hazard_region(r.position);
        if r.hit != exposed {
            return Err(fail(Some(r.step), format!("hit={} but exposure={exposed}", r.hit)));
        }
        let mut reward = 0;
        if exposed {
            units = 0;
            hits += 1;
        } else if r.position == env.heat_location {
            units += 1;
            gains += 1;
        }
        if units >= capacity {
            units = 0;
            reward = 1;
        }
        if r.reward != reward {
            return Err(fail(Some(r.step), format!("reward {} expected {reward}", r.reward)));
        }
        rewards += reward as u64;
        let heat = units as f64 * env.heat_rate;
        if (r.heat - heat).abs() > 1e-9 {
            return Err(fail(Some(r.step), format!("heat {} expected {heat}", r.heat)));
        }
        if r.heat < 0.0 || r.heat >= env.heat_capacity {
            return Err(fail(Some(r.step), format!("heat {} outside [0, capacity)", r.heat)));
        }
    }
    let gained = gains as f64 * env.heat_rate;
    if (summary.heat_gained - gained).abs() > 1e-9 {
        return Err(fail(None, format!("heat_gained {} expected {gained}", summary.heat_gained)));
    }
    if summary.total_reward as u64 != rewards || summary.hit_steps as u64 != hits {
        return Err(fail(None, "reward or hit totals disagree with rows".into()));
    }
    if summary.total_reward as f64 * env.heat_capacity > summary.heat_gained + 1e-9 {
        return Err(fail(None, "more reward than heat gained".into()));
    }
    if summary.total_reward as f64 > env.max_reward_per_episode() + 1e-9 {
        return Err(fail(None, "reward above per-episode bound".into()));
    }
    Ok(())
}

/// Audits every episode of a run, grouping rows by `(seed, episode)`.
pub fn audit_run(
    env: &EnvConfig,
    summaries: &[EpisodeSummary],
    traces: &[StepTrace],
) -> Result<(), AuditFailure> {
    let mut start = 0;
    for s in summaries {
        let len = traces[start..]
            .iter()
            .take_while(|r| r.seed == s.seed && r.episode == s.episode)
            .count();
        audit_episode(env, s, &traces[start..start + len])?;
        start += len;
    }
    if start != traces.len() {
        return Err(AuditFailure {
            seed: traces[start].seed,
            episode: traces[start].episode,
            step: None,
            reason: "trace rows without a summary".into(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use frost_core::env::Action;
    use rand::{Rng, SeedableRng};

    #[test]
    fn boxstats_examples() {
        let b = boxstats(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((b.median, b.mean), (2.0, 2.0));
        assert_eq!((b.q1, b.q3), (1.5, 2.5));
        let s = boxstats(&[5.0]).unwrap();
        assert_eq!(s, BoxStats { min: 5.0, q1: 5.0, median: 5.0, mean: 5.0, q3: 5.0, max: 5.0 });
        assert!(boxstats(&[]).is_none());
    }

    #[test]
    fn boxstats_uniform_sample() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let v: Vec<f64> = (0..10_000).map(|_| rng.gen::<f64>()).collect();
        let b = boxstats(&v).unwrap();
        assert!((b.median - 0.5).abs() < 0.02, "{}", b.median);
        assert!((b.q1 - 0.25).abs() < 0.02 && (b.q3 - 0.75).abs() < 0.02);
    }

    #[test]
    fn quantiles_interpolate() {
        let v = [0.0, 10.0, 20.0, 30.0, 40.0];
        assert_eq!(quantile_sorted(&v, 0.1), 4.0);
        assert_eq!(quantile_sorted(&v, 1.0), 40.0);
    }

    fn row(step: u32, presence: bool, token: bool) -> StepTrace {
        StepTrace {
            seed: 0,
            episode: 0,
            step,
            presence,
            position: 3,
            action: Action::Stay,
            heat: 0.0,
            hit: false,
            reward: 0,
            token,
            prediction: 0.0,
            td_error_gvf: 0.0,
            td_error_control: 0.0,
        }
    }

    #[test]
    fn lead_times() {
        let trace: Vec<_> = (0..30u32)
            .map(|k| {
                let phase = k % 10;
                row(k, phase >= 8, phase >= 4)
            })
            .collect();
        assert_eq!(token_lead_times(&trace), vec![Some(4), Some(4), Some(4)]);

        let silent: Vec<_> = (0..30u32).map(|k| row(k, k % 10 >= 8, false)).collect();
        assert_eq!(token_lead_times(&silent), vec![None, None, None]);

        let at_onset: Vec<_> = (0..10u32).map(|k| row(k, k >= 8, k >= 8)).collect();
        assert_eq!(token_lead_times(&at_onset), vec![Some(0)]);
    }

    #[test]
    fn lead_edge_is_consumed_by_its_onset() {
        // Token stays on through two onsets: only the first gets a lead.
        let trace: Vec<_> = (0..20u32).map(|k| row(k, k % 10 >= 8, k >= 5)).collect();
        assert_eq!(token_lead_times(&trace), vec![Some(3), None]);
    }

    #[test]
    fn asymptote_uses_tail() {
        let s = |seed, episode, total_reward| EpisodeSummary {
            seed,
            episode,
            total_reward,
            hit_steps: 0,
            heat_gained: 0.0,
            mean_abs_td_gvf: 0.0,
            token_rising_edges: 0,
        };
        let v = vec![s(0, 0, 0), s(0, 1, 10), s(1, 0, 2), s(1, 1, 20)];
        assert_eq!(per_seed_asymptotes(&v, 1), vec![10.0, 20.0]);
        assert_eq!(asymptote(&v, 1), 15.0);
        assert_eq!(asymptote(&v, 5), 8.0);
        assert_eq!(learning_curve(&v), vec![1.0, 15.0]);
    }
}
