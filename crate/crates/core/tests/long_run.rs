use frost_core::coagent::{CoAgent, CoAgentKind};
use frost_core::env::{Action, Env, EnvConfig, HazardCondition, HazardConfig, HazardProcess};
use frost_core::gvf::{forward_view_return, GvfKind, GvfSpec};
use frost_core::repr::{ReprConfig, ReprKind};
use frost_core::rng::{substream, Stream};
use proptest::prelude::*;

const LONG_RUN: u64 = 10_000_000;

fn kinds() -> [ReprKind; 4] {
    [ReprKind::Bias, ReprKind::Oscillator, ReprKind::BitCascade, ReprKind::Tct]
}

#[test]
fn weights_stay_finite_over_ten_million_steps() {
    for condition in HazardCondition::ALL {
        for repr in kinds() {
            for gvf in [GvfKind::Accumulation, GvfKind::Countdown] {
                let mut hazard =
                    HazardProcess::new(HazardConfig::with_condition(condition), substream(9, Stream::Env))
                        .unwrap();
                let kind = CoAgentKind::pavlovian(ReprConfig::short_isi(repr), GvfSpec::of_kind(gvf));
                let mut c = CoAgent::new(&kind).unwrap();
                for k in 0..LONG_RUN {
                    c.step(k, hazard.advance(), None).unwrap();
                }
                let w = c.pavlovian().unwrap().learner().weights();
                assert!(
                    w.iter().all(|x| x.is_finite() && x.abs() < 1e3),
                    "{condition}/{repr:?}/{gvf:?}: {w:?}"
                );
            }
        }
    }
}

#[test]
fn converged_countdown_signals_three_steps_ahead() {
    let spec = GvfSpec::countdown();
    let kind = CoAgentKind::pavlovian(ReprConfig::bit_cascade(14), spec.clone());
    let mut c = CoAgent::new(&kind).unwrap();
    let mut hazard = HazardProcess::new(HazardConfig::default(), substream(1, Stream::Env)).unwrap();
    let mut presence = Vec::new();
    let mut records = Vec::new();
    for k in 0..12_000 {
        let p = hazard.advance();
        presence.push(p);
        records.push(c.step(k, p, None).unwrap());
    }
    let mut checked = 0;
    for t in 10_000..11_000 {
        let to_onset = (t + 1..presence.len()).find(|&k| presence[k]).unwrap() - t;
        if !presence[t] && to_onset == 3 {
            let v = records[t].prediction;
            let g = forward_view_return(&presence, t, &spec).unwrap();
            assert!((g - 3.0).abs() < 1e-12);
            assert!((v - 3.0).abs() < 0.05, "{v}");
            assert!(records[t].token);
            checked += 1;
        }
    }
    assert_eq!(checked, 100);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn equal_seeds_and_actions_replay_identically(
        seed in any::<u64>(),
        cond in 0usize..3,
        actions in proptest::collection::vec(-1i64..=1, 1..2000),
    ) {
        let cfg = EnvConfig {
            hazard: HazardConfig::with_condition(HazardCondition::ALL[cond]),
            ..EnvConfig::default()
        };
        let run = || {
            let mut env = Env::new(cfg.clone(), substream(seed, Stream::Env)).unwrap();
            actions
                .iter()
                .map(|&a| env.step(Action::try_from(a).unwrap()))
                .collect::<Vec<_>>()
        };
        prop_assert_eq!(run(), run());
    }
}
