use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use swarm_feasibility::agent::{
    decide_majority, exponential_steps, quality, receive_opinion, sample_dissemination_duration,
    sample_exploration_duration, AgentId, AgentPhase, AgentState, DmmdParams, ObservationCounters,
    Opinion, OpinionBuffer, PhaseTag,
};
use swarm_feasibility::geometry::{wrap, ArenaSpec};

/// Exact mean of max(1, round(X)) for X ~ Exp(mean), by summing the
/// probability of each rounded value.
fn rounded_clamped_mean(mean: f64) -> f64 {
    let cdf = |x: f64| 1.0 - (-x / mean).exp();
    let mut total = cdf(1.5); // rounds to 0 or 1, both reported as 1
    let mut k = 2.0;
    loop {
        let p = cdf(k + 0.5) - cdf(k - 0.5);
        total += k * p;
        if p < 1e-18 && k > mean {
            break;
        }
        k += 1.0;
    }
    total
}

fn sample_mean(draws: usize, mut draw: impl FnMut() -> u32) -> f64 {
    (0..draws).map(|_| draw() as f64).sum::<f64>() / draws as f64
}

#[test]
fn exploration_duration_mean() {
    let oracle = rounded_clamped_mean(10.0);
    assert!((oracle - 10.044605).abs() < 1e-6, "oracle {oracle}");
    let p = DmmdParams {
        mean_exploration_steps: 10.0,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let m = sample_mean(100_000, || sample_exploration_duration(&p, &mut rng));
    assert!((9.5..=10.6).contains(&m), "sample mean {m}");
    // 10^5 draws: standard error ~0.032
    assert!((m - oracle).abs() < 0.15, "sample mean {m} vs {oracle}");
}

#[test]
fn dissemination_duration_mean() {
    let oracle = rounded_clamped_mean(8.0);
    assert!((oracle - 8.055381).abs() < 1e-6, "oracle {oracle}");
    let p = DmmdParams {
        dissemination_gain_steps: 10.0,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let m = sample_mean(100_000, || sample_dissemination_duration(0.8, &p, &mut rng));
    assert!((7.6..=8.6).contains(&m), "sample mean {m}");
    assert!((m - oracle).abs() < 0.12, "sample mean {m} vs {oracle}");
}

#[test]
fn dissemination_grows_with_quality() {
    let p = DmmdParams {
        dissemination_gain_steps: 10.0,
        ..Default::default()
    };
    let mut last = 0.0;
    for rho in [0.0, 0.2, 0.4, 0.6, 0.8, 1.0] {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = sample_mean(20_000, || sample_dissemination_duration(rho, &p, &mut rng));
        assert!(m > last, "rho {rho}: {m} <= {last}");
        last = m;
    }
}

#[test]
fn inverse_transform_pinned_points() {
    let u = 1.0 - (-1.0f64).exp();
    assert_eq!(exponential_steps(10.0, u), 10);
    assert_eq!(exponential_steps(5.0, u), 5);
    assert_eq!(exponential_steps(10.0, 0.0), 1);
}

#[test]
fn quality_complements_over_counter_grid() {
    let p = DmmdParams::default();
    for n in 0..=50u64 {
        for m in 0..=50u64 {
            let c = ObservationCounters { n_obs: n, m_obs: m };
            let q1 = quality(Opinion::Feasible, c, &p);
            let q0 = quality(Opinion::Infeasible, c, &p);
            assert!((0.0..=1.0).contains(&q1));
            if n + m > 0 {
                assert!((q1 + q0 - 1.0).abs() < 1e-12);
            } else {
                assert_eq!(q1, p.quality_fallback);
            }
        }
    }
}

fn opinion() -> impl Strategy<Value = Opinion> {
    any::<bool>().prop_map(Opinion::from_bool)
}

fn agent(tag: PhaseTag, remaining: u32, own: Opinion) -> AgentState {
    AgentState {
        id: AgentId(0),
        position: wrap(3.0, 3.0, ArenaSpec::new(20.0).unwrap()).unwrap(),
        heading: 0.0,
        straight_steps_remaining: 1,
        opinion: own,
        phase: AgentPhase {
            tag,
            remaining_steps: remaining,
        },
        counters: ObservationCounters::default(),
        buffer: OpinionBuffer::new(),
    }
}

#[derive(Debug, Clone)]
struct StepInput {
    robots: u64,
    tasks: u64,
    heard: Vec<(AgentId, Opinion)>,
}

fn step_input() -> impl Strategy<Value = StepInput> {
    (
        0u64..5,
        0u64..5,
        prop::collection::vec((0u64..6, opinion()), 0..4),
    )
        .prop_map(|(robots, tasks, heard)| StepInput {
            robots,
            tasks,
            heard: heard
                .into_iter()
                .map(|(id, op)| (AgentId(id), op))
                .collect(),
        })
}

proptest! {
    #[test]
    fn buffer_keeps_latest_per_sender(msgs in prop::collection::vec((0u64..6, opinion()), 0..30)) {
        let owner = AgentId(3);
        let mut b = OpinionBuffer::new();
        for &(id, op) in &msgs {
            receive_opinion(&mut b, owner, AgentId(id), op);
        }
        prop_assert!(b.get(owner).is_none());
        for id in 0..6u64 {
            let expected = if id == 3 {
                None
            } else {
                msgs.iter().rev().find(|m| m.0 == id).map(|m| m.1)
            };
            prop_assert_eq!(b.get(AgentId(id)), expected);
        }
    }

    #[test]
    fn tick_invariants(
        own in opinion(),
        start_disseminating in any::<bool>(),
        remaining in 1u32..6,
        seed in any::<u64>(),
        inputs in prop::collection::vec(step_input(), 1..60),
    ) {
        let params = DmmdParams {
            mean_exploration_steps: 4.0,
            dissemination_gain_steps: 4.0,
            quality_fallback: 0.5,
        };
        let tag = if start_disseminating { PhaseTag::Disseminating } else { PhaseTag::Exploring };
        let start = agent(tag, remaining, own);
        let mut a = start.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut trace = Vec::new();
        for input in &inputs {
            let before = a.clone();
            let out = a.tick(input.robots, input.tasks, &input.heard, &params, &mut rng);
            prop_assert_eq!(out.is_some(), before.phase.tag == PhaseTag::Disseminating);
            if let Some((id, op)) = out {
                prop_assert_eq!(id, before.id);
                prop_assert_eq!(op, before.opinion);
            }
            prop_assert!(a.phase.remaining_steps >= 1);
            match (before.phase.tag, a.phase.tag) {
                (PhaseTag::Disseminating, PhaseTag::Exploring) => {
                    prop_assert_eq!(a.counters, ObservationCounters::default());
                    prop_assert!(a.buffer.is_empty());
                }
                (PhaseTag::Exploring, _) => {
                    prop_assert_eq!(a.counters.n_obs, before.counters.n_obs + input.robots);
                    prop_assert_eq!(a.counters.m_obs, before.counters.m_obs + input.tasks);
                }
                (PhaseTag::Disseminating, PhaseTag::Disseminating) => {
                    prop_assert_eq!(a.counters, before.counters);
                }
            }
            prop_assert!(a.buffer.get(a.id).is_none());
            trace.push((a.clone(), out));
        }

        // replaying the same inputs with the same stream reproduces the trace
        let mut b = start;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (input, (expected, out)) in inputs.iter().zip(&trace) {
            let replay = b.tick(input.robots, input.tasks, &input.heard, &params, &mut rng);
            prop_assert_eq!(&replay, out);
            prop_assert_eq!(&b, expected);
        }
    }

    #[test]
    fn majority_never_picks_a_strict_minority(own in opinion(), votes in prop::collection::vec(opinion(), 0..12)) {
        let mut b = OpinionBuffer::new();
        for (i, &op) in votes.iter().enumerate() {
            receive_opinion(&mut b, AgentId(u64::MAX), AgentId(i as u64), op);
        }
        let decided = decide_majority(own, &b);
        let agree = votes.iter().filter(|&&v| v == decided).count() + usize::from(own == decided);
        prop_assert!(2 * agree > votes.len());
    }
}
