//! Seeded random micro instances with dyadic probabilities, small enough
//! for brute-force policy enumeration in exact arithmetic.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Distribution, MultiEnvPomdp, ObservationFn, Pomdp};
use crate::scalar::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MicroParams {
    pub max_states: usize,
    pub max_actions: usize,
    pub max_observations: usize,
    pub max_envs: usize,
    /// Largest horizon; each instance draws `k` from `1..=max_horizon`.
    pub max_horizon: usize,
    /// Largest probability denominator; a power of two.
    pub max_den: u32,
    pub reward_min: i64,
    pub reward_max: i64,
    /// Draw observation rows at random instead of one label per state.
    pub stochastic_observations: bool,
}

impl Default for MicroParams {
    fn default() -> Self {
        Self {
            max_states: 6,
            max_actions: 3,
            max_observations: 2,
            max_envs: 3,
            max_horizon: 3,
            max_den: 4,
            reward_min: -2,
            reward_max: 3,
            stochastic_observations: false,
        }
    }
}

impl MicroParams {
    fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParams(msg.into()));
        if self.max_states == 0 || self.max_actions == 0 || self.max_observations == 0 || self.max_envs == 0 {
            return bad("size bounds must be positive");
        }
        if !self.max_den.is_power_of_two() {
            return bad("max_den must be a power of two");
        }
        if self.reward_min > self.reward_max {
            return bad("reward_min exceeds reward_max");
        }
        Ok(())
    }
}

/// One generated instance with its horizon.
#[derive(Debug, Clone)]
pub struct MicroInstance {
    pub name: String,
    pub model: MultiEnvPomdp,
    pub horizon: usize,
}

/// Dyadic distribution over `0..support`: `den` equal units dropped on
/// random targets, `den` a random power of two up to `max_den`.
fn dyadic_row(rng: &mut ChaCha8Rng, support: usize, max_den: u32) -> Distribution {
    let den = 1u32 << rng.gen_range(0..=max_den.trailing_zeros());
    let mut counts = vec![0i64; support];
    for _ in 0..den {
        counts[rng.gen_range(0..support)] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .filter(|(_, c)| *c > 0)
        .map(|(t, c)| (t, Rational::new(c.into(), i64::from(den).into())))
        .collect()
}

fn instance(rng: &mut ChaCha8Rng, p: &MicroParams) -> Result<(MultiEnvPomdp, usize)> {
    let ns = rng.gen_range(1..=p.max_states);
    let na = rng.gen_range(1..=p.max_actions);
    let no = rng.gen_range(1..=p.max_observations);
    let n = rng.gen_range(1..=p.max_envs);
    let k = rng.gen_range(1..=p.max_horizon.max(1));

    let transitions = (0..ns * na).map(|_| dyadic_row(rng, ns, p.max_den)).collect();
    let rewards = (0..ns).map(|_| rng.gen_range(p.reward_min..=p.reward_max)).collect();
    let mut states: Vec<usize> = (0..ns).collect();
    states.shuffle(rng);
    let initial: Vec<usize> = (0..n).map(|i| states[i % ns]).collect();

    let observation_fn = if p.stochastic_observations {
        ObservationFn::Stochastic((0..ns * na).map(|_| dyadic_row(rng, no, p.max_den)).collect())
    } else {
        let mut labels: Vec<usize> = (0..ns).map(|_| rng.gen_range(0..no)).collect();
        // initial states are indistinguishable at the start
        let shared = labels[initial[0]];
        for &s in &initial {
            labels[s] = shared;
        }
        ObservationFn::Deterministic(labels)
    };
    let pomdp = Pomdp::new(
        (0..ns).map(|s| format!("s{s}")).collect(),
        (0..na).map(|a| format!("a{a}")).collect(),
        (0..no).map(|o| format!("o{o}")).collect(),
        transitions,
        observation_fn,
        rewards,
    )?;
    Ok((MultiEnvPomdp::new(pomdp, initial)?, k))
}

/// `count` instances from one seeded stream; the same seed and parameters
/// always give the same suite.
pub fn gen_micro_suite(p: &MicroParams, seed: u64, count: usize) -> Result<Vec<MicroInstance>> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let (model, horizon) = instance(&mut rng, p)?;
            Ok(MicroInstance {
                name: format!("micro_{seed}_{i}"),
                model,
                horizon,
            })
        })
        .collect()
}

/// A single instance, the first of the suite for `seed`.
pub fn gen_micro(p: &MicroParams, seed: u64) -> Result<MultiEnvPomdp> {
    Ok(gen_micro_suite(p, seed, 1)?.remove(0).model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactspace::denominator_bound;
    use num_bigint::BigInt;
    use num_traits::Zero;

    #[test]
    fn suites_are_reproducible() {
        let p = MicroParams::default();
        let a = gen_micro_suite(&p, 7, 20).unwrap();
        let b = gen_micro_suite(&p, 7, 20).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.model.to_document(), y.model.to_document());
            assert_eq!(x.horizon, y.horizon);
        }
        let c = gen_micro_suite(&p, 8, 20).unwrap();
        assert!(a.iter().zip(&c).any(|(x, y)| x.model.to_document() != y.model.to_document()));
    }

    #[test]
    fn instances_respect_the_bounds() {
        let p = MicroParams::default();
        for inst in gen_micro_suite(&p, 1, 100).unwrap() {
            let m = &inst.model;
            let q = m.pomdp();
            assert!(q.num_states() <= 6 && q.num_actions() <= 3 && q.num_observations() <= 2);
            assert!(m.num_envs() <= 3 && (1..=3).contains(&inst.horizon));
            assert!(m.violations().is_empty());
            for s in 0..q.num_states() {
                for a in 0..q.num_actions() {
                    for (_, pr) in q.transition(s, a) {
                        assert!((BigInt::from(4) % pr.denom()).is_zero());
                    }
                }
            }
        }
    }

    #[test]
    fn halves_only_keep_the_bound_at_two() {
        let p = MicroParams {
            max_den: 2,
            max_envs: 1,
            max_horizon: 2,
            ..MicroParams::default()
        };
        for inst in gen_micro_suite(&p, 3, 50).unwrap() {
            assert!(denominator_bound(&inst.model, inst.horizon).c <= BigInt::from(2));
        }
    }

    #[test]
    fn stochastic_observation_rows() {
        let p = MicroParams {
            stochastic_observations: true,
            ..MicroParams::default()
        };
        let inst = gen_micro_suite(&p, 5, 10).unwrap();
        assert!(inst
            .iter()
            .all(|i| matches!(i.model.pomdp().observation_fn(), ObservationFn::Stochastic(_))));
    }

    #[test]
    fn bad_params() {
        let p = MicroParams {
            max_den: 3,
            ..MicroParams::default()
        };
        assert!(gen_micro_suite(&p, 0, 1).is_err());
    }
}
