//! Identification friend or foe: an aircraft of unknown type approaches the
//! base and the agent senses, waits or attacks.
//!
//! A flight state is `(τ, d, v)`: type, distance bin `0..D` and visibility
//! `0..=4`. Rewards are state rewards, so each outcome (`base_safe`,
//! `base_destroyed`, `foe_destroyed`, `friend_destroyed`) is a one-step
//! state carrying its reward that then moves to an absorbing `end` state
//! with reward 0. Visibility never decreases: the source increments are
//! renormalized over `Δ ∈ {0, +1}` within range.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Distribution, MultiEnvPomdp, ObservationFn, Pomdp};
use crate::scalar::{parse_rational, Rational};

use num_traits::{One, Zero};

const VISIBILITY_LEVELS: usize = 5;
const TYPES: [&str; 2] = ["friend", "foe"];
const ACTIONS: [&str; 4] = ["active", "passive", "noop", "attack"];
const ACTIVE: usize = 0;
const PASSIVE: usize = 1;
const NOOP: usize = 2;
const ATTACK: usize = 3;
const FRIEND: usize = 0;
const FOE: usize = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IffParams {
    /// Number of distance bins.
    #[serde(default = "default_bins")]
    pub bins: usize,
    pub d1: usize,
    pub d2: usize,
    pub v1: usize,
    pub v2: usize,
    /// Friend visibility; defaults to `v2`.
    #[serde(default)]
    pub friend_visibility: Option<usize>,
}

fn default_bins() -> usize {
    10
}

impl IffParams {
    pub fn new(d1: usize, d2: usize, v1: usize, v2: usize) -> Self {
        Self {
            bins: default_bins(),
            d1,
            d2,
            v1,
            v2,
            friend_visibility: None,
        }
    }

    pub fn name(&self) -> String {
        format!("IFF_{}_{}_{}_{}", self.d1, self.d2, self.v1, self.v2)
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if !(self.d1 < self.d2 && self.d2 <= 4) {
            return bad(format!("distances must satisfy d1 < d2 <= 4, got {} and {}", self.d1, self.d2));
        }
        if self.d2 >= self.bins {
            return bad(format!("distance {} outside {} bins", self.d2, self.bins));
        }
        let fv = self.friend_visibility.unwrap_or(self.v2);
        if let Some(v) = [self.v1, self.v2, fv].into_iter().find(|v| *v >= VISIBILITY_LEVELS) {
            return bad(format!("visibility {v} outside 0..=4"));
        }
        Ok(())
    }
}

/// Probability that an attack at distance `d` destroys the aircraft.
pub fn hit_probability(d: usize, bins: usize) -> Rational {
    let (d, b) = (d as i64, bins as i64);
    Rational::new(((b - d) * (b - d)).into(), (b * b).into())
}

/// Renormalized visibility distribution after action `a` at level `v`.
pub fn visibility_step(a: usize, v: usize) -> Vec<(usize, Rational)> {
    let q = |s: &str| parse_rational(s).expect("literal probability");
    // (q(0), q(+1)); decreases are dropped
    let (stay, up) = match a {
        NOOP => (q("0.75"), Rational::zero()),
        PASSIVE => (q("0.9"), q("0.1")),
        ACTIVE => (q("0.05"), q("0.95")),
        _ => (q("0.2"), q("0.8")),
    };
    if v + 1 >= VISIBILITY_LEVELS || up.is_zero() {
        return vec![(v, Rational::one())];
    }
    let total = &stay + &up;
    vec![(v, stay / &total), (v + 1, up / total)]
}

pub fn gen_iff(p: &IffParams) -> Result<MultiEnvPomdp> {
    p.validate()?;
    let bins = p.bins;
    let flight = |tau: usize, d: usize, v: usize| (tau * bins + d) * VISIBILITY_LEVELS + v;
    let nf = 2 * bins * VISIBILITY_LEVELS;
    let (base_safe, base_destroyed, foe_destroyed, friend_destroyed, end) = (nf, nf + 1, nf + 2, nf + 3, nf + 4);
    let ns = nf + 5;

    let mut states = Vec::with_capacity(ns);
    for tau in TYPES {
        for d in 0..bins {
            for v in 0..VISIBILITY_LEVELS {
                states.push(format!("{tau}_d{d}_v{v}"));
            }
        }
    }
    states.extend(
        ["base_safe", "base_destroyed", "foe_destroyed", "friend_destroyed", "end"]
            .iter()
            .map(|s| s.to_string()),
    );
    let mut rewards = vec![0i64; ns];
    rewards[base_destroyed] = -100;
    rewards[foe_destroyed] = 20;
    rewards[friend_destroyed] = -30;

    let mut observations = Vec::with_capacity(2 * bins + 2);
    for tau in TYPES {
        for d in 0..bins {
            observations.push(format!("{tau}_d{d}"));
        }
    }
    observations.push("nothing".into());
    observations.push("absorb".into());
    let nothing = 2 * bins;
    let absorb = 2 * bins + 1;

    let q = |s: &str| parse_rational(s).expect("literal probability");
    let mut transitions: Vec<Distribution> = Vec::with_capacity(ns * ACTIONS.len());
    for tau in 0..2 {
        for d in 0..bins {
            for v in 0..VISIBILITY_LEVELS {
                for a in 0..ACTIONS.len() {
                    let mut row: Distribution = Vec::new();
                    let mut rest = Rational::one();
                    if a == ATTACK {
                        let hit = hit_probability(d, bins);
                        rest -= &hit;
                        let target = if tau == FOE { foe_destroyed } else { friend_destroyed };
                        row.push((target, hit));
                    }
                    if !rest.is_zero() {
                        if d == 0 {
                            if tau == FOE {
                                let destroyed = q("0.25") + Rational::new((v as i64).into(), 10.into());
                                let safe = Rational::one() - &destroyed;
                                row.push((base_destroyed, &rest * destroyed));
                                row.push((base_safe, &rest * safe));
                            } else {
                                row.push((base_safe, rest));
                            }
                        } else {
                            for (nd, pd) in [(d - 1, q("0.8")), (d, q("0.2"))] {
                                for (nv, pv) in visibility_step(a, v) {
                                    row.push((flight(tau, nd, nv), &rest * &pd * pv));
                                }
                            }
                        }
                    }
                    row.retain(|(_, pr)| !pr.is_zero());
                    row.sort_by_key(|(t, _)| *t);
                    transitions.push(row);
                }
            }
        }
    }
    for _ in nf..ns {
        for _ in 0..ACTIONS.len() {
            transitions.push(vec![(end, Rational::one())]);
        }
    }

    // observation on arriving in `t` by action `a`
    let mut obs_rows: Vec<Distribution> = Vec::with_capacity(ns * ACTIONS.len());
    for t in 0..ns {
        for a in 0..ACTIONS.len() {
            let row = if t >= nf {
                vec![(absorb, Rational::one())]
            } else if a == NOOP {
                vec![(nothing, Rational::one())]
            } else {
                let tau = t / VISIBILITY_LEVELS / bins;
                let d = t / VISIBILITY_LEVELS % bins;
                let correct = if a == PASSIVE { q("0.8") } else { q("0.9") };
                let right = tau * bins + d;
                let wrong = (1 - tau) * bins + (d + 1).min(bins - 1);
                let mut r = vec![(right, correct.clone()), (wrong, Rational::one() - correct)];
                r.sort_by_key(|(o, _)| *o);
                r
            };
            obs_rows.push(row);
        }
    }

    let pomdp = Pomdp::new(
        states,
        ACTIONS.iter().map(|s| s.to_string()).collect(),
        observations,
        transitions,
        ObservationFn::Stochastic(obs_rows),
        rewards,
    )?;
    let fv = p.friend_visibility.unwrap_or(p.v2);
    MultiEnvPomdp::new(
        pomdp,
        vec![flight(FOE, p.d1, p.v1), flight(FOE, p.d2, p.v2), flight(FRIEND, p.d2, fv)],
    )
}
