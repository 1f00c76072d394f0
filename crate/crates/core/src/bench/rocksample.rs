//! RockSample: an agent on an `m × m` grid samples rocks whose qualities
//! it cannot see directly.
//!
//! Each environment fixes which `g` of the `t` rocks are good. Rewards are
//! state rewards, so a sample lands in a transient state flagged with its
//! outcome: `+10` for a good rock (which then turns bad), `-10` for a bad
//! one. Leaving the grid through the east edge ends the episode. A check
//! action reports the quality of one rock, correctly with probability
//! `(1 + 2^(-dist/d0)) / 2` for the Euclidean distance `dist`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Distribution, MultiEnvPomdp, ObservationFn, Pomdp};
use crate::scalar::{decimal_from_f64, Rational};

use num_traits::One;

/// Decimal places kept for sensor accuracies.
const ACCURACY_DECIMALS: u32 = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RockSampleParams {
    pub m: usize,
    pub g: usize,
    pub t: usize,
    /// Rock cells as `(x, y)`; defaults to [`default_positions`].
    #[serde(default)]
    pub positions: Option<Vec<(usize, usize)>>,
    /// Sensor half-efficiency distance; defaults to `m`.
    #[serde(default)]
    pub d0: Option<f64>,
}

impl RockSampleParams {
    pub fn new(m: usize, g: usize, t: usize) -> Self {
        Self {
            m,
            g,
            t,
            positions: None,
            d0: None,
        }
    }

    pub fn name(&self) -> String {
        format!("RS_{}_{}_{}", self.m, self.g, self.t)
    }

    fn resolved_positions(&self) -> Vec<(usize, usize)> {
        self.positions
            .clone()
            .unwrap_or_else(|| default_positions(self.m, self.t))
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if self.m == 0 {
            return bad("grid size must be positive".into());
        }
        if self.t == 0 || self.t > 16 {
            return bad(format!("rock count {} outside 1..=16", self.t));
        }
        if self.g > self.t {
            return bad(format!("{} good rocks out of {}", self.g, self.t));
        }
        let pos = self.resolved_positions();
        if pos.len() != self.t {
            return bad(format!("{} positions for {} rocks", pos.len(), self.t));
        }
        if let Some(&(x, y)) = pos.iter().find(|(x, y)| *x >= self.m || *y >= self.m) {
            return bad(format!("rock at ({x}, {y}) outside the grid"));
        }
        for (i, p) in pos.iter().enumerate() {
            if pos[..i].contains(p) {
                return bad(format!("two rocks share cell {p:?}"));
            }
        }
        if let Some(d0) = self.d0 {
            if !(d0 > 0.0 && d0.is_finite()) {
                return bad(format!("d0 must be positive, got {d0}"));
            }
        }
        Ok(())
    }
}

/// Rock `j` sits at cell index `⌊j·m²/t⌋` in row-major order.
pub fn default_positions(m: usize, t: usize) -> Vec<(usize, usize)> {
    (0..t)
        .map(|j| {
            let c = j * m * m / t.max(1);
            (c % m, c / m)
        })
        .collect()
}

/// All `g`-subsets of `0..t` in lexicographic order.
pub fn combinations(t: usize, g: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, t: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for i in start..=t - left {
            cur.push(i);
            go(i + 1, t, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if g <= t {
        go(0, t, g, &mut Vec::new(), &mut out);
    }
    out
}

/// Probability that checking a rock at distance `dist` reports its true
/// quality, rounded to six decimals.
pub fn check_accuracy(dist: f64, d0: f64) -> Rational {
    decimal_from_f64((1.0 + (-dist / d0).exp2()) / 2.0, ACCURACY_DECIMALS)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Event {
    None,
    Good,
    Bad,
}

const EVENTS: [Event; 3] = [Event::None, Event::Good, Event::Bad];

pub fn gen_rocksample(p: &RockSampleParams) -> Result<MultiEnvPomdp> {
    p.validate()?;
    let (m, t) = (p.m, p.t);
    let pos = p.resolved_positions();
    let d0 = p.d0.unwrap_or(m as f64);
    let cells = m * m;
    let masks = 1usize << t;
    let index = |cell: usize, mask: usize, ev: usize| (cell * masks + mask) * 3 + ev;
    let terminal = cells * masks * 3;
    let ns = terminal + 1;

    let mut states = Vec::with_capacity(ns);
    let mut rewards = Vec::with_capacity(ns);
    for cell in 0..cells {
        for mask in 0..masks {
            for (e, ev) in EVENTS.iter().enumerate() {
                let bits: String = (0..t)
                    .map(|j| if mask >> j & 1 == 1 { 'G' } else { 'B' })
                    .collect();
                let tag = ["", "+", "-"][e];
                states.push(format!("x{}y{}{}{}", cell % m, cell / m, bits, tag));
                rewards.push(match ev {
                    Event::None => 0,
                    Event::Good => 10,
                    Event::Bad => -10,
                });
            }
        }
    }
    states.push("exit".into());
    rewards.push(0);

    let mut actions: Vec<String> = ["north", "south", "east", "west", "sample"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    actions.extend((0..t).map(|j| format!("check{j}")));
    let na = actions.len();
    let observations: Vec<String> = ["none", "good", "bad"].iter().map(|s| s.to_string()).collect();
    let (o_none, o_good, o_bad) = (0usize, 1usize, 2usize);

    let one = Rational::one;
    let mut transitions: Vec<Distribution> = Vec::with_capacity(ns * na);
    for s in 0..ns {
        for a in 0..na {
            let row = if s == terminal {
                vec![(terminal, one())]
            } else {
                let cell = s / 3 / masks;
                let mask = s / 3 % masks;
                let (x, y) = (cell % m, cell / m);
                let target = match a {
                    0 => index((y + 1).min(m - 1) * m + x, mask, 0),
                    1 => index(y.saturating_sub(1) * m + x, mask, 0),
                    2 if x + 1 == m => terminal,
                    2 => index(y * m + x + 1, mask, 0),
                    3 => index(y * m + x.saturating_sub(1), mask, 0),
                    4 => match pos.iter().position(|&q| q == (x, y)) {
                        Some(j) if mask >> j & 1 == 1 => index(cell, mask & !(1 << j), 1),
                        Some(_) => index(cell, mask, 2),
                        None => index(cell, mask, 0),
                    },
                    _ => index(cell, mask, 0),
                };
                vec![(target, one())]
            };
            transitions.push(row);
        }
    }

    // observation after reaching `s` by action `a`
    let mut obs_rows: Vec<Distribution> = Vec::with_capacity(ns * na);
    for s in 0..ns {
        for a in 0..na {
            let row = if a < 5 || s == terminal {
                vec![(o_none, one())]
            } else {
                let j = a - 5;
                let cell = s / 3 / masks;
                let mask = s / 3 % masks;
                let (x, y) = ((cell % m) as f64, (cell / m) as f64);
                let (rx, ry) = (pos[j].0 as f64, pos[j].1 as f64);
                let acc = check_accuracy(((x - rx).powi(2) + (y - ry).powi(2)).sqrt(), d0);
                let miss = one() - &acc;
                let (truth, other) = if mask >> j & 1 == 1 {
                    (o_good, o_bad)
                } else {
                    (o_bad, o_good)
                };
                let mut r = vec![(truth, acc), (other, miss)];
                r.retain(|(_, p)| *p != Rational::from_integer(0.into()));
                r.sort_by_key(|(o, _)| *o);
                r
            };
            obs_rows.push(row);
        }
    }

    let pomdp = Pomdp::new(
        states,
        actions,
        observations,
        transitions,
        ObservationFn::Stochastic(obs_rows),
        rewards,
    )?;
    let initial = combinations(t, p.g)
        .into_iter()
        .map(|good| {
            let mask = good.iter().fold(0usize, |acc, j| acc | 1 << j);
            index(0, mask, 0)
        })
        .collect();
    MultiEnvPomdp::new(pomdp, initial)
}
