//! Robot navigation on an ASCII map.
//!
//! Map characters: `#` wall, `.` open floor, `=` doorway, `G` goal. The
//! robot occupies a traversable cell (`.`, `=` or `G`) facing one of four
//! directions. Motion is noisy:
//!
//! | action  | outcomes                                   |
//! |---------|--------------------------------------------|
//! | forward | stay 0.11, one cell 0.88, two cells 0.01   |
//! | left    | stay 0.05, turn left 0.9, turn around 0.05 |
//! | right   | stay 0.05, turn right 0.9, turn around 0.05|
//! | declare | ends the episode                           |
//!
//! A blocked move stops at the last free cell. Declaring on a goal cell
//! enters a `+1` state, anywhere else a `-1` state; both lead to an
//! absorbing terminal state.
//!
//! Each pose sees its local signature (front, left, right), each side
//! `open`, `wall` or `doorway`, with probability `0.9^ow · 0.7^door` where
//! `ow` and `door` count the sides of each kind; otherwise it sees `undet`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Distribution, MultiEnvPomdp, ObservationFn, Pomdp};
use crate::scalar::{parse_rational, Rational};

use num_traits::{One, ToPrimitive, Zero};

/// Built-in maps by name.
pub const MAPS: &[(&str, &str)] = &[
    (
        "synth1",
        "\
#########
#...#..G#
#.#.=.#.#
#.......#
#########",
    ),
    (
        "synth2",
        "\
###########
#....=....#
#.##.#.##.#
#.#..G..#.#
#....=....#
###########",
    ),
    (
        "corridor",
        "\
#######
#....G#
#######",
    ),
];

pub fn builtin_map(name: &str) -> Option<&'static str> {
    MAPS.iter().find(|(n, _)| *n == name).map(|(_, m)| *m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotNavParams {
    /// Built-in map name or literal ASCII map.
    pub map: String,
    /// Largest distance to the goal for candidate initial poses.
    pub d: usize,
}

impl RobotNavParams {
    pub fn name(&self) -> String {
        let label = if builtin_map(&self.map).is_some() {
            self.map.as_str()
        } else {
            "custom"
        };
        format!("RN_{}_{}", label, self.d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Cell {
    Wall,
    Open,
    Door,
    Goal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Open,
    Wall,
    Door,
}

const SIDE_NAMES: [&str; 3] = ["open", "wall", "doorway"];
const DIRS: [(isize, isize); 4] = [(0, -1), (1, 0), (0, 1), (-1, 0)];
const DIR_NAMES: [&str; 4] = ["N", "E", "S", "W"];

/// Parsed ASCII map.
#[derive(Debug, Clone)]
pub struct NavMap {
    width: usize,
    height: usize,
    cells: Vec<Cell>,
}

impl NavMap {
    pub fn parse(text: &str) -> Result<Self> {
        let rows: Vec<&str> = text
            .lines()
            .map(str::trim_end)
            .filter(|l| !l.is_empty())
            .collect();
        if rows.is_empty() {
            return Err(Error::InvalidParams("empty map".into()));
        }
        let width = rows.iter().map(|r| r.chars().count()).max().unwrap_or(0);
        let mut cells = Vec::with_capacity(width * rows.len());
        for (y, row) in rows.iter().enumerate() {
            let mut chars = row.chars();
            for x in 0..width {
                cells.push(match chars.next() {
                    None | Some('#') => Cell::Wall,
                    Some('.') => Cell::Open,
                    Some('=') => Cell::Door,
                    Some('G') => Cell::Goal,
                    Some(c) => {
                        return Err(Error::InvalidParams(format!(
                            "unknown map character {c:?} at row {y}, column {x}"
                        )))
                    }
                });
            }
        }
        let map = Self {
            width,
            height: rows.len(),
            cells,
        };
        Ok(map)
    }

    fn at(&self, x: isize, y: isize) -> Cell {
        if x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height {
            Cell::Wall
        } else {
            self.cells[y as usize * self.width + x as usize]
        }
    }

    fn free(&self, x: isize, y: isize) -> bool {
        self.at(x, y) != Cell::Wall
    }

    fn side(&self, x: isize, y: isize, dir: usize) -> Side {
        let (dx, dy) = DIRS[dir];
        match self.at(x + dx, y + dy) {
            Cell::Wall => Side::Wall,
            Cell::Door => Side::Door,
            Cell::Open | Cell::Goal => Side::Open,
        }
    }
}

/// Jensen-Shannon divergence in bits between two distributions over the
/// same alphabet; `0 · log 0 = 0`.
pub fn js_divergence(p: &[f64], q: &[f64]) -> f64 {
    let kl = |a: &[f64], m: &[f64]| -> f64 {
        a.iter()
            .zip(m)
            .filter(|(x, _)| **x > 0.0)
            .map(|(x, y)| x * (x / y).log2())
            .sum()
    };
    let m: Vec<f64> = p.iter().zip(q).map(|(a, b)| (a + b) / 2.0).collect();
    0.5 * kl(p, &m) + 0.5 * kl(q, &m)
}

struct Pose {
    x: isize,
    y: isize,
    dir: usize,
}

/// Generated model plus the divergence of the chosen initial pair.
#[derive(Debug, Clone)]
pub struct RobotNav {
    pub model: MultiEnvPomdp,
    pub divergence: f64,
    pub candidates: usize,
}

pub fn gen_robotnav(p: &RobotNavParams) -> Result<MultiEnvPomdp> {
    Ok(gen_robotnav_detailed(p)?.model)
}

pub fn gen_robotnav_detailed(p: &RobotNavParams) -> Result<RobotNav> {
    let text = builtin_map(&p.map).unwrap_or(&p.map);
    let map = NavMap::parse(text)?;

    let mut poses = Vec::new();
    let mut pose_index = vec![usize::MAX; map.width * map.height * 4];
    for y in 0..map.height as isize {
        for x in 0..map.width as isize {
            if map.free(x, y) {
                for dir in 0..4 {
                    pose_index[(y as usize * map.width + x as usize) * 4 + dir] = poses.len();
                    poses.push(Pose { x, y, dir });
                }
            }
        }
    }
    let np = poses.len();
    let (declared_goal, declared_wrong, terminal) = (np, np + 1, np + 2);
    let ns = np + 3;
    let idx = |x: isize, y: isize, dir: usize| pose_index[(y as usize * map.width + x as usize) * 4 + dir];

    let mut states: Vec<String> = poses
        .iter()
        .map(|s| format!("x{}y{}{}", s.x, s.y, DIR_NAMES[s.dir]))
        .collect();
    states.extend(["declared_goal".into(), "declared_wrong".into(), "terminal".into()]);
    let mut rewards = vec![0i64; ns];
    rewards[declared_goal] = 1;
    rewards[declared_wrong] = -1;

    let actions: Vec<String> = ["forward", "left", "right", "declare"]
        .iter()
        .map(|s| s.to_string())
        .collect();

    let mut observations = Vec::with_capacity(28);
    for f in SIDE_NAMES {
        for l in SIDE_NAMES {
            for r in SIDE_NAMES {
                observations.push(format!("{f}_{l}_{r}"));
            }
        }
    }
    observations.push("undet".into());
    let undet = 27;

    let q = |s: &str| parse_rational(s).expect("literal probability");
    let forward = [(0usize, q("0.11")), (1, q("0.88")), (2, q("0.01"))];
    let turn = [(0usize, q("0.05")), (1, q("0.9")), (2, q("0.05"))];

    let mut transitions: Vec<Distribution> = Vec::with_capacity(ns * 4);
    for pose in &poses {
        let (dx, dy) = DIRS[pose.dir];
        let mut row = Vec::new();
        for (steps, pr) in &forward {
            let mut x = pose.x;
            let mut y = pose.y;
            for _ in 0..*steps {
                if map.free(x + dx, y + dy) {
                    x += dx;
                    y += dy;
                }
            }
            row.push((idx(x, y, pose.dir), pr.clone()));
        }
        transitions.push(merge(row));
        for delta in [3usize, 1] {
            let row = turn
                .iter()
                .map(|(k, pr)| (idx(pose.x, pose.y, (pose.dir + delta * k) % 4), pr.clone()))
                .collect();
            transitions.push(merge(row));
        }
        let goal = map.at(pose.x, pose.y) == Cell::Goal;
        transitions.push(vec![(if goal { declared_goal } else { declared_wrong }, Rational::one())]);
    }
    for _ in [declared_goal, declared_wrong] {
        for _ in 0..4 {
            transitions.push(vec![(terminal, Rational::one())]);
        }
    }
    for _ in 0..4 {
        transitions.push(vec![(terminal, Rational::one())]);
    }

    let mut obs_dist: Vec<Distribution> = Vec::with_capacity(ns);
    for pose in &poses {
        let front = map.side(pose.x, pose.y, pose.dir);
        let left = map.side(pose.x, pose.y, (pose.dir + 3) % 4);
        let right = map.side(pose.x, pose.y, (pose.dir + 1) % 4);
        let sides = [front, left, right];
        let door = sides.iter().filter(|s| **s == Side::Door).count();
        let ow = sides.len() - door;
        let p_corr = num_traits::pow(q("0.9"), ow) * num_traits::pow(q("0.7"), door);
        let code = |s: Side| match s {
            Side::Open => 0,
            Side::Wall => 1,
            Side::Door => 2,
        };
        let sig = code(front) * 9 + code(left) * 3 + code(right);
        obs_dist.push(vec![(sig, p_corr.clone()), (undet, Rational::one() - p_corr)]);
    }
    for _ in 0..3 {
        obs_dist.push(vec![(undet, Rational::one())]);
    }
    let obs_rows: Vec<Distribution> = obs_dist
        .iter()
        .flat_map(|row| std::iter::repeat(row.clone()).take(4))
        .collect();

    // distance to any goal pose over positive-probability motion
    let mut reverse: Vec<Vec<usize>> = vec![Vec::new(); np];
    for s in 0..np {
        for a in 0..3 {
            for (t, _) in &transitions[s * 4 + a] {
                if *t < np && *t != s {
                    reverse[*t].push(s);
                }
            }
        }
    }
    let mut dist = vec![usize::MAX; np];
    let mut queue = VecDeque::new();
    for (s, pose) in poses.iter().enumerate() {
        if map.at(pose.x, pose.y) == Cell::Goal {
            dist[s] = 0;
            queue.push_back(s);
        }
    }
    while let Some(t) = queue.pop_front() {
        for &s in &reverse[t] {
            if dist[s] == usize::MAX {
                dist[s] = dist[t] + 1;
                queue.push_back(s);
            }
        }
    }
    let candidates: Vec<usize> = (0..np).filter(|&s| dist[s] <= p.d).collect();
    if candidates.len() < 2 {
        return Err(Error::NoCandidatePair);
    }
    let as_f64 = |row: &Distribution| -> Vec<f64> {
        let mut v = vec![0.0; 28];
        for (o, pr) in row {
            v[*o] = pr.to_f64().unwrap_or(0.0);
        }
        v
    };
    let mut best = (f64::NEG_INFINITY, 0, 0);
    for (i, &s) in candidates.iter().enumerate() {
        for &t in &candidates[i + 1..] {
            let d = js_divergence(&as_f64(&obs_dist[s]), &as_f64(&obs_dist[t]));
            if d > best.0 {
                best = (d, s, t);
            }
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
    Ok(RobotNav {
        model: MultiEnvPomdp::new(pomdp, vec![best.1, best.2])?,
        divergence: best.0,
        candidates: candidates.len(),
    })
}

fn merge(row: Vec<(usize, Rational)>) -> Distribution {
    let mut out: Distribution = Vec::new();
    for (t, p) in row {
        match out.iter_mut().find(|(u, _)| *u == t) {
            Some((_, q)) => *q += p,
            None => out.push((t, p)),
        }
    }
    out.retain(|(_, p)| !p.is_zero());
    out.sort_by_key(|(t, _)| *t);
    out
}
