//! The portable JSON model document.
//!
//! ```json
//! {
//!   "states": ["s1", "t1"],
//!   "actions": ["a"],
//!   "observations": ["o1"],
//!   "transitions": { "s1": { "a": { "t1": "1" } }, "t1": { "a": { "t1": "1" } } },
//!   "observation_fn": { "deterministic": { "s1": "o1", "t1": "o1" } },
//!   "rewards": { "t1": 1 },
//!   "initial_states": ["s1"]
//! }
//! ```
//!
//! Probabilities are strings holding a decimal (`"0.25"`) or a fraction
//! (`"1/3"`) and are read exactly; bare JSON numbers are accepted and read
//! from their decimal text. The stochastic observation variant is keyed by
//! reached state, then action: `{"stochastic": {"t1": {"a": {"o1": "1"}}}}`.
//! Rewards default to 0 for states not listed. Unknown fields are rejected.

use std::collections::HashMap;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{Distribution, MultiEnvPomdp, ObservationFn, Pomdp, Violation};
use crate::error::{Error, Result};
use crate::scalar::{format_rational, parse_rational};

/// A probability as written in a document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProbText {
    Text(String),
    Number(serde_json::Number),
}

impl ProbText {
    fn as_text(&self) -> String {
        match self {
            ProbText::Text(s) => s.clone(),
            ProbText::Number(n) => n.to_string(),
        }
    }
}

type Row = IndexMap<String, ProbText>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservationDocument {
    Deterministic(IndexMap<String, String>),
    Stochastic(IndexMap<String, IndexMap<String, Row>>),
}

/// Name-keyed form of a [`MultiEnvPomdp`], as read from or written to disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub states: Vec<String>,
    pub actions: Vec<String>,
    pub observations: Vec<String>,
    pub transitions: IndexMap<String, IndexMap<String, Row>>,
    pub observation_fn: ObservationDocument,
    #[serde(default)]
    pub rewards: IndexMap<String, i64>,
    pub initial_states: Vec<String>,
}

impl ModelDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::MalformedDocument {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serialization cannot fail")
    }

    /// Resolves names and checks every invariant. Returns the model, or all
    /// violations found.
    fn build(&self) -> (Option<MultiEnvPomdp>, Vec<Violation>) {
        let mut out = Vec::new();
        let index = |names: &[String]| -> HashMap<String, usize> {
            names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect()
        };
        let si = index(&self.states);
        let ai = index(&self.actions);
        let oi = index(&self.observations);
        let (ns, na) = (self.states.len(), self.actions.len());

        let mut rows: Vec<Option<Distribution>> = vec![None; ns * na];
        for (s_name, by_action) in &self.transitions {
            let Some(&s) = si.get(s_name) else {
                out.push(Violation::new("transitions", format!("unknown state {s_name:?}")));
                continue;
            };
            for (a_name, row) in by_action {
                let Some(&a) = ai.get(a_name) else {
                    out.push(Violation::new(
                        format!("transitions[{s_name}]"),
                        format!("unknown action {a_name:?}"),
                    ));
                    continue;
                };
                let loc = format!("transitions[{s_name}][{a_name}]");
                rows[s * na + a] = Some(read_row(&loc, row, &si, "state", &mut out));
            }
        }
        let mut transitions = Vec::with_capacity(ns * na);
        for s in 0..ns {
            for a in 0..na {
                match rows[s * na + a].take() {
                    Some(r) => transitions.push(r),
                    None => {
                        out.push(Violation::new(
                            format!("transitions[{}][{}]", self.states[s], self.actions[a]),
                            "missing distribution",
                        ));
                        transitions.push(Vec::new());
                    }
                }
            }
        }

        let observation_fn = match &self.observation_fn {
            ObservationDocument::Deterministic(map) => {
                let mut obs = vec![usize::MAX; ns];
                for (s_name, o_name) in map {
                    match (si.get(s_name), oi.get(o_name)) {
                        (Some(&s), Some(&o)) => obs[s] = o,
                        (None, _) => out.push(Violation::new(
                            "observation_fn.deterministic",
                            format!("unknown state {s_name:?}"),
                        )),
                        (_, None) => out.push(Violation::new(
                            format!("observation_fn.deterministic[{s_name}]"),
                            format!("unknown observation {o_name:?}"),
                        )),
                    }
                }
                for (s, o) in obs.iter_mut().enumerate() {
                    if *o == usize::MAX {
                        out.push(Violation::new(
                            format!("observation_fn.deterministic[{}]", self.states[s]),
                            "missing observation",
                        ));
                        *o = 0;
                    }
                }
                ObservationFn::Deterministic(obs)
            }
            ObservationDocument::Stochastic(map) => {
                let mut orows: Vec<Option<Distribution>> = vec![None; ns * na];
                for (t_name, by_action) in map {
                    let Some(&t) = si.get(t_name) else {
                        out.push(Violation::new(
                            "observation_fn.stochastic",
                            format!("unknown state {t_name:?}"),
                        ));
                        continue;
                    };
                    for (a_name, row) in by_action {
                        let Some(&a) = ai.get(a_name) else {
                            out.push(Violation::new(
                                format!("observation_fn.stochastic[{t_name}]"),
                                format!("unknown action {a_name:?}"),
                            ));
                            continue;
                        };
                        let loc = format!("observation_fn.stochastic[{t_name}][{a_name}]");
                        orows[t * na + a] = Some(read_row(&loc, row, &oi, "observation", &mut out));
                    }
                }
                let mut full = Vec::with_capacity(ns * na);
                for t in 0..ns {
                    for a in 0..na {
                        match orows[t * na + a].take() {
                            Some(r) => full.push(r),
                            None => {
                                out.push(Violation::new(
                                    format!(
                                        "observation_fn.stochastic[{}][{}]",
                                        self.states[t], self.actions[a]
                                    ),
                                    "missing distribution",
                                ));
                                full.push(Vec::new());
                            }
                        }
                    }
                }
                ObservationFn::Stochastic(full)
            }
        };

        let mut rewards = vec![0i64; ns];
        for (s_name, r) in &self.rewards {
            match si.get(s_name) {
                Some(&s) => rewards[s] = *r,
                None => out.push(Violation::new("rewards", format!("unknown state {s_name:?}"))),
            }
        }

        let mut initial = Vec::with_capacity(self.initial_states.len());
        for name in &self.initial_states {
            match si.get(name) {
                Some(&s) => initial.push(s),
                None => out.push(Violation::new(
                    "initial_states",
                    format!("unknown state {name:?}"),
                )),
            }
        }

        let pomdp = Pomdp::new_unchecked(
            self.states.clone(),
            self.actions.clone(),
            self.observations.clone(),
            transitions,
            observation_fn,
            rewards,
        );
        let model = MultiEnvPomdp {
            pomdp,
            initial_states: initial,
        };
        // structural checks on whatever resolved; skip the ones already
        // reported as missing rows
        for v in model.violations() {
            let duplicate = out.iter().any(|o| o.location == v.location);
            if !duplicate {
                out.push(v);
            }
        }
        if self.initial_states.len() != model.initial_states.len() {
            return (None, out);
        }
        if out.is_empty() {
            (Some(model), out)
        } else {
            (None, out)
        }
    }
}

fn read_row(
    loc: &str,
    row: &Row,
    names: &HashMap<String, usize>,
    what: &str,
    out: &mut Vec<Violation>,
) -> Distribution {
    let mut dist = Vec::with_capacity(row.len());
    for (name, p) in row {
        let Some(&i) = names.get(name) else {
            out.push(Violation::new(loc, format!("unknown {what} {name:?}")));
            continue;
        };
        match parse_rational(&p.as_text()) {
            Ok(q) => dist.push((i, q)),
            Err(_) => out.push(Violation::new(
                loc,
                format!("cannot parse probability {:?}", p.as_text()),
            )),
        }
    }
    dist
}

impl MultiEnvPomdp {
    /// Name-keyed document for this model.
    pub fn to_document(&self) -> ModelDocument {
        let p = &self.pomdp;
        let (ns, na) = (p.num_states(), p.num_actions());
        let row = |d: &Distribution, names: &[String]| -> Row {
            d.iter()
                .map(|(i, q)| (names[*i].clone(), ProbText::Text(format_rational(q))))
                .collect()
        };
        let mut transitions = IndexMap::new();
        for s in 0..ns {
            let mut by_action = IndexMap::new();
            for a in 0..na {
                by_action.insert(p.actions[a].clone(), row(p.transition(s, a), &p.states));
            }
            transitions.insert(p.states[s].clone(), by_action);
        }
        let observation_fn = match &p.observation_fn {
            ObservationFn::Deterministic(obs) => ObservationDocument::Deterministic(
                obs.iter()
                    .enumerate()
                    .map(|(s, o)| (p.states[s].clone(), p.observations[*o].clone()))
                    .collect(),
            ),
            ObservationFn::Stochastic(rows) => {
                let mut map = IndexMap::new();
                for t in 0..ns {
                    let mut by_action = IndexMap::new();
                    for a in 0..na {
                        by_action.insert(p.actions[a].clone(), row(&rows[t * na + a], &p.observations));
                    }
                    map.insert(p.states[t].clone(), by_action);
                }
                ObservationDocument::Stochastic(map)
            }
        };
        let rewards = p
            .rewards
            .iter()
            .enumerate()
            .filter(|(_, r)| **r != 0)
            .map(|(s, r)| (p.states[s].clone(), *r))
            .collect();
        ModelDocument {
            states: p.states.clone(),
            actions: p.actions.clone(),
            observations: p.observations.clone(),
            transitions,
            observation_fn,
            rewards,
            initial_states: self
                .initial_states
                .iter()
                .map(|&s| p.states[s].clone())
                .collect(),
        }
    }

    pub fn from_document(doc: &ModelDocument) -> Result<Self> {
        match doc.build() {
            (Some(m), _) => Ok(m),
            (None, violations) => Err(Error::InvalidModel(violations)),
        }
    }
}

/// Every invariant violation in `doc`; empty iff the document describes a
/// valid model.
pub fn validate_model(doc: &ModelDocument) -> Vec<Violation> {
    doc.build().1
}

/// Parses and validates a JSON model document.
pub fn parse_model(text: &str) -> Result<MultiEnvPomdp> {
    MultiEnvPomdp::from_document(&ModelDocument::from_json(text)?)
}

/// Serializes a model to its JSON document.
pub fn write_model(m: &MultiEnvPomdp) -> String {
    m.to_document().to_json()
}
