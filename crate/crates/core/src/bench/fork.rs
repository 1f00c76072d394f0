//! A two-environment model small enough to solve by hand.
//!
//! From `s1` or `s2` the agent picks one of four actions and lands in an
//! absorbing state. Under horizon 1 the four actions pay `(0,1)`, `(1,0)`,
//! `(0.9,0.6)` and `(0.6,0.9)` across the two environments; the best
//! deterministic choice guarantees 0.6 and the even mixture of `c` and `d`
//! guarantees 0.75.

use crate::model::{parse_model, MultiEnvPomdp};

const DOCUMENT: &str = r#"{
  "states": ["s1", "s2", "t1", "t2", "t3", "t4", "t5", "t6", "t7", "t8", "t9", "t10", "t11", "t12"],
  "actions": ["a", "b", "c", "d"],
  "observations": ["o1", "o2"],
  "transitions": {
    "s1": { "a": {"t1": "1"}, "b": {"t2": "1"}, "c": {"t3": "0.1", "t4": "0.9"}, "d": {"t5": "0.4", "t6": "0.6"} },
    "s2": { "a": {"t7": "1"}, "b": {"t8": "1"}, "c": {"t9": "0.4", "t10": "0.6"}, "d": {"t11": "0.1", "t12": "0.9"} },
    "t1": { "a": {"t1": "1"}, "b": {"t1": "1"}, "c": {"t1": "1"}, "d": {"t1": "1"} },
    "t2": { "a": {"t2": "1"}, "b": {"t2": "1"}, "c": {"t2": "1"}, "d": {"t2": "1"} },
    "t3": { "a": {"t3": "1"}, "b": {"t3": "1"}, "c": {"t3": "1"}, "d": {"t3": "1"} },
    "t4": { "a": {"t4": "1"}, "b": {"t4": "1"}, "c": {"t4": "1"}, "d": {"t4": "1"} },
    "t5": { "a": {"t5": "1"}, "b": {"t5": "1"}, "c": {"t5": "1"}, "d": {"t5": "1"} },
    "t6": { "a": {"t6": "1"}, "b": {"t6": "1"}, "c": {"t6": "1"}, "d": {"t6": "1"} },
    "t7": { "a": {"t7": "1"}, "b": {"t7": "1"}, "c": {"t7": "1"}, "d": {"t7": "1"} },
    "t8": { "a": {"t8": "1"}, "b": {"t8": "1"}, "c": {"t8": "1"}, "d": {"t8": "1"} },
    "t9": { "a": {"t9": "1"}, "b": {"t9": "1"}, "c": {"t9": "1"}, "d": {"t9": "1"} },
    "t10": { "a": {"t10": "1"}, "b": {"t10": "1"}, "c": {"t10": "1"}, "d": {"t10": "1"} },
    "t11": { "a": {"t11": "1"}, "b": {"t11": "1"}, "c": {"t11": "1"}, "d": {"t11": "1"} },
    "t12": { "a": {"t12": "1"}, "b": {"t12": "1"}, "c": {"t12": "1"}, "d": {"t12": "1"} }
  },
  "observation_fn": { "deterministic": {
    "s1": "o1", "s2": "o1", "t1": "o1", "t2": "o1", "t3": "o2", "t4": "o2", "t5": "o1", "t6": "o1",
    "t7": "o1", "t8": "o1", "t9": "o1", "t10": "o1", "t11": "o1", "t12": "o1"
  } },
  "rewards": { "t2": 1, "t4": 1, "t6": 1, "t7": 1, "t10": 1, "t12": 1 },
  "initial_states": ["s1", "s2"]
}
"#;

/// The example as a JSON model document.
pub fn fork_document() -> &'static str {
    DOCUMENT
}

/// The example model.
pub fn fork_example() -> MultiEnvPomdp {
    parse_model(DOCUMENT).expect("embedded example is valid")
}
