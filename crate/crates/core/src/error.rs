use thiserror::Error;

use crate::model::Violation;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed document at line {line}, column {column}: {message}")]
    MalformedDocument {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid model: {}", format_violations(.0))]
    InvalidModel(Vec<Violation>),

    #[error("cannot parse number {0:?}")]
    Number(String),

    #[error("unknown {kind} {name:?}")]
    UnknownIdentifier { kind: &'static str, name: String },

    #[error("observation {observation} has probability zero under action {action}")]
    ZeroProbabilityObservation { action: usize, observation: usize },

    #[error("observation {observation} is impossible in every environment under action {action}")]
    GloballyImpossibleObservation { action: usize, observation: usize },

    #[error("policy has no action after history {history:?}")]
    PolicyIncomplete { history: Vec<String> },

    #[error("payoff vectors have different eliminated-environment patterns")]
    MismatchedBotPattern,

    #[error("no child payoff supplied for positive-probability observation {observation}")]
    MissingChild { observation: usize },

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("empty frontier")]
    EmptyFrontier,

    #[error("payoff vector has an eliminated coordinate where a number is required")]
    BotCoordinate,

    #[error("mixture component carries no policy annotation")]
    MissingPolicyAnnotation,

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("fewer than two candidate initial states within the distance bound")]
    NoCandidatePair,

    #[error("deadline exceeded")]
    Timeout,

    #[error("value does not fit the fixed-width exact arithmetic: {0}")]
    NumericOverflow(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
