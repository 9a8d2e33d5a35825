use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProverError {
    #[error("unknown command '{0}'")]
    UnknownCommand(String),
    #[error("{0}")]
    BadArguments(String),
    #[error("formula {0} {1}")]
    BadFnum(i64, String),
    #[error("ill-typed term: {0}")]
    IllTyped(String),
    #[error("{0}")]
    Expand(String),
    #[error("nothing to undo")]
    UndoAtRoot,
    #[error("no open goal")]
    NoActiveGoal,
    #[error("theory '{0}' has type errors")]
    NotTypechecked(String),
    #[error("no formula named '{0}'")]
    FormulaNotFound(String),
    #[error("step {step} ({command}) failed: {message}")]
    StepFailed { step: usize, command: String, message: String, sequent: String },
}

impl ProverError {
    /// Stable identifier used on the wire.
    pub fn code(&self) -> &'static str {
        match self {
            ProverError::UnknownCommand(_) => "unknown-command",
            ProverError::BadArguments(_) => "bad-arguments",
            ProverError::BadFnum(..) => "bad-fnum",
            ProverError::IllTyped(_) => "ill-typed-term",
            ProverError::Expand(_) => "bad-definition",
            ProverError::UndoAtRoot => "undo-at-root",
            ProverError::NoActiveGoal => "no-active-goal",
            ProverError::NotTypechecked(_) => "not-typechecked",
            ProverError::FormulaNotFound(_) => "formula-not-found",
            ProverError::StepFailed { .. } => "command-failed-at-step",
        }
    }
}
