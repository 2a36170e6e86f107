//! The render, query, parse, validate, execute loop.

mod config;
mod run;
pub mod trajectory;

pub use config::{AgentConfig, ReasoningEffort, Task, DEFAULT_IDENTITY};
pub use run::{handle_finish_reason, Agent, AgentError, LoopState, StepOutcome};
pub use trajectory::{
    ActionRecord, Event, ExceptionRecord, Header, RestartRecord, Termination, Trajectory, TrajectoryError,
    TurnRecord,
};
