//! The two-tier exception taxonomy shared by every layer of the harness.
//!
//! Each failure anywhere in the loop maps onto exactly one [`ExceptionKind`].
//! NonTerminating kinds discard the attempt and re-sample; Terminating kinds
//! end the run.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tier {
    NonTerminating,
    Terminating,
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tier::NonTerminating => "NonTerminating",
            Tier::Terminating => "Terminating",
        })
    }
}

macro_rules! exception_kinds {
    ($( $tier:ident { $( $(#[$doc:meta])* $name:ident ),* $(,)? } )*) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum ExceptionKind {
            $( $( $(#[$doc])* $name, )* )*
        }

        impl ExceptionKind {
            pub const ALL: &'static [ExceptionKind] = &[ $( $( ExceptionKind::$name, )* )* ];

            pub fn name(self) -> &'static str {
                match self {
                    $( $( ExceptionKind::$name => stringify!($name), )* )*
                }
            }

            /// Tier of this kind under the fixed taxonomy.
            pub fn tier(self) -> Tier {
                match self {
                    $( $( ExceptionKind::$name => Tier::$tier, )* )*
                }
            }
        }

        impl FromStr for ExceptionKind {
            type Err = UnknownExceptionKind;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $( $( stringify!($name) => Ok(ExceptionKind::$name), )* )*
                    other => Err(UnknownExceptionKind(other.to_string())),
                }
            }
        }
    };
}

exception_kinds! {
    NonTerminating {
        /// The completion hit the per-request `max_tokens` limit.
        LongGeneration,
        /// The completion is not well-formed Harmony.
        HarmonyParsingError,
        /// A non-system message carries no channel.
        HarmonyMessageMissingChannel,
        MultipleReasoningMessages,
        MultipleFinalMessages,
        MultipleToolCalls,
        NoToolCallNoFinalMessage,
        ToolCallAndFinalMessage,
        /// The recipient field is not a qualified tool name.
        ToolNameParsingError,
        UnknownToolCalled,
        UnknownToolCallArg,
        ToolCallArgParsingError,
        ExecutionTimeoutError,
    }
    Terminating {
        /// The model produced a final message.
        Submitted,
        /// The step limit was reached.
        LimitsExceeded,
        MaxContextWindowOverflow,
        UnexpectedFinishReason,
        /// The cumulative completion-token budget for the run was spent.
        MaxNewTokensExceeded,
        RetrialsExceeded,
    }
}

/// Tier lookup as a free function.
pub fn classify(kind: ExceptionKind) -> Tier {
    kind.tier()
}

impl ExceptionKind {
    pub fn is_terminating(self) -> bool {
        self.tier() == Tier::Terminating
    }
}

impl fmt::Display for ExceptionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown exception kind `{0}`")]
pub struct UnknownExceptionKind(pub String);

/// An exception instance: a kind plus a human-readable detail.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[error("{kind}: {detail}")]
pub struct HarnessException {
    pub kind: ExceptionKind,
    pub detail: String,
}

impl HarnessException {
    pub fn new(kind: ExceptionKind, detail: impl Into<String>) -> Self {
        HarnessException {
            kind,
            detail: detail.into(),
        }
    }

    pub fn tier(&self) -> Tier {
        self.kind.tier()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_is_thirteen_six() {
        let non = ExceptionKind::ALL
            .iter()
            .filter(|k| classify(**k) == Tier::NonTerminating)
            .count();
        let term = ExceptionKind::ALL
            .iter()
            .filter(|k| classify(**k) == Tier::Terminating)
            .count();
        assert_eq!((non, term), (13, 6));
    }

    #[test]
    fn names_round_trip() {
        for kind in ExceptionKind::ALL {
            assert_eq!(kind.name().parse::<ExceptionKind>().unwrap(), *kind);
        }
        assert!("Hallucination".parse::<ExceptionKind>().is_err());
    }

    #[test]
    fn examples() {
        assert_eq!(classify(ExceptionKind::HarmonyParsingError), Tier::NonTerminating);
        assert_eq!(classify(ExceptionKind::Submitted), Tier::Terminating);
        assert_eq!(classify(ExceptionKind::LongGeneration), Tier::NonTerminating);
        assert_eq!(classify(ExceptionKind::MaxNewTokensExceeded), Tier::Terminating);
    }
}
