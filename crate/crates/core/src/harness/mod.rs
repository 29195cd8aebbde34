//! Game files, experiment commands and their serialized outputs.

mod commands;
mod gamefile;
mod output;

use thiserror::Error;

pub use commands::{
    certify_policy, extract_policy, run_dpp, silhouette, solve_static, solve_stochastic, sweep_v, validate, Context,
    DppOptions,
};
pub use gamefile::{
    parse_game_file, EventsSection, GameFile, PlayerSection, PmfEntry, UtilityEntry, UtilitySection, UtilityTable,
    SINGLETON_EVENT,
};
pub use output::{
    fmt_float, read_policy_csv, trace_header, write_policy_csv, write_silhouette_csv, write_trace_csv,
    ExperimentReport,
};

use crate::dpp::DppError;
use crate::fairness::FairnessError;
use crate::game::GameError;
use crate::optim::OptimError;
use crate::static_eq::StaticError;
use crate::stochastic::StochasticError;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "REPGAME_OUT";

/// Process exit status for each error category.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Io = 1,
    Parse = 2,
    Validation = 3,
    Infeasible = 4,
    SizeCap = 5,
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{section}: {message}")]
    Parse { section: String, message: String },
    #[error("{0}")]
    Usage(String),
    #[error("cannot access {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Fairness(#[from] FairnessError),
    #[error(transparent)]
    Static(#[from] StaticError),
    #[error(transparent)]
    Stochastic(#[from] StochasticError),
    #[error(transparent)]
    Dpp(#[from] DppError),
}

fn optim_category(e: &OptimError) -> ErrorCategory {
    match e {
        OptimError::Fairness(_) | OptimError::MapMismatch { .. } => ErrorCategory::Validation,
        _ => ErrorCategory::Infeasible,
    }
}

fn static_category(e: &StaticError) -> ErrorCategory {
    match e {
        StaticError::Optim(o) => optim_category(o),
        _ => ErrorCategory::Validation,
    }
}

fn stochastic_category(e: &StochasticError) -> ErrorCategory {
    match e {
        StochasticError::EnumerationTooLarge { .. } => ErrorCategory::SizeCap,
        StochasticError::Optim(o) => optim_category(o),
        StochasticError::Static(s) => static_category(s),
        _ => ErrorCategory::Validation,
    }
}

impl HarnessError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Self::Parse { .. } | Self::Usage(_) | Self::Csv(_) => ErrorCategory::Parse,
            Self::Io { .. } | Self::Json(_) => ErrorCategory::Io,
            Self::Game(_) | Self::Fairness(_) => ErrorCategory::Validation,
            Self::Static(e) => static_category(e),
            Self::Stochastic(e) => stochastic_category(e),
            Self::Dpp(DppError::ActionSpaceTooLarge { .. }) => ErrorCategory::SizeCap,
            Self::Dpp(DppError::Stochastic(e)) => stochastic_category(e),
            Self::Dpp(_) => ErrorCategory::Validation,
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.category() as i32
    }

    /// Short machine-readable name of the category.
    pub fn category_name(&self) -> &'static str {
        match self.category() {
            ErrorCategory::Io => "io",
            ErrorCategory::Parse => "parse",
            ErrorCategory::Validation => "validation",
            ErrorCategory::Infeasible => "infeasible",
            ErrorCategory::SizeCap => "size-cap",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_category() {
        let infeasible = HarnessError::Static(StaticError::Optim(OptimError::Infeasible));
        assert_eq!(infeasible.exit_code(), 4);
        let nested = HarnessError::Dpp(DppError::Stochastic(StochasticError::Optim(OptimError::Unbounded)));
        assert_eq!(nested.exit_code(), 4);
        let cap = HarnessError::Stochastic(StochasticError::EnumerationTooLarge {
            player: 0,
            count: 1 << 20,
            cap: 4096,
        });
        assert_eq!((cap.exit_code(), cap.category_name()), (5, "size-cap"));
        assert_eq!(HarnessError::Dpp(DppError::ActionSpaceTooLarge { size: 2, cap: 1 }).exit_code(), 5);
        assert_eq!(HarnessError::Usage("x".into()).exit_code(), 2);
        assert_eq!(HarnessError::Game(GameError::NoPlayers).exit_code(), 3);
        assert_eq!(HarnessError::Dpp(DppError::EmptyTrace).exit_code(), 3);
    }
}
