use thiserror::Error;

/// Failures the runner classifies for its exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("cannot compare bundles: {0}")]
    Comparison(String),

    #[error("fold {fold} failed: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: eegnet_core::Error,
    },
}

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_INVARIANT: i32 = 4;

/// Exit status for an error chain: configuration problems 2, invariant
/// violations 4, everything else (data, I/O, numerics) 3.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<CliError>() {
            return match e {
                CliError::Config(_) => EXIT_CONFIG,
                CliError::Invariant(_) => EXIT_INVARIANT,
                CliError::Comparison(_) | CliError::Fold { .. } => EXIT_DATA,
            };
        }
        if let Some(e) = cause.downcast_ref::<eegnet_core::Error>() {
            return match e {
                eegnet_core::Error::Spec(_) => EXIT_CONFIG,
                _ => EXIT_DATA,
            };
        }
    }
    EXIT_DATA
}
