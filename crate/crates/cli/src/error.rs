use stormpanel_core::Error as CoreError;

/// Exit status classes of the binary.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("[{stage}] {source}")]
    Stage {
        stage: String,
        #[source]
        source: CoreError,
    },
    #[error("[{stage}] {message}")]
    Stale { stage: String, message: String },
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn stage(stage: &str) -> impl FnOnce(CoreError) -> CliError + '_ {
        move |source| CliError::Stage {
            stage: stage.to_string(),
            source,
        }
    }

    /// 0 success, 1 validation error, 2 data error, 3 internal error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Stale { .. } => 1,
            CliError::Stage { source, .. } => match source {
                CoreError::InvalidParameter(_) => 1,
                _ => 2,
            },
            CliError::Internal(_) => 3,
        }
    }
}
