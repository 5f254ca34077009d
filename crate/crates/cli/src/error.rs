use std::fmt;
use std::io;
use std::path::Path;

use cast_core::corpus::CorpusError;
use cast_core::embedding_store::StoreError;
use cast_core::evaluation::{EvalError, JudgeError};
use cast_core::topic_model::FitError;

pub const EXIT_DATA: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_EXTERNAL: u8 = 3;

/// Failure with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_DATA,
            message: message.into(),
        }
    }

    /// An input file that could not be opened.
    pub fn input(path: &Path, e: io::Error) -> Self {
        let code = if e.kind() == io::ErrorKind::InvalidData {
            EXIT_DATA
        } else {
            EXIT_USAGE
        };
        CliError {
            code,
            message: format!("cannot read {}: {e}", path.display()),
        }
    }

    pub fn output(path: &Path, e: io::Error) -> Self {
        CliError::data(format!("cannot write {}: {e}", path.display()))
    }

    pub fn from_corpus(e: CorpusError) -> Self {
        match e {
            CorpusError::Io { path, source } => CliError::input(&path, source),
            other => CliError::data(other.to_string()),
        }
    }

    pub fn from_store(path: &Path, e: StoreError) -> Self {
        match e {
            StoreError::Io { path, source } => CliError::input(&path, source),
            other => CliError::data(format!("{}: {other}", path.display())),
        }
    }

    pub fn from_fit(e: FitError) -> Self {
        let code = match e {
            FitError::Input(_) => EXIT_USAGE,
            _ => EXIT_DATA,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }

    pub fn from_eval(e: EvalError) -> Self {
        CliError::data(format!("[eval] {e}"))
    }

    pub fn from_judge(e: JudgeError) -> Self {
        let mut message = format!("[llm-judge] {e}");
        if let JudgeError::Unparseable { transcripts, .. } = &e {
            for (i, t) in transcripts.iter().enumerate() {
                message.push_str(&format!("\n--- response {} ---\n{}", i + 1, t.response));
            }
        }
        CliError {
            code: EXIT_EXTERNAL,
            message,
        }
    }
}
