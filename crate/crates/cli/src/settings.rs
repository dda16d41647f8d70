use ergolab::DEFAULT_CELL_CAP;

use crate::error::{CliError, CliResult};

/// Process-wide knobs shared by every subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Settings {
    /// Largest cell count any constructed space may have.
    pub cell_cap: usize,
    /// Worker threads; `None` uses rayon's default.
    pub threads: Option<usize>,
}

impl Default for Settings {
    fn default() -> Self {
        Settings { cell_cap: DEFAULT_CELL_CAP, threads: None }
    }
}

impl Settings {
    pub fn with_threads(self, threads: usize) -> Self {
        Settings { threads: Some(threads), ..self }
    }

    /// Runs `f` on a dedicated pool sized by `threads`.
    pub fn install<T: Send>(&self, f: impl FnOnce() -> T + Send) -> CliResult<T> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = self.threads {
            if n == 0 {
                return Err(CliError::Validation("thread count must be at least 1".into()));
            }
            builder = builder.num_threads(n);
        }
        let pool = builder.build().map_err(|e| CliError::Runtime(format!("cannot start thread pool: {e}")))?;
        Ok(pool.install(f))
    }
}
