use std::fs;
use std::io::Write;
use std::path::Path;

use tempfile::NamedTempFile;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }
}

impl From<plurisurf::Error> for CliError {
    fn from(e: plurisurf::Error) -> Self {
        CliError::new(e.exit_code() as u8, e.to_string())
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;

/// Unreadable input counts as a parse failure.
pub fn read_input(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::new(3, format!("cannot read {}: {e}", path.display())))
}

/// Write through a temporary file in the target directory, so a failed run
/// never leaves a partial file behind.
pub fn write_output(path: Option<&Path>, contents: &str) -> CliResult {
    let Some(path) = path else {
        print!("{contents}");
        return Ok(());
    };
    let io_err = |e: std::io::Error| CliError::new(1, format!("cannot write {}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(io_err)?;
    let mut tmp = NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(contents.as_bytes()).map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}
