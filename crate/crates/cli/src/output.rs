use std::fs;
use std::path::{Path, PathBuf};

use crate::error::CliError;

/// Artifacts are written only after every one of them passes the overwrite
/// check, so a refused run leaves the directory untouched.
pub fn write_artifacts(dir: &Path, files: &[(&str, Vec<u8>)], force: bool) -> Result<Vec<PathBuf>, CliError> {
    let mut pending = Vec::new();
    for (name, bytes) in files {
        let path = dir.join(name);
        match fs::read(&path) {
            Ok(existing) if existing == *bytes => {}
            Ok(_) if !force => {
                return Err(CliError::WouldOverwrite {
                    path: path.display().to_string(),
                })
            }
            _ => pending.push((path, bytes)),
        }
    }
    fs::create_dir_all(dir)?;
    for (path, bytes) in &pending {
        fs::write(path, bytes)?;
    }
    Ok(files.iter().map(|(n, _)| dir.join(n)).collect())
}
