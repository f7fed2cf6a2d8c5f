//! Directory scanning and whole-file reads and writes.

use std::fs;
use std::path::{Path, PathBuf};

use sparseflow::flow::read_flo;
use sparseflow::frame::{read_pgm, write_pgm};
use sparseflow::{FlowField64, Frame64};

use crate::CliError;

pub fn frame_name(prefix: &str, index: usize, ext: &str) -> String {
    format!("{prefix}_{index:05}.{ext}")
}

/// Files in `dir` with extension `ext` (and name prefix, when given), sorted
/// by name.
pub fn list(dir: &Path, prefix: Option<&str>, ext: &str) -> Result<Vec<PathBuf>, CliError> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::Usage(format!("{}: {e}", dir.display())))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| io_err(dir, e))?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if path.extension().and_then(|e| e.to_str()) == Some(ext) && prefix.is_none_or(|p| name.starts_with(p)) {
            paths.push(path);
        }
    }
    paths.sort();
    Ok(paths)
}

pub fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Failed(format!("{}: {e}", path.display()))
}

pub fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| io_err(path, e))
}

pub fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}

pub fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

pub fn load_frame(path: &Path) -> Result<(Frame64, u16), CliError> {
    let pgm = read_pgm::<f64>(&read(path)?).map_err(|e| io_err(path, e))?;
    Ok((pgm.frame, pgm.maxval))
}

pub fn load_flow(path: &Path) -> Result<FlowField64, CliError> {
    read_flo(&read(path)?).map_err(|e| io_err(path, e))
}

/// A `0`/`255` PGM read back as a boolean mask.
pub fn load_mask(path: &Path) -> Result<Vec<bool>, CliError> {
    let (frame, _) = load_frame(path)?;
    Ok(frame.data().iter().map(|&v| v > 0.5).collect())
}

pub fn mask_pgm(width: usize, height: usize, mask: &[bool]) -> Result<Vec<u8>, CliError> {
    let frame = Frame64::new(width, height, mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect())?;
    Ok(write_pgm(&frame, 255)?)
}
