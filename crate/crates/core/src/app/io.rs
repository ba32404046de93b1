use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use serde::Serialize;

use super::AppError;
use crate::geometry::GeneratorSet;

/// Reads a state file: `{"positions": [[x, y], …], "weights": […]}`.
pub fn read_generators(path: &Path) -> Result<GeneratorSet, AppError> {
    let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| AppError::Config(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, AppError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| AppError::io(path, e))
}

/// Pretty-printed JSON.
pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), AppError> {
    let w = create(path)?;
    serde_json::to_writer_pretty(w, value).map_err(|e| AppError::io(path, e))
}

/// One header row from the field names, then one row per record.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), AppError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for r in rows {
        w.serialize(r).map_err(|e| AppError::io(path, e))?;
    }
    w.flush().map_err(|e| AppError::io(path, e))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), AppError> {
    use std::io::Write;
    let mut w = create(path)?;
    w.write_all(text.as_bytes())
        .map_err(|e| AppError::io(path, e))
}

pub(crate) fn write_with(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<(), AppError> {
    let mut w = create(path)?;
    f(&mut w).map_err(|e| AppError::io(path, e))
}
