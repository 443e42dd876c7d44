//! File writers. CSV floats carry 17 significant digits so every value
//! round-trips exactly; JSON uses serde_json's shortest-roundtrip encoding.

use anyhow::{Context, Result};
use qbd_manet::NetworkConfig;
use std::fs;
use std::path::Path;

/// 17 significant digits, enough to reproduce any f64 exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes a CSV with a `# config:` header line recording every parameter.
pub fn write_csv(
    path: &Path,
    cfg: &NetworkConfig,
    columns: &str,
    rows: impl Iterator<Item = String>,
) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut body = format!("# config: {}\n{columns}\n", cfg.header_line());
    for row in rows {
        body.push_str(&row);
        body.push('\n');
    }
    fs::write(path, body).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
