use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use siegel_core::render::fnv1a;

/// Overrides the directory that relative output paths resolve against.
pub const OUT_DIR_ENV: &str = "SIEGEL_OUT_DIR";
pub const MANIFEST_SCHEMA: u32 = 1;

pub fn resolve(path: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if path.is_relative() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

/// `image.ppm` → `image.<suffix>`.
pub fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    path.with_file_name(format!("{stem}.{suffix}"))
}

pub struct Run {
    subcommand: &'static str,
    config: Value,
    artifacts: Vec<Value>,
    warnings: Vec<String>,
    primary: PathBuf,
}

impl Run {
    pub fn new(subcommand: &'static str, primary: &Path, config: Value) -> Self {
        Self { subcommand, config, artifacts: Vec::new(), warnings: Vec::new(), primary: resolve(primary) }
    }

    pub fn primary(&self) -> PathBuf {
        self.primary.clone()
    }

    pub fn warn(&mut self, w: impl Into<String>) {
        let w = w.into();
        eprintln!("warning: {w}");
        self.warnings.push(w);
    }

    pub fn write(&mut self, path: &Path, bytes: &[u8]) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.artifacts.push(json!({
            "path": path.display().to_string(),
            "bytes": bytes.len(),
            "fnv1a": format!("{:016x}", fnv1a(bytes)),
        }));
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, path: &Path, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write(path, s.as_bytes())
    }

    /// Writes `<primary>.manifest.json`.
    pub fn finish(self) -> Result<PathBuf> {
        let mut name = self.primary.as_os_str().to_owned();
        name.push(".manifest.json");
        let path = PathBuf::from(name);
        let manifest = json!({
            "schema": MANIFEST_SCHEMA,
            "tool": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "subcommand": self.subcommand,
            "config": self.config,
            "warnings": self.warnings,
            "artifacts": self.artifacts,
        });
        let mut s = serde_json::to_string_pretty(&manifest)?;
        s.push('\n');
        std::fs::write(&path, s).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}
