//! Locale-independent number formatting, CSV writers and run manifests.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use super::CliError;

/// `x` with `digits` significant digits in positional notation.
pub fn sig(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return format!("{:.*}", digits.saturating_sub(1), 0.0);
    }
    // the exponent after rounding, so 0.9999996 becomes 1.00000
    let sci = format!("{:.*e}", digits.saturating_sub(1), x);
    let exp: i32 = sci.rsplit('e').next().and_then(|e| e.parse().ok()).unwrap_or(0);
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}

pub fn ratio(x: f64) -> String {
    sig(x, 6)
}

pub fn risk(x: f64) -> String {
    sig(x, 10)
}

/// Shortest representation that parses back to the same value.
pub fn real(x: f64) -> String {
    format!("{x}")
}

pub fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

pub fn create(path: &Path) -> Result<File, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Usage(format!("cannot create directory {}: {e}", dir.display())))?;
    }
    File::create(path).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

pub fn csv_file(path: &Path) -> Result<csv::Writer<File>, CliError> {
    Ok(csv_writer(create(path)?))
}

/// `dir/stem.csv` style siblings of an output path.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "output".into());
    path.with_file_name(format!("{stem}{suffix}"))
}

/// Ordered `key=value` record of a run.
#[derive(Debug, Clone, Default)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let mut m = Self::default();
        m.set("command", command);
        m.set("version", crate::VERSION);
        m.set("timestamp", timestamp);
        m
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        let value = value.to_string().replace(['\n', '\r'], " ");
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(entry) => entry.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn write_to(&self, mut w: impl Write) -> io::Result<()> {
        for (k, v) in &self.entries {
            writeln!(w, "{k}={v}")?;
        }
        w.flush()
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        self.write_to(create(path)?)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
    }
}

pub fn join<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
    items.iter().map(f).collect::<Vec<_>>().join(",")
}
