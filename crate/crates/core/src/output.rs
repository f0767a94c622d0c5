//! Deterministic file output: atomic writes, CSV formatting and metadata
//! sidecars.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

/// Crate version plus `git describe` of the build tree when available.
pub fn version_string() -> String {
    match option_env!("KDIMER_GIT_DESCRIBE") {
        Some(g) if !g.is_empty() => format!("{} ({g})", env!("CARGO_PKG_VERSION")),
        _ => env!("CARGO_PKG_VERSION").to_string(),
    }
}

/// Shortest round-trip representation, in exponent form outside
/// `[1e-4, 1e15)`; `nan` for missing values.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x.is_nan() {
        "nan".to_string()
    } else if a == 0.0 || (1e-4..1e15).contains(&a) || a.is_infinite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "nan".to_string(), fmt_f64)
}

/// Writes `contents` to a temporary sibling and renames it into place, so
/// an interrupted run never leaves a partial file at `path`.
pub fn atomic_write(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::Io {
            path: path.display().to_string(),
            source: std::io::Error::new(std::io::ErrorKind::InvalidInput, "not a file path"),
        })?
        .to_string_lossy();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

/// Builds a CSV document from a header and rows.
pub fn csv_document<I>(header: &str, rows: I) -> String
where
    I: IntoIterator<Item = String>,
{
    let mut out = String::with_capacity(1024);
    out.push_str(header);
    out.push('\n');
    for r in rows {
        out.push_str(&r);
        out.push('\n');
    }
    out
}

/// `<out>.meta.json` next to an output file.
pub fn meta_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Metadata sidecar sufficient to reproduce an output.
#[derive(Clone, Debug, Serialize)]
pub struct Metadata<P: Serialize> {
    pub command: String,
    pub version: String,
    pub parameters: P,
}

impl<P: Serialize> Metadata<P> {
    pub fn new(command: &str, parameters: P) -> Self {
        Metadata {
            command: command.to_string(),
            version: version_string(),
            parameters,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))?;
        text.push('\n');
        atomic_write(path, text.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formatting_round_trips() {
        assert_eq!(fmt_f64(1.0), "1");
        assert_eq!(fmt_f64(f64::NAN), "nan");
        assert_eq!(fmt_f64(1.5e-21), "1.5e-21");
        assert_eq!(fmt_f64(-0.25), "-0.25");
        let x = 0.1 + 0.2;
        assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        assert_eq!(meta_path(Path::new("out/g2.csv")), PathBuf::from("out/g2.csv.meta.json"));
    }

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = std::env::temp_dir().join(format!("kd-out-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let p = dir.join("x.csv");
        atomic_write(&p, b"a\n").unwrap();
        atomic_write(&p, b"b\n").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "b\n");
        assert_eq!(fs::read_dir(&dir).unwrap().count(), 1);
        assert!(atomic_write(&dir.join("missing/x.csv"), b"").is_err());
        fs::remove_dir_all(&dir).unwrap();
    }
}
