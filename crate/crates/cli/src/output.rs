use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// Write the primary output and its manifest.
///
/// With `out`, the manifest goes to `<out>.json`; otherwise the primary
/// output goes to stdout and the manifest to stderr.
pub fn emit(out: Option<&Path>, primary: &str, manifest: &impl Serialize) -> Result<()> {
    let json = serde_json::to_string_pretty(manifest)?;
    match out {
        Some(path) => {
            std::fs::write(path, primary).with_context(|| format!("writing {}", path.display()))?;
            let side = manifest_path(path);
            std::fs::write(&side, json + "\n").with_context(|| format!("writing {}", side.display()))?;
        }
        None => {
            std::io::stdout().lock().write_all(primary.as_bytes())?;
            eprintln!("{json}");
        }
    }
    Ok(())
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

#[derive(Debug, Serialize)]
pub struct Manifest<C: Serialize, S: Serialize> {
    pub command: &'static str,
    pub version: &'static str,
    pub config: C,
    pub summary: S,
}

impl<C: Serialize, S: Serialize> Manifest<C, S> {
    pub fn new(command: &'static str, config: C, summary: S) -> Self {
        Self { command, version: env!("CARGO_PKG_VERSION"), config, summary }
    }
}

/// CSV cell for an optional number; empty when absent.
pub fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Map `f` over `items` on up to `jobs` threads; results keep input order.
pub fn par_map<I: Sync, O: Send>(items: &[I], jobs: usize, f: impl Fn(&I) -> O + Sync) -> Vec<O> {
    let jobs = jobs.clamp(1, items.len().max(1));
    if jobs == 1 {
        return items.iter().map(f).collect();
    }
    let chunk = items.len().div_ceil(jobs);
    std::thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|part| {
                let f = &f;
                s.spawn(move || part.iter().map(f).collect::<Vec<_>>())
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}

pub fn default_jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}
