use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde_json::{json, Value};

use crate::config::{DataSource, RunConfig};
use crate::MissingArtifact;

pub const LOCK_FILE: &str = ".handid.lock";
pub const ERROR_FILE: &str = "error.json";

/// Exclusive claim on an output folder, released on drop.
#[derive(Debug)]
pub struct RunLock {
    path: PathBuf,
}

impl RunLock {
    pub fn acquire(dir: &Path) -> Result<Self> {
        let path = dir.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(RunLock { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => bail!(
                "{} is locked by another handid command; remove {} if no command is running",
                dir.display(),
                path.display()
            ),
            Err(e) => Err(e).with_context(|| format!("creating {}", path.display())),
        }
    }
}

impl Drop for RunLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

pub fn snapshot_name(command: &str) -> String {
    format!("{command}.config.json")
}

fn same_dir(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    }
}

/// Prepares and locks the output folder, runs `body` and then records
/// the config snapshot, which marks the outputs complete.
pub fn with_run_dir(cfg: &RunConfig, overwrite: bool, body: impl FnOnce(&RunConfig) -> Result<()>) -> Result<()> {
    let out = &cfg.out;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    if let DataSource::Folder { root, .. } = &cfg.data {
        if cfg.command != "synth" && same_dir(root, out) {
            bail!("--out must differ from the input dataset folder {}", root.display());
        }
    }
    let _lock = RunLock::acquire(out)?;
    let snapshot = out.join(snapshot_name(&cfg.command));
    if snapshot.exists() && !overwrite {
        bail!(
            "{} already holds {} outputs; pass --overwrite to replace them",
            out.display(),
            cfg.command
        );
    }
    let _ = fs::remove_file(out.join(ERROR_FILE));
    body(cfg)?;
    handid::eval::write_json(&snapshot, cfg)?;
    Ok(())
}

fn error_kind(e: &anyhow::Error) -> &'static str {
    if e.downcast_ref::<MissingArtifact>().is_some() {
        return "missing_artifact";
    }
    let Some(h) = e.chain().find_map(|c| c.downcast_ref::<handid::Error>()) else {
        return "usage";
    };
    let mut h = h;
    while let handid::Error::Repeat { source, .. } = h {
        h = source;
    }
    use handid::Error as E;
    match h {
        E::Shape(_) => "shape",
        E::Parameter(_) => "parameter",
        E::DegenerateWindow { .. } => "degenerate_window",
        E::OutOfDomain { .. } => "out_of_domain",
        E::State(_) => "state",
        E::Data(_) => "data",
        E::Label(_) => "label",
        E::Training { .. } => "training",
        E::Load(_) => "load",
        E::Capacity(_) => "capacity",
        E::Config(_) => "config",
        E::Format { .. } => "format",
        E::Io { .. } => "io",
        E::Csv(_) => "csv",
        E::Image(_) => "image",
        E::Json(_) => "json",
        E::Repeat { .. } => "repeat",
    }
}

/// The JSON record describing a failed command.
pub fn error_record(command: &str, e: &anyhow::Error) -> Value {
    let mut record = json!({
        "command": command,
        "kind": error_kind(e),
        "message": format!("{e:#}"),
    });
    if let Some(m) = e.downcast_ref::<MissingArtifact>() {
        record["path"] = json!(m.path);
        record["producer"] = json!(m.producer);
    }
    if let Some(seed) = e.chain().find_map(|c| match c.downcast_ref::<handid::Error>() {
        Some(handid::Error::Repeat { seed, .. }) => Some(*seed),
        _ => None,
    }) {
        record["seed"] = json!(seed);
    }
    json!({ "error": record })
}

pub fn report_failure(command: &str, out: Option<&Path>, e: &anyhow::Error) -> i32 {
    let record = error_record(command, e);
    eprintln!("{record}");
    if let Some(dir) = out.filter(|d| d.is_dir()) {
        let _ = handid::eval::write_json(&dir.join(ERROR_FILE), &record);
    }
    1
}

/// Line chart of one or more series on the unit square.
pub fn write_svg(path: &Path, title: &str, x_label: &str, series: &[(&str, Vec<(f64, f64)>)]) -> Result<()> {
    const SIZE: f64 = 320.0;
    const PAD: f64 = 40.0;
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    for (_, pts) in series {
        for (x, _) in pts {
            x0 = x0.min(*x);
            x1 = x1.max(*x);
        }
    }
    if !(x1 > x0) {
        x1 = x0 + 1.0;
    }
    let colors = ["#1f77b4", "#d62728", "#2ca02c"];
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{w}\">\n\
         <rect x=\"{PAD}\" y=\"{PAD}\" width=\"{SIZE}\" height=\"{SIZE}\" fill=\"none\" stroke=\"black\"/>\n\
         <text x=\"{PAD}\" y=\"20\">{title}</text>\n\
         <text x=\"{PAD}\" y=\"{b}\">{x_label}: {x0:.3} .. {x1:.3}</text>\n",
        w = SIZE + 2.0 * PAD,
        b = SIZE + 2.0 * PAD - 10.0,
    );
    for (k, (name, pts)) in series.iter().enumerate() {
        let color = colors[k % colors.len()];
        let coords: Vec<String> = pts
            .iter()
            .map(|(x, y)| {
                let px = PAD + (x - x0) / (x1 - x0) * SIZE;
                let py = PAD + (1.0 - y.clamp(0.0, 1.0)) * SIZE;
                format!("{px:.2},{py:.2}")
            })
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" points=\"{}\"/>\n<text x=\"{}\" y=\"{}\" fill=\"{color}\">{name}</text>\n",
            coords.join(" "),
            PAD + 10.0,
            PAD + 20.0 + 16.0 * k as f64
        ));
    }
    svg.push_str("</svg>\n");
    fs::write(path, svg).with_context(|| format!("writing {}", path.display()))
}
