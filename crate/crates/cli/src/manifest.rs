use std::fs;
use std::path::Path;

use anyhow::Context;
use serde_json::{json, Value};

/// Arguments with the output directory removed, so that a manifest can be
/// replayed into another directory.
pub fn replayable_args(args: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(args.len());
    let mut skip = false;
    for a in args {
        if skip {
            skip = false;
            continue;
        }
        if a == "--output" || a == "-o" {
            skip = true;
            continue;
        }
        if a.starts_with("--output=") {
            continue;
        }
        out.push(a.clone());
    }
    out
}

pub struct Manifest {
    pub command: String,
    pub args: Vec<String>,
    pub seed: u64,
    pub config_toml: Option<String>,
    pub details: Value,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn write(&self, dir: &Path) -> anyhow::Result<()> {
        let doc = json!({
            "tool": "summer",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "args": self.args,
            "seed": self.seed,
            "config_toml": self.config_toml,
            "details": self.details,
            "outputs": self.outputs,
        });
        let path = dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&doc)? + "\n")
            .with_context(|| format!("writing {}", path.display()))
    }
}

/// Arguments and configuration text recorded in a manifest.
pub fn read(path: &Path) -> anyhow::Result<(Vec<String>, Option<String>)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let doc: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let args = doc["args"]
        .as_array()
        .context("manifest has no `args` list")?
        .iter()
        .map(|a| a.as_str().map(str::to_owned).context("non-string argument in manifest"))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let config = doc["config_toml"].as_str().map(str::to_owned);
    Ok((args, config))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn output_flag_is_dropped() {
        let args: Vec<String> = ["fig-resolution", "--output", "x", "--seed", "3", "-o", "y", "--output=z"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(replayable_args(&args), ["fig-resolution", "--seed", "3"]);
    }
}
