//! Run provenance: every command that writes an output directory drops a
//! `run.txt` recording the tool version, the command, its inputs and the
//! full configuration in effect. Content is a pure function of the inputs
//! so reruns stay byte-identical.

use crate::config::version_string;
use anyhow::{Context, Result};
use std::fmt::Write as _;
use std::path::Path;

pub const RUN_MANIFEST: &str = "run.txt";

pub fn write_run_manifest(
    out_dir: &Path,
    command: &str,
    details: &[(&str, String)],
    config_echo: Option<&str>,
) -> Result<()> {
    let mut text = String::new();
    let _ = writeln!(text, "version={}", version_string());
    let _ = writeln!(text, "command={command}");
    for (key, value) in details {
        let _ = writeln!(text, "{key}={value}");
    }
    if let Some(echo) = config_echo {
        let _ = writeln!(text, "[config]");
        text.push_str(echo);
    }
    let path = out_dir.join(RUN_MANIFEST);
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
