//! Effective configuration: defaults, then a `key=value` file, then flags.

use std::fs;
use std::path::Path;

use gakit::{KernelConfig, KernelMode, LabelMode};

use crate::failure::{CmdResult, Failure};

#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub kernel: KernelConfig,
    pub seed: u64,
}

impl Default for CliConfig {
    fn default() -> Self {
        Self {
            kernel: KernelConfig::default(),
            seed: 42,
        }
    }
}

/// Flag values; `None` leaves the lower layers in place.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub delta: Option<f64>,
    pub normalize_gak: Option<bool>,
    pub kernel_mode: Option<KernelMode>,
    pub label_single_slice_mode: Option<LabelMode>,
    pub seed: Option<u64>,
    pub cell_cap: Option<usize>,
}

pub fn parse_kernel_mode(s: &str) -> Result<KernelMode, String> {
    match s {
        "triple" => Ok(KernelMode::Triple),
        "shared-only" | "shared_only" => Ok(KernelMode::SharedOnly),
        _ => Err(format!("expected triple or shared-only, got {s:?}")),
    }
}

pub fn parse_label_mode(s: &str) -> Result<LabelMode, String> {
    match s {
        "cosine" => Ok(LabelMode::Cosine),
        "closed-form" | "closed_form" => Ok(LabelMode::ClosedForm),
        _ => Err(format!("expected cosine or closed-form, got {s:?}")),
    }
}

fn kernel_mode_name(m: KernelMode) -> &'static str {
    match m {
        KernelMode::Triple => "triple",
        KernelMode::SharedOnly => "shared-only",
    }
}

fn label_mode_name(m: LabelMode) -> &'static str {
    match m {
        LabelMode::Cosine => "cosine",
        LabelMode::ClosedForm => "closed-form",
    }
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(format!("expected true or false, got {s:?}")),
    }
}

/// Applies one `key=value` line from a config file.
fn apply_key(cfg: &mut CliConfig, key: &str, value: &str) -> Result<(), String> {
    let k = &mut cfg.kernel;
    match key {
        "delta" => k.delta = value.parse().map_err(|e| format!("{e}"))?,
        "normalize_gak" => k.normalize_gak = parse_bool(value)?,
        "kernel_mode" => k.kernel_mode = parse_kernel_mode(value)?,
        "label_single_slice_mode" => k.label_single_slice_mode = parse_label_mode(value)?,
        "seed" => cfg.seed = value.parse().map_err(|e| format!("{e}"))?,
        "cell_cap" => k.cell_cap = value.parse().map_err(|e| format!("{e}"))?,
        _ => return Err("unknown key".into()),
    }
    Ok(())
}

pub fn parse_config_text(text: &str, base: CliConfig) -> CmdResult<CliConfig> {
    let mut cfg = base;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Failure::format(format!("config line {}: expected key=value, got {line:?}", i + 1))
        })?;
        let key = key.trim();
        apply_key(&mut cfg, key, value.trim())
            .map_err(|e| Failure::format(format!("config key {key:?}: {e}")))?;
    }
    Ok(cfg)
}

/// Builds the effective configuration and checks it.
pub fn resolve(file: Option<&Path>, flags: &Overrides) -> CmdResult<CliConfig> {
    let mut cfg = CliConfig::default();
    if let Some(path) = file {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::user(format!("cannot read config {}: {e}", path.display())))?;
        cfg = parse_config_text(&text, cfg)?;
    }
    let k = &mut cfg.kernel;
    if let Some(v) = flags.delta {
        k.delta = v;
    }
    if let Some(v) = flags.normalize_gak {
        k.normalize_gak = v;
    }
    if let Some(v) = flags.kernel_mode {
        k.kernel_mode = v;
    }
    if let Some(v) = flags.label_single_slice_mode {
        k.label_single_slice_mode = v;
    }
    if let Some(v) = flags.cell_cap {
        k.cell_cap = v;
    }
    if let Some(v) = flags.seed {
        cfg.seed = v;
    }
    cfg.kernel.validate()?;
    Ok(cfg)
}

impl CliConfig {
    /// One line, in config-file key order.
    pub fn echo(&self) -> String {
        let k = &self.kernel;
        format!(
            "delta={} normalize_gak={} kernel_mode={} label_single_slice_mode={} seed={} cell_cap={}",
            k.delta,
            k.normalize_gak,
            kernel_mode_name(k.kernel_mode),
            label_mode_name(k.label_single_slice_mode),
            self.seed,
            k.cell_cap
        )
    }
}
