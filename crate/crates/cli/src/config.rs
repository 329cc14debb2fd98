//! Defaults file: flat TOML `key = value` pairs with `#` comments.

use std::path::Path;

use serde::Deserialize;

use scde_core::threshold::ThresholdConfig;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    pub threshold: ThresholdConfig,
    pub jobs: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            threshold: ThresholdConfig::default(),
            jobs: 1,
        }
    }
}

/// Keys accepted in the file; all optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileKeys {
    delta: Option<f64>,
    max_iters: Option<usize>,
    stall_eps: Option<f64>,
    /// Bisection resolution and plateau tolerance.
    tolerance: Option<f64>,
    confirmations: Option<usize>,
    w_max: Option<usize>,
    l_max: Option<usize>,
    jobs: Option<usize>,
}

impl Settings {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let keys: FileKeys = toml::from_str(text).map_err(|e| e.message().to_string())?;
        let mut s = Settings::default();
        let t = &mut s.threshold;
        if let Some(v) = keys.delta {
            t.pde.delta = v;
        }
        if let Some(v) = keys.max_iters {
            t.pde.max_iters = v;
        }
        if let Some(v) = keys.stall_eps {
            t.pde.stall_eps = v;
        }
        if let Some(v) = keys.tolerance {
            t.resolution = v;
            t.tolerance = v;
        }
        if let Some(v) = keys.confirmations {
            t.confirmations = v;
        }
        if let Some(v) = keys.w_max {
            t.w_max = v;
        }
        if let Some(v) = keys.l_max {
            t.l_max = v;
        }
        if let Some(v) = keys.jobs {
            s.jobs = v;
        }
        Ok(s)
    }
}
