//! Run configuration: JSON document, preset expansion, dotted overrides.

use serde::{Deserialize, Serialize};

use hdhi::kernel::KernelParams;
use hdhi::measures::{ContinuousMeasure, DiscreteMeasure, Scheme};
use hdhi::presets::Preset;
use hdhi::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct KernelBlock {
    pub rho: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub sigma: f64,
}

impl Default for KernelBlock {
    fn default() -> Self {
        KernelBlock {
            rho: 1.0,
            alpha: 1.0,
            gamma: 0.5,
            sigma: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct GridBlock {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Default for GridBlock {
    fn default() -> Self {
        GridBlock {
            min: 1e-3,
            max: 1e3,
            points: 30,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct OpnormBlock {
    pub x_min: f64,
    pub x_max: f64,
    pub x_count: usize,
    pub n_max: usize,
    pub levels: usize,
    pub iterations: usize,
}

impl Default for OpnormBlock {
    fn default() -> Self {
        OpnormBlock {
            x_min: 1e-30,
            x_max: 1e4,
            x_count: 2000,
            n_max: 5000,
            levels: 3,
            iterations: 8000,
        }
    }
}

/// Complete run configuration. Every scalar can be overridden with
/// `--set key.path=value`; a preset expands before overrides apply.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub kernel: KernelBlock,
    pub delta: i32,
    pub continuous: String,
    pub discrete: String,
    pub beta: f64,
    pub p: f64,
    pub tol_quad: f64,
    pub tol_sum: f64,
    pub verdict_guard: f64,
    pub x_grid: GridBlock,
    pub n_list: Vec<usize>,
    pub eps_schedule: Vec<f64>,
    /// `smooth` or `extremal:<eps>`.
    pub test_family: String,
    pub opnorm: OpnormBlock,
    pub seed: u64,
    /// Extra randomly sampled admissible schemes for the weights sweep.
    pub random_schemes: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            preset: None,
            kernel: KernelBlock::default(),
            delta: 1,
            continuous: "unit".into(),
            discrete: "unit".into(),
            beta: 0.5,
            p: 2.0,
            tol_quad: 1e-10,
            tol_sum: 1e-8,
            verdict_guard: 1e-6,
            x_grid: GridBlock::default(),
            n_list: vec![1, 2, 5, 10, 100],
            eps_schedule: vec![0.4, 0.2, 0.1, 0.05],
            test_family: "smooth".into(),
            opnorm: OpnormBlock::default(),
            seed: 1,
            random_schemes: 0,
        }
    }
}

impl RunConfig {
    /// Load from JSON, expand the preset, apply dotted overrides.
    pub fn assemble(
        file: Option<&str>,
        preset_flag: Option<&str>,
        sets: &[String],
        tol_quad: Option<f64>,
        tol_sum: Option<f64>,
        seed: Option<u64>,
    ) -> Result<RunConfig> {
        let mut value: serde_json::Value = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::domain(format!("cannot read config {path}: {e}")))?;
                serde_json::from_str(&text)
                    .map_err(|e| Error::domain(format!("bad config JSON: {e}")))?
            }
            None => serde_json::to_value(RunConfig::default()).unwrap(),
        };

        if let Some(name) = preset_flag {
            value["preset"] = serde_json::Value::String(name.to_string());
        }
        // Preset expansion: overwrite the scheme-defining fields.
        if let Some(name) = value.get("preset").and_then(|v| v.as_str()) {
            let preset = Preset::parse(name)?;
            let scheme = preset.scheme();
            value["kernel"] = serde_json::json!({
                "rho": scheme.params.rho,
                "alpha": scheme.params.alpha,
                "gamma": scheme.params.gamma,
                "sigma": scheme.params.sigma,
            });
            value["delta"] = serde_json::json!(scheme.delta);
            let (cid, did) = match preset {
                Preset::Cor51 | Preset::Cor52 => ("power_damped(0.5)", "power_seq(0.5)"),
                _ => ("unit", "unit"),
            };
            value["continuous"] = serde_json::json!(cid);
            value["discrete"] = serde_json::json!(did);
            value["beta"] = serde_json::json!(scheme.dm.beta());
        }

        for set in sets {
            apply_set(&mut value, set)?;
        }
        if let Some(t) = tol_quad {
            value["tol_quad"] = serde_json::json!(t);
        }
        if let Some(t) = tol_sum {
            value["tol_sum"] = serde_json::json!(t);
        }
        if let Some(s) = seed {
            value["seed"] = serde_json::json!(s);
        }

        let cfg: RunConfig = serde_json::from_value(value)
            .map_err(|e| Error::domain(format!("invalid configuration: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        // Surface invariant violations before any computation runs.
        self.params()?;
        self.scheme()?;
        if !(self.tol_quad > 0.0 && self.tol_sum > 0.0 && self.verdict_guard > 0.0) {
            return Err(Error::domain("tolerances must be positive"));
        }
        if !(self.x_grid.min > 0.0 && self.x_grid.max > self.x_grid.min) {
            return Err(Error::domain("x_grid must satisfy 0 < min < max"));
        }
        Ok(())
    }

    pub fn params(&self) -> Result<KernelParams> {
        KernelParams::new(
            self.kernel.rho,
            self.kernel.alpha,
            self.kernel.gamma,
            self.kernel.sigma,
        )
    }

    pub fn scheme(&self) -> Result<Scheme> {
        Scheme::new(
            self.params()?,
            self.delta,
            ContinuousMeasure::parse(&self.continuous)?,
            DiscreteMeasure::parse(&self.discrete, self.beta)?,
        )
    }

    /// Canonical single-line form printed in every report header.
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).unwrap()
    }

    pub fn x_grid_points(&self) -> Vec<f64> {
        let g = &self.x_grid;
        let n = g.points.max(2);
        (0..n)
            .map(|i| g.min * (g.max / g.min).powf(i as f64 / (n - 1) as f64))
            .collect()
    }
}

/// Apply one `key.path=value` override to the JSON document.
fn apply_set(value: &mut serde_json::Value, set: &str) -> Result<()> {
    let (path, raw) = set
        .split_once('=')
        .ok_or_else(|| Error::domain(format!("--set expects key=value, got {set}")))?;
    let parsed: serde_json::Value = serde_json::from_str(raw)
        .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
    let mut cursor = value;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if i + 1 == parts.len() {
            cursor[part] = parsed;
            return Ok(());
        }
        if cursor.get(*part).is_none() {
            cursor[*part] = serde_json::json!({});
        }
        cursor = &mut cursor[*part];
    }
    unreachable!()
}

/// Deterministic splitmix64 stream for the randomized sweeps.
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}
