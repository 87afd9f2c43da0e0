//! Flat `key = value` configuration with command-line overrides.

use std::collections::BTreeMap;
use std::path::Path;

use sha2::{Digest, Sha256};

use floquet_sb::model::{DriveConfig, OhmicSpectralDensity, ThermalParams};
use floquet_sb::QubitState;

use crate::CliError;

#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

fn config_err(key: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{key}: {msg}"))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(CliError::Config(format!(
                    "line {}: expected key = value, got {raw:?}",
                    no + 1
                )));
            };
            values.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Applies `--key value` pairs on top of the file values.
    pub fn apply_overrides(&mut self, args: &[String]) -> Result<(), CliError> {
        let mut it = args.iter();
        while let Some(a) = it.next() {
            let key = a.strip_prefix("--").ok_or_else(|| {
                CliError::Config(format!(
                    "unexpected argument {a:?}; overrides take the form --key value"
                ))
            })?;
            if let Some((k, v)) = key.split_once('=') {
                self.set(k, v);
                continue;
            }
            let v = it
                .next()
                .ok_or_else(|| CliError::Config(format!("override --{key} is missing a value")))?;
            self.set(key, v);
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.values.insert(key.replace('-', "_"), value.to_string());
    }

    /// Rejects keys outside `allowed`, which catches typos early.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<(), CliError> {
        for k in self.values.keys() {
            if !allowed.contains(&k.as_str()) {
                return Err(config_err(
                    k,
                    format!("unknown key; accepted keys are {}", allowed.join(", ")),
                ));
            }
        }
        Ok(())
    }

    /// Hex SHA-256 prefix of the canonical `key=value` listing.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in &self.values {
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
            h.update(b"\n");
        }
        h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => parse_f64(key, v),
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, CliError> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| config_err(key, format!("expected a non-negative integer, got {v:?}"))),
        }
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool, CliError> {
        match self.raw(key) {
            None => Ok(default),
            Some("true" | "yes" | "1") => Ok(true),
            Some("false" | "no" | "0") => Ok(false),
            Some(v) => Err(config_err(key, format!("expected true or false, got {v:?}"))),
        }
    }

    pub fn list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, CliError> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some(v) => {
                let out: Vec<f64> = v
                    .split(',')
                    .map(|s| parse_f64(key, s.trim()))
                    .collect::<Result<_, _>>()?;
                if out.is_empty() {
                    return Err(config_err(key, "list must not be empty"));
                }
                Ok(out)
            }
        }
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.raw(key).unwrap_or(default)
    }

    pub fn drive(&self, ratio_default: f64, omega_l_default: f64) -> Result<DriveConfig, CliError> {
        let omega0 = self.f64_or("omega0", 1.0)?;
        let ratio = self.f64_or("amplitude_ratio", ratio_default)?;
        let wl = self.f64_or("omegaL", omega_l_default)?;
        drive_for(omega0, ratio, wl)
    }

    pub fn spectral_density(&self, lambda: f64, omega_c: f64) -> Result<OhmicSpectralDensity, CliError> {
        let lambda = self.f64_or("lambda", lambda)?;
        let omega_c = self.f64_or("omega_c", omega_c)?;
        OhmicSpectralDensity::new(lambda, omega_c).map_err(|e| config_err("lambda/omega_c", e))
    }

    pub fn thermal(&self, beta_default: f64) -> Result<ThermalParams, CliError> {
        if self.bool_or("zero_temperature", false)? {
            return Ok(ThermalParams::ZeroTemperature);
        }
        let beta = self.f64_or("beta", beta_default)?;
        ThermalParams::from_beta(beta).map_err(|e| config_err("beta", e))
    }

    pub fn omega_max(&self, sd: &OhmicSpectralDensity) -> Result<f64, CliError> {
        let w = self.f64_or("omega_max", 40.0 * sd.omega_c)?;
        if !(w > 0.0) {
            return Err(config_err("omega_max", "must be positive"));
        }
        Ok(w)
    }

    pub fn time_grid(&self, t_max_default: f64, n_default: usize) -> Result<Vec<f64>, CliError> {
        let t_min = self.f64_or("t_min", 0.0)?;
        let t_max = self.f64_or("t_max", t_max_default)?;
        let n = self.usize_or("n_points", n_default)?;
        if !(t_min >= 0.0) {
            return Err(config_err("t_min", "must be >= 0"));
        }
        if !(t_max > t_min) {
            return Err(config_err("t_max", "must exceed t_min"));
        }
        if n < 2 {
            return Err(config_err("n_points", "need at least 2 points"));
        }
        Ok(linspace(t_min, t_max, n))
    }

    pub fn initial_state(&self, default: &str) -> Result<QubitState, CliError> {
        match self.str_or("initial_state", default) {
            "plus_z" => Ok(QubitState::plus_z()),
            "minus_y" => Ok(QubitState::minus_y()),
            "bloch" => {
                let v = self.list_or("bloch", &[])?;
                if v.len() != 3 {
                    return Err(config_err("bloch", "expected three components x,y,z"));
                }
                QubitState::from_bloch([v[0], v[1], v[2]]).map_err(|e| config_err("bloch", e))
            }
            other => Err(config_err(
                "initial_state",
                format!("expected plus_z, minus_y or bloch, got {other:?}"),
            )),
        }
    }
}

pub fn drive_for(omega0: f64, ratio: f64, omega_l: f64) -> Result<DriveConfig, CliError> {
    if !(ratio >= 0.0) {
        return Err(config_err("amplitude_ratio", format!("must be >= 0, got {ratio}")));
    }
    DriveConfig::from_ratio(omega0, ratio, omega_l).map_err(|e| config_err("omega0/omegaL", e))
}

fn parse_f64(key: &str, v: &str) -> Result<f64, CliError> {
    let x: f64 = v
        .parse()
        .map_err(|_| config_err(key, format!("expected a number, got {v:?}")))?;
    if !x.is_finite() {
        return Err(config_err(key, format!("must be finite, got {v:?}")));
    }
    Ok(x)
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

/// Keys shared by every command.
pub const MODEL_KEYS: &[&str] = &[
    "omega0",
    "amplitude_ratio",
    "omegaL",
    "lambda",
    "omega_c",
    "beta",
    "zero_temperature",
    "omega_max",
    "t_min",
    "t_max",
    "n_points",
    "initial_state",
    "bloch",
];
