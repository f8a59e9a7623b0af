//! Flat key-value configuration with per-mode defaults, file overrides and
//! `--set` command-line overrides.
//!
//! The format is one `key = value` pair per line with dotted section
//! prefixes (`physics.gamma0 = 1e-4`), `#` comments and blank lines. Every
//! key has a default, so a config file only states deviations; unknown keys
//! are rejected by name. The fully resolved map is echoed into every output
//! artifact and parses back to the same configuration.

use magsim_core::{AtomicParams, ModelWarning, PhotonBudget};
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

/// Simulation preset selected on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Sensitivity-versus-power curves with the absorption-magnetometer
    /// overlay.
    Figure4,
    /// Light-shift-broadened lineshape scan over input powers.
    Lineshape,
    /// Full detection budget at one operating point.
    SnrPoint,
    /// Quantum-limit factors and optima tabulated over transmission.
    SqlTable,
    /// Monte Carlo validation of the phase-noise quadrature.
    McValidate,
    /// Generic interferometric limit versus intensity-phase coupling.
    QuantumLimit,
}

impl Mode {
    /// Stable name used in filenames and metadata.
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Figure4 => "figure4",
            Mode::Lineshape => "lineshape",
            Mode::SnrPoint => "snr_point",
            Mode::SqlTable => "sql_table",
            Mode::McValidate => "mc_validate",
            Mode::QuantumLimit => "quantum_limit",
        }
    }
}

/// A configuration error that names the offending key where possible.
#[derive(Debug)]
pub struct ConfigError {
    /// Offending key, when one is identifiable.
    pub key: Option<String>,
    /// Human-readable description.
    pub message: String,
}

impl ConfigError {
    fn keyed(key: &str, message: impl Into<String>) -> Self {
        ConfigError {
            key: Some(key.to_string()),
            message: message.into(),
        }
    }

    fn plain(message: impl Into<String>) -> Self {
        ConfigError {
            key: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.key {
            Some(key) => write!(f, "config error for `{key}`: {}", self.message),
            None => write!(f, "config error: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

type Result<T> = std::result::Result<T, ConfigError>;

/// Default values shared by every mode; the mode only changes a few of
/// them. This map is also the universe of accepted keys.
fn defaults(mode: Mode) -> BTreeMap<String, String> {
    let gamma0 = match mode {
        Mode::Figure4 | Mode::SqlTable | Mode::QuantumLimit => "1e-4",
        Mode::Lineshape | Mode::SnrPoint | Mode::McValidate => "1e-3",
    };
    let pairs: &[(&str, &str)] = &[
        ("physics.gamma0", gamma0),
        ("physics.gamma0_r", "0"),
        ("physics.gamma_r", "1"),
        ("physics.shift_detuning", "1e3"),
        ("physics.splitting_over_gamma0", "1e-2"),
        ("geometry.eta_list", "0.8,0.1,0.01"),
        ("geometry.z_samples", "2048"),
        ("geometry.detuning_samples", "4096"),
        ("detection.gamma0_tm", "100"),
        ("detection.lambda_sq_over_a", "1e-2"),
        ("detection.power_grid", "1:1e7:57"),
        ("mc.samples", "1000000"),
        ("mc.seed", "42"),
        ("mc.cells", "256"),
        ("mc.common_mode", "0"),
        ("mc.squeezed", "false"),
        ("mc.block_size", "8192"),
        ("mc_validate.omega0_sq", "2.5"),
        ("mc_validate.eta", "0.06"),
        ("mc_validate.photons_in", "1e6"),
        ("mc_validate.measurement_time", "1e5"),
        ("lineshape.power_list", "30,100,300"),
        ("lineshape.absorbed_fraction", "0.5"),
        ("snr_point.eta", "0.06"),
        ("snr_point.power_ratio", "auto"),
        ("sql.eta_list", "0.01,0.02,0.05,0.0595,0.1,0.2,0.4,0.6,0.8"),
        ("opm.alpha", "1"),
        ("quantum_limit.chi_ratio", "1e4"),
        ("quantum_limit.beta_list", "1e-6,1e-3,1e-1"),
        ("output.gnuplot", "false"),
    ];
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

/// Fully resolved configuration for one run.
#[derive(Debug, Clone)]
pub struct Settings {
    mode: Mode,
    map: BTreeMap<String, String>,
}

impl Settings {
    /// Apply, in order: mode defaults, the optional config file, then the
    /// `--set key=value` overrides.
    pub fn resolve(mode: Mode, config_path: Option<&Path>, sets: &[String]) -> Result<Self> {
        let mut map = defaults(mode);

        if let Some(path) = config_path {
            let text = std::fs::read_to_string(path).map_err(|e| {
                ConfigError::plain(format!("cannot read config file {}: {e}", path.display()))
            })?;
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = split_pair(line).ok_or_else(|| {
                    ConfigError::plain(format!(
                        "{}:{}: expected `key = value`, got `{line}`",
                        path.display(),
                        lineno + 1
                    ))
                })?;
                insert_known(&mut map, &key, value)?;
            }
        }

        for set in sets {
            let (key, value) = split_pair(set)
                .ok_or_else(|| ConfigError::plain(format!("--set expects key=value, got `{set}`")))?;
            insert_known(&mut map, &key, value)?;
        }

        let settings = Settings { mode, map };
        settings.validate()?;
        Ok(settings)
    }

    /// The mode this configuration was resolved for.
    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Sorted `(key, value)` pairs for echoing into output metadata.
    pub fn echo_pairs(&self) -> impl Iterator<Item = (&str, &str)> {
        self.map.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    fn raw(&self, key: &str) -> Result<&str> {
        self.map
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| ConfigError::keyed(key, "unknown key"))
    }

    /// A floating-point value.
    pub fn f64(&self, key: &str) -> Result<f64> {
        let raw = self.raw(key)?;
        raw.parse::<f64>()
            .map_err(|_| ConfigError::keyed(key, format!("not a number: `{raw}`")))
    }

    /// An unsigned integer value.
    pub fn u64(&self, key: &str) -> Result<u64> {
        let raw = self.raw(key)?;
        raw.parse::<u64>()
            .map_err(|_| ConfigError::keyed(key, format!("not an unsigned integer: `{raw}`")))
    }

    /// An unsigned integer used as a count.
    pub fn usize(&self, key: &str) -> Result<usize> {
        Ok(self.u64(key)? as usize)
    }

    /// A boolean value, spelled `true` or `false`.
    pub fn bool(&self, key: &str) -> Result<bool> {
        match self.raw(key)? {
            "true" => Ok(true),
            "false" => Ok(false),
            other => Err(ConfigError::keyed(
                key,
                format!("expected true or false, got `{other}`"),
            )),
        }
    }

    /// A comma-separated list of numbers.
    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>> {
        let raw = self.raw(key)?;
        let values: std::result::Result<Vec<f64>, _> = raw
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect();
        let values =
            values.map_err(|_| ConfigError::keyed(key, format!("not a number list: `{raw}`")))?;
        if values.is_empty() {
            return Err(ConfigError::keyed(key, "list must not be empty"));
        }
        Ok(values)
    }

    /// A `min:max:count` log-spaced grid description.
    pub fn power_grid(&self, key: &str) -> Result<Vec<f64>> {
        let raw = self.raw(key)?;
        let parts: Vec<&str> = raw.split(':').collect();
        if parts.len() != 3 {
            return Err(ConfigError::keyed(
                key,
                format!("expected min:max:count, got `{raw}`"),
            ));
        }
        let min: f64 = parts[0]
            .parse()
            .map_err(|_| ConfigError::keyed(key, format!("bad grid minimum `{}`", parts[0])))?;
        let max: f64 = parts[1]
            .parse()
            .map_err(|_| ConfigError::keyed(key, format!("bad grid maximum `{}`", parts[1])))?;
        let count: usize = parts[2]
            .parse()
            .map_err(|_| ConfigError::keyed(key, format!("bad grid count `{}`", parts[2])))?;
        if !(min > 0.0 && max > min) || count < 2 {
            return Err(ConfigError::keyed(
                key,
                "need 0 < min < max and at least two points",
            ));
        }
        Ok(magsim_core::numeric::log_spaced(min, max, count))
    }

    /// A number or the literal `auto` (returned as `None`).
    pub fn f64_or_auto(&self, key: &str) -> Result<Option<f64>> {
        let raw = self.raw(key)?;
        if raw == "auto" {
            return Ok(None);
        }
        raw.parse::<f64>()
            .map(Some)
            .map_err(|_| ConfigError::keyed(key, format!("expected a number or `auto`, got `{raw}`")))
    }

    /// Atomic parameters in units of the optical decay rate, with model
    /// warnings from validation.
    pub fn atomic_params(&self) -> Result<(AtomicParams, Vec<ModelWarning>)> {
        let gamma0 = self.f64("physics.gamma0")?;
        let params = AtomicParams {
            gamma: 1.0,
            gamma_r: self.f64("physics.gamma_r")?,
            gamma0,
            gamma0_r: self.f64("physics.gamma0_r")?,
            optical_detuning: 0.0,
            ground_splitting: self.f64("physics.splitting_over_gamma0")? * gamma0,
            shift_detuning: self.f64("physics.shift_detuning")?,
            kappa: 1.0,
        };
        let warnings = params.validate().map_err(|e| {
            ConfigError::keyed("physics.gamma0", format!("invalid atomic parameters: {e}"))
        })?;
        Ok((params, warnings))
    }

    /// Photon-budget ratios for power sweeps.
    pub fn photon_budget(&self) -> Result<PhotonBudget> {
        let budget = PhotonBudget {
            gamma0_tm: self.f64("detection.gamma0_tm")?,
            lambda_sq_over_a: self.f64("detection.lambda_sq_over_a")?,
        };
        budget
            .validate()
            .map_err(|e| ConfigError::keyed("detection.gamma0_tm", e.to_string()))?;
        Ok(budget)
    }

    /// Structural validation beyond per-key parsing.
    fn validate(&self) -> Result<()> {
        for key in [
            "physics.gamma0",
            "physics.gamma_r",
            "physics.shift_detuning",
            "detection.gamma0_tm",
            "detection.lambda_sq_over_a",
        ] {
            let v = self.f64(key)?;
            if !(v > 0.0) || !v.is_finite() {
                return Err(ConfigError::keyed(key, format!("must be > 0, got {v}")));
            }
        }
        let g0r = self.f64("physics.gamma0_r")?;
        if !(g0r >= 0.0) || !g0r.is_finite() {
            return Err(ConfigError::keyed(
                "physics.gamma0_r",
                format!("must be >= 0, got {g0r}"),
            ));
        }
        for key in ["geometry.eta_list", "sql.eta_list"] {
            for eta in self.f64_list(key)? {
                if !(eta > 0.0 && eta < 1.0) {
                    return Err(ConfigError::keyed(
                        key,
                        format!("transmissions must lie in (0, 1), got {eta}"),
                    ));
                }
            }
        }
        self.power_grid("detection.power_grid")?;
        if self.usize("geometry.z_samples")? < 2 {
            return Err(ConfigError::keyed("geometry.z_samples", "need at least 2"));
        }
        if self.usize("geometry.detuning_samples")? < 16 {
            return Err(ConfigError::keyed(
                "geometry.detuning_samples",
                "need at least 16",
            ));
        }
        Ok(())
    }
}

fn split_pair(line: &str) -> Option<(String, String)> {
    let (key, value) = line.split_once('=')?;
    let key = key.trim();
    let value = value.trim();
    if key.is_empty() || value.is_empty() {
        return None;
    }
    Some((key.to_string(), value.to_string()))
}

fn insert_known(map: &mut BTreeMap<String, String>, key: &str, value: String) -> Result<()> {
    if !map.contains_key(key) {
        return Err(ConfigError::keyed(key, "unknown key"));
    }
    map.insert(key.to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve_without_inputs() {
        let s = Settings::resolve(Mode::Figure4, None, &[]).unwrap();
        assert_eq!(s.f64("physics.gamma0").unwrap(), 1e-4);
        assert_eq!(s.f64_list("geometry.eta_list").unwrap(), vec![0.8, 0.1, 0.01]);
        assert_eq!(s.power_grid("detection.power_grid").unwrap().len(), 57);
        assert!(!s.bool("output.gnuplot").unwrap());
    }

    #[test]
    fn mode_specific_defaults_differ() {
        let fig = Settings::resolve(Mode::Figure4, None, &[]).unwrap();
        let line = Settings::resolve(Mode::Lineshape, None, &[]).unwrap();
        assert_eq!(fig.f64("physics.gamma0").unwrap(), 1e-4);
        assert_eq!(line.f64("physics.gamma0").unwrap(), 1e-3);
    }

    #[test]
    fn set_overrides_win() {
        let s = Settings::resolve(
            Mode::Figure4,
            None,
            &["physics.gamma0=2e-4".to_string(), "mc.seed=7".to_string()],
        )
        .unwrap();
        assert_eq!(s.f64("physics.gamma0").unwrap(), 2e-4);
        assert_eq!(s.u64("mc.seed").unwrap(), 7);
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = Settings::resolve(Mode::Figure4, None, &["physics.typo=1".to_string()])
            .unwrap_err();
        assert_eq!(err.key.as_deref(), Some("physics.typo"));
    }

    #[test]
    fn bad_values_are_named() {
        let err = Settings::resolve(Mode::Figure4, None, &["physics.gamma0=-1".to_string()])
            .unwrap_err();
        assert_eq!(err.key.as_deref(), Some("physics.gamma0"));
        let err = Settings::resolve(
            Mode::Figure4,
            None,
            &["detection.power_grid=5".to_string()],
        )
        .unwrap_err();
        assert_eq!(err.key.as_deref(), Some("detection.power_grid"));
    }

    #[test]
    fn auto_sentinel_parses() {
        let s = Settings::resolve(Mode::SnrPoint, None, &[]).unwrap();
        assert_eq!(s.f64_or_auto("snr_point.power_ratio").unwrap(), None);
        let s = Settings::resolve(
            Mode::SnrPoint,
            None,
            &["snr_point.power_ratio=123".to_string()],
        )
        .unwrap();
        assert_eq!(s.f64_or_auto("snr_point.power_ratio").unwrap(), Some(123.0));
    }

    #[test]
    fn atomic_params_assemble() {
        let s = Settings::resolve(Mode::Figure4, None, &[]).unwrap();
        let (p, warnings) = s.atomic_params().unwrap();
        assert_eq!(p.gamma, 1.0);
        assert_eq!(p.gamma0, 1e-4);
        assert_eq!(p.ground_splitting, 1e-2 * 1e-4);
        assert!(warnings.is_empty());
    }

    #[test]
    fn echo_round_trips() {
        let sets = vec![
            "physics.gamma0=3.25e-4".to_string(),
            "geometry.eta_list=0.5,0.25".to_string(),
        ];
        let original = Settings::resolve(Mode::Figure4, None, &sets).unwrap();
        let echoed: Vec<String> = original
            .echo_pairs()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        let reparsed = Settings::resolve(Mode::Figure4, None, &echoed).unwrap();
        assert_eq!(original.map, reparsed.map);
    }
}
