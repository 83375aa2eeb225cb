use serde::{Deserialize, Serialize};
use theta_bidiff::Precision;

/// Environment variable that overrides [`RunConfig::threads`].
pub const THREADS_ENV: &str = "THETA_BIDIFF_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Settings shared by every subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub eps_value: f64,
    pub eps_jet: f64,
    pub lattice_cap: usize,
    /// Worker threads; 0 lets the pool pick.
    pub threads: usize,
    pub seed: u64,
    pub output_format: OutputFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = Precision::default();
        RunConfig {
            eps_value: p.eps_value,
            eps_jet: p.eps_jet,
            lattice_cap: p.lattice_cap,
            threads: 0,
            seed: 20_240_601,
            output_format: OutputFormat::Json,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, String> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| format!("run config: {e}"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.eps_value > 0.0 && self.eps_value <= 1e-8) {
            return Err(format!("eps_value must lie in (0, 1e-8], got {:e}", self.eps_value));
        }
        if !(self.eps_jet > 0.0 && self.eps_jet < 1.0) {
            return Err(format!("eps_jet must lie in (0, 1), got {:e}", self.eps_jet));
        }
        if self.lattice_cap < 8 {
            return Err(format!("lattice_cap must be at least 8, got {}", self.lattice_cap));
        }
        if self.threads > 4096 {
            return Err(format!("threads must be at most 4096, got {}", self.threads));
        }
        Ok(())
    }

    pub fn precision(&self) -> Precision {
        Precision { eps_value: self.eps_value, eps_jet: self.eps_jet, lattice_cap: self.lattice_cap }
    }

    /// Applies the thread override from the environment, if set.
    pub fn with_env(mut self) -> Result<Self, String> {
        if let Ok(v) = std::env::var(THREADS_ENV) {
            self.threads = v
                .trim()
                .parse()
                .map_err(|_| format!("{THREADS_ENV} must be a non-negative integer, got {v:?}"))?;
            self.validate()?;
        }
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn partial_json_fills_defaults() {
        let c = RunConfig::from_json(r#"{"seed": 5, "output_format": "csv"}"#).unwrap();
        assert_eq!(c.seed, 5);
        assert_eq!(c.output_format, OutputFormat::Csv);
        assert_eq!(c.lattice_cap, 200);
    }

    #[test]
    fn invariants_are_enforced() {
        assert!(RunConfig::from_json(r#"{"eps_value": 1e-4}"#).is_err());
        assert!(RunConfig::from_json(r#"{"lattice_cap": 7}"#).is_err());
        assert!(RunConfig::from_json(r#"{"bogus": 1}"#).is_err());
        assert!(RunConfig::from_json("[").is_err());
    }
}
