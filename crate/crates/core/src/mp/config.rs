use serde::{Deserialize, Serialize};

use crate::{DoaError, Result};

/// Hyperparameters, numerical safeguards and the stopping rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlgoConfig {
    /// Initial shape of the Gamma prior on the source precisions; retuned
    /// from the precision spread after every backward pass.
    pub epsilon_init: f64,
    /// Rate of the Gamma prior on the source precisions.
    pub eta: f64,
    pub lambda_init: f64,
    /// Relative change of the source estimates below which iteration stops.
    pub sigma_s: f64,
    pub max_iter: usize,
    pub var_floor: f64,
    pub var_cap: f64,
    /// Weight of the new backward x-message (1 = no damping).
    pub damping: f64,
}

impl Default for AlgoConfig {
    fn default() -> Self {
        Self {
            epsilon_init: 0.01,
            eta: 1e-4,
            lambda_init: 1.0,
            sigma_s: 1e-5,
            max_iter: 200,
            var_floor: 1e-12,
            var_cap: 1e12,
            damping: 1.0,
        }
    }
}

impl AlgoConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(DoaError::Config(msg.to_string()));
        if !(self.var_floor > 0.0) {
            return bad("var_floor must be positive");
        }
        if !(self.var_cap > self.var_floor) {
            return bad("var_cap must exceed var_floor");
        }
        if !(self.sigma_s > 0.0) {
            return bad("sigma_s must be positive");
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return bad("damping must lie in (0, 1]");
        }
        if !(self.lambda_init > 0.0) || !(self.eta >= 0.0) || !(self.epsilon_init >= 0.0) {
            return bad("lambda_init must be positive, eta and epsilon_init non-negative");
        }
        if self.max_iter == 0 {
            return bad("max_iter must be at least 1");
        }
        Ok(())
    }
}

/// Which quantities a pass is allowed to re-estimate.
///
/// Everything is learned by default. Freezing the kernel turns the g-to-x
/// messages into point masses at the stored kernel means.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PassOptions {
    pub learn_kernel: bool,
    pub learn_gamma: bool,
    pub learn_noise: bool,
}

impl Default for PassOptions {
    fn default() -> Self {
        Self { learn_kernel: true, learn_gamma: true, learn_noise: true }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = AlgoConfig::default();
        c.validate().unwrap();
        assert_eq!(c.epsilon_init, 0.01);
        assert_eq!(c.eta, 1e-4);
    }

    #[test]
    fn rejects_inverted_clamps() {
        let c = AlgoConfig { var_cap: 1e-13, ..Default::default() };
        assert!(c.validate().is_err());
        let c = AlgoConfig { damping: 0.0, ..Default::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn partial_json_uses_defaults() {
        let c: AlgoConfig = serde_json::from_str(r#"{"max_iter": 50}"#).unwrap();
        assert_eq!(c.max_iter, 50);
        assert_eq!(c.sigma_s, 1e-5);
    }
}
