use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{MatrixModel, SupportRule};
use crate::rrt::{kmax_default, AlphaRule};

fn default_sigma() -> f64 {
    1.0
}

fn default_true() -> bool {
    true
}

fn default_folds() -> usize {
    5
}

/// One Monte-Carlo study: a matrix family, a planted sparse signal at a
/// fixed SNR, and the selectors to compare.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub model: MatrixModel,
    pub n: usize,
    pub p: usize,
    #[serde(default)]
    pub support_rule: SupportRule,
    pub k0: usize,
    pub snr: f64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    pub trials: usize,
    pub seed: u64,
    pub selectors: Vec<SelectorSpec>,
    /// Redraw the design for every trial (random models only).
    #[serde(default = "default_true")]
    pub matrix_per_trial: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SelectorSpec {
    Rrt {
        alpha: AlphaRule,
    },
    OmpK0,
    OmpSigma,
    Cv {
        #[serde(default = "default_folds")]
        folds: usize,
    },
}

impl fmt::Display for SelectorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectorSpec::Rrt { alpha } => write!(f, "rrt:{alpha}"),
            SelectorSpec::OmpK0 => f.write_str("omp_k0"),
            SelectorSpec::OmpSigma => f.write_str("omp_sigma"),
            SelectorSpec::Cv { folds } => write!(f, "cv:{folds}"),
        }
    }
}

/// Accepts `rrt`, `rrt:<alpha rule>`, `omp_k0`, `omp_sigma`, `cv`, `cv:<folds>`.
impl FromStr for SelectorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        match (head, arg) {
            ("rrt", None) => Ok(SelectorSpec::Rrt {
                alpha: AlphaRule::InvLogN,
            }),
            ("rrt", Some(a)) => Ok(SelectorSpec::Rrt { alpha: a.parse()? }),
            ("omp_k0", None) => Ok(SelectorSpec::OmpK0),
            ("omp_sigma", None) => Ok(SelectorSpec::OmpSigma),
            ("cv", None) => Ok(SelectorSpec::Cv { folds: 5 }),
            ("cv", Some(k)) => k
                .parse()
                .map(|folds| SelectorSpec::Cv { folds })
                .map_err(|_| Error::Config(format!("bad fold count {k:?}"))),
            _ => Err(Error::Config(format!(
                "unknown selector {s:?}; expected rrt[:rule], omp_k0, omp_sigma or cv[:folds]"
            ))),
        }
    }
}

/// Parses a comma-separated selector list.
pub fn parse_selectors(list: &str) -> Result<Vec<SelectorSpec>> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect()
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        self.model.validate(self.n, self.p)?;
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if !(self.snr > 0.0 && self.snr.is_finite()) {
            return Err(Error::Config(format!(
                "snr must be positive, got {}",
                self.snr
            )));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Config(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        let kmax = kmax_default(self.n, self.p);
        if self.k0 == 0 || self.k0 > kmax {
            return Err(Error::Config(format!(
                "k0 must lie in 1..={kmax} for n={}, p={}, got {}",
                self.n, self.p, self.k0
            )));
        }
        if self.n < 2 {
            return Err(Error::Config("n must be at least 2".into()));
        }
        if self.selectors.is_empty() {
            return Err(Error::Config("at least one selector is required".into()));
        }
        for s in &self.selectors {
            match s {
                SelectorSpec::Rrt { alpha } => {
                    let a = alpha.resolve(self.n)?;
                    let upper = (self.p * kmax) as f64;
                    if a > upper {
                        return Err(Error::Config(format!(
                            "alpha {a} exceeds p·k_max = {upper}"
                        )));
                    }
                }
                SelectorSpec::Cv { folds } if *folds < 2 || *folds > self.n => {
                    return Err(Error::Config(format!(
                        "cv folds must lie in 2..={}, got {folds}",
                        self.n
                    )));
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }
}
