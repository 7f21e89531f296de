//! Run configuration files (TOML).
//!
//! ```toml
//! [lattice]
//! kind = "triangular"
//! rows = 100
//! cols = 100
//!
//! [model]
//! lambdas = [0.07, 0.05, 0.04]
//! mu = 0.03
//! variant = "percolation"
//!
//! [estimation]
//! n_s = 20
//! n_opt = 10
//! mu_max = 0.05
//! methods = [1, 2]
//! master_seed = 1
//! ```
//!
//! Every section except `[lattice]` is optional; commands report what they
//! are missing.

use serde::Deserialize;

use crate::error::{invalid, Result};
use crate::estimator::{EstimationConfig, PriorBox};
use crate::lattice::{Lattice, LatticeKind};
use crate::optimizer::Tolerances;
use crate::percolation::{ModelVariant, ParameterVector, SamplingMethod};
use crate::studies::ScanSpec;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    #[serde(default = "default_kind")]
    pub kind: LatticeKind,
    pub rows: usize,
    pub cols: usize,
}

fn default_kind() -> LatticeKind {
    LatticeKind::Triangular
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub lambdas: Vec<f64>,
    pub mu: f64,
    #[serde(default)]
    pub variant: Option<String>,
    /// Seed for synthetic data.
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimationSection {
    pub n_s: usize,
    pub n_opt: usize,
    pub mu_max: f64,
    #[serde(default = "default_methods")]
    pub methods: Vec<u8>,
    #[serde(default)]
    pub master_seed: u64,
    pub x_tol: Option<f64>,
    pub f_tol: Option<f64>,
    pub max_evals_per_dim: Option<usize>,
}

fn default_methods() -> Vec<u8> {
    vec![1, 2]
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbcSection {
    /// Prior box `theta * (1 -/+ prior_rel)` around `[model]`.
    pub prior_rel: Option<f64>,
    pub prior_lower: Option<Vec<f64>>,
    pub prior_upper: Option<Vec<f64>>,
    pub epsilon: Option<f64>,
    pub draws: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    /// `table`, `alpha`, `convergence` or `scan`.
    pub kind: String,
    #[serde(default)]
    pub seed: u64,
    /// Lattice sizes for the convergence study.
    #[serde(default)]
    pub sizes: Vec<(usize, usize)>,
    pub n_s: Option<usize>,
    pub n_lambda: Option<usize>,
    pub n_mu: Option<usize>,
    #[serde(default = "yes")]
    pub critical_row: bool,
    pub outer: Option<(usize, usize)>,
    pub central: Option<(usize, usize)>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub lattice: LatticeSection,
    pub model: Option<ModelSection>,
    pub estimation: Option<EstimationSection>,
    pub abc: Option<AbcSection>,
    pub study: Option<StudySection>,
    pub output: Option<OutputSection>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| invalid(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn lattice(&self) -> Result<Lattice> {
        Lattice::new(self.lattice.kind, self.lattice.rows, self.lattice.cols)
    }

    pub fn theta(&self) -> Result<Option<ParameterVector>> {
        self.model
            .as_ref()
            .map(|m| ParameterVector::new(m.lambdas.clone(), m.mu))
            .transpose()
    }

    pub fn variant(&self) -> Result<ModelVariant> {
        match self.model.as_ref().and_then(|m| m.variant.as_deref()) {
            Some(v) => v.parse(),
            None => Ok(ModelVariant::Percolation),
        }
    }

    pub fn methods(&self) -> Result<Vec<SamplingMethod>> {
        let est = self.require_estimation()?;
        est.methods.iter().map(|&m| SamplingMethod::from_number(m)).collect()
    }

    fn require_estimation(&self) -> Result<&EstimationSection> {
        self.estimation
            .as_ref()
            .ok_or_else(|| invalid("config has no [estimation] section"))
    }

    /// Estimation settings for `method`.
    pub fn estimation(&self, method: SamplingMethod) -> Result<EstimationConfig> {
        let est = self.require_estimation()?;
        let d = Tolerances::default();
        Ok(EstimationConfig {
            n_s: est.n_s,
            n_opt: est.n_opt,
            mu_max: est.mu_max,
            method,
            tolerances: Tolerances {
                x_tol: est.x_tol.unwrap_or(d.x_tol),
                f_tol: est.f_tol.unwrap_or(d.f_tol),
                max_evals_per_dim: est.max_evals_per_dim.unwrap_or(d.max_evals_per_dim),
            },
            master_seed: est.master_seed,
            variant: self.variant()?,
        })
    }

    pub fn prior(&self, lat: &Lattice) -> Result<PriorBox> {
        let abc = self.abc.as_ref().ok_or_else(|| invalid("config has no [abc] section"))?;
        match (&abc.prior_lower, &abc.prior_upper, abc.prior_rel) {
            (Some(lo), Some(hi), _) => {
                PriorBox::new(ParameterVector::from_flat(lo)?, ParameterVector::from_flat(hi)?, lat)
            }
            (None, None, Some(rel)) => {
                let theta = self
                    .theta()?
                    .ok_or_else(|| invalid("prior_rel needs a [model] section"))?;
                PriorBox::around(&theta, rel, lat)
            }
            _ => Err(invalid("[abc] needs prior_lower and prior_upper, or prior_rel")),
        }
    }

    pub fn scan(&self) -> Result<ScanSpec> {
        let st = self.study.as_ref().ok_or_else(|| invalid("config has no [study] section"))?;
        let mut spec = ScanSpec::log_grid(
            st.n_lambda.unwrap_or(10),
            st.n_mu.unwrap_or(10),
            st.critical_row,
            self.lattice.kind,
        );
        spec.outer = st.outer.unwrap_or((self.lattice.rows, self.lattice.cols));
        if let Some(c) = st.central {
            spec.central = c;
        }
        if let Some(n) = st.n_s {
            spec.n_s = n;
        }
        spec.master_seed = st.seed;
        spec.validate()?;
        Ok(spec)
    }

    /// Checks every probability and count against the module preconditions.
    pub fn validate(&self) -> Result<()> {
        let lat = self.lattice()?;
        let pc = lat.critical_probability();
        if let Some(theta) = self.theta()? {
            if theta.mu >= pc {
                return Err(invalid(format!(
                    "model mu = {} must be below p_c = {pc} (subcritical regime)",
                    theta.mu
                )));
            }
        }
        self.variant()?;
        if let Some(est) = &self.estimation {
            for m in self.methods()? {
                self.estimation(m)?.validate(&lat)?;
            }
            if est.methods.is_empty() {
                return Err(invalid("[estimation] methods must not be empty"));
            }
        }
        if let Some(abc) = &self.abc {
            if abc.epsilon.is_some_and(|e| e.is_nan() || e < 0.0) {
                return Err(invalid("[abc] epsilon must be nonnegative"));
            }
            if abc.prior_lower.is_some() || abc.prior_upper.is_some() || abc.prior_rel.is_some() {
                self.prior(&lat)?;
            }
        }
        if let Some(st) = &self.study {
            match st.kind.as_str() {
                "table" | "alpha" => {
                    self.require_estimation()?;
                    self.theta()?.ok_or_else(|| invalid("study needs a [model] section"))?;
                }
                "convergence" => {
                    self.theta()?.ok_or_else(|| invalid("study needs a [model] section"))?;
                    if st.sizes.is_empty() || st.n_s.is_none() {
                        return Err(invalid("convergence study needs sizes and n_s"));
                    }
                }
                "scan" => {
                    self.scan()?;
                }
                other => return Err(invalid(format!("unknown study kind '{other}'"))),
            }
        }
        Ok(())
    }
}
