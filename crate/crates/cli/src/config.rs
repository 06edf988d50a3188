//! Flat `key = value` experiment configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sigmor::gramians::GramianMethod;
use sigmor::signature::signature_dimension;
use sigmor::TruthIntegrator;

use crate::CliError;

pub const ENV_PREFIX: &str = "SIGMOR_";

/// Every accepted key, in the order used by [`ExperimentConfig::render`].
pub const KEYS: &[&str] = &[
    "d",
    "m",
    "T",
    "grid_points",
    "N",
    "c_w",
    "n_train",
    "n_test",
    "ridge_lambda",
    "r_list",
    "seed",
    "out_dir",
    "sim_k",
    "truth_model",
    "truth_integrator",
    "substeps",
    "batch",
    "gramian_method",
    "gramian_steps",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TruthModel {
    /// The semi-discretized reaction-diffusion equation.
    ReactionDiffusion,
    /// Outputs `C*·S(t)` for a random `C*` drawn from the seed.
    SyntheticLinear,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntegratorChoice {
    Rk4,
    Etdrk4,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub d: usize,
    pub m: usize,
    pub horizon: f64,
    pub grid_points: usize,
    pub order: usize,
    pub c_w: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub ridge_lambda: f64,
    pub r_list: Vec<usize>,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub sim_k: Vec<u32>,
    pub truth_model: TruthModel,
    pub truth_integrator: IntegratorChoice,
    /// `None` picks the substep count from the stiffness bound (RK4) or uses 1 (ETDRK4).
    pub substeps: Option<usize>,
    pub batch: usize,
    pub gramian_method: GramianMethod,
    pub gramian_steps: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            d: 100,
            m: 2,
            horizon: 1.0,
            grid_points: 1001,
            order: 4,
            c_w: 0.2,
            n_train: 200,
            n_test: 100,
            ridge_lambda: 0.0,
            r_list: (1..=40).collect(),
            seed: 42,
            out_dir: PathBuf::from("out"),
            sim_k: vec![1, 10, 50],
            truth_model: TruthModel::ReactionDiffusion,
            truth_integrator: IntegratorChoice::Rk4,
            substeps: None,
            batch: 64,
            gramian_method: GramianMethod::Series,
            gramian_steps: 2000,
        }
    }
}

fn bad(key: &str, value: &str, why: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("invalid value {value:?} for key `{key}`: {why}"))
}

fn parse<V: FromStr>(key: &str, value: &str) -> Result<V, CliError>
where
    V::Err: std::fmt::Display,
{
    value.parse::<V>().map_err(|e| bad(key, value, e))
}

/// `a..b` (inclusive), a comma list, or empty.
fn parse_list<V: TryFrom<u64>>(key: &str, value: &str) -> Result<Vec<V>, CliError> {
    let value = value.trim();
    let items: Vec<u64> = if value.is_empty() {
        Vec::new()
    } else if let Some((a, b)) = value.split_once("..") {
        let a: u64 = parse(key, a.trim())?;
        let b: u64 = parse(key, b.trim().trim_start_matches('='))?;
        if b < a {
            return Err(bad(key, value, "empty range"));
        }
        (a..=b).collect()
    } else {
        value.split(',').map(|s| parse(key, s.trim())).collect::<Result<_, _>>()?
    };
    items.into_iter().map(|x| V::try_from(x).map_err(|_| bad(key, value, "entry out of range"))).collect()
}

impl ExperimentConfig {
    /// The preset behind `--full-scale`.
    pub fn full_scale() -> Self {
        ExperimentConfig {
            d: 1000,
            order: 5,
            n_train: 1000,
            n_test: 1000,
            truth_integrator: IntegratorChoice::Etdrk4,
            substeps: Some(2),
            ..Self::default()
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let value = value.trim();
        match key {
            "d" => self.d = parse(key, value)?,
            "m" => self.m = parse(key, value)?,
            "T" => self.horizon = parse(key, value)?,
            "grid_points" => self.grid_points = parse(key, value)?,
            "N" => self.order = parse(key, value)?,
            "c_w" => self.c_w = parse(key, value)?,
            "n_train" => self.n_train = parse(key, value)?,
            "n_test" => self.n_test = parse(key, value)?,
            "ridge_lambda" => self.ridge_lambda = parse(key, value)?,
            "r_list" => self.r_list = parse_list(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            "sim_k" => self.sim_k = parse_list(key, value)?,
            "truth_model" => {
                self.truth_model = match value {
                    "reaction_diffusion" => TruthModel::ReactionDiffusion,
                    "synthetic_linear" => TruthModel::SyntheticLinear,
                    _ => return Err(bad(key, value, "expected reaction_diffusion or synthetic_linear")),
                }
            }
            "truth_integrator" => {
                self.truth_integrator = match value {
                    "rk4" => IntegratorChoice::Rk4,
                    "etdrk4" => IntegratorChoice::Etdrk4,
                    _ => return Err(bad(key, value, "expected rk4 or etdrk4")),
                }
            }
            "substeps" => {
                self.substeps = if value == "auto" { None } else { Some(parse(key, value)?) };
            }
            "batch" => self.batch = parse(key, value)?,
            "gramian_method" => {
                self.gramian_method = match value {
                    "series" => GramianMethod::Series,
                    "ode" => GramianMethod::Ode,
                    _ => return Err(bad(key, value, "expected series or ode")),
                }
            }
            "gramian_steps" => self.gramian_steps = parse(key, value)?,
            _ => return Err(CliError::Config(format!("unknown configuration key `{key}`"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`, got {raw:?}", i + 1)))?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config file {}: {e}", path.display())))?;
        self.apply_text(&text)
    }

    /// Applies `SIGMOR_<KEY>` overrides from `vars` (keys upper-cased).
    pub fn apply_env<I: IntoIterator<Item = (String, String)>>(&mut self, vars: I) -> Result<(), CliError> {
        let vars: BTreeMap<String, String> = vars.into_iter().collect();
        for key in KEYS {
            if let Some(value) = vars.get(&format!("{ENV_PREFIX}{}", key.to_uppercase())) {
                self.set(key, value)?;
            }
        }
        Ok(())
    }

    /// Signature dimension `n` for the time-augmented `m`-input control.
    pub fn signature_dim(&self) -> Result<usize, CliError> {
        signature_dimension(self.m + 1, self.order).map_err(|e| CliError::Config(format!("key `N`: {e}")))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |key: &str, why: &str| Err(CliError::Config(format!("key `{key}`: {why}")));
        if self.d < 2 {
            return fail("d", "must be at least 2");
        }
        if self.m != 2 && self.truth_model == TruthModel::ReactionDiffusion {
            return fail("m", "the reaction-diffusion model has exactly 2 inputs");
        }
        if self.m == 0 {
            return fail("m", "must be at least 1");
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return fail("T", "must be positive");
        }
        if self.grid_points < 2 {
            return fail("grid_points", "must be at least 2");
        }
        if self.order == 0 {
            return fail("N", "must be at least 1");
        }
        if !(self.c_w.is_finite() && self.c_w >= 0.0) {
            return fail("c_w", "must be non-negative");
        }
        if self.n_train == 0 {
            return fail("n_train", "must be at least 1");
        }
        if self.n_test == 0 {
            return fail("n_test", "must be at least 1");
        }
        if !(self.ridge_lambda.is_finite() && self.ridge_lambda >= 0.0) {
            return fail("ridge_lambda", "must be non-negative");
        }
        if self.substeps == Some(0) {
            return fail("substeps", "must be at least 1 or auto");
        }
        if self.batch == 0 {
            return fail("batch", "must be at least 1");
        }
        if self.gramian_steps < 100 {
            return fail("gramian_steps", "must be at least 100");
        }
        let n = self.signature_dim()?;
        if let Some(&r) = self.r_list.iter().find(|&&r| r == 0 || r > n) {
            return Err(CliError::Config(format!("key `r_list`: entry {r} outside [1, {n}]")));
        }
        if self.sim_k.contains(&0) {
            return fail("sim_k", "frequencies start at 1");
        }
        Ok(())
    }

    pub fn truth_integrator(&self) -> TruthIntegrator {
        match self.truth_integrator {
            IntegratorChoice::Rk4 => TruthIntegrator::Rk4 { substeps: self.substeps },
            IntegratorChoice::Etdrk4 => TruthIntegrator::Etdrk4 { substeps: self.substeps.unwrap_or(1) },
        }
    }

    /// Canonical `key = value` rendering; reading it back reproduces `self`.
    pub fn render(&self) -> String {
        let list = |v: &[String]| v.join(",");
        let mut s = String::new();
        let _ = writeln!(s, "d = {}", self.d);
        let _ = writeln!(s, "m = {}", self.m);
        let _ = writeln!(s, "T = {:?}", self.horizon);
        let _ = writeln!(s, "grid_points = {}", self.grid_points);
        let _ = writeln!(s, "N = {}", self.order);
        let _ = writeln!(s, "c_w = {:?}", self.c_w);
        let _ = writeln!(s, "n_train = {}", self.n_train);
        let _ = writeln!(s, "n_test = {}", self.n_test);
        let _ = writeln!(s, "ridge_lambda = {:?}", self.ridge_lambda);
        let _ = writeln!(s, "r_list = {}", list(&self.r_list.iter().map(|r| r.to_string()).collect::<Vec<_>>()));
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "out_dir = {}", self.out_dir.display());
        let _ = writeln!(s, "sim_k = {}", list(&self.sim_k.iter().map(|k| k.to_string()).collect::<Vec<_>>()));
        let _ = writeln!(
            s,
            "truth_model = {}",
            match self.truth_model {
                TruthModel::ReactionDiffusion => "reaction_diffusion",
                TruthModel::SyntheticLinear => "synthetic_linear",
            }
        );
        let _ = writeln!(
            s,
            "truth_integrator = {}",
            match self.truth_integrator {
                IntegratorChoice::Rk4 => "rk4",
                IntegratorChoice::Etdrk4 => "etdrk4",
            }
        );
        let _ = writeln!(s, "substeps = {}", self.substeps.map_or("auto".to_string(), |k| k.to_string()));
        let _ = writeln!(s, "batch = {}", self.batch);
        let _ = writeln!(
            s,
            "gramian_method = {}",
            match self.gramian_method {
                GramianMethod::Series => "series",
                GramianMethod::Ode => "ode",
            }
        );
        let _ = writeln!(s, "gramian_steps = {}", self.gramian_steps);
        s
    }
}
