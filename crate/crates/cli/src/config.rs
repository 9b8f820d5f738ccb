//! Flat TOML run configurations. Every key is optional; unknown keys are
//! rejected.

use std::path::{Path, PathBuf};

use serde::de::value::{Error as ValueError, StrDeserializer};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use bregdc::io::Header;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn bad(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

/// Parses a kebab-case enum name the same way the config file does.
fn parse_name<T: DeserializeOwned>(s: &str, what: &str) -> Result<T, ConfigError> {
    T::deserialize(StrDeserializer::<ValueError>::new(s))
        .map_err(|e| bad(format!("bad {what} `{s}`: {e}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TvMethodName {
    Ubama,
    Palm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RpcaMethodName {
    Ubama,
    Adca,
    DcaAdmm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BidMethodName {
    Euclidean,
    Entropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartName {
    Spectral,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AcceptName {
    Majorization,
    NoIncrease,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlurName {
    None,
    Gaussian,
    Disk,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TvConfig {
    pub application: Option<String>,
    pub method: TvMethodName,
    pub pcg_tol: f64,
    pub seed: u64,
    pub eps: f64,
    pub maxit: usize,
    /// Clean image; a `size x size` phantom when absent.
    pub input: Option<PathBuf>,
    pub size: usize,
    pub blur: BlurName,
    pub blur_size: usize,
    pub blur_sigma: f64,
    pub delta: f64,
    pub sample_rate: f64,
    pub tau: Option<f64>,
    pub beta: Option<f64>,
    pub alpha: Option<f64>,
    pub mu: f64,
    pub nu: Option<f64>,
    pub timing: bool,
}

impl Default for TvConfig {
    fn default() -> Self {
        Self {
            application: None,
            method: TvMethodName::Ubama,
            pcg_tol: 1e-5,
            seed: 1,
            eps: 1e-4,
            maxit: 1000,
            input: None,
            size: 64,
            blur: BlurName::None,
            blur_size: 5,
            blur_sigma: 1.0,
            delta: 0.1,
            sample_rate: 0.5,
            tau: None,
            beta: None,
            alpha: None,
            mu: 1.01,
            nu: None,
            timing: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RpcaConfig {
    pub application: Option<String>,
    pub method: RpcaMethodName,
    /// Trial `t` uses seed `seed + t`.
    pub seed: u64,
    pub trials: usize,
    pub n: usize,
    pub rank: usize,
    pub sparse_frac: f64,
    pub sample_rate: f64,
    pub delta: f64,
    pub eps: f64,
    pub maxit: usize,
    pub start: StartName,
    pub inner_tol: f64,
    /// Observed matrix (CSV); replaces the synthetic trials with one run.
    pub input: Option<PathBuf>,
    pub tau: Option<f64>,
    pub lambda: Option<f64>,
    pub kappa1: Option<f64>,
    pub kappa2: Option<f64>,
    pub mu: f64,
    pub nu: f64,
    pub timing: bool,
}

impl Default for RpcaConfig {
    fn default() -> Self {
        Self {
            application: None,
            method: RpcaMethodName::Ubama,
            seed: 1,
            trials: 10,
            n: 256,
            rank: 8,
            sparse_frac: 0.05,
            sample_rate: 0.9,
            delta: 0.01,
            eps: 1e-4,
            maxit: 500,
            start: StartName::Spectral,
            inner_tol: 1e-4,
            input: None,
            tau: None,
            lambda: None,
            kappa1: None,
            kappa2: None,
            mu: 1.01,
            nu: 1.01,
            timing: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BidConfig {
    pub application: Option<String>,
    /// Kernel-block proximal geometry.
    pub method: BidMethodName,
    /// Keep the kernel fixed at the true one.
    pub nonblind: bool,
    pub seed: u64,
    /// `0` runs to `maxit`.
    pub eps: f64,
    pub maxit: usize,
    pub input: Option<PathBuf>,
    pub size: usize,
    pub kernel: BlurName,
    pub kernel_size: usize,
    pub kernel_sigma: f64,
    pub delta: f64,
    pub lambda: f64,
    pub tau: f64,
    pub c0: f64,
    pub d0: f64,
    pub accept: AcceptName,
    pub timing: bool,
}

impl Default for BidConfig {
    fn default() -> Self {
        Self {
            application: None,
            method: BidMethodName::Euclidean,
            nonblind: false,
            seed: 1,
            eps: 0.0,
            maxit: bregdc::bid::BID_MAXIT,
            input: None,
            size: 64,
            kernel: BlurName::Gaussian,
            kernel_size: 7,
            kernel_sigma: 1.5,
            delta: 1e-3,
            lambda: bregdc::bid::BID_LAMBDA,
            tau: bregdc::bid::BID_TAU,
            c0: 1.0,
            d0: 1.0,
            accept: AcceptName::Majorization,
            timing: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProxCheckConfig {
    pub application: Option<String>,
    pub seed: u64,
}

impl Default for ProxCheckConfig {
    fn default() -> Self {
        Self {
            application: None,
            seed: 0,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub method: Option<String>,
    pub seed: Option<u64>,
    pub eps: Option<f64>,
    pub maxit: Option<usize>,
}

pub trait AppConfig: DeserializeOwned + Serialize + Default {
    const APPLICATION: &'static str;
    fn application(&self) -> Option<&str>;
    fn apply(&mut self, o: &Overrides) -> Result<(), ConfigError>;
    fn validate(&self) -> Result<(), ConfigError>;
}

fn check_positive(v: f64, name: &str) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(bad(format!("{name} must be positive and finite, got {v}")))
    }
}

fn check_opt_positive(v: Option<f64>, name: &str) -> Result<(), ConfigError> {
    v.map_or(Ok(()), |v| check_positive(v, name))
}

fn check_seed(seed: u64) -> Result<(), ConfigError> {
    // seeds are written back as TOML integers
    if seed > i64::MAX as u64 {
        return Err(bad(format!("seed must be at most {}, got {seed}", i64::MAX)));
    }
    Ok(())
}

fn check_solver(eps: f64, maxit: usize, allow_zero_eps: bool) -> Result<(), ConfigError> {
    if !(eps > 0.0 || (allow_zero_eps && eps == 0.0)) || !eps.is_finite() {
        return Err(bad(format!("eps out of range: {eps}")));
    }
    if maxit == 0 {
        return Err(bad("maxit must be positive"));
    }
    Ok(())
}

fn check_rate(v: f64, name: &str) -> Result<(), ConfigError> {
    if v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(bad(format!("{name} must lie in (0, 1], got {v}")))
    }
}

macro_rules! common_overrides {
    ($cfg:expr, $o:expr, $what:literal) => {{
        if let Some(m) = &$o.method {
            $cfg.method = parse_name(m, $what)?;
        }
        if let Some(s) = $o.seed {
            $cfg.seed = s;
        }
        if let Some(e) = $o.eps {
            $cfg.eps = e;
        }
        if let Some(m) = $o.maxit {
            $cfg.maxit = m;
        }
    }};
}

impl AppConfig for TvConfig {
    const APPLICATION: &'static str = "tv";

    fn application(&self) -> Option<&str> {
        self.application.as_deref()
    }

    fn apply(&mut self, o: &Overrides) -> Result<(), ConfigError> {
        common_overrides!(self, o, "tv method");
        Ok(())
    }

    fn validate(&self) -> Result<(), ConfigError> {
        check_seed(self.seed)?;
        check_solver(self.eps, self.maxit, false)?;
        check_positive(self.pcg_tol, "pcg_tol")?;
        check_rate(self.sample_rate, "sample_rate")?;
        if !(self.delta >= 0.0) {
            return Err(bad(format!("delta must be nonnegative, got {}", self.delta)));
        }
        if self.size == 0 {
            return Err(bad("size must be positive"));
        }
        check_opt_positive(self.tau, "tau")?;
        check_opt_positive(self.beta, "beta")?;
        check_opt_positive(self.nu, "nu")?;
        if let Some(a) = self.alpha {
            if !(0.0..=1.0).contains(&a) {
                return Err(bad(format!("alpha must lie in [0, 1], got {a}")));
            }
        }
        check_positive(self.mu, "mu")
    }
}

impl AppConfig for RpcaConfig {
    const APPLICATION: &'static str = "rpca";

    fn application(&self) -> Option<&str> {
        self.application.as_deref()
    }

    fn apply(&mut self, o: &Overrides) -> Result<(), ConfigError> {
        common_overrides!(self, o, "rpca method");
        Ok(())
    }

    fn validate(&self) -> Result<(), ConfigError> {
        check_seed(self.seed)?;
        check_seed(self.seed.saturating_add(self.trials as u64))?;
        check_solver(self.eps, self.maxit, false)?;
        check_positive(self.inner_tol, "inner_tol")?;
        check_rate(self.sample_rate, "sample_rate")?;
        if self.trials == 0 || self.n == 0 || self.rank > self.n {
            return Err(bad("need trials > 0, n > 0 and rank <= n"));
        }
        for (v, name) in [
            (self.tau, "tau"),
            (self.lambda, "lambda"),
            (self.kappa1, "kappa1"),
            (self.kappa2, "kappa2"),
        ] {
            check_opt_positive(v, name)?;
        }
        check_positive(self.mu, "mu")?;
        check_positive(self.nu, "nu")
    }
}

impl AppConfig for BidConfig {
    const APPLICATION: &'static str = "bid";

    fn application(&self) -> Option<&str> {
        self.application.as_deref()
    }

    fn apply(&mut self, o: &Overrides) -> Result<(), ConfigError> {
        common_overrides!(self, o, "bid method");
        Ok(())
    }

    fn validate(&self) -> Result<(), ConfigError> {
        check_seed(self.seed)?;
        check_solver(self.eps, self.maxit, true)?;
        if self.kernel == BlurName::None {
            return Err(bad("bid needs a blur kernel"));
        }
        if self.kernel_size % 2 == 0 {
            return Err(bad(format!("kernel_size must be odd, got {}", self.kernel_size)));
        }
        if self.size == 0 {
            return Err(bad("size must be positive"));
        }
        for (v, name) in [
            (self.lambda, "lambda"),
            (self.tau, "tau"),
            (self.c0, "c0"),
            (self.d0, "d0"),
            (self.kernel_sigma, "kernel_sigma"),
        ] {
            check_positive(v, name)?;
        }
        if !(self.delta >= 0.0) {
            return Err(bad(format!("delta must be nonnegative, got {}", self.delta)));
        }
        Ok(())
    }
}

impl AppConfig for ProxCheckConfig {
    const APPLICATION: &'static str = "prox-check";

    fn application(&self) -> Option<&str> {
        self.application.as_deref()
    }

    fn apply(&mut self, o: &Overrides) -> Result<(), ConfigError> {
        if o.method.is_some() || o.eps.is_some() || o.maxit.is_some() {
            return Err(bad("prox-check takes no solver overrides"));
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), ConfigError> {
        check_seed(self.seed)
    }
}

/// Reads the optional config file, applies the overrides and validates.
pub fn load<T: AppConfig>(path: Option<&Path>, overrides: &Overrides) -> Result<T, ConfigError> {
    let mut cfg: T = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| bad(format!("cannot read {}: {e}", p.display())))?;
            toml::from_str(&text).map_err(|e| bad(format!("{}: {e}", p.display())))?
        }
        None => T::default(),
    };
    if let Some(app) = cfg.application() {
        if app != T::APPLICATION {
            return Err(bad(format!(
                "config is for `{app}`, not `{}`",
                T::APPLICATION
            )));
        }
    }
    cfg.apply(overrides)?;
    cfg.validate()?;
    Ok(cfg)
}

/// `key=value` lines for every set key, in key order.
pub fn header_of<T: Serialize>(cfg: &T) -> Result<Header, ConfigError> {
    let table = toml::Table::try_from(cfg).map_err(|e| bad(e.to_string()))?;
    Ok(table
        .into_iter()
        .filter(|(k, _)| k != "application")
        .map(|(k, v)| {
            let v = match v {
                toml::Value::String(s) => s,
                toml::Value::Float(f) => f.to_string(),
                other => other.to_string(),
            };
            (k, v)
        })
        .collect())
}
