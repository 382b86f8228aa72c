//! Run settings: command-line flags layered over an optional `key = value` file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Flags shared by every subcommand. Unset flags fall back to the config
/// file, then to the subcommand's own default.
#[derive(Args, Debug, Default, Clone)]
pub struct Flags {
    /// Range or scale parameter N.
    #[arg(long = "N", global = true)]
    pub n: Option<u64>,
    #[arg(long, global = true)]
    pub delta1: Option<f64>,
    /// Beta-sieve parameter.
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    #[arg(long = "R", global = true)]
    pub big_r: Option<u64>,
    /// Sifting level or character level P.
    #[arg(long = "P", global = true)]
    pub p: Option<u64>,
    /// Largest modulus Q for `bv`.
    #[arg(long = "Q", global = true)]
    pub q: Option<u64>,
    /// Single even target m.
    #[arg(long, global = true)]
    pub m: Option<u64>,
    /// Zero-free quality for `exceptional-zero`.
    #[arg(long, global = true)]
    pub kappa: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (fallback: CHENSIEVE_THREADS, then all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Directory for emitted JSON and CSV files.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, global = true)]
    pub oversample: Option<u64>,
    /// Euler-product cutoff for the singular series.
    #[arg(long, global = true)]
    pub cutoff: Option<u64>,
    /// Stop a scan after this many chunks and keep the checkpoint.
    #[arg(long, global = true)]
    pub stop_after: Option<u64>,
    /// Config file of `key = value` lines.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse().map_err(|_| ConfigError(format!("config: cannot parse `{v}` for `{key}`")))
}

fn read_file(path: &Path) -> Result<BTreeMap<String, String>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("config {}: {e}", path.display())))?;
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("config line {}: expected `key = value`", i + 1)))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

impl Flags {
    /// Fill unset flags from the config file named by `--config`.
    pub fn resolve(mut self) -> Result<Self, ConfigError> {
        if let Some(path) = self.config.clone() {
            for (k, v) in read_file(&path)? {
                let v = v.as_str();
                match k.as_str() {
                    "N" => self.n = self.n.or(Some(parse(&k, v)?)),
                    "delta1" => self.delta1 = self.delta1.or(Some(parse(&k, v)?)),
                    "beta" => self.beta = self.beta.or(Some(parse(&k, v)?)),
                    "R" => self.big_r = self.big_r.or(Some(parse(&k, v)?)),
                    "P" => self.p = self.p.or(Some(parse(&k, v)?)),
                    "Q" => self.q = self.q.or(Some(parse(&k, v)?)),
                    "m" => self.m = self.m.or(Some(parse(&k, v)?)),
                    "kappa" => self.kappa = self.kappa.or(Some(parse(&k, v)?)),
                    "seed" => self.seed = self.seed.or(Some(parse(&k, v)?)),
                    "threads" => self.threads = self.threads.or(Some(parse(&k, v)?)),
                    "out" => self.out = self.out.or(Some(PathBuf::from(v))),
                    "checkpoint" => self.checkpoint = self.checkpoint.or(Some(PathBuf::from(v))),
                    "oversample" => self.oversample = self.oversample.or(Some(parse(&k, v)?)),
                    "cutoff" => self.cutoff = self.cutoff.or(Some(parse(&k, v)?)),
                    _ => return Err(ConfigError(format!("config: unknown key `{k}`"))),
                }
            }
        }
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError(msg));
        if let Some(d) = self.delta1 {
            if !(d > 0.0 && d < 0.1) {
                return bad(format!("delta1 = {d} must lie in (0, 0.1)"));
            }
        }
        if let Some(b) = self.beta {
            if !(b >= 1.0 && b.is_finite()) {
                return bad(format!("beta = {b} must be at least 1"));
            }
        }
        if let Some(k) = self.kappa {
            if !(k > 0.0 && k < 1.0) {
                return bad(format!("kappa = {k} must lie in (0, 1)"));
            }
        }
        if self.threads == Some(0) {
            return bad("threads must be positive".into());
        }
        if self.oversample.is_some_and(|o| o < 4) {
            return bad("oversample must be at least 4".into());
        }
        if self.cutoff.is_some_and(|c| c < 1000) {
            return bad("cutoff must be at least 1000".into());
        }
        if self.n == Some(0) {
            return bad("N must be positive".into());
        }
        Ok(())
    }

    /// Thread count: flag or config, then `CHENSIEVE_THREADS`, else `None`
    /// (all cores).
    pub fn thread_count(&self) -> Result<Option<usize>, ConfigError> {
        if self.threads.is_some() {
            return Ok(self.threads);
        }
        match std::env::var("CHENSIEVE_THREADS") {
            Ok(v) => match v.trim().parse::<usize>() {
                Ok(n) if n > 0 => Ok(Some(n)),
                _ => Err(ConfigError(format!("CHENSIEVE_THREADS = `{v}` is not a positive integer"))),
            },
            Err(_) => Ok(None),
        }
    }
}
