//! Experiment configuration: a TOML file and command-line flags share one
//! schema, flags win over the file.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use wallperc::estimators::RhoDescriptor;
use wallperc::groups::Family;
use wallperc::hyperbolic::TilingSpec;
use wallperc::percolation::WallRule;
use wallperc::walls::WallStructure;

use crate::CliError;

pub const DEFAULT_FAMILY: &str = "free:r=2";
pub const DEFAULT_RADIUS: u32 = 6;
pub const DEFAULT_SAMPLES: u64 = 10_000;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_OUT: &str = "wallperc-out";
pub const DEFAULT_MIN_SIZE: u32 = 20;

/// Raw settings as they appear in a config file or on the command line.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(deny_unknown_fields)]
pub struct ConfigArgs {
    /// Group family, e.g. `free:r=2`, `lattice:d=2`, `lamplighter:m=2,r=2`, `tiling:p=4,q=5,depth=6`
    #[arg(long)]
    pub family: Option<String>,
    /// Wall structure (`tree`, `cubical`, `lamplighter`, `folner:nmax=N`), `bond` or `hyperplane`
    #[arg(long)]
    pub walls: Option<String>,
    /// `poisson` or `bernoulli`
    #[arg(long)]
    pub rule: Option<String>,
    #[arg(long)]
    pub p: Option<f64>,
    /// Window radius (tiling depth for tiling families)
    #[arg(long)]
    pub radius: Option<u32>,
    /// Explicit target element; repeat for several. Default: one per sphere.
    #[arg(long = "target")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<Vec<String>>,
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// ρ for the sandwich check, `linear:a,b` or `identity`
    #[arg(long)]
    pub rho: Option<String>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// ε for the threshold report
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// d_K for the threshold report (default 1)
    #[arg(long)]
    pub d_k: Option<f64>,
    /// Also write clusters.csv
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub clusters: Option<bool>,
    /// Minimum size of a boundary component counted in clusters.csv
    #[arg(long)]
    pub min_size: Option<u32>,
}

impl ConfigArgs {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::config(format!("config file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text)
    }

    /// Fields set in `self` replace those of `base`.
    pub fn over(self, base: ConfigArgs) -> ConfigArgs {
        ConfigArgs {
            family: self.family.or(base.family),
            walls: self.walls.or(base.walls),
            rule: self.rule.or(base.rule),
            p: self.p.or(base.p),
            radius: self.radius.or(base.radius),
            targets: self.targets.or(base.targets),
            samples: self.samples.or(base.samples),
            seed: self.seed.or(base.seed),
            out: self.out.or(base.out),
            rho: self.rho.or(base.rho),
            beta: self.beta.or(base.beta),
            gamma: self.gamma.or(base.gamma),
            epsilon: self.epsilon.or(base.epsilon),
            d_k: self.d_k.or(base.d_k),
            clusters: self.clusters.or(base.clusters),
            min_size: self.min_size.or(base.min_size),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SamplerKind {
    Walls(WallStructure),
    Bond,
    Hyperplane,
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SamplerKind::Walls(w) => write!(f, "{w}"),
            SamplerKind::Bond => write!(f, "bond"),
            SamplerKind::Hyperplane => write!(f, "hyperplane"),
        }
    }
}

impl FromStr for SamplerKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.trim() {
            "bond" => Ok(SamplerKind::Bond),
            "hyperplane" => Ok(SamplerKind::Hyperplane),
            other => Ok(SamplerKind::Walls(other.parse()?)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Targets {
    Spheres,
    List(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sandwich {
    pub rho: RhoDescriptor,
    pub beta: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdRequest {
    pub epsilon: f64,
    pub d_k: f64,
}

/// A validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub family: Family,
    pub tiling: Option<TilingSpec>,
    pub sampler: SamplerKind,
    pub rule: WallRule,
    pub p: f64,
    pub radius: u32,
    pub targets: Targets,
    pub samples: u64,
    pub seed: u64,
    pub out: PathBuf,
    pub sandwich: Option<Sandwich>,
    pub thresholds: Option<ThresholdRequest>,
    pub clusters: bool,
    pub min_size: u32,
}

impl ExperimentConfig {
    pub fn resolve(args: &ConfigArgs) -> Result<Self, CliError> {
        let family_text = args.family.as_deref().unwrap_or(DEFAULT_FAMILY);
        let family: Family = family_text.parse()?;
        let (tiling, radius) = match family {
            Family::Tiling { .. } => {
                let mut spec: TilingSpec = family_text.parse()?;
                let explicit_depth = family_text.contains("depth");
                if let (false, Some(r)) = (explicit_depth, args.radius) {
                    spec.depth = r;
                }
                (Some(spec), spec.depth)
            }
            _ => (None, args.radius.unwrap_or(DEFAULT_RADIUS)),
        };
        let default_sampler = match family {
            Family::Free { .. } => "tree",
            Family::Lattice { .. } => "cubical",
            Family::Lamplighter { .. } => "lamplighter",
            Family::Tiling { .. } => "hyperplane",
        };
        let sampler: SamplerKind = args.walls.as_deref().unwrap_or(default_sampler).parse()?;
        match sampler {
            SamplerKind::Hyperplane if tiling.is_none() => {
                return Err(CliError::config("hyperplane percolation needs a tiling family"))
            }
            SamplerKind::Walls(_) | SamplerKind::Bond if tiling.is_some() => {
                return Err(CliError::config("tiling families only support `hyperplane`"))
            }
            SamplerKind::Walls(w) if !w.compatible(&family) => {
                return Err(CliError::config(format!("wall structure {w} does not fit {family}")))
            }
            _ => {}
        }
        let rule: WallRule = args.rule.as_deref().unwrap_or("poisson").parse()?;
        let p = args.p.unwrap_or(0.5);
        let p_ok = match (sampler, rule) {
            (SamplerKind::Bond, _) => (0.0..=1.0).contains(&p),
            (SamplerKind::Hyperplane, _) | (SamplerKind::Walls(_), WallRule::Poisson) => p > 0.0 && p < 1.0,
            (SamplerKind::Walls(_), WallRule::Bernoulli) => p > 0.0 && p <= 1.0,
        };
        if !p_ok {
            return Err(CliError::config(format!("p = {p} is out of range for {sampler} / {rule}")));
        }
        if let (SamplerKind::Walls(w), WallRule::Bernoulli) = (sampler, rule) {
            if !w.has_unit_measure() {
                return Err(CliError::config(format!("the bernoulli rule needs unit wall measures; {w} has none")));
            }
        }
        let samples = args.samples.unwrap_or(DEFAULT_SAMPLES);
        if samples == 0 {
            return Err(CliError::config("samples must be at least 1"));
        }
        let sandwich = match (&args.rho, args.beta, args.gamma) {
            (None, None, None) => None,
            (rho, Some(beta), Some(gamma)) => Some(Sandwich {
                rho: match rho {
                    Some(r) => r.parse()?,
                    None => RhoDescriptor::IDENTITY,
                },
                beta,
                gamma,
            }),
            _ => return Err(CliError::config("a sandwich check needs both beta and gamma")),
        };
        let thresholds = match (args.epsilon, args.d_k) {
            (None, None) => None,
            (eps, d_k) => Some(ThresholdRequest {
                epsilon: eps.ok_or_else(|| CliError::config("d_k given without epsilon"))?,
                d_k: d_k.unwrap_or(1.0),
            }),
        };
        Ok(Self {
            family,
            tiling,
            sampler,
            rule,
            p,
            radius,
            targets: match &args.targets {
                Some(list) if !list.is_empty() => Targets::List(list.clone()),
                _ => Targets::Spheres,
            },
            samples,
            seed: args.seed.unwrap_or(DEFAULT_SEED),
            out: args.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
            sandwich,
            thresholds,
            clusters: args.clusters.unwrap_or(false),
            min_size: args.min_size.unwrap_or(DEFAULT_MIN_SIZE),
        })
    }

    pub fn nmax(&self) -> Option<u32> {
        match self.sampler {
            SamplerKind::Walls(WallStructure::Folner { nmax }) => Some(nmax),
            _ => None,
        }
    }

    /// Canonical echo of every setting that affects results. The output
    /// directory is left out so that reruns elsewhere hash the same.
    pub fn echo(&self) -> Value {
        json!({
            "family": match self.tiling {
                Some(t) => t.to_string(),
                None => self.family.to_string(),
            },
            "sampler": self.sampler.to_string(),
            "rule": match self.sampler {
                SamplerKind::Walls(_) => Value::from(self.rule.to_string()),
                _ => Value::Null,
            },
            "p": self.p,
            "radius": self.radius,
            "targets": match &self.targets {
                Targets::Spheres => Value::from("spheres"),
                Targets::List(l) => Value::from(l.clone()),
            },
            "samples": self.samples,
            "seed": self.seed,
            "sandwich": self.sandwich.map(|s| json!({"rho": s.rho.to_string(), "beta": s.beta, "gamma": s.gamma})),
            "thresholds": self.thresholds.map(|t| json!({"epsilon": t.epsilon, "d_k": t.d_k})),
            "clusters": self.clusters,
            "min_size": self.min_size,
        })
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.echo().to_string().as_bytes()))
    }
}
