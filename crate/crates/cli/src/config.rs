//! Experiment configuration.
//!
//! A run is described by one flat `key = value` file. Keys left out fall back
//! to per-command defaults at either smoke or paper scale, and command-line
//! flags override the file.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use shotlearn::learner::RIDGE_GRID;
use shotlearn::{BoundConstants, Form, LinkFunction};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Target,
    Learn,
    SweepAsymmetry,
    SingleShotScaling,
    BiasVariance,
    Tradeoff,
    Bounds,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::Target => "target",
            Command::Learn => "learn",
            Command::SweepAsymmetry => "sweep-asymmetry",
            Command::SingleShotScaling => "single-shot-scaling",
            Command::BiasVariance => "bias-variance",
            Command::Tradeoff => "tradeoff",
            Command::Bounds => "bounds",
        })
    }
}

/// A seed written either as a TOML integer or as a decimal string, since
/// TOML integers need not reach past `i64::MAX`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Seed(pub u64);

impl<'de> Deserialize<'de> for Seed {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(v) => Ok(Seed(v)),
            Raw::Text(s) => s.trim().parse().map(Seed).map_err(serde::de::Error::custom),
        }
    }
}

/// The keys a configuration file may set. Unknown keys are rejected.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub target_file: Option<PathBuf>,
    pub target_seed: Option<Seed>,
    pub layers: Option<usize>,
    pub seed: Option<Seed>,
    pub n1_grid: Option<Vec<usize>>,
    pub n2_grid: Option<Vec<usize>>,
    pub ns_grid: Option<Vec<u32>>,
    pub d_grid: Option<Vec<u32>>,
    pub replicas: Option<usize>,
    pub d: Option<u32>,
    pub link: Option<String>,
    pub form: Option<String>,
    pub rate: Option<f64>,
    pub iters: Option<usize>,
    pub test_points: Option<usize>,
    pub gamma_grid: Option<Vec<f64>>,
    pub ntot: Option<u64>,
    pub train_fraction: Option<f64>,
    pub c_grid: Option<Vec<f64>>,
    pub out_dir: Option<PathBuf>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub c3: Option<f64>,
    pub delta: Option<f64>,
    pub sigma_bar: Option<f64>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub layers: Option<usize>,
    pub paper_scale: bool,
}

/// A fully resolved configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub paper_scale: bool,
    pub target_file: Option<PathBuf>,
    /// Seed of the generated target when no target file is given.
    pub target_seed: u64,
    pub layers: usize,
    pub seed: u64,
    pub n1_grid: Vec<usize>,
    /// Validation sizes, one per entry of `n1_grid`.
    pub n2_grid: Vec<usize>,
    pub ns_grid: Vec<u32>,
    pub d_grid: Vec<u32>,
    pub replicas: usize,
    pub d: u32,
    pub link: LinkFunction,
    pub form: Form,
    pub rate: f64,
    pub iters: usize,
    pub test_points: usize,
    pub gamma_grid: Vec<f64>,
    pub ntot: u64,
    pub train_fraction: f64,
    pub c_grid: Vec<f64>,
    pub out_dir: PathBuf,
    pub bounds: BoundConstants,
}

pub const DEFAULT_SEED: u64 = 7;

fn parse_form(s: &str) -> Result<Form, CliError> {
    match s.trim().to_ascii_lowercase().as_str() {
        "auto" => Ok(Form::Auto),
        "primal" => Ok(Form::Primal),
        "dual" => Ok(Form::Dual),
        other => Err(CliError::Config(format!("unknown form `{other}`; expected auto, primal or dual"))),
    }
}

impl ExperimentConfig {
    pub fn resolve(command: Command, file: ConfigFile, over: &Overrides) -> Result<Self, CliError> {
        use Command::*;
        let paper = over.paper_scale;
        let seed = over.seed.or(file.seed.map(|s| s.0)).unwrap_or(DEFAULT_SEED);
        let train_fraction = file.train_fraction.unwrap_or(0.8);

        let n1_default: Vec<usize> = match command {
            SweepAsymmetry if !paper => vec![8, 40, 240],
            SweepAsymmetry | Bounds => vec![8, 12, 20, 40, 60, 80, 160, 240],
            SingleShotScaling => vec![40, 800, 24000],
            _ => vec![40],
        };
        let ns_default: Vec<u32> = match command {
            SweepAsymmetry if paper => vec![1, 5, 10, 25, 50, 75, 100, 200],
            SweepAsymmetry => vec![1, 10, 100, 200],
            BiasVariance => vec![1, 10, 100],
            Tradeoff | Bounds => (1..=25).collect(),
            _ => vec![1],
        };
        let replicas_default = match command {
            BiasVariance => 20,
            Tradeoff if paper => 60,
            Tradeoff => 10,
            Target | Learn | Bounds => 1,
            _ => 5,
        };
        let d_grid_default: Vec<u32> = if paper { (1..=10).collect() } else { vec![1, 5, 10] };

        let n1_given = file.n1_grid.is_some();
        let n1_grid = file.n1_grid.unwrap_or(n1_default);
        let n2_grid = match (file.n2_grid, command) {
            (Some(g), _) => g,
            (None, SingleShotScaling) if !n1_given => vec![10, 200, 600],
            (None, _) => n1_grid
                .iter()
                .map(|&n1| ((n1 as f64 * (1.0 - train_fraction) / train_fraction).round() as usize).max(1))
                .collect(),
        };

        let mut bounds = BoundConstants {
            delta: file.delta.unwrap_or(0.01),
            sigma_bar: file.sigma_bar.unwrap_or(1.0),
            ..BoundConstants::default()
        };
        bounds = bounds.with_asymmetry_constants();
        bounds.c1 = file.c1.unwrap_or(bounds.c1);
        bounds.c2 = file.c2.unwrap_or(bounds.c2);
        bounds.c3 = file.c3.unwrap_or(bounds.c3);

        let link: LinkFunction = match &file.link {
            Some(s) => s.parse().map_err(|e: shotlearn::Error| CliError::Config(e.to_string()))?,
            None => LinkFunction::Clip01,
        };

        let cfg = Self {
            command,
            paper_scale: paper,
            target_file: file.target_file,
            target_seed: file.target_seed.map(|s| s.0).unwrap_or(seed),
            layers: over.layers.or(file.layers).unwrap_or(10),
            seed,
            n1_grid,
            n2_grid,
            ns_grid: file.ns_grid.unwrap_or(ns_default),
            d_grid: file.d_grid.unwrap_or(d_grid_default),
            replicas: file.replicas.unwrap_or(replicas_default),
            d: file.d.unwrap_or(10),
            link,
            form: file.form.as_deref().map(parse_form).transpose()?.unwrap_or(Form::Auto),
            rate: file.rate.unwrap_or(1.0 / link.lipschitz()),
            iters: file.iters.unwrap_or(50),
            test_points: file.test_points.unwrap_or(500),
            gamma_grid: file.gamma_grid.unwrap_or_else(|| (0..=5).map(f64::from).collect()),
            ntot: file.ntot.unwrap_or(600),
            train_fraction,
            c_grid: file.c_grid.unwrap_or_else(|| RIDGE_GRID.to_vec()),
            out_dir: over.out_dir.clone().or(file.out_dir).unwrap_or_else(|| PathBuf::from("out")),
            bounds,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        use Command::*;
        let needs_n1 = matches!(self.command, Learn | SweepAsymmetry | SingleShotScaling | BiasVariance | Bounds);
        if needs_n1 && self.n1_grid.is_empty() {
            return bad(format!("{} needs a non-empty n1_grid", self.command));
        }
        if self.n1_grid.contains(&0) {
            return bad("n1_grid entries must be at least 1".into());
        }
        if self.n2_grid.len() != self.n1_grid.len() {
            return bad(format!("n2_grid has {} entries but n1_grid has {}", self.n2_grid.len(), self.n1_grid.len()));
        }
        if self.command != Target && self.ns_grid.is_empty() {
            return bad(format!("{} needs a non-empty ns_grid", self.command));
        }
        if self.ns_grid.contains(&0) {
            return bad("ns_grid entries must be at least 1".into());
        }
        if self.command == BiasVariance && self.d_grid.is_empty() {
            return bad("bias-variance needs a non-empty d_grid".into());
        }
        if matches!(self.command, Tradeoff | Bounds) && self.gamma_grid.is_empty() {
            return bad(format!("{} needs a non-empty gamma_grid", self.command));
        }
        if self.gamma_grid.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return bad("gamma_grid entries must be finite and non-negative".into());
        }
        if self.replicas == 0 {
            return bad("replicas must be at least 1".into());
        }
        if self.command == BiasVariance && self.replicas < 2 {
            return bad("bias-variance needs at least 2 replicas".into());
        }
        if self.layers == 0 {
            return bad("layers must be at least 1".into());
        }
        if !(self.rate > 0.0 && self.rate.is_finite()) {
            return bad(format!("rate must be positive, got {}", self.rate));
        }
        if self.iters == 0 || self.test_points == 0 {
            return bad("iters and test_points must be at least 1".into());
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad(format!("train_fraction must lie in (0, 1), got {}", self.train_fraction));
        }
        if self.c_grid.is_empty() || self.c_grid.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return bad("c_grid must be non-empty with finite non-negative entries".into());
        }
        if self.ntot == 0 {
            return bad("ntot must be at least 1".into());
        }
        self.bounds.validate().map_err(|e| CliError::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve(cmd: Command, text: &str) -> Result<ExperimentConfig, CliError> {
        ExperimentConfig::resolve(cmd, ConfigFile::parse(text)?, &Overrides::default())
    }

    #[test]
    fn defaults_per_command() {
        let sweep = resolve(Command::SweepAsymmetry, "").unwrap();
        assert_eq!(sweep.n1_grid, [8, 40, 240]);
        assert_eq!(sweep.n2_grid, [2, 10, 60]);
        assert_eq!((sweep.replicas, sweep.iters, sweep.test_points, sweep.rate), (5, 50, 500, 1.0));
        let single = resolve(Command::SingleShotScaling, "").unwrap();
        assert_eq!((single.n1_grid.as_slice(), single.n2_grid.as_slice()), (&[40, 800, 24000][..], &[10, 200, 600][..]));
        let trade = resolve(Command::Tradeoff, "").unwrap();
        assert_eq!((trade.ntot, trade.ns_grid.len(), trade.gamma_grid.len(), trade.replicas), (600, 25, 6, 10));
    }

    #[test]
    fn paper_scale_grids() {
        let over = Overrides { paper_scale: true, ..Overrides::default() };
        let sweep = ExperimentConfig::resolve(Command::SweepAsymmetry, ConfigFile::default(), &over).unwrap();
        assert_eq!(sweep.n1_grid.len() * sweep.ns_grid.len() * sweep.replicas, 320);
        let bv = ExperimentConfig::resolve(Command::BiasVariance, ConfigFile::default(), &over).unwrap();
        assert_eq!(bv.d_grid, (1..=10).collect::<Vec<_>>());
        let trade = ExperimentConfig::resolve(Command::Tradeoff, ConfigFile::default(), &over).unwrap();
        assert_eq!(trade.replicas, 60);
    }

    #[test]
    fn file_and_flags() {
        let bare = ConfigFile::parse("seed = 18446744073709551615\n");
        assert!(bare.map_or(true, |f| f.seed == Some(Seed(u64::MAX))));
        let cfg = resolve(Command::Learn, "seed = \"18446744073709551615\"\nlink = \"identity\"\nrate = 0.5\n").unwrap();
        assert_eq!(cfg.seed, u64::MAX);
        assert_eq!(cfg.target_seed, u64::MAX);
        assert_eq!(cfg.link, LinkFunction::Identity);
        let over = Overrides { seed: Some(3), out_dir: Some("x".into()), ..Overrides::default() };
        let cfg = ExperimentConfig::resolve(Command::Learn, ConfigFile::parse("seed = 9\nout_dir = \"y\"").unwrap(), &over).unwrap();
        assert_eq!((cfg.seed, cfg.out_dir.to_str().unwrap()), (3, "x"));
    }

    #[test]
    fn rejects_bad_configs() {
        for text in [
            "unknown_key = 1",
            "replicas = 0",
            "ns_grid = []",
            "ns_grid = [0]",
            "train_fraction = 1.0",
            "link = \"sigmoid\"",
            "n1_grid = [8, 16]\nn2_grid = [2]",
            "gamma_grid = [-1.0]",
            "delta = 2.0",
            "rate = 0",
            "seed = \"abc\"",
        ] {
            assert!(matches!(resolve(Command::SweepAsymmetry, text), Err(CliError::Config(_))), "{text}");
        }
    }

    #[test]
    fn bound_constants_follow_the_unit_convention() {
        let cfg = resolve(Command::Bounds, "").unwrap();
        let log = 100f64.ln();
        assert!((cfg.bounds.c1 - 1.0).abs() < 1e-15);
        assert!((cfg.bounds.c2 - log.sqrt()).abs() < 1e-15);
        assert!((cfg.bounds.c3 - log.sqrt()).abs() < 1e-15);
        let cfg = resolve(Command::Bounds, "c2 = 0.5").unwrap();
        assert_eq!(cfg.bounds.c2, 0.5);
    }
}
