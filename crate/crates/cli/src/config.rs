//! Flag and config-file resolution. Flags override file keys, which override
//! the built-in defaults.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;
use sparseflow::conditioning::{DEFAULT_RADIUS, DEFAULT_SIGMA};
use sparseflow::FlowParams64;
use sparseflow::sampler::{DEFAULT_N_MAX, DEFAULT_STRIDE};

use crate::CliError;

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Input directory (frames, or estimated flow for `eval`)
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Output directory (a file path for `eval`)
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Candidate grid stride in pixels
    #[arg(long, global = true)]
    pub lambda: Option<usize>,
    /// Upper bound of the per-clip keypoint count
    #[arg(long, global = true)]
    pub n_max: Option<usize>,
    #[arg(long, global = true)]
    pub kernel_radius: Option<usize>,
    #[arg(long, global = true)]
    pub sigma: Option<f64>,
    /// TOML file with any of the long flag names as keys (snake_case)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Directory of `flow_*.flo` files to load instead of computing flow
    #[arg(long, global = true)]
    pub flow_dir: Option<PathBuf>,
    /// Worker threads; 0 uses every core
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub levels: Option<usize>,
    #[arg(long, global = true)]
    pub iterations: Option<usize>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    /// Directory of ground-truth `gt_flow_*.flo` files
    #[arg(long, global = true)]
    pub truth: Option<PathBuf>,
    /// Trajectory JSONL file
    #[arg(long, global = true)]
    pub trajectories: Option<PathBuf>,
    /// Scene description file
    #[arg(long, global = true)]
    pub scene: Option<PathBuf>,
    /// Directory of `support_*.pgm` masks restricting the flow error
    #[arg(long, global = true)]
    pub mask_dir: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    input: Option<PathBuf>,
    output: Option<PathBuf>,
    seed: Option<u64>,
    lambda: Option<usize>,
    n_max: Option<usize>,
    kernel_radius: Option<usize>,
    sigma: Option<f64>,
    flow_dir: Option<PathBuf>,
    threads: Option<usize>,
    levels: Option<usize>,
    iterations: Option<usize>,
    alpha: Option<f64>,
    epsilon: Option<f64>,
    truth: Option<PathBuf>,
    trajectories: Option<PathBuf>,
    scene: Option<PathBuf>,
    mask_dir: Option<PathBuf>,
}

/// Fully resolved settings. Paths stay optional; each subcommand checks the
/// ones it needs.
#[derive(Debug, Clone)]
pub struct Settings {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    /// `None` when neither a flag nor the config file set it.
    pub seed: Option<u64>,
    pub lambda: usize,
    pub n_max: usize,
    pub kernel_radius: usize,
    pub sigma: f64,
    pub flow_dir: Option<PathBuf>,
    pub threads: usize,
    pub flow: FlowParams64,
    pub truth: Option<PathBuf>,
    pub trajectories: Option<PathBuf>,
    pub scene: Option<PathBuf>,
    pub mask_dir: Option<PathBuf>,
}

impl Settings {
    pub fn resolve(flags: &Flags) -> Result<Self, CliError> {
        let file = match &flags.config {
            Some(path) => load(path)?,
            None => FileConfig::default(),
        };
        let defaults = FlowParams64::default();
        let settings = Settings {
            input: flags.input.clone().or(file.input),
            output: flags.output.clone().or(file.output),
            seed: flags.seed.or(file.seed),
            lambda: flags.lambda.or(file.lambda).unwrap_or(DEFAULT_STRIDE),
            n_max: flags.n_max.or(file.n_max).unwrap_or(DEFAULT_N_MAX),
            kernel_radius: flags.kernel_radius.or(file.kernel_radius).unwrap_or(DEFAULT_RADIUS),
            sigma: flags.sigma.or(file.sigma).unwrap_or(DEFAULT_SIGMA),
            flow_dir: flags.flow_dir.clone().or(file.flow_dir),
            threads: flags.threads.or(file.threads).unwrap_or(0),
            flow: FlowParams64 {
                pyramid_levels: flags.levels.or(file.levels).unwrap_or(defaults.pyramid_levels),
                iterations_per_level: flags.iterations.or(file.iterations).unwrap_or(defaults.iterations_per_level),
                regularization_alpha: flags.alpha.or(file.alpha).unwrap_or(defaults.regularization_alpha),
                convergence_epsilon: flags.epsilon.or(file.epsilon).unwrap_or(defaults.convergence_epsilon),
            },
            truth: flags.truth.clone().or(file.truth),
            trajectories: flags.trajectories.clone().or(file.trajectories),
            scene: flags.scene.clone().or(file.scene),
            mask_dir: flags.mask_dir.clone().or(file.mask_dir),
        };
        settings.validate()?;
        Ok(settings)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.lambda == 0 {
            return Err(CliError::Usage("lambda must be at least 1".into()));
        }
        if self.n_max == 0 {
            return Err(CliError::Usage("n-max must be at least 1".into()));
        }
        if !self.sigma.is_finite() || self.sigma <= 0.0 {
            return Err(CliError::Usage(format!("sigma must be positive, got {}", self.sigma)));
        }
        self.flow.validate().map_err(|e| CliError::Usage(e.to_string()))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn require<'a>(&self, value: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, CliError> {
        value.as_deref().ok_or_else(|| CliError::Usage(format!("--{flag} is required")))
    }
}

fn load(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}
