use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use lifisim::assembler::{DbConvention, MseMode, SimOptions};
use lifisim::scenario::ScenarioFile;

/// Environment variable holding the intrinsic-operator memory budget in bytes.
pub const MEMORY_BUDGET_ENV: &str = "LIFISIM_MEMORY_BUDGET";

#[derive(Debug, Parser)]
#[command(
    name = "lifisim",
    version,
    about = "Frequency-domain channel simulator for indoor optical wireless links"
)]
pub struct Cli {
    /// Worker threads for the numeric kernels (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute every emitter-detector transfer function of a scenario.
    Simulate {
        scenario: PathBuf,
        /// Output directory for link tables and metadata.
        #[arg(long, short)]
        out: PathBuf,
        #[command(flatten)]
        sim: SimFlags,
    },
    /// Move one detector through a list of poses and tabulate the gain.
    Sweep {
        scenario: PathBuf,
        /// CSV with columns x,y,z,ox,oy,oz.
        #[arg(long)]
        poses: PathBuf,
        /// Frequency at which the gain is reported, Hz (default from scenario).
        #[arg(long)]
        query_freq: Option<f64>,
        /// Detector id to move (default: the first detector).
        #[arg(long)]
        detector: Option<String>,
        #[arg(long, short)]
        out: PathBuf,
        #[command(flatten)]
        sim: SimFlags,
    },
    /// Received DC optical power on a horizontal plane.
    Heatmap {
        scenario: PathBuf,
        /// Grid spacing, m (default from scenario).
        #[arg(long)]
        step: Option<f64>,
        /// Plane height, m (default from scenario).
        #[arg(long)]
        height: Option<f64>,
        /// Detector id used as the probe (default: the first detector).
        #[arg(long)]
        detector: Option<String>,
        #[arg(long, value_enum, default_value_t = PowerUnits::Watts)]
        units: PowerUnits,
        /// Output CSV file.
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Relative MSE between measured and simulated responses.
    Compare {
        /// Measured file, or a directory of them.
        measured: PathBuf,
        /// Simulated file, or a directory with files of the same names.
        simulated: PathBuf,
        /// Pass threshold, percent.
        #[arg(long, default_value_t = 5.0)]
        threshold: f64,
        /// Difference mode; forced to amplitude when either side has no phase.
        #[arg(long, value_enum, default_value_t = ModeArg::Complex)]
        mode: ModeArg,
        /// Component rows to compare in link tables.
        #[arg(long, default_value = "total")]
        component: String,
        /// Convention for reading `mag_db` columns.
        #[arg(long, value_enum, default_value_t = DbArg::Amplitude)]
        db_convention: DbArg,
        /// Offset to remove from `mag_db` columns, dB.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        db_offset: f64,
    },
    /// Check the diffuse solver against an explicit path sum at reduced N.
    Oracle {
        scenario: PathBuf,
        /// Largest patch count; the resolution is coarsened until it fits.
        #[arg(long, default_value_t = 150)]
        max_patches: usize,
        /// Deliberately break the solver to confirm the check can fail.
        #[arg(long, value_enum)]
        inject_fault: Option<Fault>,
        /// Largest accepted relative deviation.
        #[arg(long, default_value_t = 1e-8)]
        tolerance: f64,
    },
    /// Time a mobility sweep against cold per-pose rebuilds.
    Bench {
        scenario: PathBuf,
        #[arg(long)]
        poses: PathBuf,
        #[arg(long)]
        detector: Option<String>,
        /// Number of poses also evaluated cold (default: all).
        #[arg(long)]
        cold_runs: Option<usize>,
        /// Largest accepted warm-to-cold time ratio.
        #[arg(long, default_value_t = 0.2)]
        max_ratio: f64,
        #[command(flatten)]
        sim: SimFlags,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PowerUnits {
    Watts,
    Db,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Complex,
    Amplitude,
}

impl From<ModeArg> for MseMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Complex => MseMode::Complex,
            ModeArg::Amplitude => MseMode::Amplitude,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DbArg {
    #[value(name = "20log")]
    Amplitude,
    #[value(name = "10log")]
    Power,
}

impl From<DbArg> for DbConvention {
    fn from(d: DbArg) -> Self {
        match d {
            DbArg::Amplitude => DbConvention::Amplitude,
            DbArg::Power => DbConvention::Power,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Fault {
    DropSecondBounce,
}

/// Overrides applied on top of a scenario file.
#[derive(Debug, Clone, Default, Args)]
pub struct SimFlags {
    /// Patch edge length, m.
    #[arg(long)]
    pub dx: Option<f64>,
    /// Highest grid frequency, Hz.
    #[arg(long)]
    pub fmax: Option<f64>,
    /// Grid step, Hz.
    #[arg(long)]
    pub fstep: Option<f64>,
    #[arg(long, value_enum)]
    pub db_convention: Option<DbArg>,
    #[arg(long, value_enum)]
    pub tail: Option<Switch>,
    /// Number of explicit diffuse bounces.
    #[arg(long)]
    pub bounces: Option<usize>,
}

impl SimFlags {
    pub fn apply(&self, s: &mut ScenarioFile) {
        if let Some(dx) = self.dx {
            s.simulation.dx = dx;
        }
        if self.fmax.is_some() || self.fstep.is_some() {
            let f = &mut s.simulation.frequency;
            f.list_hz = None;
            f.f_min_hz = Some(f.f_min_hz.unwrap_or(0.0));
            f.f_max_hz = Some(self.fmax.or(f.f_max_hz).unwrap_or(250e6));
            f.step_hz = Some(self.fstep.or(f.step_hz).unwrap_or(1e6));
        }
        if let Some(d) = self.db_convention {
            s.metrics.db_convention = d.into();
        }
        if let Some(t) = self.tail {
            s.simulation.tail = t == Switch::On;
        }
        if let Some(b) = self.bounces {
            s.simulation.bounces = b;
        }
    }
}

/// Loads a scenario and applies command-line overrides.
pub fn load_scenario(path: &std::path::Path, flags: &SimFlags) -> Result<ScenarioFile> {
    let mut s = ScenarioFile::load(path)?;
    flags.apply(&mut s);
    Ok(s)
}

/// Scenario options with the memory budget taken from the environment.
pub fn options(s: &ScenarioFile) -> Result<SimOptions> {
    let mut o = s.options();
    if let Ok(v) = std::env::var(MEMORY_BUDGET_ENV) {
        let bytes: u128 = v
            .trim()
            .parse()
            .with_context(|| format!("{MEMORY_BUDGET_ENV}={v:?} is not a byte count"))?;
        if bytes == 0 {
            bail!("{MEMORY_BUDGET_ENV} must be positive");
        }
        o.diffuse.memory_budget_bytes = bytes;
    }
    Ok(o)
}

/// Index of the detector called `id`, or the first one.
pub fn detector_index(s: &ScenarioFile, id: Option<&str>) -> Result<usize> {
    match id {
        Some(id) => s
            .detectors
            .iter()
            .position(|d| d.id == id)
            .with_context(|| format!("no detector with id `{id}`")),
        None if s.detectors.is_empty() => bail!("scenario has no detectors"),
        None => Ok(0),
    }
}
