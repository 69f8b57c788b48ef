use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};

use lifisim::assembler::DbScale;
use lifisim::scenario::ScenarioFile;
use lifisim::scene::FrequencyGrid;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Fixed-width scientific notation so reruns and mirror-image links print
/// identical text.
pub fn num(v: f64) -> String {
    if v == 0.0 {
        // Avoid "-0e0".
        return "0.0000000000e0".into();
    }
    format!("{v:.10e}")
}

pub fn db_label(scale: &DbScale) -> String {
    let conv = match scale.convention {
        lifisim::assembler::DbConvention::Amplitude => "20log10",
        lifisim::assembler::DbConvention::Power => "10log10",
    };
    format!("{conv}|H| + {} dB", scale.offset_db)
}

pub fn grid_line(grid: &FrequencyGrid) -> String {
    let f = grid.samples();
    match grid.uniform_step() {
        Some(step) => format!(
            "# grid: {} samples, {} to {} Hz, step {} Hz",
            f.len(),
            f[0],
            f[f.len() - 1],
            step
        ),
        None => format!(
            "# grid: {} samples, {} to {} Hz, non-uniform",
            f.len(),
            f[0],
            f[f.len() - 1]
        ),
    }
}

/// Creates `path` and writes `#`-prefixed preamble lines, returning a CSV
/// writer positioned after them.
pub fn csv_with_preamble(path: &Path, preamble: &[String]) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    for line in preamble {
        writeln!(w, "{line}")?;
    }
    Ok(csv::Writer::from_writer(w))
}

/// `key,value` table describing a run.
pub fn write_metadata(dir: &Path, rows: &[(&str, String)]) -> Result<()> {
    let path = dir.join("metadata.csv");
    let mut w =
        csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(["key", "value"])?;
    for (k, v) in rows {
        w.write_record([*k, v.as_str()])?;
    }
    w.flush()?;
    Ok(())
}

/// Metadata rows shared by every command that runs the solver.
pub fn run_metadata(
    scenario: &Path,
    s: &ScenarioFile,
    patches: usize,
    grid: &FrequencyGrid,
) -> Vec<(&'static str, String)> {
    let f = grid.samples();
    vec![
        ("version", VERSION.to_string()),
        ("scenario", scenario.display().to_string()),
        ("dx_m", s.simulation.dx.to_string()),
        ("patches", patches.to_string()),
        ("dt_s", num(s.simulation.dx / lifisim::SPEED_OF_LIGHT)),
        ("frequencies", f.len().to_string()),
        ("f_min_hz", f[0].to_string()),
        ("f_max_hz", f[f.len() - 1].to_string()),
        (
            "f_step_hz",
            grid.uniform_step()
                .map_or("non-uniform".into(), |s| s.to_string()),
        ),
        ("bounces", s.simulation.bounces.to_string()),
        ("tail", s.simulation.tail.to_string()),
        (
            "tail_onset_delay",
            s.simulation.tail_onset_delay.to_string(),
        ),
        ("db_convention", db_label(&s.db_scale())),
    ]
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}
