use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use num_complex::Complex64;

use lifisim::assembler::{mse_passes, relative_mse, DbScale, MseMode, Spectrum};

use crate::Failed;

/// A response read from CSV. Amplitude-only files have zero phase and
/// `has_phase == false`.
#[derive(Debug, Clone)]
pub struct Response {
    pub freqs: Vec<f64>,
    pub values: Vec<Complex64>,
    pub has_phase: bool,
}

/// Reads `freq_hz` with either `re,im`, `amplitude` (linear) or `mag_db`.
/// Files with a `component` column contribute only rows of `component`.
pub fn read_response(path: &Path, component: &str, scale: &DbScale) -> Result<Response> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let Some(freq) = col("freq_hz") else {
        bail!("{}: no `freq_hz` column", path.display());
    };
    enum Kind {
        Complex(usize, usize),
        Amplitude(usize),
        Db(usize),
    }
    let kind = match (col("re"), col("im"), col("amplitude"), col("mag_db")) {
        (Some(re), Some(im), _, _) => Kind::Complex(re, im),
        (_, _, Some(a), _) => Kind::Amplitude(a),
        (_, _, _, Some(d)) => Kind::Db(d),
        _ => bail!(
            "{}: need `re` and `im`, `amplitude`, or `mag_db` columns",
            path.display()
        ),
    };
    let comp = col("component");
    let mut out = Response {
        freqs: Vec::new(),
        values: Vec::new(),
        has_phase: matches!(kind, Kind::Complex(..)),
    };
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.with_context(|| format!("{}: record {}", path.display(), line + 1))?;
        if let Some(c) = comp {
            if &rec[c] != component {
                continue;
            }
        }
        let field = |i: usize| -> Result<f64> {
            rec[i].parse::<f64>().with_context(|| {
                format!(
                    "{}: record {}: `{}` is not a number",
                    path.display(),
                    line + 1,
                    &rec[i]
                )
            })
        };
        out.freqs.push(field(freq)?);
        out.values.push(match kind {
            Kind::Complex(re, im) => Complex64::new(field(re)?, field(im)?),
            Kind::Amplitude(a) => Complex64::new(field(a)?, 0.0),
            Kind::Db(d) => Complex64::new(scale.from_db(field(d)?), 0.0),
        });
    }
    if out.freqs.is_empty() {
        bail!("{}: no `{component}` rows", path.display());
    }
    Ok(out)
}

/// Relative MSE of one measured/simulated pair and the mode actually used.
pub fn compare_pair(
    measured: &Response,
    simulated: &Response,
    mode: MseMode,
) -> Result<(f64, MseMode)> {
    let mode = if measured.has_phase && simulated.has_phase {
        mode
    } else {
        MseMode::Amplitude
    };
    let m = Spectrum::new(measured.freqs.clone(), measured.values.clone())?;
    let s = Spectrum::new(simulated.freqs.clone(), simulated.values.clone())?;
    Ok((relative_mse(&m, &s, mode)?, mode))
}

fn pairs(measured: &Path, simulated: &Path) -> Result<Vec<(String, PathBuf, PathBuf)>> {
    match (measured.is_dir(), simulated.is_dir()) {
        (false, false) => {
            let name = measured
                .file_stem()
                .map_or("link".into(), |s| s.to_string_lossy().into_owned());
            Ok(vec![(
                name,
                measured.to_path_buf(),
                simulated.to_path_buf(),
            )])
        }
        (true, true) => {
            let mut names: Vec<String> = std::fs::read_dir(measured)
                .with_context(|| format!("reading {}", measured.display()))?
                .filter_map(|e| e.ok())
                .map(|e| e.file_name().to_string_lossy().into_owned())
                .filter(|n| n.ends_with(".csv") && n != "metadata.csv")
                .collect();
            names.sort();
            if names.is_empty() {
                bail!("{}: no response files", measured.display());
            }
            names
                .into_iter()
                .map(|n| {
                    let sim = simulated.join(&n);
                    if !sim.is_file() {
                        bail!("{} has no counterpart in {}", n, simulated.display());
                    }
                    Ok((
                        n.trim_end_matches(".csv").to_string(),
                        measured.join(&n),
                        sim,
                    ))
                })
                .collect()
        }
        _ => bail!("compare needs two files or two directories"),
    }
}

pub fn run(
    measured: &Path,
    simulated: &Path,
    threshold: f64,
    mode: MseMode,
    component: &str,
    scale: &DbScale,
) -> Result<()> {
    let mut failed = Vec::new();
    println!("link,mse_percent,threshold_percent,mode,result");
    for (name, m, s) in pairs(measured, simulated)? {
        let (mse, used) = compare_pair(
            &read_response(&m, component, scale)?,
            &read_response(&s, component, scale)?,
            mode,
        )
        .with_context(|| format!("comparing {name}"))?;
        let pass = mse_passes(mse, threshold);
        let mode_label = match used {
            MseMode::Complex => "complex",
            MseMode::Amplitude => "amplitude",
        };
        println!(
            "{name},{mse:.6},{threshold},{mode_label},{}",
            if pass { "pass" } else { "fail" }
        );
        if !pass {
            failed.push(name);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failed(format!(
            "MSE at or above {threshold}% for {}",
            failed.join(", ")
        ))
        .into())
    }
}
