use std::path::Path;

use anyhow::Result;

use lifisim::assembler::{dc_heatmap, HeatmapSpec};

use crate::args::{self, PowerUnits, SimFlags};
use crate::output::{self, num};

pub fn run(
    scenario: &Path,
    step: Option<f64>,
    height: Option<f64>,
    detector: Option<&str>,
    units: PowerUnits,
    out: &Path,
) -> Result<()> {
    let s = args::load_scenario(scenario, &SimFlags::default())?;
    let template = s.detector(&s.detectors[args::detector_index(&s, detector)?])?;
    let scene = s.scene()?;
    let step = step.unwrap_or(s.metrics.heatmap_step_m);
    let spec = HeatmapSpec {
        x_step: step,
        y_step: step,
        height: height.unwrap_or(s.metrics.heatmap_height_m),
        template,
    };
    let map = dc_heatmap(&scene, &spec)?;
    let unit = match units {
        PowerUnits::Watts => "W",
        PowerUnits::Db => "dBW (10log10 of watts)",
    };
    let preamble = vec![
        format!("# lifisim {}", output::VERSION),
        format!(
            "# received DC optical power, {unit}; probe `{}` facing up",
            spec.template.id
        ),
        format!(
            "# height_m: {}; rows y_m, columns x_m (cell centers)",
            map.height
        ),
    ];
    if let Some(dir) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        output::ensure_dir(dir)?;
    }
    let mut w = output::csv_with_preamble(out, &preamble)?;
    let mut header = vec!["y_m\\x_m".to_string()];
    header.extend(map.xs.iter().map(|x| format!("{x:.6}")));
    w.write_record(&header)?;
    for (y, row) in map.ys.iter().zip(&map.values) {
        let mut rec = vec![format!("{y:.6}")];
        rec.extend(row.iter().map(|&p| match units {
            PowerUnits::Watts => num(p),
            PowerUnits::Db => num(10.0 * p.log10()),
        }));
        w.write_record(&rec)?;
    }
    w.flush()?;
    let (ix, iy) = map.argmax();
    eprintln!(
        "{} x {} grid, peak {} W at ({:.3}, {:.3}) m -> {}",
        map.xs.len(),
        map.ys.len(),
        num(map.values[iy][ix]),
        map.xs[ix],
        map.ys[iy],
        out.display()
    );
    Ok(())
}
