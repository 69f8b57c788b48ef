use std::path::Path;

use anyhow::Result;

use lifisim::assembler::mobility_sweep;
use lifisim::scenario::load_poses;

use crate::args::{self, SimFlags};
use crate::output::{self, num};

pub fn run(
    scenario: &Path,
    poses_path: &Path,
    query_freq: Option<f64>,
    detector: Option<&str>,
    out: &Path,
    flags: &SimFlags,
) -> Result<()> {
    let s = args::load_scenario(scenario, flags)?;
    let opts = args::options(&s)?;
    let rx = args::detector_index(&s, detector)?;
    let scene = s.scene()?;
    let grid = s.grid()?;
    let poses = load_poses(poses_path)?;
    let scale = s.db_scale();
    let f = query_freq.unwrap_or(s.metrics.query_frequency_hz);
    let f_used = grid.samples()[grid.nearest_index(f)];
    output::ensure_dir(out)?;

    let trace = mobility_sweep(&scene, rx, &poses, &grid, opts)?;
    let preamble = vec![
        format!("# lifisim {}", output::VERSION),
        format!("# detector: {}", trace.detector.id),
        format!(
            "# units: x, y, z, distance_m m; gain_db_at_query {}",
            output::db_label(&scale)
        ),
        format!("# query_hz: {f_used} (requested {f})"),
        format!(
            "# dx_m: {}, patches: {}",
            s.simulation.dx,
            scene.patches().len()
        ),
    ];
    let mut w = output::csv_with_preamble(&out.join("sweep.csv"), &preamble)?;
    w.write_record([
        "pose_idx",
        "x",
        "y",
        "z",
        "tx_id",
        "distance_m",
        "gain_db_at_query",
    ])?;
    for r in trace.gain_table(f_used, scale) {
        w.write_record([
            r.pose_index.to_string(),
            r.position.x.to_string(),
            r.position.y.to_string(),
            r.position.z.to_string(),
            r.emitter_id,
            num(r.distance),
            num(r.gain_db),
        ])?;
    }
    w.flush()?;

    let mut meta = output::run_metadata(scenario, &s, scene.patches().len(), &grid);
    meta.push(("poses", poses.len().to_string()));
    meta.push(("query_hz", f_used.to_string()));
    meta.push(("setup_seconds", format!("{:.3}", trace.setup_seconds)));
    meta.push((
        "mean_pose_seconds",
        format!("{:.6}", trace.warm_pose_seconds()),
    ));
    output::write_metadata(out, &meta)?;
    eprintln!(
        "{} poses x {} emitters: model setup {:.2} s, then {:.2} ms per pose (model reused)",
        poses.len(),
        scene.emitters.len(),
        trace.setup_seconds,
        trace.warm_pose_seconds() * 1e3
    );
    Ok(())
}
