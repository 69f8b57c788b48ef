use std::path::Path;
use std::time::Instant;

use anyhow::Result;

use lifisim::assembler::{ChannelModel, Component, DbScale, TransferFunction};

use crate::args::{self, SimFlags};
use crate::output::{self, num};

pub fn link_file_name(rx: &str, tx: &str) -> String {
    format!("link_{rx}__{tx}.csv")
}

pub fn write_link(
    dir: &Path,
    tx: &str,
    rx: &str,
    tf: &TransferFunction,
    scale: &DbScale,
    extra: &[String],
) -> Result<()> {
    let mut preamble = vec![
        format!("# lifisim {}", output::VERSION),
        format!("# link: {tx} -> {rx}"),
        format!(
            "# units: freq_hz Hz; re, im linear channel gain (W/W); mag_db {}",
            output::db_label(scale)
        ),
        output::grid_line(tf.grid()),
    ];
    preamble.extend_from_slice(extra);
    let mut w = output::csv_with_preamble(&dir.join(link_file_name(rx, tx)), &preamble)?;
    w.write_record(["freq_hz", "re", "im", "mag_db", "component"])?;
    for c in [
        Component::Los,
        Component::Diffuse,
        Component::Tail,
        Component::Total,
    ] {
        for (f, h) in tf.grid().samples().iter().zip(tf.component(c)) {
            w.write_record([
                f.to_string(),
                num(h.re),
                num(h.im),
                num(scale.to_db(h.norm())),
                c.label().to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn run(scenario: &Path, out: &Path, flags: &SimFlags) -> Result<()> {
    let s = args::load_scenario(scenario, flags)?;
    let opts = args::options(&s)?;
    let scene = s.scene()?;
    let grid = s.grid()?;
    let scale = s.db_scale();
    output::ensure_dir(out)?;

    let start = Instant::now();
    let model = ChannelModel::new(&scene, &grid, opts)?;
    let setup = start.elapsed().as_secs_f64();
    let matrix = model.matrix()?;
    let total = start.elapsed().as_secs_f64();

    let n = scene.patches().len();
    let extra = [format!(
        "# dx_m: {}, patches: {n}, dt_s: {}",
        s.simulation.dx,
        num(s.simulation.dx / lifisim::SPEED_OF_LIGHT)
    )];
    for (r, rx) in matrix.detectors.iter().enumerate() {
        for (t, tx) in matrix.emitters.iter().enumerate() {
            write_link(out, &tx.id, &rx.id, matrix.get(r, t), &scale, &extra)?;
        }
    }
    let mut meta = output::run_metadata(scenario, &s, n, &grid);
    meta.push(("emitters", matrix.emitters.len().to_string()));
    meta.push(("detectors", matrix.detectors.len().to_string()));
    meta.push(("average_reflectivity", num(model.average_reflectivity())));
    meta.push(("setup_seconds", format!("{setup:.3}")));
    meta.push(("wall_seconds", format!("{total:.3}")));
    output::write_metadata(out, &meta)?;
    eprintln!(
        "{} links, N = {n}, {} frequencies, {total:.2} s -> {}",
        matrix.emitters.len() * matrix.detectors.len(),
        grid.len(),
        out.display()
    );
    Ok(())
}
