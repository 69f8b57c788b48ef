use std::path::Path;

use anyhow::Result;

use lifisim::assembler::benchmark_mobility;
use lifisim::scenario::load_poses;

use crate::args::{self, SimFlags};
use crate::Failed;

pub fn run(
    scenario: &Path,
    poses_path: &Path,
    detector: Option<&str>,
    cold_runs: Option<usize>,
    max_ratio: f64,
    flags: &SimFlags,
) -> Result<()> {
    let s = args::load_scenario(scenario, flags)?;
    let opts = args::options(&s)?;
    let rx = args::detector_index(&s, detector)?;
    let scene = s.scene()?;
    let grid = s.grid()?;
    let poses = load_poses(poses_path)?;
    let cold = cold_runs.unwrap_or(poses.len()).max(1);
    let b = benchmark_mobility(&scene, rx, &poses, cold, &grid, opts)?;
    let ratio = b.warm_to_cold_ratio();
    let identical = b.bit_identical();
    println!("key,value");
    println!("patches,{}", scene.patches().len());
    println!("frequencies,{}", grid.len());
    println!("poses,{}", poses.len());
    println!("cold_runs,{}", b.cold_rows.len());
    println!("setup_seconds,{:.6}", b.trace.setup_seconds);
    println!("warm_pose_seconds,{:.6}", b.trace.warm_pose_seconds());
    println!("cold_run_seconds,{:.6}", b.mean_cold_seconds());
    println!("warm_to_cold_ratio,{ratio:.6}");
    println!("bit_identical,{identical}");
    if !identical {
        return Err(Failed("sweep output differs from cold runs".into()).into());
    }
    if ratio > max_ratio {
        return Err(Failed(format!("warm-to-cold ratio {ratio:.4} exceeds {max_ratio}")).into());
    }
    Ok(())
}
