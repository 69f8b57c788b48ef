use std::path::Path;

use anyhow::{bail, Result};
use num_complex::Complex64;

use lifisim::diffuse::{
    brute_force_two_bounce, build_intrinsic, diffuse_response, source_field, DiffuseOptions,
};
use lifisim::scene::{patch_count, FrequencyGrid};

use crate::args::{self, Fault, SimFlags};
use crate::output::num;
use crate::Failed;

const MAX_FREQUENCIES: usize = 32;

/// `max |a - b| / max |b|`; zero when both vanish.
pub fn deviation(tested: &[Complex64], reference: &[Complex64]) -> f64 {
    let err = tested
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    let scale = reference.iter().map(|b| b.norm()).fold(0.0, f64::max);
    if err == 0.0 {
        0.0
    } else if scale == 0.0 {
        f64::INFINITY
    } else {
        err / scale
    }
}

/// Up to `MAX_FREQUENCIES` samples of `grid`, always keeping both ends.
fn thin(grid: &FrequencyGrid) -> Result<FrequencyGrid> {
    let f = grid.samples();
    if f.len() <= MAX_FREQUENCIES {
        return Ok(grid.clone());
    }
    let last = f.len() - 1;
    let picks = (0..MAX_FREQUENCIES)
        .map(|i| f[(i * last + (MAX_FREQUENCIES - 1) / 2) / (MAX_FREQUENCIES - 1)]);
    Ok(FrequencyGrid::new(picks.collect())?)
}

pub fn run(
    scenario: &Path,
    max_patches: usize,
    fault: Option<Fault>,
    tolerance: f64,
) -> Result<()> {
    let s = args::load_scenario(scenario, &SimFlags::default())?;
    let room = s.room()?;
    let mut dx = s.simulation.dx;
    while patch_count(&room, dx)? > max_patches {
        let next = dx * 1.05;
        if next > room.min_dimension() {
            bail!("cannot reach {max_patches} patches or fewer in this room");
        }
        dx = next;
    }
    let scene = s.scene_with_dx(dx)?;
    let grid = thin(&s.grid()?)?;
    let bounces = match fault {
        Some(Fault::DropSecondBounce) => 1,
        None => 2,
    };
    let opts = DiffuseOptions {
        bounces,
        ..args::options(&s)?.diffuse
    };
    let op = build_intrinsic(&scene, &opts)?;
    println!(
        "# reduced scene: dx_m {dx:.4}, patches {}, frequencies {}",
        scene.patches().len(),
        grid.len()
    );
    println!("link,max_rel_deviation,tolerance,result");
    let mut worst = 0.0f64;
    for tx in &scene.emitters {
        let field = source_field(&scene, &op, tx, &grid, bounces)?;
        for rx in &scene.detectors {
            let tested = diffuse_response(&scene, &field, rx)?;
            let reference = brute_force_two_bounce(&scene, tx, rx, &grid)?;
            let d = deviation(&tested, &reference);
            worst = worst.max(d);
            println!(
                "{} -> {},{},{tolerance:e},{}",
                tx.id,
                rx.id,
                num(d),
                if d <= tolerance { "pass" } else { "fail" }
            );
        }
    }
    if worst <= tolerance {
        Ok(())
    } else {
        Err(Failed(format!(
            "oracle deviation {} exceeds {tolerance:e}",
            num(worst)
        ))
        .into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deviation_edge_cases() {
        let z = [Complex64::default(); 3];
        let one = [Complex64::new(1.0, 0.0); 3];
        assert_eq!(deviation(&z, &z), 0.0);
        assert_eq!(deviation(&one, &z), f64::INFINITY);
        assert_eq!(deviation(&z, &one), 1.0);
    }

    #[test]
    fn thinning_keeps_both_ends() {
        let grid = FrequencyGrid::default();
        let t = thin(&grid).unwrap();
        assert_eq!(t.len(), MAX_FREQUENCIES);
        assert_eq!(t.samples()[0], 0.0);
        assert_eq!(t.samples()[MAX_FREQUENCIES - 1], 250e6);
        let small = FrequencyGrid::new(vec![0.0, 1e6]).unwrap();
        assert_eq!(thin(&small).unwrap(), small);
    }
}
