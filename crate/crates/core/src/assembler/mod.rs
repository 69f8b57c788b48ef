//! Per-link transfer functions, MIMO channel matrices and mobility sweeps.
//!
//! A [`ChannelModel`] holds everything that is independent of the receiver
//! pose: the intrinsic operator, one source field per emitter and the
//! per-emitter tail reflectivity. Evaluating a pose then only costs the
//! line-of-sight couplings and one receive vector.

mod metrics;

use std::time::Instant;

use num_complex::Complex64;

use crate::coupling::emitter_to_detector;
use crate::diffuse::{self, DiffuseOptions, IntrinsicOperator, SourceField};
use crate::geometry::Vec3;
use crate::scene::{average_reflectivity, Detector, Emitter, FrequencyGrid, Scene};
use crate::sphere::{self, mean_reflection_interval, SphereParams};
use crate::{Error, Result};

pub use metrics::{
    dc_heatmap, gain_db, impulse_response, mse_passes, relative_mse, DbConvention, DbScale,
    Heatmap, HeatmapSpec, ImpulseResponse, MseMode, Spectrum, Window,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailOptions {
    pub enabled: bool,
    /// Delay the tail by two mean reflection intervals.
    pub onset_delay: bool,
    /// Fixed first-reflection reflectivity instead of the brightest-face rule.
    pub rho1_override: Option<f64>,
}

impl Default for TailOptions {
    fn default() -> Self {
        Self {
            enabled: true,
            onset_delay: false,
            rho1_override: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SimOptions {
    pub diffuse: DiffuseOptions,
    pub tail: TailOptions,
}

/// Which part of a link response a sample series belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    Los,
    Diffuse,
    Tail,
    Total,
}

impl Component {
    pub const ALL: [Component; 4] = [
        Component::Los,
        Component::Diffuse,
        Component::Tail,
        Component::Total,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Component::Los => "los",
            Component::Diffuse => "diff2",
            Component::Tail => "tail",
            Component::Total => "total",
        }
    }
}

/// Complex response of one link with its three components kept apart.
/// `total[n] == los[n] + diffuse[n] + tail[n]` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunction {
    grid: FrequencyGrid,
    los: Vec<Complex64>,
    diffuse: Vec<Complex64>,
    tail: Vec<Complex64>,
    total: Vec<Complex64>,
}

impl TransferFunction {
    pub fn from_components(
        grid: FrequencyGrid,
        los: Vec<Complex64>,
        diffuse: Vec<Complex64>,
        tail: Vec<Complex64>,
    ) -> Result<Self> {
        let n = grid.len();
        if los.len() != n || diffuse.len() != n || tail.len() != n {
            return Err(Error::GridMismatch(
                "component length differs from grid".into(),
            ));
        }
        let total = (0..n).map(|i| los[i] + diffuse[i] + tail[i]).collect();
        Ok(Self {
            grid,
            los,
            diffuse,
            tail,
            total,
        })
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn los(&self) -> &[Complex64] {
        &self.los
    }

    pub fn diffuse(&self) -> &[Complex64] {
        &self.diffuse
    }

    pub fn tail(&self) -> &[Complex64] {
        &self.tail
    }

    pub fn total(&self) -> &[Complex64] {
        &self.total
    }

    pub fn component(&self, c: Component) -> &[Complex64] {
        match c {
            Component::Los => &self.los,
            Component::Diffuse => &self.diffuse,
            Component::Tail => &self.tail,
            Component::Total => &self.total,
        }
    }

    pub fn spectrum(&self) -> Spectrum {
        Spectrum::new(self.grid.samples().to_vec(), self.total.clone())
            .expect("lengths match by construction")
    }
}

/// Pose-independent state for one scene and frequency grid.
#[derive(Debug)]
pub struct ChannelModel<'s> {
    scene: &'s Scene,
    grid: FrequencyGrid,
    options: SimOptions,
    operator: IntrinsicOperator,
    fields: Vec<SourceField>,
    rho1: Vec<f64>,
    avg_rho: f64,
}

impl<'s> ChannelModel<'s> {
    pub fn new(scene: &'s Scene, grid: &FrequencyGrid, options: SimOptions) -> Result<Self> {
        let operator = diffuse::build_intrinsic(scene, &options.diffuse)?;
        let fields = scene
            .emitters
            .iter()
            .map(|tx| diffuse::source_field(scene, &operator, tx, grid, options.diffuse.bounces))
            .collect::<Result<Vec<_>>>()?;
        let rho1 = scene
            .emitters
            .iter()
            .map(|tx| match options.tail.rho1_override {
                Some(r) => Ok(r),
                None => sphere::first_reflectivity(scene.patches(), tx),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            scene,
            grid: grid.clone(),
            options,
            operator,
            fields,
            rho1,
            avg_rho: average_reflectivity(scene.patches())?,
        })
    }

    pub fn scene(&self) -> &Scene {
        self.scene
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn operator(&self) -> &IntrinsicOperator {
        &self.operator
    }

    pub fn source_fields(&self) -> &[SourceField] {
        &self.fields
    }

    pub fn average_reflectivity(&self) -> f64 {
        self.avg_rho
    }

    pub fn sphere_params(&self, emitter: usize, rx: &Detector) -> Result<SphereParams> {
        let room = self.scene.room();
        let mut p = SphereParams::new(room, self.rho1[emitter], self.avg_rho, rx.area)?;
        if self.options.tail.onset_delay {
            p.onset_delay = 2.0 * mean_reflection_interval(room);
        }
        Ok(p)
    }

    fn assemble(
        &self,
        emitter: usize,
        rx: &Detector,
        diffuse: Vec<Complex64>,
    ) -> Result<TransferFunction> {
        let tx = &self.scene.emitters[emitter];
        let los = emitter_to_detector(tx, rx)?;
        let los = self
            .grid
            .samples()
            .iter()
            .map(|&f| los.at_frequency(f))
            .collect();
        let tail = if self.options.tail.enabled {
            sphere::tail_response(&self.sphere_params(emitter, rx)?, &self.grid)
        } else {
            vec![Complex64::default(); self.grid.len()]
        };
        TransferFunction::from_components(self.grid.clone(), los, diffuse, tail)
    }

    /// Response from emitter `emitter` of the scene to `rx` at any pose.
    pub fn link(&self, emitter: usize, rx: &Detector) -> Result<TransferFunction> {
        let receive = diffuse::receive_vector(self.scene, rx, &self.grid)?;
        self.assemble(emitter, rx, receive.respond(&self.fields[emitter])?)
    }

    /// Responses from every emitter to `rx`, sharing one receive vector.
    pub fn row(&self, rx: &Detector) -> Result<Vec<TransferFunction>> {
        let receive = diffuse::receive_vector(self.scene, rx, &self.grid)?;
        (0..self.fields.len())
            .map(|e| self.assemble(e, rx, receive.respond(&self.fields[e])?))
            .collect()
    }
}

/// Response of a single link. `tx` need not be one of the scene's emitters.
pub fn link_response(
    scene: &Scene,
    tx: &Emitter,
    rx: &Detector,
    grid: &FrequencyGrid,
    options: SimOptions,
) -> Result<TransferFunction> {
    let mut single = scene.clone();
    single.emitters = vec![tx.clone()];
    single.detectors.clear();
    let model = ChannelModel::new(&single, grid, options)?;
    model.link(0, rx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    pub id: String,
    pub position: Vec3,
    pub orientation: Vec3,
}

/// `entries[r][t]` is the response from emitter `t` to detector `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    pub emitters: Vec<Placement>,
    pub detectors: Vec<Placement>,
    pub entries: Vec<Vec<TransferFunction>>,
}

impl ChannelMatrix {
    pub fn get(&self, detector: usize, emitter: usize) -> &TransferFunction {
        &self.entries[detector][emitter]
    }
}

fn emitter_placement(e: &Emitter) -> Placement {
    Placement {
        id: e.id.clone(),
        position: e.position,
        orientation: e.orientation,
    }
}

fn detector_placement(d: &Detector) -> Placement {
    Placement {
        id: d.id.clone(),
        position: d.position,
        orientation: d.orientation,
    }
}

pub fn mimo_matrix(
    scene: &Scene,
    grid: &FrequencyGrid,
    options: SimOptions,
) -> Result<ChannelMatrix> {
    let model = ChannelModel::new(scene, grid, options)?;
    model.matrix()
}

impl ChannelModel<'_> {
    pub fn matrix(&self) -> Result<ChannelMatrix> {
        let entries = self
            .scene
            .detectors
            .iter()
            .map(|rx| self.row(rx))
            .collect::<Result<Vec<_>>>()?;
        Ok(ChannelMatrix {
            emitters: self.scene.emitters.iter().map(emitter_placement).collect(),
            detectors: self
                .scene
                .detectors
                .iter()
                .map(detector_placement)
                .collect(),
            entries,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vec3,
    pub orientation: Vec3,
}

/// One row of channel responses per receiver pose.
#[derive(Debug, Clone)]
pub struct MobilityTrace {
    pub scene_id: u64,
    pub detector: Detector,
    pub emitters: Vec<Placement>,
    pub poses: Vec<Pose>,
    /// `rows[p][t]`: emitter `t` to the detector at pose `p`.
    pub rows: Vec<Vec<TransferFunction>>,
    /// Time to build the pose-independent model, seconds.
    pub setup_seconds: f64,
    /// Evaluation time of each pose, seconds.
    pub pose_seconds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub pose_index: usize,
    pub position: Vec3,
    pub emitter_id: String,
    pub distance: f64,
    pub gain_db: f64,
}

impl MobilityTrace {
    /// Gain of every (pose, emitter) pair at the grid sample nearest `f`.
    pub fn gain_table(&self, f: f64, scale: DbScale) -> Vec<SweepRecord> {
        let mut out = Vec::with_capacity(self.rows.len() * self.emitters.len());
        for (p, (pose, row)) in self.poses.iter().zip(&self.rows).enumerate() {
            for (tx, tf) in self.emitters.iter().zip(row) {
                out.push(SweepRecord {
                    pose_index: p,
                    position: pose.position,
                    emitter_id: tx.id.clone(),
                    distance: (tx.position - pose.position).norm(),
                    gain_db: gain_db(tf.total(), tf.grid(), f, scale),
                });
            }
        }
        out
    }

    /// Mean evaluation time of poses after the first.
    pub fn warm_pose_seconds(&self) -> f64 {
        let warm = &self.pose_seconds[1.min(self.pose_seconds.len())..];
        if warm.is_empty() {
            return 0.0;
        }
        warm.iter().sum::<f64>() / warm.len() as f64
    }
}

pub(crate) fn check_poses(scene: &Scene, poses: &[Pose]) -> Result<()> {
    for (index, pose) in poses.iter().enumerate() {
        if !scene.room().contains(pose.position) {
            return Err(Error::PoseOutsideRoom {
                index,
                position: pose.position.to_array(),
            });
        }
    }
    Ok(())
}

/// Moves detector `detector` of the scene through `poses`, reusing the
/// operator, the source fields and the tail parameters for every pose.
pub fn mobility_sweep(
    scene: &Scene,
    detector: usize,
    poses: &[Pose],
    grid: &FrequencyGrid,
    options: SimOptions,
) -> Result<MobilityTrace> {
    let template = scene
        .detectors
        .get(detector)
        .ok_or_else(|| Error::InvalidParameter {
            name: "detector",
            reason: format!(
                "scene has {} detectors, index {detector}",
                scene.detectors.len()
            ),
        })?;
    check_poses(scene, poses)?;
    let start = Instant::now();
    let model = ChannelModel::new(scene, grid, options)?;
    let setup_seconds = start.elapsed().as_secs_f64();
    let mut rows = Vec::with_capacity(poses.len());
    let mut pose_seconds = Vec::with_capacity(poses.len());
    for pose in poses {
        let t = Instant::now();
        let rx = template.placed(pose.position, pose.orientation)?;
        rows.push(model.row(&rx)?);
        pose_seconds.push(t.elapsed().as_secs_f64());
    }
    Ok(MobilityTrace {
        scene_id: scene.id(),
        detector: template.clone(),
        emitters: scene.emitters.iter().map(emitter_placement).collect(),
        poses: poses.to_vec(),
        rows,
        setup_seconds,
        pose_seconds,
    })
}

/// Timings of a sweep against independent cold evaluations of every pose.
#[derive(Debug, Clone)]
pub struct MobilityBenchmark {
    pub trace: MobilityTrace,
    /// Rows from rebuilding the scene and the full MIMO matrix, for the
    /// first `cold_rows.len()` poses.
    pub cold_rows: Vec<Vec<TransferFunction>>,
    pub cold_seconds: Vec<f64>,
}

impl MobilityBenchmark {
    pub fn mean_cold_seconds(&self) -> f64 {
        self.cold_seconds.iter().sum::<f64>() / self.cold_seconds.len().max(1) as f64
    }

    /// Mean warm pose time over mean cold time.
    pub fn warm_to_cold_ratio(&self) -> f64 {
        self.trace.warm_pose_seconds() / self.mean_cold_seconds()
    }

    /// Whether the cold rows equal the matching sweep rows bit for bit.
    pub fn bit_identical(&self) -> bool {
        self.trace.rows[..self.cold_rows.len()] == self.cold_rows[..]
    }
}

/// Runs [`mobility_sweep`] over all poses and, for the first `cold_poses`
/// of them, a from-scratch [`mimo_matrix`] on a scene with the detector
/// moved there.
pub fn benchmark_mobility(
    scene: &Scene,
    detector: usize,
    poses: &[Pose],
    cold_poses: usize,
    grid: &FrequencyGrid,
    options: SimOptions,
) -> Result<MobilityBenchmark> {
    let trace = mobility_sweep(scene, detector, poses, grid, options)?;
    let cold_poses = cold_poses.min(poses.len());
    let mut cold_rows = Vec::with_capacity(cold_poses);
    let mut cold_seconds = Vec::with_capacity(cold_poses);
    for pose in &poses[..cold_poses] {
        let t = Instant::now();
        let mut detectors = scene.detectors.clone();
        detectors[detector] = detectors[detector].placed(pose.position, pose.orientation)?;
        let cold = Scene::with_overrides(
            scene.room().clone(),
            scene.resolution(),
            scene.overrides(),
            scene.emitters.clone(),
            detectors,
        )?;
        let m = mimo_matrix(&cold, grid, options)?;
        cold_seconds.push(t.elapsed().as_secs_f64());
        cold_rows.push(m.entries.into_iter().nth(detector).expect("detector row"));
    }
    Ok(MobilityBenchmark {
        trace,
        cold_rows,
        cold_seconds,
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_2;

    use super::*;
    use crate::scene::{Reflectivities, Room};

    fn scene(rho: f64) -> Scene {
        let room = Room::new(3.0, 2.0, 2.5, Reflectivities::uniform(rho)).unwrap();
        let down = Vec3::new(0.0, 0.0, -1.0);
        let up = Vec3::new(0.0, 0.0, 1.0);
        let tx = vec![
            Emitter::new("tx1", Vec3::new(1.0, 1.0, 2.4), down, 1.0).unwrap(),
            Emitter::new("tx2", Vec3::new(2.0, 1.0, 2.4), down, 2.0).unwrap(),
        ];
        let rx = vec![Detector::new("rx1", Vec3::new(1.3, 0.8, 0.8), up, 1e-4, 1.2).unwrap()];
        Scene::new(room, 0.5, tx, rx).unwrap()
    }

    fn grid() -> FrequencyGrid {
        FrequencyGrid::uniform(0.0, 200e6, 20e6).unwrap()
    }

    #[test]
    fn components_add_exactly() {
        let s = scene(0.6);
        let tf = link_response(
            &s,
            &s.emitters[0],
            &s.detectors[0],
            &grid(),
            SimOptions::default(),
        )
        .unwrap();
        for n in 0..tf.grid().len() {
            assert_eq!(tf.total()[n], tf.los()[n] + tf.diffuse()[n] + tf.tail()[n]);
        }
        assert!(tf.total()[0].im == 0.0 && tf.total()[0].re > 0.0);
    }

    #[test]
    fn dark_room_is_pure_los() {
        let s = scene(0.0);
        let tf = link_response(
            &s,
            &s.emitters[0],
            &s.detectors[0],
            &grid(),
            SimOptions::default(),
        )
        .unwrap();
        assert_eq!(tf.total(), tf.los());
        assert!(tf.los()[0].re > 0.0);
    }

    #[test]
    fn blocked_los_leaves_reflections() {
        let s = scene(0.6);
        // narrow FOV pointing straight up, emitters are off axis
        let rx = Detector::new(
            "rx",
            Vec3::new(1.5, 1.5, 0.8),
            Vec3::new(0.0, 0.0, 1.0),
            1e-4,
            0.2,
        )
        .unwrap();
        let tf = link_response(&s, &s.emitters[0], &rx, &grid(), SimOptions::default()).unwrap();
        assert!(tf.los().iter().all(|v| *v == Complex64::default()));
        for n in 0..tf.grid().len() {
            assert_eq!(tf.total()[n], tf.diffuse()[n] + tf.tail()[n]);
        }
        assert!(tf.total()[0].re > 0.0);
    }

    #[test]
    fn tail_can_be_disabled() {
        let s = scene(0.6);
        let opts = SimOptions {
            tail: TailOptions {
                enabled: false,
                ..Default::default()
            },
            ..Default::default()
        };
        let tf = link_response(&s, &s.emitters[0], &s.detectors[0], &grid(), opts).unwrap();
        assert!(tf.tail().iter().all(|v| *v == Complex64::default()));
    }

    #[test]
    fn single_link_matrix_is_link_response() {
        let mut s = scene(0.6);
        s.emitters.truncate(1);
        let m = mimo_matrix(&s, &grid(), SimOptions::default()).unwrap();
        let tf = link_response(
            &s,
            &s.emitters[0],
            &s.detectors[0],
            &grid(),
            SimOptions::default(),
        )
        .unwrap();
        assert_eq!(m.entries.len(), 1);
        assert_eq!(m.get(0, 0), &tf);
    }

    #[test]
    fn sweep_matches_cold_runs() {
        let s = scene(0.6);
        let up = Vec3::new(0.0, 0.0, 1.0);
        let poses: Vec<Pose> = [0.5, 1.0, 1.7, 2.6]
            .iter()
            .map(|&x| Pose {
                position: Vec3::new(x, 1.2, 0.9),
                orientation: up,
            })
            .collect();
        let bench =
            benchmark_mobility(&s, 0, &poses, poses.len(), &grid(), SimOptions::default()).unwrap();
        assert!(bench.bit_identical());
        assert_eq!(bench.trace.rows.len(), 4);
        let table = bench.trace.gain_table(5e6, DbScale::default());
        assert_eq!(table.len(), 8);
    }

    #[test]
    fn single_pose_sweep_is_matrix_row() {
        let s = scene(0.6);
        let rx = &s.detectors[0];
        let pose = Pose {
            position: rx.position,
            orientation: rx.orientation,
        };
        let trace = mobility_sweep(&s, 0, &[pose], &grid(), SimOptions::default()).unwrap();
        let m = mimo_matrix(&s, &grid(), SimOptions::default()).unwrap();
        assert_eq!(trace.rows[0], m.entries[0]);
    }

    #[test]
    fn pose_outside_room_names_index() {
        let s = scene(0.6);
        let up = Vec3::new(0.0, 0.0, 1.0);
        let poses = vec![
            Pose {
                position: Vec3::new(1.0, 1.0, 1.0),
                orientation: up,
            },
            Pose {
                position: Vec3::new(4.0, 1.0, 1.0),
                orientation: up,
            },
        ];
        match mobility_sweep(&s, 0, &poses, &grid(), SimOptions::default()) {
            Err(Error::PoseOutsideRoom { index, .. }) => assert_eq!(index, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn receiver_facing_down_still_gets_tail() {
        let s = scene(0.6);
        let rx = Detector::new(
            "rx",
            Vec3::new(1.0, 1.0, 1.0),
            Vec3::new(0.0, 0.0, -1.0),
            1e-4,
            FRAC_PI_2,
        )
        .unwrap();
        let model = ChannelModel::new(&s, &grid(), SimOptions::default()).unwrap();
        let tf = model.link(0, &rx).unwrap();
        assert_eq!(tf.los()[0].re, 0.0);
        assert!(tf.tail()[0].re > 0.0);
        // tail is the same for any orientation with the same area
        let up = rx
            .placed(Vec3::new(2.0, 0.5, 0.3), Vec3::new(0.0, 0.0, 1.0))
            .unwrap();
        assert_eq!(model.link(0, &up).unwrap().tail(), tf.tail());
    }
}
