//! TOML scenario files and CSV pose lists.
//!
//! A scenario has four tables:
//!
//! ```toml
//! [room]
//! length_x = 5.8            # m
//! width_y = 4.5             # m
//! height_z = 3.1            # m
//! [room.reflectivity]
//! floor = 0.3
//! ceiling = 0.8
//! wall_x0 = 0.7             # plane x = 0
//! wall_x1 = 0.7             # plane x = length_x
//! wall_y0 = 0.7             # plane y = 0
//! wall_y1 = 0.7             # plane y = width_y
//! # optional, repeatable; face-local axes are documented on ReflectivityOverride
//! [[room.reflectivity_overrides]]
//! face = "floor"
//! u_range = [0.0, 1.0]
//! v_range = [0.0, 1.0]
//! reflectivity = 0.1
//!
//! [[emitters]]
//! id = "Tx1"
//! position = [1.9, 1.25, 2.85]
//! orientation = [0.0, 0.0, -1.0]   # normalized on load
//! lambertian_order = 1.0           # or: half_power_angle_deg = 60.0
//! power_w = 1.0                    # optional, default 1
//!
//! [[detectors]]
//! id = "Rx1"
//! position = [3.9, 2.25, 1.0]
//! orientation = [0.0, 0.0, 1.0]
//! area_m2 = 1e-4
//! fov_deg = 85.0
//!
//! [simulation]
//! dx = 0.25                        # patch edge, m
//! bounces = 2                      # optional
//! tail = true                      # optional
//! tail_onset_delay = false         # optional
//! rho1 = 0.3                       # optional first-reflection override
//! single_precision = false         # optional
//! [simulation.frequency]           # optional, default 0..250 MHz step 1 MHz
//! f_min_hz = 0.0
//! f_max_hz = 250e6
//! step_hz = 1e6
//! # or: list_hz = [0.0, 5e6, 10e6]
//!
//! [metrics]                        # optional
//! query_frequency_hz = 5e6
//! db_convention = "20log"          # or "10log"
//! db_offset = 0.0
//! mse_threshold_percent = 5.0
//! mse_mode = "complex"             # or "amplitude"
//! heatmap_step_m = 0.1
//! heatmap_height_m = 1.0
//! ```
//!
//! Unknown keys are rejected. Serializing a parsed file and parsing it again
//! yields the same value.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::assembler::{DbConvention, DbScale, MseMode, Pose, SimOptions, TailOptions};
use crate::diffuse::{DiffuseOptions, DEFAULT_MEMORY_BUDGET};
use crate::geometry::Vec3;
use crate::scene::{
    lambertian_order_from_half_power, Detector, Emitter, FrequencyGrid, Reflectivities,
    ReflectivityOverride, Room, Scene,
};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub room: RoomSpec,
    #[serde(default)]
    pub emitters: Vec<EmitterSpec>,
    #[serde(default)]
    pub detectors: Vec<DetectorSpec>,
    pub simulation: SimulationSpec,
    #[serde(default)]
    pub metrics: MetricsSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoomSpec {
    pub length_x: f64,
    pub width_y: f64,
    pub height_z: f64,
    pub reflectivity: Reflectivities,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reflectivity_overrides: Vec<ReflectivityOverride>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitterSpec {
    pub id: String,
    pub position: [f64; 3],
    pub orientation: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambertian_order: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_power_angle_deg: Option<f64>,
    #[serde(default = "one")]
    pub power_w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSpec {
    pub id: String,
    pub position: [f64; 3],
    pub orientation: [f64; 3],
    pub area_m2: f64,
    pub fov_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    pub dx: f64,
    #[serde(default)]
    pub frequency: FrequencySpec,
    #[serde(default = "two")]
    pub bounces: usize,
    #[serde(default = "yes")]
    pub tail: bool,
    #[serde(default)]
    pub tail_onset_delay: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho1: Option<f64>,
    #[serde(default)]
    pub single_precision: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencySpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_min_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_max_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub list_hz: Option<Vec<f64>>,
}

impl Default for FrequencySpec {
    fn default() -> Self {
        Self {
            f_min_hz: Some(0.0),
            f_max_hz: Some(250e6),
            step_hz: Some(1e6),
            list_hz: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsSpec {
    #[serde(default = "five_mhz")]
    pub query_frequency_hz: f64,
    #[serde(default)]
    pub db_convention: DbConvention,
    #[serde(default)]
    pub db_offset: f64,
    #[serde(default = "five")]
    pub mse_threshold_percent: f64,
    #[serde(default)]
    pub mse_mode: MseMode,
    #[serde(default = "tenth")]
    pub heatmap_step_m: f64,
    #[serde(default = "one")]
    pub heatmap_height_m: f64,
}

impl Default for MetricsSpec {
    fn default() -> Self {
        Self {
            query_frequency_hz: five_mhz(),
            db_convention: DbConvention::default(),
            db_offset: 0.0,
            mse_threshold_percent: five(),
            mse_mode: MseMode::default(),
            heatmap_step_m: tenth(),
            heatmap_height_m: one(),
        }
    }
}

fn one() -> f64 {
    1.0
}
fn two() -> usize {
    2
}
fn five() -> f64 {
    5.0
}
fn tenth() -> f64 {
    0.1
}
fn five_mhz() -> f64 {
    5e6
}
fn yes() -> bool {
    true
}

fn unit(v: [f64; 3], what: &str) -> Result<Vec3> {
    let v = Vec3::from(v);
    let n = v.norm();
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::Scenario(format!(
            "{what}: orientation must be a nonzero vector"
        )));
    }
    Ok(v * (1.0 / n))
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Scenario(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Scenario(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Scenario(msg) => Error::Scenario(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Scenario(e.to_string()))
    }

    pub fn room(&self) -> Result<Room> {
        let r = &self.room;
        Room::new(r.length_x, r.width_y, r.height_z, r.reflectivity)
    }

    pub fn emitter(&self, spec: &EmitterSpec) -> Result<Emitter> {
        let what = format!("emitter `{}`", spec.id);
        let order = match (spec.lambertian_order, spec.half_power_angle_deg) {
            (Some(m), None) => m,
            (None, Some(deg)) => lambertian_order_from_half_power(deg.to_radians())?,
            _ => {
                return Err(Error::Scenario(format!(
                    "{what}: give exactly one of `lambertian_order` or `half_power_angle_deg`"
                )))
            }
        };
        Emitter::new(
            &spec.id,
            spec.position.into(),
            unit(spec.orientation, &what)?,
            order,
        )?
        .with_power(spec.power_w)
    }

    pub fn detector(&self, spec: &DetectorSpec) -> Result<Detector> {
        let what = format!("detector `{}`", spec.id);
        Detector::new(
            &spec.id,
            spec.position.into(),
            unit(spec.orientation, &what)?,
            spec.area_m2,
            spec.fov_deg.to_radians(),
        )
    }

    pub fn scene(&self) -> Result<Scene> {
        self.scene_with_dx(self.simulation.dx)
    }

    /// The scene discretized at `dx` instead of the file's resolution.
    pub fn scene_with_dx(&self, dx: f64) -> Result<Scene> {
        let emitters = self
            .emitters
            .iter()
            .map(|e| self.emitter(e))
            .collect::<Result<Vec<_>>>()?;
        let detectors = self
            .detectors
            .iter()
            .map(|d| self.detector(d))
            .collect::<Result<Vec<_>>>()?;
        Scene::with_overrides(
            self.room()?,
            dx,
            &self.room.reflectivity_overrides,
            emitters,
            detectors,
        )
    }

    pub fn grid(&self) -> Result<FrequencyGrid> {
        let f = &self.simulation.frequency;
        match (&f.list_hz, f.f_min_hz, f.f_max_hz, f.step_hz) {
            (Some(list), None, None, None) => FrequencyGrid::new(list.clone()),
            (None, Some(lo), Some(hi), Some(step)) => FrequencyGrid::uniform(lo, hi, step),
            _ => Err(Error::Scenario(
                "simulation.frequency: give either `list_hz` or all of `f_min_hz`, `f_max_hz`, `step_hz`".into(),
            )),
        }
    }

    pub fn options(&self) -> SimOptions {
        let s = &self.simulation;
        SimOptions {
            diffuse: DiffuseOptions {
                bounces: s.bounces,
                single_precision: s.single_precision,
                memory_budget_bytes: DEFAULT_MEMORY_BUDGET,
            },
            tail: TailOptions {
                enabled: s.tail,
                onset_delay: s.tail_onset_delay,
                rho1_override: s.rho1,
            },
        }
    }

    pub fn db_scale(&self) -> DbScale {
        DbScale {
            convention: self.metrics.db_convention,
            offset_db: self.metrics.db_offset,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoseRow {
    x: f64,
    y: f64,
    z: f64,
    ox: f64,
    oy: f64,
    oz: f64,
}

/// Reads receiver poses from CSV with header `x,y,z,ox,oy,oz` (meters,
/// orientation normalized on load). Lines starting with `#` are skipped.
pub fn read_poses(reader: impl Read) -> Result<Vec<Pose>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut poses = Vec::new();
    for (i, row) in rdr.deserialize::<PoseRow>().enumerate() {
        let row = row.map_err(|e| Error::Scenario(format!("poses: {e}")))?;
        poses.push(Pose {
            position: Vec3::new(row.x, row.y, row.z),
            orientation: unit([row.ox, row.oy, row.oz], &format!("pose {i}"))?,
        });
    }
    Ok(poses)
}

pub fn load_poses(path: impl AsRef<Path>) -> Result<Vec<Pose>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Scenario(format!("{}: {e}", path.display())))?;
    read_poses(file)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    const MINIMAL: &str = r#"
[room]
length_x = 4.0
width_y = 3.0
height_z = 2.5
[room.reflectivity]
floor = 0.2
ceiling = 0.8
wall_x0 = 0.6
wall_x1 = 0.6
wall_y0 = 0.6
wall_y1 = 0.6

[[emitters]]
id = "Tx1"
position = [2.0, 1.5, 2.4]
orientation = [0.0, 0.0, -2.0]
half_power_angle_deg = 60.0

[[detectors]]
id = "Rx1"
position = [1.0, 1.0, 0.8]
orientation = [0.0, 0.0, 1.0]
area_m2 = 1e-4
fov_deg = 70.0

[simulation]
dx = 0.5
"#;

    #[test]
    fn parses_minimal_file_with_defaults() {
        let sc = ScenarioFile::parse(MINIMAL).unwrap();
        assert_eq!(sc.simulation.bounces, 2);
        assert!(sc.simulation.tail);
        assert_eq!(sc.metrics.query_frequency_hz, 5e6);
        let grid = sc.grid().unwrap();
        assert_eq!(grid.len(), 251);
        let scene = sc.scene().unwrap();
        assert_eq!(scene.emitters[0].orientation, Vec3::new(0.0, 0.0, -1.0));
        assert!((scene.emitters[0].lambertian_order - 1.0).abs() < 1e-12);
        assert!((scene.detectors[0].fov - 70f64.to_radians()).abs() < 1e-15);
        assert_eq!(scene.patches().len(), 8 * 6 * 2 + 8 * 5 * 2 + 6 * 5 * 2);
    }

    #[test]
    fn round_trip() {
        let sc = ScenarioFile::parse(MINIMAL).unwrap();
        let text = sc.to_toml_string().unwrap();
        assert_eq!(ScenarioFile::parse(&text).unwrap(), sc);
    }

    #[test]
    fn unknown_key_names_key_and_line() {
        let bad = MINIMAL.replace("dx = 0.5", "dx = 0.5\nbounce = 3");
        let err = ScenarioFile::parse(&bad).unwrap_err().to_string();
        assert!(err.contains("bounce"), "{err}");
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn emitter_pattern_must_be_unique() {
        let both = MINIMAL.replace(
            "half_power_angle_deg = 60.0",
            "half_power_angle_deg = 60.0\nlambertian_order = 2.0",
        );
        let sc = ScenarioFile::parse(&both).unwrap();
        assert!(matches!(sc.scene(), Err(Error::Scenario(_))));
    }

    #[test]
    fn explicit_frequency_list() {
        let text = MINIMAL.replace(
            "dx = 0.5",
            "dx = 0.5\n[simulation.frequency]\nlist_hz = [0.0, 5e6, 7e6]",
        );
        let sc = ScenarioFile::parse(&text).unwrap();
        let grid = sc.grid().unwrap();
        assert_eq!(grid.samples(), &[0.0, 5e6, 7e6]);
        assert_eq!(grid.uniform_step(), None);
    }

    #[test]
    fn poses_csv() {
        let csv = "# walk\nx,y,z,ox,oy,oz\n1.0,1.0,1.0,0,0,1\n2.0, 1.5, 1.0, 0, 0, 3\n";
        let poses = read_poses(csv.as_bytes()).unwrap();
        assert_eq!(poses.len(), 2);
        assert_eq!(poses[1].orientation, Vec3::new(0.0, 0.0, 1.0));
        assert!(read_poses("x,y\n1,2\n".as_bytes()).is_err());
    }

    fn reflectivity() -> impl Strategy<Value = f64> {
        0.0..0.99f64
    }

    proptest! {
        #[test]
        fn any_scenario_round_trips(
            dims in prop::array::uniform3(0.5..20.0f64),
            rho in prop::array::uniform6(reflectivity()),
            pos in prop::array::uniform3(0.01..0.99f64),
            order in prop::option::of(1.0..20.0f64),
            fov in 1.0..90.0f64,
            dx in 0.05..1.0f64,
            bounces in 1usize..5,
            rho1 in prop::option::of(reflectivity()),
        ) {
            let sc = ScenarioFile {
                room: RoomSpec {
                    length_x: dims[0],
                    width_y: dims[1],
                    height_z: dims[2],
                    reflectivity: Reflectivities {
                        floor: rho[0], ceiling: rho[1], wall_x0: rho[2],
                        wall_x1: rho[3], wall_y0: rho[4], wall_y1: rho[5],
                    },
                    reflectivity_overrides: vec![],
                },
                emitters: vec![EmitterSpec {
                    id: "tx".into(),
                    position: [pos[0] * dims[0], pos[1] * dims[1], pos[2] * dims[2]],
                    orientation: [0.0, 0.0, -1.0],
                    lambertian_order: order,
                    half_power_angle_deg: if order.is_none() { Some(45.0) } else { None },
                    power_w: 1.0,
                }],
                detectors: vec![DetectorSpec {
                    id: "rx".into(),
                    position: [pos[1] * dims[0], pos[2] * dims[1], pos[0] * dims[2]],
                    orientation: [0.0, 0.0, 1.0],
                    area_m2: 1e-4,
                    fov_deg: fov,
                }],
                simulation: SimulationSpec {
                    dx,
                    frequency: FrequencySpec::default(),
                    bounces,
                    tail: true,
                    tail_onset_delay: false,
                    rho1,
                    single_precision: false,
                },
                metrics: MetricsSpec::default(),
            };
            let text = sc.to_toml_string().unwrap();
            prop_assert_eq!(ScenarioFile::parse(&text).unwrap(), sc);
        }
    }
}
