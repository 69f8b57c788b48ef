//! Room geometry, optical frontends, and the surface-patch discretization.
//!
//! The room is the axis-aligned box `[0, length_x] x [0, width_y] x [0, height_z]`.
//! Every face is tiled by a uniform grid of rectangular patches; each patch
//! is represented by its center point, its inward normal, its area and its
//! reflectivity.

use std::f64::consts::{FRAC_PI_2, LN_2};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::geometry::{is_unit, Vec3};
use crate::{Error, Result, SPEED_OF_LIGHT};

/// The six faces of the room box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Face {
    Floor,
    Ceiling,
    /// Wall in the plane `x = 0`.
    WallX0,
    /// Wall in the plane `x = length_x`.
    WallX1,
    /// Wall in the plane `y = 0`.
    WallY0,
    /// Wall in the plane `y = width_y`.
    WallY1,
}

impl Face {
    pub const ALL: [Face; 6] = [
        Face::Floor,
        Face::Ceiling,
        Face::WallX0,
        Face::WallX1,
        Face::WallY0,
        Face::WallY1,
    ];

    pub fn index(self) -> usize {
        match self {
            Face::Floor => 0,
            Face::Ceiling => 1,
            Face::WallX0 => 2,
            Face::WallX1 => 3,
            Face::WallY0 => 4,
            Face::WallY1 => 5,
        }
    }
}

/// Per-face diffuse reflectivity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reflectivities {
    pub floor: f64,
    pub ceiling: f64,
    pub wall_x0: f64,
    pub wall_x1: f64,
    pub wall_y0: f64,
    pub wall_y1: f64,
}

impl Reflectivities {
    pub fn uniform(rho: f64) -> Self {
        Self {
            floor: rho,
            ceiling: rho,
            wall_x0: rho,
            wall_x1: rho,
            wall_y0: rho,
            wall_y1: rho,
        }
    }

    pub fn get(&self, face: Face) -> f64 {
        match face {
            Face::Floor => self.floor,
            Face::Ceiling => self.ceiling,
            Face::WallX0 => self.wall_x0,
            Face::WallX1 => self.wall_x1,
            Face::WallY0 => self.wall_y0,
            Face::WallY1 => self.wall_y1,
        }
    }

    pub fn set(&mut self, face: Face, rho: f64) {
        match face {
            Face::Floor => self.floor = rho,
            Face::Ceiling => self.ceiling = rho,
            Face::WallX0 => self.wall_x0 = rho,
            Face::WallX1 => self.wall_x1 = rho,
            Face::WallY0 => self.wall_y0 = rho,
            Face::WallY1 => self.wall_y1 = rho,
        }
    }
}

fn check_reflectivity(name: &'static str, rho: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::InvalidParameter {
            name,
            reason: format!("reflectivity {rho} outside [0, 1)"),
        });
    }
    Ok(())
}

/// An empty rectangular room.
#[derive(Debug, Clone, PartialEq)]
pub struct Room {
    length_x: f64,
    width_y: f64,
    height_z: f64,
    reflectivity: Reflectivities,
}

impl Room {
    pub fn new(
        length_x: f64,
        width_y: f64,
        height_z: f64,
        reflectivity: Reflectivities,
    ) -> Result<Self> {
        for (name, v) in [
            ("length_x", length_x),
            ("width_y", width_y),
            ("height_z", height_z),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("room dimension {v} must be positive"),
                });
            }
        }
        for face in Face::ALL {
            check_reflectivity("reflectivity", reflectivity.get(face))?;
        }
        Ok(Self {
            length_x,
            width_y,
            height_z,
            reflectivity,
        })
    }

    pub fn length_x(&self) -> f64 {
        self.length_x
    }

    pub fn width_y(&self) -> f64 {
        self.width_y
    }

    pub fn height_z(&self) -> f64 {
        self.height_z
    }

    pub fn reflectivity(&self) -> &Reflectivities {
        &self.reflectivity
    }

    /// Total enclosure area `2(xy + xz + yz)`.
    pub fn surface_area(&self) -> f64 {
        let (x, y, z) = (self.length_x, self.width_y, self.height_z);
        2.0 * (x * y + x * z + y * z)
    }

    pub fn volume(&self) -> f64 {
        self.length_x * self.width_y * self.height_z
    }

    pub fn center(&self) -> Vec3 {
        Vec3::new(self.length_x / 2.0, self.width_y / 2.0, self.height_z / 2.0)
    }

    pub fn min_dimension(&self) -> f64 {
        self.length_x.min(self.width_y).min(self.height_z)
    }

    /// True if `p` lies strictly inside the box.
    pub fn contains(&self, p: Vec3) -> bool {
        p.x > 0.0
            && p.x < self.length_x
            && p.y > 0.0
            && p.y < self.width_y
            && p.z > 0.0
            && p.z < self.height_z
    }

    /// Tiling frame of a face: origin, in-plane axes with their extents, and
    /// the inward normal.
    fn face_frame(&self, face: Face) -> FaceFrame {
        let (lx, wy, hz) = (self.length_x, self.width_y, self.height_z);
        let ex = Vec3::new(1.0, 0.0, 0.0);
        let ey = Vec3::new(0.0, 1.0, 0.0);
        let ez = Vec3::new(0.0, 0.0, 1.0);
        let o = Vec3::default();
        match face {
            Face::Floor => FaceFrame::new(o, ex, lx, ey, wy, ez),
            Face::Ceiling => FaceFrame::new(ez * hz, ex, lx, ey, wy, -ez),
            Face::WallX0 => FaceFrame::new(o, ey, wy, ez, hz, ex),
            Face::WallX1 => FaceFrame::new(ex * lx, ey, wy, ez, hz, -ex),
            Face::WallY0 => FaceFrame::new(o, ex, lx, ez, hz, ey),
            Face::WallY1 => FaceFrame::new(ey * wy, ex, lx, ez, hz, -ey),
        }
    }
}

struct FaceFrame {
    origin: Vec3,
    u_axis: Vec3,
    u_len: f64,
    v_axis: Vec3,
    v_len: f64,
    normal: Vec3,
}

impl FaceFrame {
    fn new(origin: Vec3, u_axis: Vec3, u_len: f64, v_axis: Vec3, v_len: f64, normal: Vec3) -> Self {
        Self {
            origin,
            u_axis,
            u_len,
            v_axis,
            v_len,
            normal,
        }
    }
}

/// Lambertian order for a half-power semi-angle: `m = -ln 2 / ln cos(phi_half)`.
pub fn lambertian_order_from_half_power(half_power_angle: f64) -> Result<f64> {
    if !(half_power_angle > 0.0 && half_power_angle < FRAC_PI_2) {
        return Err(Error::InvalidParameter {
            name: "half_power_angle",
            reason: format!("{half_power_angle} rad outside (0, pi/2)"),
        });
    }
    Ok(-LN_2 / half_power_angle.cos().ln())
}

/// A Lambertian LED frontend. Responses are computed per unit optical power;
/// `optical_power` only scales the power heat map.
#[derive(Debug, Clone, PartialEq)]
pub struct Emitter {
    pub id: String,
    pub position: Vec3,
    pub orientation: Vec3,
    pub lambertian_order: f64,
    pub optical_power: f64,
}

impl Emitter {
    pub fn new(
        id: impl Into<String>,
        position: Vec3,
        orientation: Vec3,
        lambertian_order: f64,
    ) -> Result<Self> {
        if !is_unit(orientation) {
            return Err(Error::InvalidParameter {
                name: "orientation",
                reason: format!("emitter orientation {orientation:?} is not a unit vector"),
            });
        }
        if !(lambertian_order >= 1.0 && lambertian_order.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "lambertian_order",
                reason: format!("{lambertian_order} < 1"),
            });
        }
        Ok(Self {
            id: id.into(),
            position,
            orientation,
            lambertian_order,
            optical_power: 1.0,
        })
    }

    pub fn with_power(mut self, watts: f64) -> Result<Self> {
        if !(watts >= 0.0 && watts.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "optical_power",
                reason: format!("{watts} W"),
            });
        }
        self.optical_power = watts;
        Ok(self)
    }
}

/// A photodiode frontend with a hard field-of-view cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct Detector {
    pub id: String,
    pub position: Vec3,
    pub orientation: Vec3,
    /// Active area, m^2.
    pub area: f64,
    /// Half-angle field of view, radians.
    pub fov: f64,
}

impl Detector {
    pub fn new(
        id: impl Into<String>,
        position: Vec3,
        orientation: Vec3,
        area: f64,
        fov: f64,
    ) -> Result<Self> {
        if !is_unit(orientation) {
            return Err(Error::InvalidParameter {
                name: "orientation",
                reason: format!("detector orientation {orientation:?} is not a unit vector"),
            });
        }
        if !(area > 0.0 && area.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "area",
                reason: format!("detector area {area} must be positive"),
            });
        }
        if !(fov > 0.0 && fov <= FRAC_PI_2) {
            return Err(Error::InvalidParameter {
                name: "fov",
                reason: format!("{fov} rad outside (0, pi/2]"),
            });
        }
        Ok(Self {
            id: id.into(),
            position,
            orientation,
            area,
            fov,
        })
    }

    /// Same frontend moved to a new pose.
    pub fn placed(&self, position: Vec3, orientation: Vec3) -> Result<Self> {
        Detector::new(self.id.clone(), position, orientation, self.area, self.fov)
    }
}

/// One surface element of the enclosure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Patch {
    pub center: Vec3,
    /// Unit normal pointing into the room.
    pub normal: Vec3,
    pub area: f64,
    pub reflectivity: f64,
    pub face: Face,
}

/// Replaces the reflectivity of every patch of `face` whose center falls in
/// the face-local rectangle `[u_min, u_max] x [v_min, v_max]`.
///
/// Face-local axes: floor and ceiling use (x, y); the `x` walls use (y, z);
/// the `y` walls use (x, z).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReflectivityOverride {
    pub face: Face,
    pub u_range: [f64; 2],
    pub v_range: [f64; 2],
    pub reflectivity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatchSet {
    patches: Vec<Patch>,
    resolution: f64,
    /// Grid shape (u count, v count) per face, indexed by [`Face::index`].
    face_grid: [(usize, usize); 6],
}

impl PatchSet {
    pub fn patches(&self) -> &[Patch] {
        &self.patches
    }

    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn face_grid(&self, face: Face) -> (usize, usize) {
        self.face_grid[face.index()]
    }

    pub fn total_area(&self) -> f64 {
        self.patches.iter().map(|p| p.area).sum()
    }
}

/// Number of tiles along an edge: `ceil(len / dx)`, tolerant to the rounding
/// of exact multiples such as `0.3 / 0.1`.
fn tile_count(len: f64, dx: f64) -> usize {
    let q = len / dx;
    let n = q.round();
    if (q - n).abs() <= 1e-9 * q.max(1.0) {
        (n as usize).max(1)
    } else {
        q.ceil() as usize
    }
}

/// Tiles every face of `room` with patches no larger than `dx` on either edge.
pub fn discretize(room: &Room, dx: f64) -> Result<PatchSet> {
    discretize_with_overrides(room, dx, &[])
}

/// Number of patches [`discretize`] would produce, without building them.
pub fn patch_count(room: &Room, dx: f64) -> Result<usize> {
    let max = room.min_dimension();
    if !(dx > 0.0 && dx <= max) {
        return Err(Error::InvalidResolution { dx, max });
    }
    Ok(Face::ALL
        .iter()
        .map(|&f| {
            let frame = room.face_frame(f);
            tile_count(frame.u_len, dx) * tile_count(frame.v_len, dx)
        })
        .sum())
}

pub fn discretize_with_overrides(
    room: &Room,
    dx: f64,
    overrides: &[ReflectivityOverride],
) -> Result<PatchSet> {
    let max = room.min_dimension();
    if !(dx > 0.0 && dx <= max) {
        return Err(Error::InvalidResolution { dx, max });
    }
    for o in overrides {
        check_reflectivity("reflectivity_override", o.reflectivity)?;
    }
    let mut patches = Vec::new();
    let mut face_grid = [(0, 0); 6];
    for face in Face::ALL {
        let frame = room.face_frame(face);
        let nu = tile_count(frame.u_len, dx);
        let nv = tile_count(frame.v_len, dx);
        face_grid[face.index()] = (nu, nv);
        let du = frame.u_len / nu as f64;
        let dv = frame.v_len / nv as f64;
        let base_rho = room.reflectivity.get(face);
        for j in 0..nv {
            let v = (j as f64 + 0.5) * dv;
            for i in 0..nu {
                let u = (i as f64 + 0.5) * du;
                let rho = overrides
                    .iter()
                    .rev()
                    .find(|o| {
                        o.face == face
                            && (o.u_range[0]..=o.u_range[1]).contains(&u)
                            && (o.v_range[0]..=o.v_range[1]).contains(&v)
                    })
                    .map_or(base_rho, |o| o.reflectivity);
                patches.push(Patch {
                    center: frame.origin + frame.u_axis * u + frame.v_axis * v,
                    normal: frame.normal,
                    area: du * dv,
                    reflectivity: rho,
                    face,
                });
            }
        }
    }
    Ok(PatchSet {
        patches,
        resolution: dx,
        face_grid,
    })
}

/// Impulse-response time resolution matching a patch size: `dx / c`.
pub fn effective_time_resolution(dx: f64) -> Result<f64> {
    if !(dx > 0.0) {
        return Err(Error::InvalidResolution {
            dx,
            max: f64::INFINITY,
        });
    }
    Ok(dx / SPEED_OF_LIGHT)
}

/// Area-weighted mean reflectivity of the enclosure.
pub fn average_reflectivity(patches: &PatchSet) -> Result<f64> {
    if patches.is_empty() {
        return Err(Error::EmptyPatchSet);
    }
    let (weighted, area) = patches.patches.iter().fold((0.0, 0.0), |(w, a), p| {
        (w + p.reflectivity * p.area, a + p.area)
    });
    Ok(weighted / area)
}

/// Strictly increasing list of non-negative sample frequencies, Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    samples: Vec<f64>,
    /// Set when the grid was generated as `f_min + n * step`.
    step: Option<f64>,
}

impl FrequencyGrid {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidParameter {
                name: "frequency_grid",
                reason: "no samples".into(),
            });
        }
        if samples.iter().any(|f| !(f.is_finite() && *f >= 0.0)) {
            return Err(Error::InvalidParameter {
                name: "frequency_grid",
                reason: "frequencies must be finite and non-negative".into(),
            });
        }
        if samples.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter {
                name: "frequency_grid",
                reason: "frequencies must be strictly increasing".into(),
            });
        }
        Ok(Self {
            samples,
            step: None,
        })
    }

    /// `f_min, f_min + step, ...` up to and including `f_max` (within 1e-9 steps).
    pub fn uniform(f_min: f64, f_max: f64, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) || !(f_min >= 0.0) || !(f_max >= f_min) {
            return Err(Error::InvalidParameter {
                name: "frequency_grid",
                reason: format!("bad uniform grid f_min={f_min} f_max={f_max} step={step}"),
            });
        }
        let count = ((f_max - f_min) / step + 1e-9).floor() as usize + 1;
        let samples = (0..count).map(|n| f_min + n as f64 * step).collect();
        Ok(Self {
            samples,
            step: Some(step),
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Step of a uniformly generated grid.
    pub fn uniform_step(&self) -> Option<f64> {
        self.step
    }

    pub fn nearest_index(&self, f: f64) -> usize {
        match self.samples.binary_search_by(|s| s.total_cmp(&f)) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) if i == self.samples.len() => i - 1,
            Err(i) => {
                if f - self.samples[i - 1] <= self.samples[i] - f {
                    i - 1
                } else {
                    i
                }
            }
        }
    }
}

impl Default for FrequencyGrid {
    /// DC to 250 MHz in 1 MHz steps.
    fn default() -> Self {
        Self::uniform(0.0, 250e6, 1e6).expect("valid default grid")
    }
}

static NEXT_SCENE_ID: AtomicU64 = AtomicU64::new(1);

/// A discretized room with its frontends. Immutable once built.
#[derive(Debug, Clone)]
pub struct Scene {
    id: u64,
    room: Room,
    patches: Arc<PatchSet>,
    overrides: Vec<ReflectivityOverride>,
    pub emitters: Vec<Emitter>,
    pub detectors: Vec<Detector>,
}

impl Scene {
    pub fn new(
        room: Room,
        dx: f64,
        emitters: Vec<Emitter>,
        detectors: Vec<Detector>,
    ) -> Result<Self> {
        Self::with_overrides(room, dx, &[], emitters, detectors)
    }

    pub fn with_overrides(
        room: Room,
        dx: f64,
        overrides: &[ReflectivityOverride],
        emitters: Vec<Emitter>,
        detectors: Vec<Detector>,
    ) -> Result<Self> {
        for e in &emitters {
            if !room.contains(e.position) {
                return Err(Error::OutsideRoom {
                    what: format!("emitter `{}`", e.id),
                    position: e.position.to_array(),
                });
            }
        }
        for d in &detectors {
            if !room.contains(d.position) {
                return Err(Error::OutsideRoom {
                    what: format!("detector `{}`", d.id),
                    position: d.position.to_array(),
                });
            }
        }
        let patches = discretize_with_overrides(&room, dx, overrides)?;
        Ok(Self {
            id: NEXT_SCENE_ID.fetch_add(1, Ordering::Relaxed),
            room,
            patches: Arc::new(patches),
            overrides: overrides.to_vec(),
            emitters,
            detectors,
        })
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn room(&self) -> &Room {
        &self.room
    }

    pub fn patches(&self) -> &PatchSet {
        &self.patches
    }

    pub fn overrides(&self) -> &[ReflectivityOverride] {
        &self.overrides
    }

    pub(crate) fn patches_arc(&self) -> &Arc<PatchSet> {
        &self.patches
    }

    pub fn resolution(&self) -> f64 {
        self.patches.resolution
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_cube(rho: Reflectivities) -> Room {
        Room::new(1.0, 1.0, 1.0, rho).unwrap()
    }

    fn conference_room() -> Room {
        Room::new(5.8, 4.5, 3.1, Reflectivities::uniform(0.7)).unwrap()
    }

    #[test]
    fn conference_room_tiling_area() {
        let set = discretize(&conference_room(), 0.25).unwrap();
        let expected = 2.0 * (5.8 * 4.5 + 5.8 * 3.1 + 4.5 * 3.1);
        assert!((expected - 116.06_f64).abs() < 1e-12);
        assert!((set.total_area() - expected).abs() / expected < 1e-6);
    }

    #[test]
    fn conference_room_patch_count() {
        let set = discretize(&conference_room(), 0.25).unwrap();
        // 24x18 floor and ceiling, 18x13 x-walls, 24x13 y-walls
        assert_eq!(set.face_grid(Face::Floor), (24, 18));
        assert_eq!(set.face_grid(Face::WallX0), (18, 13));
        assert_eq!(set.face_grid(Face::WallY1), (24, 13));
        assert_eq!(set.len(), 1956);
        assert_eq!(patch_count(&conference_room(), 0.25).unwrap(), 1956);
        assert!(set.patches().iter().all(|p| p.area <= 0.25 * 0.25 + 1e-15));
    }

    #[test]
    fn unit_cube_tilings() {
        let room = unit_cube(Reflectivities::uniform(0.5));
        let one = discretize(&room, 1.0).unwrap();
        assert_eq!(one.len(), 6);
        assert!(one.patches().iter().all(|p| p.area == 1.0));
        let half = discretize(&room, 0.5).unwrap();
        assert_eq!(half.len(), 24);
        assert!(half.patches().iter().all(|p| p.area == 0.25));
    }

    #[test]
    fn exact_multiples_do_not_gain_a_row() {
        let room = Room::new(0.3, 0.6, 0.7, Reflectivities::uniform(0.5)).unwrap();
        let set = discretize(&room, 0.1).unwrap();
        assert_eq!(set.face_grid(Face::Floor), (3, 6));
        assert_eq!(set.face_grid(Face::WallX0), (6, 7));
    }

    #[test]
    fn invalid_resolution() {
        let room = conference_room();
        assert!(matches!(
            discretize(&room, 0.0),
            Err(Error::InvalidResolution { .. })
        ));
        assert!(matches!(
            discretize(&room, -1.0),
            Err(Error::InvalidResolution { .. })
        ));
        assert!(matches!(
            discretize(&room, 3.2),
            Err(Error::InvalidResolution { .. })
        ));
        assert!(discretize(&room, 3.1).is_ok());
    }

    #[test]
    fn normals_point_inward() {
        let room = conference_room();
        let set = discretize(&room, 0.5).unwrap();
        let c = room.center();
        for p in set.patches() {
            assert!(p.normal.dot(c - p.center) > 0.0);
            assert!(is_unit(p.normal));
        }
    }

    #[test]
    fn refinement_quadruples_counts() {
        let room = Room::new(2.0, 1.5, 1.0, Reflectivities::uniform(0.5)).unwrap();
        let coarse = discretize(&room, 0.5).unwrap();
        let fine = discretize(&room, 0.25).unwrap();
        for face in Face::ALL {
            let (a, b) = coarse.face_grid(face);
            let (c, d) = fine.face_grid(face);
            assert_eq!(c * d, 4 * a * b);
        }
        assert_eq!(fine.len(), 4 * coarse.len());
    }

    #[test]
    fn time_resolution() {
        assert!((effective_time_resolution(0.299792458).unwrap() - 1e-9).abs() < 1e-24);
        let dt = effective_time_resolution(0.25).unwrap();
        assert!((dt - 0.8339e-9).abs() < 1e-13);
        assert!(effective_time_resolution(0.0).is_err());
    }

    #[test]
    fn average_reflectivity_cases() {
        let set = discretize(&unit_cube(Reflectivities::uniform(0.7)), 0.5).unwrap();
        assert!((average_reflectivity(&set).unwrap() - 0.7).abs() < 1e-15);

        let mut rho = Reflectivities::uniform(0.8);
        rho.floor = 0.2;
        let set = discretize(&unit_cube(rho), 0.25).unwrap();
        assert!((average_reflectivity(&set).unwrap() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn average_reflectivity_matches_face_weighting() {
        let rho = Reflectivities {
            floor: 0.3,
            ceiling: 0.8,
            wall_x0: 0.6,
            wall_x1: 0.65,
            wall_y0: 0.7,
            wall_y1: 0.5,
        };
        let room = Room::new(5.8, 4.5, 3.1, rho).unwrap();
        let set = discretize(&room, 0.25).unwrap();
        let (xy, xz, yz) = (5.8 * 4.5, 5.8 * 3.1, 4.5 * 3.1);
        let hand = (xy * (0.3 + 0.8) + yz * (0.6 + 0.65) + xz * (0.7 + 0.5)) / room.surface_area();
        assert!((average_reflectivity(&set).unwrap() - hand).abs() < 1e-12);
    }

    #[test]
    fn empty_patch_set_is_an_error() {
        let set = PatchSet {
            patches: vec![],
            resolution: 1.0,
            face_grid: [(0, 0); 6],
        };
        assert!(matches!(
            average_reflectivity(&set),
            Err(Error::EmptyPatchSet)
        ));
    }

    #[test]
    fn overrides_apply_by_patch_center() {
        let room = unit_cube(Reflectivities::uniform(0.5));
        let ov = ReflectivityOverride {
            face: Face::Floor,
            u_range: [0.0, 0.5],
            v_range: [0.0, 1.0],
            reflectivity: 0.1,
        };
        let set = discretize_with_overrides(&room, 0.5, &[ov]).unwrap();
        let floor: Vec<f64> = set
            .patches()
            .iter()
            .filter(|p| p.face == Face::Floor)
            .map(|p| p.reflectivity)
            .collect();
        assert_eq!(floor, vec![0.1, 0.5, 0.1, 0.5]);
    }

    #[test]
    fn device_validation() {
        let up = Vec3::new(0.0, 0.0, 1.0);
        assert!(Emitter::new("tx", Vec3::default(), Vec3::new(0.0, 0.0, 2.0), 1.0).is_err());
        assert!(Emitter::new("tx", Vec3::default(), up, 0.5).is_err());
        assert!(Detector::new("rx", Vec3::default(), up, 0.0, 1.0).is_err());
        assert!(Detector::new("rx", Vec3::default(), up, 1e-4, 0.0).is_err());
        assert!(Detector::new("rx", Vec3::default(), up, 1e-4, FRAC_PI_2).is_ok());

        let room = unit_cube(Reflectivities::uniform(0.5));
        let outside = Emitter::new("tx", Vec3::new(0.5, 0.5, 1.0), up, 1.0).unwrap();
        assert!(matches!(
            Scene::new(room, 0.5, vec![outside], vec![]),
            Err(Error::OutsideRoom { .. })
        ));
    }

    #[test]
    fn half_power_angle_conversion() {
        let m = lambertian_order_from_half_power(60f64.to_radians()).unwrap();
        assert!((m - 1.0).abs() < 1e-12);
        assert!(lambertian_order_from_half_power(0.0).is_err());
    }

    #[test]
    fn frequency_grid() {
        let g = FrequencyGrid::default();
        assert_eq!(g.len(), 251);
        assert_eq!(g.samples()[0], 0.0);
        assert_eq!(g.samples()[250], 250e6);
        assert_eq!(g.nearest_index(5e6), 5);
        assert_eq!(g.nearest_index(5.4e6), 5);
        assert_eq!(g.nearest_index(1e12), 250);
        assert!(FrequencyGrid::new(vec![0.0, 1.0, 1.0]).is_err());
        assert!(FrequencyGrid::new(vec![-1.0, 1.0]).is_err());
    }
}
