//! Line-of-sight coupling between a Lambertian source and a cosine-weighted
//! sink.
//!
//! Every elementary link in the model (emitter to detector, emitter to patch,
//! patch to patch, patch to detector) is a DC gain plus a propagation delay.
//! The frequency response of a link is `L * exp(-j 2 pi f tau)`, flat in
//! magnitude.
//!
//! The gain is the generalized Lambertian point-to-area form
//!
//! ```text
//! L = (m + 1) / (2 pi) * cos^m(phi) * cos(theta) * A_sink / d^2
//! ```
//!
//! with `phi` the emission angle off the source axis and `theta` the
//! incidence angle off the sink normal. This closed form is the usual one
//! from the optical wireless literature. Patches re-emit with order `m = 1`
//! and accept over the full hemisphere; detectors add a hard FOV cutoff.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::geometry::Vec3;
use crate::scene::{Detector, Emitter, Patch};
use crate::{Error, Result, SPEED_OF_LIGHT};

/// DC gain and delay of one line-of-sight link.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Coupling {
    pub gain: f64,
    /// Seconds.
    pub delay: f64,
}

impl Coupling {
    pub fn at_frequency(&self, f: f64) -> Complex64 {
        at_frequency(*self, f)
    }
}

/// `L * exp(-j 2 pi f tau)`.
pub fn at_frequency(c: Coupling, f: f64) -> Complex64 {
    if f == 0.0 {
        return Complex64::new(c.gain, 0.0);
    }
    Complex64::from_polar(c.gain, -2.0 * PI * f * c.delay)
}

struct Endpoint {
    position: Vec3,
    direction: Vec3,
}

fn lambertian(
    src: Endpoint,
    order: f64,
    sink: Endpoint,
    sink_area: f64,
    fov: Option<f64>,
) -> Option<Coupling> {
    let sep = sink.position - src.position;
    let d2 = sep.norm_squared();
    if d2 == 0.0 {
        return None;
    }
    let d = d2.sqrt();
    let delay = d / SPEED_OF_LIGHT;
    let cos_emit = src.direction.dot(sep) / d;
    let cos_incident = -sink.direction.dot(sep) / d;
    if cos_emit <= 0.0 || cos_incident <= 0.0 {
        return Some(Coupling { gain: 0.0, delay });
    }
    if let Some(fov) = fov {
        if cos_incident.min(1.0).acos() > fov {
            return Some(Coupling { gain: 0.0, delay });
        }
    }
    let radiance = if order == 1.0 {
        cos_emit / PI
    } else {
        (order + 1.0) / (2.0 * PI) * cos_emit.powf(order)
    };
    Some(Coupling {
        gain: radiance * cos_incident * sink_area / d2,
        delay,
    })
}

fn coincident(what: &str, p: Vec3) -> Error {
    Error::DegenerateGeometry(format!("{what} coincide at {:?}", p.to_array()))
}

pub fn emitter_to_detector(tx: &Emitter, rx: &Detector) -> Result<Coupling> {
    lambertian(
        Endpoint {
            position: tx.position,
            direction: tx.orientation,
        },
        tx.lambertian_order,
        Endpoint {
            position: rx.position,
            direction: rx.orientation,
        },
        rx.area,
        Some(rx.fov),
    )
    .ok_or_else(|| coincident("emitter and detector", tx.position))
}

pub fn emitter_to_patch(tx: &Emitter, patch: &Patch) -> Result<Coupling> {
    lambertian(
        Endpoint {
            position: tx.position,
            direction: tx.orientation,
        },
        tx.lambertian_order,
        Endpoint {
            position: patch.center,
            direction: patch.normal,
        },
        patch.area,
        None,
    )
    .ok_or_else(|| coincident("emitter and patch", tx.position))
}

/// Coupling from patch `src` into patch `dst`. The two must be distinct
/// patches; the diagonal of the intrinsic operator is zero by definition.
pub fn patch_to_patch(src: &Patch, dst: &Patch) -> Coupling {
    lambertian(
        Endpoint {
            position: src.center,
            direction: src.normal,
        },
        1.0,
        Endpoint {
            position: dst.center,
            direction: dst.normal,
        },
        dst.area,
        None,
    )
    .expect("distinct patches have distinct centers")
}

pub fn patch_to_detector(patch: &Patch, rx: &Detector) -> Result<Coupling> {
    lambertian(
        Endpoint {
            position: patch.center,
            direction: patch.normal,
        },
        1.0,
        Endpoint {
            position: rx.position,
            direction: rx.orientation,
        },
        rx.area,
        Some(rx.fov),
    )
    .ok_or_else(|| coincident("patch and detector", patch.center))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_2;

    use super::*;
    use crate::scene::Face;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    fn facing_pair(d: f64) -> (Emitter, Detector) {
        let tx =
            Emitter::new("tx", Vec3::new(0.0, 0.0, d), Vec3::new(0.0, 0.0, -1.0), 1.0).unwrap();
        let rx = Detector::new(
            "rx",
            Vec3::default(),
            Vec3::new(0.0, 0.0, 1.0),
            1e-4,
            FRAC_PI_2,
        )
        .unwrap();
        (tx, rx)
    }

    fn patch(center: Vec3, normal: Vec3, area: f64) -> Patch {
        Patch {
            center,
            normal,
            area,
            reflectivity: 0.5,
            face: Face::Floor,
        }
    }

    #[test]
    fn coaxial_los() {
        let (tx, rx) = facing_pair(1.0);
        let c = emitter_to_detector(&tx, &rx).unwrap();
        assert!(rel(c.gain, 1e-4 / PI) < 1e-15);
        assert!((c.gain - 3.1831e-5).abs() < 1e-9);
        assert!((c.delay - 3.3356e-9).abs() < 1e-13);

        let (tx, rx) = facing_pair(2.0);
        let far = emitter_to_detector(&tx, &rx).unwrap();
        assert!(rel(far.gain, c.gain / 4.0) < 1e-15);
        assert!((far.gain - 7.9577e-6).abs() < 1e-10);
    }

    #[test]
    fn fov_cutoff() {
        let fov = 30f64.to_radians();
        let rx = Detector::new("rx", Vec3::default(), Vec3::new(0.0, 0.0, 1.0), 1e-4, fov).unwrap();
        let place = |angle: f64| {
            let dir = Vec3::new(angle.sin(), 0.0, angle.cos());
            Emitter::new("tx", dir, -dir, 1.0).unwrap()
        };
        let inside = emitter_to_detector(&place(fov - 1e-9), &rx).unwrap();
        let outside = emitter_to_detector(&place(fov + 1e-9), &rx).unwrap();
        assert!(inside.gain > 0.0);
        assert_eq!(outside.gain, 0.0);
        assert!(outside.delay > 0.0);
    }

    #[test]
    fn coincident_devices_error() {
        let (mut tx, rx) = facing_pair(1.0);
        tx.position = rx.position;
        assert!(matches!(
            emitter_to_detector(&tx, &rx),
            Err(Error::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn parallel_facing_patches() {
        let a = patch(Vec3::default(), Vec3::new(0.0, 0.0, 1.0), 0.04);
        let b = patch(Vec3::new(0.0, 0.0, 1.0), Vec3::new(0.0, 0.0, -1.0), 0.01);
        let c = patch_to_patch(&a, &b);
        assert!(rel(c.gain, 0.01 / PI) < 1e-15);
        assert!((c.gain - 3.1831e-3).abs() < 1e-7);
    }

    #[test]
    fn coplanar_patches_do_not_couple() {
        let a = patch(Vec3::default(), Vec3::new(0.0, 0.0, 1.0), 0.01);
        let b = patch(Vec3::new(0.3, 0.2, 0.0), Vec3::new(0.0, 0.0, 1.0), 0.01);
        assert_eq!(patch_to_patch(&a, &b).gain, 0.0);
    }

    #[test]
    fn reciprocity() {
        let a = patch(Vec3::new(0.1, 0.2, 0.0), Vec3::new(0.0, 0.0, 1.0), 0.03);
        let b = patch(Vec3::new(0.0, 0.7, 0.9), Vec3::new(0.0, -1.0, 0.0), 0.07);
        let ab = patch_to_patch(&a, &b);
        let ba = patch_to_patch(&b, &a);
        assert!(ab.gain > 0.0);
        assert!(rel(ab.gain / b.area, ba.gain / a.area) < 1e-12);
        assert_eq!(ab.delay, ba.delay);
    }

    #[test]
    fn emitter_to_floor_patch() {
        let tx = Emitter::new(
            "tx",
            Vec3::new(1.0, 1.0, 1.85),
            Vec3::new(0.0, 0.0, -1.0),
            1.0,
        )
        .unwrap();
        let below = patch(Vec3::new(1.0, 1.0, 0.0), Vec3::new(0.0, 0.0, 1.0), 0.0625);
        let c = emitter_to_patch(&tx, &below).unwrap();
        // (m + 1) / 2pi with m = 1, both cosines 1
        let hand = 0.0625 / (PI * 1.85 * 1.85);
        assert!(rel(c.gain, hand) < 1e-15);
        assert!((c.gain - 5.813e-3).abs() < 1e-6);

        let behind = patch(Vec3::new(1.0, 1.0, 3.0), Vec3::new(0.0, 0.0, -1.0), 0.0625);
        assert_eq!(emitter_to_patch(&tx, &behind).unwrap().gain, 0.0);

        let ceiling_tx = Emitter::new(
            "tx",
            Vec3::new(1.0, 1.0, 3.0),
            Vec3::new(0.0, 0.0, -1.0),
            1.0,
        )
        .unwrap();
        let ceiling = patch(Vec3::new(2.0, 1.0, 3.0), Vec3::new(0.0, 0.0, -1.0), 0.0625);
        assert_eq!(emitter_to_patch(&ceiling_tx, &ceiling).unwrap().gain, 0.0);
    }

    #[test]
    fn higher_order_emitter() {
        let tx = Emitter::new("tx", Vec3::default(), Vec3::new(0.0, 0.0, 1.0), 3.0).unwrap();
        let sink = patch(Vec3::new(1.0, 0.0, 1.0), Vec3::new(0.0, 0.0, -1.0), 0.01);
        let c = emitter_to_patch(&tx, &sink).unwrap();
        let cos = 1.0 / 2f64.sqrt();
        let hand = 4.0 / (2.0 * PI) * cos.powi(3) * cos * 0.01 / 2.0;
        assert!(rel(c.gain, hand) < 1e-14);
    }

    #[test]
    fn patch_to_detector_cases() {
        let up = Vec3::new(0.0, 0.0, 1.0);
        let rx = Detector::new("rx", Vec3::new(0.0, 0.0, 1.0), up, 1e-4, 0.5).unwrap();
        let ceiling = patch(Vec3::new(0.0, 0.0, 3.0), -up, 0.0625);
        let c = patch_to_detector(&ceiling, &rx).unwrap();
        assert!(rel(c.gain, 1e-4 / (PI * 4.0)) < 1e-15);

        let floor = patch(Vec3::new(0.0, 0.0, 0.0), up, 0.0625);
        assert_eq!(patch_to_detector(&floor, &rx).unwrap().gain, 0.0);

        // 45 degrees off axis, beyond a 0.5 rad FOV
        let oblique = patch(Vec3::new(2.0, 0.0, 3.0), -up, 0.0625);
        assert_eq!(patch_to_detector(&oblique, &rx).unwrap().gain, 0.0);
    }

    #[test]
    fn phasor() {
        let c = Coupling {
            gain: 3.1831e-5,
            delay: 3.3356e-9,
        };
        assert_eq!(at_frequency(c, 0.0), Complex64::new(c.gain, 0.0));
        let h = at_frequency(c, 100e6);
        assert!((h.arg() + 2.0958).abs() < 1e-4);
        assert!(rel(h.norm(), c.gain) < 1e-15);
    }
}
