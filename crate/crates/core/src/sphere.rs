//! Integrating-sphere tail: every diffuse reflection from the third onward.
//!
//! The room is treated as a diffusely reflecting cavity whose stored power
//! decays exponentially, which gives a single-pole response
//!
//! ```text
//! H_tail(f) = eta / (1 + j 2 pi f tau)
//! eta       = rho_1 (A_rx / A_room) <rho>^2 / (1 - <rho>)
//! ```
//!
//! `eta` is the cavity gain `rho_1 (A_rx / A_room) / (1 - <rho>)` with the
//! first two reflection orders removed. The tail does not depend on the
//! orientation of either frontend.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::coupling::emitter_to_patch;
use crate::scene::{Emitter, Face, FrequencyGrid, PatchSet, Room};
use crate::{Error, Result, SPEED_OF_LIGHT};

fn check_unit_interval(name: &'static str, v: f64) -> Result<()> {
    if !(0.0..1.0).contains(&v) {
        return Err(Error::InvalidParameter {
            name,
            reason: format!("{v} outside [0, 1)"),
        });
    }
    Ok(())
}

fn check_inputs(rho1: f64, avg_rho: f64, rx_area: f64, room_area: f64) -> Result<()> {
    if avg_rho >= 1.0 {
        return Err(Error::DivergentCavity(avg_rho));
    }
    check_unit_interval("average_reflectivity", avg_rho)?;
    check_unit_interval("rho1", rho1)?;
    for (name, a) in [("rx_area", rx_area), ("room_area", room_area)] {
        if !(a > 0.0) {
            return Err(Error::InvalidParameter {
                name,
                reason: format!("area {a} must be positive"),
            });
        }
    }
    Ok(())
}

/// DC gain of reflections of order three and above.
pub fn tail_gain(rho1: f64, avg_rho: f64, rx_area: f64, room_area: f64) -> Result<f64> {
    check_inputs(rho1, avg_rho, rx_area, room_area)?;
    Ok(rho1 * (rx_area / room_area) * avg_rho * avg_rho / (1.0 - avg_rho))
}

/// [`tail_gain`] written as the full geometric series minus its first two
/// terms, `1 / (1 - <rho>) - 1 - <rho>`.
pub fn tail_gain_series_form(rho1: f64, avg_rho: f64, rx_area: f64, room_area: f64) -> Result<f64> {
    check_inputs(rho1, avg_rho, rx_area, room_area)?;
    Ok(rho1 * (rx_area / room_area) * (1.0 / (1.0 - avg_rho) - 1.0 - avg_rho))
}

/// Mean time between two reflections, `4 V / (c A_room)`.
///
/// This is the mean free path of a diffuse field in an enclosure divided by
/// `c`. Swap it here to change the decay model for every caller.
pub fn mean_reflection_interval(room: &Room) -> f64 {
    4.0 * room.volume() / (SPEED_OF_LIGHT * room.surface_area())
}

/// Exponential decay time `-<t> / ln <rho>`. Zero for a black room.
pub fn decay_time(room: &Room, avg_rho: f64) -> Result<f64> {
    if avg_rho >= 1.0 {
        return Err(Error::DivergentCavity(avg_rho));
    }
    check_unit_interval("average_reflectivity", avg_rho)?;
    if avg_rho == 0.0 {
        return Ok(0.0);
    }
    Ok(-mean_reflection_interval(room) / avg_rho.ln())
}

/// Reflectivity of the region first lit by `tx`: the face receiving the
/// largest direct DC flux, averaged over that face with flux weights (which
/// is just the face reflectivity unless patches override it).
pub fn first_reflectivity(patches: &PatchSet, tx: &Emitter) -> Result<f64> {
    let mut flux = [0.0f64; 6];
    let mut weighted = [0.0f64; 6];
    for p in patches.patches() {
        let g = emitter_to_patch(tx, p)?.gain;
        flux[p.face.index()] += g;
        weighted[p.face.index()] += g * p.reflectivity;
    }
    let best = Face::ALL
        .iter()
        .copied()
        .max_by(|a, b| {
            flux[a.index()]
                .total_cmp(&flux[b.index()])
                .then(b.index().cmp(&a.index()))
        })
        .expect("six faces");
    let f = flux[best.index()];
    if f == 0.0 {
        return Ok(0.0);
    }
    Ok(weighted[best.index()] / f)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereParams {
    /// Tail DC gain.
    pub eta: f64,
    /// Seconds.
    pub decay_time: f64,
    pub rho1: f64,
    pub avg_rho: f64,
    pub rx_area: f64,
    pub room_area: f64,
    /// Optional pure delay applied to the whole tail, seconds. Zero by default.
    pub onset_delay: f64,
}

impl SphereParams {
    pub fn new(room: &Room, rho1: f64, avg_rho: f64, rx_area: f64) -> Result<Self> {
        let room_area = room.surface_area();
        Ok(Self {
            eta: tail_gain(rho1, avg_rho, rx_area, room_area)?,
            decay_time: decay_time(room, avg_rho)?,
            rho1,
            avg_rho,
            rx_area,
            room_area,
            onset_delay: 0.0,
        })
    }

    pub fn at_frequency(&self, f: f64) -> Complex64 {
        let pole = Complex64::new(1.0, 2.0 * PI * f * self.decay_time);
        let h = Complex64::new(self.eta, 0.0) / pole;
        if self.onset_delay == 0.0 {
            h
        } else {
            h * Complex64::from_polar(1.0, -2.0 * PI * f * self.onset_delay)
        }
    }
}

pub fn tail_response(p: &SphereParams, grid: &FrequencyGrid) -> Vec<Complex64> {
    grid.samples().iter().map(|&f| p.at_frequency(f)).collect()
}
