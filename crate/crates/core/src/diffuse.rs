//! First and second diffuse reflections, evaluated in the frequency domain.
//!
//! With `t(f)` the emitter-to-patch couplings, `r(f)` the patch-to-detector
//! couplings, `H(f)` the patch-to-patch (intrinsic) matrix and `G_rho` the
//! diagonal of patch reflectivities, the diffuse response truncated after
//! `B` bounces is
//!
//! ```text
//! H_diff(f) = r(f)^T G_rho sum_{m=0}^{B-1} (H(f) G_rho)^m t(f)
//! ```
//!
//! The work is split along what changes in a multi-link or mobile run:
//!
//! - [`IntrinsicOperator`] stores the gain and delay of every patch pair once
//!   per scene (`2 N^2` scalars). `H(f)` is never materialized: its phasors
//!   are synthesized inside the matrix-vector product.
//! - [`SourceField`] holds `v(f) = G_rho sum_m (H G_rho)^m t(f)` for one
//!   emitter. It does not depend on any detector.
//! - [`ReceiveVector`] holds `r(f)` for one detector pose. The response of a
//!   link is then one length-`N` dot product per frequency.
//!
//! Every reduction runs in patch-index order, so results are bit-identical
//! across runs and thread counts.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::coupling::{emitter_to_patch, patch_to_detector, patch_to_patch};
use crate::scene::{Detector, Emitter, FrequencyGrid, PatchSet, Scene};
use crate::{Error, Result, SPEED_OF_LIGHT};

/// Default cap on the intrinsic operator's storage, 4 GiB.
pub const DEFAULT_MEMORY_BUDGET: u128 = 4 << 30;

/// Uniform-grid phasors are advanced by recurrence and re-seeded exactly
/// every this many samples to bound rounding drift.
const RESEED_INTERVAL: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffuseOptions {
    /// Number of diffuse bounces evaluated by the matrix method.
    pub bounces: usize,
    /// Store the gain and delay matrices as `f32`. Accumulation stays `f64`.
    pub single_precision: bool,
    pub memory_budget_bytes: u128,
}

impl Default for DiffuseOptions {
    fn default() -> Self {
        Self {
            bounces: 2,
            single_precision: false,
            memory_budget_bytes: DEFAULT_MEMORY_BUDGET,
        }
    }
}

#[derive(Debug, Clone)]
enum Storage {
    Double { gain: Vec<f64>, delay: Vec<f64> },
    Single { gain: Vec<f32>, delay: Vec<f32> },
}

/// Patch-to-patch gains and delays for one scene. Row `i`, column `k` is the
/// coupling from patch `k` into patch `i`; the diagonal is zero.
#[derive(Debug, Clone)]
pub struct IntrinsicOperator {
    scene_id: u64,
    patches: Arc<PatchSet>,
    storage: Storage,
}

/// Bytes needed to store the operator for `n` patches.
pub fn intrinsic_memory_bytes(n: usize, single_precision: bool) -> u128 {
    let scalar = if single_precision { 4 } else { 8 };
    2 * (n as u128) * (n as u128) * scalar
}

pub fn build_intrinsic(scene: &Scene, opts: &DiffuseOptions) -> Result<IntrinsicOperator> {
    let patches = scene.patches_arc().clone();
    let n = patches.len();
    if n == 0 {
        return Err(Error::EmptyPatchSet);
    }
    let required = intrinsic_memory_bytes(n, opts.single_precision);
    if required > opts.memory_budget_bytes {
        return Err(Error::Capacity {
            patches: n,
            required_bytes: required,
            budget_bytes: opts.memory_budget_bytes,
        });
    }

    let mut gain = vec![0.0f64; n * n];
    let mut delay = vec![0.0f64; n * n];
    let list = patches.patches();
    gain.par_chunks_mut(n)
        .zip(delay.par_chunks_mut(n))
        .enumerate()
        .for_each(|(i, (g_row, t_row))| {
            let dst = &list[i];
            for (k, src) in list.iter().enumerate() {
                if k == i {
                    continue;
                }
                let c = patch_to_patch(src, dst);
                g_row[k] = c.gain;
                t_row[k] = c.delay;
            }
        });

    let storage = if opts.single_precision {
        Storage::Single {
            gain: gain.iter().map(|&g| g as f32).collect(),
            delay: delay.iter().map(|&t| t as f32).collect(),
        }
    } else {
        Storage::Double { gain, delay }
    };
    Ok(IntrinsicOperator {
        scene_id: scene.id(),
        patches,
        storage,
    })
}

impl IntrinsicOperator {
    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }

    pub fn scene_id(&self) -> u64 {
        self.scene_id
    }

    pub fn patches(&self) -> &PatchSet {
        &self.patches
    }

    /// Gain from patch `k` into patch `i`.
    pub fn gain(&self, i: usize, k: usize) -> f64 {
        let n = self.len();
        match &self.storage {
            Storage::Double { gain, .. } => gain[i * n + k],
            Storage::Single { gain, .. } => gain[i * n + k] as f64,
        }
    }

    /// Delay from patch `k` to patch `i`, seconds.
    pub fn delay(&self, i: usize, k: usize) -> f64 {
        let n = self.len();
        match &self.storage {
            Storage::Double { delay, .. } => delay[i * n + k],
            Storage::Single { delay, .. } => delay[i * n + k] as f64,
        }
    }

    pub fn memory_bytes(&self) -> u128 {
        intrinsic_memory_bytes(self.len(), matches!(self.storage, Storage::Single { .. }))
    }

    fn check_scene(&self, scene: &Scene) -> Result<()> {
        if scene.id() != self.scene_id {
            return Err(Error::SceneMismatch);
        }
        Ok(())
    }

    /// `y = H(f) x` for every grid frequency. Both vectors are stored
    /// patch-major: `x[k * nf + n]` is patch `k` at frequency `n`.
    fn apply(&self, x: &[Complex64], grid: &FrequencyGrid) -> Vec<Complex64> {
        match &self.storage {
            Storage::Double { gain, delay } => apply_matrix(gain, delay, self.len(), x, grid),
            Storage::Single { gain, delay } => apply_matrix(gain, delay, self.len(), x, grid),
        }
    }
}

/// Calls `f(n, exp(-j 2 pi f_n delay))` for every grid sample, in order.
#[inline(always)]
fn for_each_phasor(delay: f64, grid: &FrequencyGrid, mut f: impl FnMut(usize, Complex64)) {
    let freqs = grid.samples();
    let w = -2.0 * PI * delay;
    match grid.uniform_step() {
        Some(step) => {
            let advance = Complex64::from_polar(1.0, w * step);
            let mut p = Complex64::new(1.0, 0.0);
            for (n, &fr) in freqs.iter().enumerate() {
                if n % RESEED_INTERVAL == 0 {
                    p = Complex64::from_polar(1.0, w * fr);
                }
                f(n, p);
                p *= advance;
            }
        }
        None => {
            for (n, &fr) in freqs.iter().enumerate() {
                f(n, Complex64::from_polar(1.0, w * fr));
            }
        }
    }
}

fn apply_matrix<S>(
    gain: &[S],
    delay: &[S],
    n: usize,
    x: &[Complex64],
    grid: &FrequencyGrid,
) -> Vec<Complex64>
where
    S: Copy + Into<f64> + Sync,
{
    let nf = grid.len();
    let active: Vec<usize> = (0..n)
        .filter(|&k| {
            x[k * nf..(k + 1) * nf]
                .iter()
                .any(|c| *c != Complex64::default())
        })
        .collect();
    let mut y = vec![Complex64::default(); n * nf];
    y.par_chunks_mut(nf).enumerate().for_each(|(i, acc)| {
        let g_row = &gain[i * n..(i + 1) * n];
        let t_row = &delay[i * n..(i + 1) * n];
        for &k in &active {
            let g: f64 = g_row[k].into();
            if g == 0.0 {
                continue;
            }
            let xk = &x[k * nf..(k + 1) * nf];
            for_each_phasor(t_row[k].into(), grid, |idx, p| {
                acc[idx] += (p * g) * xk[idx];
            });
        }
    });
    y
}

/// `G_rho sum_{m=0}^{B-1} (H G_rho)^m t(f)` for one emitter, stored
/// patch-major over the grid.
#[derive(Debug, Clone)]
pub struct SourceField {
    scene_id: u64,
    emitter_id: String,
    grid: FrequencyGrid,
    bounces: usize,
    values: Vec<Complex64>,
}

impl SourceField {
    pub fn emitter_id(&self) -> &str {
        &self.emitter_id
    }

    pub fn bounces(&self) -> usize {
        self.bounces
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    /// `v_k(f_n)`.
    pub fn value(&self, patch: usize, freq_index: usize) -> Complex64 {
        self.values[patch * self.grid.len() + freq_index]
    }
}

pub fn source_field(
    scene: &Scene,
    op: &IntrinsicOperator,
    tx: &Emitter,
    grid: &FrequencyGrid,
    bounces: usize,
) -> Result<SourceField> {
    op.check_scene(scene)?;
    if bounces == 0 {
        return Err(Error::InvalidParameter {
            name: "bounces",
            reason: "at least one bounce is required".into(),
        });
    }
    let patches = op.patches.patches();
    let nf = grid.len();

    // first bounce: G_rho t(f)
    let mut term = vec![Complex64::default(); patches.len() * nf];
    for (k, patch) in patches.iter().enumerate() {
        let c = emitter_to_patch(tx, patch)?;
        let weight = patch.reflectivity * c.gain;
        if weight == 0.0 {
            continue;
        }
        let row = &mut term[k * nf..(k + 1) * nf];
        for_each_phasor(c.delay, grid, |n, p| row[n] = p * weight);
    }

    let mut total = term.clone();
    for _ in 1..bounces {
        let mut next = op.apply(&term, grid);
        for (k, patch) in patches.iter().enumerate() {
            let rho = patch.reflectivity;
            for value in &mut next[k * nf..(k + 1) * nf] {
                *value *= rho;
            }
        }
        for (t, v) in total.iter_mut().zip(&next) {
            *t += v;
        }
        term = next;
    }

    Ok(SourceField {
        scene_id: scene.id(),
        emitter_id: tx.id.clone(),
        grid: grid.clone(),
        bounces,
        values: total,
    })
}

/// Patch-to-detector phasors `r_k(f)` for one detector pose.
#[derive(Debug, Clone)]
pub struct ReceiveVector {
    scene_id: u64,
    grid: FrequencyGrid,
    /// Patches with nonzero gain into the detector, ascending.
    active: Vec<usize>,
    /// Phasors of the active patches, `values[a * nf + n]`.
    values: Vec<Complex64>,
}

pub fn receive_vector(scene: &Scene, rx: &Detector, grid: &FrequencyGrid) -> Result<ReceiveVector> {
    let nf = grid.len();
    let mut active = Vec::new();
    let mut values = Vec::new();
    for (k, patch) in scene.patches().patches().iter().enumerate() {
        let c = patch_to_detector(patch, rx)?;
        if c.gain == 0.0 {
            continue;
        }
        active.push(k);
        let start = values.len();
        values.resize(start + nf, Complex64::default());
        let row = &mut values[start..];
        for_each_phasor(c.delay, grid, |n, p| row[n] = p * c.gain);
    }
    Ok(ReceiveVector {
        scene_id: scene.id(),
        grid: grid.clone(),
        active,
        values,
    })
}

impl ReceiveVector {
    /// `H_diff(f_n) = sum_k r_k(f_n) v_k(f_n)`, summed in patch order.
    pub fn respond(&self, field: &SourceField) -> Result<Vec<Complex64>> {
        if self.scene_id != field.scene_id {
            return Err(Error::SceneMismatch);
        }
        if self.grid != field.grid {
            return Err(Error::GridMismatch(
                "source field and receive vector use different grids".into(),
            ));
        }
        let nf = self.grid.len();
        let mut out = vec![Complex64::default(); nf];
        for (a, &k) in self.active.iter().enumerate() {
            let r = &self.values[a * nf..(a + 1) * nf];
            let v = &field.values[k * nf..(k + 1) * nf];
            for ((o, r), v) in out.iter_mut().zip(r).zip(v) {
                *o += r * v;
            }
        }
        Ok(out)
    }

    pub fn active_patches(&self) -> usize {
        self.active.len()
    }
}

/// Diffuse part of one link: builds the receive vector and applies it.
pub fn diffuse_response(
    scene: &Scene,
    field: &SourceField,
    rx: &Detector,
) -> Result<Vec<Complex64>> {
    if scene.id() != field.scene_id {
        return Err(Error::SceneMismatch);
    }
    receive_vector(scene, rx, &field.grid)?.respond(field)
}

/// Explicit path-sum of the first two bounces, straight from the coupling
/// kernels. `O(N^2)` per frequency; a reference for validating the matrix
/// route at small `N`.
pub fn brute_force_two_bounce(
    scene: &Scene,
    tx: &Emitter,
    rx: &Detector,
    grid: &FrequencyGrid,
) -> Result<Vec<Complex64>> {
    let patches = scene.patches().patches();
    let mut t = Vec::with_capacity(patches.len());
    let mut r = Vec::with_capacity(patches.len());
    for p in patches {
        t.push(emitter_to_patch(tx, p)?);
        r.push(patch_to_detector(p, rx)?);
    }

    // (gain, delay) of every path with nonzero gain
    let mut paths = Vec::new();
    for (k, pk) in patches.iter().enumerate() {
        let a = t[k].gain * pk.reflectivity * r[k].gain;
        if a != 0.0 {
            paths.push((a, t[k].delay + r[k].delay));
        }
        let launch = t[k].gain * pk.reflectivity;
        if launch == 0.0 {
            continue;
        }
        for (j, pj) in patches.iter().enumerate() {
            if j == k {
                continue;
            }
            let hop = patch_to_patch(pk, pj);
            let b = launch * hop.gain * pj.reflectivity * r[j].gain;
            if b != 0.0 {
                let dist = (pj.center - pk.center).norm();
                paths.push((b, t[k].delay + dist / SPEED_OF_LIGHT + r[j].delay));
            }
        }
    }

    Ok(grid
        .samples()
        .iter()
        .map(|&f| {
            paths
                .iter()
                .map(|&(g, tau)| Complex64::from_polar(g, -2.0 * PI * f * tau))
                .sum()
        })
        .collect())
}
