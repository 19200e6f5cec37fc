//! Temporal non-local means over initial mattes.
//!
//! For every patch center in frame `T` the smoothed alpha patch is a weighted average of the
//! matched alpha patches in frames `T-2..=T+2`, with weight
//! `gamma^|t-T| * exp(-D_w / (2 sigma_t^2))`. The frame itself contributes its own patch with
//! weight 1. Overlapping patch estimates are then merged per pixel with the spatial Gaussian.

use rayon::prelude::*;

use crate::aknn::{csh_match, extend_aknn, AknnField, CshParams};
use crate::error::{MatteError, Result};
use crate::imaging::{AlphaMatte, Frame, MatteStage};
use crate::patch::{CenterGrid, PatchGeometry};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NlmConfig {
    pub gamma: f64,
    pub patch: usize,
    pub csh: CshParams,
}

impl Default for NlmConfig {
    fn default() -> Self {
        Self {
            gamma: 0.9,
            patch: 8,
            csh: CshParams::default(),
        }
    }
}

impl NlmConfig {
    pub fn geometry(&self) -> PatchGeometry {
        PatchGeometry::new(self.patch)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(MatteError::Config(format!("gamma {} outside (0, 1]", self.gamma)));
        }
        if self.csh.k == 0 {
            return Err(MatteError::Config("k must be at least 1".into()));
        }
        if !self.patch.is_power_of_two() || self.patch < 2 {
            return Err(MatteError::PatchNotPowerOfTwo(self.patch));
        }
        Ok(())
    }
}

const SIGMA_FLOOR: f64 = 1e-6;

/// Squared distance bandwidth for one frame pair: the median match distance, floored.
pub fn sigma_t_sq(field: &AknnField) -> f64 {
    let mut d: Vec<f64> = field.all_matches().iter().map(|m| m.distance).collect();
    if d.is_empty() {
        return SIGMA_FLOOR;
    }
    let mid = d.len() / 2;
    let (_, median, _) = d.select_nth_unstable_by(mid, f64::total_cmp);
    median.max(SIGMA_FLOOR)
}

/// One non-self frame of the temporal window.
#[derive(Debug, Clone, Copy)]
pub struct WindowTerm<'a> {
    pub field: &'a AknnField,
    pub matte: &'a AlphaMatte,
    /// `gamma^|t - T|`.
    pub decay: f64,
    pub sigma_t_sq: f64,
}

/// Everything needed to smooth one frame.
#[derive(Debug, Clone)]
pub struct NlmWindow<'a> {
    pub matte: &'a AlphaMatte,
    pub terms: Vec<WindowTerm<'a>>,
}

#[inline]
fn add_patch(acc: &mut [f64], matte: &AlphaMatte, center: (usize, usize), geom: &PatchGeometry, weight: f64) {
    let s = geom.width();
    let (x0, y0) = (center.0 - geom.half(), center.1 - geom.half());
    let w = matte.width();
    let alpha = matte.alpha();
    for dy in 0..s {
        let row = &alpha[(y0 + dy) * w + x0..][..s];
        for (a, &v) in acc[dy * s..(dy + 1) * s].iter_mut().zip(row) {
            *a += weight * v;
        }
    }
}

/// Weighted average of the matched alpha patches for center `index` of the window frame.
pub fn nlm_patch_estimate(index: usize, grid: &CenterGrid, window: &NlmWindow<'_>, geom: &PatchGeometry) -> Vec<f64> {
    let mut acc = vec![0.0; geom.width() * geom.width()];
    nlm_patch_estimate_into(index, grid, window, geom, &mut acc);
    acc
}

fn nlm_patch_estimate_into(index: usize, grid: &CenterGrid, window: &NlmWindow<'_>, geom: &PatchGeometry, acc: &mut [f64]) {
    acc.fill(0.0);
    add_patch(acc, window.matte, grid.center(index), geom, 1.0);
    let mut omega = 1.0;
    for term in &window.terms {
        for m in term.field.matches_for(index) {
            let w = term.decay * (-m.distance / (2.0 * term.sigma_t_sq)).exp();
            if w > 0.0 {
                add_patch(acc, term.matte, (m.x as usize, m.y as usize), geom, w);
                omega += w;
            }
        }
    }
    let inv = 1.0 / omega;
    acc.iter_mut().for_each(|a| *a *= inv);
}

/// Per-center alpha patch estimates on a dense stride-1 grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchEstimates {
    pub width: usize,
    pub height: usize,
    pub index: usize,
    pub grid: CenterGrid,
    pub patch: usize,
    pub values: Vec<f64>,
}

impl PatchEstimates {
    pub fn patch_values(&self, i: usize) -> &[f64] {
        let n = self.patch * self.patch;
        &self.values[i * n..(i + 1) * n]
    }
}

struct OverlapAccumulator {
    width: usize,
    num: Vec<f64>,
    den: Vec<f64>,
}

impl OverlapAccumulator {
    fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            num: vec![0.0; width * height],
            den: vec![0.0; width * height],
        }
    }

    fn add(&mut self, center: (usize, usize), values: &[f64], geom: &PatchGeometry) {
        let s = geom.width();
        let (x0, y0) = (center.0 - geom.half(), center.1 - geom.half());
        let weights = geom.weights();
        for dy in 0..s {
            let base = (y0 + dy) * self.width + x0;
            for dx in 0..s {
                let w = weights[dy * s + dx];
                self.num[base + dx] += w * values[dy * s + dx];
                self.den[base + dx] += w;
            }
        }
    }

    fn finish(self, index: usize, height: usize) -> Result<AlphaMatte> {
        let mut alpha = Vec::with_capacity(self.num.len());
        for (i, (n, d)) in self.num.iter().zip(&self.den).enumerate() {
            if *d <= 0.0 {
                return Err(MatteError::PatchOutOfBounds {
                    x: i % self.width,
                    y: i / self.width,
                });
            }
            alpha.push((n / d).clamp(0.0, 1.0));
        }
        AlphaMatte::new(self.width, height, index, MatteStage::Smoothed, alpha)
    }
}

/// Gaussian-weighted merge of overlapping patch estimates into one matte.
pub fn aggregate_overlaps(estimates: &PatchEstimates, geom: &PatchGeometry) -> Result<AlphaMatte> {
    let mut acc = OverlapAccumulator::new(estimates.width, estimates.height);
    for i in 0..estimates.grid.len() {
        acc.add(estimates.grid.center(i), estimates.patch_values(i), geom);
    }
    acc.finish(estimates.index, estimates.height)
}

/// All patch estimates of one frame.
pub fn estimate_patches(window: &NlmWindow<'_>, geom: &PatchGeometry) -> Result<PatchEstimates> {
    let m = window.matte;
    let grid = geom.grid(m.width(), m.height())?;
    let n = geom.width() * geom.width();
    let mut values = vec![0.0; grid.len() * n];
    values
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(i, chunk)| nlm_patch_estimate_into(i, &grid, window, geom, chunk));
    Ok(PatchEstimates {
        width: m.width(),
        height: m.height(),
        index: m.index(),
        grid,
        patch: geom.width(),
        values,
    })
}

/// Smooths one frame, merging patch estimates row by row to bound memory.
pub fn smooth_frame(window: &NlmWindow<'_>, geom: &PatchGeometry) -> Result<AlphaMatte> {
    let m = window.matte;
    let grid = geom.grid(m.width(), m.height())?;
    let n = geom.width() * geom.width();
    let mut acc = OverlapAccumulator::new(m.width(), m.height());
    const ROWS_PER_CHUNK: usize = 16;
    let mut buf = Vec::new();
    for row0 in (0..grid.rows).step_by(ROWS_PER_CHUNK) {
        let rows = ROWS_PER_CHUNK.min(grid.rows - row0);
        let first = row0 * grid.cols;
        buf.resize(rows * grid.cols * n, 0.0);
        buf.par_chunks_mut(n)
            .enumerate()
            .for_each(|(j, chunk)| nlm_patch_estimate_into(first + j, &grid, window, geom, chunk));
        for (j, chunk) in buf.chunks(n).enumerate() {
            acc.add(grid.center(first + j), chunk, geom);
        }
    }
    acc.finish(m.index(), m.height())
}

/// AKNN fields from one frame to its temporal neighbors, keyed by signed frame offset.
#[derive(Debug, Clone, Default)]
pub struct NeighborFields {
    pub fields: Vec<(isize, AknnField)>,
}

/// Fields for every frame: `±1` by hashing, `±2` by chaining through the `±1` neighbor.
pub fn build_neighbor_fields(frames: &[Frame], geom: &PatchGeometry, csh: &CshParams) -> Result<Vec<NeighborFields>> {
    let n = frames.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|t| [(t, t + 1), (t + 1, t)])
        .filter(|&(a, b)| a < n && b < n)
        .collect();
    let fields: Vec<AknnField> = pairs
        .par_iter()
        .map(|&(a, b)| csh_match(&frames[a], &frames[b], geom, csh))
        .collect::<Result<_>>()?;
    let one_hop = |a: usize, b: usize| -> Option<&AknnField> {
        pairs.iter().position(|&p| p == (a, b)).map(|i| &fields[i])
    };
    (0..n)
        .into_par_iter()
        .map(|t| {
            let mut out = NeighborFields::default();
            for dir in [-1isize, 1] {
                let Some(t1) = t.checked_add_signed(dir).filter(|&v| v < n) else {
                    continue;
                };
                let near = one_hop(t, t1).expect("one-hop field exists for valid neighbor");
                out.fields.push((dir, near.clone()));
                if let Some(t2) = t1.checked_add_signed(dir).filter(|&v| v < n) {
                    let far = one_hop(t1, t2).expect("one-hop field exists for valid neighbor");
                    out.fields.push((2 * dir, extend_aknn(near, far, &frames[t], &frames[t2], geom)?));
                }
            }
            out.fields.sort_by_key(|(d, _)| *d);
            Ok(out)
        })
        .collect()
}

/// One smoothing pass over the sequence; every output is computed from the initial mattes only.
pub fn smooth_sequence(initial: &[AlphaMatte], frames: &[Frame], cfg: &NlmConfig) -> Result<Vec<AlphaMatte>> {
    cfg.validate()?;
    if initial.len() != frames.len() {
        return Err(MatteError::SequenceLength(format!(
            "{} mattes for {} frames",
            initial.len(),
            frames.len()
        )));
    }
    for (m, f) in initial.iter().zip(frames) {
        if m.width() != f.width() || m.height() != f.height() {
            return Err(MatteError::DimensionMismatch {
                expected_w: f.width(),
                expected_h: f.height(),
                got_w: m.width(),
                got_h: m.height(),
            });
        }
    }
    let neighbors = build_neighbor_fields(frames, &cfg.geometry(), &cfg.csh)?;
    smooth_with_fields(initial, &neighbors, cfg)
}

/// The smoothing pass given precomputed neighbor fields (one entry per frame).
pub fn smooth_with_fields(initial: &[AlphaMatte], neighbors: &[NeighborFields], cfg: &NlmConfig) -> Result<Vec<AlphaMatte>> {
    cfg.validate()?;
    if initial.len() != neighbors.len() {
        return Err(MatteError::SequenceLength(format!(
            "{} mattes for {} neighbor sets",
            initial.len(),
            neighbors.len()
        )));
    }
    let geom = cfg.geometry();
    neighbors
        .par_iter()
        .enumerate()
        .map(|(t, nf)| {
            let terms = nf
                .fields
                .iter()
                .map(|(offset, field)| WindowTerm {
                    field,
                    matte: &initial[t.checked_add_signed(*offset).expect("offset within sequence")],
                    decay: cfg.gamma.powi(offset.unsigned_abs() as i32),
                    sigma_t_sq: sigma_t_sq(field),
                })
                .collect();
            let window = NlmWindow {
                matte: &initial[t],
                terms,
            };
            smooth_frame(&window, &geom)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patch::weighted_ssd;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matte(w: usize, h: usize, index: usize, seed: u64) -> AlphaMatte {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        AlphaMatte::new(w, h, index, MatteStage::Initial, (0..w * h).map(|_| rng.random()).collect()).unwrap()
    }

    fn random_frame(w: usize, h: usize, index: usize, seed: u64) -> Frame {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Frame::from_rgb(w, h, index, (0..w * h).map(|_| [rng.random(), rng.random(), rng.random()]).collect()).unwrap()
    }

    #[test]
    fn identical_alpha_patches_are_preserved() {
        let frames: Vec<Frame> = (0..3).map(|t| Frame::filled(12, 12, t, [0.3, 0.6, 0.2]).unwrap()).collect();
        let a = AlphaMatte::new(12, 12, 0, MatteStage::Initial, vec![0.37; 144]).unwrap();
        let mattes: Vec<AlphaMatte> = (0..3).map(|_| a.clone()).collect();
        let geom = PatchGeometry::new(8);
        let nf = build_neighbor_fields(&frames, &geom, &CshParams::default()).unwrap();
        let window = NlmWindow {
            matte: &mattes[1],
            terms: nf[1]
                .fields
                .iter()
                .map(|(o, f)| WindowTerm {
                    field: f,
                    matte: &mattes[(1 + o) as usize],
                    decay: 0.9,
                    sigma_t_sq: sigma_t_sq(f),
                })
                .collect(),
        };
        let grid = geom.grid(12, 12).unwrap();
        for i in 0..grid.len() {
            let est = nlm_patch_estimate(i, &grid, &window, &geom);
            assert!(est.iter().all(|v| (v - 0.37).abs() < 1e-12));
        }
    }

    #[test]
    fn symmetric_two_frame_window_is_arithmetic_mean() {
        let f0 = random_frame(8, 8, 0, 1);
        let f1 = random_frame(8, 8, 1, 2);
        let m0 = random_matte(8, 8, 0, 3);
        let m1 = random_matte(8, 8, 1, 4);
        let geom = PatchGeometry::new(8);
        let csh = CshParams { k: 1, ..CshParams::default() };
        let field = csh_match(&f0, &f1, &geom, &csh).unwrap();
        // gamma = 1 and a distance equal to zero weight on the neighbor: weight 1 like the self term
        let window = NlmWindow {
            matte: &m0,
            terms: vec![WindowTerm {
                field: &field,
                matte: &m1,
                decay: 1.0,
                sigma_t_sq: f64::INFINITY,
            }],
        };
        let grid = geom.grid(8, 8).unwrap();
        let est = nlm_patch_estimate(0, &grid, &window, &geom);
        for (i, v) in est.iter().enumerate() {
            assert!((v - 0.5 * (m0.alpha()[i] + m1.alpha()[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_direct_formula_on_toy_window() {
        // three 10x10 frames, center (5, 5) in frame 1; K = 2
        let frames: Vec<Frame> = (0..3).map(|t| random_frame(10, 10, t, 10 + t as u64)).collect();
        let mattes: Vec<AlphaMatte> = (0..3).map(|t| random_matte(10, 10, t, 20 + t as u64)).collect();
        let geom = PatchGeometry::new(8);
        let csh = CshParams { k: 2, ..CshParams::default() };
        let back = csh_match(&frames[1], &frames[0], &geom, &csh).unwrap();
        let fwd = csh_match(&frames[1], &frames[2], &geom, &csh).unwrap();
        let gamma: f64 = 0.9;
        let (s_b, s_f) = (sigma_t_sq(&back), sigma_t_sq(&fwd));
        let window = NlmWindow {
            matte: &mattes[1],
            terms: vec![
                WindowTerm { field: &back, matte: &mattes[0], decay: gamma, sigma_t_sq: s_b },
                WindowTerm { field: &fwd, matte: &mattes[2], decay: gamma, sigma_t_sq: s_f },
            ],
        };
        let grid = geom.grid(10, 10).unwrap();
        let i = grid.index_of(5, 5).unwrap();
        let est = nlm_patch_estimate(i, &grid, &window, &geom);

        // direct evaluation with distances recomputed from the frames
        let mut terms: Vec<(f64, usize, (usize, usize))> = vec![(1.0, 1, (5, 5))];
        for (field, t, s2) in [(&back, 0usize, s_b), (&fwd, 2, s_f)] {
            for m in field.matches_for(i) {
                let d = weighted_ssd(&geom, &frames[1], (5, 5), &frames[t], (m.x as usize, m.y as usize));
                terms.push((gamma * (-d / (2.0 * s2)).exp(), t, (m.x as usize, m.y as usize)));
            }
        }
        let omega: f64 = terms.iter().map(|t| t.0).sum();
        for dy in 0..8 {
            for dx in 0..8 {
                let num: f64 = terms
                    .iter()
                    .map(|&(w, t, (cx, cy))| w * mattes[t].at(cx - 4 + dx, cy - 4 + dy))
                    .sum();
                assert!((est[dy * 8 + dx] - num / omega).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn aggregation_of_agreeing_patches() {
        let geom = PatchGeometry::new(4);
        let grid = geom.grid(6, 5).unwrap();
        let est = PatchEstimates {
            width: 6,
            height: 5,
            index: 0,
            grid,
            patch: 4,
            values: vec![0.42; grid.len() * 16],
        };
        let m = aggregate_overlaps(&est, &geom).unwrap();
        assert!(m.alpha().iter().all(|a| (a - 0.42).abs() < 1e-12));
        assert_eq!(m.stage(), MatteStage::Smoothed);
    }

    #[test]
    fn equidistant_patches_with_opposite_values_average_to_half() {
        // 3x3 frame, width-2 patches: pixel (1, 1) is covered by centers (1,1), (2,1), (1,2), (2,2).
        // (2,1) and (1,2) are equidistant from it; give them 0 and 1, the others 0.5.
        let geom = PatchGeometry::new(2);
        let grid = geom.grid(3, 3).unwrap();
        let mut values = vec![0.5; grid.len() * 4];
        let zero = grid.index_of(2, 1).unwrap();
        let one = grid.index_of(1, 2).unwrap();
        values[zero * 4..zero * 4 + 4].fill(0.0);
        values[one * 4..one * 4 + 4].fill(1.0);
        let est = PatchEstimates { width: 3, height: 3, index: 0, grid, patch: 2, values };
        let m = aggregate_overlaps(&est, &geom).unwrap();
        assert!((m.at(1, 1) - 0.5).abs() < 1e-15);
        // corners are covered by a single patch
        assert_eq!(m.at(2, 0), 0.0);
        assert_eq!(m.at(0, 2), 1.0);
    }

    #[test]
    fn aggregation_matches_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let geom = PatchGeometry::new(4);
        let (w, h) = (9, 7);
        let grid = geom.grid(w, h).unwrap();
        let values: Vec<f64> = (0..grid.len() * 16).map(|_| rng.random()).collect();
        let est = PatchEstimates { width: w, height: h, index: 3, grid, patch: 4, values: values.clone() };
        let m = aggregate_overlaps(&est, &geom).unwrap();
        for y in 0..h {
            for x in 0..w {
                let (mut num, mut den) = (0.0, 0.0);
                for j in 0..grid.len() {
                    let (cx, cy) = grid.center(j);
                    let (ux, uy) = (x as i64 - cx as i64, y as i64 - cy as i64);
                    if (-2..2).contains(&ux) && (-2..2).contains(&uy) {
                        let wgt = (-((ux * ux + uy * uy) as f64) / 8.0).exp();
                        let local = ((uy + 2) * 4 + ux + 2) as usize;
                        num += wgt * values[j * 16 + local];
                        den += wgt;
                    }
                }
                assert!((m.at(x, y) - num / den).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn streaming_and_batched_agree() {
        let frames: Vec<Frame> = (0..3).map(|t| random_frame(30, 40, t, 40 + t as u64)).collect();
        let mattes: Vec<AlphaMatte> = (0..3).map(|t| random_matte(30, 40, t, 50 + t as u64)).collect();
        let geom = PatchGeometry::new(8);
        let nf = build_neighbor_fields(&frames, &geom, &CshParams::default()).unwrap();
        let window = NlmWindow {
            matte: &mattes[1],
            terms: nf[1]
                .fields
                .iter()
                .map(|(o, f)| WindowTerm {
                    field: f,
                    matte: &mattes[(1 + o) as usize],
                    decay: 0.9,
                    sigma_t_sq: sigma_t_sq(f),
                })
                .collect(),
        };
        let a = smooth_frame(&window, &geom).unwrap();
        let b = aggregate_overlaps(&estimate_patches(&window, &geom).unwrap(), &geom).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn boundary_frames_have_clipped_windows() {
        let frames: Vec<Frame> = (0..4).map(|t| random_frame(12, 12, t, t as u64)).collect();
        let geom = PatchGeometry::new(8);
        let nf = build_neighbor_fields(&frames, &geom, &CshParams::default()).unwrap();
        let offsets = |t: usize| nf[t].fields.iter().map(|(o, _)| *o).collect::<Vec<_>>();
        assert_eq!(offsets(0), vec![1, 2]);
        assert_eq!(offsets(1), vec![-1, 1, 2]);
        assert_eq!(offsets(2), vec![-2, -1, 1]);
        assert_eq!(offsets(3), vec![-2, -1]);
        for (t, n) in nf.iter().enumerate() {
            for (o, f) in &n.fields {
                assert_eq!(f.source, t);
                assert_eq!(f.target as isize, t as isize + o);
            }
        }
    }

    #[test]
    fn identical_frames_with_single_neighbor_are_a_fixed_point() {
        let f = random_frame(16, 14, 0, 7);
        let m = random_matte(16, 14, 0, 8);
        let frames: Vec<Frame> = (0..5).map(|t| f.clone().with_index(t)).collect();
        let mattes: Vec<AlphaMatte> = (0..5).map(|t| AlphaMatte::new(16, 14, t, MatteStage::Initial, m.alpha().to_vec()).unwrap()).collect();
        for gamma in [0.5, 0.9, 1.0] {
            let mut cfg = NlmConfig { gamma, ..NlmConfig::default() };
            cfg.csh.k = 1;
            let out = smooth_sequence(&mattes, &frames, &cfg).unwrap();
            for o in &out {
                for (a, b) in o.alpha().iter().zip(m.alpha()) {
                    assert!((a - b).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn content_consistent_matte_is_a_fixed_point_for_any_k() {
        // alpha and color both vary only along x, so every zero-distance match carries the
        // same alpha patch
        let (w, h) = (24, 16);
        let alpha: Vec<f64> = (0..w * h).map(|i| ((i % w) as f64 / (w - 1) as f64).powi(2)).collect();
        let rgb: Vec<[f64; 3]> = alpha.iter().map(|a| [a * 0.8 + 0.1, 0.3, 0.9 - 0.7 * a]).collect();
        let frames: Vec<Frame> = (0..4).map(|t| Frame::from_rgb(w, h, t, rgb.clone()).unwrap()).collect();
        let mattes: Vec<AlphaMatte> = (0..4).map(|t| AlphaMatte::new(w, h, t, MatteStage::Initial, alpha.clone()).unwrap()).collect();
        for k in [1, 3, 5] {
            let mut cfg = NlmConfig::default();
            cfg.csh.k = k;
            let out = smooth_sequence(&mattes, &frames, &cfg).unwrap();
            for o in &out {
                for (a, b) in o.alpha().iter().zip(&alpha) {
                    assert!((a - b).abs() < 1e-12, "k = {k}");
                }
            }
        }
    }

    #[test]
    fn single_frame_reaggregates_itself() {
        let f = random_frame(12, 12, 0, 1);
        let m = random_matte(12, 12, 0, 2);
        let out = smooth_sequence(std::slice::from_ref(&m), std::slice::from_ref(&f), &NlmConfig::default()).unwrap();
        for (a, b) in out[0].alpha().iter().zip(m.alpha()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn outputs_stay_within_input_range() {
        let frames: Vec<Frame> = (0..4).map(|t| random_frame(16, 16, t, 60 + t as u64)).collect();
        let mattes: Vec<AlphaMatte> = (0..4)
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(70 + t as u64);
                AlphaMatte::new(16, 16, t, MatteStage::Initial, (0..256).map(|_| rng.random_range(0.2..0.7)).collect()).unwrap()
            })
            .collect();
        let out = smooth_sequence(&mattes, &frames, &NlmConfig::default()).unwrap();
        for o in out {
            assert!(o.alpha().iter().all(|a| (0.2 - 1e-12..=0.7 + 1e-12).contains(a)));
        }
    }

    #[test]
    fn invalid_config_is_rejected() {
        let cfg = NlmConfig { gamma: 0.0, ..NlmConfig::default() };
        assert!(cfg.validate().is_err());
        let cfg = NlmConfig { gamma: 1.5, ..NlmConfig::default() };
        assert!(cfg.validate().is_err());
        let cfg = NlmConfig { patch: 6, ..NlmConfig::default() };
        assert!(cfg.validate().is_err());
    }
}
