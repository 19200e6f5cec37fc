//! Sparse reconstruction of unknown pixels against F and B dictionaries, and the
//! residual-ratio alpha estimate.
//!
//! For an unknown pixel with feature `v`, each dictionary `D` yields a code
//!
//! ```text
//! beta = argmin ||v - D beta||_2^2 + lambda ||beta||_1
//! ```
//!
//! and a residual `xi = ||v - D beta||_2`. Alpha is `xi_B / (xi_B + xi_F)`: a pixel the
//! background atoms fail to explain is likely foreground.

use rayon::prelude::*;

use crate::dictionary::{build_dictionaries, slic_segment, Dictionary, Region, SlicParams, Superpixel, DEFAULT_MIN_ATOMS};
use crate::error::{MatteError, Result};
use crate::features::{compute_feature_map, FeatureMap, FeatureVector, FEATURE_DIM};
use crate::imaging::{AlphaMatte, Frame, Label, MatteStage, Trimap};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LassoOptions {
    pub tolerance: f64,
    pub max_sweeps: usize,
}

impl Default for LassoOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_sweeps: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseCode {
    pub coefficients: Vec<f64>,
    /// `||v - D beta||^2 + lambda ||beta||_1` at `coefficients`.
    pub objective: f64,
    pub sweeps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualPair {
    pub xi_f: f64,
    pub xi_b: f64,
}

#[inline]
fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

fn residual_of(v: &FeatureVector, atoms: &[FeatureVector], beta: &[f64]) -> [f64; FEATURE_DIM] {
    let mut r = v.0;
    for (atom, &b) in atoms.iter().zip(beta) {
        if b != 0.0 {
            for k in 0..FEATURE_DIM {
                r[k] -= b * atom.0[k];
            }
        }
    }
    r
}

/// `||v - D beta||^2 + lambda ||beta||_1`.
pub fn lasso_objective(v: &FeatureVector, atoms: &[FeatureVector], beta: &[f64], lambda: f64) -> f64 {
    let r = residual_of(v, atoms, beta);
    r.iter().map(|x| x * x).sum::<f64>() + lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
}

/// Largest violation of the subgradient optimality conditions of the LASSO objective.
pub fn kkt_violation(v: &FeatureVector, atoms: &[FeatureVector], beta: &[f64], lambda: f64) -> f64 {
    let r = residual_of(v, atoms, beta);
    atoms
        .iter()
        .zip(beta)
        .map(|(atom, &b)| {
            let g = 2.0 * atom.0.iter().zip(&r).map(|(a, x)| a * x).sum::<f64>();
            if b == 0.0 {
                (g.abs() - lambda).max(0.0)
            } else {
                (g - lambda * b.signum()).abs()
            }
        })
        .fold(0.0, f64::max)
}

struct CoordinateDescent<'a> {
    atoms: &'a [FeatureVector],
    lambda: f64,
    norms: Vec<f64>,
    beta: Vec<f64>,
    residual: [f64; FEATURE_DIM],
}

impl<'a> CoordinateDescent<'a> {
    fn new(v: &FeatureVector, atoms: &'a [FeatureVector], lambda: f64) -> Self {
        Self {
            atoms,
            lambda,
            norms: atoms.iter().map(FeatureVector::norm_sq).collect(),
            beta: vec![0.0; atoms.len()],
            residual: v.0,
        }
    }

    /// One cyclic pass; returns the largest coefficient change.
    fn sweep(&mut self) -> f64 {
        let mut max_change = 0.0f64;
        for j in 0..self.atoms.len() {
            let norm = self.norms[j];
            if norm == 0.0 {
                continue;
            }
            let atom = &self.atoms[j].0;
            let old = self.beta[j];
            // d_j . (partial residual with atom j removed)
            let rho = atom.iter().zip(&self.residual).map(|(a, r)| a * r).sum::<f64>() + norm * old;
            let new = soft_threshold(rho, self.lambda / 2.0) / norm;
            let delta = new - old;
            if delta != 0.0 {
                for k in 0..FEATURE_DIM {
                    self.residual[k] -= delta * atom[k];
                }
                self.beta[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        max_change
    }
}

/// Solves `A x = b` for symmetric positive definite `A` (row-major, `n x n`) by Cholesky.
fn cholesky_solve(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let s = a[i * n + j] - (0..j).map(|k| l[i * n + k] * l[j * n + k]).sum::<f64>();
            if i == j {
                if s <= 1e-12 * a[i * n + i].abs().max(1.0) {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        y[i] = (b[i] - (0..i).map(|k| l[i * n + k] * y[k]).sum::<f64>()) / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        x[i] = (y[i] - (i + 1..n).map(|k| l[k * n + i] * x[k]).sum::<f64>()) / l[i * n + i];
    }
    Some(x)
}

/// Exact solve through the dual: the optimal residual is the Euclidean projection of `v`
/// onto `{r : |d_j . r| <= lambda / 2}`, and the multipliers of the active faces are the
/// coefficients. The projection is a strictly convex QP in `FEATURE_DIM` variables, solved
/// by a primal active-set method from the feasible point `r = 0`. `None` if it fails to
/// terminate.
fn dual_active_set(v: &FeatureVector, atoms: &[FeatureVector], lambda: f64) -> Option<Vec<f64>> {
    let mu = lambda / 2.0;
    // constraint k: sign_k * d_{atom_k} . r <= mu
    let constraints: Vec<(usize, f64)> = (0..atoms.len())
        .filter(|&j| atoms[j].norm_sq() > 0.0)
        .flat_map(|j| [(j, 1.0), (j, -1.0)])
        .collect();
    let normal = |k: usize| {
        let (j, sgn) = constraints[k];
        atoms[j].0.map(|a| sgn * a)
    };
    let dot = |a: &[f64; FEATURE_DIM], b: &[f64; FEATURE_DIM]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let scale = v.norm_sq().sqrt().max(1.0);

    let mut r = [0.0; FEATURE_DIM];
    let mut working: Vec<usize> = Vec::new();
    for _ in 0..20 * constraints.len() + 100 {
        let normals: Vec<[f64; FEATURE_DIM]> = working.iter().map(|&k| normal(k)).collect();
        let n = normals.len();
        let mut gram = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                gram[a * n + b] = dot(&normals[a], &normals[b]);
            }
        }
        // g = r - v; step p = -g + N^T y with N p = 0, i.e. (N N^T) y = N g
        let g: [f64; FEATURE_DIM] = std::array::from_fn(|i| r[i] - v.0[i]);
        let ng: Vec<f64> = normals.iter().map(|a| dot(a, &g)).collect();
        let y = if n == 0 { Vec::new() } else { cholesky_solve(&gram, &ng, n)? };
        let mut p = g.map(|x| -x);
        for (a, ya) in normals.iter().zip(&y) {
            for i in 0..FEATURE_DIM {
                p[i] += ya * a[i];
            }
        }
        if n == FEATURE_DIM || dot(&p, &p).sqrt() <= 1e-12 * scale {
            // stationary on the working set; multipliers are -y
            // lowest constraint index first (Bland's rule) to avoid cycling at degenerate vertices
            match (0..n).filter(|&a| -y[a] < -1e-15 * scale).min_by_key(|&a| working[a]) {
                Some(a) => {
                    working.remove(a);
                }
                _ => {
                    let mut beta = vec![0.0; atoms.len()];
                    for (a, &k) in working.iter().enumerate() {
                        let (j, sgn) = constraints[k];
                        beta[j] += sgn * (-y[a]).max(0.0);
                    }
                    return Some(beta);
                }
            }
            continue;
        }
        let mut step = 1.0;
        let mut blocking = None;
        for k in 0..constraints.len() {
            if working.contains(&k) {
                continue;
            }
            let a = normal(k);
            let ap = dot(&a, &p);
            // directions numerically inside the span of the working set never block
            if ap > 1e-12 * dot(&a, &a).sqrt() * dot(&p, &p).sqrt() {
                let t = ((mu - dot(&a, &r)) / ap).max(0.0);
                if t < step || (t == step && blocking.is_some_and(|b| k < b)) {
                    step = t;
                    blocking = Some(k);
                }
            }
        }
        for i in 0..FEATURE_DIM {
            r[i] += step * p[i];
        }
        if let Some(k) = blocking {
            working.push(k);
        }
    }
    None
}

/// Coordinate descent can crawl on nearly collinear atoms; when it stops short of the
/// optimality conditions, the exact dual solution replaces it if it satisfies them better.
fn refine(v: &FeatureVector, atoms: &[FeatureVector], lambda: f64, beta: &mut [f64]) {
    if let Some(x) = dual_active_set(v, atoms, lambda) {
        if kkt_violation(v, atoms, &x, lambda) < kkt_violation(v, atoms, beta, lambda) {
            beta.copy_from_slice(&x);
        }
    }
}

fn solve(v: &FeatureVector, dict: &Dictionary, lambda: f64, opts: &LassoOptions, mut trace: Option<&mut Vec<f64>>) -> SparseCode {
    let mut cd = CoordinateDescent::new(v, &dict.atoms, lambda);
    let mut sweeps = 0;
    while sweeps < opts.max_sweeps {
        let change = cd.sweep();
        sweeps += 1;
        if let Some(t) = trace.as_deref_mut() {
            t.push(lasso_objective(v, &dict.atoms, &cd.beta, lambda));
        }
        if change < opts.tolerance {
            break;
        }
    }
    let mut beta = cd.beta;
    if kkt_violation(v, &dict.atoms, &beta, lambda) >= opts.tolerance {
        refine(v, &dict.atoms, lambda, &mut beta);
    }
    let objective = lasso_objective(v, &dict.atoms, &beta, lambda);
    SparseCode {
        coefficients: beta,
        objective,
        sweeps,
    }
}

/// Cyclic coordinate descent on `||v - D beta||^2 + lambda ||beta||_1`.
pub fn lasso_solve(v: &FeatureVector, dict: &Dictionary, lambda: f64) -> SparseCode {
    solve(v, dict, lambda, &LassoOptions::default(), None)
}

pub fn lasso_solve_with(v: &FeatureVector, dict: &Dictionary, lambda: f64, opts: &LassoOptions) -> SparseCode {
    solve(v, dict, lambda, opts, None)
}

/// Like [`lasso_solve`] but also returns the objective after every sweep.
pub fn lasso_solve_traced(v: &FeatureVector, dict: &Dictionary, lambda: f64) -> (SparseCode, Vec<f64>) {
    let mut trace = Vec::new();
    let code = solve(v, dict, lambda, &LassoOptions::default(), Some(&mut trace));
    (code, trace)
}

pub fn reconstruction_error(v: &FeatureVector, dict: &Dictionary, code: &SparseCode) -> f64 {
    residual_of(v, &dict.atoms, &code.coefficients)
        .iter()
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
}

pub fn residuals(v: &FeatureVector, dict_f: &Dictionary, dict_b: &Dictionary, lambda: f64) -> ResidualPair {
    let code_f = lasso_solve(v, dict_f, lambda);
    let code_b = lasso_solve(v, dict_b, lambda);
    ResidualPair {
        xi_f: reconstruction_error(v, dict_f, &code_f),
        xi_b: reconstruction_error(v, dict_b, &code_b),
    }
}

const AMBIGUOUS_EPS: f64 = 1e-8;

/// `xi_B / (xi_B + xi_F)`, or 0.5 when both residuals vanish.
pub fn estimate_alpha(r: ResidualPair) -> f64 {
    let total = r.xi_b + r.xi_f;
    if total < AMBIGUOUS_EPS {
        0.5
    } else {
        (r.xi_b / total).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatteParams {
    pub lambda: f64,
    pub radius: f64,
    pub min_atoms: usize,
    /// Fixed superpixel count per region; `None` uses `max(25, area / 400)`.
    pub superpixels: Option<usize>,
    pub compactness: f64,
}

impl Default for MatteParams {
    fn default() -> Self {
        Self {
            lambda: 0.1,
            radius: 50.0,
            min_atoms: DEFAULT_MIN_ATOMS,
            superpixels: None,
            compactness: 10.0,
        }
    }
}

impl MatteParams {
    fn slic_for(&self, area: usize) -> SlicParams {
        match self.superpixels {
            Some(n) => SlicParams::new(n, self.compactness),
            None => SlicParams {
                compactness: self.compactness,
                ..SlicParams::for_mask_area(area)
            },
        }
    }
}

/// SLIC superpixels of the known foreground and background regions of one frame.
#[derive(Debug, Clone, Default)]
pub struct KnownSegments {
    pub foreground: Vec<Superpixel>,
    pub background: Vec<Superpixel>,
}

/// Segments both known regions. Frames without unknown pixels need no dictionaries and get
/// empty segment lists; otherwise both regions must be present.
pub fn segment_known_regions(frame: &Frame, trimap: &Trimap, params: &MatteParams) -> Result<KnownSegments> {
    trimap.check_matches(frame)?;
    if trimap.count(Label::Unknown) == 0 {
        return Ok(KnownSegments::default());
    }
    trimap.check_known_regions()?;
    let mask_f = trimap.mask(Label::ForegroundKnown);
    let mask_b = trimap.mask(Label::BackgroundKnown);
    let area_f = trimap.count(Label::ForegroundKnown);
    let area_b = trimap.count(Label::BackgroundKnown);
    let (fg, bg) = rayon::join(
        || slic_segment(frame, &mask_f, Region::Foreground, &params.slic_for(area_f)),
        || slic_segment(frame, &mask_b, Region::Background, &params.slic_for(area_b)),
    );
    Ok(KnownSegments {
        foreground: fg?,
        background: bg?,
    })
}

/// Known pixels pass through; each unknown pixel gets the residual-ratio estimate against
/// dictionaries drawn from `segments`.
pub fn matte_from_segments(
    index: usize,
    features: &FeatureMap,
    trimap: &Trimap,
    segments: &KnownSegments,
    params: &MatteParams,
) -> Result<AlphaMatte> {
    let (w, h) = (features.width(), features.height());
    if (w, h) != (trimap.width(), trimap.height()) {
        return Err(MatteError::DimensionMismatch {
            expected_w: w,
            expected_h: h,
            got_w: trimap.width(),
            got_h: trimap.height(),
        });
    }
    let mut alpha: Vec<f64> = trimap
        .labels()
        .iter()
        .map(|l| if *l == Label::ForegroundKnown { 1.0 } else { 0.0 })
        .collect();
    let unknown: Vec<usize> = (0..w * h).filter(|&i| trimap.labels()[i] == Label::Unknown).collect();
    if !unknown.is_empty() {
        trimap.check_known_regions()?;
        if segments.foreground.is_empty() || segments.background.is_empty() {
            return Err(MatteError::InvalidTrimap("known region has no superpixels".into()));
        }
        let estimates: Vec<f64> = unknown
            .par_iter()
            .map(|&i| {
                let (df, db) = build_dictionaries(
                    (i % w, i / w),
                    &segments.foreground,
                    &segments.background,
                    params.radius,
                    params.min_atoms,
                );
                estimate_alpha(residuals(features.get(i), &df, &db, params.lambda))
            })
            .collect();
        for (&i, a) in unknown.iter().zip(estimates) {
            alpha[i] = a;
        }
    }
    AlphaMatte::new(w, h, index, MatteStage::Initial, alpha)
}

/// Initial per-frame matte: features, known-region superpixels, then per-pixel estimates.
pub fn estimate_frame_matte(frame: &Frame, trimap: &Trimap, params: &MatteParams) -> Result<AlphaMatte> {
    let segments = segment_known_regions(frame, trimap, params)?;
    let features = compute_feature_map(frame);
    matte_from_segments(frame.index(), &features, trimap, &segments, params)
}
