//! Approximate K-nearest-neighbor patch fields between frames via coherency sensitive hashing.
//!
//! Matching runs in two phases. Candidates first come from hash collisions of Walsh-Hadamard
//! projections, then several sweeps propagate matches between neighboring centers (if two
//! patches match, their neighbors likely match at the same offset). Ranking always uses the
//! Gaussian-weighted RGB SSD.

mod hash;
mod walsh;

pub use hash::{build_hash_tables, HashTable, HashTables, BITS_PER_COORD};
pub use walsh::{kernel_order, wh_project, Projections};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{MatteError, Result};
use crate::imaging::Frame;
use crate::patch::{weighted_ssd, CenterGrid, PatchGeometry};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CshParams {
    pub k: usize,
    pub tables: usize,
    pub bits: u32,
    pub iterations: usize,
    pub kernels: usize,
    /// Largest number of entries examined per bucket lookup.
    pub bucket_scan: usize,
    pub seed: u64,
}

impl Default for CshParams {
    fn default() -> Self {
        Self {
            k: 5,
            tables: 4,
            bits: 16,
            iterations: 5,
            kernels: 16,
            bucket_scan: 16,
            seed: 0,
        }
    }
}

/// One matched patch center in the target frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Match {
    /// Index into the target frame's center grid.
    pub index: u32,
    pub x: u32,
    pub y: u32,
    pub distance: f64,
}

/// `k` matches per source center, ascending by distance.
#[derive(Debug, Clone, PartialEq)]
pub struct AknnField {
    pub source: usize,
    pub target: usize,
    pub grid: CenterGrid,
    pub k: usize,
    matches: Vec<Match>,
}

impl AknnField {
    #[inline]
    pub fn matches_for(&self, i: usize) -> &[Match] {
        &self.matches[i * self.k..(i + 1) * self.k]
    }

    #[inline]
    pub fn best(&self, i: usize) -> &Match {
        &self.matches[i * self.k]
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn all_matches(&self) -> &[Match] {
        &self.matches
    }
}

/// Bounded, sorted candidate list for one source center.
///
/// Ties in distance go to the smaller displacement, then the smaller index, so an exact
/// zero-motion match wins over other zero-distance matches.
struct TopK {
    k: usize,
    origin: (usize, usize),
    items: Vec<(f64, u64, usize)>,
}

impl TopK {
    fn new(k: usize, origin: (usize, usize)) -> Self {
        Self {
            k,
            origin,
            items: Vec::with_capacity(k + 1),
        }
    }

    fn from_matches(k: usize, origin: (usize, usize), matches: &[Match]) -> Self {
        let mut t = Self::new(k, origin);
        for m in matches {
            t.items.push((m.distance, t.displacement(m.x as usize, m.y as usize), m.index as usize));
        }
        t
    }

    #[inline]
    fn displacement(&self, x: usize, y: usize) -> u64 {
        let dx = x.abs_diff(self.origin.0) as u64;
        let dy = y.abs_diff(self.origin.1) as u64;
        dx * dx + dy * dy
    }

    #[inline]
    fn contains(&self, index: usize) -> bool {
        self.items.iter().any(|it| it.2 == index)
    }

    #[inline]
    fn worst(&self) -> Option<&(f64, u64, usize)> {
        if self.items.len() < self.k {
            None
        } else {
            self.items.last()
        }
    }

    fn offer(&mut self, dist: f64, x: usize, y: usize, index: usize) {
        let entry = (dist, self.displacement(x, y), index);
        if let Some(w) = self.worst() {
            if !less(&entry, w) {
                return;
            }
        }
        let pos = self.items.iter().position(|it| less(&entry, it)).unwrap_or(self.items.len());
        self.items.insert(pos, entry);
        self.items.truncate(self.k);
    }

    fn into_matches(self, grid: &CenterGrid, out: &mut Vec<Match>) {
        for (distance, _, index) in self.items {
            let (x, y) = grid.center(index);
            out.push(Match {
                index: index as u32,
                x: x as u32,
                y: y as u32,
                distance,
            });
        }
    }
}

#[inline]
fn less(a: &(f64, u64, usize), b: &(f64, u64, usize)) -> bool {
    (a.0, a.1, a.2) < (b.0, b.1, b.2)
}

/// Evaluates candidate `index` for a source center unless it is already listed.
struct Scorer<'a> {
    geom: &'a PatchGeometry,
    src: &'a Frame,
    dst: &'a Frame,
    grid: &'a CenterGrid,
}

impl Scorer<'_> {
    #[inline]
    fn offer(&self, top: &mut TopK, a: (usize, usize), index: usize) {
        if top.contains(index) {
            return;
        }
        let (x, y) = self.grid.center(index);
        let d = weighted_ssd(self.geom, self.src, a, self.dst, (x, y));
        top.offer(d, x, y, index);
    }
}

/// Visits at most `cap` bucket entries, evenly strided from a query-dependent start.
#[inline]
fn scan_bucket(bucket: &[u32], cap: usize, salt: usize, mut f: impl FnMut(usize)) {
    if bucket.len() <= cap {
        bucket.iter().for_each(|&i| f(i as usize));
    } else {
        let stride = bucket.len() / cap;
        let start = salt % bucket.len();
        for n in 0..cap {
            f(bucket[(start + n * stride) % bucket.len()] as usize);
        }
    }
}

fn check_same_dims(a: &Frame, b: &Frame) -> Result<()> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(MatteError::DimensionMismatch {
            expected_w: a.width(),
            expected_h: a.height(),
            got_w: b.width(),
            got_h: b.height(),
        });
    }
    Ok(())
}

fn seed_for(params: &CshParams, src: usize, dst: usize) -> u64 {
    params
        .seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add((src as u64) << 32 | dst as u64)
}

/// AKNN field from patches of `src` into `dst` using coherency sensitive hashing.
///
/// `k` is capped at the number of target centers.
pub fn csh_match(src: &Frame, dst: &Frame, geom: &PatchGeometry, params: &CshParams) -> Result<AknnField> {
    check_same_dims(src, dst)?;
    let src_proj = wh_project(src, geom.width(), params.kernels)?;
    let dst_proj = wh_project(dst, geom.width(), params.kernels)?;
    let grid = src_proj.grid;
    let n = grid.len();
    let k = params.k.max(1).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed_for(params, src.index(), dst.index()));
    let tables = build_hash_tables(&dst_proj, params.tables, params.bits, &mut rng);
    let src_keys = tables.keys_for(&src_proj);
    let scorer = Scorer {
        geom,
        src,
        dst,
        grid: &grid,
    };
    let cap = params.bucket_scan.max(1);

    // source buckets, for source-to-source collisions
    let mut src_buckets: Vec<std::collections::HashMap<u64, Vec<u32>>> = vec![Default::default(); tables.len()];
    for (t, keys) in src_keys.iter().enumerate() {
        for (i, &key) in keys.iter().enumerate() {
            src_buckets[t].entry(key).or_default().push(i as u32);
        }
    }

    let mut field: Vec<Match> = Vec::with_capacity(n * k);
    for a in 0..n {
        let pos = grid.center(a);
        let mut top = TopK::new(k, pos);
        scorer.offer(&mut top, pos, a);
        for (t, table) in tables.tables.iter().enumerate() {
            scan_bucket(table.bucket(src_keys[t][a]), cap, a, |b| scorer.offer(&mut top, pos, b));
        }
        // fill up with the zero-motion neighborhood when collisions were scarce
        let mut ring = 1isize;
        while top.items.len() < k {
            for dy in -ring..=ring {
                for dx in -ring..=ring {
                    if dx.abs().max(dy.abs()) == ring {
                        if let Some(b) = grid.shifted(pos.0, pos.1, dx, dy) {
                            scorer.offer(&mut top, pos, b);
                        }
                    }
                }
            }
            ring += 1;
        }
        top.into_matches(&grid, &mut field);
    }

    const NEIGHBORS: [(isize, isize); 4] = [(-1, 0), (0, -1), (1, 0), (0, 1)];
    let mut scratch = Vec::with_capacity(k);
    for it in 0..params.iterations {
        let order: Box<dyn Iterator<Item = usize>> = if it % 2 == 0 {
            Box::new(0..n)
        } else {
            Box::new((0..n).rev())
        };
        for a in order {
            let pos = grid.center(a);
            let mut top = TopK::from_matches(k, pos, &field[a * k..(a + 1) * k]);
            // propagation: shifted best matches of the 4-neighborhood
            for &(dx, dy) in &NEIGHBORS {
                let Some(nb) = grid.shifted(pos.0, pos.1, dx, dy) else {
                    continue;
                };
                let m = field[nb * k];
                if let Some(b) = grid.shifted(m.x as usize, m.y as usize, -dx, -dy) {
                    scorer.offer(&mut top, pos, b);
                }
            }
            // target-side collisions of the current matches
            for j in 0..k {
                let b = field[a * k + j].index as usize;
                for (t, table) in tables.tables.iter().enumerate() {
                    scan_bucket(table.bucket(tables.key_of(t, b)), cap / 4 + 1, a + j, |c| {
                        scorer.offer(&mut top, pos, c)
                    });
                }
            }
            // source-side collisions: matches of similar source patches, shifted
            for (t, keys) in src_keys.iter().enumerate() {
                if let Some(bucket) = src_buckets[t].get(&keys[a]) {
                    scan_bucket(bucket, cap / 4 + 1, a + it, |s| {
                        if s != a {
                            scorer.offer(&mut top, pos, field[s * k].index as usize);
                        }
                    });
                }
            }
            scratch.clear();
            top.into_matches(&grid, &mut scratch);
            field[a * k..(a + 1) * k].copy_from_slice(&scratch);
        }
    }

    Ok(AknnField {
        source: src.index(),
        target: dst.index(),
        grid,
        k,
        matches: field,
    })
}

/// Two-hop AKNN field `T -> T±2` from `near` (`T -> T±1`) and `far` (`T±1 -> T±2`).
///
/// Candidates for each center are the `far` matches of its `near` matches, re-ranked by the
/// weighted SSD against the original patch in `frame`.
pub fn extend_aknn(
    near: &AknnField,
    far: &AknnField,
    frame: &Frame,
    far_frame: &Frame,
    geom: &PatchGeometry,
) -> Result<AknnField> {
    if near.target != far.source {
        return Err(MatteError::MissingField(format!(
            "cannot chain {}->{} with {}->{}",
            near.source, near.target, far.source, far.target
        )));
    }
    if far.target != far_frame.index() || near.source != frame.index() {
        return Err(MatteError::MissingField(format!(
            "frames {}/{} do not match fields {}->{}->{}",
            frame.index(),
            far_frame.index(),
            near.source,
            near.target,
            far.target
        )));
    }
    check_same_dims(frame, far_frame)?;
    if near.grid != far.grid {
        return Err(MatteError::MissingField("fields use different center grids".into()));
    }
    let grid = near.grid;
    let k = near.k.min(far.k).max(1);
    let scorer = Scorer {
        geom,
        src: frame,
        dst: far_frame,
        grid: &grid,
    };
    let mut out = Vec::with_capacity(grid.len() * k);
    for a in 0..grid.len() {
        let pos = grid.center(a);
        let mut top = TopK::new(k, pos);
        for m in near.matches_for(a) {
            for m2 in far.matches_for(m.index as usize) {
                scorer.offer(&mut top, pos, m2.index as usize);
            }
        }
        top.into_matches(&grid, &mut out);
    }
    Ok(AknnField {
        source: near.source,
        target: far.target,
        grid,
        k,
        matches: out,
    })
}

/// Best-match distance for every center by exhaustive search, for validating approximate fields.
pub fn exhaustive_best(src: &Frame, dst: &Frame, geom: &PatchGeometry) -> Result<Vec<f64>> {
    check_same_dims(src, dst)?;
    let grid = geom.grid(src.width(), src.height())?;
    Ok((0..grid.len())
        .map(|a| {
            let pa = grid.center(a);
            (0..grid.len())
                .map(|b| weighted_ssd(geom, src, pa, dst, grid.center(b)))
                .fold(f64::INFINITY, f64::min)
        })
        .collect())
}
