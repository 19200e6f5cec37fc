//! Locality-sensitive hash tables over Walsh-Hadamard projection vectors.

use std::collections::HashMap;

use rand::seq::index::sample;
use rand::Rng;

use super::walsh::Projections;

/// Bits spent on each quantized coordinate.
pub const BITS_PER_COORD: u32 = 4;

/// One table: a random subset of projection coordinates, each quantized with its own
/// randomly scaled and offset bin width.
#[derive(Debug, Clone)]
pub struct HashTable {
    coords: Vec<usize>,
    origin: Vec<f64>,
    bin_width: Vec<f64>,
    offset: Vec<f64>,
    buckets: HashMap<u64, Vec<u32>>,
}

impl HashTable {
    pub fn key(&self, projection: &[f64]) -> u64 {
        let levels = 1i64 << BITS_PER_COORD;
        let mut key = 0u64;
        for (k, &c) in self.coords.iter().enumerate() {
            let q = ((projection[c] - self.origin[k]) / self.bin_width[k] + self.offset[k]).floor() as i64;
            let q = (q + levels / 2).clamp(0, levels - 1) as u64;
            key = (key << BITS_PER_COORD) | q;
        }
        key
    }

    pub fn bucket(&self, key: u64) -> &[u32] {
        self.buckets.get(&key).map_or(&[], Vec::as_slice)
    }

    pub fn buckets(&self) -> impl Iterator<Item = &[u32]> {
        self.buckets.values().map(Vec::as_slice)
    }

    pub fn bucket_count(&self) -> usize {
        self.buckets.len()
    }

    pub fn coords(&self) -> &[usize] {
        &self.coords
    }
}

#[derive(Debug, Clone)]
pub struct HashTables {
    pub tables: Vec<HashTable>,
    /// Per-entry keys, `keys[t][i]` for table `t` and patch `i`.
    keys: Vec<Vec<u64>>,
}

impl HashTables {
    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    #[inline]
    pub fn key_of(&self, table: usize, entry: usize) -> u64 {
        self.keys[table][entry]
    }

    /// Keys of an outside projection set (e.g. the source frame) under these tables.
    pub fn keys_for(&self, projections: &Projections) -> Vec<Vec<u64>> {
        self.tables
            .iter()
            .map(|t| (0..projections.len()).map(|i| t.key(projections.get(i))).collect())
            .collect()
    }
}

fn coordinate_stats(projections: &Projections) -> (Vec<f64>, Vec<f64>) {
    let n = projections.len().max(1) as f64;
    let d = projections.dims;
    let mut mean = vec![0.0; d];
    for i in 0..projections.len() {
        for (m, v) in mean.iter_mut().zip(projections.get(i)) {
            *m += v / n;
        }
    }
    let mut var = vec![0.0; d];
    for i in 0..projections.len() {
        for ((s, v), m) in var.iter_mut().zip(projections.get(i)).zip(&mean) {
            *s += (v - m).powi(2) / n;
        }
    }
    (mean, var.into_iter().map(f64::sqrt).collect())
}

/// Builds `tables` hash tables over `projections`, each keyed by `bits / 4` randomly chosen
/// coordinates quantized to 16 levels.
pub fn build_hash_tables<R: Rng>(projections: &Projections, tables: usize, bits: u32, rng: &mut R) -> HashTables {
    let dims = projections.dims.max(1);
    let per_table = ((bits / BITS_PER_COORD).max(1) as usize).min(dims).min(16);
    let (mean, std) = coordinate_stats(projections);
    let mut out = Vec::with_capacity(tables.max(1));
    let mut keys = Vec::with_capacity(tables.max(1));
    for _ in 0..tables.max(1) {
        let mut coords = sample(rng, dims, per_table).into_vec();
        coords.sort_unstable();
        let scale: f64 = rng.random_range(1.0..2.0);
        let bin_width: Vec<f64> = coords
            .iter()
            .map(|&c| if std[c] > 1e-12 { scale * std[c] } else { 1.0 })
            .collect();
        let offset: Vec<f64> = coords.iter().map(|_| rng.random_range(0.0..1.0)).collect();
        let origin: Vec<f64> = coords.iter().map(|&c| mean[c]).collect();
        let mut table = HashTable {
            coords,
            origin,
            bin_width,
            offset,
            buckets: HashMap::new(),
        };
        let table_keys: Vec<u64> = (0..projections.len()).map(|i| table.key(projections.get(i))).collect();
        for (i, &k) in table_keys.iter().enumerate() {
            table.buckets.entry(k).or_default().push(i as u32);
        }
        out.push(table);
        keys.push(table_keys);
    }
    HashTables { tables: out, keys }
}
