//! Sparse d-dimensional binary indexed tree over moment vectors.
//!
//! For d >= 2 nodes are materialized lazily: only tuples touched by an
//! update exist, which keeps storage near `n (log n)^d` instead of `n^d`.
//! The node map is an exact sparse associative map keyed by the packed rank
//! tuple; its bucket function is the composite per-dimension hash, with
//! collisions resolved by full-key comparison. One dimension has no blowup
//! to avoid and uses the classic dense array instead.

use std::collections::HashMap;
use std::hash::{BuildHasher, Hash, Hasher};
use std::sync::Arc;

use crate::compensated;
use crate::error::Error;
use crate::model::MomentVector;

/// Ranks visited by a prefix query starting at `i`: repeatedly strip the
/// least significant bit, stopping before 0. Length equals `popcount(i)`.
pub fn interrogation_path(i: u32) -> Vec<u32> {
    let mut path = Vec::with_capacity(i.count_ones() as usize);
    let mut i = i;
    while i > 0 {
        path.push(i);
        i -= lsb(i);
    }
    path
}

/// Ranks visited by a point update starting at `i`: repeatedly add the least
/// significant bit, truncated at values above `n`.
pub fn update_path(i: u32, n: u32) -> Vec<u32> {
    let mut path = Vec::new();
    let mut i = i;
    while i >= 1 && i <= n {
        path.push(i);
        i += lsb(i);
    }
    path
}

#[inline]
fn lsb(i: u32) -> u32 {
    i & i.wrapping_neg()
}

const MERSENNE_61: u64 = (1 << 61) - 1;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One per-dimension hash: a degree-4 polynomial over the Mersenne prime
/// field, giving 5-wise independence on rank inputs.
#[derive(Debug, Clone)]
struct DimHash {
    coeffs: [u64; 5],
}

impl DimHash {
    fn eval(&self, x: u64) -> u64 {
        let x = x as u128;
        let mut acc = self.coeffs[0] as u128;
        for &c in &self.coeffs[1..] {
            acc = mod_mersenne(acc * x + c as u128);
        }
        acc as u64
    }
}

#[inline]
fn mod_mersenne(x: u128) -> u128 {
    let p = MERSENNE_61 as u128;
    let r = (x & p) + (x >> 61);
    if r >= p { r - p } else { r }
}

/// The composite hash `H(i_1..i_d) = (h_1(i_1) + ... + h_d(i_d)) mod b`
/// mapping rank tuples to buckets. Identical tuples always collide with
/// themselves; distinct tuples collide only by hash accident, which the node
/// map resolves by exact key comparison.
#[derive(Debug, Clone)]
pub struct CompositeHash {
    dims: Arc<[DimHash]>,
}

impl CompositeHash {
    /// Derives `d` per-dimension hash functions from a seed.
    pub fn new(d: usize, seed: u64) -> Self {
        let mut state = seed;
        let dims: Vec<DimHash> = (0..d)
            .map(|_| {
                let mut coeffs = [0u64; 5];
                for c in &mut coeffs {
                    *c = splitmix64(&mut state) % MERSENNE_61;
                }
                DimHash { coeffs }
            })
            .collect();
        Self { dims: dims.into() }
    }

    /// Unreduced composite value (the sum of per-dimension hashes).
    pub fn combined(&self, tuple: &[u32]) -> u64 {
        debug_assert_eq!(tuple.len(), self.dims.len());
        tuple
            .iter()
            .zip(self.dims.iter())
            .fold(0u64, |acc, (&i, h)| acc.wrapping_add(h.eval(i as u64)))
    }

    /// Bucket index in `0..b`.
    pub fn bucket(&self, tuple: &[u32], b: u64) -> u64 {
        self.combined(tuple) % b
    }
}

/// Layout of packed keys: each dimension occupies a fixed bit field wide
/// enough for its rank space.
#[derive(Debug, Clone)]
struct KeyLayout {
    shifts: Vec<u32>,
    widths: Vec<u32>,
}

impl KeyLayout {
    fn new(sizes: &[u32]) -> Result<Self, Error> {
        let mut shifts = Vec::with_capacity(sizes.len());
        let mut widths = Vec::with_capacity(sizes.len());
        let mut total = 0u32;
        for &n in sizes {
            let bits = 32 - n.leading_zeros().min(31);
            shifts.push(total);
            widths.push(bits);
            total += bits;
            if total > 128 {
                return Err(Error::RankSpaceTooLarge);
            }
        }
        Ok(Self { shifts, widths })
    }

    #[inline]
    fn pack(&self, tuple: &[u32]) -> u128 {
        let mut key = 0u128;
        for (j, &r) in tuple.iter().enumerate() {
            key |= (r as u128) << self.shifts[j];
        }
        key
    }
}

/// Hasher state that unpacks a key and sums the per-dimension hashes; the
/// node map's buckets are therefore exactly the composite hash buckets.
pub struct NodeHasher {
    core: Arc<HasherCore>,
    acc: u64,
}

#[derive(Debug)]
struct HasherCore {
    dims: Arc<[DimHash]>,
    shifts: Vec<u32>,
    masks: Vec<u128>,
}

impl Hasher for NodeHasher {
    fn finish(&self) -> u64 {
        self.acc
    }

    fn write(&mut self, bytes: &[u8]) {
        // Keys only hash through write_u128.
        for &b in bytes {
            self.acc = self.acc.wrapping_add(b as u64);
        }
    }

    fn write_u128(&mut self, key: u128) {
        for (j, h) in self.core.dims.iter().enumerate() {
            let r = ((key >> self.core.shifts[j]) & self.core.masks[j]) as u64;
            self.acc = self.acc.wrapping_add(h.eval(r));
        }
    }
}

#[derive(Debug, Clone)]
pub struct BuildNodeHasher {
    core: Arc<HasherCore>,
}

impl BuildHasher for BuildNodeHasher {
    type Hasher = NodeHasher;

    fn build_hasher(&self) -> NodeHasher {
        NodeHasher { core: Arc::clone(&self.core), acc: 0 }
    }
}

fn collapse(sums: &mut [f64], comps: &[f64]) {
    for (s, c) in sums.iter_mut().zip(comps) {
        *s += c;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct NodeKey(u128);

impl Hash for NodeKey {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u128(self.0);
    }
}

// Hash function seed. Fixed so that builds are reproducible; the seed only
// influences bucket placement, never any query result.
const HASH_SEED: u64 = 0x9A3C_51F2_0D4B_7E68;

/// Node storage. One dimension is kept as the classic dense array: after n
/// insertions every rank is touched anyway, direct indexing beats hashing,
/// and memory stays at the O(Ln) the one-dimensional sweep needs. Higher
/// dimensions use the lazy sparse map, which is the whole point of the
/// structure there (a dense grid would cost n^d).
#[derive(Debug, Clone)]
enum NodeStore {
    Dense {
        /// `(size + 1) * stride` values indexed by rank.
        values: Vec<f64>,
        touched: Vec<bool>,
        entry_count: usize,
    },
    Sparse {
        slots: HashMap<NodeKey, u32, BuildNodeHasher>,
        values: Vec<f64>,
    },
}

/// Sparse d-dimensional binary indexed tree over [`MomentVector`]s.
///
/// Supports point updates and prefix/box queries in `O(log^d n)` node
/// touches. Absent nodes behave as zero vectors. Updates require exclusive
/// access; once built (or between updates) any number of concurrent queries
/// are safe.
///
/// Each node carries a Neumaier compensation term per statistic, so stored
/// sums and the signed prefix combinations stay exact to the last bit; see
/// the `compensated` module.
#[derive(Debug, Clone)]
pub struct FenwickGrid {
    sizes: Vec<u32>,
    stat_len: usize,
    layout: KeyLayout,
    /// Per node: `stat_len` sums followed by `stat_len` compensation terms.
    store: NodeStore,
}

impl FenwickGrid {
    /// An empty grid over the given per-dimension rank-space sizes, storing
    /// `stat_len` statistics per node.
    pub fn new(sizes: &[u32], stat_len: usize) -> Result<Self, Error> {
        if sizes.is_empty() {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        let layout = KeyLayout::new(sizes)?;
        let store = if sizes.len() == 1 {
            NodeStore::Dense {
                values: vec![0.0; (sizes[0] as usize + 1) * 2 * stat_len],
                touched: vec![false; sizes[0] as usize + 1],
                entry_count: 0,
            }
        } else {
            let hash = CompositeHash::new(sizes.len(), HASH_SEED);
            let masks = layout
                .widths
                .iter()
                .map(|&w| (1u128 << w) - 1)
                .collect();
            let core = Arc::new(HasherCore {
                dims: Arc::clone(&hash.dims),
                shifts: layout.shifts.clone(),
                masks,
            });
            NodeStore::Sparse {
                slots: HashMap::with_hasher(BuildNodeHasher { core }),
                values: Vec::new(),
            }
        };
        Ok(Self { sizes: sizes.to_vec(), stat_len, layout, store })
    }

    pub fn dim(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[u32] {
        &self.sizes
    }

    pub fn stat_len(&self) -> usize {
        self.stat_len
    }

    /// Number of materialized (touched) nodes.
    pub fn entry_count(&self) -> usize {
        match &self.store {
            NodeStore::Dense { entry_count, .. } => *entry_count,
            NodeStore::Sparse { slots, .. } => slots.len(),
        }
    }

    /// Adds `t` to every node on the Cartesian product of the per-dimension
    /// update paths of `chi`, materializing nodes on first touch.
    pub fn point_update(&mut self, chi: &[u32], t: &MomentVector) -> Result<(), Error> {
        if chi.len() != self.sizes.len() {
            return Err(Error::DimensionMismatch { expected: self.sizes.len(), got: chi.len() });
        }
        if t.len() != self.stat_len {
            return Err(Error::StatLengthMismatch { expected: self.stat_len, got: t.len() });
        }
        for (j, (&r, &n)) in chi.iter().zip(&self.sizes).enumerate() {
            if r < 1 || r > n {
                return Err(Error::RankOutOfRange { dim: j, rank: r, size: n });
            }
        }

        let stride = 2 * self.stat_len;
        let stat_len = self.stat_len;
        if let NodeStore::Dense { values, touched, entry_count } = &mut self.store {
            let n = self.sizes[0];
            let mut i = chi[0];
            while i <= n {
                if !touched[i as usize] {
                    touched[i as usize] = true;
                    *entry_count += 1;
                }
                let base = i as usize * stride;
                let (sums, comps) = values[base..base + stride].split_at_mut(stat_len);
                for ((sum, comp), &x) in sums.iter_mut().zip(comps.iter_mut()).zip(t.values()) {
                    compensated::add(sum, comp, x);
                }
                i += lsb(i);
            }
            return Ok(());
        }

        let paths: Vec<Vec<u32>> = chi
            .iter()
            .zip(&self.sizes)
            .map(|(&r, &n)| update_path(r, n))
            .collect();
        let NodeStore::Sparse { slots, values } = &mut self.store else {
            unreachable!("dense handled above")
        };
        let d = paths.len();
        let mut cursor = vec![0usize; d];
        let mut node = vec![0u32; d];
        loop {
            for j in 0..d {
                node[j] = paths[j][cursor[j]];
            }
            let key = NodeKey(self.layout.pack(&node));
            let slot = match slots.entry(key) {
                std::collections::hash_map::Entry::Occupied(e) => *e.get(),
                std::collections::hash_map::Entry::Vacant(e) => {
                    let slot = (values.len() / stride) as u32;
                    values.resize(values.len() + stride, 0.0);
                    *e.insert(slot)
                }
            };
            let base = slot as usize * stride;
            let (sums, comps) = values[base..base + stride].split_at_mut(stat_len);
            for ((sum, comp), &x) in sums.iter_mut().zip(comps.iter_mut()).zip(t.values()) {
                compensated::add(sum, comp, x);
            }

            let mut j = 0;
            loop {
                if j == d {
                    return Ok(());
                }
                cursor[j] += 1;
                if cursor[j] < paths[j].len() {
                    break;
                }
                cursor[j] = 0;
                j += 1;
            }
        }
    }

    /// Sum of the statistics of all points whose rank tuple is dominated by
    /// `idx` component-wise. Any zero component yields the zero vector.
    pub fn prefix_query(&self, idx: &[u32]) -> MomentVector {
        debug_assert_eq!(idx.len(), self.sizes.len());
        let mut sums = vec![0.0; self.stat_len];
        let mut comps = vec![0.0; self.stat_len];
        self.prefix_into(idx, 1.0, &mut sums, &mut comps);
        collapse(&mut sums, &comps);
        MomentVector::from_values(sums)
    }

    /// Sum over the box `L_j < rank_j <= U_j`, via inclusion-exclusion over
    /// the `2^d` corner prefixes.
    pub fn box_query(&self, bounds: &[(u32, u32)]) -> MomentVector {
        let (mut sums, comps) = self.box_query_parts(bounds);
        collapse(&mut sums, &comps);
        MomentVector::from_values(sums)
    }

    /// As [`Self::box_query`], but returns the accumulator and its
    /// compensation separately so downstream consumers can keep the extra
    /// precision through their own cancelling sums.
    pub(crate) fn box_query_parts(&self, bounds: &[(u32, u32)]) -> (Vec<f64>, Vec<f64>) {
        debug_assert_eq!(bounds.len(), self.sizes.len());
        debug_assert!(bounds
            .iter()
            .zip(&self.sizes)
            .all(|(&(lo, hi), &n)| lo <= hi && hi <= n));
        let d = bounds.len();
        let mut sums = vec![0.0; self.stat_len];
        let mut comps = vec![0.0; self.stat_len];
        if bounds.iter().any(|&(lo, hi)| lo == hi) {
            return (sums, comps);
        }
        let mut corner = vec![0u32; d];
        for mask in 0u32..(1 << d) {
            for (j, c) in corner.iter_mut().enumerate() {
                let (lo, hi) = bounds[j];
                *c = if mask & (1 << j) != 0 { lo } else { hi };
            }
            let sign = if mask.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            self.prefix_into(&corner, sign, &mut sums, &mut comps);
        }
        (sums, comps)
    }

    fn prefix_into(&self, idx: &[u32], sign: f64, sums: &mut [f64], comps: &mut [f64]) {
        if idx.contains(&0) {
            return;
        }
        let stride = 2 * self.stat_len;

        if let NodeStore::Dense { values, .. } = &self.store {
            let mut i = idx[0];
            while i > 0 {
                let base = i as usize * stride;
                let (node_sums, node_comps) = values[base..base + stride].split_at(self.stat_len);
                for l in 0..self.stat_len {
                    compensated::add(&mut sums[l], &mut comps[l], sign * node_sums[l]);
                    compensated::add(&mut sums[l], &mut comps[l], sign * node_comps[l]);
                }
                i -= lsb(i);
            }
            return;
        }

        let NodeStore::Sparse { slots, values } = &self.store else {
            unreachable!("dense handled above")
        };
        let paths: Vec<Vec<u32>> = idx.iter().map(|&i| interrogation_path(i)).collect();
        let d = paths.len();
        let mut cursor = vec![0usize; d];
        let mut node = vec![0u32; d];
        loop {
            for j in 0..d {
                node[j] = paths[j][cursor[j]];
            }
            let key = NodeKey(self.layout.pack(&node));
            if let Some(&slot) = slots.get(&key) {
                let base = slot as usize * stride;
                let (node_sums, node_comps) = values[base..base + stride].split_at(self.stat_len);
                for l in 0..self.stat_len {
                    compensated::add(&mut sums[l], &mut comps[l], sign * node_sums[l]);
                    compensated::add(&mut sums[l], &mut comps[l], sign * node_comps[l]);
                }
            }

            let mut j = 0;
            loop {
                if j == d {
                    return;
                }
                cursor[j] += 1;
                if cursor[j] < paths[j].len() {
                    break;
                }
                cursor[j] = 0;
                j += 1;
            }
        }
    }

    #[cfg(test)]
    fn stored_nodes(&self) -> Vec<Vec<u32>> {
        let mut nodes: Vec<Vec<u32>> = match &self.store {
            NodeStore::Dense { touched, .. } => touched
                .iter()
                .enumerate()
                .filter(|(_, &t)| t)
                .map(|(i, _)| vec![i as u32])
                .collect(),
            NodeStore::Sparse { slots, .. } => slots
                .keys()
                .map(|k| {
                    (0..self.dim())
                        .map(|j| {
                            ((k.0 >> self.layout.shifts[j])
                                & ((1u128 << self.layout.widths[j]) - 1))
                                as u32
                        })
                        .collect()
                })
                .collect(),
        };
        nodes.sort();
        nodes
    }
}
