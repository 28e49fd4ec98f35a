//! Coordinate compression: per-dimension sorted value arrays and integer rank
//! tuples, plus translation of a query box into rank bounds.

use crate::error::Error;
use crate::model::{Query, TrainingSet};

/// Per-dimension sorted coordinate arrays and the rank tuple of every
/// training point. Repeated values keep their multiplicity; ties are ranked
/// by original point index, so the mapping is deterministic.
///
/// Ranks are 1-based; rank 0 is the empty-prefix sentinel.
#[derive(Debug, Clone)]
pub struct DiscretizationIndex {
    /// `sorted[j]` holds the dimension-j values ascending (points first on
    /// ties, then reserved values in list order).
    sorted: Vec<Vec<f64>>,
    /// Rank tuples of the training points, row-major `n * d`.
    ranks: Vec<u32>,
    d: usize,
}

impl DiscretizationIndex {
    /// Compresses the coordinates of `ts`, one sort per dimension.
    pub fn new(ts: &TrainingSet) -> Self {
        Self::with_reserve(ts, &[]).expect("empty reserve cannot fail")
    }

    /// Compresses `ts` with additional reserved values per dimension, so that
    /// points at those coordinates can be inserted later without rebuilding.
    /// `reserve` is either empty or one list per dimension.
    pub fn with_reserve(ts: &TrainingSet, reserve: &[Vec<f64>]) -> Result<Self, Error> {
        let d = ts.dim();
        let n = ts.len();
        if !reserve.is_empty() && reserve.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: reserve.len() });
        }
        for list in reserve {
            if list.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { what: "reserved coordinate" });
            }
        }

        let mut sorted = Vec::with_capacity(d);
        let mut ranks = vec![0u32; n * d];
        for j in 0..d {
            let extra = reserve.get(j).map_or(0, Vec::len);
            let mut values = Vec::with_capacity(n + extra);
            for i in 0..n {
                values.push(ts.point(i)[j]);
            }
            if let Some(list) = reserve.get(j) {
                values.extend_from_slice(list);
            }
            let mut order: Vec<u32> = (0..values.len() as u32).collect();
            // Stable sort keeps duplicates in original-index order.
            order.sort_by(|&a, &b| values[a as usize].total_cmp(&values[b as usize]));
            let lambda: Vec<f64> = order.iter().map(|&i| values[i as usize]).collect();
            for (pos, &src) in order.iter().enumerate() {
                if (src as usize) < n {
                    ranks[src as usize * d + j] = pos as u32 + 1;
                }
            }
            sorted.push(lambda);
        }
        Ok(Self { sorted, ranks, d })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Rank-space size of dimension `j` (training points plus reserved slots).
    pub fn size(&self, j: usize) -> u32 {
        self.sorted[j].len() as u32
    }

    pub fn sizes(&self) -> Vec<u32> {
        (0..self.d).map(|j| self.size(j)).collect()
    }

    /// The sorted value array of dimension `j`.
    pub fn sorted_values(&self, j: usize) -> &[f64] {
        &self.sorted[j]
    }

    /// The 1-based rank tuple of training point `i`.
    pub fn rank_tuple(&self, i: usize) -> &[u32] {
        &self.ranks[i * self.d..(i + 1) * self.d]
    }

    /// Per-dimension rank bounds `(L_j, U_j)` of the query box: `L_j` counts
    /// values strictly below `z_j - h/2`, `U_j` counts values at most
    /// `z_j + h/2`. A point lies in the box iff `L_j < rank_j <= U_j` for
    /// every j; 0 means "no such value".
    pub fn window_bounds(&self, q: &Query) -> Result<Vec<(u32, u32)>, Error> {
        if q.dim() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: q.dim() });
        }
        let half = q.h() / 2.0;
        let mut bounds = Vec::with_capacity(self.d);
        for j in 0..self.d {
            let lo = q.z()[j] - half;
            let hi = q.z()[j] + half;
            let lambda = &self.sorted[j];
            let lower = lambda.partition_point(|&v| v < lo) as u32;
            let upper = lambda.partition_point(|&v| v <= hi) as u32;
            bounds.push((lower, upper));
        }
        Ok(bounds)
    }

    /// A rank whose sorted value equals `v` exactly (the last such position),
    /// used when inserting new points into a fixed rank space.
    pub fn rank_for_value(&self, j: usize, v: f64) -> Option<u32> {
        let lambda = &self.sorted[j];
        let pos = lambda.partition_point(|&x| x <= v);
        (pos > 0 && lambda[pos - 1] == v).then_some(pos as u32)
    }
}
