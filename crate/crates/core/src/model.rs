//! Shared domain types: training data, queries, monomial bookkeeping and fit results.

use std::collections::HashMap;

use crate::error::Error;

/// A set of n training points in d dimensions, with optional responses.
///
/// Coordinates are stored row-major (point-major). Responses are present for
/// regression and absent for density estimation.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    coords: Vec<f64>,
    responses: Option<Vec<f64>>,
    n: usize,
    d: usize,
}

impl TrainingSet {
    /// Builds a training set from row-major coordinates (`n * d` values).
    pub fn new(d: usize, coords: Vec<f64>, responses: Option<Vec<f64>>) -> Result<Self, Error> {
        if d == 0 {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        if coords.is_empty() || !coords.len().is_multiple_of(d) {
            return Err(if coords.is_empty() {
                Error::EmptyTrainingSet
            } else {
                Error::DimensionMismatch { expected: d, got: coords.len() % d }
            });
        }
        let n = coords.len() / d;
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "coordinate" });
        }
        if let Some(y) = &responses {
            if y.len() != n {
                return Err(Error::ResponseCount { expected: n, got: y.len() });
            }
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { what: "response" });
            }
        }
        Ok(Self { coords, responses, n, d })
    }

    /// Builds a training set from per-point coordinate rows.
    pub fn from_rows(rows: &[Vec<f64>], responses: Option<Vec<f64>>) -> Result<Self, Error> {
        if rows.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        let d = rows[0].len();
        for row in rows {
            if row.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: row.len() });
            }
        }
        let coords = rows.iter().flatten().copied().collect();
        Self::new(d, coords, responses)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false // n >= 1 by construction
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }

    pub fn responses(&self) -> Option<&[f64]> {
        self.responses.as_deref()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }
}

/// A single evaluation request: a test point and its bandwidth.
///
/// The neighborhood is the axis-aligned box of half-width `h/2` around `z`.
/// Each query carries its own bandwidth, so locally selected bandwidths are
/// expressible without any global state.
#[derive(Debug, Clone)]
pub struct Query {
    z: Vec<f64>,
    h: f64,
}

impl Query {
    pub fn new(z: Vec<f64>, h: f64) -> Result<Self, Error> {
        if z.is_empty() {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "test point coordinate" });
        }
        if !h.is_finite() || h <= 0.0 {
            return Err(Error::InvalidBandwidth { value: h });
        }
        Ok(Self { z, h })
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn dim(&self) -> usize {
        self.z.len()
    }
}

/// A monomial exponent tuple (one exponent per dimension).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    exponents: Vec<u32>,
}

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        Self { exponents }
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    pub fn total_degree(&self) -> u32 {
        self.exponents.iter().sum()
    }

    /// Component-wise sum of two exponent tuples.
    fn add(&self, other: &Self) -> Self {
        let exponents = self
            .exponents
            .iter()
            .zip(&other.exponents)
            .map(|(a, b)| a + b)
            .collect();
        Self { exponents }
    }
}

/// All exponent tuples of dimension `d` with total degree <= `max_degree`,
/// in graded lexicographic order (degree first, then earlier dimensions with
/// higher exponents first). The constant tuple comes first.
pub fn multi_indices_up_to(d: usize, max_degree: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut current = vec![0u32; d];
    for degree in 0..=max_degree {
        emit_compositions(d, degree as u32, 0, &mut current, &mut out);
    }
    out
}

fn emit_compositions(
    d: usize,
    remaining: u32,
    dim: usize,
    current: &mut Vec<u32>,
    out: &mut Vec<MultiIndex>,
) {
    if dim == d - 1 {
        current[dim] = remaining;
        out.push(MultiIndex::new(current.clone()));
        return;
    }
    for e in (0..=remaining).rev() {
        current[dim] = e;
        emit_compositions(d, remaining - e, dim + 1, current, out);
    }
}

/// Binomial coefficient, exact for the small arguments used here.
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as u64
}

/// One term of the binomial re-centering expansion of a centered monomial sum
/// in terms of raw monomial sums.
#[derive(Debug, Clone)]
pub(crate) struct ShiftTerm {
    /// Position of the raw statistic this term reads.
    pub src: u32,
    /// Product of per-dimension binomial coefficients.
    pub binom: f64,
    /// Per-dimension exponent deficits; the term is scaled by `prod (-z_j)^deficit_j`.
    pub deficits: Vec<u32>,
}

/// Degree bookkeeping for a local fit of degree `k` in `d` dimensions.
///
/// Owns the ordered monomial lists: the fitting basis (all multi-indices of
/// total degree <= k, size D) and the statistic layout (raw monomial sums up
/// to degree 2k followed by response-weighted sums up to degree k, total L).
/// Because the ordering is graded, the basis is exactly the first D entries
/// of the degree-2k list.
#[derive(Debug, Clone)]
pub struct BasisSpec {
    d: usize,
    k: usize,
    /// All multi-indices with total degree <= 2k, graded-lex order.
    moments: Vec<MultiIndex>,
    /// Number of basis monomials (total degree <= k); the basis is `moments[..basis_len]`.
    basis_len: usize,
    /// `gram_pos[a * D + b]` = position in `moments` of `basis[a] + basis[b]`.
    gram_pos: Vec<u32>,
    /// Re-centering expansion per statistic entry (length L).
    shift_plan: Vec<Vec<ShiftTerm>>,
    /// Position of each multi-index within `moments`.
    position: HashMap<Vec<u32>, u32>,
}

impl BasisSpec {
    /// Enumerates the monomial bookkeeping for dimension `d` and degree `k`.
    pub fn new(d: usize, k: usize) -> Result<Self, Error> {
        if d == 0 {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        let moments = multi_indices_up_to(d, 2 * k);
        let basis_len = moments
            .iter()
            .position(|m| m.total_degree() > k as u32)
            .unwrap_or(moments.len());

        let mut position = HashMap::with_capacity(moments.len());
        for (i, m) in moments.iter().enumerate() {
            position.insert(m.exponents().to_vec(), i as u32);
        }

        // Every basis-pair product must land inside the degree-2k table.
        let mut gram_pos = Vec::with_capacity(basis_len * basis_len);
        for a in 0..basis_len {
            for b in 0..basis_len {
                let sum = moments[a].add(&moments[b]);
                let pos = position
                    .get(sum.exponents())
                    .expect("basis product within degree 2k");
                gram_pos.push(*pos);
            }
        }

        let binom_table = pascal_table(2 * k);
        let mut shift_plan = Vec::with_capacity(moments.len() + basis_len);
        for target in &moments {
            shift_plan.push(expansion_terms(target, &position, &binom_table, 0));
        }
        let weighted_offset = moments.len() as u32;
        for target in &moments[..basis_len] {
            shift_plan.push(expansion_terms(target, &position, &binom_table, weighted_offset));
        }

        debug_assert_eq!(basis_len as u64, binomial((d + k) as u64, k as u64));
        debug_assert_eq!(
            moments.len() as u64,
            binomial((d + 2 * k) as u64, (2 * k) as u64)
        );

        Ok(Self { d, k, moments, basis_len, gram_pos, shift_plan, position })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    /// Number of basis monomials D = C(d + k, k).
    pub fn basis_len(&self) -> usize {
        self.basis_len
    }

    /// Total statistic count L = C(d + 2k, 2k) + C(d + k, k).
    pub fn stat_len(&self) -> usize {
        self.moments.len() + self.basis_len
    }

    /// The fitting basis: multi-indices of total degree <= k.
    pub fn basis(&self) -> &[MultiIndex] {
        &self.moments[..self.basis_len]
    }

    /// Multi-indices of the unweighted statistic block (total degree <= 2k).
    pub fn unweighted_indices(&self) -> &[MultiIndex] {
        &self.moments
    }

    /// Multi-indices of the response-weighted statistic block (total degree <= k).
    pub fn weighted_indices(&self) -> &[MultiIndex] {
        self.basis()
    }

    /// Position of an exponent tuple within the basis, if present.
    pub fn basis_position(&self, exponents: &[u32]) -> Option<usize> {
        let pos = *self.position.get(exponents)? as usize;
        (pos < self.basis_len).then_some(pos)
    }

    pub(crate) fn gram_positions(&self) -> &[u32] {
        &self.gram_pos
    }

    pub(crate) fn shift_plan(&self) -> &[Vec<ShiftTerm>] {
        &self.shift_plan
    }
}

fn pascal_table(max: usize) -> Vec<Vec<f64>> {
    let mut table = vec![vec![0.0; max + 1]; max + 1];
    for n in 0..=max {
        table[n][0] = 1.0;
        for k in 1..=n {
            table[n][k] = table[n - 1][k - 1] + if k < n { table[n - 1][k] } else { 0.0 };
        }
    }
    table
}

/// Expansion of `sum (x - z)^target` over raw sums `sum x^gamma` for all
/// `gamma <= target` component-wise, with coefficients `prod C(t_j, g_j) (-z_j)^(t_j - g_j)`.
fn expansion_terms(
    target: &MultiIndex,
    position: &HashMap<Vec<u32>, u32>,
    binom_table: &[Vec<f64>],
    offset: u32,
) -> Vec<ShiftTerm> {
    let exps = target.exponents();
    let d = exps.len();
    let mut terms = Vec::new();
    let mut gamma = vec![0u32; d];
    loop {
        let mut binom = 1.0;
        let mut deficits = Vec::with_capacity(d);
        for j in 0..d {
            binom *= binom_table[exps[j] as usize][gamma[j] as usize];
            deficits.push(exps[j] - gamma[j]);
        }
        let src = offset + position[&gamma];
        terms.push(ShiftTerm { src, binom, deficits });

        // Odometer over the box 0..=exps[j] in each dimension.
        let mut dim = 0;
        loop {
            if dim == d {
                return terms;
            }
            if gamma[dim] < exps[dim] {
                gamma[dim] += 1;
                break;
            }
            gamma[dim] = 0;
            dim += 1;
        }
    }
}

/// The L sufficient statistics of one point or of an accumulated region:
/// raw monomial sums up to degree 2k, then response-weighted sums up to
/// degree k, ordered per [`BasisSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct MomentVector {
    values: Vec<f64>,
}

impl MomentVector {
    pub fn zeros(len: usize) -> Self {
        Self { values: vec![0.0; len] }
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn add_assign(&mut self, other: &Self) {
        debug_assert_eq!(self.values.len(), other.values.len());
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
    }
}

/// A solved local fit at one test point.
#[derive(Debug, Clone)]
pub struct LocalFit {
    /// Coefficient vector of length D in the centered basis; all-NaN when the
    /// window was empty or the system unsolvable.
    pub coefficients: Vec<f64>,
    /// Number of training points inside the query box.
    pub window_count: usize,
    /// Set when the window was empty, held fewer points than D, or the
    /// unridged solve detected rank deficiency.
    pub degenerate: bool,
}

impl LocalFit {
    /// The fitted value at the test point (first coefficient: the centered
    /// basis evaluates to the unit vector there).
    pub fn value(&self) -> f64 {
        self.coefficients[0]
    }
}
