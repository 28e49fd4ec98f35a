//! The sufficient statistics: raw per-point monomial contributions,
//! re-centering of accumulated raw sums at a test point, and assembly of the
//! normal-equations system.
//!
//! The tree stores raw (uncentered) monomial sums so that it stays
//! query-independent; each query re-centers the accumulated sums at its own
//! test point via the multivariate binomial theorem, an O(D^2)-ish step whose
//! cost does not depend on n.

use crate::compensated::{self, Dd};
use crate::error::Error;
use crate::model::{BasisSpec, MomentVector};

/// The statistic contribution of a single point: `x^alpha` for every
/// unweighted entry (|alpha| <= 2k) and `y * x^alpha` for every weighted
/// entry (|alpha| <= k, zero when `y` is absent). `0^0 = 1`, so the leading
/// entry is always the point count.
pub fn raw_statistics(spec: &BasisSpec, x: &[f64], y: Option<f64>) -> Result<MomentVector, Error> {
    if x.len() != spec.dim() {
        return Err(Error::DimensionMismatch { expected: spec.dim(), got: x.len() });
    }
    let max_degree = 2 * spec.degree();
    let powers = power_table(x, max_degree);

    let mut values = Vec::with_capacity(spec.stat_len());
    for index in spec.unweighted_indices() {
        values.push(monomial(&powers, max_degree, index.exponents()));
    }
    let y = y.unwrap_or(0.0);
    for index in spec.weighted_indices() {
        values.push(y * monomial(&powers, max_degree, index.exponents()));
    }
    Ok(MomentVector::from_values(values))
}

/// `powers[j * (max_degree + 1) + e] = x_j^e`, with `x^0 = 1` even at zero.
fn power_table(x: &[f64], max_degree: usize) -> Vec<f64> {
    let width = max_degree + 1;
    let mut powers = vec![1.0; x.len() * width];
    for (j, &xj) in x.iter().enumerate() {
        for e in 1..width {
            powers[j * width + e] = powers[j * width + e - 1] * xj;
        }
    }
    powers
}

#[inline]
fn monomial(powers: &[f64], max_degree: usize, exponents: &[u32]) -> f64 {
    let width = max_degree + 1;
    exponents
        .iter()
        .enumerate()
        .fold(1.0, |acc, (j, &e)| acc * powers[j * width + e as usize])
}

/// Re-centers accumulated raw sums at `z`: returns the same-layout vector
/// whose entries are `sum prod_j (x_j - z_j)^beta_j` (and the y-weighted
/// analogue), each expanded over the raw entries as
/// `sum_{gamma <= beta} prod_j C(beta_j, gamma_j) (-z_j)^(beta_j - gamma_j) raw[gamma]`.
pub fn shift_moments(spec: &BasisSpec, raw: &MomentVector, z: &[f64]) -> Result<MomentVector, Error> {
    if raw.len() != spec.stat_len() {
        return Err(Error::StatLengthMismatch { expected: spec.stat_len(), got: raw.len() });
    }
    shift_moments_parts(spec, raw.values(), &[], z)
}

/// As [`shift_moments`], but takes the raw sums as `(sums, residues)` pairs
/// so that compensation terms from the tree survive into the expansion.
/// `residues` may be empty. The expansion cancels heavily for small windows
/// away from the origin, so the coefficient chain and every product are
/// carried in double-double precision; the result is correctly rounded for
/// all practical magnitudes.
pub(crate) fn shift_moments_parts(
    spec: &BasisSpec,
    sums: &[f64],
    residues: &[f64],
    z: &[f64],
) -> Result<MomentVector, Error> {
    if z.len() != spec.dim() {
        return Err(Error::DimensionMismatch { expected: spec.dim(), got: z.len() });
    }
    let max_degree = 2 * spec.degree();
    let width = max_degree + 1;
    let mut neg_powers = vec![Dd::ONE; spec.dim() * width];
    for (j, &zj) in z.iter().enumerate() {
        for e in 1..width {
            neg_powers[j * width + e] = neg_powers[j * width + e - 1].mul_f64(-zj);
        }
    }

    let mut out = Vec::with_capacity(spec.stat_len());
    for terms in spec.shift_plan() {
        let mut acc = 0.0;
        let mut comp = 0.0;
        for term in terms {
            let mut coef = Dd::from_f64(term.binom);
            for (j, &deficit) in term.deficits.iter().enumerate() {
                coef = coef.mul(neg_powers[j * width + deficit as usize]);
            }
            let src = term.src as usize;
            let raw = Dd::from_sum(sums[src], residues.get(src).copied().unwrap_or(0.0));
            let product = coef.mul(raw);
            compensated::add(&mut acc, &mut comp, product.hi);
            comp += product.lo;
        }
        out.push(acc + comp);
    }
    Ok(MomentVector::from_values(out))
}

/// Builds the normal-equations system from centered sums: `G[a][b]` is the
/// centered sum for `basis[a] + basis[b]` and `r[a]` the weighted centered
/// sum for `basis[a]`. G is symmetric by construction (both triangles read
/// the same table entry).
pub fn assemble_system(spec: &BasisSpec, centered: &MomentVector) -> (Vec<f64>, Vec<f64>) {
    let d = spec.basis_len();
    let values = centered.values();
    let gram_pos = spec.gram_positions();
    let mut g = Vec::with_capacity(d * d);
    for &pos in gram_pos {
        g.push(values[pos as usize]);
    }
    let weighted_offset = spec.unweighted_indices().len();
    let r = values[weighted_offset..weighted_offset + d].to_vec();
    (g, r)
}
