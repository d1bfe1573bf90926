//! Rank bounds for Loewner pencils of polynomially parameter-dependent
//! snapshots.
//!
//! For `G(p) = Σₖ pᵏ Γₖ` the pencil blocks are Kronecker-structured:
//! `𝕃 = Σₖ Ξₖ ⊙ (𝟙 ⊗ Γₖ)` and `𝕃ₛ = Σₖ Ξₖ₊₁ ⊙ (𝟙 ⊗ Γₖ)` where block `(i, j)`
//! of `Ξₖ` is `(πᵢᵏ - φⱼᵏ)/(πᵢ - φⱼ)` times the all-ones block. Hence
//! `rank 𝕃 ≤ Σₖ rank Γₖ · rank Ξₖ` and `rank 𝕃ₛ ≤ Σₖ rank Γₖ · rank Ξₖ₊₁`,
//! with equality `rank 𝕃 = rank Γ₁` in the affine case.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loewner::{loewner_matrices, Partition};
use crate::models::ParametricModel;
use crate::numkit::{rank, MatR, RANK_REL_TOL};

/// `Σ_{m<k} πᵐ φ^{k-1-m}`, the divided difference of `xᵏ` at `π ≠ φ`.
pub fn xi_value(k: usize, pi: f64, phi: f64) -> f64 {
    (0..k).map(|m| pi.powi(m as i32) * phi.powi((k - 1 - m) as i32)).sum()
}

/// The `M x N` matrix of block values of `Ξₖ`.
pub fn xi_scalar(k: usize, partition: &Partition) -> MatR {
    let (l, r) = (partition.left_values(), partition.right_values());
    Mat::from_fn(l.len(), r.len(), |i, j| xi_value(k, l[i], r[j]))
}

/// `Ξₖ` with `block_rows x block_cols` constant blocks.
pub fn xi_matrix(k: usize, partition: &Partition, block_rows: usize, block_cols: usize) -> MatR {
    let s = xi_scalar(k, partition);
    Mat::from_fn(s.nrows() * block_rows, s.ncols() * block_cols, |i, j| {
        s[(i / block_rows, j / block_cols)]
    })
}

/// Rank of `Ξₖ`, computed on its block values.
pub fn xi_rank(k: usize, partition: &Partition) -> Result<usize> {
    rank(xi_scalar(k, partition).as_ref(), RANK_REL_TOL)
}

/// Pair of values for `𝕃` and `𝕃ₛ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PencilPair {
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "Ls")]
    pub ls: usize,
}

/// Actual pencil ranks against their bounds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankReport {
    #[serde(rename = "rank_L")]
    pub rank_l: usize,
    #[serde(rename = "rank_Ls")]
    pub rank_ls: usize,
    pub bounds: PencilPair,
    #[serde(rename = "bound_L")]
    pub bound_l: usize,
    #[serde(rename = "bound_Ls")]
    pub bound_ls: usize,
    /// `rank Γₖ` for `k = 0..=h`.
    #[serde(rename = "per_gamma")]
    pub rank_gamma: Vec<usize>,
    /// `rank Ξₖ` for `k = 0..=h+1`.
    #[serde(rename = "per_xi")]
    pub rank_xi: Vec<usize>,
    /// `(rank 𝕃 ≤ bound, rank 𝕃ₛ ≤ bound)`; in the affine case the first
    /// entry requires equality.
    pub holds: (bool, bool),
    /// `rank 𝕃 == rank Γ₁`, present for affine models only.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub affine_equality: Option<bool>,
}

impl RankReport {
    pub fn all_hold(&self) -> bool {
        self.holds.0 && self.holds.1
    }
}

/// Rank bounds for any polynomial degree.
pub fn poly_bounds(model: &ParametricModel, partition: &Partition) -> Result<RankReport> {
    let h = model.degree();
    let params: Vec<f64> = {
        let mut v: Vec<(usize, f64)> = partition.left().iter().chain(partition.right()).copied().collect();
        v.sort_by_key(|e| e.0);
        v.into_iter().map(|e| e.1).collect()
    };
    let set = model.snapshots(&params)?;
    let (l, ls) = loewner_matrices(&set, partition)?;
    let rank_l = rank(l.as_ref(), RANK_REL_TOL)?;
    let rank_ls = rank(ls.as_ref(), RANK_REL_TOL)?;
    let rank_gamma = model
        .gamma()
        .iter()
        .map(|g| rank(g.as_ref(), RANK_REL_TOL))
        .collect::<Result<Vec<_>>>()?;
    let rank_xi = (0..=h + 1).map(|k| xi_rank(k, partition)).collect::<Result<Vec<_>>>()?;
    let bound_l = (0..=h).map(|k| rank_gamma[k] * rank_xi[k]).sum();
    let bound_ls = (0..=h).map(|k| rank_gamma[k] * rank_xi[k + 1]).sum();
    Ok(RankReport {
        rank_l,
        rank_ls,
        bounds: PencilPair {
            l: bound_l,
            ls: bound_ls,
        },
        bound_l,
        bound_ls,
        rank_gamma,
        rank_xi,
        holds: (rank_l <= bound_l, rank_ls <= bound_ls),
        affine_equality: None,
    })
}

/// Bounds for an affine model, `rank 𝕃 = rank Γ₁` and
/// `rank 𝕃ₛ ≤ rank Γ₀ + rank Γ₁ · rank Ξ₂`.
pub fn affine_bounds(model: &ParametricModel, partition: &Partition) -> Result<RankReport> {
    if model.degree() != 1 {
        return Err(Error::Degree {
            degree: model.degree(),
            hint: "affine bounds need degree 1; use the polynomial bounds",
        });
    }
    let mut report = poly_bounds(model, partition)?;
    let equal = report.rank_l == report.rank_gamma[1];
    report.affine_equality = Some(equal);
    report.holds.0 = equal;
    Ok(report)
}

/// Affine bounds for degree 1, polynomial bounds otherwise.
pub fn bounds(model: &ParametricModel, partition: &Partition) -> Result<RankReport> {
    if model.degree() == 1 {
        affine_bounds(model, partition)
    } else {
        poly_bounds(model, partition)
    }
}
