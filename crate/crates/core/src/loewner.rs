//! Loewner pencil of block snapshots and the truncated parametric
//! realization `(ℰ, 𝒜, ℬ, 𝒞, 𝒳, 𝒴)`.
//!
//! With left points `πᵢ` and right points `φⱼ`, block `(i, j)` of the Loewner
//! matrix is `(G(πᵢ) - G(φⱼ)) / (πᵢ - φⱼ)` and of the shifted Loewner matrix
//! `(πᵢ G(πᵢ) - φⱼ G(φⱼ)) / (πᵢ - φⱼ)`. Projecting onto the leading singular
//! subspaces `X_r`, `Y_r` gives the interpolant
//! `Ĝ(p) = 𝒲 Y_r (X_rᵀ(𝕃ₛ - p𝕃) Y_r)⁻¹ X_rᵀ 𝒱`, whose pieces are stored in
//! [`ParametricRealization`].
//!
//! Sign convention: `𝒦(p) = X_rᵀ(𝕃ₛ - p𝕃) Y_r = pℰ - 𝒜` with
//! `ℰ = -X_rᵀ𝕃 Y_r` and `𝒜 = -X_rᵀ𝕃ₛ Y_r`.

use faer::{Mat, MatRef};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::{Dims, SnapshotSet};
use crate::numkit::{self, Lu, MatR, SvdResult, RANK_REL_TOL};

/// Relative threshold below which singular values never count toward the
/// truncation rank.
pub const TRUNCATION_FLOOR: f64 = 1e-12;

/// Split of the samples into left (`π`) and right (`φ`) points.
///
/// Entries are `(index into the snapshot set, parameter value)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    left: Vec<(usize, f64)>,
    right: Vec<(usize, f64)>,
}

impl Partition {
    /// Sorts the samples ascending and deals them out alternately, starting
    /// with the left set: `M = ⌈n_p/2⌉`, `N = ⌊n_p/2⌋`.
    pub fn alternating(params: &[f64]) -> Result<Self> {
        check_params(params)?;
        let mut order: Vec<usize> = (0..params.len()).collect();
        order.sort_by(|&a, &b| params[a].total_cmp(&params[b]));
        let (mut left, mut right) = (Vec::new(), Vec::new());
        for (pos, &idx) in order.iter().enumerate() {
            let entry = (idx, params[idx]);
            if pos % 2 == 0 {
                left.push(entry);
            } else {
                right.push(entry);
            }
        }
        Ok(Self { left, right })
    }

    /// Uses the given left/right values verbatim, matched exactly against
    /// `params`.
    pub fn explicit(params: &[f64], left: &[f64], right: &[f64]) -> Result<Self> {
        check_params(params)?;
        let find = |v: f64| {
            params
                .iter()
                .position(|&p| p == v)
                .map(|i| (i, v))
                .ok_or_else(|| Error::InvalidPartition(format!("{v} is not one of the samples")))
        };
        let left = left.iter().map(|&v| find(v)).collect::<Result<Vec<_>>>()?;
        let right = right.iter().map(|&v| find(v)).collect::<Result<Vec<_>>>()?;
        let part = Self { left, right };
        part.validate(params.len())?;
        Ok(part)
    }

    /// Checks that the partition covers `count` samples exactly once with
    /// nonempty sides.
    pub fn validate(&self, count: usize) -> Result<()> {
        if self.left.is_empty() || self.right.is_empty() {
            return Err(Error::InvalidPartition("both sides need at least one point".into()));
        }
        let mut seen = vec![false; count];
        for &(i, _) in self.left.iter().chain(&self.right) {
            if i >= count {
                return Err(Error::InvalidPartition(format!("sample index {i} out of range")));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidPartition(format!("sample {i} used twice")));
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidPartition(format!("sample {i} is in neither set")));
        }
        for &(_, a) in &self.left {
            if self.right.iter().any(|&(_, b)| a == b) {
                return Err(Error::DuplicateParameter(a));
            }
        }
        Ok(())
    }

    pub fn left(&self) -> &[(usize, f64)] {
        &self.left
    }

    pub fn right(&self) -> &[(usize, f64)] {
        &self.right
    }

    pub fn left_values(&self) -> Vec<f64> {
        self.left.iter().map(|e| e.1).collect()
    }

    pub fn right_values(&self) -> Vec<f64> {
        self.right.iter().map(|e| e.1).collect()
    }
}

fn check_params(params: &[f64]) -> Result<()> {
    let mut sorted = params.to_vec();
    sorted.sort_by(f64::total_cmp);
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::DuplicateParameter(w[0]));
    }
    if params.len() < 2 {
        return Err(Error::TooFewParameters(params.len()));
    }
    Ok(())
}

/// Loewner and shifted Loewner matrices, filled column strip by column strip
/// in parallel.
pub fn loewner_matrices(snapshots: &SnapshotSet, partition: &Partition) -> Result<(MatR, MatR)> {
    partition.validate(snapshots.len())?;
    let (k1, k2) = snapshots.dims().block_shape();
    let (m, n) = (partition.left.len(), partition.right.len());
    let strips: Vec<(MatR, MatR)> = partition
        .right
        .par_iter()
        .map(|&(jdx, phi)| {
            let gphi = &snapshots.get(jdx).g;
            let mut l = Mat::<f64>::zeros(m * k1, k2);
            let mut ls = Mat::<f64>::zeros(m * k1, k2);
            for (i, &(idx, pi)) in partition.left.iter().enumerate() {
                let gpi = &snapshots.get(idx).g;
                let den = pi - phi;
                for c in 0..k2 {
                    for r in 0..k1 {
                        let (a, b) = (gpi[(r, c)], gphi[(r, c)]);
                        l[(i * k1 + r, c)] = (a - b) / den;
                        ls[(i * k1 + r, c)] = (pi * a - phi * b) / den;
                    }
                }
            }
            (l, ls)
        })
        .collect();
    let mut l = Mat::<f64>::zeros(m * k1, n * k2);
    let mut ls = Mat::<f64>::zeros(m * k1, n * k2);
    for (j, (sl, sls)) in strips.into_iter().enumerate() {
        l.submatrix_mut(0, j * k2, m * k1, k2).copy_from(&sl);
        ls.submatrix_mut(0, j * k2, m * k1, k2).copy_from(&sls);
    }
    Ok((l, ls))
}

fn hcat(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> MatR {
    let mut out = Mat::zeros(a.nrows(), a.ncols() + b.ncols());
    out.submatrix_mut(0, 0, a.nrows(), a.ncols()).copy_from(a);
    out.submatrix_mut(0, a.ncols(), b.nrows(), b.ncols()).copy_from(b);
    out
}

fn vcat(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> MatR {
    let mut out = Mat::zeros(a.nrows() + b.nrows(), a.ncols());
    out.submatrix_mut(0, 0, a.nrows(), a.ncols()).copy_from(a);
    out.submatrix_mut(a.nrows(), 0, b.nrows(), b.ncols()).copy_from(b);
    out
}

/// Loewner pencil together with the data matrices and both singular
/// value decompositions.
#[derive(Clone, Debug)]
pub struct LoewnerPencil {
    pub dims: Dims,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    /// Loewner matrix `𝕃`, `M(n+n_o) x N(n+n_i)`.
    pub l: MatR,
    /// Shifted Loewner matrix `𝕃ₛ`.
    pub ls: MatR,
    /// `[G(π₁); …; G(π_M)]`.
    pub v: MatR,
    /// `[G(φ₁) … G(φ_N)]`.
    pub w: MatR,
    /// Singular values of `[𝕃 𝕃ₛ]`.
    pub sv_row: Vec<f64>,
    /// Singular values of `[𝕃; 𝕃ₛ]`.
    pub sv_col: Vec<f64>,
    /// Left singular vectors of `[𝕃 𝕃ₛ]`.
    pub x: MatR,
    /// Right singular vectors of `[𝕃; 𝕃ₛ]`.
    pub y: MatR,
}

/// Builds the pencil and computes both SVDs.
pub fn build_pencil(snapshots: &SnapshotSet, partition: &Partition) -> Result<LoewnerPencil> {
    let (l, ls) = loewner_matrices(snapshots, partition)?;
    let dims = snapshots.dims();
    let (k1, k2) = dims.block_shape();
    let (m, n) = (partition.left.len(), partition.right.len());

    let mut v = Mat::<f64>::zeros(m * k1, k2);
    for (i, &(idx, _)) in partition.left.iter().enumerate() {
        v.submatrix_mut(i * k1, 0, k1, k2).copy_from(&snapshots.get(idx).g);
    }
    let mut w = Mat::<f64>::zeros(k1, n * k2);
    for (j, &(idx, _)) in partition.right.iter().enumerate() {
        w.submatrix_mut(0, j * k2, k1, k2).copy_from(&snapshots.get(idx).g);
    }

    let SvdResult {
        u: x,
        singular_values: sv_row,
        ..
    } = numkit::svd(hcat(l.as_ref(), ls.as_ref()).as_ref())?;
    let col = numkit::svd(vcat(l.as_ref(), ls.as_ref()).as_ref())?;
    let y = col.v();

    Ok(LoewnerPencil {
        dims,
        left: partition.left_values(),
        right: partition.right_values(),
        l,
        ls,
        v,
        w,
        sv_row,
        sv_col: col.singular_values,
        x,
        y,
    })
}

/// Smallest `r` whose discarded relative energy
/// `sqrt(Σ_{i>r} σᵢ² / Σ σᵢ²)` is at most `eps`.
pub fn tail_energy_rank(singular_values: &[f64], eps: f64) -> usize {
    let total: f64 = singular_values.iter().map(|s| s * s).sum();
    if total == 0.0 {
        return 0;
    }
    let mut tail = total;
    for (r, s) in singular_values.iter().enumerate() {
        if (tail / total).max(0.0).sqrt() <= eps {
            return r;
        }
        tail -= s * s;
    }
    singular_values.len()
}

/// The cumulative-energy rule read literally:
/// `min { k : eps ≤ sqrt(Σ_{i<k} σᵢ² / Σ σᵢ²) }`. Kept only to report when it
/// disagrees with [`tail_energy_rank`]; for small `eps` it returns 2.
pub fn literal_rule_rank(singular_values: &[f64], eps: f64) -> usize {
    let total: f64 = singular_values.iter().map(|s| s * s).sum();
    if total == 0.0 {
        return 0;
    }
    // k counts from 1 and the sum covers σ₁..σ_{k-1}
    let mut head = 0.0;
    for (k, s) in singular_values.iter().enumerate() {
        if eps <= (head / total).sqrt() {
            return k + 1;
        }
        head += s * s;
    }
    singular_values.len()
}

/// Outcome of the truncation-rank selection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Truncation {
    /// Rank used for the realization.
    pub rank: usize,
    /// Same rule applied to the singular values of `[𝕃; 𝕃ₛ]`.
    pub column_rank: usize,
    /// Literal cumulative-energy reading.
    pub literal_rank: usize,
}

impl Truncation {
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.column_rank != self.rank {
            out.push(format!(
                "truncation rank from [L; Ls] is {} but from [L Ls] is {}",
                self.column_rank, self.rank
            ));
        }
        if self.literal_rank != self.rank {
            out.push(format!(
                "cumulative-energy truncation rule read literally gives r = {}, tail-energy rule gives r = {}",
                self.literal_rank, self.rank
            ));
        }
        out
    }
}

impl LoewnerPencil {
    pub fn left_count(&self) -> usize {
        self.left.len()
    }

    pub fn right_count(&self) -> usize {
        self.right.len()
    }

    /// Truncation rank from the singular values of `[𝕃 𝕃ₛ]`.
    pub fn truncation_rank(&self, eps: f64) -> usize {
        self.truncation(eps).rank
    }

    pub fn truncation(&self, eps: f64) -> Truncation {
        let cap = |sv: &[f64]| numkit::numerical_rank(sv, TRUNCATION_FLOOR);
        Truncation {
            rank: tail_energy_rank(&self.sv_row, eps).min(cap(&self.sv_row)),
            column_rank: tail_energy_rank(&self.sv_col, eps).min(cap(&self.sv_col)),
            literal_rank: literal_rule_rank(&self.sv_row, eps),
        }
    }

    /// Largest admissible truncation rank.
    pub fn max_rank(&self) -> usize {
        self.x.ncols().min(self.y.ncols())
    }

    /// Checks `rank(p𝕃 - 𝕃ₛ) = rank([𝕃 𝕃ₛ]) = rank([𝕃; 𝕃ₛ])` at each `p`.
    pub fn regularity(&self, params: &[f64]) -> Result<Regularity> {
        let row_rank = numkit::numerical_rank(&self.sv_row, RANK_REL_TOL);
        let col_rank = numkit::numerical_rank(&self.sv_col, RANK_REL_TOL);
        let pencil_ranks = params
            .iter()
            .map(|&p| {
                let m = Mat::from_fn(self.l.nrows(), self.l.ncols(), |i, j| {
                    p * self.l[(i, j)] - self.ls[(i, j)]
                });
                numkit::rank(m.as_ref(), RANK_REL_TOL).map(|r| (p, r))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Regularity {
            row_rank,
            col_rank,
            pencil_ranks,
        })
    }

    /// Truncated realization of rank `r`.
    pub fn realize(&self, r: usize) -> Result<ParametricRealization> {
        let max = self.max_rank();
        if r == 0 || r > max {
            return Err(Error::RankOutOfRange { r, max });
        }
        let Dims { n, n_i, n_o } = self.dims;
        let xr = self.x.subcols(0, r);
        let yr = self.y.subcols(0, r);
        let xt_v = xr.transpose() * &self.v;
        let w_y = &self.w * yr;
        let e = -(xr.transpose() * &self.l * yr);
        let a = -(xr.transpose() * &self.ls * yr);
        ParametricRealization::new(
            self.dims,
            e,
            a,
            xt_v.subcols(n, n_i).to_owned(),
            w_y.subrows(n, n_o).to_owned(),
            xt_v.subcols(0, n).to_owned(),
            w_y.subrows(0, n).to_owned(),
        )
    }
}

/// Ranks entering the regularity condition of the pencil.
#[derive(Clone, Debug)]
pub struct Regularity {
    pub row_rank: usize,
    pub col_rank: usize,
    pub pencil_ranks: Vec<(f64, usize)>,
}

impl Regularity {
    pub fn holds(&self) -> bool {
        self.row_rank == self.col_rank && self.pencil_ranks.iter().all(|&(_, r)| r == self.row_rank)
    }

    pub fn warnings(&self) -> Vec<String> {
        if self.holds() {
            return Vec::new();
        }
        let detail = self
            .pencil_ranks
            .iter()
            .map(|(p, r)| format!("p={p}: {r}"))
            .collect::<Vec<_>>()
            .join(", ");
        vec![format!(
            "rank regularity fails: rank [L Ls] = {}, rank [L; Ls] = {}, rank(pL - Ls) = {{{detail}}}",
            self.row_rank, self.col_rank
        )]
    }
}

/// Truncated parametric realization `(ℰ, 𝒜, ℬ, 𝒞, 𝒳, 𝒴)`.
#[derive(Clone, Debug)]
pub struct ParametricRealization {
    dims: Dims,
    e: MatR,
    a: MatR,
    b: MatR,
    c: MatR,
    x: MatR,
    y: MatR,
    xy: MatR,
}

impl ParametricRealization {
    /// Assembles a realization from its six matrices, checking their shapes.
    pub fn new(dims: Dims, e: MatR, a: MatR, b: MatR, c: MatR, x: MatR, y: MatR) -> Result<Self> {
        let r = e.nrows();
        let Dims { n, n_i, n_o } = dims;
        let expect = [
            ("E", &e, (r, r)),
            ("A", &a, (r, r)),
            ("B", &b, (r, n_i)),
            ("C", &c, (n_o, r)),
            ("X", &x, (r, n)),
            ("Y", &y, (n, r)),
        ];
        for (name, m, shape) in expect {
            if (m.nrows(), m.ncols()) != shape {
                return Err(Error::Dimension(format!(
                    "realization matrix {name} is {}x{}, expected {}x{}",
                    m.nrows(),
                    m.ncols(),
                    shape.0,
                    shape.1
                )));
            }
        }
        let xy = &x * &y;
        Ok(Self {
            dims,
            e,
            a,
            b,
            c,
            x,
            y,
            xy,
        })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn rank(&self) -> usize {
        self.e.nrows()
    }

    pub fn e(&self) -> &MatR {
        &self.e
    }

    pub fn a(&self) -> &MatR {
        &self.a
    }

    pub fn b(&self) -> &MatR {
        &self.b
    }

    pub fn c(&self) -> &MatR {
        &self.c
    }

    pub fn x(&self) -> &MatR {
        &self.x
    }

    pub fn y(&self) -> &MatR {
        &self.y
    }

    /// `𝒳𝒴`.
    pub fn xy(&self) -> &MatR {
        &self.xy
    }

    /// `𝒦(p) = pℰ - 𝒜`.
    pub fn k_of(&self, p: f64) -> MatR {
        Mat::from_fn(self.rank(), self.rank(), |i, j| p * self.e[(i, j)] - self.a[(i, j)])
    }

    /// Interpolant `Ĝ(p) = [𝒴; 𝒞] 𝒦(p)⁻¹ [𝒳 ℬ]`.
    pub fn g_hat(&self, p: f64) -> Result<MatR> {
        let Dims { n, n_i, n_o } = self.dims;
        let lu = Lu::new(self.k_of(p).as_ref())?;
        let rhs = hcat(self.x.as_ref(), self.b.as_ref());
        let sol = lu.solve(rhs.as_ref()).map_err(|_| Error::SingularAt {
            what: "K(p)",
            s: faer::c64::new(f64::NAN, f64::NAN),
            p,
        })?;
        let left = vcat(self.y.as_ref(), self.c.as_ref());
        let g = left * sol;
        debug_assert_eq!((g.nrows(), g.ncols()), (n + n_o, n + n_i));
        Ok(g)
    }
}

/// Free-function form of [`ParametricRealization::g_hat`].
pub fn eval_g_hat(real: &ParametricRealization, p: f64) -> Result<MatR> {
    real.g_hat(p)
}
