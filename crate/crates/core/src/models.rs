//! Parametric LTI models with polynomial parameter dependence.
//!
//! A model is stored through the coefficients of its block matrix
//! `G(p) = [A(p) B(p); C(p) D(p)] = Σₖ pᵏ Γₖ`, each `Γₖ` of shape
//! `(n + n_o) x (n + n_i)`.

use faer::{c64, Mat, MatRef};

use crate::error::{Error, Result};
use crate::numkit::{lu_solve, to_complex, MatC, MatR};

/// State, input and output dimensions of a realization.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dims {
    pub n: usize,
    pub n_i: usize,
    pub n_o: usize,
}

impl Dims {
    pub fn new(n: usize, n_i: usize, n_o: usize) -> Self {
        Self { n, n_i, n_o }
    }

    /// Shape `(n + n_o, n + n_i)` of a snapshot block matrix.
    pub fn block_shape(&self) -> (usize, usize) {
        (self.n + self.n_o, self.n + self.n_i)
    }
}

/// The four realization blocks `(A, B, C, D)` at one parameter value.
#[derive(Clone, Debug)]
pub struct Blocks {
    pub a: MatR,
    pub b: MatR,
    pub c: MatR,
    pub d: MatR,
}

impl Blocks {
    /// Splits `G` at row and column `n`.
    pub fn split(g: MatRef<'_, f64>, n: usize) -> Self {
        let (rows, cols) = (g.nrows(), g.ncols());
        Self {
            a: g.submatrix(0, 0, n, n).to_owned(),
            b: g.submatrix(0, n, n, cols - n).to_owned(),
            c: g.submatrix(n, 0, rows - n, n).to_owned(),
            d: g.submatrix(n, n, rows - n, cols - n).to_owned(),
        }
    }

    /// `[A B; C D]`.
    pub fn assemble(&self) -> MatR {
        let n = self.a.nrows();
        let (rows, cols) = (n + self.c.nrows(), n + self.b.ncols());
        Mat::from_fn(rows, cols, |i, j| match (i < n, j < n) {
            (true, true) => self.a[(i, j)],
            (true, false) => self.b[(i, j - n)],
            (false, true) => self.c[(i - n, j)],
            (false, false) => self.d[(i - n, j - n)],
        })
    }

    /// `C (sI - A)⁻¹ B + D`.
    pub fn transfer(&self, s: c64) -> Result<MatC> {
        let n = self.a.nrows();
        let resolvent = Mat::from_fn(n, n, |i, j| {
            let diag = if i == j { s } else { c64::new(0.0, 0.0) };
            diag - c64::new(self.a[(i, j)], 0.0)
        });
        let x = lu_solve(resolvent.as_ref(), to_complex(self.b.as_ref()).as_ref())?;
        Ok(to_complex(self.c.as_ref()) * x + to_complex(self.d.as_ref()))
    }
}

/// Parametric model `G(p) = Σₖ pᵏ Γₖ`.
#[derive(Clone, Debug)]
pub struct ParametricModel {
    dims: Dims,
    gamma: Vec<MatR>,
}

impl ParametricModel {
    /// Builds a model from its coefficients `Γ₀, …, Γ_h`.
    ///
    /// Every coefficient must have the block shape implied by `dims`, and the
    /// leading coefficient must be nonzero unless the model is constant.
    pub fn new(dims: Dims, gamma: Vec<MatR>) -> Result<Self> {
        if gamma.is_empty() {
            return Err(Error::InvalidInput("model needs at least Γ₀".into()));
        }
        let shape = dims.block_shape();
        for (k, g) in gamma.iter().enumerate() {
            if (g.nrows(), g.ncols()) != shape {
                return Err(Error::Dimension(format!(
                    "Γ{k} is {}x{}, expected {}x{}",
                    g.nrows(),
                    g.ncols(),
                    shape.0,
                    shape.1
                )));
            }
            if !(0..g.ncols()).all(|j| (0..g.nrows()).all(|i| g[(i, j)].is_finite())) {
                return Err(Error::NonFinite(format!("Γ{k}")));
            }
        }
        let h = gamma.len() - 1;
        if h > 0 && gamma[h].norm_max() == 0.0 {
            return Err(Error::InvalidInput(format!(
                "leading coefficient Γ{h} is identically zero"
            )));
        }
        Ok(Self { dims, gamma })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    /// Polynomial degree `h`.
    pub fn degree(&self) -> usize {
        self.gamma.len() - 1
    }

    pub fn gamma(&self) -> &[MatR] {
        &self.gamma
    }

    /// `G(p)` by Horner's scheme.
    pub fn eval_g(&self, p: f64) -> MatR {
        let (rows, cols) = self.dims.block_shape();
        let top = &self.gamma[self.degree()];
        let mut acc = top.clone();
        for k in (0..self.degree()).rev() {
            let coeff = &self.gamma[k];
            acc = Mat::from_fn(rows, cols, |i, j| acc[(i, j)] * p + coeff[(i, j)]);
        }
        acc
    }

    pub fn eval_blocks(&self, p: f64) -> Blocks {
        Blocks::split(self.eval_g(p).as_ref(), self.dims.n)
    }

    pub fn snapshot(&self, p: f64) -> Snapshot {
        Snapshot {
            p,
            g: self.eval_g(p),
        }
    }

    /// Snapshots at every value of `params`, in the given order.
    pub fn snapshots(&self, params: &[f64]) -> Result<SnapshotSet> {
        SnapshotSet::new(self.dims, params.iter().map(|&p| self.snapshot(p)).collect())
    }

    /// Reference transfer function `C(p)(sI - A(p))⁻¹B(p) + D(p)`.
    pub fn true_tf(&self, s: c64, p: f64) -> Result<MatC> {
        self.eval_blocks(p).transfer(s)
    }
}

/// Realization matrices at one parameter value, as the block matrix `G(p)`.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub p: f64,
    pub g: MatR,
}

impl Snapshot {
    pub fn blocks(&self, n: usize) -> Blocks {
        Blocks::split(self.g.as_ref(), n)
    }
}

/// Snapshots at pairwise distinct parameters sharing one block shape.
#[derive(Clone, Debug)]
pub struct SnapshotSet {
    dims: Dims,
    snapshots: Vec<Snapshot>,
}

impl SnapshotSet {
    pub fn new(dims: Dims, snapshots: Vec<Snapshot>) -> Result<Self> {
        let shape = dims.block_shape();
        for s in &snapshots {
            if (s.g.nrows(), s.g.ncols()) != shape {
                return Err(Error::Dimension(format!(
                    "snapshot at p = {} is {}x{}, expected {}x{}",
                    s.p,
                    s.g.nrows(),
                    s.g.ncols(),
                    shape.0,
                    shape.1
                )));
            }
            if !s.p.is_finite() {
                return Err(Error::NonFinite(format!("parameter value {}", s.p)));
            }
        }
        let mut sorted: Vec<f64> = snapshots.iter().map(|s| s.p).collect();
        sorted.sort_by(f64::total_cmp);
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateParameter(w[0]));
        }
        Ok(Self { dims, snapshots })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn params(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.p).collect()
    }

    pub fn get(&self, index: usize) -> &Snapshot {
        &self.snapshots[index]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Snapshot> {
        self.snapshots.iter()
    }
}

/// Names and one-line descriptions of the built-in models.
pub const BUILTINS: &[(&str, &str)] = &[
    ("toy", "3 states, SISO, affine: A(p) = [-2 p 0; -p -1 0; 0 0 -1], B = Cᵀ = (1, 0, 1)ᵀ"),
    ("toy_modified", "toy system with A₃₃ = -p instead of -1"),
    ("polynomial", "3 states, SISO, cubic dependence on p"),
    ("penzl", "1006 states, SISO, affine: three rotation blocks and -diag(1..1000)"),
];

fn dense(rows: &[&[f64]]) -> MatR {
    Mat::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
}

/// Returns a built-in model by name.
pub fn builtin(name: &str) -> Result<ParametricModel> {
    let siso3 = Dims::new(3, 1, 1);
    match name {
        "toy" => ParametricModel::new(
            siso3,
            vec![
                dense(&[
                    &[-2.0, 0.0, 0.0, 1.0],
                    &[0.0, -1.0, 0.0, 0.0],
                    &[0.0, 0.0, -1.0, 1.0],
                    &[1.0, 0.0, 1.0, 0.0],
                ]),
                dense(&[
                    &[0.0, 1.0, 0.0, 0.0],
                    &[-1.0, 0.0, 0.0, 0.0],
                    &[0.0, 0.0, 0.0, 0.0],
                    &[0.0, 0.0, 0.0, 0.0],
                ]),
            ],
        ),
        "toy_modified" => ParametricModel::new(
            siso3,
            vec![
                dense(&[
                    &[-2.0, 0.0, 0.0, 1.0],
                    &[0.0, -1.0, 0.0, 0.0],
                    &[0.0, 0.0, 0.0, 1.0],
                    &[1.0, 0.0, 1.0, 0.0],
                ]),
                dense(&[
                    &[0.0, 1.0, 0.0, 0.0],
                    &[-1.0, 0.0, 0.0, 0.0],
                    &[0.0, 0.0, -1.0, 0.0],
                    &[0.0, 0.0, 0.0, 0.0],
                ]),
            ],
        ),
        "polynomial" => ParametricModel::new(
            siso3,
            vec![
                dense(&[
                    &[-2.0, 0.0, 0.0, 1.0],
                    &[0.0, -1.0, 0.0, 0.0],
                    &[0.0, 0.0, -1.0, 1.0],
                    &[1.0, 0.0, 1.0, 0.0],
                ]),
                dense(&[
                    &[0.0, -1.0, 0.0, 0.0],
                    &[-1.0, 0.0, -0.5, 1.0],
                    &[0.0, -0.5, 0.0, 0.0],
                    &[0.0, 0.0, 0.0, 0.0],
                ]),
                dense(&[
                    &[0.1, 0.0, 0.2, 0.0],
                    &[0.0, 1.0, 0.0, 0.0],
                    &[-0.2, 0.0, 0.0, 0.0],
                    &[0.0, 0.0, 0.0, 0.0],
                ]),
                dense(&[
                    &[0.0, 1.0, 0.0, 0.0],
                    &[-1.0, 0.0, 0.0, 0.0],
                    &[0.0, -10.0, 0.0, 0.0],
                    &[0.0, 0.0, 0.0, 0.0],
                ]),
            ],
        ),
        "penzl" => Ok(penzl()),
        _ => Err(Error::UnknownBuiltin {
            name: name.to_string(),
            valid: BUILTINS.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", "),
        }),
    }
}

fn penzl() -> ParametricModel {
    const N: usize = 1006;
    let io = |i: usize| if i < 6 { 10.0 } else { 1.0 };
    let mut g0 = Mat::<f64>::zeros(N + 1, N + 1);
    for (k, w) in [0.0, 200.0, 400.0].into_iter().enumerate() {
        let o = 2 * k;
        g0[(o, o)] = -1.0;
        g0[(o + 1, o + 1)] = -1.0;
        g0[(o, o + 1)] = w;
        g0[(o + 1, o)] = -w;
    }
    for k in 0..1000 {
        g0[(6 + k, 6 + k)] = -((k + 1) as f64);
    }
    for i in 0..N {
        g0[(i, N)] = io(i);
        g0[(N, i)] = io(i);
    }
    let mut g1 = Mat::<f64>::zeros(N + 1, N + 1);
    g1[(0, 1)] = 1.0;
    g1[(1, 0)] = -1.0;
    ParametricModel::new(Dims::new(N, 1, 1), vec![g0, g1]).expect("penzl coefficients are consistent")
}
