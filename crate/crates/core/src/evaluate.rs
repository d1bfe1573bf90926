//! Evaluation of the bivariate transfer function `Ĥ(s, p)`.
//!
//! Two algebraically equivalent formulas are available for `s ≠ 0`:
//!
//! * compact: `Ĥ = 𝒞 Z⁻¹ ℬ` with `Z(s, p) = 𝒦(p) - s⁻¹𝒳𝒴`, a single `r x r`
//!   complex solve but fragile when `Z` is ill conditioned;
//! * precise: `Ĥ = Ĉ(sI - Â)⁻¹B̂ + D̂` with `Â = 𝒴𝒦⁻¹𝒳`, `B̂ = 𝒴𝒦⁻¹ℬ`,
//!   `Ĉ = 𝒞𝒦⁻¹𝒳`, `D̂ = 𝒞𝒦⁻¹ℬ`, one real `r x r` and one complex `n x n`
//!   solve.
//!
//! [`eval`] picks the compact formula whenever the estimated 1-norm condition
//! number of `Z` is at most `eps_cond`, and uses the Schur complement
//! `𝒞𝒦⁻¹(I - 𝒫)ℬ` at `s = 0`.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use faer::{c64, Mat};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::loewner::ParametricRealization;
use crate::models::{Blocks, ParametricModel};
use crate::numkit::{spectral_norm, to_complex, Lu, MatC, MatR};

/// Knobs of the switched evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalConfig {
    /// Largest estimated condition number of `Z` for which the compact
    /// formula is trusted.
    pub eps_cond: f64,
    /// `|s|` at or below which the `s = 0` formula is used.
    pub zero_s_tol: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            eps_cond: 1e6,
            zero_s_tol: 0.0,
        }
    }
}

impl EvalConfig {
    pub fn new(eps_cond: f64, zero_s_tol: f64) -> Result<Self> {
        if !(eps_cond > 1.0) {
            return Err(Error::InvalidInput(format!("eps_cond must exceed 1, got {eps_cond}")));
        }
        if !(zero_s_tol >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "zero_s_tol must be nonnegative, got {zero_s_tol}"
            )));
        }
        Ok(Self {
            eps_cond,
            zero_s_tol,
        })
    }
}

/// Which formula produced a value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    Compact,
    Precise,
    SchurZero,
}

impl Formula {
    pub fn as_str(self) -> &'static str {
        match self {
            Formula::Compact => "compact",
            Formula::Precise => "precise",
            Formula::SchurZero => "schur_zero",
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Formula {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "compact" => Ok(Formula::Compact),
            "precise" => Ok(Formula::Precise),
            "schur_zero" => Ok(Formula::SchurZero),
            other => Err(Error::InvalidInput(format!("unknown formula `{other}`"))),
        }
    }
}

/// Value of `Ĥ(s, p)` with the formula that produced it.
#[derive(Clone, Debug)]
pub struct EvalResult {
    /// `n_o x n_i`.
    pub value: MatC,
    pub formula: Formula,
    /// `κ̃₁(Z(s, p))`; for the `s = 0` path, `κ̃₁(𝒴𝒦(p)⁻¹𝒳)`.
    pub cond_estimate: f64,
}

/// `p`-dependent pieces of the precise and `s = 0` formulas.
struct Reduced {
    k_lu: Lu<f64>,
    /// `𝒴𝒦⁻¹𝒳`, `n x n`.
    a_hat: MatR,
    /// `𝒴𝒦⁻¹ℬ`.
    b_hat: MatR,
    /// `𝒞𝒦⁻¹𝒳`.
    c_hat: MatR,
    /// `𝒞𝒦⁻¹ℬ`.
    d_hat: MatR,
}

/// Everything that depends on `p` only, computed once and reused across
/// frequencies. The reduced matrices are built on first use.
pub struct ParameterSlice<'a> {
    real: &'a ParametricRealization,
    p: f64,
    k: MatR,
    reduced: OnceLock<std::result::Result<Reduced, String>>,
}

impl<'a> ParameterSlice<'a> {
    pub fn new(real: &'a ParametricRealization, p: f64) -> Self {
        Self {
            real,
            p,
            k: real.k_of(p),
            reduced: OnceLock::new(),
        }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    fn singular(&self, what: &'static str, s: c64) -> Error {
        Error::SingularAt { what, s, p: self.p }
    }

    fn reduced(&self, s: c64) -> Result<&Reduced> {
        let got = self.reduced.get_or_init(|| {
            let real = self.real;
            let n = real.dims().n;
            let lu = Lu::new(self.k.as_ref()).map_err(|e| e.to_string())?;
            let mut rhs = Mat::<f64>::zeros(real.rank(), n + real.dims().n_i);
            rhs.subcols_mut(0, n).copy_from(real.x());
            rhs.subcols_mut(n, real.dims().n_i).copy_from(real.b());
            let sol = lu.solve(rhs.as_ref()).map_err(|e| e.to_string())?;
            let (kx, kb) = (sol.subcols(0, n), sol.subcols(n, real.dims().n_i));
            Ok(Reduced {
                a_hat: real.y() * kx,
                b_hat: real.y() * kb,
                c_hat: real.c() * kx,
                d_hat: real.c() * kb,
                k_lu: lu,
            })
        });
        got.as_ref().map_err(|_| self.singular("K(p)", s))
    }

    /// `Z(s, p) = 𝒦(p) - s⁻¹𝒳𝒴`.
    pub fn z(&self, s: c64) -> MatC {
        let inv = c64::new(1.0, 0.0) / s;
        let xy = self.real.xy();
        Mat::from_fn(self.k.nrows(), self.k.ncols(), |i, j| {
            c64::new(self.k[(i, j)], 0.0) - inv * xy[(i, j)]
        })
    }

    fn compact_with(&self, z_lu: &Lu<c64>, s: c64) -> Result<MatC> {
        let b = to_complex(self.real.b().as_ref());
        let sol = z_lu.solve(b.as_ref()).map_err(|_| self.singular("Z(s, p)", s))?;
        Ok(to_complex(self.real.c().as_ref()) * sol)
    }

    /// Compact formula `𝒞 Z(s, p)⁻¹ ℬ`.
    pub fn compact(&self, s: c64) -> Result<MatC> {
        if s == c64::new(0.0, 0.0) {
            return Err(self.singular("Z(s, p)", s));
        }
        let lu = Lu::new(self.z(s).as_ref())?;
        self.compact_with(&lu, s)
    }

    /// The same value written without `s⁻¹`: `s𝒞(spℰ - s𝒜 - 𝒳𝒴)⁻¹ℬ`.
    pub fn compact_scaled(&self, s: c64) -> Result<MatC> {
        let xy = self.real.xy();
        let m = Mat::from_fn(self.k.nrows(), self.k.ncols(), |i, j| {
            s * self.k[(i, j)] - c64::new(xy[(i, j)], 0.0)
        });
        let sol = Lu::new(m.as_ref())?
            .solve(to_complex(self.real.b().as_ref()).as_ref())
            .map_err(|_| self.singular("sK(p) - XY", s))?;
        Ok(to_complex(self.real.c().as_ref()) * sol * faer::Scale(s))
    }

    /// Precise formula `Ĉ(sI - Â)⁻¹B̂ + D̂`.
    pub fn precise(&self, s: c64) -> Result<MatC> {
        let red = self.reduced(s)?;
        let n = red.a_hat.nrows();
        let resolvent = Mat::from_fn(n, n, |i, j| {
            let diag = if i == j { s } else { c64::new(0.0, 0.0) };
            diag - c64::new(red.a_hat[(i, j)], 0.0)
        });
        let sol = Lu::new(resolvent.as_ref())?
            .solve(to_complex(red.b_hat.as_ref()).as_ref())
            .map_err(|_| self.singular("sI - Â(p)", s))?;
        Ok(to_complex(red.c_hat.as_ref()) * sol + to_complex(red.d_hat.as_ref()))
    }

    /// Oblique projector `𝒫(p) = 𝒳(𝒴𝒦⁻¹𝒳)⁻¹𝒴𝒦⁻¹`, `r x r`.
    pub fn projector(&self) -> Result<MatR> {
        let zero = c64::new(0.0, 0.0);
        let red = self.reduced(zero)?;
        let r = self.real.rank();
        // 𝒴𝒦⁻¹ = (𝒦⁻ᵀ𝒴ᵀ)ᵀ
        let k_t = self.k.transpose().to_owned();
        let y_kinv = Lu::new(k_t.as_ref())?
            .solve(self.real.y().transpose())
            .map_err(|_| self.singular("K(p)", zero))?
            .transpose()
            .to_owned();
        let inner = Lu::new(red.a_hat.as_ref())?
            .solve(y_kinv.as_ref())
            .map_err(|_| self.singular("Y K(p)⁻¹ X", zero))?;
        let p = self.real.x() * inner;
        debug_assert_eq!(p.nrows(), r);
        Ok(p)
    }

    /// `Ĥ(0, p) = 𝒞𝒦⁻¹(I - 𝒫(p))ℬ`.
    pub fn schur_zero(&self) -> Result<MatC> {
        let zero = c64::new(0.0, 0.0);
        let red = self.reduced(zero)?;
        // (I - 𝒫)ℬ = ℬ - 𝒳 (𝒴𝒦⁻¹𝒳)⁻¹ 𝒴𝒦⁻¹ℬ
        let t = Lu::new(red.a_hat.as_ref())?
            .solve(red.b_hat.as_ref())
            .map_err(|_| self.singular("Y K(p)⁻¹ X", zero))?;
        let projected = self.real.b() - self.real.x() * t;
        let sol = red
            .k_lu
            .solve(projected.as_ref())
            .map_err(|_| self.singular("K(p)", zero))?;
        Ok(to_complex((self.real.c() * sol).as_ref()))
    }

    /// `𝒞𝒦⁻¹ℬ - 𝒞𝒦⁻¹𝒳(𝒴𝒦⁻¹𝒳)⁻¹𝒴𝒦⁻¹ℬ`, the `s = 0` value without the
    /// projector.
    pub fn zero_expanded(&self) -> Result<MatC> {
        let zero = c64::new(0.0, 0.0);
        let red = self.reduced(zero)?;
        let t = Lu::new(red.a_hat.as_ref())?
            .solve(red.b_hat.as_ref())
            .map_err(|_| self.singular("Y K(p)⁻¹ X", zero))?;
        Ok(to_complex((&red.d_hat - &red.c_hat * t).as_ref()))
    }

    fn zero_path(&self) -> Result<EvalResult> {
        let value = self.schur_zero()?;
        let cond_estimate = self
            .reduced(c64::new(0.0, 0.0))
            .map(|red| crate::numkit::cond1_estimate(red.a_hat.as_ref()))
            .unwrap_or(f64::INFINITY);
        Ok(EvalResult {
            value,
            formula: Formula::SchurZero,
            cond_estimate,
        })
    }

    /// Condition-switched evaluation.
    pub fn eval(&self, s: c64, cfg: &EvalConfig) -> Result<EvalResult> {
        if s.norm() <= cfg.zero_s_tol || s == c64::new(0.0, 0.0) {
            return self.zero_path();
        }
        let z_lu = Lu::new(self.z(s).as_ref())?;
        let cond_estimate = z_lu.cond1_estimate();
        let compact = |why: Option<String>| -> std::result::Result<EvalResult, String> {
            if let Some(why) = why {
                return Err(why);
            }
            self.compact_with(&z_lu, s)
                .map(|value| EvalResult {
                    value,
                    formula: Formula::Compact,
                    cond_estimate,
                })
                .map_err(|e| e.to_string())
        };
        let precise = || {
            self.precise(s)
                .map(|value| EvalResult {
                    value,
                    formula: Formula::Precise,
                    cond_estimate,
                })
                .map_err(|e| e.to_string())
        };
        if cond_estimate <= cfg.eps_cond {
            match compact(None) {
                Ok(v) => Ok(v),
                Err(compact_err) => precise().map_err(|precise_err| Error::EvaluationFailed {
                    s,
                    p: self.p,
                    compact: compact_err,
                    precise: precise_err,
                }),
            }
        } else {
            match precise() {
                Ok(v) => Ok(v),
                Err(precise_err) => {
                    let why = z_lu.is_singular().then(|| "Z(s, p) is singular".to_string());
                    compact(why).map_err(|compact_err| Error::EvaluationFailed {
                        s,
                        p: self.p,
                        compact: compact_err,
                        precise: precise_err,
                    })
                }
            }
        }
    }
}

/// `Ĥ(s, p)` by the compact formula.
pub fn eval_compact(real: &ParametricRealization, s: c64, p: f64) -> Result<MatC> {
    ParameterSlice::new(real, p).compact(s)
}

/// `Ĥ(s, p)` by the precise formula.
pub fn eval_precise(real: &ParametricRealization, s: c64, p: f64) -> Result<MatC> {
    ParameterSlice::new(real, p).precise(s)
}

/// `Ĥ(0, p)` via the oblique projector.
pub fn eval_schur_zero(real: &ParametricRealization, p: f64) -> Result<MatC> {
    ParameterSlice::new(real, p).schur_zero()
}

/// Condition-switched evaluation of `Ĥ(s, p)`.
pub fn eval(real: &ParametricRealization, s: c64, p: f64, cfg: &EvalConfig) -> Result<EvalResult> {
    ParameterSlice::new(real, p).eval(s, cfg)
}

/// One cell of an error grid.
#[derive(Clone, Debug)]
pub struct GridCell {
    /// `‖Ĥ(iω, p) - H(iω, p)‖₂`, NaN when the cell failed.
    pub delta: f64,
    /// `‖H(iω, p)‖₂`, NaN when the reference failed.
    pub reference_norm: f64,
    pub formula: Option<Formula>,
    pub cond_estimate: f64,
    pub failure: Option<String>,
}

/// `δ(ω, p)` over a frequency/parameter grid. Cells are stored row-major with
/// the frequency as the outer index.
#[derive(Clone, Debug)]
pub struct ErrorGrid {
    pub omegas: Vec<f64>,
    pub params: Vec<f64>,
    pub cells: Vec<GridCell>,
}

impl ErrorGrid {
    pub fn cell(&self, omega_index: usize, param_index: usize) -> &GridCell {
        &self.cells[omega_index * self.params.len() + param_index]
    }

    /// Iterates `(ω, p, cell)` in storage order.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64, &GridCell)> + '_ {
        let np = self.params.len();
        self.cells
            .iter()
            .enumerate()
            .map(move |(k, c)| (self.omegas[k / np], self.params[k % np], c))
    }

    fn finite_deltas(&self) -> Vec<f64> {
        let mut d: Vec<f64> = self.cells.iter().map(|c| c.delta).filter(|d| d.is_finite()).collect();
        d.sort_by(f64::total_cmp);
        d
    }

    pub fn max_delta(&self) -> f64 {
        self.finite_deltas().last().copied().unwrap_or(f64::NAN)
    }

    pub fn median_delta(&self) -> f64 {
        let d = self.finite_deltas();
        match d.len() {
            0 => f64::NAN,
            n if n % 2 == 1 => d[n / 2],
            n => 0.5 * (d[n / 2 - 1] + d[n / 2]),
        }
    }

    /// Fraction of evaluated cells that used the precise formula.
    pub fn precise_fraction(&self) -> f64 {
        let used: Vec<_> = self.cells.iter().filter_map(|c| c.formula).collect();
        if used.is_empty() {
            return 0.0;
        }
        used.iter().filter(|&&f| f == Formula::Precise).count() as f64 / used.len() as f64
    }

    pub fn failures(&self) -> usize {
        self.cells.iter().filter(|c| c.failure.is_some()).count()
    }

    /// Largest `δ` in a parameter column, with the largest reference norm
    /// in the same column.
    pub fn column_extremes(&self, param_index: usize) -> (f64, f64) {
        (0..self.omegas.len()).fold((0.0f64, 0.0f64), |(d, h), w| {
            let c = self.cell(w, param_index);
            (d.max(c.delta), h.max(c.reference_norm))
        })
    }
}

/// `δ(ω, p) = ‖Ĥ(iω, p) - H(iω, p)‖₂` at every grid point. Cell failures are
/// recorded, never propagated. Cells are evaluated in parallel on the current
/// rayon pool; placement is deterministic.
pub fn error_grid(
    real: &ParametricRealization,
    model: &ParametricModel,
    omegas: &[f64],
    params: &[f64],
    cfg: &EvalConfig,
) -> Result<ErrorGrid> {
    if omegas.is_empty() || params.is_empty() {
        return Err(Error::InvalidInput("error grid needs at least one frequency and one parameter".into()));
    }
    if let Some(x) = omegas.iter().chain(params).find(|x| !x.is_finite()) {
        return Err(Error::NonFinite(format!("grid coordinate {x}")));
    }
    if model.dims() != real.dims() {
        return Err(Error::Dimension(format!(
            "reference model dims {:?} differ from realization dims {:?}",
            model.dims(),
            real.dims()
        )));
    }
    let slices: Vec<ParameterSlice<'_>> = params.iter().map(|&p| ParameterSlice::new(real, p)).collect();
    let blocks: Vec<Blocks> = params.iter().map(|&p| model.eval_blocks(p)).collect();
    let np = params.len();
    let cells = (0..omegas.len() * np)
        .into_par_iter()
        .map(|k| {
            let (w, ip) = (k / np, k % np);
            let s = c64::new(0.0, omegas[w]);
            let reference = blocks[ip].transfer(s);
            let approx = slices[ip].eval(s, cfg);
            match (approx, reference) {
                (Ok(res), Ok(h)) => GridCell {
                    delta: spectral_norm((&res.value - &h).as_ref()),
                    reference_norm: spectral_norm(h.as_ref()),
                    formula: Some(res.formula),
                    cond_estimate: res.cond_estimate,
                    failure: None,
                },
                (Ok(res), Err(e)) => GridCell {
                    delta: f64::NAN,
                    reference_norm: f64::NAN,
                    formula: Some(res.formula),
                    cond_estimate: res.cond_estimate,
                    failure: Some(format!("reference: {e}")),
                },
                (Err(e), h) => GridCell {
                    delta: f64::NAN,
                    reference_norm: h.map(|h| spectral_norm(h.as_ref())).unwrap_or(f64::NAN),
                    formula: None,
                    cond_estimate: f64::NAN,
                    failure: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(ErrorGrid {
        omegas: omegas.to_vec(),
        params: params.to_vec(),
        cells,
    })
}

/// `count` points from `min` to `max`, logarithmically spaced.
pub fn logspace(min: f64, max: f64, count: usize) -> Vec<f64> {
    let (a, b) = (min.log10(), max.log10());
    match count {
        0 => Vec::new(),
        1 => vec![min],
        _ => (0..count)
            .map(|i| 10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64))
            .collect(),
    }
}

/// `count` points from `min` to `max`, equally spaced.
pub fn linspace(min: f64, max: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![min],
        _ => (0..count)
            .map(|i| min + (max - min) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loewner::{build_pencil, Partition};
    use crate::models::builtin;
    use crate::numkit::spectral_norm_real;

    fn toy_realization() -> (ParametricModel, ParametricRealization) {
        let toy = builtin("toy").unwrap();
        let params = linspace(0.0, 100.0, 4);
        let set = toy.snapshots(&params).unwrap();
        let pencil = build_pencil(&set, &Partition::alternating(&params).unwrap()).unwrap();
        let real = pencil.realize(pencil.truncation_rank(1e-7)).unwrap();
        (toy, real)
    }

    fn rel(a: &MatC, b: &MatC) -> f64 {
        spectral_norm((a - b).as_ref()) / spectral_norm(b.as_ref()).max(f64::MIN_POSITIVE)
    }

    #[test]
    fn compact_at_sample_matches_truth() {
        let (toy, real) = toy_realization();
        let s = c64::new(0.0, 1.0);
        let h = toy.true_tf(s, 0.0).unwrap();
        assert!(rel(&eval_compact(&real, s, 0.0).unwrap(), &h) <= 1e-8);
        let s = c64::new(0.0, 10.0);
        let h = toy.true_tf(s, 50.0).unwrap();
        assert!(rel(&eval_compact(&real, s, 50.0).unwrap(), &h) <= 1e-6);
    }

    #[test]
    fn compact_rewrites_agree() {
        let (_, real) = toy_realization();
        for (w, p) in [(0.3, 12.0), (5.0, 50.0), (100.0, 99.0), (2e3, 3.0)] {
            let slice = ParameterSlice::new(&real, p);
            let s = c64::new(0.1 * w, w);
            if crate::numkit::cond1_estimate(slice.z(s).as_ref()) < 1e6 {
                let a = slice.compact(s).unwrap();
                let b = slice.compact_scaled(s).unwrap();
                assert!(rel(&b, &a) <= 1e-12, "w={w} p={p}");
            }
        }
    }

    #[test]
    fn precise_tiny_s_is_continuous_with_zero() {
        let (_, real) = toy_realization();
        let slice = ParameterSlice::new(&real, 50.0);
        let zero = slice.schur_zero().unwrap();
        let tiny = slice.precise(c64::new(0.0, 1e-12)).unwrap();
        assert!(rel(&tiny, &zero) <= 1e-4);
    }

    #[test]
    fn schur_zero_values() {
        let (_, real) = toy_realization();
        let h = eval_schur_zero(&real, 0.0).unwrap();
        assert!((h[(0, 0)] - c64::new(1.5, 0.0)).norm() <= 1e-8 * 1.5);
        let slice = ParameterSlice::new(&real, 17.0);
        let p = slice.projector().unwrap();
        let p2 = &p * &p;
        assert!(spectral_norm_real((&p2 - &p).as_ref()) <= 1e-10 * spectral_norm_real(p.as_ref()));
        let a = slice.schur_zero().unwrap();
        let b = slice.zero_expanded().unwrap();
        assert!(rel(&a, &b) <= 1e-12);
    }

    #[test]
    fn switching_branches() {
        let (toy, real) = toy_realization();
        let cfg = EvalConfig::default();
        let r = eval(&real, c64::new(0.0, 0.0), 20.0, &cfg).unwrap();
        assert_eq!(r.formula, Formula::SchurZero);
        let low = eval(&real, c64::new(0.0, 1e-2), 20.0, &cfg).unwrap();
        assert_eq!(low.formula, Formula::Precise);
        assert!(low.cond_estimate > cfg.eps_cond);
        let high = eval(&real, c64::new(0.0, 1e4), 20.0, &cfg).unwrap();
        assert_eq!(high.formula, Formula::Compact);
        assert!(high.cond_estimate <= cfg.eps_cond);
        for res in [low, high] {
            assert_eq!((res.value.nrows(), res.value.ncols()), (1, 1));
        }
        // the two branches agree on either side of the frontier
        let omegas = logspace(1e-2, 1e4, 200);
        let p = 20.0;
        let slice = ParameterSlice::new(&real, p);
        let mut switched = 0;
        let mut prev: Option<Formula> = None;
        for &w in &omegas {
            let s = c64::new(0.0, w);
            let res = slice.eval(s, &cfg).unwrap();
            if prev.is_some_and(|f| f != res.formula) {
                switched += 1;
                let c = slice.compact(s).unwrap();
                let pr = slice.precise(s).unwrap();
                assert!(rel(&c, &pr) <= 1e-6);
            }
            prev = Some(res.formula);
            let h = toy.true_tf(s, p).unwrap();
            assert!(rel(&res.value, &h) <= 1e-6);
        }
        assert_eq!(switched, 1, "one frontier along the frequency axis");
    }

    #[test]
    fn config_validation() {
        assert!(EvalConfig::new(1.0, 0.0).is_err());
        assert!(EvalConfig::new(f64::NAN, 0.0).is_err());
        assert!(EvalConfig::new(10.0, -1.0).is_err());
        assert!(EvalConfig::new(10.0, 0.5).is_ok());
        for f in [Formula::Compact, Formula::Precise, Formula::SchurZero] {
            assert_eq!(f.as_str().parse::<Formula>().unwrap(), f);
        }
    }

    #[test]
    fn zero_s_tolerance_routes_small_s() {
        let (_, real) = toy_realization();
        let cfg = EvalConfig::new(1e6, 1e-3).unwrap();
        let r = eval(&real, c64::new(0.0, 1e-4), 30.0, &cfg).unwrap();
        assert_eq!(r.formula, Formula::SchurZero);
    }

    #[test]
    fn grid_small_and_failures_recorded() {
        let (toy, real) = toy_realization();
        let grid = error_grid(&real, &toy, &[0.1, 1.0, 10.0], &[0.0, 50.0], &EvalConfig::default()).unwrap();
        assert_eq!(grid.cells.len(), 6);
        assert!(grid.cells.iter().all(|c| c.delta >= 0.0 && c.failure.is_none()));
        assert_eq!(grid.cell(2, 1).delta, grid.cells[5].delta);
        let (d, h) = grid.column_extremes(0);
        assert!(d <= 1e-8 * h);

        // A(p) = [0 1+p; -1-p 0] ⊕ (-1) has eigenvalues ±i(1+p), so the
        // reference is singular at ω = 1, p = 0.
        let toy_gamma = toy.gamma();
        let mut g0 = toy_gamma[0].clone();
        g0[(0, 0)] = 0.0;
        g0[(1, 1)] = 0.0;
        g0[(0, 1)] = 1.0;
        g0[(1, 0)] = -1.0;
        let osc = ParametricModel::new(toy.dims(), vec![g0, toy_gamma[1].clone()]).unwrap();
        let set = osc.snapshots(&[0.5, 1.0, 2.0, 3.0]).unwrap();
        let pencil = build_pencil(&set, &Partition::alternating(&set.params()).unwrap()).unwrap();
        let r = pencil.truncation_rank(1e-7);
        let real = pencil.realize(r).unwrap();
        let grid = error_grid(&real, &osc, &[1.0, 2.5], &[0.0], &EvalConfig::default()).unwrap();
        let bad = grid.cell(0, 0);
        assert!(bad.delta.is_nan());
        assert!(bad.failure.is_some());
        assert!(grid.cell(1, 0).failure.is_none());
        assert_eq!(grid.failures(), 1);
    }

    #[test]
    fn grid_rejects_empty_axes() {
        let (toy, real) = toy_realization();
        assert!(error_grid(&real, &toy, &[], &[1.0], &EvalConfig::default()).is_err());
        assert!(error_grid(&real, &toy, &[1.0], &[f64::NAN], &EvalConfig::default()).is_err());
    }

    #[test]
    fn spacing_helpers() {
        let l = logspace(1e-2, 1e4, 7);
        assert_eq!(l.len(), 7);
        assert!((l[0] - 1e-2).abs() < 1e-17 && (l[6] - 1e4).abs() < 1e-9);
        assert!((l[3] - 10.0).abs() < 1e-12);
        assert_eq!(linspace(5.0, 95.0, 10)[1], 15.0);
    }
}
