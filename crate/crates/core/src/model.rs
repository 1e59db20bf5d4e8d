//! Zero-mean Gaussian field observed by the sensor network.
//!
//! The data vector is X ~ N(0, M) with M the n-by-n covariance across
//! sensor sites. All estimation quality measures derive from M alone, so
//! the model is just a validated covariance plus a factorization policy.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Symmetry defect tolerated on load; worse input is rejected.
pub const SYMMETRY_TOL: f64 = 1e-9;
/// Most negative eigenvalue tolerated on load.
pub const EIGENVALUE_TOL: f64 = -1e-9;
/// First jitter added to pivots after a plain factorization fails.
pub const JITTER_START: f64 = 1e-10;
/// Largest jitter tried before declaring the subset degenerate.
pub const JITTER_MAX: f64 = 1e-6;

/// Validated covariance of the sensor field.
#[derive(Clone, Debug)]
pub struct GaussianModel {
    cov: DMatrix<f64>,
    jitter: f64,
}

impl GaussianModel {
    /// Validates and stores a covariance matrix.
    ///
    /// The matrix must be square, symmetric within [`SYMMETRY_TOL`]
    /// (it is symmetrized after the check), and have no eigenvalue below
    /// [`EIGENVALUE_TOL`].
    pub fn new(cov: DMatrix<f64>) -> Result<Self> {
        let (r, c) = cov.shape();
        if r != c {
            return Err(Error::InvalidModel(format!(
                "covariance must be square, got {r}x{c}"
            )));
        }
        if r == 0 || r > crate::config::MAX_SENSORS {
            return Err(Error::InvalidModel(format!(
                "covariance order must be in 1..={}, got {r}",
                crate::config::MAX_SENSORS
            )));
        }
        if !cov.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidModel("covariance has non-finite entries".into()));
        }
        let mut worst = 0.0f64;
        for i in 0..r {
            for j in (i + 1)..r {
                worst = worst.max((cov[(i, j)] - cov[(j, i)]).abs());
            }
        }
        if worst > SYMMETRY_TOL {
            return Err(Error::InvalidModel(format!(
                "covariance asymmetry {worst:.3e} exceeds {SYMMETRY_TOL:.0e}"
            )));
        }
        let sym = (&cov + cov.transpose()) * 0.5;
        let min_eig = nalgebra::SymmetricEigen::new(sym.clone())
            .eigenvalues
            .min();
        if min_eig < EIGENVALUE_TOL {
            return Err(Error::InvalidModel(format!(
                "covariance eigenvalue {min_eig:.3e} below {EIGENVALUE_TOL:.0e}"
            )));
        }
        // Factorizations run clean by default; jitter enters only as an
        // escalating rescue after a plain attempt fails.
        Ok(Self { cov: sym, jitter: 0.0 })
    }

    /// Draws A with i.i.d. Uniform[-1, 1] entries (row-major fill) and
    /// returns the covariance AᵀA. Deterministic in `seed`.
    pub fn generate(n: usize, seed: u64) -> Result<Self> {
        if n == 0 || n > crate::config::MAX_SENSORS {
            return Err(Error::InvalidParameter(format!(
                "sensor count must be in 1..={}, got {n}",
                crate::config::MAX_SENSORS
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = rng.random::<f64>() * 2.0 - 1.0;
            }
        }
        // Upper triangle computed once and mirrored so M = Mᵀ holds exactly.
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += a[(k, i)] * a[(k, j)];
                }
                m[(i, j)] = s;
                m[(j, i)] = s;
            }
        }
        Self::new(m)
    }

    /// Overrides the starting pivot jitter.
    pub fn with_jitter(mut self, jitter: f64) -> Result<Self> {
        if !(jitter >= 0.0 && jitter <= JITTER_MAX) {
            return Err(Error::InvalidParameter(format!(
                "jitter must be in [0, {JITTER_MAX:.0e}], got {jitter}"
            )));
        }
        self.jitter = jitter;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.cov.nrows()
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Sum of marginal variances, the estimation error with no sensor active.
    pub fn trace(&self) -> f64 {
        (0..self.n()).map(|i| self.cov[(i, i)]).sum()
    }

    /// Submatrix M(rows, cols) for index slices.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| self.cov[(rows[i], cols[j])])
    }

    /// Cholesky of M(idx, idx) with escalating pivot jitter.
    pub(crate) fn cholesky_of(&self, idx: &[usize], context: &str) -> Result<JitteredCholesky> {
        let sub = self.submatrix(idx, idx);
        cholesky_with_jitter(&sub, self.jitter, context)
    }

    /// Cholesky of the full covariance with escalating pivot jitter.
    pub(crate) fn cholesky_full(&self) -> Result<JitteredCholesky> {
        cholesky_with_jitter(&self.cov, self.jitter, "full covariance")
    }

    /// Draws one zero-mean vector X ~ N(0, M).
    pub fn sample(&self, rng: &mut impl Rng) -> Result<DVector<f64>> {
        let chol = self.cholesky_full()?;
        let z = DVector::from_fn(self.n(), |_, _| rng.sample(StandardNormal));
        Ok(chol.factor.l() * z)
    }

    /// Parses a headerless CSV grid of n rows by n comma-separated reals.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|f| {
                    f.trim().parse::<f64>().map_err(|e| {
                        Error::Parse(format!("covariance CSV line {}: {e}", lineno + 1))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        let n = rows.len();
        if n == 0 {
            return Err(Error::Parse("covariance CSV is empty".into()));
        }
        if let Some(bad) = rows.iter().position(|r| r.len() != n) {
            return Err(Error::Parse(format!(
                "covariance CSV row {} has {} fields, expected {n}",
                bad + 1,
                rows[bad].len()
            )));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// Parses `{"n": N, "covariance": [[...], ...]}`.
    pub fn from_json_str(text: &str) -> Result<Self> {
        #[derive(serde::Deserialize)]
        struct Repr {
            n: usize,
            covariance: Vec<Vec<f64>>,
        }
        let r: Repr = serde_json::from_str(text)
            .map_err(|e| Error::Parse(format!("covariance JSON: {e}")))?;
        if r.covariance.len() != r.n || r.covariance.iter().any(|row| row.len() != r.n) {
            return Err(Error::Parse(format!(
                "covariance JSON: matrix shape does not match n = {}",
                r.n
            )));
        }
        Self::new(DMatrix::from_fn(r.n, r.n, |i, j| r.covariance[i][j]))
    }

    /// Loads a covariance file, dispatching on a `.json` extension, CSV otherwise.
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json_str(&text),
            _ => Self::from_csv_str(&text),
        }
    }

    /// Headerless CSV rendering (round-trips through [`Self::from_csv_str`]).
    pub fn to_csv_string(&self) -> String {
        let n = self.n();
        let mut out = String::new();
        for i in 0..n {
            for j in 0..n {
                if j > 0 {
                    out.push(',');
                }
                out.push_str(&format!("{}", self.cov[(i, j)]));
            }
            out.push('\n');
        }
        out
    }
}

/// Successful factorization together with the jitter that achieved it.
pub(crate) struct JitteredCholesky {
    pub factor: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    #[allow(dead_code)]
    pub jitter_used: f64,
}

impl JitteredCholesky {
    pub fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.factor.solve(b)
    }

    pub fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        self.factor.solve(b)
    }

    /// log det of the jittered matrix, from the factor diagonal.
    pub fn log_det(&self) -> f64 {
        self.factor.l_dirty().diagonal().iter().map(|d| 2.0 * d.ln()).sum()
    }
}

/// Attempts Cholesky with pivot jitter escalating tenfold per retry.
pub(crate) fn cholesky_with_jitter(
    m: &DMatrix<f64>,
    start: f64,
    context: &str,
) -> Result<JitteredCholesky> {
    let mut jitter = start;
    loop {
        let mut mj = m.clone();
        if jitter > 0.0 {
            for i in 0..mj.nrows() {
                mj[(i, i)] += jitter;
            }
        }
        if let Some(factor) = nalgebra::Cholesky::new(mj) {
            return Ok(JitteredCholesky {
                factor,
                jitter_used: jitter,
            });
        }
        jitter = if jitter == 0.0 { JITTER_START } else { jitter * 10.0 };
        if jitter > JITTER_MAX {
            return Err(Error::NumericalDegeneracy(format!(
                "factorization of {context} failed at jitter {JITTER_MAX:.0e}"
            )));
        }
    }
}
