//! Gaussian states through their covariance matrices (CMs).
//!
//! Shot-noise units throughout: the vacuum CM is the identity and a mode's
//! quadratures sit at rows `2k` (q) and `2k + 1` (p).

use std::f64::consts::LN_2;

use nalgebra::{DMatrix, Matrix2, SymmetricEigen};

use crate::error::{validation, Error, Result};

/// Relative asymmetry accepted by [`CovarianceMatrix::new`].
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Symplectic eigenvalues in `[1 - PURITY_TOL, 1)` count as exactly 1.
pub const PURITY_TOL: f64 = 1e-9;
/// Measured variances below this are treated as infinitely squeezed.
pub const PINV_THRESHOLD: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quadrature {
    Q,
    P,
}

impl Quadrature {
    fn offset(self) -> usize {
        match self {
            Quadrature::Q => 0,
            Quadrature::P => 1,
        }
    }
}

/// Real symmetric `2n x 2n` second-moment matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    data: DMatrix<f64>,
}

impl CovarianceMatrix {
    /// Validates shape, finiteness and symmetry, then symmetrizes exactly.
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        let (r, c) = data.shape();
        if r != c {
            return validation(format!("covariance matrix must be square, got {r}x{c}"));
        }
        if r == 0 || r % 2 != 0 {
            return validation(format!("covariance matrix dimension must be even and positive, got {r}"));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return validation("covariance matrix has non-finite entries");
        }
        let scale = data.amax().max(1.0);
        let asym = (&data - data.transpose()).amax();
        if asym > SYMMETRY_TOL * scale {
            return validation(format!("covariance matrix is not symmetric (max asymmetry {asym:e})"));
        }
        Ok(Self::symmetrized(data))
    }

    /// Internal constructor for results of exact symmetric algebra.
    pub(crate) fn symmetrized(data: DMatrix<f64>) -> Self {
        let data = (&data + data.transpose()) * 0.5;
        Self { data }
    }

    pub fn vacuum(n_modes: usize) -> Self {
        Self { data: DMatrix::identity(2 * n_modes, 2 * n_modes) }
    }

    /// `nu * I` on `n_modes` modes.
    pub fn thermal(n_modes: usize, nu: f64) -> Result<Self> {
        if !(nu >= 1.0) || !nu.is_finite() {
            return validation(format!("thermal variance must be finite and >= 1, got {nu}"));
        }
        Ok(Self { data: DMatrix::identity(2 * n_modes, 2 * n_modes) * nu })
    }

    /// Two-mode squeezed vacuum with local variance `mu`.
    pub fn tmsv(mu: f64) -> Result<Self> {
        if !(mu >= 1.0) || !mu.is_finite() {
            return validation(format!("modulation must be finite and >= 1, got {mu}"));
        }
        let c = (mu * mu - 1.0).sqrt();
        let data = DMatrix::from_row_slice(
            4,
            4,
            &[
                mu, 0.0, c, 0.0, //
                0.0, mu, 0.0, -c, //
                c, 0.0, mu, 0.0, //
                0.0, -c, 0.0, mu,
            ],
        );
        Ok(Self { data })
    }

    pub fn n_modes(&self) -> usize {
        self.data.nrows() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }

    /// The 2x2 block coupling modes `i` and `j`.
    pub fn block(&self, i: usize, j: usize) -> Matrix2<f64> {
        self.data.fixed_view::<2, 2>(2 * i, 2 * j).into_owned()
    }

    pub fn direct_sum(&self, other: &CovarianceMatrix) -> Self {
        let (a, b) = (self.data.nrows(), other.data.nrows());
        let mut data = DMatrix::zeros(a + b, a + b);
        data.view_mut((0, 0), (a, a)).copy_from(&self.data);
        data.view_mut((a, a), (b, b)).copy_from(&other.data);
        Self { data }
    }

    /// Sub-state on `modes`, in the given order. Doubles as a mode permutation.
    pub fn select_modes(&self, modes: &[usize]) -> Result<Self> {
        let n = self.n_modes();
        if modes.is_empty() {
            return validation("mode selection is empty");
        }
        if let Some(&bad) = modes.iter().find(|&&m| m >= n) {
            return validation(format!("mode index {bad} out of range for {n} modes"));
        }
        let idx = quadrature_indices(modes);
        Ok(Self { data: submatrix(&self.data, &idx, &idx) })
    }

    /// `S V S^T`.
    pub fn transform(&self, s: &DMatrix<f64>) -> Result<Self> {
        if s.shape() != self.data.shape() {
            return validation(format!(
                "transformation is {}x{}, state is {}x{}",
                s.nrows(),
                s.ncols(),
                self.data.nrows(),
                self.data.ncols()
            ));
        }
        Ok(Self::symmetrized(s * &self.data * s.transpose()))
    }

    /// True when no entry couples a q quadrature with a p quadrature.
    pub fn is_quadrature_decoupled(&self) -> bool {
        let d = &self.data;
        let n = d.nrows();
        (0..n).step_by(2).all(|i| (1..n).step_by(2).all(|j| d[(i, j)] == 0.0))
    }

    /// The q-q and p-p blocks, each `n x n`.
    pub fn quadrature_blocks(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let n = self.n_modes();
        let q: Vec<usize> = (0..n).map(|k| 2 * k).collect();
        let p: Vec<usize> = (0..n).map(|k| 2 * k + 1).collect();
        (submatrix(&self.data, &q, &q), submatrix(&self.data, &p, &p))
    }

    pub fn determinant(&self) -> f64 {
        if self.is_quadrature_decoupled() {
            let (q, p) = self.quadrature_blocks();
            q.determinant() * p.determinant()
        } else {
            self.data.determinant()
        }
    }

    /// Largest absolute entry, floored at 1. Used to scale tolerances.
    pub fn scale(&self) -> f64 {
        self.data.amax().max(1.0)
    }

    /// Every symplectic eigenvalue at least `1 - tol`.
    pub fn is_physical(&self, tol: f64) -> bool {
        match symplectic_eigenvalues(self) {
            Ok(s) => s.min() >= 1.0 - tol,
            Err(_) => false,
        }
    }
}

pub(crate) fn quadrature_indices(modes: &[usize]) -> Vec<usize> {
    modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect()
}

pub(crate) fn submatrix(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// Standard symplectic form, `n` copies of `[[0, 1], [-1, 0]]`.
pub fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let mut o = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        o[(2 * k, 2 * k + 1)] = 1.0;
        o[(2 * k + 1, 2 * k)] = -1.0;
    }
    o
}

/// Symplectic eigenvalues, one per mode, in descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticSpectrum {
    eigenvalues: Vec<f64>,
}

impl SymplecticSpectrum {
    pub fn values(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues[self.eigenvalues.len() - 1]
    }

    /// Sum of `h` over the spectrum.
    pub fn entropy(&self) -> Result<f64> {
        self.eigenvalues.iter().try_fold(0.0, |acc, &nu| Ok(acc + entropic_h(nu)?))
    }

    /// Sorts, then snaps values that sit below 1 only by rounding noise.
    ///
    /// The squared spectrum is built from products of matrix entries, so its
    /// absolute accuracy degrades with the squared entry scale of the input
    /// (a TMSV at large `mu` is pure but carries entries of size `mu`). The
    /// snap band widens accordingly.
    fn from_raw(mut values: Vec<f64>, scale: f64) -> Self {
        values.sort_by(|a, b| b.total_cmp(a));
        let top = values.first().copied().unwrap_or(1.0).max(scale);
        let band = purity_band(top);
        for v in values.iter_mut() {
            if *v < 1.0 && *v >= 1.0 - band {
                *v = 1.0;
            }
        }
        Self { eigenvalues: values }
    }
}

/// `h(nu) = ((nu+1)/2) log2((nu+1)/2) - ((nu-1)/2) log2((nu-1)/2)`, in bits.
pub fn entropic_h(nu: f64) -> Result<f64> {
    if nu.is_nan() || nu < 1.0 - PURITY_TOL {
        return Err(Error::Domain(format!("symplectic eigenvalue {nu} is below 1")));
    }
    if nu <= 1.0 {
        return Ok(0.0);
    }
    if nu.is_infinite() {
        return Ok(f64::INFINITY);
    }
    // (b+1)log(b+1) - b log b rewritten without the cancellation at large b.
    let b = (nu - 1.0) / 2.0;
    Ok((b.ln_1p() + b * b.recip().ln_1p()) / LN_2)
}

/// Symplectic spectrum of `v`.
///
/// Computed as square roots of the eigenvalues of the symmetric matrix
/// `V^{1/2} Omega^T V Omega V^{1/2}`, whose spectrum is that of `-(Omega V)^2`
/// with each value doubled. When q and p decouple the smaller `n x n`
/// product `L^T V_p L` with `V_q = L L^T` carries the same information.
pub fn symplectic_eigenvalues(v: &CovarianceMatrix) -> Result<SymplecticSpectrum> {
    let n = v.n_modes();
    let squares = if v.is_quadrature_decoupled() {
        let (q, p) = v.quadrature_blocks();
        let chol = q
            .cholesky()
            .ok_or_else(|| Error::Domain("q-quadrature block is not positive definite".into()))?;
        let l = chol.l();
        let c = l.transpose() * p * l;
        let c = (&c + c.transpose()) * 0.5;
        SymmetricEigen::new(c).eigenvalues.iter().copied().collect::<Vec<_>>()
    } else {
        let eig = SymmetricEigen::new(v.matrix().clone());
        if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::Domain("covariance matrix is not positive definite".into()));
        }
        let root = &eig.eigenvectors
            * DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt))
            * eig.eigenvectors.transpose();
        let omega = symplectic_form(n);
        let m = &root * omega.transpose() * v.matrix() * omega * &root;
        let m = (&m + m.transpose()) * 0.5;
        let mut vals: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
        vals.sort_by(|a, b| b.total_cmp(a));
        let top = vals[0].abs().max(1.0);
        let mut paired = Vec::with_capacity(n);
        for pair in vals.chunks(2) {
            if (pair[0] - pair[1]).abs() > 1e-9 * top {
                return Err(Error::Consistency(format!(
                    "symplectic eigenvalues failed to pair: {} vs {}",
                    pair[0], pair[1]
                )));
            }
            paired.push(0.5 * (pair[0] + pair[1]));
        }
        paired
    };
    if squares.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::Domain("covariance matrix is not positive definite".into()));
    }
    Ok(SymplecticSpectrum::from_raw(squares.into_iter().map(f64::sqrt).collect(), v.scale()))
}

/// How far below 1 a symplectic eigenvalue may fall by rounding alone, for
/// inputs whose entries (or eigenvalues) reach `scale`.
pub(crate) fn purity_band(scale: f64) -> f64 {
    PURITY_TOL + 64.0 * f64::EPSILON * scale * scale
}

/// Two-mode spectrum from the invariants `Delta = det A + det B + 2 det C`
/// and `det V`, returned as `(nu_plus, nu_minus)`.
///
/// `nu_minus` is taken as `sqrt(det V) / nu_plus`, which keeps it accurate
/// when `nu_plus` is huge.
pub fn two_mode_spectrum(v: &CovarianceMatrix) -> Result<(f64, f64)> {
    if v.n_modes() != 2 {
        return validation(format!("two-mode spectrum needs 2 modes, got {}", v.n_modes()));
    }
    let a = v.block(0, 0).determinant();
    let b = v.block(1, 1).determinant();
    let c = v.block(0, 1).determinant();
    let delta = a + b + 2.0 * c;
    let det = v.determinant();
    if !(det > 0.0) || !(delta > 0.0) {
        return Err(Error::Domain(format!("two-mode invariants out of range: Delta={delta}, det={det}")));
    }
    let disc = (delta * delta - 4.0 * det).max(0.0);
    let nu_plus = ((delta + disc.sqrt()) / 2.0).sqrt();
    let nu_minus = det.sqrt() / nu_plus;
    let band = purity_band(nu_plus.max(v.scale()));
    for nu in [nu_plus, nu_minus] {
        if nu < 1.0 - band {
            return Err(Error::Domain(format!("two-mode state is unphysical (nu = {nu})")));
        }
    }
    Ok((nu_plus.max(1.0), nu_minus.max(1.0)))
}

/// Entropy in bits: the sum of `h` over the symplectic spectrum.
pub fn von_neumann_entropy(v: &CovarianceMatrix) -> Result<f64> {
    symplectic_eigenvalues(v)?.entropy()
}

fn split_mode(v: &CovarianceMatrix, mode: usize) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let n = v.n_modes();
    if mode >= n {
        return validation(format!("mode index {mode} out of range for {n} modes"));
    }
    if n < 2 {
        return validation("cannot measure the only mode of a state");
    }
    let rest: Vec<usize> = (0..n).filter(|&k| k != mode).collect();
    let rest = quadrature_indices(&rest);
    let meas = [2 * mode, 2 * mode + 1];
    let m = v.matrix();
    Ok((submatrix(m, &rest, &rest), submatrix(m, &meas, &meas), submatrix(m, &rest, &meas)))
}

/// Conditional state of the other modes after homodyning `quadrature` of `mode`.
///
/// `A - C (Pi B Pi)^+ C^T`; the pseudo-inverse is `1 / B_xx`, or zero when
/// the measured variance is below [`PINV_THRESHOLD`].
pub fn homodyne_condition(v: &CovarianceMatrix, mode: usize, quadrature: Quadrature) -> Result<CovarianceMatrix> {
    let (a, b, c) = split_mode(v, mode)?;
    let k = quadrature.offset();
    let var = b[(k, k)];
    if var < PINV_THRESHOLD {
        return Ok(CovarianceMatrix::symmetrized(a));
    }
    let col = c.column(k);
    Ok(CovarianceMatrix::symmetrized(a - col * col.transpose() / var))
}

/// Conditional state of the other modes after heterodyning `mode`: `A - C (B + I)^-1 C^T`.
pub fn heterodyne_condition(v: &CovarianceMatrix, mode: usize) -> Result<CovarianceMatrix> {
    let (a, b, c) = split_mode(v, mode)?;
    let inv = (b + DMatrix::identity(2, 2))
        .try_inverse()
        .ok_or_else(|| Error::Domain("heterodyne kernel is singular".into()))?;
    Ok(CovarianceMatrix::symmetrized(a - &c * inv * c.transpose()))
}
