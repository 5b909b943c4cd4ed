//! Gaussian unitaries as symplectic matrices on `n` modes.

use nalgebra::DMatrix;

use crate::error::{validation, Result};
use crate::gaussian::symplectic_form;

fn check_modes(n_modes: usize, modes: &[usize]) -> Result<()> {
    for (k, &m) in modes.iter().enumerate() {
        if m >= n_modes {
            return validation(format!("mode {m} out of range for {n_modes} modes"));
        }
        if modes[..k].contains(&m) {
            return validation(format!("mode {m} listed twice"));
        }
    }
    Ok(())
}

/// Beamsplitter of transmissivity `t` on modes `i`, `j`:
/// `i -> sqrt(t) i + sqrt(1-t) j`, `j -> -sqrt(1-t) i + sqrt(t) j`.
pub fn beamsplitter(n_modes: usize, i: usize, j: usize, t: f64) -> Result<DMatrix<f64>> {
    check_modes(n_modes, &[i, j])?;
    if !(0.0..=1.0).contains(&t) {
        return validation(format!("transmissivity must lie in [0, 1], got {t}"));
    }
    let (c, s) = (t.sqrt(), (1.0 - t).sqrt());
    let mut m = DMatrix::identity(2 * n_modes, 2 * n_modes);
    for q in 0..2 {
        let (a, b) = (2 * i + q, 2 * j + q);
        m[(a, a)] = c;
        m[(a, b)] = s;
        m[(b, a)] = -s;
        m[(b, b)] = c;
    }
    Ok(m)
}

/// Two-mode squeezer with parameter `r` on modes `i`, `j`.
/// Applied to vacuum it gives the two-mode squeezed vacuum of variance `cosh 2r`.
pub fn two_mode_squeezer(n_modes: usize, i: usize, j: usize, r: f64) -> Result<DMatrix<f64>> {
    check_modes(n_modes, &[i, j])?;
    let (c, s) = (r.cosh(), r.sinh());
    let mut m = DMatrix::identity(2 * n_modes, 2 * n_modes);
    for (q, sign) in [(0, 1.0), (1, -1.0)] {
        let (a, b) = (2 * i + q, 2 * j + q);
        m[(a, a)] = c;
        m[(b, b)] = c;
        m[(a, b)] = sign * s;
        m[(b, a)] = sign * s;
    }
    Ok(m)
}

/// Single-mode squeezer `diag(e^-r, e^r)` on mode `i`.
pub fn squeezer(n_modes: usize, i: usize, r: f64) -> Result<DMatrix<f64>> {
    check_modes(n_modes, &[i])?;
    let mut m = DMatrix::identity(2 * n_modes, 2 * n_modes);
    m[(2 * i, 2 * i)] = (-r).exp();
    m[(2 * i + 1, 2 * i + 1)] = r.exp();
    Ok(m)
}

/// Phase rotation by `theta` on mode `i`.
pub fn rotation(n_modes: usize, i: usize, theta: f64) -> Result<DMatrix<f64>> {
    check_modes(n_modes, &[i])?;
    let (c, s) = (theta.cos(), theta.sin());
    let mut m = DMatrix::identity(2 * n_modes, 2 * n_modes);
    m[(2 * i, 2 * i)] = c;
    m[(2 * i, 2 * i + 1)] = -s;
    m[(2 * i + 1, 2 * i)] = s;
    m[(2 * i + 1, 2 * i + 1)] = c;
    Ok(m)
}

/// Passive network acting as the orthogonal `o` on the listed modes,
/// identically on q and p.
pub fn passive(n_modes: usize, modes: &[usize], o: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_modes(n_modes, modes)?;
    if o.shape() != (modes.len(), modes.len()) {
        return validation(format!("mode matrix is {}x{} for {} modes", o.nrows(), o.ncols(), modes.len()));
    }
    let mut m = DMatrix::identity(2 * n_modes, 2 * n_modes);
    for (a, &ma) in modes.iter().enumerate() {
        for (b, &mb) in modes.iter().enumerate() {
            for q in 0..2 {
                m[(2 * ma + q, 2 * mb + q)] = o[(a, b)];
            }
        }
    }
    Ok(m)
}

/// `max |S Omega S^T - Omega|`.
pub fn symplectic_defect(s: &DMatrix<f64>) -> f64 {
    let n = s.nrows() / 2;
    let o = symplectic_form(n);
    (s * &o * s.transpose() - o).amax()
}
