//! Protocol model: users grouped behind lossy channels, an `N`-port relay
//! interferometer with a generalized Bell detection, and the effective
//! one-mode-per-group state left behind.
//!
//! Port layout: group `j` occupies a contiguous run of ports, its
//! cooperating members first and then its dummy (non-cooperating) users.
//! Ports not claimed by any group are dummies on the last group's channel.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};
use crate::gaussian::{symplectic_eigenvalues, CovarianceMatrix};
use crate::schemes::distance_to_transmissivity;

/// Lowest symplectic eigenvalue accepted for a reduced state.
pub const REDUCED_PHYSICALITY_TOL: f64 = 1e-6;

/// Thermal-loss link: transmissivity `eta` and noise variance `omega = 2n + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub eta: f64,
    pub omega: f64,
}

impl ChannelParams {
    pub fn new(eta: f64, omega: f64) -> Result<Self> {
        let ch = Self { eta, omega };
        ch.validate()?;
        Ok(ch)
    }

    pub fn ideal() -> Self {
        Self { eta: 1.0, omega: 1.0 }
    }

    /// Fiber link at 0.2 dB/km.
    pub fn from_distance(d_km: f64, omega: f64) -> Result<Self> {
        Self::new(distance_to_transmissivity(d_km, crate::schemes::FIBER_LOSS_DB_PER_KM)?, omega)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.eta) {
            return validation(format!("eta must lie in [0, 1], got {}", self.eta));
        }
        if !(self.omega >= 1.0) || !self.omega.is_finite() {
            return validation(format!("omega must be finite and >= 1, got {}", self.omega));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupSpec {
    /// Cooperating users `N_j`.
    pub members: usize,
    /// Non-cooperating users sharing this group's channel and ports.
    pub dummies: usize,
    pub channel: ChannelParams,
    /// Fiber length the channel was derived from, if any.
    pub distance_km: Option<f64>,
}

impl GroupSpec {
    pub fn new(members: usize, channel: ChannelParams) -> Self {
        Self { members, dummies: 0, channel, distance_km: None }
    }

    pub fn at_distance(members: usize, d_km: f64, omega: f64) -> Result<Self> {
        Ok(Self {
            members,
            dummies: 0,
            channel: ChannelParams::from_distance(d_km, omega)?,
            distance_km: Some(d_km),
        })
    }

    pub fn with_dummies(mut self, dummies: usize) -> Self {
        self.dummies = dummies;
        self
    }

    pub fn ports(&self) -> usize {
        self.members + self.dummies
    }

    /// Moves the group to a new fiber length, keeping `omega`.
    pub fn set_distance(&mut self, d_km: f64) -> Result<()> {
        self.channel = ChannelParams::from_distance(d_km, self.channel.omega)?;
        self.distance_km = Some(d_km);
        Ok(())
    }
}

/// How the relay combines groups when `M > 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelayMode {
    /// One joint detection over all groups; worst case over pairs and conditionings.
    #[default]
    Joint,
    /// Groups are paired up one session at a time.
    Switch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    pub total_users: usize,
    pub groups: Vec<GroupSpec>,
    pub mu: f64,
    pub tau: f64,
    pub xi: f64,
    pub relay: RelayMode,
}

impl ProtocolConfig {
    /// Ideal detector and reconciliation, `mu = 1`.
    pub fn new(total_users: usize, groups: Vec<GroupSpec>) -> Self {
        Self { total_users, groups, mu: 1.0, tau: 1.0, xi: 1.0, relay: RelayMode::Joint }
    }

    /// Every port cooperates: `N` is the sum of the group sizes.
    pub fn full_house(groups: Vec<GroupSpec>) -> Self {
        let n = groups.iter().map(|g| g.members).sum();
        Self::new(n, groups)
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    pub fn with_xi(mut self, xi: f64) -> Self {
        self.xi = xi;
        self
    }

    pub fn with_relay(mut self, relay: RelayMode) -> Self {
        self.relay = relay;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.total_users < 2 {
            return validation(format!("need at least 2 users, got {}", self.total_users));
        }
        if self.groups.is_empty() {
            return validation("no groups configured");
        }
        for (j, g) in self.groups.iter().enumerate() {
            if g.members == 0 {
                return validation(format!("group {j} has no cooperating members"));
            }
            g.channel.validate().map_err(|e| Error::Validation(format!("group {j}: {e}")))?;
        }
        let ports: usize = self.groups.iter().map(GroupSpec::ports).sum();
        if ports > self.total_users {
            return validation(format!("groups occupy {ports} ports but only {} users exist", self.total_users));
        }
        if !(self.mu >= 1.0) || !self.mu.is_finite() {
            return validation(format!("mu must be finite and >= 1, got {}", self.mu));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return validation(format!("tau must lie in (0, 1], got {}", self.tau));
        }
        if !(self.xi > 0.0 && self.xi <= 1.0) {
            return validation(format!("xi must lie in (0, 1], got {}", self.xi));
        }
        Ok(())
    }

    /// Number of groups `M`.
    pub fn m(&self) -> usize {
        self.groups.len()
    }

    pub fn cooperating(&self) -> usize {
        self.groups.iter().map(|g| g.members).sum()
    }

    pub fn is_full_house(&self) -> bool {
        self.cooperating() == self.total_users
    }

    /// Group index and cooperation flag for every interferometer port.
    pub fn port_roles(&self) -> Vec<PortRole> {
        let mut roles = Vec::with_capacity(self.total_users);
        for (j, g) in self.groups.iter().enumerate() {
            roles.extend((0..g.members).map(|_| PortRole { group: j, cooperating: true }));
            roles.extend((0..g.dummies).map(|_| PortRole { group: j, cooperating: false }));
        }
        let last = self.groups.len().saturating_sub(1);
        while roles.len() < self.total_users {
            roles.push(PortRole { group: last, cooperating: false });
        }
        roles
    }

    /// Smallest end-to-end transmissivity between two groups.
    pub fn weakest_pair_transmissivity(&self) -> f64 {
        let mut etas: Vec<f64> = self.groups.iter().map(|g| g.channel.eta).collect();
        etas.sort_by(f64::total_cmp);
        match etas.as_slice() {
            [a, b, ..] => a * b,
            [a] => *a,
            [] => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PortRole {
    pub group: usize,
    pub cooperating: bool,
}

/// Channel-dressed moments of one user's TMSV: `x` at the relay, `y` at home,
/// `z` their correlation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XYZParams {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

pub fn channel_params(mu: f64, ch: ChannelParams) -> Result<XYZParams> {
    if !(mu >= 1.0) || !mu.is_finite() {
        return validation(format!("mu must be finite and >= 1, got {mu}"));
    }
    ch.validate()?;
    Ok(XYZParams {
        x: ch.eta * mu + (1.0 - ch.eta) * ch.omega,
        y: mu,
        z: (ch.eta * (mu * mu - 1.0)).sqrt(),
    })
}

/// `y x - z^2`, expanded so no large terms cancel.
fn yx_minus_z2(mu: f64, ch: ChannelParams) -> f64 {
    ch.eta + mu * (1.0 - ch.eta) * ch.omega
}

/// The relay's `N x N` mode transformation. Row 1 is the balanced sum,
/// row `k` is `((k-1) A_k - sum_{i<k} A_i) / sqrt(k(k-1))`.
pub fn interferometer_modes(n: usize) -> Result<DMatrix<f64>> {
    if n < 2 {
        return validation(format!("interferometer needs at least 2 ports, got {n}"));
    }
    let mut r = DMatrix::zeros(n, n);
    let first = (n as f64).sqrt().recip();
    for j in 0..n {
        r[(0, j)] = first;
    }
    for k in 2..=n {
        let norm = ((k * (k - 1)) as f64).sqrt();
        for i in 0..k - 1 {
            r[(k - 1, i)] = -1.0 / norm;
        }
        r[(k - 1, k - 1)] = (k - 1) as f64 / norm;
    }
    Ok(r)
}

/// [`interferometer_modes`] acting identically on both quadratures (`2N x 2N`).
pub fn interferometer_matrix(n: usize) -> Result<DMatrix<f64>> {
    let r = interferometer_modes(n)?;
    let modes: Vec<usize> = (0..n).collect();
    crate::symplectic::passive(n, &modes, &r)
}

/// Per-port channel moments. Dummy ports carry vacuum (`mu = 1`) through their group's channel.
pub fn port_params(cfg: &ProtocolConfig) -> Result<Vec<XYZParams>> {
    cfg.port_roles()
        .iter()
        .map(|r| {
            let mu = if r.cooperating { cfg.mu } else { 1.0 };
            channel_params(mu, cfg.groups[r.group].channel)
        })
        .collect()
}

/// Global state entering the detectors, modes ordered `B_1..B_N, A_1..A_N`:
/// `[[Y, U], [U^T, X]]` with `U_jk = R_kj z_j Z` and `X_kl = sum_j R_kj R_lj x_j I`.
pub fn full_input_cm(cfg: &ProtocolConfig) -> Result<CovarianceMatrix> {
    cfg.validate()?;
    let n = cfg.total_users;
    let r = interferometer_modes(n)?;
    let p = port_params(cfg)?;
    let mut v = DMatrix::zeros(4 * n, 4 * n);
    for j in 0..n {
        v[(2 * j, 2 * j)] = p[j].y;
        v[(2 * j + 1, 2 * j + 1)] = p[j].y;
        for k in 0..n {
            let u = r[(k, j)] * p[j].z;
            let (b, a) = (2 * j, 2 * (n + k));
            v[(b, a)] = u;
            v[(a, b)] = u;
            v[(b + 1, a + 1)] = -u;
            v[(a + 1, b + 1)] = -u;
        }
    }
    for k in 0..n {
        for l in 0..n {
            let xi: f64 = (0..n).map(|j| r[(k, j)] * r[(l, j)] * p[j].x).sum();
            let (a, b) = (2 * (n + k), 2 * (n + l));
            v[(a, b)] = xi;
            v[(a + 1, b + 1)] = xi;
        }
    }
    Ok(CovarianceMatrix::symmetrized(v))
}

/// Orthonormal completion of the uniform vector inside one group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Completion {
    /// Householder reflection taking `e_n` to `v`, first column negated to make it a rotation.
    #[default]
    Householder,
    /// Modified Gram-Schmidt over `v, e_1, e_2, ...`.
    GramSchmidt,
}

fn group_basis(n: usize, completion: Completion) -> DMatrix<f64> {
    let v = nalgebra::DVector::from_element(n, (n as f64).sqrt().recip());
    if n == 1 {
        return DMatrix::identity(1, 1);
    }
    match completion {
        Completion::Householder => {
            let mut u = -v.clone();
            u[n - 1] += 1.0;
            let mut h = DMatrix::identity(n, n) - &u * u.transpose() * (2.0 / u.norm_squared());
            h.column_mut(0).neg_mut();
            h
        }
        Completion::GramSchmidt => {
            let mut basis = vec![v.clone()];
            for i in 0..n - 1 {
                let mut e = nalgebra::DVector::zeros(n);
                e[i] = 1.0;
                for b in &basis {
                    let proj = b.dot(&e);
                    e -= b * proj;
                }
                basis.push(e.normalize());
            }
            let mut o = DMatrix::zeros(n, n);
            for (c, b) in basis.iter().skip(1).enumerate() {
                o.set_column(c, b);
            }
            o.set_column(n - 1, &v);
            o
        }
    }
}

/// Block-diagonal orthogonal matrix, one `N_j x N_j` block per group whose
/// last column is `N_j^{-1/2} (1, ..., 1)`, extended to both quadratures.
/// Its columns are the new modes, so states transform with its transpose.
pub fn localization_rotation(group_sizes: &[usize]) -> DMatrix<f64> {
    localization_rotation_with(group_sizes, Completion::Householder)
}

pub fn localization_rotation_with(group_sizes: &[usize], completion: Completion) -> DMatrix<f64> {
    let total: usize = group_sizes.iter().sum();
    let mut o = DMatrix::zeros(total, total);
    let mut at = 0;
    for &n in group_sizes {
        if n > 0 {
            o.view_mut((at, at), (n, n)).copy_from(&group_basis(n, completion));
        }
        at += n;
    }
    let modes: Vec<usize> = (0..total).collect();
    crate::symplectic::passive(total, &modes, &o).expect("square block matrix")
}

/// Detector inefficiency folded into the closed forms.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorShift {
    /// `(1 - tau) / tau`, added to every `x_j` in the full-house forms.
    pub x_shift: f64,
    /// `N (1 - tau) / tau`, added to each weighted sum of the two-group form.
    pub lambda_shift: f64,
    /// Group moments with `x` already shifted.
    pub params: Vec<XYZParams>,
}

pub fn detector_loss_transform(cfg: &ProtocolConfig) -> Result<DetectorShift> {
    cfg.validate()?;
    let x_shift = (1.0 - cfg.tau) / cfg.tau;
    let params = cfg
        .groups
        .iter()
        .map(|g| {
            let mut p = channel_params(cfg.mu, g.channel)?;
            p.x += x_shift;
            Ok(p)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DetectorShift { x_shift, lambda_shift: cfg.total_users as f64 * x_shift, params })
}

fn check_reduced(v: CovarianceMatrix) -> Result<CovarianceMatrix> {
    let spec = symplectic_eigenvalues(&v)?;
    if spec.min() < 1.0 - REDUCED_PHYSICALITY_TOL {
        return Err(Error::Consistency(format!(
            "reduced state is unphysical (smallest symplectic eigenvalue {})",
            spec.min()
        )));
    }
    Ok(v)
}

/// Effective one-mode-per-group state after detection and localization.
///
/// Full house, any `M`: with `s = sum N_k / x_k` and `t = sum N_k x_k`,
/// `q_ij = y d_ij - d_ij z_i^2 / x_i + sqrt(N_i N_j) z_i z_j / (x_i x_j s)` and
/// `p_ij = y d_ij - sqrt(N_i N_j) z_i z_j / t`. Two groups with dummies go
/// through [`bipartite_cm`]; more groups with dummies are rejected.
pub fn reduced_cm_multipartite(cfg: &ProtocolConfig) -> Result<CovarianceMatrix> {
    cfg.validate()?;
    let m = cfg.m();
    if m < 2 {
        return validation(format!("need at least 2 groups, got {m}"));
    }
    if !cfg.is_full_house() {
        if m == 2 {
            return bipartite_cm(cfg);
        }
        return validation("dummy users are only supported with two groups");
    }
    let shift = detector_loss_transform(cfg)?;
    let p = &shift.params;
    let nn: Vec<f64> = cfg.groups.iter().map(|g| g.members as f64).collect();
    let w: Vec<f64> = cfg.groups.iter().map(|g| yx_minus_z2(cfg.mu, g.channel) + cfg.mu * shift.x_shift).collect();
    let s: f64 = (0..m).map(|k| nn[k] / p[k].x).sum();
    let t: f64 = (0..m).map(|k| nn[k] * p[k].x).sum();
    let y = cfg.mu;
    let mut v = DMatrix::zeros(2 * m, 2 * m);
    for i in 0..m {
        for j in 0..m {
            let c = (nn[i] * nn[j]).sqrt() * p[i].z * p[j].z;
            let (q, pp) = if i == j {
                // y - z^2/x + N z^2/(x^2 s) and y - N z^2 / t, as sums of non-negative terms.
                let q = w[i] / p[i].x + c / (p[i].x * p[i].x * s);
                let rest: f64 = (0..m).filter(|&k| k != i).map(|k| nn[k] * p[k].x).sum();
                (q, (y * rest + nn[i] * w[i]) / t)
            } else {
                (c / (p[i].x * p[j].x * s), -c / t)
            };
            v[(2 * i, 2 * j)] = q;
            v[(2 * i + 1, 2 * j + 1)] = pp;
        }
    }
    check_reduced(CovarianceMatrix::symmetrized(v))
}

/// Two-group state with weighted sums `L(a, b) = a x_1 + b x_2`:
/// `Delta_l = y - diag((N - N_l) z_l^2 / L(N-N_1, N-N_2), N_l z_l^2 / L(N-N_2, N-N_1))`,
/// off-diagonal `z_1 z_2 sqrt(N_1 N_2) diag(1 / L(N-N_1, N-N_2), -1 / L(N-N_2, N-N_1))`.
/// Valid with or without dummy users. Detector loss adds `N (1-tau)/tau` to each sum.
pub fn bipartite_cm(cfg: &ProtocolConfig) -> Result<CovarianceMatrix> {
    cfg.validate()?;
    if cfg.m() != 2 {
        return validation(format!("bipartite state needs exactly 2 groups, got {}", cfg.m()));
    }
    let shift = detector_loss_transform(cfg)?;
    let n = cfg.total_users as f64;
    let nn = [cfg.groups[0].members as f64, cfg.groups[1].members as f64];
    let xyz = [channel_params(cfg.mu, cfg.groups[0].channel)?, channel_params(cfg.mu, cfg.groups[1].channel)?];
    let w = [yx_minus_z2(cfg.mu, cfg.groups[0].channel), yx_minus_z2(cfg.mu, cfg.groups[1].channel)];
    let y = cfg.mu;
    let lq = [n - nn[0], n - nn[1]];
    let lp = [n - nn[1], n - nn[0]];
    let lambda = |a: [f64; 2]| a[0] * xyz[0].x + a[1] * xyz[1].x + shift.lambda_shift;
    let (big_q, big_p) = (lambda(lq), lambda(lp));
    // y - k z_l^2 / L with L = sum a_m x_m + c, rewritten as
    // (k w_l + (a_l - k) y x_l + sum_{m != l} a_m y x_m + c y) / L.
    let diag = |l: usize, k: f64, a: [f64; 2], big: f64| {
        let o = 1 - l;
        (k * w[l] + (a[l] - k) * y * xyz[l].x + a[o] * y * xyz[o].x + shift.lambda_shift * y) / big
    };
    let mut v = DMatrix::zeros(4, 4);
    for l in 0..2 {
        v[(2 * l, 2 * l)] = diag(l, lq[l], lq, big_q);
        v[(2 * l + 1, 2 * l + 1)] = diag(l, nn[l], lp, big_p);
    }
    let c = xyz[0].z * xyz[1].z * (nn[0] * nn[1]).sqrt();
    v[(0, 2)] = c / big_q;
    v[(2, 0)] = c / big_q;
    v[(1, 3)] = -c / big_p;
    v[(3, 1)] = -c / big_p;
    check_reduced(CovarianceMatrix::symmetrized(v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::{beamsplitter, symplectic_defect};

    fn fh(n1: usize, n2: usize, eta: [f64; 2], omega: [f64; 2]) -> ProtocolConfig {
        ProtocolConfig::full_house(vec![
            GroupSpec::new(n1, ChannelParams::new(eta[0], omega[0]).unwrap()),
            GroupSpec::new(n2, ChannelParams::new(eta[1], omega[1]).unwrap()),
        ])
    }

    #[test]
    fn channel_param_examples() {
        let p = channel_params(1.0, ChannelParams::new(0.5, 2.0).unwrap()).unwrap();
        assert_eq!((p.x, p.y, p.z), (1.5, 1.0, 0.0));
        let p = channel_params(5.0, ChannelParams::new(1.0, 3.0).unwrap()).unwrap();
        assert_eq!((p.x, p.y), (5.0, 5.0));
        assert!((p.z - 24f64.sqrt()).abs() < 1e-15);
        let p = channel_params(5.0, ChannelParams::new(0.0, 3.0).unwrap()).unwrap();
        assert_eq!((p.x, p.z), (3.0, 0.0));
        assert!(channel_params(0.5, ChannelParams::ideal()).is_err());
    }

    #[test]
    fn interferometer_rows() {
        let h = 0.5f64.sqrt();
        let r = interferometer_modes(2).unwrap();
        assert!((r - DMatrix::from_row_slice(2, 2, &[h, h, -h, h])).amax() < 1e-15);
        let r = interferometer_modes(3).unwrap();
        let s6 = 6f64.sqrt();
        for (j, want) in [-1.0 / s6, -1.0 / s6, 2.0 / s6].iter().enumerate() {
            assert!((r[(2, j)] - want).abs() < 1e-15);
        }
        assert!(interferometer_modes(1).is_err());
    }

    #[test]
    fn interferometer_is_orthogonal_and_symplectic() {
        for n in 2..=10 {
            let r = interferometer_matrix(n).unwrap();
            assert!((&r * r.transpose() - DMatrix::identity(2 * n, 2 * n)).amax() < 1e-12);
            assert!(symplectic_defect(&r) < 1e-12);
        }
    }

    #[test]
    fn interferometer_is_a_beamsplitter_cascade() {
        // Running sum in port 0; at step k it meets A_k on a 1 - 1/k splitter.
        for n in 2..=7 {
            let mut s = DMatrix::identity(2 * n, 2 * n);
            for k in 2..=n {
                let t = 1.0 - 1.0 / k as f64;
                s = beamsplitter(n, 0, k - 1, t).unwrap() * s;
            }
            // The cascade leaves the balanced sum in port 0 and row-k differences in port k-1.
            let r = interferometer_matrix(n).unwrap();
            assert!((s - r).amax() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn localization_examples() {
        assert_eq!(localization_rotation(&[1]), DMatrix::identity(2, 2));
        let h = 0.5f64.sqrt();
        let o = localization_rotation(&[2]);
        let want = DMatrix::from_row_slice(2, 2, &[h, h, -h, h]);
        for q in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    assert!((o[(2 * a + q, 2 * b + q)] - want[(a, b)]).abs() < 1e-15);
                }
            }
        }
        for c in [Completion::Householder, Completion::GramSchmidt] {
            let o = localization_rotation_with(&[3, 1, 4], c);
            assert!((&o * o.transpose() - DMatrix::identity(16, 16)).amax() < 1e-14);
            // Last column of the third group is the uniform vector over modes 4..8.
            for a in 4..8 {
                assert!((o[(2 * a, 14)] - 0.5).abs() < 1e-15 && (o[(2 * a + 1, 15)] - 0.5).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn vacuum_input_has_no_correlations() {
        let cfg = fh(2, 3, [0.7, 0.9], [1.05, 1.0]);
        let v = full_input_cm(&cfg).unwrap();
        for j in 0..5 {
            assert_eq!(v.block(j, j), nalgebra::Matrix2::identity());
            for k in 5..10 {
                assert_eq!(v.block(j, k), nalgebra::Matrix2::zeros());
            }
        }
    }

    #[test]
    fn input_cm_for_two_ideal_users() {
        let cfg = fh(1, 1, [1.0, 1.0], [1.0, 1.0]).with_mu(4.0);
        let v = full_input_cm(&cfg).unwrap();
        // Lambda_{1,1}/2 on the diagonal and Lambda_{1,-1}/2 off it.
        assert!((v.matrix()[(4, 4)] - 4.0).abs() < 1e-14);
        assert!(v.matrix()[(4, 6)].abs() < 1e-14);
        assert!(v.is_physical(1e-9));
    }

    #[test]
    fn reduced_two_group_matches_bipartite_form() {
        let cfg = fh(2, 3, [0.4, 0.8], [1.2, 1.0]).with_mu(37.0).with_tau(0.9);
        let a = reduced_cm_multipartite(&cfg).unwrap();
        let b = bipartite_cm(&cfg).unwrap();
        assert!((a.matrix() - b.matrix()).amax() < 1e-11);
    }

    #[test]
    fn symmetric_bipartite_diagonal() {
        let (eta, omega, mu) = (0.6, 1.1, 9.0);
        let cfg = fh(3, 3, [eta, eta], [omega, omega]).with_mu(mu);
        let v = bipartite_cm(&cfg).unwrap();
        let p = channel_params(mu, ChannelParams::new(eta, omega).unwrap()).unwrap();
        let want = mu - 3.0 * p.z * p.z / (6.0 * p.x);
        assert!((v.matrix()[(0, 0)] - want).abs() < 1e-12);
        assert_eq!(v.block(0, 0), v.block(1, 1));
    }

    #[test]
    fn unit_modulation_is_vacuum() {
        let cfg = fh(2, 2, [0.3, 0.9], [1.3, 1.0]).with_tau(0.8);
        let v = bipartite_cm(&cfg).unwrap();
        assert!((v.matrix() - DMatrix::identity(4, 4)).amax() < 1e-15);
        let mut d = cfg.clone();
        d.total_users = 6;
        let v = bipartite_cm(&d).unwrap();
        assert!((v.matrix() - DMatrix::identity(4, 4)).amax() < 1e-15);
    }

    #[test]
    fn detector_shift_examples() {
        let cfg = fh(2, 2, [0.3, 0.9], [1.3, 1.0]).with_mu(5.0);
        let s = detector_loss_transform(&cfg).unwrap();
        assert_eq!(s.x_shift, 0.0);
        let s = detector_loss_transform(&cfg.clone().with_tau(0.5)).unwrap();
        let base = channel_params(5.0, cfg.groups[0].channel).unwrap();
        assert!((s.params[0].x - base.x - 1.0).abs() < 1e-15);
        assert_eq!(s.lambda_shift, 4.0);
        assert!(detector_loss_transform(&cfg.with_tau(0.0)).is_err());
    }

    #[test]
    fn three_groups_match_product_form() {
        // q diagonal y - z_1^2 (N_2 x_3 + N_3 x_2) / Theta_q, Theta_q = N_1 x_2 x_3 + cyclic.
        let g = |n, e| GroupSpec::new(n, ChannelParams::new(e, 1.1).unwrap());
        let cfg = ProtocolConfig::full_house(vec![g(2, 0.5), g(1, 0.7), g(3, 0.9)]).with_mu(20.0);
        let v = reduced_cm_multipartite(&cfg).unwrap();
        let p: Vec<_> = cfg.groups.iter().map(|g| channel_params(20.0, g.channel).unwrap()).collect();
        let (x, z) = ([p[0].x, p[1].x, p[2].x], [p[0].z, p[1].z, p[2].z]);
        let th = 2.0 * x[1] * x[2] + 1.0 * x[2] * x[0] + 3.0 * x[0] * x[1];
        let q11 = 20.0 - z[0] * z[0] * (1.0 * x[2] + 3.0 * x[1]) / th;
        let q12 = 2f64.sqrt() * z[0] * z[1] * x[2] / th;
        let p13 = -6f64.sqrt() * z[0] * z[2] / (2.0 * x[0] + x[1] + 3.0 * x[2]);
        assert!((v.matrix()[(0, 0)] - q11).abs() < 1e-12);
        assert!((v.matrix()[(0, 2)] - q12).abs() < 1e-12);
        assert!((v.matrix()[(1, 5)] - p13).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        let mut cfg = fh(2, 2, [0.5, 0.5], [1.0, 1.0]);
        cfg.total_users = 3;
        assert!(cfg.validate().is_err());
        assert!(fh(2, 2, [0.5, 0.5], [1.0, 1.0]).with_xi(1.2).validate().is_err());
        assert!(ChannelParams::new(1.1, 1.0).is_err());
        assert!(ChannelParams::new(0.5, 0.9).is_err());
        let g = |n| GroupSpec::new(n, ChannelParams::ideal()).with_dummies(1);
        let three = ProtocolConfig::new(9, vec![g(2), g(2), g(2)]).with_mu(3.0);
        assert!(reduced_cm_multipartite(&three).is_err());
    }
}
