//! Secret-key rates `R = xi I - chi`: Holevo bound on the eavesdropper,
//! mutual information between groups, closed-form infinite-modulation
//! limits, worst cases over many groups, and the search over modulation.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};
use crate::gaussian::{entropic_h, purity_band, heterodyne_condition, symplectic_eigenvalues, two_mode_spectrum, CovarianceMatrix};
use crate::optimize::maximize_log_scan;
use crate::protocol::{bipartite_cm, reduced_cm_multipartite, ProtocolConfig, RelayMode};

pub const DEFAULT_MU_MAX: f64 = 1e6;
pub const MU_MIN: f64 = 1.0 + 1e-6;
pub const MU_GRID_POINTS: usize = 64;
pub const MU_REL_TOL: f64 = 1e-6;
/// Below this `|eta_1 - eta_2|` the symmetric limit is used.
pub const SYMMETRIC_ETA_TOL: f64 = 1e-9;
/// Group that heterodynes in the two-group protocol (the second one).
pub const DEFAULT_DECODER: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateMode {
    Exact,
    AsymptoticFh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateStatus {
    Ok,
    NoPositiveRate,
}

impl RateMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RateMode::Exact => "exact",
            RateMode::AsymptoticFh => "asymptotic_fh",
        }
    }
}

impl RateStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RateStatus::Ok => "ok",
            RateStatus::NoPositiveRate => "no_positive_rate",
        }
    }

    fn of(rate: f64) -> Self {
        if rate > 0.0 {
            RateStatus::Ok
        } else {
            RateStatus::NoPositiveRate
        }
    }
}

/// A rate with its ingredients. In asymptotic mode `I` and `chi` diverge and
/// are reported as infinite; only `rate` is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub rate: f64,
    pub mutual_information: f64,
    pub holevo: f64,
    pub nu_plus: f64,
    pub nu_minus: f64,
    pub nu_cond: f64,
    /// Full symplectic spectrum of the reduced state, descending.
    pub spectrum: Vec<f64>,
    /// Spectrum after the worst-case heterodyne, descending.
    pub conditional_spectrum: Vec<f64>,
    pub mu_used: f64,
    pub xi: f64,
    pub mode: RateMode,
    pub status: RateStatus,
    /// Group whose heterodyne maximizes `chi`.
    pub conditioned_group: usize,
    /// Groups whose mutual information (or switch session) limits the rate.
    pub limiting_pair: (usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Holevo {
    pub chi: f64,
    pub nu_plus: f64,
    pub nu_minus: f64,
    pub nu_cond: f64,
}

fn check_two_mode(v2: &CovarianceMatrix, decoder: usize) -> Result<()> {
    if v2.n_modes() != 2 {
        return validation(format!("expected a two-mode state, got {} modes", v2.n_modes()));
    }
    if decoder > 1 {
        return validation(format!("decoder must be group 0 or 1, got {decoder}"));
    }
    Ok(())
}

/// `chi = h(nu+) + h(nu-) - h(nu_cond)`, `nu_cond` the symplectic eigenvalue
/// left after the decoder heterodynes.
pub fn holevo_bipartite(v2: &CovarianceMatrix, decoder: usize) -> Result<Holevo> {
    check_two_mode(v2, decoder)?;
    let (nu_plus, nu_minus) = two_mode_spectrum(v2)?;
    let cond = heterodyne_condition(v2, decoder)?;
    let det = cond.determinant();
    if !(det > 0.0) {
        return Err(Error::Domain(format!("conditional state has determinant {det}")));
    }
    // Rounding in the conditioning is set by the parent state's scale.
    let nu_cond = match det.sqrt() {
        nu if nu < 1.0 && nu >= 1.0 - purity_band(v2.scale()) => 1.0,
        nu => nu,
    };
    let chi = entropic_h(nu_plus)? + entropic_h(nu_minus)? - entropic_h(nu_cond)?;
    Ok(Holevo { chi, nu_plus, nu_minus, nu_cond })
}

fn one_plus_det_tr(v: &CovarianceMatrix) -> f64 {
    let m = v.matrix();
    1.0 + v.determinant() + m.trace()
}

/// `I = 1/2 log2 [(1 + det G + tr G) / (1 + det V_c + tr V_c)]` with `G` the
/// encoder's block and `V_c` the encoder after the decoder heterodynes.
pub fn mutual_information_bipartite(v2: &CovarianceMatrix, decoder: usize) -> Result<f64> {
    check_two_mode(v2, decoder)?;
    let encoder = v2.select_modes(&[1 - decoder])?;
    let cond = heterodyne_condition(v2, decoder)?;
    Ok(0.5 * (one_plus_det_tr(&encoder) / one_plus_det_tr(&cond)).log2())
}

/// Exact rate at the configured modulation. More than two groups go to
/// [`multipartite_rate`] with the configured relay mode.
pub fn secret_key_rate(cfg: &ProtocolConfig) -> Result<RateReport> {
    cfg.validate()?;
    match cfg.m() {
        0 | 1 => validation(format!("need at least 2 groups, got {}", cfg.m())),
        2 => bipartite_rate(cfg),
        _ => multipartite_rate(cfg, cfg.relay == RelayMode::Switch),
    }
}

fn bipartite_rate(cfg: &ProtocolConfig) -> Result<RateReport> {
    let v = bipartite_cm(cfg)?;
    let h = holevo_bipartite(&v, DEFAULT_DECODER)?;
    let i = mutual_information_bipartite(&v, DEFAULT_DECODER)?;
    let rate = cfg.xi * i - h.chi;
    Ok(RateReport {
        rate,
        mutual_information: i,
        holevo: h.chi,
        nu_plus: h.nu_plus,
        nu_minus: h.nu_minus,
        nu_cond: h.nu_cond,
        spectrum: vec![h.nu_plus, h.nu_minus],
        conditional_spectrum: vec![h.nu_cond],
        mu_used: cfg.mu,
        xi: cfg.xi,
        mode: RateMode::Exact,
        status: RateStatus::of(rate),
        conditioned_group: DEFAULT_DECODER,
        limiting_pair: (0, 1),
    })
}

/// Infinite-modulation limit of the full-house two-group rate, `xi = 1`.
///
/// With `a_j = 1 - tau + tau w_j (1 - e_j)`, `r = a_2 + tau e_2`, `l = a_1 + tau e_1`
/// and the weighted sums `S = (N_1 a_1 + N_2 a_2)(N_2 a_1 + N_1 a_2)`,
/// `R = (N_1 a_1 + N_2 r)(N_2 a_1 + N_1 r)`, `L = (N_1 l + N_2 r)(N_2 l + N_1 r)`:
///
/// `rate = log2(2 tau e_1 e_2 / (e |e_1 - e_2|) sqrt(N_1 N_2 / L))
///        - h(sqrt(S / N_1 N_2) / (tau |e_1 - e_2|)) + h(sqrt(R / N_1 N_2) / (tau e_1))`.
///
/// At `e_1 = e_2` the first two terms merge into
/// `log2(4 tau^2 e_1 e_2 N_1 N_2 / (e^2 sqrt(L S)))`.
pub fn asymptotic_rate_fh(cfg: &ProtocolConfig) -> Result<RateReport> {
    cfg.validate()?;
    if cfg.m() != 2 {
        return validation(format!("the infinite-modulation limit needs 2 groups, got {}", cfg.m()));
    }
    if !cfg.is_full_house() {
        return validation("the infinite-modulation limit exists only when every user cooperates");
    }
    if cfg.xi != 1.0 {
        return validation("with xi < 1 the rate diverges to -inf at infinite modulation");
    }
    let (g1, g2) = (&cfg.groups[0], &cfg.groups[1]);
    let (e1, e2) = (g1.channel.eta, g2.channel.eta);
    let (n1, n2) = (g1.members as f64, g2.members as f64);
    let tau = cfg.tau;
    let a1 = 1.0 - tau + tau * g1.channel.omega * (1.0 - e1);
    let a2 = 1.0 - tau + tau * g2.channel.omega * (1.0 - e2);
    let r2 = a2 + tau * e2;
    let l1 = a1 + tau * e1;
    let s = (n1 * a1 + n2 * a2) * (n2 * a1 + n1 * a2);
    let r = (n1 * a1 + n2 * r2) * (n2 * a1 + n1 * r2);
    let l = (n1 * l1 + n2 * r2) * (n2 * l1 + n1 * r2);
    let nn = n1 * n2;

    let report = |rate: f64, nu_minus: f64, nu_cond: f64| RateReport {
        rate,
        mutual_information: f64::INFINITY,
        holevo: f64::INFINITY,
        nu_plus: f64::INFINITY,
        nu_minus,
        nu_cond,
        spectrum: vec![f64::INFINITY, nu_minus],
        conditional_spectrum: vec![nu_cond],
        mu_used: f64::INFINITY,
        xi: cfg.xi,
        mode: RateMode::AsymptoticFh,
        status: RateStatus::of(rate),
        conditioned_group: DEFAULT_DECODER,
        limiting_pair: (0, 1),
    };
    if e1 == 0.0 || e2 == 0.0 {
        // No correlations survive the channel.
        return Ok(report(0.0, 1.0, 1.0));
    }
    let nu_cond = (r / nn).sqrt() / (tau * e1);
    let gain = entropic_h(nu_cond)?;
    let de = (e1 - e2).abs();
    if de < SYMMETRIC_ETA_TOL {
        let rate = (4.0 * tau * tau * e1 * e2 * nn / (E * E * (l * s).sqrt())).log2() + gain;
        return Ok(report(rate, f64::INFINITY, nu_cond));
    }
    let nu_minus = (s / nn).sqrt() / (tau * de);
    let rate = (2.0 * tau * e1 * e2 / (E * de) * (nn / l).sqrt()).log2() - entropic_h(nu_minus)? + gain;
    Ok(report(rate, nu_minus, nu_cond))
}

/// Rate maximized over the modulation `mu`.
///
/// Full-house pairs with `xi = 1` increase monotonically in `mu`, so the
/// closed-form limit is returned with `mu* = inf`. Everything else is
/// scanned on 64 log-spaced points in `[1 + 1e-6, mu_max]` and refined by
/// golden section. Switch relays optimize each session separately.
pub fn optimize_modulation(cfg: &ProtocolConfig, mu_max: f64) -> Result<(f64, RateReport)> {
    cfg.validate()?;
    if !(mu_max > MU_MIN) {
        return validation(format!("mu_max must exceed {MU_MIN}, got {mu_max}"));
    }
    let m = cfg.m();
    if m < 2 {
        return validation(format!("need at least 2 groups, got {m}"));
    }
    if m == 2 && cfg.is_full_house() && cfg.xi == 1.0 {
        let r = asymptotic_rate_fh(cfg)?;
        return Ok((f64::INFINITY, r));
    }
    if m > 2 && cfg.relay == RelayMode::Switch {
        let mut worst: Option<(f64, RateReport)> = None;
        for (a, b) in pairs(m) {
            let (mu, mut r) = optimize_modulation(&session_config(cfg, a, b), mu_max)?;
            r.limiting_pair = (a, b);
            r.conditioned_group = b;
            if worst.as_ref().is_none_or(|w| r.rate < w.1.rate) {
                worst = Some((mu, r));
            }
        }
        return Ok(worst.expect("at least one pair"));
    }
    let best = maximize_log_scan(
        |mu| secret_key_rate(&cfg.clone().with_mu(mu)).map(|r| r.rate),
        MU_MIN,
        mu_max,
        MU_GRID_POINTS,
        MU_REL_TOL,
    )?;
    let report = secret_key_rate(&cfg.clone().with_mu(best.x))?;
    Ok((best.x, report))
}

fn pairs(m: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..m).flat_map(move |a| (a + 1..m).map(move |b| (a, b)))
}

/// Two-group session between groups `a` and `b` alone at the relay; `b` decodes.
pub fn session_config(cfg: &ProtocolConfig, a: usize, b: usize) -> ProtocolConfig {
    let groups = vec![cfg.groups[a].clone(), cfg.groups[b].clone()];
    let n = groups.iter().map(|g| g.ports()).sum();
    ProtocolConfig { total_users: n, groups, relay: RelayMode::Joint, ..cfg.clone() }
}

/// `S(V) - S(V after heterodyning group condition_on)`.
pub fn holevo_multipartite(vm: &CovarianceMatrix, condition_on: usize) -> Result<f64> {
    if vm.n_modes() < 2 {
        return validation("need at least 2 groups");
    }
    let total = symplectic_eigenvalues(vm)?.entropy()?;
    let cond = heterodyne_condition(vm, condition_on)?;
    Ok(total - symplectic_eigenvalues(&cond)?.entropy()?)
}

/// Worst-case rate over all groups.
///
/// Joint relay: `xi * min_pairs I - max_conditionings chi`, both enumerated
/// exhaustively. The pair information uses the two groups' sub-state with the
/// later group heterodyning. Switch relay: each pair runs its own two-group
/// session at the configured `mu` and the weakest session is reported.
/// With two groups both reduce to [`secret_key_rate`].
pub fn multipartite_rate(cfg: &ProtocolConfig, switch: bool) -> Result<RateReport> {
    cfg.validate()?;
    let m = cfg.m();
    if m < 2 {
        return validation(format!("need at least 2 groups, got {m}"));
    }
    if m == 2 {
        return bipartite_rate(cfg);
    }
    if switch {
        let mut worst: Option<RateReport> = None;
        for (a, b) in pairs(m) {
            let mut r = bipartite_rate(&session_config(cfg, a, b))?;
            r.limiting_pair = (a, b);
            r.conditioned_group = b;
            if worst.as_ref().is_none_or(|w| r.rate < w.rate) {
                worst = Some(r);
            }
        }
        return Ok(worst.expect("at least one pair"));
    }
    let vm = reduced_cm_multipartite(cfg)?;
    let spectrum = symplectic_eigenvalues(&vm)?;
    let total = spectrum.entropy()?;
    let mut chi = f64::NEG_INFINITY;
    let mut conditioned_group = 0;
    let mut conditional_spectrum = Vec::new();
    for c in 0..m {
        let cond = symplectic_eigenvalues(&heterodyne_condition(&vm, c)?)?;
        let chi_c = total - cond.entropy()?;
        if chi_c > chi {
            chi = chi_c;
            conditioned_group = c;
            conditional_spectrum = cond.values().to_vec();
        }
    }
    let mut info = f64::INFINITY;
    let mut limiting_pair = (0, 1);
    for (a, b) in pairs(m) {
        let i = mutual_information_bipartite(&vm.select_modes(&[a, b])?, 1)?;
        if i < info {
            info = i;
            limiting_pair = (a, b);
        }
    }
    let rate = cfg.xi * info - chi;
    Ok(RateReport {
        rate,
        mutual_information: info,
        holevo: chi,
        nu_plus: spectrum.max(),
        nu_minus: spectrum.min(),
        nu_cond: conditional_spectrum[0],
        spectrum: spectrum.values().to_vec(),
        conditional_spectrum,
        mu_used: cfg.mu,
        xi: cfg.xi,
        mode: RateMode::Exact,
        status: RateStatus::of(rate),
        conditioned_group,
        limiting_pair,
    })
}
