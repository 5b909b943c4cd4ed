//! Closed forms against the brute-force pipeline on a fixed set of configs.

use qss_core::oracle::oracle_reduced_cm;
use qss_core::protocol::{reduced_cm_multipartite, ChannelParams, GroupSpec, ProtocolConfig};
use qss_core::rates::{asymptotic_rate_fh, holevo_bipartite, mutual_information_bipartite, secret_key_rate};

/// Entrywise agreement of reduced states, relative to the state's scale.
const CM_TOL: f64 = 1e-9;
/// Rate agreement between the large-modulation oracle and the limit formula.
const LIMIT_TOL: f64 = 1e-3;
const LIMIT_MU: f64 = 1e8;

pub struct Check {
    pub name: String,
    pub error: f64,
    pub tol: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.error <= self.tol
    }
}

fn config(groups: &[(usize, f64, f64)], mu: f64, tau: f64) -> ProtocolConfig {
    let groups = groups
        .iter()
        .map(|&(n, eta, omega)| GroupSpec::new(n, ChannelParams::new(eta, omega).expect("fixed parameters are valid")))
        .collect();
    ProtocolConfig::full_house(groups).with_mu(mu).with_tau(tau)
}

fn cases() -> Vec<(&'static str, ProtocolConfig)> {
    vec![
        ("2 groups 1+1", config(&[(1, 0.6, 1.0), (1, 0.95, 1.0)], 25.0, 1.0)),
        ("2 groups 2+3 noisy", config(&[(2, 0.35, 1.2), (3, 0.8, 1.05)], 60.0, 1.0)),
        ("2 groups 3+1 lossy detector", config(&[(3, 0.5, 1.1), (1, 1.0, 1.0)], 9.0, 0.98)),
        ("3 groups 1+2+1", config(&[(1, 0.7, 1.0), (2, 0.9, 1.0), (1, 0.99, 1.0)], 40.0, 1.0)),
        ("3 groups 2+2+2 lossy detector", config(&[(2, 0.3, 1.15), (2, 0.55, 1.0), (2, 0.9, 1.3)], 85.0, 0.98)),
    ]
}

fn cm_check(name: &str, cfg: &ProtocolConfig) -> qss_core::Result<Check> {
    let (oracle, _) = oracle_reduced_cm(cfg)?;
    let analytic = reduced_cm_multipartite(cfg)?;
    let error = (oracle.matrix() - analytic.matrix()).amax() / oracle.scale();
    Ok(Check { name: format!("reduced state, {name}"), error, tol: CM_TOL })
}

fn limit_check(name: &str, cfg: &ProtocolConfig) -> qss_core::Result<Check> {
    let big = cfg.clone().with_mu(LIMIT_MU);
    let (v, _) = oracle_reduced_cm(&big)?;
    let oracle_rate = mutual_information_bipartite(&v, 1)? - holevo_bipartite(&v, 1)?.chi;
    let limit = asymptotic_rate_fh(cfg)?.rate;
    let exact = secret_key_rate(&big)?.rate;
    let error = (oracle_rate - limit).abs().max((exact - limit).abs());
    Ok(Check { name: format!("large-modulation rate, {name}"), error, tol: LIMIT_TOL })
}

pub fn run() -> qss_core::Result<Vec<Check>> {
    let mut out = Vec::new();
    for (name, cfg) in cases() {
        out.push(cm_check(name, &cfg)?);
        if cfg.m() == 2 {
            out.push(limit_check(name, &cfg)?);
        }
    }
    Ok(out)
}
