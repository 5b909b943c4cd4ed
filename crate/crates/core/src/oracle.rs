//! Brute-force reference: simulate the full relay pipeline on the explicit
//! global state, one Gaussian operation at a time, with no closed forms.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{validation, Error, Result};
use crate::gaussian::{homodyne_condition, CovarianceMatrix, Quadrature};
use crate::protocol::{interferometer_modes, localization_rotation_with, Completion, ProtocolConfig};
use crate::symplectic::{beamsplitter, passive, two_mode_squeezer};

/// Largest `N` the oracle accepts.
pub const ORACLE_MAX_USERS: usize = 12;
/// Correlations left on discarded modes, relative to the state's scale,
/// above which the run is rejected.
pub const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Default)]
pub struct OracleOptions {
    pub completion: Completion,
    /// Order in which ports `2..N` are q-homodyned, as 0-based port indices.
    /// Defaults to ascending.
    pub q_order: Option<Vec<usize>>,
}

#[derive(Debug, Clone)]
pub struct Stage {
    pub name: &'static str,
    pub cm: CovarianceMatrix,
    pub labels: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct PipelineTrace {
    pub stages: Vec<Stage>,
    /// Largest discarded-mode correlation relative to the state's scale.
    pub max_residual: f64,
}

impl PipelineTrace {
    pub fn stage(&self, name: &str) -> Option<&Stage> {
        self.stages.iter().find(|s| s.name == name)
    }

    /// Plain-text dump of every stage. Not a stable format.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for s in &self.stages {
            let _ = writeln!(out, "== {} ({} modes)", s.name, s.cm.n_modes());
            let _ = writeln!(out, "modes: {}", s.labels.join(" "));
            let m = s.cm.matrix();
            for i in 0..m.nrows() {
                let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:>12.5e}", m[(i, j)])).collect();
                let _ = writeln!(out, "{}", row.join(" "));
            }
        }
        let _ = writeln!(out, "max residual: {:e}", self.max_residual);
        out
    }
}

/// Appends one ancilla in state `ancilla`, mixes it with `mode` at
/// transmissivity `t`, and traces it out again.
fn mix_with_ancilla(v: &CovarianceMatrix, mode: usize, t: f64, ancilla: f64) -> Result<CovarianceMatrix> {
    let n = v.n_modes();
    let big = v.direct_sum(&CovarianceMatrix::thermal(1, ancilla)?);
    let out = big.transform(&beamsplitter(n + 1, mode, n, t)?)?;
    out.select_modes(&(0..n).collect::<Vec<_>>())
}

pub fn oracle_reduced_cm(cfg: &ProtocolConfig) -> Result<(CovarianceMatrix, PipelineTrace)> {
    oracle_reduced_cm_with(cfg, &OracleOptions::default())
}

pub fn oracle_reduced_cm_with(cfg: &ProtocolConfig, opts: &OracleOptions) -> Result<(CovarianceMatrix, PipelineTrace)> {
    cfg.validate()?;
    let n = cfg.total_users;
    if n > ORACLE_MAX_USERS {
        return validation(format!("oracle is limited to {ORACLE_MAX_USERS} users, got {n}"));
    }
    let roles = cfg.port_roles();
    let mut labels: Vec<String> = (1..=n).map(|k| format!("B{k}")).chain((1..=n).map(|k| format!("A{k}"))).collect();
    let mut stages = Vec::new();

    // Each user holds a TMSV; dummies send vacuum.
    let mut v = CovarianceMatrix::vacuum(2 * n);
    for (k, r) in roles.iter().enumerate() {
        let mu: f64 = if r.cooperating { cfg.mu } else { 1.0 };
        let sq = two_mode_squeezer(2 * n, k, n + k, 0.5 * mu.acosh())?;
        v = v.transform(&sq)?;
    }
    stages.push(Stage { name: "input", cm: v.clone(), labels: labels.clone() });

    for (k, r) in roles.iter().enumerate() {
        let ch = cfg.groups[r.group].channel;
        v = mix_with_ancilla(&v, n + k, ch.eta, ch.omega)?;
    }
    stages.push(Stage { name: "post-channel", cm: v.clone(), labels: labels.clone() });

    let a_modes: Vec<usize> = (n..2 * n).collect();
    v = v.transform(&passive(2 * n, &a_modes, &interferometer_modes(n)?)?)?;
    stages.push(Stage { name: "post-interferometer", cm: v.clone(), labels: labels.clone() });

    if cfg.tau < 1.0 {
        for k in 0..n {
            v = mix_with_ancilla(&v, n + k, cfg.tau, 1.0)?;
        }
        stages.push(Stage { name: "post-efficiency", cm: v.clone(), labels: labels.clone() });
    }

    // p on A1, q on the rest.
    let order: Vec<usize> = match &opts.q_order {
        Some(o) => {
            let mut sorted = o.clone();
            sorted.sort_unstable();
            if sorted != (1..n).collect::<Vec<_>>() {
                return validation("q_order must be a permutation of ports 1..N-1");
            }
            o.clone()
        }
        None => (1..n).collect(),
    };
    let measurements = std::iter::once((0, Quadrature::P)).chain(order.into_iter().map(|k| (k, Quadrature::Q)));
    for (port, quad) in measurements {
        let label = format!("A{}", port + 1);
        let idx = labels.iter().position(|l| *l == label).expect("A-mode still present");
        v = homodyne_condition(&v, idx, quad)?;
        labels.remove(idx);
    }
    stages.push(Stage { name: "post-detection", cm: v.clone(), labels: labels.clone() });

    // Keep cooperating B-modes in group order, then rotate within groups.
    let sizes: Vec<usize> = cfg.groups.iter().map(|g| g.members).collect();
    let keep: Vec<usize> = (0..cfg.m())
        .flat_map(|j| roles.iter().enumerate().filter(move |(_, r)| r.group == j && r.cooperating).map(|(k, _)| k))
        .collect();
    let coop = v.select_modes(&keep)?;
    let rot = localization_rotation_with(&sizes, opts.completion).transpose();
    let local = coop.transform(&rot)?;
    let mut local_labels = Vec::new();
    let mut effective = Vec::new();
    let mut at = 0;
    for (j, &s) in sizes.iter().enumerate() {
        for i in 0..s {
            local_labels.push(if i + 1 == s { format!("G{}", j + 1) } else { format!("G{}.{}", j + 1, i + 1) });
        }
        effective.push(at + s - 1);
        at += s;
    }
    stages.push(Stage { name: "post-localization", cm: local.clone(), labels: local_labels });

    let residual = discarded_residual(local.matrix(), &effective) / local.scale();
    if residual > RESIDUAL_TOL {
        return Err(Error::Consistency(format!("discarded modes keep correlations of relative size {residual:e}")));
    }
    let reduced = local.select_modes(&effective)?;
    Ok((reduced, PipelineTrace { stages, max_residual: residual }))
}

/// Largest entry tying a discarded mode to anything other than itself.
fn discarded_residual(m: &DMatrix<f64>, effective: &[usize]) -> f64 {
    let modes = m.nrows() / 2;
    let mut worst: f64 = 0.0;
    for a in (0..modes).filter(|a| !effective.contains(a)) {
        for b in (0..modes).filter(|&b| b != a) {
            for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                worst = worst.max(m[(2 * a + i, 2 * b + j)].abs());
            }
        }
        worst = worst.max(m[(2 * a, 2 * a + 1)].abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{bipartite_cm, ChannelParams, GroupSpec};

    #[test]
    fn unit_modulation_gives_vacuum() {
        let g = |n, e| GroupSpec::new(n, ChannelParams::new(e, 1.2).unwrap());
        let cfg = ProtocolConfig::full_house(vec![g(2, 0.4), g(1, 0.8), g(2, 1.0)]);
        let (v, t) = oracle_reduced_cm(&cfg).unwrap();
        assert!((v.matrix() - DMatrix::identity(6, 6)).amax() < 1e-12);
        assert!(t.max_residual < 1e-12);
    }

    #[test]
    fn two_ideal_users_match_closed_form() {
        let cfg = ProtocolConfig::full_house(vec![
            GroupSpec::new(1, ChannelParams::ideal()),
            GroupSpec::new(1, ChannelParams::ideal()),
        ])
        .with_mu(6.5);
        let (v, _) = oracle_reduced_cm(&cfg).unwrap();
        let w = bipartite_cm(&cfg).unwrap();
        assert!((v.matrix() - w.matrix()).amax() < 1e-10);
    }

    #[test]
    fn trace_stages_and_dump() {
        let cfg = ProtocolConfig::full_house(vec![
            GroupSpec::new(2, ChannelParams::new(0.5, 1.1).unwrap()),
            GroupSpec::new(1, ChannelParams::ideal()),
        ])
        .with_mu(3.0)
        .with_tau(0.9);
        let (_, t) = oracle_reduced_cm(&cfg).unwrap();
        let names: Vec<_> = t.stages.iter().map(|s| s.name).collect();
        assert_eq!(
            names,
            ["input", "post-channel", "post-interferometer", "post-efficiency", "post-detection", "post-localization"]
        );
        assert_eq!(t.stage("post-detection").unwrap().cm.n_modes(), 3);
        assert!(t.dump().contains("== post-localization (3 modes)"));
    }

    #[test]
    fn size_guard() {
        let cfg = ProtocolConfig::full_house(vec![
            GroupSpec::new(7, ChannelParams::ideal()),
            GroupSpec::new(6, ChannelParams::ideal()),
        ]);
        assert!(matches!(oracle_reduced_cm(&cfg), Err(Error::Validation(_))));
    }
}
