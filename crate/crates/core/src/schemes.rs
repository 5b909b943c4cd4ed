//! Scenario layer: fiber distances, standard group layouts, the largest
//! distance with a positive key, and parameter sweeps.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};
use crate::protocol::{ChannelParams, GroupSpec, ProtocolConfig, RelayMode};
use crate::rates::{asymptotic_rate_fh, optimize_modulation, secret_key_rate, RateReport, DEFAULT_MU_MAX};

pub const FIBER_LOSS_DB_PER_KM: f64 = 0.2;
pub const DEFAULT_CAP_KM: f64 = 500.0;
pub const DISTANCE_TOL_KM: f64 = 0.05;
pub const PRESCAN_POINTS: usize = 16;
/// Users per scenario when nothing else is asked for; divisible by 2, 3 and 4.
pub const DEFAULT_USERS: usize = 12;

/// `eta = 10^(-alpha d / 10)`.
pub fn distance_to_transmissivity(d_km: f64, alpha_db_per_km: f64) -> Result<f64> {
    if !(d_km >= 0.0) || d_km.is_infinite() {
        return validation(format!("distance must be finite and >= 0 km, got {d_km}"));
    }
    if !(alpha_db_per_km > 0.0) {
        return validation(format!("attenuation must be positive, got {alpha_db_per_km}"));
    }
    Ok(10f64.powf(-alpha_db_per_km * d_km / 10.0))
}

/// Inverse of [`distance_to_transmissivity`].
pub fn transmissivity_to_distance(eta: f64, alpha_db_per_km: f64) -> Result<f64> {
    if !(eta > 0.0 && eta <= 1.0) {
        return validation(format!("transmissivity must lie in (0, 1], got {eta}"));
    }
    if !(alpha_db_per_km > 0.0) {
        return validation(format!("attenuation must be positive, got {alpha_db_per_km}"));
    }
    Ok(-10.0 * eta.log10() / alpha_db_per_km)
}

/// Repeaterless point-to-point capacity `-log2(1 - eta)`; infinite at `eta = 1`.
pub fn plob_reference(eta: f64) -> Result<f64> {
    if !(eta > 0.0 && eta <= 1.0) {
        return validation(format!("transmissivity must lie in (0, 1], got {eta}"));
    }
    if eta == 1.0 {
        return Ok(f64::INFINITY);
    }
    Ok(-(-eta).ln_1p() / std::f64::consts::LN_2)
}

/// `"5/95"` to the first group's share, `0.05`.
pub fn parse_splitting(s: &str) -> Result<f64> {
    let parts: Vec<&str> = s.split('/').map(str::trim).collect();
    let nums: Vec<f64> = parts.iter().filter_map(|p| p.parse::<f64>().ok()).collect();
    if parts.len() != 2 || nums.len() != 2 || nums.iter().any(|&x| !(x > 0.0)) {
        return validation(format!("splitting must look like \"5/95\", got {s:?}"));
    }
    Ok(nums[0] / (nums[0] + nums[1]))
}

/// `N_1 = round(share * N)`, at least 1, and `N_2` the rest (also at least 1).
pub fn split_members(n: usize, share: f64) -> Result<(usize, usize)> {
    if !(share > 0.0 && share < 1.0) {
        return validation(format!("share must lie in (0, 1), got {share}"));
    }
    if n < 2 {
        return validation(format!("need at least 2 users, got {n}"));
    }
    let n1 = ((share * n as f64).round() as usize).clamp(1, n - 1);
    Ok((n1, n - n1))
}

/// Full-house two-group layout over fiber.
pub fn bipartite_distances(n: usize, share: f64, d_km: [f64; 2], omega: [f64; 2]) -> Result<ProtocolConfig> {
    let (n1, n2) = split_members(n, share)?;
    Ok(ProtocolConfig::new(
        n,
        vec![GroupSpec::at_distance(n1, d_km[0], omega[0])?, GroupSpec::at_distance(n2, d_km[1], omega[1])?],
    ))
}

/// Turns `count` cooperating members of `group` into dummies on the same ports.
pub fn with_dummies(mut cfg: ProtocolConfig, group: usize, count: usize) -> Result<ProtocolConfig> {
    let g = cfg
        .groups
        .get_mut(group)
        .ok_or_else(|| Error::Validation(format!("no group {group}")))?;
    if count >= g.members {
        return validation(format!("group {group} has only {} members", g.members));
    }
    g.members -= count;
    g.dummies += count;
    Ok(cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    Bipartite,
    Y,
    X,
    Switch,
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bipartite" => Ok(Self::Bipartite),
            "y" => Ok(Self::Y),
            "x" => Ok(Self::X),
            "switch" => Ok(Self::Switch),
            _ => validation(format!("unknown scheme {s:?}; expected bipartite, y, x or switch")),
        }
    }
}

/// Standard layouts with `N_j = N / M`.
///
/// `distances` holds two classes: bipartite `[d_1, d_2]`; Y and switch
/// `[d_outer, d_deep]` with only the last group at `d_deep`; X `[d_12, d_34]`.
/// `noises` is one `omega` for all groups or one per group.
pub fn build_scheme(kind: SchemeKind, m: usize, n: usize, distances: &[f64], noises: &[f64]) -> Result<ProtocolConfig> {
    if m == 0 || !n.is_multiple_of(m) {
        return validation(format!("{n} users do not split evenly into {m} groups; give explicit sizes"));
    }
    build_scheme_with_sizes(kind, &vec![n / m; m], distances, noises)
}

pub fn build_scheme_with_sizes(kind: SchemeKind, sizes: &[usize], distances: &[f64], noises: &[f64]) -> Result<ProtocolConfig> {
    let m = sizes.len();
    let allowed = match kind {
        SchemeKind::Bipartite => m == 2,
        SchemeKind::Y | SchemeKind::Switch => m == 3 || m == 4,
        SchemeKind::X => m == 4,
    };
    if !allowed {
        return validation(format!("{kind:?} scheme does not support {m} groups"));
    }
    if distances.len() != 2 {
        return validation(format!("expected two distance classes, got {}", distances.len()));
    }
    let omega = |j: usize| match noises.len() {
        1 => Ok(noises[0]),
        l if l == m => Ok(noises[j]),
        l => validation(format!("expected 1 or {m} noise values, got {l}")),
    };
    let distance = |j: usize| match kind {
        SchemeKind::Bipartite => distances[j],
        SchemeKind::Y | SchemeKind::Switch => distances[usize::from(j + 1 == m)],
        SchemeKind::X => distances[usize::from(j >= 2)],
    };
    let groups = (0..m)
        .map(|j| GroupSpec::at_distance(sizes[j], distance(j), omega(j)?))
        .collect::<Result<Vec<_>>>()?;
    let relay = if kind == SchemeKind::Switch { RelayMode::Switch } else { RelayMode::Joint };
    Ok(ProtocolConfig::full_house(groups).with_relay(relay))
}

/// Outcome of a max-distance search, ordered
/// `NoPositiveRate < Crossing(d) < BeyondCap(cap)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MaxDistance {
    NoPositiveRate,
    Crossing(f64),
    BeyondCap(f64),
}

impl MaxDistance {
    pub fn km(&self) -> Option<f64> {
        match *self {
            MaxDistance::Crossing(d) | MaxDistance::BeyondCap(d) => Some(d),
            MaxDistance::NoPositiveRate => None,
        }
    }

    pub fn status(&self) -> &'static str {
        match self {
            MaxDistance::NoPositiveRate => "no_positive_rate",
            MaxDistance::Crossing(_) => "ok",
            MaxDistance::BeyondCap(_) => "beyond_cap",
        }
    }

    fn rank(&self) -> (u8, f64) {
        match *self {
            MaxDistance::NoPositiveRate => (0, 0.0),
            MaxDistance::Crossing(d) => (1, d),
            MaxDistance::BeyondCap(d) => (2, d),
        }
    }
}

impl PartialOrd for MaxDistance {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        let (a, b) = (self.rank(), other.rank());
        match a.0.cmp(&b.0) {
            Ordering::Equal => a.1.partial_cmp(&b.1),
            o => Some(o),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxDistanceOptions {
    pub cap_km: f64,
    pub tol_km: f64,
    pub mu_max: f64,
    pub prescan: usize,
}

impl Default for MaxDistanceOptions {
    fn default() -> Self {
        Self { cap_km: DEFAULT_CAP_KM, tol_km: DISTANCE_TOL_KM, mu_max: DEFAULT_MU_MAX, prescan: PRESCAN_POINTS }
    }
}

/// Modulation-optimized rate with the `moving` groups at `d_km`.
pub fn optimized_rate_at(template: &ProtocolConfig, moving: &[usize], d_km: f64, mu_max: f64) -> Result<f64> {
    let mut cfg = template.clone();
    for &j in moving {
        cfg.groups
            .get_mut(j)
            .ok_or_else(|| Error::Validation(format!("no group {j} to move")))?
            .set_distance(d_km)?;
    }
    Ok(optimize_modulation(&cfg, mu_max)?.1.rate)
}

/// Largest fiber length for the `moving` groups that still yields a positive key.
///
/// The rate at 0 km decides whether any key exists. A uniform pre-scan of
/// the cap range then brackets the single sign change, refined by bisection.
/// More than one sign change in the pre-scan is an error.
pub fn max_distance(template: &ProtocolConfig, moving: &[usize], opts: &MaxDistanceOptions) -> Result<MaxDistance> {
    template.validate()?;
    if moving.is_empty() {
        return validation("no moving groups given");
    }
    if !(opts.cap_km > 0.0) || !(opts.tol_km > 0.0) || opts.prescan < 2 {
        return validation("max-distance search needs a positive cap, a positive tolerance and 2+ scan points");
    }
    let rate = |d: f64| optimized_rate_at(template, moving, d, opts.mu_max);
    if !(rate(0.0)? > 0.0) {
        return Ok(MaxDistance::NoPositiveRate);
    }
    let grid: Vec<f64> = (0..opts.prescan).map(|i| opts.cap_km * i as f64 / (opts.prescan - 1) as f64).collect();
    let positive = grid.iter().map(|&d| Ok(rate(d)? > 0.0)).collect::<Result<Vec<bool>>>()?;
    let flips: Vec<usize> = (1..grid.len()).filter(|&i| positive[i] != positive[i - 1]).collect();
    match flips.as_slice() {
        [] => Ok(MaxDistance::BeyondCap(opts.cap_km)),
        [i] => {
            let (mut lo, mut hi) = (grid[i - 1], grid[*i]);
            while hi - lo > opts.tol_km {
                let mid = 0.5 * (lo + hi);
                if rate(mid)? > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(MaxDistance::Crossing(0.5 * (lo + hi)))
        }
        _ => Err(Error::Domain(format!("rate changes sign {} times within {} km", flips.len(), opts.cap_km))),
    }
}

fn one() -> f64 {
    1.0
}

fn default_mu_max() -> f64 {
    DEFAULT_MU_MAX
}

fn is_zero(n: &usize) -> bool {
    *n == 0
}

/// One group in a [`Scenario`]. Its size is `ports`, `share` of all users,
/// or (with neither) whatever the other groups leave. Its link is given by
/// `distance_km` or `eta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupTemplate {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ports: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub share: Option<f64>,
    /// Ports of this group whose users do not cooperate.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub dummies: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance_km: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default = "one")]
    pub omega: f64,
}

impl GroupTemplate {
    pub fn at_distance(d_km: f64) -> Self {
        Self { ports: None, share: None, dummies: 0, distance_km: Some(d_km), eta: None, omega: 1.0 }
    }
}

/// Declarative experiment description, resolved into a [`ProtocolConfig`].
/// Leaving `mu` out asks for the modulation to be optimized up to `mu_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub total_users: usize,
    pub groups: Vec<GroupTemplate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default = "one")]
    pub tau: f64,
    #[serde(default = "one")]
    pub xi: f64,
    #[serde(default)]
    pub relay: RelayMode,
    #[serde(default = "default_mu_max")]
    pub mu_max: f64,
}

impl Scenario {
    pub fn new(total_users: usize, groups: Vec<GroupTemplate>) -> Self {
        Self { total_users, groups, mu: None, tau: 1.0, xi: 1.0, relay: RelayMode::Joint, mu_max: DEFAULT_MU_MAX }
    }

    pub fn to_config(&self) -> Result<ProtocolConfig> {
        let n = self.total_users;
        let m = self.groups.len();
        // No sizes at all means an even split.
        if m > 0 && self.groups.iter().all(|g| g.ports.is_none() && g.share.is_none()) {
            if !n.is_multiple_of(m) {
                return validation(format!("{n} users do not split evenly into {m} groups; give ports or share"));
            }
            let mut even = self.clone();
            even.groups.iter_mut().for_each(|g| g.ports = Some(n / m));
            return even.to_config();
        }
        let mut ports: Vec<Option<usize>> = Vec::with_capacity(m);
        let mut rest = None;
        for (j, g) in self.groups.iter().enumerate() {
            ports.push(match (g.ports, g.share) {
                (Some(_), Some(_)) => return validation(format!("group {j}: give ports or share, not both")),
                (Some(p), None) => Some(p),
                (None, Some(s)) => {
                    if !(s > 0.0 && s <= 1.0) {
                        return validation(format!("group {j}: share must lie in (0, 1], got {s}"));
                    }
                    Some(((s * n as f64).round() as usize).max(1))
                }
                (None, None) => {
                    if rest.replace(j).is_some() {
                        return validation("only one group may take the remaining users");
                    }
                    None
                }
            });
        }
        let claimed: usize = ports.iter().flatten().sum();
        if let Some(j) = rest {
            if claimed >= n {
                return validation(format!("group {j} has no users left to take"));
            }
            ports[j] = Some(n - claimed);
        }
        let groups = self
            .groups
            .iter()
            .zip(ports)
            .enumerate()
            .map(|(j, (g, p))| {
                let p = p.expect("resolved above");
                if g.dummies >= p {
                    return validation(format!("group {j}: {} dummies leave no cooperating user among {p}", g.dummies));
                }
                let (channel, distance_km) = match (g.distance_km, g.eta) {
                    (Some(d), None) => (ChannelParams::from_distance(d, g.omega)?, Some(d)),
                    (None, Some(eta)) => (ChannelParams::new(eta, g.omega)?, None),
                    _ => return validation(format!("group {j}: give exactly one of distance_km and eta")),
                };
                Ok(GroupSpec { members: p - g.dummies, dummies: g.dummies, channel, distance_km })
            })
            .collect::<Result<Vec<_>>>()?;
        let cfg = ProtocolConfig {
            total_users: n,
            groups,
            mu: self.mu.unwrap_or(1.0),
            tau: self.tau,
            xi: self.xi,
            relay: self.relay,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Rate at the fixed `mu`, or optimized when `mu` is absent. Returns `(mu*, report)`.
    pub fn evaluate(&self) -> Result<(f64, RateReport)> {
        let cfg = self.to_config()?;
        match self.mu {
            Some(mu) => Ok((mu, secret_key_rate(&cfg)?)),
            None => optimize_modulation(&cfg, self.mu_max),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupField {
    DistanceKm,
    Eta,
    Omega,
    Dummies,
    Ports,
    Share,
}

/// Parameter a sweep varies, written as a path such as `mu`,
/// `groups[0].distance_km` or `groups[0,1].distance_km`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SweepAxis {
    Mu,
    Tau,
    Xi,
    TotalUsers,
    Group { groups: Vec<usize>, field: GroupField },
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Validation(format!("unknown sweep axis {s:?}"));
        match s {
            "mu" => return Ok(Self::Mu),
            "tau" => return Ok(Self::Tau),
            "xi" => return Ok(Self::Xi),
            "total_users" => return Ok(Self::TotalUsers),
            _ => {}
        }
        let rest = s.strip_prefix("groups[").ok_or_else(bad)?;
        let (idx, field) = rest.split_once("].").ok_or_else(bad)?;
        let groups = idx
            .split(',')
            .map(|i| i.trim().parse::<usize>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        let field = match field {
            "distance_km" => GroupField::DistanceKm,
            "eta" => GroupField::Eta,
            "omega" => GroupField::Omega,
            "dummies" => GroupField::Dummies,
            "ports" => GroupField::Ports,
            "share" => GroupField::Share,
            _ => return Err(bad()),
        };
        Ok(Self::Group { groups, field })
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Mu => f.write_str("mu"),
            Self::Tau => f.write_str("tau"),
            Self::Xi => f.write_str("xi"),
            Self::TotalUsers => f.write_str("total_users"),
            Self::Group { groups, field } => {
                let idx: Vec<String> = groups.iter().map(usize::to_string).collect();
                let field = match field {
                    GroupField::DistanceKm => "distance_km",
                    GroupField::Eta => "eta",
                    GroupField::Omega => "omega",
                    GroupField::Dummies => "dummies",
                    GroupField::Ports => "ports",
                    GroupField::Share => "share",
                };
                write!(f, "groups[{}].{field}", idx.join(","))
            }
        }
    }
}

impl SweepAxis {
    /// Copy of `base` with this parameter set to `x`. Integer parameters are rounded.
    pub fn apply(&self, base: &Scenario, x: f64) -> Result<Scenario> {
        let mut s = base.clone();
        let count = || {
            if !(x >= 0.0) || !x.is_finite() {
                return validation(format!("count parameter must be a non-negative number, got {x}"));
            }
            Ok(x.round() as usize)
        };
        match self {
            Self::Mu => s.mu = Some(x),
            Self::Tau => s.tau = x,
            Self::Xi => s.xi = x,
            Self::TotalUsers => s.total_users = count()?,
            Self::Group { groups, field } => {
                for &j in groups {
                    let g = s
                        .groups
                        .get_mut(j)
                        .ok_or_else(|| Error::Validation(format!("sweep axis names missing group {j}")))?;
                    match field {
                        GroupField::DistanceKm => {
                            g.distance_km = Some(x);
                            g.eta = None;
                        }
                        GroupField::Eta => {
                            g.eta = Some(x);
                            g.distance_km = None;
                        }
                        GroupField::Omega => g.omega = x,
                        GroupField::Dummies => g.dummies = count()?,
                        GroupField::Ports => {
                            g.ports = Some(count()?);
                            g.share = None;
                        }
                        GroupField::Share => {
                            g.share = Some(x);
                            g.ports = None;
                        }
                    }
                }
            }
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// Key rate, optimized over `mu` unless `mu` is fixed or swept.
    #[default]
    Rate,
    /// Largest distance of the `moving` groups with a positive key.
    MaxDistance,
    /// Closed-form infinite-modulation rate (full-house pairs only).
    AsymptoticRate,
}

fn default_cap() -> f64 {
    DEFAULT_CAP_KM
}

/// Grid over one parameter of a [`Scenario`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: String,
    pub from: f64,
    pub to: f64,
    pub points: usize,
    #[serde(default)]
    pub spacing: Spacing,
    #[serde(default)]
    pub quantity: Quantity,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub moving: Vec<usize>,
    #[serde(default = "default_cap")]
    pub cap_km: f64,
}

impl SweepSpec {
    pub fn linear(axis: &str, from: f64, to: f64, points: usize) -> Self {
        Self {
            axis: axis.to_string(),
            from,
            to,
            points,
            spacing: Spacing::Linear,
            quantity: Quantity::Rate,
            moving: Vec::new(),
            cap_km: DEFAULT_CAP_KM,
        }
    }

    pub fn log(axis: &str, from: f64, to: f64, points: usize) -> Self {
        Self { spacing: Spacing::Log, ..Self::linear(axis, from, to, points) }
    }

    pub fn with_quantity(mut self, quantity: Quantity) -> Self {
        self.quantity = quantity;
        self
    }

    pub fn with_moving(mut self, moving: Vec<usize>) -> Self {
        self.moving = moving;
        self
    }

    pub fn validate(&self) -> Result<SweepAxis> {
        let axis: SweepAxis = self.axis.parse()?;
        if self.points < 2 {
            return validation(format!("a sweep needs at least 2 points, got {}", self.points));
        }
        if !self.from.is_finite() || !self.to.is_finite() || self.from == self.to {
            return validation(format!("sweep range [{}, {}] is empty", self.from, self.to));
        }
        if self.spacing == Spacing::Log && !(self.from > 0.0 && self.to > 0.0) {
            return validation("log spacing needs a positive range");
        }
        if self.quantity == Quantity::MaxDistance {
            if self.moving.is_empty() {
                return validation("max_distance sweeps need a non-empty `moving` list");
            }
            if !(self.cap_km > 0.0) {
                return validation("cap_km must be positive");
            }
        }
        Ok(axis)
    }

    /// The axis values, endpoints exact.
    pub fn grid(&self) -> Vec<f64> {
        let n = self.points;
        (0..n)
            .map(|i| {
                if i == 0 {
                    return self.from;
                }
                if i == n - 1 {
                    return self.to;
                }
                let t = i as f64 / (n - 1) as f64;
                match self.spacing {
                    Spacing::Linear => self.from + (self.to - self.from) * t,
                    Spacing::Log => (self.from.ln() + (self.to.ln() - self.from.ln()) * t).exp(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RowOutcome {
    Rate { mu_star: f64, report: RateReport, weakest_eta: f64 },
    Distance(MaxDistance),
    Failed(Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub x: f64,
    pub outcome: RowOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis: String,
    pub quantity: Quantity,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// Rates in row order; failed or distance rows give NaN.
    pub fn rates(&self) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| match &r.outcome {
                RowOutcome::Rate { report, .. } => report.rate,
                _ => f64::NAN,
            })
            .collect()
    }

    pub fn first_error(&self) -> Option<&Error> {
        self.rows.iter().find_map(|r| match &r.outcome {
            RowOutcome::Failed(e) => Some(e),
            _ => None,
        })
    }
}

fn evaluate_row(base: &Scenario, axis: &SweepAxis, spec: &SweepSpec, x: f64) -> Result<RowOutcome> {
    let s = axis.apply(base, x)?;
    match spec.quantity {
        Quantity::Rate => {
            let (mu_star, report) = s.evaluate()?;
            let weakest_eta = s.to_config()?.weakest_pair_transmissivity();
            Ok(RowOutcome::Rate { mu_star, report, weakest_eta })
        }
        Quantity::AsymptoticRate => {
            let cfg = s.to_config()?;
            let report = asymptotic_rate_fh(&cfg)?;
            Ok(RowOutcome::Rate { mu_star: f64::INFINITY, report, weakest_eta: cfg.weakest_pair_transmissivity() })
        }
        Quantity::MaxDistance => {
            let mut cfg = s.to_config()?;
            for &j in &spec.moving {
                cfg.groups
                    .get_mut(j)
                    .ok_or_else(|| Error::Validation(format!("no group {j} to move")))?
                    .set_distance(0.0)?;
            }
            let opts = MaxDistanceOptions { cap_km: spec.cap_km, mu_max: s.mu_max, ..Default::default() };
            Ok(RowOutcome::Distance(max_distance(&cfg, &spec.moving, &opts)?))
        }
    }
}

/// Evaluates every grid point, `jobs` at a time (0 picks a default).
/// Rows come back in axis order; a failing point is recorded in its row.
pub fn run_sweep(base: &Scenario, spec: &SweepSpec, jobs: usize) -> Result<SweepResult> {
    let axis = spec.validate()?;
    let grid = spec.grid();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Validation(format!("cannot start worker pool: {e}")))?;
    let rows = pool.install(|| {
        grid.par_iter()
            .map(|&x| SweepRow {
                x,
                outcome: evaluate_row(base, &axis, spec, x).unwrap_or_else(RowOutcome::Failed),
            })
            .collect()
    });
    Ok(SweepResult { axis: spec.axis.clone(), quantity: spec.quantity, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_examples() {
        assert_eq!(distance_to_transmissivity(0.0, 0.2).unwrap(), 1.0);
        assert!((distance_to_transmissivity(50.0, 0.2).unwrap() - 0.1).abs() < 1e-15);
        assert!((distance_to_transmissivity(15.0, 0.2).unwrap() - 0.501187).abs() < 1e-6);
        assert!(distance_to_transmissivity(-1.0, 0.2).is_err());
        for d in [0.0, 0.1, 3.7, 170.0] {
            let eta = distance_to_transmissivity(d, 0.2).unwrap();
            assert!((transmissivity_to_distance(eta, 0.2).unwrap() - d).abs() < 1e-10);
        }
    }

    #[test]
    fn plob_examples() {
        assert!((plob_reference(0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!((plob_reference(0.9).unwrap() - 10f64.log2()).abs() < 1e-12);
        assert!((plob_reference(0.1).unwrap() - 0.152).abs() < 1e-3);
        assert!(plob_reference(1.0).unwrap().is_infinite());
        assert!(plob_reference(0.0).is_err());
    }

    #[test]
    fn splitting() {
        assert_eq!(parse_splitting("5/95").unwrap(), 0.05);
        assert_eq!(split_members(100, 0.05).unwrap(), (5, 95));
        assert_eq!(split_members(12, 0.01).unwrap(), (1, 11));
        assert!(parse_splitting("50").is_err());
    }

    #[test]
    fn scheme_layouts() {
        let y = build_scheme(SchemeKind::Y, 3, 12, &[1.0, 0.1], &[1.0]).unwrap();
        assert_eq!(y.groups.iter().map(|g| g.members).collect::<Vec<_>>(), [4, 4, 4]);
        assert_eq!(y.groups.iter().map(|g| g.distance_km.unwrap()).collect::<Vec<_>>(), [1.0, 1.0, 0.1]);
        let x = build_scheme(SchemeKind::X, 4, 12, &[0.5, 0.1], &[1.0]).unwrap();
        assert_eq!(x.groups.iter().map(|g| g.distance_km.unwrap()).collect::<Vec<_>>(), [0.5, 0.5, 0.1, 0.1]);
        assert_eq!(build_scheme(SchemeKind::Switch, 3, 12, &[1.0, 0.1], &[1.0]).unwrap().relay, RelayMode::Switch);
        assert!(build_scheme(SchemeKind::Y, 3, 10, &[1.0, 0.1], &[1.0]).is_err());
        assert!(build_scheme(SchemeKind::X, 3, 12, &[1.0, 0.1], &[1.0]).is_err());
    }

    #[test]
    fn max_distance_ordering() {
        assert!(MaxDistance::NoPositiveRate < MaxDistance::Crossing(0.0));
        assert!(MaxDistance::Crossing(80.0) < MaxDistance::BeyondCap(10.0));
        assert!(MaxDistance::Crossing(1.0) < MaxDistance::Crossing(2.0));
    }

    #[test]
    fn axis_paths_round_trip() {
        for p in ["mu", "xi", "total_users", "groups[0].distance_km", "groups[0,1,2].omega"] {
            assert_eq!(p.parse::<SweepAxis>().unwrap().to_string(), p);
        }
        assert!("groups[a].eta".parse::<SweepAxis>().is_err());
        assert!("gamma".parse::<SweepAxis>().is_err());
    }

    #[test]
    fn scenario_resolution() {
        let mut s = Scenario::new(
            8,
            vec![GroupTemplate { share: Some(0.5), dummies: 1, ..GroupTemplate::at_distance(2.0) }, GroupTemplate::at_distance(0.1)],
        );
        let cfg = s.to_config().unwrap();
        assert_eq!((cfg.groups[0].members, cfg.groups[0].dummies, cfg.groups[1].members), (3, 1, 4));
        s.groups[1].eta = Some(0.5);
        assert!(s.to_config().is_err());
    }

    #[test]
    fn sweep_rejects_empty_range() {
        let base = Scenario::new(4, vec![GroupTemplate::at_distance(1.0), GroupTemplate::at_distance(0.0)]);
        assert!(run_sweep(&base, &SweepSpec::linear("xi", 1.0, 1.0, 5), 1).is_err());
        assert!(run_sweep(&base, &SweepSpec::linear("xi", 1.0, 0.9, 1), 1).is_err());
    }

    #[test]
    fn xi_sweep_lowers_rate() {
        let base = Scenario::new(4, vec![GroupTemplate::at_distance(5.0), GroupTemplate::at_distance(0.1)]);
        let r = run_sweep(&base, &SweepSpec::linear("xi", 1.0, 0.9, 2), 2).unwrap().rates();
        assert!(r[1] < r[0]);
    }
}
