//! Built-in sweep sets for the standard result plots.

use crate::error::{validation, Result};
use crate::protocol::RelayMode;
use crate::schemes::{run_sweep, GroupTemplate, Quantity, Scenario, SweepResult, SweepSpec, DEFAULT_USERS};

pub const FIGURE_IDS: [&str; 10] = ["fig3", "fig4", "fig5", "fig6a", "fig6b", "fig8", "fig8-noisy", "fig10", "fig12", "fig13"];

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub label: String,
    pub scenario: Scenario,
    pub sweep: SweepSpec,
    /// Drawn dashed (reference or limit curves).
    pub dashed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Figure {
    pub id: &'static str,
    pub title: &'static str,
    pub x_label: &'static str,
    pub y_label: &'static str,
    pub log_x: bool,
    pub log_y: bool,
    pub curves: Vec<Curve>,
}

#[derive(Debug, Clone)]
pub struct FigureResult {
    pub figure: Figure,
    pub curves: Vec<(String, SweepResult)>,
}

fn group(share: Option<f64>, d_km: f64, omega: f64) -> GroupTemplate {
    GroupTemplate { share, omega, ..GroupTemplate::at_distance(d_km) }
}

fn two_groups(n: usize, share: f64, d: [f64; 2], omega: [f64; 2]) -> Scenario {
    Scenario::new(n, vec![group(Some(share), d[0], omega[0]), group(None, d[1], omega[1])])
}

fn curve(label: impl Into<String>, scenario: Scenario, sweep: SweepSpec) -> Curve {
    Curve { label: label.into(), scenario, sweep, dashed: false }
}

fn dashed(mut c: Curve) -> Curve {
    c.dashed = true;
    c
}

fn y_scheme(m: usize, d_outer: f64, d_deep: f64, relay: RelayMode) -> Scenario {
    let mut groups: Vec<GroupTemplate> = (0..m - 1).map(|_| group(Some(1.0 / m as f64), d_outer, 1.0)).collect();
    groups.push(group(None, d_deep, 1.0));
    Scenario { relay, ..Scenario::new(DEFAULT_USERS, groups) }
}

fn x_scheme(d_12: f64, d_34: f64) -> Scenario {
    let groups = vec![
        group(Some(0.25), d_12, 1.0),
        group(Some(0.25), d_12, 1.0),
        group(Some(0.25), d_34, 1.0),
        group(None, d_34, 1.0),
    ];
    Scenario::new(DEFAULT_USERS, groups)
}

fn distance_figure(id: &'static str, title: &'static str, curves: Vec<Curve>) -> Figure {
    Figure { id, title, x_label: "distance (km)", y_label: "key rate (bits/use)", log_x: false, log_y: true, curves }
}

fn fig3() -> Figure {
    let sweep = SweepSpec::linear("groups[0].distance_km", 0.0, 200.0, 200);
    let settings = [
        ("w1=1 w2=1 tau=1", 1.0, 1.0, 1.0, false),
        ("w1=1 w2=1.1 tau=1", 1.0, 1.1, 1.0, true),
        ("w1=1 w2=1 tau=0.98", 1.0, 1.0, 0.98, false),
        ("w1=1 w2=1.1 tau=0.98", 1.0, 1.1, 0.98, true),
        ("w1=1.1 w2=1 tau=1", 1.1, 1.0, 1.0, false),
        ("w1=1.1 w2=1.1 tau=1", 1.1, 1.1, 1.0, true),
        ("w1=1.1 w2=1 tau=0.98", 1.1, 1.0, 0.98, false),
        ("w1=1.1 w2=1.1 tau=0.98", 1.1, 1.1, 0.98, true),
    ];
    let curves = settings
        .iter()
        .map(|&(label, w1, w2, tau, dash)| {
            let s = Scenario { tau, ..two_groups(DEFAULT_USERS, 0.5, [0.0, 0.0], [w1, w2]) };
            let c = curve(label, s, sweep.clone());
            if dash {
                dashed(c)
            } else {
                c
            }
        })
        .collect();
    distance_figure("fig3", "Two groups, group 2 at the relay", curves)
}

fn fig4() -> Figure {
    let settings = [
        ("50/50 w=(1,1)", 0.5, [1.0, 1.0]),
        ("5/95 w=(1,1)", 0.05, [1.0, 1.0]),
        ("1/99 w=(1,1)", 0.01, [1.0, 1.0]),
        ("50/50 w=(1,1.1)", 0.5, [1.0, 1.1]),
        ("50/50 w=(1.1,1)", 0.5, [1.1, 1.0]),
        ("50/50 w=(1.1,1.1)", 0.5, [1.1, 1.1]),
    ];
    let mut curves = Vec::new();
    for (panel, moving) in [("a", 0usize), ("b", 1usize)] {
        let sweep = SweepSpec::linear(&format!("groups[{moving}].distance_km"), 0.0, 80.0, 161);
        for (label, share, omega) in settings {
            let mut d = [0.1, 0.1];
            d[moving] = 0.0;
            curves.push(curve(format!("{panel}: {label}"), two_groups(100, share, d, omega), sweep.clone()));
        }
    }
    distance_figure("fig4", "Splittings and noise, one group fixed at 0.1 km", curves)
}

fn fig5() -> Figure {
    let sweep = SweepSpec::linear("groups[0].distance_km", 0.0, 70.0, 141);
    let curves = [1.0, 0.985, 0.98, 0.95, 0.90]
        .iter()
        .map(|&xi| curve(format!("xi={xi}"), Scenario { xi, ..two_groups(DEFAULT_USERS, 0.5, [0.0, 0.1], [1.0, 1.0]) }, sweep.clone()))
        .collect();
    distance_figure("fig5", "Reconciliation efficiency, 50/50, d2 = 0.1 km", curves)
}

fn dummy_family(d1: usize, d2: usize, xi: f64) -> Scenario {
    let mut s = two_groups(4, 0.5, [0.0, 0.1], [1.0, 1.0]);
    s.groups[0].dummies = d1;
    s.groups[1].dummies = d2;
    s.xi = xi;
    s
}

fn threshold_figure(id: &'static str, title: &'static str, families: &[(&str, usize, usize, f64)]) -> Figure {
    let sweep = SweepSpec::linear("total_users", 4.0, 20.0, 9)
        .with_quantity(Quantity::MaxDistance)
        .with_moving(vec![0]);
    let curves = families
        .iter()
        .map(|&(label, a, b, xi)| curve(label, dummy_family(a, b, xi), sweep.clone()))
        .collect();
    Figure {
        id,
        title,
        x_label: "users N",
        y_label: "max distance of group 1 (km)",
        log_x: false,
        log_y: false,
        curves,
    }
}

fn fig6a() -> Figure {
    threshold_figure(
        "fig6a",
        "Max distance with dummy users, d2 = 0.1 km",
        &[
            ("full house", 0, 0, 1.0),
            ("one dummy in group 1", 1, 0, 1.0),
            ("one dummy in group 2", 0, 1, 1.0),
            ("one dummy per group", 1, 1, 1.0),
            ("two dummies in group 1", 2, 0, 1.0),
            ("two dummies in group 2", 0, 2, 1.0),
        ],
    )
}

fn fig6b() -> Figure {
    threshold_figure(
        "fig6b",
        "Max distance, one dummy in group 1, xi = 0.985",
        &[("one dummy in group 1, xi=0.985", 1, 0, 0.985), ("one dummy in group 1, xi=1", 1, 0, 1.0)],
    )
}

fn fig8() -> Figure {
    let sweep = SweepSpec::linear("groups[0,1].distance_km", 0.0, 5.0, 101);
    let mut curves = Vec::new();
    for relay in [RelayMode::Joint, RelayMode::Switch] {
        for d3 in [0.1, 0.05, 0.01] {
            let name = if relay == RelayMode::Joint { "Y" } else { "switch" };
            curves.push(curve(format!("{name} d3={d3}"), y_scheme(3, 0.0, d3, relay), sweep.clone()));
        }
    }
    let inset = SweepSpec::linear("groups[0].distance_km", 0.0, 5.0, 101);
    curves.push(dashed(curve("M=2 50/50 d2=0.1", two_groups(DEFAULT_USERS, 0.5, [0.0, 0.1], [1.0, 1.0]), inset.clone())));
    curves.push(dashed(curve("M=2 2N/3 d2=0.1", two_groups(DEFAULT_USERS, 2.0 / 3.0, [0.0, 0.1], [1.0, 1.0]), inset)));
    distance_figure("fig8", "Three-group Y-scheme, joint relay and switch", curves)
}

fn fig8_noisy() -> Figure {
    let sweep = SweepSpec::linear("groups[0,1].distance_km", 0.0, 5.0, 101);
    let lossy = |relay| Scenario { tau: 0.98, ..y_scheme(3, 0.0, 0.1, relay) };
    let curves = vec![
        curve("Y tau=0.98", lossy(RelayMode::Joint), sweep.clone()),
        curve("switch tau=0.98", lossy(RelayMode::Switch), sweep.clone()),
        dashed(curve("Y ideal", y_scheme(3, 0.0, 0.1, RelayMode::Joint), sweep)),
    ];
    distance_figure("fig8-noisy", "Three-group Y-scheme with detector loss", curves)
}

fn fig10() -> Figure {
    let mut curves = Vec::new();
    for d in [0.1, 0.05, 0.01] {
        curves.push(curve(
            format!("Y d4={d}"),
            y_scheme(4, 0.0, d, RelayMode::Joint),
            SweepSpec::linear("groups[0,1,2].distance_km", 0.0, 1.0, 101),
        ));
        curves.push(curve(
            format!("X d34={d}"),
            x_scheme(0.0, d),
            SweepSpec::linear("groups[0,1].distance_km", 0.0, 1.0, 101),
        ));
    }
    distance_figure("fig10", "Four groups: Y-scheme against X-scheme", curves)
}

fn modulation_figure(id: &'static str, title: &'static str, curves: Vec<Curve>) -> Figure {
    Figure { id, title, x_label: "modulation mu (SNU)", y_label: "key rate (bits/use)", log_x: true, log_y: false, curves }
}

fn fig12() -> Figure {
    let sweep = SweepSpec::log("mu", 1.001, 1e6, 121);
    let mut curves = Vec::new();
    for (label, share) in [("50/50", 0.5), ("5/95", 0.05), ("1/99", 0.01)] {
        let s = two_groups(100, share, [1.0, 0.1], [1.0, 1.0]);
        curves.push(curve(label, s.clone(), sweep.clone()));
        curves.push(dashed(curve(format!("{label} limit"), s, sweep.clone().with_quantity(Quantity::AsymptoticRate))));
    }
    modulation_figure("fig12", "Full house: rate against modulation", curves)
}

fn fig13() -> Figure {
    let sweep = SweepSpec::log("mu", 1.001, 1e6, 121);
    let base = two_groups(4, 0.5, [1.0, 0.01], [1.0, 1.0]);
    let with = |a: usize, b: usize| {
        let mut s = base.clone();
        s.groups[0].dummies = a;
        s.groups[1].dummies = b;
        s
    };
    let curves = vec![
        curve("full house 2/2", with(0, 0), sweep.clone()),
        curve("dummy in group 1", with(1, 0), sweep.clone()),
        curve("dummy in group 2", with(0, 1), sweep.clone()),
        curve("dummy in each group", with(1, 1), sweep),
    ];
    modulation_figure("fig13", "Dummy users: rate against modulation", curves)
}

pub fn figure(id: &str) -> Result<Figure> {
    Ok(match id {
        "fig3" => fig3(),
        "fig4" => fig4(),
        "fig5" => fig5(),
        "fig6a" => fig6a(),
        "fig6b" => fig6b(),
        "fig8" => fig8(),
        "fig8-noisy" => fig8_noisy(),
        "fig10" => fig10(),
        "fig12" => fig12(),
        "fig13" => fig13(),
        _ => return validation(format!("unknown figure {id:?}; valid ids: {}", FIGURE_IDS.join(", "))),
    })
}

pub fn run_figure(fig: &Figure, jobs: usize) -> Result<FigureResult> {
    let curves = fig
        .curves
        .iter()
        .map(|c| Ok((c.label.clone(), run_sweep(&c.scenario, &c.sweep, jobs)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(FigureResult { figure: fig.clone(), curves })
}
