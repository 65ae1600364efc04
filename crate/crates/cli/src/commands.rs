//! One function per subcommand. Each turns a resolved [`Scenario`] into an
//! [`Outcome`]: JSON results, named verdicts, tables and an exit code.

use std::collections::BTreeMap;
use std::sync::Arc;

use anyhow::Context;
use penrose_lab::mass::{self, Verdict};
use penrose_lab::mu_bubble::{self, MuBubbleOptions, PrescribedMeanCurvature};
use penrose_lab::quadrature::QuadOptions;
use penrose_lab::radial::write_table;
use penrose_lab::{trumpet, Dimension, RadialGrid, RadialProfile, TabulatedFactor};
use serde_json::{json, Value};

use crate::config::{ProfileSpec, Scenario};
use crate::output::{Cell, Table};

pub const EXIT_OK: u8 = 0;
pub const EXIT_OTHER: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_VIOLATED: u8 = 3;
pub const EXIT_DEGENERATE: u8 = 4;
pub const EXIT_TRUMPET: u8 = 5;

/// Radius range and size of the exported trumpet table.
const EXPORT_RANGE: (f64, f64) = (1e-5, 1e5);
const EXPORT_COUNT: usize = 8192;
/// Points in the functional plot of `mu-bubble`.
const FUNCTIONAL_SAMPLES: usize = 256;
/// Slack when testing the horizon bounds for monotonicity.
const MONOTONE_SLACK: f64 = 1e-9;

pub struct Outcome {
    pub results: Value,
    pub verdicts: BTreeMap<String, String>,
    pub tables: Vec<Table>,
    /// Extra files for the output directory: `(file name, contents)`.
    pub files: Vec<(String, Vec<u8>)>,
    pub exit_code: u8,
}

impl Outcome {
    fn new(results: Value) -> Self {
        Outcome {
            results,
            verdicts: BTreeMap::new(),
            tables: Vec::new(),
            files: Vec::new(),
            exit_code: EXIT_OK,
        }
    }

    fn verdict(&mut self, name: &str, passed: bool) {
        self.verdicts
            .insert(name.to_string(), if passed { "pass" } else { "fail" }.to_string());
    }
}

pub fn build_profile(s: &Scenario) -> anyhow::Result<RadialProfile> {
    let dim = Dimension::new(s.n)?;
    let profile = match &s.profile {
        ProfileSpec::Euclidean => RadialProfile::euclidean(dim),
        ProfileSpec::Schwarzschild { mass } => RadialProfile::schwarzschild(dim, *mass)?,
        ProfileSpec::SchwarzschildLike { a, b } => RadialProfile::schwarzschild_like(dim, *a, *b)?,
        ProfileSpec::Cylinder => RadialProfile::cylinder(dim),
        ProfileSpec::Trumpet { r0, alpha } => {
            let r0 = r0.unwrap_or_else(|| trumpet::find_r0(dim));
            let alpha = alpha.unwrap_or_else(|| trumpet::min_alpha(dim, r0));
            trumpet::build_trumpet(dim, r0, alpha)?
        }
        ProfileSpec::Tabulated { path, rel_step } => {
            let mut table = TabulatedFactor::from_file(path)
                .with_context(|| format!("reading table {}", path.display()))?;
            if let Some(h) = rel_step {
                table = table.with_rel_step(*h);
            }
            RadialProfile::tabulated(dim, Arc::new(table))
        }
    };
    let quad = QuadOptions::default()
        .with_abs_tol(s.tolerances.quad_abs)
        .with_rel_tol(s.tolerances.quad_rel);
    Ok(profile.with_quadrature(quad))
}

pub fn grid_for(s: &Scenario, profile: &RadialProfile) -> anyhow::Result<RadialGrid> {
    Ok(match s.grid {
        None => RadialGrid::default_for(profile)?,
        Some(g) => RadialGrid::clipped(
            g.r_lo.unwrap_or(1e-4),
            g.r_hi.unwrap_or(1e4),
            g.count.unwrap_or(RadialGrid::DEFAULT_COUNT),
            &profile.domain(),
        )?,
    })
}

/// The configured anchor, or the grid radius where `H` is largest.
fn anchor_radius(s: &Scenario, profile: &RadialProfile, grid: &RadialGrid) -> anyhow::Result<f64> {
    if let Some(r0) = s.r0 {
        return Ok(r0);
    }
    let mut best = (f64::NEG_INFINITY, grid.r_hi);
    for r in grid.points() {
        let h = profile.sphere_mean_curvature(r)?;
        if h > best.0 {
            best = (h, r);
        }
    }
    Ok(best.1)
}

pub fn run(s: &Scenario) -> anyhow::Result<Outcome> {
    use crate::config::Command::*;
    match s.command {
        Analyze => analyze(s),
        Penrose => penrose(s),
        MuBubble => mu_bubble_single(s),
        Horizon => horizon(s),
        Rigidity => rigidity(s),
        Trumpet => trumpet_cmd(s),
        Batch => unreachable!("batch is dispatched by the caller"),
    }
}

fn error_value<E: std::fmt::Display>(e: E) -> Value {
    json!({ "error": e.to_string() })
}

fn analyze(s: &Scenario) -> anyhow::Result<Outcome> {
    let profile = build_profile(s)?;
    let grid = grid_for(s, &profile)?;
    let three = s.n == 3;
    let mut table = Table::new(
        "profile",
        &["r", "u", "du", "R", "H", "area", "geodesic_s", "hawking_mass"],
    );
    let mut s_acc = 0.0;
    let mut prev: Option<f64> = None;
    let mut min_r = f64::INFINITY;
    let mut h_sign_changes = 0usize;
    let mut prev_h: Option<f64> = None;
    for r in grid.points() {
        let j = profile.jet(r)?;
        let curv = profile.scalar_curvature(r)?;
        let h = profile.sphere_mean_curvature(r)?;
        let area = profile.sphere_area(r)?;
        if let Some(p) = prev {
            s_acc += profile.geodesic_distance(p, r)?.value();
        }
        let hm = if three { Some(mass::hawking_mass(&profile, r)?.value) } else { None };
        if let Some(ph) = prev_h {
            if (ph > 0.0) != (h > 0.0) {
                h_sign_changes += 1;
            }
        }
        min_r = min_r.min(curv);
        prev = Some(r);
        prev_h = Some(h);
        table.push(vec![
            r.into(),
            j.u.into(),
            j.du.into(),
            curv.into(),
            h.into(),
            area.into(),
            s_acc.into(),
            hm.into(),
        ]);
    }

    let adm = match mass::adm_mass_from_tail(&profile) {
        Ok((m, tail)) => json!({ "mass": m, "tail": tail }),
        Err(e) => error_value(e),
    };
    let infimum = mass::area_infimum_radial(&profile, &grid)?;
    let mut out = Outcome::new(Value::Null);
    let penrose = if three {
        match mass::penrose_analysis(&profile, &grid, s.tolerances.equality) {
            Ok(a) => {
                out.verdicts.insert("penrose".into(), a.report.verdict.as_str().into());
                serde_json::to_value(a.report)?
            }
            Err(e) => error_value(e),
        }
    } else {
        Value::Null
    };
    out.results = json!({
        "grid": grid,
        "adm": adm,
        "area_infimum": infimum,
        "penrose": penrose,
        "min_scalar_curvature": min_r,
        "mean_curvature_sign_changes": h_sign_changes,
    });
    out.tables.push(table);
    Ok(out)
}

fn penrose(s: &Scenario) -> anyhow::Result<Outcome> {
    let profile = build_profile(s)?;
    let grid = grid_for(s, &profile)?;
    let a = mass::penrose_analysis(&profile, &grid, s.tolerances.equality)?;
    let mut plot = Table::new("area", &["r", "area", "H"]);
    for r in grid.points() {
        let g = profile.sphere_geometry(r)?;
        plot.push(vec![r.into(), g.area.into(), g.mean_curvature.into()]);
    }
    let mut out = Outcome::new(json!({
        "report": a.report,
        "tail": a.tail,
        "area_infimum": a.infimum,
        "grid": grid,
    }));
    out.verdicts.insert("penrose".into(), a.report.verdict.as_str().into());
    if a.report.verdict == Verdict::Violated {
        out.exit_code = EXIT_VIOLATED;
    }
    out.tables.push(plot);
    Ok(out)
}

fn mu_bubble_single(s: &Scenario) -> anyhow::Result<Outcome> {
    let profile = build_profile(s)?;
    let grid = grid_for(s, &profile)?;
    let r0 = anchor_radius(s, &profile, &grid)?;
    let opts = MuBubbleOptions::default();
    let run = mu_bubble::solve_mu_bubble(&profile, r0, s.epsilon, &opts)?;
    let sol = run.solution;
    let diameter = mu_bubble::diameter_report(&sol, s.epsilon);

    let problem = mu_bubble::MuBubbleProblem::new(
        profile.clone(),
        r0,
        PrescribedMeanCurvature::new(s.epsilon, run.beta)?,
    )?
    .with_lip_factor(opts.lip_factor)?;
    let scan = problem.scan(FUNCTIONAL_SAMPLES)?;
    let mut plot = Table::new("functional", &["rho", "distance", "functional", "H", "h_of_d"]);
    for (i, &rho) in scan.radii.iter().enumerate() {
        let d = scan.distance[i];
        let h = profile.sphere_mean_curvature(rho).ok();
        let hd = problem.h().eval(d).ok();
        plot.push(vec![rho.into(), d.into(), scan.functional[i].into(), h.into(), hd.into()]);
    }

    let el_ok = sol.el_residual <= s.tolerances.el_residual;
    let window_ok = sol.mean_curvature > 0.0 && sol.mean_curvature < 2.0 * s.epsilon;
    let mut out = Outcome::new(json!({
        "anchor_radius": r0,
        "anchor_mean_curvature": problem.anchor_curvature(),
        "rho_star": sol.rho_star,
        "mean_curvature": sol.mean_curvature,
        "el_residual": sol.el_residual,
        "run": run,
        "diameter": diameter,
    }));
    out.verdict("el_residual", el_ok);
    out.verdict("curvature_window", window_ok);
    out.verdict("second_order", sol.second_order_ok);
    out.tables.push(plot);
    Ok(out)
}

/// Exit code for a step that failed inside a sequence.
fn step_exit(kind: Option<&str>) -> u8 {
    match kind {
        Some("degenerate_minimizer") => EXIT_DEGENERATE,
        Some(_) => EXIT_OTHER,
        None => EXIT_OK,
    }
}

fn non_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] >= w[0] - MONOTONE_SLACK)
}

fn horizon(s: &Scenario) -> anyhow::Result<Outcome> {
    let profile = build_profile(s)?;
    let grid = grid_for(s, &profile)?;
    let r0 = anchor_radius(s, &profile, &grid)?;
    let seq = mu_bubble::horizon_sequence(&profile, r0, &s.epsilons, &MuBubbleOptions::default())?;

    let mut table = Table::new(
        "steps",
        &[
            "epsilon",
            "beta",
            "doublings",
            "rho_star",
            "area",
            "H",
            "el_residual",
            "hawking_bound",
            "area_infimum_bound",
            "area_in_range",
            "curvature_below_2eps",
            "error",
        ],
    );
    let mut exit = EXIT_OK;
    for st in &seq.steps {
        let run = st.run.as_ref();
        table.push(vec![
            st.epsilon.into(),
            run.map(|r| r.beta).into(),
            run.map_or(Cell::Empty, |r| r.doublings.into()),
            run.map(|r| r.solution.rho_star).into(),
            run.map(|r| r.solution.area).into(),
            run.map(|r| r.solution.mean_curvature).into(),
            run.map(|r| r.solution.el_residual).into(),
            st.hawking_bound.into(),
            st.area_infimum_bound.into(),
            st.area_in_range.into(),
            st.curvature_below_2eps.into(),
            st.error.clone().into(),
        ]);
        if exit == EXIT_OK {
            exit = step_exit(st.error_kind);
        }
    }
    let hawking = seq.hawking_bounds();
    let area_bounds: Vec<f64> = seq.steps.iter().filter_map(|st| st.area_infimum_bound).collect();
    let final_bound = hawking.last().copied();
    let mut out = Outcome::new(json!({
        "anchor_radius": r0,
        "final_hawking_bound": final_bound,
        "final_area_infimum_bound": area_bounds.last(),
        "hawking_bounds_monotone": non_decreasing(&hawking),
        "area_infimum_bounds_monotone": non_decreasing(&area_bounds),
        "sequence": seq,
    }));
    out.verdict("hawking_bounds_monotone", non_decreasing(&hawking));
    out.verdict("area_infimum_bounds_monotone", non_decreasing(&area_bounds));
    out.verdict("all_steps_solved", seq.steps.iter().all(|st| st.error.is_none()));
    out.exit_code = exit;
    out.tables.push(table);
    Ok(out)
}

fn rigidity(s: &Scenario) -> anyhow::Result<Outcome> {
    let profile = build_profile(s)?;
    let grid = grid_for(s, &profile)?;
    let r0 = anchor_radius(s, &profile, &grid)?;
    let trace = mu_bubble::rigidity_iteration(&profile, r0, s.epsilon, s.gamma, &MuBubbleOptions::default())?;

    let mut table = Table::new(
        "steps",
        &[
            "k",
            "epsilon",
            "rho_star",
            "area",
            "area_bound",
            "area_ok",
            "annulus_volume",
            "volume_bound",
            "volume_ok",
            "nested",
            "error",
        ],
    );
    let mut exit = EXIT_OK;
    for st in &trace.steps {
        let run = st.run.as_ref();
        table.push(vec![
            st.k.into(),
            st.epsilon.into(),
            run.map(|r| r.solution.rho_star).into(),
            run.map(|r| r.solution.area).into(),
            st.area_bound.into(),
            st.area_ok.into(),
            st.annulus_volume.into(),
            st.volume_bound.into(),
            st.volume_ok.into(),
            st.nested.into(),
            st.error.clone().into(),
        ]);
        if exit == EXIT_OK {
            exit = step_exit(st.error_kind);
        }
    }
    if exit == EXIT_OK && !trace.all_passed {
        exit = EXIT_VIOLATED;
    }
    let last_rho = trace
        .steps
        .iter()
        .rev()
        .find_map(|st| st.run.map(|r| r.solution.rho_star));
    let infimum = mass::area_infimum_radial(&profile, &grid)?;
    let mut out = Outcome::new(json!({
        "anchor_radius": r0,
        "final_rho_star": last_rho,
        "area_infimum_argmin": infimum.argmin,
        "trace": trace,
    }));
    out.verdict("area_bounds", trace.steps.iter().all(|st| st.area_ok != Some(false)));
    out.verdict("volume_bounds", trace.steps.iter().all(|st| st.volume_ok != Some(false)));
    out.verdict("cumulative_volume", trace.cumulative_ok);
    out.verdict("nested", trace.steps.iter().all(|st| st.nested != Some(false)));
    out.exit_code = exit;
    out.tables.push(table);
    Ok(out)
}

fn trumpet_cmd(s: &Scenario) -> anyhow::Result<Outcome> {
    let profile = build_profile(s)?;
    let factor = match profile.kind() {
        penrose_lab::ProfileKind::Trumpet(f) => f.clone(),
        _ => unreachable!("config validation guarantees a trumpet profile"),
    };
    let params = *factor.params();
    let grid = grid_for(s, &profile)?;
    let verification = trumpet::verify_trumpet(&profile, &grid)?;
    let infimum = mass::area_infimum_radial(&profile, &grid)?;
    let penrose = if s.n == 3 {
        match mass::penrose_analysis(&profile, &grid, s.tolerances.equality) {
            Ok(a) => Some(a.report),
            Err(_) => None,
        }
    } else {
        None
    };

    let export_grid = RadialGrid::new(EXPORT_RANGE.0, EXPORT_RANGE.1, EXPORT_COUNT)?;
    let samples = trumpet::sample_profile(&profile, &export_grid)?;
    let header = [
        format!("trumpet conformal factor, n = {}", params.n.get()),
        format!("r0 = {:?}, alpha = {:?}, alpha0 = {:?}", params.r0, params.alpha, params.alpha0),
        "columns: r u".to_string(),
    ];
    let sidecar = json!({
        "params": params,
        "min_alpha": verification.min_alpha,
        "table": { "file": "trumpet_profile.txt", "grid": export_grid },
        "verification": verification,
    });

    let mut checks = Table::new("checks", &["name", "passed", "value", "detail"]);
    for c in &verification.checks {
        checks.push(vec![
            Cell::Text(c.name.to_string()),
            c.passed.into(),
            c.value.into(),
            Cell::Text(c.detail.clone()),
        ]);
    }

    let failed = verification.failed_checks();
    let mut out = Outcome::new(json!({
        "params": params,
        "min_alpha": verification.min_alpha,
        "weak_alpha": verification.weak_alpha,
        "adm_mass": verification.adm_mass,
        "area_infimum": infimum,
        "penrose": penrose,
        "failed_checks": failed,
        "verification": verification,
    }));
    for c in &verification.checks {
        out.verdict(c.name, c.passed);
    }
    if let Some(p) = penrose {
        out.verdicts.insert("penrose".into(), p.verdict.as_str().into());
    }
    if !verification.passed {
        out.exit_code = EXIT_TRUMPET;
    }
    out.tables.push(checks);
    out.files.push((
        "trumpet_profile.txt".into(),
        write_table(&samples, &header).into_bytes(),
    ));
    out.files.push((
        "trumpet_profile.json".into(),
        serde_json::to_vec_pretty(&sidecar)?,
    ));
    Ok(out)
}

/// Exit code for an error that aborted a run.
pub fn exit_code_for(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<crate::config::ConfigError>().is_some() {
            return EXIT_CONFIG;
        }
        if let Some(e) = cause.downcast_ref::<penrose_lab::Error>() {
            use penrose_lab::Error::*;
            return match e {
                DegenerateMinimizer { .. } => EXIT_DEGENERATE,
                Parse { .. } | InvalidProfile(_) | InvalidGrid(_) | InvalidDimension(_) | Io(_) => {
                    EXIT_CONFIG
                }
                _ => EXIT_OTHER,
            };
        }
    }
    EXIT_OTHER
}
