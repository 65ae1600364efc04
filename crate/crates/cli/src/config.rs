//! Scenario configs: JSON files plus command-line overrides, resolved into
//! fully specified [`Scenario`]s.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use penrose_lab::Scalar;
use serde::{Deserialize, Serialize};

/// Bad input: unparsable JSON, unknown fields, out-of-range values, missing
/// files. Maps to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Analyze,
    Penrose,
    MuBubble,
    Horizon,
    Rigidity,
    Trumpet,
    Batch,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::Penrose => "penrose",
            Command::MuBubble => "mu-bubble",
            Command::Horizon => "horizon",
            Command::Rigidity => "rigidity",
            Command::Trumpet => "trumpet",
            Command::Batch => "batch",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    Euclidean,
    Schwarzschild {
        #[serde(default = "unit_mass")]
        mass: f64,
    },
    SchwarzschildLike {
        a: f64,
        b: f64,
    },
    Cylinder,
    /// Gluing radius and α default to the smallest admissible values.
    Trumpet {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r0: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<f64>,
    },
    Tabulated {
        path: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rel_step: Option<f64>,
    },
}

fn unit_mass() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ProfileKindArg {
    Euclidean,
    Schwarzschild,
    Cylinder,
    Trumpet,
    Tabulated,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub r_lo: Option<f64>,
    pub r_hi: Option<f64>,
    pub count: Option<usize>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSpec {
    pub quad_abs: Option<f64>,
    pub quad_rel: Option<f64>,
    pub el_residual: Option<f64>,
    pub equality: Option<f64>,
}

/// A config file, or one entry of a batch file's `scenarios`. Every field is
/// optional; missing values fall back to the enclosing batch file, then to
/// the defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub command: Option<Command>,
    pub name: Option<String>,
    pub profile: Option<ProfileSpec>,
    pub n: Option<u32>,
    pub grid: Option<GridSpec>,
    pub tolerances: Option<ToleranceSpec>,
    /// Anchor radius of the mu-bubble problems.
    pub r0: Option<f64>,
    pub epsilon: Option<f64>,
    pub epsilons: Option<Vec<f64>>,
    pub gamma: Option<f64>,
    pub scenarios: Option<Vec<ScenarioConfig>>,
}

impl ScenarioConfig {
    pub fn from_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| bad(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.rebase_paths(base);
        Ok(cfg)
    }

    /// serde_json errors already carry line and column.
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    fn rebase_paths(&mut self, base: &Path) {
        if let Some(ProfileSpec::Tabulated { path, .. }) = &mut self.profile {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
        for s in self.scenarios.iter_mut().flatten() {
            s.rebase_paths(base);
        }
    }

    /// Fills fields unset in `self` from `parent`.
    fn inherit(mut self, parent: &ScenarioConfig) -> Self {
        macro_rules! take {
            ($($f:ident),*) => {$(
                if self.$f.is_none() {
                    self.$f = parent.$f.clone();
                }
            )*};
        }
        take!(profile, n, r0, epsilon, epsilons, gamma);
        self.grid = merge_grid(parent.grid, self.grid);
        self.tolerances = merge_tol(parent.tolerances, self.tolerances);
        self
    }
}

fn merge_grid(base: Option<GridSpec>, top: Option<GridSpec>) -> Option<GridSpec> {
    match (base, top) {
        (Some(b), Some(t)) => Some(GridSpec {
            r_lo: t.r_lo.or(b.r_lo),
            r_hi: t.r_hi.or(b.r_hi),
            count: t.count.or(b.count),
        }),
        (b, t) => t.or(b),
    }
}

fn merge_tol(base: Option<ToleranceSpec>, top: Option<ToleranceSpec>) -> Option<ToleranceSpec> {
    match (base, top) {
        (Some(b), Some(t)) => Some(ToleranceSpec {
            quad_abs: t.quad_abs.or(b.quad_abs),
            quad_rel: t.quad_rel.or(b.quad_rel),
            el_residual: t.el_residual.or(b.el_residual),
            equality: t.equality.or(b.equality),
        }),
        (b, t) => t.or(b),
    }
}

/// Values given on the command line. They win over everything in the file,
/// including the entries of a batch.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub n: Option<u32>,
    pub profile: Option<ProfileKindArg>,
    pub mass: Option<f64>,
    pub table: Option<PathBuf>,
    pub gluing_radius: Option<f64>,
    pub alpha: Option<f64>,
    pub grid: GridSpec,
    pub tolerances: ToleranceSpec,
    pub r0: Option<f64>,
    pub epsilon: Option<f64>,
    pub epsilons: Option<Vec<f64>>,
    pub gamma: Option<f64>,
}

impl Overrides {
    fn apply(&self, cfg: &mut ScenarioConfig, command: Command) -> anyhow::Result<()> {
        if let Some(n) = self.n {
            cfg.n = Some(n);
        }
        if let Some(kind) = self.profile {
            let current = cfg.profile.take();
            cfg.profile = Some(match (kind, current) {
                (ProfileKindArg::Euclidean, _) => ProfileSpec::Euclidean,
                (ProfileKindArg::Cylinder, _) => ProfileSpec::Cylinder,
                (ProfileKindArg::Schwarzschild, Some(p @ ProfileSpec::Schwarzschild { .. })) => p,
                (ProfileKindArg::Schwarzschild, _) => ProfileSpec::Schwarzschild { mass: 1.0 },
                (ProfileKindArg::Trumpet, Some(p @ ProfileSpec::Trumpet { .. })) => p,
                (ProfileKindArg::Trumpet, _) => ProfileSpec::Trumpet { r0: None, alpha: None },
                (ProfileKindArg::Tabulated, Some(p @ ProfileSpec::Tabulated { .. })) => p,
                (ProfileKindArg::Tabulated, _) => match &self.table {
                    Some(path) => ProfileSpec::Tabulated { path: path.clone(), rel_step: None },
                    None => return Err(bad("--profile tabulated needs --table")),
                },
            });
        }
        if let Some(path) = &self.table {
            let rel_step = match &cfg.profile {
                Some(ProfileSpec::Tabulated { rel_step, .. }) => *rel_step,
                _ => None,
            };
            cfg.profile = Some(ProfileSpec::Tabulated { path: path.clone(), rel_step });
        }
        if let Some(m) = self.mass {
            match &mut cfg.profile {
                Some(ProfileSpec::Schwarzschild { mass }) => *mass = m,
                None => cfg.profile = Some(ProfileSpec::Schwarzschild { mass: m }),
                Some(_) => return Err(bad("--mass applies only to the schwarzschild profile")),
            }
        }
        if self.gluing_radius.is_some() || self.alpha.is_some() {
            if cfg.profile.is_none() && command == Command::Trumpet {
                cfg.profile = Some(ProfileSpec::Trumpet { r0: None, alpha: None });
            }
            match &mut cfg.profile {
                Some(ProfileSpec::Trumpet { r0, alpha }) => {
                    *r0 = self.gluing_radius.or(*r0);
                    *alpha = self.alpha.or(*alpha);
                }
                _ => return Err(bad("--gluing-radius and --alpha apply only to the trumpet profile")),
            }
        }
        cfg.grid = merge_grid(cfg.grid, Some(self.grid));
        cfg.tolerances = merge_tol(cfg.tolerances, Some(self.tolerances));
        if self.r0.is_some() {
            cfg.r0 = self.r0;
        }
        if self.epsilon.is_some() {
            cfg.epsilon = self.epsilon;
        }
        if self.epsilons.is_some() {
            cfg.epsilons = self.epsilons.clone();
        }
        if self.gamma.is_some() {
            cfg.gamma = self.gamma;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tolerances {
    pub quad_abs: f64,
    pub quad_rel: f64,
    pub el_residual: f64,
    pub equality: f64,
}

/// A fully resolved, validated scenario. This is what reports echo.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Scenario {
    pub command: Command,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub n: u32,
    pub profile: ProfileSpec,
    /// `None`: the default grid of the profile.
    pub grid: Option<GridSpec>,
    pub tolerances: Tolerances,
    /// `None`: the grid radius of largest mean curvature.
    pub r0: Option<f64>,
    pub epsilon: f64,
    pub epsilons: Vec<f64>,
    pub gamma: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub scenarios: Vec<Scenario>,
}

pub const DEFAULT_EPSILON: f64 = 0.1;
pub const DEFAULT_GAMMA: f64 = 1.5;
pub const DEFAULT_EL_RESIDUAL: f64 = 1e-6;

/// Merges `file` (if any), the subcommand and the overrides, then validates.
pub fn resolve(
    file: Option<ScenarioConfig>,
    command: Option<Command>,
    overrides: &Overrides,
) -> anyhow::Result<Scenario> {
    let cfg = file.unwrap_or_default();
    let command = match (command, cfg.command) {
        (Some(a), Some(b)) if a != b => {
            return Err(bad(format!(
                "subcommand {} conflicts with config command {}",
                a.as_str(),
                b.as_str()
            )))
        }
        (Some(c), _) | (None, Some(c)) => c,
        (None, None) => return Err(bad("no command: give a subcommand or a config with a `command` field")),
    };
    resolve_one(cfg, command, overrides, true)
}

fn resolve_one(
    mut cfg: ScenarioConfig,
    command: Command,
    overrides: &Overrides,
    top_level: bool,
) -> anyhow::Result<Scenario> {
    let mut scenarios = Vec::new();
    if command == Command::Batch {
        if !top_level {
            return Err(bad("batch scenarios cannot nest another batch"));
        }
        let entries = cfg.scenarios.take().unwrap_or_default();
        if entries.is_empty() {
            return Err(bad("batch config needs a non-empty `scenarios` list"));
        }
        let mut names = BTreeSet::new();
        for (i, entry) in entries.into_iter().enumerate() {
            let field = format!("scenarios[{i}]");
            let sub_cmd = entry
                .command
                .ok_or_else(|| bad(format!("{field}.command: missing")))?;
            let mut child = entry.inherit(&cfg);
            if child.name.is_none() {
                child.name = Some(format!("scenario-{i:02}"));
            }
            let s = resolve_one(child, sub_cmd, overrides, false)
                .map_err(|e| bad(format!("{field}: {e}")))?;
            let name = s.name.clone().unwrap_or_default();
            if !valid_name(&name) {
                return Err(bad(format!("{field}.name: {name:?} is not a plain file name")));
            }
            if !names.insert(name.clone()) {
                return Err(bad(format!("{field}.name: duplicate scenario name {name:?}")));
            }
            scenarios.push(s);
        }
    } else if cfg.scenarios.is_some() {
        return Err(bad(format!("`scenarios` is only valid for batch, not {}", command.as_str())));
    }

    overrides.apply(&mut cfg, command)?;

    let n = cfg.n.unwrap_or(3);
    if n < 3 {
        return Err(bad(format!("n: dimension must be at least 3, got {n}")));
    }
    let profile = match cfg.profile {
        Some(p) => p,
        None if command == Command::Trumpet => ProfileSpec::Trumpet { r0: None, alpha: None },
        None => ProfileSpec::Schwarzschild { mass: 1.0 },
    };
    validate_profile(&profile)?;
    if command == Command::Trumpet && !matches!(profile, ProfileSpec::Trumpet { .. }) {
        return Err(bad("profile: the trumpet command needs a trumpet profile"));
    }

    let grid = match cfg.grid {
        Some(g) if g != GridSpec::default() => Some(g),
        _ => None,
    };
    if let Some(g) = grid {
        for (name, v) in [("grid.r_lo", g.r_lo), ("grid.r_hi", g.r_hi)] {
            if let Some(v) = v {
                positive(name, v)?;
            }
        }
        if let (Some(lo), Some(hi)) = (g.r_lo, g.r_hi) {
            if lo >= hi {
                return Err(bad(format!("grid: r_lo ({lo}) must be below r_hi ({hi})")));
            }
        }
        if g.count.is_some_and(|c| c < 2) {
            return Err(bad("grid.count: need at least 2 points"));
        }
    }

    let t = cfg.tolerances.unwrap_or_default();
    let tolerances = Tolerances {
        quad_abs: t.quad_abs.unwrap_or(<f64 as Scalar>::QUAD_TOL),
        quad_rel: t.quad_rel.unwrap_or(<f64 as Scalar>::QUAD_RTOL),
        el_residual: t.el_residual.unwrap_or(DEFAULT_EL_RESIDUAL),
        equality: t.equality.unwrap_or(penrose_lab::mass::EQUALITY_TOL),
    };
    positive("tolerances.quad_abs", tolerances.quad_abs)?;
    positive("tolerances.quad_rel", tolerances.quad_rel)?;
    positive("tolerances.el_residual", tolerances.el_residual)?;
    positive("tolerances.equality", tolerances.equality)?;

    if let Some(r0) = cfg.r0 {
        positive("r0", r0)?;
    }
    let epsilon = cfg.epsilon.unwrap_or(DEFAULT_EPSILON);
    positive("epsilon", epsilon)?;
    let epsilons = cfg
        .epsilons
        .unwrap_or_else(penrose_lab::mu_bubble::default_epsilon_schedule::<f64>);
    if epsilons.is_empty() {
        return Err(bad("epsilons: schedule is empty"));
    }
    for (i, &e) in epsilons.iter().enumerate() {
        positive(&format!("epsilons[{i}]"), e)?;
    }
    let gamma = cfg.gamma.unwrap_or(DEFAULT_GAMMA);
    if !(gamma > 1.0 && gamma < 2.0) {
        return Err(bad(format!("gamma: must lie in (1, 2), got {gamma}")));
    }

    Ok(Scenario {
        command,
        name: cfg.name,
        n,
        profile,
        grid,
        tolerances,
        r0: cfg.r0,
        epsilon,
        epsilons,
        gamma,
        scenarios,
    })
}

fn positive(field: &str, v: f64) -> anyhow::Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(bad(format!("{field}: must be positive and finite, got {v}")))
    }
}

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && name != "."
        && name != ".."
        && name.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c))
}

fn validate_profile(p: &ProfileSpec) -> anyhow::Result<()> {
    match p {
        ProfileSpec::Euclidean | ProfileSpec::Cylinder => Ok(()),
        ProfileSpec::Schwarzschild { mass } => {
            if *mass >= 0.0 && mass.is_finite() {
                Ok(())
            } else {
                Err(bad(format!("profile.mass: must be nonnegative, got {mass}")))
            }
        }
        ProfileSpec::SchwarzschildLike { a, b } => {
            positive("profile.a", *a)?;
            if *b >= 0.0 && b.is_finite() {
                Ok(())
            } else {
                Err(bad(format!("profile.b: must be nonnegative, got {b}")))
            }
        }
        ProfileSpec::Trumpet { r0, alpha } => {
            if let Some(r0) = r0 {
                positive("profile.r0", *r0)?;
            }
            if let Some(a) = alpha {
                positive("profile.alpha", *a)?;
            }
            Ok(())
        }
        ProfileSpec::Tabulated { path, rel_step } => {
            if let Some(h) = rel_step {
                positive("profile.rel_step", *h)?;
            }
            if !path.is_file() {
                return Err(bad(format!("profile.path: no such file {}", path.display())));
            }
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_field_reports_line() {
        let err = ScenarioConfig::from_json("{\n  \"command\": \"penrose\",\n  \"massive\": 2\n}").unwrap_err();
        assert_eq!(err.line(), 3);
        assert!(err.to_string().contains("massive"));
    }

    #[test]
    fn profile_tag_and_defaults() {
        let cfg = ScenarioConfig::from_json(r#"{"command": "penrose", "profile": {"kind": "schwarzschild"}}"#).unwrap();
        let s = resolve(Some(cfg), None, &Overrides::default()).unwrap();
        assert_eq!(s.profile, ProfileSpec::Schwarzschild { mass: 1.0 });
        assert_eq!(s.tolerances.equality, 1e-6);
        assert_eq!(s.epsilons.last(), Some(&1e-3));
    }

    #[test]
    fn flags_override_file() {
        let cfg = ScenarioConfig::from_json(r#"{"command": "penrose", "profile": {"kind": "schwarzschild", "mass": 2}}"#).unwrap();
        let o = Overrides { mass: Some(0.5), ..Default::default() };
        let s = resolve(Some(cfg), None, &o).unwrap();
        assert_eq!(s.profile, ProfileSpec::Schwarzschild { mass: 0.5 });
    }

    #[test]
    fn batch_entries_inherit() {
        let cfg = ScenarioConfig::from_json(
            r#"{"command": "batch", "n": 3, "epsilon": 0.05,
                "profile": {"kind": "schwarzschild", "mass": 2},
                "scenarios": [{"command": "penrose"}, {"command": "mu-bubble", "name": "b", "epsilon": 0.2}]}"#,
        )
        .unwrap();
        let s = resolve(Some(cfg), None, &Overrides::default()).unwrap();
        assert_eq!(s.scenarios.len(), 2);
        assert_eq!(s.scenarios[0].name.as_deref(), Some("scenario-00"));
        assert_eq!(s.scenarios[0].epsilon, 0.05);
        assert_eq!(s.scenarios[1].epsilon, 0.2);
        assert_eq!(s.scenarios[1].profile, ProfileSpec::Schwarzschild { mass: 2.0 });
    }

    #[test]
    fn rejects_out_of_range() {
        let check = |json: &str| {
            let cfg = ScenarioConfig::from_json(json).unwrap();
            resolve(Some(cfg), None, &Overrides::default()).unwrap_err()
        };
        let e = check(r#"{"command": "rigidity", "gamma": 2.5}"#);
        assert!(e.to_string().starts_with("gamma"));
        let e = check(r#"{"command": "penrose", "tolerances": {"equality": 0}}"#);
        assert!(e.to_string().contains("tolerances.equality"));
        let e = check(r#"{"command": "analyze", "profile": {"kind": "tabulated", "path": "/nonexistent/u.txt"}}"#);
        assert!(e.to_string().contains("profile.path"));
        let e = check(r#"{"command": "trumpet", "profile": {"kind": "euclidean"}}"#);
        assert!(e.downcast_ref::<ConfigError>().is_some());
    }

    #[test]
    fn subcommand_must_agree_with_file() {
        let cfg = ScenarioConfig::from_json(r#"{"command": "penrose"}"#).unwrap();
        assert!(resolve(Some(cfg), Some(Command::Analyze), &Overrides::default()).is_err());
        assert!(resolve(None, None, &Overrides::default()).is_err());
    }
}
