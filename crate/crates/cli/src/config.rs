//! Sectioned `key = value` configuration files.
//!
//! ```text
//! [physics]
//! alpha = 0.5
//! k = 2
//!
//! [solver]
//! dt = 0.01
//! ```
//!
//! Every key is optional; missing keys take the defaults of [`ExperimentConfig::default`].
//! Unknown keys are rejected so that typos do not silently fall back to defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use hypoaudit::experiment::InitialProfile;
use hypoaudit::{CollisionScheme, CollisionSpec, KernelFamily, Splitting};

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Io(String),
    Syntax { line: usize, message: String },
    Field { field: String, message: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Io(m) => write!(f, "cannot read config: {m}"),
            Self::Syntax { line, message } => write!(f, "config line {line}: {message}"),
            Self::Field { field, message } => write!(f, "invalid `{field}`: {message}"),
        }
    }
}

impl std::error::Error for ConfigError {}

fn field_err(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field { field: field.to_string(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Kinetic,
    Homogeneous,
    Spectral,
    RatesSweep,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Self::Kinetic => "kinetic",
            Self::Homogeneous => "homogeneous",
            Self::Spectral => "spectral",
            Self::RatesSweep => "rates-sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Collision {
    FokkerPlanck,
    Scattering(KernelFamily),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    K,
    Alpha,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Option<Mode>,
    pub seed: u64,
    pub alpha: f64,
    /// `None` means `2(1−α)`.
    pub beta: Option<f64>,
    pub k: f64,
    pub d: usize,
    pub collision: Collision,
    pub nx: usize,
    pub nv: usize,
    pub k_max: Option<f64>,
    /// `None` sizes the torus from the horizon.
    pub length: Option<f64>,
    pub dt: f64,
    pub t_end: f64,
    pub splitting: Splitting,
    pub scheme: CollisionScheme,
    pub every: usize,
    pub profile: InitialProfile,
    pub bump_width: f64,
    pub spectral_r: f64,
    pub spectral_n: usize,
    pub sweep_axis: SweepAxis,
    pub sweep_values: Vec<f64>,
    pub audit_samples: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: None,
            seed: 0,
            alpha: 0.5,
            beta: None,
            k: 2.0,
            d: 1,
            collision: Collision::FokkerPlanck,
            nx: 64,
            nv: 201,
            k_max: None,
            length: None,
            dt: 0.05,
            t_end: 20.0,
            splitting: Splitting::Strang,
            scheme: CollisionScheme::CrankNicolson,
            every: 20,
            profile: InitialProfile::HeavyTail { eps: 0.1 },
            bump_width: 0.03,
            spectral_r: 1e4,
            spectral_n: 8193,
            sweep_axis: SweepAxis::K,
            sweep_values: vec![0.25, 0.5, 1.0, 2.0, 4.0],
            audit_samples: 200,
        }
    }
}

const KEYS: &[&str] = &[
    "experiment.mode",
    "experiment.seed",
    "physics.alpha",
    "physics.beta",
    "physics.gamma",
    "physics.k",
    "physics.d",
    "collision.kind",
    "collision.kernel",
    "grid.nx",
    "grid.nv",
    "grid.k_max",
    "grid.length",
    "solver.dt",
    "solver.t_end",
    "solver.splitting",
    "solver.scheme",
    "output.every",
    "initial.profile",
    "initial.eps",
    "initial.bump_width",
    "spectral.r",
    "spectral.n",
    "sweep.axis",
    "sweep.values",
    "audit.samples",
];

/// Raw `section.key -> value` pairs.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut section = String::new();
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split(['#', ';']).next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::Syntax { line: i + 1, message: "unterminated section header".into() })?;
            section = name.trim().to_string();
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: i + 1,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        let full = if section.is_empty() { key.trim().to_string() } else { format!("{section}.{}", key.trim()) };
        if !KEYS.contains(&full.as_str()) {
            return Err(field_err(&full, "unknown key"));
        }
        if out.insert(full.clone(), value.trim().to_string()).is_some() {
            return Err(field_err(&full, "given twice"));
        }
    }
    Ok(out)
}

struct Fields(BTreeMap<String, String>);

impl Fields {
    fn str(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn num<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError> {
        match self.str(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| field_err(key, format!("cannot parse `{v}` as a number"))),
        }
    }

    fn opt_f64(&self, key: &str, default: Option<f64>) -> Result<Option<f64>, ConfigError> {
        match self.str(key) {
            None => Ok(default),
            Some("auto") => Ok(None),
            Some(_) => self.num(key, 0.0).map(Some),
        }
    }

    fn choice<T: Copy>(&self, key: &str, default: T, options: &[(&str, T)]) -> Result<T, ConfigError> {
        let Some(v) = self.str(key) else { return Ok(default) };
        options.iter().find(|(name, _)| *name == v).map(|(_, t)| *t).ok_or_else(|| {
            let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
            field_err(key, format!("`{v}` is not one of {}", names.join(", ")))
        })
    }
}

fn name<T: PartialEq>(options: &[(&'static str, T)], value: T) -> &'static str {
    options.iter().find(|(_, o)| *o == value).map_or("?", |(n, _)| *n)
}

const SPLITTINGS: &[(&str, Splitting)] = &[("strang", Splitting::Strang), ("lie", Splitting::Lie)];
const SCHEMES: &[(&str, CollisionScheme)] =
    &[("crank_nicolson", CollisionScheme::CrankNicolson), ("implicit_euler", CollisionScheme::ImplicitEuler)];
const KERNELS: &[(&str, KernelFamily)] =
    &[("separable", KernelFamily::Separable), ("boltzmann", KernelFamily::Boltzmann)];

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let f = Fields(parse_pairs(text)?);
        let d0 = Self::default();
        let modes = [
            ("kinetic", Some(Mode::Kinetic)),
            ("homogeneous", Some(Mode::Homogeneous)),
            ("spectral", Some(Mode::Spectral)),
            ("rates-sweep", Some(Mode::RatesSweep)),
        ];
        let collision = match f.str("collision.kind").unwrap_or("fokker_planck") {
            "fokker_planck" => {
                if f.str("collision.kernel").is_some() {
                    return Err(field_err("collision.kernel", "only used with kind = scattering"));
                }
                Collision::FokkerPlanck
            }
            "scattering" => Collision::Scattering(f.choice("collision.kernel", KernelFamily::Separable, KERNELS)?),
            other => {
                return Err(field_err("collision.kind", format!("`{other}` is not one of fokker_planck, scattering")))
            }
        };
        let profile = match f.str("initial.profile").unwrap_or("heavy_tail") {
            "equilibrium" => InitialProfile::Equilibrium,
            "heavy_tail" => InitialProfile::HeavyTail { eps: f.num("initial.eps", 0.1)? },
            other => {
                return Err(field_err("initial.profile", format!("`{other}` is not one of equilibrium, heavy_tail")))
            }
        };
        let sweep_values = match f.str("sweep.values") {
            None => d0.sweep_values.clone(),
            Some(list) => list
                .split(',')
                .map(|v| {
                    v.trim().parse().map_err(|_| field_err("sweep.values", format!("cannot parse `{}`", v.trim())))
                })
                .collect::<Result<_, _>>()?,
        };
        let cfg = Self {
            mode: f.choice("experiment.mode", None, &modes)?,
            seed: f.num("experiment.seed", d0.seed)?,
            alpha: f.num("physics.alpha", d0.alpha)?,
            beta: f.opt_f64("physics.beta", None)?,
            k: f.num("physics.k", d0.k)?,
            d: f.num("physics.d", d0.d)?,
            collision,
            nx: f.num("grid.nx", d0.nx)?,
            nv: f.num("grid.nv", d0.nv)?,
            k_max: f.opt_f64("grid.k_max", None)?,
            length: f.opt_f64("grid.length", None)?,
            dt: f.num("solver.dt", d0.dt)?,
            t_end: f.num("solver.t_end", d0.t_end)?,
            splitting: f.choice("solver.splitting", d0.splitting, SPLITTINGS)?,
            scheme: f.choice("solver.scheme", d0.scheme, SCHEMES)?,
            every: f.num("output.every", d0.every)?,
            profile,
            bump_width: f.num("initial.bump_width", d0.bump_width)?,
            spectral_r: f.num("spectral.r", d0.spectral_r)?,
            spectral_n: f.num("spectral.n", d0.spectral_n)?,
            sweep_axis: f.choice("sweep.axis", d0.sweep_axis, &[("k", SweepAxis::K), ("alpha", SweepAxis::Alpha)])?,
            sweep_values,
            audit_samples: f.num("audit.samples", d0.audit_samples)?,
        };
        if let Some(g) = f.str("physics.gamma") {
            let g: f64 =
                g.parse().map_err(|_| field_err("physics.gamma", format!("cannot parse `{g}` as a number")))?;
            let implied = cfg.collision_spec().gamma;
            if g != implied {
                return Err(field_err("physics.gamma", format!("{g} differs from the kernel's γ = {implied}")));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolved_beta(&self) -> f64 {
        self.beta.unwrap_or(2.0 * (1.0 - self.alpha))
    }

    pub fn resolved_k_max(&self) -> f64 {
        self.k_max.unwrap_or(self.k + 8.0)
    }

    pub fn collision_spec(&self) -> CollisionSpec {
        match self.collision {
            Collision::FokkerPlanck => CollisionSpec::fokker_planck(self.alpha),
            Collision::Scattering(family) => CollisionSpec::scattering(family, self.resolved_beta()),
        }
    }

    /// Cross-field checks; each failure names the offending key.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.alpha > 0.0 && self.alpha <= 2.0) {
            return Err(field_err("physics.alpha", format!("need 0 < α <= 2, got {}", self.alpha)));
        }
        let beta = self.resolved_beta();
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(field_err("physics.beta", format!("need β >= 0, got {beta}")));
        }
        if self.collision == Collision::FokkerPlanck && (beta - 2.0 * (1.0 - self.alpha)).abs() > 1e-12 {
            return Err(field_err(
                "physics.beta",
                format!("fokker_planck requires β = 2(1−α) = {}, got {beta}", 2.0 * (1.0 - self.alpha)),
            ));
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(field_err("physics.k", format!("need k > 0, got {}", self.k)));
        }
        if !(1..=2).contains(&self.d) {
            return Err(field_err("physics.d", format!("need d in {{1, 2}}, got {}", self.d)));
        }
        let gamma = self.collision_spec().gamma;
        if gamma >= self.d as f64 {
            return Err(field_err("physics.gamma", format!("need γ < d, got γ = {gamma}, d = {}", self.d)));
        }
        if let Some(km) = self.k_max {
            if km < self.k {
                return Err(field_err("grid.k_max", format!("must be at least k = {}, got {km}", self.k)));
            }
        }
        if self.nx < 2 {
            return Err(field_err("grid.nx", "need at least 2 points"));
        }
        if self.nv < 5 || self.nv.is_multiple_of(2) {
            return Err(field_err("grid.nv", format!("need an odd count >= 5, got {}", self.nv)));
        }
        if let Some(l) = self.length {
            if !(l > 0.0) {
                return Err(field_err("grid.length", format!("need a positive length, got {l}")));
            }
        }
        if !(self.dt > 0.0) {
            return Err(field_err("solver.dt", format!("need dt > 0, got {}", self.dt)));
        }
        if !(self.t_end >= self.dt) {
            return Err(field_err("solver.t_end", format!("need t_end >= dt, got {}", self.t_end)));
        }
        if self.every == 0 {
            return Err(field_err("output.every", "need at least 1"));
        }
        if let InitialProfile::HeavyTail { eps } = self.profile {
            if !(eps > 0.0) {
                return Err(field_err("initial.eps", format!("need ε > 0, got {eps}")));
            }
        }
        if !(self.bump_width > 0.0 && self.bump_width < 0.5) {
            return Err(field_err(
                "initial.bump_width",
                format!("need a fraction in (0, 0.5), got {}", self.bump_width),
            ));
        }
        if !(self.spectral_r > 1.0) {
            return Err(field_err("spectral.r", format!("need R > 1, got {}", self.spectral_r)));
        }
        if self.spectral_n < 5 || self.spectral_n.is_multiple_of(2) {
            return Err(field_err("spectral.n", format!("need an odd count >= 5, got {}", self.spectral_n)));
        }
        if self.sweep_values.is_empty() {
            return Err(field_err("sweep.values", "empty list"));
        }
        if self.sweep_axis == SweepAxis::Alpha && self.beta.is_some() && self.collision == Collision::FokkerPlanck {
            return Err(field_err(
                "physics.beta",
                "an alpha sweep with fokker_planck derives β per point; leave it unset",
            ));
        }
        if self.audit_samples == 0 {
            return Err(field_err("audit.samples", "need at least 1"));
        }
        Ok(())
    }

    /// Checks that the subcommand agrees with `experiment.mode` when one is given.
    pub fn expect_mode(&self, mode: Mode) -> Result<(), ConfigError> {
        match self.mode {
            Some(m) if m != mode => {
                Err(field_err("experiment.mode", format!("config says `{}`, command runs `{}`", m.name(), mode.name())))
            }
            _ => Ok(()),
        }
    }

    /// Fully resolved configuration in the input format.
    pub fn to_text(&self) -> String {
        let auto = |v: Option<f64>| v.map_or("auto".to_string(), |x| x.to_string());
        let mut s = String::from("[experiment]\n");
        if let Some(m) = self.mode {
            s += &format!("mode = {}\n", m.name());
        }
        s += &format!("seed = {}\n\n", self.seed);
        s += &format!(
            "[physics]\nalpha = {}\nbeta = {}\ngamma = {}\nk = {}\nd = {}\n\n",
            self.alpha,
            self.resolved_beta(),
            self.collision_spec().gamma,
            self.k,
            self.d
        );
        match self.collision {
            Collision::FokkerPlanck => s += "[collision]\nkind = fokker_planck\n\n",
            Collision::Scattering(fam) => {
                s += &format!("[collision]\nkind = scattering\nkernel = {}\n\n", name(KERNELS, fam))
            }
        }
        s += &format!(
            "[grid]\nnx = {}\nnv = {}\nk_max = {}\nlength = {}\n\n",
            self.nx,
            self.nv,
            self.resolved_k_max(),
            auto(self.length)
        );
        s += &format!(
            "[solver]\ndt = {}\nt_end = {}\nsplitting = {}\nscheme = {}\n\n",
            self.dt,
            self.t_end,
            name(SPLITTINGS, self.splitting),
            name(SCHEMES, self.scheme)
        );
        s += &format!("[output]\nevery = {}\n\n", self.every);
        match self.profile {
            InitialProfile::Equilibrium => s += "[initial]\nprofile = equilibrium\n",
            InitialProfile::HeavyTail { eps } => s += &format!("[initial]\nprofile = heavy_tail\neps = {eps}\n"),
        }
        s += &format!("bump_width = {}\n\n", self.bump_width);
        s += &format!("[spectral]\nr = {}\nn = {}\n\n", self.spectral_r, self.spectral_n);
        let values: Vec<String> = self.sweep_values.iter().map(f64::to_string).collect();
        let axis = if self.sweep_axis == SweepAxis::K { "k" } else { "alpha" };
        s += &format!("[sweep]\naxis = {axis}\nvalues = {}\n\n", values.join(", "));
        s += &format!("[audit]\nsamples = {}\n", self.audit_samples);
        s
    }
}
