//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use dopinv_core::device::built_in_potential;
use dopinv_core::forward::{DopingBounds, MeasurementKind, Mobilities};
use dopinv_core::inverse::{Axis, InversionConfig, Shape};

use crate::error::{CliError, Result};

/// Every accepted key; `voltage` may repeat.
pub const KEYS: &[&str] = &[
    "grid_n",
    "lambda_sq",
    "mu_n",
    "mu_p",
    "doping_min",
    "doping_max",
    "phantom",
    "doping_p",
    "doping_n",
    "truth_gamma",
    "voltage",
    "kind",
    "noise_level",
    "seed",
    "data",
    "output",
    "step_size",
    "max_iters",
    "discrepancy_tau",
    "grad_tol",
    "eps_smooth",
    "gamma_p",
    "gamma_n",
    "init",
    "reinit_every",
    "record_every",
    "phi_jitter",
];

#[derive(Debug, Clone, PartialEq)]
pub enum Phantom {
    Uniform(f64),
    Shaped(Shape),
}

/// How synthetic data obtain `gamma` from the phantom.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruthGamma {
    /// Equilibrium solve of the two-level doping.
    Equilibrium,
    /// The smoothed two-level field the inversion itself parametrizes.
    LevelSet,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactSpec {
    pub center: f64,
    pub half_width: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid_n: usize,
    pub lambda_sq: f64,
    pub mobilities: Mobilities,
    pub bounds: DopingBounds,
    pub phantom: Option<Phantom>,
    pub doping_p: f64,
    pub doping_n: f64,
    pub truth_gamma: TruthGamma,
    pub voltages: Vec<ContactSpec>,
    pub noise_level: f64,
    pub seed: u64,
    pub data: Option<PathBuf>,
    pub output: PathBuf,
    pub inversion: InversionConfig,
    pub eps_smooth: f64,
    pub gamma_p: f64,
    pub gamma_n: f64,
    pub init: Shape,
    pub phi_jitter: f64,
}

struct Entries {
    values: BTreeMap<&'static str, Vec<String>>,
}

impl Entries {
    fn parse(text: &str) -> Result<Self> {
        let mut values: BTreeMap<&'static str, Vec<String>> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::config(
                    line,
                    format!("line {} is not `key = value`", lineno + 1),
                ));
            };
            let key = key.trim();
            let Some(&known) = KEYS.iter().find(|k| **k == key) else {
                return Err(CliError::config(key, "unknown key"));
            };
            let slot = values.entry(known).or_default();
            if !slot.is_empty() && known != "voltage" {
                return Err(CliError::config(key, "given more than once"));
            }
            slot.push(value.trim().to_string());
        }
        Ok(Self { values })
    }

    fn raw(&self, key: &'static str) -> Option<&str> {
        self.values
            .get(key)
            .and_then(|v| v.first())
            .map(String::as_str)
    }

    fn get<T: FromStr>(&self, key: &'static str) -> Result<Option<T>> {
        self.raw(key)
            .map(|s| {
                s.parse::<T>()
                    .map_err(|_| CliError::config(key, format!("cannot parse `{s}`")))
            })
            .transpose()
    }

    fn or<T: FromStr>(&self, key: &'static str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }
}

fn finite(key: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::config(key, format!("{v} is not finite")))
    }
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::config(key, format!("must be positive, got {v}")))
    }
}

fn numbers(key: &str, words: &[&str], count: usize) -> Result<Vec<f64>> {
    if words.len() != count {
        return Err(CliError::config(
            key,
            format!("expected {count} numbers, got {}", words.len()),
        ));
    }
    words
        .iter()
        .map(|w| {
            w.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::config(key, format!("cannot parse `{w}`")))
        })
        .collect()
}

/// `circle cx cy r`, `halfplane <x|y> offset` or `lshape x0 y0 x1 y1 notch_x notch_y`.
pub fn parse_shape(key: &str, spec: &str) -> Result<Shape> {
    let words: Vec<&str> = spec.split_whitespace().collect();
    let shape = match words.first().copied() {
        Some("circle") => {
            let v = numbers(key, &words[1..], 3)?;
            Shape::Circle {
                center: (v[0], v[1]),
                radius: v[2],
            }
        }
        Some("halfplane") => {
            let axis = match words.get(1).copied() {
                Some("x") => Axis::X,
                Some("y") => Axis::Y,
                other => {
                    return Err(CliError::config(
                        key,
                        format!("half-plane axis must be x or y, got {other:?}"),
                    ))
                }
            };
            let v = numbers(key, &words[2..], 1)?;
            Shape::HalfPlane { axis, offset: v[0] }
        }
        Some("lshape") => {
            let v = numbers(key, &words[1..], 6)?;
            if !(v[0] < v[4] && v[4] < v[2] && v[1] < v[5] && v[5] < v[3]) {
                return Err(CliError::config(
                    key,
                    "need x0 < notch_x < x1 and y0 < notch_y < y1",
                ));
            }
            Shape::l_shape(v[0], v[1], v[2], v[3], v[4], v[5])
        }
        _ => return Err(CliError::config(key, format!("unknown shape `{spec}`"))),
    };
    let inside = |x: f64| (0.0..=1.0).contains(&x);
    let ok = match &shape {
        Shape::Circle { center, radius } => inside(center.0) && inside(center.1) && *radius > 0.0,
        Shape::HalfPlane { offset, .. } => *offset > 0.0 && *offset < 1.0,
        Shape::Polygon(v) => v.iter().all(|p| inside(p.0) && inside(p.1)),
    };
    if !ok {
        return Err(CliError::config(
            key,
            format!("shape `{spec}` is degenerate or leaves the unit square"),
        ));
    }
    Ok(shape)
}

fn parse_phantom(spec: &str) -> Result<Phantom> {
    let words: Vec<&str> = spec.split_whitespace().collect();
    if words.first() == Some(&"uniform") {
        let v = numbers("phantom", &words[1..], 1)?;
        return Ok(Phantom::Uniform(v[0]));
    }
    parse_shape("phantom", spec).map(Phantom::Shaped)
}

fn parse_contact(spec: &str) -> Result<ContactSpec> {
    let v = numbers("voltage", &spec.split_whitespace().collect::<Vec<_>>(), 3)?;
    if !(0.0..=1.0).contains(&v[0]) {
        return Err(CliError::config(
            "voltage",
            format!("contact center {} is outside [0, 1]", v[0]),
        ));
    }
    positive("voltage", v[1])?;
    Ok(ContactSpec {
        center: v[0],
        half_width: v[1],
        amplitude: v[2],
    })
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config("config", format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let e = Entries::parse(text)?;
        let grid_n: usize = e
            .get("grid_n")?
            .ok_or_else(|| CliError::config("grid_n", "missing"))?;
        if grid_n < dopinv_core::grid::MIN_CELLS {
            return Err(CliError::config(
                "grid_n",
                format!("must be at least {}", dopinv_core::grid::MIN_CELLS),
            ));
        }
        let lambda_sq = positive("lambda_sq", e.or("lambda_sq", 1e-3)?)?;
        let mu_n = positive("mu_n", e.or("mu_n", 1.0)?)?;
        let mu_p = positive("mu_p", e.or("mu_p", 0.3)?)?;
        let mobilities =
            Mobilities::new(mu_n, mu_p).map_err(|err| CliError::config("mu_n", err.to_string()))?;
        let doping_min = finite("doping_min", e.or("doping_min", -100.0)?)?;
        let doping_max = finite("doping_max", e.or("doping_max", 100.0)?)?;
        let bounds = DopingBounds::new(doping_min, doping_max)
            .map_err(|err| CliError::config("doping_max", err.to_string()))?;
        let phantom = e.raw("phantom").map(parse_phantom).transpose()?;
        let doping_p = finite("doping_p", e.or("doping_p", -5.0)?)?;
        let doping_n = finite("doping_n", e.or("doping_n", 5.0)?)?;
        for (key, v) in [("doping_p", doping_p), ("doping_n", doping_n)] {
            if !bounds.contains(v) {
                return Err(CliError::config(
                    key,
                    format!("{v} is outside [{doping_min}, {doping_max}]"),
                ));
            }
        }
        if let Some(Phantom::Uniform(level)) = phantom {
            if !bounds.contains(level) {
                return Err(CliError::config(
                    "phantom",
                    format!("{level} is outside [{doping_min}, {doping_max}]"),
                ));
            }
        }
        let truth_gamma = match e.raw("truth_gamma").unwrap_or("equilibrium") {
            "equilibrium" => TruthGamma::Equilibrium,
            "levelset" => TruthGamma::LevelSet,
            other => {
                return Err(CliError::config(
                    "truth_gamma",
                    format!("expected equilibrium or levelset, got `{other}`"),
                ))
            }
        };
        if truth_gamma == TruthGamma::LevelSet && matches!(phantom, Some(Phantom::Uniform(_))) {
            return Err(CliError::config(
                "truth_gamma",
                "levelset needs a shaped phantom",
            ));
        }
        let voltages = match e.values.get("voltage") {
            Some(specs) => specs
                .iter()
                .map(|s| parse_contact(s))
                .collect::<Result<Vec<_>>>()?,
            None => vec![ContactSpec {
                center: 0.5,
                half_width: 0.25,
                amplitude: 1.0,
            }],
        };
        let kind = e
            .raw("kind")
            .map(|s| {
                s.parse::<MeasurementKind>()
                    .map_err(|_| CliError::config("kind", format!("unknown kind `{s}`")))
            })
            .transpose()?
            .unwrap_or(MeasurementKind::Pointwise);
        let noise_level: f64 = e.or("noise_level", 0.0)?;
        if !(noise_level >= 0.0 && noise_level.is_finite()) {
            return Err(CliError::config(
                "noise_level",
                format!("must be nonnegative, got {noise_level}"),
            ));
        }
        let seed = e.or("seed", 0u64)?;
        let data = e.raw("data").map(PathBuf::from);
        let output = PathBuf::from(e.raw("output").unwrap_or("out"));

        let step_size: f64 = e.or("step_size", 0.5)?;
        if !(step_size >= 0.0 && step_size.is_finite()) {
            return Err(CliError::config(
                "step_size",
                format!("must be nonnegative, got {step_size}"),
            ));
        }
        let max_iters = e.or("max_iters", 200usize)?;
        if max_iters == 0 {
            return Err(CliError::config("max_iters", "must be at least 1"));
        }
        let discrepancy_tau: f64 = e.or("discrepancy_tau", 1.5)?;
        if !(discrepancy_tau >= 1.0 && discrepancy_tau.is_finite()) {
            return Err(CliError::config(
                "discrepancy_tau",
                format!("must be at least 1, got {discrepancy_tau}"),
            ));
        }
        let grad_tol: f64 = e.or("grad_tol", 1e-9)?;
        if !(grad_tol >= 0.0 && grad_tol.is_finite()) {
            return Err(CliError::config(
                "grad_tol",
                format!("must be nonnegative, got {grad_tol}"),
            ));
        }
        let reinit_every = e.or("reinit_every", 20usize)?;
        let record_every = e.or("record_every", 1usize)?;
        for (key, v) in [
            ("reinit_every", reinit_every),
            ("record_every", record_every),
        ] {
            if v == 0 {
                return Err(CliError::config(key, "must be at least 1"));
            }
        }
        let inversion = InversionConfig {
            step_size,
            max_iters,
            discrepancy_tau,
            grad_tol,
            kind,
            record_every,
            reinit_every,
            ..InversionConfig::default()
        };
        let eps_smooth = positive("eps_smooth", e.or("eps_smooth", 2.0)?)?;
        let gamma_p = positive(
            "gamma_p",
            e.or("gamma_p", built_in_potential(doping_p).exp())?,
        )?;
        let gamma_n = positive(
            "gamma_n",
            e.or("gamma_n", built_in_potential(doping_n).exp())?,
        )?;
        if gamma_p >= gamma_n {
            return Err(CliError::config(
                "gamma_n",
                format!("must exceed gamma_p ({gamma_p}), got {gamma_n}"),
            ));
        }
        let init = parse_shape("init", e.raw("init").unwrap_or("circle 0.5 0.5 0.25"))?;
        let phi_jitter: f64 = e.or("phi_jitter", 0.0)?;
        if !(phi_jitter >= 0.0 && phi_jitter.is_finite()) {
            return Err(CliError::config(
                "phi_jitter",
                format!("must be nonnegative, got {phi_jitter}"),
            ));
        }

        Ok(Self {
            grid_n,
            lambda_sq,
            mobilities,
            bounds,
            phantom,
            doping_p,
            doping_n,
            truth_gamma,
            voltages,
            noise_level,
            seed,
            data,
            output,
            inversion,
            eps_smooth,
            gamma_p,
            gamma_n,
            init,
            phi_jitter,
        })
    }
}
