//! The forward pipeline `C -> V0 -> gamma -> (u, v) -> current on Gamma1`,
//! its algebraic inverse `gamma -> C`, and synthetic measurements.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::elliptic::{
    flux_gamma1, newton_equilibrium, EllipticSolver, DEFAULT_NEWTON_TOL, DEFAULT_RTOL,
};
use crate::grid::{field_laplacian, integrate_trace, parse_csv, Grid, ScalarField, Segment, Trace};
use crate::{Error, Result};

/// Admissible doping range `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DopingBounds {
    pub min: f64,
    pub max: f64,
}

impl DopingBounds {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(Error::invalid(format!(
                "doping bounds need min < max, got [{min}, {max}]"
            )));
        }
        Ok(Self { min, max })
    }

    pub fn contains(&self, c: f64) -> bool {
        c >= self.min && c <= self.max
    }
}

impl Default for DopingBounds {
    fn default() -> Self {
        Self {
            min: -100.0,
            max: 100.0,
        }
    }
}

/// Doping profile in units of the intrinsic density, within its bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct DopingField {
    field: ScalarField,
    bounds: DopingBounds,
}

impl DopingField {
    pub fn new(field: ScalarField, bounds: DopingBounds) -> Result<Self> {
        if let Some(k) = field.values().iter().position(|&c| !bounds.contains(c)) {
            return Err(Error::invalid(format!(
                "doping {} at cell {k} outside [{}, {}]",
                field.values()[k],
                bounds.min,
                bounds.max
            )));
        }
        Ok(Self { field, bounds })
    }

    pub fn field(&self) -> &ScalarField {
        &self.field
    }

    pub fn bounds(&self) -> DopingBounds {
        self.bounds
    }

    pub fn grid(&self) -> Grid {
        self.field.grid()
    }
}

/// `gamma = exp(V0)`, strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaField(ScalarField);

impl GammaField {
    pub fn new(field: ScalarField) -> Result<Self> {
        if let Some(k) = field
            .values()
            .iter()
            .position(|&g| !(g > 0.0 && g.is_finite()))
        {
            return Err(Error::invalid(format!(
                "gamma must be positive, got {} at cell {k}",
                field.values()[k]
            )));
        }
        Ok(Self(field))
    }

    pub fn from_potential(potential: &ScalarField) -> Result<Self> {
        Self::new(potential.map(f64::exp))
    }

    pub fn field(&self) -> &ScalarField {
        &self.0
    }

    pub fn grid(&self) -> Grid {
        self.0.grid()
    }

    pub fn ln(&self) -> ScalarField {
        self.0.map(f64::ln)
    }
}

/// Applied voltage on Gamma0; the measurement contact is grounded.
#[derive(Debug, Clone, PartialEq)]
pub struct VoltageProfile(Trace);

impl VoltageProfile {
    pub fn new(trace: Trace) -> Result<Self> {
        if trace.segment() != Segment::Gamma0 {
            return Err(Error::invalid("voltage profiles live on Gamma0"));
        }
        Ok(Self(trace))
    }

    pub fn trace(&self) -> &Trace {
        &self.0
    }

    pub fn grid(&self) -> Grid {
        self.0.grid()
    }

    /// Linear combination `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &VoltageProfile, b: f64) -> VoltageProfile {
        let values = self
            .0
            .values()
            .iter()
            .zip(other.0.values())
            .map(|(x, y)| a * x + b * y)
            .collect();
        VoltageProfile(Trace::from_vec_unchecked(
            self.grid(),
            Segment::Gamma0,
            values,
        ))
    }
}

/// Contact of half width `half_width` around `center` on Gamma0 held at `amplitude`.
pub fn contact_voltage(
    center: f64,
    half_width: f64,
    amplitude: f64,
    grid: Grid,
) -> Result<VoltageProfile> {
    if !(half_width > 0.0 && half_width.is_finite() && center.is_finite() && amplitude.is_finite())
    {
        return Err(Error::invalid(format!(
            "contact needs a positive half width, got center={center}, half_width={half_width}"
        )));
    }
    let selected: Vec<bool> = (0..grid.n())
        .map(|i| (grid.center(i) - center).abs() <= half_width)
        .collect();
    if !selected.iter().any(|&s| s) {
        return Err(Error::invalid(format!(
            "contact at {center} with half width {half_width} covers no boundary face"
        )));
    }
    let values = selected
        .iter()
        .map(|&s| if s { amplitude } else { 0.0 })
        .collect();
    Ok(VoltageProfile(Trace::from_vec_unchecked(
        grid,
        Segment::Gamma0,
        values,
    )))
}

/// Electron and hole mobilities (dimensionless).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mobilities {
    pub mu_n: f64,
    pub mu_p: f64,
}

impl Mobilities {
    pub fn new(mu_n: f64, mu_p: f64) -> Result<Self> {
        if !(mu_n > 0.0 && mu_p > 0.0 && mu_n.is_finite() && mu_p.is_finite()) {
            return Err(Error::invalid(format!(
                "mobilities must be positive, got {mu_n}, {mu_p}"
            )));
        }
        Ok(Self { mu_n, mu_p })
    }
}

/// Kind of data recorded on the measurement contact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeasurementKind {
    /// Normal current density at every face of Gamma1.
    Pointwise,
    /// Total current through Gamma1.
    CurrentFlow,
}

impl MeasurementKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MeasurementKind::Pointwise => "pointwise",
            MeasurementKind::CurrentFlow => "current-flow",
        }
    }
}

impl std::str::FromStr for MeasurementKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pointwise" => Ok(MeasurementKind::Pointwise),
            "current-flow" => Ok(MeasurementKind::CurrentFlow),
            other => Err(Error::invalid(format!(
                "unknown measurement kind `{other}` (expected pointwise or current-flow)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Measurement {
    Pointwise(Trace),
    CurrentFlow(f64),
}

impl Measurement {
    pub fn kind(&self) -> MeasurementKind {
        match self {
            Measurement::Pointwise(_) => MeasurementKind::Pointwise,
            Measurement::CurrentFlow(_) => MeasurementKind::CurrentFlow,
        }
    }

    pub fn max_abs(&self) -> f64 {
        match self {
            Measurement::Pointwise(t) => t.max_abs(),
            Measurement::CurrentFlow(v) => v.abs(),
        }
    }

    /// Misfit `self - other` as a per-face vector (length 1 for current flow).
    pub fn misfit(&self, other: &Measurement) -> Result<Vec<f64>> {
        match (self, other) {
            (Measurement::Pointwise(a), Measurement::Pointwise(b)) if a.grid() == b.grid() => Ok(a
                .values()
                .iter()
                .zip(b.values())
                .map(|(x, y)| x - y)
                .collect()),
            (Measurement::CurrentFlow(a), Measurement::CurrentFlow(b)) => Ok(vec![a - b]),
            _ => Err(Error::invalid("measurements of different kinds or grids")),
        }
    }

    /// Squared data-space norm of a misfit vector: `h`-weighted for
    /// pointwise data, plain square for current flow.
    pub fn squared_norm(kind: MeasurementKind, grid: Grid, misfit: &[f64]) -> f64 {
        let s: f64 = misfit.iter().map(|r| r * r).sum();
        match kind {
            MeasurementKind::Pointwise => grid.h() * s,
            MeasurementKind::CurrentFlow => s,
        }
    }
}

/// One applied profile with its clean and perturbed outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementEntry {
    pub profile: VoltageProfile,
    pub clean: Measurement,
    pub noisy: Measurement,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    kind: MeasurementKind,
    entries: Vec<MeasurementEntry>,
    noise_level: f64,
    seed: u64,
}

impl MeasurementSet {
    pub fn new(
        kind: MeasurementKind,
        entries: Vec<MeasurementEntry>,
        noise_level: f64,
        seed: u64,
    ) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid("measurement set is empty"));
        }
        if !(noise_level >= 0.0 && noise_level.is_finite()) {
            return Err(Error::invalid(format!(
                "noise level must be nonnegative, got {noise_level}"
            )));
        }
        let grid = entries[0].profile.grid();
        for e in &entries {
            if e.clean.kind() != kind || e.noisy.kind() != kind {
                return Err(Error::invalid("measurement set mixes measurement kinds"));
            }
            if e.profile.grid() != grid {
                return Err(Error::invalid("measurement set mixes grids"));
            }
            if let (Measurement::Pointwise(a), Measurement::Pointwise(b)) = (&e.clean, &e.noisy) {
                if a.grid() != grid
                    || b.grid() != grid
                    || a.segment() != Segment::Gamma1
                    || b.segment() != Segment::Gamma1
                {
                    return Err(Error::invalid(
                        "pointwise data must be Gamma1 traces on the profile grid",
                    ));
                }
            }
        }
        Ok(Self {
            kind,
            entries,
            noise_level,
            seed,
        })
    }

    pub fn kind(&self) -> MeasurementKind {
        self.kind
    }

    pub fn entries(&self) -> &[MeasurementEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn noise_level(&self) -> f64 {
        self.noise_level
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn grid(&self) -> Grid {
        self.entries[0].profile.grid()
    }

    /// Data-space norm of the realized perturbation `noisy - clean`.
    pub fn noise_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| {
                let d = e.noisy.misfit(&e.clean).expect("set is homogeneous");
                Measurement::squared_norm(self.kind, self.grid(), &d)
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// Equilibrium `gamma = exp(V0)` for a doping profile.
pub fn equilibrium_gamma(doping: &DopingField, lambda_sq: f64) -> Result<GammaField> {
    let sol = newton_equilibrium(doping.field(), lambda_sq, DEFAULT_NEWTON_TOL)?;
    GammaField::from_potential(&sol.potential)
}

/// Factorized continuity operators for a fixed `gamma`; one instance serves
/// any number of applied voltages (and the adjoint solves of the inversion).
#[derive(Debug, Clone)]
pub struct ContinuityModel {
    electrons: EllipticSolver,
    holes: EllipticSolver,
    mobilities: Mobilities,
}

/// Solutions of the two linearized continuity equations.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityState {
    pub u: ScalarField,
    pub v: ScalarField,
}

impl ContinuityModel {
    pub fn new(gamma: &GammaField, mobilities: Mobilities) -> Result<Self> {
        let g = gamma.field();
        let electrons = EllipticSolver::new(g.map(|x| mobilities.mu_n * x))?;
        let holes = EllipticSolver::new(g.map(|x| mobilities.mu_p / x))?;
        Ok(Self {
            electrons,
            holes,
            mobilities,
        })
    }

    pub fn grid(&self) -> Grid {
        self.electrons.coefficient().grid()
    }

    pub fn mobilities(&self) -> Mobilities {
        self.mobilities
    }

    /// Coefficient `mu_n gamma` of the electron equation.
    pub fn electron_coefficient(&self) -> &ScalarField {
        self.electrons.coefficient()
    }

    /// Coefficient `mu_p / gamma` of the hole equation.
    pub fn hole_coefficient(&self) -> &ScalarField {
        self.holes.coefficient()
    }

    pub(crate) fn electron_solver(&self) -> &EllipticSolver {
        &self.electrons
    }

    pub(crate) fn hole_solver(&self) -> &EllipticSolver {
        &self.holes
    }

    /// `u = -U`, `v = +U` on Gamma0, both zero on Gamma1.
    pub fn solve(&self, profile: &VoltageProfile) -> Result<ContinuityState> {
        let grid = self.grid();
        if profile.grid() != grid {
            return Err(Error::invalid(
                "voltage profile and gamma live on different grids",
            ));
        }
        let plus = profile.trace();
        let minus = Trace::from_vec_unchecked(
            grid,
            Segment::Gamma0,
            plus.values().iter().map(|x| -x).collect(),
        );
        let ground = Trace::zeros(grid, Segment::Gamma1);
        let u = self.electrons.solve(&minus, &ground, DEFAULT_RTOL)?;
        let v = self.holes.solve(plus, &ground, DEFAULT_RTOL)?;
        Ok(ContinuityState { u, v })
    }

    /// Current density trace `mu_n gamma u_nu - mu_p gamma^-1 v_nu` on Gamma1.
    pub fn current_trace(&self, state: &ContinuityState) -> Result<Trace> {
        let ground = Trace::zeros(self.grid(), Segment::Gamma1);
        let jn = flux_gamma1(&state.u, self.electron_coefficient(), &ground)?;
        let jp = flux_gamma1(&state.v, self.hole_coefficient(), &ground)?;
        let values = jn
            .values()
            .iter()
            .zip(jp.values())
            .map(|(a, b)| a - b)
            .collect();
        Ok(Trace::from_vec_unchecked(
            self.grid(),
            Segment::Gamma1,
            values,
        ))
    }

    pub fn dn_pointwise(&self, profile: &VoltageProfile) -> Result<Trace> {
        self.current_trace(&self.solve(profile)?)
    }

    pub fn dn_current_flow(&self, profile: &VoltageProfile) -> Result<f64> {
        integrate_trace(&self.dn_pointwise(profile)?)
    }

    pub fn measure(&self, profile: &VoltageProfile, kind: MeasurementKind) -> Result<Measurement> {
        let trace = self.dn_pointwise(profile)?;
        Ok(match kind {
            MeasurementKind::Pointwise => Measurement::Pointwise(trace),
            MeasurementKind::CurrentFlow => Measurement::CurrentFlow(integrate_trace(&trace)?),
        })
    }
}

pub fn solve_continuity(
    gamma: &GammaField,
    profile: &VoltageProfile,
    mobilities: Mobilities,
) -> Result<ContinuityState> {
    ContinuityModel::new(gamma, mobilities)?.solve(profile)
}

pub fn dn_pointwise(
    gamma: &GammaField,
    profile: &VoltageProfile,
    mobilities: Mobilities,
) -> Result<Trace> {
    ContinuityModel::new(gamma, mobilities)?.dn_pointwise(profile)
}

pub fn dn_current_flow(
    gamma: &GammaField,
    profile: &VoltageProfile,
    mobilities: Mobilities,
) -> Result<f64> {
    ContinuityModel::new(gamma, mobilities)?.dn_current_flow(profile)
}

/// Doping recovered from `gamma`, with the number of cells clamped into bounds.
#[derive(Debug, Clone)]
pub struct RecoveredDoping {
    pub doping: DopingField,
    pub clamped: usize,
}

/// `C = gamma - 1/gamma - lambda^2 Lap(ln gamma)`, clamped into `bounds`.
pub fn doping_from_gamma(
    gamma: &GammaField,
    lambda_sq: f64,
    bounds: DopingBounds,
) -> Result<RecoveredDoping> {
    if !(lambda_sq > 0.0 && lambda_sq.is_finite()) {
        return Err(Error::invalid(format!(
            "lambda_sq must be positive, got {lambda_sq}"
        )));
    }
    let lap = field_laplacian(&gamma.ln());
    let mut clamped = 0;
    let values = gamma
        .field()
        .values()
        .iter()
        .zip(lap.values())
        .map(|(&g, &l)| {
            let c = g - 1.0 / g - lambda_sq * l;
            if bounds.contains(c) {
                c
            } else {
                clamped += 1;
                c.clamp(bounds.min, bounds.max)
            }
        })
        .collect();
    let doping = DopingField::new(ScalarField::new(gamma.grid(), values)?, bounds)?;
    Ok(RecoveredDoping { doping, clamped })
}

/// Runs the forward map for every profile and perturbs the outputs with
/// independent Gaussian noise of standard deviation `noise_level * max|clean|`.
pub fn synthesize_from_gamma(
    gamma: &GammaField,
    mobilities: Mobilities,
    profiles: &[VoltageProfile],
    kind: MeasurementKind,
    noise_level: f64,
    seed: u64,
) -> Result<MeasurementSet> {
    if !(noise_level >= 0.0 && noise_level.is_finite()) {
        return Err(Error::invalid(format!(
            "noise level must be nonnegative, got {noise_level}"
        )));
    }
    let model = ContinuityModel::new(gamma, mobilities)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::with_capacity(profiles.len());
    for profile in profiles {
        let clean = model.measure(profile, kind)?;
        let noisy = if noise_level == 0.0 {
            clean.clone()
        } else {
            let sd = noise_level * clean.max_abs();
            let normal = Normal::new(0.0, sd).map_err(|e| Error::invalid(e.to_string()))?;
            match &clean {
                Measurement::Pointwise(t) => {
                    let values = t
                        .values()
                        .iter()
                        .map(|v| v + normal.sample(&mut rng))
                        .collect();
                    Measurement::Pointwise(Trace::new(t.grid(), Segment::Gamma1, values)?)
                }
                Measurement::CurrentFlow(v) => {
                    Measurement::CurrentFlow(v + normal.sample(&mut rng))
                }
            }
        };
        entries.push(MeasurementEntry {
            profile: profile.clone(),
            clean,
            noisy,
        });
    }
    MeasurementSet::new(kind, entries, noise_level, seed)
}

/// [`synthesize_from_gamma`] behind the equilibrium solve of `doping`.
#[allow(clippy::too_many_arguments)]
pub fn synthesize_data(
    doping: &DopingField,
    lambda_sq: f64,
    mobilities: Mobilities,
    profiles: &[VoltageProfile],
    kind: MeasurementKind,
    noise_level: f64,
    seed: u64,
) -> Result<MeasurementSet> {
    let gamma = equilibrium_gamma(doping, lambda_sq)?;
    synthesize_from_gamma(&gamma, mobilities, profiles, kind, noise_level, seed)
}

pub const MANIFEST_FILE: &str = "manifest.txt";

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

impl MeasurementEntry {
    /// `x,clean,noisy` rows for pointwise data, a single
    /// `value_clean,value_noisy` row for current flow.
    pub fn to_csv(&self) -> String {
        match (&self.clean, &self.noisy) {
            (Measurement::Pointwise(c), Measurement::Pointwise(y)) => {
                let mut out = String::from("x,clean,noisy\n");
                for ((x, a), b) in c.abscissae().zip(c.values()).zip(y.values()) {
                    let _ = writeln!(out, "{x:e},{a:e},{b:e}");
                }
                out
            }
            (Measurement::CurrentFlow(a), Measurement::CurrentFlow(b)) => {
                format!("value_clean,value_noisy\n{a:e},{b:e}\n")
            }
            _ => unreachable!("entries are homogeneous"),
        }
    }

    fn parse_measurements(
        text: &str,
        kind: MeasurementKind,
        grid: Grid,
        ctx: &str,
    ) -> Result<(Measurement, Measurement)> {
        match kind {
            MeasurementKind::Pointwise => {
                let rows = parse_csv(text, &["x", "clean", "noisy"], ctx)?;
                if rows.len() != grid.n() {
                    return Err(Error::parse(
                        ctx,
                        format!("expected {} rows, got {}", grid.n(), rows.len()),
                    ));
                }
                crate::grid::check_abscissae(grid, rows.iter().map(|r| r[0]), ctx)?;
                let col = |c: usize| {
                    Trace::new(grid, Segment::Gamma1, rows.iter().map(|r| r[c]).collect())
                };
                Ok((
                    Measurement::Pointwise(col(1)?),
                    Measurement::Pointwise(col(2)?),
                ))
            }
            MeasurementKind::CurrentFlow => {
                let rows = parse_csv(text, &["value_clean", "value_noisy"], ctx)?;
                if rows.len() != 1 {
                    return Err(Error::parse(
                        ctx,
                        format!("expected one row, got {}", rows.len()),
                    ));
                }
                Ok((
                    Measurement::CurrentFlow(rows[0][0]),
                    Measurement::CurrentFlow(rows[0][1]),
                ))
            }
        }
    }
}

impl MeasurementSet {
    /// Writes `manifest.txt`, `profile_<j>.csv` and `measurement_<j>.csv` into
    /// `dir`; returns the manifest path.
    pub fn write_to_dir(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let mut manifest = String::new();
        let _ = writeln!(manifest, "kind = {}", self.kind.as_str());
        let _ = writeln!(manifest, "noise_level = {:e}", self.noise_level);
        let _ = writeln!(manifest, "seed = {}", self.seed);
        let _ = writeln!(manifest, "grid_n = {}", self.grid().n());
        for (j, e) in self.entries.iter().enumerate() {
            let profile = format!("profile_{j}.csv");
            let measurement = format!("measurement_{j}.csv");
            write(&dir.join(&profile), &e.profile.trace().to_csv())?;
            write(&dir.join(&measurement), &e.to_csv())?;
            let _ = writeln!(manifest, "entry = {profile} {measurement}");
        }
        let path = dir.join(MANIFEST_FILE);
        write(&path, &manifest)?;
        Ok(path)
    }

    /// Reads a set written by [`MeasurementSet::write_to_dir`]; entry files are
    /// resolved relative to the manifest.
    pub fn read_manifest(path: &Path) -> Result<Self> {
        let text = read(path)?;
        let ctx = path.display().to_string();
        let base = path.parent().unwrap_or(Path::new("."));
        let (mut kind, mut noise, mut seed, mut n) = (None, None, None, None);
        let mut files = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::parse(&ctx, format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| {
                Error::parse(&ctx, format!("line {}: bad {what} `{value}`", lineno + 1))
            };
            match key {
                "kind" => kind = Some(value.parse::<MeasurementKind>().map_err(|_| bad("kind"))?),
                "noise_level" => {
                    noise = Some(value.parse::<f64>().map_err(|_| bad("noise_level"))?)
                }
                "seed" => seed = Some(value.parse::<u64>().map_err(|_| bad("seed"))?),
                "grid_n" => n = Some(value.parse::<usize>().map_err(|_| bad("grid_n"))?),
                "entry" => {
                    let parts: Vec<&str> = value.split_whitespace().collect();
                    if parts.len() != 2 {
                        return Err(bad("entry"));
                    }
                    files.push((base.join(parts[0]), base.join(parts[1])));
                }
                other => {
                    return Err(Error::parse(
                        &ctx,
                        format!("line {}: unknown key `{other}`", lineno + 1),
                    ))
                }
            }
        }
        let missing = |k: &str| Error::parse(&ctx, format!("missing key `{k}`"));
        let kind = kind.ok_or_else(|| missing("kind"))?;
        let noise = noise.ok_or_else(|| missing("noise_level"))?;
        let seed = seed.ok_or_else(|| missing("seed"))?;
        let grid = Grid::new(n.ok_or_else(|| missing("grid_n"))?)
            .map_err(|e| Error::parse(&ctx, e.to_string()))?;
        let mut entries = Vec::with_capacity(files.len());
        for (profile_path, data_path) in files {
            let trace = Trace::from_csv(&read(&profile_path)?, Segment::Gamma0)
                .map_err(|e| Error::parse(profile_path.display().to_string(), e.to_string()))?;
            if trace.grid() != grid {
                return Err(Error::parse(
                    profile_path.display().to_string(),
                    "profile grid differs from manifest",
                ));
            }
            let (clean, noisy) = MeasurementEntry::parse_measurements(
                &read(&data_path)?,
                kind,
                grid,
                &data_path.display().to_string(),
            )?;
            entries.push(MeasurementEntry {
                profile: VoltageProfile::new(trace)?,
                clean,
                noisy,
            });
        }
        MeasurementSet::new(kind, entries, noise, seed)
            .map_err(|e| Error::parse(&ctx, e.to_string()))
    }
}
