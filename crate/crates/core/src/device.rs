//! Physical constants, nondimensionalization and closed-form carrier physics.
//!
//! Densities are measured in units of the intrinsic density `n_i` and
//! potentials in units of the thermal voltage `U_T`, so `n_i = 1` in every
//! formula below.

use crate::{Error, Result};

/// Vacuum permittivity in A·s·V⁻¹·cm⁻¹.
pub const VACUUM_PERMITTIVITY: f64 = 8.85e-14;
/// Relative permittivity of silicon.
pub const SILICON_RELATIVE_PERMITTIVITY: f64 = 11.9;
/// Elementary charge in A·s.
pub const ELEMENTARY_CHARGE: f64 = 1.6e-19;

/// Material constants in physical units (cm, s, V, A).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceParams {
    pub permittivity: f64,
    pub elementary_charge: f64,
    pub thermal_voltage: f64,
    pub intrinsic_density: f64,
    pub mobility_n: f64,
    pub mobility_p: f64,
    pub auger_cn: f64,
    pub auger_cp: f64,
    pub srh_tau_n: f64,
    pub srh_tau_p: f64,
}

impl DeviceParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("permittivity", self.permittivity),
            ("elementary_charge", self.elementary_charge),
            ("thermal_voltage", self.thermal_voltage),
            ("intrinsic_density", self.intrinsic_density),
            ("mobility_n", self.mobility_n),
            ("mobility_p", self.mobility_p),
            ("auger_cn", self.auger_cn),
            ("auger_cp", self.auger_cp),
            ("srh_tau_n", self.srh_tau_n),
            ("srh_tau_p", self.srh_tau_p),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::invalid(format!(
                    "{name} must be positive, got {value}"
                )));
            }
        }
        Ok(())
    }
}

impl Default for DeviceParams {
    fn default() -> Self {
        silicon_defaults()
    }
}

/// Silicon at room temperature. `n_i = 1e10 cm⁻³` and `U_T = 0.0259 V`.
pub fn silicon_defaults() -> DeviceParams {
    DeviceParams {
        permittivity: SILICON_RELATIVE_PERMITTIVITY * VACUUM_PERMITTIVITY,
        elementary_charge: ELEMENTARY_CHARGE,
        thermal_voltage: 0.0259,
        intrinsic_density: 1.0e10,
        mobility_n: 1500.0,
        mobility_p: 450.0,
        auger_cn: 2.8e-31,
        auger_cp: 9.9e-32,
        srh_tau_n: 1.0e-6,
        srh_tau_p: 1.0e-5,
    }
}

/// Dimensionless model parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledParams {
    /// Squared scaled Debye length multiplying the Laplacian in the Poisson equation.
    pub lambda_sq: f64,
    pub mu_n: f64,
    pub mu_p: f64,
}

impl ScaledParams {
    pub fn new(lambda_sq: f64, mu_n: f64, mu_p: f64) -> Result<Self> {
        for (name, v) in [("lambda_sq", lambda_sq), ("mu_n", mu_n), ("mu_p", mu_p)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self {
            lambda_sq,
            mu_n,
            mu_p,
        })
    }
}

/// Nondimensionalizes `params` for a device of side length `length` (cm).
///
/// `lambda_sq = eps * U_T / (q * n_i * L^2)`; mobilities are normalized by the
/// electron mobility, so `mu_n = 1`.
pub fn scale(params: &DeviceParams, length: f64) -> Result<ScaledParams> {
    if !(length.is_finite() && length > 0.0) {
        return Err(Error::invalid(format!(
            "device length must be positive, got {length}"
        )));
    }
    params.validate()?;
    let lambda_sq = params.permittivity * params.thermal_voltage
        / (params.elementary_charge * params.intrinsic_density * length * length);
    ScaledParams::new(lambda_sq, 1.0, params.mobility_p / params.mobility_n)
}

/// Device length (cm) at which `scale` yields the requested `lambda_sq`.
pub fn length_for_lambda_sq(params: &DeviceParams, lambda_sq: f64) -> Result<f64> {
    if !(lambda_sq.is_finite() && lambda_sq > 0.0) {
        return Err(Error::invalid(format!(
            "lambda_sq must be positive, got {lambda_sq}"
        )));
    }
    params.validate()?;
    Ok((params.permittivity * params.thermal_voltage
        / (params.elementary_charge * params.intrinsic_density * lambda_sq))
        .sqrt())
}

/// Slotboom variables to carrier densities: `n = e^V u`, `p = e^-V v`.
pub fn slotboom_to_densities(potential: f64, u: f64, v: f64) -> Result<(f64, f64)> {
    if u < 0.0 || v < 0.0 || u.is_nan() || v.is_nan() {
        return Err(Error::invalid(format!(
            "slotboom variables must be nonnegative, got u={u}, v={v}"
        )));
    }
    Ok((potential.exp() * u, (-potential).exp() * v))
}

/// Inverse of [`slotboom_to_densities`].
pub fn densities_to_slotboom(potential: f64, n: f64, p: f64) -> (f64, f64) {
    (n * (-potential).exp(), p * potential.exp())
}

/// Ohmic-contact carrier densities for doping `c`: charge neutrality
/// `n - p = c` together with mass action `n p = 1`.
pub fn equilibrium_boundary_densities(c: f64) -> (f64, f64) {
    let root = c.hypot(2.0);
    // Subtracting |c| from the root cancels catastrophically; go through the product instead.
    if c >= 0.0 {
        let n = 0.5 * (c + root);
        (n, 1.0 / n)
    } else {
        let p = 0.5 * (-c + root);
        (1.0 / p, p)
    }
}

/// Built-in potential `ln n_D = asinh(c / 2)`.
pub fn built_in_potential(c: f64) -> f64 {
    (0.5 * c).asinh()
}

/// Shockley-Read-Hall rate `(n p - 1) / (tau_n (n + 1) + tau_p (p + 1))`.
pub fn recombination_srh(n: f64, p: f64, params: &DeviceParams) -> Result<f64> {
    check_densities(n, p)?;
    let denom = params.srh_tau_n * (n + 1.0) + params.srh_tau_p * (p + 1.0);
    Ok((n * p - 1.0) / denom)
}

/// Auger rate `(C_n n + C_p p)(n p - 1)`.
pub fn recombination_auger(n: f64, p: f64, params: &DeviceParams) -> Result<f64> {
    check_densities(n, p)?;
    Ok((params.auger_cn * n + params.auger_cp * p) * (n * p - 1.0))
}

fn check_densities(n: f64, p: f64) -> Result<()> {
    if n < 0.0 || p < 0.0 || n.is_nan() || p.is_nan() {
        return Err(Error::invalid(format!(
            "densities must be nonnegative, got n={n}, p={p}"
        )));
    }
    Ok(())
}
