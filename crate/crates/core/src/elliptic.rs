//! `div(a grad w) = f` on the unit square with Dirichlet data on both
//! contacts and zero flux through the insulating sides.
//!
//! The scheme is the cell-centered five-point stencil. Interior faces carry
//! the harmonic mean of the two adjacent cell coefficients, which keeps the
//! discrete flux continuous across coefficient jumps; a Dirichlet face uses
//! the ghost value `2g - w` and the adjacent cell coefficient.

use crate::device::built_in_potential;
use crate::grid::{Grid, ScalarField, Segment, Trace};
use crate::{Error, Result};

/// Default relative residual for linear solves.
pub const DEFAULT_RTOL: f64 = 1e-10;
/// Default max-norm tolerance of the equilibrium Newton iteration.
pub const DEFAULT_NEWTON_TOL: f64 = 1e-10;
/// Newton iteration cap.
pub const MAX_NEWTON_ITERATIONS: usize = 50;

const MAX_STEP_HALVINGS: usize = 30;
const MAX_REFINEMENT_STEPS: usize = 4;

/// Boundary value problem `div(a grad w) = f`.
#[derive(Debug, Clone)]
pub struct EllipticProblem {
    pub coefficient: ScalarField,
    pub dirichlet_bottom: Trace,
    pub dirichlet_top: Trace,
    pub source: ScalarField,
}

impl EllipticProblem {
    /// Homogeneous problem (`f = 0`).
    pub fn homogeneous(
        coefficient: ScalarField,
        dirichlet_bottom: Trace,
        dirichlet_top: Trace,
    ) -> Self {
        let source = ScalarField::zeros(coefficient.grid());
        Self {
            coefficient,
            dirichlet_bottom,
            dirichlet_top,
            source,
        }
    }

    pub fn grid(&self) -> Grid {
        self.coefficient.grid()
    }

    fn validate(&self) -> Result<()> {
        let grid = self.grid();
        if self.source.grid() != grid
            || self.dirichlet_bottom.grid() != grid
            || self.dirichlet_top.grid() != grid
        {
            return Err(Error::invalid(
                "elliptic problem data live on different grids",
            ));
        }
        if self.dirichlet_bottom.segment() != Segment::Gamma0 {
            return Err(Error::invalid("bottom Dirichlet data must live on Gamma0"));
        }
        if self.dirichlet_top.segment() != Segment::Gamma1 {
            return Err(Error::invalid("top Dirichlet data must live on Gamma1"));
        }
        check_positive(&self.coefficient)
    }
}

fn check_positive(a: &ScalarField) -> Result<()> {
    match a.values().iter().position(|&v| !(v > 0.0)) {
        Some(k) => Err(Error::invalid(format!(
            "coefficient must be positive, got {} at cell {k}",
            a.values()[k]
        ))),
        None => Ok(()),
    }
}

#[inline]
fn harmonic_mean(a: f64, b: f64) -> f64 {
    2.0 * a * b / (a + b)
}

/// Symmetric five-point matrix. Off-diagonal entries are stored as positive
/// couplings: `A[k][k+1] = -east[k]`, `A[k][k+n] = -north[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StencilMatrix {
    grid: Grid,
    pub diag: Vec<f64>,
    pub east: Vec<f64>,
    pub north: Vec<f64>,
}

impl StencilMatrix {
    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Entry `(row, col)` of the dense matrix.
    pub fn entry(&self, row: usize, col: usize) -> f64 {
        let n = self.grid.n();
        if row == col {
            return self.diag[row];
        }
        let (lo, hi) = if row < col { (row, col) } else { (col, row) };
        if hi == lo + 1 && hi % n != 0 {
            -self.east[lo]
        } else if hi == lo + n {
            -self.north[lo]
        } else {
            0.0
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.grid.n();
        let mut y: Vec<f64> = self.diag.iter().zip(x).map(|(d, v)| d * v).collect();
        for k in 0..x.len() {
            let (i, j) = self.grid.coords(k);
            if i + 1 < n {
                let c = self.east[k];
                y[k] -= c * x[k + 1];
                y[k + 1] -= c * x[k];
            }
            if j + 1 < n {
                let c = self.north[k];
                y[k] -= c * x[k + n];
                y[k + n] -= c * x[k];
            }
        }
        y
    }

    /// Adds `d` to the diagonal.
    pub fn add_diagonal(&mut self, d: &[f64]) {
        for (a, b) in self.diag.iter_mut().zip(d) {
            *a += b;
        }
    }

    pub fn scaled(mut self, s: f64) -> Self {
        for v in self
            .diag
            .iter_mut()
            .chain(&mut self.east)
            .chain(&mut self.north)
        {
            *v *= s;
        }
        self
    }
}

/// Assembled `A w = b`; `A` is SPD.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub matrix: StencilMatrix,
    pub rhs: Vec<f64>,
}

/// Matrix part of [`assemble`]: the negated discrete `div(a grad .)` with
/// homogeneous Dirichlet contacts.
pub fn assemble_operator(coefficient: &ScalarField) -> Result<StencilMatrix> {
    check_positive(coefficient)?;
    let grid = coefficient.grid();
    let n = grid.n();
    let inv_h2 = 1.0 / (grid.h() * grid.h());
    let a = coefficient.values();
    let mut diag = vec![0.0; grid.len()];
    let mut east = vec![0.0; grid.len()];
    let mut north = vec![0.0; grid.len()];
    for j in 0..n {
        for i in 0..n {
            let k = grid.index(i, j);
            if i + 1 < n {
                let c = harmonic_mean(a[k], a[k + 1]) * inv_h2;
                east[k] = c;
                diag[k] += c;
                diag[k + 1] += c;
            }
            if j + 1 < n {
                let c = harmonic_mean(a[k], a[k + n]) * inv_h2;
                north[k] = c;
                diag[k] += c;
                diag[k + n] += c;
            }
            if j == 0 || j + 1 == n {
                diag[k] += 2.0 * a[k] * inv_h2;
            }
        }
    }
    Ok(StencilMatrix {
        grid,
        diag,
        east,
        north,
    })
}

/// Right-hand side contribution of the Dirichlet faces.
fn dirichlet_rhs(coefficient: &ScalarField, bottom: &Trace, top: &Trace) -> Vec<f64> {
    let grid = coefficient.grid();
    let inv_h2 = 1.0 / (grid.h() * grid.h());
    let a = coefficient.values();
    let mut b = vec![0.0; grid.len()];
    for (trace, segment) in [(bottom, Segment::Gamma0), (top, Segment::Gamma1)] {
        for (k, g) in grid.segment_cells(segment).zip(trace.values()) {
            b[k] += 2.0 * a[k] * g * inv_h2;
        }
    }
    b
}

pub fn assemble(problem: &EllipticProblem) -> Result<LinearSystem> {
    problem.validate()?;
    let matrix = assemble_operator(&problem.coefficient)?;
    let mut rhs = dirichlet_rhs(
        &problem.coefficient,
        &problem.dirichlet_bottom,
        &problem.dirichlet_top,
    );
    for (b, f) in rhs.iter_mut().zip(problem.source.values()) {
        *b -= f;
    }
    Ok(LinearSystem { matrix, rhs })
}

/// Banded Cholesky factor `A = L L^T`, half bandwidth `n`.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    matrix: StencilMatrix,
    width: usize,
    band: Vec<f64>,
}

impl CholeskyFactor {
    pub fn new(matrix: &StencilMatrix) -> Result<Self> {
        let size = matrix.grid.len();
        let m = matrix.grid.n();
        let width = m + 1;
        let mut band = vec![0.0; size * width];
        // L(r, c) lives at band[r * width + c + m - r]
        for r in 0..size {
            let first = r.saturating_sub(m);
            for c in first..=r {
                let lo = first.max(c.saturating_sub(m));
                let mut s = matrix.entry(r, c);
                let row_r = r * width + m - r;
                let row_c = c * width + m - c;
                for k in lo..c {
                    s -= band[row_r + k] * band[row_c + k];
                }
                if c == r {
                    if !(s > 0.0) {
                        return Err(Error::invalid(format!(
                            "matrix is not positive definite (pivot {s:e} at row {r})"
                        )));
                    }
                    band[row_r + r] = s.sqrt();
                } else {
                    band[row_r + c] = s / band[row_c + c];
                }
            }
        }
        Ok(Self {
            matrix: matrix.clone(),
            width,
            band,
        })
    }

    pub fn matrix(&self) -> &StencilMatrix {
        &self.matrix
    }

    #[allow(clippy::needless_range_loop)]
    fn substitute(&self, rhs: &[f64]) -> Vec<f64> {
        let m = self.width - 1;
        let size = rhs.len();
        let at = |r: usize, c: usize| self.band[r * self.width + c + m - r];
        let mut y = rhs.to_vec();
        for r in 0..size {
            let mut s = y[r];
            for k in r.saturating_sub(m)..r {
                s -= at(r, k) * y[k];
            }
            y[r] = s / at(r, r);
        }
        for r in (0..size).rev() {
            let mut s = y[r];
            for k in r + 1..size.min(r + m + 1) {
                s -= at(k, r) * y[k];
            }
            y[r] = s / at(r, r);
        }
        y
    }

    /// Solves `A x = b` to `||A x - b|| <= rtol ||b||`, refining iteratively.
    pub fn solve(&self, rhs: &[f64], rtol: f64) -> Result<Vec<f64>> {
        let target = rtol * norm2(rhs);
        let mut x = self.substitute(rhs);
        let mut residual = f64::INFINITY;
        for _ in 0..=MAX_REFINEMENT_STEPS {
            let r: Vec<f64> = rhs
                .iter()
                .zip(self.matrix.mul_vec(&x))
                .map(|(b, ax)| b - ax)
                .collect();
            residual = norm2(&r);
            if residual <= target {
                return Ok(x);
            }
            for (xi, di) in x.iter_mut().zip(self.substitute(&r)) {
                *xi += di;
            }
        }
        Err(Error::LinearSolver {
            residual,
            target,
            steps: MAX_REFINEMENT_STEPS,
        })
    }
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn check_rtol(rtol: f64) -> Result<()> {
    if !(rtol > 0.0 && rtol <= 1e-6) {
        return Err(Error::invalid(format!(
            "rtol must lie in (0, 1e-6], got {rtol}"
        )));
    }
    Ok(())
}

/// Solves an assembled system; the result satisfies `||A w - b|| <= rtol ||b||`.
pub fn solve_spd(system: &LinearSystem, rtol: f64) -> Result<ScalarField> {
    check_rtol(rtol)?;
    let grid = system.matrix.grid();
    if system.rhs.iter().all(|&b| b == 0.0) {
        return Ok(ScalarField::zeros(grid));
    }
    let factor = CholeskyFactor::new(&system.matrix)?;
    let w = factor.solve(&system.rhs, rtol)?;
    Ok(ScalarField::from_vec_unchecked(grid, w))
}

/// Factorized operator `-div(a grad .)` for repeated solves with the same
/// coefficient and different Dirichlet data.
#[derive(Debug, Clone)]
pub struct EllipticSolver {
    coefficient: ScalarField,
    factor: CholeskyFactor,
}

impl EllipticSolver {
    pub fn new(coefficient: ScalarField) -> Result<Self> {
        let matrix = assemble_operator(&coefficient)?;
        let factor = CholeskyFactor::new(&matrix)?;
        Ok(Self {
            coefficient,
            factor,
        })
    }

    pub fn coefficient(&self) -> &ScalarField {
        &self.coefficient
    }

    /// Solves the homogeneous equation with the given contact data.
    pub fn solve(&self, bottom: &Trace, top: &Trace, rtol: f64) -> Result<ScalarField> {
        check_rtol(rtol)?;
        let grid = self.coefficient.grid();
        if bottom.segment() != Segment::Gamma0 || top.segment() != Segment::Gamma1 {
            return Err(Error::invalid("contact data on the wrong segments"));
        }
        let rhs = dirichlet_rhs(&self.coefficient, bottom, top);
        if rhs.iter().all(|&b| b == 0.0) {
            return Ok(ScalarField::zeros(grid));
        }
        let w = self.factor.solve(&rhs, rtol)?;
        Ok(ScalarField::from_vec_unchecked(grid, w))
    }
}

/// Outward conormal flux `a dw/dnu` on the faces of a contact, consistent with
/// the scheme: `a_P (g - w_P) 2 / h`.
pub fn conormal_flux(w: &ScalarField, a: &ScalarField, dirichlet: &Trace) -> Trace {
    let grid = w.grid();
    let segment = dirichlet.segment();
    let scale = 2.0 / grid.h();
    let values = grid
        .segment_cells(segment)
        .zip(dirichlet.values())
        .map(|(k, g)| a.values()[k] * (g - w.values()[k]) * scale)
        .collect();
    Trace::from_vec_unchecked(grid, segment, values)
}

/// Conormal flux through the measurement contact.
pub fn flux_gamma1(w: &ScalarField, a: &ScalarField, dirichlet_top: &Trace) -> Result<Trace> {
    if dirichlet_top.segment() != Segment::Gamma1 {
        return Err(Error::invalid(
            "flux_gamma1 needs the Gamma1 Dirichlet trace",
        ));
    }
    if w.grid() != a.grid() || w.grid() != dirichlet_top.grid() {
        return Err(Error::invalid("flux inputs live on different grids"));
    }
    Ok(conormal_flux(w, a, dirichlet_top))
}

/// Converged equilibrium potential and Newton diagnostics.
#[derive(Debug, Clone)]
pub struct EquilibriumSolution {
    pub potential: ScalarField,
    pub iterations: usize,
    /// Max-norm residual before every iteration and after the last one.
    pub residual_history: Vec<f64>,
}

impl EquilibriumSolution {
    pub fn residual(&self) -> f64 {
        *self
            .residual_history
            .last()
            .expect("history is never empty")
    }
}

/// Contact values of the equilibrium potential: the built-in potential of the
/// doping in the boundary-adjacent cells.
pub fn equilibrium_boundary_data(doping: &ScalarField) -> (Trace, Trace) {
    let to_vbi = |segment| {
        let t = doping.adjacent_trace(segment);
        let values = t.values().iter().map(|&c| built_in_potential(c)).collect();
        Trace::from_vec_unchecked(doping.grid(), segment, values)
    };
    (to_vbi(Segment::Gamma0), to_vbi(Segment::Gamma1))
}

/// Residual `lambda^2 Lap_h V - (e^V - e^-V - C)` of the discrete equilibrium problem.
pub fn equilibrium_residual(
    potential: &ScalarField,
    doping: &ScalarField,
    lambda_sq: f64,
) -> Vec<f64> {
    let unit = ScalarField::constant(potential.grid(), 1.0);
    let laplace = assemble_operator(&unit).expect("unit coefficient is positive");
    let (bottom, top) = equilibrium_boundary_data(doping);
    let bc = dirichlet_rhs(&unit, &bottom, &top);
    residual_with(
        &laplace,
        &bc,
        potential.values(),
        doping.values(),
        lambda_sq,
    )
}

fn residual_with(
    laplace: &StencilMatrix,
    bc: &[f64],
    v: &[f64],
    c: &[f64],
    lambda_sq: f64,
) -> Vec<f64> {
    laplace
        .mul_vec(v)
        .iter()
        .zip(bc)
        .zip(v.iter().zip(c))
        .map(|((av, b), (&vk, &ck))| lambda_sq * (b - av) - (2.0 * vk.sinh() - ck))
        .collect()
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Damped Newton solve of `lambda^2 Lap V = e^V - e^-V - C` with the built-in
/// potential on both contacts and zero flux on the insulating sides.
///
/// Starts from the local charge-neutral potential `asinh(C/2)` and halves the
/// step until the max-norm residual decreases.
pub fn newton_equilibrium(
    doping: &ScalarField,
    lambda_sq: f64,
    tol: f64,
) -> Result<EquilibriumSolution> {
    if !(lambda_sq.is_finite() && lambda_sq > 0.0) {
        return Err(Error::invalid(format!(
            "lambda_sq must be positive, got {lambda_sq}"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid(format!(
            "newton tolerance must be positive, got {tol}"
        )));
    }
    let grid = doping.grid();
    let unit = ScalarField::constant(grid, 1.0);
    let laplace = assemble_operator(&unit)?;
    let (bottom, top) = equilibrium_boundary_data(doping);
    let bc = dirichlet_rhs(&unit, &bottom, &top);
    let c = doping.values();

    let mut v: Vec<f64> = c.iter().map(|&ck| built_in_potential(ck)).collect();
    let mut residual = residual_with(&laplace, &bc, &v, c, lambda_sq);
    let mut norm = max_norm(&residual);
    let mut history = vec![norm];

    for iteration in 0..MAX_NEWTON_ITERATIONS {
        if norm <= tol {
            return Ok(EquilibriumSolution {
                potential: ScalarField::from_vec_unchecked(grid, v),
                iterations: iteration,
                residual_history: history,
            });
        }
        // Jacobian of -F is lambda^2 A + diag(e^V + e^-V): SPD.
        let mut jacobian = laplace.clone().scaled(lambda_sq);
        let cosh: Vec<f64> = v.iter().map(|x| 2.0 * x.cosh()).collect();
        jacobian.add_diagonal(&cosh);
        let step = CholeskyFactor::new(&jacobian)?.solve(&residual, 1e-12)?;

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_STEP_HALVINGS {
            let trial: Vec<f64> = v.iter().zip(&step).map(|(x, d)| x + t * d).collect();
            let r = residual_with(&laplace, &bc, &trial, c, lambda_sq);
            let trial_norm = max_norm(&r);
            if trial_norm < norm {
                accepted = Some((trial, r, trial_norm));
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some((trial, r, trial_norm)) => {
                v = trial;
                residual = r;
                norm = trial_norm;
                history.push(norm);
            }
            None => {
                return Err(Error::NewtonDivergence {
                    iterations: iteration + 1,
                    residual: norm,
                });
            }
        }
    }
    if norm <= tol {
        return Ok(EquilibriumSolution {
            potential: ScalarField::from_vec_unchecked(grid, v),
            iterations: MAX_NEWTON_ITERATIONS,
            residual_history: history,
        });
    }
    Err(Error::NewtonDivergence {
        iterations: MAX_NEWTON_ITERATIONS,
        residual: norm,
    })
}
