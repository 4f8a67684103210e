//! Uniform cell-centered discretization of the unit square.
//!
//! Cell `(i, j)` has center `((i + 1/2) h, (j + 1/2) h)`; fields are stored
//! row-major with `j` (the y row) outermost. The bottom side `y = 0` is the
//! contact `Gamma0` where voltages are applied, the top side `y = 1` is the
//! contact `Gamma1` where currents are measured, and the left/right sides are
//! insulating (homogeneous Neumann).

use std::fmt::Write as _;

use crate::{Error, Result};

/// Smallest admissible number of cells per side. The one-sided second
/// derivative used on the contact rows needs four cells.
pub const MIN_CELLS: usize = 4;

/// The four sides of the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Bottom,
    Top,
    Left,
    Right,
}

/// Boundary condition class of a side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryKind {
    /// Contact where the voltage is applied (`y = 0`).
    Gamma0,
    /// Contact where the current is measured (`y = 1`).
    Gamma1,
    /// Insulating side.
    Neumann,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Bottom, Side::Top, Side::Left, Side::Right];

    pub fn kind(self) -> BoundaryKind {
        match self {
            Side::Bottom => BoundaryKind::Gamma0,
            Side::Top => BoundaryKind::Gamma1,
            Side::Left | Side::Right => BoundaryKind::Neumann,
        }
    }
}

/// Dirichlet segment carrying a [`Trace`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Segment {
    Gamma0,
    Gamma1,
}

impl Segment {
    pub fn side(self) -> Side {
        match self {
            Segment::Gamma0 => Side::Bottom,
            Segment::Gamma1 => Side::Top,
        }
    }
}

/// `n x n` cell-centered grid on the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Grid {
    n: usize,
}

impl Grid {
    pub fn new(n: usize) -> Result<Self> {
        if n < MIN_CELLS {
            return Err(Error::invalid(format!(
                "grid needs at least {MIN_CELLS} cells per side, got {n}"
            )));
        }
        Ok(Self { n })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n && j < self.n);
        j * self.n + i
    }

    /// `(i, j)` of a flat index.
    #[inline]
    pub fn coords(&self, k: usize) -> (usize, usize) {
        (k % self.n, k / self.n)
    }

    /// Cell-center coordinate along either axis.
    #[inline]
    pub fn center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.h()
    }

    pub fn cell_center(&self, i: usize, j: usize) -> (f64, f64) {
        (self.center(i), self.center(j))
    }

    /// True for cells with no face on the boundary.
    pub fn is_interior(&self, i: usize, j: usize) -> bool {
        i > 0 && j > 0 && i + 1 < self.n && j + 1 < self.n
    }

    /// Boundary sides touched by cell `(i, j)`.
    pub fn sides_of(&self, i: usize, j: usize) -> Vec<Side> {
        let mut sides = Vec::new();
        if j == 0 {
            sides.push(Side::Bottom);
        }
        if j + 1 == self.n {
            sides.push(Side::Top);
        }
        if i == 0 {
            sides.push(Side::Left);
        }
        if i + 1 == self.n {
            sides.push(Side::Right);
        }
        sides
    }

    /// Flat indices of the cells adjacent to a Dirichlet segment, ordered by x.
    pub fn segment_cells(&self, segment: Segment) -> impl Iterator<Item = usize> + '_ {
        let j = match segment {
            Segment::Gamma0 => 0,
            Segment::Gamma1 => self.n - 1,
        };
        (0..self.n).map(move |i| self.index(i, j))
    }
}

/// Cell-centered real field.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(format!(
                "field has {} values, grid needs {}",
                values.len(),
                grid.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite field value at cell {k}"
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.len()],
        }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    /// Samples `f(x, y)` at the cell centers.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.n() {
            for i in 0..grid.n() {
                let (x, y) = grid.cell_center(i, j);
                values.push(f(x, y));
            }
        }
        Self { grid, values }
    }

    pub(crate) fn from_vec_unchecked(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Trace of the cells adjacent to `segment` (not a face extrapolation).
    pub fn adjacent_trace(&self, segment: Segment) -> Trace {
        let values = self
            .grid
            .segment_cells(segment)
            .map(|k| self.values[k])
            .collect();
        Trace {
            grid: self.grid,
            segment,
            values,
        }
    }

    /// Text format: `n=<n>` followed by `n` rows of `n` values, bottom row first.
    pub fn to_text(&self) -> String {
        let n = self.grid.n();
        let mut out = String::with_capacity(self.values.len() * 24);
        let _ = writeln!(out, "n={n}");
        for row in self.values.chunks(n) {
            let mut first = true;
            for v in row {
                if !first {
                    out.push(' ');
                }
                first = false;
                let _ = write!(out, "{v:e}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let ctx = "scalar field";
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::parse(ctx, "empty input"))?;
        let n: usize = header
            .trim()
            .strip_prefix("n=")
            .ok_or_else(|| Error::parse(ctx, format!("expected `n=<n>` header, got `{header}`")))?
            .trim()
            .parse()
            .map_err(|_| Error::parse(ctx, format!("bad grid size in `{header}`")))?;
        let grid = Grid::new(n).map_err(|e| Error::parse(ctx, e.to_string()))?;
        let mut values = Vec::with_capacity(grid.len());
        for (row, line) in lines.by_ref().take(n).enumerate() {
            let before = values.len();
            for tok in line.split_whitespace() {
                let v: f64 = tok
                    .parse()
                    .map_err(|_| Error::parse(ctx, format!("row {row}: bad value `{tok}`")))?;
                values.push(v);
            }
            if values.len() - before != n {
                return Err(Error::parse(
                    ctx,
                    format!(
                        "row {row}: expected {n} values, got {}",
                        values.len() - before
                    ),
                ));
            }
        }
        if values.len() != grid.len() {
            return Err(Error::parse(ctx, format!("expected {n} rows")));
        }
        if lines.next().is_some() {
            return Err(Error::parse(ctx, "trailing data after last row"));
        }
        ScalarField::new(grid, values).map_err(|e| Error::parse(ctx, e.to_string()))
    }
}

/// One value per boundary face of a Dirichlet segment, ordered by x.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    grid: Grid,
    segment: Segment,
    values: Vec<f64>,
}

impl Trace {
    pub fn new(grid: Grid, segment: Segment, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::invalid(format!(
                "trace has {} values, grid needs {}",
                values.len(),
                grid.n()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite trace value"));
        }
        Ok(Self {
            grid,
            segment,
            values,
        })
    }

    pub fn constant(grid: Grid, segment: Segment, value: f64) -> Self {
        Self {
            grid,
            segment,
            values: vec![value; grid.n()],
        }
    }

    pub fn zeros(grid: Grid, segment: Segment) -> Self {
        Self::constant(grid, segment, 0.0)
    }

    pub fn from_fn(grid: Grid, segment: Segment, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.n()).map(|i| f(grid.center(i))).collect();
        Self {
            grid,
            segment,
            values,
        }
    }

    pub(crate) fn from_vec_unchecked(grid: Grid, segment: Segment, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n());
        Self {
            grid,
            segment,
            values,
        }
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    #[inline]
    pub fn segment(&self) -> Segment {
        self.segment
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Face-midpoint x coordinates.
    pub fn abscissae(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.grid.n()).map(|i| self.grid.center(i))
    }

    /// CSV with header `x,value`, one row per face midpoint.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,value\n");
        for (x, v) in self.abscissae().zip(&self.values) {
            let _ = writeln!(out, "{x:e},{v:e}");
        }
        out
    }

    /// Parses [`Trace::to_csv`] output; the grid size is the row count.
    pub fn from_csv(text: &str, segment: Segment) -> Result<Self> {
        let ctx = "trace csv";
        let rows = parse_csv(text, &["x", "value"], ctx)?;
        let grid = Grid::new(rows.len()).map_err(|e| Error::parse(ctx, e.to_string()))?;
        check_abscissae(grid, rows.iter().map(|r| r[0]), ctx)?;
        Trace::new(grid, segment, rows.iter().map(|r| r[1]).collect())
            .map_err(|e| Error::parse(ctx, e.to_string()))
    }
}

/// Parses a numeric CSV with the exact header `columns`.
pub(crate) fn parse_csv(text: &str, columns: &[&str], ctx: &str) -> Result<Vec<Vec<f64>>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::parse(ctx, "empty input"))?;
    let got: Vec<&str> = header.split(',').map(str::trim).collect();
    if got != columns {
        return Err(Error::parse(
            ctx,
            format!(
                "expected header `{}`, got `{}`",
                columns.join(","),
                header.trim()
            ),
        ));
    }
    lines
        .enumerate()
        .map(|(row, line)| {
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            if cells.len() != columns.len() {
                return Err(Error::parse(
                    ctx,
                    format!(
                        "row {row}: expected {} columns, got {}",
                        columns.len(),
                        cells.len()
                    ),
                ));
            }
            cells
                .iter()
                .map(|c| {
                    c.parse::<f64>()
                        .map_err(|_| Error::parse(ctx, format!("row {row}: bad value `{c}`")))
                })
                .collect()
        })
        .collect()
}

pub(crate) fn check_abscissae(grid: Grid, xs: impl Iterator<Item = f64>, ctx: &str) -> Result<()> {
    for (i, x) in xs.enumerate() {
        if (x - grid.center(i)).abs() > 1e-9 {
            return Err(Error::parse(
                ctx,
                format!(
                    "row {i}: x = {x} is not the face midpoint {}",
                    grid.center(i)
                ),
            ));
        }
    }
    Ok(())
}

/// Midpoint-rule integral of a trace over the measurement contact.
pub fn integrate_trace(trace: &Trace) -> Result<f64> {
    if trace.segment() != Segment::Gamma1 {
        return Err(Error::invalid(
            "current integrals are taken over Gamma1 only",
        ));
    }
    Ok(trace.grid().h() * trace.values().iter().sum::<f64>())
}

/// Five-point Laplacian. Insulating sides use mirror ghost cells; the contact
/// rows use the one-sided second-order stencil `(2, -5, 4, -1) / h^2` in y.
pub fn field_laplacian(f: &ScalarField) -> ScalarField {
    let grid = f.grid();
    let n = grid.n();
    let inv_h2 = 1.0 / (grid.h() * grid.h());
    let v = f.values();
    let at = |i: usize, j: usize| v[j * n + i];
    let mut out = Vec::with_capacity(grid.len());
    for j in 0..n {
        for i in 0..n {
            let c = at(i, j);
            let west = if i == 0 { c } else { at(i - 1, j) };
            let east = if i + 1 == n { c } else { at(i + 1, j) };
            let dxx = west - 2.0 * c + east;
            let dyy = if j == 0 {
                2.0 * c - 5.0 * at(i, 1) + 4.0 * at(i, 2) - at(i, 3)
            } else if j + 1 == n {
                2.0 * c - 5.0 * at(i, n - 2) + 4.0 * at(i, n - 3) - at(i, n - 4)
            } else {
                at(i, j - 1) - 2.0 * c + at(i, j + 1)
            };
            out.push((dxx + dyy) * inv_h2);
        }
    }
    ScalarField::from_vec_unchecked(grid, out)
}

/// Area of the symmetric difference of two indicator fields.
pub fn symmetric_difference_error(a: &ScalarField, b: &ScalarField) -> Result<f64> {
    if a.grid() != b.grid() {
        return Err(Error::invalid("indicator fields live on different grids"));
    }
    let is_indicator = |f: &ScalarField| f.values().iter().all(|&v| v == 0.0 || v == 1.0);
    if !is_indicator(a) || !is_indicator(b) {
        return Err(Error::invalid(
            "symmetric difference needs 0/1 indicator fields",
        ));
    }
    let h = a.grid().h();
    let differing = a
        .values()
        .iter()
        .zip(b.values())
        .filter(|(x, y)| x != y)
        .count();
    Ok(h * h * differing as f64)
}

/// Indicator of `{phi >= 0}`.
pub fn indicator(phi: &ScalarField) -> ScalarField {
    phi.map(|v| if v >= 0.0 { 1.0 } else { 0.0 })
}
