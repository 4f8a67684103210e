//! Signed-distance reinitialization of a level-set function by fast sweeping.
//!
//! Cells next to a sign change are initialized from the linearly
//! interpolated crossing points; the remaining cells are filled by
//! Gauss-Seidel sweeps of the Godunov upwind discretization of `|grad d| = 1`
//! in the four diagonal orderings. The sign pattern `{phi >= 0}` is kept.

use crate::grid::ScalarField;

const MAX_ROUNDS: usize = 8;

/// Signed distance to the zero level set of `phi`, positive where `phi >= 0`.
///
/// A field without a sign change is returned unchanged.
pub fn signed_distance(phi: &ScalarField) -> ScalarField {
    let grid = phi.grid();
    let n = grid.n();
    let h = grid.h();
    let p = phi.values();
    let positive = |k: usize| p[k] >= 0.0;

    let mut dist = vec![f64::INFINITY; grid.len()];
    let mut frozen = vec![false; grid.len()];
    for j in 0..n {
        for i in 0..n {
            let k = grid.index(i, j);
            let crossing = |q: usize| {
                if positive(k) == positive(q) {
                    f64::INFINITY
                } else {
                    h * p[k] / (p[k] - p[q])
                }
            };
            let mut dx = f64::INFINITY;
            let mut dy = f64::INFINITY;
            if i > 0 {
                dx = dx.min(crossing(k - 1));
            }
            if i + 1 < n {
                dx = dx.min(crossing(k + 1));
            }
            if j > 0 {
                dy = dy.min(crossing(k - n));
            }
            if j + 1 < n {
                dy = dy.min(crossing(k + n));
            }
            let d = match (dx.is_finite(), dy.is_finite()) {
                (true, true) if dx == 0.0 || dy == 0.0 => 0.0,
                (true, true) => dx * dy / dx.hypot(dy),
                (true, false) => dx,
                (false, true) => dy,
                (false, false) => continue,
            };
            dist[k] = d;
            frozen[k] = true;
        }
    }
    if !frozen.iter().any(|&f| f) {
        return phi.clone();
    }

    let orders: [(bool, bool); 4] = [(false, false), (true, false), (true, true), (false, true)];
    for _ in 0..MAX_ROUNDS {
        let mut changed = false;
        for &(rev_i, rev_j) in &orders {
            for jj in 0..n {
                let j = if rev_j { n - 1 - jj } else { jj };
                for ii in 0..n {
                    let i = if rev_i { n - 1 - ii } else { ii };
                    let k = grid.index(i, j);
                    if frozen[k] {
                        continue;
                    }
                    let a = (if i > 0 { dist[k - 1] } else { f64::INFINITY }).min(if i + 1 < n {
                        dist[k + 1]
                    } else {
                        f64::INFINITY
                    });
                    let b = (if j > 0 { dist[k - n] } else { f64::INFINITY }).min(if j + 1 < n {
                        dist[k + n]
                    } else {
                        f64::INFINITY
                    });
                    let lo = a.min(b);
                    if !lo.is_finite() {
                        continue;
                    }
                    let candidate = if (a - b).abs() >= h {
                        lo + h
                    } else {
                        0.5 * (a + b + (2.0 * h * h - (a - b) * (a - b)).sqrt())
                    };
                    if candidate < dist[k] {
                        dist[k] = candidate;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    let values = dist
        .iter()
        .enumerate()
        .map(|(k, &d)| if positive(k) { d } else { -d })
        .collect();
    ScalarField::from_vec_unchecked(grid, values)
}
