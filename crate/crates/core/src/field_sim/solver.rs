//! Conjugate-gradient solve of the 5-point discrete Poisson problem
//! `-(T[i-1,j] + T[i+1,j] + T[i,j-1] + T[i,j+1] - 4 T[i,j]) = q[i,j]` on the
//! interior cells, with the outer ring held at the Dirichlet boundary value.

use super::{Field, Grid, SourceLayout};
use crate::error::{Error, Result};

pub const SOLVER_TOL: f64 = 1e-8;

/// Source intensity per cell; overlapping rectangles add.
pub fn source_field(layout: &SourceLayout) -> Vec<f64> {
    let grid = layout.grid;
    let mut q = vec![0.0; grid.cells()];
    for s in &layout.sources {
        for r in s.y0..s.y1 {
            for c in s.x0..s.x1 {
                q[grid.index(r, c)] += s.intensity;
            }
        }
    }
    q
}

/// `out = q + laplacian(t)` on interior cells, zero on the boundary ring.
fn residual_into(grid: Grid, t: &[f64], q: &[f64], out: &mut [f64]) {
    let w = grid.cols;
    out.iter_mut().for_each(|v| *v = 0.0);
    for r in 1..grid.rows - 1 {
        for c in 1..w - 1 {
            let i = r * w + c;
            let lap = t[i - w] + t[i + w] + t[i - 1] + t[i + 1] - 4.0 * t[i];
            out[i] = q[i] + lap;
        }
    }
}

/// `out = -laplacian(p)` on interior cells; `p` must vanish on the boundary.
fn apply_operator(grid: Grid, p: &[f64], out: &mut [f64]) {
    let w = grid.cols;
    for r in 1..grid.rows - 1 {
        for c in 1..w - 1 {
            let i = r * w + c;
            out[i] = 4.0 * p[i] - (p[i - w] + p[i + w] + p[i - 1] + p[i + 1]);
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn interior_norm(grid: Grid, v: &[f64]) -> f64 {
    let w = grid.cols;
    let mut s = 0.0;
    for r in 1..grid.rows - 1 {
        for c in 1..w - 1 {
            let x = v[r * w + c];
            s += x * x;
        }
    }
    s.sqrt()
}

/// Relative residual `||q + laplacian(T)||_2 / ||q||_2` over interior cells.
/// Absolute residual when `q` vanishes.
pub fn heat_residual(layout: &SourceLayout, field: &Field) -> f64 {
    let grid = layout.grid;
    let q = source_field(layout);
    let mut r = vec![0.0; grid.cells()];
    residual_into(grid, field.values(), &q, &mut r);
    let qn = interior_norm(grid, &q);
    let rn = interior_norm(grid, &r);
    if qn > 0.0 {
        rn / qn
    } else {
        rn
    }
}

pub fn solve_steady_heat(layout: &SourceLayout, tol: f64) -> Result<Field> {
    layout.validate()?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::invalid(format!("solver tolerance {tol} must be positive")));
    }
    let grid = layout.grid;
    let n = grid.cells();
    let q = source_field(layout);
    let q_norm = interior_norm(grid, &q);
    let mut t = vec![layout.boundary_value; n];
    if q_norm == 0.0 {
        return Field::new(grid, t);
    }

    let cap = 10 * n;
    let target = 0.1 * tol * q_norm;
    let mut r = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut ap = vec![0.0; n];
    let mut iterations = 0;
    loop {
        // (re)start from the true residual
        residual_into(grid, &t, &q, &mut r);
        let mut rs = dot(&r, &r);
        if rs.sqrt() <= tol * q_norm {
            break;
        }
        p.copy_from_slice(&r);
        while rs.sqrt() > target && iterations < cap {
            apply_operator(grid, &p, &mut ap);
            let alpha = rs / dot(&p, &ap);
            for i in 0..n {
                t[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            let rs_new = dot(&r, &r);
            let beta = rs_new / rs;
            for i in 0..n {
                p[i] = r[i] + beta * p[i];
            }
            rs = rs_new;
            iterations += 1;
        }
        if iterations >= cap {
            residual_into(grid, &t, &q, &mut r);
            let residual = interior_norm(grid, &r) / q_norm;
            if residual <= tol {
                break;
            }
            return Err(Error::SolverDiverged { iterations, residual });
        }
    }
    Field::new(grid, t)
}
