//! Exact solver for the minimally-invasive program
//!
//! ```text
//!     minimize   || u - u_des ||^2
//!     subject to a_i^T u + b_i >= 0,  i = 1..N
//!                lower <= u <= upper
//! ```
//!
//! The objective Hessian is twice the identity, so the solution is the
//! Euclidean projection of `u_des` onto the feasible polytope and the
//! dual active-set iteration reduces to orthogonal projections against the
//! working set. Dimension is capped at eight; barrier filters only ever
//! pose control-input-sized programs. Infeasibility is a first-class
//! result, detected when an incoming constraint is a nonpositive
//! combination of the working set.

use crate::dynamics::Bounds;
use crate::error::{ensure_finite, Error, Result};
use crate::linalg::{dot, norm2, Matrix};

/// Feasibility tolerance (absolute).
pub const TOL_FEAS: f64 = 1e-9;
/// Stationarity/complementarity certificate tolerance.
pub const TOL_KKT: f64 = 1e-8;
/// Linear dependence threshold for projected constraint normals.
const TOL_DEP: f64 = 1e-11;
/// Iteration guard; generous for eight dimensions.
const MAX_ITER: usize = 1000;

/// Inequality-constrained projection program.
#[derive(Debug, Clone)]
pub struct QpSpec {
    pub u_des: Vec<f64>,
    /// Pairs (a, b) meaning a^T u + b >= 0.
    pub constraints: Vec<(Vec<f64>, f64)>,
    pub bounds: Bounds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    Optimal,
    Infeasible,
}

/// Solver output with the active set and multipliers kept for
/// certification. Constraint indices follow the unified numbering:
/// general constraints first, then box lower bounds, then box upper
/// bounds.
#[derive(Debug, Clone)]
pub struct QpSolution {
    pub u_act: Vec<f64>,
    pub status: QpStatus,
    pub active_indices: Vec<usize>,
    /// Multipliers in the convention 2 (u - u_des) = sum lambda_i a_i.
    pub multipliers: Vec<f64>,
    pub kkt_residual: f64,
    pub objective: f64,
}

impl QpSpec {
    pub fn dim(&self) -> usize {
        self.u_des.len()
    }

    fn validate(&self) -> Result<()> {
        let m = self.dim();
        if m == 0 {
            return Err(Error::InvalidParam("qp needs at least one variable".into()));
        }
        if m > 8 {
            return Err(Error::QpTooLarge(m));
        }
        ensure_finite(&self.u_des, "qp objective center")?;
        if self.bounds.dim() != m {
            return Err(Error::Dimension("qp box dimension".into()));
        }
        for (a, b) in &self.constraints {
            if a.len() != m {
                return Err(Error::Dimension("qp constraint dimension".into()));
            }
            ensure_finite(a, "qp constraint normal")?;
            if !b.is_finite() {
                return Err(Error::NonFinite("qp constraint offset".into()));
            }
        }
        Ok(())
    }

    /// Unified list of constraint rows (a, b): general, box lower, box
    /// upper.
    pub fn unified_rows(&self) -> Vec<(Vec<f64>, f64)> {
        let m = self.dim();
        let mut rows = self.constraints.clone();
        for j in 0..m {
            let mut a = vec![0.0; m];
            a[j] = 1.0;
            rows.push((a, -self.bounds.lower[j]));
        }
        for j in 0..m {
            let mut a = vec![0.0; m];
            a[j] = -1.0;
            rows.push((a, self.bounds.upper[j]));
        }
        rows
    }
}

/// Least-squares coefficients r of `target` against the columns indexed by
/// `active`, and the orthogonal residual z = target - N r.
fn project_onto_active(
    rows: &[(Vec<f64>, f64)],
    active: &[usize],
    target: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let k = active.len();
    if k == 0 {
        return Ok((vec![], target.to_vec()));
    }
    let mut gram = Matrix::zeros(k, k);
    let mut rhs = vec![0.0; k];
    for (i, &ai) in active.iter().enumerate() {
        for (j, &aj) in active.iter().enumerate() {
            gram[(i, j)] = dot(&rows[ai].0, &rows[aj].0);
        }
        rhs[i] = dot(&rows[ai].0, target);
    }
    // Tiny ridge keeps the Gram solve well-posed when a duplicate row is
    // being tested for dependence; the residual classification below is
    // what actually decides.
    for i in 0..k {
        gram[(i, i)] += 1e-14 * gram[(i, i)].max(1.0);
    }
    let r = gram.solve(&rhs)?;
    let mut z = target.to_vec();
    for (i, &ai) in active.iter().enumerate() {
        for c in 0..z.len() {
            z[c] -= r[i] * rows[ai].0[c];
        }
    }
    Ok((r, z))
}

/// Solves the projection program. Returns `status = Infeasible` (never an
/// error) when the polytope intersected with the box is empty.
pub fn solve(spec: &QpSpec) -> Result<QpSolution> {
    spec.validate()?;
    let rows = spec.unified_rows();
    let mut u = spec.u_des.clone();
    let mut active: Vec<usize> = Vec::new();
    let mut lam: Vec<f64> = Vec::new();

    let mut iter = 0usize;
    'outer: loop {
        iter += 1;
        if iter > MAX_ITER {
            return Err(Error::NonFinite("qp active-set iteration guard".into()));
        }
        // most violated constraint, lexicographic tie-break by index
        let mut p = usize::MAX;
        let mut worst = -TOL_FEAS;
        for (i, (a, b)) in rows.iter().enumerate() {
            if active.contains(&i) {
                continue;
            }
            let s = dot(a, &u) + b;
            if s < worst {
                worst = s;
                p = i;
            }
        }
        if p == usize::MAX {
            break 'outer;
        }

        let mut lam_p = 0.0;
        let mut s_p = worst;
        loop {
            iter += 1;
            if iter > MAX_ITER {
                return Err(Error::NonFinite("qp active-set iteration guard".into()));
            }
            let (r, z) = project_onto_active(&rows, &active, &rows[p].0)?;
            let z_norm2 = dot(&z, &z);
            let independent = z_norm2 > TOL_DEP * norm2(&rows[p].0).max(1.0);

            // dual blocking step from the working set
            let mut t1 = f64::INFINITY;
            let mut drop_pos = usize::MAX;
            for (pos, &rj) in r.iter().enumerate() {
                if rj > 1e-12 {
                    let ratio = lam[pos] / rj;
                    if ratio < t1 - 1e-15 {
                        t1 = ratio;
                        drop_pos = pos;
                    }
                }
            }
            let t2 = if independent {
                -s_p / z_norm2
            } else {
                f64::INFINITY
            };

            if !t1.is_finite() && !t2.is_finite() {
                // Farkas-style certificate: the incoming normal is a
                // nonpositive combination of the working set, so the
                // constraint cannot be satisfied.
                return Ok(QpSolution {
                    u_act: u,
                    status: QpStatus::Infeasible,
                    active_indices: active,
                    multipliers: lam.iter().map(|l| 2.0 * l).collect(),
                    kkt_residual: f64::INFINITY,
                    objective: f64::INFINITY,
                });
            }

            let t = t1.min(t2);
            for (pos, &rj) in r.iter().enumerate() {
                lam[pos] -= t * rj;
            }
            lam_p += t;
            if independent {
                for c in 0..u.len() {
                    u[c] += t * z[c];
                }
                s_p = dot(&rows[p].0, &u) + rows[p].1;
            }

            if t2 <= t1 {
                active.push(p);
                lam.push(lam_p);
                continue 'outer;
            }
            active.remove(drop_pos);
            lam.remove(drop_pos);
        }
    }

    // prune numerically-zero multipliers for a clean certificate
    let mut active_indices = Vec::new();
    let mut multipliers = Vec::new();
    for (pos, &idx) in active.iter().enumerate() {
        if lam[pos] > 1e-13 {
            active_indices.push(idx);
            multipliers.push(2.0 * lam[pos]);
        }
    }
    let objective = {
        let d = crate::linalg::sub(&u, &spec.u_des);
        dot(&d, &d)
    };
    let mut solution = QpSolution {
        u_act: u,
        status: QpStatus::Optimal,
        active_indices,
        multipliers,
        kkt_residual: 0.0,
        objective,
    };
    solution.kkt_residual = kkt_residual(spec, &solution);
    Ok(solution)
}

/// Optimality certificate: stationarity norm plus complementary slackness,
/// with box multipliers folded into the unified constraint numbering.
pub fn kkt_residual(spec: &QpSpec, candidate: &QpSolution) -> f64 {
    let rows = spec.unified_rows();
    let mut stationarity: Vec<f64> = candidate
        .u_act
        .iter()
        .zip(&spec.u_des)
        .map(|(u, d)| 2.0 * (u - d))
        .collect();
    let mut comp = 0.0;
    for (idx, lambda) in candidate
        .active_indices
        .iter()
        .zip(&candidate.multipliers)
    {
        let (a, b) = &rows[*idx];
        for c in 0..stationarity.len() {
            stationarity[c] -= lambda * a[c];
        }
        comp += lambda * (dot(a, &candidate.u_act) + b).abs();
    }
    norm2(&stationarity) + comp
}
