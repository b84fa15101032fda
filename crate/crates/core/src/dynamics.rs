//! Plant abstractions: continuous control-affine dynamics, nondeterministic
//! dynamics with a bounded disturbance channel, and discrete-time
//! state-update maps obtained by discretization.
//!
//! All plant values are immutable after construction and every operation is
//! a pure function of its arguments, so plants may be shared freely across
//! threads.

use std::sync::Arc;

use crate::error::{ensure_finite, ensure_len, Error, Result};
use crate::linalg::{add, Matrix};

/// State vector; finite entries, length fixed by the plant.
pub type State = Vec<f64>;
/// Control vector; finite entries.
pub type Control = Vec<f64>;

pub type VecFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type MatFn = Arc<dyn Fn(&[f64]) -> Matrix + Send + Sync>;

/// Axis-aligned box of admissible vectors, `lower[i] <= v[i] <= upper[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        ensure_len(upper.len(), lower.len(), "Bounds")?;
        for (lo, hi) in lower.iter().zip(&upper) {
            if !(lo <= hi) {
                return Err(Error::InvalidParam(format!(
                    "box lower bound {lo} exceeds upper bound {hi}"
                )));
            }
        }
        Ok(Bounds { lower, upper })
    }

    /// Symmetric box [-r, r]^dim.
    pub fn symmetric(dim: usize, r: f64) -> Self {
        Bounds {
            lower: vec![-r; dim],
            upper: vec![r; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, v: &[f64], tol: f64) -> bool {
        v.len() == self.dim()
            && v.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (lo, hi))| *x >= lo - tol && *x <= hi + tol)
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| 0.5 * (lo + hi))
            .collect()
    }

    /// The 2^dim corner points in binary-counter order (bit j of the index
    /// selects lower/upper on axis j).
    pub fn corners(&self) -> Vec<Vec<f64>> {
        let dim = self.dim();
        assert!(dim <= 12, "corner enumeration capped at 12 dimensions");
        let mut out = Vec::with_capacity(1 << dim);
        for mask in 0..(1usize << dim) {
            let corner = (0..dim)
                .map(|j| {
                    if mask >> j & 1 == 0 {
                        self.lower[j]
                    } else {
                        self.upper[j]
                    }
                })
                .collect();
            out.push(corner);
        }
        out
    }
}

/// Saturation flavors; the smooth ones keep backup control laws
/// differentiable for sensitivity propagation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Saturation {
    /// Componentwise clamp to the box.
    Hard,
    /// Componentwise tanh rescaled to the box.
    Tanh,
    /// Componentwise u (1 + u^2)^(-1/2) rescaled to the box.
    Rational,
}

/// Applies a saturation function componentwise. Smooth modes map the real
/// line strictly into the open box via an affine transform of the
/// unit-interval formulas.
pub fn saturate(u: &[f64], bounds: &Bounds, mode: Saturation) -> Control {
    assert_eq!(u.len(), bounds.dim(), "saturate dimension");
    u.iter()
        .zip(bounds.lower.iter().zip(&bounds.upper))
        .map(|(&v, (&lo, &hi))| {
            let c = 0.5 * (lo + hi);
            let r = 0.5 * (hi - lo);
            match mode {
                Saturation::Hard => v.clamp(lo, hi),
                _ if r == 0.0 => c,
                Saturation::Tanh => c + r * ((v - c) / r).tanh(),
                Saturation::Rational => {
                    let s = (v - c) / r;
                    c + r * s / (1.0 + s * s).sqrt()
                }
            }
        })
        .collect()
}

/// Exact linear structure `x' = A x + B u`, when a plant has one.
#[derive(Debug, Clone)]
pub struct LinearParts {
    pub a: Matrix,
    pub b: Matrix,
}

/// Continuous control-affine plant `x' = f(x) + g(x) u` with a bounded
/// admissible input box.
#[derive(Clone)]
pub struct ContinuousAffinePlant {
    pub name: String,
    pub n: usize,
    pub m: usize,
    pub drift: VecFn,
    pub input: MatFn,
    pub u_box: Bounds,
    /// Present when the plant is exactly linear; enables exact
    /// zero-order-hold discretization.
    pub linear: Option<Arc<LinearParts>>,
    /// Analytic Jacobian of x -> f(x) + g(x) u at held u, when available.
    pub dyn_jac: Option<Arc<dyn Fn(&[f64], &[f64]) -> Matrix + Send + Sync>>,
    /// Index of a fuel-like state whose derivative is -sum |u_j| on top of
    /// the affine part (Clohessy-Wiltshire-Hill bookkeeping state).
    pub fuel_state: Option<usize>,
}

impl std::fmt::Debug for ContinuousAffinePlant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ContinuousAffinePlant")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("m", &self.m)
            .finish()
    }
}

/// Nondeterministic plant `x' = f(x) + g1(x) u + g2(x) w` with `w` confined
/// to a disturbance box.
#[derive(Clone)]
pub struct NondetAffinePlant {
    pub det: ContinuousAffinePlant,
    pub disturbance: MatFn,
    pub w_box: Bounds,
}

impl std::fmt::Debug for NondetAffinePlant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NondetAffinePlant")
            .field("det", &self.det)
            .field("p", &self.w_box.dim())
            .finish()
    }
}

/// How a discrete plant was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Discretization {
    ExactZoh,
    Rk4,
}

/// Discrete-time state-update map over one controller period.
#[derive(Clone)]
pub struct DiscretePlant {
    pub n: usize,
    pub m: usize,
    pub dt: f64,
    pub provenance: Discretization,
    pub step: Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>,
}

impl DiscretePlant {
    pub fn apply(&self, x: &[f64], u: &[f64]) -> Result<State> {
        ensure_len(x.len(), self.n, "DiscretePlant state")?;
        ensure_len(u.len(), self.m, "DiscretePlant input")?;
        let next = (self.step)(x, u);
        ensure_finite(&next, "discrete step")?;
        Ok(next)
    }
}

impl ContinuousAffinePlant {
    /// Evaluates `f(x) + g(x) u` (plus the fuel drain row when present).
    pub fn eval(&self, x: &[f64], u: &[f64]) -> Result<State> {
        ensure_len(x.len(), self.n, "eval_dynamics state")?;
        ensure_len(u.len(), self.m, "eval_dynamics input")?;
        let mut dx = add(&(self.drift)(x), &(self.input)(x).mul_vec(u));
        if let Some(k) = self.fuel_state {
            dx[k] = -u.iter().map(|v| v.abs()).sum::<f64>();
        }
        ensure_finite(&dx, "eval_dynamics")?;
        Ok(dx)
    }

    /// Discretizes over one controller period.
    pub fn discretize(&self, dt: f64, method: Discretization) -> Result<DiscretePlant> {
        if !(dt > 0.0) {
            return Err(Error::InvalidParam(format!("dt must be positive, got {dt}")));
        }
        match method {
            Discretization::ExactZoh => {
                let lin = self.linear.as_ref().ok_or_else(|| {
                    Error::Usage(format!(
                        "exact ZOH discretization requires a linear plant, `{}` declares none",
                        self.name
                    ))
                })?;
                // Exponential of the augmented [[A, B], [0, 0]] block gives
                // Ad in the top-left and Bd in the top-right.
                let n = self.n;
                let m = self.m;
                let mut aug = Matrix::zeros(n + m, n + m);
                for i in 0..n {
                    for j in 0..n {
                        aug[(i, j)] = lin.a[(i, j)];
                    }
                    for j in 0..m {
                        aug[(i, n + j)] = lin.b[(i, j)];
                    }
                }
                let e = aug.expm(dt);
                let mut ad = Matrix::zeros(n, n);
                let mut bd = Matrix::zeros(n, m);
                for i in 0..n {
                    for j in 0..n {
                        ad[(i, j)] = e[(i, j)];
                    }
                    for j in 0..m {
                        bd[(i, j)] = e[(i, n + j)];
                    }
                }
                Ok(DiscretePlant {
                    n,
                    m,
                    dt,
                    provenance: Discretization::ExactZoh,
                    step: Arc::new(move |x, u| add(&ad.mul_vec(x), &bd.mul_vec(u))),
                })
            }
            Discretization::Rk4 => {
                let plant = self.clone();
                Ok(DiscretePlant {
                    n: self.n,
                    m: self.m,
                    dt,
                    provenance: Discretization::Rk4,
                    step: Arc::new(move |x, u| {
                        crate::integrate::rk4_step(
                            |s| plant.eval(s, u).expect("finite dynamics"),
                            x,
                            dt,
                        )
                    }),
                })
            }
        }
    }
}

impl NondetAffinePlant {
    /// Evaluates `f(x) + g1(x) u + g2(x) w`.
    pub fn eval(&self, x: &[f64], u: &[f64], w: &[f64]) -> Result<State> {
        ensure_len(w.len(), self.w_box.dim(), "eval_nondet disturbance")?;
        ensure_finite(w, "eval_nondet disturbance")?;
        let base = self.det.eval(x, u)?;
        let dx = add(&base, &(self.disturbance)(x).mul_vec(w));
        ensure_finite(&dx, "eval_nondet")?;
        Ok(dx)
    }
}

/// A state-feedback control law, optionally with an analytic Jacobian
/// `du/dx` for sensitivity propagation.
#[derive(Clone)]
pub struct FeedbackLaw {
    pub name: String,
    pub eval: VecFn,
    pub jac: Option<MatFn>,
}

impl FeedbackLaw {
    pub fn constant(u: Vec<f64>, n: usize) -> Self {
        let m = u.len();
        let u2 = u.clone();
        FeedbackLaw {
            name: format!("const{u:?}"),
            eval: Arc::new(move |_| u2.clone()),
            jac: Some(Arc::new(move |_| Matrix::zeros(m, n))),
        }
    }

    pub fn call(&self, x: &[f64]) -> Vec<f64> {
        (self.eval)(x)
    }
}

impl std::fmt::Debug for FeedbackLaw {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "FeedbackLaw({})", self.name)
    }
}

/// Jacobian of the closed loop x -> f(x) + g(x) u(x).
///
/// Uses the registered analytic pieces when both the plant and the law
/// provide them, otherwise central finite differences with step
/// `1e-6 * max(1, |x_i|)` per axis.
pub fn closed_loop_jacobian(
    plant: &ContinuousAffinePlant,
    law: &FeedbackLaw,
    x: &[f64],
) -> Result<Matrix> {
    ensure_len(x.len(), plant.n, "closed_loop_jacobian state")?;
    if let (Some(dyn_jac), Some(law_jac)) = (&plant.dyn_jac, &law.jac) {
        let u = law.call(x);
        let j_plant = dyn_jac(x, &u);
        let gu = (plant.input)(x).mat_mul(&law_jac(x));
        return Ok(j_plant.add(&gu));
    }
    let n = plant.n;
    let mut jac = Matrix::zeros(n, n);
    for j in 0..n {
        let h = 1e-6 * x[j].abs().max(1.0);
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += h;
        xm[j] -= h;
        let fp = plant.eval(&xp, &law.call(&xp))?;
        let fm = plant.eval(&xm, &law.call(&xm))?;
        for i in 0..n {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plants;

    #[test]
    fn double_integrator_eval() {
        let p = plants::double_integrator();
        let dx = p.eval(&[-2.0, 3.0], &[0.5]).unwrap();
        assert_eq!(dx, vec![3.0, 0.5]);
    }

    #[test]
    fn rigid_body_eval_at_origin() {
        let p = plants::rigid_body(&Default::default()).unwrap();
        let dx = p.eval(&[0.0, 0.0, 0.0], &[0.2, 0.0, 0.0]).unwrap();
        assert!((dx[0] - 0.2 / 12.0).abs() < 1e-15);
        assert_eq!(&dx[1..], &[0.0, 0.0]);
    }

    #[test]
    fn two_cart_eval() {
        let p = plants::two_cart(&Default::default()).unwrap();
        let dx = p.eval(&[0.0, 1.0, 0.0, 0.0], &[0.0, 0.0]).unwrap();
        assert_eq!(dx, vec![1.0, -0.1, 0.0, 0.0]);
    }

    #[test]
    fn eval_dimension_mismatch_is_usage_error() {
        let p = plants::double_integrator();
        assert!(p.eval(&[0.0], &[0.0]).is_err());
        assert!(p.eval(&[0.0, 0.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn nondet_matches_deterministic_at_zero_disturbance() {
        let p = plants::disturbed_double_integrator(&Default::default()).unwrap();
        let det = p.det.eval(&[0.4, -0.2], &[0.7]).unwrap();
        let non = p.eval(&[0.4, -0.2], &[0.7], &[0.0]).unwrap();
        assert_eq!(det, non);
    }

    #[test]
    fn nondet_cancellation_and_additivity() {
        let p = plants::disturbed_double_integrator(&Default::default()).unwrap();
        assert_eq!(p.eval(&[0.0, 0.0], &[1.0], &[-1.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(p.eval(&[0.0, 0.0], &[1.0], &[0.3]).unwrap(), vec![0.0, 1.3]);
    }

    #[test]
    fn exact_zoh_double_integrator_closed_form() {
        let p = plants::double_integrator();
        let d = p.discretize(0.1, Discretization::ExactZoh).unwrap();
        let next = d.apply(&[-3.0, 0.0], &[1.0]).unwrap();
        // x1+ = x1 + dt x2 + dt^2 u / 2, x2+ = x2 + dt u
        assert!((next[0] - -2.995).abs() < 1e-12);
        assert!((next[1] - 0.1).abs() < 1e-12);
        // cross-check against a fine RK4 discretization
        let fine = p.discretize(0.001, Discretization::Rk4).unwrap();
        let mut x = vec![-3.0, 0.0];
        for _ in 0..100 {
            x = fine.apply(&x, &[1.0]).unwrap();
        }
        assert!((next[0] - x[0]).abs() < 1e-9);
        assert!((next[1] - x[1]).abs() < 1e-9);
    }

    #[test]
    fn zoh_requires_linear_structure() {
        let p = plants::unicycle();
        assert!(matches!(
            p.discretize(0.1, Discretization::ExactZoh),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn rk4_discretization_halving_consistency() {
        // One full step vs two half steps agree to O(dt^5) per step.
        let p = plants::unicycle();
        let full = p.discretize(0.1, Discretization::Rk4).unwrap();
        let half = p.discretize(0.05, Discretization::Rk4).unwrap();
        let x0 = [1.3, 0.4];
        let u = [0.6];
        let a = full.apply(&x0, &u).unwrap();
        let b = half.apply(&half.apply(&x0, &u).unwrap(), &u).unwrap();
        for (ai, bi) in a.iter().zip(&b) {
            assert!((ai - bi).abs() < 1e-8);
        }
    }

    #[test]
    fn msd_zoh_matches_rk4() {
        let p = plants::mass_spring_damper();
        let zoh = p.discretize(0.1, Discretization::ExactZoh).unwrap();
        let rk = p.discretize(0.1, Discretization::Rk4).unwrap();
        let a = zoh.apply(&[0.5, -0.3], &[0.2]).unwrap();
        let b = rk.apply(&[0.5, -0.3], &[0.2]).unwrap();
        for (ai, bi) in a.iter().zip(&b) {
            assert!((ai - bi).abs() < 1e-6);
        }
    }

    #[test]
    fn saturate_examples() {
        let unit = Bounds::symmetric(1, 1.0);
        assert_eq!(saturate(&[2.0], &unit, Saturation::Hard), vec![1.0]);
        assert_eq!(saturate(&[0.0], &unit, Saturation::Tanh), vec![0.0]);
        let r = saturate(&[1.0], &unit, Saturation::Rational);
        assert!((r[0] - 1.0 / 2.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn closed_loop_jacobian_msd_exact() {
        let p = plants::mass_spring_damper();
        let law = FeedbackLaw::constant(vec![0.0], 2);
        let j = closed_loop_jacobian(&p, &law, &[0.3, -0.1]).unwrap();
        let expect = [[0.0, 1.0], [-1.0, -1.0]];
        for i in 0..2 {
            for k in 0..2 {
                assert!((j[(i, k)] - expect[i][k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn closed_loop_jacobian_constant_law_double_integrator() {
        let p = plants::double_integrator();
        let law = FeedbackLaw::constant(vec![-1.0], 2);
        let j = closed_loop_jacobian(&p, &law, &[-1.0, 0.5]).unwrap();
        assert!((j[(0, 0)]).abs() < 1e-12);
        assert!((j[(0, 1)] - 1.0).abs() < 1e-12);
        assert!((j[(1, 0)]).abs() < 1e-12);
        assert!((j[(1, 1)]).abs() < 1e-12);
    }

    #[test]
    fn rigid_body_backup_jacobian_at_origin() {
        // u_b = tanh(x x Jx - kd Jx) linearizes to -kd I through g = J^-1.
        let p = plants::rigid_body(&Default::default()).unwrap();
        let law = plants::rigid_body_backup_law(&Default::default()).unwrap();
        let j = closed_loop_jacobian(&p, &law, &[0.0; 3]).unwrap();
        // finite-difference oracle
        let mut fd = Matrix::zeros(3, 3);
        let h = 1e-6;
        for col in 0..3 {
            let mut xp = vec![0.0; 3];
            let mut xm = vec![0.0; 3];
            xp[col] += h;
            xm[col] -= h;
            let fp = p.eval(&xp, &law.call(&xp)).unwrap();
            let fm = p.eval(&xm, &law.call(&xm)).unwrap();
            for row in 0..3 {
                fd[(row, col)] = (fp[row] - fm[row]) / (2.0 * h);
            }
        }
        for i in 0..3 {
            for k in 0..3 {
                let expect = if i == k { -1.0 } else { 0.0 };
                assert!((j[(i, k)] - expect).abs() < 1e-9, "analytic vs -kd I");
                assert!((j[(i, k)] - fd[(i, k)]).abs() < 1e-6, "analytic vs FD");
            }
        }
    }
}
