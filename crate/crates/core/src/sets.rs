//! Level-set representations of constraint sets, safe sets, and backup
//! sets: membership, margins, gradients, safe-backward-image membership,
//! and a sampling-based boundary invariance checker.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{ContinuousAffinePlant, FeedbackLaw};
use crate::error::{ensure_finite, Error, Result};
use crate::integrate::{flow, Trajectory};
use crate::linalg::{dot, Matrix};

/// Default path margin buffer for trajectory-based membership.
pub const EPSILON_PATH: f64 = 1e-3;
/// Default terminal margin buffer.
pub const EPSILON_TERMINAL: f64 = 1e-3;
/// Violation threshold for the boundary invariance check.
pub const TOL_NAGUMO: f64 = 1e-8;

/// Role a set plays in a filter configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetLabel {
    Constraint,
    Safe,
    Backup,
}

/// A set encoded by a scalar margin function: membership is `h(x) >= 0`.
#[derive(Clone)]
pub struct LevelSet {
    pub name: String,
    pub label: SetLabel,
    /// True when the margin function is continuously differentiable on the
    /// region of interest.
    pub smooth: bool,
    margin_fn: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    gradient_fn: Option<Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>>,
}

impl std::fmt::Debug for LevelSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "LevelSet({})", self.name)
    }
}

impl LevelSet {
    pub fn new<F>(name: &str, label: SetLabel, smooth: bool, margin: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        LevelSet {
            name: name.into(),
            label,
            smooth,
            margin_fn: Arc::new(margin),
            gradient_fn: None,
        }
    }

    pub fn with_gradient<G>(mut self, gradient: G) -> Self
    where
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        self.gradient_fn = Some(Arc::new(gradient));
        self
    }

    /// Margin h(x); membership is margin >= 0.
    pub fn margin(&self, x: &[f64]) -> Result<f64> {
        let v = (self.margin_fn)(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite(format!("margin of {}", self.name)))
        }
    }

    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        Ok(self.margin(x)? >= 0.0)
    }

    /// Analytic gradient when registered, otherwise central finite
    /// differences with step 1e-6 max(1, |x_i|).
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        if let Some(g) = &self.gradient_fn {
            let v = g(x);
            ensure_finite(&v, "gradient")?;
            return Ok(v);
        }
        let mut grad = vec![0.0; x.len()];
        for j in 0..x.len() {
            let h = 1e-6 * x[j].abs().max(1.0);
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[j] += h;
            xm[j] -= h;
            grad[j] = (self.margin(&xp)? - self.margin(&xm)?) / (2.0 * h);
        }
        Ok(grad)
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.gradient_fn.is_some()
    }
}

/// Conjunction of level sets; margin is the minimum over members.
#[derive(Debug, Clone)]
pub struct IntersectionSet {
    pub members: Vec<LevelSet>,
}

impl IntersectionSet {
    pub fn new(members: Vec<LevelSet>) -> Self {
        assert!(!members.is_empty(), "intersection needs at least one member");
        IntersectionSet { members }
    }

    pub fn margin(&self, x: &[f64]) -> Result<f64> {
        let mut min = f64::INFINITY;
        for s in &self.members {
            min = min.min(s.margin(x)?);
        }
        Ok(min)
    }

    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        Ok(self.margin(x)? >= 0.0)
    }
}

// ---------------------------------------------------------------------------
// Catalog margin functions for the worked examples.
// ---------------------------------------------------------------------------

/// Viability-kernel margin for the double integrator against a wall at the
/// origin: -2 x1 - x2^2 when moving toward the wall, -x1 otherwise.
pub fn double_integrator_viability_h(x: &[f64]) -> f64 {
    if x[1] > 0.0 {
        -2.0 * x[0] - x[1] * x[1]
    } else {
        -x[0]
    }
}

/// Smooth variant of the viability margin, usable as a barrier function.
pub fn double_integrator_viability_h_smooth(x: &[f64]) -> f64 {
    -2.0 * x[0] - x[1] * x[1]
}

/// Piecewise viability kernel as a level set.
pub fn di_viability_set() -> LevelSet {
    LevelSet::new("di_viability", SetLabel::Safe, false, |x| {
        double_integrator_viability_h(x)
    })
}

/// Smooth kernel margin with its analytic gradient.
pub fn di_viability_smooth_set() -> LevelSet {
    LevelSet::new("di_viability_smooth", SetLabel::Safe, true, |x| {
        double_integrator_viability_h_smooth(x)
    })
    .with_gradient(|x| vec![-2.0, -2.0 * x[1]])
}

/// Wall constraint -x1 >= 0 for the double integrator.
pub fn di_constraint_set() -> LevelSet {
    LevelSet::new("di_constraint", SetLabel::Constraint, true, |x| -x[0])
        .with_gradient(|x| vec![-1.0, 0.0 * x[0]])
}

/// Quadrant backup set {-x1 >= 0 and -x2 >= 0} (stopped short of the wall).
pub fn di_quadrant_backup_set() -> IntersectionSet {
    IntersectionSet::new(vec![
        LevelSet::new("di_quadrant_x1", SetLabel::Backup, true, |x| -x[0]),
        LevelSet::new("di_quadrant_x2", SetLabel::Backup, true, |x| -x[1]),
    ])
}

/// Smooth under-approximation of the quadrant backup set through a
/// log-sum-exp soft maximum; super-zero set is strictly inside the
/// quadrant and invariant under full braking.
pub fn di_quadrant_smooth_set(sharpness: f64) -> LevelSet {
    let p = sharpness;
    LevelSet::new("di_quadrant_smooth", SetLabel::Backup, true, move |x| {
        let m = x[0].max(x[1]);
        -(m + ((p * (x[0] - m)).exp() + (p * (x[1] - m)).exp()).ln() / p)
    })
    .with_gradient(move |x| {
        let m = x[0].max(x[1]);
        let e0 = (p * (x[0] - m)).exp();
        let e1 = (p * (x[1] - m)).exp();
        let s = e0 + e1;
        vec![-e0 / s, -e1 / s]
    })
}

/// Quadratic margin c - x^T P x.
pub fn quadratic_level_h(x: &[f64], p: &Matrix, c: f64) -> f64 {
    c - dot(x, &p.mul_vec(x))
}

/// The mass-spring-damper Lyapunov sublevel set
/// h(x) = 1 - (1.2 x1^2 + 0.2 x1 x2 + 1.1 x2^2).
pub fn msd_lyapunov_set() -> LevelSet {
    LevelSet::new("msd_lyapunov", SetLabel::Safe, true, |x| {
        quadratic_level_h(x, &msd_p_matrix(), 1.0)
    })
    .with_gradient(|x| {
        let px = msd_p_matrix().mul_vec(x);
        vec![-2.0 * px[0], -2.0 * px[1]]
    })
}

pub fn msd_p_matrix() -> Matrix {
    Matrix::from_rows(&[&[1.2, 0.1], &[0.1, 1.1]])
}

/// Infinity-norm box constraint 1 - ||x||_inf >= 0.
pub fn msd_constraint_set() -> LevelSet {
    LevelSet::new("msd_box", SetLabel::Constraint, false, |x| {
        1.0 - x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    })
}

/// Safe-set margin for the constant-speed unicycle under the turning
/// maneuver: x1 - sin(x2) - 1.
pub fn unicycle_safe_h(x: &[f64]) -> f64 {
    x[0] - x[1].sin() - 1.0
}

pub fn unicycle_safe_set() -> LevelSet {
    LevelSet::new("unicycle_safe", SetLabel::Safe, true, |x| unicycle_safe_h(x))
        .with_gradient(|x| vec![1.0, -x[1].cos()])
}

pub fn unicycle_constraint_set() -> LevelSet {
    LevelSet::new("unicycle_wall", SetLabel::Constraint, true, |x| x[0])
        .with_gradient(|x| vec![1.0, 0.0 * x[1]])
}

/// Rigid-body rotation: kinetic-energy ellipsoid K - x^T J x.
pub fn rigid_body_energy_set(j: [f64; 3], k: f64) -> LevelSet {
    LevelSet::new("rb_energy", SetLabel::Backup, true, move |x| {
        k - (j[0] * x[0] * x[0] + j[1] * x[1] * x[1] + j[2] * x[2] * x[2])
    })
    .with_gradient(move |x| {
        vec![
            -2.0 * j[0] * x[0],
            -2.0 * j[1] * x[1],
            -2.0 * j[2] * x[2],
        ]
    })
}

/// Rigid-body angular-speed constraint omega_max^2 - ||x||^2.
pub fn rigid_body_speed_set(omega_max: f64) -> LevelSet {
    LevelSet::new("rb_speed", SetLabel::Constraint, true, move |x| {
        omega_max * omega_max - dot(x, x)
    })
    .with_gradient(|x| x.iter().map(|v| -2.0 * v).collect())
}

/// Two-cart separation constraint x3 - x1 >= 0.
pub fn two_cart_separation_set() -> LevelSet {
    LevelSet::new("two_cart_separation", SetLabel::Constraint, true, |x| {
        x[2] - x[0]
    })
    .with_gradient(|x| vec![-1.0, 0.0, 1.0, 0.0 * x[0]])
}

/// CWH keep-out constraint x1^2 + x2^2 - r_min^2 >= 0 (distances in km).
pub fn cwh_distance_set(r_min: f64) -> LevelSet {
    LevelSet::new("cwh_distance", SetLabel::Constraint, true, move |x| {
        x[0] * x[0] + x[1] * x[1] - r_min * r_min
    })
    .with_gradient(|x| vec![2.0 * x[0], 2.0 * x[1], 0.0, 0.0, 0.0])
}

/// CWH fuel constraint x5 >= 0.
pub fn cwh_fuel_set() -> LevelSet {
    LevelSet::new("cwh_fuel", SetLabel::Constraint, true, |x: &[f64]| x[4])
}

/// Which family of CWH backup states to test membership against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CwhBackupSet {
    /// Rest points on the in-track axis: x1 = x3 = x4 = 0, fueled, and at
    /// least r_min off the target.
    InvariantPoints,
    /// The natural-motion-trajectory subspace x3 = (n/2) x2,
    /// x4 = -2 n x1 with the orbit ellipse clear of the keep-out zone.
    NmtSubspace,
}

/// Membership in the CWH backup sets, up to an equality tolerance on the
/// manifold-defining coordinates.
pub fn cwh_backup_membership(
    x: &[f64],
    which: CwhBackupSet,
    n_cwh: f64,
    r_min: f64,
    tol: f64,
) -> bool {
    assert_eq!(x.len(), 5, "CWH state has five components");
    match which {
        CwhBackupSet::InvariantPoints => {
            x[0].abs() <= tol
                && x[2].abs() <= tol
                && x[3].abs() <= tol
                && x[4] >= 0.0
                && x[1].abs() >= r_min
        }
        CwhBackupSet::NmtSubspace => {
            (x[2] - 0.5 * n_cwh * x[1]).abs() <= tol
                && (x[3] + 2.0 * n_cwh * x[0]).abs() <= tol
                && x[0] * x[0] + 0.25 * x[1] * x[1] >= r_min * r_min
        }
    }
}

/// Defect of the NMT manifold conditions, used by the orbit invariance
/// checks: || (x3 - n x2 / 2, x4 + 2 n x1) ||.
pub fn cwh_nmt_defect(x: &[f64], n_cwh: f64) -> f64 {
    let d1 = x[2] - 0.5 * n_cwh * x[1];
    let d2 = x[3] + 2.0 * n_cwh * x[0];
    (d1 * d1 + d2 * d2).sqrt()
}

// ---------------------------------------------------------------------------
// Safe backward image
// ---------------------------------------------------------------------------

/// Specification of a safe-backward-image membership test: the backup flow
/// must respect the constraint margin along [0, T_b] and land in the backup
/// set at the end.
#[derive(Clone)]
pub struct SafeBackwardImageSpec {
    pub constraint: IntersectionSet,
    pub backup_set: IntersectionSet,
    pub backup_law: FeedbackLaw,
    pub horizon: f64,
    pub samples: usize,
    pub epsilon_path: f64,
    pub epsilon_terminal: f64,
}

/// Result of a safe-backward-image membership query, with the probe
/// trajectory kept as a witness.
#[derive(Debug, Clone)]
pub struct SbiResult {
    pub member: bool,
    pub witness: Trajectory,
    pub reason: Option<String>,
}

/// Integrates the backup flow over `samples + 1` points on [0, T_b] and
/// checks the path and terminal margins.
pub fn sbi_membership(
    spec: &SafeBackwardImageSpec,
    x: &[f64],
    plant: &ContinuousAffinePlant,
    dt: f64,
) -> Result<SbiResult> {
    if !(spec.horizon > 0.0) || spec.samples == 0 {
        return Err(Error::InvalidParam(
            "safe backward image needs a positive horizon and at least one sample".into(),
        ));
    }
    let tr = flow(plant, &spec.backup_law, x, spec.horizon, dt)?;
    if tr.truncated {
        return Ok(SbiResult {
            member: false,
            witness: tr,
            reason: Some("backup flow left the overflow guard".into()),
        });
    }
    let stride = ((tr.len() - 1) / spec.samples).max(1);
    for (idx, state) in tr.states.iter().enumerate().step_by(stride) {
        if spec.constraint.margin(state)? < spec.epsilon_path {
            return Ok(SbiResult {
                member: false,
                witness: tr.clone(),
                reason: Some(format!("constraint margin violated at sample {idx}")),
            });
        }
    }
    if spec.constraint.margin(tr.last_state())? < spec.epsilon_path {
        return Ok(SbiResult {
            member: false,
            witness: tr,
            reason: Some("constraint margin violated at the endpoint".into()),
        });
    }
    if spec.backup_set.margin(tr.last_state())? < spec.epsilon_terminal {
        return Ok(SbiResult {
            member: false,
            witness: tr,
            reason: Some("endpoint missed the backup set".into()),
        });
    }
    Ok(SbiResult {
        member: true,
        witness: tr,
        reason: None,
    })
}

// ---------------------------------------------------------------------------
// Boundary invariance check
// ---------------------------------------------------------------------------

/// One boundary sample that failed the subtangentiality condition.
#[derive(Debug, Clone)]
pub struct NagumoViolation {
    pub state: Vec<f64>,
    pub inward_rate: f64,
}

/// Report from sampling the boundary of a level set and testing
/// grad h . (f + g u) >= 0 there.
#[derive(Debug, Clone)]
pub struct NagumoReport {
    pub checked: usize,
    pub violations: Vec<NagumoViolation>,
}

/// Samples boundary points by bisecting along random rays from an interior
/// point, then evaluates the boundary flow condition at each.
pub fn nagumo_boundary_check(
    plant: &ContinuousAffinePlant,
    law: &FeedbackLaw,
    set: &LevelSet,
    interior: &[f64],
    max_radius: f64,
    n_samples: usize,
    seed: u64,
) -> Result<NagumoReport> {
    if set.margin(interior)? <= 0.0 {
        return Err(Error::NoInteriorPoint);
    }
    let n = interior.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checked = 0;
    let mut violations = Vec::new();
    let mut attempts = 0;
    while checked < n_samples && attempts < 50 * n_samples {
        attempts += 1;
        let dir: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = crate::linalg::norm2(&dir);
        if norm < 1e-9 {
            continue;
        }
        let dir: Vec<f64> = dir.iter().map(|v| v / norm).collect();
        // expand until the ray exits the set
        let mut hi = max_radius;
        let at = |r: f64| -> Vec<f64> {
            interior
                .iter()
                .zip(&dir)
                .map(|(c, d)| c + r * d)
                .collect()
        };
        if set.margin(&at(hi))? >= 0.0 {
            continue; // never exits within the sampling radius
        }
        let mut lo = 0.0;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if set.margin(&at(mid))? >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let boundary = at(0.5 * (lo + hi));
        let grad = set.gradient(&boundary)?;
        let dx = plant.eval(&boundary, &law.call(&boundary))?;
        let rate = dot(&grad, &dx);
        checked += 1;
        if rate < -TOL_NAGUMO {
            violations.push(NagumoViolation {
                state: boundary,
                inward_rate: rate,
            });
        }
    }
    if checked < n_samples {
        return Err(Error::NoInteriorPoint);
    }
    Ok(NagumoReport {
        checked,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plants;

    #[test]
    fn margin_examples() {
        assert_eq!(di_constraint_set().margin(&[-2.0, 5.0]).unwrap(), 2.0);
        let cwh = cwh_distance_set(0.5);
        let m = cwh.margin(&[0.3, 0.4, 0.0, 0.0, 1.0]).unwrap();
        assert!(m.abs() < 1e-15, "3-4-5 boundary, got {m}");
        let rb = rigid_body_energy_set([12.0, 12.0, 5.0], 5.0);
        assert_eq!(rb.margin(&[0.0; 3]).unwrap(), 5.0);
    }

    #[test]
    fn viability_margin_branches() {
        assert_eq!(double_integrator_viability_h(&[-2.0, 0.0]), 2.0);
        assert_eq!(double_integrator_viability_h(&[-2.0, 2.0]), 0.0);
        assert_eq!(double_integrator_viability_h(&[-0.5, 2.0]), -3.0);
    }

    #[test]
    fn smooth_kernel_under_approximates_piecewise_kernel() {
        // On the half plane moving toward the wall the two margins are the
        // same function; elsewhere the smooth variant is a conservative
        // under-approximation (smooth membership implies piecewise
        // membership, not the converse: at (-0.1, -2) the piecewise margin
        // is positive while the smooth one is not).
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let x = [rng.gen_range(-5.0..0.0), rng.gen_range(-3.0..3.0)];
            let a = double_integrator_viability_h(&x);
            let b = double_integrator_viability_h_smooth(&x);
            if x[1] > 0.0 {
                assert_eq!(a, b);
            } else if b >= 0.0 {
                assert!(a >= 0.0, "x = {x:?}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn quadratic_level_examples() {
        let p = msd_p_matrix();
        assert_eq!(quadratic_level_h(&[0.0, 0.0], &p, 1.0), 1.0);
        assert!((quadratic_level_h(&[1.0, 0.0], &p, 1.0) - -0.2).abs() < 1e-15);
        // extreme coordinates of {V = 1} from the inverse matrix diagonal
        let det: f64 = 1.2 * 1.1 - 0.1 * 0.1;
        let max_x1 = (1.1 / det).sqrt();
        let max_x2 = (1.2 / det).sqrt();
        assert!(max_x1 < 1.0 && max_x2 < 1.0);
        // the bound is attained up to parameterization: check by sampling
        let mut worst: f64 = 0.0;
        for k in 0..20000 {
            let th = k as f64 / 20000.0 * std::f64::consts::TAU;
            // point on the ellipse via scaling the direction to V = 1
            let d = [th.cos(), th.sin()];
            let v = quadratic_level_h(&d, &p, 0.0);
            let scale = 1.0 / (-v).sqrt();
            worst = worst.max((d[0] * scale).abs());
        }
        assert!((worst - max_x1).abs() < 1e-4);
    }

    #[test]
    fn unicycle_margin_and_flow_infimum() {
        assert_eq!(unicycle_safe_h(&[2.0, 0.0]), 1.0);
        assert!(unicycle_safe_h(&[1.0 + 0.5f64.sin(), 0.5]).abs() < 1e-15);
        // infimum of the x1 component of the turning flow over one period
        // equals the margin formula
        let p = plants::unicycle();
        let law = FeedbackLaw::constant(vec![1.0], 2);
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..5 {
            let x0 = [rng.gen_range(0.5..3.0), rng.gen_range(0.0..std::f64::consts::TAU)];
            let tr = flow(&p, &law, &x0, std::f64::consts::TAU, 0.002).unwrap();
            let min_x1 = tr
                .states
                .iter()
                .map(|s| s[0])
                .fold(f64::INFINITY, f64::min);
            let expect = x0[0] - x0[1].sin() - 1.0;
            assert!((min_x1 - expect).abs() < 1e-4, "inf {min_x1} vs h {expect}");
        }
    }

    #[test]
    fn cwh_backup_membership_examples() {
        let n = 0.001027;
        assert!(cwh_backup_membership(
            &[0.0, 0.6, 0.0, 0.0, 1.0],
            CwhBackupSet::InvariantPoints,
            n,
            0.5,
            1e-9
        ));
        let b = 0.6;
        assert!(cwh_backup_membership(
            &[b, 0.0, 0.0, -2.0 * n * b, 1.0],
            CwhBackupSet::NmtSubspace,
            n,
            0.5,
            1e-9
        ));
        for which in [CwhBackupSet::InvariantPoints, CwhBackupSet::NmtSubspace] {
            assert!(!cwh_backup_membership(
                &[0.2, 0.0, 0.0, 0.0, 1.0],
                which,
                n,
                0.5,
                1e-9
            ));
        }
    }

    fn di_sbi_spec() -> SafeBackwardImageSpec {
        SafeBackwardImageSpec {
            constraint: IntersectionSet::new(vec![di_constraint_set()]),
            backup_set: di_quadrant_backup_set(),
            backup_law: FeedbackLaw::constant(vec![-1.0], 2),
            horizon: 3.0,
            samples: 30,
            epsilon_path: EPSILON_PATH,
            epsilon_terminal: EPSILON_TERMINAL,
        }
    }

    #[test]
    fn sbi_membership_stopping_distance() {
        let plant = plants::double_integrator();
        let spec = di_sbi_spec();
        // stopping distance x1 + x2^2 / 2 <= 0 decides membership
        let a = sbi_membership(&spec, &[-1.0, 1.0], &plant, 0.05).unwrap();
        assert!(a.member, "{:?}", a.reason);
        let b = sbi_membership(&spec, &[-0.1, 1.0], &plant, 0.05).unwrap();
        assert!(!b.member);
        // a state already in the (invariant) backup set stays a member
        let c = sbi_membership(&spec, &[-0.5, -0.2], &plant, 0.05).unwrap();
        assert!(c.member);
    }

    #[test]
    fn sbi_refinement_is_monotone() {
        let plant = plants::double_integrator();
        let mut spec = di_sbi_spec();
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let x = [rng.gen_range(-3.0..0.0), rng.gen_range(-1.0..2.0)];
            spec.samples = 30;
            let coarse = sbi_membership(&spec, &x, &plant, 0.05).unwrap();
            spec.samples = 60;
            let fine = sbi_membership(&spec, &x, &plant, 0.05).unwrap();
            if coarse.member {
                assert!(fine.member, "refinement flipped member at {x:?}");
            }
        }
    }

    #[test]
    fn nagumo_msd_level_curve_clean() {
        let plant = plants::mass_spring_damper();
        let law = FeedbackLaw::constant(vec![0.0], 2);
        let set = msd_lyapunov_set();
        let report =
            nagumo_boundary_check(&plant, &law, &set, &[0.0, 0.0], 5.0, 200, 7).unwrap();
        assert_eq!(report.checked, 200);
        assert!(report.violations.is_empty());
    }

    #[test]
    fn nagumo_double_integrator_directional() {
        let plant = plants::double_integrator();
        let set = di_viability_smooth_set();
        // accelerating toward the wall violates the boundary condition on
        // the upper half of the parabola
        let push = FeedbackLaw::constant(vec![1.0], 2);
        let report =
            nagumo_boundary_check(&plant, &push, &set, &[-2.0, 0.0], 8.0, 300, 11).unwrap();
        assert!(!report.violations.is_empty());
        assert!(report
            .violations
            .iter()
            .all(|v| v.state[1] > 0.0), "violations only where x2 > 0");
        // full braking gives exactly zero boundary rate
        let brake = FeedbackLaw::constant(vec![-1.0], 2);
        let report =
            nagumo_boundary_check(&plant, &brake, &set, &[-2.0, 0.0], 8.0, 300, 11).unwrap();
        assert!(report.violations.is_empty());
    }

    #[test]
    fn registered_gradients_match_finite_differences() {
        use rand::Rng;
        use rand::SeedableRng;
        let sets: Vec<(LevelSet, usize)> = vec![
            (di_viability_smooth_set(), 2),
            (di_constraint_set(), 2),
            (msd_lyapunov_set(), 2),
            (unicycle_safe_set(), 2),
            (rigid_body_energy_set([12.0, 12.0, 5.0], 5.0), 3),
            (rigid_body_speed_set(1.0), 3),
            (two_cart_separation_set(), 4),
            (cwh_distance_set(0.5), 5),
            (di_quadrant_smooth_set(20.0), 2),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for (set, dim) in sets {
            for _ in 0..100 {
                let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let ana = set.gradient(&x).unwrap();
                for j in 0..dim {
                    let h = 1e-6 * x[j].abs().max(1.0);
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[j] += h;
                    xm[j] -= h;
                    let fd = (set.margin(&xp).unwrap() - set.margin(&xm).unwrap()) / (2.0 * h);
                    let denom = fd.abs().max(1e-4);
                    assert!(
                        ((ana[j] - fd) / denom).abs() < 1e-4,
                        "{} grad[{j}] {} vs fd {}",
                        set.name,
                        ana[j],
                        fd
                    );
                }
            }
        }
    }
}
