//! Catalog of worked systems: double integrator, mass-spring-damper,
//! constant-speed unicycle, Clohessy-Wiltshire-Hill relative orbital motion,
//! rigid-body rotation, two-cart collision avoidance, a damped linear
//! system, and the mixed-monotone demonstration system.
//!
//! Parameters default to the values used in the worked examples; any entry
//! may be overridden through the parameter map.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::dynamics::{Bounds, ContinuousAffinePlant, FeedbackLaw, LinearParts, NondetAffinePlant};
use crate::error::{Error, Result};
use crate::linalg::{cross3, skew3, Matrix};

/// Plant parameter map, as accepted from scenario JSON.
pub type Params = BTreeMap<String, f64>;

pub fn param(params: &Params, key: &str, default: f64) -> f64 {
    params.get(key).copied().unwrap_or(default)
}

fn positive(params: &Params, key: &str, default: f64) -> Result<f64> {
    let v = param(params, key, default);
    if v > 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidParam(format!("{key} must be positive, got {v}")))
    }
}

/// Either flavor of plant the catalog can produce.
#[derive(Debug, Clone)]
pub enum Plant {
    Affine(ContinuousAffinePlant),
    Nondet(NondetAffinePlant),
}

pub const PLANT_NAMES: [&str; 8] = [
    "cwh",
    "damped_linear",
    "double_integrator",
    "mass_spring_damper",
    "mm_example",
    "rigid_body",
    "two_cart",
    "unicycle",
];

/// Builds a catalog plant by name.
pub fn make_plant(name: &str, params: &Params) -> Result<Plant> {
    match name {
        "double_integrator" => Ok(Plant::Affine(double_integrator())),
        "disturbed_double_integrator" => {
            Ok(Plant::Nondet(disturbed_double_integrator(params)?))
        }
        "mass_spring_damper" => Ok(Plant::Affine(mass_spring_damper())),
        "unicycle" => Ok(Plant::Affine(unicycle())),
        "cwh" => Ok(Plant::Affine(cwh(params)?)),
        "rigid_body" => Ok(Plant::Affine(rigid_body(params)?)),
        "two_cart" => Ok(Plant::Affine(two_cart(params)?)),
        "damped_linear" => Ok(Plant::Affine(damped_linear())),
        "mm_example" => Ok(Plant::Affine(mm_example())),
        _ => Err(Error::UnknownName(
            name.to_string(),
            PLANT_NAMES.join(", "),
        )),
    }
}

/// x1' = x2, x2' = u with u in [-1, 1]: a vehicle approaching a wall at the
/// origin under bounded acceleration.
pub fn double_integrator() -> ContinuousAffinePlant {
    let a = Matrix::from_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
    let b = Matrix::from_rows(&[&[0.0], &[1.0]]);
    linear_plant("double_integrator", a, b, Bounds::symmetric(1, 1.0))
}

/// The double integrator with a matched disturbance channel g2 = g1 and
/// w in [-w_max, w_max].
pub fn disturbed_double_integrator(params: &Params) -> Result<NondetAffinePlant> {
    let w_max = positive(params, "w_max", 0.2)?;
    let det = double_integrator();
    Ok(NondetAffinePlant {
        det,
        disturbance: Arc::new(|_| Matrix::from_rows(&[&[0.0], &[1.0]])),
        w_box: Bounds::symmetric(1, w_max),
    })
}

/// Closed-loop double integrator under u = -x1 - x2 plus an exogenous
/// input: x' = [[0, 1], [-1, -1]] x + [0, 1] u.
pub fn mass_spring_damper() -> ContinuousAffinePlant {
    let a = Matrix::from_rows(&[&[0.0, 1.0], &[-1.0, -1.0]]);
    let b = Matrix::from_rows(&[&[0.0], &[1.0]]);
    linear_plant("mass_spring_damper", a, b, Bounds::symmetric(1, 1.0))
}

/// Constant-speed unicycle: x1' = cos(x2), x2' = u. Forward speed is fixed
/// at one nondimensional unit.
pub fn unicycle() -> ContinuousAffinePlant {
    ContinuousAffinePlant {
        name: "unicycle".into(),
        n: 2,
        m: 1,
        drift: Arc::new(|x| vec![x[1].cos(), 0.0]),
        input: Arc::new(|_| Matrix::from_rows(&[&[0.0], &[1.0]])),
        u_box: Bounds::symmetric(1, 1.0),
        linear: None,
        dyn_jac: Some(Arc::new(|x, _| {
            Matrix::from_rows(&[&[0.0, -x[1].sin()], &[0.0, 0.0]])
        })),
        fuel_state: None,
    }
}

/// Clohessy-Wiltshire-Hill planar relative motion with a fuel state.
/// States: in-track/radial positions x1, x2 (km), velocities x3, x4, fuel
/// x5. The fuel derivative is -|u1| - |u2|, handled outside the affine
/// structure and excluded from gradient-based filtering.
pub fn cwh(params: &Params) -> Result<ContinuousAffinePlant> {
    let mass = positive(params, "m", 50.0)?;
    let n = positive(params, "n_cwh", 0.001027)?;
    let u_max = positive(params, "u_max", 0.5)?;
    Ok(ContinuousAffinePlant {
        name: "cwh".into(),
        n: 5,
        m: 2,
        drift: Arc::new(move |x| {
            vec![
                x[2],
                x[3],
                3.0 * n * n * x[0] + 2.0 * n * x[3],
                -2.0 * n * x[2],
                0.0,
            ]
        }),
        input: Arc::new(move |_| {
            Matrix::from_rows(&[
                &[0.0, 0.0],
                &[0.0, 0.0],
                &[1.0 / mass, 0.0],
                &[0.0, 1.0 / mass],
                &[0.0, 0.0],
            ])
        }),
        u_box: Bounds::symmetric(2, u_max),
        linear: None,
        dyn_jac: None,
        fuel_state: Some(4),
    })
}

/// Spacecraft in unconstrained rotation: x' = J^-1 (-x cross Jx) + J^-1 u
/// with diagonal inertia J and u in [-1, 1]^3.
pub fn rigid_body(params: &Params) -> Result<ContinuousAffinePlant> {
    let j = rigid_body_inertia(params)?;
    let j_inv = Matrix::diag(&[1.0 / j[0], 1.0 / j[1], 1.0 / j[2]]);
    let jm = Matrix::diag(&j);
    let j_inv2 = j_inv.clone();
    let jm2 = jm.clone();
    Ok(ContinuousAffinePlant {
        name: "rigid_body".into(),
        n: 3,
        m: 3,
        drift: Arc::new(move |x| {
            let coriolis = cross3(x, &jm.mul_vec(x));
            j_inv.mul_vec(&[-coriolis[0], -coriolis[1], -coriolis[2]])
        }),
        input: Arc::new(move |_| j_inv2.clone()),
        u_box: Bounds::symmetric(3, 1.0),
        linear: None,
        dyn_jac: Some(Arc::new(move |x, _| {
            // d/dx (-x cross Jx) = skew(Jx) - skew(x) J
            let jm3 = Matrix::diag(&jm2_diag(&jm2));
            let term = skew3(&jm3.mul_vec(x)).add(&skew3(x).mat_mul(&jm3).scale(-1.0));
            Matrix::diag(&[1.0 / jm3[(0, 0)], 1.0 / jm3[(1, 1)], 1.0 / jm3[(2, 2)]])
                .mat_mul(&term)
        })),
        fuel_state: None,
    })
}

fn jm2_diag(m: &Matrix) -> [f64; 3] {
    [m[(0, 0)], m[(1, 1)], m[(2, 2)]]
}

fn rigid_body_inertia(params: &Params) -> Result<[f64; 3]> {
    Ok([
        positive(params, "j1", 12.0)?,
        positive(params, "j2", 12.0)?,
        positive(params, "j3", 5.0)?,
    ])
}

/// Smooth stabilizing backup law for the rigid body:
/// u_b = tanh((x cross Jx) - k_d Jx).
pub fn rigid_body_backup_law(params: &Params) -> Result<FeedbackLaw> {
    let j = rigid_body_inertia(params)?;
    let k_d = positive(params, "k_d", 1.0)?;
    let jm = Matrix::diag(&j);
    let jm_jac = jm.clone();
    Ok(FeedbackLaw {
        name: "rigid_body_tanh".into(),
        eval: Arc::new(move |x| {
            let v = pre_tanh(x, &jm, k_d);
            v.iter().map(|s| s.tanh()).collect()
        }),
        jac: Some(Arc::new(move |x| {
            let v = pre_tanh(x, &jm_jac, k_d);
            // dv/dx = -skew(Jx) + skew(x) J - k_d J
            let dv = skew3(&jm_jac.mul_vec(x))
                .scale(-1.0)
                .add(&skew3(x).mat_mul(&jm_jac))
                .add(&jm_jac.scale(-k_d));
            let mut out = dv;
            for i in 0..3 {
                let sech2 = 1.0 - v[i].tanh().powi(2);
                for c in 0..3 {
                    out[(i, c)] *= sech2;
                }
            }
            out
        })),
    })
}

fn pre_tanh(x: &[f64], jm: &Matrix, k_d: f64) -> Vec<f64> {
    let jx = jm.mul_vec(x);
    let c = cross3(x, &jx);
    (0..3).map(|i| c[i] - k_d * jx[i]).collect()
}

/// Two vehicles on a line with drag: positions x1, x3, velocities x2, x4,
/// per-vehicle thrust inputs.
pub fn two_cart(params: &Params) -> Result<ContinuousAffinePlant> {
    let b1 = positive(params, "b1", 0.1)?;
    let b2 = positive(params, "b2", 0.25)?;
    let a = Matrix::from_rows(&[
        &[0.0, 1.0, 0.0, 0.0],
        &[0.0, -b1, 0.0, 0.0],
        &[0.0, 0.0, 0.0, 1.0],
        &[0.0, 0.0, 0.0, -b2],
    ]);
    let b = Matrix::from_rows(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 0.0], &[0.0, 1.0]]);
    Ok(linear_plant("two_cart", a, b, Bounds::symmetric(2, 1.0)))
}

/// Damped linear system x'' = -x' + u; state [position, velocity].
pub fn damped_linear() -> ContinuousAffinePlant {
    let a = Matrix::from_rows(&[&[0.0, 1.0], &[0.0, -1.0]]);
    let b = Matrix::from_rows(&[&[0.0], &[1.0]]);
    linear_plant("damped_linear", a, b, Bounds::symmetric(1, 1.0))
}

/// Autonomous mixed-monotone demonstration system
/// x1' = x2^2 + 2, x2' = x1 (no control input).
pub fn mm_example() -> ContinuousAffinePlant {
    ContinuousAffinePlant {
        name: "mm_example".into(),
        n: 2,
        m: 0,
        drift: Arc::new(|x| vec![x[1] * x[1] + 2.0, x[0]]),
        input: Arc::new(|_| Matrix::zeros(2, 0)),
        u_box: Bounds::new(vec![], vec![]).expect("empty box"),
        linear: None,
        dyn_jac: Some(Arc::new(|x, _| {
            Matrix::from_rows(&[&[0.0, 2.0 * x[1]], &[1.0, 0.0]])
        })),
        fuel_state: None,
    }
}

fn linear_plant(name: &str, a: Matrix, b: Matrix, u_box: Bounds) -> ContinuousAffinePlant {
    let n = a.nrows;
    let m = b.ncols;
    let parts = Arc::new(LinearParts { a: a.clone(), b: b.clone() });
    let a2 = a.clone();
    let b2 = b.clone();
    let a3 = a;
    ContinuousAffinePlant {
        name: name.into(),
        n,
        m,
        drift: Arc::new(move |x| a2.mul_vec(x)),
        input: Arc::new(move |_| b2.clone()),
        u_box,
        linear: Some(parts),
        dyn_jac: Some(Arc::new(move |_, _| a3.clone())),
        fuel_state: None,
    }
}
