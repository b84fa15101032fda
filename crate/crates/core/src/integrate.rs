//! Fixed-step integration of plant flows, flows paired with sensitivity
//! matrices, linear flows through the matrix exponential, and embedding
//! systems.
//!
//! Everything is fixed-step classical Runge-Kutta so repeated runs with the
//! same step are bit-reproducible.

use crate::dynamics::{ContinuousAffinePlant, FeedbackLaw};
use crate::error::{ensure_len, Result};
use crate::linalg::{norm_inf, Matrix};

/// States above this infinity norm are treated as a blow-up and the
/// trajectory is truncated with a flag.
pub const OVERFLOW_GUARD: f64 = 1e12;

/// Sampled closed-loop trajectory. Controls are sampled at every time
/// (repeated at the final sample), keeping the streams aligned.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub controls: Vec<Vec<f64>>,
    /// Set when integration stopped early at the overflow guard.
    pub truncated: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_state(&self) -> &[f64] {
        self.states.last().expect("nonempty trajectory")
    }
}

/// Trajectory together with the sensitivity of the flow with respect to the
/// initial state at every sample; `q[0]` is the identity.
#[derive(Debug, Clone)]
pub struct SensitivityTrajectory {
    pub base: Trajectory,
    pub q: Vec<Matrix>,
}

/// One classical fourth-order Runge-Kutta step of `x' = derivative(x)`.
pub fn rk4_step<F: Fn(&[f64]) -> Vec<f64>>(derivative: F, x: &[f64], dt: f64) -> Vec<f64> {
    let n = x.len();
    let k1 = derivative(x);
    let mut tmp = vec![0.0; n];
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * dt * k1[i];
    }
    let k2 = derivative(&tmp);
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * dt * k2[i];
    }
    let k3 = derivative(&tmp);
    for i in 0..n {
        tmp[i] = x[i] + dt * k3[i];
    }
    let k4 = derivative(&tmp);
    (0..n)
        .map(|i| x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// Uniform sample grid {0, dt, ..., T} with a final partial step when T is
/// not a multiple of dt.
fn sample_grid(t_final: f64, dt: f64) -> Vec<f64> {
    assert!(dt > 0.0, "dt must be positive");
    assert!(t_final >= 0.0, "horizon must be nonnegative");
    let mut times = vec![0.0];
    let mut k = 1usize;
    loop {
        let t = k as f64 * dt;
        if t >= t_final - 1e-12 * dt.max(1.0) {
            break;
        }
        times.push(t);
        k += 1;
    }
    if t_final > 0.0 {
        times.push(t_final);
    }
    times
}

/// Integrates the closed loop `x' = f(x) + g(x) u(x)` from `x0`, sampling
/// at {0, dt, ..., T}. Truncates with a flag if the state passes the
/// overflow guard.
pub fn flow(
    plant: &ContinuousAffinePlant,
    law: &FeedbackLaw,
    x0: &[f64],
    t_final: f64,
    dt: f64,
) -> Result<Trajectory> {
    ensure_len(x0.len(), plant.n, "flow initial state")?;
    let derivative = |x: &[f64]| plant.eval(x, &law.call(x)).unwrap_or(vec![f64::NAN; x.len()]);
    let times = sample_grid(t_final, dt);
    let mut states = Vec::with_capacity(times.len());
    let mut controls = Vec::with_capacity(times.len());
    let mut x = x0.to_vec();
    let mut truncated = false;
    let mut kept_times = Vec::with_capacity(times.len());
    for (idx, &t) in times.iter().enumerate() {
        if idx > 0 {
            let step = t - times[idx - 1];
            x = rk4_step(derivative, &x, step);
        }
        if !x.iter().all(|v| v.is_finite()) || norm_inf(&x) > OVERFLOW_GUARD {
            truncated = true;
            break;
        }
        kept_times.push(t);
        controls.push(law.call(&x));
        states.push(x.clone());
    }
    Ok(Trajectory {
        times: kept_times,
        states,
        controls,
        truncated,
    })
}

/// e^(A t) x0 computed to machine precision via scaling and squaring.
pub fn lti_flow(a: &Matrix, x0: &[f64], t: f64) -> Vec<f64> {
    a.expm(t).mul_vec(x0)
}

/// Joint integration of the flow and its sensitivity matrix:
/// Q' = Df_cl(x(t)) Q with Q(0) = I, stacked with the state into one
/// Runge-Kutta system. The law must be smooth for Df_cl to exist.
pub fn flow_with_sensitivity(
    plant: &ContinuousAffinePlant,
    law: &FeedbackLaw,
    x0: &[f64],
    t_final: f64,
    dt: f64,
) -> Result<SensitivityTrajectory> {
    ensure_len(x0.len(), plant.n, "flow_with_sensitivity initial state")?;
    let n = plant.n;
    let derivative = |y: &[f64]| {
        let x = &y[..n];
        let u = law.call(x);
        let mut dy = vec![f64::NAN; n + n * n];
        if let (Ok(dx), Ok(jac)) = (
            plant.eval(x, &u),
            crate::dynamics::closed_loop_jacobian(plant, law, x),
        ) {
            dy[..n].copy_from_slice(&dx);
            // dQ = J * Q, Q stored row-major after the state block
            for i in 0..n {
                for j in 0..n {
                    let mut acc = 0.0;
                    for k in 0..n {
                        acc += jac[(i, k)] * y[n + k * n + j];
                    }
                    dy[n + i * n + j] = acc;
                }
            }
        }
        dy
    };

    let times = sample_grid(t_final, dt);
    let mut y = vec![0.0; n + n * n];
    y[..n].copy_from_slice(x0);
    for i in 0..n {
        y[n + i * n + i] = 1.0;
    }
    let mut base_states = Vec::with_capacity(times.len());
    let mut controls = Vec::with_capacity(times.len());
    let mut q = Vec::with_capacity(times.len());
    let mut kept_times = Vec::with_capacity(times.len());
    let mut truncated = false;
    for (idx, &t) in times.iter().enumerate() {
        if idx > 0 {
            let step = t - times[idx - 1];
            y = rk4_step(derivative, &y, step);
        }
        if !y.iter().all(|v| v.is_finite()) || norm_inf(&y[..n]) > OVERFLOW_GUARD {
            truncated = true;
            break;
        }
        kept_times.push(t);
        base_states.push(y[..n].to_vec());
        controls.push(law.call(&y[..n]));
        q.push(Matrix::from_vec(n, n, y[n..].to_vec()));
    }
    Ok(SensitivityTrajectory {
        base: Trajectory {
            times: kept_times,
            states: base_states,
            controls,
            truncated,
        },
        q,
    })
}

/// A sample of an embedding-system trajectory reinterpreted as an interval
/// box, flagged when the component order inverted (the embedding left the
/// ordered domain).
#[derive(Debug, Clone)]
pub struct EmbeddingSample {
    pub t: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub ordered: bool,
}

/// Integrates a 2n-dimensional embedding vector field from the pair
/// (lower, upper), reporting each sample as an interval box.
pub fn flow_embedding<E: Fn(&[f64]) -> Vec<f64>>(
    embedding: E,
    lower0: &[f64],
    upper0: &[f64],
    t_final: f64,
    dt: f64,
) -> Vec<EmbeddingSample> {
    assert_eq!(lower0.len(), upper0.len());
    let n = lower0.len();
    let times = sample_grid(t_final, dt);
    let mut y: Vec<f64> = lower0.iter().chain(upper0.iter()).copied().collect();
    let mut out = Vec::with_capacity(times.len());
    for (idx, &t) in times.iter().enumerate() {
        if idx > 0 {
            let step = t - times[idx - 1];
            y = rk4_step(&embedding, &y, step);
        }
        if !y.iter().all(|v| v.is_finite()) {
            break;
        }
        let lower = y[..n].to_vec();
        let upper = y[n..].to_vec();
        let ordered = lower
            .iter()
            .zip(&upper)
            .all(|(lo, hi)| lo <= &(hi + 1e-12));
        out.push(EmbeddingSample {
            t,
            lower,
            upper,
            ordered,
        });
    }
    out
}
