//! Fixed-step forward Euler reference solution.

use crate::machine::{Scenario, State, STATE_COUNT};
use crate::{Error, Result};

/// A system `ẋ = f(x, t)` evaluated as a whole vector.
pub trait Dynamics {
    fn dimension(&self) -> usize;

    fn derivatives(&self, x: &[f64], t: f64, out: &mut [f64]);

    fn state_name(&self, i: usize) -> String {
        format!("x{i}")
    }
}

/// States sampled on the uniform grid `t0 + k·dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTrajectory {
    pub t0: f64,
    pub dt: f64,
    pub names: Vec<String>,
    /// One array per state, all of the same length.
    pub values: Vec<Vec<f64>>,
}

impl DenseTrajectory {
    pub fn len(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.values[i]
    }

    /// State vector at sample `k`.
    pub fn sample(&self, k: usize) -> Vec<f64> {
        self.values.iter().map(|v| v[k]).collect()
    }

    pub fn last(&self) -> Vec<f64> {
        self.sample(self.len() - 1)
    }
}

/// `state + h·f(state, t)`. Fails when the result is not finite.
pub fn euler_step<D: Dynamics>(state: &[f64], t: f64, h: f64, model: &D) -> Result<Vec<f64>> {
    let mut rate = vec![0.0; state.len()];
    let mut next = state.to_vec();
    step_in_place(&mut next, &mut rate, t, h, model);
    if let Some(i) = next.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            atom: i,
            state: model.state_name(i),
            t: t + h,
        });
    }
    Ok(next)
}

#[inline]
fn step_in_place<D: Dynamics>(x: &mut [f64], rate: &mut [f64], t: f64, h: f64, model: &D) {
    model.derivatives(x, t, rate);
    for (x, r) in x.iter_mut().zip(rate.iter()) {
        *x += h * *r;
    }
}

/// Integrates `model` from `x0` over `[0, t_end]` with step `h`.
///
/// The run is declared unstable when a state leaves `±envelope[i]` or stops
/// being finite.
pub fn integrate<D: Dynamics>(
    model: &D,
    x0: &[f64],
    t_end: f64,
    h: f64,
    envelope: &[f64],
) -> Result<DenseTrajectory> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Config(format!("Euler step must be positive, got {h}")));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::Config(format!("t_end must be positive, got {t_end}")));
    }
    let n = model.dimension();
    if x0.len() != n || envelope.len() != n {
        return Err(Error::Config(format!(
            "dimension mismatch: model {n}, initial {}, envelope {}",
            x0.len(),
            envelope.len()
        )));
    }
    let steps = (t_end / h).round() as usize;
    let mut values: Vec<Vec<f64>> = x0
        .iter()
        .map(|&v| {
            let mut col = Vec::with_capacity(steps + 1);
            col.push(v);
            col
        })
        .collect();

    let mut x = x0.to_vec();
    let mut rate = vec![0.0; n];
    for k in 0..steps {
        step_in_place(&mut x, &mut rate, k as f64 * h, h, model);
        for (i, (&v, col)) in x.iter().zip(values.iter_mut()).enumerate() {
            if !(v.abs() <= envelope[i]) {
                return Err(Error::Unstable {
                    steps: k + 1,
                    t: (k + 1) as f64 * h,
                    state: model.state_name(i),
                    value: v,
                });
            }
            col.push(v);
        }
    }

    Ok(DenseTrajectory {
        t0: 0.0,
        dt: h,
        names: (0..n).map(|i| model.state_name(i)).collect(),
        values,
    })
}

/// Ten times the natural magnitude of each machine state: the initial stator
/// flux for every flux, the base frequency for the speed, a full turn for the
/// angle.
pub fn machine_envelope(x0: &[f64; STATE_COUNT], omega_b: f64) -> [f64; STATE_COUNT] {
    let flux_scale = x0[..5].iter().fold(0f64, |m, v| m.max(v.abs()));
    let mut env = [0.0; STATE_COUNT];
    for s in State::ALL {
        let natural = match s {
            State::OmegaR => omega_b,
            State::Theta => 2.0 * std::f64::consts::PI,
            _ => flux_scale,
        };
        env[s.index()] = 10.0 * natural.max(x0[s.index()].abs());
    }
    env
}

/// Forward Euler over the scenario's machine model from its open-circuit
/// equilibrium.
pub fn run_reference(scenario: &Scenario, h: f64) -> Result<DenseTrajectory> {
    let model = scenario.model()?;
    let x0 = model.initial_state();
    let envelope = machine_envelope(&x0, model.omega_b);
    integrate(&model, &x0, scenario.t_end, h, &envelope)
}
