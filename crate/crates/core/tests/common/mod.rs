#![allow(dead_code)]

use liqss::machine::{MachineModel, STATE_COUNT};
use liqss::qss::{DependencyGraph, QssModel, RunOutput, Simulator};
use liqss::reference::Dynamics;
use nalgebra::{Matrix2, Vector2};

/// `ẋ = A x` with a dense 2×2 `A`.
#[derive(Debug, Clone, Copy)]
pub struct Linear2 {
    pub a: [[f64; 2]; 2],
}

/// Eigenvalues −1 and −1001: time constants of 1 s and about 1 ms.
pub const STIFF: Linear2 = Linear2 {
    a: [[-1000.0, 999.0], [1.0, -2.0]],
};

/// Eigenvalues −1 and −3, no stiffness.
pub const MILD: Linear2 = Linear2 {
    a: [[-2.0, 1.0], [1.0, -2.0]],
};

impl QssModel for Linear2 {
    fn dimension(&self) -> usize {
        2
    }

    fn derivative(&self, atom: usize, q: &[f64], _t: f64) -> f64 {
        self.a[atom][0] * q[0] + self.a[atom][1] * q[1]
    }
}

impl Linear2 {
    pub fn simulate(&self, x0: [f64; 2], dq: f64, t_end: f64) -> RunOutput {
        let graph = DependencyGraph::from_reads(&[vec![0, 1], vec![0, 1]]);
        Simulator::new(*self, graph, &x0, &[dq, dq])
            .expect("valid linear system")
            .run(t_end)
            .expect("linear run")
    }

    /// `exp(A t) x0`.
    pub fn exact(&self, x0: [f64; 2], t: f64) -> [f64; 2] {
        let a = Matrix2::new(self.a[0][0], self.a[0][1], self.a[1][0], self.a[1][1]);
        let x = (a * t).exp() * Vector2::new(x0[0], x0[1]);
        [x[0], x[1]]
    }

    /// Largest deviation of the held LIQSS output from the analytic solution,
    /// over both states and a uniform grid of `samples + 1` points.
    pub fn max_error(&self, x0: [f64; 2], dq: f64, t_end: f64, samples: usize) -> f64 {
        let run = self.simulate(x0, dq, t_end);
        let mut err = 0f64;
        let mut next = [1usize; 2];
        for k in 0..=samples {
            let t = t_end * k as f64 / samples as f64;
            let exact = self.exact(x0, t);
            for i in 0..2 {
                let tr = &run.trajectories[i];
                while next[i] < tr.times.len() && tr.times[next[i]] <= t {
                    next[i] += 1;
                }
                err = err.max((tr.values[next[i] - 1] - exact[i]).abs());
            }
        }
        err
    }
}

/// Central-difference Jacobian of the machine at `x` with shaft torque `t_m`.
pub fn machine_jacobian(model: &MachineModel, x: &[f64; STATE_COUNT], t_m: f64) -> nalgebra::SMatrix<f64, 7, 7> {
    let mut jac = nalgebra::SMatrix::<f64, 7, 7>::zeros();
    let mut plus = [0.0; STATE_COUNT];
    let mut minus = [0.0; STATE_COUNT];
    for j in 0..STATE_COUNT {
        let h = 1e-6 * x[j].abs().max(1.0);
        let mut xp = *x;
        let mut xm = *x;
        xp[j] += h;
        xm[j] -= h;
        model.derivatives_with_torque(&xp, t_m, &mut plus);
        model.derivatives_with_torque(&xm, t_m, &mut minus);
        for i in 0..STATE_COUNT {
            jac[(i, j)] = (plus[i] - minus[i]) / (2.0 * h);
        }
    }
    jac
}

/// Runs the exact-torque model to `t_end` with forward Euler and returns the
/// final state.
pub fn settle(model: &MachineModel, t_end: f64, h: f64) -> [f64; STATE_COUNT] {
    let mut x = model.initial_state();
    let mut rate = [0.0; STATE_COUNT];
    let steps = (t_end / h).round() as usize;
    for k in 0..steps {
        model.derivatives(&x, k as f64 * h, &mut rate);
        for i in 0..STATE_COUNT {
            x[i] += h * rate[i];
        }
    }
    x
}

/// `(max − mean, mean − min)` folded into the largest distance from the mean.
pub fn deviation_from_mean(values: &[f64]) -> f64 {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max)
}
