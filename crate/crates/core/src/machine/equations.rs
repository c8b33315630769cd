//! Machine equations in the synchronous (Park) frame.
//!
//! Each right-hand side is written once here. The full-vector evaluation used
//! by the Euler reference and the per-atom evaluation used by the QSS engine
//! both go through these functions.

use super::params::{GridSpec, Inductances, MachineParams, TorqueProfile};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FluxState {
    pub psi_dr: f64,
    pub psi_q: f64,
    pub psi_f: f64,
    pub psi_kd: f64,
    pub psi_kq: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MechState {
    /// Rotor electrical speed (rad/s).
    pub omega_r: f64,
    /// Rotor angle relative to the synchronous frame (rad).
    pub theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CurrentSolution {
    pub i_dr: f64,
    pub i_qr: f64,
    pub i_f: f64,
    pub i_kd: f64,
    pub i_kq: f64,
}

#[inline]
fn row3(m: &[[f64; 3]; 3], r: usize, v: [f64; 3]) -> f64 {
    m[r][0] * v[0] + m[r][1] * v[1] + m[r][2] * v[2]
}

/// Stator, field and d-damper currents from the d-axis flux linkages.
pub fn solve_d_currents(psi_dr: f64, psi_f: f64, psi_kd: f64, ind: &Inductances) -> (f64, f64, f64) {
    let v = [psi_dr, psi_f, psi_kd];
    (row3(&ind.d_inv, 0, v), row3(&ind.d_inv, 1, v), row3(&ind.d_inv, 2, v))
}

/// Single row of [`solve_d_currents`]: 0 = stator, 1 = field, 2 = damper.
#[inline]
pub fn d_current(row: usize, psi_dr: f64, psi_f: f64, psi_kd: f64, ind: &Inductances) -> f64 {
    row3(&ind.d_inv, row, [psi_dr, psi_f, psi_kd])
}

/// Stator and q-damper currents from the q-axis flux linkages.
pub fn solve_q_currents(psi_q: f64, psi_kq: f64, ind: &Inductances) -> (f64, f64) {
    (q_current(0, psi_q, psi_kq, ind), q_current(1, psi_q, psi_kq, ind))
}

#[inline]
pub fn q_current(row: usize, psi_q: f64, psi_kq: f64, ind: &Inductances) -> f64 {
    ind.q_inv[row][0] * psi_q + ind.q_inv[row][1] * psi_kq
}

pub fn solve_currents(flux: &FluxState, ind: &Inductances) -> CurrentSolution {
    let (i_dr, i_f, i_kd) = solve_d_currents(flux.psi_dr, flux.psi_f, flux.psi_kd, ind);
    let (i_qr, i_kq) = solve_q_currents(flux.psi_q, flux.psi_kq, ind);
    CurrentSolution {
        i_dr,
        i_qr,
        i_f,
        i_kd,
        i_kq,
    }
}

#[inline]
pub fn d_axis_flux_rate(v_d: f64, i_dr: f64, omega_r: f64, psi_q: f64, r_s: f64) -> f64 {
    v_d - r_s * i_dr + omega_r * psi_q
}

#[inline]
pub fn q_axis_flux_rate(v_q: f64, i_qr: f64, omega_r: f64, psi_dr: f64, r_s: f64) -> f64 {
    v_q - r_s * i_qr - omega_r * psi_dr
}

#[inline]
pub fn field_flux_rate(e_fd: f64, i_f: f64, r_f: f64) -> f64 {
    e_fd - i_f * r_f
}

#[inline]
pub fn damper_flux_rate(i: f64, r: f64) -> f64 {
    -i * r
}

/// Time derivatives of `[ψ_dr, ψ_q, ψ_F, ψ_D, ψ_Q]`.
pub fn flux_derivatives(
    flux: &FluxState,
    mech: &MechState,
    v_d: f64,
    v_q: f64,
    currents: &CurrentSolution,
    params: &MachineParams,
    e_fd: f64,
) -> [f64; 5] {
    [
        d_axis_flux_rate(v_d, currents.i_dr, mech.omega_r, flux.psi_q, params.r_s),
        q_axis_flux_rate(v_q, currents.i_qr, mech.omega_r, flux.psi_dr, params.r_s),
        field_flux_rate(e_fd, currents.i_f, params.r_f),
        damper_flux_rate(currents.i_kd, params.r_d),
        damper_flux_rate(currents.i_kq, params.r_q),
    ]
}

/// Air-gap torque `i_qr·ψ_dr − i_dr·ψ_q`.
#[inline]
pub fn electrical_torque(psi_dr: f64, psi_q: f64, i_dr: f64, i_qr: f64) -> f64 {
    i_qr * psi_dr - i_dr * psi_q
}

/// `(n/J)(T_m − T_e)`: positive shaft torque accelerates the rotor.
pub fn speed_derivative(flux: &FluxState, currents: &CurrentSolution, t_m: f64, params: &MachineParams) -> f64 {
    let t_e = electrical_torque(flux.psi_dr, flux.psi_q, currents.i_dr, currents.i_qr);
    speed_rate(t_e, t_m, params)
}

#[inline]
pub fn speed_rate(t_e: f64, t_m: f64, params: &MachineParams) -> f64 {
    params.pole_pairs as f64 / params.j * (t_m - t_e)
}

#[inline]
pub fn angle_derivative(omega_r: f64, omega_b: f64) -> f64 {
    omega_r - omega_b
}

/// Infinite-bus voltage in the rotor's dq frame, q-axis aligned at `θ = 0`.
pub fn bus_voltage_dq(theta: f64, grid: &GridSpec) -> (f64, f64) {
    bus_voltage_from_peak(theta, grid.peak_phase_voltage())
}

#[inline]
pub fn bus_voltage_from_peak(theta: f64, v_m: f64) -> (f64, f64) {
    let (s, c) = theta.sin_cos();
    (-v_m * s, v_m * c)
}

/// Prime-mover torque at time `t`.
pub fn torque_at(t: f64, profile: &TorqueProfile, params: &MachineParams) -> f64 {
    let full = profile.fraction * params.t_rated;
    if t < profile.t_start {
        0.0
    } else if t >= profile.t_end {
        full
    } else {
        full * (t - profile.t_start) / (profile.t_end - profile.t_start)
    }
}

/// Open-circuit equilibrium in phase with the bus. Returns the fluxes, the
/// mechanical state and the field voltage that holds it.
pub fn init_steady_state(params: &MachineParams, grid: &GridSpec) -> (FluxState, MechState, f64) {
    let omega_b = grid.omega_b();
    let psi_dr = grid.peak_phase_voltage() / omega_b;
    let i_f = psi_dr / params.l_md;
    let flux = FluxState {
        psi_dr,
        psi_q: 0.0,
        psi_f: (params.l_f + params.l_md) * i_f,
        psi_kd: params.l_md * i_f,
        psi_kq: 0.0,
    };
    let mech = MechState {
        omega_r: omega_b,
        theta: 0.0,
    };
    (flux, mech, params.r_f * i_f)
}

/// Active and reactive power at the machine terminals, `(P, Q)`.
pub fn power_output(v_d: f64, v_q: f64, i_dr: f64, i_qr: f64) -> (f64, f64) {
    (1.5 * (v_d * i_dr + v_q * i_qr), 1.5 * (v_q * i_dr - v_d * i_qr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn decoupled_d(l: f64) -> MachineParams {
        MachineParams {
            l_md: 0.0,
            l_l: l,
            l_f: l,
            l_d: l,
            ..MachineParams::default()
        }
    }

    /// Dense Gaussian elimination with partial pivoting.
    #[allow(clippy::needless_range_loop)]
    fn gauss<const N: usize>(mut a: [[f64; N]; N], mut b: [f64; N]) -> [f64; N] {
        for col in 0..N {
            let piv = (col..N).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
            a.swap(col, piv);
            b.swap(col, piv);
            for row in col + 1..N {
                let m = a[row][col] / a[col][col];
                for k in col..N {
                    a[row][k] -= m * a[col][k];
                }
                b[row] -= m * b[col];
            }
        }
        let mut x = [0.0; N];
        for row in (0..N).rev() {
            let s: f64 = (row + 1..N).map(|k| a[row][k] * x[k]).sum();
            x[row] = (b[row] - s) / a[row][row];
        }
        x
    }

    #[test]
    fn d_currents() {
        let ind = Inductances::new(&MachineParams::default()).unwrap();
        assert_eq!(solve_d_currents(0.0, 0.0, 0.0, &ind), (0.0, 0.0, 0.0));

        // decoupled axes reduce to a diagonal system
        let ind = Inductances::new(&decoupled_d(1.0)).unwrap();
        let (a, b, c) = solve_d_currents(2.0, 3.0, 4.0, &ind);
        assert_relative_eq!(a, 2.0);
        assert_relative_eq!(b, 3.0);
        assert_relative_eq!(c, 4.0);
    }

    #[test]
    fn d_currents_match_dense_solve() {
        let p = MachineParams::default();
        let ind = Inductances::new(&p).unwrap();
        let expected = gauss(Inductances::d_matrix(&p), [1.0, 1.0, 1.0]);
        let (a, b, c) = solve_d_currents(1.0, 1.0, 1.0, &ind);
        for (got, want) in [a, b, c].into_iter().zip(expected) {
            assert_relative_eq!(got, want, max_relative = 1e-9);
        }
    }

    #[test]
    fn q_currents() {
        let p = MachineParams {
            l_mq: 0.0,
            l_l: 0.5,
            l_q: 0.5,
            ..MachineParams::default()
        };
        let ind = Inductances::new(&p).unwrap();
        assert_eq!(solve_q_currents(0.0, 0.0, &ind), (0.0, 0.0));
        let (a, b) = solve_q_currents(1.0, 2.0, &ind);
        assert_relative_eq!(a, 2.0);
        assert_relative_eq!(b, 4.0);

        let p = MachineParams::default();
        let ind = Inductances::new(&p).unwrap();
        let expected = gauss(Inductances::q_matrix(&p), [0.3, -0.1]);
        let (a, b) = solve_q_currents(0.3, -0.1, &ind);
        assert_relative_eq!(a, expected[0], max_relative = 1e-9);
        assert_relative_eq!(b, expected[1], max_relative = 1e-9);
    }

    #[test]
    fn singular_inductances_rejected_at_load() {
        let p = MachineParams {
            l_l: 0.0,
            l_f: 0.0,
            l_d: 0.0,
            ..MachineParams::default()
        };
        assert!(Inductances::new(&p).is_err());
    }

    #[test]
    fn flux_rates_term_by_term() {
        let p = MachineParams::default();
        let zero = CurrentSolution::default();
        let flux = FluxState::default();
        let mech = MechState {
            omega_r: 314.0,
            theta: 0.0,
        };
        let d = flux_derivatives(&flux, &mech, 0.0, 0.0, &zero, &p, 10.0);
        assert_eq!(d[0], 0.0);
        assert_eq!(d[2], 10.0);
        assert_eq!(d[3], 0.0);
        assert_eq!(d[4], 0.0);
    }

    #[test]
    fn speed_rate_sign_and_balance() {
        let p = MachineParams::default();
        let zero = CurrentSolution::default();
        let flux = FluxState::default();
        assert_eq!(speed_derivative(&flux, &zero, 0.0, &p), 0.0);
        assert!(speed_derivative(&flux, &zero, 1000.0, &p) > 0.0);

        let p = MachineParams {
            j: 1000.0,
            pole_pairs: 1,
            ..p
        };
        let flux = FluxState {
            psi_dr: 50.0,
            ..FluxState::default()
        };
        let currents = CurrentSolution {
            i_qr: 100.0,
            ..CurrentSolution::default()
        };
        assert_eq!(speed_derivative(&flux, &currents, 5000.0, &p), 0.0);
    }

    #[test]
    fn angle_rate() {
        let wb = 100.0 * std::f64::consts::PI;
        assert_eq!(angle_derivative(wb, wb), 0.0);
        assert_relative_eq!(angle_derivative(wb + 0.1, wb), 0.1, epsilon = 1e-12);
    }

    #[test]
    fn bus_voltage() {
        let grid = GridSpec::default();
        let v_m = 20_000.0 * 2f64.sqrt() / 3f64.sqrt();
        assert_relative_eq!(v_m, 16_329.93, max_relative = 1e-6);
        let (vd, vq) = bus_voltage_dq(0.0, &grid);
        assert_eq!(vd, 0.0);
        assert_relative_eq!(vq, v_m, max_relative = 1e-15);
        let (vd, vq) = bus_voltage_dq(std::f64::consts::FRAC_PI_2, &grid);
        assert_relative_eq!(vd, -v_m, max_relative = 1e-15);
        assert!(vq.abs() < 1e-9);
        for k in 0..100 {
            let (vd, vq) = bus_voltage_dq(k as f64 * 0.37 - 10.0, &grid);
            assert_relative_eq!(vd.hypot(vq), v_m, max_relative = 1e-12);
        }
    }

    #[test]
    fn torque_ramp() {
        let p = MachineParams::default();
        let prof = TorqueProfile::default();
        assert_eq!(torque_at(0.0, &prof, &p), 0.0);
        assert_eq!(torque_at(10.0, &prof, &p), 0.0);
        assert_relative_eq!(torque_at(17.5, &prof, &p), 0.125 * p.t_rated);
        assert_eq!(torque_at(20.0, &prof, &p), 0.25 * p.t_rated);
        assert_eq!(torque_at(25.0, &prof, &p), 0.25 * p.t_rated);
    }

    #[test]
    fn open_circuit_equilibrium() {
        let p = MachineParams::default();
        let grid = GridSpec::default();
        let ind = Inductances::new(&p).unwrap();
        let (flux, mech, e_fd) = init_steady_state(&p, &grid);
        assert_relative_eq!(mech.omega_r, 100.0 * std::f64::consts::PI);
        assert_eq!(mech.theta, 0.0);

        let c = solve_currents(&flux, &ind);
        let i_f = flux.psi_dr / p.l_md;
        assert!(c.i_dr.abs() <= 1e-9 * i_f);
        assert!(c.i_qr == 0.0 && c.i_kq == 0.0);
        assert!(c.i_kd.abs() <= 1e-9 * i_f);
        assert_relative_eq!(c.i_f, i_f, max_relative = 1e-9);

        let (vd, vq) = bus_voltage_dq(mech.theta, &grid);
        let d = flux_derivatives(&flux, &mech, vd, vq, &c, &p, e_fd);
        // relative to the size of the largest term in each equation
        let scale = grid.peak_phase_voltage();
        for rate in d {
            assert!(rate.abs() <= 1e-9 * scale, "{d:?}");
        }
        assert!(speed_derivative(&flux, &c, 0.0, &p).abs() < 1e-9);
        assert_eq!(angle_derivative(mech.omega_r, grid.omega_b()), 0.0);
    }

    #[test]
    fn power() {
        assert_eq!(power_output(0.0, 100.0, 0.0, 0.0), (0.0, 0.0));
        let (p, q) = power_output(0.0, 100.0, 0.0, 3.0);
        assert_eq!(p, 450.0);
        assert_eq!(q, 0.0);
    }
}
