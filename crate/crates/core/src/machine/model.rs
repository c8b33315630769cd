use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::equations::*;
use super::params::{GridSpec, Inductances, MachineParams, TorqueProfile};
use crate::qss::{DependencyGraph, QssModel, Simulator};
use crate::reference::Dynamics;
use crate::{Error, Result};

/// The seven machine states, in declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum State {
    PsiDr,
    PsiQ,
    PsiF,
    PsiKd,
    PsiKq,
    OmegaR,
    Theta,
}

pub const STATE_COUNT: usize = 7;

impl State {
    pub const ALL: [State; STATE_COUNT] = [
        State::PsiDr,
        State::PsiQ,
        State::PsiF,
        State::PsiKd,
        State::PsiKq,
        State::OmegaR,
        State::Theta,
    ];

    pub fn name(self) -> &'static str {
        match self {
            State::PsiDr => "psi_dr",
            State::PsiQ => "psi_q",
            State::PsiF => "psi_F",
            State::PsiKd => "psi_D",
            State::PsiKq => "psi_Q",
            State::OmegaR => "omega_r",
            State::Theta => "theta",
        }
    }

    pub fn from_name(name: &str) -> Option<State> {
        State::ALL.into_iter().find(|s| s.name() == name)
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_flux(self) -> bool {
        !matches!(self, State::OmegaR | State::Theta)
    }

    /// States whose quantized output `f_self` reads, including itself.
    pub fn reads(self) -> &'static [State] {
        use State::*;
        match self {
            PsiDr => &[PsiDr, PsiQ, PsiF, PsiKd, OmegaR, Theta],
            PsiQ => &[PsiQ, PsiKq, PsiDr, OmegaR, Theta],
            PsiF => &[PsiDr, PsiF, PsiKd],
            PsiKd => &[PsiDr, PsiF, PsiKd],
            PsiKq => &[PsiQ, PsiKq],
            OmegaR => &[PsiDr, PsiQ, PsiF, PsiKd, PsiKq],
            Theta => &[OmegaR],
        }
    }
}

pub fn state_names() -> Vec<String> {
    State::ALL.iter().map(|s| s.name().to_string()).collect()
}

/// Quantum sizes in model units (Wb, rad/s, rad).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Quanta {
    pub flux_dq: f64,
    pub speed_dq: f64,
    pub angle_dq: f64,
    /// Per-state overrides keyed by state name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub overrides: BTreeMap<String, f64>,
}

impl Default for Quanta {
    fn default() -> Self {
        Self::uniform(1e-4)
    }
}

impl Quanta {
    /// `dq` for the fluxes and the angle, `dq / 10` for the speed.
    pub fn uniform(dq: f64) -> Self {
        Self {
            flux_dq: dq,
            speed_dq: dq / 10.0,
            angle_dq: dq,
            overrides: BTreeMap::new(),
        }
    }

    /// Every state gets its own explicit quantum.
    pub fn explicit(per_state: [f64; STATE_COUNT]) -> Self {
        let mut q = Self::uniform(1e-4);
        for (s, dq) in State::ALL.into_iter().zip(per_state) {
            q.overrides.insert(s.name().to_string(), dq);
        }
        q
    }

    pub fn per_state(&self) -> Result<[f64; STATE_COUNT]> {
        let mut out = [0.0; STATE_COUNT];
        for s in State::ALL {
            out[s.index()] = match s {
                State::OmegaR => self.speed_dq,
                State::Theta => self.angle_dq,
                _ => self.flux_dq,
            };
        }
        for (name, &dq) in &self.overrides {
            let s = State::from_name(name)
                .ok_or_else(|| Error::Config(format!("quanta override names unknown state `{name}`")))?;
            out[s.index()] = dq;
        }
        for s in State::ALL {
            let dq = out[s.index()];
            if !(dq > 0.0 && dq.is_finite()) {
                return Err(Error::Config(format!("quantum of `{}` must be positive, got {dq}", s.name())));
            }
        }
        Ok(out)
    }
}

/// Everything needed to run the reference scenario once.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub params: MachineParams,
    pub grid: GridSpec,
    pub torque: TorqueProfile,
    pub quanta: Quanta,
    /// Simulated horizon (s).
    pub t_end: f64,
    /// Euler step of the reference solution (s).
    pub euler_dt: f64,
    /// Period at which the QSS engine sees the torque ramp change (s).
    pub input_dt: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            params: MachineParams::default(),
            grid: GridSpec::default(),
            torque: TorqueProfile::default(),
            quanta: Quanta::default(),
            t_end: 50.0,
            euler_dt: 1e-4,
            input_dt: 1e-3,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.grid.validate()?;
        self.torque.validate()?;
        self.quanta.per_state()?;
        for (name, v) in [("t_end", self.t_end), ("euler_dt", self.euler_dt), ("input_dt", self.input_dt)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("solver.{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn model(&self) -> Result<MachineModel> {
        self.validate()?;
        MachineModel::new(self.params, self.grid, self.torque, self.input_dt)
    }

    /// A LIQSS1 simulator initialized at the open-circuit equilibrium.
    pub fn simulator(&self) -> Result<Simulator<MachineModel>> {
        let setup = build_atoms(self.model()?, &self.quanta)?;
        Simulator::new(setup.model, setup.graph, &setup.initial, &setup.quanta)
    }
}

/// The machine on the infinite bus with its torque schedule.
///
/// Implements [`Dynamics`] with the exact torque ramp for the reference
/// solver, and [`QssModel`] with the ramp held piecewise constant over
/// `input_dt` (sampled at mid-interval) so that it reaches the event engine as
/// discrete input changes.
#[derive(Debug, Clone, PartialEq)]
pub struct MachineModel {
    pub params: MachineParams,
    pub grid: GridSpec,
    pub torque: TorqueProfile,
    pub inductances: Inductances,
    pub e_fd: f64,
    pub omega_b: f64,
    pub v_m: f64,
    input_dt: f64,
    ramp_steps: usize,
    initial: [f64; STATE_COUNT],
    input_atoms: [usize; 1],
}

impl MachineModel {
    pub fn new(params: MachineParams, grid: GridSpec, torque: TorqueProfile, input_dt: f64) -> Result<Self> {
        params.validate()?;
        grid.validate()?;
        torque.validate()?;
        if !(input_dt > 0.0 && input_dt.is_finite()) {
            return Err(Error::Config(format!("solver.input_dt must be positive, got {input_dt}")));
        }
        let inductances = Inductances::new(&params)?;
        let (flux, mech, e_fd) = init_steady_state(&params, &grid);
        let initial = [
            flux.psi_dr,
            flux.psi_q,
            flux.psi_f,
            flux.psi_kd,
            flux.psi_kq,
            mech.omega_r,
            mech.theta,
        ];
        let ramp_steps = (((torque.t_end - torque.t_start) / input_dt) - 1e-9).ceil().max(1.0) as usize;
        Ok(Self {
            params,
            grid,
            torque,
            inductances,
            e_fd,
            omega_b: grid.omega_b(),
            v_m: grid.peak_phase_voltage(),
            input_dt,
            ramp_steps,
            initial,
            input_atoms: [State::OmegaR.index()],
        })
    }

    /// The open-circuit equilibrium the scenario starts from.
    pub fn initial_state(&self) -> [f64; STATE_COUNT] {
        self.initial
    }

    pub fn torque_at(&self, t: f64) -> f64 {
        torque_at(t, &self.torque, &self.params)
    }

    fn ramp_breakpoint(&self, k: usize) -> f64 {
        if k >= self.ramp_steps {
            self.torque.t_end
        } else {
            self.torque.t_start + k as f64 * self.input_dt
        }
    }

    /// Index of the held-input interval containing `t`; `None` before the ramp.
    fn ramp_interval(&self, t: f64) -> Option<usize> {
        if t < self.torque.t_start {
            return None;
        }
        if t >= self.torque.t_end {
            return Some(self.ramp_steps);
        }
        let k = ((t - self.torque.t_start) / self.input_dt + 1e-9).floor() as usize;
        Some(k.min(self.ramp_steps - 1))
    }

    /// Shaft torque as seen by the QSS engine.
    pub fn held_torque(&self, t: f64) -> f64 {
        match self.ramp_interval(t) {
            None => 0.0,
            Some(k) if k >= self.ramp_steps => self.torque_at(self.torque.t_end),
            Some(k) => {
                let mid = 0.5 * (self.ramp_breakpoint(k) + self.ramp_breakpoint(k + 1));
                self.torque_at(mid)
            }
        }
    }

    /// Currents at a full state vector.
    pub fn currents(&self, x: &[f64]) -> CurrentSolution {
        solve_currents(&flux_of(x), &self.inductances)
    }

    /// `(P, Q)` exchanged with the bus at a full state vector.
    pub fn power(&self, x: &[f64]) -> (f64, f64) {
        let c = self.currents(x);
        let (v_d, v_q) = bus_voltage_from_peak(x[State::Theta.index()], self.v_m);
        power_output(v_d, v_q, c.i_dr, c.i_qr)
    }

    /// All seven derivatives at `x` with shaft torque `t_m`.
    pub fn derivatives_with_torque(&self, x: &[f64], t_m: f64, out: &mut [f64]) {
        let flux = flux_of(x);
        let mech = MechState {
            omega_r: x[State::OmegaR.index()],
            theta: x[State::Theta.index()],
        };
        let currents = solve_currents(&flux, &self.inductances);
        let (v_d, v_q) = bus_voltage_from_peak(mech.theta, self.v_m);
        let fluxes = flux_derivatives(&flux, &mech, v_d, v_q, &currents, &self.params, self.e_fd);
        out[..5].copy_from_slice(&fluxes);
        out[State::OmegaR.index()] = speed_derivative(&flux, &currents, t_m, &self.params);
        out[State::Theta.index()] = angle_derivative(mech.omega_r, self.omega_b);
    }

    /// One derivative evaluated from only the states it reads.
    pub fn component(&self, state: State, q: &[f64], t_m: f64) -> f64 {
        use State::*;
        let p = &self.params;
        let ind = &self.inductances;
        let [psi_dr, psi_q, psi_f, psi_kd, psi_kq, omega_r, theta] = [q[0], q[1], q[2], q[3], q[4], q[5], q[6]];
        match state {
            PsiDr => {
                let i_dr = d_current(0, psi_dr, psi_f, psi_kd, ind);
                let v_d = bus_voltage_from_peak(theta, self.v_m).0;
                d_axis_flux_rate(v_d, i_dr, omega_r, psi_q, p.r_s)
            }
            PsiQ => {
                let i_qr = q_current(0, psi_q, psi_kq, ind);
                let v_q = bus_voltage_from_peak(theta, self.v_m).1;
                q_axis_flux_rate(v_q, i_qr, omega_r, psi_dr, p.r_s)
            }
            PsiF => field_flux_rate(self.e_fd, d_current(1, psi_dr, psi_f, psi_kd, ind), p.r_f),
            PsiKd => damper_flux_rate(d_current(2, psi_dr, psi_f, psi_kd, ind), p.r_d),
            PsiKq => damper_flux_rate(q_current(1, psi_q, psi_kq, ind), p.r_q),
            OmegaR => {
                let i_dr = d_current(0, psi_dr, psi_f, psi_kd, ind);
                let i_qr = q_current(0, psi_q, psi_kq, ind);
                speed_rate(electrical_torque(psi_dr, psi_q, i_dr, i_qr), t_m, p)
            }
            Theta => angle_derivative(omega_r, self.omega_b),
        }
    }
}

fn flux_of(x: &[f64]) -> FluxState {
    FluxState {
        psi_dr: x[0],
        psi_q: x[1],
        psi_f: x[2],
        psi_kd: x[3],
        psi_kq: x[4],
    }
}

impl Dynamics for MachineModel {
    fn dimension(&self) -> usize {
        STATE_COUNT
    }

    fn derivatives(&self, x: &[f64], t: f64, out: &mut [f64]) {
        self.derivatives_with_torque(x, self.torque_at(t), out);
    }

    fn state_name(&self, i: usize) -> String {
        State::ALL[i].name().to_string()
    }
}

impl QssModel for MachineModel {
    fn dimension(&self) -> usize {
        STATE_COUNT
    }

    fn derivative(&self, atom: usize, q: &[f64], t: f64) -> f64 {
        let state = State::ALL[atom];
        let t_m = if state == State::OmegaR { self.held_torque(t) } else { 0.0 };
        self.component(state, q, t_m)
    }

    fn state_name(&self, atom: usize) -> String {
        State::ALL[atom].name().to_string()
    }

    fn next_input_change(&self, t: f64) -> f64 {
        if self.torque.fraction == 0.0 {
            return f64::INFINITY;
        }
        match self.ramp_interval(t) {
            None => self.torque.t_start,
            Some(k) if k >= self.ramp_steps => f64::INFINITY,
            Some(k) => self.ramp_breakpoint(k + 1),
        }
    }

    fn input_dependents(&self) -> &[usize] {
        &self.input_atoms
    }
}

/// The machine split into atoms.
#[derive(Debug, Clone)]
pub struct AtomSetup {
    pub model: MachineModel,
    pub graph: DependencyGraph,
    pub initial: [f64; STATE_COUNT],
    pub quanta: [f64; STATE_COUNT],
}

/// One atom per state, with dependency edges taken from which states each
/// derivative reads.
pub fn build_atoms(model: MachineModel, quanta: &Quanta) -> Result<AtomSetup> {
    let reads: Vec<Vec<usize>> = State::ALL
        .iter()
        .map(|s| s.reads().iter().map(|r| r.index()).collect())
        .collect();
    Ok(AtomSetup {
        graph: DependencyGraph::from_reads(&reads),
        initial: model.initial_state(),
        quanta: quanta.per_state()?,
        model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> MachineModel {
        Scenario::default().model().unwrap()
    }

    #[test]
    fn figure_edges() {
        let setup = build_atoms(model(), &Quanta::default()).unwrap();
        let g = &setup.graph;
        use State::*;
        assert!(g.has_edge(PsiDr.index(), OmegaR.index()));
        assert!(g.has_edge(OmegaR.index(), Theta.index()));
        assert!(g.has_edge(Theta.index(), PsiDr.index()));
        assert!(!g.has_edge(PsiF.index(), Theta.index()));
        assert_eq!(g.dependents(Theta.index()), &[PsiDr.index(), PsiQ.index()]);
    }

    #[test]
    fn default_quanta() {
        let dq = Quanta::default().per_state().unwrap();
        assert_eq!(dq, [1e-4, 1e-4, 1e-4, 1e-4, 1e-4, 1e-5, 1e-4]);
    }

    #[test]
    fn quanta_overrides() {
        let mut q = Quanta::default();
        q.overrides.insert("omega_r".into(), 1e-7);
        assert_eq!(q.per_state().unwrap()[5], 1e-7);
        q.overrides.insert("nope".into(), 1.0);
        assert!(q.per_state().is_err());
    }

    #[test]
    fn component_matches_full_evaluation() {
        let m = model();
        let mut x = m.initial_state();
        x[1] += 0.7;
        x[3] -= 0.2;
        x[4] += 0.1;
        x[5] += 0.3;
        x[6] = 0.4;
        let mut full = [0.0; STATE_COUNT];
        m.derivatives_with_torque(&x, 1e5, &mut full);
        for s in State::ALL {
            let one = m.component(s, &x, 1e5);
            assert!((one - full[s.index()]).abs() <= 1e-12 * full[s.index()].abs().max(1.0), "{s:?}");
        }
    }

    #[test]
    fn held_torque_tracks_ramp() {
        let m = model();
        assert_eq!(m.held_torque(0.0), 0.0);
        assert_eq!(m.held_torque(14.999), 0.0);
        let full = 0.25 * m.params.t_rated;
        assert_eq!(m.held_torque(20.0), full);
        assert_eq!(m.held_torque(30.0), full);
        // mid-interval sample over [15, 15.001)
        let first = m.held_torque(15.0);
        assert!((first - m.torque_at(15.0005)).abs() < 1e-6 * full);

        let mut t = 0.0;
        let mut changes = 0;
        loop {
            let next = QssModel::next_input_change(&m, t);
            if next.is_infinite() {
                break;
            }
            assert!(next > t);
            // the held value at a breakpoint belongs to the interval it opens
            let interval = m.ramp_interval(next).unwrap();
            assert!((m.ramp_breakpoint(interval) - next).abs() < 1e-9);
            t = next;
            changes += 1;
        }
        assert_eq!(changes, 5001);
        assert_eq!(t, 20.0);
    }

    #[test]
    fn zero_torque_has_no_input_events() {
        let sc = Scenario {
            torque: TorqueProfile::zero(),
            ..Scenario::default()
        };
        let m = sc.model().unwrap();
        assert_eq!(QssModel::next_input_change(&m, 0.0), f64::INFINITY);
    }
}
