use super::atom::{advance_internal, next_event_time, select, update_linear_coefficient, Branch, QssAtom, TIME_TOLERANCE};
use super::graph::DependencyGraph;
use super::schedule::EventSchedule;
use crate::{Error, Result};

/// A system of first-order ODEs `ẋ = f(q, u(t))` evaluated one component at a
/// time on the quantized state vector.
pub trait QssModel {
    fn dimension(&self) -> usize;

    /// `f_atom(q, u(t))`.
    fn derivative(&self, atom: usize, q: &[f64], t: f64) -> f64;

    fn state_name(&self, atom: usize) -> String {
        format!("x{atom}")
    }

    /// Time of the next change of the piecewise-constant external input,
    /// strictly after `t`. Models without inputs never change.
    fn next_input_change(&self, _t: f64) -> f64 {
        f64::INFINITY
    }

    /// Atoms whose derivative reads the external input.
    fn input_dependents(&self) -> &[usize] {
        &[]
    }
}

/// The recorded quantized output of one atom: its initial value at `t = 0`
/// followed by every change.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventTrajectory {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl EventTrajectory {
    pub fn new(t0: f64, q0: f64) -> Self {
        Self {
            times: vec![t0],
            values: vec![q0],
        }
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Self {
        let (times, values) = pairs.iter().copied().unzip();
        Self { times, values }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.values.iter().copied())
    }

    /// Number of recorded changes (the initial record excluded) with
    /// `start <= t < end`.
    pub fn changes_in(&self, start: f64, end: f64) -> usize {
        let changes = self.times.get(1..).unwrap_or(&[]);
        let lo = changes.partition_point(|&t| t < start);
        let hi = changes.partition_point(|&t| t < end);
        hi.saturating_sub(lo)
    }

    fn push(&mut self, t: f64, q: f64) {
        // a second change at the same instant replaces the first
        if self.times.len() > 1 && self.times.last() == Some(&t) {
            self.times.pop();
            self.values.pop();
        }
        if self.values.last() == Some(&q) && self.times.len() > 1 {
            return;
        }
        self.times.push(t);
        self.values.push(q);
    }
}

/// Result of [`Simulator::run`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub names: Vec<String>,
    pub trajectories: Vec<EventTrajectory>,
    pub update_counts: Vec<u64>,
    pub t_end: f64,
}

impl RunOutput {
    pub fn total_updates(&self) -> u64 {
        self.update_counts.iter().sum()
    }

    /// Updates of all atoms with `start <= t < end`.
    pub fn updates_in(&self, start: f64, end: f64) -> usize {
        self.trajectories.iter().map(|tr| tr.changes_in(start, end)).sum()
    }
}

/// LIQSS1 event loop over a [`QssModel`].
///
/// A simulator owns all of its state; independent instances can run on
/// separate threads.
#[derive(Debug, Clone)]
pub struct Simulator<M> {
    model: M,
    graph: DependencyGraph,
    atoms: Vec<QssAtom>,
    q: Vec<f64>,
    schedule: EventSchedule,
    trajectories: Vec<EventTrajectory>,
    next_input: f64,
    time: f64,
}

impl<M: QssModel> Simulator<M> {
    /// Initializes every atom at `initial` with `q = x`, evaluates the
    /// derivatives on that quantized vector and schedules the first events.
    pub fn new(model: M, graph: DependencyGraph, initial: &[f64], quanta: &[f64]) -> Result<Self> {
        let n = model.dimension();
        if n == 0 {
            return Err(Error::Config("a QSS system needs at least one atom".into()));
        }
        if graph.len() != n || initial.len() != n || quanta.len() != n {
            return Err(Error::Config(format!(
                "dimension mismatch: model {n}, graph {}, initial {}, quanta {}",
                graph.len(),
                initial.len(),
                quanta.len()
            )));
        }
        for (i, (&x0, &dq)) in initial.iter().zip(quanta).enumerate() {
            if !(dq > 0.0 && dq.is_finite()) {
                return Err(Error::Config(format!(
                    "quantum of `{}` must be positive and finite, got {dq}",
                    model.state_name(i)
                )));
            }
            if !x0.is_finite() {
                return Err(Error::Config(format!(
                    "initial value of `{}` is not finite",
                    model.state_name(i)
                )));
            }
        }

        let atoms: Vec<QssAtom> = initial
            .iter()
            .zip(quanta)
            .enumerate()
            .map(|(i, (&x0, &dq))| QssAtom::new(i, x0, dq))
            .collect();
        let q = initial.to_vec();
        let trajectories = initial.iter().map(|&x0| EventTrajectory::new(0.0, x0)).collect();
        let next_input = model.next_input_change(0.0);
        let mut sim = Self {
            model,
            graph,
            atoms,
            q,
            schedule: EventSchedule::new(n),
            trajectories,
            next_input,
            time: 0.0,
        };
        for i in 0..n {
            sim.reevaluate(i, 0.0)?;
        }
        Ok(sim)
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    pub fn atoms(&self) -> &[QssAtom] {
        &self.atoms
    }

    pub fn quantized(&self) -> &[f64] {
        &self.q
    }

    pub fn graph(&self) -> &DependencyGraph {
        &self.graph
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Time and atom of the next self-scheduled event.
    pub fn next_event(&self) -> (usize, f64) {
        self.schedule.peek().expect("non-empty system")
    }

    pub fn trajectories(&self) -> &[EventTrajectory] {
        &self.trajectories
    }

    /// Processes the next pending event (an atom's own transition or an
    /// external input change), provided it happens no later than `t_end`.
    ///
    /// Returns the event time, or `None` when nothing is due before `t_end`.
    pub fn step(&mut self, t_end: f64) -> Result<Option<f64>> {
        let (atom, t_self) = self.next_event();
        let t = t_self.min(self.next_input);
        if t > t_end {
            return Ok(None);
        }
        self.time = t;
        if self.next_input <= t_self {
            let inputs = self.model.input_dependents().to_vec();
            for j in inputs {
                self.handle_input_change(j, t)?;
            }
            self.next_input = self.model.next_input_change(t);
        } else {
            let flagged = self.handle_self_event(atom, t)?;
            for j in flagged {
                self.handle_input_change(j, t)?;
            }
        }
        Ok(Some(t))
    }

    /// Runs the event loop until the next event would fall after `t_end`.
    pub fn run(&mut self, t_end: f64) -> Result<RunOutput> {
        if !(t_end > 0.0) {
            return Err(Error::Config(format!("t_end must be positive, got {t_end}")));
        }
        while self.step(t_end)?.is_some() {}
        self.time = self.time.max(t_end);
        Ok(self.output())
    }

    /// Snapshot of the trajectories and counts recorded so far.
    pub fn output(&self) -> RunOutput {
        RunOutput {
            names: (0..self.atoms.len()).map(|i| self.model.state_name(i)).collect(),
            trajectories: self.trajectories.clone(),
            update_counts: self.atoms.iter().map(|a| a.update_count).collect(),
            t_end: self.time,
        }
    }

    /// Consumes the simulator, returning what was recorded without copying.
    pub fn into_output(self) -> RunOutput {
        let names = (0..self.atoms.len()).map(|i| self.model.state_name(i)).collect();
        RunOutput {
            names,
            update_counts: self.atoms.iter().map(|a| a.update_count).collect(),
            trajectories: self.trajectories,
            t_end: self.time,
        }
    }

    /// Internal transition of `atom` at its scheduled time `t`.
    ///
    /// The internal state has reached one quantum away from its level; the
    /// level moves there and a new output is chosen with the LIQSS1 rule.
    /// Returns the atoms that have to re-evaluate their derivative, which is
    /// empty when the output did not change.
    pub fn handle_self_event(&mut self, atom: usize, t: f64) -> Result<Vec<usize>> {
        let scheduled = self.atoms[atom].t_next;
        if !((t - scheduled).abs() <= TIME_TOLERANCE) {
            return Err(Error::Schedule { atom, t, scheduled });
        }

        let a = &self.atoms[atom];
        let dq = a.delta_q;
        let level = if a.dx > 0.0 { a.level + dq } else { a.level - dq };
        let (q_old, a_prev) = (a.q, a.a);

        let upper = level + dq;
        let lower = level - dq;
        let f_upper = self.eval_at(atom, upper, t);
        let f_lower = self.eval_at(atom, lower, t);
        let slope = update_linear_coefficient(f_upper, f_lower, upper, lower, a_prev);
        let selection = select(level, level, dq, slope, |c| {
            if c == upper {
                f_upper
            } else {
                f_lower
            }
        });
        let q_new = selection.q;
        let dx = match selection.branch {
            Branch::Upper => f_upper,
            Branch::Lower => f_lower,
            Branch::Equilibrium => self.eval_at(atom, q_new, t),
        };

        let a = &mut self.atoms[atom];
        a.x = level;
        a.level = level;
        a.a = slope;
        a.q = q_new;
        a.dx = dx;
        a.t_last = t;
        a.t_next = next_event_time(level, level, dx, dq, t);
        self.q[atom] = q_new;
        self.check_finite(atom, t)?;
        self.schedule.set(atom, self.atoms[atom].t_next);

        if q_new == q_old {
            return Ok(Vec::new());
        }
        self.atoms[atom].update_count += 1;
        self.trajectories[atom].push(t, q_new);
        Ok(self.graph.dependents(atom).to_vec())
    }

    /// Re-evaluates `atom` after one of its inputs changed at `t`. The output
    /// stays put; only the slope and the scheduled crossing change.
    pub fn handle_input_change(&mut self, atom: usize, t: f64) -> Result<()> {
        self.reevaluate(atom, t)
    }

    fn reevaluate(&mut self, atom: usize, t: f64) -> Result<()> {
        let dx = self.model.derivative(atom, &self.q, t);
        let a = &mut self.atoms[atom];
        let elapsed = (t - a.t_last).max(0.0);
        let x = advance_internal(a.x, a.dx, elapsed);
        a.x = x.clamp(a.level - a.delta_q, a.level + a.delta_q);
        a.t_last = t;
        a.dx = dx;
        a.t_next = next_event_time(a.x, a.level, dx, a.delta_q, t);
        self.check_finite(atom, t)?;
        self.schedule.set(atom, self.atoms[atom].t_next);
        Ok(())
    }

    fn eval_at(&mut self, atom: usize, candidate: f64, t: f64) -> f64 {
        let saved = self.q[atom];
        self.q[atom] = candidate;
        let f = self.model.derivative(atom, &self.q, t);
        self.q[atom] = saved;
        f
    }

    fn check_finite(&self, atom: usize, t: f64) -> Result<()> {
        let a = &self.atoms[atom];
        if a.x.is_finite() && a.q.is_finite() && a.dx.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite {
                atom,
                state: self.model.state_name(atom),
                t,
            })
        }
    }
}
