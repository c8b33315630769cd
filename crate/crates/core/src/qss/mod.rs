//! Generic LIQSS1 integration engine.
//!
//! Each state variable is an [`QssAtom`] whose quantized output is piecewise
//! constant and whose internal state is piecewise linear between events. Atoms
//! are advanced asynchronously: the one with the earliest next-event time fires,
//! and only the atoms whose derivative reads its output are re-evaluated.

mod atom;
mod engine;
mod graph;
mod schedule;

pub use atom::{
    advance_internal, liqss1_select_q, next_event_time, select, update_linear_coefficient, Branch,
    QssAtom, Selection, DERIVATIVE_FLOOR, TIME_TOLERANCE,
};
pub use engine::{EventTrajectory, QssModel, RunOutput, Simulator};
pub use graph::DependencyGraph;
pub use schedule::EventSchedule;
