//! Synchronous machine on an infinite bus, modelled in the rotor's dq frame.
//!
//! Seven states: stator d/q fluxes, field flux, the two damper fluxes, rotor
//! speed and rotor angle. Currents follow algebraically from the fluxes
//! through the constant d- and q-axis inductance matrices.

mod equations;
mod model;
mod params;

pub use equations::*;
pub use model::{build_atoms, state_names, AtomSetup, MachineModel, Quanta, Scenario, State, STATE_COUNT};
pub use params::{GridSpec, Inductances, MachineParams, TorqueProfile};
