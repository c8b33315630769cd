//! The LIQSS1 atom and the scalar rules it is built from.

/// Derivatives with a magnitude below this are treated as zero when
/// scheduling, so a vanishing slope never produces an absurdly distant event.
pub const DERIVATIVE_FLOOR: f64 = 1e-14;

/// Absolute tolerance used when comparing event times.
pub const TIME_TOLERANCE: f64 = 1e-12;

/// Relative (to the quantum) spacing below which two quantized values carry no
/// slope information.
const SECANT_FLOOR: f64 = 1e-9;

/// One quantized state variable.
///
/// `level` is the hysteresis level the internal state is measured against: an
/// event fires when `x` drifts a full quantum away from it. The output `q` is
/// chosen one quantum ahead of `level` in the direction the state is heading,
/// or at the linear-model equilibrium between the two candidates.
#[derive(Debug, Clone, PartialEq)]
pub struct QssAtom {
    pub index: usize,
    /// Continuous internal state.
    pub x: f64,
    /// Quantized output seen by the other atoms.
    pub q: f64,
    pub level: f64,
    /// Derivative evaluated at the current quantized vector.
    pub dx: f64,
    /// Diagonal Jacobian estimate.
    pub a: f64,
    pub delta_q: f64,
    pub t_last: f64,
    pub t_next: f64,
    pub update_count: u64,
}

impl QssAtom {
    /// An atom at rest at `x0` with `q = level = x0` and no scheduled event.
    pub fn new(index: usize, x0: f64, delta_q: f64) -> Self {
        assert!(delta_q > 0.0, "quantum must be positive, got {delta_q}");
        Self {
            index,
            x: x0,
            q: x0,
            level: x0,
            dx: 0.0,
            a: 0.0,
            delta_q,
            t_last: 0.0,
            t_next: f64::INFINITY,
            update_count: 0,
        }
    }

    /// Internal state extrapolated to `t` without mutating the atom.
    pub fn x_at(&self, t: f64) -> f64 {
        advance_internal(self.x, self.dx, t - self.t_last)
    }
}

/// Earliest time at which `x + dx·(t − t_now)` reaches `q ± delta_q`.
///
/// The upper boundary is the target when `dx > 0`, the lower one when
/// `dx < 0`. Slopes below [`DERIVATIVE_FLOOR`] never cross.
pub fn next_event_time(x: f64, q: f64, dx: f64, delta_q: f64, t_now: f64) -> f64 {
    debug_assert!(delta_q > 0.0);
    if !(dx.abs() >= DERIVATIVE_FLOOR) {
        return f64::INFINITY;
    }
    let boundary = if dx > 0.0 { q + delta_q } else { q - delta_q };
    let dt = (boundary - x) / dx;
    // x may sit a rounding error beyond the boundary it is heading for.
    t_now + dt.max(0.0)
}

/// Piecewise-linear advance of the internal state.
#[inline]
pub fn advance_internal(x: f64, dx: f64, dt: f64) -> f64 {
    debug_assert!(dt >= 0.0);
    x + dx * dt
}

/// Secant estimate of the diagonal Jacobian entry.
///
/// Returns `a_prev` when the two quantized values are too close to carry
/// slope information.
pub fn update_linear_coefficient(f_new: f64, f_old: f64, q_new: f64, q_old: f64, a_prev: f64) -> f64 {
    let dq = q_new - q_old;
    let floor = SECANT_FLOOR * q_new.abs().max(q_old.abs()).max(f64::MIN_POSITIVE);
    if dq.abs() <= floor {
        return a_prev;
    }
    let a = (f_new - f_old) / dq;
    if a.is_finite() {
        a
    } else {
        a_prev
    }
}

/// Which branch of the LIQSS1 selection rule produced a quantized value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Upper,
    Lower,
    Equilibrium,
}

/// Outcome of [`select`]: the chosen output, the branch, and every derivative
/// evaluation made on the way.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub q: f64,
    pub branch: Branch,
    pub f_upper: f64,
    pub f_lower: Option<f64>,
}

/// LIQSS1 selection of the next quantized output.
///
/// See [`select`] for the rule; this returns only the chosen value.
pub fn liqss1_select_q(
    x: f64,
    q_prev: f64,
    delta_q: f64,
    a: f64,
    f_eval: impl FnMut(f64) -> f64,
) -> f64 {
    select(x, q_prev, delta_q, a, f_eval).q
}

/// LIQSS1 selection rule.
///
/// With `q⁺ = q_prev + ΔQ` and `q⁻ = q_prev − ΔQ`:
///
/// 1. `f(q⁺) ≥ 0` selects `q⁺`,
/// 2. otherwise `f(q⁻) ≤ 0` selects `q⁻`,
/// 3. otherwise the derivative changes sign between the candidates and the
///    root of the linear model through `q⁻`, `q⁻ − f(q⁻)/a`, is used, clamped
///    to `[q⁻, q⁺]`. Without a slope estimate (`a = 0`) the internal state
///    `x` is used instead.
pub fn select(
    x: f64,
    q_prev: f64,
    delta_q: f64,
    a: f64,
    mut f_eval: impl FnMut(f64) -> f64,
) -> Selection {
    let upper = q_prev + delta_q;
    let lower = q_prev - delta_q;

    let f_upper = f_eval(upper);
    if f_upper >= 0.0 {
        return Selection {
            q: upper,
            branch: Branch::Upper,
            f_upper,
            f_lower: None,
        };
    }
    let f_lower = f_eval(lower);
    if f_lower <= 0.0 {
        return Selection {
            q: lower,
            branch: Branch::Lower,
            f_upper,
            f_lower: Some(f_lower),
        };
    }

    let root = if a != 0.0 && a.is_finite() {
        (lower - f_lower / a).clamp(lower, upper)
    } else {
        x
    };
    Selection {
        q: root,
        branch: Branch::Equilibrium,
        f_upper,
        f_lower: Some(f_lower),
    }
}
