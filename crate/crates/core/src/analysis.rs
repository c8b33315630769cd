//! Error metrics and the quantum-size study.
//!
//! LIQSS trajectories are compared with the Euler reference after resampling
//! the quantized outputs onto the reference grid with a zero-order hold.

use std::time::Instant;

use rayon::prelude::*;

use crate::machine::{Quanta, Scenario};
use crate::qss::{EventTrajectory, RunOutput};
use crate::reference::{run_reference, DenseTrajectory};
use crate::{Error, Result};

/// A uniform sampling grid `t0 + k·dt`, `k = 0..count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub t0: f64,
    pub dt: f64,
    pub count: usize,
}

impl Grid {
    pub fn of(reference: &DenseTrajectory) -> Self {
        Self {
            t0: reference.t0,
            dt: reference.dt,
            count: reference.len(),
        }
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }
}

/// Quantized outputs held onto a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ResampledSeries {
    pub t0: f64,
    pub dt: f64,
    pub names: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl ResampledSeries {
    pub fn len(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn grid(&self) -> Grid {
        Grid {
            t0: self.t0,
            dt: self.dt,
            count: self.len(),
        }
    }
}

/// Zero-order hold of one event trajectory: each grid sample takes the last
/// event value at or before its time.
pub fn resample(events: &EventTrajectory, grid: Grid) -> Result<Vec<f64>> {
    let first = *events
        .times
        .first()
        .ok_or_else(|| Error::Trajectory("no events recorded".into()))?;
    if grid.count > 0 && grid.t0 < first {
        return Err(Error::Trajectory(format!(
            "grid starts at {} s, before the first event at {first} s",
            grid.t0
        )));
    }
    let mut out = Vec::with_capacity(grid.count);
    let mut next = 1;
    for k in 0..grid.count {
        let t = grid.time(k);
        while next < events.times.len() && events.times[next] <= t {
            next += 1;
        }
        out.push(events.values[next - 1]);
    }
    Ok(out)
}

/// Resamples every trajectory of a run.
pub fn resample_run(run: &RunOutput, grid: Grid) -> Result<ResampledSeries> {
    let values = run
        .trajectories
        .iter()
        .map(|tr| resample(tr, grid))
        .collect::<Result<Vec<_>>>()?;
    Ok(ResampledSeries {
        t0: grid.t0,
        dt: grid.dt,
        names: run.names.clone(),
        values,
    })
}

fn check_grids(y: &ResampledSeries, reference: &DenseTrajectory) -> Result<()> {
    if y.values.len() != reference.values.len() {
        return Err(Error::GridMismatch(format!(
            "{} resampled states vs {} reference states",
            y.values.len(),
            reference.values.len()
        )));
    }
    if y.len() != reference.len() {
        return Err(Error::GridMismatch(format!(
            "{} resampled samples vs {} reference samples",
            y.len(),
            reference.len()
        )));
    }
    let tol = 1e-12 * reference.dt.abs().max(1.0);
    if (y.dt - reference.dt).abs() > tol || (y.t0 - reference.t0).abs() > tol {
        return Err(Error::GridMismatch(format!(
            "grid (t0 {}, dt {}) vs reference (t0 {}, dt {})",
            y.t0, y.dt, reference.t0, reference.dt
        )));
    }
    Ok(())
}

/// `y − q_ref`, sample by sample and state by state.
pub fn pointwise_error(y: &ResampledSeries, reference: &DenseTrajectory) -> Result<Vec<Vec<f64>>> {
    check_grids(y, reference)?;
    Ok(y
        .values
        .iter()
        .zip(&reference.values)
        .map(|(y, q)| y.iter().zip(q).map(|(y, q)| y - q).collect())
        .collect())
}

/// Time-average normalized error: RMS of the pointwise error divided by the
/// dynamic range of `y`. A state with no dynamic range gets `+inf`.
pub fn tane(pe: &[f64], y: &[f64]) -> f64 {
    assert!(!pe.is_empty(), "TANE needs at least one sample");
    let mean_sq = pe.iter().map(|e| e * e).sum::<f64>() / pe.len() as f64;
    let range = dynamic_range(y);
    let rms = mean_sq.sqrt();
    if range > 0.0 {
        rms / range
    } else {
        f64::INFINITY
    }
}

/// `max(y) − min(y)`.
pub fn dynamic_range(y: &[f64]) -> f64 {
    let (lo, hi) = y
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if lo.is_finite() && hi.is_finite() {
        hi - lo
    } else {
        0.0
    }
}

pub fn max_error(tanes: &[f64]) -> f64 {
    tanes.iter().copied().fold(0.0, f64::max)
}

pub fn update_intensity(count: u64, duration: f64) -> f64 {
    debug_assert!(duration > 0.0);
    count as f64 / duration
}

/// Per-state accuracy and cost of one LIQSS run against the reference.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub names: Vec<String>,
    pub tane: Vec<f64>,
    /// States whose resampled trajectory never moved; their TANE is `+inf`.
    pub zero_range: Vec<bool>,
    pub max_error: f64,
    pub update_counts: Vec<u64>,
    /// Updates per second of simulated time.
    pub intensity: Vec<f64>,
    pub total_updates: u64,
}

impl ErrorReport {
    pub fn new(y: &ResampledSeries, reference: &DenseTrajectory, update_counts: &[u64], duration: f64) -> Result<Self> {
        let pe = pointwise_error(y, reference)?;
        if pe.first().is_none_or(Vec::is_empty) {
            return Err(Error::GridMismatch("no samples to compare".into()));
        }
        if update_counts.len() != y.values.len() {
            return Err(Error::GridMismatch(format!(
                "{} update counts for {} states",
                update_counts.len(),
                y.values.len()
            )));
        }
        let tane: Vec<f64> = pe.iter().zip(&y.values).map(|(pe, y)| tane(pe, y)).collect();
        let zero_range = y.values.iter().map(|y| dynamic_range(y) == 0.0).collect();
        Ok(Self {
            names: y.names.clone(),
            max_error: max_error(&tane),
            zero_range,
            tane,
            update_counts: update_counts.to_vec(),
            intensity: update_counts.iter().map(|&c| update_intensity(c, duration)).collect(),
            total_updates: update_counts.iter().sum(),
        })
    }

    /// Resamples `run` onto the reference grid and compares.
    pub fn from_run(run: &RunOutput, reference: &DenseTrajectory) -> Result<Self> {
        let y = resample_run(run, Grid::of(reference))?;
        let duration = reference.time(reference.len().saturating_sub(1));
        Self::new(&y, reference, &run.update_counts, duration)
    }
}

/// One quantum size of a sweep. A failed run keeps its quantum and carries
/// the error; its metrics are `NaN`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub delta_q: f64,
    pub max_error: f64,
    pub total_updates: Option<u64>,
    pub wall_time: f64,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn failed(delta_q: f64, wall_time: f64, err: &Error) -> Self {
        Self {
            delta_q,
            max_error: f64::NAN,
            total_updates: None,
            wall_time,
            error: Some(err.to_string()),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

/// Quanta used for one sweep point: `dq` for fluxes and angle, `dq ·
/// speed_ratio` for the speed, then the base overrides on top.
pub fn sweep_quanta(base: &Quanta, dq: f64, speed_ratio: f64) -> Quanta {
    Quanta {
        flux_dq: dq,
        speed_dq: dq * speed_ratio,
        angle_dq: dq,
        overrides: base.overrides.clone(),
    }
}

/// Runs `job` for every quantum in parallel and returns the rows sorted by
/// ascending quantum. Failures become rows, they do not stop the sweep.
pub fn sweep_with<F>(dq_list: &[f64], job: F) -> Result<Vec<SweepRow>>
where
    F: Fn(f64) -> Result<(f64, u64)> + Sync,
{
    if dq_list.is_empty() {
        return Err(Error::Config("quantum sweep needs at least one quantum".into()));
    }
    if let Some(bad) = dq_list.iter().find(|dq| !(**dq > 0.0 && dq.is_finite())) {
        return Err(Error::Config(format!("swept quanta must be positive, got {bad}")));
    }
    let mut sorted = dq_list.to_vec();
    sorted.sort_by(f64::total_cmp);

    Ok(sorted
        .par_iter()
        .map(|&dq| {
            let start = Instant::now();
            let result = job(dq);
            let wall_time = start.elapsed().as_secs_f64();
            match result {
                Ok((max_error, total)) => SweepRow {
                    delta_q: dq,
                    max_error,
                    total_updates: Some(total),
                    wall_time,
                    error: None,
                },
                Err(err) => SweepRow::failed(dq, wall_time, &err),
            }
        })
        .collect())
}

/// Quantum-size sweep of the scenario against one shared Euler reference.
///
/// Each row uses [`sweep_quanta`] with the speed at a tenth of the swept
/// quantum. Pass `reference` to reuse an existing reference solution.
pub fn quantum_sweep(scenario: &Scenario, dq_list: &[f64], reference: Option<&DenseTrajectory>) -> Result<Vec<SweepRow>> {
    quantum_sweep_with_ratio(scenario, dq_list, 0.1, reference)
}

pub fn quantum_sweep_with_ratio(
    scenario: &Scenario,
    dq_list: &[f64],
    speed_ratio: f64,
    reference: Option<&DenseTrajectory>,
) -> Result<Vec<SweepRow>> {
    scenario.validate()?;
    let owned;
    let reference = match reference {
        Some(r) => r,
        None => {
            owned = run_reference(scenario, scenario.euler_dt)?;
            &owned
        }
    };
    sweep_with(dq_list, |dq| {
        let sc = Scenario {
            quanta: sweep_quanta(&scenario.quanta, dq, speed_ratio),
            ..scenario.clone()
        };
        let run = sc.simulator()?.run(sc.t_end)?;
        let report = ErrorReport::from_run(&run, reference)?;
        Ok((report.max_error, report.total_updates))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn grid(dt: f64, count: usize) -> Grid {
        Grid { t0: 0.0, dt, count }
    }

    fn dense(values: Vec<Vec<f64>>, dt: f64) -> DenseTrajectory {
        DenseTrajectory {
            t0: 0.0,
            dt,
            names: (0..values.len()).map(|i| format!("x{i}")).collect(),
            values,
        }
    }

    fn series(values: Vec<Vec<f64>>, dt: f64) -> ResampledSeries {
        ResampledSeries {
            t0: 0.0,
            dt,
            names: (0..values.len()).map(|i| format!("x{i}")).collect(),
            values,
        }
    }

    #[test]
    fn constant_hold() {
        let ev = EventTrajectory::from_pairs(&[(0.0, 5.0)]);
        assert_eq!(resample(&ev, grid(0.1, 4)).unwrap(), vec![5.0; 4]);
    }

    #[test]
    fn hold_between_events() {
        let ev = EventTrajectory::from_pairs(&[(0.0, 0.0), (0.15, 1.0)]);
        assert_eq!(resample(&ev, grid(0.1, 4)).unwrap(), vec![0.0, 0.0, 1.0, 1.0]);
        // an event exactly on a grid time is already visible there
        let ev = EventTrajectory::from_pairs(&[(0.0, 0.0), (0.5, 1.0)]);
        assert_eq!(resample(&ev, grid(0.25, 3)).unwrap(), vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn grid_before_first_event() {
        let ev = EventTrajectory::from_pairs(&[(1.0, 0.0)]);
        assert!(resample(&ev, grid(0.1, 3)).is_err());
        assert!(resample(&EventTrajectory::default(), grid(0.1, 3)).is_err());
    }

    proptest! {
        #[test]
        fn resample_matches_linear_scan(
            mut times in prop::collection::vec(0.0f64..10.0, 1..200),
            dt in 0.001f64..0.1,
        ) {
            times.sort_by(f64::total_cmp);
            times.dedup();
            times[0] = 0.0;
            let pairs: Vec<(f64, f64)> = times.iter().enumerate().map(|(i, &t)| (t, i as f64)).collect();
            let ev = EventTrajectory::from_pairs(&pairs);
            let g = grid(dt, 1000);
            let got = resample(&ev, g).unwrap();
            for (k, v) in got.iter().enumerate() {
                let t = g.time(k);
                let want = pairs.iter().rev().find(|(te, _)| *te <= t).unwrap().1;
                prop_assert_eq!(*v, want);
            }
        }

        #[test]
        fn resampling_a_held_series_is_idempotent(values in prop::collection::vec(-5i32..5, 2..300)) {
            let dt = 0.01;
            // record the changes of an already piecewise-constant series
            let mut pairs = vec![(0.0, values[0] as f64)];
            for (k, w) in values.windows(2).enumerate() {
                if w[1] != w[0] {
                    pairs.push(((k + 1) as f64 * dt, w[1] as f64));
                }
            }
            let ev = EventTrajectory::from_pairs(&pairs);
            let got = resample(&ev, grid(dt, values.len())).unwrap();
            let want: Vec<f64> = values.iter().map(|&v| v as f64).collect();
            prop_assert_eq!(got, want);
        }

        #[test]
        fn tane_shift_invariant(
            y in prop::collection::vec(-10.0f64..10.0, 2..50),
            shift in -100.0f64..100.0,
            offset in -1.0f64..1.0,
        ) {
            let q: Vec<f64> = y.iter().map(|v| v + offset).collect();
            let pe: Vec<f64> = y.iter().zip(&q).map(|(a, b)| a - b).collect();
            let y2: Vec<f64> = y.iter().map(|v| v + shift).collect();
            let q2: Vec<f64> = q.iter().map(|v| v + shift).collect();
            let pe2: Vec<f64> = y2.iter().zip(&q2).map(|(a, b)| a - b).collect();
            let (a, b) = (tane(&pe, &y), tane(&pe2, &y2));
            prop_assume!(a.is_finite());
            prop_assert!((a - b).abs() <= 1e-6 * a.abs().max(1e-12));
        }

        #[test]
        fn tane_inverse_in_range(
            y in prop::collection::vec(-10.0f64..10.0, 2..50),
            pe in prop::collection::vec(-1.0f64..1.0, 50),
            k in 0.1f64..100.0,
        ) {
            let pe = &pe[..y.len()];
            let scaled: Vec<f64> = y.iter().map(|v| v * k).collect();
            let (a, b) = (tane(pe, &y), tane(pe, &scaled));
            prop_assume!(a.is_finite() && a > 0.0);
            prop_assert!((a / b - k).abs() <= 1e-9 * k);
        }
    }

    #[test]
    fn pointwise() {
        let r = dense(vec![vec![1.0, 2.0, 3.0]], 0.1);
        let same = series(vec![vec![1.0, 2.0, 3.0]], 0.1);
        assert_eq!(pointwise_error(&same, &r).unwrap(), vec![vec![0.0; 3]]);
        let shifted = series(vec![vec![1.5, 2.5, 3.5]], 0.1);
        assert_eq!(pointwise_error(&shifted, &r).unwrap(), vec![vec![0.5; 3]]);
    }

    #[test]
    fn pointwise_grid_mismatch() {
        let r = dense(vec![vec![1.0, 2.0, 3.0]], 0.1);
        assert!(pointwise_error(&series(vec![vec![1.0, 2.0]], 0.1), &r).is_err());
        assert!(pointwise_error(&series(vec![vec![1.0, 2.0, 3.0]], 0.2), &r).is_err());
    }

    #[test]
    fn tane_values() {
        assert_eq!(tane(&[0.0, 0.0], &[0.0, 1.0]), 0.0);
        assert_relative_eq!(tane(&[0.2, 0.2, 0.2], &[0.0, 4.0, 2.0]), 0.05);
        // sqrt(25/2)/10
        assert_relative_eq!(tane(&[3.0, 4.0], &[0.0, 10.0]), 0.353_553_390_593_273_8, max_relative = 1e-12);
        assert_eq!(tane(&[1.0], &[2.0]), f64::INFINITY);
    }

    #[test]
    fn max_error_values() {
        assert_eq!(max_error(&[0.001, 0.004, 0.002]), 0.004);
        assert_eq!(max_error(&[0.3]), 0.3);
        assert_eq!(max_error(&[0.0, 0.0]), 0.0);
    }

    #[test]
    fn intensity() {
        assert_eq!(update_intensity(100, 50.0), 2.0);
        assert_eq!(update_intensity(0, 50.0), 0.0);
    }

    #[test]
    fn report_of_identical_trajectories_is_zero() {
        let r = dense(vec![vec![1.0, 2.0, 3.0], vec![0.0, -1.0, 0.0]], 0.5);
        let y = series(r.values.clone(), 0.5);
        let rep = ErrorReport::new(&y, &r, &[3, 4], 1.0).unwrap();
        assert_eq!(rep.tane, vec![0.0, 0.0]);
        assert_eq!(rep.max_error, 0.0);
        assert_eq!(rep.total_updates, 7);
        assert_eq!(rep.intensity, vec![3.0, 4.0]);
        assert_eq!(rep.zero_range, vec![false, false]);
    }

    #[test]
    fn sweep_records_failures_and_sorts() {
        let rows = sweep_with(&[1e-2, 1e-4, 1e-3], |dq| {
            if dq == 1e-3 {
                Err(Error::NonFinite {
                    atom: 0,
                    state: "x0".into(),
                    t: 1.0,
                })
            } else {
                Ok((dq * 2.0, (1.0 / dq) as u64))
            }
        })
        .unwrap();
        let dqs: Vec<f64> = rows.iter().map(|r| r.delta_q).collect();
        assert_eq!(dqs, vec![1e-4, 1e-3, 1e-2]);
        assert!(rows[0].is_ok() && rows[2].is_ok());
        assert!(!rows[1].is_ok());
        assert!(rows[1].max_error.is_nan());
        assert_eq!(rows[1].total_updates, None);
    }

    #[test]
    fn sweep_rejects_bad_lists() {
        assert!(sweep_with(&[], |_| Ok((0.0, 0))).is_err());
        assert!(sweep_with(&[1e-3, -1.0], |_| Ok((0.0, 0))).is_err());
    }
}
