//! Bounded Nelder-Mead search and the calibration drivers built on it.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::equivclass::{cnot_distance, makhlin_invariants, InvariantPair};
use crate::error::{Error, Result};
use crate::fmt::fixed6;
use crate::model::SystemParams;
use crate::qmat::Operator4;
use crate::sequences::{entangling_product, single_step_u, two_step_time, Frame, GateKind};

/// Search bounds for the drive amplitude `Omega1/g` in single-step calibration.
pub const OMEGA1_BOUNDS: (f64, f64) = (0.5, 8.0);
/// Search bounds for the single-step duration `T1` (units of `pi/2g`).
pub const T1_BOUNDS: (f64, f64) = (0.5, 2.5);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NMOptions {
    pub max_iterations: usize,
    /// Stop once every vertex lies within this distance (max norm) of the best
    /// and the objective spread is below `f_tolerance`.
    pub x_tolerance: f64,
    /// Stop once `f_worst - f_best` falls below this.
    pub f_tolerance: f64,
    /// Closed interval per coordinate; proposals are clipped into it.
    pub bounds: Vec<(f64, f64)>,
    /// Edge length of the initial simplex.
    pub initial_step: f64,
    /// Seeds any randomized driver built on top of the search.
    pub seed: u64,
}

impl NMOptions {
    pub fn with_bounds(bounds: Vec<(f64, f64)>) -> Self {
        NMOptions {
            max_iterations: 5000,
            x_tolerance: 1e-10,
            f_tolerance: 1e-14,
            bounds,
            initial_step: 0.05,
            seed: 42,
        }
    }

    fn validate(&self, x0: &[f64]) -> Result<()> {
        if self.bounds.is_empty() || self.bounds.len() != x0.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} bounds, got {}",
                x0.len(),
                self.bounds.len()
            )));
        }
        for (k, (&(lo, hi), &x)) in self.bounds.iter().zip(x0).enumerate() {
            if !(lo <= hi) {
                return Err(Error::InvalidArgument(format!(
                    "bound {k} is empty: [{lo}, {hi}]"
                )));
            }
            if !(lo..=hi).contains(&x) {
                return Err(Error::InvalidArgument(format!(
                    "start coordinate {k} = {x} outside [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NMResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Best objective value at the start of each iteration.
    pub history: Vec<f64>,
}

fn clip(x: &mut [f64], bounds: &[(f64, f64)]) {
    for (v, &(lo, hi)) in x.iter_mut().zip(bounds) {
        *v = v.clamp(lo, hi);
    }
}

/// `a + s (b - a)`, clipped into the box.
fn along(a: &[f64], b: &[f64], s: f64, bounds: &[(f64, f64)]) -> Vec<f64> {
    let mut out: Vec<f64> = a.iter().zip(b).map(|(a, b)| a + s * (b - a)).collect();
    clip(&mut out, bounds);
    out
}

/// Minimizes `f` over a box with the reflect/expand/contract/shrink simplex
/// iteration. Out-of-box proposals are projected back onto the box.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], opts: &NMOptions) -> Result<NMResult>
where
    F: FnMut(&[f64]) -> f64,
{
    opts.validate(x0)?;
    let n = x0.len();
    let bounds = &opts.bounds;
    let mut eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0)));
    for k in 0..n {
        let mut x = x0.to_vec();
        let (lo, hi) = bounds[k];
        x[k] = if x[k] + opts.initial_step <= hi {
            x[k] + opts.initial_step
        } else {
            (x[k] - opts.initial_step).max(lo)
        };
        let fx = eval(&x);
        simplex.push((x, fx));
    }

    let mut history = Vec::new();
    let mut iterations = 0;
    let converged = loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        history.push(best);

        let diameter = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        let spread = simplex[n].1 - best;
        if diameter < opts.x_tolerance && spread < opts.f_tolerance {
            break true;
        }
        if iterations >= opts.max_iterations {
            break false;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / n as f64;
            }
        }
        let (worst, f_worst) = simplex[n].clone();
        let f_second = simplex[n - 1].1;

        let reflected = along(&centroid, &worst, -1.0, bounds);
        let f_reflected = eval(&reflected);

        if f_reflected < best {
            let expanded = along(&centroid, &worst, -2.0, bounds);
            let f_expanded = eval(&expanded);
            simplex[n] = if f_expanded < f_reflected {
                (expanded, f_expanded)
            } else {
                (reflected, f_reflected)
            };
            continue;
        }
        if f_reflected < f_second {
            simplex[n] = (reflected, f_reflected);
            continue;
        }
        let (contracted, f_contracted) = if f_reflected < f_worst {
            let x = along(&centroid, &reflected, 0.5, bounds);
            let fx = eval(&x);
            (x, fx)
        } else {
            let x = along(&centroid, &worst, 0.5, bounds);
            let fx = eval(&x);
            (x, fx)
        };
        if f_contracted < f_reflected.min(f_worst) {
            simplex[n] = (contracted, f_contracted);
            continue;
        }
        // Shrink toward the best vertex.
        let anchor = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let x = along(&anchor, &vertex.0, 0.5, bounds);
            let fx = eval(&x);
            *vertex = (x, fx);
        }
    };

    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, f) = simplex.swap_remove(0);
    Ok(NMResult {
        x,
        f,
        iterations,
        converged,
        history,
    })
}

/// Outcome of calibrating one sequence at one detuning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub delta_over_g: f64,
    /// `T2` (units of `pi/4g`) for two-step, `T1` (units of `pi/2g`) for single-step.
    pub t_units: f64,
    pub omega1_over_g: f64,
    pub invariants: InvariantPair,
    /// Squared class distance from controlled-NOT.
    pub distance: f64,
    pub fidelity: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl CalibrationResult {
    /// Entangling time in units of `1/g` for the given sequence kind.
    pub fn time(&self, kind: GateKind) -> f64 {
        self.t_units * kind.time_unit()
    }

    pub fn params(&self) -> SystemParams {
        SystemParams::new(self.delta_over_g, 0.0, self.omega1_over_g)
    }
}

fn single_step_distance(delta_over_g: f64, omega1: f64, t_units: f64) -> f64 {
    let p = SystemParams::new(delta_over_g, 0.0, omega1);
    single_step_u(t_units * FRAC_PI_2, &p)
        .and_then(|u| makhlin_invariants(&u))
        .map(|inv| cnot_distance(&inv))
        .unwrap_or(f64::INFINITY)
}

/// Refines a two-dimensional minimum with Newton steps on central-difference
/// derivatives. The simplex only pins a quadratic minimum to about `sqrt(eps)`;
/// the gradient root is better conditioned. Steps that leave the box, grow
/// large, or meet a non-convex Hessian are rejected and the input returned.
fn newton_polish<F: Fn(&[f64]) -> f64>(f: F, x: [f64; 2], bounds: [(f64, f64); 2]) -> (f64, f64) {
    const H_GRAD: f64 = 1e-6;
    const H_HESS: f64 = 1e-4;
    const MAX_STEP: f64 = 1e-5;
    let at = |x: [f64; 2], i: usize, s: f64| {
        let mut y = x;
        y[i] += s;
        y
    };
    let mut x = x;
    for _ in 0..3 {
        let fx = f(&x);
        let mut g = [0.0; 2];
        let mut h = [[0.0; 2]; 2];
        for i in 0..2 {
            g[i] = (f(&at(x, i, H_GRAD)) - f(&at(x, i, -H_GRAD))) / (2.0 * H_GRAD);
            h[i][i] = (f(&at(x, i, H_HESS)) - 2.0 * fx + f(&at(x, i, -H_HESS))) / (H_HESS * H_HESS);
        }
        let corner = |a: f64, b: f64| f(&[x[0] + a, x[1] + b]);
        h[0][1] = (corner(H_HESS, H_HESS) - corner(H_HESS, -H_HESS) - corner(-H_HESS, H_HESS)
            + corner(-H_HESS, -H_HESS))
            / (4.0 * H_HESS * H_HESS);
        h[1][0] = h[0][1];
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        if !(h[0][0] > 0.0 && det > 1e-8 * (h[0][0] * h[1][1]).abs()) {
            break;
        }
        let step = [
            -(h[1][1] * g[0] - h[0][1] * g[1]) / det,
            -(h[0][0] * g[1] - h[1][0] * g[0]) / det,
        ];
        let next = [x[0] + step[0], x[1] + step[1]];
        let inside = next
            .iter()
            .zip(bounds)
            .all(|(v, (lo, hi))| (lo..=hi).contains(v));
        if !(inside && step[0].abs().max(step[1].abs()) <= MAX_STEP) || f(&next) > fx + 1e-15 {
            break;
        }
        x = next;
    }
    (x[0], x[1])
}

/// Finds the drive amplitude and duration whose single-step gate lies closest
/// to the controlled-NOT class.
///
/// The search starts from the resonant solution `(sqrt 15, 1)`, which keeps it
/// on the lowest branch `Omega1 ~ g sqrt((4n)^2 - 1)`, `n = 1`.
pub fn calibrate_single_step(delta_over_g: f64) -> Result<CalibrationResult> {
    if !delta_over_g.is_finite() {
        return Err(Error::InvalidArgument("detuning must be finite".into()));
    }
    let opts = NMOptions::with_bounds(vec![OMEGA1_BOUNDS, T1_BOUNDS]);
    let start = [15f64.sqrt(), 1.0];
    let run = nelder_mead(
        |x| single_step_distance(delta_over_g, x[0], x[1]),
        &start,
        &opts,
    )?;
    let (omega1, t_units) = newton_polish(
        |x| single_step_distance(delta_over_g, x[0], x[1]),
        [run.x[0], run.x[1]],
        [OMEGA1_BOUNDS, T1_BOUNDS],
    );
    let u = single_step_u(
        t_units * FRAC_PI_2,
        &SystemParams::new(delta_over_g, 0.0, omega1),
    )?;
    let invariants = makhlin_invariants(&u)?;
    Ok(CalibrationResult {
        delta_over_g,
        t_units,
        omega1_over_g: omega1,
        invariants,
        distance: cnot_distance(&invariants),
        fidelity: None,
        iterations: run.iterations,
        converged: run.converged,
    })
}

/// Two-step calibration: the gate time is closed-form, the class is checked
/// on the assembled product.
pub fn calibrate_two_step(delta_over_g: f64) -> Result<CalibrationResult> {
    let p = SystemParams::detuned(delta_over_g);
    let t = two_step_time(&p)?;
    let product: Operator4 = entangling_product(t, &p, Frame::Doubly);
    let invariants = makhlin_invariants(&product)?;
    Ok(CalibrationResult {
        delta_over_g,
        t_units: t / FRAC_PI_4,
        omega1_over_g: 0.0,
        invariants,
        distance: cnot_distance(&invariants),
        fidelity: None,
        iterations: 0,
        converged: true,
    })
}

#[derive(Debug)]
pub struct SweepRow {
    pub delta_over_g: f64,
    pub outcome: Result<CalibrationResult>,
}

/// Calibrates every detuning in order; a failing row records its error and
/// the sweep continues.
pub fn sweep(delta_values: &[f64], mode: GateKind) -> Vec<SweepRow> {
    delta_values
        .iter()
        .map(|&d| SweepRow {
            delta_over_g: d,
            outcome: match mode {
                GateKind::SingleStep => calibrate_single_step(d),
                GateKind::TwoStep => calibrate_two_step(d),
            },
        })
        .collect()
}

/// `lo, lo + step, ..., hi`, with each value rounded to 12 decimals so grid
/// points print and compare cleanly.
pub fn detuning_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n)
        .map(|k| ((lo + k as f64 * step) * 1e12).round() / 1e12)
        .collect()
}

pub const CALIBRATION_CSV_HEADER: [&str; 9] = [
    "delta_over_g",
    "T",
    "omega1_over_g",
    "G1_re",
    "G1_im",
    "G2",
    "d2",
    "fidelity",
    "converged",
];

/// Writes calibration rows; the fidelity field is blank when not evaluated.
pub fn write_calibration_csv<W: Write>(rows: &[CalibrationResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CALIBRATION_CSV_HEADER)?;
    for r in rows {
        w.write_record([
            fixed6(r.delta_over_g),
            fixed6(r.t_units),
            fixed6(r.omega1_over_g),
            fixed6(r.invariants.g1.re),
            fixed6(r.invariants.g1.im),
            fixed6(r.invariants.g2),
            // d2 spans many decades, so it keeps full precision.
            format!("{:.6e}", r.distance),
            r.fidelity.map(fixed6).unwrap_or_default(),
            r.converged.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn box1(lo: f64, hi: f64) -> NMOptions {
        NMOptions::with_bounds(vec![(lo, hi)])
    }

    #[test]
    fn newton_polish_sharpens_quadratic_minimum() {
        let f = |x: &[f64]| {
            0.3 + (x[0] - 1.25).powi(2)
                + 2.0 * (x[1] - 0.75).powi(2)
                + 0.5 * (x[0] - 1.25) * (x[1] - 0.75)
        };
        let (a, b) = newton_polish(f, [1.25 + 3e-6, 0.75 - 2e-6], [(0.0, 2.0), (0.0, 2.0)]);
        assert!(
            (a - 1.25).abs() < 1e-10 && (b - 0.75).abs() < 1e-10,
            "{a} {b}"
        );
        // A step that would leave the box is refused.
        let (a, _) = newton_polish(
            |x: &[f64]| (x[0] - 3.0).powi(2) + x[1] * x[1],
            [2.0 - 1e-6, 0.0],
            [(0.0, 2.0), (-1.0, 1.0)],
        );
        assert_eq!(a, 2.0 - 1e-6);
    }

    #[test]
    fn parabola() {
        let r = nelder_mead(|x| (x[0] - 1.0).powi(2), &[0.0], &box1(-10.0, 10.0)).unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-6, "{r:?}");
        assert!(r.converged);
    }

    #[test]
    fn minimum_on_the_boundary() {
        let r = nelder_mead(|x| x[0], &[2.5], &box1(2.0, 3.0)).unwrap();
        assert!((r.x[0] - 2.0).abs() < 1e-6, "{r:?}");
    }

    #[test]
    fn rosenbrock() {
        let opts = NMOptions::with_bounds(vec![(-5.0, 5.0); 2]);
        let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let r = nelder_mead(rosen, &[-1.0, 1.0], &opts).unwrap();
        assert!(
            (r.x[0] - 1.0).abs() < 1e-4 && (r.x[1] - 1.0).abs() < 1e-4,
            "{r:?}"
        );
    }

    #[test]
    fn start_outside_bounds_is_rejected() {
        let err = nelder_mead(|x| x[0], &[4.0], &box1(2.0, 3.0)).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
        let err = nelder_mead(|x| x[0], &[2.5], &box1(3.0, 2.0)).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
        let err = nelder_mead(|x| x[0], &[2.5, 1.0], &box1(2.0, 3.0)).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let mut opts = NMOptions::with_bounds(vec![(-5.0, 5.0); 2]);
        opts.max_iterations = 3;
        let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let r = nelder_mead(rosen, &[-1.0, 1.0], &opts).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 3);
    }

    #[test]
    fn history_is_monotone() {
        let opts = NMOptions::with_bounds(vec![(-5.0, 5.0); 3]);
        let f = |x: &[f64]| {
            x.iter()
                .enumerate()
                .map(|(k, v)| (k as f64 + 1.0) * (v - 0.3).powi(2))
                .sum()
        };
        let r = nelder_mead(f, &[2.0, -1.0, 0.5], &opts).unwrap();
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn grid_points_are_clean() {
        let g = detuning_grid(0.0, 1.0, 0.1);
        assert_eq!(g.len(), 11);
        assert_eq!(g[3], 0.3);
        assert_eq!(g[10], 1.0);
        assert_eq!(detuning_grid(1.0, 2.0, 0.1)[7], 1.7);
    }

    #[test]
    fn resonant_single_step_calibration() {
        let r = calibrate_single_step(0.0).unwrap();
        assert!((r.t_units - 1.0).abs() < 5e-3);
        assert!((r.omega1_over_g - 3.8730).abs() < 5e-3);
        assert!(r.distance < 1e-10);
        assert!((r.distance - cnot_distance(&r.invariants)).abs() < 1e-12);
    }

    #[test]
    fn two_step_calibration_rejects_large_detuning() {
        assert!(matches!(
            calibrate_two_step(2.1),
            Err(Error::DetuningOutOfRange { .. })
        ));
        let r = calibrate_two_step(0.5).unwrap();
        assert!((r.t_units - 1.0088).abs() < 1e-4);
        assert!(r.distance < 1e-20);
    }

    #[test]
    fn sweep_records_row_errors() {
        let rows = sweep(&[1.9, 2.1], GateKind::TwoStep);
        assert_eq!(rows.len(), 2);
        assert!((rows[0].outcome.as_ref().unwrap().t_units - 1.2445).abs() < 1e-4);
        assert!(rows[1].outcome.is_err());
    }

    #[test]
    fn calibration_csv_blank_fidelity() {
        let r = calibrate_two_step(0.0).unwrap();
        let mut buf = Vec::new();
        write_calibration_csv(&[r], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CALIBRATION_CSV_HEADER.join(","));
        let row = lines.next().unwrap();
        assert!(row.starts_with("0.000000,1.000000,0.000000,"), "{row}");
        assert!(row.ends_with(",,true"), "{row}");
    }
}
