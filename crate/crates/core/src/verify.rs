//! Property suite run by the `verify` command.
//!
//! Each check samples its inputs from a seeded generator and records the worst
//! deviation seen, so a failing report says by how much as well as where.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::equivclass::{makhlin_invariants, weyl_coordinates, weyl_trajectory, WeylPoint};
use crate::error::Result;
use crate::model::SystemParams;
use crate::propagate::{
    entangling_u_frame1, entangling_u_frame2, evolve_stepwise, uv_coefficients, DEFAULT_STEPS,
};
use crate::qmat::{frob_dist, kron2, Operator4};
use crate::sequences::{
    entangling_product, single_step_u, two_step_time, zyz, Frame, TWO_STEP_DETUNING_LIMIT,
};

/// Random draws per sampled check.
pub const SAMPLES_PER_CHECK: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Largest deviation observed (or the measured value, for the convergence ratio).
    pub worst: f64,
    pub tolerance: f64,
}

impl Check {
    fn at_most(name: &'static str, worst: f64, tolerance: f64) -> Check {
        Check {
            name,
            passed: worst <= tolerance,
            worst,
            tolerance,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(
            f,
            "{status}  {:<32} worst={:.3e} tol={:.1e}",
            self.name, self.worst, self.tolerance
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        let passed = self.checks.iter().filter(|c| c.passed).count();
        write!(
            f,
            "{passed}/{} checks passed (seed {})",
            self.checks.len(),
            self.seed
        )
    }
}

fn random_local(rng: &mut ChaCha8Rng) -> Operator4 {
    let mut angles = || [(); 3].map(|_| rng.random_range(-PI..PI));
    let (a, b) = (angles(), angles());
    kron2(&zyz(a), &zyz(b))
}

fn random_detuning(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(-TWO_STEP_DETUNING_LIMIT..=TWO_STEP_DETUNING_LIMIT)
}

fn check_unitarity(rng: &mut ChaCha8Rng) -> Result<Check> {
    let mut worst = 0.0f64;
    for _ in 0..SAMPLES_PER_CHECK {
        let p = SystemParams::new(random_detuning(rng), rng.random_range(0.0..0.1), 0.0);
        let t = rng.random_range(0.0..4.0);
        let driven = SystemParams::new(p.delta_over_g, 0.0, rng.random_range(0.5..8.0));
        for u in [
            entangling_u_frame1(t, &p),
            entangling_u_frame2(t, &p),
            entangling_product(t, &p, Frame::Doubly),
            single_step_u(t, &driven)?,
        ] {
            worst = worst.max(u.unitarity_defect());
        }
    }
    Ok(Check::at_most("unitarity", worst, 1e-12))
}

fn check_uv_norm(rng: &mut ChaCha8Rng) -> Check {
    let mut worst = 0.0f64;
    for _ in 0..SAMPLES_PER_CHECK {
        let uv = uv_coefficients(
            rng.random_range(0.0..20.0),
            &SystemParams::detuned(random_detuning(rng)),
        );
        worst = worst.max((uv.norm_sqr() - 1.0).abs());
    }
    Check::at_most("|u|^2 + v^2 = 1", worst, 1e-12)
}

fn check_frame_equality(rng: &mut ChaCha8Rng) -> Result<Check> {
    let mut worst = 0.0f64;
    for _ in 0..SAMPLES_PER_CHECK {
        let p = SystemParams::detuned(random_detuning(rng));
        let t = rng.random_range(0.0..4.0);
        let a = makhlin_invariants(&entangling_product(t, &p, Frame::Doubly))?;
        let b = makhlin_invariants(&entangling_product(t, &p, Frame::Individual))?;
        worst = worst.max(a.max_abs_diff(&b));
    }
    Ok(Check::at_most("frame-1/frame-2 invariants", worst, 1e-10))
}

fn check_zz_independence(rng: &mut ChaCha8Rng) -> Result<Check> {
    let mut worst = 0.0f64;
    for _ in 0..SAMPLES_PER_CHECK {
        let p = SystemParams::detuned(random_detuning(rng));
        let t = rng.random_range(0.0..4.0);
        let base = makhlin_invariants(&entangling_product(t, &p, Frame::Doubly))?;
        let pinned = [0.0, 0.05, 0.1];
        let drawn = rng.random_range(0.0..=0.1);
        for gt in pinned.into_iter().chain([drawn]) {
            for frame in [Frame::Doubly, Frame::Individual] {
                let inv = makhlin_invariants(&entangling_product(t, &p.with_gtilde(gt), frame))?;
                worst = worst.max(inv.max_abs_diff(&base));
            }
        }
    }
    Ok(Check::at_most("ZZ-coupling independence", worst, 1e-9))
}

fn check_local_invariance(rng: &mut ChaCha8Rng) -> Result<Check> {
    let mut worst = 0.0f64;
    for _ in 0..SAMPLES_PER_CHECK {
        let p = SystemParams::new(random_detuning(rng), 0.0, rng.random_range(0.5..8.0));
        let u = single_step_u(rng.random_range(0.0..4.0), &p)?;
        let dressed = random_local(rng) * u * random_local(rng);
        let a = makhlin_invariants(&u)?;
        let b = makhlin_invariants(&dressed)?;
        worst = worst.max(a.max_abs_diff(&b));
    }
    Ok(Check::at_most("local-dressing invariance", worst, 1e-10))
}

fn check_weyl_round_trip(rng: &mut ChaCha8Rng) -> Result<Check> {
    let margin = 1e-3;
    let mut worst = 0.0f64;
    let mut drawn = 0;
    while drawn < SAMPLES_PER_CHECK {
        let c1 = rng.random_range(margin..FRAC_PI_2 - margin);
        let c2 = rng.random_range(margin..FRAC_PI_2 - margin);
        let c3 = rng.random_range(-FRAC_PI_2 + margin..FRAC_PI_2 - margin);
        if !(c1 - c2 > margin && c2 - c3.abs() > margin) {
            continue;
        }
        drawn += 1;
        let point = WeylPoint::new(c1, c2, c3);
        let gate = random_local(rng) * point.canonical_gate() * random_local(rng);
        worst = worst.max(weyl_coordinates(&gate)?.max_abs_diff(&point));
    }
    Ok(Check::at_most("Weyl round trip (interior)", worst, 1e-8))
}

fn check_c3_vanishes(rng: &mut ChaCha8Rng) -> Result<Check> {
    let mut worst = 0.0f64;
    for _ in 0..SAMPLES_PER_CHECK / 10 {
        let delta = random_detuning(rng);
        let two = SystemParams::new(delta, rng.random_range(0.0..0.1), 0.0);
        let t2 = two_step_time(&two)?;
        for k in 0..=32 {
            let u = entangling_product(t2 * k as f64 / 32.0, &two, Frame::Doubly);
            worst = worst.max(weyl_coordinates(&u)?.c3.abs());
        }
        let one = SystemParams::new(delta, 0.0, rng.random_range(0.5..8.0));
        for s in weyl_trajectory(&one, 2.5 * FRAC_PI_2, 33)? {
            worst = worst.max(s.point.c3.abs());
        }
    }
    Ok(Check::at_most("c3 = 0 along both sequences", worst, 1e-8))
}

fn check_stepwise_oracle() -> Result<Check> {
    let p = SystemParams::detuned(1.0);
    let t = two_step_time(&p)?;
    let err = frob_dist(
        &evolve_stepwise(&p, t, DEFAULT_STEPS)?,
        &entangling_u_frame2(t, &p),
    );
    Ok(Check::at_most("stepwise integrator oracle", err, 1e-6))
}

/// Error ratio of the stepwise integrator under step halving; 4 for a second-order rule.
pub fn stepwise_convergence_ratio(steps: usize) -> Result<f64> {
    let p = SystemParams::detuned(1.0);
    let t = two_step_time(&p)?;
    let exact = entangling_u_frame2(t, &p);
    let coarse = frob_dist(&evolve_stepwise(&p, t, steps)?, &exact);
    let fine = frob_dist(&evolve_stepwise(&p, t, 2 * steps)?, &exact);
    Ok(coarse / fine)
}

fn check_convergence_order() -> Result<Check> {
    let ratio = stepwise_convergence_ratio(64)?;
    Ok(Check {
        name: "second-order convergence",
        passed: (ratio - 4.0).abs() <= 0.8,
        worst: ratio,
        tolerance: 0.8,
    })
}

/// Runs every property check with inputs drawn from `seed`.
pub fn run_suite(seed: u64) -> Result<VerifyReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let checks = vec![
        check_unitarity(&mut rng)?,
        check_uv_norm(&mut rng),
        check_frame_equality(&mut rng)?,
        check_zz_independence(&mut rng)?,
        check_local_invariance(&mut rng)?,
        check_weyl_round_trip(&mut rng)?,
        check_c3_vanishes(&mut rng)?,
        check_stepwise_oracle()?,
        check_convergence_order()?,
    ];
    Ok(VerifyReport { seed, checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes() {
        let report = run_suite(42).unwrap();
        assert!(report.all_passed(), "{report}");
        assert_eq!(report.checks.len(), 9);
    }

    #[test]
    fn suite_is_deterministic() {
        let a = run_suite(7).unwrap();
        assert_eq!(a, run_suite(7).unwrap());
    }

    #[test]
    fn report_lines() {
        let c = Check::at_most("x", 2.0, 1.0);
        assert!(!c.passed);
        assert!(c.to_string().starts_with("FAIL  x"));
    }
}
