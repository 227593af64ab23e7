//! Controlled-NOT control sequences.
//!
//! Two-step: `e^{i pi/4} R_post [U(t) e^{-pi X1} U(t)] R_pre` with the drive off
//! during `U`. Single-step: `e^{i 5pi/4} R_post U(t) R_pre` with `U` generated by
//! the driven frame-1 Hamiltonian. In both, the entangling core fixes the local
//! class; the local rotations only move the gate within it.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::equivclass::{weyl_coordinates, TrajectorySample};
use crate::error::{Error, Result};
use crate::model::{h_rwa_frame1, SystemParams};
use crate::optimize::{nelder_mead, NMOptions};
use crate::propagate::{entangling_u_frame1, entangling_u_frame2};
use crate::qmat::{
    expm_skew, frob_dist, identity2, kron2, pauli_x, pauli_y, pauli_z, Op2, Operator4, ONE, ZERO,
};

/// Largest `|delta|/g` for which the two-step sequence reaches the CNOT class.
pub const TWO_STEP_DETUNING_LIMIT: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    #[serde(rename = "two-step")]
    TwoStep,
    #[serde(rename = "one-step", alias = "single-step")]
    SingleStep,
}

impl GateKind {
    /// Time unit of the tabulated durations: `pi/4g` (two-step) or `pi/2g` (single-step).
    pub fn time_unit(self) -> f64 {
        match self {
            GateKind::TwoStep => FRAC_PI_4,
            GateKind::SingleStep => FRAC_PI_2,
        }
    }

    pub fn time_unit_label(self) -> &'static str {
        match self {
            GateKind::TwoStep => "pi/4g",
            GateKind::SingleStep => "pi/2g",
        }
    }
}

/// Rotating frame for the undriven propagator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Frame {
    /// Frame 1: both qubits rotate at the first qubit's splitting; static Hamiltonian.
    Doubly,
    /// Frame 2: each qubit rotates at its own splitting; the exchange term rotates at `delta`.
    Individual,
}

impl Frame {
    pub fn from_index(k: u8) -> Result<Frame> {
        match k {
            1 => Ok(Frame::Doubly),
            2 => Ok(Frame::Individual),
            _ => Err(Error::InvalidArgument(format!(
                "frame must be 1 or 2, got {k}"
            ))),
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Frame::Doubly => 1,
            Frame::Individual => 2,
        }
    }
}

/// `exp(-theta (i/2) sigma)` for a Pauli matrix `sigma`.
pub fn pauli_rotation(sigma: &Op2, theta: f64) -> Op2 {
    let (s, c) = (0.5 * theta).sin_cos();
    identity2() * Complex64::from(c) - sigma * Complex64::new(0.0, s)
}

/// `exp(-a Z) exp(-b Y) exp(-c Z)` in the `(i/2) sigma` normalization.
pub fn zyz(angles: [f64; 3]) -> Op2 {
    let [a, b, c] = angles;
    pauli_rotation(&pauli_z(), a) * pauli_rotation(&pauli_y(), b) * pauli_rotation(&pauli_z(), c)
}

/// Writes a single-qubit unitary as `e^{i phase} zyz(angles)`.
pub fn zyz_angles(u: &Op2) -> (f64, [f64; 3]) {
    let phase = 0.5 * u.determinant().arg();
    let v = u * Complex64::from_polar(1.0, -phase);
    // v = [[e^{-i(a+c)/2} cos(b/2), -e^{-i(a-c)/2} sin(b/2)],
    //      [e^{ i(a-c)/2} sin(b/2),  e^{ i(a+c)/2} cos(b/2)]]
    let b = 2.0 * v[(1, 0)].norm().atan2(v[(1, 1)].norm());
    let sum = 2.0 * v[(1, 1)].arg();
    let diff = 2.0 * v[(1, 0)].arg();
    ((phase), [0.5 * (sum + diff), b, 0.5 * (sum - diff)])
}

/// Local rotations around an entangling core, as z-y-z Euler triples.
///
/// Realizes `e^{i phase} (post_q2 (x) post_q1) U (pre_q2 (x) pre_q1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalRotationSpec {
    pub post_q2: [f64; 3],
    pub post_q1: [f64; 3],
    pub pre_q2: [f64; 3],
    pub pre_q1: [f64; 3],
    pub global_phase: f64,
}

impl Default for LocalRotationSpec {
    fn default() -> Self {
        LocalRotationSpec {
            post_q2: [0.0; 3],
            post_q1: [0.0; 3],
            pre_q2: [0.0; 3],
            pre_q1: [0.0; 3],
            global_phase: 0.0,
        }
    }
}

impl LocalRotationSpec {
    /// Decomposes arbitrary single-qubit factors; their phases fold into `global_phase`.
    pub fn from_factors(
        post_q2: &Op2,
        post_q1: &Op2,
        pre_q2: &Op2,
        pre_q1: &Op2,
        phase: f64,
    ) -> Self {
        let (p1, post_q2) = zyz_angles(post_q2);
        let (p2, post_q1) = zyz_angles(post_q1);
        let (p3, pre_q2) = zyz_angles(pre_q2);
        let (p4, pre_q1) = zyz_angles(pre_q1);
        LocalRotationSpec {
            post_q2,
            post_q1,
            pre_q2,
            pre_q1,
            global_phase: phase + p1 + p2 + p3 + p4,
        }
    }

    /// The twelve Euler angles in `post_q2, post_q1, pre_q2, pre_q1` order.
    pub fn euler_angles(&self) -> [f64; 12] {
        let mut out = [0.0; 12];
        for (k, triple) in [self.post_q2, self.post_q1, self.pre_q2, self.pre_q1]
            .iter()
            .enumerate()
        {
            out[3 * k..3 * k + 3].copy_from_slice(triple);
        }
        out
    }

    pub fn from_euler_angles(angles: &[f64], global_phase: f64) -> Result<Self> {
        if angles.len() != 12 {
            return Err(Error::InvalidArgument(format!(
                "expected 12 Euler angles, got {}",
                angles.len()
            )));
        }
        let triple = |k: usize| [angles[3 * k], angles[3 * k + 1], angles[3 * k + 2]];
        Ok(LocalRotationSpec {
            post_q2: triple(0),
            post_q1: triple(1),
            pre_q2: triple(2),
            pre_q1: triple(3),
            global_phase,
        })
    }

    pub fn post(&self) -> Operator4 {
        kron2(&zyz(self.post_q2), &zyz(self.post_q1))
    }

    pub fn pre(&self) -> Operator4 {
        kron2(&zyz(self.pre_q2), &zyz(self.pre_q1))
    }

    pub fn apply(&self, core: &Operator4) -> Operator4 {
        (self.post() * *core * self.pre()).scale(Complex64::from_polar(1.0, self.global_phase))
    }

    /// Resonant two-step rotations: `R_post = e^{-(pi/2) Y2}`,
    /// `R_pre = e^{-(pi/2) Z2} e^{(pi/2)(X2 + X1)}`, phase `pi/4`.
    pub fn resonant_two_step() -> Self {
        let (x, y, z) = (pauli_x(), pauli_y(), pauli_z());
        LocalRotationSpec::from_factors(
            &pauli_rotation(&y, FRAC_PI_2),
            &identity2(),
            &(pauli_rotation(&z, FRAC_PI_2) * pauli_rotation(&x, -FRAC_PI_2)),
            &pauli_rotation(&x, -FRAC_PI_2),
            FRAC_PI_4,
        )
    }

    /// Detuned two-step rotations in frame 1:
    /// `R_post = e^{-(pi/2)Y2} e^{-(pi/2)(a2 Z2 + a1 Z1)}`,
    /// `R_pre = e^{-(pi/2)((1 + a2) Z2 + a1 Z1)} e^{(pi/2)(X2 + X1)}`.
    pub fn detuned_two_step_frame1(alpha2: f64, alpha1: f64) -> Self {
        let (x, y, z) = (pauli_x(), pauli_y(), pauli_z());
        LocalRotationSpec::from_factors(
            &(pauli_rotation(&y, FRAC_PI_2) * pauli_rotation(&z, FRAC_PI_2 * alpha2)),
            &pauli_rotation(&z, FRAC_PI_2 * alpha1),
            &(pauli_rotation(&z, FRAC_PI_2 * (1.0 + alpha2)) * pauli_rotation(&x, -FRAC_PI_2)),
            &(pauli_rotation(&z, FRAC_PI_2 * alpha1) * pauli_rotation(&x, -FRAC_PI_2)),
            FRAC_PI_4,
        )
    }

    /// Detuned two-step rotations in frame 2:
    /// `R_post = e^{-(pi/2)Y2} e^{-(pi/2) bt Z2}`,
    /// `R_pre = e^{-(pi/2)(1 + b) Z2} e^{(pi/2)(X2 + X1)}`.
    pub fn detuned_two_step_frame2(beta_tilde: f64, beta: f64) -> Self {
        let (x, y, z) = (pauli_x(), pauli_y(), pauli_z());
        LocalRotationSpec::from_factors(
            &(pauli_rotation(&y, FRAC_PI_2) * pauli_rotation(&z, FRAC_PI_2 * beta_tilde)),
            &identity2(),
            &(pauli_rotation(&z, FRAC_PI_2 * (1.0 + beta)) * pauli_rotation(&x, -FRAC_PI_2)),
            &pauli_rotation(&x, -FRAC_PI_2),
            FRAC_PI_4,
        )
    }

    /// Resonant single-step rotations: `R_post = e^{-(pi/2) Y2}`,
    /// `R_pre = e^{-(pi/2) Z2} e^{(pi/2)(X2 - X1)}`, phase `5pi/4`.
    pub fn resonant_single_step() -> Self {
        let (x, y, z) = (pauli_x(), pauli_y(), pauli_z());
        LocalRotationSpec::from_factors(
            &pauli_rotation(&y, FRAC_PI_2),
            &identity2(),
            &(pauli_rotation(&z, FRAC_PI_2) * pauli_rotation(&x, -FRAC_PI_2)),
            &pauli_rotation(&x, FRAC_PI_2),
            5.0 * FRAC_PI_4,
        )
    }

    /// Detuned single-step rotations:
    /// `R_post = e^{-(pi/2)Y2} e^{-(pi/2)(a2 Z2 + a1 Z1)}`,
    /// `R_pre = e^{-(pi/2)((1 + a2) Z2 + a1 Z1)} e^{(pi/2)(X2 - (1 + g1) X1)}`.
    pub fn detuned_single_step(alpha2: f64, alpha1: f64, gamma1: f64) -> Self {
        let (x, y, z) = (pauli_x(), pauli_y(), pauli_z());
        LocalRotationSpec::from_factors(
            &(pauli_rotation(&y, FRAC_PI_2) * pauli_rotation(&z, FRAC_PI_2 * alpha2)),
            &pauli_rotation(&z, FRAC_PI_2 * alpha1),
            &(pauli_rotation(&z, FRAC_PI_2 * (1.0 + alpha2)) * pauli_rotation(&x, -FRAC_PI_2)),
            &(pauli_rotation(&z, FRAC_PI_2 * alpha1)
                * pauli_rotation(&x, FRAC_PI_2 * (1.0 + gamma1))),
            5.0 * FRAC_PI_4,
        )
    }
}

/// A complete gate: sequence kind, physical parameters, entangling time and rotations.
#[derive(Debug, Clone, PartialEq)]
pub struct GateRecipe {
    pub kind: GateKind,
    pub params: SystemParams,
    /// Entangling time in units of `1/g`.
    pub t: f64,
    pub frame: Frame,
    pub rotations: LocalRotationSpec,
}

/// Wire form of [`GateRecipe`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateRecipeJson {
    pub kind: GateKind,
    pub delta_over_g: f64,
    pub gtilde_over_g: f64,
    pub omega1_over_g: f64,
    /// `"pi/4g"` or `"pi/2g"`.
    pub t_units: String,
    pub t_value: f64,
    pub euler_angles: Vec<f64>,
    pub global_phase: f64,
    #[serde(default = "default_frame_index")]
    pub frame: u8,
}

fn default_frame_index() -> u8 {
    1
}

impl GateRecipe {
    pub fn new(
        kind: GateKind,
        params: SystemParams,
        t: f64,
        frame: Frame,
        rotations: LocalRotationSpec,
    ) -> Result<Self> {
        if !(t > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "entangling time must be positive, got {t}"
            )));
        }
        Ok(GateRecipe {
            kind,
            params,
            t,
            frame,
            rotations,
        })
    }

    /// The entangling core: `U e^{-pi X1} U` (two-step) or `U` (single-step).
    pub fn core(&self) -> Result<Operator4> {
        match self.kind {
            GateKind::TwoStep => Ok(entangling_product(self.t, &self.params, self.frame)),
            GateKind::SingleStep => single_step_u(self.t, &self.params),
        }
    }

    pub fn realize(&self) -> Result<Operator4> {
        Ok(self.rotations.apply(&self.core()?))
    }

    pub fn to_json(&self) -> GateRecipeJson {
        GateRecipeJson {
            kind: self.kind,
            delta_over_g: self.params.delta_over_g,
            gtilde_over_g: self.params.gtilde_over_g,
            omega1_over_g: self.params.omega1_over_g,
            t_units: self.kind.time_unit_label().to_string(),
            t_value: self.t / self.kind.time_unit(),
            euler_angles: self.rotations.euler_angles().to_vec(),
            global_phase: self.rotations.global_phase,
            frame: self.frame.index(),
        }
    }

    pub fn from_json(j: &GateRecipeJson) -> Result<Self> {
        let unit = match j.t_units.as_str() {
            "pi/4g" => FRAC_PI_4,
            "pi/2g" => FRAC_PI_2,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown time unit {other:?}"
                )));
            }
        };
        GateRecipe::new(
            j.kind,
            SystemParams::new(j.delta_over_g, j.gtilde_over_g, j.omega1_over_g),
            j.t_value * unit,
            Frame::from_index(j.frame)?,
            LocalRotationSpec::from_euler_angles(&j.euler_angles, j.global_phase)?,
        )
    }
}

/// The canonical controlled-NOT: qubit 2 controls, `|10> <-> |11>`.
pub fn canonical_cnot() -> Operator4 {
    Operator4::from_rows([
        [ONE, ZERO, ZERO, ZERO],
        [ZERO, ONE, ZERO, ZERO],
        [ZERO, ZERO, ZERO, ONE],
        [ZERO, ZERO, ONE, ZERO],
    ])
}

/// `e^{-pi X1} = -i sigma_x^(1)`.
pub fn pi_pulse_x1() -> Operator4 {
    kron2(&identity2(), &pauli_x()).scale(Complex64::new(0.0, -1.0))
}

/// Two-step gate time `(pi - arccos(delta^2/4g^2)) / sqrt(delta^2 + 4g^2)`, in units of `1/g`.
pub fn two_step_time(p: &SystemParams) -> Result<f64> {
    let d = p.delta_over_g;
    if !(d.abs() <= TWO_STEP_DETUNING_LIMIT) {
        return Err(Error::DetuningOutOfRange {
            delta_over_g: d,
            limit: TWO_STEP_DETUNING_LIMIT,
        });
    }
    let d2 = d * d;
    Ok((PI - (d2 / 4.0).acos()) / (d2 + 4.0).sqrt())
}

/// `U(t) e^{-pi X1} U(t)` with the undriven propagator of the chosen frame.
pub fn entangling_product(t: f64, p: &SystemParams, frame: Frame) -> Operator4 {
    let u = match frame {
        Frame::Doubly => entangling_u_frame1(t, p),
        Frame::Individual => entangling_u_frame2(t, p),
    };
    u * pi_pulse_x1() * u
}

/// Classes of `U(t) e^{-pi X1} U(t)` on a uniform grid over `[0, t_max]` (units of `1/g`).
pub fn two_step_trajectory(
    p: &SystemParams,
    frame: Frame,
    t_max: f64,
    n_samples: usize,
) -> Result<Vec<TrajectorySample>> {
    if n_samples < 2 {
        return Err(Error::InvalidArgument(
            "a trajectory needs at least two samples".into(),
        ));
    }
    let step = t_max / (n_samples - 1) as f64;
    (0..n_samples)
        .map(|k| {
            let t = if k + 1 == n_samples {
                t_max
            } else {
                k as f64 * step
            };
            Ok(TrajectorySample {
                t,
                point: weyl_coordinates(&entangling_product(t, p, frame))?,
            })
        })
        .collect()
}

/// Full two-step gate at the closed-form gate time.
pub fn assemble_two_step(
    p: &SystemParams,
    rotations: &LocalRotationSpec,
    frame: Frame,
) -> Result<Operator4> {
    let t = two_step_time(p)?;
    Ok(rotations.apply(&entangling_product(t, p, frame)))
}

/// Single-step entangling evolution `exp(-t [-delta Z2 + Omega1 X1 + g(XX + YY)])`.
pub fn single_step_u(t: f64, p: &SystemParams) -> Result<Operator4> {
    if p.gtilde_over_g != 0.0 {
        return Err(Error::UnsupportedCoupling {
            gtilde_over_g: p.gtilde_over_g,
        });
    }
    expm_skew(&(-t * h_rwa_frame1(p)))
}

/// `sqrt(1 - tr[(U - T)^dagger (U - T)])`; defined only close to the target.
pub fn fidelity(u: &Operator4, target: &Operator4) -> Result<f64> {
    u.require_unitary()?;
    target.require_unitary()?;
    let radicand = 1.0 - frob_dist(u, target).powi(2);
    if radicand < 0.0 {
        return Err(Error::FidelityUndefined { radicand });
    }
    Ok(radicand.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub random_restarts: usize,
    pub seed: u64,
    /// Extra Nelder-Mead passes from the incumbent of each restart.
    pub polish_rounds: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            random_restarts: 32,
            seed: 42,
            polish_rounds: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub rotations: LocalRotationSpec,
    /// Frobenius distance of the fitted gate from the target.
    pub distance: f64,
    /// `None` where the fitted gate is too far from the target for the fidelity to exist.
    pub fidelity: Option<f64>,
    /// Best distance after each restart, in restart order.
    pub best_so_far: Vec<f64>,
}

/// Searches for local rotations bringing `e^{i phase} R_post U R_pre` closest to `target`.
pub fn fit_local_rotations(u_ent: &Operator4, target: &Operator4) -> Result<FitResult> {
    fit_local_rotations_with(u_ent, target, &FitOptions::default())
}

pub fn fit_local_rotations_with(
    u_ent: &Operator4,
    target: &Operator4,
    opts: &FitOptions,
) -> Result<FitResult> {
    u_ent.require_unitary()?;
    target.require_unitary()?;
    let target_dag = target.adjoint();

    // For unitary operands the optimal phase is closed-form:
    // min_phase |e^{i phase} V - T|^2 = 8 - 2 |tr(T^dagger V)|.
    let overlap = |angles: &[f64]| -> Complex64 {
        let spec = LocalRotationSpec::from_euler_angles(angles, 0.0).expect("twelve angles");
        (target_dag * spec.post() * *u_ent * spec.pre()).trace()
    };
    let objective = |angles: &[f64]| (8.0 - 2.0 * overlap(angles).norm()).max(0.0);

    let bound = 2.0 * PI;
    let mut nm = NMOptions::with_bounds(vec![(-bound, bound); 12]);
    nm.seed = opts.seed;
    nm.x_tolerance = 1e-8;
    nm.f_tolerance = 1e-12;

    let mut starts: Vec<(Vec<f64>, f64)> = [
        LocalRotationSpec::resonant_two_step(),
        LocalRotationSpec::resonant_single_step(),
    ]
    .iter()
    .map(|s| {
        let wrapped: Vec<f64> = s.euler_angles().iter().map(|a| wrap_angle(*a)).collect();
        (wrapped, 0.05)
    })
    .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.random_restarts {
        let x: Vec<f64> = (0..12).map(|_| rng.random_range(-PI..PI)).collect();
        starts.push((x, 0.5));
    }

    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut best_so_far = Vec::with_capacity(starts.len());
    for (x0, step) in starts {
        nm.initial_step = step;
        let mut run = nelder_mead(objective, &x0, &nm)?;
        for _ in 0..opts.polish_rounds {
            nm.initial_step = 0.05;
            let again = nelder_mead(objective, &run.x, &nm)?;
            let improved = again.f < run.f - 1e-15;
            if again.f <= run.f {
                run = again;
            }
            if !improved {
                break;
            }
        }
        nm.initial_step = step;
        if best.as_ref().is_none_or(|(_, f)| run.f < *f) {
            best = Some((run.x, run.f));
        }
        best_so_far.push(
            best.as_ref()
                .map(|(_, f)| f.sqrt())
                .unwrap_or(f64::INFINITY),
        );
    }

    let (angles, _) = best.expect("at least one start");
    let phase = -overlap(&angles).arg();
    let rotations = LocalRotationSpec::from_euler_angles(&angles, phase)?;
    let distance = frob_dist(&rotations.apply(u_ent), target);
    let fidelity = fidelity(&rotations.apply(u_ent), target).ok();
    Ok(FitResult {
        rotations,
        distance,
        fidelity,
        best_so_far,
    })
}

/// Maps an angle into `[-pi, pi)`.
fn wrap_angle(a: f64) -> f64 {
    (a + PI).rem_euclid(2.0 * PI) - PI
}
