//! Propagators for the undriven entangling segments.
//!
//! With the drive off, the exchange interaction only mixes `|01>` and `|10>`,
//! so both frames admit closed forms in terms of the amplitudes
//! `u = cos(Lt/2) + i(delta/L) sin(Lt/2)` and `v = (2g/L) sin(Lt/2)` with
//! `L = sqrt(delta^2 + 4g^2)`. The stepwise integrator is an independent
//! check on the time-dependent frame.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{h_rwa_frame2, SystemParams};
use crate::qmat::{expm_skew, Operator4, ONE, ZERO};

/// Default slice count for [`evolve_stepwise`].
pub const DEFAULT_STEPS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UVPair {
    pub u: Complex64,
    pub v: f64,
}

impl UVPair {
    /// `|u|^2 + v^2`; equal to one for every `(t, delta)`.
    pub fn norm_sqr(&self) -> f64 {
        self.u.norm_sqr() + self.v * self.v
    }
}

/// Rabi frequency of the exchange doublet, `sqrt(delta^2 + 4g^2)`.
pub fn doublet_frequency(p: &SystemParams) -> f64 {
    (p.delta_over_g * p.delta_over_g + 4.0).sqrt()
}

pub fn uv_coefficients(t: f64, p: &SystemParams) -> UVPair {
    let lambda = doublet_frequency(p);
    let (s, c) = (0.5 * lambda * t).sin_cos();
    UVPair {
        u: Complex64::new(c, p.delta_over_g / lambda * s),
        v: 2.0 / lambda * s,
    }
}

/// `exp(-t gtilde ZZ)`, diagonal.
fn zz_phase(t: f64, p: &SystemParams) -> [Complex64; 4] {
    let a = Complex64::from_polar(1.0, -0.5 * t * p.gtilde_over_g);
    let b = a.conj();
    [a, b, b, a]
}

fn left_diag(d: [Complex64; 4], rows: [[Complex64; 4]; 4]) -> Operator4 {
    let mut out = rows;
    for (r, row) in out.iter_mut().enumerate() {
        for v in row.iter_mut() {
            *v *= d[r];
        }
    }
    Operator4::from_rows(out)
}

/// Undriven propagator in the doubly rotating frame (frame 1).
///
/// The drive amplitude in `p` is ignored.
pub fn entangling_u_frame1(t: f64, p: &SystemParams) -> Operator4 {
    let UVPair { u, v } = uv_coefficients(t, p);
    let corner = Complex64::from_polar(1.0, 0.5 * p.delta_over_g * t);
    let miv = Complex64::new(0.0, -v);
    left_diag(
        zz_phase(t, p),
        [
            [corner, ZERO, ZERO, ZERO],
            [ZERO, u, miv, ZERO],
            [ZERO, miv, u.conj(), ZERO],
            [ZERO, ZERO, ZERO, corner.conj()],
        ],
    )
}

/// Undriven propagator in the frame co-rotating with each qubit (frame 2).
///
/// On the exchange doublet this is the rotating-drive solution
/// `exp(-i t delta sz/2) exp(-i t (-delta sz/2 + g sx))`; the corners are 1.
pub fn entangling_u_frame2(t: f64, p: &SystemParams) -> Operator4 {
    let UVPair { u, v } = uv_coefficients(t, p);
    let down = Complex64::from_polar(1.0, -0.5 * p.delta_over_g * t);
    let up = down.conj();
    let miv = Complex64::new(0.0, -v);
    left_diag(
        zz_phase(t, p),
        [
            [ONE, ZERO, ZERO, ZERO],
            [ZERO, u * down, miv * down, ZERO],
            [ZERO, miv * up, u.conj() * up, ZERO],
            [ZERO, ZERO, ZERO, ONE],
        ],
    )
}

/// Time-ordered midpoint-rule product for the frame-2 Hamiltonian, drive included.
///
/// Global error is second order in the slice width.
pub fn evolve_stepwise(p: &SystemParams, t: f64, steps: usize) -> Result<Operator4> {
    if steps == 0 {
        return Err(Error::InvalidArgument("steps must be at least 1".into()));
    }
    let dt = t / steps as f64;
    let mut u = Operator4::identity();
    for k in 0..steps {
        let mid = (k as f64 + 0.5) * dt;
        let slice = expm_skew(&(-dt * h_rwa_frame2(p, mid)))?;
        u = slice * u;
    }
    Ok(u)
}
