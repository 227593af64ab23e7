//! Local equivalence classes of two-qubit gates.
//!
//! Two gates are locally equivalent when they differ only by single-qubit
//! rotations and a global phase. The class is captured by the Makhlin
//! invariants `(G1, G2)`, computed in the magic (Bell) basis where local
//! gates become real orthogonal, or by canonical coordinates `(c1, c2, c3)`
//! such that `U ~ exp(-c1 XX - c2 YY - c3 ZZ)`.
//!
//! Canonical coordinates are reported in the chamber
//! `pi/2 >= c1 >= c2 >= |c3|`, with `c3 >= 0` on the face `c1 = pi/2` where
//! the two signs name the same class. The controlled-NOT class sits at
//! `(pi/2, 0, 0)` with `(G1, G2) = (0, 1)`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};
use std::io::Write;

use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fmt::fixed6;
use crate::model::{generator, h_rwa_frame1, GeneratorName, SystemParams};
use crate::propagate::doublet_frequency;
use crate::qmat::{expm_skew, Operator4, I, ONE, ZERO};

/// Default grid size for [`weyl_trajectory`].
pub const DEFAULT_TRAJECTORY_SAMPLES: usize = 2048;

/// Faces closer than this are treated as lying on the chamber boundary.
const BOUNDARY_EPS: f64 = 1e-9;

/// Makhlin invariants of a local equivalence class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantPair {
    pub g1: Complex64,
    pub g2: f64,
}

impl InvariantPair {
    pub const CNOT: InvariantPair = InvariantPair { g1: ZERO, g2: 1.0 };

    pub const IDENTITY: InvariantPair = InvariantPair { g1: ONE, g2: 3.0 };

    /// Largest componentwise deviation from `other`.
    pub fn max_abs_diff(&self, other: &InvariantPair) -> f64 {
        (self.g1 - other.g1).norm().max((self.g2 - other.g2).abs())
    }
}

/// Canonical class coordinates, in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeylPoint {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl WeylPoint {
    pub const CNOT: WeylPoint = WeylPoint {
        c1: FRAC_PI_2,
        c2: 0.0,
        c3: 0.0,
    };

    pub fn new(c1: f64, c2: f64, c3: f64) -> Self {
        WeylPoint { c1, c2, c3 }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.c1, self.c2, self.c3]
    }

    /// True when the point satisfies the chamber inequalities to within `tol`.
    pub fn in_chamber(&self, tol: f64) -> bool {
        self.c1 <= FRAC_PI_2 + tol && self.c1 + tol >= self.c2 && self.c2 + tol >= self.c3.abs()
    }

    /// `exp(-c1 XX - c2 YY - c3 ZZ)`, the canonical representative of the class.
    pub fn canonical_gate(&self) -> Operator4 {
        use GeneratorName::*;
        let g = -(self.c1 * generator(XX) + self.c2 * generator(YY) + self.c3 * generator(ZZ));
        expm_skew(&g).expect("canonical generator is skew-Hermitian")
    }

    /// Distance to `other` in radians (max norm).
    pub fn max_abs_diff(&self, other: &WeylPoint) -> f64 {
        (self.c1 - other.c1)
            .abs()
            .max((self.c2 - other.c2).abs())
            .max((self.c3 - other.c3).abs())
    }
}

/// One point of a steering trajectory; `t` is in units of `1/g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub point: WeylPoint,
}

fn magic_basis() -> Matrix4<Complex64> {
    let s = Complex64::from(FRAC_1_SQRT_2);
    let si = I * FRAC_1_SQRT_2;
    Matrix4::new(
        s, si, ZERO, ZERO, //
        ZERO, ZERO, si, s, //
        ZERO, ZERO, si, -s, //
        s, -si, ZERO, ZERO,
    )
}

/// `m = U_B^T U_B` with `U_B` the magic-basis form of `u`.
fn magic_gram(u: &Matrix4<Complex64>) -> Matrix4<Complex64> {
    let q = magic_basis();
    let ub = q.adjoint() * u * q;
    ub.transpose() * ub
}

pub fn makhlin_invariants(u: &Operator4) -> Result<InvariantPair> {
    u.require_unitary()?;
    let m = magic_gram(u.matrix());
    let det = u.determinant();
    let tr = m.trace();
    let tr2 = tr * tr;
    let tr_sq = (m * m).trace();
    let g1 = tr2 / (16.0 * det);
    let g2 = (tr2 - tr_sq) / (4.0 * det);
    debug_assert!(g2.im.abs() < 1e-9, "G2 has imaginary part {}", g2.im);
    Ok(InvariantPair {
        g1: Complex64::new(g1.re + 0.0, g1.im + 0.0),
        g2: g2.re + 0.0,
    })
}

/// Closed-form invariants of `U(t) exp(-pi X1) U(t)` for the undriven propagator.
///
/// Independent of the ZZ coupling and of the rotating frame.
pub fn two_step_invariants_closed(t: f64, p: &SystemParams) -> InvariantPair {
    let d2 = p.delta_over_g * p.delta_over_g;
    let lambda = doublet_frequency(p);
    let l2 = d2 + 4.0;
    let c = (0.5 * lambda * t).cos();
    let g1 = ((d2 + 8.0 * c * c - 4.0) / l2).powi(2);
    let g2 = (3.0 * d2 * d2
        + 8.0 * d2 * (1.0 + 2.0 * (t * lambda).cos())
        + 16.0 * (2.0 + (2.0 * t * lambda).cos()))
        / (l2 * l2);
    InvariantPair {
        g1: Complex64::from(g1),
        g2,
    }
}

/// Squared distance of a class from the controlled-NOT class,
/// `|G1 - 0|^2 + |G2 - 1|^2`.
pub fn cnot_distance(inv: &InvariantPair) -> f64 {
    inv.g1.norm_sqr() + (inv.g2 - 1.0).powi(2)
}

/// Eigen-angles `x_k` of the magic-basis Gram matrix, with `m = diag(exp(-i x_k))`
/// up to orthogonal similarity and `sum x_k = 0`.
fn gram_angles(u: &Operator4) -> [f64; 4] {
    let det = u.determinant();
    let su = u.matrix() * Complex64::from_polar(1.0, -det.arg() / 4.0);
    let m = magic_gram(&su);
    let eig = m.eigenvalues().expect("complex Schur form is triangular");
    let mut x = [0.0; 4];
    for (k, lambda) in eig.iter().enumerate() {
        x[k] = -lambda.arg();
    }
    // Sort for a deterministic assignment; the stable order breaks ties.
    x.sort_by(|a, b| b.total_cmp(a));
    // The eigenvalue product is one, so the angles sum to a multiple of 2 pi.
    let winding = (x.iter().sum::<f64>() / (2.0 * PI)).round() as i64;
    if winding > 0 {
        for v in x.iter_mut().take(winding as usize) {
            *v -= 2.0 * PI;
        }
    } else if winding < 0 {
        for v in x.iter_mut().rev().take((-winding) as usize) {
            *v += 2.0 * PI;
        }
    }
    x
}

/// Maps any coordinate triple into the chamber using the local symmetries:
/// shifts by pi, permutations and sign flips of pairs.
pub fn canonicalize(c: [f64; 3]) -> WeylPoint {
    let mut c = c.map(|v| {
        let r = v - PI * (v / PI).round();
        // Keep pi/2 rather than -pi/2 on the branch cut.
        if r <= -FRAC_PI_2 {
            r + PI
        } else {
            r
        }
    });
    c.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
    if c[0] < 0.0 {
        c[0] = -c[0];
        c[2] = -c[2];
    }
    if c[1] < 0.0 {
        c[1] = -c[1];
        c[2] = -c[2];
    }
    if (FRAC_PI_2 - c[0]).abs() < BOUNDARY_EPS && c[2] < 0.0 {
        c[2] = -c[2];
    }
    WeylPoint::new(c[0], c[1], c[2])
}

pub fn weyl_coordinates(u: &Operator4) -> Result<WeylPoint> {
    u.require_unitary()?;
    let x = gram_angles(u);
    let raw = [
        0.5 * (x[0] + x[2]),
        0.5 * (x[1] + x[2]),
        0.5 * (x[0] + x[1]),
    ];
    Ok(canonicalize(raw))
}

/// Samples the class of `exp(-t iH)` for the frame-1 Hamiltonian on a uniform
/// grid over `[0, t_max]` (times in units of `1/g`).
pub fn weyl_trajectory(
    p: &SystemParams,
    t_max: f64,
    n_samples: usize,
) -> Result<Vec<TrajectorySample>> {
    if n_samples < 2 {
        return Err(crate::Error::InvalidArgument(
            "a trajectory needs at least two samples".into(),
        ));
    }
    let h = h_rwa_frame1(p);
    let step = t_max / (n_samples - 1) as f64;
    (0..n_samples)
        .map(|k| {
            let t = if k + 1 == n_samples {
                t_max
            } else {
                k as f64 * step
            };
            let u = expm_skew(&(-t * h))?;
            Ok(TrajectorySample {
                t,
                point: weyl_coordinates(&u)?,
            })
        })
        .collect()
}

/// Writes `t,c1,c2,c3` with `t` in units of `pi/2g` and coordinates in units of `pi/2`.
pub fn write_trajectory_csv<W: Write>(samples: &[TrajectorySample], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "c1", "c2", "c3"])?;
    for s in samples {
        w.write_record([
            fixed6(s.t / FRAC_PI_2),
            fixed6(s.point.c1 / FRAC_PI_2),
            fixed6(s.point.c2 / FRAC_PI_2),
            fixed6(s.point.c3 / FRAC_PI_2),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
