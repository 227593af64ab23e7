//! Generator basis and rotating-wave Hamiltonians.
//!
//! Every generator is `(i/2)` times a Pauli product, e.g. `X1 = (i/2) sigma_x^(1)`
//! and `XY = (i/2) sigma_x^(2) sigma_y^(1)`. In this normalization a rotation
//! about `Z1` by angle `theta` acts on the algebra as an ordinary rotation:
//! `exp(-theta Z1) XX exp(theta Z1) = XX cos(theta) + XY sin(theta)`.
//!
//! All rates are measured in units of the transverse coupling `g`, so `g = 1`
//! and times are in units of `1/g`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmat::{identity2, kron2, pauli_x, pauli_y, pauli_z, Generator4, Op2};

/// Physical parameters of the coupled pair, as ratios to the coupling `g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Detuning of qubit 2 from qubit 1 (signed).
    pub delta_over_g: f64,
    /// Longitudinal (ZZ) coupling; zero for capacitive coupling.
    pub gtilde_over_g: f64,
    /// Rabi amplitude of the drive on qubit 1.
    pub omega1_over_g: f64,
}

impl SystemParams {
    pub fn new(delta_over_g: f64, gtilde_over_g: f64, omega1_over_g: f64) -> Self {
        SystemParams {
            delta_over_g,
            gtilde_over_g,
            omega1_over_g,
        }
    }

    /// Capacitive coupling (`gtilde = 0`) with no drive.
    pub fn detuned(delta_over_g: f64) -> Self {
        SystemParams::new(delta_over_g, 0.0, 0.0)
    }

    /// Builds parameters from absolute rates, normalizing by `g`.
    pub fn from_rates(g: f64, gtilde: f64, delta: f64, omega1: f64) -> Result<Self> {
        if !(g > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "coupling g must be positive, got {g}"
            )));
        }
        if gtilde < 0.0 || omega1 < 0.0 {
            return Err(Error::InvalidArgument(
                "gtilde and omega1 must be non-negative".into(),
            ));
        }
        Ok(SystemParams::new(delta / g, gtilde / g, omega1 / g))
    }

    pub fn with_omega1(self, omega1_over_g: f64) -> Self {
        SystemParams {
            omega1_over_g,
            ..self
        }
    }

    pub fn with_gtilde(self, gtilde_over_g: f64) -> Self {
        SystemParams {
            gtilde_over_g,
            ..self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GeneratorName {
    X1,
    Y1,
    Z1,
    X2,
    Y2,
    Z2,
    XX,
    YY,
    ZZ,
    XY,
    YX,
}

impl GeneratorName {
    pub const ALL: [GeneratorName; 11] = [
        GeneratorName::X1,
        GeneratorName::Y1,
        GeneratorName::Z1,
        GeneratorName::X2,
        GeneratorName::Y2,
        GeneratorName::Z2,
        GeneratorName::XX,
        GeneratorName::YY,
        GeneratorName::ZZ,
        GeneratorName::XY,
        GeneratorName::YX,
    ];

    /// Pauli factors as (qubit 2, qubit 1).
    fn factors(self) -> (Op2, Op2) {
        use GeneratorName::*;
        match self {
            X1 => (identity2(), pauli_x()),
            Y1 => (identity2(), pauli_y()),
            Z1 => (identity2(), pauli_z()),
            X2 => (pauli_x(), identity2()),
            Y2 => (pauli_y(), identity2()),
            Z2 => (pauli_z(), identity2()),
            XX => (pauli_x(), pauli_x()),
            YY => (pauli_y(), pauli_y()),
            ZZ => (pauli_z(), pauli_z()),
            XY => (pauli_x(), pauli_y()),
            YX => (pauli_y(), pauli_x()),
        }
    }
}

/// The `(i/2)`-scaled Pauli product named by `name`.
pub fn generator(name: GeneratorName) -> Generator4 {
    let (q2, q1) = name.factors();
    let m = kron2(&q2, &q1).matrix() * num_complex::Complex64::new(0.0, 0.5);
    Generator4::from_matrix(m)
}

/// `iH` in the doubly rotating frame: `-delta Z2 + Omega1 X1 + g(XX + YY) + gtilde ZZ`.
pub fn h_rwa_frame1(p: &SystemParams) -> Generator4 {
    use GeneratorName::*;
    -p.delta_over_g * generator(Z2)
        + p.omega1_over_g * generator(X1)
        + (generator(XX) + generator(YY))
        + p.gtilde_over_g * generator(ZZ)
}

/// `iH(t)` in the frame co-rotating with each qubit's own splitting.
///
/// The exchange term rotates at the detuning:
/// `g[(XX + YY) cos(delta t) + (YX - XY) sin(delta t)]`.
pub fn h_rwa_frame2(p: &SystemParams, t: f64) -> Generator4 {
    use GeneratorName::*;
    let phase = p.delta_over_g * t;
    p.omega1_over_g * generator(X1)
        + phase.cos() * (generator(XX) + generator(YY))
        + phase.sin() * (generator(YX) - generator(XY))
        + p.gtilde_over_g * generator(ZZ)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::{expm_skew, frob_dist, Operator4, ALGEBRAIC_TOL, ZERO};
    use num_complex::Complex64;
    use proptest::prelude::*;
    use std::f64::consts::PI;
    use GeneratorName::*;

    fn close(a: &Generator4, b: &Generator4, tol: f64) -> bool {
        (*a - *b).norm() < tol
    }

    #[test]
    fn all_generators_are_skew_hermitian() {
        for name in GeneratorName::ALL {
            assert_eq!(generator(name).skew_defect(), 0.0, "{name:?}");
        }
    }

    #[test]
    fn z1_is_diagonal_with_qubit_one_least_significant() {
        let z1 = generator(Z1);
        let h = 0.5;
        let expected = [h, -h, h, -h];
        for (k, v) in expected.iter().enumerate() {
            assert_eq!(z1.entry(k, k), Complex64::new(0.0, *v));
        }
    }

    #[test]
    fn exchange_generator_matches_central_block() {
        let xy = generator(XX) + generator(YY);
        for r in 0..4 {
            for c in 0..4 {
                let expected = if (r, c) == (1, 2) || (r, c) == (2, 1) {
                    Complex64::new(0.0, 1.0)
                } else {
                    ZERO
                };
                assert!((xy.entry(r, c) - expected).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn commutation_relations() {
        let zero = Generator4::zero();
        assert!(close(
            &generator(XX).commutator(&generator(YY)),
            &zero,
            1e-15
        ));
        assert!(close(
            &generator(XY).commutator(&generator(YX)),
            &zero,
            1e-15
        ));
        for other in [XX, YY, XY, YX] {
            assert!(close(
                &generator(ZZ).commutator(&generator(other)),
                &zero,
                1e-15
            ));
        }
        // Sanity: a non-commuting pair.
        assert!(generator(X1).commutator(&generator(Z1)).norm() > 0.5);
    }

    #[test]
    fn frame1_resonant_undriven_is_pure_exchange() {
        let h = h_rwa_frame1(&SystemParams::detuned(0.0));
        assert!(close(&h, &(generator(XX) + generator(YY)), 0.0 + 1e-15));
    }

    #[test]
    fn frame1_zz_only() {
        let h = h_rwa_frame1(&SystemParams::new(0.0, 0.3, 0.0)) - (generator(XX) + generator(YY));
        let diag = [1.0, -1.0, -1.0, 1.0];
        for (k, s) in diag.iter().enumerate() {
            assert!((h.entry(k, k) - Complex64::new(0.0, 0.15 * s)).norm() < 1e-15);
        }
    }

    #[test]
    fn frame1_resonant_single_step_gate() {
        // delta = 0, Omega1 = sqrt(15), t = pi/2: (-1/sqrt 2) times the four-corner matrix.
        let p = SystemParams::new(0.0, 0.0, 15f64.sqrt());
        let u = expm_skew(&(-(PI / 2.0) * h_rwa_frame1(&p))).unwrap();
        let a = Complex64::from(-std::f64::consts::FRAC_1_SQRT_2);
        let b = Complex64::new(0.0, std::f64::consts::FRAC_1_SQRT_2);
        let expected = Operator4::from_rows([
            [a, ZERO, ZERO, b],
            [ZERO, a, b, ZERO],
            [ZERO, b, a, ZERO],
            [b, ZERO, ZERO, a],
        ]);
        assert!(frob_dist(&u, &expected) < 1e-12);
    }

    #[test]
    fn frame2_at_zero_time_drops_detuning() {
        let p = SystemParams::new(0.7, 0.05, 2.0);
        let without_delta = h_rwa_frame1(&SystemParams {
            delta_over_g: 0.0,
            ..p
        });
        assert!(close(&h_rwa_frame2(&p, 0.0), &without_delta, 1e-15));
    }

    #[test]
    fn frame2_resonant_is_static() {
        let p = SystemParams::new(0.0, 0.0, 1.3);
        for t in [0.0, 0.4, 2.7, 11.0] {
            assert!(close(&h_rwa_frame2(&p, t), &h_rwa_frame1(&p), 1e-15));
        }
    }

    #[test]
    fn frame2_quarter_period_is_rotated_exchange() {
        let p = SystemParams::detuned(1.7);
        let h = h_rwa_frame2(&p, PI / (2.0 * 1.7));
        assert!(close(&h, &(generator(YX) - generator(XY)), 1e-15));
        // Central block carries exp(-i delta t) above the diagonal.
        assert!(
            (h.entry(1, 2) - Complex64::new(0.0, 1.0) * Complex64::from_polar(1.0, -PI / 2.0))
                .norm()
                < 1e-15
        );
    }

    #[test]
    fn from_rates_normalizes() {
        let p = SystemParams::from_rates(2.0, 0.1, -3.0, 7.0).unwrap();
        assert_eq!(p, SystemParams::new(-1.5, 0.05, 3.5));
        assert!(SystemParams::from_rates(0.0, 0.0, 0.0, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn adjoint_rotation_of_xx(theta in 0.0f64..(2.0 * PI)) {
            let left = expm_skew(&(-theta * generator(Z1))).unwrap();
            let right = expm_skew(&(theta * generator(Z1))).unwrap();
            let xx2 = Operator4::from_matrix(generator(XX).matrix() * Complex64::from(2.0));
            let rotated = left * xx2 * right;
            let expected = Operator4::from_matrix(
                (generator(XX) * theta.cos() + generator(XY) * theta.sin()).matrix() * Complex64::from(2.0),
            );
            prop_assert!(frob_dist(&rotated, &expected) < ALGEBRAIC_TOL);
        }

        #[test]
        fn frame2_is_periodic(delta in 0.1f64..3.0, t in 0.0f64..10.0) {
            let p = SystemParams::new(delta, 0.02, 1.1);
            let period = 2.0 * PI / delta;
            prop_assert!(close(&h_rwa_frame2(&p, t), &h_rwa_frame2(&p, t + period), 1e-12));
        }
    }
}
