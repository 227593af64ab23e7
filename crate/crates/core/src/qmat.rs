//! Fixed-size complex linear algebra for two-qubit operators.
//!
//! Basis order is `|q2 q1>` = `|00>, |01>, |10>, |11>` with qubit 1 the least
//! significant bit, so `kron2(a, b)` places `a` on qubit 2 and `b` on qubit 1.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Matrix2, Matrix4, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Single-qubit operator.
pub type Op2 = Matrix2<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Tolerance for algebraic identities (products, adjoints, commutators).
pub const ALGEBRAIC_TOL: f64 = 1e-12;
/// Tolerance for identities that pass through a matrix exponential.
pub const EXPONENTIAL_TOL: f64 = 1e-10;
/// Largest `|G + G^dagger|_F` accepted by [`expm_skew`], relative to `max(1, |G|_F)`.
pub const SKEW_TOL: f64 = 1e-10;
/// Largest `|U^dagger U - I|_F` accepted where an operator must be unitary.
pub const UNITARY_TOL: f64 = 1e-8;

pub fn pauli_x() -> Op2 {
    Op2::new(ZERO, ONE, ONE, ZERO)
}

pub fn pauli_y() -> Op2 {
    Op2::new(ZERO, -I, I, ZERO)
}

pub fn pauli_z() -> Op2 {
    Op2::new(ONE, ZERO, ZERO, -ONE)
}

pub fn identity2() -> Op2 {
    Op2::identity()
}

/// A 4x4 complex matrix acting on two qubits: a gate, a propagator or any
/// intermediate product.
#[derive(Clone, Copy, PartialEq)]
pub struct Operator4(Matrix4<Complex64>);

/// An element `iH` of the Lie algebra u(4). Skew-Hermitian by contract; the
/// contract is checked where it matters ([`expm_skew`]).
#[derive(Clone, Copy, PartialEq)]
pub struct Generator4(Matrix4<Complex64>);

impl Operator4 {
    pub fn from_matrix(m: Matrix4<Complex64>) -> Self {
        Operator4(m)
    }

    /// Builds an operator from row-major entries.
    pub fn from_rows(rows: [[Complex64; 4]; 4]) -> Self {
        Operator4(Matrix4::from_fn(|r, c| rows[r][c]))
    }

    pub fn identity() -> Self {
        Operator4(Matrix4::identity())
    }

    pub fn diagonal(d: [Complex64; 4]) -> Self {
        Operator4(Matrix4::from_diagonal(&d.into()))
    }

    pub fn matrix(&self) -> &Matrix4<Complex64> {
        &self.0
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.0[(row, col)]
    }

    pub fn rows(&self) -> [[Complex64; 4]; 4] {
        let mut out = [[ZERO; 4]; 4];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = self.0[(r, c)];
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        Operator4(self.0.adjoint())
    }

    pub fn transpose(&self) -> Self {
        Operator4(self.0.transpose())
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn determinant(&self) -> Complex64 {
        self.0.determinant()
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Operator4(self.0 * c)
    }

    /// `|U^dagger U - I|_F`.
    pub fn unitarity_defect(&self) -> f64 {
        (self.0.adjoint() * self.0 - Matrix4::identity()).norm()
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() < tol
    }

    pub(crate) fn require_unitary(&self) -> Result<()> {
        let deviation = self.unitarity_defect();
        if deviation > UNITARY_TOL || !deviation.is_finite() {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(())
    }

    /// Conjugates by the qubit exchange `|q2 q1> -> |q1 q2>`.
    pub fn swap_qubits(&self) -> Self {
        const PERM: [usize; 4] = [0, 2, 1, 3];
        Operator4(Matrix4::from_fn(|r, c| self.0[(PERM[r], PERM[c])]))
    }
}

impl Generator4 {
    pub fn from_matrix(m: Matrix4<Complex64>) -> Self {
        Generator4(m)
    }

    pub fn zero() -> Self {
        Generator4(Matrix4::zeros())
    }

    pub fn matrix(&self) -> &Matrix4<Complex64> {
        &self.0
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.0[(row, col)]
    }

    /// `|G + G^dagger|_F`; zero for an exactly skew-Hermitian generator.
    pub fn skew_defect(&self) -> f64 {
        (self.0 + self.0.adjoint()).norm()
    }

    pub fn commutator(&self, other: &Generator4) -> Generator4 {
        Generator4(self.0 * other.0 - other.0 * self.0)
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }
}

impl Add for Generator4 {
    type Output = Generator4;
    fn add(self, rhs: Generator4) -> Generator4 {
        Generator4(self.0 + rhs.0)
    }
}

impl Sub for Generator4 {
    type Output = Generator4;
    fn sub(self, rhs: Generator4) -> Generator4 {
        Generator4(self.0 - rhs.0)
    }
}

impl Neg for Generator4 {
    type Output = Generator4;
    fn neg(self) -> Generator4 {
        Generator4(-self.0)
    }
}

impl Mul<Generator4> for f64 {
    type Output = Generator4;
    fn mul(self, rhs: Generator4) -> Generator4 {
        Generator4(rhs.0 * Complex64::from(self))
    }
}

impl Mul<f64> for Generator4 {
    type Output = Generator4;
    fn mul(self, rhs: f64) -> Generator4 {
        Generator4(self.0 * Complex64::from(rhs))
    }
}

impl Mul for Operator4 {
    type Output = Operator4;
    fn mul(self, rhs: Operator4) -> Operator4 {
        Operator4(self.0 * rhs.0)
    }
}

impl Mul<&Operator4> for &Operator4 {
    type Output = Operator4;
    fn mul(self, rhs: &Operator4) -> Operator4 {
        Operator4(self.0 * rhs.0)
    }
}

impl Sub for Operator4 {
    type Output = Operator4;
    fn sub(self, rhs: Operator4) -> Operator4 {
        Operator4(self.0 - rhs.0)
    }
}

fn fmt_matrix(m: &Matrix4<Complex64>, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    for r in 0..4 {
        for c in 0..4 {
            let z = m[(r, c)];
            write!(f, "{:>9.4}{:+.4}i ", z.re, z.im)?;
        }
        writeln!(f)?;
    }
    Ok(())
}

impl fmt::Debug for Operator4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Operator4")?;
        fmt_matrix(&self.0, f)
    }
}

impl fmt::Debug for Generator4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Generator4")?;
        fmt_matrix(&self.0, f)
    }
}

/// Serialized form: 4x4 array of `[re, im]` pairs.
impl Serialize for Operator4 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = (0..4)
            .map(|r| {
                (0..4)
                    .map(|c| [self.0[(r, c)].re, self.0[(r, c)].im])
                    .collect()
            })
            .collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Operator4 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = <[[[f64; 2]; 4]; 4]>::deserialize(d)?;
        Ok(Operator4(Matrix4::from_fn(|r, c| {
            Complex64::new(rows[r][c][0], rows[r][c][1])
        })))
    }
}

/// Matrix exponential of a skew-Hermitian generator.
///
/// Diagonalizes the Hermitian matrix `H = iG`, so `exp(G) = V exp(-i Lambda) V^dagger`
/// is unitary to rounding.
pub fn expm_skew(g: &Generator4) -> Result<Operator4> {
    let deviation = g.skew_defect();
    if !(deviation <= SKEW_TOL * g.norm().max(1.0)) {
        return Err(Error::NotSkewHermitian { deviation });
    }
    let h = g.0 * I;
    // Symmetrize so the eigensolver sees an exactly Hermitian input.
    let h = (h + h.adjoint()) * Complex64::from(0.5);
    let eig = SymmetricEigen::new(h);
    let phases = eig
        .eigenvalues
        .map(|lambda| Complex64::from_polar(1.0, -lambda));
    let v = eig.eigenvectors;
    let out = v * Matrix4::from_diagonal(&phases) * v.adjoint();
    Ok(Operator4(out))
}

/// Frobenius distance `|A - B|_F`.
pub fn frob_dist(a: &Operator4, b: &Operator4) -> f64 {
    (a.0 - b.0).norm()
}

/// Tensor product with `q2` on qubit 2 (most significant) and `q1` on qubit 1.
pub fn kron2(q2: &Op2, q1: &Op2) -> Operator4 {
    Operator4(Matrix4::from_fn(|r, c| {
        q2[(r >> 1, c >> 1)] * q1[(r & 1, c & 1)]
    }))
}
