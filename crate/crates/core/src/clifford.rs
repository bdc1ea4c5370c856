//! Real Clifford algebra Cl(3) and its even subalgebra.
//!
//! Blades are stored in the order `1, E1, E2, E3, E12, E13, E23, E123`. The
//! even subalgebra (scalar + bivectors) is the dynamical field value of the
//! flow and gets its own compact type, [`EvenSpinor`].

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use crate::error::CliffordError;

/// Absolute tolerance on `|amplitude - 1|` for a unit rotor.
pub const ROTOR_TOLERANCE: f64 = 1e-12;

/// A general element of Cl(3).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Multivector {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c12: f64,
    pub c13: f64,
    pub c23: f64,
    pub c123: f64,
}

/// Grade of each stored component, in storage order.
pub const BLADE_GRADES: [usize; 8] = [0, 1, 1, 1, 2, 2, 2, 3];

impl Multivector {
    pub const ZERO: Multivector = Multivector::from_array([0.0; 8]);
    pub const ONE: Multivector = Multivector::scalar(1.0);
    pub const E1: Multivector = Multivector::basis(1);
    pub const E2: Multivector = Multivector::basis(2);
    pub const E3: Multivector = Multivector::basis(3);
    pub const E12: Multivector = Multivector::basis(4);
    pub const E13: Multivector = Multivector::basis(5);
    pub const E23: Multivector = Multivector::basis(6);
    pub const E123: Multivector = Multivector::basis(7);

    pub const fn from_array(c: [f64; 8]) -> Self {
        Multivector {
            c0: c[0],
            c1: c[1],
            c2: c[2],
            c3: c[3],
            c12: c[4],
            c13: c[5],
            c23: c[6],
            c123: c[7],
        }
    }

    pub const fn to_array(self) -> [f64; 8] {
        [
            self.c0, self.c1, self.c2, self.c3, self.c12, self.c13, self.c23, self.c123,
        ]
    }

    pub const fn scalar(s: f64) -> Self {
        let mut c = [0.0; 8];
        c[0] = s;
        Multivector::from_array(c)
    }

    /// The unit blade at storage index `i` (0..8).
    pub const fn basis(i: usize) -> Self {
        let mut c = [0.0; 8];
        c[i] = 1.0;
        Multivector::from_array(c)
    }

    pub fn vector(v: Vector) -> Self {
        Multivector {
            c1: v.0[0],
            c2: v.0[1],
            c3: v.0[2],
            ..Multivector::ZERO
        }
    }

    pub fn scale(self, s: f64) -> Self {
        Multivector::from_array(self.to_array().map(|c| c * s))
    }

    /// Largest absolute component.
    pub fn max_abs(self) -> f64 {
        self.to_array().iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Vector part, discarding everything else.
    pub fn vector_part(self) -> Vector {
        Vector([self.c1, self.c2, self.c3])
    }

    /// Even part as a spinor, discarding odd grades.
    pub fn even_part(self) -> EvenSpinor {
        EvenSpinor {
            s: self.c0,
            b12: self.c12,
            b13: self.c13,
            b23: self.c23,
        }
    }
}

impl Add for Multivector {
    type Output = Multivector;
    fn add(self, rhs: Multivector) -> Multivector {
        let (a, b) = (self.to_array(), rhs.to_array());
        Multivector::from_array(std::array::from_fn(|i| a[i] + b[i]))
    }
}

impl Sub for Multivector {
    type Output = Multivector;
    fn sub(self, rhs: Multivector) -> Multivector {
        let (a, b) = (self.to_array(), rhs.to_array());
        Multivector::from_array(std::array::from_fn(|i| a[i] - b[i]))
    }
}

impl Neg for Multivector {
    type Output = Multivector;
    fn neg(self) -> Multivector {
        self.scale(-1.0)
    }
}

impl Mul for Multivector {
    type Output = Multivector;
    fn mul(self, rhs: Multivector) -> Multivector {
        geometric_product(self, rhs)
    }
}

impl Mul<f64> for Multivector {
    type Output = Multivector;
    fn mul(self, rhs: f64) -> Multivector {
        self.scale(rhs)
    }
}

/// Geometric product, expanded from `E_i E_j + E_j E_i = 2 δ_ij`.
pub fn geometric_product(a: Multivector, b: Multivector) -> Multivector {
    Multivector {
        c0: a.c0 * b.c0 + a.c1 * b.c1 + a.c2 * b.c2 + a.c3 * b.c3
            - a.c12 * b.c12
            - a.c13 * b.c13
            - a.c23 * b.c23
            - a.c123 * b.c123,
        c1: a.c0 * b.c1 + a.c1 * b.c0 - a.c2 * b.c12 - a.c3 * b.c13 + a.c12 * b.c2 + a.c13 * b.c3
            - a.c23 * b.c123
            - a.c123 * b.c23,
        c2: a.c0 * b.c2 + a.c1 * b.c12 + a.c2 * b.c0 - a.c3 * b.c23 - a.c12 * b.c1
            + a.c13 * b.c123
            + a.c23 * b.c3
            + a.c123 * b.c13,
        c3: a.c0 * b.c3 + a.c1 * b.c13 + a.c2 * b.c23 + a.c3 * b.c0
            - a.c12 * b.c123
            - a.c13 * b.c1
            - a.c23 * b.c2
            - a.c123 * b.c12,
        c12: a.c0 * b.c12 + a.c1 * b.c2 - a.c2 * b.c1 + a.c3 * b.c123 + a.c12 * b.c0
            - a.c13 * b.c23
            + a.c23 * b.c13
            + a.c123 * b.c3,
        c13: a.c0 * b.c13 + a.c1 * b.c3 - a.c2 * b.c123 - a.c3 * b.c1 + a.c12 * b.c23 + a.c13 * b.c0
            - a.c23 * b.c12
            - a.c123 * b.c2,
        c23: a.c0 * b.c23 + a.c1 * b.c123 + a.c2 * b.c3 - a.c3 * b.c2 - a.c12 * b.c13
            + a.c13 * b.c12
            + a.c23 * b.c0
            + a.c123 * b.c1,
        c123: a.c0 * b.c123 + a.c1 * b.c23 - a.c2 * b.c13 + a.c3 * b.c12 + a.c12 * b.c3
            - a.c13 * b.c2
            + a.c23 * b.c1
            + a.c123 * b.c0,
    }
}

/// Reversion: negates grades 2 and 3.
pub fn reverse(a: Multivector) -> Multivector {
    Multivector {
        c12: -a.c12,
        c13: -a.c13,
        c23: -a.c23,
        c123: -a.c123,
        ..a
    }
}

/// Projection onto grade `k`.
pub fn grade(a: Multivector, k: usize) -> Result<Multivector, CliffordError> {
    if k > 3 {
        return Err(CliffordError::GradeOutOfRange(k));
    }
    let c = a.to_array();
    Ok(Multivector::from_array(std::array::from_fn(|i| {
        if BLADE_GRADES[i] == k {
            c[i]
        } else {
            0.0
        }
    })))
}

/// A grade-1 element `v1 E1 + v2 E2 + v3 E3`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vector(pub [f64; 3]);

impl Vector {
    pub const E1: Vector = Vector([1.0, 0.0, 0.0]);
    pub const E2: Vector = Vector([0.0, 1.0, 0.0]);
    pub const E3: Vector = Vector([0.0, 0.0, 1.0]);

    pub fn axis(k: usize) -> Vector {
        let mut v = [0.0; 3];
        v[k] = 1.0;
        Vector(v)
    }

    pub fn dot(self, other: Vector) -> f64 {
        self.0[0] * other.0[0] + self.0[1] * other.0[1] + self.0[2] * other.0[2]
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(self, s: f64) -> Vector {
        Vector(self.0.map(|c| c * s))
    }
}

impl Add for Vector {
    type Output = Vector;
    fn add(self, rhs: Vector) -> Vector {
        Vector(std::array::from_fn(|i| self.0[i] + rhs.0[i]))
    }
}

impl Sub for Vector {
    type Output = Vector;
    fn sub(self, rhs: Vector) -> Vector {
        Vector(std::array::from_fn(|i| self.0[i] - rhs.0[i]))
    }
}

/// An element of the even subalgebra Cl⁺(3): scalar plus bivector.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EvenSpinor {
    pub s: f64,
    pub b12: f64,
    pub b13: f64,
    pub b23: f64,
}

impl EvenSpinor {
    pub const ZERO: EvenSpinor = EvenSpinor::new(0.0, 0.0, 0.0, 0.0);
    pub const ONE: EvenSpinor = EvenSpinor::new(1.0, 0.0, 0.0, 0.0);
    pub const E12: EvenSpinor = EvenSpinor::new(0.0, 1.0, 0.0, 0.0);
    pub const E13: EvenSpinor = EvenSpinor::new(0.0, 0.0, 1.0, 0.0);
    pub const E23: EvenSpinor = EvenSpinor::new(0.0, 0.0, 0.0, 1.0);

    pub const fn new(s: f64, b12: f64, b13: f64, b23: f64) -> Self {
        EvenSpinor { s, b12, b13, b23 }
    }

    pub const fn scalar(s: f64) -> Self {
        EvenSpinor::new(s, 0.0, 0.0, 0.0)
    }

    pub const fn to_array(self) -> [f64; 4] {
        [self.s, self.b12, self.b13, self.b23]
    }

    pub const fn from_array(c: [f64; 4]) -> Self {
        EvenSpinor::new(c[0], c[1], c[2], c[3])
    }

    pub fn to_multivector(self) -> Multivector {
        Multivector {
            c0: self.s,
            c12: self.b12,
            c13: self.b13,
            c23: self.b23,
            ..Multivector::ZERO
        }
    }

    /// Euclidean inner product of the four components.
    pub fn dot(self, other: EvenSpinor) -> f64 {
        self.s * other.s + self.b12 * other.b12 + self.b13 * other.b13 + self.b23 * other.b23
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn amplitude(self) -> f64 {
        amplitude(self)
    }

    pub fn reverse(self) -> EvenSpinor {
        EvenSpinor::new(self.s, -self.b12, -self.b13, -self.b23)
    }

    pub fn scale(self, k: f64) -> EvenSpinor {
        EvenSpinor::new(self.s * k, self.b12 * k, self.b13 * k, self.b23 * k)
    }

    pub fn max_abs(self) -> f64 {
        self.s
            .abs()
            .max(self.b12.abs())
            .max(self.b13.abs())
            .max(self.b23.abs())
    }

    pub fn is_finite(self) -> bool {
        self.s.is_finite() && self.b12.is_finite() && self.b13.is_finite() && self.b23.is_finite()
    }
}

impl Add for EvenSpinor {
    type Output = EvenSpinor;
    #[inline]
    fn add(self, r: EvenSpinor) -> EvenSpinor {
        EvenSpinor::new(self.s + r.s, self.b12 + r.b12, self.b13 + r.b13, self.b23 + r.b23)
    }
}

impl AddAssign for EvenSpinor {
    #[inline]
    fn add_assign(&mut self, r: EvenSpinor) {
        *self = *self + r;
    }
}

impl Sub for EvenSpinor {
    type Output = EvenSpinor;
    #[inline]
    fn sub(self, r: EvenSpinor) -> EvenSpinor {
        EvenSpinor::new(self.s - r.s, self.b12 - r.b12, self.b13 - r.b13, self.b23 - r.b23)
    }
}

impl SubAssign for EvenSpinor {
    #[inline]
    fn sub_assign(&mut self, r: EvenSpinor) {
        *self = *self - r;
    }
}

impl Neg for EvenSpinor {
    type Output = EvenSpinor;
    #[inline]
    fn neg(self) -> EvenSpinor {
        self.scale(-1.0)
    }
}

impl Mul<f64> for EvenSpinor {
    type Output = EvenSpinor;
    #[inline]
    fn mul(self, k: f64) -> EvenSpinor {
        self.scale(k)
    }
}

/// Geometric product restricted to the even subalgebra (closed there).
impl Mul for EvenSpinor {
    type Output = EvenSpinor;
    #[inline]
    fn mul(self, b: EvenSpinor) -> EvenSpinor {
        let a = self;
        EvenSpinor {
            s: a.s * b.s - a.b12 * b.b12 - a.b13 * b.b13 - a.b23 * b.b23,
            b12: a.s * b.b12 + a.b12 * b.s - a.b13 * b.b23 + a.b23 * b.b13,
            b13: a.s * b.b13 + a.b12 * b.b23 + a.b13 * b.s - a.b23 * b.b12,
            b23: a.s * b.b23 - a.b12 * b.b13 + a.b13 * b.b12 + a.b23 * b.s,
        }
    }
}

/// `ρ = sqrt(s² + b12² + b13² + b23²)`, the scalar part of `ψψ̃` under a root.
pub fn amplitude(psi: EvenSpinor) -> f64 {
    psi.norm_sq().sqrt()
}

/// A unit-amplitude even spinor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotor(EvenSpinor);

impl Rotor {
    pub const IDENTITY: Rotor = Rotor(EvenSpinor::ONE);

    /// Wraps `r` if its amplitude is within [`ROTOR_TOLERANCE`] of one.
    pub fn new(r: EvenSpinor) -> Result<Rotor, CliffordError> {
        let a = amplitude(r);
        if (a - 1.0).abs() <= ROTOR_TOLERANCE {
            Ok(Rotor(r))
        } else {
            Err(CliffordError::NotUnit(a))
        }
    }

    /// Rotation by `angle` in the oriented plane of the unit bivector `plane`
    /// (components b12, b13, b23). Rotates `E1` towards `E2` for `plane = E12`.
    pub fn from_plane_angle(plane: [f64; 3], angle: f64) -> Rotor {
        let n = (plane[0] * plane[0] + plane[1] * plane[1] + plane[2] * plane[2]).sqrt();
        let (s, c) = (0.5 * angle).sin_cos();
        let k = -s / n;
        Rotor(EvenSpinor::new(c, k * plane[0], k * plane[1], k * plane[2]))
    }

    pub fn spinor(self) -> EvenSpinor {
        self.0
    }

    /// `R v R̃`.
    pub fn rotate(self, v: Vector) -> Vector {
        sandwich(self.0, v)
    }
}

/// Splits `ψ = ρ R` with `ρ = amplitude(ψ)`; undefined at a nodal point.
pub fn polar_decompose(psi: EvenSpinor) -> Result<(f64, Rotor), CliffordError> {
    let rho = amplitude(psi);
    if rho == 0.0 || !rho.is_finite() {
        return Err(CliffordError::NodalPoint);
    }
    Ok((rho, Rotor(psi.scale(1.0 / rho))))
}

/// `ψ v ψ̃`. Even·odd·even is odd, and the grade-3 part cancels by reversion
/// symmetry, so only the vector part is returned.
pub fn sandwich(psi: EvenSpinor, v: Vector) -> Vector {
    let p = psi.to_multivector();
    geometric_product(geometric_product(p, Multivector::vector(v)), reverse(p)).vector_part()
}

/// Full multivector `ψ v ψ̃`, for checking that the non-vector grades vanish.
pub fn sandwich_full(psi: EvenSpinor, v: Vector) -> Multivector {
    let p = psi.to_multivector();
    geometric_product(geometric_product(p, Multivector::vector(v)), reverse(p))
}

/// The dual bivector `E123 v`.
#[inline]
pub fn dual_bivector(v: Vector) -> EvenSpinor {
    // E123 E1 = E23, E123 E2 = -E13, E123 E3 = E12
    EvenSpinor::new(0.0, v.0[2], -v.0[1], v.0[0])
}

/// Clifford module action on even spinors: `c(v) ψ = (E123 v) ψ`.
///
/// Satisfies `c(v) c(w) + c(w) c(v) = -2 <v, w>`.
#[inline]
pub fn clifford_action(v: Vector, psi: EvenSpinor) -> EvenSpinor {
    dual_bivector(v) * psi
}

/// `c(E_k) ψ` for a coordinate axis, with the scalar weight folded in.
#[inline]
pub(crate) fn axis_action(k: usize, w: f64, psi: EvenSpinor) -> EvenSpinor {
    // Expanded (E123 E_k) ψ for the three axes.
    match k {
        // E23 ψ
        0 => EvenSpinor::new(-w * psi.b23, w * psi.b13, -w * psi.b12, w * psi.s),
        // -E13 ψ
        1 => EvenSpinor::new(w * psi.b13, w * psi.b23, -w * psi.s, -w * psi.b12),
        // E12 ψ
        2 => EvenSpinor::new(-w * psi.b12, w * psi.s, w * psi.b23, -w * psi.b13),
        _ => unreachable!("axis index out of range"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn basis_products() {
        assert_eq!(Multivector::E1 * Multivector::E1, Multivector::ONE);
        assert_eq!(Multivector::E1 * Multivector::E2, Multivector::E12);
        let a = Multivector::ONE + Multivector::E12;
        let b = Multivector::ONE - Multivector::E12;
        assert_eq!(a * b, Multivector::scalar(2.0));
    }

    #[test]
    fn reverse_signs() {
        assert_eq!(reverse(Multivector::E12), -Multivector::E12);
        assert_eq!(reverse(Multivector::E123), -Multivector::E123);
        assert_eq!(reverse(Multivector::E1), Multivector::E1);
    }

    #[test]
    fn grade_projection() {
        let a = Multivector::ONE + Multivector::E1 + Multivector::E12;
        assert_eq!(grade(a, 1).unwrap(), Multivector::E1);
        assert_eq!(grade(Multivector::E123, 3).unwrap(), Multivector::E123);
        assert!(matches!(grade(a, 4), Err(CliffordError::GradeOutOfRange(4))));
    }

    #[test]
    fn amplitudes() {
        assert_eq!(amplitude(EvenSpinor::ONE), 1.0);
        let r = Rotor::from_plane_angle([0.3, -0.2, 0.9], 1.1);
        assert!(close(amplitude(r.spinor().scale(3.0)), 3.0, 1e-14));
        let p = EvenSpinor::new(1.0, 1.0, 0.0, 0.0);
        assert!(close(amplitude(p), 2f64.sqrt(), 1e-15));
    }

    #[test]
    fn polar_examples() {
        let (rho, r) = polar_decompose(EvenSpinor::scalar(2.0)).unwrap();
        assert_eq!((rho, r.spinor()), (2.0, EvenSpinor::ONE));
        let (rho, r) = polar_decompose(EvenSpinor::E12).unwrap();
        assert_eq!((rho, r.spinor()), (1.0, EvenSpinor::E12));
        let (rho, r) = polar_decompose(EvenSpinor::new(1.0, 1.0, 0.0, 0.0)).unwrap();
        let k = 1.0 / 2f64.sqrt();
        assert!(close(rho, 2f64.sqrt(), 1e-15));
        assert!((r.spinor() - EvenSpinor::new(k, k, 0.0, 0.0)).max_abs() < 1e-15);
        assert!(matches!(
            polar_decompose(EvenSpinor::ZERO),
            Err(CliffordError::NodalPoint)
        ));
    }

    #[test]
    fn rotor_validation() {
        assert!(Rotor::new(EvenSpinor::scalar(1.0 + 5e-13)).is_ok());
        assert!(matches!(
            Rotor::new(EvenSpinor::scalar(1.0 + 1e-9)),
            Err(CliffordError::NotUnit(_))
        ));
    }

    #[test]
    fn sandwich_examples() {
        assert_eq!(sandwich(EvenSpinor::ONE, Vector::E1), Vector::E1);
        assert_eq!(sandwich(EvenSpinor::scalar(2.0), Vector::E1), Vector::E1.scale(4.0));
        let theta = 0.7;
        let r = Rotor::from_plane_angle([1.0, 0.0, 0.0], theta);
        let e1 = r.rotate(Vector::E1);
        assert!((e1 - Vector([theta.cos(), theta.sin(), 0.0])).norm() < 1e-15);
        for k in 0..3 {
            assert!(close(r.rotate(Vector::axis(k)).norm(), 1.0, 1e-12));
        }
    }

    #[test]
    fn module_action_examples() {
        assert_eq!(clifford_action(Vector::E1, EvenSpinor::ONE), EvenSpinor::E23);
        let psi = EvenSpinor::new(0.3, -1.2, 0.5, 2.0);
        let twice = clifford_action(Vector::E1, clifford_action(Vector::E1, psi));
        assert!((twice + psi).max_abs() < 1e-15);
        let anti = clifford_action(Vector::E1, clifford_action(Vector::E2, EvenSpinor::ONE))
            + clifford_action(Vector::E2, clifford_action(Vector::E1, EvenSpinor::ONE));
        assert_eq!(anti, EvenSpinor::ZERO);
    }

    #[test]
    fn axis_action_matches_dual_product() {
        let psi = EvenSpinor::new(0.3, -1.2, 0.5, 2.0);
        for k in 0..3 {
            let expect = clifford_action(Vector::axis(k), psi).scale(1.5);
            assert_eq!(axis_action(k, 1.5, psi), expect);
        }
    }

    #[test]
    fn even_product_matches_full_product() {
        let a = EvenSpinor::new(0.3, -1.2, 0.5, 2.0);
        let b = EvenSpinor::new(-0.7, 0.1, 1.5, -0.4);
        let full = a.to_multivector() * b.to_multivector();
        assert_eq!(full.even_part(), a * b);
        assert_eq!(full.vector_part(), Vector::default());
        assert_eq!(full.c123, 0.0);
    }
}
