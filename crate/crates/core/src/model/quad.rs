//! Exact arithmetic in the real quadratic field Q(√17).
//!
//! The algorithm's thresholds `R = (1 + √17)/4` and `α = (−3 + √17)/2` are
//! irrational, so every decision that compares a rational combination of
//! packet values against them goes through [`Quad17`]. Signs are decided
//! without floating point: for `a + b√17` with `a` and `b` of opposite signs
//! the sign follows from comparing `a²` with `17·b²`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use super::rat::Rat;

/// `a + b·√17` with rational coefficients.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Quad17 {
    pub a: Rat,
    pub b: Rat,
}

const RADICAND: i64 = 17;

impl Quad17 {
    pub fn new(a: Rat, b: Rat) -> Self {
        Quad17 { a, b }
    }

    pub fn from_rat(a: Rat) -> Self {
        Quad17 { a, b: Rat::zero() }
    }

    pub fn zero() -> Self {
        Quad17::default()
    }

    pub fn one() -> Self {
        Quad17::from_rat(Rat::one())
    }

    pub fn sqrt17() -> Self {
        Quad17::new(Rat::zero(), Rat::one())
    }

    /// The competitive-ratio constant `(1 + √17)/4`.
    pub fn r() -> Self {
        Quad17::new(Rat::new(1, 4), Rat::new(1, 4))
    }

    /// The Case 1.2.3.1/1.2.3.2 threshold `(−3 + √17)/2`.
    pub fn alpha() -> Self {
        Quad17::new(Rat::new(-3, 2), Rat::new(1, 2))
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    /// Galois conjugate `a − b√17`.
    pub fn conjugate(&self) -> Self {
        Quad17::new(self.a.clone(), -&self.b)
    }

    /// Field norm `a² − 17·b²`.
    pub fn norm(&self) -> Rat {
        self.a.square() - Rat::from(RADICAND) * self.b.square()
    }

    /// Exact sign of the real number `a + b√17`.
    pub fn signum(&self) -> i8 {
        let sa = self.a.signum();
        let sb = self.b.signum();
        if sa >= 0 && sb >= 0 {
            return if sa == 0 && sb == 0 { 0 } else { 1 };
        }
        if sa <= 0 && sb <= 0 {
            return -1;
        }
        // Opposite signs: |a| vs |b|·√17 decides, compare squares.
        let a2 = self.a.square();
        let b2 = Rat::from(RADICAND) * self.b.square();
        let mag = match a2.cmp(&b2) {
            Ordering::Greater => 1,
            Ordering::Less => -1,
            Ordering::Equal => 0,
        };
        // mag > 0 means the rational part dominates.
        if mag == 0 {
            0
        } else if mag > 0 {
            sa
        } else {
            sb
        }
    }

    pub fn scale(&self, k: &Rat) -> Self {
        Quad17::new(&self.a * k, &self.b * k)
    }

    pub fn recip(&self) -> Option<Self> {
        let n = self.norm();
        // Norm vanishes only at zero since 17 is not a rational square.
        let inv = n.recip()?;
        Some(self.conjugate().scale(&inv))
    }

    pub fn checked_div(&self, rhs: &Quad17) -> Option<Self> {
        Some(self * &rhs.recip()?)
    }

    pub fn to_f64(&self) -> f64 {
        self.a.to_f64() + self.b.to_f64() * (RADICAND as f64).sqrt()
    }

    /// Exact comparison with a rational.
    pub fn cmp_rat(&self, x: &Rat) -> Ordering {
        let d = Quad17::new(&self.a - x, self.b.clone());
        sign_to_ordering(d.signum())
    }
}

fn sign_to_ordering(s: i8) -> Ordering {
    s.cmp(&0)
}

/// Exact total order on real numbers of the form `a + b√17`.
pub fn quad_cmp(x: &Quad17, y: &Quad17) -> Ordering {
    sign_to_ordering((x - y).signum())
}

impl Ord for Quad17 {
    fn cmp(&self, other: &Self) -> Ordering {
        quad_cmp(self, other)
    }
}

impl PartialOrd for Quad17 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<Rat> for Quad17 {
    fn from(a: Rat) -> Self {
        Quad17::from_rat(a)
    }
}

impl Add<&Quad17> for &Quad17 {
    type Output = Quad17;
    fn add(self, rhs: &Quad17) -> Quad17 {
        Quad17::new(&self.a + &rhs.a, &self.b + &rhs.b)
    }
}

impl Add for Quad17 {
    type Output = Quad17;
    fn add(self, rhs: Quad17) -> Quad17 {
        &self + &rhs
    }
}

impl Sub<&Quad17> for &Quad17 {
    type Output = Quad17;
    fn sub(self, rhs: &Quad17) -> Quad17 {
        Quad17::new(&self.a - &rhs.a, &self.b - &rhs.b)
    }
}

impl Sub for Quad17 {
    type Output = Quad17;
    fn sub(self, rhs: Quad17) -> Quad17 {
        &self - &rhs
    }
}

impl Mul<&Quad17> for &Quad17 {
    type Output = Quad17;
    fn mul(self, rhs: &Quad17) -> Quad17 {
        // (a + b√17)(c + d√17) = (ac + 17bd) + (ad + bc)√17
        let a = &self.a * &rhs.a + Rat::from(RADICAND) * (&self.b * &rhs.b);
        let b = &self.a * &rhs.b + &self.b * &rhs.a;
        Quad17::new(a, b)
    }
}

impl Mul for Quad17 {
    type Output = Quad17;
    fn mul(self, rhs: Quad17) -> Quad17 {
        &self * &rhs
    }
}

impl Mul<&Rat> for &Quad17 {
    type Output = Quad17;
    fn mul(self, rhs: &Rat) -> Quad17 {
        self.scale(rhs)
    }
}

impl Neg for Quad17 {
    type Output = Quad17;
    fn neg(self) -> Quad17 {
        Quad17::new(-self.a, -self.b)
    }
}

impl fmt::Display for Quad17 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}·√17", self.a, self.b)
    }
}

impl fmt::Debug for Quad17 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn r_exceeds_five_quarters() {
        // (1+√17)/4 − 5/4 has the sign of √17 − 4, and 17 > 16.
        assert_eq!(Quad17::r().cmp_rat(&Rat::new(5, 4)), Ordering::Greater);
        assert_eq!(
            quad_cmp(&Quad17::r(), &Quad17::from_rat(Rat::new(5, 4))),
            Ordering::Greater
        );
        // and below 13/10 since (13/10·4 − 1)² = 17.64 > 17
        assert_eq!(Quad17::r().cmp_rat(&Rat::new(13, 10)), Ordering::Less);
    }

    #[test]
    fn alpha_below_r() {
        // (−3+√17)/2 < (1+√17)/4  ⇔  √17 < 7  ⇔  17 < 49.
        assert_eq!(quad_cmp(&Quad17::alpha(), &Quad17::r()), Ordering::Less);
        assert_eq!(Quad17::alpha().cmp_rat(&Rat::new(1, 2)), Ordering::Greater);
        assert_eq!(Quad17::alpha().cmp_rat(&Rat::new(3, 5)), Ordering::Less);
    }

    #[test]
    fn reflexive() {
        let x = Quad17::new(Rat::new(7, 3), Rat::new(-2, 9));
        assert_eq!(quad_cmp(&x, &x), Ordering::Equal);
    }

    #[test]
    fn constant_identities() {
        let r = Quad17::r();
        let alpha = Quad17::alpha();
        let two = Quad17::from_rat(Rat::from(2));
        assert_eq!(&r * &(&alpha + &Quad17::one()), two);
        assert_eq!(&alpha + &two, r.scale(&Rat::from(2)));
        assert_eq!((&alpha + &two).scale(&Rat::new(1, 2)), r);
        assert_eq!(two.checked_div(&(&alpha + &Quad17::one())).unwrap(), r);
        // R is a root of 2x² − x − 2.
        let poly = (&r * &r).scale(&Rat::from(2)) - r.clone() - two;
        assert!(poly.is_zero());
    }

    #[test]
    fn sign_cases() {
        let q = |a: (i64, i64), b: (i64, i64)| Quad17::new(Rat::new(a.0, a.1), Rat::new(b.0, b.1));
        assert_eq!(q((0, 1), (0, 1)).signum(), 0);
        assert_eq!(q((4, 1), (-1, 1)).signum(), -1); // 4 − √17
        assert_eq!(q((5, 1), (-1, 1)).signum(), 1); // 5 − √17
        assert_eq!(q((-4, 1), (1, 1)).signum(), 1);
        assert_eq!(q((-5, 1), (1, 1)).signum(), -1);
        assert_eq!(q((-1, 1), (0, 1)).signum(), -1);
        assert_eq!(q((0, 1), (1, 100)).signum(), 1);
    }

    fn arb_rat() -> impl Strategy<Value = Rat> {
        (-500i64..500, 1i64..60).prop_map(|(n, d)| Rat::new(n, d))
    }

    fn arb_quad() -> impl Strategy<Value = Quad17> {
        (arb_rat(), arb_rat()).prop_map(|(a, b)| Quad17::new(a, b))
    }

    proptest! {
        #[test]
        fn distributive(x in arb_quad(), y in arb_quad(), z in arb_quad()) {
            prop_assert_eq!(&(&x + &y) * &z, &(&x * &z) + &(&y * &z));
        }

        #[test]
        fn reciprocal(x in arb_quad()) {
            prop_assume!(!x.is_zero());
            prop_assert_eq!(&x * &x.recip().unwrap(), Quad17::one());
        }

        #[test]
        fn agrees_with_float(x in arb_quad(), y in arb_quad()) {
            let diff = x.to_f64() - y.to_f64();
            prop_assume!(diff.abs() > 1e-9);
            let float_order = if diff > 0.0 { Ordering::Greater } else { Ordering::Less };
            prop_assert_eq!(quad_cmp(&x, &y), float_order);
        }

        #[test]
        fn antisymmetric(x in arb_quad(), y in arb_quad()) {
            prop_assert_eq!(quad_cmp(&x, &y), quad_cmp(&y, &x).reverse());
        }
    }
}
