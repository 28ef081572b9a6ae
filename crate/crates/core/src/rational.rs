//! Rational maps of the Riemann sphere.
//!
//! A [`RationalMap`] is a reduced quotient `P/Q` of complex polynomials of
//! degree `e = max(deg P, deg Q) >= 1`. Evaluation, the spherical derivative
//! and preimage solving all switch to the chart `w = 1/z` for `|z| > 1`, so
//! every operation is total on the sphere.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{find_roots, Polynomial};
use crate::sphere::ExtComplex;

/// Roots closer than this (chordal) are merged into one root of higher
/// multiplicity.
pub const MULTIPLICITY_TOL: f64 = 1e-7;

/// Minimum homogeneous resultant magnitude (coefficients scaled to max 1)
/// for numerator and denominator to count as coprime.
pub const RESULTANT_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Debug)]
pub struct RationalMap {
    num: Polynomial,
    den: Polynomial,
    degree: usize,
    // z^e P(1/z) and z^e Q(1/z): the map in the chart at infinity
    num_rev: Polynomial,
    den_rev: Polynomial,
    dnum: Polynomial,
    dden: Polynomial,
    wronskian: Polynomial,
    wronskian_rev: Polynomial,
}

impl PartialEq for RationalMap {
    fn eq(&self, other: &Self) -> bool {
        self.num == other.num && self.den == other.den
    }
}

impl RationalMap {
    /// Builds `num/den`, normalizing coefficients to max modulus 1 and
    /// rejecting constant maps and maps whose numerator and denominator share
    /// a root.
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self> {
        Self::build(num, den, true)
    }

    fn build(num: Polynomial, den: Polynomial, check_coprime: bool) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::InvalidMap("denominator is identically zero".into()));
        }
        let degree = num.degree().max(den.degree());
        if num.is_zero() || degree == 0 {
            return Err(Error::InvalidMap("map is constant".into()));
        }
        let scale = num.max_abs_coeff().max(den.max_abs_coeff());
        if !scale.is_finite() {
            return Err(Error::InvalidMap("non-finite coefficient".into()));
        }
        let num = num.scale(Complex64::new(1.0 / scale, 0.0));
        let den = den.scale(Complex64::new(1.0 / scale, 0.0));
        if check_coprime {
            let res = homogeneous_resultant(&num, &den, degree);
            if res.is_nan() || res <= RESULTANT_TOL {
                return Err(Error::InvalidMap(format!(
                    "numerator and denominator share a root (|resultant| = {res:e})"
                )));
            }
        }
        let num_rev = num.reversed(degree);
        let den_rev = den.reversed(degree);
        let dnum = num.derivative();
        let dden = den.derivative();
        let wronskian = dnum.mul(&den).sub(&num.mul(&dden));
        let wronskian_rev = num_rev.derivative().mul(&den_rev).sub(&num_rev.mul(&den_rev.derivative()));
        Ok(RationalMap {
            num,
            den,
            degree,
            num_rev,
            den_rev,
            dnum,
            dden,
            wronskian,
            wronskian_rev,
        })
    }

    /// Polynomial map with real coefficients, lowest degree first.
    pub fn polynomial(coeffs: &[f64]) -> Result<Self> {
        Self::new(Polynomial::from_real(coeffs), Polynomial::constant(ONE))
    }

    /// `z^d`.
    pub fn monomial(d: usize) -> Result<Self> {
        let mut c = vec![0.0; d + 1];
        c[d] = 1.0;
        Self::polynomial(&c)
    }

    /// `z^2 + c`.
    pub fn quadratic(c: Complex64) -> Self {
        Self::new(Polynomial::new(vec![c, ZERO, ONE]), Polynomial::constant(ONE))
            .expect("z^2 + c is a valid degree-2 map")
    }

    pub fn numerator(&self) -> &Polynomial {
        &self.num
    }

    pub fn denominator(&self) -> &Polynomial {
        &self.den
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.degree() == 0
    }

    /// Value at a point of the sphere.
    pub fn evaluate(&self, z: ExtComplex) -> ExtComplex {
        let (p, q) = self.homogeneous_value(z);
        if q == ZERO {
            ExtComplex::Infinity
        } else {
            ExtComplex::from(p / q)
        }
    }

    /// Value at a finite point as a complex number (infinite at poles).
    pub fn evaluate_finite(&self, z: Complex64) -> ExtComplex {
        self.evaluate(ExtComplex::Finite(z))
    }

    // (P, Q) evaluated in whichever chart contains z
    fn homogeneous_value(&self, z: ExtComplex) -> (Complex64, Complex64) {
        match z {
            ExtComplex::Finite(z) if z.norm() <= 1.0 => (self.num.eval(z), self.den.eval(z)),
            ExtComplex::Finite(z) => {
                let w = z.inv();
                (self.num_rev.eval(w), self.den_rev.eval(w))
            }
            ExtComplex::Infinity => (self.num_rev.coeff(0), self.den_rev.coeff(0)),
        }
    }

    /// Norm of the derivative in the spherical metric,
    /// `|f'(z)| (1 + |z|^2) / (1 + |f(z)|^2)`, with limits at poles and at
    /// infinity. Equal to `|W| (1 + |z|^2) / (|P|^2 + |Q|^2)` for the
    /// Wronskian `W = P'Q - PQ'` in the appropriate chart.
    pub fn spherical_derivative(&self, z: ExtComplex) -> f64 {
        let (w, p, q, r2) = match z {
            ExtComplex::Finite(z) if z.norm() <= 1.0 => {
                (self.wronskian.eval(z), self.num.eval(z), self.den.eval(z), z.norm_sqr())
            }
            ExtComplex::Finite(z) => {
                let u = z.inv();
                (self.wronskian_rev.eval(u), self.num_rev.eval(u), self.den_rev.eval(u), u.norm_sqr())
            }
            ExtComplex::Infinity => (
                self.wronskian_rev.coeff(0),
                self.num_rev.coeff(0),
                self.den_rev.coeff(0),
                0.0,
            ),
        };
        w.norm() * (1.0 + r2) / (p.norm_sqr() + q.norm_sqr())
    }

    /// Complex derivative `f'(z) = W/Q^2` at a finite point; `None` at poles.
    pub fn derivative(&self, z: Complex64) -> Option<Complex64> {
        let q = self.den.eval(z);
        if q == ZERO {
            return None;
        }
        let d = (self.dnum.eval(z) * q - self.num.eval(z) * self.dden.eval(z)) / (q * q);
        (d.re.is_finite() && d.im.is_finite()).then_some(d)
    }

    /// Value and complex derivative at a finite point, if the value is finite.
    pub fn value_and_derivative(&self, z: Complex64) -> Option<(Complex64, Complex64)> {
        let q = self.den.eval(z);
        if q == ZERO {
            return None;
        }
        let p = self.num.eval(z);
        let v = p / q;
        let d = (self.dnum.eval(z) * q - p * self.dden.eval(z)) / (q * q);
        (v.re.is_finite() && v.im.is_finite() && d.re.is_finite() && d.im.is_finite()).then_some((v, d))
    }

    /// All `e` preimages of `z`, counted with multiplicity. Roots of
    /// `P - zQ`; a degree deficit is assigned to infinity.
    pub fn preimages(&self, z: ExtComplex) -> Result<Vec<ExtComplex>> {
        // target written homogeneously as [a : b] with max(|a|, |b|) <= 1
        let (a, b) = match z {
            ExtComplex::Finite(z) if z.norm_sqr() <= 1.0 => (z, ONE),
            ExtComplex::Finite(z) => (ONE, z.inv()),
            ExtComplex::Infinity => (ONE, ZERO),
        };
        let e = self.degree;
        let coeffs: Vec<Complex64> = (0..=e).map(|k| b * self.num.coeff(k) - a * self.den.coeff(k)).collect();
        let rs = find_roots(coeffs, MULTIPLICITY_TOL)?;
        let mut out: Vec<ExtComplex> = rs.roots.into_iter().map(ExtComplex::from).collect();
        out.extend(std::iter::repeat_n(ExtComplex::Infinity, rs.degree_drop));
        debug_assert_eq!(out.len(), e);
        Ok(out)
    }

    /// The `2e - 2` critical points with multiplicity: roots of the
    /// Wronskian, padded with infinity when its degree falls short.
    pub fn critical_points(&self) -> Result<Vec<ExtComplex>> {
        let n = 2 * self.degree - 2;
        let coeffs: Vec<Complex64> = (0..=n).map(|k| self.wronskian.coeff(k)).collect();
        let rs = find_roots(coeffs, MULTIPLICITY_TOL)?;
        let mut out: Vec<ExtComplex> = rs.roots.into_iter().map(ExtComplex::from).collect();
        out.extend(std::iter::repeat_n(ExtComplex::Infinity, n - out.len()));
        Ok(out)
    }

    /// Images of the critical points, with multiplicity.
    pub fn critical_values(&self) -> Result<Vec<ExtComplex>> {
        Ok(self.critical_points()?.into_iter().map(|c| self.evaluate(c)).collect())
    }

    /// The composition `self ∘ inner`. Compositions of reduced maps are
    /// reduced, so the resultant test is skipped.
    pub fn compose(&self, inner: &RationalMap) -> Result<RationalMap> {
        let e = self.degree;
        let mut num = Polynomial::new(Vec::new());
        let mut den = Polynomial::new(Vec::new());
        for k in 0..=e {
            let term = inner.num.pow(k).mul(&inner.den.pow(e - k));
            num = num.add(&term.scale(self.num.coeff(k)));
            den = den.add(&term.scale(self.den.coeff(k)));
        }
        RationalMap::build(num, den, false)
    }
}

impl fmt::Display for RationalMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?})/({:?})", self.num.coeffs(), self.den.coeffs())
    }
}

fn homogeneous_resultant(p: &Polynomial, q: &Polynomial, e: usize) -> f64 {
    let pn = p.max_abs_coeff();
    let qn = q.max_abs_coeff();
    let n = 2 * e;
    let mut m = vec![vec![ZERO; n]; n];
    for row in 0..e {
        for k in 0..=e {
            // highest degree first
            m[row][row + k] = p.coeff(e - k) / pn;
            m[row + e][row + k] = q.coeff(e - k) / qn;
        }
    }
    determinant(m).norm()
}

fn determinant(mut m: Vec<Vec<Complex64>>) -> Complex64 {
    let n = m.len();
    let mut det = ONE;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&a, &b| m[a][col].norm().partial_cmp(&m[b][col].norm()).unwrap())
            .unwrap();
        if m[piv][col] == ZERO {
            return ZERO;
        }
        if piv != col {
            m.swap(piv, col);
            det = -det;
        }
        let d = m[col][col];
        det *= d;
        let (top, rest) = m.split_at_mut(col + 1);
        let pivot = &top[col][col..];
        for row in rest {
            let factor = row[col] / d;
            if factor != ZERO {
                for (x, v) in row[col..].iter_mut().zip(pivot) {
                    *x -= factor * v;
                }
            }
        }
    }
    det
}

/// JSON form `{"num": [[re, im], ...], "den": [[re, im], ...]}`, lowest
/// degree first.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RationalMapJson {
    pub num: Vec<[f64; 2]>,
    pub den: Vec<[f64; 2]>,
}

impl TryFrom<RationalMapJson> for RationalMap {
    type Error = Error;

    fn try_from(j: RationalMapJson) -> Result<Self> {
        let conv = |v: &[[f64; 2]]| Polynomial::new(v.iter().map(|c| Complex64::new(c[0], c[1])).collect());
        RationalMap::new(conv(&j.num), conv(&j.den))
    }
}

impl From<&RationalMap> for RationalMapJson {
    fn from(f: &RationalMap) -> Self {
        let conv = |p: &Polynomial| p.coeffs().iter().map(|c| [c.re, c.im]).collect();
        RationalMapJson {
            num: conv(&f.num),
            den: conv(&f.den),
        }
    }
}

impl Serialize for RationalMap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RationalMapJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for RationalMap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = RationalMapJson::deserialize(d)?;
        RationalMap::try_from(j).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::chordal_distance;

    fn c(re: f64, im: f64) -> ExtComplex {
        ExtComplex::new(re, im)
    }

    fn sq() -> RationalMap {
        RationalMap::monomial(2).unwrap()
    }

    fn contains(set: &[ExtComplex], p: ExtComplex, tol: f64) -> bool {
        set.iter().any(|&q| chordal_distance(p, q) < tol)
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(sq().evaluate(c(2.0, 0.0)), c(4.0, 0.0));
        assert_eq!(sq().evaluate(ExtComplex::Infinity), ExtComplex::Infinity);
        let inv = RationalMap::new(Polynomial::from_real(&[1.0]), Polynomial::from_real(&[0.0, 1.0])).unwrap();
        assert_eq!(inv.evaluate(c(0.0, 0.0)), ExtComplex::Infinity);
        assert_eq!(inv.evaluate(ExtComplex::Infinity), c(0.0, 0.0));
    }

    #[test]
    fn spherical_derivative_examples() {
        assert_eq!(sq().spherical_derivative(c(0.0, 0.0)), 0.0);
        assert!((sq().spherical_derivative(c(1.0, 0.0)) - 2.0).abs() < 1e-15);
        assert_eq!(sq().spherical_derivative(ExtComplex::Infinity), 0.0);
    }

    #[test]
    fn spherical_derivative_at_infinity_matches_finite_differences() {
        // chordal difference quotients along the positive real axis toward infinity
        let f = sq();
        let mut prev = f64::INFINITY;
        for &r in &[1e2, 1e3, 1e4] {
            let h = r * 1e-6;
            let q = chordal_distance(f.evaluate(c(r + h, 0.0)), f.evaluate(c(r, 0.0)))
                / chordal_distance(c(r + h, 0.0), c(r, 0.0));
            assert!(q < prev);
            prev = q;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn preimage_examples() {
        let p = sq().preimages(c(1.0, 0.0)).unwrap();
        assert_eq!(p.len(), 2);
        assert!(contains(&p, c(1.0, 0.0), 1e-14) && contains(&p, c(-1.0, 0.0), 1e-14));
        assert_eq!(sq().preimages(c(0.0, 0.0)).unwrap(), vec![c(0.0, 0.0), c(0.0, 0.0)]);
        let cubic = RationalMap::polynomial(&[0.0, -1.0, 0.0, 1.0]).unwrap();
        let p = cubic.preimages(c(0.0, 0.0)).unwrap();
        for root in &p {
            assert!(cubic.evaluate(*root).finite().unwrap().norm() < 1e-9);
        }
        assert!(contains(&p, c(0.0, 0.0), 1e-12) && contains(&p, c(1.0, 0.0), 1e-12));
        assert!(contains(&p, c(-1.0, 0.0), 1e-12));
    }

    #[test]
    fn preimages_of_infinity_and_poles() {
        assert_eq!(
            sq().preimages(ExtComplex::Infinity).unwrap(),
            vec![ExtComplex::Infinity, ExtComplex::Infinity]
        );
        // f = (z^2 + 1)/(2z): preimages of infinity are 0 and infinity
        let j = RationalMap::new(Polynomial::from_real(&[1.0, 0.0, 1.0]), Polynomial::from_real(&[0.0, 2.0])).unwrap();
        let p = j.preimages(ExtComplex::Infinity).unwrap();
        assert!(contains(&p, c(0.0, 0.0), 1e-12) && contains(&p, ExtComplex::Infinity, 1e-12));
    }

    #[test]
    fn critical_point_examples() {
        let cp = sq().critical_points().unwrap();
        assert!(contains(&cp, c(0.0, 0.0), 1e-12) && contains(&cp, ExtComplex::Infinity, 1e-12));
        let basilica = RationalMap::polynomial(&[-1.0, 0.0, 1.0]).unwrap();
        let cv = basilica.critical_values().unwrap();
        assert!(contains(&cv, c(-1.0, 0.0), 1e-12) && contains(&cv, ExtComplex::Infinity, 1e-12));
        let cube = RationalMap::monomial(3).unwrap();
        let cv = cube.critical_values().unwrap();
        assert_eq!(cv.len(), 4);
        assert_eq!(cv.iter().filter(|v| v.is_infinity()).count(), 2);
        assert_eq!(cv.iter().filter(|v| **v == c(0.0, 0.0)).count(), 2);
    }

    #[test]
    fn joukowski_critical_points() {
        // (z^2 + 1)/(2z): Wronskian 2z^2 - 2, critical points +-1
        let j = RationalMap::new(Polynomial::from_real(&[1.0, 0.0, 1.0]), Polynomial::from_real(&[0.0, 2.0])).unwrap();
        let cp = j.critical_points().unwrap();
        assert_eq!(cp.len(), 2);
        for p in &cp {
            assert!(j.spherical_derivative(*p) < 1e-12);
        }
        assert!(contains(&cp, c(1.0, 0.0), 1e-12) && contains(&cp, c(-1.0, 0.0), 1e-12));
    }

    #[test]
    fn rejects_degenerate_maps() {
        assert!(RationalMap::polynomial(&[3.0]).is_err());
        // (z^2 - 1)/(z - 1) shares the root 1
        assert!(RationalMap::new(Polynomial::from_real(&[-1.0, 0.0, 1.0]), Polynomial::from_real(&[-1.0, 1.0])).is_err());
        assert!(RationalMap::new(Polynomial::from_real(&[1.0, 1.0]), Polynomial::new(vec![])).is_err());
    }

    #[test]
    fn json_round_trip() {
        let f = RationalMap::polynomial(&[-1.0, 0.0, 1.0]).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(s, r#"{"num":[[-1.0,0.0],[0.0,0.0],[1.0,0.0]],"den":[[1.0,0.0]]}"#);
        let g: RationalMap = serde_json::from_str(&s).unwrap();
        assert_eq!(f, g);
        assert!(serde_json::from_str::<RationalMap>(r#"{"num":[[2,0]],"den":[[1,0]]}"#).is_err());
    }

    #[test]
    fn composition_matches_stepwise_evaluation() {
        let f = RationalMap::polynomial(&[-1.0, 0.0, 1.0]).unwrap();
        let g = sq();
        let h = g.compose(&f).unwrap();
        assert_eq!(h.degree(), 4);
        let z = c(0.3, -0.2);
        let d = chordal_distance(h.evaluate(z), g.evaluate(f.evaluate(z)));
        assert!(d < 1e-14);
    }
}
