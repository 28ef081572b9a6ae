//! Dense complex polynomials and a simultaneous root finder.

use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Coefficients below this fraction of the largest one are treated as zero
/// when deciding the effective degree.
pub const DEGREE_DROP_TOL: f64 = 1e-13;

/// A polynomial with complex coefficients stored lowest degree first.
/// Trailing zero coefficients are trimmed on construction, so the leading
/// coefficient of a nonzero polynomial is nonzero.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<Complex64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.last().is_some_and(|c| *c == ZERO) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(vec![c])
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Coefficient of `z^k` (zero beyond the degree).
    pub fn coeff(&self, k: usize) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or(ZERO)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        horner(&self.coeffs, z)
    }

    pub fn derivative(&self) -> Polynomial {
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * k as f64)
                .collect(),
        )
    }

    /// `z^n p(1/z)` for `n >= degree`, i.e. the coefficients reversed after
    /// padding to length `n + 1`.
    pub fn reversed(&self, n: usize) -> Polynomial {
        let mut c = vec![ZERO; n + 1];
        for (k, &a) in self.coeffs.iter().enumerate() {
            c[n - k] = a;
        }
        Polynomial::new(c)
    }

    pub fn scale(&self, s: Complex64) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(other.coeffs.len());
        Polynomial::new((0..n).map(|k| self.coeff(k) + other.coeff(k)).collect())
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        if self.is_zero() || other.is_zero() {
            return Polynomial::new(Vec::new());
        }
        let mut c = vec![ZERO; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Polynomial::new(c)
    }

    pub fn pow(&self, n: usize) -> Polynomial {
        let mut acc = Polynomial::constant(Complex64::new(1.0, 0.0));
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }
}

pub(crate) fn horner(c: &[Complex64], z: Complex64) -> Complex64 {
    c.iter().rev().fold(ZERO, |acc, &a| acc * z + a)
}

/// Roots of `coeffs` (lowest first) together with the number of leading
/// coefficients that were numerically zero. The caller decides what a degree
/// drop means; for sphere preimages the deficit sits at infinity.
#[derive(Clone, Debug)]
pub struct RootSet {
    pub roots: Vec<Complex64>,
    pub degree_drop: usize,
}

/// Finds all roots of the polynomial with coefficients `coeffs`, treated as
/// having nominal degree `coeffs.len() - 1`. Leading coefficients smaller
/// than [`DEGREE_DROP_TOL`] relative to the largest are dropped and counted
/// in `degree_drop`. Roots that agree to `cluster_tol` are merged to their
/// mean so multiplicities come out exactly repeated.
pub fn find_roots(coeffs: impl Into<Vec<Complex64>>, cluster_tol: f64) -> Result<RootSet> {
    let mut c: Vec<Complex64> = coeffs.into();
    let nominal = c.len().saturating_sub(1);
    let scale = c.iter().map(|c| c.norm_sqr()).fold(0.0, f64::max).sqrt();
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::RootFinding {
            residual: f64::NAN,
            detail: "polynomial is identically zero or non-finite".into(),
        });
    }
    c.iter_mut().for_each(|a| *a /= scale);
    while c.len() > 1 && c.last().unwrap().norm_sqr() <= DEGREE_DROP_TOL * DEGREE_DROP_TOL {
        c.pop();
    }
    let degree_drop = nominal - (c.len() - 1);

    let mut roots = Vec::with_capacity(c.len() - 1);
    // exact zero roots
    let mut lead_zeros = 0;
    while lead_zeros < c.len() - 1 && c[lead_zeros] == ZERO {
        lead_zeros += 1;
    }
    roots.extend(std::iter::repeat_n(ZERO, lead_zeros));
    let c = &c[lead_zeros..];
    let deg = c.len() - 1;

    match deg {
        0 => {}
        1 => roots.push(-c[0] / c[1]),
        _ if c[1..deg].iter().all(|&a| a == ZERO) => {
            // binomial c_d z^d + c_0: d-th roots in closed form
            let w = -c[0] / c[deg];
            let (r, th) = w.to_polar();
            let first = Complex64::from_polar(r.powf(1.0 / deg as f64), th / deg as f64);
            roots.push(first);
            let step = Complex64::cis(2.0 * std::f64::consts::PI / deg as f64);
            for k in 1..deg {
                // exact unit roots for small k, rotation otherwise
                let unit = match (deg, k) {
                    (2, 1) => Complex64::new(-1.0, 0.0),
                    (3, 1) => Complex64::new(-0.5, 0.75f64.sqrt()),
                    (3, 2) => Complex64::new(-0.5, -(0.75f64.sqrt())),
                    (4, 1) => Complex64::new(0.0, 1.0),
                    (4, 2) => Complex64::new(-1.0, 0.0),
                    (4, 3) => Complex64::new(0.0, -1.0),
                    _ => step.powu(k as u32),
                };
                roots.push(first * unit);
            }
        }
        2 => {
            let (a, b, cc) = (c[2], c[1], c[0]);
            let disc = (b * b - a * cc * 4.0).sqrt();
            let q = if (b.conj() * disc).re >= 0.0 {
                -(b + disc) * 0.5
            } else {
                -(b - disc) * 0.5
            };
            if q == ZERO {
                roots.push(ZERO);
                roots.push(ZERO);
            } else {
                roots.push(q / a);
                roots.push(cc / q);
            }
        }
        _ => {
            let mut found = aberth(c)?;
            polish(c, &mut found);
            roots.extend(found);
        }
    }

    cluster(&mut roots, cluster_tol);
    Ok(RootSet { roots, degree_drop })
}

fn aberth(c: &[Complex64]) -> Result<Vec<Complex64>> {
    let deg = c.len() - 1;
    let dc: Vec<Complex64> = (1..=deg).map(|k| c[k] * k as f64).collect();
    let lead = c[deg];
    // initial guesses on a circle of radius given by the geometric mean of
    // the root moduli, with an irrational angular offset
    let radius = (c[0] / lead).norm().powf(1.0 / deg as f64).max(1e-3);
    let mut z: Vec<Complex64> = (0..deg)
        .map(|k| {
            let ang = 2.0 * std::f64::consts::PI * k as f64 / deg as f64 + 0.4;
            Complex64::from_polar(radius, ang)
        })
        .collect();
    const MAX_ITER: usize = 500;
    for _ in 0..MAX_ITER {
        let mut max_step: f64 = 0.0;
        for i in 0..deg {
            let p = horner(c, z[i]);
            if p == ZERO {
                continue;
            }
            let dp = horner(&dc, z[i]);
            let ratio = p / dp;
            let mut s = ZERO;
            for j in 0..deg {
                if j != i {
                    let diff = z[i] - z[j];
                    if diff != ZERO {
                        s += diff.inv();
                    }
                }
            }
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * s);
            if step.re.is_finite() && step.im.is_finite() {
                z[i] -= step;
                max_step = max_step.max(step.norm() / (1.0 + z[i].norm()));
            }
        }
        if max_step < 1e-15 {
            return Ok(z);
        }
    }
    let residual = z.iter().map(|&r| horner(c, r).norm()).fold(0.0, f64::max);
    // near-multiple roots stall at sqrt(eps); accept them if the residual is tiny
    if residual < 1e-10 {
        return Ok(z);
    }
    Err(Error::RootFinding {
        residual,
        detail: format!("Aberth iteration did not converge for degree {deg}"),
    })
}

fn polish(c: &[Complex64], roots: &mut [Complex64]) {
    if c.len() < 2 {
        return;
    }
    for r in roots.iter_mut() {
        let (p, dp) = horner_with_derivative(c, *r);
        if dp == ZERO {
            continue;
        }
        let cand = *r - p / dp;
        // keep the step only if it does not make things worse
        if cand.re.is_finite() && cand.im.is_finite() && horner(c, cand).norm_sqr() <= p.norm_sqr() {
            *r = cand;
        }
    }
}

/// `(p(z), p'(z))` in one pass.
pub(crate) fn horner_with_derivative(c: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = ZERO;
    let mut dp = ZERO;
    for &a in c.iter().rev() {
        dp = dp * z + p;
        p = p * z + a;
    }
    (p, dp)
}

/// Replaces every group of roots linked by chordal distance below `tol`
/// (transitively) with the group mean.
fn cluster(roots: &mut [Complex64], tol: f64) {
    let n = roots.len();
    let close = |i: usize, j: usize| chordal(roots[i], roots[j]) < tol;
    if !(1..n).any(|i| (0..i).any(|j| close(i, j))) {
        return;
    }
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 1..n {
        for j in 0..i {
            if chordal(roots[i], roots[j]) < tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut sums = vec![(ZERO, 0usize); n];
    for (i, r) in roots.iter().enumerate() {
        let g = find(&mut parent, i);
        sums[g].0 += *r;
        sums[g].1 += 1;
    }
    for (i, r) in roots.iter_mut().enumerate() {
        let g = find(&mut parent, i);
        *r = sums[g].0 / sums[g].1 as f64;
    }
}

fn chordal(a: Complex64, b: Complex64) -> f64 {
    let d2 = 4.0 * (a - b).norm_sqr() / ((1.0 + a.norm_sqr()) * (1.0 + b.norm_sqr()));
    if d2.is_finite() {
        d2.sqrt()
    } else {
        crate::sphere::chordal_distance(a.into(), b.into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn sorted_re(mut v: Vec<Complex64>) -> Vec<f64> {
        v.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        v.iter().map(|z| z.re).collect()
    }

    #[test]
    fn trims_trailing_zeros() {
        let p = Polynomial::from_real(&[1.0, 2.0, 0.0, 0.0]);
        assert_eq!(p.degree(), 1);
        assert_eq!(p.coeffs().len(), 2);
    }

    #[test]
    fn cubic_roots() {
        // z^3 - z
        let rs = find_roots([c(0.0), c(-1.0), c(0.0), c(1.0)], 1e-7).unwrap();
        let r = sorted_re(rs.roots);
        assert!((r[0] + 1.0).abs() < 1e-12 && r[1].abs() < 1e-12 && (r[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn double_root_is_repeated_exactly() {
        // (z - 2)^2 (z + 1) = z^3 - 3z^2 + 4
        let rs = find_roots([c(4.0), c(0.0), c(-3.0), c(1.0)], 1e-7).unwrap();
        let twos: Vec<_> = rs.roots.iter().filter(|z| (z.re - 2.0).abs() < 1e-6).collect();
        assert_eq!(twos.len(), 2);
        assert_eq!(twos[0], twos[1]);
    }

    #[test]
    fn degree_drop_is_reported() {
        let rs = find_roots([c(1.0), c(1.0), c(1e-17)], 1e-7).unwrap();
        assert_eq!(rs.degree_drop, 1);
        assert_eq!(rs.roots.len(), 1);
        assert!((rs.roots[0] + 1.0).norm() < 1e-14);
    }

    #[test]
    fn high_degree_residuals() {
        // prod (z - k/3) for k = 1..7
        let mut p = Polynomial::from_real(&[1.0]);
        for k in 1..=7 {
            p = p.mul(&Polynomial::from_real(&[-(k as f64) / 3.0, 1.0]));
        }
        let rs = find_roots(p.coeffs(), 1e-7).unwrap();
        assert_eq!(rs.roots.len(), 7);
        for r in sorted_re(rs.roots).iter().enumerate() {
            assert!((r.1 - (r.0 + 1) as f64 / 3.0).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_polynomial_is_an_error() {
        assert!(find_roots([c(0.0), c(0.0)], 1e-7).is_err());
    }
}
