//! Generator sets, words, the skew product, and Julia-set sampling.
//!
//! Generators are indexed from 0. A word is a sequence of generator indices
//! in *application order*: `[a, b]` means apply `f_a` first, then `f_b`.

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::rational::RationalMap;
use crate::sphere::{chordal_distance, ExtComplex, SphereIndex};

/// Generators of a rational semigroup; every generator has degree >= 2.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GeneratorSetJson", into = "GeneratorSetJson")]
pub struct GeneratorSet {
    maps: Vec<RationalMap>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct GeneratorSetJson {
    generators: Vec<RationalMap>,
}

impl TryFrom<GeneratorSetJson> for GeneratorSet {
    type Error = Error;
    fn try_from(j: GeneratorSetJson) -> Result<Self> {
        GeneratorSet::new(j.generators)
    }
}

impl From<GeneratorSet> for GeneratorSetJson {
    fn from(g: GeneratorSet) -> Self {
        GeneratorSetJson { generators: g.maps }
    }
}

impl GeneratorSet {
    pub fn new(maps: Vec<RationalMap>) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::InvalidGenerators("need at least one generator".into()));
        }
        if let Some((j, f)) = maps.iter().enumerate().find(|(_, f)| f.degree() < 2) {
            return Err(Error::InvalidGenerators(format!(
                "generator {j} has degree {} (Möbius generators are not supported)",
                f.degree()
            )));
        }
        Ok(GeneratorSet { maps })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("generator sets always serialize")
    }

    /// Number of generators `s`.
    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn map(&self, j: usize) -> &RationalMap {
        &self.maps[j]
    }

    pub fn maps(&self) -> &[RationalMap] {
        &self.maps
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.maps.iter().map(|f| f.degree()).collect()
    }

    /// `Σ e_j`, the number of one-step backward branches of the skew product.
    pub fn degree_sum(&self) -> usize {
        self.maps.iter().map(|f| f.degree()).sum()
    }

    /// `d = max_j (2 e_j - 2)`, the largest critical-point count.
    pub fn max_critical_count(&self) -> usize {
        self.maps.iter().map(|f| 2 * f.degree() - 2).max().unwrap_or(0)
    }

    fn check_symbols(&self, word: &[usize]) -> Result<()> {
        match word.iter().find(|&&j| j >= self.len()) {
            Some(j) => Err(Error::InvalidArgument(format!(
                "symbol {j} out of range for {} generators",
                self.len()
            ))),
            None => Ok(()),
        }
    }
}

/// A point of the skew product: the unconsumed prefix of the symbol
/// sequence together with the fibre coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct SkewPoint {
    pub prefix: Vec<usize>,
    pub z: ExtComplex,
    /// symbols consumed so far, oldest first
    pub consumed: Vec<usize>,
}

impl SkewPoint {
    pub fn new(prefix: Vec<usize>, z: ExtComplex) -> Self {
        SkewPoint {
            prefix,
            z,
            consumed: Vec::new(),
        }
    }
}

/// One step of the skew product `(ω, z) ↦ (σω, f_{ω₁}(z))`.
pub fn skew_step(gens: &GeneratorSet, p: &SkewPoint) -> Result<SkewPoint> {
    let (&j, rest) = p.prefix.split_first().ok_or(Error::WordTooShort { needed: 1, have: 0 })?;
    gens.check_symbols(&[j])?;
    let mut consumed = p.consumed.clone();
    consumed.push(j);
    Ok(SkewPoint {
        prefix: rest.to_vec(),
        z: gens.map(j).evaluate(p.z),
        consumed,
    })
}

/// Applies the generators of `word` to `z` in order.
pub fn word_apply(gens: &GeneratorSet, word: &[usize], z: ExtComplex) -> Result<ExtComplex> {
    gens.check_symbols(word)?;
    Ok(word.iter().fold(z, |z, &j| gens.map(j).evaluate(z)))
}

/// `Σ_{k<n} ψ(ω_{k+1}, z_k)` along the skew orbit of `(prefix, z)`.
pub fn birkhoff_sum(gens: &GeneratorSet, psi: &Potential, prefix: &[usize], z: ExtComplex, n: usize) -> Result<f64> {
    if prefix.len() < n {
        return Err(Error::WordTooShort {
            needed: n,
            have: prefix.len(),
        });
    }
    gens.check_symbols(&prefix[..n])?;
    let mut acc = 0.0;
    let mut z = z;
    for &j in &prefix[..n] {
        acc += psi.evaluate(gens, j, z);
        z = gens.map(j).evaluate(z);
    }
    Ok(acc)
}

/// A finite sample of the Julia set with the parameters that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct JuliaCloud {
    pub points: Vec<ExtComplex>,
    pub seed: u64,
    pub seed_point: ExtComplex,
    pub burn_in: usize,
}

impl JuliaCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Median chordal distance to the nearest other cloud point, over at
    /// most 2000 evenly strided points.
    pub fn spacing(&self, index: &SphereIndex) -> f64 {
        let n = self.points.len();
        if n < 2 {
            return 0.0;
        }
        let stride = n.div_ceil(2000);
        let mut d: Vec<f64> = (0..n)
            .step_by(stride)
            .filter_map(|i| index.nearest_distance(self.points[i], Some(i)))
            .collect();
        d.sort_by(|a, b| a.partial_cmp(b).unwrap());
        d[d.len() / 2]
    }

    /// `(min_x, max_x, min_y, max_y)` over finite points.
    pub fn bounds(&self) -> Option<(f64, f64, f64, f64)> {
        let mut it = self.points.iter().filter(|p| !p.is_effectively_infinite()).filter_map(|p| p.finite());
        let first = it.next()?;
        Some(it.fold((first.re, first.re, first.im, first.im), |b, z| {
            (b.0.min(z.re), b.1.max(z.re), b.2.min(z.im), b.3.max(z.im))
        }))
    }
}

/// Backward chaos-game parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BackwardSampling {
    pub seed_point: ExtComplex,
    pub burn_in: usize,
    pub samples: usize,
}

impl Default for BackwardSampling {
    fn default() -> Self {
        BackwardSampling {
            seed_point: ExtComplex::new(0.5, 0.5),
            burn_in: 50,
            samples: 10_000,
        }
    }
}

/// Steps below this chordal size count as stationary.
const STATIONARY_STEP: f64 = 1e-12;
/// Consecutive stationary steps that mark the seed as exceptional.
const STATIONARY_RUN: usize = 20;

/// Samples `J(G)` by random inverse iteration: each step picks a generator
/// uniformly and then one of its preimages uniformly. The first `burn_in`
/// points are discarded.
pub fn julia_backward_sample<R: Rng + ?Sized>(
    gens: &GeneratorSet,
    params: BackwardSampling,
    rng: &mut R,
) -> Result<JuliaCloud> {
    if params.samples == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    let mut z = params.seed_point;
    let mut prev = z;
    let mut stationary = 0;
    let mut points = Vec::with_capacity(params.samples);
    for step in 0..params.burn_in + params.samples {
        let j = rng.random_range(0..gens.len());
        let pre = gens.map(j).preimages(z)?;
        let next = *pre.choose(rng).expect("degree >= 2");
        if chordal_distance(next, z) < STATIONARY_STEP && all_preimages_stationary(gens, z, prev)? {
            stationary += 1;
            if stationary >= STATIONARY_RUN {
                return Err(Error::ExceptionalSeed(params.seed_point.to_string()));
            }
        } else {
            stationary = 0;
        }
        prev = z;
        z = next;
        if step >= params.burn_in {
            points.push(z);
        }
    }
    Ok(JuliaCloud {
        points,
        seed: 0,
        seed_point: params.seed_point,
        burn_in: params.burn_in,
    })
}

/// [`julia_backward_sample`] with a ChaCha8 stream seeded from `seed`,
/// recording the seed in the cloud.
pub fn julia_backward_sample_seeded(gens: &GeneratorSet, params: BackwardSampling, seed: u64) -> Result<JuliaCloud> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cloud = julia_backward_sample(gens, params, &mut rng)?;
    cloud.seed = seed;
    Ok(cloud)
}

// Every backward branch stays at z (or at the previous point): the backward
// orbit cannot spread.
fn all_preimages_stationary(gens: &GeneratorSet, z: ExtComplex, prev: ExtComplex) -> Result<bool> {
    for f in gens.maps() {
        for p in f.preimages(z)? {
            if chordal_distance(p, z) >= STATIONARY_STEP && chordal_distance(p, prev) >= STATIONARY_STEP {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Holds => "holds",
            Verdict::Fails => "fails",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Evidence for the E-semigroup conditions on a sampled Julia set.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionReport {
    /// Always holds: every generator has degree >= 2.
    pub e1: Verdict,
    /// Critical values of every generator stay away from the cloud.
    pub e2_sufficient: Verdict,
    /// No sampled critical orbit on the cloud returns near its start.
    pub e3_heuristic: Verdict,
    /// Minimum chordal distance from finite critical values to the cloud.
    pub min_cv_distance: f64,
    /// Closeness threshold used for both heuristics.
    pub delta: f64,
    pub spacing: f64,
    pub orbit_length: usize,
    pub words_checked: usize,
    /// Witness for an inconclusive E3: (generator, critical point, word).
    pub e3_witness: Option<(usize, ExtComplex, Vec<usize>)>,
}

/// Maximum number of words examined per critical point for E3.
const E3_WORD_CAP: usize = 4096;

/// Checks E1 by construction and gives heuristic evidence for E2 (through
/// the sufficient condition `CV(f_j) ∩ J(G) = ∅`) and E3 (no critical orbit
/// of length at most `orbit_length` returns near its start while staying on
/// the cloud). E2 and E3 are never reported as failing, only inconclusive.
pub fn check_conditions(gens: &GeneratorSet, cloud: &JuliaCloud, orbit_length: usize) -> Result<ConditionReport> {
    if cloud.is_empty() {
        return Err(Error::InvalidArgument("cloud is empty".into()));
    }
    let index = SphereIndex::auto(&cloud.points);
    let spacing = cloud.spacing(&index);
    let delta = 3.0 * spacing;
    let dist = |p: ExtComplex| index.nearest_distance(p, None).unwrap_or(f64::INFINITY);

    let mut min_cv_distance = f64::INFINITY;
    for f in gens.maps() {
        for v in f.critical_values()? {
            if !v.is_effectively_infinite() {
                min_cv_distance = min_cv_distance.min(dist(v));
            }
        }
    }
    let e2_sufficient = if min_cv_distance > delta {
        Verdict::Holds
    } else {
        Verdict::Inconclusive
    };

    let words = e3_words(gens.len(), orbit_length, cloud.seed);
    let mut words_checked = 0;
    let mut e3_witness = None;
    'outer: for (j, f) in gens.maps().iter().enumerate() {
        let crit: BTreeSet<(u64, u64)> = f
            .critical_points()?
            .into_iter()
            .filter_map(|c| c.finite())
            .map(|c| (c.re.to_bits(), c.im.to_bits()))
            .collect();
        for (re, im) in crit {
            let c = ExtComplex::new(f64::from_bits(re), f64::from_bits(im));
            if dist(c) > delta {
                continue;
            }
            for tail in &words {
                words_checked += 1;
                let mut z = f.evaluate(c);
                let mut word = vec![j];
                for &k in std::iter::once(&usize::MAX).chain(tail.iter()) {
                    if k != usize::MAX {
                        z = gens.map(k).evaluate(z);
                        word.push(k);
                    }
                    if dist(z) > delta {
                        break;
                    }
                    if chordal_distance(z, c) < delta {
                        e3_witness = Some((j, c, word));
                        break 'outer;
                    }
                }
            }
        }
    }
    Ok(ConditionReport {
        e1: Verdict::Holds,
        e2_sufficient,
        e3_heuristic: if e3_witness.is_some() {
            Verdict::Inconclusive
        } else {
            Verdict::Holds
        },
        min_cv_distance,
        delta,
        spacing,
        orbit_length,
        words_checked,
        e3_witness,
    })
}

// Continuations of length orbit_length - 1 after the first (critical) step:
// all of them when few enough, otherwise a seeded sample.
fn e3_words(s: usize, orbit_length: usize, seed: u64) -> Vec<Vec<usize>> {
    let len = orbit_length.saturating_sub(1);
    let total = (s as f64).powi(len as i32);
    if total <= E3_WORD_CAP as f64 {
        let mut out = vec![Vec::new()];
        for _ in 0..len {
            out = out
                .into_iter()
                .flat_map(|w| {
                    (0..s).map(move |k| {
                        let mut w2 = w.clone();
                        w2.push(k);
                        w2
                    })
                })
                .collect();
        }
        out
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xE3);
        (0..E3_WORD_CAP)
            .map(|_| (0..len).map(|_| rng.random_range(0..s)).collect())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::RationalMap;

    fn monomials(ds: &[usize]) -> GeneratorSet {
        GeneratorSet::new(ds.iter().map(|&d| RationalMap::monomial(d).unwrap()).collect()).unwrap()
    }

    #[test]
    fn rejects_low_degree_and_empty() {
        assert!(GeneratorSet::new(vec![]).is_err());
        let mobius = RationalMap::polynomial(&[1.0, 1.0]).unwrap();
        assert!(GeneratorSet::new(vec![RationalMap::monomial(2).unwrap(), mobius]).is_err());
    }

    #[test]
    fn derived_quantities() {
        let g = monomials(&[2, 3]);
        assert_eq!(g.degree_sum(), 5);
        assert_eq!(g.max_critical_count(), 4);
    }

    #[test]
    fn skew_step_examples() {
        let g = monomials(&[2]);
        let p = skew_step(&g, &SkewPoint::new(vec![0, 0, 0], ExtComplex::new(2.0, 0.0))).unwrap();
        assert_eq!(p.prefix, vec![0, 0]);
        assert_eq!(p.z, ExtComplex::new(4.0, 0.0));
        let g = monomials(&[2, 3]);
        let p = skew_step(&g, &SkewPoint::new(vec![1, 0], ExtComplex::new(-1.0, 0.0))).unwrap();
        assert_eq!(p.prefix, vec![0]);
        assert_eq!(p.z, ExtComplex::new(-1.0, 0.0));
        assert_eq!(p.consumed, vec![1]);
        assert!(skew_step(&g, &SkewPoint::new(vec![], ExtComplex::ZERO)).is_err());
    }

    #[test]
    fn word_apply_examples() {
        let g = monomials(&[2, 3]);
        let two = ExtComplex::new(2.0, 0.0);
        assert_eq!(word_apply(&g, &[0, 1], two).unwrap(), ExtComplex::new(64.0, 0.0));
        assert_eq!(word_apply(&g, &[1, 0], two).unwrap(), ExtComplex::new(64.0, 0.0));
        let g = GeneratorSet::new(vec![
            RationalMap::polynomial(&[-1.0, 0.0, 1.0]).unwrap(),
            RationalMap::monomial(2).unwrap(),
        ])
        .unwrap();
        assert_eq!(word_apply(&g, &[0, 1], ExtComplex::ZERO).unwrap(), ExtComplex::new(1.0, 0.0));
        assert!(word_apply(&g, &[2], ExtComplex::ZERO).is_err());
    }

    #[test]
    fn backward_sample_on_unit_circle() {
        for ds in [&[2][..], &[2, 3][..]] {
            let g = monomials(ds);
            let params = BackwardSampling {
                seed_point: ExtComplex::new(2.0, 0.0),
                burn_in: 50,
                samples: 1000,
            };
            let cloud = julia_backward_sample_seeded(&g, params, 7).unwrap();
            assert_eq!(cloud.len(), 1000);
            for p in &cloud.points {
                assert!((p.finite().unwrap().norm() - 1.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn exceptional_seed_is_rejected() {
        let g = monomials(&[2]);
        let params = BackwardSampling {
            seed_point: ExtComplex::ZERO,
            burn_in: 50,
            samples: 1000,
        };
        assert!(matches!(
            julia_backward_sample_seeded(&g, params, 1),
            Err(Error::ExceptionalSeed(_))
        ));
        let params = BackwardSampling {
            seed_point: ExtComplex::Infinity,
            ..params
        };
        assert!(julia_backward_sample_seeded(&g, params, 1).is_err());
    }

    #[test]
    fn birkhoff_examples() {
        let g = monomials(&[2]);
        let c = Potential::constant(0.7);
        let s = birkhoff_sum(&g, &c, &[0, 0, 0], ExtComplex::new(0.3, 0.1), 3).unwrap();
        assert!((s - 2.1).abs() < 1e-15);
        assert_eq!(birkhoff_sum(&g, &c, &[], ExtComplex::ZERO, 0).unwrap(), 0.0);
        let geo = Potential::geometric(1.0);
        let s = birkhoff_sum(&g, &geo, &[0, 0], ExtComplex::new(1.0, 0.0), 2).unwrap();
        assert!((s + 4f64.ln()).abs() < 1e-14);
        assert!(birkhoff_sum(&g, &geo, &[0], ExtComplex::ZERO, 2).is_err());
    }

    #[test]
    fn generator_set_json() {
        let s = r#"{"generators":[{"num":[[0,0],[0,0],[1,0]],"den":[[1,0]]},{"num":[[0,0],[0,0],[0,0],[1,0]],"den":[[1,0]]}]}"#;
        let g = GeneratorSet::from_json(s).unwrap();
        assert_eq!(g.degrees(), vec![2, 3]);
        let back = GeneratorSet::from_json(&g.to_json()).unwrap();
        assert_eq!(g, back);
        assert!(GeneratorSet::from_json(r#"{"generators":[]}"#).is_err());
    }
}
