//! Inverse branches continued over balls, the pruned branch families built
//! level by level along a symbol tail, and distortion measurements.
//!
//! A branch is stored as its values on a fixed set of base points: the
//! ball center, `M` radial spokes of `T` steps each, and a closed rim loop
//! at full radius.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::csv;
use crate::error::{Error, Result};
use crate::semigroup::GeneratorSet;
use crate::sphere::{chordal_distance, ExtComplex};

/// Orbit points closer than this to a critical point mark a collision.
pub const COLLISION_TOL: f64 = 1e-7;
/// Tracks agreeing to this are the same branch.
pub const SAME_TRACK_TOL: f64 = 1e-6;
/// Largest accepted forward residual of a continuation step (chordal).
pub const STEP_RESIDUAL_TOL: f64 = 1e-9;
const MAX_CORRECTOR: usize = 8;

/// Euclidean disk in the plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ball {
    pub center: Complex64,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Complex64, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!("ball radius must be positive, got {radius}")));
        }
        Ok(Ball { center, radius })
    }

    /// Largest chordal distance from the center to the boundary.
    pub fn chordal_radius(&self) -> f64 {
        (0..64)
            .map(|k| {
                let p = self.center + Complex64::from_polar(self.radius, std::f64::consts::TAU * k as f64 / 64.0);
                chordal_distance(self.center.into(), p.into())
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrackParams {
    pub spokes: usize,
    pub steps: usize,
}

impl Default for TrackParams {
    fn default() -> Self {
        TrackParams { spokes: 16, steps: 64 }
    }
}

impl TrackParams {
    fn validate(&self) -> Result<()> {
        if self.spokes < 3 || self.steps < 2 {
            return Err(Error::InvalidArgument("need at least 3 spokes and 2 steps".into()));
        }
        Ok(())
    }

    /// Rim samples per loop; a multiple of the spoke count with roughly
    /// the radial step length.
    pub fn rim_steps(&self) -> usize {
        let per_spoke = (std::f64::consts::TAU * self.steps as f64 / self.spokes as f64).ceil() as usize;
        self.spokes * per_spoke.max(1)
    }
}

/// Values on the base points of a ball.
#[derive(Clone, Debug, PartialEq)]
pub struct Track {
    pub center: Complex64,
    /// `spokes[m * T + (k - 1)]` at radius `k r / T` on spoke `m`
    pub spokes: Vec<Complex64>,
    /// `rim[j]` at angle `2πj / K`, `j = 0..=K`
    pub rim: Vec<Complex64>,
}

impl Track {
    fn base(ball: &Ball, p: &TrackParams) -> Track {
        let (m, t, k) = (p.spokes, p.steps, p.rim_steps());
        let mut spokes = Vec::with_capacity(m * t);
        for s in 0..m {
            let dir = Complex64::cis(std::f64::consts::TAU * s as f64 / m as f64);
            for step in 1..=t {
                spokes.push(ball.center + dir * (ball.radius * step as f64 / t as f64));
            }
        }
        let rim = (0..=k)
            .map(|j| ball.center + Complex64::from_polar(ball.radius, std::f64::consts::TAU * j as f64 / k as f64))
            .collect();
        Track {
            center: ball.center,
            spokes,
            rim,
        }
    }

    fn all(&self) -> impl Iterator<Item = Complex64> + '_ {
        std::iter::once(self.center).chain(self.spokes.iter().copied()).chain(self.rim.iter().copied())
    }

    fn max_distance(&self, other: &Track) -> f64 {
        self.all()
            .zip(other.all())
            .map(|(a, b)| chordal_distance(a.into(), b.into()))
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BranchStatus {
    Alive,
    Collided,
}

/// An inverse branch of `f_ω` on a ball, `ω` in application order.
#[derive(Clone, Debug, PartialEq)]
pub struct InverseBranch {
    pub word: Vec<usize>,
    pub ball: Ball,
    pub params: TrackParams,
    pub values: Track,
    pub status: BranchStatus,
    /// max chordal distance between `f_ω` of a track value and its base point
    pub residual: f64,
}

impl InverseBranch {
    /// The identity on `ball`.
    pub fn identity(ball: Ball, params: TrackParams) -> Self {
        InverseBranch {
            word: Vec::new(),
            ball,
            params,
            values: Track::base(&ball, &params),
            status: BranchStatus::Alive,
            residual: 0.0,
        }
    }

    pub fn center_value(&self) -> Complex64 {
        self.values.center
    }

    pub fn is_alive(&self) -> bool {
        self.status == BranchStatus::Alive
    }

    /// Value at spoke `m`, step `k` (`k = 0` is the center).
    pub fn value(&self, m: usize, k: usize) -> Complex64 {
        if k == 0 {
            self.values.center
        } else {
            self.values.spokes[m * self.params.steps + k - 1]
        }
    }

    /// Chordal diameter of the image of the circle at step `k`, measured on
    /// the spoke points.
    pub fn image_diameter(&self, k: usize) -> f64 {
        let pts: Vec<Complex64> = (0..self.params.spokes).map(|m| self.value(m, k)).collect();
        let mut d: f64 = 0.0;
        for (i, a) in pts.iter().enumerate() {
            for b in &pts[i + 1..] {
                d = d.max(chordal_distance((*a).into(), (*b).into()));
            }
        }
        d
    }

    /// Winding number of the rim image around `p`.
    pub fn rim_winding(&self, p: Complex64) -> i64 {
        let mut total = 0.0;
        for w in self.values.rim.windows(2) {
            total += ((w[1] - p) / (w[0] - p)).arg();
        }
        (total / std::f64::consts::TAU).round() as i64
    }
}

/// Newton solver for `F(y) = target` with `F` the word's composition.
struct Stepper<'a> {
    gens: &'a GeneratorSet,
    word: &'a [usize],
    crit: &'a [Vec<Complex64>],
    /// finite critical values of the whole word
    cvs: Vec<Complex64>,
}

impl Stepper<'_> {
    fn eval(&self, y: Complex64) -> Option<(Complex64, Complex64)> {
        let mut v = y;
        let mut d = Complex64::new(1.0, 0.0);
        for &j in self.word {
            let (fv, fd) = self.gens.map(j).value_and_derivative(v)?;
            d *= fd;
            v = fv;
        }
        Some((v, d))
    }

    fn solve(&self, seed: Complex64, seed_target: Complex64, target: Complex64) -> Option<Complex64> {
        let (_, d0) = self.eval(seed)?;
        let mut y = if d0.norm_sqr() > 0.0 {
            seed + (target - seed_target) / d0
        } else {
            seed
        };
        for _ in 0..MAX_CORRECTOR {
            let (v, d) = self.eval(y)?;
            let r = v - target;
            if r.norm() <= 1e-15 * (1.0 + target.norm()) || d.norm_sqr() == 0.0 {
                break;
            }
            let step = r / d;
            y -= step;
            if step.norm() <= 1e-16 * (1.0 + y.norm()) {
                break;
            }
        }
        let (v, _) = self.eval(y)?;
        (y.re.is_finite() && y.im.is_finite() && chordal_distance(v.into(), target.into()) <= STEP_RESIDUAL_TOL)
            .then_some(y)
    }

    /// One continuation step. A failed solve next to a critical value of the
    /// word is a collision: the previous value is kept and the flag is set.
    /// Once a collision has been seen the values are only placeholders and
    /// failures just hold the last one.
    fn step(&self, y: Complex64, prev: Complex64, target: Complex64, hit: bool) -> Option<(Complex64, bool)> {
        if let Some(next) = self.solve(y, prev, target) {
            return Some((next, false));
        }
        if hit {
            return Some((y, true));
        }
        let reach = 2.0 * (target - prev).norm() + COLLISION_TOL;
        self.cvs.iter().any(|&v| (v - target).norm() <= reach).then_some((y, true))
    }

    fn near_critical(&self, y: Complex64) -> bool {
        let mut v = y;
        for &j in self.word {
            if self.crit[j]
                .iter()
                .any(|&c| chordal_distance(v.into(), c.into()) < COLLISION_TOL)
            {
                return true;
            }
            match self.gens.map(j).evaluate_finite(v).finite() {
                Some(next) => v = next,
                None => return false,
            }
        }
        false
    }

    /// Continues the solution `y0` of `F(y0) = targets.center` over all
    /// base points. Returns the values and whether a collision was seen.
    fn track(&self, targets: &Track, y0: Complex64, p: &TrackParams) -> Result<(Track, bool)> {
        let (m, t, k) = (p.spokes, p.steps, p.rim_steps());
        let mut collided = self.near_critical(y0);
        let spokes: Vec<(Vec<Complex64>, bool)> = (0..m)
            .into_par_iter()
            .map(|s| {
                let mut out = Vec::with_capacity(t);
                let (mut y, mut prev, mut hit) = (y0, targets.center, false);
                for step in 0..t {
                    let target = targets.spokes[s * t + step];
                    let (next, h) = self
                        .step(y, prev, target, hit)
                        .ok_or(Error::ContinuationDiverged { spoke: s, step: step + 1 })?;
                    (y, prev, hit) = (next, target, hit | h);
                    out.push(y);
                }
                Ok((out, hit))
            })
            .collect::<Result<_>>()?;
        collided |= spokes.iter().any(|(_, h)| *h);
        let spokes: Vec<Complex64> = spokes.into_iter().flat_map(|(v, _)| v).collect();
        collided |= spokes.par_iter().any(|&y| self.near_critical(y));

        let mut rim = Vec::with_capacity(k + 1);
        let (mut y, mut prev) = (spokes[t - 1], targets.spokes[t - 1]);
        for j in 0..=k {
            let target = targets.rim[j];
            let (next, h) = self
                .step(y, prev, target, collided)
                .ok_or(Error::ContinuationDiverged { spoke: m, step: j })?;
            (y, prev) = (next, target);
            collided |= h;
            rim.push(y);
        }
        collided |= rim.par_iter().any(|&y| self.near_critical(y));
        // the rim must meet every spoke end and close up without monodromy
        let per = k / m;
        for s in 0..m {
            if chordal_distance(rim[s * per].into(), spokes[s * t + t - 1].into()) > SAME_TRACK_TOL {
                collided = true;
            }
        }
        if chordal_distance(rim[k].into(), rim[0].into()) > SAME_TRACK_TOL {
            collided = true;
        }
        Ok((
            Track {
                center: y0,
                spokes,
                rim,
            },
            collided,
        ))
    }
}

fn finite_critical_points(gens: &GeneratorSet) -> Result<Vec<Vec<Complex64>>> {
    gens.maps()
        .iter()
        .map(|f| Ok(f.critical_points()?.into_iter().filter_map(|c| c.finite()).collect()))
        .collect()
}

/// Critical values of `f_ω` (application order): each factor's critical
/// values pushed through the remaining factors.
pub fn word_critical_values(gens: &GeneratorSet, word: &[usize]) -> Result<Vec<ExtComplex>> {
    let mut out = Vec::new();
    for (i, &j) in word.iter().enumerate() {
        for v in gens.map(j).critical_values()? {
            out.push(word[i + 1..].iter().fold(v, |z, &k| gens.map(k).evaluate(z)));
        }
    }
    Ok(out)
}

fn finite_values(v: Vec<ExtComplex>) -> Vec<Complex64> {
    v.into_iter().filter_map(|z| z.finite()).collect()
}

fn forward_residual(gens: &GeneratorSet, word: &[usize], base: &Track, values: &Track) -> f64 {
    values
        .all()
        .zip(base.all())
        .map(|(y, b)| {
            let v = word.iter().fold(ExtComplex::Finite(y), |z, &j| gens.map(j).evaluate(z));
            chordal_distance(v, b.into())
        })
        .fold(0.0, f64::max)
}

/// Continues the inverse branch of `f_ω` (application order) with
/// `f_ω(root) = ball.center` over the ball, by predictor-corrector steps
/// along the spokes and around the rim. The branch is marked collided when
/// an orbit point comes within [`COLLISION_TOL`] of a critical point or the
/// rim loop does not close up.
pub fn continue_branch(
    gens: &GeneratorSet,
    word: &[usize],
    ball: Ball,
    root: Complex64,
    params: TrackParams,
) -> Result<InverseBranch> {
    params.validate()?;
    if word.is_empty() {
        return Ok(InverseBranch::identity(ball, params));
    }
    if word.iter().any(|&j| j >= gens.len()) {
        return Err(Error::InvalidArgument("word symbol out of range".into()));
    }
    let center = ExtComplex::Finite(ball.center);
    if word_critical_values(gens, word)?
        .iter()
        .any(|&v| chordal_distance(v, center) < COLLISION_TOL)
    {
        return Err(Error::CriticalCenter(center.to_string()));
    }
    let image = word.iter().fold(ExtComplex::Finite(root), |z, &j| gens.map(j).evaluate(z));
    if chordal_distance(image, center) > 1e-8 {
        return Err(Error::InvalidArgument(format!("{root} is not a preimage of the ball center")));
    }
    let crit = finite_critical_points(gens)?;
    let stepper = Stepper {
        gens,
        word,
        crit: &crit,
        cvs: finite_values(word_critical_values(gens, word)?),
    };
    let base = Track::base(&ball, &params);
    let (values, collided) = stepper.track(&base, root, &params)?;
    let residual = forward_residual(gens, word, &base, &values);
    Ok(InverseBranch {
        word: word.to_vec(),
        ball,
        params,
        values,
        status: if collided {
            BranchStatus::Collided
        } else {
            BranchStatus::Alive
        },
        residual,
    })
}

/// Max/min of the spherical derivative of the branch over its values at
/// radius at most `t` times the ball radius (center included). Derivatives
/// come from the forward word by the inverse-function rule.
pub fn distortion_ratio(gens: &GeneratorSet, branch: &InverseBranch, t: f64) -> f64 {
    let kmax = ((t.clamp(0.0, 1.0) * branch.params.steps as f64) + 1e-9).floor() as usize;
    let sph = |y: Complex64| -> f64 {
        let mut z = ExtComplex::Finite(y);
        let mut d = 1.0;
        for &j in &branch.word {
            d *= gens.map(j).spherical_derivative(z);
            z = gens.map(j).evaluate(z);
        }
        1.0 / d
    };
    let mut lo = sph(branch.center_value());
    let mut hi = lo;
    for m in 0..branch.params.spokes {
        for k in 1..=kmax {
            let v = sph(branch.value(m, k));
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    hi / lo
}

/// Source of the symbol sequence whose consecutive `q`-blocks drive the
/// family construction.
#[derive(Clone, Debug, PartialEq)]
pub enum TailSource {
    Constant(usize),
    Periodic(Vec<usize>),
    Random { seed: u64 },
}

impl TailSource {
    pub fn symbols(&self, s: usize, len: usize) -> Result<Vec<usize>> {
        let out: Vec<usize> = match self {
            TailSource::Constant(j) => vec![*j; len],
            TailSource::Periodic(p) if p.is_empty() => {
                return Err(Error::InvalidArgument("periodic tail is empty".into()))
            }
            TailSource::Periodic(p) => (0..len).map(|i| p[i % p.len()]).collect(),
            TailSource::Random { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                (0..len).map(|_| rng.random_range(0..s)).collect()
            }
        };
        if out.iter().any(|&j| j >= s) {
            return Err(Error::InvalidArgument("tail symbol out of range".into()));
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FamilyParams {
    pub z: Complex64,
    /// branches live on `B(z, 2R)`; areas are measured on `B(z, R)`
    pub r: f64,
    pub lambda: f64,
    pub q: usize,
    pub n_max: usize,
    pub tail: TailSource,
    pub track: TrackParams,
    /// refuse levels with more candidates than this
    pub max_candidates: usize,
}

impl FamilyParams {
    pub fn new(z: Complex64, r: f64, lambda: f64, q: usize, n_max: usize) -> Self {
        FamilyParams {
            z,
            r,
            lambda,
            q,
            n_max,
            tail: TailSource::Constant(0),
            track: TrackParams::default(),
            max_candidates: 200_000,
        }
    }
}

/// One level of the construction.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchFamily {
    pub n: usize,
    pub q: usize,
    /// the block of symbols consumed at this level (application order)
    pub block: Vec<usize>,
    pub candidates: usize,
    pub survivors: usize,
    pub pruned_area: usize,
    pub pruned_cv: usize,
    /// candidates dropped because their tracks repeated another candidate
    pub merged: usize,
    /// candidates whose tracks collided with a critical point
    pub collided: usize,
    /// largest survivor image diameter of `B(z, R)`
    pub max_diam: f64,
    /// largest survivor distortion ratio at `t = 0.5`
    pub distortion_t50: f64,
    pub max_residual: f64,
}

impl BranchFamily {
    pub fn pruned(&self) -> usize {
        self.pruned_area + self.pruned_cv
    }

    /// `dq + λ^{-n}`
    pub fn pruning_bound(&self, d: usize, lambda: f64) -> f64 {
        (d * self.q) as f64 + lambda.powi(-(self.n as i32))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FamilyReport {
    pub levels: Vec<BranchFamily>,
    /// set when a level lost every branch before `n_max`
    pub truncated_at: Option<usize>,
    /// survivors of the last level built
    pub survivors: Vec<InverseBranch>,
}

impl FamilyReport {
    /// Columns `n,candidates,survivors,pruned_area,pruned_cv,max_diam,distortion_ratio_t50`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,candidates,survivors,pruned_area,pruned_cv,max_diam,distortion_ratio_t50\n");
        for l in &self.levels {
            s += &format!(
                "{},{},{},{},{},{},{}\n",
                l.n,
                l.candidates,
                l.survivors,
                l.pruned_area,
                l.pruned_cv,
                csv::real(l.max_diam),
                csv::real(l.distortion_t50)
            );
        }
        s
    }
}

/// Builds the branch families `I_0, …, I_{n_max}` on `B(z, 2R)`. Level `n`
/// extends every survivor of level `n−1` by every inverse branch of the
/// `n`-th block of the tail and keeps a candidate `φ` only if
///
/// 1. `(π/4)·diam(φ(B(z, R)))² ≤ λⁿ`, and
/// 2. `φ(B(z, 2R))` (its rim image) winds around no critical value of the
///    next block.
///
/// A level with no survivors ends the construction early.
pub fn build_family(gens: &GeneratorSet, p: &FamilyParams) -> Result<FamilyReport> {
    p.track.validate()?;
    if p.r.is_nan() || p.r <= 0.0 || !(p.lambda > 0.0 && p.lambda < 1.0) || p.q == 0 {
        return Err(Error::InvalidArgument("need R > 0, λ in (0, 1) and q >= 1".into()));
    }
    if !p.track.steps.is_multiple_of(2) {
        return Err(Error::InvalidArgument("step count must be even to sample B(z, R)".into()));
    }
    let tail = p.tail.symbols(gens.len(), p.q * (p.n_max + 1))?;
    let block = |n: usize| &tail[(n - 1) * p.q..n * p.q];
    let crit = finite_critical_points(gens)?;
    let half = p.track.steps / 2;
    let ball = Ball::new(p.z, 2.0 * p.r)?;
    let base = Track::base(&ball, &p.track);

    let cv_next = |n: usize| -> Result<Vec<ExtComplex>> { word_critical_values(gens, block(n + 1)) };
    let identity = InverseBranch::identity(ball, p.track);
    if cv_next(0)?.iter().any(|v| match v.finite() {
        Some(c) => identity.rim_winding(c) != 0 || (c - p.z).norm() <= 2.0 * p.r,
        None => false,
    }) {
        return Err(Error::InvalidArgument("B(z, 2R) meets a critical value of the first block".into()));
    }

    let mut levels = vec![BranchFamily {
        n: 0,
        q: p.q,
        block: Vec::new(),
        candidates: 1,
        survivors: 1,
        pruned_area: 0,
        pruned_cv: 0,
        merged: 0,
        collided: 0,
        max_diam: identity.image_diameter(half),
        distortion_t50: 1.0,
        max_residual: 0.0,
    }];
    let mut survivors = vec![identity];
    let mut truncated_at = None;

    for n in 1..=p.n_max {
        let blk = block(n);
        // preimages of each survivor's center value under the block
        let mut seeds = Vec::new();
        for (i, phi) in survivors.iter().enumerate() {
            let mut pts = vec![ExtComplex::Finite(phi.center_value())];
            for &j in blk.iter().rev() {
                let mut next = Vec::new();
                for z in pts {
                    next.extend(gens.map(j).preimages(z)?);
                }
                pts = next;
            }
            for x in pts {
                if let Some(x) = x.finite() {
                    seeds.push((i, x));
                }
            }
        }
        if seeds.len() > p.max_candidates {
            return Err(Error::BudgetExceeded {
                nodes: seeds.len() as u64,
                budget: p.max_candidates as u64,
            });
        }
        let tracked: Vec<(usize, Track, bool)> = seeds
            .par_iter()
            .map(|&(i, x)| {
                let stepper = Stepper {
                    gens,
                    word: blk,
                    crit: &crit,
                    cvs: finite_values(word_critical_values(gens, blk)?),
                };
                let (values, collided) = stepper.track(&survivors[i].values, x, &p.track)?;
                Ok((i, values, collided))
            })
            .collect::<Result<_>>()?;

        let mut kept: Vec<InverseBranch> = Vec::new();
        let (mut merged, mut collided, mut pruned_area, mut pruned_cv) = (0, 0, 0, 0);
        let cv = if n < p.n_max || tail.len() >= (n + 1) * p.q {
            cv_next(n)?
        } else {
            Vec::new()
        };
        let area_cap = p.lambda.powi(n as i32);
        for (i, values, hit) in tracked {
            if kept.iter().any(|b| {
                (b.values.center - values.center).norm() < SAME_TRACK_TOL && b.values.max_distance(&values) < SAME_TRACK_TOL
            }) {
                merged += 1;
                continue;
            }
            let mut word = blk.to_vec();
            word.extend_from_slice(&survivors[i].word);
            let branch = InverseBranch {
                word,
                ball,
                params: p.track,
                values,
                status: if hit {
                    BranchStatus::Collided
                } else {
                    BranchStatus::Alive
                },
                residual: 0.0,
            };
            if hit {
                collided += 1;
            }
            let diam = branch.image_diameter(half);
            if std::f64::consts::FRAC_PI_4 * diam * diam > area_cap {
                pruned_area += 1;
                continue;
            }
            let meets_cv = cv.iter().any(|v| match v.finite() {
                Some(c) => branch.rim_winding(c) != 0,
                None => branch.values.rim.iter().any(|y| ExtComplex::Finite(*y).is_effectively_infinite()),
            });
            if meets_cv || hit {
                pruned_cv += 1;
                continue;
            }
            kept.push(branch);
        }
        for b in &mut kept {
            b.residual = forward_residual(gens, &b.word, &base, &b.values);
        }
        let candidates = kept.len() + merged + pruned_area + pruned_cv;
        let level = BranchFamily {
            n,
            q: p.q,
            block: blk.to_vec(),
            candidates: candidates - merged,
            survivors: kept.len(),
            pruned_area,
            pruned_cv,
            merged,
            collided,
            max_diam: kept.iter().map(|b| b.image_diameter(half)).fold(0.0, f64::max),
            distortion_t50: kept
                .par_iter()
                .map(|b| distortion_ratio(gens, b, 0.5))
                .reduce(|| 0.0, f64::max),
            max_residual: kept.iter().map(|b| b.residual).fold(0.0, f64::max),
        };
        levels.push(level);
        survivors = kept;
        if survivors.is_empty() {
            truncated_at = Some(n);
            break;
        }
    }
    Ok(FamilyReport {
        levels,
        truncated_at,
        survivors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::RationalMap;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn z2() -> GeneratorSet {
        GeneratorSet::new(vec![RationalMap::monomial(2).unwrap()]).unwrap()
    }

    #[test]
    fn square_root_branches() {
        let g = z2();
        let ball = Ball::new(c(1.0, 0.0), 0.3).unwrap();
        let plus = continue_branch(&g, &[0], ball, c(1.0, 0.0), TrackParams::default()).unwrap();
        assert!(plus.is_alive());
        assert!(plus.residual < 1e-8);
        for m in 0..16 {
            for k in [1, 20, 64] {
                let w = plus.ball.center + Complex64::cis(std::f64::consts::TAU * m as f64 / 16.0) * (0.3 * k as f64 / 64.0);
                assert!((plus.value(m, k) - w.sqrt()).norm() < 1e-12);
            }
        }
        let minus = continue_branch(&g, &[0], ball, c(-1.0, 0.0), TrackParams::default()).unwrap();
        assert!(minus.is_alive());
        assert!((minus.value(3, 40) + plus.value(3, 40)).norm() < 1e-12);
    }

    #[test]
    fn branch_point_inside_ball_is_detected() {
        let g = z2();
        let ball = Ball::new(c(0.05, 0.0), 0.2).unwrap();
        let root = c(0.05f64.sqrt(), 0.0);
        let b = continue_branch(&g, &[0], ball, root, TrackParams::default()).unwrap();
        assert_eq!(b.status, BranchStatus::Collided);
        let at_cv = Ball::new(c(0.0, 0.0), 0.2).unwrap();
        assert!(matches!(
            continue_branch(&g, &[0], at_cv, c(0.0, 0.0), TrackParams::default()),
            Err(Error::CriticalCenter(_))
        ));
    }

    #[test]
    fn distortion_of_square_root() {
        let g = z2();
        let ball = Ball::new(c(1.0, 0.0), 0.3).unwrap();
        let b = continue_branch(&g, &[0], ball, c(1.0, 0.0), TrackParams::default()).unwrap();
        assert_eq!(distortion_ratio(&g, &b, 0.0), 1.0);
        let r = distortion_ratio(&g, &b, 0.5);
        // spherical derivative of √w is (1 + |w|²) / (2 |w|^{1/2} (1 + |w|))
        let sph = |w: Complex64| (1.0 + w.norm_sqr()) / (2.0 * w.norm().sqrt() * (1.0 + w.norm()));
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for m in 0..16 {
            for k in 0..=32 {
                let w = c(1.0, 0.0) + Complex64::cis(std::f64::consts::TAU * m as f64 / 16.0) * (0.3 * k as f64 / 64.0);
                lo = lo.min(sph(w));
                hi = hi.max(sph(w));
            }
        }
        assert!((r - hi / lo).abs() < 1e-9, "{r} vs {}", hi / lo);
        assert!(r < 2.0);
        let mut prev = 1.0;
        for t in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let r = distortion_ratio(&g, &b, t);
            assert!(r >= prev);
            prev = r;
        }
    }

    #[test]
    fn identity_family_level_zero() {
        let p = FamilyParams::new(c(1.0, 0.0), 0.1, 0.5, 1, 0);
        let rep = build_family(&z2(), &p).unwrap();
        assert_eq!(rep.levels.len(), 1);
        assert_eq!(rep.levels[0].survivors, 1);
        assert_eq!(rep.survivors[0].word, Vec::<usize>::new());
    }

    #[test]
    fn square_family_doubles() {
        let p = FamilyParams::new(c(1.0, 0.0), 0.1, 0.5, 1, 4);
        let rep = build_family(&z2(), &p).unwrap();
        for (n, l) in rep.levels.iter().enumerate() {
            assert_eq!(l.survivors, 1 << n);
            assert_eq!(l.pruned(), 0);
            assert!(l.max_residual < 1e-8);
        }
        let csv = rep.to_csv();
        assert_eq!(csv.lines().count(), 6);
    }

    #[test]
    fn tails() {
        assert_eq!(TailSource::Periodic(vec![0, 1]).symbols(2, 5).unwrap(), vec![0, 1, 0, 1, 0]);
        let a = TailSource::Random { seed: 4 }.symbols(3, 50).unwrap();
        assert_eq!(a, TailSource::Random { seed: 4 }.symbols(3, 50).unwrap());
        assert!(a.iter().all(|&j| j < 3));
        assert!(TailSource::Constant(2).symbols(2, 3).is_err());
    }
}
