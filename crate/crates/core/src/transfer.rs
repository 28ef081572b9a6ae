//! The transfer operator `L_ψ g(z) = Σ_j Σ_{x ∈ f_j⁻¹(z)} e^{ψ_j(x)} g(x)`
//! and pressure estimates from the growth of `Lⁿ𝟙`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::csv;
use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::semigroup::GeneratorSet;
use crate::sphere::ExtComplex;

/// Default cap on the number of backward-tree nodes the exact mode visits.
pub const DEFAULT_NODE_BUDGET: u64 = 10_000_000;

/// Tree nodes whose sphere images agree to this many binary digits are
/// merged (about 6e-11 chordal).
const MERGE_BITS: i32 = 34;

/// Frontier slices handed to worker threads.
const CHUNK: usize = 4096;

/// One application of the operator to `g` at `z`.
pub fn apply_operator<F>(gens: &GeneratorSet, psi: &Potential, g: F, z: ExtComplex) -> Result<f64>
where
    F: Fn(ExtComplex) -> f64,
{
    let mut acc = 0.0;
    for (j, f) in gens.maps().iter().enumerate() {
        for x in f.preimages(z)? {
            acc += psi.evaluate(gens, j, x).exp() * g(x);
        }
    }
    Ok(acc)
}

#[derive(Clone, Copy, Debug)]
struct Node {
    key: u128,
    z: ExtComplex,
    w: f64,
}

// Three rounded sphere coordinates, each offset into 36 unsigned bits.
fn merge_key(z: ExtComplex) -> u128 {
    let s = 2f64.powi(MERGE_BITS);
    let off = 1i64 << (MERGE_BITS + 1);
    z.to_unit_sphere()
        .iter()
        .fold(0u128, |k, c| (k << 36) | ((c * s).round() as i64 + off) as u128)
}

/// `log Lᵏ𝟙(z)` for `k = 0..=n` from one backward-tree sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeSweep {
    pub log_values: Vec<f64>,
    /// tree nodes generated, summed over levels
    pub nodes: u64,
    /// nodes in the deepest level
    pub frontier: usize,
}

/// Enumerates the backward tree of `z` level by level. Each level keeps one
/// node per distinct point (the subtree below a point does not depend on
/// how it was reached), with weights summed and rescaled so that deep
/// trees neither overflow nor underflow. `budget` caps the number of nodes
/// generated.
pub fn sweep_exact(gens: &GeneratorSet, psi: &Potential, z: ExtComplex, n: usize, budget: u64) -> Result<TreeSweep> {
    let e = gens.degree_sum() as u64;
    let mut frontier = vec![Node {
        key: merge_key(z),
        z,
        w: 1.0,
    }];
    let mut log_scale = 0.0;
    let mut log_values = Vec::with_capacity(n + 1);
    log_values.push(0.0);
    let mut nodes = 0u64;
    for level in 1..=n {
        let next_nodes = nodes.saturating_add(frontier.len() as u64 * e);
        if next_nodes > budget {
            return Err(Error::BudgetExceeded {
                nodes: next_nodes,
                budget,
            });
        }
        nodes = next_nodes;
        if level == n {
            // the deepest level only contributes its total weight; chunk sums
            // are added in chunk order
            let total: f64 = frontier
                .par_chunks(CHUNK)
                .map(|chunk| {
                    let mut acc = 0.0;
                    for_each_child(gens, psi, chunk, false, |c| acc += c.w)?;
                    Ok(acc)
                })
                .collect::<Result<Vec<f64>>>()?
                .iter()
                .sum();
            if !(total > 0.0 && total.is_finite()) {
                return Err(Error::InvalidArgument("potential produced non-finite tree weights".into()));
            }
            log_values.push(log_scale + total.ln());
            return Ok(TreeSweep {
                log_values,
                nodes,
                frontier: frontier.len() * gens.degree_sum(),
            });
        }
        let parts = frontier
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut out = Vec::with_capacity(chunk.len() * gens.degree_sum());
                for_each_child(gens, psi, chunk, true, |c| out.push(c))?;
                Ok(out)
            })
            .collect::<Result<Vec<Vec<Node>>>>()?;
        let mut children = Vec::with_capacity(parts.iter().map(Vec::len).sum());
        for part in parts {
            children.extend(part);
        }
        // the children arrive in the same order for any thread count and the
        // sort is deterministic, so merged sums are reproducible
        children.sort_unstable_by_key(|c| c.key);
        frontier = Vec::with_capacity(children.len());
        for c in children {
            match frontier.last_mut() {
                Some(last) if last.key == c.key => last.w += c.w,
                _ => frontier.push(c),
            }
        }
        let top = frontier.iter().map(|c| c.w).fold(0.0, f64::max);
        if !(top > 0.0 && top.is_finite()) {
            return Err(Error::InvalidArgument("potential produced non-finite tree weights".into()));
        }
        for c in &mut frontier {
            c.w /= top;
        }
        log_scale += top.ln();
        let total: f64 = frontier.iter().map(|c| c.w).sum();
        log_values.push(log_scale + total.ln());
    }
    Ok(TreeSweep {
        log_values,
        nodes,
        frontier: frontier.len(),
    })
}

fn for_each_child<F: FnMut(Node)>(
    gens: &GeneratorSet,
    psi: &Potential,
    chunk: &[Node],
    keyed: bool,
    mut sink: F,
) -> Result<()> {
    for node in chunk {
        for (j, f) in gens.maps().iter().enumerate() {
            for x in f.preimages(node.z)? {
                sink(Node {
                    key: if keyed { merge_key(x) } else { 0 },
                    z: x,
                    w: node.w * psi.evaluate(gens, j, x).exp(),
                });
            }
        }
    }
    Ok(())
}

/// `Lⁿ𝟙(z)` from the backward tree, within the default node budget.
pub fn iterate_indicator_exact(gens: &GeneratorSet, psi: &Potential, z: ExtComplex, n: usize) -> Result<f64> {
    let sweep = sweep_exact(gens, psi, z, n, DEFAULT_NODE_BUDGET)?;
    Ok(sweep.log_values[n].exp())
}

/// Monte-Carlo estimates of `Lᵏ𝟙(z)` for `k = 1..=n`.
#[derive(Clone, Debug, PartialEq)]
pub struct McSweep {
    pub means: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub paths: usize,
}

/// Follows `paths` random backward paths. Each step picks one of the `Σe_j`
/// (generator, preimage) branches uniformly and multiplies the path weight
/// by `Σe_j · e^{ψ_j(x)}`, which makes the weight an unbiased estimator.
/// Path `k` draws from stream `k` of a ChaCha8 generator seeded by `seed`,
/// so results do not depend on the thread count.
pub fn sweep_mc(gens: &GeneratorSet, psi: &Potential, z: ExtComplex, n: usize, paths: usize, seed: u64) -> Result<McSweep> {
    if paths == 0 {
        return Err(Error::InvalidArgument("Monte Carlo needs at least one path".into()));
    }
    let e = gens.degree_sum();
    let weights: Vec<Vec<f64>> = (0..paths)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let mut x = z;
            let mut w = 1.0;
            let mut out = Vec::with_capacity(n);
            for _ in 0..n {
                let mut r = rng.random_range(0..e);
                let mut j = 0;
                while r >= gens.map(j).degree() {
                    r -= gens.map(j).degree();
                    j += 1;
                }
                x = gens.map(j).preimages(x)?[r];
                w *= e as f64 * psi.evaluate(gens, j, x).exp();
                out.push(w);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let k = paths as f64;
    let mut means = Vec::with_capacity(n);
    let mut stderrs = Vec::with_capacity(n);
    for level in 0..n {
        let mean = compensated_sum(weights.iter().map(|w| w[level])) / k;
        let stderr = if paths > 1 {
            let var = weights.iter().map(|w| (w[level] - mean).powi(2)).sum::<f64>() / (k - 1.0);
            (var / k).sqrt()
        } else {
            f64::INFINITY
        };
        means.push(mean);
        stderrs.push(stderr);
    }
    Ok(McSweep { means, stderrs, paths })
}

/// Neumaier summation.
fn compensated_sum(xs: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for x in xs {
        let t = s + x;
        c += if s.abs() >= x.abs() { (s - t) + x } else { (x - t) + s };
        s = t;
    }
    s + c
}

/// `(estimate, standard error)` of `Lⁿ𝟙(z)`; `n` must be at least 1.
pub fn iterate_indicator_mc(
    gens: &GeneratorSet,
    psi: &Potential,
    z: ExtComplex,
    n: usize,
    paths: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if n == 0 {
        return Ok((1.0, 0.0));
    }
    let s = sweep_mc(gens, psi, z, n, paths, seed)?;
    Ok((s.means[n - 1], s.stderrs[n - 1]))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Exact,
    MonteCarlo,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::MonteCarlo => "montecarlo",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Mode {
    Exact { budget: u64 },
    MonteCarlo { paths: usize, seed: u64 },
}

impl Mode {
    pub fn exact() -> Self {
        Mode::Exact {
            budget: DEFAULT_NODE_BUDGET,
        }
    }
}

/// Convergence record of `(1/n) log Lⁿ𝟙(z)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PressureEstimate {
    pub z: ExtComplex,
    /// `a_n = (1/n) log Lⁿ𝟙(z)` for `n = 1..=n_max`
    pub a: Vec<f64>,
    /// `b_n = log Lⁿ𝟙(z) − log Lⁿ⁻¹𝟙(z)` for `n = 1..=n_max`
    pub b: Vec<f64>,
    /// mean of the last `⌈n_max/3⌉` increments
    pub estimate: f64,
    /// standard deviation of those increments
    pub dispersion: f64,
    pub method: Method,
    /// tree nodes (exact) or paths (Monte Carlo)
    pub samples: u64,
}

impl PressureEstimate {
    fn from_logs(z: ExtComplex, logs: &[f64], method: Method, samples: u64) -> Self {
        let n_max = logs.len() - 1;
        let a: Vec<f64> = (1..=n_max).map(|n| logs[n] / n as f64).collect();
        let b: Vec<f64> = logs.windows(2).map(|w| w[1] - w[0]).collect();
        let tail = &b[n_max - n_max.div_ceil(3)..];
        let estimate = tail.iter().sum::<f64>() / tail.len() as f64;
        let dispersion = (tail.iter().map(|x| (x - estimate).powi(2)).sum::<f64>() / tail.len() as f64).sqrt();
        PressureEstimate {
            z,
            a,
            b,
            estimate,
            dispersion,
            method,
            samples,
        }
    }

    pub fn n_max(&self) -> usize {
        self.a.len()
    }

    /// Columns `n,a_n,b_n`; a closing `final` row holds the estimate and
    /// dispersion.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,a_n,b_n\n");
        for (i, (a, b)) in self.a.iter().zip(&self.b).enumerate() {
            s += &format!("{},{},{}\n", i + 1, csv::real(*a), csv::real(*b));
        }
        s += &format!("final,{},{}\n", csv::real(self.estimate), csv::real(self.dispersion));
        s
    }
}

/// Pointwise pressure at `z` from increments of `log Lⁿ𝟙(z)`.
pub fn pressure_pointwise(
    gens: &GeneratorSet,
    psi: &Potential,
    z: ExtComplex,
    n_max: usize,
    mode: Mode,
) -> Result<PressureEstimate> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be at least 1".into()));
    }
    match mode {
        Mode::Exact { budget } => {
            let s = sweep_exact(gens, psi, z, n_max, budget)?;
            Ok(PressureEstimate::from_logs(z, &s.log_values, Method::Exact, s.nodes))
        }
        Mode::MonteCarlo { paths, seed } => {
            let s = sweep_mc(gens, psi, z, n_max, paths, seed)?;
            let logs: Vec<f64> = std::iter::once(0.0).chain(s.means.iter().map(|m| m.ln())).collect();
            Ok(PressureEstimate::from_logs(z, &logs, Method::MonteCarlo, paths as u64))
        }
    }
}

/// Pointwise estimates over several base points.
#[derive(Clone, Debug, PartialEq)]
pub struct GlobalPressure {
    pub estimates: Vec<PressureEstimate>,
    /// largest pointwise estimate
    pub max: f64,
    pub min: f64,
    pub spread: f64,
}

impl GlobalPressure {
    pub fn max_dispersion(&self) -> f64 {
        self.estimates.iter().map(|e| e.dispersion).fold(0.0, f64::max)
    }
}

/// `max` of pointwise pressures over `points`. Monte-Carlo runs use a
/// distinct seed per point.
pub fn pressure_global(
    gens: &GeneratorSet,
    psi: &Potential,
    points: &[ExtComplex],
    n_max: usize,
    mode: Mode,
) -> Result<GlobalPressure> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("need at least one base point".into()));
    }
    let estimates = points
        .iter()
        .enumerate()
        .map(|(i, &z)| {
            let mode = match mode {
                Mode::MonteCarlo { paths, seed } => Mode::MonteCarlo {
                    paths,
                    seed: seed.wrapping_add((i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
                },
                m => m,
            };
            pressure_pointwise(gens, psi, z, n_max, mode)
        })
        .collect::<Result<Vec<_>>>()?;
    let max = estimates.iter().map(|e| e.estimate).fold(f64::NEG_INFINITY, f64::max);
    let min = estimates.iter().map(|e| e.estimate).fold(f64::INFINITY, f64::min);
    Ok(GlobalPressure {
        estimates,
        max,
        min,
        spread: max - min,
    })
}

/// `m` points spread evenly through `points` (all of them when `m` is
/// larger).
pub fn spread_sample(points: &[ExtComplex], m: usize) -> Vec<ExtComplex> {
    if m >= points.len() {
        return points.to_vec();
    }
    (0..m).map(|i| points[i * points.len() / m]).collect()
}
