//! Ulam discretization of the transfer operator on a grid covering the
//! Julia cloud, its leading eigen-triple `(λ, h, m)`, and the equilibrium
//! masses `μ = h·m`.

use std::collections::BTreeSet;

use num_complex::Complex64;
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::csv;
use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::semigroup::{GeneratorSet, JuliaCloud};
use crate::sphere::ExtComplex;

/// Cloud points per cell used to assemble a matrix row.
pub const DEFAULT_SAMPLES_PER_CELL: usize = 128;
/// Largest tolerated fraction of preimage weight lost outside the grid.
pub const MAX_LEAK: f64 = 0.2;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 100_000;

const NO_CELL: u32 = u32::MAX;

/// A retained grid cell and the cloud points inside it.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub ix: usize,
    pub iy: usize,
    pub center: Complex64,
    pub points: Vec<Complex64>,
}

/// Square cells `[x, x+δ) × [y, y+δ)` over a square box around the cloud;
/// only cells that contain cloud points are kept, in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    origin: Complex64,
    side: f64,
    n_side: usize,
    cells: Vec<Cell>,
    lookup: Vec<u32>,
}

impl Grid {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn center(&self, i: usize) -> Complex64 {
        self.cells[i].center
    }

    /// Cell side `δ`.
    pub fn cell_side(&self) -> f64 {
        self.side
    }

    pub fn cell_diagonal(&self) -> f64 {
        self.side * std::f64::consts::SQRT_2
    }

    /// Cells per side of the full (unclipped) box.
    pub fn n_side(&self) -> usize {
        self.n_side
    }

    fn slot(&self, z: Complex64) -> Option<(usize, usize)> {
        let fx = ((z.re - self.origin.re) / self.side).floor();
        let fy = ((z.im - self.origin.im) / self.side).floor();
        let n = self.n_side as f64;
        (fx >= 0.0 && fx < n && fy >= 0.0 && fy < n).then_some((fx as usize, fy as usize))
    }

    /// Index of the retained cell containing `z`.
    pub fn locate(&self, z: ExtComplex) -> Option<usize> {
        self.locate_finite(z.finite()?)
    }

    pub fn locate_finite(&self, z: Complex64) -> Option<usize> {
        let (ix, iy) = self.slot(z)?;
        let id = self.lookup[iy * self.n_side + ix];
        (id != NO_CELL).then_some(id as usize)
    }

    /// Retained cells in the 3×3 block around cell `i`.
    pub fn neighbourhood(&self, i: usize) -> Vec<usize> {
        let c = &self.cells[i];
        let mut out = Vec::with_capacity(9);
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                let (x, y) = (c.ix as i64 + dx, c.iy as i64 + dy);
                if x < 0 || y < 0 || x >= self.n_side as i64 || y >= self.n_side as i64 {
                    continue;
                }
                let id = self.lookup[y as usize * self.n_side + x as usize];
                if id != NO_CELL {
                    out.push(id as usize);
                }
            }
        }
        out
    }

    /// Up to `s` points of cell `i`, evenly strided through its point list.
    pub fn samples(&self, i: usize, s: usize) -> Vec<Complex64> {
        strided(&self.cells[i].points, s)
    }
}

fn strided(points: &[Complex64], s: usize) -> Vec<Complex64> {
    if points.len() <= s {
        return points.to_vec();
    }
    (0..s).map(|t| points[t * points.len() / s]).collect()
}

/// Covers the finite points of `cloud` (modulus at most the infinity
/// threshold) with a `⌈√n⌉`-per-side square grid and keeps the occupied
/// cells.
pub fn build_grid(cloud: &JuliaCloud, n: usize) -> Result<Grid> {
    if n < 1 {
        return Err(Error::InvalidArgument("grid needs at least one cell".into()));
    }
    let (x0, x1, y0, y1) = cloud
        .bounds()
        .ok_or_else(|| Error::InvalidArgument("cloud has no finite points".into()))?;
    let n_side = ((n as f64).sqrt().round() as usize).max(1);
    let extent = (x1 - x0).max(y1 - y0);
    let box_side = if extent > 0.0 { extent * (1.0 + 1e-9) } else { 1.0 };
    let side = box_side / n_side as f64;
    let mid = Complex64::new(0.5 * (x0 + x1), 0.5 * (y0 + y1));
    let origin = mid - Complex64::new(0.5 * box_side, 0.5 * box_side);

    let mut grid = Grid {
        origin,
        side,
        n_side,
        cells: Vec::new(),
        lookup: vec![NO_CELL; n_side * n_side],
    };
    let mut buckets: Vec<Vec<Complex64>> = vec![Vec::new(); n_side * n_side];
    for p in &cloud.points {
        if p.is_effectively_infinite() {
            continue;
        }
        let z = p.finite().expect("finite");
        if let Some((ix, iy)) = grid.slot(z) {
            buckets[iy * n_side + ix].push(z);
        }
    }
    for (slot, points) in buckets.into_iter().enumerate() {
        if points.is_empty() {
            continue;
        }
        let (ix, iy) = (slot % n_side, slot / n_side);
        grid.lookup[slot] = grid.cells.len() as u32;
        grid.cells.push(Cell {
            ix,
            iy,
            center: origin + Complex64::new((ix as f64 + 0.5) * side, (iy as f64 + 0.5) * side),
            points,
        });
    }
    Ok(grid)
}

/// Sparse nonnegative matrix `M[i][k]`: the average over sample points `y`
/// of cell `i` of `Σ_j Σ_{x ∈ f_j⁻¹(y), x ∈ cell k} e^{ψ_j(x)}`. Entries are
/// kept split by generator as well as summed.
#[derive(Clone, Debug, PartialEq)]
pub struct UlamOperator {
    n: usize,
    generators: usize,
    // split by generator: (col, gen, weight), sorted by (col, gen)
    split_ptr: Vec<usize>,
    split: Vec<(u32, u32, f64)>,
    // summed over generators, row-major and column-major
    row_ptr: Vec<usize>,
    row_entries: Vec<(u32, f64)>,
    col_ptr: Vec<usize>,
    col_entries: Vec<(u32, f64)>,
    row_totals: Vec<f64>,
    row_leaks: Vec<f64>,
    leak: f64,
}

impl UlamOperator {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn generators(&self) -> usize {
        self.generators
    }

    /// Fraction of the total preimage weight that fell outside the grid.
    pub fn leak(&self) -> f64 {
        self.leak
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).iter().map(|e| e.1).sum()).collect()
    }

    /// Per-row preimage weight before leakage; equals row sum + row leak.
    pub fn row_totals(&self) -> &[f64] {
        &self.row_totals
    }

    pub fn row_leaks(&self) -> &[f64] {
        &self.row_leaks
    }

    pub fn row(&self, i: usize) -> &[(u32, f64)] {
        &self.row_entries[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.row(i)
            .binary_search_by_key(&(k as u32), |e| e.0)
            .map(|p| self.row(i)[p].1)
            .unwrap_or(0.0)
    }

    /// `(col, generator, weight)` entries of row `i`.
    pub fn split_row(&self, i: usize) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.split[self.split_ptr[i]..self.split_ptr[i + 1]]
            .iter()
            .map(|&(k, j, w)| (k as usize, j as usize, w))
    }

    /// `(i, k, M[i][k])` for every stored entry.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| self.row(i).iter().map(move |&(k, w)| (i, k as usize, w)))
    }

    pub fn nnz(&self) -> usize {
        self.row_entries.len()
    }

    /// `M h`.
    pub fn apply(&self, h: &[f64]) -> Vec<f64> {
        (0..self.n)
            .into_par_iter()
            .map(|i| self.row(i).iter().map(|&(k, w)| w * h[k as usize]).sum())
            .collect()
    }

    /// `m M`.
    pub fn apply_left(&self, m: &[f64]) -> Vec<f64> {
        (0..self.n)
            .into_par_iter()
            .map(|k| {
                self.col_entries[self.col_ptr[k]..self.col_ptr[k + 1]]
                    .iter()
                    .map(|&(i, w)| w * m[i as usize])
                    .sum()
            })
            .collect()
    }

    /// Number of strongly connected blocks that carry a cycle.
    pub fn recurrent_blocks(&self) -> usize {
        let mut g = DiGraph::<(), ()>::with_capacity(self.n, self.nnz());
        let nodes: Vec<_> = (0..self.n).map(|_| g.add_node(())).collect();
        for (i, k, w) in self.entries() {
            if w > 0.0 {
                g.add_edge(nodes[i], nodes[k], ());
            }
        }
        tarjan_scc(&g)
            .iter()
            .filter(|c| c.len() > 1 || g.contains_edge(c[0], c[0]))
            .count()
    }
}

/// [`build_ulam_with`] at [`DEFAULT_SAMPLES_PER_CELL`].
pub fn build_ulam(gens: &GeneratorSet, psi: &Potential, grid: &Grid) -> Result<UlamOperator> {
    build_ulam_with(gens, psi, grid, DEFAULT_SAMPLES_PER_CELL)
}

/// Assembles the Ulam matrix from up to `samples` cloud points per cell.
/// Preimage weight landing outside the retained cells is dropped and
/// reported as leak; more than [`MAX_LEAK`] of the total is an error.
pub fn build_ulam_with(gens: &GeneratorSet, psi: &Potential, grid: &Grid, samples: usize) -> Result<UlamOperator> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("grid has no cells".into()));
    }
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample per cell".into()));
    }
    psi.validate(gens)?;
    type Row = (Vec<(u32, u32, f64)>, f64, f64);
    let rows: Vec<Row> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let ys = grid.samples(i, samples);
            let inv = 1.0 / ys.len() as f64;
            let mut raw = Vec::new();
            let mut total = 0.0;
            let mut leak = 0.0;
            for y in ys {
                for (j, f) in gens.maps().iter().enumerate() {
                    for x in f.preimages(ExtComplex::Finite(y))? {
                        let w = psi.evaluate(gens, j, x).exp() * inv;
                        total += w;
                        match grid.locate(x) {
                            Some(k) => raw.push((k as u32, j as u32, w)),
                            None => leak += w,
                        }
                    }
                }
            }
            raw.sort_by_key(|e| (e.0, e.1));
            let mut merged: Vec<(u32, u32, f64)> = Vec::with_capacity(raw.len());
            for e in raw {
                match merged.last_mut() {
                    Some(last) if (last.0, last.1) == (e.0, e.1) => last.2 += e.2,
                    _ => merged.push(e),
                }
            }
            Ok((merged, total, leak))
        })
        .collect::<Result<_>>()?;

    let n = grid.len();
    let mut op = UlamOperator {
        n,
        generators: gens.len(),
        split_ptr: vec![0],
        split: Vec::new(),
        row_ptr: vec![0],
        row_entries: Vec::new(),
        col_ptr: Vec::new(),
        col_entries: Vec::new(),
        row_totals: Vec::with_capacity(n),
        row_leaks: Vec::with_capacity(n),
        leak: 0.0,
    };
    let (mut total, mut lost) = (0.0, 0.0);
    for (split, t, l) in rows {
        let start = op.row_entries.len();
        for &(k, _, w) in &split {
            match op.row_entries[start..].last_mut() {
                Some(last) if last.0 == k => last.1 += w,
                _ => op.row_entries.push((k, w)),
            }
        }
        op.row_ptr.push(op.row_entries.len());
        op.split.extend(split);
        op.split_ptr.push(op.split.len());
        op.row_totals.push(t);
        op.row_leaks.push(l);
        total += t;
        lost += l;
    }
    op.leak = if total > 0.0 { lost / total } else { 1.0 };
    if op.leak > MAX_LEAK {
        return Err(Error::ExcessiveLeak {
            leak: op.leak,
            max: MAX_LEAK,
        });
    }
    let mut counts = vec![0usize; n + 1];
    for &(k, _) in &op.row_entries {
        counts[k as usize + 1] += 1;
    }
    for k in 0..n {
        counts[k + 1] += counts[k];
    }
    let mut fill = counts.clone();
    let mut col_entries = vec![(0u32, 0.0); op.row_entries.len()];
    for i in 0..n {
        for &(k, w) in op.row(i) {
            col_entries[fill[k as usize]] = (i as u32, w);
            fill[k as usize] += 1;
        }
    }
    op.col_ptr = counts;
    op.col_entries = col_entries;
    Ok(op)
}

/// Leading eigenvalue with right (`h`) and left (`m`) eigenvectors,
/// normalized so that `Σm = 1` and `Σ m·h = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Triple {
    pub lambda: f64,
    pub h: Vec<f64>,
    pub m: Vec<f64>,
    pub iterations: usize,
}

impl Triple {
    pub fn log_lambda(&self) -> f64 {
        self.lambda.ln()
    }

    /// `(‖Mh − λh‖₁/‖h‖₁, ‖mM − λm‖₁/‖m‖₁)`.
    pub fn residuals(&self, op: &UlamOperator) -> (f64, f64) {
        (
            relative_residual(&op.apply(&self.h), &self.h, self.lambda),
            relative_residual(&op.apply_left(&self.m), &self.m, self.lambda),
        )
    }
}

fn relative_residual(mv: &[f64], v: &[f64], lambda: f64) -> f64 {
    let num: f64 = mv.iter().zip(v).map(|(a, b)| (a - lambda * b).abs()).sum();
    num / v.iter().map(|x| x.abs()).sum::<f64>()
}

/// Power iteration from uniform starting vectors.
pub fn leading_triple(op: &UlamOperator, tol: f64, max_iter: usize) -> Result<Triple> {
    let u = vec![1.0; op.len()];
    leading_triple_from(op, tol, max_iter, &u, &u)
}

/// Power iteration on `M` and `Mᵀ` from positive starting vectors. Stops
/// once successive eigenvalue estimates agree to `tol` (relative above 1)
/// and both eigen-residuals are below `tol`. The matrix must have a single
/// recurrent block.
pub fn leading_triple_from(op: &UlamOperator, tol: f64, max_iter: usize, h0: &[f64], m0: &[f64]) -> Result<Triple> {
    let n = op.len();
    if h0.len() != n || m0.len() != n {
        return Err(Error::InvalidArgument("start vectors must have one entry per cell".into()));
    }
    if h0.iter().chain(m0).any(|&x| x.is_nan() || x <= 0.0) {
        return Err(Error::InvalidArgument("start vectors must be positive".into()));
    }
    let blocks = op.recurrent_blocks();
    if blocks != 1 {
        return Err(Error::Reducible(blocks));
    }
    let normalize = |v: Vec<f64>| -> (Vec<f64>, f64) {
        let s: f64 = v.iter().sum();
        (v.into_iter().map(|x| x / s).collect(), s)
    };
    let (mut h, _) = normalize(h0.to_vec());
    let (mut m, _) = normalize(m0.to_vec());
    let (mut lam_h, mut lam_m) = (f64::NAN, f64::NAN);
    let mut change = f64::INFINITY;
    for it in 1..=max_iter {
        let (h2, lh) = normalize(op.apply(&h));
        let (m2, lm) = normalize(op.apply_left(&m));
        if !(lh > 0.0 && lm > 0.0) {
            return Err(Error::NoConvergence {
                iterations: it,
                change: f64::NAN,
            });
        }
        change = (lh - lam_h).abs().max((lm - lam_m).abs());
        h = h2;
        m = m2;
        lam_h = lh;
        lam_m = lm;
        if change < tol * lm.max(1.0) {
            let (rh, rm) = (
                relative_residual(&op.apply(&h), &h, lm),
                relative_residual(&op.apply_left(&m), &m, lm),
            );
            if rh < tol && rm < tol {
                let mh: f64 = m.iter().zip(&h).map(|(a, b)| a * b).sum();
                let h = h.into_iter().map(|x| x / mh).collect();
                return Ok(Triple {
                    lambda: lm,
                    h,
                    m,
                    iterations: it,
                });
            }
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        change,
    })
}

/// Cell masses `μ_i = h_i m_i`.
pub fn equilibrium_from(h: &[f64], m: &[f64]) -> Vec<f64> {
    h.iter().zip(m).map(|(a, b)| a * b).collect()
}

/// `Σ|a_i − b_i|`, between 0 and 2 for probability vectors.
pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Result of the conformality check on injective (cell, generator) pairs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JacobianReport {
    /// `Σ|m(f_j(A)) − predicted| / Σ predicted`
    pub residual: f64,
    pub pairs: usize,
}

/// Cloud points per cell used to estimate `m(f_j(A))`.
const IMAGE_POINTS: usize = 512;

// Strided from the end of the list, so that large cells contribute points
// the matrix assembly did not see.
fn image_points(cell: &Cell) -> Vec<Complex64> {
    let mut rev = cell.points.clone();
    rev.reverse();
    let mut pts = strided(&rev, IMAGE_POINTS);
    if cell.points.len() > 2 * DEFAULT_SAMPLES_PER_CELL {
        let used = strided(&cell.points, DEFAULT_SAMPLES_PER_CELL);
        pts.retain(|p| !used.contains(p));
    }
    pts
}

/// Compares `m(f_j(A))` with the conformal prediction on cells `A` where
/// `f_j` is numerically injective (no critical point of `f_j` within two
/// cell diagonals). The prediction is `λ e^{-ψ_j(center A)} m(A)` for one
/// generator and `e^{-ψ_j(center A)} Σ_i m_i M_j[i][A]` in general. The
/// measure of `f_j(A)` is estimated from cloud points of nearby cells,
/// avoiding the points that went into the matrix where cells are large
/// enough. At most `pairs` pairs are used, evenly spread over the grid.
pub fn jacobian_residual(
    gens: &GeneratorSet,
    psi: &Potential,
    grid: &Grid,
    op: &UlamOperator,
    triple: &Triple,
    pairs: usize,
) -> Result<JacobianReport> {
    if grid.len() < 2 || pairs == 0 {
        return Err(Error::NoInjectiveSamples);
    }
    let crit: Vec<Vec<Complex64>> = gens
        .maps()
        .iter()
        .map(|f| Ok(f.critical_points()?.into_iter().filter_map(|c| c.finite()).collect()))
        .collect::<Result<_>>()?;
    let reach = 2.0 * grid.cell_diagonal();
    let mut candidates = Vec::new();
    for a in 0..grid.len() {
        for (j, cj) in crit.iter().enumerate() {
            if cj.iter().all(|c| (c - grid.center(a)).norm() > reach) {
                candidates.push((a, j));
            }
        }
    }
    if candidates.is_empty() {
        return Err(Error::NoInjectiveSamples);
    }
    let chosen: Vec<(usize, usize)> = if candidates.len() <= pairs {
        candidates
    } else {
        (0..pairs).map(|t| candidates[t * candidates.len() / pairs]).collect()
    };

    // Σ_i m_i M_j[i][A] for all (j, A)
    let mut inflow = vec![0.0; gens.len() * grid.len()];
    for i in 0..op.len() {
        for (k, j, w) in op.split_row(i) {
            inflow[j * grid.len() + k] += triple.m[i] * w;
        }
    }

    let terms: Vec<(f64, f64)> = chosen
        .par_iter()
        .map(|&(a, j)| {
            let f = gens.map(j);
            let mut near = BTreeSet::new();
            for z in image_points(&grid.cells()[a]) {
                if let Some(k) = grid.locate(f.evaluate_finite(z)) {
                    near.extend(grid.neighbourhood(k));
                }
            }
            let mut image_mass = 0.0;
            for k in near {
                let ys = image_points(&grid.cells()[k]);
                let mut hits = 0usize;
                for &y in &ys {
                    if f.preimages(ExtComplex::Finite(y))?.iter().any(|&x| grid.locate(x) == Some(a)) {
                        hits += 1;
                    }
                }
                image_mass += triple.m[k] * hits as f64 / ys.len() as f64;
            }
            let damp = (-psi.evaluate(gens, j, ExtComplex::Finite(grid.center(a)))).exp();
            let predicted = if gens.len() == 1 {
                triple.lambda * damp * triple.m[a]
            } else {
                damp * inflow[j * grid.len() + a]
            };
            Ok(((image_mass - predicted).abs(), predicted))
        })
        .collect::<Result<_>>()?;
    let (num, den) = terms.iter().fold((0.0, 0.0), |acc, t| (acc.0 + t.0, acc.1 + t.1));
    Ok(JacobianReport {
        residual: if den > 0.0 { num / den } else { f64::INFINITY },
        pairs: terms.len(),
    })
}

/// Pushes `μ` forward one skew step by Monte Carlo and returns the
/// distance `Σ|ν_i − μ_i|` (mass leaving the grid counts in full). Each of
/// `quanta` samples picks a cell from `μ`, a cloud point in it, and a
/// generator `j` with probability `Σ_i m_i M_j[i][k] / Σ_i m_i M[i][k]`.
pub fn invariance_residual(
    gens: &GeneratorSet,
    grid: &Grid,
    op: &UlamOperator,
    triple: &Triple,
    quanta: usize,
    seed: u64,
) -> Result<f64> {
    if quanta == 0 {
        return Err(Error::InvalidArgument("need at least one mass quantum".into()));
    }
    let n = grid.len();
    let s = gens.len();
    let mu = equilibrium_from(&triple.h, &triple.m);
    let mut inflow = vec![0.0; s * n];
    for i in 0..op.len() {
        for (k, j, w) in op.split_row(i) {
            inflow[k * s + j] += triple.m[i] * w;
        }
    }
    let total: f64 = mu.iter().sum();
    let cdf: Vec<f64> = mu
        .iter()
        .scan(0.0, |acc, &x| {
            *acc += x / total;
            Some(*acc)
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = vec![0usize; n];
    let mut lost = 0usize;
    for _ in 0..quanta {
        let u: f64 = rng.random();
        let k = cdf.partition_point(|&c| c < u).min(n - 1);
        let pts = &grid.cells()[k].points;
        let z = pts[rng.random_range(0..pts.len())];
        let row = &inflow[k * s..(k + 1) * s];
        let sum: f64 = row.iter().sum();
        let j = if s == 1 || sum.is_nan() || sum <= 0.0 {
            rng.random_range(0..s)
        } else {
            let mut t = rng.random::<f64>() * sum;
            let mut j = 0;
            while j + 1 < s && t >= row[j] {
                t -= row[j];
                j += 1;
            }
            j
        };
        match grid.locate(gens.map(j).evaluate_finite(z)) {
            Some(i) => hits[i] += 1,
            None => lost += 1,
        }
    }
    let nu: Vec<f64> = hits.iter().map(|&c| c as f64 / quanta as f64).collect();
    Ok(total_variation(&nu, &mu) + lost as f64 / quanta as f64)
}

/// Header `lambda=…,leak=…`, then `cell_index,center_re,center_im,m,h,mu`.
pub fn triple_csv(grid: &Grid, op: &UlamOperator, triple: &Triple) -> String {
    let mut s = format!("lambda={},leak={}\n", csv::real(triple.lambda), csv::real(op.leak()));
    s += "cell_index,center_re,center_im,m,h,mu\n";
    for i in 0..grid.len() {
        let c = grid.center(i);
        s += &format!(
            "{},{},{},{},{},{}\n",
            i,
            csv::real(c.re),
            csv::real(c.im),
            csv::real(triple.m[i]),
            csv::real(triple.h[i]),
            csv::real(triple.h[i] * triple.m[i])
        );
    }
    s
}
