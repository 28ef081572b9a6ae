//! Acceptance suite. Runs every criterion in sequence (so timings are not
//! shared with other work), prints one PASS/FAIL line each and exits
//! nonzero if any fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semithermo::branches::{build_family, FamilyParams};
use semithermo::csv::complex_cells;
use semithermo::measures::{
    build_grid, build_ulam, equilibrium_from, invariance_residual, jacobian_residual, leading_triple,
    leading_triple_from, total_variation, triple_csv, Grid, Triple, UlamOperator, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use semithermo::semigroup::{julia_backward_sample_seeded, BackwardSampling};
use semithermo::transfer::{iterate_indicator_mc, sweep_exact, DEFAULT_NODE_BUDGET};
use semithermo::{
    pressure_global, pressure_pointwise, Complex64, ExtComplex, GeneratorSet, JuliaCloud, Mode, Potential, RationalMap,
};

type Outcome = Result<String, String>;

fn square() -> GeneratorSet {
    GeneratorSet::new(vec![RationalMap::monomial(2).unwrap()]).unwrap()
}

fn two_monomials() -> GeneratorSet {
    GeneratorSet::new(vec![RationalMap::monomial(2).unwrap(), RationalMap::monomial(3).unwrap()]).unwrap()
}

fn basilica() -> GeneratorSet {
    GeneratorSet::new(vec![RationalMap::quadratic(Complex64::new(-1.0, 0.0))]).unwrap()
}

fn cloud(gens: &GeneratorSet, samples: usize, seed: u64) -> JuliaCloud {
    let params = BackwardSampling {
        samples,
        ..BackwardSampling::default()
    };
    julia_backward_sample_seeded(gens, params, seed).unwrap()
}

/// Evenly spaced picks from a cloud.
fn picks(cloud: &JuliaCloud, k: usize) -> Vec<ExtComplex> {
    (0..k).map(|i| cloud.points[i * cloud.len() / k]).collect()
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

fn within(limit: Duration, elapsed: Duration) -> Result<(), String> {
    if elapsed < limit {
        Ok(())
    } else {
        Err(format!("took {elapsed:.2?}, limit {limit:?}"))
    }
}

struct Config {
    name: &'static str,
    gens: GeneratorSet,
    psi: Potential,
}

fn spectral_configs() -> Vec<Config> {
    let mut out = Vec::new();
    for (name, gens) in [("<z^2>", square()), ("<z^2,z^3>", two_monomials()), ("<z^2-1>", basilica())] {
        for (pname, psi) in [("psi=0", Potential::zero()), ("geometric(0.5)", Potential::geometric(0.5))] {
            out.push(Config {
                name: Box::leak(format!("{name} {pname}").into_boxed_str()),
                gens: gens.clone(),
                psi,
            });
        }
    }
    out
}

/// Ulam data shared by the spectral criteria.
struct Spectral {
    config: Config,
    cloud: JuliaCloud,
    op: UlamOperator,
    triple: Triple,
}

fn spectral(config: Config) -> Result<Spectral, String> {
    let cloud = cloud(&config.gens, 50_000, 2024);
    let grid = build_grid(&cloud, 1024).map_err(|e| e.to_string())?;
    let op = build_ulam(&config.gens, &config.psi, &grid).map_err(|e| e.to_string())?;
    let triple = leading_triple(&op, DEFAULT_TOL, DEFAULT_MAX_ITER).map_err(|e| e.to_string())?;
    Ok(Spectral {
        config,
        cloud,
        op,
        triple,
    })
}

fn c1_pressure_exactness() -> Outcome {
    let mut notes = Vec::new();
    for (gens, want, label) in [(square(), 2f64.ln(), "log 2"), (two_monomials(), 5f64.ln(), "log 5")] {
        let z = ExtComplex::Finite(Complex64::from_polar(1.0, 1.0));
        let (est, t) = timed(|| pressure_pointwise(&gens, &Potential::zero(), z, 12, Mode::exact()));
        let est = est.map_err(|e| e.to_string())?;
        let err = (est.estimate - want).abs();
        if err >= 1e-9 {
            return Err(format!("{label}: error {err:e}"));
        }
        within(Duration::from_secs(1), t)?;
        notes.push(format!("{label} err {err:.1e} in {t:.2?}"));
    }
    Ok(notes.join("; "))
}

fn c2_point_independence() -> Outcome {
    let gens = basilica();
    let psi = Potential::geometric(0.5);
    let c = cloud(&gens, 10_000, 77);
    let points = picks(&c, 10);
    let (g, t) = timed(|| pressure_global(&gens, &psi, &points, 14, Mode::exact()));
    let g = g.map_err(|e| e.to_string())?;
    for a in &g.estimates {
        for b in &g.estimates {
            let tol = 0.05f64.max(3.0 * a.dispersion.max(b.dispersion));
            if (a.estimate - b.estimate).abs() > tol {
                return Err(format!("{} vs {} exceeds {tol}", a.estimate, b.estimate));
            }
        }
    }
    within(Duration::from_secs(120), t)?;
    Ok(format!("spread {:.2e}, max dispersion {:.2e}, {t:.2?}", g.spread, g.max_dispersion()))
}

fn c3_shift_covariance() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for gens in [two_monomials(), basilica()] {
        let psi = Potential::geometric(0.5);
        let z = cloud(&gens, 100, 5).points[50];
        let base = pressure_pointwise(&gens, &psi, z, 10, Mode::exact()).map_err(|e| e.to_string())?;
        for c in [-1.0, 0.3] {
            let s = pressure_pointwise(&gens, &psi.shifted(c), z, 10, Mode::exact()).map_err(|e| e.to_string())?;
            let err = (s.estimate - base.estimate - c).abs();
            worst = worst.max(err);
            if err >= 1e-9 {
                return Err(format!("shift {c}: error {err:e}"));
            }
        }
    }
    within(Duration::from_secs(60), start.elapsed())?;
    Ok(format!("max error {worst:.1e}, {:.2?}", start.elapsed()))
}

fn c4_two_estimators(data: &[Spectral], elapsed: Duration) -> Outcome {
    let start = Instant::now();
    let mut notes = Vec::new();
    for s in data {
        let points = picks(&s.cloud, 10);
        let g = pressure_global(&s.config.gens, &s.config.psi, &points, 12, Mode::exact()).map_err(|e| e.to_string())?;
        let diff = (s.triple.log_lambda() - g.max).abs();
        let tol = 0.02f64.max(3.0 * g.max_dispersion());
        if diff > tol {
            return Err(format!("{}: |{} − {}| = {diff:.3e} > {tol:.3e}", s.config.name, s.triple.log_lambda(), g.max));
        }
        notes.push(format!("{} {diff:.1e}", s.config.name));
    }
    let total = elapsed + start.elapsed();
    within(Duration::from_secs(300), total)?;
    Ok(format!("{} ({total:.2?})", notes.join(", ")))
}

fn c5_residuals(data: &[Spectral]) -> Outcome {
    let mut worst: f64 = 0.0;
    for s in data {
        let (rh, rm) = s.triple.residuals(&s.op);
        let t = &s.triple;
        let sm: f64 = t.m.iter().sum();
        let shm: f64 = t.h.iter().zip(&t.m).map(|(a, b)| a * b).sum();
        let min_h = t.h.iter().copied().fold(f64::INFINITY, f64::min);
        if !(rh < 1e-8 && rm < 1e-8 && min_h > 0.0 && (sm - 1.0).abs() < 1e-12 && (shm - 1.0).abs() < 1e-12) {
            return Err(format!(
                "{}: residuals {rh:e}, {rm:e}, min h {min_h:e}, Σm−1 {:e}, Σhm−1 {:e}",
                s.config.name,
                sm - 1.0,
                shm - 1.0
            ));
        }
        worst = worst.max(rh).max(rm);
    }
    Ok(format!("largest eigen-residual {worst:.1e}"))
}

/// Arclength measure of the unit circle binned on the grid.
fn arclength_on(grid: &Grid) -> Vec<f64> {
    let k = 1_000_000;
    let mut mass = vec![0.0; grid.len()];
    for i in 0..k {
        let z = Complex64::from_polar(1.0, std::f64::consts::TAU * (i as f64 + 0.5) / k as f64);
        if let Some(c) = grid.locate_finite(z) {
            mass[c] += 1.0 / k as f64;
        }
    }
    mass
}

fn c6_conformality() -> Outcome {
    let start = Instant::now();
    let gens = square();
    let psi = Potential::zero();
    let c = cloud(&gens, 50_000, 606);
    let grid = build_grid(&c, 1024).map_err(|e| e.to_string())?;
    let op = build_ulam(&gens, &psi, &grid).map_err(|e| e.to_string())?;
    let triple = leading_triple(&op, DEFAULT_TOL, DEFAULT_MAX_ITER).map_err(|e| e.to_string())?;
    let jac = jacobian_residual(&gens, &psi, &grid, &op, &triple, 4096).map_err(|e| e.to_string())?;
    let inv = invariance_residual(&gens, &grid, &op, &triple, 1_000_000, 606).map_err(|e| e.to_string())?;
    let mu = equilibrium_from(&triple.h, &triple.m);
    let tv = total_variation(&mu, &arclength_on(&grid));
    if !(jac.residual < 0.1 && inv < 0.1 && tv < 0.1) {
        return Err(format!("jacobian {:.3e}, invariance {inv:.3e}, TV to arclength {tv:.3e}", jac.residual));
    }
    within(Duration::from_secs(60), start.elapsed())?;
    Ok(format!(
        "jacobian {:.3e} ({} pairs), invariance {inv:.3e}, TV to arclength {tv:.3e}, {:.2?}",
        jac.residual,
        jac.pairs,
        start.elapsed()
    ))
}

fn c7_uniqueness(data: &[Spectral]) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for s in data {
        let n = s.op.len();
        let mus: Vec<Vec<f64>> = (0..5)
            .map(|_| {
                let h0: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
                let m0: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
                let t = leading_triple_from(&s.op, DEFAULT_TOL, DEFAULT_MAX_ITER, &h0, &m0).map_err(|e| e.to_string())?;
                Ok(equilibrium_from(&t.h, &t.m))
            })
            .collect::<Result<_, String>>()?;
        for a in &mus {
            for b in &mus {
                let tv = total_variation(a, b);
                worst = worst.max(tv);
                if tv > 1e-6 {
                    return Err(format!("{}: TV {tv:e}", s.config.name));
                }
            }
        }
    }
    Ok(format!("max pairwise TV {worst:.1e}"))
}

fn c8_julia_oracle() -> Outcome {
    let start = Instant::now();
    let mut notes = Vec::new();
    for (gens, label) in [(square(), "<z^2>"), (two_monomials(), "<z^2,z^3>")] {
        let c = cloud(&gens, 10_000, 8);
        let dev = c
            .points
            .iter()
            .map(|z| (z.finite().unwrap().norm() - 1.0).abs())
            .fold(0.0, f64::max);
        if !(c.len() == 10_000 && dev < 1e-6) {
            return Err(format!("{label}: max ||z| − 1| = {dev:e}"));
        }
        notes.push(format!("{label} {dev:.1e}"));
    }
    within(Duration::from_secs(10), start.elapsed())?;
    Ok(format!("{}, {:.2?}", notes.join(", "), start.elapsed()))
}

fn c9_distortion_decay() -> Outcome {
    let start = Instant::now();
    let gens = square();
    let p = FamilyParams::new(Complex64::new(1.0, 0.0), 0.1, 0.5, 1, 8);
    let rep = build_family(&gens, &p).map_err(|e| e.to_string())?;
    if rep.levels.len() != 9 {
        return Err(format!("family stopped at level {:?}", rep.truncated_at));
    }
    // least-squares slope of log max diameter over n = 1..=8
    let pts: Vec<(f64, f64)> = rep.levels[1..].iter().map(|l| (l.n as f64, l.max_diam.ln())).collect();
    let (mx, my) = (
        pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64,
        pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64,
    );
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    let bound = 0.5 * p.lambda.ln() + 0.1;
    if slope > bound {
        return Err(format!("slope {slope} > {bound}"));
    }
    let d = gens.max_critical_count();
    for l in &rep.levels {
        let cap = (d * p.q) as f64 + p.lambda.powi(-(l.n as i32));
        if l.pruned() as f64 > cap {
            return Err(format!("level {}: pruned {} > {cap}", l.n, l.pruned()));
        }
    }
    let first = rep.levels[1].distortion_t50;
    let worst = rep.levels.iter().map(|l| l.distortion_t50).fold(0.0, f64::max);
    if worst > 1.5 * first {
        return Err(format!("distortion {worst} > 1.5 × {first}"));
    }
    within(Duration::from_secs(60), start.elapsed())?;
    Ok(format!(
        "slope {slope:.3} (bound {bound:.3}), max distortion {worst:.4} vs n=1 {first:.4}, {:.2?}",
        start.elapsed()
    ))
}

fn c10_monte_carlo() -> Outcome {
    let start = Instant::now();
    let configs = spectral_configs();
    let clouds: Vec<JuliaCloud> = configs.iter().map(|c| cloud(&c.gens, 2000, 10)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst: f64 = 0.0;
    for case in 0..20 {
        let k = rng.random_range(0..configs.len());
        let c = &configs[k];
        let e = c.gens.degree_sum() as f64;
        let n_cap = (1e4f64.ln() / e.ln() + 1e-9).floor() as usize;
        let n = rng.random_range(1..=n_cap);
        let z = clouds[k].points[rng.random_range(0..clouds[k].len())];
        let exact = sweep_exact(&c.gens, &c.psi, z, n, DEFAULT_NODE_BUDGET)
            .map_err(|e| e.to_string())?
            .log_values[n]
            .exp();
        let (mean, se) = iterate_indicator_mc(&c.gens, &c.psi, z, n, 100_000, rng.random()).map_err(|e| e.to_string())?;
        // constant-weight cases have zero variance up to rounding
        let score = if se > 1e-12 * exact { (mean - exact).abs() / se } else { 0.0 };
        worst = worst.max(score);
        if (mean - exact).abs() > 4.0 * se + 1e-12 * exact {
            return Err(format!("case {case} ({}, n={n}): {mean} ± {se} vs {exact}", c.name));
        }
    }
    within(Duration::from_secs(120), start.elapsed())?;
    Ok(format!("worst |mean − exact|/se {worst:.2}, {:.2?}", start.elapsed()))
}

/// Every CSV writer, run on one config with one seed.
fn all_csvs(seed: u64) -> Result<Vec<String>, String> {
    let gens = two_monomials();
    let psi = Potential::geometric(0.5);
    let c = cloud(&gens, 5000, seed);
    let mut cloud_csv = String::from("index,re,im\n");
    for (i, z) in c.points.iter().enumerate() {
        cloud_csv += &format!("{i},{}\n", complex_cells(*z));
    }
    let mc = pressure_pointwise(&gens, &psi, c.points[0], 6, Mode::MonteCarlo { paths: 20_000, seed })
        .map_err(|e| e.to_string())?;
    let exact = pressure_pointwise(&gens, &psi, c.points[1], 8, Mode::exact()).map_err(|e| e.to_string())?;
    let grid = build_grid(&c, 256).map_err(|e| e.to_string())?;
    let op = build_ulam(&gens, &psi, &grid).map_err(|e| e.to_string())?;
    let triple = leading_triple(&op, DEFAULT_TOL, DEFAULT_MAX_ITER).map_err(|e| e.to_string())?;
    let mut family = FamilyParams::new(Complex64::new(0.0, 1.0), 0.1, 0.5, 1, 4);
    family.tail = semithermo::branches::TailSource::Random { seed };
    let rep = build_family(&gens, &family).map_err(|e| e.to_string())?;
    Ok(vec![cloud_csv, mc.to_csv(), exact.to_csv(), triple_csv(&grid, &op, &triple), rep.to_csv()])
}

fn c11_reproducibility() -> Outcome {
    let a = all_csvs(1234)?;
    let b = all_csvs(1234)?;
    for (i, (x, y)) in a.iter().zip(&b).enumerate() {
        if x.as_bytes() != y.as_bytes() {
            return Err(format!("CSV {i} differs between runs"));
        }
    }
    let bytes: usize = a.iter().map(|s| s.len()).sum();
    Ok(format!("{} CSVs, {bytes} bytes, identical", a.len()))
}

fn report(n: usize, name: &str, outcome: Outcome, failures: &mut usize) {
    match outcome {
        Ok(detail) => println!("PASS criterion {n:>2} ({name}): {detail}"),
        Err(detail) => {
            *failures += 1;
            println!("FAIL criterion {n:>2} ({name}): {detail}");
        }
    }
}

fn main() {
    let mut failures = 0;
    report(1, "pressure exactness", c1_pressure_exactness(), &mut failures);
    report(2, "point independence", c2_point_independence(), &mut failures);
    report(3, "shift covariance", c3_shift_covariance(), &mut failures);

    let (data, build_time) = timed(|| spectral_configs().into_iter().map(spectral).collect::<Result<Vec<_>, _>>());
    match data {
        Ok(data) => {
            report(4, "two-estimator agreement", c4_two_estimators(&data, build_time), &mut failures);
            report(5, "eigen-triple residuals", c5_residuals(&data), &mut failures);
            report(7, "uniqueness echo", c7_uniqueness(&data), &mut failures);
        }
        Err(e) => {
            for (n, name) in [(4, "two-estimator agreement"), (5, "eigen-triple residuals"), (7, "uniqueness echo")] {
                report(n, name, Err(e.clone()), &mut failures);
            }
        }
    }
    report(6, "conformality and invariance", c6_conformality(), &mut failures);
    report(8, "Julia-set oracle", c8_julia_oracle(), &mut failures);
    report(9, "distortion and decay", c9_distortion_decay(), &mut failures);
    report(10, "Monte-Carlo consistency", c10_monte_carlo(), &mut failures);
    report(11, "reproducibility", c11_reproducibility(), &mut failures);
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
