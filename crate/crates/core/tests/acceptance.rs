//! Acceptance suite: one line per criterion, non-zero exit on any failure.

#![allow(clippy::needless_range_loop)]

use std::f64::consts::{FRAC_PI_4, PI};
use std::time::{Duration, Instant};

use nckant::connes::{spectral_distance, spectral_distance_oracle, SolverOptions, SpectralDistanceSolver, StateDistance};
use nckant::linalg::{Complex, ComplexMatrix, HermitianMatrix};
use nckant::models::{
    bloch_to_density, fibonacci_sphere, latitude_rings, m2_diagonal_distance, m2_diagonal_triple, m2_moyal_algebra,
    m2_triple, moyal_ball_cost, two_point_triple, two_sheet_cost, BlochPoint, M2DiagonalModel, MoyalCostParams,
    MoyalModel, SphereMeasure, TwoPointModel, state_from_measure,
};
use nckant::transport::{
    kantorovich_dual, make_cost_space, point_index, triangle_violation, wasserstein_primal, FiniteCostSpace,
    ProbabilityVector, SpaceSpec,
};
use nckant::triple::{commutator_norm, AlgebraElement, DensityState, FiniteSpectralTriple};
use nckant::wd::{lambda_rescale, prop2_check, pure_sample_costs, sample_evaluations, wd_distance, PureStateSample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn bp(x: f64, y: f64, z: f64) -> BlochPoint {
    BlochPoint::new(x, y, z).unwrap()
}

fn density(p: &BlochPoint) -> DensityState {
    bloch_to_density(p).unwrap()
}

fn densities(pts: &[BlochPoint]) -> Vec<DensityState> {
    pts.iter().map(density).collect()
}

/// Uniform point of the closed unit ball.
fn ball_point(r: &mut ChaCha8Rng) -> BlochPoint {
    loop {
        let v: [f64; 3] = [r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)];
        if v.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
            return bp(v[0], v[1], v[2]);
        }
    }
}

fn sphere_point(r: &mut ChaCha8Rng) -> BlochPoint {
    let z: f64 = r.random_range(-1.0..1.0);
    let phi: f64 = r.random_range(0.0..2.0 * PI);
    let s = (1.0 - z * z).sqrt();
    bp(s * phi.cos(), s * phi.sin(), z)
}

/// Point at height `z` with horizontal radius `rho` and azimuth `phi`.
fn at_height(z: f64, rho: f64, phi: f64) -> BlochPoint {
    bp(rho * phi.cos(), rho * phi.sin(), z)
}

fn random_equal_z_pair(r: &mut ChaCha8Rng) -> (BlochPoint, BlochPoint) {
    let z: f64 = r.random_range(-0.95..0.95);
    let rmax = (1.0 - z * z).sqrt();
    let a = at_height(z, rmax * r.random_range(0.0..1.0f64).sqrt(), r.random_range(0.0..2.0 * PI));
    let b = at_height(z, rmax * r.random_range(0.0..1.0f64).sqrt(), r.random_range(0.0..2.0 * PI));
    (a, b)
}

fn rotate_y(p: &BlochPoint, angle: f64) -> BlochPoint {
    let (c, s) = (angle.cos(), angle.sin());
    let [x, y, z] = p.coords();
    let (nx, nz) = (c * x + s * z, -s * x + c * z);
    let n = (nx * nx + y * y + nz * nz).sqrt().max(1.0);
    bp(nx / n, y / n, nz / n)
}

fn moyal() -> MoyalModel {
    MoyalModel { params: MoyalCostParams::new(2.0).unwrap() }
}

// 1
fn two_point_model() -> Outcome {
    let (d1, d2) = (DensityState::basis_projector(2, 0).unwrap(), DensityState::basis_projector(2, 1).unwrap());
    let mut worst: f64 = 0.0;
    for m in [Complex::new(0.5, 0.0), Complex::new(1.0, 0.0), Complex::new(2.0, 0.0), Complex::new(1.0, 1.0)] {
        let expected = 1.0 / m.norm();
        let t = two_point_triple(m, false);
        let r = spectral_distance(&t, &d1, &d2, &SolverOptions::default()).map_err(|e| e.to_string())?;
        let rel = (r.value - expected).abs() / expected;
        worst = worst.max(rel);
        ensure(r.finite && rel <= 1e-4, || format!("m={m}: solver {} vs {expected}", r.value))?;
        let a = TwoPointModel { m }.distance(&d1, &d2).unwrap();
        ensure(a.value == expected, || format!("m={m}: analytic {} vs {expected}", a.value))?;
    }
    Ok(format!("max relative error {worst:.1e}"))
}

// 2
fn diagonal_dirac() -> Outcome {
    let (d1, d2) = (1.0, 3.0);
    let t = m2_diagonal_triple(d1, d2).unwrap();
    let solver = SpectralDistanceSolver::new(&t, SolverOptions::default()).unwrap();
    let mut r = rng(2);
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let (p, q) = random_equal_z_pair(&mut r);
        let expected = m2_diagonal_distance(d1, d2, &p, &q).unwrap();
        let got = solver.distance(&density(&p), &density(&q)).unwrap();
        ensure(got.finite && expected.finite, || format!("pair {k}: unexpected infinity"))?;
        let rel = (got.value - expected.value).abs() / expected.value.max(1e-300);
        worst = worst.max(rel);
        ensure(rel <= 1e-3, || format!("pair {k}: solver {} vs closed form {}", got.value, expected.value))?;
    }
    for k in 0..20 {
        let (p, q) = (sphere_point(&mut r), ball_point(&mut r));
        ensure((p.z() - q.z()).abs() > 1e-6, || format!("pair {k}: heights coincide"))?;
        let got = solver.distance(&density(&p), &density(&q)).unwrap();
        let expected = m2_diagonal_distance(d1, d2, &p, &q).unwrap();
        ensure(!got.finite && !expected.finite, || format!("differing-height pair {k} reported finite"))?;
    }
    Ok(format!("100 finite pairs, max relative error {worst:.1e}; 20 infinite pairs"))
}

fn random_cost_space(r: &mut ChaCha8Rng, k: usize, metric: bool) -> FiniteCostSpace {
    let pts: Vec<String> = (0..k).map(|i| i.to_string()).collect();
    let cost = if metric {
        let xy: Vec<(f64, f64)> = (0..k).map(|_| (r.random_range(0.0..1.0), r.random_range(0.0..1.0))).collect();
        (0..k)
            .map(|i| (0..k).map(|j| (xy[i].0 - xy[j].0).hypot(xy[i].1 - xy[j].1)).collect())
            .collect()
    } else {
        let mut c = vec![vec![0.0; k]; k];
        for i in 0..k {
            for j in i..k {
                let v = if i != j && r.random_bool(0.1) { f64::INFINITY } else { r.random_range(0.0..2.0) };
                c[i][j] = v;
                c[j][i] = v;
            }
        }
        c
    };
    FiniteCostSpace::new(pts, cost, metric).unwrap()
}

fn random_marginal(r: &mut ChaCha8Rng, k: usize, support: usize) -> ProbabilityVector {
    let mut w = vec![0.0; k];
    for _ in 0..support {
        w[r.random_range(0..k)] += r.random_range(0.01..1.0);
    }
    let s: f64 = w.iter().sum();
    ProbabilityVector::new(w.into_iter().map(|x| x / s).collect()).unwrap()
}

// 3
fn kantorovich_duality() -> Outcome {
    let mut r = rng(3);
    let mut worst: f64 = 0.0;
    let mut infinite = 0;
    for n in 0..50 {
        let k = r.random_range(2..=50);
        let metric = n % 2 == 0;
        let space = random_cost_space(&mut r, k, metric);
        let s1 = r.random_range(1..=k);
        let s2 = r.random_range(1..=k);
        let (mu, nu) = (random_marginal(&mut r, k, s1), random_marginal(&mut r, k, s2));
        let p = wasserstein_primal(&space, &mu, &nu).map_err(|e| e.to_string())?;
        let d = kantorovich_dual(&space, &mu, &nu).map_err(|e| e.to_string())?;
        if p.value.is_infinite() || d.value.is_infinite() {
            ensure(p.value == d.value, || format!("instance {n}: primal {} vs dual {}", p.value, d.value))?;
            infinite += 1;
            continue;
        }
        let gap = (p.value - d.value).abs();
        worst = worst.max(gap / (1.0 + p.value));
        ensure(gap <= 1e-8 * (1.0 + p.value), || format!("instance {n} (k={k}): primal {} dual {}", p.value, d.value))?;
    }
    Ok(format!("50 instances ({infinite} infinite), max scaled gap {worst:.1e}"))
}

// 4
fn cycle_versus_interval() -> Outcome {
    let n = 20;
    let cycle = make_cost_space(SpaceSpec::Cycle(n)).unwrap();
    let interval = make_cost_space(SpaceSpec::Interval(n)).unwrap();
    for i in 0..n {
        for j in 0..n {
            let (a, b) = (ProbabilityVector::dirac(n, i).unwrap(), ProbabilityVector::dirac(n, j).unwrap());
            let d = i.abs_diff(j);
            let wc = wasserstein_primal(&cycle, &a, &b).unwrap().value;
            let ec = d.min(n - d) as f64 / n as f64;
            ensure((wc - ec).abs() <= 1e-9, || format!("cycle ({i},{j}): {wc} vs {ec}"))?;
            let wi = wasserstein_primal(&interval, &a, &b).unwrap().value;
            let xi: f64 = interval.points()[i].parse().unwrap();
            let xj: f64 = interval.points()[j].parse().unwrap();
            ensure((wi - (xi - xj).abs()).abs() <= 1e-9, || format!("interval ({i},{j}): {wi}"))?;
        }
    }
    // Interior points k/20 of (0, 1) contain 0.2 and 0.9.
    let open = make_cost_space(SpaceSpec::Interval(n - 1)).unwrap();
    let pair = |s: &FiniteCostSpace| {
        let (a, b) = (point_index(s, 0.2).unwrap(), point_index(s, 0.9).unwrap());
        let k = s.size();
        wasserstein_primal(s, &ProbabilityVector::dirac(k, a).unwrap(), &ProbabilityVector::dirac(k, b).unwrap())
            .unwrap()
            .value
    };
    let (wc, wi) = (pair(&cycle), pair(&open));
    ensure((wc - 0.3).abs() <= 1e-9 && (wi - 0.7).abs() <= 1e-9, || format!("(0.2, 0.9): {wc} vs {wi}"))?;
    Ok(format!("all 400 pairs exact; (0.2, 0.9): cycle {wc:.6}, interval {wi:.6}"))
}

fn diag_samples() -> (Vec<BlochPoint>, Vec<BlochPoint>) {
    let small = latitude_rings(5, 6, 0.0);
    let mut large = small.clone();
    large.extend(latitude_rings(5, 6, PI / 6.0));
    (small, large)
}

fn moyal_samples() -> (Vec<BlochPoint>, Vec<BlochPoint>) {
    let small = fibonacci_sphere(30);
    let mut large = small.clone();
    large.extend(small.iter().map(|p| rotate_y(p, 0.7)));
    (small, large)
}

// 5
fn inclusion_and_monotonicity() -> Outcome {
    let diag = M2DiagonalModel { d1: 1.0, d2: 3.0 };
    let t_diag = m2_diagonal_triple(1.0, 3.0).unwrap();
    let solver = SpectralDistanceSolver::new(&t_diag, SolverOptions::default()).unwrap();
    let t_moyal = m2_moyal_algebra();
    let (ds, dl) = diag_samples();
    let (ms, ml) = moyal_samples();
    let ds = pure_sample_costs("diag", densities(&ds), &diag).unwrap();
    let dl = pure_sample_costs("diag", densities(&dl), &diag).unwrap();
    let ms = pure_sample_costs("moyal", densities(&ms), &moyal()).unwrap();
    let ml = pure_sample_costs("moyal", densities(&ml), &moyal()).unwrap();
    let mut r = rng(5);
    let mut slack = f64::INFINITY;
    let mut growth = f64::NEG_INFINITY;
    for k in 0..50 {
        let (p, q) = random_equal_z_pair(&mut r);
        let (a, b) = (density(&p), density(&q));
        let d = solver.distance(&a, &b).unwrap();
        let w30 = wd_distance(&ds, &t_diag, &a, &b).unwrap();
        let w60 = wd_distance(&dl, &t_diag, &a, &b).unwrap();
        ensure(d.finite && w30.finite && w60.finite, || format!("diag pair {k}: unexpected infinity"))?;
        ensure(d.value <= w30.value + 2e-4, || format!("diag pair {k}: d {} > wd {}", d.value, w30.value))?;
        ensure(w60.value <= w30.value + 1e-9, || format!("diag pair {k}: wd grew {} -> {}", w30.value, w60.value))?;
        slack = slack.min(w30.value - d.value);
        growth = growth.max(w60.value - w30.value);
    }
    for k in 0..50 {
        let (p, q) = (ball_point(&mut r), ball_point(&mut r));
        let (a, b) = (density(&p), density(&q));
        let d = moyal().distance(&a, &b).unwrap();
        let w30 = wd_distance(&ms, &t_moyal, &a, &b).unwrap();
        let w60 = wd_distance(&ml, &t_moyal, &a, &b).unwrap();
        ensure(w30.finite && w60.finite, || format!("moyal pair {k}: unexpected infinity"))?;
        ensure(d.value <= w30.value + 2e-4, || format!("moyal pair {k}: d {} > wd {}", d.value, w30.value))?;
        ensure(w60.value <= w30.value + 1e-9, || format!("moyal pair {k}: wd grew {} -> {}", w30.value, w60.value))?;
        slack = slack.min(w30.value - d.value);
        growth = growth.max(w60.value - w30.value);
    }
    Ok(format!("100 pairs; min(wd - d) = {slack:.2e}, max wd growth 30->60 = {growth:.1e}"))
}

fn with_points(base: &[BlochPoint], extra: &[BlochPoint]) -> Vec<BlochPoint> {
    let mut v = base.to_vec();
    for p in extra {
        if v.iter().all(|q| q.distance(p) > 1e-12) {
            v.push(*p);
        }
    }
    v
}

// 6
fn chord_equality() -> Outcome {
    let mut r = rng(6);
    let t_diag = m2_diagonal_triple(1.0, 3.0).unwrap();
    let solver = SpectralDistanceSolver::new(&t_diag, SolverOptions::default()).unwrap();
    let diag = M2DiagonalModel { d1: 1.0, d2: 3.0 };
    let t_moyal = m2_moyal_algebra();
    let base_diag = latitude_rings(5, 6, 0.0);
    let base_moyal = fibonacci_sphere(30);
    let mut worst: f64 = 0.0;
    for k in 0..10 {
        let z: f64 = r.random_range(-0.9..0.9);
        let rho = (1.0 - z * z).sqrt();
        let w1 = at_height(z, rho, r.random_range(0.0..2.0 * PI));
        let w2 = at_height(z, rho, r.random_range(0.0..2.0 * PI));
        let pts = with_points(&base_diag, &[w1, w2]);
        let s = pure_sample_costs("diag", densities(&pts), &diag).unwrap();
        let (l, lt) = (r.random_range(0.0..1.0), r.random_range(0.0..1.0));
        let rep = prop2_check(&s, &t_diag, &density(&w1), &density(&w2), l, lt, &solver, 2e-4).unwrap();
        ensure(rep.all_equal, || format!("diag chord {k}: {rep:?}"))?;
        worst = worst.max((rep.spectral.0 - rep.wd.0).abs()).max((rep.scaled_cost.0 - rep.wd.0).abs());
    }
    for k in 0..10 {
        let (w1, w2) = (sphere_point(&mut r), sphere_point(&mut r));
        let pts = with_points(&base_moyal, &[w1, w2]);
        let s = pure_sample_costs("moyal", densities(&pts), &moyal()).unwrap();
        let (l, lt) = (r.random_range(0.0..1.0), r.random_range(0.0..1.0));
        let rep = prop2_check(&s, &t_moyal, &density(&w1), &density(&w2), l, lt, &moyal(), 2e-4).unwrap();
        ensure(rep.all_equal, || format!("moyal chord {k}: {rep:?}"))?;
        worst = worst.max((rep.spectral.0 - rep.wd.0).abs()).max((rep.scaled_cost.0 - rep.wd.0).abs());
    }
    Ok(format!("20 chords, max disagreement {worst:.1e}"))
}

fn check_lambda(sample: &PureStateSample, t: &FiniteSpectralTriple, a: &AlgebraElement) -> Result<f64, String> {
    let l = lambda_rescale(sample, t, a).map_err(|e| e.to_string())?;
    let norm = commutator_norm(t, a).unwrap();
    ensure(1.0 / norm - 1e-9 <= l.lambda && l.lambda < 1.0, || {
        format!("lambda {} outside [1/{norm}, 1)", l.lambda)
    })?;
    let ev = sample_evaluations(sample, t, &a.scale(l.lambda)).unwrap();
    let viol = sample.constraints().max_violation(&ev);
    ensure(viol <= 1e-10, || format!("rescaled element violates a constraint by {viol:e}"))?;
    Ok(l.lambda * norm)
}

fn violating(r: &mut ChaCha8Rng, sample: &PureStateSample, t: &FiniteSpectralTriple) -> AlgebraElement {
    let n = t.basis_size();
    let mut a = AlgebraElement::new((0..n).map(|_| r.random_range(-1.0..1.0)).collect());
    while lambda_rescale(sample, t, &a).is_err() {
        a = a.scale(3.0);
    }
    a
}

// 7
fn lambda_bounds() -> Outcome {
    let mut r = rng(7);
    let mut ratio_min = f64::INFINITY;
    for _ in 0..50 {
        let m = Complex::new(r.random_range(-3.0..3.0), r.random_range(-3.0..3.0));
        let t = two_point_triple(m, false);
        let states = vec![DensityState::basis_projector(2, 0).unwrap(), DensityState::basis_projector(2, 1).unwrap()];
        let s = pure_sample_costs("two-point", states, &TwoPointModel { m }).unwrap();
        let a = violating(&mut r, &s, &t);
        ratio_min = ratio_min.min(check_lambda(&s, &t, &a)?);
    }
    let t = m2_diagonal_triple(1.0, 3.0).unwrap();
    let pts = latitude_rings(5, 6, 0.0);
    let s = pure_sample_costs("diag", densities(&pts), &M2DiagonalModel { d1: 1.0, d2: 3.0 }).unwrap();
    for _ in 0..50 {
        let a = violating(&mut r, &s, &t);
        ratio_min = ratio_min.min(check_lambda(&s, &t, &a)?);
    }
    Ok(format!("100 elements, min lambda*||[D,a]|| = {ratio_min:.6}"))
}

// 8
fn moyal_cost() -> Outcome {
    let p = MoyalCostParams::new(2.0).unwrap();
    let h = moyal_ball_cost(&BlochPoint::ORIGIN, &bp(1.0, 0.0, 0.0), &p);
    let v = moyal_ball_cost(&BlochPoint::ORIGIN, &BlochPoint::NORTH, &p);
    ensure((h - 1.0).abs() <= 1e-12 && (v - 0.5).abs() <= 1e-12, || format!("branches: {h}, {v}"))?;
    // Both closed forms agree at the boundary angle, and the cost is continuous across it.
    let d = 0.8;
    let (low, high) = (FRAC_PI_4.cos() * d, d / (2.0 * FRAC_PI_4.sin()));
    let at = moyal_ball_cost(&BlochPoint::ORIGIN, &bp(0.4, 0.0, 0.4), &p);
    let eps = 1e-7;
    let below = moyal_ball_cost(&BlochPoint::ORIGIN, &bp(0.4 + eps, 0.0, 0.4), &p);
    let above = moyal_ball_cost(&BlochPoint::ORIGIN, &bp(0.4, 0.0, 0.4 + eps), &p);
    ensure((low - high).abs() <= 1e-12 && (at - 0.4).abs() <= 1e-12, || {
        format!("boundary: {low} vs {high}, cost {at}")
    })?;
    ensure((below - at).abs() <= 1e-6 && (above - at).abs() <= 1e-6, || format!("jump: {below}, {at}, {above}"))?;
    let mut r = rng(8);
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let (a, b, c) = (ball_point(&mut r), ball_point(&mut r), ball_point(&mut r));
        let excess = moyal_ball_cost(&a, &c, &p) - moyal_ball_cost(&a, &b, &p) - moyal_ball_cost(&b, &c, &p);
        worst = worst.max(excess);
        if excess > 1e-9 {
            violations += 1;
        }
    }
    ensure(violations == 0, || format!("{violations} triangle violations, worst excess {worst:e}"))?;
    Ok(format!("branches exact, 1000 triples, worst triangle excess {worst:.1e}"))
}

// 9
fn two_sheet() -> Outcome {
    let base = make_cost_space(SpaceSpec::Cycle(15)).unwrap();
    let space = make_cost_space(SpaceSpec::TwoSheet { base: Box::new(base.clone()), inv_m: 0.3 }).unwrap();
    let mut r = rng(9);
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let (mu, nu) = (random_marginal(&mut r, 15, 4), random_marginal(&mut r, 15, 4));
        let sheet = k % 2;
        let lift = |p: &ProbabilityVector| {
            let mut w = vec![0.0; 30];
            w[sheet * 15..sheet * 15 + 15].copy_from_slice(p.weights());
            ProbabilityVector::new(w).unwrap()
        };
        let wb = wasserstein_primal(&base, &mu, &nu).unwrap().value;
        let ws = wasserstein_primal(&space, &lift(&mu), &lift(&nu)).unwrap().value;
        worst = worst.max((wb - ws).abs());
        ensure((wb - ws).abs() <= 1e-10, || format!("pair {k}: base {wb} vs two-sheet {ws}"))?;
    }
    ensure(two_sheet_cost(3.0, 4.0).unwrap() == 5.0, || "(3, 4) != 5".into())?;
    ensure(two_sheet_cost(0.0, 0.3).unwrap() == 0.3, || "(0, inv_m) != inv_m".into())?;
    ensure(space.cost(4, 19) == 0.3, || format!("stay cost {}", space.cost(4, 19)))?;
    Ok(format!("20 same-sheet pairs, max difference {worst:.1e}; crossing costs exact"))
}

// 10
fn measure_non_uniqueness() -> Outcome {
    let (n, s, e, w) = (BlochPoint::NORTH, BlochPoint::SOUTH, bp(1.0, 0.0, 0.0), bp(-1.0, 0.0, 0.0));
    let half = ProbabilityVector::new(vec![0.5, 0.5]).unwrap();
    let (poles, _) = state_from_measure(&SphereMeasure::new(vec![n, s], half.clone()).unwrap()).unwrap();
    let (equator, _) = state_from_measure(&SphereMeasure::new(vec![e, w], half).unwrap()).unwrap();
    let diff = poles.max_abs_diff(&equator);
    ensure(diff <= 1e-12, || format!("density matrices differ by {diff:e}"))?;

    let pts = vec![n, s, e, w];
    let sample = pure_sample_costs("moyal", densities(&pts), &moyal()).unwrap();
    let wd = wd_distance(&sample, &m2_moyal_algebra(), &poles, &equator).unwrap();
    ensure(wd.finite && wd.value == 0.0, || format!("wd = {}", wd.value))?;

    let space = FiniteCostSpace::new(
        (0..4).map(|i| i.to_string()).collect(),
        sample.costs().to_vec(),
        true,
    )
    .unwrap();
    let mu = ProbabilityVector::new(vec![0.5, 0.5, 0.0, 0.0]).unwrap();
    let nu = ProbabilityVector::new(vec![0.0, 0.0, 0.5, 0.5]).unwrap();
    let classical = wasserstein_primal(&space, &mu, &nu).unwrap().value;
    ensure(classical >= 0.5, || format!("classical W = {classical}"))?;
    Ok(format!("same state, wd = 0, classical W = {classical:.6}"))
}

fn random_hermitian(r: &mut ChaCha8Rng) -> (HermitianMatrix, [f64; 3]) {
    let d0: f64 = r.random_range(-2.0..2.0);
    let d = [r.random_range(-2.0..2.0), r.random_range(-2.0..2.0), r.random_range(-2.0..2.0)];
    let m = ComplexMatrix::new(
        2,
        2,
        vec![
            Complex::new(d0 + d[2], 0.0),
            Complex::new(d[0], -d[1]),
            Complex::new(d[0], d[1]),
            Complex::new(d0 - d[2], 0.0),
        ],
    )
    .unwrap();
    (HermitianMatrix::new(m).unwrap(), d)
}

/// Two ball points whose difference is orthogonal to `d`.
fn orthogonal_pair(r: &mut ChaCha8Rng, d: [f64; 3]) -> (BlochPoint, BlochPoint) {
    loop {
        let p = ball_point(r);
        let q = ball_point(r);
        let diff = [q.x() - p.x(), q.y() - p.y(), q.z() - p.z()];
        let dn = d.iter().map(|x| x * x).sum::<f64>();
        let proj = diff.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>() / dn;
        let q2 = [q.x() - proj * d[0], q.y() - proj * d[1], q.z() - proj * d[2]];
        if let Ok(q2) = BlochPoint::new(q2[0], q2[1], q2[2]) {
            if p.distance(&q2) > 0.05 {
                return (p, q2);
            }
        }
    }
}

// 11
fn oracle_consistency() -> Outcome {
    let mut r = rng(11);
    let mut below: f64 = 0.0;
    let mut above: f64 = 0.0;
    for k in 0..30 {
        let (dirac, d) = random_hermitian(&mut r);
        let t = m2_triple(format!("random-{k}"), dirac).unwrap();
        let (p, q) = orthogonal_pair(&mut r, d);
        let (a, b) = (density(&p), density(&q));
        let s = spectral_distance(&t, &a, &b, &SolverOptions { seed: k, ..Default::default() }).unwrap();
        let o = spectral_distance_oracle(&t, &a, &b, 100_000, 1000 + k).unwrap();
        ensure(s.finite, || format!("triple {k}: infinite"))?;
        ensure(s.value >= o - 1e-4 && s.value <= o + 5e-2, || format!("triple {k}: solver {} oracle {o}", s.value))?;
        below = below.max(o - s.value);
        above = above.max(s.value - o);
    }
    Ok(format!("30 triples; oracle - solver <= {below:.1e}, solver - oracle <= {above:.1e}"))
}

fn metric_suite(name: &str, n: usize, d: impl Fn(usize, usize) -> f64, tol: f64) -> Result<(), String> {
    for i in 0..n {
        let dii = d(i, i);
        ensure(dii.abs() <= tol, || format!("{name}: d({i},{i}) = {dii}"))?;
        for j in 0..n {
            let (a, b) = (d(i, j), d(j, i));
            ensure((a - b).abs() <= tol, || format!("{name}: asymmetric ({i},{j}): {a} vs {b}"))?;
            for k in 0..n {
                let (ik, ij, jk) = (d(i, k), d(i, j), d(j, k));
                ensure(ik <= ij + jk + tol, || format!("{name}: triangle ({i},{j},{k}): {ik} > {ij} + {jk}"))?;
            }
        }
    }
    Ok(())
}

fn table(n: usize, f: impl Fn(usize, usize) -> f64 + Sync) -> Vec<Vec<f64>> {
    (0..n).map(|i| (0..n).map(|j| f(i, j)).collect()).collect()
}

// 12
fn metric_axioms() -> Outcome {
    let mut r = rng(12);
    // Spectral distance on states of equal height.
    let t = m2_diagonal_triple(1.0, 3.0).unwrap();
    let solver = SpectralDistanceSolver::new(&t, SolverOptions::default()).unwrap();
    let z: f64 = 0.3;
    let rmax = (1.0 - z * z).sqrt();
    let states: Vec<DensityState> = (0..6)
        .map(|_| density(&at_height(z, rmax * r.random_range(0.0..1.0), r.random_range(0.0..2.0 * PI))))
        .collect();
    let dd = table(6, |i, j| solver.distance(&states[i], &states[j]).unwrap().value);
    metric_suite("spectral distance", 6, |i, j| dd[i][j], 2e-4)?;
    for i in 0..6 {
        for j in 0..6 {
            ensure(i == j || dd[i][j] > 0.0, || format!("spectral distance: d({i},{j}) = 0"))?;
        }
    }

    // Sampled W_D on mixed states.
    let pts = fibonacci_sphere(30);
    let sample = pure_sample_costs("moyal", densities(&pts), &moyal()).unwrap();
    let alg = m2_moyal_algebra();
    let mixed: Vec<DensityState> = (0..6).map(|_| density(&ball_point(&mut r))).collect();
    let wd = table(6, |i, j| wd_distance(&sample, &alg, &mixed[i], &mixed[j]).unwrap().value);
    metric_suite("wd", 6, |i, j| wd[i][j], 2e-4)?;

    // Cost spaces and the Wasserstein distance they induce.
    let spaces = vec![
        ("cycle", make_cost_space(SpaceSpec::Cycle(12)).unwrap()),
        ("interval", make_cost_space(SpaceSpec::Interval(12)).unwrap()),
        (
            "two-sheet",
            make_cost_space(SpaceSpec::TwoSheet {
                base: Box::new(make_cost_space(SpaceSpec::Cycle(6)).unwrap()),
                inv_m: 0.25,
            })
            .unwrap(),
        ),
    ];
    for (name, s) in &spaces {
        ensure(s.is_metric(), || format!("{name}: metric flag unset"))?;
        ensure(triangle_violation(s.cost_matrix(), 1e-9).is_none(), || format!("{name}: triangle fails"))?;
        metric_suite(name, s.size(), |i, j| s.cost(i, j), 1e-12)?;
        let k = s.size();
        let margs: Vec<ProbabilityVector> = (0..5).map(|_| random_marginal(&mut r, k, 4)).collect();
        let w = table(5, |i, j| wasserstein_primal(s, &margs[i], &margs[j]).unwrap().value);
        metric_suite(&format!("W on {name}"), 5, |i, j| w[i][j], 1e-8)?;
        for i in 0..5 {
            for j in 0..5 {
                ensure(i == j || margs[i] == margs[j] || w[i][j] > 0.0, || format!("W on {name}: zero off diagonal"))?;
            }
        }
    }
    Ok("spectral distance, wd, cycle, interval, two-sheet and induced W".into())
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("two-point distance is 1/|m|", Duration::from_secs(1), two_point_model),
        ("diagonal Dirac closed form and infinities", Duration::from_secs(30), diagonal_dirac),
        ("Kantorovich duality", Duration::from_secs(10), kantorovich_duality),
        ("cycle versus interval", Duration::from_secs(5), cycle_versus_interval),
        ("d_D <= W_D and sample monotonicity", Duration::from_secs(60), inclusion_and_monotonicity),
        ("chord equality", Duration::from_secs(20), chord_equality),
        ("lambda_a bounds", Duration::from_secs(5), lambda_bounds),
        ("Moyal-ball cost", Duration::from_secs(5), moyal_cost),
        ("two-sheet model", Duration::from_secs(5), two_sheet),
        ("measure non-uniqueness", Duration::from_secs(2), measure_non_uniqueness),
        ("oracle consistency", Duration::from_secs(30), oracle_consistency),
        ("metric axioms", Duration::from_secs(120), metric_axioms),
    ];
    let mut failed = 0;
    for (i, (name, budget, f)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let mut out = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        if out.is_ok() && elapsed > budget {
            out = Err("exceeded time budget".into());
        }
        let timing = format!("{:.2}s / {:.0}s", elapsed.as_secs_f64(), budget.as_secs_f64());
        match out {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{timing}]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why} [{timing}]", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all 12 criteria passed");
}
