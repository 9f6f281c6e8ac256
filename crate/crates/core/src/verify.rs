//! Reproduction suite for the closed-form results and property checks.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::connes::{spectral_distance_oracle, SolverOptions, SpectralDistanceSolver, StateDistance};
use crate::error::Result;
use crate::json::ExtReal;
use crate::linalg::{Complex, ComplexMatrix, HermitianMatrix};
use crate::models::{
    bloch_to_density, fibonacci_sphere, latitude_rings, m2_diagonal_distance, m2_diagonal_triple, m2_moyal_algebra,
    m2_triple, moyal_ball_cost, moyal_high_branch, moyal_low_branch, state_from_measure, two_point_triple,
    two_sheet_cost, BlochPoint, M2DiagonalModel, MoyalCostParams, MoyalModel, SphereMeasure, TwoPointModel,
};
use crate::transport::{
    kantorovich_dual, make_cost_space, point_index, wasserstein_primal, FiniteCostSpace, ProbabilityVector, SpaceSpec,
};
use crate::triple::{commutator_norm, AlgebraElement, DensityState, FiniteSpectralTriple};
use crate::wd::{lambda_rescale, prop2_check, pure_sample_costs, sample_evaluations, sphere_sample, wd_distance};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub id: String,
    pub description: String,
    /// Short name of the result being reproduced.
    pub anchor: String,
    pub expected: ExtReal,
    pub computed: ExtReal,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
    pub overall: bool,
}

impl VerificationReport {
    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }
}

struct Suite {
    opts: SolverOptions,
    checks: Vec<Check>,
}

impl Suite {
    #[allow(clippy::too_many_arguments)]
    fn push(&mut self, id: &str, anchor: &str, description: &str, expected: f64, computed: f64, tol: f64, pass: bool) {
        self.checks.push(Check {
            id: id.into(),
            description: description.into(),
            anchor: anchor.into(),
            expected: ExtReal(expected),
            computed: ExtReal(computed),
            tolerance: tol,
            pass,
        });
    }

    /// `|computed - expected| <= tol`, with infinities compared exactly.
    fn close(&mut self, id: &str, anchor: &str, description: &str, expected: f64, computed: f64, tol: f64) {
        let pass = if expected.is_infinite() || computed.is_infinite() {
            expected == computed
        } else {
            (computed - expected).abs() <= tol
        };
        self.push(id, anchor, description, expected, computed, tol, pass);
    }

    /// `computed <= bound + tol`.
    fn at_most(&mut self, id: &str, anchor: &str, description: &str, bound: f64, computed: f64, tol: f64) {
        let pass = computed <= bound + tol;
        self.push(id, anchor, description, bound, computed, tol, pass);
    }

    fn solver(&self, t: &FiniteSpectralTriple) -> Result<SpectralDistanceSolver> {
        SpectralDistanceSolver::new(t, self.opts.clone())
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn ball_point(r: &mut ChaCha8Rng) -> BlochPoint {
    loop {
        let v: [f64; 3] = std::array::from_fn(|_| r.random_range(-1.0..1.0));
        if v.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
            return BlochPoint::new(v[0], v[1], v[2]).expect("inside ball");
        }
    }
}

fn at_height(z: f64, rho: f64, phi: f64) -> BlochPoint {
    let rho = rho.min((1.0 - z * z).max(0.0).sqrt());
    BlochPoint::new(rho * phi.cos(), rho * phi.sin(), z).expect("inside ball")
}

fn equal_height_pair(r: &mut ChaCha8Rng, pure: bool) -> (BlochPoint, BlochPoint) {
    let z: f64 = r.random_range(-0.9..0.9);
    let rmax = (1.0 - z * z).sqrt();
    let mut radius = || if pure { rmax } else { rmax * r.random_range(0.0..1.0f64).sqrt() };
    let (ra, rb) = (radius(), radius());
    (at_height(z, ra, r.random_range(0.0..2.0 * PI)), at_height(z, rb, r.random_range(0.0..2.0 * PI)))
}

fn density(p: &BlochPoint) -> Result<DensityState> {
    bloch_to_density(p)
}

fn finite_value(d: &crate::connes::ExtendedDistance) -> f64 {
    if d.finite {
        d.value
    } else {
        f64::INFINITY
    }
}

fn moyal() -> MoyalModel {
    MoyalModel { params: MoyalCostParams::new(2.0).expect("positive theta") }
}

fn two_point(s: &mut Suite) -> Result<()> {
    let d1 = DensityState::basis_projector(2, 0)?;
    let d2 = DensityState::basis_projector(2, 1)?;
    for (name, m) in [
        ("0.5", Complex::new(0.5, 0.0)),
        ("1", Complex::new(1.0, 0.0)),
        ("2", Complex::new(2.0, 0.0)),
        ("1+i", Complex::new(1.0, 1.0)),
    ] {
        let expected = 1.0 / m.norm();
        let got = s.solver(&two_point_triple(m, false))?.distance(&d1, &d2)?;
        let tol = 1e-4 * expected;
        let ok = got.converged && got.finite && (got.value - expected).abs() <= tol;
        s.push(
            &format!("two-point.solver.m={name}"),
            "two-point distance",
            &format!("general solver between the two pure states, m = {name}; gap {:.1e}", got.gap_estimate),
            expected,
            finite_value(&got),
            tol,
            ok,
        );
        let exact = TwoPointModel { m }.distance(&d1, &d2)?;
        s.close(&format!("two-point.analytic.m={name}"), "two-point distance", "closed form", expected, exact.value, 0.0);
    }
    Ok(())
}

fn diagonal(s: &mut Suite) -> Result<()> {
    let (d1, d2) = (1.0, 3.0);
    let solver = s.solver(&m2_diagonal_triple(d1, d2)?)?;
    let mut r = rng(2);
    let mut worst: f64 = 0.0;
    let mut all_converged = true;
    for _ in 0..100 {
        let (p, q) = equal_height_pair(&mut r, false);
        let exact = m2_diagonal_distance(d1, d2, &p, &q)?.value;
        let got = solver.distance(&density(&p)?, &density(&q)?)?;
        all_converged &= got.converged;
        worst = worst.max((finite_value(&got) - exact).abs() / exact);
    }
    let ok = all_converged && worst <= 1e-3;
    s.push(
        "m2-diagonal.equal-height",
        "diagonal Dirac closed form",
        "max relative error over 100 equal-height pairs",
        0.0,
        worst,
        1e-3,
        ok,
    );
    let mut finite = 0;
    for _ in 0..20 {
        let p = ball_point(&mut r);
        let q = loop {
            let q = ball_point(&mut r);
            if (p.z() - q.z()).abs() > 1e-3 {
                break q;
            }
        };
        if solver.distance(&density(&p)?, &density(&q)?)?.finite {
            finite += 1;
        }
    }
    s.close(
        "m2-diagonal.different-height",
        "diagonal Dirac infinite sector",
        "pairs at different heights reported finite (of 20)",
        0.0,
        finite as f64,
        0.0,
    );
    let p = BlochPoint::new(0.5, 0.0, 0.0)?;
    let q = BlochPoint::new(0.0, 0.5, 0.0)?;
    let got = solver.distance(&density(&p)?, &density(&q)?)?;
    let expected = m2_diagonal_distance(d1, d2, &p, &q)?.value;
    s.close(
        "m2-diagonal.example",
        "diagonal Dirac closed form",
        "(0.5,0,0) to (0,0.5,0) with D = diag(1,3)",
        expected,
        finite_value(&got),
        1e-4 * expected,
    );
    Ok(())
}

fn random_space(r: &mut ChaCha8Rng, k: usize, metric: bool) -> Result<FiniteCostSpace> {
    let cost: Vec<Vec<f64>> = if metric {
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
    FiniteCostSpace::new((0..k).map(|i| i.to_string()).collect(), cost, metric)
}

fn random_marginal(r: &mut ChaCha8Rng, k: usize, support: usize) -> Result<ProbabilityVector> {
    let mut w = vec![0.0; k];
    for _ in 0..support {
        w[r.random_range(0..k)] += r.random_range(0.01..1.0);
    }
    let total: f64 = w.iter().sum();
    ProbabilityVector::new(w.into_iter().map(|x| x / total).collect())
}

fn duality(s: &mut Suite) -> Result<()> {
    let mut r = rng(3);
    let mut worst: f64 = 0.0;
    for n in 0..50 {
        let k = r.random_range(2..=50);
        let space = random_space(&mut r, k, n % 2 == 0)?;
        let (a, b) = (r.random_range(1..=k), r.random_range(1..=k));
        let (mu, nu) = (random_marginal(&mut r, k, a)?, random_marginal(&mut r, k, b)?);
        let p = wasserstein_primal(&space, &mu, &nu)?.value;
        let d = kantorovich_dual(&space, &mu, &nu)?.value;
        let gap = if p.is_infinite() || d.is_infinite() {
            if p == d {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (p - d).abs() / (1.0 + p)
        };
        worst = worst.max(gap);
    }
    s.at_most(
        "transport.duality",
        "Kantorovich duality",
        "max |primal - dual| / (1 + value) over 50 random cost spaces",
        0.0,
        worst,
        1e-8,
    );
    Ok(())
}

fn dirac_w(space: &FiniteCostSpace, i: usize, j: usize) -> Result<f64> {
    let k = space.size();
    Ok(wasserstein_primal(space, &ProbabilityVector::dirac(k, i)?, &ProbabilityVector::dirac(k, j)?)?.value)
}

fn cycle_interval(s: &mut Suite) -> Result<()> {
    let n = 20;
    let cycle = make_cost_space(SpaceSpec::Cycle(n))?;
    let interval = make_cost_space(SpaceSpec::Interval(n))?;
    let (mut wc, mut wi): (f64, f64) = (0.0, 0.0);
    for i in 0..n {
        let xi: f64 = interval.points()[i].parse().unwrap_or(f64::NAN);
        for j in 0..n {
            let d = i.abs_diff(j);
            wc = wc.max((dirac_w(&cycle, i, j)? - d.min(n - d) as f64 / n as f64).abs());
            let xj: f64 = interval.points()[j].parse().unwrap_or(f64::NAN);
            wi = wi.max((dirac_w(&interval, i, j)? - (xi - xj).abs()).abs());
        }
    }
    s.at_most("transport.cycle", "circle distance", "max error over all pairs of cycle(20)", 0.0, wc, 1e-9);
    s.at_most("transport.interval", "interval distance", "max error over all pairs of interval(20)", 0.0, wi, 1e-9);
    let open = make_cost_space(SpaceSpec::Interval(n - 1))?;
    let pair = |sp: &FiniteCostSpace| -> Result<f64> {
        match (point_index(sp, 0.2), point_index(sp, 0.9)) {
            (Some(a), Some(b)) => dirac_w(sp, a, b),
            _ => Ok(f64::NAN),
        }
    };
    s.close("transport.cycle-pair", "circle distance", "0.2 to 0.9 on cycle(20)", 0.3, pair(&cycle)?, 1e-9);
    s.close("transport.interval-pair", "interval distance", "0.2 to 0.9 on the grid k/20", 0.7, pair(&open)?, 1e-9);
    let c10 = make_cost_space(SpaceSpec::Cycle(10))?;
    s.close("transport.cycle10", "circle distance", "dirac 2 to dirac 9 on cycle(10)", 0.3, dirac_w(&c10, 2, 9)?, 1e-12);
    Ok(())
}

fn rotate_y(p: &BlochPoint, angle: f64) -> Result<BlochPoint> {
    let (c, sn) = (angle.cos(), angle.sin());
    let [x, y, z] = p.coords();
    let (nx, nz) = (c * x + sn * z, -sn * x + c * z);
    let n = (nx * nx + y * y + nz * nz).sqrt().max(1.0);
    BlochPoint::new(nx / n, y / n, nz / n)
}

fn inclusion(s: &mut Suite) -> Result<()> {
    let diag = M2DiagonalModel { d1: 1.0, d2: 3.0 };
    let t_diag = m2_diagonal_triple(1.0, 3.0)?;
    let solver = s.solver(&t_diag)?;
    let small = latitude_rings(5, 6, 0.0);
    let mut large = small.clone();
    large.extend(latitude_rings(5, 6, PI / 6.0));
    let ds = pure_sample_costs("m2-diagonal", to_states(&small)?, &diag)?;
    let dl = pure_sample_costs("m2-diagonal", to_states(&large)?, &diag)?;

    let t_moyal = m2_moyal_algebra();
    let msmall = fibonacci_sphere(30);
    let mut mlarge = msmall.clone();
    for p in &msmall {
        mlarge.push(rotate_y(p, 0.7)?);
    }
    let ms = pure_sample_costs("m2-moyal", to_states(&msmall)?, &moyal())?;
    let ml = pure_sample_costs("m2-moyal", to_states(&mlarge)?, &moyal())?;

    let mut r = rng(5);
    let (mut excess, mut growth) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for k in 0..100 {
        let (p, q, d, sample_s, sample_l, t) = if k < 50 {
            let (p, q) = equal_height_pair(&mut r, false);
            let d = finite_value(&solver.distance(&density(&p)?, &density(&q)?)?);
            (p, q, d, &ds, &dl, &t_diag)
        } else {
            let (p, q) = (ball_point(&mut r), ball_point(&mut r));
            let d = moyal().distance(&density(&p)?, &density(&q)?)?.value;
            (p, q, d, &ms, &ml, &t_moyal)
        };
        let (a, b) = (density(&p)?, density(&q)?);
        let w30 = wd_distance(sample_s, t, &a, &b)?.value;
        let w60 = wd_distance(sample_l, t, &a, &b)?.value;
        excess = excess.max(d - w30);
        growth = growth.max(w60 - w30);
    }
    s.at_most(
        "wd.inclusion",
        "distance bounded by W_D",
        "max (d_D - W_D) over 100 state pairs with a 30-point sample",
        0.0,
        excess,
        2e-4,
    );
    s.at_most(
        "wd.monotone",
        "sample monotonicity",
        "max increase of W_D from the 30-point to the 60-point sample",
        0.0,
        growth,
        1e-9,
    );
    Ok(())
}

fn to_states(points: &[BlochPoint]) -> Result<Vec<DensityState>> {
    points.iter().map(density).collect()
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

fn chords(s: &mut Suite) -> Result<()> {
    let t_diag = m2_diagonal_triple(1.0, 3.0)?;
    let solver = s.solver(&t_diag)?;
    let diag = M2DiagonalModel { d1: 1.0, d2: 3.0 };
    let t_moyal = m2_moyal_algebra();
    let mut r = rng(6);
    for (model, anchor) in [("m2-diagonal", "equal-height chords"), ("m2-moyal", "Moyal chords")] {
        let mut worst: f64 = 0.0;
        for _ in 0..10 {
            let (w1, w2) = if model == "m2-diagonal" {
                equal_height_pair(&mut r, true)
            } else {
                let mut sphere = || {
                    let z: f64 = r.random_range(-1.0..1.0);
                    at_height(z, 1.0, r.random_range(0.0..2.0 * PI))
                };
                (sphere(), sphere())
            };
            let (l, lt) = (r.random_range(0.0..1.0), r.random_range(0.0..1.0));
            let (e1, e2) = (density(&w1)?, density(&w2)?);
            let rep = if model == "m2-diagonal" {
                let pts = with_points(&latitude_rings(5, 6, 0.0), &[w1, w2]);
                let sample = pure_sample_costs(model, to_states(&pts)?, &diag)?;
                prop2_check(&sample, &t_diag, &e1, &e2, l, lt, &solver, 2e-4)?
            } else {
                let pts = with_points(&fibonacci_sphere(30), &[w1, w2]);
                let sample = pure_sample_costs(model, to_states(&pts)?, &moyal())?;
                prop2_check(&sample, &t_moyal, &e1, &e2, l, lt, &moyal(), 2e-4)?
            };
            let spread = [rep.spectral.0, rep.scaled_cost.0, rep.wd.0];
            let hi = spread.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = spread.iter().cloned().fold(f64::INFINITY, f64::min);
            worst = worst.max(if hi.is_finite() { hi - lo } else { f64::INFINITY });
        }
        s.at_most(
            &format!("wd.chord.{model}"),
            anchor,
            "max spread of distance, scaled endpoint cost and W_D over 10 chords",
            0.0,
            worst,
            2e-4,
        );
    }
    Ok(())
}

fn lambda(s: &mut Suite) -> Result<()> {
    let mut r = rng(7);
    let mut low = f64::INFINITY;
    let mut high = f64::NEG_INFINITY;
    let mut violation: f64 = 0.0;
    let diag_t = m2_diagonal_triple(1.0, 3.0)?;
    let diag_sample =
        pure_sample_costs("m2-diagonal", to_states(&latitude_rings(5, 6, 0.0))?, &M2DiagonalModel { d1: 1.0, d2: 3.0 })?;
    for k in 0..100 {
        let (t, sample) = if k < 50 {
            let m = Complex::new(r.random_range(-3.0..3.0), r.random_range(-3.0..3.0));
            let states = vec![DensityState::basis_projector(2, 0)?, DensityState::basis_projector(2, 1)?];
            (two_point_triple(m, false), pure_sample_costs("two-point", states, &TwoPointModel { m })?)
        } else {
            (diag_t.clone(), diag_sample.clone())
        };
        let mut a = AlgebraElement::new((0..t.basis_size()).map(|_| r.random_range(-1.0..1.0)).collect());
        let res = loop {
            match lambda_rescale(&sample, &t, &a) {
                Ok(res) => break res,
                Err(_) => a = a.scale(3.0),
            }
        };
        let ratio = res.lambda * commutator_norm(&t, &a)?;
        low = low.min(ratio);
        high = high.max(res.lambda);
        let ev = sample_evaluations(&sample, &t, &a.scale(res.lambda))?;
        violation = violation.max(sample.constraints().max_violation(&ev));
    }
    s.push(
        "wd.lambda.lower",
        "rescaling factor bounds",
        "min lambda_a * ||[D,a]|| over 100 non-Lipschitz elements",
        1.0,
        low,
        1e-9,
        low >= 1.0 - 1e-9,
    );
    s.push("wd.lambda.upper", "rescaling factor bounds", "max lambda_a (must stay below 1)", 1.0, high, 0.0, high < 1.0);
    s.at_most("wd.lambda.feasible", "rescaling factor bounds", "max constraint violation after rescaling", 0.0, violation, 1e-10);
    Ok(())
}

fn moyal_checks(s: &mut Suite) -> Result<()> {
    let p = MoyalCostParams::new(2.0)?;
    let o = BlochPoint::ORIGIN;
    s.close("moyal.horizontal", "Moyal-ball cost", "origin to (1,0,0), theta = 2", 1.0, moyal_ball_cost(&o, &BlochPoint::new(1.0, 0.0, 0.0)?, &p), 1e-12);
    s.close("moyal.vertical", "Moyal-ball cost", "origin to north pole, theta = 2", 0.5, moyal_ball_cost(&o, &BlochPoint::NORTH, &p), 1e-12);
    let a = PI / 4.0;
    s.close(
        "moyal.continuity",
        "Moyal-ball cost",
        "the two branches at elevation pi/4, unit length",
        moyal_low_branch(1.0, a, 1.0),
        moyal_high_branch(1.0, a, 1.0),
        1e-12,
    );
    let mut r = rng(8);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let (x, y, z) = (ball_point(&mut r), ball_point(&mut r), ball_point(&mut r));
        worst = worst.max(moyal_ball_cost(&x, &z, &p) - moyal_ball_cost(&x, &y, &p) - moyal_ball_cost(&y, &z, &p));
    }
    s.at_most("moyal.triangle", "Moyal-ball cost", "max triangle excess over 1000 ball triples", 0.0, worst, 1e-9);
    Ok(())
}

fn two_sheet(s: &mut Suite) -> Result<()> {
    let base = make_cost_space(SpaceSpec::Cycle(15))?;
    let space = make_cost_space(SpaceSpec::TwoSheet { base: Box::new(base.clone()), inv_m: 0.3 })?;
    let mut r = rng(9);
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let (mu, nu) = (random_marginal(&mut r, 15, 4)?, random_marginal(&mut r, 15, 4)?);
        let off = (k % 2) * 15;
        let lift = |p: &ProbabilityVector| {
            let mut w = vec![0.0; 30];
            w[off..off + 15].copy_from_slice(p.weights());
            ProbabilityVector::new(w)
        };
        let wb = wasserstein_primal(&base, &mu, &nu)?.value;
        let ws = wasserstein_primal(&space, &lift(&mu)?, &lift(&nu)?)?.value;
        worst = worst.max((wb - ws).abs());
    }
    s.at_most("two-sheet.same-sheet", "two-sheet model", "max |W - W_base| over 20 same-sheet pairs", 0.0, worst, 1e-10);
    s.close("two-sheet.cross", "two-sheet model", "cost for base distance 3 and 1/|m| = 4", 5.0, two_sheet_cost(3.0, 4.0)?, 0.0);
    s.close("two-sheet.stay", "two-sheet model", "cost for base distance 0 and 1/|m| = 0.3", 0.3, two_sheet_cost(0.0, 0.3)?, 0.0);
    Ok(())
}

fn non_uniqueness(s: &mut Suite) -> Result<()> {
    let (n, so) = (BlochPoint::NORTH, BlochPoint::SOUTH);
    let (e, w) = (BlochPoint::new(1.0, 0.0, 0.0)?, BlochPoint::new(-1.0, 0.0, 0.0)?);
    let half = ProbabilityVector::new(vec![0.5, 0.5])?;
    let (poles, _) = state_from_measure(&SphereMeasure::new(vec![n, so], half.clone())?)?;
    let (equator, _) = state_from_measure(&SphereMeasure::new(vec![e, w], half)?)?;
    s.close("measures.state", "same state from different measures", "max entry difference of the two density matrices", 0.0, poles.max_abs_diff(&equator), 1e-12);
    let sample = pure_sample_costs("m2-moyal", to_states(&[n, so, e, w])?, &moyal())?;
    let wd = wd_distance(&sample, &m2_moyal_algebra(), &poles, &equator)?;
    s.close("measures.wd", "same state from different measures", "W_D between the two states", 0.0, wd.value, 0.0);
    let space = FiniteCostSpace::new((0..4).map(|i| i.to_string()).collect(), sample.costs().to_vec(), true)?;
    let w = wasserstein_primal(
        &space,
        &ProbabilityVector::new(vec![0.5, 0.5, 0.0, 0.0])?,
        &ProbabilityVector::new(vec![0.0, 0.0, 0.5, 0.5])?,
    )?;
    s.push(
        "measures.classical",
        "same state from different measures",
        "classical W between the measures (at least 0.5)",
        0.5,
        w.value,
        0.0,
        w.value >= 0.5,
    );
    Ok(())
}

fn oracle(s: &mut Suite) -> Result<()> {
    let mut r = rng(11);
    let (mut below, mut above) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut all_converged = true;
    for k in 0..30u64 {
        let d0: f64 = r.random_range(-2.0..2.0);
        let d: [f64; 3] = std::array::from_fn(|_| r.random_range(-2.0..2.0));
        let m = ComplexMatrix::new(
            2,
            2,
            vec![
                Complex::new(d0 + d[2], 0.0),
                Complex::new(d[0], -d[1]),
                Complex::new(d[0], d[1]),
                Complex::new(d0 - d[2], 0.0),
            ],
        )?;
        let t = m2_triple(format!("random-{k}"), HermitianMatrix::new(m)?)?;
        let dn: f64 = d.iter().map(|x| x * x).sum();
        let (p, q) = loop {
            let (p, q) = (ball_point(&mut r), ball_point(&mut r));
            let diff = [q.x() - p.x(), q.y() - p.y(), q.z() - p.z()];
            let proj = diff.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>() / dn;
            let c = [q.x() - proj * d[0], q.y() - proj * d[1], q.z() - proj * d[2]];
            if let Ok(q) = BlochPoint::new(c[0], c[1], c[2]) {
                if p.distance(&q) > 0.05 {
                    break (p, q);
                }
            }
        };
        let (a, b) = (density(&p)?, density(&q)?);
        let got = s.solver(&t)?.distance(&a, &b)?;
        all_converged &= got.converged;
        let o = spectral_distance_oracle(&t, &a, &b, 100_000, 1000 + k)?;
        below = below.max(o - finite_value(&got));
        above = above.max(finite_value(&got) - o);
    }
    s.push(
        "oracle.lower",
        "random-direction oracle",
        "max (oracle - solver) over 30 random triples",
        0.0,
        below,
        1e-4,
        all_converged && below <= 1e-4,
    );
    s.at_most("oracle.upper", "random-direction oracle", "max (solver - oracle) over 30 random triples", 0.0, above, 5e-2);
    Ok(())
}

/// Largest violation of symmetry, identity and the triangle inequality.
fn metric_defect(d: &[Vec<f64>]) -> f64 {
    let n = d.len();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        worst = worst.max(d[i][i].abs());
        for j in 0..n {
            worst = worst.max((d[i][j] - d[j][i]).abs());
            for k in 0..n {
                worst = worst.max(d[i][k] - d[i][j] - d[j][k]);
            }
        }
    }
    worst
}

fn metric_axioms(s: &mut Suite) -> Result<()> {
    let mut r = rng(12);
    let solver = s.solver(&m2_diagonal_triple(1.0, 3.0)?)?;
    let states: Vec<DensityState> =
        (0..6).map(|_| density(&at_height(0.3, r.random_range(0.0..1.0), r.random_range(0.0..2.0 * PI)))).collect::<Result<_>>()?;
    let mut dd = vec![vec![0.0; 6]; 6];
    for i in 0..6 {
        for j in 0..6 {
            dd[i][j] = finite_value(&solver.distance(&states[i], &states[j])?);
        }
    }
    s.at_most("metric.spectral", "metric axioms", "spectral distance on six equal-height states", 0.0, metric_defect(&dd), 2e-4);

    let sample = pure_sample_costs("m2-moyal", to_states(&fibonacci_sphere(30))?, &moyal())?;
    let alg = m2_moyal_algebra();
    let mixed: Vec<DensityState> = (0..6).map(|_| density(&ball_point(&mut r))).collect::<Result<_>>()?;
    let mut wd = vec![vec![0.0; 6]; 6];
    for i in 0..6 {
        for j in 0..6 {
            wd[i][j] = wd_distance(&sample, &alg, &mixed[i], &mixed[j])?.value;
        }
    }
    s.at_most("metric.wd", "metric axioms", "W_D on six mixed states", 0.0, metric_defect(&wd), 2e-4);

    let spaces = [
        ("cycle", make_cost_space(SpaceSpec::Cycle(12))?),
        ("interval", make_cost_space(SpaceSpec::Interval(12))?),
        (
            "two-sheet",
            make_cost_space(SpaceSpec::TwoSheet { base: Box::new(make_cost_space(SpaceSpec::Cycle(6))?), inv_m: 0.25 })?,
        ),
    ];
    for (name, space) in &spaces {
        s.at_most(
            &format!("metric.space.{name}"),
            "metric axioms",
            &format!("cost matrix of {name}"),
            0.0,
            metric_defect(space.cost_matrix()),
            1e-12,
        );
        let margs: Vec<ProbabilityVector> =
            (0..5).map(|_| random_marginal(&mut r, space.size(), 4)).collect::<Result<_>>()?;
        let mut w = vec![vec![0.0; 5]; 5];
        for i in 0..5 {
            for j in 0..5 {
                w[i][j] = wasserstein_primal(space, &margs[i], &margs[j])?.value;
            }
        }
        s.at_most(
            &format!("metric.wasserstein.{name}"),
            "metric axioms",
            &format!("W between five measures on {name}"),
            0.0,
            metric_defect(&w),
            1e-8,
        );
    }
    Ok(())
}

fn chord_example(s: &mut Suite) -> Result<()> {
    let pts = sphere_sample("fib:50+poles+point:1,0,0+point:-1,0,0")?;
    let sample = pure_sample_costs("m2-moyal", to_states(&pts)?, &moyal())?;
    let phi = density(&BlochPoint::new(0.5, 0.0, 0.0)?)?;
    let psi = density(&BlochPoint::new(-0.5, 0.0, 0.0)?)?;
    let wd = wd_distance(&sample, &m2_moyal_algebra(), &phi, &psi)?;
    s.close("wd.chord-example", "Moyal chords", "W_D between (0.5,0,0) and (-0.5,0,0), theta = 2", 1.0, wd.value, 1e-6);
    Ok(())
}

/// Runs every check. Solver-backed checks use `opts` and also require the
/// solver to report convergence.
pub fn verify_suite(opts: &SolverOptions) -> Result<VerificationReport> {
    opts.validate()?;
    let mut s = Suite { opts: opts.clone(), checks: Vec::new() };
    two_point(&mut s)?;
    diagonal(&mut s)?;
    duality(&mut s)?;
    cycle_interval(&mut s)?;
    inclusion(&mut s)?;
    chords(&mut s)?;
    lambda(&mut s)?;
    moyal_checks(&mut s)?;
    two_sheet(&mut s)?;
    non_uniqueness(&mut s)?;
    oracle(&mut s)?;
    metric_axioms(&mut s)?;
    chord_example(&mut s)?;
    let overall = s.checks.iter().all(|c| c.pass);
    Ok(VerificationReport { checks: s.checks, overall })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suite_passes() {
        let report = verify_suite(&SolverOptions::default()).unwrap();
        let failed: Vec<_> = report.failures().iter().map(|c| (c.id.clone(), c.computed.0)).collect();
        assert!(report.overall, "{failed:?}");
    }
}
