//! The transport-like distance `W_D` over a finite sample of pure states.
//!
//! Elements whose evaluation gaps between sampled pure states are bounded by
//! the pure-state spectral distance form the constraint set; `W_D(φ, ψ)` is
//! the largest gap `φ(a) - ψ(a)` over that set. Dropping constraints only
//! enlarges the set, so sampled values bound the exact ones from above.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::connes::{SolverOptions, SpectralDistanceSolver, StateDistance};
use crate::error::{Error, Result};
use crate::json::{from_ext_rows, to_ext_rows, ExtReal};
use crate::linalg;
use crate::lp::{LinearProgram, LpOutcome};
use crate::models::{bloch_to_density, fibonacci_sphere, latitude_rings, BlochPoint};
use crate::transport::TransportPlan;
use crate::triple::{state_evaluate, AlgebraElement, DensityState, FiniteSpectralTriple};

/// Relative size of the state difference outside the span of sampled
/// differences above which `W_D` is infinite.
pub const SPAN_TOL: f64 = 1e-8;
/// Two states are the same sample point below this max-entry distance.
pub const SAME_STATE_TOL: f64 = 1e-9;

/// Pure states with their pairwise distances.
#[derive(Clone, Debug, PartialEq)]
pub struct PureStateSample {
    triple_label: String,
    states: Vec<DensityState>,
    costs: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct SampleJson {
    triple: String,
    states: Vec<DensityState>,
    costs: Vec<Vec<ExtReal>>,
}

impl Serialize for PureStateSample {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SampleJson {
            triple: self.triple_label.clone(),
            states: self.states.clone(),
            costs: to_ext_rows(&self.costs),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PureStateSample {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = SampleJson::deserialize(d)?;
        PureStateSample::new(j.triple, j.states, from_ext_rows(j.costs)).map_err(serde::de::Error::custom)
    }
}

impl PureStateSample {
    pub fn new(triple_label: impl Into<String>, states: Vec<DensityState>, costs: Vec<Vec<f64>>) -> Result<Self> {
        let k = states.len();
        if let Some(i) = states.iter().position(|s| !s.is_pure()) {
            return Err(Error::validation(format!("sample state {i} is not pure")));
        }
        if costs.len() != k || costs.iter().any(|r| r.len() != k) {
            return Err(Error::dims(format!("cost matrix must be {k}x{k}")));
        }
        for i in 0..k {
            if costs[i][i] != 0.0 {
                return Err(Error::validation(format!("nonzero diagonal cost at {i}")));
            }
            for j in 0..k {
                let (c, o) = (costs[i][j], costs[j][i]);
                if c.is_nan() || c < 0.0 || (c != o && (c - o).abs() > 1e-12 * (1.0 + c.abs())) {
                    return Err(Error::validation(format!("bad cost at ({i}, {j})")));
                }
            }
        }
        Ok(PureStateSample { triple_label: triple_label.into(), states, costs })
    }

    pub fn triple_label(&self) -> &str {
        &self.triple_label
    }

    pub fn states(&self) -> &[DensityState] {
        &self.states
    }

    pub fn costs(&self) -> &[Vec<f64>] {
        &self.costs
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Index of a sampled state equal to `s`.
    pub fn index_of(&self, s: &DensityState) -> Option<usize> {
        self.states
            .iter()
            .position(|x| x.dim() == s.dim() && x.max_abs_diff(s) <= SAME_STATE_TOL)
    }

    pub fn constraints(&self) -> LipDConstraintSet {
        let mut pairs = Vec::new();
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                if self.costs[i][j].is_finite() {
                    pairs.push((i, j, self.costs[i][j]));
                }
            }
        }
        LipDConstraintSet { pairs }
    }
}

/// Constraints `|a(ωᵢ) - a(ωⱼ)| ≤ cᵢⱼ` over pairs with finite cost.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LipDConstraintSet {
    pub pairs: Vec<(usize, usize, f64)>,
}

impl LipDConstraintSet {
    /// Largest violation `|a(ωᵢ) - a(ωⱼ)| - cᵢⱼ` (negative when strictly
    /// satisfied).
    pub fn max_violation(&self, evaluations: &[f64]) -> f64 {
        self.pairs
            .iter()
            .map(|&(i, j, c)| (evaluations[i] - evaluations[j]).abs() - c)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Evaluations `ωᵢ(a)` of an element on every sampled state.
pub fn sample_evaluations(sample: &PureStateSample, t: &FiniteSpectralTriple, a: &AlgebraElement) -> Result<Vec<f64>> {
    sample.states().iter().map(|s| state_evaluate(s, t, a)).collect()
}

/// Pairwise costs from any state distance, assembled in parallel.
pub fn pure_sample_costs(
    label: impl Into<String>,
    states: Vec<DensityState>,
    metric: &dyn StateDistance,
) -> Result<PureStateSample> {
    if let Some(i) = states.iter().position(|s| !s.is_pure()) {
        return Err(Error::validation(format!("sample state {i} is not pure")));
    }
    let k = states.len();
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let d = metric.distance(&states[i], &states[j])?;
            Ok(if d.finite { d.value } else { f64::INFINITY })
        })
        .collect::<Result<_>>()?;
    let mut costs = vec![vec![0.0; k]; k];
    for (&(i, j), v) in pairs.iter().zip(values) {
        costs[i][j] = v;
        costs[j][i] = v;
    }
    PureStateSample::new(label, states, costs)
}

/// Pairwise spectral distances computed by the general solver.
pub fn pure_sample_cost_matrix(
    t: &FiniteSpectralTriple,
    states: Vec<DensityState>,
    opts: &SolverOptions,
) -> Result<PureStateSample> {
    let solver = SpectralDistanceSolver::new(t, opts.clone())?;
    pure_sample_costs(t.label(), states, &solver)
}

#[derive(Clone, Debug, PartialEq)]
pub struct WdResult {
    pub finite: bool,
    pub value: f64,
    /// Maximizer in the constraint set; absent when the value is infinite.
    pub witness: Option<AlgebraElement>,
}

#[derive(Serialize, Deserialize)]
struct WdJson {
    finite: bool,
    value: ExtReal,
    witness: Option<AlgebraElement>,
}

impl Serialize for WdResult {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        WdJson { finite: self.finite, value: ExtReal(self.value), witness: self.witness.clone() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for WdResult {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = WdJson::deserialize(d)?;
        Ok(WdResult { finite: j.finite, value: j.value.0, witness: j.witness })
    }
}

/// `max Σ cₖ Tr((φ - ψ) bₖ)` over the sampled constraint set.
///
/// Solved through its dual `min Σ cᵢⱼ (t⁺ᵢⱼ + t⁻ᵢⱼ)` subject to
/// `Σ (t⁺ᵢⱼ - t⁻ᵢⱼ)(Fᵢ - Fⱼ) = g`, where `Fᵢ` are the sampled state
/// functionals and `g` that of `φ - ψ`, written in an orthonormal basis of the
/// span of the `Fᵢ - Fⱼ`. A `g` outside that span means the primal is
/// unbounded. The maximizer is read off the dual multipliers.
pub fn wd_distance(
    sample: &PureStateSample,
    t: &FiniteSpectralTriple,
    phi: &DensityState,
    psi: &DensityState,
) -> Result<WdResult> {
    if sample.is_empty() {
        return Err(Error::validation("empty sample"));
    }
    let n = t.basis_size();
    let fp = t.state_functional(phi)?;
    let fq = t.state_functional(psi)?;
    let g: Vec<f64> = fp.iter().zip(&fq).map(|(a, b)| a - b).collect();
    if phi == psi || linalg::norm(&g) == 0.0 {
        return Ok(WdResult { finite: true, value: 0.0, witness: Some(AlgebraElement::zeros(n)) });
    }
    let feats: Vec<Vec<f64>> = sample
        .states()
        .iter()
        .map(|s| t.state_functional(s))
        .collect::<Result<_>>()?;
    let cons = sample.constraints();
    let diffs: Vec<Vec<f64>> = cons
        .pairs
        .iter()
        .map(|&(i, j, _)| feats[i].iter().zip(&feats[j]).map(|(a, b)| a - b).collect())
        .collect();

    let q = span_basis(&diffs, n);
    let coords = |v: &[f64]| -> Vec<f64> { q.iter().map(|e| linalg::dot(e, v)).collect() };
    let gq = coords(&g);
    let mut resid = g.clone();
    for (e, c) in q.iter().zip(&gq) {
        resid.iter_mut().zip(e).for_each(|(r, x)| *r -= c * x);
    }
    if linalg::norm(&resid) > SPAN_TOL * (1.0 + linalg::norm(&g)) {
        return Ok(WdResult { finite: false, value: f64::INFINITY, witness: None });
    }

    let mut lp = LinearProgram::new(gq);
    for (d, &(_, _, c)) in diffs.iter().zip(&cons.pairs) {
        let dq: Vec<(usize, f64)> = coords(d).into_iter().enumerate().collect();
        let neg: Vec<(usize, f64)> = dq.iter().map(|&(r, v)| (r, -v)).collect();
        lp.add_column(c, 0.0, f64::INFINITY, &dq)?;
        lp.add_column(c, 0.0, f64::INFINITY, &neg)?;
    }
    let sol = match lp.solve()? {
        LpOutcome::Optimal(s) => s,
        LpOutcome::Infeasible => return Ok(WdResult { finite: false, value: f64::INFINITY, witness: None }),
        LpOutcome::Unbounded => return Err(Error::Degenerate("W_D dual LP unbounded".into())),
    };
    let mut c = vec![0.0; n];
    for (e, y) in q.iter().zip(&sol.duals) {
        c.iter_mut().zip(e).for_each(|(x, v)| *x += y * v);
    }
    Ok(WdResult { finite: true, value: sol.objective.max(0.0), witness: Some(AlgebraElement::new(c)) })
}

/// Orthonormal basis of the span of `vectors` in `R^n`.
fn span_basis(vectors: &[Vec<f64>], n: usize) -> Vec<Vec<f64>> {
    let mut gram = vec![vec![0.0; n]; n];
    for v in vectors {
        for i in 0..n {
            for j in 0..n {
                gram[i][j] += v[i] * v[j];
            }
        }
    }
    let (vals, vecs) = linalg::symmetric_eigen(&gram);
    let top = vals.iter().fold(0.0f64, |a, &v| a.max(v));
    if top == 0.0 {
        return Vec::new();
    }
    vals.iter()
        .zip(vecs)
        .filter(|(&v, _)| v > 1e-12 * top)
        .map(|(_, e)| e)
        .collect()
}

/// Largest rescaling of a non-Lipschitz element that satisfies every sampled
/// constraint, with the pair that certifies it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LambdaRescale {
    pub lambda: f64,
    pub pair: (usize, usize),
}

/// `λ_a = min cᵢⱼ / |a(ωᵢ) - a(ωⱼ)|` over violated finite-cost pairs.
pub fn lambda_rescale(sample: &PureStateSample, t: &FiniteSpectralTriple, a: &AlgebraElement) -> Result<LambdaRescale> {
    let ev = sample_evaluations(sample, t, a)?;
    let mut best: Option<LambdaRescale> = None;
    for (i, j, c) in sample.constraints().pairs {
        let gap = (ev[i] - ev[j]).abs();
        if gap > c {
            let lambda = c / gap;
            if best.as_ref().map_or(true, |b| lambda < b.lambda) {
                best = Some(LambdaRescale { lambda, pair: (i, j) });
            }
        }
    }
    best.ok_or_else(|| Error::NotApplicable("element already satisfies every sampled constraint".into()))
}

/// `min ⟨c, π⟩` over couplings of sphere-sample measures whose barycenters
/// are `phi` and `psi`.
pub fn quotient_transport(
    points: &[BlochPoint],
    costs: &[Vec<f64>],
    phi: &BlochPoint,
    psi: &BlochPoint,
) -> Result<TransportPlan> {
    let k = points.len();
    if k == 0 {
        return Err(Error::validation("empty sample"));
    }
    if let Some(i) = points.iter().position(|p| !p.is_pure()) {
        return Err(Error::validation(format!("sample point {i} is not on the sphere")));
    }
    if costs.len() != k || costs.iter().any(|r| r.len() != k) {
        return Err(Error::dims(format!("cost matrix must be {k}x{k}")));
    }
    let mut rhs = vec![1.0];
    rhs.extend(phi.coords());
    rhs.extend(psi.coords());
    let mut lp = LinearProgram::new(rhs);
    let mut cells = Vec::new();
    for i in 0..k {
        for j in 0..k {
            let c = costs[i][j];
            if !c.is_finite() {
                continue;
            }
            let (p, q) = (points[i].coords(), points[j].coords());
            let mut col = vec![(0, 1.0)];
            col.extend((0..3).map(|r| (1 + r, p[r])));
            col.extend((0..3).map(|r| (4 + r, q[r])));
            lp.add_column(c, 0.0, f64::INFINITY, &col)?;
            cells.push((i, j));
        }
    }
    match lp.solve()? {
        LpOutcome::Optimal(sol) => {
            let mut plan = vec![vec![0.0; k]; k];
            for (&(i, j), &x) in cells.iter().zip(&sol.x) {
                plan[i][j] = x.max(0.0);
            }
            Ok(TransportPlan { plan, value: sol.objective.max(0.0) })
        }
        LpOutcome::Infeasible => Err(Error::Infeasible(
            "barycenters are not reachable from the sample".into(),
        )),
        LpOutcome::Unbounded => Err(Error::Degenerate("quotient LP unbounded".into())),
    }
}

/// Outcome of comparing the three chord quantities.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Prop2Report {
    /// Distance between the two mixtures.
    pub spectral: ExtReal,
    /// `|λ - λ̃|` times the sampled cost between the endpoints.
    pub scaled_cost: ExtReal,
    pub wd: ExtReal,
    pub tol: f64,
    pub all_equal: bool,
    /// The distance never exceeds the sampled `W_D` (beyond `tol`).
    pub bounded_by_wd: bool,
}

/// Compares, for `φ_λ = λω₁ + (1-λ)ω₂`, the distance `d(φ_λ, φ_λ̃)`, the
/// scaled endpoint cost and the sampled `W_D(φ_λ, φ_λ̃)`.
#[allow(clippy::too_many_arguments)]
pub fn prop2_check(
    sample: &PureStateSample,
    t: &FiniteSpectralTriple,
    omega1: &DensityState,
    omega2: &DensityState,
    lambda: f64,
    lambda_tilde: f64,
    metric: &dyn StateDistance,
    tol: f64,
) -> Result<Prop2Report> {
    for l in [lambda, lambda_tilde] {
        if !(0.0..=1.0).contains(&l) {
            return Err(Error::validation(format!("mixing weight {l} not in [0, 1]")));
        }
    }
    let (Some(i), Some(j)) = (sample.index_of(omega1), sample.index_of(omega2)) else {
        return Err(Error::validation("chord endpoints must belong to the sample"));
    };
    let a = omega1.mix(omega2, lambda)?;
    let b = omega1.mix(omega2, lambda_tilde)?;
    let d = metric.distance(&a, &b)?;
    let spectral = if d.finite { d.value } else { f64::INFINITY };
    let scaled = if lambda == lambda_tilde {
        0.0
    } else {
        (lambda - lambda_tilde).abs() * sample.costs()[i][j]
    };
    let wd = wd_distance(sample, t, &a, &b)?;
    let close = |x: f64, y: f64| (x.is_infinite() && x == y) || (x - y).abs() <= tol;
    Ok(Prop2Report {
        spectral: ExtReal(spectral),
        scaled_cost: ExtReal(scaled),
        wd: ExtReal(wd.value),
        tol,
        all_equal: close(spectral, scaled) && close(scaled, wd.value) && close(spectral, wd.value),
        bounded_by_wd: spectral <= wd.value + tol || wd.value.is_infinite(),
    })
}

/// Points of the Bloch sphere described by `part+part+...` where each part is
/// `fib:N` (Fibonacci lattice), `rings:R:P` (latitude circles), `poles`, or
/// `point:x,y,z`. Near-duplicates are dropped, keeping the first.
pub fn sphere_sample(spec: &str) -> Result<Vec<BlochPoint>> {
    let mut out: Vec<BlochPoint> = Vec::new();
    let parse_n = |s: &str| -> Result<usize> {
        s.trim().parse::<usize>().map_err(|_| Error::Parse(format!("bad count {s:?} in sample spec")))
    };
    for part in spec.split('+').map(str::trim).filter(|p| !p.is_empty()) {
        let (head, rest) = part.split_once(':').unwrap_or((part, ""));
        let pts = match head {
            "fib" => fibonacci_sphere(parse_n(rest)?),
            "poles" => vec![BlochPoint::NORTH, BlochPoint::SOUTH],
            "rings" => {
                let (r, p) = rest
                    .split_once(':')
                    .ok_or_else(|| Error::Parse(format!("expected rings:R:P, got {part:?}")))?;
                latitude_rings(parse_n(r)?, parse_n(p)?, 0.0)
            }
            "point" => {
                let v: Vec<f64> = rest
                    .split(',')
                    .map(|x| x.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::Parse(format!("bad point {rest:?}")))?;
                let [x, y, z] = v[..] else {
                    return Err(Error::Parse(format!("point needs 3 coordinates, got {rest:?}")));
                };
                let p = BlochPoint::new(x, y, z)?;
                if !p.is_pure() {
                    return Err(Error::validation(format!("sample point {rest} is not on the sphere")));
                }
                vec![p]
            }
            _ => return Err(Error::Parse(format!("unknown sample part {part:?}"))),
        };
        for p in pts {
            if out.iter().all(|q| q.distance(&p) > 1e-12) {
                out.push(p);
            }
        }
    }
    if out.is_empty() {
        return Err(Error::validation("sample spec produced no points"));
    }
    Ok(out)
}

/// Density matrices of Bloch points.
pub fn densities(points: &[BlochPoint]) -> Result<Vec<DensityState>> {
    points.iter().map(bloch_to_density).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connes::spectral_distance;
    use crate::linalg::Complex;
    use crate::models::{
        m2_diagonal_triple, m2_moyal_algebra, two_point_triple, M2DiagonalModel, MoyalCostParams, MoyalModel,
        TwoPointModel,
    };
    use crate::triple::{commutator_norm, in_lipschitz_ball};

    fn moyal_sample(spec: &str) -> (PureStateSample, FiniteSpectralTriple) {
        let pts = sphere_sample(spec).unwrap();
        let model = MoyalModel { params: MoyalCostParams::new(2.0).unwrap() };
        (pure_sample_costs("m2-moyal", densities(&pts).unwrap(), &model).unwrap(), m2_moyal_algebra())
    }

    fn bloch(x: f64, y: f64, z: f64) -> DensityState {
        bloch_to_density(&BlochPoint::new(x, y, z).unwrap()).unwrap()
    }

    fn two_point_sample(m: f64) -> (PureStateSample, FiniteSpectralTriple) {
        let t = two_point_triple(Complex::new(m, 0.0), false);
        let states = vec![DensityState::basis_projector(2, 0).unwrap(), DensityState::basis_projector(2, 1).unwrap()];
        (pure_sample_cost_matrix(&t, states, &SolverOptions::default()).unwrap(), t)
    }

    #[test]
    fn two_point_costs() {
        let (s, _) = two_point_sample(2.0);
        assert_eq!(s.costs()[0][0], 0.0);
        assert!((s.costs()[0][1] - 0.5).abs() < 1e-4);
        assert_eq!(s.costs()[0][1], s.costs()[1][0]);
    }

    #[test]
    fn differing_heights_give_infinite_costs() {
        let t = m2_diagonal_triple(1.0, 3.0).unwrap();
        let states = vec![bloch(0.0, 0.0, 1.0), bloch(1.0, 0.0, 0.0)];
        let s = pure_sample_cost_matrix(&t, states, &SolverOptions::default()).unwrap();
        assert_eq!(s.costs()[0][1], f64::INFINITY);
        assert!(s.constraints().pairs.is_empty());
    }

    #[test]
    fn mixed_states_are_rejected() {
        let t = m2_diagonal_triple(1.0, 3.0).unwrap();
        let e = pure_sample_cost_matrix(&t, vec![DensityState::maximally_mixed(2)], &SolverOptions::default());
        assert!(e.is_err());
    }

    #[test]
    fn moyal_chord_value() {
        let (s, t) = moyal_sample("fib:50+poles+point:1,0,0+point:-1,0,0");
        let phi = bloch(0.5, 0.0, 0.0);
        let psi = bloch(-0.5, 0.0, 0.0);
        let r = wd_distance(&s, &t, &phi, &psi).unwrap();
        assert!(r.finite);
        assert!((r.value - 1.0).abs() < 1e-9, "{}", r.value);
        let w = r.witness.unwrap();
        let ev = sample_evaluations(&s, &t, &w).unwrap();
        assert!(s.constraints().max_violation(&ev) <= 1e-8);
        let gap = state_evaluate(&phi, &t, &w).unwrap() - state_evaluate(&psi, &t, &w).unwrap();
        assert!((gap - r.value).abs() < 1e-9);
        assert_eq!(wd_distance(&s, &t, &phi, &phi).unwrap().value, 0.0);
    }

    #[test]
    fn differing_heights_make_wd_infinite() {
        let t = m2_diagonal_triple(1.0, 3.0).unwrap();
        let pts = sphere_sample("rings:4:6").unwrap();
        let s = pure_sample_costs("diag", densities(&pts).unwrap(), &M2DiagonalModel { d1: 1.0, d2: 3.0 }).unwrap();
        let r = wd_distance(&s, &t, &bloch(0.0, 0.0, 0.5), &bloch(0.0, 0.0, -0.5)).unwrap();
        assert!(!r.finite);
    }

    #[test]
    fn lambda_two_point() {
        let t = two_point_triple(Complex::new(1.0, 0.0), false);
        let states = vec![DensityState::basis_projector(2, 0).unwrap(), DensityState::basis_projector(2, 1).unwrap()];
        let s = pure_sample_costs("tp", states, &TwoPointModel { m: Complex::new(1.0, 0.0) }).unwrap();
        let a = AlgebraElement::new(vec![2.0, 0.0]);
        let l = lambda_rescale(&s, &t, &a).unwrap();
        assert!((l.lambda - 0.5).abs() < 1e-15);
        assert!((1.0 / commutator_norm(&t, &a).unwrap() - l.lambda).abs() < 1e-12);
        assert!(in_lipschitz_ball(&t, &a.scale(l.lambda), 1e-12).unwrap());
        let one = AlgebraElement::new(vec![1.0, 1.0]);
        assert!(matches!(lambda_rescale(&s, &t, &one), Err(Error::NotApplicable(_))));
    }

    #[test]
    fn prop2_two_point_and_equator() {
        let (s, t) = two_point_sample(2.0);
        let solver = SpectralDistanceSolver::new(&t, SolverOptions::default()).unwrap();
        let r = prop2_check(&s, &t, &s.states()[0].clone(), &s.states()[1].clone(), 1.0, 0.0, &solver, 2e-4).unwrap();
        assert!(r.all_equal && r.bounded_by_wd, "{r:?}");
        assert!((r.wd.0 - 0.5).abs() < 2e-4);
        let r = prop2_check(&s, &t, &s.states()[0].clone(), &s.states()[1].clone(), 0.3, 0.3, &solver, 1e-12).unwrap();
        assert_eq!((r.spectral.0, r.scaled_cost.0, r.wd.0), (0.0, 0.0, 0.0));

        let t = m2_diagonal_triple(1.0, 3.0).unwrap();
        let pts = sphere_sample("rings:3:8+point:1,0,0+point:0,1,0").unwrap();
        let s = pure_sample_costs("diag", densities(&pts).unwrap(), &M2DiagonalModel { d1: 1.0, d2: 3.0 }).unwrap();
        let solver = SpectralDistanceSolver::new(&t, SolverOptions::default()).unwrap();
        let r = prop2_check(&s, &t, &bloch(1.0, 0.0, 0.0), &bloch(0.0, 1.0, 0.0), 0.9, 0.1, &solver, 2e-4).unwrap();
        let expected = 0.8 * std::f64::consts::SQRT_2 / 2.0;
        assert!(r.all_equal, "{r:?}");
        assert!((r.scaled_cost.0 - expected).abs() < 1e-12);
        assert!(prop2_check(&s, &t, &bloch(0.0, 0.0, 0.0), &bloch(0.0, 1.0, 0.0), 0.9, 0.1, &solver, 2e-4).is_err());
    }

    #[test]
    fn quotient_examples() {
        let pts = sphere_sample("poles").unwrap();
        let p = MoyalCostParams::new(2.0).unwrap();
        let costs: Vec<Vec<f64>> = pts
            .iter()
            .map(|a| pts.iter().map(|b| crate::models::moyal_ball_cost(a, b, &p)).collect())
            .collect();
        let r = quotient_transport(&pts, &costs, &BlochPoint::NORTH, &BlochPoint::SOUTH).unwrap();
        assert!((r.value - costs[0][1]).abs() < 1e-12);
        let r = quotient_transport(&pts, &costs, &BlochPoint::ORIGIN, &BlochPoint::ORIGIN).unwrap();
        assert!(r.value.abs() < 1e-12);
        let off = BlochPoint::new(0.5, 0.0, 0.0).unwrap();
        assert!(matches!(quotient_transport(&pts, &costs, &off, &off), Err(Error::Infeasible(_))));
    }

    #[test]
    fn quotient_on_chord_is_between_bounds() {
        let pts = sphere_sample("fib:24+poles").unwrap();
        let p = MoyalCostParams::new(2.0).unwrap();
        let costs: Vec<Vec<f64>> = pts
            .iter()
            .map(|a| pts.iter().map(|b| crate::models::moyal_ball_cost(a, b, &p)).collect())
            .collect();
        let (a, b) = (BlochPoint::new(0.5, 0.0, 0.0).unwrap(), BlochPoint::new(-0.5, 0.0, 0.0).unwrap());
        let r = quotient_transport(&pts, &costs, &a, &b).unwrap();
        assert!(r.value >= crate::models::moyal_ball_cost(&a, &b, &p) - 1e-9);
    }

    #[test]
    fn sample_grammar() {
        let pts = sphere_sample("fib:10+poles+point:1,0,0").unwrap();
        assert_eq!(pts.len(), 13);
        assert_eq!(sphere_sample("poles+poles").unwrap().len(), 2);
        assert!(sphere_sample("point:0.5,0,0").is_err());
        assert!(sphere_sample("cube:3").is_err());
        assert!(sphere_sample("").is_err());
    }

    #[test]
    fn sample_json_round_trip() {
        let (s, _) = moyal_sample("poles+point:1,0,0");
        let text = serde_json::to_string(&s).unwrap();
        let back: PureStateSample = serde_json::from_str(&text).unwrap();
        assert_eq!(back.costs(), s.costs());
        assert_eq!(back.triple_label(), "m2-moyal");
    }

    #[test]
    fn distance_bounded_by_wd_on_equator() {
        let t = m2_diagonal_triple(1.0, 3.0).unwrap();
        let pts = sphere_sample("rings:5:10").unwrap();
        let s = pure_sample_costs("diag", densities(&pts).unwrap(), &M2DiagonalModel { d1: 1.0, d2: 3.0 }).unwrap();
        let z = pts[12].z();
        let a = bloch(0.3, 0.1, z);
        let b = bloch(-0.2, 0.4, z);
        let d = spectral_distance(&t, &a, &b, &SolverOptions::default()).unwrap();
        let w = wd_distance(&s, &t, &a, &b).unwrap();
        assert!(w.finite && d.finite);
        assert!(d.value <= w.value + 2e-4, "{} > {}", d.value, w.value);
    }
}
