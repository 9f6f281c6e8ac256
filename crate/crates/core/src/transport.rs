//! Wasserstein-1 on finite cost spaces: the transport LP, its Kantorovich
//! dual, and the example spaces (cycle, open interval, two sheets).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::json::{from_ext_rows, to_ext_rows, ExtReal};
use crate::lp::{LinearProgram, LpOutcome};
use crate::models::two_sheet_cost;

pub const SYMMETRY_TOL: f64 = 1e-12;
pub const TRIANGLE_TOL: f64 = 1e-9;
const WEIGHT_TOL: f64 = 1e-10;

/// Point set with a symmetric cost matrix in `[0, +∞]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteCostSpace {
    points: Vec<String>,
    cost: Vec<Vec<f64>>,
    metric: bool,
}

#[derive(Serialize, Deserialize)]
struct SpaceJson {
    #[serde(default)]
    points: Vec<serde_json::Value>,
    cost: Vec<Vec<ExtReal>>,
    #[serde(default)]
    metric: bool,
}

impl Serialize for FiniteCostSpace {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SpaceJson {
            points: self.points.iter().cloned().map(serde_json::Value::String).collect(),
            cost: to_ext_rows(&self.cost),
            metric: self.metric,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FiniteCostSpace {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = SpaceJson::deserialize(d)?;
        let cost = from_ext_rows(j.cost);
        let points = if j.points.is_empty() {
            (0..cost.len()).map(|i| i.to_string()).collect()
        } else {
            j.points
                .into_iter()
                .map(|v| match v {
                    serde_json::Value::String(s) => s,
                    other => other.to_string(),
                })
                .collect()
        };
        FiniteCostSpace::new(points, cost, j.metric).map_err(serde::de::Error::custom)
    }
}

impl FiniteCostSpace {
    /// Validates shape, sign and symmetry, and for `metric` also zero diagonal
    /// and the triangle inequality.
    pub fn new(points: Vec<String>, cost: Vec<Vec<f64>>, metric: bool) -> Result<Self> {
        let k = points.len();
        if k == 0 {
            return Err(Error::validation("cost space needs at least one point"));
        }
        if cost.len() != k || cost.iter().any(|r| r.len() != k) {
            return Err(Error::dims(format!("cost matrix must be {k}x{k}")));
        }
        for (i, row) in cost.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                if c.is_nan() || c < 0.0 {
                    return Err(Error::validation(format!("cost[{i}][{j}] = {c} is not in [0, inf]")));
                }
                let o = cost[j][i];
                let asym = if c.is_infinite() || o.is_infinite() {
                    c != o
                } else {
                    (c - o).abs() > SYMMETRY_TOL * (1.0 + c.abs())
                };
                if asym {
                    return Err(Error::validation(format!("cost is not symmetric at ({i}, {j})")));
                }
            }
        }
        if metric {
            if let Some(i) = (0..k).find(|&i| cost[i][i] != 0.0) {
                return Err(Error::validation(format!("metric cost has nonzero diagonal at {i}")));
            }
            if let Some((i, j, l)) = triangle_violation(&cost, TRIANGLE_TOL) {
                return Err(Error::validation(format!(
                    "triangle inequality fails: c({i},{j}) > c({i},{l}) + c({l},{j})"
                )));
            }
        }
        Ok(FiniteCostSpace { points, cost, metric })
    }

    pub fn size(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[String] {
        &self.points
    }

    pub fn cost(&self, i: usize, j: usize) -> f64 {
        self.cost[i][j]
    }

    pub fn cost_matrix(&self) -> &[Vec<f64>] {
        &self.cost
    }

    pub fn is_metric(&self) -> bool {
        self.metric
    }

    /// Largest finite cost.
    pub fn max_finite_cost(&self) -> f64 {
        self.cost
            .iter()
            .flatten()
            .filter(|c| c.is_finite())
            .fold(0.0, |a, &c| a.max(c))
    }
}

/// First `(i, j, l)` with `c(i,j) > c(i,l) + c(l,j) + tol`.
pub fn triangle_violation(cost: &[Vec<f64>], tol: f64) -> Option<(usize, usize, usize)> {
    let k = cost.len();
    for i in 0..k {
        for j in 0..k {
            for l in 0..k {
                let via = cost[i][l] + cost[l][j];
                if via.is_finite() && cost[i][j] > via + tol {
                    return Some((i, j, l));
                }
            }
        }
    }
    None
}

/// Probability weights on the points of a cost space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbabilityVector(Vec<f64>);

impl TryFrom<Vec<f64>> for ProbabilityVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        ProbabilityVector::new(v)
    }
}

impl From<ProbabilityVector> for Vec<f64> {
    fn from(p: ProbabilityVector) -> Self {
        p.0
    }
}

impl ProbabilityVector {
    /// Entries in `[-1e-12, 0)` are clamped to zero; the sum must be 1 within
    /// `1e-10` and is then renormalized exactly.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::validation("empty probability vector"));
        }
        let mut w = weights;
        for (i, x) in w.iter_mut().enumerate() {
            if !x.is_finite() || *x < -1e-12 {
                return Err(Error::validation(format!("weight {i} = {x} is not a probability")));
            }
            *x = x.max(0.0);
        }
        let s: f64 = w.iter().sum();
        if (s - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::validation(format!("weights sum to {s}, expected 1")));
        }
        w.iter_mut().for_each(|x| *x /= s);
        Ok(ProbabilityVector(w))
    }

    /// Point mass at `i` among `k` points.
    pub fn dirac(k: usize, i: usize) -> Result<Self> {
        if i >= k {
            return Err(Error::dims(format!("point {i} out of range for {k} points")));
        }
        let mut w = vec![0.0; k];
        w[i] = 1.0;
        Ok(ProbabilityVector(w))
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::validation("empty probability vector"));
        }
        Ok(ProbabilityVector(vec![1.0 / k as f64; k]))
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.0.len()).filter(|&i| self.0[i] > 0.0).collect()
    }
}

/// Optimal coupling; `plan` is empty when no finite-cost coupling exists.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportPlan {
    pub plan: Vec<Vec<f64>>,
    pub value: f64,
}

#[derive(Serialize, Deserialize)]
struct PlanJson {
    value: ExtReal,
    plan: Vec<Vec<f64>>,
}

impl Serialize for TransportPlan {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PlanJson { value: ExtReal(self.value), plan: self.plan.clone() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for TransportPlan {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = PlanJson::deserialize(d)?;
        Ok(TransportPlan { plan: j.plan, value: j.value.0 })
    }
}

/// Optimal dual potentials.
///
/// On metric spaces `potential` is a single 1-Lipschitz function on all
/// points, shifted so its minimum over the union of supports is 0. On other
/// spaces the two potentials of the dual LP are reported separately
/// (`potential` for the source, `target_potential` for the target), zero
/// off their supports, with `uᵢ + vⱼ ≤ cᵢⱼ` on the supports and the minimum
/// of `potential` over the source support equal to 0.
#[derive(Clone, Debug, PartialEq)]
pub struct LipschitzWitness {
    pub potential: Vec<f64>,
    pub target_potential: Option<Vec<f64>>,
    pub value: f64,
}

#[derive(Serialize, Deserialize)]
struct WitnessJson {
    value: ExtReal,
    potential: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target_potential: Option<Vec<f64>>,
}

impl Serialize for LipschitzWitness {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        WitnessJson {
            value: ExtReal(self.value),
            potential: self.potential.clone(),
            target_potential: self.target_potential.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LipschitzWitness {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = WitnessJson::deserialize(d)?;
        Ok(LipschitzWitness { potential: j.potential, target_potential: j.target_potential, value: j.value.0 })
    }
}

fn check_marginals(space: &FiniteCostSpace, mu: &ProbabilityVector, nu: &ProbabilityVector) -> Result<()> {
    let k = space.size();
    if mu.len() != k || nu.len() != k {
        return Err(Error::dims(format!(
            "marginals of length {} and {} on a space of {k} points",
            mu.len(),
            nu.len()
        )));
    }
    let (a, b): (f64, f64) = (mu.weights().iter().sum(), nu.weights().iter().sum());
    if (a - b).abs() > 1e-8 {
        return Err(Error::validation(format!("marginal masses differ: {a} vs {b}")));
    }
    Ok(())
}

/// Transport LP over cells of `supp μ × supp ν` with finite cost.
pub fn wasserstein_primal(
    space: &FiniteCostSpace,
    mu: &ProbabilityVector,
    nu: &ProbabilityVector,
) -> Result<TransportPlan> {
    check_marginals(space, mu, nu)?;
    let (sm, sn) = (mu.support(), nu.support());
    let mut rhs: Vec<f64> = sm.iter().map(|&i| mu.weights()[i]).collect();
    rhs.extend(sn.iter().map(|&j| nu.weights()[j]));
    let mut lp = LinearProgram::new(rhs);
    let mut cells = Vec::new();
    for (a, &i) in sm.iter().enumerate() {
        for (b, &j) in sn.iter().enumerate() {
            let c = space.cost(i, j);
            if c.is_finite() {
                lp.add_column(c, 0.0, f64::INFINITY, &[(a, 1.0), (sm.len() + b, 1.0)])?;
                cells.push((i, j));
            }
        }
    }
    match lp.solve()? {
        LpOutcome::Optimal(sol) => {
            let k = space.size();
            let mut plan = vec![vec![0.0; k]; k];
            for (&(i, j), &x) in cells.iter().zip(&sol.x) {
                plan[i][j] = x.max(0.0);
            }
            Ok(TransportPlan { plan, value: sol.objective.max(0.0) })
        }
        LpOutcome::Infeasible => Ok(TransportPlan { plan: Vec::new(), value: f64::INFINITY }),
        LpOutcome::Unbounded => Err(Error::Degenerate("transport LP reported unbounded".into())),
    }
}

/// Kantorovich dual: `max Σ uᵢμᵢ + Σ vⱼνⱼ` subject to `uᵢ + vⱼ ≤ cᵢⱼ` on
/// finite-cost support pairs, solved directly by constraint generation.
/// `+∞` when a max-flow test shows no finite-cost coupling exists.
pub fn kantorovich_dual(
    space: &FiniteCostSpace,
    mu: &ProbabilityVector,
    nu: &ProbabilityVector,
) -> Result<LipschitzWitness> {
    check_marginals(space, mu, nu)?;
    let k = space.size();
    if mu == nu && space.is_metric() {
        return Ok(LipschitzWitness { potential: vec![0.0; k], target_potential: None, value: 0.0 });
    }
    let (sm, sn) = (mu.support(), nu.support());
    if !coupling_exists(space, mu, nu, &sm, &sn) {
        return Ok(LipschitzWitness { potential: Vec::new(), target_potential: None, value: f64::INFINITY });
    }

    let cmax = space.max_finite_cost();
    let bound = 4.0 * (sm.len() + sn.len()) as f64 * cmax + 1.0;
    let mut lp = LinearProgram::new(Vec::new());
    let u: Vec<usize> = sm
        .iter()
        .map(|&i| lp.add_column(-mu.weights()[i], -bound, bound, &[]))
        .collect::<Result<_>>()?;
    let v: Vec<usize> = sn
        .iter()
        .map(|&j| lp.add_column(-nu.weights()[j], -bound, bound, &[]))
        .collect::<Result<_>>()?;
    let finite: Vec<(usize, usize)> = (0..sm.len())
        .flat_map(|a| (0..sn.len()).map(move |b| (a, b)))
        .filter(|&(a, b)| space.cost(sm[a], sn[b]).is_finite())
        .collect();
    let mut added = vec![false; finite.len()];
    let add = |lp: &mut LinearProgram, idx: usize| -> Result<()> {
        let (a, b) = finite[idx];
        let s = lp.add_column(0.0, 0.0, f64::INFINITY, &[])?;
        lp.add_row(space.cost(sm[a], sn[b]), &[(u[a], 1.0), (v[b], 1.0), (s, 1.0)])?;
        Ok(())
    };
    // Seed with the cheapest pair of every source and target.
    let mut seed: Vec<usize> = Vec::new();
    for a in 0..sm.len() {
        if let Some(idx) = cheapest(&finite, space, &sm, &sn, |p| p.0 == a) {
            seed.push(idx);
        }
    }
    for b in 0..sn.len() {
        if let Some(idx) = cheapest(&finite, space, &sm, &sn, |p| p.1 == b) {
            seed.push(idx);
        }
    }
    seed.sort_unstable();
    seed.dedup();
    for idx in seed {
        add(&mut lp, idx)?;
        added[idx] = true;
    }

    let tol = 1e-12 * (1.0 + cmax);
    let sol = loop {
        let sol = match lp.solve()? {
            LpOutcome::Optimal(s) => s,
            LpOutcome::Infeasible => return Err(Error::Degenerate("dual LP infeasible".into())),
            LpOutcome::Unbounded => return Err(Error::Degenerate("boxed dual LP unbounded".into())),
        };
        // Most violated constraint per source row.
        let mut new = Vec::new();
        for a in 0..sm.len() {
            let worst = finite
                .iter()
                .enumerate()
                .filter(|(idx, p)| p.0 == a && !added[*idx])
                .map(|(idx, &(a, b))| (idx, sol.x[u[a]] + sol.x[v[b]] - space.cost(sm[a], sn[b])))
                .filter(|&(_, viol)| viol > tol)
                .max_by(|x, y| x.1.total_cmp(&y.1));
            if let Some((idx, _)) = worst {
                new.push(idx);
            }
        }
        if new.is_empty() {
            break sol;
        }
        for idx in new {
            add(&mut lp, idx)?;
            added[idx] = true;
        }
    };

    let value = -sol.objective;
    // (u + t, v - t) is optimal too; pick t so that min u over supp μ is 0.
    let shift = (0..sm.len()).map(|a| sol.x[u[a]]).fold(f64::INFINITY, f64::min);
    let mut uu = vec![0.0; k];
    let mut vv = vec![0.0; k];
    for (a, &i) in sm.iter().enumerate() {
        uu[i] = sol.x[u[a]] - shift;
    }
    for (b, &j) in sn.iter().enumerate() {
        vv[j] = sol.x[v[b]] + shift;
    }
    if !space.is_metric() {
        return Ok(LipschitzWitness { potential: uu, target_potential: Some(vv), value });
    }

    // c-transform of the target potential: f(x) = min_j c(x, j) - vⱼ.
    let mut f: Vec<f64> = (0..k)
        .map(|x| {
            let m = sn
                .iter()
                .filter(|&&j| space.cost(x, j).is_finite())
                .map(|&j| space.cost(x, j) - vv[j])
                .fold(f64::INFINITY, f64::min);
            if m.is_finite() {
                m
            } else {
                0.0
            }
        })
        .collect();
    let base = sm
        .iter()
        .chain(&sn)
        .map(|&i| f[i])
        .fold(f64::INFINITY, f64::min);
    f.iter_mut().for_each(|x| *x -= base);
    Ok(LipschitzWitness { potential: f, target_potential: None, value })
}

fn cheapest(
    finite: &[(usize, usize)],
    space: &FiniteCostSpace,
    sm: &[usize],
    sn: &[usize],
    pred: impl Fn(&(usize, usize)) -> bool,
) -> Option<usize> {
    finite
        .iter()
        .enumerate()
        .filter(|(_, p)| pred(p))
        .min_by(|x, y| space.cost(sm[x.1 .0], sn[x.1 .1]).total_cmp(&space.cost(sm[y.1 .0], sn[y.1 .1])))
        .map(|(idx, _)| idx)
}

/// Max-flow test for a coupling supported on finite-cost cells.
fn coupling_exists(space: &FiniteCostSpace, mu: &ProbabilityVector, nu: &ProbabilityVector, sm: &[usize], sn: &[usize]) -> bool {
    let (a, b) = (sm.len(), sn.len());
    let (src, sink) = (a + b, a + b + 1);
    let mut g = FlowGraph::new(a + b + 2);
    for (x, &i) in sm.iter().enumerate() {
        g.edge(src, x, mu.weights()[i]);
        for (y, &j) in sn.iter().enumerate() {
            if space.cost(i, j).is_finite() {
                g.edge(x, a + y, f64::INFINITY);
            }
        }
    }
    for (y, &j) in sn.iter().enumerate() {
        g.edge(a + y, sink, nu.weights()[j]);
    }
    g.max_flow(src, sink) >= 1.0 - 1e-9
}

/// Dinic's algorithm on real capacities.
struct FlowGraph {
    adj: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<f64>,
}

impl FlowGraph {
    fn new(n: usize) -> Self {
        FlowGraph { adj: vec![Vec::new(); n], to: Vec::new(), cap: Vec::new() }
    }

    fn edge(&mut self, u: usize, v: usize, c: f64) {
        self.adj[u].push(self.to.len());
        self.to.push(v);
        self.cap.push(c);
        self.adj[v].push(self.to.len());
        self.to.push(u);
        self.cap.push(0.0);
    }

    fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        const EPS: f64 = 1e-15;
        let n = self.adj.len();
        let mut total = 0.0;
        loop {
            let mut level = vec![usize::MAX; n];
            level[s] = 0;
            let mut queue = std::collections::VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &e in &self.adj[u] {
                    if self.cap[e] > EPS && level[self.to[e]] == usize::MAX {
                        level[self.to[e]] = level[u] + 1;
                        queue.push_back(self.to[e]);
                    }
                }
            }
            if level[t] == usize::MAX {
                return total;
            }
            let mut next = vec![0usize; n];
            loop {
                let f = self.augment(s, t, f64::INFINITY, &level, &mut next);
                if f <= EPS {
                    break;
                }
                total += f;
            }
        }
    }

    fn augment(&mut self, u: usize, t: usize, limit: f64, level: &[usize], next: &mut [usize]) -> f64 {
        if u == t {
            return limit;
        }
        while next[u] < self.adj[u].len() {
            let e = self.adj[u][next[u]];
            let v = self.to[e];
            if self.cap[e] > 1e-15 && level[v] == level[u] + 1 {
                let f = self.augment(v, t, limit.min(self.cap[e]), level, next);
                if f > 0.0 {
                    self.cap[e] -= f;
                    self.cap[e ^ 1] += f;
                    return f;
                }
            }
            next[u] += 1;
        }
        0.0
    }
}

/// Solves many marginal pairs on one space in parallel.
pub fn wasserstein_batch(
    space: &FiniteCostSpace,
    pairs: &[(ProbabilityVector, ProbabilityVector)],
) -> Vec<Result<TransportPlan>> {
    pairs.par_iter().map(|(m, n)| wasserstein_primal(space, m, n)).collect()
}

/// Recipe for one of the standard cost spaces.
#[derive(Clone, Debug)]
pub enum SpaceSpec {
    /// `n` points `k/n` on the unit circle with arc-length cost.
    Cycle(usize),
    /// `n` interior points `k/(n+1)` of `(0, 1)` with cost `|x - y|`.
    Interval(usize),
    Explicit { points: Vec<String>, cost: Vec<Vec<f64>>, metric: bool },
    /// Two copies of `base`; crossing costs `√(d² + inv_m²)`.
    TwoSheet { base: Box<FiniteCostSpace>, inv_m: f64 },
}

pub fn make_cost_space(spec: SpaceSpec) -> Result<FiniteCostSpace> {
    match spec {
        SpaceSpec::Cycle(n) => {
            check_size(n)?;
            let points = (0..n).map(|k| label(k as f64 / n as f64)).collect();
            let cost = (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            let d = i.abs_diff(j);
                            d.min(n - d) as f64 / n as f64
                        })
                        .collect()
                })
                .collect();
            FiniteCostSpace::new(points, cost, true)
        }
        SpaceSpec::Interval(n) => {
            check_size(n)?;
            let h = (n + 1) as f64;
            let points = (1..=n).map(|k| label(k as f64 / h)).collect();
            let cost = (0..n)
                .map(|i| (0..n).map(|j| i.abs_diff(j) as f64 / h).collect())
                .collect();
            FiniteCostSpace::new(points, cost, true)
        }
        SpaceSpec::Explicit { points, cost, metric } => FiniteCostSpace::new(points, cost, metric),
        SpaceSpec::TwoSheet { base, inv_m } => {
            if inv_m.is_nan() || inv_m < 0.0 {
                return Err(Error::validation(format!("inv_m must be non-negative, got {inv_m}")));
            }
            let k = base.size();
            let mut points = Vec::with_capacity(2 * k);
            for sheet in 1..=2 {
                points.extend(base.points().iter().map(|p| format!("({p}, {sheet})")));
            }
            let mut cost = vec![vec![0.0; 2 * k]; 2 * k];
            for i in 0..2 * k {
                for j in 0..2 * k {
                    let d = base.cost(i % k, j % k);
                    cost[i][j] = if (i < k) == (j < k) {
                        d
                    } else if d.is_finite() {
                        two_sheet_cost(d, inv_m)?
                    } else {
                        f64::INFINITY
                    };
                }
            }
            FiniteCostSpace::new(points, cost, base.is_metric())
        }
    }
}

fn check_size(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::validation(format!("need at least 2 points, got {n}")));
    }
    Ok(())
}

fn label(x: f64) -> String {
    format!("{x}")
}

/// Index of the point labelled `x` on a cycle or interval built here.
pub fn point_index(space: &FiniteCostSpace, x: f64) -> Option<usize> {
    space
        .points()
        .iter()
        .position(|p| p.parse::<f64>().is_ok_and(|v| (v - x).abs() < 1e-12))
}
