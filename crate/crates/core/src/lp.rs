//! Bounded-variable revised simplex for
//! `min cᵀx  s.t.  Ax = b,  l ≤ x ≤ u` with finite `l`.
//!
//! Dense basis inverse with product-form updates and periodic
//! refactorization. Phase one uses signed artificials; redundant rows keep
//! their artificial basic and fixed at zero. Pricing is Dantzig, falling
//! back to Bland's rule during long runs of degenerate pivots.

use crate::error::{Error, Result};

const FEAS_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-10;
const REFACTOR_EVERY: usize = 50;
const DEGENERATE_STREAK: usize = 30;

#[derive(Clone, Debug, Default)]
pub struct LinearProgram {
    rhs: Vec<f64>,
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cols: Vec<Vec<(usize, f64)>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    /// Row multipliers `y` with `cⱼ - yᵀAⱼ ≥ 0` at lower bounds.
    pub duals: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

impl LinearProgram {
    pub fn new(rhs: Vec<f64>) -> Self {
        LinearProgram { rhs, ..Default::default() }
    }

    pub fn num_rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn num_cols(&self) -> usize {
        self.cost.len()
    }

    /// Adds a variable; `entries` are `(row, coefficient)` pairs.
    pub fn add_column(&mut self, cost: f64, lower: f64, upper: f64, entries: &[(usize, f64)]) -> Result<usize> {
        if !lower.is_finite() || upper.is_nan() || upper < lower || !cost.is_finite() {
            return Err(Error::validation(format!(
                "bad column: cost {cost}, bounds [{lower}, {upper}]"
            )));
        }
        if let Some(&(r, _)) = entries.iter().find(|(r, _)| *r >= self.rhs.len()) {
            return Err(Error::dims(format!("row {r} out of range")));
        }
        self.cost.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.cols.push(entries.iter().copied().filter(|e| e.1 != 0.0).collect());
        Ok(self.cost.len() - 1)
    }

    /// Appends a row with the given coefficients on existing columns.
    pub fn add_row(&mut self, rhs: f64, entries: &[(usize, f64)]) -> Result<usize> {
        if let Some(&(c, _)) = entries.iter().find(|(c, _)| *c >= self.cost.len()) {
            return Err(Error::dims(format!("column {c} out of range")));
        }
        let r = self.rhs.len();
        self.rhs.push(rhs);
        for &(c, v) in entries {
            if v != 0.0 {
                self.cols[c].push((r, v));
            }
        }
        Ok(r)
    }

    pub fn solve(&self) -> Result<LpOutcome> {
        let budget = 100 * (self.num_rows() + self.num_cols()) + 1000;
        Simplex::new(self).run(budget)
    }
}

#[derive(Clone, Copy, PartialEq, Debug)]
enum State {
    Basic(usize),
    AtLower,
    AtUpper,
}

struct Simplex<'a> {
    lp: &'a LinearProgram,
    m: usize,
    /// Structural columns followed by one artificial per row.
    n: usize,
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    art_sign: Vec<f64>,
    x: Vec<f64>,
    state: Vec<State>,
    basis: Vec<usize>,
    binv: Vec<Vec<f64>>,
    since_refactor: usize,
    iterations: usize,
}

impl<'a> Simplex<'a> {
    fn new(lp: &'a LinearProgram) -> Self {
        let m = lp.num_rows();
        let ns = lp.num_cols();
        let mut x: Vec<f64> = lp.lower.clone();
        let mut resid = lp.rhs.clone();
        for (j, col) in lp.cols.iter().enumerate() {
            for &(r, v) in col {
                resid[r] -= v * x[j];
            }
        }
        let art_sign: Vec<f64> = resid.iter().map(|r| if *r >= 0.0 { 1.0 } else { -1.0 }).collect();
        x.extend(resid.iter().map(|r| r.abs()));
        let mut state = vec![State::AtLower; ns];
        state.extend((0..m).map(State::Basic));
        let mut lower = lp.lower.clone();
        lower.extend(std::iter::repeat(0.0).take(m));
        let mut upper = lp.upper.clone();
        upper.extend(std::iter::repeat(f64::INFINITY).take(m));
        let binv = (0..m)
            .map(|i| {
                let mut row = vec![0.0; m];
                row[i] = art_sign[i];
                row
            })
            .collect();
        Simplex {
            lp,
            m,
            n: ns + m,
            cost: vec![0.0; ns + m],
            lower,
            upper,
            art_sign,
            x,
            state,
            basis: (ns..ns + m).collect(),
            binv,
            since_refactor: 0,
            iterations: 0,
        }
    }

    fn ns(&self) -> usize {
        self.lp.num_cols()
    }

    fn column(&self, j: usize) -> Vec<(usize, f64)> {
        if j < self.ns() {
            self.lp.cols[j].clone()
        } else {
            let r = j - self.ns();
            vec![(r, self.art_sign[r])]
        }
    }

    fn ftran(&self, j: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        for (r, v) in self.column(j) {
            for (o, row) in out.iter_mut().zip(&self.binv) {
                *o += row[r] * v;
            }
        }
        out
    }

    fn duals(&self) -> Vec<f64> {
        let mut y = vec![0.0; self.m];
        for (p, &b) in self.basis.iter().enumerate() {
            let cb = self.cost[b];
            if cb != 0.0 {
                y.iter_mut().zip(&self.binv[p]).for_each(|(yi, v)| *yi += cb * v);
            }
        }
        y
    }

    fn reduced_cost(&self, j: usize, y: &[f64]) -> f64 {
        self.cost[j] - self.column(j).iter().map(|&(r, v)| y[r] * v).sum::<f64>()
    }

    /// Rebuilds `B⁻¹` by Gauss-Jordan elimination and recomputes basic values.
    fn refactor(&mut self) -> Result<()> {
        let m = self.m;
        let mut a = vec![vec![0.0; 2 * m]; m];
        for (p, &b) in self.basis.iter().enumerate() {
            for (r, v) in self.column(b) {
                a[r][p] = v;
            }
        }
        for (i, row) in a.iter_mut().enumerate() {
            row[m + i] = 1.0;
        }
        for c in 0..m {
            let piv = (c..m)
                .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
                .unwrap();
            if a[piv][c].abs() < 1e-13 {
                return Err(Error::Degenerate("singular basis during refactorization".into()));
            }
            a.swap(c, piv);
            let d = a[c][c];
            a[c].iter_mut().for_each(|v| *v /= d);
            let pr = a[c].clone();
            for (i, row) in a.iter_mut().enumerate() {
                if i != c && row[c] != 0.0 {
                    let f = row[c];
                    row.iter_mut().zip(&pr).for_each(|(v, p)| *v -= f * p);
                }
            }
        }
        // Columns of B map to rows of B⁻¹ in basis order.
        self.binv = a.into_iter().map(|row| row[m..].to_vec()).collect();
        self.since_refactor = 0;

        let mut resid = self.lp.rhs.clone();
        for j in 0..self.n {
            if !matches!(self.state[j], State::Basic(_)) && self.x[j] != 0.0 {
                for (r, v) in self.column(j) {
                    resid[r] -= v * self.x[j];
                }
            }
        }
        for p in 0..m {
            let val = self.binv[p].iter().zip(&resid).map(|(a, b)| a * b).sum();
            self.x[self.basis[p]] = val;
        }
        Ok(())
    }

    fn pivot_update(&mut self, p: usize, alpha: &[f64]) {
        let ap = alpha[p];
        let prow: Vec<f64> = self.binv[p].iter().map(|v| v / ap).collect();
        for (i, row) in self.binv.iter_mut().enumerate() {
            if i == p {
                continue;
            }
            let f = alpha[i];
            if f != 0.0 {
                row.iter_mut().zip(&prow).for_each(|(v, q)| *v -= f * q);
            }
        }
        self.binv[p] = prow;
    }

    /// Runs simplex iterations on the current cost. Returns false when the
    /// objective is unbounded below.
    fn optimize(&mut self, budget: usize) -> Result<bool> {
        let mut degenerate = 0usize;
        loop {
            if self.iterations >= budget {
                return Err(Error::IterationLimit(self.iterations));
            }
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
            }
            let y = self.duals();
            let bland = degenerate >= DEGENERATE_STREAK;
            let scale = 1.0 + self.cost.iter().fold(0.0f64, |a, c| a.max(c.abs()));
            let mut enter: Option<(usize, f64)> = None;
            for j in 0..self.n {
                let dir = match self.state[j] {
                    State::Basic(_) => continue,
                    _ if self.upper[j] - self.lower[j] <= 0.0 => continue,
                    State::AtLower => 1.0,
                    State::AtUpper => -1.0,
                };
                let d = self.reduced_cost(j, &y);
                if d * dir < -OPT_TOL * scale {
                    let better = match enter {
                        None => true,
                        Some((_, best)) => !bland && d.abs() > best.abs(),
                    };
                    if better {
                        enter = Some((j, d));
                    }
                    if bland {
                        break;
                    }
                }
            }
            let Some((j, d)) = enter else {
                return Ok(true);
            };
            let s = if d < 0.0 { 1.0 } else { -1.0 };
            let alpha = self.ftran(j);

            // Ratio test: basic xᵢ moves by -s·θ·αᵢ.
            let mut theta = self.upper[j] - self.lower[j];
            let mut leave: Option<(usize, bool)> = None;
            for (p, &a) in alpha.iter().enumerate() {
                let delta = s * a;
                if delta.abs() <= PIVOT_TOL {
                    continue;
                }
                let b = self.basis[p];
                let (t, to_upper) = if delta > 0.0 {
                    ((self.x[b] - self.lower[b]).max(0.0) / delta, false)
                } else if self.upper[b].is_finite() {
                    ((self.upper[b] - self.x[b]).max(0.0) / -delta, true)
                } else {
                    continue;
                };
                let replace = match leave {
                    None => t < theta,
                    Some((q, _)) => {
                        t < theta - 1e-12
                            || (t <= theta + 1e-12
                                && if bland {
                                    b < self.basis[q]
                                } else {
                                    a.abs() > alpha[q].abs()
                                })
                    }
                };
                if replace {
                    theta = t.min(theta);
                    leave = Some((p, to_upper));
                }
            }
            if theta.is_infinite() {
                return Ok(false);
            }
            self.iterations += 1;
            degenerate = if theta <= 1e-12 { degenerate + 1 } else { 0 };

            for (p, &a) in alpha.iter().enumerate() {
                let b = self.basis[p];
                self.x[b] -= s * theta * a;
            }
            self.x[j] += s * theta;
            match leave {
                None => {
                    self.state[j] = if s > 0.0 { State::AtUpper } else { State::AtLower };
                    self.x[j] = if s > 0.0 { self.upper[j] } else { self.lower[j] };
                }
                Some((p, to_upper)) => {
                    let b = self.basis[p];
                    self.state[b] = if to_upper { State::AtUpper } else { State::AtLower };
                    self.x[b] = if to_upper { self.upper[b] } else { self.lower[b] };
                    self.basis[p] = j;
                    self.state[j] = State::Basic(p);
                    self.pivot_update(p, &alpha);
                    self.since_refactor += 1;
                }
            }
        }
    }

    fn run(mut self, budget: usize) -> Result<LpOutcome> {
        let ns = self.ns();
        let bscale = 1.0 + self.lp.rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()));

        // Phase one.
        for j in ns..self.n {
            self.cost[j] = 1.0;
        }
        self.optimize(budget)?;
        self.refactor()?;
        let infeas: f64 = (ns..self.n).map(|j| self.x[j]).sum();
        if infeas > FEAS_TOL * bscale {
            return Ok(LpOutcome::Infeasible);
        }

        // Drive basic artificials out where possible; fix all artificials at 0.
        for p in 0..self.m {
            let b = self.basis[p];
            if b < ns {
                continue;
            }
            let row = self.binv[p].clone();
            let candidate = (0..ns).find(|&j| {
                !matches!(self.state[j], State::Basic(_))
                    && self.lp.cols[j].iter().map(|&(r, v)| row[r] * v).sum::<f64>().abs() > 1e-7
            });
            if let Some(j) = candidate {
                let alpha = self.ftran(j);
                self.state[b] = State::AtLower;
                self.x[b] = 0.0;
                self.basis[p] = j;
                self.state[j] = State::Basic(p);
                self.pivot_update(p, &alpha);
                self.since_refactor += 1;
            }
        }
        for j in ns..self.n {
            self.upper[j] = 0.0;
            self.cost[j] = 0.0;
            if !matches!(self.state[j], State::Basic(_)) {
                self.x[j] = 0.0;
            }
        }
        self.refactor()?;

        // Phase two.
        self.cost[..ns].copy_from_slice(&self.lp.cost);
        if !self.optimize(budget)? {
            return Ok(LpOutcome::Unbounded);
        }
        self.refactor()?;
        let duals = self.duals();
        let x: Vec<f64> = (0..ns)
            .map(|j| self.x[j].clamp(self.lower[j], self.upper[j]))
            .collect();
        let objective = x.iter().zip(&self.lp.cost).map(|(a, b)| a * b).sum();
        Ok(LpOutcome::Optimal(LpSolution { x, duals, objective, iterations: self.iterations }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn optimal(lp: &LinearProgram) -> LpSolution {
        match lp.solve().unwrap() {
            LpOutcome::Optimal(s) => s,
            other => panic!("expected optimum, got {other:?}"),
        }
    }

    #[test]
    fn small_lp_with_slacks() {
        // max x + y s.t. x + 2y ≤ 4, 3x + y ≤ 6 → (1.6, 1.2), value 2.8.
        let mut lp = LinearProgram::new(vec![4.0, 6.0]);
        lp.add_column(-1.0, 0.0, f64::INFINITY, &[(0, 1.0), (1, 3.0)]).unwrap();
        lp.add_column(-1.0, 0.0, f64::INFINITY, &[(0, 2.0), (1, 1.0)]).unwrap();
        lp.add_column(0.0, 0.0, f64::INFINITY, &[(0, 1.0)]).unwrap();
        lp.add_column(0.0, 0.0, f64::INFINITY, &[(1, 1.0)]).unwrap();
        let s = optimal(&lp);
        assert!((s.objective + 2.8).abs() < 1e-12);
        assert!((s.x[0] - 1.6).abs() < 1e-12 && (s.x[1] - 1.2).abs() < 1e-12);
        // Strong duality: bᵀy = cᵀx.
        assert!((4.0 * s.duals[0] + 6.0 * s.duals[1] - s.objective).abs() < 1e-12);
    }

    #[test]
    fn bound_flips_and_negative_lower_bounds() {
        // min -x - y s.t. x - y = 0, x ∈ [-2, 3], y ∈ [-5, 1] → x = y = 1.
        let mut lp = LinearProgram::new(vec![0.0]);
        lp.add_column(-1.0, -2.0, 3.0, &[(0, 1.0)]).unwrap();
        lp.add_column(-1.0, -5.0, 1.0, &[(0, -1.0)]).unwrap();
        let s = optimal(&lp);
        assert!((s.objective + 2.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(vec![-1.0]);
        lp.add_column(1.0, 0.0, f64::INFINITY, &[(0, 1.0)]).unwrap();
        assert_eq!(lp.solve().unwrap(), LpOutcome::Infeasible);

        let mut lp = LinearProgram::new(vec![1.0]);
        lp.add_column(-1.0, 0.0, f64::INFINITY, &[(0, 1.0)]).unwrap();
        lp.add_column(0.0, 0.0, f64::INFINITY, &[(0, -1.0)]).unwrap();
        assert_eq!(lp.solve().unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn redundant_rows_are_tolerated() {
        // x + y = 1 stated twice.
        let mut lp = LinearProgram::new(vec![1.0, 1.0]);
        lp.add_column(2.0, 0.0, f64::INFINITY, &[(0, 1.0), (1, 1.0)]).unwrap();
        lp.add_column(3.0, 0.0, f64::INFINITY, &[(0, 1.0), (1, 1.0)]).unwrap();
        let s = optimal(&lp);
        assert!((s.objective - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_columns() {
        let mut lp = LinearProgram::new(vec![1.0]);
        assert!(lp.add_column(1.0, f64::NEG_INFINITY, 0.0, &[]).is_err());
        assert!(lp.add_column(1.0, 1.0, 0.0, &[]).is_err());
        assert!(lp.add_column(1.0, 0.0, 1.0, &[(3, 1.0)]).is_err());
    }

    /// Brute force over vertices of the transport polytope: each vertex has a
    /// forest as support, found by north-west-corner rules over all row and
    /// column orders.
    fn transport_brute_force(c: &[Vec<f64>], mu: &[f64], nu: &[f64]) -> f64 {
        fn perms(n: usize) -> Vec<Vec<usize>> {
            if n == 0 {
                return vec![vec![]];
            }
            let mut out = vec![];
            for p in perms(n - 1) {
                for k in 0..=p.len() {
                    let mut q = p.clone();
                    q.insert(k, n - 1);
                    out.push(q);
                }
            }
            out
        }
        let mut best = f64::INFINITY;
        for rp in perms(mu.len()) {
            for cp in perms(nu.len()) {
                let (mut a, mut b) = (mu.to_vec(), nu.to_vec());
                let (mut i, mut j) = (0, 0);
                let mut val = 0.0;
                while i < rp.len() && j < cp.len() {
                    let (r, s) = (rp[i], cp[j]);
                    let t = a[r].min(b[s]);
                    val += t * c[r][s];
                    a[r] -= t;
                    b[s] -= t;
                    if a[r] <= 1e-15 {
                        i += 1;
                    } else {
                        j += 1;
                    }
                }
                best = best.min(val);
            }
        }
        best
    }

    #[test]
    fn transport_matches_vertex_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..40 {
            let (k, l) = (rng.random_range(1..5), rng.random_range(1..5));
            let c: Vec<Vec<f64>> = (0..k).map(|_| (0..l).map(|_| rng.random_range(0.0..3.0)).collect()).collect();
            let norm = |v: Vec<f64>| {
                let s: f64 = v.iter().sum();
                v.into_iter().map(|x| x / s).collect::<Vec<_>>()
            };
            let mu = norm((0..k).map(|_| rng.random_range(0.05..1.0)).collect());
            let nu = norm((0..l).map(|_| rng.random_range(0.05..1.0)).collect());
            let mut rhs = mu.clone();
            rhs.extend(&nu);
            let mut lp = LinearProgram::new(rhs);
            for i in 0..k {
                for j in 0..l {
                    lp.add_column(c[i][j], 0.0, f64::INFINITY, &[(i, 1.0), (k + j, 1.0)]).unwrap();
                }
            }
            let s = optimal(&lp);
            let brute = transport_brute_force(&c, &mu, &nu);
            assert!((s.objective - brute).abs() < 1e-10, "{} vs {}", s.objective, brute);
        }
    }

    #[test]
    fn rows_can_be_added_after_columns() {
        let mut lp = LinearProgram::new(vec![]);
        let x = lp.add_column(-1.0, 0.0, 10.0, &[]).unwrap();
        let y = lp.add_column(-1.0, 0.0, 10.0, &[]).unwrap();
        let s = lp.add_column(0.0, 0.0, f64::INFINITY, &[]).unwrap();
        lp.add_row(3.0, &[(x, 1.0), (y, 1.0), (s, 1.0)]).unwrap();
        let sol = optimal(&lp);
        assert!((sol.objective + 3.0).abs() < 1e-12);
    }
}
