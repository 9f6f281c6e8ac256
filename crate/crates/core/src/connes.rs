//! Spectral distance `sup { Tr(Δ π(a)) : ‖[D, π(a)]‖ ≤ 1 }` between two states
//! of a finite spectral triple.
//!
//! Infinite distances are decided by pairing `Δ` with the commutant of `D`.
//! Otherwise the supremum is computed in whitened coordinates where the
//! commutator map is an isometry `A`, so the problem reads
//! `max h·β s.t. ‖Aβ‖ ≤ 1` with dual `min ‖Y‖₁ s.t. A*Y = h`. A primal-dual
//! hybrid gradient iteration runs on this pair; every primal iterate yields a
//! feasible lower bound after rescaling and every dual iterate a trace-norm
//! upper bound after projecting onto `A*Y = h`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::json::ExtReal;
use crate::linalg::{self, HermitianMatrix};
use crate::triple::{
    commutant_kernel, commutator_norm, state_evaluate, AlgebraElement, CommutatorMap, DensityState,
    FiniteSpectralTriple,
};

/// Pairings with the commutant above this value make the distance infinite.
pub const KERNEL_PAIRING_TOL: f64 = 1e-8;
const CHECK_EVERY: usize = 10;
const STEP: f64 = 0.99;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Relative gap between certified bounds at which the solver stops.
    pub tol: f64,
    /// Iteration budget per restart.
    pub max_iter: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-4, max_iter: 50_000, restarts: 8, seed: 0 }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::validation(format!("tol must be positive, got {}", self.tol)));
        }
        if self.restarts == 0 {
            return Err(Error::validation("restarts must be at least 1"));
        }
        if self.max_iter == 0 {
            return Err(Error::validation("max_iter must be at least 1"));
        }
        Ok(())
    }
}

/// A distance in `[0, +∞]` with the solver's certificate.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedDistance {
    pub finite: bool,
    /// Certified lower bound on the distance; `+∞` when not finite.
    pub value: f64,
    /// Near-optimal element of the Lipschitz ball.
    pub witness: Option<AlgebraElement>,
    /// Upper bound minus `value`.
    pub gap_estimate: f64,
    pub iterations: usize,
    /// False when the iteration budget ran out before `gap ≤ tol·upper`.
    pub converged: bool,
}

impl ExtendedDistance {
    pub fn infinite() -> Self {
        ExtendedDistance {
            finite: false,
            value: f64::INFINITY,
            witness: None,
            gap_estimate: 0.0,
            iterations: 0,
            converged: true,
        }
    }

    pub fn exact(value: f64) -> Self {
        ExtendedDistance {
            finite: true,
            value,
            witness: None,
            gap_estimate: 0.0,
            iterations: 0,
            converged: true,
        }
    }

    /// `value + gap_estimate`.
    pub fn upper_bound(&self) -> f64 {
        self.value + self.gap_estimate
    }
}

#[derive(Serialize, Deserialize)]
struct DistanceJson {
    finite: bool,
    value: ExtReal,
    gap: f64,
    iterations: usize,
    #[serde(default = "yes")]
    converged: bool,
    witness: Option<AlgebraElement>,
}

fn yes() -> bool {
    true
}

impl Serialize for ExtendedDistance {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DistanceJson {
            finite: self.finite,
            value: ExtReal(self.value),
            gap: self.gap_estimate,
            iterations: self.iterations,
            converged: self.converged,
            witness: self.witness.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ExtendedDistance {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = DistanceJson::deserialize(d)?;
        Ok(ExtendedDistance {
            finite: j.finite,
            value: j.value.0,
            witness: j.witness,
            gap_estimate: j.gap,
            iterations: j.iterations,
            converged: j.converged,
        })
    }
}

/// Anything that assigns an extended distance to a pair of states.
pub trait StateDistance: Sync {
    fn distance(&self, rho: &DensityState, sigma: &DensityState) -> Result<ExtendedDistance>;
}

/// Spectral-distance solver for one triple. Construction factors the
/// commutator map once; queries are then independent and thread-safe.
#[derive(Clone, Debug)]
pub struct SpectralDistanceSolver {
    triple: FiniteSpectralTriple,
    opts: SolverOptions,
    map: CommutatorMap,
}

struct Run {
    lb: f64,
    beta: Vec<f64>,
    ub: f64,
    iterations: usize,
}

impl SpectralDistanceSolver {
    pub fn new(triple: &FiniteSpectralTriple, opts: SolverOptions) -> Result<Self> {
        opts.validate()?;
        let map = CommutatorMap::new(triple)?;
        Ok(SpectralDistanceSolver { triple: triple.clone(), opts, map })
    }

    pub fn triple(&self) -> &FiniteSpectralTriple {
        &self.triple
    }

    pub fn options(&self) -> &SolverOptions {
        &self.opts
    }

    pub fn kernel_dim(&self) -> usize {
        self.map.kernel().len()
    }

    /// `Tr(Δ eⱼ)` over the orthonormal basis.
    fn orth_functional(&self, rho: &DensityState, sigma: &DensityState) -> Result<Vec<f64>> {
        let fr = self.triple.state_functional(rho)?;
        let fs = self.triple.state_functional(sigma)?;
        let f: Vec<f64> = fr.iter().zip(&fs).map(|(a, b)| a - b).collect();
        Ok(self
            .map
            .basis
            .transform
            .iter()
            .map(|row| linalg::dot(row, &f))
            .collect())
    }

    /// Largest pairing of `ρ - σ` with an orthonormal commutant element.
    pub fn kernel_pairing(&self, rho: &DensityState, sigma: &DensityState) -> Result<f64> {
        let g = self.orth_functional(rho, sigma)?;
        Ok(self
            .map
            .kernel()
            .iter()
            .map(|k| linalg::dot(k, &g).abs())
            .fold(0.0, f64::max))
    }

    pub fn distance(&self, rho: &DensityState, sigma: &DensityState) -> Result<ExtendedDistance> {
        let g = self.orth_functional(rho, sigma)?;
        if rho == sigma {
            return Ok(ExtendedDistance {
                witness: Some(AlgebraElement::zeros(self.triple.basis_size())),
                ..ExtendedDistance::exact(0.0)
            });
        }
        if self.map.kernel().iter().any(|k| linalg::dot(k, &g).abs() > KERNEL_PAIRING_TOL) {
            return Ok(ExtendedDistance::infinite());
        }

        let rank = self.map.rank;
        let sigma_r = &self.map.svd.sigma[..rank];
        let h_raw: Vec<f64> = (0..rank)
            .map(|j| linalg::dot(&self.map.svd.v[j], &g) / sigma_r[j])
            .collect();
        let scale = linalg::norm(&h_raw);
        if scale == 0.0 {
            return Ok(ExtendedDistance {
                witness: Some(AlgebraElement::zeros(self.triple.basis_size())),
                ..ExtendedDistance::exact(0.0)
            });
        }
        let h: Vec<f64> = h_raw.iter().map(|x| x / scale).collect();
        let op = Whitened { n: self.map.dim, u: &self.map.svd.u[..rank] };

        let mut best: Option<Run> = None;
        let mut iterations = 0;
        for k in 0..self.opts.restarts {
            let mut rng = ChaCha8Rng::seed_from_u64(self.opts.seed.wrapping_add(k as u64));
            let start: Vec<f64> = if k == 0 {
                h.clone()
            } else {
                (0..rank).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
            };
            let mut run = op.pdhg(&h, start, self.opts.max_iter, self.opts.tol);
            iterations += run.iterations;
            if let Some(b) = &best {
                if b.lb > run.lb {
                    run.lb = b.lb;
                    run.beta = b.beta.clone();
                }
                run.ub = run.ub.min(b.ub);
            }
            let done = run.ub - run.lb <= self.opts.tol * run.ub;
            best = Some(run);
            if done {
                break;
            }
        }
        let run = best.expect("at least one restart");

        let value = run.lb * scale;
        let upper = run.ub.max(run.lb) * scale;
        // Back to original coordinates: w = Σ (βⱼ/σⱼ) vⱼ, then c = Tᵀw.
        let mut w = vec![0.0; g.len()];
        for j in 0..rank {
            let a = run.beta[j] / sigma_r[j];
            w.iter_mut().zip(&self.map.svd.v[j]).for_each(|(x, v)| *x += a * v);
        }
        let witness = AlgebraElement::new(self.map.basis.to_original(&w));
        Ok(ExtendedDistance {
            finite: true,
            value,
            witness: Some(witness),
            gap_estimate: upper - value,
            iterations,
            converged: run.ub - run.lb <= self.opts.tol * run.ub,
        })
    }
}

impl StateDistance for SpectralDistanceSolver {
    fn distance(&self, rho: &DensityState, sigma: &DensityState) -> Result<ExtendedDistance> {
        SpectralDistanceSolver::distance(self, rho, sigma)
    }
}

/// The isometry `β ↦ Σ βⱼ Mⱼ` onto the range of the commutator map.
struct Whitened<'a> {
    n: usize,
    u: &'a [Vec<f64>],
}

impl Whitened<'_> {
    fn apply(&self, beta: &[f64]) -> HermitianMatrix {
        let mut v = vec![0.0; 2 * self.n * self.n];
        for (b, u) in beta.iter().zip(self.u) {
            v.iter_mut().zip(u).for_each(|(x, y)| *x += b * y);
        }
        HermitianMatrix::from_real_vec(self.n, &v)
    }

    fn adjoint(&self, y: &HermitianMatrix) -> Vec<f64> {
        let yv = y.to_real_vec();
        self.u.iter().map(|u| linalg::dot(u, &yv)).collect()
    }

    /// Feasible value `h·β / ‖Aβ‖`.
    fn lower(&self, h: &[f64], beta: &[f64]) -> Option<(f64, Vec<f64>)> {
        let nrm = self.apply(beta).spectral_norm();
        if nrm <= 0.0 || !nrm.is_finite() {
            return None;
        }
        let b: Vec<f64> = beta.iter().map(|x| x / nrm).collect();
        Some((linalg::dot(h, &b), b))
    }

    /// `‖Y + A(h - A*Y)‖₁`, a valid upper bound for any `Y`.
    fn upper(&self, h: &[f64], y: &HermitianMatrix, aty: &[f64]) -> f64 {
        let r: Vec<f64> = h.iter().zip(aty).map(|(a, b)| a - b).collect();
        let yc = y.add(&self.apply(&r));
        yc.eigh().values.iter().map(|l| l.abs()).sum()
    }

    fn pdhg(&self, h: &[f64], start: Vec<f64>, max_iter: usize, tol: f64) -> Run {
        let (sigma, tau) = (STEP, STEP);
        let mut best_lb = 0.0;
        let mut best_beta = vec![0.0; h.len()];
        if let Some((v, b)) = self.lower(h, h) {
            best_lb = v;
            best_beta = b;
        }
        let mut best_ub = self.upper(h, &HermitianMatrix::zeros(self.n), &vec![0.0; h.len()]);

        let mut x = start;
        let mut xbar = x.clone();
        let mut y = HermitianMatrix::zeros(self.n);
        let mut it = 0;
        while it < max_iter && best_ub - best_lb > tol * best_ub {
            it += 1;
            let mut z = y.clone();
            z.axpy(sigma, &self.apply(&xbar));
            y = HermitianMatrix::from_eigen_map(&z.eigh(), |l| l.signum() * (l.abs() - sigma).max(0.0));
            let aty = self.adjoint(&y);
            let xn: Vec<f64> = x
                .iter()
                .zip(aty.iter().zip(h))
                .map(|(xi, (a, hi))| xi - tau * (a - hi))
                .collect();
            xbar = xn.iter().zip(&x).map(|(a, b)| 2.0 * a - b).collect();
            x = xn;
            if it % CHECK_EVERY == 0 || it == max_iter {
                if let Some((v, b)) = self.lower(h, &x) {
                    if v > best_lb {
                        best_lb = v;
                        best_beta = b;
                    }
                }
                best_ub = best_ub.min(self.upper(h, &y, &aty));
            }
        }
        Run { lb: best_lb, beta: best_beta, ub: best_ub, iterations: it }
    }
}

pub fn spectral_distance(
    t: &FiniteSpectralTriple,
    rho: &DensityState,
    sigma: &DensityState,
    opts: &SolverOptions,
) -> Result<ExtendedDistance> {
    SpectralDistanceSolver::new(t, opts.clone())?.distance(rho, sigma)
}

/// Lower bound on the spectral distance by sampling random directions `u`
/// and maximizing `Tr(Δ π(u)) / ‖[D, π(u)]‖`.
///
/// Uses only the public evaluation primitives, so it is independent of the
/// solver's factorization.
pub fn spectral_distance_oracle(
    t: &FiniteSpectralTriple,
    rho: &DensityState,
    sigma: &DensityState,
    directions: usize,
    seed: u64,
) -> Result<f64> {
    let kernel = commutant_kernel(t)?;
    let kernel_mats: Vec<HermitianMatrix> = kernel
        .elements
        .iter()
        .map(|k| t.represent(k))
        .collect::<Result<_>>()?;
    let n = t.basis_size();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dirs: Vec<Vec<f64>> = (0..directions)
        .map(|_| (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
        .collect();

    let ratios: Vec<Option<f64>> = dirs
        .par_iter()
        .map(|c| -> Result<Option<f64>> {
            let mut u = AlgebraElement::new(c.clone());
            let pu = t.represent(&u)?;
            for (k, km) in kernel.elements.iter().zip(&kernel_mats) {
                u = u.add(&k.scale(-pu.hs_inner(km)));
            }
            let nrm = commutator_norm(t, &u)?;
            if nrm <= 1e-12 * (1.0 + linalg::norm(u.coefficients())) {
                return Ok(None);
            }
            let gap = state_evaluate(rho, t, &u)? - state_evaluate(sigma, t, &u)?;
            Ok(Some(gap.abs() / nrm))
        })
        .collect::<Result<_>>()?;
    ratios
        .into_iter()
        .flatten()
        .reduce(f64::max)
        .ok_or_else(|| Error::Degenerate("every sampled direction commutes with D".into()))
}
