//! Worked examples: the two-point space, `M₂(C)` with a diagonal Dirac
//! operator, the Moyal-truncation cost on the Bloch ball, and the two-sheet
//! cost. Also the Bloch-sphere parameterization of qubit states.
//!
//! Bloch coordinates follow the convention `x = 2 Re(ξ̄₁ξ₂)`,
//! `y = 2 Im(ξ̄₁ξ₂)`, `z = |ξ₁|² - |ξ₂|²`, so pure states sit on the unit
//! sphere and the density matrix of a point is
//! `[[(1+z)/2, (x-iy)/2], [(x+iy)/2, (1-z)/2]]`.

use std::f64::consts::{FRAC_PI_4, PI};

use serde::{Deserialize, Serialize};

use crate::connes::{ExtendedDistance, StateDistance};
use crate::error::{Error, Result};
use crate::linalg::{Complex, ComplexMatrix, HermitianMatrix};
use crate::transport::ProbabilityVector;
use crate::triple::{DensityState, FiniteSpectralTriple};

const BALL_TOL: f64 = 1e-12;
const PURE_TOL: f64 = 1e-9;
/// Two Bloch points count as having the same height below this gap.
pub const EQUAL_HEIGHT_TOL: f64 = 1e-12;

/// Point of the closed unit ball in R³.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct BlochPoint {
    x: f64,
    y: f64,
    z: f64,
}

impl TryFrom<[f64; 3]> for BlochPoint {
    type Error = Error;

    fn try_from([x, y, z]: [f64; 3]) -> Result<Self> {
        BlochPoint::new(x, y, z)
    }
}

impl From<BlochPoint> for [f64; 3] {
    fn from(p: BlochPoint) -> Self {
        [p.x, p.y, p.z]
    }
}

impl BlochPoint {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err(Error::validation("Bloch coordinates must be finite"));
        }
        let r2 = x * x + y * y + z * z;
        if r2 > 1.0 + BALL_TOL {
            return Err(Error::validation(format!(
                "Bloch point ({x}, {y}, {z}) lies outside the unit ball"
            )));
        }
        Ok(BlochPoint { x, y, z })
    }

    pub const ORIGIN: BlochPoint = BlochPoint { x: 0.0, y: 0.0, z: 0.0 };
    pub const NORTH: BlochPoint = BlochPoint { x: 0.0, y: 0.0, z: 1.0 };
    pub const SOUTH: BlochPoint = BlochPoint { x: 0.0, y: 0.0, z: -1.0 };

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn coords(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn is_pure(&self) -> bool {
        (self.norm() - 1.0).abs() <= PURE_TOL
    }

    /// Euclidean distance.
    pub fn distance(&self, other: &BlochPoint) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    /// `λ·self + (1-λ)·other`, a point of the chord between them.
    pub fn lerp(&self, other: &BlochPoint, lambda: f64) -> BlochPoint {
        let mu = 1.0 - lambda;
        BlochPoint {
            x: lambda * self.x + mu * other.x,
            y: lambda * self.y + mu * other.y,
            z: lambda * self.z + mu * other.z,
        }
    }
}

/// Unit vector of C².
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Spinor {
    xi1: Complex,
    xi2: Complex,
}

impl Spinor {
    pub fn new(xi1: Complex, xi2: Complex) -> Result<Self> {
        let n = xi1.norm_sqr() + xi2.norm_sqr();
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::validation(format!("spinor has squared norm {n}, expected 1")));
        }
        Ok(Spinor { xi1, xi2 })
    }

    pub fn components(&self) -> (Complex, Complex) {
        (self.xi1, self.xi2)
    }

    /// Projector `|ξ⟩⟨ξ|`.
    pub fn projector(&self) -> HermitianMatrix {
        let v = [self.xi1, self.xi2];
        let mut m = ComplexMatrix::zeros(2, 2);
        for i in 0..2 {
            for j in 0..2 {
                m[(i, j)] = v[i] * v[j].conj();
            }
        }
        HermitianMatrix::symmetrized(m)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoyalCostParams {
    theta: f64,
}

impl MoyalCostParams {
    pub fn new(theta: f64) -> Result<Self> {
        if !(theta.is_finite() && theta > 0.0) {
            return Err(Error::validation(format!("theta must be positive, got {theta}")));
        }
        Ok(MoyalCostParams { theta })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

/// Finitely supported probability measure on the sphere of pure states.
#[derive(Clone, Debug)]
pub struct SphereMeasure {
    points: Vec<BlochPoint>,
    weights: ProbabilityVector,
}

impl SphereMeasure {
    pub fn new(points: Vec<BlochPoint>, weights: ProbabilityVector) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::dims("one weight per point expected"));
        }
        if let Some(p) = points.iter().find(|p| !p.is_pure()) {
            return Err(Error::validation(format!("{p:?} is not on the unit sphere")));
        }
        Ok(SphereMeasure { points, weights })
    }

    pub fn points(&self) -> &[BlochPoint] {
        &self.points
    }

    pub fn weights(&self) -> &ProbabilityVector {
        &self.weights
    }

    /// First moment `Σ wᵢ pᵢ`.
    pub fn barycenter(&self) -> BlochPoint {
        let mut c = [0.0; 3];
        for (p, &w) in self.points.iter().zip(self.weights.weights()) {
            c[0] += w * p.x;
            c[1] += w * p.y;
            c[2] += w * p.z;
        }
        BlochPoint { x: c[0], y: c[1], z: c[2] }
    }
}

pub fn pauli_x() -> HermitianMatrix {
    HermitianMatrix::symmetrized(ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap())
}

pub fn pauli_y() -> HermitianMatrix {
    let i = Complex::new(0.0, 1.0);
    let z = Complex::new(0.0, 0.0);
    HermitianMatrix::symmetrized(ComplexMatrix::new(2, 2, vec![z, -i, i, z]).unwrap())
}

pub fn pauli_z() -> HermitianMatrix {
    HermitianMatrix::from_real_diag(&[1.0, -1.0])
}

/// `A = C²` acting diagonally on `C²`, `D = [[0, m], [m̄, 0]]`, optionally
/// graded by `diag(1, -1)`.
pub fn two_point_triple(m: Complex, with_grading: bool) -> FiniteSpectralTriple {
    let zero = Complex::new(0.0, 0.0);
    let dirac = HermitianMatrix::symmetrized(ComplexMatrix::new(2, 2, vec![zero, m, m.conj(), zero]).unwrap());
    let basis = vec![
        HermitianMatrix::from_real_diag(&[1.0, 0.0]),
        HermitianMatrix::from_real_diag(&[0.0, 1.0]),
    ];
    let grading = with_grading.then(pauli_z);
    FiniteSpectralTriple::new(format!("two-point(m={m})"), basis, dirac, grading)
        .expect("two-point triple is valid for every m")
}

/// Full `M₂(C)` on `C²` with basis `(1, σx, σy, σz)` and the given Dirac
/// operator.
pub fn m2_triple(label: impl Into<String>, dirac: HermitianMatrix) -> Result<FiniteSpectralTriple> {
    if dirac.dim() != 2 {
        return Err(Error::dims("M2(C) acts on C^2"));
    }
    let basis = vec![HermitianMatrix::identity(2), pauli_x(), pauli_y(), pauli_z()];
    FiniteSpectralTriple::new(label, basis, dirac, None)
}

/// `M₂(C)` with `D = diag(d1, d2)`.
pub fn m2_diagonal_triple(d1: f64, d2: f64) -> Result<FiniteSpectralTriple> {
    m2_triple(
        format!("m2-diagonal(d1={d1},d2={d2})"),
        HermitianMatrix::from_real_diag(&[d1, d2]),
    )
}

/// `M₂(C)` on `C²` with a zero Dirac operator. Only the algebra is used (to
/// evaluate states); costs for the Moyal model come from
/// [`moyal_ball_cost`].
pub fn m2_moyal_algebra() -> FiniteSpectralTriple {
    m2_triple("m2-moyal", HermitianMatrix::zeros(2)).expect("valid")
}

/// Closed-form spectral distance for `M₂(C)` with `D = diag(d1, d2)`:
/// `|p - q| / |d1 - d2|` between points of equal height, infinite
/// otherwise.
///
/// In the half-scale coordinates `x = Re(ξ̄₁ξ₂)`, `y = Im(ξ̄₁ξ₂)` this reads
/// `2/|d1 - d2|` times the Euclidean distance.
pub fn m2_diagonal_distance(d1: f64, d2: f64, p: &BlochPoint, q: &BlochPoint) -> Result<ExtendedDistance> {
    if !(d1.is_finite() && d2.is_finite()) {
        return Err(Error::validation("Dirac eigenvalues must be finite"));
    }
    if d1 == d2 {
        return Err(Error::validation(
            "degenerate Dirac eigenvalues: use the general solver",
        ));
    }
    if (p.z - q.z).abs() > EQUAL_HEIGHT_TOL {
        return Ok(ExtendedDistance::infinite());
    }
    Ok(ExtendedDistance::exact(p.distance(q) / (d1 - d2).abs()))
}

/// Angle in `[0, π/2]` between the segment `[p, q]` and the horizontal plane.
pub fn segment_elevation(p: &BlochPoint, q: &BlochPoint) -> Option<f64> {
    let d = p.distance(q);
    if d == 0.0 {
        return None;
    }
    Some(((p.z - q.z).abs() / d).min(1.0).asin())
}

/// Cost between states of `M₂(C)` seen as a truncation of the Moyal plane:
/// `√(θ/2)·cos α·|p-q|` for `α ≤ π/4` and `√(θ/2)·|p-q|/(2 sin α)` above,
/// with `α` the elevation of the segment.
pub fn moyal_ball_cost(p: &BlochPoint, q: &BlochPoint, params: &MoyalCostParams) -> f64 {
    let Some(alpha) = segment_elevation(p, q) else {
        return 0.0;
    };
    let pref = (params.theta / 2.0).sqrt();
    let d = p.distance(q);
    if alpha <= FRAC_PI_4 {
        moyal_low_branch(pref, alpha, d)
    } else {
        moyal_high_branch(pref, alpha, d)
    }
}

pub(crate) fn moyal_low_branch(pref: f64, alpha: f64, d: f64) -> f64 {
    pref * alpha.cos() * d
}

pub(crate) fn moyal_high_branch(pref: f64, alpha: f64, d: f64) -> f64 {
    pref * d / (2.0 * alpha.sin())
}

pub fn spinor_to_bloch(xi: &Spinor) -> BlochPoint {
    let c = xi.xi1.conj() * xi.xi2;
    BlochPoint {
        x: 2.0 * c.re,
        y: 2.0 * c.im,
        z: xi.xi1.norm_sqr() - xi.xi2.norm_sqr(),
    }
}

pub fn bloch_to_density(p: &BlochPoint) -> Result<DensityState> {
    let h = Complex::new(0.5, 0.0);
    let m = ComplexMatrix::new(
        2,
        2,
        vec![
            h * (1.0 + p.z),
            Complex::new(p.x, -p.y) * 0.5,
            Complex::new(p.x, p.y) * 0.5,
            h * (1.0 - p.z),
        ],
    )?;
    DensityState::new(HermitianMatrix::symmetrized(m))
}

/// Inverse of [`bloch_to_density`].
pub fn density_to_bloch(s: &DensityState) -> Result<BlochPoint> {
    if s.dim() != 2 {
        return Err(Error::dims("Bloch coordinates exist only for qubit states"));
    }
    let m = s.matrix().as_matrix();
    let off = m[(1, 0)];
    BlochPoint::new(2.0 * off.re, 2.0 * off.im, m[(0, 0)].re - m[(1, 1)].re)
}

/// State of a measure on the sphere: it depends only on the barycenter.
pub fn state_from_measure(m: &SphereMeasure) -> Result<(DensityState, BlochPoint)> {
    let bary = m.barycenter();
    let bary = BlochPoint::new(bary.x, bary.y, bary.z)?;
    Ok((bloch_to_density(&bary)?, bary))
}

/// Cross-sheet cost `√(d² + (1/|m|)²)`.
pub fn two_sheet_cost(base_distance: f64, inv_m: f64) -> Result<f64> {
    if base_distance.is_nan() || base_distance < 0.0 || inv_m.is_nan() || inv_m < 0.0 {
        return Err(Error::validation("two-sheet cost needs non-negative inputs"));
    }
    Ok(base_distance.hypot(inv_m))
}

/// `n` nearly uniform points on the unit sphere (Fibonacci lattice).
pub fn fibonacci_sphere(n: usize) -> Vec<BlochPoint> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let z = 1.0 - (2.0 * k as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * k as f64;
            BlochPoint { x: r * phi.cos(), y: r * phi.sin(), z }
        })
        .collect()
}

/// `rings` horizontal circles of `per_ring` equally spaced points each,
/// rotated by `phase` radians. Heights are interior (poles excluded).
pub fn latitude_rings(rings: usize, per_ring: usize, phase: f64) -> Vec<BlochPoint> {
    let mut out = Vec::with_capacity(rings * per_ring);
    for r in 0..rings {
        let z = 1.0 - 2.0 * (r as f64 + 0.5) / rings as f64;
        let rad = (1.0 - z * z).sqrt();
        for k in 0..per_ring {
            let phi = phase + 2.0 * PI * k as f64 / per_ring as f64 + 0.37 * r as f64;
            out.push(BlochPoint { x: rad * phi.cos(), y: rad * phi.sin(), z });
        }
    }
    out
}

/// Closed-form distance of the two-point model: `|ρ₁₁ - σ₁₁| / |m|`.
#[derive(Clone, Copy, Debug)]
pub struct TwoPointModel {
    pub m: Complex,
}

impl StateDistance for TwoPointModel {
    fn distance(&self, rho: &DensityState, sigma: &DensityState) -> Result<ExtendedDistance> {
        if rho.dim() != 2 || sigma.dim() != 2 {
            return Err(Error::dims("two-point states live on C^2"));
        }
        let gap = (rho.matrix().as_matrix()[(0, 0)].re - sigma.matrix().as_matrix()[(0, 0)].re).abs();
        if gap == 0.0 {
            return Ok(ExtendedDistance::exact(0.0));
        }
        if self.m.norm() == 0.0 {
            return Ok(ExtendedDistance::infinite());
        }
        Ok(ExtendedDistance::exact(gap / self.m.norm()))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct M2DiagonalModel {
    pub d1: f64,
    pub d2: f64,
}

impl StateDistance for M2DiagonalModel {
    fn distance(&self, rho: &DensityState, sigma: &DensityState) -> Result<ExtendedDistance> {
        m2_diagonal_distance(self.d1, self.d2, &density_to_bloch(rho)?, &density_to_bloch(sigma)?)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct MoyalModel {
    pub params: MoyalCostParams,
}

impl StateDistance for MoyalModel {
    fn distance(&self, rho: &DensityState, sigma: &DensityState) -> Result<ExtendedDistance> {
        let (p, q) = (density_to_bloch(rho)?, density_to_bloch(sigma)?);
        Ok(ExtendedDistance::exact(moyal_ball_cost(&p, &q, &self.params)))
    }
}
