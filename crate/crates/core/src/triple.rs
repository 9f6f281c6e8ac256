//! Finite spectral triples, their states, and the commutator map
//! `a ↦ [D, π(a)]`.
//!
//! Only the self-adjoint part of the algebra is represented, through a real
//! coefficient vector over a Hermitian basis. Complex algebra elements are
//! never materialized.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, HermitianMatrix, RealSvd, HERMITIAN_INPUT_TOL};

/// Residual allowed on the grading identities `Γ² = I`, `ΓD = -DΓ`, `[Γ, a] = 0`.
pub const GRADING_TOL: f64 = 1e-10;

/// Singular values below `KERNEL_REL_TOL * max(σ_max, 1)` span the commutant.
pub const KERNEL_REL_TOL: f64 = 1e-9;

const INDEPENDENCE_TOL: f64 = 1e-10;

/// Unvalidated triple exactly as read from JSON:
/// `{"label", "hilbert_dim", "algebra_basis", "dirac", "grading"}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TripleData {
    pub label: String,
    pub hilbert_dim: usize,
    pub algebra_basis: Vec<ComplexMatrix>,
    pub dirac: ComplexMatrix,
    pub grading: Option<ComplexMatrix>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ValidationCheck {
    pub name: String,
    pub passed: bool,
    pub residual: f64,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<ValidationCheck>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&ValidationCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect()
    }

    fn push(&mut self, name: &str, passed: bool, residual: f64) {
        self.checks.push(ValidationCheck {
            name: name.to_string(),
            passed,
            residual,
        });
    }
}

/// Checks every structural and numerical invariant of a triple.
pub fn validate_triple(t: &TripleData) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n = t.hilbert_dim;

    report.push("hilbert_dim_positive", n > 0, n as f64);
    report.push(
        "basis_nonempty",
        !t.algebra_basis.is_empty(),
        t.algebra_basis.len() as f64,
    );

    let all: Vec<&ComplexMatrix> = t
        .algebra_basis
        .iter()
        .chain(std::iter::once(&t.dirac))
        .chain(t.grading.iter())
        .collect();
    let bad_shapes = all
        .iter()
        .filter(|m| m.rows() != n || m.cols() != n)
        .count();
    report.push("dimensions", bad_shapes == 0, bad_shapes as f64);
    if bad_shapes > 0 || n == 0 {
        return report;
    }

    let basis_res = t
        .algebra_basis
        .iter()
        .map(ComplexMatrix::hermiticity_residual)
        .fold(0.0, f64::max);
    report.push("basis_hermitian", basis_res <= HERMITIAN_INPUT_TOL, basis_res);

    let dirac_res = t.dirac.hermiticity_residual();
    report.push("dirac_hermitian", dirac_res <= HERMITIAN_INPUT_TOL, dirac_res);

    if !t.algebra_basis.is_empty() {
        let cols: Vec<Vec<f64>> = t
            .algebra_basis
            .iter()
            .map(|b| HermitianMatrix::symmetrized(b.clone()).to_real_vec())
            .collect();
        let svd = linalg::svd_columns(&cols);
        let ratio = match (svd.sigma.first(), svd.sigma.last()) {
            (Some(&hi), Some(&lo)) if hi > 0.0 => lo / hi,
            _ => 0.0,
        };
        report.push("basis_independent", ratio > INDEPENDENCE_TOL, ratio);
    }

    if let Some(g) = &t.grading {
        let g_res = g.hermiticity_residual();
        report.push("grading_hermitian", g_res <= HERMITIAN_INPUT_TOL, g_res);

        let id = ComplexMatrix::identity(n);
        let inv = (&(g * g) - &id).frobenius_norm();
        report.push("grading_involution", inv <= GRADING_TOL, inv);

        let anti = (&(g * &t.dirac) + &(&t.dirac * g)).frobenius_norm();
        report.push("grading_anticommutes_with_dirac", anti <= GRADING_TOL, anti);

        let comm = t
            .algebra_basis
            .iter()
            .map(|b| (&(g * b) - &(b * g)).frobenius_norm())
            .fold(0.0, f64::max);
        report.push("grading_commutes_with_algebra", comm <= GRADING_TOL, comm);
    }
    report
}

/// A validated finite spectral triple `(A, H, D)` with optional grading.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "TripleData", into = "TripleData")]
pub struct FiniteSpectralTriple {
    label: String,
    hilbert_dim: usize,
    algebra_basis: Vec<HermitianMatrix>,
    dirac: HermitianMatrix,
    grading: Option<HermitianMatrix>,
}

impl TryFrom<TripleData> for FiniteSpectralTriple {
    type Error = Error;

    fn try_from(data: TripleData) -> Result<Self> {
        let report = validate_triple(&data);
        if !report.passed() {
            return Err(Error::validation(format!(
                "triple '{}' failed checks: {}",
                data.label,
                report.failures().join(", ")
            )));
        }
        Ok(FiniteSpectralTriple {
            label: data.label,
            hilbert_dim: data.hilbert_dim,
            algebra_basis: data
                .algebra_basis
                .into_iter()
                .map(HermitianMatrix::symmetrized)
                .collect(),
            dirac: HermitianMatrix::symmetrized(data.dirac),
            grading: data.grading.map(HermitianMatrix::symmetrized),
        })
    }
}

impl From<FiniteSpectralTriple> for TripleData {
    fn from(t: FiniteSpectralTriple) -> Self {
        TripleData {
            label: t.label,
            hilbert_dim: t.hilbert_dim,
            algebra_basis: t.algebra_basis.into_iter().map(Into::into).collect(),
            dirac: t.dirac.into(),
            grading: t.grading.map(Into::into),
        }
    }
}

impl FiniteSpectralTriple {
    pub fn new(
        label: impl Into<String>,
        algebra_basis: Vec<HermitianMatrix>,
        dirac: HermitianMatrix,
        grading: Option<HermitianMatrix>,
    ) -> Result<Self> {
        let data = TripleData {
            label: label.into(),
            hilbert_dim: dirac.dim(),
            algebra_basis: algebra_basis.into_iter().map(Into::into).collect(),
            dirac: dirac.into(),
            grading: grading.map(Into::into),
        };
        Self::try_from(data)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn hilbert_dim(&self) -> usize {
        self.hilbert_dim
    }

    pub fn algebra_basis(&self) -> &[HermitianMatrix] {
        &self.algebra_basis
    }

    pub fn basis_size(&self) -> usize {
        self.algebra_basis.len()
    }

    pub fn dirac(&self) -> &HermitianMatrix {
        &self.dirac
    }

    pub fn grading(&self) -> Option<&HermitianMatrix> {
        self.grading.as_ref()
    }

    pub fn to_data(&self) -> TripleData {
        self.clone().into()
    }

    pub fn validate(&self) -> ValidationReport {
        validate_triple(&self.to_data())
    }

    /// Same triple with `D` replaced by `s·D` (grading kept).
    pub fn with_scaled_dirac(&self, s: f64) -> FiniteSpectralTriple {
        FiniteSpectralTriple {
            dirac: self.dirac.scale(s),
            ..self.clone()
        }
    }

    /// `π(a) = Σ cᵢ bᵢ`.
    pub fn represent(&self, a: &AlgebraElement) -> Result<HermitianMatrix> {
        self.check_len(a)?;
        let mut out = HermitianMatrix::zeros(self.hilbert_dim);
        for (c, b) in a.coefficients().iter().zip(&self.algebra_basis) {
            out.axpy(*c, b);
        }
        Ok(out)
    }

    /// Coefficients of a Hermitian matrix lying in the span of the basis.
    pub fn coefficients_of(&self, m: &HermitianMatrix) -> Result<AlgebraElement> {
        if m.dim() != self.hilbert_dim {
            return Err(Error::dims("matrix and triple dimensions differ"));
        }
        let ortho = OrthonormalBasis::new(&self.algebra_basis)?;
        let target = m.to_real_vec();
        let proj: Vec<f64> = ortho.vectors.iter().map(|e| linalg::dot(e, &target)).collect();
        let coeffs = ortho.to_original(&proj);
        let back = self.represent(&AlgebraElement::new(coeffs.clone()))?;
        let miss = back.sub(m).as_matrix().frobenius_norm();
        if miss > 1e-9 * (1.0 + m.as_matrix().frobenius_norm()) {
            return Err(Error::validation(format!(
                "matrix is not in the algebra span (residual {miss:.3e})"
            )));
        }
        Ok(AlgebraElement::new(coeffs))
    }

    /// `Tr(s bᵢ)` for every basis element: the state as a linear functional on
    /// coefficient vectors.
    pub fn state_functional(&self, s: &DensityState) -> Result<Vec<f64>> {
        if s.dim() != self.hilbert_dim {
            return Err(Error::dims(format!(
                "state of dimension {} on a triple of dimension {}",
                s.dim(),
                self.hilbert_dim
            )));
        }
        Ok(self
            .algebra_basis
            .iter()
            .map(|b| s.matrix().hs_inner(b))
            .collect())
    }

    fn check_len(&self, a: &AlgebraElement) -> Result<()> {
        if a.len() != self.algebra_basis.len() {
            return Err(Error::dims(format!(
                "{} coefficients for a basis of size {}",
                a.len(),
                self.algebra_basis.len()
            )));
        }
        if a.coefficients().iter().any(|c| !c.is_finite()) {
            return Err(Error::validation("non-finite coefficient"));
        }
        Ok(())
    }
}

/// Self-adjoint algebra element `a = Σ cᵢ bᵢ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AlgebraElement(Vec<f64>);

impl AlgebraElement {
    pub fn new(coefficients: Vec<f64>) -> Self {
        AlgebraElement(coefficients)
    }

    pub fn zeros(n: usize) -> Self {
        AlgebraElement(vec![0.0; n])
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn scale(&self, s: f64) -> AlgebraElement {
        AlgebraElement(self.0.iter().map(|c| c * s).collect())
    }

    pub fn add(&self, other: &AlgebraElement) -> AlgebraElement {
        AlgebraElement(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

/// Trace-one positive Hermitian matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateJson", into = "StateJson")]
pub struct DensityState {
    matrix: HermitianMatrix,
}

/// `{"matrix": M}` or, for qubits, `{"bloch": [x, y, z]}`.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum StateJson {
    Matrix { matrix: HermitianMatrix },
    Bloch { bloch: [f64; 3] },
}

impl TryFrom<StateJson> for DensityState {
    type Error = Error;

    fn try_from(s: StateJson) -> Result<Self> {
        match s {
            StateJson::Matrix { matrix } => DensityState::new(matrix),
            StateJson::Bloch { bloch: [x, y, z] } => {
                crate::models::bloch_to_density(&crate::models::BlochPoint::new(x, y, z)?)
            }
        }
    }
}

impl From<DensityState> for StateJson {
    fn from(s: DensityState) -> Self {
        StateJson::Matrix { matrix: s.matrix }
    }
}

impl DensityState {
    pub const TRACE_TOL: f64 = 1e-10;
    pub const POSITIVITY_TOL: f64 = 1e-10;
    pub const PURITY_TOL: f64 = 1e-9;

    pub fn new(matrix: HermitianMatrix) -> Result<Self> {
        let tr = matrix.trace();
        if (tr - 1.0).abs() > Self::TRACE_TOL {
            return Err(Error::validation(format!("state trace {tr} differs from 1")));
        }
        let lo = matrix.eigh().values[0];
        if lo < -Self::POSITIVITY_TOL {
            return Err(Error::validation(format!(
                "state has negative eigenvalue {lo:.3e}"
            )));
        }
        Ok(DensityState { matrix })
    }

    /// Projector on the `k`-th basis vector of `C^dim`.
    pub fn basis_projector(dim: usize, k: usize) -> Result<Self> {
        if k >= dim {
            return Err(Error::validation(format!("basis index {k} out of range for dimension {dim}")));
        }
        let mut diag = vec![0.0; dim];
        diag[k] = 1.0;
        Ok(DensityState {
            matrix: HermitianMatrix::from_real_diag(&diag),
        })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityState {
            matrix: HermitianMatrix::identity(dim).scale(1.0 / dim as f64),
        }
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// `Tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        self.matrix.hs_inner(&self.matrix)
    }

    pub fn is_pure(&self) -> bool {
        self.purity() >= 1.0 - Self::PURITY_TOL
    }

    /// `λ·self + (1-λ)·other` for `λ ∈ [0, 1]`.
    pub fn mix(&self, other: &DensityState, lambda: f64) -> Result<DensityState> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::validation(format!("mixing weight {lambda} outside [0, 1]")));
        }
        if self.dim() != other.dim() {
            return Err(Error::dims("mixing states of different dimension"));
        }
        let m = self.matrix.scale(lambda).add(&other.matrix.scale(1.0 - lambda));
        Ok(DensityState { matrix: m })
    }

    /// Max-entry distance between density matrices.
    pub fn max_abs_diff(&self, other: &DensityState) -> f64 {
        (self.matrix.as_matrix() - other.matrix.as_matrix()).max_abs()
    }
}

/// Orthonormal basis (under the Hilbert–Schmidt product) of the span of the
/// algebra basis, with the change of coordinates back to the original basis.
#[derive(Clone, Debug)]
pub(crate) struct OrthonormalBasis {
    /// Real-vectorized orthonormal elements.
    pub vectors: Vec<Vec<f64>>,
    /// Row `j` holds the coefficients of element `j` in the original basis.
    pub transform: Vec<Vec<f64>>,
}

impl OrthonormalBasis {
    pub fn new(basis: &[HermitianMatrix]) -> Result<Self> {
        let n = basis.len();
        let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut transform: Vec<Vec<f64>> = Vec::with_capacity(n);
        for (k, b) in basis.iter().enumerate() {
            let mut v = b.to_real_vec();
            let scale = linalg::norm(&v);
            let mut t = vec![0.0; n];
            t[k] = 1.0;
            // Two passes of modified Gram-Schmidt.
            for _ in 0..2 {
                for (e, te) in vectors.iter().zip(&transform) {
                    let p = linalg::dot(e, &v);
                    v.iter_mut().zip(e).for_each(|(x, y)| *x -= p * y);
                    t.iter_mut().zip(te).for_each(|(x, y)| *x -= p * y);
                }
            }
            let nv = linalg::norm(&v);
            if scale == 0.0 || nv <= INDEPENDENCE_TOL * scale {
                return Err(Error::validation(format!(
                    "algebra basis element {k} is linearly dependent on the previous ones"
                )));
            }
            vectors.push(v.iter().map(|x| x / nv).collect());
            transform.push(t.iter().map(|x| x / nv).collect());
        }
        Ok(OrthonormalBasis { vectors, transform })
    }

    /// Original-basis coefficients of `Σ wⱼ eⱼ`.
    pub fn to_original(&self, w: &[f64]) -> Vec<f64> {
        let n = self.transform.len();
        let mut c = vec![0.0; n];
        for (wj, row) in w.iter().zip(&self.transform) {
            c.iter_mut().zip(row).for_each(|(x, t)| *x += wj * t);
        }
        c
    }
}

/// The real-linear map `w ↦ i[D, π(Σ wⱼ eⱼ)]` in Hilbert–Schmidt
/// orthonormal coordinates, with its singular value decomposition.
#[derive(Clone, Debug)]
pub(crate) struct CommutatorMap {
    pub dim: usize,
    pub basis: OrthonormalBasis,
    pub svd: RealSvd,
    pub rank: usize,
}

impl CommutatorMap {
    pub fn new(t: &FiniteSpectralTriple) -> Result<Self> {
        let dim = t.hilbert_dim();
        let basis = OrthonormalBasis::new(t.algebra_basis())?;
        let columns: Vec<Vec<f64>> = basis
            .vectors
            .iter()
            .map(|e| {
                let m = HermitianMatrix::from_real_vec(dim, e);
                linalg::i_commutator(t.dirac(), &m).to_real_vec()
            })
            .collect();
        let svd = linalg::svd_columns(&columns);
        let top = svd.sigma.first().copied().unwrap_or(0.0);
        let threshold = KERNEL_REL_TOL * top.max(1.0);
        let rank = svd.sigma.iter().filter(|&&s| s >= threshold).count();
        Ok(CommutatorMap { dim, basis, svd, rank })
    }

    /// Orthonormal kernel vectors in orthonormal-basis coordinates.
    pub fn kernel(&self) -> &[Vec<f64>] {
        &self.svd.v[self.rank..]
    }
}

/// Orthonormal basis of `{a ∈ A_sa : [D, π(a)] = 0}`.
#[derive(Clone, Debug, Serialize)]
pub struct CommutantBasis {
    pub elements: Vec<AlgebraElement>,
    pub singular_values: Vec<f64>,
}

impl CommutantBasis {
    pub fn dim(&self) -> usize {
        self.elements.len()
    }
}

pub fn commutant_kernel(t: &FiniteSpectralTriple) -> Result<CommutantBasis> {
    let map = CommutatorMap::new(t)?;
    let elements = map
        .kernel()
        .iter()
        .map(|v| AlgebraElement::new(map.basis.to_original(v)))
        .collect();
    Ok(CommutantBasis {
        elements,
        singular_values: map.svd.sigma.clone(),
    })
}

/// `‖[D, π(a)]‖`.
pub fn commutator_norm(t: &FiniteSpectralTriple, a: &AlgebraElement) -> Result<f64> {
    let pa = t.represent(a)?;
    Ok(linalg::i_commutator(t.dirac(), &pa).spectral_norm())
}

/// Membership in the D-Lipschitz ball, `‖[D, π(a)]‖ ≤ 1 + tol`.
pub fn in_lipschitz_ball(t: &FiniteSpectralTriple, a: &AlgebraElement, tol: f64) -> Result<bool> {
    if tol.is_nan() || tol < 0.0 {
        return Err(Error::validation("tolerance must be non-negative"));
    }
    Ok(commutator_norm(t, a)? <= 1.0 + tol)
}

/// `Tr(s π(a))`.
pub fn state_evaluate(s: &DensityState, t: &FiniteSpectralTriple, a: &AlgebraElement) -> Result<f64> {
    if s.dim() != t.hilbert_dim() {
        return Err(Error::dims("state and triple dimensions differ"));
    }
    Ok(s.matrix().hs_inner(&t.represent(a)?))
}

/// Product `(A_b ⊗ A_f, H_b ⊗ H_f, D_b ⊗ 1 + Γ ⊗ D_f)` of a graded base
/// with a fiber. The product is graded by `Γ ⊗ Γ_f` when the fiber is.
pub fn product_triple(
    base: &FiniteSpectralTriple,
    fiber: &FiniteSpectralTriple,
) -> Result<FiniteSpectralTriple> {
    let gamma = base.grading().ok_or_else(|| {
        Error::validation(format!("base triple '{}' has no grading", base.label()))
    })?;
    let id_f = HermitianMatrix::identity(fiber.hilbert_dim());
    let dirac = base.dirac().kron(&id_f).add(&gamma.kron(fiber.dirac()));
    let basis = base
        .algebra_basis()
        .iter()
        .flat_map(|b| fiber.algebra_basis().iter().map(move |f| b.kron(f)))
        .collect();
    let grading = fiber.grading().map(|gf| gamma.kron(gf));
    FiniteSpectralTriple::new(
        format!("{} x {}", base.label(), fiber.label()),
        basis,
        dirac,
        grading,
    )
}

/// Coefficients of `a ⊗ 1` in the basis of `product_triple(base, fiber)`.
pub fn lift_base_element(
    base: &FiniteSpectralTriple,
    fiber: &FiniteSpectralTriple,
    a: &AlgebraElement,
) -> Result<AlgebraElement> {
    if a.len() != base.basis_size() {
        return Err(Error::dims("element does not belong to the base algebra"));
    }
    let unit = fiber.coefficients_of(&HermitianMatrix::identity(fiber.hilbert_dim()))?;
    let coeffs = a
        .coefficients()
        .iter()
        .flat_map(|ai| unit.coefficients().iter().map(move |u| ai * u))
        .collect();
    Ok(AlgebraElement::new(coeffs))
}
