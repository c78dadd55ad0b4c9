//! The space-time inner product, the fermionic signature operator and its
//! functional calculus on a truncated solution space.
//!
//! Operators are stored as coefficient matrices relative to a (generally
//! non-orthonormal) mode basis. The Gram matrix `G` enters through the
//! adjoint `M* = G⁻¹M†G` and through the orthonormal frame `M̃ = L†ML⁻†`
//! (`G = LL†`), in which all norms are taken.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{CauchySurface, Mat2, Point2, QuadratureSpec, SpacetimeModel, Summation, C64};
use crate::solutions::{Basis, DiracSolution, Spinor, TestSection};

/// Largest Gram condition number accepted.
pub const MAX_GRAM_CONDITION: f64 = 1e12;

fn check_models<'a>(expected: &SpacetimeModel, models: impl IntoIterator<Item = &'a SpacetimeModel>) -> Result<()> {
    for m in models {
        if m != expected {
            return Err(Error::ModelMismatch(expected.tag(), m.tag()));
        }
    }
    Ok(())
}

/// `Σ_p  left_j(p)† K_p right_k(p)` for every pair, summed in node order.
fn weighted_pairs(left: &[Vec<Spinor>], right: &[Vec<Spinor>], kernels: &[Mat2], summation: Summation) -> DMatrix<C64> {
    let right_k: Vec<Vec<Spinor>> = right
        .iter()
        .map(|vals| vals.iter().zip(kernels).map(|(v, k)| k * v).collect())
        .collect();
    DMatrix::from_fn(left.len(), right.len(), |j, k| {
        summation.sum(left[j].iter().zip(&right_k[k]).map(|(a, b)| a.dotc(b)))
    })
}

fn sample<S: DiracSolution>(sols: &[S], points: &[Point2]) -> Vec<Vec<Spinor>> {
    sols.iter().map(|s| points.iter().map(|&p| s.eval(p)).collect()).collect()
}

/// Matrix of scalar products `(left_j | right_k)_m` on `surface`.
pub fn cauchy_matrix<L, R>(left: &[L], right: &[R], surface: &CauchySurface, spec: &QuadratureSpec) -> Result<DMatrix<C64>>
where
    L: DiracSolution,
    R: DiracSolution,
{
    let model = surface.model();
    check_models(model, left.iter().map(|s| s.model()).chain(right.iter().map(|s| s.model())))?;
    let nodes = surface.quadrature(spec);
    let rep = model.rep();
    let points: Vec<Point2> = nodes.iter().map(|n| n.point).collect();
    let kernels: Vec<Mat2> = nodes
        .iter()
        .map(|n| rep.gamma0 * rep.clifford(n.flux) * C64::from(TAU * n.dx))
        .collect();
    Ok(weighted_pairs(&sample(left, &points), &sample(right, &points), &kernels, spec.summation))
}

/// `(ψ|φ)_m = 2π ∫_N ≺ψ|γ(ν)φ≻ dμ_N`.
pub fn cauchy_inner<L: DiracSolution, R: DiracSolution>(psi: &L, phi: &R, surface: &CauchySurface, spec: &QuadratureSpec) -> Result<C64> {
    Ok(cauchy_matrix(std::slice::from_ref(psi), std::slice::from_ref(phi), surface, spec)?[(0, 0)])
}

/// Matrix of space-time inner products `⟨left_j | right_k⟩` over `model`.
pub fn spacetime_matrix<L, R>(left: &[L], right: &[R], model: &SpacetimeModel, spec: &QuadratureSpec) -> Result<DMatrix<C64>>
where
    L: DiracSolution,
    R: DiracSolution,
{
    check_models(model, left.iter().map(|s| s.model()).chain(right.iter().map(|s| s.model())))?;
    let nodes = model.volume_quadrature(spec);
    let points: Vec<Point2> = nodes.iter().map(|n| n.0).collect();
    let kernels: Vec<Mat2> = nodes.iter().map(|n| model.rep().gamma0 * C64::from(n.1)).collect();
    Ok(weighted_pairs(&sample(left, &points), &sample(right, &points), &kernels, spec.summation))
}

/// `⟨ψ|φ⟩ = ∫_M ≺ψ|φ≻ dμ`.
pub fn spacetime_inner<L: DiracSolution, R: DiracSolution>(psi: &L, phi: &R, model: &SpacetimeModel, spec: &QuadratureSpec) -> Result<C64> {
    Ok(spacetime_matrix(std::slice::from_ref(psi), std::slice::from_ref(phi), model, spec)?[(0, 0)])
}

/// Overlaps `⟨φ | e_j⟩` of a test section with every basis mode, integrated
/// over the support box of `φ`.
pub fn test_overlaps<T: TestSection + ?Sized>(test: &T, basis: &Basis, spec: &QuadratureSpec) -> Result<DVector<C64>> {
    check_models(basis.model(), [test.model()])?;
    let gamma0 = basis.model().rep().gamma0;
    let nodes = test.support().quadrature(spec);
    let weighted: Vec<Spinor> = nodes.iter().map(|&(p, w)| gamma0 * test.eval(p) * C64::from(w)).collect();
    Ok(DVector::from_iterator(
        basis.dim(),
        basis.modes().iter().map(|mode| {
            spec.summation
                .sum(nodes.iter().zip(&weighted).map(|(&(p, _), g)| g.dotc(&mode.eval(p))))
        }),
    ))
}

/// Gram matrix together with its Cholesky factorization.
#[derive(Debug, Clone)]
pub struct Frame {
    gram: DMatrix<C64>,
    lower: DMatrix<C64>,
    lower_inv: DMatrix<C64>,
    condition: f64,
    tag: String,
}

impl Frame {
    pub fn new(gram: DMatrix<C64>, tag: impl Into<String>) -> Result<Self> {
        let n = gram.nrows();
        let asym = (&gram - gram.adjoint()).norm();
        if asym > 1e-10 * gram.norm().max(f64::MIN_POSITIVE) {
            return Err(Error::Symmetry(asym / gram.norm()));
        }
        let herm = (&gram + gram.adjoint()) * C64::from(0.5);
        let eig = herm.clone().symmetric_eigenvalues();
        let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v.abs())));
        let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        if n > 0 && condition > MAX_GRAM_CONDITION {
            return Err(Error::Conditioning(condition));
        }
        let chol = herm.cholesky().ok_or(Error::Conditioning(f64::INFINITY))?;
        let lower = chol.l();
        let lower_inv = lower
            .clone()
            .solve_lower_triangular(&DMatrix::identity(n, n))
            .ok_or(Error::Conditioning(f64::INFINITY))?;
        Ok(Self {
            gram,
            lower,
            lower_inv,
            condition,
            tag: tag.into(),
        })
    }

    pub fn gram(&self) -> &DMatrix<C64> {
        &self.gram
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    /// `G⁻¹ b`.
    pub fn solve(&self, b: &DVector<C64>) -> DVector<C64> {
        self.lower_inv.adjoint() * (&self.lower_inv * b)
    }

    pub fn solve_matrix(&self, b: &DMatrix<C64>) -> DMatrix<C64> {
        self.lower_inv.adjoint() * (&self.lower_inv * b)
    }

    /// `(u|v)_G = u†Gv`.
    pub fn inner(&self, u: &DVector<C64>, v: &DVector<C64>) -> C64 {
        u.dotc(&(&self.gram * v))
    }

    pub fn norm(&self, u: &DVector<C64>) -> f64 {
        self.inner(u, u).re.max(0.0).sqrt()
    }

    /// `L†ML⁻†`.
    pub fn to_orthonormal(&self, m: &DMatrix<C64>) -> DMatrix<C64> {
        self.lower.adjoint() * m * self.lower_inv.adjoint()
    }

    pub fn from_orthonormal(&self, m: &DMatrix<C64>) -> DMatrix<C64> {
        self.lower_inv.adjoint() * m * self.lower.adjoint()
    }

    /// Coefficients in the orthonormal frame, `L†c`.
    pub fn vector_to_orthonormal(&self, c: &DVector<C64>) -> DVector<C64> {
        self.lower.adjoint() * c
    }
}

/// An operator on the mode span, as a coefficient matrix.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    matrix: DMatrix<C64>,
    frame: Arc<Frame>,
}

impl OperatorMatrix {
    pub fn new(matrix: DMatrix<C64>, frame: Arc<Frame>) -> Self {
        assert_eq!(matrix.shape(), (frame.dim(), frame.dim()), "operator does not match its basis");
        Self { matrix, frame }
    }

    pub fn identity(frame: Arc<Frame>) -> Self {
        let n = frame.dim();
        Self::new(DMatrix::identity(n, n), frame)
    }

    pub fn zero(frame: Arc<Frame>) -> Self {
        let n = frame.dim();
        Self::new(DMatrix::zeros(n, n), frame)
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn frame(&self) -> &Arc<Frame> {
        &self.frame
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn with_matrix(&self, matrix: DMatrix<C64>) -> Self {
        Self::new(matrix, self.frame.clone())
    }

    pub fn ensure_same_basis(&self, other: &Self) -> Result<()> {
        if self.frame.tag != other.frame.tag || self.dim() != other.dim() {
            return Err(Error::BasisMismatch(self.frame.tag.clone(), other.frame.tag.clone()));
        }
        Ok(())
    }

    /// Gram-aware adjoint `G⁻¹M†G`.
    pub fn adjoint(&self) -> Self {
        let m = self.frame.solve_matrix(&(self.matrix.adjoint() * &self.frame.gram));
        self.with_matrix(m)
    }

    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.ensure_same_basis(other)?;
        Ok(self.with_matrix(&self.matrix * &other.matrix))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.ensure_same_basis(other)?;
        Ok(self.with_matrix(&self.matrix - &other.matrix))
    }

    pub fn scale(&self, factor: f64) -> Self {
        self.with_matrix(&self.matrix * C64::from(factor))
    }

    /// `GM`; for the signature operator this recovers `A_jk = ⟨e_j|e_k⟩`.
    pub fn lowered(&self) -> DMatrix<C64> {
        &self.frame.gram * &self.matrix
    }

    pub fn orthonormal(&self) -> DMatrix<C64> {
        self.frame.to_orthonormal(&self.matrix)
    }

    /// Frobenius norm in the orthonormal frame.
    pub fn norm(&self) -> f64 {
        self.orthonormal().norm()
    }

    /// `‖M − M*‖ / ‖M‖`.
    pub fn self_adjoint_defect(&self) -> f64 {
        let m = self.orthonormal();
        let n = m.norm();
        if n == 0.0 {
            0.0
        } else {
            (&m - m.adjoint()).norm() / n
        }
    }

    pub fn apply(&self, c: &DVector<C64>) -> DVector<C64> {
        &self.matrix * c
    }
}

/// Eigen-decomposition `A v = λ G v` with `G`-orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<C64>,
    frame: Arc<Frame>,
}

impl SpectralDecomposition {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Columns are coefficient vectors with `v_i† G v_j = δ_ij`.
    pub fn eigenvectors(&self) -> &DMatrix<C64> {
        &self.eigenvectors
    }

    pub fn frame(&self) -> &Arc<Frame> {
        &self.frame
    }

    /// `G V Λ V† G`.
    pub fn reconstruct_lowered(&self) -> DMatrix<C64> {
        let lam = DMatrix::from_diagonal(&DVector::from_iterator(
            self.eigenvalues.len(),
            self.eigenvalues.iter().map(|&l| C64::from(l)),
        ));
        let gv = &self.frame.gram * &self.eigenvectors;
        &gv * lam * gv.adjoint()
    }
}

/// Relative asymmetry tolerated by [`spectral_decompose`].
pub const SYMMETRY_TOLERANCE: f64 = 1e-8;

/// Generalized Hermitian eigensolve for a `G`-self-adjoint operator.
pub fn spectral_decompose(op: &OperatorMatrix) -> Result<SpectralDecomposition> {
    let tilde = op.orthonormal();
    let scale = tilde.norm();
    let asym = (&tilde - tilde.adjoint()).norm();
    if scale > 0.0 && asym > SYMMETRY_TOLERANCE * scale {
        return Err(Error::Symmetry(asym / scale));
    }
    let herm = (&tilde + tilde.adjoint()) * C64::from(0.5);
    let eig = herm.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let y = DMatrix::from_fn(tilde.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    let frame = op.frame.clone();
    let eigenvectors = frame.lower_inv.adjoint() * y;
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
        frame,
    })
}

/// Bounded Borel functions applied through the spectral calculus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BorelFunction {
    /// `χ_(−∞,0)`.
    IndicatorNegative,
    /// `χ_(0,∞)`.
    IndicatorPositive,
    Identity,
    Constant(f64),
    /// `1 / (1 + e^{βλ})`.
    SmoothStep { beta: f64 },
    /// `λ ↦ W(ελ)`.
    Reflected { inner: Box<BorelFunction>, sign: f64 },
}

impl BorelFunction {
    pub fn constant_one() -> Self {
        BorelFunction::Constant(1.0)
    }

    pub fn eval(&self, lambda: f64) -> f64 {
        match self {
            BorelFunction::IndicatorNegative => f64::from(u8::from(lambda < 0.0)),
            BorelFunction::IndicatorPositive => f64::from(u8::from(lambda > 0.0)),
            BorelFunction::Identity => lambda,
            BorelFunction::Constant(c) => *c,
            BorelFunction::SmoothStep { beta } => {
                let z = beta * lambda;
                if z > 0.0 {
                    let e = (-z).exp();
                    e / (1.0 + e)
                } else {
                    1.0 / (1.0 + z.exp())
                }
            }
            BorelFunction::Reflected { inner, sign } => inner.eval(sign * lambda),
        }
    }

    /// `W^h(λ) = W(ε(h)λ)`.
    pub fn transformed(&self, epsilon: i8) -> Self {
        if epsilon > 0 {
            self.clone()
        } else {
            BorelFunction::Reflected {
                inner: Box::new(self.clone()),
                sign: -1.0,
            }
        }
    }

    /// Parses `indicator_negative`, `indicator_positive`, `identity`,
    /// `constant_one`, `constant:<c>`, `smooth_step` or `smooth_step:<β>`.
    pub fn parse(s: &str) -> Result<Self> {
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let num = |a: Option<&str>, default: f64| -> Result<f64> {
            a.map_or(Ok(default), |a| a.trim().parse().map_err(|_| Error::Config(format!("bad number in `{s}`"))))
        };
        Ok(match head.trim() {
            "indicator_negative" => BorelFunction::IndicatorNegative,
            "indicator_positive" => BorelFunction::IndicatorPositive,
            "identity" => BorelFunction::Identity,
            "constant_one" => BorelFunction::Constant(1.0),
            "constant" => BorelFunction::Constant(num(arg, 1.0)?),
            "smooth_step" => BorelFunction::SmoothStep { beta: num(arg, 10.0)? },
            _ => return Err(Error::Config(format!("unknown Borel function `{s}`"))),
        })
    }
}

impl fmt::Display for BorelFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BorelFunction::IndicatorNegative => write!(f, "indicator_negative"),
            BorelFunction::IndicatorPositive => write!(f, "indicator_positive"),
            BorelFunction::Identity => write!(f, "identity"),
            BorelFunction::Constant(c) => write!(f, "constant:{c}"),
            BorelFunction::SmoothStep { beta } => write!(f, "smooth_step:{beta}"),
            BorelFunction::Reflected { inner, sign } => write!(f, "{inner}∘({sign}·λ)"),
        }
    }
}

/// `A_jk = ⟨e_j|e_k⟩` by volume quadrature.
pub fn inner_product_matrix(basis: &Basis, spec: &QuadratureSpec) -> Result<DMatrix<C64>> {
    spacetime_matrix(basis.modes(), basis.modes(), basis.model(), spec)
}

/// The signature operator `S = G⁻¹A` restricted to the mode span.
pub fn assemble_signature(basis: &Basis, spec: &QuadratureSpec) -> Result<OperatorMatrix> {
    let frame = basis.frame();
    let a = inner_product_matrix(basis, spec)?;
    Ok(OperatorMatrix::new(frame.solve_matrix(&a), frame))
}

/// `Σ_i W(λ_i) v_i (v_i|·)` as a coefficient matrix.
pub fn functional_calculus(dec: &SpectralDecomposition, w: &BorelFunction) -> OperatorMatrix {
    let n = dec.eigenvalues.len();
    let weights = DMatrix::from_diagonal(&DVector::from_iterator(n, dec.eigenvalues.iter().map(|&l| C64::from(w.eval(l)))));
    let m = &dec.eigenvectors * weights * dec.eigenvectors.adjoint() * &dec.frame.gram;
    OperatorMatrix::new(m, dec.frame.clone())
}

/// Coefficients of the projection of `k_m φ` onto the span:
/// `G⁻¹ b` with `b_j = (e_j | k_m φ) = conj⟨φ|e_j⟩`.
pub fn k_project<T: TestSection + ?Sized>(test: &T, basis: &Basis, spec: &QuadratureSpec) -> Result<DVector<C64>> {
    let overlaps = test_overlaps(test, basis, spec)?;
    let frame = basis.frame();
    Ok(frame.solve(&overlaps.map(|z| z.conj())))
}

/// `⟨φ|P_W ψ⟩ = −(k φ | W(S) k ψ)` from projected coefficients.
pub fn smear_coefficients(k_phi: &DVector<C64>, k_psi: &DVector<C64>, w_of_s: &OperatorMatrix) -> C64 {
    -w_of_s.frame().inner(k_phi, &w_of_s.apply(k_psi))
}

/// Smeared kernel of the generalized fermionic projector `P_W = −W(S)k_m`.
pub fn projector_smear<A, B>(
    phi: &A,
    psi: &B,
    w: &BorelFunction,
    dec: &SpectralDecomposition,
    basis: &Basis,
    spec: &QuadratureSpec,
) -> Result<C64>
where
    A: TestSection + ?Sized,
    B: TestSection + ?Sized,
{
    let w_of_s = functional_calculus(dec, w);
    let k_phi = k_project(phi, basis, spec)?;
    let k_psi = k_project(psi, basis, spec)?;
    Ok(smear_coefficients(&k_phi, &k_psi, &w_of_s))
}

/// For each mode `e_j`, the largest `|⟨ψ|e_j⟩|` over `samples` random
/// unit-norm `ψ` in the span, from the assembled `A`.
pub fn weak_finiteness_witness<R: Rng>(basis: &Basis, a: &DMatrix<C64>, samples: usize, rng: &mut R) -> Result<Vec<f64>> {
    let frame = basis.frame();
    let n = basis.dim();
    let mut sup = vec![0.0f64; n];
    for _ in 0..samples {
        let c = DVector::from_fn(n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let c = &c / C64::from(frame.norm(&c));
        let row = c.adjoint() * a;
        for (s, v) in sup.iter_mut().zip(row.iter()) {
            *s = s.max(v.norm());
        }
    }
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{SpacetimeModel, Point2};
    use crate::solutions::{Chirality, SolutionMode, TestFunction};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn frame_of(g: DMatrix<C64>) -> Arc<Frame> {
        Arc::new(Frame::new(g, "test").unwrap())
    }

    #[test]
    fn drum_cauchy_inner_values() {
        let spec = QuadratureSpec::new(64, 64);
        let drum = SpacetimeModel::drum();
        let (l1, l2) = (SolutionMode::drum(Chirality::L, 1), SolutionMode::drum(Chirality::L, 2));
        let n0 = drum.cauchy_surface(0.0).unwrap();
        let n3 = drum.cauchy_surface(0.3).unwrap();
        let v11 = cauchy_inner(&l1, &l1, &n0, &spec).unwrap();
        assert!((v11 - C64::from(4.0 * PI * PI)).norm() < 1e-10);
        assert!(cauchy_inner(&l1, &l2, &n0, &spec).unwrap().norm() < 1e-10);
        let mixed = cauchy_inner(&l1, &l2, &n3, &spec).unwrap();
        assert!((mixed - cauchy_inner(&l1, &l2, &n0, &spec).unwrap()).norm() < 1e-6);
        assert!((cauchy_inner(&l1, &l1, &n3, &spec).unwrap() - v11).norm() < 1e-6 * v11.norm());
    }

    #[test]
    fn mismatched_models_are_rejected() {
        let spec = QuadratureSpec::new(32, 32);
        let slab = SpacetimeModel::slab(1.0, 2.0).unwrap();
        let mode = SolutionMode::drum(Chirality::L, 1);
        let surface = slab.canonical_surface();
        assert!(matches!(cauchy_inner(&mode, &mode, &surface, &spec), Err(Error::ModelMismatch(..))));
        assert!(spacetime_inner(&mode, &mode, &slab, &spec).is_err());
    }

    #[test]
    fn spacetime_inner_values() {
        let spec = QuadratureSpec::new(40, 40);
        let drum = SpacetimeModel::drum();
        let l1 = SolutionMode::drum(Chirality::L, 1);
        assert!(spacetime_inner(&l1, &l1, &drum, &spec).unwrap().norm() < 1e-14);

        let slab = SpacetimeModel::slab(1.0, 2.0).unwrap();
        let m = SolutionMode::slab(&slab, 2, crate::solutions::Branch::Positive).unwrap();
        let u = m.amplitude();
        let expected = crate::solutions::spin_product(slab.rep(), u, u) * C64::from(2.0 * TAU);
        let got = spacetime_inner(&m, &m, &slab, &spec).unwrap();
        assert!((got - expected).norm() < 1e-12);

        let other = SolutionMode::slab(&slab, -1, crate::solutions::Branch::Negative).unwrap();
        let ab = spacetime_inner(&m, &other, &slab, &spec).unwrap();
        let ba = spacetime_inner(&other, &m, &slab, &spec).unwrap();
        assert!((ab - ba.conj()).norm() < 1e-14);
    }

    #[test]
    fn conditioning_guard() {
        let g = DMatrix::from_diagonal(&DVector::from_vec(vec![c(1.0, 0.0), c(1e-13, 0.0)]));
        assert!(matches!(Frame::new(g, "bad"), Err(Error::Conditioning(_))));
        let g = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.5, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(Frame::new(g, "asym"), Err(Error::Symmetry(_))));
    }

    #[test]
    fn indicator_calculus_on_two_point_spectrum() {
        let g = DMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.5, 0.5), c(0.5, -0.5), c(1.0, 0.0)]);
        let frame = frame_of(g.clone());
        // S with spectrum {-2, 3}: build in the orthonormal frame, map back
        let tilde = DMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.0, 2.5), c(0.0, -2.5), c(0.5, 0.0)]);
        let s = OperatorMatrix::new(frame.from_orthonormal(&tilde), frame.clone());
        assert!(s.self_adjoint_defect() < 1e-14);
        let dec = spectral_decompose(&s).unwrap();
        assert_relative_eq!(dec.eigenvalues()[0], -2.0, epsilon = 1e-12);
        assert_relative_eq!(dec.eigenvalues()[1], 3.0, epsilon = 1e-12);
        let v = dec.eigenvectors();
        assert!((v.adjoint() * &g * v - DMatrix::<C64>::identity(2, 2)).norm() < 1e-12);
        assert!((dec.reconstruct_lowered() - s.lowered()).norm() < 1e-12);

        let p = functional_calculus(&dec, &BorelFunction::IndicatorNegative);
        let p2 = p.compose(&p).unwrap();
        assert!((p2.matrix() - p.matrix()).norm() < 1e-10);
        let trace: C64 = p.matrix().trace();
        assert_relative_eq!(trace.re, 1.0, epsilon = 1e-12);
        let one = functional_calculus(&dec, &BorelFunction::constant_one());
        assert!((one.matrix() - DMatrix::<C64>::identity(2, 2)).norm() < 1e-10);
        let id = functional_calculus(&dec, &BorelFunction::Identity);
        assert!((id.matrix() - s.matrix()).norm() < 1e-10);
    }

    #[test]
    fn zero_operator_has_zero_spectrum() {
        let frame = frame_of(DMatrix::identity(3, 3));
        let dec = spectral_decompose(&OperatorMatrix::zero(frame)).unwrap();
        assert!(dec.eigenvalues().iter().all(|&l| l == 0.0));
    }

    #[test]
    fn non_hermitian_input_is_rejected() {
        let frame = frame_of(DMatrix::identity(2, 2));
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(spectral_decompose(&OperatorMatrix::new(m, frame)), Err(Error::Symmetry(_))));
    }

    #[test]
    fn adjoint_is_gram_aware() {
        let g = DMatrix::from_row_slice(2, 2, &[c(3.0, 0.0), c(1.0, 1.0), c(1.0, -1.0), c(2.0, 0.0)]);
        let frame = frame_of(g.clone());
        let m = OperatorMatrix::new(DMatrix::from_row_slice(2, 2, &[c(1.0, 2.0), c(0.5, 0.0), c(-1.0, 0.3), c(0.0, 1.0)]), frame);
        let u = DVector::from_vec(vec![c(0.2, 1.0), c(-0.7, 0.1)]);
        let v = DVector::from_vec(vec![c(1.5, -0.4), c(0.3, 0.3)]);
        let lhs = m.frame().inner(&u, &m.apply(&v));
        let rhs = m.frame().inner(&m.adjoint().apply(&u), &v);
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn borel_functions() {
        assert_eq!(BorelFunction::IndicatorNegative.eval(-1.0), 1.0);
        assert_eq!(BorelFunction::IndicatorNegative.eval(0.0), 0.0);
        let step = BorelFunction::SmoothStep { beta: 10.0 };
        assert_relative_eq!(step.eval(0.0), 0.5);
        assert!(step.eval(800.0) >= 0.0 && step.eval(-800.0) <= 1.0);
        let flipped = BorelFunction::IndicatorNegative.transformed(-1);
        assert_eq!(flipped.eval(2.0), 1.0);
        assert_eq!(flipped.eval(-2.0), 0.0);
        assert_eq!(BorelFunction::parse("smooth_step:4").unwrap(), BorelFunction::SmoothStep { beta: 4.0 });
        assert!(BorelFunction::parse("nope").is_err());
    }

    #[test]
    fn k_project_duality_and_smearing() {
        let slab = SpacetimeModel::slab(1.0, 2.0).unwrap();
        let spec = QuadratureSpec::for_truncation(3);
        let basis = Basis::slab(&slab, 3, &spec).unwrap();
        let frame = basis.frame();
        let pol = Spinor::new(c(1.0, 0.2), c(-0.3, 0.5));
        let phi = TestFunction::new(&slab, Point2::new(0.9, 2.0), [0.5, 0.7], pol).unwrap();
        let psi = TestFunction::new(&slab, Point2::new(1.2, 4.0), [0.4, 0.9], pol.map(|z| z.conj())).unwrap();
        let k_phi = k_project(&phi, &basis, &spec).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let coeffs = DVector::from_fn(basis.dim(), |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let lhs = frame.inner(&k_phi, &coeffs);
            let sol = basis.superposition(coeffs.clone());
            let overlaps = test_overlaps(&phi, &basis, &spec).unwrap();
            let rhs: C64 = overlaps.iter().zip(sol.coeffs().iter()).map(|(o, c)| o * c).sum();
            assert!((lhs - rhs).norm() <= 1e-8 * rhs.norm().max(1e-300));
        }

        let s = assemble_signature(&basis, &spec).unwrap();
        let dec = spectral_decompose(&s).unwrap();
        assert_eq!(projector_smear(&phi, &psi, &BorelFunction::Constant(0.0), &dec, &basis, &spec).unwrap(), C64::from(0.0));
        let k_psi = k_project(&psi, &basis, &spec).unwrap();
        let one = projector_smear(&phi, &psi, &BorelFunction::constant_one(), &dec, &basis, &spec).unwrap();
        assert!((one + frame.inner(&k_phi, &k_psi)).norm() < 1e-10 * one.norm());
        for w in [BorelFunction::IndicatorNegative, BorelFunction::SmoothStep { beta: 10.0 }] {
            let ab = projector_smear(&phi, &psi, &w, &dec, &basis, &spec).unwrap();
            let ba = projector_smear(&psi, &phi, &w, &dec, &basis, &spec).unwrap();
            assert!((ab - ba.conj()).norm() <= 1e-8 * ab.norm());
        }
    }

    #[test]
    fn k_project_is_linear() {
        let slab = SpacetimeModel::slab(1.0, 2.0).unwrap();
        let spec = QuadratureSpec::for_truncation(2);
        let basis = Basis::slab(&slab, 2, &spec).unwrap();
        let a = TestFunction::new(&slab, Point2::new(1.0, 1.0), [0.5, 0.5], Spinor::new(c(1.0, 0.0), c(0.0, 0.0))).unwrap();
        let b = TestFunction::new(&slab, Point2::new(1.0, 1.0), [0.5, 0.5], Spinor::new(c(0.0, 0.0), c(0.0, 2.0))).unwrap();
        let sum = TestFunction::new(&slab, Point2::new(1.0, 1.0), [0.5, 0.5], Spinor::new(c(1.0, 0.0), c(0.0, 2.0))).unwrap();
        let ka = k_project(&a, &basis, &spec).unwrap();
        let kb = k_project(&b, &basis, &spec).unwrap();
        let ks = k_project(&sum, &basis, &spec).unwrap();
        assert!((ka + kb - &ks).norm() < 1e-12 * ks.norm());
    }

    #[test]
    fn bump_overlaps_decay_with_momentum() {
        let slab = SpacetimeModel::slab(1.0, 2.0).unwrap();
        let spec = QuadratureSpec::for_truncation(6);
        let basis = Basis::slab(&slab, 6, &spec).unwrap();
        let phi = TestFunction::new(&slab, Point2::new(1.0, PI), [0.6, 1.5], Spinor::new(c(1.0, 0.0), c(1.0, 0.0))).unwrap();
        let k = k_project(&phi, &basis, &spec).unwrap();
        let weight = |kk: i64| -> f64 {
            basis
                .modes()
                .iter()
                .zip(k.iter())
                .filter(|(m, _)| m.momentum() as i64 == kk)
                .map(|(_, v)| v.norm_sqr())
                .sum()
        };
        assert!(weight(0) > 0.0);
        assert!(weight(0) > 10.0 * weight(6));
        assert!(weight(1) > weight(5));
    }

    #[test]
    fn weak_finiteness_witness_is_finite() {
        let spec = QuadratureSpec::for_truncation(2);
        let basis = Basis::drum(2, &spec).unwrap();
        let a = inner_product_matrix(&basis, &spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = weak_finiteness_witness(&basis, &a, 200, &mut rng).unwrap();
        assert_eq!(w.len(), basis.dim());
        assert!(w.iter().all(|v| v.is_finite() && *v > 0.0));
    }
}
