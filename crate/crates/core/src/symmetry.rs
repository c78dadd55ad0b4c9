//! Space-time symmetries lifted to the spinor bundle, and their unitary
//! implementation on the mode span.
//!
//! The drum carries only parity `(t, x) ↦ (t, −x)`. The slab group is
//! generated by translations `x ↦ x + a`, parity and the time reflection
//! `t ↦ T − t`. Spinor lifts are constant: `Φ_P = γ⁰`, `Φ_T = iγ¹`,
//! `Φ_a = 1`. `Φ_P` and `Φ_T` anticommute, so the lift of the full slab
//! group is projective: `Φ_g Φ_h = ±Φ_{gh}`, the sign being `−1` exactly
//! when a time reflection is followed by a parity. Every quantity built from
//! `U*(·)U` is insensitive to that sign.

use std::fmt;

use nalgebra::{DMatrix, DVector, Matrix2};

use crate::error::{Error, Result};
use crate::models::{minkowski, Mat2, ModelKind, Point2, SpacetimeModel, C64};
use crate::sigop::{self, OperatorMatrix};
use crate::solutions::{Basis, DiracSolution, SolutionMode, SpatialDerivative, Spinor, SupportBox, TestFunction, TestSection};

/// Largest axiom defect accepted for constructed actions.
pub const AXIOM_TOLERANCE: f64 = 1e-12;

/// Largest relative residual of a pushed-forward mode outside the span.
pub const SPAN_TOLERANCE: f64 = 1e-8;

/// Element `(a, p, r)` acting as `(t, x) ↦ (r ? T − t : t, (p ? −x : x) + a)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupElement {
    pub shift: f64,
    pub parity: bool,
    pub time_flip: bool,
}

impl GroupElement {
    pub const IDENTITY: Self = Self {
        shift: 0.0,
        parity: false,
        time_flip: false,
    };

    pub fn translation(a: f64) -> Self {
        Self {
            shift: a,
            ..Self::IDENTITY
        }
    }

    pub fn parity() -> Self {
        Self {
            parity: true,
            ..Self::IDENTITY
        }
    }

    pub fn time_reflection() -> Self {
        Self {
            time_flip: true,
            ..Self::IDENTITY
        }
    }

    /// `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &Self) -> Self {
        let s = if self.parity { -1.0 } else { 1.0 };
        Self {
            shift: self.shift + s * other.shift,
            parity: self.parity ^ other.parity,
            time_flip: self.time_flip ^ other.time_flip,
        }
    }

    pub fn inverse(&self) -> Self {
        let s = if self.parity { -1.0 } else { 1.0 };
        Self {
            shift: -s * self.shift,
            ..*self
        }
    }

    /// Sign in `Φ_g Φ_h = sign · Φ_{gh}`.
    pub fn cocycle(&self, other: &Self) -> f64 {
        if self.time_flip && other.parity {
            -1.0
        } else {
            1.0
        }
    }
}

/// A local group of spinor-bundle isomorphisms, restricted to one element.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryAction {
    name: String,
    model: SpacetimeModel,
    element: GroupElement,
    jacobian: Matrix2<f64>,
    spinor: Mat2,
    spinor_inv: Mat2,
    epsilon: i8,
}

impl fmt::Display for SymmetryAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} on {}", self.name, self.model)
    }
}

fn parse_name(name: &str) -> Option<GroupElement> {
    match name.trim() {
        "identity" => Some(GroupElement::IDENTITY),
        "parity" => Some(GroupElement::parity()),
        "time-reflection" | "time_reflection" => Some(GroupElement::time_reflection()),
        other => other
            .strip_prefix("translate:")
            .and_then(|a| a.trim().parse::<f64>().ok())
            .filter(|a| a.is_finite())
            .map(GroupElement::translation),
    }
}

/// Builds `identity`, `parity`, `time-reflection` or `translate:<a>`.
pub fn make_action(model: &SpacetimeModel, name: &str) -> Result<SymmetryAction> {
    let element = parse_name(name).ok_or_else(|| Error::UnsupportedSymmetry {
        name: name.to_string(),
        model: model.tag(),
    })?;
    let mut action = SymmetryAction::from_element(model, element)?;
    action.name = name.trim().to_string();
    Ok(action)
}

impl SymmetryAction {
    pub fn from_element(model: &SpacetimeModel, element: GroupElement) -> Result<Self> {
        if model.kind() == ModelKind::Drum && (element.time_flip || element.shift != 0.0) {
            return Err(Error::UnsupportedSymmetry {
                name: format!("{element:?}"),
                model: model.tag(),
            });
        }
        let rep = model.rep();
        let i = C64::new(0.0, 1.0);
        let mut spinor = Mat2::identity();
        if element.parity {
            spinor *= rep.gamma0;
        }
        if element.time_flip {
            spinor *= rep.gamma1 * i;
        }
        let spinor_inv = spinor.try_inverse().expect("lifts are invertible");
        let jacobian = Matrix2::new(
            if element.time_flip { -1.0 } else { 1.0 },
            0.0,
            0.0,
            if element.parity { -1.0 } else { 1.0 },
        );
        let mut parts = Vec::new();
        if element.shift != 0.0 {
            parts.push(format!("translate:{}", element.shift));
        }
        if element.parity {
            parts.push("parity".to_string());
        }
        if element.time_flip {
            parts.push("time-reflection".to_string());
        }
        let name = if parts.is_empty() { "identity".to_string() } else { parts.join("∘") };
        Ok(Self {
            name,
            model: *model,
            element,
            jacobian,
            spinor,
            spinor_inv,
            epsilon: if element.time_flip { -1 } else { 1 },
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn model(&self) -> &SpacetimeModel {
        &self.model
    }

    pub fn element(&self) -> GroupElement {
        self.element
    }

    pub fn jacobian(&self) -> &Matrix2<f64> {
        &self.jacobian
    }

    pub fn spinor_matrix(&self) -> &Mat2 {
        &self.spinor
    }

    /// Stored time-orientation sign `ε(h)`.
    pub fn epsilon(&self) -> i8 {
        self.epsilon
    }

    /// Group product `self ∘ other`; the spinor matrix is the exact product
    /// of the two lifts.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.model != other.model {
            return Err(Error::ModelMismatch(self.model.tag(), other.model.tag()));
        }
        let mut out = Self::from_element(&self.model, self.element.compose(&other.element))?;
        out.spinor = self.spinor * other.spinor;
        out.spinor_inv = other.spinor_inv * self.spinor_inv;
        out.name = format!("{}∘{}", self.name, other.name);
        Ok(out)
    }

    pub fn map_point(&self, p: Point2) -> Point2 {
        let g = &self.element;
        let t = if g.time_flip { self.model.lifetime() - p.t } else { p.t };
        let x = if g.parity { -p.x } else { p.x };
        Point2::new(t, x + g.shift)
    }

    pub fn inverse_point(&self, p: Point2) -> Point2 {
        let g = &self.element;
        let t = if g.time_flip { self.model.lifetime() - p.t } else { p.t };
        let x = p.x - g.shift;
        Point2::new(t, if g.parity { -x } else { x })
    }

    /// Image of a support box under the point map.
    pub fn map_box(&self, b: &SupportBox) -> SupportBox {
        let g = &self.element;
        let t = if g.time_flip {
            let tt = self.model.lifetime();
            (tt - b.t.1, tt - b.t.0)
        } else {
            b.t
        };
        let x = if g.parity { (-b.x.1, -b.x.0) } else { b.x };
        SupportBox {
            t,
            x: (x.0 + g.shift, x.1 + g.shift),
        }
    }

    /// `‖JᵀηJ − η‖`.
    pub fn isometry_defect(&self) -> f64 {
        let eta = minkowski();
        (self.jacobian.transpose() * eta * self.jacobian - eta).abs().max()
    }

    /// `max_u ‖γ(Ju) − Φγ(u)Φ⁻¹‖` over the coordinate basis vectors.
    pub fn clifford_defect(&self) -> f64 {
        let rep = self.model.rep();
        [[1.0, 0.0], [0.0, 1.0]]
            .iter()
            .map(|u| {
                let ju = self.jacobian * nalgebra::Vector2::new(u[0], u[1]);
                let lhs = rep.clifford([ju[0], ju[1]]);
                let rhs = self.spinor * rep.clifford(*u) * self.spinor_inv;
                (lhs - rhs).norm()
            })
            .fold(0.0, f64::max)
    }

    /// `‖Φ†γ⁰Φ − εγ⁰‖`.
    pub fn spin_sign_defect(&self) -> f64 {
        let g0 = self.model.rep().gamma0;
        (self.spinor.adjoint() * g0 * self.spinor - g0 * C64::from(f64::from(self.epsilon))).norm()
    }

    /// Whether the point map sends sampled domain points into the domain and
    /// back; `samples` points per axis.
    pub fn preserves_domain(&self, samples: usize) -> bool {
        let m = &self.model;
        let n = samples.max(2);
        (1..n).all(|i| {
            (1..n).all(|j| {
                let (u, v) = (i as f64 / n as f64, j as f64 / n as f64);
                let p = match m.kind() {
                    ModelKind::Drum => {
                        let x = std::f64::consts::PI * (2.0 * v - 1.0);
                        Point2::new(u * (std::f64::consts::PI - x.abs()), x)
                    }
                    ModelKind::Slab => Point2::new(u * m.lifetime(), v * m.circumference()),
                };
                !m.contains(p) || (m.contains(self.map_point(p)) && m.contains(self.inverse_point(p)))
            })
        })
    }

    /// Definition-level checks: isometry, Clifford intertwining, spin-product
    /// sign, domain preservation. The potential vanishes identically.
    pub fn verify_axioms(&self) -> Result<()> {
        let checks = [
            ("isometry", self.isometry_defect()),
            ("Clifford compatibility", self.clifford_defect()),
            ("spin product sign", self.spin_sign_defect()),
        ];
        for (what, defect) in checks {
            if defect > AXIOM_TOLERANCE {
                return Err(Error::Axiom(format!("{what} defect {defect:e} for {self}")));
            }
        }
        if !self.preserves_domain(24) {
            return Err(Error::Axiom(format!("{self} does not preserve the domain")));
        }
        epsilon_of(self).map(|_| ())
    }
}

/// Time-orientation sign read off the Jacobian; must agree with the stored
/// `ε` and with the spin-product sign.
pub fn epsilon_of(action: &SymmetryAction) -> Result<i8> {
    let image_of_dt = action.jacobian * nalgebra::Vector2::new(1.0, 0.0);
    let eps: i8 = if image_of_dt[0] > 0.0 { 1 } else { -1 };
    if eps != action.epsilon {
        return Err(Error::Axiom(format!(
            "{action}: Jacobian gives ε = {eps}, stored ε = {}",
            action.epsilon
        )));
    }
    if action.spin_sign_defect() > AXIOM_TOLERANCE {
        return Err(Error::Axiom(format!("{action}: Φ†γ⁰Φ ≠ εγ⁰")));
    }
    Ok(eps)
}

/// `(Φ_* ψ)(p) = Φ ψ(f⁻¹(p))`.
pub struct Pushforward<'a, S> {
    action: &'a SymmetryAction,
    inner: S,
}

pub fn pushforward<S: DiracSolution>(action: &SymmetryAction, psi: S) -> Result<Pushforward<'_, S>> {
    if psi.model() != action.model() {
        return Err(Error::ModelMismatch(action.model().tag(), psi.model().tag()));
    }
    Ok(Pushforward { action, inner: psi })
}

impl<S: DiracSolution> DiracSolution for Pushforward<'_, S> {
    fn model(&self) -> &SpacetimeModel {
        self.action.model()
    }

    fn eval(&self, p: Point2) -> Spinor {
        self.action.spinor * self.inner.eval(self.action.inverse_point(p))
    }
}

/// Push-forward of a test section; its support is the image box.
pub struct PushedTest<'a, T> {
    action: &'a SymmetryAction,
    inner: T,
    support: SupportBox,
}

pub fn push_test<T: TestSection>(action: &SymmetryAction, test: T) -> Result<PushedTest<'_, T>> {
    if test.model() != action.model() {
        return Err(Error::ModelMismatch(action.model().tag(), test.model().tag()));
    }
    let support = action.map_box(&test.support());
    if !support.is_interior(action.model()) {
        return Err(Error::Support(format!("{} maps the support to {support:?}", action.name())));
    }
    Ok(PushedTest {
        action,
        inner: test,
        support,
    })
}

impl<T: TestSection> TestSection for PushedTest<'_, T> {
    fn model(&self) -> &SpacetimeModel {
        self.action.model()
    }

    fn eval(&self, p: Point2) -> Spinor {
        self.action.spinor * self.inner.eval(self.action.inverse_point(p))
    }

    fn support(&self) -> SupportBox {
        self.support
    }
}

/// `M ψ` for a constant spinor matrix `M`.
struct Multiplied<S> {
    matrix: Mat2,
    inner: S,
}

impl<S: DiracSolution> DiracSolution for Multiplied<S> {
    fn model(&self) -> &SpacetimeModel {
        self.inner.model()
    }
    fn eval(&self, p: Point2) -> Spinor {
        self.matrix * self.inner.eval(p)
    }
}

/// `ψ − Πψ`, evaluated pointwise to avoid cancellation in `‖ψ‖² − ‖Πψ‖²`.
struct Remainder<'a, S> {
    sol: &'a S,
    fit: crate::solutions::Superposition<'a>,
}

impl<S: DiracSolution> DiracSolution for Remainder<'_, S> {
    fn model(&self) -> &SpacetimeModel {
        self.sol.model()
    }
    fn eval(&self, p: Point2) -> Spinor {
        self.sol.eval(p) - self.fit.eval(p)
    }
}

/// Projects each solution onto the span: returns the coefficient matrix
/// (one column per solution) and the largest relative residual
/// `‖ψ − Πψ‖ / ‖ψ‖`, with the offending column index.
pub fn project_onto_span<S: DiracSolution>(sols: &[S], basis: &Basis) -> Result<(DMatrix<C64>, Vec<f64>)> {
    let surface = basis.model().canonical_surface();
    let quad = basis.quad();
    let b = sigop::cauchy_matrix(basis.modes(), sols, &surface, quad)?;
    let frame = basis.frame();
    let coeffs = frame.solve_matrix(&b);
    let residuals = (0..sols.len())
        .map(|j| -> Result<f64> {
            let norm_sq = sigop::cauchy_inner(&sols[j], &sols[j], &surface, quad)?.re;
            let remainder = Remainder {
                sol: &sols[j],
                fit: basis.superposition(coeffs.column(j).into_owned()),
            };
            let rem_sq = sigop::cauchy_inner(&remainder, &remainder, &surface, quad)?.re;
            Ok(if norm_sq > 0.0 { (rem_sq.max(0.0) / norm_sq).sqrt() } else { 0.0 })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((coeffs, residuals))
}

fn project_checked<S: DiracSolution>(sols: &[S], basis: &Basis) -> Result<OperatorMatrix> {
    let (coeffs, residuals) = project_onto_span(sols, basis)?;
    if let Some((j, &r)) = residuals.iter().enumerate().find(|(_, &r)| r > SPAN_TOLERANCE) {
        return Err(Error::SpanEscape {
            label: basis.modes()[j].label().to_string(),
            residual: r,
        });
    }
    Ok(OperatorMatrix::new(coeffs, basis.frame()))
}

/// `U^h` on the span: column `j` holds the coefficients of `Φ_* e_j`.
pub fn unitary_matrix(action: &SymmetryAction, basis: &Basis) -> Result<OperatorMatrix> {
    if action.model() != basis.model() {
        return Err(Error::ModelMismatch(action.model().tag(), basis.model().tag()));
    }
    let pushed = basis
        .modes()
        .iter()
        .map(|m| pushforward(action, m))
        .collect::<Result<Vec<_>>>()?;
    project_checked(&pushed, basis)
}

/// `‖U†GU − G‖ / ‖G‖`.
pub fn unitarity_defect(u: &OperatorMatrix) -> f64 {
    let g = u.frame().gram();
    (u.matrix().adjoint() * g * u.matrix() - g).norm() / g.norm()
}

/// Finite-difference settings for generators of the slab translations `∂ₓ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorSpec {
    pub step: f64,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        Self { step: 1e-3 }
    }
}

impl GeneratorSpec {
    pub fn new(step: f64) -> Result<Self> {
        if !(step > 0.0 && step <= 0.1) {
            return Err(Error::Range {
                what: "generator step",
                value: step,
                range: "(0, 0.1]".into(),
            });
        }
        Ok(Self { step })
    }

    pub fn halved(&self) -> Self {
        Self { step: 0.5 * self.step }
    }
}

fn require_slab(basis: &Basis, what: &str) -> Result<()> {
    if basis.model().kind() != ModelKind::Slab {
        return Err(Error::UnsupportedSymmetry {
            name: what.to_string(),
            model: basis.model().tag(),
        });
    }
    Ok(())
}

/// `X = −i (U(δ) − U(−δ)) / 2δ` for the translation subgroup.
pub fn generator_matrix(spec: &GeneratorSpec, basis: &Basis) -> Result<OperatorMatrix> {
    require_slab(basis, "translation generator")?;
    let spec = GeneratorSpec::new(spec.step)?;
    let model = basis.model();
    let fwd = unitary_matrix(&SymmetryAction::from_element(model, GroupElement::translation(spec.step))?, basis)?;
    let bwd = unitary_matrix(&SymmetryAction::from_element(model, GroupElement::translation(-spec.step))?, basis)?;
    let m = (fwd.matrix() - bwd.matrix()) * C64::new(0.0, -1.0 / (2.0 * spec.step));
    Ok(OperatorMatrix::new(m, basis.frame()))
}

/// The translation generator without differencing: `X e_j = i∂ₓ e_j`,
/// projected onto the span.
pub fn exact_translation_generator(basis: &Basis) -> Result<OperatorMatrix> {
    require_slab(basis, "translation generator")?;
    let i = C64::new(0.0, 1.0);
    let derived: Vec<Multiplied<SpatialDerivative<'_>>> = basis
        .modes()
        .iter()
        .map(|m| Multiplied {
            matrix: Mat2::identity() * i,
            inner: SpatialDerivative(m),
        })
        .collect();
    project_checked(&derived, basis)
}

/// Drum Hamiltonian `H = −iγ⁰γ¹∂ₓ` on the span.
pub fn hamiltonian_matrix(basis: &Basis) -> Result<OperatorMatrix> {
    if basis.model().kind() != ModelKind::Drum {
        return Err(Error::ModelMismatch("drum(m=0)".into(), basis.model().tag()));
    }
    let rep = basis.model().rep();
    let h = rep.gamma0 * rep.gamma1 * C64::new(0.0, -1.0);
    let derived: Vec<Multiplied<SpatialDerivative<'_>>> = basis
        .modes()
        .iter()
        .map(|m: &SolutionMode| Multiplied {
            matrix: h,
            inner: SpatialDerivative(m),
        })
        .collect();
    project_checked(&derived, basis)
}

/// Coefficients of `k_m(L_x η)` for the translation Lie derivative
/// `L_x η = −∂ₓη`, using `⟨−∂ₓη | e_j⟩ = ⟨η | ∂ₓe_j⟩`.
pub fn lie_derivative_k_coefficients(test: &TestFunction, basis: &Basis) -> Result<DVector<C64>> {
    require_slab(basis, "translation Lie derivative")?;
    let overlaps = sigop::test_overlaps(test, basis, basis.quad())?;
    let derived = DVector::from_iterator(
        basis.dim(),
        basis
            .modes()
            .iter()
            .zip(overlaps.iter())
            .map(|(m, o)| (o * C64::new(0.0, m.momentum())).conj()),
    );
    Ok(basis.frame().solve(&derived))
}

/// Coefficients of `k_m(L^δ η)` with the central difference
/// `L^δ η = ((Φ_δ)_*η − (Φ_{−δ})_*η) / 2δ`.
pub fn lie_derivative_k_coefficients_fd(test: &TestFunction, basis: &Basis, spec: &GeneratorSpec) -> Result<DVector<C64>> {
    require_slab(basis, "translation Lie derivative")?;
    let model = basis.model();
    let fwd = SymmetryAction::from_element(model, GroupElement::translation(spec.step))?;
    let bwd = SymmetryAction::from_element(model, GroupElement::translation(-spec.step))?;
    let kf = sigop::k_project(&push_test(&fwd, test)?, basis, basis.quad())?;
    let kb = sigop::k_project(&push_test(&bwd, test)?, basis, basis.quad())?;
    Ok((kf - kb) / C64::from(2.0 * spec.step))
}
