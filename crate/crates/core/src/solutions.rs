//! Plane-wave Dirac solutions, truncated bases and compactly supported test
//! functions.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{interval_rule, CauchySurface, DiracRep, ModelKind, Point2, QuadratureSpec, SpacetimeModel, C64};
use crate::sigop::{self, Frame};

pub type Spinor = Vector2<C64>;

/// Spin scalar product `≺ψ|φ≻ = ψ†γ⁰φ`.
pub fn spin_product(rep: &DiracRep, psi: &Spinor, phi: &Spinor) -> C64 {
    psi.dotc(&(rep.gamma0 * phi))
}

/// Anything that can be evaluated as a spinor field on a model.
pub trait DiracSolution {
    fn model(&self) -> &SpacetimeModel;
    fn eval(&self, p: Point2) -> Spinor;
}

impl<S: DiracSolution + ?Sized> DiracSolution for &S {
    fn model(&self) -> &SpacetimeModel {
        (**self).model()
    }
    fn eval(&self, p: Point2) -> Spinor {
        (**self).eval(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Chirality {
    L,
    R,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    Positive,
    Negative,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Positive => 1.0,
            Branch::Negative => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModeLabel {
    Drum { chirality: Chirality, n: i64 },
    Slab { k: i64, branch: Branch },
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModeLabel::Drum { chirality, n } => write!(f, "{chirality:?}{n:+}"),
            ModeLabel::Slab { k, branch } => {
                write!(f, "k{k:+}{}", if *branch == Branch::Positive { "+" } else { "-" })
            }
        }
    }
}

/// A plane wave `u·exp(i(kx − ωt))` solving the Dirac equation.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionMode {
    label: ModeLabel,
    model: SpacetimeModel,
    amplitude: Spinor,
    omega: f64,
    momentum: f64,
}

impl SolutionMode {
    /// `ψⁿ_L = (1,0)ᵀ e^{in(x+t)}`, `ψⁿ_R = (0,1)ᵀ e^{in(x−t)}`.
    pub fn drum(chirality: Chirality, n: i64) -> Self {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let (amplitude, omega) = match chirality {
            Chirality::L => (Spinor::new(one, zero), -(n as f64)),
            Chirality::R => (Spinor::new(zero, one), n as f64),
        };
        Self {
            label: ModeLabel::Drum { chirality, n },
            model: SpacetimeModel::drum(),
            amplitude,
            omega,
            momentum: n as f64,
        }
    }

    /// Slab mode of momentum `k` on frequency branch `ω = ±√(k² + m²)`, with
    /// `u†u = 1` and the larger amplitude component real and positive.
    pub fn slab(model: &SpacetimeModel, k: i64, branch: Branch) -> Result<Self> {
        if model.kind() != ModelKind::Slab {
            return Err(Error::ModelMismatch(model.tag(), "slab".into()));
        }
        let m = model.mass();
        let kf = k as f64;
        let omega = branch.sign() * (kf * kf + m * m).sqrt();
        if omega == 0.0 {
            return Err(Error::DegenerateMode { k, mass: m });
        }
        let rep = model.rep();
        let system = rep.gamma0 * C64::from(omega) - rep.gamma1 * C64::from(kf) - nalgebra::Matrix2::identity() * C64::from(m);
        let svd = system.svd(false, true);
        let v_t = svd.v_t.expect("requested V");
        let (imin, _) = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("two singular values");
        let mut u = v_t.row(imin).adjoint();
        let pivot = if u[0].norm() >= u[1].norm() { u[0] } else { u[1] };
        u *= pivot.conj() / pivot.norm();
        u /= C64::from(u.norm());
        Ok(Self {
            label: ModeLabel::Slab { k, branch },
            model: *model,
            amplitude: u,
            omega,
            momentum: kf,
        })
    }

    pub fn label(&self) -> ModeLabel {
        self.label
    }

    pub fn amplitude(&self) -> &Spinor {
        &self.amplitude
    }

    /// Time frequency `ω`; for drum modes this is also the eigenvalue of
    /// the Hamiltonian `−iγ⁰γ¹∂ₓ` (−n for L, +n for R).
    pub fn frequency(&self) -> f64 {
        self.omega
    }

    pub fn momentum(&self) -> f64 {
        self.momentum
    }

    fn phase(&self, p: Point2) -> C64 {
        C64::from_polar(1.0, self.momentum * p.x - self.omega * p.t)
    }

    /// Closed-form evaluation, rejecting points outside the closed domain.
    pub fn evaluate(&self, p: Point2) -> Result<Spinor> {
        if !self.model.contains_closure(p, 1e-12) {
            return Err(Error::Domain {
                model: self.model.tag(),
                t: p.t,
                x: p.x,
            });
        }
        Ok(self.eval(p))
    }
}

impl DiracSolution for SolutionMode {
    fn model(&self) -> &SpacetimeModel {
        &self.model
    }

    fn eval(&self, p: Point2) -> Spinor {
        self.amplitude * self.phase(p)
    }
}

/// `∂ₓ` of a plane-wave mode, itself evaluated in closed form.
pub struct SpatialDerivative<'a>(pub &'a SolutionMode);

impl DiracSolution for SpatialDerivative<'_> {
    fn model(&self) -> &SpacetimeModel {
        self.0.model()
    }
    fn eval(&self, p: Point2) -> Spinor {
        self.0.eval(p) * C64::new(0.0, self.0.momentum)
    }
}

/// A truncated mode basis together with its Gram matrix `G_jk = (e_j|e_k)`.
#[derive(Debug, Clone)]
pub struct Basis {
    model: SpacetimeModel,
    modes: Vec<SolutionMode>,
    frame: Arc<Frame>,
    truncation: usize,
    quad: QuadratureSpec,
}

impl Basis {
    /// `{ψⁿ_L, ψⁿ_R : n = ±1, …, ±N}` ordered L then R, `n = 1, −1, 2, −2, …`.
    pub fn drum(n_max: usize, quad: &QuadratureSpec) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::Range {
                what: "truncation",
                value: 0.0,
                range: "[1, ∞)".into(),
            });
        }
        let mut modes = Vec::with_capacity(4 * n_max);
        for chirality in [Chirality::L, Chirality::R] {
            for n in 1..=n_max as i64 {
                modes.push(SolutionMode::drum(chirality, n));
                modes.push(SolutionMode::drum(chirality, -n));
            }
        }
        Self::from_modes(SpacetimeModel::drum(), modes, n_max, quad)
    }

    /// `{(k, ±) : |k| ≤ K}`, dropping the `k = 0` pair when massless.
    pub fn slab(model: &SpacetimeModel, k_max: usize, quad: &QuadratureSpec) -> Result<Self> {
        if k_max == 0 {
            return Err(Error::Range {
                what: "truncation",
                value: 0.0,
                range: "[1, ∞)".into(),
            });
        }
        let mut modes = Vec::with_capacity(2 * (2 * k_max + 1));
        let k_max = k_max as i64;
        for k in -k_max..=k_max {
            if k == 0 && model.mass() == 0.0 {
                continue;
            }
            for branch in [Branch::Positive, Branch::Negative] {
                modes.push(SolutionMode::slab(model, k, branch)?);
            }
        }
        Self::from_modes(*model, modes, k_max as usize, quad)
    }

    /// Arbitrary mode set, e.g. a span that is not symmetry-invariant.
    pub fn custom(model: SpacetimeModel, modes: Vec<SolutionMode>, truncation: usize, quad: &QuadratureSpec) -> Result<Self> {
        if let Some(m) = modes.iter().find(|m| m.model() != &model) {
            return Err(Error::ModelMismatch(model.tag(), m.model().tag()));
        }
        let mut basis = Self::from_modes(model, modes, truncation, quad)?;
        let labels: Vec<String> = basis.labels();
        let gram = basis.frame.gram().clone();
        basis.frame = Arc::new(Frame::new(gram, format!("{}:[{}]", basis.frame.tag(), labels.join(",")))?);
        Ok(basis)
    }

    fn from_modes(model: SpacetimeModel, modes: Vec<SolutionMode>, truncation: usize, quad: &QuadratureSpec) -> Result<Self> {
        let surface = model.canonical_surface();
        let refs: Vec<&SolutionMode> = modes.iter().collect();
        let gram = sigop::cauchy_matrix(&refs, &refs, &surface, quad)?;
        let tag = format!("{}:N={}:dim={}:q={}/{}", model.tag(), truncation, modes.len(), quad.surface_order, quad.volume_order);
        let frame = Arc::new(Frame::new(gram, tag)?);
        Ok(Self {
            model,
            modes,
            frame,
            truncation,
            quad: *quad,
        })
    }

    pub fn model(&self) -> &SpacetimeModel {
        &self.model
    }

    pub fn modes(&self) -> &[SolutionMode] {
        &self.modes
    }

    pub fn dim(&self) -> usize {
        self.modes.len()
    }

    pub fn gram(&self) -> &DMatrix<C64> {
        self.frame.gram()
    }

    /// Gram matrix with its factorization; shared by every operator on this basis.
    pub fn frame(&self) -> Arc<Frame> {
        self.frame.clone()
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn quad(&self) -> &QuadratureSpec {
        &self.quad
    }

    pub fn labels(&self) -> Vec<String> {
        self.modes.iter().map(|m| m.label().to_string()).collect()
    }

    pub fn index_of(&self, label: ModeLabel) -> Option<usize> {
        self.modes.iter().position(|m| m.label() == label)
    }

    /// Identifies the basis in reports and mismatch errors.
    pub fn tag(&self) -> &str {
        self.frame.tag()
    }

    /// Gram matrix evaluated on another Cauchy surface.
    pub fn gram_on(&self, surface: &CauchySurface) -> Result<DMatrix<C64>> {
        let refs: Vec<&SolutionMode> = self.modes.iter().collect();
        sigop::cauchy_matrix(&refs, &refs, surface, &self.quad)
    }

    pub fn superposition(&self, coeffs: DVector<C64>) -> Superposition<'_> {
        assert_eq!(coeffs.len(), self.dim(), "coefficient vector does not match the basis");
        Superposition { basis: self, coeffs }
    }
}

/// The solution `Σ c_j e_j`.
pub struct Superposition<'a> {
    basis: &'a Basis,
    coeffs: DVector<C64>,
}

impl Superposition<'_> {
    pub fn coeffs(&self) -> &DVector<C64> {
        &self.coeffs
    }
}

impl DiracSolution for Superposition<'_> {
    fn model(&self) -> &SpacetimeModel {
        self.basis.model()
    }

    fn eval(&self, p: Point2) -> Spinor {
        self.basis
            .modes
            .iter()
            .zip(self.coeffs.iter())
            .fold(Spinor::zeros(), |acc, (m, c)| acc + m.eval(p) * *c)
    }
}

/// `|(iγʲ∂ⱼ − m)ψ|` at `p`, derivatives by 4th-order central differences.
pub fn dirac_residual<S: DiracSolution + ?Sized>(sol: &S, p: Point2, h: f64) -> f64 {
    let d = |f: &dyn Fn(f64) -> Spinor| (f(-2.0 * h) - f(2.0 * h) + (f(h) - f(-h)) * C64::from(8.0)) / C64::from(12.0 * h);
    let dt = d(&|s| sol.eval(Point2::new(p.t + s, p.x)));
    let dx = d(&|s| sol.eval(Point2::new(p.t, p.x + s)));
    let rep = sol.model().rep();
    let i = C64::new(0.0, 1.0);
    let r = (rep.gamma0 * dt + rep.gamma1 * dx) * i - sol.eval(p) * C64::from(sol.model().mass());
    r.norm()
}

/// Axis-aligned support box `[t₀, t₁] × [x₀, x₁]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportBox {
    pub t: (f64, f64),
    pub x: (f64, f64),
}

impl SupportBox {
    pub fn corners(&self) -> [Point2; 4] {
        [
            Point2::new(self.t.0, self.x.0),
            Point2::new(self.t.0, self.x.1),
            Point2::new(self.t.1, self.x.0),
            Point2::new(self.t.1, self.x.1),
        ]
    }

    /// Whether the closed box lies in the open domain of `model`.
    pub fn is_interior(&self, model: &SpacetimeModel) -> bool {
        self.corners().iter().all(|&c| model.contains(c))
    }

    /// Tensor Gauss–Legendre rule over the box.
    pub fn quadrature(&self, spec: &QuadratureSpec) -> Vec<(Point2, f64)> {
        let ts = interval_rule(&[self.t.0, self.t.1], spec.volume_order);
        let xs = interval_rule(&[self.x.0, self.x.1], spec.volume_order);
        let mut out = Vec::with_capacity(ts.len() * xs.len());
        for &(t, wt) in &ts {
            for &(x, wx) in &xs {
                out.push((Point2::new(t, x), wt * wx));
            }
        }
        out
    }
}

/// A compactly supported spinor field used to smear distributions.
pub trait TestSection {
    fn model(&self) -> &SpacetimeModel;
    fn eval(&self, p: Point2) -> Spinor;
    fn support(&self) -> SupportBox;
}

impl<S: TestSection + ?Sized> TestSection for &S {
    fn model(&self) -> &SpacetimeModel {
        (**self).model()
    }
    fn eval(&self, p: Point2) -> Spinor {
        (**self).eval(p)
    }
    fn support(&self) -> SupportBox {
        (**self).support()
    }
}

fn bump(r: f64) -> f64 {
    if r.abs() < 1.0 {
        (-1.0 / (1.0 - r * r)).exp()
    } else {
        0.0
    }
}

fn bump_derivative(r: f64) -> f64 {
    if r.abs() < 1.0 {
        let q = 1.0 - r * r;
        bump(r) * (-2.0 * r / (q * q))
    } else {
        0.0
    }
}

/// `φ(t, x) = b((t − t₀)/w_t) · b((x − x₀)/w_x) · u` with the smooth bump
/// `b(r) = exp(−1/(1 − r²))` on `|r| < 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    model: SpacetimeModel,
    center: Point2,
    widths: [f64; 2],
    polarization: Spinor,
}

impl TestFunction {
    pub fn new(model: &SpacetimeModel, center: Point2, widths: [f64; 2], polarization: Spinor) -> Result<Self> {
        if !(widths[0] > 0.0 && widths[1] > 0.0) {
            return Err(Error::Support(format!("widths {widths:?} must be positive")));
        }
        if model.kind() == ModelKind::Slab && widths[1] >= PI {
            return Err(Error::Support(format!("spatial half-width {} wraps the circle", widths[1])));
        }
        let f = Self {
            model: *model,
            center,
            widths,
            polarization,
        };
        if !f.support().is_interior(model) {
            return Err(Error::Support(format!(
                "box {:?} around ({}, {}) is not interior to {}",
                f.support(),
                center.t,
                center.x,
                model.tag()
            )));
        }
        Ok(f)
    }

    pub fn center(&self) -> Point2 {
        self.center
    }

    pub fn widths(&self) -> [f64; 2] {
        self.widths
    }

    pub fn polarization(&self) -> &Spinor {
        &self.polarization
    }

    fn coords(&self, p: Point2) -> (f64, f64) {
        ((p.t - self.center.t) / self.widths[0], (p.x - self.center.x) / self.widths[1])
    }

    /// `∂ₓφ` in closed form.
    pub fn x_derivative(&self, p: Point2) -> Spinor {
        let (rt, rx) = self.coords(p);
        self.polarization * C64::from(bump(rt) * bump_derivative(rx) / self.widths[1])
    }
}

impl TestSection for TestFunction {
    fn model(&self) -> &SpacetimeModel {
        &self.model
    }

    fn eval(&self, p: Point2) -> Spinor {
        let (rt, rx) = self.coords(p);
        self.polarization * C64::from(bump(rt) * bump(rx))
    }

    fn support(&self) -> SupportBox {
        let (c, w) = (self.center, self.widths);
        SupportBox {
            t: (c.t - w[0], c.t + w[0]),
            x: (c.x - w[1], c.x + w[1]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn spin_product_values() {
        let rep = DiracRep::standard();
        let up = Spinor::new(c(1.0, 0.0), c(0.0, 0.0));
        let down = Spinor::new(c(0.0, 0.0), c(1.0, 0.0));
        assert_eq!(spin_product(&rep, &up, &up), c(0.0, 0.0));
        assert_eq!(spin_product(&rep, &up, &down), c(1.0, 0.0));
    }

    proptest! {
        #[test]
        fn spin_product_is_conjugate_symmetric(a in prop::array::uniform4(-5.0f64..5.0), b in prop::array::uniform4(-5.0f64..5.0)) {
            let rep = DiracRep::standard();
            let psi = Spinor::new(c(a[0], a[1]), c(a[2], a[3]));
            let phi = Spinor::new(c(b[0], b[1]), c(b[2], b[3]));
            let lhs = spin_product(&rep, &psi, &phi).conj();
            let rhs = spin_product(&rep, &phi, &psi);
            prop_assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn drum_mode_values() {
        let m = SolutionMode::drum(Chirality::L, 1);
        assert_eq!(m.evaluate(Point2::new(0.0, 0.0)).unwrap(), Spinor::new(c(1.0, 0.0), c(0.0, 0.0)));
        let v = m.evaluate(Point2::new(FRAC_PI_2, 0.0)).unwrap();
        assert!((v[0] - c(0.0, 1.0)).norm() < 1e-15);
        assert!(m.evaluate(Point2::new(3.5, 0.0)).is_err());
        assert_eq!(m.frequency(), -1.0);
        assert_eq!(SolutionMode::drum(Chirality::R, 1).frequency(), 1.0);
    }

    #[test]
    fn slab_modes_solve_amplitude_system() {
        let model = SpacetimeModel::slab(1.0, 2.0).unwrap();
        for k in -3..=3 {
            for b in [Branch::Positive, Branch::Negative] {
                let m = SolutionMode::slab(&model, k, b).unwrap();
                assert_relative_eq!(m.amplitude().norm(), 1.0, epsilon = 1e-14);
                let u0 = m.evaluate(Point2::new(0.0, 0.0)).unwrap();
                assert!((u0 - m.amplitude()).norm() < 1e-15);
                let p = Point2::new(0.7, 1.3);
                assert!(dirac_residual(&m, p, 1e-3) <= 1e-6);
            }
        }
        let massless = SpacetimeModel::slab(0.0, 2.0).unwrap();
        assert!(matches!(
            SolutionMode::slab(&massless, 0, Branch::Positive),
            Err(Error::DegenerateMode { .. })
        ));
    }

    #[test]
    fn basis_dimensions() {
        let q = QuadratureSpec::for_truncation(2);
        let drum = Basis::drum(1, &q).unwrap();
        assert_eq!(drum.labels(), vec!["L+1", "L-1", "R+1", "R-1"]);
        let slab = Basis::slab(&SpacetimeModel::slab(1.0, 2.0).unwrap(), 2, &q).unwrap();
        assert_eq!(slab.dim(), 10);
        let massless = Basis::slab(&SpacetimeModel::slab(0.0, 2.0).unwrap(), 2, &q).unwrap();
        assert_eq!(massless.dim(), 8);
        assert!(Basis::drum(0, &q).is_err());
    }

    #[test]
    fn drum_gram_matches_analytic_values() {
        let basis = Basis::drum(3, &QuadratureSpec::for_truncation(3)).unwrap();
        let four_pi_sq = 4.0 * PI * PI;
        let g = basis.gram();
        for j in 0..basis.dim() {
            for k in 0..basis.dim() {
                let expected = if j == k { four_pi_sq } else { 0.0 };
                assert!((g[(j, k)] - C64::from(expected)).norm() <= 1e-8 * four_pi_sq, "G[{j},{k}] = {}", g[(j, k)]);
            }
        }
    }

    #[test]
    fn slab_mode_norms() {
        let model = SpacetimeModel::slab(1.3, 2.0).unwrap();
        let basis = Basis::slab(&model, 3, &QuadratureSpec::for_truncation(3)).unwrap();
        for j in 0..basis.dim() {
            assert_relative_eq!(basis.gram()[(j, j)].re, 4.0 * PI * PI, epsilon = 1e-10);
        }
    }

    #[test]
    fn test_function_support() {
        let model = SpacetimeModel::drum();
        let pol = Spinor::new(c(1.0, 0.0), c(0.5, -0.5));
        let f = TestFunction::new(&model, Point2::new(1.0, 0.3), [0.4, 0.5], pol).unwrap();
        assert_eq!(f.eval(Point2::new(1.0, 0.81)), Spinor::zeros());
        assert_eq!(f.eval(Point2::new(1.41, 0.3)), Spinor::zeros());
        assert!(f.eval(Point2::new(1.0, 0.3)).norm() > 0.0);
        assert!(TestFunction::new(&model, Point2::new(0.3, 0.0), [0.4, 0.5], pol).is_err());
        assert!(TestFunction::new(&model, Point2::new(1.0, 2.0), [0.4, 0.5], pol).is_err());
    }

    #[test]
    fn test_function_derivative_matches_differences() {
        let model = SpacetimeModel::slab(1.0, 2.0).unwrap();
        let f = TestFunction::new(&model, Point2::new(1.0, 2.0), [0.5, 0.8], Spinor::new(c(1.0, 0.0), c(0.0, 1.0))).unwrap();
        let p = Point2::new(1.1, 2.3);
        let h = 1e-5;
        let fd = (f.eval(Point2::new(p.t, p.x + h)) - f.eval(Point2::new(p.t, p.x - h))) / C64::from(2.0 * h);
        assert!((fd - f.x_derivative(p)).norm() < 1e-8);
    }
}
