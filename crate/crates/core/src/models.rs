//! The two flat model space-times, their Cauchy-surface families and the
//! Gauss–Legendre rules used to integrate over surfaces and regions.
//!
//! * **Drum**: the open triangle `0 < t < π − |x|` of 1+1 Minkowski space,
//!   massless, foliated by the corner-anchored tents `t = s(π − |x|)`.
//! * **Slab**: `(0, T) × S¹` with circumference `2π`, foliated by the flat
//!   slices `t = c`.
//!
//! Every interval handed to Gauss–Legendre is first split at non-smooth
//! points (the tent kink at `x = 0`) and then into panels no longer than `π`.

use std::f64::consts::{PI, TAU};
use std::fmt;

use gauss_quad::GaussLegendre;
use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type Mat2 = Matrix2<C64>;

/// Longest interval covered by a single Gauss–Legendre panel.
pub const MAX_PANEL: f64 = PI;

/// Minkowski metric `diag(+1, −1)`.
pub fn minkowski() -> Matrix2<f64> {
    Matrix2::new(1.0, 0.0, 0.0, -1.0)
}

/// Dirac matrices of a 1+1 dimensional Clifford representation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiracRep {
    pub gamma0: Mat2,
    pub gamma1: Mat2,
}

impl DiracRep {
    /// `γ⁰ = [[0, 1], [1, 0]]`, `γ¹ = [[0, 1], [−1, 0]]`.
    pub fn standard() -> Self {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        Self {
            gamma0: Mat2::new(zero, one, one, zero),
            gamma1: Mat2::new(zero, one, -one, zero),
        }
    }

    pub fn gamma(&self, a: usize) -> &Mat2 {
        match a {
            0 => &self.gamma0,
            1 => &self.gamma1,
            _ => panic!("no Dirac matrix with index {a} in two dimensions"),
        }
    }

    /// Clifford multiplication by a vector with contravariant components
    /// `u = (uᵗ, uˣ)`: `γ(u) = η_{ab} uᵇ γᵃ = uᵗγ⁰ − uˣγ¹`, so that
    /// `γ(u)γ(v) + γ(v)γ(u) = 2η(u, v)`.
    pub fn clifford(&self, u: [f64; 2]) -> Mat2 {
        self.gamma0 * C64::from(u[0]) - self.gamma1 * C64::from(u[1])
    }

    /// Largest entry of `γᵃγᵇ + γᵇγᵃ − 2ηᵃᵇ`.
    pub fn anticommutator_defect(&self) -> f64 {
        let eta = minkowski();
        let mut worst = 0.0f64;
        for a in 0..2 {
            for b in 0..2 {
                let ac = self.gamma(a) * self.gamma(b) + self.gamma(b) * self.gamma(a);
                let target = Mat2::identity() * C64::from(2.0 * eta[(a, b)]);
                worst = worst.max((ac - target).norm());
            }
        }
        worst
    }

    /// Largest entry of `(γᵃ)†γ⁰ − γ⁰γᵃ`.
    pub fn spin_symmetry_defect(&self) -> f64 {
        (0..2)
            .map(|a| {
                let g = self.gamma(a);
                (g.adjoint() * self.gamma0 - self.gamma0 * g).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// A space-time point in natural units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub t: f64,
    pub x: f64,
}

impl Point2 {
    pub const fn new(t: f64, x: f64) -> Self {
        Self { t, x }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Drum,
    Slab,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Drum => "drum",
            ModelKind::Slab => "slab",
        })
    }
}

/// A flat globally hyperbolic region with vanishing external potential.
/// `∂_t` is future-directed in both models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpacetimeModel {
    kind: ModelKind,
    mass: f64,
    lifetime: f64,
    rep: DiracRep,
}

impl SpacetimeModel {
    /// The massless Minkowski drum `0 < t < π − |x|`.
    pub fn drum() -> Self {
        Self {
            kind: ModelKind::Drum,
            mass: 0.0,
            lifetime: PI,
            rep: DiracRep::standard(),
        }
    }

    /// The periodic slab `(0, T) × S¹`, circumference `2π`.
    pub fn slab(mass: f64, lifetime: f64) -> Result<Self> {
        if !(mass.is_finite() && mass >= 0.0) {
            return Err(Error::Range {
                what: "mass",
                value: mass,
                range: "[0, ∞)".into(),
            });
        }
        if !(lifetime.is_finite() && lifetime > 0.0) {
            return Err(Error::Range {
                what: "slab_lifetime",
                value: lifetime,
                range: "(0, ∞)".into(),
            });
        }
        Ok(Self {
            kind: ModelKind::Slab,
            mass,
            lifetime,
            rep: DiracRep::standard(),
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Time extent of the region (`π` for the drum).
    pub fn lifetime(&self) -> f64 {
        self.lifetime
    }

    pub fn circumference(&self) -> f64 {
        TAU
    }

    pub fn rep(&self) -> &DiracRep {
        &self.rep
    }

    /// Space-time volume of the region.
    pub fn volume(&self) -> f64 {
        match self.kind {
            ModelKind::Drum => PI * PI,
            ModelKind::Slab => self.lifetime * TAU,
        }
    }

    /// Open-domain membership; slab points are identified modulo `2π` in `x`.
    pub fn contains(&self, p: Point2) -> bool {
        match self.kind {
            ModelKind::Drum => p.t > 0.0 && p.t < PI - p.x.abs(),
            ModelKind::Slab => p.t > 0.0 && p.t < self.lifetime && p.x.is_finite(),
        }
    }

    /// Membership in the closed domain, with slack `tol`.
    pub fn contains_closure(&self, p: Point2, tol: f64) -> bool {
        match self.kind {
            ModelKind::Drum => p.t >= -tol && p.t <= PI - p.x.abs() + tol && p.x.abs() <= PI + tol,
            ModelKind::Slab => p.t >= -tol && p.t <= self.lifetime + tol && p.x.is_finite(),
        }
    }

    /// Canonical representative of a point (slab `x` reduced to `[0, 2π)`).
    pub fn reduce(&self, p: Point2) -> Point2 {
        match self.kind {
            ModelKind::Drum => p,
            ModelKind::Slab => Point2::new(p.t, p.x.rem_euclid(TAU)),
        }
    }

    /// Tent parameter `s ∈ [0, 1)` for the drum, slice time `c ∈ (0, T)` for the slab.
    pub fn cauchy_surface(&self, param: f64) -> Result<CauchySurface> {
        let ok = match self.kind {
            ModelKind::Drum => (0.0..1.0).contains(&param),
            ModelKind::Slab => param > 0.0 && param < self.lifetime,
        };
        if !ok {
            return Err(Error::Range {
                what: "surface parameter",
                value: param,
                range: match self.kind {
                    ModelKind::Drum => "[0, 1)".into(),
                    ModelKind::Slab => format!("(0, {})", self.lifetime),
                },
            });
        }
        Ok(CauchySurface {
            model: *self,
            param,
        })
    }

    /// Surface on which Gram matrices are assembled: the drum's `t = 0`
    /// limit tent, the slab's mid-slice `t = T/2`.
    pub fn canonical_surface(&self) -> CauchySurface {
        let param = match self.kind {
            ModelKind::Drum => 0.0,
            ModelKind::Slab => 0.5 * self.lifetime,
        };
        CauchySurface {
            model: *self,
            param,
        }
    }

    /// Nodes and weights of an iterated Gauss–Legendre rule over the region.
    pub fn volume_quadrature(&self, spec: &QuadratureSpec) -> Vec<(Point2, f64)> {
        let n = spec.volume_order;
        let mut out = Vec::new();
        match self.kind {
            ModelKind::Drum => {
                for (x, wx) in interval_rule(&[-PI, 0.0, PI], n) {
                    for (t, wt) in interval_rule(&[0.0, PI - x.abs()], n) {
                        out.push((Point2::new(t, x), wx * wt));
                    }
                }
            }
            ModelKind::Slab => {
                let xs = interval_rule(&[0.0, TAU], n);
                for (t, wt) in interval_rule(&[0.0, self.lifetime], n) {
                    for &(x, wx) in &xs {
                        out.push((Point2::new(t, x), wx * wt));
                    }
                }
            }
        }
        out
    }

    /// Short identifier used in reports and mismatch errors.
    pub fn tag(&self) -> String {
        match self.kind {
            ModelKind::Drum => "drum(m=0)".to_string(),
            ModelKind::Slab => format!("slab(m={},T={})", self.mass, self.lifetime),
        }
    }
}

impl fmt::Display for SpacetimeModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tag())
    }
}

/// A spacelike graph surface `t = h(x)` of a model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CauchySurface {
    model: SpacetimeModel,
    param: f64,
}

/// One quadrature node on a Cauchy surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceNode {
    pub point: Point2,
    /// Future unit normal `ν = (1, h′)/√(1 − h′²)`.
    pub normal: [f64; 2],
    /// Weight for the induced measure `dμ = √(1 − h′²) dx`.
    pub weight: f64,
    /// Un-normalized normal `(1, h′)`; `γ(flux)·dx` equals `γ(ν)·dμ`.
    pub flux: [f64; 2],
    /// Weight for the coordinate measure `dx`.
    pub dx: f64,
}

impl CauchySurface {
    pub fn model(&self) -> &SpacetimeModel {
        &self.model
    }

    pub fn param(&self) -> f64 {
        self.param
    }

    pub fn height(&self, x: f64) -> f64 {
        match self.model.kind {
            ModelKind::Drum => self.param * (PI - x.abs()),
            ModelKind::Slab => self.param,
        }
    }

    /// `h′(x)`; at the tent kink the one-sided slopes have equal magnitude
    /// and the value returned is `0`.
    pub fn slope(&self, x: f64) -> f64 {
        match self.model.kind {
            ModelKind::Drum if x > 0.0 => -self.param,
            ModelKind::Drum if x < 0.0 => self.param,
            _ => 0.0,
        }
    }

    pub fn normal(&self, x: f64) -> [f64; 2] {
        let h1 = self.slope(x);
        let g = (1.0 - h1 * h1).sqrt();
        [1.0 / g, h1 / g]
    }

    /// Spatial parameter domain, including interior break points.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self.model.kind {
            ModelKind::Drum => vec![-PI, 0.0, PI],
            ModelKind::Slab => vec![0.0, TAU],
        }
    }

    /// Total induced measure `∫ √(1 − h′²) dx`.
    pub fn measure(&self) -> f64 {
        match self.model.kind {
            ModelKind::Drum => TAU * (1.0 - self.param * self.param).sqrt(),
            ModelKind::Slab => TAU,
        }
    }

    pub fn quadrature(&self, spec: &QuadratureSpec) -> Vec<SurfaceNode> {
        interval_rule(&self.breakpoints(), spec.surface_order)
            .into_iter()
            .map(|(x, dx)| {
                let h1 = self.slope(x);
                let g = (1.0 - h1 * h1).sqrt();
                SurfaceNode {
                    point: Point2::new(self.height(x), x),
                    normal: [1.0 / g, h1 / g],
                    weight: g * dx,
                    flux: [1.0, h1],
                    dx,
                }
            })
            .collect()
    }
}

/// Accumulation order for quadrature sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Summation {
    /// Plain left-to-right summation in node order.
    #[default]
    Sequential,
    /// Neumaier-compensated summation in node order.
    Compensated,
}

impl Summation {
    pub fn sum<I: IntoIterator<Item = C64>>(self, terms: I) -> C64 {
        match self {
            Summation::Sequential => terms.into_iter().fold(C64::new(0.0, 0.0), |a, b| a + b),
            Summation::Compensated => {
                let (mut re, mut im) = (Neumaier::default(), Neumaier::default());
                for z in terms {
                    re.add(z.re);
                    im.add(z.im);
                }
                C64::new(re.total(), im.total())
            }
        }
    }
}

#[derive(Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Gauss–Legendre orders for surface and volume integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Nodes per surface panel.
    pub surface_order: usize,
    /// Nodes per panel and axis for region integrals.
    pub volume_order: usize,
    #[serde(default)]
    pub summation: Summation,
}

impl QuadratureSpec {
    pub fn new(surface_order: usize, volume_order: usize) -> Self {
        Self {
            surface_order,
            volume_order,
            summation: Summation::Sequential,
        }
    }

    /// Smallest orders allowed by the resolution rule `order ≥ 10·n_max`
    /// (never below 32).
    pub fn for_truncation(n_max: usize) -> Self {
        let order = (10 * n_max).max(32);
        Self::new(order, order)
    }

    pub fn validate(&self, n_max: usize) -> Result<()> {
        for (what, order) in [("quad.surface_order", self.surface_order), ("quad.volume_order", self.volume_order)] {
            let min = (10 * n_max).max(2);
            if order < min {
                return Err(Error::Range {
                    what,
                    value: order as f64,
                    range: format!("[{min}, ∞) for truncation {n_max}"),
                });
            }
        }
        Ok(())
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending and exactly
/// symmetric under `ξ ↦ −ξ`.
pub fn gauss_legendre(order: usize) -> Vec<(f64, f64)> {
    let order = order.max(2);
    let rule = GaussLegendre::new(order).expect("order >= 2");
    let mut pairs: Vec<(f64, f64)> = rule.as_node_weight_pairs().to_vec();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = pairs.len();
    let mut out = pairs.clone();
    for i in 0..n {
        let j = n - 1 - i;
        let x = 0.5 * (pairs[j].0 - pairs[i].0);
        let w = 0.5 * (pairs[i].1 + pairs[j].1);
        out[i] = (-x, w);
        out[j] = (x, w);
    }
    if n % 2 == 1 {
        out[n / 2].0 = 0.0;
    }
    out
}

/// Composite rule over consecutive break points, each piece split into
/// panels no longer than [`MAX_PANEL`], `order` nodes per panel.
pub fn interval_rule(breaks: &[f64], order: usize) -> Vec<(f64, f64)> {
    let base = gauss_legendre(order);
    let mut out = Vec::new();
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let panels = ((b - a) / MAX_PANEL).ceil().max(1.0) as usize;
        let h = (b - a) / panels as f64;
        for p in 0..panels {
            let lo = a + h * p as f64;
            let (mid, half) = (lo + 0.5 * h, 0.5 * h);
            out.extend(base.iter().map(|&(xi, wi)| (mid + half * xi, half * wi)));
        }
    }
    out
}
