//! Immersion charts: analytic presets, seeded normal perturbations, and
//! Möbius transformations, all evaluated as order-capped jets.
//!
//! Presets are hard-coded analytic charts (no mesh input); perturbations add
//! ε·π_n(T∘Φ) with T a seeded ambient trigonometric polynomial, and Möbius
//! steps compose at jet level so derived patches keep exact derivatives.

use crate::jet::{dot_jets, Jet, MAX_ORD};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChartError {
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("parameter {name} = {value} is out of range")]
    BadParameter { name: &'static str, value: f64 },
    #[error("immersion degenerate at u = {0:?} (Gram matrix not positive definite)")]
    ImmersionDegenerate([f64; 4]),
    #[error("inversion center {center:?} hits the surface near u = {u:?} (distance {dist:.3e})")]
    InversionCenterOnSurface {
        center: Vec<f64>,
        u: [f64; 4],
        dist: f64,
    },
    #[error("rotation matrix is not orthogonal (max residual {0:.3e})")]
    NotOrthogonal(f64),
    #[error("perturbation breaks the immersion even after {0} halvings of the amplitude")]
    PerturbationTooLarge(usize),
    #[error("jet order {requested} plus perturbation depth {extra} exceeds the maximum {max}")]
    OrderExhausted {
        requested: usize,
        extra: usize,
        max: usize,
    },
}

/// Built-in analytic immersions of the 4-dimensional parameter box.
#[derive(Clone, Debug, PartialEq)]
pub enum Preset {
    /// Flat ℝ⁴ ⊂ ℝ⁵, Φ = (u, 0).
    Flat,
    /// Round sphere of radius r in ℝ⁵, polyspherical angles.
    Sphere4 { r: f64 },
    /// Product of four circles of radius a in ℝ⁸ (flat torus).
    CliffordTorus { a: f64 },
    /// S²(a) × S²(b) ⊂ ℝ⁶.
    ProductSpheres { a: f64, b: f64 },
    /// Helicoid × helicoid ⊂ ℝ⁶; minimal (H ≡ 0) but h ≠ 0. Not closed.
    MinimalProduct { c1: f64, c2: f64 },
}

/// Quadrature rule a closed preset wants on one axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AxisQuad {
    /// Periodic axis with the given period: trapezoid is spectral.
    Periodic(f64),
    /// Polar angle on (0, π) with the chart Jacobian vanishing at the ends:
    /// Gauss–Legendre, nodes never touch the poles.
    Polar,
}

/// Metadata available only for closed presets.
#[derive(Clone, Debug)]
pub struct ClosedInfo {
    pub chi: f64,
    pub axes: [AxisQuad; 4],
}

/// Ambient trigonometric polynomial, projected pointwise onto the normal
/// bundle of the patch it perturbs.
#[derive(Clone, Debug)]
pub struct NormalField {
    pub modes: Vec<TrigMode>,
}

#[derive(Clone, Debug)]
pub struct TrigMode {
    pub channel: usize,
    pub amp: f64,
    pub wave: Vec<f64>,
    pub phase: f64,
}

impl NormalField {
    /// Seeded random field with `n_modes` modes on an `m`-channel ambient space.
    pub fn random(m: usize, n_modes: usize, seed: u64) -> NormalField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let modes = (0..n_modes)
            .map(|_| TrigMode {
                channel: rng.gen_range(0..m),
                amp: rng.gen_range(0.4..1.0),
                wave: (0..m).map(|_| rng.gen_range(-0.8..0.8)).collect(),
                phase: rng.gen_range(0.0..std::f64::consts::TAU),
            })
            .collect();
        NormalField { modes }
    }

    /// Weighted union of fields (basis directions for the flow).
    pub fn combine(fields: &[NormalField], coeffs: &[f64]) -> NormalField {
        let mut modes = Vec::new();
        for (f, &c) in fields.iter().zip(coeffs) {
            for md in &f.modes {
                let mut md = md.clone();
                md.amp *= c;
                modes.push(md);
            }
        }
        NormalField { modes }
    }

    /// T(x) as jets, given ambient position jets.
    fn eval(&self, phi: &[Jet], ord: usize) -> Vec<Jet> {
        let m = phi.len();
        let mut out = vec![Jet::zero(ord); m];
        for md in &self.modes {
            let mut arg = Jet::constant(md.phase, ord);
            for (w, p) in md.wave.iter().zip(phi.iter()) {
                arg.add_assign(&p.truncate(ord).scale(*w));
            }
            out[md.channel].add_assign(&arg.sin().scale(md.amp));
        }
        out
    }
}

/// One primitive conformal move of ℝ^m ∪ {∞}.
#[derive(Clone, Debug)]
pub enum MoebiusStep {
    Translate(Vec<f64>),
    Rotate(Vec<Vec<f64>>),
    Dilate(f64),
    /// x ↦ c + (x−c)/|x−c|².
    Invert(Vec<f64>),
}

/// Ordered list of primitive conformal moves.
#[derive(Clone, Debug, Default)]
pub struct MoebiusMap {
    pub steps: Vec<MoebiusStep>,
}

impl MoebiusMap {
    pub fn dilation(lambda: f64) -> MoebiusMap {
        MoebiusMap {
            steps: vec![MoebiusStep::Dilate(lambda)],
        }
    }

    pub fn inversion(center: Vec<f64>) -> MoebiusMap {
        MoebiusMap {
            steps: vec![MoebiusStep::Invert(center)],
        }
    }

    pub fn then(mut self, step: MoebiusStep) -> MoebiusMap {
        self.steps.push(step);
        self
    }

    pub fn validate(&self, m: usize) -> Result<(), ChartError> {
        for s in &self.steps {
            match s {
                MoebiusStep::Rotate(rot) => {
                    let mut worst = 0.0f64;
                    for i in 0..m {
                        for j in 0..m {
                            let mut dot = 0.0;
                            for (ri, rj) in rot.iter().map(|r| (r[i], r[j])) {
                                dot += ri * rj;
                            }
                            let target = if i == j { 1.0 } else { 0.0 };
                            worst = worst.max((dot - target).abs());
                        }
                    }
                    if worst > 1e-12 {
                        return Err(ChartError::NotOrthogonal(worst));
                    }
                }
                MoebiusStep::Dilate(l) if *l <= 0.0 => {
                    return Err(ChartError::BadParameter {
                        name: "dilation",
                        value: *l,
                    })
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn apply_jets(&self, mut x: Vec<Jet>) -> Vec<Jet> {
        for s in &self.steps {
            match s {
                MoebiusStep::Translate(t) => {
                    for (xi, ti) in x.iter_mut().zip(t) {
                        xi.add_assign(&Jet::constant(*ti, xi.ord()));
                    }
                }
                MoebiusStep::Rotate(rot) => {
                    let ord = x[0].ord();
                    let mut y = vec![Jet::zero(ord); x.len()];
                    for (i, yi) in y.iter_mut().enumerate() {
                        for (j, xj) in x.iter().enumerate() {
                            yi.add_assign(&xj.scale(rot[i][j]));
                        }
                    }
                    x = y;
                }
                MoebiusStep::Dilate(l) => {
                    for xi in x.iter_mut() {
                        *xi = xi.scale(*l);
                    }
                }
                MoebiusStep::Invert(c) => {
                    let ord = x[0].ord();
                    let mut q: Vec<Jet> = x
                        .iter()
                        .zip(c)
                        .map(|(xi, ci)| xi.sub(&Jet::constant(*ci, ord)))
                        .collect();
                    let s = dot_jets(&q, &q).recip();
                    for (qi, ci) in q.iter_mut().zip(c) {
                        *qi = qi.mul(&s).add(&Jet::constant(*ci, ord));
                    }
                    x = q;
                }
            }
        }
        x
    }

    /// Apply to a plain point.
    pub fn apply_point(&self, x: &[f64]) -> Vec<f64> {
        let jets: Vec<Jet> = x.iter().map(|v| Jet::constant(*v, 0)).collect();
        self.apply_jets(jets).iter().map(|j| j.value()).collect()
    }
}

#[derive(Clone, Debug)]
enum Node {
    Preset(Preset),
    Perturbed {
        base: Box<Node>,
        field: NormalField,
        eps: f64,
    },
    Moebius {
        base: Box<Node>,
        map: MoebiusMap,
    },
}

/// An immersion patch: a preset plus optional perturbation/Möbius layers.
/// Immutable after construction; evaluation at distinct points is independent.
#[derive(Clone, Debug)]
pub struct Patch {
    node: Node,
}

impl Patch {
    pub fn preset(p: Preset) -> Result<Patch, ChartError> {
        match &p {
            Preset::Sphere4 { r } if *r <= 0.0 => Err(ChartError::BadParameter {
                name: "r",
                value: *r,
            }),
            Preset::CliffordTorus { a } if *a <= 0.0 => Err(ChartError::BadParameter {
                name: "a",
                value: *a,
            }),
            Preset::ProductSpheres { a, b } if *a <= 0.0 || *b <= 0.0 => {
                Err(ChartError::BadParameter {
                    name: "a,b",
                    value: a.min(*b),
                })
            }
            _ => Ok(Patch {
                node: Node::Preset(p),
            }),
        }
    }

    /// Preset lookup by CLI name.
    pub fn by_name(name: &str, r: f64, a: f64, b: f64) -> Result<Patch, ChartError> {
        let p = match name {
            "flat" => Preset::Flat,
            "s4" => Preset::Sphere4 { r },
            "clifford-t4" => Preset::CliffordTorus { a },
            "s2xs2" => Preset::ProductSpheres { a, b },
            "minimal-product" => Preset::MinimalProduct { c1: a, c2: b },
            other => return Err(ChartError::UnknownPreset(other.to_string())),
        };
        Patch::preset(p)
    }

    pub fn m(&self) -> usize {
        fn rec(n: &Node) -> usize {
            match n {
                Node::Preset(Preset::Flat) => 5,
                Node::Preset(Preset::Sphere4 { .. }) => 5,
                Node::Preset(Preset::CliffordTorus { .. }) => 8,
                Node::Preset(Preset::ProductSpheres { .. }) => 6,
                Node::Preset(Preset::MinimalProduct { .. }) => 6,
                Node::Perturbed { base, .. } | Node::Moebius { base, .. } => rec(base),
            }
        }
        rec(&self.node)
    }

    /// Extra jet orders consumed by perturbation layers (π_n needs one
    /// derivative of the base chart per layer).
    pub fn extra_order(&self) -> usize {
        fn rec(n: &Node) -> usize {
            match n {
                Node::Preset(_) => 0,
                Node::Perturbed { base, .. } => 1 + rec(base),
                Node::Moebius { base, .. } => rec(base),
            }
        }
        rec(&self.node)
    }

    fn base_preset(&self) -> &Preset {
        fn rec(n: &Node) -> &Preset {
            match n {
                Node::Preset(p) => p,
                Node::Perturbed { base, .. } | Node::Moebius { base, .. } => rec(base),
            }
        }
        rec(&self.node)
    }

    /// Full chart box (for quadrature).
    pub fn domain(&self) -> [(f64, f64); 4] {
        use std::f64::consts::{PI, TAU};
        match self.base_preset() {
            Preset::Flat => [(-1.0, 1.0); 4],
            Preset::Sphere4 { .. } => [(0.0, PI), (0.0, PI), (0.0, PI), (0.0, TAU)],
            Preset::CliffordTorus { .. } => [(0.0, TAU); 4],
            Preset::ProductSpheres { .. } => [(0.0, PI), (0.0, TAU), (0.0, PI), (0.0, TAU)],
            Preset::MinimalProduct { .. } => {
                [(0.6, 1.6), (0.2, 6.0), (0.6, 1.6), (0.2, 6.0)]
            }
        }
    }

    /// Interior box for random pointwise checks, shrunk away from chart poles.
    pub fn sample_box(&self) -> [(f64, f64); 4] {
        use std::f64::consts::PI;
        let mut d = self.domain();
        if matches!(
            self.base_preset(),
            Preset::Sphere4 { .. } | Preset::ProductSpheres { .. }
        ) {
            for (axis, b) in d.iter_mut().enumerate() {
                if self.closed().map(|c| c.axes[axis]) == Some(AxisQuad::Polar) {
                    *b = (0.45, PI - 0.45);
                }
            }
        }
        d
    }

    pub fn periodic(&self) -> [bool; 4] {
        match self.base_preset() {
            Preset::Flat | Preset::MinimalProduct { .. } => [false; 4],
            Preset::Sphere4 { .. } => [false, false, false, true],
            Preset::CliffordTorus { .. } => [true; 4],
            Preset::ProductSpheres { .. } => [false, true, false, true],
        }
    }

    pub fn closed(&self) -> Option<ClosedInfo> {
        use std::f64::consts::TAU;
        match self.base_preset() {
            Preset::Flat | Preset::MinimalProduct { .. } => None,
            Preset::Sphere4 { .. } => Some(ClosedInfo {
                chi: 2.0,
                axes: [
                    AxisQuad::Polar,
                    AxisQuad::Polar,
                    AxisQuad::Polar,
                    AxisQuad::Periodic(TAU),
                ],
            }),
            Preset::CliffordTorus { .. } => Some(ClosedInfo {
                chi: 0.0,
                axes: [AxisQuad::Periodic(TAU); 4],
            }),
            Preset::ProductSpheres { .. } => Some(ClosedInfo {
                chi: 4.0,
                axes: [
                    AxisQuad::Polar,
                    AxisQuad::Periodic(TAU),
                    AxisQuad::Polar,
                    AxisQuad::Periodic(TAU),
                ],
            }),
        }
    }

    fn eval_preset(p: &Preset, u: [f64; 4], ord: usize) -> Vec<Jet> {
        let x: Vec<Jet> = (0..4).map(|a| Jet::variable(u[a], a, ord)).collect();
        match p {
            Preset::Flat => {
                let mut v: Vec<Jet> = x.clone();
                v.push(Jet::zero(ord));
                v
            }
            Preset::Sphere4 { r } => {
                let (s1, c1) = (x[0].sin(), x[0].cos());
                let (s2, c2) = (x[1].sin(), x[1].cos());
                let (s3, c3) = (x[2].sin(), x[2].cos());
                let (s4, c4) = (x[3].sin(), x[3].cos());
                let s12 = s1.mul(&s2);
                let s123 = s12.mul(&s3);
                vec![
                    c1.scale(*r),
                    s1.mul(&c2).scale(*r),
                    s12.mul(&c3).scale(*r),
                    s123.mul(&c4).scale(*r),
                    s123.mul(&s4).scale(*r),
                ]
            }
            Preset::CliffordTorus { a } => {
                let mut v = Vec::with_capacity(8);
                for xi in &x {
                    v.push(xi.cos().scale(*a));
                    v.push(xi.sin().scale(*a));
                }
                v
            }
            Preset::ProductSpheres { a, b } => {
                let (s1, c1) = (x[0].sin(), x[0].cos());
                let (f1, g1) = (x[1].sin(), x[1].cos());
                let (s2, c2) = (x[2].sin(), x[2].cos());
                let (f2, g2) = (x[3].sin(), x[3].cos());
                vec![
                    s1.mul(&g1).scale(*a),
                    s1.mul(&f1).scale(*a),
                    c1.scale(*a),
                    s2.mul(&g2).scale(*b),
                    s2.mul(&f2).scale(*b),
                    c2.scale(*b),
                ]
            }
            Preset::MinimalProduct { c1, c2 } => {
                vec![
                    x[0].mul(&x[1].cos()),
                    x[0].mul(&x[1].sin()),
                    x[1].scale(*c1),
                    x[2].mul(&x[3].cos()),
                    x[2].mul(&x[3].sin()),
                    x[3].scale(*c2),
                ]
            }
        }
    }

    fn eval_node(n: &Node, u: [f64; 4], ord: usize) -> Vec<Jet> {
        match n {
            Node::Preset(p) => Patch::eval_preset(p, u, ord),
            Node::Moebius { base, map } => map.apply_jets(Patch::eval_node(base, u, ord)),
            Node::Perturbed { base, field, eps } => {
                let phi = Patch::eval_node(base, u, ord + 1);
                let b = project_normal_jets(&phi, field, ord);
                phi.iter()
                    .zip(b.iter())
                    .map(|(p, bi)| p.truncate(ord).add(&bi.scale(*eps)))
                    .collect()
            }
        }
    }

    /// Taylor data of Φ at u, exact to `ord` up to roundoff. Deterministic.
    pub fn eval_jet(&self, u: [f64; 4], ord: usize) -> Result<Vec<Jet>, ChartError> {
        let extra = self.extra_order();
        if ord + extra > MAX_ORD {
            return Err(ChartError::OrderExhausted {
                requested: ord,
                extra,
                max: MAX_ORD,
            });
        }
        let phi = Patch::eval_node(&self.node, u, ord);
        if ord >= 1 && !gram_positive(&phi) {
            return Err(ChartError::ImmersionDegenerate(u));
        }
        Ok(phi)
    }

    /// Ambient position only.
    pub fn eval_point(&self, u: [f64; 4]) -> Result<Vec<f64>, ChartError> {
        Ok(self.eval_jet(u, 0)?.iter().map(|j| j.value()).collect())
    }

    /// The perturbation direction field π_n(T∘Φ) of this patch, as jets.
    pub fn normal_field_jets(
        &self,
        field: &NormalField,
        u: [f64; 4],
        ord: usize,
    ) -> Result<Vec<Jet>, ChartError> {
        let extra = self.extra_order();
        if ord + 1 + extra > MAX_ORD {
            return Err(ChartError::OrderExhausted {
                requested: ord + 1,
                extra,
                max: MAX_ORD,
            });
        }
        let phi = Patch::eval_node(&self.node, u, ord + 1);
        Ok(project_normal_jets(&phi, field, ord))
    }

    /// Φ + ε·π_n(T∘Φ) with an explicit field (no amplitude retry).
    pub fn perturb_normal_with(&self, field: NormalField, eps: f64) -> Result<Patch, ChartError> {
        let candidate = Patch {
            node: Node::Perturbed {
                base: Box::new(self.node.clone()),
                field,
                eps,
            },
        };
        if eps == 0.0 || candidate.immersion_ok() {
            Ok(candidate)
        } else {
            Err(ChartError::PerturbationTooLarge(0))
        }
    }

    /// Φ + ε·π_n(T∘Φ) with seeded T; halves ε (≤ 5 times) if the immersion
    /// condition fails on a coarse sample.
    pub fn perturb_normal(&self, eps: f64, seed: u64) -> Result<Patch, ChartError> {
        let field = NormalField::random(self.m(), 6, seed);
        let mut eps = eps;
        for _ in 0..=5 {
            let candidate = Patch {
                node: Node::Perturbed {
                    base: Box::new(self.node.clone()),
                    field: field.clone(),
                    eps,
                },
            };
            if eps == 0.0 || candidate.immersion_ok() {
                return Ok(candidate);
            }
            eps *= 0.5;
        }
        Err(ChartError::PerturbationTooLarge(5))
    }

    fn immersion_ok(&self) -> bool {
        for u in self.probe_points(3) {
            match self.eval_jet(u, 1) {
                Ok(_) => {}
                Err(_) => return false,
            }
        }
        true
    }

    /// Composition map∘Φ at jet level. Checks inversion centers against a
    /// surface sample.
    pub fn apply_moebius(&self, map: &MoebiusMap) -> Result<Patch, ChartError> {
        map.validate(self.m())?;
        // Walk the steps so each inversion center is checked against the
        // image of the surface under the preceding steps.
        let mut prefix = MoebiusMap::default();
        for s in &map.steps {
            if let MoebiusStep::Invert(c) = s {
                for u in self.probe_points(4) {
                    let x = prefix.apply_point(&self.eval_point(u)?);
                    let d2: f64 = x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
                    if d2.sqrt() < 1e-6 {
                        return Err(ChartError::InversionCenterOnSurface {
                            center: c.clone(),
                            u,
                            dist: d2.sqrt(),
                        });
                    }
                }
            }
            prefix.steps.push(s.clone());
        }
        Ok(Patch {
            node: Node::Moebius {
                base: Box::new(self.node.clone()),
                map: map.clone(),
            },
        })
    }

    pub(crate) fn probe_points(&self, per_axis: usize) -> Vec<[f64; 4]> {
        let box_ = self.sample_box();
        let mut pts = Vec::new();
        let n = per_axis as f64;
        for i0 in 0..per_axis {
            for i1 in 0..per_axis {
                for i2 in 0..per_axis {
                    for i3 in 0..per_axis {
                        let f = |(lo, hi): (f64, f64), k: usize| {
                            lo + (hi - lo) * (k as f64 + 0.5) / n
                        };
                        pts.push([
                            f(box_[0], i0),
                            f(box_[1], i1),
                            f(box_[2], i2),
                            f(box_[3], i3),
                        ]);
                    }
                }
            }
        }
        pts
    }

    /// Seeded uniform points in the interior sample box.
    pub fn sample_points(&self, n: usize, seed: u64) -> Vec<[f64; 4]> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = self.sample_box();
        (0..n)
            .map(|_| std::array::from_fn(|a| rng.gen_range(b[a].0..b[a].1)))
            .collect()
    }
}

/// π_n(T∘Φ) given base jets one order deeper than the requested result.
fn project_normal_jets(phi: &[Jet], field: &NormalField, ord: usize) -> Vec<Jet> {
    let m = phi.len();
    let t = field.eval(phi, ord);
    let e: Vec<Vec<Jet>> = (0..4)
        .map(|a| phi.iter().map(|p| p.deriv(a)).collect())
        .collect();
    // Gram matrix and inverse at jet level
    let mut gm = Vec::with_capacity(16);
    for i in 0..4 {
        for j in 0..4 {
            gm.push(dot_jets(&e[i], &e[j]).truncate(ord));
        }
    }
    let ginv = invert4(&gm);
    // v - g^{ij} (v·e_i) e_j
    let vdote: Vec<Jet> = (0..4).map(|i| dot_jets(&t, &e[i]).truncate(ord)).collect();
    let mut out = t;
    for j in 0..4 {
        let mut coef = Jet::zero(ord);
        for i in 0..4 {
            coef.add_assign(&ginv[i * 4 + j].mul(&vdote[i]));
        }
        for (o, ej) in out.iter_mut().zip(e[j].iter()).take(m) {
            *o = o.sub(&coef.mul(ej));
        }
    }
    out
}

/// Inverse of a 4×4 jet matrix via cofactor expansion.
pub fn invert4(g: &[Jet]) -> Vec<Jet> {
    let a = |i: usize, j: usize| &g[i * 4 + j];
    let det3 = |r: [usize; 3], c: [usize; 3]| -> Jet {
        let m = |i: usize, j: usize| a(r[i], c[j]);
        let t1 = m(0, 0).mul(&m(1, 1).mul(m(2, 2)).sub(&m(1, 2).mul(m(2, 1))));
        let t2 = m(0, 1).mul(&m(1, 0).mul(m(2, 2)).sub(&m(1, 2).mul(m(2, 0))));
        let t3 = m(0, 2).mul(&m(1, 0).mul(m(2, 1)).sub(&m(1, 1).mul(m(2, 0))));
        t1.sub(&t2).add(&t3)
    };
    let rows = |k: usize| -> [usize; 3] {
        let mut r = [0; 3];
        let mut w = 0;
        for i in 0..4 {
            if i != k {
                r[w] = i;
                w += 1;
            }
        }
        r
    };
    let mut det = Jet::zero(g[0].ord());
    for j in 0..4 {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        det.add_assign(&a(0, j).mul(&det3(rows(0), rows(j))).scale(sign));
    }
    let dinv = det.recip();
    let mut inv = Vec::with_capacity(16);
    for i in 0..4 {
        for j in 0..4 {
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            // adjugate: cofactor of (j, i)
            inv.push(det3(rows(j), rows(i)).scale(sign).mul(&dinv));
        }
    }
    inv
}

fn gram_positive(phi: &[Jet]) -> bool {
    let e: Vec<Vec<f64>> = (0..4)
        .map(|a| phi.iter().map(|p| p.deriv(a).value()).collect())
        .collect();
    let mut g = [[0.0f64; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            g[i][j] = e[i].iter().zip(e[j].iter()).map(|(x, y)| x * y).sum();
        }
    }
    // Cholesky without pivoting: succeeds iff positive definite.
    let mut l = [[0.0f64; 4]; 4];
    for i in 0..4 {
        for j in 0..=i {
            let mut s = g[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if s <= 1e-14 {
                    return false;
                }
                l[i][j] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_plane_jets_are_linear() {
        let p = Patch::preset(Preset::Flat).unwrap();
        let j = p.eval_jet([0.2, -0.1, 0.4, 0.9], 4).unwrap();
        for (a, ja) in j.iter().take(4).enumerate() {
            let d = ja.deriv(a);
            assert!((d.value() - 1.0).abs() < 1e-15);
            // all second derivatives vanish
            for b in 0..4 {
                assert_eq!(d.deriv(b).value(), 0.0);
            }
        }
    }

    #[test]
    fn sphere_chart_stays_on_sphere() {
        let p = Patch::preset(Preset::Sphere4 { r: 1.7 }).unwrap();
        for u in p.sample_points(20, 3) {
            let x = p.eval_point(u).unwrap();
            let n2: f64 = x.iter().map(|v| v * v).sum();
            assert!((n2.sqrt() - 1.7).abs() < 1e-12);
        }
    }

    #[test]
    fn periodic_axes_match_to_tolerance() {
        let p = Patch::preset(Preset::CliffordTorus { a: 1.0 }).unwrap();
        let u = [0.3, 1.1, 2.2, 4.4];
        let x = p.eval_point(u).unwrap();
        for axis in 0..4 {
            let mut v = u;
            v[axis] += std::f64::consts::TAU;
            let y = p.eval_point(v).unwrap();
            for (a, b) in x.iter().zip(y.iter()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dilation_doubles_first_derivatives() {
        let p = Patch::preset(Preset::Flat).unwrap();
        let q = p.apply_moebius(&MoebiusMap::dilation(2.0)).unwrap();
        let u = [0.1, 0.2, 0.3, 0.4];
        let jp = p.eval_jet(u, 2).unwrap();
        let jq = q.eval_jet(u, 2).unwrap();
        for (a, b) in jp.iter().zip(jq.iter()) {
            for axis in 0..4 {
                assert!((b.deriv(axis).value() - 2.0 * a.deriv(axis).value()).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn inversion_of_single_point() {
        let map = MoebiusMap::inversion(vec![0.0; 5]);
        let y = map.apply_point(&[2.0, 0.0, 0.0, 0.0, 0.0]);
        assert!((y[0] - 0.5).abs() < 1e-15);
        assert!(y[1..].iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn inversion_is_an_involution_at_jet_level() {
        let p = Patch::preset(Preset::ProductSpheres { a: 1.0, b: 1.3 }).unwrap();
        let c = vec![2.9, 0.1, 0.0, 0.4, 0.0, 0.0];
        let map = MoebiusMap::inversion(c.clone()).then(MoebiusStep::Invert(c));
        let q = p.apply_moebius(&map).unwrap();
        let u = [1.1, 0.7, 1.9, 2.3];
        let jp = p.eval_jet(u, 4).unwrap();
        let jq = q.eval_jet(u, 4).unwrap();
        for (a, b) in jp.iter().zip(jq.iter()) {
            let d = a.sub(b);
            assert!(d.value().abs() < 1e-10);
            for axis in 0..4 {
                assert!(d.deriv(axis).value().abs() < 1e-10);
            }
        }
    }

    #[test]
    fn inversion_center_on_surface_is_rejected() {
        let p = Patch::preset(Preset::Sphere4 { r: 1.0 }).unwrap();
        // place the center exactly on a sampled surface point
        let u = p.probe_points(4)[37];
        let c = p.eval_point(u).unwrap();
        let err = p.apply_moebius(&MoebiusMap::inversion(c));
        assert!(matches!(
            err,
            Err(ChartError::InversionCenterOnSurface { .. })
        ));
    }

    #[test]
    fn perturbation_is_deterministic_and_zero_eps_is_identity() {
        let p = Patch::preset(Preset::CliffordTorus { a: 1.0 }).unwrap();
        let u = [0.4, 1.0, 2.0, 3.0];
        let a = p.perturb_normal(1e-2, 11).unwrap();
        let b = p.perturb_normal(1e-2, 11).unwrap();
        assert_eq!(
            a.eval_jet(u, 5).unwrap(),
            b.eval_jet(u, 5).unwrap(),
            "same seed must give bitwise-identical jets"
        );
        let z = p.perturb_normal(0.0, 11).unwrap();
        let jz = z.eval_jet(u, 5).unwrap();
        let jp = p.eval_jet(u, 5).unwrap();
        for (x, y) in jz.iter().zip(jp.iter()) {
            assert!(x.sub(&y.truncate(5)).value().abs() < 1e-15);
        }
    }

    #[test]
    fn perturbed_torus_gram_stays_close() {
        let p = Patch::preset(Preset::CliffordTorus { a: 1.0 }).unwrap();
        let q = p.perturb_normal(1e-2, 5).unwrap();
        for u in p.sample_points(25, 9) {
            let det = |patch: &Patch| {
                let j = patch.eval_jet(u, 1).unwrap();
                let e: Vec<Vec<f64>> = (0..4)
                    .map(|a| j.iter().map(|p| p.deriv(a).value()).collect())
                    .collect();
                let mut g = [[0.0; 4]; 4];
                for i in 0..4 {
                    for k in 0..4 {
                        g[i][k] = e[i].iter().zip(&e[k]).map(|(x, y)| x * y).sum();
                    }
                }
                det4(&g)
            };
            let (d0, d1) = (det(&p), det(&q));
            assert!((d1 - d0).abs() / d0 < 0.1);
        }
    }

    fn det4(g: &[[f64; 4]; 4]) -> f64 {
        let mut a = *g;
        let mut det = 1.0;
        for k in 0..4 {
            let mut piv = k;
            for r in k + 1..4 {
                if a[r][k].abs() > a[piv][k].abs() {
                    piv = r;
                }
            }
            if piv != k {
                a.swap(piv, k);
                det = -det;
            }
            det *= a[k][k];
            for r in k + 1..4 {
                let f = a[r][k] / a[k][k];
                for c in k..4 {
                    a[r][c] -= f * a[k][c];
                }
            }
        }
        det
    }
}
