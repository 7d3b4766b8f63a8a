//! Conformally invariant integrands, quadrature over closed presets, and the
//! Simons / Chern–Gauss–Bonnet / intrinsic-extrinsic balance checks.
//!
//! Integrals use tensor-product rules matched to the chart: trapezoid on
//! periodic axes (spectral for smooth integrands) and Gauss–Legendre on polar
//! axes, whose open nodes never touch the coordinate poles — the integrand
//! times the chart Jacobian extends by zero there.

use crate::chart::{AxisQuad, Patch};
use crate::geometry::{GeoValues, GeomError, GeometryPoint};
use crate::jet::{dot_jets, Jet};
use rayon::prelude::*;
use serde::Serialize;

/// Named pointwise densities; `dvol` is the metric volume factor the
/// quadrature multiplies in.
#[derive(Clone, Debug, Serialize)]
pub struct EnergyDensity {
    /// |π_n dH|² − |H·h|² + 7|H|⁴
    pub ea: f64,
    /// |π_n dh|² − 12|H·h|² + 6|H|²|h|² + 60|H|⁴
    pub ec: f64,
    /// |h₀|⁴
    pub q_h0_4: f64,
    /// ⟨h₀⁴⟩
    pub q_angle: f64,
    /// |h₀²|²
    pub q_h0sq: f64,
    /// Tr_g h₀⁴
    pub q_tr: f64,
    /// |W|² (from the extrinsic Weyl tensor)
    pub w2: f64,
    /// |Rm|² − 4|Ric|² + R²  (Chern–Gauss–Bonnet integrand)
    pub cgb: f64,
    /// |π_n dH|² alone (not conformally invariant; the negative control)
    pub dirichlet: f64,
    pub dvol: f64,
}

/// Which scalar an integration pass should accumulate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DensityKind {
    Ea,
    Ec,
    H04,
    Angle4,
    H0Sq2,
    Tr4,
    W2,
    Cgb,
    DirichletOnly,
}

pub const ALL_DENSITIES: [DensityKind; 9] = [
    DensityKind::Ea,
    DensityKind::Ec,
    DensityKind::H04,
    DensityKind::Angle4,
    DensityKind::H0Sq2,
    DensityKind::Tr4,
    DensityKind::W2,
    DensityKind::Cgb,
    DensityKind::DirichletOnly,
];

impl DensityKind {
    pub fn name(&self) -> &'static str {
        match self {
            DensityKind::Ea => "E_A",
            DensityKind::Ec => "E_C",
            DensityKind::H04 => "|h0|^4",
            DensityKind::Angle4 => "<h0^4>",
            DensityKind::H0Sq2 => "|h0^2|^2",
            DensityKind::Tr4 => "Tr h0^4",
            DensityKind::W2 => "|W|^2",
            DensityKind::Cgb => "cgb",
            DensityKind::DirichletOnly => "|pin dH|^2",
        }
    }

    pub fn pick(&self, d: &EnergyDensity) -> f64 {
        match self {
            DensityKind::Ea => d.ea,
            DensityKind::Ec => d.ec,
            DensityKind::H04 => d.q_h0_4,
            DensityKind::Angle4 => d.q_angle,
            DensityKind::H0Sq2 => d.q_h0sq,
            DensityKind::Tr4 => d.q_tr,
            DensityKind::W2 => d.w2,
            DensityKind::Cgb => d.cgb,
            DensityKind::DirichletOnly => d.dirichlet,
        }
    }

    /// Conformally invariant integrals stay fixed under Möbius maps; the
    /// plain Dirichlet piece does not, and cgb is topological.
    pub fn conformally_invariant(&self) -> bool {
        !matches!(self, DensityKind::DirichletOnly)
    }
}

/// The four quartic invariants of h₀, as jet values.
pub struct QuarticScalars {
    pub h0_4: Jet,
    pub angle: Jet,
    pub h0sq: Jet,
    pub tr: Jet,
}

pub fn quartic_scalars(gp: &GeometryPoint) -> QuarticScalars {
    // h₀ with both indices raised, once
    let up: [[Vec<Jet>; 4]; 4] = std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let ord = gp.h0[0][0][0].ord().min(gp.ginv[0][0].ord());
            let mut v = vec![Jet::zero(ord); gp.m];
            for a in 0..4 {
                for b in 0..4 {
                    let w = gp.ginv[i][a].mul(&gp.ginv[j][b]);
                    for (t, s) in v.iter_mut().zip(gp.h0[a][b].iter()) {
                        t.add_assign(&w.mul(s));
                    }
                }
            }
            v
        })
    });
    let ord = up[0][0][0].ord();
    let mut angle = Jet::zero(ord);
    let mut tr = Jet::zero(ord);
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    // ⟨h₀⁴⟩ = (h₀^{ij}·h₀^{kl})(h₀_{ij}·h₀_{kl})
                    let a1 = dot_jets(&up[i][j], &gp.h0[k][l]);
                    let a2 = dot_jets(&gp.h0[i][j], &up[k][l]);
                    angle.add_assign(&a1.mul(&a2));
                    // Tr_g h₀⁴ = (h₀^{ij}·h₀^{kl})(h₀_{ik}·h₀_{jl})
                    let b1 = dot_jets(&up[i][j], &up[k][l]);
                    let b2 = dot_jets(&gp.h0[i][k], &gp.h0[j][l]);
                    tr.add_assign(&b1.mul(&b2));
                }
            }
        }
    }
    let h0sq_t = gp.square_a2(&gp.h0);
    let h0sq = gp.norm2_s2(&h0sq_t);
    let n2 = gp.norm2_a2(&gp.h0);
    let h0_4 = n2.mul(&n2);
    QuarticScalars {
        h0_4,
        angle,
        h0sq,
        tr,
    }
}

/// All named densities at one point. Needs jets of order ≥ 3 (for |π_n dh|²);
/// the contractions themselves run on plain floats.
pub fn density(gp: &GeometryPoint) -> Result<EnergyDensity, GeomError> {
    Ok(density_values(&gp.values()?))
}

/// Float-only density evaluation from a geometry snapshot.
pub fn density_values(gv: &GeoValues) -> EnergyDensity {
    let gi = &gv.ginv;
    // |π_n dH|²
    let pdh: [Vec<f64>; 4] = std::array::from_fn(|a| gv.project_normal(&gv.dhm[a]));
    let mut dirichlet = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            dirichlet += gi[a][b] * gv.dot(&pdh[a], &pdh[b]);
        }
    }
    // scalars of h
    let hdh: [[f64; 4]; 4] =
        std::array::from_fn(|i| std::array::from_fn(|j| gv.dot(&gv.hm, &gv.h[i][j])));
    let hdh2 = norm2_f2(gi, &hdh);
    let h2 = gv.dot(&gv.hm, &gv.hm);
    let habs2 = norm2_amb2(gv, &gv.h);
    // |π_n dh|²: project, raise all three slots, contract
    let p: [[[Vec<f64>; 4]; 4]; 4] = std::array::from_fn(|k| {
        std::array::from_fn(|i| std::array::from_fn(|j| gv.project_normal(&gv.dh[k][i][j])))
    });
    let up3 = raise_amb3(gv, &p);
    let mut pin_dh2 = 0.0;
    for k in 0..4 {
        for i in 0..4 {
            for j in 0..4 {
                pin_dh2 += gv.dot(&up3[k][i][j], &p[k][i][j]);
            }
        }
    }
    // quartics of h₀
    let h0up = raise_amb2(gv, &gv.h0);
    let mut q_angle = 0.0;
    let mut q_tr = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    let a = gv.dot(&h0up[i][j], &gv.h0[k][l]);
                    let b = gv.dot(&gv.h0[i][j], &h0up[k][l]);
                    q_angle += a * b;
                    q_tr += gv.dot(&h0up[i][j], &h0up[k][l]) * gv.dot(&gv.h0[i][k], &gv.h0[j][l]);
                }
            }
        }
    }
    // (h₀²)_ij = h₀_ik g^{kl} h₀_lj
    let h0sq: [[f64; 4]; 4] = std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let mut s = 0.0;
            for k in 0..4 {
                for l in 0..4 {
                    s += gi[k][l] * gv.dot(&gv.h0[i][k], &gv.h0[l][j]);
                }
            }
            s
        })
    });
    let q_h0sq = norm2_f2(gi, &h0sq);
    let h0n2 = norm2_amb2(gv, &gv.h0);
    let q_h0_4 = h0n2 * h0n2;
    // curvature from the Gauss equation
    let rm: [[[[f64; 4]; 4]; 4]; 4] = std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            std::array::from_fn(|k| {
                std::array::from_fn(|l| {
                    gv.dot(&gv.h[i][k], &gv.h[j][l]) - gv.dot(&gv.h[i][l], &gv.h[j][k])
                })
            })
        })
    });
    let ric: [[f64; 4]; 4] = std::array::from_fn(|i| {
        std::array::from_fn(|k| {
            let mut s = 0.0;
            for j in 0..4 {
                for l in 0..4 {
                    s += gi[j][l] * rm[i][j][k][l];
                }
            }
            s
        })
    });
    let mut r = 0.0;
    for i in 0..4 {
        for k in 0..4 {
            r += gi[i][k] * ric[i][k];
        }
    }
    let rm2 = norm2_f4(gi, &rm);
    let ric2 = norm2_f2(gi, &ric);
    // Weyl from h₀: W = pair + ½ h0²∧g − (1/12)|h₀|² g∧g
    let w: [[[[f64; 4]; 4]; 4]; 4] = std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            std::array::from_fn(|k| {
                std::array::from_fn(|l| {
                    let pair = gv.dot(&gv.h0[i][k], &gv.h0[j][l])
                        - gv.dot(&gv.h0[i][l], &gv.h0[j][k]);
                    let kn1 = h0sq[i][k] * gv.g[j][l] + h0sq[j][l] * gv.g[i][k]
                        - h0sq[i][l] * gv.g[j][k]
                        - h0sq[j][k] * gv.g[i][l];
                    let kn2 = gv.g[i][k] * gv.g[j][l] - gv.g[i][l] * gv.g[j][k];
                    pair + 0.5 * kn1 - h0n2 / 6.0 * kn2
                })
            })
        })
    });
    let w2 = norm2_f4(gi, &w);
    EnergyDensity {
        ea: dirichlet - hdh2 + 7.0 * h2 * h2,
        ec: pin_dh2 - 12.0 * hdh2 + 6.0 * h2 * habs2 + 60.0 * h2 * h2,
        q_h0_4,
        q_angle,
        q_h0sq,
        q_tr,
        w2,
        cgb: rm2 - 4.0 * ric2 + r * r,
        dirichlet,
        dvol: gv.sqrtg,
    }
}

fn norm2_f2(gi: &[[f64; 4]; 4], t: &[[f64; 4]; 4]) -> f64 {
    let mut s = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    s += gi[i][k] * gi[j][l] * t[i][j] * t[k][l];
                }
            }
        }
    }
    s
}

fn norm2_f4(gi: &[[f64; 4]; 4], t: &[[[[f64; 4]; 4]; 4]; 4]) -> f64 {
    // raise one slot at a time, then contract
    let mut up = *t;
    for slot in 0..4 {
        let prev = up;
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    for l in 0..4 {
                        let idx = [i, j, k, l];
                        let mut s = 0.0;
                        for c in 0..4 {
                            let mut src = idx;
                            src[slot] = c;
                            s += gi[idx[slot]][c] * prev[src[0]][src[1]][src[2]][src[3]];
                        }
                        up[i][j][k][l] = s;
                    }
                }
            }
        }
    }
    let mut s = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    s += up[i][j][k][l] * t[i][j][k][l];
                }
            }
        }
    }
    s
}

fn norm2_amb2(gv: &GeoValues, t: &[[Vec<f64>; 4]; 4]) -> f64 {
    let gi = &gv.ginv;
    let mut s = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    s += gi[i][k] * gi[j][l] * gv.dot(&t[i][j], &t[k][l]);
                }
            }
        }
    }
    s
}

fn raise_amb2(gv: &GeoValues, t: &[[Vec<f64>; 4]; 4]) -> [[Vec<f64>; 4]; 4] {
    let gi = &gv.ginv;
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let mut v = vec![0.0; gv.m];
            for a in 0..4 {
                for b in 0..4 {
                    let w = gi[i][a] * gi[j][b];
                    for (x, y) in v.iter_mut().zip(t[a][b].iter()) {
                        *x += w * y;
                    }
                }
            }
            v
        })
    })
}

fn raise_amb3(gv: &GeoValues, t: &[[[Vec<f64>; 4]; 4]; 4]) -> [[[Vec<f64>; 4]; 4]; 4] {
    let gi = &gv.ginv;
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            std::array::from_fn(|k| {
                let mut v = vec![0.0; gv.m];
                for a in 0..4 {
                    for b in 0..4 {
                        for c in 0..4 {
                            let w = gi[i][a] * gi[j][b] * gi[k][c];
                            if w != 0.0 {
                                for (x, y) in v.iter_mut().zip(t[a][b][c].iter()) {
                                    *x += w * y;
                                }
                            }
                        }
                    }
                }
                v
            })
        })
    })
}

// ─── quadrature ───

#[derive(Clone, Debug)]
pub struct Axis {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Tensor-product quadrature grid adapted to a closed preset.
#[derive(Clone, Debug)]
pub struct QuadratureGrid {
    pub axes: [Axis; 4],
}

#[derive(Debug, thiserror::Error)]
pub enum EnergyError {
    #[error("integral claims require a closed preset")]
    NotClosed,
    #[error(transparent)]
    Geom(#[from] GeomError),
}

/// Nodes and weights of n-point Gauss–Legendre on (a, b).
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Axis {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for k in 0..n {
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        nodes[n - 1 - k] = 0.5 * (b - a) * x + 0.5 * (a + b);
        weights[n - 1 - k] = (b - a) / ((1.0 - x * x) * dp * dp);
    }
    Axis { nodes, weights }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

pub fn periodic_axis(n: usize, period: f64) -> Axis {
    let w = period / n as f64;
    Axis {
        nodes: (0..n).map(|k| k as f64 * w).collect(),
        weights: vec![w; n],
    }
}

impl QuadratureGrid {
    /// Grid with `n` nodes per axis, matched to the preset's closure data.
    pub fn for_patch(patch: &Patch, n: usize) -> Result<QuadratureGrid, EnergyError> {
        let closed = patch.closed().ok_or(EnergyError::NotClosed)?;
        let axes = std::array::from_fn(|a| match closed.axes[a] {
            AxisQuad::Periodic(p) => periodic_axis(n, p),
            AxisQuad::Polar => gauss_legendre(n, 0.0, std::f64::consts::PI),
        });
        Ok(QuadratureGrid { axes })
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.nodes.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, flat: usize) -> ([f64; 4], f64) {
        let mut idx = flat;
        let mut u = [0.0; 4];
        let mut w = 1.0;
        for a in (0..4).rev() {
            let n = self.axes[a].nodes.len();
            let k = idx % n;
            idx /= n;
            u[a] = self.axes[a].nodes[k];
            w *= self.axes[a].weights[k];
        }
        (u, w)
    }

    /// Total weight (the chart-box measure) — sanity anchor for tests.
    pub fn weight_sum(&self) -> f64 {
        self.axes
            .iter()
            .map(|a| a.weights.iter().sum::<f64>())
            .product()
    }
}

/// Deterministic pairwise tree sum: value independent of thread count.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        n if n <= 8 => v.iter().sum(),
        n => pairwise_sum(&v[..n / 2]) + pairwise_sum(&v[n / 2..]),
    }
}

/// Σ weights · f(point) · dvol over the grid. The map runs in parallel; the
/// reduction is a fixed pairwise tree.
pub fn integrate<F>(
    patch: &Patch,
    grid: &QuadratureGrid,
    ord: usize,
    f: F,
) -> Result<f64, EnergyError>
where
    F: Fn(&GeometryPoint) -> f64 + Sync,
{
    let vals: Result<Vec<f64>, GeomError> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let (u, w) = grid.point(k);
            let gp = GeometryPoint::new(patch, u, ord)?;
            Ok(w * f(&gp) * gp.sqrt_det_g.value())
        })
        .collect();
    Ok(pairwise_sum(&vals?))
}

/// All named densities integrated in one sweep.
pub fn integrate_all(
    patch: &Patch,
    grid: &QuadratureGrid,
) -> Result<Vec<(DensityKind, f64)>, EnergyError> {
    let vals: Result<Vec<Vec<f64>>, EnergyError> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let (u, w) = grid.point(k);
            let gp = GeometryPoint::new(patch, u, 3)?;
            let d = density(&gp)?;
            Ok(ALL_DENSITIES
                .iter()
                .map(|kind| w * kind.pick(&d) * d.dvol)
                .collect())
        })
        .collect();
    let vals = vals?;
    Ok(ALL_DENSITIES
        .iter()
        .enumerate()
        .map(|(i, kind)| {
            let col: Vec<f64> = vals.iter().map(|row| row[i]).collect();
            (*kind, pairwise_sum(&col))
        })
        .collect())
}

// ─── identity checks built on densities and integrals ───

/// Residual (and natural scale) of the pointwise Simons balance:
/// 8∇_ij(H·h^{ij} − 4|H|²g^{ij}) + ΔR + cgb
///   = 32·ea − 2·ec + 6|h₀²|² − 2⟨h₀⁴⟩ + 3|W|².
pub fn simons_pointwise_residual(gp: &GeometryPoint) -> Result<(f64, f64), GeomError> {
    gp.require(4)?;
    let h2 = dot_jets(&gp.hm, &gp.hm);
    let t_low: crate::geometry::S2 = std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            dot_jets(&gp.hm, &gp.h[i][j]).sub(&h2.mul(&gp.g[i][j]).scale(4.0))
        })
    });
    // ∇_i ∇_j T^{ij}: first covariant divergence (lowered free index), then
    // the scalar divergence.
    let dt = gp.covd_s2(&t_low);
    let ord = dt[0][0][0].ord().min(gp.ginv[0][0].ord());
    let v_low: crate::geometry::S1 = std::array::from_fn(|j| {
        let mut s = Jet::zero(ord);
        for i in 0..4 {
            for a in 0..4 {
                s.add_assign(&gp.ginv[i][a].mul(&dt[i][a][j]));
            }
        }
        s
    });
    let div2 = gp.div_s1(&v_low);
    let curv = gp.curvature()?;
    let lap_r = gp.laplacian(&curv.scal);
    let rm2 = gp.norm2_s4(&curv.rm).value();
    let ric2 = gp.norm2_s2(&curv.ric).value();
    let r = curv.scal.value();
    let cgb = rm2 - 4.0 * ric2 + r * r;
    let lhs = 8.0 * div2.value() + lap_r.value() + cgb;

    let d = density(gp)?;
    let rhs = 32.0 * d.ea - 2.0 * d.ec + 6.0 * d.q_h0sq - 2.0 * d.q_angle + 3.0 * d.w2;
    let scale = [
        8.0 * div2.value().abs(),
        lap_r.value().abs(),
        cgb.abs(),
        32.0 * d.ea.abs(),
        2.0 * d.ec.abs(),
        3.0 * d.w2,
    ]
    .into_iter()
    .fold(f64::MIN, f64::max)
    .max(1e-30);
    Ok((lhs - rhs, scale))
}

/// Both sides of the integrated balance:
/// 16𝓔_A − 𝓔_C + ∫(3|h₀²|² − ⟨h₀⁴⟩) = 16π²χ − (3/2)∫|W|².
pub fn simid_check(patch: &Patch, grid: &QuadratureGrid) -> Result<(f64, f64), EnergyError> {
    let chi = patch.closed().ok_or(EnergyError::NotClosed)?.chi;
    let vals = integrate_all(patch, grid)?;
    let get = |k: DensityKind| vals.iter().find(|(kk, _)| *kk == k).unwrap().1;
    let lhs = 16.0 * get(DensityKind::Ea) - get(DensityKind::Ec)
        + 3.0 * get(DensityKind::H0Sq2)
        - get(DensityKind::Angle4);
    let rhs = 16.0 * std::f64::consts::PI.powi(2) * chi - 1.5 * get(DensityKind::W2);
    Ok((lhs, rhs))
}

#[derive(Clone, Debug, Serialize)]
pub struct ConformalCheck {
    pub kind: DensityKind,
    pub base: f64,
    pub image: f64,
    pub rel_change: f64,
    pub pointwise_rel_change: Option<f64>,
}

/// Relative change of every density integral under a Möbius map — one
/// quadrature sweep per patch — plus, for the pointwise-conformal quartic
/// densities, the max pointwise change of density·dvol.
pub fn conformal_invariance_checks(
    patch: &Patch,
    map: &crate::chart::MoebiusMap,
    grid: &QuadratureGrid,
) -> Result<Vec<ConformalCheck>, EnergyError> {
    let mapped = patch.apply_moebius(map).map_err(GeomError::from)?;
    let base = integrate_all(patch, grid)?;
    let image = integrate_all(&mapped, grid)?;
    // pointwise invariance of the quartic densities, sampled once
    let mut worst_pointwise: Vec<Option<f64>> = vec![None; ALL_DENSITIES.len()];
    for u in patch.sample_points(24, 7) {
        let d0 = density(&GeometryPoint::new(patch, u, 3)?)?;
        let d1 = density(&GeometryPoint::new(&mapped, u, 3)?)?;
        for (slot, kind) in ALL_DENSITIES.iter().enumerate() {
            if matches!(
                kind,
                DensityKind::H04
                    | DensityKind::Angle4
                    | DensityKind::H0Sq2
                    | DensityKind::Tr4
                    | DensityKind::W2
            ) {
                let a = kind.pick(&d0) * d0.dvol;
                let b = kind.pick(&d1) * d1.dvol;
                let rel = (a - b).abs() / a.abs().max(1e-30);
                let w = worst_pointwise[slot].unwrap_or(0.0);
                worst_pointwise[slot] = Some(w.max(rel));
            }
        }
    }
    Ok(ALL_DENSITIES
        .iter()
        .enumerate()
        .map(|(slot, kind)| {
            let b = base[slot].1;
            let i = image[slot].1;
            ConformalCheck {
                kind: *kind,
                base: b,
                image: i,
                rel_change: (i - b).abs() / b.abs().max(1e-30),
                pointwise_rel_change: worst_pointwise[slot],
            }
        })
        .collect())
}

/// Single-density variant of [`conformal_invariance_checks`].
pub fn conformal_invariance_check(
    patch: &Patch,
    map: &crate::chart::MoebiusMap,
    kind: DensityKind,
    grid: &QuadratureGrid,
) -> Result<ConformalCheck, EnergyError> {
    let all = conformal_invariance_checks(patch, map, grid)?;
    Ok(all.into_iter().find(|c| c.kind == kind).unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::Preset;
    use std::f64::consts::PI;

    #[test]
    fn quadrature_weight_sums() {
        let g = gauss_legendre(12, 0.0, PI);
        assert!((g.weights.iter().sum::<f64>() - PI).abs() < 1e-12);
        let p = periodic_axis(9, 2.0 * PI);
        assert!((p.weights.iter().sum::<f64>() - 2.0 * PI).abs() < 1e-12);
        let s3: f64 = g
            .nodes
            .iter()
            .zip(&g.weights)
            .map(|(x, w)| w * x.sin().powi(3))
            .sum();
        assert!((s3 - 4.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn sphere_densities_closed_form() {
        let r = 1.4;
        let p = Patch::preset(Preset::Sphere4 { r }).unwrap();
        let gp = GeometryPoint::new(&p, [1.3, 1.1, 1.9, 2.4], 3).unwrap();
        let d = density(&gp).unwrap();
        let r4 = r.powi(4);
        assert!((d.ea - 3.0 / r4).abs() * r4 < 1e-10);
        assert!((d.ec - 36.0 / r4).abs() * r4 < 1e-10);
        assert!((d.cgb - 24.0 / r4).abs() * r4 < 1e-10);
        assert!(d.w2.abs() * r4 < 1e-10);
        assert!(d.q_h0_4.abs() * r4 < 1e-12);
    }

    #[test]
    fn flat_plane_densities_vanish() {
        let p = Patch::preset(Preset::Flat).unwrap();
        let gp = GeometryPoint::new(&p, [0.1, 0.5, -0.3, 0.2], 3).unwrap();
        let d = density(&gp).unwrap();
        for v in [d.ea, d.ec, d.q_h0_4, d.q_angle, d.q_h0sq, d.q_tr, d.w2, d.cgb] {
            assert!(v.abs() < 1e-13);
        }
    }

    #[test]
    fn sphere_integrals_match_closed_forms() {
        for r in [0.5, 1.0, 2.0] {
            let p = Patch::preset(Preset::Sphere4 { r }).unwrap();
            let grid = QuadratureGrid::for_patch(&p, 10).unwrap();
            let vals = integrate_all(&p, &grid).unwrap();
            let get = |k: DensityKind| vals.iter().find(|(kk, _)| *kk == k).unwrap().1;
            let pi2 = PI * PI;
            assert!(
                (get(DensityKind::Ea) - 8.0 * pi2).abs() / (8.0 * pi2) < 1e-9,
                "E_A(S4({r}))"
            );
            assert!((get(DensityKind::Cgb) - 64.0 * pi2).abs() / (64.0 * pi2) < 1e-9);
        }
    }

    #[test]
    fn gauss_bonnet_on_products_and_torus() {
        let pi2 = PI * PI;
        let p = Patch::preset(Preset::ProductSpheres { a: 1.0, b: 1.0 }).unwrap();
        let grid = QuadratureGrid::for_patch(&p, 10).unwrap();
        let cgb = integrate(&p, &grid, 3, |gp| density(gp).unwrap().cgb).unwrap();
        assert!((cgb - 128.0 * pi2).abs() / (128.0 * pi2) < 1e-9);
        let t = Patch::preset(Preset::CliffordTorus { a: 1.0 }).unwrap();
        let tg = QuadratureGrid::for_patch(&t, 6).unwrap();
        let vol = integrate(&t, &tg, 3, |_| 1.0).unwrap();
        let c0 = integrate(&t, &tg, 3, |gp| density(gp).unwrap().cgb).unwrap();
        assert!(c0.abs() / vol < 1e-12);
    }

    #[test]
    fn simons_residual_on_sphere_and_torus() {
        let p = Patch::preset(Preset::Sphere4 { r: 0.9 }).unwrap();
        let gp = GeometryPoint::new(&p, [1.2, 1.4, 1.0, 0.5], 6).unwrap();
        let (res, scale) = simons_pointwise_residual(&gp).unwrap();
        assert!(res.abs() / scale < 1e-11, "sphere: {res:.3e} vs {scale:.3e}");

        let base = Patch::preset(Preset::CliffordTorus { a: 1.0 }).unwrap();
        let q = base.perturb_normal(2e-2, 13).unwrap();
        for u in q.sample_points(4, 31) {
            let gp = GeometryPoint::new(&q, u, 6).unwrap();
            let (res, scale) = simons_pointwise_residual(&gp).unwrap();
            assert!(
                res.abs() / scale < 1e-8,
                "perturbed torus: {res:.3e} / {scale:.3e}"
            );
        }
    }

    #[test]
    fn simid_on_sphere_and_products() {
        let pi2 = PI * PI;
        let p = Patch::preset(Preset::Sphere4 { r: 1.0 }).unwrap();
        let grid = QuadratureGrid::for_patch(&p, 10).unwrap();
        let (lhs, rhs) = simid_check(&p, &grid).unwrap();
        assert!((lhs - 32.0 * pi2).abs() / (32.0 * pi2) < 1e-8);
        assert!((rhs - 32.0 * pi2).abs() / (32.0 * pi2) < 1e-8);

        let p = Patch::preset(Preset::ProductSpheres { a: 1.0, b: 1.3 }).unwrap();
        let grid = QuadratureGrid::for_patch(&p, 14).unwrap();
        let (lhs, rhs) = simid_check(&p, &grid).unwrap();
        assert!((lhs - rhs).abs() / rhs.abs() < 1e-6, "lhs {lhs} rhs {rhs}");
    }

    #[test]
    fn scaling_law_makes_integrals_radius_free() {
        let e1 = {
            let p = Patch::preset(Preset::ProductSpheres { a: 0.7, b: 0.91 }).unwrap();
            let grid = QuadratureGrid::for_patch(&p, 12).unwrap();
            integrate(&p, &grid, 3, |gp| density(gp).unwrap().q_h0_4).unwrap()
        };
        let e2 = {
            let p = Patch::preset(Preset::ProductSpheres { a: 1.4, b: 1.82 }).unwrap();
            let grid = QuadratureGrid::for_patch(&p, 12).unwrap();
            integrate(&p, &grid, 3, |gp| density(gp).unwrap().q_h0_4).unwrap()
        };
        assert!((e1 - e2).abs() / e1.abs() < 1e-10);
    }

    #[test]
    fn grid_refinement_is_converged() {
        let p = Patch::preset(Preset::ProductSpheres { a: 1.0, b: 1.3 }).unwrap();
        let cov = |n: usize| {
            let grid = QuadratureGrid::for_patch(&p, n).unwrap();
            integrate(&p, &grid, 3, |gp| density(gp).unwrap().ec).unwrap()
        };
        let (a, b) = (cov(10), cov(20));
        assert!((a - b).abs() / b.abs() < 1e-8);
    }

    #[test]
    fn dilation_leaves_conformal_energies_fixed() {
        let p = Patch::preset(Preset::ProductSpheres { a: 1.0, b: 1.3 }).unwrap();
        let grid = QuadratureGrid::for_patch(&p, 10).unwrap();
        let map = crate::chart::MoebiusMap::dilation(1.7);
        let c = conformal_invariance_check(&p, &map, DensityKind::Ea, &grid).unwrap();
        assert!(c.rel_change < 1e-10, "rel change {:.3e}", c.rel_change);
    }

    #[test]
    fn inversion_moves_the_bare_dirichlet_energy() {
        let p = Patch::preset(Preset::ProductSpheres { a: 1.0, b: 1.3 }).unwrap();
        let grid = QuadratureGrid::for_patch(&p, 20).unwrap();
        let mut c = vec![0.0; 6];
        c[0] = 2.6;
        c[3] = 0.4;
        let map = crate::chart::MoebiusMap::inversion(c);
        let all = conformal_invariance_checks(&p, &map, &grid).unwrap();
        let get = |k: DensityKind| all.iter().find(|c| c.kind == k).unwrap().clone();
        let ea = get(DensityKind::Ea);
        assert!(ea.rel_change < 1e-6, "E_A invariant, got {:.3e}", ea.rel_change);
        let bare = get(DensityKind::DirichletOnly);
        assert!(
            bare.rel_change > 1e-2,
            "negative control, got {:.3e}",
            bare.rel_change
        );
    }
}
