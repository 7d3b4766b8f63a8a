//! Pointwise extrinsic and intrinsic geometry of an immersion patch.
//!
//! A [`GeometryPoint`] carries every field as a jet, so covariant derivatives
//! of derived tensors at the expansion point are exact to roundoff: g, h and H
//! propagate through each algebraic step, and ∇, Δ, Δ⊥ reduce to jet
//! differentiation plus Christoffel corrections. No finite-difference stencils
//! appear anywhere in the core.
//!
//! Index discipline: tensors are stored with all parameter indices down;
//! contractions raise explicitly with g⁻¹. The Riemann tensor follows
//! R_{ijkl} = h_ik·h_jl − h_il·h_jk (antisymmetric in (ij) and (kl),
//! pair-symmetric), so Ric_{ik} = g^{jl} R_{ijkl} is positive on spheres.

use crate::chart::{invert4, ChartError, Patch};
use crate::jet::{dot_jets, Jet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeomError {
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error("insufficient jet order: need {need}, have {have}")]
    InsufficientOrder { need: usize, have: usize },
}

/// Ambient-vector-valued quantity (m jet channels).
pub type Amb = Vec<Jet>;
pub type S1 = [Jet; 4];
pub type S2 = [S1; 4];
pub type S3 = [S2; 4];
pub type S4 = [S3; 4];
pub type S5 = [S4; 4];
pub type A1 = [Amb; 4];
pub type A2 = [A1; 4];
pub type A3 = [A2; 4];

pub fn s2_new(ord: usize) -> S2 {
    std::array::from_fn(|_| std::array::from_fn(|_| Jet::zero(ord)))
}

/// All pointwise first- and second-fundamental-form data at one chart point.
pub struct GeometryPoint {
    pub m: usize,
    pub u: [f64; 4],
    pub phi: Amb,
    /// Tangents ∂_aΦ.
    pub e: A1,
    pub g: S2,
    pub ginv: S2,
    pub sqrt_det_g: Jet,
    /// Γ^k_{ij}, indexed [k][i][j].
    pub gamma: S3,
    /// Second fundamental form h_ij (normal-valued).
    pub h: A2,
    /// Mean curvature vector H = ¼ g^{ij} h_ij.
    pub hm: Amb,
    /// Trace-free part h₀_ij = h_ij − g_ij H.
    pub h0: A2,
}

impl GeometryPoint {
    pub fn new(patch: &Patch, u: [f64; 4], ord: usize) -> Result<GeometryPoint, GeomError> {
        let phi = patch.eval_jet(u, ord)?;
        Ok(GeometryPoint::from_jets(u, phi))
    }

    pub fn from_jets(u: [f64; 4], phi: Amb) -> GeometryPoint {
        let m = phi.len();
        let e: A1 = std::array::from_fn(|a| phi.iter().map(|p| p.deriv(a)).collect::<Amb>());
        let g: S2 = std::array::from_fn(|i| std::array::from_fn(|j| dot_jets(&e[i], &e[j])));
        let mut gflat = Vec::with_capacity(16);
        for gi in &g {
            for gij in gi {
                gflat.push(gij.clone());
            }
        }
        let ginv_flat = invert4(&gflat);
        let ginv: S2 = std::array::from_fn(|i| std::array::from_fn(|j| ginv_flat[i * 4 + j].clone()));
        let det = det4_jets(&g);
        let sqrt_det_g = det.sqrt();
        // Γ^k_ij = ½ g^{kl} (∂_i g_lj + ∂_j g_li − ∂_l g_ij)
        let dg: S3 = std::array::from_fn(|l| std::array::from_fn(|i| std::array::from_fn(|j| g[i][j].deriv(l))));
        let gamma: S3 = std::array::from_fn(|k| {
            std::array::from_fn(|i| {
                std::array::from_fn(|j| {
                    let mut s = Jet::zero(dg[0][0][0].ord());
                    for l in 0..4 {
                        let t = dg[i][l][j].add(&dg[j][l][i]).sub(&dg[l][i][j]);
                        s.add_assign(&ginv[k][l].mul(&t));
                    }
                    s.scale(0.5)
                })
            })
        });
        // h_ij = ∂_i∂_jΦ − Γ^k_ij ∂_kΦ (the Gauss formula; automatically normal)
        let h: A2 = std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                let mut v: Amb = e[i].iter().map(|c| c.deriv(j)).collect();
                for k in 0..4 {
                    for (vc, ec) in v.iter_mut().zip(e[k].iter()) {
                        *vc = vc.sub(&gamma[k][i][j].mul(ec));
                    }
                }
                v
            })
        });
        let mut hm = vec![Jet::zero(h[0][0][0].ord()); m];
        for i in 0..4 {
            for j in 0..4 {
                for (t, s) in hm.iter_mut().zip(h[i][j].iter()) {
                    t.add_assign(&ginv[i][j].mul(s).scale(0.25));
                }
            }
        }
        let h0: A2 = std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                h[i][j]
                    .iter()
                    .zip(hm.iter())
                    .map(|(hc, mc)| hc.sub(&g[i][j].mul(mc)))
                    .collect::<Amb>()
            })
        });
        GeometryPoint {
            m,
            u,
            phi,
            e,
            g,
            ginv,
            sqrt_det_g,
            gamma,
            h,
            hm,
            h0,
        }
    }

    /// Truncation order of the deepest exact derivative of Φ.
    pub fn ord(&self) -> usize {
        self.phi[0].ord()
    }

    pub fn require(&self, need: usize) -> Result<(), GeomError> {
        if self.ord() < need {
            return Err(GeomError::InsufficientOrder {
                need,
                have: self.ord(),
            });
        }
        Ok(())
    }

    fn amb_zero_like(&self, ord: usize) -> Amb {
        vec![Jet::zero(ord); self.m]
    }

    pub fn project_tangent(&self, v: &Amb) -> Amb {
        let ord = v[0].ord().min(self.e[0][0].ord());
        let vdote: S1 = std::array::from_fn(|i| dot_jets(v, &self.e[i]));
        let mut out = self.amb_zero_like(ord);
        for j in 0..4 {
            let mut coef = Jet::zero(ord);
            for i in 0..4 {
                coef.add_assign(&self.ginv[i][j].mul(&vdote[i]));
            }
            for (o, ec) in out.iter_mut().zip(self.e[j].iter()) {
                o.add_assign(&coef.mul(ec));
            }
        }
        out
    }

    pub fn project_normal(&self, v: &Amb) -> Amb {
        let t = self.project_tangent(v);
        v.iter().zip(t.iter()).map(|(a, b)| a.sub(b)).collect()
    }

    /// Channelwise chart derivative of an ambient-valued scalar.
    pub fn damb(&self, v: &Amb, axis: usize) -> Amb {
        v.iter().map(|c| c.deriv(axis)).collect()
    }

    // ─── covariant derivatives (all parameter indices down) ───

    pub fn covd_s1(&self, t: &S1) -> S2 {
        std::array::from_fn(|a| {
            std::array::from_fn(|i| {
                let mut s = t[i].deriv(a);
                for c in 0..4 {
                    s = s.sub(&self.gamma[c][a][i].mul(&t[c]));
                }
                s
            })
        })
    }

    pub fn covd_s2(&self, t: &S2) -> S3 {
        std::array::from_fn(|a| {
            std::array::from_fn(|i| {
                std::array::from_fn(|j| {
                    let mut s = t[i][j].deriv(a);
                    for c in 0..4 {
                        s = s.sub(&self.gamma[c][a][i].mul(&t[c][j]));
                        s = s.sub(&self.gamma[c][a][j].mul(&t[i][c]));
                    }
                    s
                })
            })
        })
    }

    pub fn covd_s3(&self, t: &S3) -> S4 {
        std::array::from_fn(|a| {
            std::array::from_fn(|i| {
                std::array::from_fn(|j| {
                    std::array::from_fn(|k| {
                        let mut s = t[i][j][k].deriv(a);
                        for c in 0..4 {
                            s = s.sub(&self.gamma[c][a][i].mul(&t[c][j][k]));
                            s = s.sub(&self.gamma[c][a][j].mul(&t[i][c][k]));
                            s = s.sub(&self.gamma[c][a][k].mul(&t[i][j][c]));
                        }
                        s
                    })
                })
            })
        })
    }

    pub fn covd_s4(&self, t: &S4) -> S5 {
        std::array::from_fn(|a| {
            std::array::from_fn(|i| {
                std::array::from_fn(|j| {
                    std::array::from_fn(|k| {
                        std::array::from_fn(|l| {
                            let mut s = t[i][j][k][l].deriv(a);
                            for c in 0..4 {
                                s = s.sub(&self.gamma[c][a][i].mul(&t[c][j][k][l]));
                                s = s.sub(&self.gamma[c][a][j].mul(&t[i][c][k][l]));
                                s = s.sub(&self.gamma[c][a][k].mul(&t[i][j][c][l]));
                                s = s.sub(&self.gamma[c][a][l].mul(&t[i][j][k][c]));
                            }
                            s
                        })
                    })
                })
            })
        })
    }

    pub fn covd_a1(&self, t: &A1) -> A2 {
        std::array::from_fn(|a| {
            std::array::from_fn(|i| {
                let mut v = self.damb(&t[i], a);
                for c in 0..4 {
                    for (vc, tc) in v.iter_mut().zip(t[c].iter()) {
                        *vc = vc.sub(&self.gamma[c][a][i].mul(tc));
                    }
                }
                v
            })
        })
    }

    pub fn covd_a2(&self, t: &A2) -> A3 {
        std::array::from_fn(|a| {
            std::array::from_fn(|i| {
                std::array::from_fn(|j| {
                    let mut v = self.damb(&t[i][j], a);
                    for c in 0..4 {
                        for (x, (tc, td)) in v
                            .iter_mut()
                            .zip(t[c][j].iter().zip(t[i][c].iter()))
                        {
                            *x = x.sub(&self.gamma[c][a][i].mul(tc));
                            *x = x.sub(&self.gamma[c][a][j].mul(td));
                        }
                    }
                    v
                })
            })
        })
    }

    /// Divergence ∇_j T^j of a lower-index ambient-valued 1-form.
    pub fn div_a1(&self, t: &A1) -> Amb {
        let ct = self.covd_a1(t);
        let ord = ct[0][0][0].ord();
        let mut out = self.amb_zero_like(ord);
        for a in 0..4 {
            for j in 0..4 {
                for (o, c) in out.iter_mut().zip(ct[a][j].iter()) {
                    o.add_assign(&self.ginv[a][j].mul(c));
                }
            }
        }
        out
    }

    /// Divergence ∇_j T^j of a lower-index scalar 1-form.
    pub fn div_s1(&self, t: &S1) -> Jet {
        let ct = self.covd_s1(t);
        let mut out = Jet::zero(ct[0][0].ord());
        for a in 0..4 {
            for j in 0..4 {
                out.add_assign(&self.ginv[a][j].mul(&ct[a][j]));
            }
        }
        out
    }

    pub fn grad_scalar(&self, f: &Jet) -> S1 {
        std::array::from_fn(|a| f.deriv(a))
    }

    /// Laplace–Beltrami (div grad) of a scalar.
    pub fn laplacian(&self, f: &Jet) -> Jet {
        self.div_s1(&self.grad_scalar(f))
    }

    /// Laplace–Beltrami applied channelwise to an ambient-valued scalar.
    pub fn laplacian_amb(&self, v: &Amb) -> Amb {
        let d1: A1 = std::array::from_fn(|a| self.damb(v, a));
        self.div_a1(&d1)
    }

    /// π_n∇ of an ambient-valued scalar: the 1-form a ↦ π_n(∂_a v).
    pub fn pin_grad(&self, v: &Amb) -> A1 {
        std::array::from_fn(|a| self.project_normal(&self.damb(v, a)))
    }

    /// Normal-bundle Laplacian Δ⊥ = π_n ∇_j π_n ∇^j.
    pub fn lap_perp(&self, v: &Amb) -> Amb {
        let s = self.pin_grad(v);
        self.project_normal(&self.div_a1(&s))
    }

    /// |π_n ∇ v|² with full index contraction.
    pub fn pin_grad_norm2(&self, v: &Amb) -> Jet {
        let s = self.pin_grad(v);
        let mut out = Jet::zero(s[0][0].ord());
        for a in 0..4 {
            for b in 0..4 {
                out.add_assign(&self.ginv[a][b].mul(&dot_jets(&s[a], &s[b])));
            }
        }
        out
    }

    // ─── index raising ───

    pub fn raise_s2(&self, t: &S2) -> S2 {
        std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                let mut s = Jet::zero(t[0][0].ord().min(self.ginv[0][0].ord()));
                for a in 0..4 {
                    for b in 0..4 {
                        s.add_assign(&self.ginv[i][a].mul(&self.ginv[j][b]).mul(&t[a][b]));
                    }
                }
                s
            })
        })
    }

    /// Raise one chosen slot of a rank-4 tensor, repeatedly usable.
    pub fn raise_s4_slot(&self, t: &S4, slot: usize) -> S4 {
        std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                std::array::from_fn(|k| {
                    std::array::from_fn(|l| {
                        let idx = [i, j, k, l];
                        let mut s = Jet::zero(t[0][0][0][0].ord().min(self.ginv[0][0].ord()));
                        for c in 0..4 {
                            let mut src = idx;
                            src[slot] = c;
                            s.add_assign(
                                &self.ginv[idx[slot]][c]
                                    .mul(&t[src[0]][src[1]][src[2]][src[3]]),
                            );
                        }
                        s
                    })
                })
            })
        })
    }

    pub fn norm2_s2(&self, t: &S2) -> Jet {
        let up = self.raise_s2(t);
        let mut s = Jet::zero(up[0][0].ord());
        for i in 0..4 {
            for j in 0..4 {
                s.add_assign(&up[i][j].mul(&t[i][j]));
            }
        }
        s
    }

    pub fn norm2_s4(&self, t: &S4) -> Jet {
        let mut up = self.raise_s4_slot(t, 0);
        for slot in 1..4 {
            up = self.raise_s4_slot(&up, slot);
        }
        let mut s = Jet::zero(up[0][0][0][0].ord());
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    for l in 0..4 {
                        s.add_assign(&up[i][j][k][l].mul(&t[i][j][k][l]));
                    }
                }
            }
        }
        s
    }

    // ─── scalar invariants of the second fundamental form ───

    /// (h·h)_{ij} for an ambient-valued symmetric 2-tensor: t_ik · t^k_j.
    pub fn square_a2(&self, t: &A2) -> S2 {
        std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                let mut s = Jet::zero(t[0][0][0].ord().min(self.ginv[0][0].ord()));
                for k in 0..4 {
                    for l in 0..4 {
                        s.add_assign(&self.ginv[k][l].mul(&dot_jets(&t[i][k], &t[l][j])));
                    }
                }
                s
            })
        })
    }

    /// |t|² = g^{ik}g^{jl} t_ij · t_kl for ambient-valued 2-tensors.
    pub fn norm2_a2(&self, t: &A2) -> Jet {
        let mut s = Jet::zero(t[0][0][0].ord().min(self.ginv[0][0].ord()));
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    for l in 0..4 {
                        s.add_assign(
                            &self.ginv[i][k]
                                .mul(&self.ginv[j][l])
                                .mul(&dot_jets(&t[i][j], &t[k][l])),
                        );
                    }
                }
            }
        }
        s
    }

    /// The scalar 2-tensor (H·t)_ij.
    pub fn hdot_a2(&self, t: &A2) -> S2 {
        std::array::from_fn(|i| std::array::from_fn(|j| dot_jets(&self.hm, &t[i][j])))
    }

    // ─── curvature ───

    /// Gauss-equation curvature: Rm, Ric, R, Schouten and Weyl.
    pub fn curvature(&self) -> Result<CurvatureSet, GeomError> {
        self.require(2)?;
        let rm: S4 = std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                std::array::from_fn(|k| {
                    std::array::from_fn(|l| {
                        dot_jets(&self.h[i][k], &self.h[j][l])
                            .sub(&dot_jets(&self.h[i][l], &self.h[j][k]))
                    })
                })
            })
        });
        let ric: S2 = std::array::from_fn(|i| {
            std::array::from_fn(|k| {
                let mut s = Jet::zero(rm[0][0][0][0].ord().min(self.ginv[0][0].ord()));
                for j in 0..4 {
                    for l in 0..4 {
                        s.add_assign(&self.ginv[j][l].mul(&rm[i][j][k][l]));
                    }
                }
                s
            })
        });
        let mut scal = Jet::zero(ric[0][0].ord());
        for i in 0..4 {
            for k in 0..4 {
                scal.add_assign(&self.ginv[i][k].mul(&ric[i][k]));
            }
        }
        let schouten: S2 = std::array::from_fn(|i| {
            std::array::from_fn(|j| ric[i][j].sub(&scal.mul(&self.g[i][j]).scale(1.0 / 6.0)))
        });
        // W = Rm − ½ P ∧KN g
        let kn = kulkarni_nomizu(&schouten, &self.g);
        let weyl: S4 = std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                std::array::from_fn(|k| {
                    std::array::from_fn(|l| rm[i][j][k][l].sub(&kn[i][j][k][l].scale(0.5)))
                })
            })
        });
        Ok(CurvatureSet {
            rm,
            ric,
            scal,
            schouten,
            weyl,
        })
    }

    /// Coordinate Riemann tensor from Γ and ∂Γ; used solely to cross-validate
    /// the Gauss-equation route.
    pub fn riemann_intrinsic(&self) -> Result<S4, GeomError> {
        self.require(3)?;
        let dgamma: S4 = std::array::from_fn(|d| {
            std::array::from_fn(|k| {
                std::array::from_fn(|i| std::array::from_fn(|j| self.gamma[k][i][j].deriv(d)))
            })
        });
        // R^ρ_{σμν} = ∂_μ Γ^ρ_{νσ} − ∂_ν Γ^ρ_{μσ} + Γ^ρ_{μλ}Γ^λ_{νσ} − Γ^ρ_{νλ}Γ^λ_{μσ}
        let rup: S4 = std::array::from_fn(|r| {
            std::array::from_fn(|s| {
                std::array::from_fn(|mu| {
                    std::array::from_fn(|nu| {
                        let mut t = dgamma[mu][r][nu][s].sub(&dgamma[nu][r][mu][s]);
                        for lam in 0..4 {
                            t.add_assign(&self.gamma[r][mu][lam].mul(&self.gamma[lam][nu][s]));
                            t = t.sub(&self.gamma[r][nu][lam].mul(&self.gamma[lam][mu][s]));
                        }
                        t
                    })
                })
            })
        });
        Ok(std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                std::array::from_fn(|k| {
                    std::array::from_fn(|l| {
                        let mut t = Jet::zero(rup[0][0][0][0].ord().min(self.g[0][0].ord()));
                        for r in 0..4 {
                            t.add_assign(&self.g[i][r].mul(&rup[r][j][k][l]));
                        }
                        t
                    })
                })
            })
        }))
    }

    /// Weyl tensor in extrinsic terms, from h₀ alone:
    /// W = ½ h₀ ∧̇KN h₀ + ½ (h₀² ∧KN g) − (1/12)|h₀|² g ∧KN g.
    /// (Expanding h = h₀ + gH in the Gauss equation and subtracting
    /// ½ P ∧KN g; this combination is totally trace-free.)
    pub fn weyl_extrinsic(&self) -> Result<S4, GeomError> {
        self.require(2)?;
        let h0sq = self.square_a2(&self.h0);
        let h0n2 = self.norm2_a2(&self.h0);
        let kn1 = kulkarni_nomizu(&h0sq, &self.g);
        let kn2 = kulkarni_nomizu(&self.g, &self.g);
        Ok(std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                std::array::from_fn(|k| {
                    std::array::from_fn(|l| {
                        let pair = dot_jets(&self.h0[i][k], &self.h0[j][l])
                            .sub(&dot_jets(&self.h0[i][l], &self.h0[j][k]));
                        pair.add(&kn1[i][j][k][l].scale(0.5))
                            .sub(&h0n2.mul(&kn2[i][j][k][l]).scale(1.0 / 12.0))
                    })
                })
            })
        }))
    }

    /// Cotton tensor C_{abc} = ∇_a P_{bc} − ∇_b P_{ac} (all indices down).
    pub fn cotton(&self, curv: &CurvatureSet) -> Result<S3, GeomError> {
        self.require(4)?;
        let dp = self.covd_s2(&curv.schouten);
        Ok(std::array::from_fn(|a| {
            std::array::from_fn(|b| std::array::from_fn(|c| dp[a][b][c].sub(&dp[b][a][c])))
        }))
    }

    /// 2∇_i W^{icab} lowered to match `cotton` (the Cotton–Weyl link).
    pub fn cotton_from_weyl(&self, curv: &CurvatureSet) -> Result<S3, GeomError> {
        self.require(4)?;
        let dw = self.covd_s4(&curv.weyl);
        // Y_{cab} = g^{di} ∇_d W_{icab}, then C^{abc} = 2 Y^{cab}; return lowered
        // to C_{abc}-layout: C_{abc} = 2 g_{..}-free: directly C_{abc} = 2 Y_{cab}
        // reshuffled: ∇^i W_{icab} has free (c,a,b) all down already.
        let y: S3 = std::array::from_fn(|c| {
            std::array::from_fn(|a| {
                std::array::from_fn(|b| {
                    let mut s = Jet::zero(dw[0][0][0][0][0].ord().min(self.ginv[0][0].ord()));
                    for d in 0..4 {
                        for i in 0..4 {
                            s.add_assign(&self.ginv[d][i].mul(&dw[d][i][c][a][b]));
                        }
                    }
                    s
                })
            })
        });
        Ok(std::array::from_fn(|a| {
            std::array::from_fn(|b| std::array::from_fn(|c| y[c][a][b].scale(2.0)))
        }))
    }

    /// Bach tensor B_{bc} = ΔP_{bc} − ∇_a∇_b P^a_c (outer derivative
    /// contracted) + P^{ij} W_{bicj}, all indices down.
    pub fn bach(&self, curv: &CurvatureSet) -> Result<S2, GeomError> {
        self.require(5)?;
        let dp = self.covd_s2(&curv.schouten);
        let ddp = self.covd_s3(&dp); // [outer][inner][P1][P2]
        let ord = ddp[0][0][0][0].ord().min(self.ginv[0][0].ord());
        let lap_p: S2 = std::array::from_fn(|b| {
            std::array::from_fn(|c| {
                let mut s = Jet::zero(ord);
                for a in 0..4 {
                    for d in 0..4 {
                        s.add_assign(&self.ginv[a][d].mul(&ddp[a][d][b][c]));
                    }
                }
                s
            })
        });
        let term2: S2 = std::array::from_fn(|b| {
            std::array::from_fn(|c| {
                let mut s = Jet::zero(ord);
                for a in 0..4 {
                    for j in 0..4 {
                        s.add_assign(&self.ginv[a][j].mul(&ddp[a][b][j][c]));
                    }
                }
                s
            })
        });
        let pup = self.raise_s2(&curv.schouten);
        let term3: S2 = std::array::from_fn(|b| {
            std::array::from_fn(|c| {
                let mut s = Jet::zero(ord);
                for i in 0..4 {
                    for j in 0..4 {
                        s.add_assign(&pup[i][j].mul(&curv.weyl[b][i][c][j]));
                    }
                }
                s
            })
        });
        Ok(std::array::from_fn(|b| {
            std::array::from_fn(|c| lap_p[b][c].sub(&term2[b][c]).add(&term3[b][c]))
        }))
    }

    /// Codazzi residual π_n∇_i h^{ij} − factor·π_n∇^j H per free index j
    /// (factor 4 in dimension 4; the wrong factor is exposed for the
    /// negative-control debug path).
    pub fn codazzi_residual_with_factor(&self, factor: f64) -> Result<A1, GeomError> {
        self.require(3)?;
        let dh = self.covd_a2(&self.h);
        let ord = dh[0][0][0][0].ord();
        Ok(std::array::from_fn(|j| {
            // Σ g^{ia} g^{jb} ∇_i h_{ab} − factor · g^{jb} ∂_b H, then project.
            let mut v = self.amb_zero_like(ord);
            for i in 0..4 {
                for a in 0..4 {
                    for b in 0..4 {
                        let w = self.ginv[i][a].mul(&self.ginv[j][b]);
                        for (t, s) in v.iter_mut().zip(dh[i][a][b].iter()) {
                            t.add_assign(&w.mul(s));
                        }
                    }
                }
            }
            for b in 0..4 {
                let db = self.damb(&self.hm, b);
                for (t, s) in v.iter_mut().zip(db.iter()) {
                    t.add_assign(&self.ginv[j][b].mul(s).scale(-factor));
                }
            }
            self.project_normal(&v)
        }))
    }

    pub fn codazzi_residual(&self) -> Result<A1, GeomError> {
        self.codazzi_residual_with_factor(4.0)
    }

    /// |π_n ∇h|² with full index contraction (the convention the Simons
    /// identity arbitrates).
    pub fn pin_dh_norm2(&self) -> Result<Jet, GeomError> {
        self.require(3)?;
        let dh = self.covd_a2(&self.h);
        let p: A3 = std::array::from_fn(|k| {
            std::array::from_fn(|i| std::array::from_fn(|j| self.project_normal(&dh[k][i][j])))
        });
        let ord = p[0][0][0][0].ord().min(self.ginv[0][0].ord());
        let mut s = Jet::zero(ord);
        for k in 0..4 {
            for i in 0..4 {
                for j in 0..4 {
                    for k2 in 0..4 {
                        for i2 in 0..4 {
                            for j2 in 0..4 {
                                let w = self.ginv[k][k2].mul(&self.ginv[i][i2]).mul(&self.ginv[j][j2]);
                                s.add_assign(&w.mul(&dot_jets(&p[k][i][j], &p[k2][i2][j2])));
                            }
                        }
                    }
                }
            }
        }
        Ok(s)
    }
}

/// Curvature tensors derived from one geometry point (all indices down).
pub struct CurvatureSet {
    pub rm: S4,
    pub ric: S2,
    pub scal: Jet,
    pub schouten: S2,
    pub weyl: S4,
}

// ─── value-level extraction ───
//
// Quadrature sweeps only consume derivative VALUES at each node; carrying the
// contraction algebra on jets would waste two orders of magnitude of work.
// `GeoValues` snapshots everything an energy density needs as plain floats.

pub type FV = Vec<f64>;
pub type F2 = [[f64; 4]; 4];

/// Plain-float snapshot of the pointwise geometry (derivative values only).
pub struct GeoValues {
    pub m: usize,
    pub g: F2,
    pub ginv: F2,
    pub sqrtg: f64,
    pub e: [FV; 4],
    pub h: [[FV; 4]; 4],
    pub h0: [[FV; 4]; 4],
    pub hm: FV,
    /// ∂_a H (ambient values).
    pub dhm: [FV; 4],
    /// ∇_k h_ij (covariant derivative values, ambient).
    pub dh: [[[FV; 4]; 4]; 4],
}

impl GeometryPoint {
    /// Snapshot derivative values for the float-only density path.
    pub fn values(&self) -> Result<GeoValues, GeomError> {
        self.require(3)?;
        let val = |v: &Amb| -> FV { v.iter().map(|j| j.value()).collect() };
        let dh_j = self.covd_a2(&self.h);
        Ok(GeoValues {
            m: self.m,
            g: std::array::from_fn(|i| std::array::from_fn(|j| self.g[i][j].value())),
            ginv: std::array::from_fn(|i| std::array::from_fn(|j| self.ginv[i][j].value())),
            sqrtg: self.sqrt_det_g.value(),
            e: std::array::from_fn(|a| val(&self.e[a])),
            h: std::array::from_fn(|i| std::array::from_fn(|j| val(&self.h[i][j]))),
            h0: std::array::from_fn(|i| std::array::from_fn(|j| val(&self.h0[i][j]))),
            hm: val(&self.hm),
            dhm: std::array::from_fn(|a| val(&self.damb(&self.hm, a))),
            dh: std::array::from_fn(|k| {
                std::array::from_fn(|i| std::array::from_fn(|j| val(&dh_j[k][i][j])))
            }),
        })
    }
}

impl GeoValues {
    pub fn dot(&self, a: &FV, b: &FV) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    pub fn project_normal(&self, v: &FV) -> FV {
        let vdote: [f64; 4] = std::array::from_fn(|i| self.dot(v, &self.e[i]));
        let mut out = v.clone();
        for j in 0..4 {
            let mut coef = 0.0;
            for i in 0..4 {
                coef += self.ginv[i][j] * vdote[i];
            }
            for (o, ec) in out.iter_mut().zip(self.e[j].iter()) {
                *o -= coef * ec;
            }
        }
        out
    }
}

/// Kulkarni–Nomizu product of symmetric 2-tensors.
pub fn kulkarni_nomizu(a: &S2, b: &S2) -> S4 {
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            std::array::from_fn(|k| {
                std::array::from_fn(|l| {
                    a[i][k]
                        .mul(&b[j][l])
                        .add(&a[j][l].mul(&b[i][k]))
                        .sub(&a[i][l].mul(&b[j][k]))
                        .sub(&a[j][k].mul(&b[i][l]))
                })
            })
        })
    })
}

fn det4_jets(g: &S2) -> Jet {
    // cofactor expansion along the first row
    let det3 = |r: [usize; 3], c: [usize; 3]| -> Jet {
        let m = |i: usize, j: usize| &g[r[i]][c[j]];
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
    let mut det = Jet::zero(g[0][0].ord());
    for j in 0..4 {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        det.add_assign(&g[0][j].mul(&det3(rows(0), rows(j))).scale(sign));
    }
    det
}

// ─── exterior calculus on scalar-valued parameter forms at a point ───

/// d of a 1-form: (dA)_{ab} = ∂_a A_b − ∂_b A_a.
pub fn d1(a: &S1) -> S2 {
    std::array::from_fn(|i| std::array::from_fn(|j| a[j].deriv(i).sub(&a[i].deriv(j))))
}

/// d of a 2-form: (dA)_{abc} = ∂_a A_{bc} + ∂_b A_{ca} + ∂_c A_{ab}.
pub fn d2(a: &S2) -> S3 {
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            std::array::from_fn(|k| {
                a[j][k]
                    .deriv(i)
                    .add(&a[k][i].deriv(j))
                    .add(&a[i][j].deriv(k))
            })
        })
    })
}

impl GeometryPoint {
    /// Codifferential of a 1-form: d⋆A = ∇^j A_j.
    pub fn dstar1(&self, a: &S1) -> Jet {
        self.div_s1(a)
    }

    /// Codifferential of a 2-form: (d⋆A)_i = ∇^j A_{ji}.
    pub fn dstar2(&self, a: &S2) -> S1 {
        let da = self.covd_s2(a);
        std::array::from_fn(|i| {
            let mut s = Jet::zero(da[0][0][0].ord().min(self.ginv[0][0].ord()));
            for j in 0..4 {
                for k in 0..4 {
                    s.add_assign(&self.ginv[j][k].mul(&da[k][j][i]));
                }
            }
            s
        })
    }

    /// Codifferential of a 3-form: (d⋆A)_{ij} = ∇^a A_{aij}.
    pub fn dstar3(&self, a: &S3) -> S2 {
        let da = self.covd_s3(a);
        std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                let mut s = Jet::zero(da[0][0][0][0].ord().min(self.ginv[0][0].ord()));
                for c in 0..4 {
                    for k in 0..4 {
                        s.add_assign(&self.ginv[c][k].mul(&da[k][c][i][j]));
                    }
                }
                s
            })
        })
    }

    /// Codifferential of an ambient-valued 2-form: (d⋆A)_b = ∇^a A_{ab}.
    pub fn dstar_a2(&self, a: &A2) -> A1 {
        let da = self.covd_a2(a);
        let ord = da[0][0][0][0].ord();
        std::array::from_fn(|b| {
            let mut v = self.amb_zero_like(ord);
            for d in 0..4 {
                for i in 0..4 {
                    for (t, s) in v.iter_mut().zip(da[d][i][b].iter()) {
                        t.add_assign(&self.ginv[d][i].mul(s));
                    }
                }
            }
            v
        })
    }

    /// Hodge star of a scalar p-form (components down in, components down out).
    pub fn star(&self, comps: &FormS) -> FormS {
        let ord = self
            .sqrt_det_g
            .ord()
            .min(comps.min_ord().unwrap_or(self.sqrt_det_g.ord()));
        let inv_sqrt = self.sqrt_det_g.recip();
        let eps_up = |i: usize, j: usize, k: usize, l: usize| -> f64 { perm_sign(i, j, k, l) };
        match comps {
            FormS::P0(a) => {
                // (⋆A)^{ijkl} = ε^{ijkl} A; lower with g (det factors collapse):
                // (⋆A)_{ijkl} = √g · sign · A
                let v = self.sqrt_det_g.mul(a);
                FormS::P4(Box::new(std::array::from_fn(|i| {
                    std::array::from_fn(|j| {
                        std::array::from_fn(|k| {
                            std::array::from_fn(|l| v.scale(eps_up(i, j, k, l)))
                        })
                    })
                })))
            }
            FormS::P1(a) => {
                // (⋆A)^{ijk} = ε^{ijkl} A_l, then lower three slots.
                let up: S3 = std::array::from_fn(|i| {
                    std::array::from_fn(|j| {
                        std::array::from_fn(|k| {
                            let mut s = Jet::zero(ord);
                            for l in 0..4 {
                                let sg = eps_up(i, j, k, l);
                                if sg != 0.0 {
                                    s.add_assign(&a[l].scale(sg));
                                }
                            }
                            s.mul(&inv_sqrt)
                        })
                    })
                });
                FormS::P3(Box::new(self.lower3(&up)))
            }
            FormS::P2(a) => {
                let up: S2 = std::array::from_fn(|i| {
                    std::array::from_fn(|j| {
                        let mut s = Jet::zero(ord);
                        for k in 0..4 {
                            for l in 0..4 {
                                let sg = eps_up(i, j, k, l);
                                if sg != 0.0 {
                                    s.add_assign(&a[k][l].scale(sg * 0.5));
                                }
                            }
                        }
                        s.mul(&inv_sqrt)
                    })
                });
                FormS::P2(Box::new(self.lower2(&up)))
            }
            FormS::P3(a) => {
                let up: S1 = std::array::from_fn(|i| {
                    let mut s = Jet::zero(ord);
                    for j in 0..4 {
                        for k in 0..4 {
                            for l in 0..4 {
                                let sg = eps_up(i, j, k, l);
                                if sg != 0.0 {
                                    s.add_assign(&a[j][k][l].scale(sg / 6.0));
                                }
                            }
                        }
                    }
                    s.mul(&inv_sqrt)
                });
                FormS::P1(Box::new(std::array::from_fn(|i| {
                    let mut s = Jet::zero(ord);
                    for j in 0..4 {
                        s.add_assign(&self.g[i][j].mul(&up[j]));
                    }
                    s
                })))
            }
            FormS::P4(a) => {
                let mut s = Jet::zero(ord);
                for i in 0..4 {
                    for j in 0..4 {
                        for k in 0..4 {
                            for l in 0..4 {
                                let sg = eps_up(i, j, k, l);
                                if sg != 0.0 {
                                    s.add_assign(&a[i][j][k][l].scale(sg / 24.0));
                                }
                            }
                        }
                    }
                }
                FormS::P0(Box::new(s.mul(&inv_sqrt)))
            }
        }
    }

    fn lower2(&self, t: &S2) -> S2 {
        std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                let mut s = Jet::zero(t[0][0].ord().min(self.g[0][0].ord()));
                for a in 0..4 {
                    for b in 0..4 {
                        s.add_assign(&self.g[i][a].mul(&self.g[j][b]).mul(&t[a][b]));
                    }
                }
                s
            })
        })
    }

    fn lower3(&self, t: &S3) -> S3 {
        std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                std::array::from_fn(|k| {
                    let mut s = Jet::zero(t[0][0][0].ord().min(self.g[0][0].ord()));
                    for a in 0..4 {
                        for b in 0..4 {
                            for c in 0..4 {
                                s.add_assign(
                                    &self.g[i][a]
                                        .mul(&self.g[j][b])
                                        .mul(&self.g[k][c].mul(&t[a][b][c])),
                                );
                            }
                        }
                    }
                    s
                })
            })
        })
    }
}

/// Scalar-valued parameter form of any degree, full antisymmetric storage.
pub enum FormS {
    P0(Box<Jet>),
    P1(Box<S1>),
    P2(Box<S2>),
    P3(Box<S3>),
    P4(Box<S4>),
}

impl FormS {
    pub fn degree(&self) -> usize {
        match self {
            FormS::P0(_) => 0,
            FormS::P1(_) => 1,
            FormS::P2(_) => 2,
            FormS::P3(_) => 3,
            FormS::P4(_) => 4,
        }
    }

    fn min_ord(&self) -> Option<usize> {
        let mut o: Option<usize> = None;
        let mut upd = |j: &Jet| {
            o = Some(o.map_or(j.ord(), |x| x.min(j.ord())));
        };
        match self {
            FormS::P0(a) => upd(a),
            FormS::P1(a) => a.iter().for_each(&mut upd),
            FormS::P2(a) => a.iter().flatten().for_each(&mut upd),
            FormS::P3(a) => a.iter().flatten().flatten().for_each(&mut upd),
            FormS::P4(a) => a.iter().flatten().flatten().flatten().for_each(&mut upd),
        }
        o
    }

    pub fn max_value(&self) -> f64 {
        let mut worst = 0.0f64;
        let mut upd = |j: &Jet| worst = worst.max(j.value().abs());
        match self {
            FormS::P0(a) => upd(a),
            FormS::P1(a) => a.iter().for_each(&mut upd),
            FormS::P2(a) => a.iter().flatten().for_each(&mut upd),
            FormS::P3(a) => a.iter().flatten().flatten().for_each(&mut upd),
            FormS::P4(a) => a.iter().flatten().flatten().flatten().for_each(&mut upd),
        }
        worst
    }
}

pub fn perm_sign(i: usize, j: usize, k: usize, l: usize) -> f64 {
    let v = [i, j, k, l];
    for a in 0..4 {
        for b in a + 1..4 {
            if v[a] == v[b] {
                return 0.0;
            }
        }
    }
    let mut sign = 1.0;
    let mut v = v;
    for a in 0..4 {
        for b in a + 1..4 {
            if v[a] > v[b] {
                v.swap(a, b);
                sign = -sign;
            }
        }
    }
    sign
}

// value-level helpers used all over the test suites

pub fn amb_value_norm(v: &Amb) -> f64 {
    v.iter().map(|j| j.value() * j.value()).sum::<f64>().sqrt()
}

pub fn s2_value_max(t: &S2) -> f64 {
    t.iter()
        .flatten()
        .map(|j| j.value().abs())
        .fold(0.0, f64::max)
}

pub fn s4_value_max(t: &S4) -> f64 {
    t.iter()
        .flatten()
        .flatten()
        .flatten()
        .map(|j| j.value().abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::Preset;

    fn gp(patch: &Patch, u: [f64; 4], ord: usize) -> GeometryPoint {
        GeometryPoint::new(patch, u, ord).unwrap()
    }

    #[test]
    fn flat_plane_has_no_curvature() {
        let p = Patch::preset(Preset::Flat).unwrap();
        let gp = gp(&p, [0.3, -0.2, 0.5, 0.1], 4);
        for i in 0..4 {
            for j in 0..4 {
                assert!(amb_value_norm(&gp.h[i][j]) < 1e-14);
            }
        }
        assert!(amb_value_norm(&gp.hm) < 1e-14);
        let c = gp.curvature().unwrap();
        assert!(s4_value_max(&c.rm) < 1e-14);
    }

    #[test]
    fn sphere_fundamental_forms() {
        let r = 1.3;
        let p = Patch::preset(Preset::Sphere4 { r }).unwrap();
        for u in p.sample_points(6, 42) {
            let gp = gp(&p, u, 3);
            let hn = amb_value_norm(&gp.hm);
            assert!((hn - 1.0 / r).abs() < 1e-11, "|H| = 1/r");
            for i in 0..4 {
                for j in 0..4 {
                    assert!(amb_value_norm(&gp.h0[i][j]) < 1e-10, "umbilic");
                    // h is normal-valued
                    let tang = gp.project_tangent(&gp.h[i][j]);
                    assert!(amb_value_norm(&tang) < 1e-10);
                }
            }
        }
    }

    #[test]
    fn clifford_torus_metric_and_mean_curvature() {
        let a = 0.9;
        let p = Patch::preset(Preset::CliffordTorus { a }).unwrap();
        let gp = gp(&p, [0.4, 1.3, 2.6, 5.0], 3);
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { a * a } else { 0.0 };
                assert!((gp.g[i][j].value() - expect).abs() < 1e-13);
            }
        }
        let h2 = dot_jets(&gp.hm, &gp.hm).value();
        assert!((h2 - 1.0 / (4.0 * a * a)).abs() < 1e-12);
    }

    #[test]
    fn sphere_curvature_closed_forms() {
        let r = 0.8;
        let p = Patch::preset(Preset::Sphere4 { r }).unwrap();
        let gp = gp(&p, [1.2, 1.0, 1.7, 2.0], 3);
        let c = gp.curvature().unwrap();
        assert!((c.scal.value() - 12.0 / (r * r)).abs() < 1e-10);
        for i in 0..4 {
            for j in 0..4 {
                let expect = 3.0 / (r * r) * gp.g[i][j].value();
                assert!((c.ric[i][j].value() - expect).abs() < 1e-10);
            }
        }
        assert!(s4_value_max(&c.weyl) < 1e-10, "sphere is conformally flat");
    }

    #[test]
    fn product_spheres_einstein_but_not_conformally_flat() {
        let a = 1.1;
        let p = Patch::preset(Preset::ProductSpheres { a, b: a }).unwrap();
        let gp = gp(&p, [1.0, 2.0, 1.4, 0.7], 5);
        let c = gp.curvature().unwrap();
        assert!((c.scal.value() - 4.0 / (a * a)).abs() < 1e-10);
        for i in 0..4 {
            for j in 0..4 {
                let expect = 1.0 / (a * a) * gp.g[i][j].value();
                assert!((c.ric[i][j].value() - expect).abs() < 1e-10, "Einstein");
            }
        }
        assert!(s4_value_max(&c.weyl) > 1e-3, "Weyl must not vanish");
        let b = gp.bach(&c).unwrap();
        assert!(s2_value_max(&b) < 1e-9, "Einstein metrics are Bach-flat");
    }

    #[test]
    fn gauss_equation_matches_coordinate_riemann() {
        let base = Patch::preset(Preset::CliffordTorus { a: 1.0 }).unwrap();
        let p = base.perturb_normal(5e-2, 3).unwrap();
        for u in p.sample_points(5, 17) {
            let gp = gp(&p, u, 4);
            let c = gp.curvature().unwrap();
            let rc = gp.riemann_intrinsic().unwrap();
            let scale = s4_value_max(&c.rm).max(1e-12);
            for i in 0..4 {
                for j in 0..4 {
                    for k in 0..4 {
                        for l in 0..4 {
                            let d = (c.rm[i][j][k][l].value() - rc[i][j][k][l].value()).abs();
                            assert!(d / scale < 1e-8, "component ({i}{j}{k}{l})");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn weyl_two_routes_and_trace_free() {
        let p = Patch::preset(Preset::ProductSpheres { a: 1.0, b: 1.4 }).unwrap();
        let gp = gp(&p, [1.2, 0.4, 1.9, 2.7], 3);
        let c = gp.curvature().unwrap();
        let we = gp.weyl_extrinsic().unwrap();
        let scale = s4_value_max(&c.weyl).max(1e-12);
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    for l in 0..4 {
                        let d = (c.weyl[i][j][k][l].value() - we[i][j][k][l].value()).abs();
                        assert!(d / scale < 1e-9);
                    }
                }
            }
        }
        // every single trace vanishes
        for i in 0..4 {
            for k in 0..4 {
                let mut tr = 0.0;
                for a in 0..4 {
                    for b in 0..4 {
                        tr += gp.ginv[a][b].value() * c.weyl[a][i][b][k].value();
                    }
                }
                assert!(tr.abs() / scale < 1e-10);
            }
        }
    }

    #[test]
    fn codazzi_residual_vanishes_with_factor_four() {
        let base = Patch::preset(Preset::CliffordTorus { a: 1.0 }).unwrap();
        let p = base.perturb_normal(3e-2, 8).unwrap();
        let u = [0.9, 2.2, 4.0, 5.1];
        let gp = gp(&p, u, 4);
        let res = gp.codazzi_residual().unwrap();
        let scale = (0..4)
            .flat_map(|i| (0..4).map(move |j| (i, j)))
            .map(|(i, j)| amb_value_norm(&gp.h[i][j]))
            .fold(0.0f64, f64::max);
        for r in &res {
            assert!(amb_value_norm(r) / scale < 1e-9);
        }
        let bad = gp.codazzi_residual_with_factor(2.0).unwrap();
        assert!(bad.iter().map(amb_value_norm).fold(0.0, f64::max) / scale > 1e-3);
    }

    #[test]
    fn exterior_calculus_basics() {
        let base = Patch::preset(Preset::CliffordTorus { a: 1.0 }).unwrap();
        let p = base.perturb_normal(4e-2, 21).unwrap();
        let gp = gp(&p, [1.0, 2.0, 3.0, 4.0], 5);
        // a random analytic 1-form from chart functions
        let f: S1 = std::array::from_fn(|a| {
            let x = Jet::variable(gp.u[a], a, gp.ord());
            let y = Jet::variable(gp.u[(a + 1) % 4], (a + 1) % 4, gp.ord());
            x.sin().mul(&y.cos()).add(&x.scale(0.3))
        });
        let dd = d2(&d1(&f));
        let worst = dd
            .iter()
            .flatten()
            .flatten()
            .map(|j| j.value().abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-12, "d∘d = 0");
        // ⋆⋆ = (−1)^{p(4−p)}
        let form = FormS::P1(Box::new(f.clone()));
        let ss = gp.star(&gp.star(&form));
        if let FormS::P1(b) = ss {
            for (x, y) in b.iter().zip(f.iter()) {
                assert!((x.value() - -y.value()).abs() < 1e-11, "p=1: ⋆⋆ = −1");
            }
        } else {
            panic!("wrong degree");
        }
        let g1 = d1(&f);
        let anti: S2 = std::array::from_fn(|i| std::array::from_fn(|j| g1[i][j].clone()));
        let ss2 = gp.star(&gp.star(&FormS::P2(Box::new(anti.clone()))));
        if let FormS::P2(b) = ss2 {
            for i in 0..4 {
                for j in 0..4 {
                    assert!(
                        (b[i][j].value() - anti[i][j].value()).abs() < 1e-11,
                        "p=2: ⋆⋆ = +1"
                    );
                }
            }
        } else {
            panic!("wrong degree");
        }
        // d⋆ of a constant-coefficient 1-form on the flat plane is zero
        let flat = Patch::preset(Preset::Flat).unwrap();
        let gpf = GeometryPoint::new(&flat, [0.1, 0.2, 0.3, 0.4], 3).unwrap();
        let cst: S1 = std::array::from_fn(|a| Jet::constant(a as f64 + 1.0, 3));
        assert!(gpf.dstar1(&cst).value().abs() < 1e-14);
    }

    #[test]
    fn minimal_product_has_zero_mean_curvature() {
        let p = Patch::preset(Preset::MinimalProduct { c1: 0.7, c2: 1.1 }).unwrap();
        for u in p.sample_points(8, 4) {
            let gp = gp(&p, u, 3);
            assert!(amb_value_norm(&gp.hm) < 1e-10);
            // but the second fundamental form itself is nonzero
            let hmax = (0..4)
                .flat_map(|i| (0..4).map(move |j| (i, j)))
                .map(|(i, j)| amb_value_norm(&gp.h[i][j]))
                .fold(0.0f64, f64::max);
            assert!(hmax > 1e-2);
        }
    }

    #[test]
    fn moebius_image_of_sphere_has_constant_mean_curvature() {
        let p = Patch::preset(Preset::Sphere4 { r: 1.0 }).unwrap();
        let mut c = vec![0.0; 5];
        c[0] = 3.0;
        let q = p.apply_moebius(&crate::chart::MoebiusMap::inversion(c)).unwrap();
        let pts = q.sample_points(12, 99);
        let vals: Vec<f64> = pts
            .iter()
            .map(|&u| {
                let gp = GeometryPoint::new(&q, u, 2).unwrap();
                amb_value_norm(&gp.hm)
            })
            .collect();
        let (lo, hi) = vals
            .iter()
            .fold((f64::MAX, f64::MIN), |(l, h), &v| (l.min(v), h.max(v)));
        assert!((hi - lo) / hi < 1e-9, "image of a round sphere is round");
    }
}
