//! Structural algebra of multivector-valued parameter forms: the exact
//! contraction identities behind the two-form system, the normal/tangent
//! decomposition identities, and the Leibniz-complete commutation rules.
//!
//! Everything here is pointwise. The first group (random-ℓ contractions,
//! normal-wedge identities, the projection identities) is pure algebra and
//! holds at roundoff on float values; the commutation rules need covariant
//! derivatives and run on jet values.

use crate::geometry::{GeoValues, GeomError, GeometryPoint, S2};
use crate::jet::{dot_jets, Jet};
use crate::multivector::{pair_index, Multivector, Mv, MvJ};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type F2<V> = [[V; 4]; 4];

/// Tangents, metric inverse and η_{ab} = ∇_aΦ∧∇_bΦ as plain values.
pub struct PointFrame {
    pub m: usize,
    pub ginv: [[f64; 4]; 4],
    pub e: [Mv; 4],
    pub eta: F2<Mv>,
    /// η with both parameter indices raised.
    pub eta_up: F2<Mv>,
    gv: GeoValues,
}

impl PointFrame {
    pub fn new(gp: &GeometryPoint) -> Result<PointFrame, GeomError> {
        let gv = gp.values()?;
        let m = gv.m;
        let e: [Mv; 4] = std::array::from_fn(|a| Multivector::vector(gv.e[a].clone()));
        let eta: F2<Mv> =
            std::array::from_fn(|a| std::array::from_fn(|b| e[a].wedge(&e[b]).unwrap()));
        let eta_up: F2<Mv> = std::array::from_fn(|a| {
            std::array::from_fn(|b| {
                let mut acc = Multivector::zero_with(m, 2, &0.0);
                for c in 0..4 {
                    for d in 0..4 {
                        acc.add_assign(&eta[c][d].scale(gv.ginv[a][c] * gv.ginv[b][d]));
                    }
                }
                acc
            })
        });
        Ok(PointFrame {
            m,
            ginv: gv.ginv,
            e,
            eta,
            eta_up,
            gv,
        })
    }

    pub fn project_normal_mv(&self, v: &Mv) -> Mv {
        assert_eq!(v.grade, 1);
        Multivector::vector(self.gv.project_normal(&v.c))
    }

    /// Random grade-q multivector with entries in [−1, 1].
    pub fn random_mv(&self, grade: u8, rng: &mut ChaCha8Rng) -> Mv {
        let mut v = Multivector::zero_with(self.m, grade, &0.0);
        for c in v.c.iter_mut() {
            *c = rng.gen_range(-1.0..1.0);
        }
        v
    }

    /// Random antisymmetric 2-form with grade-q multivector values.
    pub fn random_form2(&self, grade: u8, rng: &mut ChaCha8Rng) -> F2<Mv> {
        let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        let mut out: F2<Mv> = std::array::from_fn(|_| {
            std::array::from_fn(|_| Multivector::zero_with(self.m, grade, &0.0))
        });
        for &(a, b) in &pairs {
            let v = self.random_mv(grade, rng);
            out[a][b] = v.clone();
            out[b][a] = v.neg();
        }
        out
    }
}

// ─── the four contractions of a 1-vector-valued 2-form on dΦ ───

pub struct Contractions {
    /// A^b = ℓ^{ab}·∇_aΦ (scalar 1-form, index up)
    pub a: [f64; 4],
    /// B^{abc} = 2(ℓ^{ab}·∇^cΦ + cyc) (scalar 3-form, indices up)
    pub b: [[[f64; 4]; 4]; 4],
    /// C^b = ℓ^{ab}∧∇_aΦ (2-vector 1-form, index up)
    pub c: [Mv; 4],
    /// D^{abc} = 2(ℓ^{ab}∧∇^cΦ + cyc) (2-vector 3-form, indices up)
    pub d: [[[Mv; 4]; 4]; 4],
}

/// Build A, B, C, D from ℓ with every parameter index raised.
pub fn contractions(fr: &PointFrame, ell: &F2<Mv>) -> Contractions {
    let ell_up: F2<Mv> = std::array::from_fn(|a| {
        std::array::from_fn(|b| {
            let mut acc = Multivector::zero_with(fr.m, 1, &0.0);
            for c in 0..4 {
                for d in 0..4 {
                    acc.add_assign(&ell[c][d].scale(fr.ginv[a][c] * fr.ginv[b][d]));
                }
            }
            acc
        })
    });
    let e_up: [Mv; 4] = std::array::from_fn(|a| {
        let mut acc = Multivector::zero_with(fr.m, 1, &0.0);
        for c in 0..4 {
            acc.add_assign(&fr.e[c].scale(fr.ginv[a][c]));
        }
        acc
    });
    let a: [f64; 4] = std::array::from_fn(|b| {
        let mut s = 0.0;
        for i in 0..4 {
            s += ell_up[i][b].dot(&fr.e[i]).unwrap();
        }
        s
    });
    let c: [Mv; 4] = std::array::from_fn(|b| {
        let mut acc = Multivector::zero_with(fr.m, 2, &0.0);
        for i in 0..4 {
            acc.add_assign(&ell_up[i][b].wedge(&fr.e[i]).unwrap());
        }
        acc
    });
    let b: [[[f64; 4]; 4]; 4] = std::array::from_fn(|x| {
        std::array::from_fn(|y| {
            std::array::from_fn(|z| {
                2.0 * (ell_up[x][y].dot(&e_up[z]).unwrap()
                    + ell_up[y][z].dot(&e_up[x]).unwrap()
                    + ell_up[z][x].dot(&e_up[y]).unwrap())
            })
        })
    });
    let d: [[[Mv; 4]; 4]; 4] = std::array::from_fn(|x| {
        std::array::from_fn(|y| {
            std::array::from_fn(|z| {
                let mut acc = Multivector::zero_with(fr.m, 2, &0.0);
                acc.add_assign(&ell_up[x][y].wedge(&e_up[z]).unwrap().scale(2.0));
                acc.add_assign(&ell_up[y][z].wedge(&e_up[x]).unwrap().scale(2.0));
                acc.add_assign(&ell_up[z][x].wedge(&e_up[y]).unwrap().scale(2.0));
                acc
            })
        })
    });
    Contractions { a, b, c, d }
}

/// Residuals of the two exact contraction identities
///   −3C = η•⌐C + D•⌐η + η⌐A − B⌐η   and   3A = η·⌐C − D·⌐η,
/// plus the natural scale |ℓ||dΦ|².
pub fn propito_check(fr: &PointFrame, ell: &F2<Mv>) -> (f64, f64, f64) {
    let k = contractions(fr, ell);
    let g = |b: usize, x: usize| fr.e[b].dot(&fr.e[x]).unwrap();
    let mut worst1 = 0.0f64;
    let mut worst2 = 0.0f64;
    for cc in 0..4 {
        let c_low: [Mv; 4] = std::array::from_fn(|b| {
            let mut acc = Multivector::zero_with(fr.m, 2, &0.0);
            for x in 0..4 {
                acc.add_assign(&k.c[x].scale(g(b, x)));
            }
            acc
        });
        // η •⌐ C: Σ_b η^{bc} • C_b
        let mut t1 = Multivector::zero_with(fr.m, 2, &0.0);
        for b in 0..4 {
            t1.add_assign(&fr.eta_up[b][cc].bullet(&c_low[b]).unwrap());
        }
        // D •⌐ η: ½ D^{abc} • η_{ab}
        let mut t2 = Multivector::zero_with(fr.m, 2, &0.0);
        for x in 0..4 {
            for y in 0..4 {
                t2.add_assign(&k.d[x][y][cc].bullet(&fr.eta[x][y]).unwrap().scale(0.5));
            }
        }
        // η ⌐ A: Σ_b η^{bc} A_b
        let mut t3 = Multivector::zero_with(fr.m, 2, &0.0);
        for b in 0..4 {
            let mut a_low = 0.0;
            for x in 0..4 {
                a_low += g(b, x) * k.a[x];
            }
            t3.add_assign(&fr.eta_up[b][cc].scale(a_low));
        }
        // B ⌐ η: ½ B^{abc} η_{ab}
        let mut t4 = Multivector::zero_with(fr.m, 2, &0.0);
        for x in 0..4 {
            for y in 0..4 {
                t4.add_assign(&fr.eta[x][y].scale(0.5 * k.b[x][y][cc]));
            }
        }
        let mut lhs = k.c[cc].scale(-3.0);
        lhs.add_assign(&t1.neg());
        lhs.add_assign(&t2.neg());
        lhs.add_assign(&t3.neg());
        lhs.add_assign(&t4);
        worst1 = worst1.max(lhs.norm_inf());

        // second identity: 3A^c = η·⌐C − D·⌐η
        let mut s1 = 0.0;
        for b in 0..4 {
            s1 += fr.eta_up[b][cc].dot(&c_low[b]).unwrap();
        }
        let mut s2 = 0.0;
        for x in 0..4 {
            for y in 0..4 {
                s2 += 0.5 * k.d[x][y][cc].dot(&fr.eta[x][y]).unwrap();
            }
        }
        worst2 = worst2.max((3.0 * k.a[cc] - (s1 - s2)).abs());
    }
    let lscale = ell
        .iter()
        .flatten()
        .map(|v| v.norm_inf())
        .fold(0.0f64, f64::max);
    let escale = fr.e.iter().map(|v| v.norm_inf()).fold(0.0f64, f64::max);
    (worst1, worst2, (lscale * escale * escale).max(1e-30))
}

/// Residual of η^{ai}•(v∧∇_iΦ) + 3 v∧∇^aΦ = 0 for a normal 1-vector v.
pub fn bullet_normal_identity(fr: &PointFrame, v: &Mv) -> f64 {
    let vn = fr.project_normal_mv(v);
    let mut worst = 0.0f64;
    for a in 0..4 {
        let mut acc = Multivector::zero_with(fr.m, 2, &0.0);
        for i in 0..4 {
            let arg = vn.wedge(&fr.e[i]).unwrap();
            acc.add_assign(&fr.eta_up[a][i].bullet(&arg).unwrap());
        }
        for c in 0..4 {
            acc.add_assign(&vn.wedge(&fr.e[c]).unwrap().scale(3.0 * fr.ginv[a][c]));
        }
        worst = worst.max(acc.norm_inf());
    }
    worst
}

/// The projection identities of the normal/tangent split of a 2-vector-valued
/// 2-form R and a scalar 2-form S:
///   (a) R_n ⌐⌐ dΦ = ⟨η•, R_n⟩ ⌐ dΦ for normal-type R_n,
///   (b) π_n(R_t ⌐⌐ dΦ) = 0 for tangent-type R_t,
///   (c) ⟨η, S⟩ ⌐ dΦ + S ⌐ dΦ = 0 (the leading-slot-consistent sign).
pub struct ProjectionChecks {
    pub normal_contraction: f64,
    pub tangent_projection: f64,
    pub scalar_form: f64,
    pub scale: f64,
}

pub fn prop_last_check(fr: &PointFrame, seed: u64) -> ProjectionChecks {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    // R_n: [f_{ab}]_j ∧ ∇^jΦ + (normal ∧ normal) pieces
    let mut rn: F2<Mv> = std::array::from_fn(|_| {
        std::array::from_fn(|_| Multivector::zero_with(fr.m, 2, &0.0))
    });
    for &(a, b) in &pairs {
        let mut acc = Multivector::zero_with(fr.m, 2, &0.0);
        for j in 0..4 {
            let f = fr.project_normal_mv(&fr.random_mv(1, &mut rng));
            let mut ejup = Multivector::zero_with(fr.m, 1, &0.0);
            for c in 0..4 {
                ejup.add_assign(&fr.e[c].scale(fr.ginv[j][c]));
            }
            acc.add_assign(&f.wedge(&ejup).unwrap());
        }
        let n1 = fr.project_normal_mv(&fr.random_mv(1, &mut rng));
        let n2 = fr.project_normal_mv(&fr.random_mv(1, &mut rng));
        acc.add_assign(&n1.wedge(&n2).unwrap());
        rn[a][b] = acc.clone();
        rn[b][a] = acc.neg();
    }
    // R_t: spanned by η
    let mut rt: F2<Mv> = std::array::from_fn(|_| {
        std::array::from_fn(|_| Multivector::zero_with(fr.m, 2, &0.0))
    });
    for &(a, b) in &pairs {
        let mut acc = Multivector::zero_with(fr.m, 2, &0.0);
        for x in 0..4 {
            for y in x + 1..4 {
                acc.add_assign(&fr.eta[x][y].scale(rng.gen_range(-1.0..1.0)));
            }
        }
        rt[a][b] = acc.clone();
        rt[b][a] = acc.neg();
    }
    // S: random scalar 2-form
    let mut s = [[0.0f64; 4]; 4];
    for &(a, b) in &pairs {
        let v = rng.gen_range(-1.0..1.0);
        s[a][b] = v;
        s[b][a] = -v;
    }

    // (R ⌐⌐ dΦ)^b = R^{ab} ⌐ ∇_aΦ
    let res_res = |r: &F2<Mv>| -> [Mv; 4] {
        std::array::from_fn(|b| {
            let mut acc = Multivector::zero_with(fr.m, 1, &0.0);
            for a in 0..4 {
                let mut rup = Multivector::zero_with(fr.m, 2, &0.0);
                for c in 0..4 {
                    for d in 0..4 {
                        rup.add_assign(&r[c][d].scale(fr.ginv[a][c] * fr.ginv[b][d]));
                    }
                }
                acc.add_assign(&rup.interior(&fr.e[a]).unwrap());
            }
            acc
        })
    };
    // ⟨η•, R⟩ = ½ η^{ab} • R_{ab}
    let eta_bullet = |r: &F2<Mv>| -> Mv {
        let mut acc = Multivector::zero_with(fr.m, 2, &0.0);
        for a in 0..4 {
            for b in 0..4 {
                acc.add_assign(&fr.eta_up[a][b].bullet(&r[a][b]).unwrap().scale(0.5));
            }
        }
        acc
    };
    // (q ⌐ dΦ)^b = q ⌐ ∇^bΦ for a 2-vector q
    let q_res = |q: &Mv| -> [Mv; 4] {
        std::array::from_fn(|b| {
            let mut acc = Multivector::zero_with(fr.m, 1, &0.0);
            for i in 0..4 {
                acc.add_assign(&q.interior(&fr.e[i]).unwrap().scale(fr.ginv[i][b]));
            }
            acc
        })
    };

    // (a)
    let lhs = res_res(&rn);
    let q = eta_bullet(&rn);
    let rhs = q_res(&q);
    let mut worst_a = 0.0f64;
    let mut scale = 1e-30f64;
    for b in 0..4 {
        worst_a = worst_a.max(lhs[b].sub(&rhs[b]).norm_inf());
        scale = scale.max(lhs[b].norm_inf());
    }
    // (b)
    let lt = res_res(&rt);
    let mut worst_b = 0.0f64;
    for b in 0..4 {
        let pn = fr.project_normal_mv(&lt[b]);
        worst_b = worst_b.max(pn.norm_inf());
        scale = scale.max(lt[b].norm_inf());
    }
    // (c): (⟨η,S⟩ ⌐ dΦ)^k = S_i^{ k}∇^iΦ while (S ⌐ dΦ)^k = S^{ak}∇_aΦ:
    // equal and opposite under the leading-slot conventions.
    let mut qs = Multivector::zero_with(fr.m, 2, &0.0);
    for a in 0..4 {
        for b in 0..4 {
            qs.add_assign(&fr.eta_up[a][b].scale(0.5 * s[a][b]));
        }
    }
    let lhs_c = q_res(&qs);
    let mut worst_c = 0.0f64;
    for k in 0..4 {
        let mut rhs_c = Multivector::zero_with(fr.m, 1, &0.0);
        for a in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    rhs_c.add_assign(&fr.e[a].scale(fr.ginv[a][c] * fr.ginv[k][d] * s[c][d]));
                }
            }
        }
        worst_c = worst_c.max(lhs_c[k].add(&rhs_c).norm_inf());
        scale = scale.max(rhs_c.norm_inf());
    }
    ProjectionChecks {
        normal_contraction: worst_a,
        tangent_projection: worst_b,
        scalar_form: worst_c,
        scale,
    }
}

// ─── Leibniz-complete commutation rules (jet-valued fields) ───

/// Random analytic scalar 2-form field, evaluated into jets at a point.
pub fn random_scalar_form2(u: [f64; 4], ord: usize, seed: u64) -> F2<Jet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<Jet> = (0..4).map(|a| Jet::variable(u[a], a, ord)).collect();
    let mut out: F2<Jet> = std::array::from_fn(|_| std::array::from_fn(|_| Jet::zero(ord)));
    let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    for &(a, b) in &pairs {
        let mut acc = Jet::constant(rng.gen_range(-0.5..0.5), ord);
        for _ in 0..3 {
            let mut arg = Jet::constant(rng.gen_range(0.0..6.28), ord);
            for xc in &x {
                arg.add_assign(&xc.scale(rng.gen_range(-1.0..1.0)));
            }
            acc.add_assign(&arg.sin().scale(rng.gen_range(-1.0..1.0)));
        }
        out[a][b] = acc.clone();
        out[b][a] = acc.neg();
    }
    out
}

/// Residuals of the exact commutation chain for real-valued 2-forms:
///   (i)  A_{ai}(dB)^{aib} = 2A_{ai}∇^aB^{ib} + A_{ai}∇^bB^{ai}
///   (ii) A⌐d⋆B − dB⌐A = d⋆(A⊙B) − d⟨A,B⟩ + rem(∇A, B)  (Leibniz-complete)
pub fn strucrs_scalar_check(gp: &GeometryPoint, a: &F2<Jet>, b: &F2<Jet>) -> (f64, f64, f64) {
    let da = gp.covd_s2(a);
    let db = gp.covd_s2(b);
    let d3b = crate::geometry::d2(b);
    let gi = &gp.ginv;
    let ord = da[0][0][0].ord();

    // (i)
    let mut worst1 = 0.0f64;
    let mut scale = 1e-30f64;
    for bb in 0..4 {
        let mut lhs = Jet::zero(ord);
        let mut r1 = Jet::zero(ord);
        let mut r2 = Jet::zero(ord);
        for x in 0..4 {
            for i in 0..4 {
                let mut up = Jet::zero(ord);
                let mut t = Jet::zero(ord);
                let mut t2 = Jet::zero(ord);
                for p in 0..4 {
                    for q in 0..4 {
                        for r in 0..4 {
                            let w = gi[x][p].mul(&gi[i][q]).mul(&gi[bb][r]);
                            up.add_assign(&d3b[p][q][r].mul(&w));
                            t.add_assign(&db[p][q][r].mul(&w));
                            let w2 = gi[bb][p].mul(&gi[x][q]).mul(&gi[i][r]);
                            t2.add_assign(&db[p][q][r].mul(&w2));
                        }
                    }
                }
                lhs.add_assign(&a[x][i].mul(&up));
                r1.add_assign(&a[x][i].mul(&t).scale(2.0));
                r2.add_assign(&a[x][i].mul(&t2));
            }
        }
        let res = lhs.value() - (r1.value() + r2.value());
        worst1 = worst1.max(res.abs());
        scale = scale.max(lhs.value().abs());
    }

    // (ii) all terms as lower 1-forms
    let dstar_b = gp.dstar2(b);
    let dstar_a = gp.dstar2(a);
    // (A⊙B)_{xy} = Σ_{j,c} g^{jc}(A_{yc}B_{jx} − A_{xc}B_{jy})
    let odot: S2 = std::array::from_fn(|x| {
        std::array::from_fn(|y| {
            let mut sjet = Jet::zero(ord + 1);
            for j in 0..4 {
                for c in 0..4 {
                    sjet.add_assign(
                        &gi[j][c].mul(&a[y][c].mul(&b[j][x]).sub(&a[x][c].mul(&b[j][y]))),
                    );
                }
            }
            sjet
        })
    });
    let dstar_odot = gp.dstar2(&odot);
    // ⟨A,B⟩ = ½ A^{ai}B_{ai}
    let mut inner = Jet::zero(ord + 1);
    for x in 0..4 {
        for i in 0..4 {
            let mut aup = Jet::zero(ord + 1);
            for p in 0..4 {
                for q in 0..4 {
                    aup.add_assign(&a[p][q].mul(&gi[x][p].mul(&gi[i][q])));
                }
            }
            inner.add_assign(&aup.mul(&b[x][i]).scale(0.5));
        }
    }
    let mut worst2 = 0.0f64;
    for bb in 0..4 {
        let mut t1 = Jet::zero(ord);
        for i in 0..4 {
            for c in 0..4 {
                t1.add_assign(&gi[i][c].mul(&a[c][bb].mul(&dstar_b[i])));
            }
        }
        let mut t2 = Jet::zero(ord);
        for x in 0..4 {
            for i in 0..4 {
                let mut up = Jet::zero(ord);
                for p in 0..4 {
                    for q in 0..4 {
                        up.add_assign(&d3b[p][q][bb].mul(&gi[x][p].mul(&gi[i][q])));
                    }
                }
                t2.add_assign(&a[x][i].mul(&up).scale(0.5));
            }
        }
        let t3 = dstar_odot[bb].clone();
        let t4 = inner.deriv(bb);
        // rem_b = (d⋆A)^i B_{ib} − (∇_aA_b^{ i})B_i^{ a} + ½(∇_bA^{ai})B_{ai}
        let mut rem = Jet::zero(ord);
        for i in 0..4 {
            for c in 0..4 {
                rem.add_assign(&gi[i][c].mul(&dstar_a[c].mul(&b[i][bb])));
            }
        }
        for aa in 0..4 {
            for i in 0..4 {
                let mut dab = Jet::zero(ord);
                for c in 0..4 {
                    dab.add_assign(&gi[i][c].mul(&da[aa][bb][c]));
                }
                let mut bup = Jet::zero(ord);
                for d in 0..4 {
                    bup.add_assign(&gi[aa][d].mul(&b[i][d]));
                }
                rem = rem.sub(&dab.mul(&bup));
            }
        }
        for x in 0..4 {
            for i in 0..4 {
                let mut aup = Jet::zero(ord);
                for p in 0..4 {
                    for q in 0..4 {
                        aup.add_assign(&da[bb][p][q].mul(&gi[x][p].mul(&gi[i][q])));
                    }
                }
                rem.add_assign(&aup.mul(&b[x][i]).scale(0.5));
            }
        }
        let res = t1.value() - t2.value() - (t3.value() - t4.value() + rem.value());
        worst2 = worst2.max(res.abs());
        scale = scale
            .max(t1.value().abs())
            .max(t2.value().abs())
            .max(t3.value().abs());
    }
    (worst1, worst2, scale)
}

/// Residuals of the ·- and •-valued commutation rules for 2-vector-valued
/// 2-forms:  A∘⌐d⋆B ∓ dB∘⌐A = d⋆(A∘⊙B) − d⟨A∘,B⟩ + rem∘  (− for ·, + for •).
/// Returns (dot-variant residual, bullet-variant residual, scale).
pub fn strucrs_bivector_check(gp: &GeometryPoint, a: &F2<MvJ>, b: &F2<MvJ>) -> (f64, f64, f64) {
    let gi = &gp.ginv;
    let nb = a[0][1].c.len();
    let ord = a[0][1].c[0].ord().min(gp.ginv[0][0].ord()) - 1;
    let m = a[0][1].m;

    let covd = |t: &F2<MvJ>| -> [F2<MvJ>; 4] {
        std::array::from_fn(|w| {
            std::array::from_fn(|i| {
                std::array::from_fn(|j| {
                    let mut out = Multivector::zero_with(m, 2, &Jet::zero(ord));
                    for (k, x) in out.c.iter_mut().enumerate() {
                        *x = t[i][j].c[k].deriv(w);
                        for cc in 0..4 {
                            *x = x.sub(&gp.gamma[cc][w][i].mul(&t[cc][j].c[k]));
                            *x = x.sub(&gp.gamma[cc][w][j].mul(&t[i][cc].c[k]));
                        }
                    }
                    out
                })
            })
        })
    };
    let da = covd(a);
    let dbb = covd(b);
    let dstar = |dt: &[F2<MvJ>; 4]| -> [MvJ; 4] {
        std::array::from_fn(|i| {
            let mut out = Multivector::zero_with(m, 2, &Jet::zero(ord));
            for j in 0..4 {
                for c in 0..4 {
                    for (k, x) in out.c.iter_mut().enumerate() {
                        x.add_assign(&gi[j][c].mul(&dt[c][j][i].c[k]));
                    }
                }
            }
            out
        })
    };
    let dstar_a = dstar(&da);
    let dstar_b = dstar(&dbb);
    let d3b: [[[MvJ; 4]; 4]; 4] = std::array::from_fn(|x| {
        std::array::from_fn(|y| {
            std::array::from_fn(|z| {
                let mut out = Multivector::zero_with(m, 2, &Jet::zero(ord));
                for (k, o) in out.c.iter_mut().enumerate() {
                    *o = b[y][z].c[k]
                        .deriv(x)
                        .add(&b[z][x].c[k].deriv(y))
                        .add(&b[x][y].c[k].deriv(z));
                }
                out
            })
        })
    });

    let run = |use_bullet: bool| -> (f64, f64) {
        let pairf = |x: &MvJ, y: &MvJ| -> MvJ {
            if use_bullet {
                x.bullet(y).unwrap()
            } else {
                // the scalar pairing, carried in channel 0 of a bivector
                // container so both variants share the bookkeeping below
                let mut o = Multivector::zero_with(m, 2, &Jet::zero(ord));
                o.c[0] = x.dot(y).unwrap();
                o
            }
        };
        let odot: F2<MvJ> = std::array::from_fn(|x| {
            std::array::from_fn(|y| {
                let mut acc = Multivector::zero_with(m, 2, &Jet::zero(ord + 1));
                for j in 0..4 {
                    for c in 0..4 {
                        let p1 = pairf(&a[y][c], &b[j][x]);
                        let p2 = pairf(&a[x][c], &b[j][y]);
                        for (k, o) in acc.c.iter_mut().enumerate() {
                            o.add_assign(&gi[j][c].mul(&p1.c[k].sub(&p2.c[k])));
                        }
                    }
                }
                acc
            })
        });
        let dodot = covd(&odot);
        let dstar_odot = dstar(&dodot);
        let mut inner = Multivector::zero_with(m, 2, &Jet::zero(ord + 1));
        for x in 0..4 {
            for i in 0..4 {
                for p in 0..4 {
                    for q in 0..4 {
                        let w = gi[x][p].mul(&gi[i][q]).scale(0.5);
                        let pr = pairf(&a[p][q], &b[x][i]);
                        for (k, o) in inner.c.iter_mut().enumerate() {
                            o.add_assign(&w.mul(&pr.c[k]));
                        }
                    }
                }
            }
        }
        let mut worst = 0.0f64;
        let mut scl = 1e-30f64;
        for bb in 0..4 {
            let mut resid = vec![0.0f64; nb];
            for i in 0..4 {
                for c in 0..4 {
                    let pr = pairf(&a[c][bb], &dstar_b[i]);
                    for (k, r) in resid.iter_mut().enumerate() {
                        *r += gi[i][c].value() * pr.c[k].value();
                    }
                }
            }
            let sgn = if use_bullet { 1.0 } else { -1.0 };
            for x in 0..4 {
                for i in 0..4 {
                    for p in 0..4 {
                        for q in 0..4 {
                            let w = 0.5 * gi[x][p].value() * gi[i][q].value();
                            let pr = pairf(&d3b[p][q][bb], &a[x][i]);
                            for (k, r) in resid.iter_mut().enumerate() {
                                *r += sgn * w * pr.c[k].value();
                            }
                        }
                    }
                }
            }
            for (k, r) in resid.iter_mut().enumerate() {
                *r -= dstar_odot[bb].c[k].value();
            }
            for (k, r) in resid.iter_mut().enumerate() {
                *r += inner.c[k].deriv(bb).value();
            }
            for i in 0..4 {
                for c in 0..4 {
                    let pr = pairf(&dstar_a[c], &b[i][bb]);
                    for (k, r) in resid.iter_mut().enumerate() {
                        *r -= gi[i][c].value() * pr.c[k].value();
                    }
                }
            }
            for aa in 0..4 {
                for i in 0..4 {
                    for c in 0..4 {
                        for dd in 0..4 {
                            let w = gi[i][c].value() * gi[aa][dd].value();
                            let pr = pairf(&da[aa][bb][c], &b[i][dd]);
                            for (k, r) in resid.iter_mut().enumerate() {
                                *r += w * pr.c[k].value();
                            }
                        }
                    }
                }
            }
            for x in 0..4 {
                for i in 0..4 {
                    for p in 0..4 {
                        for q in 0..4 {
                            let w = 0.5 * gi[x][p].value() * gi[i][q].value();
                            let pr = pairf(&da[bb][p][q], &b[x][i]);
                            for (k, r) in resid.iter_mut().enumerate() {
                                *r -= w * pr.c[k].value();
                            }
                        }
                    }
                }
            }
            for r in &resid {
                worst = worst.max(r.abs());
            }
            scl = scl.max(dstar_odot[bb].norm_inf());
        }
        (worst, scl)
    };
    let (wd, sd) = run(false);
    let (wb, sb) = run(true);
    (wd, wb, sd.max(sb))
}

/// Random analytic 2-vector-valued 2-form field as jets.
pub fn random_bivector_form2(gp: &GeometryPoint, u: [f64; 4], ord: usize, seed: u64) -> F2<MvJ> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = gp.m;
    let x: Vec<Jet> = (0..4).map(|a| Jet::variable(u[a], a, ord)).collect();
    let nb = crate::multivector::blade_count(m, 2);
    let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    let mut out: F2<MvJ> = std::array::from_fn(|_| {
        std::array::from_fn(|_| Multivector::zero_with(m, 2, &Jet::zero(ord)))
    });
    for &(a, b) in &pairs {
        let mut acc = Multivector::zero_with(m, 2, &Jet::zero(ord));
        for _ in 0..3 {
            let ch = rng.gen_range(0..nb);
            let mut arg = Jet::constant(rng.gen_range(0.0..6.28), ord);
            for xc in &x {
                arg.add_assign(&xc.scale(rng.gen_range(-1.0..1.0)));
            }
            acc.c[ch].add_assign(&arg.sin().scale(rng.gen_range(-1.0..1.0)));
        }
        out[a][b] = acc.clone();
        for (k, v) in out[b][a].c.iter_mut().enumerate() {
            *v = acc.c[k].neg();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{Patch, Preset};

    fn frame(seed: u64) -> PointFrame {
        let base = Patch::preset(Preset::CliffordTorus { a: 1.0 }).unwrap();
        let p = base.perturb_normal(4e-2, seed).unwrap();
        let u = p.sample_points(1, seed ^ 0xfeed)[0];
        let gp = GeometryPoint::new(&p, u, 3).unwrap();
        PointFrame::new(&gp).unwrap()
    }

    #[test]
    fn contraction_identities_random_inputs() {
        let fr = frame(2);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..200 {
            let ell = fr.random_form2(1, &mut rng);
            let (r1, r2, scale) = propito_check(&fr, &ell);
            assert!(r1 / scale < 1e-12, "{r1:.3e} / {scale:.3e}");
            assert!(r2 / scale < 1e-12, "{r2:.3e}");
        }
        let zero: F2<Mv> = std::array::from_fn(|_| {
            std::array::from_fn(|_| Multivector::zero_with(fr.m, 1, &0.0))
        });
        let (r1, r2, _) = propito_check(&fr, &zero);
        assert_eq!(r1, 0.0);
        assert_eq!(r2, 0.0);
    }

    #[test]
    fn contraction_identities_on_normal_valued_input() {
        let fr = frame(3);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let raw = fr.random_form2(1, &mut rng);
            let mut ell: F2<Mv> = std::array::from_fn(|_| {
                std::array::from_fn(|_| Multivector::zero_with(fr.m, 1, &0.0))
            });
            for a in 0..4 {
                for b in 0..4 {
                    ell[a][b] = fr.project_normal_mv(&raw[a][b]);
                }
            }
            let (r1, r2, scale) = propito_check(&fr, &ell);
            assert!(r1 / scale < 1e-12);
            assert!(r2 / scale < 1e-12);
        }
    }

    #[test]
    fn bullet_identity_for_normal_vectors() {
        for seed in [5u64, 11] {
            let fr = frame(seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed * 31);
            for _ in 0..50 {
                let v = fr.random_mv(1, &mut rng);
                let r = bullet_normal_identity(&fr, &v);
                let scale = v.norm_inf().max(1e-30)
                    * fr.e
                        .iter()
                        .map(|e| e.norm_inf())
                        .fold(0.0f64, f64::max)
                        .powi(2);
                assert!(r / scale < 1e-12, "{r:.3e}");
            }
        }
        let p = Patch::preset(Preset::Sphere4 { r: 1.0 }).unwrap();
        let gp = GeometryPoint::new(&p, [1.2, 1.0, 1.7, 2.0], 3).unwrap();
        let fr = PointFrame::new(&gp).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let v = fr.random_mv(1, &mut rng);
        assert!(bullet_normal_identity(&fr, &v) < 1e-12);
    }

    #[test]
    fn projection_identities() {
        for seed in [1u64, 2, 3] {
            let fr = frame(seed);
            let c = prop_last_check(&fr, seed * 1000 + 1);
            assert!(
                c.normal_contraction / c.scale < 1e-12,
                "{:.3e}",
                c.normal_contraction
            );
            assert!(
                c.tangent_projection / c.scale < 1e-12,
                "{:.3e}",
                c.tangent_projection
            );
            assert!(c.scalar_form / c.scale < 1e-12, "{:.3e}", c.scalar_form);
        }
    }

    #[test]
    fn commutation_rules_scalar_and_bivector() {
        let base = Patch::preset(Preset::CliffordTorus { a: 1.0 }).unwrap();
        let p = base.perturb_normal(3e-2, 17).unwrap();
        let u = p.sample_points(1, 5)[0];
        let gp = GeometryPoint::new(&p, u, 4).unwrap();
        let a = random_scalar_form2(u, 4, 71);
        let b = random_scalar_form2(u, 4, 72);
        let (r1, r2, scale) = strucrs_scalar_check(&gp, &a, &b);
        assert!(r1 / scale < 1e-11, "first-line identity {r1:.3e}/{scale:.3e}");
        assert!(r2 / scale < 1e-10, "leibniz-complete {r2:.3e}/{scale:.3e}");

        let av = random_bivector_form2(&gp, u, 4, 81);
        let bv = random_bivector_form2(&gp, u, 4, 82);
        let (rd, rb, s2) = strucrs_bivector_check(&gp, &av, &bv);
        assert!(rd / s2 < 1e-10, "dot variant {rd:.3e}/{s2:.3e}");
        assert!(rb / s2 < 1e-10, "bullet variant {rb:.3e}/{s2:.3e}");
    }

    #[test]
    fn constant_forms_on_flat_plane() {
        let p = Patch::preset(Preset::Flat).unwrap();
        let u = [0.1, 0.2, -0.3, 0.4];
        let gp = GeometryPoint::new(&p, u, 4).unwrap();
        let mut a: F2<Jet> = std::array::from_fn(|_| std::array::from_fn(|_| Jet::zero(4)));
        let mut b: F2<Jet> = std::array::from_fn(|_| std::array::from_fn(|_| Jet::zero(4)));
        let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        for (k, &(i, j)) in pairs.iter().enumerate() {
            a[i][j] = Jet::constant(0.3 + k as f64, 4);
            a[j][i] = a[i][j].neg();
            b[i][j] = Jet::constant(-1.1 + (k as f64) * 0.5, 4);
            b[j][i] = b[i][j].neg();
        }
        let (r1, r2, _) = strucrs_scalar_check(&gp, &a, &b);
        assert!(r1 < 1e-13);
        assert!(r2 < 1e-13);
    }

    #[test]
    fn random_bivector_forms_are_antisymmetric() {
        let p = Patch::preset(Preset::CliffordTorus { a: 1.0 }).unwrap();
        let u = [0.3, 1.0, 2.0, 3.0];
        let gp = GeometryPoint::new(&p, u, 3).unwrap();
        let f = random_bivector_form2(&gp, u, 3, 9);
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..f[i][j].c.len() {
                    assert!((f[i][j].c[k].value() + f[j][i].c[k].value()).abs() < 1e-15);
                }
            }
        }
        let _ = pair_index(gp.m, 0, 1);
    }

    #[test]
    fn modified_system_data_vanishes_on_minimal_presets() {
        // With L = 0 on an H ≡ 0 preset both contractions of the recast
        // two-form system vanish identically: the modified F, the correction
        // tensor f, and the C-term are all zero.
        let p = Patch::preset(Preset::MinimalProduct { c1: 0.7, c2: 1.1 }).unwrap();
        let u = p.sample_points(1, 8)[0];
        let gp = GeometryPoint::new(&p, u, 5).unwrap();
        let ops = crate::noether::PointOps::new(&gp).unwrap();
        let triple =
            crate::noether::triple_for_spec(&ops, &crate::noether::EnergySpec::pure_ea())
                .unwrap();
        let fcorr = crate::noether::f_correction_tensor(&ops);
        let mut worst = 0.0f64;
        for i in 0..4 {
            worst = worst.max(crate::geometry::amb_value_norm(&triple.c_up[i]));
            for j in 0..4 {
                worst = worst.max(crate::geometry::amb_value_norm(&triple.f_up[i][j]));
                worst = worst.max(crate::geometry::amb_value_norm(&fcorr[i][j]));
            }
        }
        assert!(worst < 1e-10, "system data must vanish, got {worst:.3e}");
        let v = crate::noether::noether_v(&ops, &triple);
        for vi in &v {
            assert!(crate::geometry::amb_value_norm(vi) < 1e-9);
        }
        let _ = dot_jets(&gp.hm, &gp.hm);
    }
}
