//! Truncated multivariate Taylor arithmetic in four variables.
//!
//! A [`Jet`] stores the Taylor coefficients of a scalar quantity about an
//! expansion point, up to a tracked truncation order. Ring operations and
//! compositions with analytic primitives propagate exact derivatives, so a
//! chart evaluated into jets yields roundoff-level pointwise derivatives of
//! everything computed from it. Sixth derivatives of the immersion are the
//! deepest the engine ever needs (Δ⊥²H and ΔP); one extra order is kept so
//! that normal-projected perturbation fields can still deliver order 6.

use smallvec::SmallVec;
use std::sync::OnceLock;

/// Number of chart variables.
pub const N_VARS: usize = 4;
/// Hard cap on the truncation order.
pub const MAX_ORD: usize = 7;

/// Number of monomials in 4 variables of total degree ≤ `ord`.
pub const fn n_coeffs(ord: usize) -> usize {
    // C(ord+4, 4)
    (ord + 1) * (ord + 2) * (ord + 3) * (ord + 4) / 24
}

const N_MAX: usize = n_coeffs(MAX_ORD); // 330

struct Tables {
    /// Exponent tuple of each monomial, graded (degree-major) order.
    exps: Vec<[u8; N_VARS]>,
    /// Total degree of each monomial.
    deg: Vec<u8>,
    /// exps -> index, keyed by base-(MAX_ORD+1) digits.
    idx: Vec<u32>,
    /// For each monomial i: list of (j, k) with exps[i]+exps[j] = exps[k],
    /// sorted by j ascending.
    mul_pairs: Vec<Vec<(u32, u32)>>,
    /// For each axis a and destination monomial d: (source, factor) with
    /// coeff_dst = factor * coeff_src, factor = exps[src][a].
    deriv: [Vec<(u32, f64)>; N_VARS],
}

fn key(e: &[u8; N_VARS]) -> usize {
    let b = MAX_ORD + 1;
    ((e[0] as usize * b + e[1] as usize) * b + e[2] as usize) * b + e[3] as usize
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let mut exps: Vec<[u8; N_VARS]> = Vec::with_capacity(N_MAX);
        for d in 0..=MAX_ORD as u8 {
            for a in (0..=d).rev() {
                for b in (0..=d - a).rev() {
                    for c in (0..=d - a - b).rev() {
                        exps.push([a, b, c, d - a - b - c]);
                    }
                }
            }
        }
        debug_assert_eq!(exps.len(), N_MAX);
        let deg: Vec<u8> = exps.iter().map(|e| e.iter().sum()).collect();
        let b = MAX_ORD + 1;
        let mut idx = vec![u32::MAX; b * b * b * b];
        for (i, e) in exps.iter().enumerate() {
            idx[key(e)] = i as u32;
        }
        let mut mul_pairs = vec![Vec::new(); N_MAX];
        for i in 0..N_MAX {
            for j in 0..N_MAX {
                if (deg[i] + deg[j]) as usize > MAX_ORD {
                    continue;
                }
                let mut e = exps[i];
                for (t, s) in e.iter_mut().zip(exps[j].iter()) {
                    *t += s;
                }
                mul_pairs[i].push((j as u32, idx[key(&e)]));
            }
            mul_pairs[i].sort_by_key(|&(j, _)| j);
        }
        let deriv = std::array::from_fn(|axis| {
            let mut v = Vec::with_capacity(n_coeffs(MAX_ORD - 1));
            for d in 0..n_coeffs(MAX_ORD - 1) {
                let mut e = exps[d];
                e[axis] += 1;
                let src = idx[key(&e)];
                v.push((src, e[axis] as f64));
            }
            v
        });
        Tables {
            exps,
            deg,
            idx,
            mul_pairs,
            deriv,
        }
    })
}

/// Truncated Taylor expansion of a scalar about a point, order-tracked.
///
/// `c[0]` is the value at the expansion point; coefficients beyond the stored
/// length are unknown (truncated), not zero. The order of any derived jet is
/// the largest order to which its coefficients are exact.
type Coeffs = SmallVec<[f64; 35]>;

#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    ord: u8,
    c: Coeffs,
}

impl Jet {
    pub fn constant(v: f64, ord: usize) -> Jet {
        assert!(ord <= MAX_ORD);
        let mut c = Coeffs::from_elem(0.0, n_coeffs(ord));
        c[0] = v;
        Jet { ord: ord as u8, c }
    }

    pub fn zero(ord: usize) -> Jet {
        Jet::constant(0.0, ord)
    }

    /// The chart variable `axis`, expanded about `v`.
    pub fn variable(v: f64, axis: usize, ord: usize) -> Jet {
        let mut j = Jet::constant(v, ord);
        if ord >= 1 {
            j.c[1 + axis] = 1.0;
        }
        j
    }

    pub fn ord(&self) -> usize {
        self.ord as usize
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Taylor coefficient of the monomial with exponents `e` (0 if beyond order).
    pub fn coeff(&self, e: [u8; N_VARS]) -> f64 {
        let t = tables();
        let i = t.idx[key(&e)] as usize;
        self.c.get(i).copied().unwrap_or(0.0)
    }

    pub fn truncate(&self, ord: usize) -> Jet {
        if ord >= self.ord() {
            return self.clone();
        }
        Jet {
            ord: ord as u8,
            c: Coeffs::from_slice(&self.c[..n_coeffs(ord)]),
        }
    }

    pub fn add(&self, o: &Jet) -> Jet {
        let ord = self.ord.min(o.ord);
        let n = n_coeffs(ord as usize);
        let mut c = Coeffs::with_capacity(n);
        for i in 0..n {
            c.push(self.c[i] + o.c[i]);
        }
        Jet { ord, c }
    }

    pub fn sub(&self, o: &Jet) -> Jet {
        let ord = self.ord.min(o.ord);
        let n = n_coeffs(ord as usize);
        let mut c = Coeffs::with_capacity(n);
        for i in 0..n {
            c.push(self.c[i] - o.c[i]);
        }
        Jet { ord, c }
    }

    pub fn neg(&self) -> Jet {
        Jet {
            ord: self.ord,
            c: self.c.iter().map(|x| -x).collect(),
        }
    }

    pub fn scale(&self, f: f64) -> Jet {
        Jet {
            ord: self.ord,
            c: self.c.iter().map(|x| f * x).collect(),
        }
    }

    pub fn add_assign(&mut self, o: &Jet) {
        if o.ord < self.ord {
            self.ord = o.ord;
            self.c.truncate(n_coeffs(o.ord as usize));
        }
        for (t, s) in self.c.iter_mut().zip(o.c.iter()) {
            *t += *s;
        }
    }

    /// Truncated product; the result is exact to min(self.ord, o.ord).
    pub fn mul(&self, o: &Jet) -> Jet {
        let t = tables();
        let ord = self.ord.min(o.ord) as usize;
        let nr = n_coeffs(ord);
        let mut c = Coeffs::from_elem(0.0, nr);
        let la = self.c.len().min(nr);
        for i in 0..la {
            let ai = self.c[i];
            if ai == 0.0 {
                continue;
            }
            let jmax = n_coeffs(ord - t.deg[i] as usize).min(o.c.len());
            for &(j, k) in &t.mul_pairs[i] {
                if j as usize >= jmax {
                    break;
                }
                c[k as usize] += ai * o.c[j as usize];
            }
        }
        Jet {
            ord: ord as u8,
            c,
        }
    }

    /// Partial derivative with respect to chart variable `axis`; drops one order.
    pub fn deriv(&self, axis: usize) -> Jet {
        assert!(self.ord >= 1, "jet order exhausted");
        let t = tables();
        let ord = self.ord as usize - 1;
        let n = n_coeffs(ord);
        let mut c = Coeffs::with_capacity(n);
        for d in 0..n {
            let (src, f) = t.deriv[axis][d];
            c.push(f * self.c[src as usize]);
        }
        Jet { ord: ord as u8, c }
    }

    /// Composes a univariate analytic function given the Taylor coefficients
    /// of f about self.value(): result = Σ series[k] (self − value)^k.
    fn compose(&self, series: &[f64]) -> Jet {
        let ord = self.ord();
        let mut hat = self.clone();
        hat.c[0] = 0.0;
        let mut acc = Jet::constant(series[0], ord);
        let mut pw = Jet::constant(1.0, ord);
        for s in series.iter().take(ord + 1).skip(1) {
            pw = pw.mul(&hat);
            acc.add_assign(&pw.scale(*s));
        }
        acc
    }

    pub fn recip(&self) -> Jet {
        let x = self.value();
        assert!(x != 0.0, "reciprocal of a jet with zero value");
        let mut series = [0.0; MAX_ORD + 1];
        let mut p = 1.0 / x;
        for s in series.iter_mut() {
            *s = p;
            p *= -1.0 / x;
        }
        self.compose(&series)
    }

    pub fn sqrt(&self) -> Jet {
        let x = self.value();
        assert!(x > 0.0, "sqrt of a jet with non-positive value");
        let r = x.sqrt();
        // d^k/dx^k sqrt(x) / k! = binom(1/2, k) x^{1/2-k}
        let mut series = [0.0; MAX_ORD + 1];
        let mut coef = 1.0;
        for (k, s) in series.iter_mut().enumerate() {
            *s = coef * r / x.powi(k as i32);
            coef *= (0.5 - k as f64) / (k as f64 + 1.0);
        }
        self.compose(&series)
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        let mut series = [0.0; MAX_ORD + 1];
        let mut f = 1.0;
        for (k, s) in series.iter_mut().enumerate() {
            *s = e / f;
            f *= k as f64 + 1.0;
        }
        self.compose(&series)
    }

    pub fn sin(&self) -> Jet {
        let (s0, c0) = self.value().sin_cos();
        let cycle = [s0, c0, -s0, -c0];
        let mut series = [0.0; MAX_ORD + 1];
        let mut f = 1.0;
        for (k, s) in series.iter_mut().enumerate() {
            *s = cycle[k % 4] / f;
            f *= k as f64 + 1.0;
        }
        self.compose(&series)
    }

    pub fn cos(&self) -> Jet {
        let (s0, c0) = self.value().sin_cos();
        let cycle = [c0, -s0, -c0, s0];
        let mut series = [0.0; MAX_ORD + 1];
        let mut f = 1.0;
        for (k, s) in series.iter_mut().enumerate() {
            *s = cycle[k % 4] / f;
            f *= k as f64 + 1.0;
        }
        self.compose(&series)
    }

    pub fn powi(&self, n: i32) -> Jet {
        match n {
            0 => Jet::constant(1.0, self.ord()),
            n if n > 0 => {
                let mut acc = self.clone();
                for _ in 1..n {
                    acc = acc.mul(self);
                }
                acc
            }
            n => self.recip().powi(-n),
        }
    }
}

/// Sum of jet products, truncated once at the end.
pub fn dot_jets(a: &[Jet], b: &[Jet]) -> Jet {
    assert_eq!(a.len(), b.len());
    let ord = a
        .iter()
        .chain(b.iter())
        .map(|j| j.ord())
        .min()
        .unwrap_or(0);
    let mut acc = Jet::zero(ord);
    for (x, y) in a.iter().zip(b.iter()) {
        acc.add_assign(&x.mul(y));
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(u: [f64; 4], ord: usize) -> Jet {
        // f = u0^2 u1 + sin(u2) * exp(u3/3) + 1/(2+u0)
        let x: Vec<Jet> = (0..4).map(|a| Jet::variable(u[a], a, ord)).collect();
        let t1 = x[0].mul(&x[0]).mul(&x[1]);
        let t2 = x[2].sin().mul(&x[3].scale(1.0 / 3.0).exp());
        let t3 = x[0].add(&Jet::constant(2.0, ord)).recip();
        t1.add(&t2).add(&t3)
    }

    fn f_val(u: [f64; 4]) -> f64 {
        u[0] * u[0] * u[1] + u[2].sin() * (u[3] / 3.0).exp() + 1.0 / (2.0 + u[0])
    }

    #[test]
    fn sin_taylor_coefficients() {
        let j = Jet::variable(0.0, 0, 6).sin();
        let expect = [0.0, 1.0, 0.0, -1.0 / 6.0, 0.0, 1.0 / 120.0, 0.0];
        for (k, e) in expect.iter().enumerate() {
            let mut m = [0u8; 4];
            m[0] = k as u8;
            assert!((j.coeff(m) - e).abs() < 1e-15, "k={k}");
        }
    }

    #[test]
    fn first_derivatives_match_finite_differences() {
        let u = [0.3, -0.4, 0.7, 0.2];
        let j = poly(u, 6);
        let hstep = 1e-5;
        for a in 0..4 {
            let mut up = u;
            let mut dn = u;
            up[a] += hstep;
            dn[a] -= hstep;
            let fd = (f_val(up) - f_val(dn)) / (2.0 * hstep);
            assert!((j.deriv(a).value() - fd).abs() < 1e-8, "axis {a}");
        }
    }

    #[test]
    fn mixed_third_derivative_matches_finite_differences() {
        let u = [0.3, -0.4, 0.7, 0.2];
        let j = poly(u, 6);
        // d^3 f / du0^2 du1 via jets
        let jd = j.deriv(0).deriv(0).deriv(1);
        let hstep = 1e-3;
        let mut fd = 0.0;
        for (s0, w0) in [(1.0, 1.0), (0.0, -2.0), (-1.0, 1.0)] {
            for (s1, w1) in [(1.0, 0.5), (-1.0, -0.5)] {
                let mut v = u;
                v[0] += s0 * hstep;
                v[1] += s1 * hstep;
                fd += w0 * w1 * f_val(v);
            }
        }
        fd /= hstep * hstep * hstep;
        assert!((jd.value() - fd).abs() / jd.value().abs().max(1.0) < 1e-5);
    }

    #[test]
    fn product_truncates_to_min_order() {
        let a = Jet::variable(1.0, 0, 5);
        let b = Jet::variable(2.0, 1, 3);
        assert_eq!(a.mul(&b).ord(), 3);
        assert_eq!(a.deriv(0).ord(), 4);
    }

    #[test]
    fn recip_and_sqrt_roundtrip() {
        let u = [0.9, 0.1, -0.2, 0.4];
        let j = poly(u, 6).add(&Jet::constant(3.0, 6));
        let r = j.recip().mul(&j);
        assert!((r.value() - 1.0).abs() < 1e-14);
        for i in 1..n_coeffs(6) {
            assert!(r.c[i].abs() < 1e-12);
        }
        let s = j.sqrt();
        let back = s.mul(&s).sub(&j);
        for x in back.c.iter() {
            assert!(x.abs() < 1e-12);
        }
    }
}
