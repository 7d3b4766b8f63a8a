//! Exterior algebra over the ambient space ℝ^m, grades 0 through 3.
//!
//! Coefficients are stored densely on the canonical basis blades (strictly
//! increasing index tuples); reading a permuted component applies the
//! permutation sign. The four products are the ones the identity suites
//! consume: wedge (scaled antisymmetrization), the 1/p!-normalized inner
//! product, interior multiplication with leading-slot contraction, and the
//! first-order contraction operator `bullet` obtained from its Leibniz rule.
//!
//! The scalar type is generic so the same algebra runs on plain numbers (for
//! the roundoff-level structural checks) and on jets (for identities that
//! need exact derivatives).

use crate::jet::Jet;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AlgebraError {
    #[error("ambient dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("grades {0} and {1} not supported by this operation")]
    GradeMismatch(u8, u8),
    #[error("wedge would exceed grade 3 ({0} + {1})")]
    GradeOverflow(u8, u8),
}

/// Coefficient ring for the algebra: plain numbers or jets.
pub trait Ring: Clone + std::fmt::Debug {
    fn zero_like(&self) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn scale(&self, f: f64) -> Self;
    fn add_assign(&mut self, o: &Self);
    /// Scalar value at the expansion point (for scales/tolerances).
    fn value(&self) -> f64;
}

impl Ring for f64 {
    fn zero_like(&self) -> Self {
        0.0
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn scale(&self, f: f64) -> Self {
        self * f
    }
    fn add_assign(&mut self, o: &Self) {
        *self += o;
    }
    fn value(&self) -> f64 {
        *self
    }
}

impl Ring for Jet {
    fn zero_like(&self) -> Self {
        Jet::zero(self.ord())
    }
    fn add(&self, o: &Self) -> Self {
        Jet::add(self, o)
    }
    fn sub(&self, o: &Self) -> Self {
        Jet::sub(self, o)
    }
    fn neg(&self) -> Self {
        Jet::neg(self)
    }
    fn mul(&self, o: &Self) -> Self {
        Jet::mul(self, o)
    }
    fn scale(&self, f: f64) -> Self {
        Jet::scale(self, f)
    }
    fn add_assign(&mut self, o: &Self) {
        Jet::add_assign(self, o);
    }
    fn value(&self) -> f64 {
        Jet::value(self)
    }
}

pub const fn blade_count(m: usize, grade: u8) -> usize {
    match grade {
        0 => 1,
        1 => m,
        2 => m * (m - 1) / 2,
        3 => m * (m - 1) * (m - 2) / 6,
        _ => 0,
    }
}

/// Canonical index of the blade (i, j), i < j.
#[inline]
pub fn pair_index(m: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < m);
    i * m - i * (i + 1) / 2 + (j - i - 1)
}

/// Canonical index of the blade (i, j, k), i < j < k.
#[inline]
pub fn triple_index(m: usize, i: usize, j: usize, k: usize) -> usize {
    debug_assert!(i < j && j < k && k < m);
    let c3 = |n: usize| n * (n.saturating_sub(1)) * (n.saturating_sub(2)) / 6;
    let c2 = |n: usize| n * (n.saturating_sub(1)) / 2;
    c3(m) - c3(m - i) + c2(m - i - 1) - c2(m - j) + (k - j - 1)
}

/// Graded element of Λ^q(ℝ^m), q ≤ 3, dense canonical-blade storage.
#[derive(Clone, Debug)]
pub struct Multivector<S: Ring> {
    pub m: usize,
    pub grade: u8,
    pub c: Vec<S>,
}

pub type Mv = Multivector<f64>;
pub type MvJ = Multivector<Jet>;

impl Multivector<f64> {
    pub fn basis(m: usize, i: usize) -> Mv {
        let mut v = Multivector::zero_with(m, 1, &0.0);
        v.c[i] = 1.0;
        v
    }
}

impl<S: Ring> Multivector<S> {
    pub fn zero_with(m: usize, grade: u8, proto: &S) -> Self {
        assert!(grade <= 3 && m >= 1);
        Multivector {
            m,
            grade,
            c: vec![proto.zero_like(); blade_count(m, grade)],
        }
    }

    pub fn scalar(m: usize, v: S) -> Self {
        Multivector {
            m,
            grade: 0,
            c: vec![v],
        }
    }

    pub fn vector(c: Vec<S>) -> Self {
        Multivector {
            m: c.len(),
            grade: 1,
            c,
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        debug_assert_eq!((self.m, self.grade), (o.m, o.grade));
        Multivector {
            m: self.m,
            grade: self.grade,
            c: self
                .c
                .iter()
                .zip(o.c.iter())
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        debug_assert_eq!((self.m, self.grade), (o.m, o.grade));
        Multivector {
            m: self.m,
            grade: self.grade,
            c: self
                .c
                .iter()
                .zip(o.c.iter())
                .map(|(a, b)| a.sub(b))
                .collect(),
        }
    }

    pub fn neg(&self) -> Self {
        Multivector {
            m: self.m,
            grade: self.grade,
            c: self.c.iter().map(|a| a.neg()).collect(),
        }
    }

    pub fn scale(&self, f: f64) -> Self {
        Multivector {
            m: self.m,
            grade: self.grade,
            c: self.c.iter().map(|a| a.scale(f)).collect(),
        }
    }

    pub fn scale_s(&self, f: &S) -> Self {
        Multivector {
            m: self.m,
            grade: self.grade,
            c: self.c.iter().map(|a| a.mul(f)).collect(),
        }
    }

    pub fn add_assign(&mut self, o: &Self) {
        debug_assert_eq!((self.m, self.grade), (o.m, o.grade));
        for (a, b) in self.c.iter_mut().zip(o.c.iter()) {
            a.add_assign(b);
        }
    }

    /// Max |coefficient value| (at the expansion point for jets).
    pub fn norm_inf(&self) -> f64 {
        self.c.iter().map(|x| x.value().abs()).fold(0.0, f64::max)
    }

    /// Full antisymmetric component for grade 2, any index order.
    pub fn comp2(&self, i: usize, j: usize) -> S {
        debug_assert_eq!(self.grade, 2);
        if i == j {
            return self.c[0].zero_like();
        }
        if i < j {
            self.c[pair_index(self.m, i, j)].clone()
        } else {
            self.c[pair_index(self.m, j, i)].neg()
        }
    }

    /// Full antisymmetric component for grade 3, any index order.
    pub fn comp3(&self, i: usize, j: usize, k: usize) -> S {
        debug_assert_eq!(self.grade, 3);
        if i == j || j == k || i == k {
            return self.c[0].zero_like();
        }
        let mut v = [i, j, k];
        let mut sign = 1.0;
        // 3-element sort, tracking parity
        if v[0] > v[1] {
            v.swap(0, 1);
            sign = -sign;
        }
        if v[1] > v[2] {
            v.swap(1, 2);
            sign = -sign;
        }
        if v[0] > v[1] {
            v.swap(0, 1);
            sign = -sign;
        }
        self.c[triple_index(self.m, v[0], v[1], v[2])].scale(sign)
    }

    /// Wedge product with the (p+q)!/(p!q!) scaled-antisymmetrization convention.
    pub fn wedge(&self, o: &Self) -> Result<Self, AlgebraError> {
        if self.m != o.m {
            return Err(AlgebraError::DimensionMismatch(self.m, o.m));
        }
        let (p, q) = (self.grade, o.grade);
        if p + q > 3 {
            return Err(AlgebraError::GradeOverflow(p, q));
        }
        if p == 0 {
            return Ok(o.scale_s(&self.c[0]));
        }
        if q == 0 {
            return Ok(self.scale_s(&o.c[0]));
        }
        let m = self.m;
        let proto = &self.c[0];
        let r = match (p, q) {
            (1, 1) => {
                let mut r = Multivector::zero_with(m, 2, proto);
                for i in 0..m {
                    for j in i + 1..m {
                        r.c[pair_index(m, i, j)] =
                            self.c[i].mul(&o.c[j]).sub(&self.c[j].mul(&o.c[i]));
                    }
                }
                r
            }
            (1, 2) | (2, 1) => {
                // (A ∧ B)_{ijk} = A_i B_jk + A_j B_ki + A_k B_ij; 1- and 2-vectors commute.
                let (a, b) = if p == 1 { (self, o) } else { (o, self) };
                let mut r = Multivector::zero_with(m, 3, proto);
                for i in 0..m {
                    for j in i + 1..m {
                        for k in j + 1..m {
                            let mut s = a.c[i].mul(&b.comp2(j, k));
                            s.add_assign(&a.c[j].mul(&b.comp2(k, i)));
                            s.add_assign(&a.c[k].mul(&b.comp2(i, j)));
                            r.c[triple_index(m, i, j, k)] = s;
                        }
                    }
                }
                r
            }
            _ => return Err(AlgebraError::GradeOverflow(p, q)),
        };
        Ok(r)
    }

    /// Inner product with the 1/p! normalization: canonical blades are orthonormal.
    pub fn dot(&self, o: &Self) -> Result<S, AlgebraError> {
        if self.m != o.m {
            return Err(AlgebraError::DimensionMismatch(self.m, o.m));
        }
        if self.grade != o.grade {
            return Err(AlgebraError::GradeMismatch(self.grade, o.grade));
        }
        let mut acc = self.c[0].zero_like();
        for (a, b) in self.c.iter().zip(o.c.iter()) {
            acc.add_assign(&a.mul(b));
        }
        Ok(acc)
    }

    /// Interior multiplication A ⌐ B: contracts B into the leading p−1 slots
    /// of A with 1/(p−1)! normalization; (A⌐B)^k = A^{ik}B_i for 2-vectors.
    pub fn interior(&self, o: &Self) -> Result<Self, AlgebraError> {
        if self.m != o.m {
            return Err(AlgebraError::DimensionMismatch(self.m, o.m));
        }
        let m = self.m;
        let proto = &self.c[0];
        match (self.grade, o.grade) {
            (2, 1) => {
                let mut r = Multivector::zero_with(m, 1, proto);
                for k in 0..m {
                    let mut s = proto.zero_like();
                    for i in 0..m {
                        if i != k {
                            s.add_assign(&self.comp2(i, k).mul(&o.c[i]));
                        }
                    }
                    r.c[k] = s;
                }
                Ok(r)
            }
            (3, 2) => {
                // (A⌐B)^k = (1/2) A^{ijk} B_{ ij }
                let mut r = Multivector::zero_with(m, 1, proto);
                for k in 0..m {
                    let mut s = proto.zero_like();
                    for i in 0..m {
                        for j in i + 1..m {
                            if i != k && j != k {
                                s.add_assign(&self.comp3(i, j, k).mul(&o.comp2(i, j)));
                            }
                        }
                    }
                    r.c[k] = s;
                }
                Ok(r)
            }
            (p, q) => Err(AlgebraError::GradeMismatch(p, q)),
        }
    }

    /// First-order contraction A • B for a 2-vector A. For 1-vectors it is
    /// A ⌐ B; on 2-vectors it is the bilinear extension of the Leibniz rule
    /// A•(B∧C) = (A•B)∧C + (−1)^{pq}(A•C)∧B, which closes to
    /// (A•B)_{jl} = A^{ij}B_{il} − A^{il}B_{ij}.
    pub fn bullet(&self, o: &Self) -> Result<Self, AlgebraError> {
        if self.m != o.m {
            return Err(AlgebraError::DimensionMismatch(self.m, o.m));
        }
        if self.grade != 2 {
            return Err(AlgebraError::GradeMismatch(self.grade, o.grade));
        }
        let m = self.m;
        let proto = &self.c[0];
        match o.grade {
            1 => self.interior(o),
            2 => {
                let mut r = Multivector::zero_with(m, 2, proto);
                for j in 0..m {
                    for l in j + 1..m {
                        let mut s = proto.zero_like();
                        for i in 0..m {
                            s.add_assign(&self.comp2(i, j).mul(&o.comp2(i, l)));
                            s.add_assign(&self.comp2(i, l).mul(&o.comp2(i, j)).neg());
                        }
                        r.c[pair_index(m, j, l)] = s;
                    }
                }
                Ok(r)
            }
            q => Err(AlgebraError::GradeMismatch(2, q)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const M: usize = 6;

    fn e(i: usize) -> Mv {
        Multivector::basis(M, i)
    }

    fn rand_vec(seed: &mut u64) -> Mv {
        let mut c = vec![0.0; M];
        for x in c.iter_mut() {
            *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            *x = ((*seed >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0;
        }
        Multivector::vector(c)
    }

    fn rand_bivec(seed: &mut u64) -> Mv {
        let a = rand_vec(seed);
        let b = rand_vec(seed);
        let c = rand_vec(seed);
        let d = rand_vec(seed);
        a.wedge(&b).unwrap().add(&c.wedge(&d).unwrap())
    }

    #[test]
    fn wedge_basis_and_antisymmetry() {
        let w = e(0).wedge(&e(1)).unwrap();
        assert_eq!(w.comp2(0, 1), 1.0);
        assert_eq!(w.comp2(1, 0), -1.0);
        let z = e(0).wedge(&e(0)).unwrap();
        assert!(z.norm_inf() == 0.0);
        let s = e(0).add(&e(1)).wedge(&e(2)).unwrap();
        assert_eq!(s.comp2(0, 2), 1.0);
        assert_eq!(s.comp2(1, 2), 1.0);
    }

    #[test]
    fn dot_blade_orthonormality() {
        let w = e(0).wedge(&e(1)).unwrap();
        assert_eq!(w.dot(&w).unwrap(), 1.0);
        let v = e(0).wedge(&e(2)).unwrap();
        assert_eq!(w.dot(&v).unwrap(), 0.0);
        let u = e(0).scale(3.0);
        assert_eq!(u.dot(&u).unwrap(), 9.0);
    }

    #[test]
    fn interior_examples() {
        let w = e(0).wedge(&e(1)).unwrap();
        let r = w.interior(&e(0)).unwrap();
        assert_eq!(r.c, e(1).c);
        let r = w.interior(&e(1)).unwrap();
        assert_eq!(r.c, e(0).neg().c);
        let r = w.interior(&e(2)).unwrap();
        assert_eq!(r.norm_inf(), 0.0);
    }

    #[test]
    fn bullet_examples() {
        let e01 = e(0).wedge(&e(1)).unwrap();
        let e02 = e(0).wedge(&e(2)).unwrap();
        let r = e01.bullet(&e02).unwrap();
        let expect = e(1).wedge(&e(2)).unwrap();
        assert!(r.sub(&expect).norm_inf() < 1e-15);
        let e23 = e(2).wedge(&e(3)).unwrap();
        assert!(e01.bullet(&e23).unwrap().norm_inf() == 0.0);
        assert!(e01.bullet(&e01).unwrap().norm_inf() == 0.0);
    }

    /// Brute-force bullet on 2-vectors straight from the Leibniz rule on
    /// basis blades, kept independent of the closed-form production code.
    fn bullet_oracle(a: &Mv, b: &Mv) -> Mv {
        let mut r = Multivector::zero_with(M, 2, &0.0);
        for i in 0..M {
            for j in i + 1..M {
                let ca = a.comp2(i, j);
                if ca == 0.0 {
                    continue;
                }
                let blade = e(i).wedge(&e(j)).unwrap();
                for k in 0..M {
                    for l in k + 1..M {
                        let cb = b.comp2(k, l);
                        if cb == 0.0 {
                            continue;
                        }
                        // blade • (e_k ∧ e_l) = (blade⌐e_k)∧e_l − (blade⌐e_l)∧e_k
                        let t1 = blade.interior(&e(k)).unwrap().wedge(&e(l)).unwrap();
                        let t2 = blade.interior(&e(l)).unwrap().wedge(&e(k)).unwrap();
                        r.add_assign(&t1.sub(&t2).scale(ca * cb));
                    }
                }
            }
        }
        r
    }

    #[test]
    fn bullet_matches_bruteforce_leibniz_expansion() {
        let mut seed = 7u64;
        for _ in 0..50 {
            let a = rand_bivec(&mut seed);
            let b = rand_bivec(&mut seed);
            let fast = a.bullet(&b).unwrap();
            let slow = bullet_oracle(&a, &b);
            assert!(fast.sub(&slow).norm_inf() < 1e-12);
        }
    }

    #[test]
    fn grade_overflow_is_an_error() {
        let b2 = e(0).wedge(&e(1)).unwrap();
        assert!(matches!(
            b2.wedge(&b2),
            Err(AlgebraError::GradeOverflow(2, 2))
        ));
        assert!(matches!(
            e(0).dot(&b2),
            Err(AlgebraError::GradeMismatch(1, 2))
        ));
    }

    proptest! {
        #[test]
        fn wedge_graded_anticommutative(s in 1u64..1_000_000) {
            let mut seed = s;
            let u = rand_vec(&mut seed);
            let v = rand_vec(&mut seed);
            let b = rand_bivec(&mut seed);
            // 1∧1: anticommute; 1∧2: commute
            let d1 = u.wedge(&v).unwrap().add(&v.wedge(&u).unwrap());
            prop_assert!(d1.norm_inf() < 1e-12);
            let d2 = u.wedge(&b).unwrap().sub(&b.wedge(&u).unwrap());
            prop_assert!(d2.norm_inf() < 1e-12);
        }

        #[test]
        fn wedge_associative_within_grade_cap(s in 1u64..1_000_000) {
            let mut seed = s;
            let u = rand_vec(&mut seed);
            let v = rand_vec(&mut seed);
            let w = rand_vec(&mut seed);
            let lhs = u.wedge(&v).unwrap().wedge(&w).unwrap();
            let rhs = u.wedge(&v.wedge(&w).unwrap()).unwrap();
            prop_assert!(lhs.sub(&rhs).norm_inf() < 1e-12);
        }

        #[test]
        fn gram_identity(s in 1u64..1_000_000) {
            let mut seed = s;
            let u = rand_vec(&mut seed);
            let v = rand_vec(&mut seed);
            let w = u.wedge(&v).unwrap();
            let lhs = w.dot(&w).unwrap();
            let rhs = u.dot(&u).unwrap() * v.dot(&v).unwrap() - u.dot(&v).unwrap().powi(2);
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }

        #[test]
        fn bullet_anticommutes_dot_commutes_on_bivectors(s in 1u64..1_000_000) {
            let mut seed = s;
            let a = rand_bivec(&mut seed);
            let b = rand_bivec(&mut seed);
            let anti = a.bullet(&b).unwrap().add(&b.bullet(&a).unwrap());
            prop_assert!(anti.norm_inf() < 1e-12);
            prop_assert!((a.dot(&b).unwrap() - b.dot(&a).unwrap()).abs() < 1e-14);
        }

        #[test]
        fn interior_adjoint_to_wedge(s in 1u64..1_000_000) {
            let mut seed = s;
            let a = rand_bivec(&mut seed);
            let b = rand_vec(&mut seed);
            let w = rand_vec(&mut seed);
            let lhs = a.interior(&b).unwrap().dot(&w).unwrap();
            let rhs = a.dot(&b.wedge(&w).unwrap()).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }
    }
}
