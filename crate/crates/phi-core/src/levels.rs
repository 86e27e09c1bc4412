//! Arithmetic invariants of a level pair `(N, q)`.
//!
//! Everything downstream (the supersingular model, the group presentation and
//! its closed form, the Hecke action) is parameterized by the quantities
//! computed here: the prime factorization of `N`, the indicator pair `(u, v)`,
//! the count `nu` of prime divisors of `N` other than 2 and 3, the degree `Q`
//! of `X_0(N) -> X_0(1)`, and the stratum sizes `s2, s4, s6` of supersingular
//! points in characteristic `q` counted by automorphism order.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::arith::{factor_u64, is_prime_u64};

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum LevelError {
    #[error("q = {0} is not a prime >= 5 (inputs are limited to the 64-bit range)")]
    InvalidPrime(u64),
    #[error("q = {q} divides the level N = {n}")]
    LevelNotCoprime { n: u64, q: u64 },
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),
}

/// Ordered prime factorization `N = prod p^e`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    pub value: u64,
    /// `(prime, exponent)` pairs, primes strictly increasing, exponents >= 1.
    pub factors: Vec<(u64, u32)>,
}

/// Factor a positive integer. `N = 1` yields the empty product.
pub fn factorize(n: u64) -> Factorization {
    assert!(n >= 1, "factorize requires a positive integer");
    Factorization {
        value: n,
        factors: factor_u64(n),
    }
}

/// Which of the four structural cases of the decomposition applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseTag {
    /// `(u, v) = (0, 0)` or `nu = 0`: the group is cyclic.
    Case1,
    /// `(u, v) = (0, 1)` and `nu >= 1`: cyclic part plus an elementary 3-group.
    Case2,
    /// `(u, v) = (1, 0)` and `nu >= 1`: cyclic part plus an elementary 2-group.
    Case3,
    /// `(u, v) = (1, 1)` and `nu >= 1`: both families present.
    Case4,
}

impl std::fmt::Display for CaseTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CaseTag::Case1 => write!(f, "Case1"),
            CaseTag::Case2 => write!(f, "Case2"),
            CaseTag::Case3 => write!(f, "Case3"),
            CaseTag::Case4 => write!(f, "Case4"),
        }
    }
}

/// All level/prime invariants of the pair `(N, q)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelInvariants {
    pub level: u64,
    pub q: u64,
    pub factorization: Factorization,
    /// Count of prime divisors of `N` other than 2 and 3.
    pub nu: u32,
    /// 1 iff the aut-4 stratum is nonempty: `q = 3 mod 4`, `4` does not divide
    /// `N`, and no prime divisor of `N` is `3 mod 4`.
    pub u: u8,
    /// 1 iff the aut-6 stratum is nonempty: `q = 2 mod 3`, `9` does not divide
    /// `N`, and no prime divisor of `N` is `2 mod 3`.
    pub v: u8,
    /// Degree of the forgetful map `X_0(N) -> X_0(1)`: `prod p^(e-1) (p+1)`.
    pub q_degree: BigInt,
    /// `(q - 1) * Q`, the canonical exact representative of `12n`. The
    /// quantity `n` itself need not be an integer; every multiple of it used
    /// downstream is derived from this field with an explicit divisibility
    /// check.
    pub twelve_n: BigInt,
    pub s2: BigInt,
    pub s4: u64,
    pub s6: u64,
    pub case_tag: CaseTag,
}

impl LevelInvariants {
    /// Exact value of `k * n = k * (q-1) * Q / 12`, failing loudly if it is
    /// not an integer.
    pub fn n_multiple(&self, k: u32) -> Result<BigInt, LevelError> {
        let num = &self.twelve_n * BigInt::from(k);
        let (quot, rem) = num_integer::Integer::div_rem(&num, &BigInt::from(12));
        if !rem.is_zero() {
            return Err(LevelError::InternalInconsistency(format!(
                "{k}n = {k}*{}/12 is not an integer for (N, q) = ({}, {})",
                self.twelve_n, self.level, self.q
            )));
        }
        Ok(quot)
    }

    /// Total number of supersingular points `s2 + s4 + s6`.
    pub fn point_count(&self) -> BigInt {
        &self.s2 + BigInt::from(self.s4 + self.s6)
    }
}

/// Compute every invariant of the pair `(N, q)`.
///
/// Requires `q >= 5` prime and `gcd(N, q) = 1`; `s2` is recovered from the
/// mass formula `s2/2 + s4/4 + s6/6 = (q-1)Q/24` in exact rational arithmetic
/// and verified to be a nonnegative integer.
pub fn level_invariants(n: u64, q: u64) -> Result<LevelInvariants, LevelError> {
    if q < 5 || !is_prime_u64(q) {
        return Err(LevelError::InvalidPrime(q));
    }
    if n == 0 {
        return Err(LevelError::InternalInconsistency(
            "level N must be a positive integer".into(),
        ));
    }
    if n % q == 0 {
        return Err(LevelError::LevelNotCoprime { n, q });
    }
    let factorization = factorize(n);

    let nu = factorization
        .factors
        .iter()
        .filter(|(p, _)| *p != 2 && *p != 3)
        .count() as u32;

    let four_divides = n % 4 == 0;
    let nine_divides = n % 9 == 0;
    let has_p_3mod4 = factorization.factors.iter().any(|(p, _)| p % 4 == 3);
    let has_p_2mod3 = factorization.factors.iter().any(|(p, _)| p % 3 == 2);

    let u: u8 = if q % 4 == 1 || four_divides || has_p_3mod4 { 0 } else { 1 };
    let v: u8 = if q % 3 == 1 || nine_divides || has_p_2mod3 { 0 } else { 1 };

    let mut q_degree = BigInt::one();
    for &(p, e) in &factorization.factors {
        q_degree *= BigInt::from(p).pow(e - 1) * BigInt::from(p + 1);
    }

    let twelve_n = BigInt::from(q - 1) * &q_degree;

    let two_pow_nu = BigInt::from(2u32).pow(nu);
    let s4_big = BigInt::from(u) * &two_pow_nu;
    let s6_big = BigInt::from(v) * &two_pow_nu;

    // s2 = (q-1)Q/12 - s4/2 - s6/3, exactly.
    let s2_rat = BigRational::new(twelve_n.clone(), BigInt::from(12))
        - BigRational::new(s4_big.clone(), BigInt::from(2))
        - BigRational::new(s6_big.clone(), BigInt::from(3));
    if !s2_rat.is_integer() || s2_rat.is_negative() {
        return Err(LevelError::InternalInconsistency(format!(
            "mass formula yields s2 = {s2_rat} for (N, q) = ({n}, {q})"
        )));
    }
    let s2 = s2_rat.to_integer();

    let case_tag = match (u, v, nu) {
        (0, 0, _) | (_, _, 0) => CaseTag::Case1,
        (0, 1, _) => CaseTag::Case2,
        (1, 0, _) => CaseTag::Case3,
        (1, 1, _) => CaseTag::Case4,
        _ => unreachable!(),
    };

    // u64 is comfortable: s4, s6 <= 2^nu and nu <= 15 for 64-bit N.
    let s4 = u as u64 * (1u64 << nu);
    let s6 = v as u64 * (1u64 << nu);

    Ok(LevelInvariants {
        level: n,
        q,
        factorization,
        nu,
        u,
        v,
        q_degree,
        twelve_n,
        s2,
        s4,
        s6,
        case_tag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inv(n: u64, q: u64) -> LevelInvariants {
        level_invariants(n, q).unwrap()
    }

    #[test]
    fn factorize_examples() {
        assert!(factorize(1).factors.is_empty());
        assert_eq!(factorize(91).factors, vec![(7, 1), (13, 1)]);
        assert_eq!(factorize(72).factors, vec![(2, 3), (3, 2)]);
    }

    #[test]
    fn example_n7_q5() {
        let i = inv(7, 5);
        assert_eq!((i.nu, i.u, i.v), (1, 0, 1));
        assert_eq!(i.q_degree, BigInt::from(8));
        assert_eq!((i.s4, i.s6), (0, 2));
        assert_eq!(i.s2, BigInt::from(2));
        assert_eq!(i.case_tag, CaseTag::Case2);
    }

    #[test]
    fn example_n1_q11() {
        let i = inv(1, 11);
        assert_eq!((i.nu, i.u, i.v), (0, 1, 1));
        assert_eq!(i.q_degree, BigInt::one());
        assert_eq!((i.s4, i.s6), (1, 1));
        assert_eq!(i.s2, BigInt::zero());
        assert_eq!(i.case_tag, CaseTag::Case1);
    }

    #[test]
    fn example_n13_q7() {
        let i = inv(13, 7);
        assert_eq!((i.nu, i.u, i.v), (1, 1, 0));
        assert_eq!(i.q_degree, BigInt::from(14));
        assert_eq!((i.s4, i.s6), (2, 0));
        assert_eq!(i.s2, BigInt::from(6));
        assert_eq!(i.case_tag, CaseTag::Case3);
        // s2 = n - 2^(nu-1) with n = 7.
        assert_eq!(i.n_multiple(1).unwrap(), BigInt::from(7));
    }

    #[test]
    fn example_n4_q7() {
        let i = inv(4, 7);
        assert_eq!((i.nu, i.u, i.v), (0, 0, 0));
        assert_eq!(i.q_degree, BigInt::from(6));
        assert_eq!(i.s2, BigInt::from(3));
        assert_eq!(i.case_tag, CaseTag::Case1);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(level_invariants(1, 4), Err(LevelError::InvalidPrime(4)));
        assert_eq!(level_invariants(1, 3), Err(LevelError::InvalidPrime(3)));
        assert_eq!(
            level_invariants(7, 7),
            Err(LevelError::LevelNotCoprime { n: 7, q: 7 })
        );
        assert_eq!(level_invariants(14, 7), Err(LevelError::LevelNotCoprime { n: 14, q: 7 }));
    }

    #[test]
    fn mass_formula_sweep() {
        // s2/2 + s4/4 + s6/6 == (q-1)Q/24 exactly, for every valid small pair.
        for q in crate::arith::primes_in(5, 97) {
            for n in 1..=100u64 {
                if n % q == 0 {
                    continue;
                }
                let i = inv(n, q);
                let lhs = BigRational::new(i.s2.clone(), 2.into())
                    + BigRational::new(BigInt::from(i.s4), 4.into())
                    + BigRational::new(BigInt::from(i.s6), 6.into());
                let rhs = BigRational::new(i.twelve_n.clone(), 24.into());
                assert_eq!(lhs, rhs, "(N, q) = ({n}, {q})");
            }
        }
    }

    #[test]
    fn uv_rederivation() {
        // Independent restatement: u = 1 implies q = 3 mod 4, 4 does not
        // divide N, and no p | N has p = 3 mod 4; dually for v.
        for q in crate::arith::primes_in(5, 61) {
            for n in 1..=80u64 {
                if n % q == 0 {
                    continue;
                }
                let i = inv(n, q);
                let primes: Vec<u64> = i.factorization.factors.iter().map(|f| f.0).collect();
                if i.u == 1 {
                    assert_eq!(q % 4, 3);
                    assert_ne!(n % 4, 0);
                    assert!(primes.iter().all(|p| p % 4 != 3));
                } else {
                    assert!(q % 4 == 1 || n % 4 == 0 || primes.iter().any(|p| p % 4 == 3));
                }
                if i.v == 1 {
                    assert_eq!(q % 3, 2);
                    assert_ne!(n % 9, 0);
                    assert!(primes.iter().all(|p| p % 3 != 2));
                } else {
                    assert!(q % 3 == 1 || n % 9 == 0 || primes.iter().any(|p| p % 3 == 2));
                }
            }
        }
    }

    #[test]
    fn per_case_divisibility() {
        for q in crate::arith::primes_in(5, 61) {
            for n in 1..=80u64 {
                if n % q == 0 {
                    continue;
                }
                let i = inv(n, q);
                match i.case_tag {
                    CaseTag::Case1 => {
                        if (i.u, i.v) == (0, 0) {
                            assert!(i.n_multiple(1).is_ok(), "12 | twelve_n at ({n}, {q})");
                        }
                        let e = 2u32.pow(i.u as u32) * 3u32.pow(i.v as u32);
                        assert!(i.n_multiple(e).is_ok(), "e*n integral at ({n}, {q})");
                    }
                    CaseTag::Case2 => {
                        assert!(i.n_multiple(3).is_ok(), "3n integral at ({n}, {q})");
                    }
                    CaseTag::Case3 => {
                        assert!(i.n_multiple(1).is_ok(), "n integral at ({n}, {q})");
                        // s2 = n - 2^(nu-1)
                        let expect = i.n_multiple(1).unwrap()
                            - BigInt::from(2u32).pow(i.nu - 1);
                        assert_eq!(i.s2, expect);
                    }
                    CaseTag::Case4 => {
                        assert!(i.n_multiple(6).is_ok(), "6n integral at ({n}, {q})");
                        // s2 = (6n - 5 * 2^nu) / 6
                        let six_n = i.n_multiple(6).unwrap();
                        let expect = (six_n
                            - BigInt::from(5) * BigInt::from(2u32).pow(i.nu))
                            / BigInt::from(6);
                        assert_eq!(i.s2, expect);
                    }
                }
            }
        }
    }
}
