//! Integer plumbing: deterministic 64-bit primality and factorization.

/// Modular multiplication in u64 via u128 widening.
fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin for the full u64 range.
///
/// The base set {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37} is known to be
/// a correct witness set for all n < 3.3 * 10^24, which covers u64.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d & 1 == 0 {
        d >>= 1;
        s += 1;
    }
    'witness: for &a in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Pollard rho (Brent's cycle detection) for a composite odd n with no small factors.
fn pollard_rho(n: u64) -> u64 {
    // Deterministic: sweep the polynomial offset until a factor splits off.
    for c in 1..n {
        let f = |x: u64| (mul_mod(x, x, n) + c) % n;
        let (mut x, mut y, mut d) = (2u64, 2u64, 1u64);
        while d == 1 {
            x = f(x);
            y = f(f(y));
            d = gcd_u64(x.abs_diff(y), n);
        }
        if d != n {
            return d;
        }
    }
    unreachable!("pollard_rho called on a prime or on n < 4");
}

pub fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Prime factorization of n >= 1, as (prime, exponent) pairs with primes increasing.
pub fn factor_u64(mut n: u64) -> Vec<(u64, u32)> {
    let mut out: Vec<(u64, u32)> = Vec::new();
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31] {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
    }
    if n > 1 {
        let mut stack = vec![n];
        let mut primes: Vec<u64> = Vec::new();
        while let Some(m) = stack.pop() {
            if is_prime_u64(m) {
                primes.push(m);
            } else {
                let d = pollard_rho(m);
                stack.push(d);
                stack.push(m / d);
            }
        }
        primes.sort_unstable();
        let mut i = 0;
        while i < primes.len() {
            let p = primes[i];
            let mut e = 0;
            while i < primes.len() && primes[i] == p {
                e += 1;
                i += 1;
            }
            out.push((p, e));
        }
    }
    out
}

/// Primes in the inclusive range [lo, hi], by sieve.
pub fn primes_in(lo: u64, hi: u64) -> Vec<u64> {
    if hi < 2 || hi < lo {
        return Vec::new();
    }
    let n = hi as usize;
    let mut sieve = vec![true; n + 1];
    sieve[0] = false;
    if n >= 1 {
        sieve[1] = false;
    }
    let mut p = 2usize;
    while p * p <= n {
        if sieve[p] {
            let mut k = p * p;
            while k <= n {
                sieve[k] = false;
                k += p;
            }
        }
        p += 1;
    }
    (lo.max(2)..=hi)
        .filter(|&m| sieve[m as usize])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primality_small() {
        let known = [2u64, 3, 5, 7, 11, 13, 97, 499, 2821 / 7 / 13]; // 31
        for p in known {
            assert!(is_prime_u64(p), "{p} should be prime");
        }
        for c in [0u64, 1, 4, 91, 221, 2821, 6409, 1728] {
            assert!(!is_prime_u64(c), "{c} should be composite");
        }
    }

    #[test]
    fn primality_large() {
        // Largest u64 prime and a Carmichael number.
        assert!(is_prime_u64(18_446_744_073_709_551_557));
        assert!(!is_prime_u64(561));
        assert!(!is_prime_u64(3_215_031_751));
    }

    #[test]
    fn factor_examples() {
        assert_eq!(factor_u64(1), vec![]);
        assert_eq!(factor_u64(91), vec![(7, 1), (13, 1)]);
        assert_eq!(factor_u64(72), vec![(2, 3), (3, 2)]);
        assert_eq!(factor_u64(2821), vec![(7, 1), (13, 1), (31, 1)]);
        assert_eq!(factor_u64(600_851_475_143), vec![(71, 1), (839, 1), (1471, 1), (6857, 1)]);
    }

    #[test]
    fn primes_in_range() {
        assert_eq!(primes_in(5, 20), vec![5, 7, 11, 13, 17, 19]);
        assert_eq!(primes_in(90, 97), vec![97]);
        assert!(primes_in(10, 4).is_empty());
    }
}
