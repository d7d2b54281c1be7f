//! Factorization of rational polynomials into monic irreducibles.
//!
//! Square-free decomposition over Q, then for each square-free part: cheap
//! rational-root stripping, and Zassenhaus (Cantor-Zassenhaus modulo a small
//! prime, multifactor Hensel lifting, exhaustive recombination) for what is left.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{lcm_of_denominators, Rat, RatError, RatPoly};

pub const FACTOR_DEGREE_LIMIT: usize = 12;

const SMALL_PRIMES: [u64; 24] = [
    3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
];
/// Number of usable primes tried when looking for the fewest modular factors.
const PRIME_CANDIDATES: usize = 5;
const RATIONAL_ROOT_SEARCH_LIMIT: i64 = 1_000_000;

/// `p = leading * prod f_i^{m_i}` with every `f_i` monic and irreducible over Q.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factorization {
    pub leading: Rat,
    pub factors: Vec<(RatPoly, usize)>,
}

impl Factorization {
    pub fn product(&self) -> RatPoly {
        self.factors
            .iter()
            .fold(RatPoly::constant(self.leading.clone()), |acc, (f, m)| {
                &acc * &f.pow(*m as u32)
            })
    }

    pub fn is_irreducible(&self) -> bool {
        self.factors.len() == 1 && self.factors[0].1 == 1
    }
}

pub fn factor_over_q(p: &RatPoly) -> Result<Factorization, RatError> {
    let Some(deg) = p.degree() else {
        return Err(RatError::ZeroPolynomial);
    };
    if deg > FACTOR_DEGREE_LIMIT {
        return Err(RatError::DegreeLimit {
            degree: deg,
            limit: FACTOR_DEGREE_LIMIT,
        });
    }
    let mut factors = Vec::new();
    for (part, mult) in p.squarefree_decomposition() {
        for f in factor_squarefree(&part) {
            factors.push((f, mult));
        }
    }
    factors.sort_by(|(a, ma), (b, mb)| {
        a.degree()
            .cmp(&b.degree())
            .then_with(|| cmp_coeffs(a, b))
            .then(ma.cmp(mb))
    });
    Ok(Factorization {
        leading: p.leading(),
        factors,
    })
}

/// True iff the monic polynomial `p` divides `x^n - 1` for some `n`, i.e. it is a
/// product of distinct cyclotomic polynomials. Intended for irreducible input.
pub fn is_cyclotomic(p: &RatPoly) -> bool {
    let Some(deg) = p.degree() else {
        return false;
    };
    if deg == 0 || !p.is_monic() {
        return false;
    }
    // phi(n) >= sqrt(n / 2), so an order-n root of unity has degree >= sqrt(n / 2).
    let bound = 2 * deg * deg + 2;
    let x = RatPoly::x();
    let mut power = RatPoly::one();
    for _ in 1..=bound {
        power = (&power * &x).divrem(p).1;
        if power == RatPoly::one() {
            return true;
        }
    }
    false
}

fn cmp_coeffs(a: &RatPoly, b: &RatPoly) -> std::cmp::Ordering {
    a.coeffs()
        .iter()
        .zip(b.coeffs())
        .map(|(x, y)| x.cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Monic irreducible factors of a monic square-free polynomial.
fn factor_squarefree(f: &RatPoly) -> Vec<RatPoly> {
    let mut out = Vec::new();
    let mut rest = primitive_integer(f);
    strip_rational_roots(&mut rest, &mut out);
    let deg = rest.len() - 1;
    if deg == 0 {
        return out;
    }
    if deg <= 3 {
        // No rational roots left, so no proper factors either.
        out.push(to_monic_rat(&rest));
        return out;
    }
    for g in zassenhaus_primitive(&rest) {
        out.push(to_monic_rat(&g));
    }
    out
}

/// Clears denominators and content; result has a positive leading coefficient.
fn primitive_integer(f: &RatPoly) -> Vec<BigInt> {
    let l = lcm_of_denominators(f.coeffs());
    let ints: Vec<BigInt> = f
        .coeffs()
        .iter()
        .map(|c| (c * Rat::from_integer(l.clone())).to_integer())
        .collect();
    primitive_part(ints)
}

fn primitive_part(mut v: Vec<BigInt>) -> Vec<BigInt> {
    let content = v.iter().fold(BigInt::zero(), |g, c| g.gcd(c));
    if !content.is_zero() && !content.is_one() {
        for c in v.iter_mut() {
            *c = &*c / &content;
        }
    }
    if v.last().is_some_and(Signed::is_negative) {
        for c in v.iter_mut() {
            *c = -std::mem::take(c);
        }
    }
    v
}

fn to_monic_rat(v: &[BigInt]) -> RatPoly {
    RatPoly::new(v.iter().map(|c| Rat::from_integer(c.clone())).collect()).monic()
}

fn small_divisors(n: &BigInt) -> Option<Vec<i64>> {
    let n = n.abs().to_i64()?;
    if n == 0 || n > RATIONAL_ROOT_SEARCH_LIMIT {
        return None;
    }
    let mut out = Vec::new();
    let mut k = 1;
    while k * k <= n {
        if n % k == 0 {
            out.push(k);
            if k * k != n {
                out.push(n / k);
            }
        }
        k += 1;
    }
    Some(out)
}

/// Removes linear factors `v x - u` (for small coefficient bounds) from a
/// primitive integer polynomial.
fn strip_rational_roots(f: &mut Vec<BigInt>, out: &mut Vec<RatPoly>) {
    while f.len() > 1 && f[0].is_zero() {
        f.remove(0);
        out.push(RatPoly::x());
    }
    if f.len() <= 1 {
        return;
    }
    let (Some(us), Some(vs)) = (small_divisors(&f[0]), small_divisors(f.last().unwrap())) else {
        return;
    };
    let mut candidates: Vec<Rat> = Vec::new();
    for &u in &us {
        for &v in &vs {
            for s in [1, -1] {
                let r = Rat::new(BigInt::from(s * u), BigInt::from(v));
                if !candidates.contains(&r) {
                    candidates.push(r);
                }
            }
        }
    }
    for r in candidates {
        loop {
            if f.len() <= 1 {
                return;
            }
            let poly = RatPoly::new(f.iter().map(|c| Rat::from_integer(c.clone())).collect());
            if !poly.eval(&r).is_zero() {
                break;
            }
            let (q, _) = poly.divrem(&RatPoly::linear(r.clone()));
            out.push(RatPoly::linear(r.clone()));
            *f = primitive_integer(&q);
        }
    }
}

/// Factors a primitive square-free integer polynomial of degree >= 2.
fn zassenhaus_primitive(f: &[BigInt]) -> Vec<Vec<BigInt>> {
    let n = f.len() - 1;
    let lc = f[n].clone();
    // Monic transform F(y) = lc^{n-1} f(y / lc).
    let mut monic = Vec::with_capacity(n + 1);
    for (i, c) in f.iter().enumerate() {
        if i == n {
            monic.push(BigInt::one());
        } else {
            monic.push(c * num_traits::pow(lc.clone(), n - 1 - i));
        }
    }
    zassenhaus_monic(&monic)
        .into_iter()
        .map(|g| {
            // Back-substitute y = lc * x and take the primitive part.
            let scaled: Vec<BigInt> = g
                .iter()
                .enumerate()
                .map(|(i, c)| c * num_traits::pow(lc.clone(), i))
                .collect();
            primitive_part(scaled)
        })
        .collect()
}

fn zassenhaus_monic(f: &[BigInt]) -> Vec<Vec<BigInt>> {
    let n = f.len() - 1;
    let mut choice: Option<(u64, Vec<Vec<u64>>)> = None;
    let mut tried = 0;
    for &p in SMALL_PRIMES.iter() {
        let fp = zp::from_big(f, p);
        if !zp::is_one(&zp::gcd(&fp, &zp::derivative(&fp, p), p)) {
            continue;
        }
        let facs = zp::factor_squarefree(&fp, p);
        if choice.as_ref().is_none_or(|(_, best)| facs.len() < best.len()) {
            choice = Some((p, facs));
        }
        tried += 1;
        if tried >= PRIME_CANDIDATES {
            break;
        }
    }
    let Some((p, modular)) = choice else {
        // Every small prime divides the discriminant; report the input unfactored.
        return vec![f.to_vec()];
    };
    if modular.len() == 1 {
        return vec![f.to_vec()];
    }

    // Any monic factor has coefficients bounded by 2^n * |f|_1.
    let norm1 = f.iter().fold(BigInt::zero(), |acc, c| acc + c.abs());
    let bound = (norm1 << n) * 2 + 1;
    let mut modulus = BigInt::from(p);
    while modulus < bound {
        modulus *= p;
    }
    let lifted = hensel_multi(f, &modular, p, &modulus);
    recombine(f.to_vec(), lifted, &modulus)
}

fn hensel_multi(f: &[BigInt], factors: &[Vec<u64>], p: u64, modulus: &BigInt) -> Vec<Vec<BigInt>> {
    if factors.len() == 1 {
        return vec![zi::reduce(f, modulus)];
    }
    let g = &factors[0];
    let h = factors[1..]
        .iter()
        .fold(vec![1u64], |acc, x| zp::mul(&acc, x, p));
    let (gl, hl) = hensel_pair(f, g, &h, p, modulus);
    let mut out = vec![gl];
    out.extend(hensel_multi(&hl, &factors[1..], p, modulus));
    out
}

/// Lifts `f = g h (mod p)` with monic coprime `g`, `h` to a factorization modulo `modulus`.
fn hensel_pair(
    f: &[BigInt],
    g: &[u64],
    h: &[u64],
    p: u64,
    modulus: &BigInt,
) -> (Vec<BigInt>, Vec<BigInt>) {
    let (_, t) = zp::ext_gcd(g, h, p);
    let pb = BigInt::from(p);
    let mut gl = zi::from_zp(g);
    let mut hl = zi::from_zp(h);
    let mut m = pb.clone();
    while &m < modulus {
        let prod = zi::mul(&gl, &hl);
        let diff = zi::sub(f, &prod);
        let e: Vec<BigInt> = diff.iter().map(|c| c / &m).collect();
        let ep = zp::from_big(&e, p);
        let tau = zp::divrem(&zp::mul(&t, &ep, p), g, p).1;
        let num = zp::sub(&ep, &zp::mul(&tau, h, p), p);
        let (sigma, rem) = zp::divrem(&num, g, p);
        debug_assert!(rem.is_empty());
        gl = zi::add(&gl, &zi::scale(&zi::from_zp(&tau), &m));
        hl = zi::add(&hl, &zi::scale(&zi::from_zp(&sigma), &m));
        m *= &pb;
        gl = zi::reduce(&gl, &m);
        hl = zi::reduce(&hl, &m);
    }
    (gl, hl)
}

fn recombine(mut remaining: Vec<BigInt>, mut lifted: Vec<Vec<BigInt>>, modulus: &BigInt) -> Vec<Vec<BigInt>> {
    let mut out = Vec::new();
    let mut size = 1;
    while 2 * size <= lifted.len() {
        let mut found = None;
        for subset in combinations(lifted.len(), size) {
            let cand = subset
                .iter()
                .fold(vec![BigInt::one()], |acc, &i| zi::reduce(&zi::mul(&acc, &lifted[i]), modulus));
            let cand = zi::symmetric(&cand, modulus);
            if !cand[0].is_zero() && !remaining[0].is_multiple_of(&cand[0]) {
                continue;
            }
            if let Some(q) = zi::exact_div_monic(&remaining, &cand) {
                remaining = q;
                out.push(cand);
                found = Some(subset);
                break;
            }
        }
        match found {
            Some(subset) => {
                for &i in subset.iter().rev() {
                    lifted.remove(i);
                }
            }
            None => size += 1,
        }
    }
    if remaining.len() > 1 {
        out.push(remaining);
    }
    out
}

/// All `k`-subsets of `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(idx.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 && idx[0] == n - k {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Integer polynomial helpers (coefficients lowest first).
mod zi {
    use super::*;

    pub fn from_zp(v: &[u64]) -> Vec<BigInt> {
        v.iter().map(|&c| BigInt::from(c)).collect()
    }

    pub fn trim(mut v: Vec<BigInt>) -> Vec<BigInt> {
        while v.len() > 1 && v.last().is_some_and(Zero::is_zero) {
            v.pop();
        }
        v
    }

    pub fn add(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
        let n = a.len().max(b.len());
        let z = BigInt::zero();
        trim((0..n).map(|i| a.get(i).unwrap_or(&z) + b.get(i).unwrap_or(&z)).collect())
    }

    pub fn sub(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
        let n = a.len().max(b.len());
        let z = BigInt::zero();
        trim((0..n).map(|i| a.get(i).unwrap_or(&z) - b.get(i).unwrap_or(&z)).collect())
    }

    pub fn mul(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
        let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        trim(out)
    }

    pub fn scale(a: &[BigInt], s: &BigInt) -> Vec<BigInt> {
        a.iter().map(|c| c * s).collect()
    }

    pub fn reduce(a: &[BigInt], m: &BigInt) -> Vec<BigInt> {
        trim(a.iter().map(|c| c.mod_floor(m)).collect())
    }

    pub fn symmetric(a: &[BigInt], m: &BigInt) -> Vec<BigInt> {
        let half = m / 2;
        a.iter()
            .map(|c| {
                let r = c.mod_floor(m);
                if r > half {
                    r - m
                } else {
                    r
                }
            })
            .collect()
    }

    /// Quotient of `a` by monic `b` if the division is exact.
    pub fn exact_div_monic(a: &[BigInt], b: &[BigInt]) -> Option<Vec<BigInt>> {
        let db = b.len() - 1;
        if a.len() < b.len() {
            return None;
        }
        debug_assert!(b[db].is_one());
        let mut rem = a.to_vec();
        let mut q = vec![BigInt::zero(); a.len() - db];
        for shift in (0..q.len()).rev() {
            let c = rem[shift + db].clone();
            if !c.is_zero() {
                for (i, bc) in b.iter().enumerate() {
                    rem[shift + i] -= &c * bc;
                }
            }
            q[shift] = c;
        }
        if rem[..db].iter().all(Zero::is_zero) {
            Some(trim(q))
        } else {
            None
        }
    }
}

/// Dense polynomials over the prime field F_p, coefficients lowest first,
/// always trimmed (zero polynomial is empty).
mod zp {
    use super::*;

    pub fn trim(mut v: Vec<u64>) -> Vec<u64> {
        while v.last() == Some(&0) {
            v.pop();
        }
        v
    }

    pub fn is_one(v: &[u64]) -> bool {
        v == [1]
    }

    pub fn from_big(v: &[BigInt], p: u64) -> Vec<u64> {
        let pb = BigInt::from(p);
        trim(
            v.iter()
                .map(|c| c.mod_floor(&pb).to_u64().expect("residue fits"))
                .collect(),
        )
    }

    fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
        let mut r = 1;
        b %= p;
        while e > 0 {
            if e & 1 == 1 {
                r = r * b % p;
            }
            b = b * b % p;
            e >>= 1;
        }
        r
    }

    pub fn inv(a: u64, p: u64) -> u64 {
        pow_mod(a, p - 2, p)
    }

    pub fn sub(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        let n = a.len().max(b.len());
        trim(
            (0..n)
                .map(|i| (a.get(i).unwrap_or(&0) + p - b.get(i).unwrap_or(&0)) % p)
                .collect(),
        )
    }

    pub fn mul(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut out = vec![0u64; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                out[i + j] = (out[i + j] + x * y) % p;
            }
        }
        trim(out)
    }

    pub fn scale(a: &[u64], s: u64, p: u64) -> Vec<u64> {
        trim(a.iter().map(|&c| c * s % p).collect())
    }

    pub fn monic(a: &[u64], p: u64) -> Vec<u64> {
        match a.last() {
            None => Vec::new(),
            Some(&lc) => scale(a, inv(lc, p), p),
        }
    }

    pub fn divrem(a: &[u64], b: &[u64], p: u64) -> (Vec<u64>, Vec<u64>) {
        assert!(!b.is_empty(), "division by zero polynomial");
        if a.len() < b.len() {
            return (Vec::new(), a.to_vec());
        }
        let db = b.len() - 1;
        let lc_inv = inv(b[db], p);
        let mut rem = a.to_vec();
        let mut q = vec![0u64; a.len() - db];
        for shift in (0..q.len()).rev() {
            let c = rem[shift + db] * lc_inv % p;
            if c != 0 {
                for (i, &bc) in b.iter().enumerate() {
                    rem[shift + i] = (rem[shift + i] + p - c * bc % p) % p;
                }
            }
            q[shift] = c;
        }
        rem.truncate(db);
        (trim(q), trim(rem))
    }

    pub fn gcd(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        let mut x = a.to_vec();
        let mut y = b.to_vec();
        while !y.is_empty() {
            let r = divrem(&x, &y, p).1;
            x = y;
            y = r;
        }
        monic(&x, p)
    }

    /// `(s, t)` with `s a + t b = 1` for coprime `a`, `b`.
    pub fn ext_gcd(a: &[u64], b: &[u64], p: u64) -> (Vec<u64>, Vec<u64>) {
        let (mut r0, mut r1) = (a.to_vec(), b.to_vec());
        let (mut s0, mut s1) = (vec![1u64], Vec::new());
        let (mut t0, mut t1) = (Vec::new(), vec![1u64]);
        while !r1.is_empty() {
            let (q, r) = divrem(&r0, &r1, p);
            let s2 = sub(&s0, &mul(&q, &s1, p), p);
            let t2 = sub(&t0, &mul(&q, &t1, p), p);
            r0 = std::mem::replace(&mut r1, r);
            s0 = std::mem::replace(&mut s1, s2);
            t0 = std::mem::replace(&mut t1, t2);
        }
        // r0 is a nonzero constant for coprime inputs.
        let c = inv(r0[0], p);
        (scale(&s0, c, p), scale(&t0, c, p))
    }

    pub fn derivative(a: &[u64], p: u64) -> Vec<u64> {
        trim(
            a.iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| (i as u64 % p) * c % p)
                .collect(),
        )
    }

    fn powmod_poly(base: &[u64], mut e: u128, modulus: &[u64], p: u64) -> Vec<u64> {
        let mut result = vec![1u64];
        let mut b = divrem(base, modulus, p).1;
        while e > 0 {
            if e & 1 == 1 {
                result = divrem(&mul(&result, &b, p), modulus, p).1;
            }
            b = divrem(&mul(&b, &b, p), modulus, p).1;
            e >>= 1;
        }
        result
    }

    /// Monic irreducible factors of a monic square-free polynomial over F_p (p odd).
    pub fn factor_squarefree(f: &[u64], p: u64) -> Vec<Vec<u64>> {
        let mut out = Vec::new();
        let mut rng = 0x9E37_79B9_7F4A_7C15u64;
        for (g, d) in distinct_degree(f, p) {
            equal_degree(&g, d, p, &mut rng, &mut out);
        }
        out
    }

    fn distinct_degree(f: &[u64], p: u64) -> Vec<(Vec<u64>, usize)> {
        let mut out = Vec::new();
        let x = vec![0u64, 1];
        let mut g = monic(f, p);
        let mut h = divrem(&x, &g, p).1;
        let mut d = 0;
        while g.len() > 2 * (d + 1) {
            d += 1;
            h = powmod_poly(&h, p as u128, &g, p);
            let t = gcd(&g, &sub(&h, &x, p), p);
            if t.len() > 1 {
                g = divrem(&g, &t, p).0;
                h = divrem(&h, &g, p).1;
                out.push((t, d));
            }
        }
        if g.len() > 1 {
            let deg = g.len() - 1;
            out.push((g, deg));
        }
        out
    }

    fn next_random(state: &mut u64) -> u64 {
        // xorshift64*
        *state ^= *state >> 12;
        *state ^= *state << 25;
        *state ^= *state >> 27;
        state.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    fn equal_degree(f: &[u64], d: usize, p: u64, rng: &mut u64, out: &mut Vec<Vec<u64>>) {
        let n = f.len() - 1;
        if n == d {
            out.push(monic(f, p));
            return;
        }
        let exponent = (num_traits::pow(p as u128, d) - 1) / 2;
        loop {
            let a: Vec<u64> = trim((0..n).map(|_| next_random(rng) % p).collect());
            if a.len() < 2 {
                continue;
            }
            let mut g = gcd(&a, f, p);
            if g.len() == 1 {
                let b = sub(&powmod_poly(&a, exponent, f, p), &[1], p);
                g = gcd(&b, f, p);
            }
            if g.len() > 1 && g.len() < f.len() {
                let q = divrem(f, &g, p).0;
                equal_degree(&g, d, p, rng, out);
                equal_degree(&q, d, p, rng, out);
                return;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratcore::{rat, rat_int};
    use proptest::prelude::*;

    fn poly(c: &[i64]) -> RatPoly {
        RatPoly::from_i64(c)
    }

    #[test]
    fn small_worked_examples() {
        let f = factor_over_q(&poly(&[4, -6, 1])).unwrap();
        assert_eq!(f.factors, vec![(poly(&[4, -6, 1]), 1)]);

        let f = factor_over_q(&poly(&[-1, 0, 1])).unwrap();
        assert_eq!(f.factors, vec![(poly(&[-1, 1]), 1), (poly(&[1, 1]), 1)]);

        // Synthetic division oracle: (x^2 - 3x + 1)(x - 2) expanded by hand.
        let p = poly(&[-2, 7, -5, 1]);
        assert_eq!(p.divrem(&poly(&[-2, 1])), (poly(&[1, -3, 1]), RatPoly::zero()));
        let f = factor_over_q(&p).unwrap();
        assert_eq!(f.factors, vec![(poly(&[-2, 1]), 1), (poly(&[1, -3, 1]), 1)]);
    }

    #[test]
    fn repeated_factors_and_leading_coefficient() {
        // 3 (x - 2)^2 (x^2 + x + 1)
        let p = &(&poly(&[-2, 1]).pow(2) * &poly(&[1, 1, 1])).scale(&rat_int(3)) * &RatPoly::one();
        let f = factor_over_q(&p).unwrap();
        assert_eq!(f.leading, rat_int(3));
        assert_eq!(f.factors, vec![(poly(&[-2, 1]), 2), (poly(&[1, 1, 1]), 1)]);
        assert_eq!(f.product(), p);
    }

    #[test]
    fn swinnerton_dyer_style_irreducible_quartic() {
        // x^4 - 10x^2 + 1 splits modulo every prime but is irreducible over Q.
        let p = poly(&[1, 0, -10, 0, 1]);
        let f = factor_over_q(&p).unwrap();
        assert!(f.is_irreducible());
    }

    #[test]
    fn quartic_products_need_recombination() {
        // (x^2 - 2)(x^2 - 3)
        let p = &poly(&[-2, 0, 1]) * &poly(&[-3, 0, 1]);
        let f = factor_over_q(&p).unwrap();
        assert_eq!(f.factors, vec![(poly(&[-3, 0, 1]), 1), (poly(&[-2, 0, 1]), 1)]);
    }

    #[test]
    fn non_monic_and_rational_coefficients() {
        // (2x^2 + 3x + 5)(3x^3 - x + 7) / 4
        let p = (&poly(&[5, 3, 2]) * &poly(&[7, -1, 0, 3])).scale(&rat(1, 4));
        let f = factor_over_q(&p).unwrap();
        assert_eq!(f.factors.len(), 2);
        assert_eq!(f.product(), p);
    }

    #[test]
    fn degree_limit_enforced() {
        let p = poly(&[1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1]);
        assert!(matches!(
            factor_over_q(&p),
            Err(RatError::DegreeLimit { degree: 13, .. })
        ));
        assert_eq!(factor_over_q(&RatPoly::zero()), Err(RatError::ZeroPolynomial));
    }

    #[test]
    fn cyclotomic_detection() {
        assert!(is_cyclotomic(&poly(&[-1, 1])));
        assert!(is_cyclotomic(&poly(&[1, 1, 1])));
        assert!(is_cyclotomic(&poly(&[1, -1, 1, -1, 1])));
        assert!(!is_cyclotomic(&poly(&[1, -3, 1])));
        assert!(!is_cyclotomic(&poly(&[-2, 1])));
    }

    const IRREDUCIBLES: &[&[i64]] = &[
        &[-2, 1],
        &[3, 1],
        &[1, 0, 1],
        &[-2, 0, 1],
        &[1, -3, 1],
        &[4, -6, 1],
        &[1, 1, 1],
        &[-2, 0, 0, 1],
        &[1, -1, 0, 1],
        &[1, 0, -10, 0, 1],
        &[5, 1, 0, 0, 1],
    ];

    proptest! {
        #[test]
        fn product_of_irreducibles_roundtrips(picks in proptest::collection::vec(0usize..IRREDUCIBLES.len(), 1..4), lead in 1i64..6) {
            let mut p = RatPoly::constant(rat_int(lead));
            for &i in &picks {
                p = &p * &poly(IRREDUCIBLES[i]);
            }
            prop_assume!(p.degree().unwrap() <= FACTOR_DEGREE_LIMIT);
            let f = factor_over_q(&p).unwrap();
            prop_assert_eq!(f.product(), p);
            let expected: usize = picks.len();
            let got: usize = f.factors.iter().map(|(_, m)| *m).sum();
            prop_assert_eq!(got, expected);
        }
    }
}
