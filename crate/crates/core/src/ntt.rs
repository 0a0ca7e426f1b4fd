//! Exact integer convolution and big-integer multiplication over the
//! Goldilocks prime `q = 2^64 - 2^32 + 1`.
//!
//! A single 64-bit NTT modulus suffices for every convolution this crate
//! performs: operands are packed into 16-bit coefficients, so a convolution
//! coefficient is bounded by `terms * (2^16 - 1)^2 < 2^32 * terms`, which
//! stays below `q` for any transform length up to `2^31`. The transform is
//! the negacyclic form with twiddles stored in bit-reversed order (one shared
//! twiddle per butterfly block, contiguous inner loops); zero-padding to the
//! full product length makes the negacyclic wrap-around vanish, so the result
//! is the exact linear convolution.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigUint;
use rayon::prelude::*;

/// Goldilocks prime: `2^64 - 2^32 + 1`. Its multiplicative group has
/// 2-adicity 32, so power-of-two roots of unity exist up to order `2^32`.
pub const GOLDILOCKS_P: u64 = 0xFFFF_FFFF_0000_0001;

const P: u64 = GOLDILOCKS_P;
/// 2^32 - 1, the reduction constant (`2^64 ≡ 2^32 - 1 mod q`).
const EPSILON: u64 = 0xFFFF_FFFF;
/// Multiplicative generator of the Goldilocks field.
const GENERATOR: u64 = 7;

#[inline(always)]
fn add(a: u64, b: u64) -> u64 {
    // a, b canonical (< P); result canonical.
    let (s, carry) = a.overflowing_add(b);
    if carry || s >= P {
        s.wrapping_sub(P)
    } else {
        s
    }
}

#[inline(always)]
fn sub(a: u64, b: u64) -> u64 {
    let (d, borrow) = a.overflowing_sub(b);
    if borrow {
        d.wrapping_add(P)
    } else {
        d
    }
}

/// Reduce a 128-bit product to a canonical residue.
///
/// Writing `x = lo + 2^64 * (hi_lo + 2^32 * hi_hi)` and using
/// `2^64 ≡ 2^32 - 1`, `2^96 ≡ -1 (mod q)`:
/// `x ≡ lo + hi_lo * (2^32 - 1) - hi_hi`.
#[inline(always)]
fn reduce128(x: u128) -> u64 {
    let lo = x as u64;
    let hi = (x >> 64) as u64;
    let hi_lo = hi & EPSILON;
    let hi_hi = hi >> 32;

    let (mut t, borrow) = lo.overflowing_sub(hi_hi);
    if borrow {
        t = t.wrapping_sub(EPSILON);
    }
    let mid = hi_lo * EPSILON; // < 2^64
    let (mut r, carry) = t.overflowing_add(mid);
    if carry {
        r = r.wrapping_add(EPSILON);
    }
    if r >= P {
        r -= P;
    }
    r
}

#[inline(always)]
fn mul(a: u64, b: u64) -> u64 {
    reduce128(a as u128 * b as u128)
}

fn pow(mut base: u64, mut exp: u64) -> u64 {
    let mut acc = 1u64;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul(acc, base);
        }
        base = mul(base, base);
        exp >>= 1;
    }
    acc
}

fn inverse(a: u64) -> u64 {
    pow(a, P - 2)
}

/// Butterfly blocks below this element count stay single-threaded.
const PAR_CUTOFF: usize = 1 << 15;

/// Precomputed twiddle tables for one transform length `n = 2^log_n`.
pub struct NttPlan {
    log_n: u32,
    /// `psi^bitrev(i)` for the 2n-th root of unity `psi`, `i < n`.
    fwd: Vec<u64>,
    /// `psi^-bitrev(i)`, `i < n`.
    inv: Vec<u64>,
    n_inv: u64,
}

static PLAN_CACHE: OnceLock<Mutex<HashMap<u32, Arc<NttPlan>>>> = OnceLock::new();

impl NttPlan {
    fn build(log_n: u32) -> Self {
        assert!(log_n >= 1 && log_n <= 31, "transform length out of range");
        let n = 1usize << log_n;
        let psi = pow(GENERATOR, (P - 1) >> (log_n + 1));
        debug_assert_eq!(pow(psi, (2 * n) as u64), 1);
        debug_assert_eq!(pow(psi, n as u64), P - 1);
        let psi_inv = inverse(psi);

        let mut fwd = vec![0u64; n];
        let mut inv = vec![0u64; n];
        let mut w = 1u64;
        let mut wi = 1u64;
        let shift = usize::BITS - log_n;
        for i in 0..n {
            let rev = (i.reverse_bits() >> shift) as usize;
            fwd[rev] = w;
            inv[rev] = wi;
            w = mul(w, psi);
            wi = mul(wi, psi_inv);
        }
        NttPlan {
            log_n,
            fwd,
            inv,
            n_inv: inverse(n as u64),
        }
    }

    /// Fetch (building on first use) the shared plan for length `2^log_n`.
    pub fn get(log_n: u32) -> Arc<NttPlan> {
        let cache = PLAN_CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(plan) = cache.lock().unwrap().get(&log_n) {
            return Arc::clone(plan);
        }
        // Build outside the lock; racing builders are harmless.
        let plan = Arc::new(NttPlan::build(log_n));
        let mut guard = cache.lock().unwrap();
        Arc::clone(guard.entry(log_n).or_insert(plan))
    }

    pub fn len(&self) -> usize {
        1 << self.log_n
    }

    /// In-place forward negacyclic NTT; output in bit-reversed order.
    pub fn forward(&self, a: &mut [u64]) {
        let n = self.len();
        assert_eq!(a.len(), n);
        let mut m = 1usize;
        let mut t = n / 2;
        while m < n {
            let tw = &self.fwd[m..2 * m];
            if m >= 2 && m * t >= PAR_CUTOFF {
                a.par_chunks_mut(2 * t).zip(tw.par_iter()).for_each(|(chunk, &s)| {
                    let (lo, hi) = chunk.split_at_mut(t);
                    ct_butterflies(lo, hi, s);
                });
            } else if m == 1 && t >= PAR_CUTOFF {
                let (lo, hi) = a.split_at_mut(t);
                let s = tw[0];
                lo.par_chunks_mut(PAR_CUTOFF)
                    .zip(hi.par_chunks_mut(PAR_CUTOFF))
                    .for_each(|(l, h)| ct_butterflies(l, h, s));
            } else {
                for (chunk, &s) in a.chunks_mut(2 * t).zip(tw.iter()) {
                    let (lo, hi) = chunk.split_at_mut(t);
                    ct_butterflies(lo, hi, s);
                }
            }
            m *= 2;
            t /= 2;
        }
    }

    /// In-place inverse transform; input in bit-reversed order, output natural,
    /// scaled by `n^-1`.
    pub fn inverse(&self, a: &mut [u64]) {
        let n = self.len();
        assert_eq!(a.len(), n);
        let mut m = n;
        let mut t = 1usize;
        while m > 1 {
            let h = m / 2;
            let tw = &self.inv[h..m];
            let last = h == 1;
            let n_inv = self.n_inv;
            let gs = move |lo: &mut [u64], hi: &mut [u64], s: u64| {
                if last {
                    gs_butterflies_scaled(lo, hi, s, n_inv);
                } else {
                    gs_butterflies(lo, hi, s);
                }
            };
            if h >= 2 && h * t >= PAR_CUTOFF {
                a.par_chunks_mut(2 * t).zip(tw.par_iter()).for_each(|(chunk, &s)| {
                    let (lo, hi) = chunk.split_at_mut(t);
                    gs(lo, hi, s);
                });
            } else if h == 1 && t >= PAR_CUTOFF {
                let (lo, hi) = a.split_at_mut(t);
                let s = tw[0];
                lo.par_chunks_mut(PAR_CUTOFF)
                    .zip(hi.par_chunks_mut(PAR_CUTOFF))
                    .for_each(|(l, h2)| gs(l, h2, s));
            } else {
                for (chunk, &s) in a.chunks_mut(2 * t).zip(tw.iter()) {
                    let (lo, hi) = chunk.split_at_mut(t);
                    gs(lo, hi, s);
                }
            }
            m = h;
            t *= 2;
        }
    }
}

#[inline]
fn ct_butterflies(lo: &mut [u64], hi: &mut [u64], s: u64) {
    for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
        let u = *x;
        let v = mul(*y, s);
        *x = add(u, v);
        *y = sub(u, v);
    }
}

#[inline]
fn gs_butterflies(lo: &mut [u64], hi: &mut [u64], s: u64) {
    for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
        let u = *x;
        let v = *y;
        *x = add(u, v);
        *y = mul(sub(u, v), s);
    }
}

#[inline]
fn gs_butterflies_scaled(lo: &mut [u64], hi: &mut [u64], s: u64, n_inv: u64) {
    let s_scaled = mul(s, n_inv);
    for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
        let u = *x;
        let v = *y;
        *x = mul(add(u, v), n_inv);
        *y = mul(sub(u, v), s_scaled);
    }
}

/// Largest number of accumulated terms for which 16-bit packed coefficients
/// cannot overflow the modulus: `terms * (2^16 - 1)^2 < q`.
pub const MAX_PACKED_TERMS: u64 = (P - 1) / (0xFFFF_u64 * 0xFFFF_u64);

/// Exact linear convolution of two nonnegative integer sequences.
///
/// The caller must guarantee every true convolution coefficient is `< q`;
/// with that bound the result is exact (checked in debug builds for the
/// schoolbook path and by the packing bounds for callers in this crate).
pub fn convolve(a: &[u64], b: &[u64]) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let out_len = a.len() + b.len() - 1;
    if out_len <= 512 {
        return convolve_schoolbook(a, b);
    }
    let log_n = usize::BITS - (out_len - 1).leading_zeros();
    let plan = NttPlan::get(log_n);
    let n = plan.len();

    let mut fa = vec![0u64; n];
    fa[..a.len()].copy_from_slice(a);
    let mut fb = vec![0u64; n];
    fb[..b.len()].copy_from_slice(b);

    rayon::join(|| plan.forward(&mut fa), || plan.forward(&mut fb));
    if n >= PAR_CUTOFF {
        fa.par_iter_mut().zip(fb.par_iter()).for_each(|(x, &y)| *x = mul(*x, y));
    } else {
        for (x, &y) in fa.iter_mut().zip(fb.iter()) {
            *x = mul(*x, y);
        }
    }
    plan.inverse(&mut fa);
    fa.truncate(out_len);
    fa
}

fn convolve_schoolbook(a: &[u64], b: &[u64]) -> Vec<u64> {
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            let prod = mul(x, y);
            out[i + j] = add(out[i + j], prod);
        }
    }
    out
}

const PACK_BITS: usize = 16;
const PACK_MASK: u64 = (1 << PACK_BITS) - 1;

fn pack_digits(digits: &[u64]) -> Vec<u64> {
    let mut out = Vec::with_capacity(digits.len() * (64 / PACK_BITS));
    for &d in digits {
        out.push(d & PACK_MASK);
        out.push((d >> 16) & PACK_MASK);
        out.push((d >> 32) & PACK_MASK);
        out.push(d >> 48);
    }
    while out.last() == Some(&0) {
        out.pop();
    }
    out
}

fn unpack_digits(coeffs: &[u64]) -> BigUint {
    // Resolve carries: value = sum coeffs[i] * 2^(16 i). Each coefficient is
    // < 2^63 here, so a u64 carry accumulator never overflows.
    let mut words: Vec<u32> = Vec::with_capacity(coeffs.len() / 2 + 2);
    let mut carry = 0u64;
    let mut half: u32 = 0;
    let mut pos = 0usize;
    while pos < coeffs.len() || carry > 0 {
        if pos < coeffs.len() {
            carry += coeffs[pos];
        }
        let chunk = (carry & PACK_MASK) as u32;
        carry >>= 16;
        if pos % 2 == 0 {
            half = chunk;
        } else {
            words.push(half | (chunk << 16));
            half = 0;
        }
        pos += 1;
    }
    if pos % 2 == 1 {
        words.push(half);
    }
    BigUint::new(words)
}

/// Multiply two big integers through the NTT.
///
/// Always exact for operands up to `2^35` bits (16-bit packing keeps every
/// convolution term below the modulus). Callers normally go through
/// [`mul_auto`], which falls back to `num-bigint` below a size threshold.
pub fn mul_ntt(a: &BigUint, b: &BigUint) -> BigUint {
    use num_traits::Zero;
    if a.is_zero() || b.is_zero() {
        return BigUint::zero();
    }
    let pa = pack_digits(&a.to_u64_digits());
    let pb = pack_digits(&b.to_u64_digits());
    debug_assert!((pa.len().min(pb.len()) as u64) < MAX_PACKED_TERMS);
    let conv = convolve(&pa, &pb);
    unpack_digits(&conv)
}

/// Operand bit size above which multiplication switches from `num-bigint`
/// (schoolbook/Karatsuba/Toom) to the NTT path. Benchmarked default; the
/// crossover on commodity x86 sits near 2^17 bits.
pub const NTT_MUL_THRESHOLD_BITS: u64 = 1 << 17;

/// Product of two big integers: `num-bigint` below the threshold, NTT above.
pub fn mul_auto(a: &BigUint, b: &BigUint) -> BigUint {
    if a.bits().min(b.bits()) >= NTT_MUL_THRESHOLD_BITS {
        mul_ntt(a, b)
    } else {
        a * b
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::{One, Zero};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn generator_has_full_order() {
        // 7 generates the multiplicative group: g^((p-1)/q) != 1 for every
        // prime q dividing p - 1 = 2^32 * 3 * 5 * 17 * 257 * 65537.
        for q in [2u64, 3, 5, 17, 257, 65537] {
            assert_ne!(pow(GENERATOR, (P - 1) / q), 1, "order divides (p-1)/{q}");
        }
        assert_eq!(pow(GENERATOR, P - 1), 1);
    }

    #[test]
    fn reduce128_matches_u128_remainder() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let x: u128 = rng.random();
            assert_eq!(reduce128(x) as u128, x % (P as u128));
        }
        for x in [0u128, 1, P as u128 - 1, P as u128, u128::MAX] {
            assert_eq!(reduce128(x) as u128, x % (P as u128));
        }
    }

    #[test]
    fn roundtrip_identity() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        for log_n in [1u32, 2, 5, 10] {
            let plan = NttPlan::get(log_n);
            let orig: Vec<u64> = (0..plan.len()).map(|_| rng.random_range(0..P)).collect();
            let mut a = orig.clone();
            plan.forward(&mut a);
            plan.inverse(&mut a);
            assert_eq!(a, orig, "log_n={log_n}");
        }
    }

    #[test]
    fn convolution_matches_schoolbook() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for (la, lb) in [(1usize, 1usize), (3, 5), (17, 9), (700, 41), (513, 513)] {
            let a: Vec<u64> = (0..la).map(|_| rng.random_range(0..1u64 << 16)).collect();
            let b: Vec<u64> = (0..lb).map(|_| rng.random_range(0..1u64 << 16)).collect();
            assert_eq!(convolve(&a, &b), convolve_schoolbook(&a, &b), "{la}x{lb}");
        }
    }

    #[test]
    fn ntt_multiplication_matches_num_bigint() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        for bits in [64usize, 1_000, 10_000, 100_000, 1 << 18] {
            let bytes_a: Vec<u8> = (0..bits / 8).map(|_| rng.random()).collect();
            let bytes_b: Vec<u8> = (0..bits / 8).map(|_| rng.random()).collect();
            let a = BigUint::from_bytes_be(&bytes_a);
            let b = BigUint::from_bytes_be(&bytes_b);
            assert_eq!(mul_ntt(&a, &b), &a * &b, "bits={bits}");
        }
    }

    #[test]
    fn ntt_multiplication_edge_cases() {
        let zero = BigUint::zero();
        let one = BigUint::one();
        let big = BigUint::from(u128::MAX);
        assert_eq!(mul_ntt(&zero, &big), zero);
        assert_eq!(mul_ntt(&one, &big), big);
        assert_eq!(mul_auto(&big, &big), &big * &big);
    }
}
