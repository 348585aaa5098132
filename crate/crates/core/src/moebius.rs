//! Möbius function tables and short-interval twisted sums.

use std::io::{Read, Write};

use num_complex::Complex64;
use num_integer::Integer;
use rayon::prelude::*;

use crate::contfrac::{AngleCF, ResidueCursor};
use crate::error::{Error, Result};
use crate::numeric::{e, ComplexKahan};

/// Default memory cap for sieve tables.
pub const DEFAULT_MEM_BUDGET: u64 = 2 << 30;
/// Segment block length.
pub const BLOCK: usize = 1 << 20;
/// Chunk length for parallel summation. Part of the reduction contract:
/// changing it changes the last bits of every sum.
pub const SUM_CHUNK: usize = 1 << 14;

const MAGIC: &[u8; 4] = b"MU01";

/// `μ(n)` for `n` in `lo..=hi`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MuTable {
    lo: u64,
    values: Vec<i8>,
}

impl MuTable {
    pub fn lo(&self) -> u64 {
        self.lo
    }

    pub fn hi(&self) -> u64 {
        self.lo + self.values.len() as u64 - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[i8] {
        &self.values
    }

    pub fn get(&self, n: u64) -> Option<i8> {
        n.checked_sub(self.lo)
            .and_then(|i| self.values.get(i as usize).copied())
    }

    /// `Σ μ(n)` over the table.
    pub fn sum(&self) -> i64 {
        self.values.par_iter().map(|&v| v as i64).sum()
    }

    pub fn squarefree_count(&self) -> u64 {
        self.values.par_iter().filter(|&&v| v != 0).count() as u64
    }

    /// Restriction to `lo..=hi`.
    pub fn slice(&self, lo: u64, hi: u64) -> Option<MuTable> {
        if lo < self.lo || hi > self.hi() || lo > hi {
            return None;
        }
        let a = (lo - self.lo) as usize;
        let b = (hi - self.lo) as usize;
        Some(MuTable {
            lo,
            values: self.values[a..=b].to_vec(),
        })
    }

    /// `"MU01"`, then `N = hi` and `M = len` as little-endian `u64`, then one
    /// `i8` per entry.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&self.hi().to_le_bytes())?;
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        let bytes: Vec<u8> = self.values.iter().map(|&v| v as u8).collect();
        w.write_all(&bytes)?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut head = [0u8; 20];
        r.read_exact(&mut head)?;
        if &head[..4] != MAGIC {
            return Err(Error::Format("missing MU01 magic".into()));
        }
        let n = u64::from_le_bytes(head[4..12].try_into().unwrap());
        let m = u64::from_le_bytes(head[12..20].try_into().unwrap());
        if m == 0 || m > n {
            return Err(Error::Format(format!("bad segment N={n}, M={m}")));
        }
        let mut bytes = vec![0u8; m as usize];
        r.read_exact(&mut bytes)?;
        let values: Vec<i8> = bytes.into_iter().map(|b| b as i8).collect();
        if values.iter().any(|v| !(-1..=1).contains(v)) {
            return Err(Error::Format("entry outside {-1, 0, 1}".into()));
        }
        Ok(Self {
            lo: n - m + 1,
            values,
        })
    }
}

/// Rough upper bound on `π(x)` used for sizing.
fn prime_count_bound(x: u64) -> u64 {
    if x < 17 {
        return 7;
    }
    let xf = x as f64;
    (1.26 * xf / xf.ln()).ceil() as u64
}

pub fn full_sieve_bytes(n: u64) -> u64 {
    2 * n + 4 * prime_count_bound(n)
}

pub fn segment_sieve_bytes(n: u64, m: u64) -> u64 {
    let root = n.isqrt();
    let threads = rayon::current_num_threads() as u64;
    let block = (BLOCK as u64).min(m);
    m + threads * block * 9 + root + 4 * prime_count_bound(root)
}

fn check_budget(required: u64, budget: u64) -> Result<()> {
    if required > budget {
        Err(Error::MemoryBudget { required, budget })
    } else {
        Ok(())
    }
}

/// Linear sieve for `μ` on `[1, n]`.
pub fn sieve_full(n: u64) -> Result<MuTable> {
    sieve_full_with(n, DEFAULT_MEM_BUDGET)
}

pub fn sieve_full_with(n: u64, budget: u64) -> Result<MuTable> {
    if n == 0 {
        return Err(Error::Domain("sieve needs N >= 1".into()));
    }
    check_budget(full_sieve_bytes(n), budget)?;
    let len = n as usize;
    // index i holds μ(i + 1)
    let mut mu = vec![0i8; len];
    let mut composite = vec![false; len + 1];
    let mut primes: Vec<u32> = Vec::new();
    mu[0] = 1;
    for i in 2..=len {
        if !composite[i] {
            primes.push(i as u32);
            mu[i - 1] = -1;
        }
        for &p in &primes {
            let ip = i * p as usize;
            if ip > len {
                break;
            }
            composite[ip] = true;
            if i % p as usize == 0 {
                mu[ip - 1] = 0;
                break;
            }
            mu[ip - 1] = -mu[i - 1];
        }
    }
    Ok(MuTable { lo: 1, values: mu })
}

/// Primes up to `x` by the sieve of Eratosthenes.
pub fn primes_up_to(x: u64) -> Vec<u64> {
    if x < 2 {
        return Vec::new();
    }
    let x = x as usize;
    let mut is = vec![true; x + 1];
    is[0] = false;
    is[1] = false;
    let mut i = 2;
    while i * i <= x {
        if is[i] {
            let mut j = i * i;
            while j <= x {
                is[j] = false;
                j += i;
            }
        }
        i += 1;
    }
    is.iter()
        .enumerate()
        .filter_map(|(i, &p)| p.then_some(i as u64))
        .collect()
}

/// `μ` on `(n − m, n]` from primes up to `√n`.
pub fn sieve_segment(n: u64, m: u64) -> Result<MuTable> {
    sieve_segment_with(n, m, DEFAULT_MEM_BUDGET)
}

pub fn sieve_segment_with(n: u64, m: u64, budget: u64) -> Result<MuTable> {
    if m == 0 || m > n {
        return Err(Error::Domain(format!("segment needs 1 <= M <= N, got N={n}, M={m}")));
    }
    check_budget(segment_sieve_bytes(n, m), budget)?;
    let lo = n - m + 1;
    let primes = primes_up_to(n.isqrt());
    let mut values = vec![0i8; m as usize];
    values
        .par_chunks_mut(BLOCK)
        .enumerate()
        .for_each(|(b, chunk)| {
            let start = lo + (b * BLOCK) as u64;
            sieve_block(start, chunk, &primes);
        });
    Ok(MuTable { lo, values })
}

fn sieve_block(start: u64, out: &mut [i8], primes: &[u64]) {
    let len = out.len() as u64;
    let end = start + len; // exclusive
    let mut rest: Vec<u64> = (start..end).collect();
    out.fill(1);
    for &p in primes {
        let first = start.div_ceil(p) * p;
        let mut j = first;
        while j < end {
            let i = (j - start) as usize;
            out[i] = -out[i];
            rest[i] /= p;
            j += p;
        }
        let p2 = p * p;
        let mut j = start.div_ceil(p2) * p2;
        while j < end {
            out[(j - start) as usize] = 0;
            j += p2;
        }
    }
    for (v, r) in out.iter_mut().zip(rest) {
        // a cofactor left over is a single prime above √N
        if *v != 0 && r > 1 {
            *v = -*v;
        }
    }
}

/// Source of phases `φ(n)` for sums `Σ w(n) e(φ(n))`.
pub trait PhaseSource: Sync {
    type Cursor: PhaseCursor;
    /// Cursor positioned at `n`.
    fn cursor_at(&self, n: u64) -> Self::Cursor;
}

pub trait PhaseCursor {
    /// Phase at the current position.
    fn phase(&self) -> f64;
    /// Move to the next integer.
    fn advance(&mut self);
}

/// `n·s·α`, reduced exactly against the angle's snapshot.
pub struct ExactRotation<'a> {
    pub angle: &'a AngleCF,
    pub step: i64,
}

impl PhaseSource for ExactRotation<'_> {
    type Cursor = ResidueCursor;

    fn cursor_at(&self, n: u64) -> ResidueCursor {
        self.angle.cursor(self.step, n)
    }
}

impl PhaseCursor for ResidueCursor {
    fn phase(&self) -> f64 {
        self.unsigned_f64()
    }

    fn advance(&mut self) {
        ResidueCursor::advance(self)
    }
}

/// `n·α` for a raw float `α`; absolute phase error up to about `n·ulp(α)`.
pub struct FloatRotation {
    pub alpha: f64,
}

pub struct FloatCursor {
    alpha: f64,
    n: u64,
}

impl PhaseSource for FloatRotation {
    type Cursor = FloatCursor;

    fn cursor_at(&self, n: u64) -> FloatCursor {
        FloatCursor {
            alpha: self.alpha,
            n,
        }
    }
}

impl PhaseCursor for FloatCursor {
    fn phase(&self) -> f64 {
        self.alpha * self.n as f64
    }

    fn advance(&mut self) {
        self.n += 1;
    }
}

/// `Σ μ(n) e(φ(n))` over the table, restricted to `n ≡ r (mod q)`.
///
/// The table is cut into [`SUM_CHUNK`]-sized chunks, each chunk is summed
/// left to right with compensation, and the partials are combined in chunk
/// order; the result does not depend on the thread count.
pub fn mu_phase_sum<P: PhaseSource>(mu: &MuTable, q: u64, r: u64, src: &P) -> Complex64 {
    let partials: Vec<Complex64> = mu
        .values
        .par_chunks(SUM_CHUNK)
        .enumerate()
        .map(|(c, chunk)| {
            let start = mu.lo + (c * SUM_CHUNK) as u64;
            let mut cur = src.cursor_at(start);
            let mut acc = ComplexKahan::new();
            for (i, &v) in chunk.iter().enumerate() {
                let n = start + i as u64;
                if v != 0 && (q <= 1 || n % q == r) {
                    let z = e(cur.phase());
                    acc.add(if v > 0 { z } else { -z });
                }
                cur.advance();
            }
            acc.value()
        })
        .collect();
    let mut total = ComplexKahan::new();
    for p in partials {
        total.add(p);
    }
    total.value()
}

/// How `α` is supplied to [`twisted_sum`].
#[derive(Debug, Clone, Copy)]
pub enum Alpha<'a> {
    Exact(&'a AngleCF),
    Float(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwistedSum {
    pub n: u64,
    pub m: u64,
    pub q: u64,
    pub r: u64,
    pub alpha: f64,
    pub value: Complex64,
    pub normalized: f64,
    /// Number of `n` in the segment with `n ≡ r (mod q)`.
    pub count: u64,
}

impl TwistedSum {
    pub fn csv_header() -> &'static str {
        "N,M,q,r,alpha,re,im,norm"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{:e},{:e},{:e},{:e}",
            self.n, self.m, self.q, self.r, self.alpha, self.value.re, self.value.im, self.normalized
        )
    }
}

fn class_count(lo: u64, hi: u64, q: u64, r: u64) -> u64 {
    if q <= 1 {
        return hi - lo + 1;
    }
    // #{n ≤ x : n ≡ r}
    let upto = |x: u64| -> u64 {
        if x < r {
            0
        } else {
            (x - r) / q + 1
        }
    };
    upto(hi) - if lo == 0 { 0 } else { upto(lo - 1) }
}

/// `Σ_{N−M<n≤N, n≡r (q)} μ(n) e(αn)`.
pub fn twisted_sum(n: u64, m: u64, q: u64, r: u64, alpha: Alpha<'_>) -> Result<TwistedSum> {
    let mu = sieve_segment(n, m)?;
    twisted_sum_on(&mu, q, r, alpha)
}

/// [`twisted_sum`] over an existing table.
pub fn twisted_sum_on(mu: &MuTable, q: u64, r: u64, alpha: Alpha<'_>) -> Result<TwistedSum> {
    let q = q.max(1);
    if q > 1 && r.gcd(&q) != 1 {
        return Err(Error::Domain(format!("gcd({r}, {q}) > 1")));
    }
    let r = r % q;
    if let Alpha::Exact(a) = alpha {
        if mu.hi() > a.n_max() {
            return Err(Error::PrecisionViolation {
                n: mu.hi(),
                n_max: a.n_max(),
            });
        }
    }
    let (value, alpha_f) = match alpha {
        Alpha::Exact(a) => (
            mu_phase_sum(mu, q, r, &ExactRotation { angle: a, step: 1 }),
            a.frac_f64(),
        ),
        Alpha::Float(x) => (mu_phase_sum(mu, q, r, &FloatRotation { alpha: x }), x),
    };
    let m = mu.len() as u64;
    Ok(TwistedSum {
        n: mu.hi(),
        m,
        q,
        r,
        alpha: alpha_f,
        value,
        normalized: value.norm() / m as f64,
        count: class_count(mu.lo, mu.hi(), q, r),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_ten() {
        let t = sieve_full(10).unwrap();
        assert_eq!(t.values(), &[1, -1, -1, 0, -1, 1, -1, 0, 0, 1]);
    }

    #[test]
    fn small_segment() {
        let t = sieve_segment(10, 3).unwrap();
        assert_eq!(t.lo(), 8);
        assert_eq!(t.values(), &[0, 0, 1]);
        assert_eq!(sieve_segment(10, 10).unwrap(), sieve_full(10).unwrap());
    }

    #[test]
    fn segment_spanning_blocks() {
        let full = sieve_full(3 * BLOCK as u64).unwrap();
        let n = 3 * BLOCK as u64;
        let seg = sieve_segment(n, 2 * BLOCK as u64 + 17).unwrap();
        assert_eq!(full.slice(seg.lo(), seg.hi()).unwrap(), seg);
    }

    #[test]
    fn budget_refusal_reports_bytes() {
        match sieve_full_with(1000, 10) {
            Err(Error::MemoryBudget { required, budget }) => {
                assert!(required > 10);
                assert_eq!(budget, 10);
            }
            other => panic!("{other:?}"),
        }
        assert!(sieve_segment_with(1000, 10, 10).is_err());
    }

    #[test]
    fn binary_round_trip() {
        let t = sieve_segment(1000, 77).unwrap();
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"MU01");
        assert_eq!(buf.len(), 20 + 77);
        assert_eq!(MuTable::read_from(&buf[..]).unwrap(), t);
        buf[0] = b'X';
        assert!(MuTable::read_from(&buf[..]).is_err());
    }

    #[test]
    fn zero_alpha_gives_mertens_difference() {
        let full = sieve_full(2000).unwrap();
        let s = twisted_sum(2000, 500, 1, 0, Alpha::Float(0.0)).unwrap();
        let diff: i64 = full.values()[1500..].iter().map(|&v| v as i64).sum();
        assert_eq!(s.value.re, diff as f64);
        assert_eq!(s.value.im, 0.0);
    }

    #[test]
    fn single_non_squarefree_point() {
        let s = twisted_sum(8, 1, 1, 0, Alpha::Float(0.3)).unwrap();
        assert_eq!(s.value, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn residue_class_restriction() {
        assert!(twisted_sum(100, 50, 6, 4, Alpha::Float(0.1)).is_err());
        let s = twisted_sum(100, 50, 6, 5, Alpha::Float(0.0)).unwrap();
        let full = sieve_full(100).unwrap();
        let want: i64 = (51..=100u64)
            .filter(|n| n % 6 == 5)
            .map(|n| full.get(n).unwrap() as i64)
            .sum();
        assert_eq!(s.value.re, want as f64);
        assert_eq!(s.count, (51..=100u64).filter(|n| n % 6 == 5).count() as u64);
    }

    #[test]
    fn exact_and_float_phases_agree() {
        let a = AngleCF::explicit(crate::contfrac::PartialQuotients::golden(60)).unwrap();
        let mu = sieve_segment(20_000, 5_000).unwrap();
        let x = twisted_sum_on(&mu, 1, 0, Alpha::Exact(&a)).unwrap();
        let y = twisted_sum_on(&mu, 1, 0, Alpha::Float(a.frac_f64())).unwrap();
        assert!((x.value - y.value).norm() < 1e-8);
    }
}
