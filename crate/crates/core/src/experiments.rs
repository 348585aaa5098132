//! Correlation sums `S(N, M) = Σ_{N−M<n≤N} μ(n) e(⟨b, Tⁿx⟩)`, sweeps over the
//! short-interval exponent, the rational-angle closed form, and Birkhoff
//! averages along convergent denominators.

use std::time::Instant;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contfrac::AngleKind;
use crate::error::{Error, Result};
use crate::flow::{birkhoff_avgs, pairing, FlowConfig, FrequencyVector, PhaseEngine, TorusPoint};
use crate::moebius::{
    mu_phase_sum, sieve_segment_with, MuTable, PhaseCursor, PhaseSource, DEFAULT_MEM_BUDGET,
};
use crate::numeric::{e, frac, KahanSum};

/// Lower end of the admissible exponent window `5/8 < θ ≤ 1`.
pub const THETA_FLOOR: f64 = 0.625;

pub const DEFAULT_THETAS: [f64; 4] = [0.65, 0.7, 0.8, 1.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRecord {
    pub n: u64,
    pub m: u64,
    pub theta: f64,
    pub b: FrequencyVector,
    pub x: TorusPoint,
    pub s: Complex64,
    pub normalized: f64,
    pub runtime_ms: u64,
}

impl CorrelationRecord {
    pub fn csv_header() -> &'static str {
        "N,M,theta,b,re_S,im_S,norm,runtime_ms"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{:e},{:e},{:e},{}",
            self.n,
            self.m,
            self.theta,
            self.b.label(),
            self.s.re,
            self.s.im,
            self.normalized,
            self.runtime_ms
        )
    }

    /// Inside `5/8 < θ ≤ 1`.
    pub fn in_window(&self) -> bool {
        self.theta > THETA_FLOOR && self.theta <= 1.0
    }
}

pub fn records_csv(records: &[CorrelationRecord]) -> String {
    let mut out = String::from(CorrelationRecord::csv_header());
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// `⌈N^θ⌉`, clamped to `[1, N]`.
pub fn interval_length(n: u64, theta: f64) -> u64 {
    let m = (n as f64).powf(theta).ceil() as u64;
    // guard against powf landing one ulp above an exact integer power
    let m = if m > 1 && ((m - 1) as f64) >= (n as f64).powf(theta) { m - 1 } else { m };
    m.clamp(1, n.max(1))
}

fn record(
    n: u64,
    m: u64,
    theta: f64,
    b: &FrequencyVector,
    x: &TorusPoint,
    s: Complex64,
    started: Instant,
) -> CorrelationRecord {
    CorrelationRecord {
        n,
        m,
        theta,
        b: b.clone(),
        x: x.clone(),
        s,
        normalized: s.norm() / m as f64,
        runtime_ms: started.elapsed().as_millis() as u64,
    }
}

fn theta_of(n: u64, m: u64) -> f64 {
    if n <= 1 {
        1.0
    } else {
        (m as f64).ln() / (n as f64).ln()
    }
}

fn check_pre(cfg: &FlowConfig, b: &FrequencyVector, n: u64, m: u64) -> Result<()> {
    if m == 0 || m > n {
        return Err(Error::Domain(format!("need 1 <= M <= N, got N={n}, M={m}")));
    }
    if n > cfg.alpha.n_max() {
        return Err(Error::PrecisionViolation {
            n,
            n_max: cfg.alpha.n_max(),
        });
    }
    if b.support() > cfg.dim {
        return Err(Error::DimensionMismatch {
            expected: cfg.dim,
            got: b.support(),
        });
    }
    Ok(())
}

/// `S(N, M)` on a precomputed `μ` segment.
pub fn correlation_sum_on(
    cfg: &FlowConfig,
    b: &FrequencyVector,
    x: &TorusPoint,
    mu: &MuTable,
) -> Result<Complex64> {
    let engine = PhaseEngine::new(cfg, b, x)?;
    Ok(e(pairing(b, x)?) * mu_phase_sum(mu, 1, 0, &engine))
}

pub fn correlation_sum(
    cfg: &FlowConfig,
    b: &FrequencyVector,
    x: &TorusPoint,
    n: u64,
    m: u64,
) -> Result<CorrelationRecord> {
    correlation_sum_with(cfg, b, x, n, m, DEFAULT_MEM_BUDGET)
}

pub fn correlation_sum_with(
    cfg: &FlowConfig,
    b: &FrequencyVector,
    x: &TorusPoint,
    n: u64,
    m: u64,
    mem_budget: u64,
) -> Result<CorrelationRecord> {
    let started = Instant::now();
    check_pre(cfg, b, n, m)?;
    let mu = sieve_segment_with(n, m, mem_budget)?;
    let s = correlation_sum_on(cfg, b, x, &mu)?;
    Ok(record(n, m, theta_of(n, m), b, x, s, started))
}

/// One record per `N` with `M = ⌈N^θ⌉`. Records are computed concurrently
/// and returned in the order of `ns`.
pub fn sweep(
    cfg: &FlowConfig,
    b: &FrequencyVector,
    x: &TorusPoint,
    theta: f64,
    ns: &[u64],
) -> Result<Vec<CorrelationRecord>> {
    sweep_with(cfg, b, x, theta, ns, DEFAULT_MEM_BUDGET)
}

pub fn sweep_with(
    cfg: &FlowConfig,
    b: &FrequencyVector,
    x: &TorusPoint,
    theta: f64,
    ns: &[u64],
    mem_budget: u64,
) -> Result<Vec<CorrelationRecord>> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::Domain(format!("theta = {theta} outside (0, 1]")));
    }
    if ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("N list must be strictly ascending".into()));
    }
    if theta <= THETA_FLOOR {
        log::warn!("theta = {theta} is at or below 5/8; running anyway");
    }
    ns.par_iter()
        .map(|&n| {
            let m = interval_length(n, theta);
            let mut r = correlation_sum_with(cfg, b, x, n, m, mem_budget)?;
            r.theta = theta;
            Ok(r)
        })
        .collect()
}

/// Partial and remaining period sums along `t ↦ t + l/q`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodSums {
    /// `γ₁ = Σ_{j<r} h(x₁ + jl/q + (ν−2)β)`.
    pub gamma1: f64,
    /// `γ₂ = Σ_{r≤j<q} h(x₁ + jl/q + (ν−2)β)`.
    pub gamma2: f64,
}

/// `(γ₁, γ₂)` for residue `r` and coordinate `ν`.
pub fn period_sums(cfg: &FlowConfig, l: u64, q: u64, x1: f64, nu: usize, r: u64) -> PeriodSums {
    let off = cfg.offset(nu);
    let (mut g1, mut g2) = (KahanSum::new(), KahanSum::new());
    for j in 0..q {
        let t = frac(x1 + ((j as u128 * l as u128) % q as u128) as f64 / q as f64 + off);
        let v = cfg.h.eval(t);
        if j < r {
            g1.add(v);
        } else {
            g2.add(v);
        }
    }
    PeriodSums {
        gamma1: g1.value(),
        gamma2: g2.value(),
    }
}

/// Phase `n ↦ A_r + s·B` for `n = r + qs`.
struct RationalPhase {
    q: u64,
    offsets: Vec<f64>,
    slope: f64,
}

struct RationalCursor<'a> {
    src: &'a RationalPhase,
    r: u64,
    s: u64,
}

impl<'a> PhaseSource for &'a RationalPhase {
    type Cursor = RationalCursor<'a>;

    fn cursor_at(&self, n: u64) -> RationalCursor<'a> {
        RationalCursor {
            src: self,
            r: n % self.q,
            s: n / self.q,
        }
    }
}

impl PhaseCursor for RationalCursor<'_> {
    fn phase(&self) -> f64 {
        self.src.offsets[self.r as usize] + frac(self.s as f64 * self.src.slope)
    }

    fn advance(&mut self) {
        self.r += 1;
        if self.r == self.src.q {
            self.r = 0;
            self.s += 1;
        }
    }
}

/// `S(N, M)` for a rational angle through the period closed form
/// `Σ_{j<n} h(x₁ + jl/q + c) = γ₁ + (n − r)/q · (γ₁ + γ₂)` on `n ≡ r (mod q)`.
pub fn rational_case(
    cfg: &FlowConfig,
    b: &FrequencyVector,
    x: &TorusPoint,
    n: u64,
    m: u64,
) -> Result<CorrelationRecord> {
    let started = Instant::now();
    check_pre(cfg, b, n, m)?;
    let snap = cfg.alpha.snapshot();
    let q = snap.q.to_u64().filter(|&q| q <= 1 << 24).ok_or_else(|| {
        Error::Domain("rational case needs a denominator below 2^24".into())
    })?;
    let l_signed = snap.l.mod_floor(&BigInt::from(q));
    let l = l_signed.to_u64().unwrap();
    if l.gcd(&q) != 1 {
        return Err(Error::Domain(format!("gcd({l}, {q}) > 1")));
    }
    // only explicit quotient lists are exactly equal to their snapshot
    if cfg.alpha.kind() != AngleKind::Explicit {
        return Err(Error::Domain("rational case needs an explicit rational angle".into()));
    }
    let x1 = x.x(1);
    let support: Vec<(usize, i64)> = (2..=b.support()).map(|nu| (nu, b.b(nu))).filter(|(_, v)| *v != 0).collect();
    let sums: Vec<Vec<PeriodSums>> = (0..q)
        .map(|r| support.iter().map(|&(nu, _)| period_sums(cfg, l, q, x1, nu, r)).collect())
        .collect();
    let slope = {
        let mut acc = KahanSum::new();
        for (&(_, bn), ps) in support.iter().zip(&sums[0]) {
            acc.add(bn as f64 * (ps.gamma1 + ps.gamma2));
        }
        frac(acc.value())
    };
    let b1 = b.b(1).rem_euclid(q as i64) as u128;
    let offsets = (0..q)
        .map(|r| {
            let mut acc = KahanSum::new();
            acc.add(((b1 * r as u128 * l as u128) % q as u128) as f64 / q as f64);
            for (&(_, bn), ps) in support.iter().zip(&sums[r as usize]) {
                acc.add(frac(bn as f64 * ps.gamma1));
            }
            frac(acc.value())
        })
        .collect();
    let src = RationalPhase { q, offsets, slope };
    let mu = sieve_segment_with(n, m, DEFAULT_MEM_BUDGET)?;
    let s = e(pairing(b, x)?) * mu_phase_sum(&mu, 1, 0, &&src);
    Ok(record(n, m, theta_of(n, m), b, x, s, started))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrregularityRow {
    pub n: u64,
    /// `Some(k)` when `N = q_k`, `None` for dyadic `N`.
    pub k: Option<usize>,
    pub avg: Complex64,
    pub modulus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrregularityTable {
    pub rows: Vec<IrregularityRow>,
    /// `max − min` of `Re` averages over the `q_k` rows.
    pub spread_re: f64,
    pub spread_modulus: f64,
}

impl IrregularityTable {
    pub fn csv(&self) -> String {
        let mut out = String::from("N,k,re_avg,im_avg,modulus\n");
        for r in &self.rows {
            let k = r.k.map(|k| k.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{:e},{:e},{:e}\n", r.n, k, r.avg.re, r.avg.im, r.modulus));
        }
        out
    }
}

/// Birkhoff averages at `N = q_k` for `k` in `ks` (those with `q_k ≤ n_cap`)
/// and at powers of two up to the largest such `N`.
pub fn irregularity_demo(
    cfg: &FlowConfig,
    b: &FrequencyVector,
    x: &TorusPoint,
    ks: std::ops::RangeInclusive<usize>,
    n_cap: u64,
) -> Result<IrregularityTable> {
    let mut marks: Vec<(u64, Option<usize>)> = Vec::new();
    for k in ks {
        if k > cfg.alpha.k_star() {
            break;
        }
        match cfg.alpha.q(k).to_u64() {
            Some(q) if q >= 1 && q <= n_cap => marks.push((q, Some(k))),
            _ => break,
        }
    }
    let top = marks.iter().map(|m| m.0).max().unwrap_or(n_cap.min(1 << 10));
    let mut p = 1u64;
    while p <= top {
        if !marks.iter().any(|m| m.0 == p) {
            marks.push((p, None));
        }
        p *= 2;
    }
    marks.sort();
    marks.dedup_by_key(|m| m.0);
    let ns: Vec<u64> = marks.iter().map(|m| m.0).collect();
    let avgs = birkhoff_avgs(cfg, b, x, &ns)?;
    let rows: Vec<IrregularityRow> = marks
        .iter()
        .zip(avgs)
        .map(|(&(n, k), avg)| IrregularityRow {
            n,
            k,
            avg,
            modulus: avg.norm(),
        })
        .collect();
    let spread = |f: &dyn Fn(&IrregularityRow) -> f64| {
        let v: Vec<f64> = rows.iter().filter(|r| r.k.is_some()).map(f).collect();
        if v.is_empty() {
            0.0
        } else {
            v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min)
        }
    };
    let spread_re = spread(&|r| r.avg.re);
    let spread_modulus = spread(&|r| r.modulus);
    Ok(IrregularityTable {
        rows,
        spread_re,
        spread_modulus,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contfrac::{build_exp_alpha, AngleCF, PartialQuotients};
    use crate::harmonic::{analytic_h_sample, FourierSeries};
    use crate::moebius::{twisted_sum_on, Alpha};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn point(seed: u64, dim: usize) -> TorusPoint {
        TorusPoint::random(&mut ChaCha8Rng::seed_from_u64(seed), dim)
    }

    #[test]
    fn interval_lengths() {
        assert_eq!(interval_length(10_000, 1.0), 10_000);
        assert_eq!(interval_length(10_000, 0.5), 100);
        assert_eq!(interval_length(10_000, 0.7), 631);
        assert_eq!(interval_length(1, 0.7), 1);
    }

    #[test]
    fn zero_b_is_mertens_difference() {
        let cfg = FlowConfig::new(build_exp_alpha(4).unwrap(), analytic_h_sample(1.0, 8, 1).unwrap(), 4).unwrap();
        let x = point(3, 4);
        let r = correlation_sum(&cfg, &FrequencyVector::zero(), &x, 20_000, 3_000).unwrap();
        let mu = sieve_segment_with(20_000, 3_000, DEFAULT_MEM_BUDGET).unwrap();
        assert_eq!(r.s, Complex64::new(mu.sum() as f64, 0.0));
    }

    #[test]
    fn zero_h_is_twisted_sum() {
        let a = build_exp_alpha(4).unwrap();
        let cfg = FlowConfig::new(a.clone(), FourierSeries::zero(), 3).unwrap();
        let x = point(4, 3);
        let b = FrequencyVector::unit(1);
        let r = correlation_sum(&cfg, &b, &x, 50_000, 40_000).unwrap();
        let mu = sieve_segment_with(50_000, 40_000, DEFAULT_MEM_BUDGET).unwrap();
        let t = twisted_sum_on(&mu, 1, 0, Alpha::Exact(&a)).unwrap();
        assert_eq!(r.s, e(x.x(1)) * t.value);
    }

    #[test]
    fn rational_matches_generic() {
        let h = analytic_h_sample(0.8, 6, 2).unwrap();
        for (l, q) in [(0u64, 1u64), (1, 2), (2, 5), (5, 7)] {
            let a = AngleCF::rational(l as i64, q).unwrap();
            let cfg = FlowConfig::new(a, h.clone(), 4).unwrap();
            let x = point(l + q, 4);
            let b = FrequencyVector::new(vec![1, 2, -1, 1]);
            let g = correlation_sum(&cfg, &b, &x, 30_000, 5_000).unwrap();
            let r = rational_case(&cfg, &b, &x, 30_000, 5_000).unwrap();
            assert!((g.s - r.s).norm() / 5_000.0 < 1e-9, "l/q={l}/{q}: {} vs {}", g.s, r.s);
        }
    }

    #[test]
    fn gammas_partition_period() {
        let a = AngleCF::rational(3, 7).unwrap();
        let cfg = FlowConfig::new(a, analytic_h_sample(0.5, 5, 9).unwrap(), 3).unwrap();
        let total = period_sums(&cfg, 3, 7, 0.4, 3, 0);
        for r in 0..7 {
            let p = period_sums(&cfg, 3, 7, 0.4, 3, r);
            assert!((p.gamma1 + p.gamma2 - total.gamma2).abs() < 1e-13);
        }
    }

    #[test]
    fn sweep_shapes() {
        let cfg = FlowConfig::new(
            AngleCF::explicit(PartialQuotients::golden(50)).unwrap(),
            analytic_h_sample(1.0, 4, 1).unwrap(),
            3,
        )
        .unwrap();
        let x = point(1, 3);
        let b = FrequencyVector::unit(2);
        let rs = sweep(&cfg, &b, &x, 1.0, &[1_000, 5_000]).unwrap();
        assert_eq!(rs.len(), 2);
        assert!(rs.iter().all(|r| r.m == r.n && r.normalized <= 1.0));
        assert_eq!(sweep(&cfg, &b, &x, 0.7, &[4_000]).unwrap().len(), 1);
        assert!(sweep(&cfg, &b, &x, 0.0, &[4_000]).is_err());
        let csv = records_csv(&rs);
        assert!(csv.starts_with("N,M,theta,b,re_S,im_S,norm,runtime_ms\n"));
    }

    #[test]
    fn irregularity_rows() {
        let a = build_exp_alpha(4).unwrap();
        let h = crate::harmonic::furstenberg_default(&a, 2).unwrap();
        let cfg = FlowConfig::new(a, h, 2).unwrap();
        let t = irregularity_demo(&cfg, &FrequencyVector::unit(2), &point(5, 2), 1..=4, 10_000).unwrap();
        assert!(t.rows.iter().any(|r| r.k == Some(3)));
        assert!(t.rows.iter().all(|r| r.modulus <= 1.0 + 1e-12));
        assert_eq!(t.csv().lines().count(), t.rows.len() + 1);
    }
}
