//! Frequency classes relative to an angle's convergent denominators, and
//! exact certificates for the Diophantine facts used on them.
//!
//! Band `k` is `q_k ≤ |m| < q_{k+1}`. A frequency is *resonant* when it lies
//! in band `k ≥ 2` and is a multiple of `q_k`; the complement (minus zero) is
//! the *flat* set. For a growth exponent `τ` the multiples of `q_k` split
//! further by whether `q_{k+1} > q_k^{τ/3}` (class M1) or not (M2); all
//! non-multiples are M3.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificate::{Certificate, Witness};
use crate::contfrac::{AngleCF, Tau};
use crate::error::{Error, Result};
use crate::numeric::unsigned_ratio;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FreqClass {
    Zero,
    M1,
    M2,
    M3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpectralClass {
    pub m: i64,
    /// Band index; `0` for `m = 0`.
    pub k: usize,
    pub resonant: bool,
    /// Set by [`classify_tau`].
    pub tau_class: Option<FreqClass>,
}

/// Band lookup over the certified denominators.
#[derive(Debug, Clone)]
pub struct Bands {
    q: Vec<u128>,
}

impl Bands {
    pub fn new(angle: &AngleCF) -> Self {
        Self { q: angle.q_table() }
    }

    /// Exclusive upper limit on `|m|`.
    pub fn limit(&self) -> u128 {
        *self.q.last().unwrap()
    }

    pub fn q(&self, k: usize) -> u128 {
        self.q[k]
    }

    /// Largest `k` with `q_k ≤ x`, for `1 ≤ x < limit`.
    pub fn band(&self, x: u128) -> usize {
        self.q.partition_point(|&q| q <= x) - 1
    }

    fn check(&self, m: i64) -> Result<u128> {
        let a = m.unsigned_abs() as u128;
        if a >= self.limit() {
            return Err(Error::OutOfSnapshot {
                m: m.to_string(),
                limit: self.limit().to_string(),
            });
        }
        Ok(a)
    }
}

/// `q_k ∈ 𝒬^♯`: `k ≥ 1`, `q_k ≠ 1` and `q_{k+1} > q_k^{τ/3}`, decided as
/// `q_{k+1}^{3·den} > q_k^{num}`.
pub fn in_q_sharp(angle: &AngleCF, k: usize, tau: Tau) -> bool {
    if k == 0 || angle.q(k).is_one() {
        return false;
    }
    let third = Tau {
        num: tau.num,
        den: 3 * tau.den,
    };
    third.exceeds_power(angle.q(k + 1), angle.q(k))
}

/// Indices `k` (with `1 ≤ k < k_star`) of the sharp denominators, ascending.
pub fn q_sharp_indices(angle: &AngleCF, tau: Tau) -> Vec<usize> {
    (1..angle.k_star())
        .filter(|&k| in_q_sharp(angle, k, tau))
        .collect()
}

pub fn classify(m: i64, angle: &AngleCF) -> Result<SpectralClass> {
    classify_in(m, &Bands::new(angle))
}

pub fn classify_in(m: i64, bands: &Bands) -> Result<SpectralClass> {
    if m == 0 {
        return Ok(SpectralClass {
            m,
            k: 0,
            resonant: false,
            tau_class: Some(FreqClass::Zero),
        });
    }
    let a = bands.check(m)?;
    let k = bands.band(a);
    Ok(SpectralClass {
        m,
        k,
        resonant: k >= 2 && a % bands.q(k) == 0,
        tau_class: None,
    })
}

pub fn classify_tau(m: i64, angle: &AngleCF, tau: Tau) -> Result<SpectralClass> {
    let mut c = classify(m, angle)?;
    if m == 0 {
        return Ok(c);
    }
    let a = m.unsigned_abs() as u128;
    let qk = angle.q_table()[c.k];
    c.tau_class = Some(if !a.is_multiple_of(qk) {
        FreqClass::M3
    } else if in_q_sharp(angle, c.k, tau) {
        FreqClass::M1
    } else {
        FreqClass::M2
    });
    Ok(c)
}

/// Memoised [`classify_tau`] for repeated lookups against one angle.
#[derive(Debug, Clone)]
pub struct TauClassifier {
    bands: Bands,
    sharp: Vec<bool>,
}

impl TauClassifier {
    pub fn new(angle: &AngleCF, tau: Tau) -> Self {
        let sharp = (0..angle.k_star())
            .map(|k| in_q_sharp(angle, k, tau))
            .collect();
        Self {
            bands: Bands::new(angle),
            sharp,
        }
    }

    pub fn class(&self, m: i64) -> Result<FreqClass> {
        if m == 0 {
            return Ok(FreqClass::Zero);
        }
        let a = self.bands.check(m)?;
        let k = self.bands.band(a);
        Ok(if a % self.bands.q(k) != 0 {
            FreqClass::M3
        } else if self.sharp[k] {
            FreqClass::M1
        } else {
            FreqClass::M2
        })
    }
}

/// Checks `‖mα‖ ≥ 1/(2|m|)`, i.e. `2|m|·|s_m| ≥ q_S`, for every flat `m` with
/// `1 ≤ |m| ≤ m_limit`. Only `m > 0` is scanned: both the set and the
/// distance are symmetric in `m`.
///
/// The flat set includes every `1 ≤ |m| < q_1` and the multiples of `q_1`
/// below `q_2`; the bound can fail there (always at `|m| = 1`, since
/// `‖α‖ < 1/2`). Failures are reported with the worst witness.
pub fn check_flat_lower_bound(angle: &AngleCF, m_limit: u64) -> Result<Certificate> {
    flat_scan(angle, m_limit, 0)
}

/// Same scan restricted to bands `k ≥ min_band`. With `min_band = 2` this
/// is the set `{m : q_k ∤ m}` of bands `k ≥ 2`, plus all non-multiples
/// of lower bands.
pub fn check_flat_lower_bound_from(
    angle: &AngleCF,
    m_limit: u64,
    min_band: usize,
) -> Result<Certificate> {
    flat_scan(angle, m_limit, min_band)
}

fn flat_scan(angle: &AngleCF, m_limit: u64, min_band: usize) -> Result<Certificate> {
    let bands = Bands::new(angle);
    if m_limit as u128 >= bands.limit() {
        return Err(Error::OutOfSnapshot {
            m: m_limit.to_string(),
            limit: bands.limit().to_string(),
        });
    }
    const CHUNK: u64 = 1 << 14;
    let qs = angle.snapshot().q.clone();
    let chunks = m_limit.div_ceil(CHUNK);
    let results: Vec<(u64, bool, Option<(u64, f64)>, Vec<u64>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = 1 + c * CHUNK;
            let hi = (lo + CHUNK - 1).min(m_limit);
            let mut cur = angle.cursor(1, lo);
            let mut k = bands.band(lo as u128);
            let mut checked = 0;
            let mut pass = true;
            let mut worst: Option<(u64, f64)> = None;
            let mut failures = Vec::new();
            for m in lo..=hi {
                while k + 1 < bands.q.len() && m as u128 >= bands.q(k + 1) {
                    k += 1;
                }
                let qk = bands.q(k);
                let multiple = (m as u128).is_multiple_of(qk);
                let resonant = k >= 2 && multiple;
                let skipped = k < min_band && multiple;
                if !resonant && !skipped {
                    checked += 1;
                    let s = cur.dist_numerator();
                    let lhs: BigUint = s * (2 * m);
                    let ok = lhs >= qs;
                    if !ok {
                        pass = false;
                        if failures.len() < 16 {
                            failures.push(m);
                        }
                    }
                    let r = unsigned_ratio(&lhs, &qs);
                    if worst.is_none_or(|(_, w)| r < w) {
                        worst = Some((m, r));
                    }
                }
                cur.advance();
            }
            (checked, pass, worst, failures)
        })
        .collect();
    let mut checked = 0;
    let mut pass = true;
    let mut worst: Option<(u64, f64)> = None;
    let mut failures = Vec::new();
    for (c, p, w, f) in results {
        checked += c;
        pass &= p;
        if let Some((m, r)) = w {
            if worst.is_none_or(|(_, x)| r < x) {
                worst = Some((m, r));
            }
        }
        failures.extend(f);
    }
    failures.truncate(16);
    let scope = if min_band == 0 {
        "m in flat set".to_string()
    } else {
        format!("m in flat set, excluding multiples of q_k for k < {min_band}")
    };
    let mut range = format!("1 <= |m| <= {m_limit}, {scope}");
    if !failures.is_empty() {
        range.push_str(&format!("; failing m: {failures:?}"));
    }
    Ok(Certificate {
        claim: "||m alpha|| >= 1/(2|m|)".into(),
        range,
        pass,
        worst_witness: worst.map(|(m, r)| Witness {
            at: format!("m={m}"),
            ratio: r,
        }),
        exhaustive: true,
        checked,
    })
}

/// Scan limits for [`check_resonant_scaling`].
#[derive(Debug, Clone, Copy)]
pub struct ScalingBudget {
    /// Every `a` up to this bound is checked.
    pub exhaustive: u64,
    /// Samples on a logarithmic grid beyond the exhaustive range.
    pub grid_points: u64,
}

impl Default for ScalingBudget {
    fn default() -> Self {
        Self {
            exhaustive: 1_000_000,
            grid_points: 4096,
        }
    }
}

/// Checks `‖a·q_kα‖ = a·‖q_kα‖` and the premise `a‖q_kα‖ < 1/q_k < 1/2`
/// for `1 ≤ a < q_{k+1}/q_k`.
pub fn check_resonant_scaling(angle: &AngleCF, k: usize) -> Result<Certificate> {
    check_resonant_scaling_with(angle, k, ScalingBudget::default())
}

pub fn check_resonant_scaling_with(
    angle: &AngleCF,
    k: usize,
    budget: ScalingBudget,
) -> Result<Certificate> {
    if k < 1 || k + 1 > angle.k_star() {
        return Err(Error::IndexOutOfRange {
            index: k,
            min: 1,
            max: angle.k_star().saturating_sub(1),
        });
    }
    let qk = angle.q(k).clone();
    let qn = angle.q(k + 1);
    let qs = &angle.snapshot().q;
    // a·q_k < q_{k+1}
    let a_max = (qn - 1u32) / &qk;
    let s = angle.dist_numerator(&BigInt::from(qk.clone()));
    let full = a_max <= BigUint::from(budget.exhaustive);
    let exhaustive_to = if full {
        a_max.to_u64().unwrap()
    } else {
        budget.exhaustive
    };

    let mut pass = true;
    let mut checked = 0u64;
    let mut worst: Option<Witness> = None;
    let mut record = |a: &BigUint, ok: bool, premise_margin: f64| {
        checked += 1;
        pass &= ok;
        if worst.as_ref().is_none_or(|w| premise_margin > w.ratio) || !ok {
            worst = Some(Witness {
                at: format!("a={}", compact(a)),
                ratio: premise_margin,
            });
        }
    };
    let check_one = |a: &BigUint, lhs_dist: &BigUint| -> (bool, f64) {
        let scaled = &s * a;
        let eq = *lhs_dist == scaled;
        let premise = &scaled * &qk < *qs && (&scaled << 1u32) < *qs;
        // a‖q_kα‖ relative to 1/q_k
        (eq && premise, unsigned_ratio(&(&scaled * &qk), qs))
    };

    let step = angle.residue(&BigInt::from(qk.clone()));
    let mut cur = crate::contfrac::ResidueCursor::new(step.clone(), step, qs.clone());
    let mut a = BigUint::one();
    for _ in 0..exhaustive_to {
        let (ok, margin) = check_one(&a, &cur.dist_numerator());
        record(&a, ok, margin);
        cur.advance();
        a += 1u32;
    }
    if !full {
        let lo = (budget.exhaustive as f64).log2();
        let hi_bits = a_max.bits() as f64;
        let n = budget.grid_points.max(2);
        let mut last = BigUint::from(budget.exhaustive);
        for i in 0..=n {
            let t = lo + (hi_bits - lo) * i as f64 / n as f64;
            let mut a = pow2_to_biguint(t).min(a_max.clone());
            if i == n {
                a = a_max.clone();
            }
            if a <= last {
                continue;
            }
            let d = angle.dist_numerator(&(BigInt::from(a.clone()) * BigInt::from(qk.clone())));
            let (ok, margin) = check_one(&a, &d);
            record(&a, ok, margin);
            last = a;
        }
    }
    Ok(Certificate {
        claim: format!("||a q_{k} alpha|| = a ||q_{k} alpha|| and a ||q_{k} alpha|| < 1/q_{k} < 1/2"),
        range: if full {
            format!("1 <= a <= {}", compact(&a_max))
        } else {
            format!(
                "1 <= a <= {} exhaustive, log grid to {}",
                budget.exhaustive,
                compact(&a_max)
            )
        },
        pass,
        worst_witness: worst,
        exhaustive: full,
        checked,
    })
}

/// Decimal form, abbreviated to leading digits and length past 30 digits.
fn compact(x: &BigUint) -> String {
    let s = x.to_string();
    if s.len() <= 30 {
        s
    } else {
        format!("{}...({} digits)", &s[..12], s.len())
    }
}

/// `⌊2^t⌋` for `t ≥ 0`, to 53 significant bits.
fn pow2_to_biguint(t: f64) -> BigUint {
    let whole = t.floor();
    let mant = 2f64.powf(t - whole);
    if whole < 53.0 {
        return BigUint::from((mant * 2f64.powi(whole as i32)) as u64).max(BigUint::one());
    }
    BigUint::from((mant * 2f64.powi(52)) as u64) << (whole as u64 - 52)
}

/// Truncation indices for a given `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationIndex {
    pub n: u64,
    /// Largest `K` with `q_K ≤ 2 ln N`.
    pub k: usize,
    /// Number of sharp denominators below `N`.
    pub k_prime: Option<usize>,
    /// Convergent index of the last sharp denominator below `N`.
    pub k_prime_convergent: Option<usize>,
    /// Whether `N ≤ q̃^+` holds for that denominator.
    pub k_prime_bracketed: Option<bool>,
    pub log_log_n: f64,
}

pub fn truncation_indices(angle: &AngleCF, n: u64, tau: Option<Tau>) -> Result<TruncationIndex> {
    if n < 3 {
        return Err(Error::Domain(format!("N = {n} < 3")));
    }
    let x = 2.0 * (n as f64).ln();
    let cut = x.floor() as u128;
    let qs = angle.q_table();
    let last = *qs.last().unwrap();
    if cut >= last {
        return Err(Error::OutOfSnapshot {
            m: format!("2 ln N = {x}"),
            limit: last.to_string(),
        });
    }
    let k = qs.partition_point(|&q| q <= cut) - 1;
    let (mut k_prime, mut conv, mut bracketed) = (None, None, None);
    if let Some(tau) = tau {
        let sharp = q_sharp_indices(angle, tau);
        let below: Vec<usize> = sharp
            .iter()
            .copied()
            .filter(|&j| qs[j] < n as u128)
            .collect();
        k_prime = Some(below.len());
        if let Some(&j) = below.last() {
            conv = Some(j);
            bracketed = Some((n as u128) <= qs[j + 1]);
        }
        if n as u128 > last && below.len() == sharp.len() {
            return Err(Error::OutOfSnapshot {
                m: n.to_string(),
                limit: last.to_string(),
            });
        }
    }
    Ok(TruncationIndex {
        n,
        k,
        k_prime,
        k_prime_convergent: conv,
        k_prime_bracketed: bracketed,
        log_log_n: (n as f64).ln().ln(),
    })
}

/// Frequencies `m` with `1 ≤ |m| ≤ limit` of the given class, positive side
/// only.
pub fn positive_members(
    angle: &AngleCF,
    tau: Tau,
    class: FreqClass,
    limit: u64,
) -> Result<Vec<u64>> {
    let c = TauClassifier::new(angle, tau);
    let mut out = Vec::new();
    for m in 1..=limit {
        if c.class(m as i64)? == class {
            out.push(m);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contfrac::{build_exp_alpha, build_poly_alpha, PartialQuotients};

    #[test]
    fn resonant_examples() {
        let a = build_exp_alpha(4).unwrap();
        let c = classify(8102, &a).unwrap();
        assert!(c.resonant);
        assert_eq!(c.k, 3);
        assert!(!classify(8103, &a).unwrap().resonant);
        assert!(!classify(4, &a).unwrap().resonant); // band 1
        assert!(classify(-18, &a).unwrap().resonant);
        assert!(classify(0, &a).unwrap().tau_class == Some(FreqClass::Zero));
    }

    #[test]
    fn out_of_snapshot() {
        let a = AngleCF::explicit(PartialQuotients::golden(10)).unwrap();
        // q_10 = 89
        assert!(classify(88, &a).is_ok());
        assert!(matches!(classify(89, &a), Err(Error::OutOfSnapshot { .. })));
    }

    #[test]
    fn tau_classes() {
        let a = build_poly_alpha(Tau::integer(4), 5).unwrap();
        // q: 1, 2, 17, 83523, ...; q_{k+1} ≈ q_k^4 so every q_k ≥ 2 is sharp
        assert!(in_q_sharp(&a, 1, Tau::integer(4)));
        assert!(!in_q_sharp(&a, 0, Tau::integer(4)));
        assert_eq!(classify_tau(17, &a, Tau::integer(4)).unwrap().tau_class, Some(FreqClass::M1));
        assert_eq!(classify_tau(18, &a, Tau::integer(4)).unwrap().tau_class, Some(FreqClass::M3));
        assert_eq!(classify_tau(1, &a, Tau::integer(4)).unwrap().tau_class, Some(FreqClass::M2));
    }

    #[test]
    fn flat_bound_fails_only_in_low_bands() {
        let a = build_exp_alpha(4).unwrap();
        let full = check_flat_lower_bound(&a, 20_000).unwrap();
        assert!(!full.pass);
        assert!(full.range.contains("[1, 2]"), "{}", full.range);
        let proof = check_flat_lower_bound_from(&a, 20_000, 2).unwrap();
        assert!(proof.pass, "{proof:?}");
    }

    #[test]
    fn scaling_small_k() {
        let a = build_exp_alpha(4).unwrap();
        let c = check_resonant_scaling(&a, 2).unwrap();
        assert!(c.pass && c.exhaustive);
        assert_eq!(c.checked, 900);
        assert!(check_resonant_scaling(&a, 4).is_err());
    }

    #[test]
    fn scaling_partial_grid() {
        let a = build_exp_alpha(4).unwrap();
        let c = check_resonant_scaling_with(
            &a,
            3,
            ScalingBudget {
                exhaustive: 1000,
                grid_points: 64,
            },
        )
        .unwrap();
        assert!(c.pass);
        assert!(!c.exhaustive);
    }

    #[test]
    fn truncation_lookup() {
        let a = build_exp_alpha(4).unwrap();
        let t = truncation_indices(&a, 1_000_000, None).unwrap();
        // 2 ln 10^6 ≈ 27.6: q_2 = 9 ≤ 27.6 < q_3 = 8102
        assert_eq!(t.k, 2);
        let wide = AngleCF::explicit(PartialQuotients::from_u64(0, &[50, 3, 4]).unwrap()).unwrap();
        assert_eq!(truncation_indices(&wide, 100, None).unwrap().k, 0);
        let p = build_poly_alpha(Tau::integer(4), 5).unwrap();
        let t = truncation_indices(&p, 1000, Some(Tau::integer(4))).unwrap();
        // sharp: 2, 17, 83523, ...; below 1000: 2 and 17
        assert_eq!(t.k_prime, Some(2));
        assert_eq!(t.k_prime_bracketed, Some(true));
    }
}
