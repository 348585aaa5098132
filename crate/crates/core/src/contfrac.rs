//! Arbitrary-precision continued fractions.
//!
//! An angle is carried as a list of partial quotients together with an exact
//! rational snapshot `l_S/q_S`. Every mod-1 quantity `{nα}` the rest of the
//! crate touches is reduced exactly against that snapshot with big-integer
//! arithmetic before any conversion to `f64`.
//!
//! Built angles (`Exp`, `Poly`) certify their growth law on convergents
//! `0..=k_star` and append one extra *tail* quotient, so the snapshot is the
//! convergent at `k_star + 1`. This keeps the two-sided bound
//! `1/(2q_{k+1}) < ‖q_kα‖ < 1/q_{k+1}` strict for every `k < k_star`: a
//! snapshot taken at `k_star` itself would make `‖q_{k_star−1}α‖` equal
//! `1/q_{k_star}` exactly. The tail is the smallest quotient `≥ 2` that lifts
//! `q_S` above the precision floor.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::certificate::{Certificate, Witness};
use crate::error::{Error, Result};
use crate::numeric::{ratio_to_f64, unsigned_ratio};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialQuotients {
    pub a0: BigInt,
    /// `a_1, a_2, …`, all positive.
    pub quotients: Vec<BigUint>,
}

impl PartialQuotients {
    pub fn new(a0: BigInt, quotients: Vec<BigUint>) -> Result<Self> {
        if let Some(i) = quotients.iter().position(|a| a.is_zero()) {
            return Err(Error::InvalidQuotient { index: i + 1 });
        }
        Ok(Self { a0, quotients })
    }

    pub fn from_u64(a0: i64, quotients: &[u64]) -> Result<Self> {
        Self::new(
            BigInt::from(a0),
            quotients.iter().map(|&a| BigUint::from(a)).collect(),
        )
    }

    /// `[0; 1, 1, …, 1]` with `len` ones: the golden-ratio conjugate.
    pub fn golden(len: usize) -> Self {
        Self {
            a0: BigInt::zero(),
            quotients: vec![BigUint::one(); len],
        }
    }

    /// Euclid's algorithm on `l/q`.
    pub fn of_rational(l: &BigInt, q: &BigUint) -> Result<Self> {
        if q.is_zero() {
            return Err(Error::Domain("zero denominator".into()));
        }
        let q = BigInt::from(q.clone());
        let (a0, mut r) = l.div_mod_floor(&q);
        let mut d = q;
        let mut quotients = Vec::new();
        while !r.is_zero() {
            let (a, rem) = d.div_mod_floor(&r);
            quotients.push(a.to_biguint().expect("positive quotient"));
            d = r;
            r = rem;
        }
        Ok(Self { a0, quotients })
    }

    pub fn len(&self) -> usize {
        self.quotients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quotients.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Convergent {
    pub k: usize,
    pub l: BigInt,
    pub q: BigUint,
}

/// Convergents `0..=k_max` by the three-term recurrence.
pub fn convergents(pq: &PartialQuotients, k_max: usize) -> Result<Vec<Convergent>> {
    if k_max > pq.len() {
        return Err(Error::InputExhausted {
            requested: k_max,
            available: pq.len(),
        });
    }
    let mut out = Vec::with_capacity(k_max + 1);
    let (mut l_prev, mut q_prev) = (BigInt::one(), BigUint::zero());
    let (mut l_cur, mut q_cur) = (pq.a0.clone(), BigUint::one());
    out.push(Convergent {
        k: 0,
        l: l_cur.clone(),
        q: q_cur.clone(),
    });
    for (i, a) in pq.quotients.iter().take(k_max).enumerate() {
        let l_next = BigInt::from(a.clone()) * &l_cur + &l_prev;
        let q_next = a * &q_cur + &q_prev;
        l_prev = std::mem::replace(&mut l_cur, l_next);
        q_prev = std::mem::replace(&mut q_cur, q_next);
        out.push(Convergent {
            k: i + 1,
            l: l_cur.clone(),
            q: q_cur.clone(),
        });
    }
    Ok(out)
}

/// A rational exponent `num/den`, kept exact so set memberships such as
/// `q_{k+1} > q_k^{τ/3}` reduce to integer comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tau {
    pub num: u32,
    pub den: u32,
}

impl Tau {
    pub fn new(num: u32, den: u32) -> Result<Self> {
        if den == 0 || num == 0 {
            return Err(Error::Domain(format!("invalid exponent {num}/{den}")));
        }
        let g = num.gcd(&den);
        Ok(Self {
            num: num / g,
            den: den / g,
        })
    }

    pub fn integer(v: u32) -> Self {
        Self { num: v, den: 1 }
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Exact test `a > b^{τ}` for nonnegative integers.
    pub fn exceeds_power(&self, a: &BigUint, b: &BigUint) -> bool {
        a.pow(self.den) > b.pow(self.num)
    }
}

impl fmt::Display for Tau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for Tau {
    type Err = Error;

    /// Accepts `"4"`, `"10/3"` or a finite decimal such as `"3.5"`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Domain(format!("cannot parse exponent {s:?}"));
        if let Some((n, d)) = s.split_once('/') {
            let n: u32 = n.trim().parse().map_err(|_| bad())?;
            let d: u32 = d.trim().parse().map_err(|_| bad())?;
            return Tau::new(n, d);
        }
        if let Some((int, dec)) = s.split_once('.') {
            if dec.len() > 6 || dec.is_empty() {
                return Err(bad());
            }
            let den = 10u32.pow(dec.len() as u32);
            let i: u32 = int.parse().map_err(|_| bad())?;
            let d: u32 = dec.parse().map_err(|_| bad())?;
            return Tau::new(i * den + d, den);
        }
        Ok(Tau::integer(s.parse().map_err(|_| bad())?))
    }
}

impl Serialize for Tau {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Tau {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AngleKind {
    /// `q_{k+1} ≍ e^{q_k}`.
    Exp,
    /// `q_{k+1} ≤ 2 q_k^τ`.
    Poly { tau: Tau },
    /// User-supplied quotients; the snapshot is the last convergent.
    Explicit,
}

impl AngleKind {
    pub fn name(&self) -> &'static str {
        match self {
            AngleKind::Exp => "exp",
            AngleKind::Poly { .. } => "poly",
            AngleKind::Explicit => "explicit",
        }
    }
}

/// `q_S > n_max · m_max · 2^60` is required of every built angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrecisionFloor {
    pub n_max: u64,
    pub m_max: u64,
}

impl Default for PrecisionFloor {
    fn default() -> Self {
        Self {
            n_max: 1_000_000_000,
            m_max: 1_000_000,
        }
    }
}

impl PrecisionFloor {
    pub fn value(&self) -> BigUint {
        (BigUint::from(self.n_max) * BigUint::from(self.m_max)) << 60u32
    }
}

#[derive(Debug, Clone)]
pub struct BuildOptions {
    /// `a_1 = q_1`.
    pub seed_q1: u64,
    pub floor: PrecisionFloor,
    /// Largest `q_k` for which `e^{q_k}` is evaluated; beyond it the next
    /// denominator would not fit in memory.
    pub max_exp_argument: u64,
    /// Minimum relative precision, in decimal digits, of every `e^{q_k}`.
    pub exp_digits: u32,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            seed_q1: 2,
            floor: PrecisionFloor::default(),
            max_exp_argument: 1 << 16,
            exp_digits: 200,
        }
    }
}

/// Construction-time record for one step of the growth law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthRecord {
    pub k: usize,
    /// `q_{k+1}/e^{q_k}` for exp-type, `q_{k+1}/q_k^τ` for poly-type.
    pub ratio: f64,
    pub within: bool,
}

/// An irrational angle represented by partial quotients, convergents and an
/// exact rational snapshot.
#[derive(Debug, Clone)]
pub struct AngleCF {
    kind: AngleKind,
    pq: PartialQuotients,
    /// Convergents `0..=snapshot_index`.
    convergents: Vec<Convergent>,
    k_star: usize,
    snapshot: Convergent,
    /// `l_S mod q_S`.
    l_mod: BigUint,
    n_max: u64,
    growth: Vec<GrowthRecord>,
}

impl AngleCF {
    /// The rational angle with exactly these quotients.
    pub fn explicit(pq: PartialQuotients) -> Result<Self> {
        let k = pq.len();
        let convergents = convergents(&pq, k)?;
        let snapshot = convergents[k].clone();
        Ok(Self {
            kind: AngleKind::Explicit,
            pq,
            convergents,
            k_star: k,
            l_mod: reduce_numerator(&snapshot),
            snapshot,
            n_max: u64::MAX,
            growth: Vec::new(),
        })
    }

    /// `l/q` as an angle. The fraction does not need to be reduced.
    pub fn rational(l: i64, q: u64) -> Result<Self> {
        Self::explicit(PartialQuotients::of_rational(
            &BigInt::from(l),
            &BigUint::from(q),
        )?)
    }

    fn built(
        kind: AngleKind,
        mut pq: PartialQuotients,
        k_star: usize,
        floor: &PrecisionFloor,
        growth: Vec<GrowthRecord>,
    ) -> Result<Self> {
        let certified = convergents(&pq, k_star)?;
        let q_k = &certified[k_star].q;
        let q_km1 = &certified[k_star - 1].q;
        let target = floor.value();
        let mut tail = BigUint::from(2u32);
        if target > *q_km1 {
            let need = (&target - q_km1) / q_k + 1u32;
            if need > tail {
                tail = need;
            }
        }
        pq.quotients.truncate(k_star);
        pq.quotients.push(tail);
        let convergents = convergents(&pq, k_star + 1)?;
        let snapshot = convergents[k_star + 1].clone();
        Ok(Self {
            kind,
            pq,
            convergents,
            k_star,
            l_mod: reduce_numerator(&snapshot),
            snapshot,
            n_max: floor.n_max,
            growth,
        })
    }

    pub fn kind(&self) -> AngleKind {
        self.kind
    }

    pub fn quotients(&self) -> &PartialQuotients {
        &self.pq
    }

    pub fn k_star(&self) -> usize {
        self.k_star
    }

    pub fn n_max(&self) -> u64 {
        self.n_max
    }

    pub fn growth(&self) -> &[GrowthRecord] {
        &self.growth
    }

    pub fn snapshot(&self) -> &Convergent {
        &self.snapshot
    }

    /// Convergents `0..=k_star` (the certified range).
    pub fn convergents(&self) -> &[Convergent] {
        &self.convergents[..=self.k_star]
    }

    pub fn q(&self, k: usize) -> &BigUint {
        &self.convergents[k].q
    }

    pub fn l(&self, k: usize) -> &BigInt {
        &self.convergents[k].l
    }

    /// `q_k` as `u64` when it fits.
    pub fn q_u64(&self, k: usize) -> Option<u64> {
        self.convergents.get(k).and_then(|c| c.q.to_u64())
    }

    /// Denominators of the certified range saturated to `u128`.
    pub fn q_table(&self) -> Vec<u128> {
        self.convergents()
            .iter()
            .map(|c| c.q.to_u128().unwrap_or(u128::MAX))
            .collect()
    }

    /// `α = l_j/q_j + δ` for the largest convergent with `q_j < 2^63`.
    pub fn split(&self) -> SplitAngle {
        let c = self
            .convergents
            .iter()
            .rev()
            .find(|c| c.q.bits() < 64 && c.q.to_u64().is_some_and(|q| q < 1 << 63))
            .expect("q_0 = 1");
        let qj = c.q.to_u64().unwrap() as u128;
        let lj = c.l.mod_floor(&BigInt::from(qj)).to_u128().unwrap();
        let num = &self.snapshot.l * BigInt::from(qj) - &c.l * BigInt::from(self.snapshot.q.clone());
        SplitAngle {
            l: lj,
            q: qj,
            delta: ratio_to_f64(&num, &(&self.snapshot.q * qj)),
        }
    }

    /// `m·l_S mod q_S` in `[0, q_S)`.
    pub fn residue(&self, m: &BigInt) -> BigUint {
        let q = &self.snapshot.q;
        let r = (m.magnitude() * &self.l_mod) % q;
        if m.sign() == Sign::Minus && !r.is_zero() {
            q - r
        } else {
            r
        }
    }

    /// [`AngleCF::residue`] for a machine integer.
    pub fn residue_i64(&self, m: i64) -> BigUint {
        let q = &self.snapshot.q;
        let r = (&self.l_mod * m.unsigned_abs()) % q;
        if m < 0 && !r.is_zero() {
            q - r
        } else {
            r
        }
    }

    /// Signed residue of `mα` in `(−q_S/2, q_S/2]`.
    pub fn signed_residue(&self, m: &BigInt) -> BigInt {
        signed(self.residue(m), &self.snapshot.q)
    }

    /// Numerator of `‖mα‖ = |s|/q_S`.
    pub fn dist_numerator(&self, m: &BigInt) -> BigUint {
        self.signed_residue(m).magnitude().clone()
    }

    /// `{mα}` as a signed `f64` in `[−1/2, 1/2]`, relative precision kept.
    pub fn signed_phase(&self, m: i64) -> f64 {
        ratio_to_f64(&signed(self.residue_i64(m), &self.snapshot.q), &self.snapshot.q)
    }

    /// `‖mα‖` as `f64`.
    pub fn dist_f64(&self, m: i64) -> f64 {
        self.signed_phase(m).abs()
    }

    /// Fractional part of `α` itself.
    pub fn frac_f64(&self) -> f64 {
        unsigned_ratio(&self.residue(&BigInt::one()), &self.snapshot.q)
    }

    /// Cursor over `start·step·α, (start+1)·step·α, …` mod 1.
    pub fn cursor(&self, step: i64, start: u64) -> ResidueCursor {
        let step_res = self.residue(&BigInt::from(step));
        let value = self.residue(&(BigInt::from(step) * BigInt::from(start)));
        ResidueCursor::new(value, step_res, self.snapshot.q.clone())
    }

    /// Exact check that the stored snapshot is the recurrence's convergent.
    pub fn snapshot_consistent(&self) -> bool {
        self.convergents.last() == Some(&self.snapshot)
    }

    pub fn to_document(&self) -> AngleDocument {
        AngleDocument {
            kind: self.kind.name().to_string(),
            tau: match self.kind {
                AngleKind::Poly { tau } => Some(tau),
                _ => None,
            },
            a0: self.pq.a0.to_string(),
            quotients: self.pq.quotients.iter().map(|a| a.to_string()).collect(),
            k_star: self.k_star,
            n_max: self.n_max,
            snapshot: SnapshotDoc {
                l: self.snapshot.l.to_string(),
                q: self.snapshot.q.to_string(),
            },
            growth: self.growth.clone(),
        }
    }

    /// Rebuilds an angle from its document. The snapshot is taken from the
    /// document as written; [`AngleCF::snapshot_consistent`] reports
    /// whether it matches the quotients.
    pub fn from_document(doc: &AngleDocument) -> Result<Self> {
        let kind = match (doc.kind.as_str(), doc.tau) {
            ("exp", _) => AngleKind::Exp,
            ("poly", Some(tau)) => AngleKind::Poly { tau },
            ("poly", None) => return Err(Error::Format("poly angle without tau".into())),
            ("explicit", _) => AngleKind::Explicit,
            (other, _) => return Err(Error::Format(format!("unknown angle kind {other:?}"))),
        };
        let parse_u = |s: &str| {
            BigUint::from_str(s).map_err(|_| Error::Format(format!("bad integer {s:?}")))
        };
        let a0 = BigInt::from_str(&doc.a0)
            .map_err(|_| Error::Format(format!("bad integer {:?}", doc.a0)))?;
        let quotients = doc
            .quotients
            .iter()
            .map(|s| parse_u(s))
            .collect::<Result<Vec<_>>>()?;
        let pq = PartialQuotients::new(a0, quotients)?;
        let expected = match kind {
            AngleKind::Explicit => doc.k_star,
            _ => doc.k_star + 1,
        };
        if pq.len() != expected {
            return Err(Error::Format(format!(
                "{} quotients for k_star = {} (expected {expected})",
                pq.len(),
                doc.k_star
            )));
        }
        let convergents = convergents(&pq, expected)?;
        let l = BigInt::from_str(&doc.snapshot.l)
            .map_err(|_| Error::Format("bad snapshot numerator".into()))?;
        let q = parse_u(&doc.snapshot.q)?;
        if q.is_zero() {
            return Err(Error::Format("zero snapshot denominator".into()));
        }
        Ok(Self {
            kind,
            pq,
            convergents,
            k_star: doc.k_star,
            l_mod: reduce_numerator(&Convergent { k: expected, l: l.clone(), q: q.clone() }),
            snapshot: Convergent { k: expected, l, q },
            n_max: doc.n_max,
            growth: doc.growth.clone(),
        })
    }
}

fn reduce_numerator(c: &Convergent) -> BigUint {
    c.l.mod_floor(&BigInt::from(c.q.clone()))
        .to_biguint()
        .expect("nonnegative residue")
}

fn signed(r: BigUint, q: &BigUint) -> BigInt {
    if r > (q >> 1u32) {
        BigInt::from_biguint(Sign::Minus, q - r)
    } else {
        BigInt::from(r)
    }
}

/// Serialized form of an [`AngleCF`]; integers are decimal strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleDocument {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<Tau>,
    #[serde(default = "zero_string")]
    pub a0: String,
    pub quotients: Vec<String>,
    pub k_star: usize,
    #[serde(default = "max_n")]
    pub n_max: u64,
    pub snapshot: SnapshotDoc,
    #[serde(default)]
    pub growth: Vec<GrowthRecord>,
}

fn zero_string() -> String {
    "0".into()
}

fn max_n() -> u64 {
    u64::MAX
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotDoc {
    pub l: String,
    pub q: String,
}

/// Exact split of the snapshot into a machine-size convergent and a rounded
/// remainder. Phases of integers below `2^64` come out within a few ulps of
/// the exact residue at the cost of two `u128` remainders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitAngle {
    l: u128,
    q: u128,
    delta: f64,
}

impl SplitAngle {
    /// `{mα}` in `[0, 1)`.
    pub fn phase(&self, m: u128) -> f64 {
        crate::numeric::frac(self.raw(m))
    }

    /// Signed `{mα}`.
    pub fn signed_phase(&self, m: u128) -> f64 {
        crate::numeric::signed_frac(self.raw(m))
    }

    fn raw(&self, m: u128) -> f64 {
        let r = ((m % self.q) * self.l) % self.q;
        r as f64 / self.q as f64 + m as f64 * self.delta
    }
}

/// Running residue `value ≡ n·step (mod q)` advanced by one addition and at
/// most one subtraction per step.
#[derive(Debug, Clone)]
pub struct ResidueCursor {
    value: BigUint,
    step: BigUint,
    modulus: BigUint,
    half: BigUint,
}

impl ResidueCursor {
    pub fn new(value: BigUint, step: BigUint, modulus: BigUint) -> Self {
        let half = &modulus >> 1u32;
        Self {
            value,
            step,
            modulus,
            half,
        }
    }

    pub fn advance(&mut self) {
        self.value += &self.step;
        if self.value >= self.modulus {
            self.value -= &self.modulus;
        }
    }

    pub fn value(&self) -> &BigUint {
        &self.value
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    /// Current residue as a fraction in `[0, 1)`.
    pub fn unsigned_f64(&self) -> f64 {
        unsigned_ratio(&self.value, &self.modulus)
    }

    /// Current residue as a signed fraction in `[−1/2, 1/2]`.
    pub fn signed_f64(&self) -> f64 {
        if self.value > self.half {
            -unsigned_ratio(&(&self.modulus - &self.value), &self.modulus)
        } else {
            unsigned_ratio(&self.value, &self.modulus)
        }
    }

    /// Numerator of the distance to the nearest integer.
    pub fn dist_numerator(&self) -> BigUint {
        if self.value > self.half {
            &self.modulus - &self.value
        } else {
            self.value.clone()
        }
    }
}

/// `{nα}` for `0 ≤ n ≤ N_max`, reduced exactly then rounded to `f64`.
pub fn frac_mod1(n: u64, angle: &AngleCF) -> Result<f64> {
    if n > angle.n_max {
        return Err(Error::PrecisionViolation {
            n,
            n_max: angle.n_max,
        });
    }
    Ok(unsigned_ratio(
        &angle.residue(&BigInt::from(n)),
        &angle.snapshot.q,
    ))
}

/// `‖x‖`, the distance to the nearest integer.
pub fn dist_to_int(x: f64) -> f64 {
    // on |x| so that x and −x give identical results
    let a = x.abs();
    (a - a.round()).abs()
}

/// Exact certificate for `1/(2q_{k+1}) < ‖q_kα‖ < 1/q_{k+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergentBound {
    pub k: usize,
    /// `‖q_kα‖ = dist_num / snapshot_q`.
    pub dist_num: BigUint,
    pub snapshot_q: BigUint,
    pub q_next: BigUint,
    pub lower_ok: bool,
    pub upper_ok: bool,
}

impl ConvergentBound {
    pub fn pass(&self) -> bool {
        self.lower_ok && self.upper_ok
    }

    /// `‖q_kα‖·q_{k+1}`, which must lie in `(1/2, 1)`.
    pub fn scaled(&self) -> f64 {
        unsigned_ratio(&(&self.dist_num * &self.q_next), &self.snapshot_q)
    }
}

pub fn check_convergent_bounds(angle: &AngleCF, k: usize) -> Result<ConvergentBound> {
    if k < 1 || k + 1 > angle.k_star {
        return Err(Error::IndexOutOfRange {
            index: k,
            min: 1,
            max: angle.k_star.saturating_sub(1),
        });
    }
    let q_k = BigInt::from(angle.q(k).clone());
    let s = angle.dist_numerator(&q_k);
    let qs = &angle.snapshot.q;
    let q_next = angle.q(k + 1).clone();
    let lower_ok = *qs < (&q_next * &s) << 1u32;
    let upper_ok = &s * &q_next < *qs;
    Ok(ConvergentBound {
        k,
        dist_num: s,
        snapshot_q: qs.clone(),
        q_next,
        lower_ok,
        upper_ok,
    })
}

/// Runs [`check_convergent_bounds`] over `1 ≤ k < k_star`.
pub fn certify_convergent_bounds(angle: &AngleCF) -> Certificate {
    let mut pass = true;
    let mut worst: Option<Witness> = None;
    let mut checked = 0;
    for k in 1..angle.k_star {
        let c = check_convergent_bounds(angle, k).expect("k in range");
        checked += 1;
        pass &= c.pass();
        // distance of the scaled value to the nearer end of (1/2, 1)
        let x = c.scaled();
        let margin = (x - 0.5).min(1.0 - x);
        if worst.as_ref().is_none_or(|w| margin < w.ratio) {
            worst = Some(Witness {
                at: format!("k={k}"),
                ratio: margin,
            });
        }
    }
    Certificate {
        claim: "1/(2q_{k+1}) < ||q_k alpha|| < 1/q_{k+1}".into(),
        range: format!("1 <= k <= {}", angle.k_star.saturating_sub(1)),
        pass,
        worst_witness: worst,
        exhaustive: true,
        checked,
    }
}

/// Checks `l_{k+1}q_k − l_kq_{k+1} = (−1)^k` over the certified range and the
/// coprimality of every `(l_k, q_k)`.
pub fn certify_determinant(angle: &AngleCF) -> Certificate {
    let cs = angle.convergents();
    let mut pass = true;
    let mut first_bad = None;
    for w in cs.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let det = &b.l * BigInt::from(a.q.clone()) - &a.l * BigInt::from(b.q.clone());
        let want = if a.k % 2 == 0 { 1 } else { -1 };
        let coprime = a.l.gcd(&BigInt::from(a.q.clone())).is_one();
        if det != BigInt::from(want) || !coprime {
            pass = false;
            first_bad.get_or_insert(a.k);
        }
    }
    Certificate {
        claim: "l_{k+1} q_k - l_k q_{k+1} = (-1)^k and gcd(l_k, q_k) = 1".into(),
        range: format!("0 <= k < {}", angle.k_star),
        pass,
        worst_witness: first_bad.map(|k| Witness {
            at: format!("k={k}"),
            ratio: 0.0,
        }),
        exhaustive: true,
        checked: cs.len().saturating_sub(1) as u64,
    }
}

/// If `|α − l/q| < 1/(2q²)` (exact comparison against the snapshot), the
/// index `k` with `l/q = l_k/q_k`; otherwise `None`. Denominators at or
/// above `q_S/2` are outside the snapshot's resolution and also give `None`.
pub fn legendre_locate(l: &BigInt, q: &BigUint, angle: &AngleCF) -> Option<usize> {
    if q.is_zero() || (q << 1u32) >= angle.snapshot.q {
        return None;
    }
    let qs = BigInt::from(angle.snapshot.q.clone());
    let qi = BigInt::from(q.clone());
    // |l_S/q_S − l/q| < 1/(2q²)  ⇔  2q·|l_S q − l q_S| < q_S
    let diff = (&angle.snapshot.l * &qi - l * &qs).abs();
    if (&qi * diff) << 1u32 >= qs {
        return None;
    }
    let g = l.gcd(&qi);
    let (lr, qr) = (l / &g, &qi / &g);
    angle
        .convergents
        .iter()
        .position(|c| c.l == lr && BigInt::from(c.q.clone()) == qr)
}

/// `floor(e^x · 2^frac_bits)` up to a relative error below `2^-(frac_bits+32)`.
fn exp_fixed(x: u64, frac_bits: u64) -> BigUint {
    let xbits = 64 - x.leading_zeros() as u64;
    let work = frac_bits + xbits + 96;
    let one = BigUint::one() << work;
    let mut e = BigUint::zero();
    let mut term = one.clone();
    let mut k = 0u64;
    while !term.is_zero() {
        e += &term;
        k += 1;
        term /= k;
    }
    let mut result = one;
    let mut base = e;
    let mut rem = x;
    while rem > 0 {
        if rem & 1 == 1 {
            result = (&result * &base) >> work;
        }
        rem >>= 1;
        if rem > 0 {
            base = (&base * &base) >> work;
        }
    }
    result >> (work - frac_bits)
}

/// Fractional bits needed so `e^q` is known to `digits` significant digits
/// and to better than one unit in absolute terms.
fn exp_precision(q: u64, digits: u32) -> u64 {
    let for_digits = (digits as f64 * std::f64::consts::LOG2_10).ceil() as u64;
    let int_bits = (q as f64 * std::f64::consts::LOG2_E).ceil() as u64;
    for_digits.max(int_bits + 64)
}

/// Exp-type angle with `q_{k+1} ≍ e^{q_k}`, default options.
pub fn build_exp_alpha(k_star: usize) -> Result<AngleCF> {
    build_exp_alpha_with(k_star, &BuildOptions::default())
}

pub fn build_exp_alpha_with(k_star: usize, opts: &BuildOptions) -> Result<AngleCF> {
    if k_star < 3 {
        return Err(Error::Domain(format!("k_star = {k_star} < 3")));
    }
    if opts.seed_q1 == 0 {
        return Err(Error::InvalidQuotient { index: 1 });
    }
    let mut quotients = vec![BigUint::from(opts.seed_q1)];
    let mut q_prev = BigUint::one();
    let mut q_cur = BigUint::from(opts.seed_q1);
    let mut growth = Vec::new();
    for k in 1..k_star {
        let x = match q_cur.to_u64() {
            Some(x) if x <= opts.max_exp_argument => x,
            _ => {
                return Err(Error::GrowthBudget {
                    k,
                    detail: format!(
                        "e^q_{k} with q_{k} of {} digits is not representable (limit q <= {})",
                        q_cur.to_string().len(),
                        opts.max_exp_argument
                    ),
                })
            }
        };
        let bits = exp_precision(x, opts.exp_digits);
        let ex = exp_fixed(x, bits);
        let den = BigUint::from(x) << bits;
        // round half up
        let mut a = (&ex + (&den >> 1u32)) / &den;
        if a.is_zero() {
            a = BigUint::one();
        }
        let q_next = &a * &q_cur + &q_prev;
        let ratio = unsigned_ratio(&(&q_next << bits), &ex);
        let within = (&q_next << (bits + 1)) >= ex && (&q_next << bits) <= &ex * 3u32;
        if k >= 2 && !within {
            return Err(Error::GrowthBudget {
                k,
                detail: format!("q_{}/e^q_{k} = {ratio} left [1/2, 3]", k + 1),
            });
        }
        growth.push(GrowthRecord { k, ratio, within });
        quotients.push(a);
        q_prev = std::mem::replace(&mut q_cur, q_next);
    }
    let pq = PartialQuotients::new(BigInt::zero(), quotients)?;
    AngleCF::built(AngleKind::Exp, pq, k_star, &opts.floor, growth)
}

/// Poly-type angle with `a_{k+1} = ⌊q_k^{τ−1}⌋`, so `q_{k+1} ≤ 2q_k^τ`.
pub fn build_poly_alpha(tau: Tau, k_star: usize) -> Result<AngleCF> {
    if tau.num <= 3 * tau.den {
        return Err(Error::Domain(format!("tau = {tau} must exceed 3")));
    }
    build_power_alpha(tau, k_star, &BuildOptions::default())
}

/// Same construction for any growth exponent `g > 1`; the angle is tagged
/// poly-type with `τ = g`. Useful for angles whose denominators fall in
/// the `q_{k+1} ≤ q_k^{τ/3}` class.
pub fn build_power_alpha(growth_exp: Tau, k_star: usize, opts: &BuildOptions) -> Result<AngleCF> {
    if growth_exp.num <= growth_exp.den {
        return Err(Error::Domain(format!(
            "growth exponent {growth_exp} must exceed 1"
        )));
    }
    if k_star < 3 {
        return Err(Error::Domain(format!("k_star = {k_star} < 3")));
    }
    const MAX_BITS: u64 = 1 << 22;
    let mut quotients = vec![BigUint::from(opts.seed_q1)];
    let mut q_prev = BigUint::one();
    let mut q_cur = BigUint::from(opts.seed_q1);
    let mut growth = Vec::new();
    for k in 1..k_star {
        if q_cur.bits() * growth_exp.num as u64 > MAX_BITS {
            return Err(Error::GrowthBudget {
                k,
                detail: format!("q_{k}^{growth_exp} exceeds {MAX_BITS} bits"),
            });
        }
        let powered = q_cur.pow(growth_exp.num - growth_exp.den);
        let a = powered.nth_root(growth_exp.den).max(BigUint::one());
        let q_next = &a * &q_cur + &q_prev;
        let bound = q_next.pow(growth_exp.den) <= (q_cur.pow(growth_exp.num) << growth_exp.den);
        let ratio = (q_next.bits() as f64 - 1.0).max(0.0)
            - growth_exp.value() * (q_cur.bits() as f64 - 1.0).max(0.0);
        growth.push(GrowthRecord {
            k,
            // log2 of q_{k+1}/q_k^τ, to leading-bit precision
            ratio,
            within: bound,
        });
        if !bound {
            return Err(Error::GrowthBudget {
                k,
                detail: format!("q_{} > 2 q_{k}^{growth_exp}", k + 1),
            });
        }
        quotients.push(a);
        q_prev = std::mem::replace(&mut q_cur, q_next);
    }
    let pq = PartialQuotients::new(BigInt::zero(), quotients)?;
    AngleCF::built(
        AngleKind::Poly { tau: growth_exp },
        pq,
        k_star,
        &opts.floor,
        growth,
    )
}

/// Re-derives the growth window of an exp-type angle
/// (`1/2 ≤ q_{k+1}/e^{q_k} ≤ 3` for `2 ≤ k < k_star`) or the poly bound
/// `q_{k+1} ≤ 2q_k^τ` (`1 ≤ k < k_star`).
pub fn certify_growth(angle: &AngleCF) -> Certificate {
    let opts = BuildOptions::default();
    let mut pass = true;
    let mut worst: Option<Witness> = None;
    let mut checked = 0;
    let (claim, range) = match angle.kind {
        AngleKind::Exp => {
            for k in 2..angle.k_star {
                checked += 1;
                let Some(x) = angle.q_u64(k).filter(|&x| x <= opts.max_exp_argument) else {
                    pass = false;
                    continue;
                };
                let bits = exp_precision(x, opts.exp_digits);
                let ex = exp_fixed(x, bits);
                let qn = angle.q(k + 1);
                let ok = (qn << (bits + 1)) >= ex && (qn << bits) <= &ex * 3u32;
                pass &= ok;
                let r = unsigned_ratio(&(qn << bits), &ex);
                let margin = (r / 0.5).min(3.0 / r);
                if worst.as_ref().is_none_or(|w| margin < w.ratio) {
                    worst = Some(Witness {
                        at: format!("k={k}"),
                        ratio: margin,
                    });
                }
            }
            (
                "1/2 <= q_{k+1}/e^{q_k} <= 3".to_string(),
                format!("2 <= k < {}", angle.k_star),
            )
        }
        AngleKind::Poly { tau } => {
            for k in 1..angle.k_star {
                checked += 1;
                let (qk, qn) = (angle.q(k), angle.q(k + 1));
                let ok = qn.pow(tau.den) <= (qk.pow(tau.num) << tau.den);
                pass &= ok;
            }
            (
                format!("q_{{k+1}} <= 2 q_k^{tau}"),
                format!("1 <= k < {}", angle.k_star),
            )
        }
        AngleKind::Explicit => ("no growth law".to_string(), "-".to_string()),
    };
    Certificate {
        claim,
        range,
        pass,
        worst_witness: worst,
        exhaustive: true,
        checked,
    }
}
