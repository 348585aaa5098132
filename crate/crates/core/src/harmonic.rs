//! Finite Fourier series for real 1-periodic functions, the resonant /
//! non-resonant split, and the coboundary equation `g(t+α) − g(t) = h₂(t)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::certificate::{Certificate, Witness};
use crate::contfrac::{AngleCF, Tau};
use crate::error::{Error, Result};
use crate::numeric::{e, e_minus_one, ComplexKahan, KahanSum};
use crate::spectrum::{Bands, FreqClass, TauClassifier};

/// Declared decay of `|ĥ(m)|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decay {
    /// `|ĥ(m)| ≤ e^{−η|m|}`.
    Analytic { eta: f64 },
    /// `|ĥ(m)| ≤ |m|^{−τ}`.
    Smooth { tau: f64 },
    /// Supported on denominators `±q_k` with `|ĥ(q_k)| ≤ 2π·bound·‖q_kα‖`.
    Lacunary { bound: f64 },
    Finite,
}

impl Decay {
    fn kind(&self) -> (&'static str, Option<f64>) {
        match *self {
            Decay::Analytic { eta } => ("analytic", Some(eta)),
            Decay::Smooth { tau } => ("smooth", Some(tau)),
            Decay::Lacunary { bound } => ("lacunary", Some(bound)),
            Decay::Finite => ("finite", None),
        }
    }
}

/// Real 1-periodic function `Σ ĥ(m) e(mt)`.
///
/// Only `m > 0` is stored; `ĥ(−m)` is the conjugate, so realness holds by
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSeries {
    mean: f64,
    coeffs: BTreeMap<u64, Complex64>,
    decay: Decay,
    /// Sup-norm bound on everything not stored.
    tail_bound: f64,
}

impl FourierSeries {
    pub fn zero() -> Self {
        Self {
            mean: 0.0,
            coeffs: BTreeMap::new(),
            decay: Decay::Finite,
            tail_bound: 0.0,
        }
    }

    /// From the positive-frequency half. Entries with `m = 0` are rejected:
    /// use [`FourierSeries::with_mean`].
    pub fn new(
        mean: f64,
        positive: impl IntoIterator<Item = (u64, Complex64)>,
        decay: Decay,
        tail_bound: f64,
    ) -> Result<Self> {
        let mut coeffs = BTreeMap::new();
        for (m, c) in positive {
            if m == 0 {
                return Err(Error::Domain("m = 0 goes in the mean".into()));
            }
            coeffs.insert(m, c);
        }
        Ok(Self {
            mean,
            coeffs,
            decay,
            tail_bound,
        })
    }

    pub fn with_mean(mut self, mean: f64) -> Self {
        self.mean = mean;
        self
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn decay(&self) -> Decay {
        self.decay
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    /// `ĥ(m)` for any integer `m`.
    pub fn coeff(&self, m: i64) -> Complex64 {
        match m.signum() {
            0 => Complex64::new(self.mean, 0.0),
            1 => self.coeffs.get(&(m as u64)).copied().unwrap_or_default(),
            _ => self
                .coeffs
                .get(&m.unsigned_abs())
                .map(|c| c.conj())
                .unwrap_or_default(),
        }
    }

    /// Stored positive frequencies with their coefficients, ascending.
    pub fn positive(&self) -> impl Iterator<Item = (u64, Complex64)> + '_ {
        self.coeffs.iter().map(|(&m, &c)| (m, c))
    }

    pub fn max_frequency(&self) -> u64 {
        self.coeffs.keys().next_back().copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty() && self.mean == 0.0
    }

    /// `Σ_m |ĥ(m)|²` over both signs and the mean.
    pub fn energy(&self) -> f64 {
        self.mean * self.mean + 2.0 * self.coeffs.values().map(|c| c.norm_sqr()).sum::<f64>()
    }

    /// `Σ_m |ĥ(m)|` over both signs and the mean: a sup-norm bound.
    pub fn l1(&self) -> f64 {
        self.mean.abs() + 2.0 * self.coeffs.values().map(|c| c.norm()).sum::<f64>()
    }

    /// `Σ ĥ(m) e(mt)` summed in increasing `|m|`, both signs kept separate so
    /// the imaginary residue is observable.
    pub fn eval_complex(&self, t: f64) -> Complex64 {
        let mut acc = ComplexKahan::new();
        acc.add(Complex64::new(self.mean, 0.0));
        for (&m, &c) in &self.coeffs {
            let z = e(m as f64 * t);
            acc.add(c * z);
            acc.add(c.conj() * z.conj());
        }
        acc.value()
    }

    /// `ĥ(0) + 2 Σ_{m>0} Re(ĥ(m) e(mt))`, the real part of
    /// [`FourierSeries::eval_complex`] without its conjugate terms.
    pub fn eval(&self, t: f64) -> f64 {
        let mut acc = KahanSum::new();
        acc.add(self.mean);
        for (&m, &c) in &self.coeffs {
            acc.add(2.0 * (c * e(m as f64 * t)).re);
        }
        acc.value()
    }

    /// Value at `t + α` with `{mα}` reduced exactly.
    pub fn eval_shifted(&self, t: f64, angle: &AngleCF) -> f64 {
        let mut acc = ComplexKahan::new();
        acc.add(Complex64::new(self.mean, 0.0));
        for (&m, &c) in &self.coeffs {
            let z = e(m as f64 * t) * e(angle.signed_phase(m as i64));
            acc.add(c * z);
            acc.add(c.conj() * z.conj());
        }
        acc.value().re
    }

    /// `f^{(order)}(t)` termwise.
    pub fn eval_derivative(&self, t: f64, order: u32) -> f64 {
        let mut acc = ComplexKahan::new();
        for (&m, &c) in &self.coeffs {
            let factor = Complex64::new(0.0, 2.0 * PI * m as f64).powu(order);
            let z = e(m as f64 * t);
            acc.add(c * factor * z);
            acc.add((c * factor).conj() * z.conj());
        }
        acc.value().re
    }

    fn filtered(&self, keep: impl Fn(u64) -> bool) -> Self {
        Self {
            mean: 0.0,
            coeffs: self
                .coeffs
                .iter()
                .filter(|(&m, _)| keep(m))
                .map(|(&m, &c)| (m, c))
                .collect(),
            decay: self.decay,
            tail_bound: self.tail_bound,
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            mean: self.mean * s,
            coeffs: self.coeffs.iter().map(|(&m, &c)| (m, c * s)).collect(),
            decay: self.decay,
            tail_bound: self.tail_bound * s.abs(),
        }
    }

    pub fn to_document(&self) -> SeriesDocument {
        let (kind, param) = self.decay.kind();
        let mut coeffs = Vec::with_capacity(2 * self.coeffs.len() + 1);
        for (&m, &c) in self.coeffs.iter().rev() {
            coeffs.push((-(m as i64), c.re, -c.im));
        }
        coeffs.push((0, self.mean, 0.0));
        for (&m, &c) in &self.coeffs {
            coeffs.push((m as i64, c.re, c.im));
        }
        SeriesDocument {
            decay: DecayDoc {
                kind: kind.into(),
                param,
            },
            coeffs,
            tail_bound: self.tail_bound,
        }
    }

    pub fn from_document(doc: &SeriesDocument) -> Result<Self> {
        let decay = match (doc.decay.kind.as_str(), doc.decay.param) {
            ("analytic", Some(eta)) => Decay::Analytic { eta },
            ("smooth", Some(tau)) => Decay::Smooth { tau },
            ("lacunary", Some(bound)) => Decay::Lacunary { bound },
            ("finite", _) => Decay::Finite,
            (k, _) => return Err(Error::Format(format!("bad decay {k:?}"))),
        };
        let mut mean = 0.0;
        let mut pos = BTreeMap::new();
        let mut neg = BTreeMap::new();
        for &(m, re, im) in &doc.coeffs {
            let c = Complex64::new(re, im);
            match m.signum() {
                0 => mean = re,
                1 => {
                    pos.insert(m as u64, c);
                }
                _ => {
                    neg.insert(m.unsigned_abs(), c);
                }
            }
        }
        for (m, c) in &neg {
            if pos.get(m).map(|p| p.conj()) != Some(*c) {
                return Err(Error::Format(format!("coefficient -{m} is not conjugate to {m}")));
            }
        }
        Self::new(mean, pos, decay, doc.tail_bound)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayDoc {
    pub kind: String,
    #[serde(default)]
    pub param: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesDocument {
    pub decay: DecayDoc,
    pub coeffs: Vec<(i64, f64, f64)>,
    pub tail_bound: f64,
}

/// `h(x) = Σ_{k≠0} t_k (1 − e(q_kα)) e(q_k x)` truncated to `1 ≤ |k| ≤ k_cut`,
/// where `t[k−1] = t_k = t_{−k}` and `k_cut = t.len()`.
pub fn furstenberg_h(angle: &AngleCF, t: &[f64], tau_bound: f64) -> Result<FourierSeries> {
    let k_cut = t.len();
    if k_cut + 1 > angle.k_star() {
        return Err(Error::IndexOutOfRange {
            index: k_cut,
            min: 0,
            max: angle.k_star().saturating_sub(1),
        });
    }
    if let Some(x) = t.iter().find(|x| x.abs() > tau_bound || !x.is_finite()) {
        return Err(Error::Domain(format!("|t_k| = {} exceeds {tau_bound}", x.abs())));
    }
    let mut coeffs = Vec::with_capacity(k_cut);
    for (i, &tk) in t.iter().enumerate() {
        let k = i + 1;
        let q = angle.q(k).to_u64().filter(|&q| q <= i64::MAX as u64).ok_or_else(|| {
            Error::Domain(format!("q_{k} does not fit a 64-bit frequency"))
        })?;
        let theta = angle.signed_phase(q as i64);
        coeffs.push((q, -e_minus_one(theta) * tk));
    }
    // discarded k in (k_cut, k_star): |ĥ(±q_k)| ≤ 2π·τ·‖q_kα‖ < 2π·τ/q_{k+1}
    let mut tail = 0.0;
    for k in k_cut + 1..angle.k_star() {
        tail += 2.0 * 2.0 * PI * tau_bound / angle.q(k + 1).to_f64().unwrap_or(f64::INFINITY);
    }
    FourierSeries::new(0.0, coeffs, Decay::Lacunary { bound: tau_bound }, tail)
}

/// `t_k = 1` for `1 ≤ k ≤ k_cut`.
pub fn furstenberg_default(angle: &AngleCF, k_cut: usize) -> Result<FourierSeries> {
    furstenberg_h(angle, &vec![1.0; k_cut], 1.0)
}

fn random_phases(seed: u64, m_cut: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..m_cut).map(|_| rng.random::<f64>()).collect()
}

/// `|ĥ(m)| = e^{−η|m|}` for `1 ≤ |m| ≤ m_cut`, `ĥ(0) = 1`, seeded phases.
pub fn analytic_h_sample(eta: f64, m_cut: u64, seed: u64) -> Result<FourierSeries> {
    if !(eta > 0.0) {
        return Err(Error::Domain(format!("eta = {eta} must be positive")));
    }
    let phases = random_phases(seed, m_cut);
    let coeffs = (1..=m_cut).map(|m| (m, e(phases[m as usize - 1]) * (-eta * m as f64).exp()));
    let r = (-eta).exp();
    let tail = 2.0 * (-eta * (m_cut + 1) as f64).exp() / (1.0 - r);
    FourierSeries::new(1.0, coeffs, Decay::Analytic { eta }, tail)
}

/// `|ĥ(m)| = |m|^{−τ}` for `1 ≤ |m| ≤ m_cut`, `ĥ(0) = 0`, seeded phases.
pub fn smooth_h_sample(tau: f64, m_cut: u64, seed: u64) -> Result<FourierSeries> {
    if !(tau > 3.0) {
        return Err(Error::Domain(format!("tau = {tau} must exceed 3")));
    }
    if m_cut == 0 {
        return Err(Error::Domain("m_cut must be positive".into()));
    }
    let phases = random_phases(seed, m_cut);
    let coeffs = (1..=m_cut).map(|m| (m, e(phases[m as usize - 1]) * (m as f64).powf(-tau)));
    let tail = 2.0 * (m_cut as f64).powf(1.0 - tau) / (tau - 1.0);
    FourierSeries::new(0.0, coeffs, Decay::Smooth { tau }, tail)
}

/// Which non-resonant set a coboundary lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// The flat set: everything except multiples of `q_k` in bands `k ≥ 2`.
    Flat,
    /// `M₂ ∪ M₃` for growth exponent `τ`.
    Tau(Tau),
}

struct Classifier {
    bands: Bands,
    tau: Option<TauClassifier>,
}

impl Classifier {
    fn new(angle: &AngleCF, regime: Regime) -> Self {
        Self {
            bands: Bands::new(angle),
            tau: match regime {
                Regime::Flat => None,
                Regime::Tau(t) => Some(TauClassifier::new(angle, t)),
            },
        }
    }

    fn resonant(&self, m: u64) -> Result<bool> {
        let m = i64::try_from(m).map_err(|_| Error::Domain(format!("frequency {m} too large")))?;
        match &self.tau {
            None => Ok(crate::spectrum::classify_in(m, &self.bands)?.resonant),
            Some(c) => Ok(c.class(m)? == FreqClass::M1),
        }
    }
}

/// `(resonant part, non-resonant part, mean)`.
pub fn split(
    h: &FourierSeries,
    angle: &AngleCF,
    regime: Regime,
) -> Result<(FourierSeries, FourierSeries, f64)> {
    let c = Classifier::new(angle, regime);
    let mut resonant = Vec::new();
    for m in h.coeffs.keys() {
        if c.resonant(*m)? {
            resonant.push(*m);
        }
    }
    let h1 = h.filtered(|m| resonant.binary_search(&m).is_ok());
    let h2 = h.filtered(|m| resonant.binary_search(&m).is_err());
    Ok((h1, h2, h.mean))
}

pub fn split_resonant(
    h: &FourierSeries,
    angle: &AngleCF,
) -> Result<(FourierSeries, FourierSeries, f64)> {
    split(h, angle, Regime::Flat)
}

pub fn split_tau(
    h: &FourierSeries,
    angle: &AngleCF,
    tau: Tau,
) -> Result<(FourierSeries, FourierSeries, f64)> {
    split(h, angle, Regime::Tau(tau))
}

/// Solution `g` of `g(t+α) − g(t) = h₂(t)` for a non-resonant `h₂`.
#[derive(Debug, Clone)]
pub struct CoboundaryFunction {
    pub series: FourierSeries,
    pub h2: FourierSeries,
    pub regime: Regime,
    /// Sup-norm bound on `|g(t+α) − g(t) − h₂(t)|` for the untruncated
    /// functions when the stored truncations are used.
    pub identity_error_bound: f64,
    /// Bound on the sup norm of the discarded part of `g`.
    pub g_tail_bound: f64,
}

impl CoboundaryFunction {
    pub fn eval(&self, t: f64) -> f64 {
        self.series.eval(t)
    }

    /// `g(t+α) − g(t) − h₂(t)`, each term evaluated separately.
    pub fn defect(&self, t: f64, angle: &AngleCF) -> f64 {
        self.series.eval_shifted(t, angle) - self.series.eval(t) - self.h2.eval(t)
    }
}

/// `ĝ(m) = ĥ(m)/(e(mα) − 1)` with `{mα}` reduced exactly.
pub fn solve_coboundary(
    h_nonres: &FourierSeries,
    angle: &AngleCF,
    regime: Regime,
) -> Result<CoboundaryFunction> {
    let c = Classifier::new(angle, regime);
    let mut coeffs = Vec::with_capacity(h_nonres.len());
    for (m, hm) in h_nonres.positive() {
        if c.resonant(m)? {
            return Err(Error::ResonantFrequency { m: m as i64 });
        }
        let theta = angle.signed_phase(m as i64);
        if theta == 0.0 {
            return Err(Error::ResonantFrequency { m: m as i64 });
        }
        coeffs.push((m, hm / e_minus_one(theta)));
    }
    let g_tail = g_tail_bound(h_nonres, angle, regime, &c)?;
    let series = FourierSeries::new(0.0, coeffs, Decay::Finite, g_tail)?;
    let mut h2 = h_nonres.clone();
    h2.mean = 0.0;
    Ok(CoboundaryFunction {
        identity_error_bound: 2.0 * g_tail + h_nonres.tail_bound,
        g_tail_bound: g_tail,
        series,
        h2,
        regime,
    })
}

/// Bound on `Σ_{discarded m} |ĥ(m)| / |e(mα) − 1|` over both signs.
///
/// Past `q_2` the flat set obeys `‖mα‖ ≥ 1/(2|m|)`, so `1/|e(mα)−1| ≤ |m|/2`.
/// In the `τ` regime, M₃ obeys the same bound and M₂ obeys
/// `1/|e(mα)−1| ≤ q_k^{τ/3}/(2a) ≤ |m|^{τ/3}/2`. Discarded frequencies below
/// `q_2` are bounded term by term with exact distances.
fn g_tail_bound(
    h: &FourierSeries,
    angle: &AngleCF,
    regime: Regime,
    c: &Classifier,
) -> Result<f64> {
    let m_cut = h.max_frequency();
    let magnitude: Box<dyn Fn(f64) -> f64> = match h.decay {
        Decay::Finite => return Ok(0.0),
        Decay::Lacunary { .. } => {
            return Ok(match regime {
                // the flat part of a lacunary series sits in band 1, all stored
                Regime::Flat if m_cut >= angle_q(angle, 1) => 0.0,
                _ => f64::INFINITY,
            })
        }
        Decay::Analytic { eta } => Box::new(move |m| (-eta * m).exp()),
        Decay::Smooth { tau } => Box::new(move |m| m.powf(-tau)),
    };
    let exponent = match regime {
        Regime::Flat => 1.0,
        Regime::Tau(t) => t.value() / 3.0,
    };
    let q2 = angle_q(angle, 2);
    let mut total = 0.0;
    // exact part: m_cut < m < q_2
    let mut m = m_cut + 1;
    while m < q2 {
        if !c.resonant(m)? {
            let d = angle.dist_f64(m as i64);
            total += 2.0 * magnitude(m as f64) / (2.0 * (PI * d).sin());
        }
        m += 1;
    }
    let start = m_cut.max(q2 - 1);
    total += match h.decay {
        Decay::Smooth { tau } => {
            // Σ_{m>M} m^{p−τ} ≤ M^{1+p−τ}/(τ−p−1)
            let s = tau - exponent;
            if s <= 1.0 {
                f64::INFINITY
            } else {
                (start as f64).powf(1.0 - s) / (s - 1.0)
            }
        }
        _ => numeric_tail(|m| magnitude(m) * m.powf(exponent), start),
    };
    Ok(total)
}

fn angle_q(angle: &AngleCF, k: usize) -> u64 {
    angle.q_u64(k).unwrap_or(u64::MAX)
}

/// `Σ_{m>start} f(m)` for a log-concave eventually decreasing `f`, closed
/// with a geometric bound once the term ratio drops below 1/2.
fn numeric_tail(f: impl Fn(f64) -> f64, start: u64) -> f64 {
    let mut sum = 0.0;
    let mut m = start + 1;
    let mut prev = f(m as f64);
    loop {
        sum += prev;
        m += 1;
        let next = f(m as f64);
        let ratio = next / prev;
        if next == 0.0 || (ratio < 0.5 && next < 1e-18 * sum.max(1e-300)) {
            // remaining terms decay at least as fast as ratio^j
            return sum + next / (1.0 - ratio.max(0.0));
        }
        if m - start > 10_000_000 {
            return f64::INFINITY;
        }
        prev = next;
    }
}

/// Grid size for [`check_coeff_bound`].
pub const COEFF_GRID: usize = 1 << 12;
/// Slack factor `C` in `|c(m)|·m² ≤ C·(‖f′‖² + ‖f″‖)`.
pub const COEFF_SLACK: f64 = 8.0;

/// Checks `|c(m)|·m² ≤ 8(‖f′‖∞² + ‖f″‖∞)` for `1 ≤ |m| ≤ m_limit`, where
/// `c(m)` are the Fourier coefficients of `e(f)`, computed by FFT on a
/// 4096-point grid. A float allowance of `1e-12·m²` absorbs round-off.
pub fn check_coeff_bound(f: &FourierSeries, m_limit: u64) -> Result<Certificate> {
    if m_limit as usize > COEFF_GRID / 2 {
        return Err(Error::Aliasing {
            m_limit: m_limit as usize,
            grid: COEFF_GRID,
        });
    }
    let n = COEFF_GRID;
    let ts: Vec<f64> = (0..n).map(|j| j as f64 / n as f64).collect();
    let mut buf: Vec<Complex64> = ts.iter().map(|&t| e(f.eval(t))).collect();
    let mut d1 = 0f64;
    let mut d2 = 0f64;
    for &t in &ts {
        d1 = d1.max(f.eval_derivative(t, 1).abs());
        d2 = d2.max(f.eval_derivative(t, 2).abs());
    }
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    let rhs = d1 * d1 + d2;
    let mut pass = true;
    let mut worst: Option<Witness> = None;
    for m in 1..=m_limit as usize {
        for (idx, signed) in [(m, m as i64), (n - m, -(m as i64))] {
            let c = buf[idx].norm() * scale;
            let m2 = (m * m) as f64;
            let lhs = c * m2;
            pass &= lhs <= COEFF_SLACK * rhs + 1e-12 * m2;
            let ratio = if rhs > 0.0 { lhs / rhs } else { lhs };
            if worst.as_ref().is_none_or(|w| ratio > w.ratio) {
                worst = Some(Witness {
                    at: format!("m={signed}"),
                    ratio,
                });
            }
        }
    }
    Ok(Certificate {
        claim: format!(
            "|c(m)| m^2 <= {COEFF_SLACK} (||f'||^2 + ||f''||) with ||f'|| = {d1:.6e}, ||f''|| = {d2:.6e}"
        ),
        range: format!("1 <= |m| <= {m_limit}, grid {n}"),
        pass,
        worst_witness: worst,
        exhaustive: true,
        checked: 2 * m_limit,
    })
}

/// Random finite real series with `n_terms` frequencies in `1..=max_m`,
/// coefficients of size up to `amplitude`.
pub fn random_finite_series(seed: u64, n_terms: usize, max_m: u64, amplitude: f64) -> FourierSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = BTreeMap::new();
    while coeffs.len() < n_terms.min(max_m as usize) {
        let m = rng.random_range(1..=max_m);
        let r = amplitude * rng.random::<f64>();
        let ph = rng.random::<f64>();
        coeffs.insert(m, e(ph) * r);
    }
    FourierSeries {
        mean: amplitude * (rng.random::<f64>() - 0.5),
        coeffs,
        decay: Decay::Finite,
        tail_bound: 0.0,
    }
}

/// `|ĥ(q_k)|` predicted from the exact distance, for checking
/// [`furstenberg_h`].
pub fn furstenberg_magnitude(angle: &AngleCF, k: usize, t_k: f64) -> f64 {
    let d = angle.dist_f64(angle.q(k).to_i64().unwrap_or(i64::MAX));
    (2.0 * (PI * d).sin() * t_k).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contfrac::{build_exp_alpha, build_poly_alpha};

    #[test]
    fn cosine_from_single_pair() {
        let f = FourierSeries::new(0.0, [(1, Complex64::new(0.5, 0.0))], Decay::Finite, 0.0).unwrap();
        for &t in &[0.0, 0.1, 0.37, 0.9] {
            assert!((f.eval(t) - (2.0 * PI * t).cos()).abs() < 1e-15);
        }
        assert_eq!(FourierSeries::zero().eval(0.3), 0.0);
    }

    /// Oracle: `{mt}` reduced exactly on the dyadic grid of `t`, terms
    /// accumulated in double-double.
    fn eval_oracle(f: &FourierSeries, t: f64) -> f64 {
        let scaled = (t * 2f64.powi(60)) as u128;
        assert_eq!(scaled as f64, t * 2f64.powi(60), "t not on the 2^-60 grid");
        let (mut hi, mut lo) = (f.mean(), 0.0f64);
        for (m, c) in f.positive() {
            let frac = ((scaled * m as u128) & ((1u128 << 60) - 1)) as f64 / 2f64.powi(60);
            let (s, co) = (2.0 * PI * frac).sin_cos();
            for term in [2.0 * c.re * co, -2.0 * c.im * s] {
                let sum = hi + term;
                let bb = sum - hi;
                lo += (hi - (sum - bb)) + (term - bb);
                hi = sum;
            }
        }
        hi + lo
    }

    #[test]
    fn eval_matches_exact_phase_oracle() {
        let f = analytic_h_sample(0.5, 80, 3).unwrap();
        for i in 0..10 {
            let t = (i as f64 * 0.0973 + 0.0131).fract();
            let t = (t * 2f64.powi(40)).round() / 2f64.powi(40);
            assert!((f.eval(t) - eval_oracle(&f, t)).abs() <= 1e-13, "t = {t}");
        }
    }

    #[test]
    fn analytic_tail_closed_form() {
        let h = analytic_h_sample(1.0, 40, 7).unwrap();
        let want = 2.0 * (-41f64).exp() / (1.0 - (-1f64).exp());
        assert!((h.tail_bound() - want).abs() <= 1e-15 * want);
        assert_eq!(h, analytic_h_sample(1.0, 40, 7).unwrap());
        assert_ne!(h, analytic_h_sample(1.0, 40, 8).unwrap());
    }

    #[test]
    fn smooth_sample_magnitudes() {
        let h = smooth_h_sample(4.0, 100, 1).unwrap();
        assert!((h.tail_bound() - 2.0 * 100f64.powi(-3) / 3.0).abs() < 1e-18);
        for (m, c) in h.positive() {
            assert!((c.norm() * (m as f64).powi(4) - 1.0).abs() < 1e-14);
        }
        assert!(smooth_h_sample(3.0, 10, 1).is_err());
    }

    #[test]
    fn furstenberg_split_keeps_only_first_band() {
        let a = build_exp_alpha(4).unwrap();
        let h = furstenberg_default(&a, 3).unwrap();
        let (h1, h2, mean) = split_resonant(&h, &a).unwrap();
        assert_eq!(mean, 0.0);
        assert_eq!(h2.positive().map(|(m, _)| m).collect::<Vec<_>>(), vec![2]);
        assert_eq!(h1.positive().map(|(m, _)| m).collect::<Vec<_>>(), vec![9, 8102]);
        assert!(furstenberg_default(&a, 4).is_err());
    }

    #[test]
    fn zero_and_single_frequency_coboundary() {
        let a = build_exp_alpha(4).unwrap();
        let g = solve_coboundary(&FourierSeries::zero(), &a, Regime::Flat).unwrap();
        assert!(g.series.is_empty());
        let h = FourierSeries::new(0.0, [(5, Complex64::new(0.3, -0.1))], Decay::Finite, 0.0).unwrap();
        let g = solve_coboundary(&h, &a, Regime::Flat).unwrap();
        for &t in &[0.0, 0.2, 0.77] {
            assert!(g.defect(t, &a).abs() < 1e-14);
        }
        let res = FourierSeries::new(0.0, [(9, Complex64::new(0.3, 0.0))], Decay::Finite, 0.0).unwrap();
        assert!(matches!(
            solve_coboundary(&res, &a, Regime::Flat),
            Err(Error::ResonantFrequency { m: 9 })
        ));
    }

    #[test]
    fn smooth_regime_tail_is_finite() {
        let a = build_poly_alpha(Tau::integer(4), 5).unwrap();
        let h = smooth_h_sample(4.0, 100, 3).unwrap();
        let (_, h2, _) = split_tau(&h, &a, Tau::integer(4)).unwrap();
        let g = solve_coboundary(&h2, &a, Regime::Tau(Tau::integer(4))).unwrap();
        assert!(g.identity_error_bound.is_finite());
        assert!(g.identity_error_bound > 0.0);
    }

    #[test]
    fn coeff_bound_examples() {
        let zero = FourierSeries::zero();
        assert!(check_coeff_bound(&zero, 100).unwrap().pass);
        let sine = FourierSeries::new(0.0, [(1, Complex64::new(0.0, -0.05))], Decay::Finite, 0.0).unwrap();
        let c = check_coeff_bound(&sine, 64).unwrap();
        assert!(c.pass, "{c:?}");
        assert!(check_coeff_bound(&sine, 2049).is_err());
    }

    #[test]
    fn document_round_trip() {
        let h = analytic_h_sample(0.5, 10, 2).unwrap();
        let doc = h.to_document();
        assert_eq!(doc.coeffs.len(), 21);
        let back = FourierSeries::from_document(&doc).unwrap();
        assert_eq!(back, h);
    }
}
