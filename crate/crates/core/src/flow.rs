//! The skew product
//! `T(x₁, x₂, …) = (x₁ + α, x₂ + h(x₁), …, x_ν + h(x₁ + (ν−2)β), …)`
//! on the torus truncated to `V` coordinates.
//!
//! Coordinate `ν` only ever reads `x₁` and itself, so truncation to `V`
//! coordinates is exact.

use std::sync::Arc;

use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::{One, ToPrimitive};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::certificate::{Certificate, Witness};
use crate::contfrac::{AngleCF, AngleDocument, ResidueCursor, SplitAngle, Tau};
use crate::error::{Error, Result};
use crate::harmonic::{
    solve_coboundary, split_tau, CoboundaryFunction, FourierSeries, Regime, SeriesDocument,
};
use crate::moebius::{PhaseCursor, PhaseSource};
use crate::numeric::{e, fixed128_to_f64, frac, ComplexKahan, ModOneSum};

/// Point of the truncated torus; every coordinate in `[0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    coords: Vec<f64>,
}

impl TorusPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: coords.len(),
            });
        }
        if let Some(x) = coords.iter().find(|x| !(0.0..1.0).contains(*x)) {
            return Err(Error::Domain(format!("coordinate {x} outside [0, 1)")));
        }
        Ok(Self { coords })
    }

    /// Coordinates reduced mod 1.
    pub fn wrapping(coords: Vec<f64>) -> Result<Self> {
        Self::new(coords.into_iter().map(frac).collect())
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Self {
        Self {
            coords: (0..dim.max(2)).map(|_| rng.random::<f64>()).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// `x_ν`, 1-based.
    pub fn x(&self, nu: usize) -> f64 {
        self.coords[nu - 1]
    }
}

/// Finitely supported `b = (b₁, …, b_{ν′})`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyVector {
    entries: Vec<i64>,
    rho: i64,
    norm: i64,
}

impl FrequencyVector {
    pub fn new(mut entries: Vec<i64>) -> Self {
        while entries.last() == Some(&0) {
            entries.pop();
        }
        let rho = entries.iter().skip(1).sum();
        let norm = entries.iter().skip(1).map(|b| b.abs()).sum();
        Self { entries, rho, norm }
    }

    /// `e_ν`, 1-based.
    pub fn unit(nu: usize) -> Self {
        let mut v = vec![0; nu];
        v[nu - 1] = 1;
        Self::new(v)
    }

    pub fn zero() -> Self {
        Self::new(Vec::new())
    }

    pub fn entries(&self) -> &[i64] {
        &self.entries
    }

    /// `b_ν`, 1-based; zero past the support.
    pub fn b(&self, nu: usize) -> i64 {
        self.entries.get(nu - 1).copied().unwrap_or(0)
    }

    /// `ν′`, the last nonzero index (0 for `b = 0`).
    pub fn support(&self) -> usize {
        self.entries.len()
    }

    /// `Σ_{ν≥2} b_ν`.
    pub fn rho(&self) -> i64 {
        self.rho
    }

    /// `Σ_{ν≥2} |b_ν|`.
    pub fn norm(&self) -> i64 {
        self.norm
    }

    pub fn consistent(&self) -> bool {
        *self == Self::new(self.entries.clone())
    }

    /// `b₁;b₂;…`, as used in CSV cells.
    pub fn label(&self) -> String {
        if self.entries.is_empty() {
            return "0".into();
        }
        self.entries
            .iter()
            .map(|b| b.to_string())
            .collect::<Vec<_>>()
            .join(";")
    }
}

/// `(√5 − 1)/2` in 0.128 fixed point.
pub fn golden_beta() -> u128 {
    // floor(√(5·2^256)) − 2^128, halved
    let root = (BigUint::from(5u32) << 256u32).sqrt();
    let v: BigUint = (root - (BigUint::one() << 128u32)) >> 1u32;
    v.to_u128().expect("fits 128 bits")
}

#[derive(Debug, Clone)]
pub struct FlowConfig {
    pub alpha: AngleCF,
    /// Fractional part of `β` in 0.128 fixed point.
    pub beta: u128,
    pub h: FourierSeries,
    pub dim: usize,
}

impl FlowConfig {
    pub fn new(alpha: AngleCF, h: FourierSeries, dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: dim,
            });
        }
        Ok(Self {
            alpha,
            beta: golden_beta(),
            h,
            dim,
        })
    }

    /// `{(ν−2)β}` exactly in fixed point, then rounded.
    pub fn offset(&self, nu: usize) -> f64 {
        fixed128_to_f64(self.offset_fixed(nu, 1))
    }

    /// `{m(ν−2)β}` in fixed point.
    fn offset_fixed(&self, nu: usize, m: u64) -> u128 {
        self.beta
            .wrapping_mul((nu as u128).wrapping_sub(2))
            .wrapping_mul(m as u128)
    }

    fn check(&self, x: &TorusPoint) -> Result<()> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.dim(),
            });
        }
        Ok(())
    }

    pub fn to_document(&self) -> FlowDocument {
        FlowDocument {
            angle: self.alpha.to_document(),
            beta: format!("{:032x}", self.beta),
            h: self.h.to_document(),
            dim: self.dim,
        }
    }

    pub fn from_document(doc: &FlowDocument) -> Result<Self> {
        let beta = u128::from_str_radix(&doc.beta, 16)
            .map_err(|_| Error::Format(format!("bad beta {:?}", doc.beta)))?;
        let mut cfg = Self::new(
            AngleCF::from_document(&doc.angle)?,
            FourierSeries::from_document(&doc.h)?,
            doc.dim,
        )?;
        cfg.beta = beta;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowDocument {
    pub angle: AngleDocument,
    /// 0.128 fixed point, hexadecimal.
    pub beta: String,
    pub h: SeriesDocument,
    pub dim: usize,
}

/// `t + {(ν−2)β}` reduced.
fn arg(t: f64, off: f64) -> f64 {
    frac(t + off)
}

/// One application of `T`.
pub fn step(cfg: &FlowConfig, x: &TorusPoint) -> Result<TorusPoint> {
    orbit_direct(cfg, x, 1)
}

/// `Tⁿx` by summing `h` along the base orbit, one term per step.
pub fn orbit_direct(cfg: &FlowConfig, x: &TorusPoint, n: u64) -> Result<TorusPoint> {
    Ok(orbit_direct_checkpoints(cfg, x, &[n])?.pop().unwrap())
}

/// `Tⁿx` for every `n` in `checkpoints` (ascending) along one pass.
pub fn orbit_direct_checkpoints(
    cfg: &FlowConfig,
    x: &TorusPoint,
    checkpoints: &[u64],
) -> Result<Vec<TorusPoint>> {
    cfg.check(x)?;
    let last = checkpoints.last().copied().unwrap_or(0);
    if last > cfg.alpha.n_max() {
        return Err(Error::PrecisionViolation {
            n: last,
            n_max: cfg.alpha.n_max(),
        });
    }
    if checkpoints.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Domain("checkpoints must be ascending".into()));
    }
    let offsets: Vec<f64> = (2..=cfg.dim).map(|nu| cfg.offset(nu)).collect();
    let x1 = x.x(1);
    let mut sums: Vec<ModOneSum> = (2..=cfg.dim).map(|nu| ModOneSum::new(x.x(nu))).collect();
    let mut cur = cfg.alpha.cursor(1, 0);
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut next = checkpoints.iter().peekable();
    let mut j = 0u64;
    loop {
        while next.peek() == Some(&&j) {
            next.next();
            let mut coords = Vec::with_capacity(cfg.dim);
            coords.push(frac(x1 + cur.unsigned_f64()));
            coords.extend(sums.iter().map(|s| s.value()));
            out.push(TorusPoint { coords });
        }
        if j == last {
            break;
        }
        let base = x1 + cur.unsigned_f64();
        for (s, off) in sums.iter_mut().zip(&offsets) {
            s.add(cfg.h.eval(arg(base, *off)));
        }
        cur.advance();
        j += 1;
    }
    Ok(out)
}

/// Per-frequency data for the closed-form orbit.
#[derive(Debug, Clone)]
struct Term {
    m: u64,
    coeff: Complex64,
    /// Signed `{mα}`.
    theta: f64,
    inv_sin: f64,
}

fn terms_of(h: &FourierSeries, angle: &AngleCF) -> Vec<Term> {
    h.positive()
        .filter(|(_, c)| *c != Complex64::default())
        .map(|(m, c)| {
            let theta = angle.signed_phase(m as i64);
            Term {
                m,
                coeff: c,
                theta,
                inv_sin: 1.0 / (std::f64::consts::PI * theta).sin(),
            }
        })
        .collect()
}

/// `(e(nθ) − 1)/(e(θ) − 1)` from `φ = {nθ}` (signed); `n` when `θ = 0`.
#[inline]
fn kernel(t: &Term, phi: f64, n: u64) -> Complex64 {
    if t.theta == 0.0 {
        return Complex64::new(n as f64, 0.0);
    }
    let pi = std::f64::consts::PI;
    let r = (pi * phi).sin() * t.inv_sin;
    let (s, c) = (pi * (phi - t.theta)).sin_cos();
    Complex64::new(r * c, r * s)
}

/// `Tⁿx` in closed form: each coordinate is
/// `x_ν + n·ĥ(0) + Σ_m ĥ(m) e(m(x₁ + (ν−2)β)) (e(mnα) − 1)/(e(mα) − 1)`.
pub fn orbit_fast(cfg: &FlowConfig, x: &TorusPoint, n: u64) -> Result<TorusPoint> {
    FastOrbit::new(cfg).at(x, n)
}

/// Reusable precomputation for [`orbit_fast`].
pub struct FastOrbit<'a> {
    cfg: &'a FlowConfig,
    terms: Vec<Term>,
    split: SplitAngle,
}

impl<'a> FastOrbit<'a> {
    pub fn new(cfg: &'a FlowConfig) -> Self {
        Self {
            cfg,
            terms: terms_of(&cfg.h, &cfg.alpha),
            split: cfg.alpha.split(),
        }
    }

    pub fn at(&self, x: &TorusPoint, n: u64) -> Result<TorusPoint> {
        let cfg = self.cfg;
        cfg.check(x)?;
        if n > cfg.alpha.n_max() {
            return Err(Error::PrecisionViolation {
                n,
                n_max: cfg.alpha.n_max(),
            });
        }
        let x1 = x.x(1);
        // kernels are shared by all coordinates
        let kernels: Vec<Complex64> = self
            .terms
            .iter()
            .map(|t| kernel(t, self.split.signed_phase(t.m as u128 * n as u128), n))
            .collect();
        let drift = frac(cfg.h.mean() * n as f64);
        let mut coords = Vec::with_capacity(cfg.dim);
        coords.push(frac(x1 + self.split.phase(n as u128)));
        for nu in 2..=cfg.dim {
            let mut acc = ComplexKahan::new();
            for (t, k) in self.terms.iter().zip(&kernels) {
                let ph = t.m as f64 * x1 + fixed128_to_f64(cfg.offset_fixed(nu, t.m));
                acc.add(2.0 * t.coeff * e(ph) * k);
            }
            coords.push(frac(x.x(nu) + drift + acc.value().re));
        }
        Ok(TorusPoint { coords })
    }
}

/// `Σ b_ν x_ν mod 1`.
pub fn pairing(b: &FrequencyVector, x: &TorusPoint) -> Result<f64> {
    if b.support() > x.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            got: b.support(),
        });
    }
    let mut s = ModOneSum::new(0.0);
    for (bi, xi) in b.entries().iter().zip(x.coords()) {
        s.add(frac(*bi as f64 * xi));
    }
    Ok(s.value())
}

/// `d(x, y) = Σ_ν 2^{−ν}‖x_ν − y_ν‖`.
pub fn metric_d(x: &TorusPoint, y: &TorusPoint) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            got: y.dim(),
        });
    }
    let mut w = 1.0;
    let mut d = 0.0;
    for (a, b) in x.coords().iter().zip(y.coords()) {
        w *= 0.5;
        d += w * crate::contfrac::dist_to_int(a - b);
    }
    Ok(d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistalityReport {
    pub min_distance: f64,
    pub n_at_min: u64,
    pub bound: f64,
    /// First coordinate where the points differ.
    pub nu0: usize,
    /// `max_n |d(Tⁿx, Tⁿy) − d(x, y)|`, tracked when `x₁ = y₁`.
    pub constant_deviation: Option<f64>,
    pub pass: bool,
}

/// Minimum of `d(Tⁿx, Tⁿy)` over `0 ≤ n ≤ n_max` against the lower bound
/// `2^{−ν₀}‖x_{ν₀} − y_{ν₀}‖`.
pub fn distality_probe(
    cfg: &FlowConfig,
    x: &TorusPoint,
    y: &TorusPoint,
    n_max: u64,
) -> Result<DistalityReport> {
    cfg.check(x)?;
    cfg.check(y)?;
    let nu0 = x
        .coords()
        .iter()
        .zip(y.coords())
        .position(|(a, b)| a != b)
        .ok_or_else(|| Error::Domain("points coincide".into()))?
        + 1;
    let bound = 0.5f64.powi(nu0 as i32) * crate::contfrac::dist_to_int(x.x(nu0) - y.x(nu0));
    let d0 = metric_d(x, y)?;
    let same_base = nu0 > 1;

    let offsets: Vec<f64> = (2..=cfg.dim).map(|nu| cfg.offset(nu)).collect();
    let mut sx: Vec<ModOneSum> = (2..=cfg.dim).map(|nu| ModOneSum::new(x.x(nu))).collect();
    let mut sy: Vec<ModOneSum> = (2..=cfg.dim).map(|nu| ModOneSum::new(y.x(nu))).collect();
    let mut cur = cfg.alpha.cursor(1, 0);
    let (mut min_d, mut n_at_min, mut dev) = (d0, 0, 0f64);
    for n in 1..=n_max {
        let bx = x.x(1) + cur.unsigned_f64();
        let by = y.x(1) + cur.unsigned_f64();
        for (i, off) in offsets.iter().enumerate() {
            let hx = cfg.h.eval(arg(bx, *off));
            sx[i].add(hx);
            let hy = if same_base { hx } else { cfg.h.eval(arg(by, *off)) };
            sy[i].add(hy);
        }
        cur.advance();
        let base = cur.unsigned_f64();
        let mut px = vec![frac(x.x(1) + base)];
        px.extend(sx.iter().map(|s| s.value()));
        let mut py = vec![frac(y.x(1) + base)];
        py.extend(sy.iter().map(|s| s.value()));
        let d = metric_d(&TorusPoint { coords: px }, &TorusPoint { coords: py })?;
        if d < min_d {
            min_d = d;
            n_at_min = n;
        }
        dev = dev.max((d - d0).abs());
    }
    let constant_deviation = same_base.then_some(dev);
    let pass = min_d >= bound - 1e-12 && constant_deviation.is_none_or(|v| v <= 1e-12);
    Ok(DistalityReport {
        min_distance: min_d,
        n_at_min,
        bound,
        nu0,
        constant_deviation,
        pass,
    })
}

/// Incremental phase `⟨b, Tⁿx⟩ − Σ b_ν x_ν` along consecutive `n`.
///
/// The phase is `b₁nα + nρ(b)ĥ(0) + 2 Re Σ_{m>0} C_m K_m(n)` with
/// `C_m = ĥ(m) Σ_{ν≥2} b_ν e(m(x₁ + (ν−2)β))` and `K_m` the geometric kernel;
/// `{nα}` and every `{mnα}` advance by exact residue cursors.
#[derive(Clone)]
pub struct PhaseEngine {
    data: Arc<EngineData>,
}

struct EngineData {
    modulus: BigUint,
    base_step: BigUint,
    drift: f64,
    /// `(term, 2C_m, residue of m)`.
    terms: Vec<(Term, Complex64, BigUint)>,
}

impl PhaseEngine {
    pub fn new(cfg: &FlowConfig, b: &FrequencyVector, x: &TorusPoint) -> Result<Self> {
        Self::with_series(cfg, &cfg.h, b, x)
    }

    /// Engine for `h` in place of `cfg.h` (same angle, `β`, dimension).
    pub fn with_series(
        cfg: &FlowConfig,
        h: &FourierSeries,
        b: &FrequencyVector,
        x: &TorusPoint,
    ) -> Result<Self> {
        cfg.check(x)?;
        if b.support() > cfg.dim {
            return Err(Error::DimensionMismatch {
                expected: cfg.dim,
                got: b.support(),
            });
        }
        let angle = &cfg.alpha;
        let x1 = x.x(1);
        let mut terms = Vec::new();
        if b.norm() != 0 {
            for t in terms_of(h, angle) {
                let mut c = ComplexKahan::new();
                for nu in 2..=b.support() {
                    let bn = b.b(nu);
                    if bn != 0 {
                        let ph = t.m as f64 * x1 + fixed128_to_f64(cfg.offset_fixed(nu, t.m));
                        c.add(e(ph) * bn as f64);
                    }
                }
                let cm = t.coeff * c.value();
                if cm != Complex64::default() {
                    let step = angle.residue_i64(t.m as i64);
                    terms.push((t, 2.0 * cm, step));
                }
            }
        }
        Ok(Self {
            data: Arc::new(EngineData {
                modulus: angle.snapshot().q.clone(),
                base_step: angle.residue_i64(b.b(1)),
                drift: b.rho() as f64 * h.mean(),
                terms,
            }),
        })
    }

    pub fn term_count(&self) -> usize {
        self.data.terms.len()
    }
}

pub struct EngineCursor {
    data: Arc<EngineData>,
    n: u64,
    base: ResidueCursor,
    kernels: Vec<ResidueCursor>,
}

impl PhaseSource for PhaseEngine {
    type Cursor = EngineCursor;

    fn cursor_at(&self, n: u64) -> EngineCursor {
        let d = &self.data;
        let at = |step: &BigUint| {
            ResidueCursor::new((step * n) % &d.modulus, step.clone(), d.modulus.clone())
        };
        EngineCursor {
            data: Arc::clone(d),
            n,
            base: at(&d.base_step),
            kernels: d.terms.iter().map(|(_, _, s)| at(s)).collect(),
        }
    }
}

impl PhaseCursor for EngineCursor {
    fn phase(&self) -> f64 {
        let d = &*self.data;
        let mut p = self.base.unsigned_f64();
        if d.drift != 0.0 {
            p += frac(d.drift * self.n as f64);
        }
        if !d.terms.is_empty() {
            let mut acc = 0.0;
            for ((t, c, _), k) in d.terms.iter().zip(&self.kernels) {
                acc += (c * kernel(t, k.signed_f64(), self.n)).re;
            }
            p += acc;
        }
        p
    }

    fn advance(&mut self) {
        self.base.advance();
        for k in &mut self.kernels {
            k.advance();
        }
        self.n += 1;
    }
}

/// `(1/N) Σ_{n=1}^{N} e(⟨b, Tⁿx⟩)`.
pub fn birkhoff_avg(cfg: &FlowConfig, b: &FrequencyVector, x: &TorusPoint, n: u64) -> Result<Complex64> {
    Ok(birkhoff_avgs(cfg, b, x, &[n])?[0])
}

/// Averages at several ascending `N` along one pass.
pub fn birkhoff_avgs(
    cfg: &FlowConfig,
    b: &FrequencyVector,
    x: &TorusPoint,
    ns: &[u64],
) -> Result<Vec<Complex64>> {
    if ns.first() == Some(&0) || ns.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Domain("N must be positive and ascending".into()));
    }
    let last = ns.last().copied().unwrap_or(0);
    if last > cfg.alpha.n_max() {
        return Err(Error::PrecisionViolation {
            n: last,
            n_max: cfg.alpha.n_max(),
        });
    }
    let engine = PhaseEngine::new(cfg, b, x)?;
    let c0 = e(pairing(b, x)?);
    let mut cur = engine.cursor_at(1);
    let mut acc = ComplexKahan::new();
    let mut out = Vec::with_capacity(ns.len());
    let mut next = ns.iter().peekable();
    for n in 1..=last {
        acc.add(e(cur.phase()));
        cur.advance();
        while next.peek() == Some(&&n) {
            next.next();
            out.push(c0 * acc.value() / n as f64);
        }
    }
    Ok(out)
}

/// The straightened map `T₁` and the conjugacy `Ψ` for a growth exponent `τ`.
pub struct Conjugacy<'a> {
    pub cfg: &'a FlowConfig,
    pub mean: f64,
    /// Resonant part `h₁′`.
    pub h1: FourierSeries,
    /// `ψ` with `ψ(t+α) − ψ(t) = h₂′(t)`.
    pub psi: CoboundaryFunction,
}

impl<'a> Conjugacy<'a> {
    pub fn new(cfg: &'a FlowConfig, tau: Tau) -> Result<Self> {
        let (h1, h2, mean) = split_tau(&cfg.h, &cfg.alpha, tau)?;
        let psi = solve_coboundary(&h2, &cfg.alpha, Regime::Tau(tau))?;
        Ok(Self { cfg, mean, h1, psi })
    }

    fn shift(&self, x: &TorusPoint, sign: f64) -> Result<TorusPoint> {
        self.cfg.check(x)?;
        let mut coords = x.coords.clone();
        for nu in 2..=self.cfg.dim {
            let p = self.psi.eval(arg(x.x(1), self.cfg.offset(nu)));
            coords[nu - 1] = frac(x.x(nu) + sign * p);
        }
        Ok(TorusPoint { coords })
    }

    /// `Ψ(x)_ν = x_ν − ψ(x₁ + (ν−2)β)`.
    pub fn psi(&self, x: &TorusPoint) -> Result<TorusPoint> {
        self.shift(x, -1.0)
    }

    pub fn psi_inv(&self, x: &TorusPoint) -> Result<TorusPoint> {
        self.shift(x, 1.0)
    }

    /// `T₁(x)_ν = x_ν + ĥ(0) + h₁′(x₁ + (ν−2)β)`.
    pub fn step_t1(&self, x: &TorusPoint) -> Result<TorusPoint> {
        self.cfg.check(x)?;
        let mut coords = Vec::with_capacity(self.cfg.dim);
        coords.push(frac(x.x(1) + self.cfg.alpha.frac_f64()));
        for nu in 2..=self.cfg.dim {
            let t = arg(x.x(1), self.cfg.offset(nu));
            coords.push(frac(x.x(nu) + self.mean + self.h1.eval(t)));
        }
        Ok(TorusPoint { coords })
    }

    /// Float allowance per step: every series evaluation is within
    /// `16ε(1 + 2π·m_max)` times its coefficient mass.
    pub fn float_budget_per_step(&self) -> f64 {
        let h = &self.cfg.h;
        let m_max = h.max_frequency().max(self.psi.series.max_frequency()) as f64;
        let mass = 1.0 + h.l1() + 2.0 * self.psi.series.l1();
        16.0 * f64::EPSILON * mass * (1.0 + 2.0 * std::f64::consts::PI * m_max)
    }

    /// Declared bound on `max_ν ‖(Tⁿx)_ν − (Ψ⁻¹T₁ⁿΨx)_ν‖`: `n` times the
    /// coboundary identity bound plus the float allowance for `n + 2` steps.
    pub fn budget(&self, n: u64) -> f64 {
        n as f64 * self.psi.identity_error_bound + (n + 2) as f64 * self.float_budget_per_step()
    }
}

/// Compares `Tⁿx` with `Ψ⁻¹(T₁ⁿ(Ψx))` for every `1 ≤ n ≤ n_max`.
pub fn check_conjugacy(conj: &Conjugacy<'_>, n_max: u64, x: &TorusPoint) -> Result<Certificate> {
    let cfg = conj.cfg;
    let checkpoints: Vec<u64> = (1..=n_max).collect();
    let direct = orbit_direct_checkpoints(cfg, x, &checkpoints)?;
    let y0 = conj.psi(x)?;
    let offsets: Vec<f64> = (2..=cfg.dim).map(|nu| cfg.offset(nu)).collect();
    let mut sums: Vec<ModOneSum> = (2..=cfg.dim).map(|nu| ModOneSum::new(y0.x(nu))).collect();
    let mut cur = cfg.alpha.cursor(1, 0);
    let mut pass = true;
    let mut worst: Option<Witness> = None;
    for (i, t) in direct.iter().enumerate() {
        let n = i as u64 + 1;
        let base = x.x(1) + cur.unsigned_f64();
        for (s, off) in sums.iter_mut().zip(&offsets) {
            s.add(conj.mean + conj.h1.eval(arg(base, *off)));
        }
        cur.advance();
        let mut coords = vec![frac(x.x(1) + cur.unsigned_f64())];
        coords.extend(sums.iter().map(|s| s.value()));
        let back = conj.psi_inv(&TorusPoint { coords })?;
        let defect = t
            .coords()
            .iter()
            .zip(back.coords())
            .map(|(a, b)| crate::contfrac::dist_to_int(a - b))
            .fold(0.0, f64::max);
        let budget = conj.budget(n);
        pass &= defect <= budget;
        let ratio = defect / budget;
        if worst.as_ref().is_none_or(|w| ratio > w.ratio) {
            worst = Some(Witness {
                at: format!("n={n} defect={defect:.3e} budget={budget:.3e}"),
                ratio,
            });
        }
    }
    Ok(Certificate {
        claim: "T^n x = Psi^-1 T1^n Psi x within budget".into(),
        range: format!("1 <= n <= {n_max}"),
        pass,
        worst_witness: worst,
        exhaustive: true,
        checked: n_max,
    })
}

/// CSV rows `n,x1,…,xV`.
pub fn orbit_csv(points: &[(u64, TorusPoint)]) -> String {
    let mut out = String::new();
    if let Some((_, p)) = points.first() {
        out.push('n');
        for nu in 1..=p.dim() {
            out.push_str(&format!(",x{nu}"));
        }
        out.push('\n');
    }
    for (n, p) in points {
        out.push_str(&n.to_string());
        for c in p.coords() {
            out.push_str(&format!(",{c:e}"));
        }
        out.push('\n');
    }
    out
}
