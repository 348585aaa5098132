//! Value parsers for count, series and budget flags.

use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use mdl_core::contfrac::{build_exp_alpha, build_poly_alpha, AngleCF, AngleDocument, AngleKind, Tau};
use mdl_core::harmonic::{analytic_h_sample, furstenberg_default, smooth_h_sample, FourierSeries, Regime};
use mdl_core::moebius::DEFAULT_MEM_BUDGET;
use serde::Serialize;

use crate::manifest::sha256_hex;

pub const MEM_BUDGET_VAR: &str = "MDL_MEM_BUDGET";

/// Positive integer, also written as `1e6` or `10^6`.
pub fn parse_count(s: &str) -> Result<u64> {
    let s = s.trim();
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let v = if let Some((b, e)) = s.split_once('^') {
        let b: u64 = b.parse().with_context(|| format!("bad count {s:?}"))?;
        let e: u32 = e.parse().with_context(|| format!("bad count {s:?}"))?;
        b.checked_pow(e).with_context(|| format!("count {s:?} overflows"))?
    } else {
        let f: f64 = s.parse().with_context(|| format!("bad count {s:?}"))?;
        if !(f.is_finite() && f >= 0.0 && f.fract() == 0.0 && f < 1.8e19) {
            bail!("count {s:?} is not a nonnegative integer");
        }
        f as u64
    };
    Ok(v)
}

/// `l/q` with `q ≥ 1`.
pub fn parse_rational(s: &str) -> Result<(i64, u64)> {
    let (l, q) = s.split_once('/').with_context(|| format!("expected l/q, got {s:?}"))?;
    let l: i64 = l.trim().parse().with_context(|| format!("bad numerator in {s:?}"))?;
    let q: u64 = q.trim().parse().with_context(|| format!("bad denominator in {s:?}"))?;
    if q == 0 {
        bail!("zero denominator in {s:?}");
    }
    if num_gcd(l.unsigned_abs(), q) != 1 {
        bail!("{s:?} is not in lowest terms");
    }
    Ok((l, q))
}

fn num_gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Bytes, with an optional binary `K`, `M` or `G` suffix.
pub fn parse_bytes(s: &str) -> Result<u64> {
    let s = s.trim();
    let (digits, shift) = match s.chars().last() {
        Some('K' | 'k') => (&s[..s.len() - 1], 10),
        Some('M' | 'm') => (&s[..s.len() - 1], 20),
        Some('G' | 'g') => (&s[..s.len() - 1], 30),
        _ => (s, 0),
    };
    let v = parse_count(digits).with_context(|| format!("bad byte count {s:?}"))?;
    v.checked_mul(1 << shift).with_context(|| format!("byte count {s:?} overflows"))
}

pub fn mem_budget() -> Result<u64> {
    match std::env::var(MEM_BUDGET_VAR) {
        Ok(v) => parse_bytes(&v).with_context(|| format!("in {MEM_BUDGET_VAR}")),
        Err(_) => Ok(DEFAULT_MEM_BUDGET),
    }
}

/// Test function selector: `furstenberg`, `analytic:η` or `smooth:τ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "param", rename_all = "lowercase")]
pub enum HSpec {
    Furstenberg,
    Analytic(f64),
    Smooth(f64),
}

impl FromStr for HSpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, param) = match s.split_once(':') {
            Some((n, p)) => (n, Some(p)),
            None => (s, None),
        };
        let param = |default: f64| -> Result<f64> {
            match param {
                Some(p) => p.trim().parse().with_context(|| format!("bad parameter in {s:?}")),
                None => Ok(default),
            }
        };
        match name.trim() {
            "furstenberg" => Ok(HSpec::Furstenberg),
            "analytic" => Ok(HSpec::Analytic(param(1.0)?)),
            "smooth" => Ok(HSpec::Smooth(param(4.0)?)),
            other => bail!("unknown test function {other:?} (furstenberg, analytic:η, smooth:τ)"),
        }
    }
}

impl std::fmt::Display for HSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            HSpec::Furstenberg => write!(f, "furstenberg"),
            HSpec::Analytic(eta) => write!(f, "analytic:{eta}"),
            HSpec::Smooth(tau) => write!(f, "smooth:{tau}"),
        }
    }
}

/// Coefficients kept for the analytic sample: `e^{−ηm}` below `1e−17`.
fn analytic_cut(eta: f64) -> u64 {
    ((39.2 / eta).ceil() as u64).clamp(1, 4000)
}

pub const SMOOTH_CUT: u64 = 200;

impl HSpec {
    pub fn build(&self, angle: &AngleCF, seed: u64) -> Result<FourierSeries> {
        Ok(match *self {
            HSpec::Furstenberg => furstenberg_default(angle, angle.k_star().saturating_sub(1))?,
            HSpec::Analytic(eta) => analytic_h_sample(eta, analytic_cut(eta), seed)?,
            HSpec::Smooth(tau) => smooth_h_sample(tau, SMOOTH_CUT, seed)?,
        })
    }

    /// Angle used when none is given: poly-type for the smooth sample,
    /// exp-type otherwise.
    pub fn default_angle(&self) -> Result<AngleCF> {
        Ok(match self {
            HSpec::Smooth(_) => build_poly_alpha(Tau::integer(4), 5)?,
            _ => build_exp_alpha(4)?,
        })
    }
}

/// Small-divisor regime matching an angle's growth type.
pub fn regime_of(angle: &AngleCF) -> Regime {
    match angle.kind() {
        AngleKind::Poly { tau } => Regime::Tau(tau),
        _ => Regime::Flat,
    }
}

/// Angle from a document, with the SHA-256 of the bytes read. The file is
/// read once, so process substitution works.
pub fn load_angle(path: &Path) -> Result<(AngleCF, String)> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let doc: AngleDocument =
        serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))?;
    Ok((AngleCF::from_document(&doc)?, sha256_hex(&bytes)))
}

pub fn read_angle_document(path: &Path) -> Result<AngleDocument> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}
