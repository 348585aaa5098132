use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Subcommand};
use mdl_core::contfrac::{AngleCF, Tau};
use mdl_core::harmonic::{check_coeff_bound, random_finite_series, solve_coboundary, split};
use mdl_core::spectrum::{
    check_flat_lower_bound_from, check_resonant_scaling, truncation_indices,
};
use mdl_core::Certificate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::manifest::Run;
use crate::opts::{load_angle, parse_count, regime_of, HSpec};
use crate::Status;

#[derive(Debug, Subcommand)]
pub enum CheckCmd {
    /// Flat lower bound ‖mα‖ ≥ 1/(2|m|) and resonant scaling ‖a q_k α‖ = a‖q_k α‖.
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "100000", value_parser = parse_count)]
        m_limit: u64,
        /// Skip bands below this index in the flat scan (0 scans every flat m).
        #[arg(long, default_value_t = 0)]
        from_band: usize,
    },
    /// Coboundary identity g(t+α) − g(t) = h₂(t) on sampled t.
    Coboundary {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "furstenberg")]
        h: HSpec,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Fourier coefficient bound |c(m)| m² ≤ 8(‖f′‖² + ‖f″‖) for e(f).
    CoeffBound {
        #[arg(long, default_value_t = 10)]
        count: u64,
        #[arg(long, default_value_t = 12)]
        terms: usize,
        #[arg(long, default_value_t = 64)]
        max_m: u64,
        #[arg(long, default_value_t = 0.3)]
        amplitude: f64,
        #[arg(long, default_value_t = 1024)]
        m_limit: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Truncation indices K(N) and K′(N).
    Truncation {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "1e4,1e5,1e6,1e7", value_delimiter = ',', value_parser = parse_count)]
        n: Vec<u64>,
        /// Exponent defining the sharp denominators; taken from a poly angle when absent.
        #[arg(long)]
        tau: Option<Tau>,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    /// Angle document; a built exp-type angle when absent.
    #[arg(long)]
    angle: Option<PathBuf>,
    /// Directory for certificates and the run manifest.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn angle_or(common: &Common, default: impl FnOnce() -> Result<AngleCF>) -> Result<(AngleCF, Option<String>)> {
    match &common.angle {
        Some(p) => {
            let (a, digest) = load_angle(p)?;
            Ok((a, Some(digest)))
        }
        None => Ok((default()?, None)),
    }
}

fn exp_default() -> Result<AngleCF> {
    Ok(mdl_core::contfrac::build_exp_alpha(4)?)
}

fn print_cert(c: &Certificate) {
    let verdict = if c.pass { "PASS" } else { "FAIL" };
    let witness = c
        .worst_witness
        .as_ref()
        .map(|w| format!(" worst {} (ratio {:.6e})", w.at, w.ratio))
        .unwrap_or_default();
    let partial = if c.exhaustive { "" } else { " (partial scan)" };
    println!("{verdict} {} [{}]{partial}{witness}", c.claim, c.range);
}

fn finish(out: Option<PathBuf>, mut run: Run, certs: &[Certificate]) -> Result<Status> {
    let pass = certs.iter().all(|c| c.pass);
    if let Some(dir) = out {
        run.write(&dir, "certificates.json", &serde_json::to_vec_pretty(certs)?)?;
        run.observe("pass", pass);
        run.finish(&dir)?;
    }
    Ok(if pass { Status::Pass } else { Status::Fail })
}

pub fn run(cmd: CheckCmd) -> Result<Status> {
    match cmd {
        CheckCmd::Spectrum { common, m_limit, from_band } => {
            let (a, digest) = angle_or(&common, exp_default)?;
            let run = Run::start(
                "check spectrum",
                json!({ "angle": digest, "m_limit": m_limit, "from_band": from_band }),
            );
            let mut certs = vec![check_flat_lower_bound_from(&a, m_limit, from_band)?];
            for k in 1..a.k_star() {
                certs.push(check_resonant_scaling(&a, k)?);
            }
            certs.iter().for_each(print_cert);
            finish(common.out, run, &certs)
        }
        CheckCmd::Coboundary { common, h, samples, seed } => {
            let (a, digest) = angle_or(&common, || h.default_angle())?;
            let run = Run::start(
                "check coboundary",
                json!({ "angle": digest, "h": h, "samples": samples, "seed": seed }),
            );
            let series = h.build(&a, seed)?;
            let regime = regime_of(&a);
            let (_, h2, _) = split(&series, &a, regime)?;
            let g = solve_coboundary(&h2, &a, regime)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut worst = (0.0f64, 0.0f64);
            for _ in 0..samples {
                let t: f64 = rng.random();
                let d = g.defect(t, &a);
                if d > worst.0 {
                    worst = (d, t);
                }
            }
            let bound = g.identity_error_bound + 1e-12;
            let cert = Certificate {
                claim: format!("|g(t+alpha) - g(t) - h2(t)| <= {:.3e} + 1e-12", g.identity_error_bound),
                range: format!("{samples} sampled t, h = {h}"),
                pass: worst.0 <= bound,
                worst_witness: Some(mdl_core::Witness {
                    at: format!("t={:.17} defect={:.3e}", worst.1, worst.0),
                    ratio: worst.0 / bound,
                }),
                exhaustive: false,
                checked: samples as u64,
            };
            print_cert(&cert);
            finish(common.out, run, &[cert])
        }
        CheckCmd::CoeffBound { count, terms, max_m, amplitude, m_limit, seed, out } => {
            let run = Run::start(
                "check coeff-bound",
                json!({ "count": count, "terms": terms, "max_m": max_m,
                        "amplitude": amplitude, "m_limit": m_limit, "seed": seed }),
            );
            let mut certs = Vec::new();
            for s in seed..seed + count {
                let f = random_finite_series(s, terms, max_m, amplitude);
                let c = check_coeff_bound(&f, m_limit)?;
                print_cert(&c);
                certs.push(c);
            }
            finish(out, run, &certs)
        }
        CheckCmd::Truncation { common, n, tau } => {
            let (a, digest) = angle_or(&common, exp_default)?;
            let tau = tau.or(match a.kind() {
                mdl_core::contfrac::AngleKind::Poly { tau } => Some(tau),
                _ => None,
            });
            let mut run = Run::start(
                "check truncation",
                json!({ "angle": digest, "n": n, "tau": tau.map(|t| t.to_string()) }),
            );
            println!("N,K,K_prime,K_prime_convergent,bracketed,log_log_N");
            let mut rows = Vec::new();
            for &v in &n {
                let t = truncation_indices(&a, v, tau)?;
                let opt = |o: Option<usize>| o.map(|x| x.to_string()).unwrap_or_default();
                println!(
                    "{},{},{},{},{},{:.6}",
                    t.n,
                    t.k,
                    opt(t.k_prime),
                    opt(t.k_prime_convergent),
                    t.k_prime_bracketed.map(|b| b.to_string()).unwrap_or_default(),
                    t.log_log_n
                );
                rows.push(t);
            }
            if let Some(dir) = common.out {
                run.write(&dir, "truncation.json", &serde_json::to_vec_pretty(&rows)?)?;
                run.finish(&dir)?;
            }
            Ok(Status::Pass)
        }
    }
}
