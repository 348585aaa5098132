use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Subcommand};
use mdl_core::contfrac::{
    build_exp_alpha, build_poly_alpha, certify_convergent_bounds, certify_determinant,
    certify_growth, legendre_locate, AngleCF, AngleKind, Tau,
};
use mdl_core::Certificate;
use serde_json::json;

use crate::manifest::{sha256_hex, Run};
use crate::opts::read_angle_document;
use crate::Status;

#[derive(Debug, Subcommand)]
pub enum AngleCmd {
    /// Build an exp-type angle (q_{k+1} ≍ e^{q_k}) and print or save its document.
    BuildExp {
        #[arg(long, default_value_t = 4)]
        k_star: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// Build a poly-type angle (q_{k+1} ≤ 2q_k^τ).
    BuildPoly {
        #[arg(long, default_value = "4")]
        tau: Tau,
        #[arg(long, default_value_t = 5)]
        k_star: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// Summarise an angle document.
    Inspect {
        #[arg(long)]
        angle: PathBuf,
    },
    /// Re-run the exact checks on an angle document.
    Verify {
        #[arg(long)]
        angle: PathBuf,
        /// Also re-certify the growth law.
        #[arg(long)]
        all: bool,
    },
}

#[derive(Debug, Args)]
pub struct OutArg {
    /// Directory for `angle.json` and the run manifest; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run(cmd: AngleCmd) -> Result<Status> {
    match cmd {
        AngleCmd::BuildExp { k_star, out } => {
            let a = build_exp_alpha(k_star)?;
            emit(&a, "angle build-exp", json!({ "kind": "exp", "k_star": k_star }), out.out)
        }
        AngleCmd::BuildPoly { tau, k_star, out } => {
            let a = build_poly_alpha(tau, k_star)?;
            emit(
                &a,
                "angle build-poly",
                json!({ "kind": "poly", "tau": tau.to_string(), "k_star": k_star }),
                out.out,
            )
        }
        AngleCmd::Inspect { angle } => {
            let a = AngleCF::from_document(&read_angle_document(&angle)?)?;
            inspect(&a);
            Ok(Status::Pass)
        }
        AngleCmd::Verify { angle, all } => verify(&angle, all),
    }
}

fn emit(a: &AngleCF, command: &str, inputs: serde_json::Value, out: Option<PathBuf>) -> Result<Status> {
    let text = serde_json::to_string_pretty(&a.to_document())?;
    match out {
        None => println!("{text}"),
        Some(dir) => {
            let mut run = Run::start(command, inputs);
            let path = run.write(&dir, "angle.json", text.as_bytes())?;
            run.observe("snapshot_digest", sha256_hex(text.as_bytes()));
            run.observe("k_star", a.k_star());
            let manifest = run.finish(&dir)?;
            println!("wrote {} and {}", path.display(), manifest.display());
        }
    }
    Ok(Status::Pass)
}

fn inspect(a: &AngleCF) {
    let kind = match a.kind() {
        AngleKind::Poly { tau } => format!("poly (tau = {tau})"),
        k => k.name().to_string(),
    };
    println!("kind       {kind}");
    println!("k_star     {}", a.k_star());
    println!("n_max      {}", a.n_max());
    println!("alpha      {:.17}", a.frac_f64());
    for (k, c) in a.convergents().iter().enumerate() {
        println!("q_{k:<8} {}", digits(&c.q.to_string()));
    }
    println!("snapshot   q_S {}", digits(&a.snapshot().q.to_string()));
    for g in a.growth() {
        println!("growth k={} ratio {:.6} within {}", g.k, g.ratio, g.within);
    }
}

fn print_cert(c: &Certificate) {
    let verdict = if c.pass { "PASS" } else { "FAIL" };
    let witness = c
        .worst_witness
        .as_ref()
        .map(|w| format!(" worst {} (ratio {:.6e})", w.at, w.ratio))
        .unwrap_or_default();
    println!("{verdict} {} [{}]{witness}", c.claim, c.range);
}

fn verify(path: &std::path::Path, all: bool) -> Result<Status> {
    // an unreadable or inconsistent document is a failed check, not a usage error
    let doc = match read_angle_document(path) {
        Ok(d) => d,
        Err(e) => {
            println!("FAIL document: {e:#}");
            return Ok(Status::Fail);
        }
    };
    let a = match AngleCF::from_document(&doc) {
        Ok(a) => a,
        Err(e) => {
            println!("FAIL document: {e}");
            return Ok(Status::Fail);
        }
    };
    let mut pass = true;
    let consistent = a.snapshot_consistent();
    println!(
        "{} snapshot equals the last convergent",
        if consistent { "PASS" } else { "FAIL" }
    );
    pass &= consistent;
    let mut certs = vec![certify_determinant(&a)];
    if a.k_star() >= 2 {
        certs.push(certify_convergent_bounds(&a));
    }
    if all && a.kind() != AngleKind::Explicit {
        certs.push(certify_growth(&a));
    }
    for c in &certs {
        print_cert(c);
        pass &= c.pass;
    }
    let mut round_trips = 0;
    for (k, c) in a.convergents().iter().enumerate() {
        if (&c.q << 1u32) >= a.snapshot().q {
            continue;
        }
        if let Some(i) = legendre_locate(&c.l, &c.q, &a) {
            round_trips += 1;
            if i != k {
                println!("FAIL Legendre round trip at k = {k} returned {i}");
                pass = false;
            }
        }
    }
    println!("info {round_trips} convergents located by the Legendre criterion");
    Ok(if pass { Status::Pass } else { Status::Fail })
}

/// Leading digits and digit count of a long decimal.
fn digits(s: &str) -> String {
    if s.len() <= 40 {
        s.to_string()
    } else {
        format!("{}…{} ({} digits)", &s[..20], &s[s.len() - 8..], s.len())
    }
}
