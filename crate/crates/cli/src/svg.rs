//! Static SVG line chart of `|S|/M` against `log₁₀ N`, one series per `θ`.

use std::fmt::Write;

use mdl_core::experiments::CorrelationRecord;

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 56.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Groups by `θ` in first-seen order.
fn series(records: &[CorrelationRecord]) -> Vec<(f64, Vec<(f64, f64)>)> {
    let mut out: Vec<(f64, Vec<(f64, f64)>)> = Vec::new();
    for r in records {
        let p = ((r.n as f64).log10(), r.normalized);
        match out.iter_mut().find(|(t, _)| *t == r.theta) {
            Some((_, pts)) => pts.push(p),
            None => out.push((r.theta, vec![p])),
        }
    }
    out
}

pub fn line_chart(records: &[CorrelationRecord], title: &str) -> String {
    let groups = series(records);
    let xs = records.iter().map(|r| (r.n as f64).log10());
    let (mut x0, mut x1) = xs.fold((f64::MAX, f64::MIN), |(a, b), x| (a.min(x), b.max(x)));
    if records.is_empty() {
        (x0, x1) = (0.0, 1.0);
    }
    if x1 - x0 < 1e-9 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    let y1 = records.iter().map(|r| r.normalized).fold(0.0, f64::max).max(1e-12) * 1.1;
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - y / y1 * (H - 2.0 * PAD);

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle">{}</text>"#, W / 2.0, escape(title));
    // axes
    let _ = writeln!(
        s,
        r#"<path d="M{PAD} {PAD} V{} H{}" stroke="black" fill="none"/>"#,
        H - PAD,
        W - PAD
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">log10 N</text>"#,
        W / 2.0,
        H - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">|S|/M</text>"#,
        H / 2.0,
        H / 2.0
    );
    for i in 0..=4 {
        let y = y1 * i as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{:.2e}</text>"#,
            PAD - 4.0,
            sy(y) + 4.0,
            y
        );
    }
    for x in x0.ceil() as i64..=x1.floor() as i64 {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{x}</text>"#,
            sx(x as f64),
            H - PAD + 16.0
        );
    }
    for (i, (theta, pts)) in groups.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            path.join(" ")
        );
        for &(x, y) in pts {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"><title>log10 N = {x:.3}, |S|/M = {y:e}</title></circle>"#,
                sx(x),
                sy(y)
            );
        }
        let ly = PAD + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{ly}" fill="{color}">theta = {theta}</text>"#,
            W - PAD - 90.0
        );
    }
    s.push_str("</svg>\n");
    s
}
