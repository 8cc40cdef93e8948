//! One pass/fail line per acceptance criterion; exits non-zero on any failure.

use std::f64::consts::{FRAC_PI_4, PI, SQRT_2};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use dcmap::format::{lattice_from_json, lattice_to_json};
use dcmap_core::asymptotics::{
    check_diagonal_growth, check_lemma_bounds, check_painleve_asymptote, check_xy_decay,
    fit_radius_growth, LinearizedModel,
};
use dcmap_core::geometry::{circles, incidence_check, is_embedded, is_immersed};
use dcmap_core::painleve::{alpha_from_lattice, dpii_residual, dpii_solve};
use dcmap_core::radii::{
    extract_radii, radius_residuals, xy_from_radii, xy_residuals, Radius, RadiusField,
    SublatticeLabel,
};
use dcmap_core::{
    dual_map, generate, generate_naive, Complex, ConformalLattice, DualAnchor, ExtendedComplex,
    LatticeIndex, LatticeKind, ToleranceConfig,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn tol() -> ToleranceConfig {
    ToleranceConfig::default()
}

fn ensure(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn lattice(kind: LatticeKind, c: f64, size: usize) -> Result<ConformalLattice, String> {
    generate(kind, c, size).map_err(|e| format!("generate {kind:?} c={c} size={size}: {e}"))
}

fn field(lat: &ConformalLattice) -> Result<RadiusField, String> {
    extract_radii(lat, &tol()).map_err(|e| format!("radii: {e}"))
}

fn radius(f: &RadiusField, n: i64, m: i64) -> Result<f64, String> {
    f.finite(SublatticeLabel::new(n, m))
        .map_err(|e| e.to_string())
}

/// The Z^c family of the criteria; c = 2 means the Z^2 lattice.
fn zc_or_z2(c: f64, size: usize) -> Result<ConformalLattice, String> {
    if c == 2.0 {
        lattice(LatticeKind::Z2, 0.0, size)
    } else {
        lattice(LatticeKind::Zc, c, size)
    }
}

fn within_time(msg: String, elapsed: Duration, limit: Duration) -> Outcome {
    ensure(
        elapsed < limit,
        format!(
            "{msg}; {:.2} s (limit {:.0} s)",
            elapsed.as_secs_f64(),
            limit.as_secs_f64()
        ),
    )
}

fn identity_case() -> Outcome {
    let start = Instant::now();
    let lat = lattice(LatticeKind::Zc, 1.0, 100)?;
    let mut value_err: f64 = 0.0;
    for n in 0..=100 {
        for m in 0..=100 {
            let z = lat
                .finite_at(LatticeIndex::new(n, m))
                .map_err(|e| e.to_string())?;
            value_err = value_err.max((z - Complex::new(n as f64, m as f64)).norm());
        }
    }
    let f = field(&lat)?;
    let radius_err = f
        .iter()
        .map(|(_, r)| r.finite().map_or(f64::INFINITY, |r| (r - 1.0).abs()))
        .fold(0.0, f64::max);
    let mut alpha_err: f64 = 0.0;
    for n in 0..100 {
        let a = alpha_from_lattice(&lat, n, &tol()).map_err(|e| e.to_string())?;
        alpha_err = alpha_err.max((a - FRAC_PI_4).abs());
    }
    let elapsed = start.elapsed();
    let msg =
        format!("max |f-(n+im)| {value_err:.1e}, |R-1| {radius_err:.1e}, |α-π/4| {alpha_err:.1e}");
    ensure(
        value_err < 1e-12 && radius_err < 1e-12 && alpha_err < 1e-12,
        msg.clone(),
    )?;
    within_time(msg, elapsed, Duration::from_secs(1))
}

fn embeddedness() -> Outcome {
    let start = Instant::now();
    let mut parts = Vec::new();
    let mut ok = true;
    let cases = [
        (LatticeKind::Zc, 0.5),
        (LatticeKind::Zc, 1.0),
        (LatticeKind::Zc, 1.5),
        (LatticeKind::Z2, 0.0),
        (LatticeKind::Log, 0.0),
    ];
    for (kind, c) in cases {
        let lat = lattice(kind, c, 40)?;
        let r = is_embedded(&lat, &tol());
        ok &= r.passed();
        let name = if kind == LatticeKind::Zc {
            format!("c={c}")
        } else {
            kind.as_str().to_string()
        };
        parts.push(format!(
            "{name}: {} quads {} pairs {} bad",
            r.tested_quads,
            r.tested_pairs,
            r.violations.len()
        ));
    }
    let msg = parts.join("; ");
    ensure(ok, msg.clone())?;
    within_time(msg, start.elapsed(), Duration::from_secs(30))
}

fn negative_fixture() -> Outcome {
    let start = Instant::now();
    let lat = generate_naive(1.5, 12).map_err(|e| e.to_string())?;
    let r = is_immersed(&lat, &tol());
    let elapsed = start.elapsed();
    let w = r
        .first_violation()
        .ok_or_else(|| "naive lattice reported as immersed".to_string())?;
    let msg = format!(
        "{} violations, witness ({},{})/({},{}) {:?}",
        r.violations.len(),
        w.first.n,
        w.first.m,
        w.second.n,
        w.second.m,
        w.kind
    );
    within_time(msg, elapsed, Duration::from_secs(1))
}

fn incidence() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (kind, c) in [
        (LatticeKind::Zc, 0.5),
        (LatticeKind::Zc, 1.0),
        (LatticeKind::Zc, 1.5),
        (LatticeKind::Z2, 0.0),
        (LatticeKind::Log, 0.0),
    ] {
        let lat = lattice(kind, c, 40)?;
        let pat = circles(&lat, &tol()).map_err(|e| e.to_string())?;
        let r = incidence_check(&pat, 1e-8);
        ok &= r.passed();
        parts.push(format!(
            "{}{}: {} bad, max {:.1e}",
            kind.as_str(),
            if kind == LatticeKind::Zc {
                format!(" {c}")
            } else {
                String::new()
            },
            r.violations.len(),
            r.max_defect
        ));
    }
    ensure(ok, parts.join("; "))
}

fn radius_system() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for c in [0.5, 1.5] {
        let f = field(&lattice(LatticeKind::Zc, c, 60)?)?;
        let mut radius_max: f64 = 0.0;
        let mut radius_count = 0;
        for z in f.interior_labels() {
            if let Ok(r) = radius_residuals(&f, z) {
                radius_max = radius_max.max(r.max());
                radius_count += 1;
            }
        }
        let xy = xy_from_radii(&f);
        let mut edge_max: f64 = 0.0;
        let mut edge_count = 0;
        for z in xy.x_labels().collect::<Vec<_>>() {
            if let Ok(r) = xy_residuals(&xy, z) {
                edge_max = edge_max.max(r.max());
                edge_count += 1;
            }
        }
        ok &= radius_max < 1e-9 && edge_max < 1e-9 && radius_count > 0 && edge_count > 0;
        parts.push(format!(
            "c={c}: radius eqs {radius_count} max {radius_max:.1e}, edge eqs {edge_count} max {edge_max:.1e}"
        ));

        // a single perturbed radius must be flagged by both forms on the same stencils
        let mut bent = f.clone();
        let z0 = SublatticeLabel::new(3, 21);
        let r0 = radius(&f, 3, 21)?;
        bent.insert(z0, Radius::Finite(r0 * (1.0 + 1e-3)));
        let bent_xy = xy_from_radii(&bent);
        let (mut agree, mut flagged, mut compared) = (true, 0, 0);
        for z in bent.interior_labels() {
            let (Ok(a), Ok(b)) = (radius_residuals(&bent, z), xy_residuals(&bent_xy, z)) else {
                continue;
            };
            compared += 1;
            let (in_ln, in_inner) = (a.ln_r > 1e-9, b.inner > 1e-9);
            agree &= in_ln == in_inner;
            flagged += in_ln as usize;
        }
        ok &= agree && flagged > 0;
        parts.push(format!(
            "perturbed: {flagged} flagged of {compared}, forms agree {agree}"
        ));
    }
    ensure(ok, parts.join("; "))
}

fn seed_values() -> Outcome {
    let mut worst: f64 = 0.0;
    for c in [0.5, 1.0, 1.5] {
        let f = field(&lattice(LatticeKind::Zc, c, 10)?)?;
        worst = worst
            .max((radius(&f, 0, 0)? - 1.0).abs())
            .max((radius(&f, 0, 1)? - (c * PI / 4.0).tan()).abs())
            .max((radius(&f, 1, 1)? - c / (2.0 - c)).abs());
    }
    let z2 = lattice(LatticeKind::Z2, 0.0, 20)?;
    let f = field(&z2)?;
    for n in 1..=10 {
        worst = worst.max((radius(&f, n, n)? - n as f64).abs());
    }
    let z2_11 = z2
        .finite_at(LatticeIndex::new(1, 1))
        .map_err(|e| e.to_string())?;
    worst = worst.max((z2_11 - Complex::new(0.0, 2.0 / PI)).norm());
    let log = lattice(LatticeKind::Log, 0.0, 4)?;
    let log_11 = log
        .finite_at(LatticeIndex::new(1, 1))
        .map_err(|e| e.to_string())?;
    worst = worst.max((log_11 - Complex::new(0.0, PI / 2.0)).norm());
    ensure(
        worst < 1e-10,
        format!("max seed error {worst:.1e} over c ∈ {{0.5, 1, 1.5}}, Z^2, Log"),
    )
}

fn duality() -> Outcome {
    let z2 = lattice(LatticeKind::Z2, 0.0, 40)?;
    let log = lattice(LatticeKind::Log, 0.0, 40)?;
    let (fz, fl) = (field(&z2)?, field(&log)?);
    let (mut radius_err, mut compared, mut skipped): (f64, usize, usize) = (0.0, 0, 0);
    for (z, r) in fl.iter() {
        match (r.finite(), fz.get(z).and_then(|r| r.finite())) {
            (Some(a), Some(b)) if b > 0.0 => {
                radius_err = radius_err.max((a * b - 1.0).abs().min((a - 1.0 / b).abs()));
                compared += 1;
            }
            _ => skipped += 1,
        }
    }
    // anchored at f*(1,0) = 0 the dual of Z^2 is Log rotated by π
    let anchor = DualAnchor {
        index: LatticeIndex::new(1, 0),
        value: Complex::new(0.0, 0.0),
    };
    let dual = dual_map(&z2, anchor, &tol()).map_err(|e| e.to_string())?;
    let (mut value_err, mut shared): (f64, usize) = (0.0, 0);
    for (a, b) in dual.values().iter().zip(log.values()) {
        if let (ExtendedComplex::Finite(a), ExtendedComplex::Finite(b)) = (a, b) {
            value_err = value_err.max((*a + *b).norm() / b.norm().max(1.0));
            shared += 1;
        }
    }
    ensure(
        radius_err < 1e-9 && value_err < 1e-9 && compared > 0 && shared > 0,
        format!(
            "radii: {compared} compared ({skipped} at 0/∞ skipped), max {radius_err:.1e}; \
             dual map: {shared} values, max {value_err:.1e}"
        ),
    )
}

fn lemma_bounds() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for c in [1.25, 1.5, 1.75] {
        let f = field(&lattice(LatticeKind::Zc, c, 60)?)?;
        let r = check_lemma_bounds(&xy_from_radii(&f), tol().abs_tol).map_err(|e| e.to_string())?;
        let slack = r
            .entries
            .iter()
            .map(|e| e.min_slack())
            .fold(f64::INFINITY, f64::min);
        ok &= r.passed() && !r.entries.is_empty();
        parts.push(format!(
            "c={c}: {} labels, {} bad, min slack {slack:.1e}",
            r.entries.len(),
            r.violations.len()
        ));
    }
    ensure(ok, parts.join("; "))
}

fn radius_growth() -> Outcome {
    let start = Instant::now();
    let mut parts = Vec::new();
    let mut ok = true;
    for c in [0.5, 1.5] {
        let f = field(&lattice(LatticeKind::Zc, c, 202)?)?;
        let a = fit_radius_growth(&f, 0, 200).map_err(|e| e.to_string())?;
        let b = fit_radius_growth(&f, 2, 200).map_err(|e| e.to_string())?;
        let change = a
            .relative_change(100, 200)
            .ok_or("missing K_100 or K_200")?;
        let spread = (a.k_estimate - b.k_estimate).abs() / a.k_estimate;
        ok &= change < 0.03 && spread < 0.03;
        parts.push(format!(
            "c={c}: K {:.5}, |K200-K100|/K200 {change:.1e}, N0=2 K {:.5} (spread {spread:.1e})",
            a.k_estimate, b.k_estimate
        ));
    }
    let msg = parts.join("; ");
    ensure(ok, msg.clone())?;
    within_time(msg, start.elapsed(), Duration::from_secs(10))
}

fn xy_decay() -> Outcome {
    let f = field(&lattice(LatticeKind::Zc, 1.5, 204)?)?;
    let r = check_xy_decay(&xy_from_radii(&f), 0).map_err(|e| e.to_string())?;
    let at_200 = r
        .samples
        .iter()
        .find(|s| s.n == 200)
        .map(|s| (200.0 * s.y - r.target).abs())
        .ok_or("no sample at n = 200")?;
    ensure(
        r.passed() && at_200 < r.threshold,
        format!(
            "|n y_n - {:.2}| at n=200: {at_200:.1e} (limit {:.3}), decreasing {}, n^2 x_n {:.4} then {:.4}",
            r.target,
            r.threshold,
            r.decreasing,
            r.n2x_lower,
            r.n2x_upper
        ),
    )
}

fn painleve() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for c in [0.5, 1.5] {
        let sol = dpii_solve(c, 200).map_err(|e| e.to_string())?;
        let r = check_painleve_asymptote(&sol).map_err(|e| e.to_string())?;
        let residual = (0..200)
            .filter_map(|n| dpii_residual(&sol, n).ok())
            .fold(0.0, f64::max);
        let lat = lattice(LatticeKind::Zc, c, 32)?;
        let mut agreement: f64 = 0.0;
        for n in 0..=30 {
            let a = alpha_from_lattice(&lat, n, &tol()).map_err(|e| e.to_string())?;
            agreement = agreement.max((a - sol.alphas()[n]).abs());
        }
        ok &= r.passed() && residual < 1e-9 && agreement < 1e-8;
        parts.push(format!(
            "c={c}: deviation {:.1e} at n={}, decreasing {}, residual {residual:.1e}, lattice gap {agreement:.1e}",
            r.final_deviation(),
            r.deviations.len(),
            r.decreasing
        ));
    }
    ensure(ok, parts.join("; "))
}

fn diagonal() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for c in [1.5, 2.0] {
        let lat = zc_or_z2(c, 101)?;
        let f = field(&lat)?;
        let k = fit_radius_growth(&f, 0, 100).ok().map(|fit| fit.k_estimate);
        for (n0, m0) in [(0, 0), (1, 0)] {
            let r = check_diagonal_growth(&lat, n0, m0, k).map_err(|e| e.to_string())?;
            ok &= r.passed(0.03);
            parts.push(format!(
                "c={c} offset ({n0},{m0}): |arg-cπ/4| {:.1e} at n={}, decreasing {}, |f|/n^c vs K√2/c {:.1e}",
                r.final_deviation(),
                r.checkpoints.last().map_or(0, |c| c.0),
                r.decreasing,
                r.modulus_mismatch.unwrap_or(f64::NAN)
            ));
        }
    }
    ensure(ok, parts.join("; "))
}

fn eigenstructure() -> Outcome {
    let (l1, l2) = LinearizedModel::eigenvalues();
    let vs = LinearizedModel::eigenvectors();
    let m = [[5.0, -2.0], [-2.0, 1.0]];
    let mut vec_err: f64 = 0.0;
    for (v, l) in vs.iter().zip([l1, l2]) {
        for row in 0..2 {
            vec_err = vec_err.max((m[row][0] * v[0] + m[row][1] * v[1] - l * v[row]).abs());
        }
    }
    let err = (l1 * l2 - 1.0)
        .abs()
        .max((l1 + l2 - 6.0).abs())
        .max((l1.max(l2) - (3.0 + 2.0 * SQRT_2)).abs())
        .max((l1.min(l2) - (3.0 - 2.0 * SQRT_2)).abs());
    ensure(
        err < 1e-12 && vec_err < 1e-12,
        format!("λ = {l1:.12}, {l2:.12}; product/sum/closed-form error {err:.1e}, eigenvector error {vec_err:.1e}"),
    )
}

fn run_bin(args: &[&str]) -> Result<(i32, String), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_dcmap"))
        .args(args)
        .output()
        .map_err(|e| format!("spawning dcmap: {e}"))?;
    Ok((
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    ))
}

fn round_trip_and_cli() -> Outcome {
    for (kind, c) in [
        (LatticeKind::Zc, 1.5),
        (LatticeKind::Z2, 0.0),
        (LatticeKind::Log, 0.0),
    ] {
        let lat = lattice(kind, c, 30)?;
        let text = lattice_to_json(&lat);
        let back = lattice_from_json(&text).map_err(|e| e.to_string())?;
        if lattice_to_json(&back) != text || back.values().len() != lat.values().len() {
            return Err(format!("{} JSON round trip differs", kind.as_str()));
        }
        for (a, b) in lat.values().iter().zip(back.values()) {
            let same = match (a, b) {
                (ExtendedComplex::Finite(a), ExtendedComplex::Finite(b)) => {
                    a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits()
                }
                (ExtendedComplex::Infinity, ExtendedComplex::Infinity) => true,
                _ => false,
            };
            if !same {
                return Err(format!(
                    "{} JSON round trip is not bit exact",
                    kind.as_str()
                ));
            }
        }
    }

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let s = |path: &String| path.clone();
    let (zc, z2, log, naive, bad) = (
        p("zc.json"),
        p("z2.json"),
        p("log.json"),
        p("naive.json"),
        p("bad.json"),
    );
    std::fs::write(&bad, "{\"kind\": \"zc\"").map_err(|e| e.to_string())?;

    let expectations: Vec<(Vec<String>, i32)> = vec![
        (
            vec![
                "generate".into(),
                "--kind".into(),
                "zc".into(),
                "--c".into(),
                "0.5".into(),
                "--size".into(),
                "20".into(),
                "-o".into(),
                s(&zc),
            ],
            0,
        ),
        (
            vec![
                "generate".into(),
                "--kind".into(),
                "z2".into(),
                "--size".into(),
                "20".into(),
                "-o".into(),
                s(&z2),
            ],
            0,
        ),
        (
            vec![
                "generate".into(),
                "--kind".into(),
                "log".into(),
                "--size".into(),
                "20".into(),
                "-o".into(),
                s(&log),
            ],
            0,
        ),
        (
            vec![
                "generate".into(),
                "--kind".into(),
                "zc".into(),
                "--c".into(),
                "1.5".into(),
                "--size".into(),
                "12".into(),
                "--naive".into(),
                "-o".into(),
                s(&naive),
            ],
            0,
        ),
        (vec!["render".into(), s(&zc), "-o".into(), p("fig1.svg")], 0),
        (vec!["render".into(), s(&z2), "-o".into(), p("fig3.svg")], 0),
        (
            vec!["render".into(), s(&log), "-o".into(), p("fig5.svg")],
            0,
        ),
        (
            vec![
                "check".into(),
                s(&zc),
                "--which".into(),
                "embedded".into(),
                "-o".into(),
                p("ok.json"),
            ],
            0,
        ),
        (
            vec![
                "check".into(),
                s(&naive),
                "--which".into(),
                "immersed".into(),
                "-o".into(),
                p("fail.json"),
            ],
            1,
        ),
        (
            vec![
                "generate".into(),
                "--kind".into(),
                "zc".into(),
                "--c".into(),
                "2.5".into(),
            ],
            2,
        ),
        (
            vec!["check".into(), s(&bad), "--which".into(), "embedded".into()],
            2,
        ),
        (vec!["generate".into(), "--bogus".into()], 2),
        (
            vec![
                "fit".into(),
                s(&zc),
                "--analysis".into(),
                "radius-growth".into(),
            ],
            3,
        ),
    ];
    for (args, want) in &expectations {
        let argv: Vec<&str> = args.iter().map(String::as_str).collect();
        let (code, stderr) = run_bin(&argv)?;
        if code != *want {
            return Err(format!(
                "`dcmap {}` exited {code}, expected {want}: {}",
                argv.join(" "),
                stderr.trim()
            ));
        }
    }
    let mut circle_counts = Vec::new();
    for fig in ["fig1.svg", "fig3.svg", "fig5.svg"] {
        let svg = std::fs::read_to_string(Path::new(&p(fig))).map_err(|e| e.to_string())?;
        if !svg.starts_with("<svg") || !svg.trim_end().ends_with("</svg>") {
            return Err(format!("{fig} is not an SVG document"));
        }
        circle_counts.push(svg.matches("<circle ").count());
    }
    ensure(
        circle_counts.iter().all(|&n| n > 0),
        format!(
            "bit-exact JSON for zc/z2/log; {} exit-code cases; SVG circles {circle_counts:?}",
            expectations.len()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 14] = [
        ("identity case", identity_case),
        ("embeddedness", embeddedness),
        ("naive lattice is not immersed", negative_fixture),
        ("circle pattern incidence", incidence),
        ("radius and edge equations", radius_system),
        ("seed values", seed_values),
        ("duality", duality),
        ("edge-ratio bounds", lemma_bounds),
        ("radius growth", radius_growth),
        ("edge-ratio decay", xy_decay),
        ("Painlevé asymptote", painleve),
        ("diagonal growth", diagonal),
        ("eigenstructure", eigenstructure),
        ("round trip and CLI", round_trip_and_cli),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {:>2} PASS {name}: {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {:>2} FAIL {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
