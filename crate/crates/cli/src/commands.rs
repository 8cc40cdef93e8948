use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dcmap_core::asymptotics::{
    check_diagonal_growth, check_lemma_bounds, check_painleve_asymptote, check_xy_decay,
    fit_radius_growth, MIN_SAMPLES,
};
use dcmap_core::geometry::{
    circles, incidence_check, is_embedded, is_immersed, OverlapReport, QuadViolation, ViolationKind,
};
use dcmap_core::painleve::{dpii_residual, dpii_solve};
use dcmap_core::radii::{
    dual_radii, extract_radii, radius_residuals, sign_condition, xy_from_radii, xy_residuals,
    RadiusField,
};
use dcmap_core::{
    constraint_residual, dual_map, generate, generate_naive, Complex, ConformalLattice, DualAnchor,
    LatticeIndex, LatticeKind, ToleranceConfig,
};
use serde_json::{json, Value};

use crate::format::{
    lattice_to_json, read_lattice, read_radii_csv, write_painleve_csv, write_radii_csv, FormatError,
};
use crate::render::{render_svg, ColorScheme, RenderOptions};

/// At most this many violations are listed in a report.
const MAX_LISTED: usize = 100;

#[derive(Debug, Parser)]
#[command(
    name = "dcmap",
    version,
    about = "Discrete conformal maps z^c, z^2 and log with their circle patterns"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalOpts {
    /// Relative tolerance of every residual and incidence check.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub rel_tol: f64,
    /// Absolute tolerance of inequality checks.
    #[arg(long, global = true, default_value_t = 1e-12)]
    pub abs_tol: f64,
    /// Lattice size used when `--size` is not given.
    #[arg(long, global = true, default_value_t = 40)]
    pub seed_size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Zc,
    Z2,
    Log,
}

impl From<KindArg> for LatticeKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Zc => LatticeKind::Zc,
            KindArg::Z2 => LatticeKind::Z2,
            KindArg::Log => LatticeKind::Log,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CheckKind {
    Embedded,
    Immersed,
    Incidence,
    Residuals,
    Sign,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Analysis {
    RadiusGrowth,
    XyDecay,
    Diagonal,
    Painleve,
    LemmaBounds,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a lattice and write it as JSON.
    Generate {
        #[arg(long, value_enum)]
        kind: KindArg,
        /// Exponent (Z^c only).
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long)]
        size: Option<usize>,
        /// Equidistant axes without the constraint (Z^c only).
        #[arg(long)]
        naive: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Also write the radii as `N,M,R` CSV.
        #[arg(long)]
        radii: Option<PathBuf>,
    },
    /// Run a check on a lattice; exits 1 when it finds violations.
    Check {
        input: PathBuf,
        #[arg(long, value_enum)]
        which: CheckKind,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Asymptotic analyses; exits 1 when a threshold is missed.
    Fit {
        /// Lattice JSON (not needed for `painleve`).
        input: Option<PathBuf>,
        #[arg(long, value_enum)]
        analysis: Analysis,
        /// Column (radius-growth, xy-decay) or diagonal offset along n.
        #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
        n0: i64,
        /// Diagonal offset along m.
        #[arg(long, default_value_t = 0)]
        m0: usize,
        /// Last sample of the radius column (default: all available).
        #[arg(long)]
        m_max: Option<usize>,
        /// Exponent for `painleve`.
        #[arg(long, default_value_t = 1.5)]
        c: f64,
        #[arg(long, default_value_t = 200)]
        steps: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Draw a lattice and its circle pattern as SVG.
    Render {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        stroke_width: f64,
        #[arg(long, default_value_t = 20.0)]
        padding: f64,
        #[arg(long)]
        no_circles: bool,
        #[arg(long)]
        no_quads: bool,
        #[arg(long, value_enum, default_value_t = ColorScheme::Plain)]
        scheme: ColorScheme,
    },
    /// Dual map of a lattice (JSON), or reciprocal radii (CSV).
    Dual {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Index whose dual value is fixed.
        #[arg(long, num_args = 2, value_names = ["N", "M"], default_values_t = [1, 0])]
        anchor: Vec<usize>,
        /// Dual value at the anchor.
        #[arg(long, num_args = 2, value_names = ["RE", "IM"], default_values_t = [0.0, 0.0], allow_negative_numbers = true)]
        anchor_value: Vec<f64>,
    },
    /// Solve discrete Painlevé II; writes `n,alpha,residual` CSV.
    Painleve {
        #[arg(long)]
        c: f64,
        #[arg(long, default_value_t = 200)]
        steps: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

/// Result of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
}

impl Outcome {
    fn from_pass(pass: bool) -> Self {
        if pass {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }
}

/// Exit code for an error: 2 for usage and input problems, 3 for too
/// little data, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<dcmap_core::Error>() {
            return match e {
                dcmap_core::Error::InsufficientData { .. } => 3,
                dcmap_core::Error::InvalidParameter(_) => 2,
                _ => 1,
            };
        }
        if cause.downcast_ref::<FormatError>().is_some()
            || cause.downcast_ref::<UsageError>().is_some()
        {
            return 2;
        }
    }
    1
}

#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn tolerances(g: &GlobalOpts) -> Result<ToleranceConfig> {
    ToleranceConfig::new(
        g.rel_tol,
        g.abs_tol,
        ToleranceConfig::default().degenerate_tol,
    )
    .map_err(|_| usage("tolerances must be positive"))
}

fn load(path: &Path) -> Result<ConformalLattice> {
    let file = File::open(path)
        .map_err(FormatError::Io)
        .with_context(|| format!("reading {}", path.display()))?;
    read_lattice(BufReader::new(file)).with_context(|| format!("parsing {}", path.display()))
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_json(path: Option<&Path>, value: &Value) -> Result<()> {
    let mut out = sink(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn index_json(i: LatticeIndex) -> Value {
    json!([i.n, i.m])
}

fn violation_json(v: &QuadViolation) -> Value {
    let kind = match v.kind {
        ViolationKind::Overlap => "overlap",
        ViolationKind::SelfIntersecting => "self-intersecting",
        ViolationKind::Degenerate => "degenerate",
    };
    json!({ "first": index_json(v.first), "second": index_json(v.second), "kind": kind })
}

fn overlap_json(name: &str, r: &OverlapReport) -> Value {
    json!({
        "check": name,
        "passed": r.passed(),
        "tested_quads": r.tested_quads,
        "tested_pairs": r.tested_pairs,
        "excluded": r.excluded.iter().copied().map(index_json).collect::<Vec<_>>(),
        "exempt": r.exempt.iter().copied().map(index_json).collect::<Vec<_>>(),
        "violation_count": r.violations.len(),
        "first_violation": r.first_violation().as_ref().map(violation_json),
        "violations": r.violations.iter().take(MAX_LISTED).map(violation_json).collect::<Vec<_>>(),
    })
}

pub fn run(cli: Cli) -> Result<Outcome> {
    let tol = tolerances(&cli.global)?;
    let g = &cli.global;
    match cli.command {
        Command::Generate {
            kind,
            c,
            size,
            naive,
            output,
            radii,
        } => {
            let size = size.unwrap_or(g.seed_size);
            let lat = if naive {
                if kind != KindArg::Zc {
                    return Err(usage("--naive applies to --kind zc only"));
                }
                generate_naive(c, size)?
            } else {
                generate(kind.into(), c, size)?
            };
            let mut out = sink(output.as_deref())?;
            out.write_all(lattice_to_json(&lat).as_bytes())?;
            writeln!(out)?;
            out.flush()?;
            if let Some(path) = radii {
                let field = extract_radii(&lat, &tol)?;
                write_radii_csv(&field, BufWriter::new(File::create(&path)?))?;
            }
            Ok(Outcome::Pass)
        }
        Command::Check {
            input,
            which,
            output,
        } => {
            let lat = load(&input)?;
            let (pass, report) = run_check(&lat, which, &tol);
            write_json(output.as_deref(), &report)?;
            Ok(Outcome::from_pass(pass))
        }
        Command::Fit {
            input,
            analysis,
            n0,
            m0,
            m_max,
            c,
            steps,
            output,
        } => {
            let lat = match (analysis, input) {
                (Analysis::Painleve, _) => None,
                (_, Some(path)) => Some(load(&path)?),
                (_, None) => return Err(usage("this analysis needs an input lattice")),
            };
            let (pass, report) = run_fit(lat.as_ref(), analysis, n0, m0, m_max, c, steps, &tol)?;
            write_json(output.as_deref(), &report)?;
            Ok(Outcome::from_pass(pass))
        }
        Command::Render {
            input,
            output,
            stroke_width,
            padding,
            no_circles,
            no_quads,
            scheme,
        } => {
            let lat = load(&input)?;
            let opts = RenderOptions {
                stroke_width,
                padding,
                draw_circles: !no_circles,
                draw_quads: !no_quads,
                scheme,
            };
            opts.validate().map_err(usage)?;
            let pattern = if opts.draw_circles {
                Some(circles(&lat, &tol)?)
            } else {
                None
            };
            let svg = render_svg(&lat, pattern.as_ref(), &opts).map_err(usage)?;
            let mut out = sink(output.as_deref())?;
            out.write_all(svg.as_bytes())?;
            out.flush()?;
            Ok(Outcome::Pass)
        }
        Command::Dual {
            input,
            output,
            anchor,
            anchor_value,
        } => {
            let is_csv = input
                .extension()
                .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
            if is_csv {
                let file = File::open(&input).map_err(FormatError::Io)?;
                // the CSV carries no exponent; only the radii are inverted
                let field = read_radii_csv(BufReader::new(file), 1.0)?;
                write_radii_csv(&dual_radii(&field), sink(output.as_deref())?)?;
            } else {
                let lat = load(&input)?;
                let anchor = DualAnchor {
                    index: LatticeIndex::new(anchor[0], anchor[1]),
                    value: Complex::new(anchor_value[0], anchor_value[1]),
                };
                let dual = dual_map(&lat, anchor, &tol)?;
                let mut out = sink(output.as_deref())?;
                out.write_all(lattice_to_json(&dual).as_bytes())?;
                writeln!(out)?;
                out.flush()?;
            }
            Ok(Outcome::Pass)
        }
        Command::Painleve { c, steps, output } => {
            let sol = dpii_solve(c, steps)?;
            write_painleve_csv(&sol, sink(output.as_deref())?)?;
            Ok(Outcome::Pass)
        }
    }
}

/// Runs one check, returning whether it passed and its JSON report.
pub fn run_check(lat: &ConformalLattice, which: CheckKind, tol: &ToleranceConfig) -> (bool, Value) {
    match which {
        CheckKind::Embedded => {
            let r = is_embedded(lat, tol);
            (r.passed(), overlap_json("embedded", &r))
        }
        CheckKind::Immersed => {
            let r = is_immersed(lat, tol);
            (r.passed(), overlap_json("immersed", &r))
        }
        CheckKind::Incidence => match circles(lat, tol) {
            Ok(pat) => {
                let r = incidence_check(&pat, tol.rel_tol);
                let listed: Vec<Value> = r
                    .violations
                    .iter()
                    .take(MAX_LISTED)
                    .map(|v| {
                        json!({
                            "a": v.a.to_string(),
                            "b": v.b.to_string(),
                            "kind": format!("{:?}", v.kind).to_lowercase(),
                            "defect": v.defect,
                        })
                    })
                    .collect();
                let report = json!({
                    "check": "incidence",
                    "passed": r.passed(),
                    "neighbor_pairs": r.neighbor_pairs,
                    "half_neighbor_pairs": r.half_neighbor_pairs,
                    "max_defect": r.max_defect,
                    "violation_count": r.violations.len(),
                    "violations": listed,
                });
                (r.passed(), report)
            }
            Err(e) => (
                false,
                json!({ "check": "incidence", "passed": false, "error": e.to_string() }),
            ),
        },
        CheckKind::Residuals => residual_report(lat, tol),
        CheckKind::Sign => match extract_radii(lat, tol) {
            Ok(field) => {
                let mut checked = 0;
                let mut failures = Vec::new();
                for z in field.interior_labels() {
                    match sign_condition(&field, z, tol) {
                        Ok(true) => checked += 1,
                        Ok(false) => {
                            checked += 1;
                            failures.push(z.to_string());
                        }
                        Err(_) => {}
                    }
                }
                let pass = failures.is_empty();
                let report = json!({
                    "check": "sign",
                    "passed": pass,
                    "checked": checked,
                    "violation_count": failures.len(),
                    "violations": failures.into_iter().take(MAX_LISTED).collect::<Vec<_>>(),
                });
                (pass, report)
            }
            Err(e) => (
                false,
                json!({ "check": "sign", "passed": false, "error": e.to_string() }),
            ),
        },
    }
}

#[derive(Default)]
struct Worst {
    count: usize,
    max: f64,
    at: Option<String>,
    over: usize,
}

impl Worst {
    fn add(&mut self, v: f64, at: impl FnOnce() -> String, limit: f64) {
        self.count += 1;
        if !(v <= limit) {
            self.over += 1;
        }
        if v > self.max || v.is_nan() {
            self.max = v;
            self.at = Some(at());
        }
    }

    fn json(&self) -> Value {
        json!({ "checked": self.count, "max": self.max, "at": self.at, "violations": self.over })
    }
}

fn residual_report(lat: &ConformalLattice, tol: &ToleranceConfig) -> (bool, Value) {
    let limit = tol.rel_tol;
    let size = lat.size();
    let mut cross = Worst::default();
    let mut degenerate = Vec::new();
    for n in 0..size {
        for m in 0..size {
            let idx = LatticeIndex::new(n, m);
            match lat.cross_ratio_defect(idx, tol) {
                Ok(d) => cross.add(d, || format!("({n}, {m})"), limit),
                Err(_) => degenerate.push(index_json(idx)),
            }
        }
    }
    let mut constraint = Worst::default();
    for n in 1..size {
        for m in 1..size {
            if let Ok(d) = constraint_residual(lat, LatticeIndex::new(n, m)) {
                constraint.add(d, || format!("({n}, {m})"), limit);
            }
        }
    }
    let mut report = json!({
        "check": "residuals",
        "rel_tol": limit,
        "cross_ratio": cross.json(),
        "degenerate_quads": degenerate,
        "constraint": constraint.json(),
    });
    let mut pass = cross.over == 0 && constraint.over == 0;
    match extract_radii(lat, tol) {
        Ok(field) => {
            let mut radius = Worst::default();
            for z in field.interior_labels() {
                if let Ok(r) = radius_residuals(&field, z) {
                    radius.add(r.max(), || z.to_string(), limit);
                }
            }
            let xy = xy_from_radii(&field);
            let mut edge = Worst::default();
            for z in xy.x_labels().collect::<Vec<_>>() {
                if let Ok(r) = xy_residuals(&xy, z) {
                    edge.add(r.max(), || z.to_string(), limit);
                }
            }
            pass &= radius.over == 0 && edge.over == 0;
            report["radius_equations"] = radius.json();
            report["edge_equations"] = edge.json();
        }
        Err(e) => {
            pass = false;
            report["radius_error"] = json!(e.to_string());
        }
    }
    report["passed"] = json!(pass);
    (pass, report)
}

fn field_of(lat: &ConformalLattice, tol: &ToleranceConfig) -> Result<RadiusField> {
    Ok(extract_radii(lat, tol)?)
}

fn default_m_max(field: &RadiusField, n0: i64) -> usize {
    field
        .column(n0)
        .last()
        .map_or(0, |(m, _)| m.max(0) as usize)
}

#[allow(clippy::too_many_arguments)]
fn run_fit(
    lat: Option<&ConformalLattice>,
    analysis: Analysis,
    n0: i64,
    m0: usize,
    m_max: Option<usize>,
    c: f64,
    steps: usize,
    tol: &ToleranceConfig,
) -> Result<(bool, Value)> {
    match analysis {
        Analysis::Painleve => {
            let sol = dpii_solve(c, steps)?;
            let report = check_painleve_asymptote(&sol)?;
            let max_residual = (0..steps)
                .filter_map(|n| dpii_residual(&sol, n).ok())
                .fold(0.0, f64::max);
            let pass = report.passed() && max_residual < tol.rel_tol;
            Ok((
                pass,
                json!({
                    "analysis": "painleve",
                    "c": c,
                    "steps": steps,
                    "passed": pass,
                    "final_deviation": report.final_deviation(),
                    "threshold": report.threshold,
                    "decreasing": report.decreasing,
                    "max_residual": max_residual,
                    "max_drift": sol.max_drift(),
                    "deviations": report.deviations,
                }),
            ))
        }
        Analysis::RadiusGrowth => {
            let field = field_of(lat.expect("checked by caller"), tol)?;
            let m_max = m_max.unwrap_or_else(|| default_m_max(&field, n0));
            let fit = fit_radius_growth(&field, n0, m_max)?;
            let half = (m_max / 2) as i64;
            let change = fit.relative_change(half, m_max as i64).unwrap_or(f64::NAN);
            let band = 3.0 / half as f64;
            let pass = change < band;
            Ok((
                pass,
                json!({
                    "analysis": "radius-growth",
                    "c": fit.c,
                    "n0": n0,
                    "m_max": m_max,
                    "passed": pass,
                    "K": fit.k_estimate,
                    "K_extrapolated": fit.k_extrapolated,
                    "relative_change": change,
                    "band": band,
                    "product_model_defect": fit.product_defect,
                    "samples": fit.samples,
                }),
            ))
        }
        Analysis::XyDecay => {
            let field = field_of(lat.expect("checked by caller"), tol)?;
            let r = check_xy_decay(&xy_from_radii(&field), n0)?;
            Ok((
                r.passed(),
                json!({
                    "analysis": "xy-decay",
                    "c": r.c,
                    "n0": n0,
                    "passed": r.passed(),
                    "target": r.target,
                    "threshold": r.threshold,
                    "checkpoints": r.checkpoints,
                    "n2x_lower": r.n2x_lower,
                    "n2x_upper": r.n2x_upper,
                    "within_threshold": r.within_threshold,
                    "decreasing": r.decreasing,
                    "bounded": r.bounded,
                    "samples": r.samples.iter().map(|s| json!([s.n, s.x, s.y])).collect::<Vec<_>>(),
                }),
            ))
        }
        Analysis::Diagonal => {
            let lat = lat.expect("checked by caller");
            if n0 < 0 {
                return Err(usage("diagonal offsets must be non-negative"));
            }
            let field = field_of(lat, tol)?;
            let m = default_m_max(&field, 0);
            let k = if m >= MIN_SAMPLES {
                fit_radius_growth(&field, 0, m).ok().map(|f| f.k_estimate)
            } else {
                None
            };
            let r = check_diagonal_growth(lat, n0 as usize, m0, k)?;
            let band = 0.03;
            let pass = r.passed(band);
            Ok((
                pass,
                json!({
                    "analysis": "diagonal",
                    "c": r.c,
                    "offset": [r.offset.0, r.offset.1],
                    "passed": pass,
                    "arg_checkpoints": r.checkpoints,
                    "arg_threshold": r.arg_threshold,
                    "decreasing": r.decreasing,
                    "modulus_constant": r.modulus_constant,
                    "modulus_drift": r.modulus_drift,
                    "expected_modulus": r.expected_modulus,
                    "modulus_mismatch": r.modulus_mismatch,
                    "band": band,
                }),
            ))
        }
        Analysis::LemmaBounds => {
            let mut field = field_of(lat.expect("checked by caller"), tol)?;
            let dualized = field.c() < 1.0;
            if dualized {
                field = dual_radii(&field);
            }
            if field.c() == 1.0 {
                bail!(usage("the bounds are trivial at c = 1"));
            }
            let r = check_lemma_bounds(&xy_from_radii(&field), tol.abs_tol)?;
            let min_slack = r
                .entries
                .iter()
                .map(|e| e.min_slack())
                .fold(f64::INFINITY, f64::min);
            Ok((
                r.passed(),
                json!({
                    "analysis": "lemma-bounds",
                    "c": r.c,
                    "dualized": dualized,
                    "passed": r.passed(),
                    "checked": r.entries.len(),
                    "min_slack": min_slack,
                    "violation_count": r.violations.len(),
                    "violations": r.violations.iter().take(MAX_LISTED).map(|z| z.to_string()).collect::<Vec<_>>(),
                }),
            ))
        }
    }
}
