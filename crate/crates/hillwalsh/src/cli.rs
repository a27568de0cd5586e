//! Command-line frontend: argument/config resolution, the excitation
//! mini-language, and the delta / sweep / chart / interlace / validate
//! commands. A JSON config file can hold any of the flags; explicit flags
//! win over the file.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::discriminant::{
    discriminant_direct, discriminant_recursive, discriminant_triangular,
    discriminant_triangular_scaled, recursion_kernel_naive, Method,
};
use crate::error::{HillError, Result};
use crate::excitation::{sample_p, Excitation, HillProblem};
use crate::oracles::{
    constant_coeff_delta, lyapunov_terms, monodromy, piecewise_constant_delta,
};
use crate::output::{
    fmt_sig, write_curves_csv, write_fixtures, write_grid_csv, write_grid_pgm,
    write_interlacing_json, FixtureRecord,
};
use crate::stability::{
    grid_scan, interlacing_scan, interlacing_scan_with, transition_contours, Axis,
    DEFAULT_CLASS_TOL,
};

#[derive(Parser, Debug)]
#[command(
    name = "hillwalsh",
    version,
    about = "Hill equation discriminant, stability charts and transition curves"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Discriminant at a single (alpha, beta) point
    Delta(OptArgs),
    /// Grid scan emitted as CSV only
    Sweep(OptArgs),
    /// Grid scan emitted as CSV, PGM image and transition-curve CSV
    Chart(OptArgs),
    /// Roots of Delta = +-2 along alpha at fixed beta, with interlacing check
    Interlace(OptArgs),
    /// Cross-path and oracle validation suite
    Validate(OptArgs),
}

/// One flag set shared by all commands; a JSON config file mirrors the same
/// field names.
#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct OptArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    /// lo:hi:n
    #[arg(long, value_name = "LO:HI:N", allow_hyphen_values = true)]
    pub alpha_range: Option<String>,
    /// lo:hi:n
    #[arg(long, value_name = "LO:HI:N", allow_hyphen_values = true)]
    pub beta_range: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub tau: Option<f64>,
    /// cos | cossum:a1x n1,... | square:hi,lo,duty | table:<path>
    #[arg(long)]
    pub excitation: Option<String>,
    /// Order exponent: 2^k excitation samples
    #[arg(short = 'k', long = "k")]
    pub k: Option<u32>,
    /// recursive | triangular | direct | monodromy | lyapunov | all
    #[arg(long)]
    pub method: Option<String>,
    /// Classification tolerance around |Delta| = 2
    #[arg(long)]
    pub tol: Option<f64>,
    /// Bisection tolerance for interlace roots
    #[arg(long)]
    pub root_tol: Option<f64>,
    #[arg(long, env = "HILLWALSH_WORKERS")]
    pub workers: Option<usize>,
    /// Output file (sweep, interlace) or directory (chart, fixtures)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON file with these same fields as defaults
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Write oracle fixture JSON into the given directory (validate)
    #[arg(long, value_name = "DIR")]
    pub emit_fixtures: Option<PathBuf>,
    /// Negative control: corrupt the triangular path's off-diagonal scale so
    /// path equivalence must fail
    #[arg(long, hide = true)]
    pub inject_scale_bug: bool,
}

impl OptArgs {
    /// Fills unset fields from the JSON config file, if one was given.
    fn resolve(mut self) -> Result<Self> {
        let Some(path) = self.config.take() else {
            return Ok(self);
        };
        let text = fs::read_to_string(&path)?;
        let file: OptArgs = serde_json::from_str(&text)
            .map_err(|e| HillError::Usage(format!("bad config {}: {e}", path.display())))?;
        macro_rules! fill {
            ($($field:ident),*) => {
                $(if self.$field.is_none() { self.$field = file.$field; })*
            };
        }
        fill!(
            alpha,
            beta,
            alpha_range,
            beta_range,
            tau,
            excitation,
            k,
            method,
            tol,
            root_tol,
            workers,
            out,
            emit_fixtures
        );
        self.inject_scale_bug |= file.inject_scale_bug;
        Ok(self)
    }

    fn excitation(&self) -> Result<Excitation> {
        match &self.excitation {
            None => Ok(Excitation::Cosine),
            Some(spec) => parse_excitation(spec),
        }
    }

    fn tau(&self) -> Result<f64> {
        self.tau
            .ok_or_else(|| HillError::Usage("--tau is required".into()))
    }

    fn k_or(&self, default: u32) -> u32 {
        self.k.unwrap_or(default)
    }

    fn problem(&self) -> Result<HillProblem> {
        let alpha = self
            .alpha
            .ok_or_else(|| HillError::Usage("--alpha is required".into()))?;
        let beta = self
            .beta
            .ok_or_else(|| HillError::Usage("--beta is required".into()))?;
        HillProblem::new(alpha, beta, self.tau()?, self.excitation()?)
    }

    fn axis(&self, which: &str) -> Result<Axis> {
        let (range, single) = match which {
            "alpha" => (&self.alpha_range, self.alpha),
            _ => (&self.beta_range, self.beta),
        };
        if let Some(spec) = range {
            return parse_axis(spec);
        }
        if let Some(v) = single {
            return Axis::new(v, v, 1);
        }
        Err(HillError::Usage(format!(
            "--{which}-range lo:hi:n (or --{which}) is required"
        )))
    }
}

/// Parses `lo:hi:n`.
pub fn parse_axis(spec: &str) -> Result<Axis> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(HillError::Usage(format!(
            "axis spec {spec:?} is not lo:hi:n"
        )));
    }
    let lo: f64 = parts[0]
        .parse()
        .map_err(|_| HillError::Usage(format!("bad axis low bound {:?}", parts[0])))?;
    let hi: f64 = parts[1]
        .parse()
        .map_err(|_| HillError::Usage(format!("bad axis high bound {:?}", parts[1])))?;
    let n: usize = parts[2]
        .parse()
        .map_err(|_| HillError::Usage(format!("bad axis count {:?}", parts[2])))?;
    Axis::new(lo, hi, n)
}

/// Excitation mini-language:
///   cos
///   cossum:1x1,0.5x3       (amplitude x harmonic, comma separated)
///   square:hi,lo,duty
///   table:path
pub fn parse_excitation(spec: &str) -> Result<Excitation> {
    if spec == "cos" {
        return Ok(Excitation::Cosine);
    }
    if let Some(rest) = spec.strip_prefix("cossum:") {
        let mut terms = Vec::new();
        for part in rest.split(',') {
            let (a, n) = part
                .split_once('x')
                .ok_or_else(|| HillError::Usage(format!("cossum term {part:?} is not AxN")))?;
            let a: f64 = a
                .trim()
                .parse()
                .map_err(|_| HillError::Usage(format!("bad amplitude {a:?}")))?;
            let n: u32 = n
                .trim()
                .parse()
                .map_err(|_| HillError::Usage(format!("bad harmonic {n:?}")))?;
            terms.push((a, n));
        }
        let exc = Excitation::CosineSum(terms);
        exc.validate()?;
        return Ok(exc);
    }
    if let Some(rest) = spec.strip_prefix("square:") {
        let parts: Vec<&str> = rest.split(',').collect();
        if parts.len() != 3 {
            return Err(HillError::Usage(format!(
                "square spec {rest:?} is not hi,lo,duty"
            )));
        }
        let nums: Vec<f64> = parts
            .iter()
            .map(|p| {
                p.trim()
                    .parse()
                    .map_err(|_| HillError::Usage(format!("bad square value {p:?}")))
            })
            .collect::<Result<_>>()?;
        let exc = Excitation::SquareWave {
            hi: nums[0],
            lo: nums[1],
            duty: nums[2],
        };
        exc.validate()?;
        return Ok(exc);
    }
    if let Some(path) = spec.strip_prefix("table:") {
        return Excitation::table_from_file(Path::new(path));
    }
    Err(HillError::Usage(format!(
        "unknown excitation {spec:?} (expected cos, cossum:..., square:..., table:...)"
    )))
}

fn parse_method(spec: &str) -> Result<Option<Method>> {
    match spec {
        "recursive" => Ok(Some(Method::Recursive)),
        "triangular" => Ok(Some(Method::TriangularBacksolve)),
        "direct" => Ok(Some(Method::DirectInversion)),
        "monodromy" => Ok(Some(Method::Monodromy)),
        "lyapunov" => Ok(Some(Method::LyapunovSeries)),
        "all" => Ok(None),
        other => Err(HillError::Usage(format!(
            "unknown method {other:?} (expected recursive|triangular|direct|monodromy|lyapunov|all)"
        ))),
    }
}

/// Runs one parsed command; returns the process exit code.
pub fn run(command: Command) -> Result<i32> {
    match command {
        Command::Delta(opts) => cmd_delta(opts.resolve()?),
        Command::Sweep(opts) => cmd_sweep(opts.resolve()?),
        Command::Chart(opts) => cmd_chart(opts.resolve()?),
        Command::Interlace(opts) => cmd_interlace(opts.resolve()?),
        Command::Validate(opts) => cmd_validate(opts.resolve()?),
    }
}

fn with_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| HillError::Numeric(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn print_result(label: &str, order_name: &str, order: usize, delta: f64, flag: Option<usize>) {
    let flag = match flag {
        Some(n) => format!(" near_singular_at={n}"),
        None => String::new(),
    };
    println!(
        "method={label} {order_name}={order} delta={}{flag}",
        fmt_sig(delta, 12)
    );
}

fn cmd_delta(opts: OptArgs) -> Result<i32> {
    let problem = opts.problem()?;
    let k = opts.k_or(12);
    let method = parse_method(opts.method.as_deref().unwrap_or("recursive"))?;

    match method {
        Some(Method::Recursive) => {
            let r = discriminant_recursive(&problem, k)?;
            print_result("recursive", "k", r.order, r.delta, r.singular_flag);
        }
        Some(Method::TriangularBacksolve) => {
            let r = discriminant_triangular(&problem, k)?;
            print_result("triangular", "k", r.order, r.delta, None);
        }
        Some(Method::DirectInversion) => {
            let r = discriminant_direct(&problem, k)?;
            print_result("direct", "k", r.order, r.delta, None);
        }
        Some(Method::Monodromy) => {
            let steps = (1usize << k).max(64);
            let r = monodromy(&problem, steps)?;
            print_result("monodromy", "steps", r.steps, r.trace, None);
            println!(
                "  det={} multipliers=({},{}) ({},{})",
                fmt_sig(r.det, 12),
                fmt_sig(r.multipliers[0].re, 12),
                fmt_sig(r.multipliers[0].im, 12),
                fmt_sig(r.multipliers[1].re, 12),
                fmt_sig(r.multipliers[1].im, 12)
            );
        }
        Some(Method::LyapunovSeries) => {
            let s = lyapunov_terms(&problem, 3, 256)?;
            print_result("lyapunov", "quad_points", s.quad_points, s.delta(), None);
            let terms: Vec<String> = s.terms.iter().map(|&t| fmt_sig(t, 12)).collect();
            println!("  terms=[{}]", terms.join(", "));
        }
        None => {
            // all three discriminant paths at a common order the direct
            // path supports, so the pairwise gaps are meaningful
            let k_all = k.min(8);
            if k_all != k {
                println!("# k capped to {k_all} so the direct path can run");
            }
            let rec = discriminant_recursive(&problem, k_all)?;
            let tri = discriminant_triangular(&problem, k_all)?;
            let dir = discriminant_direct(&problem, k_all)?;
            print_result("recursive", "k", rec.order, rec.delta, rec.singular_flag);
            print_result("triangular", "k", tri.order, tri.delta, None);
            print_result("direct", "k", dir.order, dir.delta, None);
            println!(
                "gap(recursive,triangular)={}",
                fmt_sig((rec.delta - tri.delta).abs(), 3)
            );
            println!(
                "gap(recursive,direct)={}",
                fmt_sig((rec.delta - dir.delta).abs(), 3)
            );
            println!(
                "gap(triangular,direct)={}",
                fmt_sig((tri.delta - dir.delta).abs(), 3)
            );
        }
    }
    Ok(0)
}

fn scan_from_opts(opts: &OptArgs) -> Result<crate::stability::StabilityGrid> {
    let tau = opts.tau()?;
    let excitation = opts.excitation()?;
    let alpha_axis = opts.axis("alpha")?;
    let beta_axis = opts.axis("beta")?;
    let k = opts.k_or(12);
    let tol = opts.tol.unwrap_or(DEFAULT_CLASS_TOL);
    with_pool(opts.workers, move || {
        grid_scan(&excitation, tau, alpha_axis, beta_axis, k, tol)
    })?
}

fn cmd_sweep(opts: OptArgs) -> Result<i32> {
    let grid = scan_from_opts(&opts)?;
    match &opts.out {
        None => {
            let mut stdout = std::io::stdout().lock();
            write_grid_csv(&grid, &mut stdout)?;
        }
        Some(path) => {
            let mut f = fs::File::create(path)?;
            write_grid_csv(&grid, &mut f)?;
        }
    }
    Ok(0)
}

fn cmd_chart(opts: OptArgs) -> Result<i32> {
    if opts.alpha_range.is_none() || opts.beta_range.is_none() {
        return Err(HillError::Usage(
            "chart needs both --alpha-range and --beta-range".into(),
        ));
    }
    let out = opts
        .out
        .clone()
        .ok_or_else(|| HillError::Usage("chart needs --out DIR".into()))?;
    fs::create_dir_all(&out)?;

    let grid = scan_from_opts(&opts)?;
    let singular = grid
        .classes
        .iter()
        .filter(|&&c| c == crate::stability::Class::Singular)
        .count();
    if singular > 0 {
        eprintln!("warning: {singular} singular cells in the scan");
    }
    let curves = transition_contours(&grid);
    if curves.warnings > 0 {
        eprintln!(
            "warning: {} contour cells skipped around singular values",
            curves.warnings
        );
    }

    let mut f = fs::File::create(out.join("grid.csv"))?;
    write_grid_csv(&grid, &mut f)?;
    let mut f = fs::File::create(out.join("chart.pgm"))?;
    write_grid_pgm(&grid, &mut f)?;
    let mut f = fs::File::create(out.join("curves.csv"))?;
    write_curves_csv(&curves, &mut f)?;
    println!(
        "wrote {} ({} x {} cells, {} + {} curves)",
        out.display(),
        grid.alpha_axis.count,
        grid.beta_axis.count,
        curves.plus_level.len(),
        curves.minus_level.len()
    );
    Ok(0)
}

fn cmd_interlace(opts: OptArgs) -> Result<i32> {
    let tau = opts.tau()?;
    let beta = opts
        .beta
        .ok_or_else(|| HillError::Usage("--beta is required".into()))?;
    let spec = opts
        .alpha_range
        .as_deref()
        .ok_or_else(|| HillError::Usage("--alpha-range lo:hi is required".into()))?;
    // the scan chooses its own mesh (512 points per unit alpha), so accept
    // lo:hi with or without a count
    let axis = match spec.matches(':').count() {
        1 => {
            let padded = format!("{spec}:2");
            parse_axis(&padded)?
        }
        _ => parse_axis(spec)?,
    };
    let excitation = opts.excitation()?;
    let k = opts.k_or(14);
    let root_tol = opts.root_tol.unwrap_or(1e-6);

    let method = parse_method(opts.method.as_deref().unwrap_or("recursive"))?;
    let report = match method {
        Some(Method::Monodromy) => {
            let steps = (1usize << k).max(64);
            interlacing_scan_with(
                |alpha| {
                    let p = HillProblem::new(alpha, beta, tau, excitation.clone())
                        .expect("parameters already validated");
                    monodromy(&p, steps).map(|m| m.trace).unwrap_or(f64::NAN)
                },
                beta,
                axis.min,
                axis.max,
                root_tol,
            )?
        }
        _ => interlacing_scan(&excitation, tau, beta, axis.min, axis.max, k, root_tol)?,
    };

    match &opts.out {
        None => {
            let mut stdout = std::io::stdout().lock();
            write_interlacing_json(&report, &mut stdout)?;
        }
        Some(path) => {
            let mut f = fs::File::create(path)?;
            write_interlacing_json(&report, &mut f)?;
        }
    }
    Ok(if report.ordering_ok { 0 } else { 1 })
}

struct CheckTable {
    rows: Vec<(String, bool, String)>,
}

impl CheckTable {
    fn new() -> Self {
        CheckTable { rows: Vec::new() }
    }

    fn add(&mut self, name: &str, pass: bool, detail: String) {
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        self.rows.push((name.into(), pass, detail));
    }

    fn verdict(&self) -> i32 {
        let failed: Vec<&(String, bool, String)> =
            self.rows.iter().filter(|(_, p, _)| !p).collect();
        if failed.is_empty() {
            println!("all {} checks passed", self.rows.len());
            0
        } else {
            let (name, _, detail) = failed
                .iter()
                .max_by(|a, b| a.2.len().cmp(&b.2.len()))
                .unwrap();
            eprintln!(
                "{} of {} checks failed; worst offender {name}: {detail}",
                failed.len(),
                self.rows.len()
            );
            1
        }
    }
}

fn rel_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

fn builtin_excitations() -> Vec<(&'static str, Excitation)> {
    vec![
        ("cos", Excitation::Cosine),
        (
            "cossum",
            Excitation::CosineSum(vec![(1.0, 1), (1.0, 2)]),
        ),
        (
            "square",
            Excitation::SquareWave {
                hi: 1.0,
                lo: -1.0,
                duty: 0.5,
            },
        ),
        (
            "table",
            Excitation::SampledTable(
                (0..32)
                    .map(|i| (std::f64::consts::TAU * (i as f64 + 1.0) / 32.0).cos())
                    .collect(),
            ),
        ),
    ]
}

fn cmd_validate(opts: OptArgs) -> Result<i32> {
    use std::f64::consts::TAU;
    let mut table = CheckTable::new();
    let scale = if opts.inject_scale_bug { 2.0 } else { 1.0 };
    if opts.inject_scale_bug {
        println!("# negative control: off-diagonal scale corrupted by 2x");
    }

    // closed forms for beta = 0
    {
        let mut worst = 0.0f64;
        for &(alpha, tau) in &[
            (0.0625, TAU),
            (0.25, TAU),
            (1.0, TAU),
            (2.0, TAU),
            (-1.0, 1.0),
        ] {
            let p = HillProblem::new(alpha, 0.0, tau, Excitation::Cosine)?;
            let d = discriminant_recursive(&p, 14)?.delta;
            worst = worst.max((d - constant_coeff_delta(alpha, tau)).abs());
        }
        table.add(
            "closed-form-beta0",
            worst < 5e-3,
            format!("max |err| = {} (tol 5e-3)", fmt_sig(worst, 3)),
        );
    }

    // recursive vs triangular path equivalence
    {
        let mut rng = ChaCha8Rng::seed_from_u64(0x9e3779b97f4a7c15);
        let mut worst = 0.0f64;
        for (_, exc) in builtin_excitations() {
            for _ in 0..20 {
                let alpha = rng.gen_range(-5.0..5.0);
                let beta = rng.gen_range(-5.0..5.0);
                let p = HillProblem::new(alpha, beta, TAU, exc.clone())?;
                let rec = discriminant_recursive(&p, 10)?.delta;
                let tri = discriminant_triangular_scaled(&p, 10, scale)?.delta;
                worst = worst.max(rel_gap(rec, tri));
            }
        }
        table.add(
            "path-equivalence-triangular",
            worst < 1e-10,
            format!("max relative gap = {} (tol 1e-10)", fmt_sig(worst, 3)),
        );
    }

    // recursive vs direct path equivalence
    {
        let mut rng = ChaCha8Rng::seed_from_u64(0x517cc1b727220a95);
        let mut worst = 0.0f64;
        for _ in 0..5 {
            let alpha = rng.gen_range(-0.5..0.5);
            let beta = rng.gen_range(-0.5..0.5);
            let p = HillProblem::new(alpha, beta, TAU, Excitation::Cosine)?;
            let tri = discriminant_triangular_scaled(&p, 6, scale)?.delta;
            let dir = discriminant_direct(&p, 6)?.delta;
            worst = worst.max((tri - dir).abs());
        }
        table.add(
            "path-equivalence-direct",
            worst < 1e-6,
            format!("max gap = {} (tol 1e-6)", fmt_sig(worst, 3)),
        );
    }

    // O(n) kernel vs the literal double loop
    {
        let mut worst = 0.0f64;
        for (_, exc) in builtin_excitations() {
            let p = HillProblem::new(1.3, 0.7, TAU, exc)?;
            let samples = sample_p(&p, 8)?;
            let fast = crate::discriminant::discriminant_recursive(&p, 8)?.delta;
            let (b, c) = recursion_kernel_naive(p.alpha, p.beta, p.tau, 8, &samples)?;
            let naive: f64 = b.iter().sum::<f64>() + c.iter().sum::<f64>();
            worst = worst.max(rel_gap(fast, naive));
        }
        table.add(
            "kernel-vs-naive",
            worst < 1e-12,
            format!("max relative gap = {} (tol 1e-12)", fmt_sig(worst, 3)),
        );
    }

    // Lyapunov constant-q identities and small-Mathieu next-term bound
    {
        let alpha = 0.3;
        let tau = 2.0;
        let p = HillProblem::new(alpha, 0.0, tau, Excitation::Cosine)?;
        let s = lyapunov_terms(&p, 2, 1024)?;
        let a1 = alpha * tau * tau;
        let a2 = alpha * alpha * tau.powi(4) / 12.0;
        let e1 = (s.terms[1] - a1).abs() / a1;
        let e2 = (s.terms[2] - a2).abs() / a2;

        let pm = HillProblem::new(0.05, 0.05, TAU, Excitation::Cosine)?;
        let sm = lyapunov_terms(&pm, 3, 160)?;
        let mono = monodromy(&pm, 1 << 14)?.trace;
        let bound_ok = (sm.delta() - mono).abs() < sm.terms[3].abs();
        table.add(
            "lyapunov-series",
            e1 < 1e-6 && e2 < 1e-6 && bound_ok,
            format!(
                "A1 rel err {}, A2 rel err {}, next-term bound {}",
                fmt_sig(e1, 3),
                fmt_sig(e2, 3),
                if bound_ok { "holds" } else { "violated" }
            ),
        );
    }

    // Meissner exactness
    {
        let (alpha, beta, tau) = (1.0, 0.5, TAU);
        let exact =
            piecewise_constant_delta(&[(alpha + beta, tau / 2.0), (alpha - beta, tau / 2.0)])?;
        let p = HillProblem::new(
            alpha,
            beta,
            tau,
            Excitation::SquareWave {
                hi: 1.0,
                lo: -1.0,
                duty: 0.5,
            },
        )?;
        let mono = monodromy(&p, 1 << 14)?.trace;
        let rec = discriminant_recursive(&p, 14)?.delta;
        let g1 = (exact - mono).abs();
        let g2 = (exact - rec).abs();
        table.add(
            "meissner",
            g1 < 1e-8 && g2 < 1e-2,
            format!(
                "|exact - monodromy| = {} (tol 1e-8), |exact - recursive| = {} (tol 1e-2)",
                fmt_sig(g1, 3),
                fmt_sig(g2, 3)
            ),
        );
    }

    // Liouville determinant across a parameter sample
    {
        let mut worst = 0.0f64;
        for exc in [
            Excitation::Cosine,
            Excitation::CosineSum(vec![(1.0, 1), (1.0, 2)]),
        ] {
            for i in 0..3 {
                for j in 0..3 {
                    let alpha = i as f64;
                    let beta = 0.4 * j as f64;
                    let p = HillProblem::new(alpha, beta, TAU, exc.clone())?;
                    let m = monodromy(&p, 1 << 14)?;
                    worst = worst.max((m.det - 1.0).abs());
                }
            }
        }
        table.add(
            "monodromy-determinant",
            worst < 1e-8,
            format!("max |det - 1| = {} (tol 1e-8)", fmt_sig(worst, 3)),
        );
    }

    // interlacing ordering on a fast window
    {
        let report = interlacing_scan(&Excitation::Cosine, TAU, 0.5, -1.0, 1.5, 12, 1e-7)?;
        table.add(
            "interlacing-ordering",
            report.ordering_ok,
            format!(
                "{} + {} roots, ordering_ok = {}",
                report.lambdas.len(),
                report.lambda_primes.len(),
                report.ordering_ok
            ),
        );
    }

    if let Some(dir) = &opts.emit_fixtures {
        fs::create_dir_all(dir)?;
        let records = oracle_fixtures()?;
        let path = dir.join("oracle_fixtures.json");
        let mut f = fs::File::create(&path)?;
        write_fixtures(&records, &mut f)?;
        println!("wrote {} fixture records to {}", records.len(), path.display());
    }

    Ok(table.verdict())
}

/// The oracle values the acceptance suite pins: stored once, recomputed and
/// compared on every run.
pub fn oracle_fixtures() -> Result<Vec<FixtureRecord>> {
    use std::f64::consts::TAU;
    let mut records = Vec::new();

    let mathieu = HillProblem::new(0.2, 0.5, TAU, Excitation::Cosine)?;
    let m = monodromy(&mathieu, 1 << 16)?;
    records.push(FixtureRecord {
        problem: mathieu,
        method: Method::Monodromy,
        order: m.steps,
        delta: m.trace,
    });

    let meissner = HillProblem::new(
        1.0,
        0.5,
        TAU,
        Excitation::SquareWave {
            hi: 1.0,
            lo: -1.0,
            duty: 0.5,
        },
    )?;
    let exact = piecewise_constant_delta(&[(1.5, TAU / 2.0), (0.5, TAU / 2.0)])?;
    records.push(FixtureRecord {
        problem: meissner,
        method: Method::Monodromy,
        order: 0,
        delta: exact,
    });

    let lshape = HillProblem::new(
        1.0,
        0.5,
        TAU,
        Excitation::CosineSum(vec![(1.0, 1), (1.0, 2)]),
    )?;
    let m = monodromy(&lshape, 1 << 16)?;
    records.push(FixtureRecord {
        problem: lshape,
        method: Method::Monodromy,
        order: m.steps,
        delta: m.trace,
    });

    for &(alpha, tau) in &[(0.0625, TAU), (0.25, TAU), (1.0, TAU), (2.0, TAU), (-1.0, 1.0)] {
        records.push(FixtureRecord {
            problem: HillProblem::new(alpha, 0.0, tau, Excitation::Cosine)?,
            method: Method::LyapunovSeries,
            order: 0,
            delta: constant_coeff_delta(alpha, tau),
        });
    }
    Ok(records)
}

/// Maps an error to the (category, exit code) of the CLI contract.
pub fn error_category(err: &HillError) -> (&'static str, i32) {
    match err {
        HillError::Usage(_) => ("usage", 2),
        HillError::Singular { .. } => ("singular", 1),
        HillError::Size(_) => ("size", 2),
        HillError::Domain(_) => ("domain", 2),
        HillError::Numeric(_) => ("numeric", 1),
        HillError::Evaluation(_) => ("evaluation", 1),
        HillError::Io(_) => ("io", 1),
    }
}
