//! `dunkl-lab`: evaluate Dunkl-analysis operators and run verification suites.

use std::fs;
use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex;

use dunkl_core::applications::{translate_radial_estimate, translate_rank1_estimate};
use dunkl_core::field::catalog;
use dunkl_core::field::{RadialProfile, ScalarField};
use dunkl_core::intertwine::{tvk_estimate, vk_estimate};
use dunkl_core::kernel::{dunkl_kernel_product, generalized_bessel, generalized_bessel_via_density, kernel_via_laplace};
use dunkl_core::rootsys::{ContextConfig, GroupSpec, RootSystem, WeightContext};
use dunkl_core::specfun::QuadOptions;
use dunkl_core::verify::{self, fmt12, Suite, VerifyConfig};
use dunkl_core::DunklError;

#[derive(Parser)]
#[command(
    name = "dunkl-lab",
    version,
    about = "Dunkl kernels, intertwining operators and identity checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one operator at one point.
    Eval(EvalArgs),
    /// Run a verification suite and emit a report.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Kernel,
    Vk,
    Tvk,
    Translate,
    Jw,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Constants,
    Kernel,
    Duality,
    Density,
    Spherical,
    Translate,
    Decay,
    All,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Constants => Suite::Constants,
            SuiteArg::Kernel => Suite::Kernel,
            SuiteArg::Duality => Suite::Duality,
            SuiteArg::Density => Suite::Density,
            SuiteArg::Spherical => Suite::Spherical,
            SuiteArg::Translate => Suite::Translate,
            SuiteArg::Decay => Suite::Decay,
            SuiteArg::All => Suite::All,
        }
    }
}

#[derive(Args, Clone)]
struct Common {
    /// z2^d, dihedral(m) or roots:a,b;c,d
    #[arg(long)]
    group: Option<String>,
    /// Multiplicities, one per orbit (or per positive root).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    alphas: Option<Vec<f64>>,
    #[arg(long)]
    d: Option<usize>,
    /// γ, split evenly over the positive roots when --alphas is absent.
    #[arg(long)]
    gamma: Option<f64>,
    /// Starting quadrature order.
    #[arg(long)]
    order: Option<usize>,
    /// Refinement cap.
    #[arg(long)]
    max_order: Option<usize>,
    /// Relative tolerance (eval) or tolerance override for every report row (verify).
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the output here instead of stdout.
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(value_enum)]
    kind: Kind,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    y: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    z: Option<Vec<f64>>,
    /// Test function for vk.
    #[arg(long)]
    g: Option<String>,
    /// Test function for tvk and translate.
    #[arg(long)]
    f: Option<String>,
    /// Shorthand for --f gaussian(a).
    #[arg(long)]
    gaussian: bool,
    #[arg(long)]
    a: Option<f64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(value_enum)]
    suite: SuiteArg,
    #[command(flatten)]
    common: Common,
}

enum Failure {
    Usage(String),
    Core(DunklError),
    Io(std::io::Error),
}

impl From<DunklError> for Failure {
    fn from(e: DunklError) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Eval(a) => eval(a).map(|_| true),
        Command::Verify(a) => run_verify(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Core(DunklError::Accuracy {
            estimate,
            error,
            requested,
        })) => {
            eprintln!("error: accuracy not reached: estimate {estimate}, error {error}, requested {requested}");
            ExitCode::from(3)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn context(c: &Common) -> Result<WeightContext<f64>, Failure> {
    if c.alphas.is_none() && c.gamma.is_none() {
        return Err(usage("no multiplicities: pass --alphas or --gamma"));
    }
    let group = match (&c.group, c.d, &c.alphas) {
        (Some(g), _, _) => g.clone(),
        (None, Some(d), _) => format!("z2^{d}"),
        (None, None, Some(a)) => format!("z2^{}", a.len()),
        (None, None, None) => return Err(usage("pass --group, --d or --alphas")),
    };
    let parsed = GroupSpec::parse(&group)?;
    let multiplicities = match (&c.alphas, c.gamma) {
        (Some(a), _) => a.clone(),
        (None, Some(g)) => {
            let n_pos = match &parsed {
                GroupSpec::Z2Power(d) => *d,
                GroupSpec::Dihedral(m) => *m,
                GroupSpec::Explicit(r) => RootSystem::<f64>::explicit(r)?.n_positive(),
            };
            vec![g / n_pos as f64; n_pos]
        }
        (None, None) => unreachable!("checked above"),
    };
    let ctx = WeightContext::from_config(&ContextConfig {
        group,
        multiplicities,
        d: c.d,
        convention: None,
    })?;
    check_dim(ctx)
}

fn check_dim(ctx: WeightContext<f64>) -> Result<WeightContext<f64>, Failure> {
    if ctx.dim() > 3 {
        return Err(usage(format!("dimension {} exceeds 3", ctx.dim())));
    }
    Ok(ctx)
}

fn quad_options(c: &Common, with_tol: bool) -> QuadOptions {
    let mut o = QuadOptions::default();
    if let Some(n) = c.order {
        o.order = n;
    }
    if let Some(n) = c.max_order {
        o.max_order = n;
    }
    if with_tol {
        if let Some(t) = c.tol {
            o.rtol = t;
        }
    }
    o
}

fn emit(c: &Common, text: &str) -> Result<(), Failure> {
    match &c.out {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run_verify(a: VerifyArgs) -> Result<bool, Failure> {
    let ctx = context(&a.common)?;
    let cfg = VerifyConfig {
        ctx,
        opts: quad_options(&a.common, false),
        tol: a.common.tol,
        seed: a.common.seed,
    };
    let report = verify::run(a.suite.into(), &cfg)?;
    let text = match a.common.format {
        Format::Csv => report.to_csv()?,
        Format::Json => report.to_json()? + "\n",
    };
    emit(&a.common, &text)?;
    Ok(report.all_pass())
}

fn vector(name: &str, v: &Option<Vec<f64>>, d: usize) -> Result<Vec<f64>, Failure> {
    let v = v.as_ref().ok_or_else(|| usage(format!("--{name} is required")))?;
    if v.len() != d {
        return Err(usage(format!("--{name} needs {d} components, got {}", v.len())));
    }
    Ok(v.clone())
}

/// Splits `name(a, b, ...)` into the name and its numeric arguments.
fn call(expr: &str) -> Result<(String, Vec<f64>), Failure> {
    let expr = expr.trim();
    let Some(open) = expr.find('(') else {
        return Ok((expr.to_ascii_lowercase(), Vec::new()));
    };
    let name = expr[..open].trim().to_ascii_lowercase();
    let inner = expr[open + 1..]
        .strip_suffix(')')
        .ok_or_else(|| usage(format!("unbalanced parentheses in '{expr}'")))?;
    let args = inner
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| usage(format!("bad number '{s}' in '{expr}'")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((name, args))
}

/// Test functions from the fixed catalog.
fn field(expr: &str, d: usize) -> Result<ScalarField<f64>, Failure> {
    let (name, args) = call(expr)?;
    let one = |default: f64| -> Result<f64, Failure> {
        match args.len() {
            0 => Ok(default),
            1 => Ok(args[0]),
            _ => Err(usage(format!("{name} takes one argument"))),
        }
    };
    let vec_arg = |default: f64| -> Result<Vec<f64>, Failure> {
        match args.len() {
            0 => Ok(vec![default; d]),
            1 => Ok(vec![args[0]; d]),
            n if n == d => Ok(args.clone()),
            n => Err(usage(format!("{name} takes 1 or {d} arguments, got {n}"))),
        }
    };
    Ok(match name.as_str() {
        "gaussian" => {
            let a = positive(&name, one(1.0)?)?;
            catalog::gaussian(a).with_support(catalog::gaussian_cutoff(a))
        }
        "bump" => catalog::bump(positive(&name, one(1.0)?)?),
        "monomial" => {
            let p = vec_arg(1.0)?;
            if p.iter().any(|&k| k < 0.0 || k.fract() != 0.0) {
                return Err(usage("monomial powers must be nonnegative integers"));
            }
            catalog::monomial(p.into_iter().map(|k| k as u32).collect())
        }
        "cosine" | "cos" => catalog::cosine(vec_arg(1.0)?),
        "exp" | "exponential" => catalog::exponential(vec_arg(1.0)?),
        "id" | "identity" => {
            if d != 1 {
                return Err(usage("id is one-dimensional; use monomial for d > 1"));
            }
            catalog::identity()
        }
        "const" | "constant" => catalog::constant(one(1.0)?),
        _ => {
            return Err(usage(format!(
                "unknown function '{expr}' (gaussian, bump, monomial, cosine, exp, id, const)"
            )))
        }
    })
}

fn radial_profile(expr: &str) -> Result<RadialProfile<f64>, Failure> {
    let (name, args) = call(expr)?;
    let a = match args.as_slice() {
        [] => 1.0,
        [v] => *v,
        _ => return Err(usage(format!("{name} takes one argument"))),
    };
    match name.as_str() {
        "gaussian" => {
            let a = positive(&name, a)?;
            Ok(catalog::gaussian_profile(a).with_support(catalog::gaussian_cutoff(a)))
        }
        "bump" => Ok(catalog::bump_profile(positive(&name, a)?)),
        "const" | "constant" => Ok(RadialProfile::new("const", move |_: f64| a)),
        _ => Err(usage(format!(
            "translate in d > 1 needs a radial function (gaussian, bump, const), got '{expr}'"
        ))),
    }
}

fn positive(name: &str, v: f64) -> Result<f64, Failure> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(usage(format!("{name} parameter must be positive")))
    }
}

struct Record {
    kind: &'static str,
    value: f64,
    imag: f64,
    error: f64,
    order: usize,
}

fn eval(a: EvalArgs) -> Result<(), Failure> {
    let ctx = context(&a.common)?;
    let d = ctx.dim();
    let opts = quad_options(&a.common, true);
    let f_expr = || -> Result<String, Failure> {
        match (&a.f, a.gaussian) {
            (Some(f), false) => Ok(f.clone()),
            (None, true) => Ok(format!("gaussian({})", a.a.unwrap_or(1.0))),
            (Some(_), true) => Err(usage("pass either --f or --gaussian")),
            (None, false) => Err(usage("--f or --gaussian is required")),
        }
    };
    let rec = match a.kind {
        Kind::Kernel => {
            let x = vector("x", &a.x, d)?;
            let z = vector("z", &a.z, d)?;
            let xc: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
            let zc: Vec<Complex<f64>> = z.iter().map(|&v| Complex::new(v, 0.0)).collect();
            let k = dunkl_kernel_product(&ctx, &xc, &zc)?;
            let error = if x.iter().all(|&v| v != 0.0) {
                (kernel_via_laplace(&ctx, &x, &zc)? - k).norm()
            } else {
                0.0
            };
            Record {
                kind: "kernel",
                value: k.re,
                imag: k.im,
                error,
                order: 0,
            }
        }
        Kind::Jw => {
            let x = vector("x", &a.x, d)?;
            let z = vector("z", &a.z, d)?;
            // J_W(x, z) = J_W(-ix, iz)
            let iz: Vec<Complex<f64>> = z.iter().map(|&v| Complex::new(0.0, v)).collect();
            let j = generalized_bessel(&ctx, &x, &iz)?;
            let error = if x.iter().all(|&v| v != 0.0) {
                (generalized_bessel_via_density(&ctx, &x, &iz, opts.order)? - j).norm()
            } else {
                0.0
            };
            Record {
                kind: "jw",
                value: j.re,
                imag: j.im,
                error,
                order: opts.order,
            }
        }
        Kind::Vk => {
            let x = vector("x", &a.x, d)?;
            let g = field(a.g.as_deref().ok_or_else(|| usage("--g is required"))?, d)?;
            let e = vk_estimate(&ctx, &g, &x, &opts)?;
            Record {
                kind: "vk",
                value: e.value,
                imag: 0.0,
                error: e.error,
                order: e.order,
            }
        }
        Kind::Tvk => {
            let y = vector("y", &a.y, d)?;
            let f = field(&f_expr()?, d)?;
            let e = tvk_estimate(&ctx, &f, &y, &opts)?;
            Record {
                kind: "tvk",
                value: e.value,
                imag: 0.0,
                error: e.error,
                order: e.order,
            }
        }
        Kind::Translate => {
            let x = vector("x", &a.x, d)?;
            let y = vector("y", &a.y, d)?;
            let expr = f_expr()?;
            let e = if d == 1 {
                let f = field(&expr, 1)?;
                translate_rank1_estimate(ctx.gamma(), &f, x[0], y[0], &opts)?
            } else {
                translate_radial_estimate(&ctx, &radial_profile(&expr)?, &x, &y, &opts)?
            };
            Record {
                kind: "translate",
                value: e.value,
                imag: 0.0,
                error: e.error,
                order: e.order,
            }
        }
    };
    let text = match a.common.format {
        Format::Csv => format!(
            "kind,value,imag,error,order\n{},{},{},{},{}\n",
            rec.kind,
            fmt12(rec.value),
            fmt12(rec.imag),
            fmt12(rec.error),
            rec.order
        ),
        Format::Json => {
            let num = |v: f64| serde_json::Value::from(verify::round12(v));
            let obj = serde_json::json!({
                "kind": rec.kind,
                "value": num(rec.value),
                "imag": num(rec.imag),
                "error": num(rec.error),
                "order": rec.order,
            });
            serde_json::to_string_pretty(&obj).map_err(|e| usage(e.to_string()))? + "\n"
        }
    };
    emit(&a.common, &text)
}
