//! `cf`: an exact calculator on continued fractions.
//!
//! One-shot: `cf "pi + sqrt(2)" --digits 40`
//! REPL:     `cf`
//!
//! stdout carries results; --trace streams engine actions to stderr.

mod eval;
mod parser;

use std::io::{BufRead, Write};
use std::process::ExitCode;
use std::sync::Arc;

use cf_core::{approximate, first_terms, to_decimal, Approximation, Cf, CfError, EngineOpts};
use clap::Parser as ClapParser;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Signed;

use eval::Context;
use parser::parse_expr;

#[derive(ClapParser, Debug)]
#[command(
    name = "cf",
    about = "Exact real arithmetic on continued fractions",
    long_about = "Evaluates expressions over exact continued-fraction streams.\n\
                  Without an expression, starts a REPL (use `let name = expr`\n\
                  to keep results around; they share one memoized stream)."
)]
struct Args {
    /// Expression to evaluate; omit it for a REPL.
    expr: Option<String>,

    /// Decimal digits to print (the default output mode).
    #[arg(long, default_value_t = 30)]
    digits: usize,

    /// Print the first N certified CF terms with the final bound.
    #[arg(long)]
    terms: Option<usize>,

    /// Extract terms until the enclosure is at most this wide ("1/1000000").
    #[arg(long)]
    eps: Option<String>,

    /// Emit one JSON object: {"terms": […], "tail_lo": "p/q", "tail_hi": "p/q", "decimal": "…"}.
    #[arg(long)]
    json: bool,

    /// Stream matrix states of the top-level engines to stderr.
    #[arg(long)]
    trace: bool,

    /// Pull budget for extraction; exceeding it is an error (exit code 2).
    /// Defaults to $CF_MAX_ITERS or 100000.
    #[arg(long)]
    max_iters: Option<usize>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    // Deep nested series recurse one frame chain per level; give the whole
    // run a roomy stack.
    std::thread::Builder::new()
        .stack_size(1 << 30)
        .spawn(move || run(args))
        .expect("spawn worker")
        .join()
        .expect("worker panicked")
}

fn run(args: Args) -> ExitCode {
    let cap = args.max_iters.or_else(env_cap).unwrap_or(cf_core::DEFAULT_MAX_ITERS);
    let mut ctx = Context::default();
    if args.trace {
        ctx.opts = EngineOpts::traced(Arc::new(|line: &str| eprintln!("trace: {line}")));
    }

    match &args.expr {
        Some(src) => match serve(src, &ctx, &args, cap) {
            Ok(out) => {
                println!("{out}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                exit_code_for(&e)
            }
        },
        None => repl(&mut ctx, &args, cap),
    }
}

fn env_cap() -> Option<usize> {
    std::env::var("CF_MAX_ITERS").ok()?.parse().ok()
}

#[derive(Debug)]
enum CliError {
    Parse(parser::ParseError),
    Eval(eval::EvalError),
    Engine(CfError),
    BadEps(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Parse(e) => write!(f, "{e}"),
            CliError::Eval(e) => write!(f, "{e}"),
            CliError::Engine(e) => write!(f, "{e}"),
            CliError::BadEps(s) => write!(f, "invalid --eps value '{s}' (expected p/q > 0)"),
        }
    }
}

fn exit_code_for(e: &CliError) -> ExitCode {
    match e {
        CliError::Engine(CfError::IterationCap { .. }) => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

/// Evaluates one expression and renders it per the output flags.
fn serve(src: &str, ctx: &Context, args: &Args, cap: usize) -> Result<String, CliError> {
    let expr = parse_expr(src).map_err(CliError::Parse)?;
    let z = ctx.eval(&expr).map_err(CliError::Eval)?;
    render(&z, args, cap)
}

fn render(z: &Cf, args: &Args, cap: usize) -> Result<String, CliError> {
    let eps = match &args.eps {
        Some(s) => Some(parse_eps(s).ok_or_else(|| CliError::BadEps(s.clone()))?),
        None => None,
    };

    if args.json {
        // The JSON object carries the extraction (terms + exact tail
        // bound) and the decimal rendering together.
        let a = extraction(z, args, &eps, cap)?;
        let decimal = to_decimal(z, args.digits, cap).map_err(CliError::Engine)?;
        return Ok(a.to_json(&decimal));
    }

    if args.terms.is_some() || eps.is_some() {
        let a = extraction(z, args, &eps, cap)?;
        let terms = a
            .terms
            .iter()
            .map(|t| t.to_string())
            .collect::<Vec<_>>()
            .join(" ");
        let mut out = String::new();
        out.push_str(&terms);
        if a.exact {
            if terms.is_empty() {
                out.push_str("(empty)");
            }
            out.push_str("  (exact)");
        } else {
            if !terms.is_empty() {
                out.push_str("  ");
            }
            out.push_str(&format!("tail in [{}, {})", a.tail_lo, a.tail_hi));
            if let Some(z_k) = a.final_term() {
                out.push_str(&format!("  canonical last term {z_k}"));
            }
        }
        return Ok(out);
    }

    to_decimal(z, args.digits, cap).map_err(CliError::Engine)
}

fn extraction(
    z: &Cf,
    args: &Args,
    eps: &Option<BigRational>,
    cap: usize,
) -> Result<Approximation, CliError> {
    match (args.terms, eps) {
        (Some(n), _) => first_terms(z, n, cap).map_err(CliError::Engine),
        (None, Some(eps)) => approximate(z, eps, cap).map_err(CliError::Engine),
        (None, None) => {
            // JSON without explicit accuracy: enough for the digits shown.
            let eps = BigRational::new(BigInt::from(1), BigInt::from(10).pow(args.digits as u32 + 2));
            approximate(z, &eps, cap).map_err(CliError::Engine)
        }
    }
}

fn parse_eps(s: &str) -> Option<BigRational> {
    let r = match s.split_once('/') {
        Some((p, q)) => BigRational::new(p.trim().parse().ok()?, q.trim().parse().ok()?),
        None => BigRational::from_integer(s.trim().parse().ok()?),
    };
    r.is_positive().then_some(r)
}

fn repl(ctx: &mut Context, args: &Args, cap: usize) -> ExitCode {
    let stdin = std::io::stdin();
    let mut out = std::io::stdout();
    println!("cf: exact continued-fraction calculator ('let name = expr' binds, 'quit' exits)");
    loop {
        print!("cf> ");
        let _ = out.flush();
        let mut line = String::new();
        match stdin.lock().read_line(&mut line) {
            Ok(0) => return ExitCode::SUCCESS,
            Ok(_) => {}
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
        }
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line == "quit" || line == "exit" {
            return ExitCode::SUCCESS;
        }
        if let Some(rest) = line.strip_prefix("let ") {
            match rest.split_once('=') {
                Some((name, expr_src)) => {
                    let name = name.trim();
                    if name.is_empty()
                        || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
                        || name.chars().next().unwrap().is_ascii_digit()
                    {
                        eprintln!("error: invalid binding name '{name}'");
                        continue;
                    }
                    let parsed = parse_expr(expr_src).map_err(CliError::Parse);
                    match parsed.and_then(|e| ctx.eval(&e).map_err(CliError::Eval)) {
                        Ok(z) => {
                            ctx.vars.insert(name.to_string(), z);
                            println!("{name} bound");
                        }
                        Err(e) => eprintln!("error: {e}"),
                    }
                }
                None => eprintln!("error: expected 'let name = expr'"),
            }
            continue;
        }
        match serve(line, ctx, args, cap) {
            Ok(rendered) => println!("{rendered}"),
            Err(e) => eprintln!("error: {e}"),
        }
    }
}
