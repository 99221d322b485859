//! Command-line front end: validate measures, apply the integral maps,
//! sample, and run the verification suites. JSON in, CSV/JSON out; exit
//! code 0 on pass, 1 on a domain failure (not-Lévy, tolerance exceeded,
//! nonexistent integral), 2 on usage or parse errors.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use levykit::integral_map::{self, CharFn};
use levykit::json::{MixingSpec, TripletSpec};
use levykit::levy_core::LevyTriplet;
use levykit::mixing::{self, MixingMeasure};
use levykit::rng::SplitRng;
use levykit::sampler::{self, SimulationScheme};
use levykit::{free_bridge, RealMeasure};

#[derive(Parser)]
#[command(name = "levykit", version, about = "Lévy triplet and random-integral toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct IoArgs {
    /// Triplet JSON file.
    #[arg(long)]
    triplet: Option<PathBuf>,
    /// Mixing-measure JSON file.
    #[arg(long)]
    mixing: Option<PathBuf>,
    /// Output path (CSV or JSON depending on the command).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Evaluation grid "a:b:n".
    #[arg(long)]
    grid: Option<String>,
    /// Stable index α.
    #[arg(long)]
    alpha: Option<f64>,
    /// Number of Monte Carlo draws.
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    /// RNG seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Tolerance for pass/fail commands.
    #[arg(long)]
    tolerance: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a Lévy measure and its λ-mixture; exit 0 iff the mixture
    /// is again a Lévy measure.
    Validate(IoArgs),
    /// Tabulate log-CFs of the input and mapped laws on a grid.
    Map(IoArgs),
    /// Draw from the random integral and write the batch as CSV (scheme
    /// sidecar JSON is written next to it).
    Sample(IoArgs),
    /// Compare the empirical CF of a sampled batch against the analytic
    /// CF within the 3/√n + grid-bias band.
    VerifyCf(IoArgs),
    /// Check the free-probability bridge identity on a built-in pair.
    FreeBridge {
        /// Which fixture pair: gaussian | poisson | shift.
        #[arg(long, default_value = "gaussian")]
        pair: String,
        #[command(flatten)]
        io: IoArgs,
    },
    /// CF-level stable-limit experiment for the tempered-stable map.
    StableLimit(IoArgs),
    /// Roundtrip the inverse maps and report relative errors.
    Invert(IoArgs),
}

enum CliError {
    Usage(String),
    Domain(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 1,
        }
    }
    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Domain(m) => m,
        }
    }
}

fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

fn domain<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Domain(e.to_string())
}

fn load_triplet(args: &IoArgs) -> Result<LevyTriplet, CliError> {
    let path = args
        .triplet
        .as_ref()
        .ok_or_else(|| CliError::Usage("--triplet <path> is required".into()))?;
    let text = fs::read_to_string(path).map_err(usage)?;
    let spec: TripletSpec = serde_json::from_str(&text).map_err(usage)?;
    spec.to_triplet().map_err(usage)
}

fn load_mixing(args: &IoArgs) -> Result<MixingMeasure, CliError> {
    let path = args
        .mixing
        .as_ref()
        .ok_or_else(|| CliError::Usage("--mixing <path> is required".into()))?;
    let text = fs::read_to_string(path).map_err(usage)?;
    let spec: MixingSpec = serde_json::from_str(&text).map_err(usage)?;
    spec.to_mixing().map_err(usage)
}

fn parse_grid(spec: &Option<String>, default: (f64, f64, usize)) -> Result<Vec<f64>, CliError> {
    let (a, b, n) = match spec {
        None => default,
        Some(text) => {
            let parts: Vec<&str> = text.split(':').collect();
            if parts.len() != 3 {
                return Err(CliError::Usage(format!("grid must be a:b:n, got {text:?}")));
            }
            (
                parts[0].parse().map_err(usage)?,
                parts[1].parse().map_err(usage)?,
                parts[2].parse().map_err(usage)?,
            )
        }
    };
    if n < 2 || !(b > a) {
        return Err(CliError::Usage("grid needs b > a and n ≥ 2".into()));
    }
    Ok((0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect())
}

fn write_output(out: &Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, content).map_err(domain),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn cmd_validate(args: &IoArgs) -> Result<(), CliError> {
    let triplet = load_triplet(args)?;
    let lambda = load_mixing(args)?;
    let diag = mixing::check_mixture_integrability(triplet.levy_measure(), &lambda);
    let report = serde_json::json!({
        "measure": triplet.levy_measure().validate(),
        "mixture": diag,
    });
    write_output(&args.out, &format!("{}\n", serde_json::to_string_pretty(&report).map_err(domain)?))?;
    if diag.is_levy {
        Ok(())
    } else {
        Err(CliError::Domain(format!(
            "mixture is not a Lévy measure (criterion {})",
            diag.criterion_value
        )))
    }
}

fn cmd_map(args: &IoArgs) -> Result<(), CliError> {
    let triplet = load_triplet(args)?;
    let lambda = load_mixing(args)?;
    let grid = parse_grid(&args.grid, (-3.0, 3.0, 61))?;
    let mapped = integral_map::map_triplet(&triplet, &lambda).map_err(|e| {
        eprintln!("{:#?}", integral_map::check_existence(&triplet, &lambda));
        domain(e)
    })?;
    let with_free = matches!(lambda, MixingMeasure::Exponential);

    let mut csv = String::from("# levykit map v1: log-CF columns per law\n");
    csv.push_str(if with_free {
        "y,re_input,im_input,re_mapped,im_mapped,re_free_kernel,im_free_kernel\n"
    } else {
        "y,re_input,im_input,re_mapped,im_mapped\n"
    });
    for &y in &grid {
        let input = triplet.levy_exponent(&[y]).map_err(domain)?.value;
        let out = mapped.output.levy_exponent(&[y]).map_err(domain)?.value;
        if with_free {
            let free = integral_map::free_log_cf(&triplet, &[y]).map_err(domain)?;
            csv.push_str(&format!(
                "{y},{},{},{},{},{},{}\n",
                input.re, input.im, out.re, out.im, free.re, free.im
            ));
        } else {
            csv.push_str(&format!("{y},{},{},{},{}\n", input.re, input.im, out.re, out.im));
        }
    }
    write_output(&args.out, &csv)
}

fn cmd_sample(args: &IoArgs) -> Result<(), CliError> {
    let triplet = load_triplet(args)?;
    let lambda = load_mixing(args)?;
    let scheme = SimulationScheme::default_for(&lambda, args.seed);
    let rng = SplitRng::new(args.seed);
    let batch = sampler::sample_random_integral(&triplet, &lambda, &scheme, args.n, &rng)
        .map_err(domain)?;
    let mut buf = Vec::new();
    batch.write_csv(&mut buf).map_err(domain)?;
    write_output(&args.out, &String::from_utf8(buf).map_err(domain)?)?;
    if let Some(out) = &args.out {
        let sidecar = out.with_extension("scheme.json");
        let provenance = serde_json::json!({
            "scheme": batch.scheme,
            "target": batch.target,
        });
        fs::write(sidecar, serde_json::to_string_pretty(&provenance).map_err(domain)?)
            .map_err(domain)?;
    }
    Ok(())
}

fn cmd_verify_cf(args: &IoArgs) -> Result<(), CliError> {
    let triplet = load_triplet(args)?;
    let lambda = load_mixing(args)?;
    let grid = parse_grid(&args.grid, (0.2, 2.0, 10))?;
    let scheme = SimulationScheme::default_for(&lambda, args.seed);
    let rng = SplitRng::new(args.seed);
    let batch = sampler::sample_random_integral(&triplet, &lambda, &scheme, args.n, &rng)
        .map_err(domain)?;
    let y_grid: Vec<Vec<f64>> = grid.iter().map(|y| vec![*y]).collect();
    let emp = sampler::empirical_cf(&batch, &y_grid).map_err(domain)?;
    let analytic = integral_map::map_cf(&CharFn::from_triplet(&triplet), &lambda);
    let extra = args.tolerance.unwrap_or(0.0);

    let mut csv = String::from(
        "# levykit verify-cf v1: empirical vs analytic CF with 3/sqrt(n)+bias band\n\
         y,re_empirical,im_empirical,re_analytic,im_analytic,abs_err,band\n",
    );
    let mut failures = 0usize;
    for point in &emp {
        let want = analytic.value(&point.y).map_err(domain)?;
        let bias = sampler::declared_grid_bias(&triplet, &lambda, &scheme, &point.y)
            .map_err(domain)?;
        let err = (point.value - want).norm();
        let band = 3.0 * point.error_bar + bias + extra;
        if err > band {
            failures += 1;
        }
        csv.push_str(&format!(
            "{},{},{},{},{},{err},{band}\n",
            point.y[0], point.value.re, point.value.im, want.re, want.im
        ));
    }
    write_output(&args.out, &csv)?;
    if failures > 0 {
        return Err(CliError::Domain(format!(
            "{failures} grid points left the Monte Carlo band"
        )));
    }
    Ok(())
}

fn bridge_fixture(pair: &str) -> Result<(LevyTriplet, RealMeasure, bool), CliError> {
    match pair {
        "gaussian" => Ok((
            LevyTriplet::new_1d(0.0, 1.0, levykit::LevyMeasure::zero()).map_err(usage)?,
            RealMeasure::semicircle(2.0),
            true,
        )),
        "poisson" => Ok((
            LevyTriplet::new_1d(1.0, 0.0, levykit::LevyMeasure::delta_1d(1.0, 1.0))
                .map_err(usage)?,
            RealMeasure::marchenko_pastur(1.0),
            false,
        )),
        "shift" => Ok((
            LevyTriplet::new_1d(0.6, 0.0, levykit::LevyMeasure::zero()).map_err(usage)?,
            RealMeasure::point_mass(0.6),
            false,
        )),
        other => Err(CliError::Usage(format!(
            "unknown pair {other:?}; use gaussian | poisson | shift"
        ))),
    }
}

fn cmd_free_bridge(pair: &str, args: &IoArgs) -> Result<(), CliError> {
    let (triplet, nu, avoid_one) = bridge_fixture(pair)?;
    let grid: Vec<f64> = parse_grid(&args.grid, (0.1, 3.0, 30))?
        .into_iter()
        // t = 1 touches the invertibility-domain boundary for the
        // semicircle pair (F^{-1} lands on the real axis there).
        .filter(|t| !avoid_one || (t - 1.0).abs() > 0.05)
        .collect();
    let tolerance = args.tolerance.unwrap_or(1e-5);
    let worst = free_bridge::bridge_check(&triplet, &nu, &grid).map_err(domain)?;
    let csv = format!(
        "# levykit free-bridge v1: max |free side − classical side| over the grid\n\
         pair,max_discrepancy,tolerance\n{pair},{worst},{tolerance}\n"
    );
    write_output(&args.out, &csv)?;
    if worst > tolerance {
        return Err(CliError::Domain(format!(
            "bridge discrepancy {worst} exceeds {tolerance}"
        )));
    }
    Ok(())
}

fn cmd_stable_limit(args: &IoArgs) -> Result<(), CliError> {
    let triplet = load_triplet(args)?;
    let alpha = args.alpha.unwrap_or(0.5);
    let grid = parse_grid(&args.grid, (-2.0, 2.0, 17))?;
    let y_grid: Vec<Vec<f64>> = grid.iter().filter(|y| **y != 0.0).map(|y| vec![*y]).collect();
    let s_list = [1.0, 0.1, 0.01, 0.001];
    let tolerance = args.tolerance.unwrap_or(1e-2);
    let table = sampler::stable_limit_experiment(triplet.levy_measure(), alpha, &s_list, &y_grid)
        .map_err(domain)?;

    let mut csv = format!(
        "# levykit stable-limit v1: CF discrepancy to the strictly stable law, c_alpha = {}\n\
         s,discrepancy\n",
        table.c_alpha
    );
    for row in &table.rows {
        csv.push_str(&format!("{},{}\n", row.s, row.discrepancy));
    }
    write_output(&args.out, &csv)?;

    let decreasing = table.rows.windows(2).all(|w| w[1].discrepancy < w[0].discrepancy);
    let last = table.rows.last().map(|r| r.discrepancy).unwrap_or(f64::INFINITY);
    if !decreasing || last > tolerance {
        return Err(CliError::Domain(format!(
            "stable limit not attained (decreasing: {decreasing}, final {last})"
        )));
    }
    Ok(())
}

fn cmd_invert(args: &IoArgs) -> Result<(), CliError> {
    let triplet = load_triplet(args)?;
    let lambda = load_mixing(args)?;
    let tolerance = args.tolerance.unwrap_or(1e-3);
    let source = CharFn::from_triplet(&triplet);
    let mapped = integral_map::map_cf(&source, &lambda);

    let (default_grid, invert): (_, Box<dyn Fn(&[f64]) -> Result<Complex64, _>>) = match &lambda {
        MixingMeasure::Exponential => (
            (0.1, 0.7, 7),
            Box::new(move |y: &[f64]| integral_map::inverse_map_exponential(&mapped, y)),
        ),
        MixingMeasure::RhoAlpha { alpha } => {
            let a = *alpha;
            (
                (0.1, 1.2, 8),
                Box::new(move |y: &[f64]| integral_map::inverse_map_tempered(&mapped, a, y)),
            )
        }
        _ => {
            return Err(CliError::Usage(
                "invert supports exponential and rho_alpha mixing measures".into(),
            ))
        }
    };
    let grid = parse_grid(&args.grid, default_grid)?;

    let mut csv = String::from("# levykit invert v1: roundtrip relative errors\ny,rel_err\n");
    let mut worst: f64 = 0.0;
    for &y in &grid {
        let recovered = invert(&[y]).map_err(domain)?;
        let truth = source.log_cf(&[y]).map_err(domain)?;
        let rel = (recovered - truth).norm() / truth.norm().max(1e-300);
        worst = worst.max(rel);
        csv.push_str(&format!("{y},{rel}\n"));
    }
    write_output(&args.out, &csv)?;
    if worst > tolerance {
        return Err(CliError::Domain(format!(
            "roundtrip error {worst} exceeds {tolerance}"
        )));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Validate(args) => cmd_validate(args),
        Command::Map(args) => cmd_map(args),
        Command::Sample(args) => cmd_sample(args),
        Command::VerifyCf(args) => cmd_verify_cf(args),
        Command::FreeBridge { pair, io } => cmd_free_bridge(pair, io),
        Command::StableLimit(args) => cmd_stable_limit(args),
        Command::Invert(args) => cmd_invert(args),
    }
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("LEVYKIT_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("levykit: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
