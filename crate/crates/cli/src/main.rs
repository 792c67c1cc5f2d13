//! Command-line front end: synth → coeffs → check → reconstruct →
//! basis → algebraic-check, with machine-first reports for scripting.
//!
//! Exit codes: 0 success / trajectory_consistent, 1 usage or input
//! error, 2 inconsistent verdict, 3 inconclusive verdict.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use momtraj::moment_model::MomentStore;
use momtraj::moment_synth::DEFAULT_SYNTH_ORDER;
use momtraj::{
    algebraic_support_check, build_from_moments, check_trajectory, general_coefficient_row,
    synthesize, CheckConfig, LebesgueBasis, LoadOptions, Marginal, MeasureKind, MeasureSpec,
    MomentTable, ResidualNorm, SeriesBasis, TrajectoryFn, Verdict,
};

#[derive(Parser)]
#[command(name = "momtraj", version, about = "Trajectory-support detection from moment tables")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableFormat {
    Csv,
    Structured,
}

#[derive(Clone, Copy, ValueEnum)]
enum BasisFormat {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Dump basis polynomial coefficients (shifted Legendre, or the
    /// orthonormal basis of an explicit marginal).
    Basis {
        #[arg(long)]
        degree: usize,
        /// CSV file `j,value` of marginal moments; switches to the
        /// general-marginal basis.
        #[arg(long)]
        marginal_moments: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: BasisFormat,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic moment table.
    Synth {
        #[arg(long)]
        kind: String,
        /// Trajectory function: exp_neg, sin_scaled, const:C, or
        /// poly:c0,c1,... (repeat for mixtures).
        #[arg(long = "fn")]
        functions: Vec<String>,
        /// Mixture weights, comma separated.
        #[arg(long)]
        weights: Option<String>,
        /// Marginal density: lebesgue or linear (h(t) = 2t).
        #[arg(long, default_value = "lebesgue")]
        marginal: String,
        #[arg(long)]
        max_i: usize,
        #[arg(long)]
        max_j: usize,
        #[arg(long, default_value_t = DEFAULT_SYNTH_ORDER)]
        order: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: TableFormat,
        /// Additive uniform noise amplitude.
        #[arg(long)]
        noise: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the basis coefficients Δγ_i of one moment row.
    Coeffs {
        #[arg(long)]
        moments: PathBuf,
        #[arg(long)]
        i: usize,
        #[arg(long)]
        degree: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        normalize: bool,
        #[arg(long, default_value_t = 1e-9)]
        marginal_tol: f64,
    },
    /// Run the trajectory test and emit a report.
    Check {
        #[arg(long)]
        moments: PathBuf,
        #[arg(long)]
        truncation: usize,
        #[arg(long)]
        max_power: usize,
        #[arg(long)]
        tol: f64,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Use the ℓ∞ residual norm instead of ℓ².
        #[arg(long)]
        linf: bool,
        /// Clamp the report's reconstruction samples to [0,1].
        #[arg(long)]
        clamp: bool,
        #[arg(long)]
        normalize: bool,
        #[arg(long, default_value_t = 1e-9)]
        marginal_tol: f64,
        /// Degree cap for the general-marginal basis.
        #[arg(long, default_value_t = momtraj::orthopoly_general::DEFAULT_GENERAL_DEGREE_CAP)]
        general_degree_cap: usize,
        /// Embed a timestamp in the report (off by default so reruns are
        /// byte-identical).
        #[arg(long)]
        stamp: bool,
    },
    /// Sample a coefficient series on a uniform grid.
    Reconstruct {
        /// CSV file `j,coefficient` (as written by `coeffs`).
        #[arg(long)]
        series: PathBuf,
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        clamp: bool,
    },
    /// Singular-value probe of the bivariate moment matrix M_s.
    AlgebraicCheck {
        #[arg(long)]
        moments: PathBuf,
        #[arg(long)]
        degree_s: usize,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        normalize: bool,
        #[arg(long, default_value_t = 1e-9)]
        marginal_tol: f64,
    },
    /// Extract one coordinate's (t, x_c) moment table from a
    /// multi-coordinate store.
    Slice {
        #[arg(long)]
        store: PathBuf,
        /// 1-based coordinate index.
        #[arg(long)]
        coordinate: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: TableFormat,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version are not errors; usage mistakes exit 1
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<u8> {
    match command {
        Command::Basis {
            degree,
            marginal_moments,
            format,
            out,
        } => cmd_basis(degree, marginal_moments.as_deref(), format, out.as_deref()),
        Command::Synth {
            kind,
            functions,
            weights,
            marginal,
            max_i,
            max_j,
            order,
            out,
            format,
            noise,
            seed,
        } => cmd_synth(
            &kind, &functions, weights.as_deref(), &marginal, max_i, max_j, order, &out, format,
            noise, seed,
        ),
        Command::Coeffs {
            moments,
            i,
            degree,
            out,
            normalize,
            marginal_tol,
        } => cmd_coeffs(&moments, i, degree, out.as_deref(), load_opts(normalize, marginal_tol)),
        Command::Check {
            moments,
            truncation,
            max_power,
            tol,
            report,
            linf,
            clamp,
            normalize,
            marginal_tol,
            general_degree_cap,
            stamp,
        } => cmd_check(
            &moments,
            truncation,
            max_power,
            tol,
            report.as_deref(),
            linf,
            clamp,
            load_opts(normalize, marginal_tol),
            general_degree_cap,
            stamp,
        ),
        Command::Reconstruct {
            series,
            samples,
            out,
            clamp,
        } => cmd_reconstruct(&series, samples, &out, clamp),
        Command::AlgebraicCheck {
            moments,
            degree_s,
            report,
            normalize,
            marginal_tol,
        } => cmd_algebraic(&moments, degree_s, report.as_deref(), load_opts(normalize, marginal_tol)),
        Command::Slice {
            store,
            coordinate,
            out,
            format,
        } => cmd_slice(&store, coordinate, &out, format),
    }
}

fn load_opts(normalize: bool, marginal_tol: f64) -> LoadOptions {
    LoadOptions {
        marginal_tol,
        normalize,
    }
}

/// Write the whole payload through a temp file so failed runs leave no
/// truncated output behind.
fn write_atomic(path: &Path, payload: &str) -> Result<()> {
    let tmp = path.with_extension("tmp-momtraj");
    std::fs::write(&tmp, payload).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path).with_context(|| format!("renaming to {}", path.display()))?;
    Ok(())
}

fn emit(out: Option<&Path>, payload: &str) -> Result<()> {
    match out {
        Some(path) => write_atomic(path, payload),
        None => {
            print!("{payload}");
            Ok(())
        }
    }
}

fn load_table(path: &Path, options: LoadOptions) -> Result<(MomentTable, String)> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let digest = format!("{:x}", Sha256::digest(&bytes));
    let text = String::from_utf8(bytes).context("moment file is not UTF-8")?;
    let table = if text.trim_start().starts_with('{') {
        MomentTable::from_structured(&text, options)?
    } else {
        MomentTable::from_csv(&text, options)?
    };
    Ok((table, digest))
}

fn cmd_basis(
    degree: usize,
    marginal_moments: Option<&Path>,
    format: BasisFormat,
    out: Option<&Path>,
) -> Result<u8> {
    let rows: Vec<Vec<f64>> = match marginal_moments {
        None => {
            let transform = momtraj::build_shifted_legendre(degree)?;
            (0..=degree).map(|j| transform.row(j).to_vec()).collect()
        }
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let moments = parse_value_csv(&text, "j,value")?;
            if moments.len() < 2 * degree + 1 {
                bail!(
                    "degree {degree} needs {} marginal moments, file has {}",
                    2 * degree + 1,
                    moments.len()
                );
            }
            let basis = build_from_moments(&moments[..=2 * degree])?;
            (0..=degree).map(|j| basis.row(j).to_vec()).collect()
        }
    };
    let payload = match format {
        BasisFormat::Csv => {
            let mut s = String::from("j,k,coefficient\n");
            for (j, row) in rows.iter().enumerate() {
                for (k, c) in row.iter().enumerate() {
                    writeln!(s, "{j},{k},{c:.16e}").unwrap();
                }
            }
            s
        }
        BasisFormat::Json => {
            let mut s = serde_json::to_string_pretty(
                &serde_json::json!({ "degree": degree, "rows": rows }),
            )?;
            s.push('\n');
            s
        }
    };
    emit(out, &payload)?;
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_synth(
    kind: &str,
    functions: &[String],
    weights: Option<&str>,
    marginal: &str,
    max_i: usize,
    max_j: usize,
    order: usize,
    out: &Path,
    format: TableFormat,
    noise: Option<f64>,
    seed: u64,
) -> Result<u8> {
    let kind = match kind {
        "trajectory" => MeasureKind::Trajectory,
        "product" => MeasureKind::Product,
        "mixture" => MeasureKind::Mixture,
        other => bail!("unknown measure kind \"{other}\""),
    };
    let trajectories = functions
        .iter()
        .map(|s| s.parse::<TrajectoryFn>())
        .collect::<momtraj::Result<Vec<_>>>()?;
    let weights = match weights {
        Some(w) => w
            .split(',')
            .map(|v| v.trim().parse::<f64>().context("bad weight"))
            .collect::<Result<Vec<_>>>()?,
        None => match kind {
            MeasureKind::Product => Vec::new(),
            _ => vec![1.0 / trajectories.len().max(1) as f64; trajectories.len()],
        },
    };
    let spec = MeasureSpec {
        kind,
        trajectories,
        weights,
        marginal: marginal.parse()?,
    };
    let mut table = synthesize(&spec, max_i, max_j, order)?;
    if let Some(eps) = noise {
        table = momtraj::apply_noise(&table, eps, seed)?;
    }
    let payload = match format {
        TableFormat::Csv => table.to_csv(),
        TableFormat::Structured => {
            let mut s = table.to_structured();
            s.push('\n');
            s
        }
    };
    write_atomic(out, &payload)?;
    Ok(0)
}

fn cmd_coeffs(
    moments: &Path,
    i: usize,
    degree: usize,
    out: Option<&Path>,
    options: LoadOptions,
) -> Result<u8> {
    let (table, _) = load_table(moments, options)?;
    let series = match table.marginal() {
        Marginal::Explicit(_) => {
            let needed = 2 * degree;
            if table.max_j() < needed {
                bail!(
                    "general marginal: degree {degree} needs marginal moments up to {needed}, \
                     table has max_j = {}",
                    table.max_j()
                );
            }
            let marginal_moments: Vec<f64> = (0..=needed)
                .map(|j| table.marginal().moment(j).unwrap())
                .collect();
            let basis = build_from_moments(&marginal_moments)?;
            general_coefficient_row(&table, &basis, i, degree)?
        }
        _ => table.coefficient_row(i, degree)?,
    };
    let mut payload = String::from("j,coefficient\n");
    for (j, c) in series.coeffs.iter().enumerate() {
        writeln!(payload, "{j},{c:.16e}").unwrap();
    }
    emit(out, &payload)?;
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_check(
    moments: &Path,
    truncation: usize,
    max_power: usize,
    tol: f64,
    report_path: Option<&Path>,
    linf: bool,
    clamp: bool,
    options: LoadOptions,
    general_degree_cap: usize,
    stamp: bool,
) -> Result<u8> {
    let (table, digest) = load_table(moments, options)?;
    let mut config = CheckConfig::new(truncation, max_power, tol);
    if linf {
        config.norm = ResidualNorm::Linf;
    }
    config.general_degree_cap = general_degree_cap;
    let report = check_trajectory(&table, &config)?;

    let samples = if report.verdict == Verdict::Inconsistent {
        None
    } else {
        Some(momtraj::reconstruct_trajectory(&report, 9, clamp)?)
    };

    let mut doc = serde_json::json!({
        "tool_version": env!("CARGO_PKG_VERSION"),
        "input_digest": digest,
        "report": report,
        "reconstruction_samples": samples,
    });
    if stamp {
        doc["timestamp"] = serde_json::json!(
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        );
    }
    if let Some(path) = report_path {
        let mut payload = serde_json::to_string_pretty(&doc)?;
        payload.push('\n');
        write_atomic(path, &payload)?;
    }

    println!("verdict: {}", verdict_name(report.verdict));
    for r in &report.residuals {
        println!("  r_{} = {:.6e} (compared over {} coefficients)", r.i, r.residual, r.compared_length);
    }
    println!("sup-norm estimate of reconstruction partial sum: {:.6}", report.sup_norm_estimate);
    if report.sup_norm_warning {
        eprintln!(
            "warning: partial sums exceed 1.5 on the sampling grid; the boundedness \
             hypothesis of the trajectory test looks doubtful"
        );
    }
    Ok(match report.verdict {
        Verdict::TrajectoryConsistent => 0,
        Verdict::Inconsistent => 2,
        Verdict::Inconclusive => 3,
    })
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::TrajectoryConsistent => "trajectory_consistent",
        Verdict::Inconsistent => "inconsistent",
        Verdict::Inconclusive => "inconclusive",
    }
}

fn cmd_reconstruct(series: &Path, samples: usize, out: &Path, clamp: bool) -> Result<u8> {
    if samples < 2 {
        bail!("samples must be >= 2");
    }
    let text = std::fs::read_to_string(series)
        .with_context(|| format!("reading {}", series.display()))?;
    let coeffs = parse_value_csv(&text, "j,coefficient")?;
    let basis = LebesgueBasis::default();
    let mut payload = String::from("t,value\n");
    for k in 0..samples {
        let t = k as f64 / (samples - 1) as f64;
        let mut x = basis.clenshaw(&coeffs, t)?;
        if clamp {
            x = x.clamp(0.0, 1.0);
        }
        writeln!(payload, "{t:.17},{x:.17}").unwrap();
    }
    write_atomic(out, &payload)?;
    Ok(0)
}

fn cmd_algebraic(
    moments: &Path,
    degree_s: usize,
    report_path: Option<&Path>,
    options: LoadOptions,
) -> Result<u8> {
    let (table, digest) = load_table(moments, options)?;
    let result = algebraic_support_check(&table, degree_s)?;
    if let Some(path) = report_path {
        let doc = serde_json::json!({
            "tool_version": env!("CARGO_PKG_VERSION"),
            "input_digest": digest,
            "result": result,
        });
        let mut payload = serde_json::to_string_pretty(&doc)?;
        payload.push('\n');
        write_atomic(path, &payload)?;
    }
    println!(
        "smallest singular value of M_{}: {:.6e} (largest {:.6e})",
        degree_s, result.smallest_singular_value, result.largest_singular_value
    );
    match &result.kernel_polynomial {
        Some(kernel) => {
            println!("kernel polynomial (vanishes on the support):");
            for term in kernel {
                if term.coeff.abs() > 1e-9 {
                    println!("  {:+.6e} * x^{} t^{}", term.coeff, term.x_power, term.t_power);
                }
            }
        }
        None => println!("no numerical kernel; support looks full-dimensional at this degree"),
    }
    Ok(0)
}

fn cmd_slice(store: &Path, coordinate: usize, out: &Path, format: TableFormat) -> Result<u8> {
    let text = std::fs::read_to_string(store)
        .with_context(|| format!("reading {}", store.display()))?;
    let store = MomentStore::from_json(&text)?;
    let table = store.slice_coordinate(coordinate, LoadOptions::default())?;
    let payload = match format {
        TableFormat::Csv => table.to_csv(),
        TableFormat::Structured => {
            let mut s = table.to_structured();
            s.push('\n');
            s
        }
    };
    write_atomic(out, &payload)?;
    Ok(0)
}

/// Parse a two-column CSV `index,value` with the given header, returning
/// the dense value vector ordered by index.
fn parse_value_csv(text: &str, header: &str) -> Result<Vec<f64>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim().eq_ignore_ascii_case(header) => {}
        _ => bail!("expected header \"{header}\""),
    }
    let mut entries = Vec::new();
    for line in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let j: usize = parts
            .next()
            .context("missing index column")?
            .trim()
            .parse()
            .context("bad index")?;
        let v: f64 = parts
            .next()
            .context("missing value column")?
            .trim()
            .parse()
            .context("bad value")?;
        entries.push((j, v));
    }
    entries.sort_by_key(|&(j, _)| j);
    let mut out = Vec::with_capacity(entries.len());
    for (expected, (j, v)) in entries.into_iter().enumerate() {
        if j != expected {
            bail!("missing or duplicate index {expected} in CSV");
        }
        out.push(v);
    }
    if out.is_empty() {
        bail!("empty CSV");
    }
    Ok(out)
}
