//! Thin command-line front end: `degrade`, `restore`, `metrics`,
//! `selftest`.  Exit codes: 0 success, 1 test/convergence failure,
//! 2 usage or I/O error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use parsplit::coupled::trace_to_csv;
use parsplit::imaging::{blur_map, degrade, io, psnr, ssim, Psf};
use parsplit::restore::{restore, RestoreParams};
use parsplit::vecmath;
use parsplit::{selftest, Error};

#[derive(Parser)]
#[command(
    name = "parsplit",
    about = "Primal-dual splitting solver with an image-restoration front end",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Blur an image and add calibrated Gaussian noise.
    Degrade(DegradeArgs),
    /// Deblur/denoise an image with the mixed-regularization model.
    Restore(RestoreArgs),
    /// Print PSNR and SSIM for a reference/estimate pair.
    Metrics(MetricsArgs),
    /// Run the built-in verification battery.
    Selftest,
}

#[derive(Args)]
struct DegradeArgs {
    /// Input PGM image.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output PGM path (a `.json` sidecar is written next to it).
    #[arg(long)]
    out: PathBuf,
    /// PSF spec: `motion:N` or `taps:w1,w2,...`.
    #[arg(long, default_value = "motion:21")]
    psf: String,
    /// Target signal-to-noise ratio in dB (>= 300 disables noise).
    #[arg(long, default_value_t = 45.0)]
    snr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct RestoreArgs {
    /// Degraded PGM image.
    #[arg(long = "in")]
    input: PathBuf,
    /// Restored PGM output (trace CSV and metrics JSON written next to it).
    #[arg(long)]
    out: PathBuf,
    /// Ground-truth PGM for quality metrics.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// JSON config file; command-line flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// First-order difference weight.
    #[arg(long)]
    alpha: Option<f64>,
    /// Second-order difference weight.
    #[arg(long)]
    beta: Option<f64>,
    /// Wavelet sparsity weight.
    #[arg(long)]
    gamma: Option<f64>,
    /// Wavelet decomposition levels.
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    psf: Option<String>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Relative-change stopping threshold (0 disables).
    #[arg(long)]
    rtol: Option<f64>,
    /// Step-size interval parameter epsilon.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct MetricsArgs {
    /// Reference PGM image.
    #[arg(long = "ref")]
    reference: PathBuf,
    /// Estimate PGM image.
    #[arg(long)]
    est: PathBuf,
}

/// On-disk restore configuration; every field optional, flags win.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RestoreFileConfig {
    alpha: Option<f64>,
    beta: Option<f64>,
    gamma: Option<f64>,
    lo: Option<f64>,
    hi: Option<f64>,
    psf: Option<String>,
    levels: Option<usize>,
    epsilon: Option<f64>,
    max_iter: Option<usize>,
    rtol: Option<f64>,
    seed: Option<u64>,
    intensity_scale: Option<f64>,
}

#[derive(Serialize)]
struct DegradeSidecar {
    psf: String,
    snr_db: f64,
    seed: u64,
    sigma: f64,
    empirical_snr_db: Option<f64>,
}

#[derive(Serialize)]
struct QualityPair {
    psnr_db: Option<f64>,
    psnr_infinite: bool,
    ssim: f64,
}

#[derive(Serialize)]
struct RestoreMetrics {
    iterations: usize,
    converged: bool,
    elapsed_secs: f64,
    beta_bound: f64,
    kkt_residual: f64,
    degraded: Option<QualityPair>,
    restored: Option<QualityPair>,
}

fn quality(
    reference: &parsplit::imaging::Image,
    est: &parsplit::imaging::Image,
) -> parsplit::Result<QualityPair> {
    let p = psnr(reference, est)?;
    Ok(QualityPair {
        psnr_db: if p.is_finite() { Some(p) } else { None },
        psnr_infinite: p.is_infinite(),
        ssim: ssim(reference, est)?,
    })
}

fn sidecar_path(out: &Path, suffix: &str) -> PathBuf {
    out.with_extension(suffix)
}

fn cmd_degrade(args: &DegradeArgs) -> parsplit::Result<()> {
    let x = io::read_pgm(&args.input)?;
    let psf = Psf::parse(&args.psf)?;
    let (y, sigma) = degrade(&x, &psf, args.snr, args.seed)?;
    io::write_pgm(&args.out, &y)?;

    let empirical = if sigma > 0.0 {
        let t = blur_map(&psf, x.width, x.height)?;
        let tx = t.apply(&x.pixels)?;
        let noise: Vec<f64> = y.pixels.iter().zip(&tx).map(|(a, b)| a - b).collect();
        Some(20.0 * (vecmath::norm(&tx) / vecmath::norm(&noise)).log10())
    } else {
        None
    };
    let sidecar = DegradeSidecar {
        psf: args.psf.clone(),
        snr_db: args.snr,
        seed: args.seed,
        sigma,
        empirical_snr_db: empirical,
    };
    std::fs::write(
        sidecar_path(&args.out, "json"),
        serde_json::to_string_pretty(&sidecar).expect("serializable") + "\n",
    )?;
    println!(
        "degraded {} -> {} (sigma {:.3e}{})",
        args.input.display(),
        args.out.display(),
        sigma,
        empirical
            .map(|s| format!(", empirical snr {s:.2} dB"))
            .unwrap_or_default()
    );
    Ok(())
}

fn cmd_restore(args: &RestoreArgs) -> parsplit::Result<bool> {
    let file: RestoreFileConfig = match &args.config {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?,
        None => RestoreFileConfig::default(),
    };
    let defaults = RestoreParams::default();
    let psf_spec = args
        .psf
        .clone()
        .or(file.psf)
        .unwrap_or_else(|| "motion:21".into());
    let params = RestoreParams {
        alpha: args.alpha.or(file.alpha).unwrap_or(defaults.alpha),
        beta: args.beta.or(file.beta).unwrap_or(defaults.beta),
        gamma: args.gamma.or(file.gamma).unwrap_or(defaults.gamma),
        lo: file.lo.unwrap_or(defaults.lo),
        hi: file.hi.unwrap_or(defaults.hi),
        psf: Psf::parse(&psf_spec)?,
        levels: args.levels.or(file.levels),
        epsilon: args.eps.or(file.epsilon).unwrap_or(defaults.epsilon),
        max_iter: args.max_iter.or(file.max_iter).unwrap_or(defaults.max_iter),
        rtol: args.rtol.or(file.rtol).unwrap_or(defaults.rtol),
        seed: args.seed.or(file.seed).unwrap_or(defaults.seed),
        intensity_scale: file.intensity_scale.unwrap_or(defaults.intensity_scale),
    };
    if params.alpha <= 0.0 || params.beta <= 0.0 || params.gamma <= 0.0 {
        return Err(Error::InvalidArgument(
            "restore: weights must be positive".into(),
        ));
    }

    let y = io::read_pgm(&args.input)?;
    let truth = args.truth.as_ref().map(io::read_pgm).transpose()?;
    let outcome = restore(&y, &params)?;
    io::write_pgm(&args.out, &outcome.image)?;
    std::fs::write(
        sidecar_path(&args.out, "trace.csv"),
        trace_to_csv(&outcome.stats.trace),
    )?;

    let metrics = RestoreMetrics {
        iterations: outcome.stats.iterations,
        converged: outcome.stats.converged,
        elapsed_secs: outcome.stats.elapsed_secs,
        beta_bound: outcome.beta_bound,
        kkt_residual: outcome.solution.kkt_residual,
        degraded: truth.as_ref().map(|t| quality(t, &y)).transpose()?,
        restored: truth
            .as_ref()
            .map(|t| quality(t, &outcome.image))
            .transpose()?,
    };
    std::fs::write(
        sidecar_path(&args.out, "metrics.json"),
        serde_json::to_string_pretty(&metrics).expect("serializable") + "\n",
    )?;
    println!(
        "restored {} -> {} in {} iterations ({})",
        args.input.display(),
        args.out.display(),
        metrics.iterations,
        if metrics.converged {
            "converged"
        } else {
            "iteration budget reached"
        }
    );
    if let (Some(d), Some(r)) = (&metrics.degraded, &metrics.restored) {
        println!(
            "psnr {} -> {} dB, ssim {:.3} -> {:.3}",
            d.psnr_db
                .map(|v| format!("{v:.2}"))
                .unwrap_or_else(|| "inf".into()),
            r.psnr_db
                .map(|v| format!("{v:.2}"))
                .unwrap_or_else(|| "inf".into()),
            d.ssim,
            r.ssim
        );
    }
    Ok(metrics.converged || params.rtol == 0.0)
}

fn cmd_metrics(args: &MetricsArgs) -> parsplit::Result<()> {
    let reference = io::read_pgm(&args.reference)?;
    let est = io::read_pgm(&args.est)?;
    let p = psnr(&reference, &est)?;
    let s = ssim(&reference, &est)?;
    println!("metric  value");
    if p.is_infinite() {
        println!("psnr    inf");
    } else {
        println!("psnr    {p:.2} dB");
    }
    println!("ssim    {s:.3}");
    Ok(())
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Io(_)
        | Error::Parse(_)
        | Error::InvalidArgument(_)
        | Error::DimensionMismatch { .. } => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result: parsplit::Result<u8> = match &cli.cmd {
        Cmd::Degrade(args) => cmd_degrade(args).map(|()| 0),
        Cmd::Restore(args) => cmd_restore(args).map(|ok| if ok { 0 } else { 1 }),
        Cmd::Metrics(args) => cmd_metrics(args).map(|()| 0),
        Cmd::Selftest => selftest::run_all().map(|report| {
            print!("{}", report.render());
            if report.all_passed() {
                0
            } else {
                1
            }
        }),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
