//! One runner per subcommand. Each builds its instance from the resolved
//! config, solves, and writes the artifacts into the output directory.

use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use bregdc::bid::{bid_solve, AcceptRule, BidInstance, BidOptions, BidProblem, KernelMode};
use bregdc::io::{self, Header, TraceFile, TrialRow};
use bregdc::metrics::{snr, ssim, SSIM_C1, SSIM_C2, SSIM_SIGMA, SSIM_WINDOW};
use bregdc::rpca::{
    adca_rpca_solve, dca_admm_solve, default_caps, observed_fit_error, rpca_defaults, rpca_metrics,
    synth_gen, ubama_rpca_solve, count_nonzeros, numerical_rank, RpcaProblem, RpcaSpec, RpcaStart,
};
use bregdc::tv::{phantom, tv_solve, TvInstance, TvMethod};
use bregdc::verify::all_suites;
use bregdc::{BlurKernel, DMatrix, ImageGrid, SamplingMask, SeededRng, SolveResult, Status, Trace};

use crate::config::{
    header_of, AcceptName, BidConfig, BidMethodName, BlurName, ProxCheckConfig, RpcaConfig,
    RpcaMethodName, StartName, TvConfig, TvMethodName,
};

/// Why a run stopped short. Setup failures are the caller's fault (bad
/// config or input, exit 2); the rest happen while solving or writing
/// (exit 1).
#[derive(Debug)]
pub enum Failure {
    Setup(String),
    Run(String),
}

fn setup<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Setup(e.to_string())
}

fn run_err<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Run(e.to_string())
}

fn status_name(s: Status) -> &'static str {
    match s {
        Status::Converged => "converged",
        Status::MaxIterations => "max-iterations",
    }
}

fn kv(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

fn ssim_header() -> Header {
    vec![
        kv("ssim_window", SSIM_WINDOW),
        kv("ssim_sigma", SSIM_SIGMA),
        kv("ssim_c1", SSIM_C1),
        kv("ssim_c2", SSIM_C2),
    ]
}

fn timestamp_header(timing: bool) -> Header {
    if !timing {
        return vec![];
    }
    let ms = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis());
    vec![kv("finished_unix_ms", ms)]
}

/// Wall times make traces run-dependent, so they are zeroed unless asked for.
fn prepare_trace(mut trace: Trace, timing: bool) -> Trace {
    if !timing {
        trace.records.iter_mut().for_each(|r| r.time_ms = 0.0);
    }
    trace
}

fn make_dir(out: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(out).map_err(|e| Failure::Run(format!("{}: {e}", out.display())))
}

fn build_kernel(blur: BlurName, size: usize, sigma: f64) -> Result<BlurKernel, Failure> {
    match blur {
        BlurName::None => BlurKernel::delta(1, 1),
        BlurName::Gaussian => BlurKernel::gaussian(size, sigma),
        BlurName::Disk => BlurKernel::disk(size / 2),
        BlurName::Uniform => BlurKernel::uniform(size, size),
    }
    .map_err(setup)
}

fn truth_image(input: Option<&Path>, size: usize) -> Result<ImageGrid, Failure> {
    match input {
        Some(p) => io::read_image(p).map_err(setup),
        None => Ok(phantom(size, size)),
    }
}

pub fn run_tv(cfg: &TvConfig, out: &Path) -> Result<(), Failure> {
    let truth = truth_image(cfg.input.as_deref(), cfg.size)?;
    let kernel = build_kernel(cfg.blur, cfg.blur_size, cfg.blur_sigma)?;
    let inst = TvInstance::synthetic(truth, kernel, cfg.delta, cfg.sample_rate, cfg.seed)
        .map_err(setup)?;
    let mut spec = inst.spec.clone();
    let w = &mut spec.weights;
    w.tau = cfg.tau.unwrap_or(w.tau);
    w.beta = cfg.beta.unwrap_or(w.beta);
    w.alpha = cfg.alpha.unwrap_or(w.alpha);
    spec.nu = cfg.nu.unwrap_or(0.1 * spec.weights.beta);
    spec.mu = cfg.mu;
    spec.validate().map_err(setup)?;

    let mut resolved = cfg.clone();
    resolved.tau = Some(spec.weights.tau);
    resolved.beta = Some(spec.weights.beta);
    resolved.alpha = Some(spec.weights.alpha);
    resolved.nu = Some(spec.nu);

    let method = match cfg.method {
        TvMethodName::Ubama => TvMethod::Ubama,
        TvMethodName::Palm => TvMethod::Palm { pcg_tol: cfg.pcg_tol },
    };
    let res = tv_solve(&spec, method, cfg.eps, cfg.maxit, Some(&inst.truth)).map_err(run_err)?;

    let snr_observed = snr(&inst.truth, &spec.b).map_err(run_err)?;
    let snr_restored = snr(&inst.truth, &res.x).map_err(run_err)?;
    let ssim_restored = ssim(&inst.truth, &res.x).map_err(run_err)?;

    let mut header = vec![kv("application", "tv"), kv("method_label", method.label())];
    header.extend(header_of(&resolved).map_err(setup)?);
    header.extend(ssim_header());
    header.extend([
        kv("status", status_name(res.status)),
        kv("iterations", res.iterations),
        kv("snr_observed", snr_observed),
        kv("snr_restored", snr_restored),
        kv("ssim_restored", ssim_restored),
    ]);
    header.extend(timestamp_header(cfg.timing));

    make_dir(out)?;
    let trace = prepare_trace(res.trace, cfg.timing);
    io::write_trace(out.join("trace.csv"), &TraceFile::new(header, trace)).map_err(run_err)?;
    io::write_image(out.join("restored.png"), &res.x).map_err(run_err)?;
    io::write_image(out.join("observed.png"), &spec.b).map_err(run_err)?;
    println!(
        "tv {}: {} after {} iterations, SNR {:.2} dB -> {:.2} dB, SSIM {:.4}",
        method.label(),
        status_name(res.status),
        res.iterations,
        snr_observed,
        snr_restored,
        ssim_restored
    );
    Ok(())
}

type MatrixResult = SolveResult<DMatrix<f64>, DMatrix<f64>>;

fn solve_rpca(spec: &RpcaSpec, cfg: &RpcaConfig) -> Result<MatrixResult, Failure> {
    let start = match cfg.start {
        StartName::Spectral => RpcaStart::Spectral,
        StartName::Zero => RpcaStart::Zero,
    };
    let problem = || RpcaProblem::new(spec.clone()).map_err(setup);
    match cfg.method {
        RpcaMethodName::Ubama => ubama_rpca_solve(spec, start, cfg.eps, cfg.maxit).map_err(run_err),
        RpcaMethodName::Adca => adca_rpca_solve(&problem()?, start, cfg.eps, cfg.maxit, cfg.inner_tol)
            .map(|r| r.solve)
            .map_err(run_err),
        RpcaMethodName::DcaAdmm => dca_admm_solve(&problem()?, start, cfg.eps, cfg.maxit, cfg.inner_tol)
            .map(|r| r.solve)
            .map_err(run_err),
    }
}

/// Applies the configured weight and cap overrides and records the
/// resolved values.
fn finish_spec(mut spec: RpcaSpec, cfg: &RpcaConfig) -> Result<(RpcaSpec, RpcaConfig), Failure> {
    spec.tau = cfg.tau.unwrap_or(spec.tau);
    spec.lambda = cfg.lambda.unwrap_or(spec.lambda);
    spec.caps.kappa1 = cfg.kappa1.unwrap_or(spec.caps.kappa1);
    spec.caps.kappa2 = cfg.kappa2.unwrap_or(spec.caps.kappa2);
    spec.mu = cfg.mu;
    spec.nu = cfg.nu;
    spec.validate().map_err(setup)?;
    let mut resolved = cfg.clone();
    resolved.tau = Some(spec.tau);
    resolved.lambda = Some(spec.lambda);
    resolved.kappa1 = Some(spec.caps.kappa1);
    resolved.kappa2 = Some(spec.caps.kappa2);
    Ok((spec, resolved))
}

fn method_label(m: RpcaMethodName) -> &'static str {
    match m {
        RpcaMethodName::Ubama => "ubama",
        RpcaMethodName::Adca => "adca",
        RpcaMethodName::DcaAdmm => "dca-admm",
    }
}

pub fn run_rpca(cfg: &RpcaConfig, out: &Path) -> Result<(), Failure> {
    if let Some(input) = &cfg.input {
        return run_rpca_matrix(cfg, input, out);
    }
    make_dir(out)?;
    let mut rows = Vec::with_capacity(cfg.trials);
    for t in 0..cfg.trials {
        let seed = cfg.seed + t as u64;
        let inst = synth_gen(cfg.n, cfg.rank, cfg.sparse_frac, cfg.sample_rate, cfg.delta, seed)
            .map_err(setup)?;
        let (spec, mut resolved) = finish_spec(inst.default_spec().map_err(setup)?, cfg)?;
        resolved.seed = seed;
        resolved.trials = 1;
        let clock = Instant::now();
        let res = solve_rpca(&spec, cfg)?;
        let elapsed = clock.elapsed().as_secs_f64();
        let problem = RpcaProblem::new(spec).map_err(setup)?;
        let m = rpca_metrics(&problem, &res.x, &res.y, &inst).map_err(run_err)?;

        let mut header = vec![kv("application", "rpca"), kv("trial", t)];
        header.extend(header_of(&resolved).map_err(setup)?);
        header.extend([
            kv("status", status_name(res.status)),
            kv("iterations", res.iterations),
            kv("rel_x", m.rel_x),
            kv("rel_y", m.rel_y),
        ]);
        header.extend(timestamp_header(cfg.timing));
        let trace = prepare_trace(res.trace, cfg.timing);
        io::write_trace(out.join(format!("trace_trial{t}.csv")), &TraceFile::new(header, trace))
            .map_err(run_err)?;
        rows.push(TrialRow {
            trial: t,
            seed,
            iterations: res.iterations,
            rel_x: m.rel_x,
            rel_y: m.rel_y,
            rank: m.rank,
            nnz: m.nnz,
            obj: m.obj,
            time_s: if cfg.timing { elapsed } else { 0.0 },
        });
    }
    let mut header = vec![kv("application", "rpca")];
    header.extend(header_of(cfg).map_err(setup)?);
    header.extend(timestamp_header(cfg.timing));
    io::write_summary(out.join("summary.csv"), &header, &rows).map_err(run_err)?;
    let avg = io::TrialAverage::of(&rows).map_err(run_err)?;
    println!(
        "rpca {} ({}, {}) over {} trials: relX {:.4e}, relY {:.4e}, {:.1} iterations",
        method_label(cfg.method),
        cfg.n,
        cfg.rank,
        cfg.trials,
        avg.rel_x,
        avg.rel_y,
        avg.iterations
    );
    Ok(())
}

fn run_rpca_matrix(cfg: &RpcaConfig, input: &Path, out: &Path) -> Result<(), Failure> {
    let b = io::read_matrix(input).map_err(setup)?;
    let (m, n) = b.shape();
    let mut rng = SeededRng::new(cfg.seed);
    let mask = if cfg.sample_rate == 1.0 {
        SamplingMask::full(m, n)
    } else {
        SamplingMask::bernoulli(m, n, cfg.sample_rate, &mut rng).map_err(setup)?
    };
    let (tau, lambda) = rpca_defaults(m, n, cfg.sample_rate, cfg.delta, false).map_err(setup)?;
    let spec = RpcaSpec {
        caps: default_caps(&b, &mask).map_err(setup)?,
        b,
        mask,
        tau,
        lambda,
        mu: cfg.mu,
        nu: cfg.nu,
    };
    let (spec, resolved) = finish_spec(spec, cfg)?;
    let res = solve_rpca(&spec, cfg)?;
    let fit = observed_fit_error(&res.x, &res.y, &spec.b, &spec.mask).map_err(run_err)?;
    let rank = numerical_rank(&res.x).map_err(run_err)?;

    let mut header = vec![kv("application", "rpca")];
    header.extend(header_of(&resolved).map_err(setup)?);
    header.extend([
        kv("status", status_name(res.status)),
        kv("iterations", res.iterations),
        kv("observed_fit", fit),
        kv("rank", rank),
        kv("nnz", count_nonzeros(&res.y)),
    ]);
    header.extend(timestamp_header(cfg.timing));
    make_dir(out)?;
    let trace = prepare_trace(res.trace, cfg.timing);
    io::write_trace(out.join("trace.csv"), &TraceFile::new(header, trace)).map_err(run_err)?;
    io::write_matrix(out.join("low_rank.csv"), &res.x).map_err(run_err)?;
    io::write_matrix(out.join("sparse.csv"), &res.y).map_err(run_err)?;
    println!(
        "rpca {} on {}x{}: {} after {} iterations, observed fit {:.4e}, rank {}",
        method_label(cfg.method),
        m,
        n,
        status_name(res.status),
        res.iterations,
        fit,
        rank
    );
    Ok(())
}

pub fn run_bid(cfg: &BidConfig, out: &Path) -> Result<(), Failure> {
    let truth = truth_image(cfg.input.as_deref(), cfg.size)?;
    let kernel = build_kernel(cfg.kernel, cfg.kernel_size, cfg.kernel_sigma)?;
    let inst = BidInstance::synthetic(truth, kernel, cfg.delta, cfg.seed).map_err(setup)?;
    let mode = match cfg.method {
        BidMethodName::Euclidean => KernelMode::Euclidean,
        BidMethodName::Entropy => KernelMode::Entropy,
    };
    let mut spec = inst.spec(mode);
    spec.lambda = cfg.lambda;
    spec.tau = cfg.tau;
    spec.c0 = cfg.c0;
    spec.d0 = cfg.d0;
    spec.backtracking.rule = match cfg.accept {
        AcceptName::Majorization => AcceptRule::Majorization,
        AcceptName::NoIncrease => AcceptRule::NoIncrease,
    };
    let problem = BidProblem::new(spec).map_err(setup)?;
    let opts = BidOptions {
        eps: cfg.eps,
        maxit: cfg.maxit,
        truth: Some(&inst.truth),
        fixed_kernel: cfg.nonblind.then(|| inst.kernel.clone()),
        observer: None,
    };
    let run = bid_solve(&problem, &opts).map_err(run_err)?;
    let res = run.solve;

    let blurred = inst.b.map(|v| v.clamp(0.0, 1.0));
    let snr_blurred = snr(&inst.truth, &blurred).map_err(run_err)?;
    let snr_restored = snr(&inst.truth, &res.x).map_err(run_err)?;
    let ssim_restored = ssim(&inst.truth, &res.x).map_err(run_err)?;
    let kernel_l1: f64 = res
        .y
        .weights()
        .iter()
        .zip(inst.kernel.weights())
        .map(|(a, b)| (a - b).abs())
        .sum();

    let mut header = vec![kv("application", "bid")];
    header.extend(header_of(cfg).map_err(setup)?);
    header.extend(ssim_header());
    header.extend([
        kv("status", status_name(res.status)),
        kv("iterations", res.iterations),
        kv("snr_blurred", snr_blurred),
        kv("snr_restored", snr_restored),
        kv("ssim_restored", ssim_restored),
        kv("kernel_l1_error", kernel_l1),
    ]);
    header.extend(timestamp_header(cfg.timing));

    make_dir(out)?;
    let trace = prepare_trace(res.trace, cfg.timing);
    io::write_trace(out.join("trace.csv"), &TraceFile::new(header, trace)).map_err(run_err)?;
    io::write_image(out.join("restored.png"), &res.x).map_err(run_err)?;
    io::write_image(out.join("blurred.png"), &blurred).map_err(run_err)?;
    let k = DMatrix::from_row_slice(res.y.height(), res.y.width(), res.y.weights());
    io::write_matrix(out.join("kernel.csv"), &k).map_err(run_err)?;
    println!(
        "bid {}{}: {} after {} iterations, SNR {:.2} dB -> {:.2} dB, kernel l1 error {:.3e}",
        mode.label(),
        if cfg.nonblind { " (known kernel)" } else { "" },
        status_name(res.status),
        res.iterations,
        snr_blurred,
        snr_restored,
        kernel_l1
    );
    Ok(())
}

/// Prints one line per suite; returns the number of failed cases.
pub fn run_prox_check(cfg: &ProxCheckConfig) -> Result<usize, Failure> {
    let reports = all_suites(cfg.seed).map_err(run_err)?;
    let mut cases = 0;
    let mut failures = 0;
    for r in &reports {
        println!("{} {r}", if r.passed() { "PASS" } else { "FAIL" });
        cases += r.cases;
        failures += r.failures;
    }
    println!(
        "prox-check: {} suites, {cases} cases, {failures} failures",
        reports.len()
    );
    Ok(failures)
}
