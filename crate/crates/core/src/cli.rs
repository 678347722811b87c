//! Command-line front end.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::analysis::{
    self, epsilon_rate_from, extension_rate_delta_scan, hessian_bound, overflow_from, run_grid, run_trials,
    terminal_count_report, theorem_bound, type_deviation_mass, BoundInputs, GridConfig, GridReport, GridRow,
};
use crate::codec;
use crate::config::{parse_seed, RunConfig};
use crate::covering::verify_cover;
use crate::dictionary::{self, Builder};
use crate::error::{Error, Result};
use crate::rd::{rate_distortion, rd_sensitivity, DEFAULT_TOL};
use crate::rng;

#[derive(Debug, Parser)]
#[command(name = "vflossy", version, about = "Variable-to-fixed length lossy compression")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rate-distortion function, gradient and dispersion of a source.
    Rd {
        #[command(flatten)]
        run: RunArgs,
        /// Print JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Build a dictionary and write it to disk.
    Build {
        #[command(flatten)]
        run: RunArgs,
        /// Dictionary file (default: <output>/dictionary.vfd).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Use this threshold instead of searching for the largest that fits M.
        #[arg(long)]
        gamma: Option<f64>,
    },
    /// Audit a dictionary: covering completeness, per-length sizes and
    /// D-semifaithful parsing.
    Verify {
        #[arg(long)]
        dict: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        /// Types with at most this many members are checked exhaustively.
        #[arg(long, default_value_t = 1 << 16)]
        exhaustive_limit: u64,
        /// Sampled members per larger type.
        #[arg(long, default_value_t = 2000)]
        samples: u64,
        /// Monte-Carlo parses from the configured source.
        #[arg(long, default_value_t = 10_000)]
        parses: u64,
    },
    /// Parse a text file of source letters into an index stream.
    Encode {
        #[arg(long)]
        dict: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Turn an index stream back into reproduction letters.
    Decode {
        #[arg(long)]
        dict: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Estimate epsilon-coding rates and compare them with the bound.
    Analyze {
        #[command(flatten)]
        run: RunArgs,
        /// Worker threads (default: available parallelism).
        #[arg(long)]
        jobs: Option<usize>,
        /// Exit with status 3 if the fitted-slack bound check fails.
        #[arg(long)]
        check_bound: bool,
        /// Sweep the standard grid instead of the configured point.
        #[arg(long)]
        full_grid: bool,
    },
    /// Scaling diagnostics: one-letter rate change, type deviation mass and
    /// terminal types per length.
    Report {
        #[command(flatten)]
        run: RunArgs,
        /// Dictionary whose terminal types are counted.
        #[arg(long)]
        dict: Option<PathBuf>,
        /// Prefix lengths of the rate-change scan.
        #[arg(long, value_delimiter = ',', default_value = "16,32,64,128,256,512,1024")]
        n_grid: Vec<usize>,
        /// Random prefixes per length.
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
}

/// Settings shared by the commands; flags override the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Source pmf, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub source: Option<Vec<f64>>,
    /// "hamming" or a JSON matrix file.
    #[arg(long)]
    pub distortion: Option<String>,
    /// Distortion level.
    #[arg(long = "D", allow_hyphen_values = true)]
    pub level: Option<f64>,
    /// Dictionary budget.
    #[arg(long = "M")]
    pub budget: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    pub epsilons: Option<Vec<f64>>,
    #[arg(long)]
    pub upsilon: Option<f64>,
    #[arg(long, value_parser = parse_seed)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

impl RunArgs {
    /// File values, then `VFLOSSY_SEED`, then flags.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        c.apply_env()?;
        if let Some(v) = &self.source {
            c.source = v.clone();
        }
        if let Some(v) = &self.distortion {
            c.distortion = v.clone();
        }
        if let Some(v) = self.level {
            c.level = v;
        }
        if let Some(v) = self.budget {
            c.budget = v;
        }
        if let Some(v) = &self.epsilons {
            c.epsilons = v.clone();
        }
        if let Some(v) = self.upsilon {
            c.upsilon = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.trials {
            c.trials = v;
        }
        if let Some(v) = &self.output {
            c.output = v.clone();
        }
        c.validate()?;
        Ok(c)
    }
}

/// Parse arguments, run the command and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Rd { run, json } => cmd_rd(&run.resolve()?, json),
        Command::Build { run, out, gamma } => cmd_build(&run.resolve()?, out, gamma),
        Command::Verify {
            dict,
            run,
            exhaustive_limit,
            samples,
            parses,
        } => cmd_verify(&dict, &run.resolve()?, exhaustive_limit, samples, parses),
        Command::Encode { dict, input, output } => cmd_encode(&dict, &input, &output),
        Command::Decode { dict, input, output } => cmd_decode(&dict, &input, &output),
        Command::Analyze {
            run,
            jobs,
            check_bound,
            full_grid,
        } => {
            if let Some(j) = jobs {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(j.max(1))
                    .build_global()
                    .map_err(|e| Error::Config(format!("jobs: {e}")))?;
            }
            cmd_analyze(&run.resolve()?, check_bound, full_grid)
        }
        Command::Report {
            run,
            dict,
            n_grid,
            samples,
        } => cmd_report(&run.resolve()?, dict.as_deref(), &n_grid, samples),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn cmd_rd(c: &RunConfig, json: bool) -> Result<i32> {
    let source = c.pmf()?;
    let spec = c.spec()?;
    let r = rate_distortion(&source, &spec, DEFAULT_TOL)?;
    if !r.converged {
        return Err(Error::Numerical(format!(
            "solver did not converge after {} iterations",
            r.iterations
        )));
    }
    let sens = rd_sensitivity(&source, &spec, 1e-4);
    if json {
        #[derive(Serialize)]
        struct Out<'a> {
            result: &'a crate::rd::RDResult,
            sensitivity: Option<&'a crate::rd::RDSensitivity>,
            sensitivity_error: Option<String>,
        }
        let out = Out {
            result: &r,
            sensitivity: sens.as_ref().ok(),
            sensitivity_error: sens.as_ref().err().map(|e| e.to_string()),
        };
        println!("{}", serde_json::to_string_pretty(&out)?);
        return Ok(0);
    }
    println!("rate        {:.6} bits/symbol", r.rate);
    println!("slope       {:.6}", r.slope);
    println!("distortion  {:.6}", r.distortion);
    println!("output      {:?}", r.output_dist.probs());
    println!("iterations  {}", r.iterations);
    match sens {
        Ok(s) => {
            println!("gradient    {:?}", s.gradient);
            println!("fd_gradient {:?}", s.fd_gradient);
            println!("dispersion  {:.6}", s.dispersion);
            println!("hessian_F   {:.6}", s.hessian_fnorm);
        }
        Err(e) => log::warn!("sensitivity unavailable: {e}"),
    }
    Ok(0)
}

fn cmd_build(c: &RunConfig, out: Option<PathBuf>, gamma: Option<f64>) -> Result<i32> {
    let spec = c.spec()?;
    let builder = Builder::new(&spec, c.build_config())?;
    let gamma = match gamma {
        Some(g) => g,
        None => {
            let choice = builder.choose_gamma(c.budget)?;
            log::info!(
                "threshold search: {} probes, closed form {:.3}",
                choice.trace.len(),
                choice.closed_form
            );
            choice.gamma
        }
    };
    let d = builder.build(gamma, c.budget)?;
    let path = out.unwrap_or_else(|| c.output.join("dictionary.vfd"));
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    dictionary::save(&d, &path)?;
    println!("gamma     {gamma:.6}");
    println!("M_actual  {}", d.len());
    println!("max n     {}", d.max_len());
    println!("written   {}", path.display());
    let report = terminal_count_report(&d.terminal_counts(), spec.source_size());
    if report.violations > 0 {
        println!(
            "FLAG      {} lengths exceed n^(|X|-2) terminal types (worst ratio {:.2})",
            report.violations, report.worst_ratio
        );
    }
    Ok(0)
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    groups: usize,
    members_checked: u64,
    cover_misses: u64,
    sampled_groups: usize,
    level_violations: Vec<usize>,
    parses: u64,
    distortion_violations: u64,
}

fn cmd_verify(path: &Path, c: &RunConfig, exhaustive_limit: u64, samples: u64, parses: u64) -> Result<i32> {
    let d = dictionary::load(path)?;
    let spec = d.spec().clone();
    let mut rep = VerifyReport {
        groups: d.groups().len(),
        members_checked: 0,
        cover_misses: 0,
        sampled_groups: 0,
        level_violations: Vec::new(),
        parses,
        distortion_violations: 0,
    };
    for g in d.groups() {
        let a = verify_cover(&g.type_class, &g.codewords, &spec, exhaustive_limit, samples, d.seed())?;
        rep.members_checked += a.checked;
        rep.cover_misses += a.misses;
        rep.sampled_groups += (!a.exhaustive) as usize;
    }
    // N_n <= |A_n| 2^(gamma + upsilon log2 n)
    for (n, terminal) in d.terminal_counts() {
        let codewords: usize = d
            .groups()
            .iter()
            .filter(|g| g.type_class.n() == n)
            .map(|g| g.codewords.len())
            .sum();
        let bound = (terminal as f64).log2() + d.gamma() + d.upsilon() * (n as f64).log2();
        if (codewords as f64).log2() > bound + 1e-9 {
            rep.level_violations.push(n);
        }
    }
    if parses > 0 {
        let source = if c.source.len() == spec.source_size() {
            c.pmf()?
        } else {
            crate::rd::Pmf::uniform(spec.source_size())
        };
        let grid = d.grid();
        let key = rng::derive(c.seed, &[0x7665_7269]);
        let mut p = codec::Parser::new(&d);
        for t in 0..parses {
            let mut r = codec::SymbolReader::new(analysis::SourceStream::new(&source, key, t));
            let res = p.parse(&mut r)?;
            if !grid.within(res.total_weight, res.segment_length) {
                rep.distortion_violations += 1;
            }
        }
    }
    println!("{}", serde_json::to_string_pretty(&rep)?);
    let ok = rep.cover_misses == 0 && rep.level_violations.is_empty() && rep.distortion_violations == 0;
    if ok {
        println!("verify: ok");
        Ok(0)
    } else {
        Err(Error::Integrity("dictionary audit failed".into()))
    }
}

const DIGITS: &[u8] = b"0123456789abcdefghijklmnopqrstuvwxyz";

/// Source letters written as base-36 digits; whitespace is ignored.
pub fn parse_symbols(text: &[u8], alphabet: usize) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(text.len());
    for (i, &b) in text.iter().enumerate() {
        if b.is_ascii_whitespace() {
            continue;
        }
        let v = DIGITS
            .iter()
            .position(|&d| d == b.to_ascii_lowercase())
            .filter(|&v| v < alphabet)
            .ok_or_else(|| {
                Error::Config(format!(
                    "input byte {i} ({:?}) is not a letter of an alphabet of size {alphabet}",
                    b as char
                ))
            })?;
        out.push(v as u8);
    }
    Ok(out)
}

pub fn format_symbols(x: &[u8]) -> Vec<u8> {
    let mut out: Vec<u8> = x.iter().map(|&v| DIGITS[v as usize]).collect();
    if !out.is_empty() {
        out.push(b'\n');
    }
    out
}

fn cmd_encode(dict: &Path, input: &Path, output: &Path) -> Result<i32> {
    let d = dictionary::load(dict)?;
    let text = std::fs::read(input).map_err(|e| Error::io(input, e))?;
    let x = parse_symbols(&text, d.spec().source_size())?;
    let (enc, tail) = codec::encode_all(&x, &d)?;
    let mut file = std::fs::File::create(output).map_err(|e| Error::io(output, e))?;
    codec::write_stream(&mut file, &d, &enc.indices)?;
    println!("segments  {}", enc.indices.len());
    println!("bits      {}", enc.bit_len());
    if tail > 0 {
        log::warn!("the last {tail} symbols do not complete a segment and were not encoded");
        println!("unencoded {tail}");
    }
    Ok(0)
}

fn cmd_decode(dict: &Path, input: &Path, output: &Path) -> Result<i32> {
    let d = dictionary::load(dict)?;
    let mut file = std::fs::File::open(input).map_err(|e| Error::io(input, e))?;
    let indices = codec::read_stream(&mut file, &d)?;
    let y: Vec<u8> = codec::decode(&indices, &d)?.concat();
    std::fs::write(output, format_symbols(&y)).map_err(|e| Error::io(output, e))?;
    println!("segments  {}", indices.len());
    println!("symbols   {}", y.len());
    Ok(0)
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a RunConfig,
    grid: Option<&'a GridConfig>,
    log_base: &'static str,
    report: &'a GridReport,
}

/// Single operating point with an arbitrary source.
fn analyze_point(c: &RunConfig) -> Result<GridReport> {
    let source = c.pmf()?;
    let spec = c.spec()?;
    let builder = Builder::new(&spec, c.build_config())?;
    let choice = builder.choose_gamma(c.budget)?;
    let d = builder.build(choice.gamma, c.budget)?;
    let hb = hessian_bound(&source, builder.spec(), c.budget, GridConfig::default().hessian_points)?;
    let records = run_trials(&source, &d, c.trials, c.seed)?;
    let mut rows = Vec::new();
    for &eps in &c.epsilons {
        let er = epsilon_rate_from(&records, d.index_width(), eps, c.seed)?;
        let b = theorem_bound(&BoundInputs {
            source: source.clone(),
            spec: builder.spec().clone(),
            budget: c.budget,
            epsilon: eps,
            upsilon: c.upsilon,
            c_h: hb.c_h,
            slack: 0.0,
        })?;
        rows.push(GridRow {
            p: source.probs()[0],
            d: c.level,
            m: c.budget,
            epsilon: eps,
            r_empirical: er.rate,
            bound: b.value,
            rate: b.rate,
            sigma: b.sigma,
            c_h: hb.c_h,
            trials: er.trials,
            ci_lo: er.ci_lo,
            ci_hi: er.ci_hi,
            gamma: choice.gamma,
            m_actual: d.len(),
            overflow: overflow_from(&records, er.rate).strict.value,
        });
    }
    let sandwich = analysis::sandwich_check(&rows);
    let second_order = analysis::second_order_check(&rows, 0.1);
    Ok(GridReport {
        rows,
        dictionaries: Vec::new(),
        sandwich,
        second_order,
    })
}

fn cmd_analyze(c: &RunConfig, check_bound: bool, full_grid: bool) -> Result<i32> {
    let grid = if full_grid {
        Some(GridConfig {
            epsilons: c.epsilons.clone(),
            trials: c.trials,
            upsilon: c.upsilon,
            seed: c.seed,
            build: c.build_config(),
            ..GridConfig::default()
        })
    } else {
        c.grid_config()
    };
    let report = match &grid {
        Some(g) => run_grid(g)?,
        None => analyze_point(c)?,
    };
    std::fs::create_dir_all(&c.output).map_err(|e| Error::io(&c.output, e))?;
    let csv_path = c.output.join("results.csv");
    analysis::write_csv(&report.rows, &csv_path)?;
    write_json(
        &c.output.join("manifest.json"),
        &Manifest {
            tool: "vflossy",
            version: env!("CARGO_PKG_VERSION"),
            config: c,
            grid: grid.as_ref(),
            log_base: "all logarithms base 2 except the ln in the type-deviation radius",
            report: &report,
        },
    )?;
    println!("rows      {}", report.rows.len());
    println!("csv       {}", csv_path.display());
    println!(
        "sandwich  c = {:.4} ({}), stable {}",
        report.sandwich.c_fit,
        if report.sandwich.zero_slack { "no slack needed" } else { "slack needed" },
        report.sandwich.stable
    );
    for f in &report.second_order.fits {
        println!(
            "second-order p={} D={}: intercept {:.4} vs sigma Q^-1 {:.4} ({:.0}% off)",
            f.p,
            f.d,
            f.intercept,
            f.target,
            100.0 * f.relative_error
        );
    }
    if check_bound && !report.sandwich.pass {
        eprintln!("error: bound check failed");
        return Ok(3);
    }
    Ok(0)
}

#[derive(Debug, Serialize)]
struct Report {
    delta_scan: analysis::DeltaScan,
    deviation_mass: Vec<analysis::DeviationMass>,
    terminal_counts: Option<analysis::TerminalCountReport>,
}

fn cmd_report(c: &RunConfig, dict: Option<&Path>, n_grid: &[usize], samples: usize) -> Result<i32> {
    let source = c.pmf()?;
    let spec = c.spec()?;
    let k = source.len();
    let delta_scan = extension_rate_delta_scan(&source, &spec, n_grid, samples, c.seed)?;
    let a = (2.0 + 2.0 * k as f64).sqrt();
    let deviation_mass = [50usize, 100, 200]
        .iter()
        .map(|&n| type_deviation_mass(&source, n, a, c.seed))
        .collect::<Result<Vec<_>>>()?;
    let terminal_counts = match dict {
        Some(p) => {
            let d = dictionary::load(p)?;
            Some(terminal_count_report(&d.terminal_counts(), d.spec().source_size()))
        }
        None => None,
    };
    println!(
        "one-letter rate change: beta {:.3} (95% CI {:.3}..{:.3}), claimed {}",
        delta_scan.beta, delta_scan.beta_ci.0, delta_scan.beta_ci.1, delta_scan.claimed_beta
    );
    if delta_scan.flagged {
        println!("FLAG beta: claimed exponent outside the interval");
    }
    for m in &deviation_mass {
        println!(
            "deviation mass n={} a={:.3}: {:.3e} vs bound {:.3e}{}",
            m.n,
            m.a,
            m.mass,
            m.bound,
            if m.within_bound { "" } else { "  FLAG" }
        );
    }
    if let Some(t) = &terminal_counts {
        println!(
            "terminal types: {} of {} lengths exceed n^(|X|-2), worst ratio {:.2}{}",
            t.violations,
            t.levels.len(),
            t.worst_ratio,
            if t.violations > 0 { "  FLAG" } else { "" }
        );
    }
    let path = c.output.join("report.json");
    write_json(
        &path,
        &Report {
            delta_scan,
            deviation_mass,
            terminal_counts,
        },
    )?;
    println!("written   {}", path.display());
    Ok(0)
}
