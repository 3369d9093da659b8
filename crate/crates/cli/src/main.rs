use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lincorr::bounds::{self, BiasModel, LowerBoundForm};
use lincorr::gf2::{parse_generator, DEFAULT_ENUMERATION_LIMIT, MAX_ENUMERATION_LIMIT};
use lincorr::oracle;
use lincorr::polyeval::DeltaGrid;
use lincorr::randomcodes::{self, Ensemble, RandomCodeParams};
use lincorr::scanner::{self, format_float, CsvRow, Objective, ScanOptions};
use lincorr::weights::parse_weights;
use lincorr::{reed_muller_generator, Error, GeneratorMatrix, WeightDistribution};

const DEFAULT_GRID: &str = "0.001:0.5:64:log";
const DEFAULT_ORACLE_DELTA: f64 = 0.5;
const DEFAULT_SAMPLES: usize = 2000;
const DEFAULT_EPS: f64 = 0.5;
const ORACLE_TOLERANCE: f64 = 1e-10;

/// Security bounds for linear TRNG correctors from code weight enumerators.
#[derive(Parser)]
#[command(name = "lincorr", version)]
struct Cli {
    /// Worker threads for scans and sampling (default: all cores).
    #[arg(long, global = true, env = "LINCORR_WORKERS")]
    workers: Option<usize>,

    /// Largest rank whose row space is enumerated exhaustively.
    #[arg(long, global = true, env = "LINCORR_ENUM_LIMIT", default_value_t = DEFAULT_ENUMERATION_LIMIT)]
    enumeration_limit: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bound table over a grid of bias values.
    Bound(BoundArgs),
    /// Largest bias meeting a security target.
    Solve(SolveArgs),
    /// Exhaustive verification of every bound on a small generator.
    Oracle(OracleArgs),
    /// Rate/security table for a directory of weight files.
    Scan(ScanArgs),
    /// Closed forms and Monte-Carlo estimate for random codes.
    RandomCodes(RandomCodesArgs),
    /// Construct a code family.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Every default value, as CSV.
    Defaults(OutputArg),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct CodeInput {
    /// Weight distribution file (`n=.. k=..` header, `weight count` lines).
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Generator matrix file (one row of 0/1 per line).
    #[arg(long)]
    generator: Option<PathBuf>,
}

#[derive(Args)]
struct OutputArg {
    /// Output file (default: stdout).
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BoundArgs {
    #[command(flatten)]
    input: CodeInput,
    /// Bias grid `min:max:count:lin|log`.
    #[arg(long, conflicts_with = "delta", value_parser = parse_grid)]
    grid: Option<DeltaGrid>,
    /// Single bias value.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, value_enum, default_value_t = LowerForm::Conservative)]
    lower_bound: LowerForm,
    /// Accept weight files whose counts sum to less than 2^k.
    #[arg(long)]
    allow_partial: bool,
    #[command(flatten)]
    out: OutputArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum LowerForm {
    /// (W(δ²) − 1) / W(δ)
    Conservative,
    /// (W(δ²) − 1) / (W(δ) − 1)
    Sharp,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    input: CodeInput,
    /// Target security in bits.
    #[arg(long, default_value_t = scanner::DEFAULT_SECURITY_REF)]
    security: f64,
    #[command(flatten)]
    out: OutputArg,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    generator: PathBuf,
    /// Uniform bias of every input bit.
    #[arg(long, conflicts_with = "per_bit", default_value_t = DEFAULT_ORACLE_DELTA)]
    delta: f64,
    /// Signed per-bit biases, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    per_bit: Option<Vec<f64>>,
}

#[derive(Args)]
struct ScanArgs {
    corpus: PathBuf,
    /// Reference bias for the security column.
    #[arg(long, default_value_t = scanner::DEFAULT_DELTA_REF)]
    delta: f64,
    /// Reference security target for the max-bias column.
    #[arg(long, default_value_t = scanner::DEFAULT_SECURITY_REF)]
    security: f64,
    /// Directory receiving frontier.csv and skips.csv.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Also write pareto.csv, the non-dominated codes under this objective.
    #[arg(long, value_enum)]
    pareto: Option<ParetoObjective>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ParetoObjective {
    Security,
    Delta,
}

#[derive(Args)]
struct RandomCodesArgs {
    #[arg(short)]
    n: usize,
    #[arg(short)]
    k: usize,
    #[arg(long)]
    delta: f64,
    /// Monte-Carlo draws; 0 reports the closed forms only.
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Relative deviation for the Chebyshev tail.
    #[arg(long, default_value_t = DEFAULT_EPS)]
    eps: f64,
    #[arg(long, value_enum, default_value_t = Model::ParityCheck)]
    model: Model,
    #[command(flatten)]
    out: OutputArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    /// Kernel of a random (n−k)×n parity-check matrix.
    ParityCheck,
    /// Row space of a random k×n generator.
    Generator,
}

#[derive(Subcommand)]
enum GenCommand {
    /// Reed–Muller code RM(r, m).
    Rm {
        r: usize,
        m: usize,
        /// Also write the weight distribution (when the rank allows it).
        #[arg(long)]
        emit_weights: bool,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

enum Failure {
    Core(Error),
    ChecksFailed(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type CliResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(workers) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global() {
            eprintln!("error: cannot start {workers} workers: {e}");
            return ExitCode::from(2);
        }
    }
    let limit = cli.enumeration_limit.min(MAX_ENUMERATION_LIMIT);
    let outcome = match cli.command {
        Command::Bound(a) => cmd_bound(a, limit),
        Command::Solve(a) => cmd_solve(a, limit),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Scan(a) => cmd_scan(a),
        Command::RandomCodes(a) => cmd_random_codes(a),
        Command::Gen(GenCommand::Rm { r, m, emit_weights, out_dir }) => cmd_gen_rm(r, m, emit_weights, &out_dir, limit),
        Command::Defaults(a) => cmd_defaults(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::ChecksFailed(count)) => {
            eprintln!("error: {count} check(s) failed");
            ExitCode::from(4)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    if matches!(e, Error::InternalCheck(_)) {
        4
    } else if e.is_domain_error() {
        3
    } else {
        2
    }
}

fn parse_grid(text: &str) -> Result<DeltaGrid, String> {
    let parts: Vec<&str> = text.split(':').collect();
    let [min, max, count, spacing] = parts[..] else {
        return Err(format!("expected min:max:count:lin|log, got `{text}`"));
    };
    let num = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("`{s}`: {e}"));
    let count = count.trim().parse::<usize>().map_err(|e| format!("`{count}`: {e}"))?;
    let grid = match spacing.trim() {
        "lin" => DeltaGrid::linear(num(min)?, num(max)?, count),
        "log" => DeltaGrid::log(num(min)?, num(max)?, count),
        other => return Err(format!("spacing must be lin or log, got `{other}`")),
    };
    grid.map_err(|e| e.to_string())
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn load_distribution(input: &CodeInput, allow_partial: bool, limit: usize) -> Result<WeightDistribution, Error> {
    match (&input.weights, &input.generator) {
        (Some(path), _) => parse_weights(&read(path)?, allow_partial),
        (None, Some(path)) => {
            let g = parse_generator(&read(path)?)?;
            WeightDistribution::from_matrix(&g, limit)
        }
        (None, None) => unreachable!("clap requires one input"),
    }
}

fn with_output(out: &OutputArg, body: impl FnOnce(&mut dyn Write) -> Result<(), Error>) -> CliResult {
    match &out.output {
        Some(path) => {
            let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
            let mut w = io::BufWriter::new(file);
            body(&mut w)?;
            w.flush().map_err(|e| Error::io(path, e))?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            body(&mut w)?;
        }
    }
    Ok(())
}

fn cmd_bound(a: BoundArgs, limit: usize) -> CliResult {
    let dist = load_distribution(&a.input, a.allow_partial, limit)?;
    let grid = match (a.grid, a.delta) {
        (Some(g), _) => g,
        (None, Some(d)) => DeltaGrid::single(d)?,
        (None, None) => parse_grid(DEFAULT_GRID).expect("default grid is valid"),
    };
    let form = match a.lower_bound {
        LowerForm::Conservative => LowerBoundForm::Conservative,
        LowerForm::Sharp => LowerBoundForm::Sharp,
    };
    let rows = bounds::report(&dist, &grid, form)?;
    if dist.is_partial() {
        eprintln!("warning: partial weight distribution; every bound is an underestimate");
    }
    with_output(&a.out, |w| scanner::write_csv(&rows, w))
}

struct SolveRow {
    target: f64,
    max_delta: f64,
    achieved: f64,
}

impl CsvRow for SolveRow {
    fn header() -> &'static [&'static str] {
        &["security_target", "max_delta", "security_bits"]
    }

    fn fields(&self) -> Vec<String> {
        vec![format_float(self.target), format_float(self.max_delta), format_float(self.achieved)]
    }
}

fn cmd_solve(a: SolveArgs, limit: usize) -> CliResult {
    let dist = load_distribution(&a.input, false, limit)?;
    let max_delta = bounds::max_bias_for_security(&dist, a.security)?;
    let row = SolveRow {
        target: a.security,
        max_delta,
        achieved: bounds::security_at(&dist, max_delta)?,
    };
    with_output(&a.out, |w| scanner::write_csv(&[row], w))
}

struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

fn cmd_oracle(a: OracleArgs) -> CliResult {
    let g = parse_generator(&read(&a.generator)?)?;
    let bias = match a.per_bit {
        Some(v) => BiasModel::per_bit(v)?,
        None => BiasModel::uniform(a.delta)?,
    };
    let direct = oracle::exact_distribution_direct(&g, &bias)?;
    let fourier = oracle::exact_distribution_fourier(&g, &bias)?;
    let mut checks = Vec::new();

    let gap = direct
        .probs()
        .iter()
        .zip(fourier.probs())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    checks.push(check("direct_vs_fourier", gap <= ORACLE_TOLERANCE, format!("max |diff| = {gap:e}")));

    let norms = oracle::exact_norms(&direct)?;
    checks.push(check(
        "plancherel",
        true,
        format!("l2^2 = {:e}, fourier = {:e}", norms.l2 * norms.l2, norms.plancherel_l2_sq),
    ));

    if g.is_full_rank() {
        let dist = WeightDistribution::from_matrix(&g, MAX_ENUMERATION_LIMIT)?;
        let delta = bias.max_magnitude();
        let uniform = matches!(bias, BiasModel::Uniform(_));
        let linf = bounds::linf_norm(&dist, delta)?.value;
        let l2 = bounds::l2_distance(&dist, delta)?.value;
        let l1 = bounds::l1_bounds(&dist, delta, LowerBoundForm::Conservative)?;
        let agrees = |exact: f64, bound: f64| {
            if uniform {
                (exact - bound).abs() <= ORACLE_TOLERANCE
            } else {
                exact <= bound + ORACLE_TOLERANCE
            }
        };
        checks.push(check("linf", agrees(norms.linf, linf), format!("exact = {:e}, bound = {linf:e}", norms.linf)));
        checks.push(check("l2", agrees(norms.l2, l2), format!("exact = {:e}, bound = {l2:e}", norms.l2)));
        checks.push(check(
            "l1_upper",
            norms.l1 <= l1.upper.value + ORACLE_TOLERANCE,
            format!("exact = {:e}, upper = {:e}", norms.l1, l1.upper.value),
        ));
        if uniform {
            checks.push(check(
                "l1_lower",
                norms.l1 >= l1.lower.value - ORACLE_TOLERANCE,
                format!("exact = {:e}, lower = {:e}", norms.l1, l1.lower.value),
            ));
        }
    } else {
        let rd = oracle::check_rank_deficiency_claim(&g, &bias)?;
        checks.push(check(
            "rank_deficiency",
            rd.passed,
            format!("rank {} < k = {}, tv = {:e}", rd.rank, rd.k, rd.tv),
        ));
    }

    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    match checks.iter().filter(|c| !c.passed).count() {
        0 => Ok(()),
        n => Err(Failure::ChecksFailed(n)),
    }
}

fn cmd_scan(a: ScanArgs) -> CliResult {
    let options = ScanOptions {
        delta_ref: a.delta,
        security_ref: a.security,
    };
    let outcome = scanner::scan_corpus(&a.corpus, &options)?;
    fs::create_dir_all(&a.out_dir).map_err(|e| Error::io(&a.out_dir, e))?;
    scanner::write_csv_file(&outcome.points, &a.out_dir.join("frontier.csv"))?;
    scanner::write_csv_file(&outcome.skips, &a.out_dir.join("skips.csv"))?;
    if let Some(p) = a.pareto {
        let objective = match p {
            ParetoObjective::Security => Objective::SecurityBits,
            ParetoObjective::Delta => Objective::MaxDelta,
        };
        let front = scanner::pareto_frontier(&outcome.points, objective);
        scanner::write_csv_file(&front, &a.out_dir.join("pareto.csv"))?;
    }
    eprintln!("{} codes scanned, {} skipped", outcome.points.len(), outcome.skips.len());
    Ok(())
}

struct RandomCodesRow {
    params: RandomCodeParams,
    eps: f64,
    expected: f64,
    variance: f64,
    tail: randomcodes::ChebyshevTail,
    mc: Option<randomcodes::MonteCarloSummary>,
}

impl CsvRow for RandomCodesRow {
    fn header() -> &'static [&'static str] {
        &[
            "n",
            "k",
            "delta",
            "model",
            "samples",
            "seed",
            "expected_l2_sq",
            "variance_bound",
            "eps",
            "chebyshev_tail",
            "rate_threshold",
            "below_threshold",
            "decays",
            "mc_mean",
            "mc_stddev",
            "mc_stderr",
            "mc_z_score",
        ]
    }

    fn fields(&self) -> Vec<String> {
        let p = &self.params;
        let model = match p.ensemble {
            Ensemble::ParityCheck => "parity-check",
            Ensemble::Generator => "generator",
        };
        let mut f = vec![
            p.n.to_string(),
            p.k.to_string(),
            format_float(p.delta),
            model.to_string(),
            p.samples.to_string(),
            p.seed.to_string(),
            format_float(self.expected),
            format_float(self.variance),
            format_float(self.eps),
            format_float(self.tail.probability),
            format_float(self.tail.rate_threshold),
            self.tail.below_threshold().to_string(),
            self.tail.decays().to_string(),
        ];
        match &self.mc {
            Some(mc) => {
                // one sample, or Z constant across samples: no spread, no z-score
                let z = if mc.stderr > 0.0 { (mc.mean - self.expected) / mc.stderr } else { 0.0 };
                f.extend([mc.mean, mc.stddev, mc.stderr, z].map(format_float));
            }
            None => f.extend(std::iter::repeat_n(String::new(), 4)),
        }
        f
    }
}

fn cmd_random_codes(a: RandomCodesArgs) -> CliResult {
    let ensemble = match a.model {
        Model::ParityCheck => Ensemble::ParityCheck,
        Model::Generator => Ensemble::Generator,
    };
    let params = RandomCodeParams::new(a.n, a.k, a.delta)?
        .with_samples(a.samples)
        .with_seed(a.seed)
        .with_ensemble(ensemble);
    let mc = if a.samples > 0 { Some(randomcodes::monte_carlo_l2_sq(&params)?) } else { None };
    let row = RandomCodesRow {
        params,
        eps: a.eps,
        expected: randomcodes::expected_l2_sq(&params).value,
        variance: randomcodes::variance_bound_l2_sq(&params).value,
        tail: randomcodes::chebyshev_tail(&params, a.eps)?,
        mc,
    };
    with_output(&a.out, |w| scanner::write_csv(&[row], w))
}

fn write_file(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn cmd_gen_rm(r: usize, m: usize, emit_weights: bool, out_dir: &Path, limit: usize) -> CliResult {
    let g: GeneratorMatrix = reed_muller_generator(r, m)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let stem = format!("rm_{r}_{m}");
    let gm = out_dir.join(format!("{stem}.gm"));
    write_file(&gm, &g.to_text())?;
    println!("{}", gm.display());
    if emit_weights {
        match WeightDistribution::from_matrix(&g, limit) {
            Ok(dist) => {
                let wt = out_dir.join(format!("{stem}.wt"));
                write_file(&wt, &dist.to_text())?;
                println!("{}", wt.display());
            }
            Err(Error::RankTooLarge { rank, limit }) => {
                eprintln!("warning: rank {rank} exceeds the enumeration limit {limit}; weight file not written");
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(())
}

struct DefaultRow(&'static str, String, &'static str);

impl CsvRow for DefaultRow {
    fn header() -> &'static [&'static str] {
        &["name", "value", "description"]
    }

    fn fields(&self) -> Vec<String> {
        vec![self.0.to_string(), self.1.clone(), self.2.to_string()]
    }
}

fn cmd_defaults(a: OutputArg) -> CliResult {
    let rows = [
        DefaultRow("enumeration_limit", DEFAULT_ENUMERATION_LIMIT.to_string(), "largest rank enumerated exhaustively (env LINCORR_ENUM_LIMIT)"),
        DefaultRow("max_enumeration_limit", MAX_ENUMERATION_LIMIT.to_string(), "hard cap on the enumeration limit"),
        DefaultRow("grid", DEFAULT_GRID.to_string(), "bias grid of `bound` when neither --grid nor --delta is given"),
        DefaultRow("lower_bound", "conservative".into(), "l1 lower-bound denominator W(delta)"),
        DefaultRow("scan_delta", format_float(scanner::DEFAULT_DELTA_REF), "reference bias of `scan`"),
        DefaultRow("security", format_float(scanner::DEFAULT_SECURITY_REF), "security target of `scan` and `solve`"),
        DefaultRow("oracle_delta", format_float(DEFAULT_ORACLE_DELTA), "uniform bias of `oracle`"),
        DefaultRow("oracle_tolerance", format_float(ORACLE_TOLERANCE), "agreement required by `oracle` checks"),
        DefaultRow("oracle_max_bits", oracle::MAX_ORACLE_BITS.to_string(), "largest n and k accepted by `oracle`"),
        DefaultRow("samples", DEFAULT_SAMPLES.to_string(), "Monte-Carlo draws of `random-codes`"),
        DefaultRow("seed", "0".into(), "Monte-Carlo seed of `random-codes`"),
        DefaultRow("eps", format_float(DEFAULT_EPS), "Chebyshev deviation of `random-codes`"),
        DefaultRow("model", "parity-check".into(), "random-code ensemble"),
        DefaultRow("workers", "all cores".into(), "worker threads (env LINCORR_WORKERS)"),
    ];
    with_output(&a, |w| scanner::write_csv(&rows, w))
}
