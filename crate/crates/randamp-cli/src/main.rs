//! `randamp` — simulate Bell devices, analyze round logs, compute rate
//! tables, run the amplification protocol, and verify certificates.
//!
//! Exit codes: 0 success, 1 IO or data failure, 2 flag errors, 3 protocol
//! abort, 4 certificate mismatch.

mod commands;
mod rates;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use randamp::bell::Assumption;
use randamp::entropy::AccumulationMode;
use randamp::error::Error;
use randamp::protocol::{DeltaFPolicy, Flow};

#[derive(Parser)]
#[command(name = "randamp", version, about = "Randomness and privacy amplification toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the noisy-GHZ device and write a round log
    Simulate(SimulateArgs),
    /// Analyze a round log: Mermin value, signalling, certified entropy
    Analyze(AnalyzeArgs),
    /// Emit rate tables and curves as CSV
    Rates(rates::RatesArgs),
    /// Run the full protocol and write output bits plus a certificate
    Run(RunArgs),
    /// Re-verify a certificate against its artifacts
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum AssumptionArg {
    A,
    B,
    C,
}

impl From<AssumptionArg> for Assumption {
    fn from(a: AssumptionArg) -> Assumption {
        match a {
            AssumptionArg::A => Assumption::A,
            AssumptionArg::B => Assumption::B,
            AssumptionArg::C => Assumption::C,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Iid,
    Mbqa,
}

#[derive(Clone, Copy, ValueEnum)]
enum FlowArg {
    Amplify,
    Privatize,
}

impl From<FlowArg> for Flow {
    fn from(f: FlowArg) -> Flow {
        match f {
            FlowArg::Amplify => Flow::Amplify,
            FlowArg::Privatize => Flow::AmplifyAndPrivatize,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Honest,
    ConstantBias,
    Adversarial,
}

#[derive(Args)]
struct SimulateArgs {
    /// Number of interaction rounds
    #[arg(long)]
    rounds: u64,
    /// White-noise visibility of the GHZ state (Mermin value ~ 4v)
    #[arg(long, default_value_t = 1.0)]
    visibility: f64,
    /// Fraction of rounds replaced by the fixed signalling box
    #[arg(long, default_value_t = 0.0)]
    frac_fixed_signalling: f64,
    /// Fraction of rounds replaced by input-agnostic coin flips
    #[arg(long, default_value_t = 0.0)]
    frac_random_signalling: f64,
    /// Bias budget of the simulated imperfect RNG driving the inputs
    #[arg(long, default_value_t = 0.0)]
    eps_sv: f64,
    /// How the input source spends its bias budget
    #[arg(long, value_enum, default_value_t = StrategyArg::Honest)]
    input_strategy: StrategyArg,
    /// RNG seed; identical seeds reproduce identical logs
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output round log path
    #[arg(short, long)]
    output: PathBuf,
    /// Also write the simulator configuration as canonical JSON
    #[arg(long)]
    config_json: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Round log to analyze
    log: PathBuf,
    /// Signalling assumption for certification
    #[arg(long, value_enum, default_value_t = AssumptionArg::B)]
    assumption: AssumptionArg,
    /// Claimed bias bound of the input source
    #[arg(long, default_value_t = 0.0)]
    eps_sv: f64,
    /// Fixed confidence width; defaults to the Hoeffding policy
    #[arg(long)]
    delta_f: Option<f64>,
    /// Failure probability of the Hoeffding confidence width
    #[arg(long, default_value_t = 1e-7)]
    eps_est: f64,
    /// Entropy accumulation mode
    #[arg(long, value_enum, default_value_t = ModeArg::Iid)]
    mode: ModeArg,
    /// Memory-attack penalty coefficient; defaults to the calibrated value
    #[arg(long)]
    v_coeff: Option<f64>,
    /// Also write the full report as JSON
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Number of interaction rounds
    #[arg(long)]
    rounds: u64,
    /// Replay a recorded round log instead of simulating
    #[arg(long)]
    log: Option<PathBuf>,
    /// Read imperfect-RNG bits from a raw bit file instead of simulating
    #[arg(long)]
    sv_file: Option<PathBuf>,
    /// Simulator visibility (ignored with --log)
    #[arg(long, default_value_t = 1.0)]
    visibility: f64,
    #[arg(long, default_value_t = 0.0)]
    frac_fixed_signalling: f64,
    #[arg(long, default_value_t = 0.0)]
    frac_random_signalling: f64,
    /// Claimed (and, for the simulated source, generated) input bias bound
    #[arg(long, default_value_t = 0.0)]
    eps_sv: f64,
    #[arg(long, value_enum, default_value_t = StrategyArg::Honest)]
    input_strategy: StrategyArg,
    /// Target security parameter of the output
    #[arg(long, default_value_t = 1e-7)]
    eps_sec: f64,
    /// Fixed confidence width; defaults to the Hoeffding policy
    #[arg(long)]
    delta_f: Option<f64>,
    #[arg(long, default_value_t = 1e-7)]
    eps_est: f64,
    /// Abort level for the observed Mermin value; defaults to 2 + Delta_f
    #[arg(long)]
    m_threshold: Option<f64>,
    #[arg(long, value_enum, default_value_t = AssumptionArg::B)]
    assumption: AssumptionArg,
    #[arg(long, value_enum, default_value_t = ModeArg::Iid)]
    mode: ModeArg,
    /// Memory-attack penalty coefficient; defaults to the calibrated value
    #[arg(long)]
    v_coeff: Option<f64>,
    /// Two-source construction; only the cyclic-shift extractor is runnable
    #[arg(long, default_value = "dodis")]
    extractor: String,
    #[arg(long, value_enum, default_value_t = FlowArg::Amplify)]
    flow: FlowArg,
    /// Enable the seeded extension with this output multiple
    #[arg(long)]
    extend_alpha: Option<u64>,
    /// RNG seed for the simulated device and source
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run nonce echoed into the certificate
    #[arg(long, default_value_t = 0)]
    nonce: u64,
    /// Output stem: writes STEM.out.bits, STEM.cert.json, STEM.rounds.bin, ...
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// Certificate to re-verify
    certificate: PathBuf,
}

/// A failure with a process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Failure {
        Failure { code: 2, message: message.into() }
    }

    fn io(message: impl Into<String>) -> Failure {
        Failure { code: 1, message: message.into() }
    }

    fn abort(message: impl Into<String>) -> Failure {
        Failure { code: 3, message: message.into() }
    }

    fn mismatch(message: impl Into<String>) -> Failure {
        Failure { code: 4, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        match e {
            Error::InvalidParameter { .. } | Error::NonceReused { .. } => Failure::usage(e.to_string()),
            other => Failure::io(other.to_string()),
        }
    }
}

fn resolve_delta_f(fixed: Option<f64>, eps_est: f64) -> DeltaFPolicy {
    match fixed {
        Some(value) => DeltaFPolicy::Fixed { value },
        None => DeltaFPolicy::Hoeffding { eps_est },
    }
}

fn resolve_mode(mode: ModeArg, v_coeff: Option<f64>) -> AccumulationMode {
    match mode {
        ModeArg::Iid => AccumulationMode::Iid,
        ModeArg::Mbqa => AccumulationMode::Mbqa {
            v: v_coeff.unwrap_or_else(randamp::entropy::default_calibrated_v),
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => commands::simulate(args),
        Command::Analyze(args) => commands::analyze(args),
        Command::Rates(args) => rates::rates(args),
        Command::Run(args) => commands::run(args),
        Command::Verify(args) => commands::verify(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
