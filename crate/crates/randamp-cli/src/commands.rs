//! The simulate, analyze, run and verify subcommands.

use std::env;
use std::path::PathBuf;

use randamp::bell::{correlator, mermin_value, signalling_fraction, BehaviorTable, CertifyOutcome};
use randamp::bitstore::{BitString, RoundLog};
use randamp::certificate::{canonical_json, format_sig12};
use randamp::error::Error;
use randamp::oracles::{DeviceOracle, FileSvOracle, ReplayDevice, SvOracle};
use randamp::protocol::{
    run_protocol, verify_certificate, write_run, Outcome, ProtocolConfig, ExtensionConfig,
};
use randamp::sim::{run_rounds, SimConfig, SimDevice, SvSimConfig, SvStream, SvStrategy};

use crate::{AnalyzeArgs, Failure, RunArgs, SimulateArgs, StrategyArg, VerifyArgs};

fn sv_strategy(arg: StrategyArg) -> SvStrategy {
    match arg {
        StrategyArg::Honest => SvStrategy::HonestUniform,
        StrategyArg::ConstantBias => SvStrategy::ConstantBias,
        StrategyArg::Adversarial => SvStrategy::AdversarialPattern { target: (0, 0, 0) },
    }
}

/// The Artin-prime cache location: `RANDAMP_ARTIN_CACHE` overrides the
/// default in the system temp directory.
fn artin_cache_path() -> PathBuf {
    match env::var_os("RANDAMP_ARTIN_CACHE") {
        Some(path) => PathBuf::from(path),
        None => env::temp_dir().join("randamp-artin-cache.txt"),
    }
}

pub fn simulate(args: SimulateArgs) -> Result<(), Failure> {
    if args.rounds == 0 {
        return Err(Failure::usage("--rounds must be at least 1"));
    }
    let config = SimConfig {
        visibility: args.visibility,
        frac_fixed_signalling: args.frac_fixed_signalling,
        frac_random_signalling: args.frac_random_signalling,
        rng_seed: args.seed,
        input_source: SvSimConfig { eps_sv: args.eps_sv, strategy: sv_strategy(args.input_strategy) },
    };
    let log = run_rounds(&config, args.rounds)?;
    log.write_to(&args.output)?;
    if let Some(path) = &args.config_json {
        std::fs::write(path, canonical_json(&config)?).map_err(Error::from)?;
    }
    let table = BehaviorTable::from_log(&log)?;
    println!(
        "rounds={} M_obs={} written={}",
        args.rounds,
        format_sig12(mermin_value(&table)),
        args.output.display()
    );
    Ok(())
}

pub fn analyze(args: AnalyzeArgs) -> Result<(), Failure> {
    let log = RoundLog::read_from(&args.log)?;
    let n = log.len() as u64;
    let table = BehaviorTable::from_log(&log)?;
    let m_obs = mermin_value(&table);
    let signalling = signalling_fraction(&table);
    let delta_f = crate::resolve_delta_f(args.delta_f, args.eps_est)
        .resolve(n)
        .map_err(Failure::from)?;
    let mode = crate::resolve_mode(args.mode, args.v_coeff);
    let certified = randamp::bell::certify_entropy(
        m_obs,
        n,
        signalling.n_s,
        args.assumption.into(),
        args.eps_sv,
        delta_f,
        &mode,
    )?;

    println!("rounds           {n}");
    println!("M_obs            {}", format_sig12(m_obs));
    println!("setting          correlator");
    for s in 0..8u8 {
        let (x, y, z) = (s >> 2 & 1, s >> 1 & 1, s & 1);
        println!("  ({x},{y},{z})        {}", format_sig12(correlator(&table, x, y, z)));
    }
    println!("signalling pairs (s, debiased, ci):");
    for p in &signalling.pairwise {
        println!(
            "  {:?}->{:?}      {}  {}  {}",
            p.from,
            p.to,
            format_sig12(p.s),
            format_sig12(p.s_debiased),
            format_sig12(p.ci_width)
        );
    }
    println!("n_s              {}", format_sig12(signalling.n_s));
    println!("n_s (debiased)   {}", format_sig12(signalling.n_s_debiased));
    println!("delta_f          {}", format_sig12(delta_f));
    match &certified {
        CertifyOutcome::Certified(cert) => {
            println!("M_hat_ns         {}", format_sig12(cert.m_hat_ns));
            println!("usable_rounds    {}", cert.usable_rounds);
            println!("M_U              {}", format_sig12(cert.m_u));
            println!("P_g              {}", format_sig12(cert.p_g));
            println!("log2_pQ          {}", format_sig12(cert.log2_pq));
        }
        CertifyOutcome::NotCertifiable { reason } => {
            println!("certification    refused: {reason}");
        }
    }

    if let Some(json_path) = args.json {
        let report = serde_json::json!({
            "rounds": n,
            "m_obs": m_obs,
            "correlators": (0..8u8)
                .map(|s| correlator(&table, s >> 2 & 1, s >> 1 & 1, s & 1))
                .collect::<Vec<f64>>(),
            "signalling": signalling,
            "delta_f": delta_f,
            "eps_sv": args.eps_sv,
            "certified": certified,
            "behavior": table,
        });
        std::fs::write(&json_path, canonical_json(&report)?).map_err(Error::from)?;
        println!("report           {}", json_path.display());
    }
    Ok(())
}

pub fn run(args: RunArgs) -> Result<(), Failure> {
    if args.extractor != "dodis" {
        return Err(Failure::usage(format!(
            "--extractor {} is analysis-only; the runnable construction is dodis",
            args.extractor
        )));
    }
    if args.rounds == 0 {
        return Err(Failure::usage("--rounds must be at least 1"));
    }
    let config = ProtocolConfig {
        n_rounds: args.rounds,
        eps_sv: args.eps_sv,
        eps_sec: args.eps_sec,
        delta_f: crate::resolve_delta_f(args.delta_f, args.eps_est),
        m_threshold: args.m_threshold,
        assumption: args.assumption.into(),
        mode: crate::resolve_mode(args.mode, args.v_coeff),
        flow: args.flow.into(),
        extension: args.extend_alpha.map(|alpha| ExtensionConfig { alpha }),
        nonce: args.nonce,
        artin_cache: Some(artin_cache_path()),
    };
    config.validate()?;

    let sim = SimConfig {
        visibility: args.visibility,
        frac_fixed_signalling: args.frac_fixed_signalling,
        frac_random_signalling: args.frac_random_signalling,
        rng_seed: args.seed,
        input_source: SvSimConfig { eps_sv: args.eps_sv, strategy: sv_strategy(args.input_strategy) },
    };

    let mut sim_device;
    let mut replay_device;
    let device: &mut dyn DeviceOracle = match &args.log {
        Some(path) => {
            replay_device = ReplayDevice::new(RoundLog::read_from(path)?);
            &mut replay_device
        }
        None => {
            sim_device = SimDevice::new(sim)?;
            &mut sim_device
        }
    };
    let mut sim_sv;
    let mut file_sv;
    let sv: &mut dyn SvOracle = match &args.sv_file {
        Some(path) => {
            file_sv = FileSvOracle::new(BitString::read_from(path)?);
            &mut file_sv
        }
        None => {
            sim_sv = SvStream::from_seed(sim.input_source, args.seed);
            &mut sim_sv
        }
    };

    let outcome = run_protocol(&config, &mut BoxedDevice(device), &mut BoxedSv(sv))?;
    let mut run = match outcome {
        Outcome::Completed(run) => *run,
        Outcome::Aborted(abort) => {
            return Err(Failure::abort(abort.reason.to_string()));
        }
    };

    let dir = args.output.parent().map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."));
    let stem = args
        .output
        .file_name()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Failure::usage("--output needs a file-name stem"))?
        .to_string();
    if !dir.as_os_str().is_empty() {
        std::fs::create_dir_all(&dir).map_err(Error::from)?;
    }
    let timestamp = env::var("RANDAMP_TIMESTAMP").ok();
    let paths = write_run(&dir, &stem, &mut run, timestamp)?;

    println!(
        "M_obs={} n_s={} m2={} eta={}",
        format_sig12(run.certificate.analysis.m_obs),
        format_sig12(run.certificate.analysis.signalling.n_s),
        run.certificate.extraction.dodis.m2,
        format_sig12(
            run.certificate.extraction.dodis.m2 as f64 / run.certificate.config.n_rounds as f64
        ),
    );
    if let Some(ht) = &run.certificate.extraction.ht {
        println!("extended={} (alpha={})", ht.m_out, ht.alpha);
    }
    println!("output={}", paths.output.display());
    println!("certificate={}", paths.certificate.display());
    Ok(())
}

// trait-object adapters: run_protocol is generic, the CLI picks sources at runtime
struct BoxedDevice<'a>(&'a mut dyn DeviceOracle);
impl DeviceOracle for BoxedDevice<'_> {
    fn respond(&mut self, x: u8, y: u8, z: u8) -> randamp::Result<(u8, u8, u8)> {
        self.0.respond(x, y, z)
    }
}

struct BoxedSv<'a>(&'a mut dyn SvOracle);
impl SvOracle for BoxedSv<'_> {
    fn next_bit(&mut self) -> randamp::Result<u8> {
        self.0.next_bit()
    }
    fn bits_consumed(&self) -> u64 {
        self.0.bits_consumed()
    }
}

pub fn verify(args: VerifyArgs) -> Result<(), Failure> {
    let report = verify_certificate(&args.certificate)?;
    if report.ok {
        println!("certificate verified: all fields recomputed identically");
        Ok(())
    } else {
        Err(Failure::mismatch(format!(
            "first differing field: {}",
            report.first_mismatch.unwrap_or_else(|| "unknown".to_string())
        )))
    }
}

