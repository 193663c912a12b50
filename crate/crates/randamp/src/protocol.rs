//! The protocol engine: data collection, verification with abort, randomness
//! post-processing, and certificate emission.
//!
//! One run walks the whole pipeline:
//!
//! 1. collect `n` rounds, inputs drawn from the imperfect RNG oracle;
//! 2. estimate the behaviour, evaluate the Mermin value, quantify signalling,
//!    and certify entropy under the configured assumption — aborting on a
//!    value below threshold or a failed certification;
//! 3. feed the `2n` device outcome bits `(a, b)` and a fresh `2n`-bit string
//!    from the same imperfect RNG, both zero-padded to the next Artin prime,
//!    into the two-source extractor;
//! 4. optionally extend through the seeded extractor: the `amplify` flow
//!    hashes further imperfect-RNG bits (private-source setting), the
//!    `amplify_and_privatize` flow re-uses the device outcomes instead
//!    (public-source setting) and consumes no SV bits beyond the two-source
//!    block.
//!
//! Aborts are typed results, not errors: a run that fails its statistics is
//! a legitimate outcome that must be distinguishable from an IO failure.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bell::{
    certify_entropy, correlator, mermin_value, signalling_fraction, Assumption, BehaviorTable,
    CertifiedEntropy, CertifyOutcome,
};
use crate::bitstore::{BitString, RoundLog};
use crate::certificate::{
    digest_bits, digest_file, digest_log, format_sig12, AnalysisSection, ConfigEcho,
    Conventions, EntropyCertificate, ExtractionSection, FileRef, InputRefs, OutputRefs,
    CERTIFICATE_FORMAT, UNSET_TIMESTAMP,
};
use crate::entropy::{accumulate, confidence_width, sv_rate, AccumulationMode};
use crate::error::{Error, Result};
use crate::extractors::{dodis_extract, dodis_params, ht_extract, ht_params, Adversary, HtParams};
use crate::ntt::{next_artin_prime_with, ArtinCache};
use crate::oracles::{DeviceOracle, SvOracle};

/// Which post-processing flow runs after the two-source extraction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flow {
    /// Randomness amplification with a private imperfect RNG; the optional
    /// seeded extension hashes fresh imperfect-RNG bits.
    Amplify,
    /// Randomness and privacy amplification with a public imperfect RNG; the
    /// optional seeded extension re-uses device outcomes.
    AmplifyAndPrivatize,
}

/// How the estimation confidence width is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DeltaFPolicy {
    Fixed { value: f64 },
    Hoeffding { eps_est: f64 },
}

impl DeltaFPolicy {
    pub fn resolve(&self, n_rounds: u64) -> Result<f64> {
        match self {
            DeltaFPolicy::Fixed { value } => {
                if !(*value >= 0.0) {
                    return Err(Error::invalid("delta_f", format!("need Delta_f >= 0, got {value}")));
                }
                Ok(*value)
            }
            DeltaFPolicy::Hoeffding { eps_est } => confidence_width(n_rounds, *eps_est),
        }
    }
}

/// The seeded-extension knob.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtensionConfig {
    /// Output multiple: the extension emits `alpha` bits per seed bit.
    pub alpha: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub n_rounds: u64,
    pub eps_sv: f64,
    pub eps_sec: f64,
    pub delta_f: DeltaFPolicy,
    /// Abort level for the observed Mermin value; defaults to
    /// `2 + Delta_f` when unset.
    pub m_threshold: Option<f64>,
    pub assumption: Assumption,
    pub mode: AccumulationMode,
    pub flow: Flow,
    pub extension: Option<ExtensionConfig>,
    /// Run identifier; aborted configurations must not be re-run under the
    /// same nonce (see [`ProtocolEngine`]).
    pub nonce: u64,
    /// Optional on-disk Artin-prime cache.
    pub artin_cache: Option<PathBuf>,
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_rounds == 0 {
            return Err(Error::invalid("n_rounds", "need at least one round"));
        }
        if !(0.0..0.5).contains(&self.eps_sv) {
            return Err(Error::invalid("eps_sv", format!("need eps_sv in [0, 1/2), got {}", self.eps_sv)));
        }
        if !(self.eps_sec > 0.0 && self.eps_sec < 1.0) {
            return Err(Error::invalid("eps_sec", format!("need eps_sec in (0,1), got {}", self.eps_sec)));
        }
        if let Some(t) = self.m_threshold {
            if !(t > 2.0) {
                return Err(Error::invalid("m_threshold", format!("abort level must exceed the classical bound 2, got {t}")));
            }
        }
        if let Some(ext) = &self.extension {
            if ext.alpha < 2 {
                return Err(Error::invalid("alpha", "the seeded extension needs alpha >= 2"));
            }
        }
        Ok(())
    }
}

/// Why a run refused to emit output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum AbortReason {
    MerminBelowThreshold { m_obs: f64, threshold: f64 },
    SignallingInconsistent { n_s: f64, m_obs: f64 },
    NotCertifiable { detail: String },
    ZeroOutputSize,
    ExtensionInfeasible { detail: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Abort {
    pub reason: AbortReason,
    pub nonce: u64,
}

impl std::fmt::Display for AbortReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AbortReason::MerminBelowThreshold { m_obs, threshold } => {
                write!(f, "Mermin value {m_obs:.4} below threshold {threshold:.4}")
            }
            AbortReason::SignallingInconsistent { n_s, m_obs } => {
                write!(f, "signalling fraction {n_s:.4} inconsistent with M_obs {m_obs:.4}")
            }
            AbortReason::NotCertifiable { detail } => write!(f, "no certifiable randomness: {detail}"),
            AbortReason::ZeroOutputSize => write!(f, "certified entropy supports no output bits"),
            AbortReason::ExtensionInfeasible { detail } => {
                write!(f, "seeded extension infeasible: {detail}")
            }
        }
    }
}

/// A completed run: the output strings, the certificate, and every artifact
/// needed to re-verify it.
#[derive(Clone, Debug)]
pub struct ProtocolRun {
    pub certificate: EntropyCertificate,
    pub output: BitString,
    pub extended: Option<BitString>,
    pub round_log: RoundLog,
    /// Imperfect-RNG bits consumed after data collection, in order.
    pub sv_tail: BitString,
}

#[derive(Clone, Debug)]
pub enum Outcome {
    Completed(Box<ProtocolRun>),
    Aborted(Abort),
}

/// Wraps verification: behaviour estimation, Mermin evaluation, signalling
/// quantification and certification against the configured thresholds.
pub fn verify(table: &BehaviorTable, config: &ProtocolConfig) -> Result<std::result::Result<(f64, f64, CertifiedEntropy), Abort>> {
    let n = config.n_rounds;
    let delta_f = config.delta_f.resolve(n)?;
    let threshold = config.m_threshold.unwrap_or(2.0 + delta_f);
    let m_obs = mermin_value(table);
    let abort = |reason| Ok(Err(Abort { reason, nonce: config.nonce }));
    if m_obs < threshold {
        return abort(AbortReason::MerminBelowThreshold { m_obs, threshold });
    }
    let signalling = signalling_fraction(table);
    let n_s = signalling.n_s;
    if config.assumption == Assumption::A && n_s > 1.0 - m_obs / 4.0 {
        return abort(AbortReason::SignallingInconsistent { n_s, m_obs });
    }
    match certify_entropy(m_obs, n, n_s, config.assumption, config.eps_sv, delta_f, &config.mode)? {
        CertifyOutcome::Certified(cert) => Ok(Ok((m_obs, delta_f, cert))),
        CertifyOutcome::NotCertifiable { reason } => {
            abort(AbortReason::NotCertifiable { detail: reason })
        }
    }
}

/// Runs the whole protocol against the given oracles.
pub fn run_protocol<D: DeviceOracle, S: SvOracle>(
    config: &ProtocolConfig,
    device: &mut D,
    sv: &mut S,
) -> Result<Outcome> {
    config.validate()?;
    let n = config.n_rounds;

    // 1. data collection
    let mut rounds = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let x = sv.next_bit()?;
        let y = sv.next_bit()?;
        let z = sv.next_bit()?;
        let (a, b, c) = device.respond(x, y, z)?;
        rounds.push(crate::bitstore::RoundRecord::new(x, y, z, a, b, c));
    }
    let round_log = RoundLog { rounds, ..Default::default() };

    // 2. verification
    let table = BehaviorTable::from_log(&round_log)?;
    let (m_obs, delta_f, certified) = match verify(&table, config)? {
        Ok(v) => v,
        Err(abort) => return Ok(Outcome::Aborted(abort)),
    };
    let signalling = signalling_fraction(&table);

    // 3. two-source extraction over the Artin-prime block
    let cache = config.artin_cache.as_ref().map(ArtinCache::new);
    let device_bits = round_log.device_output_bits();
    let sv_block = sv.draw(2 * n as usize)?;
    let block_len = next_artin_prime_with((2 * n).max(3), cache.as_ref())?.value();
    let c_sv = sv_rate(config.eps_sv)?;
    let log2_p_sv = -((2 * n) as f64) * c_sv;
    let dodis = dodis_params(log2_p_sv, certified.log2_pq, block_len, config.eps_sec, Adversary::Quantum)?;
    if dodis.m2 == 0 {
        return Ok(Outcome::Aborted(Abort { reason: AbortReason::ZeroOutputSize, nonce: config.nonce }));
    }
    let padded_device = device_bits.zero_pad(block_len as usize)?;
    let padded_sv = sv_block.zero_pad(block_len as usize)?;
    let output = dodis_extract(&padded_device, &padded_sv, dodis.m2 as usize)?;

    // 4. optional seeded extension
    let mut sv_tail = sv_block.clone();
    let mut ht: Option<HtParams> = None;
    let mut extended: Option<BitString> = None;
    if let Some(ext) = &config.extension {
        match size_extension(config, ext, &certified, c_sv, dodis.m2, n) {
            Ok(params) => {
                let source = match config.flow {
                    Flow::Amplify => {
                        let fresh = sv.draw(params.n_source as usize)?;
                        sv_tail = sv_tail.concat(&fresh)?;
                        fresh
                    }
                    Flow::AmplifyAndPrivatize => device_bits.slice(0, params.n_source as usize)?,
                };
                extended = Some(ht_extract(&source, &output, params.m_out as usize)?);
                ht = Some(params);
            }
            Err(detail) => {
                return Ok(Outcome::Aborted(Abort {
                    reason: AbortReason::ExtensionInfeasible { detail },
                    nonce: config.nonce,
                }));
            }
        }
    }

    // 5. certificate
    let correlators: Vec<f64> = (0..8u8)
        .map(|s| correlator(&table, s >> 2 & 1, s >> 1 & 1, s & 1))
        .collect();
    let certificate = EntropyCertificate {
        format: CERTIFICATE_FORMAT.to_string(),
        config: ConfigEcho {
            n_rounds: n,
            eps_sv: config.eps_sv,
            eps_sec: config.eps_sec,
            delta_f,
            m_threshold: config.m_threshold.unwrap_or(2.0 + delta_f),
            assumption: config.assumption,
            mode: config.mode,
            flow: config.flow,
            extension_alpha: config.extension.map(|e| e.alpha),
            nonce: config.nonce,
        },
        inputs: InputRefs {
            round_log: FileRef { file: String::new(), sha256: digest_log(&round_log), items: n },
            sv_tail: FileRef {
                file: String::new(),
                sha256: digest_bits(&sv_tail),
                items: sv_tail.len() as u64,
            },
        },
        analysis: AnalysisSection { m_obs, correlators, signalling, certified, c_sv },
        extraction: ExtractionSection { block_len, log2_p_sv, dodis, ht },
        outputs: OutputRefs {
            primary: FileRef {
                file: String::new(),
                sha256: digest_bits(&output),
                items: output.len() as u64,
            },
            extended: extended.as_ref().map(|e| FileRef {
                file: String::new(),
                sha256: digest_bits(e),
                items: e.len() as u64,
            }),
        },
        conventions: Conventions::default(),
        timestamp_utc: UNSET_TIMESTAMP.to_string(),
    };

    Ok(Outcome::Completed(Box::new(ProtocolRun {
        certificate,
        output,
        extended,
        round_log,
        sv_tail,
    })))
}

/// Sizes the seeded extension: the Dodis output is the seed, so the source
/// length is pinned to `(alpha + 1) * m2`. Failure reasons are data- and
/// configuration-dependent, hence strings for the abort report.
fn size_extension(
    config: &ProtocolConfig,
    ext: &ExtensionConfig,
    certified: &CertifiedEntropy,
    c_sv: f64,
    m2: u64,
    n_rounds: u64,
) -> std::result::Result<HtParams, String> {
    let n_source = (ext.alpha + 1) * m2;
    let rate = match config.flow {
        Flow::Amplify => c_sv,
        Flow::AmplifyAndPrivatize => {
            if n_source > 2 * n_rounds {
                return Err(format!(
                    "source needs {n_source} device bits but the run produced {}",
                    2 * n_rounds
                ));
            }
            // per-bit rate of the device-string prefix actually hashed,
            // with the signalling discount carried over
            let prefix_rounds = n_source.div_ceil(2);
            let usable = ((prefix_rounds as f64) * certified.usable_rounds as f64
                / n_rounds as f64)
                .floor() as u64;
            if usable == 0 {
                return Err("no usable rounds in the source prefix".to_string());
            }
            let log2_pq_prefix = accumulate(certified.p_g, usable, &config.mode)
                .map_err(|e| e.to_string())?;
            let rate = -log2_pq_prefix / n_source as f64;
            if rate <= 0.5 {
                return Err(format!(
                    "device outcomes certify a per-bit rate of {:.4} over the {n_source}-bit \
                     source prefix; the seeded construction needs more than 1/2",
                    rate.max(0.0)
                ));
            }
            rate
        }
    };
    let params = ht_params(n_source, rate, ext.alpha).map_err(|e| e.to_string())?;
    if params.m_seed != m2 {
        return Err(format!(
            "seed length {} does not match the two-source output {m2}",
            params.m_seed
        ));
    }
    Ok(params)
}

/// Tracks nonces of aborted runs: composable-security hygiene forbids
/// re-running an aborted configuration verbatim.
#[derive(Debug, Default)]
pub struct ProtocolEngine {
    aborted_nonces: HashSet<u64>,
}

impl ProtocolEngine {
    pub fn new() -> ProtocolEngine {
        ProtocolEngine::default()
    }

    pub fn run<D: DeviceOracle, S: SvOracle>(
        &mut self,
        config: &ProtocolConfig,
        device: &mut D,
        sv: &mut S,
    ) -> Result<Outcome> {
        if self.aborted_nonces.contains(&config.nonce) {
            return Err(Error::NonceReused { nonce: config.nonce });
        }
        let outcome = run_protocol(config, device, sv)?;
        if matches!(outcome, Outcome::Aborted(_)) {
            self.aborted_nonces.insert(config.nonce);
        }
        Ok(outcome)
    }
}

/// File names used for a run written under a stem.
#[derive(Clone, Debug)]
pub struct RunPaths {
    pub certificate: PathBuf,
    pub round_log: PathBuf,
    pub sv_tail: PathBuf,
    pub output: PathBuf,
    pub extended: Option<PathBuf>,
}

/// Writes all artifacts of a completed run into `dir` under `stem`, filling
/// the certificate's file references, and returns the paths.
pub fn write_run(
    dir: &Path,
    stem: &str,
    run: &mut ProtocolRun,
    timestamp_utc: Option<String>,
) -> Result<RunPaths> {
    let name = |suffix: &str| format!("{stem}.{suffix}");
    run.certificate.inputs.round_log.file = name("rounds.bin");
    run.certificate.inputs.sv_tail.file = name("sv.bits");
    run.certificate.outputs.primary.file = name("out.bits");
    if let Some(ext) = &mut run.certificate.outputs.extended {
        ext.file = name("ext.bits");
    }
    if let Some(ts) = timestamp_utc {
        run.certificate.timestamp_utc = ts;
    }

    let paths = RunPaths {
        certificate: dir.join(name("cert.json")),
        round_log: dir.join(name("rounds.bin")),
        sv_tail: dir.join(name("sv.bits")),
        output: dir.join(name("out.bits")),
        extended: run.extended.as_ref().map(|_| dir.join(name("ext.bits"))),
    };
    run.round_log.write_to(&paths.round_log)?;
    run.sv_tail.write_to(&paths.sv_tail)?;
    run.output.write_to(&paths.output)?;
    if let (Some(ext_bits), Some(ext_path)) = (&run.extended, &paths.extended) {
        ext_bits.write_to(ext_path)?;
    }
    run.certificate.write_to(&paths.certificate)?;
    Ok(paths)
}

/// Result of re-verifying a certificate against its artifacts.
#[derive(Clone, Debug, PartialEq)]
pub struct VerifyReport {
    pub ok: bool,
    /// The first field whose recomputation disagrees.
    pub first_mismatch: Option<String>,
}

macro_rules! check {
    ($field:expr, $expected:expr, $actual:expr) => {
        if $expected != $actual {
            return Ok(VerifyReport { ok: false, first_mismatch: Some($field.to_string()) });
        }
    };
}

fn check_f64(field: &str, expected: f64, actual: f64) -> std::result::Result<(), VerifyReport> {
    if format_sig12(expected) != format_sig12(actual) {
        return Err(VerifyReport { ok: false, first_mismatch: Some(field.to_string()) });
    }
    Ok(())
}

/// Recomputes every certified quantity from the artifacts next to the
/// certificate and compares field by field.
pub fn verify_certificate(cert_path: &Path) -> Result<VerifyReport> {
    let cert = EntropyCertificate::read_from(cert_path)?;
    let dir = cert_path.parent().unwrap_or(Path::new("."));

    // artifact digests first: any tamper shows up before recomputation
    let log_path = dir.join(&cert.inputs.round_log.file);
    check!("inputs.round_log.sha256", digest_file(&log_path)?, cert.inputs.round_log.sha256);
    let sv_path = dir.join(&cert.inputs.sv_tail.file);
    check!("inputs.sv_tail.sha256", digest_file(&sv_path)?, cert.inputs.sv_tail.sha256);
    let out_path = dir.join(&cert.outputs.primary.file);
    check!("outputs.primary.sha256", digest_file(&out_path)?, cert.outputs.primary.sha256);
    if let Some(ext) = &cert.outputs.extended {
        check!("outputs.extended.sha256", digest_file(&dir.join(&ext.file))?, ext.sha256);
    }

    let round_log = RoundLog::read_from(&log_path)?;
    let sv_tail = BitString::read_from(&sv_path)?;
    let n = cert.config.n_rounds;
    check!("inputs.round_log.items", round_log.len() as u64, cert.inputs.round_log.items);
    check!("inputs.sv_tail.items", sv_tail.len() as u64, cert.inputs.sv_tail.items);

    // statistics
    let table = BehaviorTable::from_log(&round_log)?;
    let m_obs = mermin_value(&table);
    if let Err(r) = check_f64("analysis.m_obs", m_obs, cert.analysis.m_obs) {
        return Ok(r);
    }
    let correlators: Vec<f64> = (0..8u8)
        .map(|s| correlator(&table, s >> 2 & 1, s >> 1 & 1, s & 1))
        .collect();
    check!("analysis.correlators.len", correlators.len(), cert.analysis.correlators.len());
    for (i, (got, want)) in correlators.iter().zip(&cert.analysis.correlators).enumerate() {
        if let Err(r) = check_f64(&format!("analysis.correlators[{i}]"), *got, *want) {
            return Ok(r);
        }
    }
    let signalling = signalling_fraction(&table);
    if let Err(r) = check_f64("analysis.signalling.n_s", signalling.n_s, cert.analysis.signalling.n_s) {
        return Ok(r);
    }
    if let Err(r) = check_f64(
        "analysis.signalling.max_pairwise",
        signalling.max_pairwise,
        cert.analysis.signalling.max_pairwise,
    ) {
        return Ok(r);
    }

    // certification
    let echoed = &cert.config;
    let recert = certify_entropy(
        m_obs,
        n,
        signalling.n_s,
        echoed.assumption,
        echoed.eps_sv,
        echoed.delta_f,
        &echoed.mode,
    )?;
    let recert = match recert {
        CertifyOutcome::Certified(c) => c,
        CertifyOutcome::NotCertifiable { .. } => {
            return Ok(VerifyReport {
                ok: false,
                first_mismatch: Some("analysis.certified (recomputation refuses)".to_string()),
            });
        }
    };
    check!("analysis.certified.usable_rounds", recert.usable_rounds, cert.analysis.certified.usable_rounds);
    for (field, got, want) in [
        ("analysis.certified.m_hat_ns", recert.m_hat_ns, cert.analysis.certified.m_hat_ns),
        ("analysis.certified.m_u", recert.m_u, cert.analysis.certified.m_u),
        ("analysis.certified.p_g", recert.p_g, cert.analysis.certified.p_g),
        ("analysis.certified.log2_pq", recert.log2_pq, cert.analysis.certified.log2_pq),
    ] {
        if let Err(r) = check_f64(field, got, want) {
            return Ok(r);
        }
    }

    // extraction sizing
    let cache: Option<ArtinCache> = None;
    let block_len = next_artin_prime_with((2 * n).max(3), cache.as_ref())?.value();
    check!("extraction.block_len", block_len, cert.extraction.block_len);
    let c_sv = sv_rate(echoed.eps_sv)?;
    if let Err(r) = check_f64("analysis.c_sv", c_sv, cert.analysis.c_sv) {
        return Ok(r);
    }
    let log2_p_sv = -((2 * n) as f64) * c_sv;
    if let Err(r) = check_f64("extraction.log2_p_sv", log2_p_sv, cert.extraction.log2_p_sv) {
        return Ok(r);
    }
    let dodis = dodis_params(log2_p_sv, recert.log2_pq, block_len, echoed.eps_sec, Adversary::Quantum)?;
    check!("extraction.dodis.m2", dodis.m2, cert.extraction.dodis.m2);
    check!("outputs.primary.items", dodis.m2, cert.outputs.primary.items);

    // re-extraction
    if sv_tail.len() < 2 * n as usize {
        return Err(Error::corrupt(&sv_path, "fewer SV bits than the two-source block needs"));
    }
    let device_bits = round_log.device_output_bits();
    let sv_block = sv_tail.slice(0, 2 * n as usize)?;
    let output = dodis_extract(
        &device_bits.zero_pad(block_len as usize)?,
        &sv_block.zero_pad(block_len as usize)?,
        dodis.m2 as usize,
    )?;
    check!("outputs.primary.sha256 (recomputed)", digest_bits(&output), cert.outputs.primary.sha256);

    // extension, when present
    match (&cert.extraction.ht, &cert.outputs.extended) {
        (None, None) => {}
        (Some(ht), Some(ext_ref)) => {
            let n_source = ht.n_source as usize;
            let source = match echoed.flow {
                Flow::Amplify => {
                    if sv_tail.len() < 2 * n as usize + n_source {
                        return Err(Error::corrupt(&sv_path, "fewer SV bits than the extension needs"));
                    }
                    sv_tail.slice(2 * n as usize, n_source)?
                }
                Flow::AmplifyAndPrivatize => device_bits.slice(0, n_source)?,
            };
            let extended = ht_extract(&source, &output, ht.m_out as usize)?;
            check!("outputs.extended.items", ht.m_out, ext_ref.items);
            check!("outputs.extended.sha256 (recomputed)", digest_bits(&extended), ext_ref.sha256);
        }
        _ => {
            return Ok(VerifyReport {
                ok: false,
                first_mismatch: Some("outputs.extended (present/absent disagreement)".to_string()),
            });
        }
    }

    Ok(VerifyReport { ok: true, first_mismatch: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{SimConfig, SimDevice, SvSimConfig, SvStream};

    fn test_config(n_rounds: u64) -> ProtocolConfig {
        ProtocolConfig {
            n_rounds,
            eps_sv: 0.01,
            eps_sec: 1e-7,
            delta_f: DeltaFPolicy::Fixed { value: 1e-3 },
            m_threshold: None,
            assumption: Assumption::B,
            mode: AccumulationMode::Iid,
            flow: Flow::Amplify,
            extension: None,
            nonce: 1,
            artin_cache: None,
        }
    }

    fn sim_oracles(seed: u64, visibility: f64) -> (SimDevice, SvStream) {
        let sim = SimConfig { visibility, rng_seed: seed, ..Default::default() };
        (SimDevice::new(sim).unwrap(), SvStream::from_seed(SvSimConfig::default(), seed))
    }

    #[test]
    fn completed_run_has_consistent_sizes() {
        let config = test_config(20_000);
        let (mut device, mut sv) = sim_oracles(5, 1.0);
        match run_protocol(&config, &mut device, &mut sv).unwrap() {
            Outcome::Completed(run) => {
                let m2 = run.certificate.extraction.dodis.m2;
                assert!(m2 > 0);
                assert_eq!(run.output.len() as u64, m2);
                assert_eq!(run.certificate.outputs.primary.items, m2);
                assert_eq!(run.sv_tail.len() as u64, 2 * config.n_rounds);
                assert_eq!(sv.bits_consumed(), 3 * config.n_rounds + 2 * config.n_rounds);
                assert!(run.certificate.analysis.m_obs > 3.9);
            }
            Outcome::Aborted(a) => panic!("unexpected abort: {}", a.reason),
        }
    }

    #[test]
    fn low_visibility_aborts() {
        let config = test_config(5_000);
        let (mut device, mut sv) = sim_oracles(5, 0.4);
        match run_protocol(&config, &mut device, &mut sv).unwrap() {
            Outcome::Aborted(abort) => {
                assert!(matches!(abort.reason, AbortReason::MerminBelowThreshold { .. }));
            }
            Outcome::Completed(_) => panic!("a visibility-0.4 device must abort"),
        }
    }

    #[test]
    fn determinism_same_seeds_same_certificate() {
        let config = test_config(10_000);
        let run = |seed| {
            let (mut device, mut sv) = sim_oracles(seed, 1.0);
            match run_protocol(&config, &mut device, &mut sv).unwrap() {
                Outcome::Completed(run) => run,
                Outcome::Aborted(a) => panic!("{}", a.reason),
            }
        };
        let a = run(9);
        let b = run(9);
        assert_eq!(
            crate::certificate::canonical_json(&a.certificate).unwrap(),
            crate::certificate::canonical_json(&b.certificate).unwrap()
        );
        assert_eq!(a.output, b.output);
        let c = run(10);
        assert_ne!(a.output, c.output);
    }

    #[test]
    fn amplify_extension_consumes_fresh_sv_bits() {
        let mut config = test_config(20_000);
        config.extension = Some(ExtensionConfig { alpha: 2 });
        let (mut device, mut sv) = sim_oracles(5, 1.0);
        match run_protocol(&config, &mut device, &mut sv).unwrap() {
            Outcome::Completed(run) => {
                let ht = run.certificate.extraction.ht.as_ref().unwrap();
                let m2 = run.certificate.extraction.dodis.m2;
                assert_eq!(ht.m_seed, m2);
                assert_eq!(ht.m_out, 2 * m2);
                assert_eq!(run.extended.as_ref().unwrap().len() as u64, ht.m_out);
                assert_eq!(run.sv_tail.len() as u64, 2 * config.n_rounds + ht.n_source);
                assert_eq!(sv.bits_consumed(), 5 * config.n_rounds + ht.n_source);
            }
            Outcome::Aborted(a) => panic!("unexpected abort: {}", a.reason),
        }
    }

    #[test]
    fn privatize_extension_draws_no_extra_sv_bits() {
        let mut config = test_config(20_000);
        config.flow = Flow::AmplifyAndPrivatize;
        config.extension = Some(ExtensionConfig { alpha: 2 });
        let (mut device, mut sv) = sim_oracles(5, 1.0);
        match run_protocol(&config, &mut device, &mut sv).unwrap() {
            Outcome::Completed(run) => {
                assert_eq!(sv.bits_consumed(), 5 * config.n_rounds, "public-source flow must not draw seed material");
                assert!(run.extended.is_some());
                assert_eq!(run.sv_tail.len() as u64, 2 * config.n_rounds);
            }
            Outcome::Aborted(a) => panic!("unexpected abort: {}", a.reason),
        }
    }

    #[test]
    fn extension_with_weak_sv_source_aborts() {
        // enough rounds that the sampling-noise n_s does not zero the output
        // before the extension is even sized
        let mut config = test_config(100_000);
        // c_sv(0.3) = 0.32 < 1/2: the seeded construction cannot work
        config.eps_sv = 0.3;
        config.extension = Some(ExtensionConfig { alpha: 2 });
        let (mut device, mut sv) = sim_oracles(5, 1.0);
        match run_protocol(&config, &mut device, &mut sv).unwrap() {
            Outcome::Aborted(abort) => {
                assert!(matches!(abort.reason, AbortReason::ExtensionInfeasible { .. }), "{:?}", abort.reason);
            }
            Outcome::Completed(_) => panic!("weak source must make the extension infeasible"),
        }
    }

    #[test]
    fn engine_rejects_nonce_reuse_after_abort() {
        let mut engine = ProtocolEngine::new();
        let config = test_config(5_000);
        let (mut device, mut sv) = sim_oracles(5, 0.4);
        match engine.run(&config, &mut device, &mut sv).unwrap() {
            Outcome::Aborted(_) => {}
            Outcome::Completed(_) => panic!("expected abort"),
        }
        let (mut device, mut sv) = sim_oracles(6, 1.0);
        assert!(matches!(
            engine.run(&config, &mut device, &mut sv),
            Err(Error::NonceReused { nonce: 1 })
        ));
        // a fresh nonce is accepted
        let mut fresh = config.clone();
        fresh.nonce = 2;
        let (mut device, mut sv) = sim_oracles(6, 1.0);
        assert!(matches!(engine.run(&fresh, &mut device, &mut sv).unwrap(), Outcome::Completed(_)));
    }

    #[test]
    fn write_verify_and_tamper() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = test_config(20_000);
        config.extension = Some(ExtensionConfig { alpha: 2 });
        let (mut device, mut sv) = sim_oracles(5, 1.0);
        let mut run = match run_protocol(&config, &mut device, &mut sv).unwrap() {
            Outcome::Completed(run) => *run,
            Outcome::Aborted(a) => panic!("{}", a.reason),
        };
        let paths = write_run(dir.path(), "t", &mut run, None).unwrap();
        let report = verify_certificate(&paths.certificate).unwrap();
        assert!(report.ok, "mismatch: {:?}", report.first_mismatch);

        // flip one bit of the primary output
        let mut bytes = std::fs::read(&paths.output).unwrap();
        let last = bytes.len() - 1;
        bytes[last] ^= 0x01;
        std::fs::write(&paths.output, &bytes).unwrap();
        let report = verify_certificate(&paths.certificate).unwrap();
        assert!(!report.ok);
        assert_eq!(report.first_mismatch.as_deref(), Some("outputs.primary.sha256"));

        // restore, then edit a certified number in the certificate
        run.output.write_to(&paths.output).unwrap();
        assert!(verify_certificate(&paths.certificate).unwrap().ok);
        let text = std::fs::read_to_string(&paths.certificate).unwrap();
        let m_obs_str = crate::certificate::format_sig12(run.certificate.analysis.m_obs);
        let tampered = text.replace(
            &format!("\"m_obs\":{m_obs_str}"),
            "\"m_obs\":3.99000000000e0",
        );
        assert_ne!(text, tampered, "tamper target must exist");
        std::fs::write(&paths.certificate, tampered).unwrap();
        let report = verify_certificate(&paths.certificate).unwrap();
        assert!(!report.ok);
        assert_eq!(report.first_mismatch.as_deref(), Some("analysis.m_obs"));

        // missing artifact is an error, not a mismatch
        std::fs::write(&paths.certificate, text).unwrap();
        std::fs::remove_file(&paths.sv_tail).unwrap();
        assert!(matches!(verify_certificate(&paths.certificate), Err(Error::Io(_))));
    }

    #[test]
    fn config_validation() {
        let mut c = test_config(0);
        assert!(c.validate().is_err());
        c.n_rounds = 10;
        c.eps_sv = 0.5;
        assert!(c.validate().is_err());
        c.eps_sv = 0.1;
        c.m_threshold = Some(1.5);
        assert!(c.validate().is_err());
        c.m_threshold = Some(2.5);
        assert!(c.validate().is_ok());
    }
}
