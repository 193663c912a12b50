//! Analytic stand-in for the three-qubit device.
//!
//! Rounds are sampled from the closed-form outcome distribution of the GHZ
//! state `(|000> + i|111>)/sqrt(2)` measured in Pauli X or Y on each qubit,
//! mixed with white noise of visibility `v`:
//!
//! `p(abc|xyz) = (1/8) (1 + v (-1)^(a+b+c) E[xyz])`
//!
//! with ideal correlators `E[011] = E[101] = E[110] = +1`, `E[000] = -1` and
//! zero otherwise. Input bit 0 selects the Pauli Y measurement and 1 selects
//! X; with the `i` phase of the state this convention reaches the algebraic
//! maximum `M = 4v / v=1`. The mapping is pinned by a statevector oracle in
//! the test suite.
//!
//! Two kinds of signalling can be injected per round: a fixed deterministic
//! box (`a = b = 0`, `c = 1` iff `(x,y,z) = (0,0,0)`) that saturates the
//! Mermin inequality and carries a unit signalling quantifier, and a "random"
//! effect that replaces the outputs with fresh coin flips, contributing
//! nothing to the Mermin value.
//!
//! All randomness flows from one 64-bit seed through independent,
//! role-separated streams of a counter-based generator, so every simulation
//! is reproducible and shard-safe.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::bitstore::{RoundLog, RoundRecord};
use crate::error::{Error, Result};

/// Stream identifiers: one independent substream per logical role.
pub mod streams {
    /// Input bits drawn from the imperfect RNG model.
    pub const INPUTS: u64 = 0;
    /// Device outcome sampling.
    pub const DEVICE: u64 = 1;
    /// Per-round injection decisions.
    pub const INJECTION: u64 = 2;
}

/// The counter-based generator behind every simulation stream.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// How the imperfect RNG model biases its bits. Every strategy respects the
/// SV bound: each bit's conditional probability stays within
/// `[1/2 - eps, 1/2 + eps]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SvStrategy {
    /// Fair coin; the bias budget is unused.
    #[default]
    HonestUniform,
    /// Every bit leans toward zero with the full budget: `P(0) = 1/2 + eps`.
    ConstantBias,
    /// Bits lean toward the given input triple (position mod 3 selects the
    /// target bit), steering rounds toward one Mermin setting.
    AdversarialPattern { target: (u8, u8, u8) },
}

/// The imperfect RNG model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvSimConfig {
    pub eps_sv: f64,
    pub strategy: SvStrategy,
}

impl Default for SvSimConfig {
    fn default() -> Self {
        SvSimConfig { eps_sv: 0.0, strategy: SvStrategy::HonestUniform }
    }
}

/// Full simulator configuration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// White-noise mixing weight of the GHZ state; the Mermin value converges
    /// to `4v`.
    pub visibility: f64,
    pub frac_fixed_signalling: f64,
    pub frac_random_signalling: f64,
    pub rng_seed: u64,
    pub input_source: SvSimConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            visibility: 1.0,
            frac_fixed_signalling: 0.0,
            frac_random_signalling: 0.0,
            rng_seed: 0,
            input_source: SvSimConfig::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.visibility) {
            return Err(Error::invalid("visibility", format!("need v in [0,1], got {}", self.visibility)));
        }
        for (name, f) in [
            ("frac_fixed_signalling", self.frac_fixed_signalling),
            ("frac_random_signalling", self.frac_random_signalling),
        ] {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::invalid(name, format!("need a fraction in [0,1], got {f}")));
            }
        }
        if self.frac_fixed_signalling + self.frac_random_signalling > 1.0 {
            return Err(Error::invalid(
                "frac_fixed_signalling",
                "injection fractions must sum to at most 1",
            ));
        }
        if !(0.0..=0.5).contains(&self.input_source.eps_sv) {
            return Err(Error::invalid(
                "eps_sv",
                format!("need eps_sv in [0, 1/2], got {}", self.input_source.eps_sv),
            ));
        }
        Ok(())
    }
}

/// Ideal three-body correlator `E[xyz]` of the GHZ state under the 0 -> Y,
/// 1 -> X measurement convention.
pub fn ideal_correlator(x: u8, y: u8, z: u8) -> i8 {
    match (x & 1) + (y & 1) + (z & 1) {
        // YYY on the i-phase GHZ state
        0 => -1,
        // one X, two Y: vanishing expectation, as does two X one Y
        2 => 1,
        _ => 0,
    }
}

/// `p(abc|xyz)` of the white-noise GHZ model at visibility `v`.
pub fn ghz_conditional(x: u8, y: u8, z: u8, a: u8, b: u8, c: u8, v: f64) -> f64 {
    let parity_sign = if (a ^ b ^ c) & 1 == 0 { 1.0 } else { -1.0 };
    (1.0 + v * parity_sign * ideal_correlator(x, y, z) as f64) / 8.0
}

/// The deterministic signalling box: Mermin value exactly 4, signalling
/// quantifier exactly 1.
pub fn fixed_signalling_box(x: u8, y: u8, z: u8) -> (u8, u8, u8) {
    (0, 0, u8::from(x == 0 && y == 0 && z == 0))
}

/// A stateful imperfect RNG stream.
#[derive(Clone, Debug)]
pub struct SvStream {
    config: SvSimConfig,
    rng: ChaCha12Rng,
    position: u64,
}

impl SvStream {
    pub fn new(config: SvSimConfig, rng: ChaCha12Rng) -> SvStream {
        SvStream { config, rng, position: 0 }
    }

    /// Stream derived from a simulation seed on the inputs role.
    pub fn from_seed(config: SvSimConfig, seed: u64) -> SvStream {
        SvStream::new(config, stream_rng(seed, streams::INPUTS))
    }

    pub fn bits_drawn(&self) -> u64 {
        self.position
    }

    pub fn next_bit(&mut self) -> u8 {
        let eps = self.config.eps_sv;
        let bit = match self.config.strategy {
            SvStrategy::HonestUniform => (self.rng.next_u32() & 1) as u8,
            SvStrategy::ConstantBias => {
                // P(0) = 1/2 + eps
                u8::from(self.rng.gen::<f64>() >= 0.5 + eps)
            }
            SvStrategy::AdversarialPattern { target } => {
                let wanted = match self.position % 3 {
                    0 => target.0,
                    1 => target.1,
                    _ => target.2,
                };
                if self.rng.gen::<f64>() < 0.5 + eps {
                    wanted & 1
                } else {
                    (wanted & 1) ^ 1
                }
            }
        };
        self.position += 1;
        bit
    }
}

/// The simulated device: responds to input triples, round by round.
#[derive(Clone, Debug)]
pub struct SimDevice {
    config: SimConfig,
    device_rng: ChaCha12Rng,
    injection_rng: ChaCha12Rng,
}

impl SimDevice {
    pub fn new(config: SimConfig) -> Result<SimDevice> {
        config.validate()?;
        Ok(SimDevice {
            device_rng: stream_rng(config.rng_seed, streams::DEVICE),
            injection_rng: stream_rng(config.rng_seed, streams::INJECTION),
            config,
        })
    }

    /// Samples one round's outcomes for the given inputs.
    pub fn respond(&mut self, x: u8, y: u8, z: u8) -> (u8, u8, u8) {
        let roll: f64 = self.injection_rng.gen();
        if roll < self.config.frac_fixed_signalling {
            return fixed_signalling_box(x, y, z);
        }
        if roll < self.config.frac_fixed_signalling + self.config.frac_random_signalling {
            // input-agnostic fresh coins: zero expected Mermin contribution
            let bits = self.device_rng.next_u32();
            return ((bits & 1) as u8, ((bits >> 1) & 1) as u8, ((bits >> 2) & 1) as u8);
        }
        // exact two-step sampling of the analytic conditional: parity first,
        // then uniformly one of the four outcomes of that parity
        let e = ideal_correlator(x, y, z) as f64;
        let p_even = (1.0 + self.config.visibility * e) / 2.0;
        let want_even = self.device_rng.gen::<f64>() < p_even;
        let pick = (self.device_rng.next_u32() & 3) as u8; // a and b free
        let a = pick & 1;
        let b = (pick >> 1) & 1;
        let c = a ^ b ^ u8::from(!want_even);
        (a, b, c)
    }
}

/// Runs `n` rounds end to end: inputs from the SV model, outcomes from the
/// device model. Reproducible from the seed alone.
pub fn run_rounds(config: &SimConfig, n: u64) -> Result<RoundLog> {
    if n == 0 {
        return Err(Error::invalid("n", "need at least one round"));
    }
    let mut inputs = SvStream::from_seed(config.input_source, config.rng_seed);
    let mut device = SimDevice::new(*config)?;
    let mut rounds = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let x = inputs.next_bit();
        let y = inputs.next_bit();
        let z = inputs.next_bit();
        let (a, b, c) = device.respond(x, y, z);
        rounds.push(RoundRecord::new(x, y, z, a, b, c));
    }
    Ok(RoundLog {
        rounds,
        run_id: format!("sim-seed-{}", config.rng_seed),
        source: format!(
            "ghz-sim v={} fixed={} random={}",
            config.visibility, config.frac_fixed_signalling, config.frac_random_signalling
        ),
    })
}
