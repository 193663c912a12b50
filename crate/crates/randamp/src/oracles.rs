//! Bit and device sources the protocol engine runs against.
//!
//! The engine only ever sees these two traits, so a run is oblivious to
//! whether its inputs come from the simulator, a recorded log, or a raw bit
//! file captured from real hardware.

use crate::bitstore::{BitString, RoundLog};
use crate::error::{Error, Result};
use crate::sim::{SimDevice, SvStream};

/// A sequential source of imperfect-RNG bits. One instance serves a whole
/// protocol run: first the 3n input bits, then whatever the extractors
/// consume, so the SV bound keeps conditioning on everything already drawn.
pub trait SvOracle {
    fn next_bit(&mut self) -> Result<u8>;
    fn bits_consumed(&self) -> u64;

    fn draw(&mut self, count: usize) -> Result<BitString> {
        let mut s = BitString::zeros(0)?;
        for _ in 0..count {
            s.push(self.next_bit()?);
        }
        Ok(s)
    }
}

/// A three-input/three-output black box queried once per round.
pub trait DeviceOracle {
    fn respond(&mut self, x: u8, y: u8, z: u8) -> Result<(u8, u8, u8)>;
}

impl SvOracle for SvStream {
    fn next_bit(&mut self) -> Result<u8> {
        Ok(SvStream::next_bit(self))
    }

    fn bits_consumed(&self) -> u64 {
        self.bits_drawn()
    }
}

impl DeviceOracle for SimDevice {
    fn respond(&mut self, x: u8, y: u8, z: u8) -> Result<(u8, u8, u8)> {
        Ok(SimDevice::respond(self, x, y, z))
    }
}

/// Serves bits from a recorded raw bit file.
#[derive(Clone, Debug)]
pub struct FileSvOracle {
    bits: BitString,
    cursor: usize,
}

impl FileSvOracle {
    pub fn new(bits: BitString) -> FileSvOracle {
        FileSvOracle { bits, cursor: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.bits.len() - self.cursor
    }
}

impl SvOracle for FileSvOracle {
    fn next_bit(&mut self) -> Result<u8> {
        if self.cursor >= self.bits.len() {
            return Err(Error::SourceExhausted { consumed: self.cursor as u64, requested: 1 });
        }
        let bit = self.bits.bit(self.cursor);
        self.cursor += 1;
        Ok(bit)
    }

    fn bits_consumed(&self) -> u64 {
        self.cursor as u64
    }
}

/// Replays a recorded round log as the device. The inputs offered by the
/// protocol must reproduce the recorded ones bit for bit; anything else means
/// the log and the input source do not belong together.
#[derive(Clone, Debug)]
pub struct ReplayDevice {
    log: RoundLog,
    cursor: usize,
}

impl ReplayDevice {
    pub fn new(log: RoundLog) -> ReplayDevice {
        ReplayDevice { log, cursor: 0 }
    }
}

impl DeviceOracle for ReplayDevice {
    fn respond(&mut self, x: u8, y: u8, z: u8) -> Result<(u8, u8, u8)> {
        let round = self.log.rounds.get(self.cursor).ok_or(Error::SourceExhausted {
            consumed: self.cursor as u64,
            requested: 1,
        })?;
        if (round.x, round.y, round.z) != (x, y, z) {
            return Err(Error::ReplayInputMismatch {
                round: self.cursor as u64,
                lx: round.x,
                ly: round.y,
                lz: round.z,
                ox: x,
                oy: y,
                oz: z,
            });
        }
        self.cursor += 1;
        Ok((round.a, round.b, round.c))
    }
}
