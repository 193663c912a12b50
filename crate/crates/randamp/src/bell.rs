//! Device behaviour estimation and entropy certification.
//!
//! From a round log the empirical behaviour `P_obs = {p(abc|xyz)}` is built,
//! the Mermin expression
//! `M = <A0 B1 C1> + <A1 B0 C1> + <A1 B1 C0> - <A0 B0 C0>` evaluated, and the
//! amount of signalling between the three sub-devices quantified. Devices
//! that cannot close the locality loophole (all co-located hardware) get one
//! of three semi-device-independent treatments:
//!
//! * Assumption A — signalling is random, not tailored to the inequality.
//!   The boost it would give is discarded: the worst case keeps `M_obs` and
//!   all `n` rounds.
//! * Assumption B — signalling is a fixed systematic effect. Worst case:
//!   signalling rounds saturate the inequality at 4, so the no-signalling
//!   rounds average `M_hat = (M_obs - 4 n_s)/(1 - n_s)` and only
//!   `n(1 - n_s)` rounds accumulate entropy.
//! * Assumption C — a mixture of both; its worst case is exactly B's.
//!
//! The signalling fraction is estimated from the observed behaviour as
//! `n_s = 6 * max s`, the pairwise quantifier maximised over the six ordered
//! party pairs, the receiver's (output, input) pair, and the bystander input;
//! the factor 6 covers non-overlapping signalling in every direction.

use serde::{Deserialize, Serialize};

use crate::bitstore::RoundLog;
use crate::entropy::{accumulate, adjust_mermin, mermin_guessing_prob, AccumulationMode};
use crate::error::{Error, Result};

/// `p(abc|xyz)` as empirical counts: 8 settings x 8 outcomes.
///
/// Settings and outcomes are indexed as `4x + 2y + z` and `4a + 2b + c`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BehaviorTable {
    pub counts: [[u64; 8]; 8],
    pub totals: [u64; 8],
}

#[inline]
pub fn setting_index(x: u8, y: u8, z: u8) -> usize {
    ((x as usize) << 2) | ((y as usize) << 1) | z as usize
}

#[inline]
pub fn outcome_index(a: u8, b: u8, c: u8) -> usize {
    ((a as usize) << 2) | ((b as usize) << 1) | c as usize
}

impl BehaviorTable {
    /// Empirical conditional frequencies from a round log. Every input triple
    /// must have been observed at least once.
    pub fn from_log(log: &RoundLog) -> Result<BehaviorTable> {
        let mut counts = [[0u64; 8]; 8];
        for r in &log.rounds {
            counts[setting_index(r.x, r.y, r.z)][outcome_index(r.a, r.b, r.c)] += 1;
        }
        BehaviorTable::from_counts(counts)
    }

    pub fn from_counts(counts: [[u64; 8]; 8]) -> Result<BehaviorTable> {
        let mut totals = [0u64; 8];
        for (s, row) in counts.iter().enumerate() {
            totals[s] = row.iter().sum();
            if totals[s] == 0 {
                return Err(Error::MissingSetting {
                    x: (s >> 2) as u8 & 1,
                    y: (s >> 1) as u8 & 1,
                    z: s as u8 & 1,
                });
            }
        }
        Ok(BehaviorTable { counts, totals })
    }

    /// `p(abc|xyz)`.
    pub fn prob(&self, setting: usize, outcome: usize) -> f64 {
        self.counts[setting][outcome] as f64 / self.totals[setting] as f64
    }

    pub fn rounds(&self) -> u64 {
        self.totals.iter().sum()
    }
}

/// `<Ax By Cz> = p(a+b+c even|xyz) - p(a+b+c odd|xyz)`.
pub fn correlator(table: &BehaviorTable, x: u8, y: u8, z: u8) -> f64 {
    let s = setting_index(x, y, z);
    (0..8usize)
        .map(|o| {
            let parity = (o.count_ones() & 1) as i32;
            (1 - 2 * parity) as f64 * table.prob(s, o)
        })
        .sum()
}

/// The Mermin expression of the observed behaviour; classical bound 2,
/// algebraic maximum 4.
pub fn mermin_value(table: &BehaviorTable) -> f64 {
    correlator(table, 0, 1, 1) + correlator(table, 1, 0, 1) + correlator(table, 1, 1, 0)
        - correlator(table, 0, 0, 0)
}

/// One of the three sub-devices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Party {
    A,
    B,
    C,
}

impl Party {
    pub const ALL: [Party; 3] = [Party::A, Party::B, Party::C];

    fn index(self) -> usize {
        match self {
            Party::A => 0,
            Party::B => 1,
            Party::C => 2,
        }
    }
}

/// Signalling quantifier of one ordered sender-receiver pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairSignalling {
    pub from: Party,
    pub to: Party,
    /// `max_{alpha,beta,gamma} |P(alpha|beta,gamma,xi=0) - P(alpha|beta,gamma,xi=1)|`.
    pub s: f64,
    /// Raw estimate minus its confidence width, floored at zero.
    pub s_debiased: f64,
    /// Hoeffding width of the difference at the maximising arguments.
    pub ci_width: f64,
    /// Maximising (receiver output, receiver input, bystander input); ties go
    /// to the lowest triple so reports are reproducible.
    pub argmax: (u8, u8, u8),
}

/// Signalling analysis of an observed behaviour.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignallingReport {
    /// The six ordered pairs in fixed order AB, AC, BA, BC, CA, CB.
    pub pairwise: Vec<PairSignalling>,
    pub max_pairwise: f64,
    /// Total signalling fraction `min(1, 6 * max_pairwise)`.
    pub n_s: f64,
    /// Same aggregate built from the debiased pairwise values.
    pub n_s_debiased: f64,
    /// Aggregation rule, recorded so certificates are self-describing.
    pub convention: String,
}

/// Default failure probability of the signalling confidence intervals.
pub const SIGNALLING_CI_EPS: f64 = 1e-2;

/// Receiver-output marginal `P(alpha | receiver beta, bystander gamma,
/// sender xi)` of the full behaviour.
fn receiver_marginal(
    table: &BehaviorTable,
    sender: Party,
    receiver: Party,
    bystander: Party,
    alpha: u8,
    beta: u8,
    gamma: u8,
    xi: u8,
) -> (f64, u64) {
    let mut inputs = [0u8; 3];
    inputs[sender.index()] = xi;
    inputs[receiver.index()] = beta;
    inputs[bystander.index()] = gamma;
    let s = setting_index(inputs[0], inputs[1], inputs[2]);
    let mut hit = 0u64;
    for o in 0..8usize {
        let bit = ((o >> (2 - receiver.index())) & 1) as u8;
        if bit == alpha {
            hit += table.counts[s][o];
        }
    }
    (hit as f64 / table.totals[s] as f64, table.totals[s])
}

/// Quantifies signalling for every ordered pair and aggregates the total
/// fraction `n_s`, with confidence widths at failure probability `ci_eps`.
pub fn signalling_fraction_with(table: &BehaviorTable, ci_eps: f64) -> Result<SignallingReport> {
    if !(ci_eps > 0.0 && ci_eps < 1.0) {
        return Err(Error::invalid("ci_eps", format!("need 0 < ci_eps < 1, got {ci_eps}")));
    }
    let mut pairwise = Vec::with_capacity(6);
    for &sender in &Party::ALL {
        for &receiver in &Party::ALL {
            if sender == receiver {
                continue;
            }
            let bystander = *Party::ALL
                .iter()
                .find(|p| **p != sender && **p != receiver)
                .expect("three distinct parties");
            let mut best = PairSignalling {
                from: sender,
                to: receiver,
                s: -1.0,
                s_debiased: 0.0,
                ci_width: 0.0,
                argmax: (0, 0, 0),
            };
            for alpha in 0..2u8 {
                for beta in 0..2u8 {
                    for gamma in 0..2u8 {
                        let (p0, n0) =
                            receiver_marginal(table, sender, receiver, bystander, alpha, beta, gamma, 0);
                        let (p1, n1) =
                            receiver_marginal(table, sender, receiver, bystander, alpha, beta, gamma, 1);
                        let s = (p0 - p1).abs();
                        if s > best.s {
                            let width = ((2.0 / ci_eps).ln() / (2.0 * n0 as f64)).sqrt()
                                + ((2.0 / ci_eps).ln() / (2.0 * n1 as f64)).sqrt();
                            best = PairSignalling {
                                from: sender,
                                to: receiver,
                                s,
                                s_debiased: (s - width).max(0.0),
                                ci_width: width,
                                argmax: (alpha, beta, gamma),
                            };
                        }
                    }
                }
            }
            pairwise.push(best);
        }
    }
    let max_pairwise = pairwise.iter().map(|p| p.s).fold(0.0, f64::max);
    let max_debiased = pairwise.iter().map(|p| p.s_debiased).fold(0.0, f64::max);
    Ok(SignallingReport {
        pairwise,
        max_pairwise,
        n_s: (6.0 * max_pairwise).min(1.0),
        n_s_debiased: (6.0 * max_debiased).min(1.0),
        convention: "n_s = 6 * max over ordered pairs of s(P_obs), clamped to [0,1]".to_string(),
    })
}

/// [`signalling_fraction_with`] at the default confidence level.
pub fn signalling_fraction(table: &BehaviorTable) -> SignallingReport {
    signalling_fraction_with(table, SIGNALLING_CI_EPS).expect("default ci_eps is valid")
}

/// The semi-device-independent signalling model in force.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Assumption {
    A,
    B,
    C,
}

/// Certified quantities for one run under a signalling assumption.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifiedEntropy {
    pub assumption: Assumption,
    /// Mermin value attributed to the no-signalling rounds.
    pub m_hat_ns: f64,
    /// Rounds that actually accumulate entropy.
    pub usable_rounds: u64,
    /// Input-adjusted Mermin bound fed to the guessing probability.
    pub m_u: f64,
    pub p_g: f64,
    /// `log2 p_Q` accumulated over the usable rounds.
    pub log2_pq: f64,
}

/// A certification either yields entropy or a typed refusal; statistical
/// failure is not an `Error`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum CertifyOutcome {
    Certified(CertifiedEntropy),
    NotCertifiable { reason: String },
}

/// Applies the signalling assumption, the imperfect-input adjustment and the
/// accumulation mode to one observed operating point.
pub fn certify_entropy(
    m_obs: f64,
    n: u64,
    n_s: f64,
    assumption: Assumption,
    eps_sv: f64,
    delta_f: f64,
    mode: &AccumulationMode,
) -> Result<CertifyOutcome> {
    if !(0.0..=1.0).contains(&n_s) {
        return Err(Error::invalid("n_s", format!("need n_s in [0,1], got {n_s}")));
    }
    if n == 0 {
        return Err(Error::invalid("n", "need at least one round"));
    }
    let (m_hat, usable) = match assumption {
        Assumption::A => {
            // M_hat_ns = M_obs/(1-n_s) <= 4 must stay consistent
            if n_s > 1.0 - m_obs / 4.0 {
                return Err(Error::invalid(
                    "n_s",
                    format!("n_s = {n_s} is inconsistent with M_obs = {m_obs}: the no-signalling rounds would average above 4"),
                ));
            }
            // random signalling only boosts the no-signalling average, so the
            // worst case discards the boost entirely
            (m_obs, n)
        }
        Assumption::B | Assumption::C => {
            if n_s >= 1.0 {
                return Ok(CertifyOutcome::NotCertifiable {
                    reason: "every round may be a signalling round".to_string(),
                });
            }
            ((m_obs - 4.0 * n_s) / (1.0 - n_s), (n as f64 * (1.0 - n_s)).floor() as u64)
        }
    };
    if m_hat <= 2.0 {
        return Ok(CertifyOutcome::NotCertifiable {
            reason: format!(
                "no-signalling Mermin value {m_hat:.4} is at or below the classical bound 2"
            ),
        });
    }
    if usable == 0 {
        return Ok(CertifyOutcome::NotCertifiable { reason: "no usable rounds left".to_string() });
    }
    let m_u = adjust_mermin(m_hat, eps_sv, delta_f)?;
    if m_u <= 2.0 {
        return Ok(CertifyOutcome::NotCertifiable {
            reason: format!(
                "input-adjusted Mermin value {m_u:.4} is at or below the classical bound 2"
            ),
        });
    }
    let p_g = mermin_guessing_prob(m_u)?;
    let log2_pq = accumulate(p_g, usable, mode)?;
    Ok(CertifyOutcome::Certified(CertifiedEntropy {
        assumption,
        m_hat_ns: m_hat,
        usable_rounds: usable,
        m_u,
        p_g,
        log2_pq,
    }))
}

/// Min-entropy over `n` rounds if the Assumption-A boost were taken instead
/// of discarded: `H = -n (1-n_s) log2 P_g(M_obs / (1-n_s))`.
///
/// This is non-decreasing in `n_s` on its valid domain, which is exactly why
/// the worst case under Assumption A is `n_s = 0`.
pub fn assumption_a_boosted_entropy(m_obs: f64, n: u64, n_s: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&n_s) || n_s > 1.0 - m_obs / 4.0 {
        return Err(Error::invalid(
            "n_s",
            format!("need 0 <= n_s <= 1 - M_obs/4, got {n_s} at M_obs = {m_obs}"),
        ));
    }
    let boosted = (m_obs / (1.0 - n_s)).min(4.0);
    let p_g = mermin_guessing_prob(boosted)?;
    Ok(-(n as f64) * (1.0 - n_s) * p_g.log2())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitstore::RoundRecord;

    /// Counts for a deterministic box: one outcome per setting, `n` each.
    fn deterministic_counts(f: impl Fn(u8, u8, u8) -> (u8, u8, u8), n: u64) -> [[u64; 8]; 8] {
        let mut counts = [[0u64; 8]; 8];
        for x in 0..2 {
            for y in 0..2 {
                for z in 0..2 {
                    let (a, b, c) = f(x, y, z);
                    counts[setting_index(x, y, z)][outcome_index(a, b, c)] = n;
                }
            }
        }
        counts
    }

    fn uniform_counts(n: u64) -> [[u64; 8]; 8] {
        [[n; 8]; 8]
    }

    #[test]
    fn estimate_behavior_requires_every_setting() {
        let log = RoundLog {
            rounds: vec![RoundRecord::new(0, 0, 0, 1, 1, 1)],
            ..Default::default()
        };
        match BehaviorTable::from_log(&log) {
            Err(Error::MissingSetting { x: 0, y: 0, z: 1 }) => {}
            other => panic!("expected the first absent setting to be named, got {other:?}"),
        }
    }

    #[test]
    fn correlator_extremes() {
        // all-even-parity box
        let even = BehaviorTable::from_counts(deterministic_counts(|_, _, _| (0, 0, 0), 10)).unwrap();
        for (x, y, z) in [(0, 0, 0), (0, 1, 1), (1, 0, 1), (1, 1, 0)] {
            assert_eq!(correlator(&even, x, y, z), 1.0);
        }
        let uniform = BehaviorTable::from_counts(uniform_counts(5)).unwrap();
        for (x, y, z) in [(0, 0, 0), (0, 1, 1), (1, 0, 1), (1, 1, 0)] {
            assert_eq!(correlator(&uniform, x, y, z), 0.0);
        }
        assert_eq!(mermin_value(&uniform), 0.0);
        assert_eq!(mermin_value(&even), 2.0, "even-parity boxes sit at the classical bound");
    }

    /// The deterministic box injected by the simulator: a = b = 0 and
    /// c = 1 iff (x,y,z) = (0,0,0).
    fn fixed_signalling_table() -> BehaviorTable {
        BehaviorTable::from_counts(deterministic_counts(
            |x, y, z| (0, 0, u8::from(x == 0 && y == 0 && z == 0)),
            1000,
        ))
        .unwrap()
    }

    #[test]
    fn fixed_signalling_box_saturates_mermin() {
        let table = fixed_signalling_table();
        assert_eq!(mermin_value(&table), 4.0);
    }

    #[test]
    fn fixed_signalling_box_has_unit_quantifier() {
        let report = signalling_fraction(&fixed_signalling_table());
        assert_eq!(report.max_pairwise, 1.0);
        assert_eq!(report.n_s, 1.0, "clamped at 1");
        // x -> C and y -> C signal; A and B outputs are constant
        let s_ac = report.pairwise.iter().find(|p| p.from == Party::A && p.to == Party::C).unwrap();
        let s_bc = report.pairwise.iter().find(|p| p.from == Party::B && p.to == Party::C).unwrap();
        let s_ab = report.pairwise.iter().find(|p| p.from == Party::A && p.to == Party::B).unwrap();
        assert_eq!(s_ac.s, 1.0);
        assert_eq!(s_bc.s, 1.0);
        assert_eq!(s_ab.s, 0.0);
    }

    #[test]
    fn non_signalling_table_reports_zero() {
        let report = signalling_fraction(&BehaviorTable::from_counts(uniform_counts(100)).unwrap());
        assert_eq!(report.max_pairwise, 0.0);
        assert_eq!(report.n_s, 0.0);
        assert_eq!(report.n_s_debiased, 0.0);
        assert_eq!(report.pairwise.len(), 6);
    }

    #[test]
    fn certify_without_signalling_matches_plain_pipeline() {
        let mode = AccumulationMode::Iid;
        for assumption in [Assumption::A, Assumption::B, Assumption::C] {
            match certify_entropy(3.35, 1000, 0.0, assumption, 0.0, 0.0, &mode).unwrap() {
                CertifyOutcome::Certified(cert) => {
                    assert_eq!(cert.m_hat_ns, 3.35);
                    assert_eq!(cert.usable_rounds, 1000);
                    assert_eq!(cert.m_u, 3.35);
                    let expected = 1000.0 * mermin_guessing_prob(3.35).unwrap().log2();
                    assert!((cert.log2_pq - expected).abs() < 1e-9);
                }
                other => panic!("expected certification, got {other:?}"),
            }
        }
    }

    #[test]
    fn certify_assumption_b_formula() {
        match certify_entropy(3.35, 1_000_000, 0.03, Assumption::B, 0.0, 0.0, &AccumulationMode::Iid)
            .unwrap()
        {
            CertifyOutcome::Certified(cert) => {
                assert!((cert.m_hat_ns - 3.3299).abs() < 1e-4, "got {}", cert.m_hat_ns);
                assert_eq!(cert.usable_rounds, 970_000);
            }
            other => panic!("{other:?}"),
        }
        match certify_entropy(3.0, 100, 0.25, Assumption::B, 0.0, 0.0, &AccumulationMode::Iid)
            .unwrap()
        {
            CertifyOutcome::Certified(cert) => {
                assert!((cert.m_hat_ns - 8.0 / 3.0).abs() < 1e-12);
                assert_eq!(cert.usable_rounds, 75);
            }
            other => panic!("{other:?}"),
        }
        match certify_entropy(3.0, 100, 0.3, Assumption::B, 0.0, 0.0, &AccumulationMode::Iid)
            .unwrap()
        {
            CertifyOutcome::Certified(cert) => {
                assert!((cert.m_hat_ns - 1.8 / 0.7).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn certify_refusals_and_inconsistency() {
        let mode = AccumulationMode::Iid;
        // B with the hit pushing M_hat to the classical bound: (3-2)/0.5 = 2
        let out = certify_entropy(3.0, 100, 0.5, Assumption::B, 0.0, 0.0, &mode).unwrap();
        assert!(matches!(out, CertifyOutcome::NotCertifiable { .. }), "got {out:?}");
        // A consistency: n_s cannot exceed 1 - M_obs/4
        assert!(certify_entropy(3.35, 100, 0.5, Assumption::A, 0.0, 0.0, &mode).is_err());
        // C takes the same hit as B
        let b = certify_entropy(3.2, 1000, 0.05, Assumption::B, 0.01, 1e-3, &mode).unwrap();
        let c = certify_entropy(3.2, 1000, 0.05, Assumption::C, 0.01, 1e-3, &mode).unwrap();
        match (b, c) {
            (CertifyOutcome::Certified(b), CertifyOutcome::Certified(c)) => {
                assert_eq!(b.m_hat_ns, c.m_hat_ns);
                assert_eq!(b.usable_rounds, c.usable_rounds);
                assert_eq!(b.log2_pq, c.log2_pq);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn certified_entropy_decreases_with_signalling_under_b() {
        let mut prev: Option<f64> = None;
        for i in 0..20 {
            let n_s = i as f64 * 0.01;
            let out =
                certify_entropy(3.35, 1_000_000, n_s, Assumption::B, 0.0, 0.0, &AccumulationMode::Iid)
                    .unwrap();
            let entropy = match out {
                CertifyOutcome::Certified(c) => -c.log2_pq,
                CertifyOutcome::NotCertifiable { .. } => 0.0,
            };
            if let Some(p) = prev {
                assert!(entropy <= p + 1e-9, "entropy must not grow with n_s, step {i}");
            }
            prev = Some(entropy);
        }
    }

    #[test]
    fn assumption_a_boost_is_non_decreasing() {
        let mut prev: Option<f64> = None;
        for i in 0..16 {
            let n_s = i as f64 * 0.01;
            let h = assumption_a_boosted_entropy(3.35, 1_000_000, n_s).unwrap();
            if let Some(p) = prev {
                assert!(h >= p - 1e-9, "the A-boost must not decrease, step {i}");
            }
            prev = Some(h);
        }
        assert!(assumption_a_boosted_entropy(3.35, 100, 0.9).is_err());
    }
}
