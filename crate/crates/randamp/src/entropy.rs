//! Scalar entropy and rate mathematics.
//!
//! Everything downstream of the Bell statistics is a handful of closed-form
//! maps between scalars:
//!
//! * an imperfect-RNG bias `eps_sv` gives the per-bit rate
//!   `c_sv = -log2(1/2 + eps_sv)`;
//! * an adjusted Mermin value `M` bounds the adversary's guessing probability
//!   for the outcome pair `(a, b)` piecewise:
//!   `3/4 - M/8 + sqrt(3) sqrt((M/8)(1/2 - M/8))` for `M >= 3`,
//!   `3/2 - M/4` on `2 < M <= 3`, and `1` at or below the classical bound;
//! * the observed value is corrected for imperfect inputs and finite
//!   statistics through `M_U = 4 - (4 - M_obs + Delta_f) / (8(1/2-eps_sv)^3)`;
//! * guessing probabilities accumulate over `n` rounds either as a plain
//!   product (IID) or with the memory-attack penalty `2^(-nt + v sqrt(n))`,
//!   whose coefficient `v` is calibration-supplied, not derived.
//!
//! On top sit the solvers: the largest amplifiable `eps_sv` for a given
//! device, and the protocol efficiency `eta = m2 / n_rounds`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extractors::{dodis_output_size, raz_params, Adversary};
use crate::ntt::next_artin_prime;

/// Quality of a Santha-Vazirani source.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvQuality {
    pub eps_sv: f64,
    /// Per-bit min-entropy rate, `-log2(1/2 + eps_sv)`.
    pub c_sv: f64,
}

impl SvQuality {
    pub fn new(eps_sv: f64) -> Result<SvQuality> {
        Ok(SvQuality { eps_sv, c_sv: sv_rate(eps_sv)? })
    }
}

/// Per-bit guessing rate of an SV source: `c_sv = -log2(1/2 + eps_sv)`.
pub fn sv_rate(eps_sv: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&eps_sv) {
        return Err(Error::invalid("eps_sv", format!("need 0 <= eps_sv <= 1/2, got {eps_sv}")));
    }
    Ok(-(0.5 + eps_sv).log2())
}

/// Maximum probability of guessing the outcome pair `(a, b)` given a Mermin
/// value `M`. Returns 1 at or below the classical bound `M <= 2`; values
/// above the algebraic maximum 4 are rejected.
pub fn mermin_guessing_prob(m: f64) -> Result<f64> {
    if m > 4.0 {
        return Err(Error::invalid("m", format!("{m} exceeds the algebraic maximum 4")));
    }
    if m <= 2.0 {
        return Ok(1.0);
    }
    if m <= 3.0 {
        Ok(1.5 - m / 4.0)
    } else {
        let r = m / 8.0;
        Ok(0.75 - r + 3.0f64.sqrt() * (r * (0.5 - r)).sqrt())
    }
}

/// Lower bound `M_U` on the Mermin value against a perfect-input referee,
/// given the observed value, the input bias and the estimation confidence
/// width: `M_U = 4 - (4 - M_obs + Delta_f) / (8 (1/2 - eps_sv)^3)`.
///
/// Callers must treat `M_U <= 2` as "no certifiable randomness".
pub fn adjust_mermin(m_obs: f64, eps_sv: f64, delta_f: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&eps_sv) {
        return Err(Error::invalid(
            "eps_sv",
            format!("adjustment needs 0 <= eps_sv < 1/2, got {eps_sv}"),
        ));
    }
    if !(delta_f >= 0.0) {
        return Err(Error::invalid("delta_f", format!("need Delta_f >= 0, got {delta_f}")));
    }
    let half_gap = 0.5 - eps_sv;
    Ok(4.0 - (4.0 - m_obs + delta_f) / (8.0 * half_gap * half_gap * half_gap))
}

/// How single-round guessing probabilities combine over `n` rounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AccumulationMode {
    /// Independent identical rounds: the guessing probabilities multiply.
    Iid,
    /// Memory-based quantum attacks: `log2 p_Q[n] = -n t + v sqrt(n)` with
    /// `t = -log2 P_g`. The penalty coefficient `v` is supplied by
    /// configuration (see [`calibrate_v`]); the theory behind its exact value
    /// is not reproduced here.
    Mbqa { v: f64 },
}

/// `log2` of the probability of guessing all `2n` outcome bits of `n` rounds.
/// Clamped at zero: a probability never exceeds one.
pub fn accumulate(p_g: f64, n: u64, mode: &AccumulationMode) -> Result<f64> {
    if !(p_g > 0.0 && p_g <= 1.0) {
        return Err(Error::invalid("p_g", format!("need 0 < P_g <= 1, got {p_g}")));
    }
    if n < 1 {
        return Err(Error::invalid("n", "need at least one round"));
    }
    let t = -p_g.log2();
    let raw = match mode {
        AccumulationMode::Iid => -(n as f64) * t,
        AccumulationMode::Mbqa { v } => {
            if !(*v >= 0.0) {
                return Err(Error::invalid("v", format!("need v >= 0, got {v}")));
            }
            -(n as f64) * t + v * (n as f64).sqrt()
        }
    };
    Ok(raw.min(0.0))
}

/// Hoeffding-style width of the Mermin estimation confidence interval: each
/// round shifts the estimator by at most the full range 8 of the Mermin
/// expression, so `Delta_f = 8 sqrt(ln(2/eps_est) / (2n))`.
///
/// Fixed-width overrides are routine when reproducing published operating
/// points; this is the default policy, not a law.
pub fn confidence_width(n: u64, eps_est: f64) -> Result<f64> {
    if n < 1 {
        return Err(Error::invalid("n", "need at least one round"));
    }
    if !(eps_est > 0.0 && eps_est < 1.0) {
        return Err(Error::invalid("eps_est", format!("need 0 < eps_est < 1, got {eps_est}")));
    }
    Ok(8.0 * ((2.0 / eps_est).ln() / (2.0 * n as f64)).sqrt())
}

/// Which two-source construction the rate analysis assumes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TwoSourceExtractor {
    Dodis,
    Raz,
}

/// Entropy accounting for rate curves and solvers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Accounting {
    /// IID rounds in the `n -> infinity` limit; additive constants of the
    /// output-size formula are dropped.
    IidAsymptotic,
    /// IID rounds at finite block size, all constants kept.
    Iid { n_rounds: u64 },
    /// Memory-based quantum attacks at finite block size.
    Mbqa { v: f64, n_rounds: u64 },
}

impl Accounting {
    fn n_rounds(&self) -> Option<u64> {
        match self {
            Accounting::IidAsymptotic => None,
            Accounting::Iid { n_rounds } | Accounting::Mbqa { n_rounds, .. } => Some(*n_rounds),
        }
    }

    fn accumulation(&self) -> AccumulationMode {
        match self {
            Accounting::IidAsymptotic | Accounting::Iid { .. } => AccumulationMode::Iid,
            Accounting::Mbqa { v, .. } => AccumulationMode::Mbqa { v: *v },
        }
    }
}

/// Default solver tolerance on `eps_sv`, matching three-decimal reporting.
pub const SOLVER_TOLERANCE: f64 = 1e-4;

/// The hard ceiling of the Raz-style construction: it needs
/// `c_sv > 1/2`, i.e. `eps_sv < 2^(-1/2) - 1/2`.
pub fn raz_eps_cap() -> f64 {
    0.5f64.sqrt() - 0.5
}

/// Largest `eps_sv` that still leaves a strictly positive output, to
/// [`SOLVER_TOLERANCE`]. Returns 0 when not even a perfect source works.
pub fn max_sv_solver(
    m_obs: f64,
    delta_f: f64,
    extractor: TwoSourceExtractor,
    accounting: &Accounting,
    eps_sec: f64,
) -> Result<f64> {
    if m_obs > 4.0 {
        return Err(Error::invalid("m_obs", format!("{m_obs} exceeds the algebraic maximum 4")));
    }
    if m_obs <= 2.0 {
        return Ok(0.0);
    }
    let margin = |eps: f64| -> Result<f64> { output_margin(m_obs, eps, delta_f, extractor, accounting, eps_sec) };

    match extractor {
        TwoSourceExtractor::Raz => {
            let cap = raz_eps_cap();
            if margin(cap)? > 0.0 {
                return Ok(cap);
            }
            bisect_largest_positive(&margin, cap)
        }
        TwoSourceExtractor::Dodis => bisect_largest_positive(&margin, 0.5),
    }
}

/// Signed abundance of extractable randomness at a given `eps_sv`; positive
/// means a nonzero output size.
fn output_margin(
    m_obs: f64,
    eps_sv: f64,
    delta_f: f64,
    extractor: TwoSourceExtractor,
    accounting: &Accounting,
    eps_sec: f64,
) -> Result<f64> {
    let c_sv = sv_rate(eps_sv.min(0.5))?;
    let m_u = adjust_mermin(m_obs, eps_sv.min(0.5 - f64::EPSILON), delta_f)?;
    let p_g = mermin_guessing_prob(m_u.min(4.0))?;
    let t = -p_g.log2();
    match (extractor, accounting) {
        (TwoSourceExtractor::Dodis, Accounting::IidAsymptotic) => Ok(c_sv + t / 2.0 - 1.0),
        (TwoSourceExtractor::Raz, Accounting::IidAsymptotic) => {
            // positive output needs an exploitable excess on both sources
            Ok((c_sv - 0.5).min(m_u - 2.0))
        }
        (TwoSourceExtractor::Dodis, _) => {
            let n = accounting.n_rounds().expect("finite accounting");
            let bits = 2.0 * n as f64;
            let log2_pq = accumulate(p_g, n, &accounting.accumulation())?;
            Ok((bits * c_sv - log2_pq - 8.0 * (1.0 / eps_sec).log2() + 10.0
                - 4.0 * 3.0f64.log2()
                - bits)
                / 5.0)
        }
        (TwoSourceExtractor::Raz, _) => {
            let n = accounting.n_rounds().expect("finite accounting");
            let log2_pq = accumulate(p_g, n, &accounting.accumulation())?;
            Ok((c_sv - 0.5).min(-log2_pq))
        }
    }
}

fn bisect_largest_positive(margin: &dyn Fn(f64) -> Result<f64>, hi_cap: f64) -> Result<f64> {
    let mut lo = 0.0;
    let mut hi = hi_cap;
    if margin(lo)? <= 0.0 {
        return Ok(0.0);
    }
    if margin(hi)? > 0.0 {
        return Ok(hi);
    }
    while hi - lo > SOLVER_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if margin(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Fits the memory-attack penalty coefficient so that the solver reproduces a
/// designated published operating point exactly at its certification
/// boundary, i.e. `v` such that the output margin vanishes at
/// `eps_sv = target_eps_sv`.
pub fn calibrate_v(
    m_obs: f64,
    delta_f: f64,
    eps_sec: f64,
    n_rounds: u64,
    extractor: TwoSourceExtractor,
    target_eps_sv: f64,
) -> Result<f64> {
    let margin_at = |v: f64| -> Result<f64> {
        output_margin(
            m_obs,
            target_eps_sv,
            delta_f,
            extractor,
            &Accounting::Mbqa { v, n_rounds },
            eps_sec,
        )
    };
    let mut lo = 0.0f64;
    let mut hi = 1e5f64;
    if margin_at(lo)? <= 0.0 {
        return Err(Error::invalid(
            "target_eps_sv",
            "unreachable even without a memory penalty (v = 0)",
        ));
    }
    if margin_at(hi)? > 0.0 {
        return Err(Error::invalid("target_eps_sv", "no penalty coefficient below 1e5 fits"));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if margin_at(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The designated calibration point for the default `v`: the published
/// maximum `eps_sv` of the strongest machine at `n = 10^7` rounds with the
/// implemented two-source extractor, `Delta_f = 10^-3`, `eps_sec = 10^-7`.
pub fn default_calibrated_v() -> f64 {
    calibrate_v(3.35, 1e-3, 1e-7, 10_000_000, TwoSourceExtractor::Dodis, 0.067)
        .expect("the default calibration point is solvable")
}

/// Everything the rate analysis certifies for one operating point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub m_obs: f64,
    pub m_u: f64,
    pub delta_f: f64,
    /// Certified min-entropy rate per device output bit.
    pub c_q: f64,
    /// `log2 p_Q` over all rounds; absent in the asymptotic limit.
    pub log2_pq: Option<f64>,
    /// Output size in bits; absent in the asymptotic limit.
    pub m2: Option<u64>,
    /// Artin-prime block length used for sizing; absent in the asymptotic limit.
    pub block_len: Option<u64>,
    /// Output bits per device round.
    pub eta: f64,
    /// Set when `M_U <= 2`, in which case no randomness is certified.
    pub below_classical: bool,
}

/// Protocol efficiency `eta = m2 / n_rounds` and the quantities behind it.
pub fn efficiency(
    m_obs: f64,
    eps_sv: f64,
    delta_f: f64,
    eps_sec: f64,
    extractor: TwoSourceExtractor,
    accounting: &Accounting,
) -> Result<RateReport> {
    if eps_sv == 0.5 {
        // a deterministic source certifies nothing; keep adjust_mermin's domain
        return Ok(RateReport {
            m_obs,
            m_u: f64::NEG_INFINITY,
            delta_f,
            c_q: 0.0,
            log2_pq: None,
            m2: accounting.n_rounds().map(|_| 0),
            block_len: None,
            eta: 0.0,
            below_classical: true,
        });
    }
    let m_u = adjust_mermin(m_obs, eps_sv, delta_f)?;
    if m_u <= 2.0 {
        return Ok(RateReport {
            m_obs,
            m_u,
            delta_f,
            c_q: 0.0,
            log2_pq: None,
            m2: accounting.n_rounds().map(|_| 0),
            block_len: None,
            eta: 0.0,
            below_classical: true,
        });
    }
    let c_sv = sv_rate(eps_sv)?;
    let p_g = mermin_guessing_prob(m_u)?;
    let t = -p_g.log2();
    match accounting {
        Accounting::IidAsymptotic => {
            let c_q = t / 2.0;
            let eta = match extractor {
                TwoSourceExtractor::Dodis => (2.0 * (c_sv + c_q - 1.0) / 5.0).max(0.0),
                TwoSourceExtractor::Raz => ((c_sv - 0.5).max(0.0) / 18.5 * t).max(0.0),
            };
            Ok(RateReport {
                m_obs,
                m_u,
                delta_f,
                c_q,
                log2_pq: None,
                m2: None,
                block_len: None,
                eta,
                below_classical: false,
            })
        }
        Accounting::Iid { n_rounds } | Accounting::Mbqa { n_rounds, .. } => {
            let n = *n_rounds;
            let log2_pq = accumulate(p_g, n, &accounting.accumulation())?;
            let block = next_artin_prime(2 * n)?.value();
            let m2 = match extractor {
                TwoSourceExtractor::Dodis => dodis_output_size(
                    -(2.0 * n as f64) * c_sv,
                    log2_pq,
                    block,
                    eps_sec,
                    Adversary::Quantum,
                )?,
                TwoSourceExtractor::Raz => raz_params(c_sv, log2_pq).m2,
            };
            Ok(RateReport {
                m_obs,
                m_u,
                delta_f,
                c_q: -log2_pq / (2.0 * n as f64),
                log2_pq: Some(log2_pq),
                m2: Some(m2),
                block_len: Some(block),
                eta: m2 as f64 / n as f64,
                below_classical: false,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sv_rate_endpoints_and_published_point() {
        assert_eq!(sv_rate(0.0).unwrap(), 1.0);
        assert_eq!(sv_rate(0.5).unwrap(), 0.0);
        assert!((sv_rate(0.036).unwrap() - 0.900).abs() < 5e-4);
        assert!(sv_rate(0.6).is_err());
        assert!(sv_rate(-0.1).is_err());
        // strictly decreasing
        assert!(sv_rate(0.1).unwrap() > sv_rate(0.2).unwrap());
    }

    #[test]
    fn guessing_prob_branches() {
        assert_eq!(mermin_guessing_prob(2.0).unwrap(), 1.0);
        assert_eq!(mermin_guessing_prob(1.0).unwrap(), 1.0);
        assert!((mermin_guessing_prob(3.0).unwrap() - 0.75).abs() < 1e-12);
        assert!((mermin_guessing_prob(4.0).unwrap() - 0.25).abs() < 1e-12);
        assert!(mermin_guessing_prob(4.1).is_err());
    }

    #[test]
    fn guessing_prob_continuous_and_monotone() {
        let lower: f64 = 1.5 - 3.0 / 4.0;
        let upper: f64 = 0.75 - 3.0 / 8.0 + 3.0f64.sqrt() * ((3.0f64 / 8.0) * (0.5 - 3.0 / 8.0)).sqrt();
        assert!((lower - upper).abs() < 1e-12, "both branches agree at M = 3");

        let mut prev = mermin_guessing_prob(2.0001).unwrap();
        let mut m = 2.0101;
        while m <= 4.0 {
            let cur = mermin_guessing_prob(m).unwrap();
            assert!(cur <= prev + 1e-12, "P_g must not increase, M = {m}");
            prev = cur;
            m += 0.01;
        }
    }

    #[test]
    fn adjust_mermin_values() {
        assert_eq!(adjust_mermin(3.35, 0.0, 0.0).unwrap(), 3.35);
        let boundary = adjust_mermin(3.35, 0.156, 1e-3).unwrap();
        assert!((boundary - 2.0).abs() < 5e-3, "certification boundary, got {boundary}");
        let m_u = adjust_mermin(3.35, 0.05, 1e-2).unwrap();
        assert!((m_u - 3.0947).abs() < 1e-4, "got {m_u}");
        assert!(adjust_mermin(3.35, 0.5, 0.0).is_err());
        assert!(adjust_mermin(3.35, 0.05, -0.1).is_err());
    }

    #[test]
    fn accumulate_modes() {
        assert_eq!(accumulate(1.0, 100, &AccumulationMode::Iid).unwrap(), 0.0);
        assert_eq!(accumulate(0.25, 100, &AccumulationMode::Iid).unwrap(), -200.0);
        let mbqa = accumulate(0.25, 10_000, &AccumulationMode::Mbqa { v: 10.0 }).unwrap();
        assert_eq!(mbqa, -19_000.0);
        // the penalty never pushes a log probability above zero
        assert_eq!(accumulate(0.25, 4, &AccumulationMode::Mbqa { v: 100.0 }).unwrap(), 0.0);
        assert!(accumulate(0.0, 10, &AccumulationMode::Iid).is_err());
        assert!(accumulate(0.5, 0, &AccumulationMode::Iid).is_err());
    }

    #[test]
    fn iid_entropy_lower_bounds_mbqa() {
        for v in [0.0, 1.0, 50.0] {
            for n in [10u64, 1_000, 1_000_000] {
                let iid = accumulate(0.7, n, &AccumulationMode::Iid).unwrap();
                let mbqa = accumulate(0.7, n, &AccumulationMode::Mbqa { v }).unwrap();
                assert!(mbqa >= iid);
            }
        }
    }

    #[test]
    fn confidence_width_values() {
        let w = confidence_width(100_000_000, 1e-7).unwrap();
        assert!((w - 2.3194e-3).abs() < 1e-6, "got {w}");
        assert!(confidence_width(1u64 << 40, 1e-7).unwrap() < 1e-4);
        assert!(confidence_width(0, 0.1).is_err());
    }

    #[test]
    fn solver_iid_published_tables() {
        let acc = Accounting::IidAsymptotic;
        let cases = [
            (3.35, TwoSourceExtractor::Dodis, 0.073),
            (3.35, TwoSourceExtractor::Raz, 0.156),
            (3.11, TwoSourceExtractor::Dodis, 0.054),
            (3.11, TwoSourceExtractor::Raz, 0.118),
        ];
        for (m_obs, ext, expected) in cases {
            let got = max_sv_solver(m_obs, 1e-3, ext, &acc, 1e-7).unwrap();
            assert!((got - expected).abs() <= 1e-3, "M={m_obs} {ext:?}: got {got}, want {expected}");
        }
    }

    #[test]
    fn solver_raz_cap_region() {
        let acc = Accounting::IidAsymptotic;
        let cap = raz_eps_cap();
        for m_obs in [3.6, 3.7, 3.8, 3.9] {
            let got = max_sv_solver(m_obs, 1e-3, TwoSourceExtractor::Raz, &acc, 1e-7).unwrap();
            assert!((got - cap).abs() < 5e-4, "flat region at M={m_obs}, got {got}");
        }
        // just below the flat region the M_U = 2 root binds instead
        let below = max_sv_solver(3.55, 1e-3, TwoSourceExtractor::Raz, &acc, 1e-7).unwrap();
        assert!(below < cap - 5e-4, "got {below}");
        // and the hard cap holds over the whole domain
        let mut m_obs = 2.05;
        while m_obs <= 4.0 {
            let got = max_sv_solver(m_obs, 1e-3, TwoSourceExtractor::Raz, &acc, 1e-7).unwrap();
            assert!(got <= 0.2072, "cap exceeded at M_obs={m_obs}: {got}");
            m_obs += 0.05;
        }
    }

    #[test]
    fn solver_no_solution_cases() {
        let acc = Accounting::IidAsymptotic;
        assert_eq!(max_sv_solver(2.0, 1e-3, TwoSourceExtractor::Dodis, &acc, 1e-7).unwrap(), 0.0);
        assert_eq!(
            max_sv_solver(2.0005, 1e-3, TwoSourceExtractor::Dodis, &acc, 1e-7).unwrap(),
            0.0,
            "M_obs - Delta_f below the classical bound"
        );
        assert!(max_sv_solver(4.2, 1e-3, TwoSourceExtractor::Dodis, &acc, 1e-7).is_err());
    }

    #[test]
    fn calibration_reproduces_designated_entry() {
        let v = default_calibrated_v();
        assert!(v > 0.0);
        let got = max_sv_solver(
            3.35,
            1e-3,
            TwoSourceExtractor::Dodis,
            &Accounting::Mbqa { v, n_rounds: 10_000_000 },
            1e-7,
        )
        .unwrap();
        assert!((got - 0.067).abs() <= 2e-4, "calibrated solver returned {got}");
    }

    #[test]
    fn efficiency_asymptotic_operating_points() {
        let report = efficiency(
            3.57,
            0.05,
            0.0,
            1e-7,
            TwoSourceExtractor::Dodis,
            &Accounting::IidAsymptotic,
        )
        .unwrap();
        assert!((report.eta - 0.07795).abs() < 1e-4, "eta {}", report.eta);

        let report = efficiency(
            3.8,
            0.05,
            0.0,
            1e-7,
            TwoSourceExtractor::Dodis,
            &Accounting::IidAsymptotic,
        )
        .unwrap();
        assert!((report.eta - 0.14317).abs() < 1e-4, "eta {}", report.eta);
    }

    #[test]
    fn efficiency_deterministic_source_is_zero() {
        let report = efficiency(
            3.8,
            0.5,
            0.0,
            1e-7,
            TwoSourceExtractor::Dodis,
            &Accounting::IidAsymptotic,
        )
        .unwrap();
        assert_eq!(report.eta, 0.0);
        assert!(report.below_classical);
    }

    #[test]
    fn efficiency_finite_pipeline() {
        let v = default_calibrated_v();
        let report = efficiency(
            3.35,
            0.05,
            1e-2,
            1e-7,
            TwoSourceExtractor::Dodis,
            &Accounting::Mbqa { v, n_rounds: 10_000_000 },
        )
        .unwrap();
        let m2 = report.m2.unwrap();
        assert!(report.block_len.unwrap() >= 20_000_000);
        // the published order of magnitude: a few times 10^5 output bits
        assert!(m2 > 100_000 && m2 < 1_000_000, "m2 = {m2}");
        assert!(report.eta > 0.0 && report.eta < 0.1);
    }

    #[test]
    fn efficiency_monotone_on_grid() {
        let acc = Accounting::IidAsymptotic;
        let mut prev = None;
        for m_obs in [3.0, 3.2, 3.4, 3.6, 3.8, 4.0] {
            let eta =
                efficiency(m_obs, 0.05, 1e-3, 1e-7, TwoSourceExtractor::Dodis, &acc).unwrap().eta;
            if let Some(p) = prev {
                assert!(eta >= p, "eta must not decrease in M_obs");
            }
            prev = Some(eta);
        }
        let mut prev = None;
        for eps in [0.0, 0.02, 0.05, 0.08, 0.12, 0.2, 0.3] {
            let eta =
                efficiency(3.8, eps, 1e-3, 1e-7, TwoSourceExtractor::Dodis, &acc).unwrap().eta;
            if let Some(p) = prev {
                assert!(eta <= p, "eta must not increase in eps_sv");
            }
            prev = Some(eta);
        }
    }

    #[test]
    fn mbqa_efficiency_below_iid() {
        let v = default_calibrated_v();
        for m_obs in [3.2, 3.35, 3.6, 3.8] {
            let iid = efficiency(
                m_obs,
                0.05,
                1e-2,
                1e-7,
                TwoSourceExtractor::Dodis,
                &Accounting::Iid { n_rounds: 10_000_000 },
            )
            .unwrap()
            .eta;
            let mbqa = efficiency(
                m_obs,
                0.05,
                1e-2,
                1e-7,
                TwoSourceExtractor::Dodis,
                &Accounting::Mbqa { v, n_rounds: 10_000_000 },
            )
            .unwrap()
            .eta;
            assert!(mbqa <= iid, "penalty must not help: M={m_obs}");
        }
    }
}
