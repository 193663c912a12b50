//! One-time statevector validation of the analytic device model.
//!
//! The simulator's correlator table (inputs 0 -> Pauli Y, 1 -> Pauli X on the
//! GHZ state with the `i` phase) is checked against a literal three-qubit
//! amplitude computation over all 8 settings and 8 outcomes.

use num_complex::Complex64;
use randamp::sim::ghz_conditional;

type C = Complex64;

/// Eigenvector of the chosen Pauli operator with eigenvalue `(-1)^outcome`,
/// as amplitudes over the computational basis.
fn eigenvector(input: u8, outcome: u8) -> [C; 2] {
    let inv_sqrt2 = C::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let sign = if outcome == 0 { 1.0 } else { -1.0 };
    match input {
        // Y: (|0> + i (-1)^a |1>)/sqrt(2)
        0 => [inv_sqrt2, C::new(0.0, sign) * inv_sqrt2],
        // X: (|0> + (-1)^a |1>)/sqrt(2)
        _ => [inv_sqrt2, C::new(sign, 0.0) * inv_sqrt2],
    }
}

fn statevector_probability(x: u8, y: u8, z: u8, a: u8, b: u8, c: u8) -> f64 {
    // |psi> = (|000> + i|111>)/sqrt(2)
    let inv_sqrt2 = C::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let psi_000 = inv_sqrt2;
    let psi_111 = C::new(0.0, 1.0) * inv_sqrt2;

    let va = eigenvector(x, a);
    let vb = eigenvector(y, b);
    let vc = eigenvector(z, c);
    let amp = (va[0] * vb[0] * vc[0]).conj() * psi_000 + (va[1] * vb[1] * vc[1]).conj() * psi_111;
    amp.norm_sqr()
}

#[test]
fn analytic_model_matches_statevector_at_full_visibility() {
    for x in 0..2u8 {
        for y in 0..2u8 {
            for z in 0..2u8 {
                for a in 0..2u8 {
                    for b in 0..2u8 {
                        for c in 0..2u8 {
                            let exact = statevector_probability(x, y, z, a, b, c);
                            let model = ghz_conditional(x, y, z, a, b, c, 1.0);
                            assert!(
                                (exact - model).abs() < 1e-12,
                                "p({a}{b}{c}|{x}{y}{z}): statevector {exact}, model {model}"
                            );
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn statevector_mermin_value_is_four() {
    // <A_x B_y C_z> with the 0 -> Y convention
    let correlator = |x: u8, y: u8, z: u8| -> f64 {
        let mut e = 0.0;
        for a in 0..2u8 {
            for b in 0..2u8 {
                for c in 0..2u8 {
                    let sign = if (a ^ b ^ c) == 0 { 1.0 } else { -1.0 };
                    e += sign * statevector_probability(x, y, z, a, b, c);
                }
            }
        }
        e
    };
    let m = correlator(0, 1, 1) + correlator(1, 0, 1) + correlator(1, 1, 0) - correlator(0, 0, 0);
    assert!((m - 4.0).abs() < 1e-12, "M = {m}");
}
