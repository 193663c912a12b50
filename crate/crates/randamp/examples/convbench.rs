use rand::{Rng, SeedableRng};
use randamp::bitstore::BitString;
use randamp::ntt::cyclic_convolve_gf2;
use std::time::Instant;

fn main() {
    let n = 20_000_000;
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(1);
    let a = BitString::from_bits((0..n).map(|_| rng.gen::<u8>() & 1)).unwrap();
    let b = BitString::from_bits((0..n).map(|_| rng.gen::<u8>() & 1)).unwrap();
    let t = Instant::now();
    let c = cyclic_convolve_gf2(&a, &b).unwrap();
    let dt = t.elapsed();
    println!("n={} ones={} time={:?}  ({:.2} Mbit/s)", n, c.count_ones(), dt, n as f64 / dt.as_secs_f64() / 1e6);
}
