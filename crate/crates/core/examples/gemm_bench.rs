//! Rough GEMM throughput probe for sizing long training runs.

use pinn_darts::linalg::{gemm_nt, Mat};
use std::time::Instant;

fn bench(m: usize, k: usize, n: usize, reps: usize) {
    let a = Mat::from_fn(m, k, |i, j| ((i * 31 + j * 17) % 97) as f64 * 0.01 - 0.3);
    let b = Mat::from_fn(n, k, |i, j| ((i * 13 + j * 29) % 89) as f64 * 0.01 - 0.4);
    let mut c = Mat::zeros(m, n);
    gemm_nt(1.0, &a, &b, 0.0, &mut c); // warm up
    let t0 = Instant::now();
    for _ in 0..reps {
        gemm_nt(1.0, &a, &b, 0.0, &mut c);
    }
    let dt = t0.elapsed().as_secs_f64();
    let macs = (m * k * n * reps) as f64;
    println!(
        "{m}x{k}x{n} x{reps}: {:.3}s  {:.2} GMAC/s",
        dt,
        macs / dt / 1e9
    );
}

fn main() {
    println!("threads: MATMUL_NUM_THREADS={:?}", std::env::var("MATMUL_NUM_THREADS"));
    bench(5120, 400, 400, 40);   // stacked-lane forward at paper scale
    bench(1024, 400, 400, 100);  // one chunk, one lane-block
    bench(2500, 64, 64, 400);    // small-profile shape
    bench(400, 5120, 400, 40);   // gradient accumulation shape
}
