//! Reference computations the suites check against.

use invmono::Mat;

/// `e^{tM} x` by scaling-and-squaring with a Taylor core (‖tM‖ halved until
/// below 1/2, 24 Taylor terms, then repeated squaring).
pub fn expm_times(m: &Mat, t: f64, x: &[f64]) -> Vec<f64> {
    let n = m.nrows();
    let mut scale = 0u32;
    let norm_est: f64 = (0..n)
        .map(|i| m.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
        * t.abs();
    while norm_est / (1u64 << scale) as f64 > 0.5 {
        scale += 1;
    }
    let h = t / (1u64 << scale) as f64;
    let mut term = Mat::identity(n);
    let mut sum = Mat::identity(n);
    for k in 1..25 {
        term = term.matmul(m);
        for i in 0..n {
            for j in 0..n {
                term[(i, j)] *= h / k as f64;
            }
        }
        for i in 0..n {
            for j in 0..n {
                sum[(i, j)] += term[(i, j)];
            }
        }
    }
    let mut acc = sum;
    for _ in 0..scale {
        acc = acc.matmul(&acc);
    }
    acc.matvec(x)
}
