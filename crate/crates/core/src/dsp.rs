//! Small signal helpers shared across modules.

use realfft::RealFftPlanner;

/// Linear convolution truncated to `out_len` samples.
///
/// Kernels with few non-zero taps are applied directly, which keeps pure
/// delays and gains exact; anything denser goes through an FFT.
pub fn convolve(signal: &[f64], kernel: &[f64], out_len: usize) -> Vec<f64> {
    let nonzero: Vec<(usize, f64)> = kernel
        .iter()
        .enumerate()
        .filter(|(_, &k)| k != 0.0)
        .map(|(i, &k)| (i, k))
        .collect();
    if nonzero.is_empty() || signal.is_empty() {
        return vec![0.0; out_len];
    }
    if nonzero.len() <= 64 {
        let mut out = vec![0.0; out_len];
        for (lag, k) in nonzero {
            for (n, o) in out.iter_mut().enumerate().skip(lag) {
                let i = n - lag;
                if i >= signal.len() {
                    break;
                }
                *o += k * signal[i];
            }
        }
        return out;
    }
    fft_convolve(signal, kernel, out_len)
}

/// FFT-based linear convolution truncated to `out_len` samples.
pub fn fft_convolve(signal: &[f64], kernel: &[f64], out_len: usize) -> Vec<f64> {
    let full = signal.len() + kernel.len() - 1;
    let n = full.next_power_of_two();
    let mut planner = RealFftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);

    let mut a = fwd.make_input_vec();
    a[..signal.len()].copy_from_slice(signal);
    let mut b = fwd.make_input_vec();
    b[..kernel.len()].copy_from_slice(kernel);
    let mut fa = fwd.make_output_vec();
    let mut fb = fwd.make_output_vec();
    fwd.process(&mut a, &mut fa).expect("sized by planner");
    fwd.process(&mut b, &mut fb).expect("sized by planner");
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    fa[0].im = 0.0;
    let last = fa.len() - 1;
    fa[last].im = 0.0;
    let mut out = inv.make_output_vec();
    inv.process(&mut fa, &mut out).expect("sized by planner");
    let scale = 1.0 / n as f64;
    let mut res: Vec<f64> = out
        .iter()
        .take(full.min(out_len))
        .map(|v| v * scale)
        .collect();
    res.resize(out_len, 0.0);
    res
}

pub fn energy(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// Mean-removed sample variance.
pub fn variance(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / x.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct(a: &[f64], b: &[f64], out_len: usize) -> Vec<f64> {
        let mut out = vec![0.0; out_len];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                if i + j < out_len {
                    out[i + j] += x * y;
                }
            }
        }
        out
    }

    #[test]
    fn fft_matches_direct() {
        let a: Vec<f64> = (0..300)
            .map(|i| ((i * 37 % 101) as f64 - 50.0) / 50.0)
            .collect();
        let b: Vec<f64> = (0..120)
            .map(|i| ((i * 13 % 29) as f64 - 14.0) / 14.0)
            .collect();
        for out_len in [300, 419, 500] {
            let d = direct(&a, &b, out_len);
            let f = convolve(&a, &b, out_len);
            assert_eq!(f.len(), out_len);
            for (x, y) in d.iter().zip(&f) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn sparse_kernel_is_exact() {
        let a = [1.0, 2.0, 3.0];
        let mut k = vec![0.0; 10];
        k[2] = 0.5;
        assert_eq!(convolve(&a, &k, 5), vec![0.0, 0.0, 0.5, 1.0, 1.5]);
        assert_eq!(convolve(&a, &[0.0; 4], 3), vec![0.0; 3]);
    }

    #[test]
    fn variance_ignores_mean() {
        assert!((variance(&[1.0, 3.0, 1.0, 3.0]) - 1.0).abs() < 1e-15);
    }
}
