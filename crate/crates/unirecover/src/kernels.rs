//! Closed-form evaluation of classical univariate trigonometric kernels and
//! their tensor products, with exact Fourier coefficients.
//!
//! All kernels are real-valued and evaluated without complex arithmetic.
//! Near the removable singularity of the closed forms (`sin(x/2) ≈ 0`) the
//! evaluation falls back to direct summation of the Fourier series, so that
//! values at `x = 0` and `x = 2π` equal the coefficient-sum limit exactly.

/// Below this magnitude of `sin(x/2)` the closed forms lose precision and the
/// series is summed directly.
const SINGULARITY_EPS: f64 = 1e-6;

/// Kernel family selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Dirichlet,
    Fejer,
    ValleePoussin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KernelSpec {
    pub kind: KernelKind,
    /// Order parameter `j ≥ 1` (`j ≥ 0` for Dirichlet).
    pub order: u32,
}

/// Dirichlet kernel `D_j(x) = Σ_{|k|≤j} e^{ikx} = sin((j+1/2)x)/sin(x/2)`.
///
/// `D_0 ≡ 1`; at zeros of `sin(x/2)` the limit value `2j + 1` is returned.
pub fn dirichlet_eval(j: u32, x: f64) -> f64 {
    assert!(x.is_finite(), "kernel argument must be finite");
    let s = (0.5 * x).sin();
    if s.abs() < SINGULARITY_EPS {
        let mut acc = 1.0;
        for k in 1..=j {
            acc += 2.0 * (k as f64 * x).cos();
        }
        return acc;
    }
    ((j as f64 + 0.5) * x).sin() / s
}

/// Fejér kernel `K_j(x) = Σ_{|k|<j} (1 − |k|/j) e^{ikx} = sin²(jx/2)/(j sin²(x/2))`,
/// a nonnegative polynomial of order `j − 1` with `K_j(0) = j` and unit mean.
pub fn fejer_eval(j: u32, x: f64) -> f64 {
    assert!(j >= 1, "Fejér order parameter must be ≥ 1");
    assert!(x.is_finite(), "kernel argument must be finite");
    let s = (0.5 * x).sin();
    if s.abs() < SINGULARITY_EPS {
        let jf = j as f64;
        let mut acc = 1.0;
        for k in 1..j {
            acc += 2.0 * (1.0 - k as f64 / jf) * (k as f64 * x).cos();
        }
        return acc;
    }
    let num = (0.5 * j as f64 * x).sin();
    (num * num) / (j as f64 * s * s)
}

/// de la Vallée Poussin kernel `V_j = 2K_{2j} − K_j`, a polynomial of order
/// `2j − 1` whose Fourier coefficient equals 1 on `|k| ≤ j`.
pub fn vp_eval(j: u32, x: f64) -> f64 {
    assert!(j >= 1, "kernel order parameter must be ≥ 1");
    2.0 * fejer_eval(2 * j, x) - fejer_eval(j, x)
}

/// Tensor-product kernel `∏_i V_{j_i}(x_i)`.
pub fn vp_tensor_eval(jvec: &[u32], xvec: &[f64]) -> f64 {
    assert_eq!(
        jvec.len(),
        xvec.len(),
        "order vector and point dimension must match"
    );
    jvec.iter()
        .zip(xvec)
        .map(|(&j, &x)| vp_eval(j, x))
        .product()
}

/// Exact Fourier coefficient of a kernel at frequency `k`.
///
/// Dirichlet: 1 on `|k| ≤ j`; Fejér: `(1 − |k|/j)_+`; de la Vallée Poussin:
/// 1 on `|k| ≤ j`, `2 − |k|/j` on `j < |k| < 2j`, 0 beyond.
pub fn kernel_fourier_coeff(spec: &KernelSpec, k: i64) -> f64 {
    let j = spec.order as i64;
    let a = k.abs();
    match spec.kind {
        KernelKind::Dirichlet => {
            if a <= j {
                1.0
            } else {
                0.0
            }
        }
        KernelKind::Fejer => {
            if a < j {
                1.0 - a as f64 / j as f64
            } else {
                0.0
            }
        }
        KernelKind::ValleePoussin => {
            if a <= j {
                1.0
            } else if a < 2 * j {
                2.0 - a as f64 / j as f64
            } else {
                0.0
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    /// Direct Fourier-series summation, the independent evaluation oracle.
    fn series_oracle(spec: &KernelSpec, x: f64) -> f64 {
        let top = match spec.kind {
            KernelKind::Dirichlet => spec.order as i64,
            KernelKind::Fejer => spec.order as i64 - 1,
            KernelKind::ValleePoussin => 2 * spec.order as i64 - 1,
        };
        let mut acc = kernel_fourier_coeff(spec, 0);
        for k in 1..=top {
            acc += 2.0 * kernel_fourier_coeff(spec, k) * (k as f64 * x).cos();
        }
        acc
    }

    /// Trapezoid quadrature of `f` over `[0, 2π]` with `points` nodes,
    /// normalized by `2π`; exact (to rounding) for trig polynomials of
    /// degree below `points`.
    fn mean_value<F: Fn(f64) -> f64>(f: F, points: usize) -> f64 {
        let mut acc = 0.0;
        for i in 0..points {
            acc += f(TAU * i as f64 / points as f64);
        }
        acc / points as f64
    }

    fn seeded_xs(count: usize) -> Vec<f64> {
        // simple deterministic low-discrepancy-ish sequence over [0, 2π)
        (0..count)
            .map(|i| TAU * ((i as f64 * 0.6180339887498949) % 1.0))
            .collect()
    }

    #[test]
    fn dirichlet_examples() {
        assert_eq!(dirichlet_eval(3, 0.0), 7.0);
        assert!((dirichlet_eval(1, PI) - (-1.0)).abs() < 1e-12);
        // summation oracle gives 1 + 2cos(π/2) + 2cos(π) = -1
        let spec = KernelSpec { kind: KernelKind::Dirichlet, order: 2 };
        let oracle = series_oracle(&spec, PI / 2.0);
        assert!((oracle - (-1.0)).abs() < 1e-12);
        assert!((dirichlet_eval(2, PI / 2.0) - oracle).abs() < 1e-12);
        assert_eq!(dirichlet_eval(0, 1.2345), 1.0);
    }

    #[test]
    fn fejer_examples() {
        assert_eq!(fejer_eval(4, 0.0), 4.0);
        // zero of the numerator away from the singularity: j=3, x=2π/3
        assert!(fejer_eval(3, TAU / 3.0).abs() < 1e-12);
        assert!((fejer_eval(2, PI / 2.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fejer_nonnegative() {
        for &j in &[1u32, 2, 3, 5, 17, 64, 256] {
            for &x in &seeded_xs(500) {
                assert!(fejer_eval(j, x) >= -1e-12, "K_{j}({x}) < 0");
            }
        }
    }

    #[test]
    fn fejer_unit_mean() {
        for &j in &[1u32, 2, 3, 8, 33, 128] {
            let mean = mean_value(|x| fejer_eval(j, x), 8 * j as usize);
            assert!((mean - 1.0).abs() < 1e-10, "mean of K_{j} = {mean}");
        }
    }

    #[test]
    fn vp_examples() {
        assert_eq!(vp_eval(1, 0.0), 3.0);
        let mean = mean_value(|x| vp_eval(2, x), 64);
        assert!((mean - 1.0).abs() < 1e-12);
    }

    #[test]
    fn vp_matches_series() {
        for &j in &[1u32, 2, 3, 7, 16, 64] {
            let spec = KernelSpec { kind: KernelKind::ValleePoussin, order: j };
            for &x in &seeded_xs(1000) {
                let closed = vp_eval(j, x);
                let series = series_oracle(&spec, x);
                let scale = series.abs().max(1.0);
                assert!(
                    (closed - series).abs() / scale < 1e-9,
                    "V_{j}({x}): closed {closed} vs series {series}"
                );
            }
        }
    }

    #[test]
    fn singularity_values_equal_coefficient_sums() {
        for &j in &[1u32, 2, 5, 32] {
            let spec = KernelSpec { kind: KernelKind::Fejer, order: j };
            assert_eq!(fejer_eval(j, 0.0), series_oracle(&spec, 0.0));
            assert_eq!(fejer_eval(j, TAU), series_oracle(&spec, TAU));
            let spec = KernelSpec { kind: KernelKind::Dirichlet, order: j };
            assert_eq!(dirichlet_eval(j, 0.0), series_oracle(&spec, 0.0));
            assert_eq!(dirichlet_eval(j, TAU), series_oracle(&spec, TAU));
        }
    }

    #[test]
    fn tensor_examples() {
        assert_eq!(vp_tensor_eval(&[1, 1], &[0.0, 0.0]), 9.0);
        assert_eq!(vp_tensor_eval(&[1, 1, 1], &[0.0, 0.0, 0.0]), 27.0);
        let x = 1.3;
        let v = vp_tensor_eval(&[2, 1], &[x, 0.0]);
        assert!((v - vp_eval(2, x) * 3.0).abs() < 1e-12);
    }

    #[test]
    fn coefficient_examples() {
        let fejer4 = KernelSpec { kind: KernelKind::Fejer, order: 4 };
        assert_eq!(kernel_fourier_coeff(&fejer4, 2), 0.5);
        let vp3 = KernelSpec { kind: KernelKind::ValleePoussin, order: 3 };
        assert_eq!(kernel_fourier_coeff(&vp3, 3), 1.0);
        assert!((kernel_fourier_coeff(&vp3, 5) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(kernel_fourier_coeff(&vp3, 6), 0.0);
        assert_eq!(kernel_fourier_coeff(&vp3, -5), kernel_fourier_coeff(&vp3, 5));
    }

    #[test]
    fn coefficients_match_quadrature() {
        // (2π)^{-1} ∫ kernel(x) cos(kx) dx recovers the coefficient
        for spec in [
            KernelSpec { kind: KernelKind::Dirichlet, order: 5 },
            KernelSpec { kind: KernelKind::Fejer, order: 6 },
            KernelSpec { kind: KernelKind::ValleePoussin, order: 3 },
        ] {
            for k in 0..=(2 * spec.order as i64 + 2) {
                let coeff = mean_value(
                    |x| {
                        let val = match spec.kind {
                            KernelKind::Dirichlet => dirichlet_eval(spec.order, x),
                            KernelKind::Fejer => fejer_eval(spec.order, x),
                            KernelKind::ValleePoussin => vp_eval(spec.order, x),
                        };
                        val * (k as f64 * x).cos()
                    },
                    512,
                );
                assert!(
                    (coeff - kernel_fourier_coeff(&spec, k)).abs() < 1e-10,
                    "{spec:?} k={k}: quadrature {coeff}"
                );
            }
        }
    }
}
