//! Savitzky-Golay smoothing of entropy profiles.
//!
//! The filter convolves the sequence with weights that evaluate, at the
//! window center, the least-squares polynomial fit over the window. The
//! weights are solved per configuration from the normal equations of the
//! Vandermonde system on positions `-h..h`, rather than read from tables,
//! so any valid window/order pair works.

use crate::error::{Error, Result};

/// Savitzky-Golay window size and polynomial order.
///
/// Note `window = 3, order = 2` makes the filter the identity: the
/// quadratic through three points is exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SgConfig {
    /// Window size s, odd and >= 3.
    pub window: usize,
    /// Polynomial order m, < s.
    pub order: usize,
}

impl Default for SgConfig {
    fn default() -> Self {
        SgConfig { window: 3, order: 2 }
    }
}

impl SgConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window < 3 || self.window.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "window size must be odd and >= 3, got {}",
                self.window
            )));
        }
        if self.order >= self.window {
            return Err(Error::invalid(format!(
                "polynomial order must be < window size, got order {} with window {}",
                self.order, self.window
            )));
        }
        Ok(())
    }
}

/// Solve a small dense system by Gaussian elimination with partial
/// pivoting. Matrices here are (m+1) x (m+1) normal-equation systems.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col] == 0.0 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let pivot_row = a[col].clone();
        let pivot_b = b[col];
        for row in col + 1..n {
            let factor = a[row][col] / pivot_row[col];
            if factor == 0.0 {
                continue;
            }
            for (entry, &p) in a[row].iter_mut().zip(&pivot_row).skip(col) {
                *entry -= factor * p;
            }
            b[row] -= factor * pivot_b;
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

/// Convolution weights for the window center of a degree-`order`
/// least-squares fit over `window` equally spaced samples.
///
/// The weights sum to 1 and are symmetric about the center.
pub fn sg_coefficients(window: usize, order: usize) -> Result<Vec<f64>> {
    SgConfig { window, order }.validate()?;
    let half = (window as isize - 1) / 2;
    let n_coef = order + 1;

    // Normal equations G y = e0 with G[j][k] = sum_x x^(j+k); the fitted
    // value at the center is then c_i = sum_k y_k * x_i^k.
    let mut power_sums = vec![0.0; 2 * order + 1];
    for x in -half..=half {
        let mut p = 1.0;
        for sum in power_sums.iter_mut() {
            *sum += p;
            p *= x as f64;
        }
    }
    let g: Vec<Vec<f64>> = (0..n_coef)
        .map(|j| (0..n_coef).map(|k| power_sums[j + k]).collect())
        .collect();
    let mut e0 = vec![0.0; n_coef];
    e0[0] = 1.0;
    let y = solve_dense(g, e0).ok_or_else(|| {
        Error::invalid(format!("normal equations are singular for window {window}, order {order}"))
    })?;

    let coefficients = (-half..=half)
        .map(|x| {
            let mut p = 1.0;
            let mut c = 0.0;
            for &yk in &y {
                c += yk * p;
                p *= x as f64;
            }
            c
        })
        .collect();
    Ok(coefficients)
}

/// Fold an out-of-range index back into `0..n` by reflecting at the ends
/// without repeating the edge sample. A single-element sequence repeats
/// its only value.
fn reflect_index(idx: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let mut m = idx.rem_euclid(period);
    if m >= n as isize {
        m = period - m;
    }
    m as usize
}

/// Smooth a sequence, preserving its length.
///
/// The sequence is mirror-padded (reflection without the edge sample)
/// before convolution, so constants pass through exactly even at the
/// edges.
pub fn sg_smooth(values: &[f64], config: &SgConfig) -> Result<Vec<f64>> {
    config.validate()?;
    if values.is_empty() {
        return Err(Error::invalid("cannot smooth an empty sequence"));
    }
    let coefficients = sg_coefficients(config.window, config.order)?;
    let half = (config.window - 1) / 2;
    let n = values.len();
    let smoothed = (0..n)
        .map(|i| {
            coefficients
                .iter()
                .enumerate()
                .map(|(j, &c)| c * values[reflect_index(i as isize + j as isize - half as isize, n)])
                .sum()
        })
        .collect();
    Ok(smoothed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn classic_quadratic_five_point_weights() {
        let c = sg_coefficients(5, 2).unwrap();
        let expected = [-3.0 / 35.0, 12.0 / 35.0, 17.0 / 35.0, 12.0 / 35.0, -3.0 / 35.0];
        for (got, want) in c.iter().zip(expected) {
            assert!((got - want).abs() < 1e-12, "got {got}, want {want}");
        }
    }

    #[test]
    fn three_point_quadratic_is_identity() {
        let c = sg_coefficients(3, 2).unwrap();
        assert!((c[0]).abs() < 1e-12);
        assert!((c[1] - 1.0).abs() < 1e-12);
        assert!((c[2]).abs() < 1e-12);

        let data = [3.5, -1.0, 0.0, 7.25, 2.0];
        let out = sg_smooth(&data, &SgConfig { window: 3, order: 2 }).unwrap();
        for (a, b) in data.iter().zip(&out) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn three_point_linear_is_moving_average() {
        let c = sg_coefficients(3, 1).unwrap();
        for &w in &c {
            assert!((w - 1.0 / 3.0).abs() < 1e-12);
        }
        let out = sg_smooth(&[0.0, 0.0, 3.0, 0.0, 0.0], &SgConfig { window: 3, order: 1 }).unwrap();
        let expected = [0.0, 1.0, 1.0, 1.0, 0.0];
        for (a, b) in out.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "got {out:?}");
        }
    }

    #[test]
    fn constant_sequences_pass_through_all_windows() {
        for (s, m) in [(3, 1), (5, 2), (9, 2), (17, 2), (9, 4)] {
            let data = vec![2.75; 24];
            let out = sg_smooth(&data, &SgConfig { window: s, order: m }).unwrap();
            for &v in &out {
                assert!((v - 2.75).abs() < 1e-12, "s={s} m={m}");
            }
        }
    }

    #[test]
    fn short_sequences_reflect_cyclically() {
        // window larger than the data still produces same-length output
        let out = sg_smooth(&[1.0, 2.0], &SgConfig { window: 9, order: 1 }).unwrap();
        assert_eq!(out.len(), 2);
        // reflection of [1,2] alternates 1,2,1,2..., so the average is 14/9 or 13/9
        assert!((out[0] - 13.0 / 9.0).abs() < 1e-12, "got {out:?}");
        assert!((out[1] - 14.0 / 9.0).abs() < 1e-12, "got {out:?}");

        let single = sg_smooth(&[4.0], &SgConfig { window: 5, order: 2 }).unwrap();
        assert!((single[0] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_invalid_configs() {
        assert!(sg_coefficients(4, 2).is_err());
        assert!(sg_coefficients(1, 0).is_err());
        assert!(sg_coefficients(5, 5).is_err());
        assert!(sg_smooth(&[], &SgConfig::default()).is_err());
    }

    fn eval_poly(coeffs: &[f64], x: f64) -> f64 {
        coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    proptest! {
        #[test]
        fn coefficients_are_symmetric_and_sum_to_one(
            s_idx in 0usize..4,
            m in 0usize..5,
        ) {
            let s = [3, 5, 9, 17][s_idx];
            prop_assume!(m < s);
            let c = sg_coefficients(s, m).unwrap();
            let sum: f64 = c.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
            for j in 0..s {
                prop_assert!((c[j] - c[s - 1 - j]).abs() < 1e-12);
            }
        }

        #[test]
        fn smoothing_is_linear(
            x in proptest::collection::vec(-10.0f64..10.0, 12),
            y in proptest::collection::vec(-10.0f64..10.0, 12),
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
        ) {
            let config = SgConfig { window: 5, order: 2 };
            let combo: Vec<f64> = x.iter().zip(&y).map(|(&xi, &yi)| a * xi + b * yi).collect();
            let lhs = sg_smooth(&combo, &config).unwrap();
            let sx = sg_smooth(&x, &config).unwrap();
            let sy = sg_smooth(&y, &config).unwrap();
            for i in 0..12 {
                prop_assert!((lhs[i] - (a * sx[i] + b * sy[i])).abs() < 1e-9);
            }
        }

        #[test]
        fn polynomials_survive_in_the_interior(
            coeffs in proptest::collection::vec(-1.0f64..1.0, 1..=3),
            s_idx in 0usize..3,
            n in 20usize..50,
        ) {
            let s = [3, 9, 17][s_idx];
            let m = 2;
            prop_assume!(coeffs.len() <= m + 1);
            let values: Vec<f64> = (0..n)
                .map(|i| eval_poly(&coeffs, (i as f64 - n as f64 / 2.0) * 0.1))
                .collect();
            let out = sg_smooth(&values, &SgConfig { window: s, order: m }).unwrap();
            let h = (s - 1) / 2;
            for i in h..n - h {
                prop_assert!((out[i] - values[i]).abs() < 1e-9, "index {i}");
            }
        }
    }
}
