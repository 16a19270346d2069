use crate::scalar::Scalar;

/// Sample mean of i.i.d. draws with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate<T: Scalar = f64> {
    pub mean: T,
    pub se: T,
    pub n: usize,
}

impl<T: Scalar> McEstimate<T> {
    /// Two-pass mean/variance, summed in index order so the result does not
    /// depend on how the samples were produced.
    pub fn from_samples(samples: &[T]) -> Self {
        let n = samples.len();
        if n == 0 {
            return Self { mean: T::zero(), se: T::zero(), n };
        }
        let nf = T::lit(n as f64);
        let mean = samples.iter().fold(T::zero(), |a, &x| a + x) / nf;
        if n < 2 {
            return Self { mean, se: T::zero(), n };
        }
        let ss = samples.iter().fold(T::zero(), |a, &x| a + (x - mean) * (x - mean));
        let var = ss / T::lit((n - 1) as f64);
        Self { mean, se: (var / nf).sqrt(), n }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_standard_error() {
        let e = McEstimate::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.mean, 2.5);
        assert!((e.se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(McEstimate::<f64>::from_samples(&[7.0]).se, 0.0);
        assert_eq!(McEstimate::from_samples(&[0.0f64; 10]).se, 0.0);
    }
}
