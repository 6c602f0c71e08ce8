//! Seeded design pools: skewed Gaussian, heavy-tailed t, and the embedded CPU fixture.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::design::DesignMatrix;
use crate::error::{Error, Result};

const CPU_CSV: &str = include_str!("../../data/cpu.csv");

/// Rows in the CPU fixture.
pub const CPU_N: usize = 209;
/// Columns in the CPU fixture: three capacity features plus an intercept.
pub const CPU_P: usize = 4;
/// Linear model used to synthesize CPU responses.
pub const CPU_BETA0: [f64; CPU_P] = [0.49, 0.30, 0.19, 3.78];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fixture {
    Cpu,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum DesignKind {
    /// Rows i.i.d. `N(0, U Λ Uᵀ)` with `Λ_jj = j^{-α}` and Haar-random `U`.
    SkewedGaussian {
        alpha: f64,
    },
    /// Entries i.i.d. unit-scale Student t with `df` degrees of freedom.
    HeavyTailT {
        df: u32,
    },
    Fixture {
        name: Fixture,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    pub kind: DesignKind,
    pub n: usize,
    pub p: usize,
    pub rng_seed: u64,
}

impl DesignSpec {
    pub fn skewed_gaussian(alpha: f64, n: usize, p: usize, rng_seed: u64) -> Self {
        Self { kind: DesignKind::SkewedGaussian { alpha }, n, p, rng_seed }
    }

    pub fn heavy_tail_t(df: u32, n: usize, p: usize, rng_seed: u64) -> Self {
        Self { kind: DesignKind::HeavyTailT { df }, n, p, rng_seed }
    }

    pub fn cpu() -> Self {
        Self { kind: DesignKind::Fixture { name: Fixture::Cpu }, n: CPU_N, p: CPU_P, rng_seed: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.n < self.p {
            return Err(Error::InvalidArgument(format!("need n >= p >= 1, got n = {}, p = {}", self.n, self.p)));
        }
        match self.kind {
            DesignKind::SkewedGaussian { alpha } if !(alpha >= 0.0 && alpha.is_finite()) => {
                Err(Error::InvalidArgument(format!("alpha must be finite and >= 0, got {alpha}")))
            }
            DesignKind::HeavyTailT { df } if df < 1 => Err(Error::InvalidArgument("df must be >= 1".into())),
            DesignKind::Fixture { name: Fixture::Cpu } if (self.n, self.p) != (CPU_N, CPU_P) => {
                Err(Error::InvalidArgument(format!("the cpu fixture is {CPU_N}x{CPU_P}")))
            }
            _ => Ok(()),
        }
    }
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the signs
/// of `diag(R)` folded into `Q`.
pub fn haar_orthogonal(p: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(p, p, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..p {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

pub fn generate_design(spec: &DesignSpec) -> Result<DesignMatrix> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let (n, p) = (spec.n, spec.p);
    match spec.kind {
        DesignKind::SkewedGaussian { alpha } => {
            let u = haar_orthogonal(p, &mut rng);
            let root = DVector::from_fn(p, |j, _| ((j + 1) as f64).powf(-alpha / 2.0));
            // Row z Λ^{1/2} Uᵀ has covariance U Λ Uᵀ.
            let scaled = DMatrix::from_fn(n, p, |_, j| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z * root[j]
            });
            DesignMatrix::new(scaled * u.transpose())
        }
        DesignKind::HeavyTailT { df } => {
            let law = StudentT::new(df as f64).map_err(|e| Error::InvalidArgument(e.to_string()))?;
            DesignMatrix::new(DMatrix::from_fn(n, p, |_, _| law.sample(&mut rng)))
        }
        DesignKind::Fixture { name: Fixture::Cpu } => cpu_design(),
    }
}

/// The 209 CPU models with features average main memory (MB), cache size (KB),
/// average channel count, and an intercept column.
pub fn cpu_design() -> Result<DesignMatrix> {
    let mut rows = Vec::with_capacity(CPU_N);
    for line in CPU_CSV.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        let v: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidArgument(format!("corrupt cpu fixture: {e}")))?;
        let [mmin, mmax, cach, chmin, chmax] = v[..] else {
            return Err(Error::InvalidArgument("corrupt cpu fixture row".into()));
        };
        rows.push(vec![(mmin + mmax) / 2000.0, cach, (chmin + chmax) / 2.0, 1.0]);
    }
    DesignMatrix::from_rows(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_spectrum_sample_covariance_is_identity() {
        let x = generate_design(&DesignSpec::skewed_gaussian(0.0, 20000, 5, 3)).unwrap();
        let cov = x.gram() / 20000.0;
        let err = (cov - DMatrix::<f64>::identity(5, 5)).norm();
        assert!(err < 0.05 * 5f64.sqrt(), "frobenius error {err}");
    }

    #[test]
    fn skewed_sample_covariance_has_power_law_spectrum() {
        let x = generate_design(&DesignSpec::skewed_gaussian(2.0, 40000, 4, 9)).unwrap();
        let cov = x.gram() / 40000.0;
        let mut eig: Vec<f64> = cov.symmetric_eigenvalues().iter().copied().collect();
        eig.sort_by(|a, b| b.total_cmp(a));
        for (j, l) in eig.iter().enumerate() {
            let want = ((j + 1) as f64).powi(-2);
            assert!((l - want).abs() < 0.05 * want, "eigenvalue {j}: {l} vs {want}");
        }
    }

    #[test]
    fn haar_matrix_is_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let q = haar_orthogonal(7, &mut rng);
        assert!((q.transpose() * &q - DMatrix::<f64>::identity(7, 7)).amax() < 1e-12);
    }

    #[test]
    fn same_seed_is_bitwise_identical() {
        for spec in [DesignSpec::skewed_gaussian(3.0, 50, 4, 11), DesignSpec::heavy_tail_t(3, 50, 4, 11)] {
            let a = generate_design(&spec).unwrap();
            let b = generate_design(&spec).unwrap();
            assert!(a.matrix().iter().zip(b.matrix().iter()).all(|(u, v)| u.to_bits() == v.to_bits()));
            let other = generate_design(&DesignSpec { rng_seed: 12, ..spec }).unwrap();
            assert_ne!(a, other);
        }
    }

    #[test]
    fn cpu_fixture_shape_and_first_row() {
        let x = generate_design(&DesignSpec::cpu()).unwrap();
        assert_eq!((x.n(), x.p()), (209, 4));
        assert_eq!(x.row(0).as_slice(), &[3.128, 256.0, 72.0, 1.0]);
        assert!(x.matrix().column(3).iter().all(|&v| v == 1.0));
        assert_eq!(CPU_BETA0, [0.49, 0.30, 0.19, 3.78]);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(generate_design(&DesignSpec::skewed_gaussian(-1.0, 10, 2, 0)).is_err());
        assert!(generate_design(&DesignSpec::heavy_tail_t(0, 10, 2, 0)).is_err());
        assert!(generate_design(&DesignSpec::skewed_gaussian(1.0, 3, 4, 0)).is_err());
        assert!(generate_design(&DesignSpec { n: 100, ..DesignSpec::cpu() }).is_err());
    }
}
