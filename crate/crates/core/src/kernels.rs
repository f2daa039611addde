//! Covariance functions for mixed continuous / discrete / categorical
//! inputs.
//!
//! The mixed kernel is a product of one-dimensional factors: a squared
//! exponential per continuous dimension, and per level variable either a
//! Compound-Symmetry (Gower) factor — one shared correlation for every
//! non-identical level pair — or a hypersphere-decomposition correlation
//! matrix, which assigns an individual correlation to each level pair while
//! staying positive semi-definite by construction. A single global
//! amplitude multiplies the product; per-factor variances are not
//! identifiable inside a product and are not parameterized.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::space::{MixedPoint, MixedSpace};

/// Diagonal jitter added to every training covariance matrix.
pub const NUGGET: f64 = 1e-6;

/// Which family of level-variable kernels a model uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelMode {
    /// Compound Symmetry: one nonnegative hyperparameter per level variable.
    Gower,
    /// Hypersphere decomposition: `L(L-1)/2` angles in `[0, pi/2]` per
    /// variable with `L` levels.
    Hypersphere,
}

/// Level-kernel hyperparameters; exactly one family per model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LevelParams {
    Gower { thetas: Vec<f64> },
    Hypersphere { angles: Vec<Vec<f64>> },
}

/// Hyperparameters of a mixed product kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelHyperparams {
    /// Overall process variance.
    pub amplitude: f64,
    /// One squared-exponential lengthscale per continuous dimension.
    pub cont_lengthscales: Vec<f64>,
    /// Per level-variable parameters (discrete variables first).
    pub level_params: LevelParams,
    /// Observation noise variance added to the training diagonal.
    pub noise_variance: f64,
}

impl KernelHyperparams {
    pub fn mode(&self) -> KernelMode {
        match self.level_params {
            LevelParams::Gower { .. } => KernelMode::Gower,
            LevelParams::Hypersphere { .. } => KernelMode::Hypersphere,
        }
    }

    /// Checks positivity/range constraints and consistency with `space`.
    pub fn validate(&self, space: &MixedSpace) -> Result<(), Error> {
        if !(self.amplitude > 0.0) {
            return Err(Error::InvalidKernel(format!("amplitude must be > 0, got {}", self.amplitude)));
        }
        if self.noise_variance < 0.0 {
            return Err(Error::InvalidKernel("noise variance must be >= 0".into()));
        }
        if self.cont_lengthscales.len() != space.n_continuous() {
            return Err(Error::InvalidKernel(format!(
                "expected {} lengthscales, got {}",
                space.n_continuous(),
                self.cont_lengthscales.len()
            )));
        }
        if self.cont_lengthscales.iter().any(|l| !(*l > 0.0)) {
            return Err(Error::InvalidKernel("lengthscales must be > 0".into()));
        }
        let d_z = space.n_level_vars();
        match &self.level_params {
            LevelParams::Gower { thetas } => {
                if thetas.len() != d_z {
                    return Err(Error::InvalidKernel(format!(
                        "expected {d_z} gower thetas, got {}",
                        thetas.len()
                    )));
                }
                if thetas.iter().any(|t| *t < 0.0) {
                    return Err(Error::InvalidKernel("gower thetas must be >= 0".into()));
                }
            }
            LevelParams::Hypersphere { angles } => {
                if angles.len() != d_z {
                    return Err(Error::InvalidKernel(format!(
                        "expected {d_z} angle vectors, got {}",
                        angles.len()
                    )));
                }
                for (z, a) in angles.iter().enumerate() {
                    let levels = space.level_count(z);
                    let expected = levels * (levels - 1) / 2;
                    if a.len() != expected {
                        return Err(Error::InvalidKernel(format!(
                            "level variable {z} with {levels} levels needs {expected} angles, got {}",
                            a.len()
                        )));
                    }
                    check_angles(a)?;
                }
            }
        }
        Ok(())
    }
}

fn check_angles(angles: &[f64]) -> Result<(), Error> {
    if angles.iter().any(|a| !(0.0..=std::f64::consts::FRAC_PI_2).contains(a)) {
        return Err(Error::InvalidKernel("hypersphere angles must lie in [0, pi/2]".into()));
    }
    Ok(())
}

/// Squared exponential factor `exp(-(x-x2)^2 / (2 l^2))`.
pub fn se_kernel_1d(x: f64, x2: f64, lengthscale: f64) -> f64 {
    let d = x - x2;
    (-d * d / (2.0 * lengthscale * lengthscale)).exp()
}

/// Compound-Symmetry factor: `1` for identical levels, `exp(-theta)`
/// otherwise.
pub fn gower_kernel_1d(z: usize, z2: usize, theta: f64) -> f64 {
    if z == z2 {
        1.0
    } else {
        (-theta).exp()
    }
}

/// Unit-diagonal correlation matrix of the hypersphere decomposition.
///
/// Row `m` of the underlying lower-triangular factor is a point on the unit
/// `(m-1)`-sphere parameterized by the angles `theta_{m,1..m-1}`; the
/// returned matrix is the Gram matrix of those rows, hence symmetric
/// positive semi-definite with unit diagonal. Angles are packed row by row:
/// `[theta_{2,1}, theta_{3,1}, theta_{3,2}, ...]`.
pub fn hypersphere_corr_matrix(level_count: usize, angles: &[f64]) -> Result<DMatrix<f64>, Error> {
    let expected = level_count * (level_count - 1) / 2;
    if angles.len() != expected {
        return Err(Error::InvalidKernel(format!(
            "{level_count} levels need {expected} angles, got {}",
            angles.len()
        )));
    }
    check_angles(angles)?;

    let mut tri = DMatrix::zeros(level_count, level_count);
    tri[(0, 0)] = 1.0;
    let mut offset = 0;
    for m in 1..level_count {
        let row_angles = &angles[offset..offset + m];
        offset += m;
        let mut sin_prod = 1.0;
        for (j, &a) in row_angles.iter().enumerate() {
            tri[(m, j)] = a.cos() * sin_prod;
            sin_prod *= a.sin();
        }
        tri[(m, m)] = sin_prod;
    }
    Ok(&tri * tri.transpose())
}

/// Precomputed lookup tables for fast repeated kernel evaluation: inverse
/// squared lengthscales and one dense correlation matrix per level
/// variable (for Gower this is just `exp(-theta)` off the diagonal).
#[derive(Debug, Clone)]
pub(crate) struct CompiledKernel {
    pub amplitude: f64,
    inv_two_lsq: Vec<f64>,
    level_mats: Vec<DMatrix<f64>>,
}

impl CompiledKernel {
    pub fn new(hp: &KernelHyperparams, space: &MixedSpace) -> Result<Self, Error> {
        hp.validate(space)?;
        let inv_two_lsq = hp.cont_lengthscales.iter().map(|l| 1.0 / (2.0 * l * l)).collect();
        let level_mats = match &hp.level_params {
            LevelParams::Gower { thetas } => thetas
                .iter()
                .enumerate()
                .map(|(z, &theta)| {
                    let levels = space.level_count(z);
                    let off = (-theta).exp();
                    DMatrix::from_fn(levels, levels, |i, j| if i == j { 1.0 } else { off })
                })
                .collect(),
            LevelParams::Hypersphere { angles } => angles
                .iter()
                .enumerate()
                .map(|(z, a)| hypersphere_corr_matrix(space.level_count(z), a))
                .collect::<Result<_, _>>()?,
        };
        Ok(Self { amplitude: hp.amplitude, inv_two_lsq, level_mats })
    }

    pub fn eval(&self, p: &MixedPoint, p2: &MixedPoint) -> f64 {
        let mut exponent = 0.0;
        for ((x, x2), inv) in p.continuous.iter().zip(&p2.continuous).zip(&self.inv_two_lsq) {
            let d = x - x2;
            exponent -= d * d * inv;
        }
        let mut value = self.amplitude * exponent.exp();
        for (z, mat) in self.level_mats.iter().enumerate() {
            value *= mat[(p.level(z), p2.level(z))];
        }
        value
    }
}

/// Mixed product kernel between two points.
pub fn product_kernel(
    p: &MixedPoint,
    p2: &MixedPoint,
    hp: &KernelHyperparams,
    space: &MixedSpace,
) -> Result<f64, Error> {
    if !space.contains(p) || !space.contains(p2) {
        return Err(Error::InvalidKernel("point does not belong to the space".into()));
    }
    Ok(CompiledKernel::new(hp, space)?.eval(p, p2))
}

/// Training covariance matrix: pairwise kernel values with
/// `noise_variance + NUGGET` added on the diagonal.
pub fn kernel_matrix(
    points: &[MixedPoint],
    hp: &KernelHyperparams,
    space: &MixedSpace,
) -> Result<DMatrix<f64>, Error> {
    kernel_matrix_with_jitter(points, hp, space, NUGGET)
}

/// As [`kernel_matrix`] with an explicit jitter, for factorization retry.
pub fn kernel_matrix_with_jitter(
    points: &[MixedPoint],
    hp: &KernelHyperparams,
    space: &MixedSpace,
    jitter: f64,
) -> Result<DMatrix<f64>, Error> {
    if points.is_empty() {
        return Err(Error::InvalidKernel("kernel_matrix requires at least one point".into()));
    }
    let compiled = CompiledKernel::new(hp, space)?;
    let m = points.len();
    let mut out = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..=i {
            let v = compiled.eval(&points[i], &points[j]);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
        out[(i, i)] += hp.noise_variance + jitter;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn gower_hp(space: &MixedSpace, amplitude: f64, theta: f64) -> KernelHyperparams {
        KernelHyperparams {
            amplitude,
            cont_lengthscales: vec![1.0; space.n_continuous()],
            level_params: LevelParams::Gower { thetas: vec![theta; space.n_level_vars()] },
            noise_variance: 0.0,
        }
    }

    #[test]
    fn se_closed_forms() {
        assert_eq!(se_kernel_1d(0.0, 0.0, 1.0), 1.0);
        assert_relative_eq!(se_kernel_1d(0.0, 1.0, 1.0), (-0.5f64).exp(), epsilon = 1e-15);
        assert_eq!(se_kernel_1d(0.3, -1.7, 0.4), se_kernel_1d(-1.7, 0.3, 0.4));
    }

    #[test]
    fn gower_closed_forms() {
        assert_eq!(gower_kernel_1d(3, 3, 7.2), 1.0);
        assert_eq!(gower_kernel_1d(0, 1, 0.0), 1.0);
        assert_relative_eq!(gower_kernel_1d(0, 1, 2.0f64.ln()), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn hypersphere_two_level_cases() {
        use std::f64::consts::{FRAC_PI_2, FRAC_PI_3};
        let identity = hypersphere_corr_matrix(2, &[FRAC_PI_2]).unwrap();
        assert_relative_eq!(identity[(0, 1)], 0.0, epsilon = 1e-15);
        assert_relative_eq!(identity[(0, 0)], 1.0, epsilon = 1e-15);

        let ones = hypersphere_corr_matrix(2, &[0.0]).unwrap();
        assert_relative_eq!(ones[(0, 1)], 1.0, epsilon = 1e-15);

        let half = hypersphere_corr_matrix(2, &[FRAC_PI_3]).unwrap();
        assert_relative_eq!(half[(0, 1)], 0.5, epsilon = 1e-15);
        assert_relative_eq!(half[(1, 0)], 0.5, epsilon = 1e-15);
        assert_relative_eq!(half[(1, 1)], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn hypersphere_rejects_bad_input() {
        assert!(hypersphere_corr_matrix(3, &[0.1]).is_err());
        assert!(hypersphere_corr_matrix(2, &[-0.1]).is_err());
        assert!(hypersphere_corr_matrix(2, &[2.0]).is_err());
    }

    #[test]
    fn product_kernel_examples() {
        // Two continuous dims, each at one lengthscale of distance.
        let space = MixedSpace::continuous(vec![(-10.0, 10.0), (-10.0, 10.0)]).unwrap();
        let hp = gower_hp(&space, 1.0, 0.0);
        let p = MixedPoint::new(vec![0.0, 0.0], vec![], vec![]);
        let q = MixedPoint::new(vec![1.0, 1.0], vec![], vec![]);
        assert_relative_eq!(
            product_kernel(&p, &q, &hp, &space).unwrap(),
            (-1.0f64).exp(),
            epsilon = 1e-15
        );
        assert_relative_eq!(product_kernel(&p, &p, &hp, &space).unwrap(), 1.0, epsilon = 1e-15);

        // One differing categorical with theta = ln 2 and amplitude 2.
        let space = MixedSpace::new(vec![(0.0, 1.0)], vec![], vec![2]).unwrap();
        let hp = gower_hp(&space, 2.0, 2.0f64.ln());
        let p = MixedPoint::new(vec![0.25], vec![], vec![0]);
        let q = MixedPoint::new(vec![0.25], vec![], vec![1]);
        assert_relative_eq!(product_kernel(&p, &q, &hp, &space).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn product_kernel_dimension_mismatch() {
        let space = MixedSpace::continuous(vec![(0.0, 1.0)]).unwrap();
        let mut hp = gower_hp(&space, 1.0, 0.5);
        hp.cont_lengthscales = vec![1.0, 1.0];
        let p = MixedPoint::new(vec![0.5], vec![], vec![]);
        assert!(product_kernel(&p, &p, &hp, &space).is_err());
    }

    #[test]
    fn single_point_matrix_carries_nugget() {
        let space = MixedSpace::continuous(vec![(0.0, 1.0)]).unwrap();
        let hp = gower_hp(&space, 1.0, 0.0);
        let p = [MixedPoint::new(vec![0.3], vec![], vec![])];
        let k = kernel_matrix(&p, &hp, &space).unwrap();
        assert_eq!(k.nrows(), 1);
        assert_relative_eq!(k[(0, 0)], 1.0 + NUGGET, epsilon = 1e-15);
    }

    #[test]
    fn matrix_is_exactly_symmetric() {
        let space = MixedSpace::new(vec![(0.0, 1.0), (0.0, 1.0)], vec![vec![0.0, 1.0]], vec![3])
            .unwrap();
        let pts = crate::space::lhs_sample(&space, 12, 3).unwrap();
        let hp = gower_hp(&space, 1.7, 0.8);
        let k = kernel_matrix(&pts, &hp, &space).unwrap();
        assert_eq!(k, k.transpose());
    }

    fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
        m.clone().symmetric_eigen().eigenvalues.min()
    }

    #[test]
    fn gower_matrix_psd_on_random_points() {
        let space =
            MixedSpace::new(vec![(0.0, 1.0)], vec![], vec![4]).unwrap();
        let pts = crate::space::lhs_sample(&space, 3, 9).unwrap();
        let hp = gower_hp(&space, 1.0, 0.3);
        let mut k = kernel_matrix(&pts, &hp, &space).unwrap();
        for i in 0..k.nrows() {
            k[(i, i)] -= NUGGET;
        }
        assert!(min_eigenvalue(&k) >= -1e-8);
    }

    #[test]
    fn hypersphere_matches_gower_identity_limit() {
        use std::f64::consts::FRAC_PI_2;
        let space = MixedSpace::new(vec![], vec![], vec![3]).unwrap();
        let hyp = KernelHyperparams {
            amplitude: 1.0,
            cont_lengthscales: vec![],
            level_params: LevelParams::Hypersphere { angles: vec![vec![FRAC_PI_2; 3]] },
            noise_variance: 0.0,
        };
        let gow = KernelHyperparams {
            amplitude: 1.0,
            cont_lengthscales: vec![],
            level_params: LevelParams::Gower { thetas: vec![50.0] },
            noise_variance: 0.0,
        };
        for a in 0..3usize {
            for b in 0..3usize {
                let p = MixedPoint::new(vec![], vec![], vec![a]);
                let q = MixedPoint::new(vec![], vec![], vec![b]);
                let kh = product_kernel(&p, &q, &hyp, &space).unwrap();
                let kg = product_kernel(&p, &q, &gow, &space).unwrap();
                let expected = if a == b { 1.0 } else { 0.0 };
                assert_relative_eq!(kh, expected, epsilon = 1e-12);
                assert_relative_eq!(kg, expected, epsilon = 1e-12);
            }
        }
    }

    fn random_space_and_hp(seed: u64, mode: KernelMode) -> (MixedSpace, KernelHyperparams) {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let d_c = rng.gen_range(0..3usize);
        let d_q = rng.gen_range(1..3usize);
        let bounds = (0..d_c).map(|_| (0.0, 1.0)).collect();
        let levels: Vec<usize> = (0..d_q).map(|_| rng.gen_range(2..5usize)).collect();
        let space = MixedSpace::new(bounds, vec![], levels.clone()).unwrap();
        let cont_lengthscales = (0..d_c).map(|_| rng.gen_range(0.05..5.0)).collect();
        let level_params = match mode {
            KernelMode::Gower => LevelParams::Gower {
                thetas: (0..d_q).map(|_| rng.gen_range(0.0..5.0)).collect(),
            },
            KernelMode::Hypersphere => LevelParams::Hypersphere {
                angles: levels
                    .iter()
                    .map(|&l| {
                        (0..l * (l - 1) / 2)
                            .map(|_| rng.gen_range(0.0..std::f64::consts::FRAC_PI_2))
                            .collect()
                    })
                    .collect(),
            },
        };
        let hp = KernelHyperparams {
            amplitude: rng.gen_range(0.1..4.0),
            cont_lengthscales,
            level_params,
            noise_variance: 0.0,
        };
        (space, hp)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn psd_property_both_modes(seed in 0u64..10_000, hyp in proptest::bool::ANY) {
            let mode = if hyp { KernelMode::Hypersphere } else { KernelMode::Gower };
            let (space, hp) = random_space_and_hp(seed, mode);
            let n = 4 + (seed % 17) as usize;
            let pts = crate::space::lhs_sample(&space, n, seed ^ 0xabcd).unwrap();
            let mut k = kernel_matrix(&pts, &hp, &space).unwrap();
            for i in 0..k.nrows() {
                k[(i, i)] -= NUGGET;
            }
            prop_assert!(min_eigenvalue(&k) >= -1e-8);
        }

        #[test]
        fn product_bounded_by_amplitude(seed in 0u64..10_000) {
            let (space, hp) = random_space_and_hp(seed, KernelMode::Hypersphere);
            let pts = crate::space::lhs_sample(&space, 2, seed ^ 0x1234).unwrap();
            let v = product_kernel(&pts[0], &pts[1], &hp, &space).unwrap();
            prop_assert!(v <= hp.amplitude + 1e-12);
        }

        #[test]
        fn hypersphere_rows_have_unit_norm(levels in 2usize..6, seed in 0u64..1_000) {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let angles: Vec<f64> = (0..levels * (levels - 1) / 2)
                .map(|_| rng.gen_range(0.0..std::f64::consts::FRAC_PI_2))
                .collect();
            let k = hypersphere_corr_matrix(levels, &angles).unwrap();
            for i in 0..levels {
                prop_assert!((k[(i, i)] - 1.0).abs() < 1e-12);
            }
        }
    }
}
