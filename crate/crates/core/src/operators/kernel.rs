use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// `psi(u) = L(u) - 2^{-d} L(u/2)` with the tent `L(u) = prod max(0, 1 - |u_i|)`.
    TentDifference,
    /// `psi = 0`; diagnostic.
    Zero,
}

/// The convolution kernel family `k_t(x, y) = t^{-d} psi((x - y)/t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub dim: usize,
    pub alpha: f64,
    pub profile: Profile,
}

/// Empirical size and regularity constants of the kernel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelConstants {
    pub size: f64,
    pub smooth: f64,
    pub samples: usize,
    pub seed: u64,
}

impl KernelSpec {
    pub fn builtin(dim: usize) -> Self {
        KernelSpec {
            dim,
            alpha: 1.0,
            profile: Profile::TentDifference,
        }
    }

    pub fn zero(dim: usize) -> Self {
        KernelSpec {
            dim,
            alpha: 1.0,
            profile: Profile::Zero,
        }
    }

    pub fn tent(u: &[f64]) -> f64 {
        u.iter().map(|x| (1.0 - x.abs()).max(0.0)).product()
    }

    pub fn psi(&self, u: &[f64]) -> f64 {
        match self.profile {
            Profile::Zero => 0.0,
            Profile::TentDifference => {
                let half: Vec<f64> = u.iter().map(|x| x / 2.0).collect();
                Self::tent(u) - (2f64).powi(-(self.dim as i32)) * Self::tent(&half)
            }
        }
    }

    pub fn kernel(&self, t: f64, x: &[f64], y: &[f64]) -> f64 {
        let u: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - b) / t).collect();
        t.powi(-(self.dim as i32)) * self.psi(&u)
    }

    /// Sampled sup of `|psi(u)| (1+|u|)^{d+a}` and of
    /// `|psi(u) - psi(u')| (1+|u|)^{d+a} / |u - u'|^a` over `|u - u'| < 1` (sup norm).
    pub fn empirical_constants(&self, samples: usize, seed: u64) -> KernelConstants {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = self.dim;
        let p = d as f64 + self.alpha;
        let (mut size, mut smooth) = (0.0f64, 0.0f64);
        for _ in 0..samples {
            let u: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.5..3.5)).collect();
            let du: Vec<f64> = (0..d)
                .map(|_| rng.gen_range(-1.0..1.0) * rng.gen::<f64>())
                .collect();
            let v: Vec<f64> = u.iter().zip(&du).map(|(a, b)| a + b).collect();
            let norm = u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let step = du.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let w = (1.0 + norm).powf(p);
            let pu = self.psi(&u);
            size = size.max(pu.abs() * w);
            if step > 0.0 && step < 1.0 {
                smooth = smooth.max((pu - self.psi(&v)).abs() * w / step.powf(self.alpha));
            }
        }
        KernelConstants {
            size,
            smooth,
            samples,
            seed,
        }
    }
}
