use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dyadic_grid::Cube;
use crate::error::Result;
use crate::grid_fn::GridFunction;

/// A continuum function with features fixed by the seed, sampled at any depth.
///
/// Step features live on dyadic cubes of relative generation at most 8, so depths
/// `>= 8` represent them exactly; the smooth bump is sampled at cell centres.
#[derive(Clone, Debug)]
struct Features {
    coarse: Vec<f64>,
    blocks: Vec<(u32, Vec<u64>, f64)>,
    bump: (Vec<f64>, f64, f64),
}

const COARSE: u32 = 3;

impl Features {
    fn draw(rng: &mut ChaCha8Rng, dim: usize) -> Self {
        let n = 1usize << (COARSE as usize * dim);
        let coarse = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let nblocks = rng.gen_range(2..=5);
        let blocks = (0..nblocks)
            .map(|_| {
                let level = rng.gen_range(2..=8u32);
                let pos = (0..dim).map(|_| rng.gen_range(0..1u64 << level)).collect();
                let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                // Heavy tail: heights up to 2^6.
                let h = sign * rng.gen_range(1.0..2.0) * (2f64).powf(rng.gen_range(0.0..6.0));
                (level, pos, h)
            })
            .collect();
        let center = (0..dim).map(|_| rng.gen_range(0.0..1.0)).collect();
        let width = rng.gen_range(0.02..0.2);
        let amp = rng.gen_range(-3.0..3.0);
        Features {
            coarse,
            blocks,
            bump: (center, width, amp),
        }
    }

    fn sample(&self, dim: usize, depth: u32, root: &Cube) -> Result<GridFunction<f64>> {
        let side = (2f64).powi(-(depth as i32));
        GridFunction::from_cells(dim, depth, root.clone(), |cells| {
            // Relative position in [0,1)^d.
            let x: Vec<f64> = cells.iter().map(|&c| (c as f64 + 0.5) * side).collect();
            let mut coarse_idx = 0usize;
            for &xi in &x {
                coarse_idx = (coarse_idx << COARSE) | ((xi * (1u64 << COARSE) as f64) as usize);
            }
            let mut v = self.coarse[coarse_idx];
            for (level, pos, h) in &self.blocks {
                let scale = (1u64 << level) as f64;
                if x.iter()
                    .zip(pos)
                    .all(|(&xi, &p)| (xi * scale).floor() as u64 == p)
                {
                    v += h;
                }
            }
            let (c, w, a) = &self.bump;
            let r2: f64 = x.iter().zip(c).map(|(xi, ci)| (xi - ci).powi(2)).sum();
            v + a * (-r2 / (2.0 * w * w)).exp()
        })
    }
}

/// A seeded pair `(f, g)` on the root `[0,1)^d` at the given depth.
///
/// The same seed gives the same continuum pair at every depth.
pub fn random_pair(
    seed: u64,
    dim: usize,
    depth: u32,
) -> Result<(GridFunction<f64>, GridFunction<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ff = Features::draw(&mut rng, dim);
    let gf = Features::draw(&mut rng, dim);
    let root = Cube::unit(dim);
    Ok((ff.sample(dim, depth, &root)?, gf.sample(dim, depth, &root)?))
}
