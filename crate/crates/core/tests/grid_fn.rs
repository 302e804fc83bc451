use dyadic_sparse::grid_fn::{generate, io, lp_norm, tree};
use dyadic_sparse::{
    Cube, Error, ExactGridFn, Generator, GridFn, GridFn32, GridFunction, Rational,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_fn(seed: u64, dim: usize, depth: u32, root: Cube) -> GridFn {
    generate(
        &Generator::RandomUniform {
            seed,
            low: -1.0,
            high: 1.0,
        },
        dim,
        depth,
        root,
    )
    .unwrap()
}

/// Cell-sum average over the geometric cube `q`; cells outside the root count as zero.
fn brute_average(f: &GridFn, q: &Cube) -> f64 {
    let side = q.side_f64();
    let lo: Vec<f64> = q.coords.iter().map(|&c| c as f64 * side).collect();
    let mut s = 0.0;
    for i in 0..f.len() {
        let x = f.center(i);
        if x.iter().zip(&lo).all(|(&xi, &l)| xi >= l && xi < l + side) {
            s += f.values()[i] * f.cell_volume_f64();
        }
    }
    s / q.volume_f64()
}

#[test]
fn constant_average() {
    let f = GridFn::constant(2, 4, Cube::unit(2), 3.5).unwrap();
    assert_eq!(f.cube_average(&Cube::new(2, vec![1, 2])).unwrap(), 3.5);
    assert_eq!(f.cube_average(&Cube::unit(2)).unwrap(), 3.5);
}

#[test]
fn enlarged_root_average() {
    for d in 1..=3 {
        let f = GridFn::constant(d, 2, Cube::unit(d), 1.0).unwrap();
        let expect = 3f64.powi(-(d as i32));
        assert!((f.enlarged_average(&Cube::unit(d)).unwrap() - expect).abs() < 1e-15);
    }
}

#[test]
fn averages_match_cell_sums() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for trial in 0..200u64 {
        let d = 1 + (trial % 2) as usize;
        let depth = rng.gen_range(1..=4);
        let root = Cube::new(1, vec![1; d]);
        let f = random_fn(trial, d, depth, root.clone());
        let gen = rng.gen_range(-1..=1 + depth as i32);
        let n = 1i64 << (gen.max(0) + 1);
        let coords = (0..d).map(|_| rng.gen_range(-1..=n)).collect();
        let q = Cube::new(gen, coords);
        let got = f.cube_average(&q).unwrap();
        let want = brute_average(&f, &q);
        assert!(
            (got - want).abs() <= 1e-12 * (1.0 + want.abs()),
            "{q:?}: {got} vs {want}"
        );
    }
}

#[test]
fn cube_finer_than_grid_is_rejected() {
    let f = GridFn::zeros(1, 3, Cube::unit(1)).unwrap();
    assert!(matches!(
        f.cube_average(&Cube::new(4, vec![0])),
        Err(Error::Resolution(_))
    ));
}

#[test]
fn generator_examples() {
    let root = Cube::unit(2);
    let one: GridFn = generate(&Generator::Constant { value: 1.0 }, 2, 3, root.clone()).unwrap();
    assert!(one.values().iter().all(|&v| v == 1.0));
    let w: GridFn = generate(
        &Generator::PowerWeight {
            beta: 0.0,
            center: vec![0.3, 0.6],
        },
        2,
        3,
        root.clone(),
    )
    .unwrap();
    assert!(w.values().iter().all(|&v| v == 1.0));
    let bad = generate::<f64>(
        &Generator::PowerWeight {
            beta: -2.0,
            center: vec![0.5, 0.5],
        },
        2,
        3,
        root.clone(),
    );
    assert!(matches!(bad, Err(Error::NonIntegrable(_))));
    let w: GridFn = generate(
        &Generator::PowerWeight {
            beta: -1.5,
            center: vec![0.5, 0.5],
        },
        2,
        3,
        root.clone(),
    )
    .unwrap();
    assert!(w.values().iter().all(|v| v.is_finite() && *v > 0.0));

    let a: GridFn = generate(
        &Generator::RandomUniform {
            seed: 9,
            low: 0.0,
            high: 1.0,
        },
        2,
        3,
        root.clone(),
    )
    .unwrap();
    let b: GridFn = generate(
        &Generator::RandomUniform {
            seed: 9,
            low: 0.0,
            high: 1.0,
        },
        2,
        3,
        root.clone(),
    )
    .unwrap();
    assert_eq!(a, b);

    let spikes: GridFn = generate(
        &Generator::SpikeTrain {
            locations: vec![vec![0.1, 0.1], vec![0.9, 0.4]],
            height: None,
        },
        2,
        3,
        root.clone(),
    )
    .unwrap();
    assert!((spikes.integral() - 2.0).abs() < 1e-12);

    let ind: GridFn = generate(
        &Generator::Indicator {
            cube: Cube::new(1, vec![1, 0]),
        },
        2,
        3,
        root,
    )
    .unwrap();
    assert!((ind.integral() - 0.25).abs() < 1e-15);
}

#[test]
fn lp_norm_examples() {
    let root = Cube::new(-1, vec![0]);
    let one = GridFn::constant(1, 5, root.clone(), 1.0).unwrap();
    assert!((lp_norm(&one, 2.0, None).unwrap() - 2f64.sqrt()).abs() < 1e-14);
    assert!(matches!(lp_norm(&one, 0.5, None), Err(Error::Domain(_))));
    let zero_w = GridFn::zeros(1, 5, root).unwrap();
    assert!(matches!(
        lp_norm(&one, 2.0, Some(&zero_w)),
        Err(Error::Domain(_))
    ));
}

#[test]
fn weighted_lp_matches_direct_sum() {
    for seed in 0..20u64 {
        let f = random_fn(seed, 2, 4, Cube::unit(2));
        let w: GridFn = generate(
            &Generator::RandomUniform {
                seed: seed + 100,
                low: 0.1,
                high: 3.0,
            },
            2,
            4,
            Cube::unit(2),
        )
        .unwrap();
        let got = lp_norm(&f, 3.0, Some(&w)).unwrap();
        let direct: f64 = f
            .values()
            .iter()
            .zip(w.values())
            .map(|(v, wv)| v.abs().powi(3) * wv)
            .sum::<f64>()
            / 256.0;
        let want = direct.powf(1.0 / 3.0);
        assert!((got - want).abs() <= 1e-12 * want);
    }
}

#[test]
fn exact_rational_integrals() {
    let f = ExactGridFn::from_cells(1, 3, Cube::unit(1), |c| Rational::new(c[0] as i64 + 1, 3))
        .unwrap();
    // (1 + ... + 8) / 3 / 8
    assert_eq!(f.integral(), Rational::new(3, 2));
    assert_eq!(
        f.cube_average(&Cube::new(1, vec![0])).unwrap(),
        Rational::new(5, 6)
    );
}

#[test]
fn single_precision_alias() {
    let f = GridFn32::constant(2, 3, Cube::unit(2), 0.5).unwrap();
    assert!((f.integral() - 0.5).abs() < 1e-6);
}

#[test]
fn binary_and_json_round_trip() {
    let f = random_fn(4, 2, 3, Cube::new(2, vec![3, -1]));
    let mut buf = Vec::new();
    io::write_binary(&f, &mut buf).unwrap();
    assert_eq!(io::read_binary(&buf[..]).unwrap(), f);
    assert_eq!(io::from_json(&io::to_json(&f).unwrap()).unwrap(), f);
    buf[0] = b'X';
    assert!(io::read_binary(&buf[..]).is_err());
}

proptest! {
    #[test]
    fn tree_codec_round_trip(d in 1usize..=3, k in 0u32..=5, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let idx = rng.gen_range(0..tree::level_len(d, k));
        let c = tree::decode(d, k, idx);
        prop_assert_eq!(tree::encode(k, &c), idx);
        if k > 0 {
            let p = tree::parent_index(d, k, idx);
            let e = tree::child_offset(d, k, idx, k - 1);
            prop_assert_eq!(tree::child_index(d, k - 1, p, e), idx);
        }
    }

    #[test]
    fn cube_average_is_linear_and_convex(seed in any::<u64>(), a in -3.0f64..3.0, gen in 0i32..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_fn(seed, 2, 3, Cube::unit(2));
        let g = random_fn(seed ^ 1, 2, 3, Cube::unit(2));
        let n = 1i64 << gen;
        let q = Cube::new(gen, vec![rng.gen_range(0..n), rng.gen_range(0..n)]);
        let lhs = f.scale(a).add(&g).unwrap().cube_average(&q).unwrap();
        let rhs = a * f.cube_average(&q).unwrap() + g.cube_average(&q).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-12);
        let r = f.restrict(&q).unwrap();
        let vals: Vec<f64> = f.indicator_mask(&q).unwrap().iter().zip(f.values()).filter(|(m, _)| **m).map(|(_, &v)| v).collect();
        let avg = f.cube_average(&q).unwrap();
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(lo - 1e-12 <= avg && avg <= hi + 1e-12);
        prop_assert!((r.integral() - f.cube_integral(&q).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn lp_triangle_and_homogeneity(seed in any::<u64>(), p in 1.0f64..6.0, c in -4.0f64..4.0) {
        let f = random_fn(seed, 1, 6, Cube::unit(1));
        let g = random_fn(seed.wrapping_add(7), 1, 6, Cube::unit(1));
        let nf = lp_norm(&f, p, None).unwrap();
        let ng = lp_norm(&g, p, None).unwrap();
        let nfg = lp_norm(&f.add(&g).unwrap(), p, None).unwrap();
        prop_assert!(nfg <= (nf + ng) * (1.0 + 1e-12));
        let nc = lp_norm(&f.scale(c), p, None).unwrap();
        prop_assert!((nc - c.abs() * nf).abs() <= 1e-12 * (1.0 + nf));
    }
}

#[test]
fn layout_mismatch_is_an_error() {
    let f = GridFunction::<f64>::zeros(1, 3, Cube::unit(1)).unwrap();
    let g = GridFunction::<f64>::zeros(1, 4, Cube::unit(1)).unwrap();
    assert!(f.add(&g).is_err());
}
