use dyadic_sparse::grid_fn::generate;
use dyadic_sparse::operators::{KernelSpec, TimeGrid};
use dyadic_sparse::weights::{
    ap_characteristic, reference_exponent, sharp_exponent_experiment, write_fit_csv, CubeFamily,
    InputFamily, WeightCase,
};
use dyadic_sparse::{Cube, Error, Generator, GridFn};
use proptest::prelude::*;

fn positive_fn(seed: u64, dim: usize, depth: u32) -> GridFn {
    generate::<f64>(
        &Generator::RandomUniform {
            seed,
            low: -2.0,
            high: 2.0,
        },
        dim,
        depth,
        Cube::unit(dim),
    )
    .unwrap()
    .map(f64::exp)
}

/// Direct sup over every lattice box of dyadic side.
fn lattice_oracle(w: &GridFn, p: f64) -> f64 {
    let d = w.dim();
    let n = 1usize << w.depth();
    let mut best = 0.0f64;
    let mut side = n;
    while side >= 1 {
        let span = n - side + 1;
        for t in 0..span.pow(d as u32) {
            let mut lo = vec![0usize; d];
            let mut r = t;
            for l in lo.iter_mut().rev() {
                *l = r % span;
                r /= span;
            }
            let (mut sw, mut ss, mut cnt) = (0.0, 0.0, 0.0);
            for i in 0..w.len() {
                let x = w.center(i);
                let inside = x.iter().zip(&lo).all(|(&v, &l)| {
                    let c = (v * n as f64).floor() as usize;
                    c >= l && c < l + side
                });
                if inside {
                    let v = w.values()[i];
                    sw += v;
                    ss += v.powf(-1.0 / (p - 1.0));
                    cnt += 1.0;
                }
            }
            best = best.max((sw / cnt) * (ss / cnt).powf(p - 1.0));
        }
        side /= 2;
    }
    best
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

#[test]
fn constant_weight_has_characteristic_one() {
    for d in 1..=2 {
        let w = GridFn::constant(d, 4, Cube::unit(d), 3.0).unwrap();
        for fam in [CubeFamily::Dyadic, CubeFamily::Lattice] {
            let r = ap_characteristic(&w, 2.5, fam).unwrap();
            assert!((r.characteristic - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn lattice_family_matches_direct_sup() {
    for seed in 0..6u64 {
        let d = 1 + (seed % 2) as usize;
        let depth = if d == 1 { 6 } else { 3 };
        let w = positive_fn(seed, d, depth);
        for p in [1.5, 2.0, 3.0] {
            let r = ap_characteristic(&w, p, CubeFamily::Lattice).unwrap();
            assert!(close(r.characteristic, lattice_oracle(&w, p), 1e-12));
            let dy = ap_characteristic(&w, p, CubeFamily::Dyadic).unwrap();
            assert!(dy.characteristic <= r.characteristic * (1.0 + 1e-12));
            assert!(dy.argmax_cube.is_some());
        }
    }
}

#[test]
fn errors() {
    let w = GridFn::constant(1, 3, Cube::unit(1), 1.0).unwrap();
    assert!(matches!(
        ap_characteristic(&w, 1.0, CubeFamily::Dyadic),
        Err(Error::Domain(_))
    ));
    let z = GridFn::from_cells(1, 3, Cube::unit(1), |c| if c[0] == 2 { 0.0 } else { 1.0 }).unwrap();
    assert!(matches!(
        ap_characteristic(&z, 2.0, CubeFamily::Dyadic),
        Err(Error::Domain(_))
    ));
    let tg = TimeGrid::for_function(&w, 2, 1);
    let two = vec![
        WeightCase::power(0.0, vec![0.5], 1, 6, Cube::unit(1)).unwrap(),
        WeightCase::power(-0.5, vec![0.5], 1, 6, Cube::unit(1)).unwrap(),
    ];
    let inputs = InputFamily::Adversarial {
        center: vec![0.5],
        levels: vec![1, 2],
    };
    let r = sharp_exponent_experiment(
        &KernelSpec::builtin(1),
        &tg,
        2.0,
        CubeFamily::Dyadic,
        &two,
        &inputs,
    );
    assert!(matches!(r, Err(Error::Config(_))));
}

#[test]
fn power_weights_degenerate_towards_the_endpoint() {
    let mut last = 0.0;
    for beta in [0.0, -0.3, -0.6, -0.9] {
        let wc = WeightCase::power(beta, vec![0.5], 1, 12, Cube::unit(1)).unwrap();
        let c = ap_characteristic(&wc.weight, 2.0, CubeFamily::Dyadic)
            .unwrap()
            .characteristic;
        assert!(c >= last, "beta {beta}");
        last = c;
    }
    assert!(last > 2.0);
}

#[test]
fn experiment_reports_and_csv() {
    let (d, depth) = (1, 9);
    let weights: Vec<WeightCase> = [0.0, -0.4, -0.8]
        .iter()
        .map(|&b| WeightCase::power(b, vec![0.5], d, depth, Cube::unit(d)).unwrap())
        .collect();
    let f = GridFn::constant(d, depth, Cube::unit(d), 1.0).unwrap();
    let tg = TimeGrid::for_function(&f, 2, 1);
    let inputs = InputFamily::Adversarial {
        center: vec![0.5],
        levels: vec![1, 3, 5],
    };
    let rep = sharp_exponent_experiment(
        &KernelSpec::builtin(d),
        &tg,
        2.0,
        CubeFamily::Dyadic,
        &weights,
        &inputs,
    )
    .unwrap();
    assert_eq!(rep.rows.len(), 3);
    assert!(rep.exploratory && !rep.degenerate && rep.slope.is_finite());
    assert!(rep
        .rows
        .iter()
        .all(|r| r.ratio > 0.0 && r.ratio.is_finite()));
    assert_eq!(rep.reference_exponent, 1.0);
    let resid: f64 = rep.residuals.iter().sum();
    assert!(resid.abs() < 1e-9);
    let mut buf = Vec::new();
    write_fit_csv(&rep, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.starts_with("label,beta,characteristic,ratio"));
}

#[test]
fn reference_curve() {
    assert_eq!(reference_exponent(2.0), 1.0);
    assert_eq!(reference_exponent(3.0), 0.5);
    assert_eq!(reference_exponent(1.5), 2.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn characteristic_invariants(seed in any::<u64>(), p in 1.2f64..4.0, c in 0.01f64..100.0) {
        let w = positive_fn(seed, 2, 3);
        let a = ap_characteristic(&w, p, CubeFamily::Dyadic).unwrap().characteristic;
        prop_assert!(a >= 1.0 - 1e-12);
        let scaled = ap_characteristic(&w.scale(c), p, CubeFamily::Dyadic).unwrap().characteristic;
        prop_assert!(close(a, scaled, 1e-10));
        // [sigma]_{A_p'} = [w]_{A_p}^{1/(p-1)} with sigma = w^{1-p'}
        let q = p / (p - 1.0);
        let sigma = w.map(|v| v.powf(-1.0 / (p - 1.0)));
        let dual = ap_characteristic(&sigma, q, CubeFamily::Dyadic).unwrap().characteristic;
        prop_assert!(close(dual, a.powf(1.0 / (p - 1.0)), 1e-10));
    }
}
