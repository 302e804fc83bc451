use dyadic_sparse::dyadic_grid::{compare_power_mean, translate_by_shift, Direction};
use dyadic_sparse::{Cube, Dyadic, DyadicGrid, Error, GoodnessParams, Rational, ShiftSeq};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::cmp::Ordering;

fn random_cube(rng: &mut impl Rng, grid: &DyadicGrid, gen: i32) -> Cube {
    let mut q = Cube {
        gen: grid.top,
        coords: vec![0; grid.dim],
        shift_id: grid.shift_id,
    };
    while q.gen < gen {
        let kids = grid.children(&q, 1).unwrap();
        q = kids[rng.gen_range(0..kids.len())].clone();
    }
    q
}

/// Closed box `[lo, lo + side]` in units.
fn closed_points(grid: &DyadicGrid, q: &Cube) -> Vec<Vec<i64>> {
    let lo = grid.lower_units(q);
    let s = grid.side_units(q);
    let mut pts = vec![vec![]];
    for &l in &lo {
        let mut next = Vec::new();
        for p in &pts {
            for x in l..=l + s {
                let mut v: Vec<i64> = p.clone();
                v.push(x);
                next.push(v);
            }
        }
        pts = next;
    }
    pts
}

#[test]
fn children_of_a_square_tile_it() {
    let g = DyadicGrid::standard(2, 0, 6);
    let q = Cube::new(2, vec![1, 3]);
    let kids = g.relatives(&q, 1, Direction::Down).unwrap();
    assert_eq!(kids.len(), 4);
    let vol = kids.iter().fold(Dyadic::ZERO, |a, k| a.add(k.volume()));
    assert_eq!(vol, q.volume());
    for k in &kids {
        assert!(g.contains(&q, k));
    }
}

#[test]
fn zero_step_is_identity() {
    let g = DyadicGrid::standard(3, -2, 5);
    let q = Cube::new(1, vec![-1, 0, 1]);
    assert_eq!(g.relatives(&q, 0, Direction::Up).unwrap(), vec![q.clone()]);
    assert_eq!(g.relatives(&q, 0, Direction::Down).unwrap(), vec![q]);
}

#[test]
fn out_of_range_relatives() {
    let g = DyadicGrid::standard(1, 0, 4);
    let q = Cube::new(2, vec![1]);
    assert!(matches!(g.ancestor(&q, 3), Err(Error::OutOfRange(_))));
    assert!(matches!(g.children(&q, 3), Err(Error::OutOfRange(_))));
}

#[test]
fn long_distance_examples() {
    let g = DyadicGrid::standard(1, -2, 4);
    let r = Cube::new(0, vec![2]);
    assert_eq!(g.long_distance(&r, &r).unwrap(), Dyadic::from_int(2));
    let p = Cube::new(0, vec![0]);
    assert_eq!(g.long_distance(&p, &r).unwrap(), Dyadic::from_int(3));
    let other = Cube { shift_id: 3, ..p };
    assert!(matches!(g.distance(&other, &r), Err(Error::Domain(_))));
}

#[test]
fn goodness_with_touching_ancestor_fails() {
    let params = GoodnessParams::new(2, 1.0, 1).unwrap();
    assert_eq!(params.gamma, Rational::new(1, 8));
    let g = DyadicGrid::standard(1, 0, 8);
    // Leftmost cube touches the left edge of every ancestor.
    assert!(!g.is_good(&Cube::new(8, vec![0]), &params, 0));
    // Within r generations of the top nothing is tested.
    assert!(g.is_good(&Cube::new(1, vec![0]), &params, 0));
}

/// Direct float evaluation of `d(R, dP) > lR^gamma lP^{1-gamma}` over every standard ancestor.
fn good_oracle(r: &Cube, top: i32, rr: u32, gamma: f64) -> bool {
    let lr = (2f64).powi(-r.gen);
    let lo: Vec<f64> = r.coords.iter().map(|&c| c as f64 * lr).collect();
    for gen in top..=(r.gen - rr as i32) {
        let lp = (2f64).powi(-gen);
        let mut dist = f64::INFINITY;
        for &x in &lo {
            let p0 = (x / lp).floor() * lp;
            dist = dist.min((x - p0).min(p0 + lp - (x + lr)));
        }
        if !(dist > lr.powf(gamma) * lp.powf(1.0 - gamma)) {
            return false;
        }
    }
    true
}

#[test]
fn goodness_of_central_cubes_matches_direct_evaluation() {
    let g = DyadicGrid::standard(1, 0, 10);
    for (r, gamma) in [
        (4u32, Rational::new(1, 8)),
        (4, Rational::new(2, 5)),
        (3, Rational::new(1, 3)),
    ] {
        let params = GoodnessParams::with_gamma(r, 1.0, 1, gamma).unwrap();
        let gf = *gamma.numer() as f64 / *gamma.denom() as f64;
        for c in 500..530i64 {
            let q = Cube::new(10, vec![c]);
            assert_eq!(
                g.is_good(&q, &params, 0),
                good_oracle(&q, 0, r, gf),
                "cube {c} r {r} gamma {gamma}"
            );
        }
    }
}

#[test]
fn goodness_matches_oracle_on_random_cubes_2d() {
    let g = DyadicGrid::standard(2, 0, 9);
    let params = GoodnessParams::with_gamma(3, 1.0, 2, Rational::new(2, 5)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..500 {
        let gen = rng.gen_range(1..=9);
        let q = random_cube(&mut rng, &g, gen);
        assert_eq!(g.is_good(&q, &params, 0), good_oracle(&q, 0, 3, 0.4));
    }
}

#[test]
fn power_mean_comparison_is_exact() {
    // 1 unit at unit_exp 4 is 1/16; compare with (1/16)^{1/2} (1)^{1/2} = 1/4.
    let half = Rational::new(1, 2);
    assert_eq!(compare_power_mean(4, 4, 4, 0, half, 0), Ordering::Equal);
    assert_eq!(compare_power_mean(5, 4, 4, 0, half, 0), Ordering::Greater);
    assert_eq!(compare_power_mean(3, 4, 4, 0, half, 0), Ordering::Less);
    assert_eq!(compare_power_mean(0, 4, 4, 0, half, 0), Ordering::Less);
}

#[test]
fn gamma_defaults_and_validation() {
    assert_eq!(
        GoodnessParams::new(1, 1.0, 2).unwrap().gamma,
        Rational::new(1, 12)
    );
    assert_eq!(
        GoodnessParams::new(1, 0.5, 1).unwrap().gamma,
        Rational::new(1, 12)
    );
    assert!(GoodnessParams::new(0, 1.0, 1).is_err());
    assert!(GoodnessParams::with_gamma(1, 1.0, 1, Rational::new(1, 2)).is_err());
    assert!(GoodnessParams::new(1, 1.5, 1).is_err());
}

#[test]
fn translation_examples() {
    let q = Cube::new(1, vec![0]);
    let zero = DyadicGrid::standard(1, 0, 4);
    let t = translate_by_shift(&q, &ShiftSeq::zero(1), 0).unwrap();
    assert_eq!(zero.bounds_f64(&t), (vec![0.0], vec![0.5]));

    let omega = ShiftSeq::from_bits(1, 1, vec![vec![0], vec![1], vec![0]]).unwrap();
    let g = DyadicGrid::shifted(1, 0, 3, omega.clone(), 1).unwrap();
    let t = translate_by_shift(&q, &omega, 1).unwrap();
    assert_eq!(g.bounds_f64(&t), (vec![0.25], vec![0.75]));

    let late = ShiftSeq::from_bits(1, 5, vec![vec![1]]).unwrap();
    assert!(matches!(
        translate_by_shift(&q, &late, 1),
        Err(Error::OutOfRange(_))
    ));
}

fn nested_or_disjoint(g: &DyadicGrid, a: &Cube, b: &Cube) -> bool {
    let (al, bl) = (g.lower_units(a), g.lower_units(b));
    let (as_, bs) = (g.side_units(a), g.side_units(b));
    let disjoint = al
        .iter()
        .zip(&bl)
        .any(|(&x, &y)| x + as_ <= y || y + bs <= x);
    disjoint || g.contains(a, b) || g.contains(b, a)
}

#[test]
fn shifted_grids_stay_nested() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..1000 {
        let d = 1 + trial % 2;
        let omega = ShiftSeq::random(d, 1, 8, &mut rng);
        let g = DyadicGrid::shifted(d, 0, 8, omega.clone(), 1).unwrap();
        let std = DyadicGrid::standard(d, 0, 8);
        let r = {
            let gen = rng.gen_range(0..6);
            random_cube(&mut rng, &std, gen)
        };
        let p = {
            let gen = rng.gen_range(r.gen..=8);
            random_cube(&mut rng, &std, gen)
        };
        let rt = translate_by_shift(&r, &omega, 1).unwrap();
        let pt = translate_by_shift(&p, &omega, 1).unwrap();
        assert!(nested_or_disjoint(&g, &rt, &pt));
        // The shifted ancestor of a translated cube contains it.
        let up = g.ancestor(&pt, (pt.gen - rt.gen) as u32).unwrap();
        assert!(g.contains(&up, &pt));
        // Cubes of one generation share the lattice offset.
        let q2 = translate_by_shift(&p.translated(&vec![1; d]), &omega, 1).unwrap();
        let (a, b) = (g.lower_units(&pt), g.lower_units(&q2));
        assert!(a.iter().zip(&b).all(|(x, y)| y - x == g.side_units(&pt)));
    }
}

#[test]
fn common_ancestor_examples() {
    let g = DyadicGrid::standard(1, 0, 6);
    let big = Cube::new(1, vec![1]);
    let small = Cube::new(4, vec![9]);
    assert_eq!(g.common_ancestor(&small, &big).unwrap(), big);
    let p = Cube::new(2, vec![0]);
    let r = Cube::new(2, vec![2]);
    assert_eq!(g.common_ancestor(&p, &r).unwrap(), Cube::new(0, vec![0]));
    // Across the midpoint of a grid whose top is [0,1) and [1,2): no common ancestor.
    let h = DyadicGrid::standard(1, 0, 6);
    assert!(matches!(
        h.common_ancestor(&Cube::new(1, vec![1]), &Cube::new(1, vec![2])),
        Err(Error::NoCommonAncestor)
    ));
}

/// Minimal standard-or-shifted lattice cube containing both, by walking generations upwards geometrically.
fn minimal_container(g: &DyadicGrid, p: &Cube, r: &Cube) -> Option<Cube> {
    let small = if p.gen >= r.gen { p } else { r };
    let mut k = 0;
    loop {
        let gen = small.gen - k;
        if gen < g.top {
            return None;
        }
        let a = g.ancestor(small, k as u32).ok()?;
        if g.contains(&a, p) && g.contains(&a, r) {
            return Some(a);
        }
        k += 1;
        let _ = gen;
    }
}

#[test]
fn common_ancestor_bound_on_random_good_pairs() {
    let params = GoodnessParams::with_gamma(3, 1.0, 1, Rational::new(2, 5)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut checked = 0;
    let mut draws = 0;
    while checked < 1000 {
        draws += 1;
        assert!(draws < 2_000_000, "too few admissible pairs");
        let d = 1 + (draws % 2) as usize;
        let omega = ShiftSeq::random(d, 1, 12, &mut rng);
        let g = DyadicGrid::shifted(d, 0, 12, omega, 1).unwrap();
        let pr = {
            let gen = rng.gen_range(2..=12);
            random_cube(&mut rng, &g, gen)
        };
        let rr = {
            let gen = rng.gen_range(2..=12);
            random_cube(&mut rng, &g, gen)
        };
        let Ok(check) = g.common_ancestor_check(&pr, &rr, &params) else {
            continue;
        };
        let k = minimal_container(&g, &pr, &rr).expect("ancestor exists");
        assert_eq!(check.ancestor, k);
        if !check.hypotheses_hold {
            continue;
        }
        let lmin = pr.side_f64().min(rr.side_f64());
        let lk = k.side_f64();
        let dist = g.distance(&pr, &rr).unwrap().to_f64();
        assert!(
            lk * (lmin / lk).powf(0.4) <= 8.0 * dist * (1.0 + 1e-12),
            "{pr:?} {rr:?}"
        );
        assert!(check.bound_holds);
        checked += 1;
    }
}

#[test]
fn three_p_family_examples() {
    let g = DyadicGrid::standard(1, 0, 6);
    let r = Cube::new(5, vec![13]);
    let fam = g.three_p_family(&r, 2).unwrap();
    assert_eq!(fam.len(), 3);
    assert!(fam.contains(&g.ancestor(&r, 2).unwrap()));
    let g2 = DyadicGrid::standard(2, 0, 6);
    let r2 = Cube::new(3, vec![2, 5]);
    let fam2 = g2.three_p_family(&r2, 1).unwrap();
    assert_eq!(fam2.len(), 9);
    for p in &fam2 {
        assert!(g2.enlarged_contains(p, &r2));
    }
    assert!(matches!(g.three_p_family(&r, 6), Err(Error::OutOfRange(_))));
}

#[test]
fn three_p_family_is_exactly_the_enlarged_containers() {
    // Brute force: every cube of generation gen(R) - k whose triple contains R.
    let g = DyadicGrid::standard(2, -2, 4);
    for gen in 0..=4 {
        for x in 0..(1i64 << gen) {
            for y in 0..(1i64 << gen) {
                let r = Cube::new(gen, vec![x, y]);
                for k in 0..=(gen + 2) as u32 {
                    let fam = g.three_p_family(&r, k).unwrap();
                    let pg = gen - k as i32;
                    let n = 1i64 << (gen + 2).max(0);
                    let mut brute = Vec::new();
                    for a in -n..=n {
                        for b in -n..=n {
                            let p = Cube::new(pg, vec![a, b]);
                            if g.enlarged_contains(&p, &r) {
                                brute.push(p);
                            }
                        }
                    }
                    let mut fam_sorted = fam.clone();
                    fam_sorted.sort();
                    brute.sort();
                    assert_eq!(fam_sorted, brute);
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn children_partition_exactly(d in 1usize..=3, gen in 0i32..4, k in 0u32..=3, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let omega = ShiftSeq::random(d, 1, 8, &mut rng);
        let g = DyadicGrid::shifted(d, 0, 8, omega, 1).unwrap();
        let q = random_cube(&mut rng, &g, gen);
        let kids = g.children(&q, k).unwrap();
        prop_assert_eq!(kids.len(), 1usize << (k as usize * d));
        let mut vol = Dyadic::ZERO;
        for c in &kids {
            prop_assert_eq!(&g.ancestor(c, k).unwrap(), &q);
            prop_assert!(g.contains(&q, c));
            vol = vol.add(c.volume());
        }
        prop_assert_eq!(vol, q.volume());
        let mut coords: Vec<_> = kids.iter().map(|c| c.coords.clone()).collect();
        coords.dedup();
        prop_assert_eq!(coords.len(), kids.len());
        prop_assert_eq!(g.ancestor(&q, 0).unwrap().side(), q.side());
        if k as i32 <= gen {
            prop_assert_eq!(g.ancestor(&q, k).unwrap().side(), q.side().mul(Dyadic::pow2(k as i32)));
        }
    }

    #[test]
    fn long_distance_symmetric_and_matches_point_oracle(seed in any::<u64>(), d in 1usize..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let omega = ShiftSeq::random(d, 1, 4, &mut rng);
        let g = DyadicGrid::shifted(d, 0, 4, omega, 1).unwrap();
        let p = { let gen = rng.gen_range(0..=4); random_cube(&mut rng, &g, gen) };
        let r = { let gen = rng.gen_range(0..=4); random_cube(&mut rng, &g, gen) };
        let dpr = g.long_distance(&p, &r).unwrap();
        prop_assert_eq!(dpr, g.long_distance(&r, &p).unwrap());
        prop_assert!(dpr >= p.side().max(r.side()));
        let (pp, rp) = (closed_points(&g, &p), closed_points(&g, &r));
        let mut best = i64::MAX;
        for a in &pp {
            for b in &rp {
                best = best.min(a.iter().zip(b).map(|(x, y)| (x - y).abs()).max().unwrap());
            }
        }
        prop_assert_eq!(g.distance_units(&p, &r), best);
        let oracle = p.side().add(Dyadic::new(best as i128, g.unit_exp())).add(r.side());
        prop_assert_eq!(dpr, oracle);
    }
}
