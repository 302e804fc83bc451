use dyadic_sparse::decomposition::check_sparse;
use dyadic_sparse::grid_fn::generate;
use dyadic_sparse::operators::{dyadic_square_profile, SquareVariant};
use dyadic_sparse::verify::{
    build_sparse_cover, domination_integral, domination_study, goodness_stats, offdiag_bound,
    offdiag_check, offdiag_eta, random_admissible_pairs, random_pair, verify_domination,
    weak11_profile, DominationConfig, GoodnessStatsConfig,
};
use dyadic_sparse::{Cube, DyadicGrid, Error, Generator, GoodnessParams, GridFn, Rational};

fn params(r: u32, dim: usize) -> GoodnessParams {
    GoodnessParams::with_gamma(r, 1.0, dim, Rational::new(2, 5)).unwrap()
}

#[test]
fn offdiag_matches_closed_form_in_one_dimension() {
    let grid = DyadicGrid::standard(1, 0, 12);
    let prm = params(4, 1);
    let pairs = random_admissible_pairs(&grid, &prm, 60, 5).unwrap();
    for beta in [0.5, 1.0, 2.0] {
        for (q, p) in &pairs {
            let res = offdiag_check(&grid, q, p, beta, &prm).unwrap();
            let (ql, qh) = (
                q.coords[0] as f64 * q.side_f64(),
                (q.coords[0] + 1) as f64 * q.side_f64(),
            );
            let (pl, ph) = (
                p.coords[0] as f64 * p.side_f64(),
                (p.coords[0] + 1) as f64 * p.side_f64(),
            );
            let (tl, th) = (0.0, 1.0);
            let left = if pl > tl {
                ((ql - pl).powf(-beta) - (ql - tl).powf(-beta)) / beta
            } else {
                0.0
            };
            let right = if ph < th {
                ((ph - qh).powf(-beta) - (th - qh).powf(-beta)) / beta
            } else {
                0.0
            };
            let want = q.side_f64().powf(beta) * (left + right);
            assert!(
                (res.lhs - want).abs() <= 1e-6 * want.max(1e-300),
                "{q:?} {p:?} beta {beta}: {} vs {want}",
                res.lhs
            );
            assert!(res.ratio <= res.bound);
        }
    }
}

#[test]
fn offdiag_ratio_is_bounded_in_two_dimensions() {
    let grid = DyadicGrid::standard(2, 0, 8);
    let prm = params(4, 2);
    let beta = 1.0;
    let eta = offdiag_eta(beta, &prm);
    assert!((eta - (1.0 - 0.4 * 3.0)).abs() < 1e-15);
    for (q, p) in random_admissible_pairs(&grid, &prm, 200, 9).unwrap() {
        let res = offdiag_check(&grid, &q, &p, beta, &prm).unwrap();
        assert!(
            res.ratio.is_finite() && res.ratio <= offdiag_bound(beta, 2),
            "{q:?} {p:?} {}",
            res.ratio
        );
    }
}

#[test]
fn offdiag_errors() {
    let grid = DyadicGrid::standard(1, 0, 10);
    let prm = params(4, 1);
    let (q, p) = random_admissible_pairs(&grid, &prm, 1, 1)
        .unwrap()
        .remove(0);
    assert!(matches!(
        offdiag_check(&grid, &q, &p, 0.0, &prm),
        Err(Error::Domain(_))
    ));
    let near = grid.ancestor(&q, 1).unwrap();
    assert!(matches!(
        offdiag_check(&grid, &q, &near, 1.0, &prm),
        Err(Error::Precondition(_))
    ));
    // touching the boundary of every ancestor: never good
    let edge = Cube::new(8, vec![0]);
    assert!(matches!(
        offdiag_check(&grid, &edge, &Cube::unit(1), 1.0, &prm),
        Err(Error::Precondition(_))
    ));
    let shallow = DyadicGrid::standard(1, 0, 2);
    assert!(random_admissible_pairs(&shallow, &prm, 1, 1).is_err());
}

#[test]
fn goodness_monte_carlo() {
    let mut last_good = 0;
    let cfg = GoodnessStatsConfig::new(4000, 17);
    for r in 1..=5 {
        let st = goodness_stats(&params(r, 1), &cfg).unwrap();
        assert_eq!(st.bin_total.iter().sum::<usize>(), 4000);
        assert_eq!(st.bin_good.iter().sum::<usize>(), st.good);
        assert!(st.ci_low <= st.pi_good && st.pi_good <= st.ci_high);
        // common random numbers: the good set only grows with r
        assert!(st.good >= last_good);
        last_good = st.good;
    }
    let a = goodness_stats(&params(4, 2), &cfg).unwrap();
    let b = goodness_stats(&params(4, 2), &cfg).unwrap();
    assert_eq!(a, b);
    assert!(!a.degenerate && a.p_value > 0.0 && a.p_value <= 1.0 && a.dof == 3);
    assert!(matches!(
        goodness_stats(&params(4, 1), &GoodnessStatsConfig::new(10, 1)),
        Err(Error::Config(_))
    ));
    let bad_bins = GoodnessStatsConfig {
        bins: 1,
        ..GoodnessStatsConfig::new(2000, 1)
    };
    assert!(matches!(
        goodness_stats(&params(4, 1), &bad_bins),
        Err(Error::Config(_))
    ));
}

/// `sup_v v |{S >= v}| / ||f||_1` by a direct scan over every candidate level.
fn weak_oracle(f: &GridFn, j: u32, k_top: u32) -> f64 {
    let s = dyadic_square_profile(f, j, SquareVariant::Plain, k_top).unwrap();
    let mut pts: Vec<(f64, f64)> = s
        .interior
        .values()
        .iter()
        .map(|v| (v.sqrt(), f.cell_volume_f64()))
        .collect();
    for (k, v) in s.exterior.iter().enumerate() {
        let m = k as i32 + 1;
        let d = f.dim() as i32;
        pts.push((v.sqrt(), (2f64).powi(m * d) - (2f64).powi((m - 1) * d)));
    }
    let norm1: f64 = f.values().iter().map(|v| v.abs()).sum::<f64>() * f.cell_volume_f64();
    let mut best = 0.0f64;
    for &(v, _) in &pts {
        let mass: f64 = pts.iter().filter(|p| p.0 >= v).map(|p| p.1).sum();
        best = best.max(v * mass);
    }
    best / norm1
}

#[test]
fn weak_profile_matches_direct_scan() {
    let spikes: GridFn = generate(
        &Generator::SpikeTrain {
            locations: vec![vec![0.13], vec![0.5], vec![0.77]],
            height: None,
        },
        1,
        9,
        Cube::unit(1),
    )
    .unwrap();
    let js: Vec<u32> = (0..6).collect();
    let t = weak11_profile(&spikes, &js, 3).unwrap();
    assert!((t.norm1 - 3.0).abs() < 1e-12);
    for row in &t.rows {
        let want = weak_oracle(&spikes, row.j, 3);
        assert!((row.profile - want).abs() <= 1e-12 * want, "j={}", row.j);
    }
    let c = t
        .rows
        .iter()
        .map(|r| r.profile / (1.0 + r.j as f64))
        .fold(0.0, f64::max);
    assert_eq!(t.constant, c);
    assert!(t.exponent.is_finite());
    let zero = GridFn::zeros(1, 4, Cube::unit(1)).unwrap();
    assert!(matches!(
        weak11_profile(&zero, &[0], 1),
        Err(Error::Domain(_))
    ));
}

#[test]
fn covers_are_half_sparse() {
    for seed in 0..8u64 {
        let d = 1 + (seed % 2) as usize;
        let depth = if d == 1 { 9 } else { 5 };
        let (f, g) = random_pair(seed, d, depth).unwrap();
        for j in 0..3 {
            let cover = build_sparse_cover(&f, &g, j, 1.0, 3).unwrap();
            let rep = &cover.report;
            assert!(rep.sparse.passed && rep.sparse.tau_observed >= 0.5);
            assert_eq!(check_sparse(&cover.collection), rep.sparse);
            assert_eq!(cover.collection.entries[0].cube, Cube::unit(d));
            assert_eq!(rep.c_final, (2f64).powi(rep.doublings as i32));
            assert!(rep.integral > 0.0 && rep.lambda > 0.0 && rep.ratio.is_finite());
            let direct = domination_integral(&f, &g, j, 3).unwrap();
            assert_eq!(direct, rep.integral);
            // M^{3D} g dominates each <|g|>_{3K} on P, so the integral controls B_j up to 3^d.
            assert!(rep.integral * 3f64.powi(d as i32) >= rep.form * (1.0 - 1e-12));
        }
    }
    let (f, g) = random_pair(1, 1, 4).unwrap();
    assert!(matches!(
        build_sparse_cover(&f, &g, 0, 0.5, 1),
        Err(Error::Config(_))
    ));
    assert!(matches!(
        build_sparse_cover(&f, &g, 4, 1.0, 1),
        Err(Error::Resolution(_))
    ));
}

#[test]
fn random_pairs_are_reproducible() {
    let a = random_pair(3, 2, 6).unwrap();
    let b = random_pair(3, 2, 6).unwrap();
    assert_eq!(a.0, b.0);
    assert_eq!(a.1, b.1);
    let c = random_pair(4, 2, 6).unwrap();
    assert_ne!(a.0, c.0);
}

#[test]
fn domination_on_small_pairs() {
    let cfg = DominationConfig {
        j_max: 4,
        ..DominationConfig::default_for(1)
    };
    let (f, g) = random_pair(2, 1, 9).unwrap();
    let rep = verify_domination(&f, &g, &cfg).unwrap();
    assert!(rep.passed);
    assert!(rep.ratio > 0.0 && rep.ratio.is_finite());
    assert_eq!(rep.covers.len(), 5);
    assert!(rep.parents.sparse.tau_observed >= 0.25);
    assert!(rep.union.sparse.passed);

    let zero = GridFn::zeros(1, 9, Cube::unit(1)).unwrap();
    let rep = verify_domination(&zero, &g, &cfg).unwrap_or_else(|e| panic!("{e}"));
    assert_eq!(rep.ratio, 0.0);

    let study = domination_study(&[1, 2, 3, 4], 1, 8, &cfg).unwrap();
    assert_eq!(study.rows.len(), 4);
    assert!(study.rows.iter().all(|r| r.certified));
    assert!((study.spread - study.max_ratio / study.median_ratio).abs() < 1e-12);
}
