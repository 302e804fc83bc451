use std::fmt::Write as _;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use dyadic_sparse::decomposition::{
    build_stopping_family, check_sparse, cz_decompose_r, StoppingMode, StoppingOptions,
};
use dyadic_sparse::grid_fn::generate;
use dyadic_sparse::grid_fn::io::{from_json, read_binary};
use dyadic_sparse::haar::HaarCoefficients;
use dyadic_sparse::operators::{testing_constant, KernelSpec, TestingParams, TimeGrid};
use dyadic_sparse::verify::{
    build_sparse_cover, domination_study, goodness_stats, offdiag_bound, offdiag_check,
    offdiag_eta, random_admissible_pairs, random_pair, weak11_profile, DominationConfig,
    GoodnessStatsConfig,
};
use dyadic_sparse::weights::{
    sharp_exponent_experiment, write_fit_csv, CubeFamily, InputFamily, WeightCase,
};
use dyadic_sparse::{Cube, DyadicGrid, Error, GoodnessParams, GridFn};
use serde_json::{json, Value};

use crate::config::{parse_gamma, Family, Mode, Settings};

pub const TOL: f64 = 1e-12;

pub struct Outcome {
    pub result: Value,
    pub passed: bool,
    pub csv: Option<String>,
}

#[derive(Debug)]
pub enum Failure {
    /// Bad configuration or input: exit 2.
    Config(String),
    /// A construction invariant broke while running: exit 1.
    Invariant(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::StoppingMeasure { .. } | Error::InvalidSigma(_) => {
                Failure::Invariant(e.to_string())
            }
            _ => Failure::Config(e.to_string()),
        }
    }
}

type Run = Result<Outcome, Failure>;

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn dim(s: &mut Settings) -> usize {
    *s.d.get_or_insert(1)
}

fn depth(s: &mut Settings, d1: u32, d2: u32) -> u32 {
    let d = dim(s);
    *s.depth.get_or_insert(match d {
        1 => d1,
        2 => d2,
        _ => 4,
    })
}

fn load(path: &Path) -> Result<GridFn, Failure> {
    let err = |e: std::io::Error| Failure::Config(format!("{}: {e}", path.display()));
    if path.extension().is_some_and(|e| e == "json") {
        Ok(from_json(&std::fs::read_to_string(path).map_err(err)?)?)
    } else {
        Ok(read_binary(BufReader::new(File::open(path).map_err(err)?))?)
    }
}

/// `f` from `--input`, then `--generator`, then the seeded random pair.
fn input_f(s: &mut Settings) -> Result<GridFn, Failure> {
    if let Some(p) = s.input.clone() {
        let f = load(&p)?;
        s.d = Some(f.dim());
        s.depth = Some(f.depth());
        return Ok(f);
    }
    let (d, j) = (dim(s), depth(s, 10, 6));
    let seed = *s.seed.get_or_insert(0);
    match &s.generator {
        Some(g) => Ok(generate(g, d, j, Cube::unit(d))?),
        None => Ok(random_pair(seed, d, j)?.0),
    }
}

fn input_pair(s: &mut Settings) -> Result<(GridFn, GridFn), Failure> {
    let f = input_f(s)?;
    let g = match s.g_input.clone() {
        Some(p) => load(&p)?,
        None => {
            let seed = *s.seed.get_or_insert(0);
            random_pair(seed, f.dim(), f.depth())?.1
        }
    };
    f.ensure_same_layout(&g)?;
    Ok((f, g))
}

fn default_a(s: &mut Settings) -> f64 {
    let d = dim(s);
    *s.a.get_or_insert((2f64).powi(d as i32 + 2))
}

fn goodness_params(s: &mut Settings) -> Result<GoodnessParams, Failure> {
    let d = dim(s);
    let r = *s.r.get_or_insert(4);
    let alpha = *s.alpha.get_or_insert(1.0);
    let prm = match &s.gamma {
        Some(g) => {
            GoodnessParams::with_gamma(r, alpha, d, parse_gamma(g).map_err(Failure::Config)?)?
        }
        None => GoodnessParams::new(r, alpha, d)?,
    };
    s.gamma = Some(prm.gamma.to_string());
    Ok(prm)
}

fn cube_cells(q: &Cube) -> String {
    let c: Vec<String> = q.coords.iter().map(|c| c.to_string()).collect();
    format!("{},{}", q.gen, c.join(","))
}

fn coord_header(d: usize) -> String {
    (0..d)
        .map(|i| format!("coord_{i}"))
        .collect::<Vec<_>>()
        .join(",")
}

pub fn haar(s: &mut Settings) -> Run {
    let f = input_f(s)?;
    let c = HaarCoefficients::analyze(&f);
    let back = c.synthesize()?;
    let peak = f.max_abs().max(f64::MIN_POSITIVE);
    let rec = back
        .values()
        .iter()
        .zip(f.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / peak;
    let norm2: f64 = f.values().iter().map(|v| v * v).sum::<f64>() * f.cell_volume_f64();
    let energy = c.parseval_energy();
    let parseval = (energy - norm2).abs() / norm2.max(f64::MIN_POSITIVE);
    let mut csv = Vec::new();
    c.write_csv(&mut csv)?;
    Ok(Outcome {
        result: json!({
            "coefficients": c.coeffs.iter().map(Vec::len).sum::<usize>(),
            "mean": c.mean,
            "energy": energy,
            "norm2_squared": norm2,
            "reconstruction_error": rec,
            "parseval_error": parseval,
            "tolerance": TOL,
        }),
        passed: rec <= TOL && parseval <= TOL,
        csv: Some(String::from_utf8(csv).expect("ascii csv")),
    })
}

pub fn cz(s: &mut Settings) -> Run {
    let f = input_f(s)?;
    let r = *s.r.get_or_insert(1);
    let a = default_a(s);
    let spec = s.lambda.get_or_insert_with(|| "auto".into()).clone();
    let lambda = if spec == "auto" {
        a * f.abs().cube_average(f.root())?
    } else {
        spec.parse::<f64>()
            .map_err(|e| Failure::Config(format!("lambda {spec:?}: {e}")))?
    };
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Failure::Config(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    let res = cz_decompose_r(&f, lambda, r)?;
    let chk = res.check(&f, TOL);
    let mut csv = format!("gen,{},average_abs\n", coord_header(f.dim()));
    for b in &res.bad_cubes {
        writeln!(csv, "{},{:e}", cube_cells(&b.cube), b.average_abs).unwrap();
    }
    let bad: Vec<Value> = res
        .bad_cubes
        .iter()
        .map(|b| json!({"cube": b.cube, "average_abs": b.average_abs}))
        .collect();
    Ok(Outcome {
        result: json!({ "lambda": lambda, "r": r, "bad_cubes": bad, "check": chk }),
        passed: chk.passed,
        csv: Some(csv),
    })
}

fn stopping_options(s: &mut Settings) -> StoppingOptions {
    let a = default_a(s);
    let mode = match *s.mode.get_or_insert(Mode::FAndG) {
        Mode::FAndG => StoppingMode::FAndG,
        Mode::GOnly => StoppingMode::GOnly,
    };
    StoppingOptions {
        a,
        mode,
        adapt: *s.adapt.get_or_insert(true),
    }
}

pub fn stopping(s: &mut Settings) -> Run {
    let (f, g) = input_pair(s)?;
    let opts = stopping_options(s);
    let forest = build_stopping_family(&f, &g, f.root(), &opts)?;
    let family = forest.sparse_collection();
    let report = check_sparse(&family);
    let parents = check_sparse(&family.parents()?);
    let mut csv = format!("gen,{}\n", coord_header(f.dim()));
    for q in family.cubes() {
        writeln!(csv, "{}", cube_cells(&q)).unwrap();
    }
    Ok(Outcome {
        passed: report.passed && report.tau_observed >= 0.5 && parents.passed,
        result: json!({ "cubes": family.cubes(), "sparse": report, "parents": parents }),
        csv: Some(csv),
    })
}

fn j_range(s: &mut Settings, depth: u32, default: u32) -> Vec<u32> {
    let j_max = (*s.j_max.get_or_insert(default)).min(depth.saturating_sub(1));
    (0..=j_max).collect()
}

pub fn sparse_cover(s: &mut Settings) -> Run {
    let (f, g) = input_pair(s)?;
    let c0 = *s.c.get_or_insert(1.0);
    let k_top = *s.k_top.get_or_insert(4);
    let mut covers = Vec::new();
    for j in j_range(s, f.depth(), 6) {
        covers.push(build_sparse_cover(&f, &g, j, c0, k_top)?.report);
    }
    let mut csv = String::from("j,c_final,cubes,tau_observed,integral,lambda,ratio,form\n");
    for c in &covers {
        writeln!(
            csv,
            "{},{},{},{},{:e},{:e},{:e},{:e}",
            c.j, c.c_final, c.cubes, c.sparse.tau_observed, c.integral, c.lambda, c.ratio, c.form
        )
        .unwrap();
    }
    Ok(Outcome {
        passed: covers.iter().all(|c| c.sparse.passed),
        result: to_value(&covers),
        csv: Some(csv),
    })
}

pub fn domination(s: &mut Settings) -> Run {
    let (d, j) = (dim(s), depth(s, 10, 6));
    let base = *s.seed.get_or_insert(0);
    let n = *s.seeds.get_or_insert(100);
    let mut cfg = DominationConfig::default_for(d);
    cfg.samples_per_octave = *s.samples_per_octave.get_or_insert(cfg.samples_per_octave);
    cfg.k_top = *s.k_top.get_or_insert(cfg.k_top);
    cfg.c0 = *s.c.get_or_insert(cfg.c0);
    cfg.j_max = *s.j_max.get_or_insert(cfg.j_max);
    cfg.stopping = stopping_options(s);
    let seeds: Vec<u64> = (base..base + n as u64).collect();
    if seeds.is_empty() {
        return Err(Failure::Config("need at least one seed".into()));
    }
    let study = domination_study(&seeds, d, j, &cfg)?;
    let mut csv = String::from("seed,ratio,union_cubes,certified\n");
    for r in &study.rows {
        writeln!(
            csv,
            "{},{:e},{},{}",
            r.seed, r.ratio, r.union_cubes, r.certified
        )
        .unwrap();
    }
    Ok(Outcome {
        passed: study
            .rows
            .iter()
            .all(|r| r.certified && r.ratio.is_finite()),
        result: to_value(&study),
        csv: Some(csv),
    })
}

pub fn weak11(s: &mut Settings) -> Run {
    let f = input_f(s)?;
    let k_top = *s.k_top.get_or_insert(4);
    let js = j_range(s, f.depth(), 8);
    let table = weak11_profile(&f, &js, k_top)?;
    let mut csv = String::from("j,profile,level\n");
    for r in &table.rows {
        writeln!(csv, "{},{:e},{:e}", r.j, r.profile, r.level).unwrap();
    }
    Ok(Outcome {
        passed: table.constant.is_finite() && table.rows.iter().all(|r| r.profile.is_finite()),
        result: to_value(&table),
        csv: Some(csv),
    })
}

pub fn testing(s: &mut Settings) -> Run {
    let (d, j) = (dim(s), depth(s, 10, 7));
    let spo = *s.samples_per_octave.get_or_insert(4);
    let rep = testing_constant(&KernelSpec::builtin(d), &TestingParams::new(d, j, spo))?;
    let mut csv = format!("gen,{},value\n", coord_header(d));
    for e in &rep.per_cube {
        writeln!(csv, "{},{:e}", cube_cells(&e.cube), e.value).unwrap();
    }
    Ok(Outcome {
        passed: rep.value.is_finite() && rep.value >= 0.0,
        result: to_value(&rep),
        csv: Some(csv),
    })
}

pub fn goodness(s: &mut Settings) -> Run {
    let prm = goodness_params(s)?;
    let cfg = GoodnessStatsConfig::new(*s.samples.get_or_insert(10_000), *s.seed.get_or_insert(0));
    let st = goodness_stats(&prm, &cfg)?;
    let mut csv = String::from("bin,good,total\n");
    for (i, (g, t)) in st.bin_good.iter().zip(&st.bin_total).enumerate() {
        writeln!(csv, "{i},{g},{t}").unwrap();
    }
    Ok(Outcome {
        passed: st.degenerate || st.p_value >= 0.01,
        result: to_value(&st),
        csv: Some(csv),
    })
}

pub fn weights(s: &mut Settings) -> Run {
    let (d, j) = (dim(s), depth(s, 12, 5));
    let betas = s
        .betas
        .get_or_insert_with(|| vec![0.0, -0.3, -0.5, -0.7, -0.85])
        .clone();
    let p = *s.p.get_or_insert(2.0);
    let family = match *s.family.get_or_insert(Family::Lattice) {
        Family::Dyadic => CubeFamily::Dyadic,
        Family::Lattice => CubeFamily::Lattice,
    };
    let spo = *s.samples_per_octave.get_or_insert(4);
    let k_top = *s.k_top.get_or_insert(2);
    let center = vec![0.5; d];
    let cases = betas
        .iter()
        .map(|&b| WeightCase::power(b, center.clone(), d, j, Cube::unit(d)))
        .collect::<Result<Vec<_>, _>>()?;
    let tg = TimeGrid::for_function(&GridFn::zeros(d, j, Cube::unit(d))?, spo, k_top);
    let inputs = InputFamily::Adversarial {
        center,
        levels: (1..j.min(8)).collect(),
    };
    let rep = sharp_exponent_experiment(&KernelSpec::builtin(d), &tg, p, family, &cases, &inputs)?;
    let mut csv = Vec::new();
    write_fit_csv(&rep, &mut csv)?;
    Ok(Outcome {
        passed: rep.slope.is_finite(),
        result: to_value(&rep),
        csv: Some(String::from_utf8(csv).expect("ascii csv")),
    })
}

pub fn offdiag(s: &mut Settings) -> Run {
    let (d, j) = (dim(s), depth(s, 8, 8));
    let prm = goodness_params(s)?;
    let betas = s.betas.get_or_insert_with(|| vec![1.0]).clone();
    let n = *s.pairs.get_or_insert(1000);
    let seed = *s.seed.get_or_insert(0);
    let grid = DyadicGrid::standard(d, 0, j as i32);
    let pairs = random_admissible_pairs(&grid, &prm, n, seed)?;
    let mut rows = Vec::new();
    let mut csv = String::from("beta,eta,max_ratio,bound\n");
    let mut passed = true;
    for &beta in &betas {
        let mut worst = 0.0f64;
        for (q, p) in &pairs {
            worst = worst.max(offdiag_check(&grid, q, p, beta, &prm)?.ratio);
        }
        let bound = offdiag_bound(beta, d);
        let eta = offdiag_eta(beta, &prm);
        passed &= worst.is_finite() && worst <= bound;
        writeln!(csv, "{beta},{eta},{worst:e},{bound}").unwrap();
        rows.push(json!({ "beta": beta, "eta": eta, "max_ratio": worst, "bound": bound }));
    }
    Ok(Outcome {
        passed,
        result: json!({ "pairs": pairs.len(), "betas": rows }),
        csv: Some(csv),
    })
}
