//! Acceptance checks, one line per criterion. Run with `cargo test --test acceptance`.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{generic_offset, pl_degree, PolyMap};
use inclusion_degree::bvp::{build, image_convergence, transversality_check};
use inclusion_degree::continuation::{
    degree_jump, detect_bifurcation, sign_profile, trace, BifurcationStatus, OrientedFamily, ParamRectangle,
    TraceConfig,
};
use inclusion_degree::degree::{
    brouwer_degree, corrector_det, l_equivalent, reduction_check, AffineField, DegreeConfig, FnField, Region,
};
use inclusion_degree::setvalued::{Family, SetValuedMap};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const RANDOM_MAPS: usize = 200;
const DEGREE_TIME_LIMIT: Duration = Duration::from_secs(120);
const CORRECTOR_PRODUCT_TOL: f64 = 1e-10;
const KERNEL_TOL: f64 = 1e-12;
const MIN_IMAGE_ORDER: f64 = 1.9;
const LAMBDA_TOL: f64 = 1e-8;
const GRAPH_TOL: f64 = 1e-10;
const REDUCTION_INSTANCES: usize = 50;

fn cube(n: usize) -> Region {
    Region::cube(n, 1.0).unwrap()
}

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn brouwer_properties() -> Outcome {
    let start = Instant::now();
    let cfg = DegreeConfig::default();
    // draw the maps serially so the set is fixed, then evaluate in parallel
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let maps: Vec<(PolyMap, DVector<f64>)> = (0..RANDOM_MAPS * 2)
        .map(|k| {
            let n = 1 + k % 3;
            let map = PolyMap::random(n, &mut rng);
            let y = generic_offset(n, &mut rng);
            (map, y)
        })
        .collect();
    let results: Vec<Option<(i64, i64)>> = maps
        .par_iter()
        .map(|(map, y)| {
            let n = map.dim();
            let d = brouwer_degree(&map.field(), &cube(n), &DVector::zeros(n), &cfg).ok()?;
            let cells = [0, 2000, 160, 32][n];
            Some((d.value, pl_degree(&|x| map.eval(x), &cube(n), cells, y)))
        })
        .collect();
    let admissible: Vec<(i64, i64)> = results.into_iter().flatten().take(RANDOM_MAPS).collect();
    ensure(admissible.len() == RANDOM_MAPS, format!("only {} admissible maps", admissible.len()))?;
    let mismatches = admissible.iter().filter(|(a, b)| a != b).count();
    ensure(mismatches == 0, format!("{mismatches} of {RANDOM_MAPS} maps disagree with the PL oracle"))?;

    for n in 1..=4 {
        let id = AffineField::linear(DMatrix::identity(n, n));
        let d = brouwer_degree(&id, &cube(n), &DVector::zeros(n), &cfg).map_err(|e| e.to_string())?;
        ensure(d.value == 1, format!("deg(id) = {} in dim {n}", d.value))?;
    }

    let g = FnField::new(2, |v| {
        DVector::from_vec(vec![(v[0] + 0.5) * (v[0] - 0.1) * (v[0] - 0.6), v[1] + 0.2 * v[0]])
    });
    let whole = brouwer_degree(&g, &cube(2), &DVector::zeros(2), &cfg).map_err(|e| e.to_string())?;
    let (left, right) = cube(2).split(0, 0.35).map_err(|e| e.to_string())?;
    let dl = brouwer_degree(&g, &left, &DVector::zeros(2), &cfg).map_err(|e| e.to_string())?;
    let dr = brouwer_degree(&g, &right, &DVector::zeros(2), &cfg).map_err(|e| e.to_string())?;
    ensure(whole.value == dl.value + dr.value, "additivity over a split fails")?;

    let mut homotopy = Vec::new();
    for k in 0..=10 {
        let tau = k as f64 / 10.0;
        let h = FnField::new(2, move |v| {
            DVector::from_vec(vec![v[0].powi(3) - 0.25 * v[0] + tau * 0.1 * v[1] * v[1], v[1] - tau * 0.3 * v[0]])
        });
        homotopy.push(brouwer_degree(&h, &cube(2), &DVector::zeros(2), &cfg).map_err(|e| e.to_string())?.value);
    }
    ensure(homotopy.iter().all(|d| *d == homotopy[0]), format!("homotopy degrees {homotopy:?}"))?;

    let elapsed = start.elapsed();
    ensure(elapsed <= DEGREE_TIME_LIMIT, format!("took {elapsed:?}"))?;
    Ok(format!("{RANDOM_MAPS} maps match the PL oracle, normalization, additivity, homotopy in {:.1?}", elapsed))
}

fn orientation_classes() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let rank = rng.gen_range(2..=3);
        let u = DMatrix::from_fn(4, rank, |_, _| rng.gen_range(-1.0..1.0));
        let v = DMatrix::from_fn(rank, 4, |_, _| rng.gen_range(-1.0..1.0));
        let l: DMatrix<f64> = u * v;
        let correctors: Vec<DMatrix<f64>> =
            (0..100).map(|_| DMatrix::from_fn(4, 4, |_, _| rng.gen_range(-1.0..1.0))).collect();
        let class: Vec<bool> = correctors
            .iter()
            .map(|a| l_equivalent(&l, &correctors[0], a))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        ensure(class.iter().any(|c| !c), "only one class was found")?;
        for i in 0..correctors.len() {
            for j in i + 1..correctors.len() {
                let eq = l_equivalent(&l, &correctors[i], &correctors[j]).map_err(|e| e.to_string())?;
                ensure(eq == (class[i] == class[j]), "equivalence is not a two-class partition")?;
                let ab = corrector_det(&l, &correctors[i], &correctors[j]).map_err(|e| e.to_string())?;
                let ba = corrector_det(&l, &correctors[j], &correctors[i]).map_err(|e| e.to_string())?;
                worst = worst.max((ab * ba - 1.0).abs());
            }
        }
    }
    ensure(worst <= CORRECTOR_PRODUCT_TOL, format!("corrector product off by {worst:.2e}"))?;
    Ok(format!("10 operators x 100 correctors in two classes, product error {worst:.1e}"))
}

fn structural() -> Outcome {
    for n in [16, 32, 64, 128] {
        let d = build(n).map_err(|e| e.to_string())?;
        let res = (d.l() * d.constant(1.0)).amax();
        ensure(res <= KERNEL_TOL, format!("|L 1| = {res:.2e} at n = {n}"))?;
        ensure(d.kernel_dim() == 1, format!("kernel dim {} at n = {n}", d.kernel_dim()))?;
        let r = transversality_check(&d, 1.0).map_err(|e| e.to_string())?;
        ensure(r.augmented_rank == n, format!("rank {} at n = {n}", r.augmented_rank))?;
    }
    let (_, order) = image_convergence(&[16, 32, 64, 128]).map_err(|e| e.to_string())?;
    ensure(order >= MIN_IMAGE_ORDER, format!("image residual order {order:.2}"))?;
    Ok(format!("kernel, rank and image residual order {order:.2} at n = 16..128"))
}

fn degree_jumps() -> Outcome {
    for n in [16, 64] {
        let d = build(n).map_err(|e| e.to_string())?;
        let jump = degree_jump(&d, 0.25).map_err(|e| e.to_string())?;
        ensure(jump == (1, -1), format!("jump {jump:?} at n = {n}"))?;
        let fam = OrientedFamily::from_disc(&d, 0.5).map_err(|e| e.to_string())?;
        let p = sign_profile(&fam, 0.5, 21).map_err(|e| e.to_string())?;
        ensure(p.constant_each_side(), format!("sign not constant at n = {n}"))?;
    }
    Ok("degree (+1, -1) at n = 16, 64; sign constant on 21 samples per side".into())
}

fn symmetric_grid() -> Vec<f64> {
    let mut g: Vec<f64> = [0.005, 0.01, 0.02, 0.04].iter().flat_map(|e| [*e, -*e]).collect();
    g.sort_by(f64::total_cmp);
    g
}

fn nonlocal_closed_form() -> Outcome {
    let d = build(32).map_err(|e| e.to_string())?;
    let m = SetValuedMap::new(Family::default_nonlocal(), &d).map_err(|e| e.to_string())?;
    let rect = ParamRectangle::with_grid(&d, 0.04, 0.25, symmetric_grid()).map_err(|e| e.to_string())?;
    let r = trace(&d, &m, &rect, &TraceConfig::new(&d, 0.25, 5)).map_err(|e| e.to_string())?;
    ensure(r.nonempty_all, format!("empty slices at {:?}", r.failures()))?;
    let mut worst: f64 = 0.0;
    for slice in &r.slices {
        for p in &slice.samples {
            let want = f64::from(p.branch) * slice.eps * ((1.0 - p.s) + 2.0 * p.s);
            worst = worst.max((p.lambda - want).abs());
        }
    }
    ensure(worst <= LAMBDA_TOL, format!("closed form error {worst:.2e}"))?;
    Ok(format!("lambda = +-eps (1 + s) on 8 slices, error {worst:.1e}"))
}

fn piecewise_affine_interval() -> Outcome {
    let d = build(32).map_err(|e| e.to_string())?;
    let m = SetValuedMap::new(Family::default_piecewise_affine(), &d).map_err(|e| e.to_string())?;
    ensure(m.zero_membership().map_err(|e| e.to_string())? == [false, false], "0 lies in phi(+-1)")?;
    let rect = ParamRectangle::with_grid(&d, 0.04, 0.25, symmetric_grid()).map_err(|e| e.to_string())?;
    let r = trace(&d, &m, &rect, &TraceConfig::new(&d, 0.25, 5)).map_err(|e| e.to_string())?;
    ensure(r.nonempty_all, format!("empty slices at {:?}", r.failures()))?;
    for slice in &r.slices {
        for l in r.gamma(slice.eps) {
            let t = (l / slice.eps).abs();
            ensure(
                (0.5 - LAMBDA_TOL..=1.5 + LAMBDA_TOL).contains(&t),
                format!("lambda/eps = {t} at eps = {}", slice.eps),
            )?;
        }
    }
    Ok("|lambda| / |eps| in [0.5, 1.5] on 8 slices, 0 not in phi(+-1)".into())
}

fn families() -> [Family; 3] {
    [Family::default_piecewise_affine(), Family::default_nonlocal(), Family::default_aumann()]
}

fn bifurcation() -> Outcome {
    let d = build(32).map_err(|e| e.to_string())?;
    let eps = [0.04, 0.02, 0.01, 0.005, 0.0025];
    let mut points = Vec::new();
    for fam in families() {
        let name = fam.name();
        let m = SetValuedMap::new(fam, &d).map_err(|e| e.to_string())?;
        let r = detect_bifurcation(&d, &m, &eps, &TraceConfig::new(&d, 0.25, 3)).map_err(|e| e.to_string())?;
        ensure(
            r.status == BifurcationStatus::Detected,
            format!("{name}: {}", r.reason.clone().unwrap_or_default()),
        )?;
        points.push(format!("{name} -> {:+}", r.point.unwrap_or(0)));
    }
    Ok(format!("bifurcation detected: {}", points.join(", ")))
}

fn graph_and_usc() -> Outcome {
    let d = build(32).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let deltas = [0.1, 0.05, 0.025, 0.0125];
    let mut worst: f64 = 0.0;
    for fam in families() {
        let name = fam.name();
        let m = SetValuedMap::new(fam, &d).map_err(|e| e.to_string())?;
        for _ in 0..50 {
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let u = DVector::from_fn(d.n(), |_, _| sign + rng.gen_range(-0.2..0.2));
            let s = rng.gen_range(0.0..=1.0);
            let w = m.make_selection(&u, s).map_err(|e| e.to_string())?;
            worst = worst.max(m.graph_distance(&u, &w, 0.0).map_err(|e| e.to_string())?);
        }
        for c in [1.0, -1.0] {
            let rep = m.usc_witness(&d.constant(c), &deltas).map_err(|e| e.to_string())?;
            ensure(rep.monotone_nonincreasing, format!("{name}: excess {:?} not monotone", rep.excess))?;
        }
    }
    ensure(worst <= GRAPH_TOL, format!("graph distance {worst:.2e}"))?;
    Ok(format!("150 selections on the graph (max distance {worst:.1e}), excess monotone"))
}

fn reduction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let cfg = DegreeConfig::default();
    let mut done = 0;
    let mut draws = 0;
    while done < REDUCTION_INSTANCES {
        draws += 1;
        ensure(draws <= 20 * REDUCTION_INSTANCES, format!("only {done} admissible instances"))?;
        let n = 2 + done % 3;
        let k = rng.gen_range(1..n);
        // rank n - k operator with a random complement F1
        let u = DMatrix::from_fn(n, n - k, |_, _| rng.gen_range(-1.0..1.0));
        let v = DMatrix::from_fn(n - k, n, |_, _| rng.gen_range(-1.0..1.0));
        let l: DMatrix<f64> = u * v;
        let f1 = DMatrix::from_fn(n, k, |_, _| rng.gen_range(-1.0..1.0));
        let coef: Vec<(f64, f64, f64)> =
            (0..k).map(|_| (rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5), rng.gen_range(-0.3..0.3))).collect();
        let (lc, fc) = (l.clone(), f1.clone());
        let f = FnField::new(n, move |x| {
            let p = DVector::from_fn(k, |i, _| {
                let (a, b, c) = coef[i];
                a + b * x[i] + c * x[(i + 1) % x.len()].powi(2)
            });
            &lc * x + &fc * p
        });
        let Ok((full, reduced)) = reduction_check(&l, &f1, &f, &DVector::zeros(n), &cube(n), 1e-9, &cfg) else {
            continue;
        };
        ensure(
            full.value == reduced.value,
            format!("full {} vs reduced {} in dim {n}", full.value, reduced.value),
        )?;
        done += 1;
    }
    Ok(format!("{REDUCTION_INSTANCES} instances in dims 2-4 agree ({draws} draws)"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("brouwer degree", brouwer_properties),
        ("orientation classes", orientation_classes),
        ("discretization structure", structural),
        ("degree jump", degree_jumps),
        ("nonlocal closed form", nonlocal_closed_form),
        ("piecewise affine interval", piecewise_affine_interval),
        ("bifurcation", bifurcation),
        ("graph and u.s.c.", graph_and_usc),
        ("reduction", reduction),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
