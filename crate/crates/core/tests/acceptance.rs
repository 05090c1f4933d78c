//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

mod common;

use std::time::Instant;

use anisomesh::fields::{tanh_layer, Linear, ScalarField};
use anisomesh::geometry::{map_polygon, Mat2};
use anisomesh::indicator::IndicatorReport;
use anisomesh::interp::{basis_depth, coefficients, l2_error_with, BasisCache, Scheme};
use anisomesh::mesh::{build_mesh, grid, BoundarySpec, BoundaryTag, PolyMesh};
use anisomesh::refine::{adaptive_loop_with, mark, RefineConfig, Strategy};
use anisomesh::verify::{check_h1_mapping, monomials, rectangle, scaling_sweep, Pullback};
use common::{moment_sigmas, monte_carlo, polygon_family, Cubic};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ANISO_LEVELS: usize = 12;
const ISO_LEVELS: usize = 16;
const UNIFORM_LEVELS: usize = 9;

struct Outcome {
    id: usize,
    name: &'static str,
    pass: bool,
    detail: String,
    seconds: f64,
}

fn timed(f: impl FnOnce() -> (bool, String)) -> (bool, String, f64) {
    let start = Instant::now();
    let (pass, detail) = f();
    (pass, detail, start.elapsed().as_secs_f64())
}

fn transformation_lemma() -> (bool, String) {
    let mut worst_area = 0.0f64;
    let mut worst_offdiag = 0.0f64;
    let mut max_ratio = 0.0f64;
    for polygon in polygon_family(1, 100, 1e4) {
        let spectrum = polygon.spectrum().unwrap();
        max_ratio = max_ratio.max(spectrum.ratio());
        let map = polygon.reference_map().unwrap();
        let mapped = map_polygon(&polygon, &map).unwrap();
        worst_area = worst_area.max((mapped.area() - 1.0).abs());
        let off = mapped.covariance()[(0, 1)].abs() / map.alpha.powi(2);
        worst_offdiag = worst_offdiag.max(off);
    }
    (
        worst_area <= 1e-10 && worst_offdiag < 1e-10,
        format!("max ||F(K)|-1| = {worst_area:.1e}, max offdiag/α² = {worst_offdiag:.1e}, max ratio {max_ratio:.1e}"),
    )
}

fn moment_oracle() -> (bool, String) {
    let square = rectangle(1.0);
    let exact = Mat2::new(1.0 / 12.0, 0.0, 0.0, 1.0 / 12.0);
    let square_err = (square.covariance() - exact).abs().max();
    let mut worst = 0.0f64;
    for (i, polygon) in polygon_family(2, 10, 1e2).iter().enumerate() {
        let mc = monte_carlo(polygon, 10_000_000, 100 + i as u64);
        worst = worst.max(moment_sigmas(polygon, &mc));
    }
    (square_err <= 1e-12 && worst <= 3.0, format!("unit square error {square_err:.1e}, worst MC deviation {worst:.2}σ"))
}

fn marking_rule() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut mismatches = 0;
    for case in 0..1000 {
        let n = rng.gen_range(1..300);
        let eta: Vec<f64> = match case % 4 {
            0 => vec![rng.gen_range(0.0..2.0); n],
            1 => (0..n).map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..1.0) }).collect(),
            2 => (0..n).map(|_| 10f64.powf(rng.gen_range(-8.0..2.0))).collect(),
            _ => (0..n).map(|_| rng.gen_range(0u32..4) as f64).collect(),
        };
        let report = IndicatorReport::from_local(eta.clone());
        let threshold = 0.9 * eta.iter().sum::<f64>() / n as f64;
        let brute: Vec<usize> = (0..n).filter(|&k| eta[k] > threshold).collect();
        if mark(&report, n, 0.9) != brute {
            mismatches += 1;
        }
    }
    (mismatches == 0, format!("{mismatches} mismatches in 1000 vectors"))
}

struct LevelData {
    ndof: usize,
    eta: f64,
    mesh: PolyMesh,
}

struct Run {
    levels: Vec<LevelData>,
    seconds: f64,
    topology_errors: Vec<String>,
}

fn topology_error(mesh: &PolyMesh) -> Option<String> {
    if let Err(e) = mesh.check_invariants() {
        return Some(e.to_string());
    }
    let total = mesh.total_element_area();
    let domain = mesh.domain_area();
    if (total - domain).abs() > 1e-10 * domain {
        return Some(format!("area {total} vs domain {domain}"));
    }
    None
}

fn run(strategy: Strategy, levels: usize) -> Run {
    let start = Instant::now();
    let config = RefineConfig::new(strategy, levels);
    let mut topology_errors = Vec::new();
    let out = adaptive_loop_with(grid(4, 4).unwrap(), &tanh_layer(), &config, |l| {
        if let Some(e) = topology_error(&l.mesh) {
            topology_errors.push(format!("{} level {}: {e}", strategy.name(), l.level));
        }
    })
    .unwrap();
    let levels = out
        .into_iter()
        .map(|l| LevelData { ndof: l.mesh.ndof(), eta: l.report.eta_global, mesh: l.mesh })
        .collect();
    Run { levels, seconds: start.elapsed().as_secs_f64(), topology_errors }
}

fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// `y` at `x` on a piecewise log-log linear curve with increasing `x`.
fn loglog_at(curve: &[(f64, f64)], x: f64) -> Option<f64> {
    curve.windows(2).find(|w| w[0].0 <= x && x <= w[1].0).map(|w| {
        let (x0, y0) = w[0];
        let (x1, y1) = w[1];
        if x1 == x0 {
            return y0.min(y1);
        }
        let t = (x.ln() - x0.ln()) / (x1.ln() - x0.ln());
        (y0.ln() + t * (y1.ln() - y0.ln())).exp()
    })
}

/// ndof at which a decreasing `(ndof, η)` curve first reaches `target`.
fn ndof_at_eta(run: &Run, target: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = run.levels.iter().map(|l| (l.ndof as f64, l.eta)).collect();
    let i = pts.iter().position(|p| p.1 <= target)?;
    if i == 0 {
        return Some(pts[0].0);
    }
    let (x0, y0) = pts[i - 1];
    let (x1, y1) = pts[i];
    let t = (target.ln() - y0.ln()) / (y1.ln() - y0.ln());
    Some((x0.ln() + t * (x1.ln() - x0.ln())).exp())
}

fn convergence_slope(aniso: &Run) -> (bool, String) {
    let tail: Vec<(f64, f64)> = aniso.levels[aniso.levels.len() - 5..].iter().map(|l| (l.ndof as f64, l.eta)).collect();
    let s = slope(&tail);
    (
        aniso.levels.len() > 12 && (s + 1.0).abs() <= 0.2 && aniso.seconds < 60.0,
        format!("slope {s:.3} over levels {}..{}, run {:.1} s", aniso.levels.len() - 5, aniso.levels.len() - 1, aniso.seconds),
    )
}

fn strategy_ordering(aniso: &Run, iso: &Run, uniform: &Run) -> (bool, String) {
    let min_eta = |r: &Run| r.levels.iter().map(|l| l.eta).fold(f64::INFINITY, f64::min);
    let target = min_eta(aniso).max(min_eta(iso)).max(min_eta(uniform));
    let a = ndof_at_eta(aniso, target).unwrap();
    let i = ndof_at_eta(iso, target).unwrap();
    let u = ndof_at_eta(uniform, target).unwrap();
    let seconds = aniso.seconds + iso.seconds + uniform.seconds;
    (
        a < 0.7 * i && i < 0.7 * u && seconds < 120.0,
        format!("η* = {target:.4}: ndof aniso {a:.0}, iso {i:.0}, uniform {u:.0}; runs {seconds:.1} s"),
    )
}

fn l2_curve(run: &Run, cache: &BasisCache) -> Vec<(f64, f64)> {
    let v = tanh_layer();
    run.levels
        .iter()
        .map(|l| {
            let coeffs = coefficients(&l.mesh, &v, Scheme::Pointwise).unwrap();
            (l.ndof as f64, l2_error_with(&l.mesh, &v, &coeffs, None, Some(cache)).unwrap())
        })
        .collect()
}

fn l2_ordering(aniso: &Run, iso: &Run, uniform: &Run) -> (bool, String) {
    let start = Instant::now();
    let cache = BasisCache::new();
    let a = l2_curve(aniso, &cache);
    let i = l2_curve(iso, &cache);
    let u = l2_curve(uniform, &cache);
    let mut compared = 0;
    let mut worst = 0.0f64;
    for (own, other, aniso_side) in [(&a, &i, true), (&i, &a, false)] {
        for &(ndof, err) in own.iter().filter(|p| p.0 >= 200.0) {
            if let Some(matched) = loglog_at(other, ndof) {
                compared += 1;
                let q = if aniso_side { err / matched } else { matched / err };
                worst = worst.max(q);
            }
        }
    }
    let s = slope(&u[u.len() - 3..]);
    let seconds = start.elapsed().as_secs_f64();
    (
        compared > 0 && worst <= 1.0 && (s + 1.0).abs() <= 0.25 && seconds < 120.0,
        format!(
            "max aniso/iso L2 at matched ndof {worst:.3} over {compared} points, uniform slope {s:.3}, final errors aniso {:.2e} iso {:.2e} uniform {:.2e}; {seconds:.1} s",
            a.last().unwrap().1,
            i.last().unwrap().1,
            u.last().unwrap().1
        ),
    )
}

fn anisotropy_statistics(aniso: &Run, iso: &Run) -> (bool, String) {
    let stats = |m: &PolyMesh| {
        let ratio = m.elements().iter().map(|e| e.spectrum.ratio()).fold(0.0, f64::max);
        let lo = m.elements().iter().map(|e| e.map.alpha).fold(f64::INFINITY, f64::min);
        let hi = m.elements().iter().map(|e| e.map.alpha).fold(0.0, f64::max);
        (ratio, lo, hi)
    };
    let (ra, la, ha) = stats(&aniso.levels.last().unwrap().mesh);
    let (ri, li, hi) = stats(&iso.levels.last().unwrap().mesh);
    let (lo, hi) = (la.min(li), ha.max(hi));
    (
        aniso.levels.len() > 10 && iso.levels.len() > 10 && ra > 1e3 && ri < 1e2 && hi - lo < 0.2,
        format!("max λ1/λ2 aniso {ra:.2e}, iso {ri:.2}; α in ({lo:.3}, {hi:.3})"),
    )
}

fn basis_suite() -> (bool, String) {
    let mut polygons = polygon_family(4, 18, 1e3);
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    polygons.push(common::random_polygon(&mut rng, 5, 1e3f64.sqrt()));
    polygons.push(common::random_polygon(&mut rng, 9, 1e3f64.sqrt()));
    let polygons: Vec<_> = polygons.iter().map(|p| p.transformed(&(Mat2::identity() / p.diameter())).unwrap()).collect();
    let cache = BasisCache::new();
    let f = Linear::new(0.25, 1.5, -0.75);
    let (mut pou, mut below, mut above, mut linear, mut max_ratio) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for polygon in &polygons {
        let ratio = polygon.spectrum().unwrap().ratio();
        max_ratio = max_ratio.max(ratio);
        let basis = cache.get_or_build(polygon, basis_depth(ratio)).unwrap();
        for node in 0..basis.sub.len() {
            let vals = basis.node_values(node);
            pou = pou.max((vals.iter().sum::<f64>() - 1.0).abs());
            for &v in vals {
                below = below.max(-v);
                above = above.max(v - 1.0);
            }
        }
        let n = polygon.len();
        let mesh = build_mesh(polygon.vertices().to_vec(), vec![(0..n).collect()], BoundarySpec::Uniform(BoundaryTag::Neumann)).unwrap();
        let coeffs = coefficients(&mesh, &f, Scheme::Pointwise).unwrap();
        linear = linear.max(l2_error_with(&mesh, &f, &coeffs, None, Some(&cache)).unwrap());
    }
    (
        pou <= 1e-10 && below <= 1e-10 && above <= 1e-10 && linear <= 1e-8,
        format!(
            "{} polygons (max ratio {max_ratio:.1e}): partition of unity {pou:.1e}, min ψ {:.1e}, max ψ-1 {above:.1e}, linear L2 error {linear:.1e}",
            polygons.len(),
            -below
        ),
    )
}

fn inequality_sweeps() -> (bool, String) {
    let scales = [1.0, 1e1, 1e2, 1e3, 1e4];
    let sweep = scaling_sweep(&scales, 3, false, 0).unwrap();
    let spread = |name| sweep.spread(name).values().fold(0.0f64, |m, &s| m.max(s));
    let (trace, poincare) = (spread("trace"), spread("poincare"));
    let mut tested = 0;
    let mut violations = 0;
    for &s in &scales {
        for m in monomials(3) {
            tested += 1;
            violations += check_h1_mapping(&rectangle(s), &m, 0).is_err() as usize;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for polygon in polygon_family(5, 40, 1e4) {
        let cubic = Cubic::random(&mut rng);
        let layer = Pullback::onto(tanh_layer(), &polygon);
        let fields: [(&dyn ScalarField, usize); 2] = [(&cubic, 1), (&layer, 5)];
        for (v, depth) in fields {
            tested += 1;
            violations += check_h1_mapping(&polygon, v, depth).is_err() as usize;
        }
    }
    (
        trace <= 2.0 && poincare <= 2.0 && violations == 0,
        format!("max spread trace {trace:.4}, poincare {poincare:.4}; H1 sandwich {violations}/{tested} violations"),
    )
}

fn main() {
    let mut outcomes = Vec::new();
    let mut record = |id, name, (pass, detail, seconds): (bool, String, f64)| {
        let o = Outcome { id, name, pass, detail, seconds };
        println!("{} {:>2} {}: {} ({:.2} s)", if o.pass { "PASS" } else { "FAIL" }, o.id, o.name, o.detail, o.seconds);
        outcomes.push(o);
    };

    let (p, d, s) = timed(transformation_lemma);
    record(1, "transformation lemma", (p && s < 5.0, d, s));
    let (p, d, s) = timed(moment_oracle);
    record(2, "moment oracle", (p && s < 30.0, d, s));
    let (p, d, s) = timed(marking_rule);
    record(3, "marking rule", (p && s < 1.0, d, s));

    let aniso = run(Strategy::Anisotropic, ANISO_LEVELS);
    let iso = run(Strategy::Isotropic, ISO_LEVELS);
    let uniform = run(Strategy::Uniform, UNIFORM_LEVELS);

    record(4, "convergence slope", timed(|| convergence_slope(&aniso)));
    record(5, "strategy ordering", timed(|| strategy_ordering(&aniso, &iso, &uniform)));
    record(6, "L2 interpolation ordering", timed(|| l2_ordering(&aniso, &iso, &uniform)));
    record(7, "anisotropy statistics", timed(|| anisotropy_statistics(&aniso, &iso)));
    let (p, d, s) = timed(basis_suite);
    record(8, "harmonic basis suite", (p && s < 30.0, d, s));
    let (p, d, s) = timed(inequality_sweeps);
    record(9, "inequality sweeps", (p && s < 20.0, d, s));
    record(
        10,
        "topology conservation",
        timed(|| {
            let errors: Vec<&String> = [&aniso, &iso, &uniform].iter().flat_map(|r| &r.topology_errors).collect();
            let levels: usize = [&aniso, &iso, &uniform].iter().map(|r| r.levels.len()).sum();
            let detail = match errors.first() {
                None => format!("{levels} levels checked"),
                Some(e) => format!("{} failing levels, first: {e}", errors.len()),
            };
            (errors.is_empty(), detail)
        }),
    );

    let failed: Vec<usize> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    println!("acceptance: {}/{} passed", outcomes.len() - failed.len(), outcomes.len());
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}

