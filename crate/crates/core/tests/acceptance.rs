//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use midsurface::field::ScalarField2D;
use midsurface::hessian::{compute_hessian, eigen2x2};
use midsurface::phantom::Phantom;
use midsurface::sdf::compute_sdf;
use midsurface::trace::golden_correct;
use midsurface::volume::Grid3;
use midsurface::zipper::{hole_threshold, pair_edges, EdgeSource, PairingResult, ZipEdge};
use midsurface::{extract_mid_surface, extract_objects, generate_phantom, report, BinaryMask3D, Extraction, Mesh};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const CYLINDER: &str = "cylinder:r_in=10,r_out=14,dims=64";
const WINDOWED: &str = "cylinder:r_in=10,r_out=14,dims=64,hole=40:50:27:37:27:37";
const TORUS: &str = "torus:major=20,r_in=5,r_out=9,axis=x,dims=64";
const SPHERE: &str = "sphere:r_in=10,r_out=14,dims=64";

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn phantom(spec: &str) -> (Phantom, BinaryMask3D) {
    let ph = generate_phantom(&spec.parse().expect("phantom spec")).expect("phantom");
    let mut objects = extract_objects(&ph.volume, 1);
    assert_eq!(objects.len(), 1, "{spec}: expected one object");
    let mask = objects.remove(0);
    (ph, mask)
}

fn run(spec: &str) -> (Phantom, Extraction<f64>) {
    let (ph, mask) = phantom(spec);
    let out = extract_mid_surface::<f64>(&mask).expect("extraction");
    (ph, out)
}

/// Fractions of `points` within 0.5 and within 0.75 of the analytic surface.
fn accuracy(ph: &Phantom, points: &[[f64; 3]]) -> (f64, f64, f64) {
    let d: Vec<f64> = points.iter().map(|&p| ph.mid_surface.distance(p)).collect();
    let n = d.len().max(1) as f64;
    let within = |t: f64| d.iter().filter(|&&e| e <= t).count() as f64 / n;
    (within(0.5), within(0.75), d.iter().cloned().fold(0.0, f64::max))
}

fn geometric_accuracy() -> Outcome {
    let (ph, mask) = phantom(CYLINDER);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let t0 = Instant::now();
    let out = pool.install(|| extract_mid_surface::<f64>(&mask)).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    let (f05, f075, worst) = accuracy(&ph, &out.mesh.vertices);
    outcome(
        f05 >= 0.99 && f075 == 1.0 && secs < 10.0 && out.mesh.vertex_count() > 0,
        format!(
            "{} vertices, {:.2}% within 0.5, {:.2}% within 0.75, worst {worst:.3}, {secs:.2} s single-threaded",
            out.mesh.vertex_count(),
            100.0 * f05,
            100.0 * f075
        ),
    )
}

fn mesh_quality() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, spec) in [("cylinder", CYLINDER), ("torus", TORUS)] {
        let (_, out) = run(spec);
        let r = report(&out.mesh).unwrap();
        let ok = r.q_avg >= 0.75 && r.frac_lt_30 <= 0.5 && r.frac_gt_120 <= 0.5 && r.v567 >= 85.0;
        pass &= ok;
        detail.push(format!(
            "{name}: Q_avg {:.4}, <30 {:.3}%, >120 {:.3}%, V567 {:.2}%",
            r.q_avg, r.frac_lt_30, r.frac_gt_120, r.v567
        ));
    }
    outcome(pass, detail.join("; "))
}

fn hole_preservation() -> Outcome {
    let (_, intact) = run(CYLINDER);
    let (_, holed) = run(WINDOWED);
    // window voxels x 40..50, y 27..37, z 27..37; its empty region in
    // continuous space extends half a voxel past the removed centers
    let (lo, hi) = ([39.5, 26.5, 26.5], [49.5, 36.5, 36.5]);
    let spanning = holed
        .mesh
        .triangles
        .iter()
        .filter(|t| {
            let p = t.map(|i| holed.mesh.vertices[i]);
            let range = |a: usize| {
                let v = p.map(|q| q[a]);
                (v.iter().cloned().fold(f64::INFINITY, f64::min), v.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
            };
            let (x0, x1) = range(0);
            let overlaps_x = x1 >= lo[0] && x0 <= hi[0];
            let across = |a: usize| {
                let (m0, m1) = range(a);
                m0 <= lo[a] && m1 >= hi[a]
            };
            overlaps_x && (across(1) || across(2))
        })
        .count();
    let (a, b) = (intact.mesh.boundary_loop_count(), holed.mesh.boundary_loop_count());
    outcome(spanning == 0 && b == a + 1, format!("{spanning} triangles across the window, boundary loops {a} -> {b}"))
}

fn sdf_oracle() -> Outcome {
    let mut rng = StdRng::seed_from_u64(4);
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let density = rng.gen_range(0.3..0.97);
        let spacing = if rng.gen_bool(0.5) {
            [1.0; 3]
        } else {
            [rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0)]
        };
        let grid = Grid3::new([16; 3], spacing, [0.0; 3]);
        let mut mask = BinaryMask3D::from_fn(grid, |_, _, _| rng.gen_bool(density));
        let n = mask.bits.len();
        mask.bits[rng.gen_range(0..n)] = false;
        mask.bits[rng.gen_range(0..n)] = true;
        let sdf = compute_sdf::<f64>(&mask).unwrap();
        let pos = |i: usize| grid.position(i % 16, (i / 16) % 16, i / 256);
        let bg: Vec<[f64; 3]> = (0..mask.bits.len()).filter(|&i| !mask.bits[i]).map(pos).collect();
        for i in 0..mask.bits.len() {
            let expect = if mask.bits[i] {
                let p = pos(i);
                bg.iter()
                    .map(|q| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt())
                    .fold(f64::INFINITY, f64::min)
            } else {
                0.0
            };
            worst = worst.max((sdf.values[i] - expect).abs());
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    outcome(worst <= 1e-6 && secs < 60.0, format!("max deviation {worst:.2e} over 50 masks, {secs:.2} s"))
}

fn eigen_hessian() -> Outcome {
    let mut rng = StdRng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..100_000 {
        let scale = 10f64.powf(rng.gen_range(-6.0..6.0));
        let (a, b, c) =
            (rng.gen_range(-1.0..1.0) * scale, rng.gen_range(-1.0..1.0) * scale, rng.gen_range(-1.0..1.0) * scale);
        let norm = (a * a + 2.0 * b * b + c * c).sqrt();
        if norm == 0.0 {
            continue;
        }
        let e = eigen2x2(a, b, c);
        for (l, v) in [(e.lambda_min_abs, e.v_trace), (e.lambda_max_abs, e.v_correct)] {
            let r = [a * v[0] + b * v[1] - l * v[0], b * v[0] + c * v[1] - l * v[1]];
            worst = worst.max(r[0].hypot(r[1]) / norm);
        }
    }
    let mut hess_worst = 0.0f64;
    for _ in 0..20 {
        let k: [f64; 6] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
        let sp = [rng.gen_range(0.5..1.5), rng.gen_range(0.5..1.5)];
        let f = ScalarField2D::from_fn(24, 20, sp, |i, j| {
            let (x, y) = (i as f64 * sp[0], j as f64 * sp[1]);
            k[0] * x * x + k[1] * x * y + k[2] * y * y + k[3] * x + k[4] * y + k[5]
        });
        let h = compute_hessian(&f).unwrap();
        for y in 1..19 {
            for x in 1..23 {
                let (fxx, fxy, fyy) = h.at(x, y);
                let err = (fxx - 2.0 * k[0]).abs().max((fxy - k[1]).abs()).max((fyy - 2.0 * k[2]).abs());
                hess_worst = hess_worst.max(err);
            }
        }
    }
    outcome(
        worst <= 1e-9 && hess_worst <= 1e-9,
        format!("max relative eigen residual {worst:.2e}, max Hessian error {hess_worst:.2e}"),
    )
}

fn golden_section() -> Outcome {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for (deg, offset) in [(0.0, 0.3), (90.0, 0.71), (30.0, 0.0), (57.0, 0.45), (135.0, 0.9)] {
        let a = f64::to_radians(deg);
        // ridge line through c with unit normal n
        let n = [a.cos(), a.sin()];
        let c = [15.5 + offset, 15.0 - offset];
        let f = ScalarField2D::from_fn(32, 32, [1.0, 1.0], |x, y| {
            let d = (x as f64 - c[0]) * n[0] + (y as f64 - c[1]) * n[1];
            4.0 - d * d
        });
        for k in 0..=40 {
            let t = -1.0 + k as f64 * 0.05;
            let along = [-n[1] * 2.0, n[0] * 2.0];
            let start = [c[0] + along[0] + t * n[0], c[1] + along[1] + t * n[1]];
            let p = golden_correct(&f, start, n);
            let d = (p[0] - c[0]) * n[0] + (p[1] - c[1]) * n[1];
            worst = worst.max(d.abs());
            cases += 1;
        }
    }
    outcome(worst <= 1e-3, format!("{cases} starts, max crest distance {worst:.2e}"))
}

/// Random walk polyline on slice `z` with `edges` edges.
fn random_edges(rng: &mut StdRng, base: &[[f64; 2]], jitter: f64, z: f64, slice_index: usize) -> Vec<ZipEdge<f64>> {
    let pts: Vec<[f64; 3]> = base
        .iter()
        .map(|p| {
            let q = [p[0] + rng.gen_range(-jitter..=jitter), p[1] + rng.gen_range(-jitter..=jitter)];
            // snap some points to half voxels so exact distance ties occur
            if rng.gen_bool(0.3) {
                [(q[0] * 2.0).round() / 2.0, (q[1] * 2.0).round() / 2.0, z]
            } else {
                [q[0], q[1], z]
            }
        })
        .collect();
    (0..pts.len().saturating_sub(1))
        .map(|s| ZipEdge::new(pts[s], pts[s + 1], s, s + 1, EdgeSource { slice_index, polyline: 0, segment: s }))
        .collect()
}

fn brute_pairing(lower: &[ZipEdge<f64>], upper: &[ZipEdge<f64>], thr: f64) -> PairingResult {
    let d2 = |a: &ZipEdge<f64>, b: &ZipEdge<f64>| {
        let d = [a.center[0] - b.center[0], a.center[1] - b.center[1], a.center[2] - b.center[2]];
        d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
    };
    // (smallest index among the nearest, nearest is unique) within the threshold
    let nearest = |e: &ZipEdge<f64>, others: &[ZipEdge<f64>]| -> Option<(usize, bool)> {
        let ds: Vec<f64> = others.iter().map(|o| d2(e, o)).collect();
        let m = ds.iter().cloned().fold(f64::INFINITY, f64::min);
        if m.is_nan() || m > thr * thr {
            return None;
        }
        let ties: Vec<usize> = (0..ds.len()).filter(|&i| ds[i] == m).collect();
        Some((ties[0], ties.len() == 1))
    };
    let up: Vec<_> = lower.iter().map(|e| nearest(e, upper)).collect();
    let down: Vec<_> = upper.iter().map(|e| nearest(e, lower)).collect();
    let mutual = |i: usize, j: usize| up[i] == Some((j, true)) && down[j] == Some((i, true));
    let mut r = PairingResult::default();
    for (i, n) in up.iter().enumerate() {
        match n {
            None => r.lower_skipped.push(i),
            Some((j, _)) if mutual(i, *j) => r.valid_pairs.push((i, *j)),
            Some((j, _)) => r.lower_non_pair.push((i, *j)),
        }
    }
    for (j, n) in down.iter().enumerate() {
        match n {
            None => r.upper_skipped.push(j),
            Some((i, _)) if mutual(*i, j) => {}
            Some((i, _)) => r.upper_non_pair.push((j, *i)),
        }
    }
    r
}

fn zipper_oracle() -> Outcome {
    let mut rng = StdRng::seed_from_u64(7);
    let thr = hole_threshold(1.0);
    let mut mismatches = 0;
    let mut totals = [0usize; 3];
    for _ in 0..200 {
        let n = rng.gen_range(0..=64usize);
        let mut base = vec![[rng.gen_range(0.0..20.0), rng.gen_range(0.0..20.0)]];
        for _ in 0..n {
            let last = *base.last().unwrap();
            let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let step = rng.gen_range(0.5..2.5);
            base.push([last[0] + step * a.cos(), last[1] + step * a.sin()]);
        }
        let lower = random_edges(&mut rng, &base, 0.2, 0.0, 0);
        let mut upper_base = base.clone();
        // drop or insert points so the counts differ
        for _ in 0..rng.gen_range(0..4) {
            if upper_base.len() > 2 {
                let k = rng.gen_range(0..upper_base.len());
                upper_base.remove(k);
            }
        }
        if rng.gen_bool(0.3) {
            upper_base.truncate(upper_base.len() / 2);
        }
        let jitter = rng.gen_range(0.0..1.5);
        let upper = random_edges(&mut rng, &upper_base, jitter, 1.0, 1);
        let got = pair_edges(&lower, &upper, thr);
        let want = brute_pairing(&lower, &upper, thr);
        if got != want {
            mismatches += 1;
        }
        totals[0] += want.valid_pairs.len();
        totals[1] += want.lower_non_pair.len() + want.upper_non_pair.len();
        totals[2] += want.lower_skipped.len() + want.upper_skipped.len();
    }
    outcome(
        mismatches == 0,
        format!(
            "{mismatches} mismatches in 200 pairs ({} valid, {} non-pair, {} skipped)",
            totals[0], totals[1], totals[2]
        ),
    )
}

/// (max edge valence, triangles spanning > 2 slices or non-adjacent slices,
/// strips with a repeated directed edge).
fn topology(mesh: &Mesh) -> (usize, usize, usize) {
    let slices = |t: &[usize; 3]| t.map(|i| mesh.vertex_slices[i]);
    let bad_span = mesh
        .triangles
        .iter()
        .filter(|t| {
            let s = slices(t);
            let distinct: BTreeSet<usize> = s.iter().copied().collect();
            distinct.len() > 2 || s.iter().max().unwrap() - s.iter().min().unwrap() > 1
        })
        .count();
    let mut strips: BTreeMap<usize, BTreeSet<(usize, usize)>> = BTreeMap::new();
    let mut bad_strips = BTreeSet::new();
    for t in &mesh.triangles {
        let strip = *slices(t).iter().min().unwrap();
        let directed = strips.entry(strip).or_default();
        for k in 0..3 {
            if !directed.insert((t[k], t[(k + 1) % 3])) {
                bad_strips.insert(strip);
            }
        }
    }
    (mesh.max_edge_valence(), bad_span, bad_strips.len())
}

fn topology_sanity() -> Outcome {
    let specs = [
        CYLINDER,
        WINDOWED,
        TORUS,
        SPHERE,
        "torus:major=18,r_in=4,r_out=8,dims=64",
        "cylinder:r_in=6,r_out=9,axis=y,dims=40",
        "slab:thickness=5,axis=x,dims=32",
    ];
    let mut pass = true;
    let mut detail = Vec::new();
    for spec in specs {
        let (_, out) = run(spec);
        let (valence, span, strips) = topology(&out.mesh);
        let ok = valence <= 2 && span == 0 && strips == 0 && out.mesh.triangle_count() > 0;
        pass &= ok;
        if !ok {
            detail.push(format!("{spec}: valence {valence}, {span} bad spans, {strips} misoriented strips"));
        }
    }
    if pass {
        detail.push(format!(
            "{} phantoms: valence <= 2, adjacent-slice triangles, strips consistently wound",
            specs.len()
        ));
    }
    outcome(pass, detail.join("; "))
}

fn cli_run(dir: &Path) -> std::process::ExitStatus {
    Command::new(env!("CARGO_BIN_EXE_midsurface"))
        .args(["--phantom", TORUS, "--report", "--dump-polylines", "--output"])
        .arg(dir)
        .output()
        .expect("run cli")
        .status
}

fn without_timing(text: &str) -> String {
    text.lines().filter(|l| !l.starts_with("time_")).collect::<Vec<_>>().join("\n")
}

fn determinism() -> Outcome {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (sa, sb) = (cli_run(a.path()), cli_run(b.path()));
    if !sa.success() || !sb.success() {
        return outcome(false, format!("cli exit status {sa} / {sb}"));
    }
    let mut files: Vec<String> =
        std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    files.sort();
    let mut differing = Vec::new();
    for f in &files {
        let (x, y) = (std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap_or_default());
        let same = if f == "manifest.txt" {
            without_timing(&String::from_utf8_lossy(&x)) == without_timing(&String::from_utf8_lossy(&y))
        } else {
            x == y
        };
        if !same {
            differing.push(f.clone());
        }
    }
    let expected = ["manifest.txt", "object_1.obj", "object_1_lines.obj", "object_1_report.txt"];
    let complete = expected.iter().all(|e| files.iter().any(|f| f == e));
    outcome(
        differing.is_empty() && complete,
        format!("{} files compared, {} differ: {:?}", files.len(), differing.len(), differing),
    )
}

fn cap_handling() -> Outcome {
    let (ph, mask) = phantom(SPHERE);
    let max_sdf = compute_sdf::<f64>(&mask).unwrap().max_value();
    let out = extract_mid_surface::<f64>(&mask).unwrap();
    let stubs = out.stack.polylines().filter(|p| p.arc_length() < 4.0 * max_sdf).count();
    let slices: Vec<usize> = out.stack.slices.iter().map(|s| s.slice_index).collect();
    let (f05, f075, worst) = accuracy(&ph, &out.mesh.vertices);
    let band = format!("{}..={}", slices.first().copied().unwrap_or(0), slices.last().copied().unwrap_or(0));
    outcome(
        stubs == 0 && f05 >= 0.99 && f075 == 1.0 && out.mesh.vertex_count() > 0,
        format!(
            "{stubs} stubs shorter than {:.2}, band slices {band}, {:.2}% within 0.5, {:.2}% within 0.75, worst {worst:.3}",
            4.0 * max_sdf,
            100.0 * f05,
            100.0 * f075
        ),
    )
}

type Check = fn() -> Outcome;

fn main() {
    let criteria: [(&str, Check); 10] = [
        ("geometric accuracy", geometric_accuracy),
        ("mesh quality", mesh_quality),
        ("hole preservation", hole_preservation),
        ("sdf oracle", sdf_oracle),
        ("eigen and hessian numerics", eigen_hessian),
        ("golden-section correction", golden_section),
        ("zipper pairing oracle", zipper_oracle),
        ("topology sanity", topology_sanity),
        ("determinism", determinism),
        ("cap handling", cap_handling),
    ];
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let r = check();
        let status = if r.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {status} {name}: {}", k + 1, r.detail);
        failed += usize::from(!r.pass);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
