//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use qw_core::linalg::{self, Rng64};
use qw_core::witness::{hoermander_witness_traced, SearchConfig};
use qw_core::{
    check_heisenberg, heisenberg_bracket_matrix, is_non_dissipative, is_symplectic_subspace, joint_kernel,
    linear_independence, pencil_minmax_rank, poisson_bracket_forms, transversal_point, Branch, CertificateStatus,
    CheckConfig, Dissipativity, OperatorSpec, Pencil, PoissonStructure, SymmetricForm, ToleranceConfig, VerdictKind,
};
use qw_testkit::{
    bracket_gradient_oracle, dissipativity_sweep_oracle, generate_passing_instance, random_pd_pair,
    random_symmetric, random_traceless_pair, restricted_rank_property, witness_grid_oracle, OracleConfig,
};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn mono(n: usize, terms: &[(usize, usize, f64)]) -> SymmetricForm {
    SymmetricForm::from_monomials(n, terms).unwrap()
}

/// Chord between the normalized matrices; equals the angle to first order.
fn angle(p: &SymmetricForm, q: &SymmetricForm) -> f64 {
    let u = p.matrix() / p.frobenius_norm();
    let v = q.matrix() / q.frobenius_norm();
    let chord = (&u - &v).norm();
    2.0 * (0.5 * chord).min(1.0).asin()
}

fn random_structure(rng: &mut Rng64, n: usize) -> PoissonStructure {
    loop {
        let g = DMatrix::from_fn(n, n, |_, _| linalg::gaussian_vector(rng, 1)[0]);
        if let Ok(s) = PoissonStructure::new(&g - g.transpose(), 1e-6) {
            return s;
        }
    }
}

fn bracket_correctness() -> Check {
    let mut rng = linalg::seeded_rng(1001);
    let mut worst: f64 = 0.0;
    for n in [2, 4, 6, 18] {
        for _ in 0..250 {
            let a = random_symmetric(&mut rng, n);
            let b = random_symmetric(&mut rng, n);
            let s = random_structure(&mut rng, n);
            let z = linalg::gaussian_vector(&mut rng, n);
            let primary = poisson_bracket_forms(&a, &b, &s).unwrap().evaluate(&z).unwrap();
            let oracle = bracket_gradient_oracle(&a, &b, s.matrix(), &z).unwrap();
            // Relative to the sum of absolute terms of the contraction.
            let ga = (a.matrix() * &z * 2.0).abs();
            let gb = (b.matrix() * &z * 2.0).abs();
            let scale = ga.dot(&(s.matrix().abs() * gb));
            worst = worst.max((primary - oracle).abs() / scale);
        }
    }
    ensure(worst <= 1e-10, || format!("worst relative deviation {worst:e}"))?;
    Ok(format!("1000 instances, worst relative deviation {worst:.1e}"))
}

/// `Q_A = x1 y2 + x2 y1`, `Q_B = x1 y1 - x2 y2` on `(x1, x2, y1, y2)`.
fn split_pair() -> (SymmetricForm, SymmetricForm) {
    (mono(4, &[(0, 3, 1.0), (1, 2, 1.0)]), mono(4, &[(0, 2, 1.0), (1, 3, -1.0)]))
}

fn rank_frontier_pair() -> Check {
    let (a, b) = split_pair();
    let c = poisson_bracket_forms(&a, &b, &PoissonStructure::canonical(2).unwrap()).unwrap();
    let expected = mono(4, &[(0, 3, 2.0), (1, 2, -2.0)]);
    let theta = angle(&c, &expected);
    ensure(theta < 1e-10, || format!("angle to 2(x1 y2 - x2 y1) is {theta:e}"))?;
    let tol = ToleranceConfig::default().rank_rel_tol;
    ensure(linear_independence(&[&a, &b, &c], tol).unwrap(), || "A, B, C dependent".into())?;
    let verdict = check_heisenberg(2, &OperatorSpec::new(a, b).unwrap(), &CheckConfig::default()).unwrap();
    ensure(verdict.kind == VerdictKind::Inconclusive, || "verdict is not Inconclusive".into())?;
    let branch = verdict.report.cond_c.as_ref().map(|c| c.branch);
    ensure(branch == Some(Branch::Fail), || format!("condition (c) branch {branch:?}"))?;
    Ok(format!("angle {theta:.1e}, Inconclusive with condition (c) failing"))
}

fn q_c_bound_on_variety(a: &SymmetricForm, b: &SymmetricForm, c: &SymmetricForm) -> Result<(f64, usize), String> {
    let (outcome, trace) = hoermander_witness_traced(a, b, c, &SearchConfig::default()).unwrap();
    ensure(!outcome.is_found(), || "a witness was reported".into())?;
    let on: Vec<_> = trace.iter().filter(|p| p.residual_a <= 1e-10 && p.residual_b <= 1e-10).collect();
    ensure(!on.is_empty(), || "no iterate reached the variety".into())?;
    let worst = on.iter().map(|p| p.qc_value.abs() / p.x.norm_squared()).fold(0.0, f64::max);
    ensure(worst <= 1e-6, || format!("|Q_C|/|x|^2 reached {worst:e}"))?;
    Ok((worst, on.len()))
}

fn vanishing_bracket_pairs() -> Check {
    // (x1, x2, x3, y1, y2, y3)
    let cfg = ToleranceConfig::default();
    let mut notes = Vec::new();

    let start = Instant::now();
    let a = mono(6, &[(0, 0, 1.0), (3, 3, -1.0), (4, 4, -1.0), (1, 1, -1.0)]);
    let b = mono(6, &[(0, 2, 1.0)]);
    let pencil = Pencil::new(a.clone(), b.clone(), &cfg).unwrap();
    ensure(is_non_dissipative(&pencil, &cfg).verdict == Dissipativity::NonDissipative, || {
        "radical pair not non-dissipative".into()
    })?;
    let c = heisenberg_bracket_matrix(&a, &b, 3).unwrap();
    let (worst, points) = q_c_bound_on_variety(&a, &b, &c)?;
    let kernel = joint_kernel(&pencil, &cfg);
    ensure(kernel.ncols() == 1, || format!("joint kernel has dimension {}", kernel.ncols()))?;
    let w = PoissonStructure::canonical(3).unwrap().symplectic_form();
    ensure(!is_symplectic_subspace(&kernel, &w, cfg.rank_rel_tol).unwrap(), || "kernel is symplectic".into())?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(30), || format!("radical pair took {elapsed:?}"))?;
    notes.push(format!("isotropic radical: max {worst:.1e} over {points} points"));

    let start = Instant::now();
    let a = mono(6, &[(0, 0, 1.0), (3, 3, -1.0), (4, 4, -1.0), (5, 5, -1.0), (1, 1, -1.0)]);
    let pencil = Pencil::new(a.clone(), b.clone(), &cfg).unwrap();
    ensure(is_non_dissipative(&pencil, &cfg).verdict == Dissipativity::NonDissipative, || {
        "trivial-radical pair not non-dissipative".into()
    })?;
    let (worst, points) = q_c_bound_on_variety(&a, &b, &mono(6, &[(3, 2, 1.0)]))?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(30), || format!("trivial-radical pair took {elapsed:?}"))?;
    notes.push(format!("non-bracket Q_C: max {worst:.1e} over {points} points"));
    Ok(notes.join("; "))
}

fn hyperbolic_plane_pair() -> Check {
    let start = Instant::now();
    let a = mono(2, &[(0, 0, 1.0), (1, 1, -1.0)]);
    let b = mono(2, &[(0, 1, 1.0)]);
    let pencil = Pencil::new(a.clone(), b.clone(), &ToleranceConfig::default()).unwrap();
    let outcome = transversal_point(&pencil, &SearchConfig::default()).unwrap();
    ensure(!outcome.is_found(), || "transversal point reported".into())?;
    let grid = witness_grid_oracle(&a, &b, &SymmetricForm::identity(2), &OracleConfig::default()).unwrap();
    ensure(grid.near_zeros == 0, || format!("{} sphere samples with residuals <= 1e-6", grid.near_zeros))?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(10), || format!("took {elapsed:?}"))?;
    Ok(format!("NotFound; 0 of {} sphere samples near a common zero", grid.samples))
}

fn trace_round_trip() -> Check {
    let start = Instant::now();
    let tol = ToleranceConfig::default();
    let ocfg = OracleConfig::default();
    let mut rng = linalg::seeded_rng(5005);
    let mut worst: f64 = 0.0;
    for k in 0..200 {
        let n = 3 + k % 6;
        let (a, b) = random_traceless_pair(&mut rng, n);
        let d = is_non_dissipative(&Pencil::new(a.clone(), b.clone(), &tol).unwrap(), &tol);
        ensure(d.verdict == Dissipativity::NonDissipative, || format!("traceless pair {k} dissipative"))?;
        ensure(d.certificate_status == CertificateStatus::Verified, || format!("pair {k}: no certificate"))?;
        let p = d.certificate.unwrap();
        let p_norm = linalg::spectral_norm(&p);
        for (name, f) in [("A", &a), ("B", &b)] {
            let rel = (&p * f.matrix()).trace().abs() / (p_norm * linalg::spectral_norm(f.matrix()));
            worst = worst.max(rel);
            ensure(rel <= 1e-8, || format!("pair {k}: tr(P{name}) relative {rel:e}"))?;
        }
        let (lo, _) = linalg::eigen_extremes(&p);
        ensure(lo > 0.0, || format!("pair {k}: lambda_min(P) = {lo:e}"))?;
        let oracle = dissipativity_sweep_oracle(&a, &b, &ocfg).unwrap();
        ensure(oracle == d.verdict, || format!("sweep oracle disagrees on traceless pair {k}"))?;
    }
    // Congruent images of traceless pairs: non-dissipative, certificate is not I.
    let mut worst_moved: f64 = 0.0;
    for k in 0..100 {
        let n = 3 + k % 6;
        let (a0, b0) = random_traceless_pair(&mut rng, n);
        let t = DMatrix::from_fn(n, n, |_, _| linalg::gaussian_vector(&mut rng, 1)[0]) + DMatrix::identity(n, n) * 2.0;
        let (a, b) = (a0.congruence(&t).unwrap(), b0.congruence(&t).unwrap());
        let d = is_non_dissipative(&Pencil::new(a.clone(), b.clone(), &tol).unwrap(), &tol);
        ensure(d.verdict == Dissipativity::NonDissipative, || format!("congruent pair {k} dissipative"))?;
        let p = d.certificate.ok_or_else(|| format!("congruent pair {k}: no certificate"))?;
        let p_norm = linalg::spectral_norm(&p);
        for f in [&a, &b] {
            let rel = (&p * f.matrix()).trace().abs() / (p_norm * linalg::spectral_norm(f.matrix()));
            worst_moved = worst_moved.max(rel);
            ensure(rel <= 1e-8, || format!("congruent pair {k}: trace relative {rel:e}"))?;
        }
        ensure(linalg::eigen_extremes(&p).0 > 0.0, || format!("congruent pair {k}: P not definite"))?;
    }
    for k in 0..200 {
        let n = 3 + k % 6;
        let (a, b) = random_pd_pair(&mut rng, n);
        let d = is_non_dissipative(&Pencil::new(a.clone(), b.clone(), &tol).unwrap(), &tol);
        ensure(d.verdict == Dissipativity::Dissipative, || format!("definite pair {k} non-dissipative"))?;
        let oracle = dissipativity_sweep_oracle(&a, &b, &ocfg).unwrap();
        ensure(oracle == d.verdict, || format!("sweep oracle disagrees on definite pair {k}"))?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "400 pairs, worst certificate trace {worst:.1e} (congruent images: {worst_moved:.1e}), oracle agrees, {elapsed:.1?}"
    ))
}

fn transversal_points() -> Check {
    let start = Instant::now();
    let tol = ToleranceConfig::default();
    let mut rng = linalg::seeded_rng(6006);
    let mut worst = f64::INFINITY;
    for k in 0..50 {
        let n = [4, 6, 8][k % 3];
        let (a, b) = random_traceless_pair(&mut rng, n);
        let pencil = Pencil::new(a.clone(), b.clone(), &tol).unwrap();
        ensure(is_non_dissipative(&pencil, &tol).verdict == Dissipativity::NonDissipative, || {
            format!("pair {k} dissipative")
        })?;
        let maxrank = pencil_minmax_rank(&pencil, &tol).maxrank;
        ensure(maxrank >= 3, || format!("pair {k}: maxrank {maxrank}"))?;
        let cfg = SearchConfig { seed: k as u64, ..SearchConfig::default() };
        let outcome = transversal_point(&pencil, &cfg).unwrap();
        let w = outcome.witness().ok_or_else(|| format!("pair {k} (n = {n}): no transversal point"))?;
        let mut normals = DMatrix::zeros(n, 2);
        normals.set_column(0, &(a.matrix() * &w.x));
        normals.set_column(1, &(b.matrix() * &w.x));
        let sigma = *linalg::singular_values(&normals).last().unwrap();
        ensure(sigma >= 1e-8, || format!("pair {k}: sigma_min {sigma:e}"))?;
        worst = worst.min(sigma);
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!("50 pairs, smallest sigma_min([Ax|Bx]) {worst:.2e}, {elapsed:.1?}"))
}

fn end_to_end() -> Check {
    let mut slowest = Duration::ZERO;
    let mut smallest_qc = f64::INFINITY;
    let mut rejections = 0;
    for seed in 0..20 {
        let start = Instant::now();
        let inst = generate_passing_instance(18, seed).map_err(|e| format!("seed {seed}: {e}"))?;
        rejections += inst.rejections;
        let op = OperatorSpec::new(inst.a.clone(), inst.b.clone()).unwrap();
        let v = check_heisenberg(9, &op, &CheckConfig::default().with_seed(seed)).unwrap();
        ensure(v.kind == VerdictKind::NotLocallySolvable, || format!("seed {seed}: {:?}", v.reasons))?;
        let w = v.witness.as_ref().ok_or_else(|| format!("seed {seed}: no witness attached"))?;
        let c = heisenberg_bracket_matrix(&inst.a, &inst.b, 9).unwrap();
        let (ra, rb, qc) =
            (inst.a.evaluate(&w.x).unwrap(), inst.b.evaluate(&w.x).unwrap(), c.evaluate(&w.x).unwrap());
        ensure(ra.abs() <= 1e-8 && rb.abs() <= 1e-8, || format!("seed {seed}: residuals {ra:e}, {rb:e}"))?;
        ensure(qc.abs() >= 1e-8, || format!("seed {seed}: |Q_C| = {qc:e}"))?;
        smallest_qc = smallest_qc.min(qc.abs());
        let elapsed = start.elapsed();
        ensure(elapsed < Duration::from_secs(60), || format!("seed {seed} took {elapsed:?}"))?;
        slowest = slowest.max(elapsed);
    }
    Ok(format!(
        "20 instances at m = 18 ({rejections} rejections), smallest |Q_C| {smallest_qc:.2e}, slowest {slowest:.1?}"
    ))
}

/// Symmetric matrix of random rank.
fn random_low_rank(rng: &mut Rng64, n: usize, rank: usize) -> SymmetricForm {
    let mut m = DMatrix::zeros(n, n);
    for k in 0..rank {
        let v = linalg::gaussian_vector(rng, n);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        m += &v * v.transpose() * sign;
    }
    SymmetricForm::new(m).unwrap()
}

fn restricted_ranks() -> Check {
    let start = Instant::now();
    let tol = ToleranceConfig::default().rank_rel_tol;
    let mut rng = linalg::seeded_rng(8008);
    for k in 0..500 {
        let n = [6, 10, 18][k % 3];
        let m = 1 + (k / 3) % 3;
        let rank = 1 + (linalg::gaussian_vector(&mut rng, 1)[0].abs() * n as f64) as usize % n;
        let a = random_low_rank(&mut rng, n, rank);
        let t = DMatrix::from_fn(n, n - m, |_, _| linalg::gaussian_vector(&mut rng, 1)[0]);
        ensure(restricted_rank_property(&a, &t, tol).unwrap(), || format!("draw {k} (n = {n}, m = {m})"))?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    Ok(format!("500 draws, bound held in all, {elapsed:.1?}"))
}

fn strip_wall_time(stdout: &[u8]) -> Vec<u8> {
    let text = String::from_utf8_lossy(stdout);
    match text.rfind(",\"wall_ms\":") {
        Some(at) => text[..at].as_bytes().to_vec(),
        None => stdout.to_vec(),
    }
}

fn doc_json(kind: &str, a: &SymmetricForm, b: &SymmetricForm, extra: &str) -> String {
    let m = |f: &SymmetricForm| {
        let rows: Vec<String> = (0..f.dim())
            .map(|i| {
                let cells: Vec<String> = (0..f.dim()).map(|j| format!("\"{:?}\"", f.matrix()[(i, j)])).collect();
                format!("[{}]", cells.join(","))
            })
            .collect();
        format!("[{}]", rows.join(","))
    };
    format!(r#"{{"schema_version":"1","kind":"{kind}","A":{},"B":{}{extra}}}"#, m(a), m(b))
}

fn determinism() -> Check {
    let dir = std::env::temp_dir().join(format!("qw-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let (sa, sb) = split_pair();
    let inst = generate_passing_instance(18, 3).map_err(|e| e.to_string())?;
    let mut rng = linalg::seeded_rng(9009);
    let (ta, tb) = random_traceless_pair(&mut rng, 6);
    let j = r#","J":[["0","0","0","1","0","0"],["0","0","0","0","1","0"],["0","0","0","0","0","1"],["-1","0","0","0","0","0"],["0","-1","0","0","0","0"],["0","0","-1","0","0","0"]]"#;
    let docs = [
        ("split", doc_json("operator_heisenberg", &sa, &sb, "")),
        ("passing", doc_json("operator_heisenberg", &inst.a, &inst.b, "")),
        ("pencil", doc_json("pencil", &ta, &tb, j)),
    ];
    let mut runs = 0;
    for (name, body) in &docs {
        let path = dir.join(format!("{name}.json"));
        std::fs::write(&path, body).map_err(|e| e.to_string())?;
        for cmd in ["bracket", "nondissipative", "ranks", "witness", "check"] {
            let run = || {
                Command::new(env!("CARGO_BIN_EXE_qw"))
                    .args([cmd, "--seed", "7", "--frontier", "--input"])
                    .arg(&path)
                    .output()
                    .expect("qw runs")
            };
            let (first, second) = (run(), run());
            ensure(first.status.code() == second.status.code(), || format!("{name} {cmd}: exit codes differ"))?;
            ensure(strip_wall_time(&first.stdout) == strip_wall_time(&second.stdout), || {
                format!("{name} {cmd}: reports differ")
            })?;
            ensure(first.stdout.windows(10).any(|w| w == b"\"wall_ms\":"), || format!("{name} {cmd}: no wall_ms"))?;
            runs += 2;
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
    Ok(format!("{runs} invocations, reports identical up to wall_ms"))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("bracket matches gradient contraction", bracket_correctness),
        ("split pair: bracket, independence, rank frontier", rank_frontier_pair),
        ("bracket vanishing on the common zero set", vanishing_bracket_pairs),
        ("hyperbolic plane pair has no common zero", hyperbolic_plane_pair),
        ("trace certificates and definite pairs", trace_round_trip),
        ("transversal points of traceless pairs", transversal_points),
        ("generated operators on H_9 end to end", end_to_end),
        ("restricted rank bound", restricted_ranks),
        ("CLI determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name} ({detail}) [{secs:.2} s]", k + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name} ({why}) [{secs:.2} s]", k + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
