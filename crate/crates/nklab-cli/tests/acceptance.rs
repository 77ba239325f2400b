// SPDX-License-Identifier: Apache-2.0

//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Criterion 8 is red: the f_lambda rows have `w33^2 = 0` and carry
//! `sqrt(2/3)(1 - lambda)` in `w22^3` instead. The test fails if the set of red
//! criteria changes in either direction.

use std::process::{Command, Stdio};
use std::time::Instant;

use nklab::catalog::{ImmersionId, DEFAULT_LAMBDA_GRID};
use nklab::lag::{check_lagrangian, coordinate_frame, FrameTriple, LocalAnalysis};
use nklab::nk_core::apply_j;
use nklab::report::{verify_catalog, verify_isometries, verify_structure, CheckRecord, RunConfig};
use nklab::Tolerances;

const KNOWN_RED: [u32; 1] = [8];

struct Criterion {
    id: u32,
    title: &'static str,
    problems: Vec<String>,
    notes: Vec<String>,
}

impl Criterion {
    fn new(id: u32, title: &'static str) -> Self {
        Criterion { id, title, problems: Vec::new(), notes: Vec::new() }
    }

    fn pass(&self) -> bool {
        self.problems.is_empty()
    }

    /// Requires a record named `check` with `max_residual < bound` over at least `min_samples`.
    fn below(&mut self, recs: &[CheckRecord], check: &str, bound: f64, min_samples: usize) {
        match recs.iter().find(|r| r.check == check) {
            None => self.problems.push(format!("no record {check:?}")),
            Some(r) => {
                if r.max_residual.is_nan() || r.max_residual >= bound {
                    self.problems.push(format!("{check}: residual {:e} not below {bound:e}", r.max_residual));
                }
                if r.samples < min_samples {
                    self.problems.push(format!("{check}: {} samples, need {min_samples}", r.samples));
                }
            }
        }
    }

    /// Requires `|observed - expected| < bound` and `max_residual < bound` for a value record.
    fn value(&mut self, recs: &[CheckRecord], check: &str, expected: f64, bound: f64) {
        match recs.iter().find(|r| r.check == check) {
            None => self.problems.push(format!("no record {check:?}")),
            Some(r) => {
                let obs = r.observed.unwrap_or(f64::NAN);
                if r.expected.is_none_or(|e| (e - expected).abs() > 1e-15) {
                    self.problems.push(format!("{check}: record expects {:?}, criterion expects {expected}", r.expected));
                }
                if !((obs - expected).abs() < bound && r.max_residual < bound) {
                    self.problems.push(format!(
                        "{check}: observed {obs:e} (worst deviation {:e}) against {expected}, bound {bound:e}",
                        r.max_residual
                    ));
                }
            }
        }
    }

    fn report(&self) {
        let tag = if self.pass() { "PASS" } else { "FAIL" };
        println!("{tag} criterion {:>2}: {}", self.id, self.title);
        for p in &self.problems {
            println!("       {p}");
        }
        for n in &self.notes {
            println!("       note: {n}");
        }
    }
}

fn rows() -> Vec<ImmersionId> {
    ImmersionId::all(&DEFAULT_LAMBDA_GRID)
}

fn s2() -> f64 {
    2f64.sqrt()
}

#[test]
fn acceptance_criteria() {
    let cfg = RunConfig::default();
    let t = Instant::now();
    let structure = verify_structure(&cfg).expect("structure suite");
    let structure_time = t.elapsed();
    let iso = verify_isometries(&cfg).expect("isometry suite");
    let cat = verify_catalog(&cfg, None).expect("catalog suite");
    let mut out = Vec::new();

    let mut c = Criterion::new(1, "structure identities below 1e-10 on at least 1000 samples, suite under 10 s");
    let mut names = vec![
        "J^2 = -Id",
        "g(JX,JY) = g(X,Y)",
        "nabla P",
        "g(G(X,Y),JZ) + g(G(X,Z),JY) = 0",
        "constant type -2/3",
        "G(X,X) = 0",
        "G(X,JY) + JG(X,Y) = 0",
    ];
    names.extend(["P^2 = Id", "g(PX,PY) = g(X,Y)", "PJ = -JP", "g(PX,Y) = g(X,PY)", "PG(X,Y) + G(PX,PY) = 0"]);
    for n in names {
        c.below(&structure, n, 1e-10, 1000);
    }
    if structure_time.as_secs_f64() >= 10.0 {
        c.problems.push(format!("structure suite took {structure_time:?}"));
    }
    c.notes.push(format!("structure suite ran in {structure_time:?}"));
    out.push(c);

    let mut c = Criterion::new(2, "curvature closed form and first Bianchi identity below 1e-10");
    c.below(&structure, "curvature closed form", 1e-10, 1000);
    c.below(&structure, "first Bianchi identity", 1e-10, 1000);
    out.push(c);

    let mut c = Criterion::new(3, "Euclidean embedding below 1e-5 at step 1e-4, error ratio near 4 when the step halves");
    c.below(&structure, "Euclidean embedding", 1e-5, 1000);
    c.value(&structure, "embedding step-halving ratio", 4.0, 0.5);
    out.push(c);

    let mut c =
        Criterion::new(4, "isometries preserve g within 1e-6 on 500 samples, Psi signs and angles as declared, S3 closure");
    for r in iso.iter().filter(|r| r.check.ends_with(" metric")) {
        c.below(&iso, &r.check, 1e-6, 500);
    }
    for psi in nklab::Psi::all() {
        let sign = if psi.kappa == 0 { 1.0 } else { -1.0 };
        c.value(&iso, &format!("{psi} J sign"), sign, 1e-6);
        c.value(&iso, &format!("{psi} P angle"), psi.tau.angle(), 1e-6);
    }
    c.below(&iso, "S3 closure", 1e-10, 500);
    c.below(&iso, "det -1 declared signs", 0.5, 1);
    out.push(c);

    let mut c = Criterion::new(5, "every row Lagrangian within 1e-8 and minimal within 1e-6 at 50 points");
    for id in rows() {
        c.below(&cat, &format!("{id} lagrangian"), 1e-8, 50);
        c.below(&cat, &format!("{id} minimal"), 1e-6, 50);
    }
    out.push(c);

    let mut c = Criterion::new(6, "rows 1-3 totally geodesic, |h| below 1e-6");
    for id in [ImmersionId::DiagTotGeo, ImmersionId::BergerSpacelike, ImmersionId::BergerTimelike] {
        c.below(&cat, &format!("{id} totally geodesic"), 1e-6, 50);
    }
    out.push(c);

    let mut c = Criterion::new(7, "rows 4-5 type I, angles (0, pi/3, 2pi/3), h12^3 and K");
    let third = std::f64::consts::PI / 3.0;
    for (id, h, k) in [(ImmersionId::PslConjugation, 1.0 / (2.0 * s2()), -0.375), (ImmersionId::FlatTorus, -1.0 / s2(), 0.0)] {
        c.value(&cat, &format!("{id} type"), 1.0, 0.5);
        for (n, a) in [0.0, third, 2.0 * third].into_iter().enumerate() {
            c.value(&cat, &format!("{id} theta{}", n + 1), a, 1e-6);
        }
        c.value(&cat, &format!("{id} h12^3"), h, 1e-5);
        c.value(&cat, &format!("{id} sectional curvature"), k, 1e-5);
    }
    out.push(c);

    let mut c = Criterion::new(8, "rows 6-7 type II, angles pi/3, h and omega constants, K = -3/2");
    let r32 = 1.5f64.sqrt();
    let r23 = (2.0f64 / 3.0).sqrt();
    let iota = ImmersionId::BianchiVIota;
    let mut cases = vec![(iota, vec![("h22^3", -s2() / 3.0), ("w12^3", -r32), ("w21^3", -r32), ("w31^1", 0.0), ("w33^2", 0.0)])];
    for l in DEFAULT_LAMBDA_GRID {
        cases.push((
            ImmersionId::BianchiIIIFLambda(l),
            vec![("h22^3", 2.0 * s2() / 3.0), ("w12^3", r32), ("w21^3", r32), ("w31^1", r32), ("w33^2", r23 * (1.0 - l))],
        ));
    }
    for (id, consts) in &cases {
        c.value(&cat, &format!("{id} type"), 2.0, 0.5);
        c.value(&cat, &format!("{id} theta1"), third, 1e-6);
        c.value(&cat, &format!("{id} theta2"), third, 1e-6);
        for (name, v) in consts {
            c.value(&cat, &format!("{id} {name}"), *v, 1e-5);
        }
        c.value(&cat, &format!("{id} sectional curvature"), -1.5, 1e-5);
    }
    let tol = Tolerances::default();
    for l in DEFAULT_LAMBDA_GRID {
        let id = ImmersionId::BianchiIIIFLambda(l);
        if let Ok(t) = LocalAnalysis::new(&id, [0.3, -0.2, 0.4], &tol).and_then(|la| la.sff(&tol)) {
            c.notes.push(format!(
                "{id}: w33^2 = {:.3e}, w22^3 = {:.10} against sqrt(2/3)(1-lambda) = {:.10}",
                t.omega[2][2][1],
                t.omega[1][1][2],
                r23 * (1.0 - l)
            ));
        }
    }
    out.push(c);

    let mut c = Criterion::new(9, "row 8 type III with h22^2, h22^1, h22^3, h(E1,E1) = 0 and h12^3 = 0");
    let j = ImmersionId::BianchiVIJmath;
    c.value(&cat, &format!("{j} type"), 3.0, 0.5);
    for (name, v) in [
        ("h22^2", 2.0 * s2() / 3.0),
        ("h22^1", -13.0 / (18.0 * s2())),
        ("h22^3", 5.0 * s2() / 9.0),
        ("h11^1", 0.0),
        ("h11^2", 0.0),
        ("h11^3", 0.0),
        ("h12^3", 0.0),
    ] {
        c.value(&cat, &format!("{j} {name}"), v, 1e-5);
    }
    out.push(c);

    let mut c = Criterion::new(10, "Bianchi structure constants within 1e-12");
    for id in rows().into_iter().filter(|id| id.row() >= 6) {
        c.below(&cat, &format!("{id} brackets"), 1e-12, 1);
    }
    out.push(c);

    let mut c = Criterion::new(11, "Gauss and Codazzi residuals below 1e-4 at 20 points on every row");
    for id in rows() {
        c.below(&cat, &format!("{id} Gauss equation"), 1e-4, 20);
        c.below(&cat, &format!("{id} Codazzi equation"), 1e-4, 20);
    }
    out.push(c);

    let mut c = Criterion::new(12, "negative controls: perturbed frame is not Lagrangian, impossible tolerance exits nonzero");
    let x = [0.3, -0.2, 0.4];
    match coordinate_frame(&ImmersionId::PslConjugation, x, &tol) {
        Ok(f) => {
            let mut v = f.vecs;
            v[0] = v[0] + apply_j(&v[1]) * 1e-3;
            match FrameTriple::new(f.base, v) {
                Ok(bad) => {
                    let (good, bad) = (check_lagrangian(&f), check_lagrangian(&bad));
                    if !(good < 1e-8 && bad > 1e-8) {
                        c.problems.push(format!("Lagrangian residuals {good:e} (frame) and {bad:e} (perturbed)"));
                    }
                }
                Err(e) => c.problems.push(format!("perturbed frame: {e}")),
            }
        }
        Err(e) => c.problems.push(format!("psl frame: {e}")),
    }
    let status = Command::new(env!("CARGO_BIN_EXE_nklab"))
        .args(["verify", "structure", "--samples", "10", "--tol-exact", "1e-30", "--out"])
        .arg(std::env::temp_dir().join("nklab-acceptance-negative.json"))
        .stderr(Stdio::null())
        .status()
        .expect("run nklab");
    if status.success() {
        c.problems.push("run with tol-exact 1e-30 exited successfully".into());
    }
    out.push(c);

    let mut c = Criterion::new(13, "no type IV on the catalog; angles, h and omega constant on 5^3 grids (spread < 1e-6)");
    for id in rows() {
        c.below(&cat, &format!("{id} never type IV"), 0.5, 50);
        c.below(&cat, &format!("{id} angle spread"), 1e-6, 125);
        c.below(&cat, &format!("{id} h spread"), 1e-6, 125);
        if id.row() >= 4 {
            c.below(&cat, &format!("{id} omega spread"), 1e-6, 125);
        }
    }
    c.notes.push("omega spread is checked on rows 4-8; rows 1-3 have repeated angles and no canonical frame".into());
    out.push(c);

    for c in &out {
        c.report();
    }
    let red: Vec<u32> = out.iter().filter(|c| !c.pass()).map(|c| c.id).collect();
    println!("red criteria: {red:?}");
    assert_eq!(red, KNOWN_RED, "red criteria changed");
}
