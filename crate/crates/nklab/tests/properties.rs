// SPDX-License-Identifier: Apache-2.0

use std::f64::consts::PI;

use nklab::catalog::{ImmersionId, DEFAULT_LAMBDA_GRID};
use nklab::isometry::{Isometry, Psi};
use nklab::lag::{check_lagrangian, coordinate_frame};
use nklab::nk_core::*;
use nklab::report::{match_angles, render, CheckRecord, Format, RunConfig};
use nklab::rng::{sample_stream, stream};
use nklab::split_mat::{exp_sl2, Sl2Vec};
use nklab::{TangentVec, Tolerances};
use proptest::prelude::*;

fn vec6() -> impl Strategy<Value = AlgebraVec> {
    prop::array::uniform6(-2.0f64..2.0).prop_map(AlgebraVec::from_array)
}

fn sl2() -> impl Strategy<Value = Sl2Vec> {
    prop::array::uniform3(-1.5f64..1.5).prop_map(|[x, y, z]| Sl2Vec::new(x, y, z))
}

fn point() -> impl Strategy<Value = Point> {
    (sl2(), sl2()).prop_map(|(a, b)| Point { a: exp_sl2(&a), b: exp_sl2(&b) })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn j_is_a_complex_structure_and_isometric(x in vec6(), y in vec6()) {
        prop_assert!((apply_j(&apply_j(&x)) + x).max_abs() < 1e-12);
        prop_assert!((metric_g(&apply_j(&x), &apply_j(&y)) - metric_g(&x, &y)).abs() < 1e-12);
        prop_assert!((metric_g(&apply_j(&x), &y) + metric_g(&x, &apply_j(&y))).abs() < 1e-12);
    }

    #[test]
    fn rotated_products_are_almost_product_structures(x in vec6(), y in vec6(), k in 0usize..3) {
        let eta = 2.0 * PI * k as f64 / 3.0;
        let p = |v: &AlgebraVec| apply_p_rotated(eta, v);
        prop_assert!((p(&p(&x)) - x).max_abs() < 1e-12);
        prop_assert!((p(&apply_j(&x)) + apply_j(&p(&x))).max_abs() < 1e-12);
        prop_assert!((metric_g(&p(&x), &y) - metric_g(&x, &p(&y))).abs() < 1e-12);
        prop_assert!(nabla_p_residual(eta, &x, &y) < 1e-10);
    }

    #[test]
    fn g_is_skew_and_anticommutes_with_j(x in vec6(), y in vec6()) {
        prop_assert!((tensor_g(&x, &y) + tensor_g(&y, &x)).max_abs() < 1e-10);
        prop_assert!((tensor_g(&x, &apply_j(&y)) + apply_j(&tensor_g(&x, &y))).max_abs() < 1e-10);
    }

    #[test]
    fn curvature_has_the_algebraic_symmetries(x in vec6(), y in vec6(), z in vec6(), w in vec6()) {
        let r = |a: &AlgebraVec, b: &AlgebraVec, c: &AlgebraVec| curvature(a, b, c);
        prop_assert!((r(&x, &y, &z) + r(&y, &x, &z)).max_abs() < 1e-10);
        prop_assert!((r(&x, &y, &z) - curvature_closed_form(&x, &y, &z)).max_abs() < 1e-10);
        let pair = metric_g(&r(&x, &y, &z), &w) - metric_g(&r(&z, &w, &x), &y);
        prop_assert!(pair.abs() < 1e-10);
    }

    #[test]
    fn exponential_lands_in_sl2(a in sl2()) {
        let m = exp_sl2(&a);
        prop_assert!((m.det() - 1.0).abs() < 1e-10 * (1.0 + m.max_abs().powi(2)));
        let back = m * exp_sl2(&(a * -1.0));
        prop_assert!((back - nklab::Mat2::IDENTITY).max_abs() < 1e-10 * (1.0 + m.max_abs().powi(2)));
    }

    #[test]
    fn isometries_preserve_g_and_invert(seed in any::<u64>(), p in point(), x in vec6(), y in vec6()) {
        let f = Isometry::random(&mut stream(seed, "prop", "iso"));
        let tx = TangentVec { base: p, v: x };
        let ty = TangentVec { base: p, v: y };
        let (fx, fy) = (f.differential_exact(&tx), f.differential_exact(&ty));
        let scale = 1.0 + x.max_abs() * y.max_abs();
        prop_assert!((metric_g(&fx.v, &fy.v) - metric_g(&x, &y)).abs() < 1e-8 * scale);
        let back = f.inverse().act(&f.act(&p));
        prop_assert!(back.max_abs_diff(&p) < 1e-8 * (1.0 + p.a.max_abs().max(p.b.max_abs())));
    }

    #[test]
    fn psi_elements_form_s3(i in 0usize..6, j in 0usize..6, k in 0usize..6, p in point()) {
        let all = Psi::all();
        let (a, b, c) = (all[i], all[j], all[k]);
        prop_assert_eq!(a.compose(b).compose(c), a.compose(b.compose(c)));
        prop_assert_eq!(a.compose(Psi::IDENTITY), a);
        prop_assert!(all.iter().any(|inv| a.compose(*inv) == Psi::IDENTITY));
        let lhs = a.compose(b).act(&p);
        let rhs = a.act(&b.act(&p));
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-9 * (1.0 + rhs.a.max_abs().max(rhs.b.max_abs())));
    }

    #[test]
    fn catalog_frames_are_lagrangian(row in 0usize..11, x in prop::array::uniform3(-1.0f64..1.0)) {
        let ids = ImmersionId::all(&DEFAULT_LAMBDA_GRID);
        let f = coordinate_frame(&ids[row], x, &Tolerances::default()).unwrap();
        prop_assert!(check_lagrangian(&f) < 1e-8);
    }

    #[test]
    fn records_pass_exactly_when_within_tolerance(
        res in prop_oneof![0.0f64..2.0, Just(f64::NAN), Just(f64::INFINITY)],
        tol in 1e-12f64..1.0,
        exp in -2.0f64..2.0,
        delta in -1.0f64..1.0,
    ) {
        let a = CheckRecord::residual("s", "c", 1, res, tol);
        prop_assert!(a.is_consistent());
        prop_assert_eq!(a.pass, res <= tol);
        let b = CheckRecord::value("s", "c", 1, res, tol, exp, exp + delta);
        prop_assert!(b.is_consistent());
        prop_assert_eq!(b.pass, res <= tol && delta.abs() <= tol);
    }

    #[test]
    fn angle_matching_ignores_order_and_multiples_of_pi(
        a in prop::array::uniform3(0.0f64..PI),
        shifts in prop::array::uniform3(-3i32..3),
        perm in 0usize..6,
    ) {
        let orders = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let obs: Vec<f64> = orders[perm].iter().zip(shifts).map(|(&i, s)| a[i] + PI * s as f64).collect();
        let d = match_angles(&obs, &a).unwrap();
        prop_assert!(d.iter().all(|x| x.abs() < 1e-9));
    }

    #[test]
    fn sample_streams_are_stable(seed in any::<u64>(), i in 0usize..10_000) {
        use rand::Rng;
        let a: f64 = sample_stream(seed, "suite", "check", i).gen();
        let b: f64 = sample_stream(seed, "suite", "check", i).gen();
        let c: f64 = sample_stream(seed, "suite", "other", i).gen();
        prop_assert_eq!(a, b);
        prop_assert_ne!(a, c);
    }

    #[test]
    fn csv_rows_round_trip(vals in prop::collection::vec((0.0f64..1e3, 1e-12f64..1.0), 1..20)) {
        let recs: Vec<CheckRecord> = vals.iter().enumerate()
            .map(|(n, &(r, t))| CheckRecord::residual("s", format!("check {n}"), n + 1, r, t))
            .collect();
        let cfg = RunConfig { format: Format::Csv, ..RunConfig::default() };
        let bytes = render(&recs, &cfg).unwrap();
        let mut rd = csv::Reader::from_reader(&bytes[..]);
        let rows: Vec<csv::StringRecord> = rd.records().collect::<Result<_, _>>().unwrap();
        prop_assert_eq!(rows.len(), recs.len());
        for (row, rec) in rows.iter().zip(&recs) {
            prop_assert_eq!(row[3].parse::<f64>().unwrap(), rec.max_residual);
            prop_assert_eq!(row[4].parse::<f64>().unwrap(), rec.tolerance);
            prop_assert_eq!(&row[7], if rec.pass { "true" } else { "false" });
        }
    }
}
