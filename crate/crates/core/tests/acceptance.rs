//! Desk-scale acceptance gate: thirteen property checks covering theta
//! evaluation, period frames, kernel identities, the homotopy operator and
//! the CLI contract. Each criterion prints one PASS/FAIL line; the test
//! fails if any criterion does.

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use branekernels::curve::{
    abel, build_frame, lattice_distance, odd_half_period, riemann_constants, BranchData,
    PeriodFrame, SheetedPoint,
};
use branekernels::homotopy::{
    bilinear_check, cohomology_dims, project_p, splitting_suite, SampledForm,
};
use branekernels::kernels::{
    boundary_suite_residual, kernel, reflection_suite_max, swap_suite_residual, zero_set_probe,
    Which,
};
use branekernels::numerics::QuadratureConfig;
use branekernels::oracles::agm_complete_k;
use branekernels::theta::{quasi_periodicity_residual, random_siegel, theta};

const PI: f64 = std::f64::consts::PI;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

struct Gate {
    all_pass: bool,
}

impl Gate {
    fn record(&mut self, idx: usize, name: &str, pass: bool, detail: String) {
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!("criterion {idx:2} {name}: {verdict} ({detail})");
        self.all_pass &= pass;
    }
}

// Three probe geometries per degree (bump, exact 1-form, curl bump) and two
// evaluation points, sized to the chart.
fn splitting_probes_3x(n: usize) -> (Vec<SampledForm>, Vec<Complex64>) {
    let geo: [(Complex64, f64); 3] = if n <= 3 {
        [(c(0.3, 1.2), 0.8), (c(-0.4, 1.5), 0.9), (c(0.8, 1.1), 0.6)]
    } else {
        [(c(0.65, 1.0), 0.75), (c(0.85, 1.05), 0.72), (c(0.7, 1.05), 0.8)]
    };
    let mut probes = Vec::new();
    for (i, (ctr, r)) in geo.iter().enumerate() {
        probes.push(SampledForm::bump(*ctr, *r, &format!("bump{i}")));
        probes.push(SampledForm::exact_one_form(*ctr, *r, &format!("df{i}")));
        probes.push(SampledForm::curl_bump(*ctr, *r, &format!("dw{i}")));
    }
    let points = if n <= 3 {
        vec![c(0.3, 1.2), c(0.55, 1.35)]
    } else {
        vec![c(0.6, 0.9), c(0.76, 1.02)]
    };
    (probes, points)
}

fn max_residual(report: &branekernels::homotopy::SplittingReport) -> f64 {
    report.probes.iter().map(|p| p.max_residual).fold(0.0, f64::max)
}

#[test]
fn acceptance_criteria() {
    let cfg = QuadratureConfig::default();
    let mut gate = Gate { all_pass: true };

    let frame4 = build_frame(&BranchData::new(vec![0.0, 1.0, 2.0]).unwrap(), &cfg).unwrap();
    let frame6 =
        build_frame(&BranchData::new(vec![0.0, 1.0, 2.0, 3.0, 4.0]).unwrap(), &cfg).unwrap();

    // 1: theta lattice translation law, g = 1..3, 100 draws each, < 10 s
    {
        let t0 = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let mut worst: f64 = 0.0;
        for g in 1..=3usize {
            let pm = random_siegel(g, &mut rng);
            for _ in 0..100 {
                let z: Vec<Complex64> = (0..g)
                    .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect();
                let mu: Vec<i64> = (0..g).map(|_| rng.gen_range(-2..=2)).collect();
                let mup: Vec<i64> = (0..g).map(|_| rng.gen_range(-2..=2)).collect();
                let r = quasi_periodicity_residual(&z, &pm, &mu, &mup, 1e-12).unwrap();
                worst = worst.max(r);
            }
        }
        let dt = t0.elapsed().as_secs_f64();
        gate.record(
            1,
            "theta translation law g=1..3",
            worst < 1e-9 && dt < 10.0,
            format!("max residual {worst:.2e}, {dt:.1}s"),
        );
    }

    // 2: theta vanishes at every odd half period of the computed frames
    {
        let mut worst: f64 = 0.0;
        for frame in [&frame4, &frame6] {
            for j in 1..=frame.g() {
                let a = odd_half_period(frame, j).unwrap();
                worst = worst.max(theta(&a, &frame.omega, 1e-13).unwrap().norm());
            }
        }
        gate.record(2, "odd half-period vanishing g=1,2", worst < 1e-9, format!("max |theta(A)| {worst:.2e}"));
    }

    // 3: frame invariants on three branch sets, plus the g=1 AGM oracle
    {
        let mut worst: f64 = 0.0;
        for xs in [
            vec![0.0, 1.0, 2.0],
            vec![0.0, 1.0, 2.0, 3.0, 4.0],
            vec![-2.0, -1.0, 0.0, 1.0, 3.0],
        ] {
            let frame = build_frame(&BranchData::new(xs).unwrap(), &cfg).unwrap();
            let g = frame.g();
            for i in 0..g {
                for j in 0..g {
                    worst = worst.max(frame.i_mat[(i, j)].im.abs());
                    worst = worst.max(frame.omega.omega[(i, j)].re.abs());
                    worst = worst
                        .max((frame.omega.omega[(i, j)] - frame.omega.omega[(j, i)]).norm());
                }
            }
            // half-period table against direct Abel integration
            for (m, x) in frame.branch.x.iter().enumerate() {
                let img = abel(&SheetedPoint::upper(c(*x, 0.0)), &frame, &cfg).unwrap();
                worst =
                    worst.max(lattice_distance(&img, &frame.half_periods[m], &frame.omega));
            }
            let img = abel(&SheetedPoint::infinity(), &frame, &cfg).unwrap();
            worst = worst
                .max(lattice_distance(&img, &frame.half_periods[2 * g + 1], &frame.omega));
        }
        // {0,1,2}: modulus m = 1/2, tau = i K(1-m)/K(m) = i
        let agm_tau = agm_complete_k(0.5) / agm_complete_k(0.5);
        worst = worst.max((frame4.omega.im_entry(0, 0) - agm_tau).abs());
        gate.record(3, "frame invariants + AGM oracle", worst < 1e-8, format!("max residual {worst:.2e}"));
    }

    // 4: Riemann constants, closed form vs sum of odd half periods
    {
        let mut worst: f64 = 0.0;
        for frame in [&frame4, &frame6] {
            let g = frame.g();
            let closed = riemann_constants(frame).unwrap();
            let mut summed = vec![c(0.0, 0.0); g];
            for j in 1..=g {
                for i in 0..g {
                    summed[i] += frame.half_periods[2 * j][i];
                }
            }
            worst = worst.max(lattice_distance(&closed, &summed, &frame.omega));
            worst = worst.max(lattice_distance(&closed, &frame.k, &frame.omega));
        }
        gate.record(4, "Riemann constants g=1,2", worst < 1e-8, format!("max lattice distance {worst:.2e}"));
    }

    // 5: space-filling reduction for two branes against the closed z-form
    {
        let mut rng = ChaCha8Rng::seed_from_u64(102);
        let mut worst: f64 = 0.0;
        let four_pi_i = c(0.0, 4.0 * PI);
        for _ in 0..100 {
            let z = c(rng.gen_range(-2.0..2.0), rng.gen_range(0.05..2.0));
            let w = c(rng.gen_range(-2.0..2.0), rng.gen_range(0.05..2.0));
            if (z - w).norm() < 1e-3 {
                continue;
            }
            let form =
                kernel(&SheetedPoint::upper(w), &SheetedPoint::upper(z), Which::A1, 2, None, &cfg)
                    .unwrap();
            let a_p = (1.0 / (z - w) - 1.0 / (z - w.conj())) / four_pi_i;
            let a_q = (-1.0 / (z - w) - 1.0 / (z.conj() - w)) / four_pi_i;
            worst = worst.max((form.a_p - a_p).norm()).max((form.a_q - a_q).norm());
        }
        gate.record(5, "Kontsevich reduction n=2 A1, 100 pairs", worst < 1e-10, format!("max residual {worst:.2e}"));
    }

    // 6: alternating boundary conditions, 32 points/side x 20 partners
    {
        let cases: [(usize, Option<&PeriodFrame>, f64); 4] = [
            (2, None, 1e-7),
            (3, None, 1e-7),
            (4, Some(&frame4), 1e-6),
            (6, Some(&frame6), 1e-6),
        ];
        let mut pass = true;
        let mut detail = String::new();
        for (n, frame, tol) in cases {
            let mut worst: f64 = 0.0;
            for which in [Which::S1, Which::S2] {
                let r = boundary_suite_residual(n, which, frame, 32, 20, 103, &cfg).unwrap();
                worst = worst.max(r);
            }
            pass &= worst < tol;
            detail.push_str(&format!("n={n}: {worst:.1e} "));
        }
        gate.record(6, "boundary conditions n=2,3,4,6", pass, detail.trim().to_string());
    }

    // 7: reflection identities with the 8 pi Re terms, g = 1 and 2
    {
        let mut worst: f64 = 0.0;
        for frame in [&frame4, &frame6] {
            for which in [Which::S1, Which::S2] {
                worst = worst.max(reflection_suite_max(frame, which, 100, 104).unwrap());
            }
        }
        gate.record(7, "reflection suites g=1,2, 100 pairs", worst < 1e-7, format!("max residual mod 2pi {worst:.2e}"));
    }

    // 8: swap antisymmetry theta_S1(Q,P) = theta_S2(P,Q)
    {
        let cases: [(usize, Option<&PeriodFrame>, f64); 4] = [
            (2, None, 1e-9),
            (3, None, 1e-9),
            (4, Some(&frame4), 1e-7),
            (6, Some(&frame6), 1e-7),
        ];
        let mut pass = true;
        let mut detail = String::new();
        for (n, frame, tol) in cases {
            let r = swap_suite_residual(n, frame, 100, 105, &cfg).unwrap();
            pass &= r < tol;
            detail.push_str(&format!("n={n}: {r:.1e} "));
        }
        gate.record(8, "swap antisymmetry n=2,3,4,6", pass, detail.trim().to_string());
    }

    // 9: mirror-ratio zeros only near the diagonal (40 x 40 pair grid)
    {
        let (min_off, near) = zero_set_probe(&frame4, Which::S1, 40, &cfg).unwrap();
        gate.record(
            9,
            "zero-set probe n=4",
            min_off > 1e3 * near,
            format!("off-diagonal floor {min_off:.2e}, near-diagonal {near:.2e}"),
        );
    }

    // 10: bilinear relations against tau/2
    {
        let t0 = Instant::now();
        let r1 = bilinear_check(&frame4, &cfg)
            .unwrap()
            .iter()
            .flatten()
            .copied()
            .fold(0.0, f64::max);
        let r2 = bilinear_check(&frame6, &cfg)
            .unwrap()
            .iter()
            .flatten()
            .copied()
            .fold(0.0, f64::max);
        let dt = t0.elapsed().as_secs_f64();
        gate.record(
            10,
            "bilinear relations g=1,2",
            r1 < 1e-6 && r2 < 1e-5 && dt < 120.0,
            format!("g=1: {r1:.2e}, g=2: {r2:.2e}, {dt:.1}s"),
        );
    }

    // 11: Hodge splitting dG + Gd = I - P, three probes per degree,
    // n = 2 and n = 4, plus refinement decrease and P(zero mode) = zero mode
    {
        let mut pass = true;
        let mut detail = String::new();

        for (n, frame) in [(2usize, None), (4, Some(&frame4))] {
            let (probes, points) = splitting_probes_3x(n);
            let report = splitting_suite(n, Which::S1, frame, &probes, &points, &cfg).unwrap();
            let worst = max_residual(&report);
            pass &= worst < 5e-3;
            detail.push_str(&format!("n={n}: {worst:.1e} "));
        }

        // one refinement level must reduce the residual (n = 2 probes)
        let probes = vec![
            SampledForm::bump(c(0.3, 1.2), 0.8, "bump"),
            SampledForm::exact_one_form(c(0.3, 1.2), 0.8, "df"),
            SampledForm::curl_bump(c(0.3, 1.2), 0.8, "dw"),
        ];
        let points = vec![c(0.3, 1.2)];
        let base = splitting_suite(2, Which::S1, None, &probes, &points, &cfg).unwrap();
        let refined_cfg = QuadratureConfig { mesh_refine: 2.0, ..cfg };
        let refined =
            splitting_suite(2, Which::S1, None, &probes, &points, &refined_cfg).unwrap();
        let (b, r) = (max_residual(&base), max_residual(&refined));
        pass &= r < b;
        detail.push_str(&format!("refine: {b:.1e} -> {r:.1e} "));

        // zero-mode probes are fixed by the projection
        let mut zm_worst: f64 = 0.0;
        for which in [Which::S1, Which::S2] {
            let zm = SampledForm::zero_mode(&frame4, 1, which, "zm");
            for q in [c(0.5, 0.8), c(1.5, 1.3)] {
                let p = project_p(&zm, q, which, 4, Some(&frame4), &cfg).unwrap();
                zm_worst = zm_worst.max((p - zm.value1(q)).norm());
            }
        }
        pass &= zm_worst < 5e-3;
        detail.push_str(&format!("P(zm)=zm: {zm_worst:.1e}"));

        gate.record(11, "Hodge splitting n=2,4", pass, detail);
    }

    // 12: cohomology dimensions for n = 2..8
    {
        let expected = [(2, 0), (3, 0), (4, 1), (5, 1), (6, 2), (7, 2), (8, 3)];
        let pass = expected
            .iter()
            .all(|&(n, h1)| cohomology_dims(n) == (0, h1, 0));
        gate.record(12, "cohomology dimensions n=2..8", pass, "exact integer match".into());
    }

    // 13: CLI determinism, byte-identical reruns with a fixed seed
    {
        let bin = env!("CARGO_BIN_EXE_branekernels");
        let dir = tempfile::tempdir().unwrap();
        let run = |name: &str, args: &[&str]| -> Vec<u8> {
            let out = dir.path().join(name);
            let status = std::process::Command::new(bin)
                .args(args)
                .arg("--out")
                .arg(&out)
                .output()
                .unwrap();
            assert!(status.status.success(), "{args:?}: {status:?}");
            std::fs::read(&out).unwrap()
        };
        let kernel_args =
            ["kernel", "--n", "2", "--which", "s1", "--grid", "-1:1:0.2:1.2:4"];
        let verify_args = ["verify", "theta-translations", "--seed", "5"];
        let a = run("k1.csv", &kernel_args);
        let b = run("k2.csv", &kernel_args);
        let v1 = run("v1.json", &verify_args);
        let v2 = run("v2.json", &verify_args);
        let pass = !a.is_empty() && a == b && !v1.is_empty() && v1 == v2;
        gate.record(
            13,
            "CLI determinism",
            pass,
            format!("{} CSV bytes, {} JSON bytes, reruns identical", a.len(), v1.len()),
        );
    }

    assert!(gate.all_pass, "at least one acceptance criterion failed");
}
