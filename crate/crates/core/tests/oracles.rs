use rwsc_beam::array::{
    generate_snapshots, steering_matrix, steering_vector, ArrayGeometry, DoaGrid, Interferer, Scenario,
};
use rwsc_beam::covariance::sample_covariance;
use rwsc_beam::experiment::{execute, parse_config_str};
use rwsc_beam::solvers::{mvdr, solve_sc, Method, SolverOptions};
use rwsc_beam::weighting::build_q;
use rwsc_beam::{CMatrix, CVector, C64};

/// Minimizes `f` over a 4-D box by repeated grid search, shrinking the box
/// around the incumbent each round.
fn zoom_search(f: impl Fn(&[f64; 4]) -> f64, half_width: f64) -> f64 {
    let steps = 16usize;
    let mut center = [0.0; 4];
    let mut half = half_width;
    let mut best = f(&center);
    for _ in 0..16 {
        let mut best_point = center;
        for idx in 0..(steps + 1).pow(4) {
            let mut p = [0.0; 4];
            let mut k = idx;
            for (c, slot) in p.iter_mut().enumerate() {
                *slot = center[c] - half + 2.0 * half * (k % (steps + 1)) as f64 / steps as f64;
                k /= steps + 1;
            }
            let v = f(&p);
            if v < best {
                best = v;
                best_point = p;
            }
        }
        center = best_point;
        half /= 3.0;
    }
    best
}

#[test]
fn sparse_constraint_matches_brute_force_for_three_elements() {
    let g = ArrayGeometry::half_wavelength(3).unwrap();
    let s = Scenario {
        interferers: vec![
            Interferer { doa_deg: -35.0, inr_db: 20.0 },
            Interferer { doa_deg: 50.0, inr_db: 30.0 },
        ],
        num_snapshots: 200,
        ..Scenario::reference(4)
    };
    let r = sample_covariance(&generate_snapshots(&s, &g).unwrap());
    let grid = DoaGrid::new(vec![-60.0, -35.0, 20.0, 50.0, 75.0], 0.0).unwrap();
    let a = steering_matrix(&g, &grid);
    let a0 = steering_vector(&g, 0.0).unwrap();
    let gamma = 2.0;

    let objective = |w: &CVector| {
        let penalty: f64 = (a.data().adjoint() * w).iter().map(|u| u.norm()).sum();
        w.dotc(&(r.data() * w)).re + gamma * penalty
    };
    let opts = SolverOptions { gamma, p: 1.0, ..SolverOptions::default() };
    let solved = objective(&solve_sc(&r, &a, &a0, &opts).unwrap().w);

    // w = a0 / M + z1 n1 + z2 n2, with n1, n2 orthonormal and orthogonal to a0
    let base = &a0 / C64::from(3.0);
    let n1 = CVector::from_vec(vec![C64::from(1.0), C64::from(-1.0), C64::from(0.0)]) / C64::from(2f64.sqrt());
    let n2 = CVector::from_vec(vec![C64::from(1.0), C64::from(1.0), C64::from(-2.0)]) / C64::from(6f64.sqrt());
    assert!(n1.dotc(&a0).norm() < 1e-12 && n2.dotc(&a0).norm() < 1e-12);
    let brute = zoom_search(
        |p| objective(&(&base + &n1 * C64::new(p[0], p[1]) + &n2 * C64::new(p[2], p[3]))),
        2.0,
    );
    let rel = (solved - brute).abs() / brute;
    assert!(rel <= 0.005, "solver {solved}, brute force {brute}, relative gap {rel}");
}

#[test]
fn weighted_penalty_deepens_the_strong_interferer_null() {
    let cfg = parse_config_str(
        "\
scenario.soi_doa_deg = 0
scenario.soi_snr_db = 10
scenario.interferers = -30:20, 30:20, 70:40
scenario.num_snapshots = 100
scenario.rng_seed = 1
geometry.num_elements = 8
experiment.methods = sc, wsc
experiment.monte_carlo_runs = 20
",
    )
    .unwrap();
    let report = execute(&cfg);
    let depth = |m| report.method(m).unwrap().metric("null_depth_70").unwrap().median;
    let (sc, wsc) = (depth(Method::Sc), depth(Method::Wsc));
    assert!(wsc <= sc - 5.0, "wsc {wsc} dB, sc {sc} dB");
    let sidelobe = |m| report.method(m).unwrap().metric("sidelobe_level").unwrap().median;
    assert!(sidelobe(Method::Wsc) < sidelobe(Method::Sc));
}

#[test]
fn weights_peak_near_the_strongest_interferer() {
    let g = ArrayGeometry::half_wavelength(8).unwrap();
    let grid = DoaGrid::uniform_excluding(0.0, 1.0).unwrap();
    let a = steering_matrix(&g, &grid);
    let mut near = 0;
    for seed in 0..20 {
        let x = generate_snapshots(&Scenario::reference(seed), &g).unwrap();
        let q = build_q(&a, &x).unwrap();
        let imax = (0..q.len()).max_by(|&i, &j| q.diag()[i].total_cmp(&q.diag()[j])).unwrap();
        if (grid.angles_deg()[imax] - 70.0).abs() <= 3.0 {
            near += 1;
        }
    }
    assert!(near >= 18, "70 deg neighbourhood maximal in {near}/20 runs");
}

#[test]
fn mismatched_mvdr_keeps_unit_gain_at_its_steering_angle() {
    let g = ArrayGeometry::half_wavelength(8).unwrap();
    let x = generate_snapshots(&Scenario::reference(1), &g).unwrap();
    let r = sample_covariance(&x);
    let w = mvdr(&r, &steering_vector(&g, 3.0).unwrap()).unwrap().w;
    let at_steer = w.dotc(&steering_vector(&g, 3.0).unwrap()).norm_sqr();
    let at_soi = w.dotc(&steering_vector(&g, 0.0).unwrap()).norm_sqr();
    assert!((at_steer - 1.0).abs() < 1e-10);
    assert!(10.0 * at_soi.log10() < -10.0, "gain at the true SOI {at_soi}");
}

#[test]
fn steering_matrix_first_row_is_ones() {
    let g = ArrayGeometry::new(5, 0.7).unwrap();
    let grid = DoaGrid::uniform_excluding(12.0, 1.0).unwrap();
    let a = steering_matrix(&g, &grid);
    assert_eq!(a.num_directions(), 180);
    let row: CMatrix = a.data().rows(0, 1).into_owned();
    assert!(row.iter().all(|z| *z == C64::from(1.0)));
}
