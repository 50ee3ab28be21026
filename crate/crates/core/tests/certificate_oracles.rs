use certkit_core::certificate::{
    certify, compute_big_omega, general_bound_constants, h_terms, solve_tau_equations, NonlinearitySpec, Regime,
    TauEquations, Verdict,
};
use certkit_core::functions::{Nonlinearity, Profile, ScalarFn, VectorField};
use certkit_core::galerkin_sim::GaussLegendre;
use certkit_core::green_bvp::{green_kernel_sym, solve_p12_direct, P12Norms};
use certkit_core::system::CascadeSystem;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `-(C^T P + P C - a^-2 int int (G(z, s)(B(s) + P D(s)) B(z)^T + transpose) ds dz)`
/// by Gauss-Legendre, with the inner integral split at the kink `s = z`.
fn omega_double_integral(sys: &CascadeSystem, p: &DMatrix<f64>) -> DMatrix<f64> {
    let n = sys.n();
    let kernel = green_kernel_sym(&sys.c, sys.a, sys.l).unwrap();
    let gl = GaussLegendre::new(10);
    let vec_of = |prof: &[Profile], z: f64| DVector::from_iterator(n, prof.iter().map(|f| f.eval(z)));
    let mut acc = DMatrix::zeros(n, n);
    gl.composite(0.0, sys.l, 40, |z, wz| {
        let bz = vec_of(&sys.b, z);
        let mut inner = DVector::zeros(n);
        for (lo, hi) in [(0.0, z), (z, sys.l)] {
            gl.composite(lo, hi, 20, |s, ws| {
                let forcing = vec_of(&sys.b, s) + p * vec_of(&sys.d, s);
                inner += kernel.eval(z, s) * forcing * ws;
            });
        }
        let term = &inner * bz.transpose();
        acc += (&term + term.transpose()) * wz;
    });
    let lin = sys.c.transpose() * p + p * &sys.c;
    -(lin - acc / (sys.a * sys.a))
}

fn omega_single_integral(sys: &CascadeSystem, p: &DMatrix<f64>) -> DMatrix<f64> {
    let prob = sys.coupling_problem(p.clone(), 401).unwrap();
    let p12 = solve_p12_direct(&prob).unwrap();
    compute_big_omega(&prob, &p12).unwrap().0
}

#[test]
fn omega_forms_agree_on_the_example() {
    let sys = CascadeSystem::scalar(1.0, 1.0, 0.25, 1.0, -5.0);
    let p = DMatrix::from_element(1, 1, 1.0);
    let single = omega_single_integral(&sys, &p);
    let double = omega_double_integral(&sys, &p);
    assert!((&single - &double).amax() < 1e-6, "{single} vs {double}");
    assert!((single[(0, 0)] - 0.183766).abs() < 2e-4);
}

#[test]
fn omega_forms_agree_on_a_symmetric_pair() {
    let sys = CascadeSystem::new(
        1.2,
        1.0,
        DMatrix::from_row_slice(2, 2, &[0.6, 0.2, 0.2, 1.1]),
        vec![Profile::constant(1.0), Profile::Sin { amplitude: 0.5, frequency: 2.0, phase: 0.3 }],
        vec![Profile::Polynomial { coeffs: vec![0.0, 1.0, -1.0] }, Profile::constant(-0.7)],
    )
    .unwrap();
    let p = DMatrix::from_row_slice(2, 2, &[1.5, 0.3, 0.3, 0.8]);
    let single = omega_single_integral(&sys, &p);
    let double = omega_double_integral(&sys, &p);
    assert!((&single - &double).amax() < 1e-6, "{single} vs {double}");
}

#[test]
fn zero_coupling_gives_decoupled_certificate() {
    let sys = CascadeSystem::new(
        1.0,
        1.0,
        DMatrix::from_row_slice(2, 2, &[-1.0, 0.5, 0.0, -0.3]),
        vec![Profile::constant(0.0); 2],
        vec![Profile::constant(0.0); 2],
    )
    .unwrap();
    let p = DMatrix::identity(2, 2);
    let spec = NonlinearitySpec::globally_lipschitz(0.5, 0.4, Nonlinearity::lipschitz(ScalarFn::Tanh { amplitude: 0.4 }));
    let cert = certify(&sys.coupling_problem(p.clone(), 201).unwrap(), &spec).unwrap();
    let pi2 = std::f64::consts::PI.powi(2);
    assert!((cert.omega - 2.0 * (pi2 - 0.5)).abs() < 1e-12);
    assert!((&cert.big_omega + (sys.c.transpose() * &p + &p * &sys.c)).amax() < 1e-14);
    assert_eq!(cert.xi[(0, 1)], 0.0);
}

fn sign_change_bracket<G: Fn(f64) -> f64>(g: G, lo: f64, hi: f64, points: usize) -> (f64, f64) {
    let ratio = (hi / lo).powf(1.0 / (points - 1) as f64);
    let mut prev = lo;
    let mut prev_sign = g(lo) > 0.0;
    for k in 1..points {
        let t = lo * ratio.powi(k as i32);
        let s = g(t) > 0.0;
        if s != prev_sign {
            return (prev, t);
        }
        prev = t;
        prev_sign = s;
    }
    panic!("no sign change in [{lo}, {hi}]");
}

#[test]
fn tau_roots_match_a_million_point_scan() {
    let spec_case = TauEquations {
        q: 2.0,
        k1: 0.1 * 0.3 / 2.0,
        k2: 0.2 * 0.37 * 3.0 / 2.0,
        k3: 0.2 * 0.37 / 2.0,
        k4: 0.1 * 3.0 * 0.5 / 2.0,
        rhs_inc: 2.0,
        rhs_dec: 2.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut cases = vec![spec_case];
    for _ in 0..8 {
        cases.push(TauEquations {
            q: rng.random_range(1.5..4.0),
            k1: rng.random_range(0.01..2.0),
            k2: rng.random_range(0.01..2.0),
            k3: rng.random_range(0.01..2.0),
            k4: rng.random_range(0.01..2.0),
            rhs_inc: rng.random_range(0.1..5.0),
            rhs_dec: rng.random_range(0.1..5.0),
        });
    }
    for eq in &cases {
        let r = solve_tau_equations(eq).unwrap();
        let (r1, r2) = eq.relative_residuals(&r);
        assert!(r1 <= 1e-10 && r2 <= 1e-10);
        let inc = |t: f64| eq.k1 * t.powf(2.0 * eq.q) + eq.k2 * t.powf(2.0 * eq.q / (2.0 * eq.q - 1.0)) - eq.rhs_inc;
        let dec = |t: f64| eq.k3 * t.powf(-2.0 * eq.q) + eq.k4 * t.powf(-2.0 * eq.q / (2.0 * eq.q - 1.0)) - eq.rhs_dec;
        let (a, b) = sign_change_bracket(inc, 1e-3, 1e3, 1_000_000);
        assert!(a <= r.tau1 && r.tau1 <= b, "tau1 {} outside [{a}, {b}]", r.tau1);
        let (a, b) = sign_change_bracket(dec, 1e-3, 1e3, 1_000_000);
        assert!(a <= r.tau2 && r.tau2 <= b, "tau2 {} outside [{a}, {b}]", r.tau2);
    }
}

#[test]
fn tau_sides_are_monotone() {
    let eq = TauEquations { q: 1.75, k1: 0.3, k2: 0.2, k3: 0.5, k4: 0.1, rhs_inc: 1.0, rhs_dec: 1.0 };
    let mut prev = (f64::NEG_INFINITY, f64::INFINITY);
    for k in 0..2000 {
        let t = 1e-3 * 1.01f64.powi(k);
        let cur = (eq.increasing(t), eq.decreasing(t));
        assert!(cur.0 > prev.0 && cur.1 < prev.1);
        prev = cur;
    }
}

fn general_spec() -> NonlinearitySpec {
    NonlinearitySpec {
        mode: Regime::General,
        sigma: 0.5,
        alpha: 1.0,
        q: 1.5,
        lipschitz: 0.5,
        c0: 3.0,
        zeta: 1.0,
        delta1: 1.0,
        delta2: 1.0,
        f: Nonlinearity { lipschitz_part: ScalarFn::Sin { amplitude: 0.5 }, remainder: ScalarFn::OddPower { coef: -1.0, exponent: 2.0 } },
        x: VectorField::PowerDamping { gain: 1.0, power: 2.0 },
    }
}

#[test]
fn general_constants_satisfy_the_strict_inequalities() {
    let sys = CascadeSystem::scalar(1.0, 1.0, -0.5, 0.3, 0.2);
    let spec = general_spec();
    let cert = certify(&sys.coupling_problem(DMatrix::identity(1, 1), 401).unwrap(), &spec).unwrap();
    assert!(cert.feasible, "{:?}", cert.verdicts);
    assert_eq!(cert.verdicts.tau_ordered, Verdict::Pass);
    let g = general_bound_constants(&cert, &spec, 0.1).unwrap();
    let tau = cert.tau.unwrap();
    assert!(tau.tau2 < g.tau && g.tau < tau.tau1);
    // direct substitution at the returned (epsilon, tau)
    let (_, _, h3, h4) = h_terms(&cert, &spec, 0.1, g.epsilon, g.tau);
    assert!(h3 < 0.0 && h4 < 0.0, "margins {h3} {h4}");
    assert_eq!((h3, h4), (g.h3, g.h4));
    assert!(g.theta0 > 0.0 && g.vartheta > 0.0);
}

#[test]
fn general_constants_reduce_to_the_corollary() {
    let sys = CascadeSystem::scalar(1.0, 1.0, 0.25, 1.0, -5.0);
    let mut spec = general_spec();
    spec.f = Nonlinearity::lipschitz(ScalarFn::Sin { amplitude: 1.0 });
    spec.x = VectorField::Zero;
    spec.sigma = 1.0;
    spec.lipschitz = 1.0;
    spec.zeta = 0.0;
    spec.c0 = 0.0;
    spec.delta2 = 0.0;
    let cert = certify(&sys.coupling_problem(DMatrix::identity(1, 1), 401).unwrap(), &spec).unwrap();
    assert!(cert.feasible);
    let d = 0.3;
    let g = general_bound_constants(&cert, &spec, d).unwrap();
    let norms: P12Norms = cert.p12_norms();
    let k1 = spec.lipschitz + cert.d_l2 * norms.l2;
    let k2 = spec.lipschitz * norms.l2 + cert.d_l2 * cert.p_spectral_norm;
    assert!((g.h1 - 2.0 * d * k1).abs() < 1e-12);
    assert!((g.h2 - 2.0 * d * k2).abs() < 1e-12);
    let corollary_theta = cert.lambda_min_xi / (2.0 * cert.lambda_max_pi2);
    assert_eq!(g.theta0, corollary_theta);
    let zero = general_bound_constants(&cert, &spec, 0.0).unwrap();
    assert_eq!((zero.psi0, zero.vartheta), (0.0, 0.0));
}

#[test]
fn certificate_is_stable_under_refinement() {
    let sys = CascadeSystem::new(
        0.9,
        1.2,
        DMatrix::from_row_slice(2, 2, &[-0.4, 0.3, -0.2, -0.6]),
        vec![Profile::constant(0.4), Profile::Cos { amplitude: 0.3, frequency: 1.0, phase: 0.0 }],
        vec![Profile::Exp { amplitude: 0.2, rate: -1.0 }, Profile::constant(-0.3)],
    )
    .unwrap();
    let spec = NonlinearitySpec::globally_lipschitz(0.3, 0.3, Nonlinearity::lipschitz(ScalarFn::Tanh { amplitude: 0.3 }));
    let p = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.1, 1.2]);
    let c1 = certify(&sys.coupling_problem(p.clone(), 401).unwrap(), &spec).unwrap();
    let c2 = certify(&sys.coupling_problem(p, 801).unwrap(), &spec).unwrap();
    assert!(c1.feasible && c2.feasible);
    let pairs = [
        (c1.omega, c2.omega),
        (c1.lambda_min_big_omega, c2.lambda_min_big_omega),
        (c1.lambda_min_xi, c2.lambda_min_xi),
        (c1.lambda_min_pi1, c2.lambda_min_pi1),
        (c1.lambda_max_pi2, c2.lambda_max_pi2),
        (c1.p12_norms().l2, c2.p12_norms().l2),
    ];
    for (a, b) in pairs {
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
    assert_eq!(c1.verdicts, c2.verdicts);
}
