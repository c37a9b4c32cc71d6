use hamepi_core::bihamiltonian::{nutku_pair, Kind};
use hamepi_core::expr::{Environment, Expr, ParamMap};
use hamepi_core::field::VectorField;
use hamepi_core::model::builtin;
use hamepi_core::model::CompartmentalModel;
use hamepi_core::poisson::{check_compatibility, is_casimir, JacobiChecker, PoissonStructure};
use hamepi_core::sampling::{Domain, Sampler};
use hamepi_core::{param, parse, var};
use proptest::prelude::*;

mod common;

const SIR: &[&str] = &["S", "I", "R"];

fn sir_params() -> ParamMap {
    [("alpha", 0.1), ("beta", 1.0)].into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn env_at(p: &[f64], params: &ParamMap) -> Environment {
    Environment::new().with_state(&common::names(SIR), p).with_params(params)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn bracket_is_skew_and_leibniz(
        f in common::tree(SIR),
        g in common::tree(SIR),
        h in common::tree(SIR),
        k in -2.0..2.0f64,
        seed in any::<u64>(),
    ) {
        let pair = nutku_pair(0.1, 1.0).unwrap();
        let ps = &pair.first;
        let mut params = pair.params.clone();
        params.insert("k".into(), k);
        let fg = ps.bracket(&f, &g);
        let gf = ps.bracket(&g, &f);
        let leibniz = ps.bracket(&(f.clone() * g.clone()), &h)
            - f.clone() * ps.bracket(&g, &h)
            - g.clone() * ps.bracket(&f, &h);
        for p in Sampler::new(seed).points(3, 10, Domain::INTERIOR) {
            let env = env_at(&p, &params);
            let (Ok(a), Ok(b)) = (fg.eval(&env), gf.eval(&env)) else { continue };
            prop_assert!((a + b).abs() <= 1e-12 * (1.0 + a.abs()), "skew {a} {b}");
            if let Ok(l) = leibniz.eval(&env) {
                let scale = 1.0 + ps.bracket(&(f.clone() * g.clone()), &h).eval(&env).unwrap().abs();
                prop_assert!(l.abs() <= 1e-10 * scale, "leibniz {l}");
            }
        }
    }
}

#[test]
fn reference_brackets() {
    let pair = nutku_pair(0.1, 1.0).unwrap();
    let env = env_at(&[0.8, 0.1, 0.1], &pair.params);
    let sr = pair.first.bracket(&var("S"), &var("R")).eval(&env).unwrap();
    assert!((sr + 0.08).abs() < 1e-15);
    assert!(pair.first.bracket(&var("S"), &var("I")).is_zero());
    // bilinearity
    for p in Sampler::new(1).points(3, 100, Domain::INTERIOR) {
        let env = env_at(&p, &pair.params);
        let lhs = pair.first.bracket(&(var("S") + var("I")), &var("R")).eval(&env).unwrap();
        let rhs = pair.first.bracket(&var("S"), &var("R")).eval(&env).unwrap()
            + pair.first.bracket(&var("I"), &var("R")).eval(&env).unwrap();
        assert!((lhs - rhs).abs() < 1e-15);
    }
}

/// Every first structure that the library builds from a model.
fn canonical_structures() -> Vec<(String, PoissonStructure, ParamMap)> {
    let mu = ParamMap::from([("mu".to_string(), 0.1)]);
    let generalized = builtin::generalized_sir(
        0.1,
        param("beta"),
        param("mu") * var("I"),
        -(param("mu") * var("I")),
        ParamMap::from([("beta".to_string(), 1.0), ("mu".to_string(), 0.1)]),
    )
    .unwrap();
    let mut out = Vec::new();
    let mut push = |name: &str, m: &CompartmentalModel| {
        let sys = m.canonical_poisson().system;
        out.push((name.to_string(), sys.structure, sys.params));
    };
    push("sir", &builtin::sir(0.1, 1.0).unwrap());
    push("generalized", &generalized);
    for d in ["I", "S"] {
        push(&format!("generalized/{d}"), &generalized.clone().with_distinguished(d).unwrap());
    }
    push("sirs", &builtin::sirs_endemic(0.1, 1.0, 0.1).unwrap());
    push("vacc_i", &builtin::sir_vacc_i(0.1, 1.0, 0.1).unwrap());
    push("vacc_s", &builtin::sir_vacc_s(0.1, 1.0, 0.1).unwrap());
    push("vital", &builtin::sir_vital(0.1, 1.0, 0.01, 0.2, 0.01).unwrap());
    push(
        "seir",
        &builtin::seir(
            0.1,
            1.0,
            0.2,
            [param("mu") * var("I"), Expr::zero(), Expr::zero()],
            mu,
        )
        .unwrap(),
    );
    out
}

#[test]
fn canonical_structures_satisfy_jacobi() {
    for (name, ps, params) in canonical_structures() {
        let pts = Sampler::new(0).points(ps.dim(), 1000, Domain::INTERIOR);
        let rep = JacobiChecker::new(&ps, &params).unwrap().report(&pts).unwrap();
        assert!(rep.max_residual <= 1e-10, "{name}: {}", rep.max_residual);
    }
}

#[test]
fn second_structures_and_pencils_satisfy_jacobi() {
    for kind in [
        Kind::Sir { alpha: 0.1, beta: 1.0 },
        Kind::Sirs { alpha: 0.1, beta: 1.0, mu: 0.1 },
        Kind::VaccI { alpha: 0.1, beta: 1.0, v: 0.1 },
        Kind::VaccS { alpha: 0.1, beta: 1.0, v: 0.1 },
    ] {
        let pair = kind.pair();
        let pts = Sampler::new(3)
            .points_where(3, 200, Domain::INTERIOR, |p| kind.in_domain(p))
            .unwrap();
        for lambda in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let pencil = PoissonStructure::pencil(&pair.first, &pair.second, lambda).unwrap();
            let rep = JacobiChecker::new(&pencil, &pair.params).unwrap().report(&pts).unwrap();
            assert!(rep.max_residual <= 1e-10, "{} λ={lambda}: {}", kind.name(), rep.max_residual);
        }
        let rep = pair.verify(&pts).unwrap();
        assert!(rep.passes(1e-10), "{}: {rep:?}", kind.name());
    }
}

#[test]
fn pencil_endpoints() {
    let pair = nutku_pair(0.1, 1.0).unwrap();
    let at0 = PoissonStructure::pencil(&pair.first, &pair.second, 0.0).unwrap();
    let at1 = PoissonStructure::pencil(&pair.first, &pair.second, 1.0).unwrap();
    let env = env_at(&[0.3, 0.4, 0.3], &pair.params);
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let v = |ps: &PoissonStructure| ps.entry(i, j).eval(&env).unwrap();
        assert_eq!(v(&at0), v(&pair.first));
        assert_eq!(v(&at1), v(&pair.second));
    }
}

/// `J(i,j,k) = Σ_l π^{li} ∂_l π^{jk} + π^{lj} ∂_l π^{ki} + π^{lk} ∂_l π^{ij}`
/// with the matrix entries as plain closures and derivatives by central
/// differences.
fn brute_force_jacobi(pi: &dyn Fn(&[f64]) -> [[f64; 3]; 3], x: &[f64]) -> f64 {
    let h = 1e-6;
    let d = |l: usize, i: usize, j: usize| {
        let (mut p, mut m) = (x.to_vec(), x.to_vec());
        p[l] += h;
        m[l] -= h;
        (pi(&p)[i][j] - pi(&m)[i][j]) / (2.0 * h)
    };
    let p0 = pi(x);
    let (i, j, k) = (0, 1, 2);
    (0..3)
        .map(|l| p0[l][i] * d(l, j, k) + p0[l][j] * d(l, k, i) + p0[l][k] * d(l, i, j))
        .sum::<f64>()
        .abs()
}

#[test]
fn corrupted_structure_fails_jacobi_as_the_oracle_predicts() {
    let (alpha, beta) = (0.1, 1.0);
    let corrupted = nutku_pair(alpha, beta).unwrap().first.with("S", "I", var("S")).unwrap();
    let params = sir_params();
    let x = [0.8, 0.1, 0.1];
    let got = JacobiChecker::new(&corrupted, &params).unwrap().residual(&x).unwrap();
    let pi = |p: &[f64]| {
        let (s, i) = (p[0], p[1]);
        let (si, sr, ir) = (s, -beta * s * i, beta * s * i - alpha * i);
        [[0.0, si, sr], [-si, 0.0, ir], [-sr, -ir, 0.0]]
    };
    let want = brute_force_jacobi(&pi, &x);
    assert!(got > 0.01, "{got}");
    assert!((got - want).abs() < 1e-6, "{got} vs {want}");

    // summing with the genuine structure stays broken
    let pts = [x.to_vec()];
    let rep = check_compatibility(&nutku_pair(alpha, beta).unwrap().first, &corrupted, &params, &pts, 1e-10)
        .unwrap();
    assert!(!rep.compatible);
    let sum = |p: &[f64]| {
        let (a, b) = (pi(p), {
            let (s, i) = (p[0], p[1]);
            let (sr, ir) = (-beta * s * i, beta * s * i - alpha * i);
            [[0.0, 0.0, sr], [0.0, 0.0, ir], [-sr, -ir, 0.0]]
        });
        let mut c = [[0.0; 3]; 3];
        for r in 0..3 {
            for q in 0..3 {
                c[r][q] = a[r][q] + b[r][q];
            }
        }
        c
    };
    assert!((rep.max_residual - brute_force_jacobi(&sum, &x)).abs() < 1e-6);
}

#[test]
fn casimir_reference_cases() {
    let pair = nutku_pair(0.1, 1.0).unwrap();
    let pts = Sampler::new(5).points(3, 500, Domain::INTERIOR);
    let total = var("S") + var("I") + var("R");
    assert!(is_casimir(&pair.second, &pair.params, &total, &pts, 1e-10).unwrap().is_casimir);
    let c = parse("S + I - 1 - alpha/beta*log(S)", SIR).unwrap();
    assert!(is_casimir(&pair.first, &pair.params, &c, &pts, 1e-10).unwrap().is_casimir);
    // π^♯dS has the component −βSI
    let rep = is_casimir(&pair.first, &pair.params, &var("S"), &pts, 1e-10).unwrap();
    assert!(!rep.is_casimir);
    let bound = pts.iter().map(|p| p[0] * p[1]).fold(0.0, f64::max);
    assert!(rep.max_defect >= bound * (1.0 - 1e-12));
}

fn all_builtins() -> Vec<(String, CompartmentalModel)> {
    builtin::NAMES
        .iter()
        .map(|n| {
            let p: ParamMap = [
                ("alpha", 0.1),
                ("beta", 1.0),
                ("mu", 0.1),
                ("v", 0.1),
                ("d_S", 0.01),
                ("d_I", 0.2),
                ("d_R", 0.01),
                ("epsilon", 0.2),
            ]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
            (n.to_string(), builtin::by_name(n, &p).unwrap())
        })
        .collect()
}

#[test]
fn builtins_conserve_population() {
    for (name, m) in all_builtins() {
        let ode = m.to_ode();
        let pts = Sampler::new(2).points(ode.vars.len(), 1000, Domain::INTERIOR);
        let d = ode.zero_sum_defect(&pts).unwrap();
        assert!(d <= 1e-14, "{name}: {d}");
    }
}

#[test]
fn hamilton_equations_reproduce_the_ode() {
    for (name, m) in all_builtins() {
        let ode = m.to_ode().compile().unwrap();
        let ham = m.canonical_poisson().system.compile().unwrap();
        for p in Sampler::new(4).points(ode.dim(), 1000, Domain::SIMPLEX) {
            let (a, b) = (ode.eval_vec(&p).unwrap(), ham.eval_vec(&p).unwrap());
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() <= 1e-12, "{name} at {p:?}: {a:?} vs {b:?}");
            }
        }
    }
}

#[test]
fn dynamics_do_not_depend_on_the_distinguished_compartment() {
    let m = builtin::generalized_sir(
        0.1,
        param("beta") * (var("S") + var("I")),
        param("mu") * var("I") + param("nu") * var("S"),
        param("nu") * var("I"),
        ParamMap::from([("beta".to_string(), 1.0), ("mu".to_string(), 0.1), ("nu".to_string(), 0.05)]),
    )
    .unwrap();
    let fields: Vec<_> = ["R", "I", "S"]
        .iter()
        .map(|d| {
            m.clone().with_distinguished(d).unwrap().canonical_poisson().system.compile().unwrap()
        })
        .collect();
    for p in Sampler::new(6).points(3, 1000, Domain::SIMPLEX) {
        let v: Vec<_> = fields.iter().map(|f| f.eval_vec(&p).unwrap()).collect();
        for w in &v[1..] {
            for c in 0..3 {
                assert!((v[0][c] - w[c]).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn two_compartment_toy() {
    let m = CompartmentalModel::new(["S", "I"], sir_params())
        .unwrap()
        .with_flow_str("S", "I", "beta*S*I")
        .unwrap()
        .with_flow_str("I", "S", "alpha*I")
        .unwrap();
    let sys = m.canonical_poisson().system;
    let want = parse("-beta*S*(1 - S) + alpha*(1 - S)", &["S", "I"]).unwrap();
    let env = Environment::new().var("S", 0.3).var("I", 0.7).with_params(&sys.params);
    let got = sys.structure.get("S", "I").unwrap().eval(&env).unwrap();
    assert!((got - want.eval(&env).unwrap()).abs() < 1e-15);
    let (ode, ham) = (m.to_ode().compile().unwrap(), sys.compile().unwrap());
    for p in Sampler::new(7).points(2, 100, Domain::SIMPLEX) {
        let (a, b) = (ode.eval_vec(&p).unwrap(), ham.eval_vec(&p).unwrap());
        assert!((a[0] - b[0]).abs() < 1e-14 && (a[1] - b[1]).abs() < 1e-14);
    }
}
