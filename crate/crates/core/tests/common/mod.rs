#![allow(dead_code)]

use hamepi_core::expr::Expr;
use hamepi_core::{constant, param, var};
use proptest::prelude::*;

/// Small random trees over `vars` and the parameter `k`. Denominators,
/// log arguments and fractional-power bases are kept away from zero so the
/// trees evaluate on positive boxes.
pub fn tree(vars: &'static [&'static str]) -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        prop::sample::select(vars).prop_map(var),
        Just(param("k")),
        (-3.0..3.0f64).prop_map(constant),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        let positive = inner.clone().prop_map(|b| Expr::one() + b.clone() * b);
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a - b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
            (inner.clone(), positive.clone()).prop_map(|(a, b)| a / b),
            (positive.clone(), prop::sample::select(vec![-1.0, 0.5, 2.0, 3.0]))
                .prop_map(|(b, e)| Expr::pow(b, e)),
            inner.clone().prop_map(|a| -a),
            positive.prop_map(Expr::log),
            inner.prop_map(|a| Expr::exp(Expr::pow(Expr::one() + a.clone() * a, -1.0))),
        ]
    })
}

pub fn names(vars: &[&str]) -> Vec<String> {
    vars.iter().map(|v| v.to_string()).collect()
}

use hamepi_core::coupling::{couple, InteractingSystem, Transfer};
use hamepi_core::expr::ParamMap;
use hamepi_core::model::builtin;

/// Three SIR populations (β = 1, α = 0.1) exchanging recovered
/// individuals at `τ_ab = κ(S_a + S_b + I_a − I_b)`, `κ = 0.1`.
pub fn three_populations(kappa: f64) -> InteractingSystem {
    let models = (0..3).map(|_| builtin::sir(0.1, 1.0).unwrap()).collect();
    let mut transfers = Vec::new();
    for a in 1..=3 {
        for b in a + 1..=3 {
            let rate = hamepi_core::parse(
                &format!("kappa*(S_{a} + S_{b} + I_{a} - I_{b})"),
                &[&format!("S_{a}"), &format!("S_{b}"), &format!("I_{a}"), &format!("I_{b}")],
            )
            .unwrap();
            transfers.push(Transfer::new(a, b, rate));
        }
    }
    couple(models, transfers, ParamMap::from([("kappa".to_string(), kappa)])).unwrap()
}

pub const THREE_POPULATIONS_Y0: [f64; 9] = [0.8, 0.1, 0.1, 0.7, 0.3, 0.0, 0.5, 0.1, 0.4];
