//! Fast invariant suite behind `pollstop check`.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::ModelError;
use crate::model::{Model, StatePoint};
use crate::sim::{stream, PathEngine, PathState, SimConfig};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn result(name: &'static str, passed: bool, detail: String) -> CheckResult {
    CheckResult {
        name,
        passed,
        detail,
    }
}

fn constants(model: &Model) -> CheckResult {
    let c = model.consts();
    let ok = c.theta > 0.0 && c.theta0 > 0.0 && c.rho > 0.0 && c.rho0 > 0.0 && c.coef_a < 0.0;
    result(
        "constants",
        ok,
        format!(
            "theta = {}, theta0 = {}, rho = {}, rho0 = {}, coef_a = {}",
            c.theta, c.theta0, c.rho, c.rho0, c.coef_a
        ),
    )
}

fn identities(model: &Model, engine: &PathEngine) -> Vec<CheckResult> {
    let mut rng = engine.rng(&[stream::CHECK, 0]);
    let (mut round_trip, mut value_gap, mut obstacle): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..10_000 {
        let x = (rng.random::<f64>() * 6.0 - 3.0).exp();
        let p = (rng.random::<f64>() * 4.0 - 2.0).exp();
        let pi = rng.random_range(0.001..0.999);
        let tp = model.to_z(x, pi);
        let (x2, _) = model.to_xpi(&tp);
        round_trip = round_trip.max((x2 - x).abs() / x);
        let sp = StatePoint { x, p, pi };
        let g = model.reward_g(x, pi);
        let scale = 1.0 + g.abs();
        value_gap = value_gap.max((model.value_never(&sp) - model.value_now(&sp) - g).abs() / scale);
        obstacle = obstacle.max((model.obstacle_f(&tp) - g).abs() / scale);
    }
    vec![
        result(
            "transform round trip",
            round_trip < 1e-12,
            format!("max relative error {round_trip:e}"),
        ),
        result(
            "value identity",
            value_gap < 1e-12,
            format!("max |V_inf - V_0 - G| / (1 + |G|) = {value_gap:e}"),
        ),
        result(
            "obstacle identity",
            obstacle < 1e-10,
            format!("max |F(T(x, pi)) - G| / (1 + |G|) = {obstacle:e}"),
        ),
    ]
}

fn q_and_m(model: &Model) -> Vec<CheckResult> {
    let ri = model.params().r * model.params().i_cost;
    let zs: Vec<f64> = (0..=56).map(|i| -8.0 + 0.25 * i as f64).collect();
    let near_zero = zs
        .iter()
        .map(|&z| (model.q_fn(z, 1e-60) - ri).abs())
        .fold(0.0, f64::max);
    let pis: Vec<f64> = (1..200).map(|i| i as f64 / 200.0).collect();
    let decreasing = zs.iter().all(|&z| {
        pis.windows(2)
            .all(|w| model.q_fn(z, w[1]) < model.q_fn(z, w[0]))
    });
    let m: Vec<f64> = zs.iter().map(|&z| model.m_fn(z)).collect();
    let m_monotone = m.windows(2).all(|w| w[0] <= w[1]);
    let m_inside = m.iter().all(|&v| v > 0.0 && v < 1.0);
    vec![
        result(
            "q(z, 0+) = rI",
            near_zero < 1e-9,
            format!("max deviation {near_zero:e}"),
        ),
        result("q decreasing in pi", decreasing, "199-point belief grid, 57 z values".into()),
        result(
            "m nondecreasing",
            m_monotone && m_inside,
            format!("m(-8) = {}, m(0) = {}, m(6) = {}", m[0], m[32], m[56]),
        ),
    ]
}

/// Mean of `Pi_T` against `pi0`, and positivity of `X_T`, over `n` paths.
fn martingale(engine: &PathEngine, pi0: f64, t: f64, n: usize) -> Result<CheckResult, ModelError> {
    let start = PathState::start(0.0, pi0)?;
    let ends: Vec<(f64, f64)> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = engine.rng(&[stream::CHECK, 1, i]);
            let s = engine.advance(start, t, &mut rng);
            (s.pi(), engine.x_from_state(&s))
        })
        .collect();
    let inside = ends.iter().all(|&(p, x)| p > 0.0 && p < 1.0 && x > 0.0);
    let mean = ends.iter().map(|e| e.0).sum::<f64>() / n as f64;
    let var = ends.iter().map(|e| (e.0 - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let se = (var / n as f64).sqrt();
    Ok(result(
        "belief martingale",
        inside && (mean - pi0).abs() <= 3.0 * se,
        format!("pi0 = {pi0}, T = {t}: mean {mean:.5} (se {se:.5})"),
    ))
}

/// Runs every check. `n_paths` controls the martingale check only.
pub fn run_checks(model: &Model, seed: u64, n_paths: usize) -> Result<Vec<CheckResult>, ModelError> {
    let engine = PathEngine::new(
        *model,
        SimConfig {
            seed,
            ..Default::default()
        },
    )?;
    let mut out = vec![constants(model)];
    out.extend(identities(model, &engine));
    out.extend(q_and_m(model));
    out.push(martingale(&engine, 0.5, 5.0, n_paths.max(2))?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ModelParams;

    #[test]
    fn defaults_pass() {
        let model = Model::new(ModelParams::default()).unwrap();
        let res = run_checks(&model, 1, 2000).unwrap();
        assert_eq!(res.len(), 8);
        for r in &res {
            assert!(r.passed, "{r:?}");
        }
    }
}
