use std::fs;
use std::path::Path;

use pollstop::output::{
    read_boundary, write_boundary, write_run_meta, write_stats, write_surface, write_sweep,
    write_sweep_boundaries, RunMeta, BOUNDARY_HEADER, RUN_META_FILE, STATS_HEADER, SURFACE_HEADER,
    SWEEP_BOUNDARY_HEADER, SWEEP_HEADER,
};
use pollstop::solver::residual_profile;
use pollstop::sweep::sweep;
use pollstop::{
    parse_config, simulate_policy, solve_boundary, value_surface, Model, ModelParams, PathEngine,
    RunConfig, SimConfig, SolverConfig, StatePoint,
};

fn small_solver() -> SolverConfig {
    SolverConfig { n_z: 15, n_paths_op: 1000, max_iter: 20, averaging_sweeps: 2, ..Default::default() }
}

fn small_sim() -> SimConfig {
    SimConfig { n_paths: 200, horizon: 20.0, ..Default::default() }
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn boundary_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let model = Model::new(ModelParams::default()).unwrap();
    let b = solve_boundary(&model, &small_solver(), &small_sim()).unwrap();
    let engine = PathEngine::new(model, small_sim()).unwrap();
    let res = residual_profile(&b, &engine, 500, 1, Default::default());
    let path = dir.path().join("boundary.csv");
    write_boundary(&path, &b, Some(&res)).unwrap();
    assert_eq!(header(&path), BOUNDARY_HEADER.join(","));
    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 16);
    assert!(text.ends_with('\n') && !text.contains('\r'));

    let back = read_boundary(&path).unwrap();
    assert_eq!(back.grid().n, 15);
    for (a, b) in back.c_values().iter().zip(b.c_values()) {
        assert!((a - b).abs() <= 1e-9 * b.abs().max(1e-300));
    }
    // a second write of the read-back boundary is byte-identical
    let again = dir.path().join("again.csv");
    write_boundary(&again, &back, Some(&res)).unwrap();
    assert_eq!(fs::read(&path).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn boundary_without_residuals_leaves_cells_empty() {
    let dir = tempfile::tempdir().unwrap();
    let model = Model::new(ModelParams::default()).unwrap();
    let b = solve_boundary(&model, &small_solver(), &small_sim()).unwrap();
    let path = dir.path().join("b.csv");
    write_boundary(&path, &b, None).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.lines().skip(1).all(|l| l.ends_with(",,")));
    assert!(read_boundary(&path).is_ok());
}

#[test]
fn malformed_boundary_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let bad_header = dir.path().join("h.csv");
    fs::write(&bad_header, "a,b,c\n1,2,3\n").unwrap();
    assert!(read_boundary(&bad_header).is_err());
    let uneven = dir.path().join("u.csv");
    fs::write(&uneven, "z,m,c,residual,residual_se\n0,0.1,0.2,,\n1,0.2,0.3,,\n3,0.3,0.4,,\n").unwrap();
    assert!(read_boundary(&uneven).is_err());
    assert!(read_boundary(&dir.path().join("missing.csv")).is_err());
}

#[test]
fn sweep_and_surface_files() {
    let dir = tempfile::tempdir().unwrap();
    let sp = StatePoint::new(1.0, 0.5, 0.5).unwrap();
    let rows = sweep(
        "delta",
        &[0.1, -1.0, 0.3],
        &ModelParams::default(),
        &sp,
        &small_solver(),
        &small_sim(),
    )
    .unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows[1].error.is_some());

    let path = dir.path().join("sweep.csv");
    write_sweep(&path, &rows).unwrap();
    assert_eq!(header(&path), SWEEP_HEADER.join(","));
    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().nth(1).unwrap().starts_with("delta,0.1,"));

    let path = dir.path().join("sweep_boundaries.csv");
    write_sweep_boundaries(&path, &rows).unwrap();
    assert_eq!(header(&path), SWEEP_BOUNDARY_HEADER.join(","));
    assert_eq!(fs::read_to_string(&path).unwrap().lines().count(), 1 + 2 * 15);

    let model = Model::new(ModelParams::default()).unwrap();
    let b = solve_boundary(&model, &small_solver(), &small_sim()).unwrap();
    let engine = PathEngine::new(model, small_sim()).unwrap();
    let surf = value_surface(&b, &[0.5, 1.0], 1.0, &[0.3, 0.7], &engine).unwrap();
    let path = dir.path().join("value_surface.csv");
    write_surface(&path, &surf).unwrap();
    assert_eq!(header(&path), SURFACE_HEADER.join(","));
    assert_eq!(fs::read_to_string(&path).unwrap().lines().count(), 5);

    let stats = simulate_policy(&b, &sp, &engine).unwrap();
    let path = dir.path().join("stats.csv");
    write_stats(&path, &sp, &stats).unwrap();
    assert_eq!(header(&path), STATS_HEADER.join(","));
    let line = fs::read_to_string(&path).unwrap().lines().nth(1).unwrap().to_string();
    assert_eq!(line.split(',').count(), STATS_HEADER.len());
    assert!(line.starts_with("1,0.5,0.5,"));
}

#[test]
fn unknown_sweep_parameter_is_an_error() {
    let sp = StatePoint::default();
    assert!(sweep("gamma", &[1.0], &ModelParams::default(), &sp, &small_solver(), &small_sim()).is_err());
}

#[test]
fn identical_config_gives_identical_bytes() {
    let run = |dir: &Path| {
        let model = Model::new(ModelParams::default()).unwrap();
        let b = solve_boundary(&model, &small_solver(), &small_sim()).unwrap();
        let engine = PathEngine::new(model, small_sim()).unwrap();
        let res = residual_profile(&b, &engine, 300, 1, Default::default());
        write_boundary(&dir.join("boundary.csv"), &b, Some(&res)).unwrap();
        let st = simulate_policy(&b, &StatePoint::default(), &engine).unwrap();
        write_stats(&dir.join("stats.csv"), &StatePoint::default(), &st).unwrap();
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run(a.path());
    run(b.path());
    for f in ["boundary.csv", "stats.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn run_meta_embeds_a_loadable_config() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::default();
    cfg.model.delta = 0.3;
    cfg.set_seed(11);
    let mut meta = RunMeta::new("solve", &cfg);
    meta.files.push("boundary.csv".into());
    let path = write_run_meta(dir.path(), &meta).unwrap();
    assert_eq!(path, dir.path().join(RUN_META_FILE));

    let value: toml::Table = fs::read_to_string(&path).unwrap().parse().unwrap();
    assert_eq!(value["command"].as_str(), Some("solve"));
    let embedded = toml::to_string(&value["config"]).unwrap();
    let back = parse_config(&embedded).unwrap();
    assert_eq!(back, cfg);
}

fn toml_block(doc: &str) -> &str {
    let start = doc.find("```toml\n").unwrap() + "```toml\n".len();
    let body = &doc[start..];
    &body[..body.find("```").unwrap()]
}

#[test]
fn readme_config_lists_the_defaults() {
    let mut cfg = parse_config(toml_block(include_str!("../../../README.md"))).unwrap();
    assert!(cfg.sweep.take().is_some());
    assert_eq!(cfg, RunConfig::default());
}

#[test]
fn guide_config_example_parses() {
    let cfg = parse_config(toml_block(include_str!("../../../book/src/cli.md"))).unwrap();
    assert_eq!(cfg.model.sigma, 0.25);
    assert_eq!(cfg.sweep.unwrap().values, vec![0.1, 0.2, 0.3]);
}
