use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swarm-mill")).args(args).output().unwrap()
}

fn write_config(dir: &Path) -> String {
    let path = dir.join("cfg.toml");
    std::fs::write(
        &path,
        "horizon = 120\nwindow = 30\npopulation_size = 8\nn_epochs = 2\nsweep_size = 5\nframe_every = 40\n",
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn full_pipeline_on_small_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    for sub in ["evolve-symbolic", "evolve-snn"] {
        let o = cli(&[sub, "-c", &cfg, "-s", "1,2", "-w", "2", "-o", out]);
        assert!(o.status.success(), "{sub}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(Path::new(out).join("seed_2/stats.csv").exists());
    }
    let best = Path::new(out).join("seed_1/best.json");
    let best = best.to_str().unwrap();
    for args in [
        vec!["simulate", "-c", &cfg, "-s", "0,7", best],
        vec!["replay", "-c", &cfg, "-o", out, best],
        vec!["sweep", "-c", &cfg, "-o", out, best],
        vec!["validate-net", best],
    ] {
        let o = cli(&args);
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let frames = std::fs::read_dir(Path::new(out).join("replay_seed_0/frames")).unwrap().count();
    assert_eq!(frames, 3);
    assert!(Path::new(out).join("sweep.csv").exists());
}

#[test]
fn failures_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"version":1,"neurons":[],"synapses":[],"io":{"inputs":[],"outputs":[]}}"#).unwrap();
    assert!(!cli(&["validate-net", bad.to_str().unwrap()]).status.success());
    assert!(!cli(&["validate-net", "/nonexistent.json"]).status.success());
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "window = 0\n").unwrap();
    assert!(!cli(&["evolve-symbolic", "-c", cfg.to_str().unwrap()]).status.success());
    assert!(!cli(&["no-such-command"]).status.success());
}
