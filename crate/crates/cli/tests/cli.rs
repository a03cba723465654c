use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pebble_cli::{parse_config, EXIT_CONFIG, EXIT_OK, EXIT_PIPELINE};
use pebble_core::pipeline::{Dump, Mode};
use pebble_core::{write_image, RasterImage};

fn pebble(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pebble")).args(args).output().unwrap()
}

fn two_tone(dir: &Path) -> PathBuf {
    let p = dir.join("in.png");
    let img = RasterImage::from_fn(64, 64, |x, _| if x < 32 { [0.1, 0.2, 0.6] } else { [0.9, 0.7, 0.2] });
    write_image(&img, &p).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn defaults() {
    let dir = tempfile::tempdir().unwrap();
    let input = two_tone(dir.path());
    let (cfg, verbose) = parse_config(["pebble", "--input", s(&input), "--output", "o.png"]).unwrap();
    assert!(!verbose);
    assert_eq!(cfg.pebble_count, 2000);
    assert_eq!((cfg.seed, cfg.scale, cfg.l), (0, 1.0, 7));
    assert_eq!(
        (cfg.phi_a1, cfg.t_coh, cfg.t_dist, cfg.beta, cfg.compactness),
        (3.0, 0.5, 0.85, 2.0, 10.0)
    );
    assert_eq!(cfg.importance_factor, 4.0);
    assert_eq!(cfg.mode, Mode::Full);
    assert!(cfg.dumps.is_empty() && cfg.threads.is_none() && cfg.texture.is_none());
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let input = two_tone(dir.path());
    let conf = dir.path().join("job.conf");
    fs::write(
        &conf,
        format!(
            "# job\ninput = {}\noutput = out.png\npebbles = 2000\nbeta = 3\ndump = labels\n",
            s(&input)
        ),
    )
    .unwrap();
    let (cfg, _) = parse_config([
        "pebble",
        "--config",
        s(&conf),
        "--pebbles",
        "3000",
        "--dump",
        "stats,contours",
    ])
    .unwrap();
    assert_eq!(cfg.pebble_count, 3000);
    assert_eq!(cfg.beta, 3.0);
    assert_eq!(
        cfg.dumps.iter().copied().collect::<Vec<_>>(),
        vec![Dump::Contours, Dump::Stats]
    );
}

#[test]
fn even_l_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = two_tone(dir.path());
    let out = pebble(&[
        "--input",
        s(&input),
        "--output",
        s(&dir.path().join("o.png")),
        "--L",
        "8",
    ]);
    assert_eq!(out.status.code(), Some(EXIT_CONFIG));
    assert!(String::from_utf8_lossy(&out.stderr).contains("odd"));
    assert!(!dir.path().join("o.png").exists());
}

#[test]
fn missing_input_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = pebble(&[
        "--input",
        s(&dir.path().join("none.png")),
        "--output",
        s(&dir.path().join("o.png")),
    ]);
    assert_eq!(out.status.code(), Some(EXIT_CONFIG));
    assert!(String::from_utf8_lossy(&out.stderr).contains("none.png"));
    assert_eq!(pebble(&["--output", "o.png"]).status.code(), Some(EXIT_CONFIG));
    assert_eq!(pebble(&["--bogus"]).status.code(), Some(EXIT_CONFIG));
    assert_eq!(pebble(&["--help"]).status.code(), Some(EXIT_OK));
}

#[test]
fn pipeline_errors_leave_no_output() {
    let dir = tempfile::tempdir().unwrap();
    let input = two_tone(dir.path());
    let output = dir.path().join("o.png");

    let out = pebble(&["--input", s(&input), "--output", s(&output), "--pebbles", "5000"]);
    assert_eq!(out.status.code(), Some(EXIT_PIPELINE));
    assert!(!output.exists());

    // the image is written first, then the heightfield export fails
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = pebble(&[
        "--input",
        s(&input),
        "--output",
        s(&output),
        "--pebbles",
        "8",
        "--dump",
        "labels",
        "--export-heightfield",
        s(&blocker.join("h.png")),
    ]);
    assert_eq!(
        out.status.code(),
        Some(EXIT_PIPELINE),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let left: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert_eq!(left.len(), 2, "{left:?}");
}

#[test]
fn smoke_run_writes_output_and_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let input = two_tone(dir.path());
    let output = dir.path().join("mosaic.png");
    let out = pebble(&[
        "--input",
        s(&input),
        "--output",
        s(&output),
        "--pebbles",
        "8",
        "--seed",
        "1",
        "--dump",
        "labels,contours,heightfield,stats",
        "--light-dir",
        "-1,-1,2",
        "--verbose",
    ]);
    assert_eq!(
        out.status.code(),
        Some(EXIT_OK),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let img = pebble_core::load_image(&output).unwrap();
    assert_eq!((img.width(), img.height()), (64, 64));
    for suffix in [
        "labels.png",
        "clusters.csv",
        "contours.png",
        "height.png",
        "height.png.range",
        "solver.csv",
    ] {
        assert!(dir.path().join(format!("mosaic.{suffix}")).is_file(), "{suffix}");
    }
    let csv = fs::read_to_string(dir.path().join("mosaic.solver.csv")).unwrap();
    assert!(csv.lines().count() <= 9);
    assert!(String::from_utf8_lossy(&out.stderr).contains("solve"));
}
