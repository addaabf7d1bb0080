//! A small self-contained project directory for driving the CLI.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const VOCABULARY: &[&str] = &[
    "rolling", "toy", "wheel", "gear", "spring", "ball", "light", "sound", "car", "robot", "puzzle", "block",
    "magnet", "kite", "drone", "track", "ramp", "bubble", "music", "launcher", "foam", "rubber", "plastic", "wooden",
    "remote", "control", "sensor", "battery", "motor", "spinning", "glowing", "bouncing", "folding", "modular",
    "educational", "water", "sand", "air", "gun", "balloon", "train", "rocket", "animal", "shape", "color", "pattern",
    "crank", "pulley",
];

pub const EPOCH: &str = "1700000000";

/// 2-D vectors on a few rings, so cosines and distances vary.
pub fn vectors_text() -> String {
    let mut out = format!("{} 2\n", VOCABULARY.len());
    for (k, w) in VOCABULARY.iter().enumerate() {
        let angle = k as f64 * 2.399_963;
        let radius = 1.0 + (k % 3) as f64 * 0.5;
        writeln!(out, "{w} {:.6} {:.6}", radius * angle.cos(), radius * angle.sin()).unwrap();
    }
    out
}

/// Dated titles of 3 to 7 words, plus one malformed line.
pub fn titles_jsonl(count: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    for k in 0..count {
        let len = rng.gen_range(3..=7);
        let words: Vec<&str> = VOCABULARY.choose_multiple(&mut rng, len).copied().collect();
        let mut title = words.join(" ");
        title[..1].make_ascii_uppercase();
        let day = 1 + k % 28;
        let month = 1 + (k / 28) % 12;
        writeln!(out, r#"{{"id": {k}, "text": "{title}", "date": "2021-{month:02}-{day:02}"}}"#).unwrap();
        if k == count / 2 {
            out.push_str("{\"id\": \"broken\"\n");
        }
    }
    out
}

pub struct Project {
    pub root: PathBuf,
}

impl Project {
    /// Write fixtures and a config into `root`.
    pub fn create(root: &Path, n_total: usize, extra_config: &str) -> Self {
        std::fs::create_dir_all(root.join("refs")).unwrap();
        std::fs::write(root.join("vectors.txt"), vectors_text()).unwrap();
        std::fs::write(root.join("technet-fixture.txt"), vectors_text()).unwrap();
        std::fs::write(root.join("titles.jsonl"), titles_jsonl(90, 11)).unwrap();
        std::fs::write(
            root.join("refs/launcher.txt"),
            "A rolling toy with a spring launcher that fires a foam ball.",
        )
        .unwrap();
        std::fs::write(root.join("refs/drone.txt"), "Remote control drone with a light sensor and a battery motor.").unwrap();
        let config = format!(
            r#"seed = 7
n_total = {n_total}
work_dir = "run"

[task]
kind = "domain_synthesis"
target_domain = "rolling toy"

[backend]
mock = true
max_concurrent = 4

[corpus]
input = "titles.jsonl"
take_latest = 60

[evaluation]
embeddings = "vectors.txt"
relevancy_embeddings = "technet-fixture.txt"

[evaluation.references]
launcher = "refs/launcher.txt"
drone = "refs/drone.txt"
{extra_config}"#
        );
        std::fs::write(root.join("config.toml"), config).unwrap();
        Project { root: root.to_path_buf() }
    }

    pub fn config(&self) -> PathBuf {
        self.root.join("config.toml")
    }

    pub fn run_dir(&self) -> PathBuf {
        self.root.join("run")
    }

    /// Run a subcommand with `--config` and a pinned clock.
    pub fn cli(&self, subcommand: &str, extra: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_ideaforge"))
            .arg(subcommand)
            .arg("--config")
            .arg(self.config())
            .args(extra)
            .env("SOURCE_DATE_EPOCH", EPOCH)
            .env("RUST_LOG", "warn")
            .output()
            .unwrap()
    }

    pub fn run_all(&self) -> Result<(), String> {
        for sub in ["prepare", "generate", "evaluate", "report"] {
            let out = self.cli(sub, &[]);
            if !out.status.success() {
                return Err(format!("{sub} failed: {}", String::from_utf8_lossy(&out.stderr)));
            }
        }
        Ok(())
    }
}

/// Every file under `dir`, relative path and bytes, sorted.
pub fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push((path.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}
