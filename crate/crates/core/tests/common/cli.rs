//! Drives the `wser` binary on tiny configurations.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const TINY_CENTRAL: &str = r#"
mode = "central_wser"

[dataset]
schemes = ["BPSK", "QPSK", "GFSK"]
snr_grid_db = [0.0, 10.0]
frames_per_scheme_per_snr = 12
frame_len = 32
train_per_cell = 9

[dataset.channel]
impairment_level = "offsets"
f_err = 0.005
theta_err = 3.141592653589793
zeta_err = 0.5

[model]
lambda = 0.3

[model.enhancer]
width = 4
depth_blocks = 1
frame_len = 32

[model.recognizer]
channels = [4, 8]
strides = [1, 2]
num_classes = 3
frame_len = 32

[optimizer]
lr = 0.02
batch_size = 8

[central]
epochs = 2
eval_train = true

[seeds]
dataset = 1
model = 2
partition = 3
selection = 4
"#;

pub const TINY_FED: &str = r#"
mode = "fed"

[dataset]
schemes = ["BPSK", "QPSK", "GFSK"]
snr_grid_db = [0.0, 10.0]
frames_per_scheme_per_snr = 12
frame_len = 32
train_per_cell = 9

[model.recognizer]
channels = [4, 8]
strides = [1, 2]
num_classes = 3
frame_len = 32

[optimizer]
lr = 0.02
batch_size = 8

[fed]
algorithm = "FedProxPlus"
num_clients = 4
clients_per_round = 2
rounds = 2
local_epochs = 1
partition = "noniid_label_shard"
classes_per_client = 2
mu = 0.01

[seeds]
dataset = 1
model = 2
partition = 3
selection = 4
"#;

pub fn wser(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wser")).args(args).output().expect("run wser")
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// Writes both tiny configs under `root` and returns their paths.
pub fn write_configs(root: &Path) -> (PathBuf, PathBuf) {
    let central = root.join("central.toml");
    let fed = root.join("fed.toml");
    std::fs::write(&central, TINY_CENTRAL).unwrap();
    std::fs::write(&fed, TINY_FED).unwrap();
    (central, fed)
}

/// Runs every command into `out`; panics with stderr if one fails.
pub fn run_all(central: &Path, fed: &Path, out: &Path) {
    let o = path_str(out);
    let data = out.join("data");
    let steps: Vec<Vec<&str>> = vec![
        vec!["gen-data", "--config", path_str(central), "--out", path_str(&data)],
        vec!["train-central", "--config", path_str(central), "--out", o],
        vec!["train-fed", "--config", path_str(fed), "--out", o, "--max-parallel", "2"],
    ];
    let fed_data = out.join("data").join("dataset.fwsr");
    let central_ckpt = out.join("central").join("model.fwsp");
    for args in steps {
        let r = wser(&args);
        assert!(r.status.success(), "{args:?}: {}", String::from_utf8_lossy(&r.stderr));
        if args[0] == "train-central" {
            std::fs::create_dir_all(out.join("central")).unwrap();
            for f in ["model.fwsp", "central_metrics.csv"] {
                std::fs::rename(out.join(f), out.join("central").join(f)).unwrap();
            }
        }
    }
    let eval_out = out.join("eval");
    let r = wser(&[
        "evaluate",
        "--config",
        path_str(central),
        "--out",
        path_str(&eval_out),
        "--checkpoint",
        path_str(&central_ckpt),
        "--confusion-snr",
        "10",
    ]);
    assert!(r.status.success(), "evaluate: {}", String::from_utf8_lossy(&r.stderr));
    let r = wser(&["train-fed", "--config", path_str(fed), "--out", path_str(&out.join("fed_file")), "--data", path_str(&fed_data)]);
    assert!(r.status.success(), "train-fed --data: {}", String::from_utf8_lossy(&r.stderr));
}

fn files(dir: &Path, base: &Path, acc: &mut Vec<PathBuf>) {
    let mut entries: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    entries.sort();
    for p in entries {
        if p.is_dir() {
            files(&p, base, acc);
        } else {
            acc.push(p.strip_prefix(base).unwrap().to_path_buf());
        }
    }
}

/// Runs every command twice from scratch and compares the outputs byte by
/// byte. Returns `(relative path, identical)` for every file produced.
pub fn determinism_report(root: &Path) -> Vec<(String, bool)> {
    let (central, fed) = write_configs(root);
    let (a, b) = (root.join("a"), root.join("b"));
    run_all(&central, &fed, &a);
    run_all(&central, &fed, &b);
    let mut fa = Vec::new();
    files(&a, &a, &mut fa);
    let mut fb = Vec::new();
    files(&b, &b, &mut fb);
    assert_eq!(fa, fb, "runs produced different file sets");
    fa.into_iter()
        .map(|rel| {
            let same = std::fs::read(a.join(&rel)).unwrap() == std::fs::read(b.join(&rel)).unwrap();
            (rel.display().to_string(), same)
        })
        .collect()
}
