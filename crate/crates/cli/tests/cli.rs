//! The `vhfplan` binary end to end on small synthetic towns.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const QUICK: [&str; 4] = ["--cls-grid", "5:5:-4:-4", "--reg-grid", "6:6:-5:-5"];

fn vhfplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vhfplan"))
        .args(args)
        .env_remove("VHFPLAN_WORKERS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = vhfplan(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}\n{}",
        String::from_utf8_lossy(&out.stderr),
        String::from_utf8_lossy(&out.stdout)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Exit code and the `error.kind` printed on stderr.
fn failure(args: &[&str]) -> (i32, String) {
    let out = vhfplan(args);
    assert!(!out.status.success(), "{args:?} succeeded");
    let stderr = String::from_utf8_lossy(&out.stderr);
    let v: Value = serde_json::from_str(stderr.trim()).unwrap_or_else(|e| panic!("{e}: {stderr}"));
    assert!(v["error"]["message"].as_str().is_some_and(|m| !m.is_empty()));
    (out.status.code().unwrap(), v["error"]["kind"].as_str().unwrap().to_string())
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_slice(&std::fs::read(path.as_ref()).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Town {
    dir: PathBuf,
    tx: String,
}

impl Town {
    fn map(&self) -> String {
        self.dir.join("map.json").display().to_string()
    }

    fn measurements(&self) -> String {
        self.dir.join("measurements.csv").display().to_string()
    }
}

fn synth(root: &Path, name: &str, area: &str, origin: &str, seed: &str) -> Town {
    let dir = root.join(name);
    ok(&["synth", "--area", area, "--seed", seed, "--origin", origin, "--measurements", "300", "--blocks", "4", "--out", s(&dir)]);
    let town = json(dir.join("town.json"));
    Town { tx: town["tx"].as_str().unwrap().to_string(), dir }
}

fn pm1(town: &Town, out: &Path, extra: &[&str]) -> String {
    let (map, m) = (town.map(), town.measurements());
    let mut args = vec![
        "pm1", "--map", &map, "--measurements", &m, "--tx", &town.tx, "--area", "alpha/centre", "--seed", "7",
        "--out", s(out),
    ];
    args.extend(QUICK);
    args.extend(extra);
    ok(&args)
}

#[test]
fn synth_writes_a_town_with_a_manifest() {
    let root = TempDir::new().unwrap();
    let town = synth(root.path(), "a", "alpha/centre", "44.49,11.34", "3");
    let doc = json(town.dir.join("town.json"));
    assert_eq!(doc["measurements"], 300);
    assert_eq!(doc["provenance"]["command"], "synth");
    assert_eq!(doc["provenance"]["seed"], 3);
    let manifest = json(town.dir.join("manifest.json"));
    assert_eq!(manifest["format"], "vhfplan-manifest v1");
    assert_eq!(manifest["config_hash"], doc["provenance"]["config_hash"]);
    let outputs: Vec<&str> = manifest["outputs"].as_array().unwrap().iter().map(|o| o["path"].as_str().unwrap()).collect();
    assert_eq!(outputs, ["map.json", "measurements.csv", "town.json"]);

    let out = ok(&["validate", "--map", &town.map(), "--measurements", &town.measurements()]);
    assert!(out.contains("300 rows"), "{out}");
}

#[test]
fn pm1_reports_accuracy_and_rmse_and_reruns_byte_for_byte() {
    let root = TempDir::new().unwrap();
    let town = synth(root.path(), "a", "alpha/centre", "44.49,11.34", "3");
    let first = root.path().join("run1");
    let summary = pm1(&town, &first, &[]);
    assert!(summary.contains("PM1 alpha/centre: A "), "{summary}");

    let report = json(first.join("report.json"));
    assert!(report["report"]["accuracy"].as_f64().is_some());
    assert!(report["report"]["rmse"].as_f64().is_some());
    assert_eq!(report["provenance"]["command"], "pm1");
    assert_eq!(report["provenance"]["seed"], 7);
    let table = std::fs::read_to_string(first.join("report.md")).unwrap();
    assert!(table.starts_with("<!-- command: pm1 -->\n"));
    assert!(table.contains("| alpha/centre | 1 | "), "{table}");

    let manifest = json(first.join("manifest.json"));
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["model_checksum"], report["model_checksum"]);
    assert_eq!(manifest["inputs"].as_array().unwrap().len(), 2);
    assert!(manifest["config"].get("out").is_none());

    // same flags into another directory, then a replay of the manifest
    let second = root.path().join("run2");
    pm1(&town, &second, &[]);
    let third = root.path().join("run3");
    ok(&["rerun", s(&first.join("manifest.json")), "--out", s(&third)]);
    for name in ["report.json", "report.md", "pm1.model"] {
        let a = std::fs::read(first.join(name)).unwrap();
        assert_eq!(a, std::fs::read(second.join(name)).unwrap(), "{name}");
        assert_eq!(a, std::fs::read(third.join(name)).unwrap(), "{name}");
    }

    // a different seed is a different configuration
    let other = root.path().join("run4");
    pm1(&town, &other, &["--seed", "8"]);
    assert_ne!(json(other.join("manifest.json"))["config_hash"], manifest["config_hash"]);
}

#[test]
fn worker_count_does_not_change_reports() {
    let root = TempDir::new().unwrap();
    let town = synth(root.path(), "a", "alpha/centre", "44.49,11.34", "3");
    let one = root.path().join("one");
    pm1(&town, &one, &["--workers", "1"]);
    let two = root.path().join("two");
    let out = Command::new(env!("CARGO_BIN_EXE_vhfplan"))
        .args(["pm1", "--map", &town.map(), "--measurements", &town.measurements(), "--tx", &town.tx])
        .args(["--area", "alpha/centre", "--seed", "7", "--out", s(&two)])
        .args(QUICK)
        .env("VHFPLAN_WORKERS", "2")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(one.join("manifest.json"))["workers"], 1);
    assert_eq!(json(two.join("manifest.json"))["workers"], 2);
    assert_eq!(std::fs::read(one.join("report.json")).unwrap(), std::fs::read(two.join("report.json")).unwrap());
    assert_eq!(failure(&["--workers", "0", "validate", "--map", &town.map()]), (2, "UsageError".into()));
}

#[test]
fn pm2_needs_a_model() {
    let root = TempDir::new().unwrap();
    let town = synth(root.path(), "a", "alpha/centre", "44.49,11.34", "3");
    let (code, kind) = failure(&[
        "pm2", "--map", &town.map(), "--concentrator", "44.49,11.34,30,21", "--corner-a", "44.489,11.339",
        "--corner-b", "44.491,11.341", "--out", s(&root.path().join("p")),
    ]);
    assert_eq!((code, kind.as_str()), (2, "UsageError"));
}

#[test]
fn pm2_raster_exports_to_images_and_outlines() {
    let root = TempDir::new().unwrap();
    let town = synth(root.path(), "a", "alpha/centre", "44.49,11.34", "3");
    let trained = root.path().join("trained");
    pm1(&town, &trained, &[]);
    let model = trained.join("pm1.model");
    let tx: Vec<&str> = town.tx.split(',').collect();
    let conc = format!("{},{},{},27,roof", tx[0], tx[1], tx[2]);
    let pred = root.path().join("pm2");
    let summary = ok(&[
        "pm2", "--map", &town.map(), "--model", s(&model), "--concentrator", &conc, "--concentrator",
        "44.4905,11.3405,20,21", "--corner-a", "44.4995,11.3295", "--corner-b", "44.4895,11.3395", "--step", "40",
        "--out", s(&pred),
    ]);
    assert!(summary.contains("roof: "), "{summary}");
    let raster = json(pred.join("raster.json"));
    assert_eq!(raster["provenance"]["command"], "pm2");
    assert_eq!(raster["concentrators"][0]["label"], "roof");
    assert_eq!(raster["concentrators"][1]["label"], "C2");
    assert_eq!(raster["concentrators"][0]["power_delta"], 6.0);
    let nodes = raster["lattice"]["columns"].as_u64().unwrap() * raster["lattice"]["rows"].as_u64().unwrap();
    assert_eq!(raster["merged_rss"].as_array().unwrap().len() as u64, nodes);
    let manifest = json(pred.join("manifest.json"));
    assert_eq!(manifest["model_checksum"], json(trained.join("report.json"))["model_checksum"]);

    let exported = root.path().join("export");
    ok(&["export", "--raster", s(&pred.join("raster.json")), "--map", &town.map(), "--out", s(&exported)]);
    for layer in ["merged", "best-server", "concentrator-0", "concentrator-1"] {
        let png = std::fs::read(exported.join(format!("{layer}.png"))).unwrap();
        assert_eq!(&png[1..4], b"PNG");
        let sidecar = std::fs::read_to_string(exported.join(format!("{layer}.txt"))).unwrap();
        assert!(sidecar.contains(&format!("layer: {layer}\n")), "{sidecar}");
        assert!(sidecar.contains("command: export\n"));
        assert!(sidecar.contains(&format!("columns: {}\n", raster["lattice"]["columns"])));
    }
    let outline = json(exported.join("coverage.geojson"));
    assert_eq!(outline["type"], "FeatureCollection");
    assert_eq!(outline["provenance"]["command"], "export");

    let only = root.path().join("only");
    ok(&["export", "--raster", s(&pred.join("raster.json")), "--map", &town.map(), "--layer", "best-server", "--out", s(&only)]);
    assert!(only.join("best-server.png").exists());
    assert!(!only.join("merged.png").exists());
    let (code, _) = failure(&["export", "--raster", s(&pred.join("raster.json")), "--map", &town.map(), "--layer", "concentrator-5", "--out", s(&only)]);
    assert_eq!(code, 1);
}

#[test]
fn blind_training_and_pm3_respect_area_tags() {
    let root = TempDir::new().unwrap();
    let a = synth(root.path(), "a", "alpha/centre", "44.49,11.34", "3");
    let b = synth(root.path(), "b", "bravo/centre", "45.07,7.68", "4");
    std::fs::write(
        root.path().join("donors.toml"),
        format!(
            "[[donor]]\narea = \"alpha/centre\"\nmap = \"a/map.json\"\nmeasurements = \"a/measurements.csv\"\ntx = \"{}\"\n",
            a.tx
        ),
    )
    .unwrap();
    let blind = root.path().join("blind");
    let summary = ok(&[
        "train", "--donors", s(&root.path().join("donors.toml")), "--seed", "11", "--cls-grid", "4:5:-5:-4",
        "--reg-grid", "5:6:-6:-5", "--out", s(&blind),
    ]);
    assert!(summary.contains("classifier C=2^"), "{summary}");
    let training = json(blind.join("training.json"));
    assert_eq!(training["training_areas"], serde_json::json!(["alpha/centre"]));
    assert_eq!(training["tuning"]["classification"]["strategy"], "bounded");
    let model = blind.join("blind.model");

    let pm3 = |town: &Town, area: &str, variant: &str, out: &str| {
        vec![
            "pm3".to_string(), "--map".into(), town.map(), "--model".into(), s(&model).into(), "--measurements".into(),
            town.measurements(), "--tx".into(), town.tx.clone(), "--area".into(), area.into(), "--variant".into(),
            variant.into(), "--out".into(), s(&root.path().join(out)).into(),
        ]
    };
    let args = pm3(&b, "bravo/centre", "pm3", "pm3");
    let summary = ok(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert!(summary.starts_with("PM3 bravo/centre: A "), "{summary}");
    let report = json(root.path().join("pm3/report.json"));
    assert_eq!(report["mode"], "pm3");
    assert_eq!(report["report"]["regression_samples"].as_u64().unwrap() as usize, report["regression_ids"].as_array().unwrap().len());
    let table = std::fs::read_to_string(root.path().join("pm3/report.md")).unwrap();
    assert!(table.contains("| bravo/centre | 3 | "), "{table}");

    let args = pm3(&a, "alpha/north", "pm3", "leak");
    assert_eq!(failure(&args.iter().map(String::as_str).collect::<Vec<_>>()), (1, "LeakageError".into()));
    let args = pm3(&a, "alpha/north", "pm3prime", "prime");
    ok(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(json(root.path().join("prime/report.json"))["mode"], "pm3prime");

    let mut args = pm3(&b, "bravo/centre", "pm3", "hilly");
    args.extend(["--terrain".into(), "hilly".into()]);
    assert_eq!(failure(&args.iter().map(String::as_str).collect::<Vec<_>>()), (1, "TerrainClassMismatch".into()));
    assert_eq!(failure(&["validate", "--map", &b.map(), "--terrain", "hilly"]), (1, "NoTerrainData".into()));
}

#[test]
fn bad_inputs_fail_with_structured_errors() {
    let root = TempDir::new().unwrap();
    let town = synth(root.path(), "a", "alpha/centre", "44.49,11.34", "3");

    let csv = std::fs::read_to_string(town.measurements()).unwrap();
    let mut lines: Vec<String> = csv.lines().map(String::from).collect();
    let fields: Vec<&str> = lines[2].split(',').collect();
    let mut fields: Vec<String> = fields.iter().map(|f| f.to_string()).collect();
    *fields.last_mut().unwrap() = "-119.5".into();
    lines[2] = fields.join(",");
    let bad = root.path().join("bad.csv");
    std::fs::write(&bad, lines.join("\n") + "\n").unwrap();
    assert_eq!(failure(&["validate", "--map", &town.map(), "--measurements", s(&bad)]), (1, "RangeError".into()));

    assert_eq!(failure(&["validate", "--map", s(&root.path().join("missing.json"))]), (1, "IoError".into()));
    assert_eq!(failure(&["pm1", "--map", &town.map()]).0, 2);
    assert_eq!(failure(&["features", "--map", &town.map(), "--measurements", &town.measurements(), "--tx", "44.49,11.34", "--out", "x"]).0, 2);
    assert_eq!(failure(&["pm1", "--map", &town.map(), "--measurements", &town.measurements(), "--tx", &town.tx, "--tx-power", "22", "--out", "x"]).0, 2);
}

#[test]
fn commands_never_overwrite_their_inputs() {
    let root = TempDir::new().unwrap();
    let town = synth(root.path(), "a", "alpha/centre", "44.49,11.34", "3");
    let before: Vec<Vec<u8>> = ["map.json", "measurements.csv"].iter().map(|f| std::fs::read(town.dir.join(f)).unwrap()).collect();

    // measurements named like the dump, dumped into their own directory
    let decoy = town.dir.join("features.csv");
    std::fs::copy(town.measurements(), &decoy).unwrap();
    let (code, kind) = failure(&["features", "--map", &town.map(), "--measurements", s(&decoy), "--tx", &town.tx, "--out", s(&town.dir)]);
    assert_eq!((code, kind.as_str()), (2, "UsageError"));
    assert_eq!(std::fs::read(&decoy).unwrap(), std::fs::read(town.measurements()).unwrap());

    let dump = root.path().join("features");
    ok(&["features", "--map", &town.map(), "--measurements", &town.measurements(), "--tx", &town.tx, "--out", s(&dump)]);
    let text = std::fs::read_to_string(dump.join("features.csv")).unwrap();
    assert!(text.starts_with("id,lat,lon,d,phi,h_max,h_av,ptb,d_tx,d_rx,terrain_class\n"), "{text}");
    assert_eq!(text.lines().count(), 301);

    let after: Vec<Vec<u8>> = ["map.json", "measurements.csv"].iter().map(|f| std::fs::read(town.dir.join(f)).unwrap()).collect();
    assert_eq!(before, after);
}

#[test]
fn serve_answers_health_checks() {
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::{TcpListener, TcpStream};
    use std::process::Stdio;

    let root = TempDir::new().unwrap();
    let town = synth(root.path(), "a", "alpha/centre", "44.49,11.34", "3");
    let trained = root.path().join("trained");
    pm1(&town, &trained, &[]);
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let addr = format!("127.0.0.1:{port}");
    let mut child = Command::new(env!("CARGO_BIN_EXE_vhfplan"))
        .args(["serve", "--map", &town.map(), "--model", s(&trained.join("pm1.model")), "--addr", &addr])
        .args(["--out", s(&root.path().join("serve"))])
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut lines = BufReader::new(child.stdout.take().unwrap()).lines();
    let banner = lines.find(|l| l.as_ref().is_ok_and(|l| l.starts_with("serving "))).unwrap().unwrap();
    assert!(banner.ends_with(&addr), "{banner}");

    let mut reply = String::new();
    for _ in 0..50 {
        if let Ok(mut stream) = TcpStream::connect(&addr) {
            write!(stream, "GET /health HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n").unwrap();
            stream.read_to_string(&mut reply).unwrap();
            break;
        }
        std::thread::sleep(std::time::Duration::from_millis(100));
    }
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(reply.starts_with("HTTP/1.1 200"), "{reply}");
    assert!(reply.ends_with(r#"{"status":"ok"}"#), "{reply}");
    let manifest = json(root.path().join("serve/manifest.json"));
    assert_eq!(manifest["command"], "serve");
    assert_eq!(manifest["model_checksum"], json(trained.join("report.json"))["model_checksum"]);
}
