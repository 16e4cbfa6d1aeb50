use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

struct Ws {
    dir: tempfile::TempDir,
}

impl Ws {
    fn new() -> Ws {
        Ws {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn lata(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_lata"))
            .args(args)
            .env("LATA_WORKSPACE", self.path("ws"))
            .current_dir(self.dir.path())
            .output()
            .unwrap()
    }

    fn json(&self, args: &[&str]) -> (i32, Value) {
        let mut full = vec!["--json"];
        full.extend_from_slice(args);
        let out = self.lata(&full);
        let v = serde_json::from_slice(&out.stdout)
            .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)));
        (out.status.code().unwrap(), v)
    }

    fn ok(&self, args: &[&str]) -> Value {
        let (code, v) = self.json(args);
        assert_eq!(code, 0, "{args:?}: {v}");
        v
    }

    fn prepared(&self) {
        std::fs::write(
            self.path("en.txt"),
            "The ship sailed north. Rain fell on the harbour!\n\nDr. Lee waved. Then he left.\n",
        )
        .unwrap();
        std::fs::write(
            self.path("ar.txt"),
            "أبحرت السفينة شمالا. هطل المطر على الميناء!\n\nلوّح الدكتور لي. ثم غادر.\n",
        )
        .unwrap();
        self.ok(&["init", "demo", "--src-lang", "en", "--tgt-lang", "ar"]);
        self.ok(&["import", "demo", "--role", "source", "--file", "en.txt"]);
        self.ok(&["import", "demo", "--role", "target", "--file", "ar.txt"]);
    }
}

fn members(path: &Path) -> Vec<(String, Vec<u8>)> {
    let mut archive = zip::ZipArchive::new(std::fs::File::open(path).unwrap()).unwrap();
    (0..archive.len())
        .map(|i| {
            let mut f = archive.by_index(i).unwrap();
            let mut buf = Vec::new();
            f.read_to_end(&mut buf).unwrap();
            (f.name().unwrap().to_string(), buf)
        })
        .collect()
}

fn write_zip(path: &Path, members: &[(String, Vec<u8>)]) {
    let mut zip = zip::ZipWriter::new(std::fs::File::create(path).unwrap());
    for (name, data) in members {
        zip.start_file(name.as_str(), zip::write::SimpleFileOptions::default()).unwrap();
        zip.write_all(data).unwrap();
    }
    zip.finish().unwrap();
}

#[test]
fn full_pipeline() {
    let ws = Ws::new();
    ws.prepared();
    let v = ws.ok(&["segment", "demo", "--rules"]);
    assert_eq!(v["sentences"]["source"], 4);
    assert_eq!(v["kind"], "batch");
    let v = ws.ok(&["align", "demo", "--level", "paragraph", "--baseline"]);
    assert_eq!(v["links"], 2);
    let v = ws.ok(&["align", "demo", "--level", "sentence", "--baseline"]);
    assert_eq!(v["links"], 4);
    ws.ok(&["techniques", "add", "demo", "--name", "Omission", "--desc", "content left out"]);
    let v = ws.ok(&["export", "demo", "--out", "out.zip"]);
    assert!(v["bytes"].as_u64().unwrap() > 0);

    let names: Vec<String> = members(&ws.path("out.zip")).into_iter().map(|m| m.0).collect();
    assert_eq!(names, ["source.xml", "target.xml", "alignment.xml"]);
    let alignment = String::from_utf8(members(&ws.path("out.zip"))[2].1.clone()).unwrap();
    assert!(alignment.contains(r#"<technique name="Omission">"#));

    let (code, v) = ws.json(&["validate", "out.zip"]);
    assert_eq!((code, v["valid"].clone()), (0, Value::Bool(true)));
    let (code, _) = ws.json(&["validate", "demo"]);
    assert_eq!(code, 0);

    let v = ws.ok(&["undo", "demo"]);
    assert_eq!(v["kind"], "upsert_technique_def");
    ws.ok(&["redo", "demo"]);
    let v = ws.ok(&["list"]);
    assert_eq!(v["projects"][0]["name"], "demo");
    let v = ws.ok(&["techniques", "list", "demo"]);
    assert_eq!(v["techniques"][0]["name"], "Omission");
}

#[test]
fn corrupt_archives_fail_validation() {
    let ws = Ws::new();
    ws.prepared();
    ws.ok(&["export", "demo", "--out", "good.zip"]);
    let all = members(&ws.path("good.zip"));

    let without_target: Vec<_> = all.iter().filter(|m| m.0 != "target.xml").cloned().collect();
    write_zip(&ws.path("missing.zip"), &without_target);
    let out = ws.lata(&["validate", "missing.zip"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("missing [target.xml]"));

    let mut broken = all.clone();
    broken[2].1 = b"<cesAlign version=\"1.0\">\n  <linkList>\n".to_vec();
    write_zip(&ws.path("broken.zip"), &broken);
    let (code, v) = ws.json(&["validate", "broken.zip"]);
    assert_eq!(code, 1);
    assert_eq!(v["errors"][0]["code"], "malformed-xml");

    let bytes = std::fs::read(ws.path("good.zip")).unwrap();
    std::fs::write(ws.path("cut.zip"), &bytes[..bytes.len() / 2]).unwrap();
    assert_eq!(ws.lata(&["validate", "cut.zip"]).status.code(), Some(1));
}

#[test]
fn exit_codes() {
    let ws = Ws::new();
    let (code, v) = ws.json(&["segment", "nothing", "--rules"]);
    assert_eq!(code, 2);
    assert_eq!(v["error"]["code"], "not-found");
    assert_eq!(ws.lata(&["align", "x"]).status.code(), Some(2));
    assert_eq!(ws.lata(&["segment", "x", "--rules", "--llm"]).status.code(), Some(2));
    let (code, v) = ws.json(&["init", "bad", "--src-lang", "english!", "--tgt-lang", "ar"]);
    assert_eq!(code, 1);
    assert_eq!(v["error"]["code"], "invalid-language");
    ws.prepared();
    let (code, v) = ws.json(&["import", "demo", "--role", "source", "--file", "en.txt"]);
    assert_eq!((code, v["error"]["code"].clone()), (1, Value::from("document-exists")));
    let (code, _) = ws.json(&["import", "demo", "--role", "source", "--file", "absent.txt"]);
    assert_eq!(code, 3);
    let (code, v) = ws.json(&["undo", "demo"]);
    assert_eq!((code, v["error"]["code"].clone()), (1, Value::from("empty-undo-stack")));
}

#[test]
fn llm_without_provider_falls_back_with_warning() {
    let ws = Ws::new();
    ws.prepared();
    let out = ws.lata(&["segment", "demo", "--llm"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("provider.json"));

    std::fs::write(
        ws.path("ws/provider.json"),
        r#"{"endpoint_url":"http://127.0.0.1:9/v1/chat/completions","model_name":"m","timeout_seconds":2,"max_retries":0}"#,
    )
    .unwrap();
    let out = ws.lata(&["--json", "align", "demo", "--level", "sentence", "--llm"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["llm_fallbacks"], 2);
    assert_eq!(v["links"], 4);
    assert!(String::from_utf8_lossy(&out.stderr).contains("provider-unreachable"));
    let log = std::fs::read_to_string(ws.path("ws/llm-requests.log")).unwrap();
    assert!(!log.is_empty());
}
