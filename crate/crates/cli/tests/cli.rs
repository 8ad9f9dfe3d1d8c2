use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn invauth(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_invauth"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(o: &Output) -> Value {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).expect("JSON on stdout")
}

fn with_store<'a>(store: &'a Path, args: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec!["--store", store.to_str().unwrap()];
    v.extend_from_slice(args);
    v
}

#[test]
fn verify_example_passes() {
    let o = invauth(&["verify-example"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("PASS"));
    let v = json(&invauth(&["verify-example", "--json"]));
    assert_eq!(v["checks"], 8);
    assert_eq!(v["secret"], 1234);
}

#[test]
fn verify_example_failures_exit_one() {
    let o = invauth(&["verify-example", "--inject", "2:1943"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("F(0)"));
    let o = invauth(&["verify-example", "--p", "97"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn reconstruct_prints_secret() {
    let o = invauth(&["reconstruct", "--points", "2:1942,4:3402,5:4414"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "1234");
    let v = json(&invauth(&["reconstruct", "--points", "2:1942,4:3402,5:4414", "--json"]));
    assert_eq!(v["coeffs"], serde_json::json!([1234, 166, 94]));
}

#[test]
fn split_matches_table() {
    let o = invauth(&["split", "--secret", "1234", "--coeffs", "166,94", "--users", "6"]);
    assert_eq!(
        stdout(&o).lines().collect::<Vec<_>>(),
        ["1:1494", "2:1942", "3:2578", "4:3402", "5:4414", "6:5614"]
    );
    let o = invauth(&["split", "--secret", "5", "--coeffs", "3,2", "--users", "3", "--p", "97"]);
    assert_eq!(stdout(&o).lines().collect::<Vec<_>>(), ["1:10", "2:19", "3:32"]);
}

#[test]
fn usage_errors_exit_two() {
    let o = invauth(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert_eq!(invauth(&["reconstruct", "--points", "nonsense"]).status.code(), Some(2));
    assert_eq!(invauth(&[]).status.code(), Some(2));
    assert_eq!(invauth(&["--help"]).status.code(), Some(0));
}

#[test]
fn operation_errors_exit_one() {
    // Duplicate abscissae parse fine but fail the reconstruction.
    let o = invauth(&["reconstruct", "--points", "2:1,2:5,3:4", "--json"]);
    assert_eq!(o.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert!(err["error"].as_str().unwrap().contains("2"));
}

#[test]
fn encrypt_decrypt_files() {
    let dir = tempfile::tempdir().unwrap();
    let plain = dir.path().join("plain.txt");
    let sealed = dir.path().join("plain.ifsc");
    let back = dir.path().join("back.txt");
    std::fs::write(&plain, b"involution round trip").unwrap();
    for mode in ["additive", "power"] {
        let o = invauth(&[
            "encrypt",
            "--mode",
            mode,
            "--n",
            "3",
            "--key",
            "987654321",
            "--in",
            plain.to_str().unwrap(),
            "--out",
            sealed.to_str().unwrap(),
            "--json",
        ]);
        let v = json(&o);
        assert_eq!(v["plaintext_len"], 21);
        let o = invauth(&[
            "decrypt",
            "--mode",
            mode,
            "--n",
            "3",
            "--key",
            "987654321",
            "--in",
            sealed.to_str().unwrap(),
            "--out",
            back.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        assert_eq!(std::fs::read(&back).unwrap(), b"involution round trip");
    }
    // Power mode rejects a wrong exponent; Additive mode has no integrity check and yields garbage.
    let wrong = invauth(&[
        "decrypt",
        "--mode",
        "power",
        "--n",
        "2",
        "--key",
        "987654321",
        "--in",
        sealed.to_str().unwrap(),
    ]);
    assert_eq!(wrong.status.code(), Some(1));
    invauth(&[
        "encrypt",
        "--key",
        "987654321",
        "--in",
        plain.to_str().unwrap(),
        "--out",
        sealed.to_str().unwrap(),
    ]);
    let garbage = invauth(&["decrypt", "--key", "987654322", "--in", sealed.to_str().unwrap()]);
    assert!(garbage.status.success());
    assert_ne!(garbage.stdout, b"involution round trip");
}

#[test]
fn protocol_flow() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("store");
    let records = dir.path().join("records");
    let plain = dir.path().join("memo.txt");
    std::fs::write(&plain, b"CONFIDENTIAL-MEMO-SENTINEL body").unwrap();

    let reg = |user: &str, ty: &str| {
        let o = invauth(&with_store(
            &store,
            &[
                "register",
                "--user",
                user,
                "--type",
                ty,
                "--credentials",
                &format!("pw-{user}"),
            ],
        ));
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    };
    reg("alice", "owner");
    reg("bob", "consumer");
    reg("carol", "consumer");
    let dup = invauth(&with_store(
        &store,
        &["register", "--user", "bob", "--type", "consumer", "--credentials", "x"],
    ));
    assert_eq!(dup.status.code(), Some(1));

    let v = json(&invauth(&with_store(
        &store,
        &[
            "grant",
            "--file-id",
            "memo",
            "--owner",
            "alice",
            "--consumers",
            "bob,carol",
            "--in",
            plain.to_str().unwrap(),
            "--records-dir",
            records.to_str().unwrap(),
            "--json",
        ],
    )));
    let owner = format!("{}:{}", v["owner_point"]["x"], v["owner_point"]["y"]);
    assert!(records.join("bob.share.json").exists());

    let out = dir.path().join("out.txt");
    let bob_rec = records.join("bob.share.json");
    let o = invauth(&with_store(
        &store,
        &[
            "request",
            "--file-id",
            "memo",
            "--user",
            "bob",
            "--owner-point",
            &owner,
            "--share-record",
            bob_rec.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
    ));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read(&out).unwrap(), b"CONFIDENTIAL-MEMO-SENTINEL body");

    // Without the owner point there is no path to plaintext.
    let o = invauth(&with_store(&store, &["request", "--file-id", "memo", "--user", "bob"]));
    assert_eq!(o.status.code(), Some(1));

    for entry in std::fs::read_dir(store.join("objects")).unwrap() {
        let bytes = std::fs::read(entry.unwrap().path()).unwrap();
        assert!(!bytes.windows(9).any(|w| w == b"SENTINEL-"));
    }
    let policy = std::fs::read_to_string(store.join("policy.json")).unwrap();
    assert!(!policy.contains(v["owner_point"]["y"].to_string().as_str()));
    assert_eq!(policy, std::fs::read_to_string(store.join("acl-backup.json")).unwrap());

    let r = json(&invauth(&with_store(
        &store,
        &[
            "revoke",
            "--file-id",
            "memo",
            "--user",
            "bob",
            "--owner-point",
            &owner,
            "--json",
        ],
    )));
    let new_owner = format!("{}:{}", r["owner_point"]["x"], r["owner_point"]["y"]);

    let o = invauth(&with_store(
        &store,
        &[
            "request",
            "--file-id",
            "memo",
            "--user",
            "bob",
            "--owner-point",
            &new_owner,
            "--share-record",
            bob_rec.to_str().unwrap(),
        ],
    ));
    assert_eq!(o.status.code(), Some(1));
    // Carol's old record file is stale; the server's copy was re-issued.
    let carol_rec = records.join("carol.share.json");
    let o = invauth(&with_store(
        &store,
        &[
            "request",
            "--file-id",
            "memo",
            "--user",
            "carol",
            "--owner-point",
            &new_owner,
            "--share-record",
            carol_rec.to_str().unwrap(),
        ],
    ));
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("binding"));
    let o = invauth(&with_store(
        &store,
        &[
            "request",
            "--file-id",
            "memo",
            "--user",
            "carol",
            "--owner-point",
            &new_owner,
            "--json",
        ],
    ));
    let v = json(&o);
    assert_eq!(v["plaintext_hex"], hex::encode(b"CONFIDENTIAL-MEMO-SENTINEL body"));
}

#[test]
fn bench_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("enc.csv");
    let o = invauth(&[
        "bench",
        "encrypt",
        "--sizes",
        "0,5",
        "--reps",
        "5",
        "--csv",
        csv_path.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with("size_bytes,cipher_bytes,encrypt_s,decrypt_s,throughput_kbps"));
    assert!(csv.lines().nth(1).unwrap().ends_with("N/A"));

    let v = json(&invauth(&["bench", "storage", "--json"]));
    assert_eq!(v["rows"][0]["user_bytes"], 352);
    assert_eq!(v["rows"][0]["server_bytes"], 352);
    assert_eq!(v["rows"][1]["user_bytes"], 416);
    let v = json(&invauth(&["bench", "storage", "--user-attrs", "0", "--json"]));
    assert_eq!(v["rows"][0]["user_bytes"], 32);

    let v = json(&invauth(&["bench", "attrs", "--k", "2,3,5", "--users", "5", "--json"]));
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
    assert_eq!(
        invauth(&["bench", "attrs", "--k", "9", "--users", "5"]).status.code(),
        Some(1)
    );
}

#[test]
fn keygen_json() {
    let v = json(&invauth(&[
        "keygen",
        "--file-id",
        "doc",
        "--master",
        "1234",
        "--mode",
        "power",
        "--n",
        "2",
        "--json",
    ]));
    assert_eq!(v["secret"], 1234);
    assert_eq!(v["key"]["n"], 2);
    assert!(v["key"]["a"].as_u64().unwrap() >= 256);
}
