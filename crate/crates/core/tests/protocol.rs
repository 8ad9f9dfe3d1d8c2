use std::collections::HashMap;

use invauth_core::{
    load_policy, AuthzError, CipherMode, GrantConfig, OrgServer, PolicyDb, ServerError, SharePoint, SlotLayout,
    UserRecord, UserType,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CONSUMERS: [&str; 4] = ["carol", "dave", "erin", "frank"];

fn creds(uid: &str) -> Vec<u8> {
    format!("pw:{uid}").into_bytes()
}

fn paper_db() -> (PolicyDb, SharePoint) {
    let mut db = PolicyDb::default();
    db.register_user(UserRecord::new("alice", UserType::Owner, creds("alice")))
        .unwrap();
    for uid in CONSUMERS {
        db.register_user(UserRecord::new(uid, UserType::Consumer, creds(uid)))
            .unwrap();
    }
    let cfg = GrantConfig {
        pinned: Some((1234, vec![166, 94])),
        layout: Some(SlotLayout {
            server_x: 2,
            owner_x: 4,
            consumer_xs: vec![1, 3, 5, 6],
        }),
        ..GrantConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let out = db
        .grant_access("report.txt", "alice", &CONSUMERS, b"table one", &cfg, &mut rng)
        .unwrap();
    (db, out.owner_share)
}

#[test]
fn collusion_exhaustive_over_six_points() {
    let (db, owner) = paper_db();
    let g = db.grant("report.txt").unwrap();
    let mut points = vec![g.server_share, owner];
    let mut slot = HashMap::new();
    for uid in CONSUMERS {
        let pt = g.consumers[uid].open(&creds(uid), db.p);
        slot.insert(uid, pt.x);
        points.push(pt);
    }
    points.sort_by_key(|p| p.x);
    assert_eq!(
        points.iter().map(|p| (p.x, p.y)).collect::<Vec<_>>(),
        vec![(1, 1494), (2, 1942), (3, 2578), (4, 3402), (5, 4414), (6, 5614)]
    );

    let mut accepted = Vec::new();
    let mut tried = 0;
    for i in 0..6 {
        for j in i + 1..6 {
            for k in j + 1..6 {
                let trio = [points[i], points[j], points[k]];
                for (s, o, r) in [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)] {
                    for uid in CONSUMERS {
                        tried += 1;
                        let res = db.authorize_triple("report.txt", trio[s], Some(trio[o]), uid, Some(trio[r]));
                        let legit = trio[s].x == 2 && trio[o].x == 4 && trio[r].x == slot[uid];
                        assert_eq!(res.is_ok(), legit, "{:?} as {uid}", (trio[s], trio[o], trio[r]));
                        if let Ok(secret) = res {
                            assert_eq!(secret, 1234);
                            accepted.push(uid);
                        }
                    }
                }
            }
        }
    }
    assert_eq!(tried, 20 * 6 * 4);
    accepted.sort_unstable();
    assert_eq!(accepted, vec!["carol", "dave", "erin", "frank"]);
}

#[test]
fn colluding_consumers_cannot_stand_in_for_owner() {
    let (db, _) = paper_db();
    let g = db.grant("report.txt").unwrap();
    let env = {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut scratch = PolicyDb::default();
        scratch
            .register_user(UserRecord::new("alice", UserType::Owner, creds("alice")))
            .unwrap();
        for uid in CONSUMERS {
            scratch
                .register_user(UserRecord::new(uid, UserType::Consumer, creds(uid)))
                .unwrap();
        }
        let cfg = GrantConfig {
            pinned: Some((1234, vec![166, 94])),
            ..GrantConfig::default()
        };
        scratch
            .grant_access("report.txt", "alice", &CONSUMERS, b"table one", &cfg, &mut rng)
            .unwrap()
            .envelope
    };
    for helper in CONSUMERS {
        for receiver in CONSUMERS {
            if helper == receiver {
                continue;
            }
            let h = g.consumers[helper].open(&creds(helper), db.p);
            let rec = &g.consumers[receiver];
            // Helper's share as-is, and relabelled to the owner's abscissa.
            for fake in [h, SharePoint::new(4, h.y)] {
                let err = db
                    .request_decrypt("report.txt", Some(fake), receiver, rec, &env)
                    .unwrap_err();
                assert!(
                    matches!(err, AuthzError::RoleViolation(_) | AuthzError::BindingMismatch),
                    "{err:?}"
                );
            }
        }
    }
}

#[test]
fn server_end_to_end_with_persistence() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let sentinels = ["SENTINEL-ALPHA-1138", "SENTINEL-BRAVO-2187"];
    let mut owner_points = HashMap::new();
    {
        let mut srv = OrgServer::open(dir.path(), None, None).unwrap();
        srv.register(UserRecord::new("alice", UserType::Owner, creds("alice")))
            .unwrap();
        for uid in CONSUMERS {
            srv.register(UserRecord::new(uid, UserType::Consumer, creds(uid)))
                .unwrap();
        }
        for (i, s) in sentinels.iter().enumerate() {
            let mode = if i == 0 {
                CipherMode::Additive
            } else {
                CipherMode::Power
            };
            let cfg = GrantConfig {
                mode,
                n: if mode == CipherMode::Power { 2 } else { 1 },
                ..GrantConfig::default()
            };
            let body = format!("header\n{s}\nfooter {}", "x".repeat(3000));
            let out = srv
                .grant(
                    &format!("file{i}"),
                    "alice",
                    &CONSUMERS[..3],
                    body.as_bytes(),
                    &cfg,
                    &mut rng,
                )
                .unwrap();
            owner_points.insert(i, out.owner_share);
        }
    }
    let mut srv = OrgServer::open(dir.path(), None, None).unwrap();
    let rec = srv.share_record("file1", "dave").unwrap().clone();
    let plain = srv.request("file1", Some(owner_points[&1]), "dave", &rec).unwrap();
    assert!(String::from_utf8(plain).unwrap().contains(sentinels[1]));

    // Nothing the server or cloud holds contains plaintext or the owner point.
    for entry in walk(dir.path()) {
        let bytes = std::fs::read(&entry).unwrap();
        for s in sentinels {
            assert!(
                !bytes.windows(s.len()).any(|w| w == s.as_bytes()),
                "{} leaks plaintext",
                entry.display()
            );
        }
        for owner in owner_points.values() {
            let needle = owner.y.to_string();
            assert!(!bytes.windows(needle.len()).any(|w| w == needle.as_bytes()));
        }
    }

    let new_owner = srv.revoke("file1", "dave", owner_points[&1], &mut rng).unwrap();
    let policy = load_policy(srv.db_path()).unwrap();
    let backup = srv.store().load_acl_backup().unwrap();
    assert_eq!(policy, backup);
    assert_eq!(&policy, srv.db());
    assert!(!policy.grant("file1").unwrap().consumers.contains_key("dave"));

    let err = srv.request("file1", Some(new_owner), "dave", &rec).unwrap_err();
    assert!(matches!(err, ServerError::Authz(AuthzError::NotGranted { .. })));
    let erin = srv.share_record("file1", "erin").unwrap().clone();
    assert!(srv.request("file1", Some(new_owner), "erin", &erin).is_ok());

    // A failed revoke leaves the persisted state alone.
    let before = std::fs::read(srv.db_path()).unwrap();
    assert!(srv.revoke("file1", "erin", owner_points[&1], &mut rng).is_err());
    assert_eq!(std::fs::read(srv.db_path()).unwrap(), before);
}

#[test]
fn modulus_mismatch_on_reopen() {
    let dir = tempfile::tempdir().unwrap();
    let mut srv = OrgServer::open(dir.path(), None, None).unwrap();
    srv.register(UserRecord::new("alice", UserType::Owner, "x")).unwrap();
    let other = invauth_core::FieldModulus::new(65_537).unwrap();
    assert!(matches!(
        OrgServer::open(dir.path(), None, Some(other)),
        Err(ServerError::ModulusMismatch { .. })
    ));
}

fn walk(root: &std::path::Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_owned()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(dir).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push(path);
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
enum Op {
    Register(u8),
    Grant { file: u8, mask: u8 },
    Request { file: u8, user: u8, with_owner: bool },
    Revoke { file: u8, user: u8 },
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        (0u8..6).prop_map(Op::Register),
        (0u8..3, 1u8..64).prop_map(|(file, mask)| Op::Grant { file, mask }),
        (0u8..3, 0u8..6, any::<bool>()).prop_map(|(file, user, with_owner)| Op::Request { file, user, with_owner }),
        (0u8..3, 0u8..6).prop_map(|(file, user)| Op::Revoke { file, user }),
    ]
}

fn assert_no_owner_point(db: &PolicyDb, owners: &HashMap<String, SharePoint>) {
    let json = serde_json::to_string(db).unwrap();
    for g in &db.grants {
        let owner = owners[&g.file_id];
        assert_eq!(owner.x, g.owner_x);
        assert_ne!(g.server_share, owner);
        assert_ne!(g.server_share.x, g.owner_x);
        for (uid, rec) in &g.consumers {
            assert_ne!(rec.x, g.owner_x);
            let user = db.user(uid).unwrap();
            assert_ne!(rec.open(&user.credentials, db.p), owner);
        }
        assert!(!json.contains(&owner.y.to_string()));
    }
    assert_eq!(db.check_integrity(), Ok(()));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn owner_point_never_stored(ops in proptest::collection::vec(op(), 1..16), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut db = PolicyDb::default();
        db.register_user(UserRecord::new("owner", UserType::Owner, creds("owner"))).unwrap();
        let mut owners: HashMap<String, SharePoint> = HashMap::new();
        let mut envelopes = HashMap::new();
        for op in ops {
            match op {
                Op::Register(u) => {
                    let _ = db.register_user(UserRecord::new(format!("u{u}"), UserType::Consumer, creds(&format!("u{u}"))));
                }
                Op::Grant { file, mask } => {
                    let ids: Vec<String> = (0..6).filter(|b| mask & (1 << b) != 0).map(|b| format!("u{b}")).collect();
                    let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
                    let fid = format!("f{file}");
                    let data: Vec<u8> = (0..rng.gen_range(0..64)).map(|_| rng.gen()).collect();
                    if let Ok(out) = db.grant_access(&fid, "owner", &refs, &data, &GrantConfig::default(), &mut rng) {
                        owners.insert(fid.clone(), out.owner_share);
                        envelopes.insert(fid, (out.envelope, data));
                    }
                }
                Op::Request { file, user, with_owner } => {
                    let fid = format!("f{file}");
                    let uid = format!("u{user}");
                    if let (Some(g), Some((env, data))) = (db.grant(&fid), envelopes.get(&fid)) {
                        match g.consumers.get(&uid) {
                            Some(rec) => {
                                let owner = with_owner.then(|| owners[&fid]);
                                let res = db.request_decrypt(&fid, owner, &uid, rec, env);
                                if with_owner {
                                    prop_assert_eq!(res.unwrap(), data.clone());
                                } else {
                                    prop_assert_eq!(res.unwrap_err(), AuthzError::InsufficientPoints);
                                }
                            }
                            None => {
                                let stale = invauth_core::ShareRecord::seal(&fid, SharePoint::new(3, 1), g.binding(), b"", db.p);
                                let res = db.request_decrypt(&fid, Some(owners[&fid]), &uid, &stale, env);
                                prop_assert!(res.is_err());
                            }
                        }
                    }
                }
                Op::Revoke { file, user } => {
                    let fid = format!("f{file}");
                    if let Some(owner) = owners.get(&fid).copied() {
                        if let Ok(fresh) = db.revoke_user(&fid, &format!("u{user}"), owner, &mut rng) {
                            prop_assert_eq!(fresh.x, owner.x);
                            owners.insert(fid, fresh);
                        }
                    }
                }
            }
            assert_no_owner_point(&db, &owners);
        }
    }
}
