//! `invauth` command-line front end.
//!
//! Exit codes: 0 success, 1 operation error, 2 usage error.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use invauth_bench::{
    bench_attributes, bench_encrypt, storage_overhead_report, EncryptBench, StorageOverheadModel, DEFAULT_SIZES_KB,
};
use invauth_core::{
    decode_envelope, derive_file_key, encode_envelope, open_file, reconstruct_polynomial, seal_file, split_secret,
    verify_worked_example, CipherKey, CipherMode, FieldModulus, GrantConfig, OrgServer, ReconstructionInput,
    SharePoint, ShareRecord, UserRecord, UserType, DEFAULT_BLOCK_BYTES, DEFAULT_PRIME,
};
use rand::Rng;
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(
    name = "invauth",
    version,
    about = "Multiparty file authorization with an involution stream cipher"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Policy database (default: <store>/policy.json)
    #[arg(long, global = true)]
    db: Option<PathBuf>,
    /// Object store root
    #[arg(long, global = true, default_value = "invauth-store")]
    store: PathBuf,
    /// Prime modulus (default 2^61 - 1)
    #[arg(long, global = true)]
    p: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Mode::Additive)]
    mode: Mode,
    /// Power-mode exponent
    #[arg(long, global = true, default_value_t = 1)]
    n: u8,
    /// Machine-readable output
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Additive,
    Power,
}

impl From<Mode> for CipherMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Additive => CipherMode::Additive,
            Mode::Power => CipherMode::Power,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Point(SharePoint);

impl FromStr for Point {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (x, y) = s.split_once(':').ok_or_else(|| format!("expected x:y, got {s:?}"))?;
        let x = x.trim().parse().map_err(|e| format!("bad x in {s:?}: {e}"))?;
        let y = y.trim().parse().map_err(|e| format!("bad y in {s:?}: {e}"))?;
        Ok(Point(SharePoint::new(x, y)))
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a file secret and show the derived cipher key
    Keygen {
        #[arg(long)]
        file_id: Option<String>,
        /// Use this secret instead of a random one
        #[arg(long)]
        master: Option<u64>,
    },
    /// Seal a file into an envelope under a raw key
    Encrypt {
        #[arg(long)]
        key: u64,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_BLOCK_BYTES)]
        block_bytes: u32,
    },
    /// Open an envelope under a raw key
    Decrypt {
        #[arg(long)]
        key: u64,
        #[arg(long = "in")]
        input: PathBuf,
        /// Output file (default: stdout)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Split a secret into points X = 1..users
    Split {
        #[arg(long)]
        secret: u64,
        /// Higher coefficients a1,a2,...
        #[arg(long, value_delimiter = ',', required = true)]
        coeffs: Vec<u64>,
        #[arg(long)]
        users: usize,
    },
    /// Reconstruct the secret from exactly k points
    Reconstruct {
        #[arg(long, value_delimiter = ',', required = true)]
        points: Vec<Point>,
    },
    /// Register a user in the policy database
    Register {
        #[arg(long)]
        user: String,
        #[arg(long = "type", value_parser = parse_user_type)]
        user_type: UserType,
        #[arg(long)]
        credentials: String,
    },
    /// Seal a file, share its key, and store the envelope
    Grant {
        #[arg(long)]
        file_id: String,
        #[arg(long)]
        owner: String,
        #[arg(long, value_delimiter = ',', required = true)]
        consumers: Vec<String>,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_BLOCK_BYTES)]
        block_bytes: u32,
        /// Write each consumer's share record to <dir>/<user>.share.json
        #[arg(long)]
        records_dir: Option<PathBuf>,
    },
    /// Remove a consumer and re-share the file key
    Revoke {
        #[arg(long)]
        file_id: String,
        #[arg(long)]
        user: String,
        #[arg(long)]
        owner_point: Point,
    },
    /// Decrypt a stored file with server, owner and receiver points
    Request {
        #[arg(long)]
        file_id: String,
        #[arg(long)]
        user: String,
        #[arg(long)]
        owner_point: Option<Point>,
        /// Share record file (default: the record held by the server)
        #[arg(long)]
        share_record: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the worked example end to end
    VerifyExample {
        /// Replace the reconstruction point at this abscissa
        #[arg(long)]
        inject: Option<Point>,
    },
    /// Measurements
    #[command(subcommand)]
    Bench(BenchCommand),
}

#[derive(Subcommand, Debug)]
enum BenchCommand {
    /// Cipher sizes, timings and throughput
    Encrypt {
        /// Plaintext sizes in KiB
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        /// Also write the CSV here
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Split and reconstruction time against the threshold
    Attrs {
        #[arg(long, value_delimiter = ',')]
        k: Option<Vec<usize>>,
        #[arg(long, default_value_t = 21)]
        users: usize,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Storage-overhead formulas and measured sizes
    Storage {
        /// Attributes held by a user (n)
        #[arg(long, default_value_t = 10)]
        user_attrs: u64,
        /// Attributes in the access policy (t_c)
        #[arg(long, default_value_t = 10)]
        policy_attrs: u64,
        #[arg(long, default_value_t = 256)]
        element_bits: u64,
        #[arg(long, default_value_t = 512)]
        pairing_bits: u64,
        #[arg(long, default_value_t = 10)]
        n_aa: u64,
        #[arg(long, default_value_t = 10)]
        m: u64,
        #[arg(long, default_value_t = 10)]
        k_c: u64,
    },
}

fn parse_user_type(s: &str) -> Result<UserType, String> {
    s.parse()
}

type CmdResult = Result<(Value, String), Box<dyn std::error::Error>>;

fn err(msg: impl Into<String>) -> Box<dyn std::error::Error> {
    msg.into().into()
}

fn point_json(p: SharePoint) -> Value {
    json!({ "x": p.x, "y": p.y })
}

impl Global {
    /// Modulus for standalone arithmetic; small primes are allowed.
    fn math_modulus(&self) -> Result<FieldModulus, Box<dyn std::error::Error>> {
        Ok(FieldModulus::test_profile(self.p.unwrap_or(DEFAULT_PRIME))?)
    }

    fn server(&self) -> Result<OrgServer, Box<dyn std::error::Error>> {
        let modulus = self.p.map(FieldModulus::new).transpose()?;
        Ok(OrgServer::open(&self.store, self.db.clone(), modulus)?)
    }

    fn key(&self, a: u64) -> Result<CipherKey, Box<dyn std::error::Error>> {
        Ok(CipherKey::new(a, self.n_for_mode(), self.mode.into())?)
    }

    fn n_for_mode(&self) -> u8 {
        if self.mode == Mode::Additive {
            1
        } else {
            self.n
        }
    }
}

fn write_output(out: Option<&PathBuf>, data: &[u8], json_mode: bool) -> Result<Value, Box<dyn std::error::Error>> {
    match out {
        Some(path) => {
            fs::write(path, data)?;
            Ok(json!({ "out": path, "bytes": data.len() }))
        }
        None if json_mode => Ok(json!({ "plaintext_hex": hex::encode(data), "bytes": data.len() })),
        None => {
            std::io::stdout().write_all(data)?;
            Ok(json!({ "bytes": data.len() }))
        }
    }
}

fn run(cli: Cli) -> CmdResult {
    let g = &cli.global;
    match cli.command {
        Command::Keygen { file_id, master } => {
            let m = g.math_modulus()?;
            let secret = master.unwrap_or_else(|| rand::thread_rng().gen_range(0..m.value()));
            if secret >= m.value() {
                return Err(err(format!("secret {secret} must be below p = {}", m.value())));
            }
            let mut v = json!({ "secret": secret, "p": m.value() });
            let mut text = format!("secret {secret}");
            if let Some(fid) = file_id {
                let key = derive_file_key(secret, fid.as_bytes(), g.mode.into(), g.n_for_mode())?;
                v["file_id"] = json!(fid);
                v["key"] =
                    json!({ "a": key.a(), "n": key.n(), "mode": key.mode(), "symbol_width": key.symbol_width() });
                text = format!(
                    "{text}\nfile key a={} n={} width={}",
                    key.a(),
                    key.n(),
                    key.symbol_width()
                );
            }
            Ok((v, text))
        }
        Command::Encrypt {
            key,
            input,
            out,
            block_bytes,
        } => {
            let data = fs::read(&input)?;
            let env = seal_file(&data, &g.key(key)?, block_bytes)?;
            let bytes = encode_envelope(&env);
            fs::write(&out, &bytes)?;
            let text = format!(
                "sealed {} bytes into {} ({} bytes)",
                data.len(),
                out.display(),
                bytes.len()
            );
            Ok((
                json!({ "out": out, "plaintext_len": data.len(), "envelope_len": bytes.len() }),
                text,
            ))
        }
        Command::Decrypt { key, input, out } => {
            let env = decode_envelope(&fs::read(&input)?)?;
            let data = open_file(&env, &g.key(key)?)?;
            let v = write_output(out.as_ref(), &data, g.json)?;
            let text = out.map_or_else(String::new, |p| {
                format!("wrote {} bytes to {}", data.len(), p.display())
            });
            Ok((v, text))
        }
        Command::Split { secret, coeffs, users } => {
            let pts = split_secret(secret, &coeffs, users, g.math_modulus()?)?;
            let text = pts
                .iter()
                .map(|p| format!("{}:{}", p.x, p.y))
                .collect::<Vec<_>>()
                .join("\n");
            Ok((
                json!({ "points": pts.iter().map(|p| point_json(*p)).collect::<Vec<_>>() }),
                text,
            ))
        }
        Command::Reconstruct { points } => {
            let pts: Vec<SharePoint> = points.into_iter().map(|p| p.0).collect();
            let poly = reconstruct_polynomial(&ReconstructionInput::new(pts, g.math_modulus()?))?;
            Ok((
                json!({ "secret": poly.secret(), "coeffs": poly.coeffs() }),
                poly.secret().to_string(),
            ))
        }
        Command::Register {
            user,
            user_type,
            credentials,
        } => {
            let mut srv = g.server()?;
            srv.register(UserRecord::new(user.clone(), user_type, credentials.into_bytes()))?;
            Ok((
                json!({ "user_id": user, "user_type": user_type }),
                format!("registered {user} as {}", user_type.as_str()),
            ))
        }
        Command::Grant {
            file_id,
            owner,
            consumers,
            input,
            block_bytes,
            records_dir,
        } => {
            let mut srv = g.server()?;
            let data = fs::read(&input)?;
            let cfg = GrantConfig {
                mode: g.mode.into(),
                n: g.n_for_mode(),
                block_bytes,
                ..GrantConfig::default()
            };
            let ids: Vec<&str> = consumers.iter().map(String::as_str).collect();
            let out = srv.grant(&file_id, &owner, &ids, &data, &cfg, &mut rand::thread_rng())?;
            let mut written = Vec::new();
            if let Some(dir) = records_dir {
                fs::create_dir_all(&dir)?;
                for uid in &consumers {
                    let rec = srv.share_record(&file_id, uid).expect("granted consumer has a record");
                    let path = dir.join(format!("{uid}.share.json"));
                    fs::write(&path, serde_json::to_vec_pretty(rec)?)?;
                    written.push(path);
                }
            }
            let o = out.owner_share;
            Ok((
                json!({
                    "file_id": file_id,
                    "envelope_ref": out.envelope_ref,
                    "owner_point": point_json(o),
                    "share_records": written,
                }),
                format!(
                    "granted {file_id} to {}\nowner point {}:{} (keep it; it is not stored)\nenvelope {}",
                    consumers.join(","),
                    o.x,
                    o.y,
                    out.envelope_ref
                ),
            ))
        }
        Command::Revoke {
            file_id,
            user,
            owner_point,
        } => {
            let mut srv = g.server()?;
            let fresh = srv.revoke(&file_id, &user, owner_point.0, &mut rand::thread_rng())?;
            Ok((
                json!({ "file_id": file_id, "revoked": user, "owner_point": point_json(fresh) }),
                format!("revoked {user} from {file_id}\nnew owner point {}:{}", fresh.x, fresh.y),
            ))
        }
        Command::Request {
            file_id,
            user,
            owner_point,
            share_record,
            out,
        } => {
            let srv = g.server()?;
            let record: ShareRecord = match share_record {
                Some(path) => serde_json::from_slice(&fs::read(path)?)?,
                None => srv
                    .share_record(&file_id, &user)
                    .cloned()
                    .ok_or_else(|| err(format!("user {user} is not granted access to {file_id}")))?,
            };
            let data = srv.request(&file_id, owner_point.map(|p| p.0), &user, &record)?;
            let v = write_output(out.as_ref(), &data, g.json)?;
            let text = out.map_or_else(String::new, |p| {
                format!("wrote {} bytes to {}", data.len(), p.display())
            });
            Ok((v, text))
        }
        Command::VerifyExample { inject } => {
            let p = g.p.unwrap_or(DEFAULT_PRIME);
            let r = verify_worked_example(p, inject.map(|i| i.0))?;
            Ok((
                json!({ "status": "PASS", "p": p, "checks": r.checks, "secret": r.secret, "coeffs": r.coeffs }),
                format!(
                    "PASS: {} checks; secret {}; F(X) = {}X^2 + {}X + {}",
                    r.checks, r.secret, r.coeffs[2], r.coeffs[1], r.coeffs[0]
                ),
            ))
        }
        Command::Bench(b) => run_bench(g, b),
    }
}

fn run_bench(g: &Global, cmd: BenchCommand) -> CmdResult {
    match cmd {
        BenchCommand::Encrypt { sizes, reps, csv } => {
            let kb = sizes.unwrap_or_else(|| DEFAULT_SIZES_KB.to_vec());
            if kb.is_empty() {
                return Err(err("sizes must be non-empty"));
            }
            let bytes: Vec<usize> = kb.iter().map(|k| k * 1024).collect();
            let cfg = EncryptBench {
                mode: g.mode.into(),
                n: g.n_for_mode(),
                reps,
                ..EncryptBench::default()
            };
            let report = bench_encrypt(&bytes, &cfg);
            if let Some(path) = csv {
                fs::write(path, report.to_csv())?;
            }
            Ok((serde_json::to_value(&report)?, report.to_table()))
        }
        BenchCommand::Attrs { k, users, reps, csv } => {
            let k = k.unwrap_or_else(|| (3..=21).collect());
            if k.iter().any(|&k| k < 2 || k > users) {
                return Err(err("each k must satisfy 2 <= k <= users"));
            }
            let report = bench_attributes(&k, users, reps);
            if let Some(path) = csv {
                fs::write(path, report.to_csv())?;
            }
            Ok((serde_json::to_value(&report)?, report.to_table()))
        }
        BenchCommand::Storage {
            user_attrs,
            policy_attrs,
            element_bits,
            pairing_bits,
            n_aa,
            m,
            k_c,
        } => {
            let report = storage_overhead_report(StorageOverheadModel {
                n: user_attrs,
                t_c: policy_attrs,
                element_bits,
                pairing_bits,
                n_aa,
                m,
                k_c,
            });
            let mut v = serde_json::to_value(&report)?;
            for (row, cost) in v["rows"]
                .as_array_mut()
                .expect("rows array")
                .iter_mut()
                .zip(&report.rows)
            {
                row["user_bytes"] = json!(cost.user_bytes());
                row["server_bytes"] = json!(cost.server_bytes());
            }
            Ok((v, report.to_table()))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let json_mode = cli.global.json;
    match run(cli) {
        Ok((v, text)) => {
            if json_mode {
                println!("{v}");
            } else if !text.is_empty() {
                println!("{}", text.trim_end());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            if json_mode {
                eprintln!("{}", json!({ "error": e.to_string() }));
            } else {
                eprintln!("error: {e}");
            }
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn point_parsing() {
        let p: Point = "2:1942".parse().unwrap();
        assert_eq!(p.0, SharePoint::new(2, 1942));
        assert!("2-1942".parse::<Point>().is_err());
        assert!("x:1".parse::<Point>().is_err());
    }
}
