//! Measurement harness: cipher timing and size tables, attribute-count
//! scaling of sharing and reconstruction, and the storage-overhead model.
//!
//! Timings are medians over repetitions after one discarded warm-up run.
//! Each repetition loops the operation until at least [`MIN_SAMPLE`] has
//! elapsed, so microsecond-scale operations still get a stable reading.

use std::fmt::Write as _;
use std::hint::black_box;
use std::time::{Duration, Instant};

use invauth_core::{
    derive_file_key, open_file, reconstruct_secret, seal_file, split_secret, CipherMode, FieldModulus, GrantConfig,
    PolicyDb, ReconstructionInput, UserRecord, UserType, DEFAULT_BLOCK_BYTES,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub const MIN_REPS: usize = 5;
pub const MIN_SAMPLE: Duration = Duration::from_millis(2);
/// The plaintext grid of the size comparison, in KiB.
pub const DEFAULT_SIZES_KB: [usize; 6] = [5, 10, 15, 20, 25, 30];

const BASELINE_FOOTNOTE: &str =
    "Baseline ciphers (AES, DES, RSA, Blowfish) are not implemented here; their columns are omitted.";

/// Median seconds per call of `f`. One warm-up call is discarded.
pub fn median_seconds<F: FnMut()>(reps: usize, mut f: F) -> f64 {
    let reps = reps.max(MIN_REPS);
    f();
    let mut inner: u32 = 1;
    loop {
        let t = Instant::now();
        for _ in 0..inner {
            f();
        }
        if t.elapsed() >= MIN_SAMPLE || inner >= 1 << 20 {
            break;
        }
        inner *= 2;
    }
    let mut samples: Vec<f64> = (0..reps)
        .map(|_| {
            let t = Instant::now();
            for _ in 0..inner {
                f();
            }
            t.elapsed().as_secs_f64() / f64::from(inner)
        })
        .collect();
    median(&mut samples)
}

pub fn median(xs: &mut [f64]) -> f64 {
    assert!(!xs.is_empty());
    xs.sort_by(f64::total_cmp);
    let mid = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[mid]
    } else {
        (xs[mid - 1] + xs[mid]) / 2.0
    }
}

pub fn environment_note(reps: usize) -> String {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    format!(
        "{}-{}, {threads} hardware threads, single-threaded timing, median of {} reps after 1 warm-up",
        std::env::consts::OS,
        std::env::consts::ARCH,
        reps.max(MIN_REPS)
    )
}

/// Least-squares line through `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Root-mean-square residual.
    pub residual: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> LineFit {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "need two points for a line");
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    LineFit {
        slope,
        intercept,
        r2: if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot },
        residual: (ss_res / n).sqrt(),
    }
}

/// Fit on `ln x` against `ln y`; the slope is the growth exponent.
pub fn loglog_fit(xs: &[f64], ys: &[f64]) -> LineFit {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    fit_line(&lx, &ly)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub size_bytes: usize,
    pub cipher_bytes: usize,
    pub encrypt_s: f64,
    pub decrypt_s: f64,
    /// KiB per second of plaintext, `None` for an empty input.
    pub throughput_kbps: Option<f64>,
}

impl BenchRow {
    pub fn expansion(&self) -> Option<f64> {
        (self.size_bytes > 0).then(|| self.cipher_bytes as f64 / self.size_bytes as f64)
    }
}

/// Throughput as plaintext size over encryption time.
pub fn throughput_kbps(size_bytes: usize, encrypt_s: f64) -> Option<f64> {
    (size_bytes > 0 && encrypt_s > 0.0).then(|| (size_bytes as f64 / 1024.0) / encrypt_s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub mode: CipherMode,
    pub n: u8,
    pub rows: Vec<BenchRow>,
    pub environment: String,
    pub reps: usize,
}

#[derive(Serialize)]
struct CsvRow {
    size_bytes: usize,
    cipher_bytes: usize,
    encrypt_s: f64,
    decrypt_s: f64,
    throughput_kbps: String,
}

fn csv_string<T: Serialize>(rows: impl IntoIterator<Item = T>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory CSV write");
    }
    String::from_utf8(w.into_inner().expect("in-memory CSV flush")).expect("CSV is UTF-8")
}

impl BenchReport {
    /// Columns `size_bytes,cipher_bytes,encrypt_s,decrypt_s,throughput_kbps`.
    pub fn to_csv(&self) -> String {
        csv_string(self.rows.iter().map(|r| CsvRow {
            size_bytes: r.size_bytes,
            cipher_bytes: r.cipher_bytes,
            encrypt_s: r.encrypt_s,
            decrypt_s: r.decrypt_s,
            throughput_kbps: r.throughput_kbps.map_or_else(|| "N/A".to_owned(), |t| t.to_string()),
        }))
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "mode={:?} n={} ({})", self.mode, self.n, self.environment);
        let _ = writeln!(
            out,
            "{:>10} {:>12} {:>8} {:>12} {:>12} {:>14}",
            "size_kb", "cipher_kb", "ratio", "encrypt_s", "decrypt_s", "kb_per_s"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:>10.2} {:>12.2} {:>8} {:>12.3e} {:>12.3e} {:>14}",
                r.size_bytes as f64 / 1024.0,
                r.cipher_bytes as f64 / 1024.0,
                r.expansion().map_or_else(|| "N/A".into(), |e| format!("{e:.4}")),
                r.encrypt_s,
                r.decrypt_s,
                r.throughput_kbps.map_or_else(|| "N/A".into(), |t| format!("{t:.2}")),
            );
        }
        let _ = writeln!(out, "{BASELINE_FOOTNOTE}");
        out
    }
}

#[derive(Debug, Clone)]
pub struct EncryptBench {
    pub mode: CipherMode,
    pub n: u8,
    pub block_bytes: u32,
    pub reps: usize,
    pub seed: u64,
}

impl Default for EncryptBench {
    fn default() -> Self {
        Self {
            mode: CipherMode::Additive,
            n: 1,
            block_bytes: DEFAULT_BLOCK_BYTES,
            reps: MIN_REPS,
            seed: 0x5eed,
        }
    }
}

/// Seals and opens a random corpus at each size and records sizes,
/// median timings and throughput.
pub fn bench_encrypt(sizes: &[usize], cfg: &EncryptBench) -> BenchReport {
    assert!(!sizes.is_empty(), "sizes must be non-empty");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = if cfg.mode == CipherMode::Additive { 1 } else { cfg.n };
    let rows = sizes
        .iter()
        .map(|&size| {
            let data: Vec<u8> = (0..size).map(|_| rng.gen()).collect();
            let key = derive_file_key(rng.gen(), format!("corpus-{size}").as_bytes(), cfg.mode, n)
                .expect("valid benchmark key");
            let env = seal_file(&data, &key, cfg.block_bytes).expect("valid block size");
            assert_eq!(open_file(&env, &key).expect("round trip"), data);
            let encrypt_s = median_seconds(cfg.reps, || {
                black_box(seal_file(black_box(&data), &key, cfg.block_bytes).unwrap());
            });
            let decrypt_s = median_seconds(cfg.reps, || {
                black_box(open_file(black_box(&env), &key).unwrap());
            });
            BenchRow {
                size_bytes: size,
                cipher_bytes: env.encoded_len(),
                encrypt_s,
                decrypt_s,
                throughput_kbps: throughput_kbps(size, encrypt_s),
            }
        })
        .collect();
    BenchReport {
        mode: cfg.mode,
        n,
        rows,
        environment: environment_note(cfg.reps),
        reps: cfg.reps.max(MIN_REPS),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub k: usize,
    pub n_users: usize,
    pub split_s: f64,
    pub reconstruct_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    pub environment: String,
    pub split_fit: Option<LineFit>,
    pub reconstruct_fit: Option<LineFit>,
}

impl ScalingReport {
    pub fn to_csv(&self) -> String {
        csv_string(&self.rows)
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "({})", self.environment);
        let _ = writeln!(
            out,
            "{:>4} {:>8} {:>14} {:>14}",
            "k", "n_users", "split_s", "reconstruct_s"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:>4} {:>8} {:>14.3e} {:>14.3e}",
                r.k, r.n_users, r.split_s, r.reconstruct_s
            );
        }
        for (name, fit) in [("split", self.split_fit), ("reconstruct", self.reconstruct_fit)] {
            if let Some(f) = fit {
                let _ = writeln!(
                    out,
                    "{name}: log-log slope {:.3}, r2 {:.3}, rms residual {:.3}",
                    f.slope, f.r2, f.residual
                );
            }
        }
        out
    }
}

fn scaling_row(k: usize, n_users: usize, reps: usize, rng: &mut ChaCha8Rng) -> ScalingRow {
    assert!(k >= 2 && n_users >= k, "need k >= 2 and n_users >= k");
    let modulus = FieldModulus::default();
    let p = modulus.value();
    let secret = rng.gen_range(0..p);
    let mut coeffs: Vec<u64> = (1..k).map(|_| rng.gen_range(0..p)).collect();
    *coeffs.last_mut().expect("k >= 2") = rng.gen_range(1..p);
    let shares = split_secret(secret, &coeffs, n_users, modulus).expect("valid split");
    let input = ReconstructionInput::new(shares[..k].to_vec(), modulus);
    assert_eq!(reconstruct_secret(&input).expect("valid input"), secret);
    let split_s = median_seconds(reps, || {
        black_box(split_secret(black_box(secret), &coeffs, n_users, modulus).unwrap());
    });
    let reconstruct_s = median_seconds(reps, || {
        black_box(reconstruct_secret(black_box(&input)).unwrap());
    });
    ScalingRow {
        k,
        n_users,
        split_s,
        reconstruct_s,
    }
}

fn fit_on<F: Fn(&ScalingRow) -> f64>(rows: &[ScalingRow], x: F, y: impl Fn(&ScalingRow) -> f64) -> Option<LineFit> {
    (rows.len() >= 2).then(|| {
        let xs: Vec<f64> = rows.iter().map(&x).collect();
        let ys: Vec<f64> = rows.iter().map(y).collect();
        loglog_fit(&xs, &ys)
    })
}

/// Split and reconstruction time as the threshold grows, at a fixed
/// number of issued points. Both fits are against `k`.
pub fn bench_attributes(k_values: &[usize], n_users: usize, reps: usize) -> ScalingReport {
    let mut rng = ChaCha8Rng::seed_from_u64(0xa77);
    let rows: Vec<ScalingRow> = k_values
        .iter()
        .map(|&k| scaling_row(k, n_users, reps, &mut rng))
        .collect();
    ScalingReport {
        split_fit: fit_on(&rows, |r| r.k as f64, |r| r.split_s),
        reconstruct_fit: fit_on(&rows, |r| r.k as f64, |r| r.reconstruct_s),
        rows,
        environment: environment_note(reps),
    }
}

/// Split time as the number of issued points grows, at a fixed threshold.
/// Only the split fit is meaningful (against `n_users`).
pub fn bench_users(n_values: &[usize], k: usize, reps: usize) -> ScalingReport {
    let mut rng = ChaCha8Rng::seed_from_u64(0x05e5);
    let rows: Vec<ScalingRow> = n_values.iter().map(|&n| scaling_row(k, n, reps, &mut rng)).collect();
    ScalingReport {
        split_fit: fit_on(&rows, |r| r.n_users as f64, |r| r.split_s),
        reconstruct_fit: None,
        rows,
        environment: environment_note(reps),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StorageOverheadModel {
    /// Attributes held by a user.
    pub n: u64,
    /// Attributes in the access policy.
    pub t_c: u64,
    /// Bits in a field element.
    pub element_bits: u64,
    /// Bits in a pairing-group element.
    pub pairing_bits: u64,
    /// Attributes managed by the DAC-MACS attribute authority.
    pub n_aa: u64,
    /// Attributes per user in the pairing-based comparison scheme.
    pub m: u64,
    /// Key components per user at the server in the pairing-based scheme.
    pub k_c: u64,
}

impl Default for StorageOverheadModel {
    fn default() -> Self {
        Self {
            n: 10,
            t_c: 10,
            element_bits: 256,
            pairing_bits: 512,
            n_aa: 10,
            m: 10,
            k_c: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SchemeCost {
    pub scheme: &'static str,
    pub user_formula: &'static str,
    pub user_bits: u64,
    pub server_formula: &'static str,
    pub server_bits: u64,
}

impl SchemeCost {
    pub fn user_bytes(&self) -> u64 {
        self.user_bits.div_ceil(8)
    }

    pub fn server_bytes(&self) -> u64 {
        self.server_bits.div_ceil(8)
    }
}

impl StorageOverheadModel {
    pub fn proposed(&self) -> SchemeCost {
        SchemeCost {
            scheme: "proposed",
            user_formula: "(n+1)|p|",
            user_bits: (self.n + 1) * self.element_bits,
            server_formula: "(t_c+1)|p|",
            server_bits: (self.t_c + 1) * self.element_bits,
        }
    }

    pub fn dac_macs(&self) -> SchemeCost {
        SchemeCost {
            scheme: "DAC-MACS",
            user_formula: "(n_AA+3)|p|",
            user_bits: (self.n_aa + 3) * self.element_bits,
            server_formula: "(3t_c+3)|p|",
            server_bits: (3 * self.t_c + 3) * self.element_bits,
        }
    }

    pub fn pairing_abac(&self) -> SchemeCost {
        SchemeCost {
            scheme: "pairing ABAC",
            user_formula: "(m+1)|Pi|",
            user_bits: (self.m + 1) * self.pairing_bits,
            server_formula: "(K_c+1)|Pi|",
            server_bits: (self.k_c + 1) * self.pairing_bits,
        }
    }
}

/// Sizes of what this implementation actually stores for one grant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MeasuredSizes {
    pub consumers: usize,
    /// One consumer's JSON share record.
    pub share_record_json_bytes: usize,
    /// The server-side grant entry as JSON.
    pub grant_json_bytes: usize,
    /// Field elements held by the server per grant: server point (x, y)
    /// and binding code (kc, x_kc), at 8 bytes each.
    pub server_elements_bytes: usize,
}

pub fn measure_artifact_sizes(consumers: usize) -> MeasuredSizes {
    let mut rng = ChaCha8Rng::seed_from_u64(0x51e);
    let mut db = PolicyDb::default();
    db.register_user(UserRecord::new("owner", UserType::Owner, b"owner-credentials".to_vec()))
        .expect("fresh db");
    let ids: Vec<String> = (0..consumers.max(1)).map(|i| format!("consumer{i:03}")).collect();
    for id in &ids {
        db.register_user(UserRecord::new(id.clone(), UserType::Consumer, format!("cred-{id}")))
            .expect("unique ids");
    }
    let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
    db.grant_access("file-0001", "owner", &refs, b"", &GrantConfig::default(), &mut rng)
        .expect("valid grant");
    let grant = db.grant("file-0001").expect("just granted");
    let rec = grant.consumers.values().next().expect("at least one consumer");
    MeasuredSizes {
        consumers: ids.len(),
        share_record_json_bytes: serde_json::to_vec(rec).expect("serializable").len(),
        grant_json_bytes: serde_json::to_vec(grant).expect("serializable").len(),
        server_elements_bytes: 4 * 8,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OverheadReport {
    pub model: StorageOverheadModel,
    pub rows: Vec<SchemeCost>,
    pub measured: MeasuredSizes,
}

impl OverheadReport {
    pub fn to_table(&self) -> String {
        let m = &self.model;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "n={} t_c={} |p|={} |Pi|={} n_AA={} m={} K_c={}",
            m.n, m.t_c, m.element_bits, m.pairing_bits, m.n_aa, m.m, m.k_c
        );
        let _ = writeln!(
            out,
            "{:<14} {:<12} {:>11} {:<14} {:>13}",
            "scheme", "user", "user_bytes", "server", "server_bytes"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<14} {:<12} {:>11} {:<14} {:>13}",
                r.scheme,
                r.user_formula,
                r.user_bytes(),
                r.server_formula,
                r.server_bytes()
            );
        }
        let s = &self.measured;
        let _ = writeln!(
            out,
            "measured ({} consumers): share record {} B JSON, grant entry {} B JSON, server field elements {} B",
            s.consumers, s.share_record_json_bytes, s.grant_json_bytes, s.server_elements_bytes
        );
        out
    }
}

pub fn storage_overhead_report(model: StorageOverheadModel) -> OverheadReport {
    OverheadReport {
        model,
        rows: vec![model.proposed(), model.dac_macs(), model.pairing_abac()],
        measured: measure_artifact_sizes(model.t_c.clamp(1, 1000) as usize),
    }
}
