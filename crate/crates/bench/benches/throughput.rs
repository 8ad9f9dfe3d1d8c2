use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use invauth_core::{
    derive_file_key, open_file, reconstruct_secret, seal_file, split_secret, CipherMode, FieldModulus,
    ReconstructionInput, DEFAULT_BLOCK_BYTES,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

fn cipher(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut group = c.benchmark_group("seal");
    for (mode, n) in [(CipherMode::Additive, 1), (CipherMode::Power, 3)] {
        let key = derive_file_key(rng.gen(), b"bench", mode, n).unwrap();
        for kb in [5usize, 30] {
            let data: Vec<u8> = (0..kb * 1024).map(|_| rng.gen()).collect();
            group.throughput(Throughput::Bytes(data.len() as u64));
            group.bench_with_input(BenchmarkId::new(format!("{mode:?}"), kb), &data, |b, d| {
                b.iter(|| seal_file(black_box(d), &key, DEFAULT_BLOCK_BYTES).unwrap())
            });
            let env = seal_file(&data, &key, DEFAULT_BLOCK_BYTES).unwrap();
            group.bench_with_input(BenchmarkId::new(format!("open-{mode:?}"), kb), &env, |b, e| {
                b.iter(|| open_file(black_box(e), &key).unwrap())
            });
        }
    }
    group.finish();
}

fn sharing(c: &mut Criterion) {
    let p = FieldModulus::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut group = c.benchmark_group("sharing");
    for k in [3usize, 11, 21] {
        let coeffs: Vec<u64> = (1..k).map(|_| rng.gen_range(1..p.value())).collect();
        let secret = rng.gen_range(0..p.value());
        group.bench_with_input(BenchmarkId::new("split", k), &k, |b, _| {
            b.iter(|| split_secret(black_box(secret), &coeffs, 21, p).unwrap())
        });
        let shares = split_secret(secret, &coeffs, 21, p).unwrap();
        let input = ReconstructionInput::new(shares[..k].to_vec(), p);
        group.bench_with_input(BenchmarkId::new("reconstruct", k), &input, |b, i| {
            b.iter(|| reconstruct_secret(black_box(i)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, cipher, sharing);
criterion_main!(benches);
