use std::hint::black_box;
use std::path::PathBuf;

use criterion::{criterion_group, criterion_main, Criterion, Throughput};

use tagwave_bench::random_bits;
use tagwave_core::carrier::{modulate_fsk, modulate_oqpsk, FskConfig, Preset, PskConfig};
use tagwave_core::receiver::{demodulate_fsk, demodulate_oqpsk};
use tagwave_core::sweep::{run_trial, ExperimentConfig, TagSettings};
use tagwave_core::tag::mix;
use tagwave_core::StartOffset;

fn bench_modulators(c: &mut Criterion) {
    let bits = random_bits(1024, 1);
    let fsk = FskConfig::bluetooth_like();
    let psk = PskConfig::zigbee_like();

    let mut group = c.benchmark_group("modulate");
    group.throughput(Throughput::Elements(1024));
    group.bench_function("gfsk_1024_bits", |b| {
        b.iter(|| modulate_fsk(black_box(&bits), &fsk).unwrap())
    });
    group.bench_function("oqpsk_msk_1024_bits", |b| {
        b.iter(|| modulate_oqpsk(black_box(&bits), &psk).unwrap())
    });
    group.finish();
}

fn bench_demodulators(c: &mut Criterion) {
    let bits = random_bits(1024, 2);
    let fsk = FskConfig::bluetooth_like();
    let psk = PskConfig::zigbee_like();
    let fsk_buf = modulate_fsk(&bits, &fsk).unwrap();
    let psk_buf = modulate_oqpsk(&bits, &psk).unwrap();

    let mut group = c.benchmark_group("demodulate");
    group.throughput(Throughput::Elements(1024));
    group.bench_function("fsk_correlator_1024_bits", |b| {
        b.iter(|| demodulate_fsk(black_box(&fsk_buf), &fsk).unwrap())
    });
    group.bench_function("oqpsk_slicer_1024_bits", |b| {
        b.iter(|| demodulate_oqpsk(black_box(&psk_buf), &psk).unwrap())
    });
    group.finish();
}

fn bench_tag_transforms(c: &mut Criterion) {
    let bits = random_bits(1024, 3);
    let buf = modulate_fsk(&bits, &FskConfig::bluetooth_like()).unwrap();

    let mut group = c.benchmark_group("tag");
    group.throughput(Throughput::Elements(buf.len() as u64));
    group.bench_function("mix_20480_samples", |b| {
        b.iter(|| mix(black_box(&buf), 500e3).unwrap())
    });
    group.finish();
}

fn bench_spectrum(c: &mut Criterion) {
    let bits = random_bits(4096, 4);
    let buf = modulate_fsk(&bits, &FskConfig::bluetooth_like()).unwrap();

    let mut group = c.benchmark_group("spectrum");
    group.throughput(Throughput::Elements(buf.len() as u64));
    group.bench_function("psd_81920_samples", |b| {
        b.iter(|| black_box(&buf).spectrum(1e3).unwrap())
    });
    group.finish();
}

fn bench_full_trial(c: &mut Criterion) {
    let cfg = ExperimentConfig {
        carrier: Preset::BluetoothLike.config(),
        tag: TagSettings {
            start_offset: StartOffset::Random,
            ..TagSettings::frequency_shift()
        },
        leak_gain: 0.0,
        snr_db_list: vec![0.0],
        n_list: vec![8],
        trials_per_point: 1,
        tag_bits_per_trial: 64,
        seed: 5,
        output_path: PathBuf::from("unused.csv"),
    };
    let psk_cfg = ExperimentConfig {
        carrier: Preset::ZigbeeLike.config(),
        tag: TagSettings {
            start_offset: StartOffset::Random,
            ..TagSettings::phase_delay()
        },
        ..cfg.clone()
    };

    let mut group = c.benchmark_group("trial");
    group.throughput(Throughput::Elements(64));
    group.bench_function("fsk_n8_64_tag_bits_0db", |b| {
        let mut i = 0u64;
        b.iter(|| {
            i += 1;
            run_trial(black_box(&cfg), 0.0, 8, i).unwrap()
        })
    });
    group.bench_function("oqpsk_n8_64_tag_bits_0db", |b| {
        let mut i = 0u64;
        b.iter(|| {
            i += 1;
            run_trial(black_box(&psk_cfg), 0.0, 8, i).unwrap()
        })
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_modulators,
    bench_demodulators,
    bench_tag_transforms,
    bench_spectrum,
    bench_full_trial
);
criterion_main!(benches);
