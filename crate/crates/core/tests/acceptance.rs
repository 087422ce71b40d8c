//! Acceptance suite: one test per release gate, each printing a PASS/FAIL
//! line (run with `--nocapture` to see them).

use std::path::PathBuf;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use tagwave_core::carrier::{modulate_oqpsk, qpsk_point, BitStream, Preset};
use tagwave_core::channel::{apply, substream_rng, ChannelModel};
use tagwave_core::iq::{tone, IqBuffer};
use tagwave_core::receiver::{
    demodulate, demodulate_oqpsk, qpsk_slice, search_offset, TAG_PREAMBLE,
};
use tagwave_core::sweep::{
    compute_sweep, run_sweep, run_trial, ExperimentConfig, TagSettings,
};
use tagwave_core::tag::{
    embed, envelope_detect, phase_delay, reflection_coefficient, ControlSymbolMap, Impedance,
    StartOffset, TagProfile,
};
use tagwave_core::{CarrierConfig, EmbedMode};

type Check = std::result::Result<String, String>;

fn report(id: &str, name: &str, result: Check) {
    match result {
        Ok(detail) => println!("[acceptance] {id} {name}: PASS ({detail})"),
        Err(why) => {
            println!("[acceptance] {id} {name}: FAIL ({why})");
            panic!("{id} {name} failed: {why}");
        }
    }
}

fn ensure(cond: bool, why: String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(why)
    }
}

fn settings_for(carrier: &CarrierConfig) -> TagSettings {
    match carrier {
        CarrierConfig::Fsk(_) => TagSettings::frequency_shift(),
        CarrierConfig::Psk(_) => TagSettings::phase_delay(),
    }
}

fn experiment(
    preset: Preset,
    offset: StartOffset,
    snr_db_list: Vec<f64>,
    n_list: Vec<usize>,
    trials_per_point: usize,
    tag_bits_per_trial: usize,
    seed: u64,
) -> ExperimentConfig {
    let carrier = preset.config();
    let tag = TagSettings {
        start_offset: offset,
        ..settings_for(&carrier)
    };
    ExperimentConfig {
        carrier,
        tag,
        leak_gain: 0.0,
        snr_db_list,
        n_list,
        trials_per_point,
        tag_bits_per_trial,
        seed,
        output_path: PathBuf::from("unused.csv"),
    }
}

#[test]
fn c01_noise_free_exactness() {
    let start = Instant::now();
    let result = (|| -> Check {
        for preset in Preset::ALL {
            for n in [1usize, 4, 8, 16] {
                let cfg = experiment(
                    preset,
                    StartOffset::Fixed(0),
                    vec![f64::INFINITY],
                    vec![n],
                    100,
                    32,
                    101,
                );
                for trial in 0..100u64 {
                    let out = run_trial(&cfg, f64::INFINITY, n, trial)
                        .map_err(|e| format!("{} n={n} trial {trial}: {e}", preset.name()))?;
                    ensure(
                        out.sent == out.decoded,
                        format!(
                            "{} n={n} trial {trial}: sent {} decoded {}",
                            preset.name(),
                            out.sent,
                            out.decoded
                        ),
                    )?;
                }
            }
        }
        let elapsed = start.elapsed();
        ensure(
            elapsed.as_secs() < 60,
            format!("took {elapsed:?}, limit 60 s"),
        )?;
        Ok(format!(
            "2 presets x 4 N values x 100 trials exact in {elapsed:.2?}"
        ))
    })();
    report("C1", "noise-free exactness", result);
}

#[test]
fn c02_mixer_spreads_tone_at_minus_6_db() {
    let result = (|| -> Check {
        let buf = tone(10e3, 100e-3, 1e6, 1.0).map_err(|e| e.to_string())?;
        let input_peak = buf.spectrum(50.0).map_err(|e| e.to_string())?.peak().power_db;
        let mixed = tagwave_core::tag::mix(&buf, 2e3).map_err(|e| e.to_string())?;
        let spec = mixed.spectrum(50.0).map_err(|e| e.to_string())?;
        let mut detail = String::new();
        for target in [8e3, 12e3] {
            let img = spec
                .peak_in_band(target - 500.0, target + 500.0)
                .ok_or("missing image")?;
            ensure(
                (img.freq_hz - target).abs() <= spec.resolution_hz(),
                format!("image at {} Hz, expected {target} Hz", img.freq_hz),
            )?;
            let rel = img.power_db - input_peak;
            ensure(
                (rel - (-6.0)).abs() <= 0.5,
                format!("image at {rel:.3} dB relative, expected -6 +- 0.5"),
            )?;
            detail.push_str(&format!("{target} Hz: {rel:.2} dB  "));
        }
        Ok(detail.trim().to_string())
    })();
    report("C2", "mixer image levels", result);
}

#[test]
fn c03_phase_delay_maps_every_constellation_index() {
    let result = (|| -> Check {
        for i in 0..4usize {
            let sym = IqBuffer::new(vec![qpsk_point(i)], 1e6).map_err(|e| e.to_string())?;
            for k in 0..4usize {
                let rotated = phase_delay(&sym, k, 4).map_err(|e| e.to_string())?;
                let sliced = qpsk_slice(rotated.samples()[0]);
                let expected = (i + 4 - k) % 4;
                ensure(
                    sliced == expected,
                    format!("i={i} k={k}: sliced {sliced}, expected {expected}"),
                )?;
            }
        }
        Ok("all 16 (i, k) pairs exact".into())
    })();
    report("C3", "quarter-turn codeword translation", result);
}

#[test]
fn c04_reflection_coefficient_properties() {
    let result = (|| -> Check {
        let z_a = Impedance::new(50.0, 10.0);
        let matched = reflection_coefficient(Impedance::new(50.0, -10.0), z_a)
            .map_err(|e| e.to_string())?;
        ensure(
            matched == Complex64::new(0.0, 0.0),
            format!("conjugate match gave {matched}, expected exactly 0"),
        )?;

        let mut rng = ChaCha12Rng::seed_from_u64(104);
        let mut worst = 0.0f64;
        for _ in 0..100_000 {
            let z_t = Impedance::new(rng.random_range(0.0..1e4), rng.random_range(-1e4..1e4));
            let z_a = Impedance::new(rng.random_range(1e-3..1e4), rng.random_range(-1e4..1e4));
            let g = reflection_coefficient(z_t, z_a).map_err(|e| e.to_string())?;
            worst = worst.max(g.norm());
            ensure(
                g.norm() <= 1.0,
                format!("|gamma| = {} for {z_t:?} vs {z_a:?}", g.norm()),
            )?;
        }
        Ok(format!("conjugate match exact; max |gamma| {worst:.6} over 1e5 pairs"))
    })();
    report("C4", "reflection coefficient bounds", result);
}

#[test]
fn c05_pi_delay_inverts_oqpsk_bits() {
    let result = (|| -> Check {
        let cfg = match Preset::ZigbeeLike.config() {
            CarrierConfig::Psk(c) => c,
            _ => unreachable!(),
        };
        let mut rng = ChaCha12Rng::seed_from_u64(105);
        let bits = BitStream::random(600, &mut rng);
        let buf = modulate_oqpsk(&bits, &cfg).map_err(|e| e.to_string())?;
        let rotated = phase_delay(&buf, 2, 4).map_err(|e| e.to_string())?;
        let out = demodulate_oqpsk(&rotated, &cfg).map_err(|e| e.to_string())?;
        ensure(
            out.bits == bits.complement(),
            format!(
                "{} of {} bits differ from the exact inverse",
                out.bits.hamming(&bits.complement()),
                bits.len()
            ),
        )?;
        Ok("600-bit segment decodes to the exact bitwise inverse".into())
    })();
    report("C5", "pi delay inversion", result);
}

#[test]
fn c06_fsk_ber_anchor_at_minus_8_db() {
    let start = Instant::now();
    let result = (|| -> Check {
        let cfg = experiment(
            Preset::BluetoothLike,
            StartOffset::Random,
            vec![-8.0],
            vec![8, 16],
            200,
            64,
            106,
        );
        let outcome = compute_sweep(&cfg).map_err(|e| e.to_string())?;
        let ber8 = outcome.points[0].ber;
        let ber16 = outcome.points[1].ber;
        ensure(
            outcome.points[0].tag_bits_total >= 10_000,
            format!("{} bits per point", outcome.points[0].tag_bits_total),
        )?;
        ensure(
            ber16 < ber8,
            format!("ordering violated: ber(16) = {ber16} >= ber(8) = {ber8}"),
        )?;
        ensure(
            (ber8 - 0.12).abs() <= 0.05,
            format!("ber(N=8) = {ber8:.4}, outside 0.12 +- 0.05"),
        )?;
        ensure(
            (ber16 - 0.10).abs() <= 0.05,
            format!("ber(N=16) = {ber16:.4}, outside 0.10 +- 0.05"),
        )?;
        let elapsed = start.elapsed();
        ensure(
            elapsed.as_secs() < 600,
            format!("took {elapsed:?}, limit 10 min"),
        )?;
        Ok(format!(
            "ber(N=8) = {ber8:.4}, ber(N=16) = {ber16:.4} at -8 dB in {elapsed:.2?}"
        ))
    })();
    report("C6", "-8 dB BER anchor", result);
}

#[test]
fn c07_doubling_n_helps_with_significance() {
    let result = (|| -> Check {
        let mut detail = String::new();
        for (preset, snrs) in [
            (
                Preset::BluetoothLike,
                vec![-14.0, -12.0, -10.0, -8.0, -6.0, -4.0, -2.0, 0.0],
            ),
            (
                Preset::ZigbeeLike,
                vec![-14.0, -12.0, -10.0, -8.0, -6.0, -4.0],
            ),
        ] {
            let cfg = experiment(preset, StartOffset::Random, snrs.clone(), vec![4, 8], 160, 64, 107);
            let outcome = compute_sweep(&cfg).map_err(|e| e.to_string())?;
            let (first, second) = outcome.points.split_at(snrs.len());
            let mut significant = 0usize;
            for (p4, p8) in first.iter().zip(second) {
                assert_eq!(p4.snr_db, p8.snr_db);
                if p4.ber > 0.01 {
                    ensure(
                        p8.ber <= p4.ber,
                        format!(
                            "{} at {} dB: ber(8) = {} > ber(4) = {}",
                            preset.name(),
                            p4.snr_db,
                            p8.ber,
                            p4.ber
                        ),
                    )?;
                    if p4.ber - p4.wilson_95_halfwidth > p8.ber + p8.wilson_95_halfwidth {
                        significant += 1;
                    }
                }
            }
            ensure(
                significant >= 3,
                format!(
                    "{}: only {significant} SNR points with non-overlapping Wilson intervals",
                    preset.name()
                ),
            )?;
            // BER is non-increasing in SNR within Wilson slack
            for points in [first, second] {
                for w in points.windows(2) {
                    ensure(
                        w[1].ber <= w[0].ber + w[0].wilson_95_halfwidth + w[1].wilson_95_halfwidth,
                        format!(
                            "{}: ber rose from {} to {} between {} and {} dB",
                            preset.name(),
                            w[0].ber,
                            w[1].ber,
                            w[0].snr_db,
                            w[1].snr_db
                        ),
                    )?;
                }
            }
            detail.push_str(&format!("{}: {significant} significant points  ", preset.name()));
        }
        Ok(detail.trim().to_string())
    })();
    report("C7", "N = 4 vs 8 ordering", result);
}

#[test]
fn c08_tag_rate_rule() {
    let result = (|| -> Check {
        // 1 Msym/s at N = 8 is 125 kbit/s; every preset follows symbol_rate / N
        let expectations = [
            (Preset::BluetoothLike, 1e6),
            (Preset::ZigbeeLike, 500e3),
        ];
        for (preset, symbol_rate) in expectations {
            let cfg = preset.config();
            ensure(
                cfg.symbol_rate() == symbol_rate,
                format!("{} symbol rate {}", preset.name(), cfg.symbol_rate()),
            )?;
            for n in [1usize, 4, 8, 16] {
                let profile = TagProfile::phase_delay(n);
                let rate = profile.tag_data_rate(cfg.symbol_rate());
                ensure(
                    rate == symbol_rate / n as f64,
                    format!("{} N={n}: rate {rate}", preset.name()),
                )?;
            }
        }
        let bt8 = TagProfile::phase_delay(8).tag_data_rate(1e6);
        ensure(bt8 == 125_000.0, format!("1 Msym/s at N=8 gave {bt8}"))?;
        Ok("rate = symbol_rate / N exact for both presets, N in {1,4,8,16}".into())
    })();
    report("C8", "tag data rate rule", result);
}

#[test]
fn c09_envelope_control_channel() {
    let result = (|| -> Check {
        let fs = 2e6;
        let smoothing_us = 10.0;
        let gap_us = 50.0;
        let map = ControlSymbolMap::new(vec![(100.0, 0), (200.0, 1)], smoothing_us)
            .map_err(|e| e.to_string())?;
        let us = |n: f64| (n * 1e-6 * fs) as usize;

        let frames = 1000usize;
        let bits_per_frame = 4usize;
        let mut rng = ChaCha12Rng::seed_from_u64(109);
        let mut sent = Vec::with_capacity(frames * bits_per_frame);
        let mut samples = Vec::new();
        for _ in 0..frames * bits_per_frame {
            samples.extend(vec![Complex64::new(0.0, 0.0); us(gap_us)]);
            let bit = rng.random::<bool>() as u8;
            let duration = map.entries()[bit as usize].0;
            sent.push(bit);
            samples.extend(vec![Complex64::new(1.0, 0.0); us(duration)]);
        }
        samples.extend(vec![Complex64::new(0.0, 0.0); us(gap_us)]);
        let clean = IqBuffer::new(samples, fs).map_err(|e| e.to_string())?;

        // SNR referenced to a unit-power carrier
        let reference = tone(100e3, 1e-3, fs, 1.0).map_err(|e| e.to_string())?;
        let noisy = apply(&clean, &reference, &ChannelModel::new(10.0, 109))
            .map_err(|e| e.to_string())?;

        let bursts = envelope_detect(&noisy, 0.5, smoothing_us).map_err(|e| e.to_string())?;
        ensure(
            bursts.len() == sent.len(),
            format!("detected {} bursts, sent {}", bursts.len(), sent.len()),
        )?;
        let mut worst = 0.0f64;
        for (burst, &bit) in bursts.iter().zip(&sent) {
            let expected = map.entries()[bit as usize].0;
            let err = (burst.duration_us - expected).abs();
            worst = worst.max(err);
            ensure(
                err <= smoothing_us,
                format!("duration {} us vs {expected} us", burst.duration_us),
            )?;
        }
        let decoded = map.decode(&bursts);
        let errors = decoded
            .bits()
            .iter()
            .zip(&sent)
            .filter(|(a, b)| a != b)
            .count();
        ensure(errors == 0, format!("{errors} control symbol errors"))?;
        Ok(format!(
            "4000 control symbols exact at 10 dB; worst duration error {worst:.2} us"
        ))
    })();
    report("C9", "envelope control channel", result);
}

#[test]
fn c10_offset_recovery() {
    let result = (|| -> Check {
        let carrier_cfg = match Preset::BluetoothLike.config() {
            CarrierConfig::Fsk(c) => c,
            _ => unreachable!(),
        };
        let carrier = CarrierConfig::Fsk(carrier_cfg.clone());
        let n = 4usize;
        let preamble = BitStream::from_bits(TAG_PREAMBLE.to_vec()).map_err(|e| e.to_string())?;
        let span_bits = n * preamble.len(); // candidate offsets live in [0, 32)
        let total_bits = 3 * span_bits;
        let sps = carrier_cfg.samples_per_symbol;

        let trials = 1000usize;
        let mut hits = 0usize;
        for trial in 0..trials {
            let d = trial % span_bits;
            let mut bit_rng = substream_rng(110, "offset.carrier", &[trial as u64]);
            let carrier_bits = BitStream::random(total_bits, &mut bit_rng);
            let buf = carrier.modulate(&carrier_bits).map_err(|e| e.to_string())?;
            let profile = TagProfile {
                mode: EmbedMode::FrequencyShift,
                symbols_per_bit: n,
                delta_f_hz: carrier_cfg.codeword_delta_f(),
                phase_set: [0, 2],
                start_offset: StartOffset::Fixed(d * sps),
                gamma_on: Complex64::new(1.0, 0.0),
                gamma_off: Complex64::new(1.0, 0.0),
            };
            let embedded = embed(&buf, &preamble, &profile, sps).map_err(|e| e.to_string())?;
            let channel = ChannelModel::new(0.0, 110_000 + trial as u64);
            let received = apply(&embedded, &buf, &channel).map_err(|e| e.to_string())?;
            let demod = demodulate(&received, &carrier).map_err(|e| e.to_string())?;
            match search_offset(&demod, &carrier_bits, n, &preamble) {
                Ok(found) if found == d => hits += 1,
                _ => {}
            }
        }
        let rate = hits as f64 / trials as f64;
        ensure(
            rate >= 0.99,
            format!("recovered {hits}/{trials} offsets ({rate:.3})"),
        )?;
        Ok(format!("recovered {hits}/{trials} offsets at 0 dB"))
    })();
    report("C10", "offset recovery", result);
}

#[test]
fn c11_sweep_determinism_across_worker_counts() {
    let result = (|| -> Check {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let mut csvs = Vec::new();
        for (label, threads) in [("serial", 1usize), ("parallel", 4), ("rerun", 4)] {
            let mut cfg = experiment(
                Preset::BluetoothLike,
                StartOffset::Random,
                vec![f64::INFINITY, 0.0, -6.0],
                vec![4, 8],
                20,
                50,
                111,
            );
            cfg.output_path = dir.path().join(format!("{label}.csv"));
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| e.to_string())?;
            pool.install(|| run_sweep(&cfg)).map_err(|e| e.to_string())?;
            csvs.push(std::fs::read(&cfg.output_path).map_err(|e| e.to_string())?);
        }
        ensure(csvs[0] == csvs[1], "serial vs 4-thread CSVs differ".into())?;
        ensure(csvs[1] == csvs[2], "reruns with equal seeds differ".into())?;
        Ok(format!(
            "{} identical bytes across 1-thread, 4-thread and rerun",
            csvs[0].len()
        ))
    })();
    report("C11", "byte-identical sweep reruns", result);
}
