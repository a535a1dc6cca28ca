use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use becr_cli::report::{BecrSummary, ReportFile};
use hound::{SampleFormat, WavSpec, WavWriter};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use tempfile::TempDir;

fn becr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_becr"))
        .args(args)
        .env_remove("BECR_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write_csv(dir: &Path, name: &str, rows: &[Vec<f64>]) -> PathBuf {
    let path = dir.join(name);
    let body: String = rows
        .iter()
        .map(|r| r.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",") + "\n")
        .collect();
    std::fs::write(&path, body).unwrap();
    path
}

fn gaussian_rows(seed: u64, n: usize, d: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..d).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect()
}

/// Centered Gaussian columns, orthonormalized and scaled so the sample
/// covariance is the identity.
fn whitened_rows(seed: u64, n: usize, d: usize) -> Vec<Vec<f64>> {
    let rows = gaussian_rows(seed, n, d);
    let mut cols: Vec<Vec<f64>> = (0..d).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
    for j in 0..d {
        let mean = cols[j].iter().sum::<f64>() / n as f64;
        cols[j].iter_mut().for_each(|v| *v -= mean);
        for i in 0..j {
            let proj: f64 = cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum();
            let (head, tail) = cols.split_at_mut(j);
            tail[0].iter_mut().zip(&head[i]).for_each(|(v, q)| *v -= proj * q);
        }
        let norm = cols[j].iter().map(|v| v * v).sum::<f64>().sqrt();
        cols[j].iter_mut().for_each(|v| *v /= norm);
    }
    let scale = ((n - 1) as f64).sqrt();
    (0..n).map(|i| (0..d).map(|j| cols[j][i] * scale).collect()).collect()
}

fn rank_one_rows() -> Vec<Vec<f64>> {
    [1.0, 3.0, -1.0, 5.0, 2.0, 0.0]
        .iter()
        .map(|t| vec![*t, 2.0 * t, 0.0, -t])
        .collect()
}

fn write_wav(dir: &Path, name: &str, rate: u32, samples: &[f64]) -> PathBuf {
    let path = dir.join(name);
    let spec = WavSpec {
        channels: 1,
        sample_rate: rate,
        bits_per_sample: 32,
        sample_format: SampleFormat::Float,
    };
    let mut w = WavWriter::create(&path, spec).unwrap();
    for s in samples {
        w.write_sample(*s as f32).unwrap();
    }
    w.finalize().unwrap();
    path
}

fn tone(freq: f64, rate: u32, len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| 0.5 * (2.0 * PI * freq * n as f64 / rate as f64).sin())
        .collect()
}

fn read_spectrogram(path: &Path) -> (Vec<f64>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let parse = |l: &str| l.split(',').map(|v| v.parse::<f64>().unwrap()).collect::<Vec<_>>();
    let header = parse(lines.next().unwrap());
    (header, lines.map(parse).collect())
}

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap()
        .0
}

#[test]
fn metrics_on_isotropic_embeddings() {
    let dir = TempDir::new().unwrap();
    let csv = write_csv(dir.path(), "iso.csv", &whitened_rows(11, 200, 8));
    let o = becr(&["metrics", csv.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = ReportFile::from_json(&stdout(&o)).unwrap();
    assert!((r.gini_index.unwrap() - 0.875).abs() <= 0.05);
    assert!((r.top_m_eigenvalue_ratio.unwrap() - 0.25).abs() <= 0.05);
    assert_eq!((r.provenance.k, r.provenance.m, r.provenance.seed), (4, 2, 0));
    assert_eq!((r.n_samples, r.dim), (200, 8));
    let f = r.f_test.unwrap();
    assert!((f - r.calinski_harabasz.unwrap()).abs() <= 1e-9 * f);
}

#[test]
fn metrics_on_raw_gaussian_draws() {
    // sample eigenvalues of N = 200, D = 8 spread over roughly (1 ± √(D/N))²
    let dir = TempDir::new().unwrap();
    for seed in 0..5 {
        let csv = write_csv(dir.path(), "g.csv", &gaussian_rows(seed, 200, 8));
        let r = ReportFile::from_json(&stdout(&becr(&["metrics", csv.to_str().unwrap()]))).unwrap();
        assert!((r.gini_index.unwrap() - 0.875).abs() <= 0.05);
        let ratio = r.top_m_eigenvalue_ratio.unwrap();
        assert!((0.25..=2.0 * 1.44 / 8.0).contains(&ratio), "{ratio}");
    }
}

#[test]
fn metrics_on_rank_one_embeddings() {
    let dir = TempDir::new().unwrap();
    let csv = write_csv(dir.path(), "r1.csv", &rank_one_rows());
    let out = dir.path().join("report.json");
    let o = becr(&["metrics", csv.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    let r = ReportFile::from_json(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(r.gini_index, Some(0.0));
    assert_eq!(r.top_m_eigenvalue_ratio, Some(1.0));
}

#[test]
fn metrics_on_identical_rows_reports_null_gini() {
    let dir = TempDir::new().unwrap();
    let csv = write_csv(dir.path(), "same.csv", &vec![vec![0.5, -1.0, 2.0]; 6]);
    let o = becr(&["metrics", csv.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = ReportFile::from_json(&stdout(&o)).unwrap();
    assert_eq!(r.gini_index, None);
    assert!(r.undefined.contains_key("gini_index"));
    assert!(stdout(&o).contains("\"gini_index\": null"));
}

#[test]
fn non_numeric_cell_names_row_and_column() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "1,2,3\n4,5,6\n7,oops,9\n").unwrap();
    let o = becr(&["metrics", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3, column 2"), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
}

#[test]
fn header_flag_skips_first_line() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("h.csv");
    let mut body = String::from("a,b,c\n");
    for r in gaussian_rows(3, 20, 3) {
        body += &format!("{},{},{}\n", r[0], r[1], r[2]);
    }
    std::fs::write(&path, body).unwrap();
    assert_eq!(becr(&["metrics", path.to_str().unwrap()]).status.code(), Some(2));
    assert!(becr(&["metrics", path.to_str().unwrap(), "--header"]).status.success());
}

#[test]
fn invalid_cluster_count_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let csv = write_csv(dir.path(), "x.csv", &gaussian_rows(1, 5, 3));
    assert_eq!(becr(&["metrics", csv.to_str().unwrap(), "-k", "5"]).status.code(), Some(1));
    assert_eq!(becr(&["metrics", csv.to_str().unwrap(), "-m", "4"]).status.code(), Some(1));
    assert_eq!(becr(&["metrics", csv.to_str().unwrap(), "-k", "x"]).status.code(), Some(1));
}

#[test]
fn becr_rank_one_summary() {
    let dir = TempDir::new().unwrap();
    let csv = write_csv(dir.path(), "r1.csv", &rank_one_rows());
    let o = becr(&["becr", csv.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s: BecrSummary = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(s.gini, 0.0);
    assert!((s.penalty - 0.49).abs() <= 1e-15);
    assert!((s.total_loss - 0.9745).abs() <= 1e-15);
    assert_eq!(s.grad_check_max_rel_error, None);
}

#[test]
fn becr_inactive_hinge() {
    let dir = TempDir::new().unwrap();
    let csv = write_csv(dir.path(), "iso.csv", &gaussian_rows(5, 200, 8));
    let o = becr(&["becr", csv.to_str().unwrap(), "--lambda", "0.25", "--vanilla-loss", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s: BecrSummary = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(s.gini >= 0.7);
    assert_eq!(s.penalty, 0.0);
    assert_eq!(s.total_loss, 1.5);
}

#[test]
fn becr_grad_check_on_random_batch() {
    let dir = TempDir::new().unwrap();
    let csv = write_csv(dir.path(), "g.csv", &gaussian_rows(21, 10, 32));
    let o = becr(&["becr", csv.to_str().unwrap(), "--grad-check", "--epsilon", "0.99"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s: BecrSummary = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(s.penalty > 0.0);
    assert!(s.grad_check_max_rel_error.unwrap() < 1e-4);
}

#[test]
fn becr_degenerate_and_bad_parameters() {
    let dir = TempDir::new().unwrap();
    let csv = write_csv(dir.path(), "same.csv", &vec![vec![1.0, 2.0]; 4]);
    let o = becr(&["becr", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(!stderr(&o).is_empty());
    let ok = write_csv(dir.path(), "ok.csv", &gaussian_rows(2, 6, 3));
    assert_eq!(becr(&["becr", ok.to_str().unwrap(), "--epsilon", "1.5"]).status.code(), Some(1));
    assert_eq!(becr(&["becr", ok.to_str().unwrap(), "--lambda", "-0.1"]).status.code(), Some(1));
    assert_eq!(becr(&["becr", "/nonexistent/x.csv"]).status.code(), Some(2));
}

#[test]
fn metrics_and_becr_agree_on_gini() {
    let dir = TempDir::new().unwrap();
    let csv = write_csv(dir.path(), "a.csv", &gaussian_rows(8, 12, 40));
    let m = ReportFile::from_json(&stdout(&becr(&["metrics", csv.to_str().unwrap()]))).unwrap();
    let b: BecrSummary = serde_json::from_str(&stdout(&becr(&["becr", csv.to_str().unwrap()]))).unwrap();
    assert_eq!(m.gini_index.unwrap().to_bits(), b.gini.to_bits());
}

#[test]
fn commands_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let csv = write_csv(dir.path(), "d.csv", &gaussian_rows(4, 60, 6));
    let a = becr(&["metrics", csv.to_str().unwrap(), "--seed", "17"]);
    let b = becr(&["metrics", csv.to_str().unwrap(), "--seed", "17"]);
    assert_eq!(a.stdout, b.stdout);
    let wav = write_wav(dir.path(), "t.wav", 8000, &tone(300.0, 8000, 8000));
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_becr"))
            .args(["spectrogram", wav.to_str().unwrap(), "--mode", "cqt", "--f-min", "55", "--n-bins", "48"])
            .env("BECR_THREADS", threads)
            .output()
            .unwrap()
    };
    let (one, two) = (run("1"), run("2"));
    assert!(one.status.success());
    assert_eq!(one.stdout, two.stdout);
}

#[test]
fn invalid_thread_setting() {
    let o = Command::new(env!("CARGO_BIN_EXE_becr"))
        .args(["bench", "--dims", "4", "--repeats", "1"])
        .env("BECR_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn stft_of_a_440_hz_tone() {
    let dir = TempDir::new().unwrap();
    let wav = write_wav(dir.path(), "a4.wav", 44100, &tone(440.0, 44100, 44100));
    let out = dir.path().join("s.csv");
    let meta = dir.path().join("s.json");
    let o = becr(&[
        "spectrogram",
        wav.to_str().unwrap(),
        "--mode",
        "stft",
        "--window-size",
        "1024",
        "--out",
        out.to_str().unwrap(),
        "--meta",
        meta.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (freqs, frames) = read_spectrogram(&out);
    assert_eq!(freqs.len(), 513);
    assert_eq!(frames.len(), 1 + (44100 - 1024) / 256);
    for f in &frames {
        assert_eq!(argmax(f), 10);
    }
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(meta).unwrap()).unwrap();
    assert_eq!(m["axis"], "linear_hz");
    assert_eq!(m["hop_seconds"], 256.0 / 44100.0);
    assert_eq!(m["sample_rate"], 44100);
}

#[test]
fn silence_gives_zeros_in_every_mode() {
    let dir = TempDir::new().unwrap();
    let wav = write_wav(dir.path(), "quiet.wav", 16000, &vec![0.0; 16000]);
    for mode in ["stft", "mel", "cqt"] {
        let out = dir.path().join(format!("{mode}.csv"));
        let o = becr(&["spectrogram", wav.to_str().unwrap(), "--mode", mode, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{mode}: {}", stderr(&o));
        let (_, frames) = read_spectrogram(&out);
        assert!(!frames.is_empty());
        assert!(frames.iter().flatten().all(|v| *v == 0.0), "{mode}");
    }
}

#[test]
fn cqt_of_a_low_c_tone() {
    let dir = TempDir::new().unwrap();
    let wav = write_wav(dir.path(), "c2.wav", 22050, &tone(65.4, 22050, 3 * 22050));
    let out = dir.path().join("c.csv");
    let o = becr(&[
        "spectrogram",
        wav.to_str().unwrap(),
        "--mode",
        "cqt",
        "--f-min",
        "32.70",
        "--bins-per-octave",
        "12",
        "--n-bins",
        "48",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (freqs, frames) = read_spectrogram(&out);
    assert_eq!(freqs[12], 65.4);
    let mean: Vec<f64> = (0..freqs.len())
        .map(|k| frames.iter().map(|f| f[k]).sum::<f64>() / frames.len() as f64)
        .collect();
    assert_eq!(argmax(&mean), 12);
}

#[test]
fn mel_mode_peaks_near_the_tone() {
    let dir = TempDir::new().unwrap();
    let wav = write_wav(dir.path(), "k.wav", 16000, &tone(1000.0, 16000, 16000));
    let out = dir.path().join("m.csv");
    let o = becr(&["spectrogram", wav.to_str().unwrap(), "--mode", "mel", "--n-mels", "40", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (mels, frames) = read_spectrogram(&out);
    let peak_mel = mels[argmax(&frames[5])];
    let peak_hz = 700.0 * (10f64.powf(peak_mel / 2595.0) - 1.0);
    assert!((peak_hz - 1000.0).abs() < 150.0, "{peak_hz}");
}

#[test]
fn spectrogram_input_errors() {
    let dir = TempDir::new().unwrap();
    let wav = write_wav(dir.path(), "lo.wav", 6000, &tone(100.0, 6000, 6000));
    let o = becr(&["spectrogram", wav.to_str().unwrap(), "--mode", "cqt"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("Nyquist"));

    let garbage = dir.path().join("g.wav");
    std::fs::write(&garbage, b"RIFF\x10\x00\x00\x00WAVEjunk").unwrap();
    assert_eq!(becr(&["spectrogram", garbage.to_str().unwrap()]).status.code(), Some(2));

    let path = dir.path().join("s24.wav");
    let spec = WavSpec {
        channels: 1,
        sample_rate: 8000,
        bits_per_sample: 24,
        sample_format: SampleFormat::Int,
    };
    let mut w = WavWriter::create(&path, spec).unwrap();
    for _ in 0..4096 {
        w.write_sample(0i32).unwrap();
    }
    w.finalize().unwrap();
    let o = becr(&["spectrogram", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unsupported"));

    assert_eq!(
        becr(&["spectrogram", wav.to_str().unwrap(), "--window-size", "1000"]).status.code(),
        Some(1)
    );
}

#[test]
fn spectrogram_csv_feeds_metrics() {
    let dir = TempDir::new().unwrap();
    let mut s = tone(440.0, 16000, 16000);
    for (i, v) in s.iter_mut().enumerate() {
        *v += 0.3 * (2.0 * PI * 1730.0 * i as f64 / 16000.0).sin() * (i as f64 / 16000.0);
    }
    let wav = write_wav(dir.path(), "mix.wav", 16000, &s);
    let out = dir.path().join("spec.csv");
    let o = becr(&["spectrogram", wav.to_str().unwrap(), "--window-size", "256", "--hop", "128", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = becr(&["metrics", out.to_str().unwrap(), "--header"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = ReportFile::from_json(&stdout(&o)).unwrap();
    assert_eq!(r.dim, 129);
    let g = r.gini_index.unwrap();
    assert!((0.0..=1.0).contains(&g));
}

#[test]
fn bench_checks_agreement_and_arguments() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("bench.json");
    let o = becr(&["bench", "--dims", "8,40", "-n", "10", "--repeats", "3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("eigen_ms"));
    let r: becr_cli::bench::BenchReport = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(r.rows.len(), 2);
    for row in &r.rows {
        assert!((row.gini_eigen - row.gini_gram).abs() <= 1e-8);
        assert!((row.gini_direct - row.gini_gram).abs() <= 1e-8);
    }
    assert_eq!(becr(&["bench", "--repeats", "0"]).status.code(), Some(1));
    assert_eq!(becr(&["bench", "-n", "1"]).status.code(), Some(1));
}

#[test]
fn usage_and_help_exit_codes() {
    assert_eq!(becr(&[]).status.code(), Some(1));
    assert_eq!(becr(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(becr(&["metrics"]).status.code(), Some(1));
    assert_eq!(becr(&["--help"]).status.code(), Some(0));
    assert_eq!(becr(&["--version"]).status.code(), Some(0));
}
