use nalgebra::DMatrix;
use proptest::prelude::*;

use super::*;
use crate::error::Error;
use crate::linops::ImageGrid;
use crate::solver::{IterationRecord, Trace};

fn quantized(h: usize, w: usize, bytes: &[u8]) -> ImageGrid {
    ImageGrid::new(h, w, bytes.iter().map(|&b| dequantize(b)).collect()).unwrap()
}

#[test]
fn quantize_rounds_half_up_and_clamps() {
    assert_eq!(quantize(0.5).unwrap(), 128);
    assert_eq!(quantize(0.0).unwrap(), 0);
    assert_eq!(quantize(1.0).unwrap(), 255);
    assert_eq!(quantize(-3.0).unwrap(), 0);
    assert_eq!(quantize(7.0).unwrap(), 255);
    assert_eq!(quantize(126.5 / 255.0).unwrap(), 127);
    assert!(quantize(f64::NAN).is_err());
}

#[test]
fn single_pixel_half_is_byte_128() {
    let img = ImageGrid::filled(1, 1, 0.5);
    let pgm = encode_pgm(&img).unwrap();
    assert_eq!(pgm, b"P5\n1 1\n255\n\x80");
}

#[test]
fn pgm_header_parsing() {
    let bytes = b"P5\n# made by hand\n2 1 # trailing\n255\n\x00\xff";
    let img = decode_pgm(bytes).unwrap();
    assert_eq!(img.shape(), (1, 2));
    assert_eq!(img.as_slice(), &[0.0, 1.0]);

    let bad_max = b"P5\n1 1\n65535\n\x00\x00";
    assert!(matches!(decode_pgm(bad_max), Err(Error::Format(_))));
    let ascii = b"P2\n1 1\n255\n0";
    assert!(matches!(decode_pgm(ascii), Err(Error::Format(_))));
    let short = b"P5\n2 2\n255\n\x00";
    assert!(matches!(decode_pgm(short), Err(Error::Format(_))));
    let no_sep = b"P5\n1 1\n255";
    assert!(matches!(decode_pgm(no_sep), Err(Error::Format(_))));
}

#[test]
fn png_rejects_other_depths() {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, 1, 1);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Sixteen);
        let mut w = enc.write_header().unwrap();
        w.write_image_data(&[0, 0]).unwrap();
    }
    assert!(matches!(decode_png(&out), Err(Error::Format(_))));
    assert!(decode_png(b"not a png").is_err());
}

#[test]
fn files_dispatch_on_extension() {
    let dir = tempfile::tempdir().unwrap();
    let img = quantized(2, 3, &[0, 10, 20, 30, 40, 255]);
    for name in ["a.pgm", "a.PNG"] {
        let p = dir.path().join(name);
        write_image(&p, &img).unwrap();
        assert_eq!(read_image(&p).unwrap(), img);
    }
    assert!(matches!(
        write_image(dir.path().join("a.bmp"), &img),
        Err(Error::Format(_))
    ));
    assert!(matches!(
        read_image(dir.path().join("missing.pgm")),
        Err(Error::Io { .. })
    ));
}

proptest! {
    #[test]
    fn image_round_trip_is_exact(h in 1usize..9, w in 1usize..9, seed in any::<u64>()) {
        let mut rng = crate::SeededRng::new(seed);
        let bytes: Vec<u8> = (0..h * w).map(|_| (rng.uniform() * 256.0) as u8).collect();
        let img = quantized(h, w, &bytes);
        prop_assert_eq!(&decode_pgm(&encode_pgm(&img).unwrap()).unwrap(), &img);
        prop_assert_eq!(&decode_png(&encode_png(&img).unwrap()).unwrap(), &img);
    }

    #[test]
    fn quantization_is_idempotent(v in -1.0f64..2.0) {
        let b = quantize(v).unwrap();
        prop_assert_eq!(quantize(dequantize(b)).unwrap(), b);
        prop_assert!((dequantize(b) - v.clamp(0.0, 1.0)).abs() <= 0.5 / 255.0 + 1e-15);
    }

    #[test]
    fn trace_round_trip_is_exact(
        rows in proptest::collection::vec(
            (any::<f64>(), -1e300f64..1e300, 0.0f64..1.0, proptest::option::of(-50.0f64..80.0)),
            0..20,
        ),
        phi0 in any::<f64>(),
    ) {
        // NaN never equals itself; compare everything else exactly
        prop_assume!(!phi0.is_nan() && rows.iter().all(|r| !r.0.is_nan()));
        let records = rows
            .iter()
            .enumerate()
            .map(|(i, &(phi, psi, tol, snr))| IterationRecord {
                iter: i + 1, phi, psi, tol, snr, time_ms: 0.0,
            })
            .collect();
        let file = TraceFile::new(
            vec![("method".into(), "ubama".into()), ("seed".into(), "7".into())],
            Trace { initial_phi: phi0, records },
        );
        let back = parse_trace(&format_trace(&file).unwrap()).unwrap();
        prop_assert_eq!(back, file);
    }
}

#[test]
fn empty_trace_is_header_only() {
    let file = TraceFile::new(vec![("method".into(), "palm".into())], Trace::default());
    let text = format_trace(&file).unwrap();
    assert_eq!(text, "# phi0=0\n# method=palm\niter,phi,psi,tol,snr,time_ms\n");
    assert_eq!(parse_trace(&text).unwrap(), file);
}

#[test]
fn trace_writes_inf_and_blank_snr() {
    let rec = |snr| IterationRecord {
        iter: 1,
        phi: 2.5,
        psi: 3.0,
        tol: 0.125,
        time_ms: 0.0,
        snr,
    };
    let file = TraceFile::new(
        vec![],
        Trace {
            initial_phi: 4.0,
            records: vec![rec(Some(f64::INFINITY)), rec(None)],
        },
    );
    let text = format_trace(&file).unwrap();
    assert!(text.ends_with("1,2.5,3,0.125,inf,0\n1,2.5,3,0.125,,0\n"), "{text}");
    assert!(text.is_ascii() && !text.contains(';'));
    assert_eq!(parse_trace(&text).unwrap(), file);
}

#[test]
fn trace_rejects_wrong_columns_and_bad_header() {
    assert!(parse_trace("# phi0=1\niter,phi\n").is_err());
    assert!(parse_trace("iter,phi,psi,tol,snr,time_ms\n").is_err());
    assert!(parse_trace("# phi0=1\n# oops\niter,phi,psi,tol,snr,time_ms\n").is_err());
    assert!(parse_trace("# phi0=1\niter,phi,psi,tol,snr,time_ms\n1,x,1,1,,0\n").is_err());
}

fn trial(i: usize) -> TrialRow {
    TrialRow {
        trial: i,
        seed: 100 + i as u64,
        iterations: 10 + 3 * i,
        rel_x: 1e-3 * (i as f64 + 1.0),
        rel_y: 0.1 / (i as f64 + 1.0),
        rank: 8,
        nnz: 500 + i,
        obj: 12.0 - i as f64,
        time_s: 0.0,
    }
}

#[test]
fn summary_ends_with_recomputable_average() {
    let rows: Vec<_> = (0..10).map(trial).collect();
    let header = vec![("n".to_string(), "256".to_string())];
    let text = format_summary(&header, &rows).unwrap();
    let last = text.lines().last().unwrap();
    assert!(last.starts_with("avg,,"), "{last}");

    let parsed = parse_summary(&text).unwrap();
    assert_eq!(parsed.rows, rows);
    assert_eq!(parsed.header, header);
    // independent means
    let it: f64 = (0..10).map(|i| 10.0 + 3.0 * i as f64).sum::<f64>() / 10.0;
    assert_eq!(parsed.avg.iterations, it);
    assert_eq!(parsed.avg.iterations, 23.5);
    let rx: f64 = (1..=10).map(|k| 1e-3 * k as f64).sum::<f64>() / 10.0;
    assert!((parsed.avg.rel_x - rx).abs() <= 1e-15);
    assert_eq!(parsed.avg.rank, 8.0);

    let tampered = text.replace("avg,,23.5", "avg,,24.5");
    assert!(matches!(parse_summary(&tampered), Err(Error::Format(_))));
    let missing: String = text.lines().filter(|l| !l.starts_with("avg")).map(|l| format!("{l}\n")).collect();
    assert!(parse_summary(&missing).is_err());
    assert!(format_summary(&header, &[]).is_err());
}

#[test]
fn matrix_round_trip_and_ragged_rows() {
    let m = DMatrix::from_fn(3, 4, |i, j| (i as f64 - 1.3) * 10f64.powi(j as i32 - 2));
    let text = format_matrix(&m).unwrap();
    assert_eq!(parse_matrix(&text).unwrap(), m);
    assert!(parse_matrix("1,2\n3\n").is_err());
    assert!(parse_matrix("").is_err());

    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m.csv");
    write_matrix(&p, &m).unwrap();
    assert_eq!(read_matrix(&p).unwrap(), m);
}

#[test]
fn file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let file = TraceFile::new(
        vec![("seed".into(), "3".into())],
        Trace {
            initial_phi: 1.0,
            records: vec![IterationRecord {
                iter: 1,
                phi: 0.5,
                psi: 0.75,
                tol: 1e-3,
                time_ms: 1.25,
                snr: Some(12.0),
            }],
        },
    );
    let p = dir.path().join("t.csv");
    write_trace(&p, &file).unwrap();
    assert_eq!(read_trace(&p).unwrap(), file);
    assert_eq!(read_trace(&p).unwrap().get("seed"), Some("3"));

    let s = dir.path().join("s.csv");
    let rows: Vec<_> = (0..3).map(trial).collect();
    write_summary(&s, &vec![], &rows).unwrap();
    assert_eq!(read_summary(&s).unwrap().rows, rows);
    assert!(matches!(
        write_trace(dir.path().join("no/such/dir.csv"), &file),
        Err(Error::Io { .. })
    ));
}
