//! Test-only oracles and fixtures. Nothing here calls into the code paths it
//! is used to check.

#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::Path;

use aselect::fft::Complex64;
use aselect::tensor_io::{write_tensor, Dtype, FeatureMap};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn uniform_vec(rng: &mut StdRng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn normal_vec(rng: &mut StdRng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

pub fn random_map(rng: &mut StdRng, c: usize, h: usize, w: usize) -> FeatureMap {
    FeatureMap::new(c, h, w, uniform_vec(rng, c * h * w)).unwrap()
}

/// Naive O(n²) 2-D DFT, `X[u,v] = Σ x[h,w]·exp(−2πi(uh/H + vw/W))`. The
/// phase is reduced exactly in integers to a multiple of `1/(HW)` and looked
/// up in a table of directly evaluated twiddles.
pub fn naive_dft2(x: &[Complex64], height: usize, width: usize) -> Vec<Complex64> {
    let n = height * width;
    let table: Vec<Complex64> = (0..n)
        .map(|k| {
            let angle = -2.0 * PI * k as f64 / n as f64;
            Complex64::new(angle.cos(), angle.sin())
        })
        .collect();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for u in 0..height {
        for v in 0..width {
            let mut acc = Complex64::new(0.0, 0.0);
            for h in 0..height {
                let row = ((u * h) % height) * width;
                for w in 0..width {
                    let k = (row + ((v * w) % width) * height) % n;
                    acc += x[h * width + w] * table[k];
                }
            }
            out[u * width + v] = acc;
        }
    }
    out
}

/// Largest deviation relative to the largest oracle magnitude.
pub fn rel_max_err(got: &[Complex64], want: &[Complex64]) -> f64 {
    let scale = want.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    got.iter()
        .zip(want)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max)
        / scale
}

/// Fisher score from explicit `d × d` scatter matrices.
pub fn scatter_matrix_fisher(rows: &[Vec<f64>], labels: &[i64]) -> (f64, f64, f64) {
    let d = rows[0].len();
    let n = rows.len() as f64;
    let mut mu = vec![0.0; d];
    for r in rows {
        for j in 0..d {
            mu[j] += r[j] / n;
        }
    }
    let mut classes: Vec<i64> = labels.to_vec();
    classes.sort();
    classes.dedup();
    let mut sw = vec![vec![0.0; d]; d];
    let mut sb = vec![vec![0.0; d]; d];
    for &c in &classes {
        let members: Vec<&Vec<f64>> = rows.iter().zip(labels).filter(|(_, &l)| l == c).map(|(r, _)| r).collect();
        let nk = members.len() as f64;
        let mut mk = vec![0.0; d];
        for r in &members {
            for j in 0..d {
                mk[j] += r[j] / nk;
            }
        }
        for r in &members {
            for a in 0..d {
                for b in 0..d {
                    sw[a][b] += (r[a] - mk[a]) * (r[b] - mk[b]);
                }
            }
        }
        for a in 0..d {
            for b in 0..d {
                sb[a][b] += nk * (mk[a] - mu[a]) * (mk[b] - mu[b]);
            }
        }
    }
    let tr_w: f64 = (0..d).map(|i| sw[i][i]).sum();
    let tr_b: f64 = (0..d).map(|i| sb[i][i]).sum();
    (tr_b, tr_w, tr_b / tr_w)
}

/// Spearman by counting: rank_i = 1 + #{x_j < x_i} + (#{x_j = x_i} − 1)/2,
/// then the textbook Pearson formula on ranks.
pub fn spearman_by_counting(xs: &[f64], ys: &[f64]) -> f64 {
    let rank = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .map(|&a| {
                let less = v.iter().filter(|&&b| b < a).count() as f64;
                let eq = v.iter().filter(|&&b| b == a).count() as f64;
                1.0 + less + (eq - 1.0) / 2.0
            })
            .collect()
    };
    let (rx, ry) = (rank(xs), rank(ys));
    let n = xs.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx) * (a - mx)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my) * (b - my)).sum();
    cov / (vx * vy).sqrt()
}

/// Resolution/timestep table: (t, acc256, hfr256, acc512, hfr512,
/// acc1024, hfr1024), accuracies in percent.
pub const RESOLUTION_TABLE: [(u32, f64, f64, f64, f64, f64, f64); 21] = [
    (1, 71.5, 0.6163, 72.3, 0.6199, 65.2, 0.6180),
    (50, 69.3, 0.6131, 78.6, 0.6223, 66.2, 0.6195),
    (100, 68.2, 0.6110, 77.9, 0.6221, 67.8, 0.6208),
    (150, 62.0, 0.6092, 75.0, 0.6217, 74.8, 0.6234),
    (200, 61.3, 0.6077, 72.2, 0.6212, 69.7, 0.6164),
    (250, 57.8, 0.6059, 67.3, 0.6200, 72.4, 0.6144),
    (300, 46.5, 0.6045, 63.9, 0.6201, 70.0, 0.6128),
    (350, 34.0, 0.6031, 64.8, 0.6186, 63.3, 0.6111),
    (400, 27.5, 0.6020, 63.6, 0.6171, 68.2, 0.6096),
    (450, 26.2, 0.6011, 57.7, 0.6155, 53.3, 0.6082),
    (500, 14.3, 0.5998, 37.2, 0.6138, 52.0, 0.6067),
    (550, 14.5, 0.5987, 27.2, 0.6123, 51.7, 0.6055),
    (600, 11.7, 0.5977, 27.5, 0.6112, 46.2, 0.6048),
    (650, 7.3, 0.5962, 19.8, 0.6100, 36.3, 0.6039),
    (700, 5.7, 0.5943, 15.5, 0.6090, 38.7, 0.6034),
    (750, 4.3, 0.5916, 12.3, 0.6075, 24.4, 0.6025),
    (800, 3.5, 0.5889, 8.0, 0.6063, 16.8, 0.6019),
    (850, 2.0, 0.5857, 4.2, 0.6042, 11.1, 0.6000),
    (900, 1.7, 0.5824, 2.0, 0.6013, 8.2, 0.5959),
    (950, 1.2, 0.5711, 1.3, 0.5946, 2.7, 0.5851),
    (1000, 1.2, 0.5720, 0.8, 0.5870, 0.8, 0.5789),
];

/// Columns of [`RESOLUTION_TABLE`] as `(accuracy, hfr)` series.
pub fn table_column(resolution: u32) -> Vec<(u32, f64, f64)> {
    RESOLUTION_TABLE
        .iter()
        .map(|r| match resolution {
            256 => (r.0, r.1, r.2),
            512 => (r.0, r.3, r.4),
            1024 => (r.0, r.5, r.6),
            _ => panic!("no column for {resolution}"),
        })
        .collect()
}

/// Write `t,value` CSV.
pub fn write_series(path: &Path, header: &str, rows: &[(u32, f64)]) {
    let mut s = format!("t,{header}\n");
    for (t, v) in rows {
        s.push_str(&format!("{t},{v}\n"));
    }
    std::fs::write(path, s).unwrap();
}

/// Write 1-channel 1×1 tensors with the given values and labels plus a
/// manifest at timestep 1.
pub fn write_scalar_manifest(dir: &Path, values: &[f64], labels: &[i64]) -> std::path::PathBuf {
    let mut entries = Vec::new();
    for (i, (&v, &l)) in values.iter().zip(labels).enumerate() {
        let name = format!("s{i}.npy");
        write_tensor(&FeatureMap::new(1, 1, 1, vec![v]).unwrap(), dir.join(&name), Dtype::F64).unwrap();
        entries.push(serde_json::json!({
            "path": name, "image_id": format!("s{i}"), "timestep": 1, "group": "", "label": l, "accuracy": null
        }));
    }
    let path = dir.join("manifest.json");
    std::fs::write(
        &path,
        serde_json::to_string(&serde_json::json!({"total_timesteps": 1, "entries": entries})).unwrap(),
    )
    .unwrap();
    path
}

/// Raw tensor file with an arbitrary header dict (padded to 64 bytes) and
/// payload.
pub fn npy_bytes(dict: &str, payload: &[u8]) -> Vec<u8> {
    let mut header = dict.as_bytes().to_vec();
    let unpadded = 10 + header.len() + 1;
    header.extend(std::iter::repeat_n(b' ', (64 - unpadded % 64) % 64));
    header.push(b'\n');
    let mut out = b"\x93NUMPY\x01\x00".to_vec();
    out.extend((header.len() as u16).to_le_bytes());
    out.extend(header);
    out.extend_from_slice(payload);
    out
}

fn f64_payload(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

/// Twenty deliberately broken tensor files and the error class each must
/// raise.
pub fn corrupted_fixtures() -> Vec<(&'static str, Vec<u8>, &'static str)> {
    let ok_dict = "{'descr': '<f8', 'fortran_order': False, 'shape': (1, 2, 2), }";
    let four = f64_payload(&[1.0, 2.0, 3.0, 4.0]);
    let good = npy_bytes(ok_dict, &four);

    let mut bad_magic = good.clone();
    bad_magic[1] = b'X';
    let mut bad_version = good.clone();
    bad_version[6] = 3;
    let mut long_header = good.clone();
    long_header[8..10].copy_from_slice(&u16::MAX.to_le_bytes());
    let mut non_ascii = good.clone();
    // Overwrite one padding space.
    non_ascii[10 + ok_dict.len() + 1] = 0xC3;
    let mut truncated = good.clone();
    truncated.pop();
    let mut extra = good.clone();
    extra.extend([0u8; 8]);

    vec![
        ("bad magic", bad_magic, "MalformedHeader"),
        ("unsupported version", bad_version, "MalformedHeader"),
        ("header length past end of file", long_header, "MalformedHeader"),
        ("empty file", Vec::new(), "MalformedHeader"),
        ("header is not a dict", npy_bytes("['<f8', False, (1, 2, 2)]", &four), "MalformedHeader"),
        (
            "missing shape key",
            npy_bytes("{'descr': '<f8', 'fortran_order': False, }", &four),
            "MalformedHeader",
        ),
        (
            "unterminated dict",
            npy_bytes("{'descr': '<f8', 'fortran_order': False, 'shape': (1, 2, 2)", &four),
            "MalformedHeader",
        ),
        (
            "garbage shape",
            npy_bytes("{'descr': '<f8', 'fortran_order': False, 'shape': (1, two, 2), }", &four),
            "MalformedHeader",
        ),
        ("non-ascii header", non_ascii, "MalformedHeader"),
        (
            "fortran order",
            npy_bytes("{'descr': '<f8', 'fortran_order': True, 'shape': (1, 2, 2), }", &four),
            "MalformedHeader",
        ),
        (
            "zero-sized dimension",
            npy_bytes("{'descr': '<f8', 'fortran_order': False, 'shape': (0, 2, 2), }", &[]),
            "MalformedHeader",
        ),
        ("truncated payload", truncated, "MalformedHeader"),
        ("trailing bytes", extra, "MalformedHeader"),
        (
            "int32 payload",
            npy_bytes("{'descr': '<i4', 'fortran_order': False, 'shape': (1, 2, 2), }", &[0u8; 16]),
            "UnsupportedDtype",
        ),
        (
            "big-endian f8",
            npy_bytes("{'descr': '>f8', 'fortran_order': False, 'shape': (1, 2, 2), }", &four),
            "UnsupportedDtype",
        ),
        (
            "half precision",
            npy_bytes("{'descr': '<f2', 'fortran_order': False, 'shape': (1, 2, 2), }", &[0u8; 8]),
            "UnsupportedDtype",
        ),
        (
            "rank 1",
            npy_bytes("{'descr': '<f8', 'fortran_order': False, 'shape': (4,), }", &four),
            "RankError",
        ),
        (
            "rank 4",
            npy_bytes("{'descr': '<f8', 'fortran_order': False, 'shape': (1, 1, 2, 2), }", &four),
            "RankError",
        ),
        (
            "NaN payload",
            npy_bytes(ok_dict, &f64_payload(&[1.0, f64::NAN, 3.0, 4.0])),
            "NonFiniteValue",
        ),
        (
            "infinite payload",
            npy_bytes(ok_dict, &f64_payload(&[1.0, 2.0, f64::NEG_INFINITY, 4.0])),
            "NonFiniteValue",
        ),
    ]
}
