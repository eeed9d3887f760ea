//! Acceptance run. Prints one `PASS`/`FAIL` line per criterion with the
//! measured values and runtime, then checks the set of failures against
//! `EXPECTED_FAILURES`.

use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use satrdo::parallel::{build_rd_table, denoise, synthesize_ugc, with_jobs};
use satrdo_core::codec::huffman::{category, HuffmanTable};
use satrdo_core::codec::{
    default_quality_ladder, dct8x8_forward, dct8x8_inverse, PatchCodec, PatchDims, QualityValue, ZIGZAG,
};
use satrdo_core::denoise::DenoiserSpec;
use satrdo_core::metrics::frame_set_sse;
use satrdo_core::pipeline::{detect_from_table, Detection, DetectionConfig};
use satrdo_core::rdo::{solve_rdo, sweep, PatchRdTable, QvPoint, RdCurve, RdEntry, RdPoint, Reference};
use satrdo_core::saturation::{
    default_lambda_grid, detect_lambda_u, detect_lambda_z, detect_qv_star, geometric_bound, lambda_to_qp,
    qp_to_lambda, BoundSource, SaturationBounds, Verdict,
};
use satrdo_core::synth::{procedural_frames, SynthSpec};
use satrdo_core::{FrameSet, PatchGrid};

// Pinned tolerances and limits.
const LAMBDA_12_TOL: f64 = 1e-12;
const RANDOM_TRIPLES: usize = 1000;
const ORACLE_LAMBDAS: usize = 100;
const MAX_QP_GAP: i64 = 6;
const CODEC_PATCHES: usize = 500;
const CODEC_QVS: [i64; 5] = [10, 30, 50, 75, 95];
const DCT_ROUND_TRIP_TOL: f64 = 1e-10;
const PARSEVAL_REL_TOL: f64 = 1e-8;
/// Standard deviation used as the over-smoothing reference.
const AGGRESSIVE_SIGMA: f64 = 4.0;

const LIMIT_LAMBDA_MAP: Duration = Duration::from_secs(1);
const LIMIT_GEOMETRY: Duration = Duration::from_secs(5);
const LIMIT_ORACLE: Duration = Duration::from_secs(5);
const LIMIT_SWEEP: Duration = Duration::from_secs(120);
const LIMIT_E2E_SINGLE: Duration = Duration::from_secs(180);
const LIMIT_E2E_FOUR: Duration = Duration::from_secs(60);
const LIMIT_CODEC: Duration = Duration::from_secs(30);

// Fixture: 10 procedural 480x360 frames, seed 1, coded at quality 25
// without added noise; detection samples 5 of them.
const FIXTURE_WIDTH: usize = 480;
const FIXTURE_HEIGHT: usize = 360;
const FIXTURE_FRAMES: usize = 10;
const FIXTURE_SEED: u64 = 1;
const FIXTURE_SEVERITY: i64 = 25;

/// Criteria known to fail on the pinned fixture. Keep in sync with the
/// printed report; the test fails if this list goes stale either way.
const EXPECTED_FAILURES: &[&str] = &["denoiser-robustness", "degenerate-cases"];

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
    elapsed: Duration,
    limit: Option<Duration>,
}

#[derive(Default)]
struct Report {
    outcomes: Vec<Outcome>,
}

impl Report {
    fn record(&mut self, name: &'static str, limit: Option<Duration>, f: impl FnOnce() -> (bool, String)) {
        let t = Instant::now();
        let (ok, detail) = f();
        self.push(name, ok, detail, t.elapsed(), limit);
    }

    fn push(&mut self, name: &'static str, ok: bool, detail: String, elapsed: Duration, limit: Option<Duration>) {
        let in_time = limit.is_none_or(|l| elapsed < l);
        let o = Outcome {
            name,
            pass: ok && in_time,
            detail,
            elapsed,
            limit,
        };
        let timing = match o.limit {
            Some(l) => format!("{:.2} s, limit {} s", o.elapsed.as_secs_f64(), l.as_secs()),
            None => format!("{:.2} s", o.elapsed.as_secs_f64()),
        };
        println!("{} {:<22} {} [{timing}]", if o.pass { "PASS" } else { "FAIL" }, o.name, o.detail);
        self.outcomes.push(o);
    }
}

fn qv(v: i64) -> QualityValue {
    QualityValue::new(v).unwrap()
}

fn norm_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn fixture() -> FrameSet {
    let pristine = procedural_frames(FIXTURE_WIDTH, FIXTURE_HEIGHT, FIXTURE_FRAMES, FIXTURE_SEED).unwrap();
    synthesize_ugc(&pristine, &SynthSpec::new(qv(FIXTURE_SEVERITY), 0.0, 0).unwrap()).unwrap()
}

/// Sample, denoise, build the table and detect, all on the current pool.
fn detect_fixture(u: &FrameSet, denoiser: &DenoiserSpec) -> (Detection, PatchRdTable) {
    let config = DetectionConfig::default();
    let sampled = u.sample(config.sample_count).unwrap();
    let z = denoise(&sampled, denoiser).unwrap();
    let grid = PatchGrid::new(&sampled, config.patch_width, config.patch_height).unwrap();
    let table = build_rd_table(&sampled, &z, &grid, &config.qualities).unwrap();
    let det = detect_from_table(&table, frame_set_sse(&sampled, &z), &config).unwrap();
    (det, table)
}

fn hand_curve(reference: Reference, rates: &[u64], sse_u: &[u64], sse_z: &[u64]) -> RdCurve {
    RdCurve {
        reference,
        points: (0..rates.len())
            .map(|i| RdPoint {
                lambda: f64::from(1u32 << i),
                total_rate_bits: rates[i],
                sse_vs_u: sse_u[i],
                sse_vs_z: sse_z[i],
                choices: vec![],
            })
            .collect(),
    }
}

fn qv_points(sse_z: &[u64], last_sse_u: u64) -> Vec<QvPoint> {
    let n = sse_z.len();
    (0..n)
        .map(|i| QvPoint {
            qv: qv(19 + 19 * i as i64),
            rate_bits: 100 * (i as u64 + 1),
            sse_vs_u: if i + 1 == n { last_sse_u } else { 50 },
            sse_vs_z: sse_z[i],
        })
        .collect()
}

/// Bits implied by the quantized blocks and the code lengths alone.
fn audit_bits(blocks: &[[i32; 64]]) -> u64 {
    let (dc, ac) = (HuffmanTable::dc_luma(), HuffmanTable::ac_luma());
    let mut bits = 0u64;
    let mut pred = 0;
    for q in blocks {
        let size = category(q[0] - pred);
        pred = q[0];
        bits += u64::from(dc.code_len(size)) + u64::from(size);
        let mut run = 0u64;
        for &i in &ZIGZAG[1..] {
            if q[i] == 0 {
                run += 1;
                continue;
            }
            bits += u64::from(ac.code_len(0xf0)) * (run / 16);
            let size = category(q[i]);
            bits += u64::from(ac.code_len((((run % 16) as u8) << 4) | size)) + u64::from(size);
            run = 0;
        }
        if run > 0 {
            bits += u64::from(ac.code_len(0x00));
        }
    }
    bits
}

fn lambda_map() -> (bool, String) {
    let err = (qp_to_lambda(12).unwrap() - 0.852).abs();
    let grid: Vec<f64> = (0..=51).map(|q| qp_to_lambda(q).unwrap()).collect();
    let monotone = grid.windows(2).all(|w| w[0] < w[1]);
    let round_trips = (0..=51i64)
        .filter(|&q| i64::from(lambda_to_qp(grid[q as usize]).unwrap()) == q)
        .count();
    (
        err <= LAMBDA_12_TOL && monotone && round_trips == 52,
        format!("|lambda(12) - 0.852| = {err:e}, strictly increasing: {monotone}, round trips {round_trips}/52"),
    )
}

fn random_triples() -> usize {
    let mut rng = StdRng::seed_from_u64(2024);
    let mut v = || (0..64).map(|_| rng.random_range(-255.0..255.0)).collect::<Vec<f64>>();
    (0..RANDOM_TRIPLES)
        .filter(|_| {
            let (x, u, z) = (v(), v(), v());
            geometric_bound(norm_sq(&x, &z), norm_sq(&u, &z), norm_sq(&x, &u)).unwrap()
        })
        .count()
}

fn rdo_oracle() -> (bool, String) {
    let mut rng = StdRng::seed_from_u64(77);
    let qvs: Vec<QualityValue> = [19, 35, 50, 75, 95].map(qv).to_vec();
    let rows: Vec<Vec<RdEntry>> = (0..3)
        .map(|_| {
            (0..5)
                .map(|_| RdEntry {
                    rate_bits: rng.random_range(0..2000),
                    sse_u: rng.random_range(0..50_000),
                    sse_z: rng.random_range(0..50_000),
                })
                .collect()
        })
        .collect();
    let table = PatchRdTable::from_rows(qvs, rows, 3 * 64).unwrap();
    let assignments: Vec<[usize; 3]> = (0..125).map(|i| [i / 25, (i / 5) % 5, i % 5]).collect();
    let mut agree = 0;
    let mut checked = 0;
    for _ in 0..ORACLE_LAMBDAS {
        let lambda = 10f64.powf(rng.random_range(-3.0..3.0));
        for reference in [Reference::U, Reference::Z] {
            let cost = |c: &[usize]| {
                let t = table.totals(c);
                t.sse(reference) as f64 + lambda * t.rate_bits as f64
            };
            let best = assignments.iter().map(|c| cost(c)).fold(f64::INFINITY, f64::min);
            let p = solve_rdo(&table, lambda, reference).unwrap();
            checked += 1;
            if cost(&p.choices) == best {
                agree += 1;
            }
        }
    }
    (
        agree == checked,
        format!("{agree}/{checked} (lambda, reference) pairs equal the minimum over 125 assignments"),
    )
}

fn hand_tables() -> (bool, String) {
    let mut bad = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            bad.push(name.to_string());
        }
    };
    let dummy = [0u64; 5];
    let z = hand_curve(Reference::Z, &dummy, &dummy, &[95, 93, 98, 112, 130]);
    let b = SaturationBounds::new(100, 10, 1.0, BoundSource::ZSweep);
    check("lambda_z prefix", detect_lambda_z(&z, &b).unwrap() == Some(2));
    let z = hand_curve(Reference::Z, &dummy, &dummy, &[150, 100, 100, 100, 100]);
    check("lambda_z empty", detect_lambda_z(&z, &b).unwrap().is_none());
    let u = hand_curve(Reference::U, &[100, 80, 60, 40, 20], &dummy, &dummy);
    check("lambda_u 55", detect_lambda_u(&u, 55).unwrap() == 3 && u.points[3].lambda == 8.0);
    check("lambda_u max", detect_lambda_u(&u, 100).unwrap() == 0);
    check("lambda_u min", detect_lambda_u(&u, 20).unwrap() == 4);
    check(
        "qv_star suffix",
        detect_qv_star(&qv_points(&[130, 110, 103, 102, 101], 4), 100).unwrap() == Some(2),
    );
    check("qv_star all", detect_qv_star(&qv_points(&[101, 102, 99, 100, 101], 4), 100).unwrap() == Some(0));
    check("qv_star last", detect_qv_star(&qv_points(&[130, 120, 110, 108, 103], 4), 100).unwrap() == Some(4));
    let table = PatchRdTable::from_rows(
        [19, 50, 95].map(qv).to_vec(),
        vec![vec![
            RdEntry { rate_bits: 10, sse_u: 50, sse_z: 50 },
            RdEntry { rate_bits: 20, sse_u: 20, sse_z: 20 },
            RdEntry { rate_bits: 40, sse_u: 5, sse_z: 5 },
        ]],
        64,
    )
    .unwrap();
    for (lambda, want) in [(1.0, 1), (0.1, 2), (10.0, 0)] {
        check("rdo hand table", solve_rdo(&table, lambda, Reference::U).unwrap().choices == [want]);
    }
    (bad.is_empty(), if bad.is_empty() { "11/11 hand answers reproduced".into() } else { format!("wrong: {bad:?}") })
}

fn codec_self_consistency() -> (bool, String) {
    let mut rng = StdRng::seed_from_u64(5);
    let codec = PatchCodec::new();
    let dims = PatchDims::new(48, 40).unwrap();
    let (mut round_trip_bad, mut audit_bad, mut len_bad) = (0, 0, 0);
    for i in 0..CODEC_PATCHES {
        // alternate smooth, textured and noisy content
        let (a, f, noise) = (rng.random_range(0.0..100.0), rng.random_range(0.0..1.0), [0.0, 8.0, 60.0][i % 3]);
        let base = rng.random_range(40.0..200.0);
        let patch: Vec<u8> = (0..dims.pixels())
            .map(|p| {
                let (x, y) = ((p % 48) as f64, (p / 48) as f64);
                let v = base + a * (f * x + 0.7 * f * y).sin() + rng.random_range(-noise..=noise);
                v.round().clamp(0.0, 255.0) as u8
            })
            .collect();
        for &q in &CODEC_QVS {
            let enc = codec.encode(&patch, dims, qv(q)).unwrap();
            if codec.decode(&enc.bitstream, dims, qv(q)).unwrap() != enc.recon {
                round_trip_bad += 1;
            }
            if audit_bits(&codec.quantize(&patch, dims, qv(q)).unwrap()) != enc.rate_bits {
                audit_bad += 1;
            }
            // payload length in whole bytes, padding made of 1-bits only
            let pad = enc.bitstream.len() as u64 * 8 - enc.rate_bits;
            let last = enc.bitstream.last().copied().unwrap_or(0xff);
            if enc.bitstream.len() as u64 != enc.rate_bits.div_ceil(8) || last & ((1u16 << pad) - 1) as u8 != ((1u16 << pad) - 1) as u8 {
                len_bad += 1;
            }
        }
    }
    let mut max_err = 0.0f64;
    let mut max_parseval = 0.0f64;
    for _ in 0..CODEC_PATCHES {
        let block: [f64; 64] = std::array::from_fn(|_| rng.random_range(-128.0..128.0));
        let c = dct8x8_forward(&block);
        let back = dct8x8_inverse(&c);
        max_err = block.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(max_err, f64::max);
        let e_pix: f64 = block.iter().map(|v| v * v).sum();
        let e_coef: f64 = c.iter().map(|v| v * v).sum();
        max_parseval = max_parseval.max((e_pix - e_coef).abs() / e_pix);
    }
    let n = CODEC_PATCHES * CODEC_QVS.len();
    (
        round_trip_bad == 0 && audit_bad == 0 && len_bad == 0 && max_err < DCT_ROUND_TRIP_TOL && max_parseval < PARSEVAL_REL_TOL,
        format!(
            "{n} encodes: round-trip mismatches {round_trip_bad}, rate audit mismatches {audit_bad}, \
             payload length mismatches {len_bad}; DCT max error {max_err:.1e}, Parseval rel {max_parseval:.1e}"
        ),
    )
}

#[test]
fn acceptance() {
    let mut report = Report::default();

    report.record("lambda-map", Some(LIMIT_LAMBDA_MAP), lambda_map);
    report.record("rdo-oracle", Some(LIMIT_ORACLE), rdo_oracle);
    report.record("hand-tables", None, hand_tables);
    report.record("codec-consistency", Some(LIMIT_CODEC), codec_self_consistency);

    let u = fixture();
    let deblock = DenoiserSpec::Deblock { strength: 20.0 };
    let gaussian = DenoiserSpec::Gaussian { sigma: 1.5 };

    // single-threaded end to end, which also supplies the deblock curves
    let t = Instant::now();
    let (det, table) = with_jobs(Some(1), || detect_fixture(&u, &deblock));
    let single = t.elapsed();
    let t = Instant::now();
    let (det4, _) = with_jobs(Some(4), || detect_fixture(&u, &deblock));
    let four = t.elapsed();
    assert_eq!(det.result, det4.result, "pool size changed the result");

    {
        let t = Instant::now();
        let hits = random_triples();
        let measured = det
            .curve_u
            .points
            .iter()
            .filter(|p| geometric_bound(p.sse_vs_z as f64, det.d_uz as f64, p.sse_vs_u as f64).unwrap())
            .count();
        let n = det.curve_u.len();
        report.push(
            "geometric-inequality",
            hits == RANDOM_TRIPLES && measured == n,
            format!("random triples {hits}/{RANDOM_TRIPLES}, fixture U-sweep points {measured}/{n}"),
            t.elapsed(),
            Some(LIMIT_GEOMETRY),
        );
    }

    {
        let t = Instant::now();
        let sampled = u.sample(5).unwrap();
        let z = denoise(&sampled, &deblock).unwrap();
        let grid = PatchGrid::new(&sampled, 48, 40).unwrap();
        let rebuilt = build_rd_table(&sampled, &z, &grid, &default_quality_ladder()).unwrap();
        let lambdas = default_lambda_grid();
        let mut bad = Vec::new();
        for reference in [Reference::U, Reference::Z] {
            let c = sweep(&rebuilt, &lambdas, reference).unwrap();
            for (i, w) in c.points.windows(2).enumerate() {
                if w[1].total_rate_bits > w[0].total_rate_bits || w[1].sse(reference) < w[0].sse(reference) {
                    bad.push(format!("{reference}@{}", i + 1));
                }
            }
        }
        report.push(
            "sweep-monotonicity",
            bad.is_empty() && rebuilt == table && lambdas.len() == 52,
            format!(
                "{} patches x {} QVs, 52 lambdas, U and Z sweeps; violations {}",
                rebuilt.patches(),
                rebuilt.qualities().len(),
                if bad.is_empty() { "none".to_string() } else { bad.join(",") }
            ),
            t.elapsed(),
            Some(LIMIT_SWEEP),
        );
    }

    {
        let r = &det.result;
        let last = det.curve_u.len() - 1;
        let mut notes = Vec::new();
        let detected = r.verdict == Verdict::Detected;
        let u_idx = r.lambda_star_u_index;
        let interior = u_idx.is_some_and(|i| i > 0 && i < last);
        let rate_ok = match (u_idx, r.saturation_rate_bits) {
            (Some(i), Some(sat)) => {
                let here = det.curve_u.points[i].total_rate_bits <= sat;
                let before = i == 0 || det.curve_u.points[i - 1].total_rate_bits > sat;
                here && before
            }
            _ => false,
        };
        let prefix_ok = match r.lambda_star_z_index {
            Some(zi) => {
                let b = &r.bounds;
                let inside = det.curve_z.points[..=zi].iter().all(|p| b.contains(p.sse_vs_z));
                let next_out = zi == last || !b.contains(det.curve_z.points[zi + 1].sse_vs_z);
                inside && next_out
            }
            None => false,
        };
        if !detected {
            notes.push(format!("verdict {}", r.verdict));
        }
        let ok = detected && interior && rate_ok && prefix_ok;
        let limits_ok = single < LIMIT_E2E_SINGLE && four < LIMIT_E2E_FOUR;
        notes.push(format!(
            "lambda*_Z idx {:?}, lambda*_U idx {:?} of 0..={last} (QP* {:?}), rate at lambda*_U <= saturation rate \
             {rate_ok}, prefix/violation {prefix_ok}; 1 worker {:.2} s (limit {} s), 4 workers {:.2} s (limit {} s)",
            r.lambda_star_z_index,
            u_idx,
            r.qp_star,
            single.as_secs_f64(),
            LIMIT_E2E_SINGLE.as_secs(),
            four.as_secs_f64(),
            LIMIT_E2E_FOUR.as_secs()
        ));
        report.push("end-to-end-fixture", ok && limits_ok, notes.join("; "), single, None);
    }

    report.record("denoiser-robustness", None, || {
        let (g, _) = with_jobs(None, || detect_fixture(&u, &gaussian));
        let (qd, qg) = (det.result.qp_star, g.result.qp_star);
        let both = det.result.verdict == Verdict::Detected && g.result.verdict == Verdict::Detected;
        let gap = match (qd, qg) {
            (Some(a), Some(b)) => Some((i64::from(a) - i64::from(b)).abs()),
            _ => None,
        };
        (
            both && gap.is_some_and(|d| d <= MAX_QP_GAP),
            format!(
                "deblock:20 {} QP* {qd:?}, gaussian:1.5 {} QP* {qg:?}, |gap| {gap:?} (limit {MAX_QP_GAP})",
                det.result.verdict, g.result.verdict
            ),
        )
    });

    report.record("degenerate-cases", None, || {
        let (same, _) = with_jobs(None, || detect_fixture(&u, &DenoiserSpec::Gaussian { sigma: 0.0 }));
        let pristine = procedural_frames(FIXTURE_WIDTH, FIXTURE_HEIGHT, FIXTURE_FRAMES, FIXTURE_SEED).unwrap();
        let mild = synthesize_ugc(&pristine, &SynthSpec::new(qv(100), 0.0, 0).unwrap()).unwrap();
        let (smooth, _) = with_jobs(None, || detect_fixture(&mild, &DenoiserSpec::Gaussian { sigma: AGGRESSIVE_SIGMA }));
        let s = &smooth.result;
        let acceptable = match s.verdict {
            Verdict::NoSaturationInRange => true,
            Verdict::Detected => s.lambda_star_u_index == Some(0),
            Verdict::DegenerateReference => false,
        };
        (
            same.result.verdict == Verdict::DegenerateReference && acceptable,
            format!(
                "Z = U: {}; quality-100 input with gaussian:{AGGRESSIVE_SIGMA}: {} (lambda*_Z idx {:?}, lambda*_U idx {:?}, QP* {:?})",
                same.result.verdict, s.verdict, s.lambda_star_z_index, s.lambda_star_u_index, s.qp_star
            ),
        )
    });

    let failed: Vec<&str> = report.outcomes.iter().filter(|o| !o.pass).map(|o| o.name).collect();
    let passed = report.outcomes.len() - failed.len();
    println!("{passed}/{} criteria pass; failing: {failed:?}", report.outcomes.len());
    assert_eq!(failed, EXPECTED_FAILURES, "failing criteria differ from the recorded expectation");
}
