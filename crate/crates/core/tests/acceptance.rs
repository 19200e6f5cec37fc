//! Acceptance checks, one line per criterion. Runs without the libtest harness so the
//! summary lines are always printed; exits nonzero if any criterion fails.

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use matte_core::aknn::{csh_match, exhaustive_best, CshParams};
use matte_core::dictionary::{Dictionary, Region};
use matte_core::eval::{flicker_report, sad_error, synth_sequence, AlphaSchedule, Pattern};
use matte_core::features::FeatureVector;
use matte_core::imaging::{save_frame, save_trimap, SequenceLayout};
use matte_core::patch::PatchGeometry;
use matte_core::pipeline::{INITIAL_DIR, SMOOTHED_DIR};
use matte_core::sparse_matte::{estimate_alpha, kkt_violation, lasso_solve, ResidualPair};
use matte_core::{run_pipeline, run_sequence, smooth_sequence, AlphaMatte, Frame, Label, MatteStage, NlmConfig, PipelineConfig};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn dictionary(atoms: Vec<[f64; 8]>) -> Dictionary {
    let n = atoms.len();
    Dictionary {
        region: Region::Foreground,
        atoms: atoms.into_iter().map(FeatureVector).collect(),
        sources: (0..n).collect(),
    }
}

fn soft_threshold(z: f64, t: f64) -> f64 {
    z.signum() * (z.abs() - t).max(0.0)
}

fn lasso_correctness(limit: Duration) -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let lambdas = [0.01, 0.1, 1.0];
    let (mut worst_kkt, mut worst_closed) = (0.0f64, 0.0f64);
    for instance in 0..200 {
        let n_atoms = rng.random_range(3..=64);
        let lambda = lambdas[instance % 3];
        let atoms: Vec<[f64; 8]> = (0..n_atoms).map(|_| std::array::from_fn(|_| rng.random())).collect();
        let v = FeatureVector(std::array::from_fn(|_| rng.random()));
        let d = dictionary(atoms.clone());
        let code = lasso_solve(&v, &d, lambda);
        worst_kkt = worst_kkt.max(kkt_violation(&v, &d.atoms, &code.coefficients, lambda));

        // single-atom subproblem: beta = soft(d.v, lambda / 2) / |d|^2
        let single = dictionary(vec![atoms[0]]);
        let atom = FeatureVector(atoms[0]);
        let expected = soft_threshold(atom.dot(&v), lambda / 2.0) / atom.norm_sq();
        let got = lasso_solve(&v, &single, lambda).coefficients[0];
        worst_closed = worst_closed.max((got - expected).abs());
    }
    let elapsed = start.elapsed();
    outcome(
        worst_kkt <= 1e-5 && worst_closed <= 1e-8 && elapsed < limit,
        format!("200 instances, max KKT violation {worst_kkt:.2e}, max closed-form error {worst_closed:.2e}, {elapsed:.2?}"),
    )
}

fn alpha_properties(limit: Duration) -> Outcome {
    let start = Instant::now();
    let grid: Vec<f64> = (0..100).map(|i| i as f64 / 99.0 * 2.0).collect();
    let alpha = |xf: f64, xb: f64| estimate_alpha(ResidualPair { xi_f: xf, xi_b: xb });
    let mut violations = 0usize;
    for (i, &xf) in grid.iter().enumerate() {
        for (j, &xb) in grid.iter().enumerate() {
            let a = alpha(xf, xb);
            if !(0.0..=1.0).contains(&a) {
                violations += 1;
            }
            if j + 1 < grid.len() && alpha(xf, grid[j + 1]) < a {
                violations += 1;
            }
            if i + 1 < grid.len() && alpha(grid[i + 1], xb) > a {
                violations += 1;
            }
            if (alpha(xb, xf) - (1.0 - a)).abs() > 1e-12 {
                violations += 1;
            }
        }
    }
    let examples = [
        (alpha(0.4, 0.0), 0.0),
        (alpha(0.7, 0.7), 0.5),
        (alpha(0.1, 0.3), 0.75),
    ];
    let examples_ok = examples.iter().all(|(got, want)| (got - want).abs() < 1e-12);
    let elapsed = start.elapsed();
    outcome(
        violations == 0 && examples_ok && elapsed < limit,
        format!("100x100 grid, {violations} violations, examples {}, {elapsed:.2?}", if examples_ok { "ok" } else { "wrong" }),
    )
}

fn synthetic_accuracy(limit: Duration) -> Outcome {
    let start = Instant::now();
    let (fg_color, bg_color) = ([0.8, 0.3, 0.2], [0.2, 0.3, 0.8]);
    let fg = Pattern::flat(64, 64, fg_color);
    let bg = Pattern::flat(64, 64, bg_color);
    let schedule = AlphaSchedule::HorizontalRamp {
        start: 24.0,
        width: 8.0,
        shift_per_frame: 1.0,
    };
    let seq = synth_sequence(&fg, &bg, &schedule, 5, 0.01, 11).expect("synthetic sequence");
    let config = PipelineConfig {
        threads: 1,
        skip_nlm: true,
        ..PipelineConfig::default()
    };
    let out = run_sequence(&seq.frames, &seq.trimaps, &config).expect("pipeline");
    let errors: Vec<f64> = out
        .initial
        .iter()
        .zip(&seq.ground_truth)
        .zip(&seq.trimaps)
        .map(|((m, gt), t)| sad_error(m, gt, &t.mask(Label::Unknown)).expect("unknown band"))
        .collect();
    let mae = errors.iter().sum::<f64>() / errors.len() as f64;
    let separation = fg_color.iter().zip(&bg_color).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let elapsed = start.elapsed();
    outcome(
        mae < 0.1 && separation >= 0.5 && elapsed < limit,
        format!("64x64x5, color distance {separation:.2}, unknown-band MAE {mae:.4} (frames {errors:.3?}), {elapsed:.2?} single-threaded"),
    )
}

fn temporal_improvement(limit: Duration) -> Outcome {
    let start = Instant::now();
    let fg = Pattern::flat(48, 48, [0.85, 0.35, 0.2]);
    let bg = Pattern::flat(48, 48, [0.15, 0.3, 0.75]);
    let schedule = AlphaSchedule::HorizontalRamp {
        start: 18.0,
        width: 8.0,
        shift_per_frame: 0.0,
    };
    let seq = synth_sequence(&fg, &bg, &schedule, 5, 0.01, 21).expect("synthetic sequence");
    let base = run_sequence(&seq.frames, &seq.trimaps, &PipelineConfig { skip_nlm: true, ..PipelineConfig::default() })
        .expect("initial mattes");
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let normal = rand_distr::Normal::new(0.0, 0.05).unwrap();
    let perturbed: Vec<AlphaMatte> = base
        .initial
        .iter()
        .map(|m| {
            let noisy = m
                .alpha()
                .iter()
                .map(|a| (a + rng.sample(normal)).clamp(0.0, 1.0))
                .collect();
            AlphaMatte::new(m.width(), m.height(), m.index(), MatteStage::Initial, noisy).unwrap()
        })
        .collect();
    let smoothed = smooth_sequence(&perturbed, &seq.frames, &NlmConfig::default()).expect("smoothing");
    let before = flicker_report(&perturbed, &seq.frames, &seq.trimaps).unwrap().mean;
    let after = flicker_report(&smoothed, &seq.frames, &seq.trimaps).unwrap().mean;
    let in_range = smoothed.iter().all(|m| m.alpha().iter().all(|a| (0.0..=1.0).contains(a)));
    let elapsed = start.elapsed();
    outcome(
        after <= 0.5 * before && in_range && elapsed < limit,
        format!(
            "static 48x48x5, flicker {before:.4} -> {after:.4} (ratio {:.3}), range {}, {elapsed:.2?}",
            after / before,
            if in_range { "ok" } else { "violated" }
        ),
    )
}

fn random_frame(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Frame {
    Frame::from_rgb(w, h, 0, (0..w * h).map(|_| [rng.random(), rng.random(), rng.random()]).collect()).unwrap()
}

/// Bilinearly upsampled noise: a texture with spatial structure.
fn smooth_texture(rng: &mut ChaCha8Rng, w: usize, h: usize, cell: usize) -> Frame {
    let (gw, gh) = (w / cell + 2, h / cell + 2);
    let lattice: Vec<[f64; 3]> = (0..gw * gh).map(|_| [rng.random(), rng.random(), rng.random()]).collect();
    let px = (0..w * h)
        .map(|i| {
            let (x, y) = ((i % w) as f64 / cell as f64, (i / w) as f64 / cell as f64);
            let (x0, y0) = (x.floor() as usize, y.floor() as usize);
            let (fx, fy) = (x - x0 as f64, y - y0 as f64);
            let at = |xx: usize, yy: usize| lattice[yy * gw + xx];
            std::array::from_fn(|c| {
                let top = at(x0, y0)[c] * (1.0 - fx) + at(x0 + 1, y0)[c] * fx;
                let bottom = at(x0, y0 + 1)[c] * (1.0 - fx) + at(x0 + 1, y0 + 1)[c] * fx;
                top * (1.0 - fy) + bottom * fy
            })
        })
        .collect();
    Frame::from_rgb(w, h, 0, px).unwrap()
}

/// `src` moved by `(dx, dy)`; uncovered pixels come from `fill`.
fn translated(src: &Frame, fill: &Frame, dx: isize, dy: isize) -> Frame {
    let (w, h) = (src.width(), src.height());
    let px = (0..w * h)
        .map(|i| {
            let (x, y) = ((i % w) as isize - dx, (i / w) as isize - dy);
            if x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h {
                src.rgb_at(x as usize, y as usize)
            } else {
                fill.rgb()[i]
            }
        })
        .collect();
    Frame::from_rgb(w, h, 1, px).unwrap()
}

fn aknn_quality(limit: Duration) -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let geom = PatchGeometry::new(8);
    let params = CshParams::default();
    let mut pairs: Vec<(&str, Frame, Frame)> = Vec::new();
    for _ in 0..2 {
        pairs.push(("iid", random_frame(&mut rng, 32, 32), random_frame(&mut rng, 32, 32).with_index(1)));
        pairs.push(("smooth", smooth_texture(&mut rng, 32, 32, 4), smooth_texture(&mut rng, 32, 32, 4).with_index(1)));
    }
    for (dx, dy) in [(3, 0), (0, -2), (2, 3)] {
        let base = smooth_texture(&mut rng, 32, 32, 4);
        let fill = smooth_texture(&mut rng, 32, 32, 4);
        let moved = translated(&base, &fill, dx, dy);
        pairs.push(("shift", base, moved));
    }
    let base = random_frame(&mut rng, 32, 32);
    let fill = random_frame(&mut rng, 32, 32);
    let moved = translated(&base, &fill, -1, 2);
    pairs.push(("iid-shift", base, moved));

    let (mut good, mut total) = (0usize, 0usize);
    let mut per_pair = Vec::new();
    for (kind, src, dst) in &pairs {
        let field = csh_match(src, dst, &geom, &params).expect("csh");
        let oracle = exhaustive_best(src, dst, &geom).expect("exhaustive");
        let ok = (0..field.len())
            .filter(|&i| field.best(i).distance <= 1.5 * oracle[i] + 1e-9)
            .count();
        per_pair.push(format!("{kind} {:.1}%", 100.0 * ok as f64 / field.len() as f64));
        good += ok;
        total += field.len();
    }
    let fraction = good as f64 / total as f64;

    let frame = smooth_texture(&mut rng, 32, 32, 4);
    let noise = random_frame(&mut rng, 32, 32);
    let mut self_ok = 0usize;
    let mut self_total = 0usize;
    for f in [frame, noise] {
        let field = csh_match(&f, &f.clone().with_index(1), &geom, &params).expect("csh");
        self_total += field.len();
        self_ok += (0..field.len())
            .filter(|&i| {
                let b = field.best(i);
                b.index as usize == i && b.distance == 0.0
            })
            .count();
    }
    let elapsed = start.elapsed();
    outcome(
        fraction >= 0.9 && self_ok == self_total && elapsed < limit,
        format!(
            "32x32 pairs, {:.1}% within 1.5x of exhaustive [{}], self-match {self_ok}/{self_total}, {elapsed:.2?}",
            100.0 * fraction,
            per_pair.join(", ")
        ),
    )
}

fn nlm_fixed_point() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (w, h) = (24, 20);
    let frame = random_frame(&mut rng, w, h);
    let alpha: Vec<f64> = (0..w * h).map(|_| rng.random()).collect();
    let frames: Vec<Frame> = (0..5).map(|t| frame.clone().with_index(t)).collect();
    let mattes: Vec<AlphaMatte> = (0..5)
        .map(|t| AlphaMatte::new(w, h, t, MatteStage::Initial, alpha.clone()).unwrap())
        .collect();
    let deviation = |k: usize, gamma: f64| {
        let mut cfg = NlmConfig {
            gamma,
            ..NlmConfig::default()
        };
        cfg.csh.k = k;
        smooth_sequence(&mattes, &frames, &cfg)
            .expect("smoothing")
            .iter()
            .flat_map(|m| m.alpha().iter().zip(&alpha).map(|(a, b)| (a - b).abs()))
            .fold(0.0f64, f64::max)
    };
    let gammas = [0.5, 0.9, 1.0];
    let default_k = NlmConfig::default().csh.k;
    let worst_default = gammas.iter().map(|&g| deviation(default_k, g)).fold(0.0f64, f64::max);
    let worst_single = gammas.iter().map(|&g| deviation(1, g)).fold(0.0f64, f64::max);
    outcome(
        worst_default <= 1e-12 && worst_single <= 1e-12,
        format!("random texture and matte, max deviation K={default_k}: {worst_default:.2e}, K=1: {worst_single:.2e}"),
    )
}

fn write_sequence(dir: &Path) {
    let fg = Pattern::flat(32, 32, [0.8, 0.3, 0.2]);
    let bg = Pattern::flat(32, 32, [0.2, 0.3, 0.8]);
    let schedule = AlphaSchedule::HorizontalRamp {
        start: 10.0,
        width: 8.0,
        shift_per_frame: 1.0,
    };
    let seq = synth_sequence(&fg, &bg, &schedule, 3, 0.02, 3).unwrap();
    let layout = SequenceLayout::default();
    for (f, t) in seq.frames.iter().zip(&seq.trimaps) {
        save_frame(f, &dir.join(layout.frame.format(f.index()))).unwrap();
        save_trimap(t, &dir.join(layout.trimap.format(f.index()))).unwrap();
    }
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("input");
    write_sequence(&input);
    let config = PipelineConfig {
        seed: 42,
        ..PipelineConfig::default()
    };
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run_pipeline(&input, &a, &config).expect("first run");
    run_pipeline(&input, &b, &config).expect("second run");
    let layout = SequenceLayout::default();
    let mut compared = 0;
    let mut differing = Vec::new();
    for sub in [INITIAL_DIR, SMOOTHED_DIR] {
        for i in 0..3 {
            let name = layout.alpha.format(i);
            let (x, y) = (
                std::fs::read(a.join(sub).join(&name)).unwrap(),
                std::fs::read(b.join(sub).join(&name)).unwrap(),
            );
            compared += 1;
            if x != y {
                differing.push(format!("{sub}/{name}"));
            }
        }
    }
    outcome(
        differing.is_empty() && compared == 6,
        format!("{compared} matte files compared, {} differ {differing:?}", differing.len()),
    )
}

fn main() -> ExitCode {
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("lasso correctness", Box::new(|| lasso_correctness(Duration::from_secs(5)))),
        ("alpha ratio properties", Box::new(|| alpha_properties(Duration::from_secs(1)))),
        ("synthetic end-to-end accuracy", Box::new(|| synthetic_accuracy(Duration::from_secs(120)))),
        ("temporal improvement", Box::new(|| temporal_improvement(Duration::from_secs(120)))),
        ("aknn quality", Box::new(|| aknn_quality(Duration::from_secs(30)))),
        ("nlm fixed point", Box::new(nlm_fixed_point)),
        ("determinism", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (n, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!("criterion {} {name}: {} - {}", n + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
