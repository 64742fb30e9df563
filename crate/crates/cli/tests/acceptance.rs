//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::path::Path;
use std::time::{Duration, Instant};

use latop::morphology::reflect;
use latop::{
    apply_table, basis_of, basis_of_param, characteristic_of, dilate, effective_window, empirical_error,
    erode, hierarchical_slda, lda, random_init, realize, reconstruct, shift, slda, union, BinaryImage,
    BooleanFunctionTable, Boundary, Caps, ClassSpec, Dataset, ImageOperator, InnerFit, OuterConfig,
    ParamPoint, SamplePair, SldaConfig, Subset, Validation, Window, WindowLatticeSpec,
};
use latop_cli::commands;
use latop_cli::config::{RawConfig, RunConfig};
use latop_cli::gen::{write_dataset, GenSpec};
use latop_cli::manifest::load_dataset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<Duration, String> {
    let t = start.elapsed();
    ensure(t < limit, || format!("took {t:.2?}, limit {limit:?}"))?;
    Ok(t)
}

fn line_window(n: usize) -> Window {
    Window::new((0..n as i32).map(|c| (0, c - n as i32 / 2))).unwrap()
}

fn random_table(w: &Window, rng: &mut ChaCha8Rng) -> BooleanFunctionTable {
    let values: Vec<bool> = (0..1usize << w.len()).map(|_| rng.random_bool(0.5)).collect();
    BooleanFunctionTable::from_values(w, values).unwrap()
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Every interval inside the kernel, filtered to the maximal ones by direct
/// pairwise comparison.
fn oracle_basis(f: &BooleanFunctionTable) -> Vec<(u32, u32)> {
    let n = f.window().len() as u32;
    let mut inside = Vec::new();
    for upper in 0..1u32 << n {
        for lower in 0..1u32 << n {
            if lower & !upper != 0 {
                continue;
            }
            let all = (0..1u32 << n)
                .filter(|x| x & lower == lower && x & !upper == 0)
                .all(|x| f.value(x));
            if all {
                inside.push((lower, upper));
            }
        }
    }
    let strictly_below =
        |(a, b): (u32, u32), (c, d): (u32, u32)| (a, b) != (c, d) && c & !a == 0 && b & !d == 0;
    let mut out: Vec<_> = inside
        .iter()
        .copied()
        .filter(|&i| !inside.iter().any(|&j| strictly_below(i, j)))
        .collect();
    out.sort_unstable();
    out
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let w3 = line_window(3);
    for bits in 0u32..256 {
        let f = BooleanFunctionTable::from_fn(&w3, 20, |x| bits >> x & 1 == 1).map_err(err)?;
        let back = reconstruct(&basis_of(&f, 16).map_err(err)?, 20).map_err(err)?;
        ensure(back == f, || format!("3-point function {bits:#x} not recovered"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for n in 4..=6 {
        let w = line_window(n);
        for i in 0..500 {
            let f = random_table(&w, &mut rng);
            let back = reconstruct(&basis_of(&f, 16).map_err(err)?, 20).map_err(err)?;
            ensure(back == f, || {
                format!("{n}-point function #{i} ({}) not recovered", f.hex())
            })?;
        }
    }
    let t = within(start, Duration::from_secs(10))?;
    Ok(format!("256 + 3x500 functions exact in {t:.2?}"))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let w = line_window(5);
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for i in 0..200 {
        let f = random_table(&w, &mut rng);
        let got: Vec<(u32, u32)> = basis_of(&f, 16)
            .map_err(err)?
            .intervals()
            .iter()
            .map(|iv| iv.bits())
            .collect();
        let want = oracle_basis(&f);
        let (mut g, mut o) = (got.clone(), want.clone());
        g.sort_unstable();
        o.sort_unstable();
        ensure(g == o, || {
            format!("function #{i} ({}): {got:?} vs oracle {want:?}", f.hex())
        })?;
    }
    let t = within(start, Duration::from_secs(10))?;
    Ok(format!("200 functions match the oracle in {t:.2?}"))
}

fn planted_pair() -> (Window, Subset, Subset, ParamPoint) {
    let w = Window::centered_rect(3, 3).unwrap();
    let a = Subset::from_offsets(&w, &[(0, -1), (0, 0), (0, 1)]).unwrap();
    let b = Subset::from_offsets(&w, &[(-1, 0), (0, 0), (1, 0)]).unwrap();
    let theta = ParamPoint::erosion_sup(&w, &[a.clone(), b.clone()]).unwrap();
    (w, a, b, theta)
}

fn gen_planted(dir: &Path, theta: &ParamPoint, count: usize, size: usize, seed: u64) -> Result<(), String> {
    let spec = GenSpec {
        count,
        height: size,
        width: size,
        density: 0.4,
        noise_rate: 0.0,
        seed,
    };
    write_dataset(theta, &spec, dir).map_err(err)
}

fn train_config(text: &str) -> Result<RunConfig, String> {
    RunConfig::from_raw(&RawConfig::parse(text).map_err(err)?).map_err(err)
}

fn criterion_3(root: &Path) -> Outcome {
    let start = Instant::now();
    let (w, a, b, theta) = planted_pair();
    let data_dir = root.join("c3");
    gen_planted(&data_dir, &theta, 20, 32, 3)?;
    let manifest = data_dir.join("manifest.tsv");
    let expected: Vec<String> = [&a, &b]
        .iter()
        .map(|s| {
            latop::Interval::new((*s).clone(), Subset::full(&w))
                .unwrap()
                .to_string()
        })
        .collect();
    let mut log = Vec::new();
    for seed in 0..5u64 {
        let out = root.join(format!("c3-run-{seed}"));
        let cfg = train_config(&format!(
            "class = erosion-sup\nwindow = 3x3\nk = 2\nboundary = toroidal\nbatch_size = 5\nneighbors = 16\nepochs = 200\n\
             seed = {seed}\noutput = {}\n",
            out.display()
        ))?;
        let summary = commands::train(&cfg, &manifest).map_err(err)?;
        let reached = summary.lines().any(|l| l == "best_error: 0");
        log.push(format!("seed {seed}: {}", if reached { "0" } else { "nonzero" }));
        if !reached {
            continue;
        }
        let listing = commands::basis(&out.join("theta.txt"), Caps::default()).map_err(err)?;
        let mut printed: Vec<String> = listing
            .lines()
            .filter(|l| l.starts_with('['))
            .map(String::from)
            .collect();
        printed.sort();
        let mut want = expected.clone();
        want.sort();
        ensure(printed == want, || {
            format!("seed {seed} basis listing {printed:?}, expected {want:?}")
        })?;
        let t = within(start, Duration::from_secs(300))?;
        return Ok(format!("{}; basis is {{[A,W],[B,W]}}; {t:.2?}", log.join(", ")));
    }
    Err(format!("no seed reached train error 0 ({})", log.join(", ")))
}

fn criterion_4(root: &Path) -> Outcome {
    let data = load_dataset(&root.join("c3").join("manifest.tsv"), Boundary::Toroidal).map_err(err)?;
    let (w, _, _, _) = planted_pair();
    let class = ClassSpec::erosion_sup(w, 2).map_err(err)?;
    for seed in 0..3u64 {
        let theta0 = commands::initial_point(&class, seed);
        let cfg = SldaConfig::new(data.len(), theta0.neighborhood_size(), 30, seed);
        let s = slda(&theta0, &data, &cfg).map_err(err)?;
        let l = lda(&theta0, &data, 30).map_err(err)?;
        ensure(s.trace == l.trace && s == l, || {
            format!("seed {seed}: slda(b=N, exhaustive) differs from lda")
        })?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for i in 0..50 {
        let theta0 = random_init(&class, &mut rng);
        let initial = empirical_error(&theta0, data.pairs());
        let r = slda(&theta0, &data, &SldaConfig::new(5, 16, 10, i)).map_err(err)?;
        ensure(r.best_error <= initial, || {
            format!("start #{i}: best {} > initial {initial}", r.best_error)
        })?;
    }
    Ok("3 seeds step-identical; 50 starts never end above their initial error".into())
}

fn random_window(rng: &mut ChaCha8Rng, max: usize) -> Window {
    let square = Window::centered_rect(3, 3).unwrap();
    let n = rng.random_range(1..=max);
    let picks = rand::seq::index::sample(rng, square.len(), n);
    Window::new(picks.iter().map(|i| square.offsets()[i])).unwrap()
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    for i in 0..100 {
        let w = random_window(&mut rng, 6);
        let k = rng.random_range(1..=3);
        let theta = random_init(&ClassSpec::erosion_sup(w.clone(), k).map_err(err)?, &mut rng);
        let b = basis_of_param(&theta, Caps::default()).map_err(err)?;
        let full = Subset::full(&w);
        ensure(b.intervals().iter().all(|iv| iv.upper() == &full), || {
            format!("param #{i}: upper endpoint is not W")
        })?;
        let op = realize(&theta);
        for j in 0..100 {
            let x = BinaryImage::random(8, 8, 0.3, Boundary::Toroidal, &mut rng).map_err(err)?;
            let extra = BinaryImage::random(8, 8, 0.3, Boundary::Toroidal, &mut rng).map_err(err)?;
            let bigger = union(&x, &extra).map_err(err)?;
            ensure(op.apply(&x).is_subset_of(&op.apply(&bigger)), || {
                format!("param #{i}, pair #{j}: not monotone")
            })?;
        }
    }
    Ok("100 params: uppers equal W, monotone on 100 nested pairs each".into())
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let w = Window::centered_rect(3, 3).unwrap();
    let mut violations = [0usize; 3];
    for _ in 0..200 {
        let a = Subset::new(&w, rng.random_range(0..512)).map_err(err)?;
        let boundary = if rng.random_bool(0.5) {
            Boundary::Toroidal
        } else {
            Boundary::ZeroPad
        };
        let x = BinaryImage::random(9, 10, rng.random_range(0.05..0.3), boundary, &mut rng).map_err(err)?;
        let y = BinaryImage::random(9, 10, rng.random_range(0.5..0.95), boundary, &mut rng).map_err(err)?;
        let (tx, ty) = (
            x.clone().with_boundary(Boundary::Toroidal),
            y.clone().with_boundary(Boundary::Toroidal),
        );
        if dilate(&tx, &a).is_subset_of(&ty) != tx.is_subset_of(&erode(&ty, &reflect(&a))) {
            violations[0] += 1;
        }

        let bigger = union(&x, &y).map_err(err)?;
        if !erode(&x, &a).is_subset_of(&erode(&bigger, &a))
            || !dilate(&x, &a).is_subset_of(&dilate(&bigger, &a))
        {
            violations[1] += 1;
        }

        let tw = random_window(&mut rng, 9);
        let f = random_table(&tw, &mut rng);
        let t = x.clone().with_boundary(Boundary::Toroidal);
        let v = (rng.random_range(-12..12), rng.random_range(-12..12));
        let lhs = apply_table(&shift(&t, v).map_err(err)?, &tw, &f).map_err(err)?;
        let rhs = shift(&apply_table(&t, &tw, &f).map_err(err)?, v).map_err(err)?;
        if lhs != rhs {
            violations[2] += 1;
        }
    }
    ensure(violations == [0, 0, 0], || {
        format!(
            "violations: adjunction {}, monotonicity {}, translation {}",
            violations[0], violations[1], violations[2]
        )
    })?;
    let t = within(start, Duration::from_secs(30))?;
    Ok(format!("3x200 trials, zero violations, {t:.2?}"))
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let w1 = Window::new([(0, -1), (0, 0), (1, 1)]).map_err(err)?;
    let w2 = Window::new([(-1, 0), (0, 0), (0, 2)]).map_err(err)?;
    let theta = random_init(&ClassSpec::seq_tables(vec![w1, w2]).map_err(err)?, &mut rng);
    let eff = effective_window(&theta, 20).map_err(err)?;
    let f = characteristic_of(&realize(&theta), &eff, 20).map_err(err)?;
    for i in 0..50 {
        let x = BinaryImage::random(12, 13, 0.5, Boundary::Toroidal, &mut rng).map_err(err)?;
        let direct = realize(&theta).apply(&x);
        let tab = apply_table(&x, &eff, &f).map_err(err)?;
        ensure(direct == tab, || {
            format!("image #{i}: composed and tabulated outputs differ")
        })?;
    }
    Ok(format!("50 images equal on the {}-point sum window", eff.len()))
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let wmax = Window::new([(-1, 0), (0, -1), (0, 0), (0, 1), (1, 0)]).map_err(err)?;
    let v = Window::new([(0, -1), (0, 0), (0, 1)]).map_err(err)?;
    let parity = BooleanFunctionTable::from_fn(&v, 20, |x| x.count_ones() % 2 == 1).map_err(err)?;
    let target = ParamPoint::seq_tables(vec![parity]).map_err(err)?;
    let spec = WindowLatticeSpec::new(wmax, 1);
    let mut found = Vec::new();
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(800 + seed);
        let op = realize(&target);
        let pairs = (0..12)
            .map(|_| {
                let x = BinaryImage::random(16, 16, 0.4, Boundary::Toroidal, &mut rng).unwrap();
                let y = op.apply(&x);
                SamplePair::new(x, y).unwrap()
            })
            .collect();
        let data = Dataset::new(pairs).map_err(err)?;
        let cfg = OuterConfig {
            neighbors: 4,
            epochs: 50,
            inner: InnerFit::Lda { epochs: 40 },
            seed,
            validation: Validation::Fraction(0.25),
            initial: None,
        };
        let sel = hierarchical_slda(&spec, &data, &cfg).map_err(err)?;
        let ok = v.is_subwindow_of(&sel.best.windows[0]) && sel.best.validation_error() == 0.0;
        found.push(ok);
    }
    let hits = found.iter().filter(|&&b| b).count();
    ensure(hits >= 4, || format!("recovered for {hits} of 5 seeds"))?;
    let t = within(start, Duration::from_secs(300))?;
    Ok(format!("recovered for {hits} of 5 seeds in {t:.2?}"))
}

fn snapshot(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).map_err(err)? {
            let p = e.map_err(err)?.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.display().to_string(), std::fs::read(&p).map_err(err)?));
            }
        }
    }
    out.sort();
    Ok(out)
}

fn criterion_9(root: &Path) -> Outcome {
    let (_, _, _, theta) = planted_pair();
    let dir = root.join("c9");
    let run = |seed: u64| -> Result<(), String> {
        gen_planted(&dir.join("data"), &theta, 6, 16, seed)?;
        let cfg = train_config(&format!(
            "class = interval-sup\nwindow = 3x3\nk = 2\nboundary = toroidal\nbatch_size = 2\nneighbors = 5\nepochs = 8\nseed = 9\n\
             output = {}\n",
            dir.join("run").display()
        ))?;
        commands::train(&cfg, &dir.join("data").join("manifest.tsv")).map_err(err)?;
        let sel = train_config(&format!(
            "max_window = 3x3\nboundary = toroidal\nouter_neighbors = 2\nouter_epochs = 3\nneighbors = 4\nbatch_size = 2\n\
             epochs = 3\nseed = 9\noutput = {}\n",
            dir.join("sel").display()
        ))?;
        commands::train(&sel, &dir.join("data").join("manifest.tsv")).map_err(err)?;
        Ok(())
    };
    run(5)?;
    let first = snapshot(&dir)?;
    run(5)?;
    let second = snapshot(&dir)?;
    ensure(first == second, || "re-run produced different bytes".into())?;
    let names = first
        .iter()
        .filter(|(n, _)| n.ends_with("trace.csv") || n.ends_with("theta.txt"))
        .count();
    ensure(names == 4, || {
        format!("expected 4 trace/theta artifacts, found {names}")
    })?;
    Ok(format!("{} artifacts byte-identical across re-runs", first.len()))
}

fn main() {
    let root = tempfile::tempdir().expect("temp dir");
    let root = root.path();
    let criteria: Vec<(&str, Check)> = vec![
        ("1 representation round trip", Box::new(criterion_1)),
        ("2 basis oracle equivalence", Box::new(criterion_2)),
        ("3 planted recovery", Box::new(|| criterion_3(root))),
        ("4 deterministic reduction", Box::new(|| criterion_4(root))),
        ("5 increasing-class structure", Box::new(criterion_5)),
        ("6 morphology laws", Box::new(criterion_6)),
        ("7 sequential tables consistency", Box::new(criterion_7)),
        ("8 window selection", Box::new(criterion_8)),
        ("9 reproducibility", Box::new(|| criterion_9(root))),
    ];
    let mut failed = 0;
    for (name, check) in &criteria {
        match check() {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
