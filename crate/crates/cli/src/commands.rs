use std::fs;
use std::io::Read;
use std::path::Path;

use anyhow::{anyhow, Context};
use distal_core::lattice::complete_to_unimodular;
use distal_core::orbit::{evaluate_mod1, orbit_polynomials};
use distal_core::sequences::{geometric_table, lambda_moment, mobius_sieve, mobius_trial_division};
use distal_core::torus::{classify_matrix_2x2, conjugate_flow};
use distal_core::triangular::{random_unipotent, triangularize};
use distal_core::weyl::{
    decay_report, default_t_grid, disjointness_series, exact_expansion, oscillation_probe, weyl_sum, ProbeSummary,
};
use distal_core::{
    AffineTorusFlow, Engine, Error as CoreError, GFunction, GeometricParams, IntMatrix, PhaseSpec, ProbeMode,
    RealParam, SumOptions, SumSeries, TorusPoint, TrigPolynomial, UnimodularMatrix, WeightSequence,
};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{
    last_checkpoint, read_coords, read_point, DisjointConfig, FlowConfig, MatrixInput, ProbeConfig, ProbeModeConfig,
    Scalar, ScalarValue, WeylConfig,
};
use crate::{Command, Failure, MobiusFormat, RunArgs, SeqCommand};

type Outcome<T = ()> = std::result::Result<T, Failure>;

/// Input-shaped library errors count as validation failures.
fn classify(e: anyhow::Error) -> Failure {
    match e.downcast_ref::<CoreError>() {
        Some(
            CoreError::Parse(_)
            | CoreError::InvalidParameter(_)
            | CoreError::DimensionMismatch { .. }
            | CoreError::WrongDimension { .. }
            | CoreError::NotSquare { .. }
            | CoreError::InsufficientPrecision { .. },
        ) => Failure::Validation(e),
        _ => Failure::Compute(e),
    }
}

trait Classify<T> {
    fn validation(self) -> Outcome<T>;
    fn compute(self) -> Outcome<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for std::result::Result<T, E> {
    fn validation(self) -> Outcome<T> {
        self.map_err(|e| Failure::Validation(e.into()))
    }

    fn compute(self) -> Outcome<T> {
        self.map_err(|e| classify(e.into()))
    }
}

fn read_input(path: &Path) -> anyhow::Result<String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Outcome<T> {
    let text = read_input(path).validation()?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display())).validation()
}

fn write_output(path: &Path, bytes: &[u8]) -> Outcome {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display())).compute()
}

/// Pretty JSON to `out`, or to stdout when no path is given.
fn emit_json(out: Option<&Path>, value: &impl Serialize) -> Outcome {
    let mut text = serde_json::to_string_pretty(value).compute()?;
    text.push('\n');
    match out {
        Some(p) => write_output(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn sidecar(out: &Path) -> std::path::PathBuf {
    out.with_extension("meta.json")
}

pub fn run(command: Command) -> Outcome {
    match command {
        Command::Triangularize { matrix, out } => run_triangularize(&matrix, out.as_deref()),
        Command::Orbit { flow, x, at, out } => run_orbit(&flow, &x, &at, out.as_deref()),
        Command::Classify { flow, out } => run_classify(&flow, out.as_deref()),
        Command::Mobius { n, out, format } => run_mobius(n, &out, format),
        Command::Seq { kind: SeqCommand::Geometric { alpha, beta, g, n, precision, out } } => {
            run_geometric(&alpha, &beta, &g, n, precision, &out)
        }
        Command::Weyl(args) => run_weyl(&args),
        Command::Probe(args) => run_probe(&args),
        Command::Disjoint(args) => run_disjoint(&args),
        Command::Selftest => run_selftest(),
    }
}

fn run_triangularize(path: &Path, out: Option<&Path>) -> Outcome {
    let a = read_json::<MatrixInput>(path)?.into_matrix().validation()?;
    let form = triangularize(&a).compute()?;
    emit_json(out, &json!({ "P": form.p.matrix(), "B": form.b, "sign": form.sign }))
}

fn run_orbit(path: &Path, x: &[String], at: &[u64], out: Option<&Path>) -> Outcome {
    let flow = read_json::<FlowConfig>(path)?.into_rational_flow().validation()?;
    let scalars: Vec<Scalar> = x.iter().cloned().map(Scalar::Text).collect();
    let x = match read_coords(&scalars).validation()? {
        Ok(c) => TorusPoint::new(c),
        Err(_) => return Err(Failure::Validation(anyhow!("orbit needs a rational starting point"))),
    };
    if x.dim() != flow.dim() {
        return Err(Failure::Validation(anyhow!("point has dimension {}, flow has {}", x.dim(), flow.dim())));
    }
    // Upper triangular flows are used as given; others are conjugated first.
    let (p, conj) = if flow.matrix().upper_unipotent_sign().is_some() {
        (UnimodularMatrix::identity(flow.dim()), flow.clone())
    } else {
        let form = triangularize(flow.matrix()).compute()?;
        let conj = conjugate_flow(&flow, &form.p).compute()?;
        (form.p, conj)
    };
    let y = AffineTorusFlow::push_forward(&p.inverse(), &x).compute()?;
    let orbit = orbit_polynomials(conj.matrix(), conj.shift(), &y).compute()?;
    let points: Vec<Value> = at
        .iter()
        .map(|&n| {
            let yn = TorusPoint::new(orbit.branch(n).iter().map(|poly| evaluate_mod1(poly, n)).collect());
            let xn = AffineTorusFlow::push_forward(&p, &yn)?;
            Ok(json!({ "n": n, "x": xn.to_strings() }))
        })
        .collect::<distal_core::Result<_>>()
        .compute()?;
    emit_json(
        out,
        &json!({
            "P": p.matrix(),
            "B": conj.matrix(),
            "b": conj.shift().to_strings(),
            "y": y.to_strings(),
            "polynomials": orbit,
            "points": points,
        }),
    )
}

fn run_classify(path: &Path, out: Option<&Path>) -> Outcome {
    let text = read_input(path).validation()?;
    let matrix = match serde_json::from_str::<FlowConfig>(&text) {
        Ok(flow) => flow.matrix.into_matrix(),
        Err(_) => serde_json::from_str::<MatrixInput>(&text)
            .with_context(|| format!("{} is neither flow nor matrix JSON", path.display()))
            .and_then(MatrixInput::into_matrix),
    }
    .validation()?;
    let class = classify_matrix_2x2(&matrix).compute()?;
    emit_json(out, &class)
}

fn run_mobius(n: u64, out: &Path, format: MobiusFormat) -> Outcome {
    if n == 0 {
        return Err(Failure::Validation(anyhow!("--n must be positive")));
    }
    let mu = mobius_sieve(n as usize);
    let bytes = match format {
        MobiusFormat::Bytes => mu[1..].iter().map(|&v| v as u8).collect::<Vec<u8>>(),
        MobiusFormat::Csv => {
            let mut s = String::from("n,mu\n");
            for (i, v) in mu.iter().enumerate().skip(1) {
                s.push_str(&format!("{i},{v}\n"));
            }
            s.into_bytes()
        }
    };
    write_output(out, &bytes)?;
    let mertens: i64 = mu.iter().map(|&v| i64::from(v)).sum();
    emit_json(None, &json!({ "n": n, "mertens": mertens, "mean": mertens as f64 / n as f64 }))
}

fn run_geometric(alpha: &str, beta: &str, g: &str, n: u64, precision: u64, out: &Path) -> Outcome {
    if n == 0 {
        return Err(Failure::Validation(anyhow!("--n must be positive")));
    }
    let params = (|| {
        GeometricParams::new(RealParam::parse(alpha)?, RealParam::parse(beta)?, GFunction::parse(g)?, precision)
    })()
    .validation()?;
    let values = geometric_table(&params, n);
    let mut csv = String::from("n,re,im\n");
    for (i, z) in values.iter().enumerate() {
        csv.push_str(&format!("{},{:e},{:e}\n", i + 1, z.re, z.im));
    }
    write_output(out, csv.as_bytes())?;
    let seq = WeightSequence::from_values("geometric", values);
    let stats = lambda_moment(&seq, 2.0, n).compute()?;
    emit_json(
        None,
        &json!({
            "alpha": params.alpha.to_string(),
            "beta": params.beta.to_string(),
            "g": params.g.to_string(),
            "n": n,
            "working_bits": params.precision_bits.max(params.required_bits(n)),
            "lambda_moment_2": stats.k_estimate,
        }),
    )
}

fn series_meta(command: &str, seed: u64, series: &SumSeries) -> Value {
    let decay = decay_report(series).ok();
    json!({
        "command": command,
        "seed": seed,
        "weights": series.weights_label,
        "descriptor": series.descriptor,
        "checkpoints": series.points,
        "decay": decay,
    })
}

fn finish(args: &RunArgs, csv: String, meta: Value) -> Outcome {
    write_output(&args.out, csv.as_bytes())?;
    let mut text = serde_json::to_string_pretty(&meta).compute()?;
    text.push('\n');
    write_output(&sidecar(&args.out), text.as_bytes())?;
    print!("{text}");
    Ok(())
}

fn run_weyl(args: &RunArgs) -> Outcome {
    let cfg: WeylConfig = read_json(&args.config)?;
    let n_max = last_checkpoint(&cfg.checkpoints).validation()?;
    let weights = cfg.weights.build(n_max).validation()?;
    let phase = cfg.phase.into_phase().validation()?;
    let series = weyl_sum(&weights, &phase, &cfg.checkpoints, &SumOptions::with_workers(args.workers)).compute()?;
    finish(args, series.to_csv(), series_meta("weyl", cfg.seed, &series))
}

fn summary_rows(csv: &mut String, family: &str, rows: &[ProbeSummary]) {
    for s in rows {
        csv.push_str(&format!("{family},{},{:e},{:e}\n", s.n, s.max, s.median));
    }
}

fn run_probe(args: &RunArgs) -> Outcome {
    let cfg: ProbeConfig = read_json(&args.config)?;
    let n_max = last_checkpoint(&cfg.checkpoints).validation()?;
    let weights = cfg.weights.build(n_max).validation()?;
    let grid = match &cfg.t_grid {
        None => default_t_grid(),
        Some(values) => values
            .iter()
            .map(|s| match s.value()? {
                ScalarValue::Exact(r) => Ok(r),
                ScalarValue::Real(v) => num_rational::BigRational::from_float(v).ok_or_else(|| anyhow!("bad t {v}")),
            })
            .collect::<anyhow::Result<Vec<_>>>()
            .validation()?,
    };
    let mode = match cfg.mode {
        ProbeModeConfig::Weak => ProbeMode::Weak,
        ProbeModeConfig::Strong => ProbeMode::Strong { samples: cfg.samples, seed: cfg.seed },
    };
    let report = oscillation_probe(&weights, cfg.order, &grid, mode, &cfg.checkpoints, &SumOptions::with_workers(args.workers))
        .compute()?;
    let mut csv = String::from("family,N,max,median\n");
    summary_rows(&mut csv, "weak", &report.weak_summary());
    for k in 1..=cfg.order {
        summary_rows(&mut csv, &format!("weak_k{k}"), &report.summary_for_order(k));
    }
    if !report.strong.is_empty() {
        summary_rows(&mut csv, "strong", &report.strong_summary());
    }
    let entries: Vec<Value> = report
        .weak
        .iter()
        .chain(&report.strong)
        .map(|e| json!({ "order": e.order, "phase": e.phase, "magnitudes": e.series.magnitudes() }))
        .collect();
    let meta = json!({
        "command": "probe",
        "seed": cfg.seed,
        "weights": weights.label(),
        "order": cfg.order,
        "mode": if report.strong.is_empty() { "weak" } else { "strong" },
        "checkpoints": cfg.checkpoints,
        "entries": entries,
    });
    finish(args, csv, meta)
}

fn run_disjoint(args: &RunArgs) -> Outcome {
    let cfg: DisjointConfig = read_json(&args.config)?;
    let n_max = last_checkpoint(&cfg.checkpoints).validation()?;
    let weights = cfg.weights.build(n_max).validation()?;
    let flow = cfg.flow.into_flow().validation()?;
    let f = cfg.f.build(cfg.seed).validation()?;
    let x = read_point(&cfg.x).validation()?;
    let series =
        disjointness_series(&weights, &flow, &f, &x, &cfg.checkpoints, cfg.engine, &SumOptions::with_workers(args.workers))
            .compute()?;
    let mut meta = series_meta("disjoint", cfg.seed, &series);
    meta["f"] = serde_json::to_value(&f).compute()?;
    meta["engine"] = serde_json::to_value(cfg.engine).compute()?;
    finish(args, series.to_csv(), meta)
}

fn selftest_checks() -> Vec<(&'static str, bool)> {
    let mut checks = Vec::new();

    let triangular = (0..100u64).all(|i| {
        let a = random_unipotent(2 + (i % 4) as usize, i, 3).expect("valid parameters");
        let a = if i % 3 == 0 { a.neg() } else { a };
        triangularize(&a).is_ok_and(|form| form.verify(&a))
    });
    checks.push(("triangularize 100 generated matrices", triangular));

    let completion = complete_to_unimodular(&[6.into(), 10.into(), 15.into()])
        .is_ok_and(|p| p.det() == 1 && p.matrix().column(0) == vec![6.into(), 10.into(), 15.into()]);
    checks.push(("unimodular completion of (6, 10, 15)", completion));

    let shear = AffineTorusFlow::new(IntMatrix::from_i64(&[[1, 1], [0, 1]]), TorusPoint::parse(&["0", "1/2"]).unwrap())
        .expect("unimodular");
    let x = TorusPoint::parse(&["1/3", "1/5"]).unwrap();
    let orbit = orbit_polynomials(shear.matrix(), shear.shift(), &x).expect("upper");
    let mut cur = x.clone();
    let mut orbit_ok = true;
    for n in 0..200 {
        orbit_ok &= orbit.point_at(n) == cur;
        cur = shear.apply(&cur).expect("dimension");
    }
    checks.push(("orbit polynomials against iteration", orbit_ok));

    let mu = mobius_sieve(10_000);
    checks.push(("sieve against trial division", (1..=10_000u64).all(|n| mu[n as usize] == mobius_trial_division(n))));

    let class = |rows: [[i64; 2]; 2]| classify_matrix_2x2(&IntMatrix::from_i64(&rows)).ok();
    let classes = matches!(class([[1, 1], [0, 1]]), Some(distal_core::FlowClass::DistalUnipotent { sign: 1 }))
        && matches!(class([[2, 1], [1, 1]]), Some(distal_core::FlowClass::PositiveEntropy { .. }))
        && matches!(class([[0, -1], [1, 0]]), Some(distal_core::FlowClass::Equicontinuous));
    checks.push(("2x2 classification examples", classes));

    let weights = WeightSequence::mobius(200_000);
    let f = TrigPolynomial::random_box(vec![-1, -1], vec![1, 1], 7).expect("box");
    let cps = [1000, 100_000, 200_000];
    let run = |engine, workers| {
        disjointness_series(&weights, &shear.clone().into(), &f, &x.clone().into(), &cps, engine, &SumOptions::with_workers(workers))
    };
    let deterministic = match (run(Engine::Exact, 1), run(Engine::Exact, 3)) {
        (Ok(a), Ok(b)) => a.to_csv() == b.to_csv(),
        _ => false,
    };
    checks.push(("worker-independent output", deterministic));

    let agree = match (run(Engine::Exact, 0), run(Engine::Float, 0)) {
        (Ok(a), Ok(b)) => a.points.iter().zip(&b.points).all(|(p, q)| (p.value() - q.value()).norm() < 1e-6),
        _ => false,
    };
    checks.push(("exact and float engines agree", agree));

    let expansion = run(Engine::Exact, 0).ok().zip(exact_expansion(&shear, &f, &x).ok()).is_some_and(|(s, terms)| {
        let mut acc = vec![Complex64::new(0.0, 0.0); cps.len()];
        for (a, phase) in terms {
            let Ok(w) = weyl_sum(&weights, &PhaseSpec::Orbit(phase), &cps, &SumOptions::default()) else {
                return false;
            };
            for (t, p) in acc.iter_mut().zip(&w.points) {
                *t += a * p.value();
            }
        }
        acc.iter().zip(&s.points).all(|(t, p)| (t - p.value()).norm() < 1e-10)
    });
    checks.push(("expansion into Weyl sums", expansion));

    checks
}

fn run_selftest() -> Outcome {
    let checks = selftest_checks();
    let mut failed = Vec::new();
    for (name, ok) in &checks {
        println!("selftest {name}: {}", if *ok { "ok" } else { "FAILED" });
        if !ok {
            failed.push(*name);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Compute(anyhow!("selftest failures: {}", failed.join(", "))))
    }
}
