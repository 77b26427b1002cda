use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use super::dataset::{write_dataset, Dataset, DatasetSpec, LoadedSplit, Split};
use super::{EvalArgs, GenDataArgs, Method, ReconstructArgs, SplitArg, TrainArgs};
use crate::error::{Error, Result};
use crate::feasibility::{clamp_unit, DropOperator};
use crate::ffpn::{ffpn_forward, train, TrainConfig, LOG_HEADER};
use crate::metrics::{MetricReport, SUMMARY_HEADER};
use crate::numerics::io::write_atomic;
use crate::numerics::{norm, read_image, write_image, Image, Prng};
use crate::regularizer::{read_weights, write_weights, NetworkWeights, DESK_SLOPE};
use crate::variational::{
    default_tvs_grid, trace_to_csv, tune_tvs, tvm_reconstruct, tvs_reconstruct, AdmmParams,
    TvsParams,
};

const TVS_DEFAULT_ITERS: usize = 20;
const TVM_EPS_MARGIN: f64 = 1.1;
const INIT_STREAM: u64 = 0;

pub(super) fn execute(cmd: super::Command) -> Result<()> {
    match cmd {
        super::Command::GenData(a) => gen_data(&a),
        super::Command::Reconstruct(a) => reconstruct(&a),
        super::Command::Train(a) => train_cmd(&a),
        super::Command::Eval(a) => eval(&a),
    }
}

fn ensure_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn gen_data(a: &GenDataArgs) -> Result<()> {
    let spec = DatasetSpec {
        n_train: a.n_train,
        n_test: a.n_test,
        side: a.side,
        angles: a.angles,
        beams: a.beams,
        noise: a.noise,
        noise_model: a.noise_model,
        seed: a.seed,
        ..DatasetSpec::default()
    };
    write_dataset(&a.out, &spec)?;
    println!(
        "wrote {} training and {} test pairs ({}x{}, {} angles, {} beams) to {}",
        spec.n_train,
        spec.n_test,
        spec.side,
        spec.side,
        spec.angles,
        spec.beams,
        a.out.display()
    );
    Ok(())
}

fn split_of(s: SplitArg) -> Split {
    match s {
        SplitArg::Train => Split::Train,
        SplitArg::Test => Split::Test,
    }
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Drop => "drop",
        Method::Tvs => "tvs",
        Method::Tvm => "tvm",
        Method::Ffpn => "ffpn",
    }
}

/// `iters` plain DROP steps from zero, clipped to `[0, 1]`.
fn drop_reconstruct(op: &DropOperator, data: &[f64], iters: usize) -> Result<Vec<f64>> {
    let mut u = vec![0.0; op.n_unknowns()];
    for k in 1..=iters {
        u = op.apply(data, &u)?;
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged { iteration: k });
        }
    }
    clamp_unit(&mut u);
    Ok(u)
}

fn tuning_subset(train: &LoadedSplit, n: usize) -> Result<Vec<(&[f64], &[f64])>> {
    if train.samples.is_empty() || n == 0 {
        return Err(Error::invalid("tuning needs a nonempty training split"));
    }
    Ok(train
        .samples
        .iter()
        .take(n)
        .map(|s| (s.data.as_slice(), s.truth.as_slice()))
        .collect())
}

/// `1.1 × noise × mean ‖Ãu*‖` over the first training samples, with `Ã` the
/// row-normalized system.
fn estimate_tvm_eps(ds: &Dataset, n: usize) -> Result<f64> {
    let train = ds.load(Split::Train)?;
    let subset = tuning_subset(&train, n)?;
    let mut total = 0.0;
    for (_, truth) in &subset {
        total += norm(&ds.matrix.spmv(truth)?);
    }
    let eps = TVM_EPS_MARGIN * ds.spec.noise * total / subset.len() as f64;
    Ok(eps.max(1e-6))
}

fn reconstruct(a: &ReconstructArgs) -> Result<()> {
    let ds = Dataset::open(&a.data)?;
    let split = ds.load(split_of(a.split))?;
    let op = ds.drop_operator(a.relaxation)?;
    let shape = ds.shape();
    ensure_dir(&a.out)?;

    let weights = match (a.method, &a.weights) {
        (Method::Ffpn, None) => {
            return Err(Error::invalid("--method ffpn requires --weights FILE"));
        }
        (Method::Ffpn, Some(p)) => Some(read_weights(p)?),
        _ => None,
    };

    let mut tvs = TvsParams {
        alpha: a.alpha.unwrap_or(TvsParams::default().alpha),
        beta: a.beta.unwrap_or(TvsParams::default().beta),
        eps_stab: a.eps_stab,
        iterations: a.iters.unwrap_or(TVS_DEFAULT_ITERS),
    };
    if a.method == Method::Tvs && a.tune {
        let train = ds.load(Split::Train)?;
        let subset = tuning_subset(&train, a.tune_samples)?;
        let (alphas, betas) = default_tvs_grid();
        let (best, mse) = tune_tvs(&op, &subset, shape, &alphas, &betas, &tvs)?;
        println!("tuned TVS: alpha={} beta={} (training MSE {mse:.6})", best.alpha, best.beta);
        write_atomic(
            a.out.join("tvs_tuning.txt"),
            format!("alpha={:?}\nbeta={:?}\ntrain_mse={mse:?}\nsamples={}\n", best.alpha, best.beta, subset.len())
                .as_bytes(),
        )?;
        tvs = best;
    }
    let admm = if a.method == Method::Tvm {
        let eps = match a.eps {
            Some(e) => e,
            None => estimate_tvm_eps(&ds, a.tune_samples)?,
        };
        let p = AdmmParams {
            alpha: a.alpha.unwrap_or(0.1),
            beta: a.beta.unwrap_or(0.1),
            lambda: a.lambda,
            eps,
            iterations: a.iters.unwrap_or(AdmmParams::default().iterations),
        };
        p.validate()?;
        Some(p)
    } else {
        None
    };

    let mut report = MetricReport::new();
    let mut iteration_log = String::from("file,iterations,converged,final_residual\n");
    for (name, sample) in split.names.iter().zip(&split.samples) {
        let image = match a.method {
            Method::Drop => drop_reconstruct(&op, &sample.data, a.iters.unwrap_or(TVS_DEFAULT_ITERS))?,
            Method::Tvs => tvs_reconstruct(&op, &sample.data, shape, &tvs)?.image,
            Method::Tvm => {
                let rep = tvm_reconstruct(&ds.matrix, &sample.data, shape, admm.as_ref().expect("set"))?;
                if a.traces {
                    let trace_name = name.replace("phantom_", "trace_").replace(".fimg", ".csv");
                    write_atomic(a.out.join(trace_name), trace_to_csv(&rep.trace).as_bytes())?;
                }
                rep.image
            }
            Method::Ffpn => {
                let w = weights.as_ref().expect("loaded");
                let rep = ffpn_forward(w, &op, &sample.data, shape, a.delta, a.max_iter)?;
                iteration_log.push_str(&format!(
                    "{name},{},{},{:?}\n",
                    rep.iterations,
                    u8::from(rep.converged),
                    rep.final_residual
                ));
                let mut u = rep.iterate;
                clamp_unit(&mut u);
                u
            }
        };
        report.push(name.clone(), &image, &sample.truth, shape)?;
        write_image(a.out.join(name), &Image::new(shape.0, shape.1, image)?)?;
    }

    let method = method_name(a.method);
    write_atomic(a.out.join("metrics.csv"), report.to_csv().as_bytes())?;
    let summary = format!("{SUMMARY_HEADER}{}", report.summary_row(method));
    write_atomic(a.out.join("summary.csv"), summary.as_bytes())?;
    if a.method == Method::Ffpn {
        write_atomic(a.out.join("iterations.csv"), iteration_log.as_bytes())?;
    }
    print!("{summary}");
    Ok(())
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

fn train_cmd(a: &TrainArgs) -> Result<()> {
    let ds = Dataset::open(&a.data)?;
    let train_split = ds.load(Split::Train)?;
    let op = ds.drop_operator(a.relaxation)?;
    let shape = ds.shape();
    let cfg = TrainConfig {
        learning_rate: a.lr,
        batch_size: a.batch,
        epochs: a.epochs,
        delta: a.delta,
        max_iter: a.max_iter,
        gamma: a.gamma,
        beta1: a.beta1,
        beta2: a.beta2,
        adam_eps: a.adam_eps,
        seed: a.seed,
        ..TrainConfig::default()
    };
    let init = NetworkWeights::init(a.width, 4, 3, DESK_SLOPE, &mut Prng::derive(a.seed, INIT_STREAM))?
        .with_placement(a.placement);
    let log_path = a.log.clone().unwrap_or_else(|| with_suffix(&a.out, ".log.csv"));
    let mut log = String::from(LOG_HEADER);
    let result = train(&op, shape, &train_split.samples, init, &cfg, |record, weights| {
        log.push_str(&record.csv_row());
        write_atomic(&log_path, log.as_bytes())?;
        if a.checkpoint_every > 0 && record.epoch > 0 && record.epoch % a.checkpoint_every == 0 {
            write_weights(with_suffix(&a.out, &format!(".epoch{:04}", record.epoch)), weights)?;
        }
        println!(
            "epoch {:>3}  train_mse {:.6}  val_psnr {:.3}  fp_iters {:.1}{}",
            record.epoch,
            record.train_mse,
            record.val_psnr,
            record.mean_fp_iterations,
            if record.safeguard_triggered { "  safeguard" } else { "" }
        );
        Ok(())
    });
    match result {
        Ok(outcome) => {
            write_weights(&a.out, outcome.weights())?;
            println!("wrote {} and {}", a.out.display(), log_path.display());
            Ok(())
        }
        Err(Error::TrainingDiverged {
            epoch,
            batch,
            last_good,
        }) => {
            let partial = with_suffix(&a.out, ".partial");
            write_weights(&partial, &last_good)?;
            eprintln!("last good weights kept in {}", partial.display());
            Err(Error::TrainingDiverged {
                epoch,
                batch,
                last_good,
            })
        }
        Err(e) => Err(e),
    }
}

fn fimg_names(dir: &Path) -> Result<BTreeSet<String>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut names = BTreeSet::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.ends_with(".fimg") && !name.starts_with('.') {
            names.insert(name);
        }
    }
    Ok(names)
}

fn eval(a: &EvalArgs) -> Result<()> {
    let truth = fimg_names(&a.truth)?;
    let pred = fimg_names(&a.pred)?;
    let missing: Vec<&String> = truth.difference(&pred).collect();
    let extra: Vec<&String> = pred.difference(&truth).collect();
    if !missing.is_empty() || !extra.is_empty() {
        let mut msg = String::from("prediction and truth sets differ");
        if !missing.is_empty() {
            msg.push_str(&format!("; missing predictions: {}", join(&missing)));
        }
        if !extra.is_empty() {
            msg.push_str(&format!("; no ground truth for: {}", join(&extra)));
        }
        return Err(Error::invalid(msg));
    }
    if truth.is_empty() {
        return Err(Error::invalid(format!("no .fimg files in {}", a.truth.display())));
    }
    let mut report = MetricReport::new();
    for name in &truth {
        let t = read_image(a.truth.join(name))?;
        let p = read_image(a.pred.join(name))?;
        if t.shape() != p.shape() {
            return Err(Error::invalid(format!(
                "{name}: prediction {:?} vs truth {:?}",
                p.shape(),
                t.shape()
            )));
        }
        report.push(name.clone(), p.data(), t.data(), t.shape())?;
    }
    let csv = report.to_csv();
    match &a.out {
        Some(path) => write_atomic(path, csv.as_bytes())?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn join(names: &[&String]) -> String {
    names.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")
}
