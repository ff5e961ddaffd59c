use std::fmt::Write as _;
use std::fs::{self, OpenOptions};
use std::io::Write as _;
use std::path::{Path, PathBuf};

use xcu_core::checkpoint::Checkpoint;
use xcu_core::eval::{evaluate_model, export_residual_field, held_out, mean_std, sweep_clamp, welch_t_test, improvement_pct, Evaluation};
use xcu_core::formats::{
    grid_path, load_dataset, load_grid, load_manifest, load_split, log_line, predictions_csv, residual_field_to_text,
    save_dataset, save_text, split_to_toml, sweep_csv, LOG_HEADER, MANIFEST_FILE,
};
use xcu_core::split::split_dataset;
use xcu_core::synth::make_synthetic_dataset;
use xcu_core::training::{baseline_model, train_with_progress, TrainConfig};
use xcu_core::{Result, XcError};

use crate::config::{RunConfig, DEFAULT_OUT, OUT_ENV};
use crate::{Cli, Command};

struct Ctx {
    cfg: RunConfig,
    /// True when a config file was given.
    explicit: bool,
    seed: Option<u64>,
    out: PathBuf,
}

impl Ctx {
    fn data_dir(&self, flag: Option<PathBuf>) -> PathBuf {
        flag.or_else(|| self.cfg.data_dir.clone()).unwrap_or_else(|| self.out.clone())
    }

    fn split_path(&self, flag: Option<PathBuf>) -> PathBuf {
        flag.or_else(|| self.cfg.split_file.clone())
            .unwrap_or_else(|| self.out.join("split.toml"))
    }

    fn train_config(&self, epochs: Option<usize>) -> TrainConfig {
        let mut tc = self.cfg.train_config();
        if let Some(s) = self.seed {
            tc.seed = s;
        }
        if let Some(e) = epochs {
            tc.epochs = e;
        }
        tc
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let (cfg, explicit) = match &cli.config {
        Some(path) => (RunConfig::load(path)?, true),
        None => (RunConfig::default(), false),
    };
    let out = cli
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    fs::create_dir_all(&out).map_err(|e| XcError::InvalidConfig(format!("{}: {e}", out.display())))?;
    let ctx = Ctx {
        cfg,
        explicit,
        seed: cli.seed,
        out,
    };
    match cli.command {
        Command::Synth => synth(&ctx),
        Command::Split { data } => split(&ctx, data),
        Command::Train {
            data,
            split,
            epochs,
            loss_mode,
            feature_set,
            repetitions,
        } => {
            let mut tc = ctx.train_config(epochs);
            if let Some(m) = loss_mode {
                tc.loss_mode = m.parse()?;
            }
            if let Some(f) = feature_set {
                tc.feature_set = f.parse()?;
            }
            let reps = repetitions.unwrap_or(ctx.cfg.repetitions);
            train(&ctx, tc, data, split, reps)
        }
        Command::Eval {
            checkpoints,
            data,
            split,
            subset,
        } => eval(&ctx, &checkpoints, data, split, &subset),
        Command::ExportResiduals { checkpoint, species, data } => export(&ctx, &checkpoint, &species, data),
        Command::Sweep {
            data,
            split,
            k1,
            k2,
            epochs,
        } => sweep(&ctx, data, split, k1, k2, epochs),
    }
}

fn synth(ctx: &Ctx) -> Result<()> {
    let mut sc = ctx.cfg.synth.clone();
    if let Some(s) = ctx.seed {
        sc.seed = s;
    }
    let generated = make_synthetic_dataset(&sc, &ctx.cfg.conventional)?;
    save_dataset(&ctx.out, &generated.dataset, ctx.cfg.binary_grids)?;
    let mut record = String::from("# residual used to generate the reference energies\n");
    record.push_str(
        "# delta = ratio * e_conv, ratio = base + gradient_amplitude * (2 t - 1) + ratio_amplitude * tanh(4 (e_conv / e_lda - 1)),\n",
    );
    record.push_str("# t = s^2 / (1 + s^2), s = |grad rho| / (2 (3 pi^2)^(1/3) rho^(4/3))\n");
    let body = toml::to_string(&TruthRecord {
        synth: sc,
        conventional: generated.conventional,
    })
    .map_err(|e| XcError::InvalidData(e.to_string()))?;
    record.push_str(&body);
    save_text(&ctx.out.join("truth.toml"), &record)?;
    println!(
        "wrote {} species and {} reactions to {}",
        generated.dataset.grids.len(),
        generated.dataset.manifest.reactions.len(),
        ctx.out.display()
    );
    Ok(())
}

#[derive(serde::Serialize)]
struct TruthRecord {
    synth: xcu_core::synth::SynthConfig,
    conventional: xcu_core::functionals::ConventionalSpec,
}

fn split(ctx: &Ctx, data: Option<PathBuf>) -> Result<()> {
    let dir = ctx.data_dir(data);
    let manifest = load_manifest(&dir.join(MANIFEST_FILE))?;
    for id in manifest.referenced_species() {
        if !grid_path(&dir, &id, false).exists() && !grid_path(&dir, &id, true).exists() {
            return Err(XcError::MissingSpecies(id));
        }
    }
    let seed = ctx.seed.unwrap_or(ctx.cfg.split_seed);
    let s = split_dataset(&manifest, seed)?;
    let path = ctx.out.join("split.toml");
    save_text(&path, &split_to_toml(&s, seed)?)?;
    println!(
        "split {} reactions into train {} / validation {} / test {} -> {}",
        s.len(),
        s.train.len(),
        s.validation.len(),
        s.test.len(),
        path.display()
    );
    Ok(())
}

fn open_log(path: &Path) -> Result<fs::File> {
    let io = |e: std::io::Error| XcError::Format {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    fs::write(path, format!("{LOG_HEADER}\n")).map_err(io)?;
    OpenOptions::new().append(true).open(path).map_err(io)
}

fn train(ctx: &Ctx, base: TrainConfig, data: Option<PathBuf>, split: Option<PathBuf>, reps: usize) -> Result<()> {
    if reps == 0 {
        return Err(XcError::InvalidConfig("repetitions must be at least 1".into()));
    }
    base.check()?;
    let dataset = load_dataset(&ctx.data_dir(data))?;
    let split = load_split(&ctx.split_path(split))?;
    for rep in 0..reps {
        let mut tc = base.clone();
        tc.seed = base.seed + rep as u64;
        let suffix = if reps == 1 { String::new() } else { format!("-seed{}", tc.seed) };
        let log_path = ctx.out.join(format!("train{suffix}.log"));
        let mut log = open_log(&log_path)?;
        let mut io_err = None;
        let outcome = train_with_progress(&tc, &dataset, &split, &ctx.cfg.conventional, |r| {
            eprintln!(
                "epoch {:>4}  lr {:.3e}  train {:.5e}  val {:.5e}  val_rmse {:.4} kcal/mol",
                r.epoch, r.learning_rate, r.train_loss, r.val_loss, r.val_rmse
            );
            if let Err(e) = writeln!(log, "{}", log_line(r)) {
                io_err.get_or_insert(e);
            }
        })?;
        if let Some(e) = io_err {
            return Err(XcError::Format {
                path: log_path.display().to_string(),
                message: e.to_string(),
            });
        }
        let ck_path = ctx.out.join(format!("checkpoint{suffix}.json"));
        Checkpoint::from_outcome(&outcome, &tc).save(&ck_path)?;
        println!(
            "seed {}: best epoch {} validation RMSE {:.4} kcal/mol -> {}",
            tc.seed,
            outcome.best_epoch,
            outcome.best_val_rmse,
            ck_path.display()
        );
    }
    Ok(())
}

fn subset_ids(split: &xcu_core::split::SplitAssignment, subset: &str) -> Result<Vec<String>> {
    match subset {
        "train" => Ok(split.train.clone()),
        "validation" | "val" => Ok(split.validation.clone()),
        "test" => Ok(held_out(split).to_vec()),
        other => Err(XcError::InvalidConfig(format!(
            "subset must be train, validation or test, got `{other}`"
        ))),
    }
}

fn eval(ctx: &Ctx, checkpoints: &[PathBuf], data: Option<PathBuf>, split: Option<PathBuf>, subset: &str) -> Result<()> {
    let split = load_split(&ctx.split_path(split))?;
    let ids = subset_ids(&split, subset)?;
    let mut models = Vec::with_capacity(checkpoints.len());
    for path in checkpoints {
        let model = Checkpoint::load(path)?.to_model()?;
        if let Some(tc) = ctx.cfg.train.as_ref().filter(|_| ctx.explicit) {
            if tc.feature_set != model.feature_set {
                return Err(XcError::InvalidConfig(format!(
                    "{} was trained on {} features but the config asks for {}",
                    path.display(),
                    model.feature_set.name(),
                    tc.feature_set.name()
                )));
            }
        }
        models.push((path, model));
    }
    let dataset = load_dataset(&ctx.data_dir(data))?;
    let first = &models[0].1;
    let base_cfg = TrainConfig {
        feature_set: first.feature_set,
        clamp: first.clamp,
        ..TrainConfig::default()
    };
    let baseline = evaluate_model(&baseline_model(&base_cfg, &first.conventional)?, &dataset, &ids)?;
    save_text(&ctx.out.join("predictions-baseline.csv"), &predictions_csv(&baseline.predictions))?;

    let mut evals: Vec<(String, Evaluation)> = Vec::new();
    for (path, model) in &models {
        let stem = path.file_stem().map_or("model".into(), |s| s.to_string_lossy().into_owned());
        let e = evaluate_model(model, &dataset, &ids)?;
        save_text(&ctx.out.join(format!("predictions-{stem}.csv")), &predictions_csv(&e.predictions))?;
        evals.push((stem, e));
    }

    let mut metrics = String::from("label,n,rmse_kcal,rmse_std,mae_kcal,mae_std,mad_kcal,mad_std\n");
    let b = &baseline.metrics;
    let _ = writeln!(metrics, "baseline,{},{:e},0e0,{:e},0e0,{:e},0e0", b.n, b.rmse, b.mae, b.mad);
    for (stem, e) in &evals {
        let m = &e.metrics;
        let _ = writeln!(metrics, "{stem},{},{:e},0e0,{:e},0e0,{:e},0e0", m.n, m.rmse, m.mae, m.mad);
    }
    let column = |f: fn(&Evaluation) -> f64| mean_std(&evals.iter().map(|(_, e)| f(e)).collect::<Vec<_>>());
    let (rmse, rmse_sd) = column(|e| e.metrics.rmse)?;
    let (mae, mae_sd) = column(|e| e.metrics.mae)?;
    let (mad, mad_sd) = column(|e| e.metrics.mad)?;
    let _ = writeln!(metrics, "model_mean,{},{rmse:e},{rmse_sd:e},{mae:e},{mae_sd:e},{mad:e},{mad_sd:e}", b.n);
    let pct = |base: f64, new: f64| improvement_pct(base, new).map_or(f64::NAN, |p| p);
    let _ = writeln!(
        metrics,
        "improvement_pct,{},{:e},,{:e},,{:e},",
        b.n,
        pct(b.rmse, rmse),
        pct(b.mae, mae),
        pct(b.mad, mad)
    );
    save_text(&ctx.out.join("metrics.csv"), &metrics)?;

    let mut welch = String::from("label,t,df,p\n");
    let base_abs: Vec<f64> = b.per_reaction_errors.iter().map(|e| e.abs()).collect();
    for (stem, e) in &evals {
        let abs: Vec<f64> = e.metrics.per_reaction_errors.iter().map(|e| e.abs()).collect();
        match welch_t_test(&abs, &base_abs) {
            Ok(w) => {
                let _ = writeln!(welch, "{stem},{:e},{:e},{:e}", w.t, w.df, w.p);
            }
            Err(_) => {
                let _ = writeln!(welch, "{stem},,,");
            }
        }
    }
    save_text(&ctx.out.join("welch.csv"), &welch)?;

    println!("{:<24} {:>10} {:>10} {:>10}", "", "RMSE", "MAE", "MAD");
    println!("{:<24} {:>10.4} {:>10.4} {:>10.4}", "baseline", b.rmse, b.mae, b.mad);
    for (stem, e) in &evals {
        let m = &e.metrics;
        println!("{stem:<24} {:>10.4} {:>10.4} {:>10.4}", m.rmse, m.mae, m.mad);
    }
    if evals.len() > 1 {
        println!("{:<24} {rmse:>10.4} {mae:>10.4} {mad:>10.4}  (+/- {rmse_sd:.4}, {mae_sd:.4}, {mad_sd:.4})", "mean");
    }
    println!(
        "{:<24} {:>9.2}% {:>9.2}% {:>9.2}%",
        "improvement",
        pct(b.rmse, rmse),
        pct(b.mae, mae),
        pct(b.mad, mad)
    );
    Ok(())
}

fn export(ctx: &Ctx, checkpoint: &Path, species: &str, data: Option<PathBuf>) -> Result<()> {
    let model = Checkpoint::load(checkpoint)?.to_model()?;
    let dir = ctx.data_dir(data);
    let text = grid_path(&dir, species, false);
    let path = if text.exists() { text } else { grid_path(&dir, species, true) };
    if !path.exists() {
        return Err(XcError::MissingSpecies(species.to_owned()));
    }
    let grid = load_grid(&path)?;
    let field = export_residual_field(&grid, &model)?;
    let out = ctx.out.join(format!("residuals-{species}.txt"));
    save_text(&out, &residual_field_to_text(species, &field)?)?;
    println!("wrote {} points to {}", field.len(), out.display());
    Ok(())
}

fn sweep(
    ctx: &Ctx,
    data: Option<PathBuf>,
    split: Option<PathBuf>,
    k1: Vec<f64>,
    k2: Vec<f64>,
    epochs: Option<usize>,
) -> Result<()> {
    let pick = |flag: Vec<f64>, cfg: &Vec<f64>| match (flag.is_empty(), cfg.is_empty()) {
        (false, _) => flag,
        (true, false) => cfg.clone(),
        (true, true) => vec![1.0],
    };
    let k1 = pick(k1, &ctx.cfg.sweep.k1);
    let k2 = pick(k2, &ctx.cfg.sweep.k2);
    let tc = ctx.train_config(epochs);
    tc.check()?;
    let dataset = load_dataset(&ctx.data_dir(data))?;
    let split = load_split(&ctx.split_path(split))?;
    let rows = sweep_clamp(&tc, &k1, &k2, &dataset, &split, &ctx.cfg.conventional)?;
    let path = ctx.out.join("sweep.csv");
    save_text(&path, &sweep_csv(&rows))?;
    for r in &rows {
        println!("k1 {:<6} k2 {:<6} rmse {:.4} kcal/mol", r.k1, r.k2, r.rmse);
    }
    println!("-> {}", path.display());
    Ok(())
}
