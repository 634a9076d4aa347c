use std::fs;
use std::path::Path;

use anyhow::Context;
use serde::Deserialize;
use trajkin::anomaly::{run_anomaly_experiment, AnomalyConfig, AnomalyReport};
use trajkin::features::{
    read_feature_csv, write_feature_csv, FeatureDataset, PipelineConfig, FEATURE_NAMES,
};
use trajkin::learn::{run_classification, ClassificationConfig, ClassificationReport, TreeParams};
use trajkin::pipeline::extract_from_root;
use trajkin::synth::{generate_corpus, write_corpus, UserProfile};

use crate::config::{require, RunConfig};
use crate::output::{write_atomic, write_csv, write_json};
use crate::Failure;

fn input(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Input(e.into())
}

fn invalid(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Invalid(e.into())
}

fn load_features(config: &RunConfig) -> Result<FeatureDataset, Failure> {
    let path = config.features_path();
    let file = fs::File::open(&path)
        .with_context(|| format!("opening {}", path.display()))
        .map_err(input)?;
    let rows = read_feature_csv(file)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(input)?;
    if rows.is_empty() {
        return Err(invalid(anyhow::anyhow!("{} has no rows", path.display())));
    }
    Ok(FeatureDataset {
        rows,
        ..FeatureDataset::default()
    })
}

pub fn extract(config: &RunConfig) -> Result<(), Failure> {
    let root = require(&config.root, "root")?;
    let pipeline = PipelineConfig {
        iqr_multiplier: config.iqr_multiplier,
        min_trips: config.min_trips,
    };
    let outcome = extract_from_root(root, &pipeline).map_err(input)?;
    let ds = &outcome.dataset;
    let prov = &ds.provenance;

    let mut csv = Vec::new();
    write_feature_csv(&ds.rows, &mut csv).map_err(input)?;
    write_atomic(&config.out.join("features.csv"), &csv)?;
    write_json(
        &config.out.join("extract_provenance.json"),
        &serde_json::json!({
            "ingest": outcome.ingest,
            "features": prov,
            "column_stats": ds.column_stats(),
        }),
    )?;

    let counts = ds.user_counts();
    println!("users with labels       {}", outcome.ingest.users_loaded);
    println!(
        "users without labels    {}",
        outcome.ingest.users_without_labels.len()
    );
    println!(
        "inverted labels dropped {}",
        outcome.ingest.inverted_labels_dropped
    );
    println!(
        "labels with < 2 points  {}",
        outcome.ingest.labels_without_points
    );
    println!("trips assembled         {}", prov.trips_in);
    println!("dropped: < 3 points     {}", prov.too_few_points);
    println!("dropped: bad timestamps {}", prov.duplicate_timestamps);
    println!("dropped: IQR outliers   {}", prov.iqr_outliers);
    println!(
        "dropped: user < {:<3}     {}",
        config.min_trips, prov.below_threshold
    );
    println!("final: {} trips over {} users", ds.rows.len(), counts.len());
    if let (Some(max), Some(min)) = (counts.first(), counts.last()) {
        println!(
            "trips per user: min {} max {} mean {:.1}",
            min.1,
            max.1,
            ds.rows.len() as f64 / counts.len() as f64
        );
    }
    println!("{:<16} {:>14} {:>14}", "feature", "mean", "std");
    for s in ds.column_stats() {
        println!("{:<16} {:>14.3} {:>14.3}", s.feature, s.mean, s.std);
    }
    Ok(())
}

fn write_classification_outputs(
    out: &Path,
    dataset: &FeatureDataset,
    report: &ClassificationReport,
) -> Result<(), Failure> {
    write_json(&out.join("classification_report.json"), report)?;

    let tree = report.tree();
    let mut cells = Vec::new();
    for (i, truth) in report.classes.iter().enumerate() {
        for (j, pred) in report.classes.iter().enumerate() {
            cells.push(vec![
                truth.clone(),
                pred.clone(),
                tree.confusion.counts[i][j].to_string(),
            ]);
        }
    }
    write_csv(
        &out.join("confusion_matrix.csv"),
        &["true_user", "predicted_user", "count"],
        cells,
    )?;

    let per_class = report
        .per_class
        .iter()
        .map(|c| {
            vec![
                c.class.clone(),
                c.trips.to_string(),
                c.precision.to_string(),
                c.recall.to_string(),
                c.f1.to_string(),
            ]
        })
        .collect();
    write_csv(
        &out.join("per_class_metrics.csv"),
        &["user_id", "trips", "precision", "recall", "f1"],
        per_class,
    )?;

    for (x, y) in [("max_speed", "std_abs_accel"), ("max_speed", "mean_speed")] {
        let xi = FEATURE_NAMES
            .iter()
            .position(|n| *n == x)
            .expect("known feature");
        let yi = FEATURE_NAMES
            .iter()
            .position(|n| *n == y)
            .expect("known feature");
        let points = dataset
            .rows
            .iter()
            .map(|r| {
                let v = r.features.to_array();
                vec![
                    r.user_id.clone(),
                    r.modality.to_string(),
                    v[xi].to_string(),
                    v[yi].to_string(),
                ]
            })
            .collect();
        write_csv(
            &out.join(format!("scatter_{x}_vs_{y}.csv")),
            &["user_id", "modality", x, y],
            points,
        )?;
    }
    Ok(())
}

pub fn classify(config: &RunConfig) -> Result<(), Failure> {
    let dataset = load_features(config)?;
    let cfg = ClassificationConfig {
        k_folds: config.k_folds,
        seed: config.seed,
        tree: TreeParams::default(),
    };
    let report = run_classification(&dataset, &cfg).map_err(invalid)?;
    write_classification_outputs(&config.out, &dataset, &report)?;

    println!(
        "{} trips, {} users, {} folds",
        dataset.rows.len(),
        report.classes.len(),
        cfg.k_folds
    );
    println!(
        "{:<16} {:>15} {:>15} {:>15}",
        "model", "accuracy", "roc_auc", "macro_f1"
    );
    for m in &report.models {
        println!(
            "{:<16} {:>7.3} ± {:<5.3} {:>7.3} ± {:<5.3} {:>7.3} ± {:<5.3}",
            m.model,
            m.accuracy.mean,
            m.accuracy.std,
            m.roc_auc.mean,
            m.roc_auc.std,
            m.macro_f1.mean,
            m.macro_f1.std
        );
    }
    Ok(())
}

fn write_anomaly_outputs(out: &Path, report: &AnomalyReport) -> Result<(), Failure> {
    let trials = report
        .trials
        .iter()
        .map(|t| {
            vec![
                t.subject_user.clone(),
                t.trial.to_string(),
                t.seed.to_string(),
                t.n_normal.to_string(),
                t.n_anomaly.to_string(),
                t.pr_auc_lof.to_string(),
                t.pr_auc_random.to_string(),
            ]
        })
        .collect();
    write_csv(
        &out.join("anomaly_trials.csv"),
        &[
            "subject_user",
            "trial",
            "seed",
            "n_normal",
            "n_anomaly",
            "pr_auc_lof",
            "pr_auc_random",
        ],
        trials,
    )?;

    let per_user = report
        .per_user
        .iter()
        .map(|u| {
            vec![
                u.user.clone(),
                u.trials.to_string(),
                u.mean_pr_auc_lof.to_string(),
                u.max_pr_auc_lof.to_string(),
                u.mean_pr_auc_random.to_string(),
            ]
        })
        .collect();
    write_csv(
        &out.join("anomaly_per_user.csv"),
        &[
            "user_id",
            "trials",
            "mean_pr_auc_lof",
            "max_pr_auc_lof",
            "mean_pr_auc_random",
        ],
        per_user,
    )?;

    write_json(
        &out.join("anomaly_summary.json"),
        &serde_json::json!({
            "config": report.config,
            "trials": report.trials.len(),
            "lof": report.lof,
            "random": report.random,
        }),
    )
}

pub fn anomaly(config: &RunConfig) -> Result<(), Failure> {
    let dataset = load_features(config)?;
    let cfg = AnomalyConfig {
        trials_per_user: config.trials_per_user,
        rate: config.anomaly_rate,
        lof_k: config.lof_k,
        seed: config.seed,
    };
    let report = run_anomaly_experiment(&dataset, &cfg).map_err(invalid)?;
    write_anomaly_outputs(&config.out, &report)?;

    println!("{} trials", report.trials.len());
    println!("{:<8} {:>8} {:>8}", "", "LOF", "random");
    for (name, a, b) in [
        ("mean", report.lof.mean, report.random.mean),
        ("std", report.lof.std, report.random.std),
        ("min", report.lof.min, report.random.min),
        ("median", report.lof.median, report.random.median),
        ("max", report.lof.max, report.random.max),
    ] {
        println!("{name:<8} {a:>8.3} {b:>8.3}");
    }
    if let Some(best) = report.per_user.first() {
        println!(
            "best user {}: mean LOF PR-AUC {:.3}, best trial {:.3}",
            best.user, best.mean_pr_auc_lof, best.max_pr_auc_lof
        );
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
struct ProfileFile {
    profiles: Vec<UserProfile>,
}

fn load_profiles(path: &Path) -> Result<Vec<UserProfile>, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(input)?;
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let profiles = if is_json {
        serde_json::from_str::<Vec<UserProfile>>(&text).map_err(anyhow::Error::from)
    } else {
        toml::from_str::<ProfileFile>(&text)
            .map(|f| f.profiles)
            .map_err(anyhow::Error::from)
    }
    .with_context(|| format!("parsing {}", path.display()))
    .map_err(invalid)?;
    if profiles.is_empty() {
        return Err(invalid(anyhow::anyhow!(
            "{} lists no profiles",
            path.display()
        )));
    }
    for p in &profiles {
        p.validate().map_err(|e| invalid(anyhow::anyhow!(e)))?;
    }
    Ok(profiles)
}

pub fn synth(config: &RunConfig) -> Result<(), Failure> {
    let profiles = load_profiles(require(&config.profiles, "profiles")?)?;
    let corpus = generate_corpus(&profiles, config.seed);
    write_corpus(&corpus, &config.out)
        .with_context(|| format!("writing corpus under {}", config.out.display()))
        .map_err(input)?;
    println!(
        "wrote {} trips from {} profiles under {}",
        corpus.trips.len(),
        profiles.len(),
        config.out.join("Data").display()
    );
    Ok(())
}
