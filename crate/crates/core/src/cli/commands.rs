use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::anomaly::{run_contamination_experiment, ContaminationSpec, DEFAULT_M, DEFAULT_N};
use crate::discriminant::{evaluate, fit_lda, partition, LdaModel, SplitSpec};
use crate::error::{Error, Result};
use crate::featurize::{presets, IndicatorRule, PhraseRule, LIST_ITEM_PATTERN, LIST_MIN_ITEMS};
use crate::ingest::{
    fetch_embeddings, load_embeddings, save_embeddings, EmbeddingFormat, EmbeddingMatrix,
    EmbeddingServiceConfig, LabeledDataset, Pooling,
};
use crate::regress::{regress_indicator, regress_multi, FStatistic, RegressionReport};
use crate::stats::scores::{csv_field, fmt_sig9};
use crate::stats::{fit_pca, fit_scaler, max_components, scree_elbow, ComponentBudget, KdeModel, PcaModel, ScoreMatrix};

use super::args::*;
use super::report::Report;

pub struct Ctx<'a> {
    pub global: &'a GlobalArgs,
    pub report: Report,
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn resolve_format(path: &Path, format: Option<EmbeddingFormat>) -> Result<EmbeddingFormat> {
    format.or_else(|| EmbeddingFormat::from_path(path)).ok_or_else(|| {
        Error::invalid(format!(
            "cannot infer the embedding format of {}; pass --format",
            path.display()
        ))
    })
}

fn load_matrix(ctx: &mut Ctx, path: &Path, format: Option<EmbeddingFormat>) -> Result<EmbeddingMatrix> {
    ctx.report.input(path)?;
    let fmt = resolve_format(path, format)?;
    log::info!("loading {} as {:?}", path.display(), fmt);
    load_embeddings(path, fmt)
}

/// Loads embeddings and, when available, the dataset aligned to their rows.
fn load_input(ctx: &mut Ctx, input: &InputArgs) -> Result<(EmbeddingMatrix, Option<LabeledDataset>)> {
    let m = load_matrix(ctx, &input.embeddings, input.format)?;
    let dataset = match &input.labels {
        Some(p) => {
            ctx.report.input(p)?;
            let d = LabeledDataset::load_jsonl(p)?.align_to(m.sample_ids())?;
            Some(d)
        }
        None if m.labels().is_some() => Some(m.to_dataset()?),
        None => None,
    };
    let m = match &dataset {
        Some(d) => EmbeddingMatrix::with_labels(
            m.sample_ids().to_vec(),
            Some(d.labels().into_iter().map(str::to_string).collect()),
            m.values().clone(),
        )?,
        None => m,
    };
    Ok((m, dataset))
}

fn require_dataset(d: Option<LabeledDataset>, what: &str) -> Result<LabeledDataset> {
    d.ok_or_else(|| Error::invalid(format!("{what} needs labels: pass --labels or use an embedding file that carries them")))
}

fn standardized(ctx: &Ctx, m: EmbeddingMatrix) -> Result<EmbeddingMatrix> {
    if ctx.global.standardize {
        fit_scaler(&m)?.transform(&m)
    } else {
        Ok(m)
    }
}

fn full_pca(m: &EmbeddingMatrix) -> Result<PcaModel> {
    fit_pca(m, max_components(m.n_rows(), m.n_dims()))
}

fn resolve_budget(budget: ComponentBudget, pca: &PcaModel) -> Result<usize> {
    let k = budget.resolve(&pca.explained_variance)?;
    if k > pca.n_components() {
        return Err(Error::invalid(format!(
            "requested {k} components; at most {} are available",
            pca.n_components()
        )));
    }
    Ok(k)
}

fn axis_indices(axes: &[usize], available: usize, prefix: &str) -> Result<Vec<usize>> {
    if axes.is_empty() {
        return Err(Error::invalid("no axes requested"));
    }
    axes.iter()
        .map(|&a| {
            if a == 0 || a > available {
                Err(Error::invalid(format!(
                    "{prefix}{a} is out of range; {available} axes are available"
                )))
            } else {
                Ok(a - 1)
            }
        })
        .collect()
}

pub fn cmd_embed(ctx: &mut Ctx, a: &EmbedArgs) -> Result<PathBuf> {
    let out = &ctx.global.out;
    let (dir, file) = match EmbeddingFormat::from_path(out) {
        Some(_) => {
            let dir = out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
            (dir.to_path_buf(), out.clone())
        }
        None => (out.clone(), out.join("embeddings.embx")),
    };
    let mut cfg = EmbeddingServiceConfig::new(a.service_url.clone());
    cfg.auth_token_env = a.token_env.clone();
    cfg.batch_size = a.batch_size;
    cfg.timeout = a.timeout;
    cfg.pooling = match a.pooling {
        PoolingArg::Service => Pooling::ServicePooled,
        PoolingArg::Mean => Pooling::MeanPoolThenNormalize,
    };
    cfg.validate()?;
    cfg.resolve_token()?;

    ctx.report.input(&a.texts)?;
    let d = LabeledDataset::load_jsonl(&a.texts)?;
    let mut texts = Vec::with_capacity(d.len());
    for (i, s) in d.samples().iter().enumerate() {
        match &s.text {
            Some(t) => texts.push(t.clone()),
            None => {
                return Err(Error::Malformed {
                    row: i + 1,
                    message: format!("sample {:?} has no text", s.id),
                })
            }
        }
    }
    let fetched = fetch_embeddings(&cfg, &texts)?;
    let m = EmbeddingMatrix::with_labels(
        d.ids().into_iter().map(str::to_string).collect(),
        Some(d.labels().into_iter().map(str::to_string).collect()),
        fetched.values().clone(),
    )?;
    ensure_dir(&dir)?;
    save_embeddings(&m, &file, EmbeddingFormat::PackedBinary)?;
    let name = file.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    ctx.report.note_output(&name);
    ctx.report.note_output(&format!("{name}.manifest.json"));
    ctx.report.result("embedding", &json!({"rows": m.n_rows(), "dims": m.n_dims()}))?;
    Ok(dir)
}

fn components_csv(pca: &PcaModel, k: usize) -> String {
    let mut out = String::from("component");
    for j in 0..pca.n_dims() {
        out.push_str(&format!(",v{j}"));
    }
    out.push('\n');
    for c in 0..k {
        out.push_str(&format!("PC{}", c + 1));
        for &x in pca.components.row(c) {
            out.push(',');
            out.push_str(&fmt_sig9(x));
        }
        out.push('\n');
    }
    out
}

pub fn cmd_pca(ctx: &mut Ctx, a: &PcaArgs) -> Result<PathBuf> {
    let (m, _) = load_input(ctx, &a.input)?;
    let m = standardized(ctx, m)?;
    let pca = full_pca(&m)?;
    let k = resolve_budget(a.components, &pca)?;
    let keep: Vec<usize> = (0..k).collect();
    let scores = pca.project(&m, &keep)?;
    let dir = ctx.global.out.clone();
    ensure_dir(&dir)?;
    ctx.report.write_output(&dir, "pca_scores.csv", &scores.to_csv_string())?;
    ctx.report.write_output(&dir, "scree.csv", &pca.scree_csv())?;
    ctx.report.write_output(&dir, "pca_components.csv", &components_csv(&pca, k))?;
    ctx.report.result(
        "pca",
        &json!({
            "rows": m.n_rows(),
            "dims": m.n_dims(),
            "n_components": k,
            "explained_variance": &pca.explained_variance[..k],
            "explained_variance_ratio": &pca.explained_variance_ratio[..k],
            "cumulative_ratio": &pca.cumulative_ratio()[..k],
            "total_variance": pca.total_variance,
        }),
    )?;
    Ok(dir)
}

pub fn cmd_scree(ctx: &mut Ctx, a: &ScreeArgs) -> Result<PathBuf> {
    let (m, _) = load_input(ctx, &a.input)?;
    let m = standardized(ctx, m)?;
    let kmax = max_components(m.n_rows(), m.n_dims());
    let k = a.max_components.unwrap_or(kmax);
    let pca = fit_pca(&m, k)?;
    let elbow = if k >= 3 { Some(scree_elbow(&pca.explained_variance)?) } else { None };
    let dir = ctx.global.out.clone();
    ensure_dir(&dir)?;
    ctx.report.write_output(&dir, "scree.csv", &pca.scree_csv())?;
    ctx.report.result(
        "scree",
        &json!({
            "n_components": k,
            "explained_variance": pca.explained_variance,
            "explained_variance_ratio": pca.explained_variance_ratio,
            "elbow": elbow,
        }),
    )?;
    Ok(dir)
}

fn lda_summary(model: &LdaModel) -> Value {
    json!({
        "class_names": model.class_names,
        "priors": model.priors,
        "n_axes": model.n_axes(),
        "explained_variance_ratio": model.explained_variance_ratio,
        "projection_scalings": model.projection_scalings,
        "within_rank": model.within_rank,
        "floored_directions": model.floored_directions,
        "shrinkage": model.shrinkage,
        "shrinkage_used": model.shrinkage_used,
    })
}

pub fn cmd_lda(ctx: &mut Ctx, a: &LdaArgs) -> Result<PathBuf> {
    let (m, d) = load_input(ctx, &a.input)?;
    let d = require_dataset(d, "lda")?;
    let spec = SplitSpec::new(a.train_fraction, ctx.global.seed, !a.no_stratify)?;
    let part = partition(&d, &spec)?;
    let (train, test) = (m.select_rows(&part.train), m.select_rows(&part.test));
    let (train, test, all) = if ctx.global.standardize {
        let sc = fit_scaler(&train)?;
        (sc.transform(&train)?, sc.transform(&test)?, sc.transform(&m)?)
    } else {
        (train, test, m)
    };
    let labels_of = |idx: &[usize]| -> Vec<String> {
        idx.iter().map(|&i| d.samples()[i].label.clone()).collect()
    };
    let model = fit_lda(&train, &labels_of(&part.train), a.shrinkage)?;
    let (accuracy, confusion) = evaluate(&model, &test, &labels_of(&part.test))?;
    let axes: Vec<usize> = (0..model.n_axes()).collect();
    let scores = model.transform(&all, &axes)?;

    let dir = ctx.global.out.clone();
    ensure_dir(&dir)?;
    ctx.report.write_output(&dir, "lda_scores.csv", &scores.to_csv_string())?;
    ctx.report.write_output(&dir, "confusion.csv", &confusion.to_csv_string())?;
    ctx.report.result("model", &lda_summary(&model))?;
    ctx.report.result(
        "evaluation",
        &json!({
            "train_size": part.train.len(),
            "test_size": part.test.len(),
            "test_accuracy": accuracy,
            "confusion": confusion,
        }),
    )?;
    ctx.report.result("split", &part)?;
    Ok(dir)
}

fn rules_from_args(a: &IndicatorArgs) -> Result<Vec<IndicatorRule>> {
    let mut rules = Vec::new();
    if !a.label_target.is_empty() {
        rules.push(IndicatorRule::Label { targets: a.label_target.clone() });
    }
    for name in &a.preset {
        rules.push(presets::preset(name).ok_or_else(|| {
            Error::invalid(format!(
                "unknown preset {name:?}; choose from {}",
                presets::PRESET_NAMES.join(", ")
            ))
        })?);
    }
    if !a.phrases.is_empty() {
        let mut rule = PhraseRule::new(a.phrases.clone(), a.min_hits)?;
        rule.count_lists_as_hit = a.lists_as_hit;
        rules.push(IndicatorRule::Phrases(rule));
    }
    if !a.words.is_empty() {
        rules.push(IndicatorRule::Words { words: a.words.clone() });
    }
    if !a.count_words.is_empty() {
        rules.push(IndicatorRule::WordCount {
            words: a.count_words.clone(),
            min_count: a.min_count,
        });
    }
    if let Some(t) = a.length_below {
        rules.push(IndicatorRule::Length { threshold_chars: t });
    }
    if let Some(r) = a.special_ratio_above {
        rules.push(IndicatorRule::SpecialCharRatio { threshold_ratio: r });
    }
    if a.lists {
        rules.push(IndicatorRule::Lists {
            pattern: LIST_ITEM_PATTERN.to_string(),
            min_items: LIST_MIN_ITEMS,
        });
    }
    if rules.is_empty() {
        return Err(Error::invalid("no indicator given; use --label-target, --preset, --phrases, --words, --count-words, --length-below, --special-ratio-above or --lists"));
    }
    Ok(rules)
}

/// Scores on the requested 1-based axes of the chosen latent space.
fn latent_scores(
    ctx: &Ctx,
    m: &EmbeddingMatrix,
    d: Option<&LabeledDataset>,
    space: Space,
    axes: &[usize],
    shrinkage: Option<f64>,
) -> Result<(ScoreMatrix, Value)> {
    let m = standardized(ctx, m.clone())?;
    match space {
        Space::Pca => {
            let pca = full_pca(&m)?;
            let idx = axis_indices(axes, pca.n_components(), "PC")?;
            let ratio: Vec<f64> = idx.iter().map(|&i| pca.explained_variance_ratio[i]).collect();
            Ok((pca.project(&m, &idx)?, json!({"space": "pca", "explained_variance_ratio": ratio})))
        }
        Space::Lda => {
            let d = d.ok_or_else(|| Error::invalid("--space lda needs labels"))?;
            let labels: Vec<String> = d.labels().into_iter().map(str::to_string).collect();
            let model = fit_lda(&m, &labels, shrinkage)?;
            let idx = axis_indices(axes, model.n_axes(), "LD")?;
            Ok((model.transform(&m, &idx)?, json!({"space": "lda", "model": lda_summary(&model)})))
        }
    }
}

fn axes_label(space: Space, axes: &[usize]) -> String {
    let p = match space {
        Space::Pca => "PC",
        Space::Lda => "LD",
    };
    let parts: Vec<String> = axes.iter().map(|a| a.to_string()).collect();
    format!("{p}{}", parts.join("-"))
}

fn fmt_f(f: FStatistic) -> String {
    match f {
        FStatistic::Finite(x) => fmt_sig9(x),
        FStatistic::Infinite => "+inf".into(),
    }
}

pub fn cmd_regress(ctx: &mut Ctx, a: &RegressArgs) -> Result<PathBuf> {
    let rules = rules_from_args(&a.indicators)?;
    let (m, d) = load_input(ctx, &a.input)?;
    let d = require_dataset(d, "regress")?;
    let needs_text = rules.iter().any(|r| !matches!(r, IndicatorRule::Label { .. }));
    if needs_text && d.samples().iter().all(|s| s.text.is_none()) {
        return Err(Error::invalid("text indicators need texts: pass --labels with `text` fields"));
    }
    let (scores, latent) = latent_scores(ctx, &m, Some(&d), a.space, &a.axes, a.shrinkage)?;
    let axes = axes_label(a.space, &a.axes);

    let mut table = String::from("indicator,axes,r_squared,pearson_r,f_statistic,p_value,n\n");
    let mut reports: Vec<(String, RegressionReport)> = Vec::new();
    for rule in &rules {
        let feature = rule.build(&d)?;
        let rep = if scores.values.cols() == 1 {
            regress_indicator(&scores.values.column(0), &feature.values)?
        } else {
            regress_multi(&scores.values, &feature.values)?
        };
        table.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            csv_field(&feature.name),
            axes,
            fmt_sig9(rep.r_squared),
            fmt_sig9(rep.pearson_r),
            fmt_f(rep.f_statistic),
            fmt_sig9(rep.p_value),
            rep.n
        ));
        ctx.report.rule(&feature.name, rule);
        reports.push((feature.name, rep));
    }
    let dir = ctx.global.out.clone();
    ensure_dir(&dir)?;
    ctx.report.write_output(&dir, "regress_table.csv", &table)?;
    ctx.report.write_output(&dir, "regress_scores.csv", &scores.to_csv_string())?;
    ctx.report.result("latent", &latent)?;
    ctx.report.result(
        "regressions",
        &reports
            .iter()
            .map(|(name, r)| json!({"indicator": name, "axes": axes, "report": r}))
            .collect::<Vec<_>>(),
    )?;
    Ok(dir)
}

pub fn cmd_detect(ctx: &mut Ctx, a: &DetectArgs) -> Result<PathBuf> {
    let reference = load_matrix(ctx, &a.reference, None)?;
    let contaminants = load_matrix(ctx, &a.contaminants, None)?;
    let spec = ContaminationSpec {
        n_reference: if a.n_reference.is_empty() { DEFAULT_N.to_vec() } else { a.n_reference.clone() },
        m_contaminants: if a.m_contaminants.is_empty() { DEFAULT_M.to_vec() } else { a.m_contaminants.clone() },
        n_pcs: a.n_pcs,
        seeds: a.seeds,
        max_trees: a.max_trees,
        subsample: a.subsample,
        standardize: ctx.global.standardize,
        fit_pca_on_reference_only: a.pca_on_reference_only,
        root_seed: ctx.global.seed,
    };
    let result = run_contamination_experiment(&reference, &contaminants, &spec)?;
    let dir = ctx.global.out.clone();
    ensure_dir(&dir)?;
    ctx.report.write_output(&dir, "detect_trials.csv", &result.to_csv_string())?;
    let mut summary = serde_json::to_string_pretty(&json!({"spec": spec, "cells": result.cells}))?;
    summary.push('\n');
    ctx.report.write_output(&dir, "detect_summary.json", &summary)?;
    ctx.report.result(
        "cells",
        &result
            .cells
            .iter()
            .map(|c| json!({"N": c.n, "M": c.m, "n_trees": c.n_trees, "mean_auroc": c.mean_auroc, "median_auroc": c.median_auroc}))
            .collect::<Vec<_>>(),
    )?;
    Ok(dir)
}

pub fn cmd_kde(ctx: &mut Ctx, a: &KdeArgs) -> Result<PathBuf> {
    if a.grid_points < 2 {
        return Err(Error::invalid("--grid-points must be at least 2"));
    }
    let (m, d) = load_input(ctx, &a.input)?;
    let (scores, latent) = latent_scores(ctx, &m, d.as_ref(), a.space, &[a.axis], a.shrinkage)?;
    let column = scores.values.column(0);

    let mut groups: Vec<(String, Vec<f64>)> = Vec::new();
    match &d {
        Some(d) => {
            let idx = d.class_indices();
            for (c, name) in d.class_names().iter().enumerate() {
                let pts = column.iter().zip(&idx).filter(|(_, &k)| k == c).map(|(&x, _)| x).collect();
                groups.push((name.clone(), pts));
            }
        }
        None => groups.push(("all".into(), column.clone())),
    }
    let models: Vec<KdeModel> = groups
        .iter()
        .map(|(name, pts)| {
            match a.bandwidth {
                Some(h) => KdeModel::new(pts.clone(), h),
                None => KdeModel::with_scott_bandwidth(pts.clone()),
            }
            .map_err(|e| Error::invalid(format!("class {name:?}: {e}")))
        })
        .collect::<Result<_>>()?;
    let h_max = models.iter().map(KdeModel::bandwidth).fold(0.0, f64::max);
    let envelope = KdeModel::new(column, h_max)?;
    let grid = envelope.grid(a.grid_points, 3.0);
    let curves: Vec<Vec<f64>> = models.iter().map(|k| k.eval(&grid)).collect();

    let mut csv = String::from("x");
    for (name, _) in &groups {
        csv.push(',');
        csv.push_str(&csv_field(name));
    }
    csv.push('\n');
    for (i, x) in grid.iter().enumerate() {
        csv.push_str(&fmt_sig9(*x));
        for c in &curves {
            csv.push(',');
            csv.push_str(&fmt_sig9(c[i]));
        }
        csv.push('\n');
    }
    let dir = ctx.global.out.clone();
    ensure_dir(&dir)?;
    ctx.report.write_output(&dir, "kde.csv", &csv)?;
    ctx.report.result("latent", &latent)?;
    ctx.report.result(
        "kde",
        &json!({
            "axis": axes_label(a.space, &[a.axis]),
            "groups": groups.iter().zip(&models).map(|((n, p), k)| json!({"name": n, "n": p.len(), "bandwidth": k.bandwidth()})).collect::<Vec<_>>(),
        }),
    )?;
    Ok(dir)
}
