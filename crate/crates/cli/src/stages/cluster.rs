//! Embed violating ads, reduce, grid-search HDBSCAN under the DBCV gate,
//! and derive communities, blind-validation samples and template matches.

use std::collections::{BTreeMap, BTreeSet};

use adaudit_core::clusterlab::{
    blind_validation_sample, cluster_communities, detect_template_pattern, embed_texts, grid_search_clusters,
    reduce_dimensions, select_best_run, AdultLexicon, ClusterError, ClusterRun, EmbeddingMatrix, Stratum,
    UmapOptions,
};
use adaudit_core::stable_seed;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{load_adult, load_ads, Ctx, LabelRow, Rows};
use crate::output::{write_csv, write_json};

pub const LABELS_FILE: &str = "labels.csv";
pub const BLIND_ABOVE_FILE: &str = "blind_above_floor.csv";
pub const BLIND_BELOW_FILE: &str = "blind_below_floor.csv";

#[derive(Serialize)]
struct RunRow {
    min_cluster_size: usize,
    min_samples: usize,
    metric: &'static str,
    selection: &'static str,
    n_clusters: usize,
    n_noise: usize,
    dbcv: f64,
    survived: bool,
}

/// A blind-validation item with the run it was drawn from.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlindRow {
    pub tweet_id: String,
    pub hidden_cluster_label: i64,
    pub run: String,
}

#[derive(Serialize)]
struct ClusterRow {
    cluster: i64,
    size: usize,
    community: Option<usize>,
}

fn reduce(ctx: &Ctx, m: EmbeddingMatrix) -> anyhow::Result<EmbeddingMatrix> {
    let c = &ctx.cfg.cluster;
    if c.reduced_dim >= m.dim() {
        log::info!("embeddings have {} dimensions; no reduction to {}", m.dim(), c.reduced_dim);
        return Ok(m);
    }
    let options = UmapOptions {
        n_neighbors: c.umap_neighbors,
        n_epochs: c.umap_epochs,
        ..UmapOptions::default()
    };
    match reduce_dimensions(&m, c.reduced_dim, stable_seed(ctx.seed, "umap"), &options) {
        Ok(reduced) => Ok(reduced),
        Err(ClusterError::TooFewPoints { got, needed }) => {
            log::warn!("{got} points is too few for reduction (needs {needed}); clustering raw embeddings");
            Ok(m)
        }
        Err(e) => Err(e.into()),
    }
}

fn blind(ctx: &Ctx, runs: &[ClusterRun], stratum: Stratum, file: &str) -> anyhow::Result<usize> {
    let c = &ctx.cfg.cluster;
    let salt = match stratum {
        Stratum::AboveFloor => "blind-above",
        Stratum::BelowFloor => "blind-below",
    };
    match blind_validation_sample(runs, c.dbcv_floor, stratum, c.blind_sample_size, stable_seed(ctx.seed, salt)) {
        Ok((run, items)) => {
            let rows: Vec<BlindRow> = items
                .into_iter()
                .map(|i| BlindRow {
                    tweet_id: i.tweet_id,
                    hidden_cluster_label: i.hidden_cluster_label,
                    run: run.params.to_string(),
                })
                .collect();
            write_csv(&ctx.dir.join(file), &rows)?;
            Ok(rows.len())
        }
        Err(e) => {
            log::warn!("no blind sample for {salt}: {e}");
            Ok(0)
        }
    }
}

pub fn run(ctx: &Ctx) -> anyhow::Result<Rows> {
    let c = &ctx.cfg.cluster;
    let violating: BTreeSet<String> = load_adult(ctx.run)?
        .into_iter()
        .filter(|r| r.violating)
        .map(|r| r.tweet_id)
        .collect();
    let (initial, _) = load_ads(ctx.run)?;
    let mut records: Vec<_> = initial.into_iter().filter(|r| violating.contains(&r.tweet_id)).collect();
    records.sort_by(|a, b| a.tweet_id.cmp(&b.tweet_id));

    let lexicon = match &c.lexicon {
        Some(path) => AdultLexicon::load(path)?,
        None => AdultLexicon::default(),
    };
    let template = detect_template_pattern(&records, &lexicon);
    write_json(&ctx.dir.join("template.json"), &template)?;

    let embedder = ctx.clients.embedder()?;
    let raw = embed_texts(&records, embedder.as_ref())?;
    let raw_dim = raw.dim();
    let m = reduce(ctx, raw)?;

    let grid = c.grid.params();
    let outcome = grid_search_clusters(&m, &grid, c.dbcv_floor);
    let run_rows: Vec<RunRow> = outcome
        .runs
        .iter()
        .map(|r| RunRow {
            min_cluster_size: r.params.min_cluster_size,
            min_samples: r.params.min_samples,
            metric: r.params.metric.as_str(),
            selection: r.params.cluster_selection_method.as_str(),
            n_clusters: r.n_clusters,
            n_noise: r.n_noise,
            dbcv: r.dbcv,
            survived: r.survived,
        })
        .collect();
    write_csv(&ctx.dir.join("runs.csv"), &run_rows)?;
    write_json(&ctx.dir.join("grid_failures.json"), &outcome.failures)?;

    let mut rows = Rows::from([
        ("points".into(), m.len()),
        ("grid".into(), grid.len()),
        ("surviving_runs".into(), outcome.surviving),
    ]);
    let mut summary = json!({
        "points": m.len(),
        "embedding_dim": raw_dim,
        "clustered_dim": m.dim(),
        "grid_size": grid.len(),
        "surviving_runs": outcome.surviving,
        "failed_runs": outcome.failures.len(),
        "dbcv_floor": c.dbcv_floor,
        "template_text_pattern": template.text_pattern.len(),
        "template_camel_case_usernames": template.camel_case_usernames.len(),
    });

    match select_best_run(&outcome.runs, c.dbcv_floor) {
        Ok(best) => {
            let labels: Vec<LabelRow> = best
                .labels
                .iter()
                .map(|(id, &cluster)| LabelRow {
                    tweet_id: id.clone(),
                    cluster,
                })
                .collect();
            write_csv(&ctx.dir.join(LABELS_FILE), &labels)?;
            let communities = cluster_communities(best, &m, c.similarity_floor, stable_seed(ctx.seed, "louvain"));
            let clusters: Vec<ClusterRow> = best
                .cluster_sizes()
                .into_iter()
                .map(|(cluster, size)| ClusterRow {
                    cluster,
                    size,
                    community: communities.communities.get(&cluster).copied(),
                })
                .collect();
            write_csv(&ctx.dir.join("clusters.csv"), &clusters)?;
            let n_communities = communities.communities.values().collect::<BTreeSet<_>>().len();
            summary["best_run"] = json!({
                "params": best.params,
                "n_clusters": best.n_clusters,
                "n_noise": best.n_noise,
                "dbcv": best.dbcv,
                "communities": n_communities,
                "modularity": communities.modularity,
            });
            rows.insert("clusters".into(), best.n_clusters);
        }
        Err(e) => {
            log::warn!("no run selected: {e}");
            summary["best_run"] = json!(null);
        }
    }
    rows.insert("blind_above_floor".into(), blind(ctx, &outcome.runs, Stratum::AboveFloor, BLIND_ABOVE_FILE)?);
    rows.insert("blind_below_floor".into(), blind(ctx, &outcome.runs, Stratum::BelowFloor, BLIND_BELOW_FILE)?);

    let sizes: BTreeMap<String, usize> = rows.clone();
    summary["rows"] = json!(sizes);
    write_json(&ctx.dir.join("summary.json"), &summary)?;
    Ok(rows)
}
