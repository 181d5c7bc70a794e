use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::AnnotateError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub n_items: usize,
    pub n_annotators: usize,
    /// Fraction of items on which every annotator gave the same label.
    pub percent_agreement: f64,
    /// Mean over items of the fraction of agreeing annotator pairs.
    pub pairwise_agreement: f64,
    pub fleiss_kappa: f64,
    /// Share of all labels falling in each category.
    pub per_category_marginals: BTreeMap<String, f64>,
}

/// Fleiss' kappa from an items × categories count table. Every row must sum
/// to the same number of raters, at least two.
pub fn fleiss_kappa(counts: &[Vec<usize>]) -> Result<f64, AnnotateError> {
    let Some(first) = counts.first() else {
        return Err(AnnotateError::KappaUndefined("no items".into()));
    };
    let raters: usize = first.iter().sum();
    if raters < 2 {
        return Err(AnnotateError::KappaUndefined("fewer than two raters".into()));
    }
    if counts.iter().any(|row| row.iter().sum::<usize>() != raters) {
        return Err(AnnotateError::KappaUndefined("items have differing rater counts".into()));
    }
    let n = raters as f64;
    let items = counts.len() as f64;
    let categories = first.len();
    let p_bar = counts
        .iter()
        .map(|row| {
            let sq: usize = row.iter().map(|c| c * c).sum();
            (sq as f64 - n) / (n * (n - 1.0))
        })
        .sum::<f64>()
        / items;
    let p_e: f64 = (0..categories)
        .map(|j| {
            let p_j = counts.iter().map(|row| row[j]).sum::<usize>() as f64 / (items * n);
            p_j * p_j
        })
        .sum();
    if p_e >= 1.0 - 1e-15 {
        return Err(AnnotateError::KappaUndefined(
            "every label falls in one category".into(),
        ));
    }
    Ok((p_bar - p_e) / (1.0 - p_e))
}

/// Agreement statistics over items each labelled by the same annotators.
pub fn agreement_from_labels(items: &[Vec<String>]) -> Result<AgreementReport, AnnotateError> {
    let categories: Vec<&str> = {
        let mut c: Vec<&str> = items.iter().flatten().map(String::as_str).collect();
        c.sort_unstable();
        c.dedup();
        c
    };
    let counts: Vec<Vec<usize>> = items
        .iter()
        .map(|labels| {
            categories
                .iter()
                .map(|c| labels.iter().filter(|l| l.as_str() == *c).count())
                .collect()
        })
        .collect();
    let fleiss_kappa = fleiss_kappa(&counts)?;

    let n_annotators = items[0].len();
    let n = n_annotators as f64;
    let unanimous = counts.iter().filter(|row| row.contains(&n_annotators)).count();
    let pairwise = counts
        .iter()
        .map(|row| row.iter().map(|&c| (c * c.saturating_sub(1)) as f64).sum::<f64>() / (n * (n - 1.0)))
        .sum::<f64>()
        / items.len() as f64;
    let total = (items.len() * n_annotators) as f64;
    let per_category_marginals = categories
        .iter()
        .enumerate()
        .map(|(j, c)| (c.to_string(), counts.iter().map(|r| r[j]).sum::<usize>() as f64 / total))
        .collect();
    Ok(AgreementReport {
        n_items: items.len(),
        n_annotators,
        percent_agreement: unanimous as f64 / items.len() as f64,
        pairwise_agreement: pairwise,
        fleiss_kappa,
        per_category_marginals,
    })
}
