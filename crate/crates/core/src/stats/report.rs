use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{
    default_records, global_pairing_test_with, tournament_with, vacancy_statistic, Field,
    ModelRecord, PermutationResult, StatsError, TailSpec, TournamentReport,
};
use crate::parallel::Exec;

/// A published figure next to the value computed here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub quantity: String,
    pub computed: String,
    pub published: String,
    pub agrees: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub records: Vec<ModelRecord>,
    pub vacancy: f64,
    pub global: PermutationResult,
    pub tournament: TournamentReport,
    /// Only filled when the records are the bundled table.
    pub references: Vec<Reference>,
    pub notes: Vec<String>,
}

/// Vacancy statistic, global pairing test and the predictor tournament.
pub fn run_stats(
    records: &[ModelRecord],
    tail: &TailSpec,
    exec: Exec,
) -> Result<StatsReport, StatsError> {
    let vacancy = vacancy_statistic(records, Field::AdjZsct, Field::Minif2f);
    let global = global_pairing_test_with(records, Field::AdjZsct, Field::Minif2f, exec)?;
    let tournament = tournament_with(records, tail, exec)?;
    let mut report = StatsReport {
        records: records.to_vec(),
        vacancy,
        global,
        tournament,
        references: Vec::new(),
        notes: Vec::new(),
    };
    let bundled = default_records();
    let default_tail = TailSpec::Default.resolve(&bundled).ok();
    if records == bundled.as_slice() && tail.resolve(records).ok() == default_tail {
        add_references(&mut report);
    }
    Ok(report)
}

fn add_references(report: &mut StatsReport) {
    let t = &report.tournament;
    let (Some(adj), Some(size)) = (t.predictor(Field::AdjZsct), t.predictor(Field::SizeB)) else {
        return;
    };
    let mut refs = Vec::new();
    let mut push = |quantity: &str, computed: String, published: &str, agrees: bool| {
        refs.push(Reference {
            quantity: quantity.into(),
            computed,
            published: published.into(),
            agrees,
        })
    };
    push(
        "T (vacancy)",
        format!("{:.3}", report.vacancy),
        "-3.017",
        (report.vacancy + 3.017).abs() <= 0.002,
    );
    push(
        "global pairing p",
        format!("{:.5}", report.global.p_value.value),
        "0.052",
        (0.045..=0.060).contains(&report.global.p_value.value),
    );
    push(
        "adj_zsct tail sum",
        format!("{:.2}", adj.tail.observed_sum),
        "354.80",
        (adj.tail.observed_sum - 354.8).abs() < 1e-9,
    );
    push(
        "adj_zsct tail p",
        adj.tail.p_value.to_string(),
        "1/252 (restated as 3/252)",
        adj.tail.tally_geq == 1,
    );
    push(
        "r(adj_zsct, minif2f)",
        format!("{:.4}", adj.continuous.observed),
        "0.8424",
        (adj.continuous.observed - 0.8424).abs() <= 0.0005,
    );
    push(
        "adj_zsct continuous p",
        format!("{:.5}", adj.continuous.p_value.value),
        "0.00120 (restated as 0.0018)",
        (0.0008..=0.0020).contains(&adj.continuous.p_value.value),
    );
    push(
        "r(size_b, minif2f)",
        format!("{:.4}", size.continuous.observed),
        "0.3876",
        (size.continuous.observed - 0.3876).abs() <= 0.0005,
    );
    push(
        "size_b continuous p",
        format!("{:.5}", size.continuous.p_value.value),
        "0.22110",
        (0.19..=0.25).contains(&size.continuous.p_value.value),
    );
    push(
        "size_b tail sum",
        format!("{:.0}", size.tail.observed_sum),
        "725",
        (size.tail.observed_sum - 725.0).abs() < 1e-9,
    );
    push(
        "size_b tail p",
        format!("{} = {:.5}", size.tail.p_value, size.tail.p_value.value),
        "71/252 = 0.28175",
        size.tail.tally_geq == 71,
    );
    let scale_sum = size.tail.observed_sum;
    let scale_p = size.tail.p_value;
    report.references = refs;
    report.notes.push(format!(
        "size_b tail: the table sizes of the five tail models sum to {scale_sum:.0}B, \
         not the published 725B; with {scale_sum:.0}B the exact tail p is {scale_p} \
         = {:.5}",
        scale_p.value
    ));
    if report.references.iter().any(|r| r.quantity.starts_with("r(") && !r.agrees) {
        report.notes.push(
            "product-moment r computed from the table values does not match the published \
             coefficients; the exact values above come from the table as bundled"
                .into(),
        );
    }
}

impl StatsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let t = &self.tournament;
        let _ = writeln!(out, "records: {}", self.records.len());
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<28} {:>12} {:>12} {:>14} {:>10}", "test", "statistic", "tally", "arrangements", "p");
        let g = &self.global;
        let _ = writeln!(
            out,
            "{:<28} {:>12.4} {:>12} {:>14} {:>10.5}",
            "vacancy T (adj_zsct)", self.vacancy, g.tally_geq, g.total_arrangements, g.p_value.value
        );
        for p in &t.predictors {
            let c = &p.continuous;
            let _ = writeln!(
                out,
                "{:<28} {:>12.4} {:>12} {:>14} {:>10.5}",
                format!("pearson r ({})", p.predictor),
                c.observed,
                c.tally_geq,
                c.total_arrangements,
                c.p_value.value
            );
            let s = &p.tail;
            let _ = writeln!(
                out,
                "{:<28} {:>12.2} {:>12} {:>14} {:>10.5}",
                format!("tail sum k={} ({})", s.k, p.predictor),
                s.observed_sum,
                s.tally_geq,
                s.total,
                s.p_value.value
            );
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "exact p: global {}", g.p_value);
        for p in &t.predictors {
            let _ = writeln!(
                out,
                "exact p: {} continuous {}, tail {}",
                p.predictor, p.continuous.p_value, p.tail.p_value
            );
        }
        if let Some(p) = t.predictors.first() {
            let _ = writeln!(out, "tail (top {} by minif2f): {}", t.tail_k, p.tail.tail_names.join(", "));
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "verdict: {}", t.verdict);
        if !self.references.is_empty() {
            let _ = writeln!(out);
            let _ = writeln!(out, "{:<24} {:>16} {:>28}  match", "published figure", "computed", "published");
            for r in &self.references {
                let _ = writeln!(
                    out,
                    "{:<24} {:>16} {:>28}  {}",
                    r.quantity,
                    r.computed,
                    r.published,
                    if r.agrees { "yes" } else { "NO" }
                );
            }
        }
        for note in &self.notes {
            let _ = writeln!(out, "note: {note}");
        }
        out
    }
}

/// `name,adj_zsct,minif2f` rows for plotting.
pub fn scatter_csv(records: &[ModelRecord]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(["name", "adj_zsct", "minif2f"])
        .expect("in-memory write");
    for r in records {
        writer
            .write_record([r.name.clone(), r.adj_zsct.to_string(), r.minif2f.to_string()])
            .expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("flush")).expect("utf-8")
}
