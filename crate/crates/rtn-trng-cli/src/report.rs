//! Report rendering: a fixed-order text table or a JSON document.

use std::fmt::Write;

use serde::Serialize;

use nist_sts::{BatteryReport, Verdict};

use crate::config::PipelineConfig;
use crate::pipeline::GenerationMetadata;

const NAME_WIDTH: usize = 34;
const P_WIDTH: usize = 8;
const TABLE_WIDTH: usize = NAME_WIDTH + 2 + P_WIDTH + 2 + 6;

/// Fixed-order table: one row per test, P-values to four decimals, then
/// a PASS/FAIL summary line. Multi-valued rows show their smallest
/// P-value, marked with `*`.
pub fn render_table(report: &BatteryReport, metadata: Option<&GenerationMetadata>) -> String {
    let mut out = String::new();
    if let Some(meta) = metadata {
        render_metadata(&mut out, meta);
    }

    let _ = writeln!(
        out,
        "{:<NAME_WIDTH$}  {:>P_WIDTH$}  {}",
        "Test Name", "P-Value", "Result"
    );
    let _ = writeln!(out, "{}", "-".repeat(TABLE_WIDTH));
    let mut starred = false;
    let mut notes: Vec<String> = Vec::new();
    for result in &report.results {
        let name = result.id.display_name();
        let p_cell = match result.min_p() {
            Some(p) if result.p_values.len() > 1 => {
                starred = true;
                format!("{p:.4}*")
            }
            Some(p) => format!("{p:.4}"),
            None => "-".into(),
        };
        let verdict = match result.verdict {
            Verdict::Pass => "Pass",
            Verdict::Fail => "Fail",
            Verdict::NotApplicable => "N.A.",
        };
        let _ = writeln!(out, "{name:<NAME_WIDTH$}  {p_cell:>P_WIDTH$}  {verdict}");
        if let Some(reason) = &result.na_reason {
            notes.push(format!("note: {name}: {reason}"));
        }
        for warning in &result.warnings {
            notes.push(format!("warning: {name}: {warning}"));
        }
    }
    let _ = writeln!(out, "{}", "-".repeat(TABLE_WIDTH));

    let mut passed = 0usize;
    let mut failed = 0usize;
    let mut skipped = 0usize;
    for result in &report.results {
        match result.verdict {
            Verdict::Pass => passed += 1,
            Verdict::Fail => failed += 1,
            Verdict::NotApplicable => skipped += 1,
        }
    }
    let summary = if report.all_pass { "PASS" } else { "FAIL" };
    let _ = writeln!(
        out,
        "Summary: {summary} ({passed} passed, {failed} failed, {skipped} not applicable; \
         alpha = {}, {} bits)",
        report.alpha, report.n
    );
    if starred {
        let _ = writeln!(out, "* smallest of the row's P-values");
    }
    for note in notes {
        let _ = writeln!(out, "  {note}");
    }
    out
}

fn render_metadata(out: &mut String, meta: &GenerationMetadata) {
    let _ = writeln!(
        out,
        "Source {}: {} bits from {} intervals",
        meta.backend, meta.bits_produced, meta.intervals_used
    );
    let _ = writeln!(
        out,
        "  ticks {}, variates {}, events {} seen / {} selected",
        meta.ticks_simulated, meta.variates_consumed, meta.events_observed, meta.events_selected
    );
    if let Some(noise) = meta.noise_variates {
        let _ = writeln!(out, "  analog noise variates {noise}");
    }
    let bias: Vec<String> = meta
        .predicted_bit_bias
        .iter()
        .map(|b| format!("{b:.3e}"))
        .collect();
    let _ = writeln!(
        out,
        "  predicted bit bias (LSB first): {}",
        bias.join(" ")
    );
    for warning in &meta.warnings {
        let _ = writeln!(out, "  warning: {warning}");
    }
    let _ = writeln!(out);
}

#[derive(Serialize)]
struct Document<'a> {
    config: &'a PipelineConfig,
    generation: Option<&'a GenerationMetadata>,
    battery: &'a BatteryReport,
}

/// Single JSON document with the full configuration, generation
/// accounting, and every P-value and statistic. Field order is fixed by
/// the type definitions, so equal runs serialize identically.
pub fn render_json(
    config: &PipelineConfig,
    metadata: Option<&GenerationMetadata>,
    report: &BatteryReport,
) -> String {
    let document = Document {
        config,
        generation: metadata,
        battery: report,
    };
    let mut text = serde_json::to_string_pretty(&document)
        .expect("report types serialize infallibly");
    text.push('\n');
    text
}
