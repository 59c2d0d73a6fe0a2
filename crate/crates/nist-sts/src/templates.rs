//! Template matching tests: occurrence counts of fixed patterns, scanned
//! without overlap (per-template chi-square over blocks) and with overlap
//! (all-ones pattern, compound-Poisson bucket law).

use crate::params::{TemplateSet, TestParams};
use crate::result::{TestId, TestResult};
use crate::special::igamc;
use crate::debug_assert_bits;

/// True when some proper prefix of the pattern equals its suffix, i.e. the
/// pattern can overlap a shifted copy of itself.
pub fn has_self_overlap(pattern: &[u8]) -> bool {
    let m = pattern.len();
    (1..m).any(|k| pattern[..k] == pattern[m - k..])
}

/// All length-m patterns that cannot overlap themselves. For m = 9 there
/// are exactly 148 of them.
pub fn aperiodic_templates(m: usize) -> Vec<Vec<u8>> {
    assert!(m >= 1 && m <= 16, "template length out of range: {m}");
    (0u32..1 << m)
        .map(|v| (0..m).map(|i| ((v >> (m - 1 - i)) & 1) as u8).collect::<Vec<u8>>())
        .filter(|p| !has_self_overlap(p))
        .collect()
}

/// The single default template: m-1 zeros followed by a one.
pub fn canonical_template(m: usize) -> Vec<u8> {
    let mut t = vec![0u8; m];
    t[m - 1] = 1;
    t
}

/// Count matches restarting the scan after each hit.
pub fn non_overlapping_matches(block: &[u8], template: &[u8]) -> u64 {
    let m = template.len();
    let mut count = 0u64;
    let mut j = 0usize;
    while j + m <= block.len() {
        if &block[j..j + m] == template {
            count += 1;
            j += m;
        } else {
            j += 1;
        }
    }
    count
}

/// Count matches advancing one position at a time.
pub fn overlapping_matches(block: &[u8], template: &[u8]) -> u64 {
    let m = template.len();
    if m > block.len() {
        return 0;
    }
    (0..=block.len() - m)
        .filter(|&j| &block[j..j + m] == template)
        .count() as u64
}

pub fn non_overlapping_template(bits: &[u8], params: &TestParams) -> TestResult {
    debug_assert_bits(bits);
    let m = params.nonoverlap_m;
    let n_blocks = params.nonoverlap_blocks;
    if m < 2 || n_blocks == 0 {
        return TestResult::not_applicable(
            TestId::NonOverlappingTemplate,
            format!("invalid parameters: m={m}, blocks={n_blocks}"),
        );
    }
    let block_len = bits.len() / n_blocks;
    if block_len < m {
        return TestResult::not_applicable(
            TestId::NonOverlappingTemplate,
            format!("block length {block_len} shorter than template length {m}"),
        );
    }
    let mean = (block_len - m + 1) as f64 / 2f64.powi(m as i32);
    let var = block_len as f64
        * (2f64.powi(-(m as i32)) - (2 * m as i64 - 1) as f64 / 2f64.powi(2 * m as i32));
    if var <= 0.0 {
        return TestResult::not_applicable(
            TestId::NonOverlappingTemplate,
            format!("degenerate variance for m={m}, block length {block_len}"),
        );
    }
    let templates = match params.templates {
        TemplateSet::Canonical => vec![canonical_template(m)],
        TemplateSet::AllAperiodic => aperiodic_templates(m),
    };
    let blocks: Vec<&[u8]> = bits.chunks_exact(block_len).take(n_blocks).collect();
    let p_values: Vec<f64> = templates
        .iter()
        .map(|t| {
            let chi2: f64 = blocks
                .iter()
                .map(|b| {
                    let w = non_overlapping_matches(b, t) as f64;
                    (w - mean) * (w - mean) / var
                })
                .sum();
            igamc(n_blocks as f64 / 2.0, chi2 / 2.0)
        })
        .collect();
    TestResult::from_p_values(
        TestId::NonOverlappingTemplate,
        p_values,
        vec![
            ("m".into(), m as f64),
            ("N".into(), n_blocks as f64),
            ("M".into(), block_len as f64),
            ("mu".into(), mean),
            ("sigma2".into(), var),
            ("templates".into(), templates.len() as f64),
        ],
        params.alpha,
    )
}

/// Bucket probabilities for overlapping-match counts 0..=k in a block.
///
/// The default shape (m=9, k=5, block 1032) uses the corrected published
/// constants; anything else falls back to the compound-Poisson formula
/// with eta = (M - m + 1) / 2^(m+1).
pub fn overlap_bucket_probs(m: usize, k: usize, block_len: usize) -> Vec<f64> {
    if (m, k, block_len) == (9, 5, 1032) {
        return vec![0.364091, 0.185659, 0.139381, 0.100571, 0.070432, 0.139865];
    }
    let lambda = (block_len - m + 1) as f64 / 2f64.powi(m as i32);
    let eta = lambda / 2.0;
    let mut probs = Vec::with_capacity(k + 1);
    probs.push((-eta).exp());
    for u in 1..k {
        probs.push(pr_overlap(u, eta));
    }
    let tail = 1.0 - probs.iter().sum::<f64>();
    probs.push(tail.max(0.0));
    probs
}

/// P(u overlapping hits) under the compound-Poisson block model.
fn pr_overlap(u: usize, eta: f64) -> f64 {
    let mut sum = 0.0;
    let mut eta_pow = 1.0;
    let mut factorial = 1.0;
    for l in 1..=u {
        eta_pow *= eta;
        factorial *= l as f64;
        sum += eta_pow / factorial * binomial(u - 1, l - 1);
    }
    (-eta).exp() / 2f64.powi(u as i32) * sum
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k.min(n));
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

pub fn overlapping_template(bits: &[u8], params: &TestParams) -> TestResult {
    debug_assert_bits(bits);
    let m = params.overlap_m;
    let k = params.overlap_k;
    let block_len = params.overlap_block;
    if m < 2 || k < 1 || block_len < m {
        return TestResult::not_applicable(
            TestId::OverlappingTemplate,
            format!("invalid parameters: m={m}, K={k}, block={block_len}"),
        );
    }
    let n_blocks = bits.len() / block_len;
    if n_blocks == 0 {
        return TestResult::not_applicable(
            TestId::OverlappingTemplate,
            format!("needs at least {block_len} bits, have {}", bits.len()),
        );
    }
    let template = vec![1u8; m];
    let mut buckets = vec![0u64; k + 1];
    for block in bits.chunks_exact(block_len).take(n_blocks) {
        let hits = overlapping_matches(block, &template) as usize;
        buckets[hits.min(k)] += 1;
    }
    let probs = overlap_bucket_probs(m, k, block_len);
    let nf = n_blocks as f64;
    let chi2: f64 = buckets
        .iter()
        .zip(&probs)
        .map(|(&obs, &p)| {
            let e = nf * p;
            (obs as f64 - e) * (obs as f64 - e) / e
        })
        .sum();
    let p = igamc(k as f64 / 2.0, chi2 / 2.0);
    let mut result = TestResult::from_p_values(
        TestId::OverlappingTemplate,
        vec![p],
        vec![
            ("m".into(), m as f64),
            ("K".into(), k as f64),
            ("M".into(), block_len as f64),
            ("N".into(), nf),
            ("chi2".into(), chi2),
        ],
        params.alpha,
    );
    if let Some(&min_p) = probs
        .iter()
        .min_by(|a, b| a.partial_cmp(b).expect("probabilities are finite"))
    {
        if nf * min_p < 5.0 {
            result = result.with_warning(format!(
                "smallest expected bucket count {:.2} is below 5; chi-square approximation is weak",
                nf * min_p
            ));
        }
    }
    result
}
