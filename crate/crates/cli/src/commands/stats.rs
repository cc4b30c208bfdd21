//! `semtrack stats`: interaction-label distribution of an annotation
//! corpus, as a stdout summary and an optional line-delimited report.

use semtrack::io::annotation::load_annotation_dir;
use semtrack::io::write_atomic;
use semtrack::metrics::interaction::{interaction_stats, InteractionStats};

use crate::{CliError, Context, StatsArgs};

fn render_jsonl(videos: usize, stats: &InteractionStats) -> String {
    let mut out = String::new();
    let meta = serde_json::json!({
        "schema_version": 1,
        "kind": "interaction-stats",
        "videos": videos,
        "distinct_labels": stats.ranking.len(),
        "total_instances": stats.total,
        "top1_share": stats.top1_share,
        "top30_share": stats.top30_share,
    });
    out.push_str(&meta.to_string());
    out.push('\n');
    for (rank, (label, count)) in stats.ranking.iter().enumerate() {
        let line = serde_json::json!({
            "kind": "label",
            "rank": rank + 1,
            "label": label,
            "count": count,
        });
        out.push_str(&line.to_string());
        out.push('\n');
    }
    out
}

pub fn run(args: &StatsArgs, _ctx: &Context) -> Result<(), CliError> {
    let corpus = load_annotation_dir(&args.gt)?;
    let stats = interaction_stats(corpus.values());

    println!(
        "{} videos, {} interaction instances over {} distinct labels",
        corpus.len(),
        stats.total,
        stats.ranking.len()
    );
    if stats.total > 0 {
        println!(
            "top-1 share {:.4}, top-30 share {:.4}",
            stats.top1_share, stats.top30_share
        );
        for (rank, (label, count)) in stats.ranking.iter().take(args.top).enumerate() {
            println!("{:>4}  {:<24} {}", rank + 1, label, count);
        }
    }

    if let Some(out) = &args.out {
        write_atomic(out, &render_jsonl(corpus.len(), &stats))?;
        println!("wrote {}", out.display());
    }
    Ok(())
}
