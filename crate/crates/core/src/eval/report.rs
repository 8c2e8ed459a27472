use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{top_k_percent, QueryRank, SimilarityStats};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub id: String,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    pub stats: SimilarityStats,
    pub pairs: Vec<PairScore>,
}

impl SimilarityReport {
    pub fn new(pairs: Vec<PairScore>) -> SimilarityReport {
        let scores: Vec<f64> = pairs.iter().map(|p| p.similarity).collect();
        SimilarityReport {
            stats: SimilarityStats::from_scores(&scores),
            pairs,
        }
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{:<24} {:>10}", "id", "cosine").unwrap();
        for p in &self.pairs {
            writeln!(out, "{:<24} {:>10.4}", p.id, p.similarity).unwrap();
        }
        writeln!(out, "{:<24} {:>10.4}", "mean", self.stats.mean).unwrap();
        writeln!(out, "{:<24} {:>10.4}", "std", self.stats.std).unwrap();
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingReport {
    pub k_percent: u32,
    pub top_k: f64,
    pub mean_rank: f64,
    pub queries: Vec<QueryRank>,
}

impl RankingReport {
    pub fn new(queries: Vec<QueryRank>, k_percent: u32) -> RankingReport {
        let ranks: Vec<usize> = queries.iter().map(|q| q.rank).collect();
        let counts: Vec<usize> = queries.iter().map(|q| q.candidates).collect();
        let mean_rank = if ranks.is_empty() {
            0.0
        } else {
            ranks.iter().sum::<usize>() as f64 / ranks.len() as f64
        };
        RankingReport {
            k_percent,
            top_k: top_k_percent(&ranks, &counts, k_percent),
            mean_rank,
            queries,
        }
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "{:<24} {:>6} {:>10} {:>10}",
            "query", "rank", "candidates", "cosine"
        )
        .unwrap();
        for q in &self.queries {
            writeln!(
                out,
                "{:<24} {:>6} {:>10} {:>10.4}",
                q.query, q.rank, q.candidates, q.similarity
            )
            .unwrap();
        }
        writeln!(out, "queries: {}", self.queries.len()).unwrap();
        writeln!(out, "mean rank: {:.2}", self.mean_rank).unwrap();
        writeln!(out, "top-{}%: {:.4}", self.k_percent, self.top_k).unwrap();
        out
    }

    /// Bar chart of how many queries landed at each rank.
    pub fn histogram_svg(&self) -> String {
        let max_rank = self.queries.iter().map(|q| q.rank).max().unwrap_or(1);
        let mut counts = vec![0usize; max_rank];
        for q in &self.queries {
            counts[q.rank - 1] += 1;
        }
        let peak = counts.iter().copied().max().unwrap_or(1).max(1);
        let (w, h, pad) = (640.0, 320.0, 40.0);
        let bar = (w - 2.0 * pad) / max_rank as f64;
        let mut svg = String::new();
        writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
        )
        .unwrap();
        writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#).unwrap();
        for (i, &c) in counts.iter().enumerate() {
            let bh = (h - 2.0 * pad) * c as f64 / peak as f64;
            writeln!(
                svg,
                r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#4a78b0"><title>rank {}: {}</title></rect>"##,
                pad + i as f64 * bar,
                h - pad - bh,
                (bar - 1.0).max(0.5),
                bh,
                i + 1,
                c
            )
            .unwrap();
        }
        writeln!(
            svg,
            r#"<line x1="{pad}" y1="{y}" x2="{x2}" y2="{y}" stroke="black"/>"#,
            y = h - pad,
            x2 = w - pad
        )
        .unwrap();
        writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">rank of true match (1..{max_rank})</text>"#,
            w / 2.0,
            h - 12.0
        )
        .unwrap();
        writeln!(
            svg,
            r#"<text x="{pad}" y="24" font-size="12">queries per rank (max {peak}); top-{}% = {:.3}</text>"#,
            self.k_percent, self.top_k
        )
        .unwrap();
        svg.push_str("</svg>\n");
        svg
    }
}
