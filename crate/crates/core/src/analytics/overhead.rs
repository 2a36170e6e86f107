use serde::{Deserialize, Serialize};

use crate::agent::Trajectory;

/// Token usage of one model query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnTokenRecord {
    /// 0-based position among the trajectory's queries.
    pub index: usize,
    pub harmony_tokens: u64,
    pub tooldef_tokens: u64,
    /// Estimated prompt size had tool definitions been repeated this turn.
    pub chat_tokens: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OverheadSummary {
    pub turns: u64,
    pub tooldef_tokens: u64,
    pub harmony_total: u64,
    pub chat_total: u64,
}

impl OverheadSummary {
    pub fn overhead(&self) -> u64 {
        self.chat_total - self.harmony_total
    }

    /// `chat_total / harmony_total`, or `None` for an empty trajectory.
    pub fn ratio(&self) -> Option<f64> {
        (self.harmony_total > 0).then(|| self.chat_total as f64 / self.harmony_total as f64)
    }

    pub fn merge(&self, other: &OverheadSummary) -> OverheadSummary {
        OverheadSummary {
            turns: self.turns + other.turns,
            tooldef_tokens: self.tooldef_tokens.max(other.tooldef_tokens),
            harmony_total: self.harmony_total + other.harmony_total,
            chat_total: self.chat_total + other.chat_total,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverheadReport {
    pub records: Vec<TurnTokenRecord>,
    pub summary: OverheadSummary,
}

/// Per-query prompt sizes with and without repeated tool definitions.
pub fn token_overhead(traj: &Trajectory, tooldef_tokens: u64) -> OverheadReport {
    let records: Vec<TurnTokenRecord> = traj
        .turns()
        .enumerate()
        .map(|(index, t)| TurnTokenRecord {
            index,
            harmony_tokens: t.prompt_tokens,
            tooldef_tokens,
            chat_tokens: t.prompt_tokens + tooldef_tokens,
        })
        .collect();
    let summary = OverheadSummary {
        turns: records.len() as u64,
        tooldef_tokens,
        harmony_total: records.iter().map(|r| r.harmony_tokens).sum(),
        chat_total: records.iter().map(|r| r.chat_tokens).sum(),
    };
    OverheadReport { records, summary }
}

/// Paired histogram over shared equal-width bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` ascending edges; bin `i` covers `[edges[i], edges[i+1])`,
    /// the last bin also includes its upper edge.
    pub edges: Vec<f64>,
    pub harmony: Vec<u64>,
    pub chat: Vec<u64>,
}

impl Histogram {
    pub fn build(harmony: &[u64], chat: &[u64], bins: usize) -> Histogram {
        let bins = bins.max(1);
        let all = harmony.iter().chain(chat);
        let (Some(&min), Some(&max)) = (all.clone().min(), all.max()) else {
            return Histogram {
                edges: vec![0.0, 1.0],
                harmony: vec![0],
                chat: vec![0],
            };
        };
        let (lo, hi) = (min as f64, if max > min { max as f64 } else { min as f64 + 1.0 });
        let width = (hi - lo) / bins as f64;
        let mut edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
        edges[bins] = hi;
        let bin_of = |v: u64| (((v as f64 - lo) / width) as usize).min(bins - 1);
        let count = |xs: &[u64]| {
            let mut c = vec![0u64; bins];
            xs.iter().for_each(|&v| c[bin_of(v)] += 1);
            c
        };
        Histogram {
            harmony: count(harmony),
            chat: count(chat),
            edges,
        }
    }

    /// `bin_lo,bin_hi,harmony,chat` rows under a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_lo,bin_hi,harmony,chat\n");
        for i in 0..self.harmony.len() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                self.edges[i], self.edges[i + 1], self.harmony[i], self.chat[i]
            ));
        }
        out
    }
}
