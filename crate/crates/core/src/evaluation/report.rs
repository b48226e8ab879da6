use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::IouKind;
use crate::annotation::Label;

/// The six AP figures; `None` where no ground truth falls in the bucket.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub ap: Option<f64>,
    pub ap50: Option<f64>,
    pub ap75: Option<f64>,
    pub ap_small: Option<f64>,
    pub ap_medium: Option<f64>,
    pub ap_large: Option<f64>,
}

impl Metrics {
    pub fn values(&self) -> [Option<f64>; 6] {
        [self.ap, self.ap50, self.ap75, self.ap_small, self.ap_medium, self.ap_large]
    }

    fn from_values(v: [Option<f64>; 6]) -> Self {
        Self {
            ap: v[0],
            ap50: v[1],
            ap75: v[2],
            ap_small: v[3],
            ap_medium: v[4],
            ap_large: v[5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub iou_kind: IouKind,
    /// Keyed by label name, in label order.
    pub classes: IndexMap<String, Metrics>,
    /// Mean over the classes that define each metric.
    pub overall: Metrics,
}

impl EvalSummary {
    pub fn new(iou_kind: IouKind, per_class: Vec<(Label, Metrics)>) -> Self {
        let mut overall = [None; 6];
        for (k, slot) in overall.iter_mut().enumerate() {
            let defined: Vec<f64> = per_class.iter().filter_map(|(_, m)| m.values()[k]).collect();
            if !defined.is_empty() {
                *slot = Some(defined.iter().sum::<f64>() / defined.len() as f64);
            }
        }
        Self {
            iou_kind,
            classes: per_class.into_iter().map(|(l, m)| (l.as_str().to_owned(), m)).collect(),
            overall: Metrics::from_values(overall),
        }
    }

    pub fn class(&self, label: Label) -> Option<&Metrics> {
        self.classes.get(label.as_str())
    }
}

const COLUMNS: [&str; 6] = ["AP", "AP50", "AP75", "APs", "APm", "APl"];

/// Aligned text table: one headline row per summary (named by IoU kind), each
/// followed by its per-class rows. Undefined metrics print as `-`.
pub fn format_table(summaries: &[EvalSummary]) -> String {
    let mut rows: Vec<(String, Metrics)> = Vec::new();
    for s in summaries {
        rows.push((s.iou_kind.as_str().to_owned(), s.overall));
        for (name, m) in &s.classes {
            rows.push((format!("  {name}"), *m));
        }
    }
    let width = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max(4);
    let mut out = format!("{:width$}", "");
    for c in COLUMNS {
        out.push_str(&format!("  {c:>6}"));
    }
    out.push('\n');
    for (name, m) in rows {
        out.push_str(&format!("{name:width$}"));
        for v in m.values() {
            match v {
                Some(x) => out.push_str(&format!("  {x:>6.4}")),
                None => out.push_str(&format!("  {:>6}", "-")),
            }
        }
        out.push('\n');
    }
    out
}
