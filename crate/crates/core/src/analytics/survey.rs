use std::collections::BTreeMap;
use std::ops::Range;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::to_csv;
use crate::log::{LogSnapshot, SurveyCategory, SurveyResponse};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CategoryShare {
    pub count: usize,
    /// `100 · count / total`, rounded to one decimal; 0 when total is 0.
    pub percentage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyBreakdown {
    pub total: usize,
    /// Every category is present, even with a zero count.
    pub per_category: BTreeMap<SurveyCategory, CategoryShare>,
    /// Set when there are no responses in range.
    pub empty: bool,
    pub snapshot_last_event_id: Option<String>,
}

/// Rounds a proportion to a percentage with one decimal place.
pub fn percentage(count: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    (count as f64 * 1000.0 / total as f64).round() / 10.0
}

impl SurveyBreakdown {
    pub fn share(&self, category: SurveyCategory) -> CategoryShare {
        self.per_category[&category]
    }

    pub fn to_csv(&self) -> String {
        #[derive(Serialize)]
        struct Row {
            category: SurveyCategory,
            count: usize,
            percentage: String,
        }
        let rows: Vec<Row> = self
            .per_category
            .iter()
            .map(|(c, s)| Row {
                category: *c,
                count: s.count,
                percentage: format!("{:.1}", s.percentage),
            })
            .collect();
        to_csv(&rows)
    }
}

/// Counts and one-decimal percentages of survey answers, optionally within
/// a half-open time range.
pub fn survey_breakdown(snapshot: &LogSnapshot, time_range: Option<&Range<DateTime<Utc>>>) -> SurveyBreakdown {
    let mut counts: BTreeMap<SurveyCategory, usize> = SurveyCategory::ALL.iter().map(|c| (*c, 0)).collect();
    let responses = snapshot
        .events()
        .iter()
        .filter(|e| time_range.is_none_or(|r| r.contains(&e.occurred_at)))
        .filter_map(SurveyResponse::from_event);
    for r in responses {
        *counts.get_mut(&r.category).expect("all categories seeded") += 1;
    }
    let total: usize = counts.values().sum();
    SurveyBreakdown {
        total,
        per_category: counts
            .into_iter()
            .map(|(c, count)| {
                (
                    c,
                    CategoryShare {
                        count,
                        percentage: percentage(count, total),
                    },
                )
            })
            .collect(),
        empty: total == 0,
        snapshot_last_event_id: snapshot.last_event_id().map(str::to_string),
    }
}
