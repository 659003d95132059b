use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::MetricsError;

/// Worst possible penalty; also the cap.
pub const MQM_CAP: f64 = 25.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Minor,
    Major,
    Critical,
}

impl Severity {
    pub fn cost(self) -> f64 {
        match self {
            Severity::Minor => 5.0,
            Severity::Major => 10.0,
            Severity::Critical => 25.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Minor => "minor",
            Severity::Major => "major",
            Severity::Critical => "critical",
        }
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Severity {
    type Err = MetricsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "minor" => Ok(Severity::Minor),
            "major" => Ok(Severity::Major),
            "critical" => Ok(Severity::Critical),
            _ => Err(MetricsError::UnknownSeverity(s.trim().to_string())),
        }
    }
}

/// Top-level error category used for the breakdown.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorGroup {
    Accuracy,
    Fluency,
    Other,
}

/// `accuracy/mistranslation` and `Fluency` both group by their first segment.
pub fn error_group(category: &str) -> ErrorGroup {
    let head = category.split('/').next().unwrap_or("").trim().to_ascii_lowercase();
    match head.as_str() {
        "accuracy" => ErrorGroup::Accuracy,
        "fluency" => ErrorGroup::Fluency,
        _ => ErrorGroup::Other,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MqmError {
    pub severity: Severity,
    pub category: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MqmAnnotation {
    pub errors: Vec<MqmError>,
}

impl MqmAnnotation {
    pub fn from_counts(minor: usize, major: usize, critical: usize) -> Self {
        let mut errors = Vec::new();
        for (severity, n) in [(Severity::Minor, minor), (Severity::Major, major), (Severity::Critical, critical)] {
            for _ in 0..n {
                errors.push(MqmError { severity, category: "other".into(), span: None });
            }
        }
        MqmAnnotation { errors }
    }

    pub fn count(&self, severity: Severity) -> usize {
        self.errors.iter().filter(|e| e.severity == severity).count()
    }
}

/// Penalty split by category. `capped` values are min(25, sum); `uncapped`
/// are the raw sums. Neither applies the critical override.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CategoryScores {
    pub accuracy: f64,
    pub fluency: f64,
    pub other: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MqmScore {
    pub total: f64,
    pub capped: CategoryScores,
    pub uncapped: CategoryScores,
}

fn penalty(errors: &[&MqmError]) -> f64 {
    errors.iter().map(|e| e.severity.cost()).fold(0.0, |a, b| a + b)
}

/// Any critical error makes the output unusable (25); otherwise the
/// minor/major costs add up to at most 25.
pub fn mqm_penalty(annotation: &MqmAnnotation) -> f64 {
    if annotation.errors.iter().any(|e| e.severity == Severity::Critical) {
        return MQM_CAP;
    }
    penalty(&annotation.errors.iter().collect::<Vec<_>>()).min(MQM_CAP)
}

pub fn mqm_score(annotation: &MqmAnnotation) -> MqmScore {
    let group = |g: ErrorGroup| penalty(&annotation.errors.iter().filter(|e| error_group(&e.category) == g).collect::<Vec<_>>());
    let uncapped = CategoryScores {
        accuracy: group(ErrorGroup::Accuracy),
        fluency: group(ErrorGroup::Fluency),
        other: group(ErrorGroup::Other),
    };
    let capped = CategoryScores {
        accuracy: uncapped.accuracy.min(MQM_CAP),
        fluency: uncapped.fluency.min(MQM_CAP),
        other: uncapped.other.min(MQM_CAP),
    };
    MqmScore { total: mqm_penalty(annotation), capped, uncapped }
}

/// Parses a GEMBA-MQM style judge answer:
///
/// ```text
/// Critical:
/// no-error
/// Major:
/// accuracy/mistranslation - "fell"
/// Minor:
/// fluency/grammar - "a apple"
/// ```
///
/// Lines before the first severity header are ignored. A header whose
/// severity is not one of the three is an error.
pub fn parse_gemba(text: &str) -> Result<MqmAnnotation, MetricsError> {
    let mut current: Option<Severity> = None;
    let mut errors = Vec::new();
    for raw in text.lines() {
        let line = raw.trim().trim_start_matches(['-', '*', ' ']).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(head) = line.strip_suffix(':') {
            if !head.contains(char::is_whitespace) && !head.contains('/') {
                current = Some(head.parse()?);
                continue;
            }
        }
        let Some(severity) = current else { continue };
        let lower = line.to_ascii_lowercase();
        if lower.starts_with("no-error") || lower.starts_with("no error") {
            continue;
        }
        let (category, span) = match line.split_once(" - ") {
            Some((c, s)) => {
                let s = s.trim().trim_matches('"').trim();
                (c.trim(), (!s.is_empty()).then(|| s.to_string()))
            }
            None => (line, None),
        };
        errors.push(MqmError { severity, category: category.to_ascii_lowercase(), span });
    }
    Ok(MqmAnnotation { errors })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn footnote_costs() {
        assert_eq!(mqm_penalty(&MqmAnnotation::default()), 0.0);
        assert_eq!(mqm_penalty(&MqmAnnotation::from_counts(0, 0, 1)), 25.0);
        assert_eq!(mqm_penalty(&MqmAnnotation::from_counts(2, 1, 0)), 20.0);
        assert_eq!(mqm_penalty(&MqmAnnotation::from_counts(5, 5, 0)), 25.0);
    }

    #[test]
    fn categories_are_not_overridden() {
        let ann = parse_gemba(
            "Critical:\naccuracy/omission - \"x\"\nMajor:\nfluency/grammar - \"y\"\nfluency/spelling\nMinor:\nstyle/awkward - \"z\"\n",
        )
        .unwrap();
        let s = mqm_score(&ann);
        assert_eq!(s.total, 25.0);
        assert_eq!(s.uncapped.accuracy, 25.0);
        assert_eq!(s.uncapped.fluency, 20.0);
        assert_eq!(s.uncapped.other, 5.0);
        assert_eq!(ann.errors[0].span.as_deref(), Some("x"));
        assert_eq!(ann.errors[2].span, None);
    }

    #[test]
    fn uncapped_categories_exceed_cap() {
        let mut ann = MqmAnnotation::default();
        for _ in 0..3 {
            ann.errors.push(MqmError { severity: Severity::Major, category: "Accuracy/Addition".into(), span: None });
        }
        let s = mqm_score(&ann);
        assert_eq!(s.uncapped.accuracy, 30.0);
        assert_eq!(s.capped.accuracy, 25.0);
        assert_eq!(s.total, 25.0);
    }

    #[test]
    fn gemba_no_errors_and_bad_severity() {
        let ann = parse_gemba("Critical:\nno-error\nMajor:\nno-error\nMinor:\nno-error\n").unwrap();
        assert!(ann.errors.is_empty());
        assert!(matches!(parse_gemba("Severe:\nx - \"y\""), Err(MetricsError::UnknownSeverity(s)) if s == "Severe"));
    }

    proptest::proptest! {
        #[test]
        fn monotone_and_capped(a in 0usize..8, b in 0usize..8, c in 0usize..3, which in 0usize..3) {
            let base = mqm_penalty(&MqmAnnotation::from_counts(a, b, c));
            let more = match which {
                0 => MqmAnnotation::from_counts(a + 1, b, c),
                1 => MqmAnnotation::from_counts(a, b + 1, c),
                _ => MqmAnnotation::from_counts(a, b, c + 1),
            };
            let bumped = mqm_penalty(&more);
            proptest::prop_assert!(bumped >= base);
            proptest::prop_assert!(bumped <= MQM_CAP);
        }
    }
}
