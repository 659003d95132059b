use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::templates::{fill, Templates};
use super::StrategyError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Mmlu,
    Nli,
    Storycloze,
}

impl TaskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Mmlu => "mmlu",
            TaskKind::Nli => "nli",
            TaskKind::Storycloze => "storycloze",
        }
    }

    pub fn parse(s: &str) -> Option<TaskKind> {
        [TaskKind::Mmlu, TaskKind::Nli, TaskKind::Storycloze].into_iter().find(|k| k.as_str() == s)
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "lowercase")]
pub enum TaskContent {
    Mmlu { question: String, options: Vec<String> },
    Nli { premise: String, hypothesis: String },
    Storycloze { story: String, continuations: Vec<String> },
}

/// One task example. Labels are zero-based option indices; for NLI
/// 0 = entailment, 1 = neutral, 2 = contradiction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskItem {
    pub id: String,
    #[serde(flatten)]
    pub content: TaskContent,
    pub label: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<String>,
}

impl TaskItem {
    pub fn kind(&self) -> TaskKind {
        match self.content {
            TaskContent::Mmlu { .. } => TaskKind::Mmlu,
            TaskContent::Nli { .. } => TaskKind::Nli,
            TaskContent::Storycloze { .. } => TaskKind::Storycloze,
        }
    }

    pub fn label_count(&self) -> usize {
        match &self.content {
            TaskContent::Mmlu { options, .. } => options.len(),
            TaskContent::Nli { .. } => 3,
            TaskContent::Storycloze { continuations, .. } => continuations.len(),
        }
    }

    pub fn parse_jsonl(text: &str) -> Result<Vec<TaskItem>, StrategyError> {
        let mut items = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let item: TaskItem = serde_json::from_str(line)
                .map_err(|e| StrategyError::InvalidConfig(format!("task line {}: {e}", i + 1)))?;
            if item.label >= item.label_count() {
                return Err(StrategyError::InvalidConfig(format!(
                    "task line {}: label {} out of range",
                    i + 1,
                    item.label
                )));
            }
            items.push(item);
        }
        Ok(items)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Vec<TaskItem>, StrategyError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| StrategyError::InvalidConfig(format!("{}: {e}", path.as_ref().display())))?;
        Self::parse_jsonl(&text)
    }

    /// Applies `f` to every language-text field.
    pub fn map_text(&self, f: impl Fn(&str) -> String) -> TaskItem {
        let content = match &self.content {
            TaskContent::Mmlu { question, options } => {
                TaskContent::Mmlu { question: f(question), options: options.iter().map(|o| f(o)).collect() }
            }
            TaskContent::Nli { premise, hypothesis } => {
                TaskContent::Nli { premise: f(premise), hypothesis: f(hypothesis) }
            }
            TaskContent::Storycloze { story, continuations } => TaskContent::Storycloze {
                story: f(story),
                continuations: continuations.iter().map(|c| f(c)).collect(),
            },
        };
        TaskItem { content, ..self.clone() }
    }

    /// The item as shown to the model, with numbered options.
    pub fn render(&self, t: &Templates) -> Result<String, StrategyError> {
        let options = |opts: &[String]| -> Result<Vec<String>, StrategyError> {
            opts.iter()
                .enumerate()
                .map(|(i, o)| fill(&t.task.option, &[("label", &i.to_string()), ("text", o)]))
                .collect()
        };
        let lines = match &self.content {
            TaskContent::Mmlu { question, options: opts } => {
                std::iter::once(question.clone()).chain(options(opts)?).collect::<Vec<_>>()
            }
            TaskContent::Nli { premise, hypothesis } => vec![
                fill(&t.task.premise, &[("text", premise)])?,
                fill(&t.task.hypothesis, &[("text", hypothesis)])?,
            ],
            TaskContent::Storycloze { story, continuations } => {
                std::iter::once(story.clone()).chain(options(continuations)?).collect::<Vec<_>>()
            }
        };
        Ok(lines.join("\n"))
    }

    /// All language text, space-joined, for lookup and retrieval.
    pub fn plain_text(&self) -> String {
        match &self.content {
            TaskContent::Mmlu { question, options } => {
                std::iter::once(question.as_str()).chain(options.iter().map(String::as_str)).collect::<Vec<_>>().join(" ")
            }
            TaskContent::Nli { premise, hypothesis } => format!("{premise} {hypothesis}"),
            TaskContent::Storycloze { story, continuations } => std::iter::once(story.as_str())
                .chain(continuations.iter().map(String::as_str))
                .collect::<Vec<_>>()
                .join(" "),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_and_rendering() {
        let text = r#"{"id":"n1","task":"nli","premise":"A man sleeps.","hypothesis":"A man is awake.","label":2}
{"id":"s1","task":"storycloze","story":"Ana baked bread.","continuations":["She ate it.","She flew away."],"label":0}
"#;
        let items = TaskItem::parse_jsonl(text).unwrap();
        assert_eq!(items[0].kind(), TaskKind::Nli);
        let t = Templates::builtin();
        assert_eq!(items[0].render(&t).unwrap(), "Premise: A man sleeps.\nHypothesis: A man is awake.");
        assert_eq!(items[1].render(&t).unwrap(), "Ana baked bread.\n0. She ate it.\n1. She flew away.");
        let upper = items[1].map_text(|s| s.to_uppercase());
        assert_eq!(upper.label, 0);
        assert!(upper.plain_text().starts_with("ANA BAKED"));
    }

    #[test]
    fn out_of_range_label_rejected() {
        let text = r#"{"id":"n1","task":"nli","premise":"a","hypothesis":"b","label":3}"#;
        assert!(TaskItem::parse_jsonl(text).is_err());
    }
}
