//! The co-written story document, its feedback form, analytics and HTML
//! snapshot.

use std::fmt::Write as _;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Human,
    Machine,
}

/// One unit of a story: a run of text or an image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Block {
    Text {
        content: String,
        provenance: Provenance,
        /// A human changed machine text after it was accepted.
        #[serde(default)]
        edited: bool,
    },
    Image {
        image_id: String,
        /// The text the image was retrieved for.
        query: String,
        /// Client-side style preset.
        #[serde(default)]
        theme: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        attribution: Option<String>,
    },
}

impl Block {
    pub fn human(content: impl Into<String>) -> Self {
        Block::Text {
            content: content.into(),
            provenance: Provenance::Human,
            edited: false,
        }
    }

    pub fn machine(content: impl Into<String>) -> Self {
        Block::Text {
            content: content.into(),
            provenance: Provenance::Machine,
            edited: false,
        }
    }

    pub fn text(&self) -> Option<&str> {
        match self {
            Block::Text { content, .. } => Some(content),
            Block::Image { .. } => None,
        }
    }

    pub fn provenance(&self) -> Option<Provenance> {
        match self {
            Block::Text { provenance, .. } => Some(*provenance),
            Block::Image { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StoryStatus {
    Draft,
    Published,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoryDocument {
    pub id: String,
    pub title: String,
    pub blocks: Vec<Block>,
    pub created: DateTime<Utc>,
    pub updated: DateTime<Utc>,
    pub status: StoryStatus,
    /// Incremented on every write; clients echo it back for optimistic
    /// concurrency.
    pub version: u64,
}

impl StoryDocument {
    pub fn new(id: impl Into<String>, title: impl Into<String>, now: DateTime<Utc>) -> Self {
        Self {
            id: id.into(),
            title: title.into(),
            blocks: Vec::new(),
            created: now,
            updated: now,
            status: StoryStatus::Draft,
            version: 1,
        }
    }

    pub fn is_published(&self) -> bool {
        self.status == StoryStatus::Published
    }

    pub fn image_ids(&self) -> impl Iterator<Item = &str> {
        self.blocks.iter().filter_map(|b| match b {
            Block::Image { image_id, .. } => Some(image_id.as_str()),
            Block::Text { .. } => None,
        })
    }

    /// Text of the text blocks in `blocks[..end]`, separated by spaces.
    pub fn text_before(&self, end: usize) -> String {
        let end = end.min(self.blocks.len());
        self.blocks[..end]
            .iter()
            .filter_map(Block::text)
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn analytics(&self) -> StoryAnalytics {
        StoryAnalytics::of(&self.blocks)
    }

    /// Standalone HTML page of the story. Machine text carries the `machine`
    /// class (and `edited` once changed by a human), human text the `human`
    /// class. Image sources are `image_base` followed by the image id.
    pub fn render_html(&self, image_base: &str) -> String {
        let mut out = String::new();
        out.push_str("<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n");
        let _ = writeln!(out, "<title>{}</title>", escape(&self.title));
        out.push_str(STYLE);
        out.push_str("</head>\n<body>\n");
        let _ = writeln!(out, "<article class=\"story\" data-story-id=\"{}\">", escape(&self.id));
        let _ = writeln!(out, "<h1>{}</h1>", escape(&self.title));
        for block in &self.blocks {
            match block {
                Block::Text {
                    content,
                    provenance,
                    edited,
                } => {
                    let class = match (provenance, edited) {
                        (Provenance::Human, _) => "human",
                        (Provenance::Machine, false) => "machine",
                        (Provenance::Machine, true) => "machine edited",
                    };
                    let _ = writeln!(out, "<p class=\"block text {class}\">{}</p>", escape(content));
                }
                Block::Image {
                    image_id,
                    query,
                    theme,
                    attribution,
                } => {
                    let _ = write!(
                        out,
                        "<figure class=\"block image theme-{}\" data-image-id=\"{}\"><img src=\"{}{}\" alt=\"{}\">",
                        escape(if theme.is_empty() { "plain" } else { theme }),
                        escape(image_id),
                        escape(image_base),
                        escape(image_id),
                        escape(query)
                    );
                    if let Some(a) = attribution {
                        let _ = write!(out, "<figcaption>{}</figcaption>", escape(a));
                    }
                    out.push_str("</figure>\n");
                }
            }
        }
        out.push_str("</article>\n</body>\n</html>\n");
        out
    }
}

const STYLE: &str = "<style>\n\
.story{max-width:46rem;margin:2rem auto;font-family:Georgia,serif;line-height:1.6}\n\
.text.machine{background:#dbeafe}\n\
.text.machine.edited{background:#e0e7ff}\n\
.image img{max-width:100%}\n\
.theme-sepia img{filter:sepia(0.8)}\n\
.theme-ink img{filter:grayscale(1) contrast(1.4)}\n\
.theme-watercolor img{filter:saturate(1.4) blur(0.4px)}\n\
</style>\n";

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}

/// Machine-vs-human composition of a story.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoryAnalytics {
    /// Share of text characters in machine blocks; 0 for a story without text.
    pub machine_fraction: f64,
    pub human_fraction: f64,
    pub machine_chars: usize,
    pub human_chars: usize,
    pub image_count: usize,
    pub machine_blocks: usize,
    pub human_blocks: usize,
    /// Machine blocks a human has since edited.
    pub edited_machine_blocks: usize,
}

impl StoryAnalytics {
    pub fn of(blocks: &[Block]) -> Self {
        let mut a = StoryAnalytics {
            machine_fraction: 0.0,
            human_fraction: 0.0,
            machine_chars: 0,
            human_chars: 0,
            image_count: 0,
            machine_blocks: 0,
            human_blocks: 0,
            edited_machine_blocks: 0,
        };
        for b in blocks {
            match b {
                Block::Text {
                    content,
                    provenance: Provenance::Machine,
                    edited,
                } => {
                    a.machine_blocks += 1;
                    a.machine_chars += content.chars().count();
                    a.edited_machine_blocks += usize::from(*edited);
                }
                Block::Text { content, .. } => {
                    a.human_blocks += 1;
                    a.human_chars += content.chars().count();
                }
                Block::Image { .. } => a.image_count += 1,
            }
        }
        let total = a.machine_chars + a.human_chars;
        if total > 0 {
            a.machine_fraction = a.machine_chars as f64 / total as f64;
            a.human_fraction = a.human_chars as f64 / total as f64;
        }
        a
    }
}

/// Five-point agreement scale, 1 = strongly disagree, 5 = strongly agree.
pub type Likert = u8;

/// Agreement ratings of the eight feedback statements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratings {
    pub correct_grammar: Likert,
    pub plausible_order: Likert,
    pub makes_sense: Likert,
    pub avoids_repetition: Likert,
    pub interesting_language: Likert,
    pub high_quality: Likert,
    pub enjoyable: Likert,
    pub one_theme: Likert,
}

impl Ratings {
    pub const FIELDS: [&'static str; 8] = [
        "correct_grammar",
        "plausible_order",
        "makes_sense",
        "avoids_repetition",
        "interesting_language",
        "high_quality",
        "enjoyable",
        "one_theme",
    ];

    pub fn values(&self) -> [Likert; 8] {
        [
            self.correct_grammar,
            self.plausible_order,
            self.makes_sense,
            self.avoids_repetition,
            self.interesting_language,
            self.high_quality,
            self.enjoyable,
            self.one_theme,
        ]
    }
}

/// How often the writer declined suggestions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeclineRate {
    Never,
    #[serde(rename = "25_percent")]
    Quarter,
    #[serde(rename = "50_percent")]
    Half,
    #[serde(rename = "75_percent")]
    ThreeQuarters,
    Always,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeUsage {
    Fast,
    Hq,
    Both,
}

/// A complete, validated feedback submission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackRecord {
    pub story_id: String,
    pub ratings: Ratings,
    pub decline_rate: DeclineRate,
    pub mode_usage: ModeUsage,
    pub writing_experience: String,
    pub mode_explanation: String,
    pub image_usage: String,
    pub liked: String,
    pub disliked: String,
    #[serde(default)]
    pub other_comments: String,
}

/// Feedback as submitted; every field may be missing.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeedbackForm {
    #[serde(default)]
    pub ratings: RatingsForm,
    pub decline_rate: Option<DeclineRate>,
    pub mode_usage: Option<ModeUsage>,
    pub writing_experience: Option<String>,
    pub mode_explanation: Option<String>,
    pub image_usage: Option<String>,
    pub liked: Option<String>,
    pub disliked: Option<String>,
    pub other_comments: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RatingsForm {
    pub correct_grammar: Option<i64>,
    pub plausible_order: Option<i64>,
    pub makes_sense: Option<i64>,
    pub avoids_repetition: Option<i64>,
    pub interesting_language: Option<i64>,
    pub high_quality: Option<i64>,
    pub enjoyable: Option<i64>,
    pub one_theme: Option<i64>,
}

impl RatingsForm {
    fn values(&self) -> [Option<i64>; 8] {
        [
            self.correct_grammar,
            self.plausible_order,
            self.makes_sense,
            self.avoids_repetition,
            self.interesting_language,
            self.high_quality,
            self.enjoyable,
            self.one_theme,
        ]
    }
}

impl From<&FeedbackRecord> for FeedbackForm {
    fn from(r: &FeedbackRecord) -> Self {
        let v = r.ratings.values().map(|x| Some(i64::from(x)));
        FeedbackForm {
            ratings: RatingsForm {
                correct_grammar: v[0],
                plausible_order: v[1],
                makes_sense: v[2],
                avoids_repetition: v[3],
                interesting_language: v[4],
                high_quality: v[5],
                enjoyable: v[6],
                one_theme: v[7],
            },
            decline_rate: Some(r.decline_rate),
            mode_usage: Some(r.mode_usage),
            writing_experience: Some(r.writing_experience.clone()),
            mode_explanation: Some(r.mode_explanation.clone()),
            image_usage: Some(r.image_usage.clone()),
            liked: Some(r.liked.clone()),
            disliked: Some(r.disliked.clone()),
            other_comments: Some(r.other_comments.clone()),
        }
    }
}

impl FeedbackForm {
    /// Checks every required field. On failure returns the offending field
    /// names (ratings as `ratings.<name>`), in form order.
    pub fn validate(&self, story_id: &str) -> Result<FeedbackRecord, Vec<String>> {
        let mut bad = Vec::new();
        let mut ratings = [0u8; 8];
        for (i, (name, value)) in Ratings::FIELDS.iter().zip(self.ratings.values()).enumerate() {
            match value {
                Some(v @ 1..=5) => ratings[i] = v as u8,
                _ => bad.push(format!("ratings.{name}")),
            }
        }
        if self.decline_rate.is_none() {
            bad.push("decline_rate".to_owned());
        }
        if self.mode_usage.is_none() {
            bad.push("mode_usage".to_owned());
        }
        let texts = [
            ("writing_experience", &self.writing_experience),
            ("mode_explanation", &self.mode_explanation),
            ("image_usage", &self.image_usage),
            ("liked", &self.liked),
            ("disliked", &self.disliked),
        ];
        for (name, value) in texts {
            if value.as_deref().map_or(true, |s| s.trim().is_empty()) {
                bad.push(name.to_owned());
            }
        }
        if !bad.is_empty() {
            return Err(bad);
        }
        let text = |v: &Option<String>| v.clone().unwrap_or_default();
        Ok(FeedbackRecord {
            story_id: story_id.to_owned(),
            ratings: Ratings {
                correct_grammar: ratings[0],
                plausible_order: ratings[1],
                makes_sense: ratings[2],
                avoids_repetition: ratings[3],
                interesting_language: ratings[4],
                high_quality: ratings[5],
                enjoyable: ratings[6],
                one_theme: ratings[7],
            },
            decline_rate: self.decline_rate.expect("checked"),
            mode_usage: self.mode_usage.expect("checked"),
            writing_experience: text(&self.writing_experience),
            mode_explanation: text(&self.mode_explanation),
            image_usage: text(&self.image_usage),
            liked: text(&self.liked),
            disliked: text(&self.disliked),
            other_comments: text(&self.other_comments),
        })
    }
}
