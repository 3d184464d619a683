//! Prompt templates and completion parsing for the two extraction roles.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datapipe::provider::{ProviderChain, ProviderRequest};
use crate::datapipe::record::{Lang, LlmJudgment};
use crate::encoding::Role;
use crate::error::{Error, Result};

pub const TEMPLATE_VERSION: &str = "v1";
pub const NEWS_PLACEHOLDER: &str = "{news}";

const TOPIC_EN: &str = "\
You are given a news article. Restate its topic and core factual content in \
plain, neutral language. Drop emotional wording, rhetorical flourishes and \
stylistic tricks; keep names, numbers, places and events. Reply with the \
rewritten content only.

News: {news}";

const TOPIC_ZH: &str = "\
下面是一条新闻。请用平实、中立的语言复述它的主题和核心事实内容，\
去掉情绪化措辞、修辞和写作技巧，保留人物、数字、地点和事件。只输出改写后的内容。

新闻：{news}";

const RATIONALE_EN: &str = "\
Read the news below and check it against common sense. Point out any \
contradictions, implausible claims or conflicts with well-known facts, and \
explain briefly. End with a final line of the form `Verdict: real`, \
`Verdict: fake` or `Verdict: other` if you cannot tell.

News: {news}";

const RATIONALE_ZH: &str = "\
阅读下面的新闻，用常识检验其内容，指出其中的矛盾、不合常理之处或与公认事实的冲突，并简要说明理由。\
最后单独一行给出结论，格式为 `Verdict: real`、`Verdict: fake`，无法判断时写 `Verdict: other`。

新闻：{news}";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub version: String,
    pub text: String,
}

impl PromptTemplate {
    pub fn builtin(role: Role, lang: Lang) -> Result<Self> {
        let text = match (role, lang) {
            (Role::TopicContent, Lang::En) => TOPIC_EN,
            (Role::TopicContent, Lang::Zh) => TOPIC_ZH,
            (Role::Rationale, Lang::En) => RATIONALE_EN,
            (Role::Rationale, Lang::Zh) => RATIONALE_ZH,
            (Role::News, _) => return Err(Error::arg("news text is not generated")),
        };
        Ok(Self {
            version: format!("{TEMPLATE_VERSION}-{}-{}", role.as_str(), lang_code(lang)),
            text: text.to_string(),
        })
    }

    /// Reads a template file; its version is the file stem.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        if !text.contains(NEWS_PLACEHOLDER) {
            return Err(Error::config(format!("{} lacks the {NEWS_PLACEHOLDER} placeholder", path.display())));
        }
        let version = path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
        Ok(Self { version, text })
    }

    pub fn render(&self, news: &str) -> String {
        self.text.replace(NEWS_PLACEHOLDER, news.trim())
    }
}

fn lang_code(lang: Lang) -> &'static str {
    match lang {
        Lang::Zh => "zh",
        Lang::En => "en",
    }
}

/// Templates for both generated roles plus generation limits.
#[derive(Clone, Debug, PartialEq)]
pub struct PromptSet {
    pub topic_content: PromptTemplate,
    pub rationale: PromptTemplate,
    pub max_tokens: u32,
    pub temperature: f64,
}

impl PromptSet {
    pub fn builtin(lang: Lang) -> Self {
        Self {
            topic_content: PromptTemplate::builtin(Role::TopicContent, lang).expect("generated role"),
            rationale: PromptTemplate::builtin(Role::Rationale, lang).expect("generated role"),
            max_tokens: 512,
            temperature: 0.0,
        }
    }

    fn request(&self, id: &str, role: Role, news: &str) -> ProviderRequest {
        let t = match role {
            Role::Rationale => &self.rationale,
            _ => &self.topic_content,
        };
        ProviderRequest {
            prompt: t.render(news),
            max_tokens: self.max_tokens,
            temperature: self.temperature,
            id: id.to_string(),
            role,
            input: news.to_string(),
        }
    }
}

pub fn extract_topic_content(
    id: &str,
    news: &str,
    prompts: &PromptSet,
    providers: &ProviderChain,
    escalate: bool,
) -> Result<String> {
    let r = providers.call(&prompts.request(id, Role::TopicContent, news), escalate)?;
    Ok(r.text.trim().to_string())
}

pub fn commonsense_rationale(
    id: &str,
    news: &str,
    prompts: &PromptSet,
    providers: &ProviderChain,
) -> Result<(String, LlmJudgment)> {
    let r = providers.call(&prompts.request(id, Role::Rationale, news), false)?;
    let text = r.text.trim().to_string();
    let verdict = parse_verdict(&text);
    Ok((text, verdict))
}

/// Reads the final verdict of a rationale: the word after the last
/// `verdict:` (or `结论：`) marker, else the last word. Unrecognised words
/// give `Other`.
pub fn parse_verdict(text: &str) -> LlmJudgment {
    // ASCII lowercasing keeps byte offsets valid for slicing `text`.
    let lower = text.to_ascii_lowercase();
    let marker = ["verdict", "结论"]
        .iter()
        .filter_map(|m| lower.rfind(m).map(|i| i + m.len()))
        .max();
    let tail = match marker {
        Some(i) => text[i..].trim_start_matches(|c: char| c.is_whitespace() || matches!(c, ':' | '：' | '*' | '=')),
        None => text.split_whitespace().last().unwrap_or(""),
    };
    let word = tail
        .split(|c: char| c.is_whitespace() || matches!(c, '.' | ',' | '。' | '，' | '!' | '！'))
        .find(|w| !w.trim_matches(|c: char| !c.is_alphanumeric()).is_empty())
        .unwrap_or("");
    LlmJudgment::parse_word(word)
}
