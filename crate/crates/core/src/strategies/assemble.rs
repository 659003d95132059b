use super::render::{render_prompt, render_task_prompt, word_for_word_tokens, LanguageNames, PromptMaterials};
use super::templates::Templates;
use super::{
    Direction, LexiconSource, PromptBundle, PromptMeta, StrategyConfig, StrategyError, StrategyName, TaskItem,
};
use crate::annotations::AnnotatedSentence;
use crate::cipher::{CipherMap, MaterialBundle};
use crate::lexicon::{LexMatch, Lexicon, LookupParams, OracleStore};
use crate::retrieval::{build_index, Bm25Index, Bm25Params, Exemplar, ExemplarPool, Side};
use crate::scripts::Registry;
use crate::text::word_spans;

const ENGLISH: &str = "eng";

/// A pool with BM25 indexes over both sides, so either side can be the query side.
#[derive(Debug)]
struct IndexedPool {
    pool: ExemplarPool,
    by_source: Bm25Index,
    by_target: Bm25Index,
}

impl IndexedPool {
    fn new(pool: &ExemplarPool) -> Option<IndexedPool> {
        Some(IndexedPool {
            by_source: build_index(pool, Side::Source).ok()?,
            by_target: build_index(pool, Side::Target).ok()?,
            pool: pool.clone(),
        })
    }

    /// Top `e` exemplars oriented so their source side is in `input_lang`.
    fn select(&self, input_lang: &str, query: &str, e: usize) -> Option<Vec<Exemplar>> {
        let (index, flip) = if self.pool.source_lang == input_lang {
            (&self.by_source, false)
        } else if self.pool.target_lang == input_lang {
            (&self.by_target, true)
        } else {
            return None;
        };
        let picked = index.top_e(query, e).into_iter().filter_map(|id| self.pool.get(&id).cloned());
        Some(
            picked
                .map(|ex| if flip { Exemplar { source: ex.target, target: ex.source, ..ex } } else { ex })
                .collect(),
        )
    }
}

/// Prompt for one task item: either final, or the translation step of a cascade.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TaskPrompt {
    Direct(PromptBundle),
    /// Translate the ciphered item into English first, then call
    /// [`Assembler::task_in_english`] on the translation.
    Cascade(PromptBundle),
}

/// Selects materials for each input from a ciphered bundle and renders prompts.
pub struct Assembler<'a> {
    bundle: &'a MaterialBundle,
    map: &'a CipherMap,
    templates: &'a Templates,
    threshold: f64,
    lexicon_fwd: Option<Lexicon>,
    lexicon_rev: Option<Lexicon>,
    oracle_rev: Option<OracleStore>,
    exemplars: Option<IndexedPool>,
    pivot_exemplars: Option<IndexedPool>,
}

impl<'a> Assembler<'a> {
    pub fn new(bundle: &'a MaterialBundle, map: &'a CipherMap, templates: &'a Templates) -> Self {
        Assembler {
            bundle,
            map,
            templates,
            threshold: LookupParams::default().threshold,
            lexicon_fwd: bundle.lexicon.clone(),
            lexicon_rev: bundle.lexicon.as_ref().map(Lexicon::reversed),
            oracle_rev: bundle.oracle.as_ref().map(|o| OracleStore::new(o.lexicon().reversed())),
            exemplars: bundle.exemplars.as_ref().and_then(IndexedPool::new),
            pivot_exemplars: bundle.pivot_exemplars.as_ref().and_then(IndexedPool::new),
        }
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn map(&self) -> &CipherMap {
        self.map
    }

    fn language_name(code: &str) -> String {
        if code == ENGLISH {
            return "English".to_string();
        }
        Registry::builtin().language(code).map(|l| l.name.clone()).unwrap_or_else(|_| code.to_string())
    }

    fn family(&self) -> String {
        Registry::builtin()
            .language(&self.bundle.language)
            .map(|l| l.family.clone())
            .unwrap_or_else(|_| "natural".to_string())
    }

    fn meta(&self, sample_id: &str, source: &str, target: &str) -> PromptMeta {
        PromptMeta {
            sample_id: sample_id.to_string(),
            source_lang: source.to_string(),
            target_lang: target.to_string(),
            cl_name: self.map.cl_name().to_string(),
        }
    }

    fn params(&self, cfg: &StrategyConfig) -> LookupParams {
        LookupParams { k: cfg.k, per_match_cap: cfg.per_match_cap, threshold: self.threshold }
    }

    /// The lexicon oriented so its source side is `input_lang`.
    fn curated(&self, input_lang: &str) -> Option<&Lexicon> {
        [&self.lexicon_fwd, &self.lexicon_rev].into_iter().flatten().find(|l| l.source_lang() == input_lang)
    }

    /// What the model reads for `plain` in the given direction.
    pub fn model_input(&self, cfg: &StrategyConfig, plain: &str) -> String {
        match (cfg.name, cfg.direction) {
            (StrategyName::Topline, _) | (_, Direction::FromEnglish) => plain.to_string(),
            (_, Direction::ToEnglish) => self.map.apply(plain),
        }
    }

    fn word_meanings(
        &self,
        cfg: &StrategyConfig,
        input_lang: &str,
        oracle: Option<&OracleStore>,
        input: &str,
        morph: Option<&AnnotatedSentence>,
    ) -> Result<Vec<LexMatch>, StrategyError> {
        let missing = || StrategyError::MissingMaterial("word meanings".into());
        let words: Vec<(String, Option<String>)> = match morph {
            Some(s) => s.tokens.iter().map(|t| (t.surface.clone(), Some(t.lemma.clone()))).collect(),
            None => word_spans(input).into_iter().map(|w| (w.to_string(), None)).collect(),
        };
        let params = self.params(cfg);
        let mut out = Vec::new();
        let oracle = match cfg.lexicon_source {
            LexiconSource::Oracle => {
                Some(oracle.filter(|o| o.lexicon().source_lang() == input_lang).ok_or_else(missing)?)
            }
            LexiconSource::Curated => None,
        };
        let curated = match cfg.lexicon_source {
            LexiconSource::Curated => Some(self.curated(input_lang).ok_or_else(missing)?),
            LexiconSource::Oracle => None,
        };
        for (word, lemma) in &words {
            if !word.chars().any(char::is_alphabetic) {
                continue;
            }
            let lemma = lemma.as_deref().filter(|_| cfg.use_lemmas);
            if let Some(o) = oracle {
                out.extend(o.lookup_match(word, cfg.per_match_cap));
                if let Some(l) = lemma.filter(|l| l != word) {
                    out.extend(o.lookup_match(l, cfg.per_match_cap).map(|m| LexMatch { via_lemma: true, ..m }));
                }
            } else if let Some(lex) = curated {
                match lemma {
                    Some(l) => out.extend(lex.lookup_with_lemma(word, l, &params)),
                    None => out.extend(lex.lookup(word, &params)),
                }
            }
        }
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn render_with_materials(
        &self,
        cfg: &StrategyConfig,
        sample_id: &str,
        input_lang: &str,
        output_lang: &str,
        names: &LanguageNames,
        input: &str,
        pool: Option<&IndexedPool>,
        oracle: Option<&OracleStore>,
    ) -> Result<PromptBundle, StrategyError> {
        let morph = self.bundle.annotations_for(input_lang).and_then(|a| a.get(sample_id));
        let mut cfg = cfg.clone();
        if cfg.name == StrategyName::CLcovELemMS && morph.is_none() {
            // The pivot text is model output; without annotations for it the
            // lemma and morphology materials are left out.
            cfg.use_lemmas = false;
            cfg.use_morph = false;
        }
        let exemplars = if cfg.use_exemplars {
            let pool = pool.ok_or_else(|| StrategyError::MissingMaterial("exemplars".into()))?;
            pool.select(input_lang, input, cfg.e).ok_or_else(|| StrategyError::MissingMaterial("exemplars".into()))?
        } else {
            Vec::new()
        };
        let (meanings, glossary) = if cfg.use_lexicon {
            let lemma_source = morph.filter(|_| cfg.use_lemmas || cfg.use_morph);
            let m = self.word_meanings(&cfg, input_lang, oracle, input, lemma_source)?;
            let g = self
                .bundle
                .glossary_for(input_lang, output_lang)
                .map(|g| g.restricted_to(word_spans(input)))
                .unwrap_or_default();
            (m, g)
        } else {
            (Vec::new(), Vec::new())
        };
        let materials = PromptMaterials {
            exemplars: &exemplars,
            word_meanings: &meanings,
            glossary: &glossary,
            morph,
            profile: self.bundle.syntax_profile.as_ref(),
            paradigms: self.bundle.paradigms.as_deref(),
        };
        render_prompt(&cfg, self.templates, names, input, &materials, self.meta(sample_id, input_lang, output_lang))
    }

    /// Translation prompt for a plain-text sample. For the pivot cascade this
    /// is stage 2, and `plain` must already be the pivot-language text.
    pub fn mt_prompt(&self, cfg: &StrategyConfig, sample_id: &str, plain: &str) -> Result<PromptBundle, StrategyError> {
        cfg.validate()?;
        let lang = self.bundle.language.as_str();
        let cl = self.map.cl_name().to_string();
        let family = self.family();
        let (input_lang, output_lang) = match (cfg.name, cfg.direction) {
            (StrategyName::CLcovELemMS, _) => (cfg.pivot_language.as_deref().unwrap_or(ENGLISH), lang),
            (_, Direction::ToEnglish) => (lang, ENGLISH),
            (_, Direction::FromEnglish) => (ENGLISH, lang),
        };
        let input = self.model_input(cfg, plain);
        if cfg.name == StrategyName::Topline {
            let names = LanguageNames {
                source: Self::language_name(input_lang),
                target: Self::language_name(output_lang),
                cl_name: cl,
                family,
            };
            let meta = self.meta(sample_id, input_lang, output_lang);
            return render_prompt(cfg, self.templates, &names, &input, &PromptMaterials::default(), meta);
        }
        let display = |code: &str| if code == lang { cl.clone() } else { Self::language_name(code) };
        let names = LanguageNames {
            source: display(input_lang),
            target: display(output_lang),
            cl_name: cl.clone(),
            family,
        };
        let (pool, oracle) = if cfg.name == StrategyName::CLcovELemMS {
            (self.pivot_exemplars.as_ref(), self.bundle.pivot_oracle.as_ref())
        } else {
            let oracle = [self.bundle.oracle.as_ref(), self.oracle_rev.as_ref()]
                .into_iter()
                .flatten()
                .find(|o| o.lexicon().source_lang() == input_lang);
            (self.exemplars.as_ref(), oracle)
        };
        self.render_with_materials(cfg, sample_id, input_lang, output_lang, &names, &input, pool, oracle)
    }

    /// The word-for-word baseline on a plain sample, in the model's output
    /// script (ciphered when translating from English).
    pub fn word_for_word(&self, cfg: &StrategyConfig, plain: &str) -> Result<String, StrategyError> {
        let input_lang = match cfg.direction {
            Direction::ToEnglish => self.bundle.language.as_str(),
            Direction::FromEnglish => ENGLISH,
        };
        let lex = self.curated(input_lang).ok_or_else(|| StrategyError::MissingMaterial("word meanings".into()))?;
        let input = self.model_input(cfg, plain);
        Ok(word_for_word_tokens(lex, &input, &self.params(cfg)).join(" "))
    }

    /// Task prompt on a plain item. Exemplars come from `task_pool`, which
    /// holds plain labelled items and is ciphered here.
    pub fn task_prompt(
        &self,
        cfg: &StrategyConfig,
        item: &TaskItem,
        task_pool: &[TaskItem],
        cascade_cfg: Option<&StrategyConfig>,
    ) -> Result<TaskPrompt, StrategyError> {
        cfg.validate()?;
        let lang = self.bundle.language.as_str();
        let cl = self.map.cl_name().to_string();
        if cfg.name == StrategyName::TaskCascade {
            let mt = cascade_cfg
                .cloned()
                .unwrap_or_else(|| StrategyConfig::preset(StrategyName::LELemMS, Direction::ToEnglish));
            let mt = StrategyConfig { direction: Direction::ToEnglish, ..mt };
            mt.validate()?;
            let text = item.map_text(|s| self.map.apply(s)).render(self.templates)?;
            let names = LanguageNames {
                source: cl.clone(),
                target: "English".into(),
                cl_name: cl,
                family: self.family(),
            };
            let pool = self.exemplars.as_ref();
            let prompt =
                self.render_with_materials(&mt, &item.id, lang, ENGLISH, &names, &text, pool, self.bundle.oracle.as_ref())?;
            return Ok(TaskPrompt::Cascade(prompt));
        }
        let topline = cfg.name == StrategyName::Topline;
        let shown = if topline { item.clone() } else { item.map_text(|s| self.map.apply(s)) };
        let text = shown.render(self.templates)?;
        let names = LanguageNames {
            source: if topline { Self::language_name(lang) } else { cl.clone() },
            target: "English".into(),
            cl_name: cl,
            family: self.family(),
        };
        let mut exemplars = Vec::new();
        if cfg.use_exemplars && !topline {
            let pool: Vec<Exemplar> = task_pool
                .iter()
                .filter(|p| p.kind() == item.kind() && p.id != item.id)
                .map(|p| {
                    Ok(Exemplar {
                        id: p.id.clone(),
                        source: p.map_text(|s| self.map.apply(s)).render(self.templates)?,
                        target: p.label.to_string(),
                        domain: p.domain.clone(),
                    })
                })
                .collect::<Result<_, StrategyError>>()?;
            let index = Bm25Index::build(pool.iter().map(|e| (e.id.as_str(), e.source.as_str())), Bm25Params::default())
                .map_err(|_| StrategyError::MissingMaterial("exemplars".into()))?;
            for id in index.top_e(&text, cfg.e) {
                exemplars.extend(pool.iter().find(|e| e.id == id).cloned());
            }
        }
        let meanings = if cfg.use_lexicon && !topline {
            self.word_meanings(cfg, lang, self.bundle.oracle.as_ref(), &text, None)?
        } else {
            Vec::new()
        };
        let materials = PromptMaterials {
            exemplars: &exemplars,
            word_meanings: &meanings,
            profile: self.bundle.syntax_profile.as_ref(),
            paradigms: self.bundle.paradigms.as_deref(),
            ..Default::default()
        };
        let task_cfg = if topline { cfg.clone() } else { StrategyConfig { use_lemmas: false, ..cfg.clone() } };
        let meta = self.meta(&item.id, lang, ENGLISH);
        Ok(TaskPrompt::Direct(render_task_prompt(&task_cfg, self.templates, &names, item.kind(), &text, &materials, meta)?))
    }

    /// Second cascade stage: the task posed in English on the translated item.
    pub fn task_in_english(&self, item: &TaskItem, translation: &str) -> Result<PromptBundle, StrategyError> {
        let cfg = StrategyConfig::preset(StrategyName::Topline, Direction::ToEnglish);
        let names = LanguageNames {
            source: "English".into(),
            target: "English".into(),
            cl_name: self.map.cl_name().to_string(),
            family: self.family(),
        };
        let meta = self.meta(&item.id, ENGLISH, ENGLISH);
        let mut prompt =
            render_task_prompt(&cfg, self.templates, &names, item.kind(), translation.trim(), &PromptMaterials::default(), meta)?;
        prompt.strategy = StrategyName::TaskCascade;
        Ok(prompt)
    }
}
