//! Generators and reference oracles shared by the test suites.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::{json, Value};

use crate::aligner::{total_cost, AlignerParams, Bead, BeadKind};
use crate::edit::{apply_edit, Edit};
use crate::ids::{Level, SegmentId};
use crate::llm::{PayloadRule, PromptTemplate};
use crate::model::{
    validate_project, AlignmentLink, Document, DocumentMeta, Origin, Paragraph, Project, Role, Sentence, TechniqueDef,
};

const LATIN: &[&str] = &[
    "the", "ship", "sailed", "north", "quietly", "while", "rain", "fell", "on", "harbour", "Dr.", "Mr.", "e.g.",
    "café", "naïve", "über", "a<b", "x>y", "R&D", "\"quoted\"", "it's", "(aside)", "[note]", "100%", "—",
];
const ARABIC: &[&str] = &[
    "السفينة", "أبحرت", "شمالا", "بهدوء", "بينما", "المطر", "يهطل", "على", "الميناء", "كتاب", "«نص»", "و",
];
const ENDINGS: &[&str] = &[".", "!", "?", "\u{061F}", "...", ".\"", "!)", "\u{2026}"];
const GAPS: &[&str] = &[" ", "  ", "\n", "\t", " \n ", "\r\n"];
const TECHNIQUES: &[&str] = &[
    "Inversion", "Omission", "Addition", "Negation", "Modulation", "Transposition <x>", "Équivalence & co",
];
const LANGUAGES: &[&str] = &["en", "ar", "fr", "en-US", "zh-Hant", "ara"];

fn pick<'a, R: Rng>(rng: &mut R, pool: &[&'a str]) -> &'a str {
    pool.choose(rng).copied().unwrap_or("")
}

/// Random text of `words` words drawn from Latin and Arabic pools.
pub fn random_words<R: Rng>(rng: &mut R, words: usize) -> String {
    let arabic = rng.gen_bool(0.4);
    (0..words)
        .map(|_| {
            if arabic ^ rng.gen_bool(0.1) {
                pick(rng, ARABIC)
            } else {
                pick(rng, LATIN)
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn random_sentence<R: Rng>(rng: &mut R) -> String {
    let n = rng.gen_range(1..=6);
    format!("{}{}", random_words(rng, n), pick(rng, ENDINGS))
}

/// Free text that may carry escapable characters, newlines and tabs.
pub fn random_note<R: Rng>(rng: &mut R) -> String {
    match rng.gen_range(0..5) {
        0 => String::new(),
        1 => random_words(rng, 3),
        2 => format!("{} & {}", random_words(rng, 2), random_words(rng, 2)),
        3 => format!("{}\n\t'{}' <{}>", random_words(rng, 1), random_words(rng, 2), random_words(rng, 1)),
        _ => format!(" {}\r\n", random_words(rng, 2)),
    }
}

/// A raw paragraph and, when `segmented`, sentences that tile it.
pub fn random_paragraph<R: Rng>(rng: &mut R, index: u32, max_sentences: usize) -> Paragraph {
    let mut para = Paragraph::new(index, "");
    if rng.gen_bool(0.05) {
        return para;
    }
    let count = rng.gen_range(1..=max_sentences.max(1));
    let sentences: Vec<String> = (0..count).map(|_| random_sentence(rng)).collect();
    let mut raw = String::new();
    if rng.gen_bool(0.2) {
        raw.push_str(pick(rng, GAPS));
    }
    for (k, s) in sentences.iter().enumerate() {
        if k > 0 {
            raw.push_str(pick(rng, GAPS));
        }
        raw.push_str(s);
    }
    if rng.gen_bool(0.2) {
        raw.push_str(pick(rng, GAPS));
    }
    para.raw_text = raw;
    if rng.gen_bool(0.7) {
        para.sentences = sentences
            .into_iter()
            .enumerate()
            .map(|(k, text)| Sentence {
                id: para.id.child(k as u32 + 1),
                text,
            })
            .collect();
    }
    para
}

fn random_meta<R: Rng>(rng: &mut R) -> DocumentMeta {
    let field = |rng: &mut R| if rng.gen_bool(0.5) { random_note(rng) } else { String::new() };
    DocumentMeta {
        title: field(rng),
        author: field(rng),
        genre: field(rng),
        publication_date: if rng.gen_bool(0.5) {
            format!("{:04}-{:02}-{:02}", rng.gen_range(1900..2030), rng.gen_range(1..=12), rng.gen_range(1..=28))
        } else {
            String::new()
        },
        publisher: field(rng),
        domain: field(rng),
        document_type: field(rng),
        language: pick(rng, LANGUAGES).to_string(),
        source_url: if rng.gen_bool(0.3) { "https://example.org/a?b=1&c=2".into() } else { String::new() },
    }
}

fn random_document<R: Rng>(rng: &mut R, doc_id: String, role: Role, shape: &ProjectShape) -> Document {
    let n = rng.gen_range(1..=shape.max_paragraphs.max(1));
    Document {
        doc_id,
        role,
        meta: random_meta(rng),
        paragraphs: (0..n)
            .map(|i| random_paragraph(rng, i as u32 + 1, shape.max_sentences))
            .collect(),
    }
}

/// Size limits for [`random_project`].
#[derive(Debug, Clone, Copy)]
pub struct ProjectShape {
    pub max_paragraphs: usize,
    pub max_sentences: usize,
    pub max_links: usize,
}

impl Default for ProjectShape {
    fn default() -> Self {
        ProjectShape {
            max_paragraphs: 30,
            max_sentences: 8,
            max_links: 40,
        }
    }
}

fn random_subset<R: Rng>(rng: &mut R, ids: &[SegmentId], max: usize) -> BTreeSet<SegmentId> {
    if ids.is_empty() {
        return BTreeSet::new();
    }
    let k = rng.gen_range(0..=max.min(ids.len()));
    let start = rng.gen_range(0..ids.len());
    // mostly contiguous runs, sometimes scattered
    if rng.gen_bool(0.8) {
        ids[start..].iter().take(k).copied().collect()
    } else {
        ids.choose_multiple(rng, k).copied().collect()
    }
}

/// A random link over existing segments with both sides possibly empty but
/// never both.
pub fn random_link<R: Rng>(rng: &mut R, project: &Project, level: Level) -> Option<AlignmentLink> {
    let src = project.source_doc.segment_ids(level);
    let tgt = project.target_doc.segment_ids(level);
    if src.is_empty() && tgt.is_empty() {
        return None;
    }
    let mut link = AlignmentLink::new(level, random_subset(rng, &src, 3), random_subset(rng, &tgt, 3));
    link.link_id = format!("{:032x}", rng.gen::<u128>());
    if link.source_ids.is_empty() && link.target_ids.is_empty() {
        match (src.choose(rng), tgt.choose(rng)) {
            (Some(s), _) => link.source_ids.insert(*s),
            (None, Some(t)) => link.target_ids.insert(*t),
            (None, None) => return None,
        };
    }
    link.origin = *[Origin::Manual, Origin::Llm, Origin::Baseline].choose(rng).unwrap();
    link.comment = random_note(rng).trim().to_string();
    if rng.gen_bool(0.3) {
        link.comment = random_note(rng);
    }
    for t in &project.taxonomy {
        if rng.gen_bool(0.25) {
            link.techniques.insert(t.name.clone());
        }
    }
    if rng.gen_bool(0.4) {
        link.confidence = Some(match rng.gen_range(0..4) {
            0 => 0.0,
            1 => 1.0,
            _ => rng.gen::<f64>(),
        });
    }
    Some(link)
}

fn random_template<R: Rng>(rng: &mut R, n: usize) -> PromptTemplate {
    let mut t = PromptTemplate::new(
        format!("tpl {n} <{}>", random_words(rng, 1)),
        format!("Segment this {{{{language}}}} text & align:\n{{{{paragraph}}}}\n{}", random_note(rng)),
    );
    t.template_id = format!("t{n}");
    t.description = random_note(rng);
    t
}

/// A random project satisfying [`validate_project`].
pub fn random_project<R: Rng>(rng: &mut R, shape: &ProjectShape) -> Project {
    let mut p = Project::new(random_words(rng, 3), DocumentMeta::default(), DocumentMeta::default());
    p.source_doc = random_document(rng, p.source_doc.doc_id.clone(), Role::Source, shape);
    p.target_doc = random_document(rng, p.target_doc.doc_id.clone(), Role::Target, shape);
    let count = rng.gen_range(0..=TECHNIQUES.len());
    let names: Vec<&str> = TECHNIQUES.choose_multiple(rng, count).copied().collect();
    p.taxonomy = names
        .into_iter()
        .map(|name| TechniqueDef {
            name: name.to_string(),
            description: random_note(rng),
            examples: (0..rng.gen_range(0..3)).map(|_| random_words(rng, 3)).collect(),
        })
        .collect();
    if rng.gen_bool(0.5) {
        p.prompt_templates.push(crate::llm::default_template());
    }
    for n in 0..rng.gen_range(0..2) {
        p.prompt_templates.push(random_template(rng, n));
    }
    let links = rng.gen_range(0..=shape.max_links);
    for _ in 0..links {
        let level = if rng.gen_bool(0.5) { Level::Paragraph } else { Level::Sentence };
        if let Some(link) = random_link(rng, &p, level) {
            p.links.push(link);
        }
    }
    p.links.sort_by(|a, b| a.link_id.cmp(&b.link_id));
    debug_assert!(validate_project(&p).is_empty(), "{:?}", validate_project(&p));
    p
}

/// A random edit that applies cleanly to `project` and keeps it valid.
pub fn random_valid_edit<R: Rng>(rng: &mut R, project: &Project) -> Edit {
    loop {
        let edit = random_edit(rng, project);
        let mut scratch = project.clone();
        if apply_edit(&mut scratch, &edit).is_ok() && validate_project(&scratch).is_empty() {
            return edit;
        }
    }
}

fn some_link<'a, R: Rng>(rng: &mut R, project: &'a Project) -> Option<&'a AlignmentLink> {
    project.links.choose(rng)
}

/// A random edit; it may be rejected by [`apply_edit`] or validation.
pub fn random_edit<R: Rng>(rng: &mut R, project: &Project) -> Edit {
    let level = if rng.gen_bool(0.5) { Level::Paragraph } else { Level::Sentence };
    match rng.gen_range(0..14) {
        0..=2 => match random_link(rng, project, level).or_else(|| random_link(rng, project, Level::Paragraph)) {
            Some(link) => Edit::AddLinks { links: vec![link] },
            None => Edit::SetMetadata {
                role: Role::Source,
                meta: random_meta(rng),
            },
        },
        3 => match some_link(rng, project) {
            Some(l) => Edit::RemoveLinks {
                link_ids: vec![l.link_id.clone()],
            },
            None => Edit::Batch { edits: vec![] },
        },
        4 => match some_link(rng, project) {
            Some(l) => Edit::SetComment {
                link_id: l.link_id.clone(),
                comment: random_note(rng),
            },
            None => Edit::Batch { edits: vec![] },
        },
        5 => match (some_link(rng, project), project.taxonomy.choose(rng)) {
            (Some(l), Some(t)) => Edit::TagTechnique {
                link_id: l.link_id.clone(),
                technique: t.name.clone(),
            },
            _ => Edit::UpsertTechniqueDef {
                def: TechniqueDef::named(pick(rng, TECHNIQUES)),
            },
        },
        6 => match some_link(rng, project).and_then(|l| l.techniques.iter().next().map(|t| (l, t))) {
            Some((l, t)) => Edit::UntagTechnique {
                link_id: l.link_id.clone(),
                technique: t.clone(),
            },
            None => Edit::Batch { edits: vec![] },
        },
        7 => Edit::SetMetadata {
            role: if rng.gen_bool(0.5) { Role::Source } else { Role::Target },
            meta: random_meta(rng),
        },
        8 => {
            let role = if rng.gen_bool(0.5) { Role::Source } else { Role::Target };
            let doc = project.document(role);
            match doc.paragraphs.choose(rng) {
                Some(para) => {
                    let sentences = if rng.gen_bool(0.2) {
                        Vec::new()
                    } else {
                        crate::segmenter::segment(&para.raw_text, &doc.meta.language, &Default::default())
                    };
                    Edit::AttachSentences {
                        role,
                        para_id: para.id,
                        sentences,
                    }
                }
                None => Edit::Batch { edits: vec![] },
            }
        }
        9 => Edit::UpsertTechniqueDef {
            def: TechniqueDef {
                name: pick(rng, TECHNIQUES).to_string(),
                description: random_note(rng),
                examples: vec![random_words(rng, 2)],
            },
        },
        10 => match project.taxonomy.choose(rng) {
            Some(t) => Edit::DeleteTechniqueDef { name: t.name.clone() },
            None => Edit::Batch { edits: vec![] },
        },
        11 => {
            let n = rng.gen_range(0..3);
            Edit::UpsertTemplate {
                template: random_template(rng, n),
            }
        }
        12 => match some_link(rng, project) {
            Some(l) => {
                let mut m = l.clone();
                m.comment = random_note(rng);
                m.confidence = if rng.gen_bool(0.5) { Some(rng.gen()) } else { None };
                Edit::ModifyLink { link: m }
            }
            None => Edit::Batch { edits: vec![] },
        },
        _ => {
            let mut links = Vec::new();
            for _ in 0..rng.gen_range(1..4) {
                if let Some(l) = random_link(rng, project, level) {
                    links.push(l);
                }
            }
            Edit::Batch {
                edits: vec![Edit::AddLinks { links }],
            }
        }
    }
}

/// Exhaustive search over every bead sequence.
///
/// Returns the minimum total cost (summed left to right, like the aligner)
/// and, among sequences of that cost, the one whose bead preference ranks are
/// smallest read from the last bead backwards.
pub fn brute_force_align(src: &[usize], tgt: &[usize], params: &AlignerParams) -> (f64, Vec<Bead>) {
    fn walk(
        i: usize,
        j: usize,
        src: &[usize],
        tgt: &[usize],
        params: &AlignerParams,
        path: &mut Vec<Bead>,
        best: &mut Option<(f64, Vec<Bead>)>,
    ) {
        if i == src.len() && j == tgt.len() {
            let cost = total_cost(path, src, tgt, params);
            let better = match best {
                None => true,
                Some((c, b)) => cost < *c || (cost == *c && reverse_ranks(path) < reverse_ranks(b)),
            };
            if better {
                *best = Some((cost, path.clone()));
            }
            return;
        }
        for kind in BeadKind::PREFERENCE {
            let (a, b) = kind.shape();
            if i + a > src.len() || j + b > tgt.len() {
                continue;
            }
            path.push(Bead {
                kind,
                source: i..i + a,
                target: j..j + b,
            });
            walk(i + a, j + b, src, tgt, params, path, best);
            path.pop();
        }
    }
    fn reverse_ranks(beads: &[Bead]) -> Vec<usize> {
        beads.iter().rev().map(|b| b.kind.rank()).collect()
    }
    let mut best = None;
    walk(0, 0, src, tgt, params, &mut Vec::new(), &mut best);
    best.unwrap_or((0.0, Vec::new()))
}

/// First diverging character offset between the whitespace-collapsed
/// paragraph and the whitespace-collapsed sentences, computed independently
/// of the library's coverage check.
pub fn reference_divergence(raw: &str, sentences: &[&str]) -> Option<usize> {
    fn squeeze(s: &str) -> Vec<char> {
        let mut out: Vec<char> = Vec::new();
        let mut pending_space = false;
        for c in s.chars() {
            if c.is_whitespace() {
                pending_space = !out.is_empty();
            } else {
                if pending_space {
                    out.push(' ');
                    pending_space = false;
                }
                out.push(c);
            }
        }
        out
    }
    let a = squeeze(raw);
    let b = squeeze(&sentences.join(" "));
    if a == b {
        return None;
    }
    Some(a.iter().zip(&b).take_while(|(x, y)| x == y).count())
}

/// One rejected payload with the rule it must trip.
#[derive(Debug, Clone)]
pub struct PayloadCase {
    pub name: &'static str,
    pub raw: String,
    pub expected: PayloadRule,
    /// For coverage cases, the diverging offset per [`reference_divergence`].
    pub expected_offset: Option<usize>,
}

/// Source and target paragraphs the payload fixtures refer to.
pub fn fixture_paragraphs() -> (Paragraph, Paragraph) {
    (
        Paragraph::new(1, "The ship sailed north. Rain fell on the harbour!  Dr. Lee waved."),
        Paragraph::new(1, "أبحرت السفينة شمالا. هطل المطر على الميناء! لوّح الدكتور لي."),
    )
}

fn base_payload() -> Value {
    json!({
        "source_sentences": [
            {"id": "p1-s1", "text": "The ship sailed north."},
            {"id": "p1-s2", "text": "Rain fell on the harbour!"},
            {"id": "p1-s3", "text": "Dr. Lee waved."}
        ],
        "target_sentences": [
            {"id": "p1-s1", "text": "أبحرت السفينة شمالا."},
            {"id": "p1-s2", "text": "هطل المطر على الميناء! لوّح الدكتور لي."}
        ],
        "links": [
            {"source_ids": ["p1-s1"], "target_ids": ["p1-s1"], "confidence": 0.92},
            {"source_ids": ["p1-s2", "p1-s3"], "target_ids": ["p1-s2"], "confidence": 0.7}
        ]
    })
}

fn mutate(f: impl FnOnce(&mut Value)) -> String {
    let mut v = base_payload();
    f(&mut v);
    v.to_string()
}

fn coverage_case(name: &'static str, role: &str, index: usize, text: &str) -> PayloadCase {
    let (src, tgt) = fixture_paragraphs();
    let key = format!("{role}_sentences");
    let mut v = base_payload();
    v[&key][index]["text"] = json!(text);
    let texts: Vec<String> = v[&key]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["text"].as_str().unwrap().trim().to_string())
        .collect();
    let texts: Vec<&str> = texts.iter().map(String::as_str).collect();
    let raw = if role == "source" { &src.raw_text } else { &tgt.raw_text };
    PayloadCase {
        name,
        raw: v.to_string(),
        expected: PayloadRule::Coverage,
        expected_offset: reference_divergence(raw, &texts),
    }
}

/// Mutations of a valid fixture, each violating exactly one rule.
pub fn payload_mutation_corpus() -> Vec<PayloadCase> {
    use PayloadRule::*;
    let case = |name, raw: String, expected| PayloadCase {
        name,
        raw,
        expected,
        expected_offset: None,
    };
    let base = base_payload().to_string();
    let mut cases = vec![
        case("truncated", base[..base.len() / 2].to_string(), InvalidJson),
        case("trailing-comma", base.replacen("]}", "],}", 1), InvalidJson),
        case("prose", "Here is the alignment you asked for.".into(), InvalidJson),
        case("root-array", "[]".into(), WrongType),
        case("sentences-object", mutate(|v| v["source_sentences"] = json!({})), WrongType),
        case("text-number", mutate(|v| v["source_sentences"][0]["text"] = json!(7)), WrongType),
        case("id-number", mutate(|v| v["target_sentences"][1]["id"] = json!(2)), WrongType),
        case("links-string", mutate(|v| v["links"] = json!("p1-s1 ; p1-s1")), WrongType),
        case("confidence-string", mutate(|v| v["links"][0]["confidence"] = json!("high")), WrongType),
        case("link-array", mutate(|v| v["links"][1] = json!([["p1-s2"], ["p1-s2"]])), WrongType),
        case("no-links", mutate(|v| drop(v.as_object_mut().unwrap().remove("links"))), MissingField),
        case(
            "no-text",
            mutate(|v| drop(v["source_sentences"][0].as_object_mut().unwrap().remove("text"))),
            MissingField,
        ),
        case(
            "no-target-ids",
            mutate(|v| drop(v["links"][0].as_object_mut().unwrap().remove("target_ids"))),
            MissingField,
        ),
        case("extra-root", mutate(|v| v["notes"] = json!("none")), UnknownField),
        case("extra-sentence", mutate(|v| v["target_sentences"][0]["lang"] = json!("ar")), UnknownField),
        case("bad-id", mutate(|v| v["source_sentences"][0]["id"] = json!("s1")), MalformedId),
        case("bad-link-id", mutate(|v| v["links"][0]["source_ids"][0] = json!("p1s1")), MalformedId),
        case("other-paragraph", mutate(|v| v["source_sentences"][0]["id"] = json!("p2-s1")), ForeignId),
        case("paragraph-as-sentence", mutate(|v| v["target_sentences"][0]["id"] = json!("p1")), ForeignId),
        case("duplicate-id", mutate(|v| v["source_sentences"][1]["id"] = json!("p1-s1")), DuplicateId),
        case(
            "swapped-ids",
            mutate(|v| {
                v["source_sentences"][0]["id"] = json!("p1-s2");
                v["source_sentences"][1]["id"] = json!("p1-s1");
            }),
            IdSequence,
        ),
        case("gap-in-ids", mutate(|v| v["target_sentences"][1]["id"] = json!("p1-s3")), IdSequence),
        case("blank-text", mutate(|v| v["source_sentences"][2]["text"] = json!("   ")), EmptyText),
        case("empty-text", mutate(|v| v["target_sentences"][0]["text"] = json!("")), EmptyText),
        case(
            "empty-link",
            mutate(|v| v["links"][1] = json!({"source_ids": [], "target_ids": []})),
            EmptyLink,
        ),
        case("undeclared-source", mutate(|v| v["links"][0]["source_ids"][0] = json!("p1-s9")), DanglingLinkId),
        case("undeclared-target", mutate(|v| v["links"][1]["target_ids"][0] = json!("p1-s3")), DanglingLinkId),
        case(
            "repeated-member",
            mutate(|v| v["links"][1]["source_ids"] = json!(["p1-s2", "p1-s2"])),
            DuplicateLinkMember,
        ),
        case("confidence-high", mutate(|v| v["links"][0]["confidence"] = json!(1.5)), ConfidenceOutOfRange),
        case("confidence-negative", mutate(|v| v["links"][1]["confidence"] = json!(-0.1)), ConfidenceOutOfRange),
    ];
    cases.push(coverage_case("dropped-word", "source", 1, "Rain fell on harbour!"));
    cases.push(coverage_case("altered-target", "target", 0, "أبحرت السفينة جنوبا."));
    cases.push(coverage_case("truncated-tail", "source", 2, "Dr. Lee"));
    cases
}

/// Valid responses for [`fixture_paragraphs`], with the cosmetic variation
/// models produce.
pub fn valid_payload_fixtures() -> Vec<String> {
    let one_to_one_all = json!({
        "source_sentences": [
            {"id": "p1-s1", "text": "The ship sailed north."},
            {"id": "p1-s2", "text": "Rain fell on the harbour!"},
            {"id": "p1-s3", "text": "Dr. Lee waved."}
        ],
        "target_sentences": [
            {"id": "p1-s1", "text": "أبحرت السفينة شمالا."},
            {"id": "p1-s2", "text": "هطل المطر على الميناء!"},
            {"id": "p1-s3", "text": "لوّح الدكتور لي."}
        ],
        "links": [
            {"source_ids": ["p1-s1"], "target_ids": ["p1-s1"]},
            {"source_ids": ["p1-s2"], "target_ids": ["p1-s2"], "confidence": null},
            {"source_ids": ["p1-s3"], "target_ids": ["p1-s3"], "confidence": 1}
        ]
    });
    let whole = json!({
        "source_sentences": [{"id": "p1-s1", "text": "The ship sailed north. Rain fell on the harbour! Dr. Lee waved."}],
        "target_sentences": [{"id": "p1-s1", "text": "أبحرت السفينة شمالا. هطل المطر على الميناء! لوّح الدكتور لي."}],
        "links": [{"source_ids": ["p1-s1"], "target_ids": ["p1-s1"], "confidence": 0}]
    });
    let mut null_matches = one_to_one_all.clone();
    null_matches["links"] = json!([
        {"source_ids": ["p1-s1"], "target_ids": []},
        {"source_ids": [], "target_ids": ["p1-s1"]},
        {"source_ids": ["p1-s2", "p1-s3"], "target_ids": ["p1-s2", "p1-s3"], "confidence": 0.5}
    ]);
    let mut no_links = one_to_one_all.clone();
    no_links["links"] = json!([]);
    let mut padded = one_to_one_all.clone();
    padded["source_sentences"][0]["text"] = json!("  The ship sailed north.\n");
    let mut reordered_keys = base_payload();
    reordered_keys["links"] = json!([{"confidence": 0.25, "target_ids": ["p1-s1", "p1-s2"], "source_ids": ["p1-s3"]}]);
    let mut many_to_one = base_payload();
    many_to_one["links"] = json!([{"source_ids": ["p1-s1", "p1-s2", "p1-s3"], "target_ids": ["p1-s1", "p1-s2"]}]);
    vec![
        base_payload().to_string(),
        serde_json::to_string_pretty(&base_payload()).unwrap(),
        format!("```json\n{}\n```", base_payload()),
        one_to_one_all.to_string(),
        whole.to_string(),
        null_matches.to_string(),
        no_links.to_string(),
        padded.to_string(),
        reordered_keys.to_string(),
        many_to_one.to_string(),
    ]
}

#[cfg(test)]
mod tests {
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    use super::*;
    use crate::aligner::align_lengths;
    use crate::llm::{strip_code_fence, validate_payload};

    #[test]
    fn generated_projects_are_valid() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..20 {
            let p = random_project(&mut rng, &ProjectShape::default());
            assert_eq!(validate_project(&p), vec![]);
        }
    }

    #[test]
    fn brute_force_agrees_on_small_case() {
        let params = AlignerParams::default();
        let (cost, beads) = brute_force_align(&[20, 21], &[41], &params);
        assert_eq!(beads, align_lengths(&[20, 21], &[41], &params));
        assert_eq!(cost, 230.0);
    }

    #[test]
    fn corpus_is_rejected_with_expected_rules() {
        let (src, tgt) = fixture_paragraphs();
        let corpus = payload_mutation_corpus();
        assert!(corpus.len() >= 30);
        for case in corpus {
            let err = validate_payload(strip_code_fence(&case.raw), &src, &tgt).unwrap_err();
            assert_eq!(err.rule, case.expected, "{}: {err}", case.name);
        }
        for raw in valid_payload_fixtures() {
            validate_payload(strip_code_fence(&raw), &src, &tgt).unwrap();
        }
    }

    #[test]
    fn reference_divergence_matches_examples() {
        assert_eq!(reference_divergence("a  b", &["a", "b"]), None);
        assert_eq!(reference_divergence("abc d", &["abd"]), Some(2));
        assert_eq!(reference_divergence("abc", &["abc", "d"]), Some(3));
    }
}
