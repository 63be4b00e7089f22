//! JATS full-text XML to sectioned [`Document`]s.
//!
//! Keeps the abstract (as section 0, titled `abstract`) and the body
//! sections; drops figures, tables, captions, references, appendices and
//! supplementary material. Nested `<sec>` elements are flattened in
//! pre-order. Paragraphs are sentence-split one `<p>` at a time.

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use segrag_core::segmenter::sentences;
use segrag_core::text::collapse_whitespace;
use segrag_core::{Document, Section};

use crate::error::{Error, Result};

/// Elements whose whole subtree is discarded.
pub const EXCLUDED: &[&str] = &[
    "fig",
    "table-wrap",
    "caption",
    "ref-list",
    "ref",
    "app",
    "app-group",
    "supplementary-material",
    "graphic",
    "media",
];

/// Elements that end a run of paragraph text.
const BLOCKS: &[&str] = &[
    "p", "sec", "abstract", "body", "list", "list-item", "def-list", "def-item", "disp-quote", "boxed-text",
    "statement", "title", "label", "disp-formula",
];

#[derive(Default)]
struct Builder {
    sections: Vec<Section>,
    abstract_idx: Option<usize>,
    body_root: Option<usize>,
    sec_stack: Vec<usize>,
    text: String,
    title: Option<String>,
}

impl Builder {
    fn flush(&mut self, target: Option<usize>) {
        let para = collapse_whitespace(&self.text);
        self.text.clear();
        if para.is_empty() {
            return;
        }
        let idx = match target {
            Some(i) => i,
            None => *self.body_root.get_or_insert_with(|| {
                self.sections.push(Section { title: None, sentences: Vec::new() });
                self.sections.len() - 1
            }),
        };
        self.sections[idx].sentences.extend(sentences(&para));
    }
}

fn local_name(e: &BytesStart<'_>) -> String {
    String::from_utf8_lossy(e.local_name().as_ref()).into_owned()
}

fn attr(e: &BytesStart<'_>, key: &str) -> Option<String> {
    e.attributes()
        .flatten()
        .find(|a| a.key.local_name().as_ref() == key.as_bytes())
        .map(|a| String::from_utf8_lossy(&a.value).into_owned())
}

/// Parses one JATS article. `fallback_id` is used when the article carries
/// no `pmid`, `pmc` or `doi` article id.
pub fn clean_jats(xml: &[u8], fallback_id: &str) -> Result<Document> {
    let mut reader = Reader::from_reader(xml);
    reader.config_mut().check_end_names = true;

    let mut stack: Vec<String> = Vec::new();
    let mut skip = 0usize;
    let mut in_abstract = 0usize;
    let mut in_body = 0usize;
    let mut in_title = false;
    let mut ids: Vec<(String, String)> = Vec::new();
    let mut id_type: Option<String> = None;
    let mut id_text = String::new();
    let mut b = Builder::default();
    let mut buf = Vec::new();

    let target = |b: &Builder, in_abstract: usize| -> Option<usize> {
        if in_abstract > 0 {
            b.abstract_idx
        } else {
            b.sec_stack.last().copied()
        }
    };

    loop {
        let ev = reader.read_event_into(&mut buf).map_err(|e| Error::Xml {
            offset: reader.error_position(),
            message: e.to_string(),
        })?;
        match ev {
            Event::Start(e) => {
                let name = local_name(&e);
                stack.push(name.clone());
                let dropped = EXCLUDED.contains(&name.as_str())
                    || name == "label"
                    || (name == "title" && in_abstract > 0);
                if skip > 0 || dropped {
                    skip += 1;
                    continue;
                }
                let in_text = in_abstract > 0 || in_body > 0;
                if in_text && BLOCKS.contains(&name.as_str()) {
                    b.flush(target(&b, in_abstract));
                }
                match name.as_str() {
                    "article-id" if in_abstract == 0 && in_body == 0 => {
                        id_type = attr(&e, "pub-id-type");
                        id_text.clear();
                    }
                    "abstract" if in_body == 0 => {
                        in_abstract += 1;
                        if b.abstract_idx.is_none() {
                            b.sections.insert(0, Section { title: Some("abstract".into()), sentences: Vec::new() });
                            b.abstract_idx = Some(0);
                            for i in b.sec_stack.iter_mut().chain(b.body_root.iter_mut()) {
                                *i += 1;
                            }
                        }
                    }
                    "body" if in_abstract == 0 => in_body += 1,
                    "sec" if in_body > 0 && in_abstract == 0 => {
                        b.sections.push(Section { title: None, sentences: Vec::new() });
                        b.sec_stack.push(b.sections.len() - 1);
                    }
                    "title" if in_body > 0 && in_abstract == 0 && stack.len() >= 2 && stack[stack.len() - 2] == "sec" => {
                        in_title = true;
                        b.title = Some(String::new());
                    }
                    _ => {}
                }
            }
            Event::Empty(e) => {
                let name = local_name(&e);
                if skip == 0 && (in_abstract > 0 || in_body > 0) && BLOCKS.contains(&name.as_str()) {
                    b.flush(target(&b, in_abstract));
                }
            }
            Event::End(_) => {
                let name = stack.pop().unwrap_or_default();
                if skip > 0 {
                    skip -= 1;
                    continue;
                }
                let in_text = in_abstract > 0 || in_body > 0;
                if in_text && BLOCKS.contains(&name.as_str()) && !in_title {
                    b.flush(target(&b, in_abstract));
                }
                match name.as_str() {
                    "article-id" if id_type.is_some() => {
                        ids.push((id_type.take().unwrap_or_default(), collapse_whitespace(&id_text)));
                    }
                    "abstract" if in_abstract > 0 => in_abstract -= 1,
                    "body" if in_body > 0 => in_body -= 1,
                    "sec" if in_body > 0 && in_abstract == 0 => {
                        b.sec_stack.pop();
                    }
                    "title" if in_title => {
                        in_title = false;
                        let t = collapse_whitespace(&b.title.take().unwrap_or_default());
                        if let Some(&i) = b.sec_stack.last() {
                            b.sections[i].title = (!t.is_empty()).then_some(t);
                        }
                    }
                    _ => {}
                }
            }
            Event::Text(t) => {
                if skip > 0 {
                    continue;
                }
                let s = match t.unescape() {
                    Ok(s) => s.into_owned(),
                    Err(_) => String::from_utf8_lossy(&t).into_owned(),
                };
                if id_type.is_some() {
                    id_text.push_str(&s);
                } else if in_title {
                    b.title.get_or_insert_with(String::new).push_str(&s);
                } else if in_abstract > 0 || in_body > 0 {
                    b.text.push_str(&s);
                }
            }
            Event::CData(t) => {
                if skip == 0 && !in_title && (in_abstract > 0 || in_body > 0) {
                    b.text.push_str(&String::from_utf8_lossy(&t));
                }
            }
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }
    if !stack.is_empty() {
        return Err(Error::Xml {
            offset: reader.buffer_position(),
            message: format!("unexpected end of input inside <{}>", stack.last().unwrap()),
        });
    }

    let id = ["pmid", "pmc", "doi"]
        .iter()
        .find_map(|want| ids.iter().find(|(t, v)| t == want && !v.is_empty()).map(|(_, v)| v.clone()))
        .unwrap_or_else(|| fallback_id.to_string());
    let sections: Vec<Section> = b.sections.into_iter().filter(|s| !s.sentences.is_empty()).collect();
    if sections.is_empty() {
        return Err(Error::EmptyDocument(id));
    }
    let doc = Document { id, sections };
    doc.validate()?;
    Ok(doc)
}
