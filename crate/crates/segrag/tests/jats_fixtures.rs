use std::path::PathBuf;

use segrag::jats::clean_jats;
use segrag::Error;

fn fixture(name: &str) -> Vec<u8> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/jats").join(name);
    std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn sentinels_never_leak() {
    let doc = clean_jats(&fixture("sentinels.xml"), "x").unwrap();
    assert!(doc.sentences().all(|s| !s.contains("SENTINEL")), "{doc:?}");
    let titles: Vec<_> = doc.sections.iter().map(|s| s.title.as_deref()).collect();
    assert_eq!(titles, [Some("abstract"), Some("Introduction"), Some("Results")]);
    assert_eq!(
        doc.sections[0].sentences,
        ["Serum markers were measured in 40 adults.", "Levels rose after treatment (1)."]
    );
}

#[test]
fn nested_sections_flatten_in_preorder() {
    let doc = clean_jats(&fixture("nested.xml"), "x").unwrap();
    assert_eq!(doc.id, "10.0000/fixture.nested");
    let got: Vec<(&str, usize)> =
        doc.sections.iter().map(|s| (s.title.as_deref().unwrap(), s.sentences.len())).collect();
    // hand enumeration of the fixture tree; "Discussion" holds no text of its own
    assert_eq!(
        got,
        [
            ("abstract", 2),
            ("Introduction", 2),
            ("Background", 2),
            ("Aims", 1),
            ("Primary aim", 1),
            ("Methods", 1),
            ("Cohort", 1),
            ("Limitations", 1),
        ]
    );
    assert_eq!(doc.sections[1].sentences, ["Introduction opens here.", "Introduction closes here."]);
}

#[test]
fn single_sentence_article() {
    let doc = clean_jats(&fixture("single.xml"), "single").unwrap();
    assert_eq!(doc.id, "single");
    assert_eq!(doc.sections.len(), 1);
    assert_eq!(doc.sections[0].sentences, ["One lonely sentence stands here."]);
}

#[test]
fn malformed_reports_byte_offset() {
    let xml = fixture("malformed.xml");
    match clean_jats(&xml, "m") {
        Err(Error::Xml { offset, message }) => {
            assert!(offset > 0 && offset <= xml.len() as u64, "offset {offset}");
            assert!(!message.is_empty());
        }
        other => panic!("expected an XML error, got {other:?}"),
    }
}

#[test]
fn figure_only_article_is_empty() {
    assert!(matches!(clean_jats(&fixture("empty.xml"), "e"), Err(Error::EmptyDocument(id)) if id == "9"));
}
