use lata_core::ids::{Level, SegmentId};
use lata_core::model::{AlignmentLink, DocumentMeta, Role};
use lata_core::testkit::{random_project, random_valid_edit, ProjectShape};
use lata_core::{canonical_json, Edit};
use lata_store::{HistoryDepth, Store, HISTORY_LIMIT};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn undo_all_redo_all_across_reopen(seed in any::<u64>(), len in 1usize..=30) {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = StdRng::seed_from_u64(seed);
        let shape = ProjectShape { max_paragraphs: 5, max_sentences: 4, max_links: 6 };
        let project = random_project(&mut rng, &shape);
        let id = project.project_id.clone();
        let initial = canonical_json(&project);
        {
            let store = Store::open(dir.path()).unwrap();
            store.insert_project(&project).unwrap();
            let mut current = project;
            for _ in 0..len {
                let edit = random_valid_edit(&mut rng, &current);
                store.apply(&id, &edit, None).unwrap();
                current = store.load(&id).unwrap().0;
            }
        }
        let store = Store::open(dir.path()).unwrap();
        let fin = canonical_json(&store.load(&id).unwrap().0);
        prop_assert_eq!(store.history(&id).unwrap(), HistoryDepth { undo: len as u64, redo: 0 });
        for _ in 0..len {
            store.undo(&id, None).unwrap();
        }
        prop_assert_eq!(canonical_json(&store.load(&id).unwrap().0), initial);
        drop(store);
        let store = Store::open(dir.path()).unwrap();
        for _ in 0..len {
            store.redo(&id, None).unwrap();
        }
        prop_assert_eq!(canonical_json(&store.load(&id).unwrap().0), fin);
    }
}

#[test]
fn history_is_capped() {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::open(dir.path()).unwrap();
    let p = store
        .create_project("cap", DocumentMeta::with_language("en"), DocumentMeta::with_language("ar"))
        .unwrap();
    store.import_document(&p.project_id, Role::Source, "A.", false).unwrap();
    store.import_document(&p.project_id, Role::Target, "B.", false).unwrap();
    let link = AlignmentLink::new(Level::Paragraph, [SegmentId::paragraph(1)], [SegmentId::paragraph(1)]);
    store
        .apply(&p.project_id, &Edit::AddLinks { links: vec![link.clone()] }, None)
        .unwrap();
    let extra = 5;
    for i in 0..HISTORY_LIMIT + extra - 1 {
        let edit = Edit::SetComment {
            link_id: link.link_id.clone(),
            comment: format!("note {i}"),
        };
        store.apply(&p.project_id, &edit, None).unwrap();
    }
    assert_eq!(store.history(&p.project_id).unwrap().undo, HISTORY_LIMIT);
    for _ in 0..HISTORY_LIMIT {
        store.undo(&p.project_id, None).unwrap();
    }
    assert!(store.undo(&p.project_id, None).is_err());
    let (project, _) = store.load(&p.project_id).unwrap();
    assert_eq!(project.links[0].comment, format!("note {}", extra - 2));
}

#[test]
fn second_handle_sees_writes() {
    let dir = tempfile::tempdir().unwrap();
    let a = Store::open(dir.path()).unwrap();
    let b = Store::open(dir.path()).unwrap();
    let p = a.create_project("shared", DocumentMeta::with_language("en"), DocumentMeta::with_language("ar")).unwrap();
    b.load(&p.project_id).unwrap();
    a.import_document(&p.project_id, Role::Source, "A.", false).unwrap();
    let (seen, rev) = b.load(&p.project_id).unwrap();
    assert_eq!(rev, 1);
    assert_eq!(seen.source_doc.paragraphs.len(), 1);
    assert_eq!(b.apply(&p.project_id, &Edit::Batch { edits: vec![] }, Some(0)).unwrap_err().code(), "stale-revision");
}
