use lata_core::canonical_json;
use lata_core::testkit::{random_project, ProjectShape};
use lata_store::Store;
use rand::rngs::StdRng;
use rand::SeedableRng;

#[test]
fn export_import_preserves_content() {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::open(dir.path()).unwrap();
    let mut rng = StdRng::seed_from_u64(7);
    let project = random_project(&mut rng, &ProjectShape::default());
    store.insert_project(&project).unwrap();
    let bytes = store.export_bundle(&project.project_id).unwrap();
    let copy = store.import_bundle(&bytes, Some("copy")).unwrap();
    assert_ne!(copy.project_id, project.project_id);
    assert_eq!(copy.name, "copy");
    assert_eq!(copy.links.len(), project.links.len());
    let (loaded, rev) = store.load(&copy.project_id).unwrap();
    assert_eq!(rev, 0);
    assert_eq!(canonical_json(&loaded), canonical_json(&copy));
    // the copy re-exports to the same bytes apart from the project header
    let again = store.export_bundle(&copy.project_id).unwrap();
    let a = lata_core::ces::read_members(&bytes).unwrap();
    let b = lata_core::ces::read_members(&again).unwrap();
    assert_eq!(a[0], b[0]);
    assert_eq!(a[1], b[1]);
}

#[test]
fn corrupt_bundle_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::open(dir.path()).unwrap();
    let err = store.import_bundle(b"not a zip", None).unwrap_err();
    assert_eq!(err.code(), "archive");
    assert!(store.list_projects().unwrap().is_empty());
}
