use lata_core::ces::{export_bytes, import_bytes, ordered_links, read_members};
use lata_core::ids::Level;
use lata_core::testkit::{random_project, ProjectShape};
use lata_core::{canonical_json, validate_project, Project};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

/// Replaces link ids with their export ids so projects compare canonically.
fn with_export_ids(p: &Project) -> Project {
    let mut q = p.clone();
    let mut links = Vec::new();
    for level in [Level::Paragraph, Level::Sentence] {
        for (id, link) in ordered_links(p, level) {
            let mut l = link.clone();
            l.link_id = id;
            links.push(l);
        }
    }
    links.sort_by(|a, b| a.link_id.cmp(&b.link_id));
    q.links = links;
    q.updated_at = q.created_at.clone();
    q
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn export_import_export_is_byte_identical(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let p = random_project(&mut rng, &ProjectShape::default());
        prop_assert_eq!(validate_project(&p), vec![]);
        let bytes = export_bytes(&p).unwrap();
        prop_assert_eq!(&bytes, &export_bytes(&p.clone()).unwrap());
        let q = import_bytes(&bytes).unwrap();
        prop_assert_eq!(&export_bytes(&q).unwrap(), &bytes);
        prop_assert_eq!(canonical_json(&q), canonical_json(&with_export_ids(&p)));
    }

    #[test]
    fn every_member_is_well_formed_and_ids_resolve(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let p = random_project(&mut rng, &ProjectShape { max_paragraphs: 8, ..Default::default() });
        let members = read_members(&export_bytes(&p).unwrap()).unwrap();
        for m in &members {
            prop_assert!(roxmltree::Document::parse(m).is_ok());
            prop_assert!(m.ends_with('\n') && !m.contains('\r'));
        }
        let ids = |xml: &str| -> std::collections::BTreeSet<String> {
            roxmltree::Document::parse(xml).unwrap().descendants()
                .filter_map(|n| n.attribute("id").map(str::to_string)).collect()
        };
        let (src, tgt) = (ids(&members[0]), ids(&members[1]));
        let align = roxmltree::Document::parse(&members[2]).unwrap();
        for link in align.descendants().filter(|n| n.has_tag_name("link")) {
            let (s, t) = link.attribute("xtargets").unwrap().split_once(';').unwrap();
            prop_assert!(s.split_whitespace().all(|i| src.contains(i)));
            prop_assert!(t.split_whitespace().all(|i| tgt.contains(i)));
        }
    }
}
