use lata_core::testkit::{random_project, random_valid_edit, ProjectShape};
use lata_core::{apply_edit, canonical_json, validate_project};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn undo_all_then_redo_all(seed in any::<u64>(), len in 0usize..=50) {
        let mut rng = StdRng::seed_from_u64(seed);
        let shape = ProjectShape { max_paragraphs: 6, max_sentences: 4, max_links: 8 };
        let mut p = random_project(&mut rng, &shape);
        let initial = canonical_json(&p);
        let mut inverses = Vec::new();
        for _ in 0..len {
            let e = random_valid_edit(&mut rng, &p);
            inverses.push(apply_edit(&mut p, &e).unwrap());
            prop_assert_eq!(validate_project(&p), vec![]);
        }
        let fin = canonical_json(&p);
        let mut redos = Vec::new();
        for inv in inverses.iter().rev() {
            redos.push(apply_edit(&mut p, inv).unwrap());
        }
        prop_assert_eq!(canonical_json(&p), initial);
        for r in redos.iter().rev() {
            apply_edit(&mut p, r).unwrap();
        }
        prop_assert_eq!(canonical_json(&p), fin);
    }
}
