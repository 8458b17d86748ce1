use obsstudy::cohort::{
    default_headings, detect_naive, sorted_merge_join, DrugLexicon, KeyComponent, PatientKey,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Groups = Vec<(PatientKey, Option<Vec<u32>>)>;

fn nested_loop(ids: &[PatientKey], values: &[(u64, u32)], by: KeyComponent) -> Groups {
    ids.iter()
        .map(|id| {
            let m: Vec<u32> = values.iter().filter(|(k, _)| *k == id.component(by)).map(|(_, p)| *p).collect();
            (*id, if m.is_empty() { None } else { Some(m) })
        })
        .collect()
}

fn sorted_ids(raw: Vec<u64>) -> Vec<PatientKey> {
    let mut v: Vec<u64> = raw.into_iter().map(|x| x + 1).collect();
    v.sort();
    v.iter().enumerate().map(|(i, &k)| PatientKey::new(k, k, 1 + i as u64).unwrap()).collect()
}

fn sorted_values(raw: Vec<u64>) -> Vec<(u64, u32)> {
    let mut v: Vec<u64> = raw.into_iter().map(|x| x + 1).collect();
    v.sort();
    v.into_iter().enumerate().map(|(i, k)| (k, i as u32)).collect()
}

#[test]
fn large_random_join_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let ids = sorted_ids((0..1000).map(|_| rng.random_range(0..3000)).collect());
    let values = sorted_values((0..5000).map(|_| rng.random_range(0..3000)).collect());
    let r = sorted_merge_join(&ids, &values, KeyComponent::Subject).unwrap();
    assert_eq!(r.groups, nested_loop(&ids, &values, KeyComponent::Subject));
    assert!(r.cursor_advances <= ids.len() + values.len());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn join_equals_nested_loop(
        ids in prop::collection::vec(0u64..60, 0..80),
        values in prop::collection::vec(0u64..60, 0..200),
    ) {
        let ids = sorted_ids(ids);
        let values = sorted_values(values);
        let r = sorted_merge_join(&ids, &values, KeyComponent::Hadm).unwrap();
        prop_assert_eq!(&r.groups, &nested_loop(&ids, &values, KeyComponent::Hadm));
        prop_assert!(r.cursor_advances <= ids.len() + values.len());
    }

    #[test]
    fn naive_detection_ignores_case(text in "[a-zA-Z :\n.,]{0,80}", drug in prop::sample::select(vec!["lasix", "Furosemide", "HCTZ", "aspirin"])) {
        let lx = DrugLexicon::default();
        let h = default_headings();
        let s = format!("{text} ON ADMISSION: {drug}\n{text}");
        prop_assert_eq!(detect_naive(&s, &lx, &h), detect_naive(&s.to_uppercase(), &lx, &h));
        prop_assert_eq!(detect_naive(&text, &lx, &h), detect_naive(&text.to_uppercase(), &lx, &h));
    }
}
