use super::{CohortError, JoinSide, KeyComponent, PatientKey};

/// Output of [`sorted_merge_join`]: one entry per input id, `None` when no
/// value row matched.
#[derive(Debug, Clone, PartialEq)]
pub struct JoinResult<P> {
    pub groups: Vec<(PatientKey, Option<Vec<P>>)>,
    /// Total advances of both cursors; never exceeds `ids.len() + values.len()`.
    pub cursor_advances: usize,
}

/// Single-pass merge of ids and value rows, both ascending in `by`.
///
/// Value rows sharing a key are grouped in input order. Ids sharing a key
/// component receive copies of the same group.
pub fn sorted_merge_join<P: Clone>(
    ids: &[PatientKey],
    values: &[(u64, P)],
    by: KeyComponent,
) -> Result<JoinResult<P>, CohortError> {
    let mut groups: Vec<(PatientKey, Option<Vec<P>>)> = Vec::with_capacity(ids.len());
    let mut advances = 0;
    let mut j = 0;
    let mut prev_key: Option<u64> = None;

    for (i, id) in ids.iter().enumerate() {
        let k = id.component(by);
        if let Some(pk) = prev_key {
            if k < pk {
                return Err(CohortError::UnsortedInput { side: JoinSide::Ids, index: i });
            }
            if k == pk {
                let shared = groups.last().unwrap().1.clone();
                groups.push((*id, shared));
                advances += 1;
                continue;
            }
        }
        while j < values.len() && values[j].0 < k {
            if j > 0 && values[j].0 < values[j - 1].0 {
                return Err(CohortError::UnsortedInput { side: JoinSide::Values, index: j });
            }
            j += 1;
            advances += 1;
        }
        let mut matched = Vec::new();
        while j < values.len() && values[j].0 == k {
            if j > 0 && values[j].0 < values[j - 1].0 {
                return Err(CohortError::UnsortedInput { side: JoinSide::Values, index: j });
            }
            matched.push(values[j].1.clone());
            j += 1;
            advances += 1;
        }
        groups.push((*id, (!matched.is_empty()).then_some(matched)));
        advances += 1;
        prev_key = Some(k);
    }
    Ok(JoinResult { groups, cursor_advances: advances })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(i: u64) -> PatientKey {
        PatientKey::new(i, i, i).unwrap()
    }

    #[test]
    fn single_match() {
        let ids = [key(1), key(2), key(3)];
        let r = sorted_merge_join(&ids, &[(2, "a")], KeyComponent::Icustay).unwrap();
        assert_eq!(r.groups, vec![(key(1), None), (key(2), Some(vec!["a"])), (key(3), None)]);
    }

    #[test]
    fn empty_ids() {
        let r = sorted_merge_join::<&str>(&[], &[(5, "x")], KeyComponent::Icustay).unwrap();
        assert!(r.groups.is_empty());
    }

    #[test]
    fn unsorted_values_named() {
        let ids = [key(1), key(9)];
        let err = sorted_merge_join(&ids, &[(1, 0), (5, 0), (3, 0)], KeyComponent::Icustay).unwrap_err();
        assert_eq!(err, CohortError::UnsortedInput { side: JoinSide::Values, index: 2 });
        let err = sorted_merge_join(&[key(2), key(1)], &[(1, 0)], KeyComponent::Icustay).unwrap_err();
        assert_eq!(err, CohortError::UnsortedInput { side: JoinSide::Ids, index: 1 });
    }

    #[test]
    fn shared_component_reuses_group() {
        let ids = [
            PatientKey::new(7, 1, 10).unwrap(),
            PatientKey::new(7, 2, 11).unwrap(),
        ];
        let r = sorted_merge_join(&ids, &[(7, 'a'), (7, 'b')], KeyComponent::Subject).unwrap();
        assert_eq!(r.groups[0].1, Some(vec!['a', 'b']));
        assert_eq!(r.groups[1].1, Some(vec!['a', 'b']));
        assert!(r.cursor_advances <= 4);
    }
}
