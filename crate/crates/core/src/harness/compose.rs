use super::dataset::Item;
use crate::error::{Error, Result};
use crate::simulator::ActivityId;

/// `⌈s% · count⌉`, robust to floating-point noise in `s`.
pub fn synthetic_count(s: f64, count: usize) -> usize {
    let exact = s * count as f64 / 100.0;
    let rounded = exact.round();
    if (exact - rounded).abs() < 1e-9 {
        rounded as usize
    } else {
        exact.ceil() as usize
    }
}

fn check_s(s: f64) -> Result<()> {
    if !(0.0..=100.0).contains(&s) {
        return Err(Error::invalid(format!("s = {s} outside [0, 100]")));
    }
    Ok(())
}

fn per_activity<'a>(items: &'a [Item], activity: ActivityId) -> Vec<&'a Item> {
    items.iter().filter(|i| i.activity == activity).collect()
}

fn pool<'a>(synth: &'a [Item], activity: ActivityId, needed: usize) -> Result<Vec<&'a Item>> {
    let pool = per_activity(synth, activity);
    if pool.len() < needed {
        return Err(Error::InsufficientSynthetic { activity: activity.number(), needed, have: pool.len() });
    }
    Ok(pool)
}

/// Per activity, the last `⌈s% · count⌉` measured items are swapped for the
/// synthetic items in the same positions of `synth` (taken per activity in
/// order). Sizes are unchanged.
pub fn compose_replacement(meas_train: &[Item], synth: &[Item], s: f64) -> Result<Vec<Item>> {
    check_s(s)?;
    let mut out = Vec::with_capacity(meas_train.len());
    for activity in ActivityId::ALL {
        let meas = per_activity(meas_train, activity);
        let k = synthetic_count(s, meas.len());
        let pool = pool(synth, activity, meas.len().max(k))?;
        let keep = meas.len() - k;
        out.extend(meas[..keep].iter().map(|&i| i.clone()));
        out.extend(pool[keep..meas.len()].iter().map(|&i| i.clone()));
    }
    Ok(out)
}

/// Per activity, all measured items plus the first `⌈s% · count⌉`
/// synthetic items.
pub fn compose_augmentation(meas_train: &[Item], synth: &[Item], s: f64) -> Result<Vec<Item>> {
    check_s(s)?;
    let mut out = Vec::new();
    for activity in ActivityId::ALL {
        let meas = per_activity(meas_train, activity);
        let k = synthetic_count(s, meas.len());
        let pool = pool(synth, activity, k)?;
        out.extend(meas.iter().map(|&i| i.clone()));
        out.extend(pool[..k].iter().map(|&i| i.clone()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::Domain;
    use crate::spectra::ImageGrid;

    fn items(domain: Domain, per: usize) -> Vec<Item> {
        ActivityId::ALL
            .iter()
            .flat_map(|&a| (0..per).map(move |k| (a, k)))
            .enumerate()
            .map(|(index, (activity, _))| Item {
                index,
                activity,
                domain,
                seed: index as u64,
                image: ImageGrid::filled(4, 4, 0.5).unwrap(),
            })
            .collect()
    }

    fn count(set: &[Item], a: ActivityId, d: Domain) -> usize {
        set.iter().filter(|i| i.activity == a && i.domain == d).count()
    }

    #[test]
    fn ceil_rounding() {
        assert_eq!(synthetic_count(60.0, 30), 18);
        assert_eq!(synthetic_count(20.0, 30), 6);
        assert_eq!(synthetic_count(10.0, 3), 1);
        assert_eq!(synthetic_count(0.0, 3), 0);
        assert_eq!(synthetic_count(100.0, 3), 3);
        assert_eq!(synthetic_count(70.0, 10), 7);
    }

    #[test]
    fn replacement_counts() {
        let meas = items(Domain::Measured, 30);
        let synth = items(Domain::Styled, 30);
        let zero = compose_replacement(&meas, &synth, 0.0).unwrap();
        assert_eq!(zero, meas);
        let r = compose_replacement(&meas, &synth, 60.0).unwrap();
        assert_eq!(r.len(), meas.len());
        for a in ActivityId::ALL {
            assert_eq!(count(&r, a, Domain::Measured), 12);
            assert_eq!(count(&r, a, Domain::Styled), 18);
        }
        let full = compose_replacement(&meas, &synth, 100.0).unwrap();
        assert!(full.iter().all(|i| i.domain == Domain::Styled));
        // replaced items are the index-aligned twins of the dropped ones
        let ids: Vec<usize> = r.iter().map(|i| i.index).collect();
        let mut sorted = ids.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), meas.len());
    }

    #[test]
    fn augmentation_counts() {
        let meas = items(Domain::Measured, 30);
        let synth = items(Domain::Styled, 30);
        assert_eq!(compose_augmentation(&meas, &synth, 0.0).unwrap(), meas);
        let r = compose_augmentation(&meas, &synth, 60.0).unwrap();
        for a in ActivityId::ALL {
            assert_eq!(count(&r, a, Domain::Measured) + count(&r, a, Domain::Styled), 48);
        }
        assert_eq!(compose_augmentation(&meas, &synth, 100.0).unwrap().len(), 2 * meas.len());
    }

    #[test]
    fn errors() {
        let meas = items(Domain::Measured, 4);
        let synth = items(Domain::Styled, 1);
        assert!(matches!(
            compose_augmentation(&meas, &synth, 60.0),
            Err(Error::InsufficientSynthetic { needed: 3, have: 1, .. })
        ));
        assert!(compose_replacement(&meas, &synth, 10.0).is_err());
        assert!(compose_replacement(&meas, &meas, 120.0).is_err());
        assert!(compose_augmentation(&meas, &meas, -1.0).is_err());
    }
}
