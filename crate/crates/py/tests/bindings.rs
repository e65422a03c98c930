use metastab_py::{check_moduli, limsup_batch};

#[test]
fn limsup_batch_counts() {
    assert_eq!(limsup_batch(3, 10, 10).unwrap(), (20, 0));
}

#[test]
fn moduli_have_no_violations() {
    let rows = check_moduli(2, 100, 1).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|(_, checked, bad)| *checked > 0 && *bad == 0), "{rows:?}");
}
