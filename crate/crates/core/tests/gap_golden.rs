//! Minimum gaps on a 41-point grid, α = 1 on every mode. Reference values
//! were produced by a separate dense eigensolver and frozen here.

use num_complex::Complex64;

use dioph_adiabatic::adiabatic::gap_scan;
use dioph_adiabatic::fock::{build_hi, build_hp, CoherentParams, TruncatedFockSpace};
use dioph_adiabatic::polynomial::parse_polynomial;

const GOLDEN: &[(&str, u32, f64, f64)] = &[
    ("x0 - 3", 10, 0.8920538846499699, 0.875),
    ("(x0-2)^2 + (x1-1)^2", 6, 0.8520561907763688, 0.85),
    ("x0 + 1", 6, 1.0109463725303889, 0.0),
];

#[test]
fn minimum_gaps_match_frozen_values() {
    for &(text, n_max, gap, at) in GOLDEN {
        let p = parse_polynomial(text).unwrap();
        let space = TruncatedFockSpace::uniform(p.num_vars(), n_max).unwrap();
        let hi = build_hi(&CoherentParams::uniform(p.num_vars(), Complex64::new(1.0, 0.0)), &space).unwrap();
        let hp = build_hp(&p, &space).unwrap();
        let scan = gap_scan(&hi, &hp, 41).unwrap();
        assert!((scan.min_gap - gap).abs() <= 1e-9, "{text}: {} vs {gap}", scan.min_gap);
        assert!((scan.min_gap_s - at).abs() <= 1e-12, "{text}: at {}", scan.min_gap_s);
        assert!(scan.min_gap > 1e-3);
        assert_eq!(scan.final_ground_multiplicity, 1);
    }
}
