//! Loop-oracle comparison of `lscm_forward`.

mod support;

use support::oracle::{oracle_errors, TOL};

#[test]
fn lscm_forward_matches_loop_oracle() {
    for k in 0..20u64 {
        for (name, d) in oracle_errors(1000 + k) {
            assert!(d <= TOL, "instance {k}: {name} differs by {d:e}");
        }
    }
}
