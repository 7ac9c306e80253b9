//! Public-API smoke checks: instances survive disk round trips and
//! simulations reproduce bit-for-bit from a reloaded file.

use picklab_core::ciopt::SolverBudget;
use picklab_core::instance::{illustrative_fixture, read_instance, write_instance, PolicyKind};
use picklab_core::reopt::simulate;

#[test]
fn the_fixture_round_trips_through_disk_and_resimulates_identically() {
    let dir = tempfile::tempdir().expect("temp dir");
    let path = dir.path().join("fixture.json");
    let original = illustrative_fixture();
    write_instance(&original, &path).expect("instance written");
    let loaded = read_instance(&path).expect("instance read");
    assert_eq!(original, loaded);

    let layout = loaded.build_layout().expect("layout");
    let budget = SolverBudget::desk();
    for system in PolicyKind::ALL {
        let first = simulate(&original, &layout, system, &budget).expect("simulates");
        let second = simulate(&loaded, &layout, system, &budget).expect("simulates");
        assert_eq!(first, second, "{system} trace must reproduce after a reload");
    }
}
