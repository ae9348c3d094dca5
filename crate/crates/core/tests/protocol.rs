mod suite;

use suite::protocol as s;

const REFHOST: &str = env!("CARGO_BIN_EXE_mdflow-refhost");

#[test]
fn wire_round_trip_is_bit_exact() {
    s::wire_round_trip_is_bit_exact();
}

#[test]
fn loopback_and_reference_host_conform_identically() {
    s::loopback_and_reference_host_conform_identically(REFHOST);
}

#[test]
fn missing_binary_and_silent_host() {
    s::missing_binary_and_silent_host();
}

#[test]
fn external_importer_reads_xyz() {
    s::external_importer_reads_xyz(REFHOST);
}

#[test]
fn script_add_matches_builtin_add() {
    s::script_add_matches_builtin_add(Some(REFHOST));
}
